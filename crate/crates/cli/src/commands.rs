//! The seven subcommands. Each returns an [`Outcome`]; the caller turns it
//! into `status.json` and the process exit code.

use std::path::{Path, PathBuf};

use calabi_core::curvature::{self, sup_rm};
use calabi_core::flow::{history_csv, normalize_trajectory, plot_script, Flow, StopReason};
use calabi_core::functionals::{average_scalar_curvature, l_functional_poly, solve_theta, theta_residuals};
use calabi_core::numeric::fit_slope;
use calabi_core::stability::{
    diameter_estimate, lambda_estimate, m_condition_estimate, CreaseFunction, DiameterEstimate,
    LambdaEstimate, MConditionEstimate,
};
use calabi_core::{Error, Functionals, Poly2, StabilityReport, SymplecticPotential};
use serde::Serialize;
use serde_json::json;

use crate::config::{ConfigError, RunConfig};
use crate::output::{OutDir, Status, STATUS_FILE};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Flow,
    Diagnose,
    Theta,
    Stability,
    Mcond,
    Diameter,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Flow => "flow",
            Command::Diagnose => "diagnose",
            Command::Theta => "theta",
            Command::Stability => "stability",
            Command::Mcond => "mcond",
            Command::Diameter => "diameter",
            Command::Validate => "validate",
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_TIME_LIMIT: i32 = 2;
pub const EXIT_DEGENERATION: i32 = 3;
pub const EXIT_CURVATURE: i32 = 4;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit_code: i32,
    pub condition: String,
    pub message: String,
    pub artifacts: Vec<String>,
}

impl Outcome {
    fn new(exit_code: i32, condition: &str, message: impl Into<String>) -> Self {
        Self {
            exit_code,
            condition: condition.into(),
            message: message.into(),
            artifacts: Vec::new(),
        }
    }

    fn ok(artifacts: Vec<String>) -> Self {
        Self {
            artifacts,
            ..Self::new(EXIT_OK, "ok", "")
        }
    }
}

enum Failure {
    Config(String),
    Io(std::io::Error),
    Numeric(Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Numeric(e)
    }
}

impl From<Failure> for Outcome {
    fn from(f: Failure) -> Self {
        match f {
            Failure::Config(m) => Outcome::new(EXIT_CONFIG, "bad_config", m),
            Failure::Io(e) => Outcome::new(EXIT_CONFIG, "io_error", e.to_string()),
            Failure::Numeric(e) => Outcome::new(EXIT_DEGENERATION, "degeneration", e.to_string()),
        }
    }
}

/// Load the config, run one command and write `status.json`.
pub fn run_command(
    command: Command,
    config_path: &Path,
    out: Option<PathBuf>,
    seed: Option<u64>,
) -> Outcome {
    let loaded = RunConfig::load(config_path);
    let out_dir = out.unwrap_or_else(|| match &loaded {
        Ok((cfg, base)) => cfg
            .output
            .as_ref()
            .map(|o| base.join(o))
            .unwrap_or_else(|| base.join("calabi-out")),
        Err(_) => PathBuf::from("calabi-out"),
    });
    let outcome = match (OutDir::create(out_dir.clone()), loaded) {
        (Err(e), _) => Failure::Io(e).into(),
        (Ok(_), Err(e)) => Failure::from(e).into(),
        (Ok(dir), Ok((cfg, base))) => {
            let seed = seed.unwrap_or(cfg.seed);
            let ctx = Context {
                cfg: &cfg,
                base: &base,
                dir: &dir,
                seed,
            };
            let result = match command {
                Command::Flow => ctx.flow(),
                Command::Diagnose => ctx.diagnose(),
                Command::Theta => ctx.theta(),
                Command::Stability => ctx.stability(),
                Command::Mcond => ctx.mcond(),
                Command::Diameter => ctx.diameter(),
                Command::Validate => ctx.validate(),
            };
            result.unwrap_or_else(Outcome::from)
        }
    };
    let status = Status {
        command: command.name().into(),
        exit_code: outcome.exit_code,
        condition: outcome.condition.clone(),
        message: outcome.message.clone(),
        artifacts: outcome.artifacts.clone(),
    };
    if let Ok(dir) = OutDir::create(out_dir) {
        // nothing else can be reported if this fails too
        let _ = dir.write_json(STATUS_FILE, &status);
    }
    outcome
}

struct Context<'a> {
    cfg: &'a RunConfig,
    base: &'a Path,
    dir: &'a OutDir,
    seed: u64,
}

#[derive(Serialize)]
struct ThetaReport {
    theta: [f64; 3],
    residuals: [f64; 3],
    average_scalar_curvature: f64,
}

impl Context<'_> {
    fn potential(&self) -> Result<SymplecticPotential, Failure> {
        Ok(self.cfg.load_potential(self.base)?)
    }

    fn validate(&self) -> Result<Outcome, Failure> {
        let report = match self.cfg.load_polygon(self.base) {
            Ok(p) => json!({
                "valid": true,
                "vertices": p.vertices(),
                "normals": p.facets().iter().map(|f| f.normal).collect::<Vec<_>>(),
                "offsets": p.facets().iter().map(|f| f.offset).collect::<Vec<_>>(),
                "area": p.area(),
                "boundary_measure": p.boundary_measure(),
            }),
            Err(e) => {
                self.dir.write_json("validation.json", &json!({"valid": false, "message": e.0}))?;
                let mut o = Outcome::new(EXIT_CONFIG, "invalid_polygon", e.0);
                o.artifacts.push("validation.json".into());
                return Ok(o);
            }
        };
        self.dir.write_json("validation.json", &report)?;
        Ok(Outcome::ok(vec!["validation.json".into()]))
    }

    fn theta(&self) -> Result<Outcome, Failure> {
        let polygon = self.cfg.load_polygon(self.base)?;
        let theta = solve_theta(&polygon)?;
        self.dir.write_json(
            "theta.json",
            &ThetaReport {
                theta: theta.coeffs(),
                residuals: theta_residuals(&polygon, &theta),
                average_scalar_curvature: average_scalar_curvature(&polygon),
            },
        )?;
        Ok(Outcome::ok(vec!["theta.json".into()]))
    }

    fn lambda(&self, u: &SymplecticPotential) -> Result<LambdaEstimate, Failure> {
        let polygon = u.polygon();
        let theta = solve_theta(polygon)?;
        Ok(lambda_estimate(polygon, &theta, polygon.centroid(), &self.cfg.crease_search()))
    }

    fn mcond_estimate(&self, u: &SymplecticPotential) -> Result<MConditionEstimate, Failure> {
        Ok(m_condition_estimate(u, &self.cfg.mcondition())?)
    }

    fn diameter_estimate(&self, u: &SymplecticPotential) -> Result<DiameterEstimate, Failure> {
        Ok(diameter_estimate(u, &self.cfg.diameter())?)
    }

    fn stability(&self) -> Result<Outcome, Failure> {
        let u = self.potential()?;
        let lambda = self.lambda(&u)?;
        let m = self.mcond_estimate(&u)?;
        let d = self.diameter_estimate(&u)?;
        let report = StabilityReport {
            lambda_hat: lambda.lambda_hat,
            argmin_crease: lambda.argmin,
            m_hat: m.m_hat,
            worst_segment: m.worst,
            diam_hat: d.diam_hat,
        };
        self.dir.write("creases.csv", &lambda.samples_csv())?;
        self.dir.write_json("stability_report.json", &report)?;
        Ok(Outcome::ok(vec![
            "creases.csv".into(),
            "stability_report.json".into(),
        ]))
    }

    fn mcond(&self) -> Result<Outcome, Failure> {
        let u = self.potential()?;
        let m = self.mcond_estimate(&u)?;
        self.dir.write_json(
            "mcond.json",
            &json!({ "m_hat": m.m_hat, "worst_segment": m.worst, "segments": m.segments, "skipped": m.skipped, "config": self.cfg.mcondition() }),
        )?;
        Ok(Outcome::ok(vec!["mcond.json".into()]))
    }

    fn diameter(&self) -> Result<Outcome, Failure> {
        let u = self.potential()?;
        let d = self.diameter_estimate(&u)?;
        self.dir.write_json("diameter.json", &d)?;
        Ok(Outcome::ok(vec!["diameter.json".into()]))
    }

    fn diagnose(&self) -> Result<Outcome, Failure> {
        let u = self.potential()?;
        let polygon = u.polygon_arc().clone();
        let functionals = Functionals::new(polygon.clone(), self.cfg.quadrature())?;
        let theta = functionals.theta();
        let c = polygon.centroid();
        let affine_checks: Vec<f64> = [
            Poly2::constant(1.0),
            Poly2::linear(0.0, 1.0, 0.0),
            Poly2::linear(0.0, 0.0, 1.0),
        ]
        .iter()
        .map(|p| l_functional_poly(&polygon, &theta, p))
        .collect();
        let crease = CreaseFunction::new([1.0, 0.0], c[0]);
        let lambda = self.lambda(&u)?;
        let m = self.mcond_estimate(&u)?;
        let d = self.diameter_estimate(&u)?;
        let rm = sup_rm(&u, &self.cfg.rm_probe(self.seed))?;
        let at_centroid = curvature::sample(&u, c)?;
        let energy = functionals.energy_report(&u, c)?;
        let report = json!({
            "theta": theta.coeffs(),
            "theta_residuals": theta_residuals(&polygon, &theta),
            "l_affine_checks": affine_checks,
            "l_vertical_crease": { "crease": crease, "value": calabi_core::functionals::l_functional_crease(&polygon, &theta, crease.a, crease.b) },
            "scalar_curvature_at_centroid": at_centroid.scalar_r,
            "rm_at_centroid": at_centroid.rm_norm,
            "sup_rm": rm,
            "energy": energy,
            "lambda_hat": lambda.lambda_hat,
            "argmin_crease": lambda.argmin,
            "m_hat": m.m_hat,
            "worst_segment": m.worst,
            "diam_hat": d.diam_hat,
            "rays": d.rays,
        });
        self.dir.write_json("diagnose.json", &report)?;
        Ok(Outcome::ok(vec!["diagnose.json".into()]))
    }

    fn flow(&self) -> Result<Outcome, Failure> {
        let u = self.potential()?;
        let flow = Flow::new(&u, self.cfg.quadrature(), self.cfg.flow_config(self.seed))?;
        let state = flow.initial_state(u)?;
        let run = flow.run(state, true);
        let history = &run.state.history;
        let mut artifacts = vec![
            "history.csv".to_string(),
            "final_potential.json".to_string(),
            "energy_report.json".to_string(),
            "plot_history.py".to_string(),
        ];
        self.dir.write("history.csv", &history_csv(history))?;
        self.dir
            .write("final_potential.json", &(run.state.potential.to_file().to_json() + "\n"))?;
        self.dir.write("plot_history.py", &plot_script("history.csv"))?;
        let final_u = &run.state.potential;
        let energy = flow.functionals().energy_report(final_u, flow.base_point()).ok();
        let shifts = normalize_trajectory(&run.trajectory, flow.base_point())
            .ok()
            .map(|n| n.sup_shift);
        let (ts, logs): (Vec<f64>, Vec<f64>) = history
            .iter()
            .skip(history.len() / 2)
            .filter(|r| r.calabi_mod > 0.0)
            .map(|r| (r.t, r.calabi_mod.ln()))
            .unzip();
        let decay = (ts.len() >= 3).then(|| -fit_slope(&ts, &logs));
        self.dir.write_json(
            "energy_report.json",
            &json!({
                "stop": run.reason,
                "t": run.state.t,
                "accepted_steps": history.len() - 1,
                "final": history.last(),
                "energy": energy,
                "sup_affine_shift": shifts,
                "calabi_decay_rate": decay,
                "sup_curvature_deviation": flow.sup_curvature_deviation(final_u).ok(),
            }),
        )?;
        let (code, message) = match &run.reason {
            StopReason::Converged => (EXIT_OK, String::new()),
            StopReason::TimeLimit | StopReason::StepLimit => {
                (EXIT_TIME_LIMIT, format!("stopped at t = {}", run.state.t))
            }
            StopReason::Stalled { dt } => (EXIT_DEGENERATION, format!("time step underflow at dt = {dt:e}")),
            StopReason::Degenerated { message } => (EXIT_DEGENERATION, message.clone()),
            StopReason::CurvatureBreach { sup_rm, bound } => {
                (EXIT_CURVATURE, format!("sup|Rm| = {sup_rm} exceeds {bound}"))
            }
        };
        artifacts.sort();
        Ok(Outcome {
            exit_code: code,
            condition: run.reason.label().into(),
            message,
            artifacts,
        })
    }
}
