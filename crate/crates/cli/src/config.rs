//! TOML run configuration.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use calabi_core::curvature::RmProbeConfig;
use calabi_core::flow::{FlowConfig, Integrator};
use calabi_core::poly::monomial_count;
use calabi_core::potential::DEFAULT_DEGREE;
use calabi_core::stability::{CreaseSearchConfig, DiameterConfig, MConditionConfig};
use calabi_core::{DelzantPolygon, PolygonFile, PotentialFile, QuadratureConfig, SymplecticPotential};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Polygon JSON file, relative to the config file.
    pub polygon: PathBuf,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub potential: PotentialSpec,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub stability: StabilitySection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialSpec {
    pub degree: usize,
    /// `"guillemin"` or `"perturbed:<amplitude>"`.
    pub preset: Option<String>,
    /// Frame coefficients of `f`, graded by total degree.
    pub coefficients: Option<Vec<f64>>,
    /// A serialized potential; overrides the polygon and degree.
    pub file: Option<PathBuf>,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        Self {
            degree: DEFAULT_DEGREE,
            preset: None,
            coefficients: None,
            file: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSection {
    pub depth: usize,
    pub order: usize,
    pub boundary_depth: usize,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        let q = QuadratureConfig::default();
        Self {
            depth: q.depth,
            order: q.order,
            boundary_depth: q.boundary_depth,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSection {
    pub dt0: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub tol: f64,
    pub t_max: f64,
    pub max_steps: usize,
    pub curvature_bound: f64,
    pub modified: bool,
    pub integrator: Integrator,
}

impl Default for FlowSection {
    fn default() -> Self {
        let f = FlowConfig::default();
        Self {
            dt0: f.dt0,
            dt_min: f.dt_min,
            dt_max: f.dt_max,
            tol: f.tol,
            t_max: f.t_max,
            max_steps: f.max_steps,
            curvature_bound: f.curvature_bound,
            modified: f.modified,
            integrator: f.integrator,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilitySection {
    pub directions: usize,
    pub offsets: usize,
    pub refine_cells: usize,
    pub mcond_offsets: Vec<f64>,
    pub mcond_per_facet: usize,
    pub mcond_interior: usize,
    pub diameter_depth: usize,
    pub rm_interior_probes: usize,
    pub rm_per_facet: usize,
}

impl Default for StabilitySection {
    fn default() -> Self {
        let c = CreaseSearchConfig::default();
        let m = MConditionConfig::default();
        let r = RmProbeConfig::default();
        Self {
            directions: c.directions,
            offsets: c.offsets,
            refine_cells: c.refine_cells,
            mcond_offsets: m.offsets,
            mcond_per_facet: m.per_facet,
            mcond_interior: m.interior_radial,
            diameter_depth: DiameterConfig::default().depth,
            rm_interior_probes: r.interior_points,
            rm_per_facet: r.per_facet,
        }
    }
}

/// A configuration problem, reported with exit status 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError(format!("{field}: must be > 0, got {v}")))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, PathBuf), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let cfg = Self::parse(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    fn check(&self) -> Result<(), ConfigError> {
        let f = &self.flow;
        positive("flow.dt0", f.dt0)?;
        positive("flow.dt_min", f.dt_min)?;
        positive("flow.dt_max", f.dt_max)?;
        positive("flow.tol", f.tol)?;
        positive("flow.curvature_bound", f.curvature_bound)?;
        if !(f.t_max >= 0.0) {
            return Err(ConfigError(format!("flow.t_max: must be >= 0, got {}", f.t_max)));
        }
        if f.dt_min > f.dt_max || f.dt0 > f.dt_max {
            return Err(ConfigError("flow: need dt_min <= dt_max and dt0 <= dt_max".into()));
        }
        if self.potential.degree < 2 {
            return Err(ConfigError(format!(
                "potential.degree: must be >= 2, got {}",
                self.potential.degree
            )));
        }
        if let Some(p) = &self.potential.preset {
            parse_preset(p)?;
        }
        if self.potential.preset.is_some() && self.potential.coefficients.is_some() {
            return Err(ConfigError("potential: give either preset or coefficients".into()));
        }
        if let Some(c) = &self.potential.coefficients {
            let want = monomial_count(self.potential.degree);
            if c.len() != want {
                return Err(ConfigError(format!(
                    "potential.coefficients: expected {want} values for degree {}, got {}",
                    self.potential.degree,
                    c.len()
                )));
            }
        }
        let s = &self.stability;
        for (name, v) in [
            ("stability.directions", s.directions),
            ("stability.offsets", s.offsets),
            ("stability.mcond_per_facet", s.mcond_per_facet),
            ("stability.diameter_depth", s.diameter_depth),
            ("quadrature.depth", self.quadrature.depth),
        ] {
            if v == 0 {
                return Err(ConfigError(format!("{name}: must be >= 1")));
            }
        }
        for &o in &s.mcond_offsets {
            positive("stability.mcond_offsets", o)?;
        }
        Ok(())
    }

    pub fn quadrature(&self) -> QuadratureConfig {
        QuadratureConfig {
            depth: self.quadrature.depth,
            order: self.quadrature.order,
            boundary_depth: self.quadrature.boundary_depth,
            ..QuadratureConfig::default()
        }
    }

    pub fn rm_probe(&self, seed: u64) -> RmProbeConfig {
        RmProbeConfig {
            interior_points: self.stability.rm_interior_probes,
            per_facet: self.stability.rm_per_facet,
            seed,
            ..RmProbeConfig::default()
        }
    }

    pub fn flow_config(&self, seed: u64) -> FlowConfig {
        let f = &self.flow;
        FlowConfig {
            dt0: f.dt0,
            dt_min: f.dt_min,
            dt_max: f.dt_max,
            tol: f.tol,
            t_max: f.t_max,
            max_steps: f.max_steps,
            curvature_bound: f.curvature_bound,
            modified: f.modified,
            integrator: f.integrator,
            rm_probe: self.rm_probe(seed),
            ..FlowConfig::default()
        }
    }

    pub fn crease_search(&self) -> CreaseSearchConfig {
        CreaseSearchConfig {
            directions: self.stability.directions,
            offsets: self.stability.offsets,
            refine_cells: self.stability.refine_cells,
            ..CreaseSearchConfig::default()
        }
    }

    pub fn mcondition(&self) -> MConditionConfig {
        MConditionConfig {
            offsets: self.stability.mcond_offsets.clone(),
            per_facet: self.stability.mcond_per_facet,
            interior_radial: self.stability.mcond_interior,
            interior_angular: self.stability.mcond_interior,
        }
    }

    pub fn diameter(&self) -> DiameterConfig {
        DiameterConfig {
            depth: self.stability.diameter_depth,
            ..DiameterConfig::default()
        }
    }

    pub fn load_polygon(&self, base: &Path) -> Result<DelzantPolygon, ConfigError> {
        let path = base.join(&self.polygon);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| ConfigError(format!("polygon {}: {e}", path.display())))?;
        let file = PolygonFile::from_json(&text)
            .map_err(|e| ConfigError(format!("polygon {}: {e}", path.display())))?;
        let polygon = file
            .build()
            .map_err(|e| ConfigError(format!("polygon {}: {e}", path.display())))?;
        let report = polygon.validate();
        if !report.is_valid() {
            return Err(ConfigError(format!("polygon {}: {report}", path.display())));
        }
        Ok(polygon)
    }

    pub fn load_potential(&self, base: &Path) -> Result<SymplecticPotential, ConfigError> {
        let spec = &self.potential;
        if let Some(file) = &spec.file {
            let path = base.join(file);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| ConfigError(format!("potential {}: {e}", path.display())))?;
            let pf = PotentialFile::from_json(&text)
                .map_err(|e| ConfigError(format!("potential {}: {e}", path.display())))?;
            return SymplecticPotential::from_file(&pf)
                .map_err(|e| ConfigError(format!("potential {}: {e}", path.display())));
        }
        let polygon = Arc::new(self.load_polygon(base)?);
        if let Some(c) = &spec.coefficients {
            return Ok(SymplecticPotential::from_local_coeffs(polygon, spec.degree, c.clone()));
        }
        let preset = spec.preset.as_deref().unwrap_or("guillemin");
        Ok(match parse_preset(preset)? {
            Preset::Guillemin => SymplecticPotential::guillemin(polygon, spec.degree),
            Preset::Perturbed(a) => SymplecticPotential::perturbed(polygon, spec.degree, a),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    Guillemin,
    Perturbed(f64),
}

pub fn parse_preset(s: &str) -> Result<Preset, ConfigError> {
    if s == "guillemin" {
        return Ok(Preset::Guillemin);
    }
    if let Some(amp) = s.strip_prefix("perturbed:") {
        return amp
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|a| a.is_finite())
            .map(Preset::Perturbed)
            .ok_or_else(|| ConfigError(format!("potential.preset: bad amplitude in {s:?}")));
    }
    Err(ConfigError(format!(
        "potential.preset: expected \"guillemin\" or \"perturbed:<amplitude>\", got {s:?}"
    )))
}
