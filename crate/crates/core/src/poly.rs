//! Dense bivariate polynomials in the monomial basis.

use serde::{Deserialize, Serialize};

/// Bivariate polynomial `sum c_{pq} x^p y^q` over `p + q <= degree`.
///
/// Coefficients are stored graded by total degree, and within a degree by
/// increasing power of `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly2 {
    degree: usize,
    coeffs: Vec<f64>,
}

/// Number of monomials of total degree at most `degree`.
pub const fn monomial_count(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

#[inline]
pub const fn monomial_index(p: usize, q: usize) -> usize {
    let k = p + q;
    k * (k + 1) / 2 + q
}

/// Iterate `(p, q)` exponent pairs in storage order.
pub fn exponents(degree: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..=degree).flat_map(|k| (0..=k).map(move |q| (k - q, q)))
}

fn falling(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64)
}

impl Poly2 {
    pub fn zero(degree: usize) -> Self {
        Self {
            degree,
            coeffs: vec![0.0; monomial_count(degree)],
        }
    }

    pub fn from_coeffs(degree: usize, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), monomial_count(degree), "coefficient count");
        Self { degree, coeffs }
    }

    /// Build from `(p, q, c)` terms; the degree grows to fit.
    pub fn from_terms(terms: &[(usize, usize, f64)]) -> Self {
        let degree = terms.iter().map(|&(p, q, _)| p + q).max().unwrap_or(0);
        let mut poly = Self::zero(degree);
        for &(p, q, c) in terms {
            poly.coeffs[monomial_index(p, q)] += c;
        }
        poly
    }

    pub fn constant(c: f64) -> Self {
        Self::from_coeffs(0, vec![c])
    }

    /// `a0 + a1 x + a2 y`.
    pub fn linear(a0: f64, a1: f64, a2: f64) -> Self {
        Self::from_coeffs(1, vec![a0, a1, a2])
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn coeff(&self, p: usize, q: usize) -> f64 {
        if p + q > self.degree {
            0.0
        } else {
            self.coeffs[monomial_index(p, q)]
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        exponents(self.degree).zip(&self.coeffs).map(|((p, q), &c)| (p, q, c))
    }

    /// Copy with the storage widened to `degree` (no truncation).
    pub fn with_degree(&self, degree: usize) -> Self {
        let degree = degree.max(self.degree);
        let mut out = Self::zero(degree);
        out.coeffs[..self.coeffs.len()].copy_from_slice(&self.coeffs);
        out
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        // Horner in y inside Horner in x would need a different layout; the
        // power tables are cheap at the degrees used here.
        let (px, py) = powers(x, y, self.degree);
        self.terms().map(|(p, q, c)| c * px[p] * py[q]).sum()
    }

    /// All partial derivatives `d^a_x d^b_y` with `a + b <= order`, stored
    /// with [`monomial_index`]`(a, b)`.
    pub fn partials(&self, x: f64, y: f64, order: usize) -> Vec<f64> {
        let (px, py) = powers(x, y, self.degree);
        let mut out = vec![0.0; monomial_count(order)];
        for (p, q, c) in self.terms() {
            if c == 0.0 {
                continue;
            }
            for (a, b) in exponents(order) {
                if a <= p && b <= q {
                    out[monomial_index(a, b)] +=
                        c * falling(p, a) * falling(q, b) * px[p - a] * py[q - b];
                }
            }
        }
        out
    }

    pub fn derivative(&self, dx: usize, dy: usize) -> Self {
        let mut out = Self::zero(self.degree.saturating_sub(dx + dy));
        for (p, q, c) in self.terms() {
            if p >= dx && q >= dy {
                out.coeffs[monomial_index(p - dx, q - dy)] += c * falling(p, dx) * falling(q, dy);
            }
        }
        out
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.with_degree(other.degree);
        for (i, c) in other.coeffs.iter().enumerate() {
            out.coeffs[i] += c;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.degree + other.degree);
        for (p, q, c) in self.terms() {
            if c == 0.0 {
                continue;
            }
            for (r, s, d) in other.terms() {
                out.coeffs[monomial_index(p + r, q + s)] += c * d;
            }
        }
        out
    }

    /// The polynomial `x -> self(M x + t)`.
    pub fn compose_affine(&self, m: [[f64; 2]; 2], t: [f64; 2]) -> Self {
        let xs = Poly2::linear(t[0], m[0][0], m[0][1]);
        let ys = Poly2::linear(t[1], m[1][0], m[1][1]);
        let mut xpow = vec![Poly2::constant(1.0)];
        let mut ypow = vec![Poly2::constant(1.0)];
        for k in 1..=self.degree {
            xpow.push(xpow[k - 1].mul(&xs));
            ypow.push(ypow[k - 1].mul(&ys));
        }
        let mut out = Self::zero(self.degree);
        for (p, q, c) in self.terms() {
            if c == 0.0 {
                continue;
            }
            let term = xpow[p].mul(&ypow[q]);
            for (i, v) in term.coeffs.iter().enumerate() {
                out.coeffs[i] += c * v;
            }
        }
        out
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

fn powers(x: f64, y: f64, degree: usize) -> (Vec<f64>, Vec<f64>) {
    let mut px = Vec::with_capacity(degree + 1);
    let mut py = Vec::with_capacity(degree + 1);
    let (mut a, mut b) = (1.0, 1.0);
    for _ in 0..=degree {
        px.push(a);
        py.push(b);
        a *= x;
        b *= y;
    }
    (px, py)
}
