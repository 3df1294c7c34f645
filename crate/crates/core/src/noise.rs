//! Subordinators and the time-changed Brownian noises `V = B_R + mu R`.

use num_complex::Complex64;

use crate::error::{domain, Error, Result};

pub type ComplexValue = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubordinatorKind {
    Gamma,
    InverseGaussian,
}

/// A Gamma or inverse-Gaussian subordinator with parameters `a, b > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubordinatorSpec {
    pub kind: SubordinatorKind,
    pub a: f64,
    pub b: f64,
}

impl SubordinatorSpec {
    pub fn new(kind: SubordinatorKind, a: f64, b: f64) -> Result<Self> {
        let s = Self { kind, a, b };
        s.validate()?;
        Ok(s)
    }

    pub fn gamma(a: f64, b: f64) -> Result<Self> {
        Self::new(SubordinatorKind::Gamma, a, b)
    }

    pub fn inverse_gaussian(a: f64, b: f64) -> Result<Self> {
        Self::new(SubordinatorKind::InverseGaussian, a, b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite() && self.b > 0.0 && self.b.is_finite()) {
            return domain(format!(
                "subordinator parameters must be positive (a = {}, b = {})",
                self.a, self.b
            ));
        }
        Ok(())
    }

    /// `E[R_1] = a / b` for both families.
    pub fn mean_rate(&self) -> f64 {
        self.a / self.b
    }
}

/// Noise of one regime: the subordinator clock and the drift `mu1` of
/// `V_t = B_{R_t} + mu1 R_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub subordinator: SubordinatorSpec,
    pub mu1: f64,
}

impl NoiseSpec {
    pub fn new(subordinator: SubordinatorSpec, mu1: f64) -> Result<Self> {
        subordinator.validate()?;
        if !mu1.is_finite() {
            return domain("mu1 must be finite");
        }
        Ok(Self { subordinator, mu1 })
    }
}

/// Principal-branch argument `w`: rejects points on `(-inf, 0]`.
fn off_cut(what: &'static str, w: Complex64) -> Result<Complex64> {
    if !(w.re.is_finite() && w.im.is_finite()) || (w.im == 0.0 && w.re <= 0.0) {
        return Err(Error::BranchCut {
            what,
            re: w.re,
            im: w.im,
        });
    }
    Ok(w)
}

/// Log-cumulant exponent `l_R(z) = log E[e^{z R_1}]`.
///
/// Gamma: `-a Log(1 - z/b)`. Inverse Gaussian: `-a (sqrt(b^2 - 2z) - b)`.
pub fn log_cumulant_r(spec: &SubordinatorSpec, z: ComplexValue) -> Result<ComplexValue> {
    match spec.kind {
        SubordinatorKind::Gamma => {
            let w = off_cut("1 - z/b", Complex64::new(1.0, 0.0) - z / spec.b)?;
            Ok(-spec.a * w.ln())
        }
        SubordinatorKind::InverseGaussian => {
            let w = off_cut("b^2 - 2z", spec.b * spec.b - 2.0 * z)?;
            Ok(-spec.a * (w.sqrt() - spec.b))
        }
    }
}

/// `d l_R / dz`: `a / (b - z)` or `a / sqrt(b^2 - 2z)`.
pub fn log_cumulant_r_deriv(spec: &SubordinatorSpec, z: ComplexValue) -> Result<ComplexValue> {
    match spec.kind {
        SubordinatorKind::Gamma => {
            let w = off_cut("1 - z/b", Complex64::new(1.0, 0.0) - z / spec.b)?;
            Ok(spec.a / (spec.b * w))
        }
        SubordinatorKind::InverseGaussian => {
            let w = off_cut("b^2 - 2z", spec.b * spec.b - 2.0 * z)?;
            Ok(spec.a / w.sqrt())
        }
    }
}

/// `l_V(z) = l_R(z mu1 + z^2 / 2)`.
pub fn log_cumulant_v(spec: &NoiseSpec, z: ComplexValue) -> Result<ComplexValue> {
    log_cumulant_r(&spec.subordinator, z * spec.mu1 + 0.5 * z * z)
}
