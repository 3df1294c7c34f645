//! Real-argument special functions: Pochhammer symbols, Kummer's confluent
//! hypergeometric function `M(a, b, z)` and the lower incomplete gamma
//! function.

use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{domain, Error, Result};

/// Truncation policy for power series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    pub max_terms: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            max_terms: 500,
            rel_tol: 1e-12,
            abs_tol: 1e-300,
        }
    }
}

impl SeriesControl {
    pub fn new(max_terms: usize, rel_tol: f64, abs_tol: f64) -> Result<Self> {
        let ctrl = Self {
            max_terms,
            rel_tol,
            abs_tol,
        };
        ctrl.validate()?;
        Ok(ctrl)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_terms < 1 {
            return domain("SeriesControl.max_terms must be >= 1");
        }
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return domain("SeriesControl tolerances must be positive");
        }
        Ok(())
    }

    /// True when `term` is negligible next to `partial`.
    #[inline]
    pub fn is_negligible(&self, term: f64, partial: f64) -> bool {
        term.abs() <= self.rel_tol * partial.abs() + self.abs_tol
    }
}

/// Rising factorial `a (a+1) ... (a+l-1)`, with `a^(0) = 1`.
pub fn pochhammer(a: f64, l: u32) -> f64 {
    let mut acc = 1.0;
    for i in 0..l {
        acc *= a + i as f64;
    }
    acc
}

/// Value of a truncated series together with the number of terms summed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub terms: usize,
}

/// Kummer's function `M(a, b, z) = sum_l a^(l) z^l / (b^(l) l!)` by direct
/// summation.
pub fn kummer_m(a: f64, b: f64, z: f64, ctrl: &SeriesControl) -> Result<SeriesValue> {
    if b <= 0.0 && b.fract() == 0.0 {
        return domain(format!("kummer_m: b = {b} is zero or a negative integer"));
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    if z == 0.0 {
        return Ok(SeriesValue {
            value: 1.0,
            terms: 1,
        });
    }
    for l in 0..ctrl.max_terms {
        let lf = l as f64;
        term *= (a + lf) / (b + lf) * z / (lf + 1.0);
        sum += term;
        if ctrl.is_negligible(term, sum) {
            return Ok(SeriesValue {
                value: sum,
                terms: l + 2,
            });
        }
    }
    Err(Error::NonConvergence {
        terms: ctrl.max_terms,
        last_term: term.abs(),
    })
}

const GAMMA_MAX_ITER: usize = 10_000;
const GAMMA_EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// Regularized lower incomplete gamma `P(a, z) = gamma(a, z) / Gamma(a)`.
///
/// Series for `z < a + 1`, Lentz continued fraction for the complement
/// otherwise.
pub fn regularized_lower_gamma(a: f64, z: f64) -> Result<f64> {
    check_gamma_args(a, z)?;
    if z == 0.0 {
        return Ok(0.0);
    }
    if z.is_infinite() {
        return Ok(1.0);
    }
    if z < a + 1.0 {
        gamma_series(a, z)
    } else {
        Ok(1.0 - gamma_cont_frac(a, z)?)
    }
}

/// Regularized upper incomplete gamma `Q(a, z) = 1 - P(a, z)`.
pub fn regularized_upper_gamma(a: f64, z: f64) -> Result<f64> {
    check_gamma_args(a, z)?;
    if z == 0.0 {
        return Ok(1.0);
    }
    if z.is_infinite() {
        return Ok(0.0);
    }
    if z < a + 1.0 {
        Ok(1.0 - gamma_series(a, z)?)
    } else {
        gamma_cont_frac(a, z)
    }
}

/// Both regularized incomplete gammas `(P(a, z), Q(a, z))`, each computed on
/// the side where it does not suffer cancellation.
pub(crate) fn regularized_gamma_pair(a: f64, z: f64) -> Result<(f64, f64)> {
    check_gamma_args(a, z)?;
    if z == 0.0 {
        return Ok((0.0, 1.0));
    }
    if z.is_infinite() {
        return Ok((1.0, 0.0));
    }
    if z < a + 1.0 {
        let p = gamma_series(a, z)?;
        Ok((p, 1.0 - p))
    } else {
        let q = gamma_cont_frac(a, z)?;
        Ok((1.0 - q, q))
    }
}

/// Lower incomplete gamma `gamma(a, z) = int_0^z x^(a-1) e^(-x) dx`.
pub fn lower_incomplete_gamma(a: f64, z: f64) -> Result<f64> {
    Ok(regularized_lower_gamma(a, z)? * gamma(a))
}

fn check_gamma_args(a: f64, z: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return domain(format!("incomplete gamma: shape a = {a} must be positive"));
    }
    if !(z >= 0.0) {
        return domain(format!("incomplete gamma: argument z = {z} must be >= 0"));
    }
    Ok(())
}

fn log_prefactor(a: f64, z: f64) -> f64 {
    -z + a * z.ln() - ln_gamma(a)
}

fn gamma_series(a: f64, z: f64) -> Result<f64> {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        term *= z / ap;
        sum += term;
        if term.abs() < sum.abs() * GAMMA_EPS {
            return Ok((log_prefactor(a, z).exp() * sum).min(1.0));
        }
    }
    Err(Error::NonConvergence {
        terms: GAMMA_MAX_ITER,
        last_term: term.abs(),
    })
}

fn gamma_cont_frac(a: f64, z: f64) -> Result<f64> {
    let mut b = z + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < GAMMA_EPS {
            return Ok((log_prefactor(a, z).exp() * h).max(0.0));
        }
    }
    Err(Error::NonConvergence {
        terms: GAMMA_MAX_ITER,
        last_term: f64::NAN,
    })
}
