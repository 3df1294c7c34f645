//! Esscher parameter making the discounted temperature a martingale at `t`.
//!
//! `D_1` and `D_2` are stored as real magnitudes: the transforms produced by
//! [`crate::charfn`] satisfy `dC_4/du = -i D_1` and `dC_5/du = -i D_2` at
//! `u = 0`, in the variable `u` of `phi_W`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::charfn::{CharFnEngine, EvalContext};
use crate::error::{domain, Error, Result};
use crate::model::{c1, ModelParams, Regime};
use crate::noise::log_cumulant_r_deriv;
use crate::regimes::TiltedCounts;
use crate::specfun::regularized_lower_gamma;

/// Which expected-count sum enters `D_1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum D1Form {
    /// `sum_k k (p_{2k} + p_{2k+1})`: completed (1, 2) cycles, as obtained by
    /// differentiating `C_4` term by term.
    #[default]
    Intermediate,
    /// `sum_k k p_k`: the expected number of switches.
    Printed,
}

/// `L_j(theta) = (mu_j + theta) l_R'(mu_j theta + theta^2 / 2) / alpha`.
pub fn l_fun(regime: Regime, theta: f64, p: &ModelParams) -> Result<f64> {
    let noise = p.noise(regime);
    let z = Complex64::new(noise.mu1 * theta + 0.5 * theta * theta, 0.0);
    let d = log_cumulant_r_deriv(&noise.subordinator, z)?;
    Ok((noise.mu1 + theta) * d.re / p.alpha)
}

fn check_poles(theta: f64, p: &ModelParams) -> Result<()> {
    if !(p.rates.lambda12 > p.alpha + theta) {
        return domain(format!(
            "lambda12 = {} must exceed alpha + theta = {}",
            p.rates.lambda12,
            p.alpha + theta
        ));
    }
    Ok(())
}

/// `(A_12, A_21) = (L_1 / (lambda12 - alpha - theta), L_2 / (lambda21 - alpha - theta))`.
pub fn a_coefficients(theta: f64, p: &ModelParams) -> Result<(f64, f64)> {
    check_poles(theta, p)?;
    let a12 = l_fun(Regime::One, theta, p)? / (p.rates.lambda12 - p.alpha - theta);
    let a21 = l_fun(Regime::Two, theta, p)? / (p.rates.lambda21 - p.alpha - theta);
    Ok((a12, a21))
}

fn d1_from_counts(counts: &TiltedCounts, p: &ModelParams, form: D1Form) -> Result<f64> {
    let (a12, a21) = a_coefficients(counts.theta, p)?;
    let expected = match form {
        D1Form::Intermediate => counts.mean_cycles(),
        D1Form::Printed => counts.mean(),
    };
    Ok(p.alpha * ((a12 + a21) * expected + a12 * counts.odd()))
}

/// `D_1(t, theta)` with the chosen expected-count form.
pub fn d1_fun_with(
    form: D1Form,
    t: f64,
    theta: f64,
    ctx: &EvalContext,
    p: &ModelParams,
) -> Result<f64> {
    check_poles(theta, p)?;
    let c = ctx_at(t, theta, ctx);
    c.validate(p)?;
    let counts = TiltedCounts::new(t, theta, &p.rates, &c.trunc)?;
    d1_from_counts(&counts, p, form)
}

/// `D_1(t, theta) = alpha [(A_12 + A_21) sum_k k (p_{2k} + p_{2k+1}) + A_12 p_O]`.
pub fn d1_fun(t: f64, theta: f64, ctx: &EvalContext, p: &ModelParams) -> Result<f64> {
    d1_fun_with(D1Form::Intermediate, t, theta, ctx, p)
}

fn ctx_at(t: f64, theta: f64, ctx: &EvalContext) -> EvalContext {
    EvalContext {
        t,
        theta,
        ..ctx.clone()
    }
}

/// u-derivative magnitude of the normalized tail integral of shape `m`:
/// `e^{alpha t} (c/(c+alpha))^m P(m, (c+alpha) t) - P(m, c t)`.
fn tail_derivative(m: usize, t: f64, c: f64, alpha: f64) -> Result<f64> {
    let mf = m as f64;
    let shifted = (alpha * t + mf * (c / (c + alpha)).ln()).exp()
        * regularized_lower_gamma(mf, (c + alpha) * t)?;
    Ok(shifted - regularized_lower_gamma(mf, c * t)?)
}

fn d2_from_counts(counts: &TiltedCounts, ctx: &EvalContext, p: &ModelParams) -> Result<f64> {
    let theta = counts.theta;
    let t = counts.t;
    let rates = &p.rates;
    let c = rates.lambda21 - theta;
    let lead = (rates.lambda12 - theta) / c;
    let q = (rates.lambda21 - rates.lambda12) / c;
    let l1 = l_fun(Regime::One, theta, p)?;
    let l2 = l_fun(Regime::Two, theta, p)?;
    let terms = ctx.trunc.series_terms;
    let probs = &counts.probs;

    let series = |a: usize, m0: usize| -> Result<f64> {
        let mut w = lead.powi(a as i32);
        let mut sum = 0.0;
        for l in 0..terms {
            if l > 0 {
                w *= (a + l - 1) as f64 * q / l as f64;
            }
            sum += w * tail_derivative(m0 + l, t, c, p.alpha)?;
        }
        Ok(sum)
    };

    let mut total = probs[0] * l1 * ((p.alpha * t).exp() - 1.0);
    for k in 0..ctx.trunc.pairs() {
        if k > 0 && probs[2 * k] > 0.0 {
            total += probs[2 * k] * l1 * series(k, 2 * k)?;
        }
        if probs[2 * k + 1] > 0.0 {
            total += probs[2 * k + 1] * l2 * series(k + 1, 2 * k + 1)?;
        }
    }
    Ok(total)
}

/// `D_2(t, theta)`, from the closed-form derivatives of the tail integrals.
pub fn d2_fun(t: f64, theta: f64, ctx: &EvalContext, p: &ModelParams) -> Result<f64> {
    check_poles(theta, p)?;
    let c = ctx_at(t, theta, ctx);
    c.validate(p)?;
    let counts = TiltedCounts::new(t, theta, &p.rates, &c.trunc)?;
    d2_from_counts(&counts, &c, p)
}

/// `sigma^{-1} e^{alpha t} (e^{r t} T_0 - C_1(t))`.
pub fn emm_target(t: f64, p: &ModelParams) -> f64 {
    (p.alpha * t).exp() / p.sigma * ((p.r * t).exp() * p.t0 - c1(t, p))
}

/// All pieces of the martingale condition at one `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmmTerms {
    pub theta: f64,
    pub d1: f64,
    pub d2: f64,
    pub c5_zero: f64,
    pub target: f64,
}

impl EmmTerms {
    /// Model-implied `E_theta[W_t] = D_1 C_5(0, theta) + D_2`.
    pub fn mean_w(&self) -> f64 {
        self.d1 * self.c5_zero + self.d2
    }

    pub fn residual(&self) -> f64 {
        self.mean_w() - self.target
    }
}

pub fn emm_terms_with(
    form: D1Form,
    theta: f64,
    t: f64,
    ctx: &EvalContext,
    p: &ModelParams,
) -> Result<EmmTerms> {
    check_poles(theta, p)?;
    let engine = CharFnEngine::new(p, &ctx_at(t, theta, ctx))?;
    let counts = engine.counts();
    Ok(EmmTerms {
        theta,
        d1: d1_from_counts(counts, p, form)?,
        d2: d2_from_counts(counts, engine.ctx(), p)?,
        c5_zero: engine.c5_zero()?,
        target: emm_target(t, p),
    })
}

pub fn emm_terms(theta: f64, t: f64, ctx: &EvalContext, p: &ModelParams) -> Result<EmmTerms> {
    emm_terms_with(D1Form::default(), theta, t, ctx, p)
}

/// `D_1 C_5(0, theta) + D_2 - target`.
pub fn emm_residual(theta: f64, t: f64, ctx: &EvalContext, p: &ModelParams) -> Result<f64> {
    Ok(emm_terms(theta, t, ctx, p)?.residual())
}

/// Step of the central differences taken in the transform variable.
pub const FD_STEP: f64 = 1e-5;

/// `E_theta[W_t]` by central differences of `phi_W`, consistently with the
/// sign convention of the transforms (`E[W] = i dphi_W/du` at 0).
pub fn mean_w_finite_difference(engine: &CharFnEngine, step: f64) -> Result<f64> {
    let d = (engine.phi_w(step)? - engine.phi_w(-step)?) / (2.0 * step);
    Ok((Complex64::i() * d).re)
}

/// Central-difference magnitudes `(i dC_4/du, i dC_5/du)` at `u = 0`.
pub fn factor_derivatives_fd(engine: &CharFnEngine, step: f64) -> Result<(f64, f64)> {
    let plus = engine.factors(step)?;
    let minus = engine.factors(-step)?;
    let i = Complex64::i();
    let d4 = i * (plus.c4 - minus.c4) / (2.0 * step);
    let d5 = i * (plus.c5 - minus.c5) / (2.0 * step);
    Ok((d4.re, d5.re))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsscherSolution {
    pub theta: f64,
    pub residual: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
}

/// One point of the residual scan; `residual` is `None` where the formulas
/// are not defined (branch cut, divergent count transform).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub theta: f64,
    pub residual: Option<f64>,
}

pub const SCAN_POINTS: usize = 200;

/// Admissible strip `(-0.9 lambda12, min(lambda12 - alpha, lambda12) - 1e-6 lambda12)`.
pub fn scan_strip(p: &ModelParams) -> (f64, f64) {
    let l12 = p.rates.lambda12;
    (-0.9 * l12, (l12 - p.alpha).min(l12) - 1e-6 * l12)
}

fn recoverable(e: &Error) -> bool {
    matches!(
        e,
        Error::BranchCut { .. }
            | Error::DivergentMgf { .. }
            | Error::NegativeProbability { .. }
            | Error::NonFiniteIntegrand { .. }
    )
}

/// Residual on a uniform grid over the admissible strip, evaluated in parallel.
pub fn scan_residual(t: f64, ctx: &EvalContext, p: &ModelParams) -> Result<Vec<ScanPoint>> {
    p.validate()?;
    let (lo, hi) = scan_strip(p);
    if !(lo < hi) {
        return domain(format!(
            "empty Esscher strip: lambda12 = {} and alpha = {}",
            p.rates.lambda12, p.alpha
        ));
    }
    let thetas: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64)
        .collect();
    thetas
        .par_iter()
        .map(|&theta| match emm_residual(theta, t, ctx, p) {
            Ok(r) if r.is_finite() => Ok(ScanPoint {
                theta,
                residual: Some(r),
            }),
            Ok(_) => Ok(ScanPoint {
                theta,
                residual: None,
            }),
            Err(e) if recoverable(&e) => Ok(ScanPoint {
                theta,
                residual: None,
            }),
            Err(e) => Err(e),
        })
        .collect()
}

/// Bracketing scan followed by bisection on `emm_residual`.
pub fn solve_emm(
    t: f64,
    ctx: &EvalContext,
    p: &ModelParams,
    solver_tol: f64,
) -> Result<EsscherSolution> {
    if !(solver_tol > 0.0) {
        return domain("solver tolerance must be positive");
    }
    let scan = scan_residual(t, ctx, p)?;
    solve_from_scan(&scan, t, ctx, p, solver_tol)
}

/// Bisection from the sign change of `scan` closest to `theta = 0`.
pub fn solve_from_scan(
    scan: &[ScanPoint],
    t: f64,
    ctx: &EvalContext,
    p: &ModelParams,
    solver_tol: f64,
) -> Result<EsscherSolution> {
    let (lo, hi) = scan_strip(p);
    if let Some(pt) = scan.iter().find(|pt| pt.residual == Some(0.0)) {
        return Ok(EsscherSolution {
            theta: pt.theta,
            residual: 0.0,
            bracket: (pt.theta, pt.theta),
            iterations: 0,
        });
    }
    let bracket = scan
        .windows(2)
        .filter_map(|w| match (w[0].residual, w[1].residual) {
            (Some(a), Some(b)) if a.signum() != b.signum() => Some((w[0].theta, w[1].theta, a)),
            _ => None,
        })
        .min_by(|x, y| {
            let cx = (0.5 * (x.0 + x.1)).abs();
            let cy = (0.5 * (y.0 + y.1)).abs();
            cx.total_cmp(&cy)
        });
    let Some((mut a, mut b, mut ra)) = bracket else {
        if p.rates.lambda12 <= p.alpha {
            return domain(format!(
                "lambda12 = {} <= alpha = {} and no root on the negative side",
                p.rates.lambda12, p.alpha
            ));
        }
        return Err(Error::NoBracket { lo, hi });
    };
    let initial = (a, b);
    let mut iterations = 0;
    loop {
        let mid = 0.5 * (a + b);
        let rm = emm_residual(mid, t, ctx, p)?;
        iterations += 1;
        if rm.abs() < solver_tol || (b - a) < 1e-12 || iterations >= 200 {
            return Ok(EsscherSolution {
                theta: mid,
                residual: rm,
                bracket: initial,
                iterations,
            });
        }
        if rm.signum() == ra.signum() {
            a = mid;
            ra = rm;
        } else {
            b = mid;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{NoiseSpec, SubordinatorSpec};

    fn desk() -> ModelParams {
        ModelParams::desk()
    }

    /// Driftless, symmetric model started on a flat seasonal curve.
    fn martingale_model() -> ModelParams {
        let mut p = desk();
        p.noise1.mu1 = 0.0;
        p.noise2.mu1 = 0.0;
        p.r = 0.0;
        p.beta = [16.0, 0.0, 0.0, 0.0];
        p.t0 = 16.0;
        p
    }

    #[test]
    fn l_examples() {
        let mut p = martingale_model();
        assert_eq!(l_fun(Regime::One, 0.0, &p).unwrap(), 0.0);
        p = desk();
        let theta = 0.4;
        let expect = (0.1 + theta) * 4.0 / (4.0 - 0.1 * theta - 0.5 * theta * theta) / 2.0;
        assert!((l_fun(Regime::One, theta, &p).unwrap() - expect).abs() < 1e-14);

        let mut q = desk();
        q.noise1 =
            NoiseSpec::new(SubordinatorSpec::inverse_gaussian(1.0, 3.0).unwrap(), 0.5).unwrap();
        let theta = 0.1;
        let z = 0.5 * theta + 0.5 * theta * theta;
        let h = 1e-6;
        let lr = |x: f64| {
            crate::noise::log_cumulant_r(&q.noise1.subordinator, Complex64::new(x, 0.0))
                .unwrap()
                .re
        };
        let fd = (lr(z + h) - lr(z - h)) / (2.0 * h) * (0.5 + theta) / 2.0;
        assert!((l_fun(Regime::One, theta, &q).unwrap() - fd).abs() < 1e-6);
    }

    #[test]
    fn derivative_terms_vanish_without_drift() {
        let p = martingale_model();
        let ctx = EvalContext::new(0.25, 0.0);
        assert_eq!(d1_fun(0.25, 0.0, &ctx, &p).unwrap(), 0.0);
        assert_eq!(d2_fun(0.25, 0.0, &ctx, &p).unwrap(), 0.0);
        assert!(emm_residual(0.0, 0.25, &ctx, &p).unwrap().abs() < 1e-15);
    }

    #[test]
    fn derivative_terms_vanish_at_short_horizon() {
        let p = desk();
        let ctx = EvalContext::new(1e-12, 0.3);
        assert!(d1_fun(1e-12, 0.3, &ctx, &p).unwrap().abs() < 1e-9);
        assert!(d2_fun(1e-12, 0.3, &ctx, &p).unwrap().abs() < 1e-9);
    }

    #[test]
    fn pole_condition_enforced() {
        let p = desk();
        let ctx = EvalContext::new(0.25, 0.0);
        assert!(matches!(d1_fun(0.25, 8.5, &ctx, &p), Err(Error::Domain(_))));
        assert!(d2_fun(0.25, 8.0, &ctx, &p).is_err());
    }

    #[test]
    fn target_examples() {
        let mut p = martingale_model();
        assert!(emm_target(1e-14, &p).abs() < 1e-10);
        assert_eq!(emm_target(0.5, &p), 0.0);
        p = desk();
        let t: f64 = 0.25;
        let expect = (2.0 * t).exp() * ((0.02 * t).exp() * 16.0 - c1(t, &p));
        assert_eq!(emm_target(t, &p), expect);
    }

    #[test]
    fn analytic_derivatives_match_finite_differences_on_desk() {
        let p = desk();
        for &theta in &[-1.0, 0.0, 0.8] {
            let ctx = EvalContext::new(0.25, theta);
            let engine = CharFnEngine::new(&p, &ctx).unwrap();
            let (fd4, fd5) = factor_derivatives_fd(&engine, FD_STEP).unwrap();
            let terms = emm_terms(theta, 0.25, &ctx, &p).unwrap();
            assert!(
                (terms.d1 - fd4).abs() < 1e-5,
                "theta={theta}: D1 {} vs {fd4}",
                terms.d1
            );
            assert!(
                (terms.d2 - fd5).abs() < 1e-5,
                "theta={theta}: D2 {} vs {fd5}",
                terms.d2
            );
        }
    }

    #[test]
    fn martingale_model_solves_at_zero() {
        let p = martingale_model();
        let ctx = EvalContext::new(0.25, 0.0);
        // residual vanishes identically only at theta = 0 for this model
        let sol = solve_emm(0.25, &ctx, &p, 1e-10).unwrap();
        assert!(sol.theta.abs() < 1e-6, "{sol:?}");
    }

    #[test]
    fn empty_strip_is_a_domain_error() {
        let mut p = desk();
        p.alpha = 25.0;
        let ctx = EvalContext::new(0.25, 0.0);
        assert!(matches!(
            solve_emm(0.25, &ctx, &p, 1e-10),
            Err(Error::Domain(_))
        ));
    }
}
