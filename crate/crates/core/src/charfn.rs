//! Characteristic function of the temperature under the historical measure
//! and under the Esscher measure `Q^theta`.
//!
//! Every quantity depends on the transform variable only through the
//! amplitude `f(s) = kappa e^{alpha s}` entering `g_j`: `phi_T(u)` uses
//! `kappa = u sigma e^{-alpha t}` and `phi_W(v)` uses `kappa = v`.

use num_complex::Complex64;
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Error, Result};
use crate::model::{c1, ModelParams, Regime};
use crate::noise::{log_cumulant_r, SubordinatorSpec};
use crate::numerics::{halfline_on_grid, tail_sum, GammaKernelRule, QuadratureConfig};
use crate::regimes::{CountTruncation, TiltedCounts};
use crate::specfun::SeriesControl;

/// Horizon, Esscher parameter and numerical controls of one evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalContext {
    pub t: f64,
    pub theta: f64,
    pub trunc: CountTruncation,
    pub quad: QuadratureConfig,
    pub series: SeriesControl,
}

impl EvalContext {
    pub fn new(t: f64, theta: f64) -> Self {
        Self {
            t,
            theta,
            trunc: CountTruncation::default(),
            quad: QuadratureConfig::default(),
            series: SeriesControl::default(),
        }
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        Self {
            theta,
            ..self.clone()
        }
    }

    pub fn validate(&self, p: &ModelParams) -> Result<()> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return domain(format!("horizon t = {} must be positive", self.t));
        }
        if !(self.theta < p.rates.lambda12) || !self.theta.is_finite() {
            return domain(format!(
                "theta = {} must be below lambda12 = {}",
                self.theta, p.rates.lambda12
            ));
        }
        self.trunc.validate()?;
        self.quad.validate()?;
        self.series.validate()
    }
}

/// `g = -i A mu + mu theta + (-i A + theta)^2 / 2` for the amplitude `A`.
fn g_amp(mu: f64, amp: f64, theta: f64) -> Complex64 {
    Complex64::new(
        mu * theta + 0.5 * theta * theta - 0.5 * amp * amp,
        -amp * (mu + theta),
    )
}

/// `g_j(u, s, theta)` with amplitude `u sigma e^{-alpha (t - s)}`.
pub fn g_fun(regime: Regime, u: f64, s: f64, ctx: &EvalContext, p: &ModelParams) -> Complex64 {
    let amp = u * p.sigma * (-p.alpha * (ctx.t - s)).exp();
    g_amp(p.noise(regime).mu1, amp, ctx.theta)
}

/// Integrand `l_R(g(s)) - l_R(mu theta + theta^2/2)` of `I_j`.
struct Exponent<'a> {
    spec: &'a SubordinatorSpec,
    mu: f64,
    theta: f64,
    alpha: f64,
    kappa: f64,
    l0: Complex64,
}

impl<'a> Exponent<'a> {
    fn new(p: &'a ModelParams, regime: Regime, theta: f64, kappa: f64) -> Result<Self> {
        let noise = p.noise(regime);
        let mu = noise.mu1;
        let l0 = log_cumulant_r(
            &noise.subordinator,
            Complex64::new(mu * theta + 0.5 * theta * theta, 0.0),
        )?;
        Ok(Self {
            spec: &noise.subordinator,
            mu,
            theta,
            alpha: p.alpha,
            kappa,
            l0,
        })
    }

    fn integrand(&self, s: f64) -> Result<Complex64> {
        let amp = self.kappa * (self.alpha * s).exp();
        if !amp.is_finite() {
            return Err(Error::NonFiniteIntegrand { x: s });
        }
        Ok(log_cumulant_r(self.spec, g_amp(self.mu, amp, self.theta))? - self.l0)
    }

    /// `I(x_j)` at `x_j = j h`, `j = 0..=n`, by Simpson's rule on each panel.
    fn cumulative(&self, n: usize, h: f64) -> Result<Vec<Complex64>> {
        let zero = Complex64::new(0.0, 0.0);
        if self.kappa == 0.0 {
            return Ok(vec![zero; n + 1]);
        }
        let mut out = Vec::with_capacity(n + 1);
        out.push(zero);
        let mut acc = zero;
        let mut prev = self.integrand(0.0)?;
        for j in 0..n {
            let mid = self.integrand((j as f64 + 0.5) * h)?;
            let next = self.integrand((j + 1) as f64 * h)?;
            acc += (prev + 4.0 * mid + next) * (h / 6.0);
            out.push(acc);
            prev = next;
        }
        Ok(out)
    }

    /// `int_0^inf e^{I(x)} e^{-decay x} dx`.
    fn halfline(&self, decay: f64, quad: &QuadratureConfig) -> Result<Complex64> {
        if !(decay > 0.0) {
            return domain(format!("half-line decay rate {decay} must be positive"));
        }
        if self.kappa == 0.0 {
            return Ok(Complex64::new(1.0 / decay, 0.0));
        }
        let x_max = -quad.halfline_envelope_tol.ln() / decay;
        let n = quad.panels(x_max);
        let h = x_max / n as f64;
        let mut err = None;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut prev = self.integrand(0.0)?;
        let f = |x: f64| {
            if x == 0.0 {
                return Complex64::new(1.0, 0.0);
            }
            if err.is_some() {
                return Complex64::new(f64::NAN, f64::NAN);
            }
            let step = self
                .integrand(x - 0.5 * h)
                .and_then(|mid| self.integrand(x).map(|next| (mid, next)));
            match step {
                Ok((mid, next)) => {
                    acc += (prev + 4.0 * mid + next) * (h / 6.0);
                    prev = next;
                    (acc - decay * x).exp()
                }
                Err(e) => {
                    err = Some(e);
                    Complex64::new(f64::NAN, f64::NAN)
                }
            }
        };
        let value = halfline_on_grid(f, decay, h, n, quad);
        match err {
            Some(e) => Err(e),
            None => value,
        }
    }
}

/// Amplitude scale of `phi_T(u)`.
fn kappa_t(u: f64, t: f64, p: &ModelParams) -> f64 {
    u * p.sigma * (-p.alpha * t).exp()
}

/// `I^theta_j(u, x) = int_0^x l_R(g_j(u, s, theta)) ds - l_R(mu theta + theta^2/2) x`.
pub fn big_i(
    regime: Regime,
    u: f64,
    x: f64,
    ctx: &EvalContext,
    p: &ModelParams,
) -> Result<Complex64> {
    if !(x >= 0.0) {
        return domain(format!("big_i: x = {x} must be >= 0"));
    }
    if x == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let e = Exponent::new(p, regime, ctx.theta, kappa_t(u, ctx.t, p))?;
    let n = ctx.quad.panels(x);
    Ok(*e.cumulative(n, x / n as f64)?.last().expect("nonempty"))
}

/// `J^theta_j(u) = int_0^inf e^{I^theta_j(u, x)} e^{-(lambda - theta) x} dx`, where
/// `lambda` is the rate of leaving regime `j`.
pub fn big_j12(regime: Regime, u: f64, ctx: &EvalContext, p: &ModelParams) -> Result<Complex64> {
    let decay = p.exit_rate(regime) - ctx.theta;
    if !(decay > 0.0) {
        return domain(format!(
            "theta = {} must be below the exit rate {} of regime {}",
            ctx.theta,
            p.exit_rate(regime),
            regime.index()
        ));
    }
    Exponent::new(p, regime, ctx.theta, kappa_t(u, ctx.t, p))?.halfline(decay, &ctx.quad)
}

/// `G^theta_j(u, t, m) = int_0^t e^{I^theta_j(u, t - z)} z^{m-1} e^{-(lambda21 - theta) z} dz`.
pub fn big_g(
    regime: Regime,
    u: f64,
    m: usize,
    ctx: &EvalContext,
    p: &ModelParams,
) -> Result<Complex64> {
    if m == 0 {
        return domain("big_g: m must be >= 1");
    }
    let c = p.rates.lambda21 - ctx.theta;
    if !(c > 0.0) {
        return domain("big_g: theta must be below lambda21");
    }
    let n = ctx.quad.panels(ctx.t);
    let kernel = GammaKernelRule::new(ctx.t, n, c, m)?;
    let e = Exponent::new(p, regime, ctx.theta, kappa_t(u, ctx.t, p))?;
    let phi = tail_profile(&e, n, ctx.t)?;
    let scale = (ln_gamma(m as f64) - m as f64 * c.ln()).exp();
    Ok(kernel.integrate(m, &phi) * scale)
}

/// `e^{I(t - z_i)}` on the grid `z_i = i t / n`.
fn tail_profile(e: &Exponent<'_>, n: usize, t: f64) -> Result<Vec<Complex64>> {
    let cum = e.cumulative(n, t / n as f64)?;
    Ok(cum.iter().rev().map(|v| v.exp()).collect())
}

/// Counts of truncated inner series met while assembling `C_5`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SeriesDiagnostics {
    pub truncated: usize,
    pub max_last_term: f64,
}

impl SeriesDiagnostics {
    fn record(&mut self, truncated: bool, last: f64) {
        if truncated {
            self.truncated += 1;
            self.max_last_term = self.max_last_term.max(last);
        }
    }
}

/// The building blocks of the characteristic function at one amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Factors {
    pub j1: Complex64,
    pub j2: Complex64,
    pub c4: Complex64,
    pub c5: Complex64,
    /// `I^theta_1(u, t)`, the exponent of the no-switch tail term.
    pub i1_t: Complex64,
    pub diagnostics: SeriesDiagnostics,
}

/// Characteristic-function evaluator for fixed parameters and context.
///
/// Holds the tilted switch-count law and the Gamma-kernel quadrature weights
/// of the tail integrals, which do not depend on the transform variable.
#[derive(Debug, Clone)]
pub struct CharFnEngine {
    params: ModelParams,
    ctx: EvalContext,
    counts: TiltedCounts,
    kernel: GammaKernelRule,
    /// `(lambda12 - theta) / (lambda21 - theta)`.
    lead: f64,
    /// `(lambda21 - lambda12) / (lambda21 - theta)`.
    q: f64,
}

impl CharFnEngine {
    pub fn new(params: &ModelParams, ctx: &EvalContext) -> Result<Self> {
        params.validate()?;
        ctx.validate(params)?;
        let counts = TiltedCounts::new(ctx.t, ctx.theta, &params.rates, &ctx.trunc)?;
        let c = params.rates.lambda21 - ctx.theta;
        let max_shape = ctx.trunc.max_switches + ctx.trunc.series_terms;
        let kernel = GammaKernelRule::new(ctx.t, ctx.quad.panels(ctx.t), c, max_shape)?;
        Ok(Self {
            params: params.clone(),
            ctx: ctx.clone(),
            counts,
            lead: (params.rates.lambda12 - ctx.theta) / c,
            q: (params.rates.lambda21 - params.rates.lambda12) / c,
            kernel,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn ctx(&self) -> &EvalContext {
        &self.ctx
    }

    pub fn counts(&self) -> &TiltedCounts {
        &self.counts
    }

    pub fn kernel(&self) -> &GammaKernelRule {
        &self.kernel
    }

    fn exponent(&self, regime: Regime, kappa: f64) -> Result<Exponent<'_>> {
        Exponent::new(&self.params, regime, self.ctx.theta, kappa)
    }

    fn j12(&self, regime: Regime, kappa: f64) -> Result<Complex64> {
        let decay = self.params.exit_rate(regime) - self.ctx.theta;
        self.exponent(regime, kappa)?
            .halfline(decay, &self.ctx.quad)
    }

    fn profile(&self, regime: Regime, kappa: f64) -> Result<Vec<Complex64>> {
        tail_profile(
            &self.exponent(regime, kappa)?,
            self.kernel.panels(),
            self.ctx.t,
        )
    }

    /// Inner l-series of `J_3` (`odd = false`, needs `k >= 1`) or `J_4`.
    ///
    /// Each term is written against the normalized Gamma(m, lambda21 - theta)
    /// kernel: `lead^a a^(l)/l! q^l int phi g_m` with `a = k` or `k + 1`.
    fn j34_series(
        &self,
        k: usize,
        odd: bool,
        phi: &[Complex64],
        diag: &mut SeriesDiagnostics,
    ) -> Result<Complex64> {
        let a = if odd { k + 1 } else { k };
        let m0 = 2 * k + usize::from(odd);
        let max_l = self.kernel.max_shape() + 1 - m0;
        let ctrl = SeriesControl {
            max_terms: self.ctx.trunc.series_terms.min(max_l),
            ..self.ctx.series
        };
        let mut w = 0.0;
        let sum = tail_sum(
            |l| {
                w = if l == 0 {
                    self.lead.powi(a as i32)
                } else {
                    w * (a + l - 1) as f64 * self.q / l as f64
                };
                Ok(self.kernel.integrate(m0 + l, phi) * w)
            },
            &ctrl,
        )?;
        diag.record(sum.truncated, sum.last_term);
        Ok(sum.value)
    }

    /// `(J^theta_3(u, k), J^theta_4(u, k))` at amplitude `kappa`; `J_3(., 0) = 0`.
    pub fn j34_at(&self, k: usize, kappa: f64) -> Result<(Complex64, Complex64)> {
        if k > self.ctx.trunc.max_switches / 2 {
            return domain(format!(
                "k = {k} exceeds max_switches / 2 = {}",
                self.ctx.trunc.max_switches / 2
            ));
        }
        let mut diag = SeriesDiagnostics::default();
        let j3 = if k == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            self.j34_series(k, false, &self.profile(Regime::One, kappa)?, &mut diag)?
        };
        let j4 = self.j34_series(k, true, &self.profile(Regime::Two, kappa)?, &mut diag)?;
        Ok((j3, j4))
    }

    /// `J_1`, `J_2`, `C_4`, `C_5` at amplitude `kappa`.
    pub fn factors(&self, kappa: f64) -> Result<Factors> {
        let rates = &self.params.rates;
        let theta = self.ctx.theta;
        let j1 = self.j12(Regime::One, kappa)?;
        let j2 = self.j12(Regime::Two, kappa)?;
        let a = j1 * (rates.lambda12 - theta);
        let b = j2 * (rates.lambda21 - theta);
        let ab = a * b;
        let p = &self.counts.probs;
        let pairs = self.ctx.trunc.pairs();
        let pair_ctrl = SeriesControl {
            max_terms: pairs,
            ..self.ctx.series
        };

        let mut power = Complex64::new(1.0, 0.0);
        let c4 = tail_sum(
            |k| {
                if k > 0 {
                    power *= ab;
                }
                Ok(power * (a * p[2 * k + 1] + p[2 * k]))
            },
            &pair_ctrl,
        )?
        .value;

        let phi1 = self.profile(Regime::One, kappa)?;
        let phi2 = self.profile(Regime::Two, kappa)?;
        // phi1[0] = e^{I_1(u, t)}: the whole horizon spent in regime 1
        let no_switch = phi1[0];
        let mut diag = SeriesDiagnostics::default();
        let c5 = tail_sum(
            |k| {
                let even = if k == 0 {
                    no_switch
                } else if p[2 * k] > 0.0 {
                    self.j34_series(k, false, &phi1, &mut diag)?
                } else {
                    Complex64::new(0.0, 0.0)
                };
                let odd = if p[2 * k + 1] > 0.0 {
                    self.j34_series(k, true, &phi2, &mut diag)?
                } else {
                    Complex64::new(0.0, 0.0)
                };
                Ok(even * p[2 * k] + odd * p[2 * k + 1])
            },
            &pair_ctrl,
        )?
        .value;

        Ok(Factors {
            j1,
            j2,
            c4,
            c5,
            i1_t: no_switch.ln(),
            diagnostics: diag,
        })
    }

    /// `C_4 C_5` at amplitude `kappa`.
    pub fn phi_w_at(&self, kappa: f64) -> Result<Complex64> {
        let f = self.factors(kappa)?;
        Ok(f.c4 * f.c5)
    }

    /// Characteristic function of `W_t` at `v`: amplitude `f(s) = v e^{alpha s}`.
    pub fn phi_w(&self, v: f64) -> Result<Complex64> {
        self.phi_w_at(v)
    }

    /// `exp(i u C_1(t)) C_4 C_5` with amplitude `u sigma e^{-alpha (t - s)}`.
    pub fn phi_t(&self, u: f64) -> Result<Complex64> {
        let phase = Complex64::new(0.0, u * c1(self.ctx.t, &self.params)).exp();
        Ok(phase * self.phi_w_at(kappa_t(u, self.ctx.t, &self.params))?)
    }

    /// `C_5(0, theta)`.
    pub fn c5_zero(&self) -> Result<f64> {
        Ok(self.factors(0.0)?.c5.re)
    }

    /// `phi_T` on a grid, evaluated in parallel.
    pub fn phi_t_grid(&self, us: &[f64]) -> Result<Vec<Complex64>> {
        us.par_iter().map(|&u| self.phi_t(u)).collect()
    }

    /// `phi_W` on a grid, evaluated in parallel.
    pub fn phi_w_grid(&self, vs: &[f64]) -> Result<Vec<Complex64>> {
        vs.par_iter().map(|&v| self.phi_w(v)).collect()
    }
}

/// `(J^theta_3(u, k), J^theta_4(u, k))`.
pub fn big_j34(
    k: usize,
    u: f64,
    ctx: &EvalContext,
    p: &ModelParams,
) -> Result<(Complex64, Complex64)> {
    CharFnEngine::new(p, ctx)?.j34_at(k, kappa_t(u, ctx.t, p))
}

/// Characteristic function of `W_t` under `Q^theta`.
pub fn phi_w(u: f64, ctx: &EvalContext, p: &ModelParams) -> Result<Complex64> {
    CharFnEngine::new(p, ctx)?.phi_w(u)
}

/// Characteristic function of `T_t` under `Q^theta`.
pub fn phi_t(u: f64, ctx: &EvalContext, p: &ModelParams) -> Result<Complex64> {
    CharFnEngine::new(p, ctx)?.phi_t(u)
}

/// Symmetric grid of `points` values on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseSpec;
    use crate::regimes::{tilted_tau_cdf, RegimeRates};
    use crate::specfun::lower_incomplete_gamma;

    fn desk() -> ModelParams {
        ModelParams::desk()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn g_examples() {
        let p = desk();
        let ctx = EvalContext::new(0.25, 0.3);
        let g = g_fun(Regime::One, 0.0, 0.1, &ctx, &p);
        assert!((g - c(0.1 * 0.3 + 0.045, 0.0)).norm() < 1e-15);
        let ctx0 = EvalContext::new(0.25, 0.0);
        let (u, s): (f64, f64) = (1.7, 0.05);
        let e = (-2.0 * (0.25 - s)).exp();
        let expect = c(-0.5 * u * u * e * e, -u * 0.1 * e);
        assert!((g_fun(Regime::One, u, s, &ctx0, &p) - expect).norm() < 1e-14);
        let h = 1e-6;
        let fd =
            (g_fun(Regime::Two, h, s, &ctx, &p) - g_fun(Regime::Two, -h, s, &ctx, &p)) / (2.0 * h);
        let expect = c(0.0, -(-0.1 + 0.3) * e);
        assert!((fd - expect).norm() < 1e-8);
    }

    #[test]
    fn exponent_vanishes_at_zero_transform() {
        let p = desk();
        let ctx = EvalContext::new(0.25, 0.7);
        for &x in &[0.0, 0.1, 0.25] {
            assert_eq!(big_i(Regime::Two, 0.0, x, &ctx, &p).unwrap(), c(0.0, 0.0));
        }
    }

    #[test]
    fn exponent_matches_gamma_closed_integrand() {
        let p = desk();
        let ctx = EvalContext::new(0.25, 0.0);
        let (u, x) = (2.0, 0.2);
        let spec = p.noise1.subordinator;
        let n = 20_000;
        let h = x / n as f64;
        let f = |s: f64| -spec.a * (c(1.0, 0.0) - g_fun(Regime::One, u, s, &ctx, &p) / spec.b).ln();
        let reference =
            h * ((1..n).map(|i| f(i as f64 * h)).sum::<Complex64>() + 0.5 * (f(0.0) + f(x)));
        let v = big_i(Regime::One, u, x, &ctx, &p).unwrap();
        assert!((v - reference).norm() < 1e-8, "{v} vs {reference}");
    }

    #[test]
    fn identical_regimes_share_exponent() {
        let mut p = desk();
        p.noise2 = p.noise1;
        let ctx = EvalContext::new(0.25, 0.2);
        let a = big_i(Regime::One, 1.3, 0.2, &ctx, &p).unwrap();
        let b = big_i(Regime::Two, 1.3, 0.2, &ctx, &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn j12_at_zero_transform() {
        let p = desk();
        let ctx = EvalContext::new(0.25, 0.5);
        let j1 = big_j12(Regime::One, 0.0, &ctx, &p).unwrap();
        assert!((j1 - c(1.0 / 9.5, 0.0)).norm() < 1e-14);
        let ctx0 = EvalContext::new(0.25, 0.0);
        let j2 = big_j12(Regime::Two, 0.0, &ctx0, &p).unwrap();
        assert!((j2 - c(1.0 / 20.0, 0.0)).norm() < 1e-14);
        assert!(big_j12(Regime::One, 0.5, &EvalContext::new(0.25, 10.0), &p).is_err());
    }

    #[test]
    fn j12_matches_direct_quadrature() {
        // Reference: dense plain trapezoid of e^{I(x)} e^{-lambda x} with I by dense trapezoid
        let p = desk();
        let ctx = EvalContext::new(0.25, 0.0);
        let u = 0.5;
        let e = Exponent::new(&p, Regime::One, 0.0, kappa_t(u, 0.25, &p)).unwrap();
        let n = 200_000;
        let x_max = 3.5;
        let h = x_max / n as f64;
        let mut acc_i = c(0.0, 0.0);
        let mut prev_f = e.integrand(0.0).unwrap();
        let mut prev_v = c(1.0, 0.0);
        let mut total = c(0.0, 0.0);
        for i in 1..=n {
            let x = i as f64 * h;
            let f = e.integrand(x).unwrap();
            acc_i += 0.5 * h * (prev_f + f);
            let v = (acc_i - 10.0 * x).exp();
            total += 0.5 * h * (prev_v + v);
            prev_f = f;
            prev_v = v;
        }
        let j1 = big_j12(Regime::One, u, &ctx, &p).unwrap();
        assert!((j1 - total).norm() < 1e-6 * total.norm(), "{j1} vs {total}");
    }

    #[test]
    fn g_integral_at_zero_transform() {
        let p = desk();
        let ctx = EvalContext::new(0.25, 0.4);
        let cc: f64 = 20.0 - 0.4;
        for m in [1usize, 2, 5, 9] {
            let v = big_g(Regime::One, 0.0, m, &ctx, &p).unwrap();
            let expect =
                cc.powi(-(m as i32)) * lower_incomplete_gamma(m as f64, cc * 0.25).unwrap();
            assert!((v.re - expect).abs() < 1e-13 * expect, "m={m}");
            assert_eq!(v.im, 0.0);
        }
        let short = EvalContext::new(1e-9, 0.0);
        assert!(big_g(Regime::Two, 0.7, 2, &short, &p).unwrap().norm() < 1e-15);
    }

    #[test]
    fn g_integral_refinement() {
        let p = desk();
        let ctx = EvalContext::new(0.25, 0.0);
        let fine = EvalContext {
            quad: ctx.quad.refined(8),
            ..ctx.clone()
        };
        let a = big_g(Regime::One, 0.5, 2, &ctx, &p).unwrap();
        let b = big_g(Regime::One, 0.5, 2, &fine, &p).unwrap();
        assert!((a - b).norm() < 1e-6 * b.norm(), "{a} vs {b}");
    }

    #[test]
    fn j34_at_zero_transform_is_a_tilted_cdf() {
        let p = desk();
        let theta = 0.6;
        let ctx = EvalContext::new(0.25, theta);
        let (j3, j4) = big_j34(1, 0.0, &ctx, &p).unwrap();
        // closed form: D(1,-1,2,theta) sum C(1,2,l) lambda21^l G(0, t, 2 + l)
        let (l12, l21) = (10.0 - theta, 20.0 - theta);
        let cc = l21;
        let mut closed3 = 0.0;
        let mut closed4 = 0.0;
        for l in 0..40u32 {
            let lf = l as f64;
            let c_even = crate::specfun::pochhammer(1.0, l) * (1.0f64 - 0.5).powi(l as i32)
                / (crate::specfun::pochhammer(2.0, l) * statrs::function::gamma::gamma(lf + 1.0));
            let c_odd = crate::specfun::pochhammer(2.0, l) * 0.5f64.powi(l as i32)
                / (crate::specfun::pochhammer(3.0, l) * statrs::function::gamma::gamma(lf + 1.0));
            let g = |m: f64| cc.powf(-m) * lower_incomplete_gamma(m, cc * 0.25).unwrap();
            closed3 += c_even * 20f64.powi(l as i32) * g(2.0 + lf);
            closed4 += c_odd * 20f64.powi(l as i32) * g(3.0 + lf);
        }
        closed3 *= l12 * l21 / 1.0;
        closed4 *= l12 * l12 * l21 / 2.0;
        assert!((j3.re - closed3).abs() < 1e-8, "{} vs {closed3}", j3.re);
        assert!((j4.re - closed4).abs() < 1e-8, "{} vs {closed4}", j4.re);
        let rates = RegimeRates::new(10.0, 20.0).unwrap();
        let f2 = tilted_tau_cdf(2, 0.25, theta, &rates, &ctx.trunc)
            .unwrap()
            .value;
        let f3 = tilted_tau_cdf(3, 0.25, theta, &rates, &ctx.trunc)
            .unwrap()
            .value;
        assert!((j3.re - f2).abs() < 1e-10);
        assert!((j4.re - f3).abs() < 1e-10);
    }

    #[test]
    fn j34_zero_index() {
        let p = desk();
        let ctx = EvalContext::new(0.25, 0.0);
        let (j3, j4) = big_j34(0, 0.8, &ctx, &p).unwrap();
        assert_eq!(j3, c(0.0, 0.0));
        assert!(j4.norm() > 0.0);
        assert!(big_j34(21, 0.8, &ctx, &p).is_err());
    }

    #[test]
    fn phi_w_at_zero_is_c5() {
        let p = desk();
        let ctx = EvalContext::new(0.25, 0.3);
        let e = CharFnEngine::new(&p, &ctx).unwrap();
        let f = e.factors(0.0).unwrap();
        assert!((f.c4 - c(1.0, 0.0)).norm() < 1e-9);
        assert!((e.phi_w(0.0).unwrap() - f.c5).norm() < 1e-9);
        assert!((e.phi_t(0.0).unwrap() - f.c5).norm() < 1e-9);
    }

    #[test]
    fn phi_t_conjugate_symmetry_and_bound() {
        let p = desk();
        let ctx = EvalContext::new(0.25, 0.0);
        let e = CharFnEngine::new(&p, &ctx).unwrap();
        for &u in &[0.3, 1.0, 4.0, 10.0] {
            let a = e.phi_t(u).unwrap();
            let b = e.phi_t(-u).unwrap();
            assert!((a - b.conj()).norm() < 1e-12);
            assert!(a.norm() <= 1.0 + 1e-3);
        }
    }

    #[test]
    fn theta_continuity() {
        let p = desk();
        let a = CharFnEngine::new(&p, &EvalContext::new(0.25, 0.0)).unwrap();
        let b = CharFnEngine::new(&p, &EvalContext::new(0.25, 1e-8)).unwrap();
        for u in linspace(-5.0, 5.0, 11) {
            assert!((a.phi_t(u).unwrap() - b.phi_t(u).unwrap()).norm() <= 1e-6);
        }
    }

    #[test]
    fn single_regime_degeneration() {
        let mut p = desk();
        p.rates.lambda12 = 1e-6;
        let ctx = EvalContext::new(0.25, 0.0);
        let e = CharFnEngine::new(&p, &ctx).unwrap();
        let noise = p.noise1;
        for v in linspace(-5.0, 5.0, 11) {
            let closed = single_levy_reference(&noise, v, p.alpha, 0.25);
            let got = e.phi_w(v).unwrap();
            assert!((got - closed).norm() <= 1e-4, "v={v}: {got} vs {closed}");
        }
    }

    fn single_levy_reference(noise: &NoiseSpec, v: f64, alpha: f64, t: f64) -> Complex64 {
        let n = 100_000;
        let h = t / n as f64;
        let f =
            |s: f64| crate::noise::log_cumulant_v(noise, c(0.0, -v * (alpha * s).exp())).unwrap();
        (h * ((1..n).map(|i| f(i as f64 * h)).sum::<Complex64>() + 0.5 * (f(0.0) + f(t)))).exp()
    }

    #[test]
    fn context_validation() {
        let p = desk();
        assert!(EvalContext::new(0.0, 0.0).validate(&p).is_err());
        assert!(EvalContext::new(1.0, 10.0).validate(&p).is_err());
        assert!(CharFnEngine::new(&p, &EvalContext::new(-1.0, 0.0)).is_err());
    }

    #[test]
    fn grid_helper() {
        assert_eq!(linspace(-1.0, 1.0, 3), vec![-1.0, 0.0, 1.0]);
        assert_eq!(linspace(2.0, 3.0, 1), vec![2.0]);
        assert!(linspace(0.0, 1.0, 0).is_empty());
    }
}
