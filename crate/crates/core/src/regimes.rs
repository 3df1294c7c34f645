//! Probability law of the regime-switching clock.
//!
//! The chain starts in regime 1 and alternates, so the `k`-th switching time
//! is the sum of `ceil(k/2)` holding times of rate `lambda12` and `floor(k/2)`
//! of rate `lambda21`. Its law is a convolution of two Erlang laws, written
//! through Kummer's `M` (density) or a series of incomplete gammas (cdf).

use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{domain, Error, Result};
use crate::specfun::{kummer_m, pochhammer, regularized_lower_gamma, SeriesControl};

/// Transition intensities of the two-state chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeRates {
    /// Rate of leaving regime 1 (1 -> 2), per unit time.
    pub lambda12: f64,
    /// Rate of leaving regime 2 (2 -> 1), per unit time.
    pub lambda21: f64,
}

impl RegimeRates {
    pub fn new(lambda12: f64, lambda21: f64) -> Result<Self> {
        let r = Self { lambda12, lambda21 };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda12 > 0.0 && self.lambda12.is_finite()) {
            return domain(format!("lambda12 = {} must be positive", self.lambda12));
        }
        if !(self.lambda21 > self.lambda12 && self.lambda21.is_finite()) {
            return domain(format!(
                "lambda21 = {} must exceed lambda12 = {}",
                self.lambda21, self.lambda12
            ));
        }
        Ok(())
    }

    /// Rates of the holding times after an Esscher tilt: `lambda - theta`.
    pub fn tilted(&self, theta: f64) -> Result<Self> {
        if !(theta < self.lambda12) {
            return domain(format!(
                "Esscher parameter theta = {theta} must be below lambda12 = {}",
                self.lambda12
            ));
        }
        Ok(Self {
            lambda12: self.lambda12 - theta,
            lambda21: self.lambda21 - theta,
        })
    }

    /// `1 - lambda12 / lambda21`, the ratio appearing in every `C(m, n, l)`.
    pub fn rho(&self) -> f64 {
        1.0 - self.lambda12 / self.lambda21
    }
}

/// Truncation of the switch-count sums (`K`) and of the inner l-series (`L`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountTruncation {
    pub max_switches: usize,
    pub series_terms: usize,
}

impl Default for CountTruncation {
    fn default() -> Self {
        Self {
            max_switches: 40,
            series_terms: 40,
        }
    }
}

impl CountTruncation {
    /// Light truncation for plotting: ten terms in each series.
    pub fn figure() -> Self {
        Self {
            max_switches: 10,
            series_terms: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_switches < 2 || !self.max_switches.is_multiple_of(2) {
            return domain("max_switches must be an even integer >= 2");
        }
        if self.series_terms < 1 {
            return domain("series_terms must be >= 1");
        }
        Ok(())
    }

    /// Number of (even, odd) count pairs kept: counts `0..=max_switches + 1`.
    pub fn pairs(&self) -> usize {
        self.max_switches / 2 + 1
    }
}

/// `D(m, n, l) = lambda12^m / (lambda21^n Gamma(l))`, with `D(m, n, 0) = 0`.
pub fn coeff_d(m: f64, n: f64, l: u32, rates: &RegimeRates) -> f64 {
    if l == 0 {
        return 0.0;
    }
    rates.lambda12.powf(m) / (rates.lambda21.powf(n) * gamma(l as f64))
}

/// Tilted coefficient `(lambda12 - theta)^m / ((lambda21 - theta)^n Gamma(l))`.
pub fn coeff_d_tilted(m: f64, n: f64, l: u32, rates: &RegimeRates, theta: f64) -> Result<f64> {
    Ok(coeff_d(m, n, l, &rates.tilted(theta)?))
}

/// `C(m, n, l) = m^(l) (1 - lambda12/lambda21)^l / (n^(l) l!)`, `C(m, n, 0) = 1`.
pub fn coeff_c(m: f64, n: f64, l: u32, rates: &RegimeRates) -> f64 {
    if l == 0 {
        return 1.0;
    }
    pochhammer(m, l) * rates.rho().powi(l as i32) / (pochhammer(n, l) * gamma(l as f64 + 1.0))
}

/// Holding-time counts `(a, b)` making up the `k`-th switching time:
/// `a` exponentials of rate `lambda12`, `b` of rate `lambda21`.
fn erlang_split(k_index: usize) -> (usize, usize) {
    (k_index.div_ceil(2), k_index / 2)
}

/// Density of the `k_index`-th switching time at `x`.
pub fn tau_pdf(k_index: usize, x: f64, rates: &RegimeRates, ctrl: &SeriesControl) -> Result<f64> {
    if k_index == 0 {
        return domain("tau_pdf: k_index must be >= 1");
    }
    if !(x >= 0.0) {
        return domain(format!("tau_pdf: x = {x} must be >= 0"));
    }
    let (a, b) = erlang_split(k_index);
    let shape = (a + b) as f64;
    if x == 0.0 {
        return Ok(if k_index == 1 { rates.lambda12 } else { 0.0 });
    }
    // D(a, -b, a+b) x^{a+b-1} e^{-lambda21 x}, assembled in logs
    let log_pref = a as f64 * rates.lambda12.ln() + b as f64 * rates.lambda21.ln()
        - ln_gamma(shape)
        + (shape - 1.0) * x.ln()
        - rates.lambda21 * x;
    let m = kummer_m(a as f64, shape, (rates.lambda21 - rates.lambda12) * x, ctrl)?;
    Ok(log_pref.exp() * m.value)
}

/// A truncated series value with the magnitude of its last included term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncated {
    pub value: f64,
    pub last_term: f64,
    /// Set when the last included term is not negligible.
    pub warning: bool,
}

/// Threshold above which the last l-term of a cdf series triggers a warning.
pub const CDF_TERM_TOL: f64 = 1e-12;

/// Cdf of the `k_index`-th switching time, `P(tau_k <= t)`.
///
/// The l-series `D C gamma` is evaluated in the equivalent regularized form
/// `(lambda12/lambda21)^a sum_l a^(l) rho^l / l! P(a + b + l, lambda21 t)`,
/// which stays finite for every truncation. `tau_cdf(0, t) = 1`.
pub fn tau_cdf(
    k_index: usize,
    t: f64,
    rates: &RegimeRates,
    trunc: &CountTruncation,
) -> Result<Truncated> {
    if !(t >= 0.0) {
        return domain(format!("tau_cdf: t = {t} must be >= 0"));
    }
    if k_index == 0 {
        return Ok(Truncated {
            value: 1.0,
            last_term: 0.0,
            warning: false,
        });
    }
    if t == 0.0 {
        return Ok(Truncated {
            value: 0.0,
            last_term: 0.0,
            warning: false,
        });
    }
    let (a, b) = erlang_split(k_index);
    let af = a as f64;
    let rho = rates.rho();
    let x = rates.lambda21 * t;
    let mut coef = (rates.lambda12 / rates.lambda21).powi(a as i32);
    let mut sum = 0.0;
    let mut last = 0.0;
    for l in 0..trunc.series_terms {
        if l > 0 {
            coef *= (af + (l - 1) as f64) * rho / l as f64;
        }
        let term = coef * regularized_lower_gamma((a + b + l) as f64, x)?;
        sum += term;
        last = term.abs();
    }
    Ok(Truncated {
        value: sum,
        last_term: last,
        warning: last > CDF_TERM_TOL * sum.abs().max(1.0),
    })
}

/// Tolerance for clamping slightly negative differences of truncated series.
pub const NEGATIVE_CLAMP: f64 = 1e-10;

fn clamp_probability(k: usize, value: f64) -> Result<f64> {
    if value < -NEGATIVE_CLAMP {
        return Err(Error::NegativeProbability { k, value });
    }
    Ok(value.max(0.0))
}

/// `p_k(t) = P(N_t = k) = F_{tau_k}(t) - F_{tau_{k+1}}(t)`.
pub fn count_prob(k: usize, t: f64, rates: &RegimeRates, trunc: &CountTruncation) -> Result<f64> {
    let hi = tau_cdf(k, t, rates, trunc)?.value;
    let lo = tau_cdf(k + 1, t, rates, trunc)?.value;
    clamp_probability(k, hi - lo)
}

/// `p_0(t), ..., p_{max_k}(t)` sharing the cdf evaluations.
pub fn count_probs(
    max_k: usize,
    t: f64,
    rates: &RegimeRates,
    trunc: &CountTruncation,
) -> Result<Vec<f64>> {
    let cdf = tau_cdfs(max_k + 1, t, rates, trunc)?;
    (0..=max_k)
        .map(|k| clamp_probability(k, cdf[k] - cdf[k + 1]))
        .collect()
}

fn tau_cdfs(
    max_k: usize,
    t: f64,
    rates: &RegimeRates,
    trunc: &CountTruncation,
) -> Result<Vec<f64>> {
    (0..=max_k)
        .map(|k| tau_cdf(k, t, rates, trunc).map(|v| v.value))
        .collect()
}

/// Relative size of the last kept MGF term above which the truncated sum is
/// treated as divergent.
pub const MGF_TAIL_TOL: f64 = 1e-7;

/// `M_{N_t}(theta) = E[e^{theta N_t}]`, summed pairwise as
/// `sum_k e^{2k theta} (F_{2k} + (e^theta - 1) F_{2k+1} - e^theta F_{2k+2})`.
pub fn count_mgf(theta: f64, t: f64, rates: &RegimeRates, trunc: &CountTruncation) -> Result<f64> {
    rates.tilted(theta)?;
    if t == 0.0 {
        return Ok(1.0);
    }
    let pairs = trunc.pairs();
    let cdf = tau_cdfs(2 * pairs, t, rates, trunc)?;
    let et = theta.exp();
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut last = 0.0;
    for k in 0..pairs {
        let pair = cdf[2 * k] + (et - 1.0) * cdf[2 * k + 1] - et * cdf[2 * k + 2];
        let term = (2.0 * k as f64 * theta).exp() * pair.max(0.0);
        sum += term;
        prev = last;
        last = term;
    }
    check_mgf_tail(theta, t, sum, last, prev)?;
    Ok(sum)
}

fn check_mgf_tail(theta: f64, t: f64, sum: f64, last: f64, prev: f64) -> Result<()> {
    let growing = last > 0.0 && last >= prev;
    if !sum.is_finite() || last > MGF_TAIL_TOL * sum || (growing && last > f64::EPSILON * sum) {
        return Err(Error::DivergentMgf { theta, t });
    }
    Ok(())
}

/// Distribution of `N_t` under the Esscher measure with parameter `theta`,
/// truncated to counts `0..=max_switches + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedCounts {
    pub theta: f64,
    pub t: f64,
    pub mgf: f64,
    /// `p^theta_k(t)` for `k = 0..=max_switches + 1`.
    pub probs: Vec<f64>,
}

impl TiltedCounts {
    pub fn new(t: f64, theta: f64, rates: &RegimeRates, trunc: &CountTruncation) -> Result<Self> {
        rates.tilted(theta)?;
        if !(t >= 0.0) {
            return domain(format!("t = {t} must be >= 0"));
        }
        let max_k = trunc.max_switches + 1;
        let mut probs = if t == 0.0 {
            let mut v = vec![0.0; max_k + 1];
            v[0] = 1.0;
            v
        } else {
            count_probs(max_k, t, rates, trunc)?
        };
        let mgf = count_mgf(theta, t, rates, trunc)?;
        for (k, p) in probs.iter_mut().enumerate() {
            *p *= (theta * k as f64).exp() / mgf;
        }
        Ok(Self {
            theta,
            t,
            mgf,
            probs,
        })
    }

    pub fn prob(&self, k: usize) -> f64 {
        self.probs.get(k).copied().unwrap_or(0.0)
    }

    /// Probability of an odd number of switches.
    pub fn odd(&self) -> f64 {
        self.probs.iter().skip(1).step_by(2).sum()
    }

    pub fn even(&self) -> f64 {
        self.probs.iter().step_by(2).sum()
    }

    /// `E_theta[N_t] = sum_k k p^theta_k`.
    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum()
    }

    /// `sum_k k (p^theta_{2k} + p^theta_{2k+1})`: expected number of completed
    /// (regime 1, regime 2) cycles.
    pub fn mean_cycles(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(j, p)| (j / 2) as f64 * p)
            .sum()
    }
}

/// `p^theta_k(t) = e^{theta k} p_k(t) / M_{N_t}(theta)`.
pub fn tilted_count_prob(
    k: usize,
    t: f64,
    theta: f64,
    rates: &RegimeRates,
    trunc: &CountTruncation,
) -> Result<f64> {
    Ok(TiltedCounts::new(t, theta, rates, trunc)?.prob(k))
}

/// Probability of an odd number of switches on `[0, t)` under the tilt.
pub fn odd_count_prob(
    t: f64,
    theta: f64,
    rates: &RegimeRates,
    trunc: &CountTruncation,
) -> Result<f64> {
    Ok(TiltedCounts::new(t, theta, rates, trunc)?.odd())
}

/// Density of the `k_index`-th switching time when the holding times have
/// rates `lambda12 - theta` and `lambda21 - theta`.
pub fn tilted_tau_pdf(
    k_index: usize,
    x: f64,
    theta: f64,
    rates: &RegimeRates,
    ctrl: &SeriesControl,
) -> Result<f64> {
    tau_pdf(k_index, x, &rates.tilted(theta)?, ctrl)
}

/// Cdf counterpart of [`tilted_tau_pdf`].
pub fn tilted_tau_cdf(
    k_index: usize,
    t: f64,
    theta: f64,
    rates: &RegimeRates,
    trunc: &CountTruncation,
) -> Result<Truncated> {
    tau_cdf(k_index, t, &rates.tilted(theta)?, trunc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::lower_incomplete_gamma;
    use proptest::prelude::*;

    fn desk() -> RegimeRates {
        RegimeRates::new(10.0, 20.0).unwrap()
    }

    fn wide() -> CountTruncation {
        CountTruncation {
            max_switches: 40,
            series_terms: 40,
        }
    }

    #[test]
    fn rates_validation() {
        assert!(RegimeRates::new(20.0, 10.0).is_err());
        assert!(RegimeRates::new(0.0, 10.0).is_err());
        assert!(RegimeRates::new(10.0, 10.0).is_err());
        assert!(desk().tilted(10.0).is_err());
        let t = desk().tilted(-1.0).unwrap();
        assert_eq!((t.lambda12, t.lambda21), (11.0, 21.0));
    }

    #[test]
    fn truncation_validation() {
        assert!(CountTruncation {
            max_switches: 3,
            series_terms: 5
        }
        .validate()
        .is_err());
        assert!(CountTruncation {
            max_switches: 0,
            series_terms: 5
        }
        .validate()
        .is_err());
        assert!(CountTruncation {
            max_switches: 4,
            series_terms: 0
        }
        .validate()
        .is_err());
        assert!(wide().validate().is_ok());
    }

    #[test]
    fn coefficient_d_values() {
        let r = desk();
        assert!((coeff_d(1.0, 1.0, 1, &r) - 0.5).abs() < 1e-15);
        assert_eq!(coeff_d(3.0, 2.0, 0, &r), 0.0);
        let v = coeff_d(2.0, -2.0, 4, &r);
        assert!((v - 100.0 * 400.0 / 6.0).abs() < 1e-9);
    }

    #[test]
    fn coefficient_c_values() {
        let r = desk();
        assert_eq!(coeff_c(2.0, 3.0, 0, &r), 1.0);
        assert!((coeff_c(1.0, 1.0, 2, &r) - 0.125).abs() < 1e-15);
        assert!((coeff_c(1.0, 2.0, 1, &r) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn tilted_coefficient_shifts_both_rates() {
        let r = desk();
        let v = coeff_d_tilted(2.0, 1.0, 3, &r, 1.5).unwrap();
        assert!((v - 8.5f64.powi(2) / (18.5 * 2.0)).abs() < 1e-12);
    }

    #[test]
    fn first_switch_is_exponential() {
        let r = desk();
        let ctrl = SeriesControl::default();
        for &x in &[0.0, 0.05, 0.3, 1.2] {
            let v = tau_pdf(1, x, &r, &ctrl).unwrap();
            assert!((v - 10.0 * (-10.0 * x).exp()).abs() < 1e-12, "x={x}");
        }
        let trunc = CountTruncation {
            max_switches: 40,
            series_terms: 40,
        };
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            let v = tau_cdf(1, t, &r, &trunc).unwrap().value;
            assert!((v - (1.0 - (-10.0 * t).exp())).abs() < 1e-8);
        }
    }

    #[test]
    fn second_switch_matches_convolution() {
        // f_{tau_2} = Exp(10) * Exp(20), convolved by the trapezoid rule
        let r = desk();
        let x = 0.1;
        let n = 20_000;
        let h = x / n as f64;
        let g = |s: f64| 10.0 * (-10.0 * s).exp() * 20.0 * (-20.0 * (x - s)).exp();
        let conv = h * ((1..n).map(|i| g(i as f64 * h)).sum::<f64>() + 0.5 * (g(0.0) + g(x)));
        let v = tau_pdf(2, x, &r, &SeriesControl::default()).unwrap();
        assert!((v - conv).abs() < 1e-6 * conv, "{v} vs {conv}");
    }

    #[test]
    fn cdf_matches_literal_coefficient_product() {
        // D(k,k,2k) sum C(k,2k,l) gamma(2k+l, lambda21 t) and the odd analogue
        let r = desk();
        let trunc = CountTruncation {
            max_switches: 10,
            series_terms: 25,
        };
        let t = 0.3;
        for k in 1..=4u32 {
            let kf = k as f64;
            let even: f64 = (0..25)
                .map(|l| {
                    coeff_c(kf, 2.0 * kf, l, &r)
                        * lower_incomplete_gamma(2.0 * kf + l as f64, 20.0 * t).unwrap()
                })
                .sum::<f64>()
                * coeff_d(kf, kf, 2 * k, &r);
            let odd: f64 = (0..25)
                .map(|l| {
                    coeff_c(kf + 1.0, 2.0 * kf + 1.0, l, &r)
                        * lower_incomplete_gamma(2.0 * kf + 1.0 + l as f64, 20.0 * t).unwrap()
                })
                .sum::<f64>()
                * coeff_d(kf + 1.0, kf + 1.0, 2 * k + 1, &r);
            let e = tau_cdf(2 * k as usize, t, &r, &trunc).unwrap().value;
            let o = tau_cdf(2 * k as usize + 1, t, &r, &trunc).unwrap().value;
            assert!((e - even).abs() < 1e-13, "k={k}: {e} vs {even}");
            assert!((o - odd).abs() < 1e-13, "k={k}: {o} vs {odd}");
        }
    }

    #[test]
    fn cdf_at_zero_and_index_zero() {
        let r = desk();
        for k in 1..6 {
            assert_eq!(tau_cdf(k, 0.0, &r, &wide()).unwrap().value, 0.0);
        }
        assert_eq!(tau_cdf(0, 0.7, &r, &wide()).unwrap().value, 1.0);
    }

    #[test]
    fn short_series_warns() {
        let r = desk();
        let trunc = CountTruncation {
            max_switches: 10,
            series_terms: 3,
        };
        assert!(tau_cdf(6, 1.0, &r, &trunc).unwrap().warning);
        assert!(!tau_cdf(6, 0.05, &r, &wide()).unwrap().warning);
    }

    #[test]
    fn no_switch_probability() {
        let r = desk();
        for &t in &[1.0 / 12.0, 0.25, 1.0] {
            let p0 = count_prob(0, t, &r, &wide()).unwrap();
            assert!((p0 - (-10.0 * t).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn counts_are_normalized() {
        let r = desk();
        for &t in &[1.0 / 12.0, 0.25, 1.0] {
            let s: f64 = count_probs(40, t, &r, &wide()).unwrap().iter().sum();
            assert!((s - 1.0).abs() < 1e-6, "t={t}: {s}");
        }
    }

    #[test]
    fn negative_difference_is_an_error() {
        assert!(clamp_probability(3, -1e-11).unwrap() == 0.0);
        assert!(matches!(
            clamp_probability(3, -1e-6),
            Err(Error::NegativeProbability { k: 3, .. })
        ));
    }

    #[test]
    fn mgf_identities() {
        let r = desk();
        assert!((count_mgf(0.0, 0.5, &r, &wide()).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(count_mgf(0.7, 0.0, &r, &wide()).unwrap(), 1.0);
        let t = 1.0 / 12.0;
        let direct: f64 = count_probs(41, t, &r, &wide())
            .unwrap()
            .iter()
            .enumerate()
            .map(|(k, p)| (0.3 * k as f64).exp() * p)
            .sum();
        let m = count_mgf(0.3, t, &r, &wide()).unwrap();
        assert!((m - direct).abs() < 1e-12 * m);
        assert!(m > 1.0);
    }

    #[test]
    fn mgf_divergence_detected() {
        let r = desk();
        let trunc = CountTruncation {
            max_switches: 10,
            series_terms: 40,
        };
        assert!(matches!(
            count_mgf(5.0, 1.0, &r, &trunc),
            Err(Error::DivergentMgf { .. })
        ));
    }

    #[test]
    fn tilted_counts_basics() {
        let r = desk();
        let t = 0.25;
        let untilted = count_probs(41, t, &r, &wide()).unwrap();
        let zero = TiltedCounts::new(t, 0.0, &r, &wide()).unwrap();
        for (a, b) in zero.probs.iter().zip(&untilted) {
            assert!((a - b).abs() < 1e-12);
        }
        let tilted = TiltedCounts::new(t, 0.5, &r, &wide()).unwrap();
        let s: f64 = tilted.probs.iter().sum();
        assert!((s - 1.0).abs() < 1e-6);
        let expect = 0.5f64.exp() * untilted[1] / count_mgf(0.5, t, &r, &wide()).unwrap();
        assert!((tilted.prob(1) - expect).abs() < 1e-14);
        assert!((tilted.odd() + tilted.even() - 1.0).abs() < 1e-6);
        assert_eq!(odd_count_prob(0.0, 0.4, &r, &wide()).unwrap(), 0.0);
        assert!(tilted_count_prob(2, t, 11.0, &r, &wide()).is_err());
    }

    fn trapezoid_pdf_integral(k: usize, rates: &RegimeRates) -> f64 {
        // Upper cut where the slowest exponential envelope is below 1e-14,
        // pushed out for the polynomial factor of higher switching times.
        let x_max = (32.2 + 2.0 * k as f64 * 3.0) / rates.lambda12;
        let n = 40_000;
        let h = x_max / n as f64;
        let ctrl = SeriesControl::default();
        let f = |x: f64| tau_pdf(k, x, rates, &ctrl).unwrap();
        h * ((1..n).map(|i| f(i as f64 * h)).sum::<f64>() + 0.5 * (f(0.0) + f(x_max)))
    }

    #[test]
    fn densities_integrate_to_one() {
        let r = desk();
        for k in 1..=5 {
            let v = trapezoid_pdf_integral(k, &r);
            assert!((v - 1.0).abs() < 1e-6, "k={k}: {v}");
        }
    }

    #[test]
    fn tilted_densities_integrate_to_one() {
        let r = desk();
        for &theta in &[-3.0, 0.5, 6.0] {
            let tr = r.tilted(theta).unwrap();
            for k in 1..=5 {
                let v = trapezoid_pdf_integral(k, &tr);
                assert!((v - 1.0).abs() < 1e-6, "theta={theta} k={k}: {v}");
            }
        }
    }

    #[test]
    fn cdf_agrees_with_integrated_density() {
        let r = desk();
        let ctrl = SeriesControl::default();
        for k in 1..=5 {
            for &t in &[0.1, 0.4, 1.0] {
                let n = 20_000;
                let h = t / n as f64;
                let f = |x: f64| tau_pdf(k, x, &r, &ctrl).unwrap();
                let q = h * ((1..n).map(|i| f(i as f64 * h)).sum::<f64>() + 0.5 * (f(0.0) + f(t)));
                let s = tau_cdf(k, t, &r, &wide()).unwrap().value;
                assert!((q - s).abs() < 1e-6, "k={k} t={t}: {q} vs {s}");
            }
        }
    }

    proptest! {
        #[test]
        fn switching_times_are_ordered(t in 0.0f64..2.0, l12 in 0.5f64..15.0, gap in 0.1f64..15.0, k in 1usize..12) {
            let r = RegimeRates::new(l12, l12 + gap).unwrap();
            let a = tau_cdf(k, t, &r, &wide()).unwrap().value;
            let b = tau_cdf(k + 1, t, &r, &wide()).unwrap().value;
            prop_assert!(a >= b - 1e-12, "{} < {}", a, b);
        }

        #[test]
        fn cdf_is_monotone_in_time(t in 0.0f64..1.5, dt in 0.0f64..0.5, k in 1usize..10) {
            let r = desk();
            let a = tau_cdf(k, t, &r, &wide()).unwrap().value;
            let b = tau_cdf(k, t + dt, &r, &wide()).unwrap().value;
            prop_assert!(a <= b + 1e-12);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&b));
        }
    }
}
