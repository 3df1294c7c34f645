//! Monte Carlo simulation of the regime chain, the subordinated noises and
//! the temperature at the horizon.
//!
//! Path `i` draws from its own ChaCha8 stream `(seed, i)`, so results do not
//! depend on the number of threads or on scheduling.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, InverseGaussian, StandardNormal};
use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::model::{c1, ModelParams, Regime};
use crate::noise::{SubordinatorKind, SubordinatorSpec};
use crate::regimes::RegimeRates;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub paths: usize,
    /// Time-grid density, steps per unit time.
    pub steps_per_unit: usize,
    pub seed: u64,
    pub horizon: f64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.paths < 1 {
            return domain("paths must be >= 1");
        }
        if self.steps_per_unit < 100 {
            return domain("steps_per_unit must be >= 100");
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return domain(format!("horizon {} must be >= 0", self.horizon));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub switch_times: Vec<f64>,
    pub terminal_w: f64,
    pub terminal_t: f64,
    pub n_switches: usize,
}

/// Random stream of path `index`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Switching times on `[0, horizon)`, starting in regime 1.
pub fn simulate_regime_sequence<R: Rng + ?Sized>(
    rates: &RegimeRates,
    horizon: f64,
    rng: &mut R,
) -> Vec<f64> {
    let leave1 = Exp::new(rates.lambda12).expect("positive rate");
    let leave2 = Exp::new(rates.lambda21).expect("positive rate");
    let mut times = Vec::new();
    let mut now = 0.0;
    let mut in_one = true;
    loop {
        now += if in_one {
            leave1.sample(rng)
        } else {
            leave2.sample(rng)
        };
        if now >= horizon {
            return times;
        }
        times.push(now);
        in_one = !in_one;
    }
}

/// Increment of the subordinator over `dt`.
///
/// Gamma: shape `a dt`, rate `b`. Inverse Gaussian: mean `a dt / b`, shape
/// `(a dt)^2`, the law with Laplace exponent `a dt (sqrt(b^2 + 2s) - b)`.
pub fn simulate_subordinator_increment<R: Rng + ?Sized>(
    spec: &SubordinatorSpec,
    dt: f64,
    rng: &mut R,
) -> f64 {
    let ad = spec.a * dt;
    match spec.kind {
        SubordinatorKind::Gamma => Gamma::new(ad, 1.0 / spec.b)
            .expect("positive parameters")
            .sample(rng),
        SubordinatorKind::InverseGaussian => InverseGaussian::new(ad / spec.b, ad * ad)
            .expect("positive parameters")
            .sample(rng)
            .max(0.0),
    }
}

/// One path of `W_t = int_0^t e^{alpha s} dV^{regime(s)}_s` and `T_t`.
///
/// Each regime segment is cut on the uniform grid of step
/// `1 / steps_per_unit`, with the switching times added as nodes; every
/// sub-interval contributes `e^{alpha s_mid} (sqrt(dR) Z + mu dR)`.
pub fn simulate_w<R: Rng + ?Sized>(p: &ModelParams, cfg: &SimConfig, rng: &mut R) -> PathSample {
    let horizon = cfg.horizon;
    let switch_times = simulate_regime_sequence(&p.rates, horizon, rng);
    let step = 1.0 / cfg.steps_per_unit as f64;
    let mut w = 0.0;
    let mut start = 0.0;
    for (j, &end) in switch_times
        .iter()
        .chain(std::iter::once(&horizon))
        .enumerate()
    {
        let regime = if j % 2 == 0 { Regime::One } else { Regime::Two };
        let noise = p.noise(regime);
        let mut a = start;
        while a < end {
            let mut node = (a / step).floor() + 1.0;
            if node * step <= a {
                node += 1.0;
            }
            let b = (node * step).min(end);
            let dt = b - a;
            if dt > 0.0 {
                let dr = simulate_subordinator_increment(&noise.subordinator, dt, rng);
                let z: f64 = rng.sample(StandardNormal);
                let mid = 0.5 * (a + b);
                w += (p.alpha * mid).exp() * (dr.sqrt() * z + noise.mu1 * dr);
            }
            a = b;
        }
        start = end;
    }
    PathSample {
        n_switches: switch_times.len(),
        switch_times,
        terminal_w: w,
        terminal_t: c1(horizon, p) + p.sigma * (-p.alpha * horizon).exp() * w,
    }
}

/// Terminal `W` on the grid of `cfg` and on the grid twice as fine, driven by
/// the same randomness: the coarse increment over a cell is the sum of the
/// two fine increments, which has the same law as a direct coarse draw.
pub fn simulate_w_refinement_pair<R: Rng + ?Sized>(
    p: &ModelParams,
    cfg: &SimConfig,
    rng: &mut R,
) -> (f64, f64) {
    let horizon = cfg.horizon;
    let switch_times = simulate_regime_sequence(&p.rates, horizon, rng);
    let step = 1.0 / cfg.steps_per_unit as f64;
    let (mut coarse, mut fine) = (0.0, 0.0);
    let mut start = 0.0;
    for (j, &end) in switch_times
        .iter()
        .chain(std::iter::once(&horizon))
        .enumerate()
    {
        let regime = if j % 2 == 0 { Regime::One } else { Regime::Two };
        let noise = p.noise(regime);
        let mut a = start;
        while a < end {
            let mut node = (a / step).floor() + 1.0;
            if node * step <= a {
                node += 1.0;
            }
            let b = (node * step).min(end);
            let half = (node - 0.5) * step;
            let cuts: &[f64] = if a < half && half < b {
                &[a, half, b]
            } else {
                &[a, b]
            };
            let (mut dr_sum, mut noise_sum) = (0.0, 0.0);
            for w in cuts.windows(2) {
                let dt = w[1] - w[0];
                if dt <= 0.0 {
                    continue;
                }
                let dr = simulate_subordinator_increment(&noise.subordinator, dt, rng);
                let z: f64 = rng.sample(StandardNormal);
                let gauss = dr.sqrt() * z;
                fine += (p.alpha * 0.5 * (w[0] + w[1])).exp() * (gauss + noise.mu1 * dr);
                dr_sum += dr;
                noise_sum += gauss;
            }
            coarse += (p.alpha * 0.5 * (a + b)).exp() * (noise_sum + noise.mu1 * dr_sum);
            a = b;
        }
        start = end;
    }
    (coarse, fine)
}

/// `cfg.paths` independent paths, in path-index order.
pub fn simulate_paths(p: &ModelParams, cfg: &SimConfig) -> Result<Vec<PathSample>> {
    p.validate()?;
    cfg.validate()?;
    Ok((0..cfg.paths as u64)
        .into_par_iter()
        .map(|i| simulate_w(p, cfg, &mut path_rng(cfg.seed, i)))
        .collect())
}

/// Number of switches on `[0, horizon)` for `paths` independent chains.
pub fn simulate_switch_counts(
    rates: &RegimeRates,
    horizon: f64,
    paths: usize,
    seed: u64,
) -> Vec<usize> {
    (0..paths as u64)
        .into_par_iter()
        .map(|i| simulate_regime_sequence(rates, horizon, &mut path_rng(seed, i)).len())
        .collect()
}

/// Frequencies of `0..=max_k` in `counts`.
pub fn count_histogram(counts: &[usize], max_k: usize) -> Vec<f64> {
    let mut h = vec![0.0; max_k + 1];
    for &c in counts {
        if c <= max_k {
            h[c] += 1.0;
        }
    }
    let n = counts.len().max(1) as f64;
    h.iter_mut().for_each(|v| *v /= n);
    h
}

/// Sample mean of `e^{i u X}` with standard errors of both components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalCf {
    pub u: f64,
    pub value: Complex64,
    pub se_re: f64,
    pub se_im: f64,
}

impl EmpiricalCf {
    /// Standard error of the modulus of the estimation error.
    pub fn se(&self) -> f64 {
        self.se_re.hypot(self.se_im)
    }
}

pub fn empirical_cf(samples: &[f64], u_grid: &[f64]) -> Result<Vec<EmpiricalCf>> {
    if samples.is_empty() {
        return domain("empirical_cf needs at least one sample");
    }
    let n = samples.len() as f64;
    Ok(u_grid
        .par_iter()
        .map(|&u| {
            let (mut sc, mut ss, mut sc2, mut ss2) = (0.0, 0.0, 0.0, 0.0);
            for &x in samples {
                let (s, c) = (u * x).sin_cos();
                sc += c;
                ss += s;
                sc2 += c * c;
                ss2 += s * s;
            }
            let (mc, ms) = (sc / n, ss / n);
            let var = |m2: f64, m: f64| {
                if n > 1.0 {
                    ((m2 / n - m * m).max(0.0)) * n / (n - 1.0)
                } else {
                    0.0
                }
            };
            EmpiricalCf {
                u,
                value: Complex64::new(mc, ms),
                se_re: (var(sc2, mc) / n).sqrt(),
                se_im: (var(ss2, ms) / n).sqrt(),
            }
        })
        .collect())
}

/// Sample mean and its standard error.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
