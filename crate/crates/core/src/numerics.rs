//! Quadrature and truncation policy shared by the characteristic-function
//! engine.
//!
//! Finite intervals use the plain composite trapezoid rule. Integrals against
//! an exponential or Gamma-shaped weight interpolate the smooth factor only
//! (quadratically on the half-line, linearly on Gamma kernels) and integrate
//! the weight exactly, so a constant smooth factor is integrated without
//! error.

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::specfun::{regularized_gamma_pair, SeriesControl};

/// Hard ceiling on the number of panels a single half-line integral may use.
pub const MAX_HALFLINE_NODES: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Trapezoid density in nodes per unit of the integration variable.
    pub nodes_per_unit: usize,
    pub min_nodes: usize,
    /// Half-line integrals are cut where `exp(-rate * x)` drops below this.
    pub halfline_envelope_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            nodes_per_unit: 256,
            min_nodes: 64,
            halfline_envelope_tol: 1e-12,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_unit < 8 {
            return domain("QuadratureConfig.nodes_per_unit must be >= 8");
        }
        if self.min_nodes < 16 {
            return domain("QuadratureConfig.min_nodes must be >= 16");
        }
        if !(self.halfline_envelope_tol > 0.0 && self.halfline_envelope_tol <= 1e-6) {
            return domain("QuadratureConfig.halfline_envelope_tol must lie in (0, 1e-6]");
        }
        Ok(())
    }

    /// Panel count for an interval of the given length.
    pub fn panels(&self, length: f64) -> usize {
        let dense = (length * self.nodes_per_unit as f64).ceil();
        (dense as usize).max(self.min_nodes)
    }

    /// Same config with the node density multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            nodes_per_unit: self.nodes_per_unit * factor,
            min_nodes: self.min_nodes * factor,
            ..*self
        }
    }
}

/// Composite trapezoid rule on `[lo, hi]`.
pub fn trapezoid<F>(f: F, lo: f64, hi: f64, cfg: &QuadratureConfig) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    if !(lo <= hi) {
        return domain(format!("trapezoid: lo = {lo} exceeds hi = {hi}"));
    }
    if lo == hi {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let n = cfg.panels(hi - lo);
    let h = (hi - lo) / n as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..=n {
        let x = if i == n { hi } else { lo + i as f64 * h };
        let v = f(x);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::NonFiniteIntegrand { x });
        }
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        acc += v * w;
    }
    Ok(acc * h)
}

/// Trapezoid rule over equally spaced samples with spacing `h`.
pub fn trapezoid_samples(values: &[Complex64], h: f64) -> Complex64 {
    match values.len() {
        0 | 1 => Complex64::new(0.0, 0.0),
        n => {
            let inner: Complex64 = values[1..n - 1].iter().sum();
            (inner + (values[0] + values[n - 1]) * 0.5) * h
        }
    }
}

/// Running trapezoid integral: `out[i]` approximates the integral from the
/// first node to node `i`.
pub fn cumulative_trapezoid(values: &[Complex64], h: f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            acc += (values[i - 1] + v) * (0.5 * h);
        }
        out.push(acc);
    }
    out
}

/// `int_0^2 s^k e^{-beta s} ds` for `k = 0, 1, 2`.
fn exp_moments(beta: f64) -> [f64; 3] {
    if beta < 0.5 {
        // power series; terms shrink like (2 beta)^j / j!
        let mut m = [0.0; 3];
        let mut c = 1.0;
        for j in 0..40 {
            for (k, mk) in m.iter_mut().enumerate() {
                *mk += c * 2f64.powi((k + j + 1) as i32) / (k + j + 1) as f64;
            }
            c *= -beta / (j + 1) as f64;
        }
        m
    } else {
        let e = (-2.0 * beta).exp();
        let m0 = (1.0 - e) / beta;
        let m1 = (m0 - 2.0 * e) / beta;
        let m2 = (2.0 * m1 - 4.0 * e) / beta;
        [m0, m1, m2]
    }
}

/// Weights of `int_0^{2h} phi(y) e^{-d y} dy` with `phi` the quadratic
/// through its values at `0, h, 2h`.
fn exp_pair_weights(decay: f64, h: f64) -> [f64; 3] {
    let [m0, m1, m2] = exp_moments(decay * h);
    [
        0.5 * h * (m2 - 3.0 * m1 + 2.0 * m0),
        -h * (m2 - 2.0 * m1),
        0.5 * h * (m2 - m1),
    ]
}

/// `int_0^inf f(x) dx` for integrands bounded by `C e^{-decay_rate x}`.
///
/// The integrand is written as `phi(x) e^{-decay_rate x}`; `phi` is
/// interpolated by a quadratic on each pair of panels and the exponential is
/// integrated exactly. The cut sits at `x_max = -ln(halfline_envelope_tol) / decay_rate`.
/// The march stops earlier when the remaining mass `|f(x)| / decay_rate` is
/// negligible, or when `phi` has been exactly constant over a full window, in
/// which case the exact exponential tail is added.
pub fn halfline_integral<F>(f: F, decay_rate: f64, cfg: &QuadratureConfig) -> Result<Complex64>
where
    F: FnMut(f64) -> Complex64,
{
    if !(decay_rate > 0.0) || !decay_rate.is_finite() {
        return domain(format!(
            "halfline_integral: decay rate {decay_rate} must be positive"
        ));
    }
    let x_max = -cfg.halfline_envelope_tol.ln() / decay_rate;
    let n = cfg.panels(x_max);
    let h = x_max / n as f64;
    halfline_on_grid(f, decay_rate, h, n, cfg)
}

/// Half-line integral on an explicit grid `x_i = i h`, `i = 0..=n`.
pub(crate) fn halfline_on_grid<F>(
    mut f: F,
    decay: f64,
    h: f64,
    n: usize,
    cfg: &QuadratureConfig,
) -> Result<Complex64>
where
    F: FnMut(f64) -> Complex64,
{
    let n = n + n % 2;
    let window = cfg.min_nodes;
    let [w0, w1, w2] = exp_pair_weights(decay, h);
    let g1 = (decay * h).exp();
    let g2 = g1 * g1;
    let mut eval = |i: usize| -> Result<(f64, Complex64)> {
        let x = i as f64 * h;
        let v = f(x);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::NonFiniteIntegrand { x });
        }
        Ok((x, v))
    };
    let mut acc = Complex64::new(0.0, 0.0);
    let (_, mut prev) = eval(0)?;
    // phi at the start of the current window, to detect a flat tail
    let mut window_phi = prev;
    let mut window_start = 0usize;
    let mut i = 0;
    while i < n {
        if i + 2 > MAX_HALFLINE_NODES {
            return Err(Error::QuadratureBudget {
                max_nodes: MAX_HALFLINE_NODES,
            });
        }
        let (_, mid) = eval(i + 1)?;
        let (x, cur) = eval(i + 2)?;
        acc += prev * w0 + mid * (g1 * w1) + cur * (g2 * w2);
        prev = cur;
        i += 2;

        if i < window {
            continue;
        }
        let tail_bound = cur.norm() / decay;
        if tail_bound <= cfg.halfline_envelope_tol * acc.norm() {
            break;
        }
        if i - window_start >= window {
            let phi = cur * (decay * x).exp();
            if (phi - window_phi).norm() <= 1e-13 * phi.norm().max(f64::MIN_POSITIVE) {
                acc += cur / decay;
                break;
            }
            window_phi = phi;
            window_start = i;
        }
    }
    Ok(acc)
}

/// Outcome of a truncated infinite sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailSum {
    pub value: Complex64,
    pub terms: usize,
    pub last_term: f64,
    /// Set when `max_terms` was reached before the stopping rule fired.
    pub truncated: bool,
}

/// Sums `term(0) + term(1) + ...` until three consecutive terms satisfy
/// `|term| < rel_tol |partial| + abs_tol`, or `max_terms` is reached.
pub fn tail_sum<F>(mut term: F, ctrl: &SeriesControl) -> Result<TailSum>
where
    F: FnMut(usize) -> Result<Complex64>,
{
    let mut acc = Complex64::new(0.0, 0.0);
    let mut small_run = 0;
    let mut last = 0.0;
    for k in 0..ctrl.max_terms {
        let t = term(k)?;
        acc += t;
        last = t.norm();
        if last < ctrl.rel_tol * acc.norm() + ctrl.abs_tol {
            small_run += 1;
            if small_run == 3 {
                return Ok(TailSum {
                    value: acc,
                    terms: k + 1,
                    last_term: last,
                    truncated: false,
                });
            }
        } else {
            small_run = 0;
        }
    }
    Ok(TailSum {
        value: acc,
        terms: ctrl.max_terms,
        last_term: last,
        truncated: true,
    })
}

/// Product Simpson rule for `int_0^T phi(z) g_m(z) dz`, where `g_m` is the
/// Gamma(m, rate) density and `phi` is sampled on the uniform grid
/// `z_i = i T / n` (`n` even) and interpolated quadratically on panel pairs.
///
/// Weights depend only on the grid, the rate and the shape, so they are
/// built once and reused for every `phi`.
#[derive(Debug, Clone)]
pub struct GammaKernelRule {
    horizon: f64,
    panels: usize,
    rate: f64,
    /// `weights[m - 1][i]` for shapes `m = 1..=max_shape`.
    weights: Vec<Vec<f64>>,
    /// `P(m, rate * horizon)`: total mass of the kernel on `[0, T]`.
    mass: Vec<f64>,
}

impl GammaKernelRule {
    /// `panels` is rounded up to the next even number.
    pub fn new(horizon: f64, panels: usize, rate: f64, max_shape: usize) -> Result<Self> {
        if !(horizon > 0.0) || panels == 0 || !(rate > 0.0) || max_shape == 0 {
            return domain("GammaKernelRule: horizon, panels, rate and max_shape must be positive");
        }
        let panels = panels + panels % 2;
        let h = horizon / panels as f64;
        let z: Vec<f64> = (0..=panels)
            .map(|i| if i == panels { horizon } else { i as f64 * h })
            .collect();
        // (P, Q) of shape m at the pair boundaries, for m = 1..=max_shape + 2
        let mut pq = Vec::with_capacity(max_shape + 2);
        for m in 1..=max_shape + 2 {
            let row = z
                .iter()
                .step_by(2)
                .map(|&zi| regularized_gamma_pair(m as f64, rate * zi))
                .collect::<Result<Vec<_>>>()?;
            pq.push(row);
        }
        let diff = |row: &[(f64, f64)], j: usize| -> f64 {
            let (p0, q0) = row[j];
            let (p1, q1) = row[j + 1];
            if p1 < 0.5 {
                p1 - p0
            } else {
                q0 - q1
            }
        };
        let mut weights = Vec::with_capacity(max_shape);
        let mut mass = Vec::with_capacity(max_shape);
        for m in 1..=max_shape {
            let mf = m as f64;
            let mut w = vec![0.0; panels + 1];
            for j in 0..panels / 2 {
                let (i0, i1, i2) = (2 * j, 2 * j + 1, 2 * j + 2);
                let hw = 0.5 * (z[i2] - z[i0]);
                let zc = z[i1];
                // raw moments int z^r g_m over the pair
                let a0 = diff(&pq[m - 1], j);
                let a1 = mf / rate * diff(&pq[m], j);
                let a2 = mf * (mf + 1.0) / (rate * rate) * diff(&pq[m + 1], j);
                // moments about the pair midpoint
                let mu0 = a0;
                let mu1 = a1 - zc * a0;
                let mu2 = a2 - 2.0 * zc * a1 + zc * zc * a0;
                let hh = hw * hw;
                w[i0] += (mu2 - hw * mu1) / (2.0 * hh);
                w[i1] += (hh * mu0 - mu2) / hh;
                w[i2] += (mu2 + hw * mu1) / (2.0 * hh);
            }
            weights.push(w);
            mass.push(pq[m - 1][panels / 2].0);
        }
        Ok(Self {
            horizon,
            panels,
            rate,
            weights,
            mass,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn max_shape(&self) -> usize {
        self.weights.len()
    }

    /// Mass of the shape-`m` kernel on `[0, T]`, i.e. `P(m, rate T)`.
    pub fn mass(&self, m: usize) -> f64 {
        self.mass[m - 1]
    }

    /// `int_0^T phi(z) g_m(z) dz` with `phi[i]` sampled at `z_i`.
    pub fn integrate(&self, m: usize, phi: &[Complex64]) -> Complex64 {
        debug_assert_eq!(phi.len(), self.panels + 1);
        self.weights[m - 1]
            .iter()
            .zip(phi)
            .map(|(w, p)| p * *w)
            .sum()
    }
}
