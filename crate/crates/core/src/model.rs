//! Temperature model parameters, the seasonal mean and the deterministic
//! part `C_1` of the Ornstein-Uhlenbeck solution.

use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::noise::{NoiseSpec, SubordinatorSpec};
use crate::regimes::RegimeRates;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    One,
    Two,
}

impl Regime {
    pub fn index(self) -> usize {
        match self {
            Regime::One => 1,
            Regime::Two => 2,
        }
    }

    pub fn from_index(j: usize) -> Result<Self> {
        match j {
            1 => Ok(Regime::One),
            2 => Ok(Regime::Two),
            _ => domain(format!("regime index {j} must be 1 or 2")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Mean-reversion speed, per unit time.
    pub alpha: f64,
    pub sigma: f64,
    /// Seasonal coefficients `beta0 + beta1 t + beta2 sin(2 pi t/365) + beta3 cos(2 pi t/365)`.
    pub beta: [f64; 4],
    pub noise1: NoiseSpec,
    pub noise2: NoiseSpec,
    pub rates: RegimeRates,
    /// Interest rate, per unit time.
    pub r: f64,
    pub t0: f64,
}

impl ModelParams {
    /// Illustrative desk parameters used by the example config.
    pub fn desk() -> Self {
        Self {
            alpha: 2.0,
            sigma: 1.0,
            beta: [15.0, 0.0, 5.0, 2.0],
            noise1: NoiseSpec {
                subordinator: SubordinatorSpec::gamma(4.0, 4.0).expect("valid"),
                mu1: 0.1,
            },
            noise2: NoiseSpec {
                subordinator: SubordinatorSpec::gamma(8.0, 4.0).expect("valid"),
                mu1: -0.1,
            },
            rates: RegimeRates {
                lambda12: 10.0,
                lambda21: 20.0,
            },
            r: 0.02,
            t0: 16.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return domain(format!("alpha = {} must be positive", self.alpha));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return domain(format!("sigma = {} must be positive", self.sigma));
        }
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return domain(format!("r = {} must be nonnegative", self.r));
        }
        if !self.t0.is_finite() || self.beta.iter().any(|b| !b.is_finite()) {
            return domain("T0 and the seasonal coefficients must be finite");
        }
        self.rates.validate()?;
        NoiseSpec::new(self.noise1.subordinator, self.noise1.mu1)?;
        NoiseSpec::new(self.noise2.subordinator, self.noise2.mu1)?;
        Ok(())
    }

    pub fn noise(&self, regime: Regime) -> &NoiseSpec {
        match regime {
            Regime::One => &self.noise1,
            Regime::Two => &self.noise2,
        }
    }

    /// Rate of leaving `regime`.
    pub fn exit_rate(&self, regime: Regime) -> f64 {
        match regime {
            Regime::One => self.rates.lambda12,
            Regime::Two => self.rates.lambda21,
        }
    }
}

pub fn seasonal(t: f64, p: &ModelParams) -> f64 {
    let w = 2.0 * PI * t / 365.0;
    p.beta[0] + p.beta[1] * t + p.beta[2] * w.sin() + p.beta[3] * w.cos()
}

/// `C_1(t) = s_t + e^{-alpha t} (T_0 - s_0)`.
pub fn c1(t: f64, p: &ModelParams) -> f64 {
    seasonal(t, p) + (-p.alpha * t).exp() * (p.t0 - seasonal(0.0, p))
}
