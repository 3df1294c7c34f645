//! Run configuration: a TOML file with `[model]`, `[numerics]` and `[sim]`
//! sections whose keys are the field names of the library types.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use switching_levy::charfn::EvalContext;
use switching_levy::mc::SimConfig;
use switching_levy::model::ModelParams;
use switching_levy::noise::{NoiseSpec, SubordinatorKind, SubordinatorSpec};
use switching_levy::numerics::QuadratureConfig;
use switching_levy::regimes::{CountTruncation, RegimeRates};
use switching_levy::specfun::SeriesControl;

use crate::CliError;

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum Kind {
    Gamma,
    InverseGaussian,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ModelSection {
    alpha: f64,
    sigma: f64,
    beta: [f64; 4],
    lambda12: f64,
    lambda21: f64,
    r: f64,
    t0: f64,
    kind1: Kind,
    a1: f64,
    b1: f64,
    mu1: f64,
    kind2: Kind,
    a2: f64,
    b2: f64,
    mu2: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            sigma: 1.0,
            beta: [15.0, 0.0, 5.0, 2.0],
            lambda12: 10.0,
            lambda21: 20.0,
            r: 0.02,
            t0: 16.0,
            kind1: Kind::Gamma,
            a1: 4.0,
            b1: 4.0,
            mu1: 0.1,
            kind2: Kind::Gamma,
            a2: 8.0,
            b2: 4.0,
            mu2: -0.1,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct NumericsSection {
    max_switches: usize,
    series_terms: usize,
    nodes_per_unit: usize,
    min_nodes: usize,
    halfline_envelope_tol: f64,
    max_terms: usize,
    rel_tol: f64,
    abs_tol: f64,
}

impl Default for NumericsSection {
    fn default() -> Self {
        let trunc = CountTruncation::default();
        let quad = QuadratureConfig::default();
        let series = SeriesControl::default();
        Self {
            max_switches: trunc.max_switches,
            series_terms: trunc.series_terms,
            nodes_per_unit: quad.nodes_per_unit,
            min_nodes: quad.min_nodes,
            halfline_envelope_tol: quad.halfline_envelope_tol,
            max_terms: series.max_terms,
            rel_tol: series.rel_tol,
            abs_tol: series.abs_tol,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SimSection {
    paths: usize,
    steps_per_unit: usize,
    seed: u64,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            paths: 100_000,
            steps_per_unit: 400,
            seed: 2024,
        }
    }
}

#[derive(Debug, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct RawConfig {
    output_dir: Option<PathBuf>,
    model: ModelSection,
    numerics: NumericsSection,
    sim: SimSection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelParams,
    pub trunc: CountTruncation,
    pub quad: QuadratureConfig,
    pub series: SeriesControl,
    pub paths: usize,
    pub steps_per_unit: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
}

fn subordinator(kind: Kind, a: f64, b: f64) -> SubordinatorSpec {
    let kind = match kind {
        Kind::Gamma => SubordinatorKind::Gamma,
        Kind::InverseGaussian => SubordinatorKind::InverseGaussian,
    };
    SubordinatorSpec { kind, a, b }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let m = raw.model;
        let model = ModelParams {
            alpha: m.alpha,
            sigma: m.sigma,
            beta: m.beta,
            noise1: NoiseSpec {
                subordinator: subordinator(m.kind1, m.a1, m.b1),
                mu1: m.mu1,
            },
            noise2: NoiseSpec {
                subordinator: subordinator(m.kind2, m.a2, m.b2),
                mu1: m.mu2,
            },
            rates: RegimeRates {
                lambda12: m.lambda12,
                lambda21: m.lambda21,
            },
            r: m.r,
            t0: m.t0,
        };
        let n = raw.numerics;
        let cfg = Self {
            model,
            trunc: CountTruncation {
                max_switches: n.max_switches,
                series_terms: n.series_terms,
            },
            quad: QuadratureConfig {
                nodes_per_unit: n.nodes_per_unit,
                min_nodes: n.min_nodes,
                halfline_envelope_tol: n.halfline_envelope_tol,
            },
            series: SeriesControl {
                max_terms: n.max_terms,
                rel_tol: n.rel_tol,
                abs_tol: n.abs_tol,
            },
            paths: raw.sim.paths,
            steps_per_unit: raw.sim.steps_per_unit,
            seed: raw.sim.seed,
            output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("out")),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every component; parameter violations are numerical-domain errors.
    pub fn validate(&self) -> Result<(), CliError> {
        self.model.validate()?;
        self.trunc.validate()?;
        self.quad.validate()?;
        self.series.validate()?;
        self.sim(1.0).validate()?;
        Ok(())
    }

    pub fn eval_context(&self, t: f64, theta: f64) -> EvalContext {
        EvalContext {
            t,
            theta,
            trunc: self.trunc,
            quad: self.quad,
            series: self.series,
        }
    }

    pub fn sim(&self, horizon: f64) -> SimConfig {
        SimConfig {
            paths: self.paths,
            steps_per_unit: self.steps_per_unit,
            seed: self.seed,
            horizon,
        }
    }
}
