//! Oracle battery with a pass/fail table.

use std::path::Path;

use num_complex::Complex64;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use switching_levy::charfn::CharFnEngine;
use switching_levy::esscher::{emm_terms, solve_emm};
use switching_levy::mc::{count_histogram, empirical_cf, simulate_paths, simulate_switch_counts};
use switching_levy::model::c1;
use switching_levy::noise::{NoiseSpec, SubordinatorSpec};
use switching_levy::regimes::count_probs;

use crate::config::RunConfig;
use crate::output::{num, write_csv};
use crate::CliError;

/// Statistical checks are skipped below this many paths.
pub const MIN_PATHS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skipped,
    /// Reported, not judged.
    Info,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIPPED",
            Status::Info => "INFO",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    pub measured: Option<f64>,
    pub tolerance: String,
}

fn judged(name: &'static str, measured: f64, tol: f64, tolerance: String) -> Check {
    Check {
        name,
        status: if measured <= tol {
            Status::Pass
        } else {
            Status::Fail
        },
        measured: Some(measured),
        tolerance,
    }
}

fn skipped(name: &'static str, tolerance: String) -> Check {
    Check {
        name,
        status: Status::Skipped,
        measured: None,
        tolerance,
    }
}

pub fn run_checks(cfg: &RunConfig, t: f64, us: &[f64]) -> Result<Vec<Check>, CliError> {
    let p = &cfg.model;
    let statistical = cfg.paths >= MIN_PATHS;
    let mut checks = Vec::new();

    let probs = count_probs(cfg.trunc.max_switches, t, &p.rates, &cfg.trunc)?;
    let mass = (probs.iter().sum::<f64>() - 1.0).abs();
    checks.push(judged("count_normalization", mass, 1e-6, "1e-6".into()));

    // chi-square of the switch-count histogram, counts above 8 pooled
    let chi_name = "regime_histogram_chi2";
    if statistical {
        let max_k = 8;
        let counts = simulate_switch_counts(&p.rates, t, cfg.paths, cfg.seed);
        let mut expected = probs[..=max_k].to_vec();
        expected.push((1.0 - expected.iter().sum::<f64>()).max(0.0));
        let mut observed = count_histogram(&counts, max_k);
        observed.push(1.0 - observed.iter().sum::<f64>());
        let n = cfg.paths as f64;
        let cells: Vec<(f64, f64)> = expected
            .into_iter()
            .zip(observed)
            .filter(|&(e, _)| e * n >= 5.0)
            .collect();
        let chi2: f64 = cells.iter().map(|&(e, o)| n * (o - e).powi(2) / e).sum();
        let crit = ChiSquared::new((cells.len() - 1).max(1) as f64)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.99);
        checks.push(judged(
            chi_name,
            chi2,
            crit,
            format!("{} (99% quantile)", num(crit)),
        ));
    } else {
        checks.push(skipped(chi_name, "99% chi-square quantile".into()));
    }

    let engine = CharFnEngine::new(p, &cfg.eval_context(t, 0.0))?;
    checks.push(Check {
        name: "c5_zero_deviation",
        status: Status::Info,
        measured: Some((engine.c5_zero()? - 1.0).abs()),
        tolerance: "|C5(0, 0) - 1|, not judged".into(),
    });
    let cf_name = "empirical_cf_sup_gap";
    if statistical {
        let samples: Vec<f64> = simulate_paths(p, &cfg.sim(t))?
            .iter()
            .map(|s| s.terminal_t)
            .collect();
        let emp = empirical_cf(&samples, us)?;
        let phi = engine.phi_t_grid(us)?;
        let (mut gap, mut excess) = (0.0f64, f64::NEG_INFINITY);
        for (e, a) in emp.iter().zip(&phi) {
            let g = (a - e.value).norm();
            gap = gap.max(g);
            excess = excess.max(g - 0.03f64.max(4.0 * e.se()));
        }
        checks.push(Check {
            name: cf_name,
            status: if excess <= 0.0 {
                Status::Pass
            } else {
                Status::Fail
            },
            measured: Some(gap),
            tolerance: "max(0.03, 4 SE)".into(),
        });
    } else {
        checks.push(skipped(cf_name, "max(0.03, 4 SE)".into()));
    }

    // identical Gaussian-like regimes against the Gaussian OU law
    let (c, b) = (1.0, 1e4);
    let mut g = p.clone();
    let noise = NoiseSpec::new(SubordinatorSpec::gamma(c * b, b)?, 0.0)?;
    g.noise1 = noise;
    g.noise2 = noise;
    let phi = CharFnEngine::new(&g, &cfg.eval_context(t, 0.0))?.phi_t_grid(us)?;
    let var = g.sigma * g.sigma * c * (1.0 - (-2.0 * g.alpha * t).exp()) / (4.0 * g.alpha);
    let gauss = us
        .iter()
        .zip(&phi)
        .map(|(&u, v)| (v - Complex64::new(-u * u * var, u * c1(t, &g)).exp()).norm())
        .fold(0.0, f64::max);
    checks.push(judged("gaussian_limit", gauss, 1e-3, "1e-3".into()));

    let ctx = cfg.eval_context(t, 0.0);
    let sol = solve_emm(t, &ctx, p, 1e-12)?;
    let terms = emm_terms(sol.theta, t, &ctx, p)?;
    let mean_t = c1(t, p) + p.sigma * (-p.alpha * t).exp() * terms.mean_w();
    let plug = ((-p.r * t).exp() * mean_t - p.t0).abs() / p.t0.abs();
    checks.push(judged("esscher_plug_back", plug, 1e-4, "1e-4".into()));

    Ok(checks)
}

pub fn validate(cfg: &RunConfig, out: &Path, t: f64, us: &[f64]) -> Result<(), CliError> {
    let checks = run_checks(cfg, t, us)?;
    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| {
            vec![
                c.name.to_string(),
                c.status.label().to_string(),
                c.measured.map(num).unwrap_or_default(),
                c.tolerance.clone(),
            ]
        })
        .collect();
    let header = ["check", "status", "measured", "tolerance"].map(String::from);
    let path = out.join("validation_report.csv");
    write_csv(&path, &header, &rows)?;
    for r in &rows {
        println!("{:<24} {:<8} {:<20} {}", r[0], r[1], r[2], r[3]);
    }
    println!("wrote {}", path.display());
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| c.status == Status::Fail)
        .map(|c| c.name)
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(failed.join(", ")))
    }
}
