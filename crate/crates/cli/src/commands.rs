//! Subcommands producing CSV files.

use std::path::Path;

use rayon::prelude::*;
use switching_levy::charfn::{linspace, CharFnEngine};
use switching_levy::esscher::{emm_terms, scan_residual, solve_from_scan};
use switching_levy::mc::{empirical_cf, simulate_paths};
use switching_levy::regimes::{count_probs, tau_cdf, tau_pdf};

use crate::config::RunConfig;
use crate::output::{num, write_csv};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum RegimeTable {
    Pdf,
    Cdf,
    Pk,
    All,
}

/// Reporting horizons (one month, one quarter, one year), always added to the grid.
pub const REPORT_HORIZONS: [f64; 3] = [1.0 / 12.0, 0.25, 1.0];

/// `points` uniform nodes on `[0, t_end]` merged with the reporting horizons.
pub fn regime_grid(t_end: f64, points: usize) -> Vec<f64> {
    let mut grid = linspace(0.0, t_end, points);
    grid.extend(REPORT_HORIZONS.iter().filter(|&&h| h <= t_end));
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    grid
}

pub fn regimes(
    cfg: &RunConfig,
    out: &Path,
    table: RegimeTable,
    k_max: usize,
    t_end: f64,
    points: usize,
) -> Result<(), CliError> {
    if !(t_end > 0.0) || points < 2 || k_max < 1 {
        return Err(CliError::Config(
            "regimes needs t > 0, t-points >= 2 and k-max >= 1".into(),
        ));
    }
    let rates = &cfg.model.rates;
    let grid = regime_grid(t_end, points);
    let tables: &[RegimeTable] = match table {
        RegimeTable::All => &[RegimeTable::Pdf, RegimeTable::Cdf, RegimeTable::Pk],
        RegimeTable::Pdf => &[RegimeTable::Pdf],
        RegimeTable::Cdf => &[RegimeTable::Cdf],
        RegimeTable::Pk => &[RegimeTable::Pk],
    };
    for &which in tables {
        let (name, first_k) = match which {
            RegimeTable::Pdf => ("regimes_pdf.csv", 1),
            RegimeTable::Cdf => ("regimes_cdf.csv", 1),
            _ => ("regimes_pk.csv", 0),
        };
        let rows: Vec<Vec<String>> = grid
            .par_iter()
            .map(|&t| {
                let values: Vec<f64> = match which {
                    RegimeTable::Pdf => (first_k..=k_max)
                        .map(|k| tau_pdf(k, t, rates, &cfg.series))
                        .collect::<Result<_, _>>()?,
                    RegimeTable::Cdf => (first_k..=k_max)
                        .map(|k| tau_cdf(k, t, rates, &cfg.trunc).map(|c| c.value))
                        .collect::<Result<_, _>>()?,
                    _ => count_probs(k_max, t, rates, &cfg.trunc)?,
                };
                Ok(std::iter::once(num(t))
                    .chain(values.into_iter().map(num))
                    .collect())
            })
            .collect::<Result<_, switching_levy::Error>>()?;
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((first_k..=k_max).map(|k| format!("k{k}")))
            .collect();
        write_csv(&out.join(name), &header, &rows)?;
        println!("wrote {}", out.join(name).display());
    }
    Ok(())
}

pub fn u_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, CliError> {
    if !(lo < hi) || points < 2 {
        return Err(CliError::Config(
            "u grid needs u-min < u-max and u-points >= 2".into(),
        ));
    }
    Ok(linspace(lo, hi, points))
}

pub fn charfn(cfg: &RunConfig, out: &Path, t: f64, theta: f64, us: &[f64]) -> Result<(), CliError> {
    let engine = CharFnEngine::new(&cfg.model, &cfg.eval_context(t, theta))?;
    let phi = engine.phi_t_grid(us)?;
    let c5 = engine.c5_zero()?;
    let rows: Vec<Vec<String>> = us
        .iter()
        .zip(&phi)
        .map(|(&u, v)| {
            let diag = if u == 0.0 { num(c5) } else { String::new() };
            vec![num(u), num(v.re), num(v.im), diag]
        })
        .collect();
    let header = ["u", "re_phi", "im_phi", "c5_zero"].map(String::from);
    write_csv(&out.join("charfn.csv"), &header, &rows)?;
    println!("C5(0, theta) = {}", num(c5));
    println!("wrote {}", out.join("charfn.csv").display());
    Ok(())
}

pub fn esscher(cfg: &RunConfig, out: &Path, t: f64, tol: f64) -> Result<(), CliError> {
    let ctx = cfg.eval_context(t, 0.0);
    let scan = scan_residual(t, &ctx, &cfg.model)?;
    let rows: Vec<Vec<String>> = scan
        .iter()
        .map(|pt| vec![num(pt.theta), pt.residual.map(num).unwrap_or_default()])
        .collect();
    write_csv(
        &out.join("esscher_scan.csv"),
        &["theta", "residual"].map(String::from),
        &rows,
    )?;
    let sol = solve_from_scan(&scan, t, &ctx, &cfg.model, tol)?;
    let terms = emm_terms(sol.theta, t, &ctx, &cfg.model)?;
    let header = [
        "theta",
        "residual",
        "bracket_lo",
        "bracket_hi",
        "iterations",
        "d1",
        "d2",
        "c5_zero",
        "target",
    ]
    .map(String::from);
    let row = vec![
        num(sol.theta),
        num(sol.residual),
        num(sol.bracket.0),
        num(sol.bracket.1),
        sol.iterations.to_string(),
        num(terms.d1),
        num(terms.d2),
        num(terms.c5_zero),
        num(terms.target),
    ];
    write_csv(&out.join("esscher.csv"), &header, &[row])?;
    println!("theta* = {}", num(sol.theta));
    println!("residual = {}", num(sol.residual));
    println!(
        "bracket = [{}, {}], {} bisection steps",
        num(sol.bracket.0),
        num(sol.bracket.1),
        sol.iterations
    );
    println!(
        "wrote {} and {}",
        out.join("esscher.csv").display(),
        out.join("esscher_scan.csv").display()
    );
    Ok(())
}

pub fn simulate(cfg: &RunConfig, out: &Path, t: f64, us: &[f64]) -> Result<(), CliError> {
    let paths = simulate_paths(&cfg.model, &cfg.sim(t))?;
    let rows: Vec<Vec<String>> = paths
        .iter()
        .enumerate()
        .map(|(i, s)| {
            vec![
                i.to_string(),
                s.n_switches.to_string(),
                num(s.terminal_w),
                num(s.terminal_t),
            ]
        })
        .collect();
    let header = ["path", "n_switches", "terminal_w", "terminal_t"].map(String::from);
    write_csv(&out.join("simulate_paths.csv"), &header, &rows)?;
    let samples: Vec<f64> = paths.iter().map(|s| s.terminal_t).collect();
    let emp = empirical_cf(&samples, us)?;
    let rows: Vec<Vec<String>> = emp
        .iter()
        .map(|e| vec![num(e.u), num(e.value.re), num(e.value.im), num(e.se())])
        .collect();
    let header = ["u", "re_cf", "im_cf", "se"].map(String::from);
    write_csv(&out.join("simulate_cf.csv"), &header, &rows)?;
    println!(
        "wrote {} and {}",
        out.join("simulate_paths.csv").display(),
        out.join("simulate_cf.csv").display()
    );
    Ok(())
}
