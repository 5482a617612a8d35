//! Iteration-count benchmark: adaptive steps against the fixed short-step
//! baseline on generated instances.

use std::io::Write;
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{DiagnosticsLevel, SolverConfig};
use crate::error::{Error, Result};
use crate::instances::{generate, Family, InstanceSpec};
use crate::linalg::vector::norm2;
use crate::oracle::shortstep_ms;
use crate::scaling::{ms_solve_to_mu, shifted_ones, ScalingResult};

pub const BENCH_HEADER: &str = "family,n,seed,iters_adaptive,iters_baseline,phases,wall_ms";

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub families: Vec<Family>,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub epsilon: f64,
    pub gamma: f64,
    /// Skip the baseline runs (reported as 0 iterations).
    pub skip_baseline: bool,
    pub parallel: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            families: vec![Family::GridLaplacian],
            sizes: vec![64, 128, 256, 512, 1024],
            seeds: vec![0],
            epsilon: 1e-6,
            gamma: 0.1,
            skip_baseline: false,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub family: Family,
    /// Actual dimension, which may be below the requested size for ER graphs.
    pub n: usize,
    pub seed: u64,
    pub iters_adaptive: usize,
    pub iters_baseline: usize,
    /// Number of doubling phases the adaptive run passed through.
    pub phases: usize,
    pub wall_ms: f64,
    /// Mean iterations over complete doubling phases of the adaptive run.
    pub iters_per_phase: f64,
    pub mu_target: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub fitted_exponent: f64,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_exponent(points: &[(f64, f64)]) -> f64 {
    let m = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x.ln(), b + y.ln()));
    let (mx, my) = (sx / m, sy / m);
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in points {
        let dx = x.ln() - mx;
        num += dx * (y.ln() - my);
        den += dx * dx;
    }
    num / den
}

/// Mean iterations of phases that completed a full doubling, falling back to
/// iterations per doubling of `mu` when no phase completed.
pub fn iterations_per_phase(r: &ScalingResult) -> f64 {
    let full: Vec<usize> = r
        .phases
        .iter()
        .filter(|p| p.mu_end >= 2.0 * p.mu_start * (1.0 - 1e-12))
        .map(|p| p.iterations)
        .collect();
    if full.is_empty() {
        r.iterations as f64 / r.final_mu.log2().max(1.0)
    } else {
        full.iter().sum::<usize>() as f64 / full.len() as f64
    }
}

pub fn run_bench(opts: &BenchOptions, config: &SolverConfig) -> Result<BenchReport> {
    if opts.families.is_empty() {
        return Err(Error::InvalidConfig("no families given".into()));
    }
    if opts.seeds.is_empty() {
        return Err(Error::InvalidConfig("no seeds given".into()));
    }
    let mut distinct = opts.sizes.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(Error::InvalidConfig(format!(
            "need ≥4 sizes to fit an exponent, got {}",
            distinct.len()
        )));
    }
    let mut cfg = config.clone();
    cfg.diagnostics_level = DiagnosticsLevel::Off;
    cfg.validate()?;

    let mut specs = Vec::new();
    for &family in &opts.families {
        for &n in &opts.sizes {
            for &seed in &opts.seeds {
                let mut s = InstanceSpec::new(family, n, seed);
                s.gamma = opts.gamma;
                specs.push(s);
            }
        }
    }
    let run_one = |spec: &InstanceSpec| -> Result<BenchRow> {
        let (a, _) = generate(spec)?;
        let b0 = shifted_ones(&a)?;
        let bn = norm2(&b0);
        let mu_f = (bn * bn / (opts.epsilon * opts.epsilon)).max(1.0);
        let start = Instant::now();
        let adaptive = ms_solve_to_mu(&a, mu_f, &cfg)?;
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        let iters_baseline = if opts.skip_baseline {
            0
        } else {
            shortstep_ms(&a, mu_f, &cfg)?.iterations
        };
        info!(
            "{} n={} seed={}: adaptive {} baseline {}",
            spec.family,
            a.n(),
            spec.seed,
            adaptive.iterations,
            iters_baseline
        );
        Ok(BenchRow {
            family: spec.family,
            n: a.n(),
            seed: spec.seed,
            iters_adaptive: adaptive.iterations,
            iters_baseline,
            phases: adaptive.phases.len(),
            wall_ms,
            iters_per_phase: iterations_per_phase(&adaptive),
            mu_target: mu_f,
        })
    };
    let rows: Vec<BenchRow> = if opts.parallel {
        specs.par_iter().map(run_one).collect::<Result<_>>()?
    } else {
        specs.iter().map(run_one).collect::<Result<_>>()?
    };
    let points: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.n as f64, r.iters_per_phase))
        .collect();
    let fitted_exponent = fit_exponent(&points);
    Ok(BenchReport {
        rows,
        fitted_exponent,
    })
}

pub fn write_bench_csv<W: Write>(report: &BenchReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BENCH_HEADER.split(','))
        .map_err(csv_err)?;
    for r in &report.rows {
        w.write_record([
            r.family.name().to_string(),
            r.n.to_string(),
            r.seed.to_string(),
            r.iters_adaptive.to_string(),
            r.iters_baseline.to_string(),
            r.phases.to_string(),
            format!("{:.3}", r.wall_ms),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_of_power_law() {
        let pts: Vec<(f64, f64)> = [64.0, 128.0, 256.0, 512.0]
            .iter()
            .map(|&n: &f64| (n, 3.0 * n.powf(1.0 / 3.0)))
            .collect();
        assert!((fit_exponent(&pts) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_sizes() {
        let opts = BenchOptions {
            sizes: vec![16],
            ..BenchOptions::default()
        };
        let err = run_bench(&opts, &SolverConfig::default()).unwrap_err();
        assert!(err.to_string().contains("need ≥4 sizes"));
    }

    #[test]
    fn empty_families() {
        let opts = BenchOptions {
            families: vec![],
            ..BenchOptions::default()
        };
        assert!(run_bench(&opts, &SolverConfig::default()).is_err());
    }

    #[test]
    fn small_run_writes_csv() {
        let opts = BenchOptions {
            sizes: vec![4, 6, 9, 12],
            epsilon: 1e-3,
            ..BenchOptions::default()
        };
        let rep = run_bench(&opts, &SolverConfig::default()).unwrap();
        assert_eq!(rep.rows.len(), 4);
        assert!(rep.fitted_exponent.is_finite());
        let mut buf = Vec::new();
        write_bench_csv(&rep, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(BENCH_HEADER));
        assert_eq!(text.lines().count(), 5);
    }
}
