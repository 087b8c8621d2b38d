//! Monte Carlo experiment engine: deterministic seed splitting, parallel
//! trial execution, aggregation into one CSV row per (scheme, sweep point).

use std::io::{BufRead, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;

use crate::analysis::crb_appendix_pipeline;
use crate::channel::ScenarioConfig;
use crate::estimation::uniform_grid;
use crate::harness::plan::{ExperimentPlan, SweepParam};
use crate::harness::scheme::{run_trial, BenchmarkGeometry, SchemeId, TrialOutcome};
use crate::reflection::ReflectionSchedule;
use crate::{linear_to_dbm, Error, Result};

/// Environment variable capping the worker thread count; a CLI override wins.
pub const WORKERS_ENV: &str = "SELFSENSE_WORKERS";

/// splitmix64 finalizer: a well-mixed 64-bit permutation.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Deterministic per-trial seed, independent across schemes, sweep points and
/// trials under one master seed.
pub fn trial_seed(master: u64, scheme_idx: usize, sweep_idx: usize, trial: usize) -> u64 {
    let mut s = splitmix64(master ^ 0x5851f42d4c957f2d);
    s = splitmix64(s ^ (scheme_idx as u64).wrapping_mul(0xd1342543de82ef95));
    s = splitmix64(s ^ (sweep_idx as u64).wrapping_mul(0xaf251af3b0f025b5));
    splitmix64(s ^ trial as u64)
}

/// One aggregated row of an experiment's output.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scheme: SchemeId,
    pub sweep_param: SweepParam,
    pub sweep_value: f64,
    /// Root mean square angle error over completed trials, degrees.
    pub rmse_deg: f64,
    /// Fraction of completed trials within the success margin.
    pub p_success: f64,
    /// Mean per-sensor, per-snapshot received power at the estimator input.
    pub mean_rx_power_dbm: f64,
    /// Bound on the estimator variance for the reflecting-surface pipeline,
    /// degrees squared; NaN for schemes it does not describe.
    pub crb_deg2: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Full output of `run_experiment`.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    /// Trials that panicked or returned an error; they are excluded from the
    /// row statistics and reported on stderr with their seed.
    pub failed_trials: usize,
}

/// Resolve the worker count: explicit override, then the environment cap,
/// then one thread per logical CPU.
pub fn resolve_workers(override_workers: Option<usize>) -> Option<usize> {
    if override_workers.is_some() {
        return override_workers;
    }
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Run every trial of one scheme at one scenario in parallel. Returns the
/// completed outcomes in trial order plus the seeds of failed trials.
pub fn run_scheme_trials(
    scheme: SchemeId,
    cfg: &ScenarioConfig<f64>,
    bench: &BenchmarkGeometry,
    grid: &[f64],
    trials: usize,
    seeds: &[u64],
) -> (Vec<TrialOutcome>, Vec<u64>) {
    debug_assert_eq!(seeds.len(), trials);
    let results: Vec<(u64, Option<TrialOutcome>)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let seed = seeds[t];
            let outcome = catch_unwind(AssertUnwindSafe(|| {
                run_trial(scheme, cfg, bench, grid, seed)
            }));
            (seed, outcome.ok().and_then(|r| r.ok()))
        })
        .collect();
    let mut ok = Vec::with_capacity(trials);
    let mut failed = Vec::new();
    for (seed, outcome) in results {
        match outcome {
            Some(o) => ok.push(o),
            None => failed.push(seed),
        }
    }
    (ok, failed)
}

fn aggregate(
    scheme: SchemeId,
    plan: &ExperimentPlan,
    sweep_value: f64,
    outcomes: &[TrialOutcome],
    crb_deg2: f64,
) -> ResultRow {
    let n = outcomes.len().max(1) as f64;
    let rmse_deg = (outcomes.iter().map(|o| o.error * o.error).sum::<f64>() / n)
        .sqrt()
        .to_degrees();
    let p_success = outcomes.iter().filter(|o| o.success).count() as f64 / n;
    let mean_rx = outcomes.iter().map(|o| o.rx_power).sum::<f64>() / n;
    ResultRow {
        scheme,
        sweep_param: plan.sweep_param,
        sweep_value,
        rmse_deg,
        p_success,
        mean_rx_power_dbm: linear_to_dbm(mean_rx),
        crb_deg2,
        trials: outcomes.len(),
        seed: plan.seed,
    }
}

fn pipeline_crb_deg2(cfg: &ScenarioConfig<f64>) -> f64 {
    let Ok(schedule) = ReflectionSchedule::dft(cfg.layout.n_h, cfg.snapshots) else {
        return f64::NAN;
    };
    match crb_appendix_pipeline(cfg, &schedule, None) {
        Ok(p) => p.crb * (180.0 / std::f64::consts::PI).powi(2),
        Err(_) => f64::NAN,
    }
}

fn run_inner(plan: &ExperimentPlan) -> Result<ExperimentResult> {
    let grid: Vec<f64> = uniform_grid(-90.0, 90.0, plan.grid_step_deg);
    let mut rows = Vec::new();
    let mut failed_trials = 0usize;
    for (sweep_idx, &value) in plan.sweep_values.iter().enumerate() {
        let cfg = plan.at(value)?;
        for (scheme_idx, &scheme) in plan.schemes.iter().enumerate() {
            let seeds: Vec<u64> = (0..plan.trials)
                .map(|t| trial_seed(plan.seed, scheme_idx, sweep_idx, t))
                .collect();
            let (outcomes, failed) =
                run_scheme_trials(scheme, &cfg, &plan.bench, &grid, plan.trials, &seeds);
            for seed in &failed {
                eprintln!(
                    "warning: {} trial failed (sweep {}={}, seed {seed})",
                    scheme.name(),
                    plan.sweep_param.key(),
                    value
                );
            }
            failed_trials += failed.len();
            if outcomes.is_empty() {
                return Err(Error::Degenerate(format!(
                    "every {} trial failed at {}={}",
                    scheme.name(),
                    plan.sweep_param.key(),
                    value
                )));
            }
            let crb = match scheme {
                SchemeId::Proposed | SchemeId::ProposedRandomPhase | SchemeId::Mus => {
                    pipeline_crb_deg2(&cfg)
                }
                _ => f64::NAN,
            };
            rows.push(aggregate(scheme, plan, value, &outcomes, crb));
        }
    }
    Ok(ExperimentResult {
        rows,
        failed_trials,
    })
}

/// Run a full experiment plan. `workers` caps the rayon pool; `None` defers
/// to the `SELFSENSE_WORKERS` environment variable, then the CPU count.
pub fn run_experiment(plan: &ExperimentPlan, workers: Option<usize>) -> Result<ExperimentResult> {
    plan.validate()?;
    match resolve_workers(workers) {
        None => run_inner(plan),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
            pool.install(|| run_inner(plan))
        }
    }
}

pub const RESULT_HEADER: &str =
    "scheme,sweep_param,sweep_value,rmse_deg,p_success,mean_rx_power_dbm,crb_deg2,trials,seed";

/// Write rows as CSV at full float precision.
pub fn emit_results<W: Write>(rows: &[ResultRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{RESULT_HEADER}")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            row.scheme.name(),
            row.sweep_param.key(),
            row.sweep_value,
            row.rmse_deg,
            row.p_success,
            row.mean_rx_power_dbm,
            row.crb_deg2,
            row.trials,
            row.seed
        )?;
    }
    Ok(())
}

/// Read CSV produced by `emit_results` back into rows.
pub fn parse_results<R: BufRead>(input: R) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: "<results>".into(),
            source,
        })?;
        let line_no = idx + 1;
        if idx == 0 {
            if line.trim() != RESULT_HEADER {
                return Err(Error::Parse {
                    file: "<results>".into(),
                    line: line_no,
                    msg: "unexpected header".into(),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 9 {
            return Err(Error::Parse {
                file: "<results>".into(),
                line: line_no,
                msg: format!("expected 9 fields, got {}", parts.len()),
            });
        }
        let num = |i: usize| -> Result<f64> {
            parts[i].parse::<f64>().map_err(|_| Error::Parse {
                file: "<results>".into(),
                line: line_no,
                msg: format!("bad number '{}'", parts[i]),
            })
        };
        rows.push(ResultRow {
            scheme: SchemeId::parse(parts[0])?,
            sweep_param: SweepParam::parse(parts[1])?,
            sweep_value: num(2)?,
            rmse_deg: num(3)?,
            p_success: num(4)?,
            mean_rx_power_dbm: num(5)?,
            crb_deg2: num(6)?,
            trials: num(7)? as usize,
            seed: num(8)? as u64,
        });
    }
    Ok(rows)
}
