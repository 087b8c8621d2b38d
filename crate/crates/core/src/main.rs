//! Command-line front end.
//!
//! Subcommands:
//!
//! - `run <plan-file>`: execute a Monte Carlo experiment plan, write a
//!   results CSV.
//! - `crb <scenario-file>`: closed-form vs pipeline bound comparison over an
//!   angle grid, CSV output.
//! - `powers <scenario-file>`: closed-form echo powers, element threshold,
//!   and the device-distance power sweep, CSV output.
//! - `spectrum <scenario-file>`: one simulated trial's pseudo-spectrum, CSV
//!   output.
//! - `validate`: run the built-in checklist.
//!
//! Exit codes: 0 success, 1 validation failure, 2 configuration error.
//! The `SELFSENSE_WORKERS` environment variable caps the worker threads;
//! `--workers` overrides it.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use selfsense::analysis::{
    combined_power_minimizer_bisect, crb_consistency_report, echo_link_powers, element_threshold,
    export_consistency_csv, user_aided_power,
};
use selfsense::channel::{draw_realization_with, simulate_cleaned_block, ScenarioConfig};
use selfsense::estimation::{estimate_doa, export_spectrum_csv, uniform_grid};
use selfsense::harness::checks;
use selfsense::harness::experiment::{emit_results, run_experiment};
use selfsense::harness::plan::{
    benchmark_from_sections, finish_scenario, load_plan, scenario_from_sections, SectionedFile,
};
use selfsense::reflection::ReflectionSchedule;
use selfsense::{linear_to_dbm, Error, Result};

#[derive(Parser)]
#[command(
    name = "selfsense",
    about = "Self-sensing reflecting-surface DOA simulation and analysis toolkit",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment plan and write the results CSV.
    Run {
        /// Plan file (sectioned key = value text).
        plan: PathBuf,
        /// Cap the worker threads (overrides SELFSENSE_WORKERS).
        #[arg(long)]
        workers: Option<usize>,
        /// Override the plan's output path.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare the closed-form bound against the information-matrix pipeline
    /// over an angle grid.
    Crb {
        /// Scenario file.
        scenario: PathBuf,
        /// Output CSV path.
        #[arg(long, default_value = "crb.csv")]
        output: PathBuf,
    },
    /// Closed-form echo powers, the element threshold, and the device
    /// placement sweep.
    Powers {
        /// Scenario file.
        scenario: PathBuf,
        /// Output CSV path for the device-distance sweep.
        #[arg(long, default_value = "powers.csv")]
        output: PathBuf,
    },
    /// Simulate one trial and export its spatial pseudo-spectrum.
    Spectrum {
        /// Scenario file.
        scenario: PathBuf,
        /// Output CSV path.
        #[arg(long, default_value = "spectrum.csv")]
        output: PathBuf,
        /// Trial seed.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run the built-in validation checklist.
    Validate,
}

fn write_file(path: &PathBuf, body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    body(&mut buf).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    std::fs::write(path, buf).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn load_scenario(path: &PathBuf) -> Result<ScenarioConfig<f64>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut sf = SectionedFile::parse(&text, &path.display().to_string())?;
    let cfg = scenario_from_sections(&mut sf)?;
    // a scenario file may carry a benchmark section; tolerate and check it
    benchmark_from_sections(&mut sf)?;
    finish_scenario(sf)?;
    Ok(cfg)
}

fn cmd_run(plan_path: &PathBuf, workers: Option<usize>, output: Option<PathBuf>) -> Result<()> {
    let plan = load_plan(plan_path)?;
    let result = run_experiment(&plan, workers)?;
    let out = output.unwrap_or_else(|| plan.output.clone());
    write_file(&out, |buf| emit_results(&result.rows, buf))?;
    for row in &result.rows {
        println!(
            "{:>9} {}={:<8} rmse {:.4} deg  p_success {:.3}  rx {:.1} dBm",
            row.scheme.name(),
            row.sweep_param.key(),
            row.sweep_value,
            row.rmse_deg,
            row.p_success,
            row.mean_rx_power_dbm
        );
    }
    if result.failed_trials > 0 {
        eprintln!("{} trial(s) failed and were excluded", result.failed_trials);
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_crb(path: &PathBuf, output: &PathBuf) -> Result<()> {
    let cfg = load_scenario(path)?;
    let schedule = ReflectionSchedule::dft(cfg.layout.n_h, cfg.snapshots)?;
    let grid: Vec<f64> = (0..37)
        .map(|k| (-85.0 + k as f64 * (170.0 / 36.0)).to_radians())
        .collect();
    let rep = crb_consistency_report(&cfg, &schedule, &grid)?;
    write_file(output, |buf| export_consistency_csv(&rep, buf))?;
    println!(
        "closed/pipeline ratio: mean {:.4}, max deviation {:.2}% ({:?})",
        rep.mean_ratio,
        100.0 * rep.max_rel_deviation,
        rep.class
    );
    println!("wrote {}", output.display());
    Ok(())
}

fn cmd_powers(path: &PathBuf, output: &PathBuf) -> Result<()> {
    let cfg = load_scenario(path)?;
    let (p_r, p_d) = echo_link_powers(&cfg);
    println!(
        "reflected echo {:.2} dBm, direct echo {:.2} dBm, element threshold {:.1}",
        linear_to_dbm(p_r),
        linear_to_dbm(p_d),
        element_threshold(&cfg)
    );
    if let Ok(best) = combined_power_minimizer_bisect(&cfg, 1e-9) {
        println!("device placement minimizing combined power: {best:.4} m");
    }
    write_file(output, |buf| {
        use std::io::Write;
        writeln!(buf, "d_ui_m,p_r_dbm,p_d_dbm,p_c_dbm,n_th")?;
        let points = 1000;
        for i in 1..points {
            let d = cfg.d_it * i as f64 / points as f64;
            if let Ok(b) = user_aided_power(d, &cfg) {
                writeln!(
                    buf,
                    "{d},{},{},{},{}",
                    linear_to_dbm(b.p_r),
                    linear_to_dbm(b.p_d),
                    linear_to_dbm(b.p_c),
                    b.n_th
                )?;
            }
        }
        Ok(())
    })?;
    println!("wrote {}", output.display());
    Ok(())
}

fn cmd_spectrum(path: &PathBuf, output: &PathBuf, seed: u64) -> Result<()> {
    let cfg = load_scenario(path)?;
    let schedule = ReflectionSchedule::dft(cfg.layout.n_h, cfg.snapshots)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let real = draw_realization_with(&cfg, &mut rng)?;
    let block = simulate_cleaned_block(&cfg, &real, &schedule, &mut rng)?;
    let grid: Vec<f64> = uniform_grid(-90.0, 90.0, 0.01);
    let est = estimate_doa(&block, &cfg.layout, &grid)?;
    write_file(output, |buf| export_spectrum_csv(&est, buf))?;
    println!(
        "peak at {:.3} deg (true {:.3} deg)",
        est.theta_hat.to_degrees(),
        cfg.angles.theta_it_h.to_degrees()
    );
    println!("wrote {}", output.display());
    Ok(())
}

fn cmd_validate() -> Result<bool> {
    let reports = checks::run_all();
    let mut all_ok = true;
    for rep in &reports {
        let status = if rep.passed { "pass" } else { "FAIL" };
        println!("[{status}] {}: {}", rep.name, rep.detail);
        all_ok &= rep.passed;
    }
    Ok(all_ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run {
            plan,
            workers,
            output,
        } => cmd_run(plan, *workers, output.clone()).map(|()| true),
        Command::Crb { scenario, output } => cmd_crb(scenario, output).map(|()| true),
        Command::Powers { scenario, output } => cmd_powers(scenario, output).map(|()| true),
        Command::Spectrum {
            scenario,
            output,
            seed,
        } => cmd_spectrum(scenario, output, *seed).map(|()| true),
        Command::Validate => cmd_validate(),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Parse { .. } | Error::InvalidConfig(_) | Error::Io { .. } => {
                    ExitCode::from(2)
                }
                _ => ExitCode::from(1),
            }
        }
    }
}
