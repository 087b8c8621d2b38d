//! End-to-end exercises of the command-line binary: exit codes, output
//! files, and unknown-key rejection.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_selfsense"))
}

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const SMALL_SCENARIO: &str = "\
[scenario]
n_elements = 16
m_sensors = 4
snapshots = 16
";

#[test]
fn run_executes_a_small_plan() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results.csv");
    let plan = write(
        dir.path(),
        "small.plan",
        &format!(
            "{SMALL_SCENARIO}\n[plan]\nsweep_param = tx_power_dbm\nsweep_values = 20, 30\n\
             schemes = proposed\ntrials = 3\nseed = 1\ngrid_step_deg = 0.1\noutput = {}\n",
            out.display()
        ),
    );
    let status = bin().arg("run").arg(&plan).arg("--workers").arg("2").status().unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("scheme,sweep_param,sweep_value,rmse_deg"));
    assert_eq!(csv.lines().count(), 3); // header + two sweep points
}

#[test]
fn unknown_key_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write(
        dir.path(),
        "bad.plan",
        "[scenario]\nn_elments = 16\n\n[plan]\nsweep_param = tx_power_dbm\n\
         sweep_values = 0\nschemes = proposed\n",
    );
    let output = bin().arg("run").arg(&plan).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("n_elments"), "{stderr}");
}

#[test]
fn crb_powers_and_spectrum_write_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "small.scenario", SMALL_SCENARIO);

    let crb_out = dir.path().join("crb.csv");
    let status = bin()
        .arg("crb")
        .arg(&scenario)
        .arg("--output")
        .arg(&crb_out)
        .status()
        .unwrap();
    assert!(status.success());
    let crb = std::fs::read_to_string(&crb_out).unwrap();
    assert!(crb.starts_with("theta_deg,crb_closed,crb_pipeline,crb_fd,ratio"));
    assert_eq!(crb.lines().count(), 38);

    let powers_out = dir.path().join("powers.csv");
    let status = bin()
        .arg("powers")
        .arg(&scenario)
        .arg("--output")
        .arg(&powers_out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(std::fs::read_to_string(&powers_out)
        .unwrap()
        .starts_with("d_ui_m,p_r_dbm,p_d_dbm,p_c_dbm,n_th"));

    let spec_out = dir.path().join("spectrum.csv");
    let status = bin()
        .arg("spectrum")
        .arg(&scenario)
        .arg("--output")
        .arg(&spec_out)
        .arg("--seed")
        .arg("7")
        .status()
        .unwrap();
    assert!(status.success());
    assert!(std::fs::read_to_string(&spec_out)
        .unwrap()
        .starts_with("grid_deg,p_music"));
}

#[test]
fn missing_file_exits_with_config_error() {
    let status = bin().arg("run").arg("/nonexistent/never.plan").status().unwrap();
    assert_eq!(status.code(), Some(2));
}
