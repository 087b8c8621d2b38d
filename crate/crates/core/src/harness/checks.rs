//! Built-in validation checklist: twelve self-contained checks covering the
//! reflection schedule, array geometry, subspace estimator, link-budget
//! formulas, bound oracles, Monte Carlo efficiency, scheme ordering, and
//! determinism. `selfsense validate` runs all of them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::{
    combined_power_minimizer_bisect, combined_power_minimizer_grid, crb_appendix_pipeline,
    crb_consistency_report, crb_fd_oracle, echo_link_powers, element_threshold, RatioClass,
};
use crate::channel::{
    draw_realization_with, sample_cn, simulate_cleaned_block, ChannelRealization, ScenarioConfig,
};
use crate::estimation::{estimate_doa, uniform_grid};
use crate::harness::experiment::{emit_results, run_experiment, run_scheme_trials, trial_seed};
use crate::harness::plan::{ExperimentPlan, SweepParam};
use crate::harness::scheme::{BenchmarkGeometry, SchemeId};
use crate::reflection::ReflectionSchedule;
use crate::{dbm_to_linear, linear_to_dbm, Result, C};

/// Outcome of one validation check.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn report(name: &'static str, res: Result<(bool, String)>) -> CheckReport {
    match res {
        Ok((passed, detail)) => CheckReport {
            name,
            passed,
            detail,
        },
        Err(e) => CheckReport {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

const CHECK_SEED: u64 = 0xACCE55ED;

/// 1. The length-matched DFT schedule satisfies the optimality conditions:
///    `(1/T) Theta Theta^H = I` to 1e-12 and unit diagonal of the schedule
///    covariance.
pub fn check_dft_optimality() -> CheckReport {
    report("dft_schedule_optimality", (|| {
        let schedule = ReflectionSchedule::<f64>::dft(64, 64)?;
        let theta = schedule.matrix();
        let gram = theta * theta.adjoint() / C::new(64.0, 0.0);
        let mut max_dev = 0.0f64;
        for i in 0..64 {
            for j in 0..64 {
                let target = if i == j { C::new(1.0, 0.0) } else { C::new(0.0, 0.0) };
                max_dev = max_dev.max((gram[(i, j)] - target).norm());
            }
        }
        let cov = schedule.covariance();
        let diag_unit = (0..64).all(|i| cov[(i, i)] == C::new(1.0, 0.0));
        Ok((
            max_dev < 1e-12 && diag_unit,
            format!("max |(1/T) Theta Theta^H - I| = {max_dev:.3e}, unit diagonal: {diag_unit}"),
        ))
    })())
}

/// 2. Geometry identities: manifold norm equals the element count to machine
///    precision, and both manifold/derivative inner products vanish at the
///    array centroid on a 181-point angle grid.
pub fn check_geometry_identities() -> CheckReport {
    report("geometry_centroid_identities", (|| {
        let cfg = ScenarioConfig::<f64>::default_scene();
        let n = cfg.layout.n_h as f64;
        let mut max_norm_dev = 0.0f64;
        let mut max_b = 0.0f64;
        let mut max_q = 0.0f64;
        for k in 0..181 {
            let theta = (-90.0 + k as f64).to_radians();
            let b = crate::geometry::sensor_response(theta, &cfg.layout);
            let q = crate::geometry::combined_manifold(theta, &cfg.angles, &cfg.layout);
            let (db, dq) = crate::geometry::manifold_derivatives(theta, &cfg.angles, &cfg.layout);
            max_norm_dev = max_norm_dev.max((q.norm_squared() - n).abs());
            max_b = max_b.max(b.dotc(&db).norm());
            max_q = max_q.max(q.dotc(&dq).norm());
        }
        let norm_ok = max_norm_dev <= 4.0 * n * f64::EPSILON;
        Ok((
            norm_ok && max_b < 1e-10 && max_q < 1e-10,
            format!(
                "max | ||q||^2 - N | = {max_norm_dev:.3e}, max |b^H db| = {max_b:.3e}, \
                 max |q^H dq| = {max_q:.3e}"
            ),
        ))
    })())
}

/// 3. Noiseless subspace estimator exactness: on-grid targets are recovered
///    bitwise, off-grid targets land within one 0.01-degree grid step.
pub fn check_noiseless_music() -> CheckReport {
    report("noiseless_music_exactness", (|| {
        let mut cfg = ScenarioConfig::<f64>::default_scene();
        cfg.noise_power = 1e-30;
        let grid: Vec<f64> = uniform_grid(-90.0, 90.0, 0.01);
        let step = 0.01f64.to_radians();
        let schedule = ReflectionSchedule::dft(cfg.layout.n_h, cfg.snapshots)?;
        let trials: Vec<(bool, f64)> = (0..200usize)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(CHECK_SEED, 3, 0, t));
                let on_grid = t < 100;
                let truth = if on_grid {
                    // stay away from the grid edges
                    grid[rng.random_range(200..grid.len() - 200)]
                } else {
                    rng.random_range(-89.0f64..89.0).to_radians()
                };
                let mut at = cfg.clone();
                at.angles.theta_it_h = truth;
                let real = draw_realization_with(&at, &mut rng).unwrap();
                let block = simulate_cleaned_block(&at, &real, &schedule, &mut rng).unwrap();
                let est = estimate_doa(&block, &at.layout, &grid).unwrap();
                if on_grid {
                    (est.theta_hat == truth, 0.0)
                } else {
                    (true, (est.theta_hat - truth).abs())
                }
            })
            .collect();
        let exact = trials[..100].iter().filter(|(ok, _)| *ok).count();
        let worst_off = trials[100..].iter().map(|(_, e)| *e).fold(0.0f64, f64::max);
        Ok((
            exact == 100 && worst_off <= step,
            format!(
                "{exact}/100 on-grid targets recovered exactly, \
                 worst off-grid error {:.4} deg (step 0.01 deg)",
                worst_off.to_degrees()
            ),
        ))
    })())
}

/// 4. Average received echo powers: the closed forms match 1e5-draw fading
///    averages within 2 percent.
pub fn check_echo_power_formulas() -> CheckReport {
    report("echo_power_monte_carlo", (|| {
        let cfg = ScenarioConfig::<f64>::default_scene();
        let (p_r, p_d) = echo_link_powers(&cfg);
        let n = cfg.layout.n_h as f64;
        let m = cfg.layout.m as f64;
        // Per-draw reflected power under any schedule with (1/T) sum |q^T
        // phi_t|^2 = ||q||^2 = N, which the DFT schedule satisfies.
        let base_r =
            cfg.tx_power * m * n * cfg.g_r_gain().powi(2) * cfg.alpha_ci().norm_sqr()
                * cfg.eta_r.powi(2);
        let base_d = cfg.tx_power * m * cfg.g_d_gain().powi(2);
        let mut rng = ChaCha8Rng::seed_from_u64(CHECK_SEED ^ 4);
        let draws = 100_000usize;
        let mut acc_r = 0.0;
        let mut acc_d = 0.0;
        for _ in 0..draws {
            let beta_r: C<f64> = sample_cn(&mut rng);
            let beta_d: C<f64> = sample_cn(&mut rng);
            acc_r += base_r * beta_r.norm_sqr();
            acc_d += base_d * beta_d.norm_sqr();
        }
        let emp_r = acc_r / draws as f64;
        let emp_d = acc_d / draws as f64;
        let rel_r = (emp_r - p_r).abs() / p_r;
        let rel_d = (emp_d - p_d).abs() / p_d;
        Ok((
            rel_r < 0.02 && rel_d < 0.02,
            format!(
                "reflected: closed {p_r:.3e} vs empirical {emp_r:.3e} ({:.2}%), \
                 direct: closed {p_d:.3e} vs empirical {emp_d:.3e} ({:.2}%)",
                100.0 * rel_r,
                100.0 * rel_d
            ),
        ))
    })())
}

/// 5. Element-count threshold: the reflected power evaluated at the
///    continuous threshold equals the direct power to 1e-12 relative, and a
///    brute-force scan crosses at the threshold's ceiling.
pub fn check_element_threshold() -> CheckReport {
    report("element_count_threshold", (|| {
        let mut cfg = ScenarioConfig::<f64>::default_scene();
        // move the controller close so the threshold lands at a small count
        cfg.d_ci = 0.05;
        let n_th = element_threshold(&cfg);
        let (p_r, p_d) = echo_link_powers(&cfg);
        let per_element = p_r / cfg.layout.n_h as f64;
        let rel = (per_element * n_th - p_d).abs() / p_d;
        let mut crossover = None;
        for n in 1..100_000usize {
            let mut at = cfg.clone();
            at.layout.n_h = n;
            let (p_r_n, p_d_n) = echo_link_powers(&at);
            if p_r_n >= p_d_n {
                crossover = Some(n);
                break;
            }
        }
        let expect = n_th.ceil() as usize;
        let cross_ok = crossover == Some(expect);
        Ok((
            rel < 1e-12 && cross_ok,
            format!(
                "N_th = {n_th:.4}, equality residual {rel:.3e}, \
                 discrete crossover at {crossover:?} (expected {expect})"
            ),
        ))
    })())
}

/// 6. Device-aided placement: with the calibration N * eta_r = 900 the
///    root-found power minimizer sits at 1.785 m and matches a 1e4-point
///    grid scan.
pub fn check_power_minimizer() -> CheckReport {
    report("device_placement_minimizer", (|| {
        let mut cfg = ScenarioConfig::<f64>::default_scene();
        cfg.eta_r = 900.0 / cfg.layout.n_h as f64;
        let root = combined_power_minimizer_bisect(&cfg, 1e-9)?;
        let grid = combined_power_minimizer_grid(&cfg, 10_000)?;
        let grid_step = cfg.d_it / 10_000.0;
        let root_ok = (root - 1.7852).abs() < 1e-3;
        let agree = (root - grid).abs() <= grid_step;
        Ok((
            root_ok && agree,
            format!(
                "root {root:.5} m (expected 1.7852 +/- 0.001), grid scan {grid:.5} m, \
                 gap {:.2e} m (step {grid_step:.2e})",
                (root - grid).abs()
            ),
        ))
    })())
}

/// 7. Bound pipeline vs finite-difference oracle across small array sizes
///    and random angles, to 1e-4 relative.
pub fn check_crb_oracle() -> CheckReport {
    report("crb_oracle_agreement", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(CHECK_SEED ^ 7);
        let mut worst = 0.0f64;
        for &(n, m, t) in &[(4usize, 4usize, 4usize), (8, 4, 8), (8, 8, 8)] {
            let mut cfg = ScenarioConfig::<f64>::default_scene();
            cfg.layout.n_h = n;
            cfg.layout.m = m;
            cfg.snapshots = t;
            let schedule = ReflectionSchedule::dft(n, t)?;
            for _ in 0..5 {
                cfg.angles.theta_it_h = rng.random_range(-80.0f64..80.0).to_radians();
                let pipe = crb_appendix_pipeline(&cfg, &schedule, None)?.crb;
                let fd = crb_fd_oracle(&cfg, &schedule, None)?.crb;
                worst = worst.max((pipe - fd).abs() / fd);
            }
        }
        Ok((
            worst < 1e-4,
            format!("worst pipeline-vs-oracle relative error {worst:.3e}"),
        ))
    })())
}

/// 8. Closed-form vs pipeline consistency over a 37-point angle grid; the
///    ratio must be classified and the constant recorded.
pub fn check_crb_consistency() -> CheckReport {
    report("crb_consistency_classification", (|| {
        let cfg = ScenarioConfig::<f64>::default_scene();
        let schedule = ReflectionSchedule::dft(cfg.layout.n_h, cfg.snapshots)?;
        let grid: Vec<f64> = (0..37)
            .map(|k| (-85.0 + k as f64 * (170.0 / 36.0)).to_radians())
            .collect();
        let rep = crb_consistency_report(&cfg, &schedule, &grid)?;
        let class = match rep.class {
            RatioClass::ConstantFactor => "constant factor",
            RatioClass::Structural => "structural",
        };
        Ok((
            rep.mean_ratio.is_finite() && rep.mean_ratio > 0.0,
            format!(
                "closed/pipeline ratio {class}: mean {:.4}, \
                 max deviation from mean {:.2}%",
                rep.mean_ratio,
                100.0 * rep.max_rel_deviation
            ),
        ))
    })())
}

/// 9. The bound decreases strictly along both the sensor-count and
///    element-count sweeps.
pub fn check_crb_monotonicity() -> CheckReport {
    report("crb_monotonicity", (|| {
        let base = ScenarioConfig::<f64>::default_scene();
        let mut m_vals = Vec::new();
        for &m in &[4usize, 6, 8, 10] {
            let mut cfg = base.clone();
            cfg.layout.m = m;
            let schedule = ReflectionSchedule::dft(cfg.layout.n_h, cfg.snapshots)?;
            m_vals.push(crb_appendix_pipeline(&cfg, &schedule, None)?.crb);
        }
        let mut n_vals = Vec::new();
        for &n in &[16usize, 32, 64, 128] {
            let mut cfg = base.clone();
            cfg.layout.n_h = n;
            cfg.snapshots = n;
            let schedule = ReflectionSchedule::dft(n, n)?;
            n_vals.push(crb_appendix_pipeline(&cfg, &schedule, None)?.crb);
        }
        let m_ok = m_vals.windows(2).all(|w| w[1] < w[0]);
        let n_ok = n_vals.windows(2).all(|w| w[1] < w[0]);
        let fmt = |v: &[f64]| {
            v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
        };
        Ok((
            m_ok && n_ok,
            format!(
                "bound over M in {{4,6,8,10}}: [{}]; over N in {{16,32,64,128}}: [{}]",
                fmt(&m_vals),
                fmt(&n_vals)
            ),
        ))
    })())
}

fn unit_modulus_fading(real: &mut ChannelRealization<f64>) {
    let sr = real.beta_r.norm();
    if sr > 0.0 {
        real.beta_r /= sr;
        real.alpha_r /= sr;
        real.gamma_r /= sr;
    }
    let sd = real.beta_d.norm();
    if sd > 0.0 {
        real.beta_d /= sd;
        real.alpha_d /= sd;
    }
}

/// 10. High-SNR efficiency: with unit-modulus fading and off-grid targets
///     the empirical RMSE sits between the bound's square root and three
///     times it, over 1000 trials.
pub fn check_estimator_efficiency() -> CheckReport {
    report("high_snr_efficiency", (|| {
        let cfg = ScenarioConfig::<f64>::default_scene();
        let (p_r, p_d) = echo_link_powers(&cfg);
        let snr_db =
            linear_to_dbm((p_r + p_d) / cfg.layout.m as f64) - linear_to_dbm(cfg.cancelled_noise_var());
        let schedule = ReflectionSchedule::dft(cfg.layout.n_h, cfg.snapshots)?;
        let crb = crb_appendix_pipeline(&cfg, &schedule, None)?.crb;
        let grid: Vec<f64> = uniform_grid(58.0, 62.0, 0.01);
        let trials = 1000usize;
        let half_step = 0.005f64.to_radians();
        let sq_errs: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(CHECK_SEED, 10, 0, t));
                let truth = 60f64.to_radians() + rng.random_range(-half_step..half_step);
                let mut at = cfg.clone();
                at.angles.theta_it_h = truth;
                let mut real = draw_realization_with(&at, &mut rng).unwrap();
                unit_modulus_fading(&mut real);
                let block = simulate_cleaned_block(&at, &real, &schedule, &mut rng).unwrap();
                let est = estimate_doa(&block, &at.layout, &grid).unwrap();
                (est.theta_hat - truth).powi(2)
            })
            .collect();
        let rmse = (sq_errs.iter().sum::<f64>() / trials as f64).sqrt();
        let ratio = rmse / crb.sqrt();
        Ok((
            snr_db >= 20.0 && (1.0..=3.0).contains(&ratio),
            format!(
                "sensor SNR {snr_db:.1} dB, RMSE {:.4e} deg vs bound {:.4e} deg \
                 (ratio {ratio:.2}, target [1, 3])",
                rmse.to_degrees(),
                crb.sqrt().to_degrees()
            ),
        ))
    })())
}

fn rmse_with_band(errors_deg: &[f64]) -> (f64, f64) {
    let n = errors_deg.len() as f64;
    let mean_sq = errors_deg.iter().map(|e| e * e).sum::<f64>() / n;
    let rmse = mean_sq.sqrt();
    let var_sq =
        errors_deg.iter().map(|e| (e * e - mean_sq).powi(2)).sum::<f64>() / n;
    // delta method: var(rmse) = var(e^2) / (4 n mean_sq)
    let se = (var_sq / n).sqrt() / (2.0 * rmse);
    (rmse, se)
}

/// 11. Scheme ordering at one mid-range transmit power: the reflecting-
///     surface estimator beats the base-station benchmarks with
///     non-overlapping three-sigma RMSE bands, 1000 trials each.
pub fn check_scheme_ordering() -> CheckReport {
    report("scheme_ordering", (|| {
        let mut cfg = ScenarioConfig::<f64>::default_scene();
        // mid-range power: the fading outage floor no longer dominates the
        // surface-sensor estimator, while the base-station links stay weak
        cfg.tx_power = dbm_to_linear(5.0);
        let bench = BenchmarkGeometry::default();
        let grid: Vec<f64> = uniform_grid(-90.0, 90.0, 0.02);
        let trials = 1000usize;
        let mut bands = Vec::new();
        for (i, &scheme) in [SchemeId::Proposed, SchemeId::Bits, SchemeId::Bts, SchemeId::Btb]
            .iter()
            .enumerate()
        {
            let seeds: Vec<u64> =
                (0..trials).map(|t| trial_seed(CHECK_SEED, 11 + i, 0, t)).collect();
            let (outcomes, failed) =
                run_scheme_trials(scheme, &cfg, &bench, &grid, trials, &seeds);
            if !failed.is_empty() || outcomes.is_empty() {
                return Ok((false, format!("{} trials failed for {}", failed.len(), scheme.name())));
            }
            let errors: Vec<f64> = outcomes.iter().map(|o| o.error.to_degrees()).collect();
            bands.push((scheme, rmse_with_band(&errors)));
        }
        let (_, (p_rmse, p_se)) = bands[0];
        let mut ok = true;
        let mut parts = vec![format!("{} {:.3}+/-{:.3} deg", bands[0].0.name(), p_rmse, 3.0 * p_se)];
        for &(scheme, (rmse, se)) in &bands[1..] {
            ok &= p_rmse + 3.0 * p_se < rmse - 3.0 * se;
            parts.push(format!("{} {:.3}+/-{:.3} deg", scheme.name(), rmse, 3.0 * se));
        }
        Ok((ok, parts.join(", ")))
    })())
}

/// 12. Determinism: the same plan and master seed produce byte-identical
///     CSV output.
pub fn check_determinism() -> CheckReport {
    report("plan_determinism", (|| {
        let mut base = ScenarioConfig::<f64>::default_scene();
        base.layout.n_h = 8;
        base.layout.m = 4;
        base.snapshots = 8;
        let plan = ExperimentPlan {
            base,
            bench: BenchmarkGeometry::default(),
            sweep_param: SweepParam::TxPowerDbm,
            sweep_values: vec![10.0, 30.0],
            schemes: vec![SchemeId::Proposed, SchemeId::Bts],
            trials: 5,
            seed: 42,
            output: std::path::PathBuf::from("unused.csv"),
            grid_step_deg: 0.1,
        };
        let mut a = Vec::new();
        let mut b = Vec::new();
        emit_results(&run_experiment(&plan, Some(2)).unwrap().rows, &mut a).unwrap();
        emit_results(&run_experiment(&plan, Some(4)).unwrap().rows, &mut b).unwrap();
        Ok((
            a == b,
            format!("two runs, {} bytes each, byte-identical: {}", a.len(), a == b),
        ))
    })())
}

/// Run every check in order.
pub fn run_all() -> Vec<CheckReport> {
    vec![
        check_dft_optimality(),
        check_geometry_identities(),
        check_noiseless_music(),
        check_echo_power_formulas(),
        check_element_threshold(),
        check_power_minimizer(),
        check_crb_oracle(),
        check_crb_consistency(),
        check_crb_monotonicity(),
        check_estimator_efficiency(),
        check_scheme_ordering(),
        check_determinism(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_checks_pass() {
        for rep in [
            check_dft_optimality(),
            check_geometry_identities(),
            check_element_threshold(),
            check_power_minimizer(),
        ] {
            assert!(rep.passed, "{}: {}", rep.name, rep.detail);
        }
    }

    #[test]
    fn rmse_band_matches_hand_calc() {
        let errors = [1.0, -1.0, 1.0, -1.0];
        let (rmse, se) = rmse_with_band(&errors);
        assert!((rmse - 1.0).abs() < 1e-12);
        assert!(se.abs() < 1e-12);
    }
}
