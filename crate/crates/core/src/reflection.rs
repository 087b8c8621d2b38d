//! Reflection schedules and the average received-power objective.
//!
//! A schedule is the N x T matrix of unit-modulus per-element reflection
//! coefficients applied across a snapshot block. The DFT schedule (first N
//! columns of a T x T DFT matrix) makes the time-averaged outer product the
//! identity, which is the optimality condition of the worst-case power
//! maximization and yields an omnidirectional scan.

use std::io::Write;

use crate::channel::ScenarioConfig;
use crate::geometry;
use crate::{cis, r, CMat, CVec, Error, Real, Result, C};

/// Unit-modulus N x T reflection schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionSchedule<T> {
    theta_matrix: CMat<T>,
}

impl<T: Real> ReflectionSchedule<T> {
    /// First `n` rows of the `t x t` DFT matrix:
    /// `exp(-j 2 pi (t-1)(n-1) / T)`. Requires `t >= n` so the rows stay
    /// orthogonal.
    pub fn dft(n: usize, t: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidConfig("element count must be >= 1".into()));
        }
        if t < n {
            return Err(Error::InvalidConfig(format!(
                "snapshots ({t}) must be >= elements ({n}) for an orthogonal schedule"
            )));
        }
        let w = -r::<T>(2.0) * T::pi() / r(t as f64);
        let theta_matrix = CMat::from_fn(n, t, |row, col| {
            // phase reduced modulo T before multiplying to keep precision at
            // large products
            let k = ((row * col) % t) as f64;
            cis(w * r(k))
        });
        Ok(Self { theta_matrix })
    }

    /// Independent uniform random phase per element and snapshot.
    pub fn random_phase<R: rand::Rng>(n: usize, t: usize, rng: &mut R) -> Self {
        let theta_matrix = CMat::from_fn(n, t, |_, _| {
            let w: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            cis(r(w))
        });
        Self { theta_matrix }
    }

    /// All coefficients equal to one (a fixed broadside beam).
    pub fn constant(n: usize, t: usize) -> Self {
        Self {
            theta_matrix: CMat::from_element(n, t, C::new(T::one(), T::zero())),
        }
    }

    /// Wrap an explicit matrix, enforcing the unit-modulus constraint.
    pub fn from_matrix(theta_matrix: CMat<T>) -> Result<Self> {
        let tol = r::<T>(1e-9);
        for e in theta_matrix.iter() {
            if (e.norm_sqr().sqrt() - T::one()).abs() > tol {
                return Err(Error::InvalidConfig(
                    "reflection coefficients must have unit modulus".into(),
                ));
            }
        }
        Ok(Self { theta_matrix })
    }

    pub fn elements(&self) -> usize {
        self.theta_matrix.nrows()
    }

    pub fn snapshots(&self) -> usize {
        self.theta_matrix.ncols()
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.theta_matrix
    }

    /// Reflection vector applied at snapshot `t`.
    pub fn column(&self, t: usize) -> CVec<T> {
        self.theta_matrix.column(t).clone_owned()
    }

    /// Time-averaged outer product `(1/T) sum_t phi[t] phi[t]^H`. Hermitian
    /// with exact unit diagonal.
    pub fn covariance(&self) -> CMat<T> {
        let t = self.snapshots();
        let mut r_phi = &self.theta_matrix * self.theta_matrix.adjoint();
        r_phi /= C::new(r(t as f64), T::zero());
        // symmetrize and pin the diagonal, which is exactly 1 for unit-modulus
        // entries up to rounding
        let n = self.elements();
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = (r_phi[(i, j)] + r_phi[(j, i)].conj()) / C::new(r(2.0), T::zero());
                r_phi[(i, j)] = avg;
                r_phi[(j, i)] = avg.conj();
            }
            r_phi[(i, i)] = C::new(T::one(), T::zero());
        }
        r_phi
    }

    /// Write phases in radians as CSV, one row per element, one column per
    /// snapshot.
    pub fn export_phases_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for row in 0..self.elements() {
            let mut first = true;
            for col in 0..self.snapshots() {
                if !first {
                    write!(out, ",")?;
                }
                first = false;
                let e = self.theta_matrix[(row, col)];
                let phase = e.im.atan2(e.re).to_f64().unwrap_or(f64::NAN);
                write!(out, "{phase}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Directional power kernel `B(theta) = M q*(theta) q^T(theta)`.
pub fn power_kernel<T: Real>(theta: T, cfg: &ScenarioConfig<T>) -> CMat<T> {
    let q = geometry::combined_manifold(theta, &cfg.angles, &cfg.layout);
    let m = C::new(r(cfg.layout.m as f64), T::zero());
    let qc = q.map(|e| e.conj());
    (&qc * q.transpose()) * m
}

/// Average received signal power at the sensors under the schedule:
/// `E|gamma|^2 tr(R_phi B) + M E|alpha_d|^2`, scaled by the transmit power.
/// Cross terms vanish because the fading draws are zero mean.
pub fn average_power_objective<T: Real>(
    schedule: &ReflectionSchedule<T>,
    cfg: &ScenarioConfig<T>,
) -> T {
    let r_phi = schedule.covariance();
    let b = power_kernel(cfg.angles.theta_it_h, cfg);
    let tr = (&r_phi * &b).trace().re;
    let e_gamma2 =
        cfg.g_r_gain() * cfg.g_r_gain() * cfg.alpha_ci().norm_sqr() * cfg.eta_r * cfg.eta_r;
    let e_alpha_d2 = cfg.g_d_gain() * cfg.g_d_gain();
    cfg.tx_power * (e_gamma2 * tr + r::<T>(cfg.layout.m as f64) * e_alpha_d2)
}

/// Outcome of the small-size optimality check of the worst-case power
/// problem.
#[derive(Debug, Clone)]
pub struct P1Report<T> {
    /// Largest deviation of any coefficient modulus from 1.
    pub max_modulus_error: T,
    /// Largest deviation of any covariance diagonal from 1.
    pub max_diagonal_error: T,
    /// Worst-case (over the angle grid) normalized objective of the schedule
    /// under test.
    pub worst_case_value: T,
    /// Best worst-case value found among the random competitor schedules.
    pub best_competitor_value: T,
    /// Angles (radians) where a competitor beat the schedule, if any.
    pub violations: Vec<T>,
}

impl<T: Real> P1Report<T> {
    pub fn passed(&self) -> bool {
        let tol = r::<T>(1e-9);
        self.max_modulus_error < tol
            && self.max_diagonal_error < tol
            && self.violations.is_empty()
    }
}

/// Empirically verify the optimality conditions of the worst-case power
/// problem at small sizes: constraints hold, and no sampled random
/// unit-modulus schedule achieves a larger worst-case `tr(R_phi B(theta))`
/// over the angle grid.
pub fn verify_p1_optimality<T: Real, R: rand::Rng>(
    schedule: &ReflectionSchedule<T>,
    cfg: &ScenarioConfig<T>,
    competitors: usize,
    rng: &mut R,
) -> Result<P1Report<T>> {
    let n = schedule.elements();
    let t = schedule.snapshots();
    if n > 6 || t > 8 {
        return Err(Error::InvalidConfig(
            "optimality check is restricted to N <= 6, T <= 8".into(),
        ));
    }
    let grid: Vec<T> = (0..181)
        .map(|i| r::<T>(-90.0 + i as f64) * T::pi() / r(180.0))
        .collect();

    let mut max_modulus_error = T::zero();
    for e in schedule.matrix().iter() {
        max_modulus_error = max_modulus_error.max((e.norm_sqr().sqrt() - T::one()).abs());
    }
    let r_phi = schedule.covariance();
    let mut max_diagonal_error = T::zero();
    for i in 0..n {
        max_diagonal_error = max_diagonal_error.max((r_phi[(i, i)].re - T::one()).abs());
    }

    let worst_case = |r_phi: &CMat<T>| -> T {
        let mut worst = T::from_f64(f64::INFINITY).unwrap();
        for &th in &grid {
            let b = power_kernel(th, cfg);
            let v = (r_phi * &b).trace().re;
            worst = worst.min(v);
        }
        worst
    };

    let worst_case_value = worst_case(&r_phi);
    let mut best_competitor_value = T::from_f64(f64::NEG_INFINITY).unwrap();
    let mut violations = Vec::new();
    for _ in 0..competitors {
        let comp = ReflectionSchedule::random_phase(n, t, rng);
        let v = worst_case(&comp.covariance());
        best_competitor_value = best_competitor_value.max(v);
        if v > worst_case_value + r(1e-9) {
            violations.push(v);
        }
    }
    Ok(P1Report {
        max_modulus_error,
        max_diagonal_error,
        worst_case_value,
        best_competitor_value,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ScenarioConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_element_schedule_is_all_ones() {
        let s = ReflectionSchedule::<f64>::dft(1, 5).unwrap();
        for e in s.matrix().iter() {
            assert!((e - C::new(1.0, 0.0)).norm() < 1e-15);
        }
        let r_phi = s.covariance();
        assert_eq!(r_phi.nrows(), 1);
        assert!((r_phi[(0, 0)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn square_dft_orthogonality() {
        let s = ReflectionSchedule::<f64>::dft(4, 4).unwrap();
        let prod = s.matrix() * s.matrix().adjoint();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 4.0 } else { 0.0 };
                assert!((prod[(i, j)] - C::new(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn large_dft_covariance_is_identity() {
        let s = ReflectionSchedule::<f64>::dft(64, 64).unwrap();
        let r_phi = s.covariance();
        let mut max_off = 0.0f64;
        for i in 0..64 {
            for j in 0..64 {
                if i != j {
                    max_off = max_off.max(r_phi[(i, j)].norm());
                }
            }
        }
        assert!(max_off < 1e-12, "max off-diagonal {max_off}");
    }

    #[test]
    fn rejects_short_schedule() {
        assert!(ReflectionSchedule::<f64>::dft(8, 4).is_err());
    }

    #[test]
    fn constant_schedule_covariance_all_ones() {
        let s = ReflectionSchedule::<f64>::constant(3, 5);
        let r_phi = s.covariance();
        for e in r_phi.iter() {
            assert!((e - C::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn random_phase_covariance_concentrates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = ReflectionSchedule::<f64>::random_phase(4, 10_000, &mut rng);
        let r_phi = s.covariance();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    // off-diagonals decay like 1/sqrt(T)
                    assert!(r_phi[(i, j)].norm() < 5.0 / (10_000f64).sqrt());
                }
            }
        }
    }

    fn small_cfg() -> ScenarioConfig<f64> {
        let mut cfg = ScenarioConfig::<f64>::default_scene();
        cfg.layout.n_h = 4;
        cfg.layout.m = 4;
        cfg.snapshots = 4;
        cfg
    }

    #[test]
    fn objective_zero_without_target() {
        let mut cfg = small_cfg();
        cfg.kappa = 1e-300;
        let s = ReflectionSchedule::dft(4, 4).unwrap();
        assert!(average_power_objective(&s, &cfg) < 1e-200);
    }

    #[test]
    fn dft_objective_matches_trace_identity() {
        // with R_phi = I the trace is tr(B) = N M, independent of angle
        let cfg = small_cfg();
        let s = ReflectionSchedule::dft(4, 4).unwrap();
        let p = average_power_objective(&s, &cfg);
        let e_gamma2 = cfg.g_r_gain().powi(2) * cfg.alpha_ci().norm_sqr() * cfg.eta_r.powi(2);
        let expect = cfg.tx_power
            * (e_gamma2 * 4.0 * 4.0 + 4.0 * cfg.g_d_gain().powi(2));
        assert!((p / expect - 1.0).abs() < 1e-12);
    }

    #[test]
    fn objective_constant_over_angle_under_dft() {
        let mut cfg = small_cfg();
        let s = ReflectionSchedule::dft(4, 4).unwrap();
        let p0 = average_power_objective(&s, &cfg);
        for i in 0..37 {
            cfg.angles.theta_it_h = -1.4 + i as f64 * 2.8 / 36.0;
            let p = average_power_objective(&s, &cfg);
            assert!((p / p0 - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn objective_invariant_to_global_snapshot_phase() {
        let cfg = small_cfg();
        let s = ReflectionSchedule::dft(4, 4).unwrap();
        let mut m = s.matrix().clone();
        let g = crate::cis(1.234f64);
        for i in 0..4 {
            m[(i, 2)] *= g;
        }
        let s2 = ReflectionSchedule::from_matrix(m).unwrap();
        let a = average_power_objective(&s, &cfg);
        let b = average_power_objective(&s2, &cfg);
        assert!((a / b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_expectation_matches_objective() {
        // brute-force the fading expectation of the received power
        let cfg = small_cfg();
        let s = ReflectionSchedule::dft(4, 4).unwrap();
        let p = average_power_objective(&s, &cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let b = crate::geometry::sensor_response(cfg.angles.theta_it_h, &cfg.layout);
        let q = crate::geometry::combined_manifold(cfg.angles.theta_it_h, &cfg.angles, &cfg.layout);
        let draws = 100_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let real = crate::channel::draw_realization_with(&cfg, &mut rng).unwrap();
            let mut trial = 0.0;
            for t in 0..4 {
                let phi = s.column(t);
                let sfac: C<f64> = q.iter().zip(phi.iter()).map(|(a, b)| a * b).sum();
                let f = real.gamma_r * sfac + real.alpha_d;
                trial += (f * C::new(cfg.probe_amplitude(), 0.0)).norm_sqr() * b.norm_squared();
            }
            acc += trial / 4.0;
        }
        let mc = acc / draws as f64;
        assert!((mc / p - 1.0).abs() < 0.02, "ratio {}", mc / p);
    }

    #[test]
    fn p1_dft_beats_random_and_constant() {
        let cfg = small_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let dft = ReflectionSchedule::dft(4, 4).unwrap();
        let report = verify_p1_optimality(&dft, &cfg, 200, &mut rng).unwrap();
        assert!(report.passed(), "{report:?}");
        // worst case of the DFT schedule equals N*M on the grid
        assert!((report.worst_case_value - 16.0).abs() < 1e-9);

        let constant = ReflectionSchedule::constant(4, 4);
        let creport = verify_p1_optimality(&constant, &cfg, 0, &mut rng).unwrap();
        assert!(creport.worst_case_value < 16.0);
    }

    #[test]
    fn trace_identity_sanity() {
        let cfg = small_cfg();
        let b = power_kernel(0.3, &cfg);
        let id = CMat::<f64>::identity(4, 4);
        let t1 = (&id * &b).trace();
        let t2 = b.trace();
        assert!((t1 - t2).norm() < 1e-12);
    }
}
