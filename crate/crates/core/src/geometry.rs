//! Steering and response vectors for centered uniform arrays.
//!
//! All arrays are referenced to their centroid: element `m` (1-indexed) of an
//! `n`-element array sees the spatial phase `(2m - 1 - n) * pi * phase_diff / 2`,
//! so the exponents are symmetric about zero. That symmetry is what makes the
//! manifold orthogonal to its own derivative, which the variance analysis
//! relies on.

use crate::{cis, r, CVec, Error, Real, Result, C};

/// Parameters of one centered uniform steering vector.
#[derive(Debug, Clone, Copy)]
pub struct SteeringSpec<T> {
    /// Dimensionless spatial phase difference between adjacent elements.
    pub phase_diff: T,
    /// Element count (>= 1).
    pub size: usize,
}

/// Physical layout of the surface and its sensor line.
#[derive(Debug, Clone, Copy)]
pub struct ArrayLayout<T> {
    /// Horizontal reflecting element count.
    pub n_h: usize,
    /// Vertical reflecting element count (1 for a pure linear surface).
    pub n_v: usize,
    /// Horizontal sensor count.
    pub m: usize,
    /// Reflecting element spacing in meters.
    pub d_i: T,
    /// Sensor spacing in meters.
    pub d_s: T,
    /// Carrier wavelength in meters.
    pub wavelength: T,
}

impl<T: Real> ArrayLayout<T> {
    pub fn validate(&self) -> Result<()> {
        if self.n_h < 1 || self.n_v < 1 || self.m < 1 {
            return Err(Error::InvalidConfig("array counts must be >= 1".into()));
        }
        if self.d_i <= T::zero() || self.d_s <= T::zero() || self.wavelength <= T::zero() {
            return Err(Error::InvalidConfig(
                "spacings and wavelength must be strictly positive".into(),
            ));
        }
        Ok(())
    }

    /// Total reflecting element count.
    pub fn n_total(&self) -> usize {
        self.n_h * self.n_v
    }
}

/// Azimuth/vertical angle pairs for the controller and target links, radians.
#[derive(Debug, Clone, Copy)]
pub struct AngleSet<T> {
    /// Controller -> surface azimuth angle of arrival.
    pub theta_ci_h: T,
    /// Controller -> surface vertical angle of arrival.
    pub theta_ci_v: T,
    /// Target azimuth (the quantity being estimated).
    pub theta_it_h: T,
    /// Target vertical angle of departure.
    pub theta_it_v: T,
}

impl<T: Real> AngleSet<T> {
    pub fn validate(&self) -> Result<()> {
        let half_pi = T::frac_pi_2();
        for a in [
            self.theta_ci_h,
            self.theta_ci_v,
            self.theta_it_h,
            self.theta_it_v,
        ] {
            if a < -half_pi || a > half_pi {
                return Err(Error::InvalidConfig(
                    "angles must lie in [-pi/2, pi/2]".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Centered uniform steering vector; entry `m` (1-indexed) is
/// `exp(j (2m - 1 - n) pi phase / 2)`.
pub fn steering_vector<T: Real>(spec: SteeringSpec<T>) -> CVec<T> {
    let n = spec.size;
    let half = spec.phase_diff * T::pi() / r(2.0);
    CVec::from_fn(n, |m, _| {
        let k = r::<T>(2.0 * (m as f64 + 1.0) - 1.0 - n as f64);
        cis(k * half)
    })
}

/// Planar-surface response: Kronecker product of the horizontal and vertical
/// steering factors for the spatial directions
/// `phi_h = (2 d_i / lambda) sin(theta_h) sin(theta_v)` and
/// `phi_v = (2 d_i / lambda) cos(theta_v)`.
pub fn upa_response<T: Real>(theta_h: T, theta_v: T, layout: &ArrayLayout<T>) -> CVec<T> {
    let two_d = r::<T>(2.0) * layout.d_i / layout.wavelength;
    let phi_h = two_d * theta_h.sin() * theta_v.sin();
    let phi_v = two_d * theta_v.cos();
    let h = steering_vector(SteeringSpec {
        phase_diff: phi_h,
        size: layout.n_h,
    });
    let v = steering_vector(SteeringSpec {
        phase_diff: phi_v,
        size: layout.n_v,
    });
    h.kronecker(&v)
}

/// Sensor-line response `b(theta) = u((2 d_s / lambda) sin(theta), M)`.
pub fn sensor_response<T: Real>(theta: T, layout: &ArrayLayout<T>) -> CVec<T> {
    let phi = r::<T>(2.0) * layout.d_s / layout.wavelength * theta.sin();
    steering_vector(SteeringSpec {
        phase_diff: phi,
        size: layout.m,
    })
}

/// Combined horizontal spatial direction seen through the reflect path:
/// `(2 d_i / lambda) (sin(theta) sin(theta_it_v) + sin(theta_ci_h) sin(theta_ci_v))`.
pub fn combined_spatial_direction<T: Real>(
    theta: T,
    angles: &AngleSet<T>,
    layout: &ArrayLayout<T>,
) -> T {
    let two_d = r::<T>(2.0) * layout.d_i / layout.wavelength;
    two_d * (theta.sin() * angles.theta_it_v.sin() + angles.theta_ci_h.sin() * angles.theta_ci_v.sin())
}

/// Combined horizontal manifold `q(theta)` of length `n_h`.
pub fn combined_manifold<T: Real>(
    theta: T,
    angles: &AngleSet<T>,
    layout: &ArrayLayout<T>,
) -> CVec<T> {
    steering_vector(SteeringSpec {
        phase_diff: combined_spatial_direction(theta, angles, layout),
        size: layout.n_h,
    })
}

/// Analytic derivatives `(db/dtheta, dq/dtheta)` of the sensor response and
/// combined manifold. Entry `m` of `db` is
/// `j (2m - 1 - M)/2 * pi * (2 d_s/lambda) cos(theta) * b_m`, and entry `n` of
/// `dq` carries the `cos(theta) sin(theta_it_v)` scaling of the combined
/// direction's derivative.
pub fn manifold_derivatives<T: Real>(
    theta: T,
    angles: &AngleSet<T>,
    layout: &ArrayLayout<T>,
) -> (CVec<T>, CVec<T>) {
    let b = sensor_response(theta, layout);
    let q = combined_manifold(theta, angles, layout);
    let two = r::<T>(2.0);
    let db_scale = T::pi() * two * layout.d_s / layout.wavelength * theta.cos();
    let dq_scale =
        T::pi() * two * layout.d_i / layout.wavelength * theta.cos() * angles.theta_it_v.sin();
    let m = layout.m;
    let n = layout.n_h;
    let db = CVec::from_fn(m, |i, _| {
        let k = r::<T>((2.0 * (i as f64 + 1.0) - 1.0 - m as f64) / 2.0);
        C::new(T::zero(), k * db_scale) * b[i]
    });
    let dq = CVec::from_fn(n, |i, _| {
        let k = r::<T>((2.0 * (i as f64 + 1.0) - 1.0 - n as f64) / 2.0);
        C::new(T::zero(), k * dq_scale) * q[i]
    });
    (db, dq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx_eq::assert_c_close;

    pub(crate) mod approx_eq {
        use crate::C;
        pub fn c_close(a: C<f64>, b: C<f64>, tol: f64) -> bool {
            (a - b).norm() <= tol
        }
        macro_rules! assert_c_close {
            ($a:expr, $b:expr, $tol:expr) => {
                assert!(
                    crate::geometry::tests::approx_eq::c_close($a, $b, $tol),
                    "{:?} != {:?}",
                    $a,
                    $b
                )
            };
        }
        pub(crate) use assert_c_close;
    }

    fn layout(n_h: usize, n_v: usize, m: usize) -> ArrayLayout<f64> {
        ArrayLayout {
            n_h,
            n_v,
            m,
            d_i: 0.1,
            d_s: 0.1,
            wavelength: 0.2,
        }
    }

    fn angles(theta_ci_h: f64, theta_ci_v: f64, theta_it_v: f64) -> AngleSet<f64> {
        AngleSet {
            theta_ci_h,
            theta_ci_v,
            theta_it_h: 0.0,
            theta_it_v,
        }
    }

    #[test]
    fn generic_scalar_f32_instantiates() {
        let layout = ArrayLayout::<f32> {
            n_h: 8,
            n_v: 1,
            m: 4,
            d_i: 0.1,
            d_s: 0.1,
            wavelength: 0.2,
        };
        let angles = AngleSet::<f32> {
            theta_ci_h: 0.0,
            theta_ci_v: std::f32::consts::FRAC_PI_2,
            theta_it_h: 0.5,
            theta_it_v: std::f32::consts::FRAC_PI_2,
        };
        let b = sensor_response(0.5f32, &layout);
        let q = combined_manifold(0.5f32, &angles, &layout);
        assert!((b.norm_squared() - 4.0).abs() < 1e-5);
        assert!((q.norm_squared() - 8.0).abs() < 1e-5);
        let (db, dq) = manifold_derivatives(0.5f32, &angles, &layout);
        assert!(b.dotc(&db).norm() < 1e-4);
        assert!(q.dotc(&dq).norm() < 1e-3);
    }

    /// Independent per-entry oracle: evaluate the exponent directly.
    fn steering_oracle(phase: f64, n: usize) -> Vec<C<f64>> {
        (1..=n)
            .map(|m| {
                let e = (2.0 * m as f64 - 1.0 - n as f64) * std::f64::consts::PI * phase / 2.0;
                C::new(e.cos(), e.sin())
            })
            .collect()
    }

    #[test]
    fn zero_phase_is_all_ones() {
        let u = steering_vector(SteeringSpec {
            phase_diff: 0.0,
            size: 4,
        });
        for e in u.iter() {
            assert_c_close!(*e, C::new(1.0, 0.0), 1e-15);
        }
    }

    #[test]
    fn two_element_unit_phase() {
        let u = steering_vector(SteeringSpec {
            phase_diff: 1.0,
            size: 2,
        });
        assert_c_close!(u[0], C::new(0.0, -1.0), 1e-15);
        assert_c_close!(u[1], C::new(0.0, 1.0), 1e-15);
    }

    #[test]
    fn matches_per_entry_exponent_oracle() {
        let u = steering_vector(SteeringSpec {
            phase_diff: 0.5,
            size: 3,
        });
        let expect = steering_oracle(0.5, 3);
        for (a, b) in u.iter().zip(&expect) {
            assert_c_close!(*a, *b, 1e-14);
        }
        // odd and even sizes both follow the same exponent rule
        for &n in &[1usize, 2, 5, 8] {
            let u = steering_vector(SteeringSpec {
                phase_diff: -0.37,
                size: n,
            });
            for (a, b) in u.iter().zip(steering_oracle(-0.37, n)) {
                assert_c_close!(*a, b, 1e-14);
            }
        }
    }

    #[test]
    fn norm_and_modulus_invariants() {
        for &n in &[1usize, 2, 3, 7, 64] {
            let u = steering_vector(SteeringSpec {
                phase_diff: 0.83,
                size: n,
            });
            assert!((u.norm_squared() - n as f64).abs() < 1e-12);
            for e in u.iter() {
                assert!((e.norm() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let u = steering_vector(SteeringSpec {
            phase_diff: 0.3,
            size: 5,
        });
        let v = steering_vector(SteeringSpec {
            phase_diff: -0.3,
            size: 5,
        });
        for (a, b) in u.iter().zip(v.iter()) {
            assert_c_close!(a.conj(), *b, 1e-15);
        }
    }

    #[test]
    fn upa_zero_angles_horizontal_factor_all_ones() {
        let l = layout(4, 1, 8);
        let a = upa_response(0.0, 0.0, &l);
        for e in a.iter() {
            assert_c_close!(*e, C::new(1.0, 0.0), 1e-15);
        }
    }

    #[test]
    fn upa_collapses_to_steering_for_scalar_vertical() {
        let l = layout(2, 1, 8);
        let th = 0.4;
        let tv = 0.9;
        let a = upa_response(th, tv, &l);
        let phi = 2.0 * l.d_i / l.wavelength * th.sin() * tv.sin();
        let u = steering_vector(SteeringSpec {
            phase_diff: phi,
            size: 2,
        });
        for (x, y) in a.iter().zip(u.iter()) {
            assert_c_close!(*x, *y, 1e-14);
        }
    }

    #[test]
    fn upa_matches_double_loop_kronecker() {
        // (p, q) entry equals horizontal entry p times vertical entry q.
        let l = layout(3, 3, 8);
        let (th, tv) = (0.31, -0.72);
        let a = upa_response(th, tv, &l);
        let phi_h = 2.0 * l.d_i / l.wavelength * th.sin() * tv.sin();
        let phi_v = 2.0 * l.d_i / l.wavelength * tv.cos();
        let h = steering_oracle(phi_h, 3);
        let v = steering_oracle(phi_v, 3);
        for p in 0..3 {
            for q in 0..3 {
                assert_c_close!(a[p * 3 + q], h[p] * v[q], 1e-14);
            }
        }
    }

    #[test]
    fn sensor_response_basics() {
        let l = layout(4, 1, 8);
        let b0 = sensor_response(0.0, &l);
        for e in b0.iter() {
            assert_c_close!(*e, C::new(1.0, 0.0), 1e-15);
        }
        for i in 0..181 {
            let th = -std::f64::consts::FRAC_PI_2 + i as f64 * std::f64::consts::PI / 180.0;
            let b = sensor_response(th, &l);
            assert!((b.norm_squared() - 8.0).abs() < 1e-12);
        }
        // M = 2, half-wavelength spacing, 30 degrees: phases +-pi/4
        let l2 = layout(4, 1, 2);
        let b = sensor_response(std::f64::consts::FRAC_PI_6, &l2);
        let p = std::f64::consts::PI * 0.5 * 0.5 / 2.0 * 2.0; // pi * 0.5 * sin(30deg)/2 * (2m-1-M) with m=2
        assert_c_close!(b[1], C::new(p.cos(), p.sin()), 1e-14);
        assert_c_close!(b[0], C::new(p.cos(), -p.sin()), 1e-14);
    }

    #[test]
    fn combined_manifold_zero_direction() {
        let l = layout(4, 1, 8);
        let ang = angles(0.0, 0.0, 0.0);
        // sin(theta_it_v) = 0 kills the theta term; controller term also zero
        let q = combined_manifold(1.0471975511965976, &ang, &l); // 60 degrees
        for e in q.iter() {
            assert_c_close!(*e, C::new(1.0, 0.0), 1e-14);
        }
    }

    #[test]
    fn centroid_orthogonality_on_grid() {
        let l = layout(8, 1, 6);
        let ang = angles(0.2, 1.0, std::f64::consts::FRAC_PI_2);
        for i in 0..181 {
            let th = -std::f64::consts::FRAC_PI_2 + i as f64 * std::f64::consts::PI / 180.0;
            let b = sensor_response(th, &l);
            let q = combined_manifold(th, &ang, &l);
            let (db, dq) = manifold_derivatives(th, &ang, &l);
            assert!(b.dotc(&db).norm() < 1e-10);
            assert!(q.dotc(&dq).norm() < 1e-10);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let l = layout(6, 1, 5);
        let ang = angles(0.15, 0.6, 1.1);
        let h = 1e-6;
        for &th in &[-1.2, -0.3, 0.0, 0.52, 1.31] {
            let (db, dq) = manifold_derivatives(th, &ang, &l);
            let bp = sensor_response(th + h, &l);
            let bm = sensor_response(th - h, &l);
            let qp = combined_manifold(th + h, &ang, &l);
            let qm = combined_manifold(th - h, &ang, &l);
            for i in 0..l.m {
                let fd = (bp[i] - bm[i]) / C::new(2.0 * h, 0.0);
                assert!((fd - db[i]).norm() <= 1e-6 * (1.0 + db[i].norm()));
            }
            for i in 0..l.n_h {
                let fd = (qp[i] - qm[i]) / C::new(2.0 * h, 0.0);
                assert!((fd - dq[i]).norm() <= 1e-6 * (1.0 + dq[i].norm()));
            }
        }
    }

    #[test]
    fn derivative_vanishes_at_endfire() {
        let l = layout(6, 1, 5);
        let ang = angles(0.0, 0.0, std::f64::consts::FRAC_PI_2);
        for &th in &[std::f64::consts::FRAC_PI_2, -std::f64::consts::FRAC_PI_2] {
            let (db, _) = manifold_derivatives(th, &ang, &l);
            for e in db.iter() {
                assert!(e.norm() < 1e-15);
            }
        }
    }
}
