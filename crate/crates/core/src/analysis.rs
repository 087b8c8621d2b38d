//! Closed-form performance analysis: average echo-link powers, the
//! element-count threshold, the user-aided distance sweep, and the estimation
//! variance lower bound (CRB) computed three independent ways.
//!
//! The three CRB paths are:
//!
//! 1. [`crb_closed_form`] — the printed single-expression bound;
//! 2. [`crb_appendix_pipeline`] — the information-matrix construction it was
//!    derived from (trace forms over the schedule covariance `R_c` and a
//!    Schur complement over the nuisance amplitude);
//! 3. [`crb_fd_oracle`] — the Fisher information of the approximate Gaussian
//!    snapshot model with derivatives taken by central finite differences,
//!    plus an analytic-derivative twin ([`crb_model_analytic`]).
//!
//! Paths 2 and 3 agree to rounding by construction; path 1 is compared
//! against them by [`crb_consistency_report`], which classifies any gap as a
//! constant factor or a structural (angle-dependent) disagreement.

use nalgebra::Matrix3;

use crate::channel::ScenarioConfig;
use crate::geometry;
use crate::reflection::ReflectionSchedule;
use crate::{cis, r, CMat, CVec, Error, Real, Result, C};

/// Closed-form power summary at one probing-source distance.
#[derive(Debug, Clone, Copy)]
pub struct PowerBreakdown<T> {
    /// Average surface-reflected echo power at the sensors.
    pub p_r: T,
    /// Average direct echo power at the sensors.
    pub p_d: T,
    /// Combined power `p_r + p_d`.
    pub p_c: T,
    /// Element-count threshold at this geometry.
    pub n_th: T,
    /// Probing device -> target distance implied by the geometry.
    pub d_ut: T,
}

/// Average received signal powers at the sensors over the surface-reflected
/// and direct echo links under the scanning (identity-covariance) schedule:
///
/// `P_r = N M eta_r lambda^4 kappa / (1024 pi^5 d_it^4 d_ci^2)`,
/// `P_d = M lambda^2 kappa / (64 pi^3 d_ct^2 d_it^2)`,
///
/// both scaled by the transmit power. Pure formula; no validation, so
/// degenerate inputs (e.g. `kappa = 0`) evaluate to their algebraic values.
pub fn echo_link_powers<T: Real>(cfg: &ScenarioConfig<T>) -> (T, T) {
    let lam = cfg.layout.wavelength;
    let n = r::<T>(cfg.layout.n_h as f64);
    let m = r::<T>(cfg.layout.m as f64);
    let pi = T::pi();
    let pi3 = pi * pi * pi;
    let pi5 = pi3 * pi * pi;
    let lam2 = lam * lam;
    let p_r = n * m * cfg.eta_r * lam2 * lam2 * cfg.kappa
        / (r::<T>(1024.0) * pi5 * cfg.d_it.powi(4) * cfg.d_ci * cfg.d_ci);
    let p_d =
        m * lam2 * cfg.kappa / (r::<T>(64.0) * pi3 * cfg.d_ct * cfg.d_ct * cfg.d_it * cfg.d_it);
    (cfg.tx_power * p_r, cfg.tx_power * p_d)
}

/// Element count above which the reflected echo link outpowers the direct
/// one: `N_th = 16 pi^2 d_it^2 d_ci^2 / (eta_r lambda^2 d_ct^2)`.
pub fn element_threshold<T: Real>(cfg: &ScenarioConfig<T>) -> T {
    let pi2 = T::pi() * T::pi();
    let lam2 = cfg.layout.wavelength * cfg.layout.wavelength;
    r::<T>(16.0) * pi2 * cfg.d_it * cfg.d_it * cfg.d_ci * cfg.d_ci
        / (cfg.eta_r * lam2 * cfg.d_ct * cfg.d_ct)
}

/// Echo powers when the probing source is a device on the array axis at
/// distance `d_ui` from the surface, between surface and target (`theta = 0`
/// geometry, so the device -> target distance is `d_it - d_ui`). The
/// controller hop of the reflected link and the direct hop both move to the
/// device: `d_ci -> d_ui`, `d_ct -> d_ut`.
pub fn user_aided_power<T: Real>(d_ui: T, cfg: &ScenarioConfig<T>) -> Result<PowerBreakdown<T>> {
    if d_ui <= T::zero() || d_ui >= cfg.d_it {
        return Err(Error::InvalidConfig(format!(
            "device distance must lie strictly between the surface and the target (0, {:?})",
            cfg.d_it
        )));
    }
    let d_ut = cfg.d_it - d_ui;
    let mut moved = cfg.clone();
    moved.d_ci = d_ui;
    moved.d_ct = d_ut;
    let (p_r, p_d) = echo_link_powers(&moved);
    Ok(PowerBreakdown {
        p_r,
        p_d,
        p_c: p_r + p_d,
        n_th: element_threshold(&moved),
        d_ut,
    })
}

/// Device -> target distance at general azimuth:
/// `sqrt(d_ui^2 + d_it^2 - 2 d_ui d_it cos(theta))`.
pub fn device_target_distance<T: Real>(d_ui: T, d_it: T, theta: T) -> T {
    (d_ui * d_ui + d_it * d_it - r::<T>(2.0) * d_ui * d_it * theta.cos()).sqrt()
}

/// First derivative of the combined power w.r.t. the device distance,
/// evaluated from the printed rational form
///
/// `P_c' = [-2 N M eta_r lambda^4 kappa (d_it - d_ui)^3
///          + 32 M lambda^2 kappa pi^2 d_it^2 d_ui^3]
///         / [1024 pi^5 d_it^4 d_ui^3 (d_it - d_ui)^3]`,
///
/// scaled by the transmit power.
pub fn combined_power_derivative<T: Real>(d_ui: T, cfg: &ScenarioConfig<T>) -> Result<T> {
    if d_ui <= T::zero() || d_ui >= cfg.d_it {
        return Err(Error::InvalidConfig(
            "device distance must lie strictly between the surface and the target".into(),
        ));
    }
    let lam = cfg.layout.wavelength;
    let lam2 = lam * lam;
    let n = r::<T>(cfg.layout.n_h as f64);
    let m = r::<T>(cfg.layout.m as f64);
    let pi = T::pi();
    let pi2 = pi * pi;
    let pi5 = pi2 * pi2 * pi;
    let gap = cfg.d_it - d_ui;
    let num = -r::<T>(2.0) * n * m * cfg.eta_r * lam2 * lam2 * cfg.kappa * gap.powi(3)
        + r::<T>(32.0) * m * lam2 * cfg.kappa * pi2 * cfg.d_it * cfg.d_it * d_ui.powi(3);
    let den = r::<T>(1024.0) * pi5 * cfg.d_it.powi(4) * d_ui.powi(3) * gap.powi(3);
    Ok(cfg.tx_power * num / den)
}

/// Closed-form root of the derivative's numerator:
/// `d_ui* = d_it r / (1 + r)` with `r = (N eta_r lambda^2 / (16 pi^2 d_it^2))^(1/3)`.
pub fn combined_power_minimizer<T: Real>(cfg: &ScenarioConfig<T>) -> T {
    let lam2 = cfg.layout.wavelength * cfg.layout.wavelength;
    let pi2 = T::pi() * T::pi();
    let n = r::<T>(cfg.layout.n_h as f64);
    let ratio =
        (n * cfg.eta_r * lam2 / (r::<T>(16.0) * pi2 * cfg.d_it * cfg.d_it)).powf(r(1.0 / 3.0));
    cfg.d_it * ratio / (T::one() + ratio)
}

/// Locate the derivative's sign change by bisection. The numerator is
/// strictly increasing in `d_ui`, so the bracket never loses the root.
pub fn combined_power_minimizer_bisect<T: Real>(cfg: &ScenarioConfig<T>, tol: T) -> Result<T> {
    let mut lo = cfg.d_it * r::<T>(1e-9);
    let mut hi = cfg.d_it * (T::one() - r::<T>(1e-9));
    if combined_power_derivative(lo, cfg)? >= T::zero()
        || combined_power_derivative(hi, cfg)? <= T::zero()
    {
        return Err(Error::Degenerate(
            "combined-power derivative does not change sign on the interior".into(),
        ));
    }
    while hi - lo > tol {
        let mid = (lo + hi) / r(2.0);
        if combined_power_derivative(mid, cfg)? < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / r(2.0))
}

/// Brute-force minimizer of the combined power on a uniform interior grid of
/// `points` samples.
pub fn combined_power_minimizer_grid<T: Real>(cfg: &ScenarioConfig<T>, points: usize) -> Result<T> {
    let step = cfg.d_it / r::<T>((points + 1) as f64);
    let mut best = step;
    let mut best_val = T::from_f64(f64::INFINITY).unwrap();
    for i in 1..=points {
        let d = step * r::<T>(i as f64);
        let p = user_aided_power(d, cfg)?.p_c;
        if p < best_val {
            best_val = p;
            best = d;
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// CRB
// ---------------------------------------------------------------------------

/// Deterministic dominant echo amplitude: the larger of the two link gains
/// with the fading moduli pinned to one.
pub fn xi_deterministic<T: Real>(cfg: &ScenarioConfig<T>) -> T {
    cfg.g_r_gain().max(cfg.g_d_gain())
}

/// Distinguished value reported when the echo amplitude vanishes and the
/// bound is unbounded.
pub fn infinite_crb<T: Real>() -> T {
    T::from_f64(f64::INFINITY).unwrap()
}

fn crb_coefficient<T: Real>(cfg: &ScenarioConfig<T>, snapshots: usize, xi: T) -> T {
    let amp2 = xi * xi * cfg.alpha_ci().norm_sqr() * cfg.eta_r * cfg.eta_r;
    r::<T>(2.0) * r::<T>(snapshots as f64) * cfg.tx_power * amp2 / cfg.cancelled_noise_var()
}

/// Schedule-dependent correction term of the closed-form bound:
/// `p(theta) = Re{ (2 / (T conj(alpha_ci eta_r))) sum_t sum_n phi[t]_n
/// exp(j (N + 1 - 2n) pi (d_i/lambda) sigma_bar(theta)) }`.
pub fn p_theta<T: Real>(theta: T, cfg: &ScenarioConfig<T>, schedule: &ReflectionSchedule<T>) -> T {
    let n = schedule.elements();
    let t_count = schedule.snapshots();
    let sb = sigma_bar(theta, cfg);
    let base = T::pi() * cfg.layout.d_i / cfg.layout.wavelength * sb;
    let mut acc = C::new(T::zero(), T::zero());
    for t in 0..t_count {
        for row in 0..n {
            let k = r::<T>((n as f64 + 1.0) - 2.0 * (row as f64 + 1.0));
            acc += schedule.matrix()[(row, t)] * cis(k * base);
        }
    }
    let denom = (cfg.alpha_ci() * C::new(cfg.eta_r, T::zero())).conj();
    (acc * r::<T>(2.0 / t_count as f64) / denom).re
}

/// `sigma(theta) = cos(theta) sin(theta_it_v) + sin(theta_ci_h) sin(theta_ci_v)`
/// as printed in the bound.
pub fn sigma_fun<T: Real>(theta: T, cfg: &ScenarioConfig<T>) -> T {
    theta.cos() * cfg.angles.theta_it_v.sin()
        + cfg.angles.theta_ci_h.sin() * cfg.angles.theta_ci_v.sin()
}

/// `sigma_bar(theta) = sin(theta) sin(theta_it_v) + sin(theta_ci_h) sin(theta_ci_v)`.
pub fn sigma_bar<T: Real>(theta: T, cfg: &ScenarioConfig<T>) -> T {
    theta.sin() * cfg.angles.theta_it_v.sin()
        + cfg.angles.theta_ci_h.sin() * cfg.angles.theta_ci_v.sin()
}

/// Closed-form DOA estimation variance bound, evaluated verbatim:
///
/// `CRB = (1/2) / { (T |xi a eta|^2 / sigma^2) [ w2 (N^3-N)/6 sigma(theta)^2 M
///   + w1 (M^3-M)/6 cos^2(theta) (N + 1/|a eta|^2 + p(theta)) ] }`
///
/// with `w1 = pi^2 d_s^2 / lambda^2`, `w2 = pi^2 d_i^2 / lambda^2`, scaled by
/// the transmit power through the amplitude coefficient. The target azimuth is
/// taken from the scenario. Radians squared.
pub fn crb_closed_form<T: Real>(
    cfg: &ScenarioConfig<T>,
    schedule: &ReflectionSchedule<T>,
) -> Result<T> {
    crb_closed_form_with_xi(cfg, schedule, xi_deterministic(cfg))
}

/// Same bound with a caller-chosen echo amplitude modulus, used for fading
/// averages.
pub fn crb_closed_form_with_xi<T: Real>(
    cfg: &ScenarioConfig<T>,
    schedule: &ReflectionSchedule<T>,
    xi: T,
) -> Result<T> {
    cfg.layout.validate()?;
    cfg.angles.validate()?;
    if schedule.elements() != cfg.layout.n_h {
        return Err(Error::DimensionMismatch {
            expected: cfg.layout.n_h,
            got: schedule.elements(),
        });
    }
    if xi == T::zero() {
        return Ok(infinite_crb());
    }
    let theta = cfg.angles.theta_it_h;
    let lam2 = cfg.layout.wavelength * cfg.layout.wavelength;
    let pi2 = T::pi() * T::pi();
    let w1 = pi2 * cfg.layout.d_s * cfg.layout.d_s / lam2;
    let w2 = pi2 * cfg.layout.d_i * cfg.layout.d_i / lam2;
    let nf = cfg.layout.n_h as f64;
    let mf = cfg.layout.m as f64;
    let n3 = r::<T>((nf * nf * nf - nf) / 6.0);
    let m3 = r::<T>((mf * mf * mf - mf) / 6.0);
    let cos2 = theta.cos() * theta.cos();
    let s2 = sigma_fun(theta, cfg).powi(2);
    let amp2 = cfg.alpha_ci().norm_sqr() * cfg.eta_r * cfg.eta_r;
    let inner = w2 * n3 * s2 * r(mf)
        + w1 * m3 * cos2 * (r::<T>(nf) + T::one() / amp2 + p_theta(theta, cfg, schedule));
    let coef = crb_coefficient(cfg, schedule.snapshots(), xi) / r::<T>(2.0);
    Ok(r::<T>(0.5) / (coef * inner))
}

/// Monte Carlo fading average of the closed-form bound over the echo
/// amplitude draws, keeping the larger of the two faded link gains per draw.
pub fn crb_fading_averaged<T: Real>(
    cfg: &ScenarioConfig<T>,
    schedule: &ReflectionSchedule<T>,
    draws: usize,
    seed: u64,
) -> Result<T> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut acc = T::zero();
    for _ in 0..draws {
        let br: C<T> = crate::channel::sample_cn(&mut rng);
        let bd: C<T> = crate::channel::sample_cn(&mut rng);
        let xi = (cfg.g_r_gain() * br.norm_sqr().sqrt()).max(cfg.g_d_gain() * bd.norm_sqr().sqrt());
        acc += crb_closed_form_with_xi(cfg, schedule, xi)?;
    }
    Ok(acc / r(draws as f64))
}

/// Auxiliary vector with `1/(alpha_ci eta_r)` at one index and zeros
/// elsewhere; default index is the center element (ceil(N/2), 1-indexed).
pub fn auxiliary_c<T: Real>(cfg: &ScenarioConfig<T>, c_index: Option<usize>) -> Result<CVec<T>> {
    let n = cfg.layout.n_h;
    let idx = c_index.unwrap_or((n + 1) / 2 - 1);
    if idx >= n {
        return Err(Error::InvalidConfig(format!(
            "auxiliary index {idx} out of range for {n} elements"
        )));
    }
    let mut c = CVec::zeros(n);
    c[idx] = C::new(T::one(), T::zero()) / (cfg.alpha_ci() * C::new(cfg.eta_r, T::zero()));
    Ok(c)
}

/// Shifted schedule covariance `R_c = (1/T) sum_t (phi[t] + c)(phi[t] + c)^H`.
pub fn shifted_covariance<T: Real>(schedule: &ReflectionSchedule<T>, c: &CVec<T>) -> CMat<T> {
    let n = schedule.elements();
    let t_count = schedule.snapshots();
    let mut acc = CMat::zeros(n, n);
    for t in 0..t_count {
        let chi = schedule.column(t) + c;
        acc += &chi * chi.adjoint();
    }
    acc /= C::new(r(t_count as f64), T::zero());
    acc
}

/// Result of an information-matrix CRB evaluation.
#[derive(Debug, Clone)]
pub struct CrbPipeline<T> {
    /// Schur-complement bound on the azimuth variance, radians squared.
    pub crb: T,
    /// 3x3 real information matrix over (theta, Re xi, Im xi).
    pub fim: Matrix3<T>,
}

fn schur_crb<T: Real>(fim: &Matrix3<T>) -> Result<T> {
    let det = fim[(1, 1)] * fim[(2, 2)] - fim[(1, 2)] * fim[(2, 1)];
    let scale = fim[(1, 1)].abs().max(fim[(2, 2)].abs()).max(T::one());
    if det.abs() <= r::<T>(1e-300) * scale * scale {
        return Err(Error::Degenerate(
            "amplitude information block is singular".into(),
        ));
    }
    // 2x2 inverse applied to the cross vector
    let (a, b) = (fim[(0, 1)], fim[(0, 2)]);
    let corr = (a * (fim[(2, 2)] * a - fim[(1, 2)] * b)
        + b * (fim[(1, 1)] * b - fim[(2, 1)] * a))
        / det;
    let info = fim[(0, 0)] - corr;
    if info <= T::zero() {
        return Err(Error::Degenerate(
            "nonpositive information after amplitude elimination".into(),
        ));
    }
    Ok(T::one() / info)
}

/// Information-matrix CRB via the trace-form blocks over `R_c`:
///
/// `f_tt = coef Re tr(Adot R_c Adot^H)`,
/// `f_tx = coef Re{ conj(xi) tr(A R_c Adot^H) (1, j) }`,
/// `f_xx = coef Re{ tr(A R_c A^H) } I2`,
///
/// with `A = b q^T`, `Adot` its azimuth derivative, `coef = 2 T P |a eta|^2 /
/// sigma^2`, followed by the Schur complement over the amplitude block.
pub fn crb_appendix_pipeline<T: Real>(
    cfg: &ScenarioConfig<T>,
    schedule: &ReflectionSchedule<T>,
    c_index: Option<usize>,
) -> Result<CrbPipeline<T>> {
    let c = auxiliary_c(cfg, c_index)?;
    crb_pipeline_with_c(cfg, schedule, &c)
}

/// Pipeline with an explicit auxiliary vector (tests use a zero vector to
/// isolate the schedule-only covariance).
pub fn crb_pipeline_with_c<T: Real>(
    cfg: &ScenarioConfig<T>,
    schedule: &ReflectionSchedule<T>,
    c: &CVec<T>,
) -> Result<CrbPipeline<T>> {
    cfg.layout.validate()?;
    cfg.angles.validate()?;
    if schedule.elements() != cfg.layout.n_h {
        return Err(Error::DimensionMismatch {
            expected: cfg.layout.n_h,
            got: schedule.elements(),
        });
    }
    let theta = cfg.angles.theta_it_h;
    let b = geometry::sensor_response(theta, &cfg.layout);
    let q = geometry::combined_manifold(theta, &cfg.angles, &cfg.layout);
    let (db, dq) = geometry::manifold_derivatives(theta, &cfg.angles, &cfg.layout);
    let r_c = shifted_covariance(schedule, c);

    // s(u, v) = u^T R_c conj(v)  (trace factor from tr(b_u u^T R_c conj(v) b_v^H))
    let s = |u: &CVec<T>, v: &CVec<T>| -> C<T> {
        let rv = &r_c * v.map(|e| e.conj());
        u.iter().zip(rv.iter()).map(|(a, w)| *a * *w).sum()
    };
    let bhb = C::new(b.norm_squared(), T::zero());
    let bhdb = b.dotc(&db); // b^H db, zero at the centroid
    let dbhdb = C::new(db.norm_squared(), T::zero());

    let s_qq = s(&q, &q);
    let s_qdq = s(&q, &dq);
    let s_dqq = s(&dq, &q);
    let s_dqdq = s(&dq, &dq);

    // tr(Adot R_c Adot^H) with Adot = db q^T + b dq^T, all four terms kept
    let tr_dd = s_qq * dbhdb + s_qdq * bhdb + s_dqq * bhdb.conj() + s_dqdq * bhb;
    // tr(A R_c Adot^H)
    let tr_ad = s_qq * bhdb.conj() + s_qdq * bhb;
    // tr(A R_c A^H)
    let tr_aa = s_qq * bhb;

    let xi = xi_deterministic(cfg);
    if xi == T::zero() {
        return Err(Error::Degenerate("echo amplitude is zero".into()));
    }
    let amp_coef = crb_coefficient(cfg, schedule.snapshots(), T::one());
    let coef = amp_coef; // shared |a eta|^2 factor; xi enters per block below
    let xic = C::new(xi, T::zero());

    let f_tt = coef * xi * xi * tr_dd.re;
    let z = xic.conj() * tr_ad;
    let f_tr = coef * z.re;
    let f_ti = coef * (-z.im);
    let f_rr = coef * tr_aa.re;
    let f_ri = coef * (-tr_aa.im);

    let fim = Matrix3::new(f_tt, f_tr, f_ti, f_tr, f_rr, f_ri, f_ti, f_ri, f_rr);
    let crb = schur_crb(&fim)?;
    Ok(CrbPipeline { crb, fim })
}

/// How the model-FIM derivatives are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DerivativeMode {
    /// Central finite differences, step 1e-6 per parameter.
    FiniteDifference,
    /// Closed-form derivatives of the mean.
    Analytic,
}

fn model_fim<T: Real>(
    cfg: &ScenarioConfig<T>,
    schedule: &ReflectionSchedule<T>,
    c: &CVec<T>,
    mode: DerivativeMode,
) -> Result<CrbPipeline<T>> {
    cfg.layout.validate()?;
    cfg.angles.validate()?;
    if schedule.elements() != cfg.layout.n_h {
        return Err(Error::DimensionMismatch {
            expected: cfg.layout.n_h,
            got: schedule.elements(),
        });
    }
    let xi0 = xi_deterministic(cfg);
    if xi0 == T::zero() {
        return Err(Error::Degenerate("echo amplitude is zero".into()));
    }
    let t_count = schedule.snapshots();
    let x = cfg.probe_amplitude();
    let ae = cfg.alpha_ci() * C::new(cfg.eta_r, T::zero());
    let sigma2 = cfg.cancelled_noise_var();

    // mean of snapshot t for parameters (theta, Re xi, Im xi)
    let mean = |theta: T, xi: C<T>, t: usize| -> CVec<T> {
        let b = geometry::sensor_response(theta, &cfg.layout);
        let q = geometry::combined_manifold(theta, &cfg.angles, &cfg.layout);
        let chi = schedule.column(t) + c;
        let sfac: C<T> = q.iter().zip(chi.iter()).map(|(a, p)| *a * *p).sum();
        b * (xi * ae * sfac * C::new(x, T::zero()))
    };

    let theta0 = cfg.angles.theta_it_h;
    let xi_c = C::new(xi0, T::zero());
    let mut fim = Matrix3::zeros();
    for t in 0..t_count {
        let derivs: [CVec<T>; 3] = match mode {
            DerivativeMode::FiniteDifference => {
                let h = r::<T>(1e-6);
                let two_h = C::new(r(2e-6), T::zero());
                let d_theta = (mean(theta0 + h, xi_c, t) - mean(theta0 - h, xi_c, t)) / two_h;
                let d_re = (mean(theta0, xi_c + C::new(h, T::zero()), t)
                    - mean(theta0, xi_c - C::new(h, T::zero()), t))
                    / two_h;
                let d_im = (mean(theta0, xi_c + C::new(T::zero(), h), t)
                    - mean(theta0, xi_c - C::new(T::zero(), h), t))
                    / two_h;
                [d_theta, d_re, d_im]
            }
            DerivativeMode::Analytic => {
                let b = geometry::sensor_response(theta0, &cfg.layout);
                let q = geometry::combined_manifold(theta0, &cfg.angles, &cfg.layout);
                let (db, dq) = geometry::manifold_derivatives(theta0, &cfg.angles, &cfg.layout);
                let chi = schedule.column(t) + c;
                let sfac: C<T> = q.iter().zip(chi.iter()).map(|(a, p)| *a * *p).sum();
                let dsfac: C<T> = dq.iter().zip(chi.iter()).map(|(a, p)| *a * *p).sum();
                let xc = C::new(x, T::zero());
                let d_theta = &db * (xi_c * ae * sfac * xc) + &b * (xi_c * ae * dsfac * xc);
                let d_re = &b * (ae * sfac * xc);
                let d_im = d_re.map(|e| e * C::new(T::zero(), T::one()));
                [d_theta, d_re, d_im]
            }
        };
        for i in 0..3 {
            for j in i..3 {
                let dot: C<T> = derivs[i].dotc(&derivs[j]);
                let contrib = r::<T>(2.0) / sigma2 * dot.re;
                fim[(i, j)] += contrib;
                if i != j {
                    fim[(j, i)] += contrib;
                }
            }
        }
    }
    let crb = schur_crb(&fim)?;
    Ok(CrbPipeline { crb, fim })
}

/// Independent oracle: Fisher information of the approximate Gaussian
/// snapshot model `y[t] ~ CN(xi a eta b(theta) q^T(theta)(phi[t] + c) x,
/// sigma^2 I)` with central-difference derivatives over (theta, Re xi, Im xi),
/// then the same Schur complement.
pub fn crb_fd_oracle<T: Real>(
    cfg: &ScenarioConfig<T>,
    schedule: &ReflectionSchedule<T>,
    c_index: Option<usize>,
) -> Result<CrbPipeline<T>> {
    let c = auxiliary_c(cfg, c_index)?;
    model_fim(cfg, schedule, &c, DerivativeMode::FiniteDifference)
}

/// Analytic-derivative twin of [`crb_fd_oracle`]: same model, closed-form
/// mean derivatives.
pub fn crb_model_analytic<T: Real>(
    cfg: &ScenarioConfig<T>,
    schedule: &ReflectionSchedule<T>,
    c_index: Option<usize>,
) -> Result<CrbPipeline<T>> {
    let c = auxiliary_c(cfg, c_index)?;
    model_fim(cfg, schedule, &c, DerivativeMode::Analytic)
}

/// Full three-way CRB evaluation at the scenario's azimuth.
#[derive(Debug, Clone)]
pub struct CrbReport<T> {
    pub crb_closed: T,
    pub crb_pipeline: T,
    pub crb_fd: T,
    pub w1: T,
    pub w2: T,
    pub xi: T,
    pub sigma_fun: T,
    pub sigma_bar_fun: T,
    pub p_theta: T,
    pub fim: Matrix3<T>,
}

/// Evaluate all three CRB paths plus the scalar ingredients of the closed
/// form.
pub fn crb_report<T: Real>(
    cfg: &ScenarioConfig<T>,
    schedule: &ReflectionSchedule<T>,
) -> Result<CrbReport<T>> {
    let lam2 = cfg.layout.wavelength * cfg.layout.wavelength;
    let pi2 = T::pi() * T::pi();
    let theta = cfg.angles.theta_it_h;
    let pipeline = crb_appendix_pipeline(cfg, schedule, None)?;
    let fd = crb_fd_oracle(cfg, schedule, None)?;
    Ok(CrbReport {
        crb_closed: crb_closed_form(cfg, schedule)?,
        crb_pipeline: pipeline.crb,
        crb_fd: fd.crb,
        w1: pi2 * cfg.layout.d_s * cfg.layout.d_s / lam2,
        w2: pi2 * cfg.layout.d_i * cfg.layout.d_i / lam2,
        xi: xi_deterministic(cfg),
        sigma_fun: sigma_fun(theta, cfg),
        sigma_bar_fun: sigma_bar(theta, cfg),
        p_theta: p_theta(theta, cfg, schedule),
        fim: pipeline.fim,
    })
}

/// Verdict of the closed-form vs pipeline comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatioClass {
    /// Ratio constant over the angle grid within 5 percent: the formulas
    /// differ by a convention factor only.
    ConstantFactor,
    /// Ratio varies with the angle by more than 5 percent: the formulas
    /// disagree structurally.
    Structural,
}

/// Pointwise closed-form / pipeline comparison over an angle grid.
#[derive(Debug, Clone)]
pub struct CrbConsistency<T> {
    pub theta_grid: Vec<T>,
    pub crb_closed: Vec<T>,
    pub crb_pipeline: Vec<T>,
    pub crb_fd: Vec<T>,
    pub ratio: Vec<T>,
    pub mean_ratio: T,
    /// Largest relative deviation of any ratio from the mean ratio.
    pub max_rel_deviation: T,
    pub class: RatioClass,
}

/// Evaluate both CRB paths on `theta_grid` and classify their pointwise
/// ratio: a convention mismatch shows up as a constant factor, a real
/// derivation gap as angle dependence. Deterministic in `cfg`.
pub fn crb_consistency_report<T: Real>(
    cfg: &ScenarioConfig<T>,
    schedule: &ReflectionSchedule<T>,
    theta_grid: &[T],
) -> Result<CrbConsistency<T>> {
    if theta_grid.is_empty() {
        return Err(Error::InvalidConfig("angle grid must be nonempty".into()));
    }
    let mut crb_closed = Vec::with_capacity(theta_grid.len());
    let mut crb_pipeline = Vec::with_capacity(theta_grid.len());
    let mut crb_fd = Vec::with_capacity(theta_grid.len());
    let mut ratio = Vec::with_capacity(theta_grid.len());
    for &th in theta_grid {
        let mut at = cfg.clone();
        at.angles.theta_it_h = th;
        let closed = crb_closed_form(&at, schedule)?;
        let pipe = crb_appendix_pipeline(&at, schedule, None)?.crb;
        let fd = crb_fd_oracle(&at, schedule, None)?.crb;
        ratio.push(closed / pipe);
        crb_closed.push(closed);
        crb_pipeline.push(pipe);
        crb_fd.push(fd);
    }
    let mean_ratio = ratio.iter().fold(T::zero(), |a, &b| a + b) / r(ratio.len() as f64);
    let mut max_rel_deviation = T::zero();
    for &x in &ratio {
        max_rel_deviation = max_rel_deviation.max((x - mean_ratio).abs() / mean_ratio.abs());
    }
    let class = if max_rel_deviation > r(0.05) {
        RatioClass::Structural
    } else {
        RatioClass::ConstantFactor
    };
    Ok(CrbConsistency {
        theta_grid: theta_grid.to_vec(),
        crb_closed,
        crb_pipeline,
        crb_fd,
        ratio,
        mean_ratio,
        max_rel_deviation,
        class,
    })
}

/// Write the consistency report as CSV rows
/// `(theta_deg, crb_closed, crb_pipeline, crb_fd, ratio)`.
pub fn export_consistency_csv<T: Real, W: std::io::Write>(
    report: &CrbConsistency<T>,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "theta_deg,crb_closed,crb_pipeline,crb_fd,ratio")?;
    for i in 0..report.theta_grid.len() {
        let deg = report.theta_grid[i].to_f64().unwrap_or(f64::NAN).to_degrees();
        writeln!(
            out,
            "{deg},{},{},{},{}",
            report.crb_closed[i].to_f64().unwrap_or(f64::NAN),
            report.crb_pipeline[i].to_f64().unwrap_or(f64::NAN),
            report.crb_fd[i].to_f64().unwrap_or(f64::NAN),
            report.ratio[i].to_f64().unwrap_or(f64::NAN),
        )?;
    }
    Ok(())
}
