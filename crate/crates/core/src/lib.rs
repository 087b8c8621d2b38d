//! Simulation and analysis toolkit for a self-sensing reflective surface.
//!
//! A passive phase-shifting surface carries a transmit-capable controller and a
//! small line of receive sensors. The controller emits a probing tone, the
//! surface scans a schedule of reflection patterns, and the sensors collect the
//! target echoes arriving over the direct and surface-reflected paths. From the
//! cleaned snapshots a subspace (MUSIC) search recovers the target azimuth.
//!
//! The crate is organised as:
//!
//! - [`geometry`] — steering/response vectors for centered uniform arrays and
//!   their analytic derivatives.
//! - [`channel`] — scenario configuration, random channel draws, raw snapshot
//!   synthesis, and the offline background calibration/cancellation protocol.
//! - [`reflection`] — reflection schedules (DFT, random phase), the average
//!   received-power objective, and the schedule optimality checker.
//! - [`estimation`] — sample covariance, MUSIC spectrum search, on-grid beam
//!   training, and the RMSE/success metrics.
//! - [`analysis`] — closed-form echo-power expressions, the element-count
//!   threshold, the user-distance sweep, and the estimation-variance lower
//!   bound (closed form, information-matrix pipeline, and finite-difference
//!   oracle).
//! - [`harness`] — benchmark scheme synthesizers, the Monte Carlo experiment
//!   engine, plan/scenario file parsing, and CSV output.
//!
//! Core numerics are generic over the real scalar type through the [`Real`]
//! trait (`f32` or `f64`); concrete `f64` aliases are exported at the crate
//! root for everyday use.

use num_traits::{FromPrimitive, ToPrimitive};

pub mod analysis;
pub mod channel;
pub mod estimation;
pub mod geometry;
pub mod harness;
pub mod reflection;

/// Real scalar the core math is generic over.
///
/// `RealField` supplies the transcendental functions and `pi()`;
/// the primitive conversions let formulas be written with `f64` literals.
pub trait Real: nalgebra::RealField + FromPrimitive + ToPrimitive + Copy {}
impl<T> Real for T where T: nalgebra::RealField + FromPrimitive + ToPrimitive + Copy {}

/// Complex number over a [`Real`] scalar.
pub type C<T> = num_complex::Complex<T>;
/// Dynamically sized complex column vector.
pub type CVec<T> = nalgebra::DVector<C<T>>;
/// Dynamically sized complex matrix.
pub type CMat<T> = nalgebra::DMatrix<C<T>>;

/// Convert an `f64` literal into the generic scalar.
#[inline]
pub(crate) fn r<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal must convert into the scalar type")
}

/// Unit-modulus complex number `e^{j phase}`.
#[inline]
pub fn cis<T: Real>(phase: T) -> C<T> {
    C::new(phase.cos(), phase.sin())
}

// Concrete `f64` aliases.
pub type C64 = C<f64>;
pub type CVec64 = CVec<f64>;
pub type CMat64 = CMat<f64>;
pub type ArrayLayout64 = geometry::ArrayLayout<f64>;
pub type AngleSet64 = geometry::AngleSet<f64>;
pub type Scenario64 = channel::ScenarioConfig<f64>;
pub type Schedule64 = reflection::ReflectionSchedule<f64>;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no background calibration entry for snapshot {snapshot}")]
    MissingCalibration { snapshot: usize },
    #[error("degenerate scenario: {0}")]
    Degenerate(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{file}:{line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// dBm to linear power (milliwatt reference; consistent as long as signal and
/// noise use the same reference).
pub fn dbm_to_linear(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Linear power to dBm.
pub fn linear_to_dbm(p: f64) -> f64 {
    10.0 * p.log10()
}

/// dBsm to square meters.
pub fn dbsm_to_m2(dbsm: f64) -> f64 {
    10f64.powf(dbsm / 10.0)
}
