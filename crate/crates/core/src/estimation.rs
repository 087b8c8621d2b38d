//! Subspace DOA estimation on cleaned snapshots, on-grid beam training, and
//! the RMSE/success metrics.
//!
//! The single-target signal model makes the cleaned snapshot matrix rank one
//! plus noise, so the dominant eigenvector of the sample covariance spans the
//! signal subspace and the remaining `M - 1` eigenvectors span the noise
//! subspace. The spectrum search scores each candidate angle by how nearly the
//! sensor response falls outside the noise subspace.

use nalgebra::SymmetricEigen;

use crate::channel::SnapshotMatrix;
use crate::geometry::{self, ArrayLayout};
use crate::{r, CMat, CVec, Error, Real, Result, C};

/// Eigendecomposition of the sample covariance, split into signal and noise
/// subspaces.
#[derive(Debug, Clone)]
pub struct MusicDecomposition<T> {
    /// Hermitian M x M sample covariance.
    pub r_y: CMat<T>,
    /// Dominant eigenvector (signal subspace, single target).
    pub signal_basis: CVec<T>,
    /// Remaining M-1 eigenvectors (noise subspace).
    pub noise_basis: CMat<T>,
    /// Eigenvalues sorted descending.
    pub eigenvalues: Vec<T>,
    /// Set when the top eigenvalues tie within 1e-12 of each other, making the
    /// subspace split arbitrary.
    pub degenerate: bool,
}

/// Result of one spectrum or beam-training search.
#[derive(Debug, Clone)]
pub struct DoaEstimate<T> {
    /// Estimated angle, radians; always a grid point where the spectrum peaks.
    pub theta_hat: T,
    /// Spectrum (or energy) value per grid point.
    pub spectrum: Vec<T>,
    /// Search grid, radians, sorted ascending.
    pub grid: Vec<T>,
    /// Spectrum value at the peak.
    pub peak_value: T,
    /// Degeneracy flag carried over from the decomposition.
    pub degenerate: bool,
}

/// Sample covariance `(1/T) Y Y^H`, numerically symmetrized.
pub fn sample_covariance<T: Real>(y: &CMat<T>) -> CMat<T> {
    let t = y.ncols().max(1);
    let mut r_y = y * y.adjoint();
    r_y /= C::new(r(t as f64), T::zero());
    let m = r_y.nrows();
    for i in 0..m {
        r_y[(i, i)] = C::new(r_y[(i, i)].re, T::zero());
        for j in (i + 1)..m {
            let avg = (r_y[(i, j)] + r_y[(j, i)].conj()) / C::new(r(2.0), T::zero());
            r_y[(i, j)] = avg;
            r_y[(j, i)] = avg.conj();
        }
    }
    r_y
}

/// Eigendecompose a Hermitian covariance and split off the one-dimensional
/// signal subspace. Eigenvalue ties within 1e-12 are flagged, with ties broken
/// by index order after the descending sort.
pub fn decompose<T: Real>(r_y: &CMat<T>) -> Result<MusicDecomposition<T>> {
    let m = r_y.nrows();
    if m < 2 {
        return Err(Error::InvalidConfig(
            "at least two sensors are required for a noise subspace".into(),
        ));
    }
    let eig = SymmetricEigen::new(r_y.clone());
    let mut order: Vec<usize> = (0..m).collect();
    // stable descending sort; ties keep original eigenvector index order
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let eigenvalues: Vec<T> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let scale = eigenvalues[0].abs().max(T::one());
    let degenerate = (eigenvalues[0] - eigenvalues[1]).abs() <= r::<T>(1e-12) * scale;
    let signal_basis = eig.eigenvectors.column(order[0]).clone_owned();
    let mut noise_basis = CMat::zeros(m, m - 1);
    for (k, &i) in order[1..].iter().enumerate() {
        noise_basis.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok(MusicDecomposition {
        r_y: r_y.clone(),
        signal_basis,
        noise_basis,
        eigenvalues,
        degenerate,
    })
}

/// Uniform angle grid in radians covering `[lo_deg, hi_deg]` with the given
/// step in degrees.
pub fn uniform_grid<T: Real>(lo_deg: f64, hi_deg: f64, step_deg: f64) -> Vec<T> {
    let count = ((hi_deg - lo_deg) / step_deg).round() as usize + 1;
    (0..count)
        .map(|i| r::<T>((lo_deg + i as f64 * step_deg).to_radians()))
        .collect()
}

/// Spectrum search: score `1 / (b^H U_z U_z^H b)` on each grid angle and take
/// the argmax (lowest index on exact ties).
pub fn music_spectrum<T: Real>(
    decomp: &MusicDecomposition<T>,
    layout: &ArrayLayout<T>,
    grid: &[T],
) -> Result<DoaEstimate<T>> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("search grid must be nonempty".into()));
    }
    if layout.m != decomp.r_y.nrows() {
        return Err(Error::DimensionMismatch {
            expected: decomp.r_y.nrows(),
            got: layout.m,
        });
    }
    let uz = &decomp.noise_basis;
    // With a one-dimensional signal subspace and a complete eigenbasis,
    // ||U_z^H b||^2 = ||b||^2 - |u_s^H b|^2, which needs one projection per
    // grid point instead of M - 1.
    let fast = uz.ncols() + 1 == decomp.r_y.nrows();
    let mut spectrum = Vec::with_capacity(grid.len());
    let mut best = 0usize;
    let mut best_val = T::from_f64(f64::NEG_INFINITY).unwrap();
    for (i, &th) in grid.iter().enumerate() {
        let b = geometry::sensor_response(th, layout);
        let denom = if fast {
            let us = &decomp.signal_basis;
            let mut dot = C::new(T::zero(), T::zero());
            for m in 0..b.len() {
                dot += us[m].conj() * b[m];
            }
            // clamp: rounding can push the difference a hair negative at an
            // exact steering match
            (b.norm_squared() - dot.norm_sqr()).max(r(1e-300))
        } else {
            let mut acc = T::zero();
            for k in 0..uz.ncols() {
                let col = uz.column(k);
                let mut dot = C::new(T::zero(), T::zero());
                for m in 0..b.len() {
                    dot += col[m].conj() * b[m];
                }
                acc += dot.norm_sqr();
            }
            acc
        };
        let p = T::one() / denom;
        spectrum.push(p);
        if p > best_val {
            best_val = p;
            best = i;
        }
    }
    Ok(DoaEstimate {
        theta_hat: grid[best],
        spectrum,
        grid: grid.to_vec(),
        peak_value: best_val,
        degenerate: decomp.degenerate,
    })
}

/// Covariance, decomposition, and spectrum search in one call.
pub fn estimate_doa<T: Real>(
    block: &SnapshotMatrix<T>,
    layout: &ArrayLayout<T>,
    grid: &[T],
) -> Result<DoaEstimate<T>> {
    let r_y = sample_covariance(&block.y);
    let decomp = decompose(&r_y)?;
    music_spectrum(&decomp, layout, grid)
}

/// On-grid beam training: evaluate a caller-supplied round-trip received
/// energy for every candidate beam angle and take the argmax.
pub fn beam_training_estimate<T: Real>(
    codebook: &[T],
    mut received_energy: impl FnMut(T) -> T,
) -> Result<DoaEstimate<T>> {
    if codebook.is_empty() {
        return Err(Error::InvalidConfig("beam codebook must be nonempty".into()));
    }
    let mut spectrum = Vec::with_capacity(codebook.len());
    let mut best = 0usize;
    let mut best_val = T::from_f64(f64::NEG_INFINITY).unwrap();
    for (i, &th) in codebook.iter().enumerate() {
        let e = received_energy(th);
        spectrum.push(e);
        if e > best_val {
            best_val = e;
            best = i;
        }
    }
    Ok(DoaEstimate {
        theta_hat: codebook[best],
        spectrum,
        grid: codebook.to_vec(),
        peak_value: best_val,
        degenerate: false,
    })
}

/// Sample RMSE and empirical success fraction (`|error| <= delta`, boundary
/// inclusive) over a list of estimates against one truth.
pub fn success_and_rmse<T: Real>(estimates: &[T], truth: T, delta: T) -> Result<(T, T)> {
    if estimates.is_empty() {
        return Err(Error::InvalidConfig("estimate list must be nonempty".into()));
    }
    let n = r::<T>(estimates.len() as f64);
    let mut mse = T::zero();
    let mut hits = T::zero();
    for &e in estimates {
        let err = e - truth;
        mse += err * err;
        if err.abs() <= delta {
            hits += T::one();
        }
    }
    Ok(((mse / n).sqrt(), hits / n))
}

/// Write one `(grid_deg, spectrum)` CSV row per grid point.
pub fn export_spectrum_csv<T: Real, W: std::io::Write>(
    estimate: &DoaEstimate<T>,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "grid_deg,p_music")?;
    for (th, p) in estimate.grid.iter().zip(&estimate.spectrum) {
        let deg = th.to_f64().unwrap_or(f64::NAN).to_degrees();
        let p = p.to_f64().unwrap_or(f64::NAN);
        writeln!(out, "{deg},{p}")?;
    }
    Ok(())
}
