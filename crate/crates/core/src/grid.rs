//! Uniform space-time grid and the trapezoidal quadrature helpers used by
//! every integral in the solvers.

use crate::error::{Result, SimError};

/// Uniform rectangular grid over retarded time `tau` and propagation
/// coordinate `z`.
///
/// `n_z` and `n_tau` count grid points (the first point sits at 0, the last
/// at `z_max` / `tau_max`). Extents are in meters and seconds for physical
/// scenarios and in scaled units after [`crate::scenario::to_dimensionless`];
/// the struct itself is unit-agnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericalGrid {
    pub n_z: usize,
    pub n_tau: usize,
    pub z_max: f64,
    pub tau_max: f64,
}

impl NumericalGrid {
    pub fn new(n_z: usize, n_tau: usize, z_max: f64, tau_max: f64) -> Result<Self> {
        if n_z < 2 || n_tau < 2 {
            return Err(SimError::InvalidScenario(format!(
                "grid needs at least 2 points per axis, got n_z={n_z}, n_tau={n_tau}"
            )));
        }
        if !(z_max > 0.0) || !(tau_max > 0.0) {
            return Err(SimError::InvalidScenario(
                "grid extents must be positive".into(),
            ));
        }
        Ok(Self { n_z, n_tau, z_max, tau_max })
    }

    #[inline]
    pub fn dz(&self) -> f64 {
        self.z_max / (self.n_z - 1) as f64
    }

    #[inline]
    pub fn dtau(&self) -> f64 {
        self.tau_max / (self.n_tau - 1) as f64
    }

    #[inline]
    pub fn z(&self, i: usize) -> f64 {
        i as f64 * self.dz()
    }

    #[inline]
    pub fn tau(&self, p: usize) -> f64 {
        p as f64 * self.dtau()
    }

    /// Index of the grid point closest to `z`.
    pub fn z_index(&self, z: f64) -> usize {
        ((z / self.dz()).round() as isize).clamp(0, self.n_z as isize - 1) as usize
    }

    /// Index of the grid point closest to `tau`.
    pub fn tau_index(&self, tau: f64) -> usize {
        ((tau / self.dtau()).round() as isize).clamp(0, self.n_tau as isize - 1) as usize
    }
}

/// Trapezoidal weight of point `k` in an integral over points `0..=i`.
///
/// Zero-length intervals (`i == 0`) integrate to zero.
#[inline]
pub fn trapezoid_weight(k: usize, i: usize, h: f64) -> f64 {
    if i == 0 || k > i {
        0.0
    } else if k == 0 || k == i {
        0.5 * h
    } else {
        h
    }
}

/// Trapezoidal integral of uniformly sampled `f` over points `from..=to`.
pub fn trapezoid(f: &[f64], from: usize, to: usize, h: f64) -> f64 {
    assert!(to < f.len() && from <= to);
    if from == to {
        return 0.0;
    }
    let mut acc = 0.5 * (f[from] + f[to]);
    for v in &f[from + 1..to] {
        acc += v;
    }
    acc * h
}

/// Cumulative trapezoidal integral: `out[k] = integral of f over points 0..=k`.
pub fn cumulative_trapezoid(f: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..f.len() {
        acc += 0.5 * h * (f[k - 1] + f[k]);
        out.push(acc);
    }
    out
}

/// Sum of `v` by fixed-order pairwise reduction.
///
/// The reduction tree depends only on the slice length, so the result is
/// identical no matter how the values were produced or on how many threads.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
        }
    }
}
