//! Exponential damping kernels shared by both solvers.
//!
//! `damping_a` attenuates the field between two positions through the
//! absorption coefficient `kappa(z)`; `damping_d` damps coherence between two
//! retarded times through the total decay rate `Gamma(z, tau)`. Both are
//! `exp(-1/2 * integral)` with the integral taken by the trapezoid rule on
//! the uniform grid, so factors concatenate multiplicatively across interval
//! splits sharing the same quadrature points.

use ndarray::Array2;

use crate::error::{Result, SimError};
use crate::grid::{cumulative_trapezoid, trapezoid};

/// `exp(-1/2 * int_{z[from]}^{z[to]} kappa dz)` on the tabulated grid.
pub fn damping_a(kappa: &[f64], dz: f64, from: usize, to: usize) -> Result<f64> {
    if from > to {
        return Err(SimError::InvalidInterval { from, to });
    }
    Ok((-0.5 * trapezoid(kappa, from, to, dz)).exp())
}

/// `exp(-1/2 * int_{tau[from]}^{tau[to]} Gamma dtau)` for one `z` row of the
/// decay-rate table.
pub fn damping_d(gamma_row: &[f64], dtau: f64, from: usize, to: usize) -> Result<f64> {
    if from > to {
        return Err(SimError::InvalidInterval { from, to });
    }
    Ok((-0.5 * trapezoid(gamma_row, from, to, dtau)).exp())
}

/// One-step recursion factor `exp(-1/2 * int_{tau[p-1]}^{tau[p]} Gamma dtau)`
/// used by the cumulative memory kernels; `p >= 1`.
#[inline]
pub fn damping_d_step(gamma_row: &[f64], dtau: f64, p: usize) -> f64 {
    (-0.25 * dtau * (gamma_row[p - 1] + gamma_row[p])).exp()
}

/// Pairwise field-attenuation factors `A(i, j)` for every ordered pair of
/// grid points, precomputed from the cumulative absorption integral.
///
/// `A(i, j) = exp(-1/2 (K_i - K_j))` for `i >= j`, with
/// `K = cumtrapz(kappa)`, and symmetrically for `i < j`; every entry lies in
/// `(0, 1]`.
#[derive(Debug, Clone)]
pub struct AbsorptionKernel {
    factors: Array2<f64>,
}

impl AbsorptionKernel {
    pub fn new(kappa: &[f64], dz: f64) -> Self {
        let k = cumulative_trapezoid(kappa, dz);
        let n = kappa.len();
        let mut factors = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                factors[(i, j)] = (-0.5 * (k[i.max(j)] - k[i.min(j)])).exp();
            }
        }
        Self { factors }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.factors[(i, j)]
    }

    pub fn view(&self) -> ndarray::ArrayView2<'_, f64> {
        self.factors.view()
    }
}
