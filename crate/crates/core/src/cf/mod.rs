//! Correlation-function solver.
//!
//! Phase 1 ([`evolve_phase1`]) marches the level occupations and the
//! two-point coherence-correlation matrix `S(z1, z2)` forward in retarded
//! time. Phase 2 ([`propagate_g`]) then marches the two-time field
//! correlation `G(tau1, tau2)` along `z` against the stored medium history.
//! Both run entirely in scaled units (see [`crate::scenario`]).

mod phase1;
mod phase2;

pub use phase1::{
    evolve_phase1, intensity_from_s, rhs_coherence, rhs_populations, CfKernels, Phase1Options,
    Phase1Output, SSnapshot,
};
pub use phase2::{
    propagate_g, stim_correction_monitor, Phase2Options, Phase2Output, StimMonitor,
};

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Result, SimError};
use crate::grid::NumericalGrid;

/// Hermitian complex matrix stored as separate real and imaginary parts.
///
/// Both the coherence correlation `S(z1, z2)` and the field correlation
/// `G(tau1, tau2)` use this layout; the split keeps the hot kernels on real
/// BLAS-style operations.
#[derive(Debug, Clone)]
pub struct HermitianMatrix {
    pub re: Array2<f64>,
    pub im: Array2<f64>,
}

impl HermitianMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { re: Array2::zeros((n, n)), im: Array2::zeros((n, n)) }
    }

    pub fn n(&self) -> usize {
        self.re.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        C64::new(self.re[(i, j)], self.im[(i, j)])
    }

    /// Set entry `(i, j)` and its mirror `(j, i)` to keep the matrix
    /// Hermitian.
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.re[(i, j)] = v.re;
        self.im[(i, j)] = v.im;
        self.re[(j, i)] = v.re;
        self.im[(j, i)] = -v.im;
        if i == j {
            self.im[(i, j)] = 0.0;
        }
    }

    /// Largest deviation `|m[i][j] - conj(m[j][i])|` over all pairs.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.n();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..=i {
                let dre = (self.re[(i, j)] - self.re[(j, i)]).abs();
                let dim = (self.im[(i, j)] + self.im[(j, i)]).abs();
                worst = worst.max(dre.hypot(dim));
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        let mut worst = 0.0f64;
        for (r, i) in self.re.iter().zip(self.im.iter()) {
            worst = worst.max(r.abs()).max(i.abs());
        }
        worst
    }

    pub fn has_non_finite(&self) -> bool {
        self.re.iter().chain(self.im.iter()).any(|v| !v.is_finite())
    }

    /// Largest Cauchy-Schwarz excess `|m_ij|^2 - m_ii m_jj (1 + tol)`,
    /// normalized by the matrix scale. Non-positive when the inequality
    /// holds everywhere.
    pub fn cauchy_schwarz_excess(&self, tol: f64) -> f64 {
        let n = self.n();
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let mut worst = f64::NEG_INFINITY;
        for i in 0..n {
            for j in 0..i {
                let off = self.get(i, j).norm_sqr();
                let bound = self.re[(i, i)] * self.re[(j, j)] * (1.0 + tol);
                worst = worst.max((off - bound) / (scale * scale));
            }
        }
        worst
    }

    pub fn to_complex(&self) -> Array2<C64> {
        let n = self.n();
        Array2::from_shape_fn((n, n), |(i, j)| self.get(i, j))
    }
}

/// Two-point correlation of atomic coherences at fixed retarded time.
pub type CoherenceMatrix = HermitianMatrix;

/// Two-time field correlation at fixed `z`, in the rotating frame (carrier
/// phases factored out). The diagonal is the instantaneous intensity in
/// model units.
#[derive(Debug, Clone)]
pub struct FieldCorrelationSlice {
    pub g: HermitianMatrix,
    pub z_index: usize,
    pub z_tilde: f64,
}

impl FieldCorrelationSlice {
    /// Real diagonal (intensity in model units).
    pub fn diag(&self) -> Vec<f64> {
        (0..self.g.n()).map(|p| self.g.re[(p, p)]).collect()
    }
}

/// Occupations and derived source weights for the whole run, recorded by
/// phase 1 and consumed by phase 2.
#[derive(Debug, Clone)]
pub struct MediumHistory {
    pub grid: NumericalGrid,
    /// Upper-level occupation, shape `(n_z, n_tau)`.
    pub rho_ee: Array2<f64>,
    /// Lower-level occupation.
    pub rho_gg: Array2<f64>,
    /// Inversion `rho_ee - rho_gg`.
    pub rho_inv: Array2<f64>,
    /// Spontaneous source weight `r_e + (Gamma - Gamma_ee) rho_ee`.
    pub source_w: Array2<f64>,
}

impl MediumHistory {
    pub fn check_complete(&self, grid: &NumericalGrid) -> Result<()> {
        let shape = (grid.n_z, grid.n_tau);
        if self.rho_ee.dim() != shape
            || self.rho_gg.dim() != shape
            || self.rho_inv.dim() != shape
            || self.source_w.dim() != shape
        {
            return Err(SimError::PhaseOrderViolation(format!(
                "history shape {:?} does not cover the grid {shape:?}",
                self.rho_ee.dim()
            )));
        }
        Ok(())
    }
}
