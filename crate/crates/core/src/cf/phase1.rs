//! Phase 1: joint time evolution of occupations and the coherence
//! correlation matrix.
//!
//! In scaled units the system reads
//!
//! ```text
//! d rho_ee(z)/dtau   = r_e - Gamma_ee rho_ee - C(z)
//! d rho_gg(z)/dtau   = r_g + (1 + gamma_n) rho_ee - gamma_g rho_gg + C(z)
//! C(z)               = int_0^z A(z,z') Re S(z,z') dz'
//! d S(z1,z2)/dtau    = -[Gamma(z1)+Gamma(z2)]/2 S
//!                    + 1/2 [rho_inv(z1) int_0^z1 A(z1,z') S(z',z2) dz'
//!                         + rho_inv(z2) int_0^z2 A(z2,z') S(z1,z') dz']
//!                    + (3 delta_o/16 pi) [rho_inv(z1) rho_ee(z2) A(z1,z2) H(z1-z2)
//!                                       + rho_inv(z2) rho_ee(z1) A(z2,z1) H(z2-z1)]
//! ```
//!
//! with `H` the Heaviside step; the coincident-cell weight `H(0)` is the
//! [`Phase1Options::theta_coincident`] constant. The `z` convolutions are one
//! weighted lower-triangular matrix product `T = M S` per evaluation, which
//! is where nearly all the time goes. Time stepping is Heun's
//! predictor-corrector.

use ndarray::{linalg::general_mat_mul, Array1, Array2};

use super::{CoherenceMatrix, HermitianMatrix, MediumHistory};
use crate::damping::AbsorptionKernel;
use crate::error::{Result, SimError};
use crate::grid::trapezoid_weight;
use crate::scenario::ScaledScenario;

/// Factor applied to the coincident-cell spontaneous seed; the symmetric
/// continuum limit of the ordered pair sum.
pub const THETA_COINCIDENT_DEFAULT: f64 = 0.5;

/// Guard threshold: any matrix entry beyond this aborts the run.
pub const DIVERGENCE_GUARD: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct Phase1Options {
    /// Weight of the equal-position seed term (`H(0)`).
    pub theta_coincident: f64,
    /// When false the collective coupling is switched off entirely: `S`
    /// stays zero and the occupations evolve by rates alone.
    pub couple_s: bool,
    /// Scaled times at which to store full `S` snapshots.
    pub s_snapshot_taus: Vec<f64>,
    /// Record the intensity map while stepping.
    pub record_intensity: bool,
}

impl Default for Phase1Options {
    fn default() -> Self {
        Self {
            theta_coincident: THETA_COINCIDENT_DEFAULT,
            couple_s: true,
            s_snapshot_taus: Vec::new(),
            record_intensity: true,
        }
    }
}

/// Full `S` matrix stored at one requested time.
#[derive(Debug, Clone)]
pub struct SSnapshot {
    pub tau_index: usize,
    pub tau_tilde: f64,
    pub s: CoherenceMatrix,
}

#[derive(Debug)]
pub struct Phase1Output {
    pub history: MediumHistory,
    /// `Re S(z, z, tau)`, shape `(n_z, n_tau)`.
    pub s_diag: Array2<f64>,
    /// Largest `|Im S(z, z)|` seen while stepping.
    pub s_diag_im_max: f64,
    /// Intensity in model units, shape `(n_z, n_tau)`; empty if not recorded.
    pub intensity: Array2<f64>,
    pub snapshots: Vec<SSnapshot>,
    /// State at the final time.
    pub final_s: CoherenceMatrix,
}

/// Precomputed grid kernels shared by the right-hand-side evaluations.
#[derive(Debug, Clone)]
pub struct CfKernels {
    /// `M[i][k] = w_k^{(i)} A(i,k)`: trapezoid weights over `0..=i` times
    /// absorption factors; strictly lower-triangular-plus-diagonal.
    pub m: Array2<f64>,
    /// Same with squared absorption factors, for the intensity integral.
    pub m2: Array2<f64>,
    pub absorption: AbsorptionKernel,
    /// Total coherence decay on the grid (scaled units).
    pub gamma: Array2<f64>,
    /// Excited-state decay on the grid.
    pub gamma_ee: Array2<f64>,
    /// Seed prefactor `3 delta_o / 16 pi`.
    pub seed_coef: f64,
}

impl CfKernels {
    pub fn new(scn: &ScaledScenario) -> Result<Self> {
        let derived = scn.derived()?;
        let n = scn.grid.n_z;
        let dz = scn.grid.dz();
        let absorption = AbsorptionKernel::new(scn.rates.kappa.as_slice().unwrap(), dz);
        let mut m = Array2::zeros((n, n));
        let mut m2 = Array2::zeros((n, n));
        for i in 0..n {
            for k in 0..=i {
                let w = trapezoid_weight(k, i, dz);
                let a = absorption.get(i, k);
                m[(i, k)] = w * a;
                m2[(i, k)] = w * a * a;
            }
        }
        Ok(Self {
            m,
            m2,
            absorption,
            gamma: derived.gamma_total,
            gamma_ee: derived.gamma_ee,
            seed_coef: 3.0 * scn.delta_o / (16.0 * std::f64::consts::PI),
        })
    }
}

/// Scratch buffers reused across right-hand-side evaluations.
struct Workspace {
    t_re: Array2<f64>,
    t_im: Array2<f64>,
    ci: Array1<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            t_re: Array2::zeros((n, n)),
            t_im: Array2::zeros((n, n)),
            ci: Array1::zeros(n),
        }
    }
}

/// Absorption-weighted coupling integral `C(z_i) = sum_k M[i][k] Re S(i,k)`.
fn coupling_integrals(kernels: &CfKernels, s: &HermitianMatrix, out: &mut Array1<f64>) {
    let n = out.len();
    for i in 0..n {
        let mrow = kernels.m.row(i);
        let srow = s.re.row(i);
        let mut acc = 0.0;
        for k in 0..=i {
            acc += mrow[k] * srow[k];
        }
        out[i] = acc;
    }
}

/// Evaluate the full right-hand side at rate column `p`, writing the
/// population derivatives into `d_ee`/`d_gg` and the matrix derivative into
/// `ds`. Returns the workspace with `T = M S` populated so callers can reuse
/// it for the intensity integral.
#[allow(clippy::too_many_arguments)]
fn rhs_full(
    scn: &ScaledScenario,
    kernels: &CfKernels,
    opts: &Phase1Options,
    p: usize,
    rho_ee: &Array1<f64>,
    rho_gg: &Array1<f64>,
    s: &HermitianMatrix,
    ws: &mut Workspace,
    d_ee: &mut Array1<f64>,
    d_gg: &mut Array1<f64>,
    ds: &mut HermitianMatrix,
) {
    let n = scn.grid.n_z;
    let r = &scn.rates;
    let couple = opts.couple_s;

    if couple {
        general_mat_mul(1.0, &kernels.m, &s.re, 0.0, &mut ws.t_re);
        general_mat_mul(1.0, &kernels.m, &s.im, 0.0, &mut ws.t_im);
        coupling_integrals(kernels, s, &mut ws.ci);
    } else {
        ws.ci.fill(0.0);
    }

    for i in 0..n {
        let ci = ws.ci[i];
        d_ee[i] = r.r_e[(i, p)] - kernels.gamma_ee[(i, p)] * rho_ee[i] - ci;
        d_gg[i] = r.r_g[(i, p)] + (1.0 + r.gamma_n) * rho_ee[i] - r.gamma_g[(i, p)] * rho_gg[i] + ci;
    }

    if !couple {
        ds.re.fill(0.0);
        ds.im.fill(0.0);
        return;
    }

    let seed_c = kernels.seed_coef;
    let theta0 = opts.theta_coincident;
    for i in 0..n {
        let inv_i = rho_ee[i] - rho_gg[i];
        let gam_i = kernels.gamma[(i, p)];
        for j in 0..=i {
            let inv_j = rho_ee[j] - rho_gg[j];
            let decay = -0.5 * (gam_i + kernels.gamma[(j, p)]);
            let stim_re = 0.5 * (inv_i * ws.t_re[(i, j)] + inv_j * ws.t_re[(j, i)]);
            let stim_im = 0.5 * (inv_i * ws.t_im[(i, j)] - inv_j * ws.t_im[(j, i)]);
            let seed = if i == j {
                seed_c * 2.0 * theta0 * inv_i * rho_ee[i]
            } else {
                seed_c * inv_i * rho_ee[j] * kernels.absorption.get(i, j)
            };
            let dre = decay * s.re[(i, j)] + stim_re + seed;
            let dim = decay * s.im[(i, j)] + stim_im;
            ds.re[(i, j)] = dre;
            ds.re[(j, i)] = dre;
            ds.im[(i, j)] = dim;
            ds.im[(j, i)] = -dim;
        }
        ds.im[(i, i)] = 0.0;
    }
}

/// Time derivatives of the occupations for a given state.
///
/// Errors if the coherence matrix is not Hermitian within tolerance or the
/// shapes do not match the grid.
pub fn rhs_populations(
    scn: &ScaledScenario,
    kernels: &CfKernels,
    p: usize,
    rho_ee: &Array1<f64>,
    rho_gg: &Array1<f64>,
    s: &CoherenceMatrix,
) -> Result<(Array1<f64>, Array1<f64>)> {
    check_state(scn, rho_ee, rho_gg, s)?;
    let n = scn.grid.n_z;
    let mut ci = Array1::zeros(n);
    coupling_integrals(kernels, s, &mut ci);
    let r = &scn.rates;
    let mut d_ee = Array1::zeros(n);
    let mut d_gg = Array1::zeros(n);
    for i in 0..n {
        d_ee[i] = r.r_e[(i, p)] - kernels.gamma_ee[(i, p)] * rho_ee[i] - ci[i];
        d_gg[i] =
            r.r_g[(i, p)] + (1.0 + r.gamma_n) * rho_ee[i] - r.gamma_g[(i, p)] * rho_gg[i] + ci[i];
    }
    Ok((d_ee, d_gg))
}

/// Time derivative of the coherence correlation matrix for a given state;
/// Hermitian by construction.
pub fn rhs_coherence(
    scn: &ScaledScenario,
    kernels: &CfKernels,
    opts: &Phase1Options,
    p: usize,
    rho_ee: &Array1<f64>,
    rho_gg: &Array1<f64>,
    s: &CoherenceMatrix,
) -> Result<CoherenceMatrix> {
    check_state(scn, rho_ee, rho_gg, s)?;
    let n = scn.grid.n_z;
    let mut ws = Workspace::new(n);
    let mut d_ee = Array1::zeros(n);
    let mut d_gg = Array1::zeros(n);
    let mut ds = HermitianMatrix::zeros(n);
    rhs_full(scn, kernels, opts, p, rho_ee, rho_gg, s, &mut ws, &mut d_ee, &mut d_gg, &mut ds);
    Ok(ds)
}

fn check_state(
    scn: &ScaledScenario,
    rho_ee: &Array1<f64>,
    rho_gg: &Array1<f64>,
    s: &CoherenceMatrix,
) -> Result<()> {
    let n = scn.grid.n_z;
    if rho_ee.len() != n || rho_gg.len() != n || s.n() != n {
        return Err(SimError::GridMismatch(format!(
            "state sized {}/{}/{} on a grid with n_z={n}",
            rho_ee.len(),
            rho_gg.len(),
            s.n()
        )));
    }
    let herm = s.hermiticity_error();
    if herm > 1e-9 * s.max_abs().max(1.0) {
        return Err(SimError::StateCorrupted(format!(
            "coherence matrix hermiticity error {herm:.3e}"
        )));
    }
    Ok(())
}

/// Intensity in model units at every `z` for one coherence matrix and
/// occupation column:
/// `I(z) = (8 pi / 3 delta_o) intint A A Re S + int A^2 rho_ee`.
///
/// Direct double summation; the stepper records the same quantity through
/// its reused matrix product instead.
pub fn intensity_from_s(
    scn: &ScaledScenario,
    kernels: &CfKernels,
    s: &CoherenceMatrix,
    rho_ee: &Array1<f64>,
) -> Result<Array1<f64>> {
    if rho_ee.len() != scn.grid.n_z || s.n() != scn.grid.n_z {
        return Err(SimError::GridMismatch("intensity input off-grid".into()));
    }
    let n = scn.grid.n_z;
    let pair_coef = 8.0 * std::f64::consts::PI / (3.0 * scn.delta_o);
    let mut out = Array1::zeros(n);
    for i in 0..n {
        let mut pair = 0.0;
        for j in 0..=i {
            let mut row = 0.0;
            for k in 0..=i {
                row += kernels.m[(i, k)] * s.re[(j, k)];
            }
            pair += kernels.m[(i, j)] * row;
        }
        let mut single = 0.0;
        for k in 0..=i {
            single += kernels.m2[(i, k)] * rho_ee[k];
        }
        out[i] = pair_coef * pair + single;
    }
    Ok(out)
}

/// March occupations and `S` from `tau = 0` to `tau_max`.
pub fn evolve_phase1(scn: &ScaledScenario, opts: &Phase1Options) -> Result<Phase1Output> {
    let grid = scn.grid;
    let (n, n_tau) = (grid.n_z, grid.n_tau);
    let dtau = grid.dtau();
    let kernels = CfKernels::new(scn)?;
    let pair_coef = 8.0 * std::f64::consts::PI / (3.0 * scn.delta_o);

    let mut rho_ee = scn.rho_ee0.clone();
    let mut rho_gg = scn.rho_gg0.clone();
    let mut s = HermitianMatrix::zeros(n);

    let mut ws = Workspace::new(n);
    let mut d_ee = Array1::zeros(n);
    let mut d_gg = Array1::zeros(n);
    let mut ds = HermitianMatrix::zeros(n);
    let mut ee_star = Array1::zeros(n);
    let mut gg_star = Array1::zeros(n);
    let mut s_star = HermitianMatrix::zeros(n);
    let mut d_ee2 = Array1::zeros(n);
    let mut d_gg2 = Array1::zeros(n);
    let mut ds2 = HermitianMatrix::zeros(n);

    let mut history = MediumHistory {
        grid,
        rho_ee: Array2::zeros((n, n_tau)),
        rho_gg: Array2::zeros((n, n_tau)),
        rho_inv: Array2::zeros((n, n_tau)),
        source_w: Array2::zeros((n, n_tau)),
    };
    let mut s_diag = Array2::zeros((n, n_tau));
    let mut intensity = if opts.record_intensity {
        Array2::zeros((n, n_tau))
    } else {
        Array2::zeros((0, 0))
    };
    let mut s_diag_im_max = 0.0f64;
    let snapshot_idx: Vec<usize> =
        opts.s_snapshot_taus.iter().map(|t| grid.tau_index(*t)).collect();
    let mut snapshots = Vec::new();

    for p in 0..n_tau {
        rhs_full(
            scn, &kernels, opts, p, &rho_ee, &rho_gg, &s, &mut ws, &mut d_ee, &mut d_gg, &mut ds,
        );

        // Record the state at tau_p. The matrix product T = M S from the
        // stage evaluation doubles as the inner integral of the intensity.
        for i in 0..n {
            history.rho_ee[(i, p)] = rho_ee[i];
            history.rho_gg[(i, p)] = rho_gg[i];
            history.rho_inv[(i, p)] = rho_ee[i] - rho_gg[i];
            history.source_w[(i, p)] = scn.rates.r_e[(i, p)]
                + (scn.rates.q[(i, p)] + scn.rates.gamma_g[(i, p)]) * rho_ee[i];
            s_diag[(i, p)] = s.re[(i, i)];
            s_diag_im_max = s_diag_im_max.max(s.im[(i, i)].abs());
            if opts.record_intensity {
                let mut pair = 0.0;
                let mut single = 0.0;
                for k in 0..=i {
                    single += kernels.m2[(i, k)] * rho_ee[k];
                }
                if opts.couple_s {
                    for k in 0..=i {
                        pair += kernels.m[(i, k)] * ws.t_re[(i, k)];
                    }
                }
                intensity[(i, p)] = pair_coef * pair + single;
            }
        }
        if snapshot_idx.contains(&p) {
            snapshots.push(SSnapshot { tau_index: p, tau_tilde: grid.tau(p), s: s.clone() });
        }
        if p + 1 == n_tau {
            break;
        }

        // Heun predictor at tau_{p+1}.
        for i in 0..n {
            ee_star[i] = rho_ee[i] + dtau * d_ee[i];
            gg_star[i] = rho_gg[i] + dtau * d_gg[i];
        }
        azip_saxpy(&mut s_star, &s, &ds, dtau);
        rhs_full(
            scn, &kernels, opts, p + 1, &ee_star, &gg_star, &s_star, &mut ws, &mut d_ee2,
            &mut d_gg2, &mut ds2,
        );

        let half = 0.5 * dtau;
        for i in 0..n {
            rho_ee[i] += half * (d_ee[i] + d_ee2[i]);
            rho_gg[i] += half * (d_gg[i] + d_gg2[i]);
        }
        heun_update(&mut s, &ds, &ds2, half);

        let m = s.max_abs();
        if !m.is_finite() || m > DIVERGENCE_GUARD {
            return Err(SimError::IntegrationDiverged(format!(
                "|S| reached {m:.3e} at step {}",
                p + 1
            )));
        }
        if rho_ee.iter().chain(rho_gg.iter()).any(|v| !v.is_finite()) {
            return Err(SimError::IntegrationDiverged(format!(
                "occupations non-finite at step {}",
                p + 1
            )));
        }
    }

    Ok(Phase1Output {
        history,
        s_diag,
        s_diag_im_max,
        intensity,
        snapshots,
        final_s: s,
    })
}

fn azip_saxpy(out: &mut HermitianMatrix, base: &HermitianMatrix, d: &HermitianMatrix, a: f64) {
    ndarray::azip!((o in &mut out.re, b in &base.re, dv in &d.re) *o = b + a * dv);
    ndarray::azip!((o in &mut out.im, b in &base.im, dv in &d.im) *o = b + a * dv);
}

fn heun_update(s: &mut HermitianMatrix, d1: &HermitianMatrix, d2: &HermitianMatrix, half: f64) {
    ndarray::azip!((o in &mut s.re, a in &d1.re, b in &d2.re) *o += half * (a + b));
    ndarray::azip!((o in &mut s.im, a in &d1.im, b in &d2.im) *o += half * (a + b));
}
