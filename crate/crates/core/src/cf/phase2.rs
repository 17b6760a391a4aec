//! Phase 2: spatial march of the two-time field correlation.
//!
//! In scaled units, at each position the correlation matrix obeys
//!
//! ```text
//! dG(t1,t2)/dz = -kappa G
//!              + 1/2 [ int_0^t1 D(t1,t') rho_inv(t') G(t',t2) dt'
//!                    + int_0^t2 D(t2,t') rho_inv(t') G(t1,t') dt' ]
//!              + D(t1,0) D(t2,0) rho_ee(z,0)
//!              + int_0^min(t1,t2) D(t1,t') D(t2,t') w(z,t') dt'
//! ```
//!
//! with `D` the coherence damping kernel and `w` the recorded spontaneous
//! source weight. Everything is evaluated in the rotating frame, so no
//! carrier phase appears. The memory integrals are built with the stable
//! per-step recursion `C(p) = d_p C(p-1) + local term`, never as ratios of
//! accumulated exponentials, so large decoherence exponents cannot overflow.

use ndarray::Array2;

use super::{FieldCorrelationSlice, HermitianMatrix, MediumHistory};
use crate::damping::damping_d_step;
use crate::error::{Result, SimError};
use crate::scenario::ScaledScenario;

#[derive(Debug, Clone, Default)]
pub struct Phase2Options {
    /// Scaled `z` positions at which full correlation slices are kept.
    pub snapshot_zs: Vec<f64>,
}

#[derive(Debug)]
pub struct Phase2Output {
    /// Diagonal `Re G(z, tau, tau)` over the grid, shape `(n_z, n_tau)`.
    pub g_diag: Array2<f64>,
    /// Largest `|Im G(tau, tau)|` seen at recording points.
    pub g_diag_im_max: f64,
    pub slices: Vec<FieldCorrelationSlice>,
}

/// Per-position damping data for the memory recursions.
struct DampingRow {
    /// `d_p = exp(-1/2 int_{tau_{p-1}}^{tau_p} Gamma dtau)`, `d_0 = 1`.
    step: Vec<f64>,
    /// `P_p = D(tau_p, 0)` as a running product of step factors.
    from_zero: Vec<f64>,
}

impl DampingRow {
    fn new(gamma_row: &[f64], dtau: f64) -> Self {
        let n = gamma_row.len();
        let mut step = vec![1.0; n];
        let mut from_zero = vec![1.0; n];
        for p in 1..n {
            step[p] = damping_d_step(gamma_row, dtau, p);
            from_zero[p] = from_zero[p - 1] * step[p];
        }
        Self { step, from_zero }
    }
}

struct Phase2Workspace {
    k_re: Array2<f64>,
    k_im: Array2<f64>,
    /// Source matrix (real, symmetric).
    src: Array2<f64>,
    q0: Vec<f64>,
    dlag: Vec<f64>,
}

impl Phase2Workspace {
    fn new(n_tau: usize) -> Self {
        Self {
            k_re: Array2::zeros((n_tau, n_tau)),
            k_im: Array2::zeros((n_tau, n_tau)),
            src: Array2::zeros((n_tau, n_tau)),
            q0: vec![0.0; n_tau],
            dlag: vec![0.0; n_tau],
        }
    }
}

/// Memory kernel `K(p, q) = int_0^{tau_p} D(tau_p, t') rho_inv(t') G(t', q) dt'`
/// for all `(p, q)`, built by sweeping rows with the damping recursion.
fn memory_kernel(
    g: &Array2<f64>,
    rho_inv_row: &[f64],
    damping: &DampingRow,
    dtau: f64,
    out: &mut Array2<f64>,
) {
    let n = g.nrows();
    let hd = 0.5 * dtau;
    out.row_mut(0).fill(0.0);
    for p in 1..n {
        let d = damping.step[p];
        let w_prev = hd * rho_inv_row[p - 1];
        let w_here = hd * rho_inv_row[p];
        let (head, mut tail) = out.view_mut().split_at(ndarray::Axis(0), p);
        let prev = head.row(p - 1);
        let mut here = tail.row_mut(0);
        let g_prev = g.row(p - 1);
        let g_here = g.row(p);
        for q in 0..n {
            here[q] = d * (prev[q] + w_prev * g_prev[q]) + w_here * g_here[q];
        }
    }
}

/// Spontaneous source matrix
/// `src(p,q) = P_p P_q rho_ee0 + D(tau_max(p,q), tau_min) Q0(min(p,q))` with
/// `Q0(m) = int_0^{tau_m} D(tau_m,t')^2 w(t') dt'`.
fn source_matrix(
    w_row: &[f64],
    rho_ee0: f64,
    damping: &DampingRow,
    dtau: f64,
    ws: &mut Phase2Workspace,
) {
    let n = w_row.len();
    let hd = 0.5 * dtau;
    ws.q0[0] = 0.0;
    for p in 1..n {
        let d2 = damping.step[p] * damping.step[p];
        ws.q0[p] = d2 * (ws.q0[p - 1] + hd * w_row[p - 1]) + hd * w_row[p];
    }
    for p in 0..n {
        // dlag[q] = D(tau_p, tau_q) for q <= p, updated by one step factor
        // per row.
        let d = damping.step[p];
        for q in 0..p {
            ws.dlag[q] *= d;
        }
        ws.dlag[p] = 1.0;
        let pp = damping.from_zero[p];
        for q in 0..=p {
            let v = pp * damping.from_zero[q] * rho_ee0 + ws.dlag[q] * ws.q0[q];
            ws.src[(p, q)] = v;
            ws.src[(q, p)] = v;
        }
    }
}

/// Full right-hand side `dG/dz` at position index `m`.
#[allow(clippy::too_many_arguments)]
fn rhs_g(
    scn: &ScaledScenario,
    history: &MediumHistory,
    gamma: &Array2<f64>,
    m: usize,
    g: &HermitianMatrix,
    ws: &mut Phase2Workspace,
    out: &mut HermitianMatrix,
) {
    let n_tau = scn.grid.n_tau;
    let dtau = scn.grid.dtau();
    let gamma_row = gamma.row(m);
    let damping = DampingRow::new(gamma_row.as_slice().unwrap(), dtau);
    let rho_inv_row = history.rho_inv.row(m);
    let rho_inv = rho_inv_row.as_slice().unwrap();

    memory_kernel(&g.re, rho_inv, &damping, dtau, &mut ws.k_re);
    memory_kernel(&g.im, rho_inv, &damping, dtau, &mut ws.k_im);
    source_matrix(
        history.source_w.row(m).as_slice().unwrap(),
        history.rho_ee[(m, 0)],
        &damping,
        dtau,
        ws,
    );

    let kappa = scn.rates.kappa[m];
    for p in 0..n_tau {
        for q in 0..=p {
            let re = -kappa * g.re[(p, q)]
                + 0.5 * (ws.k_re[(p, q)] + ws.k_re[(q, p)])
                + ws.src[(p, q)];
            let im = -kappa * g.im[(p, q)] + 0.5 * (ws.k_im[(p, q)] - ws.k_im[(q, p)]);
            out.re[(p, q)] = re;
            out.re[(q, p)] = re;
            out.im[(p, q)] = im;
            out.im[(q, p)] = -im;
        }
        out.im[(p, p)] = 0.0;
    }
}

/// March `G` from the dark boundary `G(z=0) = 0` to the end of the medium,
/// recording the intensity diagonal everywhere and full slices at the
/// requested positions.
pub fn propagate_g(
    scn: &ScaledScenario,
    history: &MediumHistory,
    opts: &Phase2Options,
) -> Result<Phase2Output> {
    history.check_complete(&scn.grid)?;
    if (history.grid.z_max - scn.grid.z_max).abs() > 1e-12 * scn.grid.z_max {
        return Err(SimError::PhaseOrderViolation(
            "history recorded on a different grid".into(),
        ));
    }
    let derived = scn.derived()?;
    let (n_z, n_tau) = (scn.grid.n_z, scn.grid.n_tau);
    let dz = scn.grid.dz();

    let mut g = HermitianMatrix::zeros(n_tau);
    let mut f1 = HermitianMatrix::zeros(n_tau);
    let mut g_star = HermitianMatrix::zeros(n_tau);
    let mut f2 = HermitianMatrix::zeros(n_tau);
    let mut ws = Phase2Workspace::new(n_tau);

    let mut g_diag = Array2::zeros((n_z, n_tau));
    let mut g_diag_im_max = 0.0f64;
    let snapshot_idx: Vec<usize> = opts.snapshot_zs.iter().map(|z| scn.grid.z_index(*z)).collect();
    let mut slices = Vec::new();

    let record = |m: usize,
                      g: &HermitianMatrix,
                      g_diag: &mut Array2<f64>,
                      g_diag_im_max: &mut f64,
                      slices: &mut Vec<FieldCorrelationSlice>| {
        for p in 0..n_tau {
            g_diag[(m, p)] = g.re[(p, p)];
            *g_diag_im_max = g_diag_im_max.max(g.im[(p, p)].abs());
        }
        if snapshot_idx.contains(&m) {
            slices.push(FieldCorrelationSlice {
                g: g.clone(),
                z_index: m,
                z_tilde: scn.grid.z(m),
            });
        }
    };

    record(0, &g, &mut g_diag, &mut g_diag_im_max, &mut slices);
    for m in 0..n_z - 1 {
        rhs_g(scn, history, &derived.gamma_total, m, &g, &mut ws, &mut f1);
        ndarray::azip!((o in &mut g_star.re, b in &g.re, d in &f1.re) *o = b + dz * d);
        ndarray::azip!((o in &mut g_star.im, b in &g.im, d in &f1.im) *o = b + dz * d);
        rhs_g(scn, history, &derived.gamma_total, m + 1, &g_star, &mut ws, &mut f2);
        let half = 0.5 * dz;
        ndarray::azip!((o in &mut g.re, a in &f1.re, b in &f2.re) *o += half * (a + b));
        ndarray::azip!((o in &mut g.im, a in &f1.im, b in &f2.im) *o += half * (a + b));

        let mx = g.max_abs();
        if !mx.is_finite() || mx > super::phase1::DIVERGENCE_GUARD {
            return Err(SimError::IntegrationDiverged(format!(
                "|G| reached {mx:.3e} at z step {}",
                m + 1
            )));
        }
        record(m + 1, &g, &mut g_diag, &mut g_diag_im_max, &mut slices);
    }

    Ok(Phase2Output { g_diag, g_diag_im_max, slices })
}

/// Size of the dropped stimulated correction to the one-atom two-time
/// coherence, relative to the kept free-decay term.
#[derive(Debug, Clone, Copy)]
pub struct StimMonitor {
    /// Maximum ratio over the region where the spontaneous source still
    /// dominates the field growth.
    pub max_in_spontaneous_region: f64,
    /// Maximum ratio over the whole grid.
    pub max_global: f64,
    /// True when the in-region ratio exceeds one, i.e. the closure would be
    /// questionable where it matters.
    pub flagged: bool,
}

/// Evaluate the order-of-magnitude ratio
/// `delta_o tau^2 G rho_inv^2 / (4 rho_ee)` over the grid, reporting its
/// maximum inside the region where the spontaneous source dominates
/// (`tau G |rho_inv| / (4 rho_ee) <= 1`). Purely diagnostic.
pub fn stim_correction_monitor(
    scn: &ScaledScenario,
    history: &MediumHistory,
    g_diag: &Array2<f64>,
) -> StimMonitor {
    let (n_z, n_tau) = g_diag.dim();
    let mut max_region = 0.0f64;
    let mut max_global = 0.0f64;
    for i in 0..n_z {
        for p in 0..n_tau {
            let rho_ee = history.rho_ee[(i, p)];
            if rho_ee <= 1e-12 {
                continue;
            }
            let tau = scn.grid.tau(p);
            let g = g_diag[(i, p)].max(0.0);
            let inv = history.rho_inv[(i, p)];
            let ratio = scn.delta_o * tau * tau * g * inv * inv / (4.0 * rho_ee);
            max_global = max_global.max(ratio);
            let dominance = tau * g * inv.abs() / (4.0 * rho_ee);
            if dominance <= 1.0 {
                max_region = max_region.max(ratio);
            }
        }
    }
    StimMonitor {
        max_in_spontaneous_region: max_region,
        max_global,
        flagged: max_region > 1.0,
    }
}
