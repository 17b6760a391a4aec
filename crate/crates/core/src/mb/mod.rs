//! Stochastic Maxwell-Bloch baseline.
//!
//! Semi-classical envelope equations with a Gaussian noise source on the
//! coherences, run as a deterministically seeded ensemble. In scaled units a
//! trajectory obeys
//!
//! ```text
//! d rho_ee/dtau = r_e - Gamma_ee rho_ee - Im(rho_ge e+)
//! d rho_gg/dtau = r_g + (1 + gamma_n) rho_ee - gamma_g rho_gg + Im(rho_ge e+)
//! d rho_ge/dtau = -Gamma/2 rho_ge + (i/2) rho_inv conj(e+) + s+
//! d e+/dz       = -kappa/2 e+ + i conj(rho_ge)
//! ```
//!
//! where the field is re-integrated along `z` at fixed retarded time (the
//! retarded-frame field equation has no time derivative). The noise `s+` is
//! circular complex Gaussian, delta-correlated with
//! `<s+ s-> = F rho_ee / (dz dtau)`, and enters only the coherence equation.
//! Mean `|e+|^2` is reported in the same model intensity units as the
//! correlation-function solver, so the two pipelines are directly
//! comparable.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Result, SimError};
use crate::scenario::ScaledScenario;

/// Noise configuration for one ensemble.
#[derive(Debug, Clone, Copy)]
pub struct NoiseSpec {
    /// Correlation factor in scaled units; see [`noise_factor_scaled`].
    pub f_factor: f64,
    /// Master seed; trajectory `k` draws from stream `k` of this seed.
    pub seed: u64,
}

/// Scaled noise correlation factor `F = (3 delta_o / 4 pi) Gamma_ref xi`,
/// the scaled-unit image of `F = 2 Gamma / n * xi`.
///
/// `Gamma_ref` is the grid mean of the total coherence decay, which reduces
/// to the spontaneous rate (scaled value 1) whenever no incoherent rates are
/// present.
pub fn noise_factor_scaled(scn: &ScaledScenario) -> Result<f64> {
    let derived = scn.derived()?;
    let gamma_ref =
        derived.gamma_total.iter().sum::<f64>() / derived.gamma_total.len() as f64;
    Ok(3.0 * scn.delta_o / (4.0 * std::f64::consts::PI) * gamma_ref * scn.xi)
}

/// SI noise correlation factor `F = 2 Gamma_ref / n * xi` for a physical
/// scenario with linear density `n` and reference decay `gamma_ref` (1/s).
pub fn noise_factor(gamma_ref: f64, linear_density: f64, xi: f64) -> f64 {
    2.0 * gamma_ref / linear_density * xi
}

/// Draw one coherence noise increment for a cell with occupation `rho_ee`.
///
/// Circular complex Gaussian with `<s> = 0` and
/// `<|s|^2> = f_factor * rho_ee / (dz dtau)`; the conjugate partner is
/// implicitly `conj(s)`. Occupations more negative than a rounding tolerance
/// are rejected.
pub fn sample_noise<R: Rng>(
    rho_ee: f64,
    f_factor: f64,
    dz: f64,
    dtau: f64,
    rng: &mut R,
) -> Result<C64> {
    if rho_ee < -1e-9 {
        return Err(SimError::InvalidState(format!(
            "negative occupation {rho_ee:.3e} in noise variance"
        )));
    }
    let var = f_factor * rho_ee.max(0.0) / (dz * dtau);
    if var == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let sd = (0.5 * var).sqrt();
    let x: f64 = StandardNormal.sample(rng);
    let y: f64 = StandardNormal.sample(rng);
    Ok(C64::new(sd * x, sd * y))
}

/// Instantaneous state of one trajectory at fixed retarded time.
#[derive(Debug, Clone)]
pub struct MbState {
    pub rho_ee: Array1<f64>,
    pub rho_gg: Array1<f64>,
    pub rho_ge: Array1<C64>,
    /// Field envelope along `z`, slaved to the coherences.
    pub e_plus: Array1<C64>,
}

impl MbState {
    fn initial(scn: &ScaledScenario) -> Self {
        let n = scn.grid.n_z;
        Self {
            rho_ee: scn.rho_ee0.clone(),
            rho_gg: scn.rho_gg0.clone(),
            rho_ge: Array1::from_elem(n, C64::new(0.0, 0.0)),
            e_plus: Array1::from_elem(n, C64::new(0.0, 0.0)),
        }
    }
}

/// One stochastic realization over the full grid.
#[derive(Debug, Clone)]
pub struct MbTrajectory {
    /// `|e+|^2` in model intensity units, shape `(n_z, n_tau)`.
    pub intensity: Array2<f64>,
    /// Coherence history, shape `(n_z, n_tau)`.
    pub rho_ge: Array2<C64>,
    /// Field envelope history.
    pub e_plus: Array2<C64>,
    pub rho_ee_final: Array1<f64>,
    pub rho_gg_final: Array1<f64>,
    pub stream: u64,
}

/// Ensemble statistics, bit-reproducible for a fixed seed and trajectory
/// count regardless of worker threads.
#[derive(Debug, Clone)]
pub struct EnsembleResult {
    /// Mean `|e+|^2` in model intensity units, shape `(n_z, n_tau)`.
    pub mean_intensity: Array2<f64>,
    /// Cumulative mean photon number per position.
    pub mean_photon_number: Array1<f64>,
    /// Refined intensity-peak time at the last position, per trajectory.
    pub peak_times: Vec<f64>,
    pub n_traj: usize,
    /// Trajectory streams that diverged and were excluded.
    pub excluded: Vec<u64>,
}

/// March the field along `z` at fixed retarded time by trapezoidal
/// accumulation of the polarization source under absorption.
pub fn integrate_field(scn: &ScaledScenario, rho_ge: &Array1<C64>, e_plus: &mut Array1<C64>) {
    let n = scn.grid.n_z;
    let dz = scn.grid.dz();
    let kappa = &scn.rates.kappa;
    e_plus[0] = C64::new(0.0, 0.0);
    for i in 1..n {
        let a = (-0.25 * dz * (kappa[i - 1] + kappa[i])).exp();
        let src_prev = C64::i() * rho_ge[i - 1].conj();
        let src_here = C64::i() * rho_ge[i].conj();
        e_plus[i] = a * e_plus[i - 1] + 0.5 * dz * (a * src_prev + src_here);
    }
}

struct MatterRhs {
    d_ee: Array1<f64>,
    d_gg: Array1<f64>,
    d_ge: Array1<C64>,
}

fn matter_rhs(scn: &ScaledScenario, p: usize, state: &MbState, out: &mut MatterRhs) {
    let n = scn.grid.n_z;
    let r = &scn.rates;
    for i in 0..n {
        let gamma_ee = 1.0 + r.gamma_n + r.gamma_e[(i, p)];
        let gamma = gamma_ee + r.q[(i, p)] + r.gamma_g[(i, p)];
        let exchange = (state.rho_ge[i] * state.e_plus[i]).im;
        out.d_ee[i] = r.r_e[(i, p)] - gamma_ee * state.rho_ee[i] - exchange;
        out.d_gg[i] = r.r_g[(i, p)] + (1.0 + r.gamma_n) * state.rho_ee[i]
            - r.gamma_g[(i, p)] * state.rho_gg[i]
            + exchange;
        let inv = state.rho_ee[i] - state.rho_gg[i];
        out.d_ge[i] = -0.5 * gamma * state.rho_ge[i]
            + C64::new(0.0, 0.5) * inv * state.e_plus[i].conj();
    }
}

/// Advance one trajectory by a single time step: Heun for the deterministic
/// part with the field re-integrated at each stage, then an Euler-Maruyama
/// noise increment on the coherences.
pub fn mb_step<R: Rng>(
    scn: &ScaledScenario,
    p: usize,
    state: &mut MbState,
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<()> {
    let n = scn.grid.n_z;
    let dtau = scn.grid.dtau();
    let dz = scn.grid.dz();

    let mut f1 = MatterRhs {
        d_ee: Array1::zeros(n),
        d_gg: Array1::zeros(n),
        d_ge: Array1::from_elem(n, C64::new(0.0, 0.0)),
    };
    let mut f2 = MatterRhs {
        d_ee: Array1::zeros(n),
        d_gg: Array1::zeros(n),
        d_ge: Array1::from_elem(n, C64::new(0.0, 0.0)),
    };
    matter_rhs(scn, p, state, &mut f1);

    let mut star = state.clone();
    for i in 0..n {
        star.rho_ee[i] += dtau * f1.d_ee[i];
        star.rho_gg[i] += dtau * f1.d_gg[i];
        star.rho_ge[i] += dtau * f1.d_ge[i];
    }
    integrate_field(scn, &star.rho_ge, &mut star.e_plus);
    matter_rhs(scn, p + 1, &star, &mut f2);

    let half = 0.5 * dtau;
    for i in 0..n {
        state.rho_ee[i] += half * (f1.d_ee[i] + f2.d_ee[i]);
        state.rho_gg[i] += half * (f1.d_gg[i] + f2.d_gg[i]);
        state.rho_ge[i] += half * (f1.d_ge[i] + f2.d_ge[i]);
    }

    // Ito increment with the variance taken at the step start.
    if noise.f_factor != 0.0 {
        for i in 0..n {
            let s = sample_noise(state.rho_ee[i], noise.f_factor, dz, dtau, rng)?;
            state.rho_ge[i] += dtau * s;
        }
    }

    integrate_field(scn, &state.rho_ge, &mut state.e_plus);

    for i in 0..n {
        if !state.rho_ee[i].is_finite()
            || !state.rho_gg[i].is_finite()
            || !state.rho_ge[i].re.is_finite()
            || !state.rho_ge[i].im.is_finite()
        {
            return Err(SimError::TrajectoryDiverged(format!(
                "non-finite state at step {p}, cell {i}"
            )));
        }
    }
    Ok(())
}

/// Model-unit intensity prefactor `8 pi / (3 delta_o)` converting `|e+|^2`
/// to the shared intensity convention.
fn intensity_coef(scn: &ScaledScenario) -> f64 {
    8.0 * std::f64::consts::PI / (3.0 * scn.delta_o)
}

/// Run one trajectory on stream `stream` of the master seed.
pub fn run_trajectory(
    scn: &ScaledScenario,
    noise: &NoiseSpec,
    stream: u64,
) -> Result<MbTrajectory> {
    let (n_z, n_tau) = (scn.grid.n_z, scn.grid.n_tau);
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    rng.set_stream(stream);

    let mut state = MbState::initial(scn);
    integrate_field(scn, &state.rho_ge, &mut state.e_plus);

    let coef = intensity_coef(scn);
    let mut intensity = Array2::zeros((n_z, n_tau));
    let mut rho_ge = Array2::from_elem((n_z, n_tau), C64::new(0.0, 0.0));
    let mut e_plus = Array2::from_elem((n_z, n_tau), C64::new(0.0, 0.0));

    for p in 0..n_tau {
        for i in 0..n_z {
            intensity[(i, p)] = coef * state.e_plus[i].norm_sqr();
            rho_ge[(i, p)] = state.rho_ge[i];
            e_plus[(i, p)] = state.e_plus[i];
        }
        if p + 1 < n_tau {
            mb_step(scn, p, &mut state, noise, &mut rng)?;
        }
    }

    Ok(MbTrajectory {
        intensity,
        rho_ge,
        e_plus,
        rho_ee_final: state.rho_ee,
        rho_gg_final: state.rho_gg,
        stream,
    })
}

/// Trajectories per reduction block; fixed so the summation tree does not
/// depend on the worker count.
const ENSEMBLE_BLOCK: usize = 8;

/// Run `n_traj` independent trajectories and aggregate their statistics.
///
/// Streams are assigned by trajectory index; blocks of trajectories are
/// summed in index order and block sums are folded in block order, so the
/// result is bitwise identical for any thread count. Diverged trajectories
/// are excluded and the run fails if more than 1% are lost.
pub fn run_ensemble(scn: &ScaledScenario, noise: &NoiseSpec, n_traj: usize) -> Result<EnsembleResult> {
    if n_traj == 0 {
        return Err(SimError::InvalidState("n_traj must be >= 1".into()));
    }
    let (n_z, n_tau) = (scn.grid.n_z, scn.grid.n_tau);
    let blocks: Vec<(usize, usize)> = (0..n_traj)
        .step_by(ENSEMBLE_BLOCK)
        .map(|start| (start, (start + ENSEMBLE_BLOCK).min(n_traj)))
        .collect();

    struct BlockSum {
        intensity: Array2<f64>,
        peaks: Vec<(u64, f64)>,
        excluded: Vec<u64>,
    }

    let block_sums: Vec<BlockSum> = blocks
        .par_iter()
        .map(|&(start, end)| {
            let mut sum = Array2::zeros((n_z, n_tau));
            let mut peaks = Vec::new();
            let mut excluded = Vec::new();
            for k in start..end {
                match run_trajectory(scn, noise, k as u64) {
                    Ok(traj) => {
                        sum += &traj.intensity;
                        let last = traj.intensity.row(n_z - 1);
                        let t = crate::observables::refine_peak(
                            last.as_slice().unwrap(),
                            scn.grid.dtau(),
                        );
                        peaks.push((k as u64, t));
                    }
                    Err(SimError::TrajectoryDiverged(_)) => excluded.push(k as u64),
                    Err(e) => return Err(e),
                }
            }
            Ok(BlockSum { intensity: sum, peaks, excluded })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut total = Array2::zeros((n_z, n_tau));
    let mut peaks: Vec<(u64, f64)> = Vec::new();
    let mut excluded = Vec::new();
    for b in block_sums {
        total += &b.intensity;
        peaks.extend(b.peaks);
        excluded.extend(b.excluded);
    }
    let kept = n_traj - excluded.len();
    if kept == 0 || excluded.len() * 100 > n_traj {
        return Err(SimError::EnsembleDegraded { excluded: excluded.len(), total: n_traj });
    }
    total /= kept as f64;
    peaks.sort_by_key(|(k, _)| *k);

    let dtau = scn.grid.dtau();
    let mean_photon_number = Array1::from_shape_fn(n_z, |i| {
        let row = total.row(i);
        scn.xi * crate::grid::trapezoid(row.as_slice().unwrap(), 0, n_tau - 1, dtau)
    });

    Ok(EnsembleResult {
        mean_intensity: total,
        mean_photon_number,
        peak_times: peaks.into_iter().map(|(_, t)| t).collect(),
        n_traj,
        excluded,
    })
}
