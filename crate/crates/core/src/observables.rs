//! Post-processing: photon rates, spectra, normalized maps, peak tracking.

use ndarray::{Array1, Array2};
use rayon::prelude::*;

use crate::cf::FieldCorrelationSlice;
use crate::error::{Result, SimError};
use crate::grid::{trapezoid, NumericalGrid};
use crate::scenario::ScaledScenario;

/// Photon emission rate and cumulative photon number derived from a
/// model-unit intensity map.
#[derive(Debug, Clone)]
pub struct PhotonNumbers {
    /// `dN/dtau` (scaled time), shape `(n_z, n_tau)`.
    pub rate: Array2<f64>,
    /// Cumulative photons emitted by the end of the window, per position.
    pub cumulative: Array1<f64>,
}

/// `dN/dtau = xi * I` in scaled units, integrated over the time window for
/// the cumulative curve. Linear in the intensity by construction.
pub fn photon_number_rate(scn: &ScaledScenario, intensity: &Array2<f64>) -> Result<PhotonNumbers> {
    let (n_z, n_tau) = (scn.grid.n_z, scn.grid.n_tau);
    if intensity.dim() != (n_z, n_tau) {
        return Err(SimError::GridMismatch("intensity map off-grid".into()));
    }
    let rate = intensity.mapv(|v| scn.xi * v);
    let dtau = scn.grid.dtau();
    let cumulative = Array1::from_shape_fn(n_z, |i| {
        trapezoid(rate.row(i).as_slice().unwrap(), 0, n_tau - 1, dtau)
    });
    Ok(PhotonNumbers { rate, cumulative })
}

/// Spectral window applied before the transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

/// Power spectrum at one position, on angular-frequency offsets from the
/// carrier.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub omega_offsets: Array1<f64>,
    pub power: Array1<f64>,
    pub window: Window,
}

/// Frequency grid for [`spectrum`].
#[derive(Debug, Clone)]
pub enum OmegaGrid {
    /// Symmetric DFT frequencies `2 pi k / (n dtau)` covering the full
    /// Nyquist band with `n = 2 n_tau` points; makes the rectangular-window
    /// Parseval identity exact up to rounding.
    Default,
    /// Uniform grid of `n` points over `[-omega_max, omega_max]`.
    Symmetric { omega_max: f64, n: usize },
}

/// Double-transform power spectrum of a two-time correlation slice:
/// `P(omega) = (dtau^2 / 2 pi) sum_{p,q} w_p w_q G(p,q) e^{i omega (tau_p - tau_q)}`.
///
/// Evaluated through the lag sums `R(d) = sum_q w_{q+d} w_q G(q+d, q)`, which
/// is the same double sum reordered; Hermitian symmetrization makes the
/// output real. Under this transform a rotating-frame component oscillating
/// as `e^{i delta (tau1 - tau2)}` appears at offset `-delta`. The optional
/// Hann window is recorded in the result.
pub fn spectrum(
    slice: &FieldCorrelationSlice,
    grid: &NumericalGrid,
    window: Window,
    omega: &OmegaGrid,
) -> Result<SpectrumResult> {
    let n = slice.g.n();
    if n != grid.n_tau {
        return Err(SimError::GridMismatch("correlation slice off-grid".into()));
    }
    let herm = slice.g.hermiticity_error();
    if herm > 1e-9 * slice.g.max_abs().max(1.0) {
        return Err(SimError::StateCorrupted(format!(
            "correlation slice hermiticity error {herm:.3e}"
        )));
    }
    let dtau = grid.dtau();
    let w: Vec<f64> = match window {
        Window::Rectangular => vec![1.0; n],
        Window::Hann => (0..n)
            .map(|p| {
                let x = std::f64::consts::PI * p as f64 / (n - 1) as f64;
                x.sin().powi(2)
            })
            .collect(),
    };

    // Lag sums over the windowed matrix.
    let mut lag_re = vec![0.0f64; n];
    let mut lag_im = vec![0.0f64; n];
    for d in 0..n {
        let mut re = 0.0;
        let mut im = 0.0;
        for q in 0..n - d {
            let ww = w[q + d] * w[q];
            re += ww * slice.g.re[(q + d, q)];
            im += ww * slice.g.im[(q + d, q)];
        }
        lag_re[d] = re;
        lag_im[d] = im;
    }

    let omegas: Vec<f64> = match omega {
        OmegaGrid::Default => {
            let m = 2 * n;
            let d_omega = 2.0 * std::f64::consts::PI / (m as f64 * dtau);
            (-(m as isize / 2)..(m as isize / 2)).map(|k| k as f64 * d_omega).collect()
        }
        OmegaGrid::Symmetric { omega_max, n } => {
            assert!(*n >= 2);
            let step = 2.0 * omega_max / (*n as f64 - 1.0);
            (0..*n).map(|k| -omega_max + k as f64 * step).collect()
        }
    };

    let coef = dtau * dtau / (2.0 * std::f64::consts::PI);
    let power: Vec<f64> = omegas
        .par_iter()
        .map(|&om| {
            // P = coef * [R(0) + 2 Re sum_{d>=1} R(d) e^{i om d dtau}]
            let (s, c0) = (om * dtau).sin_cos();
            let mut cos_d = c0;
            let mut sin_d = s;
            let mut acc = lag_re[0];
            for d in 1..n {
                acc += 2.0 * (lag_re[d] * cos_d - lag_im[d] * sin_d);
                let c_next = cos_d * c0 - sin_d * s;
                let s_next = sin_d * c0 + cos_d * s;
                cos_d = c_next;
                sin_d = s_next;
            }
            coef * acc
        })
        .collect();

    Ok(SpectrumResult {
        omega_offsets: Array1::from_vec(omegas),
        power: Array1::from_vec(power),
        window,
    })
}

/// Trapezoid integral of the spectrum over its frequency grid; compare with
/// `sum G(tau,tau) dtau` for the Parseval check.
pub fn spectrum_integral(s: &SpectrumResult) -> f64 {
    if s.omega_offsets.len() < 2 {
        return 0.0;
    }
    let d_omega = s.omega_offsets[1] - s.omega_offsets[0];
    trapezoid(s.power.as_slice().unwrap(), 0, s.power.len() - 1, d_omega)
}

/// Full width at half maximum of a sampled line, with linear interpolation
/// at the half-power crossings. Returns `None` when the peak touches the
/// grid edge, i.e. the line is not resolved.
pub fn fwhm(omega: &[f64], power: &[f64]) -> Option<f64> {
    let (pk, &pmax) = power
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())?;
    if pk == 0 || pk + 1 == power.len() || pmax <= 0.0 {
        return None;
    }
    let half = 0.5 * pmax;
    let mut left = None;
    for k in (1..=pk).rev() {
        if power[k - 1] <= half && power[k] >= half {
            let t = (half - power[k - 1]) / (power[k] - power[k - 1]);
            left = Some(omega[k - 1] + t * (omega[k] - omega[k - 1]));
            break;
        }
    }
    let mut right = None;
    for k in pk..power.len() - 1 {
        if power[k] >= half && power[k + 1] <= half {
            let t = (power[k] - half) / (power[k] - power[k + 1]);
            right = Some(omega[k] + t * (omega[k + 1] - omega[k]));
            break;
        }
    }
    Some(right? - left?)
}

/// Per-position peak-normalized intensity map plus the peak-time track.
#[derive(Debug, Clone)]
pub struct NormalizedMap {
    pub map: Array2<f64>,
    /// Grid peak time per position (first global maximum; ties break to the
    /// earliest time).
    pub peak_times: Array1<f64>,
    /// Positions whose whole row was zero and was left unnormalized.
    pub flagged_zero_rows: Vec<usize>,
}

/// Normalize each position's intensity history to its own maximum.
pub fn normalized_map(intensity: &Array2<f64>, grid: &NumericalGrid) -> Result<NormalizedMap> {
    let (n_z, n_tau) = intensity.dim();
    if n_z != grid.n_z || n_tau != grid.n_tau {
        return Err(SimError::GridMismatch("intensity map off-grid".into()));
    }
    let mut map = intensity.clone();
    let mut peak_times = Array1::zeros(n_z);
    let mut flagged = Vec::new();
    for i in 0..n_z {
        let mut row = map.row_mut(i);
        let mut best = 0usize;
        let mut best_v = row[0];
        for p in 1..n_tau {
            if row[p] > best_v {
                best_v = row[p];
                best = p;
            }
        }
        if best_v <= 0.0 {
            flagged.push(i);
            peak_times[i] = 0.0;
            continue;
        }
        row.mapv_inplace(|v| v / best_v);
        peak_times[i] = grid.tau(best);
    }
    Ok(NormalizedMap { map, peak_times, flagged_zero_rows: flagged })
}

/// Sub-grid peak position of a sampled curve by parabolic refinement around
/// the discrete argmax (ties to the earliest sample).
pub fn refine_peak(values: &[f64], h: f64) -> f64 {
    let mut best = 0usize;
    for k in 1..values.len() {
        if values[k] > values[best] {
            best = k;
        }
    }
    if best == 0 || best + 1 == values.len() {
        return best as f64 * h;
    }
    let (a, b, c) = (values[best - 1], values[best], values[best + 1]);
    let denom = a - 2.0 * b + c;
    if denom.abs() < 1e-300 {
        return best as f64 * h;
    }
    let shift = 0.5 * (a - c) / denom;
    (best as f64 + shift.clamp(-0.5, 0.5)) * h
}

/// Peak value refined the same way as [`refine_peak`].
pub fn refine_peak_value(values: &[f64]) -> f64 {
    let mut best = 0usize;
    for k in 1..values.len() {
        if values[k] > values[best] {
            best = k;
        }
    }
    if best == 0 || best + 1 == values.len() {
        return values[best];
    }
    let (a, b, c) = (values[best - 1], values[best], values[best + 1]);
    let denom = a - 2.0 * b + c;
    if denom.abs() < 1e-300 {
        return b;
    }
    let shift = 0.5 * (a - c) / denom;
    b - 0.25 * (a - c) * shift.clamp(-0.5, 0.5)
}

/// Indices of interior local maxima with at least `prominence` of the row
/// peak, separated from their surrounding minima by the same margin.
pub fn local_maxima(values: &[f64], prominence: f64) -> Vec<usize> {
    let n = values.len();
    if n < 3 {
        return Vec::new();
    }
    let global = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if global <= 0.0 {
        return Vec::new();
    }
    let floor = prominence * global;
    let mut out = Vec::new();
    let mut k = 1;
    while k + 1 < n {
        if values[k] >= values[k - 1] && values[k] > values[k + 1] && values[k] >= floor {
            // require a real dip on both sides somewhere before the
            // neighboring maxima
            let mut left_min = values[k];
            for v in values[..k].iter().rev() {
                left_min = left_min.min(*v);
                if *v > values[k] {
                    break;
                }
            }
            let mut right_min = values[k];
            for v in values[k + 1..].iter() {
                right_min = right_min.min(*v);
                if *v > values[k] {
                    break;
                }
            }
            if values[k] - left_min >= floor * 0.5 && values[k] - right_min >= floor * 0.5 {
                out.push(k);
            }
        }
        k += 1;
    }
    out
}

/// First position index whose intensity history rings: at least two distinct
/// local maxima above `prominence` of the row peak.
pub fn ringing_onset(intensity: &Array2<f64>, prominence: f64) -> Option<usize> {
    let n_z = intensity.nrows();
    (0..n_z).find(|&i| {
        local_maxima(intensity.row(i).as_slice().unwrap(), prominence).len() >= 2
    })
}

/// Least-squares slope of `y` against `x`.
pub fn linear_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (xi, yi) in x.iter().zip(y.iter()) {
        num += (xi - mx) * (yi - my);
        den += (xi - mx) * (xi - mx);
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn refine_peak_recovers_continuum_peak() {
        let h = 0.05;
        let v: Vec<f64> = (0..200).map(|k| {
            let t = k as f64 * h;
            t * (-t).exp()
        }).collect();
        let t = refine_peak(&v, h);
        assert!((t - 1.0).abs() < 1e-3, "refined peak {t}");
    }

    #[test]
    fn normalized_map_constant_rows() {
        let grid = NumericalGrid::new(3, 4, 1.0, 1.0).unwrap();
        let m = Array2::from_elem((3, 4), 2.5);
        let nm = normalized_map(&m, &grid).unwrap();
        assert!(nm.map.iter().all(|v| (*v - 1.0).abs() < 1e-15));
        assert!(nm.flagged_zero_rows.is_empty());
        // ties break to the earliest time
        assert!(nm.peak_times.iter().all(|t| *t == 0.0));
    }

    #[test]
    fn normalized_map_flags_zero_rows() {
        let grid = NumericalGrid::new(2, 4, 1.0, 1.0).unwrap();
        let mut m = Array2::zeros((2, 4));
        m[(1, 2)] = 3.0;
        let nm = normalized_map(&m, &grid).unwrap();
        assert_eq!(nm.flagged_zero_rows, vec![0]);
        assert_relative_eq!(nm.map[(1, 2)], 1.0);
    }

    #[test]
    fn two_equal_peaks_take_earliest() {
        let grid = NumericalGrid::new(2, 5, 1.0, 1.0).unwrap();
        let mut m = Array2::zeros((2, 5));
        for p in 0..5 {
            m[(0, p)] = 1.0;
        }
        m[(1, 1)] = 2.0;
        m[(1, 3)] = 2.0;
        let nm = normalized_map(&m, &grid).unwrap();
        assert_relative_eq!(nm.peak_times[1], grid.tau(1));
    }

    #[test]
    fn local_maxima_counts_ringing() {
        let v: Vec<f64> = (0..200)
            .map(|k| {
                let t = k as f64 * 0.05;
                (t * (-t / 3.0).exp()) * (1.0 + 0.5 * (3.0 * t).cos())
            })
            .collect();
        assert!(local_maxima(&v, 0.05).len() >= 2);
        let smooth: Vec<f64> = (0..200).map(|k| {
            let t = k as f64 * 0.05;
            t * (-t).exp()
        }).collect();
        assert_eq!(local_maxima(&smooth, 0.05).len(), 1);
    }

    #[test]
    fn slope_of_line() {
        let x: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
        assert_relative_eq!(linear_slope(&x, &y), -0.5, epsilon = 1e-12);
    }
}
