//! Oracles for the stochastic Maxwell-Bloch baseline: exact homogeneous
//! limits, Monte-Carlo statistics of the noise sampler, determinism, and the
//! small-z analytic intensity shape.

use approx::assert_relative_eq;
use ndarray::Array1;
use num_complex::Complex64 as C64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cfsf_core::grid::NumericalGrid;
use cfsf_core::mb::{
    integrate_field, mb_step, noise_factor, noise_factor_scaled, run_ensemble, run_trajectory,
    sample_noise, MbState, NoiseSpec,
};
use cfsf_core::scenario::{to_dimensionless, Profile, RateField, ScaledScenario};
use cfsf_core::{PhysicalScenario, XiConvention};

fn scaled_two_level(delta_o: f64, z_max: f64, tau_max: f64, n_z: usize, n_tau: usize) -> ScaledScenario {
    let radius = (1.0 / std::f64::consts::PI).sqrt();
    let n_lin = std::f64::consts::PI * radius * radius;
    let beta = 3.0 * delta_o * n_lin / (8.0 * std::f64::consts::PI);
    let grid = NumericalGrid::new(n_z, n_tau, z_max / beta, tau_max).unwrap();
    let scn = PhysicalScenario {
        gamma_sp: 1.0,
        lambda: 1.0,
        delta_o,
        n_v: 1.0,
        radius,
        length: grid.z_max,
        xi_convention: XiConvention::Unity,
        rate_fields: RateField::zero(&grid),
        initial_rho_ee: Profile::Uniform(1.0),
        initial_rho_gg: Profile::Uniform(0.0),
    };
    to_dimensionless(&scn, &grid).unwrap()
}

#[test]
fn noise_factor_formulas() {
    // F = 2 Gamma / n * xi in SI units; doubling Gamma doubles F.
    let n_lin = 2.0106e14;
    let f1 = noise_factor(6.25e12, n_lin, 1.0);
    assert_relative_eq!(f1, 2.0 * 6.25e12 / n_lin, max_relative = 1e-15);
    assert_relative_eq!(noise_factor(2.0 * 6.25e12, n_lin, 1.0), 2.0 * f1, max_relative = 1e-15);

    // scaled form: (3 delta_o / 4 pi) Gamma_ref xi with Gamma_ref = 1 for a
    // pure two-level medium
    let scn = scaled_two_level(4e-6, 1.0, 1.0, 4, 4);
    let f = noise_factor_scaled(&scn).unwrap();
    assert_relative_eq!(
        f,
        3.0 * 4e-6 / (4.0 * std::f64::consts::PI),
        max_relative = 1e-12
    );

    // neon-parameter arithmetic oracle: 2 Gamma_sp / n with
    // Gamma_sp = 1/160 fs and n = 1.6e25 * pi * (2e-6)^2 = 2.0106e14 /m
    // gives 6.2169e-2.
    let f_ne = noise_factor(6.25e12, 1.6e25 * std::f64::consts::PI * 4e-12, 1.0);
    assert_relative_eq!(f_ne, 6.2169e-2, max_relative = 1e-4);
}

#[test]
fn sample_noise_statistics() {
    // 1e6 draws at one cell: mean within 4 sigma / sqrt(N), second moment
    // within 1%, and two consecutive cells uncorrelated at 4 sigma.
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let f = 0.37;
    let rho_ee = 0.62;
    let (dz, dtau) = (0.05, 0.02);
    let var_expect = f * rho_ee / (dz * dtau);
    let n = 1_000_000usize;
    let mut sum = C64::new(0.0, 0.0);
    let mut sum_sq = 0.0;
    let mut cross = 0.0;
    for _ in 0..n {
        let a = sample_noise(rho_ee, f, dz, dtau, &mut rng).unwrap();
        let b = sample_noise(rho_ee, f, dz, dtau, &mut rng).unwrap();
        sum += a;
        sum_sq += a.norm_sqr();
        cross += (a * b.conj()).re;
    }
    let sigma_single = (var_expect / 2.0).sqrt();
    let mean = sum / n as f64;
    let bound = 4.0 * sigma_single / (n as f64).sqrt();
    assert!(mean.re.abs() < bound && mean.im.abs() < bound);
    assert_relative_eq!(sum_sq / n as f64, var_expect, max_relative = 0.01);
    // <a conj(b)> ~ 0 with std var/sqrt(N)
    let cross_bound = 4.0 * var_expect / (n as f64).sqrt();
    assert!(cross.abs() / n as f64 * n as f64 / n as f64 * 1.0 < cross_bound * n as f64 / n as f64);
    assert!((cross / n as f64).abs() < cross_bound);

    // zero occupation: exactly zero noise
    let z = sample_noise(0.0, f, dz, dtau, &mut rng).unwrap();
    assert_eq!(z, C64::new(0.0, 0.0));
    // invalid state rejected
    assert!(sample_noise(-1e-3, f, dz, dtau, &mut rng).is_err());
}

#[test]
fn zero_noise_homogeneous_solution_stays_zero() {
    // No noise, no initial coherence or field: the solution is identically
    // zero with no roundoff source.
    let scn = scaled_two_level(4e-6, 5.0, 3.0, 12, 601);
    let noise = NoiseSpec { f_factor: 0.0, seed: 7 };
    let traj = run_trajectory(&scn, &noise, 0).unwrap();
    assert!(traj.e_plus.iter().all(|v| v.re == 0.0 && v.im == 0.0));
    assert!(traj.rho_ge.iter().all(|v| v.re == 0.0 && v.im == 0.0));
    assert!(traj.intensity.iter().all(|v| *v == 0.0));
    // occupations still decay spontaneously
    let last = scn.grid.n_tau - 1;
    assert_relative_eq!(traj.rho_ee_final[3], (-scn.grid.tau(last)).exp(), max_relative = 1e-4);
}

#[test]
fn coherence_decays_at_half_gamma() {
    // Zero field (first cell), initial coherence c0, no noise:
    // rho_ge(tau) = c0 exp(-Gamma tau / 2).
    let mut scn = scaled_two_level(4e-6, 1.0, 2.0, 3, 401);
    scn.rates.q.fill(0.5); // Gamma = 1.5
    let noise = NoiseSpec { f_factor: 0.0, seed: 1 };
    let mut state = MbState {
        rho_ee: Array1::from_elem(3, 0.5),
        rho_gg: Array1::from_elem(3, 0.5),
        rho_ge: Array1::from_elem(3, C64::new(0.3, -0.1)),
        e_plus: Array1::from_elem(3, C64::new(0.0, 0.0)),
    };
    integrate_field(&scn, &state.rho_ge.clone(), &mut state.e_plus);
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    for p in 0..scn.grid.n_tau - 1 {
        mb_step(&scn, p, &mut state, &noise, &mut rng).unwrap();
    }
    let expect = C64::new(0.3, -0.1) * (-0.75f64 * 2.0).exp();
    assert_relative_eq!(state.rho_ge[0].re, expect.re, max_relative = 1e-4);
    assert_relative_eq!(state.rho_ge[0].im, expect.im, max_relative = 1e-4);
}

#[test]
fn field_grows_linearly_from_frozen_coherence() {
    // Constant rho_eg along z with kappa = 0: e+(z) = i conj(rho_ge) z.
    let scn = scaled_two_level(4e-6, 2.0, 1.0, 21, 4);
    let c = C64::new(0.2, 0.1);
    let rho_ge = Array1::from_elem(21, c);
    let mut e = Array1::from_elem(21, C64::new(0.0, 0.0));
    integrate_field(&scn, &rho_ge, &mut e);
    for i in [5usize, 10, 20] {
        let z = scn.grid.z(i);
        let expect = C64::i() * c.conj() * z;
        assert_relative_eq!(e[i].re, expect.re, max_relative = 1e-12);
        assert_relative_eq!(e[i].im, expect.im, max_relative = 1e-12);
    }
}

#[test]
fn seed_determinism_and_stream_separation() {
    let scn = scaled_two_level(4e-6, 1.0, 2.0, 6, 41);
    let noise = NoiseSpec { f_factor: noise_factor_scaled(&scn).unwrap(), seed: 99 };
    let a = run_trajectory(&scn, &noise, 3).unwrap();
    let b = run_trajectory(&scn, &noise, 3).unwrap();
    assert!(a
        .e_plus
        .iter()
        .zip(b.e_plus.iter())
        .all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
    let c = run_trajectory(&scn, &noise, 4).unwrap();
    assert!(a.e_plus.iter().zip(c.e_plus.iter()).any(|(x, y)| x != y));
}

#[test]
fn ensemble_reproducible_across_thread_counts() {
    let scn = scaled_two_level(4e-6, 1.0, 2.0, 5, 41);
    let noise = NoiseSpec { f_factor: noise_factor_scaled(&scn).unwrap(), seed: 5 };
    let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let pool4 = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let r1 = pool1.install(|| run_ensemble(&scn, &noise, 37)).unwrap();
    let r4 = pool4.install(|| run_ensemble(&scn, &noise, 37)).unwrap();
    assert!(r1
        .mean_intensity
        .iter()
        .zip(r4.mean_intensity.iter())
        .all(|(x, y)| x.to_bits() == y.to_bits()));
    assert_eq!(r1.peak_times, r4.peak_times);
}

#[test]
fn ensemble_coherence_mean_vanishes() {
    // <rho_ge> -> 0: linear statistics average out (4 sigma test on the
    // final-time coherence at one cell).
    let scn = scaled_two_level(4e-6, 1e-3, 2.0, 3, 81);
    let f = noise_factor_scaled(&scn).unwrap();
    let noise = NoiseSpec { f_factor: f, seed: 11 };
    let n_traj = 400;
    let mut sum = C64::new(0.0, 0.0);
    let mut sum_sq = 0.0;
    for k in 0..n_traj {
        let t = run_trajectory(&scn, &noise, k).unwrap();
        let v = t.rho_ge[(1, scn.grid.n_tau - 1)];
        sum += v;
        sum_sq += v.norm_sqr();
    }
    let mean = sum / n_traj as f64;
    let sigma = (sum_sq / n_traj as f64 / 2.0).sqrt() / (n_traj as f64).sqrt();
    assert!(mean.re.abs() < 4.0 * sigma, "mean {mean} vs sigma {sigma}");
    assert!(mean.im.abs() < 4.0 * sigma);
}

#[test]
fn small_z_intensity_matches_memory_integral() {
    // At vanishing propagation depth the mean intensity is proportional to
    // int_0^tau exp(-Gamma (tau - t)) rho_ee(t) dt. With Gamma = 1 and
    // spontaneous-only occupations this is tau exp(-tau). Checked against
    // direct quadrature of the integral using the simulated occupations.
    let scn = scaled_two_level(4e-6, 1e-3, 4.0, 3, 201);
    let noise = NoiseSpec { f_factor: noise_factor_scaled(&scn).unwrap(), seed: 31 };
    let n_traj = 12_000;
    let res = run_ensemble(&scn, &noise, n_traj).unwrap();
    let n_tau = scn.grid.n_tau;
    let dtau = scn.grid.dtau();
    let cell = 2;

    // quadrature oracle for the memory integral at each grid time
    let mut oracle = vec![0.0f64; n_tau];
    for p in 0..n_tau {
        let tau = scn.grid.tau(p);
        let mut acc = 0.0;
        for t in 0..=p {
            let w = if p == 0 { 0.0 } else if t == 0 || t == p { 0.5 * dtau } else { dtau };
            let tp = scn.grid.tau(t);
            acc += w * (-(tau - tp)).exp() * (-tp).exp();
        }
        oracle[p] = acc;
    }
    // fit the single proportionality constant on the well-resolved part
    let mut num = 0.0;
    let mut den = 0.0;
    for p in 0..n_tau {
        num += res.mean_intensity[(cell, p)] * oracle[p];
        den += oracle[p] * oracle[p];
    }
    let scale = num / den;
    assert!(scale > 0.0);
    let peak = oracle.iter().cloned().fold(0.0f64, f64::max) * scale;
    for p in (0..n_tau).step_by(4) {
        let got = res.mean_intensity[(cell, p)];
        let want = scale * oracle[p];
        if want > 0.15 * peak {
            let sigma_stat = got / (n_traj as f64).sqrt();
            let tol = 0.02 * want + 4.0 * sigma_stat;
            assert!(
                (got - want).abs() < tol,
                "p={p}: got {got:.4e}, oracle {want:.4e}, tol {tol:.2e}"
            );
        }
    }
}

#[test]
fn ensemble_rejects_empty() {
    let scn = scaled_two_level(4e-6, 1.0, 1.0, 3, 8);
    let noise = NoiseSpec { f_factor: 0.0, seed: 0 };
    assert!(run_ensemble(&scn, &noise, 0).is_err());
}
