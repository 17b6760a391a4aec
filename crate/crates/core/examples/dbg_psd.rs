use cfsf_core::cf::{FieldCorrelationSlice, HermitianMatrix};
use cfsf_core::grid::NumericalGrid;
use cfsf_core::observables::{spectrum, OmegaGrid, Window};

fn main() {
    let n_tau = 301;
    let grid = NumericalGrid::new(2, n_tau, 1.0, 6.0).unwrap();
    let mut g = HermitianMatrix::zeros(n_tau);
    for (amp, om, gam) in [(1.0f64, 0.0f64, 0.5f64), (0.5, 2.0, 1.0)] {
        for p in 0..n_tau {
            for q in 0..n_tau {
                let tp = grid.tau(p);
                let tq = grid.tau(q);
                let re = amp * (om * (tp - tq)).cos() * (-(tp + tq) * gam / 2.0).exp();
                let im = amp * (om * (tp - tq)).sin() * (-(tp + tq) * gam / 2.0).exp();
                g.re[(p, q)] += re;
                g.im[(p, q)] += im;
            }
        }
    }
    println!("herm err {:e}", g.hermiticity_error());
    let slice = FieldCorrelationSlice { g, z_index: 0, z_tilde: 0.0 };
    let s = spectrum(&slice, &grid, Window::Rectangular, &OmegaGrid::Default).unwrap();
    let max = s.power.iter().cloned().fold(0.0f64, f64::max);
    let min = s.power.iter().cloned().fold(f64::INFINITY, f64::min);
    println!("max {max:.4e} min {min:.4e}");
    for (w, p) in s.omega_offsets.iter().zip(s.power.iter()) {
        if (*w).abs() < 5.0 { println!("{w:+.3} {p:.5e}"); }
    }
}
