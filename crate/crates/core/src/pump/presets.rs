//! Built-in scenarios.
//!
//! Each builder returns a fully tabulated [`PhysicalScenario`] plus the grid
//! it was tabulated on; feed the pair to
//! [`crate::scenario::to_dimensionless`] and the solvers. Every parameter
//! has a default matching the reference configuration and can be
//! overridden.

use ndarray::Array2;

use super::{
    density_from_pressure, integrate_chain, ChainConfig, FocusModel, PumpPulse, MEGABARN,
};
use crate::error::Result;
use crate::grid::NumericalGrid;
use crate::scenario::{PhysicalScenario, Profile, RateField, XiConvention};

/// Instantly and fully inverted medium with no incoherent rates; the
/// benchmark configuration for solver comparisons.
///
/// Stated in nominal units (`gamma_sp = 1` 1/s, unit linear density) so the
/// scaled grid spans exactly `z_tilde_max` by `tau_tilde_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fig2Params {
    pub delta_o: f64,
    pub z_tilde_max: f64,
    pub tau_tilde_max: f64,
}

impl Default for Fig2Params {
    fn default() -> Self {
        Self { delta_o: 4e-6, z_tilde_max: 150.0, tau_tilde_max: 5.0 }
    }
}

impl Fig2Params {
    pub fn suggested_grid(&self) -> (usize, usize) {
        (400, 800)
    }
}

pub fn fig2_scenario(params: &Fig2Params, n_z: usize, n_tau: usize) -> Result<(PhysicalScenario, NumericalGrid)> {
    let radius = (1.0 / std::f64::consts::PI).sqrt(); // pi R^2 = 1
    let n_v = 1.0;
    let n_lin = n_v * std::f64::consts::PI * radius * radius;
    let beta = 3.0 * params.delta_o * n_lin / (8.0 * std::f64::consts::PI);
    let length = params.z_tilde_max / beta;
    let grid = NumericalGrid::new(n_z, n_tau, length, params.tau_tilde_max)?;
    let scn = PhysicalScenario {
        gamma_sp: 1.0,
        lambda: 1.0,
        delta_o: params.delta_o,
        n_v,
        radius,
        length,
        xi_convention: XiConvention::Unity,
        rate_fields: RateField::zero(&grid),
        initial_rho_ee: Profile::Uniform(1.0),
        initial_rho_gg: Profile::Uniform(0.0),
    };
    Ok((scn, grid))
}

/// Neon gas cell pumped by direct core photoionization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeonParams {
    /// Gas density, 1/m^3.
    pub n_v: f64,
    /// Cell length, m.
    pub length: f64,
    /// Beam radius, m (fixed-focus model).
    pub radius: f64,
    /// Photons per pump pulse.
    pub photon_count: f64,
    /// Pump FWHM, s.
    pub fwhm: f64,
    /// Pump peak arrival in retarded time, s.
    pub pulse_center: f64,
    /// Core photoionization cross section, m^2.
    pub sigma_pump: f64,
    /// Emission wavelength, m.
    pub lambda: f64,
    /// Spontaneous lifetime of the transition, s.
    pub lifetime_sp: f64,
    /// Auger lifetime of the core-excited upper level, s.
    pub auger_lifetime: f64,
    /// Optional lower-level photoionization cross section, m^2; off by
    /// default.
    pub sigma_lower: Option<f64>,
    /// Solid angle; default `2 pi R^2 / L^2`.
    pub delta_o: Option<f64>,
    /// Simulated retarded-time window, s.
    pub tau_max: f64,
    pub xi_convention: XiConvention,
}

impl Default for NeonParams {
    fn default() -> Self {
        Self {
            n_v: 1.6e25, // 1.6e19 cm^-3
            length: 15e-3,
            radius: 2e-6,
            photon_count: 2e12,
            fwhm: 40e-15,
            pulse_center: 60e-15,
            sigma_pump: 0.3 * MEGABARN,
            lambda: 1.46e-9,
            lifetime_sp: 160e-15,
            auger_lifetime: 2.4e-15,
            sigma_lower: None,
            delta_o: None,
            tau_max: 400e-15,
            xi_convention: XiConvention::Unity,
        }
    }
}

impl NeonParams {
    pub fn suggested_grid(&self) -> (usize, usize) {
        (400, 800)
    }

    pub fn resolved_delta_o(&self) -> f64 {
        self.delta_o.unwrap_or(
            2.0 * std::f64::consts::PI * self.radius * self.radius / (self.length * self.length),
        )
    }
}

pub fn ne_scenario(params: &NeonParams, n_z: usize, n_tau: usize) -> Result<(PhysicalScenario, NumericalGrid)> {
    let grid = NumericalGrid::new(n_z, n_tau, params.length, params.tau_max)?;
    let pulse = PumpPulse {
        photon_count: params.photon_count,
        fwhm: params.fwhm,
        center: params.pulse_center,
        focus: FocusModel::FixedRadius(params.radius),
    };
    let substeps = chain_substeps(&grid, params.fwhm, None);
    let cfg = ChainConfig {
        sigma_pump: params.sigma_pump,
        auger_rate: None,
        n_v: params.n_v,
        substeps,
    };
    let chain = integrate_chain(&pulse, &cfg, &grid)?;

    let mut rates = RateField::zero(&grid);
    // direct photoionization pumps the upper level
    rates.r_e = chain.flux_neutral.mapv(|v| params.sigma_pump * v);
    // Auger depletion of the core-excited state, radiative part excluded
    rates.gamma_e = Array2::from_elem((grid.n_z, grid.n_tau), 1.0 / params.auger_lifetime);
    if let Some(sigma_l) = params.sigma_lower {
        rates.gamma_g = chain.flux.mapv(|v| sigma_l * v);
    }

    let scn = PhysicalScenario {
        gamma_sp: 1.0 / params.lifetime_sp,
        lambda: params.lambda,
        delta_o: params.resolved_delta_o(),
        n_v: params.n_v,
        radius: params.radius,
        length: params.length,
        xi_convention: params.xi_convention,
        rate_fields: rates,
        initial_rho_ee: Profile::Uniform(0.0),
        initial_rho_gg: Profile::Uniform(0.0),
    };
    Ok((scn, grid))
}

/// Xenon gas cell pumped through a core-hole Auger cascade, with pump-beam
/// focusing and reabsorption of the emitted field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XenonParams {
    /// Gas pressure, mbar.
    pub pressure_mbar: f64,
    /// Gas temperature, K (ideal-gas density conversion).
    pub temperature: f64,
    /// Cell length, m.
    pub length: f64,
    /// Pump photon energy, eV.
    pub photon_energy_ev: f64,
    /// Pump pulse energy, J.
    pub pulse_energy: f64,
    /// Pump FWHM, s.
    pub fwhm: f64,
    /// Pump peak arrival in retarded time, s.
    pub pulse_center: f64,
    /// Emission wavelength, m.
    pub lambda: f64,
    /// Spontaneous lifetime, s.
    pub lifetime_sp: f64,
    /// Auger lifetime of the core-hole precursor, s.
    pub auger_lifetime: f64,
    /// Auger branching into the upper level.
    pub b_e: f64,
    /// Auger branching into the lower level.
    pub b_g: f64,
    /// Pump absorption cross section, m^2.
    pub sigma_pump: f64,
    /// Ionization cross section depleting both laser levels, m^2.
    pub sigma_ion: f64,
    /// Absorption cross section of the emitted field, m^2 (static).
    pub sigma_abs: f64,
    /// Pump beam waist, m (also the effective medium radius).
    pub waist: f64,
    /// Pump Rayleigh range, m.
    pub rayleigh_range: f64,
    /// Solid angle; default `lambda^2 / waist^2` (diffraction estimate).
    pub delta_o: Option<f64>,
    /// Simulated retarded-time window, s.
    pub tau_max: f64,
    pub xi_convention: XiConvention,
}

impl Default for XenonParams {
    fn default() -> Self {
        Self {
            pressure_mbar: 7.0,
            temperature: 300.0,
            length: 5e-3,
            photon_energy_ev: 73.0,
            pulse_energy: 50e-6,
            fwhm: 80e-15,
            pulse_center: 160e-15,
            lambda: 65e-9,
            lifetime_sp: 1e-9,
            auger_lifetime: 6e-15,
            b_e: 0.021,
            b_g: 0.0075,
            sigma_pump: 5.2 * MEGABARN,
            sigma_ion: 5.2 * MEGABARN,
            sigma_abs: 60.0 * MEGABARN,
            waist: 61e-6,
            rayleigh_range: 2e-3,
            delta_o: None,
            tau_max: 0.8e-9,
            xi_convention: XiConvention::Unity,
        }
    }
}

impl XenonParams {
    pub fn suggested_grid(&self) -> (usize, usize) {
        (160, 3200)
    }

    pub fn n_v(&self) -> f64 {
        density_from_pressure(self.pressure_mbar, self.temperature)
    }

    pub fn resolved_delta_o(&self) -> f64 {
        self.delta_o.unwrap_or(self.lambda * self.lambda / (self.waist * self.waist))
    }
}

pub fn xe_scenario(params: &XenonParams, n_z: usize, n_tau: usize) -> Result<(PhysicalScenario, NumericalGrid)> {
    let grid = NumericalGrid::new(n_z, n_tau, params.length, params.tau_max)?;
    let n_v = params.n_v();
    let pulse = PumpPulse {
        photon_count: PumpPulse::photon_count_from_energy(
            params.pulse_energy,
            params.photon_energy_ev,
        ),
        fwhm: params.fwhm,
        center: params.pulse_center,
        focus: FocusModel::GaussianBeam {
            waist: params.waist,
            rayleigh_range: params.rayleigh_range,
        },
    };
    let gamma_a = 1.0 / params.auger_lifetime;
    let substeps = chain_substeps(&grid, params.fwhm, Some(params.auger_lifetime));
    let cfg = ChainConfig {
        sigma_pump: params.sigma_pump,
        auger_rate: Some(gamma_a),
        n_v,
        substeps,
    };
    let chain = integrate_chain(&pulse, &cfg, &grid)?;

    let mut rates = RateField::zero(&grid);
    rates.r_e = chain.rho_c.mapv(|v| params.b_e * gamma_a * v);
    rates.r_g = chain.rho_c.mapv(|v| params.b_g * gamma_a * v);
    rates.gamma_e = chain.flux.mapv(|v| params.sigma_ion * v);
    rates.gamma_g = rates.gamma_e.clone();
    rates.kappa.fill(params.sigma_abs * n_v);

    let scn = PhysicalScenario {
        gamma_sp: 1.0 / params.lifetime_sp,
        lambda: params.lambda,
        delta_o: params.resolved_delta_o(),
        n_v,
        radius: params.waist,
        length: params.length,
        xi_convention: params.xi_convention,
        rate_fields: rates,
        initial_rho_ee: Profile::Uniform(0.0),
        initial_rho_gg: Profile::Uniform(0.0),
    };
    Ok((scn, grid))
}

/// Substep count resolving the pump profile and any Auger stage on the fine
/// chain grid, capped to keep precomputation cheap.
fn chain_substeps(grid: &NumericalGrid, fwhm: f64, auger_lifetime: Option<f64>) -> usize {
    let mut dt_target = fwhm / 16.0;
    if let Some(a) = auger_lifetime {
        dt_target = dt_target.min(a / 4.0);
    }
    ((grid.dtau() / dt_target).ceil() as usize).clamp(1, 512)
}
