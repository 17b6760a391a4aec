//! Physical run descriptions and their reduction to solver units.
//!
//! Everything downstream of [`to_dimensionless`] works in scaled variables:
//! time is measured in units of the spontaneous lifetime (`gamma_sp == 1`)
//! and the propagation coordinate is `z_tilde = (3 delta_o / 8 pi) * n * z`
//! with `n` the linear atom density. In these units the solution shape is
//! controlled by the solid angle `delta_o` alone, which is what makes the
//! scaled solvers directly comparable across physical systems.

use ndarray::{Array1, Array2};

use crate::error::{Result, SimError};
use crate::grid::NumericalGrid;

/// How the order-unity 1D-geometry factor `xi` is resolved when converting
/// model intensity into photon counts (and when scaling the stochastic
/// coherence noise of the Maxwell-Bloch baseline).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum XiConvention {
    /// Take `xi = 1`, the diffraction-sized-mode estimate.
    #[default]
    Unity,
    /// Take `xi = delta_o * pi R^2 / (4 lambda^2)` from the cylinder geometry.
    Geometric,
}

/// Initial-occupation profile along `z`.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Uniform(f64),
    Tabulated(Vec<f64>),
}

impl Profile {
    /// Tabulate an arbitrary `f(z)` onto the grid.
    pub fn from_fn(grid: &NumericalGrid, f: impl Fn(f64) -> f64) -> Self {
        Profile::Tabulated((0..grid.n_z).map(|i| f(grid.z(i))).collect())
    }

    pub fn sample(&self, grid: &NumericalGrid) -> Result<Array1<f64>> {
        match self {
            Profile::Uniform(v) => Ok(Array1::from_elem(grid.n_z, *v)),
            Profile::Tabulated(t) => {
                if t.len() != grid.n_z {
                    return Err(SimError::GridMismatch(format!(
                        "profile has {} points, grid has {}",
                        t.len(),
                        grid.n_z
                    )));
                }
                Ok(Array1::from_vec(t.clone()))
            }
        }
    }
}

/// Incoherent rates tabulated on the `(z, tau)` grid, in 1/s, plus the field
/// absorption coefficient in 1/m.
///
/// Shapes are `(n_z, n_tau)` for the pumping/depletion/decoherence tables and
/// `n_z` for `kappa`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateField {
    /// Pumping rate into the upper level.
    pub r_e: Array2<f64>,
    /// Pumping rate into the lower level.
    pub r_g: Array2<f64>,
    /// Depletion rate of the upper level (radiative decay excluded).
    pub gamma_e: Array2<f64>,
    /// Depletion rate of the lower level.
    pub gamma_g: Array2<f64>,
    /// Pure decoherence rate.
    pub q: Array2<f64>,
    /// Non-radiative upper-to-lower rate, constant over the grid.
    pub gamma_n: f64,
    /// Absorption coefficient of the emitted field.
    pub kappa: Array1<f64>,
}

impl RateField {
    /// All-zero rates on the given grid (pure two-level medium).
    pub fn zero(grid: &NumericalGrid) -> Self {
        let t = Array2::zeros((grid.n_z, grid.n_tau));
        Self {
            r_e: t.clone(),
            r_g: t.clone(),
            gamma_e: t.clone(),
            gamma_g: t.clone(),
            q: t,
            gamma_n: 0.0,
            kappa: Array1::zeros(grid.n_z),
        }
    }

    pub fn validate(&self, grid: &NumericalGrid) -> Result<()> {
        let shape = (grid.n_z, grid.n_tau);
        for (name, a) in [
            ("r_e", &self.r_e),
            ("r_g", &self.r_g),
            ("gamma_e", &self.gamma_e),
            ("gamma_g", &self.gamma_g),
            ("q", &self.q),
        ] {
            if a.dim() != shape {
                return Err(SimError::GridMismatch(format!(
                    "{name} has shape {:?}, expected {shape:?}",
                    a.dim()
                )));
            }
            if a.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(SimError::InvalidRateField(format!(
                    "{name} contains a negative or non-finite entry"
                )));
            }
        }
        if self.kappa.len() != grid.n_z {
            return Err(SimError::GridMismatch("kappa length != n_z".into()));
        }
        if self.kappa.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(SimError::InvalidRateField("kappa negative".into()));
        }
        if !self.gamma_n.is_finite() || self.gamma_n < 0.0 {
            return Err(SimError::InvalidRateField("gamma_n negative".into()));
        }
        Ok(())
    }
}

/// Total coherence decay `Gamma` and excited-state decay `Gamma_ee` on the
/// grid, both in the units of the input rates.
#[derive(Debug, Clone)]
pub struct DerivedRates {
    pub gamma_total: Array2<f64>,
    pub gamma_ee: Array2<f64>,
}

/// Pointwise decay rates:
/// `Gamma = gamma_sp + gamma_n + q + gamma_e + gamma_g` and
/// `Gamma_ee = gamma_sp + gamma_e + gamma_n`.
pub fn derive_rates(rates: &RateField, gamma_sp: f64, grid: &NumericalGrid) -> Result<DerivedRates> {
    rates.validate(grid)?;
    if !(gamma_sp > 0.0) {
        return Err(SimError::InvalidScenario("gamma_sp must be positive".into()));
    }
    let gamma_ee = rates.gamma_e.mapv(|ge| gamma_sp + rates.gamma_n + ge);
    let mut gamma_total = gamma_ee.clone();
    gamma_total += &rates.q;
    gamma_total += &rates.gamma_g;
    Ok(DerivedRates { gamma_total, gamma_ee })
}

/// A complete physical run description in SI units.
#[derive(Debug, Clone)]
pub struct PhysicalScenario {
    /// Spontaneous emission rate of the lasing transition, 1/s.
    pub gamma_sp: f64,
    /// Emission wavelength, m.
    pub lambda: f64,
    /// Effective solid angle of the amplified mode bundle, sr.
    pub delta_o: f64,
    /// Volume density of emitters, 1/m^3.
    pub n_v: f64,
    /// Radius of the excited cylinder, m.
    pub radius: f64,
    /// Length of the medium, m.
    pub length: f64,
    pub xi_convention: XiConvention,
    pub rate_fields: RateField,
    pub initial_rho_ee: Profile,
    pub initial_rho_gg: Profile,
}

impl PhysicalScenario {
    /// Linear density `n = n_v * pi R^2`, 1/m.
    pub fn linear_density(&self) -> f64 {
        self.n_v * std::f64::consts::PI * self.radius * self.radius
    }

    /// Numeric value of the geometry factor under the scenario convention.
    pub fn xi(&self) -> f64 {
        match self.xi_convention {
            XiConvention::Unity => 1.0,
            XiConvention::Geometric => {
                self.delta_o * std::f64::consts::PI * self.radius * self.radius
                    / (4.0 * self.lambda * self.lambda)
            }
        }
    }

    pub fn validate(&self, grid: &NumericalGrid) -> Result<()> {
        if !(self.gamma_sp > 0.0) {
            return Err(SimError::InvalidScenario("gamma_sp must be > 0".into()));
        }
        if !(self.lambda > 0.0) {
            return Err(SimError::InvalidScenario("lambda must be > 0".into()));
        }
        if !(self.delta_o > 0.0 && self.delta_o < 4.0 * std::f64::consts::PI) {
            return Err(SimError::InvalidScenario(
                "delta_o must lie in (0, 4 pi)".into(),
            ));
        }
        if !(self.n_v > 0.0) || !(self.radius > 0.0) || !(self.length > 0.0) {
            return Err(SimError::InvalidScenario(
                "densities and geometry must be positive".into(),
            ));
        }
        self.rate_fields.validate(grid)?;
        let ee = self.initial_rho_ee.sample(grid)?;
        let gg = self.initial_rho_gg.sample(grid)?;
        for (e, g) in ee.iter().zip(gg.iter()) {
            if *e < 0.0 || *g < 0.0 || *e > 1.0 || *g > 1.0 || e + g > 1.0 + 1e-9 {
                return Err(SimError::InvalidScenario(
                    "initial occupations must lie in [0,1] with sum <= 1".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Conversion factors between SI and solver units, kept for output mapping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleMap {
    /// Spontaneous rate, 1/s: `tau_tilde = gamma_sp * tau`.
    pub gamma_sp: f64,
    /// `z_tilde = beta * z` with `beta = 3 delta_o n / (8 pi)`, 1/m.
    pub beta: f64,
    pub lambda: f64,
    pub radius: f64,
    pub delta_o: f64,
    pub n_v: f64,
    pub xi_convention: XiConvention,
}

impl ScaleMap {
    /// Model intensity unit back to photons / (sr m^2 s):
    /// `I_SI = I_scaled * gamma_sp / (4 lambda^2)`.
    pub fn intensity_si(&self, i_scaled: f64) -> f64 {
        i_scaled * self.gamma_sp / (4.0 * self.lambda * self.lambda)
    }

    pub fn z_si(&self, z_tilde: f64) -> f64 {
        z_tilde / self.beta
    }

    pub fn tau_si(&self, tau_tilde: f64) -> f64 {
        tau_tilde / self.gamma_sp
    }
}

/// Scenario in solver units.
///
/// All rate tables are divided by `gamma_sp`, `kappa` is per unit `z_tilde`,
/// and the grid extents are `z_tilde_max`, `tau_tilde_max`. The spontaneous
/// rate never appears downstream; `delta_o` and `xi` are the only physics
/// parameters the solvers see.
#[derive(Debug, Clone)]
pub struct ScaledScenario {
    pub delta_o: f64,
    /// Resolved numeric geometry factor.
    pub xi: f64,
    pub rates: RateField,
    pub rho_ee0: Array1<f64>,
    pub rho_gg0: Array1<f64>,
    pub grid: NumericalGrid,
    pub map: ScaleMap,
}

impl ScaledScenario {
    /// Decay-rate tables in scaled units.
    pub fn derived(&self) -> Result<DerivedRates> {
        derive_rates(&self.rates, 1.0, &self.grid)
    }
}

/// Rescale a physical scenario and grid to solver units.
///
/// The returned scenario has `gamma_sp = 1` and `z` mapped to
/// `z_tilde = (3 delta_o / 8 pi) n z`; the inverse map is recorded in
/// [`ScaledScenario::map`]. Total on valid inputs.
pub fn to_dimensionless(scn: &PhysicalScenario, grid: &NumericalGrid) -> Result<ScaledScenario> {
    scn.validate(grid)?;
    let beta = 3.0 * scn.delta_o * scn.linear_density() / (8.0 * std::f64::consts::PI);
    let g = scn.gamma_sp;
    let scaled_grid = NumericalGrid::new(
        grid.n_z,
        grid.n_tau,
        beta * grid.z_max,
        g * grid.tau_max,
    )?;
    let rates = RateField {
        r_e: scn.rate_fields.r_e.mapv(|v| v / g),
        r_g: scn.rate_fields.r_g.mapv(|v| v / g),
        gamma_e: scn.rate_fields.gamma_e.mapv(|v| v / g),
        gamma_g: scn.rate_fields.gamma_g.mapv(|v| v / g),
        q: scn.rate_fields.q.mapv(|v| v / g),
        gamma_n: scn.rate_fields.gamma_n / g,
        kappa: scn.rate_fields.kappa.mapv(|v| v / beta),
    };
    Ok(ScaledScenario {
        delta_o: scn.delta_o,
        xi: scn.xi(),
        rates,
        rho_ee0: scn.initial_rho_ee.sample(grid)?,
        rho_gg0: scn.initial_rho_gg.sample(grid)?,
        grid: scaled_grid,
        map: ScaleMap {
            gamma_sp: g,
            beta,
            lambda: scn.lambda,
            radius: scn.radius,
            delta_o: scn.delta_o,
            n_v: scn.n_v,
            xi_convention: scn.xi_convention,
        },
    })
}

/// Invert [`to_dimensionless`], reconstructing the physical scenario and grid.
pub fn from_dimensionless(scaled: &ScaledScenario) -> (PhysicalScenario, NumericalGrid) {
    let m = &scaled.map;
    let g = m.gamma_sp;
    let grid = NumericalGrid {
        n_z: scaled.grid.n_z,
        n_tau: scaled.grid.n_tau,
        z_max: scaled.grid.z_max / m.beta,
        tau_max: scaled.grid.tau_max / g,
    };
    let length = grid.z_max;
    let rates = RateField {
        r_e: scaled.rates.r_e.mapv(|v| v * g),
        r_g: scaled.rates.r_g.mapv(|v| v * g),
        gamma_e: scaled.rates.gamma_e.mapv(|v| v * g),
        gamma_g: scaled.rates.gamma_g.mapv(|v| v * g),
        q: scaled.rates.q.mapv(|v| v * g),
        gamma_n: scaled.rates.gamma_n * g,
        kappa: scaled.rates.kappa.mapv(|v| v * m.beta),
    };
    let scn = PhysicalScenario {
        gamma_sp: g,
        lambda: m.lambda,
        delta_o: m.delta_o,
        n_v: m.n_v,
        radius: m.radius,
        length,
        xi_convention: m.xi_convention,
        rate_fields: rates,
        initial_rho_ee: Profile::Tabulated(scaled.rho_ee0.to_vec()),
        initial_rho_gg: Profile::Tabulated(scaled.rho_gg0.to_vec()),
    };
    (scn, grid)
}
