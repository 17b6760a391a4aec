//! Simulation kernels for collective spontaneous emission in swept-pumped,
//! quasi-1D inverted media.
//!
//! Two solver pipelines share one scenario layer:
//!
//! * [`cf`] evolves level occupations together with the two-point
//!   correlation of atomic coherences, then marches the two-time field
//!   correlation along the medium. Spontaneous and stimulated emission enter
//!   on the same footing, so the pipeline is valid from the first
//!   spontaneous photon through saturation and ringing.
//! * [`mb`] is the stochastic Maxwell-Bloch baseline: semi-classical
//!   envelope equations seeded by a Gaussian noise term on the coherences,
//!   averaged over a deterministically seeded ensemble.
//!
//! All solver code runs in scaled units (spontaneous rate 1, absorption
//! weighted propagation coordinate); [`scenario`] performs the conversions,
//! [`pump`] builds realistic rate tables from pulse and gas parameters, and
//! [`observables`] turns solver output into photon numbers, normalized maps
//! and spectra.

pub mod cf;
pub mod damping;
pub mod error;
pub mod grid;
pub mod mb;
pub mod observables;
pub mod pump;
pub mod scenario;

pub use error::{Result, SimError};
pub use grid::NumericalGrid;
pub use scenario::{
    derive_rates, from_dimensionless, to_dimensionless, DerivedRates, PhysicalScenario, Profile,
    RateField, ScaleMap, ScaledScenario, XiConvention,
};
