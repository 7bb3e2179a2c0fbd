//! Pseudo-spectral solver for the fractional-filter LES models of incompressible
//! Navier-Stokes and MHD on the periodic 3-torus.
//!
//! State lives in Fourier space ([`SpectralField`]); quadratic terms are evaluated
//! pseudo-spectrally with 2/3-rule dealiasing, pressure is eliminated by Leray
//! projection, and time stepping uses an integrating-factor RK4 that treats the
//! diffusive terms exactly. The filter `(I + alpha^{2 theta} (-Laplacian)^theta)^{-1}`
//! is a diagonal Fourier multiplier ([`filter`]).

pub mod budget;
pub mod diagnostics;
mod error;
pub mod filter;
mod flux;
pub mod initial;
mod integrator;
pub mod mhd;
pub mod nse;
pub mod spectral;

pub use budget::{BudgetSample, BudgetTracker, EnergyBudget};
pub use error::{Error, Result};
pub use filter::FilterParams;
pub use mhd::{MhdConfig, MhdSolver, MhdState};
pub use nse::{FlowState, NseConfig, NseSolver};
pub use spectral::{make_grid, FieldKind, SobolevIndex, SpectralField, TorusGrid};
