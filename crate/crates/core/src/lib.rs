//! Process-design models and spectral analysis for NV-center creation in
//! nitrogen-doped CVD diamond.
//!
//! The forward chain runs growth (N/C → P1) → irradiation (fluence →
//! vacancies, NV) → charge partition (NV⁻/NV) → coherence (T₂) →
//! figure of merit. [`model::Model`] bundles the calibrated parameters and
//! [`optimizer`] inverts the chain.

pub mod coherence;
pub mod config;
pub mod conversion;
mod csvio;
pub mod dataset;
pub mod error;
pub mod growth;
pub mod irradiation;
pub mod model;
pub mod numeric;
pub mod optimizer;
pub mod regression;
pub mod report;
pub mod sensitivity;
pub mod spectra;
pub mod state;
pub mod units;

pub use csvio::header_of;
pub use error::{Error, Result};
pub use model::{Model, Prediction};
pub use state::{IrradiationPlan, MaterialState, Stage};

/// Scalar used by the domain models. The numeric kernels in [`numeric`]
/// are generic over [`numeric::Scalar`].
pub type Real = f64;
