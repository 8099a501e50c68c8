//! Localizable quantum coherence of finite-dimensional states.
//!
//! The crate computes basis-dependent coherence (`c1`, `c2`) of a subsystem
//! `S` of a composite space `H_S ⊗ H_A` under three protocols:
//!
//! * tracing out the ancilla ([`localization::c_trace`]),
//! * non-selectively measuring the ancilla ([`localization::c_nonselective`]),
//! * measuring the ancilla and averaging the post-selected coherence
//!   ([`localization::c_postselected`]).
//!
//! Around that core sit Haar and bubble-state samplers with closed-form
//! averages ([`random`]), exact spin-chain spreading experiments
//! ([`spreading`]), toric-code ground states ([`toric`]) and the `locoh`
//! experiment runner ([`cli`]).

pub mod cli;
pub mod coherence;
mod error;
pub mod localization;
pub mod random;
pub mod spreading;
pub mod tensor;
pub mod toric;

pub use coherence::{Basis, FactorizedBasis, Measure};
pub use error::{Error, Result};
pub use localization::{MeasurementEnsemble, Protocol, ProtocolResult};
pub use tensor::{ComplexMatrix, DensityMatrix, TensorStructure, C64};

/// Library version embedded into every experiment record.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
