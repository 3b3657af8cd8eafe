//! Variational quantum simulation with shadow-based measurement of the
//! McLachlan linear system `M θ̇ = V`.
//!
//! The crate is a self-contained state-vector toolkit:
//!
//! * [`pauli`]: Pauli strings, products with phases, weighted sums.
//! * [`statevec`]: dense simulator, sampling, seeded random streams.
//! * [`ansatz`]: hardware-efficient circuit and the ancilla states whose
//!   `X⊗P` expectations give `M_{kl}` and `V_k`.
//! * [`measure`]: covering functions and basis builders (classical shadow,
//!   derandomization, LDF grouping, naive).
//! * [`estimator`]: the `ν` estimator and exact references.
//! * [`vqs`]: assembly, pseudo-inverse solve, Euler stepping, infidelity.
//! * [`analysis`]: closed-form variances, Haar surrogates, shot ratios.

pub mod analysis;
pub mod ansatz;
pub mod error;
pub mod estimator;
pub mod hamiltonians;
pub mod measure;
pub mod pauli;
pub mod statevec;
pub mod vqs;

pub use ansatz::{AnsatzSpec, ParamVector};
pub use error::{Error, Result};
pub use estimator::NuEstimate;
pub use measure::{DerandomizationParams, MeasurementPlan};
pub use pauli::{ObservableSum, Pauli, PauliString, PhasedPauli};
pub use statevec::{Axis, RandomSource, StateVector};
pub use vqs::{EvolutionConfig, EvolutionMode, EvolutionTrace, Strategy};
