//! Quantum instruments on finite outcome sets over finite-dimensional C*-algebras.
//!
//! An instrument assigns a completely positive map `Φᵢ: ⊕ₛ M_{d_s} → M_k` to each
//! outcome `i`. The crate builds minimal dilations, computes marginals and
//! Radon-Nikodym derivatives, decides extremality and C*-extremality, and emits
//! certificates that can be rechecked with plain matrix arithmetic.
//!
//! Outcomes are 0-based in this API.

pub mod algebra;
pub mod certificates;
pub mod convexity;
pub mod cpmap;
pub mod dilation;
pub mod error;
pub mod examples;
pub mod instrument;
pub mod linalg;
pub mod random;

pub use algebra::{AlgebraElement, AlgebraSpec, MatrixUnit};
pub use cpmap::{CpMap, KrausSet, Stinespring};
pub use dilation::BiDilation;
pub use error::{Error, Result};
pub use instrument::{Instrument, Povm};
pub use linalg::{ComplexMatrix, ComplexVector, Tolerance, C64};
