//! Finite-section analysis of Schauder bases in Hilbert space.
//!
//! Matrices stand for operators under a fixed orthonormal basis; a square
//! invertible section `F` and its inverse `G*` form a [`basis::BasisPair`].
//! The crate computes basis and unconditional-basis constants through the
//! natural projections `F·P_Δ·G*`, builds the Haar-type blocks whose
//! unconditional constants grow without bound, and assembles from a diagonal
//! operator such as `diag(1, 1/2, 1/3, …)` an explicit orthonormal basis
//! whose image is a conditional basis.

pub mod basis;
pub mod cli;
pub mod error;
pub mod kernel;
pub mod matrix;
pub mod olevskii;
pub mod report;
pub mod riesz;
pub mod selection;
pub mod spectrum;

pub use basis::{BasisPair, ConstantEstimate, EstimateMode, SearchBudget};
pub use error::{Error, Result};
pub use kernel::{ConditionNumber, Permutation, PolarFactors};
pub use matrix::DenseMatrix;
pub use olevskii::{ConditionalModel, OlevskiiPlan};
pub use spectrum::SpectrumSequence;
