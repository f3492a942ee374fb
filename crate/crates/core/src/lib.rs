//! Bell-violation certification for multipartite assemblages with a single
//! trusted qubit.
//!
//! Given an assemblage `{σ_{b|y}}` and a linear Bell inequality `{β, β_L}`
//! with dichotomic trusted outcomes, [`criterion::evaluate`] returns the
//! maximal value of `β·P` over all trusted-side measurements in closed form,
//! together with the optimal von Neumann measurements. [`oracle`] provides
//! an independent brute-force search used to cross-check it.

// `!(x <= tol)` is used on purpose so that NaN fails checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assemblage;
pub mod criterion;
pub mod error;
pub mod generate;
pub mod inequality;
pub mod oracle;
pub mod qubit;
pub mod random;
pub mod shape;
pub mod steering;
pub mod tol;
pub mod wellbehaved;

pub use assemblage::Assemblage;
pub use criterion::{evaluate, CriterionReport, DichotomicPOVM};
pub use error::{Error, Result};
pub use inequality::{BellInequality, Distribution, MixingKernel};
pub use qubit::{BlochVector, HermitianOp};
pub use shape::ScenarioShape;
