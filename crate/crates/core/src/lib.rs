//! Multivariate Prony reconstruction of exponential sums from lattice samples.
//!
//! The pipeline builds graded Hankel matrices from samples `f(γ)`, extracts an
//! H-basis of the vanishing ideal together with an orthogonal normal-form basis,
//! forms the multiplication tables on that basis and reads the points `e^ω` off a
//! joint eigendecomposition. Coefficients follow from a Vandermonde least-squares
//! solve. [`recover::sparse`] applies the same machinery to fewnomials.

// NaN-aware checks are written as negated comparisons
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assign;
pub mod bench;
pub mod error;
pub mod exec;
pub mod hankel;
pub mod hbasis;
pub mod io;
pub mod linalg;
pub mod mindex;
pub mod recover;
pub mod reduction;
pub mod sampler;
pub mod spectra;

pub use error::{ErrorClass, PronyError, Result, Stage};
pub use exec::Execution;
pub use hbasis::{ConstructionOptions, HilbertProfile, Threshold};
pub use mindex::{CoeffVec, GradedIndexSet, MultiIndex};
pub use num_complex::Complex64;
pub use recover::{prony_solve, PronySolution, SolveOptions};
pub use sampler::{ExpSumModel, InstanceKind, NoiseSpec, SampleGrid};
