//! Stochastic integrals of 1-forms along Brownian paths on Riemannian manifolds,
//! with dyadic approximants, a Chernoff-type semigroup lab and a
//! Feynman–Kac–Itô estimator.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod feynman_kac;
pub mod forms;
pub mod manifold;
pub mod measure;
pub mod integrals;
pub mod paths;
pub mod semigroup;
pub mod stats;

pub use error::{Error, Result};
pub use forms::{OneForm, ScalarField};
pub use manifold::{ManifoldId, ManifoldPoint, Radius, TangentVector};
pub use measure::IntervalMeasure;
pub use paths::{sample_bm, DyadicPath, PathEnsemble};
