//! Linear dimension reduction for regression with a scalar response.
//!
//! Nine reducers share one fit/transform contract ([`FittedReducer`]):
//! classic PCA, the PCA wrappers (Bair, PV, PCPS) and the intrinsic methods
//! (PLS, Barshan, LSPCA, SPPCA, including the γ-balanced extensions).
//! The [`synthetic`], [`bench`] and [`realdata`] modules hold the evaluation
//! protocols used to compare them.

// `!(a > b)` is used on purpose so NaN takes the rejecting branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod data;
pub mod error;
pub mod intrinsic;
pub mod linalg;
pub mod pca;
pub mod realdata;
pub mod reducer;
pub mod regression;
pub mod synthetic;
pub mod wrapper;

pub use data::{CenteringTransform, Dataset};
pub use error::{Result, SdrError};
pub use intrinsic::Gamma;
pub use reducer::{FittedReducer, Method, ReducerState};
pub use regression::RegressionModel;
pub use wrapper::ScoreFunction;

pub use nalgebra::{DMatrix, DVector};
