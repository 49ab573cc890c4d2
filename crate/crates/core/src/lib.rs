//! Least-squares aggregation over orthonormal dictionaries: small-ball
//! constants, rate bounds and seeded Monte-Carlo checks.

pub mod basis;
pub mod domain;
pub mod error;
pub mod model;
pub mod quadrature;

pub use basis::{make_dictionary, Dictionary, DictionaryKind, DictionarySpec};
pub use domain::Domain;
pub use error::{LabError, Result};
pub use model::{sup_ratio, ModelFunction, NormReport};
pub mod erm;
pub mod smallball;
pub mod bounds;
pub mod experiments;
pub mod stats;
