#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod dusvd;
pub mod error;
pub mod general;
pub mod io;
pub mod krein;
pub mod linalg;
pub mod passive;
pub mod spectral;
pub mod static_decomp;
pub mod tf;

pub use error::{LqssError, Result};
