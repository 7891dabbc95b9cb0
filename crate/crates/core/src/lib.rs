#![allow(clippy::needless_range_loop, clippy::len_without_is_empty)]

//! Construction and analysis of translation-invariant and fractal-supported
//! error-correcting codes: F_q arithmetic, Laurent-polynomial code specs,
//! sparse linear algebra, energy barriers, and Glauber-dynamics memory time.

pub mod barrier;
pub mod codes;
pub mod dynamics;
pub mod error;
pub mod fq;
pub mod fractal;
pub mod linalg;
pub mod poly;
pub mod sparse;

pub use codes::{Boundary, CodeInstance, CodeSpec, Sector, TransInvCode};
pub use error::{Error, Result};
pub use fq::{Fe, Field};
pub use poly::{LaurentPoly, Monomial, PolyMatrix};
pub use sparse::{SparseFqMatrix, SparseWord};
