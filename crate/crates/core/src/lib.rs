//! Chart-level computations for projective structures with torsion.

pub mod affine;
pub mod cartan;
pub mod error;
pub mod expr;
pub mod jet_groups;
pub mod linalg;
pub mod projective;
pub mod report;
pub mod sample;
pub mod scalar;
pub mod torus;
pub mod tw;

pub use error::{EvalError, GeometryError, ParseError};
pub use expr::{parse_expression, Expression, Jet2};
pub use scalar::{Field, Mode, Scalar};
