//! Box-free d-partite hypergraphs from random multilinear forms over finite
//! fields, together with the exponent tables comparing known lower bounds
//! for the box problem.

pub mod bounds;
pub mod cli;
pub mod construct;
pub mod gf;
pub mod tensor;

pub use construct::{Budget, Mode, Params};
pub use gf::{Field, Scalar, Vector};
pub use tensor::MultilinearForm;
