//! Exact arithmetic over prime fields GF(p), dense linear algebra
//! (row reduction, solve, null space, rank), and star-vector configurations
//! satisfying the spanning conditions (Sd) and (Sk).

mod field;
mod matrix;
mod stars;

pub use field::{FieldError, PrimeField};
pub use matrix::FieldMatrix;
pub use stars::{SpanningCondition, SpanningReport, StarConfig};
