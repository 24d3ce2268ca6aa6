//! Term rewriting models, catamorphic evaluation, cartesian dynamical
//! systems and the constructions relating them.

pub mod check;
pub mod correspondence;
pub mod dsl;
pub mod dynamics;
pub mod eval;
pub mod gen;
pub mod linalg;
pub mod number;
pub mod recurrence;
pub mod rewrite;
pub mod term;
