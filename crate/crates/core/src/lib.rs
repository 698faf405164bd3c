//! Graded symbol classes, homogeneous-modulo-Schwartz extensions and the model
//! Heisenberg calculus, with grid-based numerical verifiers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod grading;
pub mod heisenberg;
pub mod phg;
pub mod symbol;
