//! Define-by-run reverse-mode automatic differentiation.
//!
//! A [`Tape`] owns every value produced during a forward pass. Operations
//! append a node holding the result and, when any input is differentiable, a
//! [`BackwardRule`] that maps the upstream gradient onto the inputs.
//! [`Tape::backward`] walks the nodes once in reverse creation order, which is
//! a valid reverse topological order because inputs always precede outputs.

mod gradcheck;
mod ops;
mod tape;

pub use gradcheck::{grad_check, max_relative_error};
pub use ops::{BinaryKind, ReduceKind, UnaryKind};
pub use tape::{BackwardRule, Gradients, Precision, Tape, Var};
