//! Reaction-diffusion on metric graphs: finite element operators with
//! natural vertex coupling, order-preserving time stepping, sub- and
//! supersolution machinery, and the radial reduction of regular trees.

// Input guards are written `if !(x > 0.0)` so NaN fails them too; the
// suggested `partial_cmp` rewrite loses that.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod fem;
pub mod graph;
pub mod nonlinearity;
pub mod order;
pub mod reduction;
pub mod sparse;
pub mod textio;

pub use error::{Error, Result};
