//! Digital self-interference cancellation with a complex-valued Hammerstein
//! model, trained by mixed Newton, a conjugate-gradient approximation of the
//! mixed Newton step, or Adam.

pub mod complexity;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod loss;
pub mod model;
pub mod optim;
pub mod testbench;

pub use error::{Error, Result};
