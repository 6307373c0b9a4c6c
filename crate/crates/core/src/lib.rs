//! Entanglement concentration by phonon counting in a two-cavity
//! optomechanical system.
//!
//! The stationary output of the two cavities and the mechanical mode is a
//! three-mode state whose optical part, conditioned on a phonon count, is a
//! two-mode Schmidt ladder. This crate evaluates the logarithmic negativity
//! of that optical state before measurement, after a perfect count, after a
//! finite-efficiency count, and after an on/off click, both numerically
//! (partial-transpose eigensolves in a truncated Fock basis) and through the
//! closed forms and perturbative expansions.

mod channels;
mod error;
mod model;
mod negativity;
mod perturbation;
mod record;
mod truncation;

pub use channels::*;
pub use error::{Error, Result};
pub use model::*;
pub use negativity::*;
pub use perturbation::*;
pub use record::*;
pub use truncation::{Cutoff, TruncationPolicy};
