//! Fell bundles over finite groupoids: section algebras, reduced norms via
//! regular representations, Hilbert modules over fibre algebras, and the
//! operator-to-section map `j` with numerical checks of its properties.

pub mod algebra;
pub mod bundle;
pub mod error;
pub mod groupoid;
pub mod hilbmod;
pub mod io;
pub mod jmap;
pub mod linalg;
pub mod randgen;
pub mod regrep;
pub mod rng;
pub mod scenarios;
pub mod validation;
pub mod zwindow;

pub use error::{FellError, Result};
