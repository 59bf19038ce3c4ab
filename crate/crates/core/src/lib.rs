//! Exact and asymptotic r-associated Stirling numbers of the second kind.
//!
//! `S_r(p, q)` counts partitions of a `p`-element set into `q` blocks, each
//! of size at least `r`. This crate computes it exactly (a recurrence plus
//! three independent cross-checks), evaluates the Hennecart, CD and large-q
//! asymptotic formulas in high precision, measures their relative errors over
//! `(p, q)` grids, and runs finite checks of properties of `B_r` and `Q_r`.

pub mod analysis;
pub mod approx;
pub mod bigcomb;
pub mod config;
pub mod error;
pub mod prec;
pub mod saddle;
pub mod specfun;
pub mod verify;

pub use config::Caps;
pub use error::{Error, Result};
