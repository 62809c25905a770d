//! Weighted finite automata over the reals.
//!
//! The crate covers linear bisimulation and minimization ([`bisim`]),
//! joint-spectral-radius bounds ([`jsr`]), certified intervals for the
//! discounted bisimulation seminorm and distance ([`metric`]), spectral
//! learning from Hankel blocks ([`learn`]) and unobservable MDPs ([`umdp`]).

pub mod bisim;
pub mod error;
pub mod jsr;
pub mod learn;
pub mod linalg;
pub mod metric;
pub mod random;
pub mod report;
pub mod umdp;
pub mod wfa;

pub use error::{Error, Result};
pub use jsr::JsrBounds;
pub use learn::HankelBlock;
pub use linalg::{Matrix, Vector, DEFAULT_TOL};
pub use metric::{CertifiedInterval, SearchOptions, TailBoundParams};
pub use umdp::Umdp;
pub use wfa::Wfa;
