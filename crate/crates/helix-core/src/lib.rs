//! Numerical laboratory for a family of singularly perturbed multi-well
//! energies whose admissible fields carry mollified point vorticity.
//!
//! The library provides
//! - grids, vector fields, mollifiers and vorticity measures ([`field`]),
//! - the multi-well potential `W`, its primitive `Phi`, and three discrete
//!   energies (total-variation, quadratic, anisotropic) ([`energy`]),
//! - explicit competitor constructions (uniform, branching, vortex array)
//!   together with the three-regime scaling function ([`construct`]),
//! - the merging-ball expansion and annulus/core lower-bound estimators
//!   ([`balls`]),
//! - the discrete J1-J3 spin lattice with spiral ground states, vortex
//!   detection and the discrete-to-continuum map ([`spin`]),
//! - parameter sweeps, log-log fits, inequality reports and CSV/JSON
//!   serialization ([`sweep`]).

// Validation guards use `!(x > 0.0)` so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod balls;
pub mod construct;
pub mod energy;
pub mod error;
pub mod field;
pub mod geom;
pub mod quad;
pub mod spin;
pub mod sweep;

pub use error::{Error, Result};
pub use geom::{Point, Rect};
