//! Twisted (N,1) pentagram spirals: canonical lifts, moduli coordinates,
//! the shift map and the spectral invariants of its Lax monodromy.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coords;
pub mod error;
pub mod laxspec;
pub mod lift;
pub mod projgeo;
pub mod shiftmap;
pub mod spiral;
pub mod tol;
pub mod verify;

pub use coords::{derive, extract_coords, Coords, DerivedInv, InvariantTable};
pub use error::{Error, Result};
pub use laxspec::{monodromy_mu, spectral_table, LaurentMat3, LaurentPoly, SpectralTable};
pub use lift::{canonical_lift, LambdaSystem, LiftedSpiral};
pub use projgeo::{HVec, Mat3};
pub use shiftmap::{alpha_beta, geometric_shift, scaling_action, shift_coords, AlphaBeta, CheckReport, ExpSchedule};
pub use spiral::{random_seed, Seed, VertexWindow};
pub use tol::Tolerances;
pub use verify::{run_suite, run_suite_with, SuiteReport};
