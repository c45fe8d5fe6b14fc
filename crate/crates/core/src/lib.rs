//! Component-level DAE models of a data-center power-delivery chain, its
//! coupling to grid models, and small-signal / time-domain analysis.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod dcchain;
pub mod equilibrium;
mod error;
pub mod frame;
pub mod fullorder;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod paramstore;
pub mod smallsignal;
pub mod timedomain;
pub mod tuning;
pub mod workload;

pub use error::{Context, Error, Result};
pub use frame::{jmul, rotate, FrameAngle, PerUnitBase, Vec2};
