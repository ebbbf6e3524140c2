//! Kinematics, dynamics, wheel normal forces, hydraulic actuation and
//! stability-driven control of a wheeled heavy-duty mobile manipulator with
//! actively articulated bogie suspension.
//!
//! Conventions: every 6-vector is `[linear; angular]`; twists and
//! accelerations are body-fixed (local coordinates); wheels are ordered
//! `[FR, FL, RR, RL]` and suspension sides `[R, L]`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod forces;
pub mod hydraulics;
pub mod kinematics;
pub mod model;
pub mod optimizer;
pub mod pipeline;
pub mod sim;
pub mod spatial;
pub mod suspension;
pub mod validate;

pub use error::{Error, Result};
