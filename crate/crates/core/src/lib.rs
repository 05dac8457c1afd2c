//! Closed-loop image-space waypoint navigation for small UAVs.
//!
//! A planner points at a pixel and picks a coarse distance label; the engine
//! scales the label to meters, lifts the pixel through a pinhole model into a
//! body-frame displacement, and flies it as single-axis rc velocity commands
//! inside a deterministic kinematic simulator.

// NaN must fail validation, so negated comparisons are deliberate
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod geometry;
pub mod harness;
pub mod planner;
pub mod scaler;
pub mod simworld;
