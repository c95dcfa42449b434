//! Distributed detection over a reconfigurable holographic surface.
//!
//! A swarm of sensors transmits binary local decisions over a multiple
//! access channel to a surface whose per-element phase profile is
//! programmable; a small cluster of feeds behind the surface observes the
//! superposition. This crate models the geometry and channels of that link,
//! forms fusion statistics at the feed outputs, optimizes the surface phase
//! profile jointly with the fusion weights, and evaluates detection
//! performance by seeded Monte Carlo.

pub mod channel;
pub mod evaluation;
pub mod fusion;
pub mod geometry;
pub mod optimizer;
pub mod rng;
pub mod sensing;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Dense complex matrix used throughout.
pub type CMat = DMatrix<Complex64>;
/// Dense complex column vector used throughout.
pub type CVec = DVector<Complex64>;
