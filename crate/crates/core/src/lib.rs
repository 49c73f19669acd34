//! Fiberwise normality of continuous maps between finite topological
//! spaces.
//!
//! The crate models finite (Alexandrov) spaces with bitmask point sets,
//! computes oscillation and f-continuity of exact rational functions, builds
//! consistent families of binary partitions, separating functions and
//! fiberwise Tietze extensions, and decides the normality classes of a
//! continuous map by brute force with checkable certificates.

pub mod census;
pub mod certificate;
pub mod classical;
pub mod cli;
pub mod error;
pub mod format;
pub mod normality;
pub mod oscillation;
pub mod partitions;
pub mod urysohn_tietze;
pub mod set;
pub mod space_core;

pub use error::{Error, Result};
pub use oscillation::{RationalFunction, Q};
pub use set::PointSet;
pub use space_core::{FiberedMap, FiniteSpace};
