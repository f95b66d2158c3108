//! Disagreement-based regression over finite function classes, with the
//! matching offline (minimax) and online (optimistic version-space) RL
//! algorithms on tabular MDPs.
//!
//! Everything is exact where it can be: population estimators integrate
//! over the grid, policy values solve linear systems, and min–max problems
//! are solved by enumeration.

#![allow(clippy::needless_range_loop)]

pub mod catalog;
pub mod domain;
pub mod error;
pub mod offline;
pub mod online;
pub mod regression;
pub mod rng;

pub use error::{DbrError, Result};
