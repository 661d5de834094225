//! Power allocation over parallel channels: the single-user water-filling
//! optimum and the unique Nash equilibrium of the symmetric water-filling
//! (Gaussian interference) game, both computed with a finite number of
//! arithmetic operations.
//!
//! Alongside the direct solvers the crate carries the tools used to check
//! them: a bisection water-filling oracle, iterative water-filling,
//! KKT certification, and a centralized sum-rate optimizer for
//! price-of-anarchy comparisons.

// NaN-rejecting comparisons are written as negations on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod centralized;
pub mod cli;
pub mod error;
pub mod game_ne;
pub mod iwfa;
pub mod model;
pub mod single_wf;
pub mod verify;

pub use error::{Error, Result};
pub use game_ne::{solve_ne, EquilibriumSolution};
pub use model::{ChannelProfile, GameSpec, Strategy, StrategyProfile};
