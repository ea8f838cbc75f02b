//! Delivery time-window optimization under stochastic travel times.
//!
//! Given a fixed route of `n` clients with random leg travel times, this
//! crate computes time windows `(t_i, t_i + Δ_i)` minimizing a weighted sum
//! of expected lateness, expected earliness, and a window-width penalty.
//!
//! The main entry points are:
//!
//! - [`arrival::build_arrivals`] — arrival-time distributions for a route,
//!   via exact normal sums, numerical convolution, or a hybrid of the two;
//! - [`wos::solve_schedule`] — per-client static windows with free widths;
//! - [`uwos::solve_uwos`] — static windows sharing one width across clients;
//! - [`dwos::simulate_run`] — dynamic re-solving with threshold-triggered
//!   single window updates during route execution;
//! - [`eval::mc_objective`] — Monte Carlo objective evaluation with
//!   reproducible per-run, per-client random substreams;
//! - [`datafit`] — fitting leg distributions to (distance, time) stop pairs
//!   with a constrained mixture of linear regressions.
//!
//! The crate is `no_std` (with `alloc`); all operations are pure functions
//! of their inputs and all types are immutable after construction, so
//! everything here may be shared and called concurrently.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod arrival;
pub mod datafit;
pub mod dists;
pub mod dwos;
pub mod eval;
pub mod math;
pub mod penalty;
pub mod rng;
pub mod uwos;
pub mod wos;

mod fft;

pub use arrival::{ArrivalDist, ArrivalEngine};
pub use dists::{DiscretePMF, ResidualDist, TravelTimeDist};
pub use penalty::Penalty;
pub use wos::{Schedule, SolveReport, Window};
