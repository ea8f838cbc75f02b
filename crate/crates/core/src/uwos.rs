//! Uniform-width window optimization (UWOS).
//!
//! All clients share one width Δ, coupling the per-client problems through
//! the (n+1)-equation first-order system. Given Δ, each start t_i solves its
//! own first-order condition uniquely; substituting t_i(Δ) into the shared
//! width condition leaves one strictly increasing function of Δ, whose root
//! is found by bisection. (A plain undamped alternation between the Δ-step
//! and the t-steps can 2-cycle when the penalty's curvature is small, so the
//! Δ-update is globalized this way; the subproblems are unchanged.)

use alloc::vec::Vec;

use crate::arrival::ArrivalDist;
use crate::penalty::Penalty;
use crate::wos::{self, Schedule, Window, WosError};

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum UwosError {
    /// The width condition could not be bracketed or driven to tolerance.
    NonConvergence { iterations: usize, max_residual: f64 },
    Wos(WosError),
}

impl core::fmt::Display for UwosError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            UwosError::NonConvergence { iterations, max_residual } => write!(
                f,
                "uniform-width solver did not converge after {iterations} iterations \
                 (max residual {max_residual:e})"
            ),
            UwosError::Wos(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for UwosError {}

impl From<WosError> for UwosError {
    fn from(e: WosError) -> Self {
        UwosError::Wos(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UwosSolution {
    pub starts: Vec<f64>,
    pub width: f64,
    /// Width-condition evaluations performed.
    pub iterations: usize,
    pub max_residual: f64,
}

impl UwosSolution {
    pub fn schedule(&self) -> Schedule {
        Schedule::new(
            self.starts
                .iter()
                .map(|&t| Window { start: t, width: self.width })
                .collect(),
        )
    }
}

/// Largest absolute residual over the n+1 first-order conditions.
/// Boundary coordinates (t_i = 0, or Δ = 0) are held to their KKT
/// inequality instead of the equality.
fn max_residual(
    arrivals: &[ArrivalDist],
    omega: f64,
    penalty: &Penalty,
    starts: &[f64],
    delta: f64,
) -> f64 {
    let n = arrivals.len() as f64;
    let mut worst: f64 = 0.0;
    let mut tail_sum = 0.0;
    for (f, &t) in arrivals.iter().zip(starts) {
        let tail = f.ccdf(t + delta);
        tail_sum += tail;
        let r = (1.0 - omega) * f.cdf(t) - omega * tail;
        if !(t == 0.0 && r > 0.0) {
            worst = worst.max(r.abs());
        }
    }
    // shared-width condition: n 𝒫′(Δ) = ω Σ (1−F_i(t_i+Δ))
    let width_res = n * penalty.derivative(delta) - omega * tail_sum;
    if !(delta == 0.0 && width_res > 0.0) {
        worst = worst.max(width_res.abs());
    }
    worst
}

/// Solves the t_i-step: `(1−ω)F_i(t) = ω(1−F_i(t+Δ))` by bisection,
/// clipping negative solutions to 0.
fn solve_start(f: &ArrivalDist, omega: f64, delta: f64) -> Result<f64, WosError> {
    let g = |t: f64| (1.0 - omega) * f.cdf(t) - omega * f.ccdf(t + delta);
    let mut lo = f.quantile(1e-9)?;
    let mut hi = f.quantile(1.0 - 1e-9).or_else(|_| f.quantile(1.0))?;
    if g(lo) > 0.0 {
        // already positive at the support bottom: boundary solution
        return Ok(lo.max(0.0));
    }
    if g(hi) < 0.0 {
        return Err(WosError::NoBracket);
    }
    let scale = hi.abs().max(1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * scale {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).max(0.0))
}

/// Solves the coupled uniform-width system.
pub fn solve_uwos(
    arrivals: &[ArrivalDist],
    omega: f64,
    penalty: &Penalty,
    tol: f64,
) -> Result<UwosSolution, UwosError> {
    if let Penalty::Linear { alpha } = *penalty {
        if alpha > omega.min(1.0 - omega) {
            return Err(UwosError::Wos(WosError::NoStationaryPoint { alpha, omega }));
        }
    }
    let n = arrivals.len() as f64;
    let mut iterations = 0usize;
    let mut starts: Vec<f64> = alloc::vec![0.0; arrivals.len()];

    // ψ(Δ) = n 𝒫′(Δ) − ω Σ (1−F_i(t_i(Δ)+Δ)), strictly increasing in Δ
    // because every t_i(Δ) is decreasing in Δ
    let mut psi = |d: f64, starts: &mut Vec<f64>| -> Result<f64, WosError> {
        iterations += 1;
        let mut tail_sum = 0.0;
        for (f, t) in arrivals.iter().zip(starts.iter_mut()) {
            *t = solve_start(f, omega, d)?;
            tail_sum += f.ccdf(*t + d);
        }
        Ok(n * penalty.derivative(d) - omega * tail_sum)
    };

    if psi(0.0, &mut starts)? >= 0.0 {
        // width penalty already dominates at Δ = 0: boundary solution
        let res = max_residual(arrivals, omega, penalty, &starts, 0.0);
        return Ok(UwosSolution { starts, width: 0.0, iterations, max_residual: res });
    }

    // warm bracket upper bound from the per-client solutions
    let mut hi_guess: f64 = 1.0;
    for f in arrivals {
        let w = match *penalty {
            Penalty::Linear { alpha } => wos::solve_client_linear(f, omega, alpha)?,
            Penalty::Power { .. } => wos::solve_client_convex(f, omega, penalty)?.window,
        };
        hi_guess = hi_guess.max(w.width);
    }

    let mut lo = 0.0;
    let mut hi = hi_guess;
    let mut grow = 0;
    while psi(hi, &mut starts)? < 0.0 {
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(UwosError::NonConvergence {
                iterations,
                max_residual: max_residual(arrivals, omega, penalty, &starts, hi),
            });
        }
    }
    let scale = hi.max(1.0);
    let mut delta = hi;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if psi(mid, &mut starts)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        delta = 0.5 * (lo + hi);
        if hi - lo <= 1e-15 * scale {
            break;
        }
    }
    // final t-steps at the returned width
    let _ = psi(delta, &mut starts)?;
    let res = max_residual(arrivals, omega, penalty, &starts, delta);
    if res > tol {
        return Err(UwosError::NonConvergence { iterations, max_residual: res });
    }
    Ok(UwosSolution { starts, width: delta, iterations, max_residual: res })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrival::{build_arrivals, ArrivalEngine};
    use crate::dists::TravelTimeDist;

    fn route(n: usize) -> Vec<ArrivalDist> {
        let legs: Vec<_> = (0..n)
            .map(|_| TravelTimeDist::normal(10.0, 2.5).unwrap())
            .collect();
        build_arrivals(&legs, &ArrivalEngine::ExactNormal).unwrap()
    }

    #[test]
    fn single_client_matches_wos_linear() {
        let arr = route(1);
        let sol = solve_uwos(&arr, 0.5, &Penalty::linear(0.1).unwrap(), DEFAULT_TOL).unwrap();
        let w = wos::solve_client_linear(&arr[0], 0.5, 0.1).unwrap();
        assert!((sol.starts[0] - w.start).abs() < 1e-8);
        assert!((sol.width - w.width).abs() < 1e-8);
    }

    #[test]
    fn single_client_matches_wos_convex() {
        let arr = route(1);
        let p = Penalty::power(0.1, 1.5).unwrap();
        let sol = solve_uwos(&arr, 0.25, &p, DEFAULT_TOL).unwrap();
        let w = wos::solve_client_convex(&arr[0], 0.25, &p).unwrap().window;
        assert!((sol.starts[0] - w.start).abs() < 1e-8);
        assert!((sol.width - w.width).abs() < 1e-8);
    }

    #[test]
    fn width_sandwich() {
        let arr = route(25);
        let p = Penalty::power(0.1, 1.5).unwrap();
        let sol = solve_uwos(&arr, 0.25, &p, DEFAULT_TOL).unwrap();
        let first = wos::solve_client_convex(&arr[0], 0.25, &p).unwrap().window.width;
        let last = wos::solve_client_convex(&arr[24], 0.25, &p).unwrap().window.width;
        assert!(first <= sol.width + 1e-9, "{first} <= {}", sol.width);
        assert!(sol.width <= last + 1e-9, "{} <= {last}", sol.width);
        assert!(sol.max_residual <= DEFAULT_TOL);
    }

    #[test]
    fn linear_identity() {
        let arr = route(10);
        let (omega, alpha) = (0.4, 0.1);
        let sol = solve_uwos(&arr, omega, &Penalty::linear(alpha).unwrap(), DEFAULT_TOL).unwrap();
        let sum: f64 = arr.iter().zip(&sol.starts).map(|(f, &t)| f.cdf(t)).sum();
        let expect = 10.0 * alpha / (1.0 - omega);
        assert!((sum - expect).abs() < 1e-8, "{sum} vs {expect}");
    }

    #[test]
    fn starts_increasing_with_sane_gaps() {
        let arr = route(15);
        let sol = solve_uwos(&arr, 0.5, &Penalty::power(0.1, 1.3).unwrap(), DEFAULT_TOL).unwrap();
        for w in sol.starts.windows(2) {
            assert!(w[1] > w[0]);
        }
        // interior gaps close to the leg mean
        for w in sol.starts[4..12].windows(2) {
            let gap = w[1] - w[0];
            assert!((gap - 10.0).abs() < 2.0, "gap {gap}");
        }
    }

    #[test]
    fn existence_condition() {
        let arr = route(5);
        assert!(matches!(
            solve_uwos(&arr, 0.3, &Penalty::linear(0.4).unwrap(), DEFAULT_TOL),
            Err(UwosError::Wos(WosError::NoStationaryPoint { .. }))
        ));
    }
}
