//! Static per-client window optimization (WOS).
//!
//! For each client the two-dimensional problem in `(t, Δ)` decouples from the
//! rest of the route. With a linear penalty the optimum is a pair of
//! quantiles of the arrival distribution; with a strictly convex penalty the
//! first-order conditions reduce to a one-dimensional root-finding problem
//! in `t` with `Δ(t) = g⁻¹((1−ω)F(t))`, which has a unique positive root.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::arrival::ArrivalDist;
use crate::dists::DistError;
use crate::penalty::Penalty;

/// Residual tolerance for the first-order conditions.
pub const FOC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum WosError {
    /// Linear penalty with α > min{ω, 1−ω}: the objective has no interior
    /// stationary point.
    NoStationaryPoint { alpha: f64, omega: f64 },
    /// The convex solver was handed a linear penalty.
    NonConvexPenalty,
    /// The root of the reduced first-order condition could not be
    /// sign-bracketed within the arrival distribution's support.
    NoBracket,
    InvalidOmega(f64),
    Dist(DistError),
    /// Error while solving a specific client of a route.
    AtClient { index: usize, source: Box<WosError> },
}

impl core::fmt::Display for WosError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            WosError::NoStationaryPoint { alpha, omega } => write!(
                f,
                "no stationary point: alpha = {alpha} exceeds min(omega, 1-omega) for omega = {omega}"
            ),
            WosError::NonConvexPenalty => {
                write!(f, "linear penalty supplied to the convex solver")
            }
            WosError::NoBracket => write!(f, "could not bracket the first-order condition root"),
            WosError::InvalidOmega(w) => write!(f, "omega must be in (0,1), got {w}"),
            WosError::Dist(e) => write!(f, "{e}"),
            WosError::AtClient { index, source } => write!(f, "client {index}: {source}"),
        }
    }
}

impl core::error::Error for WosError {}

impl From<DistError> for WosError {
    fn from(e: DistError) -> Self {
        WosError::Dist(e)
    }
}

/// A delivery window `(start, start + width)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Window {
    pub start: f64,
    pub width: f64,
}

impl Window {
    pub fn end(&self) -> f64 {
        self.start + self.width
    }
}

/// Windows for a whole route, plus the start-ordering feasibility flag.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Schedule {
    pub windows: Vec<Window>,
    /// True when window starts are nondecreasing along the route.
    pub feasible: bool,
}

impl Schedule {
    pub fn new(windows: Vec<Window>) -> Self {
        let feasible = windows.windows(2).all(|w| w[1].start >= w[0].start - 1e-12);
        Self { windows, feasible }
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }
}

/// Single-client convex-solver result with solution diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub window: Window,
    /// Absolute values of (FOC1, FOC2) at the solution.
    pub foc_residuals: (f64, f64),
    /// Diagonal-dominance certificate for the Hessian at the solution.
    pub hessian_ok: bool,
}

fn check_omega(omega: f64) -> Result<(), WosError> {
    if omega > 0.0 && omega < 1.0 {
        Ok(())
    } else {
        Err(WosError::InvalidOmega(omega))
    }
}

/// Closed-form window for a linear penalty: quantiles at `α/(1−ω)` and
/// `1 − α/ω`, with a negative start clipped to 0 (the end is kept, so the
/// width grows by the clipped amount).
pub fn solve_client_linear(f: &ArrivalDist, omega: f64, alpha: f64) -> Result<Window, WosError> {
    check_omega(omega)?;
    if alpha > omega.min(1.0 - omega) {
        return Err(WosError::NoStationaryPoint { alpha, omega });
    }
    let start = f.quantile(alpha / (1.0 - omega))?;
    let end = f.quantile(1.0 - alpha / omega)?;
    let start = start.max(0.0);
    Ok(Window { start, width: end - start })
}

/// First-order conditions at `(t, Δ)`; both vanish at an interior optimum.
pub fn foc(f: &ArrivalDist, omega: f64, penalty: &Penalty, t: f64, delta: f64) -> (f64, f64) {
    let tail = f.ccdf(t + delta);
    let foc1 = (1.0 - omega) * f.cdf(t) - omega * tail;
    let foc2 = penalty.derivative(delta) - omega * tail;
    (foc1, foc2)
}

/// Root-finding solver for strictly convex penalties.
///
/// Solves `ω(1−F(t+Δ(t))) = (1−ω)F(t)` with `Δ(t) = g⁻¹((1−ω)F(t))` by
/// bracketed bisection plus a damped Newton polish. If the interior root
/// lies at negative `t`, the start is clipped to 0 and the width solved from
/// the second condition alone.
pub fn solve_client_convex(
    f: &ArrivalDist,
    omega: f64,
    penalty: &Penalty,
) -> Result<SolveReport, WosError> {
    check_omega(omega)?;
    if !penalty.is_strictly_convex() {
        return Err(WosError::NonConvexPenalty);
    }

    let delta_of_t = |t: f64| -> f64 {
        penalty
            .derivative_inverse((1.0 - omega) * f.cdf(t))
            .expect("strictly convex penalty")
    };
    // h(t) = FOC1 with Δ = Δ(t); decreasing from ω to −(1−ω)
    let h = |t: f64| -> f64 {
        let d = delta_of_t(t);
        (1.0 - omega) * f.cdf(t) - omega * f.ccdf(t + d)
    };

    let mut lo = f.quantile(1e-9)?;
    let mut hi = f.quantile(1.0 - 1e-9).or_else(|_| f.quantile(1.0))?;
    let scale = hi.abs().max(1.0);
    if h(lo) > 0.0 || h(hi) < 0.0 {
        return Err(WosError::NoBracket);
    }

    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * scale {
            break;
        }
    }
    let mut t = 0.5 * (lo + hi);

    // damped Newton polish on h
    let eps = 1e-6 * scale;
    for _ in 0..4 {
        let hv = h(t);
        if hv.abs() <= 1e-15 {
            break;
        }
        let dh = (h(t + eps) - h(t - eps)) / (2.0 * eps);
        if !dh.is_finite() || dh.abs() < 1e-300 {
            break;
        }
        let mut step = hv / dh;
        if step.abs() > 0.1 * scale {
            step = 0.1 * scale * step.signum();
        }
        let cand = t - step;
        if h(cand).abs() < hv.abs() {
            t = cand;
        } else {
            break;
        }
    }

    let (t, delta) = if t < 0.0 {
        // boundary solution: t = 0, width from FOC2 alone
        (0.0, solve_width_at_boundary(f, omega, penalty, hi - lo + scale)?)
    } else {
        (t, delta_of_t(t))
    };

    let (r1, r2) = foc(f, omega, penalty, t, delta);
    let hessian_ok = (1.0 - omega) * f.pdf(t) > 0.0 && penalty.second_derivative(delta) > 0.0;
    Ok(SolveReport {
        window: Window { start: t, width: delta },
        foc_residuals: (r1.abs(), r2.abs()),
        hessian_ok,
    })
}

/// Solves `𝒫′(Δ) = ω(1−F(Δ))` for the clipped-start case.
fn solve_width_at_boundary(
    f: &ArrivalDist,
    omega: f64,
    penalty: &Penalty,
    span: f64,
) -> Result<f64, WosError> {
    let g = |d: f64| penalty.derivative(d) - omega * f.ccdf(d);
    let mut lo = 0.0;
    let mut hi = span.max(1.0);
    let mut grow = 0;
    while g(hi) < 0.0 {
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(WosError::NoBracket);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Whole-route assembly: each client solved independently with the solver
/// matching the penalty variant.
pub fn solve_schedule(
    arrivals: &[ArrivalDist],
    omega: f64,
    penalty: &Penalty,
) -> Result<Schedule, WosError> {
    let mut windows = Vec::with_capacity(arrivals.len());
    for (i, f) in arrivals.iter().enumerate() {
        let w = match penalty {
            Penalty::Linear { alpha } => solve_client_linear(f, omega, *alpha),
            Penalty::Power { .. } => solve_client_convex(f, omega, penalty).map(|r| r.window),
        }
        .map_err(|e| WosError::AtClient { index: i, source: Box::new(e) })?;
        windows.push(w);
    }
    Ok(Schedule::new(windows))
}
