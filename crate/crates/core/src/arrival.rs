//! Arrival-time distributions for a route.
//!
//! The arrival time at client `i` is the running sum `S_i = Σ_{j≤i} B_j` of
//! leg travel times. Three interchangeable engines build the list
//! `F_1, ..., F_n`:
//!
//! - `ExactNormal`: all legs Normal, so each `S_i` is Normal with summed
//!   moments;
//! - `Convolution`: discretize every leg and convolve the PMFs sequentially;
//! - `Hybrid`: convolve up to client `switch_index - 1`, then replace later
//!   arrivals by moment-matched normals (the running mean/variance taken
//!   from the convolved PMF, not from family-level moments).

use alloc::vec::Vec;

use crate::dists::{self, DiscretePMF, DistError, Family, TravelTimeDist};
use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub enum ArrivalError {
    /// ExactNormal requested for a route with a non-Normal leg.
    EngineMismatch { leg: usize, family: Family },
    EmptyRoute,
    InvalidEngine(&'static str),
    Dist(DistError),
}

impl core::fmt::Display for ArrivalError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ArrivalError::EngineMismatch { leg, family } => write!(
                f,
                "exact-normal engine requires Normal legs, leg {leg} is {family:?}"
            ),
            ArrivalError::EmptyRoute => write!(f, "route has no legs"),
            ArrivalError::InvalidEngine(msg) => write!(f, "invalid engine: {msg}"),
            ArrivalError::Dist(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for ArrivalError {}

impl From<DistError> for ArrivalError {
    fn from(e: DistError) -> Self {
        ArrivalError::Dist(e)
    }
}

/// How to construct the arrival distributions.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ArrivalEngine {
    ExactNormal,
    Convolution {
        step: f64,
        half_width_sigmas: f64,
        /// When set, each convolved PMF is re-binned down to at most this
        /// many bins (linear mass interpolation). Off by default.
        max_bins: Option<usize>,
    },
    Hybrid {
        /// 1-based client index at which the normal proxy takes over.
        switch_index: usize,
        step: f64,
        half_width_sigmas: f64,
        max_bins: Option<usize>,
    },
}

impl ArrivalEngine {
    pub fn convolution(step: f64, half_width_sigmas: f64) -> Self {
        ArrivalEngine::Convolution { step, half_width_sigmas, max_bins: None }
    }

    pub fn hybrid(switch_index: usize, step: f64, half_width_sigmas: f64) -> Self {
        ArrivalEngine::Hybrid { switch_index, step, half_width_sigmas, max_bins: None }
    }

    fn validate(&self) -> Result<(), ArrivalError> {
        match *self {
            ArrivalEngine::ExactNormal => Ok(()),
            ArrivalEngine::Convolution { step, half_width_sigmas, .. } => {
                if !(step > 0.0) {
                    return Err(ArrivalError::InvalidEngine("step must be > 0"));
                }
                if !(half_width_sigmas > 0.0) {
                    return Err(ArrivalError::InvalidEngine("half_width_sigmas must be > 0"));
                }
                Ok(())
            }
            ArrivalEngine::Hybrid { switch_index, step, half_width_sigmas, .. } => {
                if switch_index < 1 {
                    return Err(ArrivalError::InvalidEngine("switch_index must be >= 1"));
                }
                if !(step > 0.0) {
                    return Err(ArrivalError::InvalidEngine("step must be > 0"));
                }
                if !(half_width_sigmas > 0.0) {
                    return Err(ArrivalError::InvalidEngine("half_width_sigmas must be > 0"));
                }
                Ok(())
            }
        }
    }
}

/// Distribution of one client's arrival time `S_i`.
#[derive(Debug, Clone, PartialEq)]
pub enum ArrivalDist {
    ParamNormal { mean: f64, sd: f64 },
    Grid(DiscretePMF),
}

impl ArrivalDist {
    pub fn mean(&self) -> f64 {
        match self {
            ArrivalDist::ParamNormal { mean, .. } => *mean,
            ArrivalDist::Grid(pmf) => pmf.mean(),
        }
    }

    pub fn sd(&self) -> f64 {
        match self {
            ArrivalDist::ParamNormal { sd, .. } => *sd,
            ArrivalDist::Grid(pmf) => pmf.sd(),
        }
    }

    pub fn variance(&self) -> f64 {
        let s = self.sd();
        s * s
    }

    pub fn cdf(&self, t: f64) -> f64 {
        match self {
            ArrivalDist::ParamNormal { mean, sd } => math::norm_cdf((t - mean) / sd),
            ArrivalDist::Grid(pmf) => grid_cdf(pmf, t),
        }
    }

    pub fn ccdf(&self, t: f64) -> f64 {
        match self {
            ArrivalDist::ParamNormal { mean, sd } => math::norm_ccdf((t - mean) / sd),
            ArrivalDist::Grid(pmf) => 1.0 - grid_cdf(pmf, t),
        }
    }

    /// Generalized inverse CDF; p in (0,1) for ParamNormal, (0,1] for Grid.
    pub fn quantile(&self, p: f64) -> Result<f64, DistError> {
        match self {
            ArrivalDist::ParamNormal { mean, sd } => {
                if !(p > 0.0 && p < 1.0) {
                    return Err(DistError::Domain("quantile needs p in (0,1)"));
                }
                Ok(mean + sd * math::norm_quantile(p))
            }
            ArrivalDist::Grid(pmf) => grid_quantile(pmf, p),
        }
    }

    /// Density: exact for ParamNormal; for grids, the piecewise-uniform
    /// density induced by spreading each atom over its bin.
    pub fn pdf(&self, t: f64) -> f64 {
        match self {
            ArrivalDist::ParamNormal { mean, sd } => math::norm_pdf((t - mean) / sd) / sd,
            ArrivalDist::Grid(pmf) => {
                let s = pmf.step();
                let pos = (t - (pmf.origin() - 0.5 * s)) / s;
                if pos < 0.0 {
                    return 0.0;
                }
                match pmf.weights().get(pos as usize) {
                    Some(w) => w / s,
                    None => 0.0,
                }
            }
        }
    }
}

/// Continuous CDF of a grid arrival: each atom's mass is spread uniformly
/// over its bin `[x_k − step/2, x_k + step/2]`, making the CDF piecewise
/// linear so root-finding solvers can drive first-order residuals to
/// tolerance instead of stalling at the bin mass.
fn grid_cdf(pmf: &DiscretePMF, t: f64) -> f64 {
    let s = pmf.step();
    let pos = (t - (pmf.origin() - 0.5 * s)) / s;
    if pos <= 0.0 {
        return 0.0;
    }
    let w = pmf.weights();
    let k = pos as usize;
    if k >= w.len() {
        return 1.0;
    }
    let below: f64 = w[..k].iter().sum();
    below + w[k] * (pos - k as f64)
}

/// Generalized inverse of [`grid_cdf`].
fn grid_quantile(pmf: &DiscretePMF, p: f64) -> Result<f64, DistError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(DistError::Domain("quantile needs p in (0,1]"));
    }
    let s = pmf.step();
    let lo = pmf.origin() - 0.5 * s;
    let mut acc = 0.0;
    let w = pmf.weights();
    for (k, &wk) in w.iter().enumerate() {
        // 1e-12 forward slack so p equal to a bin boundary does not skip
        // into a zero-weight bin
        if acc + wk >= p - 1e-12 && wk > 0.0 {
            let frac = ((p - acc) / wk).clamp(0.0, 1.0);
            return Ok(lo + (k as f64 + frac) * s);
        }
        acc += wk;
    }
    Ok(lo + w.len() as f64 * s)
}

/// Builds `F_1, ..., F_n` for the route.
pub fn build_arrivals(
    legs: &[TravelTimeDist],
    engine: &ArrivalEngine,
) -> Result<Vec<ArrivalDist>, ArrivalError> {
    if legs.is_empty() {
        return Err(ArrivalError::EmptyRoute);
    }
    engine.validate()?;

    match *engine {
        ArrivalEngine::ExactNormal => exact_normal(legs),
        ArrivalEngine::Convolution { step, half_width_sigmas, max_bins } => {
            convolution(legs, legs.len(), step, half_width_sigmas, max_bins).map(|(out, _)| out)
        }
        ArrivalEngine::Hybrid { switch_index, step, half_width_sigmas, max_bins } => {
            let n = legs.len();
            if switch_index > n {
                return convolution(legs, n, step, half_width_sigmas, max_bins)
                    .map(|(out, _)| out);
            }
            // convolve through client switch_index - 1, then moment-matched
            // normals seeded from the convolved PMF's true moments
            let n_grid = switch_index - 1;
            let (mut out, last) = convolution(legs, n_grid, step, half_width_sigmas, max_bins)?;
            let (mut mean, mut var) = match &last {
                Some(pmf) => (pmf.mean(), pmf.variance()),
                None => (0.0, 0.0),
            };
            for leg in &legs[n_grid..] {
                mean += leg.mean();
                var += leg.variance();
                out.push(ArrivalDist::ParamNormal { mean, sd: libm::sqrt(var) });
            }
            Ok(out)
        }
    }
}

fn exact_normal(legs: &[TravelTimeDist]) -> Result<Vec<ArrivalDist>, ArrivalError> {
    for (i, leg) in legs.iter().enumerate() {
        if leg.family() != Family::Normal {
            return Err(ArrivalError::EngineMismatch { leg: i, family: leg.family() });
        }
    }
    let mut out = Vec::with_capacity(legs.len());
    let (mut mean, mut var) = (0.0, 0.0);
    for leg in legs {
        mean += leg.mean();
        var += leg.variance();
        out.push(ArrivalDist::ParamNormal { mean, sd: libm::sqrt(var) });
    }
    Ok(out)
}

/// Convolves the first `count` legs; returns the arrival list and the last
/// convolved PMF (for hybrid hand-off).
fn convolution(
    legs: &[TravelTimeDist],
    count: usize,
    step: f64,
    half_width_sigmas: f64,
    max_bins: Option<usize>,
) -> Result<(Vec<ArrivalDist>, Option<DiscretePMF>), ArrivalError> {
    let mut out = Vec::with_capacity(legs.len());
    let mut acc: Option<DiscretePMF> = None;
    for leg in &legs[..count] {
        let pmf = leg.discretize(step, half_width_sigmas)?;
        let mut next = match &acc {
            None => pmf,
            Some(prev) => dists::convolve(prev, &pmf)?,
        };
        if let Some(cap) = max_bins {
            next = next.rebin(cap);
        }
        out.push(ArrivalDist::Grid(next.clone()));
        acc = Some(next);
    }
    Ok((out, acc))
}
