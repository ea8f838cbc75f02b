//! Dynamic window optimization (DWOS).
//!
//! Simulates one route realization under periodic re-solving: every τ time
//! units the deliverer's position is located, the in-service leg is
//! conditioned on its elapsed time, WOS is re-solved on the residual route,
//! and each not-yet-flagged client whose recomputed start is within the
//! advance-notice threshold `T` receives a single window update. Costs are
//! evaluated against the final communicated windows and compared with the
//! static schedule on the same realized path (common random numbers).

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::arrival::{build_arrivals, ArrivalEngine, ArrivalError};
use crate::dists::{self, DistError, Family, TravelTimeDist};
use crate::eval::{self, CostBreakdown};
use crate::penalty::Penalty;
use crate::wos::{self, Schedule, Window, WosError};

#[derive(Debug, Clone, PartialEq)]
pub enum DwosError {
    /// τj exceeds the total realized route time.
    RouteFinished { tau_j: f64, total: f64 },
    Domain(&'static str),
    /// Solver failure during the recomputation at epoch `j`.
    AtEpoch { epoch: u64, source: Box<DwosError> },
    Wos(WosError),
    Arrival(ArrivalError),
    Dist(DistError),
}

impl core::fmt::Display for DwosError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DwosError::RouteFinished { tau_j, total } => {
                write!(f, "route finished: time {tau_j} exceeds realized total {total}")
            }
            DwosError::Domain(msg) => write!(f, "domain error: {msg}"),
            DwosError::AtEpoch { epoch, source } => write!(f, "epoch {epoch}: {source}"),
            DwosError::Wos(e) => write!(f, "{e}"),
            DwosError::Arrival(e) => write!(f, "{e}"),
            DwosError::Dist(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for DwosError {}

impl From<WosError> for DwosError {
    fn from(e: WosError) -> Self {
        DwosError::Wos(e)
    }
}

impl From<ArrivalError> for DwosError {
    fn from(e: ArrivalError) -> Self {
        DwosError::Arrival(e)
    }
}

impl From<DistError> for DwosError {
    fn from(e: DistError) -> Self {
        DwosError::Dist(e)
    }
}

/// Simulation parameters for one DWOS experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct DwosConfig {
    /// Recomputation period τ.
    pub tau: f64,
    /// Advance-notice threshold T.
    pub threshold: f64,
    pub omega: f64,
    pub penalty: Penalty,
    pub engine: ArrivalEngine,
    /// Replication count.
    pub runs: u64,
    pub seed: u64,
}

impl DwosConfig {
    pub fn validate(&self) -> Result<(), DwosError> {
        if !(self.tau > 0.0) {
            return Err(DwosError::Domain("tau must be > 0"));
        }
        if !(self.threshold >= 0.0) {
            return Err(DwosError::Domain("threshold must be >= 0"));
        }
        if !(self.omega > 0.0 && self.omega < 1.0) {
            return Err(DwosError::Domain("omega must be in (0,1)"));
        }
        Ok(())
    }
}

/// One simulated route.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DwosRunRecord {
    pub realized_legs: Vec<f64>,
    pub initial_schedule: Schedule,
    /// Last communicated window per client.
    pub final_schedule: Schedule,
    /// Time of the post-time-0 update, when one occurred.
    pub update_times: Vec<Option<f64>>,
    /// Static window start minus update time, for updated clients.
    pub advance_notice: Vec<Option<f64>>,
    /// True when the update was communicated after the realized arrival.
    pub late_communication: Vec<bool>,
    /// Costs of the final windows on the realized path.
    pub costs: CostBreakdown,
    /// Costs of the initial (static) windows on the same path.
    pub static_costs: CostBreakdown,
}

/// Locates the deliverer at time τj: returns the 1-based index `N_j` of the
/// client in service and the elapsed time `b_j` on that leg. When τj equals
/// a completion time exactly, service of the next client has elapsed time 0.
pub fn locate_position(realized: &[f64], tau: f64, j: u64) -> Result<(usize, f64), DwosError> {
    let t = tau * j as f64;
    let total: f64 = realized.iter().sum();
    if t >= total && !realized.is_empty() && j > 0 {
        return Err(DwosError::RouteFinished { tau_j: t, total });
    }
    let mut cum = 0.0;
    let mut n = 1;
    for &b in realized {
        if cum + b <= t {
            cum += b;
            n += 1;
        } else {
            break;
        }
    }
    Ok((n, t - cum))
}

/// Deterministic cost of a schedule against one realized arrival path.
fn path_cost(
    schedule: &Schedule,
    arrivals: &[f64],
    omega: f64,
    penalty: &Penalty,
) -> CostBreakdown {
    let mut per_client = Vec::with_capacity(schedule.windows.len());
    let mut total = 0.0;
    for (w, &s) in schedule.windows.iter().zip(arrivals) {
        let late = omega * (s - w.end()).max(0.0);
        let early = (1.0 - omega) * (w.start - s).max(0.0);
        let width = penalty.value(w.width);
        per_client.push((late, early, width));
        total += late + early + width;
    }
    CostBreakdown { per_client, total, std_error: 0.0 }
}

/// Builds the leg standing in for the in-service leg's remaining time.
fn residual_leg(
    base: &TravelTimeDist,
    elapsed: f64,
    engine: &ArrivalEngine,
) -> Result<TravelTimeDist, DwosError> {
    if elapsed == 0.0 {
        return Ok(base.clone());
    }
    let res = dists::condition_on_elapsed(base, elapsed)?;
    // normal-moment shortcut (exact for a Normal base) under the parametric
    // engines; discretized residual CCDF otherwise
    let normal_shortcut = base.family() == Family::Normal
        && matches!(engine, ArrivalEngine::ExactNormal | ArrivalEngine::Hybrid { .. });
    if normal_shortcut {
        let (mean, var) = res.as_normal().expect("normal base");
        return Ok(TravelTimeDist::normal(mean - elapsed, libm::sqrt(var))?);
    }
    let step = match *engine {
        ArrivalEngine::Convolution { step, .. } | ArrivalEngine::Hybrid { step, .. } => step,
        ArrivalEngine::ExactNormal => 1e-3,
    };
    Ok(TravelTimeDist::empirical(res.discretize(step)?))
}

/// Runs Algorithm-style dynamic re-solving on one realized path.
pub fn simulate_run(
    legs: &[TravelTimeDist],
    config: &DwosConfig,
    run: u64,
) -> Result<DwosRunRecord, DwosError> {
    config.validate()?;
    let n = legs.len();
    if n == 0 {
        return Err(DwosError::Domain("route has no legs"));
    }

    // realized path (common random numbers with the static evaluation)
    let mut arrivals_realized = Vec::with_capacity(n);
    eval::sample_arrivals(legs, config.seed, run, &mut arrivals_realized);
    let realized_legs: Vec<f64> = arrivals_realized
        .iter()
        .scan(0.0, |prev, &s| {
            let b = s - *prev;
            *prev = s;
            Some(b)
        })
        .collect();
    let total_time = arrivals_realized[n - 1];

    // time-0 static solve; clients within the threshold are flagged at once
    let initial_arrivals = build_arrivals(legs, &config.engine)?;
    let initial = wos::solve_schedule(&initial_arrivals, config.omega, &config.penalty)?;

    let mut final_windows: Vec<Window> = initial.windows.clone();
    let mut flagged: Vec<bool> = initial.windows.iter().map(|w| w.start <= config.threshold).collect();
    let mut update_times: Vec<Option<f64>> = alloc::vec![None; n];

    let mut j: u64 = 1;
    while flagged.iter().any(|f| !f) {
        let (pos, elapsed) = match locate_position(&realized_legs, config.tau, j) {
            Ok(p) => p,
            Err(DwosError::RouteFinished { .. }) => break,
            Err(e) => return Err(e),
        };
        let now = config.tau * j as f64;
        let first = pos - 1; // 0-based index of the in-service leg
        if flagged[first..].iter().all(|f| *f) {
            // every remaining client already locked in; nothing to re-solve
            j += 1;
            continue;
        }

        let step = |e: DwosError| DwosError::AtEpoch { epoch: j, source: Box::new(e) };
        let mut rest: Vec<TravelTimeDist> = Vec::with_capacity(n - first);
        rest.push(residual_leg(&legs[first], elapsed, &config.engine).map_err(step)?);
        rest.extend_from_slice(&legs[first + 1..]);

        let res_arrivals = build_arrivals(&rest, &config.engine).map_err(|e| step(e.into()))?;
        for (k, f) in res_arrivals.iter().enumerate() {
            let i = first + k;
            if flagged[i] {
                continue;
            }
            let w = match config.penalty {
                Penalty::Linear { alpha } => {
                    wos::solve_client_linear(f, config.omega, alpha)
                }
                Penalty::Power { .. } => {
                    wos::solve_client_convex(f, config.omega, &config.penalty).map(|r| r.window)
                }
            }
            .map_err(|e| step(e.into()))?;
            let abs = Window { start: now + w.start, width: w.width };
            if abs.start - now <= config.threshold {
                final_windows[i] = abs;
                flagged[i] = true;
                update_times[i] = Some(now);
            }
        }
        j += 1;
        if config.tau * j as f64 >= total_time {
            break;
        }
    }

    let advance_notice: Vec<Option<f64>> = update_times
        .iter()
        .enumerate()
        .map(|(i, t)| t.map(|t| initial.windows[i].start - t))
        .collect();
    let late_communication: Vec<bool> = update_times
        .iter()
        .enumerate()
        .map(|(i, t)| t.is_some_and(|t| t > arrivals_realized[i]))
        .collect();

    let final_schedule = Schedule::new(final_windows);
    let costs = path_cost(&final_schedule, &arrivals_realized, config.omega, &config.penalty);
    let static_costs = path_cost(&initial, &arrivals_realized, config.omega, &config.penalty);

    Ok(DwosRunRecord {
        realized_legs,
        initial_schedule: initial,
        final_schedule,
        update_times,
        advance_notice,
        late_communication,
        costs,
        static_costs,
    })
}

/// Percentage cost reduction of DWOS relative to the static schedule.
pub fn relative_difference(static_cost: f64, dwos_cost: f64) -> Result<f64, DwosError> {
    if !(static_cost > 0.0) {
        return Err(DwosError::Domain("static cost must be > 0"));
    }
    Ok(100.0 * (static_cost - dwos_cost) / static_cost)
}

/// Advance-notice summary for one client across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct NoticeStats {
    /// 0-based client index.
    pub client: usize,
    /// Number of runs in which this client received an update.
    pub updates: usize,
    /// Fraction of updated runs with notice below each threshold;
    /// `None` when no updates occurred.
    pub frac_below: Option<Vec<f64>>,
    /// Mean advance notice over updated runs; `None` when no updates.
    pub mean: Option<f64>,
}

/// Tabulates advance-notice statistics over the updated-run population.
pub fn advance_notice_stats(
    records: &[DwosRunRecord],
    client_indices: &[usize],
    thresholds: &[f64],
) -> Vec<NoticeStats> {
    client_indices
        .iter()
        .map(|&c| {
            let notices: Vec<f64> = records
                .iter()
                .filter_map(|r| r.advance_notice.get(c).copied().flatten())
                .collect();
            if notices.is_empty() {
                return NoticeStats { client: c, updates: 0, frac_below: None, mean: None };
            }
            let m = notices.len() as f64;
            let frac = thresholds
                .iter()
                .map(|&th| notices.iter().filter(|&&x| x < th).count() as f64 / m)
                .collect();
            NoticeStats {
                client: c,
                updates: notices.len(),
                frac_below: Some(frac),
                mean: Some(notices.iter().sum::<f64>() / m),
            }
        })
        .collect()
}
