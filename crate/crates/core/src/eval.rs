//! Objective evaluation.
//!
//! The objective is a sum over clients of expected lateness (weight ω),
//! expected earliness (weight 1−ω), and the deterministic width penalty.
//! Two evaluators are provided: a Monte Carlo estimator driven by
//! counter-based substreams (reproducible under any parallel chunking of
//! runs) and an exact closed form for normal arrival distributions.

use alloc::vec::Vec;
use core::ops::Range;

use crate::arrival::ArrivalDist;
use crate::dists::TravelTimeDist;
use crate::math;
use crate::penalty::Penalty;
use crate::rng;
use crate::wos::Schedule;

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    LengthMismatch { a: usize, b: usize },
    /// Analytic evaluation requires all-ParamNormal arrivals.
    EngineMismatch { index: usize },
    InvalidRuns,
}

impl core::fmt::Display for EvalError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            EvalError::LengthMismatch { a, b } => write!(f, "length mismatch: {a} vs {b}"),
            EvalError::EngineMismatch { index } => {
                write!(f, "arrival {index} is grid-based; analytic evaluation needs normals")
            }
            EvalError::InvalidRuns => write!(f, "run count must be >= 1"),
        }
    }
}

impl core::error::Error for EvalError {}

/// Per-client `(late, early, width)` costs plus the total and its Monte
/// Carlo standard error (0 for analytic evaluation).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CostBreakdown {
    pub per_client: Vec<(f64, f64, f64)>,
    pub total: f64,
    pub std_error: f64,
}

impl CostBreakdown {
    pub fn client_totals(&self) -> Vec<f64> {
        self.per_client.iter().map(|(l, e, w)| l + e + w).collect()
    }
}

/// Partial Monte Carlo sums over a run range; mergeable across workers.
#[derive(Debug, Clone)]
pub struct McPartial {
    pub runs: u64,
    sum_late: Vec<f64>,
    sum_early: Vec<f64>,
    sum_stoch: f64,
    sum_stoch_sq: f64,
}

impl McPartial {
    pub fn merge(mut self, other: McPartial) -> McPartial {
        debug_assert_eq!(self.sum_late.len(), other.sum_late.len());
        self.runs += other.runs;
        for (a, b) in self.sum_late.iter_mut().zip(&other.sum_late) {
            *a += b;
        }
        for (a, b) in self.sum_early.iter_mut().zip(&other.sum_early) {
            *a += b;
        }
        self.sum_stoch += other.sum_stoch;
        self.sum_stoch_sq += other.sum_stoch_sq;
        self
    }
}

/// Samples the realized arrival times of one run into `out` (running sums
/// of inverse-CDF leg draws).
pub fn sample_arrivals(legs: &[TravelTimeDist], seed: u64, run: u64, out: &mut Vec<f64>) {
    out.clear();
    let mut s = 0.0;
    for (i, leg) in legs.iter().enumerate() {
        let u = rng::substream_u01(seed, run, i as u64);
        s += leg.quantile(u).expect("u in (0,1)");
        out.push(s);
    }
}

/// Accumulates stochastic cost terms over `run_range`.
pub fn mc_accumulate(
    schedule: &Schedule,
    legs: &[TravelTimeDist],
    omega: f64,
    seed: u64,
    run_range: Range<u64>,
) -> McPartial {
    let n = schedule.windows.len();
    let mut part = McPartial {
        runs: 0,
        sum_late: alloc::vec![0.0; n],
        sum_early: alloc::vec![0.0; n],
        sum_stoch: 0.0,
        sum_stoch_sq: 0.0,
    };
    let mut arrivals = Vec::with_capacity(n);
    for run in run_range {
        sample_arrivals(legs, seed, run, &mut arrivals);
        let mut run_total = 0.0;
        for (i, w) in schedule.windows.iter().enumerate() {
            let s = arrivals[i];
            let late = omega * (s - w.end()).max(0.0);
            let early = (1.0 - omega) * (w.start - s).max(0.0);
            part.sum_late[i] += late;
            part.sum_early[i] += early;
            run_total += late + early;
        }
        part.sum_stoch += run_total;
        part.sum_stoch_sq += run_total * run_total;
        part.runs += 1;
    }
    part
}

/// Turns accumulated sums into a [`CostBreakdown`] (adds the deterministic
/// width penalties).
pub fn mc_finalize(part: &McPartial, schedule: &Schedule, penalty: &Penalty) -> CostBreakdown {
    let r = part.runs as f64;
    let mut per_client = Vec::with_capacity(schedule.windows.len());
    let mut total = 0.0;
    for (i, w) in schedule.windows.iter().enumerate() {
        let late = part.sum_late[i] / r;
        let early = part.sum_early[i] / r;
        let width = penalty.value(w.width);
        per_client.push((late, early, width));
        total += late + early + width;
    }
    let mean = part.sum_stoch / r;
    let var = ((part.sum_stoch_sq / r) - mean * mean).max(0.0) * r / (r - 1.0).max(1.0);
    let std_error = libm::sqrt(var / r);
    CostBreakdown { per_client, total, std_error }
}

/// Monte Carlo estimate of the objective over `runs` sample paths.
pub fn mc_objective(
    schedule: &Schedule,
    legs: &[TravelTimeDist],
    omega: f64,
    penalty: &Penalty,
    runs: u64,
    seed: u64,
) -> Result<CostBreakdown, EvalError> {
    if runs == 0 {
        return Err(EvalError::InvalidRuns);
    }
    if schedule.windows.len() != legs.len() {
        return Err(EvalError::LengthMismatch { a: schedule.windows.len(), b: legs.len() });
    }
    let part = mc_accumulate(schedule, legs, omega, seed, 0..runs);
    Ok(mc_finalize(&part, schedule, penalty))
}

/// E(X − c)⁺ for X ~ N(mu, sd²).
fn expected_excess(mu: f64, sd: f64, c: f64) -> f64 {
    let z = (mu - c) / sd;
    (mu - c) * math::norm_cdf(z) + sd * math::norm_pdf(z)
}

/// Exact objective for normal arrival distributions.
pub fn analytic_objective_normal(
    schedule: &Schedule,
    arrivals: &[ArrivalDist],
    omega: f64,
    penalty: &Penalty,
) -> Result<CostBreakdown, EvalError> {
    if schedule.windows.len() != arrivals.len() {
        return Err(EvalError::LengthMismatch { a: schedule.windows.len(), b: arrivals.len() });
    }
    let mut per_client = Vec::with_capacity(arrivals.len());
    let mut total = 0.0;
    for (i, (w, f)) in schedule.windows.iter().zip(arrivals).enumerate() {
        let (mu, sd) = match f {
            ArrivalDist::ParamNormal { mean, sd } => (*mean, *sd),
            ArrivalDist::Grid(_) => return Err(EvalError::EngineMismatch { index: i }),
        };
        // E(c − X)⁺ = E(X' − c')⁺ with X' = −X around the mean
        let late = omega * expected_excess(mu, sd, w.end());
        let early = (1.0 - omega) * expected_excess(-mu, sd, -w.start);
        let width = penalty.value(w.width);
        per_client.push((late, early, width));
        total += late + early + width;
    }
    Ok(CostBreakdown { per_client, total, std_error: 0.0 })
}

/// Per-client comparison of two breakdowns.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// `a_total − b_total` per client.
    pub deltas: Vec<f64>,
    /// max−min of client totals within a.
    pub spread_a: f64,
    /// max−min of client totals within b.
    pub spread_b: f64,
}

pub fn per_client_compare(a: &CostBreakdown, b: &CostBreakdown) -> Result<Comparison, EvalError> {
    if a.per_client.len() != b.per_client.len() {
        return Err(EvalError::LengthMismatch { a: a.per_client.len(), b: b.per_client.len() });
    }
    let ta = a.client_totals();
    let tb = b.client_totals();
    let spread = |v: &[f64]| -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &x in v {
            lo = lo.min(x);
            hi = hi.max(x);
        }
        hi - lo
    };
    Ok(Comparison {
        deltas: ta.iter().zip(&tb).map(|(x, y)| x - y).collect(),
        spread_a: spread(&ta),
        spread_b: spread(&tb),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dists::DiscretePMF;
    use crate::wos::Window;

    fn point_mass_leg(v: f64) -> TravelTimeDist {
        TravelTimeDist::empirical(DiscretePMF::new(v, 1.0, alloc::vec![1.0]).unwrap())
    }

    #[test]
    fn degenerate_inside_window() {
        let legs = [point_mass_leg(5.0), point_mass_leg(5.0)];
        let sched = Schedule::new(alloc::vec![
            Window { start: 4.0, width: 2.0 },
            Window { start: 9.0, width: 2.0 },
        ]);
        let p = Penalty::linear(0.1).unwrap();
        let c = mc_objective(&sched, &legs, 0.5, &p, 10, 1).unwrap();
        assert_eq!(c.total, 0.1 * 2.0 + 0.1 * 2.0);
        assert_eq!(c.std_error, 0.0);
    }

    #[test]
    fn degenerate_pure_earliness() {
        // arrivals at 5 and 10; windows start g = 3 later
        let legs = [point_mass_leg(5.0), point_mass_leg(5.0)];
        let g = 3.0;
        let sched = Schedule::new(alloc::vec![
            Window { start: 5.0 + g, width: 1.0 },
            Window { start: 10.0 + g, width: 1.0 },
        ]);
        let omega = 0.4;
        let p = Penalty::linear(0.1).unwrap();
        let c = mc_objective(&sched, &legs, omega, &p, 10, 1).unwrap();
        let expect = 2.0 * ((1.0 - omega) * g + 0.1);
        assert!((c.total - expect).abs() < 1e-12);
    }

    #[test]
    fn analytic_excess_values() {
        // E(X−μ)⁺ = σ φ(0)
        assert!((expected_excess(10.0, 2.0, 10.0) - 2.0 * 0.3989422804014327).abs() < 1e-14);
        assert!(expected_excess(10.0, 2.0, 10.0 + 20.0) < 1e-12);
        // symmetry at c = μ
        let late = expected_excess(10.0, 2.0, 10.0);
        let early = expected_excess(-10.0, 2.0, -10.0);
        assert!((late - early).abs() < 1e-15);
    }

    #[test]
    fn mc_matches_analytic_within_3_se() {
        let legs: Vec<_> = (0..5)
            .map(|_| TravelTimeDist::normal(10.0, 2.5).unwrap())
            .collect();
        let arr = crate::arrival::build_arrivals(&legs, &crate::arrival::ArrivalEngine::ExactNormal)
            .unwrap();
        let p = Penalty::linear(0.1).unwrap();
        let sched = crate::wos::solve_schedule(&arr, 0.5, &p).unwrap();
        let exact = analytic_objective_normal(&sched, &arr, 0.5, &p).unwrap();
        let mc = mc_objective(&sched, &legs, 0.5, &p, 200_000, 11).unwrap();
        assert!(
            (mc.total - exact.total).abs() <= 3.0 * mc.std_error,
            "mc {} exact {} se {}",
            mc.total,
            exact.total,
            mc.std_error
        );
    }

    #[test]
    fn chunked_accumulation_matches_single_pass() {
        let legs: Vec<_> = (0..3)
            .map(|_| TravelTimeDist::weibull(10.0, 2.5).unwrap())
            .collect();
        let sched = Schedule::new(alloc::vec![
            Window { start: 8.0, width: 4.0 },
            Window { start: 18.0, width: 4.0 },
            Window { start: 28.0, width: 4.0 },
        ]);
        let p = Penalty::linear(0.1).unwrap();
        let whole = mc_objective(&sched, &legs, 0.5, &p, 1000, 3).unwrap();
        let a = mc_accumulate(&sched, &legs, 0.5, 3, 0..400);
        let b = mc_accumulate(&sched, &legs, 0.5, 3, 400..1000);
        let merged = mc_finalize(&b.merge(a), &sched, &p);
        // substreams make the draws identical; summation order differs, so
        // agreement is to rounding, not bitwise
        assert!((whole.total - merged.total).abs() < 1e-12 * whole.total);
        assert!((whole.std_error - merged.std_error).abs() < 1e-12);
        for (x, y) in whole.per_client.iter().zip(&merged.per_client) {
            assert!((x.0 - y.0).abs() < 1e-12);
            assert!((x.1 - y.1).abs() < 1e-12);
            assert_eq!(x.2, y.2);
        }
    }

    #[test]
    fn se_halves_when_runs_quadruple() {
        let legs: Vec<_> = (0..3)
            .map(|_| TravelTimeDist::normal(10.0, 2.5).unwrap())
            .collect();
        let sched = Schedule::new(alloc::vec![
            Window { start: 9.0, width: 2.0 },
            Window { start: 19.0, width: 2.0 },
            Window { start: 29.0, width: 2.0 },
        ]);
        let p = Penalty::linear(0.1).unwrap();
        let small = mc_objective(&sched, &legs, 0.5, &p, 20_000, 5).unwrap();
        let large = mc_objective(&sched, &legs, 0.5, &p, 80_000, 5).unwrap();
        let ratio = small.std_error / large.std_error;
        assert!((ratio - 2.0).abs() < 0.4, "ratio {ratio}");
    }

    #[test]
    fn compare_basics() {
        let a = CostBreakdown {
            per_client: alloc::vec![(1.0, 0.5, 0.2), (0.3, 0.1, 0.2)],
            total: 2.3,
            std_error: 0.0,
        };
        let c = per_client_compare(&a, &a).unwrap();
        assert!(c.deltas.iter().all(|d| *d == 0.0));
        assert_eq!(c.spread_a, c.spread_b);
        let short = CostBreakdown { per_client: alloc::vec![(0.0, 0.0, 0.0)], total: 0.0, std_error: 0.0 };
        assert!(per_client_compare(&a, &short).is_err());
    }
}
