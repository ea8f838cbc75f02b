//! Travel-data pipeline: cleaning, constrained EM mixture of linear
//! regressions, MAP assignment, and synthetic route sampling.
//!
//! A stop pair is an observed (distance, time) leg. The mixture models
//! `time = a_k + b_k * distance + noise` with nonnegative intercepts and
//! slopes; constraints are enforced inside the M-step by exact boundary
//! enumeration over the nonnegativity cone, which keeps the likelihood
//! ascent property intact.

use alloc::vec::Vec;

use crate::dists::TravelTimeDist;
use crate::rng::SeedStream;

/// Keep pairs at least this many kilometers long.
const MIN_DISTANCE_KM: f64 = 2.0;
/// Fraction trimmed from each end of the time/distance-ratio distribution.
const TRIM_FRACTION: f64 = 0.025;
const TRAIN_FRACTION: f64 = 0.7;
const SIGMA_FLOOR: f64 = 1e-6;
const LL_TOL: f64 = 1e-8;
const DEGENERATE_MASS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum DatafitError {
    EmptyAfterCleaning,
    /// A component kept losing all responsibility mass even after one reseed.
    DegenerateComponent { component: usize },
    EmptyTestSet,
    InvalidParams(&'static str),
}

impl core::fmt::Display for DatafitError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DatafitError::EmptyAfterCleaning => write!(f, "no rows survive cleaning"),
            DatafitError::DegenerateComponent { component } => {
                write!(f, "component {component} lost all responsibility mass")
            }
            DatafitError::EmptyTestSet => write!(f, "test set is empty"),
            DatafitError::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
        }
    }
}

impl core::error::Error for DatafitError {}

/// One observed (distance, time) leg.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StopPair {
    pub distance: f64,
    pub time: f64,
}

/// One regression component of the mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Component {
    pub a: f64,
    pub b: f64,
    pub sigma: f64,
    pub w: f64,
}

/// Mixture of K linear regressions with nonnegative coefficients.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MixtureModel {
    pub components: Vec<Component>,
}

impl MixtureModel {
    pub fn k(&self) -> usize {
        self.components.len()
    }
}

/// Fit result: the model plus the per-iteration log-likelihood trace.
#[derive(Debug, Clone, PartialEq)]
pub struct EmFit {
    pub model: MixtureModel,
    pub log_likelihoods: Vec<f64>,
    pub iterations: usize,
}

/// Filters, trims ratio outliers, shuffles, and splits 70/30.
pub fn load_and_clean(
    rows: &[StopPair],
    seed: u64,
) -> Result<(Vec<StopPair>, Vec<StopPair>), DatafitError> {
    let kept: Vec<StopPair> = rows
        .iter()
        .filter(|p| {
            p.distance >= MIN_DISTANCE_KM
                && p.time > 0.0
                && p.distance.is_finite()
                && p.time.is_finite()
        })
        .copied()
        .collect();
    if kept.is_empty() {
        return Err(DatafitError::EmptyAfterCleaning);
    }

    // trim the top and bottom 2.5% of the time/distance ratio
    let mut by_ratio: Vec<usize> = (0..kept.len()).collect();
    by_ratio.sort_by(|&i, &j| {
        let ri = kept[i].time / kept[i].distance;
        let rj = kept[j].time / kept[j].distance;
        ri.partial_cmp(&rj).unwrap()
    });
    let cut = (kept.len() as f64 * TRIM_FRACTION) as usize;
    let mut keep_mask = alloc::vec![true; kept.len()];
    for &i in &by_ratio[..cut] {
        keep_mask[i] = false;
    }
    for &i in &by_ratio[kept.len() - cut..] {
        keep_mask[i] = false;
    }
    let trimmed: Vec<StopPair> = kept
        .into_iter()
        .zip(&keep_mask)
        .filter_map(|(p, &k)| k.then_some(p))
        .collect();
    if trimmed.is_empty() {
        return Err(DatafitError::EmptyAfterCleaning);
    }

    let mut stream = SeedStream::new(seed);
    let order = stream.shuffled_indices(trimmed.len());
    let n_train = (trimmed.len() as f64 * TRAIN_FRACTION) as usize;
    let train = order[..n_train].iter().map(|&i| trimmed[i]).collect();
    let test = order[n_train..].iter().map(|&i| trimmed[i]).collect();
    Ok((train, test))
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for x in xs {
        sum += x;
        n += 1;
    }
    sum / n as f64
}

struct InitBounds {
    /// Mean training distance (the paper's ȳ, reused as-is even where the
    /// units mix with time).
    y_bar: f64,
    slope_bound: f64,
    sigma0: f64,
}

fn init_bounds(train: &[StopPair]) -> InitBounds {
    let y_bar = mean(train.iter().map(|p| p.distance));
    // slope bound: |mean((time_i − ȳ)/distance_i)|, stated verbatim in the
    // source material despite the mixed units
    let slope_bound = mean(train.iter().map(|p| (p.time - y_bar) / p.distance)).abs();
    let var = mean(train.iter().map(|p| {
        let d = p.distance - y_bar;
        d * d
    }));
    InitBounds { y_bar, slope_bound, sigma0: libm::sqrt(var).max(SIGMA_FLOOR) }
}

fn random_component(bounds: &InitBounds, w: f64, stream: &mut SeedStream) -> Component {
    Component {
        a: stream.next_u01() * bounds.y_bar,
        b: stream.next_u01() * bounds.slope_bound,
        sigma: bounds.sigma0,
        w,
    }
}

/// Weighted least squares over the nonnegativity cone `a, b >= 0`:
/// unconstrained solution if feasible, otherwise the best of the boundary
/// subproblems (b = 0, a = 0, and the origin).
fn constrained_wls(train: &[StopPair], resp: &[f64]) -> (f64, f64) {
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (p, &r) in train.iter().zip(resp) {
        sw += r;
        sx += r * p.distance;
        sy += r * p.time;
        sxx += r * p.distance * p.distance;
        sxy += r * p.distance * p.time;
    }
    let rss = |a: f64, b: f64| -> f64 {
        train
            .iter()
            .zip(resp)
            .map(|(p, &r)| {
                let e = p.time - a - b * p.distance;
                r * e * e
            })
            .sum()
    };

    let det = sw * sxx - sx * sx;
    if det.abs() > 1e-300 {
        let b = (sw * sxy - sx * sy) / det;
        let a = (sy - b * sx) / sw;
        if a >= 0.0 && b >= 0.0 {
            return (a, b);
        }
    }
    let mut best = (0.0, 0.0);
    let mut best_rss = rss(0.0, 0.0);
    let a_only = (sy / sw).max(0.0);
    let r = rss(a_only, 0.0);
    if r < best_rss {
        best = (a_only, 0.0);
        best_rss = r;
    }
    if sxx > 0.0 {
        let b_only = (sxy / sxx).max(0.0);
        let r = rss(0.0, b_only);
        if r < best_rss {
            best = (0.0, b_only);
        }
    }
    best
}

const LOG_INV_SQRT_2PI: f64 = -0.918_938_533_204_672_7;

fn log_density(c: &Component, p: &StopPair) -> f64 {
    let e = (p.time - c.a - c.b * p.distance) / c.sigma;
    LOG_INV_SQRT_2PI - libm::log(c.sigma) - 0.5 * e * e
}

/// EM fit with an observer called on the model after every M-step
/// (used to check constraints at every iterate).
pub fn fit_mixture_em_observed(
    train: &[StopPair],
    k: usize,
    seed: u64,
    max_iter: usize,
    mut observe: impl FnMut(&MixtureModel),
) -> Result<EmFit, DatafitError> {
    if k < 1 {
        return Err(DatafitError::InvalidParams("K must be >= 1"));
    }
    if train.len() < 2 * k {
        return Err(DatafitError::InvalidParams("need at least 2K training rows"));
    }

    let bounds = init_bounds(train);
    let sigma_cap = (3.0 * bounds.y_bar).max(SIGMA_FLOOR);
    let mut stream = SeedStream::new(seed ^ 0x5bf0_3635);
    let mut model = MixtureModel {
        components: (0..k)
            .map(|_| random_component(&bounds, 1.0 / k as f64, &mut stream))
            .collect(),
    };

    let n = train.len();
    let mut resp = alloc::vec![0.0; n * k]; // responsibilities, row-major
    let mut reseeded = alloc::vec![false; k];
    let mut lls: Vec<f64> = Vec::new();
    let mut iterations = 0;

    for _ in 0..max_iter {
        iterations += 1;

        // E-step in the log domain
        let mut ll = 0.0;
        for (i, p) in train.iter().enumerate() {
            let row = &mut resp[i * k..(i + 1) * k];
            let mut hi = f64::NEG_INFINITY;
            for (j, c) in model.components.iter().enumerate() {
                row[j] = libm::log(c.w) + log_density(c, p);
                hi = hi.max(row[j]);
            }
            let mut sum = 0.0;
            for v in row.iter_mut() {
                *v = libm::exp(*v - hi);
                sum += *v;
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
            ll += hi + libm::log(sum);
        }
        lls.push(ll);

        // M-step with degenerate-component handling
        let mut col = alloc::vec![0.0; n];
        for j in 0..k {
            let mass: f64 = (0..n).map(|i| resp[i * k + j]).sum();
            if mass < DEGENERATE_MASS {
                if reseeded[j] {
                    return Err(DatafitError::DegenerateComponent { component: j });
                }
                reseeded[j] = true;
                model.components[j] = random_component(&bounds, 1.0 / k as f64, &mut stream);
                continue;
            }
            for i in 0..n {
                col[i] = resp[i * k + j];
            }
            let (a, b) = constrained_wls(train, &col);
            let rss: f64 = train
                .iter()
                .zip(&col)
                .map(|(p, &r)| {
                    let e = p.time - a - b * p.distance;
                    r * e * e
                })
                .sum();
            let sigma = libm::sqrt(rss / mass).clamp(SIGMA_FLOOR, sigma_cap);
            model.components[j] = Component { a, b, sigma, w: mass / n as f64 };
        }
        // renormalize weights (exact after reseeds)
        let wsum: f64 = model.components.iter().map(|c| c.w).sum();
        for c in &mut model.components {
            c.w /= wsum;
        }
        observe(&model);

        if lls.len() >= 2 && (lls[lls.len() - 1] - lls[lls.len() - 2]).abs() < LL_TOL {
            break;
        }
    }

    Ok(EmFit { model, log_likelihoods: lls, iterations })
}

/// EM fit of a K-component mixture of nonnegative linear regressions.
pub fn fit_mixture_em(
    train: &[StopPair],
    k: usize,
    seed: u64,
    max_iter: usize,
) -> Result<EmFit, DatafitError> {
    fit_mixture_em_observed(train, k, seed, max_iter, |_| {})
}

/// Maximum-a-posteriori component for a pair; ties break to the lowest index.
pub fn map_assign(model: &MixtureModel, pair: &StopPair) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (j, c) in model.components.iter().enumerate() {
        let score = libm::log(c.w) + log_density(c, pair);
        if score > best_score {
            best = j;
            best_score = score;
        }
    }
    best
}

/// Samples `n` test pairs with replacement; each becomes a Normal leg with
/// mean `a_k + b_k * distance` of its MAP component and the recorded time as
/// the realization.
pub fn sample_route(
    model: &MixtureModel,
    test: &[StopPair],
    n: usize,
    seed: u64,
) -> Result<Vec<(TravelTimeDist, f64)>, DatafitError> {
    if test.is_empty() {
        return Err(DatafitError::EmptyTestSet);
    }
    if n < 1 {
        return Err(DatafitError::InvalidParams("route length must be >= 1"));
    }
    let mut stream = SeedStream::new(seed ^ 0x9d2c_5680);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let p = test[stream.next_below(test.len() as u64) as usize];
        let c = &model.components[map_assign(model, &p)];
        let mean = c.a + c.b * p.distance;
        let leg = TravelTimeDist::normal(mean, c.sigma)
            .map_err(|_| DatafitError::InvalidParams("degenerate component mean"))?;
        out.push((leg, p.time));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(n: usize, seed: u64) -> Vec<StopPair> {
        let mut s = SeedStream::new(seed);
        (0..n)
            .map(|_| {
                let d = 2.0 + 10.0 * s.next_u01();
                let t = 2.0 + 3.0 * d + 2.0 * (s.next_u01() - 0.5);
                StopPair { distance: d, time: t }
            })
            .collect()
    }

    #[test]
    fn cleaning_filters_and_trims() {
        let mut rows = synthetic(1000, 1);
        rows.push(StopPair { distance: 1.5, time: 10.0 }); // distance filter
        let (train, test) = load_and_clean(&rows, 7).unwrap();
        // 1000 survive the filter, 25 trimmed from each ratio tail
        assert_eq!(train.len() + test.len(), 950);
        assert_eq!(train.len(), 665);
        // determinism
        let (t2, s2) = load_and_clean(&rows, 7).unwrap();
        assert_eq!(train, t2);
        assert_eq!(test, s2);
        // different seed shuffles differently
        let (t3, _) = load_and_clean(&rows, 8).unwrap();
        assert_ne!(train, t3);
    }

    fn ols(data: &[StopPair]) -> (f64, f64) {
        let n = data.len() as f64;
        let sx: f64 = data.iter().map(|p| p.distance).sum();
        let sy: f64 = data.iter().map(|p| p.time).sum();
        let sxx: f64 = data.iter().map(|p| p.distance * p.distance).sum();
        let sxy: f64 = data.iter().map(|p| p.distance * p.time).sum();
        let b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        ((sy - b * sx) / n, b)
    }

    #[test]
    fn k1_matches_least_squares() {
        let data = synthetic(400, 3);
        let fit = fit_mixture_em(&data, 1, 5, 200).unwrap();
        let (a, b) = ols(&data);
        let c = &fit.model.components[0];
        assert!((c.a - a).abs() < 1e-6, "a {} vs {a}", c.a);
        assert!((c.b - b).abs() < 1e-6, "b {} vs {b}", c.b);
    }

    #[test]
    fn likelihood_nondecreasing_and_constraints_hold() {
        let data = synthetic(500, 9);
        let y_bar = mean(data.iter().map(|p| p.distance));
        let mut iterate_models = Vec::new();
        let fit = fit_mixture_em_observed(&data, 3, 11, 300, |m| iterate_models.push(m.clone()))
            .unwrap();
        for w in fit.log_likelihoods.windows(2) {
            assert!(w[1] >= w[0] - 1e-10, "{} -> {}", w[0], w[1]);
        }
        assert!(!iterate_models.is_empty());
        for m in &iterate_models {
            let wsum: f64 = m.components.iter().map(|c| c.w).sum();
            assert!((wsum - 1.0).abs() < 1e-12);
            for c in &m.components {
                assert!(c.a >= 0.0 && c.b >= 0.0);
                assert!(c.sigma >= SIGMA_FLOOR && c.sigma <= 3.0 * y_bar + 1e-12);
            }
        }
    }

    #[test]
    fn negative_slope_clamped() {
        // strongly negative empirical slope
        let mut s = SeedStream::new(4);
        let data: Vec<StopPair> = (0..200)
            .map(|_| {
                let d = 2.0 + 8.0 * s.next_u01();
                StopPair { distance: d, time: (40.0 - 3.5 * d).max(0.1) }
            })
            .collect();
        let fit = fit_mixture_em(&data, 1, 2, 200).unwrap();
        let c = &fit.model.components[0];
        assert_eq!(c.b, 0.0);
        // a re-optimized given b = 0: the weighted mean of time
        let expect = mean(data.iter().map(|p| p.time));
        assert!((c.a - expect).abs() < 1e-9);
    }

    #[test]
    fn map_assignment_rules() {
        let one = MixtureModel {
            components: alloc::vec![Component { a: 1.0, b: 2.0, sigma: 1.0, w: 1.0 }],
        };
        assert_eq!(map_assign(&one, &StopPair { distance: 3.0, time: 50.0 }), 0);

        let two = MixtureModel {
            components: alloc::vec![
                Component { a: 0.0, b: 1.0, sigma: 5.0, w: 0.5 },
                Component { a: 0.0, b: 10.0, sigma: 0.1, w: 0.5 },
            ],
        };
        // on component 2's line, far from component 1's
        assert_eq!(map_assign(&two, &StopPair { distance: 5.0, time: 50.0 }), 1);

        // exact tie: identical components → lowest index
        let tie = MixtureModel {
            components: alloc::vec![
                Component { a: 1.0, b: 1.0, sigma: 1.0, w: 0.5 },
                Component { a: 1.0, b: 1.0, sigma: 1.0, w: 0.5 },
            ],
        };
        assert_eq!(map_assign(&tie, &StopPair { distance: 2.0, time: 3.0 }), 0);
    }

    #[test]
    fn map_invariant_under_weight_rescaling() {
        let data = synthetic(300, 21);
        let fit = fit_mixture_em(&data, 2, 13, 200).unwrap();
        let mut scaled = fit.model.clone();
        for c in &mut scaled.components {
            c.w *= 7.3;
        }
        for p in &data[..50] {
            assert_eq!(map_assign(&fit.model, p), map_assign(&scaled, p));
        }
    }

    #[test]
    fn sample_route_contract() {
        let model = MixtureModel {
            components: alloc::vec![Component { a: 2.0, b: 3.0, sigma: 1.5, w: 1.0 }],
        };
        let test = alloc::vec![StopPair { distance: 4.0, time: 13.7 }];
        let route = sample_route(&model, &test, 3, 5).unwrap();
        assert_eq!(route.len(), 3);
        for (leg, realized) in &route {
            assert_eq!(leg.mean(), 2.0 + 3.0 * 4.0);
            assert_eq!(*realized, 13.7);
        }
        let again = sample_route(&model, &test, 3, 5).unwrap();
        assert_eq!(route, again);
        assert!(matches!(
            sample_route(&model, &[], 3, 5),
            Err(DatafitError::EmptyTestSet)
        ));
    }
}
