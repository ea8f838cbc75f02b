//! Travel-time distribution primitives.
//!
//! A route leg is a [`TravelTimeDist`]: Normal, Lognormal, Weibull
//! (parameterized by mean and standard deviation, with internal moment
//! matching), or an empirical [`DiscretePMF`]. On top of the usual
//! CDF/quantile/moment queries this module provides the discretization and
//! convolution machinery used to build arrival-time distributions
//! numerically, and elapsed-time conditioning for in-service legs.

use alloc::vec::Vec;

use crate::math;

/// Grid convolutions switch to FFT above this `len(a) * len(b)` product.
const DIRECT_CONV_LIMIT: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq)]
pub enum DistError {
    /// Argument outside the operation's domain.
    Domain(&'static str),
    /// Invalid construction parameters.
    InvalidParams(&'static str),
    /// Convolution inputs on grids with different step sizes.
    StepMismatch { a: f64, b: f64 },
    /// Conditioning on an elapsed time with (numerically) no mass beyond it.
    MassExhausted { elapsed: f64 },
}

impl core::fmt::Display for DistError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DistError::Domain(msg) => write!(f, "domain error: {msg}"),
            DistError::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
            DistError::StepMismatch { a, b } => {
                write!(f, "grid step mismatch: {a} vs {b}")
            }
            DistError::MassExhausted { elapsed } => {
                write!(f, "no residual mass beyond elapsed time {elapsed}")
            }
        }
    }
}

impl core::error::Error for DistError {}

/// Distribution family of a route leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Family {
    Normal,
    Lognormal,
    Weibull,
    Empirical,
}

/// A probability mass function on a contiguous uniform grid
/// `origin, origin + step, origin + 2*step, ...`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiscretePMF {
    origin: f64,
    step: f64,
    weights: Vec<f64>,
}

impl DiscretePMF {
    /// Builds a PMF, renormalizing the weights to sum to one.
    pub fn new(origin: f64, step: f64, weights: Vec<f64>) -> Result<Self, DistError> {
        if !(step > 0.0) || !step.is_finite() || !origin.is_finite() {
            return Err(DistError::InvalidParams("PMF needs finite origin and step > 0"));
        }
        if weights.is_empty() {
            return Err(DistError::InvalidParams("PMF needs at least one weight"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(DistError::InvalidParams("PMF weights must be finite and >= 0"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(DistError::InvalidParams("PMF weights sum to zero"));
        }
        let mut weights = weights;
        for w in &mut weights {
            *w /= total;
        }
        Ok(Self { origin, step, weights })
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid value of point `i`.
    pub fn value(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.step
    }

    /// Right-continuous step CDF.
    pub fn cdf(&self, t: f64) -> f64 {
        // small forward tolerance so grid values hit their own bin
        let pos = (t - self.origin) / self.step + 1e-9;
        if pos < 0.0 {
            return 0.0;
        }
        let idx = pos as usize;
        if idx + 1 >= self.weights.len() {
            return 1.0;
        }
        self.weights[..=idx].iter().sum::<f64>().min(1.0)
    }

    /// Generalized inverse: smallest grid point with CDF >= p, for p in (0,1].
    pub fn quantile(&self, p: f64) -> Result<f64, DistError> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(DistError::Domain("PMF quantile needs p in (0,1]"));
        }
        let mut acc = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if acc >= p - 1e-12 {
                return Ok(self.value(i));
            }
        }
        Ok(self.value(self.weights.len() - 1))
    }

    pub fn mean(&self) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * self.value(i))
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.weights
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let d = self.value(i) - m;
                w * d * d
            })
            .sum()
    }

    pub fn sd(&self) -> f64 {
        libm::sqrt(self.variance())
    }

    /// Redistributes mass onto a coarser grid with at most `max_bins` points,
    /// splitting each point linearly between its two nearest new grid points.
    /// Mass and mean are conserved.
    pub fn rebin(&self, max_bins: usize) -> Self {
        if self.weights.len() <= max_bins || max_bins < 2 {
            return self.clone();
        }
        let factor = self.weights.len().div_ceil(max_bins);
        let new_step = self.step * factor as f64;
        let new_len = (self.weights.len() - 1) / factor + 2;
        let mut new_w = alloc::vec![0.0; new_len];
        for (i, &w) in self.weights.iter().enumerate() {
            let pos = i as f64 / factor as f64;
            let lo = pos as usize;
            let frac = pos - lo as f64;
            new_w[lo] += w * (1.0 - frac);
            if frac > 0.0 {
                new_w[lo + 1] += w * frac;
            }
        }
        while new_w.len() > 1 && *new_w.last().unwrap() == 0.0 {
            new_w.pop();
        }
        Self {
            origin: self.origin,
            step: new_step,
            weights: new_w,
        }
    }
}

/// Exact discrete convolution of two PMFs on grids with equal step.
pub fn convolve(a: &DiscretePMF, b: &DiscretePMF) -> Result<DiscretePMF, DistError> {
    let scale = a.step.max(b.step);
    if (a.step - b.step).abs() > 1e-12 * scale.max(1.0) {
        return Err(DistError::StepMismatch { a: a.step, b: b.step });
    }
    let weights = if a.len() * b.len() <= DIRECT_CONV_LIMIT {
        let mut out = alloc::vec![0.0; a.len() + b.len() - 1];
        for (i, &wa) in a.weights.iter().enumerate() {
            if wa == 0.0 {
                continue;
            }
            for (j, &wb) in b.weights.iter().enumerate() {
                out[i + j] += wa * wb;
            }
        }
        out
    } else {
        let mut out = crate::fft::convolve_real(&a.weights, &b.weights);
        // FFT round-off can leave tiny negative weights
        for w in &mut out {
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        out
    };
    DiscretePMF::new(a.origin + b.origin, a.step, weights)
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Normal { mu: f64, sigma: f64 },
    Lognormal { mu: f64, sigma: f64, ln_mu: f64, ln_sigma: f64 },
    Weibull { mu: f64, sigma: f64, shape: f64, scale: f64 },
    Empirical(DiscretePMF),
}

/// One leg's travel-time distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelTimeDist {
    kind: Kind,
}

impl TravelTimeDist {
    pub fn normal(mean: f64, sd: f64) -> Result<Self, DistError> {
        check_moments(mean, sd)?;
        Ok(Self {
            kind: Kind::Normal { mu: mean, sigma: sd },
        })
    }

    /// Lognormal with the requested mean and standard deviation
    /// (moment-matched log-scale parameters).
    pub fn lognormal(mean: f64, sd: f64) -> Result<Self, DistError> {
        check_moments(mean, sd)?;
        let cv2 = (sd / mean) * (sd / mean);
        let ln_var = libm::log1p(cv2);
        let ln_mu = libm::log(mean) - 0.5 * ln_var;
        Ok(Self {
            kind: Kind::Lognormal {
                mu: mean,
                sigma: sd,
                ln_mu,
                ln_sigma: libm::sqrt(ln_var),
            },
        })
    }

    /// Weibull with the requested mean and standard deviation. The shape is
    /// solved from the coefficient-of-variation equation by bisection.
    pub fn weibull(mean: f64, sd: f64) -> Result<Self, DistError> {
        check_moments(mean, sd)?;
        let target = libm::log1p((sd / mean) * (sd / mean));
        // log(1 + cv^2(k)) = lgamma(1 + 2/k) - 2 lgamma(1 + 1/k), decreasing in k
        let f = |k: f64| lgamma(1.0 + 2.0 / k) - 2.0 * lgamma(1.0 + 1.0 / k) - target;
        let (mut lo, mut hi) = (0.05_f64, 600.0_f64);
        if f(lo) < 0.0 || f(hi) > 0.0 {
            return Err(DistError::InvalidParams(
                "Weibull moment matching: sd/mean ratio out of supported range",
            ));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi {
                break;
            }
        }
        let shape = 0.5 * (lo + hi);
        let scale = mean / libm::exp(lgamma(1.0 + 1.0 / shape));
        Ok(Self {
            kind: Kind::Weibull { mu: mean, sigma: sd, shape, scale },
        })
    }

    /// Weibull given shape and scale directly.
    pub fn weibull_shape_scale(shape: f64, scale: f64) -> Result<Self, DistError> {
        if !(shape > 0.0 && scale > 0.0) {
            return Err(DistError::InvalidParams("Weibull needs shape > 0 and scale > 0"));
        }
        let g1 = libm::exp(lgamma(1.0 + 1.0 / shape));
        let g2 = libm::exp(lgamma(1.0 + 2.0 / shape));
        let mu = scale * g1;
        let var = scale * scale * (g2 - g1 * g1);
        Ok(Self {
            kind: Kind::Weibull {
                mu,
                sigma: libm::sqrt(var),
                shape,
                scale,
            },
        })
    }

    pub fn empirical(pmf: DiscretePMF) -> Self {
        Self {
            kind: Kind::Empirical(pmf),
        }
    }

    pub fn family(&self) -> Family {
        match self.kind {
            Kind::Normal { .. } => Family::Normal,
            Kind::Lognormal { .. } => Family::Lognormal,
            Kind::Weibull { .. } => Family::Weibull,
            Kind::Empirical(_) => Family::Empirical,
        }
    }

    pub fn mean(&self) -> f64 {
        match &self.kind {
            Kind::Normal { mu, .. }
            | Kind::Lognormal { mu, .. }
            | Kind::Weibull { mu, .. } => *mu,
            Kind::Empirical(pmf) => pmf.mean(),
        }
    }

    pub fn sd(&self) -> f64 {
        match &self.kind {
            Kind::Normal { sigma, .. }
            | Kind::Lognormal { sigma, .. }
            | Kind::Weibull { sigma, .. } => *sigma,
            Kind::Empirical(pmf) => pmf.sd(),
        }
    }

    pub fn variance(&self) -> f64 {
        let s = self.sd();
        s * s
    }

    /// True when a Normal leg carries non-negligible mass on negative times
    /// (sigma >= mean/3). Construction succeeds regardless; callers decide
    /// whether to surface a warning.
    pub fn sigma_caveat(&self) -> bool {
        match self.kind {
            Kind::Normal { mu, sigma } => sigma >= mu / 3.0,
            _ => false,
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Normal { mu, sigma } => math::norm_cdf((t - mu) / sigma),
            Kind::Lognormal { ln_mu, ln_sigma, .. } => {
                if t <= 0.0 {
                    0.0
                } else {
                    math::norm_cdf((libm::log(t) - ln_mu) / ln_sigma)
                }
            }
            Kind::Weibull { shape, scale, .. } => {
                if t <= 0.0 {
                    0.0
                } else {
                    -libm::expm1(-libm::pow(t / scale, *shape))
                }
            }
            Kind::Empirical(pmf) => pmf.cdf(t),
        }
    }

    pub fn ccdf(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Normal { mu, sigma } => math::norm_ccdf((t - mu) / sigma),
            Kind::Lognormal { ln_mu, ln_sigma, .. } => {
                if t <= 0.0 {
                    1.0
                } else {
                    math::norm_ccdf((libm::log(t) - ln_mu) / ln_sigma)
                }
            }
            Kind::Weibull { shape, scale, .. } => {
                if t <= 0.0 {
                    1.0
                } else {
                    libm::exp(-libm::pow(t / scale, *shape))
                }
            }
            Kind::Empirical(pmf) => 1.0 - pmf.cdf(t),
        }
    }

    /// Generalized inverse CDF. For the continuous families this is the
    /// analytic inverse; for Empirical, the smallest grid point with
    /// CDF >= p (p in (0,1]).
    pub fn quantile(&self, p: f64) -> Result<f64, DistError> {
        match &self.kind {
            Kind::Empirical(pmf) => pmf.quantile(p),
            _ => {
                if !(p > 0.0 && p < 1.0) {
                    return Err(DistError::Domain("quantile needs p in (0,1)"));
                }
                Ok(match &self.kind {
                    Kind::Normal { mu, sigma } => mu + sigma * math::norm_quantile(p),
                    Kind::Lognormal { ln_mu, ln_sigma, .. } => {
                        libm::exp(ln_mu + ln_sigma * math::norm_quantile(p))
                    }
                    Kind::Weibull { shape, scale, .. } => {
                        scale * libm::pow(-libm::log1p(-p), 1.0 / shape)
                    }
                    Kind::Empirical(_) => unreachable!(),
                })
            }
        }
    }

    /// Discretizes onto a uniform grid covering `[mu - k*sigma, mu + k*sigma]`
    /// (clipped below at 0), assigning each point the CDF increment over its
    /// bin and renormalizing.
    pub fn discretize(&self, step: f64, half_width_sigmas: f64) -> Result<DiscretePMF, DistError> {
        if !(step > 0.0) {
            return Err(DistError::Domain("discretize needs step > 0"));
        }
        if !(half_width_sigmas > 0.0) {
            return Err(DistError::Domain("discretize needs half_width_sigmas > 0"));
        }
        if let Kind::Empirical(pmf) = &self.kind {
            // already on a grid; resample only if the step differs
            if (pmf.step - step).abs() <= 1e-12 * step.max(1.0) {
                return Ok(pmf.clone());
            }
            let target_bins = ((pmf.len() as f64 * pmf.step / step) as usize).max(2);
            return Ok(pmf.rebin(target_bins));
        }
        let (mu, sigma) = (self.mean(), self.sd());
        let lo = (mu - half_width_sigmas * sigma).max(0.0);
        let hi = mu + half_width_sigmas * sigma;
        let n_points = libm::ceil((hi - lo) / step) as usize + 1;
        let mut weights = Vec::with_capacity(n_points);
        let mut prev = self.cdf(lo - 0.5 * step);
        for i in 0..n_points {
            let upper = lo + (i as f64 + 0.5) * step;
            let c = self.cdf(upper);
            weights.push((c - prev).max(0.0));
            prev = c;
        }
        DiscretePMF::new(lo, step, weights)
    }
}

/// Residual (elapsed-time-conditioned) travel time: the distribution of the
/// remaining time on a leg given that `elapsed` time units have passed.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualDist {
    base: TravelTimeDist,
    elapsed: f64,
    tail: f64,
    as_normal: Option<(f64, f64)>,
}

/// Conditions a leg on `elapsed` time units already spent.
///
/// The remaining time `t` satisfies `ccdf(t) = P(B > t + b) / P(B > b)`.
/// For a Normal base the conditional mean and variance of the *total* leg
/// time are available in closed form via the standard truncated-normal
/// moments and exposed through [`ResidualDist::as_normal`].
pub fn condition_on_elapsed(dist: &TravelTimeDist, elapsed: f64) -> Result<ResidualDist, DistError> {
    if !(elapsed >= 0.0) {
        return Err(DistError::Domain("elapsed time must be >= 0"));
    }
    let tail = dist.ccdf(elapsed);
    if tail <= 1e-12 {
        return Err(DistError::MassExhausted { elapsed });
    }
    let as_normal = match dist.kind {
        Kind::Normal { mu, sigma } => {
            let z = (elapsed - mu) / sigma;
            let h = math::norm_hazard(z);
            let mean = mu + sigma * h;
            let var = sigma * sigma * (1.0 + z * h - h * h);
            Some((mean, var))
        }
        _ => None,
    };
    Ok(ResidualDist {
        base: dist.clone(),
        elapsed,
        tail,
        as_normal,
    })
}

impl ResidualDist {
    pub fn base(&self) -> &TravelTimeDist {
        &self.base
    }

    pub fn elapsed(&self) -> f64 {
        self.elapsed
    }

    /// `(mean, variance)` of the conditional total leg time, when the base
    /// is Normal.
    pub fn as_normal(&self) -> Option<(f64, f64)> {
        self.as_normal
    }

    /// `P(remaining > t)`; equals 1 at `t = 0` by construction.
    pub fn ccdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        (self.base.ccdf(t + self.elapsed) / self.tail).clamp(0.0, 1.0)
    }

    pub fn cdf(&self, t: f64) -> f64 {
        1.0 - self.ccdf(t)
    }

    /// Discretizes the remaining-time distribution onto a grid starting at 0.
    pub fn discretize(&self, step: f64) -> Result<DiscretePMF, DistError> {
        let hi = match self.base.quantile(1.0 - 1e-12) {
            Ok(q) => (q - self.elapsed).max(step),
            Err(_) => {
                // empirical base: use its grid top
                let top = match &self.base.kind {
                    Kind::Empirical(pmf) => pmf.value(pmf.len() - 1),
                    _ => unreachable!(),
                };
                (top - self.elapsed).max(step)
            }
        };
        let n_points = libm::ceil(hi / step) as usize + 1;
        let mut weights = Vec::with_capacity(n_points);
        let mut prev = 0.0;
        for i in 0..n_points {
            let upper = (i as f64 + 0.5) * step;
            let c = self.cdf(upper);
            weights.push((c - prev).max(0.0));
            prev = c;
        }
        DiscretePMF::new(0.0, step, weights)
    }
}

fn check_moments(mean: f64, sd: f64) -> Result<(), DistError> {
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(DistError::InvalidParams("mean must be positive and finite"));
    }
    if !(sd > 0.0 && sd.is_finite()) {
        return Err(DistError::InvalidParams("sd must be positive and finite"));
    }
    Ok(())
}

fn lgamma(x: f64) -> f64 {
    libm::lgamma(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pmf_123() -> DiscretePMF {
        DiscretePMF::new(1.0, 1.0, alloc::vec![0.25, 0.5, 0.25]).unwrap()
    }

    #[test]
    fn cdf_examples() {
        let n = TravelTimeDist::normal(10.0, 2.5).unwrap();
        assert!((n.cdf(10.0) - 0.5).abs() < 1e-15);

        // shape-1 Weibull is exponential; at t = scale the CDF is 1 - 1/e
        let w = TravelTimeDist::weibull_shape_scale(1.0, 7.0).unwrap();
        assert!((w.cdf(7.0) - 0.6321205588285577).abs() < 1e-12);

        assert!((pmf_123().cdf(2.0) - 0.75).abs() < 1e-12);
        assert!((pmf_123().cdf(0.5) - 0.0).abs() < 1e-12);
        assert!((pmf_123().cdf(99.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quantile_examples() {
        let n = TravelTimeDist::normal(10.0, 2.5).unwrap();
        assert!((n.quantile(0.5).unwrap() - 10.0).abs() < 1e-10);
        // high-precision oracle: 10 + 2.5 * Phi^-1(0.2)
        assert!((n.quantile(0.2).unwrap() - 7.8959469160677145).abs() < 1e-10);
        assert_eq!(pmf_123().quantile(0.7).unwrap(), 2.0);
        assert!(n.quantile(0.0).is_err());
        assert!(n.quantile(1.0).is_err());
        assert!(pmf_123().quantile(1.0).is_ok());
    }

    #[test]
    fn moment_matching_roundtrip() {
        for (mean, sd) in [(10.0, 2.5), (3.0, 1.0), (50.0, 20.0), (12.0, 0.5)] {
            let w = TravelTimeDist::weibull(mean, sd).unwrap();
            assert!((w.mean() - mean).abs() / mean < 1e-9, "weibull mean {mean} {sd}");
            assert!((w.sd() - sd).abs() / sd < 1e-9, "weibull sd {mean} {sd}");
            let l = TravelTimeDist::lognormal(mean, sd).unwrap();
            // recompute lognormal moments from its log-scale parameters
            let cv2 = (l.sd() / l.mean()).powi(2);
            assert!((cv2 - (sd / mean).powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn normal_caveat_flag() {
        assert!(!TravelTimeDist::normal(10.0, 2.5).unwrap().sigma_caveat());
        assert!(TravelTimeDist::normal(10.0, 4.0).unwrap().sigma_caveat());
    }

    #[test]
    fn discretize_examples() {
        let n = TravelTimeDist::normal(10.0, 2.5).unwrap();
        let pmf = n.discretize(1.0, 4.0).unwrap();
        assert_eq!(pmf.origin(), 0.0);
        assert_eq!(pmf.value(pmf.len() - 1), 20.0);
        assert!((pmf.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let tight = TravelTimeDist::normal(10.0, 0.01).unwrap();
        let pmf = tight.discretize(1.0, 4.0).unwrap();
        let (idx, w) = pmf
            .weights()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        assert!(*w >= 0.999);
        let v = pmf.value(idx);
        assert!((v - 10.0).abs() <= 0.5 + 1e-9, "bin {v} should contain 10");

        let fine = n.discretize(1e-3, 4.0).unwrap();
        assert!((fine.mean() - 10.0).abs() < 1e-3);
    }

    #[test]
    fn convolve_examples() {
        let coin = DiscretePMF::new(0.0, 1.0, alloc::vec![0.5, 0.5]).unwrap();
        let two = convolve(&coin, &coin).unwrap();
        assert_eq!(two.weights(), &[0.25, 0.5, 0.25]);
        assert_eq!(two.origin(), 0.0);

        let pa = DiscretePMF::new(3.0, 1.0, alloc::vec![1.0]).unwrap();
        let pb = DiscretePMF::new(4.5, 1.0, alloc::vec![1.0]).unwrap();
        let s = convolve(&pa, &pb).unwrap();
        assert_eq!(s.origin(), 7.5);
        assert_eq!(s.weights(), &[1.0]);

        let a = TravelTimeDist::normal(10.0, 2.5)
            .unwrap()
            .discretize(0.01, 4.0)
            .unwrap();
        let b = TravelTimeDist::weibull(8.0, 2.0)
            .unwrap()
            .discretize(0.01, 4.0)
            .unwrap();
        let c = convolve(&a, &b).unwrap();
        assert!((c.mean() - (a.mean() + b.mean())).abs() < 1e-12 * 20.0);

        let mismatched = DiscretePMF::new(0.0, 0.5, alloc::vec![1.0]).unwrap();
        assert!(matches!(
            convolve(&coin, &mismatched),
            Err(DistError::StepMismatch { .. })
        ));
    }

    #[test]
    fn residual_examples() {
        let sigma = 2.5_f64;
        let n = TravelTimeDist::normal(10.0, sigma).unwrap();
        let r = condition_on_elapsed(&n, 10.0).unwrap();
        let (m, v) = r.as_normal().unwrap();
        assert!((m - (10.0 + 0.7978845608028654 * sigma)).abs() < 1e-10);
        assert!((v - 0.36338022763241866 * sigma * sigma).abs() < 1e-10);

        // conditioning an exponential leaves the distribution unchanged
        let e = TravelTimeDist::weibull_shape_scale(1.0, 5.0).unwrap();
        let r = condition_on_elapsed(&e, 3.7).unwrap();
        for t in [0.0, 0.5, 2.0, 8.0, 20.0] {
            assert!((r.ccdf(t) - e.ccdf(t)).abs() < 1e-12, "t={t}");
        }

        // b = 0 on a nonnegative-support distribution is the identity
        let w = TravelTimeDist::weibull(10.0, 2.5).unwrap();
        let r = condition_on_elapsed(&w, 0.0).unwrap();
        for t in [0.0, 1.0, 5.0, 10.0, 15.0] {
            assert!((r.ccdf(t) - w.ccdf(t)).abs() < 1e-12);
        }
        assert!((r.ccdf(0.0) - 1.0).abs() < 1e-15);

        assert!(matches!(
            condition_on_elapsed(&w, 1e6),
            Err(DistError::MassExhausted { .. })
        ));
    }

    #[test]
    fn residual_discretize_matches_ccdf() {
        let n = TravelTimeDist::normal(10.0, 2.5).unwrap();
        let r = condition_on_elapsed(&n, 8.0).unwrap();
        let pmf = r.discretize(0.01).unwrap();
        let (m, v) = r.as_normal().unwrap();
        assert!((pmf.mean() - (m - 8.0)).abs() < 1e-3);
        assert!((pmf.variance() - v).abs() < 1e-2);
    }
}
