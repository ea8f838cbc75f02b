//! Standard-normal helpers shared by every solver in the crate.
//!
//! CDF and complementary CDF go through `erfc`, which is accurate in both
//! tails. The quantile uses a rational initial guess refined with one Halley
//! step against the `erfc`-based CDF, giving close to full f64 precision.

/// 1/sqrt(2*pi)
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const SQRT_2: f64 = core::f64::consts::SQRT_2;

/// Standard normal density.
#[inline]
pub fn norm_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * libm::exp(-0.5 * z * z)
}

/// Standard normal CDF.
#[inline]
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Standard normal complementary CDF, accurate in the upper tail.
#[inline]
pub fn norm_ccdf(z: f64) -> f64 {
    0.5 * libm::erfc(z / SQRT_2)
}

/// Standard normal quantile for p in (0,1).
///
/// Peter Acklam's rational approximation (~1e-9 relative) followed by one
/// Halley refinement step.
pub fn norm_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);

    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_690e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = libm::sqrt(-2.0 * libm::log(1.0 - p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    // Halley refinement: e = Phi(x) - p, u = e / phi(x).
    let e = norm_cdf(x) - p;
    let u = e / norm_pdf(x);
    x - u / (1.0 + 0.5 * x * u)
}

/// Hazard rate phi(z) / (1 - Phi(z)) of the standard normal.
///
/// The direct ratio is fine until `erfc` underflows; past that an asymptotic
/// Mills-ratio expansion takes over.
pub fn norm_hazard(z: f64) -> f64 {
    if z < 30.0 {
        norm_pdf(z) / norm_ccdf(z)
    } else {
        // 1/m(z) with m(z) ~ (1/z)(1 - 1/z^2 + 3/z^4 - 15/z^6 + 105/z^8)
        let w = 1.0 / (z * z);
        z / (1.0 - w * (1.0 - w * (3.0 - w * (15.0 - 105.0 * w))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_known_values() {
        // mpmath, 50 digits
        assert!((norm_quantile(0.2) - -0.8416212335729142).abs() < 1e-13);
        assert!((norm_quantile(0.8) - 0.8416212335729142).abs() < 1e-13);
        assert!(norm_quantile(0.5).abs() < 1e-15);
        assert!((norm_quantile(0.975) - 1.959963984540054).abs() < 1e-12);
    }

    #[test]
    fn cdf_quantile_roundtrip() {
        for i in 1..999 {
            let p = i as f64 / 1000.0;
            let z = norm_quantile(p);
            assert!((norm_cdf(z) - p).abs() < 1e-13, "p={p}");
        }
    }

    #[test]
    fn hazard_matches_reference() {
        // mpmath reference values
        assert!((norm_hazard(-4.0) - 1.3383446446857514e-4).abs() < 1e-16);
        assert!((norm_hazard(0.0) - 0.7978845608028654).abs() < 1e-14);
        assert!((norm_hazard(2.0) - 2.373215532822841).abs() < 1e-13);
        assert!((norm_hazard(6.0) - 6.158482604544599).abs() < 1e-11);
        // asymptotic branch agrees with the direct ratio where both work
        for z in [28.0, 29.5, 30.5, 32.0] {
            let direct = norm_pdf(z) / norm_ccdf(z);
            let w = 1.0 / (z * z);
            let asym = z / (1.0 - w * (1.0 - w * (3.0 - w * (15.0 - 105.0 * w))));
            assert!((direct - asym).abs() / direct < 1e-11, "z={z}");
        }
    }
}
