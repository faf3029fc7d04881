//! Standard normal distribution function and quantile.

use crate::error::{Error, Result};

/// Φ(x).
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Φ⁻¹(p) for p ∈ (0,1): Acklam's rational approximation followed by one Newton step
/// against the erfc-based Φ.
pub fn inv_normal_cdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("normal quantile needs p in (0,1), got {p}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
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
    const D: [f64; 4] = [7.784_695_709_041_462e-3, 3.224_671_290_700_398e-1, 2.445_134_137_142_996, 3.754_408_661_907_416];
    const P_LOW: f64 = 0.024_25;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let density = normal_pdf(x);
    if density > 0.0 {
        Ok(x - (normal_cdf(x) - p) / density)
    } else {
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Φ by composite Simpson integration of the density from 0.
    fn integrated_cdf(x: f64) -> f64 {
        let n = 20_000;
        let h = x / n as f64;
        let mut s = normal_pdf(0.0) + normal_pdf(x);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * normal_pdf(i as f64 * h);
        }
        0.5 + s * h / 3.0
    }

    #[test]
    fn median_and_symmetry() {
        assert_eq!(inv_normal_cdf(0.5).unwrap(), 0.0);
        let a = inv_normal_cdf(0.31).unwrap();
        let b = inv_normal_cdf(0.69).unwrap();
        assert!((a + b).abs() < 1e-12);
    }

    #[test]
    fn quantile_975_matches_integrated_bisection() {
        let (mut lo, mut hi) = (0.0, 5.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if integrated_cdf(mid) < 0.975 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let q = inv_normal_cdf(0.975).unwrap();
        assert!((q - 0.5 * (lo + hi)).abs() < 1e-9);
        assert!((q - 1.959964).abs() < 1e-5);
    }

    #[test]
    fn round_trip_residual() {
        for &p in &[1e-12, 1e-6, 0.001, 0.02, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 0.999999] {
            let x = inv_normal_cdf(p).unwrap();
            assert!((normal_cdf(x) - p).abs() <= 1e-12, "p={p}");
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(inv_normal_cdf(0.0).is_err());
        assert!(inv_normal_cdf(1.0).is_err());
        assert!(inv_normal_cdf(f64::NAN).is_err());
    }
}
