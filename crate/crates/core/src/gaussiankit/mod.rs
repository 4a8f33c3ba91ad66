//! Scalar Gaussian analysis: density and distribution function, Hermite
//! polynomials, bivariate orthant probabilities and ReLU cross-moments, and
//! alternating binomial sums of Gaussian kernels.

mod alternating;
mod bivariate;
pub mod quad;

use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub(crate) use alternating::{kernel_series_log, RhoLine};
pub use alternating::{alternating_expectation, alternating_expectation_log, AltKernel, AlternatingSpec};
pub use bivariate::{lambda_cdf, relu_cross_moment, BivariateQuery};

use crate::error::{invalid, Result};

/// `1/√(2π)`
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn std_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `Φ(x)` via the complementary error function, accurate in both tails.
pub fn std_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `E ReLU(x + Z) = xΦ(x) + φ(x)`.
pub fn relu_mean(x: f64) -> f64 {
    if x < -30.0 {
        return 0.0;
    }
    x * std_cdf(x) + std_pdf(x)
}

/// Probabilist's Hermite polynomial `H_k(x)`, `k ≤ 200`.
pub fn hermite(k: usize, x: f64) -> Result<f64> {
    if k > 200 {
        return Err(invalid(format!("Hermite degree {k} exceeds 200")));
    }
    let (mut h0, mut h1) = (1.0, x);
    if k == 0 {
        return Ok(h0);
    }
    for j in 1..k {
        let h2 = x * h1 - j as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    Ok(h1)
}

/// Iterator over `u_k(x) = φ(x) H_k(x) / √k!`, which stays bounded for all
/// `k` (no factorial overflow).
#[derive(Debug, Clone)]
pub(crate) struct NormalizedHermite {
    x: f64,
    k: usize,
    prev: f64,
    cur: f64,
}

impl NormalizedHermite {
    pub(crate) fn new(x: f64) -> Self {
        NormalizedHermite { x, k: 0, prev: 0.0, cur: std_pdf(x) }
    }
}

impl Iterator for NormalizedHermite {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let out = self.cur;
        let k = self.k as f64;
        let next = (self.x * self.cur - k.sqrt() * self.prev) / (k + 1.0).sqrt();
        self.prev = self.cur;
        self.cur = next;
        self.k += 1;
        Some(out)
    }
}

/// `P(G₁ ≥ 0, G₂ ≥ 0) = 1/2 − arccos(ρ)/(2π)` for unit Gaussians with
/// correlation `ρ`.
pub fn orthant_centered(rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok(0.5 - rho.acos() / (2.0 * PI))
}

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(invalid(format!("correlation must lie in [-1, 1], got {rho}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn ln_factorial(n: usize) -> f64 {
        (1..=n).map(|k| (k as f64).ln()).sum()
    }

    #[test]
    fn pdf_cdf_basics() {
        assert_eq!(std_cdf(0.0), 0.5);
        assert!((std_pdf(0.0) - 0.398_942_280_4).abs() < 1e-10);
        // Φ(1) = 1/2 + ∫_0^1 φ
        let (v, _) = quad::integrate(std_pdf, 0.0, 1.0, 1e-16, 1e-16);
        assert!(((0.5 + v) / std_cdf(1.0) - 1.0).abs() < 1e-12);
        // far tail against ∫_x^{x+40} φ
        for x in [-8.0, -5.0, -2.5] {
            let (v, _) = quad::integrate(std_pdf, x - 40.0, x, 0.0, 1e-14);
            assert!((std_cdf(x) / v - 1.0).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn hermite_values() {
        assert_eq!(hermite(0, 3.7).unwrap(), 1.0);
        for x in [-2.0, 0.3, 1.7] {
            assert!((hermite(2, x).unwrap() - (x * x - 1.0)).abs() < 1e-14);
        }
        // H_6 = x^6 - 15x^4 + 45x^2 - 15
        let coeffs = [-15.0, 0.0, 45.0, 0.0, -15.0, 0.0, 1.0];
        let x: f64 = 0.5;
        let want: f64 = coeffs.iter().enumerate().map(|(p, c)| c * x.powi(p as i32)).sum();
        assert!((hermite(6, x).unwrap() - want).abs() < 1e-13);
        assert!(hermite(201, 0.0).is_err());
    }

    #[test]
    fn normalized_matches_direct() {
        for x in [-3.0, -0.4, 0.0, 1.1, 4.0] {
            for (k, u) in NormalizedHermite::new(x).take(40).enumerate() {
                let direct = std_pdf(x) * hermite(k, x).unwrap() / ln_factorial(k).mul_add(0.5, 0.0).exp();
                assert!((u - direct).abs() <= 1e-12 * (1.0 + direct.abs()), "x={x} k={k}");
            }
        }
    }

    #[test]
    fn hermite_envelope() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        use rand::Rng;
        for _ in 0..1000 {
            let a: f64 = rng.gen_range(-10.0..10.0);
            for l in 0..=30 {
                let v = (std_pdf(a) * hermite(l, a).unwrap()).abs();
                assert!(v <= (0.5 * ln_factorial(l)).exp() * (1.0 + 1e-12), "a={a} l={l}");
            }
        }
    }

    #[test]
    fn hermite_orthogonality_mc() {
        let rho = 0.6;
        let n = 200_000;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let s = (1.0 - rho * rho as f64).sqrt();
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                let w: f64 = StandardNormal.sample(&mut rng);
                (z, rho * z + s * w)
            })
            .collect();
        for m in 0..=5 {
            for k in 0..=5 {
                let vals: Vec<f64> = pairs.iter().map(|&(g, h)| hermite(m, g).unwrap() * hermite(k, h).unwrap()).collect();
                let mean = vals.iter().sum::<f64>() / n as f64;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                let se = (var / n as f64).sqrt();
                let want = if m == k { ln_factorial(m).exp() * rho.powi(m as i32) } else { 0.0 };
                assert!((mean - want).abs() <= 4.0 * se + 1e-12, "m={m} k={k}: {mean} vs {want} (se {se})");
            }
        }
    }

    #[test]
    fn orthant_values() {
        assert_eq!(orthant_centered(0.0).unwrap(), 0.25);
        assert_eq!(orthant_centered(1.0).unwrap(), 0.5);
        assert_eq!(orthant_centered(-1.0).unwrap(), 0.0);
        assert!(orthant_centered(1.01).is_err());
    }

    proptest! {
        #[test]
        fn cdf_symmetry_and_monotone(x in -8.0f64..8.0, dx in 1e-6f64..1.0) {
            prop_assert!((std_cdf(-x) - (1.0 - std_cdf(x))).abs() <= 1e-15);
            prop_assert!(std_cdf(x + dx) >= std_cdf(x));
        }
    }
}
