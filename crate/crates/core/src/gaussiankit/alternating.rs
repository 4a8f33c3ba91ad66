//! `Σ_k 2^{-d} C(d,k) (-1)^k K(ρ_k)` with `ρ_k = (1-2k/d)α + β`, evaluated in
//! multiple precision so that exponentially small values survive the
//! cancellation.

use std::f64::consts::LN_2;

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use super::{orthant_centered, relu_cross_moment, BivariateQuery};
use crate::error::{invalid, Error, Result};
use crate::exactcomb::{binom, LogValue};

pub const MAX_D: usize = 5000;
const RM: RoundingMode = RoundingMode::ToEven;

/// Kernel applied to the centered pair: `P(G₁ ≥ 0, G₂ ≥ 0)` or
/// `E[ReLU(G₁) ReLU(G₂)]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AltKernel {
    Step,
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlternatingSpec {
    pub d: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl AlternatingSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d > MAX_D {
            return Err(Error::DimensionTooLarge { what: "alternating expectation", d: self.d, limit: MAX_D });
        }
        if !(self.alpha >= 0.0) || !self.beta.is_finite() || self.alpha + self.beta.abs() > 1.0 {
            return Err(invalid(format!("need alpha >= 0 and alpha + |beta| <= 1, got ({}, {})", self.alpha, self.beta)));
        }
        Ok(())
    }
}

impl AltKernel {
    fn eval(self, rho: f64) -> Result<f64> {
        match self {
            AltKernel::Step => orthant_centered(rho),
            AltKernel::Relu => relu_cross_moment(BivariateQuery::new(0.0, 0.0, rho)),
        }
    }
}

/// Value as an `f64`; underflows to 0 below `~1e-308` (see
/// [`alternating_expectation_log`]).
pub fn alternating_expectation(spec: &AlternatingSpec, kernel: AltKernel) -> Result<f64> {
    alternating_expectation_log(spec, kernel).map(LogValue::to_f64)
}

/// Value in sign/log form. Values that stay below the resolution of the
/// largest working precision are reported as zero.
pub fn alternating_expectation_log(spec: &AlternatingSpec, kernel: AltKernel) -> Result<LogValue> {
    spec.validate()?;
    let d = spec.d;
    if spec.alpha == 0.0 && d > 0 {
        return Ok(LogValue::ZERO);
    }
    let coeffs: Vec<BigInt> = (0..=d)
        .map(|k| {
            let c = binom(d as i64, k as i64);
            if k % 2 == 0 { c } else { -c }
        })
        .collect();
    let v = kernel_series_log(&coeffs, RhoLine::Affine { alpha: spec.alpha, beta: spec.beta }, kernel)?;
    Ok(shift_ln(v, -(d as f64) * LN_2))
}

pub(crate) fn shift_ln(v: LogValue, by: f64) -> LogValue {
    if v.sign == 0 {
        v
    } else {
        LogValue { sign: v.sign, ln_abs: v.ln_abs + by }
    }
}

/// `Σ_j c_j K(ρ_j)` with `ρ_j = α(d-2j)/d + β`, `d = coeffs.len() - 1`,
/// evaluated in multiple precision with doubling until the result clears
/// its rounding bound.
///
/// The kernel is split as `κ₀ + κ₁ρ + g(ρ)/(2π)` with `g` odd (step) or even
/// (ReLU). When `β = 0` and `c_{d-j} = ±c_j` the `g` part cancels exactly for
/// one of the two signs and is skipped.
pub(crate) fn kernel_series_log(coeffs: &[BigInt], line: RhoLine, kernel: AltKernel) -> Result<LogValue> {
    if coeffs.is_empty() {
        return Err(invalid("empty coefficient list"));
    }
    let (alpha, beta) = line.approx();
    if !(alpha >= 0.0) || !beta.is_finite() || alpha + beta.abs() > 1.0 + 1e-15 {
        return Err(invalid(format!("need alpha >= 0 and alpha + |beta| <= 1, got ({alpha}, {beta})")));
    }
    let d = coeffs.len() - 1;
    if d == 0 {
        let k = kernel.eval((alpha + beta).min(1.0))?;
        return Ok(LogValue::from_f64(coeffs[0].to_f64().unwrap_or(f64::NAN) * k));
    }
    let mirror = |sign: i32| (0..=d).all(|j| if sign > 0 { coeffs[d - j] == coeffs[j] } else { coeffs[d - j] == -&coeffs[j] });
    let skip_g = beta == 0.0
        && match kernel {
            AltKernel::Step => mirror(1),
            AltKernel::Relu => mirror(-1),
        };
    let sum_c: BigInt = coeffs.iter().sum();
    let sum_lin: BigInt = coeffs.iter().enumerate().map(|(j, c)| c * (d as i64 - 2 * j as i64)).sum();
    let (k0, k1) = match kernel {
        AltKernel::Step => (1u64, 0u64),
        AltKernel::Relu => (0, 1),
    };
    if skip_g && (k0 == 0 || sum_c.is_zero()) && (k1 == 0 || (sum_lin.is_zero() && (beta == 0.0 || sum_c.is_zero()))) {
        return Ok(LogValue::ZERO);
    }
    let norm: BigInt = coeffs.iter().map(|c| c.abs()).sum();
    let nb = norm.bits() as usize;
    let mut consts = Consts::new().map_err(|e| invalid(format!("multiple-precision setup failed: {e:?}")))?;
    let cap = 16 * d + 1024 + 2 * nb;
    let mut p = 2 * nb + d + 128;
    loop {
        let s = mp_series(coeffs, line, kernel, skip_g, (k0, k1), (&sum_c, &sum_lin), p, &mut consts);
        let ln_err = ((d + 1) as f64).ln() + (nb as f64 + 8.0 - p as f64) * LN_2;
        let v = to_log(&s);
        if v.sign != 0 && v.ln_abs > ln_err + 40.0 * LN_2 {
            return Ok(v);
        }
        if p >= cap {
            return Ok(LogValue::ZERO);
        }
        p = (2 * p).min(cap);
    }
}

/// Correlation as a function of `u = (d−2j)/d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum RhoLine {
    /// `αu + β`
    Affine { alpha: f64, beta: f64 },
    /// `(u + σ²)/(1 + σ²)`, kept in this form so that `u = 1` maps to exactly 1
    BiasShifted { sigma: f64 },
}

impl RhoLine {
    fn approx(self) -> (f64, f64) {
        match self {
            RhoLine::Affine { alpha, beta } => (alpha, beta),
            RhoLine::BiasShifted { sigma } => {
                let v = 1.0 + sigma * sigma;
                (1.0 / v, sigma * sigma / v)
            }
        }
    }

    fn coefficients(self, p: usize) -> (BigFloat, BigFloat) {
        match self {
            RhoLine::Affine { alpha, beta } => (BigFloat::from_f64(alpha, p), BigFloat::from_f64(beta, p)),
            RhoLine::BiasShifted { sigma } => {
                let s = BigFloat::from_f64(sigma, p);
                let s2 = s.mul(&s, p, RM);
                let v = BigFloat::from_u64(1, p).add(&s2, p, RM);
                (BigFloat::from_u64(1, p).div(&v, p, RM), s2.div(&v, p, RM))
            }
        }
    }

    fn at(self, u: &BigFloat, p: usize) -> BigFloat {
        match self {
            RhoLine::Affine { alpha, beta } => {
                u.mul(&BigFloat::from_f64(alpha, p), p, RM).add(&BigFloat::from_f64(beta, p), p, RM)
            }
            RhoLine::BiasShifted { sigma } => {
                let s = BigFloat::from_f64(sigma, p);
                let s2 = s.mul(&s, p, RM);
                let v = BigFloat::from_u64(1, p).add(&s2, p, RM);
                u.add(&s2, p, RM).div(&v, p, RM)
            }
        }
    }
}

fn bigint_to_mp(c: &BigInt, p: usize) -> BigFloat {
    let (sign, digits) = c.to_u64_digits();
    let bp = p.max(64 * digits.len() + 64);
    let base = BigFloat::from_u64(1u64 << 32, bp).mul(&BigFloat::from_u64(1u64 << 32, bp), bp, RM);
    let mut acc = BigFloat::from_u64(0, bp);
    for &w in digits.iter().rev() {
        acc = acc.mul(&base, bp, RM).add(&BigFloat::from_u64(w, bp), bp, RM);
    }
    if sign == num_bigint::Sign::Minus {
        acc.neg()
    } else {
        acc
    }
}

#[allow(clippy::too_many_arguments)]
fn mp_series(
    coeffs: &[BigInt],
    line: RhoLine,
    kernel: AltKernel,
    skip_g: bool,
    (k0, k1): (u64, u64),
    (sum_c, sum_lin): (&BigInt, &BigInt),
    p: usize,
    consts: &mut Consts,
) -> BigFloat {
    let d = coeffs.len() - 1;
    let dd = BigFloat::from_u64(d as u64, p);
    let one = BigFloat::from_u64(1, p);
    let (alpha_mp, beta_mp) = line.coefficients(p);
    // κ₀ Σc + κ₁ (α Σc(d-2j)/d + β Σc)
    let mut total = BigFloat::from_u64(0, p);
    if k0 > 0 {
        total = bigint_to_mp(sum_c, p).div(&BigFloat::from_u64(4, p), p, RM);
    }
    if k1 > 0 {
        let lin = bigint_to_mp(sum_lin, p)
            .div(&dd, p, RM)
            .mul(&alpha_mp, p, RM)
            .add(&bigint_to_mp(sum_c, p).mul(&beta_mp, p, RM), p, RM);
        total = total.add(&lin.div(&BigFloat::from_u64(4, p), p, RM), p, RM);
    }
    if skip_g {
        return total;
    }
    let mut g_sum = BigFloat::from_u64(0, p);
    for (j, c) in coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let num = BigFloat::from_i64(d as i64 - 2 * j as i64, p);
        let mut rho = line.at(&num.div(&dd, p, RM), p);
        // α + |β| = 1 can round past the boundary
        if rho > one {
            rho = one.clone();
        } else if rho < one.neg() {
            rho = one.neg();
        }
        let asin = rho.asin(p, RM, consts);
        let g = match kernel {
            AltKernel::Step => asin,
            AltKernel::Relu => {
                let c = one.sub(&rho.mul(&rho, p, RM), p, RM).sqrt(p, RM);
                c.add(&rho.mul(&asin, p, RM), p, RM)
            }
        };
        g_sum = g_sum.add(&bigint_to_mp(c, p).mul(&g, p, RM), p, RM);
    }
    let two_pi = consts.pi(p, RM).mul(&BigFloat::from_u64(2, p), p, RM);
    total.add(&g_sum.div(&two_pi, p, RM), p, RM)
}

fn to_log(x: &BigFloat) -> LogValue {
    match x.as_raw_parts() {
        Some((m, _, sign, e, _)) if !x.is_zero() => {
            let top = *m.last().expect("nonempty mantissa") as f64 / 2f64.powi(64);
            LogValue {
                sign: if sign == Sign::Neg { -1 } else { 1 },
                ln_abs: top.ln() + f64::from(e) * LN_2,
            }
        }
        _ => LogValue::ZERO,
    }
}
