//! Exact binomial combinatorics and the Δ family.
//!
//! Everything here is computed with big integers or big rationals and only
//! converted to `f64` at the boundary; the `2^-d` factors make float
//! arithmetic useless beyond a few dozen dimensions.

mod delta;
mod ladder;
mod logspace;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{invalid, Result};
use crate::Scalar;

pub use delta::{
    almost_full_bias_pair, almost_full_delta_abs, delta, delta_oracle, delta_rational,
    full_parity_bias, DeltaQuery, OracleMode,
};
pub use ladder::{a_ladder, b_coeff, b_coeff_via_ladder, LadderMode};
pub use logspace::{delta_log, LogValue};

pub type Rational = BigRational;

/// Activation applied to the hidden pre-activation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Relu,
    /// `max(0, min(x, clip))`
    ClippedRelu(f64),
    /// `1(x >= 0)`
    Threshold,
}

impl Activation {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Activation::ClippedRelu(c) if !(c > 0.0 && c.is_finite()) => {
                Err(invalid(format!("clip must be positive and finite, got {c}")))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn eval<T: Scalar>(&self, x: T) -> T {
        match *self {
            Activation::Relu => x.max(T::zero()),
            Activation::ClippedRelu(c) => x.max(T::zero()).min(T::of(c)),
            Activation::Threshold => {
                if x >= T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }

    /// Derivative with the closed-indicator convention: ReLU'(0) = 1.
    /// The clipped variant has derivative 1 on `[0, clip)`.
    #[inline]
    pub fn deriv<T: Scalar>(&self, x: T) -> T {
        match *self {
            Activation::Relu => {
                if x >= T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::ClippedRelu(c) => {
                if x >= T::zero() && x < T::of(c) {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Threshold => T::zero(),
        }
    }

    /// Positive homogeneity degree, when there is one.
    pub fn homogeneity(&self) -> Option<u32> {
        match self {
            Activation::Relu => Some(1),
            Activation::Threshold => Some(0),
            Activation::ClippedRelu(_) => None,
        }
    }
}

/// Exact `C(n, k)`, zero outside `0 <= k <= n`.
pub fn binom(n: i64, k: i64) -> BigInt {
    if n < 0 || k < 0 || k > n {
        return BigInt::zero();
    }
    num_integer::binomial(BigInt::from(n), BigInt::from(k.min(n - k)))
}

fn sign_pow(k: i64) -> BigInt {
    if k.is_even() {
        BigInt::one()
    } else {
        -BigInt::one()
    }
}

/// Direct sum `Σ_{k=c}^{c_hi} (-1)^k C(d,k)`, or with an extra factor `k`
/// when `weighted`.
pub fn alt_binom_sum(d: i64, c: i64, c_hi: i64, weighted: bool) -> Result<BigInt> {
    check_alt_range(d, c, c_hi)?;
    let mut acc = BigInt::zero();
    for k in c..=c_hi {
        let mut t = binom(d, k);
        if weighted {
            t *= k;
        }
        if k.is_odd() {
            acc -= t;
        } else {
            acc += t;
        }
    }
    Ok(acc)
}

/// Closed forms for the same sums:
///
/// ```text
/// Σ_{c}^{d}  (-1)^k C(d,k)   = (-1)^c C(d-1,c-1)
/// Σ_{c}^{d}  (-1)^k k C(d,k) = (-1)^c d C(d-2,c-2)
/// ```
///
/// and for an upper limit `c_hi < d` the tail `Σ_{c_hi+1}^{d}` is removed.
pub fn alt_binom_closed(d: i64, c: i64, c_hi: i64, weighted: bool) -> Result<BigInt> {
    check_alt_range(d, c, c_hi)?;
    let head = if weighted {
        sign_pow(c) * binom(d - 2, c - 2) * d
    } else {
        sign_pow(c) * binom(d - 1, c - 1)
    };
    if c_hi == d {
        return Ok(head);
    }
    let tail = if weighted {
        sign_pow(c_hi) * binom(d - 2, c_hi - 1) * d
    } else {
        sign_pow(c_hi) * binom(d - 1, c_hi)
    };
    Ok(head + tail)
}

fn check_alt_range(d: i64, c: i64, c_hi: i64) -> Result<()> {
    if c <= 1 {
        return Err(invalid(format!("lower limit c must exceed 1, got {c}")));
    }
    if c > c_hi || c_hi > d {
        return Err(invalid(format!("need c <= c_hi <= d, got c={c}, c_hi={c_hi}, d={d}")));
    }
    Ok(())
}

/// `Σ_{k=0}^{d} (-1)^k C(d,k)`; zero for every `d >= 1`.
pub fn full_alt_sum(d: i64) -> BigInt {
    (0..=d).map(|k| sign_pow(k) * binom(d, k)).sum()
}

/// `Σ_{k=0}^{d} (-1)^k C(d,k) k^n`, which vanishes whenever `n < d`.
pub fn alternating_moment(d: i64, n: u32) -> BigInt {
    (0..=d)
        .map(|k| sign_pow(k) * binom(d, k) * BigInt::from(k).pow(n))
        .sum()
}

/// Exact rational from an `f64` (every finite double is a dyadic rational).
pub fn rational_from_f64(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| invalid(format!("non-finite value {x}")))
}

/// Nearest `f64` to an exact rational. Underflows to a signed zero and
/// overflows to infinity like an ordinary rounding would.
pub fn rational_to_f64(r: &Rational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    // Scale the quotient to 64 significant bits, then let the hardware round.
    let neg = r.is_negative();
    let (n, d) = (r.numer().abs(), r.denom().clone());
    let shift = n.bits() as i64 - d.bits() as i64 - 64;
    let q = if shift >= 0 {
        n / (d << shift as usize)
    } else {
        (n << (-shift) as usize) / d
    };
    let v = libm::ldexp(q.to_f64().unwrap_or(f64::NAN), shift as i32);
    if neg {
        -v
    } else {
        v
    }
}

pub(crate) fn pow2(e: u64) -> BigInt {
    BigInt::one() << e as usize
}
