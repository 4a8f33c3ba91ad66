use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;

use super::{binom, pow2, Rational};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderMode {
    /// `A_a(d,k) = A_{a-1}(d,k) - A_{a-1}(d,k+1)` down to `A_0`.
    Recursive,
    /// `2^{-d} Σ_ℓ (-1)^ℓ C(a,ℓ) C(d, n-k-ℓ)`.
    Expanded,
}

fn half_floor(d: i64) -> i64 {
    d.div_euclid(2)
}

fn a0(d: i64, k: i64) -> Rational {
    Rational::new(binom(d, half_floor(d) - k), pow2(d as u64))
}

fn recursive(a: i64, d: i64, k: i64) -> Rational {
    if a == 0 {
        a0(d, k)
    } else {
        recursive(a - 1, d, k) - recursive(a - 1, d, k + 1)
    }
}

pub(crate) fn expanded_unchecked(a: i64, d: i64, k: i64) -> Rational {
    let n = half_floor(d);
    let mut acc = BigInt::zero();
    for l in 0..=a {
        let t = binom(a, l) * binom(d, n - k - l);
        if l.is_odd() {
            acc -= t;
        } else {
            acc += t;
        }
    }
    Rational::new(acc, pow2(d as u64))
}

/// Iterated differences of the central binomial profile, `A_a(d,k)` with
/// `A_0(d,k) = 2^{-d} C(d, ⌊d/2⌋ - k)`. Valid for `⌊d/2⌋-d <= k <= ⌊d/2⌋-a`.
pub fn a_ladder(a: usize, d: usize, k: i64, mode: LadderMode) -> Result<Rational> {
    let (a, d) = (a as i64, d as i64);
    let n = half_floor(d);
    if k < n - d || k > n - a {
        return Err(Error::OutOfRange { index: k, lo: n - d, hi: n - a });
    }
    Ok(match mode {
        LadderMode::Recursive => recursive(a, d, k),
        LadderMode::Expanded => expanded_unchecked(a, d, k),
    })
}

fn check_b_args(d: i64, a: i64) -> Result<()> {
    if d - a - 2 < 0 {
        return Err(Error::OutOfRange { index: a, lo: 0, hi: d - 2 });
    }
    Ok(())
}

/// Coefficient of `b` in the decomposition of `Δ^(a)_{d,b,ReLU}` at fixed
/// lattice index `c`:
/// `B(d,c,a) = (-1)^{d-a+c}/2^d Σ_ℓ (-1)^ℓ C(a,ℓ)[C(d-a-2,c-ℓ-2) + C(d-a-2,c-ℓ-1)]`.
pub fn b_coeff(d: usize, c: i64, a: usize) -> Result<Rational> {
    let (d, a) = (d as i64, a as i64);
    check_b_args(d, a)?;
    let m = d - a - 2;
    let mut acc = BigInt::zero();
    for l in 0..=a {
        let t = binom(a, l) * (binom(m, c - l - 2) + binom(m, c - l - 1));
        if l.is_odd() {
            acc -= t;
        } else {
            acc += t;
        }
    }
    if (d - a + c).is_odd() {
        acc = -acc;
    }
    Ok(Rational::new(acc, pow2(d as u64)))
}

/// The same coefficient through the ladder:
/// `(-1)^{d-a+c}/2^{a+2} (A_a(d-a-2, n-c+2) + A_a(d-a-2, n-c+1))`, `n = ⌊(d-a-2)/2⌋`.
pub fn b_coeff_via_ladder(d: usize, c: i64, a: usize) -> Result<Rational> {
    let (d, a) = (d as i64, a as i64);
    check_b_args(d, a)?;
    let m = d - a - 2;
    let n = half_floor(m);
    let s = expanded_unchecked(a, m, n - c + 2) + expanded_unchecked(a, m, n - c + 1);
    let s = s / Rational::from_integer(pow2(a as u64 + 2));
    Ok(if (d - a + c).is_odd() { -s } else { s })
}
