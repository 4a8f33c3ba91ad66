use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{binom, rational_from_f64, Activation, DeltaQuery, Rational};
use crate::error::{invalid, Error, Result};

/// A real number stored as sign and natural log of its magnitude, for values
/// far below the `f64` range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    /// -1, 0 or +1
    pub sign: i8,
    /// `ln |x|`; `-inf` when `sign == 0`
    pub ln_abs: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue { sign: 0, ln_abs: f64::NEG_INFINITY };

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogValue { sign: if x > 0.0 { 1 } else { -1 }, ln_abs: x.abs().ln() }
        }
    }

    pub fn to_f64(self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * self.ln_abs.exp()
        }
    }

    /// Sum of two values, exact in the sign and accurate to a few ulps in
    /// the logarithm away from cancellation.
    pub fn add(self, other: LogValue) -> LogValue {
        if self.sign == 0 {
            return other;
        }
        if other.sign == 0 {
            return self;
        }
        let (hi, lo) = if self.ln_abs >= other.ln_abs { (self, other) } else { (other, self) };
        let r = (lo.ln_abs - hi.ln_abs).exp();
        if hi.sign == lo.sign {
            LogValue { sign: hi.sign, ln_abs: hi.ln_abs + r.ln_1p() }
        } else if r == 1.0 {
            LogValue::ZERO
        } else {
            LogValue { sign: hi.sign, ln_abs: hi.ln_abs + (-r).ln_1p() }
        }
    }

    /// Product with a finite `f64`.
    pub fn scale(self, f: f64) -> LogValue {
        if self.sign == 0 || f == 0.0 {
            return LogValue::ZERO;
        }
        let sign = if f > 0.0 { self.sign } else { -self.sign };
        LogValue { sign, ln_abs: self.ln_abs + f.abs().ln() }
    }

    pub fn log10_abs(self) -> f64 {
        self.ln_abs / std::f64::consts::LN_10
    }
}

#[cfg(test)]
pub(crate) fn ln_binom(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// Row of `C(n,k)/2^n` for `k = 0..=n`, by halving Pascal's rule; every
/// entry carries at most `n` roundings.
pub(crate) fn binom_pmf_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    for i in 1..=n {
        let mut next = vec![0.0; i + 1];
        next[0] = row[0] * 0.5;
        next[i] = row[i - 1] * 0.5;
        for k in 1..i {
            next[k] = (row[k - 1] + row[k]) * 0.5;
        }
        row = next;
    }
    row
}

/// `ln C(n,k)` as a sum of logs of consecutive ratios; more accurate than
/// differences of `lgamma` values near `n ~ 10^3`.
fn ln_binom_sum(n: i64, k: i64) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64 / (i + 1) as f64).ln()).sum()
}

/// Accumulates `Σ coef·C(m, j)` exactly, relative to `C(m, j0)`; the ratios
/// `C(m,j)/C(m,j0)` are short products of small rationals.
struct RelativeBinomSum {
    m: i64,
    j0: i64,
    acc: Rational,
}

impl RelativeBinomSum {
    fn new(m: i64, j0: i64) -> Self {
        Self { m, j0: j0.clamp(0, m), acc: Rational::zero() }
    }

    fn ratio(&self, j: i64) -> Rational {
        let int = |x: i64| Rational::from_integer(BigInt::from(x));
        if j < 0 || j > self.m {
            return Rational::zero();
        }
        let mut r = Rational::one();
        if j > self.j0 {
            for i in self.j0..j {
                r = r * int(self.m - i) / int(i + 1);
            }
        } else {
            for i in j..self.j0 {
                r = r * int(i + 1) / int(self.m - i);
            }
        }
        r
    }

    fn add(&mut self, coef: Rational, j: i64) {
        let t = coef * self.ratio(j);
        self.acc += t;
    }
}

fn par(e: i64) -> Rational {
    if e.rem_euclid(2) == 1 {
        -Rational::one()
    } else {
        Rational::one()
    }
}

/// Δ in log space. Same formula as [`super::delta`], but all binomials are
/// carried relative to one reference coefficient `C(d-a-2, j0)`: the
/// cancelling part is a short exact sum of small rationals and only the
/// reference enters through logarithms. Cost is `O(d)` float operations
/// plus `O(a^2)` small-rational ones; relative accuracy is about `1e-12`.
pub fn delta_log(q: &DeltaQuery) -> Result<LogValue> {
    q.validate()?;
    let (d, a) = (q.d as i64, q.a as i64);
    if d - a < 2 {
        return Err(invalid(format!("closed form needs d - a >= 2, got d={d}, a={a}")));
    }
    let clip = match q.act {
        Activation::Relu => None,
        Activation::ClippedRelu(k) => Some(rational_from_f64(k)?),
        Activation::Threshold => return Err(Error::NoClosedForm("threshold activation")),
    };
    let dd = d - a;
    let m = dd - 2;
    let ddr = Rational::from_integer(BigInt::from(dd));
    let two = Rational::from_integer(BigInt::from(2));
    let ceil = |r: Rational| r.ceil().to_integer().to_i64().expect("small index");
    let floor = |r: Rational| r.floor().to_integer().to_i64().expect("small index");
    let b0 = rational_from_f64(q.b)? - Rational::from_integer(BigInt::from(a));
    let mut sum = RelativeBinomSum::new(m, ceil((&ddr - &b0) / &two) - 1);
    for l in 0..=a {
        let w = Rational::from_integer(binom(a, l));
        let b = &b0 + Rational::from_integer(BigInt::from(2 * l));
        let c = ceil((&ddr - &b) / &two);
        let s = par(dd + c) * &w;
        sum.add(&s * (&ddr + &b), c - 2);
        sum.add(-&s * (&ddr - &b), c - 1);
        if let Some(k) = &clip {
            let cp = floor((&ddr - &b + k) / &two);
            let s = par(dd + cp) * &w;
            sum.add(&s * (&ddr + &b - k), cp - 1);
            sum.add(-&s * (&ddr - &b + k), cp);
        }
    }
    if sum.acc.is_zero() {
        return Ok(LogValue::ZERO);
    }
    let ln_acc = ln_abs_rational(&sum.acc);
    let ln_abs = ln_acc + ln_binom_sum(m, sum.j0) - (d as f64) * std::f64::consts::LN_2;
    let sign = if sum.acc.is_negative() { -1 } else { 1 };
    Ok(LogValue { sign, ln_abs })
}

fn ln_abs_rational(r: &Rational) -> f64 {
    // numerator and denominator stay small, but go through bit lengths anyway
    let ln_big = |x: &BigInt| {
        let bits = x.bits() as i64;
        let shift = (bits - 60).max(0);
        let top = (x.abs() >> shift as usize).to_f64().expect("fits");
        top.ln() + shift as f64 * std::f64::consts::LN_2
    };
    ln_big(r.numer()) - ln_big(r.denom())
}
