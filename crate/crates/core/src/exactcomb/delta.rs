use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use super::{binom, pow2, rational_from_f64, rational_to_f64, Activation, Rational};
use crate::error::{invalid, Error, Result};
use crate::Scalar;

/// Arguments of `Δ^(a)_{d,b,σ} = E_x[(-1)^{(d-a-Σ_{j≤d-a} x_j)/2} σ(Σ_j x_j + b)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaQuery {
    pub d: usize,
    pub a: usize,
    pub b: f64,
    pub act: Activation,
}

impl DeltaQuery {
    pub fn new(d: usize, a: usize, b: f64, act: Activation) -> Self {
        Self { d, a, b, act }
    }

    pub fn validate(&self) -> Result<()> {
        self.act.validate()?;
        if self.d < 2 {
            return Err(invalid(format!("d must be at least 2, got {}", self.d)));
        }
        if self.a > self.d {
            return Err(invalid(format!("a={} exceeds d={}", self.a, self.d)));
        }
        if self.d - self.a < 1 {
            return Err(invalid("d - a must be at least 1"));
        }
        if !self.b.is_finite() {
            return Err(invalid("bias must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    /// Sum the definition over all `2^d` inputs.
    Enumerate,
    /// Sum over the two partial Hamming weights with binomial weights.
    Binomial,
}

/// Largest dimension accepted by [`OracleMode::Enumerate`].
pub const ENUMERATE_MAX_D: usize = 22;

fn ceil_rat(r: &Rational) -> i64 {
    r.ceil().to_integer().to_i64().expect("index fits in i64")
}

fn floor_rat(r: &Rational) -> i64 {
    r.floor().to_integer().to_i64().expect("index fits in i64")
}

fn signed(r: Rational, e: i64) -> Rational {
    if e.is_odd() {
        -r
    } else {
        r
    }
}

/// `Δ^(0)_{d,b,ReLU} = (-1)^{d+c}/2^d [(d+b) C(d-2,c-2) - (d-b) C(d-2,c-1)]`
/// with `c = ceil((d-b)/2)`.
fn relu_delta0(d: i64, b: &Rational) -> Rational {
    let dr = Rational::from_integer(BigInt::from(d));
    let c = ceil_rat(&((&dr - b) / Rational::from_integer(BigInt::from(2))));
    let t = (&dr + b) * Rational::from_integer(binom(d - 2, c - 2))
        - (&dr - b) * Rational::from_integer(binom(d - 2, c - 1));
    signed(t / Rational::from_integer(pow2(d as u64)), d + c)
}

/// Correction turning the ReLU value into the clipped one; with
/// `c' = floor((d-b+κ)/2)` it reads
/// `(-1)^{d+c'}/2^d [(d+b-κ) C(d-2,c'-1) - (d-b+κ) C(d-2,c')]`.
fn clip_correction(d: i64, b: &Rational, clip: &Rational) -> Rational {
    let dr = Rational::from_integer(BigInt::from(d));
    let cp = floor_rat(&((&dr - b + clip) / Rational::from_integer(BigInt::from(2))));
    let t = (&dr + b - clip) * Rational::from_integer(binom(d - 2, cp - 1))
        - (&dr - b + clip) * Rational::from_integer(binom(d - 2, cp));
    signed(t / Rational::from_integer(pow2(d as u64)), d + cp)
}

fn delta0(d: i64, b: &Rational, act: &Activation) -> Result<Rational> {
    match act {
        Activation::Relu => Ok(relu_delta0(d, b)),
        Activation::ClippedRelu(k) => {
            let clip = rational_from_f64(*k)?;
            Ok(relu_delta0(d, b) + clip_correction(d, b, &clip))
        }
        Activation::Threshold => Err(Error::NoClosedForm("threshold activation")),
    }
}

/// Exact Δ as a rational. For `a > 0` the value is the binomial mixture
/// `Σ_ℓ C(a,ℓ)/2^a Δ^(0)_{d-a, b-a+2ℓ}`.
pub fn delta_rational(q: &DeltaQuery) -> Result<Rational> {
    q.validate()?;
    let (d, a) = (q.d as i64, q.a as i64);
    if d - a < 2 {
        return Err(invalid(format!("closed form needs d - a >= 2, got d={d}, a={a}")));
    }
    let b = rational_from_f64(q.b)?;
    let mut acc = Rational::zero();
    for l in 0..=a {
        let shift = Rational::from_integer(BigInt::from(2 * l - a));
        let term = delta0(d - a, &(&b + shift), &q.act)?;
        acc += term * Rational::from_integer(binom(a, l));
    }
    Ok(acc / Rational::from_integer(pow2(a as u64)))
}

/// Δ via the exact closed form, rounded once to `f64`.
pub fn delta(q: &DeltaQuery) -> Result<f64> {
    delta_rational(q).map(|r| rational_to_f64(&r))
}

/// Independent evaluation straight from the definition.
pub fn delta_oracle<T: Scalar>(q: &DeltaQuery, mode: OracleMode) -> Result<T> {
    q.validate()?;
    let (d, a) = (q.d, q.a);
    let b = T::of(q.b);
    match mode {
        OracleMode::Enumerate => {
            if d > ENUMERATE_MAX_D {
                return Err(Error::DimensionTooLarge { what: "enumeration", d, limit: ENUMERATE_MAX_D });
            }
            let head_mask = (1u64 << (d - a)) - 1;
            let mut acc = T::zero();
            // bit i set means x_i = -1
            for mask in 0u64..(1u64 << d) {
                let sum = d as i64 - 2 * mask.count_ones() as i64;
                let v = q.act.eval(T::of(sum as f64) + b);
                if (mask & head_mask).count_ones() % 2 == 1 {
                    acc -= v;
                } else {
                    acc += v;
                }
            }
            Ok(acc / T::of(2f64.powi(d as i32)))
        }
        OracleMode::Binomial => {
            let head = super::logspace::binom_pmf_row(d - a);
            let tail = super::logspace::binom_pmf_row(a);
            let mut acc = T::zero();
            for (k1, &p1) in head.iter().enumerate() {
                let mut inner = T::zero();
                for (k2, &p2) in tail.iter().enumerate() {
                    let sum = d as f64 - 2.0 * (k1 + k2) as f64;
                    inner += T::of(p2) * q.act.eval(T::of(sum) + b);
                }
                let t = T::of(p1) * inner;
                acc = if k1 % 2 == 1 { acc - t } else { acc + t };
            }
            Ok(acc)
        }
    }
}

/// Bias used for the full parity: `0` for even `d`, `-1` for odd `d`.
pub fn full_parity_bias(d: usize) -> f64 {
    if d.is_multiple_of(2) {
        0.0
    } else {
        -1.0
    }
}

/// The two candidate biases `{a+2, a+2.1}` for almost-full parities; each
/// neuron draws one of them with probability 1/2. Whenever Δ is tiny at
/// `a+2` it is not tiny at `a+2.1`, because the two values share the
/// lattice index `c` and differ by `0.1·B(d,c,a)`.
pub fn almost_full_bias_pair(a: usize) -> [f64; 2] {
    [a as f64 + 2.0, a as f64 + 2.1]
}

/// Simplified `|Δ^(a)_{d,b,ReLU}|` for `a ∈ {1, 2}` at `b = -2` (even `d`)
/// or `b = -1` (odd `d`).
pub fn almost_full_delta_abs(a: usize, d: usize) -> Result<Rational> {
    let di = d as i64;
    let r = |n: i64| Rational::from_integer(BigInt::from(n));
    let two_d = Rational::from_integer(pow2(d as u64));
    match (a, d.is_multiple_of(2)) {
        (1, true) if d >= 4 => {
            Ok(r(2) * Rational::from_integer(binom(di - 1, di / 2)) / (two_d * r(di - 1)))
        }
        (1, false) if d >= 3 => {
            Ok(Rational::from_integer(binom(di - 1, (di - 1) / 2)) / (two_d * r(di - 2)))
        }
        (2, true) if d >= 4 => {
            let num = r(2) * r(di - 6).abs() * Rational::from_integer(binom(di - 2, di / 2));
            Ok(num / (two_d * r(di - 3) * r(di - 2)))
        }
        (2, false) if d >= 5 => {
            Ok(r(2) * Rational::from_integer(binom(di - 2, (di - 1) / 2)) / (two_d * r(di - 2)))
        }
        _ => Err(invalid(format!("no simplified form for a={a}, d={d}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const CRELU5: Activation = Activation::ClippedRelu(5.0);

    fn q(d: usize, a: usize, b: f64, act: Activation) -> DeltaQuery {
        DeltaQuery::new(d, a, b, act)
    }

    #[test]
    fn known_values() {
        let v = delta(&q(4, 0, 0.0, Activation::Relu)).unwrap();
        assert!((v.abs() - 0.25).abs() < 1e-15, "{v}");
        let v = delta(&q(5, 0, -1.0, Activation::Relu)).unwrap();
        assert!((v.abs() - 0.1875).abs() < 1e-15, "{v}");
    }

    #[test]
    fn even_full_parity_formula() {
        // |Δ_{d,0}| = 4/2^d C(d-3, d/2-1)
        for d in (4..=40).step_by(2) {
            let got = delta_rational(&q(d, 0, 0.0, Activation::Relu)).unwrap();
            let want = Rational::new(binom(d as i64 - 3, d as i64 / 2 - 1) * 4, pow2(d as u64));
            assert_eq!(got.abs(), want, "d={d}");
        }
    }

    #[test]
    fn rejects_bad_queries() {
        assert!(delta(&q(6, 0, 0.0, Activation::Threshold)).is_err());
        assert!(delta(&q(3, 2, 0.0, Activation::Relu)).is_err());
        assert!(delta(&q(1, 0, 0.0, Activation::Relu)).is_err());
        assert!(delta(&q(6, 0, 0.0, Activation::ClippedRelu(-1.0))).is_err());
        let big = q(23, 0, 0.0, Activation::Relu);
        assert!(matches!(
            delta_oracle::<f64>(&big, OracleMode::Enumerate),
            Err(Error::DimensionTooLarge { .. })
        ));
    }

    #[test]
    fn closed_form_matches_enumeration_grid() {
        for d in 2..=14 {
            for a in 0..=2usize {
                if d < a + 2 {
                    continue;
                }
                for b in [-2.0, -1.0, 0.0, a as f64 + 2.0, a as f64 + 2.1] {
                    for act in [Activation::Relu, CRELU5] {
                        let qq = q(d, a, b, act);
                        let c = delta(&qq).unwrap();
                        let e: f64 = delta_oracle(&qq, OracleMode::Enumerate).unwrap();
                        assert!((c - e).abs() <= 1e-12, "{qq:?}: {c} vs {e}");
                    }
                }
            }
        }
    }

    #[test]
    fn clipped_is_difference_of_shifted_relus() {
        for d in 2..=30i64 {
            for b2 in -12..=12 {
                let b = Rational::new(BigInt::from(b2), BigInt::from(2));
                let five = Rational::from_integer(BigInt::from(5));
                let lhs = delta0(d, &b, &CRELU5).unwrap();
                let rhs = relu_delta0(d, &b) - relu_delta0(d, &(&b - &five));
                assert_eq!(lhs, rhs, "d={d} b={b}");
            }
        }
    }

    #[test]
    fn threshold_has_an_oracle() {
        let qq = q(12, 0, 0.0, Activation::Threshold);
        let e: f64 = delta_oracle(&qq, OracleMode::Enumerate).unwrap();
        let b: f64 = delta_oracle(&qq, OracleMode::Binomial).unwrap();
        assert!((e - b).abs() < 1e-14);
    }

    #[test]
    fn crelu_d12_example() {
        let qq = q(12, 0, 0.0, CRELU5);
        let e: f64 = delta_oracle(&qq, OracleMode::Enumerate).unwrap();
        assert!((delta(&qq).unwrap() - e).abs() < 1e-12);
    }

    #[test]
    fn binomial_oracle_at_d60() {
        let qq = q(60, 2, 4.1, Activation::Relu);
        let v: f64 = delta_oracle(&qq, OracleMode::Binomial).unwrap();
        let exact = delta(&qq).unwrap();
        assert!(v.is_finite());
        assert!((v - exact).abs() < 1e-12 * exact.abs().max(1e-3), "{v} vs {exact}");
        let single: f32 = delta_oracle(&qq, OracleMode::Binomial).unwrap();
        assert!(((single as f64) - exact).abs() < 1e-4);
    }

    #[test]
    fn simplified_almost_full_forms() {
        for d in 4..=30usize {
            let b = if d % 2 == 0 { -2.0 } else { -1.0 };
            for a in [1usize, 2] {
                if a == 2 && d < 5 {
                    continue;
                }
                let exact = delta_rational(&q(d, a, b, Activation::Relu)).unwrap();
                let simple = almost_full_delta_abs(a, d).unwrap();
                assert_eq!(exact.abs(), simple, "a={a} d={d}");
            }
        }
    }

    #[test]
    fn bias_helpers() {
        assert_eq!(full_parity_bias(10), 0.0);
        assert_eq!(full_parity_bias(11), -1.0);
        assert_eq!(almost_full_bias_pair(3), [5.0, 5.1]);
    }

    proptest! {
        #[test]
        fn binomial_oracle_agrees_with_enumeration(
            d in 2usize..=12, a in 0usize..=3, b in -4.0f64..6.0, clip in 0.5f64..6.0, kind in 0u8..3
        ) {
            prop_assume!(a < d);
            let act = match kind { 0 => Activation::Relu, 1 => Activation::ClippedRelu(clip), _ => Activation::Threshold };
            let qq = q(d, a, b, act);
            let e: f64 = delta_oracle(&qq, OracleMode::Enumerate).unwrap();
            let m: f64 = delta_oracle(&qq, OracleMode::Binomial).unwrap();
            prop_assert!((e - m).abs() < 1e-13);
        }

        #[test]
        fn closed_form_any_bias(d in 2usize..=13, a in 0usize..=3, b in -8.0f64..8.0, clip in 0.5f64..7.0, clipped: bool) {
            prop_assume!(d >= a + 2);
            let act = if clipped { Activation::ClippedRelu(clip) } else { Activation::Relu };
            let qq = q(d, a, b, act);
            let e: f64 = delta_oracle(&qq, OracleMode::Enumerate).unwrap();
            prop_assert!((delta(&qq).unwrap() - e).abs() < 1e-12);
        }
    }
}
