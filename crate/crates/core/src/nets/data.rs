use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::NetParams;
use crate::error::{invalid, Error, Result};
use crate::Scalar;

/// Largest input dimension for which inputs are enumerated.
pub const ENUMERATE_MAX_D: usize = 22;

/// Counter-style generator: the stream is fully determined by
/// `(seed, stream)`, independent of how many draws other streams made.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Target function on `{±1}^d`.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetSpec {
    /// `χ_S(x) = Π_{i∈S} x_i` (0-based indices).
    Parity(Vec<usize>),
    /// `x1x2x3/8 + 3x1x2x4/8 + x1x3x4/4 + x2x3x4/4`, real-valued.
    LeapPoly,
}

impl TargetSpec {
    /// Parity on the first `k` coordinates.
    pub fn prefix_parity(k: usize) -> Self {
        TargetSpec::Parity((0..k).collect())
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            TargetSpec::Parity(s) => {
                if s.is_empty() {
                    return Err(invalid("parity support must be nonempty"));
                }
                if let Some(&i) = s.iter().find(|&&i| i >= d) {
                    return Err(invalid(format!("support index {i} out of range for d={d}")));
                }
                Ok(())
            }
            TargetSpec::LeapPoly if d < 4 => Err(invalid("the leap polynomial needs d >= 4")),
            TargetSpec::LeapPoly => Ok(()),
        }
    }

    pub fn eval<T: Scalar>(&self, x: ArrayView1<T>) -> T {
        match self {
            TargetSpec::Parity(s) => s.iter().fold(T::one(), |p, &i| p * x[i]),
            TargetSpec::LeapPoly => {
                let (a, b, c, d) = (x[0], x[1], x[2], x[3]);
                T::of(0.125) * a * b * c + T::of(0.375) * a * b * d + T::of(0.25) * a * c * d + T::of(0.25) * b * c * d
            }
        }
    }
}

/// `B` uniform inputs from `{±1}^d` with their labels.
pub fn parity_batch<T: Scalar>(d: usize, target: &TargetSpec, batch: usize, rng: &mut impl Rng) -> (Array2<T>, Array1<T>) {
    let xs = Array2::from_shape_simple_fn((batch, d), || if rng.gen::<bool>() { T::one() } else { -T::one() });
    let ys = Array1::from_shape_fn(batch, |r| target.eval(xs.row(r)));
    (xs, ys)
}

/// All `2^d` inputs as rows, row `m` having `x_i = -1` iff bit `i` of `m` is set.
pub fn all_inputs<T: Scalar>(d: usize) -> Result<Array2<T>> {
    if d > ENUMERATE_MAX_D {
        return Err(Error::DimensionTooLarge { what: "input enumeration", d, limit: ENUMERATE_MAX_D });
    }
    Ok(Array2::from_shape_fn((1 << d, d), |(m, i)| if (m >> i) & 1 == 1 { -T::one() } else { T::one() }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Enumerate,
    /// `n` inputs from the generator keyed by `seed`.
    Sample { n: usize, seed: u64 },
}

/// Accuracy of `sign(NN(x))` against `sign(f(x))`. A zero output never
/// counts as correct; how often it happened is reported separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accuracy {
    pub accuracy: f64,
    pub zero_outputs: usize,
    pub n: usize,
}

impl Accuracy {
    /// Binomial standard error of the accuracy.
    pub fn std_err(&self) -> f64 {
        (self.accuracy * (1.0 - self.accuracy) / self.n as f64).sqrt()
    }

    /// Set when every output was zero, i.e. the net is constant at 0 and the
    /// meaningful baseline is chance level 0.5.
    pub fn degenerate(&self) -> bool {
        self.zero_outputs == self.n
    }
}

const EVAL_CHUNK: usize = 4096;

pub fn eval_accuracy<T: Scalar>(net: &NetParams<T>, target: &TargetSpec, mode: EvalMode) -> Result<Accuracy> {
    let d = net.input_dim();
    target.validate(d)?;
    let xs: Array2<T> = match mode {
        EvalMode::Enumerate => all_inputs(d)?,
        EvalMode::Sample { n, seed } => parity_batch(d, target, n, &mut stream_rng(seed, u64::MAX)).0,
    };
    accuracy_on(net, target, &xs)
}

pub(crate) fn accuracy_on<T: Scalar>(net: &NetParams<T>, target: &TargetSpec, xs: &Array2<T>) -> Result<Accuracy> {
    let n = xs.nrows();
    let (mut correct, mut zeros) = (0usize, 0usize);
    let mut start = 0;
    while start < n {
        let end = (start + EVAL_CHUNK).min(n);
        let chunk = xs.slice(ndarray::s![start..end, ..]);
        let out = net.forward_batch(chunk)?;
        for (r, &o) in out.iter().enumerate() {
            let y = target.eval(chunk.row(r));
            if o == T::zero() {
                zeros += 1;
            } else if (o > T::zero()) == (y > T::zero()) {
                correct += 1;
            }
        }
        start = end;
    }
    Ok(Accuracy { accuracy: correct as f64 / n as f64, zero_outputs: zeros, n })
}
