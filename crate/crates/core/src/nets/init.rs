use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Result};
use crate::Scalar;

/// Weight-initialization family. Every normalized family has per-entry
/// second moment `1/dim`, where `dim` is the fan-in of the layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitSpec {
    /// `N(0, 1/dim)`
    Gaussian,
    /// `Rad(1/2)/√dim`
    Rademacher,
    /// `(Rad(1/2) + N(0,σ²)) / √(dim(1+σ²))`
    PerturbedRademacher { sigma: f64 },
    /// `(Rad(1/2) + U[-√3σ, √3σ]) / √(dim(1+σ²))`
    UniformPerturbed { sigma: f64 },
    /// `Ber(1-s)·Rad(1/2) / √(dim(1-s))`
    SparsifiedRademacher { s: f64 },
    /// `U{-2,-1,1,2}·√(2/(5 dim))`
    DiscreteSymmetric,
    /// Unnormalized `±1`, used by the one-step and hinge procedures.
    RawRademacher,
    /// Unnormalized `±1 + N(0,σ²)`.
    RawPerturbedRademacher { sigma: f64 },
    Zeros,
}

impl InitSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InitSpec::PerturbedRademacher { sigma }
            | InitSpec::UniformPerturbed { sigma }
            | InitSpec::RawPerturbedRademacher { sigma }
                if !(sigma >= 0.0 && sigma.is_finite()) =>
            {
                Err(invalid(format!("sigma must be >= 0, got {sigma}")))
            }
            InitSpec::SparsifiedRademacher { s } if !(0.0..1.0).contains(&s) => {
                Err(invalid(format!("sparsity must lie in [0, 1), got {s}")))
            }
            _ => Ok(()),
        }
    }

    /// One draw for a layer of fan-in `dim`.
    pub fn draw(&self, dim: usize, rng: &mut impl Rng) -> f64 {
        let dim = dim as f64;
        let rad = |rng: &mut dyn rand::RngCore| if rng.gen::<bool>() { 1.0 } else { -1.0 };
        match *self {
            InitSpec::Gaussian => Normal::new(0.0, dim.recip().sqrt()).unwrap().sample(rng),
            InitSpec::Rademacher => rad(rng) / dim.sqrt(),
            InitSpec::PerturbedRademacher { sigma } => {
                let g = if sigma > 0.0 { Normal::new(0.0, sigma).unwrap().sample(rng) } else { 0.0 };
                (rad(rng) + g) / (dim * (1.0 + sigma * sigma)).sqrt()
            }
            InitSpec::UniformPerturbed { sigma } => {
                let h = 3f64.sqrt() * sigma;
                let u = if h > 0.0 { rng.gen_range(-h..=h) } else { 0.0 };
                (rad(rng) + u) / (dim * (1.0 + sigma * sigma)).sqrt()
            }
            InitSpec::SparsifiedRademacher { s } => {
                let keep = rng.gen::<f64>() >= s;
                let r = rad(rng);
                if keep {
                    r / (dim * (1.0 - s)).sqrt()
                } else {
                    0.0
                }
            }
            InitSpec::DiscreteSymmetric => {
                const VALUES: [f64; 4] = [-2.0, -1.0, 1.0, 2.0];
                VALUES[rng.gen_range(0..4)] * (2.0 / (5.0 * dim)).sqrt()
            }
            InitSpec::RawRademacher => rad(rng),
            InitSpec::RawPerturbedRademacher { sigma } => {
                let g = if sigma > 0.0 { Normal::new(0.0, sigma).unwrap().sample(rng) } else { 0.0 };
                rad(rng) + g
            }
            InitSpec::Zeros => 0.0,
        }
    }
}

/// Weight matrix of shape `(out, dim)` with i.i.d. entries.
pub fn sample_init<T: Scalar>(spec: &InitSpec, out: usize, dim: usize, rng: &mut impl Rng) -> Array2<T> {
    Array2::from_shape_simple_fn((out, dim), || T::of(spec.draw(dim, rng)))
}

/// Bias vector of length `out` for a layer of fan-in `dim`.
pub fn sample_init_vec<T: Scalar>(spec: &InitSpec, out: usize, dim: usize, rng: &mut impl Rng) -> Array1<T> {
    Array1::from_shape_simple_fn(out, || T::of(spec.draw(dim, rng)))
}
