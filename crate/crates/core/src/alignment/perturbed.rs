use crate::error::{invalid, Error, Result};
use crate::gaussiankit::{lambda_cdf, relu_cross_moment, BivariateQuery};

pub const PERTURBED_MAX_D: usize = 200;

/// Neuron `(g + μr)·x` with `g ~ N(0, I/d)`, `r ~ Rad(1/2)^d`, no bias,
/// against the full parity. A σ-perturbed Rademacher neuron corresponds to
/// `μ = 1/(σ√d)` after rescaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbedGalQuery {
    pub d: usize,
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GalLayer {
    /// `E_{g,r} (E_x Π_{i<d} x_i 1[(g+μr)·x ≥ 0])²`
    Hidden,
    /// `E_{g,r} (E_x Π_{i≤d} x_i ReLU((g+μr)·x))²`
    Output,
}

struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    fn new() -> Self {
        NeumaierSum { sum: 0.0, comp: 0.0 }
    }

    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Exact alignment by summing over the counts `(n₁,n₂,n₃,n₄)` of the sign
/// patterns `(+,+), (+,−), (−,+), (−,−)` of `(x_i, x'_i)`, after fixing
/// `r = 1^d` by the sign symmetry of the integrand. `O(d³)` kernel calls.
pub fn gal_perturbed_exact(q: &PerturbedGalQuery, layer: GalLayer) -> Result<f64> {
    if q.d < 2 {
        return Err(invalid("dimension must be at least 2"));
    }
    if q.d > PERTURBED_MAX_D {
        return Err(Error::DimensionTooLarge { what: "perturbed alignment", d: q.d, limit: PERTURBED_MAX_D });
    }
    if !(q.mu >= 0.0 && q.mu.is_finite()) {
        return Err(invalid(format!("mu must be >= 0, got {}", q.mu)));
    }
    let d = q.d;
    let big_n = match layer {
        GalLayer::Hidden => d - 1,
        GalLayer::Output => d,
    };
    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=big_n).scan(0.0, |acc, k| {
            *acc += (k as f64).ln();
            Some(*acc)
        }))
        .collect();
    let ln_norm = ln_fact[big_n] - big_n as f64 * 4f64.ln();
    let mu = q.mu;
    let df = d as f64;
    let mut acc = NeumaierSum::new();
    for n1 in 0..=big_n {
        for n2 in 0..=big_n - n1 {
            for n3 in 0..=big_n - n1 - n2 {
                let n4 = big_n - n1 - n2 - n3;
                let w = (ln_norm - ln_fact[n1] - ln_fact[n2] - ln_fact[n3] - ln_fact[n4]).exp();
                let sign = if (n2 + n3) % 2 == 0 { 1.0 } else { -1.0 };
                let (n1, n2, n3, n4) = (n1 as f64, n2 as f64, n3 as f64, n4 as f64);
                let s0 = n1 + n2 - n3 - n4;
                let t0 = n1 - n2 + n3 - n4;
                let dot0 = n1 - n2 - n3 + n4;
                let k = match layer {
                    GalLayer::Output => relu_cross_moment(BivariateQuery::new(mu * s0, mu * t0, dot0 / df))?,
                    GalLayer::Hidden => {
                        let mut k = 0.0;
                        for (xd, yd) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                            let rho = ((dot0 + xd * yd) / df).clamp(-1.0, 1.0);
                            k += 0.25 * lambda_cdf(BivariateQuery::new(mu * (s0 + xd), mu * (t0 + yd), rho))?;
                        }
                        k
                    }
                };
                acc.add(sign * w * k);
            }
        }
    }
    Ok(acc.value())
}
