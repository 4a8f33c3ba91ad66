use ndarray::Array1;
use rand_distr::{Distribution, StandardNormal};

use super::{data::stream_rng, Activation, NetParams};
use crate::error::{invalid, Result};

/// Outcome of comparing `NN(x; C̄θ)` with `NN(x; θ)` where every parameter
/// of layer `l` is multiplied by `C_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaleReport {
    /// `Π_l C_l`
    pub output_factor: f64,
    /// `max_x |NN(x;C̄θ) - Π C_l NN(x;θ)| / |Π C_l NN(x;θ)|`
    pub max_output_rel_err: f64,
    /// Largest relative deviation of a gradient ratio from `Π_{k≠l_p} C_k`.
    pub max_grad_ratio_rel_err: f64,
    /// Largest observed ratio `∂_p NN(x;C̄θ) / ∂_p NN(x;θ)`.
    pub max_grad_ratio: f64,
    /// Number of coordinates whose ratio exceeds `Π_{k≤l_p} C_k`.
    pub prefix_bound_violations: usize,
    pub points: usize,
}

impl RescaleReport {
    pub fn within(&self, tol: f64) -> bool {
        self.max_output_rel_err <= tol && self.max_grad_ratio_rel_err <= tol && self.max_grad_ratio <= self.output_factor * (1.0 + tol)
    }
}

/// Checks layer-rescaling homogeneity of a ReLU network on `points` Gaussian
/// inputs. Only the first layer may carry a bias; deeper biases break exact
/// homogeneity.
pub fn rescale_check(net: &NetParams<f64>, constants: &[f64], points: usize, seed: u64) -> Result<RescaleReport> {
    if net.act != Activation::Relu {
        return Err(invalid("rescaling homogeneity needs the ReLU activation"));
    }
    if constants.len() != net.layers.len() {
        return Err(invalid(format!("need {} constants, got {}", net.layers.len(), constants.len())));
    }
    if constants.iter().any(|&c| !(c > 0.0)) {
        return Err(invalid("rescaling constants must be positive"));
    }
    if net.layers.iter().skip(1).any(|l| l.has_bias) {
        return Err(invalid("only the first layer may carry a bias"));
    }
    let mut scaled = net.clone();
    for (l, &c) in scaled.layers.iter_mut().zip(constants) {
        l.w.mapv_inplace(|v| v * c);
        l.b.mapv_inplace(|v| v * c);
    }
    let total: f64 = constants.iter().product();
    let mut rng = stream_rng(seed, 0);
    let d = net.input_dim();
    let mut rep = RescaleReport {
        output_factor: total,
        max_output_rel_err: 0.0,
        max_grad_ratio_rel_err: 0.0,
        max_grad_ratio: 0.0,
        prefix_bound_violations: 0,
        points,
    };
    for _ in 0..points {
        let x = Array1::from_shape_simple_fn(d, || StandardNormal.sample(&mut rng));
        let base = net.forward(x.view())?;
        let after = scaled.forward(x.view())?;
        let want = total * base;
        if want != 0.0 {
            rep.max_output_rel_err = rep.max_output_rel_err.max(((after - want) / want).abs());
        } else {
            rep.max_output_rel_err = rep.max_output_rel_err.max(after.abs());
        }
        let g0 = net.grad_output(x.view())?;
        let g1 = scaled.grad_output(x.view())?;
        for l in 0..net.layers.len() {
            let exact = total / constants[l];
            let prefix: f64 = constants[..=l].iter().product();
            let pairs = g0.w[l].iter().zip(g1.w[l].iter()).chain(if net.layers[l].has_bias {
                Some(g0.b[l].iter().zip(g1.b[l].iter()))
            } else {
                None
            }.into_iter().flatten());
            for (&a, &b) in pairs {
                if a.abs() < 1e-300 {
                    continue;
                }
                let ratio = b / a;
                rep.max_grad_ratio = rep.max_grad_ratio.max(ratio);
                rep.max_grad_ratio_rel_err = rep.max_grad_ratio_rel_err.max((ratio / exact - 1.0).abs());
                if ratio > prefix * (1.0 + 1e-12) {
                    rep.prefix_bound_violations += 1;
                }
            }
        }
    }
    Ok(rep)
}
