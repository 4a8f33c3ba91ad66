use ndarray::Array1;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{GalMethod, GalResult};
use crate::error::{invalid, Result};
use crate::nets::{
    add_noise, parity_batch, stream_rng, Activation, BiasLayout, Grads, InitSpec, LossKind, NetParams, TargetSpec,
};

/// Architecture for Monte-Carlo alignment. With `fixed_output = Some(c)` the
/// output layer is set to `c` and excluded from the gradient, so `[d, 1, 1]`
/// with `Some(1.0)` is the single neuron `σ(w·x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub dims: Vec<usize>,
    pub act: Activation,
    pub bias: BiasLayout,
    pub fixed_output: Option<f64>,
}

impl NetworkSpec {
    pub fn sample(&self, init: &InitSpec, rng: &mut ChaCha8Rng) -> Result<NetParams<f64>> {
        let mut net = NetParams::sampled(&self.dims, self.act, self.bias, init, rng)?;
        if let Some(c) = self.fixed_output {
            let last = net.layers.last_mut().expect("at least one layer");
            last.w.fill(c);
            last.b.fill(0.0);
            last.trainable = false;
        }
        Ok(net)
    }
}

fn trainable_flat(g: &Grads<f64>, net: &NetParams<f64>) -> Vec<f64> {
    let mut out = Vec::new();
    for (i, l) in net.layers.iter().enumerate() {
        if !l.trainable {
            continue;
        }
        out.extend(g.w[i].iter().copied());
        if l.has_bias {
            out.extend(g.b[i].iter().copied());
        }
    }
    out
}

/// Mean over a batch of `∇L(x, f(x)) − ∇L(x, r)`, `r ~ Rad(1/2)`, on the
/// trainable coordinates.
fn difference_gradient(net: &NetParams<f64>, target: &TargetSpec, loss: &LossKind, m: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let (xs, ys) = parity_batch::<f64>(net.input_dim(), target, m, rng);
    let (gf, _) = net.batch_loss_grad(xs.view(), ys.view(), loss)?;
    let mut df = trainable_flat(&gf, net);
    // E_r ∇L_corr(x, r) = 0 exactly
    if *loss != LossKind::Correlation {
        let rs = Array1::from_shape_simple_fn(m, || if rng.gen::<bool>() { 1.0 } else { -1.0 });
        let (gr, _) = net.batch_loss_grad(xs.view(), rs.view(), loss)?;
        for (a, b) in df.iter_mut().zip(trainable_flat(&gr, net)) {
            *a -= b;
        }
    }
    Ok(df)
}

fn jackknife_mean(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let total: f64 = values.iter().sum();
    let mean = total / n;
    let loo: Vec<f64> = values.iter().map(|v| (total - v) / (n - 1.0)).collect();
    let loo_mean = loo.iter().sum::<f64>() / n;
    let var = (n - 1.0) / n * loo.iter().map(|v| (v - loo_mean).powi(2)).sum::<f64>();
    (mean, var.sqrt())
}

/// Monte-Carlo `GAL_f` over parameters drawn by `sample`. Each of the
/// `n_theta` draws uses `n_inner` inputs split into two independent halves;
/// the product of the two half-batch mean difference gradients is an unbiased
/// estimate of the squared norm. The standard error is the jackknife over
/// draws.
pub fn gal_mc_with<F>(
    mut sample: F,
    loss: &LossKind,
    target: &TargetSpec,
    n_theta: usize,
    n_inner: usize,
    seed: u64,
) -> Result<GalResult>
where
    F: FnMut(&mut ChaCha8Rng) -> Result<NetParams<f64>>,
{
    if n_theta < 2 {
        return Err(invalid("need at least two parameter draws"));
    }
    if n_inner < 2 || !n_inner.is_multiple_of(2) {
        return Err(invalid(format!("inner sample count must be even and >= 2, got {n_inner}")));
    }
    loss.validate()?;
    let half = n_inner / 2;
    let mut values = Vec::with_capacity(n_theta);
    for i in 0..n_theta as u64 {
        let net = sample(&mut stream_rng(seed, 3 * i))?;
        target.validate(net.input_dim())?;
        let a = difference_gradient(&net, target, loss, half, &mut stream_rng(seed, 3 * i + 1))?;
        let b = difference_gradient(&net, target, loss, half, &mut stream_rng(seed, 3 * i + 2))?;
        values.push(a.iter().zip(&b).map(|(x, y)| x * y).sum());
    }
    let (value, std_err) = jackknife_mean(&values);
    Ok(GalResult { value, method: GalMethod::MonteCarlo, std_err })
}

pub fn gal_mc(
    spec: &NetworkSpec,
    init: &InitSpec,
    loss: &LossKind,
    target: &TargetSpec,
    n_theta: usize,
    n_inner: usize,
    seed: u64,
) -> Result<GalResult> {
    init.validate()?;
    gal_mc_with(|rng| spec.sample(init, rng), loss, target, n_theta, n_inner, seed)
}

/// Junk flow `ψ^{t+1} = ψ^t − γ(Γ̂_r(ψ^t) + ξ^t)` where `Γ̂_r` averages loss
/// gradients over `batch` uniform inputs with independent random labels and
/// `ξ^t ~ N(0, τ² I)` on trainable coordinates.
pub fn junk_flow_run(
    theta0: &NetParams<f64>,
    loss: &LossKind,
    gamma: f64,
    tau: f64,
    steps: usize,
    batch: usize,
    seed: u64,
) -> Result<NetParams<f64>> {
    loss.validate()?;
    if !(gamma >= 0.0) || !(tau >= 0.0) || batch == 0 {
        return Err(invalid("need gamma >= 0, tau >= 0 and a positive batch"));
    }
    let mut psi = theta0.clone();
    let d = psi.input_dim();
    for t in 0..steps as u64 {
        let mut g = if *loss == LossKind::Correlation {
            Grads::zeros_like(&psi)
        } else {
            let mut rng = stream_rng(seed, 2 * t);
            let (xs, _) = parity_batch::<f64>(d, &TargetSpec::Parity(vec![0]), batch, &mut rng);
            let rs = Array1::from_shape_simple_fn(batch, || if rng.gen::<bool>() { 1.0 } else { -1.0 });
            psi.batch_loss_grad(xs.view(), rs.view(), loss)?.0
        };
        if tau > 0.0 {
            add_noise(&mut g, &psi, tau, &mut stream_rng(seed, 2 * t + 1));
        }
        psi.apply_update(&g, gamma);
    }
    Ok(psi)
}
