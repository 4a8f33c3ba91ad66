use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::data::{accuracy_on, all_inputs, parity_batch, stream_rng, EvalMode, TargetSpec};
use super::{Activation, BiasLayout, Grads, LossKind, NetParams};
use crate::error::{invalid, Error, Result};
use crate::exactcomb::{almost_full_bias_pair, delta, full_parity_bias, DeltaQuery};
use crate::Scalar;

const STREAM_DATASET: u64 = 1 << 40;
const STREAM_SHUFFLE: u64 = 2 << 40;
const STREAM_BATCH: u64 = 3 << 40;
const STREAM_NOISE: u64 = 4 << 40;
const STREAM_TEST: u64 = 5 << 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchSize {
    Size(usize),
    /// Population mean over all `2^d` inputs.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainLayers {
    OutputOnly,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DataMode {
    /// Fresh i.i.d. batches every step.
    Online,
    /// Reshuffled passes over a fixed sample; stops once an epoch's mean
    /// training loss falls below `stop_loss`.
    Offline { n_samples: usize, stop_loss: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub gamma: f64,
    pub tau: f64,
    pub batch: BatchSize,
    /// Step cap.
    pub steps: usize,
    pub seed: u64,
    pub train_layers: TrainLayers,
    pub data: DataMode,
    /// Evaluate every this many steps; 0 means only at the start and end.
    pub eval_every: usize,
    pub eval: EvalMode,
}

impl TrainConfig {
    pub fn validate(&self, d: usize) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(invalid(format!("learning rate must be positive, got {}", self.gamma)));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(invalid(format!("noise level must be >= 0, got {}", self.tau)));
        }
        if let BatchSize::Size(0) = self.batch {
            return Err(invalid("batch size must be positive"));
        }
        if self.batch == BatchSize::Full && d > super::data::ENUMERATE_MAX_D {
            return Err(Error::DimensionTooLarge { what: "full-batch gradient", d, limit: super::data::ENUMERATE_MAX_D });
        }
        if let DataMode::Offline { n_samples, .. } = self.data {
            match self.batch {
                BatchSize::Size(b) if n_samples < b => {
                    return Err(invalid(format!("offline sample size {n_samples} is below the batch size {b}")))
                }
                BatchSize::Full => return Err(invalid("offline data cannot use the population batch")),
                _ => {}
            }
        }
        if self.eval == EvalMode::Enumerate && d > super::data::ENUMERATE_MAX_D {
            return Err(Error::DimensionTooLarge { what: "enumerated evaluation", d, limit: super::data::ENUMERATE_MAX_D });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub step: usize,
    pub samples: usize,
    /// Mean batch loss since the previous trace point (NaN at step 0).
    pub train_loss: f64,
    pub test_accuracy: f64,
}

fn population_grad<T: Scalar>(net: &NetParams<T>, xs: &Array2<T>, ys: &Array1<T>, loss: &LossKind) -> Result<(Grads<T>, T)> {
    let n = xs.nrows();
    let mut acc = Grads::zeros_like(net);
    let mut total = T::zero();
    let chunk = 4096;
    let mut start = 0;
    while start < n {
        let end = (start + chunk).min(n);
        let (mut g, l) = net.batch_loss_grad(
            xs.slice(ndarray::s![start..end, ..]),
            ys.slice(ndarray::s![start..end]),
            loss,
        )?;
        let w = T::of((end - start) as f64 / n as f64);
        g.scale(w);
        acc.add_assign(&g);
        total += l * w;
        start = end;
    }
    Ok((acc, total))
}

pub(crate) fn add_noise<T: Scalar>(g: &mut Grads<T>, net: &NetParams<T>, tau: f64, rng: &mut impl Rng) {
    let normal = Normal::new(0.0, tau).expect("tau validated");
    for (i, l) in net.layers.iter().enumerate() {
        if !l.trainable {
            continue;
        }
        g.w[i].mapv_inplace(|v| v + T::of(normal.sample(rng)));
        if l.has_bias {
            g.b[i].mapv_inplace(|v| v + T::of(normal.sample(rng)));
        }
    }
}

/// Noisy (S)GD: `θ ← θ - γ(∇L̂(θ) + ξ)`, `ξ ~ N(0, τ² I)` on trainable
/// coordinates. Deterministic in `(net, target, cfg, loss)`.
pub fn noisy_sgd<T: Scalar>(
    mut net: NetParams<T>,
    target: &TargetSpec,
    cfg: &TrainConfig,
    loss: &LossKind,
) -> Result<(NetParams<T>, Vec<TracePoint>)> {
    let d = net.input_dim();
    cfg.validate(d)?;
    target.validate(d)?;
    loss.validate()?;
    net.set_trainable(cfg.train_layers);

    let test_x: Array2<T> = match cfg.eval {
        EvalMode::Enumerate => all_inputs(d)?,
        EvalMode::Sample { n, seed } => parity_batch(d, target, n, &mut stream_rng(seed, STREAM_TEST)).0,
    };
    let population = match cfg.batch {
        BatchSize::Full => {
            let xs: Array2<T> = all_inputs(d)?;
            let ys = Array1::from_shape_fn(xs.nrows(), |r| target.eval(xs.row(r)));
            Some((xs, ys))
        }
        BatchSize::Size(_) => None,
    };
    let dataset = match cfg.data {
        DataMode::Offline { n_samples, .. } => Some(parity_batch::<T>(d, target, n_samples, &mut stream_rng(cfg.seed, STREAM_DATASET))),
        DataMode::Online => None,
    };
    let mut order: Vec<usize> = dataset.as_ref().map(|(x, _)| (0..x.nrows()).collect()).unwrap_or_default();
    let mut cursor = order.len();
    let mut epoch = 0u64;
    let (mut epoch_loss, mut epoch_count) = (0.0f64, 0usize);

    let gamma = T::of(cfg.gamma);
    let mut trace = vec![TracePoint {
        step: 0,
        samples: 0,
        train_loss: f64::NAN,
        test_accuracy: accuracy_on(&net, target, &test_x)?.accuracy,
    }];
    let (mut loss_sum, mut loss_n) = (0.0f64, 0usize);
    let mut samples = 0usize;
    for t in 0..cfg.steps {
        let (mut g, l) = match (&population, &dataset, cfg.batch) {
            (Some((xs, ys)), _, _) => {
                samples += xs.nrows();
                population_grad(&net, xs, ys, loss)?
            }
            (None, Some((xs, ys)), BatchSize::Size(b)) => {
                if cursor + b > order.len() {
                    order.shuffle(&mut stream_rng(cfg.seed, STREAM_SHUFFLE + epoch));
                    epoch += 1;
                    cursor = 0;
                }
                let idx = &order[cursor..cursor + b];
                cursor += b;
                samples += b;
                let bx = xs.select(Axis(0), idx);
                let by = ys.select(Axis(0), idx);
                net.batch_loss_grad(bx.view(), by.view(), loss)?
            }
            (None, None, BatchSize::Size(b)) => {
                samples += b;
                let (bx, by) = parity_batch::<T>(d, target, b, &mut stream_rng(cfg.seed, STREAM_BATCH + t as u64));
                net.batch_loss_grad(bx.view(), by.view(), loss)?
            }
            _ => unreachable!("validated configuration"),
        };
        let lf = l.to_f64_lossy();
        loss_sum += lf;
        loss_n += 1;
        epoch_loss += lf;
        epoch_count += 1;
        if cfg.tau > 0.0 {
            add_noise(&mut g, &net, cfg.tau, &mut stream_rng(cfg.seed, STREAM_NOISE + t as u64));
        }
        net.apply_update(&g, gamma);

        let step = t + 1;
        let mut stop = false;
        if let DataMode::Offline { stop_loss, .. } = cfg.data {
            if cursor + match cfg.batch { BatchSize::Size(b) => b, _ => 0 } > order.len() {
                stop = epoch_loss / epoch_count as f64 <= stop_loss;
                epoch_loss = 0.0;
                epoch_count = 0;
            }
        }
        let due = cfg.eval_every > 0 && step % cfg.eval_every == 0;
        if due || step == cfg.steps || stop {
            trace.push(TracePoint {
                step,
                samples,
                train_loss: if loss_n > 0 { loss_sum / loss_n as f64 } else { f64::NAN },
                test_accuracy: accuracy_on(&net, target, &test_x)?.accuracy,
            });
            loss_sum = 0.0;
            loss_n = 0;
        }
        if stop {
            break;
        }
    }
    Ok((net, trace))
}

/// Hidden-bias assignment for the two-layer procedures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BiasScheme {
    /// `0` for even `d`, `-1` for odd `d`.
    FullParity,
    /// Each neuron draws `a+2` or `a+2.1` with probability 1/2.
    AlmostFull,
    Constant(f64),
}

/// Two-layer network after one step of population GD with correlation loss
/// from `v = 0`, computed in closed form:
/// `v_i = γ Δ^(a)_{d,b_i,σ} Π_{j≤d-a} w_ij (+ γ N(0,τ²))` with `w_ij = ±1`.
#[allow(clippy::too_many_arguments)]
pub fn one_step_gd_closed_form(
    d: usize,
    a: usize,
    n: usize,
    gamma: f64,
    bias_scheme: BiasScheme,
    act: Activation,
    seed: u64,
    tau: f64,
) -> Result<NetParams<f64>> {
    if n == 0 {
        return Err(invalid("width must be positive"));
    }
    if a + 2 > d {
        return Err(invalid(format!("need d - a >= 2, got d={d}, a={a}")));
    }
    let mut net = NetParams::<f64>::zeros(&[d, n, 1], act, BiasLayout::Hidden)?;
    let mut rng = stream_rng(seed, 0);
    net.layers[0].w = Array2::from_shape_simple_fn((n, d), || if rng.gen::<bool>() { 1.0 } else { -1.0 });
    let pair = almost_full_bias_pair(a);
    let mut brng = stream_rng(seed, 1);
    net.layers[0].b = Array1::from_shape_simple_fn(n, || match bias_scheme {
        BiasScheme::FullParity => full_parity_bias(d),
        BiasScheme::AlmostFull => pair[brng.gen_range(0..2)],
        BiasScheme::Constant(b) => b,
    });
    let mut cache: Vec<(f64, f64)> = Vec::new();
    let mut delta_at = |b: f64| -> Result<f64> {
        if let Some(&(_, v)) = cache.iter().find(|(bb, _)| *bb == b) {
            return Ok(v);
        }
        let v = delta(&DeltaQuery::new(d, a, b, act))?;
        cache.push((b, v));
        Ok(v)
    };
    let noise = if tau > 0.0 { Some(Normal::new(0.0, tau).map_err(|e| invalid(e.to_string()))?) } else { None };
    let mut nrng = stream_rng(seed, 2);
    for i in 0..n {
        let sign: f64 = net.layers[0].w.row(i).iter().take(d - a).product();
        let mut v = gamma * delta_at(net.layers[0].b[i])? * sign;
        if let Some(nd) = &noise {
            v += gamma * nd.sample(&mut nrng);
        }
        net.layers[1].w[[0, i]] = v;
    }
    Ok(net)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HingeConfig {
    pub gamma: f64,
    pub beta: f64,
    /// Hard cap on SGD steps.
    pub max_steps: usize,
    /// Stop after this many zero updates in a row.
    pub patience: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HingeOutcome {
    pub nonzero_updates: usize,
    pub steps: usize,
    /// Whether the patience rule fired before the step cap.
    pub converged: bool,
}

/// Batch-size-one SGD with hinge loss on all layers, counting the steps
/// whose gradient is nonzero.
pub fn hinge_sgd_count_updates<T: Scalar>(
    mut net: NetParams<T>,
    target: &TargetSpec,
    cfg: &HingeConfig,
) -> Result<(NetParams<T>, HingeOutcome)> {
    let d = net.input_dim();
    target.validate(d)?;
    if !(cfg.gamma > 0.0) || !(cfg.beta >= 0.0) || cfg.patience == 0 {
        return Err(invalid("need gamma > 0, beta >= 0 and positive patience"));
    }
    net.set_trainable(TrainLayers::All);
    let loss = LossKind::Hinge(cfg.beta);
    let gamma = T::of(cfg.gamma);
    let mut rng = stream_rng(cfg.seed, STREAM_BATCH);
    let (mut nonzero, mut quiet) = (0usize, 0usize);
    let mut steps = 0;
    while steps < cfg.max_steps && quiet < cfg.patience {
        let (x, y) = parity_batch::<T>(d, target, 1, &mut rng);
        steps += 1;
        let Some(g) = net.loss_grad_if_active(x.row(0), y[0], &loss)? else {
            quiet += 1;
            continue;
        };
        if g.w.iter().all(|w| w.iter().all(|v| *v == T::zero())) && g.b.iter().all(|b| b.iter().all(|v| *v == T::zero())) {
            quiet += 1;
            continue;
        }
        quiet = 0;
        nonzero += 1;
        net.apply_update(&g, gamma);
    }
    Ok((net, HingeOutcome { nonzero_updates: nonzero, steps, converged: quiet >= cfg.patience }))
}
