//! Fully connected networks, initialization families, losses and the
//! training procedures.

mod data;
mod init;
mod rescale;
mod train;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};

pub use crate::exactcomb::Activation;
use crate::error::{invalid, Result};
use crate::Scalar;

pub use data::{
    all_inputs, eval_accuracy, parity_batch, stream_rng, Accuracy, EvalMode, TargetSpec, ENUMERATE_MAX_D,
};
pub use init::{sample_init, sample_init_vec, InitSpec};
pub use rescale::{rescale_check, RescaleReport};
pub(crate) use train::add_noise;
pub use train::{
    hinge_sgd_count_updates, noisy_sgd, one_step_gd_closed_form, BatchSize, BiasScheme,
    DataMode, HingeConfig, HingeOutcome, TracePoint, TrainConfig, TrainLayers,
};

/// Training loss `L(y, ŷ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    /// `-y ŷ`
    Correlation,
    /// `max(0, β - y ŷ)`
    Hinge(f64),
    /// `(ŷ - y)^2`
    Squared,
    /// `|ŷ - y|`
    L1,
}

impl LossKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LossKind::Hinge(b) if !(b >= 0.0 && b.is_finite()) => {
                Err(invalid(format!("hinge margin must be >= 0, got {b}")))
            }
            _ => Ok(()),
        }
    }

    pub fn value<T: Scalar>(&self, y: T, yhat: T) -> T {
        match *self {
            LossKind::Correlation => -y * yhat,
            LossKind::Hinge(b) => (T::of(b) - y * yhat).max(T::zero()),
            LossKind::Squared => (yhat - y) * (yhat - y),
            LossKind::L1 => (yhat - y).abs(),
        }
    }

    /// `∂L/∂ŷ`; zero at the hinge kink and at `ŷ = y` for L1.
    pub fn dyhat<T: Scalar>(&self, y: T, yhat: T) -> T {
        match *self {
            LossKind::Correlation => -y,
            LossKind::Hinge(b) => {
                if y * yhat < T::of(b) {
                    -y
                } else {
                    T::zero()
                }
            }
            LossKind::Squared => (yhat - y) * T::of(2.0),
            LossKind::L1 => {
                let r = yhat - y;
                if r > T::zero() {
                    T::one()
                } else if r < T::zero() {
                    -T::one()
                } else {
                    T::zero()
                }
            }
        }
    }
}

/// One affine layer: `z = W h + b` with `W` of shape `(out, in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub w: Array2<T>,
    pub b: Array1<T>,
    pub has_bias: bool,
    pub trainable: bool,
}

impl<T: Scalar> Layer<T> {
    pub fn zeros(out: usize, inp: usize, has_bias: bool) -> Self {
        Self { w: Array2::zeros((out, inp)), b: Array1::zeros(out), has_bias, trainable: true }
    }

    pub fn fan_in(&self) -> usize {
        self.w.ncols()
    }

    pub fn fan_out(&self) -> usize {
        self.w.nrows()
    }

    pub fn num_params(&self) -> usize {
        self.w.len() + if self.has_bias { self.b.len() } else { 0 }
    }
}

/// Which layers carry a bias vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasLayout {
    All,
    /// Only the first (input) layer; the layout under which ReLU networks are
    /// exactly rescaling-homogeneous.
    FirstOnly,
    /// Hidden layers only, the output layer is linear without bias.
    Hidden,
    None,
}

/// Layered parameters of a fully connected network. The activation is
/// applied after every layer except the last, which is linear with a
/// single output.
#[derive(Debug, Clone, PartialEq)]
pub struct NetParams<T> {
    pub layers: Vec<Layer<T>>,
    pub act: Activation,
}

/// Gradient with the same shapes as the parameters. Bias entries of layers
/// without bias stay zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads<T> {
    pub w: Vec<Array2<T>>,
    pub b: Vec<Array1<T>>,
}

impl<T: Scalar> Grads<T> {
    pub fn zeros_like(net: &NetParams<T>) -> Self {
        Self {
            w: net.layers.iter().map(|l| Array2::zeros(l.w.raw_dim())).collect(),
            b: net.layers.iter().map(|l| Array1::zeros(l.b.raw_dim())).collect(),
        }
    }

    /// Coordinates in parameter order (see [`NetParams::flatten`]).
    pub fn flatten(&self, net: &NetParams<T>) -> Vec<T> {
        let mut out = Vec::with_capacity(net.num_params());
        for (i, l) in net.layers.iter().enumerate() {
            out.extend(self.w[i].iter().copied());
            if l.has_bias {
                out.extend(self.b[i].iter().copied());
            }
        }
        out
    }

    pub fn scale(&mut self, s: T) {
        for w in &mut self.w {
            w.mapv_inplace(|v| v * s);
        }
        for b in &mut self.b {
            b.mapv_inplace(|v| v * s);
        }
    }

    pub fn add_assign(&mut self, other: &Grads<T>) {
        for (a, b) in self.w.iter_mut().zip(&other.w) {
            *a += b;
        }
        for (a, b) in self.b.iter_mut().zip(&other.b) {
            *a += b;
        }
    }
}

impl<T: Scalar> NetParams<T> {
    /// Fully connected network with widths `dims = [d, h1, ..., 1]`, all
    /// parameters zero.
    pub fn zeros(dims: &[usize], act: Activation, bias: BiasLayout) -> Result<Self> {
        if dims.len() < 2 {
            return Err(invalid("a network needs at least an input and an output width"));
        }
        if *dims.last().unwrap() != 1 {
            return Err(invalid("the output width must be 1"));
        }
        if dims.contains(&0) {
            return Err(invalid("widths must be positive"));
        }
        act.validate()?;
        let nl = dims.len() - 1;
        let layers = (0..nl)
            .map(|l| {
                let has_bias = match bias {
                    BiasLayout::All => true,
                    BiasLayout::FirstOnly => l == 0,
                    BiasLayout::Hidden => l + 1 < nl,
                    BiasLayout::None => false,
                };
                Layer::zeros(dims[l + 1], dims[l], has_bias)
            })
            .collect();
        Ok(Self { layers, act })
    }

    /// Network with every weight and bias drawn from `init`, normalized by
    /// the fan-in of its layer.
    pub fn sampled(
        dims: &[usize],
        act: Activation,
        bias: BiasLayout,
        init: &InitSpec,
        rng: &mut impl rand::Rng,
    ) -> Result<Self> {
        init.validate()?;
        let mut net = Self::zeros(dims, act, bias)?;
        for l in &mut net.layers {
            let (out, inp) = l.w.dim();
            l.w = sample_init(init, out, inp, rng);
            if l.has_bias {
                l.b = sample_init_vec(init, out, inp, rng);
            }
        }
        Ok(net)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Layer::num_params).sum()
    }

    /// Parameters in a fixed order: per layer, `W` row-major then `b` when
    /// present.
    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend(l.w.iter().copied());
            if l.has_bias {
                out.extend(l.b.iter().copied());
            }
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(invalid(format!("expected {} values, got {}", self.num_params(), flat.len())));
        }
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            l.w.iter_mut().for_each(|v| *v = it.next().unwrap());
            if l.has_bias {
                l.b.iter_mut().for_each(|v| *v = it.next().unwrap());
            }
        }
        Ok(())
    }

    fn check_input(&self, n: usize) -> Result<()> {
        if n != self.input_dim() {
            return Err(invalid(format!("input has {n} coordinates, network expects {}", self.input_dim())));
        }
        Ok(())
    }

    /// `NN(x; θ)` for one input.
    pub fn forward(&self, x: ArrayView1<T>) -> Result<T> {
        self.check_input(x.len())?;
        let mut h = x.to_owned();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = l.w.dot(&h);
            if l.has_bias {
                z += &l.b;
            }
            if i < last {
                z.mapv_inplace(|v| self.act.eval(v));
            }
            h = z;
        }
        Ok(h[0])
    }

    /// Outputs for a batch of inputs stored as rows.
    pub fn forward_batch(&self, xs: ArrayView2<T>) -> Result<Array1<T>> {
        self.check_input(xs.ncols())?;
        let (pre, _) = self.forward_cache(xs);
        Ok(pre.last().unwrap().column(0).to_owned())
    }

    /// Pre-activations per layer and post-activations per hidden layer.
    fn forward_cache(&self, xs: ArrayView2<T>) -> (Vec<Array2<T>>, Vec<Array2<T>>) {
        let last = self.layers.len() - 1;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Array2<T>> = Vec::with_capacity(last);
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = if i == 0 { xs.dot(&l.w.t()) } else { post[i - 1].dot(&l.w.t()) };
            if l.has_bias {
                z += &l.b;
            }
            if i < last {
                post.push(z.mapv(|v| self.act.eval(v)));
            }
            pre.push(z);
        }
        (pre, post)
    }

    /// Gradient of `NN` itself with respect to all parameters at one input.
    pub fn grad_output(&self, x: ArrayView1<T>) -> Result<Grads<T>> {
        let xs = x.insert_axis(Axis(0));
        self.check_input(xs.ncols())?;
        let (g, _) = self.backprop(xs, |_, _| T::one());
        Ok(g)
    }

    /// `∇_θ L(y, NN(x; θ))` for one sample.
    pub fn loss_grad(&self, x: ArrayView1<T>, y: T, loss: &LossKind) -> Result<Grads<T>> {
        let xs = x.insert_axis(Axis(0));
        self.check_input(xs.ncols())?;
        let (g, _) = self.backprop(xs, |_, yhat| loss.dyhat(y, yhat));
        Ok(g)
    }

    /// Mean gradient and mean loss over a labelled batch.
    pub fn batch_loss_grad(&self, xs: ArrayView2<T>, ys: ArrayView1<T>, loss: &LossKind) -> Result<(Grads<T>, T)> {
        self.check_input(xs.ncols())?;
        if xs.nrows() != ys.len() || ys.is_empty() {
            return Err(invalid("batch inputs and labels disagree in length or are empty"));
        }
        let inv = T::one() / T::of(ys.len() as f64);
        let (g, yhat) = self.backprop(xs, |r, yh| loss.dyhat(ys[r], yh) * inv);
        let total: T = yhat.iter().zip(ys.iter()).map(|(&p, &y)| loss.value(y, p)).sum();
        Ok((g, total * inv))
    }

    /// Backpropagation of per-row output weights `seed(row, ŷ)`; returns the
    /// summed gradient and the outputs.
    fn backprop(&self, xs: ArrayView2<T>, seed: impl Fn(usize, T) -> T) -> (Grads<T>, Array1<T>) {
        let (pre, post) = self.forward_cache(xs);
        self.backprop_cached(xs, &pre, &post, seed)
    }

    /// Single-sample loss gradient, or `None` when the loss derivative at
    /// the output is zero; the forward pass is shared between both cases.
    pub(crate) fn loss_grad_if_active(&self, x: ArrayView1<T>, y: T, loss: &LossKind) -> Result<Option<Grads<T>>> {
        let xs = x.insert_axis(Axis(0));
        self.check_input(xs.ncols())?;
        let (pre, post) = self.forward_cache(xs);
        if loss.dyhat(y, pre.last().unwrap()[[0, 0]]) == T::zero() {
            return Ok(None);
        }
        Ok(Some(self.backprop_cached(xs, &pre, &post, |_, yhat| loss.dyhat(y, yhat)).0))
    }

    fn backprop_cached(
        &self,
        xs: ArrayView2<T>,
        pre: &[Array2<T>],
        post: &[Array2<T>],
        seed: impl Fn(usize, T) -> T,
    ) -> (Grads<T>, Array1<T>) {
        let nl = self.layers.len();
        let yhat = pre[nl - 1].column(0).to_owned();
        let mut delta = Array2::from_shape_fn((xs.nrows(), 1), |(r, _)| seed(r, yhat[r]));
        let mut grads = Grads::zeros_like(self);
        for l in (0..nl).rev() {
            grads.w[l] = if l == 0 { delta.t().dot(&xs) } else { delta.t().dot(&post[l - 1]) };
            if self.layers[l].has_bias {
                grads.b[l] = delta.sum_axis(Axis(0));
            }
            if l > 0 {
                let mut back = delta.dot(&self.layers[l].w);
                let act = self.act;
                Zip::from(&mut back).and(&pre[l - 1]).for_each(|g, &z| *g *= act.deriv(z));
                delta = back;
            }
        }
        (grads, yhat)
    }

    /// `θ ← θ - step·g` on trainable layers.
    pub fn apply_update(&mut self, g: &Grads<T>, step: T) {
        for (i, l) in self.layers.iter_mut().enumerate() {
            if !l.trainable {
                continue;
            }
            l.w.scaled_add(-step, &g.w[i]);
            if l.has_bias {
                l.b.scaled_add(-step, &g.b[i]);
            }
        }
    }

    pub fn set_trainable(&mut self, layers: TrainLayers) {
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter_mut().enumerate() {
            l.trainable = match layers {
                TrainLayers::All => true,
                TrainLayers::OutputOnly => i == last,
            };
        }
    }

    pub fn cast<U: Scalar>(&self) -> NetParams<U> {
        NetParams {
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    w: l.w.mapv(|v| U::of(v.to_f64_lossy())),
                    b: l.b.mapv(|v| U::of(v.to_f64_lossy())),
                    has_bias: l.has_bias,
                    trainable: l.trainable,
                })
                .collect(),
            act: self.act,
        }
    }
}
