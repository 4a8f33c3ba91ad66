//! Expansion of recipes into parameter points and execution of one
//! (point, seed) job.

use anyhow::Context;
use parity_core::alignment::{
    gal_gaussian_total_log, gal_mc_with, gal_perturbed_exact, junk_flow_run, GalLayer, GaussianGalQuery,
    NetworkSpec, PerturbedGalQuery,
};
use parity_core::nets::{
    eval_accuracy, noisy_sgd, one_step_gd_closed_form, stream_rng, BatchSize, BiasLayout, BiasScheme, DataMode,
    EvalMode, NetParams, TargetSpec, TrainConfig, TrainLayers,
};
use serde::Serialize;

use crate::config::{BiasCfg, BiasName, Recipe};
use crate::records::Record;
use crate::specs::{ActCfg, InitCfg, LossCfg};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Budget {
    Online { train_samples: usize },
    Offline { n_samples: usize, stop_loss: f64, max_steps: usize },
}

/// One parameter point; its JSON form is what `params_hash` digests.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Point {
    Mlp {
        d: usize,
        hidden: Vec<usize>,
        init: InitCfg,
        loss: LossCfg,
        /// `None` is the full parity.
        parity_degree: Option<usize>,
        lr: f64,
        batch: usize,
        budget: Budget,
        eval_every_samples: usize,
        test_samples: usize,
    },
    NeuronGal {
        d: usize,
        act: ActCfg,
        loss: LossCfg,
        init: InitCfg,
        /// Junk-flow steps applied to each draw before measuring.
        junk_steps: usize,
        junk_gamma: f64,
        junk_tau: f64,
        junk_batch: usize,
        n_theta: usize,
        n_inner: usize,
    },
    GaussianExact { d: usize, a: usize, sigma_b: f64, width: usize },
    PerturbedExact { d: usize, mu: f64 },
    OneStep { d: usize, a: usize, width: usize, act: ActCfg, bias: BiasCfg, gamma: f64, tau: f64 },
}

pub fn points(recipe: &Recipe) -> Vec<Point> {
    let mut out = Vec::new();
    match recipe {
        Recipe::SigmaSweep(p) | Recipe::OtherInits(p) | Recipe::SparseParity(p) | Recipe::DimSweep(p) | Recipe::LossCompare(p) => {
            let budgets: Vec<Budget> = match &p.offline {
                Some(off) => off
                    .train_sizes
                    .iter()
                    .map(|&n| Budget::Offline { n_samples: n, stop_loss: off.stop_loss, max_steps: off.max_steps })
                    .collect(),
                None => vec![Budget::Online { train_samples: p.train_samples }],
            };
            let degrees: Vec<Option<usize>> =
                if p.parity_degrees.is_empty() { vec![None] } else { p.parity_degrees.iter().map(|&k| Some(k)).collect() };
            for &d in &p.dims {
                for &k in &degrees {
                    for &loss in &p.losses {
                        for &init in &p.inits {
                            for b in &budgets {
                                out.push(Point::Mlp {
                                    d,
                                    hidden: p.hidden.clone(),
                                    init,
                                    loss,
                                    parity_degree: k,
                                    lr: p.lr,
                                    batch: p.batch,
                                    budget: b.clone(),
                                    eval_every_samples: p.eval_every_samples,
                                    test_samples: p.test_samples,
                                });
                            }
                        }
                    }
                }
            }
        }
        Recipe::GalCurves(p) => {
            for &init in &p.inits {
                for &d in &p.dims {
                    out.push(Point::NeuronGal {
                        d,
                        act: p.act,
                        loss: p.loss,
                        init,
                        junk_steps: 0,
                        junk_gamma: 0.0,
                        junk_tau: 0.0,
                        junk_batch: 1,
                        n_theta: p.n_theta,
                        n_inner: p.n_inner,
                    });
                }
            }
        }
        Recipe::JunkFlowGal(p) => {
            for &t in &p.steps {
                for &d in &p.dims {
                    out.push(Point::NeuronGal {
                        d,
                        act: p.act,
                        loss: p.loss,
                        init: p.init,
                        junk_steps: t,
                        junk_gamma: p.gamma,
                        junk_tau: p.tau,
                        junk_batch: p.batch,
                        n_theta: p.n_theta,
                        n_inner: p.n_inner,
                    });
                }
            }
        }
        Recipe::GalExactScan(p) => {
            for &a in &p.a {
                for &sigma_b in &p.sigma_b {
                    for &d in &p.dims {
                        out.push(Point::GaussianExact { d, a, sigma_b, width: p.width });
                    }
                }
            }
            for &mu in &p.perturbed_mu {
                for &d in &p.dims {
                    out.push(Point::PerturbedExact { d, mu });
                }
            }
        }
        Recipe::WidthSweep(p) | Recipe::OneStepDemo(p) => {
            for &act in &p.acts {
                for &d in &p.dims {
                    let widths: Vec<usize> =
                        if p.widths.is_empty() { p.width_multipliers.iter().map(|m| m * d * d).collect() } else { p.widths.clone() };
                    for width in widths {
                        out.push(Point::OneStep { d, a: p.a, width, act, bias: p.bias, gamma: p.gamma, tau: p.tau });
                    }
                }
            }
        }
    }
    out
}

pub struct JobOutput {
    /// `(step, metric, value)`
    pub rows: Vec<(u64, &'static str, f64)>,
}

fn core(e: parity_core::Error) -> anyhow::Error {
    anyhow::anyhow!(e)
}

/// Run one job; `stream_seed` drives every random draw in it.
pub fn run_point(point: &Point, stream_seed: u64) -> anyhow::Result<JobOutput> {
    let mut rows = Vec::new();
    match point {
        Point::Mlp { d, hidden, init, loss, parity_degree, lr, batch, budget, eval_every_samples, test_samples } => {
            let d = *d;
            let mut dims = vec![d];
            dims.extend(hidden);
            dims.push(1);
            let net = NetParams::<f32>::sampled(
                &dims,
                parity_core::nets::Activation::Relu,
                BiasLayout::All,
                &init.to_core(),
                &mut stream_rng(stream_seed, 0),
            )
            .map_err(core)?;
            let target = TargetSpec::prefix_parity(parity_degree.unwrap_or(d));
            let eval_every = (eval_every_samples / batch).max(1);
            let (steps, data) = match *budget {
                Budget::Online { train_samples } => (train_samples / batch, DataMode::Online),
                Budget::Offline { n_samples, stop_loss, max_steps } => (max_steps, DataMode::Offline { n_samples, stop_loss }),
            };
            let cfg = TrainConfig {
                gamma: *lr,
                tau: 0.0,
                batch: BatchSize::Size(*batch),
                steps,
                seed: stream_seed,
                train_layers: TrainLayers::All,
                data,
                eval_every: if matches!(budget, Budget::Offline { .. }) { 0 } else { eval_every },
                eval: EvalMode::Sample { n: *test_samples, seed: stream_seed },
            };
            let (_, trace) = noisy_sgd(net, &target, &cfg, &loss.to_core()).map_err(core).context("training")?;
            match *budget {
                Budget::Online { .. } => {
                    for p in &trace {
                        rows.push((p.samples as u64, "test_accuracy", p.test_accuracy));
                        if p.step > 0 {
                            rows.push((p.samples as u64, "train_loss", p.train_loss));
                        }
                    }
                }
                Budget::Offline { n_samples, .. } => {
                    let last = trace.last().expect("trace has the initial point");
                    rows.push((n_samples as u64, "final_test_accuracy", last.test_accuracy));
                    rows.push((n_samples as u64, "train_steps", last.step as f64));
                }
            }
        }
        Point::NeuronGal { d, act, loss, init, junk_steps, junk_gamma, junk_tau, junk_batch, n_theta, n_inner } => {
            let spec = NetworkSpec { dims: vec![*d, 1, 1], act: act.to_core(), bias: BiasLayout::None, fixed_output: Some(1.0) };
            let init = init.to_core();
            let lossk = loss.to_core();
            let target = TargetSpec::prefix_parity(*d);
            let mut draw = 0u64;
            let r = gal_mc_with(
                |rng| {
                    let net = spec.sample(&init, rng)?;
                    draw += 1;
                    if *junk_steps == 0 {
                        return Ok(net);
                    }
                    let seed = stream_seed ^ draw.wrapping_mul(0x9e37_79b9_7f4a_7c15);
                    junk_flow_run(&net, &lossk, *junk_gamma, *junk_tau, *junk_steps, *junk_batch, seed)
                },
                &lossk,
                &target,
                *n_theta,
                *n_inner,
                stream_seed,
            )
            .map_err(core)?;
            rows.push((*d as u64, "gal", r.value));
            rows.push((*d as u64, "gal_se", r.std_err));
        }
        Point::GaussianExact { d, a, sigma_b, width } => {
            let q = GaussianGalQuery { d: *d, a: *a, sigma_b: *sigma_b, n: *width };
            let v = gal_gaussian_total_log(&q).map_err(core)?;
            rows.push((*d as u64, "gal_exact", v.to_f64()));
            rows.push((*d as u64, "gal_exact_ln", if v.sign > 0 { v.ln_abs } else { f64::NAN }));
        }
        Point::PerturbedExact { d, mu } => {
            let q = PerturbedGalQuery { d: *d, mu: *mu };
            rows.push((*d as u64, "gal_perturbed_hidden", gal_perturbed_exact(&q, GalLayer::Hidden).map_err(core)?));
            rows.push((*d as u64, "gal_perturbed_output", gal_perturbed_exact(&q, GalLayer::Output).map_err(core)?));
        }
        Point::OneStep { d, a, width, act, bias, gamma, tau } => {
            let scheme = match bias {
                BiasCfg::Named(BiasName::FullParity) => BiasScheme::FullParity,
                BiasCfg::Named(BiasName::AlmostFull) => BiasScheme::AlmostFull,
                BiasCfg::Constant(b) => BiasScheme::Constant(*b),
            };
            let net = one_step_gd_closed_form(*d, *a, *width, *gamma, scheme, act.to_core(), stream_seed, *tau).map_err(core)?;
            let target = TargetSpec::prefix_parity(d - a);
            let acc = eval_accuracy(&net, &target, EvalMode::Enumerate).map_err(core)?;
            rows.push((*width as u64, "accuracy", acc.accuracy));
            rows.push((*width as u64, "zero_outputs", acc.zero_outputs as f64));
        }
    }
    Ok(JobOutput { rows })
}

/// Attach the identifying columns to a job's rows.
pub fn to_records(recipe: &str, params_hash: &str, seed: u64, out: JobOutput) -> Vec<Record> {
    out.rows
        .into_iter()
        .map(|(step, metric, value)| Record {
            recipe: recipe.to_string(),
            params_hash: params_hash.to_string(),
            seed,
            step,
            metric: metric.to_string(),
            value,
        })
        .collect()
}
