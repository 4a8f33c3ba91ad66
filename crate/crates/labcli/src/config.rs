//! JSON run configuration.
//!
//! ```json
//! {
//!   "recipe": "sigma_sweep",
//!   "seeds": [1, 2, 3],
//!   "output_dir": "runs/sigma",
//!   "params": { "sigmas": [0.0, 1.0], "train_samples": 640000 }
//! }
//! ```
//!
//! Every `params` field is optional; omitted fields take the recipe's
//! defaults and the fully resolved block is written to the run manifest.

use std::path::PathBuf;

use parity_core::nets::ENUMERATE_MAX_D;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::specs::{ActCfg, InitCfg, LossCfg};
use crate::{classify, LabError};

pub const RECIPES: [&str; 10] = [
    "sigma_sweep",
    "other_inits",
    "gal_curves",
    "gal_exact_scan",
    "sparse_parity",
    "dim_sweep",
    "loss_compare",
    "width_sweep",
    "junk_flow_gal",
    "one_step_demo",
];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    recipe: String,
    seeds: Vec<u64>,
    output_dir: PathBuf,
    #[serde(default)]
    params: serde_json::Value,
}

/// Budget for the MLP recipes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfflineParams {
    /// Training-set sizes; one job per size.
    pub train_sizes: Vec<usize>,
    /// Stop once an epoch's mean training loss is at most this.
    pub stop_loss: f64,
    /// Step cap when the loss never gets there.
    pub max_steps: usize,
}

/// Resolved parameters shared by the MLP training recipes. The job grid is
/// `dims × inits × losses × parity_degrees (× offline.train_sizes)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub dims: Vec<usize>,
    pub hidden: Vec<usize>,
    pub inits: Vec<InitCfg>,
    pub losses: Vec<LossCfg>,
    /// Sparse-parity degrees `k` (target `x_1⋯x_k`); empty means the full parity.
    pub parity_degrees: Vec<usize>,
    pub lr: f64,
    pub batch: usize,
    /// Online sample budget (ignored when `offline` is set).
    pub train_samples: usize,
    pub offline: Option<OfflineParams>,
    pub eval_every_samples: usize,
    pub test_samples: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MlpOverrides {
    dims: Option<Vec<usize>>,
    hidden: Option<Vec<usize>>,
    inits: Option<Vec<InitCfg>>,
    /// Shorthand for `inits` made of σ-perturbed Rademacher entries.
    sigmas: Option<Vec<f64>>,
    losses: Option<Vec<LossCfg>>,
    parity_degrees: Option<Vec<usize>>,
    lr: Option<f64>,
    batch: Option<usize>,
    train_samples: Option<usize>,
    offline: Option<OfflineParams>,
    eval_every_samples: Option<usize>,
    test_samples: Option<usize>,
}

/// Default online budget for the d=50 MLP recipes, in samples.
pub const DEFAULT_TRAIN_SAMPLES: usize = 64 * 150_000;

fn perturbed(sigmas: &[f64]) -> Vec<InitCfg> {
    sigmas.iter().map(|&sigma| InitCfg::PerturbedRademacher { sigma }).collect()
}

impl MlpParams {
    fn defaults(recipe: &str) -> MlpParams {
        let mut p = MlpParams {
            dims: vec![50],
            hidden: vec![512, 512, 64],
            inits: perturbed(&[0.0, 0.5, 1.0]),
            losses: vec![LossCfg::Hinge(1.0)],
            parity_degrees: vec![],
            lr: 0.01,
            batch: 64,
            train_samples: DEFAULT_TRAIN_SAMPLES,
            offline: None,
            eval_every_samples: 64 * 1000,
            test_samples: 2000,
        };
        match recipe {
            "other_inits" => {
                p.inits = vec![
                    InitCfg::UniformPerturbed { sigma: 0.1 },
                    InitCfg::UniformPerturbed { sigma: 1.0 },
                    InitCfg::SparsifiedRademacher { s: 0.5 },
                    InitCfg::SparsifiedRademacher { s: 1.0 / 3.0 },
                    InitCfg::SparsifiedRademacher { s: 0.2 },
                    InitCfg::DiscreteSymmetric,
                ];
            }
            "dim_sweep" => {
                p.dims = vec![100, 150, 200];
                p.inits = perturbed(&[0.0, 0.1, 0.2]);
            }
            "loss_compare" => {
                p.hidden = vec![512];
                p.losses = vec![LossCfg::Hinge(1.0), LossCfg::Squared];
                p.inits = perturbed(&[0.0, 1.0]);
            }
            "sparse_parity" => {
                p.parity_degrees = vec![3, 5];
                p.inits = vec![
                    InitCfg::Rademacher,
                    InitCfg::PerturbedRademacher { sigma: 0.1 },
                    InitCfg::PerturbedRademacher { sigma: 1.0 },
                    InitCfg::Gaussian,
                ];
                p.offline = Some(OfflineParams { train_sizes: vec![1000, 4000, 16000], stop_loss: 0.01, max_steps: 20_000 });
            }
            _ => {}
        }
        p
    }

    fn resolve(recipe: &str, o: MlpOverrides) -> Result<MlpParams, Invalid> {
        let mut p = MlpParams::defaults(recipe);
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = o.$f { p.$f = v; } )* };
        }
        take!(dims, hidden, losses, parity_degrees, lr, batch, train_samples, eval_every_samples, test_samples);
        if o.offline.is_some() {
            p.offline = o.offline;
        }
        match (o.inits, o.sigmas) {
            (Some(_), Some(_)) => return Err(Invalid::at("sigmas", "give either inits or sigmas, not both")),
            (Some(i), None) => p.inits = i,
            (None, Some(s)) => p.inits = perturbed(&s),
            (None, None) => {}
        }
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<(), Invalid> {
        nonempty("dims", &self.dims)?;
        nonempty("inits", &self.inits)?;
        nonempty("losses", &self.losses)?;
        if self.dims.contains(&0) || self.hidden.contains(&0) {
            return Err(Invalid::at("hidden", "dimensions and widths must be positive"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Invalid::at("lr", "learning rate must be positive"));
        }
        if self.batch == 0 || self.test_samples == 0 {
            return Err(Invalid::at("batch", "batch and test_samples must be positive"));
        }
        for i in &self.inits {
            i.to_core().validate().map_err(|e| Invalid::core("inits", e))?;
        }
        for l in &self.losses {
            l.to_core().validate().map_err(|e| Invalid::core("losses", e))?;
        }
        for &k in &self.parity_degrees {
            if k == 0 || self.dims.iter().any(|&d| k > d) {
                return Err(Invalid::at("parity_degrees", format!("degree {k} must lie in 1..=d")));
            }
        }
        match &self.offline {
            Some(off) => {
                nonempty("train_sizes", &off.train_sizes)?;
                if off.train_sizes.iter().any(|&n| n < self.batch) {
                    return Err(Invalid::at("train_sizes", "every training set must hold at least one batch"));
                }
                let biggest = off.train_sizes.iter().max().unwrap() * self.dims.iter().max().unwrap();
                if biggest > MAX_DATASET_ENTRIES {
                    return Err(Invalid::resource("train_sizes", format!("dataset of {biggest} entries exceeds {MAX_DATASET_ENTRIES}")));
                }
            }
            None if self.train_samples < self.batch => {
                return Err(Invalid::at("train_samples", "budget must cover at least one batch"));
            }
            None => {}
        }
        Ok(())
    }
}

/// Largest offline dataset (samples × d) a job may hold in memory.
pub const MAX_DATASET_ENTRIES: usize = 1 << 30;

/// Monte-Carlo alignment of a single neuron `σ(w·x)` across dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GalCurvesParams {
    pub dims: Vec<usize>,
    pub act: ActCfg,
    pub loss: LossCfg,
    pub inits: Vec<InitCfg>,
    pub n_theta: usize,
    pub n_inner: usize,
}

impl Default for GalCurvesParams {
    fn default() -> Self {
        GalCurvesParams {
            dims: vec![5, 9, 15, 21, 29, 39],
            act: ActCfg::Relu,
            loss: LossCfg::Hinge(1.0),
            inits: vec![
                InitCfg::Rademacher,
                InitCfg::PerturbedRademacher { sigma: 0.1 },
                InitCfg::PerturbedRademacher { sigma: 0.3 },
                InitCfg::PerturbedRademacher { sigma: 0.8 },
                InitCfg::PerturbedRademacher { sigma: 0.99 },
                InitCfg::Gaussian,
            ],
            n_theta: 200,
            n_inner: 2000,
        }
    }
}

/// Alignment of the same neuron after `t` junk-flow steps from a fresh draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JunkFlowParams {
    pub dims: Vec<usize>,
    pub act: ActCfg,
    pub loss: LossCfg,
    pub init: InitCfg,
    pub steps: Vec<usize>,
    pub gamma: f64,
    pub tau: f64,
    pub batch: usize,
    pub n_theta: usize,
    pub n_inner: usize,
}

impl Default for JunkFlowParams {
    fn default() -> Self {
        JunkFlowParams {
            dims: vec![5, 9, 15, 21],
            act: ActCfg::Relu,
            loss: LossCfg::Hinge(1.0),
            init: InitCfg::Gaussian,
            steps: vec![2, 5],
            gamma: 1.0,
            tau: 0.0,
            batch: 1000,
            n_theta: 200,
            n_inner: 2000,
        }
    }
}

/// Exact alignment values: Gaussian init over `dims × a × sigma_b`, and the
/// perturbed neuron over `dims × perturbed_mu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GalExactParams {
    pub dims: Vec<usize>,
    pub a: Vec<usize>,
    pub sigma_b: Vec<f64>,
    pub width: usize,
    pub perturbed_mu: Vec<f64>,
}

impl Default for GalExactParams {
    fn default() -> Self {
        GalExactParams { dims: (10..=40).step_by(2).collect(), a: vec![0], sigma_b: vec![0.0], width: 1, perturbed_mu: vec![] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasName {
    FullParity,
    AlmostFull,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BiasCfg {
    Named(BiasName),
    Constant(f64),
}

/// Two-layer nets after one closed-form step of population GD from `v = 0`,
/// scored on all `2^d` inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OneStepParams {
    pub dims: Vec<usize>,
    pub a: usize,
    pub acts: Vec<ActCfg>,
    /// Explicit hidden widths; when empty, `width_multipliers × d²`.
    pub widths: Vec<usize>,
    pub width_multipliers: Vec<usize>,
    pub bias: BiasCfg,
    pub gamma: f64,
    pub tau: f64,
}

impl OneStepParams {
    fn defaults(recipe: &str) -> Self {
        let mut p = OneStepParams {
            dims: vec![8, 10, 12],
            a: 0,
            acts: vec![ActCfg::ClippedRelu(1.0)],
            widths: vec![],
            width_multipliers: vec![1, 2, 4],
            bias: BiasCfg::Named(BiasName::FullParity),
            gamma: 1.0,
            tau: 0.0,
        };
        if recipe == "one_step_demo" {
            p.dims = vec![12];
            p.acts = vec![ActCfg::Relu, ActCfg::ClippedRelu(5.0)];
            p.width_multipliers = vec![50, 144];
        }
        p
    }

    fn check(&self) -> Result<(), Invalid> {
        nonempty("dims", &self.dims)?;
        nonempty("acts", &self.acts)?;
        if self.widths.is_empty() {
            nonempty("width_multipliers", &self.width_multipliers)?;
        }
        if self.widths.contains(&0) || self.width_multipliers.contains(&0) {
            return Err(Invalid::at("widths", "widths must be positive"));
        }
        for &d in &self.dims {
            if d > ENUMERATE_MAX_D {
                return Err(Invalid::resource("dims", format!("d={d} exceeds the enumeration limit {ENUMERATE_MAX_D}")));
            }
            if self.a + 2 > d {
                return Err(Invalid::at("a", format!("need d - a >= 2, got d={d}")));
            }
        }
        for a in &self.acts {
            a.to_core().validate().map_err(|e| Invalid::core("acts", e))?;
        }
        if !(self.gamma > 0.0) || !(self.tau >= 0.0) {
            return Err(Invalid::at("gamma", "need gamma > 0 and tau >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "recipe", content = "params", rename_all = "snake_case")]
pub enum Recipe {
    SigmaSweep(MlpParams),
    OtherInits(MlpParams),
    GalCurves(GalCurvesParams),
    GalExactScan(GalExactParams),
    SparseParity(MlpParams),
    DimSweep(MlpParams),
    LossCompare(MlpParams),
    WidthSweep(OneStepParams),
    JunkFlowGal(JunkFlowParams),
    OneStepDemo(OneStepParams),
}

impl Recipe {
    pub fn name(&self) -> &'static str {
        match self {
            Recipe::SigmaSweep(_) => "sigma_sweep",
            Recipe::OtherInits(_) => "other_inits",
            Recipe::GalCurves(_) => "gal_curves",
            Recipe::GalExactScan(_) => "gal_exact_scan",
            Recipe::SparseParity(_) => "sparse_parity",
            Recipe::DimSweep(_) => "dim_sweep",
            Recipe::LossCompare(_) => "loss_compare",
            Recipe::WidthSweep(_) => "width_sweep",
            Recipe::JunkFlowGal(_) => "junk_flow_gal",
            Recipe::OneStepDemo(_) => "one_step_demo",
        }
    }

    /// Defaults for `name` with `params` applied on top.
    pub fn resolve(name: &str, params: serde_json::Value) -> Result<Recipe, Invalid> {
        let params = if params.is_null() { serde_json::json!({}) } else { params };
        let mlp = |p: serde_json::Value| -> Result<MlpParams, Invalid> { MlpParams::resolve(name, parse(p)?) };
        let one_step = |p: serde_json::Value| -> Result<OneStepParams, Invalid> {
            let mut base = serde_json::to_value(OneStepParams::defaults(name)).expect("serializable");
            merge(&mut base, p)?;
            let r: OneStepParams = parse(base)?;
            r.check()?;
            Ok(r)
        };
        let recipe = match name {
            "sigma_sweep" => Recipe::SigmaSweep(mlp(params)?),
            "other_inits" => Recipe::OtherInits(mlp(params)?),
            "sparse_parity" => Recipe::SparseParity(mlp(params)?),
            "dim_sweep" => Recipe::DimSweep(mlp(params)?),
            "loss_compare" => Recipe::LossCompare(mlp(params)?),
            "gal_curves" => Recipe::GalCurves(parse(params)?),
            "junk_flow_gal" => Recipe::JunkFlowGal(parse(params)?),
            "gal_exact_scan" => Recipe::GalExactScan(parse(params)?),
            "width_sweep" | "one_step_demo" => {
                let p = one_step(params)?;
                if name == "width_sweep" { Recipe::WidthSweep(p) } else { Recipe::OneStepDemo(p) }
            }
            other => return Err(Invalid::at("recipe", format!("unknown recipe {other:?}; expected one of {}", RECIPES.join(", ")))),
        };
        recipe.check()?;
        Ok(recipe)
    }

    fn check(&self) -> Result<(), Invalid> {
        match self {
            Recipe::GalCurves(p) => {
                nonempty("dims", &p.dims)?;
                nonempty("inits", &p.inits)?;
                check_mc(&p.dims, p.act, p.loss, p.n_theta, p.n_inner)?;
                for i in &p.inits {
                    i.to_core().validate().map_err(|e| Invalid::core("inits", e))?;
                }
            }
            Recipe::JunkFlowGal(p) => {
                nonempty("dims", &p.dims)?;
                nonempty("steps", &p.steps)?;
                check_mc(&p.dims, p.act, p.loss, p.n_theta, p.n_inner)?;
                p.init.to_core().validate().map_err(|e| Invalid::core("init", e))?;
                if !(p.gamma >= 0.0) || !(p.tau >= 0.0) || p.batch == 0 {
                    return Err(Invalid::at("gamma", "need gamma >= 0, tau >= 0 and a positive batch"));
                }
            }
            Recipe::GalExactScan(p) => {
                nonempty("dims", &p.dims)?;
                nonempty("a", &p.a)?;
                nonempty("sigma_b", &p.sigma_b)?;
                for &d in &p.dims {
                    for &a in &p.a {
                        for &sigma_b in &p.sigma_b {
                            let q = parity_core::alignment::GaussianGalQuery { d, a, sigma_b, n: p.width };
                            q.validate().map_err(|e| Invalid::core("dims", e))?;
                        }
                    }
                    for &mu in &p.perturbed_mu {
                        if d > parity_core::alignment::PERTURBED_MAX_D {
                            let limit = parity_core::alignment::PERTURBED_MAX_D;
                            return Err(Invalid::resource("perturbed_mu", format!("d={d} exceeds the perturbed limit {limit}")));
                        }
                        if !(mu >= 0.0 && mu.is_finite()) || d < 2 {
                            return Err(Invalid::at("perturbed_mu", "mu must be finite and >= 0, and d >= 2"));
                        }
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }
}

fn check_mc(dims: &[usize], act: ActCfg, loss: LossCfg, n_theta: usize, n_inner: usize) -> Result<(), Invalid> {
    if dims.contains(&0) {
        return Err(Invalid::at("dims", "dimensions must be positive"));
    }
    act.to_core().validate().map_err(|e| Invalid::core("act", e))?;
    loss.to_core().validate().map_err(|e| Invalid::core("loss", e))?;
    if n_theta < 2 || n_inner < 2 || !n_inner.is_multiple_of(2) {
        return Err(Invalid::at("n_inner", "need n_theta >= 2 and an even n_inner >= 2"));
    }
    Ok(())
}

fn nonempty<T>(key: &'static str, v: &[T]) -> Result<(), Invalid> {
    if v.is_empty() {
        Err(Invalid::at(key, format!("{key} must not be empty")))
    } else {
        Ok(())
    }
}

fn parse<T: DeserializeOwned>(v: serde_json::Value) -> Result<T, Invalid> {
    serde_json::from_value(v).map_err(|e| {
        let msg = e.to_string();
        // serde names the offending field in backticks
        let key = msg.split('`').nth(1).unwrap_or("params").to_string();
        Invalid { key: Some(key), msg: format!("params: {msg}"), resource: false }
    })
}

/// Shallow merge of user overrides into a defaults object, rejecting keys
/// the defaults do not have.
fn merge(base: &mut serde_json::Value, over: serde_json::Value) -> Result<(), Invalid> {
    let (Some(b), serde_json::Value::Object(o)) = (base.as_object_mut(), over) else {
        return Err(Invalid::at("params", "params must be a JSON object"));
    };
    for (k, v) in o {
        if !b.contains_key(&k) {
            return Err(Invalid { msg: format!("params: unknown field `{k}`"), key: Some(k), resource: false });
        }
        b.insert(k, v);
    }
    Ok(())
}

/// A validation failure tied to the config key it concerns.
#[derive(Debug, Clone, PartialEq)]
pub struct Invalid {
    pub key: Option<String>,
    pub msg: String,
    pub resource: bool,
}

impl Invalid {
    fn at(key: &str, msg: impl Into<String>) -> Self {
        Invalid { key: Some(key.to_string()), msg: msg.into(), resource: false }
    }

    fn resource(key: &str, msg: impl Into<String>) -> Self {
        Invalid { key: Some(key.to_string()), msg: msg.into(), resource: true }
    }

    fn core(key: &str, e: parity_core::Error) -> Self {
        let resource = matches!(classify(e.clone()), LabError::Resource(_));
        Invalid { key: Some(key.to_string()), msg: e.to_string(), resource }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub recipe: Recipe,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

/// 1-based line of the first occurrence of `"key"` in `text`.
fn line_of(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

/// Parse and validate a configuration. Every error message starts with
/// `origin:line:` so editors can jump to it.
pub fn parse_config(text: &str, origin: &str) -> Result<RunConfig, LabError> {
    let raw: RawConfig = serde_json::from_str(text)
        .map_err(|e| {
            let msg = e.to_string();
            let msg = msg.rsplit_once(" at line ").map_or(msg.as_str(), |(m, _)| m);
            LabError::Config(format!("{origin}:{}:{}: {msg}", e.line(), e.column()))
        })?;
    let anchor = |inv: Invalid| {
        let line = inv.key.as_deref().and_then(|k| line_of(text, k)).or_else(|| line_of(text, "params")).unwrap_or(1);
        let msg = format!("{origin}:{line}: {}", inv.msg);
        if inv.resource { LabError::Resource(msg) } else { LabError::Config(msg) }
    };
    if raw.seeds.is_empty() {
        return Err(anchor(Invalid::at("seeds", "at least one seed is required")));
    }
    let recipe = Recipe::resolve(&raw.recipe, raw.params).map_err(anchor)?;
    Ok(RunConfig { recipe, seeds: raw.seeds, output_dir: raw.output_dir })
}
