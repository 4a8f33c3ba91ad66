//! Serializable mirrors of the core enums, with the compact string forms
//! used on the command line (`perturbed:0.5`, `clipped_relu:5`, `hinge:1`).

use std::fmt;
use std::str::FromStr;

use parity_core::nets::{Activation, InitSpec, LossKind};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum InitCfg {
    Gaussian,
    Rademacher,
    PerturbedRademacher { sigma: f64 },
    UniformPerturbed { sigma: f64 },
    SparsifiedRademacher { s: f64 },
    DiscreteSymmetric,
}

impl InitCfg {
    pub fn to_core(self) -> InitSpec {
        match self {
            InitCfg::Gaussian => InitSpec::Gaussian,
            InitCfg::Rademacher => InitSpec::Rademacher,
            InitCfg::PerturbedRademacher { sigma } => InitSpec::PerturbedRademacher { sigma },
            InitCfg::UniformPerturbed { sigma } => InitSpec::UniformPerturbed { sigma },
            InitCfg::SparsifiedRademacher { s } => InitSpec::SparsifiedRademacher { s },
            InitCfg::DiscreteSymmetric => InitSpec::DiscreteSymmetric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ActCfg {
    Relu,
    Threshold,
    ClippedRelu(f64),
}

impl ActCfg {
    pub fn to_core(self) -> Activation {
        match self {
            ActCfg::Relu => Activation::Relu,
            ActCfg::Threshold => Activation::Threshold,
            ActCfg::ClippedRelu(c) => Activation::ClippedRelu(c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum LossCfg {
    Hinge(f64),
    Correlation,
    Squared,
    L1,
}

impl LossCfg {
    pub fn to_core(self) -> LossKind {
        match self {
            LossCfg::Hinge(b) => LossKind::Hinge(b),
            LossCfg::Correlation => LossKind::Correlation,
            LossCfg::Squared => LossKind::Squared,
            LossCfg::L1 => LossKind::L1,
        }
    }
}

fn split(s: &str) -> (&str, Option<&str>) {
    match s.split_once(':') {
        Some((k, v)) => (k, Some(v)),
        None => (s, None),
    }
}

fn number(what: &str, v: Option<&str>) -> Result<f64, String> {
    let v = v.ok_or_else(|| format!("{what} needs a value, e.g. {what}:0.5"))?;
    v.parse().map_err(|_| format!("bad number {v:?} for {what}"))
}

impl FromStr for InitCfg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (k, v) = split(s);
        Ok(match k {
            "gaussian" => InitCfg::Gaussian,
            "rademacher" => InitCfg::Rademacher,
            "perturbed" => InitCfg::PerturbedRademacher { sigma: number(k, v)? },
            "uniform" => InitCfg::UniformPerturbed { sigma: number(k, v)? },
            "sparse" => InitCfg::SparsifiedRademacher { s: number(k, v)? },
            "discrete" => InitCfg::DiscreteSymmetric,
            _ => return Err(format!("unknown init {s:?}; expected gaussian, rademacher, perturbed:σ, uniform:σ, sparse:s or discrete")),
        })
    }
}

impl FromStr for ActCfg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (k, v) = split(s);
        Ok(match k {
            "relu" => ActCfg::Relu,
            "threshold" => ActCfg::Threshold,
            "clipped_relu" | "crelu" => ActCfg::ClippedRelu(number(k, v)?),
            _ => return Err(format!("unknown activation {s:?}; expected relu, threshold or clipped_relu:c")),
        })
    }
}

impl FromStr for LossCfg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (k, v) = split(s);
        Ok(match k {
            "hinge" => LossCfg::Hinge(if v.is_some() { number(k, v)? } else { 1.0 }),
            "correlation" | "corr" => LossCfg::Correlation,
            "squared" => LossCfg::Squared,
            "l1" => LossCfg::L1,
            _ => return Err(format!("unknown loss {s:?}; expected hinge[:β], correlation, squared or l1")),
        })
    }
}

macro_rules! string_form {
    ($t:ty) => {
        impl TryFrom<String> for $t {
            type Error = String;
            fn try_from(s: String) -> Result<Self, String> {
                s.parse()
            }
        }

        impl From<$t> for String {
            fn from(v: $t) -> String {
                v.to_string()
            }
        }
    };
}

string_form!(InitCfg);
string_form!(ActCfg);
string_form!(LossCfg);

impl fmt::Display for InitCfg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitCfg::Gaussian => write!(f, "gaussian"),
            InitCfg::Rademacher => write!(f, "rademacher"),
            InitCfg::PerturbedRademacher { sigma } => write!(f, "perturbed:{sigma}"),
            InitCfg::UniformPerturbed { sigma } => write!(f, "uniform:{sigma}"),
            InitCfg::SparsifiedRademacher { s } => write!(f, "sparse:{s}"),
            InitCfg::DiscreteSymmetric => write!(f, "discrete"),
        }
    }
}

impl fmt::Display for ActCfg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActCfg::Relu => write!(f, "relu"),
            ActCfg::Threshold => write!(f, "threshold"),
            ActCfg::ClippedRelu(c) => write!(f, "clipped_relu:{c}"),
        }
    }
}

impl fmt::Display for LossCfg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossCfg::Hinge(b) => write!(f, "hinge:{b}"),
            LossCfg::Correlation => write!(f, "correlation"),
            LossCfg::Squared => write!(f, "squared"),
            LossCfg::L1 => write!(f, "l1"),
        }
    }
}
