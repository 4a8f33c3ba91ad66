//! Gradient alignment `GAL_f(θ) = E_θ ‖Γ_f(θ) − Γ_r(θ)‖²`: exact evaluators
//! for two-layer ReLU networks under Gaussian and perturbed-Rademacher
//! initializations, a Monte-Carlo estimator for arbitrary networks, and the
//! junk flow driven by random labels.

mod gaussian;
mod mc;
mod perturbed;

pub use gaussian::{
    gal_gaussian_coord, gal_gaussian_coord_log, gal_gaussian_total, gal_gaussian_total_log, GalCoord,
    GaussianGalQuery, GAUSSIAN_MAX_D,
};
pub use mc::{gal_mc, gal_mc_with, junk_flow_run, NetworkSpec};
pub use perturbed::{gal_perturbed_exact, GalLayer, PerturbedGalQuery, PERTURBED_MAX_D};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GalMethod {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GalResult {
    pub value: f64,
    pub method: GalMethod,
    /// 0 for exact values.
    pub std_err: f64,
}

impl GalResult {
    pub fn exact(value: f64) -> Self {
        GalResult { value, method: GalMethod::Exact, std_err: 0.0 }
    }

    /// Whether `other` lies within `k` standard errors (of either result).
    pub fn agrees_with(&self, other: f64, k: f64) -> bool {
        (self.value - other).abs() <= k * self.std_err
    }
}
