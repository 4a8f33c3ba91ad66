use super::quad::integrate_split;
use super::{check_rho, relu_mean, std_cdf, std_pdf, NormalizedHermite};
use crate::error::{invalid, Result};

/// Above this `|ρ|` the series converge too slowly and a 1D integral is used.
const SERIES_MAX_RHO: f64 = 0.9;
const SERIES_TOL: f64 = 1e-14;
const QUAD_TOL: f64 = 1e-15;
/// Half-width of the effective support of `φ`.
const TAIL: f64 = 12.0;

/// Shifts and correlation for `Λ_ρ(a,b)` and the ReLU cross-moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivariateQuery {
    pub a: f64,
    pub b: f64,
    pub rho: f64,
}

impl BivariateQuery {
    pub fn new(a: f64, b: f64, rho: f64) -> Self {
        BivariateQuery { a, b, rho }
    }

    fn validate(&self) -> Result<()> {
        check_rho(self.rho)?;
        if self.a.is_nan() || self.b.is_nan() {
            return Err(invalid("shifts must not be NaN"));
        }
        Ok(())
    }
}

/// Sum `Σ_k u_k(a) u_k(b) ρ^{k+1+p} · c_k` until the geometric envelope
/// `|ρ|^{k+1+p}/(1-|ρ|)` (using `|u_k| ≤ 1`) falls below tolerance.
fn tetrachoric(a: f64, b: f64, rho: f64, shift: i32, coef: impl Fn(f64) -> f64) -> f64 {
    let r = rho.abs();
    let mut pow = rho.powi(1 + shift);
    let mut sum = 0.0;
    for (k, (ua, ub)) in NormalizedHermite::new(a).zip(NormalizedHermite::new(b)).enumerate() {
        let term = ua * ub * pow * coef(k as f64);
        sum += term;
        if term.abs() < SERIES_TOL && pow.abs() / (1.0 - r) < SERIES_TOL {
            break;
        }
        pow *= rho;
    }
    sum
}

/// `Λ_ρ(a,b) = P(g ≤ a, g' ≤ b)` for unit Gaussians with correlation `ρ`.
pub fn lambda_cdf(q: BivariateQuery) -> Result<f64> {
    q.validate()?;
    let BivariateQuery { a, b, rho } = q;
    if rho == 1.0 {
        return Ok(std_cdf(a.min(b)));
    }
    if rho == -1.0 {
        return Ok((std_cdf(a) + std_cdf(b) - 1.0).max(0.0));
    }
    if rho.abs() <= SERIES_MAX_RHO {
        return Ok(std_cdf(a) * std_cdf(b) + tetrachoric(a, b, rho, 0, |k| 1.0 / (k + 1.0)));
    }
    // ∫_{-∞}^a φ(t) Φ((b - ρt)/s) dt; the inner cdf jumps near t = b/ρ
    let s = (1.0 - rho * rho).sqrt();
    let lo = a.min(0.0) - TAIL;
    let hi = a.min(TAIL);
    if hi <= lo {
        return Ok(0.0);
    }
    let v = integrate_split(|t| std_pdf(t) * std_cdf((b - rho * t) / s), lo, hi, &[b / rho], QUAD_TOL, QUAD_TOL);
    Ok(v.clamp(0.0, 1.0))
}

/// `E[ReLU(a+Z) ReLU(b+Z')]` for unit Gaussians with correlation `ρ`.
pub fn relu_cross_moment(q: BivariateQuery) -> Result<f64> {
    q.validate()?;
    let BivariateQuery { a, b, rho } = q;
    if rho == 1.0 {
        // ∫_{t ≥ m} (a+t)(b+t) φ(t) dt
        let m = (-a).max(-b);
        let tail = std_cdf(-m);
        let pm = std_pdf(m);
        return Ok(m * pm + tail + (a + b) * pm + a * b * tail);
    }
    if rho == -1.0 {
        // Z' = -Z: ∫_{-a}^{b} (a+t)(b-t) φ(t) dt
        let (l, u) = (-a, b);
        if u <= l {
            return Ok(0.0);
        }
        let dcdf = std_cdf(u) - std_cdf(l);
        let (pl, pu) = (std_pdf(l), std_pdf(u));
        let second = l * pl - u * pu + dcdf;
        return Ok((a * b * dcdf + (b - a) * (pl - pu) - second).max(0.0));
    }
    if rho.abs() <= SERIES_MAX_RHO {
        let series = tetrachoric(a, b, rho, 1, |k| 1.0 / ((k + 1.0) * (k + 2.0)));
        return Ok(relu_mean(a) * relu_mean(b) + std_cdf(a) * std_cdf(b) * rho + series);
    }
    // E_W ReLU(b + ρt + sW) = s·R((b + ρt)/s)
    let s = (1.0 - rho * rho).sqrt();
    let lo = -a;
    let hi = (-a).max(0.0) + TAIL;
    let lo = lo.max(-TAIL);
    if hi <= lo {
        return Ok(0.0);
    }
    let v = integrate_split(
        |t| (a + t) * std_pdf(t) * s * relu_mean((b + rho * t) / s),
        lo,
        hi,
        &[-b / rho],
        QUAD_TOL,
        QUAD_TOL,
    );
    Ok(v.max(0.0))
}
