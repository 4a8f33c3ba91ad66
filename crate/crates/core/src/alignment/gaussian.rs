use num_bigint::BigInt;

use crate::error::{invalid, Error, Result};
use crate::exactcomb::LogValue;
use crate::gaussiankit::{kernel_series_log, AltKernel, RhoLine};

pub const GAUSSIAN_MAX_D: usize = 2000;

/// Two-layer ReLU network `Σ_i v_i ReLU(w_i·x + b_i)` with `w ~ N(0, I/d)`,
/// `b ~ N(0, σ_b²)`, `v ~ N(0, 1/n)`, against `f_a(x) = Π_{i≤d−a} x_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianGalQuery {
    pub d: usize,
    pub a: usize,
    pub sigma_b: f64,
    pub n: usize,
}

/// One gradient coordinate of a hidden neuron; `Hidden(j)` is the weight on
/// input `j` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GalCoord {
    Hidden(usize),
    Bias,
    Output,
}

impl GaussianGalQuery {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.n == 0 {
            return Err(invalid("dimension and width must be positive"));
        }
        if self.d > GAUSSIAN_MAX_D {
            return Err(Error::DimensionTooLarge { what: "Gaussian alignment", d: self.d, limit: GAUSSIAN_MAX_D });
        }
        if 2 * self.a > self.d {
            return Err(invalid(format!("co-degree a={} exceeds d/2 for d={}", self.a, self.d)));
        }
        if !(self.sigma_b >= 0.0 && self.sigma_b.is_finite()) {
            return Err(invalid(format!("bias std-dev must be >= 0, got {}", self.sigma_b)));
        }
        Ok(())
    }
}

/// Coefficients of `(1−t)^s (1+t)^{d−s}`, i.e.
/// `c_j = Σ_k (−1)^k C(s,k) C(d−s, j−k)`.
pub(crate) fn krawtchouk_row(s: usize, d: usize) -> Vec<BigInt> {
    let mut row = vec![BigInt::from(0); d + 1];
    row[0] = BigInt::from(1);
    for i in 0..d {
        let minus = i < s;
        for j in (1..=i + 1).rev() {
            let prev = row[j - 1].clone();
            if minus {
                row[j] -= prev;
            } else {
                row[j] += prev;
            }
        }
    }
    row
}

/// `E_θ (E_x f_a(x) ∂NN/∂θ_p)²` for one coordinate, in sign/log form.
pub fn gal_gaussian_coord_log(q: &GaussianGalQuery, coord: GalCoord) -> Result<LogValue> {
    q.validate()?;
    let d = q.d;
    let support = d - q.a;
    let s = match coord {
        GalCoord::Hidden(j) if j == 0 || j > d => {
            return Err(Error::OutOfRange { index: j as i64, lo: 1, hi: d as i64 })
        }
        GalCoord::Hidden(j) if j <= support => support - 1,
        GalCoord::Hidden(_) => support + 1,
        GalCoord::Bias | GalCoord::Output => support,
    };
    let var = 1.0 + q.sigma_b * q.sigma_b;
    let coeffs = krawtchouk_row(s, d);
    let (kernel, factor) = match coord {
        GalCoord::Output => (AltKernel::Relu, var),
        _ => (AltKernel::Step, 1.0 / q.n as f64),
    };
    // ρ̃_j = ((d − 2j)/d + σ²)/(1 + σ²)
    let v = kernel_series_log(&coeffs, RhoLine::BiasShifted { sigma: q.sigma_b }, kernel)?;
    if v.sign == 0 {
        return Ok(v);
    }
    Ok(LogValue { sign: v.sign, ln_abs: v.ln_abs - d as f64 * std::f64::consts::LN_2 }.scale(factor))
}

pub fn gal_gaussian_coord(q: &GaussianGalQuery, coord: GalCoord) -> Result<f64> {
    gal_gaussian_coord_log(q, coord).map(LogValue::to_f64)
}

/// Sum over all `P = nd + 2n` coordinates using the symmetry between neurons
/// and between inputs inside and outside the support.
pub fn gal_gaussian_total_log(q: &GaussianGalQuery) -> Result<LogValue> {
    q.validate()?;
    let support = q.d - q.a;
    let n = q.n as f64;
    let mut total = gal_gaussian_coord_log(q, GalCoord::Hidden(1))?.scale(support as f64 * n);
    if q.a > 0 {
        total = total.add(gal_gaussian_coord_log(q, GalCoord::Hidden(q.d))?.scale(q.a as f64 * n));
    }
    total = total.add(gal_gaussian_coord_log(q, GalCoord::Bias)?.scale(n));
    Ok(total.add(gal_gaussian_coord_log(q, GalCoord::Output)?.scale(n)))
}

pub fn gal_gaussian_total(q: &GaussianGalQuery) -> Result<f64> {
    gal_gaussian_total_log(q).map(LogValue::to_f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactcomb::binom;
    use crate::gaussiankit::{orthant_centered, relu_cross_moment, BivariateQuery};

    /// Double sum over `k ~ Bin(|S|)`, `m ~ Bin(d−|S|)` in plain `f64`; fine
    /// for small `d` where cancellation is mild.
    fn double_sum(q: &GaussianGalQuery, s: usize, output: bool) -> f64 {
        let d = q.d;
        let var = 1.0 + q.sigma_b * q.sigma_b;
        let mut total = 0.0;
        for k in 0..=s {
            for m in 0..=d - s {
                let w = binom(s as i64, k as i64).to_string().parse::<f64>().unwrap()
                    * binom((d - s) as i64, m as i64).to_string().parse::<f64>().unwrap()
                    / 2f64.powi(d as i32);
                let rho = ((d as f64 - 2.0 * k as f64 - 2.0 * m as f64) / d as f64 + q.sigma_b * q.sigma_b) / var;
                let rho = rho.clamp(-1.0, 1.0);
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let kv = if output {
                    var * relu_cross_moment(BivariateQuery::new(0.0, 0.0, rho)).unwrap()
                } else {
                    orthant_centered(rho).unwrap() / q.n as f64
                };
                total += sign * w * kv;
            }
        }
        total
    }

    #[test]
    fn krawtchouk_matches_convolution() {
        for d in 1..12usize {
            for s in 0..=d {
                let row = krawtchouk_row(s, d);
                for (j, c) in row.iter().enumerate() {
                    let want: BigInt = (0..=j.min(s))
                        .map(|k| {
                            let t = binom(s as i64, k as i64) * binom((d - s) as i64, (j - k) as i64);
                            if k % 2 == 0 { t } else { -t }
                        })
                        .sum();
                    assert_eq!(*c, want, "s={s} d={d} j={j}");
                }
            }
        }
    }

    #[test]
    fn matches_double_sum() {
        for (d, a, sigma_b, n) in [(8, 0, 0.0, 1), (8, 4, 0.5, 3), (10, 2, 0.3, 2), (9, 1, 0.0, 1)] {
            let q = GaussianGalQuery { d, a, sigma_b, n };
            let cases = [
                (GalCoord::Hidden(1), d - a - 1, false),
                (GalCoord::Hidden(d), if a > 0 { d - a + 1 } else { d - 1 }, false),
                (GalCoord::Bias, d - a, false),
                (GalCoord::Output, d - a, true),
            ];
            for (coord, s, out) in cases {
                let got = gal_gaussian_coord(&q, coord).unwrap();
                let want = double_sum(&q, s, out);
                assert!((got - want).abs() <= 1e-13 + 1e-9 * want.abs(), "{q:?} {coord:?}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn total_equals_unsymmetrized_sum() {
        let q = GaussianGalQuery { d: 8, a: 0, sigma_b: 0.5, n: 4 };
        let mut explicit = 0.0;
        for _neuron in 0..q.n {
            for j in 1..=q.d {
                explicit += gal_gaussian_coord(&q, GalCoord::Hidden(j)).unwrap();
            }
            explicit += gal_gaussian_coord(&q, GalCoord::Bias).unwrap();
            explicit += gal_gaussian_coord(&q, GalCoord::Output).unwrap();
        }
        let total = gal_gaussian_total(&q).unwrap();
        assert!((total / explicit - 1.0).abs() < 1e-12, "{total} vs {explicit}");
        let q = GaussianGalQuery { d: 8, a: 4, sigma_b: 0.0, n: 2 };
        assert!(gal_gaussian_total(&q).unwrap() > 0.0);
    }

    #[test]
    fn total_is_affine_in_width() {
        // hidden and bias coordinates carry E v² = 1/n, output coordinates do not
        let at = |n| gal_gaussian_total(&GaussianGalQuery { d: 10, a: 2, sigma_b: 0.5, n }).unwrap();
        let (t1, t2, t4) = (at(1), at(2), at(4));
        assert!(((t4 - t2) - 2.0 * (t2 - t1)).abs() <= 1e-12 * t4);
        let out = gal_gaussian_coord(&GaussianGalQuery { d: 10, a: 2, sigma_b: 0.5, n: 1 }, GalCoord::Output).unwrap();
        assert!(((t2 - t1) / out - 1.0).abs() < 1e-10);
    }

    #[test]
    fn log_decreasing_in_d() {
        let mut prev = f64::INFINITY;
        for d in (10..=40).step_by(2) {
            let q = GaussianGalQuery { d, a: 0, sigma_b: 0.0, n: 1 };
            let v = gal_gaussian_total_log(&q).unwrap();
            assert_eq!(v.sign, 1, "d={d}");
            assert!(v.ln_abs < prev, "d={d}");
            prev = v.ln_abs;
        }
    }

    #[test]
    fn deterministic_and_validated() {
        let q = GaussianGalQuery { d: 16, a: 3, sigma_b: 0.2, n: 5 };
        assert_eq!(gal_gaussian_coord(&q, GalCoord::Output).unwrap(), gal_gaussian_coord(&q, GalCoord::Output).unwrap());
        assert!(gal_gaussian_coord(&q, GalCoord::Hidden(0)).is_err());
        assert!(gal_gaussian_coord(&q, GalCoord::Hidden(17)).is_err());
        assert!(GaussianGalQuery { d: 10, a: 6, sigma_b: 0.0, n: 1 }.validate().is_err());
        assert!(GaussianGalQuery { d: 2001, a: 0, sigma_b: 0.0, n: 1 }.validate().is_err());
    }
}
