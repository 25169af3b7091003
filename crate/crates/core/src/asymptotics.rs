//! Asymptotic laws of `F_n^GOE(ε)`, the moment exponent `ν(k)`, and least-squares
//! fits of numerical data against power and power-times-log laws.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::rmt::mean_density;
use crate::specialfns::{ln_factorial, ln_gamma_pos};

/// `ν(k) = int(k) (k - (1 + int(k))/2)`, the exponent of `1/ε` in the k-th moment.
pub fn nu_exponent(k: f64) -> Result<f64> {
    if !(k > 0.0) || !k.is_finite() {
        return domain(format!("nu(k) needs k > 0, got {k}"));
    }
    let p = k.floor();
    Ok(p * (k - 0.5 * (1.0 + p)))
}

/// Size of the eigenvalue cluster dominating the k-th moment, and whether `k`
/// sits on a crossover (integer `k`, where a logarithm appears).
pub fn dominant_cluster(k: f64) -> Result<(usize, bool)> {
    if !k.is_finite() {
        return domain(format!("k must be finite, got {k}"));
    }
    if k < 1.0 {
        return Err(Error::NoDivergence(k));
    }
    let p = k.floor();
    Ok((p as usize, p == k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    SmallEps,
    LargeEps,
}

/// `constant · ε^{-power_exponent} · ln(1/ε)^{log_power}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticLaw {
    pub n_order: usize,
    pub power_exponent: f64,
    pub log_power: u32,
    pub constant: f64,
    pub regime: Regime,
}

impl AsymptoticLaw {
    pub fn evaluate(&self, eps: f64) -> f64 {
        let lead = self.constant * (-self.power_exponent * eps.ln()).exp();
        if self.log_power == 0 {
            lead
        } else {
            lead * (-eps.ln()).powi(self.log_power as i32)
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return domain("order n must be at least 1");
    }
    Ok(())
}

/// `ln` of `(2^{n-1}/π^{n/2}) n ∏_{j=0}^{n-1} Γ(1+j/2) Γ((j+1)/2)`.
pub fn ln_small_eps_constant(n: usize) -> f64 {
    let nf = n as f64;
    let g: f64 = (0..n)
        .map(|j| {
            let j = j as f64;
            ln_gamma_pos(1.0 + 0.5 * j) + ln_gamma_pos(0.5 * (j + 1.0))
        })
        .sum();
    (nf - 1.0) * 2f64.ln() - 0.5 * nf * PI.ln() + nf.ln() + g
}

/// `ln` of `n! (2π)^{-n/2} [∏_{j=1}^n Γ(j/2)]²`.
pub fn ln_large_eps_constant(n: usize) -> f64 {
    let g: f64 = (1..=n).map(|j| ln_gamma_pos(0.5 * j as f64)).sum();
    ln_factorial(n) - 0.5 * n as f64 * (2.0 * PI).ln() + 2.0 * g
}

/// `F_n ≈ c ε^{-n(n-1)/2} ln(1/ε)` as `ε → 0`.
pub fn small_eps_law(n: usize) -> Result<AsymptoticLaw> {
    check_n(n)?;
    Ok(AsymptoticLaw {
        n_order: n,
        power_exponent: 0.5 * (n * (n - 1)) as f64,
        log_power: 1,
        constant: ln_small_eps_constant(n).exp(),
        regime: Regime::SmallEps,
    })
}

/// `F_n ≈ c ε^{-n²/2}` as `ε → ∞`.
pub fn large_eps_law(n: usize) -> Result<AsymptoticLaw> {
    check_n(n)?;
    Ok(AsymptoticLaw {
        n_order: n,
        power_exponent: 0.5 * (n * n) as f64,
        log_power: 0,
        constant: ln_large_eps_constant(n).exp(),
        regime: Regime::LargeEps,
    })
}

/// `K_n ≈ (πρ(μ)J / (-i(μ₁ - μ₂*)/J))^{n²/2}`, the perturbative regime of the ratio.
pub fn perturbative_ratio(
    n: usize,
    mu: f64,
    coupling: f64,
    mu1: Complex64,
    mu2_star: Complex64,
) -> Result<Complex64> {
    let rho = mean_density(mu, coupling)?;
    let diff = mu1 - mu2_star;
    if !(diff.im > 0.0) {
        return domain("perturbative ratio needs Im(mu1 - mu2*) > 0");
    }
    let denom = Complex64::new(0.0, -1.0) * diff / coupling;
    let base = Complex64::new(PI * rho * coupling, 0.0) / denom;
    let power = 0.5 * (n * n) as f64;
    Ok((power * base.ln()).exp())
}

/// Result of [`crossover_fit`]: `value ≈ constant · ε^{-exponent} [· (ln(1/ε) + offset/constant)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossoverFit {
    pub exponent: f64,
    pub constant: f64,
    /// Additive `b` of the `a ln(1/ε) + b` factor; zero for the pure power law.
    pub offset: f64,
    /// RMS of the residuals of `ln(value)`.
    pub residual: f64,
}

fn check_points(points: &[(f64, f64)]) -> Result<()> {
    if points.len() < 5 {
        return Err(Error::Fit(format!(
            "need at least 5 points, got {}",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|&(e, v)| !(e > 0.0 && v > 0.0) || !e.is_finite() || !v.is_finite())
    {
        return Err(Error::Fit(
            "points must have finite positive eps and value".into(),
        ));
    }
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(0.0, f64::max);
    if hi / lo < 100.0 * (1.0 - 1e-12) {
        return Err(Error::Fit(format!(
            "eps range [{lo:e}, {hi:e}] spans less than two decades"
        )));
    }
    Ok(())
}

/// Weighted linear least squares for `y ≈ c0 + c1 x`; returns `(c0, c1)`.
fn linear_ls(x: &[f64], y: &[f64], w: &[f64]) -> Result<(f64, f64)> {
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..x.len() {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
        sxx += w[i] * x[i] * x[i];
        sxy += w[i] * x[i] * y[i];
    }
    let det = sw * sxx - sx * sx;
    if !(det.abs() > 1e-14 * sw * sxx) {
        return Err(Error::Fit("singular normal equations".into()));
    }
    Ok(((sxx * sy - sx * sxy) / det, (sw * sxy - sx * sy) / det))
}

fn rms(v: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut k) = (0.0, 0usize);
    for r in v {
        s += r * r;
        k += 1;
    }
    (s / k as f64).sqrt()
}

/// Fits `value = c ε^{-α}` (`with_log = false`) or `value = ε^{-α} (a ln(1/ε) + b)`
/// (`with_log = true`). The log model is profiled over `α` by golden-section search,
/// with `(a, b)` from relative-weighted linear least squares at each `α`.
pub fn crossover_fit(points: &[(f64, f64)], with_log: bool) -> Result<CrossoverFit> {
    check_points(points)?;
    let x: Vec<f64> = points.iter().map(|p| -p.0.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let ones = vec![1.0; x.len()];
    let (c0, c1) = linear_ls(&x, &y, &ones)?;
    if !with_log {
        let residual = rms(x.iter().zip(&y).map(|(xi, yi)| yi - c0 - c1 * xi));
        return Ok(CrossoverFit {
            exponent: c1,
            constant: c0.exp(),
            offset: 0.0,
            residual,
        });
    }

    // for fixed α, fit v ε^α = a L + b with weights 1/(v ε^α)² (relative errors)
    let inner = |alpha: f64| -> Result<(f64, f64, f64)> {
        let z: Vec<f64> = points.iter().map(|&(e, v)| v * e.powf(alpha)).collect();
        let w: Vec<f64> = z.iter().map(|zi| 1.0 / (zi * zi)).collect();
        let (b, a) = linear_ls(&x, &z, &w)?;
        let res = rms(z.iter().zip(&x).map(|(zi, xi)| {
            let m = a * xi + b;
            if m > 0.0 {
                zi.ln() - m.ln()
            } else {
                f64::INFINITY
            }
        }));
        Ok((a, b, res))
    };

    let (mut lo, mut hi) = (c1 - 1.5, c1 + 0.5);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut m1 = hi - g * (hi - lo);
    let mut m2 = lo + g * (hi - lo);
    let mut f1 = inner(m1)?.2;
    let mut f2 = inner(m2)?.2;
    for _ in 0..200 {
        if hi - lo < 1e-12 {
            break;
        }
        if f1 <= f2 {
            hi = m2;
            m2 = m1;
            f2 = f1;
            m1 = hi - g * (hi - lo);
            f1 = inner(m1)?.2;
        } else {
            lo = m1;
            m1 = m2;
            f1 = f2;
            m2 = lo + g * (hi - lo);
            f2 = inner(m2)?.2;
        }
    }
    let alpha = 0.5 * (lo + hi);
    let (a, b, residual) = inner(alpha)?;
    if !(a > 0.0) || !residual.is_finite() {
        return Err(Error::Fit(format!(
            "log model fit failed (a = {a}, residual = {residual})"
        )));
    }
    Ok(CrossoverFit {
        exponent: alpha,
        constant: a,
        offset: b,
        residual,
    })
}

/// Ordinary least squares of `value = a ln(1/ε) + b`; returns `(a, b, rms residual)`.
pub fn log_law_fit(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    check_points(points)?;
    let x: Vec<f64> = points.iter().map(|p| -p.0.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let (b, a) = linear_ls(&x, &y, &vec![1.0; x.len()])?;
    let residual = rms(x.iter().zip(&y).map(|(xi, yi)| yi - a * xi - b));
    Ok((a, b, residual))
}

/// `n` log-spaced values from `start` to `stop` inclusive.
pub fn log_grid(start: f64, stop: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    let (a, b) = (start.ln(), stop.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
