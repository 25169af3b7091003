//! Monte Carlo estimates of negative moments of GOE characteristic polynomials,
//! their universal ratio, and the large-N saddle-point prediction for `K^(1)`.
//!
//! Sample `j` of an estimate is drawn from stream `cfg.stream + j`, so every draw
//! is reproducible on its own and estimates from disjoint stream ranges are
//! independent. Per-sample work runs in parallel; reductions are sequential in
//! sample order, so results do not depend on the thread count.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::eigen::spectrum;
use crate::error::{domain, Error, Result};
use crate::fneval::{fn_goe_pfaffian, fn_goe_quadrature, QUADRATURE_MAX_ORDER};
use crate::quad::ordered_simplex;
use crate::rmt::{
    epsilon_from_params, log_char_poly, mean_density, saddle_points, sample_goe, GoeConfig,
    SpectralParams,
};
use crate::specialfns::{ln_factorial, ln_g_n_constant, ln_gamma_pos};

/// Number of blocks for block statistics and median-of-means.
pub const BLOCKS: usize = 20;
/// Smallest accepted sample count.
pub const MIN_SAMPLES: usize = 100;
/// Dispersion threshold of the heavy-tail flag, in robust standard deviations.
pub const HEAVY_TAIL_FACTOR: f64 = 10.0;

/// A complex number stored as `(ln|z|, arg z)`, so that moments of large `N`
/// neither overflow nor underflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogComplex {
    pub ln_abs: f64,
    pub phase: f64,
}

impl LogComplex {
    pub const ONE: LogComplex = LogComplex {
        ln_abs: 0.0,
        phase: 0.0,
    };

    pub fn from_ln(z: Complex64) -> Self {
        Self {
            ln_abs: z.re,
            phase: z.im.sin().atan2(z.im.cos()),
        }
    }

    /// `shift` is a log-scale offset: the represented number is `z · e^{shift}`.
    pub fn from_scaled(z: Complex64, shift: f64) -> Self {
        Self {
            ln_abs: z.norm().ln() + shift,
            phase: z.arg(),
        }
    }

    pub fn ln(&self) -> Complex64 {
        Complex64::new(self.ln_abs, self.phase)
    }

    pub fn abs(&self) -> f64 {
        self.ln_abs.exp()
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::from_polar(self.ln_abs.exp(), self.phase)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MomentKind {
    /// `⟨Z(μ)^{-n/2}⟩`
    K1,
    /// `⟨[Z(μ₁) Z(μ₂*)]^{-n/2}⟩`
    K2,
    /// `K2 / (K1(μ₁) K1(μ₂*))`
    Ratio,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub kind: MomentKind,
    pub n_order: usize,
    pub samples: usize,
    pub blocks: usize,
    pub mean: LogComplex,
    /// `ln` of the standard error of the mean.
    pub ln_stderr: f64,
    pub robust_mean: LogComplex,
    pub heavy_tail: bool,
}

impl MomentEstimate {
    pub fn stderr(&self) -> f64 {
        self.ln_stderr.exp()
    }

    /// Standard error relative to `|mean|`.
    pub fn rel_stderr(&self) -> f64 {
        (self.ln_stderr - self.mean.ln_abs).exp()
    }

    pub fn value(&self) -> Complex64 {
        self.mean.to_complex()
    }
}

fn check_common(cfg: &GoeConfig, sp: &SpectralParams, samples: usize) -> Result<()> {
    cfg.validate()?;
    sp.require_regularized()?;
    if samples < MIN_SAMPLES {
        return Err(Error::Precondition(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    Ok(())
}

/// `Σ log(μ - λ_i)` for each sample and each requested point, in sample order.
pub fn sample_log_char_polys(
    cfg: &GoeConfig,
    points: &[Complex64],
    samples: usize,
) -> Result<Vec<Vec<Complex64>>> {
    cfg.validate()?;
    (0..samples)
        .into_par_iter()
        .map(|j| {
            let h = sample_goe(&cfg.with_stream(cfg.stream.wrapping_add(j as u64)))?;
            let eigs = spectrum(&h)?;
            points.iter().map(|&mu| log_char_poly(&eigs, mu)).collect()
        })
        .collect()
}

/// Contiguous block boundaries covering `m` samples.
fn block_ranges(m: usize, blocks: usize) -> Vec<std::ops::Range<usize>> {
    (0..blocks)
        .map(|b| (b * m / blocks)..((b + 1) * m / blocks))
        .collect()
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn complex_median(v: &[Complex64]) -> Complex64 {
    let mut re: Vec<f64> = v.iter().map(|z| z.re).collect();
    let mut im: Vec<f64> = v.iter().map(|z| z.im).collect();
    Complex64::new(median(&mut re), median(&mut im))
}

fn mean_of(v: &[Complex64]) -> Complex64 {
    v.iter().sum::<Complex64>() / v.len() as f64
}

/// Standard error of the mean from the total sample variance.
fn stderr_of(v: &[Complex64], mean: Complex64) -> f64 {
    let m = v.len() as f64;
    let ss: f64 = v.iter().map(|z| (z - mean).norm_sqr()).sum();
    (ss / (m * (m - 1.0))).sqrt()
}

/// True when some block mean sits more than [`HEAVY_TAIL_FACTOR`] robust standard
/// deviations (1.4826 × MAD of block means) from their median.
fn heavy_tail_flag(block_means: &[Complex64]) -> bool {
    let centre = complex_median(block_means);
    let dev: Vec<f64> = block_means.iter().map(|z| (z - centre).norm()).collect();
    let spread = 1.4826 * median(&mut dev.clone());
    let worst = dev.iter().fold(0.0f64, |m, d| m.max(*d));
    spread > 0.0 && worst > HEAVY_TAIL_FACTOR * spread
}

/// Exponentiates `−(n/2)·logs` after a common shift by the largest real part.
fn shifted_terms(logs: &[Complex64], n: usize) -> (Vec<Complex64>, f64) {
    let half = 0.5 * n as f64;
    let shift = logs
        .iter()
        .map(|l| -half * l.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let terms = logs.iter().map(|l| (-half * l - shift).exp()).collect();
    (terms, shift)
}

fn summarize(kind: MomentKind, n: usize, terms: &[Complex64], shift: f64) -> MomentEstimate {
    let mean = mean_of(terms);
    let se = stderr_of(terms, mean);
    let block_means: Vec<Complex64> = block_ranges(terms.len(), BLOCKS)
        .into_iter()
        .map(|r| mean_of(&terms[r]))
        .collect();
    let robust = complex_median(&block_means);
    MomentEstimate {
        kind,
        n_order: n,
        samples: terms.len(),
        blocks: BLOCKS,
        mean: LogComplex::from_scaled(mean, shift),
        ln_stderr: se.ln() + shift,
        robust_mean: LogComplex::from_scaled(robust, shift),
        heavy_tail: heavy_tail_flag(&block_means),
    }
}

/// `⟨Z_N(μ)^{-n/2}⟩` at an arbitrary non-real `μ`. Plain Monte Carlo: no
/// restriction on `N` relative to `n` (the moment is finite for any `Im μ ≠ 0`).
pub fn estimate_k1_at(
    cfg: &GoeConfig,
    mu: Complex64,
    n: usize,
    samples: usize,
) -> Result<MomentEstimate> {
    if n == 0 {
        return domain("moment order n must be at least 1");
    }
    if samples < MIN_SAMPLES {
        return Err(Error::Precondition(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    let logs: Vec<Complex64> = sample_log_char_polys(cfg, &[mu], samples)?
        .into_iter()
        .map(|v| v[0])
        .collect();
    let (terms, shift) = shifted_terms(&logs, n);
    Ok(summarize(MomentKind::K1, n, &terms, shift))
}

/// `K^(1)_{N,n} = ⟨Z_N(μ₁)^{-n/2}⟩`.
pub fn estimate_k1(
    cfg: &GoeConfig,
    sp: &SpectralParams,
    n: usize,
    samples: usize,
) -> Result<MomentEstimate> {
    check_common(cfg, sp, samples)?;
    if cfg.dim < n + 1 {
        return Err(Error::Precondition(format!(
            "K1 needs N >= n + 1, got N = {}, n = {n}",
            cfg.dim
        )));
    }
    estimate_k1_at(cfg, sp.mu1(), n, samples)
}

/// `K^(2)_{N,n} = ⟨[Z(μ₁) Z(μ₂*)]^{-n/2}⟩`.
pub fn estimate_k2(
    cfg: &GoeConfig,
    sp: &SpectralParams,
    n: usize,
    samples: usize,
) -> Result<MomentEstimate> {
    Ok(ratio_parts(cfg, sp, n, samples)?.numerator)
}

/// The three estimates behind the ratio, from shared draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioParts {
    pub numerator: MomentEstimate,
    pub first: MomentEstimate,
    pub second: MomentEstimate,
    pub ratio: MomentEstimate,
}

fn check_ratio(cfg: &GoeConfig, sp: &SpectralParams, n: usize, samples: usize) -> Result<()> {
    check_common(cfg, sp, samples)?;
    if cfg.dim < 2 * n + 1 {
        return Err(Error::Precondition(format!(
            "ratio needs N >= 2n + 1, got N = {}, n = {n}",
            cfg.dim
        )));
    }
    Ok(())
}

/// Per-sample numerator terms, shifted. At `ω = 0` the second log is the
/// conjugate of the first, so the product is `|Z(μ₁)|^{-n}` exactly.
fn numerator_terms(
    l1: &[Complex64],
    l2: &[Complex64],
    n: usize,
    real: bool,
) -> (Vec<Complex64>, f64) {
    if real {
        let nf = n as f64;
        let shift = l1
            .iter()
            .map(|l| -nf * l.re)
            .fold(f64::NEG_INFINITY, f64::max);
        let terms = l1
            .iter()
            .map(|l| Complex64::new((-nf * l.re - shift).exp(), 0.0))
            .collect();
        (terms, shift)
    } else {
        let sums: Vec<Complex64> = l1.iter().zip(l2).map(|(a, b)| a + b).collect();
        shifted_terms(&sums, n)
    }
}

pub fn ratio_parts(
    cfg: &GoeConfig,
    sp: &SpectralParams,
    n: usize,
    samples: usize,
) -> Result<RatioParts> {
    check_ratio(cfg, sp, n, samples)?;
    if n == 0 {
        let one = MomentEstimate {
            kind: MomentKind::Ratio,
            n_order: 0,
            samples,
            blocks: BLOCKS,
            mean: LogComplex::ONE,
            ln_stderr: f64::NEG_INFINITY,
            robust_mean: LogComplex::ONE,
            heavy_tail: false,
        };
        return Ok(RatioParts {
            numerator: MomentEstimate {
                kind: MomentKind::K2,
                ..one
            },
            first: MomentEstimate {
                kind: MomentKind::K1,
                ..one
            },
            second: MomentEstimate {
                kind: MomentKind::K1,
                ..one
            },
            ratio: one,
        });
    }
    let real = sp.offset == 0.0;
    let (l1, l2): (Vec<Complex64>, Vec<Complex64>) = if real {
        let l1: Vec<Complex64> = sample_log_char_polys(cfg, &[sp.mu1()], samples)?
            .into_iter()
            .map(|v| v[0])
            .collect();
        let l2 = l1.iter().map(|z| z.conj()).collect();
        (l1, l2)
    } else {
        sample_log_char_polys(cfg, &[sp.mu1(), sp.mu2_star()], samples)?
            .into_iter()
            .map(|v| (v[0], v[1]))
            .unzip()
    };

    let (a, sa) = shifted_terms(&l1, n);
    let (b, sb) = shifted_terms(&l2, n);
    let (c, sc) = numerator_terms(&l1, &l2, n, real);
    let first = summarize(MomentKind::K1, n, &a, sa);
    let second = summarize(MomentKind::K1, n, &b, sb);
    let numerator = summarize(MomentKind::K2, n, &c, sc);

    let (ma, mb, mc) = (mean_of(&a), mean_of(&b), mean_of(&c));
    let ratio_shift = sc - sa - sb;
    let r = mc / (ma * mb);
    // delta-method influence of each sample on ln R
    let psi: Vec<Complex64> = (0..samples)
        .map(|i| c[i] / mc - a[i] / ma - b[i] / mb)
        .collect();
    let rel_se = stderr_of(&psi, mean_of(&psi));
    let block_ratios: Vec<Complex64> = block_ranges(samples, BLOCKS)
        .into_iter()
        .map(|rg| mean_of(&c[rg.clone()]) / (mean_of(&a[rg.clone()]) * mean_of(&b[rg])))
        .collect();
    let robust = complex_median(&block_ratios);
    let c_blocks: Vec<Complex64> = block_ranges(samples, BLOCKS)
        .into_iter()
        .map(|rg| mean_of(&c[rg]))
        .collect();

    let mean = LogComplex::from_scaled(r, ratio_shift);
    let ratio = MomentEstimate {
        kind: MomentKind::Ratio,
        n_order: n,
        samples,
        blocks: BLOCKS,
        mean,
        ln_stderr: mean.ln_abs + rel_se.ln(),
        robust_mean: LogComplex::from_scaled(robust, ratio_shift),
        heavy_tail: heavy_tail_flag(&c_blocks),
    };
    Ok(RatioParts {
        numerator,
        first,
        second,
        ratio,
    })
}

/// `K_n = K^(2) / (K^(1)(μ₁) K^(1)(μ₂*))` from shared draws with delta-method error.
pub fn estimate_ratio_kn(
    cfg: &GoeConfig,
    sp: &SpectralParams,
    n: usize,
    samples: usize,
) -> Result<MomentEstimate> {
    Ok(ratio_parts(cfg, sp, n, samples)?.ratio)
}

/// `ln C` with `C = (πρJ)^{n²} (N/2)^{n²/2} (2π)^{n/2} / (n! [∏_{j=1}^n Γ(j/2)]²)`.
pub fn ln_ratio_prefactor(n: usize, mu: f64, coupling: f64, dim: usize) -> Result<f64> {
    let rho = mean_density(mu, coupling)?;
    let nf = n as f64;
    let gam: f64 = (1..=n).map(|j| ln_gamma_pos(0.5 * j as f64)).sum();
    Ok(nf * nf * (PI * rho * coupling).ln()
        + 0.5 * nf * nf * (0.5 * dim as f64).ln()
        + 0.5 * nf * (2.0 * PI).ln()
        - ln_factorial(n)
        - 2.0 * gam)
}

/// The large-N prediction `C · F_n^GOE(ε)` for the ratio (real `ε` only).
pub fn predicted_ratio(cfg: &GoeConfig, sp: &SpectralParams, n: usize) -> Result<Complex64> {
    cfg.validate()?;
    if n == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let eps = epsilon_from_params(cfg, sp)?;
    if eps.im != 0.0 {
        return domain("predicted ratio is implemented for real epsilon (omega = 0) only");
    }
    let f = if n <= QUADRATURE_MAX_ORDER {
        fn_goe_quadrature(n, eps.re, 1e-9)?
    } else {
        fn_goe_pfaffian(n, eps.re)?
    };
    let ln_c = ln_ratio_prefactor(n, sp.center, cfg.coupling, cfg.dim)?;
    Ok(Complex64::new((ln_c + f.value.ln()).exp(), 0.0))
}

/// Large-N saddle-point value of `K^(1)_{N,n}` and the Gaussian width `t` of the
/// fluctuation integral around the saddle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddlePrediction {
    pub value: LogComplex,
    /// Complex in general; real and positive at `μ = 0`.
    pub gaussian_width_t: Complex64,
    pub n_order: usize,
}

/// `ln ∫ ∏dξ ∏_{i<j}|ξ_i - ξ_j| e^{-(t/2)Σξ²}` by Mehta's formula, principal branch in `t`.
pub fn ln_mehta_integral(n: usize, t: Complex64) -> Complex64 {
    let nf = n as f64;
    let gam: f64 = (1..=n)
        .map(|j| ln_gamma_pos(1.0 + 0.5 * j as f64))
        .sum::<f64>()
        - nf * ln_gamma_pos(1.5);
    let power = 0.5 * nf + 0.25 * nf * (nf - 1.0);
    Complex64::new(0.5 * nf * (2.0 * PI).ln() + gam, 0.0) - power * t.ln()
}

/// Direct quadrature of the Mehta-type integral for real `t > 0` and `n ≤ 3`.
pub fn mehta_integral_quadrature(n: usize, t: f64, rel_tol: f64) -> Result<f64> {
    if !(1..=3).contains(&n) {
        return Err(Error::UnsupportedOrder { order: n, max: 3 });
    }
    if !(t > 0.0) {
        return domain(format!("Gaussian width t must be positive, got {t}"));
    }
    // e^{-t x²/2} < 1e-30 beyond this range
    let half = (2.0 * 70.0 / t).sqrt();
    let f = |x: &[f64]| {
        let mut v = (-0.5 * t * x.iter().map(|a| a * a).sum::<f64>()).exp();
        for j in 1..x.len() {
            for i in 0..j {
                v *= x[j] - x[i];
            }
        }
        v
    };
    let r = ordered_simplex(&f, n, -half, half, rel_tol);
    if !r.converged {
        return Err(Error::Accuracy {
            best: r.value,
            achieved: r.abs_error,
        });
    }
    Ok(ln_factorial(n).exp() * r.value)
}

/// Saddle-point approximation of `⟨Z_N(μ₁)^{-n/2}⟩`:
/// `C̃ q₊^{(N-n-1)/2} exp(-(N n/2)(J² q₊² - 2iμ₁ q₊)) · Mehta(t)` with
/// `C̃ = G_n (-iN)^{Nn/2} π^{-n(n-1)/4} / (n! ∏_{j<n} Γ((N-j)/2))` and
/// `t = N (1 + 2J² q₊²) / (2 q₊²)`.
pub fn saddle_point_k1(cfg: &GoeConfig, sp: &SpectralParams, n: usize) -> Result<SaddlePrediction> {
    cfg.validate()?;
    if n == 0 {
        return domain("moment order n must be at least 1");
    }
    if cfg.dim < n + 1 {
        return Err(Error::Precondition(format!(
            "saddle formula needs N >= n + 1, got N = {}, n = {n}",
            cfg.dim
        )));
    }
    let geo = saddle_points(sp.center, cfg.coupling)?;
    let q = geo.q_plus;
    let big_n = cfg.dim as f64;
    let nf = n as f64;
    let j2 = cfg.coupling * cfg.coupling;
    let mu1 = sp.mu1();
    let i = Complex64::new(0.0, 1.0);

    let gam: f64 = (0..n).map(|j| ln_gamma_pos(0.5 * (big_n - j as f64))).sum();
    // (-i)^{Nn/2} on the principal branch: e^{-iπNn/4}
    let ln_c1 = Complex64::new(0.5 * big_n * nf * big_n.ln(), -0.25 * PI * big_n * nf)
        - 0.25 * nf * (nf - 1.0) * PI.ln()
        - gam;
    let ln_ct = ln_c1 + ln_g_n_constant(n)? - ln_factorial(n);

    let t = big_n * (1.0 + 2.0 * j2 * q * q) / (2.0 * q * q);
    let ln_val = ln_ct + 0.5 * (big_n - nf - 1.0) * q.ln()
        - 0.5 * big_n * nf * (j2 * q * q - 2.0 * i * mu1 * q)
        + ln_mehta_integral(n, t);
    Ok(SaddlePrediction {
        value: LogComplex::from_ln(ln_val),
        gaussian_width_t: t,
        n_order: n,
    })
}
