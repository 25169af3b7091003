//! GOE sampling, the log-domain characteristic polynomial, and the spectral
//! geometry of the semicircle bulk (density, saddle points, scaled offset ε).

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::eigen::SymmetricMatrix;
use crate::error::{domain, Error, Result};
use crate::rng::CounterRng;

/// Parameters of one GOE draw: `P(H) ∝ exp(-(N / 2J²) Tr H²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoeConfig {
    pub dim: usize,
    pub coupling: f64,
    pub seed: u64,
    pub stream: u64,
}

impl GoeConfig {
    pub fn new(dim: usize, coupling: f64, seed: u64, stream: u64) -> Result<Self> {
        let cfg = Self {
            dim,
            coupling,
            seed,
            stream,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 {
            return domain("matrix dimension must be at least 1");
        }
        let j = self.coupling;
        if !(j > 0.0) || !j.is_finite() {
            return domain(format!("coupling J must be finite and positive, got {j}"));
        }
        Ok(())
    }

    /// The same ensemble on another stream.
    pub fn with_stream(&self, stream: u64) -> Self {
        Self { stream, ..*self }
    }

    /// The same ensemble at another dimension.
    pub fn with_dim(&self, dim: usize) -> Self {
        Self { dim, ..*self }
    }

    /// Edge of the semicircle, `J √2`.
    pub fn bulk_edge(&self) -> f64 {
        self.coupling * SQRT_2
    }
}

/// Spectral parameters `μ₁ = μ + ω/2 + iδ`, `μ₂* = μ - ω/2 - iδ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParams {
    pub center: f64,
    pub offset: f64,
    pub reg: f64,
}

impl SpectralParams {
    pub fn new(center: f64, offset: f64, reg: f64) -> Result<Self> {
        if !center.is_finite() || !offset.is_finite() || !reg.is_finite() {
            return domain("spectral parameters must be finite");
        }
        if reg < 0.0 {
            return domain(format!("regularizer delta must be non-negative, got {reg}"));
        }
        Ok(Self {
            center,
            offset,
            reg,
        })
    }

    /// Parameters at `ω = 0` whose regularizer gives the requested real `ε`
    /// at the dimension and coupling of `cfg`: `δ = ε / (N π ρ(μ))`.
    pub fn from_epsilon(cfg: &GoeConfig, center: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return domain(format!("epsilon must be positive, got {eps}"));
        }
        let rho = mean_density(center, cfg.coupling)?;
        Self::new(center, 0.0, eps / (cfg.dim as f64 * PI * rho))
    }

    pub fn mu1(&self) -> Complex64 {
        Complex64::new(self.center + 0.5 * self.offset, self.reg)
    }

    pub fn mu2_star(&self) -> Complex64 {
        Complex64::new(self.center - 0.5 * self.offset, -self.reg)
    }

    pub fn require_regularized(&self) -> Result<()> {
        if self.reg > 0.0 {
            Ok(())
        } else {
            domain("moments need delta > 0 (Im mu1 > 0)")
        }
    }
}

/// Semicircle density and the two stationary points of `A(q) = J²q² - 2iμq - ln q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralGeometry {
    pub rho: f64,
    pub q_plus: Complex64,
    pub q_minus: Complex64,
}

fn check_bulk(mu: f64, coupling: f64) -> Result<()> {
    if !(coupling > 0.0) {
        return domain(format!("coupling J must be positive, got {coupling}"));
    }
    let edge = coupling * SQRT_2;
    if !(mu.abs() < edge) {
        return Err(Error::OutsideBulk { mu, edge });
    }
    Ok(())
}

/// `ρ(μ) = √(2J² - μ²) / (π J²)`.
pub fn mean_density(mu: f64, coupling: f64) -> Result<f64> {
    check_bulk(mu, coupling)?;
    let j2 = coupling * coupling;
    Ok((2.0 * j2 - mu * mu).sqrt() / (PI * j2))
}

pub fn saddle_points(mu: f64, coupling: f64) -> Result<SpectralGeometry> {
    let rho = mean_density(mu, coupling)?;
    let j2 = coupling * coupling;
    let root = (2.0 * j2 - mu * mu).sqrt();
    Ok(SpectralGeometry {
        rho,
        q_plus: Complex64::new(root, mu) / (2.0 * j2),
        q_minus: Complex64::new(-root, mu) / (2.0 * j2),
    })
}

/// `ε = -i N π ρ(μ) (μ₁ - μ₂*) / 2`; real and equal to `N π ρ δ` when `ω = 0`.
pub fn epsilon_from_params(cfg: &GoeConfig, sp: &SpectralParams) -> Result<Complex64> {
    cfg.validate()?;
    let rho = mean_density(sp.center, cfg.coupling)?;
    let diff = sp.mu1() - sp.mu2_star();
    let eps = Complex64::new(0.0, -1.0) * (cfg.dim as f64 * PI * rho * 0.5) * diff;
    // the real part is exact; keep the imaginary part exactly zero at ω = 0
    Ok(if sp.offset == 0.0 {
        Complex64::new(eps.re, 0.0)
    } else {
        eps
    })
}

/// Draws a GOE matrix: diagonal variance `J²/N`, off-diagonal variance `J²/(2N)`.
///
/// Entry `(i, j)` with `i <= j` uses counter `i * N + j` of the `(seed, stream)`
/// generator and is mirrored, so the result is exactly symmetric.
pub fn sample_goe(cfg: &GoeConfig) -> Result<SymmetricMatrix> {
    cfg.validate()?;
    let n = cfg.dim;
    let j = cfg.coupling;
    let diag_sd = j / (n as f64).sqrt();
    let off_sd = j / (2.0 * n as f64).sqrt();
    let rng = CounterRng::new(cfg.seed, cfg.stream);
    let mut m = SymmetricMatrix::zeros(n);
    for r in 0..n {
        for c in r..n {
            let z = rng.normal((r * n + c) as u64);
            let sd = if r == c { diag_sd } else { off_sd };
            m.set(r, c, sd * z);
        }
    }
    Ok(m)
}

/// `Σ_i log(μ - λ_i)` with the principal logarithm taken factor by factor.
///
/// For `Im μ > 0` each summand has imaginary part in `(0, π)`, so the phase of
/// `Z_N(μ)^{-n/2} := exp(-(n/2) Σ log(μ - λ_i))` is continuous in the upper half-plane.
pub fn log_char_poly(eigs: &[f64], mu: Complex64) -> Result<Complex64> {
    if mu.im == 0.0 || !mu.im.is_finite() || !mu.re.is_finite() {
        return domain("log_char_poly needs a finite mu with Im mu != 0");
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for &lam in eigs {
        acc += (mu - lam).ln();
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::spectrum;

    #[test]
    fn density_examples() {
        assert!((mean_density(0.0, 1.0).unwrap() - SQRT_2 / PI).abs() < 1e-15);
        assert!(mean_density(std::f64::consts::SQRT_2 - 1e-6, 1.0).unwrap() < 1e-3);
        assert_eq!(
            mean_density(0.7, 1.0).unwrap(),
            mean_density(-0.7, 1.0).unwrap()
        );
        assert!(matches!(
            mean_density(1.5, 1.0),
            Err(Error::OutsideBulk { .. })
        ));
        assert!(mean_density(SQRT_2, 1.0).is_err());
    }

    #[test]
    fn saddle_examples() {
        let g = saddle_points(0.0, 1.0).unwrap();
        assert!((g.q_plus.re - 1.0 / SQRT_2).abs() < 1e-15 && g.q_plus.im == 0.0);
        assert!((g.q_minus.re + 1.0 / SQRT_2).abs() < 1e-15);
        let g = saddle_points(1.0, 1.0).unwrap();
        assert!((g.q_plus - Complex64::new(0.5, 0.5)).norm() < 1e-15);
        assert!(saddle_points(2.0, 1.0).is_err());
    }

    #[test]
    fn saddle_points_solve_stationarity() {
        for &(mu, j) in &[(0.0, 1.0), (0.3, 0.7), (-1.2, 1.1), (2.0, 2.0)] {
            let g = saddle_points(mu, j).unwrap();
            for q in [g.q_plus, g.q_minus] {
                let r = 2.0 * j * j * q - Complex64::new(0.0, 2.0 * mu) - 1.0 / q;
                assert!(r.norm() < 1e-12, "mu={mu} J={j} residual={r}");
            }
            assert!(g.q_plus.re > 0.0 && g.q_minus.re < 0.0);
            assert!((2.0 * g.q_plus.re - PI * g.rho).abs() < 1e-12);
            assert!((g.q_plus.norm_sqr() - 1.0 / (2.0 * j * j)).abs() < 1e-12);
        }
    }

    #[test]
    fn epsilon_examples() {
        let cfg = GoeConfig::new(100, 1.0, 0, 0).unwrap();
        let sp = SpectralParams::new(0.0, 0.0, 0.01).unwrap();
        let eps = epsilon_from_params(&cfg, &sp).unwrap();
        assert_eq!(eps.im, 0.0);
        assert!((eps.re - SQRT_2).abs() < 1e-12);
        let sp0 = SpectralParams::new(0.0, 0.0, 0.0).unwrap();
        assert_eq!(
            epsilon_from_params(&cfg, &sp0).unwrap(),
            Complex64::new(0.0, 0.0)
        );
        let sp = SpectralParams::new(0.3, 0.02, 0.01).unwrap();
        let eps = epsilon_from_params(&cfg, &sp).unwrap();
        let rho = mean_density(0.3, 1.0).unwrap();
        assert!((eps.re - 100.0 * PI * rho * 0.01).abs() < 1e-12);
        assert!((eps.im + 100.0 * PI * rho * 0.01).abs() < 1e-12);
        let back = SpectralParams::from_epsilon(&cfg, 0.0, SQRT_2).unwrap();
        assert!((back.reg - 0.01).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(GoeConfig::new(0, 1.0, 0, 0).is_err());
        assert!(GoeConfig::new(3, 0.0, 0, 0).is_err());
        assert!(GoeConfig::new(3, f64::NAN, 0, 0).is_err());
        assert!(SpectralParams::new(0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn sampler_is_symmetric_and_reproducible() {
        let cfg = GoeConfig::new(17, 1.3, 11, 5).unwrap();
        let a = sample_goe(&cfg).unwrap();
        let b = sample_goe(&cfg).unwrap();
        assert_eq!(a, b);
        for i in 0..17 {
            for j in 0..17 {
                assert_eq!(a.get(i, j) - a.get(j, i), 0.0);
            }
        }
        assert_ne!(a, sample_goe(&cfg.with_stream(6)).unwrap());
    }

    #[test]
    fn log_char_poly_examples() {
        let v = log_char_poly(&[0.0], Complex64::new(0.0, 1.0)).unwrap();
        assert!((v - Complex64::new(0.0, PI / 2.0)).norm() < 1e-15);
        let v = log_char_poly(&[-1.0, 1.0], Complex64::new(0.0, 2.0)).unwrap();
        assert!((v.exp() - Complex64::new(-5.0, 0.0)).norm() < 1e-13);
        assert!(log_char_poly(&[1.0], Complex64::new(0.5, 0.0)).is_err());
    }

    /// Oracle: det(μI - H) by complex LU with partial pivoting.
    fn lu_det(h: &SymmetricMatrix, mu: Complex64) -> Complex64 {
        let n = h.dim();
        let mut a: Vec<Complex64> = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                let d = if i == j { mu } else { Complex64::new(0.0, 0.0) };
                d - h.get(i, j)
            })
            .collect();
        let mut det = Complex64::new(1.0, 0.0);
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a[x * n + k].norm().total_cmp(&a[y * n + k].norm()))
                .unwrap();
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
                det = -det;
            }
            let piv = a[k * n + k];
            det *= piv;
            for r in (k + 1)..n {
                let f = a[r * n + k] / piv;
                for c in k..n {
                    let t = a[k * n + c];
                    a[r * n + c] -= f * t;
                }
            }
        }
        det
    }

    #[test]
    fn log_char_poly_matches_lu_determinant() {
        let cfg = GoeConfig::new(10, 1.0, 3, 0).unwrap();
        for s in 0..5 {
            let h = sample_goe(&cfg.with_stream(s)).unwrap();
            let eigs = spectrum(&h).unwrap();
            for mu in [
                Complex64::new(0.2, 0.05),
                Complex64::new(-1.1, 0.3),
                Complex64::new(0.0, -0.2),
            ] {
                let z = log_char_poly(&eigs, mu).unwrap().exp();
                let oracle = lu_det(&h, mu);
                assert!(
                    (z - oracle).norm() <= 1e-10 * oracle.norm(),
                    "z={z} lu={oracle}"
                );
            }
        }
    }

    #[test]
    fn log_char_poly_phase_is_continuous() {
        // step 1e-3 along Im mu = 0.5; the phase slope is bounded by N / Im mu = 8
        let cfg = GoeConfig::new(4, 1.0, 8, 0).unwrap();
        let eigs = spectrum(&sample_goe(&cfg).unwrap()).unwrap();
        let path = |x: f64| Complex64::new(x, 0.5);
        let mut prev = log_char_poly(&eigs, path(-3.0)).unwrap();
        for k in 1..=6000 {
            let x = -3.0 + k as f64 * 1e-3;
            let cur = log_char_poly(&eigs, path(x)).unwrap();
            assert!((cur.im - prev.im).abs() < 1e-2, "jump at x={x}");
            prev = cur;
        }

        // a larger matrix close to the axis: no 2π branch jumps, only the bounded slope
        let cfg = GoeConfig::new(40, 1.0, 8, 1).unwrap();
        let eigs = spectrum(&sample_goe(&cfg).unwrap()).unwrap();
        let (step, im) = (1e-3, 0.05);
        let bound = step * eigs.len() as f64 / im;
        let mut prev = log_char_poly(&eigs, Complex64::new(-2.0, im)).unwrap();
        for k in 1..=4000 {
            let cur = log_char_poly(&eigs, Complex64::new(-2.0 + k as f64 * step, im)).unwrap();
            assert!((cur.im - prev.im).abs() <= bound);
            prev = cur;
        }
    }
}
