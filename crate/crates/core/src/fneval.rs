//! The central integrals `F_n^GOE(ε)`, `F_n^GUE(ε)`, the truncated small-ε form,
//! the derivative of `F̃_n = ε^{n(n-1)/2} F_n`, and the p-cluster integrals.
//!
//! All GOE integrals are held in scaled form: the prefactor `e^{nε}` is absorbed
//! into the weights, so the integrand carries `e^{-ε(λ-1)}` and stays O(1) near
//! the lower limit.

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::pfaffian::{pfaffian, SkewMatrix};
use crate::quad::{integrate, ordered_simplex, QuadOptions};
use crate::rng::CounterRng;
use crate::specialfns::{ln_factorial, ln_gamma_pos, weighted_moments_scaled, N_MAX};

pub const EPS_MIN: f64 = 1e-7;
pub const EPS_MAX: f64 = 1e3;
pub const TOL_MIN: f64 = 1e-10;

/// Largest order handled by nested quadrature before switching to Monte Carlo.
pub const QUADRATURE_MAX_ORDER: usize = 3;

const MC_SEED: u64 = 0x5eed_f00d_c0ff_ee00;
const MC_BATCH: usize = 1 << 15;
const MC_MAX_BATCHES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FnMethod {
    Quadrature,
    Pfaffian,
    ClosedForm,
    MonteCarlo,
}

impl FnMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            FnMethod::Quadrature => "quadrature",
            FnMethod::Pfaffian => "pfaffian",
            FnMethod::ClosedForm => "closed_form",
            FnMethod::MonteCarlo => "monte_carlo",
        }
    }
}

impl std::str::FromStr for FnMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "quadrature" => Ok(FnMethod::Quadrature),
            "pfaffian" => Ok(FnMethod::Pfaffian),
            "closed_form" | "closed" => Ok(FnMethod::ClosedForm),
            "monte_carlo" | "mc" => Ok(FnMethod::MonteCarlo),
            other => domain(format!("unknown method '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FnEvaluation {
    pub n_order: usize,
    pub epsilon: f64,
    pub value: f64,
    pub abs_error: f64,
    pub method: FnMethod,
}

fn check_order(n: usize, max: usize) -> Result<()> {
    if n == 0 {
        return domain("order n must be at least 1");
    }
    if n > max {
        return Err(Error::UnsupportedOrder { order: n, max });
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(EPS_MIN..=EPS_MAX).contains(&eps) {
        return domain(format!("eps = {eps} outside [{EPS_MIN:e}, {EPS_MAX:e}]"));
    }
    Ok(())
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol >= TOL_MIN) || !tol.is_finite() {
        return domain(format!("tol = {tol} below {TOL_MIN:e}"));
    }
    Ok(())
}

/// Smallest `U` with `U^deg e^{-U} <= tol`: the scaled-exponent cutoff that bounds a
/// tail carrying a polynomial of degree `deg`.
pub fn tail_cutoff(deg: usize, tol: f64) -> f64 {
    let base = -tol.ln();
    let mut u = base.max(1.0);
    for _ in 0..50 {
        let next = base + deg as f64 * u.ln();
        if (next - u).abs() < 1e-12 * u {
            break;
        }
        u = next;
    }
    u.max(1.0)
}

/// `cosh ψ - 1` without cancellation near zero.
#[inline]
fn cosh_m1(psi: f64) -> f64 {
    let s = (0.5 * psi).sinh();
    2.0 * s * s
}

/// `cosh b - cosh a` without cancellation.
#[inline]
fn cosh_diff(a: f64, b: f64) -> f64 {
    2.0 * (0.5 * (a + b)).sinh() * (0.5 * (b - a)).sinh()
}

fn accuracy_check(value: f64, abs_error: f64, tol: f64, converged: bool) -> Result<()> {
    if !converged || !(abs_error <= tol * value.abs()) || !value.is_finite() {
        return Err(Error::Accuracy {
            best: value,
            achieved: abs_error,
        });
    }
    Ok(())
}

/// `F_n^GOE(ε)` by nested quadrature in `λ = cosh ψ` (n ≤ 3) or importance-sampled
/// Monte Carlo (4 ≤ n ≤ 8). `tol` is a relative tolerance.
pub fn fn_goe_quadrature(n: usize, eps: f64, tol: f64) -> Result<FnEvaluation> {
    check_order(n, N_MAX)?;
    check_eps(eps)?;
    check_tol(tol)?;
    if n > QUADRATURE_MAX_ORDER {
        return fn_goe_monte_carlo(n, eps, tol);
    }

    let u = tail_cutoff(n - 1, tol * 1e-3);
    let psi_max = (1.0 + u / eps).acosh();

    let integrand = |psi: &[f64]| {
        let mut expo = 0.0;
        for &p in psi {
            expo += cosh_m1(p);
        }
        let mut vdm = 1.0;
        for j in 1..psi.len() {
            for i in 0..j {
                vdm *= cosh_diff(psi[i], psi[j]);
            }
        }
        vdm * (-eps * expo).exp()
    };
    let r = ordered_simplex(&integrand, n, 0.0, psi_max, 0.5 * tol);
    let fact = ln_factorial(n).exp();
    let value = fact * r.value;
    let abs_error = fact * r.abs_error;
    accuracy_check(value, abs_error, tol, r.converged)?;
    Ok(FnEvaluation {
        n_order: n,
        epsilon: eps,
        value,
        abs_error,
        method: FnMethod::Quadrature,
    })
}

/// Monte Carlo over the full cube with `λ_k - 1 ~ Gamma(1/2, rate ε)` proposals.
fn fn_goe_monte_carlo(n: usize, eps: f64, tol: f64) -> Result<FnEvaluation> {
    // per-coordinate normaliser Γ(1/2) ε^{-1/2}
    let ln_norm = n as f64 * (0.5 * std::f64::consts::PI.ln() - 0.5 * eps.ln());
    let rng = CounterRng::new(MC_SEED, n as u64);

    let batch = |b: usize| -> (f64, f64) {
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        let mut x = [0.0; N_MAX];
        for t in 0..MC_BATCH {
            let base = ((b * MC_BATCH + t) * N_MAX) as u64;
            let mut ln_w = 0.0;
            for (k, xk) in x.iter_mut().enumerate().take(n) {
                let z = rng.normal(base + k as u64);
                *xk = z * z / (2.0 * eps);
                ln_w -= 0.5 * (*xk + 2.0).ln();
            }
            let mut vdm = 1.0;
            for j in 1..n {
                for i in 0..j {
                    vdm *= (x[j] - x[i]).abs();
                }
            }
            let w = vdm * ln_w.exp();
            s1 += w;
            s2 += w * w;
        }
        (s1, s2)
    };

    let mut s1 = 0.0;
    let mut s2 = 0.0;
    let mut done = 0usize;
    let mut value = 0.0;
    let mut abs_error = f64::INFINITY;
    let mut round = 4usize;
    while done < MC_MAX_BATCHES {
        let hi = (done + round).min(MC_MAX_BATCHES);
        let parts: Vec<(f64, f64)> = (done..hi).into_par_iter().map(batch).collect();
        for (a, b) in parts {
            s1 += a;
            s2 += b;
        }
        done = hi;
        let m = (done * MC_BATCH) as f64;
        let mean = s1 / m;
        let var = (s2 / m - mean * mean).max(0.0) * m / (m - 1.0);
        let scale = ln_norm.exp();
        value = mean * scale;
        abs_error = 3.0 * (var / m).sqrt() * scale;
        if abs_error <= tol * value {
            break;
        }
        round *= 2;
    }
    accuracy_check(value, abs_error, tol, true)?;
    Ok(FnEvaluation {
        n_order: n,
        epsilon: eps,
        value,
        abs_error,
        method: FnMethod::MonteCarlo,
    })
}

/// `F_n^GOE(ε)` through the de Bruijn Pfaffian of pairwise double integrals in the
/// monomial basis `λ^{i}`, `i = 0..n`. Odd `n` is bordered by the scaled moments.
pub fn fn_goe_pfaffian(n: usize, eps: f64) -> Result<FnEvaluation> {
    check_order(n, N_MAX)?;
    check_eps(eps)?;
    let moments = weighted_moments_scaled(2 * n, eps)?;
    let u = tail_cutoff(2 * n, 1e-17);
    let v_max = (1.0 + u / eps).acosh();
    let weight = |v: f64, power: usize| v.cosh().powi(power as i32) * (-eps * cosh_m1(v)).exp();

    let dim = n + n % 2;
    let mut a = SkewMatrix::zeros(dim);
    let mut worst_rel = 0.0f64;
    let mut converged = true;
    for i in 0..n {
        for j in (i + 1)..n {
            let scale = moments[i] * moments[j];
            let outer = integrate(
                |v| {
                    let inner = integrate(
                        |x| weight(x, i),
                        0.0,
                        v,
                        QuadOptions::relative(1e-13).with_abs(1e-15 * moments[i]),
                    );
                    weight(v, j) * (2.0 * inner.value - moments[i])
                },
                0.0,
                v_max,
                QuadOptions::relative(1e-11).with_abs(1e-14 * scale),
            );
            converged &= outer.converged;
            worst_rel = worst_rel.max(outer.abs_error / scale);
            a.set_upper(i, j, outer.value);
        }
    }
    if n % 2 == 1 {
        for (i, &m) in moments.iter().enumerate().take(n) {
            a.set_upper(i, n, m);
        }
    }
    let pf = pfaffian(&a)?;
    let value = ln_factorial(n).exp() * pf;
    let abs_error = value.abs() * (worst_rel * dim as f64 + 1e-13);
    if !converged || !(value > 0.0) {
        return Err(Error::Accuracy {
            best: value,
            achieved: abs_error,
        });
    }
    Ok(FnEvaluation {
        n_order: n,
        epsilon: eps,
        value,
        abs_error,
        method: FnMethod::Pfaffian,
    })
}

/// `ln F_n^GUE(ε) = -n² ln ε + Σ_{j<n} ln j! + ln (j+1)!`.
pub fn ln_fn_gue_closed(n: usize, eps: f64) -> f64 {
    let nf = n as f64;
    let s: f64 = (0..n).map(|j| ln_factorial(j) + ln_factorial(j + 1)).sum();
    -nf * nf * eps.ln() + s
}

/// `F_n^GUE(ε)` in closed form or by quadrature (`n ≤ 5`). Quadrature uses the
/// ordered simplex in `x = λ - 1` for `n ≤ 3` and the Andreief form
/// `n! det[μ_{i+j}]` over quadrature moments `μ_k = ∫ x^k e^{-εx}` for `n ∈ {4, 5}`.
pub fn fn_gue(n: usize, eps: f64, method: FnMethod) -> Result<FnEvaluation> {
    if n == 0 {
        return domain("order n must be at least 1");
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return domain(format!("eps must be positive and finite, got {eps}"));
    }
    match method {
        FnMethod::ClosedForm => Ok(FnEvaluation {
            n_order: n,
            epsilon: eps,
            value: ln_fn_gue_closed(n, eps).exp(),
            abs_error: 0.0,
            method,
        }),
        FnMethod::Quadrature => {
            check_order(n, 5)?;
            let tol = 1e-9;
            let u = tail_cutoff(2 * (n - 1), tol * 1e-3);
            let x_max = u / eps;
            let (value, abs_error, converged) = if n <= QUADRATURE_MAX_ORDER {
                let integrand = |x: &[f64]| {
                    let mut vdm = 1.0;
                    for j in 1..x.len() {
                        for i in 0..j {
                            let d = x[j] - x[i];
                            vdm *= d * d;
                        }
                    }
                    vdm * (-eps * x.iter().sum::<f64>()).exp()
                };
                let r = ordered_simplex(&integrand, n, 0.0, x_max, 0.5 * tol);
                let fact = ln_factorial(n).exp();
                (fact * r.value, fact * r.abs_error, r.converged)
            } else {
                gue_andreief(n, eps, x_max)?
            };
            accuracy_check(value, abs_error, tol, converged)?;
            Ok(FnEvaluation {
                n_order: n,
                epsilon: eps,
                value,
                abs_error,
                method,
            })
        }
        other => domain(format!("method {} not available for GUE", other.as_str())),
    }
}

fn gue_andreief(n: usize, eps: f64, x_max: f64) -> Result<(f64, f64, bool)> {
    let mut mom = Vec::with_capacity(2 * n - 1);
    let mut converged = true;
    for k in 0..(2 * n - 1) {
        let r = integrate(
            |x: f64| x.powi(k as i32) * (-eps * x).exp(),
            0.0,
            x_max,
            QuadOptions::relative(1e-13),
        );
        converged &= r.converged;
        mom.push(r.value);
    }
    // Hankel matrix as a skew-free dense determinant via LU
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] = mom[i + j];
        }
    }
    let det = lu_determinant(&mut h, n);
    let value = ln_factorial(n).exp() * det;
    Ok((value, value.abs() * 1e-10, converged))
}

fn lu_determinant(a: &mut [f64], n: usize) -> f64 {
    let mut det = 1.0;
    for k in 0..n {
        let p = (k..n)
            .max_by(|&x, &y| a[x * n + k].abs().total_cmp(&a[y * n + k].abs()))
            .unwrap();
        if p != k {
            for c in 0..n {
                a.swap(k * n + c, p * n + c);
            }
            det = -det;
        }
        let piv = a[k * n + k];
        if piv == 0.0 {
            return 0.0;
        }
        det *= piv;
        for r in (k + 1)..n {
            let f = a[r * n + k] / piv;
            for c in k..n {
                a[r * n + c] -= f * a[k * n + c];
            }
        }
    }
    det
}

/// Largest order of the truncated small-ε form.
pub const TRUNCATED_MAX_ORDER: usize = 4;
/// Largest ε accepted by the truncated form.
pub const TRUNCATED_MAX_EPS: f64 = 0.1;

fn check_truncated(n: usize, eps: f64) -> Result<()> {
    check_order(n, TRUNCATED_MAX_ORDER)?;
    if eps == 0.0 {
        return Err(Error::Divergence(
            "lower limit 0 makes the truncated integral diverge logarithmically".into(),
        ));
    }
    if !(eps > 0.0 && eps <= TRUNCATED_MAX_EPS) {
        return domain(format!(
            "truncated form needs 0 < eps <= {TRUNCATED_MAX_EPS}, got {eps}"
        ));
    }
    Ok(())
}

fn truncated_tol(dim: usize) -> f64 {
    if dim >= 4 {
        1e-6
    } else {
        1e-9
    }
}

/// `ε^{-n(n-1)/2} ∫_ε^∞ ∏ dy/y ∏|y_i - y_j| e^{-Σy}`, integrated in `s = ln y`.
pub fn fn_goe_truncated(n: usize, eps: f64) -> Result<FnEvaluation> {
    check_truncated(n, eps)?;
    let tol = truncated_tol(n);
    let upper = tail_cutoff(n - 1, tol * 1e-3).ln();
    let integrand = |s: &[f64]| {
        let mut sum = 0.0;
        let mut vdm = 1.0;
        for (j, &sj) in s.iter().enumerate() {
            let yj = sj.exp();
            sum += yj;
            for &si in &s[..j] {
                vdm *= yj - si.exp();
            }
        }
        vdm * (-sum).exp()
    };
    let r = ordered_simplex(&integrand, n, eps.ln(), upper, 0.5 * tol);
    let ln_scale = ln_factorial(n) - 0.5 * (n * (n - 1)) as f64 * eps.ln();
    let scale = ln_scale.exp();
    let value = scale * r.value;
    let abs_error = scale * r.abs_error;
    accuracy_check(value, abs_error, tol, r.converged)?;
    Ok(FnEvaluation {
        n_order: n,
        epsilon: eps,
        value,
        abs_error,
        method: FnMethod::Quadrature,
    })
}

/// Derivative of the truncated `F̃_n` and the limit of `ε dF̃_n/dε` as `ε → 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FtildeDerivative {
    pub n_order: usize,
    pub epsilon: f64,
    pub value: f64,
    pub abs_error: f64,
    pub limit_coefficient: f64,
}

/// `lim ε dF̃_n/dε = -n ∏_{j=0}^{n-2} Γ((3+j)/2) Γ((2+j)/2) / Γ(3/2)`.
pub fn ftilde_limit_coefficient(n: usize) -> f64 {
    let ln_g32 = ln_gamma_pos(1.5);
    let s: f64 = (0..n.saturating_sub(1))
        .map(|j| {
            let j = j as f64;
            ln_gamma_pos(0.5 * (3.0 + j)) + ln_gamma_pos(0.5 * (2.0 + j)) - ln_g32
        })
        .sum();
    -(n as f64) * s.exp()
}

/// `dF̃_n/dε = -(n/ε) e^{-ε} ∫_ε^∞ ∏_{k≥2} dy_k/y_k e^{-y_k}(y_k - ε) |Δ(y_2..y_n)|`.
pub fn ftilde_derivative(n: usize, eps: f64) -> Result<FtildeDerivative> {
    check_truncated(n, eps)?;
    let limit_coefficient = ftilde_limit_coefficient(n);
    let pre = -(n as f64) / eps * (-eps).exp();
    if n == 1 {
        return Ok(FtildeDerivative {
            n_order: n,
            epsilon: eps,
            value: pre,
            abs_error: 0.0,
            limit_coefficient,
        });
    }
    let dim = n - 1;
    let tol = truncated_tol(dim);
    let ln_eps = eps.ln();
    let upper = tail_cutoff(2 * dim, tol * 1e-3).ln();
    let integrand = |s: &[f64]| {
        let mut sum = 0.0;
        let mut prod = 1.0;
        for (j, &sj) in s.iter().enumerate() {
            let yj = sj.exp();
            sum += yj;
            prod *= eps * (sj - ln_eps).exp_m1();
            for &si in &s[..j] {
                prod *= yj - si.exp();
            }
        }
        prod * (-sum).exp()
    };
    let r = ordered_simplex(&integrand, dim, ln_eps, upper, 0.5 * tol);
    let scale = pre * ln_factorial(dim).exp();
    let value = scale * r.value;
    let abs_error = scale.abs() * r.abs_error;
    accuracy_check(value, abs_error, tol, r.converged)?;
    Ok(FtildeDerivative {
        n_order: n,
        epsilon: eps,
        value,
        abs_error,
        limit_coefficient,
    })
}

/// Largest cluster size supported by [`cluster_integral`].
pub const CLUSTER_MAX_P: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterResult {
    pub p: usize,
    pub k: f64,
    pub cutoff_x: f64,
    pub epsilon: f64,
    pub i_value: f64,
    pub abs_error: f64,
    /// Exponent of ε in front of the p-cluster integral, `p(p+1)/2 - pk`.
    pub m_exponent: f64,
    pub method: FnMethod,
}

/// `∫_{[-X/ε, X/ε]^p} ∏ du ∏|u_i - u_j| / ∏(u_i² + 1)^{k/2}`, computed in `u = sinh s`.
pub fn cluster_integral(p: usize, k: f64, x: f64, eps: f64) -> Result<ClusterResult> {
    check_order(p, CLUSTER_MAX_P)?;
    if !(k > 0.0) || !k.is_finite() {
        return domain(format!("k must be positive, got {k}"));
    }
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("cutoff X must be positive, got {x}"));
    }
    if !(eps > 0.0 && eps < x) {
        return domain(format!("need 0 < eps < X, got eps = {eps}, X = {x}"));
    }
    let s_max = (x / eps).asinh();
    let power = 1.0 - k;
    let f = |s: &[f64]| {
        let mut val = 1.0;
        for (j, &sj) in s.iter().enumerate() {
            val *= sj.cosh().powf(power);
            for &si in &s[..j] {
                val *= (sj.sinh() - si.sinh()).abs();
            }
        }
        val
    };
    let tol = 1e-10;
    let (value, abs_error, method) = match p {
        1 => {
            let r = integrate(|s| f(&[s]), 0.0, s_max, QuadOptions::relative(tol));
            accuracy_check(r.value, r.abs_error, tol, r.converged)?;
            (2.0 * r.value, 2.0 * r.abs_error, FnMethod::Quadrature)
        }
        2 => {
            let r = ordered_simplex(&f, 2, -s_max, s_max, tol);
            accuracy_check(r.value, r.abs_error, tol, r.converged)?;
            (2.0 * r.value, 2.0 * r.abs_error, FnMethod::Quadrature)
        }
        _ => {
            let (v, e) = stratified_cube(&f, p, s_max);
            (v, e, FnMethod::MonteCarlo)
        }
    };
    let pf = p as f64;
    Ok(ClusterResult {
        p,
        k,
        cutoff_x: x,
        epsilon: eps,
        i_value: value,
        abs_error,
        m_exponent: 0.5 * pf * (pf + 1.0) - pf * k,
        method,
    })
}

/// Stratified MC over `[-a, a]^p` with equal strata; returns value and 3σ.
fn stratified_cube<F: Fn(&[f64]) -> f64 + Sync>(f: &F, p: usize, a: f64) -> (f64, f64) {
    let per_dim: usize = if p == 3 { 12 } else { 6 };
    let per_stratum = 32usize;
    let strata = per_dim.pow(p as u32);
    let h = 2.0 * a / per_dim as f64;
    let vol = h.powi(p as i32);
    let rng = CounterRng::new(MC_SEED ^ 0xc1u64, p as u64);
    let parts: Vec<(f64, f64)> = (0..strata)
        .into_par_iter()
        .map(|cell| {
            let mut idx = [0usize; CLUSTER_MAX_P];
            let mut c = cell;
            for slot in idx.iter_mut().take(p) {
                *slot = c % per_dim;
                c /= per_dim;
            }
            let (mut s1, mut s2) = (0.0, 0.0);
            let mut pt = [0.0; CLUSTER_MAX_P];
            for t in 0..per_stratum {
                let base = ((cell * per_stratum + t) * CLUSTER_MAX_P) as u64;
                for d in 0..p {
                    let (u, _) = rng.uniform_pair(base + d as u64);
                    pt[d] = -a + h * (idx[d] as f64 + u);
                }
                let v = f(&pt[..p]);
                s1 += v;
                s2 += v * v;
            }
            let m = per_stratum as f64;
            let mean = s1 / m;
            let var = (s2 / m - mean * mean).max(0.0) * m / (m - 1.0);
            (vol * mean, vol * vol * var / m)
        })
        .collect();
    let value: f64 = parts.iter().map(|x| x.0).sum();
    let var: f64 = parts.iter().map(|x| x.1).sum();
    (value, 3.0 * var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specialfns::{bessel_k_scaled, EULER_GAMMA};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn goe_order_one_is_macdonald() {
        let r = fn_goe_quadrature(1, 1.0, 1e-10).unwrap();
        assert!(rel(r.value, 1.144_463_079_806_9) < 1e-9, "{r:?}");
        for eps in [1e-4, 0.01, 10.0, 50.0] {
            let q = fn_goe_quadrature(1, eps, 1e-10).unwrap();
            assert!(
                rel(q.value, bessel_k_scaled(0, eps).unwrap()) < 1e-9,
                "eps={eps}"
            );
        }
    }

    #[test]
    fn goe_order_one_large_eps() {
        let r = fn_goe_quadrature(1, 200.0, 1e-10).unwrap();
        let scaled = r.value * 200f64.sqrt();
        assert!(rel(scaled, (std::f64::consts::PI / 2.0).sqrt()) < 1e-3);
    }

    #[test]
    fn quadrature_matches_pfaffian() {
        for n in [1, 2, 3] {
            for eps in [0.25, 1.0, 4.0] {
                let q = fn_goe_quadrature(n, eps, 1e-8).unwrap();
                let p = fn_goe_pfaffian(n, eps).unwrap();
                assert!(rel(q.value, p.value) < 1e-6, "n={n} eps={eps}: {q:?} {p:?}");
            }
        }
    }

    #[test]
    fn pfaffian_order_one_is_border_moment() {
        let p = fn_goe_pfaffian(1, 1.0).unwrap();
        assert!(rel(p.value, 1.144_463_079_806_9) < 1e-12);
    }

    #[test]
    fn symmetrization_exactness() {
        // full square [0, ψ_max]^2 versus 2 × ordered triangle at ε = 1
        let eps = 1.0;
        let psi_max = (1.0 + tail_cutoff(1, 1e-13) / eps).acosh();
        let f =
            |a: f64, b: f64| (-eps * (cosh_m1(a) + cosh_m1(b))).exp() * (a.cosh() - b.cosh()).abs();
        let full = integrate(
            |a| {
                // split the inner range at the kink b = a
                let o = QuadOptions::relative(1e-12);
                integrate(|b| f(a, b), 0.0, a, o).value
                    + integrate(|b| f(a, b), a, psi_max, o).value
            },
            0.0,
            psi_max,
            QuadOptions::relative(1e-11),
        );
        let q = fn_goe_quadrature(2, eps, 1e-10).unwrap();
        assert!(rel(full.value, q.value) < 1e-8);
    }

    #[test]
    fn monotone_in_eps() {
        for n in 1..=3 {
            let mut last = f64::INFINITY;
            for i in 0..10 {
                let eps = 10f64.powf(-2.0 + 0.4 * i as f64);
                let v = fn_goe_quadrature(n, eps, 1e-6).unwrap().value;
                assert!(v < last, "n={n} eps={eps}");
                last = v;
            }
        }
    }

    #[test]
    fn monte_carlo_branch_for_order_four() {
        // the MC estimate brackets the Pfaffian route
        let p = fn_goe_pfaffian(4, 2.0).unwrap();
        let m = fn_goe_quadrature(4, 2.0, 2e-2).unwrap();
        assert_eq!(m.method, FnMethod::MonteCarlo);
        assert!((m.value - p.value).abs() <= m.abs_error, "{m:?} vs {p:?}");
    }

    #[test]
    fn unreachable_tolerance_reports_best_value() {
        match fn_goe_quadrature(5, 0.5, 1e-9) {
            Err(Error::Accuracy { best, achieved }) => assert!(best > 0.0 && achieved > 0.0),
            other => panic!("expected accuracy failure, got {other:?}"),
        }
    }

    #[test]
    fn argument_errors() {
        assert!(matches!(
            fn_goe_quadrature(9, 1.0, 1e-6),
            Err(Error::UnsupportedOrder { .. })
        ));
        assert!(fn_goe_quadrature(1, 1e-8, 1e-6).is_err());
        assert!(fn_goe_quadrature(1, 1.0, 1e-12).is_err());
        assert!(matches!(
            fn_goe_pfaffian(9, 1.0),
            Err(Error::UnsupportedOrder { .. })
        ));
        assert!(matches!(
            fn_goe_truncated(2, 0.0),
            Err(Error::Divergence(_))
        ));
        assert!(fn_goe_truncated(2, 0.5).is_err());
        assert!(fn_gue(6, 1.0, FnMethod::Quadrature).is_err());
    }

    #[test]
    fn gue_closed_form_examples() {
        let v = |n, e| fn_gue(n, e, FnMethod::ClosedForm).unwrap().value;
        assert!(rel(v(1, 1.0), 1.0) < 1e-15);
        assert!(rel(v(2, 1.0), 2.0) < 1e-14);
        assert!(rel(v(2, 2.0), 0.125) < 1e-14);
    }

    #[test]
    fn gue_quadrature_matches_closed_form() {
        for n in 1..=5 {
            for eps in [0.5, 1.0, 2.0] {
                let q = fn_gue(n, eps, FnMethod::Quadrature).unwrap().value;
                let c = fn_gue(n, eps, FnMethod::ClosedForm).unwrap().value;
                assert!(rel(q, c) < 1e-6, "n={n} eps={eps}: {q} vs {c}");
            }
        }
    }

    /// E_1(x) by quadrature of e^{-t}/t over [x, ∞) in log variables.
    fn e1_oracle(x: f64) -> f64 {
        integrate(
            |s: f64| (-s.exp()).exp(),
            x.ln(),
            4.0,
            QuadOptions::relative(1e-13),
        )
        .value
    }

    #[test]
    fn truncated_order_one_is_exponential_integral() {
        let r = fn_goe_truncated(1, 0.01).unwrap();
        assert!(rel(r.value, e1_oracle(0.01)) < 1e-8);
        assert!((r.value - 4.0379).abs() < 1e-4);
        let r = fn_goe_truncated(1, 1e-4).unwrap();
        assert!((r.value - (1e4f64).ln() + EULER_GAMMA).abs() < 1e-3);
    }

    #[test]
    fn truncated_tracks_full_integral_at_small_eps() {
        // both forms share the leading 2 ln(1/ε); their O(1) offsets differ by a
        // constant, so the ratio approaches 1 only logarithmically
        let offset = |eps: f64| {
            let t = fn_goe_truncated(2, eps).unwrap().value;
            let q = fn_goe_quadrature(2, eps, 1e-8).unwrap().value;
            (eps * (q - t), t / q)
        };
        let (d3, r3) = offset(1e-3);
        let (d6, r6) = offset(1e-6);
        assert!((d3 - d6).abs() < 0.01 * d6, "offsets {d3} {d6}");
        assert!(r3 > 0.85 && r3 < 1.0, "ratio {r3}");
        assert!((0.9..=1.1).contains(&r6), "ratio {r6}");
    }

    #[test]
    fn derivative_limits() {
        assert!((ftilde_limit_coefficient(1) + 1.0).abs() < 1e-15);
        assert!((ftilde_limit_coefficient(2) + 2.0).abs() < 1e-14);
        assert!((ftilde_limit_coefficient(3) + 3.0).abs() < 1e-13);
        let d = ftilde_derivative(1, 1e-4).unwrap();
        assert!((d.value * 1e-4 + 0.9999).abs() < 1e-5);
        let d = ftilde_derivative(2, 1e-4).unwrap();
        assert!(rel(d.value * 1e-4, -2.0) < 0.01, "{d:?}");
    }

    #[test]
    fn derivative_matches_finite_difference_of_truncated_form() {
        let eps = 0.01;
        let h = 1e-4;
        let ft = |e: f64| e * fn_goe_truncated(2, e).unwrap().value;
        let fd = (ft(eps + h) - ft(eps - h)) / (2.0 * h);
        let d = ftilde_derivative(2, eps).unwrap();
        assert!(rel(d.value, fd) < 1e-3, "{} vs {fd}", d.value);
    }

    #[test]
    fn cluster_closed_cases() {
        let r = cluster_integral(1, 1.0, 1.0, 1e-3).unwrap();
        assert!(rel(r.i_value, 2.0 * (1e3f64).asinh()) < 1e-10);
        assert_eq!(r.m_exponent, 0.0);
        let r = cluster_integral(1, 2.0, 1.0, 1e-7).unwrap();
        assert!((r.i_value - std::f64::consts::PI).abs() < 1e-6);
        assert_eq!(r.m_exponent, -1.0);
    }

    #[test]
    fn cluster_pair_diverges_logarithmically() {
        let i = |e| cluster_integral(2, 2.0, 1.0, e).unwrap().i_value;
        let (a, b, c) = (i(1e-2), i(1e-3), i(1e-4));
        let q = (c - b) / (b - a);
        assert!((q - 1.0).abs() < 0.1, "ratio {q}");
        assert!(c > b && b > a);
    }

    #[test]
    fn cluster_monte_carlo_orders() {
        // k = 4: convergent; the estimate must be stable against the cutoff
        let a = cluster_integral(3, 4.0, 1.0, 1e-2).unwrap();
        let b = cluster_integral(3, 4.0, 1.0, 1e-3).unwrap();
        assert_eq!(a.method, FnMethod::MonteCarlo);
        assert!((a.i_value - b.i_value).abs() < a.abs_error + b.abs_error + 0.05 * a.i_value);
        assert!(a.m_exponent == 6.0 - 12.0);
        let c = cluster_integral(4, 4.0, 1.0, 0.1).unwrap();
        assert!(c.i_value > 0.0 && c.abs_error.is_finite());
    }
}
