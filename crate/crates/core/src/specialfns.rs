//! Scalar special functions: log-gamma, the Macdonald functions `K_0`, `K_1`,
//! and moments of the weight `w(λ) = e^{-ελ} (λ²-1)^{-1/2}` on `[1, ∞)`.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};

/// Largest order `n` of the central integral supported by the moment tables.
pub const N_MAX: usize = 8;

/// Largest weighted-moment order (`2 * N_MAX`).
pub const MAX_MOMENT_ORDER: usize = 2 * N_MAX;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082_402_43;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Stirling series coefficients B_{2k} / (2k(2k-1)) for k = 1..6.
const STIRLING: [f64; 6] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
];

/// Natural logarithm of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("log_gamma requires a finite x > 0, got {x}"));
    }
    Ok(ln_gamma_pos(x))
}

pub(crate) fn ln_gamma_pos(x: f64) -> f64 {
    if x < 0.5 {
        // reflection keeps the Lanczos sum in its accurate range
        return (PI / (PI * x).sin()).ln() - ln_gamma_pos(1.0 - x);
    }
    if x >= 10.0 {
        let inv = 1.0 / x;
        let inv2 = inv * inv;
        let mut corr = 0.0;
        let mut pow = inv;
        for c in STIRLING {
            corr += c * pow;
            pow *= inv2;
        }
        return (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + corr;
    }
    let z = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Modified Bessel function of the second kind `K_order(x)` for order 0 or 1.
pub fn bessel_k(order: u32, x: f64) -> Result<f64> {
    let scaled = bessel_k_scaled(order, x)?;
    Ok(scaled * (-x).exp())
}

/// Exponentially scaled Bessel function `e^x K_order(x)`, finite for all `x > 0`.
pub fn bessel_k_scaled(order: u32, x: f64) -> Result<f64> {
    if order > 1 {
        return Err(Error::UnsupportedOrder {
            order: order as usize,
            max: 1,
        });
    }
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("bessel_k requires a finite x > 0, got {x}"));
    }
    let (k0, k1) = if x <= 2.0 {
        let (k0, k1) = k01_series(x);
        (k0 * x.exp(), k1 * x.exp())
    } else {
        k01_scaled_cf(x)
    };
    Ok(if order == 0 { k0 } else { k1 })
}

/// Power series for (K_0, K_1), accurate for 0 < x <= 2.
fn k01_series(x: f64) -> (f64, f64) {
    let t = 0.25 * x * x;
    let log_half = (0.5 * x).ln();

    let mut i0 = 0.0;
    let mut i1 = 0.0;
    let mut s0 = 0.0; // Σ H_k t^k / (k!)^2
    let mut s1 = 0.0; // Σ (ψ(k+1)+ψ(k+2)) t^k / (k!(k+1)!)
    let mut term0 = 1.0; // t^k / (k!)^2
    let mut term1 = 1.0; // t^k / (k!(k+1)!)
    let mut harmonic = 0.0; // H_k
    for k in 0..60 {
        let kf = k as f64;
        let h_next = harmonic + 1.0 / (kf + 1.0);
        i0 += term0;
        i1 += term1;
        s0 += harmonic * term0;
        s1 += (harmonic + h_next - 2.0 * EULER_GAMMA) * term1;
        if term0 < 1e-18 * i0 && k > 2 {
            break;
        }
        term0 *= t / ((kf + 1.0) * (kf + 1.0));
        term1 *= t / ((kf + 1.0) * (kf + 2.0));
        harmonic = h_next;
    }
    let i1 = 0.5 * x * i1;
    let k0 = -(log_half + EULER_GAMMA) * i0 + s0;
    let k1 = 1.0 / x + log_half * i1 - 0.25 * x * s1;
    (k0, k1)
}

/// Steed's continued fraction (Temme's CF2) for scaled (e^x K_0, e^x K_1), x > 2.
fn k01_scaled_cf(x: f64) -> (f64, f64) {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..10_000 {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < f64::EPSILON {
            break;
        }
    }
    let k0 = (PI / (2.0 * x)).sqrt() / s;
    let k1 = k0 * (x + 0.5 - a1 * h) / x;
    (k0, k1)
}

/// `m_k(ε) = ∫_1^∞ λ^k e^{-ελ} (λ²-1)^{-1/2} dλ` at a fixed order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedMoment {
    pub order: usize,
    pub epsilon: f64,
    pub value: f64,
}

/// Scaled moments `e^ε m_k(ε)` for `k = 0..=max_order`.
///
/// Built from `m_0 = K_0`, `m_1 = K_1` by the integration-by-parts recurrence
/// `ε m_{k+1} = k m_k - (k-1) m_{k-2} + ε m_{k-1}`, which is the closed form of
/// `m_{k+1} = -d m_k / dε` on this weight.
pub fn weighted_moments_scaled(max_order: usize, eps: f64) -> Result<Vec<f64>> {
    if max_order > MAX_MOMENT_ORDER {
        return Err(Error::UnsupportedOrder {
            order: max_order,
            max: MAX_MOMENT_ORDER,
        });
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return domain(format!(
            "weighted moments require a finite eps > 0, got {eps}"
        ));
    }
    let mut m = Vec::with_capacity(max_order + 1);
    m.push(bessel_k_scaled(0, eps)?);
    if max_order >= 1 {
        m.push(bessel_k_scaled(1, eps)?);
    }
    for k in 1..max_order {
        let kf = k as f64;
        let back2 = if k >= 2 { (kf - 1.0) * m[k - 2] } else { 0.0 };
        let next = (kf * m[k] - back2) / eps + m[k - 1];
        m.push(next);
    }
    Ok(m)
}

pub fn weighted_moment(order: usize, eps: f64) -> Result<WeightedMoment> {
    let scaled = weighted_moments_scaled(order, eps)?;
    Ok(WeightedMoment {
        order,
        epsilon: eps,
        value: scaled[order] * (-eps).exp(),
    })
}

/// `ln G_n` with `G_n = π^{n(n+1)/4} / ∏_{j=1}^n Γ(j/2)`, the volume factor of the
/// eigenvalue decomposition of `n × n` real symmetric matrices.
pub fn ln_g_n_constant(n: usize) -> Result<f64> {
    if n < 1 {
        return domain("G_n requires n >= 1");
    }
    let nf = n as f64;
    let denom: f64 = (1..=n).map(|j| ln_gamma_pos(0.5 * j as f64)).sum();
    Ok(0.25 * nf * (nf + 1.0) * PI.ln() - denom)
}

pub fn g_n_constant(n: usize) -> Result<f64> {
    Ok(ln_g_n_constant(n)?.exp())
}

pub(crate) fn ln_factorial(n: usize) -> f64 {
    ln_gamma_pos(n as f64 + 1.0)
}
