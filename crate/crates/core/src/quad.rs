//! Adaptive Gauss-Kronrod quadrature and nested integration over ordered simplices.
//!
//! The 1D integrator is the globally adaptive 21-point Gauss-Kronrod scheme
//! (QUADPACK `qags` without extrapolation): the interval with the largest error
//! estimate is bisected until the summed estimate meets the requested tolerance.
//! [`ordered_simplex`] nests it to integrate a symmetric function over
//! `lo <= t_1 <= ... <= t_n <= hi`.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Maximum dimension supported by the nested simplex integrator.
pub const MAX_DIM: usize = 8;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_067_820_380,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Tolerances and budget for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl QuadOptions {
    pub fn relative(rel_tol: f64) -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol,
            max_intervals: 2000,
        }
    }

    pub fn with_abs(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut err = err.abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 {
            res_asc * scale
        } else {
            res_asc
        };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    err
}

/// One 21-point Kronrod panel with its embedded 10-point Gauss estimate.
#[allow(clippy::needless_range_loop)]
fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = WGK[10] * fc;
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];

    for j in 0..5 {
        let jtw = 2 * j + 1;
        let dx = half * XGK[jtw];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_g += WG[j] * (f1 + f2);
        res_k += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let dx = half * XGK[jtwm1];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        res_k += WGK[jtwm1] * (f1 + f2);
        res_abs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }

    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let value = res_k * half;
    let err = rescale_error(
        (res_k - res_g) * half,
        res_abs * half.abs(),
        res_asc * half.abs(),
    );
    (value, err)
}

/// Integrates `f` over `[a, b]` adaptively.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> QuadResult {
    if a == b {
        return QuadResult {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
            converged: true,
        };
    }
    let (value, error) = gk21(&f, a, b);
    let mut evaluations = 21;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;

    let done = |total: f64, err: f64| err <= opts.abs_tol.max(opts.rel_tol * total.abs());

    while !done(total, total_err) && heap.len() < opts.max_intervals {
        let seg = match heap.pop() {
            Some(s) => s,
            None => break,
        };
        let mid = 0.5 * (seg.a + seg.b);
        if !(mid > seg.a && mid < seg.b) {
            // interval exhausted at machine resolution
            heap.push(Segment { error: 0.0, ..seg });
            total_err = heap.iter().map(|s| s.error).sum();
            if heap.peek().is_none_or(|s| s.error == 0.0) {
                break;
            }
            continue;
        }
        let (v1, e1) = gk21(&f, seg.a, mid);
        let (v2, e2) = gk21(&f, mid, seg.b);
        evaluations += 42;
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        heap.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
    }

    // resum to shed the drift of incremental updates
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let abs_error: f64 = heap.iter().map(|s| s.error).sum();
    QuadResult {
        value,
        abs_error,
        evaluations,
        converged: done(value, abs_error),
    }
}

/// Integrates `f(t_1, ..., t_n)` over the ordered region `lo <= t_1 <= ... <= t_n <= hi`
/// by nesting [`integrate`]. Inner levels run at a tenfold tighter relative tolerance
/// than the level enclosing them.
pub fn ordered_simplex<F: Fn(&[f64]) -> f64>(
    f: &F,
    dim: usize,
    lo: f64,
    hi: f64,
    rel_tol: f64,
) -> QuadResult {
    assert!(
        (1..=MAX_DIM).contains(&dim),
        "simplex dimension {dim} unsupported"
    );
    let failures = Cell::new(0usize);
    let evals = Cell::new(0usize);
    let point = [0.0; MAX_DIM];
    let outer = integrate(
        |t| {
            let mut p = point;
            p[0] = t;
            nested(f, dim, 1, t, hi, p, rel_tol * 0.1, &failures, &evals)
        },
        lo,
        hi,
        QuadOptions::relative(rel_tol),
    );
    let inner_share = if dim > 1 {
        (dim - 1) as f64 * rel_tol * 0.1 * outer.value.abs()
    } else {
        0.0
    };
    QuadResult {
        value: outer.value,
        abs_error: outer.abs_error + inner_share,
        evaluations: outer.evaluations + evals.get(),
        converged: outer.converged && failures.get() == 0,
    }
}

#[allow(clippy::too_many_arguments)]
fn nested<F: Fn(&[f64]) -> f64>(
    f: &F,
    dim: usize,
    depth: usize,
    lower: f64,
    hi: f64,
    point: [f64; MAX_DIM],
    rel_tol: f64,
    failures: &Cell<usize>,
    evals: &Cell<usize>,
) -> f64 {
    if depth == dim {
        return f(&point[..dim]);
    }
    let r = integrate(
        |t| {
            let mut p = point;
            p[depth] = t;
            nested(f, dim, depth + 1, t, hi, p, rel_tol * 0.1, failures, evals)
        },
        lower,
        hi,
        QuadOptions::relative(rel_tol.max(1e-13)).with_abs(1e-300),
    );
    if !r.converged {
        failures.set(failures.get() + 1);
    }
    evals.set(evals.get() + r.evaluations);
    r.value
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(
            |x| x.powi(5) - 3.0 * x * x,
            -1.0,
            2.0,
            QuadOptions::relative(1e-12),
        );
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((r.value - exact).abs() < 1e-13);
        assert!(r.converged);
    }

    #[test]
    fn endpoint_singularity_converges() {
        // ∫_0^1 x^{-1/2} dx = 2
        let r = integrate(
            |x: f64| 1.0 / x.sqrt(),
            0.0,
            1.0,
            QuadOptions::relative(1e-10),
        );
        assert!((r.value - 2.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn gaussian_on_wide_range() {
        let r = integrate(
            |x: f64| (-x * x).exp(),
            -30.0,
            30.0,
            QuadOptions::relative(1e-12),
        );
        assert!((r.value - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn simplex_volume() {
        // volume of the ordered 3-simplex in [0,1]^3 is 1/3!
        let r = ordered_simplex(&|_: &[f64]| 1.0, 3, 0.0, 1.0, 1e-10);
        assert!((r.value - 1.0 / 6.0).abs() < 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn simplex_symmetric_function() {
        // ∫_{[0,1]^2} (x+y) = 1, ordered half = 1/2
        let r = ordered_simplex(&|t: &[f64]| t[0] + t[1], 2, 0.0, 1.0, 1e-12);
        assert!((r.value - 0.5).abs() < 1e-13);
    }
}
