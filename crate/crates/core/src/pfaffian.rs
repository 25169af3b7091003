//! Pfaffians of real skew-symmetric matrices by Parlett-Reid elimination with pivoting.

use crate::error::{domain, Result};

/// Dense row-major skew-symmetric matrix. Only the strict upper triangle is
/// supplied by callers; the lower triangle is its negation by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SkewMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Sets `(i, j)` to `v` and `(j, i)` to `-v`. Requires `i != j`.
    pub fn set_upper(&mut self, i: usize, j: usize, v: f64) {
        assert!(i != j, "diagonal of a skew matrix is fixed at zero");
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = -v;
    }

    /// Determinant by partial-pivot LU; used to check `Pf(A)^2 = det(A)`.
    pub fn determinant(&self) -> f64 {
        let n = self.dim;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a[x * n + k].abs().total_cmp(&a[y * n + k].abs()))
                .unwrap();
            if a[p * n + k] == 0.0 {
                return 0.0;
            }
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
                    a[r * n + c] -= f * a[k * n + c];
                }
            }
        }
        det
    }
}

/// Pfaffian of `m`. Odd dimensions give zero; the empty matrix gives one.
pub fn pfaffian(m: &SkewMatrix) -> Result<f64> {
    let n = m.dim();
    if m.data.iter().any(|v| !v.is_finite()) {
        return domain("non-finite entry in skew matrix");
    }
    if n % 2 == 1 {
        return Ok(0.0);
    }
    let mut a = m.data.clone();
    let idx = |i: usize, j: usize| i * n + j;
    let mut pf = 1.0;

    let mut k = 0;
    while k + 1 < n {
        // pivot: largest entry in column k below the diagonal
        let p = ((k + 1)..n)
            .max_by(|&x, &y| a[idx(x, k)].abs().total_cmp(&a[idx(y, k)].abs()))
            .unwrap();
        if p != k + 1 {
            let q = k + 1;
            for c in 0..n {
                a.swap(idx(q, c), idx(p, c));
            }
            for r in 0..n {
                a.swap(idx(r, q), idx(r, p));
            }
            pf = -pf;
        }
        let piv = a[idx(k, k + 1)];
        if piv == 0.0 {
            return Ok(0.0);
        }
        pf *= piv;
        if k + 2 < n {
            let tau: Vec<f64> = ((k + 2)..n).map(|i| a[idx(k, i)] / piv).collect();
            for i in (k + 2)..n {
                for j in (k + 2)..n {
                    let ti = tau[i - k - 2];
                    let tj = tau[j - k - 2];
                    a[idx(i, j)] -= ti * a[idx(k + 1, j)] - tj * a[idx(k + 1, i)];
                }
            }
        }
        k += 2;
    }
    Ok(pf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    fn random_skew(n: usize, seed: u64) -> SkewMatrix {
        let rng = CounterRng::new(seed, 0);
        let mut m = SkewMatrix::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                m.set_upper(i, j, rng.normal((i * n + j) as u64));
            }
        }
        m
    }

    #[test]
    fn small_cases() {
        assert_eq!(pfaffian(&SkewMatrix::zeros(0)).unwrap(), 1.0);
        let mut m = SkewMatrix::zeros(2);
        m.set_upper(0, 1, 2.5);
        assert_eq!(pfaffian(&m).unwrap(), 2.5);
        // Pf of 4x4 = a01 a23 - a02 a13 + a03 a12
        let mut m = SkewMatrix::zeros(4);
        let v = [
            (0, 1, 1.0),
            (0, 2, 2.0),
            (0, 3, 3.0),
            (1, 2, 4.0),
            (1, 3, 5.0),
            (2, 3, 6.0),
        ];
        for (i, j, x) in v {
            m.set_upper(i, j, x);
        }
        assert!((pfaffian(&m).unwrap() - (6.0 - 10.0 + 12.0)).abs() < 1e-14);
        assert_eq!(pfaffian(&SkewMatrix::zeros(3)).unwrap(), 0.0);
    }

    #[test]
    fn square_equals_determinant() {
        for (n, seed) in [(2, 1), (4, 2), (6, 3), (8, 4), (10, 5)] {
            let m = random_skew(n, seed);
            let pf = pfaffian(&m).unwrap();
            let det = m.determinant();
            assert!(
                (pf * pf - det).abs() <= 1e-12 * det.abs(),
                "n={n}: {pf}^2 vs {det}"
            );
        }
    }

    #[test]
    fn antisymmetry_is_structural() {
        let m = random_skew(7, 11);
        for i in 0..7 {
            assert_eq!(m.get(i, i), 0.0);
            for j in 0..7 {
                assert_eq!(m.get(i, j) + m.get(j, i), 0.0);
            }
        }
    }

    #[test]
    fn row_column_swap_flips_sign() {
        let m = random_skew(6, 21);
        let mut s = SkewMatrix::zeros(6);
        let perm = [1, 0, 2, 3, 4, 5];
        for i in 0..6 {
            for j in (i + 1)..6 {
                s.data[i * 6 + j] = m.get(perm[i], perm[j]);
                s.data[j * 6 + i] = m.get(perm[j], perm[i]);
            }
        }
        let a = pfaffian(&m).unwrap();
        let b = pfaffian(&s).unwrap();
        assert!((a + b).abs() < 1e-12 * a.abs());
    }
}
