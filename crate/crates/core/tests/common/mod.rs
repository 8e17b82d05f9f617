//! Independent reference implementations shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop, clippy::too_many_arguments)]

use std::path::PathBuf;

/// Solve `m x = v` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .zip(v)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(*rhs);
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..=n {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (a[i][n] - s) / a[i][i];
    }
    x
}

/// Explicit inverse, one Gaussian solve per unit vector.
pub fn dense_inverse(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let e: Vec<f64> = (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
            gauss_solve(m, &e)
        })
        .collect();
    (0..n)
        .map(|i| (0..n).map(|j| cols[j][i]).collect())
        .collect()
}

/// Dense LinUCB bookkeeping: `A = I + sum x x^T`, `b = sum r x` per action.
pub struct DenseLinUcb {
    pub dim: usize,
    pub alpha: f64,
    pub a: Vec<Vec<Vec<f64>>>,
    pub b: Vec<Vec<f64>>,
}

impl DenseLinUcb {
    pub fn new(dim: usize, alpha: f64, actions: usize) -> Self {
        let eye: Vec<Vec<f64>> = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        DenseLinUcb {
            dim,
            alpha,
            a: vec![eye; actions],
            b: vec![vec![0.0; dim]; actions],
        }
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(a, b)| {
                let theta = gauss_solve(a, b);
                let inv = dense_inverse(a);
                let mean: f64 = theta.iter().zip(x).map(|(t, v)| t * v).sum();
                let quad: f64 = (0..self.dim)
                    .map(|i| (0..self.dim).map(|j| x[i] * inv[i][j] * x[j]).sum::<f64>())
                    .sum();
                mean + self.alpha * quad.sqrt()
            })
            .collect()
    }

    pub fn update(&mut self, action: usize, x: &[f64], reward: f64) {
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.a[action][i][j] += x[i] * x[j];
            }
            self.b[action][i] += reward * x[i];
        }
    }
}

/// Adaptive Simpson quadrature of `f` over `[lo, hi]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    fn step(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(lo), f(hi));
    let fm = f(0.5 * (lo + hi));
    let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, lo, hi, fa, fm, fb, whole, tol, 50)
}

/// Two-sided Student-t tail `P(|T| > t)` by quadrature of the incomplete beta
/// integral `I_x(df/2, 1/2)` with `x = df / (df + t^2)`.
///
/// Substituting `u = 1 - s^2` removes the `(1 - u)^{-1/2}` singularity, leaving
/// the smooth integrand `(1 - s^2)^{df/2 - 1}`.
pub fn t_two_sided_quadrature(t: f64, df: f64) -> f64 {
    let a = df / 2.0;
    let g = move |s: f64| (1.0 - s * s).max(0.0).powf(a - 1.0);
    let x = df / (df + t * t);
    let lo = (1.0 - x).sqrt();
    let part = adaptive_simpson(&g, lo, 1.0, 1e-15);
    let total = adaptive_simpson(&g, 0.0, 1.0, 1e-15);
    part / total
}

/// Welch statistic and Welch-Satterthwaite degrees of freedom, computed directly.
pub fn welch_reference(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mv = |s: &[f64]| {
        let n = s.len() as f64;
        let m = s.iter().sum::<f64>() / n;
        let v = s.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v, n)
    };
    let (ma, va, na) = mv(a);
    let (mb, vb, nb) = mv(b);
    let (qa, qb) = (va / na, vb / nb);
    let t = (ma - mb) / (qa + qb).sqrt();
    let df = (qa + qb).powi(2) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    (t, df)
}

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("fixtures")
        .join(name)
}
