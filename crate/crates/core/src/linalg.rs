//! Small dense kernels on row-major square matrices.

/// Overwrite the lower triangle of `m` with its Cholesky factor `L`
/// (`m = L L^T`) and zero the strict upper triangle. Returns `false` when
/// `m` is not positive definite.
pub fn cholesky_in_place(m: &mut [f64], n: usize) -> bool {
    debug_assert_eq!(m.len(), n * n);
    for j in 0..n {
        let mut diag = m[j * n + j];
        for k in 0..j {
            diag -= m[j * n + k] * m[j * n + k];
        }
        // Also rejects NaN.
        if diag.is_nan() || diag <= 0.0 {
            return false;
        }
        let ljj = diag.sqrt();
        m[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut v = m[i * n + j];
            for k in 0..j {
                v -= m[i * n + k] * m[j * n + k];
            }
            m[i * n + j] = v / ljj;
        }
        for k in (j + 1)..n {
            m[j * n + k] = 0.0;
        }
    }
    true
}

/// Solve `L y = v` in place for lower-triangular `L`.
pub fn forward_substitute(l: &[f64], n: usize, v: &mut [f64]) {
    for i in 0..n {
        let row = &l[i * n..i * n + i];
        let acc: f64 = row.iter().zip(&v[..i]).map(|(a, b)| a * b).sum();
        v[i] = (v[i] - acc) / l[i * n + i];
    }
}

/// Solve `L^T y = v` in place for lower-triangular `L`.
pub fn backward_substitute_transposed(l: &[f64], n: usize, v: &mut [f64]) {
    for i in (0..n).rev() {
        let mut acc = v[i];
        for k in (i + 1)..n {
            acc -= l[k * n + i] * v[k];
        }
        v[i] = acc / l[i * n + i];
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
#[cfg(test)]
pub fn symmetric_eigenvalues(m: &[f64], n: usize) -> Vec<f64> {
    let mut a = m.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |j| *j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        if off < 1e-22 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}
