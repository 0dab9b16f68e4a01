//! Reference implementations used only by tests. Deliberately naive and
//! independent of the library's linear algebra paths.
#![allow(dead_code)]

use sufcast_core::{Matrix, Vector};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix, eigenvalues
/// descending.
pub fn jacobi_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = Matrix::identity(n, n);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += m[(i, j)] * m[(i, j)];
                }
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| m[(j, j)].partial_cmp(&m[(i, i)]).unwrap());
    let vals = idx.iter().map(|&i| m[(i, i)]).collect();
    let vecs = Matrix::from_fn(n, n, |r, c| v[(r, idx[c])]);
    (vals, vecs)
}

/// Top `k` eigenpairs of a symmetric PSD matrix by power iteration with
/// deflation.
pub fn power_iteration(a: &Matrix, k: usize, iters: usize) -> (Vec<f64>, Matrix) {
    let n = a.nrows();
    let mut work = a.clone();
    let mut vals = Vec::new();
    let mut vecs = Matrix::zeros(n, k);
    for j in 0..k {
        let mut x = Vector::from_fn(n, |i, _| 1.0 + ((i * 7 + j * 13) % 11) as f64 / 11.0);
        x /= x.norm();
        for _ in 0..iters {
            let y = &work * &x;
            let norm = y.norm();
            if norm == 0.0 {
                break;
            }
            let next = y / norm;
            let converged = (&next - &x).norm() < 1e-15;
            x = next;
            if converged {
                break;
            }
        }
        let lambda = x.dot(&(&work * &x));
        work -= lambda * &x * x.transpose();
        vals.push(lambda);
        vecs.set_column(j, &x);
    }
    (vals, vecs)
}

/// Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &Matrix, b: &Vector) -> Vector {
    let n = a.nrows();
    let mut m = a.clone();
    let mut r = b.clone();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[(i, col)].abs().partial_cmp(&m[(j, col)].abs()).unwrap())
            .unwrap();
        m.swap_rows(col, piv);
        r.swap_rows(col, piv);
        for row in col + 1..n {
            let f = m[(row, col)] / m[(col, col)];
            for c in col..n {
                m[(row, c)] -= f * m[(col, c)];
            }
            r[row] -= f * r[col];
        }
    }
    let mut x = Vector::zeros(n);
    for i in (0..n).rev() {
        let mut s = r[i];
        for c in i + 1..n {
            s -= m[(i, c)] * x[c];
        }
        x[i] = s / m[(i, i)];
    }
    x
}

/// OLS with intercept via the normal equations; returns `[intercept, beta..]`.
pub fn normal_equations(x: &Matrix, y: &Vector) -> Vector {
    let design = x.clone().insert_column(0, 1.0);
    let xtx = design.transpose() * &design;
    let xty = design.transpose() * y;
    gauss_solve(&xtx, &xty)
}

/// Weighted least squares `argmin sum_i w_i (y_i - d_i' beta)^2`.
pub fn weighted_least_squares(design: &Matrix, weights: &[f64], y: &Vector) -> Vector {
    let m = design.ncols();
    let mut xtx = Matrix::zeros(m, m);
    let mut xty = Vector::zeros(m);
    for i in 0..design.nrows() {
        for a in 0..m {
            xty[a] += weights[i] * design[(i, a)] * y[i];
            for b in 0..m {
                xtx[(a, b)] += weights[i] * design[(i, a)] * design[(i, b)];
            }
        }
    }
    gauss_solve(&xtx, &xty)
}

/// Local linear estimate at `point` with a Gaussian product kernel.
pub fn local_linear_oracle(indices: &Matrix, y: &Vector, bandwidths: &[f64], point: &[f64]) -> f64 {
    let n = indices.nrows();
    let d = indices.ncols();
    let design = Matrix::from_fn(n, d + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            indices[(i, j - 1)] - point[j - 1]
        }
    });
    let weights: Vec<f64> = (0..n)
        .map(|i| {
            let mut e = 0.0;
            for j in 0..d {
                let u = (indices[(i, j)] - point[j]) / bandwidths[j];
                e += u * u;
            }
            (-0.5 * e).exp()
        })
        .collect();
    weighted_least_squares(&design, &weights, y)[0]
}

/// Lower Cholesky factor of an SPD matrix.
pub fn cholesky(a: &Matrix) -> Matrix {
    let n = a.nrows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    l
}

fn lower_inverse(l: &Matrix) -> Matrix {
    let n = l.nrows();
    let mut inv = Matrix::zeros(n, n);
    for c in 0..n {
        let mut e = Vector::zeros(n);
        e[c] = 1.0;
        for i in 0..n {
            let mut s = e[i];
            for k in 0..i {
                s -= l[(i, k)] * inv[(k, c)];
            }
            inv[(i, c)] = s / l[(i, i)];
        }
    }
    inv
}

/// Generalized symmetric problem `A v = lambda M v` with `M` SPD; vectors
/// are `M`-orthonormal, eigenvalues descending.
pub fn generalized_eigen(a: &Matrix, m: &Matrix) -> (Vec<f64>, Matrix) {
    let l = cholesky(m);
    let li = lower_inverse(&l);
    let c = &li * a * li.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let (vals, y) = jacobi_eigen(&c);
    (vals, li.transpose() * y)
}

/// Plain Gram-based inverse, used to check pseudo-inverse identities.
pub fn inverse(a: &Matrix) -> Matrix {
    let n = a.nrows();
    let mut out = Matrix::zeros(n, n);
    for c in 0..n {
        let mut e = Vector::zeros(n);
        e[c] = 1.0;
        out.set_column(c, &gauss_solve(a, &e));
    }
    out
}

/// Align the sign of each column of `b` to the matching column of `a`.
pub fn align_signs(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = b.clone();
    for j in 0..a.ncols() {
        if a.column(j).dot(&b.column(j)) < 0.0 {
            out.column_mut(j).neg_mut();
        }
    }
    out
}

/// Deterministic pseudo-random matrix from a small LCG.
pub fn lcg_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    Matrix::from_fn(rows, cols, |_, _| {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    })
}
