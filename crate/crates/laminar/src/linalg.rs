//! Small dense linear algebra for the d×d matrices the pipeline works with.
//!
//! Everything here targets low dimension (d is 2–5 in practice), so plain
//! O(d³) routines with no blocking are the right tool: Cholesky for SPD
//! solves and determinants, cyclic Jacobi for symmetric eigendecompositions,
//! Gaussian elimination with partial pivoting for the occasional general
//! solve.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
///
/// Fails with [`Error::NotSpd`] when a pivot is not strictly positive.
pub fn cholesky(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "cholesky needs a square matrix, got {:?}",
            a.dim()
        )));
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if !(sum > 0.0) {
                    return Err(Error::NotSpd(format!("pivot {sum} at row {i}")));
                }
                l[(i, j)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Solve `A x = b` given the Cholesky factor `L` of `A`.
pub fn cholesky_solve(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut y = b.clone();
    for i in 0..n {
        for k in 0..i {
            let v = y[k];
            y[i] -= l[(i, k)] * v;
        }
        y[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let v = y[k];
            y[i] -= l[(k, i)] * v;
        }
        y[i] /= l[(i, i)];
    }
    y
}

/// Determinant of `A` from its Cholesky factor.
pub fn det_from_cholesky(l: &Array2<f64>) -> f64 {
    let mut d = 1.0;
    for i in 0..l.nrows() {
        d *= l[(i, i)];
    }
    d * d
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// columns of an orthogonal matrix.
pub fn sym_eigen(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "sym_eigen needs a square matrix, got {:?}",
            a.dim()
        )));
    }
    let mut m = a.clone();
    let mut v = Array2::<f64>::eye(n);
    let scale: f64 = m
        .iter()
        .fold(0.0f64, |acc, x| acc.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    let tol = 1e-15 * scale;

    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[(p, q)].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                // tan of the rotation angle, the root smaller in magnitude
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..n {
                    let mip = m[(i, p)];
                    let miq = m[(i, q)];
                    m[(i, p)] = c * mip - s * miq;
                    m[(i, q)] = s * mip + c * miq;
                }
                for i in 0..n {
                    let mpi = m[(p, i)];
                    let mqi = m[(q, i)];
                    m[(p, i)] = c * mpi - s * mqi;
                    m[(q, i)] = s * mpi + c * mqi;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip - s * viq;
                    v[(i, q)] = s * vip + c * viq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let mut vals = Array1::<f64>::zeros(n);
    let mut vecs = Array2::<f64>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        vals[dst] = m[(src, src)];
        for r in 0..n {
            vecs[(r, dst)] = v[(r, src)];
        }
    }
    Ok((vals, vecs))
}

/// Symmetric positive (semi)definite square root via eigendecomposition.
///
/// Eigenvalues below zero by rounding are clamped to zero.
pub fn spd_sqrt(a: &Array2<f64>) -> Result<Array2<f64>> {
    let (vals, vecs) = sym_eigen(a)?;
    let n = a.nrows();
    let mut out = Array2::<f64>::zeros((n, n));
    for k in 0..n {
        let lam = vals[k].max(0.0).sqrt();
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += lam * vecs[(i, k)] * vecs[(j, k)];
            }
        }
    }
    Ok(out)
}

/// Inverse of an SPD matrix through its eigendecomposition, with the spectrum
/// floored at `floor_ratio · λ_max` before inversion.
pub fn spd_inverse_floored(a: &Array2<f64>, floor_ratio: f64) -> Result<Array2<f64>> {
    let (vals, vecs) = sym_eigen(a)?;
    let n = a.nrows();
    let lam_max = vals[n - 1];
    if !(lam_max > 0.0) {
        return Err(Error::NotSpd(format!(
            "largest eigenvalue {lam_max} is not positive"
        )));
    }
    let floor = floor_ratio * lam_max;
    let mut out = Array2::<f64>::zeros((n, n));
    for k in 0..n {
        let inv = 1.0 / vals[k].max(floor);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += inv * vecs[(i, k)] * vecs[(j, k)];
            }
        }
    }
    Ok(out)
}

/// Solve `A x = b` for a general square `A` by Gaussian elimination with
/// partial pivoting.
pub fn solve(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::InvalidInput("solve: shape mismatch".into()));
    }
    let mut m = a.clone();
    let mut x = b.clone();
    for col in 0..n {
        let mut pivot = col;
        for r in (col + 1)..n {
            if m[(r, col)].abs() > m[(pivot, col)].abs() {
                pivot = r;
            }
        }
        if m[(pivot, col)].abs() < 1e-300 {
            return Err(Error::InvalidInput("solve: singular matrix".into()));
        }
        if pivot != col {
            for c in 0..n {
                m.swap((col, c), (pivot, c));
            }
            x.swap(col, pivot);
        }
        for r in (col + 1)..n {
            let factor = m[(r, col)] / m[(col, col)];
            if factor != 0.0 {
                for c in col..n {
                    let v = m[(col, c)];
                    m[(r, c)] -= factor * v;
                }
                let v = x[col];
                x[r] -= factor * v;
            }
        }
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let v = x[k];
            x[i] -= m[(i, k)] * v;
        }
        x[i] /= m[(i, i)];
    }
    Ok(x)
}

/// Determinant by LU decomposition with partial pivoting.
pub fn det(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    assert_eq!(a.ncols(), n, "det needs a square matrix");
    let mut m = a.clone();
    let mut sign = 1.0;
    let mut out = 1.0;
    for col in 0..n {
        let mut pivot = col;
        for r in (col + 1)..n {
            if m[(r, col)].abs() > m[(pivot, col)].abs() {
                pivot = r;
            }
        }
        if m[(pivot, col)] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for c in 0..n {
                m.swap((col, c), (pivot, c));
            }
            sign = -sign;
        }
        out *= m[(col, col)];
        for r in (col + 1)..n {
            let factor = m[(r, col)] / m[(col, col)];
            if factor != 0.0 {
                for c in col..n {
                    let v = m[(col, c)];
                    m[(r, c)] -= factor * v;
                }
            }
        }
    }
    sign * out
}

/// `(Σ + Σᵀ)/2`.
pub fn symmetrize(a: &Array2<f64>) -> Array2<f64> {
    let mut out = a.clone();
    let n = a.nrows();
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = 0.5 * (a[(i, j)] + a[(j, i)]);
        }
    }
    out
}

/// Max-norm condition estimate λ_max/λ_min of a symmetric matrix.
pub fn sym_condition(a: &Array2<f64>) -> Result<f64> {
    let (vals, _) = sym_eigen(a)?;
    let n = vals.len();
    let lo = vals[0].abs().max(f64::MIN_POSITIVE);
    Ok(vals[n - 1].abs() / lo)
}
