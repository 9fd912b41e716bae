use super::Matrix;
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-9;
const OFF_DIAG_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Default eigenvalue floor for [`sym_inv_sqrt`].
pub const DEFAULT_EIG_FLOOR: f64 = 1e-10;

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEig {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: Matrix,
}

fn symmetrized(s: &Matrix) -> Result<Matrix> {
    if !s.is_square() {
        return Err(Error::shape(format!("expected square matrix, got {}x{}", s.rows(), s.cols())));
    }
    let n = s.rows();
    let scale = s.max_abs().max(1.0);
    let mut out = s.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (s[(i, j)], s[(j, i)]);
            if (a - b).abs() > SYMMETRY_TOL * scale {
                return Err(Error::domain(format!(
                    "matrix not symmetric at ({i},{j}): {a} vs {b}"
                )));
            }
            let m = 0.5 * (a + b);
            out[(i, j)] = m;
            out[(j, i)] = m;
        }
    }
    Ok(out)
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi eigen-decomposition. The input is symmetrized as
/// `(S + S^T) / 2`; sweeps stop once the off-diagonal Frobenius norm drops
/// below `1e-12 * ||S||_F`.
pub fn sym_eig(s: &Matrix) -> Result<SymEig> {
    let mut a = symmetrized(s)?;
    let n = a.rows();
    let mut v = Matrix::identity(n);
    let target = OFF_DIAG_TOL * a.frobenius_norm();

    let mut sweeps = 0;
    while off_diagonal_norm(&a) > target {
        if sweeps == MAX_SWEEPS {
            return Err(Error::Invariant(format!(
                "jacobi did not converge in {MAX_SWEEPS} sweeps"
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                rotate(&mut a, &mut v, p, q, c, sn);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&k| a[(k, k)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, dst)] = v[(i, src)];
        }
    }
    Ok(SymEig { values, vectors })
}

// A <- J^T A J, V <- V J for the (p, q) plane rotation.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// `V diag(f(lambda)) V^T`, computed on the upper triangle and mirrored so
/// the result is exactly symmetric.
fn spectral_map(eig: &SymEig, f: impl Fn(f64) -> f64) -> Matrix {
    let n = eig.values.len();
    let d: Vec<f64> = eig.values.iter().map(|&l| f(l)).collect();
    let v = &eig.vectors;
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += v[(i, k)] * d[k] * v[(j, k)];
            }
            out[(i, j)] = acc;
            out[(j, i)] = acc;
        }
    }
    out
}

/// Inverse matrix square root with eigenvalues floored at `eps`.
pub fn sym_inv_sqrt(s: &Matrix, eps: f64) -> Result<Matrix> {
    if !(eps > 0.0) {
        return Err(Error::domain(format!("eigenvalue floor must be > 0, got {eps}")));
    }
    let eig = sym_eig(s)?;
    Ok(spectral_map(&eig, |l| 1.0 / l.max(eps).sqrt()))
}
