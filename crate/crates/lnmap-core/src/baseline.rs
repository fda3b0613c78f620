//! Orthogonal linear baseline: a Procrustes fit in embedding space.
//!
//! Given paired rows `X` (source) and `Y` (target), the best orthogonal
//! map in the least-squares sense minimises `||X W^T - Y||_F` and has the
//! closed form `W = U V^T`, where `U S V^T` is the singular value
//! decomposition of `Y^T X`. The decomposition is computed with one-sided
//! Jacobi rotations, which keeps the factors orthonormal to machine
//! precision without pulling in an external linear-algebra stack.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::retrieval::TranslationMap;
use crate::tensor::{norm, DenseMatrix, NamedTensor};
use crate::Result;

/// Hard cap on Jacobi sweeps; convergence is quadratic, so hitting this
/// means the input was pathological.
const MAX_SWEEPS: usize = 60;

/// Relative off-diagonal threshold below which a column pair counts as
/// already orthogonal.
const SWEEP_EPS: f64 = 1e-15;

/// Singular value decomposition `A = U diag(sigma) V^T` of an `m x n`
/// matrix with `m >= n`, via one-sided Jacobi rotations on the columns.
///
/// `U` is `m x n` with orthonormal columns (zero singular directions are
/// completed by Gram-Schmidt), `V` is `n x n` orthogonal, and `sigma` is
/// non-negative and sorted descending.
pub fn jacobi_svd(a: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>, DenseMatrix)> {
    let (m, n) = a.shape();
    if n == 0 || m < n {
        return Err(Error::InvalidDimension {
            what: "jacobi_svd expects rows >= cols >= 1, got cols",
            value: n,
        });
    }
    if !a.is_finite() {
        return Err(Error::NonFinite {
            what: "matrix entry",
            context: String::from("jacobi_svd input"),
        });
    }

    let mut u = a.clone();
    let mut v = DenseMatrix::identity(n);
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let (app, aqq, apq) = column_gram(&u, p, q);
                if apq.abs() <= SWEEP_EPS * libm::sqrt(app * aqq) || app == 0.0 || aqq == 0.0 {
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + libm::sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + libm::sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = t * c;
                rotate_columns(&mut u, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
                rotated = true;
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            what: "jacobi svd sweeps",
            iterations: MAX_SWEEPS,
        });
    }

    // Column norms are the singular values; sort them descending and
    // permute both factors to match.
    let mut sigma: Vec<f64> = (0..n).map(|j| column_norm(&u, j)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]).then(i.cmp(&j)));
    u = permute_columns(&u, &order);
    v = permute_columns(&v, &order);
    sigma = order.iter().map(|&j| sigma[j]).collect();

    // Normalise the non-degenerate columns of U; rebuild the rest so the
    // factor stays orthonormal even for rank-deficient input.
    let cutoff = sigma[0] * 1e-13;
    let mut degenerate = Vec::new();
    for (j, s) in sigma.iter_mut().enumerate() {
        if *s > cutoff {
            scale_column(&mut u, j, 1.0 / *s);
        } else {
            *s = 0.0;
            degenerate.push(j);
        }
    }
    for j in degenerate {
        complete_column(&mut u, j)?;
    }
    Ok((u, sigma, v))
}

fn column_gram(m: &DenseMatrix, p: usize, q: usize) -> (f64, f64, f64) {
    let mut app = 0.0;
    let mut aqq = 0.0;
    let mut apq = 0.0;
    for i in 0..m.rows() {
        let up = m.get(i, p);
        let uq = m.get(i, q);
        app += up * up;
        aqq += uq * uq;
        apq += up * uq;
    }
    (app, aqq, apq)
}

fn rotate_columns(m: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..m.rows() {
        let up = m.get(i, p);
        let uq = m.get(i, q);
        m.set(i, p, c * up - s * uq);
        m.set(i, q, s * up + c * uq);
    }
}

fn column_norm(m: &DenseMatrix, j: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..m.rows() {
        let v = m.get(i, j);
        sum += v * v;
    }
    libm::sqrt(sum)
}

fn scale_column(m: &mut DenseMatrix, j: usize, factor: f64) {
    for i in 0..m.rows() {
        m.set(i, j, m.get(i, j) * factor);
    }
}

fn permute_columns(m: &DenseMatrix, order: &[usize]) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(m.rows(), order.len());
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..m.rows() {
            out.set(i, new_j, m.get(i, old_j));
        }
    }
    out
}

/// Replaces column `j` with a unit vector orthogonal to every other
/// column, found by Gram-Schmidt over the standard basis.
fn complete_column(u: &mut DenseMatrix, j: usize) -> Result<()> {
    let (m, n) = u.shape();
    for basis in 0..m {
        let mut cand = vec![0.0; m];
        cand[basis] = 1.0;
        for other in 0..n {
            if other == j {
                continue;
            }
            let proj: f64 = (0..m).map(|i| cand[i] * u.get(i, other)).sum();
            for (i, c) in cand.iter_mut().enumerate() {
                *c -= proj * u.get(i, other);
            }
        }
        let len = norm(&cand);
        if len > 0.5 {
            for (i, c) in cand.iter().enumerate() {
                u.set(i, j, c / len);
            }
            return Ok(());
        }
    }
    Err(Error::NoConvergence {
        what: "orthonormal basis completion",
        iterations: m,
    })
}

/// An orthogonal map `W` applied to source rows as `x W^T`; target rows
/// pass through unchanged, so both sides live in target coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMap {
    w: DenseMatrix,
}

impl OrthogonalMap {
    /// Wraps an explicit matrix, insisting it is square and orthogonal to
    /// a loose tolerance (guards against loading a corrupted model).
    pub fn from_matrix(w: DenseMatrix) -> Result<Self> {
        if w.rows() != w.cols() || w.rows() == 0 {
            return Err(Error::ParameterMismatch {
                name: String::from("w"),
                reason: String::from("orthogonal map matrix must be square and non-empty"),
            });
        }
        let gram = w.transpose_mul(&w)?;
        for i in 0..gram.rows() {
            for j in 0..gram.cols() {
                let expect = if i == j { 1.0 } else { 0.0 };
                if (gram.get(i, j) - expect).abs() > 1e-6 {
                    return Err(Error::ParameterMismatch {
                        name: String::from("w"),
                        reason: String::from("matrix is not orthogonal"),
                    });
                }
            }
        }
        Ok(OrthogonalMap { w })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.w
    }

    pub fn dim(&self) -> usize {
        self.w.rows()
    }

    /// Mean squared row distance `mean_i ||x_i W^T - y_i||^2`, the
    /// quantity the Procrustes fit minimises.
    pub fn residual(&self, src_rows: &DenseMatrix, tgt_rows: &DenseMatrix) -> Result<f64> {
        let mapped = self.map_source(src_rows)?;
        Ok(mapped.squared_distance(tgt_rows)? / mapped.rows() as f64)
    }

    /// Serialisable view of the map for the persistence layer.
    pub fn to_tensors(&self) -> Vec<NamedTensor> {
        vec![NamedTensor {
            name: String::from("procrustes.W"),
            dims: vec![self.w.rows(), self.w.cols()],
            values: self.w.data().to_vec(),
        }]
    }

    pub fn from_tensors(tensors: &[NamedTensor]) -> Result<Self> {
        let tensor = match tensors {
            [t] if t.name == "procrustes.W" => t,
            _ => {
                return Err(Error::ParameterMismatch {
                    name: String::from("procrustes.W"),
                    reason: String::from("expected exactly one tensor named procrustes.W"),
                })
            }
        };
        if tensor.dims.len() != 2 {
            return Err(Error::ParameterMismatch {
                name: String::from("w"),
                reason: String::from("expected a rank-2 tensor"),
            });
        }
        let w = DenseMatrix::from_vec(tensor.dims[0], tensor.dims[1], tensor.values.clone())?;
        OrthogonalMap::from_matrix(w)
    }
}

impl TranslationMap for OrthogonalMap {
    fn map_source(&self, src_rows: &DenseMatrix) -> Result<DenseMatrix> {
        src_rows.mul_transpose(&self.w)
    }

    fn embed_target(&self, tgt_rows: &DenseMatrix) -> Result<DenseMatrix> {
        Ok(tgt_rows.clone())
    }
}

/// Solves the orthogonal Procrustes problem for paired rows: the returned
/// map minimises `||X W^T - Y||_F` over orthogonal `W`.
pub fn procrustes_fit(src_rows: &DenseMatrix, tgt_rows: &DenseMatrix) -> Result<OrthogonalMap> {
    if src_rows.shape() != tgt_rows.shape() {
        return Err(Error::ShapeMismatch {
            op: "procrustes_fit",
            left: src_rows.shape(),
            right: tgt_rows.shape(),
        });
    }
    if src_rows.rows() == 0 {
        return Err(Error::EmptyDictionary {
            context: "procrustes_fit pairs",
        });
    }
    let cross = tgt_rows.transpose_mul(src_rows)?;
    let (u, _sigma, v) = jacobi_svd(&cross)?;
    let w = u.mul_transpose(&v)?;
    OrthogonalMap::from_matrix(w)
}
