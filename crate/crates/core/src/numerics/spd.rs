use crate::error::{Error, Result};

use super::Matrix;

/// Sweep cap for the cyclic Jacobi iteration.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Off-diagonal Frobenius mass, relative to ‖A‖_F, at which Jacobi stops.
const JACOBI_TOL: f64 = 1e-14;

/// Smallest admissible eigenvalue, relative to max(λ_max, 1), for inversion.
pub const NEAR_SINGULAR: f64 = 1e-12;

/// Inputs whose asymmetry exceeds this (relative to the largest entry) are
/// rejected rather than symmetrized.
const SYMMETRY_TOL: f64 = 1e-8;

/// Symmetric positive-definite matrix together with its eigendecomposition.
///
/// Construction averages `A` and `Aᵀ`, diagonalizes once with cyclic Jacobi
/// and rejects matrices with a non-positive eigenvalue. Values are immutable
/// afterwards, so square roots and inverse square roots reuse the stored
/// spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SymPosDef {
    dim: usize,
    entries: Matrix,
    eigenvalues: Vec<f64>,
    eigenvectors: Matrix,
}

impl SymPosDef {
    /// Builds from a row-major `dim × dim` slice of entries.
    pub fn new(dim: usize, entries: &[f64]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::shape("matrix dimension must be at least 1"));
        }
        let m = Matrix::from_row_major(dim, dim, entries.to_vec())?;
        Self::from_matrix(&m)
    }

    pub fn from_matrix(m: &Matrix) -> Result<Self> {
        let dim = m.rows();
        if dim == 0 || m.cols() != dim {
            return Err(Error::shape(format!(
                "expected a non-empty square matrix, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        if m.as_slice().iter().any(|a| !a.is_finite()) {
            return Err(Error::domain("matrix has non-finite entries"));
        }
        let scale = m.max_abs();
        let mut sym = m.clone();
        for i in 0..dim {
            for j in (i + 1)..dim {
                let (a, b) = (m[(i, j)], m[(j, i)]);
                if (a - b).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::domain(format!(
                        "matrix is not symmetric: entry ({i},{j}) = {a} vs ({j},{i}) = {b}"
                    )));
                }
                let avg = 0.5 * (a + b);
                sym[(i, j)] = avg;
                sym[(j, i)] = avg;
            }
        }
        let (eigenvalues, eigenvectors) = jacobi_eigen(&sym)?;
        let min = eigenvalues[dim - 1];
        if min <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: min,
            });
        }
        Ok(SymPosDef {
            dim,
            entries: sym,
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn identity(dim: usize) -> Self {
        SymPosDef {
            dim,
            entries: Matrix::identity(dim),
            eigenvalues: vec![1.0; dim],
            eigenvectors: Matrix::identity(dim),
        }
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Self::from_matrix(&Matrix::from_diagonal(diag))
    }

    /// Unit diagonal with every off-diagonal entry equal to `rho`.
    pub fn equicorrelation(dim: usize, rho: f64) -> Result<Self> {
        let mut m = Matrix::identity(dim);
        for i in 0..dim {
            for j in 0..dim {
                if i != j {
                    m[(i, j)] = rho;
                }
            }
        }
        Self::from_matrix(&m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &Matrix {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthogonal matrix whose columns are the eigenvectors.
    pub fn eigenvectors(&self) -> &Matrix {
        &self.eigenvectors
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.dim - 1]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn is_near_singular(&self) -> bool {
        self.min_eigenvalue() < NEAR_SINGULAR * self.max_eigenvalue().max(1.0)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::domain(format!(
                "scale factor must be positive, got {c}"
            )));
        }
        Ok(SymPosDef {
            dim: self.dim,
            entries: self.entries.scale(c),
            eigenvalues: self.eigenvalues.iter().map(|l| l * c).collect(),
            eigenvectors: self.eigenvectors.clone(),
        })
    }

    /// The unique symmetric positive-definite square root.
    pub fn sqrt(&self) -> SymPosDef {
        self.spectral_map(f64::sqrt)
    }

    /// The unique symmetric positive-definite inverse square root.
    pub fn inv_sqrt(&self) -> Result<SymPosDef> {
        if self.is_near_singular() {
            return Err(Error::NearSingular {
                min_eigenvalue: self.min_eigenvalue(),
            });
        }
        Ok(self.spectral_map(|l| 1.0 / l.sqrt()))
    }

    pub fn inverse(&self) -> Result<SymPosDef> {
        if self.is_near_singular() {
            return Err(Error::NearSingular {
                min_eigenvalue: self.min_eigenvalue(),
            });
        }
        Ok(self.spectral_map(|l| 1.0 / l))
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.entries.mul_vec(v)
    }

    /// Q f(Λ) Qᵀ, assembled from the upper triangle so the result is exactly
    /// symmetric.
    fn spectral_map(&self, f: impl Fn(f64) -> f64) -> SymPosDef {
        let p = self.dim;
        let q = &self.eigenvectors;
        let vals: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut m = Matrix::zeros(p, p);
        for i in 0..p {
            for j in i..p {
                let s: f64 = (0..p).map(|k| q[(i, k)] * vals[k] * q[(j, k)]).sum();
                m[(i, j)] = s;
                m[(j, i)] = s;
            }
        }
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
        let mut vecs = Matrix::zeros(p, p);
        for (dst, &src) in order.iter().enumerate() {
            for i in 0..p {
                vecs[(i, dst)] = q[(i, src)];
            }
        }
        SymPosDef {
            dim: p,
            entries: m,
            eigenvalues: order.iter().map(|&k| vals[k]).collect(),
            eigenvectors: vecs,
        }
    }
}

/// Eigenvalues (descending) and orthogonal eigenvectors of `a`.
pub fn sym_eigen(a: &SymPosDef) -> (Vec<f64>, Matrix) {
    (a.eigenvalues.clone(), a.eigenvectors.clone())
}

pub fn inv_sqrt(a: &SymPosDef) -> Result<SymPosDef> {
    a.inv_sqrt()
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Returns eigenvalues sorted in descending order and the matching
/// eigenvectors as columns.
pub(crate) fn jacobi_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = a.rows();
    let mut a = a.clone();
    let mut v = Matrix::identity(n);
    let norm = a.frobenius_norm();
    let mut converged = norm == 0.0;

    for _ in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        let off = off_diagonal_norm(&a);
        if off <= JACOBI_TOL * norm {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > JACOBI_TOL * norm {
        return Err(Error::NonConvergence {
            iterations: JACOBI_MAX_SWEEPS,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, dst)] = v[(k, src)];
        }
    }
    Ok((values, vectors))
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
