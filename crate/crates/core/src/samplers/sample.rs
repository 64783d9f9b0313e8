use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// An `n × p` block of observations, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl Sample {
    /// Wraps row-major data; every entry must be finite.
    pub fn new(n: usize, p: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::shape(format!(
                "a sample needs n ≥ 1 and p ≥ 1, got {n}x{p}"
            )));
        }
        if data.len() != n * p {
            return Err(Error::shape(format!(
                "expected {} values for a {n}x{p} sample, got {}",
                n * p,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "non-finite value at row {}, column {}",
                pos / p + 1,
                pos % p + 1
            )));
        }
        Ok(Sample { n, p, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::shape(format!(
                "row {} has {} values, expected {p}",
                i + 1,
                rows[i].len()
            )));
        }
        Sample::new(rows.len(), p, rows.iter().flatten().copied().collect())
    }

    /// Internal constructor for data produced by finite arithmetic on finite
    /// inputs.
    pub(crate) fn from_raw(n: usize, p: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * p);
        Sample { n, p, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.p)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// Rows `x + b`.
    pub fn translate(&self, b: &[f64]) -> Result<Sample> {
        self.check_dim(b.len())?;
        let data = self
            .rows()
            .flat_map(|r| r.iter().zip(b).map(|(x, s)| x + s))
            .collect();
        Ok(Sample::from_raw(self.n, self.p, data))
    }

    /// Rows `A x + b`.
    pub fn affine(&self, a: &Matrix, b: &[f64]) -> Result<Sample> {
        if a.rows() != self.p || a.cols() != self.p {
            return Err(Error::shape(format!(
                "expected a {0}x{0} matrix, got {1}x{2}",
                self.p,
                a.rows(),
                a.cols()
            )));
        }
        self.check_dim(b.len())?;
        let mut data = vec![0.0; self.data.len()];
        for (src, dst) in self.rows().zip(data.chunks_exact_mut(self.p)) {
            a.mul_vec_into(src, dst);
            for (d, s) in dst.iter_mut().zip(b) {
                *d += s;
            }
        }
        Sample::new(self.n, self.p, data)
    }

    /// Rows `A x`.
    pub fn linear_map(&self, a: &Matrix) -> Result<Sample> {
        let mut data = vec![0.0; self.data.len()];
        if a.rows() != self.p || a.cols() != self.p {
            return Err(Error::shape("linear map dimension mismatch"));
        }
        for (src, dst) in self.rows().zip(data.chunks_exact_mut(self.p)) {
            a.mul_vec_into(src, dst);
        }
        Sample::new(self.n, self.p, data)
    }

    /// Sample mean vector.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.p];
        for r in self.rows() {
            for (acc, v) in m.iter_mut().zip(r) {
                *acc += v;
            }
        }
        let inv = 1.0 / self.n as f64;
        m.iter_mut().for_each(|v| *v *= inv);
        m
    }

    /// Sample covariance with divisor `n`.
    pub fn covariance(&self) -> Matrix {
        let mean = self.mean();
        let p = self.p;
        let mut s = Matrix::zeros(p, p);
        let mut centered = vec![0.0; p];
        for r in self.rows() {
            for (c, (x, m)) in centered.iter_mut().zip(r.iter().zip(&mean)) {
                *c = x - m;
            }
            for i in 0..p {
                for j in i..p {
                    s[(i, j)] += centered[i] * centered[j];
                }
            }
        }
        let inv = 1.0 / self.n as f64;
        for i in 0..p {
            for j in i..p {
                let v = s[(i, j)] * inv;
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        s
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.p {
            return Err(Error::shape(format!(
                "vector of length {len} does not match dimension {}",
                self.p
            )));
        }
        Ok(())
    }
}
