//! Pairwise kernel sums.
//!
//! Every term lies in `[0, 1]`, so terms are accumulated in 2⁻⁶² fixed point
//! inside a `u128`. Integer addition is associative, which makes the sums
//! independent of row order and of how rows are split across threads.

use std::iter::Sum;
use std::ops::{Add, AddAssign};

use rayon::prelude::*;

use crate::numerics::WeightKernel;
use crate::samplers::Sample;

/// Rows above which the outer loop is split across the rayon pool.
const PARALLEL_ROWS: usize = 256;

pub(crate) const FIXED_SCALE: f64 = (1u64 << 62) as f64;

/// Order-independent accumulator for terms in `[0, 1]`.
///
/// Each term is truncated to a multiple of 2⁻⁶² (error below 2.2e-19 per
/// term); the accumulator never overflows for fewer than 2⁶⁶ terms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct FixedSum(u128);

impl FixedSum {
    #[inline]
    pub fn push(&mut self, term: f64) {
        debug_assert!((0.0..=1.0).contains(&term), "term {term} outside [0, 1]");
        self.0 += (term * FIXED_SCALE) as u64 as u128;
    }

    pub fn from_terms(terms: impl IntoIterator<Item = f64>) -> Self {
        let mut s = FixedSum::default();
        terms.into_iter().for_each(|t| s.push(t));
        s
    }

    pub fn raw(self) -> u128 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / FIXED_SCALE
    }
}

impl Add for FixedSum {
    type Output = FixedSum;

    fn add(self, rhs: FixedSum) -> FixedSum {
        FixedSum(self.0 + rhs.0)
    }
}

impl AddAssign for FixedSum {
    fn add_assign(&mut self, rhs: FixedSum) {
        self.0 += rhs.0;
    }
}

impl Sum for FixedSum {
    fn sum<I: Iterator<Item = FixedSum>>(iter: I) -> FixedSum {
        iter.fold(FixedSum::default(), Add::add)
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub(crate) fn squared_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

fn over_rows<F>(n: usize, row: F) -> FixedSum
where
    F: Fn(usize) -> FixedSum + Sync + Send,
{
    if n >= PARALLEL_ROWS {
        (0..n).into_par_iter().map(row).sum()
    } else {
        (0..n).map(row).sum()
    }
}

/// `Σ_{j<k} f(‖x_j − x_k‖²)`.
pub fn within_sum_by<F>(x: &Sample, f: F) -> FixedSum
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    let n = x.n();
    over_rows(n, |j| {
        let xj = x.row(j);
        let mut acc = FixedSum::default();
        for k in (j + 1)..n {
            acc.push(f(squared_distance(xj, x.row(k))));
        }
        acc
    })
}

/// `Σ_{j,k} f(‖x_j − y_k‖²)`.
pub fn cross_sum_by<F>(x: &Sample, y: &Sample, f: F) -> FixedSum
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    over_rows(x.n(), |j| {
        let xj = x.row(j);
        let mut acc = FixedSum::default();
        for yk in y.rows() {
            acc.push(f(squared_distance(xj, yk)));
        }
        acc
    })
}

/// `Σ_j f(‖x_j‖²)`.
pub fn point_sum_by<F>(x: &Sample, f: F) -> FixedSum
where
    F: Fn(f64) -> f64,
{
    FixedSum::from_terms(x.rows().map(|r| f(squared_norm(r))))
}

/// `Σ_{j<k} Ψ(‖x_j − x_k‖²)`.
pub fn within_sum(x: &Sample, kernel: &WeightKernel) -> FixedSum {
    match *kernel {
        WeightKernel::Gaussian => within_sum_by(x, |d| (-0.5 * d).exp()),
        k => within_sum_by(x, move |d| k.psi(d)),
    }
}

/// `Σ_{j,k} Ψ(‖x_j − y_k‖²)`.
pub fn cross_sum(x: &Sample, y: &Sample, kernel: &WeightKernel) -> FixedSum {
    match *kernel {
        WeightKernel::Gaussian => cross_sum_by(x, y, |d| (-0.5 * d).exp()),
        k => cross_sum_by(x, y, move |d| k.psi(d)),
    }
}
