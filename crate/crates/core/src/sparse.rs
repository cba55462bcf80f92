//! Compressed-row matrices and an envelope Cholesky factorization with
//! reverse Cuthill-McKee ordering.

use std::collections::VecDeque;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Builds an `n x n` matrix from triplets, summing duplicates.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, T)>) -> Self {
        triplets.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                let tail = values.last_mut().expect("duplicate follows an entry");
                *tail += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, col_idx, values }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.row(i).find(|&(c, _)| c == j).map_or(T::zero(), |(_, v)| v)
    }

    pub fn mul_vec(&self, x: &DVector<T>) -> DVector<T> {
        DVector::from_fn(self.n, |i, _| self.row(i).fold(T::zero(), |acc, (j, v)| acc + v * x[j]))
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &DVector<T>, y: &DVector<T>) -> T {
        (0..self.n).fold(T::zero(), |acc, i| acc + x[i] * self.row(i).fold(T::zero(), |s, (j, v)| s + v * y[j]))
    }

    /// Principal submatrix on `keep` (in the given order).
    pub fn submatrix(&self, keep: &[usize]) -> Self {
        let mut position = vec![usize::MAX; self.n];
        for (k, &i) in keep.iter().enumerate() {
            position[i] = k;
        }
        let mut triplets = Vec::new();
        for (k, &i) in keep.iter().enumerate() {
            for (j, v) in self.row(i) {
                if position[j] != usize::MAX {
                    triplets.push((k, position[j], v));
                }
            }
        }
        Self::from_triplets(keep.len(), triplets)
    }

    /// Largest relative asymmetry `|a_ij - a_ji| / max|a|`.
    pub fn asymmetry(&self) -> T {
        let mut max_abs = T::zero();
        let mut max_diff = T::zero();
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                max_abs = max_abs.max(v.abs());
                max_diff = max_diff.max((v - self.get(j, i)).abs());
            }
        }
        if max_abs > T::zero() {
            max_diff / max_abs
        } else {
            T::zero()
        }
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Reverse Cuthill-McKee ordering of the symmetric sparsity graph.
pub fn reverse_cuthill_mckee<T: Scalar>(a: &CsrMatrix<T>) -> Vec<usize> {
    let n = a.dim();
    let neighbours: Vec<Vec<usize>> = (0..n).map(|i| a.row(i).map(|(j, _)| j).filter(|&j| j != i).collect()).collect();
    let degree: Vec<usize> = neighbours.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let seed = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| (degree[i], i)).expect("unvisited node");
        let start = pseudo_peripheral(seed, &neighbours, &degree);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = neighbours[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(start: usize, neighbours: &[Vec<usize>]) -> Vec<usize> {
    let mut level = vec![usize::MAX; neighbours.len()];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &w in &neighbours[v] {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                queue.push_back(w);
            }
        }
    }
    level
}

fn pseudo_peripheral(seed: usize, neighbours: &[Vec<usize>], degree: &[usize]) -> usize {
    let mut current = seed;
    let mut eccentricity = 0;
    for _ in 0..8 {
        let level = bfs_levels(current, neighbours);
        let depth = level.iter().copied().filter(|&l| l != usize::MAX).max().unwrap_or(0);
        if depth <= eccentricity {
            break;
        }
        eccentricity = depth;
        current = (0..neighbours.len()).filter(|&i| level[i] == depth).min_by_key(|&i| (degree[i], i)).expect("deepest level is non-empty");
    }
    current
}

/// Envelope (skyline) Cholesky factor `P A P^T = L L^T`.
///
/// Immutable once built; `solve` borrows it read-only so concurrent
/// right-hand sides are allowed.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky<T> {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    row_start: Vec<usize>,
    lower: Vec<T>,
}

impl<T: Scalar> EnvelopeCholesky<T> {
    pub fn factor(a: &CsrMatrix<T>) -> Result<Self> {
        let n = a.dim();
        let perm = reverse_cuthill_mckee(a);
        let mut inverse = vec![0; n];
        for (k, &i) in perm.iter().enumerate() {
            inverse[i] = k;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (k, &i) in perm.iter().enumerate() {
            for (j, _) in a.row(i) {
                first[k] = first[k].min(inverse[j]);
            }
        }
        let mut row_start = vec![0; n + 1];
        for k in 0..n {
            row_start[k + 1] = row_start[k] + (k - first[k] + 1);
        }
        let mut lower = vec![T::zero(); row_start[n]];
        for (k, &i) in perm.iter().enumerate() {
            for (j, v) in a.row(i) {
                let c = inverse[j];
                if c <= k {
                    lower[row_start[k] + c - first[k]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let lo = fi.max(fj);
                let mut sum = lower[row_start[i] + j - fi];
                for k in lo..j {
                    sum -= lower[row_start[i] + k - fi] * lower[row_start[j] + k - fj];
                }
                if j < i {
                    lower[row_start[i] + j - fi] = sum / lower[row_start[j] + j - fj];
                } else {
                    if !(sum > T::zero()) {
                        return Err(Error::Solve(format!("matrix not positive definite at pivot {i}")));
                    }
                    lower[row_start[i] + i - fi] = sum.sqrt();
                }
            }
        }
        Ok(Self { n, perm, first, row_start, lower })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of the factor envelope.
    pub fn envelope_size(&self) -> usize {
        self.lower.len()
    }

    pub fn solve(&self, b: &DVector<T>) -> DVector<T> {
        let n = self.n;
        let mut y: Vec<T> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.lower[self.row_start[i]..self.row_start[i + 1]];
            let mut sum = y[i];
            for k in fi..i {
                sum -= row[k - fi] * y[k];
            }
            y[i] = sum / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.lower[self.row_start[i]..self.row_start[i + 1]];
            y[i] /= row[i - fi];
            let yi = y[i];
            for k in fi..i {
                y[k] -= row[k - fi] * yi;
            }
        }
        let mut x = DVector::zeros(n);
        for (k, &i) in self.perm.iter().enumerate() {
            x[i] = y[k];
        }
        x
    }
}

/// Direct solve followed by iterative refinement against `a`.
pub fn solve_refined<T: Scalar>(
    a: &CsrMatrix<T>,
    factor: &EnvelopeCholesky<T>,
    b: &DVector<T>,
    rel_tol: T,
    max_refinements: usize,
) -> Result<DVector<T>> {
    let mut x = factor.solve(b);
    let b_norm = b.norm();
    if b_norm == T::zero() {
        return Ok(x);
    }
    let mut residual = b - a.mul_vec(&x);
    for _ in 0..max_refinements {
        if residual.norm() <= rel_tol * b_norm {
            break;
        }
        x += factor.solve(&residual);
        residual = b - a.mul_vec(&x);
    }
    let rel = residual.norm() / b_norm;
    if !rel.is_finite() || rel > rel_tol {
        return Err(Error::Solve(format!("relative residual {rel:e} above tolerance {rel_tol:e}")));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn laplacian_1d(n: usize) -> CsrMatrix<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn duplicates_are_summed() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 0, 4.0)]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(1, 0), 4.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn rcm_is_a_permutation() {
        let a = laplacian_1d(17);
        let mut p = reverse_cuthill_mckee(&a);
        p.sort();
        assert_eq!(p, (0..17).collect::<Vec<_>>());
    }

    #[test]
    fn rejects_indefinite() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(matches!(EnvelopeCholesky::factor(&a), Err(Error::Solve(_))));
    }

    proptest! {
        #[test]
        fn solves_shifted_laplacian(n in 2usize..40, shift in 0.0f64..2.0, seed in proptest::collection::vec(-1.0f64..1.0, 40)) {
            let mut t = Vec::new();
            for i in 0..n {
                t.push((i, i, 2.25 + shift));
                if i + 1 < n {
                    t.push((i, i + 1, -1.0));
                    t.push((i + 1, i, -1.0));
                }
                // long-range coupling to exercise the envelope
                if i + 5 < n {
                    t.push((i, i + 5, -0.1));
                    t.push((i + 5, i, -0.1));
                }
            }
            let a = CsrMatrix::from_triplets(n, t);
            let f = EnvelopeCholesky::factor(&a).unwrap();
            let b = DVector::from_fn(n, |i, _| seed[i]);
            let x = solve_refined(&a, &f, &b, 1e-12, 3).unwrap();
            let r = &b - a.mul_vec(&x);
            prop_assert!(r.norm() <= 1e-12 * b.norm().max(1e-300));
        }
    }
}
