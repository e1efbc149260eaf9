//! Compressed sparse row matrices and an envelope Cholesky factorization.
//!
//! The finite element matrices here come from structured meshes whose
//! reverse Cuthill–McKee orderings have small, nearly uniform profiles, so a
//! row-oriented skyline factorization is both simple and fast.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Symmetric sparse matrix in CSR form with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Accumulates (row, col, value) entries; duplicates are summed.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        Self { n, entries: Vec::with_capacity(cap) }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push((row, col, value));
    }

    pub fn build(self) -> CsrMatrix {
        let n = self.n;
        let mut counts = vec![0usize; n + 1];
        for &(r, _, _) in &self.entries {
            counts[r + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0usize; self.entries.len()];
        let mut vals = vec![0.0; self.entries.len()];
        let mut next = counts.clone();
        for (r, c, v) in self.entries {
            cols[next[r]] = c;
            vals[next[r]] = v;
            next[r] += 1;
        }
        // Sort each row and merge duplicates in place.
        let mut row_ptr = vec![0usize; n + 1];
        let mut out = 0usize;
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for i in 0..n {
            scratch.clear();
            scratch.extend((counts[i]..counts[i + 1]).map(|k| (cols[k], vals[k])));
            scratch.sort_unstable_by_key(|e| e.0);
            let mut last = usize::MAX;
            for &(c, v) in &scratch {
                if c == last {
                    vals[out - 1] += v;
                } else {
                    cols[out] = c;
                    vals[out] = v;
                    out += 1;
                    last = c;
                }
            }
            row_ptr[i + 1] = out;
        }
        cols.truncate(out);
        vals.truncate(out);
        CsrMatrix { n, row_ptr, cols, vals }
    }
}

impl CsrMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// y = A x
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[i] = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// xᵀ A y
    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * y[self.cols[k]];
            }
            total += x[i] * s;
        }
        total
    }

    /// Row sums (the lumped diagonal for a mass matrix).
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| (self.get(j, i) - v).abs() <= tol * v.abs().max(1.0)))
    }

    /// self + s·other, over the union of both sparsity patterns.
    pub fn add_scaled(&self, other: &CsrMatrix, s: f64) -> CsrMatrix {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let mut b = TripletBuilder::with_capacity(self.n, self.nnz() + other.nnz());
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                b.push(i, j, v);
            }
            for (j, v) in other.row(i) {
                b.push(i, j, s * v);
            }
        }
        b.build()
    }

    /// Gershgorin lower bound on the smallest eigenvalue.
    pub fn gershgorin_lower(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let mut d = 0.0;
                let mut off = 0.0;
                for (j, v) in self.row(i) {
                    if j == i {
                        d = v;
                    } else {
                        off += v.abs();
                    }
                }
                d - off
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Reverse Cuthill–McKee ordering. Returns `perm` with `perm[new] = old`.
pub fn rcm_ordering(a: &CsrMatrix) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).filter(|&(j, _)| j != i).count()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut level = vec![usize::MAX; n];
    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(a, &degree, seed, &mut level);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        let mut nbrs = Vec::new();
        while let Some(v) = queue.pop_front() {
            order.push(v);
            nbrs.clear();
            nbrs.extend(a.row(v).map(|(j, _)| j).filter(|&j| !visited[j]));
            nbrs.sort_by_key(|&j| (degree[j], j));
            for &j in &nbrs {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

/// BFS level structure from `root`; returns (last level nodes, depth).
fn bfs_levels(a: &CsrMatrix, root: usize, level: &mut [usize]) -> (Vec<usize>, usize) {
    let mut touched = vec![root];
    level[root] = 0;
    let mut frontier = vec![root];
    let mut depth = 0;
    loop {
        let mut next = Vec::new();
        for &v in &frontier {
            for (j, _) in a.row(v) {
                if level[j] == usize::MAX {
                    level[j] = depth + 1;
                    next.push(j);
                    touched.push(j);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        depth += 1;
        frontier = next;
    }
    for v in touched {
        level[v] = usize::MAX;
    }
    (frontier, depth)
}

fn pseudo_peripheral(a: &CsrMatrix, degree: &[usize], seed: usize, level: &mut [usize]) -> usize {
    let mut root = seed;
    let (mut last, mut depth) = bfs_levels(a, root, level);
    for _ in 0..8 {
        let cand = *last.iter().min_by_key(|&&v| (degree[v], v)).expect("nonempty level");
        let (l2, d2) = bfs_levels(a, cand, level);
        if d2 <= depth {
            break;
        }
        root = cand;
        last = l2;
        depth = d2;
    }
    root
}

/// Row-oriented envelope Cholesky factor L of P A Pᵀ = L Lᵀ.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factor with a fresh RCM ordering.
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        Self::with_ordering(a, rcm_ordering(a))
    }

    pub fn with_ordering(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.dim();
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            for (j, _) in a.row(old) {
                let jn = inv[j];
                if jn < first[new] {
                    first[new] = jn;
                }
            }
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut data = vec![0.0; start[n]];
        for (new, &old) in perm.iter().enumerate() {
            for (j, v) in a.row(old) {
                let jn = inv[j];
                if jn <= new {
                    data[start[new] + jn - first[new]] += v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            let (done, row_i) = data.split_at_mut(start[i]);
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let rj = &done[start[j]..start[j + 1]];
                let dot = dot4(&row_i[k0 - fi..j - fi], &rj[k0 - fj..j - fj]);
                row_i[j - fi] = (row_i[j - fi] - dot) / rj[j - fj];
            }
            let off = &row_i[..i - fi];
            let d = row_i[i - fi] - dot4(off, off);
            if !(d > 0.0) {
                return Err(Error::Factorization { row: perm[i], pivot: d });
            }
            row_i[i - fi] = d.sqrt();
        }
        Ok(Self { n, perm, first, start, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of L (the envelope size).
    pub fn envelope(&self) -> usize {
        self.data.len()
    }

    /// Solve A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        // Forward: L y = Pb.
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            let s = dot4(&row[..i - fi], &y[fi..i]);
            y[i] = (y[i] - s) / row[i - fi];
        }
        // Backward: Lᵀ x = y, column sweep over stored rows.
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            let xi = y[i] / row[i - fi];
            y[i] = xi;
            for (k, l) in row[..i - fi].iter().enumerate() {
                y[fi + k] -= l * xi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

#[inline]
fn dot4(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..n {
        s += a[k] * b[k];
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            b.push(i, i, 2.0);
            if i + 1 < n {
                b.push(i, i + 1, -1.0);
                b.push(i + 1, i, -1.0);
            }
        }
        b.build()
    }

    fn grid_laplacian(m: usize) -> CsrMatrix {
        let idx = |i: usize, j: usize| i * m + j;
        let mut b = TripletBuilder::new(m * m);
        for i in 0..m {
            for j in 0..m {
                b.push(idx(i, j), idx(i, j), 4.0);
                if i + 1 < m {
                    b.push(idx(i, j), idx(i + 1, j), -1.0);
                    b.push(idx(i + 1, j), idx(i, j), -1.0);
                }
                if j + 1 < m {
                    b.push(idx(i, j), idx(i, j + 1), -1.0);
                    b.push(idx(i, j + 1), idx(i, j), -1.0);
                }
            }
        }
        b.build()
    }

    #[test]
    fn triplets_sum_duplicates() {
        let mut b = TripletBuilder::new(2);
        b.push(0, 0, 1.0);
        b.push(0, 0, 2.0);
        b.push(1, 0, 4.0);
        let a = b.build();
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(1, 0), 4.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn cholesky_solves_grid_laplacian() {
        let a = grid_laplacian(12);
        let x_true: Vec<f64> = (0..a.dim()).map(|i| ((i * 7 % 13) as f64) - 6.0).collect();
        let b = a.mul_vec(&x_true);
        let chol = EnvelopeCholesky::new(&a).unwrap();
        let x = chol.solve(&b);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-11);
        }
    }

    #[test]
    fn rcm_is_a_permutation_with_small_envelope() {
        let a = grid_laplacian(20);
        let mut perm = rcm_ordering(&a);
        let chol = EnvelopeCholesky::with_ordering(&a, perm.clone()).unwrap();
        assert!(chol.envelope() <= 400 * 22);
        perm.sort();
        assert_eq!(perm, (0..400).collect::<Vec<_>>());
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = laplacian_1d(10).add_scaled(&laplacian_1d(10), -1.5);
        assert!(matches!(EnvelopeCholesky::new(&a), Err(Error::Factorization { .. })));
    }

    #[test]
    fn gershgorin_bounds_spectrum() {
        let a = laplacian_1d(10);
        assert!(a.gershgorin_lower() <= 2.0 - 2.0 * (std::f64::consts::PI / 11.0).cos());
        assert!(a.is_symmetric(0.0));
    }
}
