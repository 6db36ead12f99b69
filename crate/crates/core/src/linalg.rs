//! Small dense and sparse matrix kernels used by the sheaf checkers and the cohomology code.
//!
//! Everything here is written for the modest sizes that finite sheaf models produce
//! (tens to a few thousand rows). Ranks use Gaussian elimination with complete pivoting and a
//! tolerance relative to the largest entry, so rescaling a matrix never changes its rank.

use alloc::vec;
use alloc::vec::Vec;

/// Relative factor applied to `max|a_ij| * max(rows, cols)` to obtain the rank tolerance.
pub const RANK_RELATIVE_TOLERANCE: f64 = 1e-9;

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Identity matrix of size `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row slices. Every row must have `cols` entries.
    ///
    /// # Panics
    /// Panics if a row has the wrong length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], cols: usize) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "row length does not match column count");
            data.extend_from_slice(r);
        }
        Self { rows: rows.len(), cols, data }
    }

    /// Builds a matrix from a flat row-major buffer.
    ///
    /// # Panics
    /// Panics if the buffer length is not `rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "buffer length does not match shape");
        Self { rows, cols, data }
    }

    /// Builds a matrix whose columns are the given vectors, each of length `rows`.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows, "column length does not match row count");
            for (i, v) in c.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row `i` as a slice.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Column `j` copied into a vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Row-major storage.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Largest absolute entry, 0 for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Transposed copy.
    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Matrix product `self * rhs`.
    ///
    /// # Panics
    /// Panics on a shape mismatch.
    pub fn mul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "shape mismatch in matrix product");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = rhs.row(k);
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    ///
    /// # Panics
    /// Panics if `x.len() != cols`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "shape mismatch in matrix-vector product");
        (0..self.rows).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    /// Entrywise scaling.
    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    /// Stacks matrices vertically. All must share a column count.
    pub fn vstack(cols: usize, parts: &[Matrix]) -> Matrix {
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            assert_eq!(p.cols, cols, "column mismatch in vstack");
            data.extend_from_slice(&p.data);
            rows += p.rows;
        }
        Matrix { rows, cols, data }
    }

    /// Places matrices side by side. All must share a row count.
    pub fn hstack(rows: usize, parts: &[Matrix]) -> Matrix {
        let cols: usize = parts.iter().map(|p| p.cols).sum();
        let mut out = Matrix::zeros(rows, cols);
        let mut off = 0;
        for p in parts {
            assert_eq!(p.rows, rows, "row mismatch in hstack");
            out.set_block(0, off, p);
            off += p.cols;
        }
        out
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Matrix) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    /// Sub-matrix of rows `r0..r0+rows` and columns `c0..c0+cols`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix {
        let mut out = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out[(i, j)] = self[(r0 + i, c0 + j)];
            }
        }
        out
    }

    /// Rank tolerance used by [`Matrix::rank`].
    pub fn rank_tolerance(&self) -> f64 {
        RANK_RELATIVE_TOLERANCE * self.max_abs() * self.rows.max(self.cols) as f64
    }

    /// Numerical rank by Gaussian elimination with complete pivoting.
    pub fn rank(&self) -> usize {
        let tol = self.rank_tolerance();
        if tol == 0.0 {
            return 0;
        }
        let mut a = self.clone();
        let (m, n) = (a.rows, a.cols);
        let mut rank = 0;
        while rank < m.min(n) {
            let (mut pi, mut pj, mut best) = (rank, rank, 0.0);
            for i in rank..m {
                for j in rank..n {
                    let v = a[(i, j)].abs();
                    if v > best {
                        best = v;
                        pi = i;
                        pj = j;
                    }
                }
            }
            if best <= tol {
                break;
            }
            a.swap_rows(rank, pi);
            a.swap_cols(rank, pj);
            let p = a[(rank, rank)];
            for i in rank + 1..m {
                let f = a[(i, rank)] / p;
                if f != 0.0 {
                    for j in rank..n {
                        let v = a[(rank, j)];
                        a[(i, j)] -= f * v;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    /// Orthonormal basis of the null space, one basis vector per column.
    ///
    /// The basis comes from the reduced row echelon form (same relative tolerance as
    /// [`Matrix::rank`]) followed by modified Gram-Schmidt.
    pub fn nullspace(&self) -> Matrix {
        let n = self.cols;
        let tol = self.rank_tolerance();
        let mut a = self.clone();
        let mut pivots: Vec<usize> = Vec::new();
        let mut r = 0;
        if tol > 0.0 {
            for c in 0..n {
                if r == a.rows {
                    break;
                }
                let (mut pi, mut best) = (r, 0.0);
                for i in r..a.rows {
                    if a[(i, c)].abs() > best {
                        best = a[(i, c)].abs();
                        pi = i;
                    }
                }
                if best <= tol {
                    for i in r..a.rows {
                        a[(i, c)] = 0.0;
                    }
                    continue;
                }
                a.swap_rows(r, pi);
                let p = a[(r, c)];
                for j in c..n {
                    a[(r, j)] /= p;
                }
                for i in 0..a.rows {
                    if i != r {
                        let f = a[(i, c)];
                        if f != 0.0 {
                            for j in c..n {
                                let v = a[(r, j)];
                                a[(i, j)] -= f * v;
                            }
                        }
                    }
                }
                pivots.push(c);
                r += 1;
            }
        }
        let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(free.len());
        for &f in &free {
            let mut v = vec![0.0; n];
            v[f] = 1.0;
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[(row, f)];
            }
            basis.push(v);
        }
        let basis = orthonormalize(basis);
        Matrix::from_columns(n, &basis)
    }

    /// Spectral norm `||A||_2`, computed exactly from the eigenvalues of `AᵀA`.
    pub fn operator_norm(&self) -> f64 {
        if self.rows == 0 || self.cols == 0 {
            return 0.0;
        }
        let ata = if self.cols <= self.rows { self.transpose().mul(self) } else { self.mul(&self.transpose()) };
        let ev = symmetric_eigenvalues(&ata);
        libm::sqrt(ev.iter().fold(0.0f64, |m, v| m.max(*v)).max(0.0))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Modified Gram-Schmidt with one reorthogonalization pass. Vectors that collapse to
/// (numerically) zero are dropped.
pub fn orthonormalize(vectors: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for mut v in vectors {
        let original = norm(&v);
        if original == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in &out {
                let d = dot(q, &v);
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= d * y;
                }
            }
        }
        let n = norm(&v);
        if n <= 1e-12 * original {
            continue;
        }
        for x in &mut v {
            *x /= n;
        }
        out.push(v);
    }
    out
}

/// Dot product of equal-length slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(a: &Matrix) -> Vec<f64> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "matrix must be square");
    let mut m = a.clone();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        let scale: f64 = (0..n).map(|i| m[(i, i)] * m[(i, i)]).sum::<f64>() + off;
        if off <= 1e-30 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
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
            }
        }
    }
    (0..n).map(|i| m[(i, i)]).collect()
}

/// Solves `min ||A x - b||` through lightly regularized normal equations.
///
/// Rank-deficient systems return one of the minimizers (the regularization picks a
/// small-norm one). Intended for seeding iterative solvers, not as a precise solver.
pub fn least_squares(a: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = a.cols();
    let at = a.transpose();
    let mut ata = at.mul(a);
    let atb = at.mul_vec(b);
    let trace: f64 = (0..n).map(|i| ata[(i, i)]).sum();
    let lambda = 1e-12 * trace.max(1.0);
    for i in 0..n {
        ata[(i, i)] += lambda;
    }
    solve(ata, atb).unwrap_or_else(|| vec![0.0; n])
}

/// Solves the square system `A x = b` by partial-pivot elimination; `None` if singular.
pub fn solve(mut a: Matrix, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = a.rows();
    for c in 0..n {
        let (mut pi, mut best) = (c, 0.0);
        for i in c..n {
            if a[(i, c)].abs() > best {
                best = a[(i, c)].abs();
                pi = i;
            }
        }
        if best == 0.0 {
            return None;
        }
        a.swap_rows(c, pi);
        b.swap(c, pi);
        for i in c + 1..n {
            let f = a[(i, c)] / a[(c, c)];
            if f != 0.0 {
                for j in c..n {
                    let v = a[(c, j)];
                    a[(i, j)] -= f * v;
                }
                b[i] -= f * b[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[(i, j)] * x[j]).sum();
        x[i] = (b[i] - s) / a[(i, i)];
    }
    Some(x)
}

/// Compressed sparse column matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and zeros dropped.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|t| (t.1, t.0));
        let mut col_ptr = vec![0usize; cols + 1];
        let mut row_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < rows && c < cols, "triplet out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().expect("previous entry exists") += v;
                continue;
            }
            row_idx.push(r);
            values.push(v);
            col_ptr[c + 1] += 1;
            last = Some((r, c));
        }
        for c in 0..cols {
            col_ptr[c + 1] += col_ptr[c];
        }
        let mut m = Self { rows, cols, col_ptr, row_idx, values };
        m.drop_zeros();
        m
    }

    fn drop_zeros(&mut self) {
        if self.values.iter().all(|v| *v != 0.0) {
            return;
        }
        let mut col_ptr = vec![0usize; self.cols + 1];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for c in 0..self.cols {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                if self.values[k] != 0.0 {
                    row_idx.push(self.row_idx[k]);
                    values.push(self.values[k]);
                }
            }
            col_ptr[c + 1] = values.len();
        }
        self.col_ptr = col_ptr;
        self.row_idx = row_idx;
        self.values = values;
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored `(row, value)` entries of column `c`.
    pub fn column(&self, c: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.col_ptr[c]..self.col_ptr[c + 1]).map(move |k| (self.row_idx[k], self.values[k]))
    }

    /// All stored entries as `(row, col, value)`.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for c in 0..self.cols {
            out.extend(self.column(c).map(|(r, v)| (r, c, v)));
        }
        out
    }

    /// Entry lookup (linear scan of one column).
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.column(c).find(|(i, _)| *i == r).map_or(0.0, |(_, v)| v)
    }

    /// Sum of each column.
    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.cols).map(|c| self.column(c).map(|(_, v)| v).sum()).collect()
    }

    /// Largest absolute stored entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Smallest stored entry, or 0 when empty.
    pub fn min_value(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.min(*v))
    }

    /// Sparse product `self * rhs`.
    pub fn mul(&self, rhs: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.cols, rhs.rows, "shape mismatch in sparse product");
        let mut acc = vec![0.0; self.rows];
        let mut mark = vec![usize::MAX; self.rows];
        let mut touched = Vec::new();
        let mut col_ptr = vec![0usize; rhs.cols + 1];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for c in 0..rhs.cols {
            touched.clear();
            for (k, b) in rhs.column(c) {
                for (r, a) in self.column(k) {
                    if mark[r] != c {
                        mark[r] = c;
                        acc[r] = 0.0;
                        touched.push(r);
                    }
                    acc[r] += a * b;
                }
            }
            touched.sort_unstable();
            for &r in &touched {
                if acc[r] != 0.0 {
                    row_idx.push(r);
                    values.push(acc[r]);
                }
            }
            col_ptr[c + 1] = values.len();
        }
        SparseMatrix { rows: self.rows, cols: rhs.cols, col_ptr, row_idx, values }
    }

    /// Sparse matrix times dense vector.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "shape mismatch in sparse matrix-vector product");
        let mut y = vec![0.0; self.rows];
        for (c, xc) in x.iter().enumerate() {
            for (r, v) in self.column(c) {
                y[r] += v * xc;
            }
        }
        y
    }

    /// Dense copy.
    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.rows, self.cols);
        for c in 0..self.cols {
            for (r, v) in self.column(c) {
                m[(r, c)] = v;
            }
        }
        m
    }

    /// Sparse copy of a dense matrix.
    pub fn from_dense(m: &Matrix) -> Self {
        let mut t = Vec::new();
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                if m[(i, j)] != 0.0 {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.rows(), m.cols(), t)
    }
}
