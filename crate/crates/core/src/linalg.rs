//! Dense symmetric eigenvalues, CSR matrices, banded LU and restarted GMRES.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinearError {
    #[error("zero pivot in row {0}")]
    Singular(usize),
    #[error("GMRES stopped after {iterations} iterations with relative residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("dimension mismatch: matrix has {expected} rows, vector has {got}")]
    Dimension { expected: usize, got: usize },
}

/// Eigenvalues of a symmetric `n × n` matrix (row-major), ascending.
///
/// Cyclic Jacobi rotations; intended for the tiny matrices of the pointwise
/// validators (`n ≤ 4`).
pub fn sym_eigenvalues(matrix: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(matrix.len(), n * n);
    let mut a = matrix.to_vec();
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = s;
            a[j * n + i] = s;
        }
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        let scale: f64 = a.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
        if off <= 1e-32 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap_or(core::cmp::Ordering::Equal));
    eig
}

pub fn sym_min_eigenvalue(matrix: &[f64], n: usize) -> f64 {
    sym_eigenvalues(matrix, n)[0]
}

/// Compressed sparse row matrix with sorted, duplicate-free columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles from `(row, col, value)` triplets; duplicates are summed in
    /// the order they appear.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1));
        let mut row_ptr = vec![0; rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (r, c, v) = triplets[k];
            assert!(r < rows && c < cols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[range.clone()].binary_search(&c) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate().take(self.rows) {
            *out = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        self.matvec(x, &mut y);
        y
    }

    /// `P A Pᵀ` where `perm[old] = new`.
    pub fn permuted(&self, perm: &[usize]) -> CsrMatrix {
        let mut trip = Vec::with_capacity(self.nnz());
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                trip.push((perm[r], perm[c], v));
            }
        }
        CsrMatrix::from_triplets(self.rows, self.cols, &trip)
    }

    /// Lower and upper bandwidth.
    pub fn bandwidth(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for r in 0..self.rows {
            for (c, _) in self.row(r) {
                if c < r {
                    kl = kl.max(r - c);
                } else {
                    ku = ku.max(c - r);
                }
            }
        }
        (kl, ku)
    }

    /// Largest entrywise difference against another matrix of equal shape.
    pub fn max_abs_diff(&self, other: &CsrMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut diff: f64 = 0.0;
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                diff = diff.max((v - other.get(r, c)).abs());
            }
            for (c, v) in other.row(r) {
                diff = diff.max((v - self.get(r, c)).abs());
            }
        }
        diff
    }
}

/// LU factorization with partial pivoting of a banded matrix.
///
/// Row `i` of the working array stores columns `i - kl ..= i + kl + ku`;
/// the extra `kl` super-diagonals absorb pivoting fill.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    width: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self, LinearError> {
        let n = a.rows();
        let (kl, ku) = a.bandwidth();
        let width = 2 * kl + ku + 1;
        let mut data = vec![0.0; n * width];
        for r in 0..n {
            for (c, v) in a.row(r) {
                data[r * width + (c + kl - r)] = v;
            }
        }
        let mut lu = BandedLu {
            n,
            kl,
            width,
            data,
            pivots: vec![0; n],
        };
        lu.eliminate()?;
        Ok(lu)
    }

    fn at(&self, r: usize, c: usize) -> usize {
        r * self.width + (c + self.kl - r)
    }

    fn eliminate(&mut self) -> Result<(), LinearError> {
        let (n, kl) = (self.n, self.kl);
        let last_col = |r: usize| (r + self.width - kl - 1).min(n - 1);
        for k in 0..n {
            let bottom = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.at(k, k)].abs();
            for r in k + 1..=bottom {
                let v = self.data[self.at(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 {
                return Err(LinearError::Singular(k));
            }
            self.pivots[k] = p;
            let right = last_col(k);
            if p != k {
                for c in k..=right {
                    let (ik, ip) = (self.at(k, c), self.at(p, c));
                    self.data.swap(ik, ip);
                }
            }
            let pivot = self.data[self.at(k, k)];
            for r in k + 1..=bottom {
                let ir = self.at(r, k);
                let factor = self.data[ir] / pivot;
                self.data[ir] = factor;
                if factor == 0.0 {
                    continue;
                }
                for c in k + 1..=right {
                    let v = self.data[self.at(k, c)];
                    let irc = self.at(r, c);
                    self.data[irc] -= factor * v;
                }
            }
        }
        Ok(())
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, LinearError> {
        let (n, kl) = (self.n, self.kl);
        if rhs.len() != n {
            return Err(LinearError::Dimension {
                expected: n,
                got: rhs.len(),
            });
        }
        let mut x = rhs.to_vec();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let bottom = (k + kl).min(n - 1);
            for r in k + 1..=bottom {
                x[r] -= self.data[self.at(r, k)] * x[k];
            }
        }
        for k in (0..n).rev() {
            let right = (k + self.width - kl - 1).min(n - 1);
            let mut s = x[k];
            for c in k + 1..=right {
                s -= self.data[self.at(k, c)] * x[c];
            }
            x[k] = s / self.data[self.at(k, k)];
        }
        Ok(x)
    }
}

/// Incomplete LU with zero fill on the sparsity pattern of the matrix.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn factor(a: &CsrMatrix) -> Result<Self, LinearError> {
        let mut lu = a.clone();
        let n = lu.rows;
        let mut diag = vec![usize::MAX; n];
        for r in 0..n {
            for k in lu.row_ptr[r]..lu.row_ptr[r + 1] {
                if lu.col_idx[k] == r {
                    diag[r] = k;
                }
            }
            if diag[r] == usize::MAX {
                return Err(LinearError::Singular(r));
            }
        }
        let mut position = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for k in start..end {
                position[lu.col_idx[k]] = k;
            }
            for k in start..end {
                let col = lu.col_idx[k];
                if col >= i {
                    break;
                }
                let pivot = lu.values[diag[col]];
                if pivot == 0.0 {
                    return Err(LinearError::Singular(col));
                }
                let factor = lu.values[k] / pivot;
                lu.values[k] = factor;
                for kk in diag[col] + 1..lu.row_ptr[col + 1] {
                    let target = position[lu.col_idx[kk]];
                    if target != usize::MAX {
                        lu.values[target] -= factor * lu.values[kk];
                    }
                }
            }
            for k in start..end {
                position[lu.col_idx[k]] = usize::MAX;
            }
            if lu.values[diag[i]] == 0.0 {
                return Err(LinearError::Singular(i));
            }
        }
        Ok(Self { lu, diag })
    }

    pub fn apply(&self, rhs: &[f64], out: &mut [f64]) {
        let n = self.lu.rows;
        for i in 0..n {
            let mut s = rhs[i];
            for k in self.lu.row_ptr[i]..self.diag[i] {
                s -= self.lu.values[k] * out[self.lu.col_idx[k]];
            }
            out[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = out[i];
            for k in self.diag[i] + 1..self.lu.row_ptr[i + 1] {
                s -= self.lu.values[k] * out[self.lu.col_idx[k]];
            }
            out[i] = s / self.lu.values[self.diag[i]];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    pub restart: usize,
    pub max_iterations: usize,
    pub relative_tolerance: f64,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            restart: 60,
            max_iterations: 3000,
            relative_tolerance: 1e-10,
        }
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// Right-preconditioned restarted GMRES. Convergence is judged on the true
/// residual `‖b − A x‖ ≤ tol ‖b‖` at every restart.
pub fn gmres(
    a: &CsrMatrix,
    precond: &Ilu0,
    b: &[f64],
    x0: &[f64],
    opts: &GmresOptions,
) -> Result<(Vec<f64>, usize), LinearError> {
    let n = a.rows();
    if b.len() != n || x0.len() != n {
        return Err(LinearError::Dimension {
            expected: n,
            got: b.len().min(x0.len()),
        });
    }
    let bnorm = norm2(b);
    let mut x = x0.to_vec();
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], 0));
    }
    let target = opts.relative_tolerance * bnorm;
    let m = opts.restart.max(1);
    let mut iterations = 0;
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    loop {
        a.matvec(&x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let beta = norm2(&r);
        if beta <= target {
            return Ok((x, iterations));
        }
        if iterations >= opts.max_iterations {
            return Err(LinearError::NotConverged {
                iterations,
                residual: beta / bnorm,
            });
        }
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut used = 0;
        for j in 0..m {
            precond.apply(&basis[j], &mut z);
            a.matvec(&z, &mut w);
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                h[i][j] = hij;
                for (wk, vk) in w.iter_mut().zip(v) {
                    *wk -= hij * vk;
                }
            }
            let hnext = norm2(&w);
            h[j + 1][j] = hnext;
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let denom = (h[j][j] * h[j][j] + h[j + 1][j] * h[j + 1][j]).sqrt();
            if denom == 0.0 {
                used = j;
                break;
            }
            cs[j] = h[j][j] / denom;
            sn[j] = h[j + 1][j] / denom;
            h[j][j] = denom;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            iterations += 1;
            if g[j + 1].abs() <= 0.5 * target || hnext == 0.0 || iterations >= opts.max_iterations {
                break;
            }
            basis.push(w.iter().map(|v| v / hnext).collect());
        }
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for k in i + 1..used {
                s -= h[i][k] * y[k];
            }
            y[i] = s / h[i][i];
        }
        let mut update = vec![0.0; n];
        for (yi, v) in y.iter().zip(&basis) {
            for (u, vk) in update.iter_mut().zip(v) {
                *u += yi * vk;
            }
        }
        precond.apply(&update, &mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
    }
}

/// Which route a [`LinearSolver`] takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    BandedDirect,
    Krylov,
}

/// A prepared solver for a fixed matrix; the factorization is reused across
/// right-hand sides.
#[derive(Debug, Clone)]
pub struct LinearSolver {
    matrix: CsrMatrix,
    perm: Option<Vec<usize>>,
    inner: Prepared,
}

#[derive(Debug, Clone)]
enum Prepared {
    Banded(BandedLu),
    Krylov {
        permuted: CsrMatrix,
        ilu: Ilu0,
        opts: GmresOptions,
    },
}

impl LinearSolver {
    /// `perm[old] = new` reorders unknowns before factoring (for banded
    /// storage or better incomplete factors).
    pub fn new(
        matrix: CsrMatrix,
        perm: Option<Vec<usize>>,
        kind: SolverKind,
        opts: GmresOptions,
    ) -> Result<Self, LinearError> {
        let permuted = match &perm {
            Some(p) => matrix.permuted(p),
            None => matrix.clone(),
        };
        let inner = match kind {
            SolverKind::BandedDirect => Prepared::Banded(BandedLu::factor(&permuted)?),
            SolverKind::Krylov => Prepared::Krylov {
                ilu: Ilu0::factor(&permuted)?,
                permuted,
                opts,
            },
        };
        Ok(Self {
            matrix,
            perm,
            inner,
        })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn solve(&self, rhs: &[f64], guess: Option<&[f64]>) -> Result<Vec<f64>, LinearError> {
        let n = self.matrix.rows();
        if rhs.len() != n {
            return Err(LinearError::Dimension {
                expected: n,
                got: rhs.len(),
            });
        }
        let forward = |v: &[f64]| -> Vec<f64> {
            match &self.perm {
                Some(p) => {
                    let mut out = vec![0.0; n];
                    for (old, &new) in p.iter().enumerate() {
                        out[new] = v[old];
                    }
                    out
                }
                None => v.to_vec(),
            }
        };
        let b = forward(rhs);
        let y = match &self.inner {
            Prepared::Banded(lu) => lu.solve(&b)?,
            Prepared::Krylov {
                permuted,
                ilu,
                opts,
            } => {
                let x0 = match guess {
                    Some(g) => forward(g),
                    None => vec![0.0; n],
                };
                gmres(permuted, ilu, &b, &x0, opts)?.0
            }
        };
        Ok(match &self.perm {
            Some(p) => p.iter().map(|&new| y[new]).collect(),
            None => y,
        })
    }
}
