//! Compressed sparse row storage and iterative solution of symmetric
//! positive definite systems.
//!
//! Assembly goes through [`CooBuilder`] (duplicate entries accumulate), the
//! solver is conjugate gradients with an optional zero-fill incomplete
//! Cholesky preconditioner. IC(0) can break down on matrices that are SPD but
//! not M-matrices; [`Preconditioner::auto`] falls back to Jacobi when a pivot
//! goes non-positive.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct CsrMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    vals: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[T]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.vals[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&(j as u32)) {
            Ok(p) => vals[p],
            Err(_) => T::zero(),
        }
    }

    /// y = A x.
    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut s = T::zero();
            for (c, v) in cols.iter().zip(vals) {
                s += *v * x[*c as usize];
            }
            y[i] = s;
        }
    }

    pub fn matvec_alloc(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        self.matvec(x, &mut y);
        y
    }

    pub fn diag(&self) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// alpha * self + beta * other, merging sparsity patterns.
    pub fn linear_combination(&self, alpha: T, other: &CsrMatrix<T>, beta: T) -> CsrMatrix<T> {
        assert_eq!(self.n, other.n);
        let mut row_ptr = Vec::with_capacity(self.n + 1);
        let mut col_idx = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut vals = Vec::with_capacity(col_idx.capacity());
        row_ptr.push(0);
        for i in 0..self.n {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let ja = ca.get(p).copied().unwrap_or(u32::MAX);
                let jb = cb.get(q).copied().unwrap_or(u32::MAX);
                if ja < jb {
                    col_idx.push(ja);
                    vals.push(alpha * va[p]);
                    p += 1;
                } else if jb < ja {
                    col_idx.push(jb);
                    vals.push(beta * vb[q]);
                    q += 1;
                } else {
                    col_idx.push(ja);
                    vals.push(alpha * va[p] + beta * vb[q]);
                    p += 1;
                    q += 1;
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n: self.n,
            row_ptr,
            col_idx,
            vals,
        }
    }

    /// Largest row sum of absolute values; cheap upper bound on the spectral
    /// radius of a symmetric matrix.
    pub fn inf_norm(&self) -> T {
        (0..self.n)
            .map(|i| self.row(i).1.iter().fold(T::zero(), |s, v| s + v.abs()))
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.n]; self.n];
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                d[i][*c as usize] = *v;
            }
        }
        d
    }

    /// Coordinate-format Matrix Market dump (symmetric, lower triangle).
    pub fn dump_matrix_market(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str("%%MatrixMarket matrix coordinate real symmetric\n");
        let lower: Vec<(usize, usize, T)> = (0..self.n)
            .flat_map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter()
                    .zip(vals)
                    .filter(move |(c, _)| **c as usize <= i)
                    .map(move |(c, v)| (i, *c as usize, *v))
                    .collect::<Vec<_>>()
            })
            .collect();
        out.push_str(&format!("{} {} {}\n", self.n, self.n, lower.len()));
        for (i, j, v) in lower {
            out.push_str(&format!("{} {} {:e}\n", i + 1, j + 1, v));
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(out.as_bytes())?;
        Ok(())
    }
}

/// Triplet accumulator; `into_csr` sorts rows and merges duplicates.
#[derive(Debug, Clone)]
pub struct CooBuilder<T> {
    n: usize,
    entries: Vec<(u32, u32, T)>,
}

impl<T: Scalar> CooBuilder<T> {
    pub fn new(n: usize) -> Self {
        assert!(n < u32::MAX as usize);
        CooBuilder {
            n,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        let mut b = Self::new(n);
        b.entries.reserve(cap);
        b
    }

    pub fn add(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(i < self.n && j < self.n);
        self.entries.push((i as u32, j as u32, v));
    }

    pub fn into_csr(mut self) -> CsrMatrix<T> {
        self.entries
            .sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<T> = Vec::with_capacity(self.entries.len());
        let mut cur_row = 0usize;
        for (i, j, v) in self.entries {
            let i = i as usize;
            // row_ptr[r] is the start of row r; advance through empty rows.
            while cur_row < i {
                cur_row += 1;
                row_ptr[cur_row] = col_idx.len();
            }
            if col_idx.len() > row_ptr[cur_row] && *col_idx.last().unwrap() == j {
                *vals.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                vals.push(v);
            }
        }
        while cur_row < self.n {
            cur_row += 1;
            row_ptr[cur_row] = col_idx.len();
        }
        CsrMatrix {
            n: self.n,
            row_ptr,
            col_idx,
            vals,
        }
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

pub fn norm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// y += alpha x.
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

/// Zero-fill incomplete Cholesky factor, lower triangle in CSR.
#[derive(Debug, Clone)]
pub struct Ic0<T> {
    l: CsrMatrix<T>,
}

impl<T: Scalar> Ic0<T> {
    /// None on breakdown (non-positive pivot).
    pub fn factor(a: &CsrMatrix<T>) -> Option<Ic0<T>> {
        let n = a.n();
        // Lower-triangular pattern of A, values updated in place.
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx: Vec<u32> = Vec::new();
        let mut vals: Vec<T> = Vec::new();
        for i in 0..n {
            let (cols, avals) = a.row(i);
            for (c, v) in cols.iter().zip(avals) {
                if *c as usize <= i {
                    col_idx.push(*c);
                    vals.push(*v);
                }
            }
            // Every row must end on its diagonal; a structurally singular row
            // (e.g. a node decoupled by the surrounding phase) cannot be
            // factored and the caller falls back to Jacobi.
            if col_idx.last().copied() != Some(i as u32) {
                return None;
            }
            row_ptr[i + 1] = col_idx.len();
        }
        for i in 0..n {
            let (ri0, ri1) = (row_ptr[i], row_ptr[i + 1]);
            for p in ri0..ri1 {
                let k = col_idx[p] as usize;
                // Merge-walk the strict-lower parts of rows i and k.
                let mut s = vals[p];
                let (mut pi, mut pk) = (ri0, row_ptr[k]);
                let (ei, ek) = (ri1 - 1, row_ptr[k + 1] - 1);
                while pi < ei && pk < ek {
                    let (ci, ck) = (col_idx[pi], col_idx[pk]);
                    if ci == ck {
                        s -= vals[pi] * vals[pk];
                        pi += 1;
                        pk += 1;
                    } else if ci < ck {
                        pi += 1;
                    } else {
                        pk += 1;
                    }
                }
                if k == i {
                    if s <= T::zero() {
                        return None;
                    }
                    vals[p] = s.sqrt();
                } else {
                    vals[p] = s / vals[row_ptr[k + 1] - 1];
                }
            }
        }
        Some(Ic0 {
            l: CsrMatrix {
                n,
                row_ptr,
                col_idx,
                vals,
            },
        })
    }

    /// Solve L L^T y = r.
    pub fn apply(&self, r: &[T], y: &mut [T]) {
        let n = self.l.n();
        y.copy_from_slice(r);
        // Forward: L z = r.
        for i in 0..n {
            let (cols, vals) = self.l.row(i);
            let m = cols.len() - 1;
            let mut s = y[i];
            for p in 0..m {
                s -= vals[p] * y[cols[p] as usize];
            }
            y[i] = s / vals[m];
        }
        // Backward: L^T y = z, traversing columns of L^T as rows of L.
        for i in (0..n).rev() {
            let (cols, vals) = self.l.row(i);
            let m = cols.len() - 1;
            let yi = y[i] / vals[m];
            y[i] = yi;
            for p in 0..m {
                y[cols[p] as usize] -= vals[p] * yi;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum Preconditioner<T> {
    Identity,
    Jacobi(Vec<T>),
    Ic0(Ic0<T>),
}

impl<T: Scalar> Preconditioner<T> {
    /// IC(0) when it exists, Jacobi otherwise.
    pub fn auto(a: &CsrMatrix<T>) -> Self {
        match Ic0::factor(a) {
            Some(f) => Preconditioner::Ic0(f),
            None => Preconditioner::jacobi(a),
        }
    }

    pub fn jacobi(a: &CsrMatrix<T>) -> Self {
        Preconditioner::Jacobi(
            a.diag()
                .into_iter()
                .map(|d| {
                    if d > T::zero() {
                        T::one() / d
                    } else {
                        T::one()
                    }
                })
                .collect(),
        )
    }

    pub fn apply(&self, r: &[T], z: &mut [T]) {
        match self {
            Preconditioner::Identity => z.copy_from_slice(r),
            Preconditioner::Jacobi(dinv) => {
                for ((zi, ri), di) in z.iter_mut().zip(r).zip(dinv) {
                    *zi = *ri * *di;
                }
            }
            Preconditioner::Ic0(f) => f.apply(r, z),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CgOptions<T> {
    /// Convergence on ||b - A x|| <= tol_rel * ||b||.
    pub tol_rel: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for CgOptions<T> {
    fn default() -> Self {
        CgOptions {
            tol_rel: T::of(1e-10),
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome<T> {
    pub iterations: usize,
    pub rel_residual: T,
}

/// Preconditioned conjugate gradients for SPD (or positive semidefinite with
/// `b` orthogonal to the kernel, when `project` maps onto the orthogonal
/// complement of that kernel; used by the periodic corrector solve).
pub fn cg_solve<T: Scalar>(
    a: &CsrMatrix<T>,
    b: &[T],
    x: &mut [T],
    precond: &Preconditioner<T>,
    opts: CgOptions<T>,
    project: Option<&dyn Fn(&mut [T])>,
) -> Result<CgOutcome<T>> {
    let n = a.n();
    let bnorm = norm2(b);
    if bnorm == T::zero() {
        x.iter_mut().for_each(|v| *v = T::zero());
        return Ok(CgOutcome {
            iterations: 0,
            rel_residual: T::zero(),
        });
    }
    if let Some(p) = project {
        p(x);
    }
    let mut r = b.to_vec();
    let mut tmp = a.matvec_alloc(x);
    for (ri, ti) in r.iter_mut().zip(&tmp) {
        *ri -= *ti;
    }
    if let Some(p) = project {
        p(&mut r);
    }
    let mut z = vec![T::zero(); n];
    precond.apply(&r, &mut z);
    if let Some(p) = project {
        p(&mut z);
    }
    let mut p_dir = z.clone();
    let mut rz = dot(&r, &z);
    let tol = opts.tol_rel * bnorm;
    for it in 0..opts.max_iter {
        let rnorm = norm2(&r);
        if rnorm <= tol {
            return Ok(CgOutcome {
                iterations: it,
                rel_residual: rnorm / bnorm,
            });
        }
        a.matvec(&p_dir, &mut tmp);
        let pap = dot(&p_dir, &tmp);
        if pap <= T::zero() {
            return Err(Error::numeric(format!(
                "conjugate gradients: operator not positive definite (p^T A p = {:e})",
                pap
            )));
        }
        let alpha = rz / pap;
        axpy(alpha, &p_dir, x);
        axpy(-alpha, &tmp, &mut r);
        if let Some(pr) = project {
            pr(&mut r);
        }
        precond.apply(&r, &mut z);
        if let Some(pr) = project {
            pr(&mut z);
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p_dir.iter_mut().zip(&z) {
            *pi = *zi + beta * *pi;
        }
    }
    let rel = norm2(&r) / bnorm;
    Err(Error::numeric(format!(
        "conjugate gradients stalled at relative residual {:e} after {} iterations",
        rel, opts.max_iter
    )))
}
