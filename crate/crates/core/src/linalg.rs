//! Small linear-algebra kernels tuned to graph-structured systems.
//!
//! Discretized operators on a metric graph couple DOFs only along edges and
//! across vertices, so every linear system here is "per-edge banded plus a
//! handful of coupling rows" (vertex values, Lagrange-multiplier borders).
//! [`CondensedSolver`] factors the edge-interior blocks with a banded LU and
//! eliminates them onto a small dense Schur complement, giving O(n) solves on
//! meshes far beyond dense reach.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("singular pivot in banded factorization at column {0}")]
    SingularBand(usize),
    #[error("singular Schur complement")]
    SingularSchur,
    #[error("matrix entry ({0}, {1}) outside the declared band")]
    OutOfBand(usize, usize),
    #[error("entries couple interior DOFs of different blocks: ({0}, {1})")]
    CrossBlock(usize, usize),
    #[error("iteration failed to converge: {0}")]
    NoConvergence(String),
}

/// General banded matrix in LAPACK-style storage with room for pivot fill.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    /// Column-major band storage, `ldab = 2*kl + ku + 1` rows per column.
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandedMatrix { n, kl, ku, data: vec![0.0; ldab * n] }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = (i as isize, j as isize);
        let d = i - j;
        if d > self.kl as isize || d < -((self.kl + self.ku) as isize) {
            return None;
        }
        let ldab = (2 * self.kl + self.ku + 1) as isize;
        Some((j * ldab + (self.kl + self.ku) as isize + d) as usize)
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) -> Result<(), LinalgError> {
        // entries must lie within the logical band (fill rows are reserved)
        if i.max(j) - i.min(j) > self.kl.max(self.ku)
            || (i > j && i - j > self.kl)
            || (j > i && j - i > self.ku)
        {
            return Err(LinalgError::OutOfBand(i, j));
        }
        let k = self.idx(i, j).ok_or(LinalgError::OutOfBand(i, j))?;
        self.data[k] += v;
        Ok(())
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.idx(i, j).map(|k| self.data[k]).unwrap_or(0.0)
    }

    #[inline]
    fn set_raw(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j).expect("within fill band");
        self.data[k] = v;
    }

    /// LU factorization with partial pivoting, in place.
    pub fn lu_factor(mut self) -> Result<BandedLu, LinalgError> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut ipiv = vec![0usize; n];
        for k in 0..n {
            // pivot search in column k, rows k..=k+kl
            let imax = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in (k + 1)..=imax {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(LinalgError::SingularBand(k));
            }
            ipiv[k] = p;
            let jmax = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let a = self.get(k, j);
                    let b = self.get(p, j);
                    self.set_raw(k, j, b);
                    self.set_raw(p, j, a);
                }
            }
            let pivot = self.get(k, k);
            for i in (k + 1)..=imax {
                let l = self.get(i, k) / pivot;
                self.set_raw(i, k, l);
                if l != 0.0 {
                    for j in (k + 1)..=jmax {
                        let akj = self.get(k, j);
                        if akj != 0.0 {
                            let v = self.get(i, j) - l * akj;
                            self.set_raw(i, j, v);
                        }
                    }
                }
            }
        }
        Ok(BandedLu { mat: self, ipiv })
    }
}

/// Factored form of a [`BandedMatrix`].
#[derive(Debug, Clone)]
pub struct BandedLu {
    mat: BandedMatrix,
    ipiv: Vec<usize>,
}

impl BandedLu {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.mat.n;
        let (kl, ku) = (self.mat.kl, self.mat.ku);
        // forward: apply pivots and L
        for k in 0..n {
            let p = self.ipiv[k];
            if p != k {
                b.swap(k, p);
            }
            let imax = (k + kl).min(n - 1);
            let bk = b[k];
            if bk != 0.0 {
                for i in (k + 1)..=imax {
                    b[i] -= self.mat.get(i, k) * bk;
                }
            }
        }
        // backward: U
        for k in (0..n).rev() {
            let jmax = (k + kl + ku).min(n - 1);
            let mut acc = b[k];
            for j in (k + 1)..=jmax {
                acc -= self.mat.get(k, j) * b[j];
            }
            b[k] = acc / self.mat.get(k, k);
        }
    }
}

/// Partition of the unknowns for [`CondensedSolver`]: banded interior blocks
/// (global indices in band order) plus the coupling set everything else is
/// eliminated onto.
#[derive(Debug, Clone)]
pub struct BlockPlan {
    pub blocks: Vec<Vec<usize>>,
    pub coupling: Vec<usize>,
    /// Band half-width of the interior blocks.
    pub band: usize,
}

enum Slot {
    Interior { block: usize, local: usize },
    Coupling { local: usize },
}

/// Block factorization of a graph-structured sparse matrix.
pub struct CondensedSolver {
    n: usize,
    plan_blocks: Vec<Vec<usize>>,
    plan_coupling: Vec<usize>,
    block_lu: Vec<BandedLu>,
    /// A_b^{-1} B_b, dense nb × nc per block.
    block_x: Vec<DMatrix<f64>>,
    /// Coupling-row entries into each block: (coupling k, local i, value).
    block_c: Vec<Vec<(usize, usize, f64)>>,
    schur_lu: nalgebra::linalg::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl CondensedSolver {
    /// Factor the `n × n` matrix given by accumulated `(row, col, value)`
    /// triplets under the block plan.
    pub fn factor(
        n: usize,
        entries: &[(usize, usize, f64)],
        plan: &BlockPlan,
    ) -> Result<Self, LinalgError> {
        let nc = plan.coupling.len();
        let mut slot: Vec<Option<Slot>> = (0..n).map(|_| None).collect();
        for (b, idxs) in plan.blocks.iter().enumerate() {
            for (i, &g) in idxs.iter().enumerate() {
                slot[g] = Some(Slot::Interior { block: b, local: i });
            }
        }
        for (k, &g) in plan.coupling.iter().enumerate() {
            slot[g] = Some(Slot::Coupling { local: k });
        }
        debug_assert!(slot.iter().all(|s| s.is_some()), "plan must cover all DOFs");

        let mut bands: Vec<BandedMatrix> = plan
            .blocks
            .iter()
            .map(|idxs| BandedMatrix::zeros(idxs.len().max(1), plan.band, plan.band))
            .collect();
        let mut block_b: Vec<DMatrix<f64>> = plan
            .blocks
            .iter()
            .map(|idxs| DMatrix::zeros(idxs.len(), nc))
            .collect();
        let mut block_c: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); plan.blocks.len()];
        let mut s0 = DMatrix::<f64>::zeros(nc, nc);

        for &(i, j, v) in entries {
            match (&slot[i], &slot[j]) {
                (Some(Slot::Interior { block: bi, local: li }), Some(Slot::Interior { block: bj, local: lj })) => {
                    if bi != bj {
                        return Err(LinalgError::CrossBlock(i, j));
                    }
                    bands[*bi].add(*li, *lj, v)?;
                }
                (Some(Slot::Interior { block: bi, local: li }), Some(Slot::Coupling { local: k })) => {
                    block_b[*bi][(*li, *k)] += v;
                }
                (Some(Slot::Coupling { local: k }), Some(Slot::Interior { block: bj, local: lj })) => {
                    block_c[*bj].push((*k, *lj, v));
                }
                (Some(Slot::Coupling { local: ki }), Some(Slot::Coupling { local: kj })) => {
                    s0[(*ki, *kj)] += v;
                }
                _ => unreachable!(),
            }
        }

        let mut block_lu = Vec::with_capacity(bands.len());
        let mut block_x = Vec::with_capacity(bands.len());
        for ((band, mut bmat), cents) in bands
            .into_iter()
            .zip(block_b.into_iter())
            .zip(block_c.iter())
        {
            let nb = bmat.nrows();
            let lu = band.lu_factor()?;
            // X = A^{-1} B, column by column
            if nb > 0 {
                let mut col = vec![0.0; nb];
                for k in 0..nc {
                    for i in 0..nb {
                        col[i] = bmat[(i, k)];
                    }
                    lu.solve_in_place(&mut col);
                    for i in 0..nb {
                        bmat[(i, k)] = col[i];
                    }
                }
            }
            // Schur update: S -= C * X
            for &(k, i, v) in cents {
                for kk in 0..nc {
                    s0[(k, kk)] -= v * bmat[(i, kk)];
                }
            }
            block_lu.push(lu);
            block_x.push(bmat);
        }

        let schur_lu = nalgebra::linalg::LU::new(s0);
        if schur_lu.determinant() == 0.0 {
            return Err(LinalgError::SingularSchur);
        }

        Ok(CondensedSolver {
            n,
            plan_blocks: plan.blocks.clone(),
            plan_coupling: plan.coupling.clone(),
            block_lu,
            block_x,
            block_c,
            schur_lu,
        })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n);
        let nc = self.plan_coupling.len();
        let mut rc = DVector::<f64>::zeros(nc);
        for (k, &g) in self.plan_coupling.iter().enumerate() {
            rc[k] = rhs[g];
        }
        // z_b = A_b^{-1} r_b and rc -= C_b z_b
        let mut zs: Vec<Vec<f64>> = Vec::with_capacity(self.plan_blocks.len());
        for (b, idxs) in self.plan_blocks.iter().enumerate() {
            let mut z: Vec<f64> = idxs.iter().map(|&g| rhs[g]).collect();
            if !z.is_empty() {
                self.block_lu[b].solve_in_place(&mut z);
            }
            for &(k, i, v) in &self.block_c[b] {
                rc[k] -= v * z[i];
            }
            zs.push(z);
        }
        let yc = self.schur_lu.solve(&rc).expect("factored Schur");
        let mut out = vec![0.0; self.n];
        for (k, &g) in self.plan_coupling.iter().enumerate() {
            out[g] = yc[k];
        }
        for (b, idxs) in self.plan_blocks.iter().enumerate() {
            let x = &self.block_x[b];
            for (i, &g) in idxs.iter().enumerate() {
                let mut v = zs[b][i];
                for k in 0..nc {
                    v -= x[(i, k)] * yc[k];
                }
                out[g] = v;
            }
        }
        out
    }
}

/// Row-compressed sparse matrix for fast repeated matvecs.
#[derive(Debug, Clone)]
pub struct SparseMat {
    n_rows: usize,
    n_cols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMat {
    pub fn from_triplets(n_rows: usize, n_cols: usize, entries: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_rows];
        for &(i, j, v) in entries {
            rows[i].push((j, v));
        }
        for r in &mut rows {
            r.sort_unstable_by_key(|e| e.0);
            // accumulate duplicates
            let mut out: Vec<(usize, f64)> = Vec::with_capacity(r.len());
            for &(j, v) in r.iter() {
                match out.last_mut() {
                    Some(last) if last.0 == j => last.1 += v,
                    _ => out.push((j, v)),
                }
            }
            *r = out;
        }
        SparseMat { n_rows, n_cols, rows }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn apply<T>(&self, x: &[T]) -> Vec<T>
    where
        T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
    {
        assert_eq!(x.len(), self.n_cols);
        let mut out = vec![T::default(); self.n_rows];
        for (i, row) in self.rows.iter().enumerate() {
            let mut acc = T::default();
            for &(j, v) in row {
                acc = acc + x[j] * v;
            }
            out[i] = acc;
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_rows, self.n_cols);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] += v;
            }
        }
        m
    }
}

/// Preconditioned conjugate gradients on an SPD operator given as a closure.
pub fn pcg(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    precond: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>, LinalgError> {
    let n = b.len();
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let ax = apply(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let bnorm = dot(b, b).sqrt().max(1e-300);
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..max_iter {
        if dot(&r, &r).sqrt() <= tol * bnorm {
            return Ok(x);
        }
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(LinalgError::NoConvergence(format!(
                "indefinite curvature in CG: pᵀAp = {pap:.3e}"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if dot(&r, &r).sqrt() <= tol * bnorm {
        Ok(x)
    } else {
        Err(LinalgError::NoConvergence(format!(
            "CG stalled at relative residual {:.3e}",
            dot(&r, &r).sqrt() / bnorm
        )))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lanczos tridiagonalization with full reorthogonalization.
///
/// Returns `(alphas, betas, basis)` with `betas.len() == alphas.len() - 1`;
/// stops early when the residual norm underflows `breakdown_tol`.
pub fn lanczos(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    v0: &[f64],
    steps: usize,
    breakdown_tol: f64,
) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let n = v0.len();
    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    let mut basis: Vec<Vec<f64>> = Vec::new();

    let nrm = dot(v0, v0).sqrt();
    assert!(nrm > 0.0, "Lanczos needs a nonzero start vector");
    let mut v: Vec<f64> = v0.iter().map(|x| x / nrm).collect();

    for _ in 0..steps {
        let mut w = apply(&v);
        let alpha = dot(&v, &w);
        alphas.push(alpha);
        for i in 0..n {
            w[i] -= alpha * v[i];
        }
        if let Some(prev) = basis.last() {
            let beta_prev = *betas.last().unwrap();
            for i in 0..n {
                w[i] -= beta_prev * prev[i];
            }
        }
        // full reorthogonalization, twice for safety
        for _ in 0..2 {
            for q in basis.iter().chain(std::iter::once(&v)) {
                let c = dot(q, &w);
                if c != 0.0 {
                    for i in 0..n {
                        w[i] -= c * q[i];
                    }
                }
            }
        }
        basis.push(v.clone());
        let beta = dot(&w, &w).sqrt();
        if beta <= breakdown_tol {
            break;
        }
        betas.push(beta);
        v = w.iter().map(|x| x / beta).collect();
    }
    (alphas, betas, basis)
}
