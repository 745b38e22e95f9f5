//! Eigendecomposition of the reduced Dirac matrix, spectral projectors P±,
//! the positive/negative splitting, and the form norm ‖·‖_c.
//!
//! The weighted Dirac matrix is real symmetric, so the eigenbasis is real and
//! complex fields are handled coefficient-wise. The dense path keeps the full
//! decomposition; past the dense cap a shift-invert Lanczos resolves the
//! gap-adjacent window and the complement is handled through matrix-function
//! evaluations, so projections stay available on fine meshes.

use crate::field::SpinorField;
use crate::linalg::{lanczos, CondensedSolver, SparseMat};
use crate::operators::{spinor_block_plan, DiracOperator};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("eigensolver failed: {0}")]
    EigFailure(String),
    #[error("an eigenvalue entered the spectral gap: {0} < mc²(1 - 1e-8) = {1}")]
    GapViolation(f64, f64),
    #[error(transparent)]
    Operator(#[from] crate::operators::OperatorError),
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralSign {
    Plus,
    Minus,
}

/// Default dense-path cap on the reduced dimension.
pub const DENSE_CAP: usize = 3000;

/// Complete eigendecomposition (dense path).
pub struct SpectralDecomposition {
    gap_edge: f64,
    eigenvalues: Vec<f64>,
    /// Columns are orthonormal eigenvectors in weighted coordinates.
    vectors: DMatrix<f64>,
}

/// Decompose the reduced Dirac matrix; dense up to [`DENSE_CAP`].
pub fn eigendecompose(op: &DiracOperator) -> Result<SpectralDecomposition, SpectralError> {
    eigendecompose_dense(op, DENSE_CAP)
}

/// Dense eigendecomposition with an explicit dimension cap.
pub fn eigendecompose_dense(
    op: &DiracOperator,
    cap: usize,
) -> Result<SpectralDecomposition, SpectralError> {
    let n = op.dim();
    if n > cap {
        return Err(SpectralError::EigFailure(format!(
            "reduced dimension {n} exceeds the dense cap {cap}; use the windowed path"
        )));
    }
    let a = op.dense_matrix();
    let se = nalgebra::linalg::SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap());
    let mut eigenvalues = Vec::with_capacity(n);
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        eigenvalues.push(se.eigenvalues[i]);
        let col = se.eigenvectors.column(i);
        // canonical sign: first entry of significant modulus is positive
        let mut sign = 1.0;
        for v in col.iter() {
            if v.abs() > 1e-8 {
                sign = if *v < 0.0 { -1.0 } else { 1.0 };
                break;
            }
        }
        for r in 0..n {
            vectors[(r, k)] = sign * col[r];
        }
    }
    let dec = SpectralDecomposition { gap_edge: op.gap_edge(), eigenvalues, vectors };
    let min_abs = dec.min_abs_eigenvalue();
    let floor = op.gap_edge() * (1.0 - 1e-8);
    if min_abs < floor {
        return Err(SpectralError::GapViolation(min_abs, floor));
    }
    Ok(dec)
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn gap_edge(&self) -> f64 {
        self.gap_edge
    }

    pub fn min_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min)
    }

    pub fn positive_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.dim()).filter(|&k| self.eigenvalues[k] > 0.0)
    }

    pub fn negative_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.dim()).filter(|&k| self.eigenvalues[k] < 0.0)
    }

    pub fn eigenvector(&self, k: usize) -> DVector<f64> {
        self.vectors.column(k).into_owned()
    }

    /// Coefficients Vᵀ w of a weighted real vector.
    pub fn coeffs_real(&self, w: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(w);
        (self.vectors.transpose() * v).as_slice().to_vec()
    }

    /// Coefficients of a weighted complex vector (componentwise real basis).
    pub fn coeffs(&self, w: &[Complex64]) -> Vec<Complex64> {
        let re: Vec<f64> = w.iter().map(|z| z.re).collect();
        let im: Vec<f64> = w.iter().map(|z| z.im).collect();
        let cre = self.coeffs_real(&re);
        let cim = self.coeffs_real(&im);
        cre.into_iter().zip(cim).map(|(a, b)| Complex64::new(a, b)).collect()
    }

    pub fn reconstruct_real(&self, coeffs: &[f64]) -> Vec<f64> {
        let c = DVector::from_column_slice(coeffs);
        (&self.vectors * c).as_slice().to_vec()
    }

    pub fn reconstruct(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let re: Vec<f64> = coeffs.iter().map(|z| z.re).collect();
        let im: Vec<f64> = coeffs.iter().map(|z| z.im).collect();
        let wre = self.reconstruct_real(&re);
        let wim = self.reconstruct_real(&im);
        wre.into_iter().zip(wim).map(|(a, b)| Complex64::new(a, b)).collect()
    }

    fn sign_keep(&self, k: usize, sign: SpectralSign) -> bool {
        match sign {
            SpectralSign::Plus => self.eigenvalues[k] > 0.0,
            SpectralSign::Minus => self.eigenvalues[k] < 0.0,
        }
    }

    /// Spectral projection of a weighted real vector.
    pub fn project_weighted_real(&self, w: &[f64], sign: SpectralSign) -> Vec<f64> {
        let mut coeffs = self.coeffs_real(w);
        for (k, c) in coeffs.iter_mut().enumerate() {
            if !self.sign_keep(k, sign) {
                *c = 0.0;
            }
        }
        self.reconstruct_real(&coeffs)
    }

    pub fn project_weighted(&self, w: &[Complex64], sign: SpectralSign) -> Vec<Complex64> {
        let mut coeffs = self.coeffs(w);
        for (k, c) in coeffs.iter_mut().enumerate() {
            if !self.sign_keep(k, sign) {
                *c = Complex64::default();
            }
        }
        self.reconstruct(&coeffs)
    }

    /// P± applied to a spinor field.
    pub fn project(&self, field: &SpinorField, sign: SpectralSign) -> SpinorField {
        let w = field.to_weighted();
        let out = self.project_weighted(&w, sign);
        SpinorField::from_weighted(field.mesh(), &out)
    }

    /// ‖u‖_c = (Σ |ν_k| |⟨v_k, u⟩|²)^{1/2} for a weighted vector.
    pub fn c_norm_weighted(&self, w: &[Complex64]) -> f64 {
        self.coeffs(w)
            .iter()
            .zip(&self.eigenvalues)
            .map(|(c, nu)| nu.abs() * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn c_norm_weighted_real(&self, w: &[f64]) -> f64 {
        self.coeffs_real(w)
            .iter()
            .zip(&self.eigenvalues)
            .map(|(c, nu)| nu.abs() * c * c)
            .sum::<f64>()
            .sqrt()
    }

    pub fn c_norm(&self, field: &SpinorField) -> f64 {
        self.c_norm_weighted(&field.to_weighted())
    }

    /// ‖D u‖₂ through the eigencoefficients.
    pub fn op_norm_weighted(&self, w: &[Complex64]) -> f64 {
        self.coeffs(w)
            .iter()
            .zip(&self.eigenvalues)
            .map(|(c, nu)| nu * nu * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Gap-adjacent eigenpairs plus operator handles: the escape hatch past the
/// dense cap. Stores every eigenpair with |ν| ≤ `window_mult`·mc²; fields are
/// split by combining the stored pairs with sign-function evaluations on the
/// orthogonal complement.
pub struct WindowedDecomposition<'a> {
    op: &'a DiracOperator,
    window_edge: f64,
    eigenvalues: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    lanczos_steps: usize,
}

/// Shift-invert resolution of the spectral window `|ν| ≤ window_mult·mc²`.
pub fn eigendecompose_window<'a>(
    op: &'a DiracOperator,
    window_mult: f64,
    seed: u64,
) -> Result<WindowedDecomposition<'a>, SpectralError> {
    use rand::{Rng, SeedableRng};
    let n = op.dim();
    let window_edge = window_mult * op.gap_edge();
    let trip = op.triplets();
    let plan = spinor_block_plan(op.mesh(), 0);
    let solver = CondensedSolver::factor(n, &trip, &plan)?;
    let spmat = SparseMat::from_triplets(n, n, &trip);

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut eigenvalues: Vec<f64> = Vec::new();
    let mut vectors: Vec<Vec<f64>> = Vec::new();
    let steps = 240.min(n);

    // Repeated deflated shift-invert Lanczos at σ = 0: each sweep converges
    // the outermost remaining 1/ν; stop when a sweep adds nothing inside the
    // window (a fresh random start makes a missed copy vanishingly unlikely).
    for _sweep in 0..32 {
        let deflate = |v: &mut Vec<f64>| {
            for q in &vectors {
                let c = crate::linalg::dot(q, v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= c * qi;
                }
            }
        };
        let apply = |x: &[f64]| {
            let mut y = solver.solve(x);
            deflate(&mut y);
            y
        };
        let mut v0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        deflate(&mut v0);
        let (alphas, betas, basis) = lanczos(&apply, &v0, steps, 1e-13);
        let m = alphas.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alphas[i];
            if i + 1 < m {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let se = nalgebra::linalg::SymmetricEigen::new(t);
        let mut added = 0usize;
        for k in 0..m {
            let theta = se.eigenvalues[k];
            if theta.abs() < 1e-14 {
                continue;
            }
            let nu = 1.0 / theta;
            if nu.abs() > window_edge {
                continue;
            }
            // assemble the Ritz vector and accept on small residual
            let mut y = vec![0.0; n];
            for (j, q) in basis.iter().enumerate() {
                let c = se.eigenvectors[(j, k)];
                for (yi, qi) in y.iter_mut().zip(q) {
                    *yi += c * qi;
                }
            }
            for q in &vectors {
                let c = crate::linalg::dot(q, &y);
                for (yi, qi) in y.iter_mut().zip(q) {
                    *yi -= c * qi;
                }
            }
            let nrm = crate::linalg::dot(&y, &y).sqrt();
            if nrm < 1e-8 {
                continue;
            }
            for yi in &mut y {
                *yi /= nrm;
            }
            let ay = spmat.apply(&y);
            let res: f64 = ay
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - nu * b) * (a - nu * b))
                .sum::<f64>()
                .sqrt();
            if res <= 1e-9 * nu.abs().max(1.0) {
                eigenvalues.push(nu);
                vectors.push(y);
                added += 1;
            }
        }
        if added == 0 {
            break;
        }
    }

    let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eigenvalues[i].partial_cmp(&eigenvalues[j]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eigenvalues[i]).collect();
    let vectors: Vec<Vec<f64>> = order.iter().map(|&i| vectors[i].clone()).collect();

    if let Some(min_abs) = eigenvalues.iter().map(|v| v.abs()).reduce(f64::min) {
        let floor = op.gap_edge() * (1.0 - 1e-8);
        if min_abs < floor {
            return Err(SpectralError::GapViolation(min_abs, floor));
        }
    }

    Ok(WindowedDecomposition { op, window_edge, eigenvalues, vectors, lanczos_steps: steps })
}

impl WindowedDecomposition<'_> {
    pub fn window_eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn window_edge(&self) -> f64 {
        self.window_edge
    }

    pub fn min_abs_eigenvalue(&self) -> Option<f64> {
        self.eigenvalues.iter().map(|v| v.abs()).reduce(f64::min)
    }

    fn split_window(&self, w: &[f64]) -> (Vec<f64>, Vec<f64>) {
        // coefficients on the stored pairs, and the orthogonal remainder
        let mut rem = w.to_vec();
        let mut coeffs = Vec::with_capacity(self.vectors.len());
        for q in &self.vectors {
            let c = crate::linalg::dot(q, &rem);
            coeffs.push(c);
            for (r, qi) in rem.iter_mut().zip(q) {
                *r -= c * qi;
            }
        }
        (coeffs, rem)
    }

    /// Lanczos evaluation of f(S)·v for spectrum away from the origin.
    fn matrix_function(&self, v: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
        let n = v.len();
        let nrm = crate::linalg::dot(v, v).sqrt();
        if nrm == 0.0 {
            return vec![0.0; n];
        }
        let apply = |x: &[f64]| self.op.matvec(x).expect("dimension checked");
        let (alphas, betas, basis) = lanczos(apply, v, self.lanczos_steps.min(n), 1e-13);
        let m = alphas.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alphas[i];
            if i + 1 < m {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let se = nalgebra::linalg::SymmetricEigen::new(t);
        // f(T) e1 * ||v||
        let mut fe = vec![0.0; m];
        for k in 0..m {
            let fk = f(se.eigenvalues[k]);
            let e1k = se.eigenvectors[(0, k)];
            for j in 0..m {
                fe[j] += se.eigenvectors[(j, k)] * fk * e1k;
            }
        }
        let mut out = vec![0.0; n];
        for (j, q) in basis.iter().enumerate() {
            for (oi, qi) in out.iter_mut().zip(q) {
                *oi += nrm * fe[j] * qi;
            }
        }
        out
    }

    /// Spectral projection: exact on the window, sign-function solve beyond.
    pub fn project_weighted_real(&self, w: &[f64], sign: SpectralSign) -> Vec<f64> {
        let (coeffs, rem) = self.split_window(w);
        let signed = self.matrix_function(&rem, |x| if x >= 0.0 { 1.0 } else { -1.0 });
        let half = 0.5;
        let mut out: Vec<f64> = match sign {
            SpectralSign::Plus => rem.iter().zip(&signed).map(|(r, s)| half * (r + s)).collect(),
            SpectralSign::Minus => rem.iter().zip(&signed).map(|(r, s)| half * (r - s)).collect(),
        };
        for (k, q) in self.vectors.iter().enumerate() {
            let keep = match sign {
                SpectralSign::Plus => self.eigenvalues[k] > 0.0,
                SpectralSign::Minus => self.eigenvalues[k] < 0.0,
            };
            if keep {
                for (o, qi) in out.iter_mut().zip(q) {
                    *o += coeffs[k] * qi;
                }
            }
        }
        out
    }

    /// ‖u‖_c² = Σ_window |ν||α|² + ⟨|S| r, r⟩ on the remainder.
    pub fn c_norm_weighted_real(&self, w: &[f64]) -> f64 {
        let (coeffs, rem) = self.split_window(w);
        let mut acc: f64 = coeffs
            .iter()
            .zip(&self.eigenvalues)
            .map(|(c, nu)| nu.abs() * c * c)
            .sum();
        let abs_rem = self.matrix_function(&rem, f64::abs);
        acc += crate::linalg::dot(&abs_rem, &rem);
        acc.sqrt()
    }
}

/// Smallest stiffness eigenvalues of a Schrödinger operator by shift-invert
/// Lanczos with deflation, honoring Dirichlet-pinned DOFs. Handles the
/// degenerate multiplicities that symmetric graphs produce by restarting
/// with deflation until a sweep finds nothing new.
pub fn smallest_dirichlet_eigenvalues(
    op: &crate::operators::SchrodingerOperator,
    count: usize,
    seed: u64,
) -> Result<Vec<f64>, SpectralError> {
    use rand::{Rng, SeedableRng};
    let n = op.dim();
    let pinned = op.dirichlet_nodes();
    // factor K + I (spectrum shifted by +1, keeps the factorization
    // nonsingular; pinned DOFs become exact eigenvectors at 1 and are
    // deflated away)
    let mut trip = op.stiffness_triplets();
    for i in 0..n {
        trip.push((i, i, 1.0));
    }
    let plan = crate::operators::scalar_block_plan(op.mesh(), 0);
    let solver = CondensedSolver::factor(n, &trip, &plan)?;
    let kmat = SparseMat::from_triplets(n, n, &op.stiffness_triplets());

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut eigenvalues: Vec<f64> = Vec::new();
    let mut vectors: Vec<Vec<f64>> = Vec::new();
    let zero_pinned = |v: &mut Vec<f64>| {
        for &i in pinned {
            v[i] = 0.0;
        }
    };
    for _sweep in 0..4 * count.max(1) {
        if eigenvalues.len() >= count {
            break;
        }
        let deflate = |v: &mut Vec<f64>| {
            for q in &vectors {
                let c = crate::linalg::dot(q, v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= c * qi;
                }
            }
        };
        let apply = |x: &[f64]| {
            let mut y = solver.solve(x);
            zero_pinned(&mut y);
            deflate(&mut y);
            y
        };
        let mut v0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        zero_pinned(&mut v0);
        deflate(&mut v0);
        let steps = (8 * count + 40).min(n - pinned.len());
        let (alphas, betas, basis) = lanczos(&apply, &v0, steps, 1e-13);
        let m = alphas.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alphas[i];
            if i + 1 < m {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let se = nalgebra::linalg::SymmetricEigen::new(t);
        let mut added = 0;
        for k in 0..m {
            let theta = se.eigenvalues[k];
            if theta <= 1e-14 {
                continue;
            }
            let lam = 1.0 / theta - 1.0;
            let mut y = vec![0.0; n];
            for (j, q) in basis.iter().enumerate() {
                let cjk = se.eigenvectors[(j, k)];
                for (yi, qi) in y.iter_mut().zip(q) {
                    *yi += cjk * qi;
                }
            }
            for q in &vectors {
                let c = crate::linalg::dot(q, &y);
                for (yi, qi) in y.iter_mut().zip(q) {
                    *yi -= c * qi;
                }
            }
            let nrm = crate::linalg::dot(&y, &y).sqrt();
            if nrm < 1e-8 {
                continue;
            }
            for yi in &mut y {
                *yi /= nrm;
            }
            let ky = kmat.apply(&y);
            let res: f64 = ky
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - lam * b) * (a - lam * b))
                .sum::<f64>()
                .sqrt();
            if res <= 1e-8 * lam.abs().max(1.0) {
                eigenvalues.push(lam);
                vectors.push(y);
                added += 1;
            }
        }
        if added == 0 {
            break;
        }
    }
    eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eigenvalues.truncate(count);
    Ok(eigenvalues)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{NormKind, Region, ScalarField};
    use crate::graph::{interval_graph, line_graph};
    use crate::mesh::Mesh;
    use crate::operators::{assemble_dirac, constraint_basis};
    use rand::SeedableRng;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn setup(c: f64, h: f64) -> (Arc<Mesh>, DiracOperator, SpectralDecomposition) {
        let g = line_graph(1.0);
        let mesh = Arc::new(Mesh::build(&g, h, 2.0).unwrap());
        let basis = constraint_basis(&mesh).unwrap();
        let op = assemble_dirac(&mesh, &basis, 1.0, c).unwrap();
        let dec = eigendecompose(&op).unwrap();
        (mesh, op, dec)
    }

    fn wnorm_sq(w: &[Complex64]) -> f64 {
        w.iter().map(|z| z.norm_sqr()).sum()
    }

    #[test]
    fn reconstruction_and_count() {
        let (_, op, dec) = setup(2.0, 0.1);
        let n = op.dim();
        assert_eq!(dec.dim(), n);
        let a = op.dense_matrix();
        let mut vlv = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            let v = dec.eigenvector(k);
            vlv += dec.eigenvalues()[k] * &v * v.transpose();
        }
        assert!((&a - &vlv).norm() <= 1e-9 * a.norm());
    }

    #[test]
    fn projector_algebra_on_random_fields() {
        let (mesh, op, dec) = setup(3.0, 0.1);
        let basis = constraint_basis(&mesh).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let u = basis.random_spinor(&mut rng);
            let w = u.to_weighted();
            let up = dec.project_weighted(&w, SpectralSign::Plus);
            let um = dec.project_weighted(&w, SpectralSign::Minus);
            // complementarity
            let sum_err: f64 = w
                .iter()
                .zip(up.iter().zip(&um))
                .map(|(w, (a, b))| (w - a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(sum_err <= 1e-10 * wnorm_sq(&w).sqrt());
            // idempotence
            let upp = dec.project_weighted(&up, SpectralSign::Plus);
            let ip_err: f64 = up
                .iter()
                .zip(&upp)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(ip_err <= 1e-10 * wnorm_sq(&up).sqrt().max(1e-30));
            // cross projection vanishes
            let upm = dec.project_weighted(&up, SpectralSign::Minus);
            assert!(wnorm_sq(&upm).sqrt() <= 1e-10 * wnorm_sq(&up).sqrt().max(1e-30));
            // L2 orthogonality
            let dot: Complex64 = up.iter().zip(&um).map(|(a, b)| a.conj() * b).sum();
            assert!(dot.norm() <= 1e-10 * wnorm_sq(&w));
            // c-norm pythagoras and the gap lower bound
            let cn = dec.c_norm_weighted(&w);
            let cp = dec.c_norm_weighted(&up);
            let cm = dec.c_norm_weighted(&um);
            assert!((cn * cn - cp * cp - cm * cm).abs() <= 1e-10 * cn * cn);
            assert!(cn * cn >= op.gap_edge() * wnorm_sq(&w) * (1.0 - 1e-12));
        }
    }

    #[test]
    fn eigenvector_projection_and_cnorm() {
        let (_, _, dec) = setup(2.0, 0.1);
        let k = dec.positive_indices().next().unwrap();
        let v = dec.eigenvector(k);
        let vc: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let plus = dec.project_weighted(&vc, SpectralSign::Plus);
        let minus = dec.project_weighted(&vc, SpectralSign::Minus);
        let perr: f64 = plus.iter().zip(&vc).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(perr < 1e-10);
        assert!(wnorm_sq(&minus).sqrt() < 1e-10);
        let cn = dec.c_norm_weighted(&vc);
        assert!((cn * cn - dec.eigenvalues()[k].abs()).abs() < 1e-10);
    }

    #[test]
    fn sine_test_function_projector_bounds() {
        // φ = (φ¹, 0) with the normalized Dirichlet sine on the core edge;
        // the negative part and the c-norm of the positive part obey the
        // closed-form bounds with b = π².
        let g = line_graph(1.0);
        let mesh = Arc::new(Mesh::build(&g, 0.01, 2.0).unwrap());
        let basis = constraint_basis(&mesh).unwrap();
        let (m, c) = (1.0, 10.0);
        let op = assemble_dirac(&mesh, &basis, m, c).unwrap();
        let dec = eigendecompose(&op).unwrap();
        let mut phi1 = ScalarField::from_edge_fn(&mesh, |e, x| {
            if mesh.edge_mesh(e).is_core {
                (2.0f64).sqrt() * (PI * x).sin()
            } else {
                0.0
            }
        });
        phi1.normalize_mass(1.0);
        let phi = crate::field::SpinorField::from_scalar(&phi1);
        let w = phi.to_weighted();
        let b = PI * PI;
        let plus = dec.project_weighted(&w, SpectralSign::Plus);
        let wm: Vec<Complex64> = w.iter().zip(&plus).map(|(a, b)| a - b).collect();
        let mnorm_sq = wnorm_sq(&wm);
        assert!(
            mnorm_sq <= b / (2.0 * m * m * c * c),
            "negative part {mnorm_sq} vs bound {}",
            b / (2.0 * m * m * c * c)
        );
        let cplus = dec.c_norm_weighted(&plus);
        assert!(
            cplus * cplus >= m * c * c - b / (2.0 * m),
            "c-norm of positive part {} vs lower bound {}",
            cplus * cplus,
            m * c * c - b / (2.0 * m)
        );
    }

    #[test]
    fn component_split_h1_bound() {
        // ‖u±‖_{H¹}² ≤ m²c²·‖u‖_{H¹}² for c ≥ 1/m, exactly in the discrete
        // chain (operator identity + orthogonal splitting).
        let g = line_graph(1.0);
        let mesh = Arc::new(Mesh::build(&g, 0.05, 2.0).unwrap());
        let basis = constraint_basis(&mesh).unwrap();
        let (m, c) = (1.0, 10.0);
        let op = assemble_dirac(&mesh, &basis, m, c).unwrap();
        let dec = eigendecompose(&op).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let u = basis.random_spinor(&mut rng);
            let w = u.to_weighted();
            let uh1 = {
                let l2 = u.norm(NormKind::L2, Region::Graph);
                let d = u.derivative_sq(Region::Graph);
                l2 * l2 + d
            };
            for sign in [SpectralSign::Plus, SpectralSign::Minus] {
                let wp = dec.project_weighted(&w, sign);
                let up = crate::field::SpinorField::from_weighted(&mesh, &wp);
                let l2 = up.norm(NormKind::L2, Region::Graph);
                let ph1 = l2 * l2 + up.derivative_sq(Region::Graph);
                assert!(
                    ph1 <= m * m * c * c * uh1 * (1.0 + 1e-8),
                    "split H1 {ph1} vs {}",
                    m * m * c * c * uh1
                );
            }
        }
    }

    #[test]
    fn dirichlet_interval_lanczos_eigenvalues() {
        let g = interval_graph(1.0);
        let mesh = Arc::new(Mesh::build(&g, 0.002, 1.0).unwrap());
        let op = crate::operators::assemble_schrodinger_dirichlet(
            &mesh,
            &[crate::graph::VertexId(0), crate::graph::VertexId(1)],
        );
        let eigs = smallest_dirichlet_eigenvalues(&op, 4, 3).unwrap();
        for (k, lam) in eigs.iter().enumerate() {
            let exact = ((k + 1) as f64 * PI).powi(2);
            assert!(
                (lam - exact).abs() < 2e-4 * exact,
                "eig {k}: {lam} vs {exact}"
            );
        }
    }

    #[test]
    fn windowed_path_matches_dense() {
        let g = interval_graph(1.0);
        let mesh = Arc::new(Mesh::build(&g, 0.02, 1.0).unwrap());
        let basis = constraint_basis(&mesh).unwrap();
        let op = assemble_dirac(&mesh, &basis, 1.0, 1.5).unwrap();
        let dec = eigendecompose(&op).unwrap();
        let win = eigendecompose_window(&op, 5.0, 99).unwrap();
        // every dense eigenvalue inside the window appears once
        let edge = win.window_edge();
        let dense_in: Vec<f64> = dec
            .eigenvalues()
            .iter()
            .cloned()
            .filter(|v| v.abs() <= edge / (1.0 + 1e-9))
            .collect();
        assert!(!dense_in.is_empty());
        assert_eq!(
            dense_in.len(),
            win.window_eigenvalues()
                .iter()
                .filter(|v| v.abs() <= edge / (1.0 + 1e-9))
                .count(),
            "window eig count"
        );
        for (a, b) in dense_in.iter().zip(win.window_eigenvalues()) {
            assert!((a - b).abs() < 1e-7 * a.abs().max(1.0), "{a} vs {b}");
        }
        // projections agree on a random field
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let u = basis.random_spinor_real(&mut rng);
        let w = u.to_weighted_real().unwrap();
        let pd = dec.project_weighted_real(&w, SpectralSign::Plus);
        let pw = win.project_weighted_real(&w, SpectralSign::Plus);
        let err: f64 = pd.iter().zip(&pw).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let nrm: f64 = pd.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(err <= 1e-7 * nrm, "projection error {err} vs {nrm}");
        // and the c-norm agrees
        let cd = dec.c_norm_weighted_real(&w);
        let cw = win.c_norm_weighted_real(&w);
        assert!((cd - cw).abs() <= 1e-7 * cd, "c-norm {cd} vs {cw}");
    }
}
