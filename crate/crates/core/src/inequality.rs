//! Randomized verification of the inequalities the analysis runs on: the
//! support inequality, the Gagliardo–Nirenberg families on the core and the
//! whole graph (in both the form norm and the H¹ norm), and the projector
//! bound for the spectral splitting.
//!
//! Empirical constants are maxima of the corresponding ratios over a seeded
//! ensemble: Gaussian coefficients in the operator eigenbasis with
//! algebraically decaying weights, plus hand-crafted core bumps and vertex
//! spikes, plus the spectral splittings of the ensemble itself (so the
//! projector check downstream uses a constant that covers its own family).
//! A short random hill climb sharpens the maximum.

use crate::field::{Region, SpinorField};
use crate::graph::VertexId;
use crate::mesh::Mesh;
use crate::nlde::GraphConstants;
use crate::operators::{ConstraintBasis, DiracOperator};
use crate::spectral::{SpectralDecomposition, SpectralSign};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InequalityError {
    #[error("projector bound needs c ≥ 1/m; got c = {c}, 1/m = {inv_m}")]
    SpeedBelowInverseMass { c: f64, inv_m: f64 },
    #[error("exponent p = {0} outside (2, 6)")]
    BadExponent(f64),
}

/// Outcome of one randomized inequality suite.
#[derive(Debug, Clone)]
pub struct InequalityReport {
    pub id: String,
    pub samples: usize,
    /// Largest observed LHS/RHS ratio (the empirical constant).
    pub max_ratio: f64,
    /// Must be zero for mathematically guaranteed inequalities.
    pub violations: usize,
    /// Sample index of the ratio maximizer.
    pub worst_witness: Option<usize>,
}

impl InequalityReport {
    /// Merge two partial reports of the same suite.
    pub fn merge(mut self, other: &InequalityReport) -> InequalityReport {
        assert_eq!(self.id, other.id);
        self.samples += other.samples;
        self.violations += other.violations;
        if other.max_ratio > self.max_ratio {
            self.max_ratio = other.max_ratio;
            self.worst_witness = other.worst_witness;
        }
        self
    }
}

/// Empirical Gagliardo–Nirenberg constants for one (mesh, c, p).
#[derive(Debug, Clone, Copy)]
pub struct GnConstants {
    /// ∫_K|u|^p ≤ C_{p,K} ‖u‖_c^{p-2} ‖u‖₂².
    pub c_p_core: f64,
    /// ∫_G|u|^p ≤ C_{p,G} ‖u‖_c^{p-2} ‖u‖₂².
    pub c_p_graph: f64,
    /// ∫_K|u|^p ≤ S_{p,K} ‖u‖_{H¹}^{p/2-1} ‖u‖₂^{p/2+1}.
    pub s_p_core: f64,
    /// ‖u‖_{L∞(K)} ≤ S_{∞,K} ‖u‖_{H¹}^{1/2} ‖u‖₂^{1/2}.
    pub s_inf_core: f64,
    /// ∫_K|u|^{2p-2} ≤ S_{2p-2,K} ‖u‖_{H¹}^{p-2} ‖u‖₂^{p}.
    pub s_2p2_core: f64,
}

impl GnConstants {
    /// Constants for the a priori bound, inflated by `factor` (the bound
    /// needs over-estimates; empirical maxima are under-estimates).
    pub fn with_safety(&self, factor: f64) -> GraphConstants {
        GraphConstants { s_p_core: factor * self.s_p_core, s_inf_core: factor * self.s_inf_core }
    }
}

fn h1_norm_sq(u: &SpinorField) -> f64 {
    let l2 = u.norm(crate::field::NormKind::L2, Region::Graph);
    l2 * l2 + u.derivative_sq(Region::Graph)
}

/// Ensemble generator over the discrete operator domain.
pub struct FieldSampler<'a> {
    basis: &'a ConstraintBasis,
    dec: &'a SpectralDecomposition,
    rng: ChaCha8Rng,
    /// |ν|-ascending ordering of the eigenbasis, for decaying weights.
    order: Vec<usize>,
}

/// Modes drawn per eigen-sample; fixed so the same seed produces the same
/// continuum field on different meshes.
const SAMPLE_MODES: usize = 160;

impl<'a> FieldSampler<'a> {
    pub fn new(basis: &'a ConstraintBasis, dec: &'a SpectralDecomposition, seed: u64) -> Self {
        let mut order: Vec<usize> = (0..dec.dim()).collect();
        // |ν| ascending with a deterministic sign tie-break: stable across
        // mesh refinements
        order.sort_by(|&i, &j| {
            let (a, b) = (dec.eigenvalues()[i], dec.eigenvalues()[j]);
            a.abs()
                .partial_cmp(&b.abs())
                .unwrap()
                .then(a.partial_cmp(&b).unwrap())
        });
        FieldSampler { basis, dec, rng: ChaCha8Rng::seed_from_u64(seed), order }
    }

    fn mesh(&self) -> &Arc<Mesh> {
        self.basis.mesh()
    }

    /// Gaussian coefficients on the lowest modes with weights decaying in
    /// the physical frequency |ν|/mc², projected onto the constraint
    /// subspace so the sample lies in the domain. Mode count and weights are
    /// mesh-independent, which keeps the ensemble stable under refinement.
    fn eigen_sample(&mut self) -> SpinorField {
        use rand_distr::StandardNormal;
        let n = self.dec.dim();
        let gap = self.dec.gap_edge();
        let mut coeffs = vec![0.0; n];
        for &k in self.order.iter().take(SAMPLE_MODES.min(n)) {
            let w = (gap / self.dec.eigenvalues()[k].abs()).powf(1.5);
            let g: f64 = self.rng.sample(StandardNormal);
            coeffs[k] = w * g;
        }
        let w = self.dec.reconstruct_real(&coeffs);
        let r = self.basis.project(&w);
        let lifted = self.basis.lift(&r);
        SpinorField::from_weighted_real(self.mesh(), &lifted)
    }

    /// Gaussian bump of width `s` centred on a random core point, first
    /// component only, projected into the domain.
    fn core_bump(&mut self) -> SpinorField {
        let mesh = self.mesh().clone();
        let core_edges: Vec<_> =
            mesh.edge_meshes().iter().filter(|em| em.is_core).map(|em| em.edge).collect();
        let e = core_edges[self.rng.gen_range(0..core_edges.len())];
        let em = mesh.edge_mesh(e);
        let x0 = self.rng.gen_range(0.0..em.len);
        // width range independent of the mesh so refinements see the same
        // continuum bumps
        let s = self.rng.gen_range(0.06..0.3) * em.len;
        let dist = mesh.distances_from(e, x0);
        let vals: Vec<Complex64> = dist
            .iter()
            .map(|&d| Complex64::new((-(d / s) * (d / s)).exp(), 0.0))
            .collect();
        let comp2 = vec![Complex64::default(); mesh.mid_count()];
        let u = SpinorField::from_components(&mesh, vals, comp2);
        self.into_domain(u)
    }

    /// Exponential spike hanging off a random vertex, on both components.
    fn vertex_spike(&mut self) -> SpinorField {
        let mesh = self.mesh().clone();
        let v = VertexId(self.rng.gen_range(0..mesh.graph().vertex_count()));
        let vi = mesh.vertex_node(v);
        // distance from the vertex through the graph: reuse distances_from on
        // an incident edge at its vertex end
        let (e, at_end) = mesh.graph().incident_slots(v)[0];
        let x0 = if at_end { mesh.edge_mesh(e).len } else { 0.0 };
        let dist = mesh.distances_from(e, x0);
        let s: f64 = self.rng.gen_range(0.15..0.6);
        let amp2: f64 = self.rng.gen_range(-1.0..1.0);
        let vals: Vec<Complex64> =
            dist.iter().map(|&d| Complex64::new((-d / s).exp(), 0.0)).collect();
        let grad = mesh.gradient_mids(&vals);
        let comp2: Vec<Complex64> = grad.iter().map(|g| g * Complex64::new(0.0, amp2 * s)).collect();
        let mut u = SpinorField::from_components(&mesh, vals, comp2);
        let _ = vi;
        u.normalize_mass(1.0);
        self.into_domain(u)
    }

    fn into_domain(&self, u: SpinorField) -> SpinorField {
        let w = u.to_weighted();
        let re: Vec<f64> = w.iter().map(|z| z.re).collect();
        let im: Vec<f64> = w.iter().map(|z| z.im).collect();
        let lre = self.basis.lift(&self.basis.project(&re));
        let lim = self.basis.lift(&self.basis.project(&im));
        let back: Vec<Complex64> =
            lre.iter().zip(&lim).map(|(&a, &b)| Complex64::new(a, b)).collect();
        SpinorField::from_weighted(self.mesh(), &back)
    }

    /// One sample of the mixed ensemble.
    pub fn sample(&mut self, index: usize) -> SpinorField {
        match index % 5 {
            0 | 1 | 2 => self.eigen_sample(),
            3 => self.core_bump(),
            _ => self.vertex_spike(),
        }
    }
}

/// ∫_G |u|^p ≥ |supp u|^{1−p/2} (∫_G |u|²)^{p/2} over random compactly
/// supported fields; both sides use the cell quadrature, under which the
/// inequality is a discrete Jensen inequality and violations are impossible.
pub fn check_support_inequality(
    mesh: &Arc<Mesh>,
    p: f64,
    samples: usize,
    seed: u64,
) -> Result<InequalityReport, InequalityError> {
    if !(p > 2.0) {
        return Err(InequalityError::BadExponent(p));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = InequalityReport {
        id: format!("support_p{p}"),
        samples: 0,
        max_ratio: 0.0,
        violations: 0,
        worst_witness: None,
    };
    for k in 0..samples {
        // random bump: nonzero only on a bounded window of each edge
        let mut u = SpinorField::zeros(mesh);
        for em in mesh.edge_meshes() {
            let keep = if em.is_core {
                em.cells
            } else {
                rng.gen_range(0..=em.cells / 2)
            };
            let active = rng.gen_bool(0.8);
            for j in 0..keep {
                if !active {
                    break;
                }
                if rng.gen_bool(0.85) {
                    u.comp2_mut()[em.mid_offset + j] =
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
            for (j, dof) in em.node_map.iter().enumerate() {
                if j <= keep && active {
                    if let crate::mesh::NodeDof::Reduced(i) = dof {
                        u.comp1_mut()[*i] =
                            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    }
                }
            }
        }
        let scale: f64 = 10f64.powf(rng.gen_range(-3.0..3.0));
        u.scale(scale);
        let supp = u.support_measure(0.0);
        if supp == 0.0 {
            continue;
        }
        let lhs = u.lp_integral(p, Region::Graph);
        let l2sq = u.lp_integral(2.0, Region::Graph);
        let rhs = supp.powf(1.0 - 0.5 * p) * l2sq.powf(0.5 * p);
        report.samples += 1;
        if lhs < rhs * (1.0 - 1e-10) {
            report.violations += 1;
        }
        let ratio = rhs / lhs.max(1e-300);
        if ratio > report.max_ratio {
            report.max_ratio = ratio;
            report.worst_witness = Some(k);
        }
    }
    Ok(report)
}

fn gn_ratios(u: &SpinorField, dec: &SpectralDecomposition, p: f64) -> Option<[f64; 5]> {
    let l2 = u.norm(crate::field::NormKind::L2, Region::Graph);
    if l2 < 1e-12 {
        return None;
    }
    let cn = dec.c_norm_weighted(&u.to_weighted());
    let h1 = h1_norm_sq(u).sqrt();
    let lp_core = u.lp_integral(p, Region::Core);
    let lp_graph = u.lp_integral(p, Region::Graph);
    let linf_core = u.norm(crate::field::NormKind::LInf, Region::Core);
    let l2p2_core = u.lp_integral(2.0 * p - 2.0, Region::Core);
    Some([
        lp_core / (cn.powf(p - 2.0) * l2 * l2),
        lp_graph / (cn.powf(p - 2.0) * l2 * l2),
        lp_core / (h1.powf(0.5 * p - 1.0) * l2.powf(0.5 * p + 1.0)),
        linf_core / (h1.sqrt() * l2.sqrt()),
        l2p2_core / (h1.powf(p - 2.0) * l2.powf(p)),
    ])
}

/// Estimate the Gagliardo–Nirenberg constants over the mixed ensemble
/// (including the spectral splittings of every sample) and report the
/// monotonicity check ∫_K ≤ ∫_G per sample.
pub fn estimate_gn_constants(
    op: &DiracOperator,
    dec: &SpectralDecomposition,
    basis: &ConstraintBasis,
    p: f64,
    samples: usize,
    seed: u64,
) -> Result<(GnConstants, InequalityReport), InequalityError> {
    if !(p > 2.0 && p < 6.0) {
        return Err(InequalityError::BadExponent(p));
    }
    let mesh = op.mesh();
    let mut sampler = FieldSampler::new(basis, dec, seed);
    let mut maxima = [0.0f64; 5];
    let mut witness = [None; 5];
    let mut monotone = InequalityReport {
        id: format!("core_vs_graph_p{p}"),
        samples: 0,
        max_ratio: 0.0,
        violations: 0,
        worst_witness: None,
    };
    let mut best_field: Option<SpinorField> = None;
    for k in 0..samples {
        let u = sampler.sample(k);
        let lp_core = u.lp_integral(p, Region::Core);
        let lp_graph = u.lp_integral(p, Region::Graph);
        monotone.samples += 1;
        if lp_core > lp_graph * (1.0 + 1e-12) {
            monotone.violations += 1;
        }
        let r = lp_core / lp_graph.max(1e-300);
        if r > monotone.max_ratio {
            monotone.max_ratio = r;
            monotone.worst_witness = Some(k);
        }
        let mut fields = vec![u];
        {
            let w = fields[0].to_weighted();
            for sign in [SpectralSign::Plus, SpectralSign::Minus] {
                let proj = dec.project_weighted(&w, sign);
                fields.push(SpinorField::from_weighted(mesh, &proj));
            }
        }
        for f in &fields {
            if let Some(rs) = gn_ratios(f, dec, p) {
                for (i, &r) in rs.iter().enumerate() {
                    if r.is_finite() && r > maxima[i] {
                        maxima[i] = r;
                        witness[i] = Some(k);
                        if i == 2 {
                            best_field = Some(f.clone());
                        }
                    }
                }
            }
        }
    }

    // local ascent refinement of the dominant H¹ ratio from its maximizer,
    // perturbing low eigen-coefficients (mesh-stable directions)
    if let Some(u) = best_field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut order: Vec<usize> = (0..dec.dim()).collect();
        order.sort_by(|&i, &j| {
            let (a, b) = (dec.eigenvalues()[i], dec.eigenvalues()[j]);
            a.abs().partial_cmp(&b.abs()).unwrap().then(a.partial_cmp(&b).unwrap())
        });
        let w = u.to_weighted();
        let mut coeffs: Vec<f64> = dec.coeffs(&w).iter().map(|z| z.re).collect();
        let rebuild = |coeffs: &[f64]| -> SpinorField {
            let w = dec.reconstruct_real(coeffs);
            let lifted = basis.lift(&basis.project(&w));
            SpinorField::from_weighted_real(mesh, &lifted)
        };
        let mut best = gn_ratios(&rebuild(&coeffs), dec, p).map(|r| r[2]).unwrap_or(0.0);
        let scale = coeffs.iter().map(|c| c.abs()).fold(0.0f64, f64::max).max(1e-6);
        let mut step = 0.1 * scale;
        for _ in 0..80 {
            let mut trial = coeffs.clone();
            for &k in order.iter().take(SAMPLE_MODES.min(dec.dim())) {
                trial[k] += rng.gen_range(-step..step);
            }
            if let Some(rs) = gn_ratios(&rebuild(&trial), dec, p) {
                if rs[2] > best {
                    best = rs[2];
                    coeffs = trial;
                    continue;
                }
            }
            step *= 0.8;
        }
        if best > maxima[2] {
            maxima[2] = best;
        }
    }

    Ok((
        GnConstants {
            c_p_core: maxima[0],
            c_p_graph: maxima[1],
            s_p_core: maxima[2],
            s_inf_core: maxima[3],
            s_2p2_core: maxima[4],
        },
        monotone,
    ))
}

/// Projector bound: for c ≥ 1/m and u in the domain,
/// ∫_K|u±|^p ≤ S_{p,K}(mc)^{p/2−1}‖u‖_{H¹}^{p/2−1}‖u±‖₂^{p/2+1}, plus the
/// intermediate step ‖u±‖_{H¹}² ≤ m²c²‖u‖_{H¹}² which is exact in the
/// discrete chain.
pub fn check_projector_bound(
    op: &DiracOperator,
    dec: &SpectralDecomposition,
    basis: &ConstraintBasis,
    p: f64,
    samples: usize,
    seed: u64,
    s_p_core: f64,
) -> Result<InequalityReport, InequalityError> {
    let (m, c) = (op.mass(), op.speed());
    if c < 1.0 / m {
        return Err(InequalityError::SpeedBelowInverseMass { c, inv_m: 1.0 / m });
    }
    if !(p > 2.0 && p < 6.0) {
        return Err(InequalityError::BadExponent(p));
    }
    let mesh = op.mesh();
    let mut sampler = FieldSampler::new(basis, dec, seed);
    let mut report = InequalityReport {
        id: format!("projector_bound_p{p}"),
        samples: 0,
        max_ratio: 0.0,
        violations: 0,
        worst_witness: None,
    };
    for k in 0..samples {
        let u = sampler.sample(k);
        let uh1_sq = h1_norm_sq(&u);
        if uh1_sq < 1e-20 {
            continue;
        }
        let w = u.to_weighted();
        report.samples += 1;
        for sign in [SpectralSign::Plus, SpectralSign::Minus] {
            let proj = dec.project_weighted(&w, sign);
            let up = SpinorField::from_weighted(mesh, &proj);
            let ph1_sq = h1_norm_sq(&up);
            if ph1_sq > m * m * c * c * uh1_sq * (1.0 + 1e-8) {
                report.violations += 1;
            }
            let pl2 = up.norm(crate::field::NormKind::L2, Region::Graph);
            if pl2 < 1e-14 {
                continue;
            }
            let lhs = up.lp_integral(p, Region::Core);
            let rhs = s_p_core
                * (m * c).powf(0.5 * p - 1.0)
                * uh1_sq.sqrt().powf(0.5 * p - 1.0)
                * pl2.powf(0.5 * p + 1.0);
            if lhs > rhs * (1.0 + 1e-10) {
                report.violations += 1;
            }
            let ratio = lhs / rhs.max(1e-300);
            if ratio > report.max_ratio {
                report.max_ratio = ratio;
                report.worst_witness = Some(k);
            }
        }
    }
    Ok(report)
}
