//! Discrete fields on a staggered mesh and their quadrature-backed norms.
//!
//! A [`ScalarField`] holds one real value per reduced node. A [`SpinorField`]
//! holds the first component on reduced nodes and the second on cell
//! midpoints, both complex. `L^p` norms and the pointwise modulus |u| are
//! evaluated by the midpoint rule on cells, collocating component 1 via the
//! two-node average; `L^2` uses the native trapezoid/midpoint weights so it
//! stays consistent with the summation-by-parts derivative pair.

use crate::graph::EdgeId;
use crate::mesh::{Mesh, NodeDof};
use num_complex::Complex64;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    L2,
    Lp(f64),
    LInf,
    H1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Graph,
    Core,
}

/// Real scalar field on reduced nodes.
#[derive(Debug, Clone)]
pub struct ScalarField {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
}

/// Two-component complex field: component 1 on reduced nodes, component 2 on
/// cell midpoints.
#[derive(Debug, Clone)]
pub struct SpinorField {
    mesh: Arc<Mesh>,
    comp1: Vec<Complex64>,
    comp2: Vec<Complex64>,
}

impl ScalarField {
    pub fn zeros(mesh: &Arc<Mesh>) -> Self {
        ScalarField { mesh: mesh.clone(), values: vec![0.0; mesh.node_count()] }
    }

    pub fn from_values(mesh: &Arc<Mesh>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), mesh.node_count(), "node value count mismatch");
        ScalarField { mesh: mesh.clone(), values }
    }

    /// Sample `f(edge, x)` at every node; shared vertex nodes take the value
    /// from the last incident edge written (consistent for continuous `f`).
    pub fn from_edge_fn(mesh: &Arc<Mesh>, f: impl Fn(EdgeId, f64) -> f64) -> Self {
        let mut values = vec![0.0; mesh.node_count()];
        for em in mesh.edge_meshes() {
            for (j, dof) in em.node_map.iter().enumerate() {
                if let NodeDof::Reduced(i) = dof {
                    values[*i] = f(em.edge, j as f64 * em.h);
                }
            }
        }
        ScalarField { mesh: mesh.clone(), values }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Cell-average value on cell `j` of an edge (dropped nodes read as 0).
    fn cell_value(&self, em: &crate::mesh::EdgeMesh, j: usize) -> f64 {
        let read = |dof: NodeDof| match dof {
            NodeDof::Reduced(i) => self.values[i],
            NodeDof::Dropped => 0.0,
        };
        0.5 * (read(em.node_map[j]) + read(em.node_map[j + 1]))
    }

    pub fn norm(&self, kind: NormKind, region: Region) -> f64 {
        match kind {
            NormKind::L2 => {
                let w = region_node_weights(&self.mesh, region);
                self.values
                    .iter()
                    .zip(w)
                    .map(|(v, w)| v * v * w)
                    .sum::<f64>()
                    .sqrt()
            }
            NormKind::Lp(p) => {
                assert!(p >= 1.0, "Lp norm needs p >= 1");
                self.lp_integral(p, region).powf(1.0 / p)
            }
            NormKind::LInf => {
                let mut m: f64 = 0.0;
                for (i, v) in self.values.iter().enumerate() {
                    let in_region = match region {
                        Region::Graph => true,
                        Region::Core => self.mesh.node_core_weight(i) > 0.0,
                    };
                    if in_region {
                        m = m.max(v.abs());
                    }
                }
                m
            }
            NormKind::H1 => {
                let l2 = self.norm(NormKind::L2, region);
                let grad = self.mesh.gradient_mids(&self.values);
                let mut d2 = 0.0;
                for (m, g) in grad.iter().enumerate() {
                    if region == Region::Graph || self.mesh.mid_is_core(m) {
                        d2 += g * g * self.mesh.mid_weight(m);
                    }
                }
                (l2 * l2 + d2).sqrt()
            }
        }
    }

    /// ∫ |g|^p over the region by the midpoint rule on cells.
    pub fn lp_integral(&self, p: f64, region: Region) -> f64 {
        let mut acc = 0.0;
        for em in self.mesh.edge_meshes() {
            if region == Region::Core && !em.is_core {
                continue;
            }
            for j in 0..em.cells {
                let v = self.cell_value(em, j).abs();
                if v > 0.0 {
                    acc += em.h * v.powf(p);
                }
            }
        }
        acc
    }

    /// Total length of cells where the cell-average modulus exceeds `eps`.
    pub fn support_measure(&self, eps: f64) -> f64 {
        let mut acc = 0.0;
        for em in self.mesh.edge_meshes() {
            for j in 0..em.cells {
                if self.cell_value(em, j).abs() > eps {
                    acc += em.h;
                }
            }
        }
        acc
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    /// Rescale so the squared L² norm equals `mass`.
    pub fn normalize_mass(&mut self, mass: f64) {
        let n = self.norm(NormKind::L2, Region::Graph);
        assert!(n > 0.0, "cannot normalize the zero field");
        self.scale((mass.sqrt()) / n);
    }
}

impl SpinorField {
    pub fn zeros(mesh: &Arc<Mesh>) -> Self {
        SpinorField {
            mesh: mesh.clone(),
            comp1: vec![Complex64::default(); mesh.node_count()],
            comp2: vec![Complex64::default(); mesh.mid_count()],
        }
    }

    pub fn from_components(
        mesh: &Arc<Mesh>,
        comp1: Vec<Complex64>,
        comp2: Vec<Complex64>,
    ) -> Self {
        assert_eq!(comp1.len(), mesh.node_count(), "component-1 length mismatch");
        assert_eq!(comp2.len(), mesh.mid_count(), "component-2 length mismatch");
        SpinorField { mesh: mesh.clone(), comp1, comp2 }
    }

    /// Spinor with the given real first component and zero second component.
    pub fn from_scalar(scalar: &ScalarField) -> Self {
        let mesh = scalar.mesh().clone();
        let comp1 = scalar.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let comp2 = vec![Complex64::default(); mesh.mid_count()];
        SpinorField { mesh, comp1, comp2 }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn comp1(&self) -> &[Complex64] {
        &self.comp1
    }

    pub fn comp2(&self) -> &[Complex64] {
        &self.comp2
    }

    pub fn comp1_mut(&mut self) -> &mut [Complex64] {
        &mut self.comp1
    }

    pub fn comp2_mut(&mut self) -> &mut [Complex64] {
        &mut self.comp2
    }

    /// Pointwise |u|² on cell `j` of an edge: component 1 collocated by the
    /// two-node average, component 2 native.
    fn cell_modulus_sq(&self, em: &crate::mesh::EdgeMesh, j: usize) -> f64 {
        let read = |dof: NodeDof| match dof {
            NodeDof::Reduced(i) => self.comp1[i],
            NodeDof::Dropped => Complex64::default(),
        };
        let avg1 = 0.5 * (read(em.node_map[j]) + read(em.node_map[j + 1]));
        avg1.norm_sqr() + self.comp2[em.mid_offset + j].norm_sqr()
    }

    pub fn norm(&self, kind: NormKind, region: Region) -> f64 {
        match kind {
            NormKind::L2 => {
                let w1 = region_node_weights(&self.mesh, region);
                let mut acc: f64 = self
                    .comp1
                    .iter()
                    .zip(w1)
                    .map(|(v, w)| v.norm_sqr() * w)
                    .sum();
                for (m, v) in self.comp2.iter().enumerate() {
                    if region == Region::Graph || self.mesh.mid_is_core(m) {
                        acc += v.norm_sqr() * self.mesh.mid_weight(m);
                    }
                }
                acc.sqrt()
            }
            NormKind::Lp(p) => {
                assert!(p >= 1.0, "Lp norm needs p >= 1");
                self.lp_integral(p, region).powf(1.0 / p)
            }
            NormKind::LInf => {
                let mut m: f64 = 0.0;
                for em in self.mesh.edge_meshes() {
                    if region == Region::Core && !em.is_core {
                        continue;
                    }
                    for j in 0..em.cells {
                        m = m.max(self.cell_modulus_sq(em, j).sqrt());
                    }
                }
                m
            }
            NormKind::H1 => {
                let l2 = self.norm(NormKind::L2, region);
                let d = self.derivative_sq(region);
                (l2 * l2 + d).sqrt()
            }
        }
    }

    /// Squared L² norm of the staggered derivative: gradient of component 1
    /// at midpoints plus the adjoint derivative of component 2 at nodes.
    pub fn derivative_sq(&self, region: Region) -> f64 {
        let grad1 = self.mesh.gradient_mids(&self.comp1);
        let div2 = self.mesh.divergence_nodes(&self.comp2);
        let mut acc = 0.0;
        for (m, g) in grad1.iter().enumerate() {
            if region == Region::Graph || self.mesh.mid_is_core(m) {
                acc += g.norm_sqr() * self.mesh.mid_weight(m);
            }
        }
        let w1 = region_node_weights(&self.mesh, region);
        for (d, w) in div2.iter().zip(w1) {
            acc += d.norm_sqr() * w;
        }
        acc
    }

    /// ∫ |u|^p over the region by the midpoint rule on cells.
    pub fn lp_integral(&self, p: f64, region: Region) -> f64 {
        let mut acc = 0.0;
        for em in self.mesh.edge_meshes() {
            if region == Region::Core && !em.is_core {
                continue;
            }
            for j in 0..em.cells {
                let q = self.cell_modulus_sq(em, j);
                if q > 0.0 {
                    acc += em.h * q.powf(0.5 * p);
                }
            }
        }
        acc
    }

    /// Total length of cells where |u| exceeds `eps`.
    pub fn support_measure(&self, eps: f64) -> f64 {
        let mut acc = 0.0;
        for em in self.mesh.edge_meshes() {
            for j in 0..em.cells {
                if self.cell_modulus_sq(em, j).sqrt() > eps {
                    acc += em.h;
                }
            }
        }
        acc
    }

    /// L² norm of the second component alone.
    pub fn comp2_l2(&self) -> f64 {
        self.comp2
            .iter()
            .enumerate()
            .map(|(m, v)| v.norm_sqr() * self.mesh.mid_weight(m))
            .sum::<f64>()
            .sqrt()
    }

    /// H¹ norm of the second component alone (adjoint derivative at nodes).
    pub fn comp2_h1(&self) -> f64 {
        let l2sq: f64 = self
            .comp2
            .iter()
            .enumerate()
            .map(|(m, v)| v.norm_sqr() * self.mesh.mid_weight(m))
            .sum();
        let div2 = self.mesh.divergence_nodes(&self.comp2);
        let dsq: f64 = div2
            .iter()
            .zip(self.mesh.node_weights())
            .map(|(d, w)| d.norm_sqr() * w)
            .sum();
        (l2sq + dsq).sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.comp1 {
            *v *= s;
        }
        for v in &mut self.comp2 {
            *v *= s;
        }
    }

    pub fn normalize_mass(&mut self, mass: f64) {
        let n = self.norm(NormKind::L2, Region::Graph);
        assert!(n > 0.0, "cannot normalize the zero field");
        self.scale(mass.sqrt() / n);
    }

    /// Pack into weighted twisted coordinates: `[√w·u¹, √h·(-i·u²)]`.
    ///
    /// In these coordinates the Euclidean inner product is the L² inner
    /// product and the Dirac operator is a real symmetric matrix.
    pub fn to_weighted(&self) -> Vec<Complex64> {
        let n1 = self.mesh.node_count();
        let n2 = self.mesh.mid_count();
        let mut out = Vec::with_capacity(n1 + n2);
        for (i, v) in self.comp1.iter().enumerate() {
            out.push(v * self.mesh.node_weight(i).sqrt());
        }
        let mi = Complex64::new(0.0, -1.0);
        for (m, v) in self.comp2.iter().enumerate() {
            out.push(mi * v * self.mesh.mid_weight(m).sqrt());
        }
        out
    }

    pub fn from_weighted(mesh: &Arc<Mesh>, w: &[Complex64]) -> Self {
        let n1 = mesh.node_count();
        let n2 = mesh.mid_count();
        assert_eq!(w.len(), n1 + n2, "weighted vector length mismatch");
        let i = Complex64::new(0.0, 1.0);
        let comp1 = (0..n1).map(|k| w[k] / mesh.node_weight(k).sqrt()).collect();
        let comp2 = (0..n2).map(|m| i * w[n1 + m] / mesh.mid_weight(m).sqrt()).collect();
        SpinorField { mesh: mesh.clone(), comp1, comp2 }
    }

    /// Real packing for the real ansatz (u¹ real, u² purely imaginary).
    /// Returns `None` if the field leaves that subspace beyond round-off.
    pub fn to_weighted_real(&self) -> Option<Vec<f64>> {
        let scale = self
            .comp1
            .iter()
            .map(|v| v.norm())
            .chain(self.comp2.iter().map(|v| v.norm()))
            .fold(0.0f64, f64::max)
            .max(1.0);
        let tol = 1e-12 * scale;
        let n1 = self.mesh.node_count();
        let n2 = self.mesh.mid_count();
        let mut out = Vec::with_capacity(n1 + n2);
        for (i, v) in self.comp1.iter().enumerate() {
            if v.im.abs() > tol {
                return None;
            }
            out.push(v.re * self.mesh.node_weight(i).sqrt());
        }
        for (m, v) in self.comp2.iter().enumerate() {
            if v.re.abs() > tol {
                return None;
            }
            out.push(v.im * self.mesh.mid_weight(m).sqrt());
        }
        Some(out)
    }

    pub fn from_weighted_real(mesh: &Arc<Mesh>, w: &[f64]) -> Self {
        let n1 = mesh.node_count();
        let n2 = mesh.mid_count();
        assert_eq!(w.len(), n1 + n2, "weighted vector length mismatch");
        let comp1 = (0..n1)
            .map(|k| Complex64::new(w[k] / mesh.node_weight(k).sqrt(), 0.0))
            .collect();
        let comp2 = (0..n2)
            .map(|m| Complex64::new(0.0, w[n1 + m] / mesh.mid_weight(m).sqrt()))
            .collect();
        SpinorField { mesh: mesh.clone(), comp1, comp2 }
    }

    /// Complex L² inner product ⟨self, other⟩ (conjugate-linear in `self`).
    pub fn inner(&self, other: &SpinorField) -> Complex64 {
        let mut acc = Complex64::default();
        for ((a, b), &w) in self.comp1.iter().zip(&other.comp1).zip(self.mesh.node_weights()) {
            acc += a.conj() * b * w;
        }
        for (m, (a, b)) in self.comp2.iter().zip(&other.comp2).enumerate() {
            acc += a.conj() * b * self.mesh.mid_weight(m);
        }
        acc
    }
}

fn region_node_weights(mesh: &Mesh, region: Region) -> &[f64] {
    match region {
        Region::Graph => mesh.node_weights(),
        Region::Core => mesh.core_node_weights(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{interval_graph, line_graph};
    use std::f64::consts::PI;

    fn sine_field(mesh: &Arc<Mesh>, len: f64) -> ScalarField {
        ScalarField::from_edge_fn(mesh, |e, x| {
            if mesh.edge_mesh(e).is_core {
                (2.0 / len).sqrt() * (PI * x / len).sin()
            } else {
                0.0
            }
        })
    }

    #[test]
    fn constant_on_unit_edge_core_l2() {
        let g = interval_graph(1.0);
        let mesh = Arc::new(Mesh::build(&g, 0.05, 1.0).unwrap());
        let f = ScalarField::from_values(&mesh, vec![1.0; mesh.node_count()]);
        let n = f.norm(NormKind::L2, Region::Core);
        assert!((n - 1.0).abs() < 1e-13);
    }

    #[test]
    fn sine_l2_and_h1_quadrature() {
        let g = interval_graph(1.0);
        let mesh = Arc::new(Mesh::build(&g, 0.01, 1.0).unwrap());
        let f = sine_field(&mesh, 1.0);
        let l2 = f.norm(NormKind::L2, Region::Graph);
        assert!((l2 - 1.0).abs() < 1e-4, "l2 = {l2}");
        let h1 = f.norm(NormKind::H1, Region::Graph);
        let deriv_sq = h1 * h1 - l2 * l2;
        assert!((deriv_sq - PI * PI).abs() < 3e-3, "deriv_sq = {deriv_sq}");
    }

    #[test]
    fn sine_quadrature_second_order() {
        // The trapezoid rule happens to be exact for sin² on these grids, so
        // the h² convergence ratio is measured on ‖φ′‖₂², which carries a
        // genuine O(h²) error; the mass error itself stays at round-off.
        let g = interval_graph(1.0);
        let errs: Vec<f64> = [0.04, 0.02, 0.01]
            .iter()
            .map(|&h| {
                let mesh = Arc::new(Mesh::build(&g, h, 1.0).unwrap());
                let f = sine_field(&mesh, 1.0);
                assert!((f.norm(NormKind::L2, Region::Graph) - 1.0).abs() <= h * h);
                let h1 = f.norm(NormKind::H1, Region::Graph);
                let l2 = f.norm(NormKind::L2, Region::Graph);
                (h1 * h1 - l2 * l2 - PI * PI).abs()
            })
            .collect();
        let r1 = errs[0] / errs[1];
        let r2 = errs[1] / errs[2];
        assert!(r1 > 3.5 && r1 < 4.5, "ratio {r1}");
        assert!(r2 > 3.5 && r2 < 4.5, "ratio {r2}");
    }

    #[test]
    fn norm_monotone_in_region() {
        use rand::{Rng, SeedableRng};
        let g = line_graph(1.0);
        let mesh = Arc::new(Mesh::build(&g, 0.1, 2.0).unwrap());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let vals: Vec<f64> = (0..mesh.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = ScalarField::from_values(&mesh, vals);
            for p in [2.0, 3.0, 4.0] {
                assert!(
                    f.norm(NormKind::Lp(p), Region::Core)
                        <= f.norm(NormKind::Lp(p), Region::Graph) + 1e-15
                );
            }
        }
    }

    #[test]
    fn support_measure_examples() {
        let g = line_graph(1.0);
        let mesh = Arc::new(Mesh::build(&g, 0.05, 2.0).unwrap());
        // tent: 1 on the core, 1 - x on each half-line; each half-line
        // contributes exactly length 1 of support
        let tent = ScalarField::from_edge_fn(&mesh, |e, x| {
            if mesh.edge_mesh(e).is_core {
                1.0
            } else {
                (1.0 - x).max(0.0)
            }
        });
        let s = tent.support_measure(0.0);
        let expect = mesh.graph().core_length() + 2.0;
        assert!((s - expect).abs() < 1e-12, "support {s}");

        let zero = ScalarField::zeros(&mesh);
        assert_eq!(zero.support_measure(0.0), 0.0);

        let sine = sine_field(&mesh, 1.0);
        assert!((sine.support_measure(0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spinor_norms_match_scalar_embedding() {
        let g = interval_graph(1.0);
        let mesh = Arc::new(Mesh::build(&g, 0.02, 1.0).unwrap());
        let f = sine_field(&mesh, 1.0);
        let s = SpinorField::from_scalar(&f);
        let a = f.norm(NormKind::L2, Region::Graph);
        let b = s.norm(NormKind::L2, Region::Graph);
        assert!((a - b).abs() < 1e-13);
        let a = f.norm(NormKind::Lp(4.0), Region::Core);
        let b = s.norm(NormKind::Lp(4.0), Region::Core);
        assert!((a - b).abs() < 1e-13);
    }
}
