//! Staggered meshes on metric graphs.
//!
//! Each edge carries a uniform grid of `n` cells: component-1 values live on
//! the `n + 1` nodes, component-2 values on the `n` cell midpoints. Node
//! degrees of freedom are *reduced*: endpoint nodes of all edges meeting at a
//! vertex share a single DOF (continuity), and the artificial far-end node of
//! a truncated half-line is dropped (homogeneous Dirichlet). Quadrature is
//! trapezoidal on nodes and midpoint on cells, which makes the staggered
//! difference and its adjoint an exact summation-by-parts pair.

use crate::graph::{EdgeId, EdgeKind, MetricGraph, VertexId};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("edge {edge} would have fewer than 3 nodes at spacing {h} (length {len})")]
    SpacingTooCoarse { edge: usize, h: f64, len: f64 },
    #[error("mesh spacing must be positive, got {0}")]
    NonPositiveSpacing(f64),
    #[error("truncation length must be positive, got {0}")]
    NonPositiveTruncation(f64),
}

/// Where a raw per-edge node value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeDof {
    /// Index into the reduced node vector.
    Reduced(usize),
    /// Dirichlet far end of a truncated half-line: the value is zero.
    Dropped,
}

/// Grid data for one edge.
#[derive(Debug, Clone)]
pub struct EdgeMesh {
    pub edge: EdgeId,
    /// Number of cells (midpoints); nodes are `cells + 1`.
    pub cells: usize,
    /// Actual spacing after snapping the edge length to an integer cell count.
    pub h: f64,
    /// Meshed length: the edge length, or the truncation length for half-lines.
    pub len: f64,
    /// Reduced DOF of each of the `cells + 1` nodes, in edge order.
    pub node_map: Vec<NodeDof>,
    /// Global index of midpoint 0; midpoint `j` is `mid_offset + j`.
    pub mid_offset: usize,
    /// True for bounded edges (cells belong to the compact core).
    pub is_core: bool,
}

/// What a reduced node DOF represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Vertex(VertexId),
    Interior { edge: EdgeId, node: usize },
}

/// Staggered mesh over a whole graph.
#[derive(Debug, Clone)]
pub struct Mesh {
    graph: MetricGraph,
    edge_meshes: Vec<EdgeMesh>,
    /// Trapezoid weight of each reduced node over the whole graph.
    node_weight: Vec<f64>,
    /// Trapezoid weight restricted to core edges (zero off the core).
    node_core_weight: Vec<f64>,
    node_kind: Vec<NodeKind>,
    /// Reduced node DOF of each graph vertex.
    vertex_node: Vec<usize>,
    /// Cell length of each midpoint DOF.
    mid_weights: Vec<f64>,
    /// True for midpoints of core (bounded) edges.
    mid_core: Vec<bool>,
    target_h: f64,
    trunc_len: f64,
}

impl Mesh {
    pub fn graph(&self) -> &MetricGraph {
        &self.graph
    }

    pub fn edge_meshes(&self) -> &[EdgeMesh] {
        &self.edge_meshes
    }

    pub fn edge_mesh(&self, e: EdgeId) -> &EdgeMesh {
        &self.edge_meshes[e.0]
    }

    /// Number of reduced node DOFs (component 1).
    pub fn node_count(&self) -> usize {
        self.node_weight.len()
    }

    /// Number of midpoint DOFs (component 2).
    pub fn mid_count(&self) -> usize {
        self.mid_weights.len()
    }

    pub fn mid_weights(&self) -> &[f64] {
        &self.mid_weights
    }

    /// True when global midpoint `m` lies on a core edge.
    pub fn mid_is_core(&self, m: usize) -> bool {
        self.mid_core[m]
    }

    pub fn node_weight(&self, i: usize) -> f64 {
        self.node_weight[i]
    }

    pub fn node_weights(&self) -> &[f64] {
        &self.node_weight
    }

    pub fn node_core_weight(&self, i: usize) -> f64 {
        self.node_core_weight[i]
    }

    pub fn core_node_weights(&self) -> &[f64] {
        &self.node_core_weight
    }

    pub fn node_kind(&self, i: usize) -> NodeKind {
        self.node_kind[i]
    }

    pub fn vertex_node(&self, v: VertexId) -> usize {
        self.vertex_node[v.0]
    }

    pub fn target_spacing(&self) -> f64 {
        self.target_h
    }

    pub fn truncation_length(&self) -> f64 {
        self.trunc_len
    }

    /// Sum of all cell lengths (equals |K| + N·L up to round-off).
    pub fn total_length(&self) -> f64 {
        self.edge_meshes.iter().map(|em| em.cells as f64 * em.h).sum()
    }

    /// Build a staggered mesh with target spacing `h`, truncating half-lines
    /// at length `trunc_len`.
    pub fn build(graph: &MetricGraph, h: f64, trunc_len: f64) -> Result<Mesh, MeshError> {
        if !(h > 0.0) {
            return Err(MeshError::NonPositiveSpacing(h));
        }
        if !(trunc_len > 0.0) {
            return Err(MeshError::NonPositiveTruncation(trunc_len));
        }

        // One reduced DOF per vertex, created up front.
        let mut node_weight: Vec<f64> = vec![0.0; graph.vertex_count()];
        let mut node_core_weight: Vec<f64> = vec![0.0; graph.vertex_count()];
        let mut node_kind: Vec<NodeKind> =
            (0..graph.vertex_count()).map(|i| NodeKind::Vertex(VertexId(i))).collect();
        let vertex_node: Vec<usize> = (0..graph.vertex_count()).collect();

        let mut edge_meshes = Vec::with_capacity(graph.edges().len());
        let mut mid_weights: Vec<f64> = Vec::new();
        let mut mid_core: Vec<bool> = Vec::new();

        for (ei, edge) in graph.edges().iter().enumerate() {
            let (len, is_core) = match edge.kind {
                EdgeKind::Bounded { len } => (len, true),
                EdgeKind::HalfLine => (trunc_len, false),
            };
            let cells = (len / h).round() as usize;
            if cells < 2 {
                return Err(MeshError::SpacingTooCoarse { edge: ei, h, len });
            }
            let he = len / cells as f64;

            let mut node_map = Vec::with_capacity(cells + 1);
            for j in 0..=cells {
                let dof = if j == 0 {
                    NodeDof::Reduced(vertex_node[edge.from.0])
                } else if j == cells {
                    match edge.to {
                        Some(v) => NodeDof::Reduced(vertex_node[v.0]),
                        None => NodeDof::Dropped,
                    }
                } else {
                    let idx = node_weight.len();
                    node_weight.push(he);
                    node_core_weight.push(if is_core { he } else { 0.0 });
                    node_kind.push(NodeKind::Interior { edge: EdgeId(ei), node: j });
                    NodeDof::Reduced(idx)
                };
                // endpoint slots contribute half a cell of trapezoid weight
                // to their vertex DOF; a self-loop contributes from both ends
                if j == 0 || j == cells {
                    if let NodeDof::Reduced(idx) = dof {
                        node_weight[idx] += 0.5 * he;
                        if is_core {
                            node_core_weight[idx] += 0.5 * he;
                        }
                    }
                }
                node_map.push(dof);
            }

            edge_meshes.push(EdgeMesh {
                edge: EdgeId(ei),
                cells,
                h: he,
                len,
                node_map,
                mid_offset: mid_weights.len(),
                is_core,
            });
            mid_weights.extend(std::iter::repeat(he).take(cells));
            mid_core.extend(std::iter::repeat(is_core).take(cells));
        }

        Ok(Mesh {
            graph: graph.clone(),
            edge_meshes,
            node_weight,
            node_core_weight,
            node_kind,
            vertex_node,
            mid_weights,
            mid_core,
            target_h: h,
            trunc_len,
        })
    }

    /// Midpoint weight (cell length) of global midpoint `m`.
    pub fn mid_weight(&self, m: usize) -> f64 {
        self.mid_weights[m]
    }

    /// Shortest-path distance from the point at arclength `x0` along `edge`
    /// to every node, measured through the graph. Used to build radially
    /// decaying seed and test fields.
    pub fn distances_from(&self, edge: crate::graph::EdgeId, x0: f64) -> Vec<f64> {
        let nv = self.graph.vertex_count();
        // vertex-to-vertex Dijkstra seeded by the two ends of the base edge
        let em0 = self.edge_mesh(edge);
        let e0 = self.graph.edge(edge);
        let mut vdist = vec![f64::INFINITY; nv];
        let mut heap = std::collections::BinaryHeap::new();
        let push = |heap: &mut std::collections::BinaryHeap<_>, v: usize, d: f64, vdist: &mut Vec<f64>| {
            if d < vdist[v] {
                vdist[v] = d;
                heap.push(std::cmp::Reverse((ordered_float(d), v)));
            }
        };
        push(&mut heap, e0.from.0, x0, &mut vdist);
        if let Some(to) = e0.to {
            push(&mut heap, to.0, (em0.len - x0).abs(), &mut vdist);
        }
        while let Some(std::cmp::Reverse((d, v))) = heap.pop() {
            let d = d.0;
            if d > vdist[v] {
                continue;
            }
            for (e, at_end) in self.graph.incident_slots(crate::graph::VertexId(v)) {
                let ee = self.graph.edge(e);
                if let Some(len) = ee.length() {
                    let other = if at_end { ee.from.0 } else { ee.to.unwrap().0 };
                    push(&mut heap, other, d + len, &mut vdist);
                }
            }
        }
        // node distances per edge: through either endpoint, or along the
        // base edge directly
        let mut out = vec![f64::INFINITY; self.node_count()];
        for em in &self.edge_meshes {
            let e = self.graph.edge(em.edge);
            let d_from = vdist[e.from.0];
            let d_to = e.to.map(|v| vdist[v.0]).unwrap_or(f64::INFINITY);
            for (j, dof) in em.node_map.iter().enumerate() {
                if let NodeDof::Reduced(i) = dof {
                    let x = j as f64 * em.h;
                    let mut d = (d_from + x).min(d_to + (em.len - x));
                    if em.edge == edge {
                        d = d.min((x - x0).abs());
                    }
                    out[*i] = out[*i].min(d);
                }
            }
        }
        out
    }

    /// Staggered difference of a reduced node field, evaluated at midpoints:
    /// `(u[j+1] - u[j]) / h` per cell, with dropped nodes read as zero.
    pub fn gradient_mids<T: Scalar>(&self, nodes: &[T]) -> Vec<T> {
        let read = |dof: NodeDof| -> T {
            match dof {
                NodeDof::Reduced(i) => nodes[i],
                NodeDof::Dropped => T::zero(),
            }
        };
        let mut out = vec![T::zero(); self.mid_count()];
        for em in &self.edge_meshes {
            let inv_h = 1.0 / em.h;
            for j in 0..em.cells {
                let a = read(em.node_map[j]);
                let b = read(em.node_map[j + 1]);
                out[em.mid_offset + j] = (b - a).scale(inv_h);
            }
        }
        out
    }

    /// Quadrature adjoint of [`Mesh::gradient_mids`]: the derivative of a
    /// midpoint field evaluated at reduced nodes, defined by
    /// `⟨div v, u⟩_nodes = -⟨v, grad u⟩_mids` for all node fields `u`.
    pub fn divergence_nodes<T: Scalar>(&self, mids: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.node_count()];
        for em in &self.edge_meshes {
            for j in 0..em.cells {
                let v = mids[em.mid_offset + j];
                if let NodeDof::Reduced(i) = em.node_map[j] {
                    out[i] = out[i] + v;
                }
                if let NodeDof::Reduced(i) = em.node_map[j + 1] {
                    out[i] = out[i] - v;
                }
            }
        }
        for (o, &w) in out.iter_mut().zip(self.node_weight.iter()) {
            *o = o.scale(1.0 / w);
        }
        out
    }
}

/// Total order wrapper for f64 priorities in Dijkstra.
#[derive(PartialEq, PartialOrd)]
struct OrderedF64(f64);
impl Eq for OrderedF64 {}
#[allow(clippy::derive_ord_xor_partial_ord)]
impl Ord for OrderedF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.partial_cmp(other).unwrap_or(std::cmp::Ordering::Equal)
    }
}

fn ordered_float(v: f64) -> OrderedF64 {
    OrderedF64(v)
}

/// Minimal scalar abstraction so the mesh primitives serve both real and
/// complex fields.
pub trait Scalar:
    Copy + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self>
{
    fn zero() -> Self;
    fn scale(self, s: f64) -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

impl Scalar for num_complex::Complex64 {
    fn zero() -> Self {
        num_complex::Complex64::new(0.0, 0.0)
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}
