//! Metric-graph data model: vertices, bounded edges and half-lines, with the
//! validation rules the rest of the crate relies on (connectedness, a
//! non-empty compact core, well-formed endpoints).

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use thiserror::Error;

/// Index of a vertex inside a [`MetricGraph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId(pub usize);

/// Index of an edge inside a [`MetricGraph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId(pub usize);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// Edge kind: a bounded interval `[0, len]` or a half-line `[0, ∞)` attached
/// at a single vertex. Half-lines are truncated only at meshing time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeKind {
    Bounded { len: f64 },
    HalfLine,
}

/// One edge of the graph. The local coordinate runs from `from` (x = 0)
/// towards `to` (x = len) for bounded edges, and away from `from` for
/// half-lines (`to` is absent). Self-loops (`from == to`) are allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub from: VertexId,
    pub to: Option<VertexId>,
    pub kind: EdgeKind,
}

impl Edge {
    pub fn is_halfline(&self) -> bool {
        matches!(self.kind, EdgeKind::HalfLine)
    }

    pub fn length(&self) -> Option<f64> {
        match self.kind {
            EdgeKind::Bounded { len } => Some(len),
            EdgeKind::HalfLine => None,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    /// No bounded edge: the compact core is empty and the localized
    /// nonlinearity has nowhere to act.
    #[error("graph has no bounded edge (empty compact core)")]
    EmptyCompactCore,
    #[error("graph is not connected")]
    Disconnected,
    #[error("edge {edge} references unknown vertex {vertex:?}")]
    DanglingEndpoint { edge: usize, vertex: String },
    #[error("edge {edge} has non-positive length {len}")]
    NonPositiveLength { edge: usize, len: f64 },
    #[error("graph has no vertices")]
    Empty,
    #[error("invalid graph spec: {0}")]
    BadSpec(String),
}

/// A connected noncompact metric graph with finitely many edges and a
/// non-empty compact core. The compact core is the union of all bounded
/// edges; `core_length` is its total length.
#[derive(Debug, Clone)]
pub struct MetricGraph {
    vertex_names: Vec<String>,
    edges: Vec<Edge>,
    half_line_count: usize,
    core_length: f64,
}

impl MetricGraph {
    pub fn vertex_count(&self) -> usize {
        self.vertex_names.len()
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.vertex_names[v.0]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.0]
    }

    /// Number of half-lines N.
    pub fn half_line_count(&self) -> usize {
        self.half_line_count
    }

    /// Total length |K| of the compact core.
    pub fn core_length(&self) -> f64 {
        self.core_length
    }

    /// Length of the longest bounded edge (the paper's `ℓ_{e0}`).
    pub fn longest_core_edge(&self) -> (EdgeId, f64) {
        let mut best = (EdgeId(0), 0.0);
        for (i, e) in self.edges.iter().enumerate() {
            if let EdgeKind::Bounded { len } = e.kind {
                if len > best.1 {
                    best = (EdgeId(i), len);
                }
            }
        }
        best
    }

    /// Endpoint slots `(edge, end)` incident at `v`. A self-loop contributes
    /// two slots. `end` is false for the x = 0 end, true for the x = ℓ end.
    pub fn incident_slots(&self, v: VertexId) -> Vec<(EdgeId, bool)> {
        let mut slots = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            if e.from == v {
                slots.push((EdgeId(i), false));
            }
            if e.to == Some(v) {
                slots.push((EdgeId(i), true));
            }
        }
        slots
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.incident_slots(v).len()
    }
}

/// On-disk description of a graph. Unknown keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub from: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(default)]
    pub halfline: bool,
}

impl GraphSpec {
    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        serde_json::from_str(text).map_err(|e| GraphError::BadSpec(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph spec serializes")
    }
}

/// Validate a [`GraphSpec`] and build the corresponding [`MetricGraph`].
///
/// Checks the standing assumptions: at least one bounded edge, connectedness,
/// and that every endpoint names an existing vertex.
pub fn build_graph(spec: &GraphSpec) -> Result<MetricGraph, GraphError> {
    if spec.vertices.is_empty() {
        return Err(GraphError::Empty);
    }
    {
        let mut seen = HashSet::new();
        for name in &spec.vertices {
            if !seen.insert(name.as_str()) {
                return Err(GraphError::BadSpec(format!("duplicate vertex id {name:?}")));
            }
        }
    }
    let lookup = |name: &str, edge: usize| -> Result<VertexId, GraphError> {
        spec.vertices
            .iter()
            .position(|v| v == name)
            .map(VertexId)
            .ok_or_else(|| GraphError::DanglingEndpoint { edge, vertex: name.to_string() })
    };

    let mut edges = Vec::with_capacity(spec.edges.len());
    for (i, es) in spec.edges.iter().enumerate() {
        let from = lookup(&es.from, i)?;
        if es.halfline {
            if es.to.is_some() || es.length.is_some() {
                return Err(GraphError::BadSpec(format!(
                    "edge {i}: half-lines take neither \"to\" nor \"length\""
                )));
            }
            edges.push(Edge { from, to: None, kind: EdgeKind::HalfLine });
        } else {
            let to_name = es.to.as_ref().ok_or_else(|| {
                GraphError::BadSpec(format!("edge {i}: bounded edge missing \"to\""))
            })?;
            let to = lookup(to_name, i)?;
            let len = es.length.ok_or_else(|| {
                GraphError::BadSpec(format!("edge {i}: bounded edge missing \"length\""))
            })?;
            if !(len > 0.0) {
                return Err(GraphError::NonPositiveLength { edge: i, len });
            }
            edges.push(Edge { from, to: Some(to), kind: EdgeKind::Bounded { len } });
        }
    }

    let half_line_count = edges.iter().filter(|e| e.is_halfline()).count();
    let core_length: f64 = edges.iter().filter_map(|e| e.length()).sum();
    if core_length == 0.0 {
        return Err(GraphError::EmptyCompactCore);
    }

    // Connectedness over vertices (half-lines add no connectivity).
    let n = spec.vertices.len();
    let mut adj = vec![Vec::new(); n];
    for e in &edges {
        if let Some(to) = e.to {
            adj[e.from.0].push(to.0);
            adj[to.0].push(e.from.0);
        }
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(GraphError::Disconnected);
    }

    Ok(MetricGraph { vertex_names: spec.vertices.clone(), edges, half_line_count, core_length })
}

/// The line graph: one bounded edge of length `len` between two vertices,
/// with one half-line attached at each.
pub fn line_graph(len: f64) -> MetricGraph {
    let spec = GraphSpec {
        vertices: vec!["a".into(), "b".into()],
        edges: vec![
            EdgeSpec { from: "a".into(), to: Some("b".into()), length: Some(len), halfline: false },
            EdgeSpec { from: "a".into(), to: None, length: None, halfline: true },
            EdgeSpec { from: "b".into(), to: None, length: None, halfline: true },
        ],
    };
    build_graph(&spec).expect("line graph is valid")
}

/// A single bounded edge between two degree-1 vertices (a compact interval).
pub fn interval_graph(len: f64) -> MetricGraph {
    let spec = GraphSpec {
        vertices: vec!["a".into(), "b".into()],
        edges: vec![EdgeSpec {
            from: "a".into(),
            to: Some("b".into()),
            length: Some(len),
            halfline: false,
        }],
    };
    build_graph(&spec).expect("interval graph is valid")
}

/// Star of bounded edges glued at a central vertex; tips are degree-1.
pub fn star_graph(lens: &[f64]) -> MetricGraph {
    let mut vertices = vec!["c".into()];
    let mut edges = Vec::new();
    for (i, &len) in lens.iter().enumerate() {
        let tip = format!("t{i}");
        vertices.push(tip.clone());
        edges.push(EdgeSpec { from: "c".into(), to: Some(tip), length: Some(len), halfline: false });
    }
    build_graph(&GraphSpec { vertices, edges }).expect("star graph is valid")
}

/// A noncompact graph in the shape of the paper's example: a 4-cycle of unit
/// edges, a pendant path carrying a unit self-loop, and three half-lines.
pub fn figure_one_graph() -> MetricGraph {
    let v = |s: &str| s.to_string();
    let bounded = |from: &str, to: &str| EdgeSpec {
        from: from.into(),
        to: Some(to.into()),
        length: Some(1.0),
        halfline: false,
    };
    let halfline = |from: &str| EdgeSpec { from: from.into(), to: None, length: None, halfline: true };
    let spec = GraphSpec {
        vertices: vec![v("a"), v("b"), v("c"), v("d"), v("p")],
        edges: vec![
            bounded("a", "b"),
            bounded("b", "c"),
            bounded("c", "d"),
            bounded("d", "a"),
            bounded("b", "p"),
            // self-loop: the "circle" hanging off the pendant vertex
            bounded("p", "p"),
            halfline("a"),
            halfline("c"),
            halfline("d"),
        ],
    };
    build_graph(&spec).expect("figure-one graph is valid")
}
