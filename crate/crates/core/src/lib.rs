//! Numerical laboratory for nonlinear Dirac and Schrödinger equations on
//! noncompact metric graphs with a localized nonlinearity.
//!
//! The crate builds staggered-grid discretizations of the Dirac operator with
//! Kirchhoff-type vertex conditions and of the Kirchhoff Laplacian, solves
//! the associated normalized nonlinear eigenvalue problems, and provides the
//! spectral, variational and inequality machinery needed to study the
//! nonrelativistic limit experimentally.

pub mod field;
pub mod linalg;
pub mod operators;
pub mod report;
pub mod spectral;
pub mod graph;
pub mod inequality;
pub mod mesh;
pub mod nlde;
pub mod nlse;

pub use field::{NormKind, Region, ScalarField, SpinorField};
pub use graph::{build_graph, Edge, EdgeId, EdgeKind, GraphError, GraphSpec, MetricGraph, VertexId};
pub use mesh::{Mesh, MeshError};
