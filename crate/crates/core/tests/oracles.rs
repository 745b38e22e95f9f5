//! Sanity checks of the test-side oracles against closed forms and against
//! the mesh solvers at coarse resolution.

mod common;

use graphdirac::graph::line_graph;
use graphdirac::mesh::Mesh;
use graphdirac::nlse::{solve_nlse_on_mesh, NlseOptions};
use std::f64::consts::PI;
use std::sync::Arc;

#[test]
fn star_secular_oracle_equal_lengths() {
    let eigs = common::star_dirichlet_eigenvalues(&[1.0, 1.0, 1.0], 6);
    let expect = [
        PI * PI / 4.0,
        PI * PI,
        PI * PI,
        9.0 * PI * PI / 4.0,
        4.0 * PI * PI,
        4.0 * PI * PI,
    ];
    assert_eq!(eigs.len(), 6);
    for (a, b) in eigs.iter().zip(&expect) {
        assert!((a - b).abs() < 1e-9 * b, "{a} vs {b}");
    }
}

#[test]
fn star_secular_oracle_mixed_lengths_match_discrete() {
    // cross-check the transcendental roots against the mesh Laplacian on an
    // asymmetric star
    let lens = [1.0, 0.7, 1.3];
    let eigs = common::star_dirichlet_eigenvalues(&lens, 4);
    let g = graphdirac::graph::star_graph(&lens);
    let mesh = Arc::new(Mesh::build(&g, 1e-3, 1.0).unwrap());
    let tips: Vec<_> =
        (1..=3).map(graphdirac::graph::VertexId).collect();
    let op = graphdirac::operators::assemble_schrodinger_dirichlet(&mesh, &tips);
    let disc = graphdirac::spectral::smallest_dirichlet_eigenvalues(&op, 4, 5).unwrap();
    for (a, b) in eigs.iter().zip(&disc) {
        assert!((a - b).abs() < 5e-4 * a, "oracle {a} vs discrete {b}");
    }
}

#[test]
fn shooting_oracle_matches_coarse_mesh_solver() {
    let (lam, amp) = common::shooting_lambda(2.0, 4.0, 1.0, 1.0).expect("oracle solves");
    assert!(lam < 0.0 && amp > 0.0);
    let g = line_graph(1.0);
    let mesh = Arc::new(Mesh::build(&g, 0.01, 40.0).unwrap());
    let sol = solve_nlse_on_mesh(&mesh, 2.0, 4.0, 1.0, &NlseOptions::default()).unwrap();
    assert!(
        (sol.lambda - lam).abs() < 5e-4,
        "solver {} vs oracle {lam}",
        sol.lambda
    );
}

#[test]
fn shooting_oracle_p3() {
    let (lam, _) = common::shooting_lambda(1.0, 3.0, 1.0, 1.0).expect("oracle solves");
    let g = line_graph(1.0);
    let mesh = Arc::new(Mesh::build(&g, 0.01, 44.0).unwrap());
    let sol = solve_nlse_on_mesh(&mesh, 1.0, 3.0, 1.0, &NlseOptions::default()).unwrap();
    assert!(
        (sol.lambda - lam).abs() < 5e-4,
        "solver {} vs oracle {lam}",
        sol.lambda
    );
}
