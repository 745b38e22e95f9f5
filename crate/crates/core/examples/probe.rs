use graphdirac::mesh::Mesh;
use graphdirac::nlse::{solve_nlse_on_mesh, NlseInit, NlseOptions};
use std::sync::Arc;

fn main() {
    let g = graphdirac::graph::line_graph(1.0);
    for h in [0.00125, 0.0008, 0.0005] {
        let mesh = Arc::new(Mesh::build(&g, h, 32.0).unwrap());
        let t0 = std::time::Instant::now();
        let mut o = NlseOptions::default();
        o.init = NlseInit::Flow;
        match solve_nlse_on_mesh(&mesh, 2.0, 4.0, 1.0, &o) {
            Ok(s) => println!("h={h}: lambda={:.10} res={:.2e} flow={} newton={} [{:.1}s]",
                s.lambda, s.pde_residual, s.flow_iterations, s.newton_iterations, t0.elapsed().as_secs_f64()),
            Err(e) => println!("h={h}: ERR {e} [{:.1}s]", t0.elapsed().as_secs_f64()),
        }
    }
}
