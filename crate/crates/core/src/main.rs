//! Command-line front door for the graph Dirac/Schrödinger laboratory.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use graphdirac::field::{NormKind, Region};
use graphdirac::graph::{build_graph, GraphSpec, MetricGraph};
use graphdirac::inequality::{
    check_projector_bound, check_support_inequality, estimate_gn_constants,
};
use graphdirac::mesh::Mesh;
use graphdirac::nlde::{estimate_ec, initial_guess, solve_nlde, EcFamily, NldeParams};
use graphdirac::nlse::{solve_nlse_multistart, solve_nlse_on_mesh, NlseOptions};
use graphdirac::operators::{assemble_dirac, constraint_basis};
use graphdirac::report::{emit_report, run_sweep, SweepConfig, NLSE_SIGN_CONVENTION};
use graphdirac::spectral::{eigendecompose, eigendecompose_window};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

/// Numerical laboratory for nonlinear Dirac and Schrödinger equations on
/// noncompact metric graphs with a localized nonlinearity.
///
/// Units: edge lengths and the mesh spacing h share one length unit; the
/// speed parameter c is dimensionless relative to it; masses m are in units
/// of energy/c²; frequencies ω and multipliers λ come out in the matching
/// energy units (the spectral gap sits at ±mc²).
#[derive(Parser)]
#[command(name = "graphdirac", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct MeshArgs {
    /// Path to a graph JSON file ({"vertices": [...], "edges": [...]})
    #[arg(long)]
    graph: PathBuf,
    /// Target mesh spacing (length units)
    #[arg(long, default_value_t = 0.02)]
    h: f64,
    /// Truncation length L for half-lines (length units)
    #[arg(long, default_value_t = 20.0)]
    trunc_length: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a graph file and print its invariants
    ValidateGraph {
        /// Path to a graph JSON file
        #[arg(long)]
        graph: PathBuf,
    },
    /// Assemble the Dirac operator and print gap-adjacent eigenvalues
    Spectrum {
        #[command(flatten)]
        mesh: MeshArgs,
        /// Particle mass (energy/c² units)
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        /// Speed parameter c
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// How many eigenvalues to print around the gap
        #[arg(long, default_value_t = 12)]
        count: usize,
        /// Force the windowed shift-invert path regardless of size
        #[arg(long)]
        windowed: bool,
    },
    /// Solve the limit Schrödinger problem with unit mass constraint
    SolveNlse {
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        /// Nonlinearity exponent, 2 < p < 6
        #[arg(long)]
        p: f64,
        /// L² mass of the constraint
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
        /// Restart the flow from every core edge and report all energies
        #[arg(long)]
        multi_start: bool,
    },
    /// Solve the normalized Dirac problem at one value of c
    SolveNlde {
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        c: f64,
    },
    /// Run the nonrelativistic-limit sweep and write CSV/manifest/plot files
    Sweep {
        /// JSON config (keys: graph, m, p, c_list, h, trunc_length, seed, out_dir)
        #[arg(long)]
        config: PathBuf,
    },
    /// Sample the reduced functional along a test-function ray
    EstimateEc {
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        c: f64,
        /// Test family: "sine" or "tent"
        #[arg(long, default_value = "sine")]
        family: String,
        /// Ramp slope for the tent family
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        /// Number of grid intervals on the ray
        #[arg(long, default_value_t = 512)]
        grid: usize,
    },
    /// Run the randomized inequality suites
    CheckInequalities {
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 10.0)]
        c: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// RNG seed for the sample ensemble
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load_graph(path: &PathBuf) -> Result<MetricGraph> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading graph file {}", path.display()))?;
    let spec = GraphSpec::from_json(&text).context("parsing graph JSON")?;
    Ok(build_graph(&spec)?)
}

fn build_mesh(args: &MeshArgs) -> Result<(MetricGraph, Arc<Mesh>)> {
    let graph = load_graph(&args.graph)?;
    let mesh = Arc::new(Mesh::build(&graph, args.h, args.trunc_length)?);
    Ok((graph, mesh))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::ValidateGraph { graph } => {
            let g = load_graph(&graph)?;
            println!("graph ok: {} vertices, {} edges", g.vertex_count(), g.edges().len());
            println!("half-lines N = {}", g.half_line_count());
            println!("core length |K| = {}", g.core_length());
            let (e0, ell) = g.longest_core_edge();
            println!("longest core edge: {e0} with length {ell}");
        }
        Command::Spectrum { mesh, m, c, count, windowed } => {
            let (_, mesh) = build_mesh(&mesh)?;
            let basis = constraint_basis(&mesh)?;
            let op = assemble_dirac(&mesh, &basis, m, c)?;
            println!(
                "reduced dimension {} ({} nodes + {} midpoints), gap edge mc^2 = {}",
                op.dim(),
                mesh.node_count(),
                mesh.mid_count(),
                op.gap_edge()
            );
            if windowed || op.dim() > graphdirac::spectral::DENSE_CAP {
                let win = eigendecompose_window(&op, 5.0, 1)?;
                let evs = win.window_eigenvalues();
                println!("windowed path: {} eigenvalues with |nu| <= 5mc^2", evs.len());
                for &nu in evs.iter().take(count) {
                    println!("{nu:+.12e}");
                }
                if let Some(min) = win.min_abs_eigenvalue() {
                    println!("min |nu| = {:.12e} ({} * mc^2)", min, min / op.gap_edge());
                }
            } else {
                let dec = eigendecompose(&op)?;
                let mut evs: Vec<f64> = dec.eigenvalues().to_vec();
                evs.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
                for &nu in evs.iter().take(count) {
                    println!("{nu:+.12e}");
                }
                println!(
                    "min |nu| = {:.12e} ({} * mc^2)",
                    dec.min_abs_eigenvalue(),
                    dec.min_abs_eigenvalue() / op.gap_edge()
                );
            }
        }
        Command::SolveNlse { mesh, m, p, mass, multi_start } => {
            let (_, mesh) = build_mesh(&mesh)?;
            if multi_start {
                let all = solve_nlse_multistart(&mesh, m, p, mass, &NlseOptions::default());
                for (edge, res) in &all {
                    match res {
                        Ok(s) => println!(
                            "seed {edge}: E = {:+.12e}, lambda = {:+.12e}, residual {:.2e}",
                            s.energy, s.lambda, s.pde_residual
                        ),
                        Err(e) => println!("seed {edge}: failed: {e}"),
                    }
                }
                if let Some((_, Ok(best))) = all.first() {
                    println!(
                        "best energy {:+.12e} (convention: {NLSE_SIGN_CONVENTION})",
                        best.energy
                    );
                }
            } else {
                let s = solve_nlse_on_mesh(&mesh, m, p, mass, &NlseOptions::default())?;
                println!("convention: {NLSE_SIGN_CONVENTION}");
                println!("lambda  = {:+.15e}", s.lambda);
                println!("energy  = {:+.15e}", s.energy);
                println!("mass    = {:.15}", s.g.norm(NormKind::L2, Region::Graph).powi(2));
                println!("pde residual       = {:.3e}", s.pde_residual);
                println!("kirchhoff residual = {:.3e}", s.kirchhoff_residual);
                println!(
                    "route: {:?} ({} flow its, {} newton its)",
                    s.route, s.flow_iterations, s.newton_iterations
                );
            }
        }
        Command::SolveNlde { mesh, m, p, c } => {
            let (_, mesh) = build_mesh(&mesh)?;
            let nlse = solve_nlse_on_mesh(&mesh, m, p, 1.0, &NlseOptions::default())?;
            let basis = constraint_basis(&mesh)?;
            let op = assemble_dirac(&mesh, &basis, m, c)?;
            let (guess, omega0) = initial_guess(&nlse, m, c);
            let sol = solve_nlde(&op, p, &guess, omega0, &NldeParams::default())?;
            println!("omega          = {:+.15e}", sol.omega);
            println!("omega - mc^2   = {:+.15e}", sol.omega - m * c * c);
            println!("lambda/(2m)    = {:+.15e} (limit reference)", nlse.lambda / (2.0 * m));
            println!("action I_0c    = {:+.15e}", sol.action);
            println!("|u2|_L2        = {:.6e}", sol.u.comp2_l2());
            println!("|u2|_H1        = {:.6e}", sol.u.comp2_h1());
            println!(
                "residual       = {:.3e} in {} Newton iterations",
                sol.residual, sol.newton_iterations
            );
        }
        Command::Sweep { config } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading config {}", config.display()))?;
            let cfg: SweepConfig = serde_json::from_str(&text).context("parsing sweep config")?;
            let graph = load_graph(&PathBuf::from(&cfg.graph))?;
            let started = Instant::now();
            let report = run_sweep(&graph, &cfg)?;
            let wall = started.elapsed().as_secs_f64();
            let out_dir = PathBuf::from(&cfg.out_dir);
            emit_report(&report, &cfg, wall, &out_dir)?;
            println!(
                "wrote {} rows to {}",
                report.rows.len(),
                out_dir.join("sweep.csv").display()
            );
            if let Some(slope) = report.h1_u2_slope {
                println!("fitted |u2|_H1 decay slope: {slope:+.4}");
            }
            match &report.failed {
                None => println!("status: ok"),
                Some(f) => {
                    println!("status: FAILED at c = {} ({})", f.c, f.error);
                    bail!("sweep failed at c = {}", f.c);
                }
            }
        }
        Command::EstimateEc { mesh, m, p, c, family, a, grid } => {
            let (_, mesh) = build_mesh(&mesh)?;
            let basis = constraint_basis(&mesh)?;
            let op = assemble_dirac(&mesh, &basis, m, c)?;
            let dec = eigendecompose(&op)?;
            let fam = match family.as_str() {
                "sine" => EcFamily::Sine,
                "tent" => EcFamily::Tent { a },
                other => bail!("unknown family {other:?}; use \"sine\" or \"tent\""),
            };
            let est = estimate_ec(&op, &dec, p, fam, grid)?;
            println!("family            = {:?}", est.family);
            println!("sampled max       = {:+.12e} at t = {:.6e}", est.estimate, est.argmax_t);
            println!("analytic bound    = {:+.12e}", est.analytic_bound);
            println!("slack             = {:+.6e}", est.slack);
            println!("mc^2/2 threshold  = {:+.12e}", est.half_gap_threshold);
            println!("mc^2 threshold    = {:+.12e}", est.gap_threshold);
        }
        Command::CheckInequalities { mesh, m, p, c, samples, seed } => {
            let (_, mesh) = build_mesh(&mesh)?;
            let basis = constraint_basis(&mesh)?;
            let op = assemble_dirac(&mesh, &basis, m, c)?;
            let dec = eigendecompose(&op)?;
            let support = check_support_inequality(&mesh, p, samples, seed)?;
            println!(
                "{:<24} samples {:>5}  violations {}  max ratio {:.6}",
                support.id, support.samples, support.violations, support.max_ratio
            );
            let (k, monotone) = estimate_gn_constants(&op, &dec, &basis, p, samples, seed)?;
            println!(
                "{:<24} samples {:>5}  violations {}  max ratio {:.6}",
                monotone.id, monotone.samples, monotone.violations, monotone.max_ratio
            );
            println!("empirical constants:");
            println!("  C_p,K    = {:.6}", k.c_p_core);
            println!("  C_p,G    = {:.6}", k.c_p_graph);
            println!("  S_p,K    = {:.6}", k.s_p_core);
            println!("  S_inf,K  = {:.6}", k.s_inf_core);
            println!("  S_2p-2,K = {:.6}", k.s_2p2_core);
            let proj = check_projector_bound(&op, &dec, &basis, p, samples, seed, k.s_p_core)?;
            println!(
                "{:<24} samples {:>5}  violations {}  max ratio {:.6}",
                proj.id, proj.samples, proj.violations, proj.max_ratio
            );
            let total = support.violations + monotone.violations + proj.violations;
            if total > 0 {
                bail!("{total} inequality violations");
            }
        }
    }
    Ok(())
}
