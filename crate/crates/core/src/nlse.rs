//! Normalized solutions of the limit Schrödinger problem on the graph:
//!
//! ```text
//!   -g″ - λ g = 2m χ_K |g|^{p-2} g,   ‖g‖₂² = mass,   Kirchhoff at vertices
//! ```
//!
//! solved by a semi-implicit normalized gradient flow on the energy
//! `E_m(g) = ½‖g′‖₂² - (2m/p)∫_K |g|^p`, followed by a Newton polish of the
//! full KKT system. The discrete nonlinearity is the exact mass-matrix
//! gradient of the cell-quadrature of ∫_K |g|^p, so energy, flow and Newton
//! share one consistent functional.

use crate::field::{Region, ScalarField};
use crate::graph::{EdgeId, MetricGraph, VertexId};
use crate::linalg::{CondensedSolver, LinalgError};
use crate::mesh::{Mesh, MeshError, NodeDof};
use crate::operators::{assemble_schrodinger, scalar_block_plan, SchrodingerOperator};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NlseError {
    #[error("exponent p = {0} outside the subcritical range (2, 6)")]
    BadExponent(f64),
    #[error("mass parameter must be positive, got {0}")]
    BadMass(f64),
    #[error("solution mass near the truncation boundary is {tail:.3e} (> {limit:.1e}); enlarge L")]
    NoDecay { tail: f64, limit: f64 },
    #[error("gradient flow stagnated: step size underflowed at iteration {0}")]
    FlowStagnation(usize),
    #[error("Newton polish did not reach tolerance in {0} iterations")]
    NewtonDivergence(usize),
    #[error("converged multiplier is not negative: λ = {0:.6e}")]
    PositiveMultiplier(f64),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Converged normalized solution of the limit problem.
pub struct NlseSolution {
    pub g: ScalarField,
    pub lambda: f64,
    pub mass: f64,
    pub energy: f64,
    pub pde_residual: f64,
    pub kirchhoff_residual: f64,
    pub flow_iterations: usize,
    pub newton_iterations: usize,
    pub route: SolveRoute,
}

/// How the solve is initialized.
///
/// The gradient flow finds constrained local minimizers. Below the mass
/// threshold where the energy infimum is zero and unattained, the flow
/// spreads out while the normalized solution is a saddle; that one is found
/// by solving the fixed-frequency problem and walking λ until the mass
/// constraint is met.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NlseInit {
    /// Sine bump + gradient flow + Newton polish.
    Flow,
    /// Fixed-frequency Newton solves with a secant iteration on the mass.
    FrequencyContinuation,
    /// Try the flow; if it spreads (no decay or λ ≥ 0), fall back to the
    /// frequency continuation.
    FlowWithFallback,
}

/// Which route produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveRoute {
    Flow,
    FrequencyContinuation,
}

/// Solver knobs; the defaults match the tolerances used throughout.
#[derive(Debug, Clone)]
pub struct NlseOptions {
    pub init: NlseInit,
    pub seed_edge: Option<EdgeId>,
    pub flow_step: f64,
    pub flow_energy_tol: f64,
    pub max_flow_iterations: usize,
    pub newton_tol: f64,
    pub max_newton_iterations: usize,
    pub tail_limit: f64,
}

impl Default for NlseOptions {
    fn default() -> Self {
        NlseOptions {
            init: NlseInit::FlowWithFallback,
            seed_edge: None,
            flow_step: 0.5,
            flow_energy_tol: 1e-12,
            max_flow_iterations: 50_000,
            newton_tol: 1e-10,
            max_newton_iterations: 60,
            tail_limit: 1e-8,
        }
    }
}

/// E_m(g) = ½‖g′‖₂² - (2m/p)∫_K |g|^p.
pub fn energy_em(field: &ScalarField, m: f64, p: f64) -> f64 {
    let mesh = field.mesh();
    let grad = mesh.gradient_mids(field.values());
    let kinetic: f64 = grad
        .iter()
        .enumerate()
        .map(|(j, g)| g * g * mesh.mid_weight(j))
        .sum();
    0.5 * kinetic - (2.0 * m / p) * field.lp_integral(p, Region::Core)
}

/// Cell-quadrature Φ(g) = ∫_K |g|^p and its weighted-coordinate gradient
/// machinery, shared by the flow and Newton.
struct CoreNonlinearity {
    mesh: Arc<Mesh>,
    p: f64,
}

impl CoreNonlinearity {
    fn phi(&self, g: &[f64]) -> f64 {
        let mut acc = 0.0;
        for em in self.mesh.edge_meshes() {
            if !em.is_core {
                continue;
            }
            for j in 0..em.cells {
                let avg = 0.5 * (read(g, em.node_map[j]) + read(g, em.node_map[j + 1]));
                if avg != 0.0 {
                    acc += em.h * avg.abs().powf(self.p);
                }
            }
        }
        acc
    }

    /// n(y) = M^{1/2} (χ_K|g|^{p-2}g) with g = M^{-1/2} y: the weighted
    /// gradient of Φ/p.
    fn eval_weighted(&self, y: &[f64]) -> Vec<f64> {
        let g = unweight(&self.mesh, y);
        let mut out = vec![0.0; y.len()];
        for em in self.mesh.edge_meshes() {
            if !em.is_core {
                continue;
            }
            for j in 0..em.cells {
                let avg = 0.5 * (read(&g, em.node_map[j]) + read(&g, em.node_map[j + 1]));
                if avg == 0.0 {
                    continue;
                }
                let val = em.h * avg.abs().powf(self.p - 2.0) * avg * 0.5;
                for dof in [em.node_map[j], em.node_map[j + 1]] {
                    if let NodeDof::Reduced(i) = dof {
                        out[i] += val / self.mesh.node_weight(i).sqrt();
                    }
                }
            }
        }
        out
    }

    /// Triplets of the symmetric weighted Jacobian of `eval_weighted`.
    fn jacobian_triplets(&self, y: &[f64], scale: f64) -> Vec<(usize, usize, f64)> {
        let g = unweight(&self.mesh, y);
        let mut t = Vec::new();
        for em in self.mesh.edge_meshes() {
            if !em.is_core {
                continue;
            }
            for j in 0..em.cells {
                let avg = 0.5 * (read(&g, em.node_map[j]) + read(&g, em.node_map[j + 1]));
                if avg == 0.0 {
                    continue;
                }
                let d = em.h * (self.p - 1.0) * avg.abs().powf(self.p - 2.0) * 0.25;
                let dofs = [em.node_map[j], em.node_map[j + 1]];
                for a in dofs {
                    for b in dofs {
                        if let (NodeDof::Reduced(i), NodeDof::Reduced(k)) = (a, b) {
                            let wi = self.mesh.node_weight(i).sqrt();
                            let wk = self.mesh.node_weight(k).sqrt();
                            t.push((i, k, scale * d / (wi * wk)));
                        }
                    }
                }
            }
        }
        t
    }
}

/// Attainable residual floor for Newton on weighted-coordinate systems:
/// cancellation noise of the stiffest matrix row times the iterate size.
fn residual_floor(stiff: &[(usize, usize, f64)], lambda: f64, y: &[f64]) -> f64 {
    let max_diag = stiff
        .iter()
        .filter(|(i, j, _)| i == j)
        .map(|&(_, _, v)| v.abs())
        .fold(0.0f64, f64::max);
    let ynorm = crate::linalg::dot(y, y).sqrt();
    32.0 * f64::EPSILON * (max_diag + lambda.abs()) * ynorm.max(1.0)
}

fn read(g: &[f64], dof: NodeDof) -> f64 {
    match dof {
        NodeDof::Reduced(i) => g[i],
        NodeDof::Dropped => 0.0,
    }
}

fn weight(mesh: &Mesh, g: &[f64]) -> Vec<f64> {
    g.iter().enumerate().map(|(i, v)| v * mesh.node_weight(i).sqrt()).collect()
}

fn unweight(mesh: &Mesh, y: &[f64]) -> Vec<f64> {
    y.iter().enumerate().map(|(i, v)| v / mesh.node_weight(i).sqrt()).collect()
}

/// Normalized sine bump on `edge`, the flow initializer.
fn sine_seed(mesh: &Arc<Mesh>, edge: EdgeId, mass: f64) -> ScalarField {
    let len = mesh.edge_mesh(edge).len;
    let mut f = ScalarField::from_edge_fn(mesh, |e, x| {
        if e == edge {
            (std::f64::consts::PI * x / len).sin()
        } else {
            0.0
        }
    });
    f.normalize_mass(mass);
    f
}

/// Solve the normalized limit problem on `graph` at spacing `h` with
/// half-lines truncated at `trunc_len`.
pub fn solve_nlse(
    graph: &MetricGraph,
    m: f64,
    p: f64,
    mass: f64,
    h: f64,
    trunc_len: f64,
    opts: &NlseOptions,
) -> Result<NlseSolution, NlseError> {
    let mesh = Arc::new(Mesh::build(graph, h, trunc_len)?);
    solve_nlse_on_mesh(&mesh, m, p, mass, opts)
}


/// Same as [`solve_nlse`] but reusing an existing mesh.
pub fn solve_nlse_on_mesh(
    mesh: &Arc<Mesh>,
    m: f64,
    p: f64,
    mass: f64,
    opts: &NlseOptions,
) -> Result<NlseSolution, NlseError> {
    if !(p > 2.0 && p < 6.0) {
        return Err(NlseError::BadExponent(p));
    }
    if !(m > 0.0) {
        return Err(NlseError::BadMass(m));
    }
    let seed_edge = opts.seed_edge.unwrap_or_else(|| {
        let (e, _) = mesh.graph().longest_core_edge();
        e
    });
    match opts.init {
        NlseInit::Flow => solve_flow_route(mesh, m, p, mass, seed_edge, opts),
        NlseInit::FrequencyContinuation => {
            solve_continuation_route(mesh, m, p, mass, seed_edge, opts)
        }
        NlseInit::FlowWithFallback => match solve_flow_route(mesh, m, p, mass, seed_edge, opts) {
            Ok(sol) => Ok(sol),
            Err(NlseError::NoDecay { .. })
            | Err(NlseError::PositiveMultiplier(_))
            | Err(NlseError::FlowStagnation(_))
            | Err(NlseError::NewtonDivergence(_)) => {
                solve_continuation_route(mesh, m, p, mass, seed_edge, opts)
            }
            Err(e) => Err(e),
        },
    }
}

/// Damped Newton on the fixed-frequency equation `K y - λ y - 2m n(y) = 0`.
/// Returns `None` if Newton collapsed onto the trivial solution or stalled.
fn fixed_frequency_newton(
    mesh: &Arc<Mesh>,
    op: &SchrodingerOperator,
    nl: &CoreNonlinearity,
    m: f64,
    lambda: f64,
    seed: &[f64],
    tol: f64,
) -> Result<Option<Vec<f64>>, NlseError> {
    let n = mesh.node_count();
    let stiff = op.stiffness_triplets();
    let plan = scalar_block_plan(mesh, 0);
    let mut y = seed.to_vec();
    let tol = tol.max(residual_floor(&stiff, lambda, &y));
    let residual = |y: &[f64]| -> (Vec<f64>, f64) {
        let ky = op.stiffness_matvec(y).expect("dimension");
        let nly = nl.eval_weighted(y);
        let f: Vec<f64> = (0..n).map(|i| ky[i] - lambda * y[i] - 2.0 * m * nly[i]).collect();
        let nrm = crate::linalg::dot(&f, &f).sqrt();
        (f, nrm)
    };
    let (mut f, mut fnorm) = residual(&y);
    for _ in 0..80 {
        if fnorm <= tol {
            let nrm = crate::linalg::dot(&y, &y).sqrt();
            return Ok(if nrm < 1e-8 { None } else { Some(y) });
        }
        let mut t: Vec<(usize, usize, f64)> = stiff.to_vec();
        for i in 0..n {
            t.push((i, i, -lambda));
        }
        t.extend(nl.jacobian_triplets(&y, -2.0 * m));
        let solver = CondensedSolver::factor(n, &t, &plan)?;
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        let delta = solver.solve(&rhs);
        let mut alpha = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let ytrial: Vec<f64> = y.iter().zip(&delta).map(|(a, b)| a + alpha * b).collect();
            let (ft, fn_t) = residual(&ytrial);
            if fn_t < (1.0 - 0.25 * alpha) * fnorm {
                y = ytrial;
                f = ft;
                fnorm = fn_t;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !improved {
            return Ok(None);
        }
    }
    Ok(None)
}

/// Normalized solutions beyond the reach of the descent flow: solve the
/// fixed-λ problem, walk λ by a secant iteration until ‖g‖₂² matches the
/// prescribed mass, then polish the full KKT system.
fn solve_continuation_route(
    mesh: &Arc<Mesh>,
    m: f64,
    p: f64,
    mass: f64,
    seed_edge: EdgeId,
    opts: &NlseOptions,
) -> Result<NlseSolution, NlseError> {
    let op = assemble_schrodinger(mesh);
    let nl = CoreNonlinearity { mesh: mesh.clone(), p };
    let energy_of = |y: &[f64]| -> f64 {
        let ky = op.stiffness_matvec(y).expect("dimension");
        0.5 * crate::linalg::dot(&ky, y) - (2.0 * m / p) * nl.phi(&unweight(mesh, y))
    };

    let x0 = 0.5 * mesh.edge_mesh(seed_edge).len;
    let dist = mesh.distances_from(seed_edge, x0);
    let profile = |kappa: f64, amp: f64| -> Vec<f64> {
        let vals: Vec<f64> = dist.iter().map(|&d| amp / (kappa * d).cosh()).collect();
        weight(mesh, &vals)
    };

    // nontrivial fixed-λ solution, trying stronger seeds if Newton slides
    // down to zero
    let solve_at = |lambda: f64, warm: Option<&Vec<f64>>| -> Result<Option<Vec<f64>>, NlseError> {
        if let Some(w) = warm {
            if let Some(y) = fixed_frequency_newton(mesh, &op, &nl, m, lambda, w, 1e-11)? {
                return Ok(Some(y));
            }
        }
        let kappa = (-lambda).sqrt();
        let base = (-lambda / (2.0 * m)).powf(1.0 / (p - 2.0));
        for scale in [2.0, 4.0, 8.0, 1.0, 16.0] {
            let seed = profile(kappa, scale * base);
            if let Some(y) = fixed_frequency_newton(mesh, &op, &nl, m, lambda, &seed, 1e-11)? {
                return Ok(Some(y));
            }
        }
        Ok(None)
    };

    let kappa0 = (0.5 * m * mass).max(0.05);
    let mut lambda = -(kappa0 * kappa0);
    let mut warm: Option<Vec<f64>> = None;
    let mut prev: Option<(f64, f64)> = None; // (lambda, mass defect)
    for _ in 0..80 {
        let y = solve_at(lambda, warm.as_ref())?
            .ok_or(NlseError::NewtonDivergence(opts.max_newton_iterations))?;
        let mu = crate::linalg::dot(&y, &y);
        let defect = mu - mass;
        if std::env::var("NLSE_DEBUG").is_ok() {
            eprintln!("continuation: lambda={lambda:.8e} mu={mu:.8e} defect={defect:.3e}");
        }
        if defect.abs() <= 1e-10 * mass {
            return newton_polish(
                mesh,
                &op,
                &nl,
                m,
                mass,
                y,
                energy_of,
                opts,
                0,
                SolveRoute::FrequencyContinuation,
            );
        }
        let lambda_next = match prev {
            // secant step, guarded to stay negative
            Some((l_prev, d_prev)) if (defect - d_prev).abs() > 1e-300 => {
                let step = defect * (lambda - l_prev) / (defect - d_prev);
                let cand = lambda - step;
                if cand < -1e-12 {
                    cand
                } else {
                    0.5 * lambda
                }
            }
            // first move: mass grows roughly like √(-λ)
            _ => lambda * (mass / mu).powi(2),
        };
        prev = Some((lambda, defect));
        warm = Some(y);
        lambda = lambda_next.min(-1e-12);
    }
    Err(NlseError::NewtonDivergence(opts.max_newton_iterations))
}

fn solve_flow_route(
    mesh: &Arc<Mesh>,
    m: f64,
    p: f64,
    mass: f64,
    seed_edge: EdgeId,
    opts: &NlseOptions,
) -> Result<NlseSolution, NlseError> {
    let op = assemble_schrodinger(mesh);
    let nl = CoreNonlinearity { mesh: mesh.clone(), p };
    let n = mesh.node_count();

    let g0 = sine_seed(mesh, seed_edge, mass);
    let mut y = weight(mesh, g0.values());

    let energy_of = |y: &[f64]| -> f64 {
        let ky = op.stiffness_matvec(y).expect("dimension");
        0.5 * crate::linalg::dot(&ky, y) - (2.0 * m / p) * nl.phi(&unweight(mesh, y))
    };

    // --- semi-implicit normalized gradient flow ---
    let stiff = op.stiffness_triplets();
    let plan = scalar_block_plan(mesh, 0);
    let mut tau = opts.flow_step;
    let mut factor = flow_factor(n, &stiff, tau, &plan)?;
    let mut energy = energy_of(&y);
    let mut flow_iterations = 0;
    for it in 0..opts.max_flow_iterations {
        flow_iterations = it + 1;
        let mut accepted = false;
        for _ in 0..40 {
            let mut rhs = nl.eval_weighted(&y);
            for (r, yi) in rhs.iter_mut().zip(&y) {
                *r = yi / tau + 2.0 * m * *r;
            }
            let mut ynew = factor.solve(&rhs);
            let nrm = crate::linalg::dot(&ynew, &ynew).sqrt();
            let s = mass.sqrt() / nrm;
            for v in &mut ynew {
                *v *= s;
            }
            let enew = energy_of(&ynew);
            if enew <= energy + 1e-14 * energy.abs().max(1.0) {
                let de = energy - enew;
                y = ynew;
                energy = enew;
                accepted = true;
                if de.abs() < opts.flow_energy_tol {
                    flow_iterations = it + 1;
                    // converged in energy
                    return newton_polish(
                        mesh,
                        &op,
                        &nl,
                        m,
                        mass,
                        y,
                        energy_of,
                        opts,
                        flow_iterations,
                        SolveRoute::Flow,
                    );
                }
                break;
            }
            tau *= 0.5;
            if tau < 1e-12 {
                return Err(NlseError::FlowStagnation(it));
            }
            factor = flow_factor(n, &stiff, tau, &plan)?;
        }
        if !accepted {
            return Err(NlseError::FlowStagnation(it));
        }
    }
    newton_polish(mesh, &op, &nl, m, mass, y, energy_of, opts, flow_iterations, SolveRoute::Flow)
}

fn flow_factor(
    n: usize,
    stiff: &[(usize, usize, f64)],
    tau: f64,
    plan: &crate::linalg::BlockPlan,
) -> Result<CondensedSolver, LinalgError> {
    // (I/τ + K) y = rhs
    let mut t: Vec<(usize, usize, f64)> = stiff.to_vec();
    for i in 0..n {
        t.push((i, i, 1.0 / tau));
    }
    CondensedSolver::factor(n, &t, plan)
}

#[allow(clippy::too_many_arguments)]
fn newton_polish(
    mesh: &Arc<Mesh>,
    op: &SchrodingerOperator,
    nl: &CoreNonlinearity,
    m: f64,
    mass: f64,
    mut y: Vec<f64>,
    energy_of: impl Fn(&[f64]) -> f64,
    opts: &NlseOptions,
    flow_iterations: usize,
    route: SolveRoute,
) -> Result<NlseSolution, NlseError> {
    let n = mesh.node_count();
    let stiff = op.stiffness_triplets();
    let plan = scalar_block_plan(mesh, 1);

    // Rayleigh initialization of the multiplier
    let mut lambda = {
        let ky = op.stiffness_matvec(&y).expect("dimension");
        (crate::linalg::dot(&ky, &y) - 2.0 * m * nl.phi(&unweight(mesh, &y))) / mass
    };

    // the residual cancels terms of stiffness scale, so the reachable floor
    // grows like eps * max diag(K) on fine meshes
    let tol_eff = opts.newton_tol.max(residual_floor(&stiff, lambda, &y));

    let residual = |y: &[f64], lambda: f64| -> (Vec<f64>, f64) {
        let ky = op.stiffness_matvec(y).expect("dimension");
        let nly = nl.eval_weighted(y);
        let mut f: Vec<f64> = (0..n).map(|i| ky[i] - lambda * y[i] - 2.0 * m * nly[i]).collect();
        let mass_err = crate::linalg::dot(y, y) - mass;
        f.push(mass_err);
        let nrm = crate::linalg::dot(&f, &f).sqrt();
        (f, nrm)
    };

    let (mut f, mut fnorm) = residual(&y, lambda);
    let mut newton_iterations = 0;
    while fnorm > tol_eff {
        if newton_iterations >= opts.max_newton_iterations {
            return Err(NlseError::NewtonDivergence(newton_iterations));
        }
        newton_iterations += 1;
        let mut t: Vec<(usize, usize, f64)> = stiff.to_vec();
        for i in 0..n {
            t.push((i, i, -lambda));
        }
        t.extend(nl.jacobian_triplets(&y, -2.0 * m));
        for i in 0..n {
            t.push((i, n, -y[i]));
            t.push((n, i, 2.0 * y[i]));
        }
        let solver = CondensedSolver::factor(n + 1, &t, &plan)?;
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        let delta = solver.solve(&rhs);

        let mut alpha = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let ytrial: Vec<f64> = y.iter().zip(&delta).map(|(a, b)| a + alpha * b).collect();
            let ltrial = lambda + alpha * delta[n];
            let (ft, fn_t) = residual(&ytrial, ltrial);
            if fn_t < (1.0 - 0.25 * alpha) * fnorm {
                y = ytrial;
                lambda = ltrial;
                f = ft;
                fnorm = fn_t;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !improved {
            return Err(NlseError::NewtonDivergence(newton_iterations));
        }
    }

    // decay check at the truncation boundary: L² mass on the outer 5%
    let g = ScalarField::from_values(mesh, unweight(mesh, &y));
    let tail = truncation_tail_mass(&g);
    if tail > opts.tail_limit {
        return Err(NlseError::NoDecay { tail, limit: opts.tail_limit });
    }
    if lambda >= 0.0 {
        return Err(NlseError::PositiveMultiplier(lambda));
    }

    let energy = energy_of(&y);
    let pde_residual = {
        let (_, fnorm_final) = residual(&y, lambda);
        fnorm_final
    };
    let kirchhoff_residual = kirchhoff_residual_values(&g);
    Ok(NlseSolution {
        g,
        lambda,
        mass,
        energy,
        pde_residual,
        kirchhoff_residual,
        flow_iterations,
        newton_iterations,
        route,
    })
}

/// √(L² mass) of a field on the outer 5% of every half-line.
pub fn truncation_tail_mass(g: &ScalarField) -> f64 {
    let mesh = g.mesh();
    let mut acc = 0.0;
    for em in mesh.edge_meshes() {
        if em.is_core {
            continue;
        }
        let start = em.cells - (em.cells / 20).max(3).min(em.cells);
        for j in start..em.cells {
            let a = read(g.values(), em.node_map[j]);
            let b = read(g.values(), em.node_map[j + 1]);
            let avg = 0.5 * (a + b);
            acc += em.h * avg * avg;
        }
    }
    acc.sqrt()
}

/// Max over vertices of the signed sum of outgoing one-sided second-order
/// derivatives: the Kirchhoff flux residual.
pub fn kirchhoff_residual(solution: &NlseSolution) -> f64 {
    kirchhoff_residual_values(&solution.g)
}

pub fn kirchhoff_residual_values(g: &ScalarField) -> f64 {
    let mesh = g.mesh();
    let v = g.values();
    let mut worst: f64 = 0.0;
    for vid in 0..mesh.graph().vertex_count() {
        let mut acc = 0.0;
        for (e, at_end) in mesh.graph().incident_slots(VertexId(vid)) {
            let em = mesh.edge_mesh(e);
            let h = em.h;
            if at_end {
                let n = em.cells;
                let (g0, g1, g2) = (
                    read(v, em.node_map[n]),
                    read(v, em.node_map[n - 1]),
                    read(v, em.node_map[n - 2]),
                );
                // dg/dx_e(v) = -g'(ℓ), with g'(ℓ) ≈ (3g_n - 4g_{n-1} + g_{n-2}) / 2h
                acc += -(3.0 * g0 - 4.0 * g1 + g2) / (2.0 * h);
            } else {
                let (g0, g1, g2) = (
                    read(v, em.node_map[0]),
                    read(v, em.node_map[1]),
                    read(v, em.node_map[2]),
                );
                acc += (-3.0 * g0 + 4.0 * g1 - g2) / (2.0 * h);
            }
        }
        worst = worst.max(acc.abs());
    }
    worst
}

/// Run [`solve_nlse_on_mesh`] once per core edge seed and return all local
/// minima found, best (lowest energy) first.
pub fn solve_nlse_multistart(
    mesh: &Arc<Mesh>,
    m: f64,
    p: f64,
    mass: f64,
    opts: &NlseOptions,
) -> Vec<(EdgeId, Result<NlseSolution, NlseError>)> {
    let mut out = Vec::new();
    for em in mesh.edge_meshes() {
        if !em.is_core {
            continue;
        }
        let mut o = opts.clone();
        o.seed_edge = Some(em.edge);
        out.push((em.edge, solve_nlse_on_mesh(mesh, m, p, mass, &o)));
    }
    out.sort_by(|a, b| {
        let ea = a.1.as_ref().map(|s| s.energy).unwrap_or(f64::INFINITY);
        let eb = b.1.as_ref().map(|s| s.energy).unwrap_or(f64::INFINITY);
        ea.partial_cmp(&eb).unwrap()
    });
    out
}
