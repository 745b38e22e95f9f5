//! Independent oracles for the integration suites. These never touch the
//! mesh discretization: the shooting oracle integrates the line-graph ODE
//! with RK4 and matches exponential tails analytically; the secular oracle
//! solves the star-graph transcendental eigenvalue equation by bisection.

/// RK4 integration of -g'' - λ g = 2 m |g|^{p-2} g from the core centre
/// (g = a, g' = 0) to the vertex at distance `half`, returning
/// (g, g', ∫ g² over [0, half]).
fn integrate_core(lambda: f64, a: f64, m: f64, p: f64, half: f64, steps: usize) -> (f64, f64, f64) {
    let h = half / steps as f64;
    let f = |g: f64| -lambda * g - 2.0 * m * g.abs().powf(p - 2.0) * g;
    let (mut g, mut dg) = (a, 0.0);
    let mut mass = 0.0;
    for _ in 0..steps {
        let k1 = (dg, f(g));
        let k2 = (dg + 0.5 * h * k1.1, f(g + 0.5 * h * k1.0));
        let k3 = (dg + 0.5 * h * k2.1, f(g + 0.5 * h * k2.0));
        let k4 = (dg + h * k3.1, f(g + h * k3.0));
        let gn = g + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        let dgn = dg + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        mass += 0.5 * h * (g * g + gn * gn);
        g = gn;
        dg = dgn;
    }
    (g, dg, mass)
}

/// Tail-matching defect at the vertex: g'(half) + κ g(half).
fn matching(lambda: f64, a: f64, m: f64, p: f64, half: f64, steps: usize) -> f64 {
    let kappa = (-lambda).sqrt();
    let (g, dg, _) = integrate_core(lambda, a, m, p, half, steps);
    dg + kappa * g
}

/// Amplitude of the even localized state at fixed λ (bisection on the
/// matching condition), bracketed near `a_hint` when provided.
fn amplitude_at(lambda: f64, m: f64, p: f64, half: f64, a_hint: Option<f64>) -> Option<f64> {
    let steps = 5000;
    let cond = |a: f64| matching(lambda, a, m, p, half, steps);
    let bracket = match a_hint {
        Some(a0) => {
            let (lo, hi) = (a0 / 1.6, a0 * 1.6);
            if cond(lo).signum() != cond(hi).signum() {
                Some((lo, hi))
            } else {
                None
            }
        }
        None => None,
    };
    let (mut lo, mut hi) = match bracket {
        Some(b) => b,
        None => {
            // geometric scan for the first sign change
            let mut a = 1e-6;
            let mut prev = cond(a);
            let mut found = None;
            for _ in 0..5000 {
                let next = a * 1.01;
                let c = cond(next);
                if prev.signum() != c.signum() && prev.is_finite() && c.is_finite() {
                    found = Some((a, next));
                    break;
                }
                a = next;
                prev = c;
            }
            found?
        }
    };
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if cond(lo).signum() == cond(mid).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Total mass of the matched state: core plus two exponential tails.
fn mass_at(lambda: f64, m: f64, p: f64, half: f64, a: f64) -> f64 {
    let steps = 5000;
    let kappa = (-lambda).sqrt();
    let (g, _, half_mass) = integrate_core(lambda, a, m, p, half, steps);
    2.0 * half_mass + g * g / kappa
}

/// Shooting oracle for the line graph (one core edge of length `core_len`
/// between two half-lines): the multiplier λ of the even localized state
/// with the prescribed mass. Independent of the mesh solver.
///
/// The branch mass μ(λ) is increasing in |λ|, so the mass defect μ - mass
/// decreases in λ; bracket accordingly and bisect.
pub fn shooting_lambda(m: f64, p: f64, mass: f64, core_len: f64) -> Option<(f64, f64)> {
    let half = 0.5 * core_len;
    let mass_defect = |lambda: f64, hint: Option<f64>| -> Option<(f64, f64)> {
        let a = amplitude_at(lambda, m, p, half, hint)?;
        Some((mass_at(lambda, m, p, half, a) - mass, a))
    };

    let lam0 = -(0.5 * m * mass).powi(2).max(1e-4);
    let (d0, mut a_hint) = mass_defect(lam0, None)?;
    // lower end carries surplus mass (defect > 0), upper end a deficit
    if d0 > 0.0 {
        let mut hi = lam0;
        for _ in 0..80 {
            hi *= 0.5;
            let (d, a) = mass_defect(hi, Some(a_hint))?;
            a_hint = a;
            if d < 0.0 {
                return bisect_lambda(m, p, mass, half, hi * 2.0, hi, a_hint);
            }
        }
    } else {
        let mut lo = lam0;
        for _ in 0..80 {
            lo *= 2.0;
            let (d, a) = mass_defect(lo, Some(a_hint))?;
            a_hint = a;
            if d > 0.0 {
                return bisect_lambda(m, p, mass, half, lo, lo / 2.0, a_hint);
            }
        }
    }
    None
}

fn bisect_lambda(
    m: f64,
    p: f64,
    mass: f64,
    half: f64,
    mut lo: f64,
    mut hi: f64,
    mut a_hint: f64,
) -> Option<(f64, f64)> {
    // invariant: defect(lo) > 0 > defect(hi), lo < hi
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let a = amplitude_at(mid, m, p, half, Some(a_hint))?;
        a_hint = a;
        let d = mass_at(mid, m, p, half, a) - mass;
        if d > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let a = amplitude_at(lambda, m, p, half, Some(a_hint))?;
    Some((lambda, a))
}

/// Eigenvalues of the Kirchhoff Laplacian on a star with Dirichlet tips:
/// roots of Σ_e cot(k ℓ_e) = 0 plus the centre-zero families at common
/// Dirichlet wavenumbers, returned as sorted λ = k².
pub fn star_dirichlet_eigenvalues(lens: &[f64], count: usize) -> Vec<f64> {
    let secular = |k: f64| -> f64 { lens.iter().map(|&l| 1.0 / (k * l).tan()).sum() };
    let near_pole = |k: f64| -> bool {
        lens.iter().any(|&l| {
            let t = k * l / std::f64::consts::PI;
            (t - t.round()).abs() < 1e-9
        })
    };
    let mut ks: Vec<f64> = Vec::new();

    // transcendental roots by scan + bisection between poles
    let k_max = {
        // enough to cover `count` eigenvalues on the shortest edge
        let lmin = lens.iter().cloned().fold(f64::INFINITY, f64::min);
        (count as f64 + 2.0) * std::f64::consts::PI / lmin
    };
    let dk = 1e-4;
    let mut k = dk;
    let mut prev = secular(k);
    while k < k_max {
        let next = k + dk;
        let cur = secular(next);
        if prev.is_finite() && cur.is_finite() && prev.signum() != cur.signum() {
            // reject sign flips across a pole of any cot
            let pole_between = lens.iter().any(|&l| {
                let a = (k * l / std::f64::consts::PI).floor();
                let b = (next * l / std::f64::consts::PI).floor();
                a != b
            });
            if !pole_between {
                let (mut lo, mut hi) = (k, next);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if secular(lo).signum() == secular(mid).signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let root = 0.5 * (lo + hi);
                if !near_pole(root) {
                    ks.push(root);
                }
            }
        }
        prev = cur;
        k = next;
    }

    // centre-zero families: k with sin(k ℓ_e) = 0 on d ≥ 2 edges give
    // multiplicity d - 1
    let mut dirichlet_ks: Vec<f64> = Vec::new();
    for (i, &l) in lens.iter().enumerate() {
        let mut j = 1;
        loop {
            let k = j as f64 * std::f64::consts::PI / l;
            if k > k_max {
                break;
            }
            let mut d = 0;
            for &l2 in lens {
                let t = k * l2 / std::f64::consts::PI;
                if (t - t.round()).abs() < 1e-12 {
                    d += 1;
                }
            }
            if d >= 2 {
                // count each common wavenumber once, from its first edge
                let first = lens.iter().position(|&l2| {
                    let t = k * l2 / std::f64::consts::PI;
                    (t - t.round()).abs() < 1e-12
                });
                if first == Some(i) {
                    for _ in 0..(d - 1) {
                        dirichlet_ks.push(k);
                    }
                }
            }
            j += 1;
        }
    }
    ks.extend(dirichlet_ks);
    ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ks.truncate(count);
    ks.iter().map(|k| k * k).collect()
}

#[allow(dead_code)]
pub fn order_of_accuracy(errors: &[f64]) -> f64 {
    // slope assuming h halves between consecutive entries
    (errors[0] / errors[1]).log2()
}
