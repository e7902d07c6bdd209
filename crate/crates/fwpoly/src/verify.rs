//! Property suite: composition theorems for the condition numbers, objective
//! identities, and per-iteration solver contraction checks, on seeded random
//! instances. Shared by the `verify` CLI command and the acceptance tests.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::condnum::{
    closest_pair, product_pw_formula, product_pw_lower_bound, product_vf, ProductBrute,
};
use crate::condnum::{
    affine_pyramidal_width, pyramidal_width, vertex_facet_distance,
};
use crate::instance::{generate_disjoint_convex_pos, sample_convex_position, GenConfig};
use crate::objective::IntersectionObjective;
use crate::polytope::VPolytope;
use crate::solvers::{run_afw, SolverConfig, StepType};

/// Default seed for the `verify` command.
pub const DEFAULT_VERIFY_SEED: u64 = 1729;

/// Relative tolerance for the two-factor pyramidal-width product theorem.
pub const TOL_PW_PRODUCT_REL: f64 = 1e-6;
/// Absolute tolerance for pyramidal width vs affine pyramidal width.
pub const TOL_WIDTHS_EQUIV: f64 = 1e-7;
/// Absolute tolerance for the vertex-facet product rule.
pub const TOL_VF_PRODUCT: f64 = 1e-9;
/// Slack for the k-fold lower/upper pyramidal-width bounds.
pub const TOL_KFOLD: f64 = 1e-7;
/// Relative tolerance for the gradient-norm and M_k identities.
pub const TOL_OBJ_IDENT_REL: f64 = 1e-12;
/// Relative tolerance for gradient vs central finite differences.
pub const TOL_GRAD_FD_REL: f64 = 1e-5;
/// Additive slack for the per-iteration contraction inequality.
pub const TOL_CONTRACTION: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
}

impl CheckOutcome {
    fn pass(name: &'static str, details: String) -> Self {
        Self {
            name,
            passed: true,
            details,
        }
    }

    fn fail(name: &'static str, details: String) -> Self {
        Self {
            name,
            passed: false,
            details,
        }
    }
}

/// A random polytope in convex position: dimension 2 or 3, 3..=6 vertices on
/// a sphere of random radius and center.
fn random_polytope(rng: &mut ChaCha8Rng, max_verts: usize) -> VPolytope {
    let dim = rng.random_range(2..=3usize);
    let m = rng.random_range(3..=max_verts);
    let radius = rng.random_range(0.6..1.4);
    let center: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect();
    sample_convex_position(dim, m, &center, radius, rng)
}

/// Seeded pairs shared by the product-composition checks.
pub fn sample_pairs(seed: u64, n_pairs: usize) -> Vec<(VPolytope, VPolytope)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_pairs)
        .map(|_| (random_polytope(&mut rng, 6), random_polytope(&mut rng, 6)))
        .collect()
}

/// Pyramidal width of the product equals `sqrt(a^2 b^2 / (a^2 + b^2))` of
/// the factor widths, within [`TOL_PW_PRODUCT_REL`] relative.
pub fn check_product_pw_theorem(seed: u64, n_pairs: usize) -> CheckOutcome {
    const NAME: &str = "product-pyramidal-width";
    let mut max_rel = 0.0f64;
    for (i, (p, q)) in sample_pairs(seed, n_pairs).iter().enumerate() {
        let run = || -> Result<f64, crate::condnum::CondError> {
            let a = pyramidal_width(p)?;
            let b = pyramidal_width(q)?;
            let formula = product_pw_formula(a, b)?;
            let brute = ProductBrute::new(&[p, q], 16)?.pyramidal_width()?.0;
            Ok(((brute - formula) / formula).abs())
        };
        match run() {
            Ok(rel) => max_rel = max_rel.max(rel),
            Err(e) => return CheckOutcome::fail(NAME, format!("pair {i}: {e}")),
        }
    }
    let details = format!("{n_pairs} pairs, max relative error {max_rel:.3e}");
    if max_rel <= TOL_PW_PRODUCT_REL {
        CheckOutcome::pass(NAME, details)
    } else {
        CheckOutcome::fail(NAME, details)
    }
}

/// Pyramidal width equals affine pyramidal width (at the minimum over faces)
/// on the criterion pairs, their products, and the canonical set.
pub fn check_widths_equivalence(seed: u64, n_pairs: usize) -> CheckOutcome {
    const NAME: &str = "widths-equivalence";
    let mut max_abs = 0.0f64;
    let mut consider = |pw: f64, apw: f64| {
        max_abs = max_abs.max((pw - apw).abs());
    };
    for (i, (p, q)) in sample_pairs(seed, n_pairs).iter().enumerate() {
        let mut run = || -> Result<(), crate::condnum::CondError> {
            consider(pyramidal_width(p)?, affine_pyramidal_width(p)?);
            consider(pyramidal_width(q)?, affine_pyramidal_width(q)?);
            let brute = ProductBrute::new(&[p, q], 16)?;
            consider(brute.pyramidal_width()?.0, brute.affine_pyramidal_width()?.0);
            Ok(())
        };
        if let Err(e) = run() {
            return CheckOutcome::fail(NAME, format!("pair {i}: {e}"));
        }
    }
    for p in canonical_set() {
        match (pyramidal_width(&p), affine_pyramidal_width(&p)) {
            (Ok(pw), Ok(apw)) => consider(pw, apw),
            (Err(e), _) | (_, Err(e)) => {
                return CheckOutcome::fail(NAME, format!("canonical: {e}"))
            }
        }
    }
    let details = format!("max |pw - apw| = {max_abs:.3e}");
    if max_abs <= TOL_WIDTHS_EQUIV {
        CheckOutcome::pass(NAME, details)
    } else {
        CheckOutcome::fail(NAME, details)
    }
}

/// Vertex-facet distance of a product is the minimum over factors, and
/// dominates the pyramidal width, on the criterion pairs.
pub fn check_vf_product_rule(seed: u64, n_pairs: usize) -> CheckOutcome {
    const NAME: &str = "vertex-facet-product";
    let mut max_abs = 0.0f64;
    let mut min_slack = f64::INFINITY;
    for (i, (p, q)) in sample_pairs(seed, n_pairs).iter().enumerate() {
        let mut run = || -> Result<(), crate::condnum::CondError> {
            let vf_p = vertex_facet_distance(p)?;
            let vf_q = vertex_facet_distance(q)?;
            let brute = ProductBrute::new(&[p, q], 16)?;
            let vf_prod = brute.vertex_facet_distance()?.0;
            max_abs = max_abs.max((vf_prod - product_vf(&[vf_p, vf_q])?).abs());
            min_slack = min_slack.min(vf_p - pyramidal_width(p)?);
            min_slack = min_slack.min(vf_q - pyramidal_width(q)?);
            min_slack = min_slack.min(vf_prod - brute.pyramidal_width()?.0);
            Ok(())
        };
        if let Err(e) = run() {
            return CheckOutcome::fail(NAME, format!("pair {i}: {e}"));
        }
    }
    let details =
        format!("max |vf(PxQ) - min| = {max_abs:.3e}, min vf - pw slack = {min_slack:.3e}");
    if max_abs <= TOL_VF_PRODUCT && min_slack >= -1e-9 {
        CheckOutcome::pass(NAME, details)
    } else {
        CheckOutcome::fail(NAME, details)
    }
}

/// Brute-force pyramidal width of k-fold products sits between the closed
/// form lower bound and the minimum factor width.
pub fn check_kfold_lower_bound(seed: u64, n_tuples: usize) -> CheckOutcome {
    const NAME: &str = "kfold-lower-bound";
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6b666f6c64);
    let mut worst_lo = f64::INFINITY;
    let mut worst_hi = f64::INFINITY;
    for t in 0..n_tuples {
        // Alternate triples and quadruples, keeping the product vertex count
        // within the brute-force cap of 36.
        let sizes: &[usize] = if t % 2 == 0 { &[3, 3, 4] } else { &[2, 2, 3, 3] };
        let factors: Vec<VPolytope> = sizes
            .iter()
            .map(|&m| {
                let radius = rng.random_range(0.6..1.4);
                let center: Vec<f64> = (0..2).map(|_| rng.random_range(-0.5..0.5)).collect();
                sample_convex_position(2, m, &center, radius, &mut rng)
            })
            .collect();
        let mut run = || -> Result<(), crate::condnum::CondError> {
            let pws = factors
                .iter()
                .map(pyramidal_width)
                .collect::<Result<Vec<_>, _>>()?;
            let refs: Vec<&VPolytope> = factors.iter().collect();
            let brute = ProductBrute::new(&refs, 16)?.pyramidal_width()?.0;
            let lb = product_pw_lower_bound(&pws)?;
            let ub = pws.iter().cloned().fold(f64::INFINITY, f64::min);
            worst_lo = worst_lo.min(brute - lb);
            worst_hi = worst_hi.min(ub - brute);
            Ok(())
        };
        if let Err(e) = run() {
            return CheckOutcome::fail(NAME, format!("tuple {t}: {e}"));
        }
    }
    let details = format!(
        "{n_tuples} tuples, min (pw - lower) = {worst_lo:.3e}, min (min_i pw_i - pw) = {worst_hi:.3e}"
    );
    if worst_lo >= -TOL_KFOLD && worst_hi >= -TOL_KFOLD {
        CheckOutcome::pass(NAME, details)
    } else {
        CheckOutcome::fail(NAME, details)
    }
}

/// Objective identities on random points across k in {2,3,5,10} and
/// n in {1,2,50}: gradient-norm identity, M_k idempotence, Hessian Rayleigh
/// quotient, and gradient vs central finite differences.
pub fn check_objective_identities(seed: u64, n_points: usize) -> CheckOutcome {
    const NAME: &str = "objective-identities";
    let ks = [2usize, 3, 5, 10];
    let ns = [1usize, 2, 50];
    let combos: Vec<(usize, usize)> = ks
        .iter()
        .flat_map(|&k| ns.iter().map(move |&n| (k, n)))
        .collect();
    let per_combo = n_points.div_ceil(combos.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6f626a);
    let mut max_norm_rel = 0.0f64;
    let mut max_mk_rel = 0.0f64;
    let mut max_rayleigh = f64::NEG_INFINITY;
    let mut min_rayleigh = f64::INFINITY;
    let mut max_fd_rel = 0.0f64;

    for &(k, n) in &combos {
        let obj = IntersectionObjective::new(k, n);
        for _ in 0..per_combo {
            let x: Vec<f64> = (0..k * n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let f = obj.eval(&x).unwrap();
            let g = obj.grad(&x).unwrap();

            let gg = crate::vecops::norm_sq(&g);
            max_norm_rel = max_norm_rel.max((gg - 2.0 * f).abs() / (2.0 * f).max(1e-300));

            let mx = obj.apply_mk(&x).unwrap();
            let mmx = obj.apply_mk(&mx).unwrap();
            let scale = crate::vecops::norm(&mx).max(1e-300) * k as f64;
            let mut err = 0.0f64;
            for (a, b) in mmx.iter().zip(&mx) {
                err = err.max((a - k as f64 * b).abs());
            }
            max_mk_rel = max_mk_rel.max(err / scale);

            let xx = crate::vecops::norm_sq(&x);
            if xx > 0.0 {
                let q = crate::vecops::dot(&x, &mx) / (k as f64) / xx;
                max_rayleigh = max_rayleigh.max(q);
                min_rayleigh = min_rayleigh.min(q);
            }

            let fd = central_difference_gradient(&obj, &x, 1e-6);
            let diff: f64 = g
                .iter()
                .zip(&fd)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            max_fd_rel = max_fd_rel.max(diff / crate::vecops::norm(&fd).max(1e-12));
        }
    }

    let details = format!(
        "|grad|^2=2f rel {max_norm_rel:.1e}; MkMk=kMk rel {max_mk_rel:.1e}; rayleigh in [{min_rayleigh:.1e}, {max_rayleigh:.9}]; fd rel {max_fd_rel:.1e}"
    );
    let ok = max_norm_rel <= TOL_OBJ_IDENT_REL
        && max_mk_rel <= TOL_OBJ_IDENT_REL
        && max_rayleigh <= 1.0 + 1e-9
        && min_rayleigh >= -1e-12
        && max_fd_rel <= TOL_GRAD_FD_REL;
    if ok {
        CheckOutcome::pass(NAME, details)
    } else {
        CheckOutcome::fail(NAME, details)
    }
}

fn central_difference_gradient(
    obj: &IntersectionObjective,
    x: &[f64],
    h: f64,
) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let orig = xp[i];
        xp[i] = orig + h;
        let fp = obj.eval(&xp).unwrap();
        xp[i] = orig - h;
        let fm = obj.eval(&xp).unwrap();
        xp[i] = orig;
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

/// Outcome of the contraction check on one seeded instance.
#[derive(Debug, Clone)]
pub struct ContractionStats {
    pub iterations: usize,
    pub drops: usize,
    pub max_violation: f64,
    pub aggregate_ok: bool,
}

/// AFW per-iteration contraction on disjoint k = 2 instances in R^3 with
/// brute-force product widths: every iteration satisfies
/// `h_{t+1} <= (1 - min(Lambda_t/2, delta^2/(16 D^2))) h_t + 1e-12` and the
/// aggregate decay `h_t <= h_0 (1 - rho)^ceil((t-1)/2)`; drop steps number
/// at most ceil(T/2).
pub fn check_afw_contraction(seed: u64, n_instances: usize) -> CheckOutcome {
    const NAME: &str = "afw-contraction";
    match contraction_stats(seed, n_instances) {
        Ok(stats) => {
            let max_violation = stats
                .iter()
                .map(|s| s.max_violation)
                .fold(f64::NEG_INFINITY, f64::max);
            let aggregate_ok = stats.iter().all(|s| s.aggregate_ok);
            let drops_ok = stats.iter().all(|s| s.drops * 2 <= s.iterations + 1);
            let details = format!(
                "{n_instances} instances, worst per-step violation {max_violation:.3e}, aggregate {}",
                if aggregate_ok { "ok" } else { "violated" }
            );
            if max_violation <= TOL_CONTRACTION && aggregate_ok && drops_ok {
                CheckOutcome::pass(NAME, details)
            } else {
                CheckOutcome::fail(NAME, details)
            }
        }
        Err(e) => CheckOutcome::fail(NAME, e),
    }
}

/// Per-instance contraction data for the acceptance suite.
pub fn contraction_stats(
    seed: u64,
    n_instances: usize,
) -> Result<Vec<ContractionStats>, String> {
    let mut out = Vec::with_capacity(n_instances);
    for i in 0..n_instances {
        let verts = 5 + (i % 2);
        // A narrow inter-box gap puts the closest approach on proper face
        // pairs instead of a single vertex pair, which gives the contraction
        // check nontrivial trajectories; blocks remain strictly disjoint.
        let cfg = GenConfig {
            interval_gap: 0.1,
            ..Default::default()
        };
        let inst = generate_disjoint_convex_pos(2, 3, seed.wrapping_add(i as u64), verts, &cfg)
            .map_err(|e| format!("instance {i}: {e}"))?;
        let p1 = VPolytope::new(inst.blocks[0].clone()).map_err(|e| e.to_string())?;
        let p2 = VPolytope::new(inst.blocks[1].clone()).map_err(|e| e.to_string())?;

        let brute = ProductBrute::new(&[&p1, &p2], 16).map_err(|e| e.to_string())?;
        let delta = brute.pyramidal_width().map_err(|e| e.to_string())?.0;
        let diam = brute.polytope.diameter();
        let rho = delta * delta / (16.0 * diam * diam);

        // f* = dist(P1, P2)^2 / 4 for the two-block objective, from the
        // polished distance kernel.
        let (_, _, dist) =
            closest_pair(inst.blocks[0].as_slice(), inst.blocks[1].as_slice())
                .map_err(|e| e.to_string())?;
        let fstar = dist * dist / 4.0;

        let pp = inst.product().map_err(|e| e.to_string())?;
        let obj = IntersectionObjective::new(2, 3);
        let config = SolverConfig {
            max_iters: 5000,
            gap_tol: 1e-7,
            ..Default::default()
        };
        let run = run_afw(&obj, &pp, &[0, 0], &config).map_err(|e| e.to_string())?;
        if !run.converged {
            return Err(format!("instance {i}: AFW did not reach the gap tolerance"));
        }

        let mut h: Vec<f64> = run.trace.iter().map(|r| r.f - fstar).collect();
        h.push(run.final_f - fstar);
        let mut max_violation = f64::NEG_INFINITY;
        for (t, rec) in run.trace.iter().enumerate() {
            let factor = 1.0 - (rec.big_lambda / 2.0).min(rho);
            max_violation = max_violation.max(h[t + 1] - factor * h[t]);
        }
        let mut aggregate_ok = true;
        for (t, &ht) in h.iter().enumerate() {
            let exponent = t.saturating_sub(1).div_ceil(2) as i32;
            let bound = h[0] * (1.0 - rho).powi(exponent);
            if ht > bound * (1.0 + 1e-9) + TOL_CONTRACTION {
                aggregate_ok = false;
            }
        }
        let drops = run
            .trace
            .iter()
            .filter(|r| r.step_type == StepType::Drop)
            .count();
        out.push(ContractionStats {
            iterations: run.trace.len(),
            drops,
            max_violation,
            aggregate_ok,
        });
    }
    Ok(out)
}

fn canonical_set() -> Vec<VPolytope> {
    let segment = VPolytope::new(vec![vec![0.0], vec![1.0]]).unwrap();
    let square = VPolytope::new(vec![
        vec![0.0, 0.0],
        vec![1.0, 0.0],
        vec![0.0, 1.0],
        vec![1.0, 1.0],
    ])
    .unwrap();
    let triangle =
        VPolytope::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let mut cube_verts = Vec::new();
    for x in 0..2 {
        for y in 0..2 {
            for z in 0..2 {
                cube_verts.push(vec![x as f64, y as f64, z as f64]);
            }
        }
    }
    let cube = VPolytope::new(cube_verts).unwrap();
    vec![segment, square, triangle, cube]
}

/// The full suite at reduced sample sizes suitable for the CLI; the
/// acceptance tests run the same checks at their stated sizes.
pub fn run_all(seed: u64, quick: bool) -> Vec<CheckOutcome> {
    let (pairs, tuples, points, instances) = if quick {
        (5, 4, 240, 3)
    } else {
        (25, 10, 1000, 10)
    };
    vec![
        check_product_pw_theorem(seed, pairs),
        check_widths_equivalence(seed, pairs),
        check_vf_product_rule(seed, pairs),
        check_kfold_lower_bound(seed, tuples),
        check_objective_identities(seed, points),
        check_afw_contraction(seed, instances),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_product_pw_check_passes() {
        let out = check_product_pw_theorem(11, 3);
        assert!(out.passed, "{}", out.details);
    }

    #[test]
    fn quick_objective_identities_pass() {
        let out = check_objective_identities(5, 60);
        assert!(out.passed, "{}", out.details);
    }

    #[test]
    fn quick_contraction_check_passes() {
        let out = check_afw_contraction(3, 2);
        assert!(out.passed, "{}", out.details);
    }
}
