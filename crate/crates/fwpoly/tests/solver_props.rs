//! Solver-level properties on seeded instances: monotone descent, active-set
//! integrity, the pairwise-direction dominance bound, the scaling inequality
//! against brute-force pyramidal widths, FW-gap domination of the primal
//! gap, and dual lower-bound validity.

use fwpoly::condnum::{closest_pair, ProductBrute};
use fwpoly::experiment::{reference_optimum, run_experiment, Algo};
use fwpoly::instance::{
    generate_disjoint, generate_disjoint_convex_pos, make_intersecting, GenConfig,
};
use fwpoly::objective::{IntersectionObjective, SmoothObjective};
use fwpoly::polytope::VPolytope;
use fwpoly::solvers::{AfwState, SolverConfig, StepRule};
use fwpoly::vecops::{norm, sub};

fn convex_pos_instance(seed: u64) -> fwpoly::instance::Instance {
    // Narrow gap: closest approach lands on faces, so runs take many
    // iterations and the per-iteration properties get real coverage.
    let cfg = GenConfig {
        interval_gap: 0.1,
        ..Default::default()
    };
    generate_disjoint_convex_pos(2, 3, seed, 5, &cfg).unwrap()
}

#[test]
fn all_solvers_descend_monotonically_under_short_step() {
    let inst = generate_disjoint(2, 5, 301, &GenConfig::default()).unwrap();
    let config = SolverConfig {
        max_iters: 400,
        gap_tol: 1e-9,
        step_rule: StepRule::ShortStep,
        ..Default::default()
    };
    let runs = run_experiment(
        &inst,
        &[Algo::Fw, Algo::Afw, Algo::Cbcfw, Algo::Alm],
        &config,
    )
    .unwrap();
    for run in &runs {
        let mut fs: Vec<f64> = run.trace.iter().map(|r| r.f).collect();
        fs.push(run.summary.final_f);
        for w in fs.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-12,
                "{}: descent violated {} -> {}",
                run.summary.algo.as_str(),
                w[0],
                w[1]
            );
        }
    }
}

#[test]
fn afw_active_set_invariants_hold_every_iteration() {
    let inst = convex_pos_instance(77);
    let pp = inst.product().unwrap();
    let obj = IntersectionObjective::new(2, 3);
    let config = SolverConfig {
        max_iters: 3000,
        gap_tol: 1e-9,
        ..Default::default()
    };
    let mut st = AfwState::new(&obj, &pp, &[0, 0], config).unwrap();
    loop {
        let (_, gap) = st.evaluate().unwrap();
        if gap <= config.gap_tol || st.iterations() >= config.max_iters {
            break;
        }
        st.advance().unwrap();
        // advance() enforces these internally; re-assert from outside.
        let it = st.iterate();
        assert!(it.active.values().all(|&w| w > 0.0));
        assert!((it.weight_sum() - 1.0).abs() <= 1e-9);
        assert!(it.reconstruction_error(&pp) <= 1e-7);
    }
}

#[test]
fn pairwise_direction_dominance() {
    // 2 <grad, d_t> >= <grad, a_t - w_t> at every AFW iteration.
    for seed in [11u64, 12, 13] {
        let inst = convex_pos_instance(seed);
        let pp = inst.product().unwrap();
        let obj = IntersectionObjective::new(2, 3);
        let config = SolverConfig {
            max_iters: 3000,
            gap_tol: 1e-9,
            ..Default::default()
        };
        let out = fwpoly::solvers::run_afw(&obj, &pp, &[0, 0], &config).unwrap();
        assert!(out.converged);
        for rec in &out.trace {
            let pairwise = rec.fw_gap + rec.away_gap;
            assert!(
                2.0 * rec.direction_alignment >= pairwise - 1e-9,
                "seed {seed} iter {}: 2<g,d> = {} < pairwise {}",
                rec.iter,
                2.0 * rec.direction_alignment,
                pairwise
            );
        }
    }
}

#[test]
fn scaling_inequality_against_brute_force_width() {
    // <grad, a_t - w_t> >= delta * <grad, (x_t - x*)/|x_t - x*|> at every
    // suboptimal iterate, with delta the product's brute-force pyramidal
    // width and x* the polished closest pair.
    for seed in [21u64, 22] {
        let inst = convex_pos_instance(seed);
        let p1 = VPolytope::new(inst.blocks[0].clone()).unwrap();
        let p2 = VPolytope::new(inst.blocks[1].clone()).unwrap();
        let delta = ProductBrute::new(&[&p1, &p2], 16)
            .unwrap()
            .pyramidal_width()
            .unwrap()
            .0;
        let (p_star, q_star, _) = closest_pair(&inst.blocks[0], &inst.blocks[1]).unwrap();
        let mut x_star = p_star;
        x_star.extend_from_slice(&q_star);

        let pp = inst.product().unwrap();
        let obj = IntersectionObjective::new(2, 3);
        let fstar = obj.value(&x_star);
        let config = SolverConfig {
            max_iters: 3000,
            gap_tol: 1e-9,
            ..Default::default()
        };
        let mut st = AfwState::new(&obj, &pp, &[0, 0], config).unwrap();
        loop {
            let (f, gap) = st.evaluate().unwrap();
            if gap <= config.gap_tol || st.iterations() >= config.max_iters {
                break;
            }
            let x = st.iterate().x.clone();
            let rec = st.advance().unwrap();
            if f - fstar <= 1e-9 {
                continue;
            }
            let err_dir = sub(&x, &x_star);
            let err_norm = norm(&err_dir);
            let g = obj.gradient(&x);
            let aligned = fwpoly::vecops::dot(&g, &err_dir) / err_norm;
            let pairwise = rec.fw_gap + rec.away_gap;
            assert!(
                pairwise >= delta * aligned - 1e-7,
                "seed {seed} iter {}: pairwise {} < delta*aligned {}",
                rec.iter,
                pairwise,
                delta * aligned
            );
        }
    }
}

#[test]
fn fw_gap_dominates_primal_gap_on_traces() {
    for seed in [31u64, 32] {
        let disjoint = generate_disjoint(2, 4, seed, &GenConfig::default()).unwrap();
        let fstar = reference_optimum(&disjoint).unwrap();
        let config = SolverConfig {
            max_iters: 2000,
            gap_tol: 1e-9,
            ..Default::default()
        };
        let runs = run_experiment(&disjoint, &[Algo::Afw, Algo::Fw], &config).unwrap();
        for run in &runs {
            for rec in &run.trace {
                assert!(
                    rec.fw_gap >= rec.f - fstar - 1e-9,
                    "{} iter {}: gap {} < primal gap {}",
                    run.summary.algo.as_str(),
                    rec.iter,
                    rec.fw_gap,
                    rec.f - fstar
                );
            }
        }
    }
}

#[test]
fn dual_lower_bound_never_exceeds_fstar() {
    // l_t = max_s (f - gap) stays below f*: 0 for intersecting instances,
    // the reference optimum for disjoint ones.
    for seed in [41u64, 42] {
        let disjoint = generate_disjoint(2, 4, seed, &GenConfig::default()).unwrap();
        let intersecting = make_intersecting(&disjoint, seed).unwrap();
        for (inst, fstar) in [
            (disjoint.clone(), reference_optimum(&disjoint).unwrap()),
            (intersecting, 0.0),
        ] {
            let pp = inst.product().unwrap();
            let obj = IntersectionObjective::new(inst.k, inst.n);
            let config = SolverConfig {
                max_iters: 1500,
                gap_tol: 1e-10,
                ..Default::default()
            };
            let mut st = AfwState::new(&obj, &pp, &vec![0u32; inst.k], config).unwrap();
            let mut lower = f64::NEG_INFINITY;
            loop {
                let (f, gap) = st.evaluate().unwrap();
                lower = lower.max(f - gap);
                assert!(
                    lower <= fstar + 1e-9,
                    "seed {seed}: dual bound {lower} above f* = {fstar}"
                );
                if gap <= config.gap_tol || st.iterations() >= config.max_iters {
                    break;
                }
                st.advance().unwrap();
            }
        }
    }
}

#[test]
fn approx_feasible_blocks_are_pairwise_close() {
    let disjoint = generate_disjoint(3, 4, 55, &GenConfig::default()).unwrap();
    let inst = make_intersecting(&disjoint, 56).unwrap();
    let eps = 1e-3;
    let config = SolverConfig {
        max_iters: 5000,
        ..Default::default()
    };
    let verdict = fwpoly::feasibility::decide_feasibility(&inst, eps, &config).unwrap();
    let fwpoly::feasibility::FeasibilityStatus::ApproxFeasible { .. } = verdict.status else {
        panic!("expected feasible, got {:?}", verdict.status);
    };
    // |x^i - x^j|^2 <= 2k f(x) for every pair, by the objective definition.
    assert!(verdict.final_f <= eps / (2.0 * 3.0));
}
