//! Cyclic block-coordinate Frank-Wolfe: one block LMO and one block update
//! per iteration, cycling i = 0..k-1. One block update counts as one
//! iteration, so iteration counts are not directly comparable with the full
//! solvers; the stopping rule still uses the full-product FW gap, which is
//! separable and comes from the same gradient pass.

use std::time::Instant;

use crate::objective::SmoothObjective;
use crate::polytope::ProductPolytope;
use crate::vecops::{dot, norm_sq};

use super::{step_length, SolverConfig, SolverError, StepRecord, StepType, VertexKey};

/// Result of a cyclic block-coordinate FW run: a bare feasible point plus
/// the trace (no active-set bookkeeping in this variant).
#[derive(Debug, Clone)]
pub struct CbcOutput {
    pub x: Vec<f64>,
    pub trace: Vec<StepRecord>,
    pub iterations: usize,
    pub final_f: f64,
    pub final_gap: f64,
    pub converged: bool,
}

/// Run cyclic block-coordinate FW from a feasible point.
pub fn run_cbc_fw<O: SmoothObjective>(
    obj: &O,
    pp: &ProductPolytope,
    x0: &[f64],
    config: &SolverConfig,
) -> Result<CbcOutput, SolverError> {
    let n = pp.block_dim();
    let k = pp.num_blocks();
    let mut x = x0.to_vec();
    let mut trace = Vec::new();
    let started = Instant::now();
    let mut t = 0usize;

    let (final_f, final_gap, converged) = loop {
        let f = obj.value(&x);
        let g = obj.gradient(&x);
        let lmo = pp.product_lmo(&g)?;
        let w_key: VertexKey = lmo.iter().map(|(i, _)| *i as u32).collect();
        let mut gap = 0.0;
        for (i, (_, v)) in lmo.iter().enumerate() {
            let gi = pp.block_slice(&g, i);
            let xi = &x[i * n..(i + 1) * n];
            gap += dot(gi, xi) - dot(gi, v);
        }

        if gap <= config.gap_tol {
            break (f, gap, true);
        }
        if t >= config.max_iters {
            break (f, gap, false);
        }

        // Update only block i with the step rule restricted to that block:
        // the direction is zero off-block, so |d|^2 and <d, Hd> are taken on
        // the embedded full-space vector.
        let i = t % k;
        let (_, wi) = lmo[i];
        let mut d = vec![0.0; x.len()];
        for (j, dv) in d[i * n..(i + 1) * n].iter_mut().enumerate() {
            *dv = x[i * n + j] - wi[j];
        }
        let d_norm_sq = norm_sq(&d);
        let gd = dot(pp.block_slice(&g, i), &d[i * n..(i + 1) * n]);
        let lambda = if d_norm_sq == 0.0 || gd <= 0.0 {
            0.0
        } else {
            step_length(obj, config, gd, &d, d_norm_sq, 1.0)
        };
        for (xj, dj) in x[i * n..(i + 1) * n]
            .iter_mut()
            .zip(&d[i * n..(i + 1) * n])
        {
            *xj -= lambda * dj;
        }

        t += 1;
        if config.record_trace {
            trace.push(StepRecord {
                iter: t - 1,
                step_type: StepType::Fw,
                lambda,
                big_lambda: 1.0,
                fw_vertex: w_key,
                away_vertex: None,
                direction_alignment: gd,
                away_gap: 0.0,
                f,
                fw_gap: gap,
                time_s: started.elapsed().as_secs_f64(),
                active_set_size: 0,
            });
        }
    };

    Ok(CbcOutput {
        x,
        trace,
        iterations: t,
        final_f,
        final_gap,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{DenseQuadratic, IntersectionObjective};
    use crate::polytope::VPolytope;
    use crate::solvers::{run_fw, ActiveIterate};

    fn two_segments() -> ProductPolytope {
        let seg = VPolytope::new(vec![vec![0.0], vec![1.0]]).unwrap();
        ProductPolytope::new(vec![seg.clone(), seg]).unwrap()
    }

    #[test]
    fn cbc_single_block_matches_full_fw() {
        // k = 1 degenerates to vanilla FW: identical iterates.
        let square = VPolytope::new(vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
        ])
        .unwrap();
        let pp = ProductPolytope::new(vec![square]).unwrap();
        // f(z) = |z - (0.3, 0.6)|^2.
        let obj = DenseQuadratic::new(
            vec![vec![2.0, 0.0], vec![0.0, 2.0]],
            vec![-0.6, -1.2],
            2.0,
            2.0,
        );
        let config = SolverConfig {
            gap_tol: 1e-10,
            max_iters: 100,
            ..Default::default()
        };
        let cbc = run_cbc_fw(&obj, &pp, &[1.0, 1.0], &config).unwrap();
        let fw = run_fw(
            &obj,
            &pp,
            ActiveIterate::from_vertex(&pp, &[3]).unwrap(),
            &config,
        )
        .unwrap();
        assert_eq!(cbc.iterations, fw.iterations);
        for (a, b) in cbc.trace.iter().zip(&fw.trace) {
            assert_eq!(a.fw_vertex, b.fw_vertex);
            assert!((a.lambda - b.lambda).abs() < 1e-15);
            assert!((a.f - b.f).abs() < 1e-15);
        }
        for (a, b) in cbc.x.iter().zip(&fw.iterate.x) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cbc_half_cycle_decreases_f() {
        // From (1, 0) the first block update moves x^1 toward 0 and strictly
        // decreases f.
        let pp = two_segments();
        let obj = IntersectionObjective::new(2, 1);
        let config = SolverConfig {
            max_iters: 1,
            ..Default::default()
        };
        let out = run_cbc_fw(&obj, &pp, &[1.0, 0.0], &config).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.x[0] < 1.0);
        assert_eq!(out.x[1], 0.0);
        assert!(out.final_f < 0.25);
    }

    #[test]
    fn cbc_constant_objective_does_not_move() {
        let pp = two_segments();
        let obj = DenseQuadratic::new(vec![vec![0.0; 2]; 2], vec![0.0, 0.0], 0.0, 0.0);
        let out = run_cbc_fw(&obj, &pp, &[1.0, 0.0], &SolverConfig::default()).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 0);
        assert_eq!(out.x, vec![1.0, 0.0]);
    }

    #[test]
    fn cbc_converges_on_two_segments() {
        let pp = two_segments();
        let obj = IntersectionObjective::new(2, 1);
        let config = SolverConfig {
            gap_tol: 1e-9,
            max_iters: 500,
            ..Default::default()
        };
        let out = run_cbc_fw(&obj, &pp, &[1.0, 0.0], &config).unwrap();
        assert!(out.converged);
        assert!(out.final_f <= 1e-9);
    }
}
