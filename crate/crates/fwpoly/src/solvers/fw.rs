//! Vanilla Frank-Wolfe: step toward the LMO vertex, no away directions.

use std::time::Instant;

use crate::objective::SmoothObjective;
use crate::polytope::ProductPolytope;
use crate::vecops::{axpy, dot, norm_sq};

use super::{
    fw_direction, step_length, ActiveIterate, SolveOutput, SolverConfig, SolverError, StepRecord,
    StepType, VertexKey, RECONSTRUCTION_TOL, WEIGHT_SUM_TOL,
};

/// How often the full reconstruction check runs; vanilla FW active sets grow
/// with the iteration count, so the O(|A| n k) check is throttled. The
/// weight-sum check still runs every iteration.
const RECON_CHECK_EVERY: usize = 64;

/// Run vanilla FW from a feasible iterate until the FW gap drops to
/// `gap_tol` or the iteration cap. The convex-combination weights are
/// carried along so the result is an [`ActiveIterate`].
pub fn run_fw<O: SmoothObjective>(
    obj: &O,
    pp: &ProductPolytope,
    x0: ActiveIterate,
    config: &SolverConfig,
) -> Result<SolveOutput, SolverError> {
    x0.check_invariants(pp)?;
    let mut it = x0;
    let mut trace = Vec::new();
    let started = Instant::now();
    let mut t = 0usize;
    let n = pp.block_dim();

    let (final_f, final_gap, converged) = loop {
        let f = obj.value(&it.x);
        let g = obj.gradient(&it.x);
        let lmo = pp.product_lmo(&g)?;
        let w_key: VertexKey = lmo.iter().map(|(i, _)| *i as u32).collect();
        let mut w_coords = vec![0.0; it.x.len()];
        for (i, (_, v)) in lmo.iter().enumerate() {
            w_coords[i * n..(i + 1) * n].copy_from_slice(v);
        }
        let gap = dot(&g, &it.x) - dot(&g, &w_coords);

        if gap <= config.gap_tol {
            break (f, gap, true);
        }
        if t >= config.max_iters {
            break (f, gap, false);
        }

        let d = fw_direction(&it.x, &w_coords);
        let d_norm_sq = norm_sq(&d);
        let lambda = if d_norm_sq == 0.0 {
            0.0
        } else {
            step_length(obj, config, gap, &d, d_norm_sq, 1.0)
        };
        axpy(-lambda, &d, &mut it.x);
        for (key, w) in it.active.iter_mut() {
            if *key != w_key {
                *w *= 1.0 - lambda;
            }
        }
        let entry = it.active.entry(w_key.clone()).or_insert(0.0);
        *entry = (1.0 - lambda) * *entry + lambda;
        it.sweep_floor();

        let sum = it.weight_sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(SolverError::WeightBookkeeping(format!(
                "weights sum to {sum}"
            )));
        }
        if t.is_multiple_of(RECON_CHECK_EVERY) {
            let err = it.reconstruction_error(pp);
            if err > RECONSTRUCTION_TOL {
                return Err(SolverError::WeightBookkeeping(format!(
                    "reconstruction error {err}"
                )));
            }
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
                direction_alignment: gap,
                away_gap: 0.0,
                f,
                fw_gap: gap,
                time_s: started.elapsed().as_secs_f64(),
                active_set_size: it.active.len(),
            });
        }
    };

    it.check_invariants(pp)?;
    Ok(SolveOutput {
        iterate: it,
        trace,
        iterations: t,
        final_f,
        final_gap,
        converged,
    })
}
