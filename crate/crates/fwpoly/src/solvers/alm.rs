//! Alternating linear minimization for two blocks: an LMO and update on
//! block x with the current gradient, then an LMO and update on block y with
//! the gradient re-evaluated at the fresh x.

use std::time::Instant;

use crate::objective::SmoothObjective;
use crate::polytope::ProductPolytope;
use crate::vecops::{dot, norm_sq};

use super::{gap_from_gradient, step_length, SolverConfig, SolverError, StepRecord, StepType};

#[derive(Debug, Clone)]
pub struct AlmOutput {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub trace: Vec<StepRecord>,
    pub iterations: usize,
    pub final_f: f64,
    pub final_gap: f64,
    pub converged: bool,
}

/// Run alternating linear minimization on a two-block product. One iteration
/// performs both block updates; the recorded lambda is the x-block step.
pub fn run_alm<O: SmoothObjective>(
    obj: &O,
    pp: &ProductPolytope,
    x0: &[f64],
    y0: &[f64],
    config: &SolverConfig,
) -> Result<AlmOutput, SolverError> {
    if pp.num_blocks() != 2 {
        return Err(SolverError::NotTwoBlocks(pp.num_blocks()));
    }
    let n = pp.block_dim();
    let mut z = Vec::with_capacity(2 * n);
    z.extend_from_slice(x0);
    z.extend_from_slice(y0);
    let mut trace = Vec::new();
    let started = Instant::now();
    let mut t = 0usize;

    let (final_f, final_gap, converged) = loop {
        let f = obj.value(&z);
        let g = obj.gradient(&z);
        let gap = gap_from_gradient(pp, &g, &z)?;

        if gap <= config.gap_tol {
            break (f, gap, true);
        }
        if t >= config.max_iters {
            break (f, gap, false);
        }

        // Block x: LMO with the current gradient.
        let (w_idx, w) = pp.block(0).lmo(&g[..n])?;
        let mut d = vec![0.0; 2 * n];
        for j in 0..n {
            d[j] = z[j] - w[j];
        }
        let gd = dot(&g[..n], &d[..n]);
        let lambda_x = if norm_sq(&d) == 0.0 || gd <= 0.0 {
            0.0
        } else {
            step_length(obj, config, gd, &d, norm_sq(&d), 1.0)
        };
        for j in 0..n {
            z[j] -= lambda_x * d[j];
        }

        // Block y: LMO with the gradient at the updated x.
        let g2 = obj.gradient(&z);
        let (z_idx, w2) = pp.block(1).lmo(&g2[n..])?;
        let mut d2 = vec![0.0; 2 * n];
        for j in 0..n {
            d2[n + j] = z[n + j] - w2[j];
        }
        let gd2 = dot(&g2[n..], &d2[n..]);
        let lambda_y = if norm_sq(&d2) == 0.0 || gd2 <= 0.0 {
            0.0
        } else {
            step_length(obj, config, gd2, &d2, norm_sq(&d2), 1.0)
        };
        for j in 0..n {
            z[n + j] -= lambda_y * d2[j + n];
        }

        t += 1;
        if config.record_trace {
            trace.push(StepRecord {
                iter: t - 1,
                step_type: StepType::Fw,
                lambda: lambda_x,
                big_lambda: 1.0,
                fw_vertex: vec![w_idx as u32, z_idx as u32],
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

    Ok(AlmOutput {
        x: z[..n].to_vec(),
        y: z[n..].to_vec(),
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
    use crate::objective::IntersectionObjective;
    use crate::polytope::VPolytope;

    #[test]
    fn alm_requires_two_blocks() {
        let seg = VPolytope::new(vec![vec![0.0], vec![1.0]]).unwrap();
        let pp = ProductPolytope::new(vec![seg.clone(), seg.clone(), seg]).unwrap();
        let obj = IntersectionObjective::new(3, 1);
        let err = run_alm(&obj, &pp, &[0.0], &[1.0], &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, SolverError::NotTwoBlocks(3)));
    }

    #[test]
    fn alm_identical_segments_from_opposite_ends() {
        let seg = VPolytope::new(vec![vec![0.0], vec![1.0]]).unwrap();
        let pp = ProductPolytope::new(vec![seg.clone(), seg]).unwrap();
        let obj = IntersectionObjective::new(2, 1);
        let config = SolverConfig {
            gap_tol: 1e-12,
            max_iters: 200,
            ..Default::default()
        };
        let out = run_alm(&obj, &pp, &[0.0], &[1.0], &config).unwrap();
        assert!(out.final_f <= 1e-10, "final f = {}", out.final_f);
        let mut fs: Vec<f64> = out.trace.iter().map(|r| r.f).collect();
        fs.push(out.final_f);
        for w in fs.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn alm_equal_starts_terminate_immediately() {
        let seg = VPolytope::new(vec![vec![0.0], vec![1.0]]).unwrap();
        let pp = ProductPolytope::new(vec![seg.clone(), seg]).unwrap();
        let obj = IntersectionObjective::new(2, 1);
        let out = run_alm(&obj, &pp, &[0.5], &[0.5], &SolverConfig::default()).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 0);
        assert_eq!(out.final_f, 0.0);
    }

    #[test]
    fn alm_disjoint_singletons_are_a_fixed_point() {
        let a = VPolytope::new(vec![vec![0.0]]).unwrap();
        let b = VPolytope::new(vec![vec![1.0]]).unwrap();
        let pp = ProductPolytope::new(vec![a, b]).unwrap();
        let obj = IntersectionObjective::new(2, 1);
        let out = run_alm(&obj, &pp, &[0.0], &[1.0], &SolverConfig::default()).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 0);
        assert!((out.final_f - 0.25).abs() < 1e-15);
        assert_eq!(out.final_gap, 0.0);
    }
}
