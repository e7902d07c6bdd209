//! Feasibility decisions on polytope intersections.
//!
//! Runs AFW on the pairwise-distance objective over the instance's product.
//! The verdict comes from two certificates: the objective value dropping to
//! `eps / 2k` proves approximate feasibility (the optimum is 0 when the
//! intersection is nonempty), while a positive dual lower bound
//! `l_t = max_s f(x_s) - gap(x_s)` proves the optimum is strictly positive,
//! so the intersection is empty. Hitting the iteration cap with neither
//! certificate leaves the instance undecided, a first-class outcome.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Instance, InstanceError};
use crate::objective::{IntersectionObjective, ObjectiveError};
use crate::solvers::{AfwState, SolverConfig, SolverError};

/// Declare infeasibility only when the dual lower bound clears this margin,
/// guarding against gap-rounding noise.
pub const INFEASIBILITY_MARGIN: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum FeasibilityError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status")]
pub enum FeasibilityStatus {
    /// Every block variable is within the tolerance of a single point; the
    /// witness is the block mean of the final iterate.
    ApproxFeasible { witness: Vec<f64> },
    /// The optimal objective value is strictly positive.
    Infeasible { lower_bound: f64 },
    /// Iteration cap reached without a certificate.
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityVerdict {
    #[serde(flatten)]
    pub status: FeasibilityStatus,
    pub iterations: usize,
    pub final_f: f64,
    pub final_gap: f64,
    pub threshold: f64,
    /// Max pairwise distance between block variables of the final iterate;
    /// present on ApproxFeasible verdicts.
    pub max_block_distance: Option<f64>,
}

impl FeasibilityVerdict {
    /// Conventional process exit code: 0 feasible, 1 infeasible, 2
    /// undecided.
    pub fn exit_code(&self) -> i32 {
        match self.status {
            FeasibilityStatus::ApproxFeasible { .. } => 0,
            FeasibilityStatus::Infeasible { .. } => 1,
            FeasibilityStatus::Undecided => 2,
        }
    }
}

/// Decide approximate feasibility of the instance's intersection at
/// tolerance `eps`.
pub fn decide_feasibility(
    inst: &Instance,
    eps: f64,
    config: &SolverConfig,
) -> Result<FeasibilityVerdict, FeasibilityError> {
    inst.validate()?;
    let pp = inst.product()?;
    let obj = IntersectionObjective::new(inst.k, inst.n);
    let threshold = obj.feasibility_threshold(eps)?;

    let x0 = vec![0u32; inst.k];
    let mut st = AfwState::new(&obj, &pp, &x0, *config)?;
    let mut lower = f64::NEG_INFINITY;

    loop {
        // The cap bounds how many iterates get certificate checks; with
        // max_iters = 0 nothing is checked and the verdict is Undecided.
        if st.iterations() >= config.max_iters {
            let (f, gap) = st.evaluate()?;
            return Ok(FeasibilityVerdict {
                status: FeasibilityStatus::Undecided,
                iterations: st.iterations(),
                final_f: f,
                final_gap: gap,
                threshold,
                max_block_distance: None,
            });
        }
        let (f, gap) = st.evaluate()?;
        lower = lower.max(f - gap);
        if f <= threshold {
            let x = &st.iterate().x;
            let witness = obj.block_mean(x);
            let max_block_distance = Some(max_pairwise_block_distance(x, inst.k, inst.n));
            return Ok(FeasibilityVerdict {
                status: FeasibilityStatus::ApproxFeasible { witness },
                iterations: st.iterations(),
                final_f: f,
                final_gap: gap,
                threshold,
                max_block_distance,
            });
        }
        if lower > INFEASIBILITY_MARGIN {
            return Ok(FeasibilityVerdict {
                status: FeasibilityStatus::Infeasible {
                    lower_bound: lower,
                },
                iterations: st.iterations(),
                final_f: f,
                final_gap: gap,
                threshold,
                max_block_distance: None,
            });
        }
        st.advance()?;
    }
}

/// Max over block pairs of the Euclidean distance between block variables.
fn max_pairwise_block_distance(x: &[f64], k: usize, n: usize) -> f64 {
    let mut best = 0.0f64;
    for i in 0..k {
        for j in (i + 1)..k {
            best = best.max(crate::vecops::dist(
                &x[i * n..(i + 1) * n],
                &x[j * n..(j + 1) * n],
            ));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_disjoint, make_intersecting, GenConfig, InstanceMeta};
    use crate::instance::GENERATOR_VERSION;

    fn singleton_instance() -> Instance {
        Instance {
            k: 2,
            n: 1,
            blocks: vec![vec![vec![0.0]], vec![vec![1.0]]],
            meta: InstanceMeta {
                seed: 0,
                intersecting: false,
                vertices_per_block: vec![1, 1],
                generator_version: GENERATOR_VERSION.into(),
                common_point: None,
                interval_width: 1.0,
                interval_gap: 1.0,
            },
        }
    }

    #[test]
    fn disjoint_singletons_are_infeasible() {
        // Only one product point: f = 0.25 with gap 0, so the dual bound
        // certifies infeasibility immediately.
        let verdict =
            decide_feasibility(&singleton_instance(), 1e-3, &SolverConfig::default()).unwrap();
        match verdict.status {
            FeasibilityStatus::Infeasible { lower_bound } => {
                assert!((lower_bound - 0.25).abs() < 1e-12);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
        assert_eq!(verdict.exit_code(), 1);
        assert_eq!(verdict.iterations, 0);
    }

    #[test]
    fn identical_segments_are_feasible() {
        let inst = Instance {
            k: 2,
            n: 1,
            blocks: vec![
                vec![vec![0.0], vec![1.0]],
                vec![vec![0.0], vec![1.0]],
            ],
            meta: InstanceMeta {
                seed: 0,
                intersecting: true,
                vertices_per_block: vec![2, 2],
                generator_version: GENERATOR_VERSION.into(),
                common_point: Some(vec![0.5]),
                interval_width: 1.0,
                interval_gap: 1.0,
            },
        };
        let eps = 1e-3;
        let verdict = decide_feasibility(&inst, eps, &SolverConfig::default()).unwrap();
        match &verdict.status {
            FeasibilityStatus::ApproxFeasible { witness } => {
                assert!(witness[0] >= 0.0 && witness[0] <= 1.0);
            }
            other => panic!("expected feasible, got {other:?}"),
        }
        assert!(verdict.final_f <= eps / 4.0);
        assert_eq!(verdict.exit_code(), 0);
    }

    #[test]
    fn zero_iteration_cap_is_undecided() {
        let inst = generate_disjoint(2, 2, 3, &GenConfig::default()).unwrap();
        let config = SolverConfig {
            max_iters: 0,
            ..Default::default()
        };
        let verdict = decide_feasibility(&inst, 1e-3, &config).unwrap();
        assert_eq!(verdict.status, FeasibilityStatus::Undecided);
        assert_eq!(verdict.exit_code(), 2);
    }

    #[test]
    fn generated_instances_match_ground_truth() {
        let config = SolverConfig {
            max_iters: 2000,
            gap_tol: 1e-9,
            ..Default::default()
        };
        for seed in [1u64, 2, 3] {
            let disjoint = generate_disjoint(2, 3, seed, &GenConfig::default()).unwrap();
            let v = decide_feasibility(&disjoint, 1e-3, &config).unwrap();
            assert!(
                matches!(v.status, FeasibilityStatus::Infeasible { .. }),
                "seed {seed}: disjoint instance not flagged infeasible"
            );

            let inter = make_intersecting(&disjoint, seed ^ 0xabcd).unwrap();
            let v = decide_feasibility(&inter, 1e-3, &config).unwrap();
            assert!(
                matches!(v.status, FeasibilityStatus::ApproxFeasible { .. }),
                "seed {seed}: intersecting instance not flagged feasible"
            );
        }
    }

    #[test]
    fn verdict_serializes_with_status_tag() {
        let verdict =
            decide_feasibility(&singleton_instance(), 1e-3, &SolverConfig::default()).unwrap();
        let json = serde_json::to_string(&verdict).unwrap();
        assert!(json.contains("\"status\":\"Infeasible\""));
        assert!(json.contains("lower_bound"));
    }
}
