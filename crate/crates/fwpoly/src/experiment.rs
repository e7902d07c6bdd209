//! Experiment orchestration: race the solver variants on one instance and
//! collect per-algorithm traces plus a summary row each.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::feasibility::FeasibilityError;
use crate::instance::Instance;
use crate::objective::IntersectionObjective;
use crate::solvers::{
    run_afw, run_alm, run_cbc_fw, run_fw, ActiveIterate, SolverConfig, SolverError, StepRecord,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Fw,
    Afw,
    Cbcfw,
    Alm,
}

impl Algo {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algo::Fw => "fw",
            Algo::Afw => "afw",
            Algo::Cbcfw => "cbcfw",
            Algo::Alm => "alm",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fw" => Some(Algo::Fw),
            "afw" => Some(Algo::Afw),
            "cbcfw" => Some(Algo::Cbcfw),
            "alm" => Some(Algo::Alm),
            _ => None,
        }
    }
}

/// Per-algorithm summary row. Block-coordinate iterations count single block
/// updates, so iteration counts are comparable across algorithms only with
/// that in mind.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgoSummary {
    pub algo: Algo,
    pub iterations: usize,
    /// Iterations needed to reach the gap tolerance; `None` when the run hit
    /// its cap first.
    pub iterations_to_gap_tol: Option<usize>,
    pub final_f: f64,
    pub final_gap: f64,
    pub wall_time_s: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct AlgoRun {
    pub summary: AlgoSummary,
    pub trace: Vec<StepRecord>,
}

/// Run the requested algorithms on one instance, all from the same start
/// (the tuple of first block vertices). ALM is valid only for k = 2.
pub fn run_experiment(
    inst: &Instance,
    algos: &[Algo],
    config: &SolverConfig,
) -> Result<Vec<AlgoRun>, FeasibilityError> {
    inst.validate()?;
    let pp = inst.product()?;
    let obj = IntersectionObjective::new(inst.k, inst.n);
    let x0_key = vec![0u32; inst.k];

    let mut out = Vec::with_capacity(algos.len());
    for &algo in algos {
        let started = Instant::now();
        let (iterations, final_f, final_gap, converged, trace) = match algo {
            Algo::Afw => {
                let r = run_afw(&obj, &pp, &x0_key, config)?;
                (r.iterations, r.final_f, r.final_gap, r.converged, r.trace)
            }
            Algo::Fw => {
                let start = ActiveIterate::from_vertex(&pp, &x0_key)?;
                let r = run_fw(&obj, &pp, start, config)?;
                (r.iterations, r.final_f, r.final_gap, r.converged, r.trace)
            }
            Algo::Cbcfw => {
                let x0 = pp.vertex_coords(&x0_key);
                let r = run_cbc_fw(&obj, &pp, &x0, config)?;
                (r.iterations, r.final_f, r.final_gap, r.converged, r.trace)
            }
            Algo::Alm => {
                if inst.k != 2 {
                    return Err(FeasibilityError::Solver(SolverError::NotTwoBlocks(inst.k)));
                }
                let x0 = pp.block(0).vertex(0).to_vec();
                let y0 = pp.block(1).vertex(0).to_vec();
                let r = run_alm(&obj, &pp, &x0, &y0, config)?;
                (r.iterations, r.final_f, r.final_gap, r.converged, r.trace)
            }
        };
        out.push(AlgoRun {
            summary: AlgoSummary {
                algo,
                iterations,
                iterations_to_gap_tol: converged.then_some(iterations),
                final_f,
                final_gap,
                wall_time_s: started.elapsed().as_secs_f64(),
                converged,
            },
            trace,
        });
    }
    Ok(out)
}

/// Write one trace CSV per algorithm (`<prefix>_<algo>.csv`) plus a summary
/// JSON (`<prefix>_summary.json`) holding the per-algorithm rows. Returns
/// the paths written.
pub fn write_experiment_files(
    prefix: &std::path::Path,
    runs: &[AlgoRun],
) -> std::io::Result<Vec<std::path::PathBuf>> {
    use std::io::Write;
    let mut written = Vec::new();
    let stem = prefix.to_string_lossy();
    for run in runs {
        let path = std::path::PathBuf::from(format!("{stem}_{}.csv", run.summary.algo.as_str()));
        let mut w = std::io::BufWriter::new(std::fs::File::create(&path)?);
        crate::solvers::write_trace_csv(&mut w, &run.trace)?;
        w.flush()?;
        written.push(path);
    }
    let summaries: Vec<&AlgoSummary> = runs.iter().map(|r| &r.summary).collect();
    let path = std::path::PathBuf::from(format!("{stem}_summary.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&summaries)?)?;
    written.push(path);
    Ok(written)
}

/// Reference optimal value for an instance, used for primal-gap reporting:
/// 0 when a common point is recorded, otherwise an AFW solve to gap 1e-12.
pub fn reference_optimum(inst: &Instance) -> Result<f64, FeasibilityError> {
    if inst.meta.common_point.is_some() {
        return Ok(0.0);
    }
    let pp = inst.product()?;
    let obj = IntersectionObjective::new(inst.k, inst.n);
    let config = SolverConfig {
        max_iters: 200_000,
        gap_tol: 1e-12,
        record_trace: false,
        ..Default::default()
    };
    let r = run_afw(&obj, &pp, &vec![0u32; inst.k], &config)?;
    Ok(r.final_f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_disjoint, make_intersecting, GenConfig};
    use crate::objective::SmoothObjective;

    #[test]
    fn one_iteration_cap_gives_one_row_traces() {
        let inst = generate_disjoint(2, 3, 9, &GenConfig::default()).unwrap();
        let config = SolverConfig {
            max_iters: 1,
            gap_tol: 1e-30,
            ..Default::default()
        };
        let runs = run_experiment(
            &inst,
            &[Algo::Fw, Algo::Afw, Algo::Cbcfw, Algo::Alm],
            &config,
        )
        .unwrap();
        for run in &runs {
            assert_eq!(run.trace.len(), 1, "{:?}", run.summary.algo);
            assert_eq!(run.summary.iterations, 1);
        }
    }

    #[test]
    fn afw_beats_fw_on_a_disjoint_instance() {
        let inst = generate_disjoint(2, 10, 1234, &GenConfig::default()).unwrap();
        let config = SolverConfig {
            max_iters: 3000,
            gap_tol: 1e-7,
            ..Default::default()
        };
        let runs = run_experiment(&inst, &[Algo::Afw, Algo::Fw], &config).unwrap();
        let afw = &runs[0].summary;
        let fw = &runs[1].summary;
        assert!(afw.converged);
        let fw_iters = fw.iterations_to_gap_tol.unwrap_or(usize::MAX);
        assert!(
            afw.iterations_to_gap_tol.unwrap() <= fw_iters,
            "afw {} vs fw {:?}",
            afw.iterations,
            fw.iterations_to_gap_tol
        );
    }

    #[test]
    fn all_algorithms_converge_on_an_intersecting_instance() {
        let base = generate_disjoint(2, 6, 4242, &GenConfig::default()).unwrap();
        let inst = make_intersecting(&base, 4243).unwrap();
        let config = SolverConfig {
            max_iters: 20_000,
            gap_tol: 1e-7,
            record_trace: false,
            ..Default::default()
        };
        let runs = run_experiment(
            &inst,
            &[Algo::Fw, Algo::Afw, Algo::Cbcfw, Algo::Alm],
            &config,
        )
        .unwrap();
        for run in &runs {
            assert!(
                run.summary.converged,
                "{} stuck at gap {}",
                run.summary.algo.as_str(),
                run.summary.final_gap
            );
        }
    }

    #[test]
    fn alm_rejected_for_three_blocks() {
        let inst = generate_disjoint(3, 2, 5, &GenConfig::default()).unwrap();
        let res = run_experiment(&inst, &[Algo::Alm], &SolverConfig::default());
        assert!(res.is_err());
    }

    #[test]
    fn experiment_files_land_on_disk() {
        let inst = generate_disjoint(2, 2, 8, &GenConfig::default()).unwrap();
        let config = SolverConfig {
            max_iters: 50,
            ..Default::default()
        };
        let runs = run_experiment(&inst, &[Algo::Afw, Algo::Fw], &config).unwrap();
        let dir = std::env::temp_dir().join(format!("fwpoly-exp-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let paths = write_experiment_files(&dir.join("race"), &runs).unwrap();
        assert_eq!(paths.len(), 3);
        assert!(paths[0].to_string_lossy().ends_with("race_afw.csv"));
        assert!(paths[1].to_string_lossy().ends_with("race_fw.csv"));
        let summary = std::fs::read_to_string(&paths[2]).unwrap();
        let rows: Vec<serde_json::Value> = serde_json::from_str(&summary).unwrap();
        assert_eq!(rows.len(), 2);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn reference_optimum_matches_ground_truth() {
        let disjoint = generate_disjoint(2, 2, 77, &GenConfig::default()).unwrap();
        let fstar = reference_optimum(&disjoint).unwrap();
        // Blocks are separated by at least 1 in each coordinate, so
        // f* = dist^2 / 4 >= 1/2 for n = 2.
        assert!(fstar > 0.25);

        let inter = make_intersecting(&disjoint, 3).unwrap();
        assert_eq!(reference_optimum(&inter).unwrap(), 0.0);

        // Sanity: f* is attained by a feasible product point.
        let pp = disjoint.product().unwrap();
        let obj = IntersectionObjective::new(2, 2);
        let x0 = pp.vertex_coords(&[0, 0]);
        assert!(obj.value(&x0) >= fstar);
    }
}
