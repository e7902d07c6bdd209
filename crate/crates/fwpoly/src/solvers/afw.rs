//! Away-step Frank-Wolfe over a product polytope.
//!
//! Each iteration computes the FW vertex by a product LMO and the away
//! vertex by an argmax over the active set, picks the direction with the
//! better gradient alignment, steps with the configured rule capped at
//! `Lambda_t` (1 for FW steps, `gamma_a / (1 - gamma_a)` for away steps),
//! and refines the active-set weights. An away step whose length hits the
//! cap is a drop step and removes the away vertex. When the active set is a
//! singleton the away direction is degenerate (`a_t = x_t`), so a FW step is
//! forced.

use std::time::Instant;

use crate::objective::SmoothObjective;
use crate::polytope::ProductPolytope;
use crate::vecops::{axpy, dot, norm_sq, sub};

use super::{
    fw_direction, step_length, ActiveIterate, SolveOutput, SolverConfig, SolverError, StepRecord,
    StepType, VertexKey,
};

struct PendingEval {
    f: f64,
    gap: f64,
    g: Vec<f64>,
    w_key: VertexKey,
    w_coords: Vec<f64>,
}

/// Resumable AFW state machine; [`run_afw`] drives it to a stopping rule,
/// and the feasibility driver steps it manually to interleave its own
/// checks.
pub struct AfwState<'a, O: SmoothObjective> {
    obj: &'a O,
    pp: &'a ProductPolytope,
    config: SolverConfig,
    iterate: ActiveIterate,
    t: usize,
    started: Instant,
    pending: Option<PendingEval>,
}

impl<'a, O: SmoothObjective> AfwState<'a, O> {
    /// Start at a product vertex with active set `{x0}` and weight 1.
    pub fn new(
        obj: &'a O,
        pp: &'a ProductPolytope,
        x0: &[u32],
        config: SolverConfig,
    ) -> Result<Self, SolverError> {
        let iterate = ActiveIterate::from_vertex(pp, x0)?;
        Self::from_iterate(obj, pp, iterate, config)
    }

    /// Resume from an existing feasible iterate with its active set.
    pub fn from_iterate(
        obj: &'a O,
        pp: &'a ProductPolytope,
        iterate: ActiveIterate,
        config: SolverConfig,
    ) -> Result<Self, SolverError> {
        iterate.check_invariants(pp)?;
        Ok(Self {
            obj,
            pp,
            config,
            iterate,
            t: 0,
            started: Instant::now(),
            pending: None,
        })
    }

    pub fn iterate(&self) -> &ActiveIterate {
        &self.iterate
    }

    pub fn into_iterate(self) -> ActiveIterate {
        self.iterate
    }

    pub fn iterations(&self) -> usize {
        self.t
    }

    pub fn elapsed_s(&self) -> f64 {
        self.started.elapsed().as_secs_f64()
    }

    /// Objective value and FW gap at the current iterate. Cached until the
    /// next [`advance`](Self::advance).
    pub fn evaluate(&mut self) -> Result<(f64, f64), SolverError> {
        if let Some(p) = &self.pending {
            return Ok((p.f, p.gap));
        }
        let x = &self.iterate.x;
        let f = self.obj.value(x);
        let g = self.obj.gradient(x);
        let lmo = self.pp.product_lmo(&g)?;
        let w_key: VertexKey = lmo.iter().map(|(i, _)| *i as u32).collect();
        let mut w_coords = vec![0.0; x.len()];
        for (i, (_, v)) in lmo.iter().enumerate() {
            let n = self.pp.block_dim();
            w_coords[i * n..(i + 1) * n].copy_from_slice(v);
        }
        let gap = dot(&g, x) - dot(&g, &w_coords);
        self.pending = Some(PendingEval {
            f,
            gap,
            g,
            w_key,
            w_coords,
        });
        Ok((f, gap))
    }

    /// Perform one AFW iteration. Callers should [`evaluate`](Self::evaluate)
    /// first and only advance while they want to keep going.
    pub fn advance(&mut self) -> Result<StepRecord, SolverError> {
        if self.pending.is_none() {
            self.evaluate()?;
        }
        let PendingEval {
            f,
            gap,
            g,
            w_key,
            w_coords,
        } = self.pending.take().expect("pending eval present");

        // Away vertex: active-set argmax of <g, v>, ties to the
        // lexicographically smallest index tuple (BTreeMap order).
        let mut away_key: Option<&VertexKey> = None;
        let mut away_dot = f64::NEG_INFINITY;
        for key in self.iterate.active.keys() {
            let dv = self.pp.vertex_dot(key, &g);
            if dv > away_dot {
                away_dot = dv;
                away_key = Some(key);
            }
        }
        let away_key = away_key
            .ok_or_else(|| SolverError::WeightBookkeeping("active set is empty".into()))?
            .clone();
        let away_gap = away_dot - dot(&g, &self.iterate.x);

        // Direction choice; a singleton active set forces the FW step since
        // its away direction is zero and its cap is undefined.
        let singleton = self.iterate.active.len() == 1;
        let take_fw = singleton || gap >= away_gap;

        let (d, cap, gd) = if take_fw {
            (fw_direction(&self.iterate.x, &w_coords), 1.0, gap)
        } else {
            let gamma_a = *self.iterate.active.get(&away_key).expect("away key active");
            let cap = gamma_a / (1.0 - gamma_a);
            let a_coords = self.pp.vertex_coords(&away_key);
            (sub(&a_coords, &self.iterate.x), cap, away_gap)
        };

        let d_norm_sq = norm_sq(&d);
        let lambda = if d_norm_sq == 0.0 {
            // Only reachable at exact stationarity; record a no-move step.
            0.0
        } else {
            step_length(self.obj, &self.config, gd, &d, d_norm_sq, cap)
        };

        // x_{t+1} = x_t - lambda d_t.
        axpy(-lambda, &d, &mut self.iterate.x);

        let step_type = if take_fw {
            for (key, w) in self.iterate.active.iter_mut() {
                if *key != w_key {
                    *w *= 1.0 - lambda;
                }
            }
            let entry = self.iterate.active.entry(w_key.clone()).or_insert(0.0);
            *entry = (1.0 - lambda) * *entry + lambda;
            StepType::Fw
        } else {
            let is_drop = lambda >= cap;
            for (key, w) in self.iterate.active.iter_mut() {
                if *key != away_key {
                    *w *= 1.0 + lambda;
                }
            }
            if is_drop {
                self.iterate.active.remove(&away_key);
            } else if let Some(w) = self.iterate.active.get_mut(&away_key) {
                *w = (1.0 + lambda) * *w - lambda;
            }
            if is_drop {
                StepType::Drop
            } else {
                StepType::Away
            }
        };
        self.iterate.sweep_floor();
        self.iterate.check_invariants(self.pp)?;

        self.t += 1;
        Ok(StepRecord {
            iter: self.t - 1,
            step_type,
            lambda,
            big_lambda: cap,
            fw_vertex: w_key,
            away_vertex: Some(away_key),
            direction_alignment: gd,
            away_gap,
            f,
            fw_gap: gap,
            time_s: self.elapsed_s(),
            active_set_size: self.iterate.active.len(),
        })
    }
}

/// Run AFW from a product vertex until the FW gap drops to `gap_tol` or the
/// iteration cap is reached. Non-convergence is reported in the output, not
/// as an error.
pub fn run_afw<O: SmoothObjective>(
    obj: &O,
    pp: &ProductPolytope,
    x0: &[u32],
    config: &SolverConfig,
) -> Result<SolveOutput, SolverError> {
    let mut st = AfwState::new(obj, pp, x0, *config)?;
    let mut trace = Vec::new();
    let (final_f, final_gap, converged) = loop {
        let (f, gap) = st.evaluate()?;
        if gap <= config.gap_tol {
            break (f, gap, true);
        }
        if st.iterations() >= config.max_iters {
            break (f, gap, false);
        }
        let rec = st.advance()?;
        if config.record_trace {
            trace.push(rec);
        }
    };
    let iterations = st.iterations();
    Ok(SolveOutput {
        iterate: st.into_iterate(),
        trace,
        iterations,
        final_f,
        final_gap,
        converged,
    })
}
