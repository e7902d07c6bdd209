//! Frank-Wolfe family solvers over product polytopes: vanilla FW, away-step
//! FW with active-set bookkeeping and drop steps, cyclic block-coordinate
//! FW, and alternating linear minimization, plus step-size rules, gap
//! computation, and iteration tracing.

mod afw;
mod alm;
mod cbc;
mod fw;

pub use afw::{run_afw, AfwState};
pub use alm::{run_alm, AlmOutput};
pub use cbc::{run_cbc_fw, CbcOutput};
pub use fw::run_fw;

use std::collections::BTreeMap;
use std::io::{self, Write};

use thiserror::Error;

use crate::objective::SmoothObjective;
use crate::polytope::{PolytopeError, ProductPolytope};
use crate::vecops::{dot, norm, norm_sq, sub};

/// Product vertices are identified by their per-block vertex-index tuples,
/// never by coordinates, so weight bookkeeping uses exact identity.
pub type VertexKey = Vec<u32>;

/// Active-set weights below this floor are removed and the remainder
/// renormalized; numerically dead vertices would otherwise pollute the away
/// step.
pub const WEIGHT_FLOOR: f64 = 1e-14;

/// Tolerance on the active-set weight sum.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Tolerance on `|sum_v gamma_v v - x|`.
pub const RECONSTRUCTION_TOL: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error("start vertex tuple {0:?} is invalid for this product")]
    BadStartVertex(Vec<u32>),
    #[error("active-set bookkeeping violated: {0}")]
    WeightBookkeeping(String),
    #[error("alternating linear minimization requires exactly 2 blocks, got {0}")]
    NotTwoBlocks(usize),
    #[error("step direction has zero norm")]
    ZeroDirection,
}

/// Step-size rule selection. The short step needs a smoothness constant; the
/// line search solves the 1-d problem in closed form for quadratics and
/// falls back to the short step when no Hessian-vector product is available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepRule {
    ShortStep,
    #[default]
    LineSearch,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub gap_tol: f64,
    pub step_rule: StepRule,
    /// Smoothness constant used by the short step; `None` takes the
    /// objective's own constant.
    pub smoothness_l: Option<f64>,
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            gap_tol: 1e-7,
            step_rule: StepRule::default(),
            smoothness_l: None,
            record_trace: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepType {
    Fw,
    Away,
    Drop,
}

impl StepType {
    pub fn as_str(&self) -> &'static str {
        match self {
            StepType::Fw => "fw",
            StepType::Away => "away",
            StepType::Drop => "drop",
        }
    }
}

/// One iteration of a solver run. `f` and `fw_gap` are evaluated at the
/// iterate the step departs from.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub iter: usize,
    pub step_type: StepType,
    pub lambda: f64,
    pub big_lambda: f64,
    pub fw_vertex: VertexKey,
    pub away_vertex: Option<VertexKey>,
    /// `<grad f(x_t), d_t>` for the direction actually taken.
    pub direction_alignment: f64,
    /// `<grad f(x_t), a_t - x_t>`; zero for solvers without an active set.
    pub away_gap: f64,
    pub f: f64,
    pub fw_gap: f64,
    /// Seconds since the start of the run, taken when the step completes.
    pub time_s: f64,
    pub active_set_size: usize,
}

/// A feasible point together with convex-combination weights over product
/// vertices: `x = sum_v gamma_v v`, `gamma > 0`, `sum gamma = 1`.
#[derive(Debug, Clone)]
pub struct ActiveIterate {
    pub x: Vec<f64>,
    pub active: BTreeMap<VertexKey, f64>,
}

impl ActiveIterate {
    /// The iterate sitting at a single product vertex with weight 1.
    pub fn from_vertex(pp: &ProductPolytope, indices: &[u32]) -> Result<Self, SolverError> {
        if indices.len() != pp.num_blocks()
            || indices
                .iter()
                .zip(pp.blocks())
                .any(|(&i, b)| i as usize >= b.num_vertices())
        {
            return Err(SolverError::BadStartVertex(indices.to_vec()));
        }
        let x = pp.vertex_coords(indices);
        let mut active = BTreeMap::new();
        active.insert(indices.to_vec(), 1.0);
        Ok(Self { x, active })
    }

    pub fn weight_sum(&self) -> f64 {
        self.active.values().sum()
    }

    /// `|sum_v gamma_v v - x|`.
    pub fn reconstruction_error(&self, pp: &ProductPolytope) -> f64 {
        let mut acc = vec![0.0; self.x.len()];
        let mut coords = vec![0.0; self.x.len()];
        for (key, &w) in &self.active {
            pp.vertex_coords_into(key, &mut coords);
            for (a, c) in acc.iter_mut().zip(&coords) {
                *a += w * c;
            }
        }
        for (a, xi) in acc.iter_mut().zip(&self.x) {
            *a -= xi;
        }
        norm(&acc)
    }

    /// Weight positivity, sum-to-1, and reconstruction checks.
    pub fn check_invariants(&self, pp: &ProductPolytope) -> Result<(), SolverError> {
        if self.active.is_empty() {
            return Err(SolverError::WeightBookkeeping("active set is empty".into()));
        }
        if let Some((key, &w)) = self.active.iter().find(|(_, &w)| w <= 0.0) {
            return Err(SolverError::WeightBookkeeping(format!(
                "nonpositive weight {w} on vertex {key:?}"
            )));
        }
        let sum = self.weight_sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(SolverError::WeightBookkeeping(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        let err = self.reconstruction_error(pp);
        if err > RECONSTRUCTION_TOL {
            return Err(SolverError::WeightBookkeeping(format!(
                "reconstruction error {err} exceeds {RECONSTRUCTION_TOL}"
            )));
        }
        Ok(())
    }

    /// Remove weights below [`WEIGHT_FLOOR`] and renormalize the rest.
    pub(crate) fn sweep_floor(&mut self) {
        self.active.retain(|_, w| *w >= WEIGHT_FLOOR);
        let sum = self.weight_sum();
        if sum > 0.0 && sum != 1.0 {
            for w in self.active.values_mut() {
                *w /= sum;
            }
        }
    }
}

/// The Frank-Wolfe gap `<grad f(x), x> - min_v <grad f(x), v>` over the
/// product; nonnegative for feasible x up to roundoff.
pub fn fw_gap<O: SmoothObjective>(
    obj: &O,
    pp: &ProductPolytope,
    x: &[f64],
) -> Result<f64, SolverError> {
    let g = obj.gradient(x);
    gap_from_gradient(pp, &g, x).map_err(SolverError::from)
}

pub(crate) fn gap_from_gradient(
    pp: &ProductPolytope,
    g: &[f64],
    x: &[f64],
) -> Result<f64, PolytopeError> {
    let lmo = pp.product_lmo(g)?;
    let mut gap = dot(g, x);
    for (i, (_, v)) in lmo.iter().enumerate() {
        gap -= dot(pp.block_slice(g, i), v);
    }
    Ok(gap)
}

/// Short step `min(cap, <g, d> / (L |d|^2))`, the minimizer of the
/// smoothness upper bound along `-d`.
pub fn short_step(g: &[f64], d: &[f64], cap: f64, l: f64) -> Result<f64, SolverError> {
    let dd = norm_sq(d);
    if dd <= 0.0 {
        return Err(SolverError::ZeroDirection);
    }
    Ok(short_step_from(dot(g, d), dd, cap, l))
}

#[inline]
pub(crate) fn short_step_from(gd: f64, d_norm_sq: f64, cap: f64, l: f64) -> f64 {
    // With l = 0 the quotient is +inf and the cap binds.
    cap.min(gd / (l * d_norm_sq))
}

/// Exact line search for quadratic objectives:
/// `clip(<grad f(x), d> / <d, H d>, 0, cap)`, with flat curvature
/// (`<d, Hd> <= 1e-15 |d|^2`) taking the full cap.
pub fn exact_line_search_quadratic<O: SmoothObjective>(
    obj: &O,
    x: &[f64],
    d: &[f64],
    cap: f64,
) -> f64 {
    let g = obj.gradient(x);
    let gd = dot(&g, d);
    let hd = obj
        .hessian_vec(d)
        .expect("exact line search requires a quadratic objective");
    line_search_from(gd, dot(d, &hd), norm_sq(d), cap)
}

#[inline]
pub(crate) fn line_search_from(gd: f64, dhd: f64, d_norm_sq: f64, cap: f64) -> f64 {
    if dhd <= 1e-15 * d_norm_sq {
        return cap;
    }
    (gd / dhd).clamp(0.0, cap)
}

/// Step length for the configured rule, given `<g,d>`, `|d|^2` and a closure
/// producing `<d, Hd>` when the objective supports it.
pub(crate) fn step_length<O: SmoothObjective>(
    obj: &O,
    config: &SolverConfig,
    gd: f64,
    d: &[f64],
    d_norm_sq: f64,
    cap: f64,
) -> f64 {
    let l = config.smoothness_l.unwrap_or_else(|| obj.smoothness());
    match config.step_rule {
        StepRule::ShortStep => short_step_from(gd, d_norm_sq, cap, l),
        StepRule::LineSearch => match obj.hessian_vec(d) {
            Some(hd) => line_search_from(gd, dot(d, &hd), d_norm_sq, cap),
            None => short_step_from(gd, d_norm_sq, cap, l),
        },
    }
}

/// Result of a full FW or AFW run.
#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub iterate: ActiveIterate,
    pub trace: Vec<StepRecord>,
    pub iterations: usize,
    pub final_f: f64,
    pub final_gap: f64,
    pub converged: bool,
}

/// Write a trace as CSV with the canonical column set. Floats carry 17
/// significant digits so values round-trip exactly.
pub fn write_trace_csv<W: Write>(w: &mut W, trace: &[StepRecord]) -> io::Result<()> {
    writeln!(
        w,
        "iter,time_s,f,fw_gap,step_type,lambda,big_lambda,active_set_size"
    )?;
    for r in trace {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.iter,
            fmt_f64(r.time_s),
            fmt_f64(r.f),
            fmt_f64(r.fw_gap),
            r.step_type.as_str(),
            fmt_f64(r.lambda),
            fmt_f64(r.big_lambda),
            r.active_set_size
        )?;
    }
    Ok(())
}

/// 17 significant digits, enough to reproduce any f64 bit pattern.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Shared helper: direction `x - w` (FW) in place.
pub(crate) fn fw_direction(x: &[f64], w: &[f64]) -> Vec<f64> {
    sub(x, w)
}
