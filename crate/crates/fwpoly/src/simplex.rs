//! A small dense two-phase simplex solver.
//!
//! Solves `max c.x  s.t.  A_eq x = b_eq, A_ub x <= b_ub, x >= 0` on dense
//! data. Used for the supporting-hyperplane certificate LPs in the face
//! module; problem sizes there are tens of rows and columns, so a plain
//! tableau with Bland's rule is adequate and keeps the crate free of an
//! external LP dependency.

/// Absolute tolerance for pivot eligibility and reduced-cost sign tests.
const EPS: f64 = 1e-9;

/// Safety cap on total pivots; Bland's rule terminates long before this on
/// the problem sizes we solve.
const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, x: Vec<f64> },
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PivotLimitExceeded;

/// Maximize `c.x` subject to `a_eq x = b_eq`, `a_ub x <= b_ub`, `x >= 0`.
pub fn solve_lp(
    c: &[f64],
    a_eq: &[Vec<f64>],
    b_eq: &[f64],
    a_ub: &[Vec<f64>],
    b_ub: &[f64],
) -> Result<LpOutcome, PivotLimitExceeded> {
    let n = c.len();
    let m_eq = a_eq.len();
    let m_ub = a_ub.len();
    let m = m_eq + m_ub;
    debug_assert_eq!(b_eq.len(), m_eq);
    debug_assert_eq!(b_ub.len(), m_ub);

    // Column layout: structural (n) | slack (m_ub) | artificial (m) | rhs.
    let n_slack = m_ub;
    let n_art = m;
    let width = n + n_slack + n_art + 1;
    let rhs_col = width - 1;

    let mut t = vec![vec![0.0f64; width]; m];
    for (r, row) in a_eq.iter().enumerate() {
        debug_assert_eq!(row.len(), n);
        t[r][..n].copy_from_slice(row);
        t[r][rhs_col] = b_eq[r];
    }
    for (j, row) in a_ub.iter().enumerate() {
        debug_assert_eq!(row.len(), n);
        let r = m_eq + j;
        t[r][..n].copy_from_slice(row);
        t[r][n + j] = 1.0;
        t[r][rhs_col] = b_ub[j];
    }
    // Normalize signs so every rhs is nonnegative, then give each row an
    // artificial variable; the artificials form the initial basis.
    for (r, row) in t.iter_mut().enumerate() {
        if row[rhs_col] < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
        row[n + n_slack + r] = 1.0;
    }
    let mut basis: Vec<usize> = (0..m).map(|r| n + n_slack + r).collect();
    let mut pivots_left = MAX_PIVOTS;

    // Phase 1: minimize the sum of artificials, i.e. maximize -sum(art).
    let mut phase1_cost = vec![0.0f64; width - 1];
    for cost in phase1_cost.iter_mut().skip(n + n_slack).take(n_art) {
        *cost = -1.0;
    }
    let mut obj = reduced_cost_row(&t, &basis, &phase1_cost, width);
    run_pivots(&mut t, &mut obj, &mut basis, width, None, &mut pivots_left)?;
    let phase1_value = -obj[rhs_col];
    if phase1_value > 1e-7 {
        return Ok(LpOutcome::Infeasible);
    }

    // Drive any basic artificial (at level zero) out of the basis, or drop
    // its row as redundant.
    let art_start = n + n_slack;
    let mut keep_rows: Vec<bool> = vec![true; m];
    for r in 0..m {
        if basis[r] >= art_start {
            let mut pivoted = false;
            for j in 0..art_start {
                if t[r][j].abs() > EPS {
                    pivot_full(&mut t, &mut obj, &mut basis, r, j, width);
                    pivoted = true;
                    break;
                }
            }
            if !pivoted {
                keep_rows[r] = false;
            }
        }
    }
    let mut new_t = Vec::with_capacity(m);
    let mut new_basis = Vec::with_capacity(m);
    for r in 0..m {
        if keep_rows[r] {
            new_t.push(std::mem::take(&mut t[r]));
            new_basis.push(basis[r]);
        }
    }
    let mut t = new_t;
    let mut basis = new_basis;

    // Phase 2: original objective; artificial columns are barred from
    // entering.
    let mut phase2_cost = vec![0.0f64; width - 1];
    phase2_cost[..n].copy_from_slice(c);
    let mut obj = reduced_cost_row(&t, &basis, &phase2_cost, width);
    let unbounded = run_pivots(
        &mut t,
        &mut obj,
        &mut basis,
        width,
        Some(art_start),
        &mut pivots_left,
    )?;
    if unbounded {
        return Ok(LpOutcome::Unbounded);
    }

    let mut x = vec![0.0f64; n];
    for (r, &b) in basis.iter().enumerate() {
        if b < n {
            x[b] = t[r][rhs_col];
        }
    }
    Ok(LpOutcome::Optimal {
        value: obj[rhs_col],
        x,
    })
}

/// Objective row in canonical form for the given basis: entry `j` holds the
/// reduced cost `c_j - c_B . B^{-1} A_j`, and the rhs cell holds the current
/// objective value.
fn reduced_cost_row(t: &[Vec<f64>], basis: &[usize], cost: &[f64], width: usize) -> Vec<f64> {
    let rhs_col = width - 1;
    let mut obj = vec![0.0f64; width];
    obj[..width - 1].copy_from_slice(cost);
    for (r, &b) in basis.iter().enumerate() {
        let cb = cost[b];
        if cb != 0.0 {
            for j in 0..width {
                obj[j] -= cb * t[r][j];
            }
        }
    }
    // Store the objective value with positive sign in the rhs cell.
    obj[rhs_col] = -obj[rhs_col];
    obj
}

/// Bland's-rule pivoting loop. Returns true if the problem is unbounded in
/// the current phase. `col_limit` bars columns at or beyond the limit (used
/// to exclude artificials in phase 2).
fn run_pivots(
    t: &mut [Vec<f64>],
    obj: &mut [f64],
    basis: &mut [usize],
    width: usize,
    col_limit: Option<usize>,
    pivots_left: &mut usize,
) -> Result<bool, PivotLimitExceeded> {
    let rhs_col = width - 1;
    let n_cols = col_limit.unwrap_or(width - 1);
    loop {
        // Entering column: smallest index with positive reduced cost.
        let Some(col) = obj[..n_cols].iter().position(|&r| r > EPS) else {
            return Ok(false);
        };
        // Leaving row: minimum ratio, ties to the smallest basis index.
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for (r, row) in t.iter().enumerate() {
            if row[col] > EPS {
                let ratio = row[rhs_col] / row[col];
                let better = match leave {
                    None => true,
                    Some(lr) => {
                        ratio < best_ratio - EPS
                            || (ratio < best_ratio + EPS && basis[r] < basis[lr])
                    }
                };
                if better {
                    leave = Some(r);
                    best_ratio = ratio;
                }
            }
        }
        let Some(row) = leave else {
            return Ok(true);
        };
        if *pivots_left == 0 {
            return Err(PivotLimitExceeded);
        }
        *pivots_left -= 1;
        pivot_full(t, obj, basis, row, col, width);
    }
}

fn pivot_full(
    t: &mut [Vec<f64>],
    obj: &mut [f64],
    basis: &mut [usize],
    row: usize,
    col: usize,
    width: usize,
) {
    let piv = t[row][col];
    for v in t[row].iter_mut() {
        *v /= piv;
    }
    let pivot_row = t[row].clone();
    for (r, other) in t.iter_mut().enumerate() {
        if r != row {
            let f = other[col];
            if f != 0.0 {
                for (o, p) in other.iter_mut().zip(&pivot_row) {
                    *o -= f * p;
                }
            }
        }
    }
    let f = obj[col];
    if f != 0.0 {
        // The objective row keeps its value cell with positive sign, so the
        // update subtracts on coefficients and adds on the value.
        for (o, p) in obj[..width - 1].iter_mut().zip(&pivot_row) {
            *o -= f * p;
        }
        obj[width - 1] += f * pivot_row[width - 1];
    }
    basis[row] = col;
}
