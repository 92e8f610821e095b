//! Dense two-phase simplex with Bland's pivoting rule.
//!
//! Maximizes `c . x` over `x >= 0` subject to a mix of `<=` and `==`
//! constraints with nonnegative right-hand sides. Bland's rule (always the
//! lowest eligible index, both entering and leaving) makes every solve
//! deterministic and cycle-free; the basic optimal solution it lands on is
//! what callers rely on for sparsity guarantees (a basic solution has at most
//! one nonzero per row).
//!
//! The scale of this crate's programs is a handful of rows (budgets plus
//! convexity constraints) against up to tens of thousands of columns, so a
//! dense tableau is the right tool: each pivot touches `rows x columns`
//! doubles, and rows is tiny.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ConstraintKind {
    /// `coeffs . x <= rhs`
    Le,
    /// `coeffs . x == rhs`
    Eq,
}

#[derive(Debug, Clone)]
pub(crate) struct Constraint {
    pub coeffs: Vec<f64>,
    pub kind: ConstraintKind,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub(crate) enum SimplexError {
    #[error("constraint system is infeasible (phase-1 residual {residual})")]
    Infeasible { residual: f64 },
    #[error("objective is unbounded along column {column}")]
    Unbounded { column: usize },
    #[error("bad input: {0}")]
    BadInput(&'static str),
    #[error("pivot limit exceeded after {0} iterations")]
    IterationLimit(usize),
}

#[derive(Debug, Clone)]
pub(crate) struct SimplexSolution {
    pub objective: f64,
    /// Structural variable values, length = objective length.
    pub x: Vec<f64>,
    /// One dual multiplier per constraint row (`>= 0` for binding `<=` rows).
    pub duals: Vec<f64>,
    pub iterations: usize,
    /// True when some nonbasic column has a zero reduced cost at optimum:
    /// other optimal vertices exist and the reported one is Bland's pick.
    pub alternate_optima: bool,
}

/// Entries this small (after row/objective equilibration) are treated as
/// exact zeros when testing pivots and reduced costs.
const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-9;

pub(crate) fn maximize(
    objective: &[f64],
    constraints: &[Constraint],
) -> Result<SimplexSolution, SimplexError> {
    let n = objective.len();
    let m = constraints.len();
    if m == 0 {
        return Err(SimplexError::BadInput("no constraints"));
    }
    for c in constraints {
        if c.coeffs.len() != n {
            return Err(SimplexError::BadInput("constraint width mismatch"));
        }
        if !(c.rhs >= 0.0) || !c.rhs.is_finite() {
            return Err(SimplexError::BadInput("rhs must be nonnegative and finite"));
        }
        if c.coeffs.iter().any(|v| !v.is_finite()) {
            return Err(SimplexError::BadInput("non-finite constraint coefficient"));
        }
    }
    if objective.iter().any(|v| !v.is_finite()) {
        return Err(SimplexError::BadInput("non-finite objective coefficient"));
    }

    // Column layout: structural | one slack per Le row | one artificial per
    // Eq row. Row equilibration keeps tableau entries O(1) so the fixed
    // epsilons are meaningful; duals are unscaled on the way out.
    let slacks: Vec<usize> = constraints
        .iter()
        .enumerate()
        .filter(|(_, c)| c.kind == ConstraintKind::Le)
        .map(|(i, _)| i)
        .collect();
    let artificials: Vec<usize> = constraints
        .iter()
        .enumerate()
        .filter(|(_, c)| c.kind == ConstraintKind::Eq)
        .map(|(i, _)| i)
        .collect();
    let total = n + slacks.len() + artificials.len();

    let obj_scale = objective
        .iter()
        .fold(0.0f64, |a, &v| a.max(v.abs()))
        .max(1.0);

    let mut tableau = vec![vec![0.0f64; total + 1]; m];
    let mut row_scale = vec![1.0f64; m];
    for (i, c) in constraints.iter().enumerate() {
        let mag = c
            .coeffs
            .iter()
            .fold(c.rhs.abs(), |a, &v| a.max(v.abs()))
            .max(1e-300);
        row_scale[i] = 1.0 / mag;
        for j in 0..n {
            tableau[i][j] = c.coeffs[j] * row_scale[i];
        }
        tableau[i][total] = c.rhs * row_scale[i];
    }
    for (k, &i) in slacks.iter().enumerate() {
        tableau[i][n + k] = 1.0;
    }
    for (k, &i) in artificials.iter().enumerate() {
        tableau[i][n + slacks.len() + k] = 1.0;
    }

    // Starting basis: slack on Le rows, artificial on Eq rows.
    let mut basis = vec![usize::MAX; m];
    for (k, &i) in slacks.iter().enumerate() {
        basis[i] = n + k;
    }
    for (k, &i) in artificials.iter().enumerate() {
        basis[i] = n + slacks.len() + k;
    }

    let art_start = n + slacks.len();
    let mut iterations = 0usize;
    let limit = 50 * (m + total) + 1000;

    // Phase 1: maximize -(sum of artificials); feasible iff optimum is 0.
    if !artificials.is_empty() {
        let mut cost = vec![0.0f64; total + 1];
        for j in art_start..total {
            cost[j] = -1.0;
        }
        run_simplex(
            &mut tableau,
            &mut basis,
            &cost,
            total,
            Some(art_start),
            &mut iterations,
            limit,
        )?;
        let residual: f64 = basis
            .iter()
            .zip(tableau.iter())
            .filter(|(b, _)| **b >= art_start)
            .map(|(_, row)| row[total])
            .sum();
        if residual > 1e-7 {
            return Err(SimplexError::Infeasible { residual });
        }
        // Drive lingering zero-level artificials out of the basis so they
        // cannot creep back up during phase-2 pivots. The pivot row's RHS is
        // zero, so pivoting on any nonzero entry (either sign) preserves
        // feasibility. A row with no eligible column is redundant: it stays
        // parked and never changes again, because every later entering
        // column has a zero entry in it.
        for i in 0..m {
            if basis[i] < art_start {
                continue;
            }
            let e =
                (0..art_start).find(|&j| tableau[i][j].abs() > PIVOT_EPS && !basis.contains(&j));
            if let Some(e) = e {
                pivot(&mut tableau, i, e);
                basis[i] = e;
            }
        }
    }

    // Phase 2: the real objective (scaled); artificials may linger in the
    // basis at level zero but are barred from entering.
    let mut cost = vec![0.0f64; total + 1];
    for j in 0..n {
        cost[j] = objective[j] / obj_scale;
    }
    run_simplex(
        &mut tableau,
        &mut basis,
        &cost,
        total,
        Some(art_start),
        &mut iterations,
        limit,
    )?;

    // Read out the solution.
    let mut x = vec![0.0f64; n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            x[b] = tableau[i][total];
        }
    }
    let objective_value: f64 = x.iter().zip(objective).map(|(xi, ci)| xi * ci).sum();

    // Reduced costs at optimum: z_j = c_B B^-1 A_j - c_j. The dual for row i
    // is the reduced cost of its identity column (slack or artificial),
    // rescaled back to the original row/objective units.
    let reduced = |tableau: &Vec<Vec<f64>>, basis: &Vec<usize>, j: usize| -> f64 {
        let mut z = 0.0;
        for i in 0..m {
            let b = basis[i];
            if b < n {
                z += cost[b] * tableau[i][j];
            }
        }
        z - cost[j]
    };
    let mut duals = vec![0.0f64; m];
    for (k, &i) in slacks.iter().enumerate() {
        duals[i] = reduced(&tableau, &basis, n + k) * obj_scale * row_scale[i];
    }
    for (k, &i) in artificials.iter().enumerate() {
        duals[i] = reduced(&tableau, &basis, art_start + k) * obj_scale * row_scale[i];
    }

    let basic = |j: usize| basis.contains(&j);
    let mut alternate = false;
    for j in 0..n {
        if !basic(j) && reduced(&tableau, &basis, j).abs() <= COST_EPS {
            alternate = true;
            break;
        }
    }

    Ok(SimplexSolution {
        objective: objective_value,
        x,
        duals,
        iterations,
        alternate_optima: alternate,
    })
}

/// Pivots until no reduced cost is negative. `banned_from` bars a suffix of
/// columns (the artificials, which start basic and may leave but must never
/// re-enter) from entering.
fn run_simplex(
    tableau: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &[f64],
    total: usize,
    banned_from: Option<usize>,
    iterations: &mut usize,
    limit: usize,
) -> Result<(), SimplexError> {
    let m = tableau.len();
    let banned = banned_from.unwrap_or(total);

    loop {
        // Reduced costs against the current basis.
        let mut z = vec![0.0f64; total];
        for i in 0..m {
            let cb = cost[basis[i]];
            if cb != 0.0 {
                for (zj, tij) in z.iter_mut().zip(&tableau[i]) {
                    *zj += cb * tij;
                }
            }
        }
        // Bland: lowest-index column with a violating reduced cost.
        let mut entering = None;
        for (j, zj) in z.iter().enumerate() {
            if j >= banned {
                break;
            }
            if basis.contains(&j) {
                continue;
            }
            if zj - cost[j] < -COST_EPS {
                entering = Some(j);
                break;
            }
        }
        let Some(e) = entering else {
            return Ok(());
        };

        // Ratio test; ties go to the row with the lowest basic index.
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let a = tableau[i][e];
            if a > PIVOT_EPS {
                let ratio = tableau[i][total] / a;
                let better = match leave {
                    None => true,
                    Some((li, lr)) => {
                        ratio < lr - 1e-12 || (ratio <= lr + 1e-12 && basis[i] < basis[li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((l, _)) = leave else {
            return Err(SimplexError::Unbounded { column: e });
        };

        pivot(tableau, l, e);
        basis[l] = e;
        *iterations += 1;
        if *iterations > limit {
            return Err(SimplexError::IterationLimit(*iterations));
        }
    }
}

fn pivot(tableau: &mut [Vec<f64>], l: usize, e: usize) {
    let p = tableau[l][e];
    for v in tableau[l].iter_mut() {
        *v /= p;
    }
    tableau[l][e] = 1.0;
    let pivot_row = tableau[l].clone();
    for (i, row) in tableau.iter_mut().enumerate() {
        if i == l {
            continue;
        }
        let factor = row[e];
        if factor != 0.0 {
            for (v, pr) in row.iter_mut().zip(&pivot_row) {
                *v -= factor * pr;
            }
            row[e] = 0.0;
        }
    }
}
