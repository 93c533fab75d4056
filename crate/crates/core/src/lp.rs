//! Dense two-phase simplex for the small feasibility and max-margin problems
//! that back the geometric certificates (supporting functionals, half-space
//! searches, cone membership). Bland's rule, deterministic pivoting.

use nalgebra::{DMatrix, DVector};

const PIVOT_TOL: f64 = 1e-10;
const MAX_ITERS: usize = 20_000;

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal { x: DVector<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

/// Minimize `c . x` subject to `A x = b`, `x >= 0`. Rows with negative `b`
/// are sign-flipped internally.
pub fn solve_standard(c: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> LpOutcome {
    let m = a.nrows();
    let n = a.ncols();
    assert_eq!(b.len(), m);
    assert_eq!(c.len(), n);

    // Tableau with artificial variables appended: columns 0..n original,
    // n..n+m artificial, last column the rhs.
    let mut t = DMatrix::zeros(m, n + m + 1);
    for i in 0..m {
        let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[(i, j)] = flip * a[(i, j)];
        }
        t[(i, n + i)] = 1.0;
        t[(i, n + m)] = flip * b[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Phase 1: minimize the sum of artificials.
    let mut cost1 = DVector::zeros(n + m);
    for j in n..n + m {
        cost1[j] = 1.0;
    }
    if !simplex_iterate(&mut t, &mut basis, &cost1, n + m) {
        return LpOutcome::Unbounded; // cannot happen for phase 1, defensive
    }
    let phase1 = objective(&t, &basis, &cost1);
    if phase1 > 1e-7 {
        return LpOutcome::Infeasible;
    }
    // Pivot remaining artificials out of the basis where possible.
    for i in 0..m {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| t[(i, j)].abs() > PIVOT_TOL) {
                pivot(&mut t, &mut basis, i, j);
            }
        }
    }

    // Phase 2 on the original costs; artificial columns are frozen out.
    let mut cost2 = DVector::zeros(n + m);
    for j in 0..n {
        cost2[j] = c[j];
    }
    if !simplex_iterate(&mut t, &mut basis, &cost2, n) {
        return LpOutcome::Unbounded;
    }

    let mut x = DVector::zeros(n);
    for (i, &bi) in basis.iter().enumerate() {
        if bi < n {
            x[bi] = t[(i, n + m)];
        }
    }
    let value = c.dot(&x);
    LpOutcome::Optimal { x, value }
}

fn objective(t: &DMatrix<f64>, basis: &[usize], cost: &DVector<f64>) -> f64 {
    let rhs = t.ncols() - 1;
    basis
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[j] * t[(i, rhs)])
        .sum()
}

/// Run simplex pivots until optimal (true) or unbounded (false). Only columns
/// `< col_limit` may enter the basis.
fn simplex_iterate(
    t: &mut DMatrix<f64>,
    basis: &mut [usize],
    cost: &DVector<f64>,
    col_limit: usize,
) -> bool {
    let m = t.nrows();
    let rhs = t.ncols() - 1;
    for _ in 0..MAX_ITERS {
        // Reduced costs: c_j - c_B . B^{-1} A_j (tableau is already reduced).
        let mut entering = None;
        for j in 0..col_limit {
            if basis.contains(&j) {
                continue;
            }
            let mut red = cost[j];
            for i in 0..m {
                red -= cost[basis[i]] * t[(i, j)];
            }
            if red < -PIVOT_TOL {
                entering = Some(j); // Bland: first improving index
                break;
            }
        }
        let Some(j) = entering else {
            return true;
        };
        // Ratio test, ties broken by smallest basis index (Bland).
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if t[(i, j)] > PIVOT_TOL {
                let ratio = t[(i, rhs)] / t[(i, j)];
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - PIVOT_TOL
                            || (ratio < lr + PIVOT_TOL && basis[i] < basis[li])
                        {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((i, _)) = leave else {
            return false;
        };
        pivot(t, basis, i, j);
    }
    true // iteration cap: treat as converged; callers verify certificates
}

fn pivot(t: &mut DMatrix<f64>, basis: &mut [usize], row: usize, col: usize) {
    let rhs = t.ncols();
    let p = t[(row, col)];
    for j in 0..rhs {
        t[(row, j)] /= p;
    }
    for i in 0..t.nrows() {
        if i != row {
            let f = t[(i, col)];
            if f != 0.0 {
                for j in 0..rhs {
                    t[(i, j)] -= f * t[(row, j)];
                }
            }
        }
    }
    basis[row] = col;
}

/// Maximize `c . x` subject to `a_ub x <= b_ub` with `x` free.
/// Internally splits `x = u - w` and adds slacks.
pub fn maximize_free(c: &DVector<f64>, a_ub: &DMatrix<f64>, b_ub: &DVector<f64>) -> LpOutcome {
    let m = a_ub.nrows();
    let n = a_ub.ncols();
    let mut a = DMatrix::zeros(m, 2 * n + m);
    for i in 0..m {
        for j in 0..n {
            a[(i, j)] = a_ub[(i, j)];
            a[(i, n + j)] = -a_ub[(i, j)];
        }
        a[(i, 2 * n + i)] = 1.0;
    }
    let mut cost = DVector::zeros(2 * n + m);
    for j in 0..n {
        cost[j] = -c[j];
        cost[n + j] = c[j];
    }
    match solve_standard(&cost, &a, b_ub) {
        LpOutcome::Optimal { x, value } => {
            let mut out = DVector::zeros(n);
            for j in 0..n {
                out[j] = x[j] - x[n + j];
            }
            LpOutcome::Optimal {
                x: out,
                value: -value,
            }
        }
        other => other,
    }
}

/// Is there `lambda >= 0` with `E lambda = f`? Returns the witness if so.
pub fn nonneg_solution(e: &DMatrix<f64>, f: &DVector<f64>) -> Option<DVector<f64>> {
    let n = e.ncols();
    let c = DVector::zeros(n);
    match solve_standard(&c, e, f) {
        LpOutcome::Optimal { x, .. } => {
            let residual = (e * &x - f).norm();
            if residual <= 1e-7 * (1.0 + f.norm()) {
                Some(x)
            } else {
                None
            }
        }
        _ => None,
    }
}

/// Lawson-Hanson nonnegative least squares: minimize `|G c - v|` over
/// `c >= 0`. Returns the residual norm and the coefficients.
pub fn nnls(g: &DMatrix<f64>, v: &DVector<f64>) -> (f64, DVector<f64>) {
    let n = g.ncols();
    let mut passive: Vec<bool> = vec![false; n];
    let mut c = DVector::zeros(n);
    let tol = 1e-12 * (1.0 + v.norm());
    for _outer in 0..(3 * n + 10) {
        let residual = v - g * &c;
        let grad = g.transpose() * &residual;
        // Most-improving inactive coordinate.
        let mut best = None;
        for j in 0..n {
            if !passive[j] && grad[j] > tol
                && best.is_none_or(|(_, gb)| grad[j] > gb) {
                    best = Some((j, grad[j]));
                }
        }
        let Some((j, _)) = best else {
            break;
        };
        passive[j] = true;
        // Inner loop: solve the passive least squares, clip negatives.
        for _inner in 0..(3 * n + 10) {
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let mut gp = DMatrix::zeros(g.nrows(), idx.len());
            for (col, &k) in idx.iter().enumerate() {
                gp.column_mut(col).copy_from(&g.column(k));
            }
            let gtg = gp.transpose() * &gp;
            let gtv = gp.transpose() * v;
            let sol = match gtg.clone().lu().solve(&gtv) {
                Some(s) => s,
                None => {
                    // Rank deficiency: ridge fallback.
                    let ridge = gtg + DMatrix::identity(idx.len(), idx.len()) * 1e-12;
                    match ridge.lu().solve(&gtv) {
                        Some(s) => s,
                        None => break,
                    }
                }
            };
            if sol.iter().all(|&s| s > -1e-14) {
                c.fill(0.0);
                for (col, &k) in idx.iter().enumerate() {
                    c[k] = sol[col].max(0.0);
                }
                break;
            }
            // Move toward sol until the first coefficient hits zero.
            let mut alpha = f64::INFINITY;
            for (col, &k) in idx.iter().enumerate() {
                if sol[col] <= 0.0 {
                    let a = c[k] / (c[k] - sol[col]);
                    alpha = alpha.min(a);
                }
            }
            let alpha = alpha.clamp(0.0, 1.0);
            for (col, &k) in idx.iter().enumerate() {
                c[k] += alpha * (sol[col] - c[k]);
                if c[k] <= 1e-14 {
                    c[k] = 0.0;
                    passive[k] = false;
                }
            }
        }
    }
    let residual = (v - g * &c).norm();
    (residual, c)
}
