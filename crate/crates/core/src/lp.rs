//! Dense phase-1 simplex for linear feasibility problems `A x = b, x ≥ 0`.
//!
//! Problems here are small (a few hundred variables at most), so a dense
//! tableau rebuilt by LU from the current basis at every step is affordable
//! and keeps round-off from accumulating. Bland's rule keeps the pivot
//! sequence deterministic.

const PIVOT_EPS: f64 = 1e-9;
const RATIO_SLACK: f64 = 1e-12;
const MAX_ITER_FACTOR: usize = 10;
const COST_EPS: f64 = 1e-11;
const RANK_REL: f64 = 1e-13;

/// Result of phase 1: a point `x ≥ 0` and the remaining infeasibility
/// `Σ |b − A x|` (the optimal sum of artificial variables).
#[derive(Debug, Clone)]
pub struct PhaseOne {
    pub x: Vec<f64>,
    pub infeasibility: f64,
}

/// Minimizes the sum of artificial slacks for `A x = b`, `x ≥ 0`.
///
/// `a` is row-major with `b.len()` rows of length `n_vars`. Redundant rows
/// are removed first: the simplex runs on `U_r^T A x = U_r^T b` for the
/// leading left singular vectors of `A`, and the reported infeasibility is
/// measured against the original system.
pub fn phase_one(a: &[Vec<f64>], b: &[f64], n_vars: usize) -> PhaseOne {
    assert_eq!(a.len(), b.len(), "row count");
    for row in a {
        assert_eq!(row.len(), n_vars, "row length");
    }
    let (ra, rb) = independent_rows(a, b, n_vars);
    let x = simplex(&ra, &rb, n_vars);
    let infeasibility = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let ax: f64 = row.iter().zip(&x).map(|(p, q)| p * q).sum();
            (bi - ax).abs()
        })
        .sum();
    PhaseOne { x, infeasibility }
}

fn independent_rows(a: &[Vec<f64>], b: &[f64], n_vars: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    if a.is_empty() || n_vars == 0 {
        return (Vec::new(), Vec::new());
    }
    let mat = faer::Mat::from_fn(a.len(), n_vars, |i, j| a[i][j]);
    let svd = mat.thin_svd().expect("SVD converges");
    let (u, s) = (svd.U(), svd.S().column_vector());
    let k = a.len().min(n_vars);
    let smax = s[0];
    let cut = RANK_REL * smax * (a.len().max(n_vars) as f64);
    let keep: Vec<usize> = (0..k).filter(|&i| s[i] > cut).collect();
    let rows = keep
        .iter()
        .map(|&i| {
            (0..n_vars)
                .map(|j| (0..a.len()).map(|r| u[(r, i)] * a[r][j]).sum())
                .collect()
        })
        .collect();
    let rhs = keep
        .iter()
        .map(|&i| (0..a.len()).map(|r| u[(r, i)] * b[r]).sum())
        .collect();
    (rows, rhs)
}

fn simplex(a: &[Vec<f64>], b: &[f64], n_vars: usize) -> Vec<f64> {
    let m = b.len();
    let width = n_vars + m + 1;
    let rhs = width - 1;

    // rows with nonnegative right-hand sides; artificials form the first basis
    let mut orig = vec![vec![0.0; width]; m];
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n_vars {
            orig[i][j] = sign * a[i][j];
        }
        orig[i][n_vars + i] = 1.0;
        orig[i][rhs] = sign * b[i];
    }
    let mut basis: Vec<usize> = (n_vars..n_vars + m).collect();

    // The tableau is rebuilt from the basis before every pivot, so round-off
    // never accumulates across pivots. Bland's rule on both sides; ratios
    // within RATIO_SLACK of the minimum count as ties and pivots below
    // PIVOT_EPS are never taken. The iteration cap is a backstop.
    let (mut t, _) = refactor(&orig, &basis, n_vars).expect("identity basis");
    let mut last_good = basis.clone();
    for _ in 0..MAX_ITER_FACTOR * (n_vars + m) {
        let Some((fresh, cost)) = refactor(&orig, &basis, n_vars) else {
            basis = last_good;
            break;
        };
        t = fresh;
        last_good.clone_from(&basis);
        let Some(enter) = (0..n_vars + m).find(|&j| cost[j] < -COST_EPS) else {
            break;
        };
        let candidates: Vec<(usize, f64)> = (0..m)
            .filter(|&i| t[i][enter] > PIVOT_EPS)
            .map(|i| (i, t[i][rhs] / t[i][enter]))
            .collect();
        // phase 1 is bounded below by zero, so an entering column always has a pivot
        let Some(min_ratio) = candidates.iter().map(|&(_, r)| r).reduce(f64::min) else {
            break;
        };
        let bound = min_ratio + RATIO_SLACK * (1.0 + min_ratio);
        let row = candidates
            .iter()
            .filter(|&&(_, r)| r <= bound)
            .map(|&(i, _)| i)
            .min_by_key(|&i| basis[i])
            .expect("minimum is a candidate");
        basis[row] = enter;
    }

    let mut x = vec![0.0; n_vars];
    for (i, &var) in basis.iter().enumerate() {
        if var < n_vars {
            x[var] = t[i][rhs];
        }
    }
    x
}

/// Tableau `B⁻¹ [A | I | b]` and phase-1 reduced costs for `basis`, or
/// `None` when the basis matrix is numerically singular.
fn refactor(orig: &[Vec<f64>], basis: &[usize], n_vars: usize) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
    use faer::linalg::solvers::Solve;
    let m = orig.len();
    let width = n_vars + m + 1;
    let rhs = width - 1;
    if m == 0 {
        return Some((Vec::new(), vec![0.0; width]));
    }
    let bmat = faer::Mat::from_fn(m, m, |i, k| orig[i][basis[k]]);
    let full = faer::Mat::from_fn(m, width, |i, j| orig[i][j]);
    let sol = bmat.partial_piv_lu().solve(&full);
    let mut t = vec![vec![0.0; width]; m];
    for (i, row) in t.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = sol[(i, j)];
        }
    }
    if t.iter().flatten().any(|v| !v.is_finite()) {
        return None;
    }
    // basic columns are exact unit vectors; negative basics are round-off
    for (i, &bv) in basis.iter().enumerate() {
        for (k, row) in t.iter_mut().enumerate() {
            row[bv] = if k == i { 1.0 } else { 0.0 };
        }
        if t[i][rhs] < 0.0 {
            t[i][rhs] = 0.0;
        }
    }
    let is_artificial = |j: usize| j >= n_vars && j < n_vars + m;
    let mut cost = vec![0.0; width];
    for (j, c) in cost.iter_mut().enumerate() {
        let own = if is_artificial(j) { 1.0 } else { 0.0 };
        let basic: f64 = basis
            .iter()
            .zip(&t)
            .filter(|(&bv, _)| is_artificial(bv))
            .map(|(_, row)| row[j])
            .sum();
        *c = if j == rhs { -basic } else { own - basic };
    }
    Some((t, cost))
}

/// Nonnegative least squares `min ‖A x − b‖₂, x ≥ 0` by the Lawson–Hanson
/// active-set method. The returned infeasibility is `Σ |b − A x|`, as for
/// [`phase_one`].
pub fn nnls(a: &[Vec<f64>], b: &[f64], n_vars: usize) -> PhaseOne {
    use faer::linalg::solvers::SolveLstsq;
    let m = b.len();
    assert_eq!(a.len(), m, "row count");
    let residual = |x: &[f64]| -> Vec<f64> {
        a.iter()
            .zip(b)
            .map(|(row, bi)| bi - row.iter().zip(x).map(|(p, q)| p * q).sum::<f64>())
            .collect()
    };
    let gradient = |r: &[f64]| -> Vec<f64> { (0..n_vars).map(|j| (0..m).map(|i| a[i][j] * r[i]).sum()).collect() };
    let norm1 = (0..n_vars)
        .map(|j| a.iter().map(|row| row[j].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let w_tol = 10.0 * f64::EPSILON * norm1 * (m.max(n_vars) as f64);

    let mut x = vec![0.0; n_vars];
    let mut passive = vec![false; n_vars];
    // solves the unconstrained problem on the passive set
    let restricted = |passive: &[bool]| -> Option<Vec<f64>> {
        let cols: Vec<usize> = (0..n_vars).filter(|&j| passive[j]).collect();
        if cols.len() > m {
            return None;
        }
        let ap = faer::Mat::from_fn(m, cols.len(), |i, k| a[i][cols[k]]);
        let rhs = faer::Mat::from_fn(m, 1, |i, _| b[i]);
        let sol = ap.qr().solve_lstsq(&rhs);
        let mut z = vec![0.0; n_vars];
        for (k, &j) in cols.iter().enumerate() {
            z[j] = sol[(k, 0)];
        }
        z.iter().all(|v| v.is_finite()).then_some(z)
    };

    'outer: for _ in 0..3 * n_vars.max(1) {
        let w = gradient(&residual(&x));
        let Some(t) = (0..n_vars)
            .filter(|&j| !passive[j] && w[j] > w_tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]))
        else {
            break;
        };
        passive[t] = true;
        loop {
            let Some(z) = restricted(&passive) else {
                passive[t] = false;
                break 'outer;
            };
            if (0..n_vars).filter(|&j| passive[j]).all(|j| z[j] > 0.0) {
                x = z;
                break;
            }
            let alpha = (0..n_vars)
                .filter(|&j| passive[j] && z[j] <= 0.0)
                .map(|j| x[j] / (x[j] - z[j]))
                .fold(f64::INFINITY, f64::min);
            for j in 0..n_vars {
                x[j] += alpha * (z[j] - x[j]);
                if passive[j] && x[j] <= f64::EPSILON {
                    passive[j] = false;
                    x[j] = 0.0;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    let infeasibility = residual(&x).iter().map(|r| r.abs()).sum();
    PhaseOne { x, infeasibility }
}
