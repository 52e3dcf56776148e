//! POVMs and their post-processing calculus.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{
    self, eigh, frobenius_distance, identity, is_finite, is_hermitian, numerical_rank, ComplexMatrix, Tolerance,
};
use crate::lp;
use crate::validation::ValidationReport;

/// Stochasticity tolerance for rows of a [`StochasticMatrix`] and weights of a
/// [`Grouping`].
pub const STOCHASTIC_EPS: f64 = 1e-12;

/// A finite-outcome POVM: labeled effects on a `dim`-dimensional space.
///
/// Construction only checks shapes; use [`Povm::validate`] for positivity,
/// completeness and label uniqueness.
#[derive(Debug, Clone)]
pub struct Povm {
    dim: usize,
    outcomes: Vec<(String, ComplexMatrix)>,
}

impl Povm {
    pub fn new(dim: usize, outcomes: Vec<(String, ComplexMatrix)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("POVM dimension must be positive".into()));
        }
        if outcomes.is_empty() {
            return Err(Error::InvalidInput("POVM needs at least one outcome".into()));
        }
        for (label, e) in &outcomes {
            if e.nrows() != dim || e.ncols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "effect `{label}` is {}x{}, expected {dim}x{dim}",
                    e.nrows(),
                    e.ncols()
                )));
            }
            if !is_finite(e) {
                return Err(Error::InvalidInput(format!("effect `{label}` has non-finite entries")));
            }
        }
        Ok(Self { dim, outcomes })
    }

    /// Effects labeled `"0"`, `"1"`, ... in order.
    pub fn from_effects(effects: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = effects.first().map(|e| e.nrows()).unwrap_or(0);
        Self::new(
            dim,
            effects
                .into_iter()
                .enumerate()
                .map(|(i, e)| (i.to_string(), e))
                .collect(),
        )
    }

    /// Projective measurement in the computational basis.
    pub fn computational_basis(dim: usize) -> Self {
        Self::from_effects((0..dim).map(|i| linalg::projector(&linalg::ket(dim, i))).collect()).expect("dim > 0")
    }

    /// Trivial POVM `T^p(x) = p_x I`.
    pub fn trivial(dim: usize, p: &[f64]) -> Result<Self> {
        Self::from_effects(p.iter().map(|&px| identity(dim).scale(px)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.outcomes.iter().map(|(l, _)| l.clone()).collect()
    }

    pub fn outcomes(&self) -> &[(String, ComplexMatrix)] {
        &self.outcomes
    }

    pub fn effect(&self, label: &str) -> Option<&ComplexMatrix> {
        self.outcomes.iter().find(|(l, _)| l == label).map(|(_, e)| e)
    }

    fn index_of(&self, label: &str) -> Option<usize> {
        self.outcomes.iter().position(|(l, _)| l == label)
    }

    /// Checks Hermiticity, `0 ≤ A(x) ≤ I`, `Σ A(x) = I` and distinct labels.
    pub fn validate(&self, tol: Tolerance) -> ValidationReport {
        let mut report = ValidationReport::default();
        let mut seen = HashMap::new();
        for (label, _) in &self.outcomes {
            if seen.insert(label.as_str(), ()).is_some() {
                report.push("labels", Some(label), "duplicate outcome label".into());
            }
        }
        let mut total = ComplexMatrix::zeros(self.dim, self.dim);
        for (label, e) in &self.outcomes {
            total += e;
            if !is_hermitian(e, tol) {
                report.push("hermiticity", Some(label), "effect is not Hermitian".into());
                continue;
            }
            let values = eigh(e).values;
            let (max, min) = (values[0], values[values.len() - 1]);
            if min < -tol.eq_abs {
                report.push("positivity", Some(label), format!("eigenvalue {min:.3e} is negative"));
            }
            if max > 1.0 + tol.eq_abs {
                report.push("boundedness", Some(label), format!("eigenvalue {max:.6} exceeds 1"));
            }
        }
        let gap = frobenius_distance(&total, &identity(self.dim));
        if gap > tol.eq_abs {
            report.push("completeness", None, format!("‖Σ A(x) − I‖ = {gap:.3e}"));
        }
        report
    }
}

/// Row-stochastic matrix `ν_xy` from source outcomes to target outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    entries: DMatrix<f64>,
}

impl StochasticMatrix {
    pub fn new(row_labels: Vec<String>, col_labels: Vec<String>, entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != row_labels.len() || entries.ncols() != col_labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} entries for {} rows and {} columns",
                entries.nrows(),
                entries.ncols(),
                row_labels.len(),
                col_labels.len()
            )));
        }
        for (i, row) in entries.row_iter().enumerate() {
            if row.iter().any(|&v| !v.is_finite() || v < 0.0) {
                return Err(Error::InvalidInput(format!(
                    "row `{}` has a negative or non-finite entry",
                    row_labels[i]
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_EPS {
                return Err(Error::InvalidInput(format!("row `{}` sums to {sum}", row_labels[i])));
            }
        }
        Ok(Self {
            row_labels,
            col_labels,
            entries,
        })
    }

    /// 0/1 matrix of the label map `f`.
    pub fn relabeling(row_labels: Vec<String>, col_labels: Vec<String>, f: impl Fn(&str) -> String) -> Result<Self> {
        let mut entries = DMatrix::zeros(row_labels.len(), col_labels.len());
        for (i, x) in row_labels.iter().enumerate() {
            let y = f(x);
            let j = col_labels
                .iter()
                .position(|c| *c == y)
                .ok_or_else(|| Error::UnknownLabel(y.clone()))?;
            entries[(i, j)] = 1.0;
        }
        Self::new(row_labels, col_labels, entries)
    }

    pub fn identity(labels: Vec<String>) -> Self {
        let n = labels.len();
        Self::new(labels.clone(), labels, DMatrix::identity(n, n)).expect("identity is stochastic")
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, row: &str, col: &str) -> Option<f64> {
        let i = self.row_labels.iter().position(|l| l == row)?;
        let j = self.col_labels.iter().position(|l| l == col)?;
        Some(self.entries[(i, j)])
    }

    /// Row of the source label as `(target label, weight)` pairs.
    pub fn row(&self, row: &str) -> Option<Vec<(String, f64)>> {
        let i = self.row_labels.iter().position(|l| l == row)?;
        Some(
            self.col_labels
                .iter()
                .cloned()
                .zip(self.entries.row(i).iter().copied())
                .collect(),
        )
    }
}

/// `B(y) = Σ_x ν_xy A(x)`.
pub fn apply_post_processing(a: &Povm, nu: &StochasticMatrix) -> Result<Povm> {
    if nu.row_labels.len() != a.len() {
        return Err(Error::LabelMismatch(format!(
            "{} rows for a POVM with {} outcomes",
            nu.row_labels.len(),
            a.len()
        )));
    }
    let mut rows = Vec::with_capacity(a.len());
    for label in &nu.row_labels {
        rows.push(
            a.index_of(label)
                .ok_or_else(|| Error::LabelMismatch(format!("no outcome `{label}`")))?,
        );
    }
    let outcomes = nu
        .col_labels
        .iter()
        .enumerate()
        .map(|(j, y)| {
            let mut e = ComplexMatrix::zeros(a.dim, a.dim);
            for (i, &x) in rows.iter().enumerate() {
                let w = nu.entries[(i, j)];
                if w != 0.0 {
                    e += a.outcomes[x].1.scale(w);
                }
            }
            (y.clone(), e)
        })
        .collect();
    Povm::new(a.dim, outcomes)
}

/// `B(y) = Σ_{x ∈ f⁻¹(y)} A(x)`; output labels in order of first appearance.
pub fn relabel(a: &Povm, f: impl Fn(&str) -> String) -> Povm {
    let mut outcomes: Vec<(String, ComplexMatrix)> = Vec::new();
    for (x, e) in &a.outcomes {
        let y = f(x);
        match outcomes.iter_mut().find(|(l, _)| *l == y) {
            Some((_, acc)) => *acc += e,
            None => outcomes.push((y, e.clone())),
        }
    }
    Povm::new(a.dim, outcomes).expect("shapes preserved")
}

/// Real coordinates of a Hermitian matrix in an orthonormal basis of the
/// Hermitian matrices (Frobenius norm preserved).
fn hermitian_coordinates(m: &ComplexMatrix) -> Vec<f64> {
    let d = m.nrows();
    let mut v = Vec::with_capacity(d * d);
    for i in 0..d {
        v.push(m[(i, i)].re);
    }
    let r2 = std::f64::consts::SQRT_2;
    for i in 0..d {
        for j in i + 1..d {
            let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            v.push(r2 * z.re);
            v.push(r2 * z.im);
        }
    }
    v
}

/// Searches for a stochastic `ν` with `B = ν(A)` by phase-1 simplex, with
/// nonnegative least squares as a fallback when the simplex stalls.
///
/// Returns `None` when the residual infeasibility exceeds
/// `|Ω_B| × eq_abs` or the rounded solution misses some `B(y)` by more than
/// `eq_abs`.
pub fn find_post_processing(a: &Povm, b: &Povm, tol: Tolerance) -> Result<Option<StochasticMatrix>> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch(format!(
            "POVM dimensions {} and {}",
            a.dim, b.dim
        )));
    }
    let (na, nb) = (a.len(), b.len());
    let n_vars = na * nb;
    let var = |x: usize, y: usize| x * nb + y;
    let a_vecs: Vec<Vec<f64>> = a.outcomes.iter().map(|(_, e)| hermitian_coordinates(e)).collect();

    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for x in 0..na {
        let mut row = vec![0.0; n_vars];
        for y in 0..nb {
            row[var(x, y)] = 1.0;
        }
        rows.push(row);
        rhs.push(1.0);
    }
    for (y, (_, by)) in b.outcomes.iter().enumerate() {
        let target = hermitian_coordinates(by);
        for (k, &t) in target.iter().enumerate() {
            let mut row = vec![0.0; n_vars];
            for x in 0..na {
                row[var(x, y)] = a_vecs[x][k];
            }
            rows.push(row);
            rhs.push(t);
        }
    }

    let threshold = nb as f64 * tol.eq_abs;
    let mut sol = lp::phase_one(&rows, &rhs, n_vars);
    if sol.infeasibility > threshold {
        // the simplex can stall on degenerate instances; NNLS decides those
        let fallback = lp::nnls(&rows, &rhs, n_vars);
        if fallback.infeasibility < sol.infeasibility {
            sol = fallback;
        }
    }
    if sol.infeasibility > threshold {
        return Ok(None);
    }
    let mut entries = DMatrix::zeros(na, nb);
    for x in 0..na {
        let mut sum = 0.0;
        for y in 0..nb {
            let v = sol.x[var(x, y)].max(0.0);
            entries[(x, y)] = v;
            sum += v;
        }
        if sum <= 0.0 {
            return Ok(None);
        }
        for y in 0..nb {
            entries[(x, y)] /= sum;
        }
    }
    let nu = StochasticMatrix::new(a.labels(), b.labels(), entries)?;
    let image = apply_post_processing(a, &nu)?;
    let fits = image
        .outcomes
        .iter()
        .zip(&b.outcomes)
        .all(|((_, got), (_, want))| frobenius_distance(got, want) <= tol.eq_abs);
    Ok(fits.then_some(nu))
}

/// Returns `p` when every effect is `p_x I` within `eq_abs`.
pub fn is_trivial(a: &Povm, tol: Tolerance) -> Option<Vec<f64>> {
    let id = identity(a.dim);
    a.outcomes
        .iter()
        .map(|(_, e)| {
            let p = e.trace().re / a.dim as f64;
            (frobenius_distance(e, &id.scale(p)) <= tol.eq_abs).then_some(p)
        })
        .collect()
}

/// True iff every nonzero effect has rank one (the rank-1 POVMs).
pub fn is_indecomposable_povm(a: &Povm, tol: Tolerance) -> bool {
    a.outcomes
        .iter()
        .filter(|(_, e)| e.norm() > tol.eq_abs)
        .all(|(_, e)| numerical_rank(e, tol) == 1)
}

/// One source outcome's place in the minimal sufficient POVM.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupEntry {
    pub source: String,
    pub class: String,
    /// `c_x` with `A(x) = c_x Ã([x])`.
    pub weight: f64,
}

/// Map from source outcomes to proportionality classes, plus the outcomes
/// dropped because their effect vanishes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Grouping {
    pub entries: Vec<GroupEntry>,
    pub dropped: Vec<String>,
}

impl Grouping {
    pub fn class_of(&self, source: &str) -> Option<&GroupEntry> {
        self.entries.iter().find(|e| e.source == source)
    }

    /// True when every class has exactly one member and nothing was dropped.
    pub fn is_identity(&self) -> bool {
        self.dropped.is_empty() && self.entries.iter().all(|e| e.source == e.class)
    }
}

fn union_find_root(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    let mut j = i;
    while parent[j] != r {
        let next = parent[j];
        parent[j] = r;
        j = next;
    }
    r
}

/// Merges proportional effects: `Ã([y]) = Σ_{x∈[y]} A(x)`.
///
/// Effects with trace `≤ eq_abs` are dropped first. `x ∼ y` iff the
/// trace-normalized effects agree within `eq_abs`; classes are the connected
/// components of that relation and take the label of their first member.
pub fn minimal_sufficient(a: &Povm, tol: Tolerance) -> (Povm, Grouping) {
    let mut kept = Vec::new();
    let mut grouping = Grouping::default();
    for (label, e) in &a.outcomes {
        let tr = e.trace().re;
        if tr <= tol.eq_abs {
            grouping.dropped.push(label.clone());
        } else {
            kept.push((label, e, tr, e.unscale(tr)));
        }
    }

    let n = kept.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if frobenius_distance(&kept[i].3, &kept[j].3) <= tol.eq_abs {
                let (ri, rj) = (union_find_root(&mut parent, i), union_find_root(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }

    // classes ordered by first member; the root is always the smallest index
    let mut classes: Vec<(usize, ComplexMatrix, f64)> = Vec::new();
    let mut class_index = vec![0; n];
    for i in 0..n {
        let root = union_find_root(&mut parent, i);
        let pos = match classes.iter().position(|(r, _, _)| *r == root) {
            Some(p) => p,
            None => {
                classes.push((root, ComplexMatrix::zeros(a.dim, a.dim), 0.0));
                classes.len() - 1
            }
        };
        classes[pos].1 += kept[i].1;
        classes[pos].2 += kept[i].2;
        class_index[i] = pos;
    }
    for i in 0..n {
        let (root, _, total) = &classes[class_index[i]];
        grouping.entries.push(GroupEntry {
            source: kept[i].0.clone(),
            class: kept[*root].0.clone(),
            weight: kept[i].2 / total,
        });
    }
    let outcomes = classes
        .into_iter()
        .map(|(root, e, _)| (kept[root].0.clone(), e))
        .collect();
    (Povm::new(a.dim, outcomes).expect("nonzero classes exist"), grouping)
}

/// Pair of post-processings witnessing `A ↔ B`.
#[derive(Debug, Clone)]
pub struct PovmEquivalence {
    /// Realizes `B → A` (rows are B's labels).
    pub nu: StochasticMatrix,
    /// Realizes `A → B` (rows are A's labels).
    pub mu: StochasticMatrix,
}

/// Decides `A ↔ B` by matching minimal sufficient representatives, and
/// builds both post-processings with `ν_yx = c_x δ_{f([x]),[y]}`.
///
/// Rows of vanishing effects put all weight on the first kept outcome of the
/// other POVM.
pub fn povm_equivalent(a: &Povm, b: &Povm, tol: Tolerance) -> Result<Option<PovmEquivalence>> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch(format!(
            "POVM dimensions {} and {}",
            a.dim, b.dim
        )));
    }
    let (a_min, a_group) = minimal_sufficient(a, tol);
    let (b_min, b_group) = minimal_sufficient(b, tol);
    if a_min.len() != b_min.len() {
        return Ok(None);
    }
    // bijection between classes
    let mut a_to_b: HashMap<String, String> = HashMap::new();
    let mut used = vec![false; b_min.len()];
    for (la, ea) in &a_min.outcomes {
        let hit = b_min
            .outcomes
            .iter()
            .enumerate()
            .find(|(j, (_, eb))| !used[*j] && frobenius_distance(ea, eb) <= tol.eq_abs);
        match hit {
            Some((j, (lb, _))) => {
                used[j] = true;
                a_to_b.insert(la.clone(), lb.clone());
            }
            None => return Ok(None),
        }
    }

    let nu = proportional_processing(b, &b_group, a, &a_group, |class_b| {
        a_to_b
            .iter()
            .find(|(_, v)| v.as_str() == class_b)
            .map(|(k, _)| k.clone())
    })?;
    let mu = proportional_processing(a, &a_group, b, &b_group, |class_a| a_to_b.get(class_a).cloned())?;

    let back = apply_post_processing(b, &nu)?;
    let fwd = apply_post_processing(a, &mu)?;
    let close = |p: &Povm, q: &Povm| {
        p.outcomes
            .iter()
            .zip(&q.outcomes)
            .all(|((_, x), (_, y))| frobenius_distance(x, y) <= tol.eq_abs)
    };
    if !close(&back, a) || !close(&fwd, b) {
        return Ok(None);
    }
    Ok(Some(PovmEquivalence { nu, mu }))
}

/// Post-processing `src → dst` that sends each kept source outcome to the
/// members of the matched destination class, weighted by the members' `c`.
fn proportional_processing(
    src: &Povm,
    src_group: &Grouping,
    dst: &Povm,
    dst_group: &Grouping,
    matched_class: impl Fn(&str) -> Option<String>,
) -> Result<StochasticMatrix> {
    let dst_labels = dst.labels();
    let fallback = dst_group
        .entries
        .first()
        .map(|e| e.source.clone())
        .expect("kept outcome exists");
    let mut entries = DMatrix::zeros(src.len(), dst.len());
    for (i, (label, _)) in src.outcomes.iter().enumerate() {
        match src_group.class_of(label) {
            Some(entry) => {
                let target =
                    matched_class(&entry.class).ok_or_else(|| Error::InvalidInput("unmatched class".into()))?;
                for d in dst_group.entries.iter().filter(|d| d.class == target) {
                    let j = dst_labels.iter().position(|l| *l == d.source).expect("known label");
                    entries[(i, j)] = d.weight;
                }
            }
            None => {
                let j = dst_labels.iter().position(|l| *l == fallback).expect("known label");
                entries[(i, j)] = 1.0;
            }
        }
    }
    // weights within a class sum to one up to round-off
    for mut row in entries.row_iter_mut() {
        let s: f64 = row.iter().sum();
        row /= s;
    }
    StochasticMatrix::new(src.labels(), dst_labels, entries)
}
