//! Quantum operations, instruments and their constructors.
//!
//! Everything is stored in Kraus form. Choi matrices use the convention
//! `Choi(N) = Σ_ij |i⟩⟨j| ⊗ N(|i⟩⟨j|)` with the input factor first, so a
//! single Kraus operator `K` contributes `|K⟩⟩⟨⟨K|` with
//! `|K⟩⟩ = Σ_i |i⟩ ⊗ K|i⟩`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::{
    self, c64, eigh, frobenius_distance, identity, is_finite, is_hermitian, psd_pinv_sqrt, psd_sqrt, zeros,
    ComplexMatrix, Tolerance,
};
use crate::povm::{Povm, STOCHASTIC_EPS};
use crate::validation::ValidationReport;

/// Label of the outcome of a single-outcome instrument (a channel).
pub const CHANNEL_LABEL: &str = "0";

/// Label `(i,x)` used by detailed instruments and tracked mixtures.
pub fn pair_label(i: usize, x: &str) -> String {
    format!("({i},{x})")
}

/// Completely positive trace-nonincreasing map in Kraus form.
#[derive(Debug, Clone)]
pub struct QuantumOperation {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix>,
    choi: OnceLock<ComplexMatrix>,
}

impl QuantumOperation {
    pub fn new(dim_in: usize, dim_out: usize, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        if dim_in == 0 || dim_out == 0 {
            return Err(Error::InvalidInput("operation dimensions must be positive".into()));
        }
        if kraus.is_empty() {
            return Err(Error::InvalidInput(
                "operation needs at least one Kraus operator".into(),
            ));
        }
        for k in &kraus {
            if k.nrows() != dim_out || k.ncols() != dim_in {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator is {}x{}, expected {dim_out}x{dim_in}",
                    k.nrows(),
                    k.ncols()
                )));
            }
            if !is_finite(k) {
                return Err(Error::InvalidInput("Kraus operator has non-finite entries".into()));
            }
        }
        Ok(Self {
            dim_in,
            dim_out,
            kraus,
            choi: OnceLock::new(),
        })
    }

    pub fn zero(dim_in: usize, dim_out: usize) -> Self {
        Self::new(dim_in, dim_out, vec![zeros(dim_out, dim_in)]).expect("valid shape")
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(dim, dim, vec![identity(dim)]).expect("valid shape")
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// `Σ_i K_i ϱ K_i†`.
    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out += k * rho * k.adjoint();
        }
        out
    }

    /// `Σ_i K_i† K_i`, the effect this operation contributes to the induced POVM.
    pub fn effect(&self) -> ComplexMatrix {
        let mut out = zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            out += k.adjoint() * k;
        }
        out
    }

    pub fn choi(&self) -> &ComplexMatrix {
        self.choi.get_or_init(|| {
            let n = self.dim_in * self.dim_out;
            let mut c = zeros(n, n);
            for k in &self.kraus {
                let v = vectorize(k);
                c += &v * v.adjoint();
            }
            c
        })
    }

    pub fn is_zero(&self, tol: Tolerance) -> bool {
        self.choi().norm() <= tol.eq_abs
    }

    /// Operation with every Kraus operator scaled by `√p`.
    pub fn scaled(&self, p: f64) -> Self {
        let s = p.max(0.0).sqrt();
        Self::new(
            self.dim_in,
            self.dim_out,
            self.kraus.iter().map(|k| k.scale(s)).collect(),
        )
        .expect("shapes preserved")
    }

    /// Sequential composition `next ∘ self`.
    pub fn then(&self, next: &QuantumOperation) -> Result<Self> {
        if next.dim_in != self.dim_out {
            return Err(Error::DimensionMismatch(format!(
                "cannot feed dimension {} into dimension {}",
                self.dim_out, next.dim_in
            )));
        }
        let mut kraus = Vec::new();
        for r in &next.kraus {
            for k in &self.kraus {
                let p = r * k;
                if p.iter().any(|z| *z != c64(0.0, 0.0)) {
                    kraus.push(p);
                }
            }
        }
        if kraus.is_empty() {
            return Ok(Self::zero(self.dim_in, next.dim_out));
        }
        Self::new(self.dim_in, next.dim_out, kraus)
    }

    pub fn choi_distance(&self, other: &QuantumOperation) -> f64 {
        if self.dim_in != other.dim_in || self.dim_out != other.dim_out {
            return f64::INFINITY;
        }
        frobenius_distance(self.choi(), other.choi())
    }

    /// Kraus rank, the numerical rank of the Choi matrix.
    pub fn kraus_rank(&self, tol: Tolerance) -> usize {
        if self.is_zero(tol) {
            return 0;
        }
        linalg::count_above_relative(&eigh(self.choi()).values, tol.rank_rel)
    }

    /// Minimal Kraus representation: `kraus_rank` operators reproducing the
    /// same Choi matrix. The zero operation keeps a single zero operator.
    ///
    /// The operators are taken from the Choi spectrum and then rotated by the
    /// eigenbasis of `β_ij = tr(W K_i† K_j)` for a fixed generic positive `W`.
    /// Whenever some minimal decomposition has pairwise orthogonal products
    /// `K_i† K_j = 0`, that rotation finds it, which makes the result
    /// canonical for the orthogonality tests elsewhere in the crate.
    pub fn minimal_kraus(&self, tol: Tolerance) -> Self {
        if self.is_zero(tol) {
            return Self::zero(self.dim_in, self.dim_out);
        }
        let spec = eigh(self.choi());
        let rank = linalg::count_above_relative(&spec.values, tol.rank_rel);
        let raw: Vec<ComplexMatrix> = (0..rank)
            .map(|k| unvectorize(&spec.vector(k), self.dim_in, self.dim_out).scale(spec.values[k].sqrt()))
            .collect();
        let kraus = canonical_rotation(&raw, self.dim_in);
        Self::new(self.dim_in, self.dim_out, kraus).expect("shapes preserved")
    }
}

/// `|K⟩⟩` with entry `i·d_out + a` equal to `K[a, i]`.
fn vectorize(k: &ComplexMatrix) -> ComplexMatrix {
    let (d_out, d_in) = (k.nrows(), k.ncols());
    ComplexMatrix::from_fn(d_in * d_out, 1, |r, _| k[(r % d_out, r / d_out)])
}

fn unvectorize(v: &ComplexMatrix, d_in: usize, d_out: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d_out, d_in, |a, i| v[(i * d_out + a, 0)])
}

/// Fixed Hermitian positive-definite weight with distinct, non-resonant entries.
fn generic_weight(d: usize) -> ComplexMatrix {
    const GOLDEN: f64 = 0.618_033_988_749_894_9;
    let mut w = ComplexMatrix::from_fn(d, d, |a, b| {
        if a == b {
            c64(1.0 + ((a + 1) as f64 * GOLDEN).fract(), 0.0)
        } else {
            let t = 1.3 * a as f64 + 2.1 * b as f64 + 0.37;
            c64(0.05 * t.cos(), 0.05 * t.sin())
        }
    });
    w = linalg::hermitian_part(&w);
    w
}

fn canonical_rotation(kraus: &[ComplexMatrix], d_in: usize) -> Vec<ComplexMatrix> {
    let n = kraus.len();
    if n <= 1 {
        return kraus.to_vec();
    }
    let w = generic_weight(d_in);
    let beta = ComplexMatrix::from_fn(n, n, |i, j| (&w * kraus[i].adjoint() * &kraus[j]).trace());
    let e = eigh(&beta);
    (0..n)
        .map(|k| {
            let mut c = zeros(kraus[0].nrows(), kraus[0].ncols());
            for (i, ki) in kraus.iter().enumerate() {
                c += ki.map(|z| z * e.vectors[(i, k)]);
            }
            c
        })
        .collect()
}

/// Density operator: Hermitian, positive semidefinite, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    matrix: ComplexMatrix,
}

impl State {
    pub fn new(matrix: ComplexMatrix, tol: Tolerance) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 || !is_finite(&matrix) {
            return Err(Error::InvalidInput("state must be a finite square matrix".into()));
        }
        if !is_hermitian(&matrix, tol) {
            return Err(Error::InvalidInput("state is not Hermitian".into()));
        }
        let min = *eigh(&matrix).values.last().expect("nonempty");
        if min < -tol.eq_abs {
            return Err(Error::InvalidInput(format!("state has negative eigenvalue {min:.3e}")));
        }
        let tr = matrix.trace();
        if (tr - c64(1.0, 0.0)).norm() > tol.eq_abs {
            return Err(Error::InvalidInput(format!("state has trace {tr}")));
        }
        Ok(Self { matrix })
    }

    /// `|ψ⟩⟨ψ|` for the normalized column vector `psi`.
    pub fn pure(psi: &ComplexMatrix) -> Self {
        let v = psi.unscale(psi.norm());
        Self {
            matrix: linalg::projector(&v),
        }
    }

    /// State nearest to the Hermitian part of `m`: negative eigenvalues are
    /// clipped and the trace normalized. `None` if nothing positive remains.
    pub fn normalized_from(m: &ComplexMatrix) -> Option<Self> {
        if !m.is_square() || m.nrows() == 0 || !is_finite(m) {
            return None;
        }
        let clipped = linalg::spectral_map(&linalg::hermitian_part(m), |v| v.max(0.0));
        let tr = clipped.trace().re;
        if tr.is_nan() || tr <= 0.0 {
            return None;
        }
        Some(Self {
            matrix: clipped.unscale(tr),
        })
    }

    pub fn basis(d: usize, i: usize) -> Self {
        Self::pure(&linalg::ket(d, i))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            matrix: identity(d).unscale(d as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

/// Outcome-labeled family of operations whose sum is trace preserving.
///
/// Construction checks shapes only; [`Instrument::validate`] checks the rest.
#[derive(Debug, Clone)]
pub struct Instrument {
    dim_in: usize,
    dim_out: usize,
    outcomes: Vec<(String, QuantumOperation)>,
}

/// Processing instruments keyed by the outcome label they are conditioned on.
pub type Processors = BTreeMap<String, Instrument>;

impl Instrument {
    pub fn new(dim_in: usize, dim_out: usize, outcomes: Vec<(String, QuantumOperation)>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidInput("instrument needs at least one outcome".into()));
        }
        for (label, op) in &outcomes {
            if op.dim_in != dim_in || op.dim_out != dim_out {
                return Err(Error::DimensionMismatch(format!(
                    "operation `{label}` maps {} -> {}, expected {dim_in} -> {dim_out}",
                    op.dim_in, op.dim_out
                )));
            }
        }
        Ok(Self {
            dim_in,
            dim_out,
            outcomes,
        })
    }

    pub fn from_kraus(dim_in: usize, dim_out: usize, outcomes: Vec<(String, Vec<ComplexMatrix>)>) -> Result<Self> {
        let ops = outcomes
            .into_iter()
            .map(|(l, k)| Ok((l, QuantumOperation::new(dim_in, dim_out, k)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(dim_in, dim_out, ops)
    }

    /// Single-outcome instrument labeled [`CHANNEL_LABEL`].
    pub fn channel(op: QuantumOperation) -> Self {
        Self {
            dim_in: op.dim_in,
            dim_out: op.dim_out,
            outcomes: vec![(CHANNEL_LABEL.to_string(), op)],
        }
    }

    pub fn identity_channel(dim: usize) -> Self {
        Self::channel(QuantumOperation::identity(dim))
    }

    /// Instrument with `op` at `label` and zero operations at all other `labels`.
    pub fn concentrated(labels: &[String], label: &str, op: QuantumOperation) -> Result<Self> {
        if !labels.iter().any(|l| l == label) {
            return Err(Error::UnknownLabel(label.to_string()));
        }
        let (dim_in, dim_out) = (op.dim_in, op.dim_out);
        let mut op = Some(op);
        let outcomes = labels
            .iter()
            .map(|l| {
                let o = if l == label {
                    op.take().unwrap_or_else(|| QuantumOperation::zero(dim_in, dim_out))
                } else {
                    QuantumOperation::zero(dim_in, dim_out)
                };
                (l.clone(), o)
            })
            .collect();
        Self::new(dim_in, dim_out, outcomes)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
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

    pub fn outcomes(&self) -> &[(String, QuantumOperation)] {
        &self.outcomes
    }

    pub fn operation(&self, label: &str) -> Option<&QuantumOperation> {
        self.outcomes.iter().find(|(l, _)| l == label).map(|(_, op)| op)
    }

    /// Checks distinct labels, trace-nonincreasing operations and
    /// `Σ_x Σ_i K_ix† K_ix = I`.
    pub fn validate(&self, tol: Tolerance) -> ValidationReport {
        let mut report = ValidationReport::default();
        let mut labels: Vec<&str> = Vec::new();
        let mut total = zeros(self.dim_in, self.dim_in);
        for (label, op) in &self.outcomes {
            if labels.contains(&label.as_str()) {
                report.push("labels", Some(label), "duplicate outcome label".into());
            }
            labels.push(label);
            let e = op.effect();
            let max = eigh(&e).values[0];
            if max > 1.0 + tol.eq_abs {
                report.push(
                    "trace_nonincreasing",
                    Some(label),
                    format!("Σ K†K has eigenvalue {max:.6} above 1"),
                );
            }
            total += e;
        }
        let gap = frobenius_distance(&total, &identity(self.dim_in));
        if gap > tol.eq_abs {
            report.push("normalization", None, format!("‖Σ K†K − I‖ = {gap:.3e}"));
        }
        report
    }

    /// Unnormalized conditional output `I_x(ϱ)` and its probability.
    pub fn apply(&self, label: &str, rho: &State) -> Result<(ComplexMatrix, f64)> {
        let op = self
            .operation(label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
        if rho.dim() != self.dim_in {
            return Err(Error::DimensionMismatch(format!(
                "state of dimension {} into instrument with input dimension {}",
                rho.dim(),
                self.dim_in
            )));
        }
        let out = op.apply(rho.matrix());
        let p = out.trace().re;
        Ok((out, p))
    }

    pub fn induced_povm(&self) -> Povm {
        Povm::new(
            self.dim_in,
            self.outcomes
                .iter()
                .map(|(l, op)| (l.clone(), linalg::hermitian_part(&op.effect())))
                .collect(),
        )
        .expect("shapes preserved")
    }

    /// `Σ_x I_x` as a single operation.
    pub fn total_channel(&self) -> QuantumOperation {
        let kraus = self
            .outcomes
            .iter()
            .flat_map(|(_, op)| op.kraus.iter().cloned())
            .collect();
        QuantumOperation::new(self.dim_in, self.dim_out, kraus).expect("shapes preserved")
    }

    /// Largest per-outcome Choi distance to `other`, matching outcomes by
    /// label. Infinite when dimensions or label sets differ.
    pub fn choi_distance(&self, other: &Instrument) -> f64 {
        if self.dim_in != other.dim_in || self.dim_out != other.dim_out || self.len() != other.len() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for (label, op) in &self.outcomes {
            match other.operation(label) {
                Some(o) => worst = worst.max(op.choi_distance(o)),
                None => return f64::INFINITY,
            }
        }
        worst
    }

    /// Same instrument with outcome labels mapped by `f` (must stay injective).
    pub fn relabeled(&self, f: impl Fn(&str) -> String) -> Result<Self> {
        let outcomes: Vec<_> = self.outcomes.iter().map(|(l, op)| (f(l), op.clone())).collect();
        let mut seen: Vec<&String> = Vec::new();
        for (l, _) in &outcomes {
            if seen.contains(&l) {
                return Err(Error::LabelMismatch(format!("relabeling merges outcomes into `{l}`")));
            }
            seen.push(l);
        }
        Self::new(self.dim_in, self.dim_out, outcomes)
    }
}

/// `J_y = Σ_x R^(x)_y ∘ I_x`, with Kraus operators `R^(x)_ky K_ix`.
pub fn compose_post_processing(source: &Instrument, processors: &Processors) -> Result<Instrument> {
    let mut target_labels: Option<Vec<String>> = None;
    let mut dim_out: Option<usize> = None;
    for (x, _) in &source.outcomes {
        let r = processors
            .get(x)
            .ok_or_else(|| Error::LabelMismatch(format!("no processor for outcome `{x}`")))?;
        if r.dim_in != source.dim_out {
            return Err(Error::DimensionMismatch(format!(
                "processor for `{x}` takes dimension {}, source outputs {}",
                r.dim_in, source.dim_out
            )));
        }
        match dim_out {
            None => dim_out = Some(r.dim_out),
            Some(d) if d != r.dim_out => {
                return Err(Error::DimensionMismatch(format!(
                    "processor output dimensions {d} and {} differ",
                    r.dim_out
                )))
            }
            _ => {}
        }
        let labels = r.labels();
        match &target_labels {
            None => target_labels = Some(labels),
            Some(t) => {
                let mut a = t.clone();
                let mut b = labels;
                a.sort();
                b.sort();
                if a != b {
                    return Err(Error::OutcomeSetMismatch(format!(
                        "processor for `{x}` has outcomes {b:?}, expected {a:?}"
                    )));
                }
            }
        }
    }
    let target_labels = target_labels.expect("instrument has outcomes");
    let dim_out = dim_out.expect("instrument has outcomes");

    let outcomes = target_labels
        .iter()
        .map(|y| {
            let mut kraus = Vec::new();
            for (x, op) in &source.outcomes {
                let r = processors[x].operation(y).expect("label set checked");
                kraus.extend(
                    op.then(r)?
                        .kraus
                        .into_iter()
                        .filter(|k| k.iter().any(|z| z.norm_sqr() > 0.0)),
                );
            }
            if kraus.is_empty() {
                kraus.push(zeros(dim_out, source.dim_in));
            }
            Ok((y.clone(), QuantumOperation::new(source.dim_in, dim_out, kraus)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Instrument::new(source.dim_in, dim_out, outcomes)
}

/// Lüders instrument `I_x(ϱ) = √A(x) ϱ √A(x)`.
pub fn luders(a: &Povm) -> Instrument {
    let d = a.dim();
    Instrument::from_kraus(
        d,
        d,
        a.outcomes()
            .iter()
            .map(|(l, e)| (l.clone(), vec![psd_sqrt(e)]))
            .collect(),
    )
    .expect("shapes preserved")
}

/// Eigenpairs of a PSD matrix with eigenvalues above round-off.
fn positive_spectrum(m: &ComplexMatrix) -> Vec<(f64, ComplexMatrix)> {
    let e = eigh(m);
    let top = e.values.first().copied().unwrap_or(0.0);
    let floor = top.max(0.0) * 1e-14;
    e.values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > floor && v > 0.0)
        .map(|(k, &v)| (v, e.vector(k)))
        .collect()
}

/// `I_x(ϱ) = tr[A(x)ϱ] ξ_x`, with Kraus operators
/// `√(p_ix q_jx) |φ_ix⟩⟨ψ_jx|` from the spectra of `ξ_x` and `A(x)`.
pub fn measure_and_prepare(a: &Povm, states: &[State]) -> Result<Instrument> {
    if states.len() != a.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} states for {} outcomes",
            states.len(),
            a.len()
        )));
    }
    let dim_out = states.first().map(State::dim).unwrap_or(0);
    if states.iter().any(|s| s.dim() != dim_out) {
        return Err(Error::DimensionMismatch(
            "prepared states have different dimensions".into(),
        ));
    }
    let d_in = a.dim();
    let outcomes = a
        .outcomes()
        .iter()
        .zip(states)
        .map(|((label, e), xi)| {
            let mut kraus = Vec::new();
            for (q, psi) in positive_spectrum(e) {
                for (p, phi) in positive_spectrum(xi.matrix()) {
                    kraus.push(linalg::outer(&phi, &psi).scale((p * q).sqrt()));
                }
            }
            if kraus.is_empty() {
                kraus.push(zeros(dim_out, d_in));
            }
            (label.clone(), kraus)
        })
        .collect();
    Instrument::from_kraus(d_in, dim_out, outcomes)
}

/// `T_x(ϱ) = tr[ϱ] p_x ξ_x`, outcomes labeled `"0"`, `"1"`, ...
pub fn trash_and_prepare(dim_in: usize, p: &[f64], states: &[State]) -> Result<Instrument> {
    check_distribution(p)?;
    measure_and_prepare(&Povm::trivial(dim_in, p)?, states)
}

pub(crate) fn check_distribution(p: &[f64]) -> Result<()> {
    if p.is_empty() || p.iter().any(|&v| !v.is_finite() || v < 0.0) {
        return Err(Error::InvalidParameters(
            "probabilities must be nonnegative and finite".into(),
        ));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > STOCHASTIC_EPS {
        return Err(Error::InvalidParameters(format!("probabilities sum to {s}")));
    }
    Ok(())
}

/// One outcome `(i,x)` per minimal Kraus operator of each nonzero `I_x`
/// (`i` counts from 1).
pub fn detailed_instrument(instr: &Instrument, tol: Tolerance) -> Instrument {
    let mut outcomes = Vec::new();
    for (x, op) in &instr.outcomes {
        if op.is_zero(tol) {
            continue;
        }
        for (i, k) in op.minimal_kraus(tol).kraus.into_iter().enumerate() {
            let single = QuantumOperation::new(instr.dim_in, instr.dim_out, vec![k]).expect("shape");
            outcomes.push((pair_label(i + 1, x), single));
        }
    }
    Instrument::new(instr.dim_in, instr.dim_out, outcomes).expect("a normalized instrument has a nonzero outcome")
}

fn check_mixture(instruments: &[Instrument], p: &[f64]) -> Result<(usize, usize)> {
    if instruments.len() != p.len() || instruments.is_empty() {
        return Err(Error::InvalidParameters(format!(
            "{} instruments with {} probabilities",
            instruments.len(),
            p.len()
        )));
    }
    check_distribution(p)?;
    let (di, dout) = (instruments[0].dim_in, instruments[0].dim_out);
    if instruments.iter().any(|i| i.dim_in != di || i.dim_out != dout) {
        return Err(Error::DimensionMismatch(
            "mixed instruments must share input and output dimensions".into(),
        ));
    }
    Ok((di, dout))
}

/// `I_x = Σ_i p_i I^(i)_x`; outcomes missing from a component count as zero.
pub fn mix(instruments: &[Instrument], p: &[f64]) -> Result<Instrument> {
    let (di, dout) = check_mixture(instruments, p)?;
    let mut labels: Vec<String> = Vec::new();
    for instr in instruments {
        for (l, _) in &instr.outcomes {
            if !labels.contains(l) {
                labels.push(l.clone());
            }
        }
    }
    let outcomes = labels
        .into_iter()
        .map(|x| {
            let mut kraus = Vec::new();
            for (instr, &pi) in instruments.iter().zip(p) {
                if pi == 0.0 {
                    continue;
                }
                if let Some(op) = instr.operation(&x) {
                    kraus.extend(op.scaled(pi).kraus);
                }
            }
            if kraus.is_empty() {
                kraus.push(zeros(dout, di));
            }
            (x, kraus)
        })
        .collect();
    Instrument::from_kraus(di, dout, outcomes)
}

/// `Ĩ_(i,x) = p_i I^(i)_x`, keeping track of the component (`i` from 1).
pub fn tracked_mix(instruments: &[Instrument], p: &[f64]) -> Result<Instrument> {
    let (di, dout) = check_mixture(instruments, p)?;
    let outcomes = instruments
        .iter()
        .zip(p)
        .enumerate()
        .flat_map(|(i, (instr, &pi))| {
            instr
                .outcomes
                .iter()
                .map(move |(x, op)| (pair_label(i + 1, x), op.scaled(pi)))
        })
        .collect();
    Instrument::new(di, dout, outcomes)
}

/// Processors `Φ^(x)` with `compose(luders(A^I), Φ) = I`.
///
/// `Φ^(x)` is concentrated on outcome `x` with Kraus operators
/// `K_ix · pinv(√A(x))`, completed off the support of `A(x)` by sending the
/// kernel to the first basis state.
pub fn luders_refinement_witness(instr: &Instrument, tol: Tolerance) -> Processors {
    let labels = instr.labels();
    let anchor = linalg::ket(instr.dim_out, 0);
    instr
        .outcomes
        .iter()
        .map(|(x, op)| {
            let (pinv, kernel) = psd_pinv_sqrt(&op.effect(), tol);
            let mut kraus: Vec<ComplexMatrix> = op.kraus.iter().map(|k| k * &pinv).collect();
            for j in 0..kernel.ncols() {
                kraus.push(linalg::outer(&anchor, &kernel.columns(j, 1).into_owned()));
            }
            let channel = QuantumOperation::new(instr.dim_out, instr.dim_out, kraus).expect("shapes");
            let r = Instrument::concentrated(&labels, x, channel).expect("label exists");
            (x.clone(), r)
        })
        .collect()
}
