//! Post-processing witnesses between instruments.
//!
//! Every constructor returns processors that can be replayed through
//! [`compose_post_processing`] and records the Choi matrices of the target it
//! claims to reproduce.

use crate::classify::{is_indecomposable_instrument, is_measure_and_prepare, IdentityClassCertificate};
use crate::error::{Error, Result};
use crate::instrument::{
    compose_post_processing, detailed_instrument, pair_label, trash_and_prepare, Instrument, Processors,
    QuantumOperation, State,
};
use crate::linalg::{
    complement_basis, eigh, frobenius_distance, identity, ket, outer, partial_isometry_factor, range_projector, zeros,
    ComplexMatrix, Tolerance,
};
use crate::povm::{find_post_processing, povm_equivalent, StochasticMatrix};

/// Processors turning an instrument with outcomes `source_labels` into a
/// declared target.
#[derive(Debug, Clone)]
pub struct InstrumentWitness {
    pub source_labels: Vec<String>,
    pub processors: Processors,
    /// Choi matrix of each target outcome, in target order.
    pub target: Vec<(String, ComplexMatrix)>,
}

impl InstrumentWitness {
    fn new(source: &Instrument, processors: Processors, target: &Instrument) -> Self {
        Self {
            source_labels: source.labels(),
            processors,
            target: target
                .outcomes()
                .iter()
                .map(|(l, op)| (l.clone(), op.choi().clone()))
                .collect(),
        }
    }

    pub fn target_labels(&self) -> Vec<String> {
        self.target.iter().map(|(l, _)| l.clone()).collect()
    }

    pub fn replay(&self, source: &Instrument) -> Result<Instrument> {
        let mut got = source.labels();
        let mut want = self.source_labels.clone();
        got.sort();
        want.sort();
        if got != want {
            return Err(Error::LabelMismatch(format!(
                "witness expects outcomes {want:?}, source has {got:?}"
            )));
        }
        compose_post_processing(source, &self.processors)
    }

    /// Largest per-outcome Choi distance between the replay and the stored target.
    pub fn replay_distance(&self, source: &Instrument) -> Result<f64> {
        let j = self.replay(source)?;
        if j.len() != self.target.len() {
            return Ok(f64::INFINITY);
        }
        let mut worst: f64 = 0.0;
        for (label, choi) in &self.target {
            match j.operation(label) {
                Some(op) if op.choi().shape() == choi.shape() => worst = worst.max(frobenius_distance(op.choi(), choi)),
                _ => return Ok(f64::INFINITY),
            }
        }
        Ok(worst)
    }

    fn verified(self, source: &Instrument, tol: Tolerance) -> Result<Self> {
        let d = self.replay_distance(source)?;
        if d > tol.eq_abs {
            return Err(Error::CertificateMismatch(format!("witness replay is off by {d:.3e}")));
        }
        Ok(self)
    }
}

/// Witnesses in both directions between two instruments, with the
/// proportionality data they were built from.
#[derive(Debug, Clone)]
pub struct EquivalenceWitness {
    pub forward: InstrumentWitness,
    pub backward: InstrumentWitness,
    /// `(x, y, c_xy)` with `A^I(x) = c_xy A^J(y)`; `d_yx = 1 / c_xy`.
    pub constants: Vec<(String, String, f64)>,
    /// Realizes `A^J → A^I` (rows are J's labels).
    pub nu: StochasticMatrix,
    /// Realizes `A^I → A^J` (rows are I's labels).
    pub mu: StochasticMatrix,
}

fn identity_routing(labels: &[String], x: &str, dim: usize) -> Instrument {
    Instrument::concentrated(labels, x, QuantumOperation::identity(dim)).expect("label exists")
}

/// Processors `R^(i,x)_x' = δ_xx' id` from the detailed instrument back to `instr`.
pub fn witness_detailed_to_original(instr: &Instrument, tol: Tolerance) -> InstrumentWitness {
    let detailed = detailed_instrument(instr, tol);
    let labels = instr.labels();
    let mut processors = Processors::new();
    for (x, op) in instr.outcomes() {
        if op.is_zero(tol) {
            continue;
        }
        for i in 1..=op.minimal_kraus(tol).kraus().len() {
            processors.insert(pair_label(i, x), identity_routing(&labels, x, instr.dim_out()));
        }
    }
    InstrumentWitness::new(&detailed, processors, instr)
}

/// Projective processors from `instr` to its detailed instrument, available
/// when the minimal Kraus operators of each outcome satisfy
/// `K_ix† K_jx = 0` for `i ≠ j`. `R^(x)` measures the projectors
/// `Π_ix = π_ix` (range of `K_ix`) for `i ≥ 2` and `Π_1x = I − Σ_{i≥2} π_ix`.
pub fn witness_original_to_detailed(instr: &Instrument, tol: Tolerance) -> Option<InstrumentWitness> {
    if max_cross_product(instr, tol) > tol.eq_abs {
        return None;
    }
    projective_candidate(instr, tol).verified(instr, tol).ok()
}

fn max_cross_product(instr: &Instrument, tol: Tolerance) -> f64 {
    let mut worst: f64 = 0.0;
    for (_, op) in instr.outcomes() {
        if op.is_zero(tol) {
            continue;
        }
        let k = op.minimal_kraus(tol);
        let k = k.kraus();
        for (i, ki) in k.iter().enumerate() {
            for kj in &k[i + 1..] {
                worst = worst.max((ki.adjoint() * kj).norm());
            }
        }
    }
    worst
}

/// The projective processors, built without checking orthogonality; they
/// need not form instruments when the check fails.
fn projective_candidate(instr: &Instrument, tol: Tolerance) -> InstrumentWitness {
    let detailed = detailed_instrument(instr, tol);
    let target_labels = detailed.labels();
    let d = instr.dim_out();
    let mut processors = Processors::new();
    for (x, op) in instr.outcomes() {
        if op.is_zero(tol) {
            processors.insert(x.clone(), identity_routing(&target_labels, &target_labels[0], d));
            continue;
        }
        let k = op.minimal_kraus(tol);
        let mut projectors: Vec<ComplexMatrix> = k.kraus().iter().map(|ki| range_projector(ki, tol)).collect();
        let rest: ComplexMatrix = projectors[1..].iter().fold(zeros(d, d), |acc, p| acc + p);
        projectors[0] = identity(d) - rest;
        let mine: Vec<String> = (1..=projectors.len()).map(|i| pair_label(i, x)).collect();
        let outcomes = target_labels
            .iter()
            .map(|y| {
                let op = match mine.iter().position(|m| m == y) {
                    Some(i) => QuantumOperation::new(d, d, vec![projectors[i].clone()]).expect("shape"),
                    None => QuantumOperation::zero(d, d),
                };
                (y.clone(), op)
            })
            .collect();
        processors.insert(x.clone(), Instrument::new(d, d, outcomes).expect("shapes"));
    }
    InstrumentWitness::new(instr, processors, &detailed)
}

/// Channels `R^(x)(ϱ) = Σ_i V_xi† ϱ V_xi + tr[Π_x ϱ] |ψ⟩⟨ψ|` undoing an
/// identity-class instrument, with `Π_x` the projector off all ranges of
/// `V_xi` and `ψ` the first basis vector.
pub fn witness_identity_reversal(
    instr: &Instrument,
    cert: &IdentityClassCertificate,
    tol: Tolerance,
) -> Result<InstrumentWitness> {
    let (d_in, d_out) = (instr.dim_in(), instr.dim_out());
    if cert.dim_in != d_in || cert.dim_out != d_out || cert.reconstruct().choi_distance(instr) > tol.eq_abs {
        return Err(Error::CertificateMismatch(
            "certificate does not reproduce the instrument".into(),
        ));
    }
    let psi = ket(d_in, 0);
    let mut processors = Processors::new();
    for (x, terms) in &cert.outcomes {
        let mut kraus: Vec<ComplexMatrix> = terms.iter().map(|(_, v)| v.adjoint()).collect();
        let ranges = if terms.is_empty() {
            zeros(d_out, 0)
        } else {
            let cols: Vec<ComplexMatrix> = terms.iter().map(|(_, v)| v.clone()).collect();
            let mut m = zeros(d_out, cols.len() * d_in);
            for (i, v) in cols.iter().enumerate() {
                m.columns_mut(i * d_in, d_in).copy_from(v);
            }
            m
        };
        let rest = complement_basis(&ranges);
        for j in 0..rest.ncols() {
            kraus.push(outer(&psi, &rest.columns(j, 1).into_owned()));
        }
        let channel = QuantumOperation::new(d_out, d_in, kraus)?;
        processors.insert(x.clone(), Instrument::channel(channel));
    }
    InstrumentWitness::new(instr, processors, &Instrument::identity_channel(d_in)).verified(instr, tol)
}

/// Processors `R^(x)_y(ϱ) = tr[ϱ] p_y ξ_y`, turning any instrument into the
/// trash-and-prepare instrument `(p, states)`.
pub fn witness_to_trash_and_prepare(
    instr: &Instrument,
    p: &[f64],
    states: &[State],
    tol: Tolerance,
) -> Result<InstrumentWitness> {
    let target = trash_and_prepare(instr.dim_in(), p, states)?;
    let processor = trash_and_prepare(instr.dim_out(), p, states)?;
    let processors = instr.labels().into_iter().map(|x| (x, processor.clone())).collect();
    InstrumentWitness::new(instr, processors, &target).verified(instr, tol)
}

/// Processors from an indecomposable `src` to an indecomposable `dst`
/// following `B^dst(y) = Σ_x w_xy A^src(x)`, where `w` is supported on
/// proportional pairs. `R^(x)_y` has Kraus operators `√w_xy U_xy` with
/// `B_y = √c_xy U_xy A_x`, completed by `√w_xy |ξ⟩⟨e_k|` on the kernel of
/// `U_xy`.
fn proportional_processors(
    src: &Instrument,
    dst: &Instrument,
    w: &StochasticMatrix,
    tol: Tolerance,
    constants: &mut Vec<(String, String, f64)>,
) -> Result<Processors> {
    let (d_src, d_dst) = (src.dim_out(), dst.dim_out());
    let dst_labels = dst.labels();
    let xi = ket(d_dst, 0);
    let mut processors = Processors::new();
    for (x, op) in src.outcomes() {
        if op.is_zero(tol) {
            let trash = trash_and_prepare(d_src, &[1.0], &[State::pure(&xi)])?.outcomes()[0]
                .1
                .clone();
            processors.insert(x.clone(), Instrument::concentrated(&dst_labels, &dst_labels[0], trash)?);
            continue;
        }
        let a = op.minimal_kraus(tol).kraus()[0].clone();
        let tr_a = op.effect().trace().re;
        let mut outcomes = Vec::with_capacity(dst_labels.len());
        for (y, dst_op) in dst.outcomes() {
            let wxy = w.get(x, y).unwrap_or(0.0);
            if wxy == 0.0 || dst_op.is_zero(tol) {
                outcomes.push((y.clone(), QuantumOperation::zero(d_src, d_dst)));
                continue;
            }
            let b = dst_op.minimal_kraus(tol).kraus()[0].clone();
            let c = dst_op.effect().trace().re / tr_a;
            constants.push((x.clone(), y.clone(), 1.0 / c));
            let u = partial_isometry_factor(&b, &a, c, tol)?;
            let s = wxy.sqrt();
            let mut kraus = vec![u.scale(s)];
            let gram = eigh(&(u.adjoint() * &u));
            for (k, &lambda) in gram.values.iter().enumerate() {
                if lambda < 0.5 {
                    kraus.push(outer(&xi, &gram.vector(k)).scale(s));
                }
            }
            outcomes.push((y.clone(), QuantumOperation::new(d_src, d_dst, kraus)?));
        }
        processors.insert(x.clone(), Instrument::new(d_src, d_dst, outcomes)?);
    }
    Ok(processors)
}

/// Equivalence of indecomposable instruments, decided by equivalence of
/// their induced POVMs. Both directions are built from the same
/// proportionality data and replayed before return.
pub fn witness_indecomposable_equivalence(
    i: &Instrument,
    j: &Instrument,
    tol: Tolerance,
) -> Result<Option<EquivalenceWitness>> {
    if !is_indecomposable_instrument(i, tol) {
        return Err(Error::NotIndecomposable("first instrument".into()));
    }
    if !is_indecomposable_instrument(j, tol) {
        return Err(Error::NotIndecomposable("second instrument".into()));
    }
    let Some(eq) = povm_equivalent(&i.induced_povm(), &j.induced_povm(), tol)? else {
        return Ok(None);
    };
    let mut constants = Vec::new();
    let forward = proportional_processors(i, j, &eq.mu, tol, &mut constants)?;
    let backward = proportional_processors(j, i, &eq.nu, tol, &mut Vec::new())?;
    let forward = InstrumentWitness::new(i, forward, j).verified(i, tol)?;
    let backward = InstrumentWitness::new(j, backward, i).verified(j, tol)?;
    Ok(Some(EquivalenceWitness {
        forward,
        backward,
        constants,
        nu: eq.nu,
        mu: eq.mu,
    }))
}

/// `I → J` for measure-and-prepare instruments, decided on induced POVMs.
/// `R^(x)_y(ϱ) = tr[ϱ] μ_xy ξ_y` with `ξ_y` the states prepared by `J`.
pub fn witness_map_post_processing(
    i: &Instrument,
    j: &Instrument,
    tol: Tolerance,
) -> Result<Option<InstrumentWitness>> {
    if is_measure_and_prepare(i, tol).is_none() {
        return Err(Error::NotMeasureAndPrepare("first instrument".into()));
    }
    let Some(cert_j) = is_measure_and_prepare(j, tol) else {
        return Err(Error::NotMeasureAndPrepare("second instrument".into()));
    };
    if i.dim_in() != j.dim_in() {
        return Err(Error::DimensionMismatch(format!(
            "input dimensions {} and {}",
            i.dim_in(),
            j.dim_in()
        )));
    }
    let Some(mu) = find_post_processing(&i.induced_povm(), &j.induced_povm(), tol)? else {
        return Ok(None);
    };
    let j_labels = j.labels();
    let mut processors = Processors::new();
    for x in i.labels() {
        let row: Vec<f64> = j_labels.iter().map(|y| mu.get(&x, y).unwrap_or(0.0)).collect();
        let prep = trash_and_prepare(i.dim_out(), &row, &cert_j.states)?;
        let relabeled = prep.relabeled(|k| j_labels[k.parse::<usize>().expect("index label")].clone())?;
        processors.insert(x, relabeled);
    }
    Ok(Some(InstrumentWitness::new(i, processors, j).verified(i, tol)?))
}

/// Necessary condition for `I → J` when `J` is indecomposable: `A^J → A^I`,
/// together with the direct consequence `A^I → A^J`. `false` certifies that
/// `J` is not a post-processing of `I`.
pub fn check_povm_necessary_condition(i: &Instrument, j: &Instrument, tol: Tolerance) -> Result<bool> {
    if !is_indecomposable_instrument(j, tol) {
        return Err(Error::NotIndecomposable("second instrument".into()));
    }
    let (a, b) = (i.induced_povm(), j.induced_povm());
    Ok(find_post_processing(&b, &a, tol)?.is_some() && find_post_processing(&a, &b, tol)?.is_some())
}

/// Outcome of [`probe_detailed_equivalence`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetailedProbe {
    /// Largest `‖K_ix† K_jx‖` over `i ≠ j` within an outcome.
    pub max_cross_product: f64,
    /// Replay distance of the projective candidate, infinite if its
    /// processors are not instruments.
    pub candidate_distance: f64,
}

/// Experimental probe for whether orthogonal Kraus products are also
/// necessary for equivalence with the detailed instrument. Builds the
/// projective candidate regardless of the orthogonality test and reports how
/// far it gets. Makes no claim either way.
pub fn probe_detailed_equivalence(instr: &Instrument, tol: Tolerance) -> DetailedProbe {
    let candidate = projective_candidate(instr, tol);
    let valid = candidate.processors.values().all(|r| r.validate(tol).is_ok());
    DetailedProbe {
        max_cross_product: max_cross_product(instr, tol),
        candidate_distance: if valid {
            candidate.replay_distance(instr).unwrap_or(f64::INFINITY)
        } else {
            f64::INFINITY
        },
    }
}
