//! Predicates and certificates for special classes of instruments.

use crate::instrument::{measure_and_prepare, Instrument, QuantumOperation, State};
use crate::linalg::{
    count_above_relative, eigh, frobenius_distance, hs_inner, identity, partial_trace_first, partial_trace_second,
    scalar_multiple_of_identity, zeros, ComplexMatrix, Tolerance,
};
use crate::povm::Povm;

/// Decomposition `I_x(ϱ) = Σ_i p_xi V_xi ϱ V_xi†` with isometries `V_xi`
/// whose ranges are orthogonal within each outcome.
#[derive(Debug, Clone)]
pub struct IdentityClassCertificate {
    pub dim_in: usize,
    pub dim_out: usize,
    /// Per outcome, the `(p_xi, V_xi)` pairs; empty for zero operations.
    pub outcomes: Vec<(String, Vec<(f64, ComplexMatrix)>)>,
}

impl IdentityClassCertificate {
    pub fn total_weight(&self) -> f64 {
        self.outcomes.iter().flat_map(|(_, t)| t.iter().map(|(p, _)| p)).sum()
    }

    pub fn reconstruct(&self) -> Instrument {
        let outcomes = self
            .outcomes
            .iter()
            .map(|(x, terms)| {
                let op = if terms.is_empty() {
                    QuantumOperation::zero(self.dim_in, self.dim_out)
                } else {
                    let kraus = terms.iter().map(|(p, v)| v.scale(p.sqrt())).collect();
                    QuantumOperation::new(self.dim_in, self.dim_out, kraus).expect("shapes")
                };
                (x.clone(), op)
            })
            .collect();
        Instrument::new(self.dim_in, self.dim_out, outcomes).expect("shapes")
    }
}

/// `Choi(I_x) = A(x)^T ⊗ ξ_x`.
#[derive(Debug, Clone)]
pub struct MapPrepCertificate {
    pub povm: Povm,
    pub states: Vec<State>,
}

impl MapPrepCertificate {
    pub fn reconstruct(&self) -> Instrument {
        measure_and_prepare(&self.povm, &self.states).expect("certificate shapes agree")
    }
}

/// `T_x(ϱ) = tr[ϱ] p_x ξ_x`.
#[derive(Debug, Clone)]
pub struct TrashPrepCertificate {
    pub probabilities: Vec<f64>,
    pub states: Vec<State>,
}

/// Every nonzero operation has Kraus rank one.
pub fn is_indecomposable_instrument(instr: &Instrument, tol: Tolerance) -> bool {
    instr.outcomes().iter().all(|(_, op)| op.kraus_rank(tol) <= 1)
}

/// `Tr_in Choi / tr Choi`, or the maximally mixed state for a zero operation.
fn output_state(choi: &ComplexMatrix, d_in: usize, d_out: usize) -> State {
    State::normalized_from(&partial_trace_first(choi, d_in, d_out)).unwrap_or_else(|| State::maximally_mixed(d_out))
}

pub fn is_trash_and_prepare(instr: &Instrument, tol: Tolerance) -> Option<TrashPrepCertificate> {
    let (d_in, d_out) = (instr.dim_in(), instr.dim_out());
    let mut probabilities = Vec::new();
    let mut states = Vec::new();
    for (_, op) in instr.outcomes() {
        let choi = op.choi();
        let m = partial_trace_first(choi, d_in, d_out).unscale(d_in as f64);
        if frobenius_distance(choi, &identity(d_in).kronecker(&m)) > tol.eq_abs {
            return None;
        }
        probabilities.push(m.trace().re.max(0.0));
        states.push(output_state(choi, d_in, d_out));
    }
    Some(TrashPrepCertificate { probabilities, states })
}

pub fn is_measure_and_prepare(instr: &Instrument, tol: Tolerance) -> Option<MapPrepCertificate> {
    let (d_in, d_out) = (instr.dim_in(), instr.dim_out());
    let povm = instr.induced_povm();
    let mut states = Vec::new();
    for ((_, op), (_, effect)) in instr.outcomes().iter().zip(povm.outcomes()) {
        let choi = op.choi();
        let xi = output_state(choi, d_in, d_out);
        let et = partial_trace_second(choi, d_in, d_out);
        if frobenius_distance(&et, &effect.transpose()) > tol.eq_abs {
            return None;
        }
        if frobenius_distance(choi, &et.kronecker(xi.matrix())) > tol.eq_abs {
            return None;
        }
        states.push(xi);
    }
    let cert = MapPrepCertificate { povm, states };
    (cert.reconstruct().choi_distance(instr) <= tol.eq_abs).then_some(cert)
}

/// Decomposition of one operation into weighted isometries with orthogonal
/// ranges, following the minimal Kraus operators `A_i`: all products
/// `A_i'† A_i = β_i'i I`, and the eigenbasis of `β` gives the isometries.
fn identity_class_terms(op: &QuantumOperation, tol: Tolerance) -> Option<Vec<(f64, ComplexMatrix)>> {
    if op.is_zero(tol) {
        return Some(Vec::new());
    }
    let a = op.minimal_kraus(tol);
    let a = a.kraus();
    let n = a.len();
    let mut beta = zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            beta[(i, j)] = scalar_multiple_of_identity(&(a[i].adjoint() * &a[j]), tol)?;
        }
    }
    let e = eigh(&beta);
    let mut terms = Vec::with_capacity(n);
    for k in 0..n {
        let gamma = e.values[k];
        if gamma <= 0.0 {
            return None;
        }
        let mut c = zeros(op.dim_out(), op.dim_in());
        for (i, ai) in a.iter().enumerate() {
            c += ai.map(|z| z * e.vectors[(i, k)]);
        }
        terms.push((gamma, c.unscale(gamma.sqrt())));
    }
    Some(terms)
}

fn check_identity_certificate(instr: &Instrument, cert: &IdentityClassCertificate, tol: Tolerance) -> bool {
    if (cert.total_weight() - 1.0).abs() > 1e-12 {
        return false;
    }
    let id = identity(instr.dim_in());
    for (_, terms) in &cert.outcomes {
        for (i, (_, vi)) in terms.iter().enumerate() {
            for (j, (_, vj)) in terms.iter().enumerate() {
                let want = if i == j {
                    id.clone()
                } else {
                    zeros(id.nrows(), id.ncols())
                };
                if frobenius_distance(&(vj.adjoint() * vi), &want) > tol.eq_abs {
                    return false;
                }
            }
        }
    }
    cert.reconstruct().choi_distance(instr) <= tol.eq_abs
}

/// Certificate that `instr` is post-processing equivalent to the identity
/// channel, i.e. every operation is a weighted sum of isometric conjugations
/// with mutually orthogonal ranges.
pub fn identity_class_certificate(instr: &Instrument, tol: Tolerance) -> Option<IdentityClassCertificate> {
    if instr.dim_out() < instr.dim_in() {
        return None;
    }
    let outcomes = instr
        .outcomes()
        .iter()
        .map(|(x, op)| Some((x.clone(), identity_class_terms(op, tol)?)))
        .collect::<Option<Vec<_>>>()?;
    let cert = IdentityClassCertificate {
        dim_in: instr.dim_in(),
        dim_out: instr.dim_out(),
        outcomes,
    };
    check_identity_certificate(instr, &cert, tol).then_some(cert)
}

/// Extremality test: the products `K_ix† K_jx` of minimal Kraus operators
/// (all outcomes, all `i, j` within an outcome) are linearly independent.
pub fn is_extreme(instr: &Instrument, tol: Tolerance) -> bool {
    let mut products = Vec::new();
    for (_, op) in instr.outcomes() {
        if op.is_zero(tol) {
            continue;
        }
        let m = op.minimal_kraus(tol);
        for ki in m.kraus() {
            for kj in m.kraus() {
                products.push(ki.adjoint() * kj);
            }
        }
    }
    let n = products.len();
    let gram = ComplexMatrix::from_fn(n, n, |a, b| hs_inner(&products[a], &products[b]));
    count_above_relative(&eigh(&gram).values, tol.rank_rel) == n
}

/// Equivalent to the identity channel under post-processing.
pub fn is_post_processing_clean(instr: &Instrument, tol: Tolerance) -> bool {
    identity_class_certificate(instr, tol).is_some()
}

/// Coincides with post-processing cleanness.
pub fn is_simulation_irreducible(instr: &Instrument, tol: Tolerance) -> bool {
    is_post_processing_clean(instr, tol)
}
