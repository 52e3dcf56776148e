//! Simulation of instruments from a collection by mixing and post-processing.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::instrument::{
    check_distribution, compose_post_processing, pair_label, tracked_mix, Instrument, Processors, QuantumOperation,
};
use crate::linalg::{frobenius_distance, identity, ket, outer, ComplexMatrix, Tolerance};

/// `I_y(ϱ) = Σ_i p_i Σ_x R^(i,x)_y(J^(i)_x(ϱ))`.
///
/// Processors are keyed by `(i, x)` with `i` the 0-based component index.
#[derive(Debug, Clone)]
pub struct SimulationProgram {
    pub components: Vec<Instrument>,
    pub probs: Vec<f64>,
    pub processors: BTreeMap<(usize, String), Instrument>,
}

impl SimulationProgram {
    fn check(&self) -> Result<()> {
        if self.components.len() != self.probs.len() || self.components.is_empty() {
            return Err(Error::InvalidParameters(format!(
                "{} components with {} probabilities",
                self.components.len(),
                self.probs.len()
            )));
        }
        check_distribution(&self.probs)?;
        let d_in = self.components[0].dim_in();
        for (i, c) in self.components.iter().enumerate() {
            if c.dim_in() != d_in {
                return Err(Error::DimensionMismatch(format!(
                    "component {i} has input dimension {}, expected {d_in}",
                    c.dim_in()
                )));
            }
            for x in c.labels() {
                let r = self.processors.get(&(i, x.clone())).ok_or_else(|| {
                    Error::OutcomeSetMismatch(format!("no processor for component {i}, outcome `{x}`"))
                })?;
                if r.dim_in() != c.dim_out() {
                    return Err(Error::DimensionMismatch(format!(
                        "processor ({i}, {x}) takes dimension {}, component outputs {}",
                        r.dim_in(),
                        c.dim_out()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Runs a simulation program as `compose_post_processing(tracked_mix(..), ..)`.
///
/// Components with smaller output spaces are embedded into the largest one,
/// and their processors gain a Kraus operator `|0⟩⟨e_k|` for each padding
/// direction `e_k`, which the embedded outputs never populate.
pub fn simulate(prog: &SimulationProgram) -> Result<Instrument> {
    prog.check()?;
    let d = prog.components.iter().map(Instrument::dim_out).max().expect("nonempty");
    let mut embedded = Vec::with_capacity(prog.components.len());
    let mut processors = Processors::new();
    for (i, c) in prog.components.iter().enumerate() {
        let e = identity(d).columns(0, c.dim_out()).into_owned();
        embedded.push(embed_output(c, &e)?);
        for x in c.labels() {
            let r = &prog.processors[&(i, x.clone())];
            processors.insert(pair_label(i + 1, &x), extend_input(r, &e)?);
        }
    }
    compose_post_processing(&tracked_mix(&embedded, &prog.probs)?, &processors)
}

fn embed_output(c: &Instrument, e: &ComplexMatrix) -> Result<Instrument> {
    if e.nrows() == c.dim_out() {
        return Ok(c.clone());
    }
    let outcomes = c
        .outcomes()
        .iter()
        .map(|(x, op)| {
            let kraus = op.kraus().iter().map(|k| e * k).collect();
            Ok((x.clone(), QuantumOperation::new(c.dim_in(), e.nrows(), kraus)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Instrument::new(c.dim_in(), e.nrows(), outcomes)
}

fn extend_input(r: &Instrument, e: &ComplexMatrix) -> Result<Instrument> {
    let (d, small) = (e.nrows(), e.ncols());
    if d == small {
        return Ok(r.clone());
    }
    let anchor = ket(r.dim_out(), 0);
    let first = r.labels()[0].clone();
    let outcomes = r
        .outcomes()
        .iter()
        .map(|(y, op)| {
            let mut kraus: Vec<ComplexMatrix> = op.kraus().iter().map(|k| k * e.adjoint()).collect();
            if *y == first {
                for j in small..d {
                    kraus.push(outer(&anchor, &ket(d, j)));
                }
            }
            Ok((y.clone(), QuantumOperation::new(d, r.dim_out(), kraus)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Instrument::new(d, r.dim_out(), outcomes)
}

/// Single-outcome instrument `ϱ ↦ VϱV†`.
pub fn isometric_channel(v: &ComplexMatrix, tol: Tolerance) -> Result<Instrument> {
    let dev = frobenius_distance(&(v.adjoint() * v), &identity(v.ncols()));
    if dev > tol.eq_abs {
        return Err(Error::NotIsometry(dev));
    }
    Ok(Instrument::channel(QuantumOperation::new(
        v.ncols(),
        v.nrows(),
        vec![v.clone()],
    )?))
}

pub fn is_isometric_channel(instr: &Instrument, tol: Tolerance) -> bool {
    if instr.len() != 1 {
        return false;
    }
    let op = &instr.outcomes()[0].1;
    if op.kraus_rank(tol) != 1 {
        return false;
    }
    let k = op.minimal_kraus(tol).kraus()[0].clone();
    frobenius_distance(&(k.adjoint() * &k), &identity(instr.dim_in())) <= tol.eq_abs
}
