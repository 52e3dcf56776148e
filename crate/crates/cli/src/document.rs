//! On-disk JSON documents.
//!
//! Every document is an object with `kind` and `version` fields plus a
//! kind-specific body. Complex numbers are `[re, im]` pairs written with 17
//! significant digits, so `f64` values survive a round trip exactly; matrices
//! are row-major nested arrays.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use qpost_core::linalg::{c64, from_row_major};
use qpost_core::{ComplexMatrix, Instrument, InstrumentWitness, Povm, Processors, SimulationProgram, Tolerance};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

pub const VERSION: u64 = 1;

#[derive(Debug, thiserror::Error)]
pub enum DocumentError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    /// `location` is a `line:column` pair for syntax errors and a field path
    /// otherwise.
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
}

impl DocumentError {
    fn at(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, DocumentError>;

/// Processors conditioned on source outcomes, optionally with the Choi
/// matrices of the target they are claimed to produce.
#[derive(Debug, Clone)]
pub struct Witness {
    pub processors: Processors,
    pub target: Option<Vec<(String, ComplexMatrix)>>,
}

impl From<InstrumentWitness> for Witness {
    fn from(w: InstrumentWitness) -> Self {
        Self {
            processors: w.processors,
            target: Some(w.target),
        }
    }
}

/// Result of a command, with the tolerances it ran under.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub tolerance: Tolerance,
    pub result: Value,
}

#[derive(Debug, Clone)]
pub enum Document {
    Povm(Povm),
    Instrument(Instrument),
    /// Density matrix, unchecked until validated.
    State(ComplexMatrix),
    Witness(Witness),
    Program(SimulationProgram),
    Report(Report),
}

impl Document {
    pub fn kind(&self) -> &'static str {
        match self {
            Document::Povm(_) => "povm",
            Document::Instrument(_) => "instrument",
            Document::State(_) => "state",
            Document::Witness(_) => "witness",
            Document::Program(_) => "program",
            Document::Report(_) => "report",
        }
    }

    pub fn to_value(&self) -> Value {
        let body = match self {
            Document::Povm(a) => to_value(&povm_body(a)),
            Document::Instrument(i) => to_value(&instrument_body(i)),
            Document::State(m) => to_value(&StateBody {
                dim: m.nrows(),
                matrix: matrix_out(m),
            }),
            Document::Witness(w) => to_value(&witness_body(w)),
            Document::Program(p) => to_value(&ProgramBody {
                components: p.components.iter().map(instrument_body).collect(),
                probs: p.probs.iter().map(|&x| Num(x)).collect(),
                processors: p
                    .processors
                    .iter()
                    .map(|((i, x), r)| ProgramProcessor {
                        component: *i,
                        outcome: x.clone(),
                        instrument: instrument_body(r),
                    })
                    .collect(),
            }),
            Document::Report(r) => to_value(&ReportBody {
                command: r.command.clone(),
                tolerances: TolBody {
                    eq_abs: Num(r.tolerance.eq_abs),
                    rank_rel: Num(r.tolerance.rank_rel),
                },
                result: r.result.clone(),
            }),
        };
        let mut out = Map::new();
        out.insert("kind".into(), Value::String(self.kind().into()));
        out.insert("version".into(), Value::from(VERSION));
        if let Value::Object(fields) = body {
            out.extend(fields);
        }
        Value::Object(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("documents serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| DocumentError::at(format!("{}:{}", e.line(), e.column()), e.to_string()))?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        let Value::Object(mut fields) = value else {
            return Err(DocumentError::at("<root>", "document must be a JSON object"));
        };
        let kind = match fields.remove("kind") {
            Some(Value::String(k)) => k,
            Some(_) => return Err(DocumentError::at("kind", "expected a string")),
            None => return Err(DocumentError::at("kind", "missing field")),
        };
        match fields.remove("version") {
            Some(v) if v.as_u64() == Some(VERSION) => {}
            Some(v) => return Err(DocumentError::at("version", format!("unsupported version {v}"))),
            None => return Err(DocumentError::at("version", "missing field")),
        }
        let body = Value::Object(fields);
        match kind.as_str() {
            "povm" => Ok(Document::Povm(povm_from(parse(body)?)?)),
            "instrument" => Ok(Document::Instrument(instrument_from(parse(body)?, "")?)),
            "state" => {
                let s: StateBody = parse(body)?;
                Ok(Document::State(matrix_from(s.matrix, s.dim, s.dim, "matrix")?))
            }
            "witness" => Ok(Document::Witness(witness_from(parse(body)?)?)),
            "program" => Ok(Document::Program(program_from(parse(body)?)?)),
            "report" => {
                let r: ReportBody = parse(body)?;
                let tolerance = Tolerance::new(r.tolerances.eq_abs.0, r.tolerances.rank_rel.0)
                    .map_err(|e| DocumentError::at("tolerances", e.to_string()))?;
                Ok(Document::Report(Report {
                    command: r.command,
                    tolerance,
                    result: r.result,
                }))
            }
            other => Err(DocumentError::at("kind", format!("unknown document kind `{other}`"))),
        }
    }
}

pub fn load(path: impl AsRef<Path>) -> Result<Document> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DocumentError::Io {
        path: path.to_owned(),
        source,
    })?;
    Document::from_json(&text)
}

pub fn save(doc: &Document, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = doc.to_json();
    text.push('\n');
    fs::write(path, text).map_err(|source| DocumentError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Serializes a matrix in the document encoding, for embedding in reports.
pub fn matrix_value(m: &ComplexMatrix) -> Value {
    to_value(&matrix_out(m))
}

pub fn instrument_value(i: &Instrument) -> Value {
    to_value(&instrument_body(i))
}

pub fn witness_value(w: &Witness) -> Value {
    to_value(&witness_body(w))
}

pub fn number(x: f64) -> Value {
    to_value(&Num(x))
}

/// `f64` written with 17 significant digits.
#[derive(Debug, Clone, Copy)]
struct Num(f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(serde::ser::Error::custom(format!("non-finite number {}", self.0)));
        }
        let n: serde_json::Number = format!("{:.16e}", self.0).parse().map_err(serde::ser::Error::custom)?;
        n.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        f64::deserialize(d).map(Num)
    }
}

type Matrix = Vec<Vec<[Num; 2]>>;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PovmBody {
    dim: usize,
    outcomes: Vec<EffectEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EffectEntry {
    label: String,
    effect: Matrix,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstrumentBody {
    dim_in: usize,
    dim_out: usize,
    outcomes: Vec<OperationEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OperationEntry {
    label: String,
    kraus: Vec<Matrix>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateBody {
    dim: usize,
    matrix: Matrix,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WitnessBody {
    processors: Vec<WitnessProcessor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<Vec<ChoiEntry>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WitnessProcessor {
    source: String,
    instrument: InstrumentBody,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChoiEntry {
    label: String,
    choi: Matrix,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProgramBody {
    components: Vec<InstrumentBody>,
    probs: Vec<Num>,
    processors: Vec<ProgramProcessor>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProgramProcessor {
    component: usize,
    outcome: String,
    instrument: InstrumentBody,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TolBody {
    eq_abs: Num,
    rank_rel: Num,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportBody {
    command: String,
    tolerances: TolBody,
    result: Value,
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("finite numbers serialize")
}

fn parse<T: DeserializeOwned>(body: Value) -> Result<T> {
    serde_path_to_error::deserialize(body).map_err(|e| {
        let path = e.path().to_string();
        DocumentError::at(
            if path == "." { "<root>".into() } else { path },
            e.into_inner().to_string(),
        )
    })
}

fn join(prefix: &str, field: &str) -> String {
    if prefix.is_empty() {
        field.to_owned()
    } else {
        format!("{prefix}.{field}")
    }
}

fn matrix_out(m: &ComplexMatrix) -> Matrix {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [Num(m[(r, c)].re), Num(m[(r, c)].im)]).collect())
        .collect()
}

fn matrix_from(m: Matrix, rows: usize, cols: usize, field: &str) -> Result<ComplexMatrix> {
    if m.len() != rows {
        return Err(DocumentError::at(
            field,
            format!("expected {rows} rows, found {}", m.len()),
        ));
    }
    let mut entries = Vec::with_capacity(rows * cols);
    for (r, row) in m.into_iter().enumerate() {
        if row.len() != cols {
            return Err(DocumentError::at(
                format!("{field}[{r}]"),
                format!("expected {cols} entries, found {}", row.len()),
            ));
        }
        entries.extend(row.into_iter().map(|[re, im]| c64(re.0, im.0)));
    }
    from_row_major(rows, cols, &entries).map_err(|e| DocumentError::at(field, e.to_string()))
}

fn povm_body(a: &Povm) -> PovmBody {
    PovmBody {
        dim: a.dim(),
        outcomes: a
            .outcomes()
            .iter()
            .map(|(label, e)| EffectEntry {
                label: label.clone(),
                effect: matrix_out(e),
            })
            .collect(),
    }
}

fn povm_from(b: PovmBody) -> Result<Povm> {
    let outcomes = b
        .outcomes
        .into_iter()
        .enumerate()
        .map(|(k, o)| {
            Ok((
                o.label,
                matrix_from(o.effect, b.dim, b.dim, &format!("outcomes[{k}].effect"))?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Povm::new(b.dim, outcomes).map_err(|e| DocumentError::at("outcomes", e.to_string()))
}

fn instrument_body(i: &Instrument) -> InstrumentBody {
    InstrumentBody {
        dim_in: i.dim_in(),
        dim_out: i.dim_out(),
        outcomes: i
            .outcomes()
            .iter()
            .map(|(label, op)| OperationEntry {
                label: label.clone(),
                kraus: op.kraus().iter().map(matrix_out).collect(),
            })
            .collect(),
    }
}

fn instrument_from(b: InstrumentBody, prefix: &str) -> Result<Instrument> {
    let outcomes = b
        .outcomes
        .into_iter()
        .enumerate()
        .map(|(k, o)| {
            let kraus = o
                .kraus
                .into_iter()
                .enumerate()
                .map(|(n, m)| {
                    matrix_from(
                        m,
                        b.dim_out,
                        b.dim_in,
                        &join(prefix, &format!("outcomes[{k}].kraus[{n}]")),
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((o.label, kraus))
        })
        .collect::<Result<Vec<_>>>()?;
    Instrument::from_kraus(b.dim_in, b.dim_out, outcomes)
        .map_err(|e| DocumentError::at(join(prefix, "outcomes"), e.to_string()))
}

fn witness_body(w: &Witness) -> WitnessBody {
    WitnessBody {
        processors: w
            .processors
            .iter()
            .map(|(x, r)| WitnessProcessor {
                source: x.clone(),
                instrument: instrument_body(r),
            })
            .collect(),
        target: w.target.as_ref().map(|t| {
            t.iter()
                .map(|(label, choi)| ChoiEntry {
                    label: label.clone(),
                    choi: matrix_out(choi),
                })
                .collect()
        }),
    }
}

fn witness_from(b: WitnessBody) -> Result<Witness> {
    let mut processors = BTreeMap::new();
    for (k, p) in b.processors.into_iter().enumerate() {
        let field = format!("processors[{k}]");
        let r = instrument_from(p.instrument, &join(&field, "instrument"))?;
        if processors.insert(p.source.clone(), r).is_some() {
            return Err(DocumentError::at(
                join(&field, "source"),
                format!("duplicate source `{}`", p.source),
            ));
        }
    }
    let target = b
        .target
        .map(|t| {
            t.into_iter()
                .enumerate()
                .map(|(k, e)| {
                    let n = e.choi.len();
                    Ok((e.label, matrix_from(e.choi, n, n, &format!("target[{k}].choi"))?))
                })
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    Ok(Witness { processors, target })
}

fn program_from(b: ProgramBody) -> Result<SimulationProgram> {
    let components = b
        .components
        .into_iter()
        .enumerate()
        .map(|(i, c)| instrument_from(c, &format!("components[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let mut processors = BTreeMap::new();
    for (k, p) in b.processors.into_iter().enumerate() {
        let field = format!("processors[{k}]");
        let r = instrument_from(p.instrument, &join(&field, "instrument"))?;
        if processors.insert((p.component, p.outcome.clone()), r).is_some() {
            return Err(DocumentError::at(
                field,
                format!("duplicate processor ({}, {})", p.component, p.outcome),
            ));
        }
    }
    Ok(SimulationProgram {
        components,
        probs: b.probs.into_iter().map(|p| p.0).collect(),
        processors,
    })
}
