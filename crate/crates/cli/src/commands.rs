use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use qpost_core::linalg::frobenius_distance;
use qpost_core::{
    compose_post_processing, detailed_instrument, identity_class_certificate, is_extreme, is_indecomposable_instrument,
    is_indecomposable_povm, is_isometric_channel, is_measure_and_prepare, is_post_processing_clean,
    is_simulation_irreducible, is_trash_and_prepare, is_trivial, luders, minimal_sufficient, povm_equivalent,
    random_identity_class, random_instrument, random_measure_and_prepare, random_povm, random_rank_one_povm,
    random_state, simulate, witness_detailed_to_original, witness_identity_reversal,
    witness_indecomposable_equivalence, witness_map_post_processing, witness_original_to_detailed,
    witness_to_trash_and_prepare, ComplexMatrix, Instrument, InstrumentWitness, Povm, Seed, State, Tolerance,
    ValidationReport,
};
use serde_json::{json, Map, Value};

use crate::document::{self, matrix_value, number, Document, DocumentError, Report};

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    False = 1,
    Usage = 2,
    Undecidable = 3,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error(transparent)]
    Core(#[from] qpost_core::Error),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Parser)]
#[command(
    name = "qpost",
    version,
    about = "Post-processing order on quantum instruments and POVMs"
)]
pub struct Cli {
    /// Absolute Frobenius threshold for operator equality.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol_eq: f64,
    /// Relative singular-value cutoff for numerical rank.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol_rank: f64,
    /// Also write the resulting document to this path.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Print the resulting document as JSON instead of a table.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the defining invariants of a document.
    Validate { file: PathBuf },
    /// Run every classifier and emit the certificates found.
    Classify { file: PathBuf },
    /// Induced POVM of an instrument.
    InducedPovm { file: PathBuf },
    /// Detailed refinement of an instrument.
    Detail { file: PathBuf },
    /// Lüders instrument of a POVM.
    Luders { file: PathBuf },
    /// Apply the processors of a witness document to an instrument.
    Compose {
        file: PathBuf,
        #[arg(long)]
        processors: PathBuf,
    },
    /// Decide post-processing equivalence where an implemented method applies.
    Equiv {
        a: PathBuf,
        b: PathBuf,
        /// Save the a → b witness here when one is found.
        #[arg(long)]
        witness_out: Option<PathBuf>,
    },
    /// Build one of the structural witnesses for an instrument.
    Witness {
        kind: WitnessKind,
        file: PathBuf,
        /// Trash-and-prepare target, for `trash-and-prepare`.
        #[arg(long)]
        target: Option<PathBuf>,
    },
    /// Run a simulation program.
    Simulate { file: PathBuf },
    /// Seeded random document.
    Random {
        kind: RandomKind,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 2)]
        outcomes: usize,
        #[arg(long)]
        seed: u64,
        /// Output dimension of instruments; defaults to `--dim`.
        #[arg(long)]
        dim_out: Option<usize>,
        /// Kraus operators per outcome (isometries per outcome for `identity-class`).
        #[arg(long, default_value_t = 2)]
        kraus: usize,
        #[arg(long, value_enum, default_value_t = Family::General)]
        family: Family,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WitnessKind {
    DetailedToOriginal,
    OriginalToDetailed,
    IdentityReversal,
    TrashAndPrepare,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RandomKind {
    Povm,
    Instrument,
    State,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    General,
    RankOne,
    IdentityClass,
    MeasureAndPrepare,
    Luders,
}

pub struct Outcome {
    pub doc: Document,
    pub exit: Exit,
    /// Extra lines for stderr.
    pub notes: Vec<String>,
}

impl Outcome {
    fn ok(doc: Document) -> Self {
        Self {
            doc,
            exit: Exit::Ok,
            notes: Vec::new(),
        }
    }
}

/// Parses arguments, runs the command, prints, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(out) => {
            for note in &out.notes {
                eprintln!("{note}");
            }
            if let Some(path) = &cli.output {
                if let Err(e) = document::save(&out.doc, path) {
                    eprintln!("error: {e}");
                    return Exit::Usage as i32;
                }
            }
            if cli.json {
                println!("{}", out.doc.to_json());
            } else {
                print!("{}", render(&out.doc));
            }
            out.exit as i32
        }
        Err(e) => {
            eprintln!("error: {e}");
            Exit::Usage as i32
        }
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let tol = Tolerance::new(cli.tol_eq, cli.tol_rank)?;
    let report = |command: &str, result: Value| {
        Document::Report(Report {
            command: command.into(),
            tolerance: tol,
            result,
        })
    };
    match &cli.command {
        Command::Validate { file } => {
            let lines = validate(&document::load(file)?, tol);
            let valid = lines.is_empty();
            Ok(Outcome {
                doc: report("validate", json!({ "valid": valid, "violations": lines })),
                exit: if valid { Exit::Ok } else { Exit::False },
                notes: Vec::new(),
            })
        }
        Command::Classify { file } => {
            let result = match document::load(file)? {
                Document::Instrument(i) => classify_instrument(&i, tol),
                Document::Povm(a) => classify_povm(&a, tol),
                other => return Err(wrong_kind(file, &other, "a POVM or instrument")),
            };
            Ok(Outcome::ok(report("classify", result)))
        }
        Command::InducedPovm { file } => Ok(Outcome::ok(Document::Povm(load_instrument(file)?.induced_povm()))),
        Command::Detail { file } => Ok(Outcome::ok(Document::Instrument(detailed_instrument(
            &load_instrument(file)?,
            tol,
        )))),
        Command::Luders { file } => Ok(Outcome::ok(Document::Instrument(luders(&load_povm(file)?)))),
        Command::Compose { file, processors } => {
            let i = load_instrument(file)?;
            let w = match document::load(processors)? {
                Document::Witness(w) => w,
                other => return Err(wrong_kind(processors, &other, "a witness")),
            };
            let j = compose_post_processing(&i, &w.processors)?;
            let mut out = Outcome::ok(Document::Instrument(j.clone()));
            if let Some(target) = &w.target {
                let d = target_distance(&j, target);
                out.notes.push(format!("distance to declared target: {d:.3e}"));
                if d > tol.eq_abs {
                    out.exit = Exit::False;
                }
            }
            Ok(out)
        }
        Command::Equiv { a, b, witness_out } => {
            let (result, exit, forward) = equiv(document::load(a)?, document::load(b)?, tol)?;
            if let (Some(path), Some(w)) = (witness_out, forward) {
                document::save(&Document::Witness(w.into()), path)?;
            }
            Ok(Outcome {
                doc: report("equiv", result),
                exit,
                notes: Vec::new(),
            })
        }
        Command::Witness { kind, file, target } => {
            let i = load_instrument(file)?;
            let w = match kind {
                WitnessKind::DetailedToOriginal => Some(witness_detailed_to_original(&i, tol)),
                WitnessKind::OriginalToDetailed => witness_original_to_detailed(&i, tol),
                WitnessKind::IdentityReversal => match identity_class_certificate(&i, tol) {
                    Some(cert) => Some(witness_identity_reversal(&i, &cert, tol)?),
                    None => None,
                },
                WitnessKind::TrashAndPrepare => {
                    let path = target
                        .as_ref()
                        .ok_or_else(|| CliError::Usage("trash-and-prepare needs --target".into()))?;
                    let t = load_instrument(path)?;
                    let cert = is_trash_and_prepare(&t, tol).ok_or_else(|| {
                        CliError::Usage(format!("{} is not a trash-and-prepare instrument", path.display()))
                    })?;
                    Some(witness_to_trash_and_prepare(
                        &i,
                        &cert.probabilities,
                        &cert.states,
                        tol,
                    )?)
                }
            };
            Ok(match w {
                Some(w) => Outcome::ok(Document::Witness(w.into())),
                None => Outcome {
                    doc: report("witness", json!({ "exists": false })),
                    exit: Exit::False,
                    notes: Vec::new(),
                },
            })
        }
        Command::Simulate { file } => match document::load(file)? {
            Document::Program(p) => Ok(Outcome::ok(Document::Instrument(simulate(&p)?))),
            other => Err(wrong_kind(file, &other, "a program")),
        },
        Command::Random {
            kind,
            dim,
            outcomes,
            seed,
            dim_out,
            kraus,
            family,
        } => Ok(Outcome::ok(random_document(
            *kind,
            *dim,
            *outcomes,
            Seed(*seed),
            dim_out.unwrap_or(*dim),
            *kraus,
            *family,
        )?)),
    }
}

fn wrong_kind(path: &Path, doc: &Document, expected: &str) -> CliError {
    CliError::Usage(format!(
        "{}: expected {expected} document, found {}",
        path.display(),
        doc.kind()
    ))
}

fn load_instrument(path: &Path) -> Result<Instrument, CliError> {
    match document::load(path)? {
        Document::Instrument(i) => Ok(i),
        other => Err(wrong_kind(path, &other, "an instrument")),
    }
}

fn load_povm(path: &Path) -> Result<Povm, CliError> {
    match document::load(path)? {
        Document::Povm(a) => Ok(a),
        other => Err(wrong_kind(path, &other, "a POVM")),
    }
}

fn lines(report: &ValidationReport, prefix: &str) -> Vec<String> {
    report.violations.iter().map(|v| format!("{prefix}{v}")).collect()
}

fn validate(doc: &Document, tol: Tolerance) -> Vec<String> {
    match doc {
        Document::Povm(a) => lines(&a.validate(tol), ""),
        Document::Instrument(i) => lines(&i.validate(tol), ""),
        Document::State(m) => match State::new(m.clone(), tol) {
            Ok(_) => Vec::new(),
            Err(e) => vec![e.to_string()],
        },
        Document::Witness(w) => w
            .processors
            .iter()
            .flat_map(|(x, r)| lines(&r.validate(tol), &format!("processor `{x}`: ")))
            .collect(),
        Document::Program(p) => {
            let mut out = Vec::new();
            for (i, c) in p.components.iter().enumerate() {
                out.extend(lines(&c.validate(tol), &format!("component {i}: ")));
            }
            for ((i, x), r) in &p.processors {
                out.extend(lines(&r.validate(tol), &format!("processor ({i}, {x}): ")));
            }
            if p.probs.iter().any(|&q| q < 0.0) || (p.probs.iter().sum::<f64>() - 1.0).abs() > tol.eq_abs {
                out.push(format!("probabilities {:?} are not a distribution", p.probs));
            }
            out
        }
        Document::Report(_) => Vec::new(),
    }
}

fn states_value(states: &[State]) -> Value {
    states.iter().map(|s| matrix_value(s.matrix())).collect()
}

fn numbers(xs: &[f64]) -> Value {
    xs.iter().map(|&x| number(x)).collect()
}

fn classify_instrument(i: &Instrument, tol: Tolerance) -> Value {
    let tp = is_trash_and_prepare(i, tol);
    let mp = is_measure_and_prepare(i, tol);
    let ic = identity_class_certificate(i, tol);
    json!({
        "indecomposable": is_indecomposable_instrument(i, tol),
        "trash_and_prepare": tp.is_some(),
        "measure_and_prepare": mp.is_some(),
        "identity_class": ic.is_some(),
        "extreme": is_extreme(i, tol),
        "post_processing_clean": is_post_processing_clean(i, tol),
        "simulation_irreducible": is_simulation_irreducible(i, tol),
        "isometric_channel": is_isometric_channel(i, tol),
        "certificates": {
            "trash_and_prepare": tp.map(|c| json!({
                "probabilities": numbers(&c.probabilities),
                "states": states_value(&c.states),
            })),
            "measure_and_prepare": mp.map(|c| json!({
                "povm": Document::Povm(c.povm).to_value(),
                "states": states_value(&c.states),
            })),
            "identity_class": ic.map(|c| c.outcomes.iter().map(|(label, terms)| json!({
                "label": label,
                "terms": terms.iter().map(|(p, v)| json!({
                    "weight": number(*p),
                    "isometry": matrix_value(v),
                })).collect::<Vec<_>>(),
            })).collect::<Vec<_>>()),
        },
    })
}

fn classify_povm(a: &Povm, tol: Tolerance) -> Value {
    let trivial = is_trivial(a, tol);
    let (min, grouping) = minimal_sufficient(a, tol);
    json!({
        "trivial": trivial.is_some(),
        "indecomposable": is_indecomposable_povm(a, tol),
        "minimally_sufficient": grouping.is_identity(),
        "minimal_outcomes": min.len(),
        "certificates": {
            "trivial": trivial.map(|p| numbers(&p)),
        },
    })
}

fn stochastic_value(m: &qpost_core::StochasticMatrix) -> Value {
    let e = m.entries();
    json!({
        "rows": m.row_labels(),
        "cols": m.col_labels(),
        "entries": (0..e.nrows()).map(|r| numbers(&e.row(r).iter().copied().collect::<Vec<_>>())).collect::<Vec<_>>(),
    })
}

fn verdict(equivalent: bool) -> &'static str {
    if equivalent {
        "equivalent"
    } else {
        "not equivalent"
    }
}

type EquivResult = (Value, Exit, Option<InstrumentWitness>);

fn equiv(a: Document, b: Document, tol: Tolerance) -> Result<EquivResult, CliError> {
    match (a, b) {
        (Document::Povm(a), Document::Povm(b)) => {
            let eq = povm_equivalent(&a, &b, tol)?;
            let mut result =
                json!({ "method": "povm_equivalent", "equivalent": eq.is_some(), "verdict": verdict(eq.is_some()) });
            if let Some(eq) = &eq {
                result["nu"] = stochastic_value(&eq.nu);
                result["mu"] = stochastic_value(&eq.mu);
            }
            let exit = if eq.is_some() { Exit::Ok } else { Exit::False };
            Ok((result, exit, None))
        }
        (Document::Instrument(i), Document::Instrument(j)) => {
            if i.dim_in() != j.dim_in() {
                return Err(CliError::Usage(format!(
                    "instruments act on dimensions {} and {}",
                    i.dim_in(),
                    j.dim_in()
                )));
            }
            if is_indecomposable_instrument(&i, tol) && is_indecomposable_instrument(&j, tol) {
                let eq = witness_indecomposable_equivalence(&i, &j, tol)?;
                let mut result = json!({
                    "method": "witness_indecomposable_equivalence",
                    "equivalent": eq.is_some(),
                    "verdict": verdict(eq.is_some()),
                });
                let exit = if eq.is_some() { Exit::Ok } else { Exit::False };
                let forward = eq.map(|eq| {
                    result["constants"] = eq
                        .constants
                        .iter()
                        .map(|(x, y, c)| json!({ "x": x, "y": y, "c": number(*c) }))
                        .collect();
                    result["forward"] = document::witness_value(&eq.forward.clone().into());
                    result["backward"] = document::witness_value(&eq.backward.into());
                    eq.forward
                });
                return Ok((result, exit, forward));
            }
            if is_measure_and_prepare(&i, tol).is_some() && is_measure_and_prepare(&j, tol).is_some() {
                let forward = witness_map_post_processing(&i, &j, tol)?;
                let backward = witness_map_post_processing(&j, &i, tol)?;
                let equivalent = forward.is_some() && backward.is_some();
                let mut result = json!({
                    "method": "witness_map_post_processing",
                    "equivalent": equivalent,
                    "verdict": verdict(equivalent),
                    "a_to_b": forward.is_some(),
                    "b_to_a": backward.is_some(),
                });
                if let Some(w) = &forward {
                    result["forward"] = document::witness_value(&w.clone().into());
                }
                if let Some(w) = backward {
                    result["backward"] = document::witness_value(&w.into());
                }
                let exit = if equivalent { Exit::Ok } else { Exit::False };
                return Ok((result, exit, forward));
            }
            let result = json!({
                "method": null,
                "verdict": "undecidable by implemented methods",
            });
            Ok((result, Exit::Undecidable, None))
        }
        (a, b) => Err(CliError::Usage(format!(
            "equiv compares two POVMs or two instruments, got {} and {}",
            a.kind(),
            b.kind()
        ))),
    }
}

fn target_distance(j: &Instrument, target: &[(String, ComplexMatrix)]) -> f64 {
    if j.len() != target.len() {
        return f64::INFINITY;
    }
    target
        .iter()
        .map(|(label, choi)| match j.operation(label) {
            Some(op) if op.choi().shape() == choi.shape() => frobenius_distance(op.choi(), choi),
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

fn random_document(
    kind: RandomKind,
    dim: usize,
    n: usize,
    seed: Seed,
    dim_out: usize,
    kraus: usize,
    family: Family,
) -> Result<Document, CliError> {
    let unsupported = |what: &str| CliError::Usage(format!("family {family:?} does not apply to {what}"));
    Ok(match kind {
        RandomKind::State => Document::State(random_state(dim, seed)?.matrix().clone()),
        RandomKind::Povm => Document::Povm(match family {
            Family::General => random_povm(n, dim, seed)?,
            Family::RankOne => random_rank_one_povm(n, dim, seed)?,
            _ => return Err(unsupported("POVMs")),
        }),
        RandomKind::Instrument => Document::Instrument(match family {
            Family::General => random_instrument(n, dim, dim_out, kraus, seed)?,
            Family::IdentityClass => random_identity_class(n, dim, dim_out, kraus, seed)?,
            Family::MeasureAndPrepare => random_measure_and_prepare(n, dim, dim_out, seed)?,
            Family::Luders => luders(&random_povm(n, dim, seed)?),
            Family::RankOne => luders(&random_rank_one_povm(n, dim, seed)?),
        }),
    })
}

fn fmt_matrix(out: &mut String, m: &ComplexMatrix, indent: &str) {
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|c| {
                let z = m[(r, c)];
                format!("{:>8.4}{:+.4}i", z.re, z.im)
            })
            .collect();
        let _ = writeln!(out, "{indent}[ {} ]", row.join("  "));
    }
}

fn fmt_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Human-readable rendering of a document.
pub fn render(doc: &Document) -> String {
    let mut out = String::new();
    match doc {
        Document::Povm(a) => {
            let _ = writeln!(out, "POVM, dimension {}, {} outcomes", a.dim(), a.len());
            for (label, e) in a.outcomes() {
                let _ = writeln!(out, "{label}  (trace {:.6})", e.trace().re);
                fmt_matrix(&mut out, e, "  ");
            }
        }
        Document::Instrument(i) => {
            let _ = writeln!(
                out,
                "instrument, {} -> {}, {} outcomes",
                i.dim_in(),
                i.dim_out(),
                i.len()
            );
            for (label, op) in i.outcomes() {
                let _ = writeln!(out, "{label}  ({} Kraus operators)", op.kraus().len());
                for k in op.kraus() {
                    fmt_matrix(&mut out, k, "  ");
                    out.push('\n');
                }
            }
        }
        Document::State(m) => {
            let _ = writeln!(out, "state, dimension {}", m.nrows());
            fmt_matrix(&mut out, m, "  ");
        }
        Document::Witness(w) => {
            let _ = writeln!(out, "witness, {} processors", w.processors.len());
            for (x, r) in &w.processors {
                let _ = writeln!(
                    out,
                    "{x:>8} -> {} -> {}, outcomes {:?}",
                    r.dim_in(),
                    r.dim_out(),
                    r.labels()
                );
            }
            if let Some(t) = &w.target {
                let labels: Vec<&str> = t.iter().map(|(l, _)| l.as_str()).collect();
                let _ = writeln!(out, "target outcomes {labels:?}");
            }
        }
        Document::Program(p) => {
            let _ = writeln!(out, "simulation program, {} components", p.components.len());
            for (i, (c, q)) in p.components.iter().zip(&p.probs).enumerate() {
                let _ = writeln!(
                    out,
                    "{i:>4}  p = {q:.6}  {} -> {}, {} outcomes",
                    c.dim_in(),
                    c.dim_out(),
                    c.len()
                );
            }
        }
        Document::Report(r) => {
            let _ = writeln!(
                out,
                "{}  (eq_abs {:e}, rank_rel {:e})",
                r.command, r.tolerance.eq_abs, r.tolerance.rank_rel
            );
            match &r.result {
                Value::Object(fields) => write_fields(&mut out, fields),
                other => {
                    let _ = writeln!(out, "{}", fmt_value(other));
                }
            }
        }
    }
    out
}

fn write_fields(out: &mut String, fields: &Map<String, Value>) {
    let width = fields.keys().map(String::len).max().unwrap_or(0);
    for (k, v) in fields {
        let shown = match v {
            Value::Object(_) | Value::Array(_) if v.to_string().len() > 60 => "(see --json)".to_owned(),
            _ => fmt_value(v),
        };
        let _ = writeln!(out, "  {k:<width$}  {shown}");
    }
}
