//! JSON documents for instances, witnesses and reports.
//!
//! Every document carries `"schema": "dsp/1"`. Input structs reject unknown
//! fields, and errors name the offending location as a JSON pointer. Output
//! goes through [`serde_json::Value`], whose maps are ordered, so
//! [`canonical`] produces sorted keys and byte-stable text.

use std::fmt::Write as _;

use num_rational::BigRational;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use serde_path_to_error::Segment;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::jnf::{ClassTuple, EigenSlot, JordanForm, Mode, Partition};
use crate::spectra::{format_rational, parse_rational, ExactEigen, SpectralValue, Spectrum};
use crate::witness::linalg::{c, CMatrix};
use crate::witness::{BlockWitness, ConcreteClass, DeformReport, Diagnostics, FoundWitness, SearchReport, Witness};

pub const SCHEMA: &str = "dsp/1";

#[derive(Debug, Error)]
pub enum IoError {
    /// `path` is a JSON pointer; empty for the document root.
    #[error("schema error at {}: {message}", if .path.is_empty() { "document root" } else { .path.as_str() })]
    Schema { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn schema_err(path: impl Into<String>, message: impl ToString) -> IoError {
    IoError::Schema {
        path: path.into(),
        message: message.to_string(),
    }
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => {
                let _ = write!(out, "/{index}");
            }
            Segment::Map { key } => {
                let _ = write!(out, "/{}", key.replace('~', "~0").replace('/', "~1"));
            }
            Segment::Enum { variant } => {
                let _ = write!(out, "/{variant}");
            }
            Segment::Unknown => out.push_str("/?"),
        }
    }
    out
}

/// Deserializes `text`, reporting failures with the JSON pointer of the bad value.
pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T, IoError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = pointer(e.path());
        schema_err(path, e.into_inner())
    })?;
    de.end().map_err(|e| schema_err("", e))?;
    Ok(value)
}

fn check_schema(schema: &str) -> Result<(), IoError> {
    if schema == SCHEMA {
        Ok(())
    } else {
        Err(schema_err(
            "/schema",
            format!("unsupported schema {schema:?}, expected {SCHEMA:?}"),
        ))
    }
}

/// Serializes `x` and stamps the schema version on top-level objects.
pub fn document<T: Serialize + ?Sized>(x: &T) -> Value {
    let mut v = serde_json::to_value(x).expect("in-memory values serialize");
    if let Value::Object(map) = &mut v {
        map.insert("schema".into(), Value::String(SCHEMA.into()));
    }
    v
}

/// Compact text with sorted keys.
pub fn canonical(v: &Value) -> String {
    v.to_string()
}

pub fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("values serialize")
}

/// Hex SHA-256 of the canonical text.
pub fn digest(v: &Value) -> String {
    hex::encode(Sha256::digest(canonical(v).as_bytes()))
}

// ---------------------------------------------------------------- Jordan forms

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SlotDoc {
    label: String,
    blocks: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FormDoc {
    n: Option<usize>,
    groups: Option<Vec<SlotDoc>>,
    /// Shorthand for a diagonal form with these multiplicities.
    mv: Option<Vec<usize>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassTupleDoc {
    schema: String,
    mode: Mode,
    n: Option<usize>,
    forms: Vec<FormDoc>,
}

fn form_from_doc(doc: FormDoc, at: &str) -> Result<JordanForm, IoError> {
    let form = match (doc.groups, doc.mv) {
        (Some(groups), None) => {
            let slots = groups
                .into_iter()
                .enumerate()
                .map(|(k, g)| {
                    Partition::new(g.blocks)
                        .map(|p| EigenSlot::new(g.label, p))
                        .map_err(|e| schema_err(format!("{at}/groups/{k}/blocks"), e))
                })
                .collect::<Result<Vec<_>, _>>()?;
            JordanForm::new(slots).map_err(|e| schema_err(format!("{at}/groups"), e))?
        }
        (None, Some(mv)) => JordanForm::diagonal(&mv).map_err(|e| schema_err(format!("{at}/mv"), e))?,
        _ => return Err(schema_err(at, "exactly one of `groups` and `mv` is required")),
    };
    match doc.n {
        Some(n) if n != form.n() => Err(schema_err(
            format!("{at}/n"),
            format!("declared size {n}, blocks add up to {}", form.n()),
        )),
        _ => Ok(form),
    }
}

pub fn load_class_tuple(text: &str) -> Result<ClassTuple, IoError> {
    let doc: ClassTupleDoc = parse(text)?;
    check_schema(&doc.schema)?;
    let forms = doc
        .forms
        .into_iter()
        .enumerate()
        .map(|(j, f)| form_from_doc(f, &format!("/forms/{j}")))
        .collect::<Result<Vec<_>, _>>()?;
    let tuple = ClassTuple::new(doc.mode, forms).map_err(|e| schema_err("/forms", e))?;
    match doc.n {
        Some(n) if n != tuple.n() => Err(schema_err(
            "/n",
            format!("declared size {n}, forms have size {}", tuple.n()),
        )),
        _ => Ok(tuple),
    }
}

pub fn class_tuple_document(t: &ClassTuple) -> Value {
    document(t)
}

// ----------------------------------------------------------------- spectra

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryDoc {
    angle: Option<String>,
    value: Option<String>,
    mult: Option<usize>,
    blocks: Option<Vec<usize>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpectrumDoc {
    schema: String,
    mode: Mode,
    forms: Vec<Vec<EntryDoc>>,
}

enum Shape {
    Mult(usize),
    Blocks(Partition),
}

fn entry_from_doc(mode: Mode, e: EntryDoc, at: &str) -> Result<(BigRational, Shape), IoError> {
    let (key, raw) = match (mode, e.angle, e.value) {
        (Mode::Multiplicative, Some(a), None) => ("angle", a),
        (Mode::Additive, None, Some(v)) => ("value", v),
        (Mode::Multiplicative, ..) => {
            return Err(schema_err(at, "multiplicative entries need `angle` (and no `value`)"))
        }
        (Mode::Additive, ..) => return Err(schema_err(at, "additive entries need `value` (and no `angle`)")),
    };
    let x = parse_rational(&raw)
        .ok_or_else(|| schema_err(format!("{at}/{key}"), format!("{raw:?} is not a rational \"p/q\"")))?;
    let shape = match (e.mult, e.blocks) {
        (Some(m), None) => Shape::Mult(m),
        (None, Some(b)) => Shape::Blocks(Partition::new(b).map_err(|err| schema_err(format!("{at}/blocks"), err))?),
        _ => return Err(schema_err(at, "exactly one of `mult` and `blocks` is required")),
    };
    Ok((x, shape))
}

/// Per form, each exact value with its multiplicity or block shape.
type Entries = Vec<Vec<(BigRational, Shape)>>;

fn load_entries(text: &str) -> Result<(Mode, Entries), IoError> {
    let doc: SpectrumDoc = parse(text)?;
    check_schema(&doc.schema)?;
    let mode = doc.mode;
    let forms = doc
        .forms
        .into_iter()
        .enumerate()
        .map(|(j, f)| {
            f.into_iter()
                .enumerate()
                .map(|(k, e)| entry_from_doc(mode, e, &format!("/forms/{j}/{k}")))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((mode, forms))
}

/// Loads a spectrum; entries may use `blocks` only when every block has size one.
pub fn load_spectrum(text: &str) -> Result<Spectrum, IoError> {
    let (mode, forms) = load_entries(text)?;
    let forms = forms
        .into_iter()
        .enumerate()
        .map(|(j, f)| {
            f.into_iter()
                .enumerate()
                .map(|(k, (x, shape))| match shape {
                    Shape::Mult(m) => Ok(SpectralValue::new(x, m)),
                    Shape::Blocks(p) if p.parts().iter().all(|&b| b == 1) => Ok(SpectralValue::new(x, p.weight())),
                    Shape::Blocks(_) => Err(schema_err(
                        format!("/forms/{j}/{k}/blocks"),
                        "a spectrum describes diagonal classes; Jordan blocks need a class document",
                    )),
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Spectrum::new(mode, forms).map_err(|e| schema_err("/forms", e))
}

/// Loads concrete classes: a spectrum whose entries may carry Jordan `blocks`.
pub fn load_classes(text: &str) -> Result<Vec<ConcreteClass>, IoError> {
    let (mode, forms) = load_entries(text)?;
    forms
        .into_iter()
        .enumerate()
        .map(|(j, f)| {
            let mut slots = Vec::with_capacity(f.len());
            let mut values = Vec::with_capacity(f.len());
            for (k, (x, shape)) in f.into_iter().enumerate() {
                let blocks = match shape {
                    Shape::Mult(m) => {
                        Partition::new(vec![1; m]).map_err(|e| schema_err(format!("/forms/{j}/{k}/mult"), e))?
                    }
                    Shape::Blocks(p) => p,
                };
                slots.push(EigenSlot::new(format!("e{k}"), blocks));
                values.push(ExactEigen::new(mode, x));
            }
            let at = format!("/forms/{j}");
            let jnf = JordanForm::new(slots).map_err(|e| schema_err(&at, e))?;
            ConcreteClass::new(jnf, values).map_err(|e| schema_err(&at, e))
        })
        .collect()
}

fn value_key(mode: Mode) -> &'static str {
    match mode {
        Mode::Additive => "value",
        Mode::Multiplicative => "angle",
    }
}

fn spectrum_forms(s: &Spectrum) -> Value {
    let key = value_key(s.mode());
    Value::Array(
        s.forms()
            .iter()
            .map(|f| {
                Value::Array(
                    f.iter()
                        .map(|sv| json!({ key: format_rational(&sv.value), "mult": sv.mult }))
                        .collect(),
                )
            })
            .collect(),
    )
}

pub fn spectrum_document(s: &Spectrum) -> Value {
    json!({ "schema": SCHEMA, "mode": s.mode(), "forms": spectrum_forms(s) })
}

fn classes_forms(classes: &[ConcreteClass]) -> Value {
    Value::Array(
        classes
            .iter()
            .map(|cl| {
                let key = value_key(cl.mode());
                Value::Array(
                    cl.jnf()
                        .groups()
                        .iter()
                        .zip(cl.values())
                        .map(|(slot, v)| {
                            let x = format_rational(v.rational());
                            if slot.blocks.parts().iter().all(|&b| b == 1) {
                                json!({ key: x, "mult": slot.multiplicity() })
                            } else {
                                json!({ key: x, "blocks": slot.blocks.parts() })
                            }
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

pub fn classes_document(classes: &[ConcreteClass]) -> Value {
    let mode = classes.first().map(ConcreteClass::mode).unwrap_or(Mode::Multiplicative);
    json!({ "schema": SCHEMA, "mode": mode, "forms": classes_forms(classes) })
}

// --------------------------------------------------------------- witnesses

type MatrixDoc = Vec<Vec<[f64; 2]>>;

fn matrix_doc(m: &CMatrix) -> MatrixDoc {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|col| [m[(r, col)].re, m[(r, col)].im]).collect())
        .collect()
}

fn matrix_from_doc(doc: &MatrixDoc, n: usize, at: &str) -> Result<CMatrix, IoError> {
    if doc.len() != n || doc.iter().any(|row| row.len() != n) {
        return Err(schema_err(at, format!("expected a {n}×{n} matrix")));
    }
    Ok(CMatrix::from_fn(n, n, |r, col| c(doc[r][col][0], doc[r][col][1])))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WitnessDoc {
    #[serde(default = "schema_tag")]
    schema: String,
    mode: Mode,
    n: usize,
    /// Informational; recomputed on load.
    #[serde(default)]
    residual: Option<f64>,
    matrices: Vec<MatrixDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    frames: Option<Vec<MatrixDoc>>,
}

fn schema_tag() -> String {
    SCHEMA.into()
}

fn witness_doc(w: &Witness) -> WitnessDoc {
    WitnessDoc {
        schema: SCHEMA.into(),
        mode: w.mode,
        n: w.n(),
        residual: Some(w.residual),
        matrices: w.matrices.iter().map(matrix_doc).collect(),
        frames: w.frames.as_ref().map(|fs| fs.iter().map(matrix_doc).collect()),
    }
}

pub fn witness_document(w: &Witness) -> Value {
    serde_json::to_value(witness_doc(w)).expect("witness serializes")
}

pub fn load_witness(text: &str) -> Result<Witness, IoError> {
    let doc: WitnessDoc = parse(text)?;
    check_schema(&doc.schema)?;
    if doc.matrices.is_empty() {
        return Err(schema_err("/matrices", "at least one matrix is required"));
    }
    let matrices = doc
        .matrices
        .iter()
        .enumerate()
        .map(|(j, m)| matrix_from_doc(m, doc.n, &format!("/matrices/{j}")))
        .collect::<Result<Vec<_>, _>>()?;
    let mut w = Witness::new(doc.mode, matrices);
    if let Some(frames) = &doc.frames {
        if frames.len() != w.matrices.len() {
            return Err(schema_err("/frames", "one frame per matrix is required"));
        }
        let frames = frames
            .iter()
            .enumerate()
            .map(|(j, m)| matrix_from_doc(m, doc.n, &format!("/frames/{j}")))
            .collect::<Result<Vec<_>, _>>()?;
        w = w.with_frames(frames);
    }
    Ok(w)
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn diagnostics_value(d: &Diagnostics) -> Value {
    json!({
        "n": d.n,
        "product_residual": finite(d.product_residual),
        "class_residuals": d.class_residuals.iter().map(|&r| finite(r)).collect::<Vec<_>>(),
        "max_class_residual": finite(d.max_class_residual()),
        "burnside_dim": d.burnside_dim,
        "centralizer_dim": d.centralizer_dim,
        "irreducible": d.irreducible(),
        "invariant_subspace_dim": d.invariant_subspace.as_ref().map(|u| u.ncols()),
        "invariant_subspace": d.invariant_subspace.as_ref().map(|u| {
            (0..u.nrows())
                .map(|r| (0..u.ncols()).map(|col| [u[(r, col)].re, u[(r, col)].im]).collect::<Vec<_>>())
                .collect::<Vec<_>>()
        }),
    })
}

pub fn diagnostics_document(d: &Diagnostics) -> Value {
    document(&diagnostics_value(d))
}

fn found_value(f: &FoundWitness) -> Value {
    let mut w = witness_document(&f.witness);
    if let Value::Object(map) = &mut w {
        map.remove("schema");
    }
    json!({ "restart": f.restart, "witness": w, "diagnostics": diagnostics_value(&f.diagnostics) })
}

/// Search report without wall-clock time, so that reruns are byte-identical.
pub fn search_report_document(r: &SearchReport) -> Value {
    let outcomes: Vec<Value> = r
        .outcomes
        .iter()
        .map(|o| {
            json!({
                "index": o.index,
                "converged": o.converged,
                "iterations": o.iterations,
                "objective_residual": finite(o.objective_residual),
                "irreducible": o.irreducible,
                "centralizer_dim": o.centralizer_dim,
            })
        })
        .collect();
    json!({
        "schema": SCHEMA,
        "mode": r.mode,
        "n": r.n,
        "seed": r.seed,
        "restarts": r.restarts,
        "iterations": r.iterations,
        "tol": r.tol,
        "objective": r.objective,
        "outcomes": outcomes,
        "histogram": r.histogram(),
        "converged": r.converged(),
        "irreducible": r.irreducible_count(),
        "best_residual": finite(r.best_residual),
        "witnesses": r.witnesses.iter().map(found_value).collect::<Vec<_>>(),
    })
}

pub fn deform_report_document(r: &DeformReport) -> Value {
    let mut w = witness_document(&r.witness);
    if let Value::Object(map) = &mut w {
        map.remove("schema");
    }
    json!({
        "schema": SCHEMA,
        "witness": w,
        "classes": classes_forms(&r.classes),
        "step_residuals": r.step_residuals,
        "newton_iterations": r.newton_iterations,
        "centralizer_dim": r.centralizer_dim,
    })
}

pub fn block_witness_document(b: &BlockWitness) -> Value {
    let mut w = witness_document(&b.witness);
    if let Value::Object(map) = &mut w {
        map.remove("schema");
    }
    json!({
        "schema": SCHEMA,
        "witness": w,
        "blocks": b.blocks.iter().map(spectrum_forms).collect::<Vec<_>>(),
    })
}

/// Merges `extra` keys into an object document.
pub fn with_fields(mut doc: Value, extra: Map<String, Value>) -> Value {
    if let Value::Object(map) = &mut doc {
        map.extend(extra);
    }
    doc
}
