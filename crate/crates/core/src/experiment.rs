//! Built-in experiment presets and replayable manifests.
//!
//! A preset samples (or fixes) an instance, runs the exact and numerical
//! checks for it and produces a canonical JSON report. The manifest records
//! the instance, the seed, the budgets and digests, so a replay can confirm
//! byte-identical output.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::io::{self, IoError, SCHEMA};
use crate::jnf::{ClassTuple, JordanForm, Mode, MultiplicityVector};
use crate::reduction::decide_generic;
use crate::spectra::{
    compute_gcd_data, is_relatively_generic, rat, sample_spectrum, GcdData, SampleOptions, SampleTarget, SpectraError,
    Spectrum,
};
use crate::witness::{
    build_block_diagonal_witness, search_tuple, verify_witness, ConcreteClass, Objective, SearchOptions, WitnessError,
    RANK_TOL,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    Witness(#[from] WitnessError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("manifest: {0}")]
    Manifest(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "theorem-caseA")]
    CaseA,
    #[serde(rename = "theorem-caseB")]
    CaseB,
    #[serde(rename = "theorem-caseC")]
    CaseC,
    #[serde(rename = "theorem-caseD")]
    CaseD,
    #[serde(rename = "positive-control")]
    PositiveControl,
    #[serde(rename = "twodifferentq")]
    TwoDifferentQ,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::CaseA,
        Preset::CaseB,
        Preset::CaseC,
        Preset::CaseD,
        Preset::PositiveControl,
        Preset::TwoDifferentQ,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::CaseA => "theorem-caseA",
            Preset::CaseB => "theorem-caseB",
            Preset::CaseC => "theorem-caseC",
            Preset::CaseD => "theorem-caseD",
            Preset::PositiveControl => "positive-control",
            Preset::TwoDifferentQ => "twodifferentq",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Preset::CaseA => "n=4, (2,2)^4, xi=1: every converged witness should be reducible",
            Preset::CaseB => "n=6, (2,2,2)^3, xi=1: every converged witness should be reducible",
            Preset::CaseC => "n=8, (2^4),(2^4),(4,4), xi=1: every converged witness should be reducible",
            Preset::CaseD => "n=12, (2^6),(4^3),(6,6), xi=1: every converged witness should be reducible",
            Preset::PositiveControl => "n=2, (1,1)^4, generic: an irreducible witness should exist",
            Preset::TwoDifferentQ => "n=12 Jordan classes vs. their corresponding diagonal classes: q, xi, l",
        }
    }

    /// Multiplicity vectors of the sampled instance.
    pub fn pmv(self) -> Vec<MultiplicityVector> {
        let raw: Vec<Vec<usize>> = match self {
            Preset::CaseA => vec![vec![2, 2]; 4],
            Preset::CaseB => vec![vec![2, 2, 2]; 3],
            Preset::CaseC => vec![vec![2; 4], vec![2; 4], vec![4, 4]],
            Preset::CaseD => vec![vec![2; 6], vec![4; 3], vec![6, 6]],
            Preset::PositiveControl => vec![vec![1, 1]; 4],
            Preset::TwoDifferentQ => vec![vec![6, 6], vec![4; 3], vec![2; 6]],
        };
        raw.into_iter().map(MultiplicityVector::new).collect()
    }

    pub fn target(self) -> SampleTarget {
        match self {
            Preset::PositiveControl => SampleTarget::generic(),
            // ξ = -1 for the deformed classes, ξ = 1 for the negative-evidence cases
            Preset::TwoDifferentQ => SampleTarget::relatively_generic(Some(rat(1, 2))),
            _ => SampleTarget::relatively_generic(Some(rat(0, 1))),
        }
    }

    pub fn default_restarts(self) -> usize {
        match self {
            Preset::CaseA => 200,
            Preset::PositiveControl => 50,
            Preset::TwoDifferentQ => 0,
            _ => 100,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| ExperimentError::UnknownPreset(s.into()))
    }
}

/// Budgets that influence the report; the thread count does not and is kept out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    pub restarts: usize,
    pub iterations: usize,
    pub tol: f64,
    pub objective: Objective,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    pub schema: String,
    pub command: String,
    pub preset: Preset,
    /// The instance document the run used.
    pub instance: Value,
    pub instance_sha256: String,
    pub seed: u64,
    pub budgets: Budgets,
    pub tool_version: String,
    pub report_sha256: String,
}

impl ExperimentManifest {
    pub fn load(text: &str) -> Result<Self, IoError> {
        io::parse(text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub restarts: Option<usize>,
    pub iterations: usize,
    pub tol: f64,
    pub objective: Objective,
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let s = SearchOptions::default();
        ExperimentConfig {
            seed: 0,
            restarts: None,
            iterations: s.iterations,
            tol: s.tol,
            objective: s.objective,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub manifest: ExperimentManifest,
    pub report: Value,
    /// Whether the preset's evidence criterion held.
    pub holds: bool,
    /// A numerical search produced no converged restart where one was needed.
    pub budget_exhausted: bool,
    pub summary: Vec<String>,
}

pub fn tool_version() -> String {
    format!("dsp {}", env!("CARGO_PKG_VERSION"))
}

fn two_different_q_classes() -> Vec<ConcreteClass> {
    let forms = [
        JordanForm::from_blocks(&[&[2; 6]]).expect("valid"),
        JordanForm::from_blocks(&[&[3; 4]]).expect("valid"),
        JordanForm::from_blocks(&[&[6, 6]]).expect("valid"),
    ];
    // i, 1, 1
    let angles = [rat(1, 4), rat(0, 1), rat(0, 1)];
    forms
        .into_iter()
        .zip(angles)
        .map(|(f, a)| {
            ConcreteClass::new(f, vec![crate::spectra::ExactEigen::new(Mode::Multiplicative, a)]).expect("valid")
        })
        .collect()
}

/// The instance document for `preset` under `seed`.
pub fn sample_instance(preset: Preset, seed: u64) -> Result<Value, ExperimentError> {
    if preset == Preset::TwoDifferentQ {
        return Ok(io::classes_document(&two_different_q_classes()));
    }
    let opts = SampleOptions {
        seed,
        ..SampleOptions::default()
    };
    let s = sample_spectrum(&preset.pmv(), Mode::Multiplicative, &preset.target(), opts)?;
    Ok(io::spectrum_document(&s))
}

/// Samples the instance and runs `preset`.
pub fn run_preset(preset: Preset, cfg: &ExperimentConfig) -> Result<Experiment, ExperimentError> {
    let instance = sample_instance(preset, cfg.seed)?;
    let budgets = Budgets {
        restarts: cfg.restarts.unwrap_or(preset.default_restarts()),
        iterations: cfg.iterations,
        tol: cfg.tol,
        objective: cfg.objective,
    };
    let mut command = format!("dsp experiment {} --seed {}", preset, cfg.seed);
    if let Some(r) = cfg.restarts {
        command.push_str(&format!(" --restarts {r}"));
    }
    run_on(preset, instance, cfg.seed, budgets, cfg.threads, command)
}

/// Reruns a manifest on its recorded instance.
pub fn replay(manifest: &ExperimentManifest, threads: Option<usize>) -> Result<Experiment, ExperimentError> {
    if manifest.schema != SCHEMA {
        return Err(ExperimentError::Manifest(format!(
            "unsupported schema {:?}",
            manifest.schema
        )));
    }
    if io::digest(&manifest.instance) != manifest.instance_sha256 {
        return Err(ExperimentError::Manifest("instance digest does not match".into()));
    }
    run_on(
        manifest.preset,
        manifest.instance.clone(),
        manifest.seed,
        manifest.budgets,
        threads,
        manifest.command.clone(),
    )
}

fn run_on(
    preset: Preset,
    instance: Value,
    seed: u64,
    budgets: Budgets,
    threads: Option<usize>,
    command: String,
) -> Result<Experiment, ExperimentError> {
    let opts = SearchOptions {
        seed,
        restarts: budgets.restarts,
        iterations: budgets.iterations,
        tol: budgets.tol,
        threads,
        objective: budgets.objective,
        ..SearchOptions::default()
    };
    let text = io::canonical(&instance);
    let (body, holds, budget_exhausted, summary) = match preset {
        Preset::TwoDifferentQ => two_different_q(&text, seed)?,
        Preset::PositiveControl => positive_control(&text, &opts)?,
        _ => negative_evidence(preset, &text, &opts)?,
    };
    let mut report = json!({
        "schema": SCHEMA,
        "preset": preset,
        "seed": seed,
        "instance": instance,
        "evidence_holds": holds,
    });
    if let (Value::Object(map), Value::Object(extra)) = (&mut report, body) {
        map.extend(extra);
    }
    let manifest = ExperimentManifest {
        schema: SCHEMA.into(),
        command,
        preset,
        instance_sha256: io::digest(&instance),
        instance,
        seed,
        budgets,
        tool_version: tool_version(),
        report_sha256: io::digest(&report),
    };
    Ok(Experiment {
        manifest,
        report,
        holds,
        budget_exhausted,
        summary,
    })
}

type Outcome = (Value, bool, bool, Vec<String>);

fn gcd_value(g: &GcdData) -> Value {
    serde_json::to_value(g).expect("serializes")
}

fn negative_evidence(preset: Preset, text: &str, opts: &SearchOptions) -> Result<Outcome, ExperimentError> {
    let s = io::load_spectrum(text)?;
    let gcd = compute_gcd_data(&s)?;
    let rel = is_relatively_generic(&s)?;
    let classes = ConcreteClass::from_spectrum(&s);
    let report = search_tuple(&classes, opts)?;
    let irreducible = report.irreducible_count();
    let converged = report.converged();
    let mut summary = vec![
        format!(
            "{preset}: n={} q={} xi={} relatively generic={}",
            s.n(),
            gcd.q,
            gcd.xi_angle,
            rel.relatively_generic
        ),
        format!(
            "restarts={} converged={} irreducible={} best residual={:.3e}",
            report.restarts, converged, irreducible, report.best_residual
        ),
    ];
    let mut body = json!({
        "gcd": gcd_value(&gcd),
        "relatively_generic": rel.relatively_generic,
        "search": io::search_report_document(&report),
    });
    let mut holds = irreducible == 0 && rel.relatively_generic;

    if preset == Preset::CaseA {
        // every converged witness: centralizer ≥ 2 and a 2-dimensional invariant subspace
        let conforming = report
            .witnesses
            .iter()
            .filter(|f| {
                f.diagnostics.centralizer_dim >= 2
                    && f.diagnostics.invariant_subspace.as_ref().map(|u| u.ncols()) == Some(2)
            })
            .count();
        let block_opts = SearchOptions {
            restarts: opts.restarts.clamp(1, 20),
            ..*opts
        };
        let block = build_block_diagonal_witness(&classes, 2, &block_opts);
        let block_ok = match &block {
            Ok(b) => verify_witness(&b.witness, &classes, RANK_TOL)
                .map(|d| d.max_class_residual() < 1e-8 && b.witness.residual < opts.tol)
                .unwrap_or(false),
            Err(_) => false,
        };
        summary.push(format!(
            "witnesses with centralizer >= 2 and a 2-dim invariant subspace: {conforming}/{converged}; block-diagonal witness: {}",
            if block_ok { "ok" } else { "failed" }
        ));
        if let Value::Object(map) = &mut body {
            map.insert("conforming_witnesses".into(), json!(conforming));
            map.insert(
                "block_witness".into(),
                match &block {
                    Ok(b) => io::block_witness_document(b),
                    Err(e) => json!({ "error": e.to_string() }),
                },
            );
        }
        holds = holds && conforming == converged && block_ok;
    }
    Ok((body, holds, false, summary))
}

fn positive_control(text: &str, opts: &SearchOptions) -> Result<Outcome, ExperimentError> {
    let s = io::load_spectrum(text)?;
    let classes = ConcreteClass::from_spectrum(&s);
    let report = search_tuple(&classes, opts)?;
    let good = report
        .witnesses
        .iter()
        .filter(|f| f.diagnostics.burnside_dim == s.n() * s.n() && f.diagnostics.centralizer_dim == 1)
        .count();
    let summary = vec![
        format!("positive-control: n={} generic quadruple", s.n()),
        format!(
            "restarts={} converged={} irreducible with trivial centralizer={good}",
            report.restarts,
            report.converged()
        ),
    ];
    let body = json!({
        "search": io::search_report_document(&report),
        "irreducible_trivial_centralizer": good,
    });
    Ok((body, good > 0, report.converged() == 0, summary))
}

fn two_different_q(text: &str, seed: u64) -> Result<Outcome, ExperimentError> {
    let classes = io::load_classes(text)?;
    let mode = classes[0].mode();
    let tuple = ClassTuple::new(mode, classes.iter().map(|c| c.jnf().clone()).collect())
        .map_err(|e| ExperimentError::Manifest(e.to_string()))?;
    let original = Spectrum::new(mode, classes.iter().map(|c| c.spectral_values()).collect())?;
    let g0 = compute_gcd_data(&original)?;
    let diagonal = tuple.to_corresponding_diagonal();
    let pmv = diagonal.pmv().expect("corresponding forms are diagonal");
    let opts = SampleOptions {
        seed,
        ..SampleOptions::default()
    };
    let deformed = sample_spectrum(&pmv, mode, &Preset::TwoDifferentQ.target(), opts)?;
    let g1 = compute_gcd_data(&deformed)?;
    let rel = is_relatively_generic(&deformed)?;
    let holds = (g0.q, g0.k, g0.l, g0.primitive) == (12, 3, 3, false)
        && (g1.q, g1.k, g1.primitive) == (2, 1, true)
        && rel.relatively_generic;
    let summary = vec![
        format!(
            "original: q={} xi={} l={} primitive={}",
            g0.q, g0.xi_angle, g0.l, g0.primitive
        ),
        format!(
            "corresponding diagonal {}: q={} xi={} primitive={} relatively generic={}",
            pmv.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(" "),
            g1.q,
            g1.xi_angle,
            g1.primitive,
            rel.relatively_generic
        ),
    ];
    let body = json!({
        "original_gcd": gcd_value(&g0),
        "kappa": tuple.rigidity_index(),
        "generic_verdict": decide_generic(&tuple).verdict,
        "corresponding_diagonal": io::class_tuple_document(&diagonal),
        "deformed": io::spectrum_document(&deformed),
        "deformed_gcd": gcd_value(&g1),
        "relatively_generic": rel.relatively_generic,
    });
    Ok((body, holds, false, summary))
}
