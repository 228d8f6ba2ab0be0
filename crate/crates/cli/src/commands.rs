use std::fmt::{self, Write as _};
use std::io::Read;
use std::path::Path;

use serde_json::{json, Map, Value};

use dsp_core::experiment::{self, ExperimentConfig, ExperimentError, ExperimentManifest, Preset};
use dsp_core::io::{self, IoError, SCHEMA};
use dsp_core::jnf::{ClassTuple, Mode, MultiplicityVector};
use dsp_core::reduction::{classify_kappa0_stop, decide_generic, psi_step, ReductionError, StopTag};
use dsp_core::spectra::{
    compute_gcd_data, is_generic, is_relatively_generic, parse_rational, sample_spectrum, Relation, SampleOptions,
    SampleTarget, SpectraError, Spectrum,
};
use dsp_core::witness::{
    deform_tuple, search_tuple, verify_witness, DeformOptions, Objective, SearchOptions, WitnessError,
};

use crate::{Cli, Command, ModeArg, ObjectiveArg, TargetArg, EXIT_BUDGET, EXIT_NEGATIVE, EXIT_OK, EXIT_USAGE};

pub struct Output {
    pub doc: Value,
    pub text: String,
    pub code: u8,
}

#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn code(&self) -> u8 {
        self.code
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::usage(e.to_string())
    }
}

impl From<WitnessError> for CliError {
    fn from(e: WitnessError) -> Self {
        let code = match e {
            WitnessError::NoConvergence { .. } | WitnessError::ContinuationStuck { .. } => EXIT_BUDGET,
            WitnessError::CentralizerNontrivial(_) | WitnessError::NotHomotopic(_) => EXIT_NEGATIVE,
            _ => EXIT_USAGE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<SpectraError> for CliError {
    fn from(e: SpectraError) -> Self {
        let code = match e {
            SpectraError::BudgetExceeded { .. } | SpectraError::SamplingExhausted(_) => EXIT_BUDGET,
            _ => EXIT_USAGE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Spectra(e) => e.into(),
            ExperimentError::Witness(e) => e.into(),
            ExperimentError::Io(e) => e.into(),
            other => CliError::usage(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    let mut text = String::new();
    let res = if path.as_os_str() == "-" {
        std::io::stdin().read_to_string(&mut text).map(|_| ())
    } else {
        std::fs::read_to_string(path).map(|t| text = t)
    };
    res.map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    Ok(text)
}

fn write(path: &Path, doc: &Value) -> Result<(), CliError> {
    std::fs::write(path, io::pretty(doc) + "\n").map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

/// Left-aligned two-column table.
fn table(rows: &[(&str, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter().fold(String::new(), |mut out, (k, v)| {
        let _ = writeln!(out, "{k:<width$}  {v}");
        out
    })
}

fn seed(cli: &Cli) -> u64 {
    cli.budget.seed.unwrap_or(0)
}

pub fn run(cli: &Cli) -> Result<Output, CliError> {
    match &cli.command {
        Command::Decide { tuple } => decide(&io::load_class_tuple(&read(tuple)?)?),
        Command::Reduce { tuple, steps } => reduce(&io::load_class_tuple(&read(tuple)?)?, *steps),
        Command::Classify { tuple } => classify(&io::load_class_tuple(&read(tuple)?)?),
        Command::Genericity { spectrum, relative } => genericity(&io::load_spectrum(&read(spectrum)?)?, *relative),
        Command::GcdData { spectrum } => gcd_data(&io::load_spectrum(&read(spectrum)?)?),
        Command::Sample {
            mv,
            mode,
            target,
            xi,
            denominator_bound,
        } => sample(cli, mv, *mode, *target, xi.as_deref(), *denominator_bound),
        Command::Search {
            classes,
            iterations,
            objective,
            witness_out,
        } => search(cli, classes, *iterations, *objective, witness_out.as_deref()),
        Command::Deform {
            witness,
            source,
            target,
            steps,
            witness_out,
        } => deform(cli, witness, source, target, *steps, witness_out.as_deref()),
        Command::Verify { witness, classes } => verify(cli, witness, classes),
        Command::Experiment {
            preset,
            list,
            replay,
            iterations,
            manifest_out,
            report_out,
        } => {
            if *list {
                return Ok(list_presets());
            }
            let ex = match (preset, replay) {
                (Some(name), None) => {
                    let preset: Preset = name.parse()?;
                    let defaults = ExperimentConfig::default();
                    let cfg = ExperimentConfig {
                        seed: seed(cli),
                        restarts: cli.budget.restarts,
                        iterations: *iterations,
                        tol: cli.budget.tol.unwrap_or(defaults.tol),
                        threads: cli.budget.threads,
                        ..defaults
                    };
                    experiment::run_preset(preset, &cfg)?
                }
                (None, Some(path)) => {
                    let manifest = ExperimentManifest::load(&read(path)?)?;
                    let again = experiment::replay(&manifest, cli.budget.threads)?;
                    if again.manifest.report_sha256 != manifest.report_sha256 {
                        return Err(CliError {
                            code: EXIT_NEGATIVE,
                            message: format!(
                                "replay produced report {} but the manifest records {}",
                                again.manifest.report_sha256, manifest.report_sha256
                            ),
                        });
                    }
                    again
                }
                _ => return Err(CliError::usage("give a preset name, --list or --replay <manifest>")),
            };
            if let Some(p) = manifest_out {
                write(p, &serde_json::to_value(&ex.manifest).expect("manifest serializes"))?;
            }
            if let Some(p) = report_out {
                write(p, &ex.report)?;
            }
            let code = if ex.budget_exhausted {
                EXIT_BUDGET
            } else if ex.holds {
                EXIT_OK
            } else {
                EXIT_NEGATIVE
            };
            let mut text = ex.summary.join("\n");
            let _ = writeln!(
                text,
                "\nevidence: {}\nreport sha256: {}",
                if ex.holds { "holds" } else { "does not hold" },
                ex.manifest.report_sha256
            );
            Ok(Output {
                doc: ex.report,
                text,
                code,
            })
        }
    }
}

fn list_presets() -> Output {
    let rows: Vec<(&str, String)> = Preset::ALL
        .iter()
        .map(|p| {
            (
                p.name(),
                format!("{} (default restarts {})", p.description(), p.default_restarts()),
            )
        })
        .collect();
    Output {
        doc: json!({
            "schema": SCHEMA,
            "presets": Preset::ALL.iter().map(|p| json!({ "name": p.name(), "description": p.description() })).collect::<Vec<_>>(),
        }),
        text: table(&rows),
        code: EXIT_OK,
    }
}

fn mvs(t: &ClassTuple) -> String {
    t.forms().iter().map(|f| f.to_string()).collect::<Vec<_>>().join("  ")
}

fn decide(t: &ClassTuple) -> Result<Output, CliError> {
    let trace = decide_generic(t);
    let class = classify_kappa0_stop(t).ok();
    let mut rows = vec![
        ("mode", t.mode().to_string()),
        ("n", t.n().to_string()),
        ("kappa", trace.kappa.to_string()),
        ("verdict", json_word(&trace.verdict)),
        ("stop", json_word(&trace.stop)),
        ("steps", trace.steps.len().to_string()),
        ("final n", trace.final_n.to_string()),
    ];
    if let Some(f) = trace.failed_condition {
        rows.push((
            "failed",
            format!("{} at step {}", json_word(&f), trace.failed_at_step.unwrap_or(0)),
        ));
    }
    if let Some(c) = &class {
        rows.push(("class", tag_text(c.tag, c.d)));
    }
    let mut text = table(&rows);
    for (i, s) in trace.steps.iter().enumerate() {
        let _ = writeln!(
            text,
            "step {}: n {} -> {}  {}",
            i + 1,
            s.input.n(),
            s.n1,
            mvs(&s.output)
        );
    }
    let doc = json!({
        "schema": SCHEMA,
        "trace": trace,
        "classification": class.as_ref().map(|c| json!({ "tag": c.tag, "d": c.d })),
    });
    let code = if trace.is_solvable() { EXIT_OK } else { EXIT_NEGATIVE };
    Ok(Output { doc, text, code })
}

/// The serde name of a unit enum value.
fn json_word<T: serde::Serialize + ?Sized>(x: &T) -> String {
    match io::document(x) {
        Value::String(s) => s,
        v => v.to_string(),
    }
}

fn tag_text(tag: StopTag, d: usize) -> String {
    match tag {
        StopTag::None => "none".into(),
        t => format!("{} (d={d})", json_word(&t)),
    }
}

fn reduce(t: &ClassTuple, steps: usize) -> Result<Output, CliError> {
    let mut current = t.clone();
    let mut done = Vec::new();
    let mut stopped: Option<ReductionError> = None;
    for _ in 0..steps {
        match psi_step(&current) {
            Ok(step) => {
                current = step.output.clone();
                done.push(step);
            }
            Err(e) => {
                stopped = Some(e);
                break;
            }
        }
    }
    if done.is_empty() {
        let e = stopped.expect("at least one step was attempted");
        return Ok(Output {
            doc: json!({ "schema": SCHEMA, "steps": [], "stopped": e.to_string() }),
            text: format!("reduction not applicable: {e}\n"),
            code: EXIT_NEGATIVE,
        });
    }
    let mut text = String::new();
    for (i, s) in done.iter().enumerate() {
        let _ = writeln!(
            text,
            "step {}: n {} -> {}  slots {:?}  scalar forms {:?}\n  {}",
            i + 1,
            s.input.n(),
            s.n1,
            s.chosen_slots,
            s.scalar_forms,
            mvs(&s.output)
        );
    }
    if let Some(e) = &stopped {
        let _ = writeln!(text, "stopped: {e}");
    }
    Ok(Output {
        doc: json!({
            "schema": SCHEMA,
            "steps": done,
            "result": io::class_tuple_document(&current),
            "stopped": stopped.as_ref().map(|e| e.to_string()),
        }),
        text,
        code: EXIT_OK,
    })
}

fn classify(t: &ClassTuple) -> Result<Output, CliError> {
    match classify_kappa0_stop(t) {
        Ok(c) => {
            let pmv = c.final_pmv.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(" ");
            let text = table(&[
                ("class", tag_text(c.tag, c.d)),
                ("terminal", pmv),
                ("n", c.trace.final_n.to_string()),
            ]);
            let code = if c.tag == StopTag::None { EXIT_NEGATIVE } else { EXIT_OK };
            Ok(Output {
                doc: io::document(&c),
                text,
                code,
            })
        }
        Err(ReductionError::KappaNonZero(k)) => Ok(Output {
            doc: json!({ "schema": SCHEMA, "tag": StopTag::None, "kappa": k }),
            text: table(&[("class", "none".into()), ("kappa", k.to_string())]),
            code: EXIT_NEGATIVE,
        }),
        Err(e) => Err(CliError::usage(e.to_string())),
    }
}

fn relation_text(s: &Spectrum, r: &Relation) -> String {
    let parts: Vec<String> = s
        .forms()
        .iter()
        .zip(&r.choices)
        .map(|(f, c)| {
            let picked: Vec<String> = f
                .iter()
                .zip(c)
                .filter(|(_, &k)| k > 0)
                .map(|(sv, &k)| format!("{}×{k}", dsp_core::spectra::format_rational(&sv.value)))
                .collect();
            format!("{{{}}}", picked.join(", "))
        })
        .collect();
    format!("cardinality {}: {}", r.kcard, parts.join(" "))
}

fn genericity(s: &Spectrum, relative: bool) -> Result<Output, CliError> {
    if relative {
        let g = is_relatively_generic(s)?;
        let mut rows = vec![
            ("relatively generic", g.relatively_generic.to_string()),
            ("q", g.gcd.q.to_string()),
            ("xi", g.gcd.xi_angle.clone()),
        ];
        if let Some(r) = &g.offending {
            rows.push(("relation", relation_text(s, r)));
        }
        let code = if g.relatively_generic { EXIT_OK } else { EXIT_NEGATIVE };
        Ok(Output {
            doc: io::document(&g),
            text: table(&rows),
            code,
        })
    } else {
        let g = is_generic(s)?;
        let mut rows = vec![("generic", g.generic.to_string())];
        if let Some(r) = &g.witness {
            rows.push(("relation", relation_text(s, r)));
        }
        let code = if g.generic { EXIT_OK } else { EXIT_NEGATIVE };
        Ok(Output {
            doc: io::document(&g),
            text: table(&rows),
            code,
        })
    }
}

fn gcd_data(s: &Spectrum) -> Result<Output, CliError> {
    let g = compute_gcd_data(s)?;
    let text = table(&[
        ("q", g.q.to_string()),
        ("k", g.k.to_string()),
        ("xi", g.xi_angle.clone()),
        ("l", g.l.to_string()),
        ("primitive", g.primitive.to_string()),
        ("basic relation", g.gamma_b_holds.to_string()),
    ]);
    Ok(Output {
        doc: io::document(&g),
        text,
        code: EXIT_OK,
    })
}

fn sample(
    cli: &Cli,
    mv: &[String],
    mode: ModeArg,
    target: TargetArg,
    xi: Option<&str>,
    denominator_bound: u64,
) -> Result<Output, CliError> {
    let pmv = parse_pmv(mv)?;
    let mode = match mode {
        ModeArg::Additive => Mode::Additive,
        ModeArg::Multiplicative => Mode::Multiplicative,
    };
    let xi = xi
        .map(|x| parse_rational(x).ok_or_else(|| CliError::usage(format!("--xi: {x:?} is not a rational"))))
        .transpose()?;
    let target = match target {
        TargetArg::Generic => SampleTarget {
            xi_angle: xi,
            ..SampleTarget::generic()
        },
        TargetArg::Relative => SampleTarget::relatively_generic(xi),
    };
    let opts = SampleOptions {
        seed: seed(cli),
        denominator_bound,
        ..SampleOptions::default()
    };
    let s = sample_spectrum(&pmv, mode, &target, opts)?;
    let doc = io::spectrum_document(&s);
    Ok(Output {
        text: format!("{s}\n"),
        doc,
        code: EXIT_OK,
    })
}

/// One `--mv` value per form; `;` also separates forms inside a value.
fn parse_pmv(raw: &[String]) -> Result<Vec<MultiplicityVector>, CliError> {
    raw.iter()
        .flat_map(|v| v.split(';'))
        .map(|form| {
            form.split(',')
                .filter(|x| !x.trim().is_empty())
                .map(|x| {
                    x.trim()
                        .parse::<usize>()
                        .map_err(|_| CliError::usage(format!("--mv: {x:?} is not a count")))
                })
                .collect::<Result<Vec<_>, _>>()
                .map(MultiplicityVector::new)
        })
        .collect()
}

fn search_options(cli: &Cli, iterations: usize, objective: ObjectiveArg) -> SearchOptions {
    let d = SearchOptions::default();
    SearchOptions {
        seed: seed(cli),
        restarts: cli.budget.restarts.unwrap_or(d.restarts),
        iterations,
        tol: cli.budget.tol.unwrap_or(d.tol),
        threads: cli.budget.threads,
        objective: match objective {
            ObjectiveArg::ClassDefect => Objective::ClassDefect,
            ObjectiveArg::Product => Objective::Product,
        },
        ..d
    }
}

fn search(
    cli: &Cli,
    classes: &Path,
    iterations: usize,
    objective: ObjectiveArg,
    witness_out: Option<&Path>,
) -> Result<Output, CliError> {
    let classes = io::load_classes(&read(classes)?)?;
    let opts = search_options(cli, iterations, objective);
    let report = search_tuple(&classes, &opts)?;
    let doc = io::search_report_document(&report);
    let best = report
        .witnesses
        .iter()
        .find(|f| f.diagnostics.irreducible())
        .or_else(|| report.witnesses.first());
    if let (Some(path), Some(found)) = (witness_out, best) {
        write(path, &io::witness_document(&found.witness))?;
    }
    let mut text = table(&[
        ("n", report.n.to_string()),
        ("restarts", report.restarts.to_string()),
        ("converged", report.converged().to_string()),
        ("irreducible", report.irreducible_count().to_string()),
        ("best residual", format!("{:.3e}", report.best_residual)),
    ]);
    text.push_str("residual histogram\n");
    let total = report.restarts.max(1);
    for bin in report.histogram() {
        let bar = "#".repeat((bin.count * 40).div_ceil(total));
        let _ = writeln!(text, "  {:>12} {:>5} {bar}", bin.label, bin.count);
    }
    for f in report.witnesses.iter().take(10) {
        let d = &f.diagnostics;
        let _ = writeln!(
            text,
            "  restart {:>4}: residual {:.2e}  burnside {}  centralizer {}  invariant subspace {}",
            f.restart,
            f.witness.residual,
            d.burnside_dim,
            d.centralizer_dim,
            d.invariant_subspace
                .as_ref()
                .map_or("-".into(), |u| u.ncols().to_string())
        );
    }
    let code = if report.converged() == 0 { EXIT_BUDGET } else { EXIT_OK };
    Ok(Output { doc, text, code })
}

fn deform(
    cli: &Cli,
    witness: &Path,
    source: &Path,
    target: &Path,
    steps: usize,
    witness_out: Option<&Path>,
) -> Result<Output, CliError> {
    let w = io::load_witness(&read(witness)?)?;
    let source = io::load_classes(&read(source)?)?;
    let target = io::load_classes(&read(target)?)?;
    let d = DeformOptions::default();
    let opts = DeformOptions {
        steps,
        tol: cli.budget.tol.unwrap_or(d.tol),
        ..d
    };
    let report = deform_tuple(&w, &source, &target, &opts)?;
    if let Some(path) = witness_out {
        write(path, &io::witness_document(&report.witness))?;
    }
    let worst = report.step_residuals.iter().copied().fold(0.0, f64::max);
    let text = table(&[
        ("steps", report.step_residuals.len().to_string()),
        ("max step residual", format!("{worst:.3e}")),
        ("final residual", format!("{:.3e}", report.witness.residual)),
        (
            "newton iterations",
            report.newton_iterations.iter().sum::<usize>().to_string(),
        ),
        ("centralizer", report.centralizer_dim.to_string()),
    ]);
    Ok(Output {
        doc: io::deform_report_document(&report),
        text,
        code: EXIT_OK,
    })
}

fn verify(cli: &Cli, witness: &Path, classes: &Path) -> Result<Output, CliError> {
    let w = io::load_witness(&read(witness)?)?;
    let classes = io::load_classes(&read(classes)?)?;
    let tol = cli.budget.tol.unwrap_or(1e-8);
    let d = verify_witness(&w, &classes, dsp_core::witness::RANK_TOL)?;
    let valid = d.product_residual < tol && d.max_class_residual() < tol;
    let text = table(&[
        ("product residual", format!("{:.3e}", d.product_residual)),
        ("max class residual", format!("{:.3e}", d.max_class_residual())),
        ("burnside", format!("{} of {}", d.burnside_dim, d.n * d.n)),
        ("centralizer", d.centralizer_dim.to_string()),
        (
            "invariant subspace",
            d.invariant_subspace
                .as_ref()
                .map_or("none found".into(), |u| format!("dimension {}", u.ncols())),
        ),
        ("irreducible", d.irreducible().to_string()),
        ("within tolerance", valid.to_string()),
    ]);
    let mut extra = Map::new();
    extra.insert("tolerance".into(), json!(tol));
    extra.insert("within_tolerance".into(), json!(valid));
    let code = if valid && d.irreducible() {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    };
    Ok(Output {
        doc: io::with_fields(io::diagnostics_document(&d), extra),
        text,
        code,
    })
}
