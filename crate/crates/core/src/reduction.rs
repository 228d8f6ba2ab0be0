//! The reduction `Ψ` on tuples of Jordan forms and the solvability decision
//! for generic eigenvalues.
//!
//! One step sets `n1 = Σ r_j - n` and, in every form, picks an eigenvalue
//! with the largest number of Jordan blocks and shrinks its `n - n1` smallest
//! blocks by one. The step is defined while `(β)` holds and `(ω)` fails.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jnf::{ClassTuple, EigenSlot, JordanForm, MultiplicityVector, Partition};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReductionError {
    /// `(ω)` holds, so `Ψ` is undefined and the tuple is already terminal.
    #[error("condition (omega) holds; the reduction is undefined")]
    OmegaHolds,
    #[error("condition (beta) fails for forms {0:?}")]
    BetaFails(Vec<usize>),
    #[error("matrix size is 1; the reduction is undefined")]
    SizeOne,
    #[error("rigidity index is {0}, expected 0")]
    KappaNonZero(i64),
    #[error("choice vector has length {found}, expected {expected}")]
    ChoiceLength { expected: usize, found: usize },
    #[error("slot {slot} of form {form} does not have the maximal block count")]
    ChoiceNotMaximal { form: usize, slot: usize },
}

/// One application of `Ψ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PsiStep {
    pub input: ClassTuple,
    pub n1: usize,
    /// Per form, the index of the eigenvalue slot that was shrunk.
    pub chosen_slots: Vec<usize>,
    pub output: ClassTuple,
    /// Forms of the output that became scalar.
    pub scalar_forms: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Solvable,
    NotSolvable,
    InvalidInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailedCondition {
    Alpha,
    Beta,
}

/// Why the iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    OmegaHolds,
    SizeOne,
    BetaFails,
}

/// Complete record of the iterated reduction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecisionTrace {
    pub initial: ClassTuple,
    pub kappa: i64,
    pub steps: Vec<PsiStep>,
    pub final_tuple: ClassTuple,
    pub final_n: usize,
    pub stop: StopReason,
    pub verdict: Verdict,
    pub failed_condition: Option<FailedCondition>,
    /// Number of completed steps when a condition failed.
    pub failed_at_step: Option<usize>,
}

impl DecisionTrace {
    pub fn is_solvable(&self) -> bool {
        self.verdict == Verdict::Solvable
    }
}

/// Applies `Ψ` with the first maximal slot of every form.
pub fn psi_step(t: &ClassTuple) -> Result<PsiStep, ReductionError> {
    let choice: Vec<usize> = t.forms().iter().map(|f| f.max_count_slots()[0]).collect();
    psi_step_with_choice(t, &choice)
}

/// Applies `Ψ` with an explicit slot per form; each slot must have maximal block count.
pub fn psi_step_with_choice(t: &ClassTuple, choice: &[usize]) -> Result<PsiStep, ReductionError> {
    let n = t.n();
    if n == 1 {
        return Err(ReductionError::SizeOne);
    }
    if choice.len() != t.len() {
        return Err(ReductionError::ChoiceLength {
            expected: t.len(),
            found: choice.len(),
        });
    }
    let report = t.check_conditions();
    if !report.beta {
        return Err(ReductionError::BetaFails(report.beta_failures));
    }
    if report.omega {
        return Err(ReductionError::OmegaHolds);
    }
    let n1 = report.sum_r - n;
    let shrink = n - n1;

    let mut forms = Vec::with_capacity(t.len());
    let mut scalar_forms = Vec::new();
    for (j, (form, &slot)) in t.forms().iter().zip(choice).enumerate() {
        if slot >= form.groups().len() || form.groups()[slot].block_count() != form.max_block_count() {
            return Err(ReductionError::ChoiceNotMaximal { form: j, slot });
        }
        let reduced = shrink_slot(form, slot, shrink);
        if reduced.is_scalar() {
            scalar_forms.push(j);
        }
        forms.push(reduced);
    }
    let output = ClassTuple::new(t.mode(), forms).expect("every reduced form has size n1");
    Ok(PsiStep {
        input: t.clone(),
        n1,
        chosen_slots: choice.to_vec(),
        output,
        scalar_forms,
    })
}

fn shrink_slot(form: &JordanForm, slot: usize, count: usize) -> JordanForm {
    let groups = form
        .groups()
        .iter()
        .enumerate()
        .filter_map(|(k, g)| {
            if k != slot {
                return Some(g.clone());
            }
            let parts = g.blocks.parts();
            let keep = parts.len() - count;
            let blocks: Vec<usize> = parts[..keep]
                .iter()
                .copied()
                .chain(parts[keep..].iter().map(|b| b - 1).filter(|&b| b > 0))
                .collect();
            Partition::new(blocks).ok().map(|p| EigenSlot::new(g.label.clone(), p))
        })
        .collect();
    JordanForm::new(groups).expect("labels stay distinct")
}

/// Iterates `Ψ` as long as it is defined and reports the solvability verdict
/// for generic eigenvalues.
pub fn decide_generic(t: &ClassTuple) -> DecisionTrace {
    decide_with(t, psi_step)
}

/// Same as [`decide_generic`] with a caller-chosen slot rule per step.
pub fn decide_with<F>(t: &ClassTuple, mut step: F) -> DecisionTrace
where
    F: FnMut(&ClassTuple) -> Result<PsiStep, ReductionError>,
{
    let mut steps: Vec<PsiStep> = Vec::new();
    let mut current = t.clone();
    loop {
        let report = current.check_conditions();
        let (stop, verdict, failed) = if current.n() == 1 {
            (StopReason::SizeOne, Verdict::Solvable, None)
        } else if !report.beta {
            (StopReason::BetaFails, Verdict::NotSolvable, Some(FailedCondition::Beta))
        } else if report.omega {
            // (α) is implied once the iteration stops with (ω); a failure here
            // means the input was inconsistent with that implication.
            if report.alpha {
                (StopReason::OmegaHolds, Verdict::Solvable, None)
            } else {
                (
                    StopReason::OmegaHolds,
                    Verdict::NotSolvable,
                    Some(FailedCondition::Alpha),
                )
            }
        } else {
            match step(&current) {
                Ok(s) => {
                    current = s.output.clone();
                    steps.push(s);
                    continue;
                }
                Err(_) => (StopReason::BetaFails, Verdict::InvalidInput, None),
            }
        };
        let failed_at_step = failed.map(|_| steps.len());
        return DecisionTrace {
            initial: t.clone(),
            kappa: t.rigidity_index(),
            final_n: current.n(),
            final_tuple: current,
            steps,
            stop,
            verdict,
            failed_condition: failed,
            failed_at_step,
        };
    }
}

/// Tag of a terminal `κ = 0` tuple of diagonal forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StopTag {
    A,
    B,
    C,
    D,
    #[serde(rename = "none")]
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StopCase {
    pub tag: StopTag,
    /// The common scale `d` of the matched pattern; zero when `tag` is `None`.
    pub d: usize,
    /// Terminal multiplicity vectors after dropping scalar forms.
    pub final_pmv: Vec<MultiplicityVector>,
    pub trace: DecisionTrace,
}

/// Runs the reduction on a `κ = 0` tuple (mapped to diagonal forms first) and
/// matches the terminal PMV against the four degenerate families.
pub fn classify_kappa0_stop(t: &ClassTuple) -> Result<StopCase, ReductionError> {
    let kappa = t.rigidity_index();
    if kappa != 0 {
        return Err(ReductionError::KappaNonZero(kappa));
    }
    let diag = if t.is_diagonal() {
        t.clone()
    } else {
        t.to_corresponding_diagonal()
    };
    let trace = decide_generic(&diag);
    let final_pmv: Vec<MultiplicityVector> = trace
        .final_tuple
        .forms()
        .iter()
        .filter(|f| !f.is_scalar())
        .map(|f| {
            f.multiplicity_vector()
                .expect("reduction keeps diagonal forms diagonal")
        })
        .collect();
    let (tag, d) = if trace.stop == StopReason::OmegaHolds && trace.is_solvable() {
        match_pattern(&final_pmv).unwrap_or((StopTag::None, 0))
    } else {
        (StopTag::None, 0)
    };
    Ok(StopCase {
        tag,
        d,
        final_pmv,
        trace,
    })
}

/// The four terminal families, as multiplicity shapes in units of `d`.
const PATTERNS: [(StopTag, &[&[usize]]); 4] = [
    (StopTag::A, &[&[1, 1], &[1, 1], &[1, 1], &[1, 1]]),
    (StopTag::B, &[&[1, 1, 1], &[1, 1, 1], &[1, 1, 1]]),
    (StopTag::C, &[&[1, 1, 1, 1], &[1, 1, 1, 1], &[2, 2]]),
    (StopTag::D, &[&[1, 1, 1, 1, 1, 1], &[2, 2, 2], &[3, 3]]),
];

fn match_pattern(pmv: &[MultiplicityVector]) -> Option<(StopTag, usize)> {
    let d = *pmv.iter().flat_map(|mv| mv.components()).min()?;
    let mut scaled: Vec<Vec<usize>> = pmv
        .iter()
        .map(|mv| mv.divided_by(d).map(|m| m.components().to_vec()))
        .collect::<Option<_>>()?;
    scaled.sort();
    PATTERNS.iter().find_map(|(tag, shape)| {
        let mut expected: Vec<Vec<usize>> = shape.iter().map(|s| s.to_vec()).collect();
        expected.sort();
        (expected == scaled).then_some((*tag, d))
    })
}
