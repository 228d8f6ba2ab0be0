//! Numerical witnesses: concrete matrix tuples in prescribed conjugacy classes
//! with product `I` (multiplicative) or sum `0` (additive).
//!
//! Search targets are semisimple; Jordan classes are accepted for all but one
//! matrix of a searched tuple and serve as deformation sources.

mod blocks;
mod deform;
mod diagnostics;
pub mod linalg;
mod search;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::jnf::{JordanForm, Mode};
use crate::spectra::{format_rational, ExactEigen, SpectralValue, Spectrum};
use linalg::{c, frobenius, identity, product, CMatrix, C64};

pub use blocks::{build_block_diagonal_witness, BlockWitness};
pub use deform::{deform_to_spectrum, deform_tuple, DeformOptions, DeformReport};
pub use diagnostics::{
    burnside_dimension, centralizer_dimension, class_residual, find_invariant_subspace, verify_witness, Diagnostics,
    RANK_TOL,
};
pub use search::{search_tuple, FoundWitness, HistogramBin, Objective, RestartOutcome, SearchOptions, SearchReport};

/// Largest supported matrix size.
pub const MAX_N: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WitnessError {
    #[error("invalid spectrum: {0}")]
    SpectrumInvalid(String),
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("n = {0} exceeds the supported maximum {MAX_N}")]
    TooLarge(usize),
    #[error("unsupported class: {0}")]
    UnsupportedClass(String),
    #[error("no restart converged; best residual {best_residual:.3e}")]
    NoConvergence { best_residual: f64 },
    #[error("block split impossible: {0}")]
    BlockSplitImpossible(String),
    #[error("centralizer has dimension {0}, expected 1")]
    CentralizerNontrivial(usize),
    #[error("continuation stuck at step {step} with residual {residual:.3e}")]
    ContinuationStuck { step: usize, residual: f64 },
    #[error("target not reachable by the continuation: {0}")]
    NotHomotopic(String),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// A conjugacy class with exact eigenvalues assigned to the slots of a Jordan form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcreteClass {
    jnf: JordanForm,
    values: Vec<ExactEigen>,
}

impl ConcreteClass {
    pub fn new(jnf: JordanForm, values: Vec<ExactEigen>) -> Result<Self, WitnessError> {
        if values.len() != jnf.groups().len() {
            return Err(WitnessError::SizeMismatch(format!(
                "{} slots but {} values",
                jnf.groups().len(),
                values.len()
            )));
        }
        let additive = matches!(values[0], ExactEigen::Value(_));
        for (k, v) in values.iter().enumerate() {
            if matches!(v, ExactEigen::Value(_)) != additive {
                return Err(WitnessError::SpectrumInvalid(
                    "mixed additive and multiplicative values".into(),
                ));
            }
            if values[..k].contains(v) {
                return Err(WitnessError::SpectrumInvalid(format!(
                    "value {} assigned to two slots",
                    format_rational(v.rational())
                )));
            }
        }
        Ok(ConcreteClass { jnf, values })
    }

    /// Diagonal classes of a spectrum, one per form.
    pub fn from_spectrum(s: &Spectrum) -> Vec<ConcreteClass> {
        s.forms()
            .iter()
            .enumerate()
            .map(|(j, f)| {
                let mults: Vec<usize> = f.iter().map(|sv| sv.mult).collect();
                ConcreteClass {
                    jnf: JordanForm::diagonal(&mults).expect("positive multiplicities"),
                    values: (0..f.len()).map(|k| s.eigen(j, k)).collect(),
                }
            })
            .collect()
    }

    pub fn jnf(&self) -> &JordanForm {
        &self.jnf
    }

    pub fn values(&self) -> &[ExactEigen] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.jnf.n()
    }

    pub fn mode(&self) -> Mode {
        match self.values[0] {
            ExactEigen::Value(_) => Mode::Additive,
            ExactEigen::Angle(_) => Mode::Multiplicative,
        }
    }

    pub fn is_semisimple(&self) -> bool {
        self.jnf.is_diagonal()
    }

    pub fn complex_values(&self) -> Vec<C64> {
        self.values
            .iter()
            .map(|v| {
                let (re, im) = v.to_complex();
                c(re, im)
            })
            .collect()
    }

    /// Eigenvalues with multiplicities.
    pub fn spectral_values(&self) -> Vec<SpectralValue> {
        self.jnf
            .groups()
            .iter()
            .zip(&self.values)
            .map(|(g, v)| SpectralValue::new(v.rational().clone(), g.multiplicity()))
            .collect()
    }

    /// `Σ mult · value`, exactly.
    pub fn weighted_sum(&self) -> BigRational {
        self.spectral_values().iter().fold(BigRational::zero(), |acc, sv| {
            acc + &sv.value * BigRational::from_integer(BigInt::from(sv.mult))
        })
    }

    /// Upper-triangular Jordan normal form: slots in order, blocks in partition order.
    pub fn normal_form(&self) -> CMatrix {
        let n = self.n();
        let vals = self.complex_values();
        let mut m = CMatrix::zeros(n, n);
        let mut pos = 0;
        for (g, v) in self.jnf.groups().iter().zip(vals) {
            for &b in g.blocks.parts() {
                for i in 0..b {
                    m[(pos + i, pos + i)] = v;
                    if i + 1 < b {
                        m[(pos + i, pos + i + 1)] = c(1.0, 0.0);
                    }
                }
                pos += b;
            }
        }
        m
    }

    /// `Σ_σ mult(σ) σ^k` for `k = 1..=kmax`.
    pub fn power_sums(&self, kmax: usize) -> Vec<C64> {
        let vals = self.complex_values();
        let mults = self.jnf.slot_multiplicities();
        (1..=kmax)
            .map(|k| vals.iter().zip(&mults).map(|(v, &m)| v.powi(k as i32) * m as f64).sum())
            .collect()
    }

    /// Largest Jordan block per slot.
    pub fn max_blocks(&self) -> Vec<usize> {
        self.jnf.groups().iter().map(|g| g.blocks.parts()[0]).collect()
    }
}

/// Checks the trace/determinant constraint on concrete classes exactly.
pub fn check_constraint(classes: &[ConcreteClass]) -> Result<(), WitnessError> {
    if classes.len() < 2 {
        return Err(WitnessError::SizeMismatch(format!(
            "need at least two classes, got {}",
            classes.len()
        )));
    }
    let n = classes[0].n();
    let mode = classes[0].mode();
    if let Some(bad) = classes.iter().position(|cl| cl.n() != n) {
        return Err(WitnessError::SizeMismatch(format!(
            "class {bad} has size {}, expected {n}",
            classes[bad].n()
        )));
    }
    if classes.iter().any(|cl| cl.mode() != mode) {
        return Err(WitnessError::SpectrumInvalid("classes mix modes".into()));
    }
    let total = classes
        .iter()
        .fold(BigRational::zero(), |acc, cl| acc + cl.weighted_sum());
    let ok = match mode {
        Mode::Additive => total.is_zero(),
        Mode::Multiplicative => total.is_integer(),
    };
    if ok {
        Ok(())
    } else {
        Err(WitnessError::SpectrumInvalid(format!(
            "eigenvalue constraint violated (total {})",
            format_rational(&total)
        )))
    }
}

/// `‖M_1⋯M_{p+1} − I‖_F` or `‖ΣA_j‖_F`.
pub fn tuple_residual(mode: Mode, matrices: &[CMatrix]) -> f64 {
    let n = matrices[0].nrows();
    match mode {
        Mode::Multiplicative => frobenius(&(product(matrices, n) - identity(n))),
        Mode::Additive => frobenius(&matrices.iter().fold(CMatrix::zeros(n, n), |acc, m| acc + m)),
    }
}

/// `ΠM_j − I` or `ΣA_j`.
pub(crate) fn residual_matrix(mode: Mode, ms: &[CMatrix]) -> CMatrix {
    let n = ms[0].nrows();
    match mode {
        Mode::Multiplicative => product(ms, n) - identity(n),
        Mode::Additive => ms.iter().fold(CMatrix::zeros(n, n), |acc, m| acc + m),
    }
}

/// `∂ vec_r(residual) / ∂ vec_r(Y_j)` for `dM_j = Y_j M_j − M_j Y_j`, stacked over all `j`.
pub(crate) fn product_jacobian(mode: Mode, ms: &[CMatrix]) -> CMatrix {
    let n = ms[0].nrows();
    let nn = n * n;
    let mut out = CMatrix::zeros(nn, ms.len() * nn);
    for j in 0..ms.len() {
        let (l, r) = match mode {
            Mode::Multiplicative => (product(&ms[..j], n), product(&ms[j + 1..], n)),
            Mode::Additive => (identity(n), identity(n)),
        };
        // d residual = L (Y M_j − M_j Y) R and vec_r(A Y B) = (A ⊗ B^T) vec_r(Y)
        let block = l.kronecker(&(&ms[j] * &r).transpose()) - (&l * &ms[j]).kronecker(&r.transpose());
        out.view_mut((0, j * nn), (nn, nn)).copy_from(&block);
    }
    out
}

/// `Q_j G_j Q_j^{-1}` for every `j`; `None` if a frame is singular.
pub(crate) fn conjugate(frames: &[CMatrix], forms: &[CMatrix]) -> Option<Vec<CMatrix>> {
    frames
        .iter()
        .zip(forms)
        .map(|(q, g)| q.clone().try_inverse().map(|qi| q * g * qi))
        .collect()
}

/// A numerical matrix tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub mode: Mode,
    pub matrices: Vec<CMatrix>,
    pub residual: f64,
    /// Conjugating frames `Q_j` with `M_j = Q_j G_j Q_j^{-1}` for the normal forms `G_j`, when known.
    pub frames: Option<Vec<CMatrix>>,
}

impl Witness {
    pub fn new(mode: Mode, matrices: Vec<CMatrix>) -> Self {
        let residual = tuple_residual(mode, &matrices);
        Witness {
            mode,
            matrices,
            residual,
            frames: None,
        }
    }

    pub fn with_frames(mut self, frames: Vec<CMatrix>) -> Self {
        self.frames = Some(frames);
        self
    }

    pub fn n(&self) -> usize {
        self.matrices.first().map_or(0, |m| m.nrows())
    }

    /// Simultaneous conjugation `M_j ↦ P M_j P^{-1}`.
    pub fn conjugated(&self, p: &CMatrix) -> Option<Witness> {
        let inv = p.clone().try_inverse()?;
        let matrices = self.matrices.iter().map(|m| p * m * &inv).collect();
        let mut w = Witness::new(self.mode, matrices);
        w.frames = self.frames.as_ref().map(|fs| fs.iter().map(|q| p * q).collect());
        Some(w)
    }
}
