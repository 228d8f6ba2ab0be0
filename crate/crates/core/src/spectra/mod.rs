//! Exact eigenvalue data and genericity.
//!
//! Additive eigenvalues are rationals `λ`; multiplicative ones are rational
//! angles `θ ∈ [0, 1)` standing for `σ = exp(2πiθ)`. A product of `σ`'s equals
//! one exactly when the corresponding sum of angles is an integer, so every
//! relation in this module is decided in rational arithmetic.

mod chain;
mod relations;
mod sample;

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::jnf::{ClassTuple, JordanForm, Mode};

pub use chain::{case_a_chain_structure, ChainSet, ChainStructure};
pub use relations::{
    enumerate_relations, enumerate_relations_with_cap, is_gamma_corollary, is_generic, is_generic_with_cap,
    is_relatively_generic, is_relatively_generic_with_cap, Genericity, Relation, RelativeGenericity,
    DEFAULT_ENUMERATION_CAP,
};
pub use sample::{sample_spectrum, GenericityTarget, SampleOptions, SampleTarget};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpectraError {
    #[error("spectrum needs at least two forms, got {0}")]
    TooFewForms(usize),
    #[error("form {0} has no eigenvalues")]
    EmptyForm(usize),
    #[error("form {form}: eigenvalue {value} has multiplicity zero")]
    ZeroMultiplicity { form: usize, value: String },
    #[error("form {form}: eigenvalue {value} appears twice")]
    DuplicateEigenvalue { form: usize, value: String },
    #[error("form {form} has size {found}, expected {expected}")]
    SizeMismatch { form: usize, expected: usize, found: usize },
    #[error("trace/determinant constraint violated by {0}")]
    ConstraintViolated(String),
    #[error("enumeration needs {candidates} candidates, cap is {cap}")]
    BudgetExceeded { candidates: u128, cap: u128 },
    #[error("relation cardinality {kcard} outside 1..{n}")]
    InvalidCardinality { kcard: usize, n: usize },
    #[error("no acceptable spectrum after {0} attempts")]
    SamplingExhausted(usize),
    #[error("invalid sampling target: {0}")]
    InvalidTarget(String),
    #[error("inconsistent chains: {0}")]
    InconsistentChains(String),
    #[error("spectrum does not match the Jordan data: {0}")]
    ShapeMismatch(String),
}

/// One exact eigenvalue.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ExactEigen {
    /// Additive eigenvalue `λ`.
    Value(BigRational),
    /// Multiplicative eigenvalue `exp(2πiθ)`, with `θ ∈ [0, 1)`.
    Angle(BigRational),
}

impl ExactEigen {
    pub fn new(mode: Mode, x: BigRational) -> Self {
        match mode {
            Mode::Additive => ExactEigen::Value(x),
            Mode::Multiplicative => ExactEigen::Angle(reduce_angle(&x)),
        }
    }

    pub fn rational(&self) -> &BigRational {
        match self {
            ExactEigen::Value(x) | ExactEigen::Angle(x) => x,
        }
    }

    /// Floating-point realization `(re, im)`.
    pub fn to_complex(&self) -> (f64, f64) {
        match self {
            ExactEigen::Value(x) => (to_f64(x), 0.0),
            ExactEigen::Angle(t) => {
                let phase = 2.0 * std::f64::consts::PI * to_f64(t);
                (phase.cos(), phase.sin())
            }
        }
    }
}

/// Reduces an angle into `[0, 1)`.
pub fn reduce_angle(x: &BigRational) -> BigRational {
    let fl = x.floor();
    x - fl
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"p/q"` or `"p"`.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            (!q.is_zero()).then(|| BigRational::new(p, q))
        }
        None => s.parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}

/// Lowest-terms `"p/q"` (or `"p"` for integers).
pub fn format_rational(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// An eigenvalue with its multiplicity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpectralValue {
    pub value: BigRational,
    pub mult: usize,
}

impl SpectralValue {
    pub fn new(value: BigRational, mult: usize) -> Self {
        SpectralValue { value, mult }
    }
}

/// Concrete eigenvalues for every matrix of the tuple, with multiplicities.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Spectrum {
    mode: Mode,
    n: usize,
    forms: Vec<Vec<SpectralValue>>,
}

impl Spectrum {
    /// Structural validation only; see [`validate_spectrum`] for the trace/determinant constraint.
    pub fn new(mode: Mode, forms: Vec<Vec<SpectralValue>>) -> Result<Self, SpectraError> {
        if forms.len() < 2 {
            return Err(SpectraError::TooFewForms(forms.len()));
        }
        let forms: Vec<Vec<SpectralValue>> = forms
            .into_iter()
            .map(|f| {
                f.into_iter()
                    .map(|sv| SpectralValue::new(ExactEigen::new(mode, sv.value).rational().clone(), sv.mult))
                    .collect()
            })
            .collect();
        let mut n = None;
        for (j, f) in forms.iter().enumerate() {
            if f.is_empty() {
                return Err(SpectraError::EmptyForm(j));
            }
            for (k, sv) in f.iter().enumerate() {
                if sv.mult == 0 {
                    return Err(SpectraError::ZeroMultiplicity {
                        form: j,
                        value: format_rational(&sv.value),
                    });
                }
                if f[..k].iter().any(|o| o.value == sv.value) {
                    return Err(SpectraError::DuplicateEigenvalue {
                        form: j,
                        value: format_rational(&sv.value),
                    });
                }
            }
            let size: usize = f.iter().map(|sv| sv.mult).sum();
            match n {
                None => n = Some(size),
                Some(expected) if expected != size => {
                    return Err(SpectraError::SizeMismatch {
                        form: j,
                        expected,
                        found: size,
                    })
                }
                _ => {}
            }
        }
        Ok(Spectrum {
            mode,
            n: n.unwrap_or(0),
            forms,
        })
    }

    /// Convenience constructor from `(numerator, denominator, multiplicity)` triples.
    pub fn from_triples(mode: Mode, forms: &[&[(i64, i64, usize)]]) -> Result<Self, SpectraError> {
        Spectrum::new(
            mode,
            forms
                .iter()
                .map(|f| f.iter().map(|&(p, q, m)| SpectralValue::new(rat(p, q), m)).collect())
                .collect(),
        )
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn forms(&self) -> &[Vec<SpectralValue>] {
        &self.forms
    }

    pub fn eigen(&self, form: usize, slot: usize) -> ExactEigen {
        ExactEigen::new(self.mode, self.forms[form][slot].value.clone())
    }

    /// `Σ_j Σ_k mult · value`.
    pub fn weighted_total(&self) -> BigRational {
        self.forms.iter().flatten().fold(BigRational::zero(), |acc, sv| {
            acc + &sv.value * BigRational::from_integer(BigInt::from(sv.mult))
        })
    }

    /// Gcd of all multiplicities.
    pub fn multiplicity_gcd(&self) -> usize {
        self.forms.iter().flatten().fold(0usize, |g, sv| g.gcd(&sv.mult))
    }

    /// The tuple of diagonal Jordan forms with these multiplicities (in stored order).
    pub fn diagonal_tuple(&self) -> ClassTuple {
        let forms = self
            .forms
            .iter()
            .map(|f| {
                let mults: Vec<usize> = f.iter().map(|sv| sv.mult).collect();
                JordanForm::diagonal(&mults).expect("multiplicities are positive")
            })
            .collect();
        ClassTuple::new(self.mode, forms).expect("sizes agree")
    }

    /// Multiplies every multiplicity by `factor`.
    pub fn scaled(&self, factor: usize) -> Spectrum {
        Spectrum {
            mode: self.mode,
            n: self.n * factor,
            forms: self
                .forms
                .iter()
                .map(|f| {
                    f.iter()
                        .map(|sv| SpectralValue::new(sv.value.clone(), sv.mult * factor))
                        .collect()
                })
                .collect(),
        }
    }

    /// Divides every multiplicity by `d`, if possible.
    pub fn divided(&self, d: usize) -> Option<Spectrum> {
        if d == 0 || self.forms.iter().flatten().any(|sv| sv.mult % d != 0) {
            return None;
        }
        Some(Spectrum {
            mode: self.mode,
            n: self.n / d,
            forms: self
                .forms
                .iter()
                .map(|f| {
                    f.iter()
                        .map(|sv| SpectralValue::new(sv.value.clone(), sv.mult / d))
                        .collect()
                })
                .collect(),
        })
    }
}

impl fmt::Display for Spectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let key = match self.mode {
            Mode::Additive => "λ",
            Mode::Multiplicative => "θ",
        };
        for (j, form) in self.forms.iter().enumerate() {
            if j > 0 {
                f.write_str(" | ")?;
            }
            for (k, sv) in form.iter().enumerate() {
                if k > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{key}={}×{}", format_rational(&sv.value), sv.mult)?;
            }
        }
        Ok(())
    }
}

/// Checks `Σ Σ λ = 0` (additive) or `Π Π σ = 1` (multiplicative) exactly.
pub fn validate_spectrum(s: &Spectrum) -> Result<(), SpectraError> {
    let total = s.weighted_total();
    let defect = match s.mode {
        Mode::Additive => total,
        Mode::Multiplicative => reduce_angle(&total),
    };
    if defect.is_zero() {
        Ok(())
    } else {
        Err(SpectraError::ConstraintViolated(format_rational(&defect)))
    }
}

/// The quantities `q`, `k`, `ξ = exp(2πik/q)` and `l = gcd(q, k)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GcdData {
    pub mode: Mode,
    pub q: usize,
    /// Residue `k` with `0 ≤ k < q`; always zero in additive mode.
    pub k: usize,
    /// `k/q` in lowest terms, as a string.
    pub xi_angle: String,
    pub l: usize,
    /// `gcd(k, q) = 1`: `ξ` is a primitive root of unity of order `q`.
    pub primitive: bool,
    /// The basic relation holds as a genuine relation (`l > 1`).
    pub gamma_b_holds: bool,
}

impl GcdData {
    pub fn xi(&self) -> BigRational {
        rat(self.k as i64, self.q as i64)
    }

    /// Cardinality of the basic relation, `n / l`.
    pub fn gamma_b_cardinality(&self, n: usize) -> usize {
        n / self.l
    }
}

/// Computes `q`, `k`, `ξ` and `l` from a valid spectrum.
pub fn compute_gcd_data(s: &Spectrum) -> Result<GcdData, SpectraError> {
    validate_spectrum(s)?;
    let q = s.multiplicity_gcd();
    let (k, l) = match s.mode {
        Mode::Additive => (0, q),
        Mode::Multiplicative => {
            let reduced = s.divided(q).expect("q divides every multiplicity");
            let angle = reduce_angle(&reduced.weighted_total());
            // angle = k/q exactly since q·angle is an integer.
            let scaled = &angle * BigRational::from_integer(BigInt::from(q));
            debug_assert!(scaled.is_integer());
            let k = scaled.to_integer().to_usize().expect("0 ≤ k < q");
            let l = if k == 0 { q } else { q.gcd(&k) };
            (k, l)
        }
    };
    Ok(GcdData {
        mode: s.mode,
        q,
        k,
        xi_angle: format_rational(&rat(k as i64, q as i64)),
        l,
        primitive: q.gcd(&k) == 1,
        gamma_b_holds: l > 1,
    })
}

/// Gcd `d` of all block counts `Σ_{j,m}(σ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockCountGcd {
    pub d: usize,
}

impl BlockCountGcd {
    /// Checks `d | q` and `q | n`.
    pub fn divides(&self, q: usize, n: usize) -> bool {
        q.is_multiple_of(self.d) && n.is_multiple_of(q)
    }
}

pub fn block_count_gcd(forms: &[JordanForm]) -> BlockCountGcd {
    let mut d = 0usize;
    for form in forms {
        for slot in form.groups() {
            let parts = slot.blocks.parts();
            let mut i = 0;
            while i < parts.len() {
                let run = parts[i..].iter().take_while(|&&b| b == parts[i]).count();
                d = d.gcd(&run);
                i += run;
            }
        }
    }
    BlockCountGcd { d }
}

/// Multiplicity of each slot of `forms` must equal the multiplicities of `s`.
pub fn check_shape(forms: &[JordanForm], s: &Spectrum) -> Result<(), SpectraError> {
    if forms.len() != s.forms().len() {
        return Err(SpectraError::ShapeMismatch(format!(
            "{} forms vs {} spectral forms",
            forms.len(),
            s.forms().len()
        )));
    }
    for (j, (f, sf)) in forms.iter().zip(s.forms()).enumerate() {
        let a = f.slot_multiplicities();
        let b: Vec<usize> = sf.iter().map(|sv| sv.mult).collect();
        if a != b {
            return Err(SpectraError::ShapeMismatch(format!(
                "form {j}: slot multiplicities {a:?} vs {b:?}"
            )));
        }
    }
    Ok(())
}
