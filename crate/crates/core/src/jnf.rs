//! Jordan normal forms as exact combinatorial data.
//!
//! A [`JordanForm`] lists, for every eigenvalue slot, the sizes of its Jordan
//! blocks as a [`Partition`]. Eigenvalues are abstract labels here; concrete
//! values are attached by [`crate::spectra`].
//!
//! The class quantities `r` (minimal rank of `X - λI`) and `d` (dimension of
//! the conjugacy class) are computed through the corresponding diagonal form:
//! every eigenvalue's block partition is replaced by its dual, and the
//! resulting multiplicity vector determines both numbers.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while constructing Jordan-form data.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JnfError {
    #[error("partition is empty")]
    EmptyPartition,
    #[error("partition contains a zero part")]
    ZeroPart,
    #[error("Jordan form has no eigenvalue slots")]
    EmptyForm,
    #[error("duplicate eigenvalue label `{0}`")]
    DuplicateLabel(String),
    #[error("form {form} has size {found}, expected {expected}")]
    SizeMismatch { form: usize, expected: usize, found: usize },
    #[error("a tuple needs at least two forms, got {0}")]
    TooFewForms(usize),
    #[error("declared size {declared} does not match block total {actual}")]
    DeclaredSize { declared: usize, actual: usize },
    #[error("matrix size must be positive")]
    ZeroSize,
}

/// Additive (`A_1 + ... + A_{p+1} = 0`) or multiplicative (`M_1 ... M_{p+1} = I`) problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Additive,
    Multiplicative,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Additive => f.write_str("additive"),
            Mode::Multiplicative => f.write_str("multiplicative"),
        }
    }
}

/// A partition stored with parts sorted non-increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Partition(Vec<usize>);

impl Partition {
    /// Builds a partition from parts in any order.
    pub fn new(mut parts: Vec<usize>) -> Result<Self, JnfError> {
        if parts.is_empty() {
            return Err(JnfError::EmptyPartition);
        }
        if parts.contains(&0) {
            return Err(JnfError::ZeroPart);
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Partition(parts))
    }

    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    pub fn weight(&self) -> usize {
        self.0.iter().sum()
    }

    /// Number of parts.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Conjugate partition: part `i` counts the parts of `self` exceeding `i`.
    pub fn dual(&self) -> Partition {
        let largest = self.0[0];
        let parts = (0..largest)
            .map(|i| self.0.iter().take_while(|&&b| b > i).count())
            .collect();
        Partition(parts)
    }
}

impl TryFrom<Vec<usize>> for Partition {
    type Error = JnfError;

    fn try_from(parts: Vec<usize>) -> Result<Self, Self::Error> {
        Partition::new(parts)
    }
}

impl From<Partition> for Vec<usize> {
    fn from(p: Partition) -> Self {
        p.0
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_tuple(f, &self.0)
    }
}

fn write_tuple(f: &mut fmt::Formatter<'_>, parts: &[usize]) -> fmt::Result {
    f.write_str("(")?;
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{p}")?;
    }
    f.write_str(")")
}

/// Multiplicities of the eigenvalues of a diagonalizable matrix, sorted non-increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiplicityVector(Vec<usize>);

impl MultiplicityVector {
    /// Sorts the components and drops zeros.
    pub fn new(mut components: Vec<usize>) -> Self {
        components.retain(|&m| m > 0);
        components.sort_unstable_by(|a, b| b.cmp(a));
        MultiplicityVector(components)
    }

    pub fn components(&self) -> &[usize] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// `n^2 - Σ m^2`, the dimension of the diagonal class with these multiplicities.
    pub fn class_dimension(&self) -> usize {
        let n = self.total();
        n * n - self.0.iter().map(|m| m * m).sum::<usize>()
    }

    /// `n - m_1`.
    pub fn rank_defect(&self) -> usize {
        self.total() - self.0.first().copied().unwrap_or(0)
    }

    /// Every component divisible by `d`, divided through.
    pub fn divided_by(&self, d: usize) -> Option<MultiplicityVector> {
        if d == 0 || self.0.iter().any(|m| m % d != 0) {
            return None;
        }
        Some(MultiplicityVector(self.0.iter().map(|m| m / d).collect()))
    }
}

impl fmt::Display for MultiplicityVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_tuple(f, &self.0)
    }
}

/// One eigenvalue of a Jordan form with its block sizes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EigenSlot {
    pub label: String,
    pub blocks: Partition,
}

impl EigenSlot {
    pub fn new(label: impl Into<String>, blocks: Partition) -> Self {
        EigenSlot {
            label: label.into(),
            blocks,
        }
    }

    /// Algebraic multiplicity.
    pub fn multiplicity(&self) -> usize {
        self.blocks.weight()
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }
}

/// Jordan normal form of one `n × n` matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct JordanForm {
    n: usize,
    groups: Vec<EigenSlot>,
}

impl JordanForm {
    pub fn new(groups: Vec<EigenSlot>) -> Result<Self, JnfError> {
        if groups.is_empty() {
            return Err(JnfError::EmptyForm);
        }
        let mut seen = HashSet::new();
        for g in &groups {
            if !seen.insert(g.label.as_str()) {
                return Err(JnfError::DuplicateLabel(g.label.clone()));
            }
        }
        let n = groups.iter().map(EigenSlot::multiplicity).sum();
        Ok(JordanForm { n, groups })
    }

    /// Builds a form and checks it against a declared size.
    pub fn with_size(n: usize, groups: Vec<EigenSlot>) -> Result<Self, JnfError> {
        if n == 0 {
            return Err(JnfError::ZeroSize);
        }
        let form = JordanForm::new(groups)?;
        if form.n != n {
            return Err(JnfError::DeclaredSize {
                declared: n,
                actual: form.n,
            });
        }
        Ok(form)
    }

    /// Diagonal form with the given eigenvalue multiplicities, labelled `e0, e1, ...`.
    pub fn diagonal(mv: &[usize]) -> Result<Self, JnfError> {
        let groups = mv
            .iter()
            .enumerate()
            .map(|(k, &m)| Ok(EigenSlot::new(format!("e{k}"), Partition::new(vec![1; m])?)))
            .collect::<Result<Vec<_>, JnfError>>()?;
        JordanForm::new(groups)
    }

    /// Form with explicit block partitions, labelled `e0, e1, ...`.
    pub fn from_blocks(blocks: &[&[usize]]) -> Result<Self, JnfError> {
        let groups = blocks
            .iter()
            .enumerate()
            .map(|(k, b)| Ok(EigenSlot::new(format!("e{k}"), Partition::new(b.to_vec())?)))
            .collect::<Result<Vec<_>, JnfError>>()?;
        JordanForm::new(groups)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn groups(&self) -> &[EigenSlot] {
        &self.groups
    }

    /// Largest number of Jordan blocks sharing one eigenvalue.
    pub fn max_block_count(&self) -> usize {
        self.groups.iter().map(EigenSlot::block_count).max().unwrap_or(0)
    }

    /// Indices of slots attaining [`Self::max_block_count`], in stored order.
    pub fn max_count_slots(&self) -> Vec<usize> {
        let max = self.max_block_count();
        self.groups
            .iter()
            .enumerate()
            .filter(|(_, g)| g.block_count() == max)
            .map(|(k, _)| k)
            .collect()
    }

    /// `r(J) = min_λ rk(J - λI) = n - (largest block count of one eigenvalue)`.
    pub fn rank_defect(&self) -> usize {
        self.n - self.max_block_count()
    }

    /// Disjoint union of the dual partitions of every slot.
    pub fn corresponding_diagonal(&self) -> MultiplicityVector {
        MultiplicityVector::new(self.groups.iter().flat_map(|g| g.blocks.dual().0).collect())
    }

    /// `d(J)`, computed from the corresponding diagonal multiplicities.
    pub fn class_dimension(&self) -> usize {
        self.corresponding_diagonal().class_dimension()
    }

    pub fn is_diagonal(&self) -> bool {
        self.groups.iter().all(|g| g.blocks.parts()[0] == 1)
    }

    /// A single eigenvalue with only `1 × 1` blocks.
    pub fn is_scalar(&self) -> bool {
        self.groups.len() == 1 && self.is_diagonal()
    }

    /// Eigenvalue multiplicities in stored slot order (not sorted).
    pub fn slot_multiplicities(&self) -> Vec<usize> {
        self.groups.iter().map(EigenSlot::multiplicity).collect()
    }

    /// The multiplicity vector when the form is diagonal.
    pub fn multiplicity_vector(&self) -> Option<MultiplicityVector> {
        self.is_diagonal()
            .then(|| MultiplicityVector::new(self.slot_multiplicities()))
    }

    /// The diagonal form whose multiplicities are [`Self::corresponding_diagonal`].
    pub fn to_corresponding_diagonal(&self) -> JordanForm {
        JordanForm::diagonal(self.corresponding_diagonal().components()).expect("dual partitions are nonempty")
    }
}

impl fmt::Display for JordanForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(mv) = self.multiplicity_vector() {
            return write!(f, "{mv}");
        }
        f.write_str("{")?;
        for (i, g) in self.groups.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", g.blocks)?;
        }
        f.write_str("}")
    }
}

/// The `(p+1)`-tuple of Jordan forms, all of size `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ClassTuple {
    mode: Mode,
    n: usize,
    forms: Vec<JordanForm>,
}

impl ClassTuple {
    pub fn new(mode: Mode, forms: Vec<JordanForm>) -> Result<Self, JnfError> {
        if forms.len() < 2 {
            return Err(JnfError::TooFewForms(forms.len()));
        }
        let n = forms[0].n();
        if n == 0 {
            return Err(JnfError::ZeroSize);
        }
        for (j, f) in forms.iter().enumerate() {
            if f.n() != n {
                return Err(JnfError::SizeMismatch {
                    form: j,
                    expected: n,
                    found: f.n(),
                });
            }
        }
        Ok(ClassTuple { mode, n, forms })
    }

    /// Tuple of diagonal forms given by their multiplicity vectors.
    pub fn diagonal(mode: Mode, pmv: &[&[usize]]) -> Result<Self, JnfError> {
        let forms = pmv
            .iter()
            .map(|mv| JordanForm::diagonal(mv))
            .collect::<Result<Vec<_>, _>>()?;
        ClassTuple::new(mode, forms)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn forms(&self) -> &[JordanForm] {
        &self.forms
    }

    /// Number of matrices, `p + 1`.
    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    pub fn is_diagonal(&self) -> bool {
        self.forms.iter().all(JordanForm::is_diagonal)
    }

    /// Index of rigidity `κ = 2n² - Σ d_j`.
    pub fn rigidity_index(&self) -> i64 {
        let n = self.n as i64;
        2 * n * n - self.forms.iter().map(|f| f.class_dimension() as i64).sum::<i64>()
    }

    pub fn check_conditions(&self) -> ConditionReport {
        ConditionReport::new(self)
    }

    /// Formwise image under the correspondence `J ↦ J'`.
    pub fn to_corresponding_diagonal(&self) -> ClassTuple {
        ClassTuple {
            mode: self.mode,
            n: self.n,
            forms: self.forms.iter().map(JordanForm::to_corresponding_diagonal).collect(),
        }
    }

    /// The polymultiplicity vector, if every form is diagonal.
    pub fn pmv(&self) -> Option<Vec<MultiplicityVector>> {
        self.forms.iter().map(JordanForm::multiplicity_vector).collect()
    }
}

impl fmt::Display for ClassTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} [", self.n)?;
        for (i, form) in self.forms.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{form}")?;
        }
        f.write_str("]")
    }
}

/// The necessary conditions `(α)`, `(β)` and the termination condition `(ω)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub n: usize,
    pub r: Vec<usize>,
    pub d: Vec<usize>,
    pub sum_r: usize,
    pub sum_d: usize,
    pub kappa: i64,
    /// `Σ d_j ≥ 2n² - 2`.
    pub alpha: bool,
    /// `Σ_{i≠j} r_i ≥ n` for every `j`.
    pub beta: bool,
    /// `Σ r_j ≥ 2n`.
    pub omega: bool,
    /// Forms `j` for which the `(β)` inequality fails.
    pub beta_failures: Vec<usize>,
}

impl ConditionReport {
    fn new(t: &ClassTuple) -> Self {
        let n = t.n();
        let r: Vec<usize> = t.forms().iter().map(JordanForm::rank_defect).collect();
        let d: Vec<usize> = t.forms().iter().map(JordanForm::class_dimension).collect();
        let sum_r: usize = r.iter().sum();
        let sum_d: usize = d.iter().sum();
        let beta_failures: Vec<usize> = r
            .iter()
            .enumerate()
            .filter(|(_, &rj)| sum_r - rj < n)
            .map(|(j, _)| j)
            .collect();
        ConditionReport {
            n,
            kappa: t.rigidity_index(),
            alpha: sum_d + 2 >= 2 * n * n,
            beta: beta_failures.is_empty(),
            omega: sum_r >= 2 * n,
            r,
            d,
            sum_r,
            sum_d,
            beta_failures,
        }
    }
}
