use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::linalg::{
    annihilator, c, frobenius, identity, mat_of, nullity, orbit_span, smallest_right_singular_vectors, vec_of, CMatrix,
    C64,
};
use super::{tuple_residual, ConcreteClass, Witness, WitnessError};

/// Relative singular-value threshold for rank decisions.
pub const RANK_TOL: f64 = 1e-8;

/// Random algebra elements tried by [`find_invariant_subspace`].
const SUBSPACE_ATTEMPTS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub n: usize,
    pub product_residual: f64,
    pub class_residuals: Vec<f64>,
    pub burnside_dim: usize,
    pub centralizer_dim: usize,
    /// Orthonormal basis (columns) of a proper invariant subspace, if one was found.
    pub invariant_subspace: Option<CMatrix>,
}

impl Diagnostics {
    pub fn irreducible(&self) -> bool {
        self.burnside_dim == self.n * self.n
    }

    pub fn max_class_residual(&self) -> f64 {
        self.class_residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Orthonormal (Frobenius) basis of the unital algebra generated by `matrices`.
fn algebra_basis(matrices: &[CMatrix], tol: f64) -> Vec<CMatrix> {
    let n = matrices[0].nrows();
    let id = identity(n);
    // vec_r(M B) = (M ⊗ I) vec_r(B)
    let ops: Vec<CMatrix> = matrices.iter().map(|m| m.kronecker(&id)).collect();
    let span = orbit_span(&vec_of(&id), &ops, tol);
    span.column_iter().map(|c| mat_of(&c.into_owned(), n)).collect()
}

/// Dimension of the algebra spanned by all words in `matrices` (the empty word included).
pub fn burnside_dimension(matrices: &[CMatrix], tol: f64) -> usize {
    if matrices.is_empty() {
        return 0;
    }
    algebra_basis(matrices, tol).len()
}

/// Dimension of `{X : X M_j = M_j X for all j}`.
pub fn centralizer_dimension(matrices: &[CMatrix], tol: f64) -> usize {
    let Some(first) = matrices.first() else {
        return 0;
    };
    let n = first.nrows();
    let nn = n * n;
    let mut op = CMatrix::zeros(matrices.len() * nn, nn);
    let id = identity(n);
    for (j, m) in matrices.iter().enumerate() {
        // vec_r(X M − M X) = (I ⊗ M^T − M ⊗ I) vec_r(X)
        let block = id.kronecker(&m.transpose()) - m.kronecker(&id);
        op.view_mut((j * nn, 0), (nn, nn)).copy_from(&block);
    }
    nullity(&op, tol).max(1)
}

fn is_invariant(u: &CMatrix, matrices: &[CMatrix], tol: f64) -> bool {
    let n = u.nrows();
    let proj = identity(n) - u * u.adjoint();
    matrices
        .iter()
        .all(|m| frobenius(&(&proj * m * u)) <= 100.0 * tol * frobenius(m).max(1.0))
}

fn random_complex(rng: &mut ChaCha8Rng) -> C64 {
    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Randomized search for a common proper invariant subspace (smallest found).
pub fn find_invariant_subspace(matrices: &[CMatrix], tol: f64, seed: u64) -> Option<CMatrix> {
    find_invariant_subspace_with(matrices, tol, seed, SUBSPACE_ATTEMPTS)
}

pub fn find_invariant_subspace_with(matrices: &[CMatrix], tol: f64, seed: u64, attempts: usize) -> Option<CMatrix> {
    let n = matrices.first()?.nrows();
    if n < 2 {
        return None;
    }
    let basis = algebra_basis(matrices, tol);
    if basis.len() == n * n {
        // full matrix algebra: only trivial invariant subspaces
        return None;
    }
    let transposes: Vec<CMatrix> = matrices.iter().map(|m| m.transpose()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<CMatrix> = None;
    let consider = |u: CMatrix, best: &mut Option<CMatrix>| {
        let k = u.ncols();
        if k == 0 || k >= n || !is_invariant(&u, matrices, tol) {
            return;
        }
        if best.as_ref().is_none_or(|b| k < b.ncols()) {
            *best = Some(u);
        }
    };
    for _ in 0..attempts {
        let a = basis
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, b| acc + b * random_complex(&mut rng));
        let t = a.clone().schur().unpack().1;
        for i in 0..n {
            let lambda = t[(i, i)];
            let shifted = &a - identity(n) * lambda;
            let v = smallest_right_singular_vectors(&shifted, 1).column(0).into_owned();
            consider(orbit_span(&v, matrices, tol), &mut best);
            let w = smallest_right_singular_vectors(&shifted.transpose(), 1)
                .column(0)
                .into_owned();
            let wspan = orbit_span(&w, &transposes, tol);
            if wspan.ncols() < n {
                consider(annihilator(&wspan, tol), &mut best);
            }
        }
        if best.as_ref().is_some_and(|b| b.ncols() == 1) {
            break;
        }
    }
    best
}

/// Class-membership defect: power-sum traces `k = 1..n` plus annihilation by
/// `Π_σ (M − σI)^{b_σ}`, with `b_σ` the largest block at `σ`.
pub fn class_residual(m: &CMatrix, class: &ConcreteClass) -> f64 {
    let n = m.nrows();
    let targets = class.power_sums(n);
    let mut power = identity(n);
    let mut sq = 0.0;
    for target in targets {
        power = &power * m;
        sq += (power.trace() - target).norm_sqr();
    }
    let mut ann = identity(n);
    for (v, b) in class.complex_values().into_iter().zip(class.max_blocks()) {
        let shifted = m - identity(n) * v;
        for _ in 0..b {
            ann = &ann * &shifted;
        }
    }
    (sq + ann.iter().map(Complex::norm_sqr).sum::<f64>()).sqrt()
}

/// Recomputes residuals and irreducibility data from the matrices alone.
pub fn verify_witness(w: &Witness, classes: &[ConcreteClass], tol: f64) -> Result<Diagnostics, WitnessError> {
    let n = w.n();
    if w.matrices.is_empty() || w.matrices.len() != classes.len() {
        return Err(WitnessError::SizeMismatch(format!(
            "{} matrices for {} classes",
            w.matrices.len(),
            classes.len()
        )));
    }
    for (j, (m, cl)) in w.matrices.iter().zip(classes).enumerate() {
        if m.nrows() != n || m.ncols() != n || cl.n() != n {
            return Err(WitnessError::SizeMismatch(format!(
                "matrix {j} is {}×{}, class has size {}, expected {n}",
                m.nrows(),
                m.ncols(),
                cl.n()
            )));
        }
        if cl.mode() != w.mode {
            return Err(WitnessError::SizeMismatch(format!("class {j} has mode {}", cl.mode())));
        }
    }
    let burnside_dim = burnside_dimension(&w.matrices, tol);
    let invariant_subspace = if burnside_dim == n * n {
        None
    } else {
        find_invariant_subspace(&w.matrices, tol, 0)
    };
    Ok(Diagnostics {
        n,
        product_residual: tuple_residual(w.mode, &w.matrices),
        class_residuals: w
            .matrices
            .iter()
            .zip(classes)
            .map(|(m, cl)| class_residual(m, cl))
            .collect(),
        burnside_dim,
        centralizer_dim: centralizer_dimension(&w.matrices, tol),
        invariant_subspace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jnf::{JordanForm, Mode};
    use crate::spectra::{rat, ExactEigen};

    fn m2(a: [[f64; 2]; 2]) -> CMatrix {
        CMatrix::from_fn(2, 2, |i, j| c(a[i][j], 0.0))
    }

    fn block_diag(a: &CMatrix, b: &CMatrix) -> CMatrix {
        let (p, q) = (a.nrows(), b.nrows());
        let mut m = CMatrix::zeros(p + q, p + q);
        m.view_mut((0, 0), (p, p)).copy_from(a);
        m.view_mut((p, p), (q, q)).copy_from(b);
        m
    }

    #[test]
    fn identity_alone() {
        assert_eq!(burnside_dimension(&[identity(2)], RANK_TOL), 1);
        assert_eq!(centralizer_dimension(&[identity(2)], RANK_TOL), 4);
        assert!(find_invariant_subspace(&[identity(2)], RANK_TOL, 0).is_some());
    }

    #[test]
    fn irreducible_pair() {
        let a = m2([[1.0, 1.0], [0.0, 2.0]]);
        let b = m2([[3.0, 0.0], [1.0, 5.0]]);
        // Invariant lines of a: spans of (1,0) and (1,1); of b: (0,1) and (2,1). None shared.
        let ms = [a, b];
        assert_eq!(burnside_dimension(&ms, RANK_TOL), 4);
        assert_eq!(centralizer_dimension(&ms, RANK_TOL), 1);
        assert!(find_invariant_subspace(&ms, RANK_TOL, 3).is_none());
    }

    #[test]
    fn triangular_pair() {
        let a = m2([[1.0, 1.0], [0.0, 2.0]]);
        let b = m2([[3.0, 7.0], [0.0, 5.0]]);
        let ms = [a, b];
        assert!(burnside_dimension(&ms, RANK_TOL) <= 3);
        let u = find_invariant_subspace(&ms, RANK_TOL, 1).unwrap();
        assert_eq!(u.ncols(), 1);
        assert!(u[(1, 0)].norm() < 1e-10);
    }

    #[test]
    fn direct_sum_of_inequivalent_irreducibles() {
        let a = m2([[1.0, 1.0], [0.0, 2.0]]);
        let b = m2([[3.0, 0.0], [1.0, 5.0]]);
        let a2 = m2([[0.0, 1.0], [-1.0, 0.0]]);
        let b2 = m2([[2.0, 3.0], [0.0, -1.0]]);
        let ms = [block_diag(&a, &a2), block_diag(&b, &b2)];
        assert_eq!(centralizer_dimension(&ms, RANK_TOL), 2);
        assert_eq!(burnside_dimension(&ms, RANK_TOL), 8);
        assert_eq!(find_invariant_subspace(&ms, RANK_TOL, 0).unwrap().ncols(), 2);
    }

    #[test]
    fn scalar_tuple() {
        let s = identity(2) * c(0.0, 1.0);
        assert_eq!(centralizer_dimension(&[s.clone(), s.clone(), s], RANK_TOL), 4);
    }

    #[test]
    fn identity_with_nontrivial_classes() {
        let jnf = JordanForm::diagonal(&[1, 1]).unwrap();
        let cl = ConcreteClass::new(jnf, vec![ExactEigen::Angle(rat(1, 4)), ExactEigen::Angle(rat(3, 4))]).unwrap();
        let w = Witness::new(Mode::Multiplicative, vec![identity(2), identity(2)]);
        let d = verify_witness(&w, &[cl.clone(), cl.clone()], RANK_TOL).unwrap();
        assert!(d.product_residual < 1e-15);
        assert!(d.class_residuals.iter().all(|&r| r > 0.5));
        let w3 = Witness::new(Mode::Multiplicative, vec![identity(3), identity(3)]);
        assert!(matches!(
            verify_witness(&w3, &[cl.clone(), cl], RANK_TOL),
            Err(WitnessError::SizeMismatch(_))
        ));
    }

    #[test]
    fn jordan_class_residual() {
        let jnf = JordanForm::from_blocks(&[&[2]]).unwrap();
        let cl = ConcreteClass::new(jnf, vec![ExactEigen::Value(rat(1, 1))]).unwrap();
        assert!(class_residual(&cl.normal_form(), &cl) < 1e-14);
        assert!(class_residual(&(identity(2) * c(2.0, 0.0)), &cl) > 0.5);
        // the defect only sees the closure of a Jordan class
        assert!(class_residual(&identity(2), &cl) < 1e-14);
    }
}
