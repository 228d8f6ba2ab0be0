//! Small dense complex linear algebra on top of nalgebra.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Singular values, largest first. Wide matrices are padded so the count is always `ncols`.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.resize(m.ncols().max(sv.len()), 0.0);
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

pub fn condition_number(m: &CMatrix) -> f64 {
    let sv = singular_values(m);
    let lo = *sv.last().unwrap_or(&0.0);
    if lo == 0.0 {
        f64::INFINITY
    } else {
        sv[0] / lo
    }
}

/// Dimension of the numerical kernel, `ncols` minus [`gap_rank`].
pub fn nullity(m: &CMatrix, rel_tol: f64) -> usize {
    m.ncols() - gap_rank(&singular_values(m), rel_tol)
}

/// Orthonormal basis (as columns) of the right singular vectors for the `k`
/// smallest singular values.
pub fn smallest_right_singular_vectors(m: &CMatrix, k: usize) -> CMatrix {
    let cols = m.ncols();
    let padded = if m.nrows() < cols {
        let mut p = CMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[a]
            .partial_cmp(&svd.singular_values[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out = CMatrix::zeros(cols, k);
    for (col, &i) in order.iter().take(k).enumerate() {
        for r in 0..cols {
            out[(r, col)] = v_t[(i, r)].conj();
        }
    }
    out
}

/// Ratio between consecutive singular values treated as a rank gap.
const GAP: f64 = 1e-4;

/// Numerical rank of descending singular values: the count above
/// `rel_tol · σ_max`, cut earlier at a drop by [`GAP`] into values below
/// `√rel_tol · σ_max`. The early cut matters when rounding noise has been
/// amplified close to `rel_tol` while the genuine values stay well above it.
pub fn gap_rank(sv: &[f64], rel_tol: f64) -> usize {
    let Some(&top) = sv.first() else {
        return 0;
    };
    if top == 0.0 {
        return 0;
    }
    let plain = sv.iter().take_while(|&&s| s > rel_tol * top).count();
    (1..plain)
        .find(|&i| sv[i] < rel_tol.sqrt() * top && sv[i] < GAP * sv[i - 1])
        .unwrap_or(plain)
}

/// Orthonormal basis (columns) of the smallest subspace containing `start`
/// and invariant under every operator in `ops`.
///
/// Each round appends the images of the current basis, normalizes the
/// columns and truncates by SVD at `rel_tol · σ_max`, so rounding noise is
/// discarded instead of being promoted to a basis direction.
pub fn orbit_span(start: &CVector, ops: &[CMatrix], rel_tol: f64) -> CMatrix {
    let dim = start.len();
    let norm = start.norm();
    if norm == 0.0 {
        return CMatrix::zeros(dim, 0);
    }
    let mut basis = CMatrix::from_columns(&[start.unscale(norm)]);
    loop {
        let k = basis.ncols();
        let mut cols: Vec<CVector> = basis.column_iter().map(|c| c.into_owned()).collect();
        for op in ops {
            let img = op * &basis;
            for c in img.column_iter() {
                let nrm = c.norm();
                if nrm > 0.0 {
                    cols.push(c.unscale(nrm));
                }
            }
        }
        let stack = CMatrix::from_columns(&cols);
        let svd = stack.svd(true, false);
        let u = svd.u.expect("requested U");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| {
            svd.singular_values[b]
                .partial_cmp(&svd.singular_values[a])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let sorted: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
        let rank = gap_rank(&sorted, rel_tol).min(dim);
        if rank <= k {
            return basis;
        }
        basis = CMatrix::from_columns(
            &order[..rank]
                .iter()
                .map(|&i| u.column(i).into_owned())
                .collect::<Vec<_>>(),
        );
        if rank == dim {
            return basis;
        }
    }
}

/// Row-major flattening `m[(r, c)] ↦ r·ncols + c`.
pub fn vec_of(m: &CMatrix) -> CVector {
    let (r, c) = m.shape();
    CVector::from_fn(r * c, |i, _| m[(i / c, i % c)])
}

pub fn mat_of(v: &CVector, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |r, c| v[r * n + c])
}

/// Entries uniform on the unit disc.
pub fn random_disc_matrix<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| loop {
        let re: f64 = rng.random_range(-1.0..1.0);
        let im: f64 = rng.random_range(-1.0..1.0);
        if re * re + im * im <= 1.0 {
            break c(re, im);
        }
    })
}

/// Random frame with condition number at most `max_cond`.
pub fn random_frame<R: Rng>(n: usize, max_cond: f64, rng: &mut R) -> CMatrix {
    loop {
        let q = random_disc_matrix(n, rng);
        if condition_number(&q) <= max_cond {
            return q;
        }
    }
}

fn split(m: &CMatrix) -> (DMatrix<f64>, DMatrix<f64>) {
    (m.map(|z| z.re), m.map(|z| z.im))
}

/// Complex product through four real GEMMs, much faster than the generic
/// complex kernel for the Jacobian-sized matrices used here.
pub fn cmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    CMatrix::from_fn(re.nrows(), re.ncols(), |i, j| c(re[(i, j)], im[(i, j)]))
}

/// Ordered product `m_0 m_1 ... m_k`; identity for an empty slice.
pub fn product(ms: &[CMatrix], n: usize) -> CMatrix {
    ms.iter().fold(identity(n), |acc, m| acc * m)
}

/// Orthonormal basis of `{x : w^T x = 0 for every column w}`.
pub fn annihilator(w: &CMatrix, rel_tol: f64) -> CMatrix {
    let wt = w.transpose();
    let k = nullity(&wt, rel_tol);
    smallest_right_singular_vectors(&wt, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn orbit_span_of_invariant_line() {
        let a = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(1.0, 0.0),
                c(2.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(3.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(5.0, 0.0),
            ],
        );
        let e0 = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let e1 = CVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(orbit_span(&e0, std::slice::from_ref(&a), 1e-10).ncols(), 1);
        assert_eq!(orbit_span(&e1, std::slice::from_ref(&a), 1e-10).ncols(), 2);
        assert_eq!(orbit_span(&(e0 + e1 * c(0.0, 1.0)), &[a], 1e-10).ncols(), 2);
    }

    #[test]
    fn gap_cuts_amplified_noise() {
        assert_eq!(gap_rank(&[1.0, 0.2, 3e-8, 1e-9], 1e-8), 2);
        assert_eq!(gap_rank(&[1.0, 1e-3, 1e-5], 1e-8), 3);
        assert_eq!(gap_rank(&[1.0, 1e-9], 1e-8), 1);
        assert_eq!(gap_rank(&[0.0, 0.0], 1e-8), 0);
    }

    #[test]
    fn real_split_product_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_disc_matrix(5, &mut rng);
        let b = CMatrix::from_fn(5, 3, |i, j| c(i as f64 - 1.5, j as f64 * 0.25));
        assert!((cmul(&a, &b) - &a * &b).norm() < 1e-12);
    }

    #[test]
    fn nullity_and_kernel() {
        let m = CMatrix::from_row_slice(
            2,
            3,
            &[
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(1.0, 0.0),
                c(0.0, 0.0),
            ],
        );
        assert_eq!(nullity(&m, 1e-10), 1);
        let k = smallest_right_singular_vectors(&m, 1);
        assert!((k[(2, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_frames_are_conditioned() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let q = random_frame(5, 1e3, &mut rng);
            assert!(condition_number(&q) <= 1e3);
        }
    }

    #[test]
    fn annihilator_of_a_line() {
        let w = CMatrix::from_column_slice(3, 1, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let a = annihilator(&w, 1e-10);
        assert_eq!(a.ncols(), 2);
        assert!((w.transpose() * &a).norm() < 1e-12);
    }
}
