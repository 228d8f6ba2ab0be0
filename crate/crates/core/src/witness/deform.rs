//! Predictor–corrector continuation of a witness along a path of exact spectra.
//!
//! Each matrix is kept as `M_j = Q_j G_j(s) Q_j^{-1}` with `G_j(s)` upper
//! triangular; its diagonal moves linearly in `s` (the eigenvalue shift) and
//! the frames are Newton-corrected (`Q_j ← (I + Y_j) Q_j`) to restore the
//! product condition, using the minimum-norm solution of the linearized system.

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::diagnostics::{centralizer_dimension, RANK_TOL};
use super::linalg::{c, frobenius, identity, mat_of, vec_of, CMatrix};
use super::search::semisimple_frame;
use super::{conjugate, product_jacobian, residual_matrix, tuple_residual, ConcreteClass, Witness, WitnessError};
use crate::jnf::Mode;
use crate::spectra::{format_rational, rat, reduce_angle, ExactEigen, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeformOptions {
    pub steps: usize,
    pub tol: f64,
    pub newton_iterations: usize,
}

impl Default for DeformOptions {
    fn default() -> Self {
        DeformOptions {
            steps: 20,
            tol: 1e-10,
            newton_iterations: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeformReport {
    pub witness: Witness,
    pub classes: Vec<ConcreteClass>,
    /// Product residual after correction, per step.
    pub step_residuals: Vec<f64>,
    pub newton_iterations: Vec<usize>,
    pub centralizer_dim: usize,
}

/// Per class: the source slot, target slot and exact start/increment of every diagonal position.
struct Path {
    source_slot: Vec<usize>,
    target_slot: Vec<usize>,
    start: Vec<BigRational>,
    delta: Vec<BigRational>,
    /// Positions carrying a superdiagonal one to their right neighbour.
    chained: Vec<bool>,
    split: bool,
}

fn positions(class: &ConcreteClass) -> (Vec<usize>, Vec<usize>, Vec<bool>) {
    let mut slot = Vec::new();
    let mut depth = Vec::new();
    let mut chained = Vec::new();
    for (k, g) in class.jnf().groups().iter().enumerate() {
        for &b in g.blocks.parts() {
            for i in 0..b {
                slot.push(k);
                depth.push(i);
                chained.push(i + 1 < b);
            }
        }
    }
    (slot, depth, chained)
}

fn build_path(mode: Mode, source: &ConcreteClass, target: &ConcreteClass, j: usize) -> Result<Path, WitnessError> {
    let (slot, depth, chained) = positions(source);
    let src_groups = source.jnf().groups();
    let tgt_groups = target.jnf().groups();
    let same_shape =
        src_groups.len() == tgt_groups.len() && src_groups.iter().zip(tgt_groups).all(|(a, b)| a.blocks == b.blocks);
    let target_slot: Vec<usize> = if same_shape {
        slot.clone()
    } else {
        // Jordan → corresponding diagonal: slot k position s ↦ target slot (k, s).
        let mut offsets = Vec::with_capacity(src_groups.len());
        let mut expected = Vec::new();
        for g in src_groups {
            offsets.push(expected.len());
            expected.extend(g.blocks.dual().parts().iter().copied());
        }
        if !target.is_semisimple() || target.jnf().slot_multiplicities() != expected {
            return Err(WitnessError::NotHomotopic(format!(
                "class {j}: target {} is neither the source shape nor its corresponding diagonal",
                target.jnf()
            )));
        }
        slot.iter().zip(&depth).map(|(&k, &s)| offsets[k] + s).collect()
    };
    let mut start = Vec::new();
    let mut delta = Vec::new();
    for (&k, &t) in slot.iter().zip(&target_slot) {
        let a = source.values()[k].rational().clone();
        let b = target.values()[t].rational().clone();
        let mut d = &b - &a;
        if mode == Mode::Multiplicative {
            d = reduce_angle(&d);
            if d > rat(1, 2) {
                d -= BigRational::one();
            }
        }
        start.push(a);
        delta.push(d);
    }
    Ok(Path {
        source_slot: slot,
        target_slot,
        start,
        delta,
        chained,
        split: !same_shape,
    })
}

impl Path {
    fn values_at(&self, s: &BigRational) -> Vec<BigRational> {
        self.start.iter().zip(&self.delta).map(|(a, d)| a + d * s).collect()
    }

    fn normal_form(&self, mode: Mode, s: &BigRational) -> CMatrix {
        let vals = self.values_at(s);
        let n = vals.len();
        let mut g = CMatrix::zeros(n, n);
        for (i, v) in vals.iter().enumerate() {
            let (re, im) = ExactEigen::new(mode, v.clone()).to_complex();
            g[(i, i)] = c(re, im);
            if self.chained[i] {
                g[(i, i + 1)] = c(1.0, 0.0);
            }
        }
        g
    }

    /// Distinct target slots must carry distinct values (source slots at `s = 0`).
    fn check_distinct(&self, mode: Mode, s: &BigRational, j: usize) -> Result<(), WitnessError> {
        let vals: Vec<BigRational> = self
            .values_at(s)
            .into_iter()
            .map(|v| ExactEigen::new(mode, v).rational().clone())
            .collect();
        let key = if s.is_zero() {
            &self.source_slot
        } else {
            &self.target_slot
        };
        for a in 0..vals.len() {
            for b in 0..a {
                if (key[a] == key[b]) != (vals[a] == vals[b]) {
                    return Err(WitnessError::NotHomotopic(format!(
                        "class {j}: eigenvalues collide at s = {}",
                        format_rational(s)
                    )));
                }
            }
        }
        Ok(())
    }
}

fn frame_for(w: &Witness, j: usize, class: &ConcreteClass) -> Result<CMatrix, WitnessError> {
    let m = &w.matrices[j];
    let g = class.normal_form();
    if let Some(q) = w.frames.as_ref().and_then(|fs| fs.get(j)) {
        if let Some(qi) = q.clone().try_inverse() {
            if frobenius(&(q * &g * qi - m)) <= 1e-8 * frobenius(m).max(1.0) {
                return Ok(q.clone());
            }
        }
    }
    if class.is_semisimple() {
        let q = semisimple_frame(m, class);
        if q.clone().try_inverse().is_some() {
            return Ok(q);
        }
    }
    Err(WitnessError::UnsupportedClass(format!(
        "no conjugating frame for matrix {j} in class {}",
        class.jnf()
    )))
}

/// Deforms `w` (in `source`) to the classes `target` over `opts.steps` exact increments.
pub fn deform_tuple(
    w: &Witness,
    source: &[ConcreteClass],
    target: &[ConcreteClass],
    opts: &DeformOptions,
) -> Result<DeformReport, WitnessError> {
    let mode = w.mode;
    let count = w.matrices.len();
    if source.len() != count || target.len() != count {
        return Err(WitnessError::SizeMismatch(format!(
            "{count} matrices, {} source and {} target classes",
            source.len(),
            target.len()
        )));
    }
    let n = w.n();
    if source.iter().chain(target).any(|cl| cl.n() != n || cl.mode() != mode) {
        return Err(WitnessError::SizeMismatch("classes do not match the witness".into()));
    }
    if opts.steps == 0 {
        return Err(WitnessError::NotHomotopic("at least one step is required".into()));
    }
    let centralizer = centralizer_dimension(&w.matrices, RANK_TOL);
    if centralizer != 1 {
        return Err(WitnessError::CentralizerNontrivial(centralizer));
    }
    let paths: Vec<Path> = source
        .iter()
        .zip(target)
        .enumerate()
        .map(|(j, (a, b))| build_path(mode, a, b, j))
        .collect::<Result<_, _>>()?;
    let steps: Vec<BigRational> = (1..=opts.steps).map(|i| rat(i as i64, opts.steps as i64)).collect();
    for s in &steps {
        let total = paths
            .iter()
            .flat_map(|p| p.values_at(s))
            .fold(BigRational::zero(), |acc, v| acc + v);
        let ok = match mode {
            Mode::Additive => total.is_zero(),
            Mode::Multiplicative => total.is_integer(),
        };
        if !ok {
            return Err(WitnessError::NotHomotopic(format!(
                "eigenvalue constraint fails at s = {}",
                format_rational(s)
            )));
        }
        for (j, p) in paths.iter().enumerate() {
            p.check_distinct(mode, s, j)?;
        }
    }

    let mut frames: Vec<CMatrix> = source
        .iter()
        .enumerate()
        .map(|(j, cl)| frame_for(w, j, cl))
        .collect::<Result<_, _>>()?;
    let mut step_residuals = Vec::with_capacity(steps.len());
    let mut newton_iterations = Vec::with_capacity(steps.len());
    let nn = n * n;
    for (i, s) in steps.iter().enumerate() {
        let forms: Vec<CMatrix> = paths.iter().map(|p| p.normal_form(mode, s)).collect();
        let stuck = |residual| WitnessError::ContinuationStuck { step: i + 1, residual };
        let mut ms = conjugate(&frames, &forms).ok_or_else(|| stuck(f64::INFINITY))?;
        let mut res = tuple_residual(mode, &ms);
        let mut iters = 0;
        while iters < opts.newton_iterations && res >= 1e-3 * opts.tol {
            iters += 1;
            let jac = product_jacobian(mode, &ms);
            let rhs = vec_of(&residual_matrix(mode, &ms));
            let svd = jac.svd(true, true);
            let cutoff = 1e-10 * svd.singular_values.max();
            let step = -svd.solve(&rhs, cutoff).map_err(|_| stuck(res))?;
            let trial: Vec<CMatrix> = frames
                .iter()
                .enumerate()
                .map(|(j, q)| (identity(n) + mat_of(&step.rows(j * nn, nn).into_owned(), n)) * q)
                .collect();
            let Some(next) = conjugate(&trial, &forms) else { break };
            let next_res = tuple_residual(mode, &next);
            if next_res >= res && res < opts.tol {
                break;
            }
            frames = trial;
            ms = next;
            let prev = res;
            res = next_res;
            if res < opts.tol && res > 0.5 * prev {
                break;
            }
        }
        // a NaN residual is stuck as well
        if res.is_nan() || res >= opts.tol {
            return Err(stuck(res));
        }
        step_residuals.push(res);
        newton_iterations.push(iters);
        if i + 1 == steps.len() {
            for ((q, p), (m, cl)) in frames.iter_mut().zip(&paths).zip(ms.iter().zip(target)) {
                if p.split {
                    *q = semisimple_frame(m, cl);
                }
            }
            let centralizer_dim = centralizer_dimension(&ms, RANK_TOL);
            let witness = Witness::new(mode, ms).with_frames(frames.clone());
            return Ok(DeformReport {
                witness,
                classes: target.to_vec(),
                step_residuals,
                newton_iterations,
                centralizer_dim,
            });
        }
    }
    unreachable!("at least one step")
}

/// [`deform_tuple`] towards the diagonal classes of `target`.
pub fn deform_to_spectrum(
    w: &Witness,
    source: &[ConcreteClass],
    target: &Spectrum,
    opts: &DeformOptions,
) -> Result<DeformReport, WitnessError> {
    deform_tuple(w, source, &ConcreteClass::from_spectrum(target), opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jnf::{JordanForm, MultiplicityVector};
    use crate::spectra::{is_generic, sample_spectrum, SampleOptions, SampleTarget, SpectralValue};
    use crate::witness::{search_tuple, verify_witness, SearchOptions};

    fn generic_quadruple(seed: u64) -> Spectrum {
        let pmv = vec![MultiplicityVector::new(vec![1, 1]); 4];
        sample_spectrum(
            &pmv,
            Mode::Multiplicative,
            &SampleTarget::generic(),
            SampleOptions {
                seed,
                ..SampleOptions::default()
            },
        )
        .unwrap()
    }

    fn shifted(s: &Spectrum, by: BigRational) -> Spectrum {
        let mut forms: Vec<Vec<SpectralValue>> = s.forms().to_vec();
        forms[0][0].value += &by;
        forms[1][0].value -= &by;
        Spectrum::new(Mode::Multiplicative, forms).unwrap()
    }

    #[test]
    fn small_shift_keeps_trivial_centralizer() {
        let s = generic_quadruple(11);
        let source = ConcreteClass::from_spectrum(&s);
        let report = search_tuple(
            &source,
            &SearchOptions {
                restarts: 6,
                seed: 2,
                ..SearchOptions::default()
            },
        )
        .unwrap();
        let w = &report.witnesses[0].witness;
        let t = shifted(&s, rat(1, 101));
        assert!(is_generic(&t).unwrap().generic);
        let out = deform_to_spectrum(w, &source, &t, &DeformOptions::default()).unwrap();
        assert!(out.step_residuals.iter().all(|&r| r < 1e-10));
        assert_eq!(out.centralizer_dim, 1);
        let d = verify_witness(&out.witness, &out.classes, RANK_TOL).unwrap();
        assert!(d.max_class_residual() < 1e-9, "{:?}", d.class_residuals);
    }

    #[test]
    fn reducible_witness_is_refused() {
        let s = generic_quadruple(11);
        let classes = ConcreteClass::from_spectrum(&s);
        let diag: Vec<CMatrix> = classes.iter().map(|cl| cl.normal_form()).collect();
        // simultaneously diagonal: every diagonal matrix commutes with the tuple
        let w = Witness::new(Mode::Multiplicative, diag);
        assert!(matches!(
            deform_to_spectrum(&w, &classes, &s, &DeformOptions::default()),
            Err(WitnessError::CentralizerNontrivial(_))
        ));
    }

    #[test]
    fn jordan_block_splits_to_diagonal() {
        let pmv = vec![
            MultiplicityVector::new(vec![2]),
            MultiplicityVector::new(vec![1, 1]),
            MultiplicityVector::new(vec![1, 1]),
            MultiplicityVector::new(vec![1, 1]),
        ];
        let s = sample_spectrum(
            &pmv,
            Mode::Multiplicative,
            &SampleTarget::generic(),
            SampleOptions {
                seed: 4,
                ..SampleOptions::default()
            },
        )
        .unwrap();
        let mut source = ConcreteClass::from_spectrum(&s);
        source[0] = ConcreteClass::new(JordanForm::from_blocks(&[&[2]]).unwrap(), source[0].values().to_vec()).unwrap();
        let report = search_tuple(
            &source,
            &SearchOptions {
                restarts: 8,
                seed: 1,
                ..SearchOptions::default()
            },
        )
        .unwrap();
        let found = report
            .witnesses
            .iter()
            .find(|f| f.diagnostics.centralizer_dim == 1)
            .expect("irreducible witness");
        let sigma = s.forms()[0][0].value.clone();
        let eps = rat(1, 97);
        let mut target = ConcreteClass::from_spectrum(&s);
        target[0] = ConcreteClass::new(
            JordanForm::diagonal(&[1, 1]).unwrap(),
            vec![
                ExactEigen::new(Mode::Multiplicative, &sigma + &eps),
                ExactEigen::new(Mode::Multiplicative, &sigma - &eps),
            ],
        )
        .unwrap();
        let out = deform_tuple(&found.witness, &source, &target, &DeformOptions::default()).unwrap();
        let d = verify_witness(&out.witness, &target, RANK_TOL).unwrap();
        assert!(d.product_residual < 1e-10);
        assert!(d.max_class_residual() < 1e-9, "{:?}", d.class_residuals);
        // the first matrix is now diagonalizable: its eigenvector frame is well conditioned
        let q = &out.witness.frames.as_ref().unwrap()[0];
        assert!(crate::witness::linalg::condition_number(q) < 1e8);
    }

    #[test]
    fn incompatible_target_is_rejected() {
        let s = generic_quadruple(11);
        let source = ConcreteClass::from_spectrum(&s);
        let report = search_tuple(
            &source,
            &SearchOptions {
                restarts: 4,
                seed: 2,
                ..SearchOptions::default()
            },
        )
        .unwrap();
        let w = &report.witnesses[0].witness;
        let mut forms: Vec<Vec<SpectralValue>> = s.forms().to_vec();
        forms[0][0].value += rat(1, 7);
        let bad = Spectrum::new(Mode::Multiplicative, forms).unwrap();
        assert!(matches!(
            deform_to_spectrum(w, &source, &bad, &DeformOptions::default()),
            Err(WitnessError::NotHomotopic(_))
        ));
    }
}
