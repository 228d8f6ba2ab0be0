//! Block-diagonal witnesses assembled from independently solved sub-tuples.

use crate::jnf::Mode;
use crate::reduction::decide_generic;
use crate::spectra::{enumerate_relations, validate_spectrum, SpectralValue, Spectrum};

use super::linalg::CMatrix;
use super::search::{search_tuple, SearchOptions};
use super::{check_constraint, ConcreteClass, Witness, WitnessError};

#[derive(Debug, Clone, PartialEq)]
pub struct BlockWitness {
    pub witness: Witness,
    /// Sub-spectrum of every diagonal block, in order.
    pub blocks: Vec<Spectrum>,
}

fn impossible(msg: impl Into<String>) -> WitnessError {
    WitnessError::BlockSplitImpossible(msg.into())
}

fn subtract(forms: &[Vec<SpectralValue>], choices: &[Vec<usize>]) -> Vec<Vec<SpectralValue>> {
    forms
        .iter()
        .zip(choices)
        .map(|(f, c)| {
            f.iter()
                .zip(c)
                .filter(|(sv, &k)| sv.mult > k)
                .map(|(sv, &k)| SpectralValue::new(sv.value.clone(), sv.mult - k))
                .collect()
        })
        .collect()
}

fn chosen(forms: &[Vec<SpectralValue>], choices: &[Vec<usize>]) -> Vec<Vec<SpectralValue>> {
    forms
        .iter()
        .zip(choices)
        .map(|(f, c)| {
            f.iter()
                .zip(c)
                .filter(|(_, &k)| k > 0)
                .map(|(sv, &k)| SpectralValue::new(sv.value.clone(), k))
                .collect()
        })
        .collect()
}

/// Splits `forms` into sub-spectra of size `size`, each satisfying the eigenvalue constraint.
fn split(mode: Mode, forms: Vec<Vec<SpectralValue>>, size: usize) -> Option<Vec<Spectrum>> {
    let s = Spectrum::new(mode, forms).ok()?;
    if s.n() == size {
        return validate_spectrum(&s).is_ok().then(|| vec![s]);
    }
    for rel in enumerate_relations(&s, size).ok()? {
        let head = Spectrum::new(mode, chosen(s.forms(), &rel.choices)).ok()?;
        if let Some(mut rest) = split(mode, subtract(s.forms(), &rel.choices), size) {
            rest.insert(0, head);
            return Some(rest);
        }
    }
    None
}

fn block_diagonal(blocks: &[&CMatrix]) -> CMatrix {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut m = CMatrix::zeros(n, n);
    let mut at = 0;
    for b in blocks {
        let k = b.nrows();
        m.view_mut((at, at), (k, k)).copy_from(b);
        at += k;
    }
    m
}

/// Solves `classes` as a direct sum of sub-tuples of size `block_size`.
///
/// An even split of every multiplicity is tried first; otherwise the spectrum
/// is cut along relations of cardinality `block_size`. Each block is searched
/// with its own seed so that equal sub-spectra give independent blocks.
pub fn build_block_diagonal_witness(
    classes: &[ConcreteClass],
    block_size: usize,
    opts: &SearchOptions,
) -> Result<BlockWitness, WitnessError> {
    check_constraint(classes)?;
    let n = classes[0].n();
    let mode = classes[0].mode();
    if block_size == 0 || !n.is_multiple_of(block_size) {
        return Err(impossible(format!("block size {block_size} does not divide n = {n}")));
    }
    if let Some(j) = classes.iter().position(|cl| !cl.is_semisimple()) {
        return Err(impossible(format!("class {j} is not semisimple")));
    }
    let forms: Vec<Vec<SpectralValue>> = classes.iter().map(|cl| cl.spectral_values()).collect();
    let spectrum = Spectrum::new(mode, forms.clone()).map_err(|e| impossible(e.to_string()))?;
    let count = n / block_size;
    let blocks = match spectrum.divided(count).filter(|d| validate_spectrum(d).is_ok()) {
        Some(d) => vec![d; count],
        None => split(mode, forms, block_size)
            .ok_or_else(|| impossible("no split into sub-spectra satisfying the eigenvalue constraint"))?,
    };

    let mut parts: Vec<Witness> = Vec::with_capacity(blocks.len());
    for (b, sub) in blocks.iter().enumerate() {
        if block_size > 1 && !decide_generic(&sub.diagonal_tuple()).is_solvable() {
            return Err(impossible(format!("block {b} ({sub}) is not solvable")));
        }
        let block_opts = SearchOptions {
            seed: opts
                .seed
                .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(b as u64 + 1)),
            ..*opts
        };
        let report = search_tuple(&ConcreteClass::from_spectrum(sub), &block_opts)?;
        let pick = report
            .witnesses
            .iter()
            .find(|f| f.diagnostics.irreducible())
            .or_else(|| report.witnesses.first())
            .ok_or(WitnessError::NoConvergence {
                best_residual: report.best_residual,
            })?;
        parts.push(pick.witness.clone());
    }
    let matrices = (0..classes.len())
        .map(|j| block_diagonal(&parts.iter().map(|w| &w.matrices[j]).collect::<Vec<_>>()))
        .collect();
    Ok(BlockWitness {
        witness: Witness::new(mode, matrices),
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jnf::MultiplicityVector;
    use crate::spectra::{sample_spectrum, SampleOptions, SampleTarget};
    use crate::witness::{find_invariant_subspace, verify_witness, RANK_TOL};

    fn case_a() -> Spectrum {
        let pmv = vec![MultiplicityVector::new(vec![2, 2]); 4];
        sample_spectrum(
            &pmv,
            Mode::Multiplicative,
            &SampleTarget::relatively_generic(None),
            SampleOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn case_a_blocks_of_two() {
        let s = case_a();
        let classes = ConcreteClass::from_spectrum(&s);
        let bw = build_block_diagonal_witness(
            &classes,
            2,
            &SearchOptions {
                restarts: 8,
                ..SearchOptions::default()
            },
        )
        .unwrap();
        assert_eq!(bw.blocks.len(), 2);
        assert!(bw.witness.residual < 1e-10);
        let d = verify_witness(&bw.witness, &classes, RANK_TOL).unwrap();
        assert!(d.max_class_residual() < 1e-9);
        assert_eq!(d.centralizer_dim, 2);
        let u = find_invariant_subspace(&bw.witness.matrices, RANK_TOL, 0).unwrap();
        assert_eq!(u.ncols(), 2);
    }

    #[test]
    fn scalar_split() {
        // g1 g2 g3 g4 = 1 and h1 h2 h3 h4 = 1 separately
        let s = Spectrum::from_triples(
            Mode::Multiplicative,
            &[
                &[(1, 5, 1), (1, 7, 1)],
                &[(1, 3, 1), (2, 7, 1)],
                &[(1, 2, 1), (1, 11, 1)],
                &[(29, 30, 1), (37, 77, 1)],
            ],
        )
        .unwrap();
        let classes = ConcreteClass::from_spectrum(&s);
        let bw = build_block_diagonal_witness(
            &classes,
            1,
            &SearchOptions {
                restarts: 1,
                ..SearchOptions::default()
            },
        )
        .unwrap();
        assert!(bw.witness.residual < 1e-12);
        for m in &bw.witness.matrices {
            assert!(m[(0, 1)].norm() == 0.0 && m[(1, 0)].norm() == 0.0);
        }
        assert_eq!(bw.blocks.len(), 2);
        assert!(bw.blocks.iter().all(|b| validate_spectrum(b).is_ok()));
    }

    #[test]
    fn incompatible_split() {
        let pmv = vec![MultiplicityVector::new(vec![1, 1]); 4];
        let s = sample_spectrum(
            &pmv,
            Mode::Multiplicative,
            &SampleTarget::generic(),
            SampleOptions::default(),
        )
        .unwrap();
        let classes = ConcreteClass::from_spectrum(&s);
        assert!(matches!(
            build_block_diagonal_witness(&classes, 1, &SearchOptions::default()),
            Err(WitnessError::BlockSplitImpossible(_))
        ));
        assert!(matches!(
            build_block_diagonal_witness(&classes, 3, &SearchOptions::default()),
            Err(WitnessError::BlockSplitImpossible(_))
        ));
    }
}
