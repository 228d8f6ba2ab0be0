//! Fixed inputs shared by the benchmarks.

use dsp_core::jnf::{ClassTuple, JordanForm, Mode, MultiplicityVector};
use dsp_core::spectra::{sample_spectrum, SampleOptions, SampleTarget, Spectrum};

/// `(2d, 2d)^4`, the four-matrix family scaled by `d`.
pub fn case_a_tuple(d: usize) -> ClassTuple {
    let mv = [2 * d, 2 * d];
    ClassTuple::diagonal(Mode::Multiplicative, &[&mv[..]; 4]).unwrap()
}

/// A κ = 0 tuple that needs four reduction steps.
pub fn long_reduction() -> ClassTuple {
    ClassTuple::diagonal(Mode::Multiplicative, &[&[3, 2, 2, 1], &[3, 3, 2], &[8], &[4, 2, 2]]).unwrap()
}

/// A tuple of non-diagonal forms of size `n = 12`.
pub fn jordan_tuple() -> ClassTuple {
    let forms = [
        JordanForm::from_blocks(&[&[3, 2, 1], &[2, 2, 1], &[1]]).unwrap(),
        JordanForm::from_blocks(&[&[2, 2, 2], &[2, 2, 2]]).unwrap(),
        JordanForm::from_blocks(&[&[4, 4], &[2, 1, 1]]).unwrap(),
        JordanForm::from_blocks(&[&[1; 6], &[1; 6]]).unwrap(),
    ];
    ClassTuple::new(Mode::Multiplicative, forms.to_vec()).unwrap()
}

/// Generic multiplicative spectrum with the given multiplicity vectors.
pub fn generic_spectrum(pmv: &[&[usize]]) -> Spectrum {
    let pmv: Vec<MultiplicityVector> = pmv.iter().map(|mv| MultiplicityVector::new(mv.to_vec())).collect();
    sample_spectrum(
        &pmv,
        Mode::Multiplicative,
        &SampleTarget::generic(),
        SampleOptions::default(),
    )
    .unwrap()
}
