mod common;

use common::random_tuple;
use dsp_core::jnf::{ClassTuple, Mode, MultiplicityVector};
use dsp_core::reduction::{
    classify_kappa0_stop, decide_generic, decide_with, psi_step, psi_step_with_choice, ReductionError, StopTag,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tuple(max_n: usize) -> impl Strategy<Value = ClassTuple> {
    (2..=max_n, 3usize..=5, any::<u64>()).prop_map(|(n, forms, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_tuple(&mut rng, n, forms)
    })
}

/// Every combination of maximal slots, one per form.
fn all_choices(t: &ClassTuple) -> Vec<Vec<usize>> {
    t.forms().iter().fold(vec![vec![]], |acc, f| {
        acc.iter()
            .flat_map(|prefix| {
                f.max_count_slots().into_iter().map(move |s| {
                    let mut c = prefix.clone();
                    c.push(s);
                    c
                })
            })
            .collect()
    })
}

fn last_maximal(t: &ClassTuple) -> Vec<usize> {
    t.forms().iter().map(|f| *f.max_count_slots().last().unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn step_preserves_kappa(t in tuple(12)) {
        if let Ok(step) = psi_step(&t) {
            prop_assert_eq!(step.output.rigidity_index(), t.rigidity_index());
            prop_assert_eq!(step.output.n(), step.n1);
            prop_assert!(step.n1 < t.n());
        }
        let trace = decide_generic(&t);
        for s in &trace.steps {
            prop_assert_eq!(s.output.rigidity_index(), trace.kappa);
        }
    }

    #[test]
    fn step_is_independent_of_the_slot_choice(t in tuple(9)) {
        let choices = all_choices(&t);
        let results: Vec<_> = choices.iter().map(|c| psi_step_with_choice(&t, c)).collect();
        for r in &results[1..] {
            match (&results[0], r) {
                (Ok(a), Ok(b)) => {
                    prop_assert_eq!(a.n1, b.n1);
                    prop_assert_eq!(a.output.to_corresponding_diagonal().pmv(), b.output.to_corresponding_diagonal().pmv());
                }
                (a, b) => prop_assert_eq!(a.as_ref().err(), b.as_ref().err()),
            }
        }
        let first = decide_generic(&t);
        let last = decide_with(&t, |cur| psi_step_with_choice(cur, &last_maximal(cur)));
        prop_assert_eq!(first.verdict, last.verdict);
        prop_assert_eq!(first.final_n, last.final_n);
    }

    #[test]
    fn step_commutes_with_correspondence(t in tuple(10)) {
        let Ok(step) = psi_step(&t) else { return Ok(()) };
        let shrink = t.n() - step.n1;
        for (before, after) in t.forms().iter().zip(step.output.forms()) {
            let mut mv = before.corresponding_diagonal().components().to_vec();
            mv[0] -= shrink;
            prop_assert_eq!(after.corresponding_diagonal(), MultiplicityVector::new(mv));
        }
    }

    #[test]
    fn verdict_agrees_with_the_corresponding_diagonal(t in tuple(10)) {
        let a = decide_generic(&t);
        let b = decide_generic(&t.to_corresponding_diagonal());
        prop_assert_eq!(a.verdict, b.verdict);
        prop_assert_eq!(a.final_n, b.final_n);
    }
}

fn family(tag: StopTag) -> &'static [&'static [usize]] {
    match tag {
        StopTag::A => &[&[1, 1], &[1, 1], &[1, 1], &[1, 1]],
        StopTag::B => &[&[1, 1, 1], &[1, 1, 1], &[1, 1, 1]],
        StopTag::C => &[&[1, 1, 1, 1], &[1, 1, 1, 1], &[2, 2]],
        StopTag::D => &[&[1, 1, 1, 1, 1, 1], &[2, 2, 2], &[3, 3]],
        StopTag::None => &[],
    }
}

fn scaled(tag: StopTag, d: usize) -> ClassTuple {
    let pmv: Vec<Vec<usize>> = family(tag)
        .iter()
        .map(|mv| mv.iter().map(|m| m * d).collect())
        .collect();
    let refs: Vec<&[usize]> = pmv.iter().map(Vec::as_slice).collect();
    ClassTuple::diagonal(Mode::Multiplicative, &refs).unwrap()
}

#[test]
fn classifier_recognises_the_four_families() {
    for tag in [StopTag::A, StopTag::B, StopTag::C, StopTag::D] {
        for d in 1..=3 {
            let t = scaled(tag, d);
            assert_eq!(t.rigidity_index(), 0);
            let case = classify_kappa0_stop(&t).unwrap();
            assert_eq!((case.tag, case.d), (tag, d), "{tag:?} at d={d}");
        }
    }
}

#[test]
fn classifier_follows_the_reduction() {
    let m = Mode::Multiplicative;
    let t = ClassTuple::diagonal(m, &[&[1, 1, 1], &[2, 1], &[2, 1], &[2, 1]]).unwrap();
    let case = classify_kappa0_stop(&t).unwrap();
    assert_eq!((case.tag, case.d, case.trace.steps.len()), (StopTag::A, 1, 1));

    let t = ClassTuple::diagonal(m, &[&[3, 2, 2, 1], &[3, 3, 2], &[8], &[4, 2, 2]]).unwrap();
    let case = classify_kappa0_stop(&t).unwrap();
    assert_eq!((case.tag, case.d, case.trace.steps.len()), (StopTag::B, 1, 4));

    // Jordan input is mapped to its corresponding diagonal first
    let form = dsp_core::JordanForm::from_blocks(&[&[2, 2]]).unwrap();
    let j = ClassTuple::new(m, vec![form; 4]).unwrap();
    let case = classify_kappa0_stop(&j).unwrap();
    assert_eq!((case.tag, case.d), (StopTag::A, 2));
}

#[test]
fn classifier_rejects_nonzero_kappa() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut seen = 0;
    while seen < 100 {
        let n = 2 + seen % 9;
        let t = random_tuple(&mut rng, n, 3 + seen % 3);
        if t.rigidity_index() == 0 {
            continue;
        }
        assert!(matches!(classify_kappa0_stop(&t), Err(ReductionError::KappaNonZero(_))));
        seen += 1;
    }
}
