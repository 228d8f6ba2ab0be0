mod common;

use common::{brute_class_dimension, brute_min_rank, random_jordan_form};
use dsp_core::jnf::{EigenSlot, JordanForm, MultiplicityVector, Partition};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn partition() -> impl Strategy<Value = Partition> {
    prop::collection::vec(1usize..8, 1..8).prop_map(|v| Partition::new(v).unwrap())
}

fn jordan_form(max_n: usize) -> impl Strategy<Value = JordanForm> {
    (1..=max_n, any::<u64>()).prop_map(|(n, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_jordan_form(&mut rng, n, n)
    })
}

proptest! {
    #[test]
    fn dual_is_an_involution(p in partition()) {
        prop_assert_eq!(p.dual().dual(), p.clone());
        prop_assert_eq!(p.dual().weight(), p.weight());
        prop_assert_eq!(p.dual().len(), p.parts()[0]);
    }

    #[test]
    fn r_and_d_match_explicit_matrices(form in jordan_form(7)) {
        prop_assert_eq!(form.rank_defect(), brute_min_rank(&form));
        prop_assert_eq!(form.class_dimension(), brute_class_dimension(&form));
    }

    #[test]
    fn corresponding_diagonal_keeps_r_and_d(form in jordan_form(7)) {
        let diag = form.to_corresponding_diagonal();
        prop_assert!(diag.is_diagonal());
        prop_assert_eq!(diag.n(), form.n());
        prop_assert_eq!(brute_min_rank(&diag), brute_min_rank(&form));
        prop_assert_eq!(brute_class_dimension(&diag), brute_class_dimension(&form));
    }

    #[test]
    fn class_dimension_is_even(form in jordan_form(12)) {
        prop_assert_eq!(form.class_dimension() % 2, 0);
    }

    #[test]
    fn single_eigenvalue_form_from_a_diagonal(p in partition()) {
        // the dual of a multiplicity vector, as blocks of one eigenvalue, corresponds back to it
        let mv = MultiplicityVector::new(p.parts().to_vec());
        let single = JordanForm::new(vec![EigenSlot::new("e0", p.dual())]).unwrap();
        prop_assert_eq!(single.corresponding_diagonal(), mv);
    }
}

#[test]
fn worked_example() {
    let j = JordanForm::from_blocks(&[&[6, 4, 3], &[3, 1]]).unwrap();
    assert_eq!(j.corresponding_diagonal().components(), &[3, 3, 3, 2, 2, 1, 1, 1, 1]);
    assert_eq!(j.rank_defect(), brute_min_rank(&j));
    assert_eq!(j.class_dimension(), brute_class_dimension(&j));
}
