mod common;

use proptest::prelude::*;
use qpost_core::linalg::{ket, Tolerance};
use qpost_core::random::{random_distribution, random_state, random_unitary, Seed, SplitMix64};
use qpost_core::{
    check_povm_necessary_condition, compose_post_processing, identity_class_certificate, is_indecomposable_instrument,
    is_trash_and_prepare, luders, povm_equivalent, random_identity_class, random_instrument, random_povm,
    trash_and_prepare, witness_detailed_to_original, witness_identity_reversal, witness_indecomposable_equivalence,
    witness_map_post_processing, witness_original_to_detailed, witness_to_trash_and_prepare, Instrument,
    QuantumOperation,
};

fn tol() -> Tolerance {
    Tolerance::default()
}

fn random_trash_and_prepare(d_in: usize, d_out: usize, seed: u64) -> Instrument {
    let mut rng = SplitMix64::new(Seed(seed));
    let n = 1 + rng.below(3);
    let p = random_distribution(n, Seed(rng.next_u64())).unwrap();
    let states: Vec<_> = (0..n)
        .map(|_| random_state(d_out, Seed(rng.next_u64())).unwrap())
        .collect();
    trash_and_prepare(d_in, &p, &states).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn detailed_witnesses_replay(seed in any::<u64>(), n in 1usize..=3, d in 1usize..=3, k in 1usize..=2) {
        let instr = common::orthogonal_kraus_instrument(n, d, k, seed);
        let back = witness_detailed_to_original(&instr, tol());
        let detailed = qpost_core::detailed_instrument(&instr, tol());
        prop_assert!(back.replay_distance(&detailed).unwrap() <= tol().eq_abs);
        let forth = witness_original_to_detailed(&instr, tol());
        prop_assert!(forth.is_some());
        prop_assert!(forth.unwrap().replay_distance(&instr).unwrap() <= tol().eq_abs);
    }

    #[test]
    fn identity_reversal_replays(seed in any::<u64>(), n in 1usize..=3, d in 1usize..=2, k in 1usize..=2, extra in 0usize..=1) {
        let instr = random_identity_class(n, d, k * d + extra, k, Seed(seed)).unwrap();
        let cert = identity_class_certificate(&instr, tol()).unwrap();
        let w = witness_identity_reversal(&instr, &cert, tol()).unwrap();
        let back = w.replay(&instr).unwrap();
        prop_assert!(back.choi_distance(&Instrument::identity_channel(d)) <= tol().eq_abs);
    }

    #[test]
    fn trash_and_prepare_is_least(seed in any::<u64>(), n in 1usize..=3, d_in in 1usize..=3, d_out in 1usize..=3) {
        prop_assume!(d_out * n * 2 >= d_in);
        let instr = random_instrument(n, d_in, d_out, 2, Seed(seed)).unwrap();
        let t = random_trash_and_prepare(d_in, 1 + (seed % 3) as usize, seed ^ 0xabc);
        let cert = is_trash_and_prepare(&t, tol()).unwrap();
        let w = witness_to_trash_and_prepare(&instr, &cert.probabilities, &cert.states, tol()).unwrap();
        prop_assert!(w.replay_distance(&instr).unwrap() <= tol().eq_abs);
    }

    #[test]
    fn equivalence_witness_agrees_with_povm_equivalence(seed in any::<u64>(), positive in any::<bool>()) {
        let (i, j) = if positive {
            common::equivalent_indecomposable_pair(seed)
        } else {
            common::mismatched_indecomposable_pair(seed)
        };
        prop_assert!(is_indecomposable_instrument(&i, tol()) && is_indecomposable_instrument(&j, tol()));
        let povm = povm_equivalent(&i.induced_povm(), &j.induced_povm(), tol()).unwrap();
        let w = witness_indecomposable_equivalence(&i, &j, tol()).unwrap();
        prop_assert_eq!(povm.is_some(), w.is_some());
        prop_assert_eq!(positive, w.is_some());
        if let Some(w) = w {
            prop_assert!(w.forward.replay_distance(&i).unwrap() <= tol().eq_abs);
            prop_assert!(w.backward.replay_distance(&j).unwrap() <= tol().eq_abs);
            prop_assert!(check_povm_necessary_condition(&i, &j, tol()).unwrap());
            prop_assert!(check_povm_necessary_condition(&j, &i, tol()).unwrap());
        } else {
            prop_assert!(!check_povm_necessary_condition(&i, &j, tol()).unwrap());
        }
    }

    #[test]
    fn map_witness_replays(seed in any::<u64>()) {
        let (i, j) = common::map_chain_pair(seed);
        let w = witness_map_post_processing(&i, &j, tol()).unwrap();
        prop_assert!(w.is_some());
        prop_assert!(w.unwrap().replay_distance(&i).unwrap() <= tol().eq_abs);
    }

    #[test]
    fn post_processings_of_trash_and_prepare_stay_trash_and_prepare(seed in any::<u64>(), d_in in 1usize..=3, d_mid in 1usize..=3, m in 1usize..=3, d2 in 1usize..=3) {
        prop_assume!(d2 * m * 2 >= d_mid);
        let t = random_trash_and_prepare(d_in, d_mid, seed);
        let r = common::random_processors(&t, m, d2, 2, seed.wrapping_mul(3));
        prop_assert!(is_trash_and_prepare(&compose_post_processing(&t, &r).unwrap(), tol()).is_some());
        let t2 = random_trash_and_prepare(d_in, d2, seed ^ 0x77);
        let w = witness_map_post_processing(&t, &t2, tol()).unwrap().unwrap();
        prop_assert!(is_trash_and_prepare(&w.replay(&t).unwrap(), tol()).is_some());
    }

    #[test]
    fn indecomposable_post_processing_satisfies_necessary_condition(seed in any::<u64>()) {
        let (i, _) = common::equivalent_indecomposable_pair(seed);
        let mut rng = SplitMix64::new(Seed(seed ^ 0x1234));
        let labels: Vec<String> = i.labels().iter().map(|x| format!("f{x}")).collect();
        let d2 = i.dim_out() + rng.below(2);
        let processors = i
            .labels()
            .into_iter()
            .zip(&labels)
            .map(|(x, y)| {
                let v = qpost_core::random_isometry(i.dim_out(), d2, Seed(rng.next_u64())).unwrap();
                let op = QuantumOperation::new(i.dim_out(), d2, vec![v]).unwrap();
                (x, Instrument::concentrated(&labels, y, op).unwrap())
            })
            .collect();
        let j = compose_post_processing(&i, &processors).unwrap();
        prop_assert!(is_indecomposable_instrument(&j, tol()));
        prop_assert!(check_povm_necessary_condition(&i, &j, tol()).unwrap());
    }
}

#[test]
fn unitary_mixture_is_not_reached_from_a_sharp_measurement() {
    for seed in 0..20u64 {
        let mut rng = SplitMix64::new(Seed(seed));
        let d = 2 + rng.below(2);
        let a = random_povm(d, d, Seed(rng.next_u64())).unwrap();
        let i = luders(&a);
        let p = random_distribution(2, Seed(rng.next_u64())).unwrap();
        let j = Instrument::from_kraus(
            d,
            d,
            (0..2)
                .map(|y| {
                    let u = random_unitary(d, Seed(rng.next_u64())).unwrap();
                    (format!("u{y}"), vec![u.scale(p[y].sqrt())])
                })
                .collect(),
        )
        .unwrap();
        assert!(!check_povm_necessary_condition(&i, &j, tol()).unwrap());
        assert!(witness_indecomposable_equivalence(&i, &j, tol()).unwrap().is_none());
    }
}

#[test]
fn first_basis_vector_absorbs_identity_reversal_complement() {
    let v = qpost_core::random_isometry(2, 3, Seed(9)).unwrap();
    let instr = qpost_core::isometric_channel(&v, tol()).unwrap();
    let cert = identity_class_certificate(&instr, tol()).unwrap();
    let w = witness_identity_reversal(&instr, &cert, tol()).unwrap();
    let r = &w.processors[qpost_core::CHANNEL_LABEL];
    let leak = qpost_core::State::pure(&qpost_core::linalg::complement_basis(&v));
    let (out, p) = r.apply(qpost_core::CHANNEL_LABEL, &leak).unwrap();
    assert!((p - 1.0).abs() < 1e-12);
    assert!(qpost_core::linalg::frobenius_distance(&out, &(ket(2, 0) * ket(2, 0).adjoint())) < 1e-12);
}
