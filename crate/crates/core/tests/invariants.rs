use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use biphoton::detection::{detect, marginal_ignoring_primed};
use biphoton::linalg::{hermitian_deviation, min_eigenvalue, trace, unitarity_deviation};
use biphoton::mimicry::{holography_mimic, lossy_product_mimic, mimic_state};
use biphoton::objects::{ObjectOperator, Side, TransferSpec};
use biphoton::states::{reduced_distance, BiphotonDensityState, BiphotonPureState, ModeSpace, TwoPhotonState};
use biphoton::verify::oracle_statistics;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn density_states_are_psd_with_unit_trace(m in 1usize..5, mp in 1usize..5, rank in 1usize..4, seed: u64) {
        let modes = ModeSpace::lossless(m, mp).unwrap();
        let rho = BiphotonDensityState::random(modes, rank, &mut rng(seed));
        let mat = rho.matrix();
        prop_assert!(hermitian_deviation(mat) <= 1e-12);
        prop_assert!((trace(mat).re - 1.0).abs() <= 1e-12);
        prop_assert!(min_eigenvalue(mat) >= -1e-10);
        prop_assert!(BiphotonDensityState::from_matrix(modes, mat.clone()).is_ok());
        for reduced in [rho.reduced_unprimed(), rho.reduced_primed()] {
            prop_assert!(reduced.validate().is_ok());
        }
    }

    #[test]
    fn reduced_states_agree_across_representations(m in 1usize..6, mp in 1usize..6, seed: u64) {
        let psi = BiphotonPureState::random(ModeSpace::lossless(m, mp).unwrap(), &mut rng(seed));
        let rho = BiphotonDensityState::from_pure(&psi);
        prop_assert!(reduced_distance(&psi.reduced_unprimed(), &rho.reduced_unprimed()) <= 1e-12);
        prop_assert!(reduced_distance(&psi.reduced_primed(), &rho.reduced_primed()) <= 1e-12);
    }

    #[test]
    fn dilations_are_unitary(dim in 1usize..7, seed: u64, primed: bool) {
        let side = if primed { Side::Primed } else { Side::Unprimed };
        let spec = TransferSpec::random(dim, side, &mut rng(seed));
        let op = ObjectOperator::dilate(&spec).unwrap();
        prop_assert_eq!(op.dim(), 2 * dim);
        prop_assert_eq!(op.window(), dim);
        prop_assert!(unitarity_deviation(op.matrix()) <= 1e-12);
    }

    #[test]
    fn lossless_reference_bucket_equals_marginal(m in 1usize..6, mp in 1usize..6, seed: u64, lossy_h1: bool) {
        let mut r = rng(seed);
        let state: TwoPhotonState = BiphotonPureState::random(ModeSpace::lossless(m, mp).unwrap(), &mut r).into();
        let h1 = if lossy_h1 {
            ObjectOperator::dilate(&TransferSpec::random(m, Side::Unprimed, &mut r)).unwrap()
        } else {
            ObjectOperator::haar_random_with(m, Side::Unprimed, &mut r)
        };
        let h2 = ObjectOperator::haar_random_with(mp, Side::Primed, &mut r);
        let report = detect(&state, &h1, &h2).unwrap();
        let p1 = marginal_ignoring_primed(&state, &h1).unwrap();
        prop_assert!(max_diff(&p1, &report.p1_bar) <= 1e-10);
        prop_assert!(report.loss_identity_deviation() <= 1e-12);
    }

    #[test]
    fn fast_statistics_match_oracle(m in 1usize..4, mp in 1usize..4, seed: u64) {
        let mut r = rng(seed);
        let rho = BiphotonDensityState::random(ModeSpace::lossless(m, mp).unwrap(), 2, &mut r);
        let h1 = ObjectOperator::dilate(&TransferSpec::random(m, Side::Unprimed, &mut r)).unwrap();
        let h2 = ObjectOperator::dilate(&TransferSpec::random(mp, Side::Primed, &mut r)).unwrap();
        let fast = detect(&rho.clone().into(), &h1, &h2).unwrap();
        let oracle = oracle_statistics(&rho, &h1, &h2).unwrap();
        prop_assert!(fast.max_deviation(&oracle) <= 1e-12);
    }

    #[test]
    fn mimics_reproduce_statistics(m in 1usize..5, mp in 1usize..5, seed: u64) {
        let mut r = rng(seed);
        let rho = BiphotonDensityState::random(ModeSpace::lossless(m, mp).unwrap(), 2, &mut r);
        let h1 = ObjectOperator::haar_random_with(m, Side::Unprimed, &mut r);
        let h2 = ObjectOperator::dilate(&TransferSpec::random(mp, Side::Primed, &mut r)).unwrap();
        let original = detect(&rho.clone().into(), &h1, &h2).unwrap();

        let holo = holography_mimic(&rho, &h1).unwrap();
        let holo_stats = detect(&mimic_state(&holo).unwrap(), &h1, &h2).unwrap();
        let joint_gap = original.joint.iter().zip(&holo_stats.joint).map(|(a, b)| max_diff(a, b)).fold(0.0, f64::max);
        prop_assert!(joint_gap <= 1e-10);

        let product = lossy_product_mimic(&rho, &h2, None).unwrap();
        prop_assert!((product.ensemble.total_trace() - 1.0).abs() <= 1e-10);
        let product_stats = detect(&mimic_state(&product.ensemble).unwrap(), &h1, &h2).unwrap();
        prop_assert!(max_diff(&original.p1_bar, &product_stats.p1_bar) <= 1e-10);
    }
}
