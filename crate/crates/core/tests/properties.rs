use multicp::factory::{from_dilation_data, trace_example};
use multicp::linalg::{self, c, CMat};
use multicp::stinespring::spanning_rank;
use multicp::*;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn block_dims() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=2, 1..=3)
}

fn random_map(alg: &Algebra, k: usize, h: usize, seed: u64) -> MultilinearMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    MultilinearMap::from_fn(alg, k, h, |_| linalg::random_gaussian(&mut rng, h, h))
}

fn scalar(re: f64, im: f64) -> Complex64 {
    c(re, im)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn c_star_identity(dims in block_dims(), seed in any::<u64>()) {
        let alg = Algebra::new(dims).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = AlgebraElement::random(&alg, &mut rng);
        let xx = x.star().multiply(&x).unwrap();
        prop_assert!((xx.norm() - x.norm().powi(2)).abs() <= 1e-10 * (1.0 + xx.norm()));
        prop_assert!(xx.is_positive(1e-10));
    }

    #[test]
    fn amplification_is_a_star_isomorphism(dims in block_dims(), t in 1usize..=3, seed in any::<u64>()) {
        let alg = Algebra::new(dims).unwrap();
        let amp = alg.amplified(t).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = MatrixOverAlgebra::random(&alg, t, &mut rng);
        let y = MatrixOverAlgebra::random(&alg, t, &mut rng);
        let (ex, ey) = (amp.embed(&x).unwrap(), amp.embed(&y).unwrap());
        prop_assert!(amp.extract(&ex).unwrap().max_deviation(&x) < 1e-14);
        let prod = amp.embed(&x.multiply(&y).unwrap()).unwrap();
        let diff = prod.checked_sub(&ex.multiply(&ey).unwrap()).unwrap();
        prop_assert!(diff.norm() < 1e-10 * (1.0 + prod.norm()));
        let star = amp.embed(&x.star()).unwrap().checked_sub(&ex.star()).unwrap();
        prop_assert!(star.norm() < 1e-12);
        prop_assert!((ex.norm() - x.norm()).abs() < 1e-10 * (1.0 + x.norm()));
    }

    #[test]
    fn evaluation_is_multilinear(
        dims in block_dims(),
        k in 1usize..=3,
        slot in 0usize..3,
        re in -2.0f64..2.0,
        im in -2.0f64..2.0,
        seed in any::<u64>(),
    ) {
        let slot = slot % k;
        let alg = Algebra::new(dims).unwrap();
        let phi = random_map(&alg, k, 2, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let args: Vec<AlgebraElement> = (0..k).map(|_| AlgebraElement::random(&alg, &mut rng)).collect();
        let y = AlgebraElement::random(&alg, &mut rng);
        let z = scalar(re, im);
        let mut mixed = args.clone();
        mixed[slot] = args[slot].scale(z).checked_add(&y).unwrap();
        let mut only_y = args.clone();
        only_y[slot] = y;
        let lhs = phi.evaluate(&mixed).unwrap();
        let rhs = phi.evaluate(&args).unwrap() * z + phi.evaluate(&only_y).unwrap();
        prop_assert!(linalg::max_abs(&(&lhs - &rhs)) < 1e-9 * (1.0 + linalg::max_abs(&lhs)));
    }

    #[test]
    fn adjoint_is_an_involution(dims in block_dims(), k in 1usize..=3, seed in any::<u64>()) {
        let alg = Algebra::new(dims).unwrap();
        let phi = random_map(&alg, k, 2, seed);
        let back = phi.adjoint().adjoint();
        for (a, b) in phi.coeffs().iter().zip(back.coeffs()) {
            prop_assert!(linalg::max_abs(&(a - b)) == 0.0);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let args: Vec<AlgebraElement> = (0..k).map(|_| AlgebraElement::random(&alg, &mut rng)).collect();
        let rev: Vec<AlgebraElement> = args.iter().rev().map(|a| a.star()).collect();
        let lhs = phi.adjoint().evaluate(&args).unwrap();
        let rhs = phi.evaluate(&rev).unwrap().adjoint();
        prop_assert!(linalg::max_abs(&(&lhs - &rhs)) < 1e-9 * (1.0 + linalg::max_abs(&lhs)));
    }

    #[test]
    fn gram_of_adjoint_is_conjugate_transpose(k in 1usize..=4, n in 1usize..=2, seed in any::<u64>()) {
        let alg = Algebra::new(vec![1, 1]).unwrap();
        let entries = (0..n * n).map(|p| random_map(&alg, k, 1, seed.wrapping_add(p as u64))).collect();
        let phi = BlockMultilinearMap::new(n, entries).unwrap();
        let g = build_gram(&phi).unwrap().matrix;
        let ga = build_gram(&phi.adjoint()).unwrap().matrix;
        prop_assert!(linalg::max_abs(&(&ga - &g.adjoint())) < 1e-12 * (1.0 + linalg::max_abs(&g)));
    }

    #[test]
    fn gram_quadratic_form_is_nonnegative_for_dilation_maps(
        k in 1usize..=4,
        n in 1usize..=2,
        h in 1usize..=2,
        seed in any::<u64>(),
    ) {
        let (phi, _) = random_icp(seed, &IcpSpec::new(vec![2], k, n, h)).unwrap();
        let g = build_gram(&phi).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
        for _ in 0..8 {
            let x = linalg::random_gaussian(&mut rng, g.size(), 1);
            let q = (x.adjoint() * &g.matrix * &x)[(0, 0)];
            prop_assert!(q.re >= -1e-9 * g.norm() * x.norm_squared());
            prop_assert!(q.im.abs() <= 1e-9 * (1.0 + g.norm()) * x.norm_squared());
        }
    }

    #[test]
    fn dilation_maps_pass_the_positivity_falsifier(k in 1usize..=4, n in 1usize..=2, seed in any::<u64>()) {
        let (phi, _) = random_icp(seed, &IcpSpec::new(vec![1, 1], k, n, 1)).unwrap();
        let opts = FalsifyOptions { levels: vec![1, 2, 3], trials: 40, seed, ..Default::default() };
        prop_assert!(positivity_falsify(&phi, &opts).is_none());
    }

    #[test]
    fn dilate_round_trips(k in 1usize..=4, n in 1usize..=2, h in 1usize..=2, seed in any::<u64>()) {
        let (phi, _) = random_icp(seed, &IcpSpec::new(vec![1, 1], k, n, h)).unwrap();
        let triple = dilate(&phi, &DilateOptions::default()).unwrap();
        let r = verify_dilation(&phi, &triple).unwrap();
        prop_assert!(r.reconstruction <= 1e-8 * (1.0 + phi.max_coeff_norm()));
        prop_assert!(r.structural() <= 1e-9);
        prop_assert_eq!(spanning_rank(&triple), triple.kappa());
        let rebuilt = from_dilation_data(triple.reps(), triple.v(), k).unwrap();
        prop_assert!(verify_dilation(&rebuilt, &triple).unwrap().reconstruction <= 1e-8 * (1.0 + phi.max_coeff_norm()));
    }

    #[test]
    fn recompression_is_the_identity(k in 1usize..=4, n in 1usize..=2, seed in any::<u64>()) {
        let (_, triple) = random_icp(seed, &IcpSpec::new(vec![2], k, n, 1)).unwrap();
        let (once, first) = minimal_compress(&triple);
        prop_assert!(first.is_minimal);
        prop_assert!(first.drift <= 1e-9 * (1.0 + triple.v_norm().powi(2)));
        let (twice, second) = minimal_compress(&once);
        prop_assert_eq!(second.kappa, once.kappa());
        prop_assert!(second.drift <= 1e-9 * (1.0 + triple.v_norm().powi(2)));
        let mut worst = 0.0f64;
        for (a, b) in once.v().iter().zip(twice.v()) {
            worst = worst.max(linalg::frobenius(&(a.adjoint() * a - b.adjoint() * b)));
        }
        prop_assert!(worst <= 1e-9);
    }

    #[test]
    fn dilation_v_factors_the_diagonal_units(k in 1usize..=4, n in 1usize..=2, h in 1usize..=2, seed in any::<u64>()) {
        let mut spec = IcpSpec::new(vec![2], k, n, h);
        spec.isometric = seed % 2 == 0;
        let (phi, _) = random_icp(seed, &spec).unwrap();
        let triple = dilate(&phi, &DilateOptions::default()).unwrap();
        for (j, vj) in triple.v().iter().enumerate() {
            let unit = phi.entries()[j * n + j].unit_value();
            prop_assert!(linalg::max_abs(&(vj.adjoint() * vj - &unit)) <= 1e-9);
            prop_assert!(linalg::op_norm(vj) <= linalg::op_norm(&unit).sqrt() + 1e-9);
            if spec.isometric && triple.kappa() >= h {
                prop_assert!(linalg::max_abs(&(vj.adjoint() * vj - linalg::identity(h))) <= 1e-9);
            }
        }
    }

    #[test]
    fn isometric_v_gives_unit_norm(k in 1usize..=4, seed in any::<u64>()) {
        let mut spec = IcpSpec::new(vec![2], k, 1, 1);
        spec.isometric = true;
        let (phi, triple) = random_icp(seed, &spec).unwrap();
        prop_assert!((triple.v_norm() - 1.0).abs() < 1e-10);
        let unit = linalg::op_norm(&phi.unit_value());
        prop_assert!((unit - 1.0).abs() < 1e-8);
        for vj in triple.v() {
            prop_assert!(linalg::op_norm(vj) <= triple.v_norm() + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn estimator_is_monotone_and_witness_reevaluates(k in 1usize..=3, t in 1usize..=2, seed in any::<u64>()) {
        let alg = Algebra::new(vec![2]).unwrap();
        let phi = random_map(&alg, k, 1, seed);
        let few = NormOptions { restarts: 2, iters: 10, seed, ..Default::default() };
        let more = NormOptions { restarts: 5, ..few.clone() };
        let a = norm_estimate(&phi, t, &few).unwrap();
        let b = norm_estimate(&phi, t, &more).unwrap();
        prop_assert!(b.value >= a.value - 1e-12 * (1.0 + a.value));
        prop_assert!((a.reevaluate(&phi).unwrap() - a.value).abs() <= 1e-10 * (1.0 + a.value));
        prop_assert!(a.witness_norm() <= 1.0 + 1e-9);
        for x in &a.witness {
            prop_assert_eq!(x.size(), t);
        }
    }

    #[test]
    fn identity_first_slot_matches_full_search_on_commutative_maps(seed in any::<u64>(), h in 1usize..=2) {
        let (phi, _) = random_icp(seed, &IcpSpec::new(vec![1, 1, 1], 3, 1, h)).unwrap();
        let opts = NormOptions { seed, restarts: 8, ..Default::default() };
        let full = norm_estimate(&phi, 1, &opts).unwrap();
        let restricted = norm_estimate(&phi, 1, &NormOptions { frozen_identity: vec![0], ..opts }).unwrap();
        prop_assert!((full.value - restricted.value).abs() <= 1e-6 * (1.0 + full.value));
    }

    #[test]
    fn nonzero_block_maps_with_three_or_more_slots_are_not_invariant(k in 3usize..=4, seed in any::<u64>()) {
        let (phi, _) = random_icp(seed, &IcpSpec::new(vec![1, 1], k, 2, 1)).unwrap();
        prop_assume!(phi.max_coeff_norm() > 1e-6);
        prop_assert!(phi.entries_invariant(phi.default_tol()).iter().all(|&x| x));
        prop_assert!(!phi.is_invariant(phi.default_tol()));
    }
}

#[test]
fn falsifier_and_gram_agree_on_non_cp_fixtures() {
    let neg_trace = BlockMultilinearMap::from_single(trace_example(2).unwrap().scale(c(-1.0, 0.0)));
    let mut lambda = linalg::identity(2);
    lambda[(0, 1)] = c(2.0, 0.0);
    lambda[(1, 0)] = c(2.0, 0.0);
    let schur = multicp::factory::schur_block_map(&lambda).unwrap();
    let neg_eval = BlockMultilinearMap::from_single(multicp::factory::eval_example().scale(c(-1.0, 0.0)));
    for phi in [neg_trace, schur, neg_eval] {
        let ce = positivity_falsify(&phi, &FalsifyOptions { levels: vec![1, 2, 3], ..Default::default() });
        assert!(ce.is_some());
        assert!(cp_refute(&phi).unwrap().is_some());
    }
}

#[test]
fn zero_block_map_is_invariant() {
    let alg = Algebra::commutative(2).unwrap();
    let phi = BlockMultilinearMap::uniform(2, &MultilinearMap::zero(&alg, 3, 1));
    assert!(phi.is_invariant(phi.default_tol()));
}

#[test]
fn trace_map_is_invariant_symmetric_and_gram_psd() {
    let phi = trace_example(2).unwrap();
    assert!(phi.is_invariant(phi.default_tol()));
    assert!(phi.is_symmetric(phi.default_tol()));
    let g = build_gram(&phi).unwrap();
    assert!(gram_is_psd(&g, None).unwrap().psd);
    let unit: CMat = phi.unit_value();
    assert!((linalg::op_norm(&unit) - 1.0).abs() < 1e-12);
}
