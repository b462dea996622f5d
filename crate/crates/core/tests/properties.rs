use nalgebra::DMatrix;
use proptest::prelude::*;
use qds_core::superop::{
    ccp_with_eigenvalue, check_ccp, check_conservative, check_cp_map, check_symmetric,
    relation2_check, trace_identity_residual,
};
use qds_core::{decompose, BlockStructure, DerivationFamily, SuperOperator};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SHAPES: &[&[usize]] = &[&[2], &[3], &[1, 1], &[2, 1], &[2, 2], &[3, 2], &[3, 2, 2]];

fn structure() -> impl Strategy<Value = BlockStructure> {
    (0..SHAPES.len(), proptest::collection::vec(0.2f64..5.0, 3)).prop_map(|(i, w)| {
        let dims = SHAPES[i].to_vec();
        let weights = w[..dims.len()].to_vec();
        BlockStructure::new(dims, weights).unwrap()
    })
}

fn family() -> impl Strategy<Value = DerivationFamily> {
    (structure(), 0usize..=4, any::<u64>())
        .prop_map(|(s, j, seed)| DerivationFamily::random(s, j, seed))
}

fn random_orthogonal(j: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(j, j, |_, _| {
        rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng)
    });
    a.qr().q()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn weighted_trace_is_tracial(s in structure(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = s.random_element_with(&mut rng);
        let b = s.random_element_with(&mut rng);
        let scale = 1.0 + a.operator_norm() * b.operator_norm();
        prop_assert!((s.trace(&(&a * &b)) - s.trace(&(&b * &a))).norm() <= 1e-12 * scale);
    }

    #[test]
    fn basis_is_orthonormal_and_complete(s in structure(), seed in any::<u64>()) {
        let basis = s.orthonormal_basis();
        prop_assert_eq!(basis.len(), s.algebra_dim());
        for (a, ga) in basis.iter().enumerate() {
            prop_assert!(ga.selfadjointness_defect() < 1e-15);
            for (b, gb) in basis.iter().enumerate() {
                let expect = if a == b { 1.0 } else { 0.0 };
                prop_assert!((s.hs_inner(ga, gb).re - expect).abs() < 1e-12);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = s.random_element_with(&mut rng);
        let back = s.from_coords(&basis, &s.coords(&basis, &x));
        prop_assert!((&back - &x).max_abs() < 1e-12);
    }

    #[test]
    fn built_generators_pass_all_checks(f in family()) {
        let l = f.build();
        for r in [check_conservative(&l, 1e-9), check_symmetric(&l, 1e-9), check_ccp(&l, 1e-9), relation2_check(&l, 1e-9)] {
            prop_assert!(r.passed, "{:?}", r);
        }
    }

    #[test]
    fn norm_identity_and_r_form(f in family()) {
        let (r2, sq) = f.r_norm_identity();
        prop_assert!((r2 - sq).abs() <= 1e-10 * sq.max(1e-300) || r2 == sq);
        let l = f.build();
        prop_assert!(l.distance(&f.r_form_generator()).unwrap() <= 1e-10 * l.norm().max(1e-300) + 1e-14);
    }

    #[test]
    fn orthogonal_mixing_leaves_generator_unchanged(f in family(), seed in any::<u64>()) {
        let o = random_orthogonal(f.len(), seed);
        let mixed = f.mix(&o).unwrap();
        let l = f.build();
        prop_assert!(l.distance(&mixed.build()).unwrap() <= 1e-10 * l.tolerance_scale());
    }

    #[test]
    fn central_shift_leaves_generator_unchanged(f in family()) {
        let l = f.build();
        let n = f.normalize_central();
        prop_assert!(l.distance(&n.build()).unwrap() <= 1e-12 * l.tolerance_scale());
        for h in n.generators() {
            prop_assert!(f.structure().center_project(h).max_abs() <= 1e-12);
        }
    }

    #[test]
    fn round_trip(f in family()) {
        let l = f.build();
        let out = decompose(&l, 1e-9).unwrap();
        prop_assert!(out.roundtrip_residual <= 1e-9);
        let rebuilt = out.family.build();
        prop_assert!(l.distance(&rebuilt).unwrap() <= 1e-9 * l.norm().max(1.0));
    }

    #[test]
    fn round_trip_is_weight_invariant(seed in any::<u64>(), j in 1usize..=3) {
        let base = BlockStructure::unweighted(vec![2, 2]).unwrap();
        let f = DerivationFamily::random(base.clone(), j, seed);
        let g = f.with_structure(base.with_weights(vec![2.0, 3.0]).unwrap()).unwrap();
        let (lf, lg) = (f.build(), g.build());
        let x = base.random_antiselfadjoint(seed ^ 1);
        let xg = g.structure().element(x.blocks().to_vec()).unwrap();
        prop_assert!((lf.apply(&x).unwrap().to_ambient() - lg.apply(&xg).unwrap().to_ambient()).norm() <= 1e-10);
        let rf = decompose(&lf, 1e-9).unwrap().roundtrip_residual;
        let rg = decompose(&lg, 1e-9).unwrap().roundtrip_residual;
        prop_assert!((rf - rg).abs() <= 1e-10);
    }

    #[test]
    fn scale_equivariance(f in family(), c in 0.1f64..10.0) {
        let l = f.build();
        let out = decompose(&l.scale(c), 1e-9).unwrap();
        let scaled = f.mix(&DMatrix::from_diagonal_element(f.len(), f.len(), c.sqrt())).unwrap();
        prop_assert!(out.family.build().distance(&scaled.build()).unwrap() <= 1e-9 * c * l.tolerance_scale());
    }

    #[test]
    fn dissipation_kernel_and_ccp_verdict_agree(f in family(), flip in any::<bool>()) {
        let l = if flip { f.build().scale(-1.0) } else { f.build() };
        let (report, lam) = ccp_with_eigenvalue(&l, 1e-9);
        prop_assert_eq!(report.passed, lam >= -1e-9 * l.tolerance_scale());
    }

    #[test]
    fn semigroup_is_symmetric_cp_and_weight_invariant(f in family()) {
        let l = f.build();
        let s = f.structure();
        let reweighted = f.with_structure(s.with_weights(vec![1.0; s.num_blocks()]).unwrap()).unwrap().build();
        let x = s.random_antiselfadjoint(5);
        let xr = reweighted.structure().element(x.blocks().to_vec()).unwrap();
        for t in [0.1, 1.0, 5.0] {
            let tt = l.exp_semigroup(t).unwrap();
            prop_assert!(check_symmetric(&tt, 1e-9).passed);
            let tr = reweighted.exp_semigroup(t).unwrap();
            let diff = tt.apply(&x).unwrap().to_ambient() - tr.apply(&xr).unwrap().to_ambient();
            prop_assert!(diff.norm() <= 1e-10 * (1.0 + x.operator_norm()));
        }
        prop_assert!(check_cp_map(&l.exp_semigroup(1.0).unwrap(), 1e-9).passed);
    }

    #[test]
    fn kraus_trace_identity_for_selfadjoint_kraus(s in structure(), seed in any::<u64>(), j in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kraus: Vec<_> = (0..j).map(|_| s.random_selfadjoint_with(&mut rng)).collect();
        let psi = SuperOperator::from_kraus(s, &kraus).unwrap();
        prop_assert!(trace_identity_residual(&psi) <= 1e-10 * psi.tolerance_scale());
        prop_assert!(check_cp_map(&psi, 1e-9).passed);
    }
}
