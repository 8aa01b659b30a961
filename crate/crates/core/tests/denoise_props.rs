use ctv_core::denoise::project_dual;
use ctv_core::*;
use proptest::prelude::*;

fn variant_strategy() -> impl Strategy<Value = TvVariant> {
    (0usize..4, 0.0f64..=1.0).prop_map(|(k, alpha)| TvKind::ALL[k].with_alpha(alpha).unwrap())
}

fn set_strategy() -> impl Strategy<Value = ConstraintSet> {
    prop_oneof![Just(ConstraintSet::FullSpace), Just(ConstraintSet::UnitDisk)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_idempotent_and_feasible(m in 1usize..7, n in 1usize..7, seed in any::<u64>(), v in variant_strategy()) {
        let q = SeededRng::new(seed).normal_dual(m, n).map(|x| 3.0 * x);
        let p = project_dual(&q, v);
        prop_assert!(project_dual(&p, v).sub(&p).norm() <= 1e-12);
        prop_assert!(dual_violation(&p, v) <= 1e-12);
    }

    #[test]
    fn gp_dual_objective_is_nonincreasing(
        m in 2usize..7, n in 2usize..7, seed in any::<u64>(),
        v in variant_strategy(), set in set_strategy(), lambda in 0.01f64..1.0,
    ) {
        let b = SeededRng::new(seed).normal_field(m, n);
        let params = DenoiseParams::new(lambda, v, set, 60).with_mode(DualMode::Gp);
        let trace = denoise(&b, &params).unwrap().dual_objective_trace;
        let start = dual_objective(&DualField::zeros(m, n), &b, lambda, set);
        let mut prev = start;
        for &h in &trace {
            prop_assert!(h <= prev + 1e-10 * (1.0 + prev.abs()), "{} > {}", h, prev);
            prev = h;
        }
    }

    #[test]
    fn tiny_lambda_returns_constraint_projection(m in 1usize..7, n in 1usize..7, seed in any::<u64>(), v in variant_strategy(), set in set_strategy()) {
        let b = SeededRng::new(seed).normal_field(m, n);
        let x = denoise(&b, &DenoiseParams::new(1e-6, v, set, 10)).unwrap().x;
        prop_assert!(x.distance(&project_constraint(&b, set)) <= 1e-3 * b.norm());
    }

    #[test]
    fn output_is_feasible(m in 1usize..7, n in 1usize..7, seed in any::<u64>(), v in variant_strategy(), lambda in 0.01f64..1.0) {
        let b = SeededRng::new(seed).normal_field(m, n).scale(2.0);
        let x = denoise(&b, &DenoiseParams::new(lambda, v, ConstraintSet::UnitDisk, 20)).unwrap().x;
        prop_assert!(ConstraintSet::UnitDisk.contains(&x, 1e-12));
    }
}

/// Optimality of `x` for `min_{x ∈ C} ‖x − b‖² + 2λ·TV(x)`, checked on
/// sampled feasible `z`: the primal inequality
/// `⟨b − x, z − x⟩ ≤ λ(TV(z) − TV(x))`, and the normal-cone condition
/// `⟨b − λLᵀq − x, z − x⟩ ≤ 0` tying `x` to the returned dual.
#[test]
fn optimality_certificates() {
    let mut rng = SeededRng::new(21);
    for variant in TvKind::ALL.map(|k| k.with_alpha(0.5).unwrap()) {
        for set in [ConstraintSet::FullSpace, ConstraintSet::UnitDisk] {
            let b = rng.normal_field(4, 5);
            let lambda = 0.15;
            let res = denoise(&b, &DenoiseParams::new(lambda, variant, set, 5000)).unwrap();
            let x = res.x;
            let tv_x = variant.seminorm(&x);
            let shifted = b.sub(&adjoint_diff(&res.q).scale(lambda));
            for _ in 0..500 {
                let z = set.project(&rng.normal_field(4, 5).scale(1.5));
                let lhs = b.sub(&x).dot(&z.sub(&x));
                let rhs = lambda * (variant.seminorm(&z) - tv_x);
                assert!(lhs <= rhs + 1e-6, "{variant} {set}: {lhs} > {rhs}");
                assert!(shifted.sub(&x).dot(&z.sub(&x)) <= 1e-10, "{variant} {set}");
            }
        }
    }
}

#[test]
fn fgp_and_gp_agree_on_small_instances() {
    let mut rng = SeededRng::new(22);
    for variant in TvKind::ALL.map(|k| k.with_alpha(0.3).unwrap()) {
        for set in [ConstraintSet::FullSpace, ConstraintSet::UnitDisk] {
            let b = rng.normal_field(3, 3);
            let fgp = denoise(&b, &DenoiseParams::new(0.2, variant, set, 3000)).unwrap();
            let gp = denoise(&b, &DenoiseParams::new(0.2, variant, set, 60000).with_mode(DualMode::Gp)).unwrap();
            assert!(fgp.x.distance(&gp.x) <= 1e-6, "{variant} {set}");
        }
    }
}

#[test]
fn warm_start_from_converged_dual_stays_put() {
    let b = SeededRng::new(23).normal_field(5, 5);
    let params = DenoiseParams::new(0.3, TvVariant::Type1Isotropic, ConstraintSet::UnitDisk, 4000);
    let cold = denoise(&b, &params).unwrap();
    let warm = denoise(&b, &params.clone().with_warm_start(cold.q.clone()).with_mode(DualMode::Gp)).unwrap();
    assert!(warm.x.distance(&cold.x) < 1e-8);
}

#[test]
fn rejects_mismatched_warm_start() {
    let b = ComplexField::zeros(3, 3);
    let params = DenoiseParams::new(0.3, TvVariant::Type1Isotropic, ConstraintSet::UnitDisk, 4)
        .with_warm_start(DualField::zeros(3, 4));
    assert!(matches!(denoise(&b, &params), Err(Error::ShapeMismatch { .. })));
}
