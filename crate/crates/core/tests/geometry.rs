use obata_core::geometry::{
    christoffel_at, flowline_geodesic_residual, hessian, sectional_curvature, GridSpec, DEFAULT_STEP,
};
use obata_core::spaces::{
    base_point, build_cosh_tower, euclidean_basis, evaluation_rank, hyperbolic_basis, inner_hyperbolic_seed,
};
use obata_core::{Fiber, SolutionField, Warp, WarpedChart};
use proptest::prelude::*;

fn charts() -> Vec<WarpedChart> {
    vec![
        WarpedChart::flat(2),
        WarpedChart::new(Fiber::RoundSphere(2), Warp::Sin, (0.05, 3.09)),
        WarpedChart::new(Fiber::RoundSphere(1), Warp::Sinh, (0.05, 2.0)),
        build_cosh_tower(Fiber::FlatSpace(1), 2).unwrap(),
        build_cosh_tower(Fiber::Circle(0.7), 1).unwrap(),
    ]
}

fn point(c: &WarpedChart, seed: u64) -> Vec<f64> {
    GridSpec::for_chart(c, 1, seed).generate().remove(0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metrics_are_symmetric_positive_definite(which in 0usize..5, seed in any::<u64>()) {
        let c = &charts()[which];
        let x = point(c, seed);
        let g = c.metric_at(&x).unwrap();
        prop_assert_eq!(&g, &g.transpose());
        let eig = g.symmetric_eigen().eigenvalues;
        prop_assert!(eig.iter().all(|&l| l > 0.0), "{eig}");
    }

    #[test]
    fn christoffel_symbols_are_symmetric(which in 0usize..5, seed in any::<u64>()) {
        let c = &charts()[which];
        let x = point(c, seed);
        let gam = christoffel_at(c, &x, DEFAULT_STEP).unwrap();
        let n = gam.dim();
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    prop_assert!((gam.get(k, i, j) - gam.get(k, j, i)).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn hessians_are_symmetric(seed in any::<u64>(), which in 0usize..4) {
        let tower = build_cosh_tower(Fiber::FlatSpace(1), 2).unwrap();
        let basis = hyperbolic_basis(&tower, &inner_hyperbolic_seed(&Fiber::FlatSpace(1)), 0).unwrap();
        let x = point(&tower, seed);
        let h = hessian(&tower, &basis.fields[which], &x, DEFAULT_STEP).unwrap();
        prop_assert!((&h - h.transpose()).amax() <= 1e-8);
    }

    #[test]
    fn sectional_curvature_is_invariant_under_rescaling(seed in any::<u64>(), a in 0.2f64..3.0, b in 0.2f64..3.0) {
        let c = WarpedChart::new(Fiber::RoundSphere(2), Warp::Sin, (0.05, 3.09));
        let x = point(&c, seed);
        let k1 = sectional_curvature(&c, &x, &[1.0, 0.3, 0.0], &[0.0, 1.0, 0.5], DEFAULT_STEP).unwrap();
        let k2 = sectional_curvature(&c, &x, &[a, 0.3 * a, 0.0], &[0.0, b, 0.5 * b], DEFAULT_STEP).unwrap();
        prop_assert!((k1 - k2).abs() <= 1e-10);
        prop_assert!((k1 - 1.0).abs() <= 1e-4, "{k1}");
    }

    #[test]
    fn evaluation_rank_is_bounded(k in 1usize..4, seed in 0u64..8) {
        let tower = build_cosh_tower(Fiber::FlatSpace(1), k).unwrap();
        let basis = hyperbolic_basis(&tower, &inner_hyperbolic_seed(&Fiber::FlatSpace(1)), seed).unwrap();
        let n = tower.dim();
        let rank = evaluation_rank(&basis, &base_point(&tower), 1e-10).unwrap();
        prop_assert!(rank <= (n + 1).min(basis.len()));
    }
}

#[test]
fn line_towers_reach_full_rank() {
    for k in 1..=3 {
        let tower = build_cosh_tower(Fiber::FlatSpace(1), k).unwrap();
        let basis = hyperbolic_basis(&tower, &inner_hyperbolic_seed(&Fiber::FlatSpace(1)), 0).unwrap();
        let n = tower.dim();
        assert_eq!(basis.len(), n + 1);
        assert!(basis.excluded.is_empty());
        assert_eq!(evaluation_rank(&basis, &base_point(&tower), 1e-10).unwrap(), n + 1);
    }
}

#[test]
fn circle_towers_lose_two_dimensions() {
    for k in 1..=3 {
        let tower = build_cosh_tower(Fiber::Circle(1.0), k).unwrap();
        let basis = hyperbolic_basis(&tower, &inner_hyperbolic_seed(&Fiber::Circle(1.0)), 0).unwrap();
        let n = tower.dim();
        assert_eq!(basis.len(), n - 1);
        assert_eq!(evaluation_rank(&basis, &base_point(&tower), 1e-10).unwrap(), n - 1);
    }
}

#[test]
fn euclidean_products_carry_affine_functions() {
    for k in 2..=4 {
        let basis = euclidean_basis(k, Some(Fiber::Circle(1.0)), 0).unwrap();
        assert_eq!(basis.len(), k);
        assert_eq!(evaluation_rank(&basis, &base_point(&basis.chart), 1e-10).unwrap(), k);
        let flat = euclidean_basis(k, None, 0).unwrap();
        assert_eq!(flat.len(), k + 1);
    }
}

#[test]
fn gradient_lines_of_a_hyperbolic_solution_are_geodesics() {
    // cosh r sinh y on H², whose gradient is not a coordinate direction
    let tower = build_cosh_tower(Fiber::FlatSpace(1), 1).unwrap();
    let w = SolutionField::cosh_prefix(1, SolutionField::radial(obata_core::parse("sinh(s)").unwrap()));
    let rep = flowline_geodesic_residual(&tower, &w, &[0.2, 0.4], 0.8).unwrap();
    assert!(rep.t_reached > 0.7, "{rep:?}");
    assert!(rep.max_deviation <= 1e-5, "{rep:?}");
}
