use carnot_core::calculus::apply_field;
use carnot_core::{FdScheme, GroupDescriptor, Point, ScalarField};
use proptest::prelude::*;

fn point(d: usize, range: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-range..range, 2 * d + 1)
}

fn d_and_points(k: usize) -> impl Strategy<Value = (usize, Vec<Vec<f64>>)> {
    (1usize..=3).prop_flat_map(move |d| (Just(d), prop::collection::vec(point(d, 2.0), k)))
}

fn close(a: &Point, b: &Point, tol: f64) -> bool {
    a.coords().iter().zip(b.coords()).all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn dilation_is_homogeneous_for_the_gauge(
        (d, x) in (1usize..=3).prop_flat_map(|d| (Just(d), point(d, 5.0))),
        lambda in 1e-2f64..1e2,
    ) {
        let g = GroupDescriptor::heisenberg(d).unwrap();
        let x = Point::new(x).unwrap();
        let rho = g.homogeneous_norm(&x).unwrap();
        let scaled = g.homogeneous_norm(&g.dilate(lambda, &x).unwrap()).unwrap();
        prop_assert!((scaled - lambda * rho).abs() <= 1e-12 * (1.0 + lambda * rho));
    }

    #[test]
    fn dilation_is_a_group_homomorphism((d, p) in d_and_points(2), lambda in 0.1f64..10.0) {
        let g = GroupDescriptor::heisenberg(d).unwrap();
        let (x, y) = (Point::new(p[0].clone()).unwrap(), Point::new(p[1].clone()).unwrap());
        let lhs = g.dilate(lambda, &g.multiply(&x, &y).unwrap()).unwrap();
        let rhs = g.multiply(&g.dilate(lambda, &x).unwrap(), &g.dilate(lambda, &y).unwrap()).unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }
}

proptest! {
    #[test]
    fn group_axioms_hold((d, p) in d_and_points(3)) {
        let g = GroupDescriptor::heisenberg(d).unwrap();
        let [x, y, z] = [0, 1, 2].map(|i| Point::new(p[i].clone()).unwrap());
        let xy_z = g.multiply(&g.multiply(&x, &y).unwrap(), &z).unwrap();
        let x_yz = g.multiply(&x, &g.multiply(&y, &z).unwrap()).unwrap();
        prop_assert!(close(&xy_z, &x_yz, 1e-12));
        let e = g.identity();
        prop_assert!(close(&g.multiply(&x, &e).unwrap(), &x, 1e-12));
        prop_assert!(close(&g.multiply(&e, &x).unwrap(), &x, 1e-12));
        let inv = g.inverse(&x).unwrap();
        prop_assert!(close(&g.multiply(&x, &inv).unwrap(), &e, 1e-12));
        prop_assert!(close(&g.multiply(&inv, &x).unwrap(), &e, 1e-12));
    }

    #[test]
    fn gauge_is_symmetric_under_inversion((d, p) in d_and_points(1)) {
        let g = GroupDescriptor::heisenberg(d).unwrap();
        let x = Point::new(p[0].clone()).unwrap();
        prop_assert_eq!(g.homogeneous_norm(&x).unwrap(), g.homogeneous_norm(&g.inverse(&x).unwrap()).unwrap());
    }

    #[test]
    fn horizontal_fields_are_left_invariant((d, p) in d_and_points(2), j in 0usize..6, which in 0usize..2) {
        let g = GroupDescriptor::heisenberg(d).unwrap();
        let j = j % g.m();
        let u = match which {
            0 => ScalarField::rho4(d),
            _ => ScalarField::half_square(2 * d).plus(&ScalarField::coordinate(2 * d)),
        };
        let (a, x) = (Point::new(p[0].clone()).unwrap(), Point::new(p[1].clone()).unwrap());
        let shifted = {
            let (g, a, u) = (g.clone(), a.clone(), u.clone());
            ScalarField::new("u o L_a", move |y| u.value(g.multiply(&a, &Point::from(y)).unwrap().coords()))
        };
        let s = FdScheme::default();
        let lhs = apply_field(&g, j, &shifted, x.coords(), &s).unwrap();
        let ax = g.multiply(&a, &x).unwrap();
        let rhs = apply_field(&g, j, &u, ax.coords(), &s).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-6 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
    }
}
