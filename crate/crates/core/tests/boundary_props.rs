use fracstab_core::dboundary::{crb_general, crb_three_term, log_grid, rrb};
use fracstab_core::{
    matignon_check, Bindings, Coefficient, FracOrder, Plane, QuasiPolynomial, Term, VerdictClass,
};
use proptest::prelude::*;

fn template(low: FracOrder, high: FracOrder) -> QuasiPolynomial {
    QuasiPolynomial::new([
        Term::new(Coefficient::param("a"), high),
        Term::new(Coefficient::param("b"), low),
        Term::new(Coefficient::param("c"), FracOrder::ZERO),
    ])
    .unwrap()
}

fn plane() -> Plane {
    Plane::new("a", "c")
}

fn fix_b(b: f64) -> Bindings {
    [("b".to_string(), b)].into_iter().collect()
}

fn b_value() -> impl Strategy<Value = f64> {
    prop_oneof![-6.0f64..-0.2, 0.2f64..6.0]
}

fn orders() -> impl Strategy<Value = (FracOrder, FracOrder)> {
    (1u64..20, 1u64..20).prop_filter_map("low < high", |(x, y)| {
        let (lo, hi) = (FracOrder::new(x, 10).ok()?, FracOrder::new(y, 10).ok()?);
        (lo < hi).then_some((lo, hi))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn crb_samples_are_marginal(b in b_value(), (lo, hi) in orders(), lw in -2.0f64..2.0) {
        let omega = 10f64.powf(lw);
        let qp = template(lo, hi);
        let branch = crb_general(&qp, &plane(), &fix_b(b), &[omega]).unwrap();
        prop_assume!(!branch.samples.is_empty());
        let (a, c) = branch.samples[0].point;
        let values: Bindings = [("a".into(), a), ("b".into(), b), ("c".into(), c)].into_iter().collect();
        let v = matignon_check(&qp.substitute(&values).unwrap()).unwrap();
        prop_assert!(v.margin.abs() <= 1e-6, "margin {} at ({}, {})", v.margin, a, c);
        prop_assert_eq!(v.class, VerdictClass::Marginal);
    }

    #[test]
    fn rrb_points_have_a_zero_root(b in b_value(), (lo, hi) in orders(), a in -10.0f64..10.0) {
        prop_assume!(a.abs() > 1e-3);
        let qp = template(lo, hi);
        let line = rrb(&qp, &plane()).unwrap();
        let c = -(line.constant + line.p1 * a) / line.p2;
        let values: Bindings = [("a".into(), a), ("b".into(), b), ("c".into(), c)].into_iter().collect();
        let v = matignon_check(&qp.substitute(&values).unwrap()).unwrap();
        prop_assert!(v.witnesses.iter().any(|w| w.at_origin));
        prop_assert_ne!(v.class, VerdictClass::Stable);
    }

    #[test]
    fn basset_crb_is_swap_symmetric(b in b_value()) {
        let grid = log_grid(1e-4, 1e4, 2001);
        let qp = template(FracOrder::new(1, 2).unwrap(), FracOrder::ONE);
        let branch = crb_general(&qp, &plane(), &fix_b(b), &grid).unwrap();
        let pts: Vec<(f64, f64)> = branch.samples.iter().map(|s| s.point).collect();
        for &(a, c) in &pts {
            let nearest = pts
                .iter()
                .map(|&(x, y)| (x - c).hypot(y - a) / a.abs().max(c.abs()).max(1.0))
                .fold(f64::INFINITY, f64::min);
            prop_assert!(nearest <= 1e-9, "({}, {}) has no mirror ({:e})", a, c, nearest);
        }
    }
}

#[test]
fn closed_form_matches_general_solver() {
    let grid = log_grid(1e-3, 1e3, 500);
    for (b, lo, hi) in [(-2.0, (1, 2), (1, 1)), (6009.5, (97, 100), (131, 100)), (3.0, (1, 5), (3, 2))] {
        let (lo, hi) = (FracOrder::new(lo.0, lo.1).unwrap(), FracOrder::new(hi.0, hi.1).unwrap());
        let closed = crb_three_term(b, lo, hi, &grid).unwrap();
        let general = crb_general(&template(lo, hi), &plane(), &fix_b(b), &grid).unwrap();
        assert_eq!(closed.samples.len(), general.samples.len());
        for (x, y) in closed.samples.iter().zip(&general.samples) {
            assert!((x.point.0 - y.point.0).abs() <= 1e-9 * x.point.0.abs());
            assert!((x.point.1 - y.point.1).abs() <= 1e-9 * x.point.1.abs());
        }
    }
}
