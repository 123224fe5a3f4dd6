use proptest::prelude::*;
use semigabor::{make_affine, make_e2, FreqPoint, GroupDescriptor, GroupPoint, HPoint, KPoint};

fn close(a: &GroupPoint, b: &GroupPoint, angular: bool) -> bool {
    let h_ok = if angular {
        let (x, y) = (a.h.coords()[0], b.h.coords()[0]);
        (x.cos() - y.cos()).abs() < 1e-12 && (x.sin() - y.sin()).abs() < 1e-12
    } else {
        (a.h.coords()[0] - b.h.coords()[0]).abs() <= 1e-12 * a.h.coords()[0].abs().max(1.0)
    };
    let k_ok = a.k.coords().iter().zip(b.k.coords()).all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(1.0));
    h_ok && k_ok
}

fn affine_point() -> impl Strategy<Value = GroupPoint> {
    (-3.0f64..3.0, -10.0f64..10.0).prop_map(|(l, b)| GroupPoint::new(HPoint::new(vec![l.exp()]), KPoint::new(vec![b])))
}

fn e2_point() -> impl Strategy<Value = GroupPoint> {
    (0.0f64..std::f64::consts::TAU, -10.0f64..10.0, -10.0f64..10.0)
        .prop_map(|(t, x, y)| GroupPoint::new(HPoint::new(vec![t]), KPoint::new(vec![x, y])))
}

fn laws(g: &GroupDescriptor, a: &GroupPoint, b: &GroupPoint, c: &GroupPoint, angular: bool) {
    let ab_c = g.compose(&g.compose(a, b).unwrap(), c).unwrap();
    let a_bc = g.compose(a, &g.compose(b, c).unwrap()).unwrap();
    assert!(close(&ab_c, &a_bc, angular), "{ab_c:?} vs {a_bc:?}");
    let e = g.identity();
    assert!(close(&g.compose(a, &e).unwrap(), a, angular));
    assert!(close(&g.compose(&e, a).unwrap(), a, angular));
    let inv = g.inverse(a).unwrap();
    assert!(close(&g.compose(a, &inv).unwrap(), &e, angular));
    assert!(close(&g.compose(&inv, a).unwrap(), &e, angular));
}

fn action_laws(g: &GroupDescriptor, h: &HPoint, t: &HPoint, k: &KPoint, w: &FreqPoint) {
    let ht = g.compose(&GroupPoint::new(h.clone(), g.identity().k), &GroupPoint::new(t.clone(), g.identity().k)).unwrap().h;
    let lhs = g.delta(&ht);
    let rhs = g.delta(h) * g.delta(t);
    assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());

    let before = g.pairing(k, w);
    let after = g.pairing(&g.act(h, k), &g.dual_act(h, w));
    assert!((before - after).norm() <= 1e-9, "{before} vs {after}");

    let nested = g.dual_act(h, &g.dual_act(t, w));
    let direct = g.dual_act(&ht, w);
    for (x, y) in nested.coords().iter().zip(direct.coords()) {
        assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
    }
}

proptest! {
    #[test]
    fn affine_group_laws(a in affine_point(), b in affine_point(), c in affine_point()) {
        laws(&make_affine(), &a, &b, &c, false);
    }

    #[test]
    fn e2_group_laws(a in e2_point(), b in e2_point(), c in e2_point()) {
        laws(&make_e2(), &a, &b, &c, true);
    }

    #[test]
    fn affine_action_laws(a in affine_point(), b in affine_point(), x in -5.0f64..5.0, w in -5.0f64..5.0) {
        action_laws(&make_affine(), &a.h, &b.h, &KPoint::new(vec![x]), &FreqPoint::new(vec![w]));
    }

    #[test]
    fn e2_action_laws(a in e2_point(), b in e2_point(), x in -5.0f64..5.0, y in -5.0f64..5.0, w in (-5.0f64..5.0, -5.0f64..5.0)) {
        action_laws(&make_e2(), &a.h, &b.h, &KPoint::new(vec![x, y]), &FreqPoint::new(vec![w.0, w.1]));
    }

    #[test]
    fn e2_dual_action_preserves_norm(a in e2_point(), w in (-5.0f64..5.0, -5.0f64..5.0)) {
        let out = make_e2().dual_act(&a.h, &FreqPoint::new(vec![w.0, w.1]));
        let n = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((n(out.coords()) - n(&[w.0, w.1])).abs() <= 1e-12 * n(&[w.0, w.1]).max(1.0));
    }
}
