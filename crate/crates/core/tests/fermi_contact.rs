use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rigidity_core::contact::{contact_order, curve_data, recover_conormal_branch, recover_second_form_on_curve};
use rigidity_core::fermi::{gauss_lemma_check, geodesic, FermiChart};
use rigidity_core::geometry::*;
use rigidity_core::pipeline::RigidMotion;

fn ellipsoid() -> ParamSurface {
    ParamSurface::analytic(Ellipsoid::new(1.0, 1.2, 1.5))
}

fn arc(f: &ParamSurface, start: [f64; 2], direction: [f64; 2], len: f64) -> CurveOnSurface {
    CurveOnSurface::new(CurveKind::Line { start, direction }, [0.0, len]).unwrap().arclength(f).unwrap()
}

#[test]
fn gauss_lemma_error_scales_with_step() {
    let f = ellipsoid();
    let c = arc(&f, [-1.0, 0.2], [1.0, 0.3], 2.0);
    for h in [2e-2, 1e-2] {
        let r = gauss_lemma_check(&FermiChart::build(&f, &c, 0.4, h).unwrap(), 6, 16).unwrap();
        assert!(r.residual() < 10.0 * h * h, "h = {h}: {r:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn geodesics_conserve_speed(u in -2.0..2.0f64, v in -0.8..0.8f64, angle in 0.0..(2.0 * PI)) {
        let f = ellipsoid();
        let p = Vec2::new(u, v);
        let m = first_fundamental_form(&f.jet(p).unwrap()).unwrap();
        let w = Vec2::new(angle.cos(), angle.sin());
        let w = w / m.norm(&w);
        let path = geodesic(&f, p, w, 0.5, 1e-3).unwrap();
        for (q, vel) in path.uv.iter().zip(&path.velocity) {
            let mq = first_fundamental_form(&f.jet_unchecked(*q).unwrap()).unwrap();
            prop_assert!((mq.norm(vel) - 1.0).abs() < 1e-8 * (1.0 + path.length()));
        }
    }

    #[test]
    fn chart_base_is_the_curve(t0 in -0.8..0.0f64, slope in -0.5..0.5f64) {
        let f = ellipsoid();
        let c = arc(&f, [-0.6, t0], [1.0, slope], 1.2);
        let chart = FermiChart::build(&f, &c, 0.1, 1e-3).unwrap();
        for t in chart.t_samples(9) {
            let q = c.eval(t).unwrap().uv;
            prop_assert!((chart.position(0.0, t).unwrap() - f.position(q)).norm() < 1e-12);
        }
    }

    #[test]
    fn recovered_conormal_is_unit_in_the_normal_plane(seed in 0u64..500, v0 in -0.6..0.6f64) {
        let f = RigidMotion::random(&mut ChaCha8Rng::seed_from_u64(seed)).surface(&ellipsoid());
        let chart = FermiChart::build(&f, &arc(&f, [-0.8, v0], [1.0, 0.0], 1.6), 0.1, 1e-3).unwrap();
        for s in curve_data(&chart, 11).unwrap().samples {
            let c = recover_conormal_branch(&s, 1.0).unwrap();
            let (a, b) = (c.dot(&s.principal_normal), c.dot(&s.binormal));
            prop_assert!((a * a + b * b - 1.0).abs() < 1e-10);
            prop_assert!(c.dot(&s.tangent).abs() < 1e-8);
        }
    }

    #[test]
    fn orientation_flip_changes_only_the_binormal_part(seed in 0u64..500) {
        let f = RigidMotion::random(&mut ChaCha8Rng::seed_from_u64(seed)).surface(&ellipsoid());
        let chart = FermiChart::build(&f, &arc(&f, [-0.8, 0.3], [1.0, 0.2], 1.6), 0.1, 1e-3).unwrap();
        let data = curve_data(&chart, 9).unwrap();
        let plus = recover_second_form_on_curve(&chart, &data, 1.0, 1e-2).unwrap();
        let minus = recover_second_form_on_curve(&chart, &data, -1.0, 1e-2).unwrap();
        for ((s, p), m) in data.samples.iter().zip(&plus).zip(&minus) {
            prop_assert!((p.conormal.dot(&s.principal_normal) - m.conormal.dot(&s.principal_normal)).abs() < 1e-12);
            prop_assert!((p.conormal.dot(&s.binormal) + m.conormal.dot(&s.binormal)).abs() < 1e-12);
            prop_assert!((p.l[2] + m.l[2]).abs() < 1e-12);
        }
    }
}

#[test]
fn contact_verdicts_are_monotone_in_order() {
    let f = ellipsoid();
    let g = ParamSurface::analytic(Ellipsoid::new(1.0, 1.2, 1.5 + 1e-4));
    let chart = |s: &ParamSurface| FermiChart::build(s, &arc(s, [-0.8, -0.2], [1.0, 0.4], 1.5), 0.1, 1e-3).unwrap();
    let rep = contact_order(&chart(&f), &chart(&g), 3, 21).unwrap();
    assert!(rep.orders.iter().all(|o| o.max_deviation >= 0.0));
    let first_fail = rep.orders.iter().position(|o| !o.pass).unwrap_or(rep.orders.len());
    assert!(rep.orders[first_fail..].iter().all(|o| !o.pass), "{rep:?}");
    assert_eq!(rep.achieved, first_fail.checked_sub(1).map(|i| rep.orders[i].order));
    assert!(first_fail < rep.orders.len(), "a perturbed partner must lose contact: {rep:?}");
}
