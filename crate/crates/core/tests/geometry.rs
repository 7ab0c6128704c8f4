use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rigidity_core::geometry::*;
use rigidity_core::pipeline::RigidMotion;

fn catalog() -> Vec<ParamSurface> {
    let sphere: Arc<dyn Immersion> = Arc::new(Sphere::new(1.0));
    vec![
        ParamSurface::analytic(Plane::new(1.5)),
        ParamSurface::analytic(PolarPlane::default()),
        ParamSurface::analytic(Sphere::new(1.0)),
        ParamSurface::analytic(Sphere::new(2.0)),
        ParamSurface::analytic(Cylinder::new(1.0)),
        ParamSurface::analytic(Ellipsoid::new(1.0, 1.2, 1.5)),
        ParamSurface::analytic(Paraboloid::new(1.0)),
        ParamSurface::analytic(Cone::new(0.5)),
        ParamSurface::analytic(BentPlane::strip()),
        ParamSurface::analytic(BentPlane::new(PI / 4.0, 0.6, 1.0)),
        ParamSurface::analytic(Warped::new(sphere, 0.3, 0.2)),
    ]
}

fn point(f: &ParamSurface, a: f64, b: f64) -> Vec2 {
    let (u, v) = f.domain().bounds();
    let lerp = |r: [f64; 2], x: f64| r[0] + (0.05 + 0.9 * x) * (r[1] - r[0]);
    Vec2::new(lerp(u, a), lerp(v, b))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn metric_compatibility_two_routes(idx in 0usize..11, a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let f = &catalog()[idx];
        let p = point(f, a, b);
        let j = f.jet(p).unwrap();
        // Christoffel symbols from differences of the metric field only.
        let m = christoffel_from_metric_samples(
            |q| Ok(first_fundamental_form(&f.jet_unchecked(q)?)?.g), p, 1e-3).unwrap();
        for i in 0..2 {
            for jj in 0..2 {
                for k in 0..2 {
                    let lhs = j.second(i, jj).dot(&j.partial(k));
                    let rhs: f64 = (0..2).map(|l| m.g[(k, l)] * m.gamma[l][i][jj]).sum();
                    prop_assert!((lhs - rhs).abs() < 1e-8, "{} at {p:?}: {lhs} vs {rhs}", f.name());
                }
            }
        }
    }

    #[test]
    fn metric_inverse_and_symmetry(idx in 0usize..11, a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let f = &catalog()[idx];
        let m = christoffel(f, point(f, a, b)).unwrap();
        prop_assert!(m.det > 0.0 && m.g[(0, 0)] > 0.0);
        prop_assert!((m.inv * m.g - Mat2::identity()).abs().max() < 1e-12);
        for k in 0..2 {
            prop_assert_eq!(m.gamma[k][0][1], m.gamma[k][1][0]);
        }
    }

    #[test]
    fn shape_data_identities(idx in 0usize..11, a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let f = &catalog()[idx];
        let j = f.jet(point(f, a, b)).unwrap();
        let m = first_fundamental_form(&j).unwrap();
        let s = second_fundamental_form(&j).unwrap();
        prop_assert!((s.n.norm() - 1.0).abs() < 1e-12);
        prop_assert!(rel(s.gauss * m.det, s.l.determinant()) < 1e-10);
        prop_assert!(rel(s.k1 * s.k2, s.gauss) < 1e-10);
        prop_assert!(rel(s.k1 + s.k2, s.shape_operator.trace()) < 1e-10);
        prop_assert!(s.mean_vector.cross(&s.n).norm() < 1e-12);
    }

    #[test]
    fn egregium_with_analytic_jets(idx in 0usize..11, a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let f = &catalog()[idx];
        let p = point(f, a, b);
        let ext = second_fundamental_form(&f.jet(p).unwrap()).unwrap().gauss;
        let int = gauss_curvature_intrinsic(f, p).unwrap();
        prop_assert!((int - ext).abs() < 1e-5 * (1.0 + ext.abs()), "{}: {int} vs {ext}", f.name());
    }

    #[test]
    fn rigid_motion_invariance(idx in 0usize..11, a in 0.0..1.0f64, b in 0.0..1.0f64, seed in 0u64..1000) {
        let f = &catalog()[idx];
        let rho = RigidMotion::random(&mut ChaCha8Rng::seed_from_u64(seed));
        let ft = rho.surface(f);
        let p = point(f, a, b);
        let (j, jt) = (f.jet(p).unwrap(), ft.jet(p).unwrap());
        let (m, mt) = (metric_with_christoffel(&j).unwrap(), metric_with_christoffel(&jt).unwrap());
        let scale = 1.0 + m.g.abs().max();
        prop_assert!((m.g - mt.g).abs().max() < 1e-12 * scale);
        for k in 0..2 { for i in 0..2 { for l in 0..2 {
            prop_assert!((m.gamma[k][i][l] - mt.gamma[k][i][l]).abs() < 1e-10 * (1.0 + m.gamma[k][i][l].abs()));
        }}}
        let (s, st) = (second_fundamental_form(&j).unwrap(), second_fundamental_form(&jt).unwrap());
        prop_assert!((s.gauss - st.gauss).abs() < 1e-10 * (1.0 + s.gauss.abs()));
        prop_assert!((rho.rotation * s.n - st.n).norm() < 1e-12);
    }
}

#[test]
fn finite_difference_curvature_is_second_order() {
    let spacing = 0.1;
    let f = ParamSurface::analytic(Ellipsoid::new(1.0, 1.2, 1.5).with_domain(
        DomainPatch::new(DomainKind::Rectangle { u: [-3.0, 3.0], v: [-1.2, 1.2] }, spacing).unwrap(),
    ));
    let pts = [Vec2::new(0.3, 0.2), Vec2::new(-1.0, 0.5), Vec2::new(2.0, -0.7)];
    let mut errs = Vec::new();
    for h in [1e-2, 5e-3] {
        let fd = f.with_mode(DerivativeMode::FiniteDifference { spacing: h, richardson: false }).unwrap();
        let e = pts.iter().map(|&p| {
            let exact = second_fundamental_form(&f.jet(p).unwrap()).unwrap().gauss;
            (gauss_curvature_intrinsic(&fd, p).unwrap() - exact).abs()
        }).fold(0.0, f64::max);
        errs.push(e);
    }
    assert!(errs[0] < 1e-3, "{errs:?}");
    let order = (errs[0] / errs[1]).log2();
    assert!((1.8..2.3).contains(&order), "{errs:?}");
}

#[test]
fn richardson_beats_plain_differences() {
    let f = ParamSurface::analytic(Sphere::new(1.0));
    let p = Vec2::new(0.4, 0.3);
    let exact = f.jet(p).unwrap();
    let err = |richardson| {
        let fd = f.with_mode(DerivativeMode::FiniteDifference { spacing: 1e-2, richardson }).unwrap();
        fd.jet(p).unwrap().max_deviation(&exact)
    };
    assert!(err(true) < 0.05 * err(false));
}

#[test]
fn curves_have_unit_speed_after_reparametrization() {
    let f = ParamSurface::analytic(Ellipsoid::new(1.0, 1.2, 1.5));
    let c = CurveOnSurface::new(CurveKind::Circle { center: [0.2, 0.1], radius: 0.4 }, [0.0, 2.0 * PI])
        .unwrap()
        .arclength(&f)
        .unwrap();
    assert!(c.is_closed());
    assert!(c.arclength_defect(&f, 200).unwrap() < 1e-8);
}

#[test]
fn stencil_spacing_is_bounded_by_grid_spacing() {
    let f = ParamSurface::analytic(Sphere::new(1.0));
    assert!(f.with_mode(DerivativeMode::FiniteDifference { spacing: 0.02, richardson: false }).is_err());
    assert!(f.with_mode(DerivativeMode::FiniteDifference { spacing: 0.0, richardson: false }).is_err());
}
