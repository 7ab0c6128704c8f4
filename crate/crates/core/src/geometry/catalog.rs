//! Closed-form catalog surfaces and jet-preserving wrappers.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Matrix3;

use super::{DomainPatch, Immersion, Jet2, Vec2, Vec3};

fn rect(u: [f64; 2], v: [f64; 2], h: f64) -> DomainPatch {
    DomainPatch::rectangle(u, v, h).expect("catalog default domain")
}

macro_rules! with_domain {
    ($t:ty) => {
        impl $t {
            pub fn with_domain(mut self, domain: DomainPatch) -> Self {
                self.domain = domain;
                self
            }
        }
    };
}

/// `(s u, s v, 0)`.
#[derive(Debug, Clone)]
pub struct Plane {
    pub scale: f64,
    pub domain: DomainPatch,
}

impl Plane {
    pub fn new(scale: f64) -> Self {
        Self { scale, domain: rect([-1.0, 1.0], [-1.0, 1.0], 0.05) }
    }
}
with_domain!(Plane);

impl Immersion for Plane {
    fn name(&self) -> String {
        format!("plane(scale={})", self.scale)
    }
    fn domain(&self) -> &DomainPatch {
        &self.domain
    }
    fn position(&self, p: Vec2) -> Vec3 {
        Vec3::new(self.scale * p.x, self.scale * p.y, 0.0)
    }
    fn analytic_jet(&self, p: Vec2) -> Option<Jet2> {
        Some(Jet2 {
            p: self.position(p),
            f1: Vec3::new(self.scale, 0.0, 0.0),
            f2: Vec3::new(0.0, self.scale, 0.0),
            f11: Vec3::zeros(),
            f12: Vec3::zeros(),
            f22: Vec3::zeros(),
        })
    }
}

/// The plane in polar coordinates, `(u cos v, u sin v, 0)`; metric `diag(1, u^2)`.
#[derive(Debug, Clone)]
pub struct PolarPlane {
    pub domain: DomainPatch,
}

impl Default for PolarPlane {
    fn default() -> Self {
        Self { domain: rect([0.5, 2.0], [-1.0, 1.0], 0.05) }
    }
}
with_domain!(PolarPlane);

impl Immersion for PolarPlane {
    fn name(&self) -> String {
        "polar_plane".into()
    }
    fn domain(&self) -> &DomainPatch {
        &self.domain
    }
    fn position(&self, p: Vec2) -> Vec3 {
        Vec3::new(p.x * p.y.cos(), p.x * p.y.sin(), 0.0)
    }
    fn analytic_jet(&self, p: Vec2) -> Option<Jet2> {
        let (r, (s, c)) = (p.x, p.y.sin_cos());
        Some(Jet2 {
            p: self.position(p),
            f1: Vec3::new(c, s, 0.0),
            f2: Vec3::new(-r * s, r * c, 0.0),
            f11: Vec3::zeros(),
            f12: Vec3::new(-s, c, 0.0),
            f22: Vec3::new(-r * c, -r * s, 0.0),
        })
    }
}

/// Triaxial ellipsoid in longitude/latitude coordinates,
/// `(a cos u cos v, b sin u cos v, c sin v)`.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    pub axes: [f64; 3],
    pub domain: DomainPatch,
}

impl Ellipsoid {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { axes: [a, b, c], domain: rect([-PI - 0.25, PI + 0.25], [-1.4, 1.4], 0.05) }
    }

    /// `x^2/a^2 + y^2/b^2 + z^2/c^2 - 1`.
    pub fn implicit_residual(&self, x: &Vec3) -> f64 {
        let [a, b, c] = self.axes;
        (x.x / a).powi(2) + (x.y / b).powi(2) + (x.z / c).powi(2) - 1.0
    }
}
with_domain!(Ellipsoid);

fn lonlat_jet(axes: [f64; 3], p: Vec2) -> Jet2 {
    let (su, cu) = p.x.sin_cos();
    let (sv, cv) = p.y.sin_cos();
    let s = |x: f64, y: f64, z: f64| Vec3::new(axes[0] * x, axes[1] * y, axes[2] * z);
    Jet2 {
        p: s(cu * cv, su * cv, sv),
        f1: s(-su * cv, cu * cv, 0.0),
        f2: s(-cu * sv, -su * sv, cv),
        f11: s(-cu * cv, -su * cv, 0.0),
        f12: s(su * sv, -cu * sv, 0.0),
        f22: s(-cu * cv, -su * cv, -sv),
    }
}

impl Immersion for Ellipsoid {
    fn name(&self) -> String {
        format!("ellipsoid({}, {}, {})", self.axes[0], self.axes[1], self.axes[2])
    }
    fn domain(&self) -> &DomainPatch {
        &self.domain
    }
    fn position(&self, p: Vec2) -> Vec3 {
        lonlat_jet(self.axes, p).p
    }
    fn analytic_jet(&self, p: Vec2) -> Option<Jet2> {
        Some(lonlat_jet(self.axes, p))
    }
}

/// Round sphere in longitude/latitude coordinates.
#[derive(Debug, Clone)]
pub struct Sphere {
    pub radius: f64,
    pub domain: DomainPatch,
}

impl Sphere {
    pub fn new(radius: f64) -> Self {
        Self { radius, domain: rect([-PI - 0.25, PI + 0.25], [-1.4, 1.4], 0.05) }
    }

    /// Upper hemisphere chart `v in [0, 1.4]`; the equator is its lower edge.
    pub fn upper_hemisphere(radius: f64) -> Self {
        Self { radius, domain: rect([-PI - 0.25, PI + 0.25], [0.0, 1.4], 0.05) }
    }
}
with_domain!(Sphere);

impl Immersion for Sphere {
    fn name(&self) -> String {
        format!("sphere(r={})", self.radius)
    }
    fn domain(&self) -> &DomainPatch {
        &self.domain
    }
    fn position(&self, p: Vec2) -> Vec3 {
        lonlat_jet([self.radius; 3], p).p
    }
    fn analytic_jet(&self, p: Vec2) -> Option<Jet2> {
        Some(lonlat_jet([self.radius; 3], p))
    }
}

/// `(r cos u, r sin u, v)`.
#[derive(Debug, Clone)]
pub struct Cylinder {
    pub radius: f64,
    pub domain: DomainPatch,
}

impl Cylinder {
    pub fn new(radius: f64) -> Self {
        Self { radius, domain: rect([-PI, PI], [-1.0, 1.0], 0.05) }
    }
}
with_domain!(Cylinder);

impl Immersion for Cylinder {
    fn name(&self) -> String {
        format!("cylinder(r={})", self.radius)
    }
    fn domain(&self) -> &DomainPatch {
        &self.domain
    }
    fn position(&self, p: Vec2) -> Vec3 {
        Vec3::new(self.radius * p.x.cos(), self.radius * p.x.sin(), p.y)
    }
    fn analytic_jet(&self, p: Vec2) -> Option<Jet2> {
        let (s, c) = p.x.sin_cos();
        let r = self.radius;
        Some(Jet2 {
            p: self.position(p),
            f1: Vec3::new(-r * s, r * c, 0.0),
            f2: Vec3::new(0.0, 0.0, 1.0),
            f11: Vec3::new(-r * c, -r * s, 0.0),
            f12: Vec3::zeros(),
            f22: Vec3::zeros(),
        })
    }
}

/// Graph `z = k (x^2 + y^2)`.
#[derive(Debug, Clone)]
pub struct Paraboloid {
    pub coefficient: f64,
    pub domain: DomainPatch,
}

impl Paraboloid {
    pub fn new(coefficient: f64) -> Self {
        Self { coefficient, domain: rect([-1.0, 1.0], [-1.0, 1.0], 0.05) }
    }
}
with_domain!(Paraboloid);

impl Immersion for Paraboloid {
    fn name(&self) -> String {
        format!("paraboloid(k={})", self.coefficient)
    }
    fn domain(&self) -> &DomainPatch {
        &self.domain
    }
    fn position(&self, p: Vec2) -> Vec3 {
        Vec3::new(p.x, p.y, self.coefficient * (p.x * p.x + p.y * p.y))
    }
    fn analytic_jet(&self, p: Vec2) -> Option<Jet2> {
        let k = self.coefficient;
        Some(Jet2 {
            p: self.position(p),
            f1: Vec3::new(1.0, 0.0, 2.0 * k * p.x),
            f2: Vec3::new(0.0, 1.0, 2.0 * k * p.y),
            f11: Vec3::new(0.0, 0.0, 2.0 * k),
            f12: Vec3::zeros(),
            f22: Vec3::new(0.0, 0.0, 2.0 * k),
        })
    }
}

/// Circular cone with apex at the origin, `v (sin a cos u, sin a sin u, cos a)`.
#[derive(Debug, Clone)]
pub struct Cone {
    pub half_angle: f64,
    pub domain: DomainPatch,
}

impl Cone {
    pub fn new(half_angle: f64) -> Self {
        Self { half_angle, domain: rect([-1.0, 1.0], [0.5, 1.5], 0.05) }
    }
}
with_domain!(Cone);

impl Immersion for Cone {
    fn name(&self) -> String {
        format!("cone(half_angle={})", self.half_angle)
    }
    fn domain(&self) -> &DomainPatch {
        &self.domain
    }
    fn position(&self, p: Vec2) -> Vec3 {
        let (sa, ca) = self.half_angle.sin_cos();
        let (s, c) = p.x.sin_cos();
        p.y * Vec3::new(sa * c, sa * s, ca)
    }
    fn analytic_jet(&self, p: Vec2) -> Option<Jet2> {
        let (sa, ca) = self.half_angle.sin_cos();
        let (s, c) = p.x.sin_cos();
        let v = p.y;
        Some(Jet2 {
            p: self.position(p),
            f1: v * sa * Vec3::new(-s, c, 0.0),
            f2: Vec3::new(sa * c, sa * s, ca),
            f11: v * sa * Vec3::new(-c, -s, 0.0),
            f12: sa * Vec3::new(-s, c, 0.0),
            f22: Vec3::zeros(),
        })
    }
}

/// Unit-speed planar profile: the axis for `a <= 0` and the arclength
/// parametrized graph `z = k x^3` for `a > 0`. It is C^2 with Lipschitz
/// second derivative at the junction.
#[derive(Debug, Clone, Copy)]
struct CubicProfile {
    k: f64,
}

const GL8: [(f64, f64); 4] = [
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

impl CubicProfile {
    fn speed(&self, x: f64) -> f64 {
        let d = 3.0 * self.k * x * x;
        (1.0 + d * d).sqrt()
    }

    fn arclength(&self, x: f64) -> f64 {
        let panels = (x / 0.05).ceil().max(1.0) as usize;
        let w = x / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * w;
            for &(node, weight) in &GL8 {
                total += weight * (self.speed(mid + 0.5 * w * node) + self.speed(mid - 0.5 * w * node));
            }
        }
        0.5 * w * total
    }

    /// Abscissa reached after arclength `a`.
    fn abscissa(&self, a: f64) -> f64 {
        let mut x = a;
        for _ in 0..60 {
            let dx = (self.arclength(x) - a) / self.speed(x);
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        x
    }

    /// Position, unit tangent and acceleration at arclength `a`.
    fn eval(&self, a: f64) -> ([f64; 2], [f64; 2], [f64; 2]) {
        if a <= 0.0 || self.k == 0.0 {
            return ([a, 0.0], [1.0, 0.0], [0.0, 0.0]);
        }
        let x = self.abscissa(a);
        let zp = 3.0 * self.k * x * x;
        let zpp = 6.0 * self.k * x;
        let w = (1.0 + zp * zp).sqrt();
        let (tx, tz) = (1.0 / w, zp / w);
        let kappa = zpp / (w * w * w);
        ([x, self.k * x * x * x], [tx, tz], [-kappa * tz, kappa * tx])
    }
}

/// A flat sheet bent up along a fold line: points with
/// `<(u, v), w> <= offset` stay in the plane, the rest follow the cubic
/// profile. `angle = 0, offset = 0` is the bent strip; an oblique fold on a
/// disk is the rolled-corner counterexample.
#[derive(Debug, Clone)]
pub struct BentPlane {
    pub angle: f64,
    pub offset: f64,
    pub coefficient: f64,
    pub domain: DomainPatch,
}

impl BentPlane {
    pub fn new(angle: f64, offset: f64, coefficient: f64) -> Self {
        Self { angle, offset, coefficient, domain: rect([-1.0, 1.0], [-1.0, 1.0], 0.05) }
    }

    pub fn strip() -> Self {
        Self::new(0.0, 0.0, 1.0)
    }

    /// Signed distance past the fold line in parameter space.
    pub fn fold_coordinate(&self, p: Vec2) -> f64 {
        let (s, c) = self.angle.sin_cos();
        c * p.x + s * p.y - self.offset
    }

    fn jet_impl(&self, p: Vec2) -> Jet2 {
        let (s, c) = self.angle.sin_cos();
        let a = c * p.x + s * p.y - self.offset;
        let b = -s * p.x + c * p.y;
        let (pos, tan, acc) = CubicProfile { k: self.coefficient }.eval(a);
        let w = Vec3::new(c, s, 0.0);
        let wp = Vec3::new(-s, c, 0.0);
        let ez = Vec3::z();
        let fa = tan[0] * w + tan[1] * ez;
        let faa = acc[0] * w + acc[1] * ez;
        Jet2 {
            p: (self.offset + pos[0]) * w + b * wp + pos[1] * ez,
            f1: c * fa - s * wp,
            f2: s * fa + c * wp,
            f11: c * c * faa,
            f12: c * s * faa,
            f22: s * s * faa,
        }
    }
}
with_domain!(BentPlane);

impl Immersion for BentPlane {
    fn name(&self) -> String {
        format!("bent_plane(angle={}, offset={}, k={})", self.angle, self.offset, self.coefficient)
    }
    fn domain(&self) -> &DomainPatch {
        &self.domain
    }
    fn position(&self, p: Vec2) -> Vec3 {
        self.jet_impl(p).p
    }
    fn analytic_jet(&self, p: Vec2) -> Option<Jet2> {
        Some(self.jet_impl(p))
    }
}

/// `x -> A f(x) + b` for any invertible `A` (rigid motions, reflections,
/// scalings).
#[derive(Debug, Clone)]
pub struct Transformed {
    pub inner: Arc<dyn Immersion>,
    pub linear: Matrix3<f64>,
    pub translation: Vec3,
}

impl Transformed {
    pub fn new(inner: Arc<dyn Immersion>, linear: Matrix3<f64>, translation: Vec3) -> Self {
        Self { inner, linear, translation }
    }
}

impl Immersion for Transformed {
    fn name(&self) -> String {
        format!("affine({})", self.inner.name())
    }
    fn domain(&self) -> &DomainPatch {
        self.inner.domain()
    }
    fn position(&self, p: Vec2) -> Vec3 {
        self.linear * self.inner.position(p) + self.translation
    }
    fn analytic_jet(&self, p: Vec2) -> Option<Jet2> {
        self.inner.analytic_jet(p).map(|j| j.map_affine(&self.linear, &self.translation))
    }
}

/// `f o phi` with `phi(u, v) = (u + a v^2 sin u, v + b v^2)`. The warp fixes
/// the line `v = 0` pointwise with identity differential there.
#[derive(Debug, Clone)]
pub struct Warped {
    pub inner: Arc<dyn Immersion>,
    pub a: f64,
    pub b: f64,
}

impl Warped {
    pub fn new(inner: Arc<dyn Immersion>, a: f64, b: f64) -> Self {
        Self { inner, a, b }
    }

    fn warp(&self, p: Vec2) -> Vec2 {
        Vec2::new(p.x + self.a * p.y * p.y * p.x.sin(), p.y + self.b * p.y * p.y)
    }
}

impl Immersion for Warped {
    fn name(&self) -> String {
        format!("warped({}, a={}, b={})", self.inner.name(), self.a, self.b)
    }
    fn domain(&self) -> &DomainPatch {
        self.inner.domain()
    }
    fn position(&self, p: Vec2) -> Vec3 {
        self.inner.position(self.warp(p))
    }
    fn analytic_jet(&self, p: Vec2) -> Option<Jet2> {
        let q = self.warp(p);
        let j = self.inner.analytic_jet(q)?;
        let (su, cu) = p.x.sin_cos();
        let (a, b, v) = (self.a, self.b, p.y);
        // Jacobian columns and second derivatives of the warp.
        let d1 = Vec2::new(1.0 + a * v * v * cu, 0.0);
        let d2 = Vec2::new(2.0 * a * v * su, 1.0 + 2.0 * b * v);
        let d11 = Vec2::new(-a * v * v * su, 0.0);
        let d12 = Vec2::new(2.0 * a * v * cu, 0.0);
        let d22 = Vec2::new(2.0 * a * su, 2.0 * b);
        let first = |d: Vec2| j.f1 * d.x + j.f2 * d.y;
        let hess = |x: Vec2, y: Vec2| {
            j.f11 * x.x * y.x + j.f12 * (x.x * y.y + x.y * y.x) + j.f22 * x.y * y.y
        };
        Some(Jet2 {
            p: j.p,
            f1: first(d1),
            f2: first(d2),
            f11: hess(d1, d1) + first(d11),
            f12: hess(d1, d2) + first(d12),
            f22: hess(d2, d2) + first(d22),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DerivativeMode, ParamSurface};

    fn fd_agrees(imm: Arc<dyn Immersion>, p: Vec2, tol: f64) {
        let a = ParamSurface::new(imm.clone(), DerivativeMode::Analytic).unwrap().jet(p).unwrap();
        let fd = ParamSurface::new(imm, DerivativeMode::FiniteDifference { spacing: 1e-4, richardson: true })
            .unwrap()
            .jet(p)
            .unwrap();
        let dev = a.max_deviation(&fd);
        assert!(dev < tol, "deviation {dev}");
    }

    #[test]
    fn sphere_jet_at_origin() {
        let j = Sphere::new(1.0).analytic_jet(Vec2::zeros()).unwrap();
        assert_eq!(j.p, Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(j.f1, Vec3::new(0.0, 1.0, 0.0));
        assert_eq!(j.f2, Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(j.f11, Vec3::new(-1.0, 0.0, 0.0));
    }

    #[test]
    fn analytic_jets_match_differences() {
        let p = Vec2::new(0.3, 0.2);
        let list: Vec<Arc<dyn Immersion>> = vec![
            Arc::new(Sphere::new(1.0)),
            Arc::new(Ellipsoid::new(1.0, 1.2, 1.5)),
            Arc::new(Cylinder::new(0.7)),
            Arc::new(Paraboloid::new(1.0)),
            Arc::new(Cone::new(0.5).with_domain(rect([-1.0, 1.0], [0.0, 1.5], 0.05))),
            Arc::new(PolarPlane::default().with_domain(rect([0.1, 2.0], [-1.0, 1.0], 0.05))),
            Arc::new(BentPlane::strip()),
            Arc::new(BentPlane::new(0.7, 0.1, 2.0)),
            Arc::new(Warped::new(Arc::new(Sphere::new(1.0)), 0.3, 0.2)),
        ];
        for imm in list {
            fd_agrees(imm, p, 1e-6);
        }
    }

    #[test]
    fn bent_profile_is_unit_speed() {
        let b = BentPlane::strip();
        for &u in &[-0.5, 0.0, 0.1, 0.5, 0.9] {
            let j = b.analytic_jet(Vec2::new(u, 0.3)).unwrap();
            assert!((j.f1.norm() - 1.0).abs() < 1e-14);
            assert!(j.f1.dot(&j.f2).abs() < 1e-15);
            assert!(j.f11.dot(&j.f1).abs() < 1e-13);
        }
        let j = b.analytic_jet(Vec2::new(0.5, 0.0)).unwrap();
        // Position lies on the graph z = x^3.
        assert!((j.p.z - j.p.x.powi(3)).abs() < 1e-14);
    }

    #[test]
    fn warp_fixes_axis() {
        let s: Arc<dyn Immersion> = Arc::new(Sphere::new(1.0));
        let w = Warped::new(s.clone(), 0.4, -0.3);
        for &u in &[-1.0, 0.0, 0.8] {
            let a = s.analytic_jet(Vec2::new(u, 0.0)).unwrap();
            let b = w.analytic_jet(Vec2::new(u, 0.0)).unwrap();
            assert!((a.p - b.p).norm() < 1e-15);
            assert!((a.f1 - b.f1).norm() < 1e-15);
            assert!((a.f2 - b.f2).norm() < 1e-15);
        }
    }
}
