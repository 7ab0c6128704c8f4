use serde::Serialize;

use super::{first_fundamental_form, CurveOnSurface, Jet2, ParamSurface, Vec2, Vec3};
use crate::error::{LabError, Result};

/// Normal curvatures below this are treated as asymptotic tangency.
pub const ASYMPTOTIC_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct IsometryReport {
    pub max_deviation: f64,
    /// `"g11"`, `"g12"` or `"g22"`.
    pub worst_entry: &'static str,
    pub worst_point: [f64; 2],
    pub samples: usize,
    pub pass: bool,
}

/// Compares induced metrics on a shared sample set.
pub fn isometry_check(f: &ParamSurface, ft: &ParamSurface, samples: &[Vec2], tol: f64) -> Result<IsometryReport> {
    let mut rep = IsometryReport {
        max_deviation: 0.0,
        worst_entry: "g11",
        worst_point: [f64::NAN; 2],
        samples: samples.len(),
        pass: true,
    };
    for &p in samples {
        let g = first_fundamental_form(&f.jet(p)?)?.g;
        let gt = first_fundamental_form(&ft.jet(p)?)?.g;
        for (name, (i, j)) in [("g11", (0, 0)), ("g12", (0, 1)), ("g22", (1, 1))] {
            let d = (g[(i, j)] - gt[(i, j)]).abs();
            if d > rep.max_deviation || d.is_nan() || rep.worst_point[0].is_nan() {
                rep.max_deviation = d;
                rep.worst_entry = name;
                rep.worst_point = [p.x, p.y];
            }
        }
    }
    rep.pass = rep.max_deviation < tol;
    Ok(rep)
}

#[derive(Debug, Clone, Serialize)]
pub struct OrientationReport {
    pub parameters: Vec<f64>,
    /// `<f22, n> <f22, n~>` per sample.
    pub products: Vec<f64>,
    pub min_product: f64,
    pub max_position_gap: f64,
    pub compatible: bool,
}

/// Acceleration of the image curve `d^2/dt^2 f(gamma(t))`.
pub fn image_acceleration(jet: &Jet2, d1: &Vec2, d2: &Vec2) -> Vec3 {
    jet.f11 * d1.x * d1.x + jet.f12 * (2.0 * d1.x * d1.y) + jet.f22 * d1.y * d1.y + jet.f1 * d2.x + jet.f2 * d2.y
}

/// Sign of the product of normal curvatures of the common curve, sampled at
/// `n` points of an arclength-parametrized curve.
pub fn orientation_compatibility(
    f: &ParamSurface,
    ft: &ParamSurface,
    curve: &CurveOnSurface,
    n: usize,
    tol: f64,
) -> Result<OrientationReport> {
    if !curve.is_arclength() {
        return Err(LabError::InvalidArgument("orientation check needs an arclength curve".into()));
    }
    let mut rep = OrientationReport {
        parameters: Vec::with_capacity(n),
        products: Vec::with_capacity(n),
        min_product: f64::INFINITY,
        max_position_gap: 0.0,
        compatible: true,
    };
    for p in curve.sample(n)? {
        let (j, jt) = (f.jet_unchecked(p.uv)?, ft.jet_unchecked(p.uv)?);
        first_fundamental_form(&j)?;
        rep.max_position_gap = rep.max_position_gap.max((j.p - jt.p).norm());
        let (a, at) = (image_acceleration(&j, &p.d1, &p.d2), image_acceleration(&jt, &p.d1, &p.d2));
        let (n0, nt) = (j.cross().normalize(), jt.cross().normalize());
        let (l, lt) = (a.dot(&n0), at.dot(&nt));
        if l.abs() < ASYMPTOTIC_THRESHOLD || lt.abs() < ASYMPTOTIC_THRESHOLD {
            return Err(LabError::DegenerateCurve {
                t: p.t,
                reason: format!("curve tangent to an asymptotic direction (normal curvatures {l:e}, {lt:e})"),
            });
        }
        let prod = l * lt;
        rep.parameters.push(p.t);
        rep.products.push(prod);
        rep.min_product = rep.min_product.min(prod);
    }
    if rep.max_position_gap > tol {
        return Err(LabError::InconsistentData {
            t: f64::NAN,
            detail: format!("surfaces differ on the curve by {:e}", rep.max_position_gap),
        });
    }
    rep.compatible = rep.min_product > 0.0;
    Ok(rep)
}
