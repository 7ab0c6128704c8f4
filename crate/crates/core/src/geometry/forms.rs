use super::{DerivativeMode, Jet2, Mat2, ParamSurface, Vec2, Vec3};
use crate::error::{LabError, Result};

/// First fundamental form at a point, optionally with Christoffel symbols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricData {
    pub g: Mat2,
    pub det: f64,
    pub inv: Mat2,
    /// `gamma[k][i][j]` is the symbol with upper index `k`.
    pub gamma: [[[f64; 2]; 2]; 2],
    pub has_christoffel: bool,
}

impl MetricData {
    pub fn from_metric(g: Mat2) -> Result<Self> {
        let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
        if !(det > 0.0) || !(g[(0, 0)] > 0.0) {
            return Err(LabError::ImmersionFailure {
                u: f64::NAN,
                v: f64::NAN,
                detail: format!("metric is not positive definite (det g = {det:e})"),
            });
        }
        let inv = Mat2::new(g[(1, 1)], -g[(0, 1)], -g[(1, 0)], g[(0, 0)]) / det;
        Ok(Self { g, det, inv, gamma: [[[0.0; 2]; 2]; 2], has_christoffel: false })
    }

    /// Christoffel symbols from metric derivatives `dg[k] = d g / d x_k`.
    pub fn with_derivatives(mut self, dg: [Mat2; 2]) -> Self {
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let mut acc = 0.0;
                    for l in 0..2 {
                        acc += self.inv[(k, l)] * (dg[j][(l, i)] + dg[i][(j, l)] - dg[l][(i, j)]);
                    }
                    self.gamma[k][i][j] = 0.5 * acc;
                }
            }
        }
        self.has_christoffel = true;
        self
    }

    pub fn inner(&self, a: &Vec2, b: &Vec2) -> f64 {
        (a.transpose() * self.g * b)[(0, 0)]
    }

    pub fn norm(&self, a: &Vec2) -> f64 {
        self.inner(a, a).max(0.0).sqrt()
    }

    /// `u'' = -Gamma(u', u')`.
    pub fn geodesic_acceleration(&self, vel: &Vec2) -> Vec2 {
        let mut acc = Vec2::zeros();
        for k in 0..2 {
            let mut s = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    s += self.gamma[k][i][j] * vel[i] * vel[j];
                }
            }
            acc[k] = -s;
        }
        acc
    }
}

/// Extrinsic data at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeData {
    pub n: Vec3,
    pub l: Mat2,
    pub gauss: f64,
    /// Mean curvature vector `(k1 + k2)/2 * n`.
    pub mean_vector: Vec3,
    pub k1: f64,
    pub k2: f64,
    /// Shape operator `g^{-1} l` in the coordinate basis.
    pub shape_operator: Mat2,
}

impl ShapeData {
    pub fn mean(&self) -> f64 {
        0.5 * (self.k1 + self.k2)
    }

    /// Unit coordinate eigenvector of the shape operator for the principal
    /// curvature of smallest magnitude, together with that curvature.
    pub fn kernel_direction(&self, metric: &MetricData) -> (Vec2, f64) {
        let k = if self.k1.abs() <= self.k2.abs() { self.k1 } else { self.k2 };
        let m = self.shape_operator - Mat2::identity() * k;
        // Null vector of a rank-1 2x2 matrix: orthogonal to its largest row.
        let r0 = Vec2::new(m[(0, 0)], m[(0, 1)]);
        let r1 = Vec2::new(m[(1, 0)], m[(1, 1)]);
        let row = if r0.norm() >= r1.norm() { r0 } else { r1 };
        let dir = if row.norm() < 1e-300 { Vec2::new(1.0, 0.0) } else { Vec2::new(-row.y, row.x) };
        let len = metric.norm(&dir);
        (dir / len, k)
    }
}

pub fn first_fundamental_form(jet: &Jet2) -> Result<MetricData> {
    let g = Mat2::new(jet.f1.dot(&jet.f1), jet.f1.dot(&jet.f2), jet.f2.dot(&jet.f1), jet.f2.dot(&jet.f2));
    MetricData::from_metric(g)
}

/// Metric and Christoffel symbols using `d_k g_ij = <f_ik, f_j> + <f_i, f_jk>`.
pub fn metric_with_christoffel(jet: &Jet2) -> Result<MetricData> {
    let m = first_fundamental_form(jet)?;
    let mut dg = [Mat2::zeros(); 2];
    for (k, dgk) in dg.iter_mut().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                dgk[(i, j)] =
                    jet.second(i, k).dot(&jet.partial(j)) + jet.partial(i).dot(&jet.second(j, k));
            }
        }
    }
    Ok(m.with_derivatives(dg))
}

pub fn christoffel(surface: &ParamSurface, p: Vec2) -> Result<MetricData> {
    metric_with_christoffel(&surface.jet(p)?)
}

/// Christoffel symbols from a metric sampled around `p`, differentiated by
/// fourth-order centered differences with the given step.
pub fn christoffel_from_metric_samples<F>(metric: F, p: Vec2, step: f64) -> Result<MetricData>
where
    F: Fn(Vec2) -> Result<Mat2>,
{
    let g0 = metric(p)?;
    let mut dg = [Mat2::zeros(); 2];
    for (k, dgk) in dg.iter_mut().enumerate() {
        let mut e = Vec2::zeros();
        e[k] = step;
        *dgk = (metric(p - 2.0 * e)? - metric(p + 2.0 * e)? + 8.0 * (metric(p + e)? - metric(p - e)?))
            / (12.0 * step);
    }
    Ok(MetricData::from_metric(g0)?.with_derivatives(dg))
}

pub fn second_fundamental_form(jet: &Jet2) -> Result<ShapeData> {
    let metric = first_fundamental_form(jet)?;
    let cross = jet.cross();
    let len = cross.norm();
    if len < 1e-10 * jet.f1.norm() * jet.f2.norm() || len == 0.0 {
        return Err(LabError::ImmersionFailure {
            u: f64::NAN,
            v: f64::NAN,
            detail: format!("|f1 x f2| = {len:e}"),
        });
    }
    let n = cross / len;
    let l = Mat2::new(jet.f11.dot(&n), jet.f12.dot(&n), jet.f12.dot(&n), jet.f22.dot(&n));
    let det_l = l[(0, 0)] * l[(1, 1)] - l[(0, 1)] * l[(1, 0)];
    let gauss = det_l / metric.det;
    let shape_operator = metric.inv * l;
    let tr = shape_operator.trace();
    let disc = (tr * tr - 4.0 * gauss).max(0.0).sqrt();
    let (k1, k2) = ((tr - disc) / 2.0, (tr + disc) / 2.0);
    Ok(ShapeData { n, l, gauss, mean_vector: 0.5 * tr * n, k1, k2, shape_operator })
}

/// Gauss curvature from the metric alone (Brioschi's formula).
///
/// Metric derivatives are taken by differences of the metric field: fourth
/// order at a fixed internal step in analytic mode, second order at the
/// stencil spacing in finite-difference mode.
pub fn gauss_curvature_intrinsic(surface: &ParamSurface, p: Vec2) -> Result<f64> {
    surface.domain().check(p)?;
    let g = |du: f64, dv: f64| -> Result<Mat2> {
        let jet = surface.jet_unchecked(Vec2::new(p.x + du, p.y + dv))?;
        Ok(first_fundamental_form(&jet)?.g)
    };
    let g0 = g(0.0, 0.0)?;
    let (e_, f_, g_) = (g0[(0, 0)], g0[(0, 1)], g0[(1, 1)]);

    let (du_, dv_, duu, dvv, duv) = match surface.mode() {
        DerivativeMode::Analytic => fourth_order_derivatives(&g, 1e-3)?,
        DerivativeMode::FiniteDifference { spacing, .. } => second_order_derivatives(&g, spacing)?,
    };
    let (e_u, e_v) = (du_[(0, 0)], dv_[(0, 0)]);
    let (f_u, f_v) = (du_[(0, 1)], dv_[(0, 1)]);
    let (g_u, g_v) = (du_[(1, 1)], dv_[(1, 1)]);
    let e_vv = dvv[(0, 0)];
    let f_uv = duv[(0, 1)];
    let g_uu = duu[(1, 1)];

    let a = nalgebra::Matrix3::new(
        -0.5 * e_vv + f_uv - 0.5 * g_uu,
        0.5 * e_u,
        f_u - 0.5 * e_v,
        f_v - 0.5 * g_u,
        e_,
        f_,
        0.5 * g_v,
        f_,
        g_,
    );
    let b = nalgebra::Matrix3::new(0.0, 0.5 * e_v, 0.5 * g_u, 0.5 * e_v, e_, f_, 0.5 * g_u, f_, g_);
    let det_g = e_ * g_ - f_ * f_;
    if !(det_g > 0.0) {
        return Err(LabError::ImmersionFailure { u: p.x, v: p.y, detail: "degenerate metric".into() });
    }
    Ok((a.determinant() - b.determinant()) / (det_g * det_g))
}

type MetricDerivs = (Mat2, Mat2, Mat2, Mat2, Mat2);

fn fourth_order_derivatives<F>(g: &F, h: f64) -> Result<MetricDerivs>
where
    F: Fn(f64, f64) -> Result<Mat2>,
{
    let d1 = |f: &dyn Fn(f64) -> Result<Mat2>| -> Result<Mat2> {
        Ok((f(-2.0 * h)? - f(2.0 * h)? + 8.0 * (f(h)? - f(-h)?)) / (12.0 * h))
    };
    let d2 = |f: &dyn Fn(f64) -> Result<Mat2>| -> Result<Mat2> {
        Ok((-(f(2.0 * h)? + f(-2.0 * h)?) + 16.0 * (f(h)? + f(-h)?) - 30.0 * f(0.0)?) / (12.0 * h * h))
    };
    let du = d1(&|x| g(x, 0.0))?;
    let dv = d1(&|y| g(0.0, y))?;
    let duu = d2(&|x| g(x, 0.0))?;
    let dvv = d2(&|y| g(0.0, y))?;
    let duv = d1(&|x| d1(&|y| g(x, y)))?;
    Ok((du, dv, duu, dvv, duv))
}

fn second_order_derivatives<F>(g: &F, h: f64) -> Result<MetricDerivs>
where
    F: Fn(f64, f64) -> Result<Mat2>,
{
    let c = g(0.0, 0.0)?;
    let (up, um, vp, vm) = (g(h, 0.0)?, g(-h, 0.0)?, g(0.0, h)?, g(0.0, -h)?);
    let (pp, pm, mp, mm) = (g(h, h)?, g(h, -h)?, g(-h, h)?, g(-h, -h)?);
    Ok((
        (up - um) / (2.0 * h),
        (vp - vm) / (2.0 * h),
        (up - 2.0 * c + um) / (h * h),
        (vp - 2.0 * c + vm) / (h * h),
        (pp - pm - mp + mm) / (4.0 * h * h),
    ))
}
