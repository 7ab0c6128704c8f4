//! Recovery of a partner immersion's first derivatives and second
//! fundamental form along a common curve, and contact-order measurement.
//!
//! Everything here works in the geodesic normal chart of [`FermiChart`]:
//! index 1 is the normal distance `s`, index 2 the arclength `t` on the curve.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::fermi::FermiChart;
use crate::geometry::{gauss_curvature_intrinsic, Jet2, Mat2, Vec3};

/// Default number of samples along the curve.
pub const DEFAULT_SAMPLES: usize = 201;

/// Per-sample curve geometry in the Fermi chart at `s = 0`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurveSample {
    pub t: f64,
    pub position: Vec3,
    pub tangent: Vec3,
    /// `f22`, the acceleration of the unit-speed image curve.
    pub acceleration: Vec3,
    pub principal_normal: Vec3,
    pub binormal: Vec3,
    /// `-(g22)_1 / 2`.
    pub geodesic_curvature: f64,
    pub l11: f64,
    pub l12: f64,
    pub l22: f64,
    /// Conormal of the surface the data was read from.
    pub conormal: Vec3,
    pub gauss: f64,
}

impl CurveSample {
    pub fn curvature(&self) -> f64 {
        self.acceleration.norm()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveData {
    pub samples: Vec<CurveSample>,
    pub closed: bool,
}

/// Curve data at one base parameter.
pub fn curve_sample(chart: &FermiChart, t: f64) -> Result<CurveSample> {
    let j = chart.jet(0.0, t)?;
    let kappa = j.f22.norm();
    if !(kappa > 0.0) {
        return Err(LabError::DegenerateCurve { t, reason: "image curve has zero curvature".into() });
    }
    let n = j.cross().normalize();
    let l22 = j.f22.dot(&n);
    if l22.abs() < 1e-6 * kappa {
        return Err(LabError::DegenerateCurve {
            t,
            reason: format!("curve is nearly asymptotic (<f22, n> = {l22:e}, |f22| = {kappa:e})"),
        });
    }
    let tangent = j.f2;
    let principal_normal = j.f22 / kappa;
    let p = chart.param(0.0, t)?.0;
    Ok(CurveSample {
        t,
        position: j.p,
        tangent,
        acceleration: j.f22,
        principal_normal,
        binormal: tangent.cross(&principal_normal),
        geodesic_curvature: -j.f12.dot(&j.f2),
        l11: j.f11.dot(&n),
        l12: j.f12.dot(&n),
        l22,
        conormal: j.f1,
        gauss: gauss_curvature_intrinsic(chart.surface(), p)?,
    })
}

/// Curve data at `n` uniform arclength samples of the chart's base curve.
pub fn curve_data(chart: &FermiChart, n: usize) -> Result<CurveData> {
    let samples = chart.t_samples(n).into_iter().map(|t| curve_sample(chart, t)).collect::<Result<_>>()?;
    Ok(CurveData { samples, closed: chart.curve().is_closed() })
}

/// The unit normal-plane vector with `<f~1, f22> = k_g` whose binormal
/// component has sign `branch * sign(l22)`.
pub fn recover_conormal_branch(sample: &CurveSample, branch: f64) -> Result<Vec3> {
    let kappa = sample.curvature();
    let alpha = sample.geodesic_curvature / kappa;
    if alpha.abs() > 1.0 + 1e-12 {
        return Err(LabError::InconsistentData {
            t: sample.t,
            detail: format!("|k_g| = {:e} exceeds the curvature {kappa:e}", sample.geodesic_curvature.abs()),
        });
    }
    let beta = branch.signum() * sample.l22.signum() * (1.0 - alpha * alpha).max(0.0).sqrt();
    Ok(alpha * sample.principal_normal + beta * sample.binormal)
}

/// Conormal of a partner whose normal curvature along the curve has sign
/// `orientation_product` relative to the data surface. A nonpositive product
/// means the two normal curvatures disagree and the binormal sign cannot be
/// fixed.
pub fn recover_conormal(sample: &CurveSample, orientation_product: f64) -> Result<Vec3> {
    if !(orientation_product > 0.0) {
        return Err(LabError::SignAmbiguity { t: sample.t, product: orientation_product });
    }
    recover_conormal_branch(sample, 1.0)
}

/// Recovered second fundamental form of the partner at one sample.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RecoveredForm {
    pub t: f64,
    pub conormal: Vec3,
    pub normal: Vec3,
    pub l: [f64; 3],
}

impl RecoveredForm {
    pub fn matrix(&self) -> Mat2 {
        Mat2::new(self.l[0], self.l[1], self.l[1], self.l[2])
    }
}

fn recovered_normal(chart: &FermiChart, t: f64, branch: f64) -> Result<Vec3> {
    let c = curve_sample(chart, t)?;
    Ok(recover_conormal_branch(&c, branch)?.cross(&c.tangent))
}

/// Full recovered second fundamental form along the curve. The mixed
/// coefficient is `-<f~1, d n~/dt>`, differentiated by five-point
/// differences of the recovered normal field at spacing `delta`; `l~11`
/// comes from the determinant identity `det l~ = K det g`.
pub fn recover_second_form_on_curve(
    chart: &FermiChart,
    data: &CurveData,
    branch: f64,
    delta: f64,
) -> Result<Vec<RecoveredForm>> {
    let mut out = Vec::with_capacity(data.samples.len());
    for c in &data.samples {
        let f1 = recover_conormal_branch(c, branch)?;
        let n = f1.cross(&c.tangent);
        let l22 = c.acceleration.dot(&n);
        if l22.abs() < 1e-10 {
            return Err(LabError::DegenerateCurve { t: c.t, reason: format!("recovered l22 = {l22:e}") });
        }
        let mut nn = [Vec3::zeros(); 4];
        for (k, off) in [-2.0, -1.0, 1.0, 2.0].iter().enumerate() {
            nn[k] = recovered_normal(chart, c.t + off * delta, branch)?;
        }
        let n_t = (nn[0] - nn[3] + 8.0 * (nn[2] - nn[1])) / (12.0 * delta);
        let l12 = -f1.dot(&n_t);
        // det g = 1 on the curve in Fermi form.
        let l11 = (c.gauss + l12 * l12) / l22;
        out.push(RecoveredForm { t: c.t, conormal: f1, normal: n, l: [l11, l12, l22] });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderResult {
    pub order: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    /// Every order up to and including this one is within tolerance.
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContactReport {
    pub orders: Vec<OrderResult>,
    /// Largest `m` such that every order up to `m` passes; `None` if even
    /// positions disagree.
    pub achieved: Option<usize>,
}

/// Tolerance for agreement of order-`m` partials.
pub fn order_tolerance(m: usize) -> f64 {
    match m {
        0 | 1 => 1e-8,
        2 => 1e-6,
        _ => 1e-4 * 10f64.powi(m as i32 - 2),
    }
}

/// All order-`m` partials (`m >= 2`) at `(0, t)` as a flat list of vectors.
/// Orders above two differentiate the chart's second-order jets: forward
/// differences in `s`, centered in `t`, spacing `eta`.
fn partials(chart: &FermiChart, t: f64, m: usize, eta: f64) -> Result<Vec<Vec3>> {
    let jet = |s: f64, tt: f64| chart.jet(s, tt);
    let second = |j: &Jet2| [j.f11, j.f12, j.f22];
    match m {
        0 => Ok(vec![jet(0.0, t)?.p]),
        1 => {
            let j = jet(0.0, t)?;
            Ok(vec![j.f1, j.f2])
        }
        2 => Ok(second(&jet(0.0, t)?).to_vec()),
        _ => {
            let extra = m - 2;
            let mut out = Vec::new();
            for a in 0..=extra {
                let b = extra - a;
                let sw = forward_weights(a);
                let tw = centered_weights(b);
                let mut acc = [Vec3::zeros(); 3];
                for (i, ws) in sw.iter().enumerate() {
                    for (k, wt) in tw.iter().enumerate() {
                        let off = k as f64 - (tw.len() / 2) as f64;
                        let v = second(&jet(i as f64 * eta, t + off * eta)?);
                        for q in 0..3 {
                            acc[q] += ws * wt * v[q];
                        }
                    }
                }
                let scale = eta.powi(extra as i32);
                out.extend(acc.iter().map(|v| v / scale));
            }
            Ok(out)
        }
    }
}

/// Second-order forward difference weights for the `a`-th derivative.
fn forward_weights(a: usize) -> Vec<f64> {
    match a {
        0 => vec![1.0],
        1 => vec![-1.5, 2.0, -0.5],
        2 => vec![2.0, -5.0, 4.0, -1.0],
        _ => vec![-2.5, 9.0, -12.0, 7.0, -1.5],
    }
}

/// Second-order centered difference weights for the `b`-th derivative.
fn centered_weights(b: usize) -> Vec<f64> {
    match b {
        0 => vec![1.0],
        1 => vec![-0.5, 0.0, 0.5],
        2 => vec![1.0, -2.0, 1.0],
        _ => vec![-0.5, 1.0, 0.0, -1.0, 0.5],
    }
}

/// Compares Fermi-chart partials of two surfaces along the common curve up
/// to order `max_order` (at most 5).
pub fn contact_order(chart_f: &FermiChart, chart_ft: &FermiChart, max_order: usize, samples: usize) -> Result<ContactReport> {
    if max_order > 5 {
        return Err(LabError::InvalidArgument("contact order above 5 is not supported".into()));
    }
    let ts = chart_f.t_samples(samples);
    let eta = 1e-2 * chart_f.s_max().min(1.0);
    let mut orders = Vec::new();
    for m in 0..=max_order {
        let mut dev = 0.0f64;
        for &t in &ts {
            let (a, b) = (partials(chart_f, t, m, eta)?, partials(chart_ft, t, m, eta)?);
            for (x, y) in a.iter().zip(&b) {
                dev = dev.max((x - y).norm());
            }
        }
        let tol = order_tolerance(m);
        let below = orders.last().map_or(true, |o: &OrderResult| o.pass);
        orders.push(OrderResult { order: m, max_deviation: dev, tolerance: tol, pass: below && dev < tol });
    }
    let achieved = orders.iter().take_while(|o| o.pass).last().map(|o| o.order);
    Ok(ContactReport { orders, achieved })
}
