//! Geodesics of the induced metric and geodesic normal coordinates along a
//! curve.
//!
//! Chart coordinates are `(s, t)`: `t` is arclength on the base curve and
//! `s` the distance along the geodesic leaving `gamma(t)` in the normal
//! direction. Index 1 of a chart jet is `s`, index 2 is `t`.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::geometry::{metric_with_christoffel, CurveOnSurface, Jet2, Mat2, MetricData, ParamSurface, Vec2};

/// Default integration step.
pub const DEFAULT_STEP: f64 = 1e-3;

/// A sampled geodesic in parameter space.
#[derive(Debug, Clone)]
pub struct GeodesicPath {
    pub s: Vec<f64>,
    pub uv: Vec<Vec2>,
    pub velocity: Vec<Vec2>,
    /// Set when the trajectory was clipped at the domain boundary.
    pub exited: bool,
}

impl GeodesicPath {
    pub fn end(&self) -> (Vec2, Vec2) {
        (*self.uv.last().unwrap(), *self.velocity.last().unwrap())
    }

    pub fn length(&self) -> f64 {
        *self.s.last().unwrap()
    }
}

fn accel(surface: &ParamSurface, x: Vec2, v: Vec2) -> Result<Vec2> {
    let m = metric_with_christoffel(&surface.jet_unchecked(x)?)?;
    Ok(m.geodesic_acceleration(&v))
}

fn rk4_step(surface: &ParamSurface, x: Vec2, v: Vec2, h: f64) -> Result<(Vec2, Vec2)> {
    let a1 = accel(surface, x, v)?;
    let (x2, v2) = (x + 0.5 * h * v, v + 0.5 * h * a1);
    let a2 = accel(surface, x2, v2)?;
    let (x3, v3) = (x + 0.5 * h * v2, v + 0.5 * h * a2);
    let a3 = accel(surface, x3, v3)?;
    let (x4, v4) = (x + h * v3, v + h * a3);
    let a4 = accel(surface, x4, v4)?;
    Ok((
        x + h / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4),
        v + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
    ))
}

/// Integrates `u'' = -Gamma(u', u')` by classical RK4 with steps of at most
/// `step`, recording every step. Negative `s_max` integrates backwards.
pub fn geodesic(surface: &ParamSurface, p: Vec2, v: Vec2, s_max: f64, step: f64) -> Result<GeodesicPath> {
    if !(step > 0.0) {
        return Err(LabError::InvalidArgument(format!("geodesic step {step} must be positive")));
    }
    let domain = surface.domain();
    if !domain.contains_with_slack(p, 1e-9) {
        return Err(LabError::DomainExit { u: p.x, v: p.y });
    }
    let m = metric_with_christoffel(&surface.jet_unchecked(p)?)?;
    let speed = m.norm(&v);
    if (speed - 1.0).abs() > 1e-10 {
        return Err(LabError::InvalidArgument(format!("initial velocity has g-norm {speed}, expected 1")));
    }
    let n = ((s_max.abs() / step).ceil() as usize).max(1);
    let h = s_max / n as f64;
    let mut path = GeodesicPath { s: vec![0.0], uv: vec![p], velocity: vec![v], exited: false };
    let (mut x, mut vel) = (p, v);
    for k in 1..=n {
        let (xn, vn) = rk4_step(surface, x, vel, h)?;
        if !domain.contains_with_slack(xn, 1e-9) {
            if k == 1 {
                return Err(LabError::DomainExit { u: xn.x, v: xn.y });
            }
            path.exited = true;
            break;
        }
        x = xn;
        vel = vn;
        path.s.push(k as f64 * h);
        path.uv.push(x);
        path.velocity.push(vel);
    }
    Ok(path)
}

/// Endpoint of the geodesic of length `s` with no domain clipping; used for
/// chart evaluation where the caller has established validity.
fn shoot(surface: &ParamSurface, p: Vec2, v: Vec2, s: f64, step: f64) -> Result<(Vec2, Vec2)> {
    if s == 0.0 {
        return Ok((p, v));
    }
    let n = ((s.abs() / step).ceil() as usize).max(1);
    let h = s / n as f64;
    let (mut x, mut vel) = (p, v);
    for _ in 0..n {
        (x, vel) = rk4_step(surface, x, vel, h)?;
    }
    Ok((x, vel))
}

/// Unit g-normal to `tangent` with `det[tangent, nu] < 0`.
pub fn right_normal(metric: &MetricData, tangent: &Vec2) -> Vec2 {
    let w = Vec2::new(tangent.y, -tangent.x);
    let mut nu = metric.inv * w;
    if tangent.x * nu.y - tangent.y * nu.x > 0.0 {
        nu = -nu;
    }
    nu / metric.norm(&nu)
}

/// Geodesic normal coordinates along an arclength curve.
#[derive(Debug, Clone)]
pub struct FermiChart {
    surface: ParamSurface,
    curve: CurveOnSurface,
    s_range: [f64; 2],
    step: f64,
    /// Spacing of the t-differences across neighbouring geodesics.
    fd_delta: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
struct BasePoint {
    x: Vec2,
    nu: Vec2,
}

impl FermiChart {
    /// Builds the chart on `s in [0, s_max]`, truncating at domain exit or
    /// at the first focal crossing detected on `checks` sample geodesics.
    pub fn build(surface: &ParamSurface, curve: &CurveOnSurface, s_max: f64, step: f64) -> Result<Self> {
        Self::build_range(surface, curve, [0.0, s_max], step, 64)
    }

    /// As [`FermiChart::build`] with a signed range `s_lo <= 0 <= s_hi`.
    pub fn build_range(
        surface: &ParamSurface,
        curve: &CurveOnSurface,
        s_range: [f64; 2],
        step: f64,
        checks: usize,
    ) -> Result<Self> {
        if !curve.is_arclength() {
            return Err(LabError::InvalidArgument("Fermi chart needs an arclength base curve".into()));
        }
        if !(s_range[0] <= 0.0 && s_range[1] >= 0.0 && step > 0.0) {
            return Err(LabError::InvalidArgument(format!("bad chart range {s_range:?} / step {step}")));
        }
        let mut chart = Self {
            surface: surface.clone(),
            curve: curve.clone(),
            s_range,
            step,
            fd_delta: 1e-3 * curve.length_parameter().min(1.0).max(1e-3),
            warnings: Vec::new(),
        };
        chart.truncate(checks.max(4))?;
        Ok(chart)
    }

    pub fn surface(&self) -> &ParamSurface {
        &self.surface
    }

    pub fn curve(&self) -> &CurveOnSurface {
        &self.curve
    }

    pub fn s_range(&self) -> [f64; 2] {
        self.s_range
    }

    pub fn s_max(&self) -> f64 {
        self.s_range[1]
    }

    pub fn t_range(&self) -> [f64; 2] {
        self.curve.interval()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    fn base(&self, t: f64) -> Result<BasePoint> {
        let c = self.curve.eval(t)?;
        let m = metric_with_christoffel(&self.surface.jet_unchecked(c.uv)?)?;
        Ok(BasePoint { x: c.uv, nu: right_normal(&m, &c.d1) })
    }

    fn truncate(&mut self, checks: usize) -> Result<()> {
        let [a, b] = self.t_range();
        let n = if self.curve.is_closed() { checks } else { checks - 1 };
        let ts: Vec<f64> = (0..checks).map(|i| a + (b - a) * i as f64 / n as f64).collect();
        for side in [1usize, 0] {
            let reach = self.s_range[side];
            if reach == 0.0 {
                continue;
            }
            let mut limit = reach.abs();
            let mut paths = Vec::with_capacity(ts.len());
            for &t in &ts {
                let bp = self.base(t)?;
                let path = geodesic(&self.surface, bp.x, bp.nu, reach, self.step)?;
                if path.exited {
                    limit = limit.min(path.length().abs());
                }
                paths.push(path);
            }
            if limit < reach.abs() {
                self.warnings.push(format!("geodesics leave the domain; |s| truncated to {limit:.6}"));
            }
            // Focal test: the orientation of (x_s, x_t) must not flip between
            // neighbouring geodesics.
            let len = paths.iter().map(|p| p.s.len()).min().unwrap_or(0);
            let mut focal = None;
            'outer: for k in 1..len {
                if paths[0].s[k].abs() > limit {
                    break;
                }
                for i in 0..paths.len() - 1 {
                    let d0 = paths[i + 1].uv[0] - paths[i].uv[0];
                    let dk = paths[i + 1].uv[k] - paths[i].uv[k];
                    let (v0, vk) = (paths[i].velocity[0], paths[i].velocity[k]);
                    let o0 = v0.x * d0.y - v0.y * d0.x;
                    let ok = vk.x * dk.y - vk.y * dk.x;
                    if o0 * ok <= 0.0 {
                        focal = Some(paths[0].s[k - 1].abs());
                        break 'outer;
                    }
                }
            }
            if let Some(sf) = focal {
                limit = limit.min(sf);
                self.warnings.push(format!("neighbouring geodesics cross; |s| truncated to {sf:.6}"));
            }
            self.s_range[side] = limit.copysign(reach);
        }
        Ok(())
    }

    /// Parameter point and geodesic velocity at chart coordinates.
    pub fn param(&self, s: f64, t: f64) -> Result<(Vec2, Vec2)> {
        let bp = self.base(t)?;
        shoot(&self.surface, bp.x, bp.nu, s, self.step)
    }

    fn in_range(&self, s: f64) -> Result<()> {
        let tol = 1e-12 * (1.0 + s.abs());
        if s < self.s_range[0] - tol || s > self.s_range[1] + tol {
            return Err(LabError::OutOfDomain { u: s, v: f64::NAN, domain: "fermi chart" });
        }
        Ok(())
    }

    pub fn position(&self, s: f64, t: f64) -> Result<crate::geometry::Vec3> {
        self.in_range(s)?;
        let (x, _) = self.param(s, t)?;
        Ok(self.surface.position(x))
    }

    /// Jet of `(s, t) -> f(exp_{gamma(t)}(s nu(t)))`. The s-s derivative uses
    /// the geodesic equation; t-derivatives come from five-point differences
    /// across neighbouring geodesics.
    pub fn jet(&self, s: f64, t: f64) -> Result<Jet2> {
        self.in_range(s)?;
        let d = self.fd_delta;
        let mut xs = [Vec2::zeros(); 5];
        let mut vs = [Vec2::zeros(); 5];
        for (k, off) in [-2.0, -1.0, 0.0, 1.0, 2.0].iter().enumerate() {
            let (x, v) = self.param(s, t + off * d)?;
            xs[k] = x;
            vs[k] = v;
        }
        let d1 = |a: &[Vec2; 5]| (a[0] - a[4] + 8.0 * (a[3] - a[1])) / (12.0 * d);
        let d2 = |a: &[Vec2; 5]| (-(a[0] + a[4]) + 16.0 * (a[1] + a[3]) - 30.0 * a[2]) / (12.0 * d * d);
        let (x, x_s) = (xs[2], vs[2]);
        let x_t = d1(&xs);
        let x_tt = d2(&xs);
        let x_st = d1(&vs);
        let j = self.surface.jet_unchecked(x)?;
        let m = metric_with_christoffel(&j)?;
        let x_ss = m.geodesic_acceleration(&x_s);
        let push = |a: Vec2| j.f1 * a.x + j.f2 * a.y;
        let hess = |a: Vec2, b: Vec2| j.f11 * a.x * b.x + j.f12 * (a.x * b.y + a.y * b.x) + j.f22 * a.y * b.y;
        let out = Jet2 {
            p: j.p,
            f1: push(x_s),
            f2: push(x_t),
            f11: hess(x_s, x_s) + push(x_ss),
            f12: hess(x_s, x_t) + push(x_st),
            f22: hess(x_t, x_t) + push(x_tt),
        };
        if !out.is_immersive() {
            return Err(LabError::ImmersionFailure { u: s, v: t, detail: "degenerate Fermi jet".into() });
        }
        Ok(out)
    }

    /// Chart metric `g(s, t)`.
    pub fn metric(&self, s: f64, t: f64) -> Result<Mat2> {
        Ok(crate::geometry::first_fundamental_form(&self.jet(s, t)?)?.g)
    }

    /// Uniform samples of the base parameter; closed curves skip the
    /// duplicated endpoint.
    pub fn t_samples(&self, n: usize) -> Vec<f64> {
        let [a, b] = self.t_range();
        let denom = if self.curve.is_closed() { n } else { n.saturating_sub(1).max(1) };
        (0..n).map(|i| a + (b - a) * i as f64 / denom as f64).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GaussLemmaReport {
    pub max_g11_defect: f64,
    pub max_g12: f64,
    pub samples: usize,
    pub s_max: f64,
    pub step: f64,
}

impl GaussLemmaReport {
    pub fn residual(&self) -> f64 {
        self.max_g11_defect.max(self.max_g12)
    }
}

/// Max `|g11 - 1|` and `|g12|` over an `ns x nt` sample grid with
/// `s in [0, s_max]`.
pub fn gauss_lemma_check(chart: &FermiChart, ns: usize, nt: usize) -> Result<GaussLemmaReport> {
    let [s_lo, s_hi] = chart.s_range();
    let mut rep = GaussLemmaReport {
        max_g11_defect: 0.0,
        max_g12: 0.0,
        samples: 0,
        s_max: s_hi,
        step: chart.step(),
    };
    let ns = ns.max(2);
    for i in 0..ns {
        let s = s_lo + (s_hi - s_lo) * i as f64 / (ns - 1) as f64;
        for &t in &chart.t_samples(nt) {
            let g = chart.metric(s, t)?;
            rep.max_g11_defect = rep.max_g11_defect.max((g[(0, 0)] - 1.0).abs());
            rep.max_g12 = rep.max_g12.max(g[(0, 1)].abs());
            rep.samples += 1;
        }
    }
    Ok(rep)
}
