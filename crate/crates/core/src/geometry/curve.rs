use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{first_fundamental_form, Mat2, ParamSurface, Vec2};
use crate::error::{LabError, Result};

/// Parameter-space curve families with closed-form derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveKind {
    /// `start + t * direction`.
    Line { start: [f64; 2], direction: [f64; 2] },
    /// `center + radius (cos t, sin t)`.
    Circle { center: [f64; 2], radius: f64 },
    /// Great circle of the longitude/latitude sphere chart through `(1,0,0)`,
    /// rotated about the x-axis by `tilt` radians.
    GreatCircle { tilt: f64 },
}

/// Parameter value, domain point and its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: f64,
    pub uv: Vec2,
    pub d1: Vec2,
    pub d2: Vec2,
}

#[derive(Debug)]
struct ArcTable {
    surface: ParamSurface,
    /// Raw parameter breakpoints and cumulative arclength at each.
    t: Vec<f64>,
    s: Vec<f64>,
}

/// A curve `t -> (u(t), v(t))` on an interval, optionally reparametrized by
/// arclength with respect to a surface metric.
#[derive(Debug, Clone)]
pub struct CurveOnSurface {
    pub kind: CurveKind,
    raw_interval: [f64; 2],
    closed: bool,
    reversed: bool,
    arc: Option<Arc<ArcTable>>,
}

const GL5: [(f64, f64); 3] = [
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.906_179_845_938_664_0, 0.236_926_885_056_189_1),
];

impl CurveOnSurface {
    pub fn new(kind: CurveKind, interval: [f64; 2]) -> Result<Self> {
        if !(interval[1] > interval[0]) {
            return Err(LabError::InvalidArgument(format!("empty curve interval {interval:?}")));
        }
        let closed = match kind {
            CurveKind::Line { direction, .. } => {
                if direction[0] == 0.0 && direction[1] == 0.0 {
                    return Err(LabError::DegenerateCurve { t: interval[0], reason: "zero velocity".into() });
                }
                false
            }
            CurveKind::Circle { radius, .. } => {
                if !(radius > 0.0) {
                    return Err(LabError::DegenerateCurve { t: interval[0], reason: "zero radius".into() });
                }
                ((interval[1] - interval[0]) - 2.0 * PI).abs() < 1e-12
            }
            CurveKind::GreatCircle { .. } => false,
        };
        Ok(Self { kind, raw_interval: interval, closed, reversed: false, arc: None })
    }

    /// Horizontal line `v = v0`, `u = t`.
    pub fn horizontal(v0: f64, u: [f64; 2]) -> Result<Self> {
        Self::new(CurveKind::Line { start: [0.0, v0], direction: [1.0, 0.0] }, u)
    }

    /// Marks a curve whose endpoints are identified (a full period of a
    /// periodic chart coordinate).
    pub fn closed(mut self, closed: bool) -> Self {
        self.closed = closed;
        self
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn is_arclength(&self) -> bool {
        self.arc.is_some()
    }

    /// Current parameter interval (arclength interval after reparametrization).
    pub fn interval(&self) -> [f64; 2] {
        match &self.arc {
            Some(a) => [0.0, *a.s.last().unwrap()],
            None => self.raw_interval,
        }
    }

    pub fn length_parameter(&self) -> f64 {
        let [a, b] = self.interval();
        b - a
    }

    /// Same image traversed backwards.
    pub fn reversed(&self) -> Self {
        let mut c = self.clone();
        c.reversed = !c.reversed;
        c
    }

    fn raw(&self, t: f64) -> (Vec2, Vec2, Vec2) {
        match self.kind {
            CurveKind::Line { start, direction } => {
                let d = Vec2::new(direction[0], direction[1]);
                (Vec2::new(start[0], start[1]) + t * d, d, Vec2::zeros())
            }
            CurveKind::Circle { center, radius } => {
                let (s, c) = t.sin_cos();
                (
                    Vec2::new(center[0] + radius * c, center[1] + radius * s),
                    Vec2::new(-radius * s, radius * c),
                    Vec2::new(-radius * c, -radius * s),
                )
            }
            CurveKind::GreatCircle { tilt } => {
                let (sa, ca) = tilt.sin_cos();
                let (st, ct) = t.sin_cos();
                let (z, zp) = (st * sa, ct * sa);
                let rho2 = 1.0 - z * z;
                let rho = rho2.sqrt();
                let u = (st * ca).atan2(ct);
                let up = ca / rho2;
                let upp = 2.0 * ca * z * zp / (rho2 * rho2);
                let vp = zp / rho;
                let rhop = -z * zp / rho;
                let vpp = (-z * rho - zp * rhop) / rho2;
                (Vec2::new(u, z.asin()), Vec2::new(up, vp), Vec2::new(upp, vpp))
            }
        }
    }

    /// Squared g-speed and its t-derivative at raw parameter `t`.
    fn speed_data(surface: &ParamSurface, uv: Vec2, d1: Vec2, d2: Vec2) -> Result<(f64, f64)> {
        let j = surface.jet_unchecked(uv)?;
        let m = first_fundamental_form(&j)?;
        let mut dg = Mat2::zeros();
        for k in 0..2 {
            for i in 0..2 {
                for l in 0..2 {
                    let d = j.second(i, k).dot(&j.partial(l)) + j.partial(i).dot(&j.second(l, k));
                    dg[(i, l)] += d * d1[k];
                }
            }
        }
        let w2 = m.inner(&d1, &d1);
        let dw2 = 2.0 * m.inner(&d1, &d2) + (d1.transpose() * dg * d1)[(0, 0)];
        Ok((w2, dw2))
    }

    fn raw_speed(&self, surface: &ParamSurface, t: f64) -> Result<f64> {
        let (uv, d1, _) = self.raw(t);
        let j = surface.jet_unchecked(uv)?;
        Ok(first_fundamental_form(&j)?.norm(&d1))
    }

    fn gl_length(&self, surface: &ParamSurface, a: f64, b: f64) -> Result<f64> {
        let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
        let mut acc = GL5[0].1 * self.raw_speed(surface, m)?;
        for &(x, w) in &GL5[1..] {
            acc += w * (self.raw_speed(surface, m + r * x)? + self.raw_speed(surface, m - r * x)?);
        }
        Ok(r * acc)
    }

    /// Reparametrize by arclength of the image under `surface`; the new
    /// parameter runs over `[0, L]`.
    pub fn arclength(&self, surface: &ParamSurface) -> Result<Self> {
        let base = Self { arc: None, reversed: false, ..self.clone() };
        let [a, b] = base.raw_interval;
        let n = 400;
        let mut t = Vec::with_capacity(n + 1);
        let mut s = Vec::with_capacity(n + 1);
        t.push(a);
        s.push(0.0);
        for i in 0..n {
            let t0 = a + (b - a) * i as f64 / n as f64;
            let t1 = a + (b - a) * (i + 1) as f64 / n as f64;
            // Two sub-panels per table interval.
            let tm = 0.5 * (t0 + t1);
            let piece = base.gl_length(surface, t0, tm)? + base.gl_length(surface, tm, t1)?;
            if !(piece > 0.0) {
                return Err(LabError::DegenerateCurve { t: t0, reason: "vanishing g-speed".into() });
            }
            t.push(t1);
            s.push(s[i] + piece);
        }
        Ok(Self {
            arc: Some(Arc::new(ArcTable { surface: surface.clone(), t, s })),
            reversed: self.reversed,
            ..base
        })
    }

    /// Raw parameter at arclength `sigma`.
    fn raw_parameter(&self, table: &ArcTable, sigma: f64) -> Result<f64> {
        let k = match table.s.binary_search_by(|x| x.partial_cmp(&sigma).unwrap()) {
            Ok(k) => return Ok(table.t[k]),
            Err(k) => k.clamp(1, table.s.len() - 1) - 1,
        };
        let (t0, s0) = (table.t[k], table.s[k]);
        let mut t = t0 + (sigma - s0) / (table.s[k + 1] - s0) * (table.t[k + 1] - t0);
        for _ in 0..30 {
            let f = s0 + self.gl_length(&table.surface, t0, t)? - sigma;
            let dt = f / self.raw_speed(&table.surface, t)?;
            t -= dt;
            if dt.abs() < 1e-15 * t.abs().max(1.0) {
                break;
            }
        }
        Ok(t)
    }

    /// Point and derivatives at the current parameter.
    pub fn eval(&self, t: f64) -> Result<CurvePoint> {
        let [a, b] = self.interval();
        let tt = if self.reversed { a + b - t } else { t };
        let sign = if self.reversed { -1.0 } else { 1.0 };
        let (uv, d1, d2) = match &self.arc {
            None => {
                let (uv, d1, d2) = self.raw(tt);
                (uv, d1, d2)
            }
            Some(table) => {
                let r = self.raw_parameter(table, tt)?;
                let (uv, c1, c2) = self.raw(r);
                let (w2, dw2) = Self::speed_data(&table.surface, uv, c1, c2)?;
                let w = w2.sqrt();
                let dw = dw2 / (2.0 * w);
                (uv, c1 / w, (c2 - c1 * (dw / w)) / w2)
            }
        };
        if d1.norm() == 0.0 {
            return Err(LabError::DegenerateCurve { t, reason: "zero velocity".into() });
        }
        Ok(CurvePoint { t, uv, d1: sign * d1, d2 })
    }

    /// `n` uniformly spaced samples; closed curves omit the repeated endpoint.
    pub fn sample(&self, n: usize) -> Result<Vec<CurvePoint>> {
        let [a, b] = self.interval();
        let denom = if self.closed { n } else { n.saturating_sub(1).max(1) };
        (0..n).map(|i| self.eval(a + (b - a) * i as f64 / denom as f64)).collect()
    }

    /// Largest `| |gamma'|_g - 1 |` over `n` samples.
    pub fn arclength_defect(&self, surface: &ParamSurface, n: usize) -> Result<f64> {
        let mut worst = 0.0f64;
        for p in self.sample(n)? {
            let j = surface.jet_unchecked(p.uv)?;
            worst = worst.max((first_fundamental_form(&j)?.norm(&p.d1) - 1.0).abs());
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Ellipsoid, Sphere};

    #[test]
    fn great_circle_derivatives_match_differences() {
        let c = CurveOnSurface::new(CurveKind::GreatCircle { tilt: PI / 6.0 }, [-1.0, 1.0]).unwrap();
        let h = 1e-5;
        for &t in &[-0.7, 0.0, 0.4] {
            let p = c.eval(t).unwrap();
            let (a, b) = (c.eval(t + h).unwrap(), c.eval(t - h).unwrap());
            assert!(((a.uv - b.uv) / (2.0 * h) - p.d1).norm() < 1e-8);
            assert!(((a.d1 - b.d1) / (2.0 * h) - p.d2).norm() < 1e-8);
        }
    }

    #[test]
    fn ellipse_arclength_has_unit_speed() {
        let s = ParamSurface::analytic(Ellipsoid::new(1.0, 1.2, 1.5));
        let c = CurveOnSurface::horizontal(0.0, [-PI, PI]).unwrap().closed(true);
        let a = c.arclength(&s).unwrap();
        assert!(a.arclength_defect(&s, 50).unwrap() < 1e-10);
        let h = 1e-5;
        let p = a.eval(1.0).unwrap();
        let (x, y) = (a.eval(1.0 + h).unwrap(), a.eval(1.0 - h).unwrap());
        assert!(((x.uv - y.uv) / (2.0 * h) - p.d1).norm() < 1e-8);
        assert!(((x.d1 - y.d1) / (2.0 * h) - p.d2).norm() < 1e-6);
    }

    #[test]
    fn reversal_flips_velocity() {
        let s = ParamSurface::analytic(Sphere::new(1.0));
        let c = CurveOnSurface::horizontal(0.5, [-1.0, 1.0]).unwrap().arclength(&s).unwrap();
        let r = c.reversed();
        let l = c.length_parameter();
        let (p, q) = (c.eval(0.2).unwrap(), r.eval(l - 0.2).unwrap());
        assert!((p.uv - q.uv).norm() < 1e-12);
        assert!((p.d1 + q.d1).norm() < 1e-12);
        assert!((p.d2 - q.d2).norm() < 1e-12);
    }
}
