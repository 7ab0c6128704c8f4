//! Marching an immersion off a curve from its Cauchy data.
//!
//! In geodesic normal form the metric is `ds^2 + g22(s, t) dt^2`. Given the
//! positions `f(t)` and conormals `f1(t)` on the curve, the three
//! conditions `<f11, f2> = 0`, `<f11, f1> = 0` and
//! `<f11, f22> = |f12|^2 - (g22)_ss / 2` fix `f11` pointwise, which turns
//! the embedding problem into an evolution equation in `s`.
//!
//! The march is explicit and, for positively curved targets, ill-posed:
//! high t-frequencies grow at every step. Closed curves can be marched with
//! a Fourier low-pass filter applied to each row; open curves are marched
//! raw and the instability detector stops them.

use std::io::Write;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::fermi::{right_normal, FermiChart};
use crate::geometry::{metric_with_christoffel, second_fundamental_form, CurveOnSurface, ParamSurface, Vec2, Vec3};

/// Relative Gram-determinant threshold for the pointwise system.
pub const GRAM_THRESHOLD: f64 = 1e-10;

/// Solves the pointwise linear system for `f11`. `g22_ss` is the second
/// s-derivative of the target `g22`.
pub fn f11_solve(f1: &Vec3, f2: &Vec3, f12: &Vec3, f22: &Vec3, g22_ss: f64) -> Result<Vec3> {
    let c = f1.cross(f2);
    let d = f22.dot(&c);
    let scale = f1.norm() * f2.norm() * f22.norm();
    if !(d.abs() > GRAM_THRESHOLD.sqrt() * scale) || scale == 0.0 {
        return Err(LabError::AsymptoticDegeneracy {
            location: "f11 system".into(),
            gram: if scale == 0.0 { 0.0 } else { (d / scale).powi(2) },
        });
    }
    let rhs = f12.norm_squared() - 0.5 * g22_ss;
    Ok(c * (rhs / d))
}

/// The target `g22(s, t)` with its first two s-derivatives.
#[derive(Debug, Clone)]
pub enum TargetMetric {
    /// Equator of a round sphere: `g22 = cos^2(s / r)`.
    SphereEquator { radius: f64 },
    /// Values at `s = i * ds_half` for every curve sample.
    Tabulated { ds_half: f64, rows: Vec<Vec<[f64; 3]>> },
}

impl TargetMetric {
    pub fn eval(&self, s: f64, k: usize) -> Result<[f64; 3]> {
        match self {
            TargetMetric::SphereEquator { radius } => {
                let a = s / radius;
                let (sn, cs) = a.sin_cos();
                Ok([cs * cs, -2.0 * sn * cs / radius, -2.0 * (cs * cs - sn * sn) / (radius * radius)])
            }
            TargetMetric::Tabulated { ds_half, rows } => {
                let x = s / ds_half;
                let i = x.round();
                if (x - i).abs() > 1e-6 || i < 0.0 || i as usize >= rows.len() {
                    return Err(LabError::InvalidArgument(format!("target metric not tabulated at s = {s}")));
                }
                Ok(rows[i as usize][k])
            }
        }
    }

    /// Tabulates the target along the geodesic fan of `surface`: `sqrt(g22)`
    /// is the Jacobi field `J'' + K J = 0`, `J(0) = 1`, `J'(0) = -k_g`.
    pub fn from_geodesic_fan(chart: &FermiChart, ts: &[f64], s_max: f64, ds: f64) -> Result<Self> {
        let surface = chart.surface();
        let h = 0.5 * ds;
        let n = (s_max / h).round() as usize;
        let mut rows = vec![Vec::with_capacity(ts.len()); n + 1];
        for &t in ts {
            let j0 = chart.jet(0.0, t)?;
            let c = chart.curve().eval(t)?;
            let m = metric_with_christoffel(&surface.jet_unchecked(c.uv)?)?;
            let mut y = JacobiState { x: c.uv, v: right_normal(&m, &c.d1), j: j0.f2.norm(), jp: j0.f12.dot(&j0.f2) };
            for row in rows.iter_mut() {
                let kk = gauss_at(surface, y.x)?;
                row.push([y.j * y.j, 2.0 * y.j * y.jp, 2.0 * (y.jp * y.jp - kk * y.j * y.j)]);
                y = y.rk4(surface, h)?;
            }
        }
        Ok(TargetMetric::Tabulated { ds_half: h, rows })
    }
}

fn gauss_at(surface: &ParamSurface, x: Vec2) -> Result<f64> {
    Ok(second_fundamental_form(&surface.jet_unchecked(x)?)?.gauss)
}

#[derive(Debug, Clone, Copy)]
struct JacobiState {
    x: Vec2,
    v: Vec2,
    j: f64,
    jp: f64,
}

impl JacobiState {
    fn deriv(&self, surface: &ParamSurface) -> Result<(Vec2, f64)> {
        let jet = surface.jet_unchecked(self.x)?;
        let acc = metric_with_christoffel(&jet)?.geodesic_acceleration(&self.v);
        let k = second_fundamental_form(&jet)?.gauss;
        Ok((acc, -k * self.j))
    }

    fn offset(&self, h: f64, d: &(Vec2, f64, Vec2, f64)) -> Self {
        Self { x: self.x + h * d.0, v: self.v + h * d.2, j: self.j + h * d.1, jp: self.jp + h * d.3 }
    }

    fn rk4(&self, surface: &ParamSurface, h: f64) -> Result<Self> {
        let k = |y: &JacobiState| -> Result<(Vec2, f64, Vec2, f64)> {
            let (a, jpp) = y.deriv(surface)?;
            Ok((y.v, y.jp, a, jpp))
        };
        let k1 = k(self)?;
        let k2 = k(&self.offset(0.5 * h, &k1))?;
        let k3 = k(&self.offset(0.5 * h, &k2))?;
        let k4 = k(&self.offset(h, &k3))?;
        let comb = |a: f64, b: f64, c: f64, d: f64| h / 6.0 * (a + 2.0 * b + 2.0 * c + d);
        Ok(Self {
            x: self.x + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            j: self.j + comb(k1.1, k2.1, k3.1, k4.1),
            v: self.v + h / 6.0 * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2),
            jp: self.jp + comb(k1.3, k2.3, k3.3, k4.3),
        })
    }
}

/// Positions and conormals along the curve plus the target metric.
#[derive(Debug, Clone)]
pub struct CauchyData {
    pub t: Vec<f64>,
    pub positions: Vec<Vec3>,
    pub conormals: Vec<Vec3>,
    pub closed: bool,
    pub target: TargetMetric,
}

impl CauchyData {
    /// Reads positions and conormals from a chart at `n` uniform samples.
    pub fn from_chart(chart: &FermiChart, n: usize, target: TargetMetric) -> Result<Self> {
        let t = chart.t_samples(n);
        let mut positions = Vec::with_capacity(n);
        let mut conormals = Vec::with_capacity(n);
        for &tk in &t {
            let j = chart.jet(0.0, tk)?;
            positions.push(j.p);
            conormals.push(j.f1);
        }
        let data = Self { t, positions, conormals, closed: chart.curve().is_closed(), target };
        data.validate()?;
        Ok(data)
    }

    /// Sample count giving a spacing close to `dt`. Closed curves get the
    /// nearest count whose only prime factors are 2, 3 and 5, which keeps the
    /// row filter cheap.
    pub fn samples_for_spacing(curve: &CurveOnSurface, dt: f64) -> usize {
        let l = curve.length_parameter();
        let n = (l / dt).round() as usize;
        if curve.is_closed() {
            nearest_smooth(n.max(8))
        } else {
            n.max(4) + 1
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.t[1] - self.t[0]
    }

    /// Unit conormals orthogonal to the curve and unit-speed positions.
    pub fn validate(&self) -> Result<()> {
        if self.t.len() < 5 {
            return Err(LabError::InvalidArgument("Cauchy data needs at least five samples".into()));
        }
        let dt = self.dt();
        let d1 = t_derivatives(&self.positions, dt, self.closed);
        for k in 0..self.len() {
            let c = &self.conormals[k];
            if (c.norm() - 1.0).abs() > 1e-8 {
                return Err(LabError::InconsistentData { t: self.t[k], detail: format!("|f1| = {}", c.norm()) });
            }
            let tangent = d1.0[k];
            let tol = if self.closed { 1e-5 } else { 1e-4 };
            if c.dot(&tangent).abs() > tol * tangent.norm() {
                return Err(LabError::InconsistentData {
                    t: self.t[k],
                    detail: format!("<f1, f2> = {:e}", c.dot(&tangent)),
                });
            }
        }
        Ok(())
    }

    /// Same data with each conormal turned about the tangent by `angle`.
    pub fn tilted(&self, angle: f64) -> Self {
        let (tangents, _) = t_derivatives(&self.positions, self.dt(), self.closed);
        let mut out = self.clone();
        for (c, t) in out.conormals.iter_mut().zip(&tangents) {
            let axis = t.normalize();
            let perp = axis.cross(c);
            let r = *c * angle.cos() + perp * angle.sin();
            // Re-orthonormalize against the tangent.
            let r = r - axis * r.dot(&axis);
            *c = r.normalize();
        }
        out
    }
}

fn nearest_smooth(n: usize) -> usize {
    let smooth = |mut m: usize| {
        for p in [2, 3, 5] {
            while m % p == 0 {
                m /= p;
            }
        }
        m == 1
    };
    (0..n).find_map(|d| [n + d, n - d].into_iter().find(|&m| m > 0 && smooth(m))).unwrap_or(n)
}

/// First and second t-derivatives by centered second-order differences,
/// periodic for closed curves and one-sided at the ends otherwise.
fn t_derivatives(f: &[Vec3], dt: f64, closed: bool) -> (Vec<Vec3>, Vec<Vec3>) {
    let n = f.len();
    let mut d1 = vec![Vec3::zeros(); n];
    let mut d2 = vec![Vec3::zeros(); n];
    for k in 0..n {
        let interior = closed || (k > 0 && k + 1 < n);
        if interior {
            let (p, m) = ((k + 1) % n, (k + n - 1) % n);
            d1[k] = (f[p] - f[m]) / (2.0 * dt);
            d2[k] = (f[p] - 2.0 * f[k] + f[m]) / (dt * dt);
        } else if k == 0 {
            d1[k] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dt);
            d2[k] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / (dt * dt);
        } else {
            let l = n - 1;
            d1[k] = (3.0 * f[l] - 4.0 * f[l - 1] + f[l - 2]) / (2.0 * dt);
            d2[k] = (2.0 * f[l] - 5.0 * f[l - 1] + 4.0 * f[l - 2] - f[l - 3]) / (dt * dt);
        }
    }
    (d1, d2)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RowResidual {
    pub s: f64,
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
}

impl RowResidual {
    pub fn total(&self) -> f64 {
        self.g11 + self.g12 + self.g22
    }
}

#[derive(Debug, Clone)]
pub struct MarchedSurface {
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    pub ds: f64,
    pub dt: f64,
    pub closed: bool,
    /// `positions[i][k]` at `(s_i, t_k)`.
    pub positions: Vec<Vec<Vec3>>,
    pub conormals: Vec<Vec<Vec3>>,
    pub residuals: Vec<RowResidual>,
    pub filter_modes: Option<usize>,
}

impl MarchedSurface {
    /// Samples excluded from error accounting at each open end.
    pub fn margin(&self) -> usize {
        if self.closed {
            0
        } else {
            2
        }
    }

    /// Interior sample indices.
    pub fn interior(&self) -> std::ops::Range<usize> {
        let m = self.margin();
        m..self.t.len() - m
    }

    /// Largest `|g11 - 1| + |g12| + |g22 - target|` divided by `s * ds` over
    /// rows with `s > 0`.
    pub fn isometry_constant(&self) -> f64 {
        self.residuals
            .iter()
            .filter(|r| r.s > 0.0)
            .map(|r| r.total() / (r.s * self.ds))
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "s,t,x,y,z,res_g11,res_g12,res_g22")?;
        for (i, row) in self.positions.iter().enumerate() {
            let r = &self.residuals[i];
            for (k, p) in row.iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    self.s[i], self.t[k], p.x, p.y, p.z, r.g11, r.g12, r.g22
                )?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MarchOptions {
    pub s_max: f64,
    pub ds: f64,
    /// Keep Fourier modes `|m| <= modes` on closed curves; ignored on open
    /// curves.
    pub filter_modes: Option<usize>,
    /// Abort once positions exceed this multiple of the initial extent.
    pub blowup_factor: f64,
}

impl MarchOptions {
    pub fn new(s_max: f64, ds: f64) -> Self {
        Self { s_max, ds, filter_modes: None, blowup_factor: 10.0 }
    }

    pub fn filtered(mut self, modes: usize) -> Self {
        self.filter_modes = Some(modes);
        self
    }
}

struct LowPass {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    modes: usize,
    buf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl LowPass {
    fn new(n: usize, modes: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        Self {
            fwd,
            inv,
            modes,
            buf: vec![Complex::new(0.0, 0.0); n],
            scratch: vec![Complex::new(0.0, 0.0); len],
        }
    }

    fn apply(&mut self, row: &mut [Vec3]) {
        let n = row.len();
        for c in 0..3 {
            for (b, v) in self.buf.iter_mut().zip(row.iter()) {
                *b = Complex::new(v[c], 0.0);
            }
            self.fwd.process_with_scratch(&mut self.buf, &mut self.scratch);
            for (m, b) in self.buf.iter_mut().enumerate() {
                let freq = m.min(n - m);
                if freq > self.modes {
                    *b = Complex::new(0.0, 0.0);
                }
            }
            self.inv.process_with_scratch(&mut self.buf, &mut self.scratch);
            for (v, b) in row.iter_mut().zip(&self.buf) {
                v[c] = b.re / n as f64;
            }
        }
    }
}

fn row_rhs(f: &[Vec3], f1: &[Vec3], target: &TargetMetric, s: f64, dt: f64, closed: bool, row: usize) -> Result<Vec<Vec3>> {
    let (d1, d2) = t_derivatives(f, dt, closed);
    let (c1, _) = t_derivatives(f1, dt, closed);
    let mut out = Vec::with_capacity(f.len());
    for k in 0..f.len() {
        let [_, _, gss] = target.eval(s, k)?;
        let x = f11_solve(&f1[k], &d1[k], &c1[k], &d2[k], gss).map_err(|e| match e {
            LabError::AsymptoticDegeneracy { gram, .. } => LabError::AsymptoticDegeneracy {
                location: format!("row {row} (s = {s}), sample {k}"),
                gram,
            },
            other => other,
        })?;
        out.push(x);
    }
    Ok(out)
}

fn residual_row(f: &[Vec3], f1: &[Vec3], target: &TargetMetric, s: f64, dt: f64, closed: bool, margin: usize) -> Result<RowResidual> {
    let (d1, _) = t_derivatives(f, dt, closed);
    let mut r = RowResidual { s, g11: 0.0, g12: 0.0, g22: 0.0 };
    for k in margin..f.len() - margin {
        let [g22, _, _] = target.eval(s, k)?;
        r.g11 = r.g11.max((f1[k].norm_squared() - 1.0).abs());
        r.g12 = r.g12.max(f1[k].dot(&d1[k]).abs());
        r.g22 = r.g22.max((d1[k].norm_squared() - g22).abs());
    }
    Ok(r)
}

/// Explicit midpoint march in `s` with `f11` re-solved at the midpoint.
pub fn ck_march(data: &CauchyData, opts: &MarchOptions) -> Result<MarchedSurface> {
    data.validate()?;
    if !(opts.ds > 0.0 && opts.s_max >= 0.0) {
        return Err(LabError::InvalidArgument(format!("bad march steps {opts:?}")));
    }
    let dt = data.dt();
    let closed = data.closed;
    let n = data.len();
    let margin = if closed { 0 } else { 2 };
    let rows = (opts.s_max / opts.ds).round() as usize;
    let mut filter = match (opts.filter_modes, closed) {
        (Some(m), true) => Some(LowPass::new(n, m)),
        _ => None,
    };
    let centroid = data.positions.iter().sum::<Vec3>() / n as f64;
    let scale = data.positions.iter().map(|p| (p - centroid).norm()).fold(0.0, f64::max).max(1e-300);
    let limit = opts.blowup_factor * scale;
    let roughness = |f: &[Vec3]| t_derivatives(f, dt, closed).1.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let rough_limit = opts.blowup_factor * roughness(&data.positions);

    let mut f = data.positions.clone();
    let mut f1 = data.conormals.clone();
    let mut out = MarchedSurface {
        s: vec![0.0],
        t: data.t.clone(),
        ds: opts.ds,
        dt,
        closed,
        positions: vec![f.clone()],
        conormals: vec![f1.clone()],
        residuals: vec![residual_row(&f, &f1, &data.target, 0.0, dt, closed, margin)?],
        filter_modes: filter.as_ref().map(|l| l.modes),
    };
    let h = opts.ds;
    for i in 0..rows {
        let s = i as f64 * h;
        let a = row_rhs(&f, &f1, &data.target, s, dt, closed, i)?;
        let mut fh: Vec<Vec3> = f.iter().zip(&f1).map(|(p, c)| p + 0.5 * h * c).collect();
        let mut f1h: Vec<Vec3> = f1.iter().zip(&a).map(|(c, x)| c + 0.5 * h * x).collect();
        if let Some(lp) = filter.as_mut() {
            lp.apply(&mut fh);
            lp.apply(&mut f1h);
        }
        let b = row_rhs(&fh, &f1h, &data.target, s + 0.5 * h, dt, closed, i)?;
        for k in 0..n {
            f[k] += h * f1h[k];
            f1[k] += h * b[k];
        }
        if let Some(lp) = filter.as_mut() {
            lp.apply(&mut f);
            lp.apply(&mut f1);
        }
        let sn = (i + 1) as f64 * h;
        let worst = f.iter().map(|p| (p - centroid).norm()).fold(0.0, f64::max);
        if !(worst <= limit) {
            return Err(LabError::Instability { row: i + 1, s: sn, scale: worst, limit });
        }
        // Growing grid-scale oscillation shows up in the second differences
        // well before it moves the positions.
        let rough = roughness(&f);
        if !(rough <= rough_limit) {
            return Err(LabError::Instability { row: i + 1, s: sn, scale: rough, limit: rough_limit });
        }
        out.residuals.push(residual_row(&f, &f1, &data.target, sn, dt, closed, margin)?);
        out.s.push(sn);
        out.positions.push(f.clone());
        out.conormals.push(f1.clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct DivergenceReport {
    pub epsilon: f64,
    pub s: Vec<f64>,
    /// Per row, `max_k max(|f - f'|, |f1 - f1'|)`.
    pub gap: Vec<f64>,
}

impl DivergenceReport {
    pub fn final_gap(&self) -> f64 {
        *self.gap.last().unwrap()
    }
}

/// Marches the data and a copy with conormals tilted by `epsilon`, reporting
/// how far the two solutions separate.
pub fn extension_uniqueness_demo(data: &CauchyData, epsilon: f64, opts: &MarchOptions) -> Result<DivergenceReport> {
    let a = ck_march(data, opts)?;
    let b = ck_march(&data.tilted(epsilon), opts)?;
    let range = a.interior();
    let gap = (0..a.s.len())
        .map(|i| {
            range
                .clone()
                .map(|k| {
                    (a.positions[i][k] - b.positions[i][k])
                        .norm()
                        .max((a.conormals[i][k] - b.conormals[i][k]).norm())
                })
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(DivergenceReport { epsilon, s: a.s.clone(), gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Sphere;
    use nalgebra::Rotation3;
    use std::f64::consts::PI;

    #[test]
    fn sphere_equator_f11() {
        let f = Vec3::new(1.0, 0.0, 0.0);
        let f1 = Vec3::new(0.0, 0.0, 1.0);
        let f2 = Vec3::new(0.0, -1.0, 0.0);
        let x = f11_solve(&f1, &f2, &Vec3::zeros(), &(-f), -2.0).unwrap();
        assert!((x + f).norm() < 1e-15);
    }

    #[test]
    fn flat_data_is_degenerate() {
        let r = f11_solve(&Vec3::x(), &Vec3::y(), &Vec3::zeros(), &Vec3::zeros(), 0.0);
        assert!(matches!(r, Err(LabError::AsymptoticDegeneracy { .. })));
    }

    #[test]
    fn f11_is_rotation_equivariant() {
        let rot = Rotation3::from_euler_angles(0.3, -0.7, 1.2);
        let (f1, f2, f12, f22) =
            (Vec3::new(0.1, 0.2, 1.0), Vec3::new(1.0, -0.3, 0.0), Vec3::new(0.2, 0.1, 0.3), Vec3::new(0.0, 0.4, -1.1));
        let a = rot * f11_solve(&f1, &f2, &f12, &f22, 0.7).unwrap();
        let b = f11_solve(&(rot * f1), &(rot * f2), &(rot * f12), &(rot * f22), 0.7).unwrap();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn tabulated_target_matches_closed_form() {
        let s = ParamSurface::analytic(Sphere::new(1.0));
        let eq = CurveOnSurface::horizontal(0.0, [-PI, PI]).unwrap().closed(true).reversed();
        let chart = FermiChart::build(&s, &eq.arclength(&s).unwrap(), 0.3, 1e-3).unwrap();
        let ts = chart.t_samples(8);
        let tab = TargetMetric::from_geodesic_fan(&chart, &ts, 0.2, 1e-2).unwrap();
        let exact = TargetMetric::SphereEquator { radius: 1.0 };
        for &sv in &[0.0, 0.105, 0.2] {
            let (a, b) = (tab.eval(sv, 3).unwrap(), exact.eval(sv, 3).unwrap());
            for q in 0..3 {
                assert!((a[q] - b[q]).abs() < 1e-8, "{sv} {a:?} {b:?}");
            }
        }
    }
}
