//! Immersions defined on Fermi coordinates: a chart of a catalog surface
//! and a marched surface resampled by interpolation.

use crate::error::Result;
use crate::extension::MarchedSurface;
use crate::fermi::FermiChart;
use crate::geometry::{DomainPatch, Immersion, Jet2, Vec2, Vec3};

/// A surface re-parametrized by geodesic normal coordinates `(s, t)`
/// (`u = s`, `v = t`).
#[derive(Debug, Clone)]
pub struct ChartImmersion {
    pub chart: FermiChart,
    domain: DomainPatch,
}

impl ChartImmersion {
    pub fn new(chart: FermiChart, spacing: f64) -> Result<Self> {
        let domain = DomainPatch::rectangle(chart.s_range(), chart.t_range(), spacing)?;
        Ok(Self { chart, domain })
    }
}

impl Immersion for ChartImmersion {
    fn name(&self) -> String {
        format!("fermi({})", self.chart.surface().name())
    }
    fn domain(&self) -> &DomainPatch {
        &self.domain
    }
    fn position(&self, p: Vec2) -> Vec3 {
        self.chart.position(p.x, p.y).unwrap_or_else(|_| Vec3::repeat(f64::NAN))
    }
    fn analytic_jet(&self, p: Vec2) -> Option<Jet2> {
        self.chart.jet(p.x, p.y).ok()
    }
}

/// Catmull-Rom interpolation of marched positions over `(s, t)`.
#[derive(Debug, Clone)]
pub struct MarchedImmersion {
    pub surface: MarchedSurface,
    domain: DomainPatch,
}

impl MarchedImmersion {
    pub fn new(surface: MarchedSurface, spacing: f64) -> Result<Self> {
        let s = [surface.s[0], *surface.s.last().unwrap()];
        let t = if surface.closed {
            [surface.t[0], surface.t[0] + surface.dt * surface.t.len() as f64]
        } else {
            [surface.t[0], *surface.t.last().unwrap()]
        };
        let domain = DomainPatch::rectangle(s, t, spacing)?;
        Ok(Self { surface, domain })
    }

    fn node(&self, i: isize, k: isize) -> Vec3 {
        let rows = &self.surface.positions;
        let nt = rows[0].len() as isize;
        let ns = rows.len() as isize;
        let k = if self.surface.closed { k.rem_euclid(nt) } else { k };
        let get = |i: isize, k: isize| rows[i as usize][k as usize];
        // Linear extrapolation supplies one ghost node past each open edge.
        let ext = |i: isize, k: isize| -> Vec3 {
            if k < 0 {
                2.0 * get(i, 0) - get(i, 1)
            } else if k >= nt {
                2.0 * get(i, nt - 1) - get(i, nt - 2)
            } else {
                get(i, k)
            }
        };
        if i < 0 {
            2.0 * ext(0, k) - ext(1, k)
        } else if i >= ns {
            2.0 * ext(ns - 1, k) - ext(ns - 2, k)
        } else {
            ext(i, k)
        }
    }
}

fn catmull_rom(p: [Vec3; 4], x: f64) -> Vec3 {
    let x2 = x * x;
    let x3 = x2 * x;
    0.5 * ((2.0 * p[1])
        + (p[2] - p[0]) * x
        + (2.0 * p[0] - 5.0 * p[1] + 4.0 * p[2] - p[3]) * x2
        + (3.0 * p[1] - p[0] - 3.0 * p[2] + p[3]) * x3)
}

impl Immersion for MarchedImmersion {
    fn name(&self) -> String {
        "marched".into()
    }
    fn domain(&self) -> &DomainPatch {
        &self.domain
    }
    fn position(&self, p: Vec2) -> Vec3 {
        let ms = self.surface.s.len() as isize;
        let mt = self.surface.t.len() as isize;
        let fs = ((p.x - self.surface.s[0]) / self.surface.ds).clamp(0.0, (ms - 1) as f64);
        let ft = (p.y - self.surface.t[0]) / self.surface.dt;
        let ft = if self.surface.closed { ft } else { ft.clamp(0.0, (mt - 1) as f64) };
        let (i0, k0) = ((fs.floor() as isize).min(ms - 2), (ft.floor() as isize).min(if self.surface.closed { isize::MAX } else { mt - 2 }));
        let (xs, xt) = (fs - i0 as f64, ft - k0 as f64);
        let mut col = [Vec3::zeros(); 4];
        for (a, c) in col.iter_mut().enumerate() {
            let i = i0 + a as isize - 1;
            let row = [self.node(i, k0 - 1), self.node(i, k0), self.node(i, k0 + 1), self.node(i, k0 + 2)];
            *c = catmull_rom(row, xt);
        }
        catmull_rom(col, xs)
    }
}
