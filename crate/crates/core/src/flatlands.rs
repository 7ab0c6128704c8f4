//! Parabolic sets of nonnegatively curved surfaces, straight rulings through
//! non-flat parabolic points, and propagation of pointwise equality from
//! the positively curved part across rulings and flat components.

use std::collections::VecDeque;
use std::io::Write;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::fermi::geodesic;
use crate::geometry::{metric_with_christoffel, second_fundamental_form, NodeGrid, ParamSurface, Vec2, Vec3};

/// Absolute floor added to the curvature thresholds.
pub const CURVATURE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct FlatComponent {
    pub label: usize,
    pub nodes: Vec<usize>,
    /// Nodes outside the component with a 4-neighbour inside it.
    pub rim: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ParabolicSet {
    pub grid: NodeGrid,
    pub tol_k: f64,
    /// Threshold on the largest principal curvature for a point to count as
    /// flat.
    pub tol_flat: f64,
    pub r_flat: f64,
    pub gauss: Vec<f64>,
    pub max_curvature: Vec<f64>,
    pub parabolic: Vec<bool>,
    pub boundary: Vec<usize>,
    pub flat: Vec<bool>,
    /// Flat component label per node.
    pub labels: Vec<Option<usize>>,
    pub components: Vec<FlatComponent>,
    /// Pairs of flat components that share a rim node.
    pub adjacency: Vec<(usize, usize)>,
}

impl ParabolicSet {
    pub fn positive(&self, k: usize) -> bool {
        self.grid.active(k) && !self.parabolic[k]
    }

    pub fn parabolic_count(&self) -> usize {
        self.parabolic.iter().filter(|&&b| b).count()
    }

    pub fn flat_count(&self) -> usize {
        self.flat.iter().filter(|&&b| b).count()
    }

    /// Node-wise closure of the positive part: positive nodes and their
    /// 8-neighbours.
    pub fn positive_closure(&self) -> Vec<bool> {
        let g = &self.grid;
        let mut out = vec![false; g.len()];
        for k in g.active_indices().filter(|&k| self.positive(k)) {
            for di in -1..=1 {
                for dj in -1..=1 {
                    if let Some(q) = g.offset(k, di, dj) {
                        out[q] = g.active(q);
                    }
                }
            }
        }
        out
    }

    /// True when no parabolic node sits on the rim of the working grid.
    pub fn compact_in_domain(&self) -> bool {
        let g = &self.grid;
        !g.active_indices().any(|k| self.parabolic[k] && g.is_boundary(k))
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    v[v.len() / 2]
}

fn relative_threshold(values: &[f64]) -> f64 {
    let big: Vec<f64> = values.iter().copied().filter(|v| *v > 1e-10).collect();
    1e-8 * median(big) + CURVATURE_FLOOR
}

/// Classifies grid nodes. `tol_k` and `r_flat` default to a scale-aware
/// threshold and three grid cells.
pub fn parabolic_set(f: &ParamSurface, grid: &NodeGrid, tol_k: Option<f64>, r_flat: Option<f64>) -> Result<ParabolicSet> {
    let n = grid.len();
    let mut gauss = vec![f64::NAN; n];
    let mut kmax = vec![f64::NAN; n];
    for k in grid.active_indices() {
        let sh = second_fundamental_form(&f.jet_unchecked(grid.point_at(k))?)?;
        gauss[k] = sh.gauss;
        kmax[k] = sh.k1.abs().max(sh.k2.abs());
    }
    let act: Vec<usize> = grid.active_indices().collect();
    let tol_k = tol_k.unwrap_or_else(|| relative_threshold(&act.iter().map(|&k| gauss[k].abs()).collect::<Vec<_>>()));
    let tol_flat = relative_threshold(&act.iter().map(|&k| kmax[k]).collect::<Vec<_>>());
    let r_flat = r_flat.unwrap_or(3.0 * grid.spacing[0].max(grid.spacing[1]));

    let mut parabolic = vec![false; n];
    for &k in &act {
        parabolic[k] = gauss[k].abs() < tol_k;
    }
    let boundary: Vec<usize> = act
        .iter()
        .copied()
        .filter(|&k| parabolic[k] && grid.neighbors4(k).any(|q| grid.active(q) && !parabolic[q]))
        .collect();
    let mut on_boundary = vec![false; n];
    for &k in &boundary {
        on_boundary[k] = true;
    }
    let mut flat = vec![false; n];
    for &k in &act {
        if !parabolic[k] || on_boundary[k] {
            continue;
        }
        let ball = grid.ball(grid.point_at(k), r_flat);
        flat[k] = ball.iter().all(|&q| parabolic[q] && !on_boundary[q] && kmax[q] < tol_flat);
    }
    let (labels, components) = label_components(grid, &flat);
    let mut adjacency = Vec::new();
    for a in 0..components.len() {
        for b in (a + 1)..components.len() {
            if components[a].rim.iter().any(|r| components[b].rim.contains(r)) {
                adjacency.push((a, b));
            }
        }
    }
    Ok(ParabolicSet { grid: grid.clone(), tol_k, tol_flat, r_flat, gauss, max_curvature: kmax, parabolic, boundary, flat, labels, components, adjacency })
}

fn label_components(grid: &NodeGrid, member: &[bool]) -> (Vec<Option<usize>>, Vec<FlatComponent>) {
    let mut labels = vec![None; grid.len()];
    let mut comps = Vec::new();
    for start in grid.active_indices() {
        if !member[start] || labels[start].is_some() {
            continue;
        }
        let label = comps.len();
        let mut nodes = Vec::new();
        let mut queue = VecDeque::from([start]);
        labels[start] = Some(label);
        while let Some(k) = queue.pop_front() {
            nodes.push(k);
            for q in grid.neighbors4(k) {
                if grid.active(q) && member[q] && labels[q].is_none() {
                    labels[q] = Some(label);
                    queue.push_back(q);
                }
            }
        }
        let mut rim: Vec<usize> =
            nodes.iter().flat_map(|&k| grid.neighbors4(k)).filter(|&q| grid.active(q) && !member[q]).collect();
        rim.sort_unstable();
        rim.dedup();
        comps.push(FlatComponent { label, nodes, rim });
    }
    (labels, comps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointKind {
    ParabolicBoundary,
    DomainBoundary,
    FlatBoundary,
}

#[derive(Debug, Clone, Serialize)]
pub struct Ruling {
    pub params: Vec<Vec2>,
    #[serde(skip)]
    pub points: Vec<Vec3>,
    pub length: f64,
    /// Largest distance of an image point from the endpoint chord.
    pub straightness: f64,
    pub endpoints: [EndpointKind; 2],
}

impl Ruling {
    pub fn chord_length(&self) -> f64 {
        (self.points[self.points.len() - 1] - self.points[0]).norm()
    }
}

/// Distance from `x` to the segment `[a, b]`.
pub fn segment_distance(x: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let d = b - a;
    let len2 = d.norm_squared();
    if len2 == 0.0 {
        return (x - a).norm();
    }
    let t = ((x - a).dot(&d) / len2).clamp(0.0, 1.0);
    (x - (a + t * d)).norm()
}

pub fn straightness(points: &[Vec3]) -> f64 {
    let (a, b) = (points[0], points[points.len() - 1]);
    points.iter().map(|x| segment_distance(x, &a, &b)).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy)]
pub struct RulingOptions {
    /// Parameter-space step, as a fraction of the grid spacing.
    pub step_fraction: f64,
    /// Straightness tolerance relative to the chord length.
    pub tol_straight: f64,
}

impl Default for RulingOptions {
    fn default() -> Self {
        Self { step_fraction: 0.5, tol_straight: 1e-6 }
    }
}

/// Unit kernel direction of the shape operator, or `None` at flat points.
fn kernel_field(f: &ParamSurface, ps: &ParabolicSet, p: Vec2) -> Result<Option<Vec2>> {
    let jet = f.jet_unchecked(p)?;
    let m = metric_with_christoffel(&jet)?;
    let sh = second_fundamental_form(&jet)?;
    if sh.k1.abs().max(sh.k2.abs()) < ps.tol_flat {
        return Ok(None);
    }
    Ok(Some(sh.kernel_direction(&m).0))
}

enum Stop {
    Domain,
    Parabolic,
    Flat,
}

fn classify(f: &ParamSurface, ps: &ParabolicSet, p: Vec2) -> Option<Stop> {
    if !f.domain().contains(p) {
        return Some(Stop::Domain);
    }
    let k = ps.grid.nearest(p)?;
    if !ps.grid.active(k) {
        return Some(Stop::Domain);
    }
    if !ps.parabolic[k] {
        return Some(Stop::Parabolic);
    }
    if ps.flat[k] {
        return Some(Stop::Flat);
    }
    None
}

fn trace_half(f: &ParamSurface, ps: &ParabolicSet, p: Vec2, dir: Vec2, h: f64) -> Result<(Vec<Vec2>, EndpointKind)> {
    let mut pts = vec![p];
    let mut x = p;
    let mut prev = dir;
    let oriented = |d: Option<Vec2>, prev: Vec2| d.map(|d| if d.dot(&prev) < 0.0 { -d } else { d });
    let max_steps = (4.0 * (ps.grid.nu + ps.grid.nv) as f64 * ps.grid.spacing[0].max(ps.grid.spacing[1]) / h) as usize + 10;
    for _ in 0..max_steps {
        let stage = |y: Vec2, prev: Vec2| -> Result<Option<Vec2>> {
            if !f.domain().contains_with_slack(y, 0.5 * h) {
                return Ok(Some(prev));
            }
            Ok(oriented(kernel_field(f, ps, y)?, prev))
        };
        let Some(k1) = stage(x, prev)? else { return Ok((pts, EndpointKind::FlatBoundary)) };
        let Some(k2) = stage(x + 0.5 * h * k1, k1)? else { return Ok((pts, EndpointKind::FlatBoundary)) };
        let Some(k3) = stage(x + 0.5 * h * k2, k1)? else { return Ok((pts, EndpointKind::FlatBoundary)) };
        let Some(k4) = stage(x + h * k3, k1)? else { return Ok((pts, EndpointKind::FlatBoundary)) };
        let next = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        match classify(f, ps, next) {
            None => {
                prev = k1;
                x = next;
                pts.push(x);
            }
            Some(stop) => {
                let kind = match stop {
                    Stop::Domain => {
                        // Bisect onto the domain edge along the step.
                        let (mut lo, mut hi) = (0.0, 1.0);
                        for _ in 0..60 {
                            let mid = 0.5 * (lo + hi);
                            if f.domain().contains(x + mid * (next - x)) {
                                lo = mid;
                            } else {
                                hi = mid;
                            }
                        }
                        let edge = x + lo * (next - x);
                        if (edge - x).norm() > 1e-14 {
                            pts.push(edge);
                        }
                        EndpointKind::DomainBoundary
                    }
                    Stop::Parabolic => {
                        pts.push(next);
                        EndpointKind::ParabolicBoundary
                    }
                    Stop::Flat => {
                        pts.push(next);
                        EndpointKind::FlatBoundary
                    }
                };
                return Ok((pts, kind));
            }
        }
    }
    Err(LabError::GeometryInconsistency(format!("ruling from ({}, {}) did not terminate", p.x, p.y)))
}

/// Follows the zero-curvature direction field from `p` both ways until it
/// leaves the parabolic set, the domain, or reaches a flat component.
pub fn trace_ruling(f: &ParamSurface, ps: &ParabolicSet, p: Vec2, opts: &RulingOptions) -> Result<Ruling> {
    let k = ps.grid.nearest(p).filter(|&k| ps.grid.active(k)).ok_or(LabError::OutOfDomain { u: p.x, v: p.y, domain: "grid" })?;
    if !ps.parabolic[k] {
        return Err(LabError::InvalidArgument(format!("point ({}, {}) is not parabolic", p.x, p.y)));
    }
    let dir = kernel_field(f, ps, p)?.ok_or(LabError::ReclassifyFlat { u: p.x, v: p.y })?;
    let h = opts.step_fraction * ps.grid.spacing[0].min(ps.grid.spacing[1]);
    let (fwd, e1) = trace_half(f, ps, p, dir, h)?;
    let (bwd, e0) = trace_half(f, ps, p, -dir, h)?;
    let mut params: Vec<Vec2> = bwd.into_iter().rev().collect();
    params.extend(fwd.into_iter().skip(1));
    let points: Vec<Vec3> = params.iter().map(|&q| f.position(q)).collect();
    let length = points.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
    let dev = straightness(&points);
    let chord = (points[points.len() - 1] - points[0]).norm();
    if dev > opts.tol_straight * chord.max(f64::EPSILON) {
        return Err(LabError::GeometryInconsistency(format!(
            "ruling through ({}, {}) deviates {dev:e} from its chord of length {chord}",
            p.x, p.y
        )));
    }
    Ok(Ruling { params, points, length, straightness: dev, endpoints: [e0, e1] })
}

pub fn write_rulings_csv<W: Write>(rulings: &[Ruling], mut w: W) -> Result<()> {
    writeln!(w, "ruling,index,u,v,x,y,z")?;
    for (r, ruling) in rulings.iter().enumerate() {
        for (i, (p, x)) in ruling.params.iter().zip(&ruling.points).enumerate() {
            writeln!(w, "{r},{i},{},{},{},{},{}", p.x, p.y, x.x, x.y, x.z)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SkippedRuling {
    pub node: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropagationReport {
    pub tol: f64,
    pub active_nodes: usize,
    pub seeded: usize,
    /// Supplied agreement nodes rejected by direct comparison.
    pub rejected_seeds: usize,
    pub covered: usize,
    pub coverage: f64,
    pub max_deviation: f64,
    pub rulings_used: usize,
    pub rulings_skipped: Vec<SkippedRuling>,
    pub chords_used: usize,
    pub reclassified_flat: usize,
    pub max_arclength_defect: f64,
    pub parabolic_compact: bool,
    pub iterations: usize,
    #[serde(skip)]
    pub mask: Vec<bool>,
}

#[derive(Debug, Clone, Copy)]
pub struct PropagationOptions {
    pub tol: f64,
    pub ruling: RulingOptions,
    /// Chord directions tried per flat node.
    pub chord_directions: usize,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self { tol: 1e-6, ruling: RulingOptions::default(), chord_directions: 8 }
    }
}

fn polyline_length(points: &[Vec3]) -> f64 {
    points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// Pins `f = f~` along curves whose endpoints already agree.
///
/// Seeds are the supplied agreement nodes that pass a direct position
/// comparison. Rulings with both ends on covered nodes, then chords through
/// flat regions whose ends are covered, add the nodes they pass through
/// after the comparison is repeated along the whole curve. The covered set
/// only grows, so the result does not depend on visiting order beyond the
/// fixed node order used here.
pub fn propagate_equality(
    f: &ParamSurface,
    ft: &ParamSurface,
    ps: &ParabolicSet,
    agreement: &[bool],
    opts: &PropagationOptions,
) -> Result<PropagationReport> {
    let g = &ps.grid;
    let n = g.len();
    let h = g.spacing[0].min(g.spacing[1]);
    let deviation = |p: Vec2| (f.position(p) - ft.position(p)).norm();
    let mut covered = vec![false; n];
    let mut seeded = 0;
    let mut rejected = 0;
    for k in g.active_indices().filter(|&k| agreement[k]) {
        if deviation(g.point_at(k)) < opts.tol {
            covered[k] = true;
            seeded += 1;
        } else {
            rejected += 1;
        }
    }
    let is_covered = |covered: &[bool], p: Vec2| g.nearest(p).is_some_and(|k| covered[k]);
    let mut reclassified = vec![false; n];
    let mut skipped: Vec<SkippedRuling> = Vec::new();
    let mut rulings_used = 0;
    let mut chords_used = 0;
    let mut arclength_defect = 0.0f64;
    let mut iterations = 0;
    let mark_along = |covered: &mut Vec<bool>, params: &[Vec2]| {
        for p in params {
            if let Some(k) = g.nearest(*p) {
                if g.active(k) && (g.point_at(k) - p).norm() < 0.1 * h {
                    covered[k] = true;
                }
            }
        }
    };
    loop {
        iterations += 1;
        let before = covered.iter().filter(|&&c| c).count();
        skipped.clear();

        for k in g.active_indices() {
            if covered[k] || !ps.parabolic[k] || ps.flat[k] || reclassified[k] {
                continue;
            }
            let p = g.point_at(k);
            let ruling = match trace_ruling(f, ps, p, &opts.ruling) {
                Ok(r) => r,
                Err(LabError::ReclassifyFlat { .. }) => {
                    reclassified[k] = true;
                    continue;
                }
                Err(e) => {
                    skipped.push(SkippedRuling { node: k, reason: e.to_string() });
                    continue;
                }
            };
            let (a, b) = (ruling.params[0], *ruling.params.last().unwrap());
            if !(is_covered(&covered, a) && is_covered(&covered, b)) {
                skipped.push(SkippedRuling { node: k, reason: "an endpoint lies outside the agreement set".into() });
                continue;
            }
            let image: Vec<Vec3> = ruling.params.iter().map(|&q| ft.position(q)).collect();
            let dev = ruling.points.iter().zip(&image).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            let defect = (polyline_length(&image) - ruling.length).abs();
            if dev >= opts.tol {
                skipped.push(SkippedRuling { node: k, reason: format!("images differ by {dev:e} along the ruling") });
                continue;
            }
            arclength_defect = arclength_defect.max(defect);
            covered[k] = true;
            mark_along(&mut covered, &ruling.params);
            rulings_used += 1;
        }

        // Flat regions: flat components together with reclassified nodes.
        let region: Vec<bool> = (0..n).map(|k| g.active(k) && (ps.flat[k] || reclassified[k])).collect();
        let in_region = |p: Vec2| g.nearest(p).is_some_and(|k| region[k]);
        for k in g.active_indices() {
            if covered[k] || !region[k] {
                continue;
            }
            let p = g.point_at(k);
            let metric = metric_with_christoffel(&f.jet_unchecked(p)?)?;
            for d in 0..opts.chord_directions {
                let theta = std::f64::consts::PI * d as f64 / opts.chord_directions as f64;
                let dir = Vec2::new(theta.cos(), theta.sin());
                let dir = dir / metric.norm(&dir);
                let span = 4.0 * (g.nu.max(g.nv) as f64) * h;
                let mut legs = Vec::with_capacity(2);
                for sign in [1.0, -1.0] {
                    let path = match geodesic(f, p, sign * dir, span, 0.5 * h) {
                        Ok(path) => path,
                        Err(_) => {
                            legs.clear();
                            break;
                        }
                    };
                    let mut pts = vec![p];
                    let mut ended = path.exited;
                    for q in path.uv.iter().skip(1) {
                        pts.push(*q);
                        if !in_region(*q) {
                            ended = true;
                            break;
                        }
                    }
                    if !ended {
                        legs.clear();
                        break;
                    }
                    legs.push(pts);
                }
                if legs.len() != 2 || !legs.iter().all(|l| is_covered(&covered, *l.last().unwrap())) {
                    continue;
                }
                let mut params: Vec<Vec2> = legs[1].iter().rev().copied().collect();
                params.extend(legs[0].iter().skip(1));
                let points: Vec<Vec3> = params.iter().map(|&q| f.position(q)).collect();
                let image: Vec<Vec3> = params.iter().map(|&q| ft.position(q)).collect();
                let dev = points.iter().zip(&image).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
                if dev >= opts.tol {
                    continue;
                }
                arclength_defect = arclength_defect.max((polyline_length(&image) - polyline_length(&points)).abs());
                covered[k] = true;
                chords_used += 1;
                break;
            }
        }

        let after = covered.iter().filter(|&&c| c).count();
        if after == before || iterations >= 16 {
            break;
        }
    }
    let active = g.active_indices().count();
    let count = g.active_indices().filter(|&k| covered[k]).count();
    let max_deviation =
        g.active_indices().filter(|&k| covered[k]).map(|k| deviation(g.point_at(k))).fold(0.0, f64::max);
    Ok(PropagationReport {
        tol: opts.tol,
        active_nodes: active,
        seeded,
        rejected_seeds: rejected,
        covered: count,
        coverage: count as f64 / active.max(1) as f64,
        max_deviation,
        rulings_used,
        rulings_skipped: skipped,
        chords_used,
        reclassified_flat: reclassified.iter().filter(|&&r| r).count(),
        max_arclength_defect: arclength_defect,
        parabolic_compact: ps.compact_in_domain(),
        iterations,
        mask: covered,
    })
}

/// Grid dump of the classification and a coverage mask.
pub fn write_mask_csv<W: Write>(ps: &ParabolicSet, covered: &[bool], mut w: W) -> Result<()> {
    writeln!(w, "i,j,u,v,gauss,parabolic,flat,covered")?;
    for k in ps.grid.active_indices() {
        let (i, j) = ps.grid.coords(k);
        let p = ps.grid.point_at(k);
        writeln!(
            w,
            "{i},{j},{},{},{},{},{},{}",
            p.x, p.y, ps.gauss[k], ps.parabolic[k] as u8, ps.flat[k] as u8, covered[k] as u8
        )?;
    }
    Ok(())
}

/// Domain rim nodes of a grid.
pub fn rim_mask(grid: &NodeGrid) -> Vec<bool> {
    (0..grid.len()).map(|k| grid.is_boundary(k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BentPlane, Cone, Cylinder, Sphere};

    fn grid_of(f: &ParamSurface) -> NodeGrid {
        f.domain().grid()
    }

    #[test]
    fn sphere_has_no_parabolic_points() {
        let f = ParamSurface::analytic(Sphere::new(1.0));
        let ps = parabolic_set(&f, &NodeGrid::square([-1.0, 1.0], [-1.0, 1.0], 21), None, None).unwrap();
        assert_eq!(ps.parabolic_count(), 0);
        assert!(ps.components.is_empty());
    }

    #[test]
    fn cylinder_is_parabolic_but_not_flat() {
        let f = ParamSurface::analytic(Cylinder::new(1.0));
        let ps = parabolic_set(&f, &grid_of(&f), None, None).unwrap();
        assert_eq!(ps.parabolic_count(), ps.grid.len());
        assert_eq!(ps.flat_count(), 0);
        let r = trace_ruling(&f, &ps, Vec2::new(0.3, 0.1), &RulingOptions::default()).unwrap();
        assert!(r.straightness < 1e-10);
        assert_eq!(r.endpoints, [EndpointKind::DomainBoundary; 2]);
        assert!((r.chord_length() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn bent_strip_classification() {
        let f = ParamSurface::analytic(BentPlane::strip());
        let ps = parabolic_set(&f, &grid_of(&f), None, None).unwrap();
        assert_eq!(ps.parabolic_count(), ps.grid.len());
        for k in ps.grid.active_indices() {
            let u = ps.grid.point_at(k).x;
            if u > -ps.r_flat + 1e-9 {
                assert!(!ps.flat[k], "u = {u}");
            } else {
                assert!(ps.flat[k], "u = {u}");
            }
        }
        assert_eq!(ps.components.len(), 1);
        let r = trace_ruling(&f, &ps, Vec2::new(0.5, 0.0), &RulingOptions::default()).unwrap();
        assert!(r.params.iter().all(|p| (p.x - 0.5).abs() < 1e-12));
        assert_eq!(r.endpoints, [EndpointKind::DomainBoundary; 2]);
        assert!(trace_ruling(&f, &ps, Vec2::new(-0.05, 0.0), &RulingOptions::default()).is_err());
    }

    #[test]
    fn cone_rulings_run_through_apex() {
        let f = ParamSurface::analytic(Cone::new(0.5));
        let ps = parabolic_set(&f, &grid_of(&f), None, None).unwrap();
        let r = trace_ruling(&f, &ps, Vec2::new(0.2, 1.0), &RulingOptions::default()).unwrap();
        let axis = r.points[0].normalize();
        for x in &r.points {
            assert!(x.cross(&axis).norm() < 1e-8);
        }
    }

    #[test]
    fn identical_maps_cover_everything() {
        let f = ParamSurface::analytic(BentPlane::strip());
        let ps = parabolic_set(&f, &grid_of(&f), None, None).unwrap();
        let rep = propagate_equality(&f, &f, &ps, &vec![true; ps.grid.len()], &PropagationOptions::default()).unwrap();
        assert_eq!(rep.coverage, 1.0);
        assert!(rep.max_deviation < 1e-12);
    }
}
