use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::io::Write;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::geometry::{second_fundamental_form, CurveOnSurface, NodeGrid, ParamSurface, Vec2};

#[derive(Debug, Clone, Serialize)]
pub struct FailedBall {
    pub center: [f64; 2],
    pub worst_node: [f64; 2],
    pub deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub delta: f64,
    pub tol: f64,
    pub component_nodes: usize,
    pub verified_nodes: usize,
    pub coverage: f64,
    pub max_deviation: f64,
    pub balls_accepted: usize,
    pub balls_rejected: usize,
    pub first_failure: Option<FailedBall>,
    pub seed_ok: bool,
    #[serde(skip)]
    pub verified: Vec<bool>,
    #[serde(skip)]
    pub deviation: Vec<f64>,
}

impl GrowthReport {
    pub fn write_csv<W: Write>(&self, grid: &NodeGrid, mut w: W) -> Result<()> {
        writeln!(w, "i,j,u,v,deviation,verified")?;
        for k in grid.active_indices() {
            let (i, j) = grid.coords(k);
            let p = grid.point_at(k);
            writeln!(w, "{i},{j},{},{},{},{}", p.x, p.y, self.deviation[k], self.verified[k] as u8)?;
        }
        Ok(())
    }
}

fn key(d: f64) -> u64 {
    d.max(0.0).to_bits()
}

/// Ball-chain growth of the agreement set `|f - f~| < tol` outwards from
/// the curve. A ball of radius `delta` is accepted only if every grid node
/// in it agrees; accepted balls offer their nodes as new centres. Centres
/// are processed by increasing distance from the curve, ties by node
/// index, so the outcome is reproducible. Rejected balls are recorded and
/// growth continues from the remaining frontier.
pub fn region_grow(
    f: &ParamSurface,
    ft: &ParamSurface,
    curve: &CurveOnSurface,
    grid: &NodeGrid,
    delta: f64,
    tol: f64,
) -> Result<GrowthReport> {
    if !(delta > 0.0 && tol > 0.0) {
        return Err(LabError::InvalidArgument(format!("delta {delta} and tol {tol} must be positive")));
    }
    let n = grid.len();
    let mut deviation = vec![f64::NAN; n];
    for k in grid.active_indices() {
        let p = grid.point_at(k);
        deviation[k] = (f.position(p) - ft.position(p)).norm();
    }
    let h = grid.spacing[0].min(grid.spacing[1]);
    let samples = ((curve.length_parameter() / (0.5 * h)).ceil() as usize).max(8);
    let pts: Vec<Vec2> = curve.sample(samples)?.into_iter().map(|c| c.uv).collect();
    let dist_to_curve = |p: Vec2| pts.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min);
    let mut seeds: Vec<usize> = pts.iter().filter_map(|q| grid.nearest(*q)).filter(|&k| grid.active(k)).collect();
    seeds.sort_unstable();
    seeds.dedup();
    if seeds.is_empty() {
        return Err(LabError::InvalidArgument("curve misses the grid".into()));
    }

    // Connected component of the active grid containing the curve.
    let mut component = vec![false; n];
    let mut queue: VecDeque<usize> = seeds.iter().copied().collect();
    for &s in &seeds {
        component[s] = true;
    }
    while let Some(k) = queue.pop_front() {
        for q in grid.neighbors4(k) {
            if grid.active(q) && !component[q] {
                component[q] = true;
                queue.push_back(q);
            }
        }
    }
    let comp_count = component.iter().filter(|&&c| c).count();

    let mut verified = vec![false; n];
    let mut is_center = vec![false; n];
    let mut heap = BinaryHeap::new();
    let mut accepted = 0;
    let mut rejected = 0;
    let mut first_failure = None;
    let check_ball = |c: usize| -> (bool, usize, f64) {
        let ball = grid.ball(grid.point_at(c), delta);
        let mut worst = (c, 0.0f64);
        for &q in &ball {
            if component[q] && deviation[q] >= worst.1 {
                worst = (q, deviation[q]);
            }
        }
        (worst.1 < tol, worst.0, worst.1)
    };
    let mut seed_ok = true;
    for &s in &seeds {
        let (ok, _, _) = check_ball(s);
        if !ok {
            seed_ok = false;
        }
        is_center[s] = true;
        heap.push(Reverse((key(dist_to_curve(grid.point_at(s))), s)));
    }
    while let Some(Reverse((_, c))) = heap.pop() {
        let (ok, worst, dev) = check_ball(c);
        if !ok {
            rejected += 1;
            if first_failure.is_none() {
                let (pc, pw) = (grid.point_at(c), grid.point_at(worst));
                first_failure = Some(FailedBall { center: [pc.x, pc.y], worst_node: [pw.x, pw.y], deviation: dev });
            }
            continue;
        }
        accepted += 1;
        for q in grid.ball(grid.point_at(c), delta) {
            if !component[q] {
                continue;
            }
            verified[q] = true;
            if !is_center[q] {
                is_center[q] = true;
                heap.push(Reverse((key(dist_to_curve(grid.point_at(q))), q)));
            }
        }
    }
    let verified_nodes = verified.iter().filter(|&&v| v).count();
    let max_deviation = (0..n).filter(|&k| verified[k]).map(|k| deviation[k]).fold(0.0, f64::max);
    Ok(GrowthReport {
        delta,
        tol,
        component_nodes: comp_count,
        verified_nodes,
        coverage: verified_nodes as f64 / comp_count as f64,
        max_deviation,
        balls_accepted: accepted,
        balls_rejected: rejected,
        first_failure,
        seed_ok,
        verified,
        deviation,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MatchReport {
    pub point: [f64; 2],
    /// `|k2 - k~2|` at the point, principal curvatures ordered by magnitude.
    pub gap_large: f64,
    pub gap_small: f64,
    pub tol: f64,
    pub matched: bool,
    /// Nodes where `k2 - k~2` is positive, negative, or within `tol`.
    pub sign_counts: [usize; 3],
    pub note: &'static str,
}

pub const MATCH_NOTE: &str = "the existence of a matching point is guaranteed only on closed surfaces; \
on a patch the search may legitimately find none";

fn ordered_curvatures(f: &ParamSurface, p: Vec2) -> Result<(f64, f64)> {
    let sh = second_fundamental_form(&f.jet_unchecked(p)?)?;
    let (a, b) = (sh.k1.abs(), sh.k2.abs());
    Ok((a.min(b), a.max(b)))
}

/// Grid point minimizing the gap between the larger principal curvatures.
pub fn principal_match_search(f: &ParamSurface, ft: &ParamSurface, grid: &NodeGrid, tol: f64) -> Result<MatchReport> {
    let mut best: Option<(f64, f64, usize)> = None;
    let mut counts = [0usize; 3];
    for k in grid.active_indices() {
        let p = grid.point_at(k);
        let (s, l) = ordered_curvatures(f, p)?;
        let (st, lt) = ordered_curvatures(ft, p)?;
        let d = l - lt;
        counts[if d.abs() <= tol { 2 } else if d > 0.0 { 0 } else { 1 }] += 1;
        if best.map_or(true, |b| d.abs() < b.0) {
            best = Some((d.abs(), (s - st).abs(), k));
        }
    }
    let (gap_large, gap_small, k) = best.ok_or_else(|| LabError::InvalidArgument("empty grid".into()))?;
    let p = grid.point_at(k);
    Ok(MatchReport {
        point: [p.x, p.y],
        gap_large,
        gap_small,
        tol,
        matched: gap_large < tol,
        sign_counts: counts,
        note: MATCH_NOTE,
    })
}
