use serde::{Deserialize, Serialize};

use super::Vec2;
use crate::error::{LabError, Result};

const EDGE_SLACK: f64 = 1e-12;

/// Shape of a parameter patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainKind {
    Rectangle { u: [f64; 2], v: [f64; 2] },
    Disk { center: [f64; 2], radius: f64 },
    /// Half of a disk lying to the right of the vertical line through its
    /// center (`u >= center.u`).
    HalfDisk { center: [f64; 2], radius: f64 },
}

/// Parameter patch together with a sampling spacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainPatch {
    pub kind: DomainKind,
    pub spacing: f64,
}

impl DomainPatch {
    pub fn new(kind: DomainKind, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(LabError::InvalidArgument(format!("grid spacing must be positive, got {spacing}")));
        }
        let nonempty = match &kind {
            DomainKind::Rectangle { u, v } => u[1] > u[0] && v[1] > v[0],
            DomainKind::Disk { radius, .. } | DomainKind::HalfDisk { radius, .. } => *radius > 0.0,
        };
        if !nonempty {
            return Err(LabError::InvalidArgument(format!("domain {kind:?} is empty")));
        }
        Ok(Self { kind, spacing })
    }

    pub fn rectangle(u: [f64; 2], v: [f64; 2], spacing: f64) -> Result<Self> {
        Self::new(DomainKind::Rectangle { u, v }, spacing)
    }

    pub fn disk(center: [f64; 2], radius: f64, spacing: f64) -> Result<Self> {
        Self::new(DomainKind::Disk { center, radius }, spacing)
    }

    pub fn half_disk(center: [f64; 2], radius: f64, spacing: f64) -> Result<Self> {
        Self::new(DomainKind::HalfDisk { center, radius }, spacing)
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            DomainKind::Rectangle { .. } => "rectangle",
            DomainKind::Disk { .. } => "disk",
            DomainKind::HalfDisk { .. } => "half-disk",
        }
    }

    /// Closed membership test with a tiny slack at the edge.
    pub fn contains(&self, p: Vec2) -> bool {
        self.contains_with_slack(p, EDGE_SLACK)
    }

    pub fn contains_with_slack(&self, p: Vec2, slack: f64) -> bool {
        match &self.kind {
            DomainKind::Rectangle { u, v } => {
                p.x >= u[0] - slack && p.x <= u[1] + slack && p.y >= v[0] - slack && p.y <= v[1] + slack
            }
            DomainKind::Disk { center, radius } => {
                let d = p - Vec2::new(center[0], center[1]);
                d.norm() <= radius + slack
            }
            DomainKind::HalfDisk { center, radius } => {
                let d = p - Vec2::new(center[0], center[1]);
                d.norm() <= radius + slack && d.x >= -slack
            }
        }
    }

    pub fn check(&self, p: Vec2) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(LabError::OutOfDomain { u: p.x, v: p.y, domain: self.label() })
        }
    }

    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        match &self.kind {
            DomainKind::Rectangle { u, v } => (*u, *v),
            DomainKind::Disk { center, radius } => (
                [center[0] - radius, center[0] + radius],
                [center[1] - radius, center[1] + radius],
            ),
            DomainKind::HalfDisk { center, radius } => {
                ([center[0], center[0] + radius], [center[1] - radius, center[1] + radius])
            }
        }
    }

    /// Node grid covering the bounding box at the patch spacing; nodes
    /// outside the patch are masked out.
    pub fn grid(&self) -> NodeGrid {
        let (u, v) = self.bounds();
        let nu = ((u[1] - u[0]) / self.spacing).round() as usize + 1;
        let nv = ((v[1] - v[0]) / self.spacing).round() as usize + 1;
        let hu = (u[1] - u[0]) / (nu - 1).max(1) as f64;
        let hv = (v[1] - v[0]) / (nv - 1).max(1) as f64;
        let mut grid = NodeGrid::new([u[0], v[0]], [hu, hv], nu, nv);
        for j in 0..nv {
            for i in 0..nu {
                let idx = grid.index(i, j);
                grid.mask[idx] = self.contains(grid.point(i, j));
            }
        }
        grid
    }
}

/// Rectangular lattice of parameter nodes with an activity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeGrid {
    pub origin: [f64; 2],
    pub spacing: [f64; 2],
    pub nu: usize,
    pub nv: usize,
    pub mask: Vec<bool>,
}

impl NodeGrid {
    pub fn new(origin: [f64; 2], spacing: [f64; 2], nu: usize, nv: usize) -> Self {
        Self { origin, spacing, nu, nv, mask: vec![true; nu * nv] }
    }

    /// `n x n` nodes spanning the closed rectangle.
    pub fn square(u: [f64; 2], v: [f64; 2], n: usize) -> Self {
        let n = n.max(2);
        let hu = (u[1] - u[0]) / (n - 1) as f64;
        let hv = (v[1] - v[0]) / (n - 1) as f64;
        Self::new([u[0], v[0]], [hu, hv], n, n)
    }

    pub fn len(&self) -> usize {
        self.nu * self.nv
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nu + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nu, idx / self.nu)
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(self.origin[0] + i as f64 * self.spacing[0], self.origin[1] + j as f64 * self.spacing[1])
    }

    pub fn point_at(&self, idx: usize) -> Vec2 {
        let (i, j) = self.coords(idx);
        self.point(i, j)
    }

    pub fn active(&self, idx: usize) -> bool {
        self.mask[idx]
    }

    pub fn active_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&k| self.mask[k])
    }

    /// Nearest node to a parameter point, if it falls inside the lattice.
    pub fn nearest(&self, p: Vec2) -> Option<usize> {
        let fi = ((p.x - self.origin[0]) / self.spacing[0]).round();
        let fj = ((p.y - self.origin[1]) / self.spacing[1]).round();
        if fi < 0.0 || fj < 0.0 || fi >= self.nu as f64 || fj >= self.nv as f64 {
            return None;
        }
        Some(self.index(fi as usize, fj as usize))
    }

    /// Four-neighbourhood of a node (active or not).
    pub fn neighbors4(&self, idx: usize) -> impl Iterator<Item = usize> {
        let (i, j) = self.coords(idx);
        let (nu, nv) = (self.nu, self.nv);
        let mut out = [usize::MAX; 4];
        if i > 0 {
            out[0] = idx - 1;
        }
        if i + 1 < nu {
            out[1] = idx + 1;
        }
        if j > 0 {
            out[2] = idx - nu;
        }
        if j + 1 < nv {
            out[3] = idx + nu;
        }
        out.into_iter().filter(|&k| k != usize::MAX)
    }

    /// Node at lattice offset `(di, dj)` from `idx`, if inside the lattice.
    pub fn offset(&self, idx: usize, di: isize, dj: isize) -> Option<usize> {
        let (i, j) = self.coords(idx);
        let (a, b) = (i as isize + di, j as isize + dj);
        if a < 0 || b < 0 || a >= self.nu as isize || b >= self.nv as isize {
            return None;
        }
        Some(self.index(a as usize, b as usize))
    }

    /// Active node on the lattice rim or next to an inactive node.
    pub fn is_boundary(&self, idx: usize) -> bool {
        if !self.mask[idx] {
            return false;
        }
        let (i, j) = self.coords(idx);
        if i == 0 || j == 0 || i + 1 == self.nu || j + 1 == self.nv {
            return true;
        }
        self.neighbors4(idx).any(|k| !self.mask[k])
    }

    /// Nodes whose parameter distance to `center` is at most `radius`.
    pub fn ball(&self, center: Vec2, radius: f64) -> Vec<usize> {
        let ri = (radius / self.spacing[0]).ceil() as isize + 1;
        let rj = (radius / self.spacing[1]).ceil() as isize + 1;
        let ci = ((center.x - self.origin[0]) / self.spacing[0]).round() as isize;
        let cj = ((center.y - self.origin[1]) / self.spacing[1]).round() as isize;
        let mut out = Vec::new();
        for j in (cj - rj)..=(cj + rj) {
            if j < 0 || j >= self.nv as isize {
                continue;
            }
            for i in (ci - ri)..=(ci + ri) {
                if i < 0 || i >= self.nu as isize {
                    continue;
                }
                let idx = self.index(i as usize, j as usize);
                if self.mask[idx] && (self.point(i as usize, j as usize) - center).norm() <= radius + 1e-12 {
                    out.push(idx);
                }
            }
        }
        out
    }
}
