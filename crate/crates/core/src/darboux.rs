//! Height functions, the Darboux equation and its linearization, and a
//! finite-difference Dirichlet solver for the linearized operator.
//!
//! For a height function `u = <f, e>` of an immersion with Gauss curvature
//! `K`, the Riemannian Hessian satisfies
//! `det(nabla^2 u) = K det(g) (1 - |nabla u|^2)`. For two such functions on the
//! same metric, with `a = cof(nabla^2 u) + cof(nabla^2 u~)` and
//! `phi = u - u~`, the residuals `R` of that equation obey exactly
//!
//! ```text
//! sum a_ij nabla_ij phi + 2 K det(g) <nabla(u + u~), nabla phi> = 2 (R(u) - R(u~))
//! ```
//!
//! so `phi` solves a linear second-order equation with no zeroth-order term
//! whenever both functions solve the Darboux equation.

use std::io::Write;

use faer::prelude::*;
use faer::sparse::SparseColMat;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::geometry::{
    metric_with_christoffel, second_fundamental_form, Mat2, MetricData, NodeGrid, ParamSurface, Vec2, Vec3,
};

/// Value, gradient and coordinate Hessian of a scalar on a node grid, with
/// the metric and Gauss curvature at every active node.
#[derive(Debug, Clone)]
pub struct HeightField {
    pub direction: Option<Vec3>,
    pub grid: NodeGrid,
    pub u: Vec<f64>,
    pub du: Vec<Vec2>,
    pub ddu: Vec<Mat2>,
    pub metric: Vec<MetricData>,
    pub gauss: Vec<f64>,
}

fn blank_metric() -> MetricData {
    MetricData::from_metric(Mat2::identity()).expect("identity metric")
}

/// `u = <f, e>` with derivatives from the jets of `f`.
pub fn height_field(f: &ParamSurface, e: &Vec3, grid: &NodeGrid) -> Result<HeightField> {
    if (e.norm() - 1.0).abs() > 1e-12 {
        return Err(LabError::InvalidArgument(format!("direction has norm {}", e.norm())));
    }
    let n = grid.len();
    let mut hf = HeightField {
        direction: Some(*e),
        grid: grid.clone(),
        u: vec![f64::NAN; n],
        du: vec![Vec2::zeros(); n],
        ddu: vec![Mat2::zeros(); n],
        metric: vec![blank_metric(); n],
        gauss: vec![f64::NAN; n],
    };
    for k in grid.active_indices() {
        let j = f.jet_unchecked(grid.point_at(k))?;
        hf.u[k] = j.p.dot(e);
        hf.du[k] = Vec2::new(j.f1.dot(e), j.f2.dot(e));
        let m = j.f12.dot(e);
        hf.ddu[k] = Mat2::new(j.f11.dot(e), m, m, j.f22.dot(e));
        hf.metric[k] = metric_with_christoffel(&j)?;
        hf.gauss[k] = second_fundamental_form(&j)?.gauss;
    }
    Ok(hf)
}

impl HeightField {
    /// A field given node-wise by a closure returning `(u, du, ddu)`,
    /// sharing the metric and curvature of `like`.
    pub fn synthetic<F>(like: &HeightField, func: F) -> Self
    where
        F: Fn(Vec2) -> (f64, Vec2, Mat2),
    {
        let mut out = like.clone();
        out.direction = None;
        for k in like.grid.active_indices() {
            let (u, du, ddu) = func(like.grid.point_at(k));
            out.u[k] = u;
            out.du[k] = du;
            out.ddu[k] = ddu;
        }
        out
    }

    /// `self - other` on the same grid and metric.
    pub fn difference(&self, other: &HeightField) -> HeightField {
        let mut out = self.clone();
        out.direction = None;
        for k in self.grid.active_indices() {
            out.u[k] -= other.u[k];
            out.du[k] -= other.du[k];
            out.ddu[k] -= other.ddu[k];
        }
        out
    }

    pub fn negated(&self) -> HeightField {
        let mut out = self.clone();
        out.direction = self.direction.map(|e| -e);
        for k in self.grid.active_indices() {
            out.u[k] = -out.u[k];
            out.du[k] = -out.du[k];
            out.ddu[k] = -out.ddu[k];
        }
        out
    }
}

/// `cof([[a, b], [b, c]]) = [[c, -b], [-b, a]]`.
pub fn cofactor(m: &Mat2) -> Mat2 {
    Mat2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)])
}

/// Riemannian Hessian, gradient and cofactor at every active node.
#[derive(Debug, Clone)]
pub struct HessianField {
    pub hess: Vec<Mat2>,
    /// Contravariant gradient `g^ij u_j`.
    pub grad: Vec<Vec2>,
    pub grad_norm: Vec<f64>,
    pub cof: Vec<Mat2>,
}

fn covariant_hessian(m: &MetricData, du: &Vec2, ddu: &Mat2) -> Mat2 {
    let mut h = *ddu;
    for i in 0..2 {
        for j in 0..2 {
            h[(i, j)] -= m.gamma[0][i][j] * du.x + m.gamma[1][i][j] * du.y;
        }
    }
    // Symmetric by construction up to roundoff; enforce exactly.
    let s = 0.5 * (h[(0, 1)] + h[(1, 0)]);
    h[(0, 1)] = s;
    h[(1, 0)] = s;
    h
}

pub fn riemannian_hessian(hf: &HeightField) -> HessianField {
    let n = hf.grid.len();
    let mut out = HessianField {
        hess: vec![Mat2::zeros(); n],
        grad: vec![Vec2::zeros(); n],
        grad_norm: vec![f64::NAN; n],
        cof: vec![Mat2::zeros(); n],
    };
    for k in hf.grid.active_indices() {
        let m = &hf.metric[k];
        let h = covariant_hessian(m, &hf.du[k], &hf.ddu[k]);
        let grad = m.inv * hf.du[k];
        out.hess[k] = h;
        out.grad[k] = grad;
        out.grad_norm[k] = hf.du[k].dot(&grad).max(0.0).sqrt();
        out.cof[k] = cofactor(&h);
    }
    out
}

/// `det(nabla^2 u) - K det(g) (1 - |nabla u|^2)` at every active node
/// (`NaN` elsewhere).
pub fn darboux_residual(hf: &HeightField, hess: &HessianField) -> Vec<f64> {
    let mut r = vec![f64::NAN; hf.grid.len()];
    for k in hf.grid.active_indices() {
        let g2 = hess.grad_norm[k] * hess.grad_norm[k];
        r[k] = hess.hess[k].determinant() - hf.gauss[k] * hf.metric[k].det * (1.0 - g2);
    }
    r
}

/// Largest absolute value over active nodes.
pub fn max_abs(grid: &NodeGrid, values: &[f64]) -> f64 {
    grid.active_indices().map(|k| values[k].abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct EllipticityMask {
    pub margin: f64,
    /// `|nabla u|_g < 1 - margin`.
    pub mask: Vec<bool>,
    /// `+1` positive definite, `-1` negative definite, `0` otherwise.
    pub definiteness: Vec<i8>,
    /// Common definiteness sign over the elliptic-definite region, if any.
    pub uniform_sign: Option<i8>,
    pub elliptic_count: usize,
    pub elliptic_definite_count: usize,
}

impl EllipticityMask {
    pub fn elliptic_definite(&self) -> Vec<bool> {
        self.mask.iter().zip(&self.definiteness).map(|(&m, &d)| m && d != 0).collect()
    }
}

/// Definiteness of a symmetric 2x2 matrix with a relative threshold.
pub fn definiteness(m: &Mat2) -> i8 {
    let scale = m.abs().max().max(1e-300);
    let det = m.determinant();
    if !(det > 1e-12 * scale * scale) {
        return 0;
    }
    if m[(0, 0)] + m[(1, 1)] > 0.0 {
        1
    } else {
        -1
    }
}

pub fn ellipticity_region(grid: &NodeGrid, hess: &HessianField, margin: f64) -> EllipticityMask {
    let n = grid.len();
    let mut out = EllipticityMask {
        margin,
        mask: vec![false; n],
        definiteness: vec![0; n],
        uniform_sign: None,
        elliptic_count: 0,
        elliptic_definite_count: 0,
    };
    let mut signs = [false; 2];
    for k in grid.active_indices() {
        let d = definiteness(&hess.hess[k]);
        out.definiteness[k] = d;
        if hess.grad_norm[k] < 1.0 - margin {
            out.mask[k] = true;
            out.elliptic_count += 1;
            if d != 0 {
                out.elliptic_definite_count += 1;
                signs[(d > 0) as usize] = true;
            }
        }
    }
    out.uniform_sign = match signs {
        [false, true] => Some(1),
        [true, false] => Some(-1),
        _ => None,
    };
    out
}

/// Coefficients of `L phi = sum a_ij nabla_ij phi + <b, d phi>` on a grid,
/// where `b = 2 K det(g) nabla(u + u~)` is contravariant.
#[derive(Debug, Clone)]
pub struct EllipticOperator {
    pub grid: NodeGrid,
    pub a: Vec<Mat2>,
    pub b: Vec<Vec2>,
    pub c: Vec<f64>,
    pub metric: Vec<MetricData>,
    /// Smallest eigenvalue of the sign-normalized `a`.
    pub lambda_min: Vec<f64>,
    /// `+1` or `-1`: the factor that makes `a` positive at most nodes.
    pub orientation: f64,
    pub lipschitz: f64,
}

fn sym_eigen_min(m: &Mat2) -> f64 {
    let (a, b, c) = (m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
    let mean = 0.5 * (a + c);
    let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    mean - r
}

fn lipschitz_estimate(grid: &NodeGrid, a: &[Mat2], mask: &[bool]) -> f64 {
    let mut lip = 0.0f64;
    for k in grid.active_indices().filter(|&k| mask[k]) {
        for (di, dj) in [(1, 0), (0, 1)] {
            if let Some(q) = grid.offset(k, di, dj) {
                if grid.active(q) && mask[q] {
                    let d = (a[k] - a[q]).abs().max();
                    let h = if di == 1 { grid.spacing[0] } else { grid.spacing[1] };
                    lip = lip.max(d / h);
                }
            }
        }
    }
    lip
}

/// Linearized coefficients for the pair `(u, u~)` on a shared metric.
pub fn linearized_coeffs(u: &HeightField, hu: &HessianField, ut: &HeightField, hut: &HessianField) -> Result<EllipticOperator> {
    if u.grid != ut.grid {
        return Err(LabError::InvalidArgument("height fields live on different grids".into()));
    }
    let grid = u.grid.clone();
    let n = grid.len();
    let mut a = vec![Mat2::zeros(); n];
    let mut b = vec![Vec2::zeros(); n];
    let mut trace_sum = 0.0;
    for k in grid.active_indices() {
        a[k] = hu.cof[k] + hut.cof[k];
        b[k] = 2.0 * u.gauss[k] * u.metric[k].det * (hu.grad[k] + hut.grad[k]);
        trace_sum += a[k].trace();
    }
    let orientation = if trace_sum < 0.0 { -1.0 } else { 1.0 };
    let mut lambda_min = vec![f64::NAN; n];
    for k in grid.active_indices() {
        lambda_min[k] = sym_eigen_min(&(a[k] * orientation));
    }
    let lipschitz = lipschitz_estimate(&grid, &a, &grid.mask);
    Ok(EllipticOperator { grid, a, b, c: vec![0.0; n], metric: u.metric.clone(), lambda_min, orientation, lipschitz })
}

impl EllipticOperator {
    /// Constant-coefficient operator `a`, `b` on a flat metric.
    pub fn constant(grid: &NodeGrid, a: Mat2, b: Vec2) -> Self {
        let n = grid.len();
        let metric = vec![blank_metric().with_derivatives([Mat2::zeros(); 2]); n];
        let lambda_min = vec![sym_eigen_min(&a); n];
        Self { grid: grid.clone(), a: vec![a; n], b: vec![b; n], c: vec![0.0; n], metric, lambda_min, orientation: 1.0, lipschitz: 0.0 }
    }

    /// `L phi` at every active node from the exact jets of `phi`.
    pub fn apply(&self, phi: &HeightField) -> Vec<f64> {
        let mut out = vec![f64::NAN; self.grid.len()];
        for k in self.grid.active_indices() {
            let h = covariant_hessian(&self.metric[k], &phi.du[k], &phi.ddu[k]);
            let second: f64 = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| self.a[k][(i, j)] * h[(i, j)]).sum();
            out[k] = second + self.b[k].dot(&phi.du[k]) + self.c[k] * phi.u[k];
        }
        out
    }

    /// Coordinate-form first-order coefficient `b_k - sum a_ij Gamma^k_ij`.
    fn beta(&self, k: usize) -> Vec2 {
        let m = &self.metric[k];
        let mut beta = self.b[k];
        for q in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    beta[q] -= self.a[k][(i, j)] * m.gamma[q][i][j];
                }
            }
        }
        beta
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "i,j,u,v,a11,a12,a22,b1,b2,lambda_min")?;
        for k in self.grid.active_indices() {
            let (i, j) = self.grid.coords(k);
            let p = self.grid.point_at(k);
            let a = self.a[k];
            writeln!(
                w,
                "{i},{j},{},{},{},{},{},{},{},{}",
                p.x, p.y, a[(0, 0)], a[(0, 1)], a[(1, 1)], self.b[k].x, self.b[k].y, self.lambda_min[k]
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EllipticityCertificate {
    pub nodes: usize,
    pub lambda_min: f64,
    pub lipschitz: f64,
    pub b_max: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Ellipticity bounds over the active nodes of `subdomain`.
pub fn uniform_ellipticity_check(op: &EllipticOperator, subdomain: &[bool], threshold: f64) -> EllipticityCertificate {
    let nodes: Vec<usize> = op.grid.active_indices().filter(|&k| subdomain[k]).collect();
    let lambda_min = nodes.iter().map(|&k| op.lambda_min[k]).fold(f64::INFINITY, f64::min);
    let b_max = nodes.iter().map(|&k| op.b[k].amax()).fold(0.0, f64::max);
    let lipschitz = lipschitz_estimate(&op.grid, &op.a, subdomain);
    let lambda_min = if nodes.is_empty() { f64::NAN } else { lambda_min };
    EllipticityCertificate { nodes: nodes.len(), lambda_min, lipschitz, b_max, threshold, pass: lambda_min > threshold }
}

/// Nodes of `mask` whose eight neighbours all lie in `mask`.
pub fn interior_of(grid: &NodeGrid, mask: &[bool]) -> Vec<bool> {
    let mut out = vec![false; grid.len()];
    for k in grid.active_indices().filter(|&k| mask[k]) {
        out[k] = (-1..=1).all(|di| {
            (-1..=1).all(|dj| grid.offset(k, di, dj).is_some_and(|q| grid.active(q) && mask[q]))
        });
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct DirichletSolution {
    #[serde(skip)]
    pub phi: Vec<f64>,
    #[serde(skip)]
    pub interior: Vec<bool>,
    pub unknowns: usize,
    /// `max |A x - r| / max(1, max |r|)`.
    pub residual: f64,
    pub positive_type: bool,
    /// Interior extremes within the boundary extremes.
    pub max_principle: bool,
    pub warnings: Vec<String>,
}

/// Solves `L phi = 0` on the interior of `mask` with `phi = boundary` on
/// the rest of `mask`. The mixed derivative uses the diagonal pair matching
/// the sign of `a12`, which keeps the stencil of positive type whenever
/// `|a12| / (hu hv) <= min(a11 / hu^2, a22 / hv^2)` and first-order terms
/// are resolved.
pub fn dirichlet_solve(op: &EllipticOperator, mask: &[bool], boundary: &[f64]) -> Result<DirichletSolution> {
    let grid = &op.grid;
    let interior = interior_of(grid, mask);
    let mut id = vec![usize::MAX; grid.len()];
    let mut count = 0;
    for k in 0..grid.len() {
        if interior[k] {
            id[k] = count;
            count += 1;
        }
    }
    if count == 0 {
        return Err(LabError::SingularSystem("no interior unknowns".into()));
    }
    let (hu, hv) = (grid.spacing[0], grid.spacing[1]);
    let mut trip = Vec::with_capacity(count * 9);
    let mut rhs = vec![0.0; count];
    let mut positive = true;
    let mut worst_violation = 0.0f64;
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(count);
    for k in 0..grid.len() {
        if !interior[k] {
            continue;
        }
        let s = op.orientation;
        let a = op.a[k] * s;
        let beta = op.beta(k) * s;
        let (a11, a12, a22) = (a[(0, 0)], 0.5 * (a[(0, 1)] + a[(1, 0)]), a[(1, 1)]);
        let m = a12 / (hu * hv);
        let diag = if a12 >= 0.0 { [(1, 1), (-1, -1)] } else { [(1, -1), (-1, 1)] };
        let mut w = vec![
            ((1, 0), a11 / (hu * hu) - m.abs() + beta.x / (2.0 * hu)),
            ((-1, 0), a11 / (hu * hu) - m.abs() - beta.x / (2.0 * hu)),
            ((0, 1), a22 / (hv * hv) - m.abs() + beta.y / (2.0 * hv)),
            ((0, -1), a22 / (hv * hv) - m.abs() - beta.y / (2.0 * hv)),
            (diag[0], m.abs()),
            (diag[1], m.abs()),
        ];
        let center = -2.0 * a11 / (hu * hu) - 2.0 * a22 / (hv * hv) + 2.0 * m.abs() + op.c[k] * s;
        w.push(((0, 0), center));
        let mut row = Vec::with_capacity(7);
        for ((di, dj), wt) in w {
            if (di, dj) != (0, 0) && wt < 0.0 {
                positive = false;
                worst_violation = worst_violation.min(wt);
            }
            let q = grid.offset(k, di, dj).expect("interior node has all neighbours");
            if interior[q] {
                row.push((id[q], wt));
            } else {
                rhs[id[k]] -= wt * boundary[q];
            }
        }
        for &(c, wt) in &row {
            trip.push((id[k], c, wt));
        }
        rows.push(row);
    }
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(count, count, &trip)
        .map_err(|e| LabError::SingularSystem(format!("assembly failed: {e:?}")))?;
    let lu = mat.sp_lu().map_err(|e| LabError::SingularSystem(format!("factorization failed: {e:?}")))?;
    let b = faer::Mat::<f64>::from_fn(count, 1, |i, _| rhs[i]);
    let x = lu.solve(&b);
    let sol: Vec<f64> = (0..count).map(|i| x.read(i, 0)).collect();
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(LabError::SingularSystem("solution is not finite".into()));
    }
    let mut residual = 0.0f64;
    for (i, row) in rows.iter().enumerate() {
        let lhs: f64 = row.iter().map(|&(c, wt)| wt * sol[c]).sum();
        residual = residual.max((lhs - rhs[i]).abs());
    }
    let rscale = rhs.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut phi = vec![f64::NAN; grid.len()];
    let (mut bmin, mut bmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut imin, mut imax) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in grid.active_indices().filter(|&k| mask[k]) {
        if interior[k] {
            phi[k] = sol[id[k]];
            imin = imin.min(phi[k]);
            imax = imax.max(phi[k]);
        } else {
            phi[k] = boundary[k];
            bmin = bmin.min(phi[k]);
            bmax = bmax.max(phi[k]);
        }
    }
    let slack = 1e-10 * (1.0 + bmax.abs().max(bmin.abs()));
    let max_principle = imax <= bmax + slack && imin >= bmin - slack;
    let mut warnings = Vec::new();
    if !positive {
        warnings.push(format!("stencil is not of positive type (most negative neighbour weight {worst_violation:e})"));
    }
    Ok(DirichletSolution { phi, interior, unknowns: count, residual: residual / rscale, positive_type: positive, max_principle, warnings })
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuationReport {
    pub seed_max_phi: f64,
    pub operator_residual: f64,
    pub reproduce_error: f64,
    pub zero_boundary_max: f64,
    pub certificate: EllipticityCertificate,
    pub consistent: bool,
    pub note: &'static str,
}

pub const CONTINUATION_NOTE: &str = "consistency check only: unique continuation for the linearized equation is \
assumed as a cited theorem and is not certified by this finite-grid computation";

/// Checks that `phi = u - u~` is consistent with vanishing identically:
/// it vanishes on the seed, solves the linearized equation, and is the
/// unique discrete solution for its own boundary data.
pub fn continuation_verify(
    u: &HeightField,
    ut: &HeightField,
    seed: &[bool],
    working: &[bool],
    tol: f64,
    lambda_threshold: f64,
) -> Result<ContinuationReport> {
    let (hu, hut) = (riemannian_hessian(u), riemannian_hessian(ut));
    let op = linearized_coeffs(u, &hu, ut, &hut)?;
    let phi = u.difference(ut);
    let seed_max_phi =
        u.grid.active_indices().filter(|&k| seed[k]).map(|k| phi.u[k].abs()).fold(0.0, f64::max);
    let seed_cert = uniform_ellipticity_check(&op, seed, lambda_threshold);
    if !seed_cert.pass {
        return Err(LabError::SeedNotElliptic(format!(
            "minimum eigenvalue {} on the seed is below {lambda_threshold}",
            seed_cert.lambda_min
        )));
    }
    let certificate = uniform_ellipticity_check(&op, working, lambda_threshold);
    let lphi = op.apply(&phi);
    let operator_residual =
        u.grid.active_indices().filter(|&k| working[k]).map(|k| lphi[k].abs()).fold(0.0, f64::max);
    let own = dirichlet_solve(&op, working, &phi.u)?;
    let reproduce_error = own
        .interior
        .iter()
        .enumerate()
        .filter(|(_, &i)| i)
        .map(|(k, _)| (own.phi[k] - phi.u[k]).abs())
        .fold(0.0, f64::max);
    let zero = dirichlet_solve(&op, working, &vec![0.0; u.grid.len()])?;
    let zero_boundary_max =
        zero.interior.iter().enumerate().filter(|(_, &i)| i).map(|(k, _)| zero.phi[k].abs()).fold(0.0, f64::max);
    let consistent = seed_max_phi < tol
        && operator_residual < tol
        && reproduce_error < tol
        && zero_boundary_max < 1e-10
        && certificate.pass;
    Ok(ContinuationReport {
        seed_max_phi,
        operator_residual,
        reproduce_error,
        zero_boundary_max,
        certificate,
        consistent,
        note: CONTINUATION_NOTE,
    })
}

/// `n` nearly uniform unit vectors on the sphere (Fibonacci lattice).
pub fn fibonacci_directions(n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            Vec3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

/// Rank of a set of directions (up to 3) by Gram-Schmidt with tolerance.
pub fn direction_rank(dirs: &[Vec3]) -> usize {
    let mut basis: Vec<Vec3> = Vec::new();
    for d in dirs {
        let mut v = *d;
        for b in &basis {
            v -= b * b.dot(&v);
        }
        if v.norm() > 1e-6 {
            basis.push(v.normalize());
            if basis.len() == 3 {
                break;
            }
        }
    }
    basis.len()
}
