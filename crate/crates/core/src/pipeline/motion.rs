use nalgebra::{Matrix3, UnitQuaternion, Vector4, SVD};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::{first_fundamental_form, second_fundamental_form, Jet2, Mat3, ParamSurface, Vec3};

/// Proper rigid motion `x -> R x + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidMotion {
    pub rotation: Mat3,
    pub translation: Vec3,
}

fn orthogonality_defect(r: &Mat3) -> f64 {
    (r.transpose() * r - Mat3::identity()).abs().max()
}

impl RigidMotion {
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self> {
        let defect = orthogonality_defect(&rotation);
        if defect > 1e-12 || rotation.determinant() < 0.0 {
            return Err(LabError::InvalidArgument(format!(
                "not a proper rotation (orthogonality defect {defect:e}, det {})",
                rotation.determinant()
            )));
        }
        Ok(Self { rotation, translation })
    }

    pub fn identity() -> Self {
        Self { rotation: Mat3::identity(), translation: Vec3::zeros() }
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64, translation: Vec3) -> Result<Self> {
        if axis.norm() == 0.0 {
            return Err(LabError::InvalidArgument("rotation axis is zero".into()));
        }
        let axis = nalgebra::Unit::new_normalize(axis);
        let r = nalgebra::Rotation3::from_axis_angle(&axis, angle);
        Ok(Self { rotation: *r.matrix(), translation })
    }

    /// Uniformly distributed rotation and a translation with standard
    /// normal components.
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let q: Vector4<f64> = Vector4::from_fn(|_, _| rng.sample(StandardNormal));
        let q = UnitQuaternion::from_quaternion(nalgebra::Quaternion::from(q));
        let translation = Vec3::from_fn(|_, _| rng.sample(StandardNormal));
        Self { rotation: *q.to_rotation_matrix().matrix(), translation }
    }

    pub fn apply(&self, x: &Vec3) -> Vec3 {
        self.rotation * x + self.translation
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self { rotation: rt, translation: -(rt * self.translation) }
    }

    /// `self o other`.
    pub fn compose(&self, other: &RigidMotion) -> Self {
        Self { rotation: self.rotation * other.rotation, translation: self.rotation * other.translation + self.translation }
    }

    /// Frobenius distance of rotations and Euclidean distance of
    /// translations.
    pub fn distance(&self, other: &RigidMotion) -> (f64, f64) {
        ((self.rotation - other.rotation).norm(), (self.translation - other.translation).norm())
    }

    /// `rho o s` for a surface `s`.
    pub fn surface(&self, s: &ParamSurface) -> ParamSurface {
        s.transformed(self.rotation, self.translation)
    }
}

/// Nearest proper rotation to `m` in the Frobenius norm.
pub fn nearest_rotation(m: &Mat3) -> Mat3 {
    let svd = SVD::new(*m, true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let d = (u * vt).determinant().signum();
    u * Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, d)) * vt
}

/// Least-squares proper motion taking `src[i]` to `dst[i]`.
pub fn kabsch(src: &[Vec3], dst: &[Vec3]) -> Result<RigidMotion> {
    if src.len() != dst.len() || src.len() < 3 {
        return Err(LabError::InvalidArgument(format!("kabsch needs matching sets of at least 3 points, got {} and {}", src.len(), dst.len())));
    }
    let n = src.len() as f64;
    let cs = src.iter().sum::<Vec3>() / n;
    let cd = dst.iter().sum::<Vec3>() / n;
    let mut h = Mat3::zeros();
    for (a, b) in src.iter().zip(dst) {
        h += (b - cd) * (a - cs).transpose();
    }
    let r = nearest_rotation(&h);
    Ok(RigidMotion { rotation: r, translation: cd - r * cs })
}

/// Root-mean-square residual of a fitted motion on point pairs.
pub fn fit_residual(m: &RigidMotion, src: &[Vec3], dst: &[Vec3]) -> f64 {
    let ss: f64 = src.iter().zip(dst).map(|(a, b)| (m.apply(a) - b).norm_squared()).sum();
    (ss / src.len().max(1) as f64).sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct JetFit {
    pub motion: RigidMotion,
    /// Largest deviation of the mapped first-order jet.
    pub first_order_residual: f64,
    /// Largest deviation of the mapped second partials.
    pub second_order_residual: f64,
    /// `<l, l~>_g`: positive when the second forms agree in sign.
    pub curvature_product: f64,
}

/// The motion `rho` with `rho o f~ = f` to first order at the point of the
/// two jets: it maps the frame `(f~_1, f~_2, n~)` to `(f_1, f_2, n)`.
/// Second fundamental forms of opposite sign would need a reflection, which
/// is reported as an obstruction.
pub fn fit_rigid_motion_jet(jet_f: &Jet2, jet_ft: &Jet2) -> Result<JetFit> {
    let (g, gt) = (first_fundamental_form(jet_f)?, first_fundamental_form(jet_ft)?);
    let mismatch = (g.g - gt.g).abs().max();
    if mismatch > 1e-8 {
        return Err(LabError::MetricMismatch(mismatch));
    }
    let (sh, sht) = (second_fundamental_form(jet_f)?, second_fundamental_form(jet_ft)?);
    let inv = g.inv;
    let product = (inv * sh.l * inv * sht.l).trace();
    let scale = (inv * sh.l * inv * sh.l).trace().max((inv * sht.l * inv * sht.l).trace());
    if product < -1e-8 * scale.max(1e-300) && scale > 1e-16 {
        return Err(LabError::OrientationObstruction(product));
    }
    let frame = Mat3::from_columns(&[jet_f.f1, jet_f.f2, sh.n]);
    let frame_t = Mat3::from_columns(&[jet_ft.f1, jet_ft.f2, sht.n]);
    let inv_t = frame_t
        .try_inverse()
        .ok_or_else(|| LabError::ImmersionFailure { u: f64::NAN, v: f64::NAN, detail: "singular frame".into() })?;
    let rotation = nearest_rotation(&(frame * inv_t));
    let motion = RigidMotion { rotation, translation: jet_f.p - rotation * jet_ft.p };
    let mapped = jet_ft.map_affine(&motion.rotation, &motion.translation);
    let first = [(mapped.p - jet_f.p).norm(), (mapped.f1 - jet_f.f1).norm(), (mapped.f2 - jet_f.f2).norm()]
        .into_iter()
        .fold(0.0, f64::max);
    let second = [(mapped.f11 - jet_f.f11).norm(), (mapped.f12 - jet_f.f12).norm(), (mapped.f22 - jet_f.f22).norm()]
        .into_iter()
        .fold(0.0, f64::max);
    Ok(JetFit { motion, first_order_residual: first, second_order_residual: second, curvature_product: product })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Sphere, Vec2};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_motions_are_proper() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let m = RigidMotion::random(&mut rng);
            assert!(RigidMotion::new(m.rotation, m.translation).is_ok());
            let id = m.compose(&m.inverse());
            let (dr, dt) = id.distance(&RigidMotion::identity());
            assert!(dr < 1e-14 && dt < 1e-14);
        }
    }

    #[test]
    fn kabsch_recovers_motion() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = RigidMotion::random(&mut rng);
        let src: Vec<Vec3> = (0..10).map(|i| Vec3::new(i as f64, (i * i) as f64 * 0.1, (i as f64).sin())).collect();
        let dst: Vec<Vec3> = src.iter().map(|x| m.apply(x)).collect();
        let fit = kabsch(&src, &dst).unwrap();
        let (dr, dt) = fit.distance(&m);
        assert!(dr < 1e-12 && dt < 1e-12);
        assert!(fit_residual(&fit, &src, &dst) < 1e-12);
    }

    #[test]
    fn jet_fit_on_sphere() {
        let f = ParamSurface::analytic(Sphere::new(1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho0 = RigidMotion::random(&mut rng);
        let ft = rho0.surface(&f);
        let p = Vec2::new(0.3, -0.2);
        let fit = fit_rigid_motion_jet(&f.jet(p).unwrap(), &ft.jet(p).unwrap()).unwrap();
        let (dr, dt) = fit.motion.distance(&rho0.inverse());
        assert!(dr < 1e-10 && dt < 1e-10);
        assert!(fit.first_order_residual < 1e-12 && fit.second_order_residual < 1e-12);
        let same = fit_rigid_motion_jet(&f.jet(p).unwrap(), &f.jet(p).unwrap()).unwrap();
        assert!(same.motion.distance(&RigidMotion::identity()).0 < 1e-14);
    }

    #[test]
    fn reflection_is_an_obstruction() {
        let f = ParamSurface::analytic(Sphere::upper_hemisphere(1.0));
        let ft = f.transformed(Mat3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0)), Vec3::zeros());
        let p = Vec2::new(0.4, 0.0);
        let err = fit_rigid_motion_jet(&f.jet(p).unwrap(), &ft.jet(p).unwrap()).unwrap_err();
        assert!(matches!(err, LabError::OrientationObstruction(_)));
    }
}
