use nalgebra::Matrix3;

use super::Vec3;

/// Position and all first and second partials of an immersion at a point.
///
/// Index 1 is the first parameter, index 2 the second. Only one mixed
/// partial is stored, so symmetry holds by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub p: Vec3,
    pub f1: Vec3,
    pub f2: Vec3,
    pub f11: Vec3,
    pub f12: Vec3,
    pub f22: Vec3,
}

impl Jet2 {
    pub fn partial(&self, i: usize) -> Vec3 {
        match i {
            0 => self.f1,
            _ => self.f2,
        }
    }

    pub fn second(&self, i: usize, j: usize) -> Vec3 {
        match (i, j) {
            (0, 0) => self.f11,
            (1, 1) => self.f22,
            _ => self.f12,
        }
    }

    pub fn cross(&self) -> Vec3 {
        self.f1.cross(&self.f2)
    }

    /// Relative immersion test `|f1 x f2| >= 1e-10 |f1||f2|`.
    pub fn is_immersive(&self) -> bool {
        let scale = self.f1.norm() * self.f2.norm();
        scale > 0.0 && self.cross().norm() >= 1e-10 * scale
    }

    /// Jet of `x -> A x + b`.
    pub fn map_affine(&self, linear: &Matrix3<f64>, translation: &Vec3) -> Jet2 {
        Jet2 {
            p: linear * self.p + translation,
            f1: linear * self.f1,
            f2: linear * self.f2,
            f11: linear * self.f11,
            f12: linear * self.f12,
            f22: linear * self.f22,
        }
    }

    /// Largest componentwise deviation between two jets.
    pub fn max_deviation(&self, other: &Jet2) -> f64 {
        [
            self.p - other.p,
            self.f1 - other.f1,
            self.f2 - other.f2,
            self.f11 - other.f11,
            self.f12 - other.f12,
            self.f22 - other.f22,
        ]
        .iter()
        .map(|d| d.amax())
        .fold(0.0, f64::max)
    }
}
