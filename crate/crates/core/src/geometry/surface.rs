use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix3;

use super::catalog::Transformed;
use super::{DomainPatch, Jet2, Vec2, Vec3};
use crate::error::{LabError, Result};

/// A parametric immersion of a planar patch into 3-space.
///
/// Implementors always provide positions; closed-form jets are optional.
pub trait Immersion: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    fn domain(&self) -> &DomainPatch;
    fn position(&self, p: Vec2) -> Vec3;
    fn analytic_jet(&self, _p: Vec2) -> Option<Jet2> {
        None
    }
}

/// How [`ParamSurface::jet`] obtains derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeMode {
    Analytic,
    /// Centered differences of positions at the given stencil spacing. With
    /// `richardson` the h and h/2 estimates are combined to cancel the
    /// leading error term.
    FiniteDifference { spacing: f64, richardson: bool },
}

/// An immersion paired with a derivative mode.
#[derive(Clone)]
pub struct ParamSurface {
    immersion: Arc<dyn Immersion>,
    mode: DerivativeMode,
}

impl fmt::Debug for ParamSurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParamSurface")
            .field("immersion", &self.immersion.name())
            .field("mode", &self.mode)
            .finish()
    }
}

impl ParamSurface {
    pub fn analytic<I: Immersion + 'static>(immersion: I) -> Self {
        Self { immersion: Arc::new(immersion), mode: DerivativeMode::Analytic }
    }

    pub fn new(immersion: Arc<dyn Immersion>, mode: DerivativeMode) -> Result<Self> {
        if let DerivativeMode::FiniteDifference { spacing, .. } = mode {
            let h = immersion.domain().spacing;
            if !(spacing > 0.0) || spacing >= h / 4.0 {
                return Err(LabError::InvalidArgument(format!(
                    "stencil spacing {spacing} must be positive and below a quarter of the grid spacing {h}"
                )));
            }
        }
        Ok(Self { immersion, mode })
    }

    pub fn with_mode(&self, mode: DerivativeMode) -> Result<Self> {
        Self::new(self.immersion.clone(), mode)
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    pub fn immersion(&self) -> &Arc<dyn Immersion> {
        &self.immersion
    }

    pub fn name(&self) -> String {
        self.immersion.name()
    }

    pub fn domain(&self) -> &DomainPatch {
        self.immersion.domain()
    }

    pub fn position(&self, p: Vec2) -> Vec3 {
        self.immersion.position(p)
    }

    /// The surface `x -> A f + b` with the same derivative mode.
    pub fn transformed(&self, linear: Matrix3<f64>, translation: Vec3) -> ParamSurface {
        ParamSurface {
            immersion: Arc::new(Transformed::new(self.immersion.clone(), linear, translation)),
            mode: self.mode,
        }
    }

    /// Jet at a domain point.
    pub fn jet(&self, p: Vec2) -> Result<Jet2> {
        self.domain().check(p)?;
        self.jet_unchecked(p)
    }

    /// Jet without the domain test; used where trajectories graze the patch
    /// edge. Still rejects degenerate jets.
    pub fn jet_unchecked(&self, p: Vec2) -> Result<Jet2> {
        let jet = match self.mode {
            DerivativeMode::Analytic => self
                .immersion
                .analytic_jet(p)
                .ok_or_else(|| LabError::NoAnalyticJet(self.immersion.name()))?,
            DerivativeMode::FiniteDifference { spacing, richardson } => {
                if richardson {
                    let coarse = self.fd_jet(p, spacing);
                    let fine = self.fd_jet(p, spacing / 2.0);
                    let ex = |c: Vec3, f: Vec3| (4.0 * f - c) / 3.0;
                    Jet2 {
                        p: fine.p,
                        f1: ex(coarse.f1, fine.f1),
                        f2: ex(coarse.f2, fine.f2),
                        f11: ex(coarse.f11, fine.f11),
                        f12: ex(coarse.f12, fine.f12),
                        f22: ex(coarse.f22, fine.f22),
                    }
                } else {
                    self.fd_jet(p, spacing)
                }
            }
        };
        if !jet.is_immersive() {
            return Err(LabError::ImmersionFailure {
                u: p.x,
                v: p.y,
                detail: format!("|f1 x f2| = {:e}", jet.cross().norm()),
            });
        }
        Ok(jet)
    }

    fn fd_jet(&self, p: Vec2, h: f64) -> Jet2 {
        let f = |du: f64, dv: f64| self.immersion.position(Vec2::new(p.x + du, p.y + dv));
        let c = f(0.0, 0.0);
        let (up, um, vp, vm) = (f(h, 0.0), f(-h, 0.0), f(0.0, h), f(0.0, -h));
        let (pp, pm, mp, mm) = (f(h, h), f(h, -h), f(-h, h), f(-h, -h));
        Jet2 {
            p: c,
            f1: (up - um) / (2.0 * h),
            f2: (vp - vm) / (2.0 * h),
            f11: (up - 2.0 * c + um) / (h * h),
            f12: (pp - pm - mp + mm) / (4.0 * h * h),
            f22: (vp - 2.0 * c + vm) / (h * h),
        }
    }
}
