//! Second-order jets of parametric immersions and everything derived from
//! them: fundamental forms, Christoffel symbols, curvatures, curves on the
//! surface, and pairwise isometry/orientation checks.

pub mod catalog;
pub mod checks;
pub mod curve;
pub mod domain;
pub mod forms;
pub mod jet;
pub mod surface;

pub use catalog::{
    BentPlane, Cone, Cylinder, Ellipsoid, Paraboloid, Plane, PolarPlane, Sphere, Transformed, Warped,
};
pub use checks::{isometry_check, orientation_compatibility, IsometryReport, OrientationReport};
pub use curve::{CurveKind, CurveOnSurface, CurvePoint};
pub use domain::{DomainKind, DomainPatch, NodeGrid};
pub use forms::{
    christoffel, christoffel_from_metric_samples, first_fundamental_form, gauss_curvature_intrinsic,
    metric_with_christoffel, second_fundamental_form, MetricData, ShapeData,
};
pub use jet::Jet2;
pub use surface::{DerivativeMode, Immersion, ParamSurface};

pub type Vec2 = nalgebra::Vector2<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
