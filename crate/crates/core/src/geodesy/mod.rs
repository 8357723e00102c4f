//! Geodesics, distances and Jacobi fields on warped models.

pub mod distance;
pub mod geodesic;
pub mod jacobi;

pub use distance::{distance, distance_with_direction, DistanceResult};
pub use geodesic::{exp_map, exp_map_with_tol, GeodesicCurve, GeodesicSample, REPORT_SAMPLES};
pub use jacobi::{
    index_form, index_form_on_curve, jacobian_ratio_monotone, propagate_jacobi, propagate_jacobi_with_tol,
    riccati_trace, riccati_trace_bound, ConstantCurvature, CurvatureField, FnCurvature, FrameField, JacobiInit,
    JacobiSystem, MonotonicityReport, RiccatiReport,
};
