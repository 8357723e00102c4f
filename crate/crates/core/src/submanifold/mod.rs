//! Immersed patches in Euclidean space and the transport of their normal
//! bundles.

pub mod extrinsic;
pub mod normal;
pub mod patch;
pub mod surface;

pub use extrinsic::{
    extrinsic_geometry, minimal_isoperimetry, ms_constant, ms_sides, normalize_patch_density, patch_integrals,
    point_geometry, ExtrinsicData, IsoperimetryReport, MsSides, PatchDensity, PatchIntegrals, PointGeometry,
};
pub use normal::{
    arithmetic_harmonic_margin, normal_transport, shell_capture, shell_sweep, CaptureStatus, NormalTransportSample,
    ShellCapture, ShellSweep,
};
pub use patch::{ImmersedPatch, ParamDomain, QuadSpec};
pub use surface::{surface_potential, EqualityResiduals, SurfaceJet, SurfacePotential};
