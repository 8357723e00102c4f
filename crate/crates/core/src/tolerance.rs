//! Central tolerance table. Every report echoes the entries it used.

/// Radial and closed-form paths.
pub const ANALYTIC: f64 = 1e-6;

/// Profile certificate: maximum allowed curvature-sign violation.
pub const PROFILE_VIOLATION: f64 = 1e-10;

/// Quadrature for volumes and patch integrals.
pub const QUAD_ABS: f64 = 1e-12;
pub const QUAD_REL: f64 = 1e-10;

/// Agreement of the two asymptotic-volume-ratio estimators.
pub const THETA_AGREEMENT: f64 = 1e-6;

/// Embedded Runge-Kutta local tolerance.
pub const ODE: f64 = 1e-10;

/// Geodesic energy and frame orthonormality drift.
pub const GEODESIC_INVARIANT: f64 = 1e-9;

/// Symmetry residual of P' P^T.
pub const JACOBI_SYMMETRY: f64 = 1e-9;

/// Riccati trace margin and relative increase of the normalized Jacobian.
pub const MONOTONICITY: f64 = 1e-8;

/// Relative accuracy of the shooting distance solver.
pub const DISTANCE_REL: f64 = 1e-8;

/// Normalization identity after rescaling the density.
pub const NORMALIZATION: f64 = 1e-9;

/// Compatibility residual of the discrete Neumann problem, relative to A.
pub const COMPATIBILITY: f64 = 1e-6;

/// Jacobian upper bound slack at contact samples.
pub const JACOBIAN_BOUND: f64 = 1e-6;

/// Recovered second derivatives on a mesh of width `h`.
pub fn mesh(h: f64) -> f64 {
    (5.0 * h).max(1e-8)
}

/// Sobolev ratio tolerance on a mesh path.
pub fn mesh_ratio(h: f64) -> f64 {
    (5.0 * h).max(1e-4)
}

/// Monte Carlo assertions allow this many standard errors.
pub const MC_SIGMAS: f64 = 3.0;

/// Near-equality gate for rigidity diagnostics.
pub const NEAR_EQUALITY: f64 = 1e-3;

/// One tolerance entry as echoed into reports.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ToleranceEntry {
    pub name: &'static str,
    pub value: f64,
}

/// The policy table used for a run with mesh width `h` (0 for meshless runs).
pub fn policy(h: f64) -> Vec<ToleranceEntry> {
    let mut v = vec![
        ToleranceEntry { name: "analytic", value: ANALYTIC },
        ToleranceEntry { name: "ode", value: ODE },
        ToleranceEntry { name: "monotonicity", value: MONOTONICITY },
        ToleranceEntry { name: "jacobian_bound", value: JACOBIAN_BOUND },
        ToleranceEntry { name: "mc_sigmas", value: MC_SIGMAS },
    ];
    if h > 0.0 {
        v.push(ToleranceEntry { name: "mesh", value: mesh(h) });
        v.push(ToleranceEntry { name: "mesh_ratio", value: mesh_ratio(h) });
    }
    v
}
