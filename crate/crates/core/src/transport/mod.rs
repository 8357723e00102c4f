//! Transport along `t ↦ exp_x(t ∇u(x))`: the map `Φ_r`, contact tests,
//! surjectivity experiments and the volume-capture inequality.

mod capture;
mod coverage;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geodesy::{
    distance, exp_map_with_tol, jacobian_ratio_monotone, propagate_jacobi_with_tol, riccati_trace_bound,
    ConstantCurvature, JacobiInit,
};
use crate::models::PolarPoint;
use crate::numeric::stream_rng;
use crate::potential::{GeoDomain, PotentialSolution};

pub use capture::{capture_inequality, far_radius, CaptureReport, CaptureStatus, RadialSampler};
pub use coverage::{coverage_experiment, CoverageReport, CoverageSample, SampleStatus};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransportConfig {
    pub r: f64,
    pub sample_count: usize,
    pub seed: u64,
    /// Relative slack for the contact inequality.
    pub contact_tolerance: f64,
}

impl TransportConfig {
    pub fn new(r: f64, sample_count: usize, seed: u64) -> Self {
        Self {
            r,
            sample_count,
            seed,
            contact_tolerance: 1e-7,
        }
    }
}

/// `Φ_r(x)` with `det DΦ_r(x)` and the comparison diagnostics along the geodesic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiImage {
    pub x: Vec<f64>,
    pub image: Vec<f64>,
    pub gradient_norm: f64,
    pub jacobian: f64,
    /// `(1 + r f(x)^{1/(n-1)})^n`.
    pub jacobian_bound: f64,
    /// Largest relative increase of `det P(t) / (1 + t c)^n`.
    pub monotonicity_increase: f64,
    /// `min_t (n c/(1+tc) - tr P'P⁻¹)`.
    pub riccati_margin: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// `Φ_r(x) = exp_x(r ∇u(x))` and `det DΦ_r(x) = det P(r)` where
/// `P'' = -P S`, `P(0) = I`, `P'(0) = D²u(x)` in a parallel frame.
pub fn phi_map(sol: &PotentialSolution, x: &[f64], r: f64) -> Result<PhiImage> {
    phi_map_with_tol(sol, x, r, crate::tolerance::ODE)
}

/// [`phi_map`] with an explicit local tolerance for the geodesic and Jacobi
/// integrations.
pub fn phi_map_with_tol(sol: &PotentialSolution, x: &[f64], r: f64, tol: f64) -> Result<PhiImage> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("transport time must be positive, got {r}")));
    }
    let n = sol.dim();
    let grad = sol.gradient(x)?;
    let hess = sol.hessian(x)?;
    let f = sol.density_value(x)?;
    let c = f.powf(1.0 / (n as f64 - 1.0));
    let init = JacobiInit::identity(hess);
    let gnorm = norm(&grad);
    let (image, sys) = if gnorm == 0.0 {
        let field = ConstantCurvature(DMatrix::zeros(n, n));
        (x.to_vec(), propagate_jacobi_with_tol(&init, &field, r, tol)?)
    } else {
        let start = PolarPoint::from_chart(x);
        let (end, curve) = exp_map_with_tol(&sol.model, &start, &grad, r, tol)?;
        (end.to_chart(), propagate_jacobi_with_tol(&init, &curve, r, tol)?)
    };
    let last = sys.t.len() - 1;
    let mono = jacobian_ratio_monotone(&sys, c);
    let ric = riccati_trace_bound(&sys, c)?;
    Ok(PhiImage {
        x: x.to_vec(),
        image,
        gradient_norm: gnorm,
        jacobian: sys.det(last),
        jacobian_bound: (1.0 + r * c).powi(n as i32),
        monotonicity_increase: mono.max_relative_increase,
        riccati_margin: ric.margin,
    })
}

/// Sample point for the contact inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub x: Vec<f64>,
    pub on_boundary: bool,
}

/// Polar grid, boundary ring and uniform random points covering the domain.
pub fn default_probes(sol: &PotentialSolution, grid: usize, random: usize, seed: u64) -> Vec<Probe> {
    use rand::Rng;
    let k = sol.dim();
    let embed = |rho: f64, a: f64| {
        let mut v = vec![0.0; k];
        v[0] = rho * a.cos();
        v[1] = rho * a.sin();
        v
    };
    let mut out = Vec::new();
    let two_pi = 2.0 * std::f64::consts::PI;
    match &sol.domain {
        GeoDomain::Meshed(mesh) => {
            let b = mesh.boundary_vertices();
            for (i, v) in mesh.vertices.iter().enumerate() {
                out.push(Probe {
                    x: v.to_vec(),
                    on_boundary: b[i],
                });
            }
        }
        d => {
            let (r0, r1) = match d {
                GeoDomain::Ball { radius } => (0.0, *radius),
                GeoDomain::Annulus { inner, outer } => (*inner, *outer),
                GeoDomain::Meshed(_) => unreachable!(),
            };
            for i in 0..=grid {
                let rho = r0 + (r1 - r0) * i as f64 / grid as f64;
                let count = if rho == 0.0 { 1 } else { 4 * grid };
                for j in 0..count {
                    out.push(Probe {
                        x: embed(rho, two_pi * j as f64 / count as f64),
                        on_boundary: i == grid || (r0 > 0.0 && i == 0),
                    });
                }
            }
        }
    }
    let r_out = sol.domain.outer_radius();
    let mut rng = stream_rng(seed, 0);
    let mut added = 0;
    while added < random {
        let mut v: Vec<f64> = (0..k).map(|_| rng.random_range(-r_out..r_out)).collect();
        if k > 2 {
            for c in v.iter_mut().skip(2) {
                *c = 0.0;
            }
        }
        if norm(&v) < r_out && sol.domain.contains(&v) {
            out.push(Probe { x: v, on_boundary: false });
            added += 1;
        }
    }
    out
}

/// Outcome of testing `x̄` against the contact inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContactSample {
    pub x: Vec<f64>,
    pub phi_rx: Vec<f64>,
    pub jacobian: f64,
    pub is_contact: bool,
    /// `min (r u(x) + ½ d(x, Φ_r(x̄))² - r u(x̄) - ½ r² |∇u(x̄)|²)` over probes.
    pub margin: f64,
    /// Same minimum restricted to boundary probes.
    pub boundary_margin: f64,
    pub probes: usize,
    pub skipped: usize,
}

pub fn contact_test(sol: &PotentialSolution, xbar: &[f64], cfg: &TransportConfig, probes: &[Probe]) -> Result<ContactSample> {
    let r = cfg.r;
    let grad = sol.gradient(xbar)?;
    let gn = norm(&grad);
    if gn >= 1.0 {
        return Err(Error::NotInU { grad_norm: gn });
    }
    let phi = phi_map(sol, xbar, r)?;
    let target = PolarPoint::from_chart(&phi.image);
    let base = r * sol.value(xbar)? + 0.5 * r * r * gn * gn;
    let slack: Vec<Option<(f64, bool)>> = probes
        .par_iter()
        .map(|p| {
            let d = distance(&sol.model, &PolarPoint::from_chart(&p.x), &target).ok()?;
            let u = sol.value(&p.x).ok()?;
            Some((r * u + 0.5 * d * d - base, p.on_boundary))
        })
        .collect();
    let skipped = slack.iter().filter(|s| s.is_none()).count();
    if skipped * 100 > probes.len() {
        return Err(Error::ProbesSkipped {
            skipped,
            total: probes.len(),
        });
    }
    let mut margin = f64::INFINITY;
    let mut bmargin = f64::INFINITY;
    for (v, b) in slack.into_iter().flatten() {
        margin = margin.min(v);
        if b {
            bmargin = bmargin.min(v);
        }
    }
    let tol = cfg.contact_tolerance * (1.0 + base.abs());
    Ok(ContactSample {
        x: xbar.to_vec(),
        phi_rx: phi.image,
        jacobian: phi.jacobian,
        is_contact: margin >= -tol,
        margin,
        boundary_margin: bmargin,
        probes: probes.len(),
        skipped,
    })
}
