use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geodesy::{
    jacobian_ratio_monotone, propagate_jacobi, riccati_trace_bound, ConstantCurvature, JacobiInit, MonotonicityReport,
    RiccatiReport,
};
use crate::models::unit_ball_volume;
use crate::numeric::quadrature::{integrate, QuadTolerance};
use crate::numeric::stream_rng;
use crate::tolerance;

use super::extrinsic::extrinsic_geometry;
use super::patch::QuadSpec;
use super::surface::SurfacePotential;

/// One evaluation of `Φ_r(x, y) = x + r (∇^Σ u(x) + y)` with its block
/// Jacobi system.
#[derive(Debug, Clone, Serialize)]
pub struct NormalTransportSample {
    pub p: Vec<f64>,
    pub position: Vec<f64>,
    /// Coefficients of `y` in the normal frame.
    pub y: Vec<f64>,
    pub r: f64,
    pub image: Vec<f64>,
    pub gradient: Vec<f64>,
    /// `D²_Σ u - ⟨II, y⟩`.
    pub tangent_block: Vec<Vec<f64>>,
    /// `⟨II, y⟩` alone.
    pub second_form_term: Vec<Vec<f64>>,
    /// `⟨II(e_i, ∇u), ν_β⟩`.
    pub mixed_block: Vec<Vec<f64>>,
    /// `det P(r)`.
    pub det: f64,
    /// `r^m (1 + r c)^n`.
    pub bound: f64,
    pub c: f64,
    pub normalized_limit: f64,
    /// Smallest eigenvalue of `I + r (D²_Σ u - ⟨II, y⟩)`.
    pub positivity: f64,
    pub monotonicity: MonotonicityReport,
    pub riccati: RiccatiReport,
}

impl NormalTransportSample {
    pub fn bound_holds(&self) -> bool {
        self.det <= self.bound * (1.0 + tolerance::JACOBIAN_BOUND)
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Transports `(x, y)` for parameter point `p` and normal coefficients `y`
/// to distance `r` in Euclidean space, where the ambient curvature vanishes.
pub fn normal_transport(sol: &SurfacePotential, p: &[f64], y: &[f64], r: f64) -> Result<NormalTransportSample> {
    let patch = &sol.patch;
    let (n, m) = (patch.param_dim(), patch.codim());
    if y.len() != m {
        return Err(Error::InvalidArgument(format!("normal vector has {} coefficients, expected {m}", y.len())));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("transport distance {r} must be positive")));
    }
    let jet = sol.jet(p)?;
    let size = jet.gradient_norm_sq() + y.iter().map(|v| v * v).sum::<f64>();
    if !patch.domain.contains_interior(p) || size >= 1.0 {
        return Err(Error::NotInU { grad_norm: size.sqrt() });
    }
    let g = &jet.geometry;
    let second = g.second_form_along(y);
    let a = &jet.hessian - &second;
    let mut b = DMatrix::zeros(n, m);
    for (beta, h) in g.second_form.iter().enumerate() {
        for i in 0..n {
            b[(i, beta)] = (0..n).map(|k| h[(i, k)] * jet.gradient[k]).sum();
        }
    }
    let init = JacobiInit::block(a.clone(), b.clone())?;
    let field = ConstantCurvature(DMatrix::zeros(n + m, n + m));
    let sys = propagate_jacobi(&init, &field, r)?;
    let det = sys.det(sys.t.len() - 1);
    let c = jet.laplacian_bound / n as f64;
    let bound = r.powi(m as i32) * (1.0 + r * c).powi(n as i32);

    let dir: Vec<f64> = (0..g.position.len())
        .map(|k| {
            (0..n).map(|i| g.tangent[(k, i)] * jet.gradient[i]).sum::<f64>()
                + (0..m).map(|al| g.normal[(k, al)] * y[al]).sum::<f64>()
        })
        .collect();
    let image = g.position.iter().zip(&dir).map(|(x, d)| x + r * d).collect();
    let shifted = DMatrix::identity(n, n) + &a * r;
    let positivity = ((&shifted + shifted.transpose()) * 0.5).symmetric_eigenvalues().min();
    Ok(NormalTransportSample {
        p: p.to_vec(),
        position: g.position.clone(),
        y: y.to_vec(),
        r,
        image,
        gradient: jet.gradient.clone(),
        tangent_block: rows(&a),
        second_form_term: rows(&second),
        mixed_block: rows(&b),
        det,
        bound,
        c,
        normalized_limit: init.normalized_det_limit(),
        positivity,
        monotonicity: jacobian_ratio_monotone(&sys, c),
        riccati: riccati_trace_bound(&sys, c)?,
    })
}

/// `n c/(1+tc) - Σ λ_i/(1+tλ_i)` for eigenvalues with `Σ λ_i ≤ n c` and
/// `1 + tλ_i > 0`.
pub fn arithmetic_harmonic_margin(lambdas: &[f64], c: f64, t: f64) -> Result<f64> {
    let n = lambdas.len() as f64;
    let sum: f64 = lambdas.iter().sum();
    if sum > n * c * (1.0 + 1e-12) + 1e-12 {
        return Err(Error::InvalidArgument(format!("eigenvalue sum {sum} exceeds n c = {}", n * c)));
    }
    if lambdas.iter().any(|l| !(1.0 + t * l > 0.0)) || !(1.0 + t * c > 0.0) {
        return Err(Error::InvalidArgument("1 + t λ must stay positive".into()));
    }
    Ok(n * c / (1.0 + t * c) - lambdas.iter().map(|l| l / (1.0 + t * l)).sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CaptureStatus {
    Holds,
    Inconclusive,
    Violated,
}

impl CaptureStatus {
    pub fn classify(lhs: f64, stderr: f64, rhs: f64) -> Self {
        let k = tolerance::MC_SIGMAS;
        if lhs - k * stderr > rhs {
            CaptureStatus::Violated
        } else if lhs + k * stderr <= rhs {
            CaptureStatus::Holds
        } else {
            CaptureStatus::Inconclusive
        }
    }
}

/// Volume of `{p : σr < d(x,p) < r for all x ∈ Σ}` against its transport bound.
#[derive(Debug, Clone, Serialize)]
pub struct ShellCapture {
    pub r: f64,
    pub sigma: f64,
    pub samples: usize,
    pub lhs: f64,
    pub stderr: f64,
    /// Quadrature value when the shell is a solid of revolution.
    pub lhs_exact: Option<f64>,
    /// `(m/2) |B^m| (1-σ²) ∫_Σ r^m (1 + r c)^n`.
    pub rhs: f64,
    /// The same with the exact normal-ball shell volume in place of the
    /// mean-value bound.
    pub rhs_sharp: f64,
    pub slack: f64,
    pub status: CaptureStatus,
    pub distances: &'static str,
}

const CHUNK: usize = 4096;

enum Distances {
    FlatDisk { radius: f64 },
    Cloud(Vec<Vec<f64>>),
}

impl Distances {
    /// Squared distances `(min, max)` from `q` to the patch.
    fn range(&self, q: &[f64]) -> (f64, f64) {
        match self {
            Distances::FlatDisk { radius } => {
                let a = q[0].hypot(q[1]);
                let b2: f64 = q[2..].iter().map(|v| v * v).sum();
                let lo = (a - radius).max(0.0);
                (lo * lo + b2, (a + radius).powi(2) + b2)
            }
            Distances::Cloud(pts) => pts.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), x| {
                let d: f64 = x.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                (lo.min(d), hi.max(d))
            }),
        }
    }
}

fn flat_disk_shell(radius: f64, m: usize, r: f64, sigma: f64) -> Result<f64> {
    let wm = unit_ball_volume(m);
    let top = r - radius;
    if top <= 0.0 {
        return Ok(0.0);
    }
    let integrand = |a: f64| {
        let hi2 = r * r - (a + radius).powi(2);
        if hi2 <= 0.0 {
            return 0.0;
        }
        let lo = (a - radius).max(0.0);
        let lo2 = (sigma * sigma * r * r - lo * lo).max(0.0);
        let shell = hi2.powf(m as f64 / 2.0) - lo2.powf(m as f64 / 2.0);
        2.0 * std::f64::consts::PI * a * wm * shell.max(0.0)
    };
    let mut cuts = vec![0.0, top];
    if radius < top {
        cuts.push(radius);
    }
    let kink = sigma * r + radius;
    if kink > 0.0 && kink < top {
        cuts.push(kink);
    }
    cuts.sort_by(f64::total_cmp);
    let tol = QuadTolerance {
        abs: 1e-12,
        rel: 1e-12,
        max_intervals: 4000,
    };
    let mut total = 0.0;
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            total += integrate(integrand, w[0], w[1], tol)?.value;
        }
    }
    Ok(total)
}

/// Monte Carlo shell volume with `budget` samples drawn uniformly from the
/// ball of radius `r` around a patch point, which contains the shell.
pub fn shell_capture(sol: &SurfacePotential, r: f64, sigma: f64, budget: usize, seed: u64) -> Result<ShellCapture> {
    shell_capture_stream(sol, r, sigma, budget, seed, 0)
}

fn shell_capture_stream(
    sol: &SurfacePotential,
    r: f64,
    sigma: f64,
    budget: usize,
    seed: u64,
    stream: u64,
) -> Result<ShellCapture> {
    if !(0.0..1.0).contains(&sigma) {
        return Err(Error::InvalidArgument(format!("sigma {sigma} must lie in [0, 1)")));
    }
    if !(r > 0.0) || budget == 0 {
        return Err(Error::InvalidArgument("shell capture needs r > 0 and a positive budget".into()));
    }
    let patch = &sol.patch;
    let (n, m) = (patch.param_dim(), patch.codim());
    if m < 2 {
        return Err(Error::CodimensionTooLow(m));
    }
    let dim = patch.ambient_dim();
    let coarse = QuadSpec { panels: 4, periodic: 64 };
    let ext = extrinsic_geometry(patch, coarse)?;

    let jets = ext.nodes.par_iter().map(|q| sol.jet(&q.p)).collect::<Result<Vec<_>>>()?;
    let wm = unit_ball_volume(m);
    let half = m as f64 / 2.0;
    let (mut plain, mut sharp) = (0.0, 0.0);
    for ((q, g), j) in ext.nodes.iter().zip(&ext.points).zip(&jets) {
        let c = j.laplacian_bound / n as f64;
        let w = q.w * g.area_element * r.powi(m as i32) * (1.0 + r * c).powi(n as i32);
        let gu = j.gradient_norm_sq();
        plain += w;
        sharp += w * ((1.0 - gu).max(0.0).powf(half) - (sigma * sigma - gu).max(0.0).powf(half));
    }
    let rhs = half * wm * (1.0 - sigma * sigma) * plain;
    let rhs_sharp = wm * sharp;

    let (distances, center, label) = match patch.flat_disk_radius() {
        Some(radius) => (Distances::FlatDisk { radius }, vec![0.0; dim], "closed_form"),
        None => {
            let mut cloud: Vec<Vec<f64>> = ext.points.iter().map(|g| g.position.clone()).collect();
            cloud.extend(ext.boundary.iter().map(|b| b.position.clone()));
            let center = patch.position(&patch.domain.center());
            (Distances::Cloud(cloud), center, "point_cloud")
        }
    };
    let (r2, s2) = (r * r, sigma * sigma * r * r);
    let chunks = budget.div_ceil(CHUNK);
    let hits: usize = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, (stream << 32) | k as u64);
            let count = CHUNK.min(budget - k * CHUNK);
            let mut hits = 0;
            let mut q = vec![0.0; dim];
            for _ in 0..count {
                let mut len2: f64 = 0.0;
                for v in q.iter_mut() {
                    *v = rng.sample::<f64, _>(StandardNormal);
                    len2 += *v * *v;
                }
                let u: f64 = rng.random();
                let s = r * u.powf(1.0 / dim as f64) / len2.sqrt();
                for (v, c) in q.iter_mut().zip(&center) {
                    *v = c + s * *v;
                }
                let (lo, hi) = distances.range(&q);
                if lo > s2 && hi < r2 {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let ball = unit_ball_volume(dim) * r.powi(dim as i32);
    let frac = hits as f64 / budget as f64;
    let lhs = ball * frac;
    let stderr = ball * (frac * (1.0 - frac) / budget as f64).sqrt();
    let lhs_exact = match patch.flat_disk_radius() {
        Some(radius) => Some(flat_disk_shell(radius, m, r, sigma)?),
        None => None,
    };
    Ok(ShellCapture {
        r,
        sigma,
        samples: budget,
        lhs,
        stderr,
        lhs_exact,
        rhs,
        rhs_sharp,
        slack: rhs - lhs,
        status: CaptureStatus::classify(lhs, stderr, rhs),
        distances: label,
    })
}

/// Shell captures over a grid of `(r, σ)` with the large-`r`, `σ → 1` limits
/// of both sides.
#[derive(Debug, Clone, Serialize)]
pub struct ShellSweep {
    pub captures: Vec<ShellCapture>,
    /// `(n+m) |B^{n+m}| θ` with `θ = 1`.
    pub limit_lhs: f64,
    /// `m |B^m| ∫_Σ c^n`.
    pub limit_rhs: f64,
}

impl ShellSweep {
    /// `rhs / ((1-σ) r^{n+m})` for each capture.
    pub fn scaled_rhs(&self, n: usize, m: usize) -> Vec<f64> {
        self.captures
            .iter()
            .map(|c| c.rhs / ((1.0 - c.sigma) * c.r.powi((n + m) as i32)))
            .collect()
    }
}

pub fn shell_sweep(
    sol: &SurfacePotential,
    radii: &[f64],
    sigmas: &[f64],
    budget: usize,
    seed: u64,
) -> Result<ShellSweep> {
    let (n, m) = (sol.patch.param_dim(), sol.patch.codim());
    let mut captures = Vec::with_capacity(radii.len() * sigmas.len());
    for (i, &r) in radii.iter().enumerate() {
        for (j, &s) in sigmas.iter().enumerate() {
            let stream = (i * sigmas.len() + j) as u64;
            captures.push(shell_capture_stream(sol, r, s, budget, seed, stream)?);
        }
    }
    let ext = extrinsic_geometry(&sol.patch, QuadSpec { panels: 4, periodic: 64 })?;
    let jets = ext.nodes.par_iter().map(|q| sol.jet(&q.p)).collect::<Result<Vec<_>>>()?;
    let integral: f64 = ext
        .nodes
        .iter()
        .zip(&ext.points)
        .zip(&jets)
        .map(|((q, g), j)| q.w * g.area_element * (j.laplacian_bound / n as f64).powi(n as i32))
        .sum();
    Ok(ShellSweep {
        captures,
        limit_lhs: (n + m) as f64 * unit_ball_volume(n + m),
        limit_rhs: m as f64 * unit_ball_volume(m) * integral,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::submanifold::extrinsic::{normalize_patch_density, PatchDensity};
    use crate::submanifold::patch::ImmersedPatch;
    use crate::submanifold::surface::surface_potential;
    use std::f64::consts::PI;

    fn flat(h: f64) -> SurfacePotential {
        let d = ImmersedPatch::flat_disk(1.0, 4).unwrap();
        surface_potential(&d, &PatchDensity::constant(1.0), h).unwrap()
    }

    #[test]
    fn flat_disk_transport_is_extremal() {
        let s = flat(0.05);
        let t = normal_transport(&s, &[0.2, 0.1], &[0.3, -0.4], 3.0).unwrap();
        let exact = 9.0 * 16.0;
        assert!((t.det - exact).abs() / exact < 2e-2, "{}", t.det);
        assert!((t.normalized_limit - 1.0).abs() < 1e-12);
        assert!(t.monotonicity.max_relative_increase < 1e-1);
        assert!(t.positivity > 0.0);
    }

    #[test]
    fn flipping_the_normal_negates_the_second_form_term() {
        let hs = ImmersedPatch::hemisphere().unwrap().lift_codim1().unwrap();
        let f = normalize_patch_density(&hs, &PatchDensity::constant(1.0), QuadSpec::default()).unwrap();
        let s = surface_potential(&hs, &f, 0.1).unwrap();
        let y = [0.3, -0.2];
        let a = normal_transport(&s, &[0.1, 0.2], &y, 0.5).unwrap();
        let b = normal_transport(&s, &[0.1, 0.2], &[-y[0], -y[1]], 0.5).unwrap();
        for (ra, rb) in a.second_form_term.iter().zip(&b.second_form_term) {
            for (x, z) in ra.iter().zip(rb) {
                assert_eq!(x.to_bits(), (-z).to_bits());
            }
        }
    }

    #[test]
    fn points_outside_u_are_rejected() {
        let s = flat(0.1);
        let err = normal_transport(&s, &[0.5, 0.0], &[0.9, 0.0], 1.0).unwrap_err();
        assert!(matches!(err, Error::NotInU { .. }));
        let err = normal_transport(&s, &[1.0, 0.0], &[0.0, 0.0], 1.0).unwrap_err();
        assert!(matches!(err, Error::NotInU { .. }));
    }

    #[test]
    fn arithmetic_harmonic_holds_for_random_spectra() {
        let mut rng = stream_rng(7, 0);
        for _ in 0..2000 {
            let n = rng.random_range(1..5);
            let c: f64 = rng.random_range(0.1..3.0);
            let mut l: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..2.0 * c)).collect();
            let excess = l.iter().sum::<f64>() - n as f64 * c;
            if excess > 0.0 {
                l[0] -= excess + 1e-9;
            }
            let t: f64 = rng.random_range(0.0..1.0);
            if l.iter().any(|x| 1.0 + t * x <= 0.0) {
                continue;
            }
            assert!(arithmetic_harmonic_margin(&l, c, t).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn flat_disk_shell_matches_quadrature() {
        let s = flat(0.1);
        let cap = shell_capture(&s, 10.0, 0.0, 200_000, 3).unwrap();
        let exact = cap.lhs_exact.unwrap();
        // ∫_0^9 2πa π (100 - (a+1)²) da
        let closed = 2.0 * PI * PI * (100.0 * 81.0 / 2.0 - (10.0f64.powi(4) / 4.0 - 10.0f64.powi(3) / 3.0 + 1.0 / 12.0));
        assert!((exact - closed).abs() < 1e-8 * closed, "{exact} {closed}");
        assert!((cap.lhs - exact).abs() < 5.0 * cap.stderr);
        assert_eq!(cap.status, CaptureStatus::Holds);
        assert!((cap.rhs - PI * PI * 100.0 * 121.0).abs() < 1e-6 * cap.rhs);
        assert!(cap.rhs_sharp <= cap.rhs * (1.0 + 1e-12));
    }

    #[test]
    fn degenerate_sigma_is_rejected() {
        let s = flat(0.1);
        assert!(shell_capture(&s, 10.0, 1.0, 10, 0).is_err());
    }
}
