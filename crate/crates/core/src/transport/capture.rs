use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geodesy::distance;
use crate::models::{ball_volume, unit_ball_volume, PolarPoint, WarpedModel};
use crate::numeric::quadrature::{gauss_legendre_on, integrate};
use crate::numeric::stream_rng;
use crate::potential::{GeoDomain, PotentialSolution, SolutionRepr, TIGHT_QUAD};
use crate::tolerance::MC_SIGMAS;

use super::TransportConfig;

/// Inverse-CDF sampler of the pole distance of a uniform point in `B(o, r_max)`.
#[derive(Debug, Clone)]
pub struct RadialSampler {
    model: WarpedModel,
    grid: Vec<f64>,
    cumulative: Vec<f64>,
}

impl RadialSampler {
    pub fn new(model: &WarpedModel, r_max: f64, cells: usize) -> Self {
        let k = model.dim as i32;
        let grid: Vec<f64> = (0..=cells).map(|i| r_max * i as f64 / cells as f64).collect();
        let mut cumulative = vec![0.0];
        for w in grid.windows(2) {
            let cell: f64 = gauss_legendre_on(8, w[0], w[1])
                .into_iter()
                .map(|(x, wt)| wt * model.phi(x).powi(k - 1))
                .sum();
            cumulative.push(cumulative.last().unwrap() + cell);
        }
        Self {
            model: model.clone(),
            grid,
            cumulative,
        }
    }

    /// Pole distance at cumulative fraction `q ∈ [0, 1)`.
    pub fn radius(&self, q: f64) -> f64 {
        let k = self.model.dim as i32;
        let target = q * self.cumulative.last().unwrap();
        let i = match self.cumulative.binary_search_by(|c| c.partial_cmp(&target).unwrap()) {
            Ok(i) => return self.grid[i],
            Err(i) => i - 1,
        };
        let (mut lo, mut hi) = (self.grid[i], self.grid[i + 1]);
        let partial = |r: f64| -> f64 {
            gauss_legendre_on(8, self.grid[i], r)
                .into_iter()
                .map(|(x, wt)| wt * self.model.phi(x).powi(k - 1))
                .sum::<f64>()
                + self.cumulative[i]
                - target
        };
        let mut x = 0.5 * (lo + hi);
        let tol = 1e-15 * self.cumulative.last().unwrap();
        for _ in 0..60 {
            let g = partial(x);
            if g.abs() <= tol || hi - lo < 1e-15 * hi {
                break;
            }
            if g > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d = self.model.phi(x).powi(k - 1);
            let newton = x - g / d;
            x = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        x
    }
}

/// Largest distance from `(ρ, e₁)` to the sphere of radius `radius`.
fn farthest_boundary_distance(model: &WarpedModel, radius: f64, rho: f64) -> Result<f64> {
    if rho == 0.0 {
        return Ok(radius);
    }
    let k = model.dim;
    let at = |r: f64, a: f64| {
        let mut w = vec![0.0; k];
        w[0] = a.cos();
        w[1] = a.sin();
        PolarPoint { r, omega: w }
    };
    let p = at(rho, 0.0);
    let d = |a: f64| distance(model, &p, &at(radius, a));
    let pi = std::f64::consts::PI;
    let scan = 12;
    let mut best = (0usize, f64::NEG_INFINITY);
    for j in 0..=scan {
        let v = d(pi * j as f64 / scan as f64)?;
        if v > best.1 {
            best = (j, v);
        }
    }
    let (mut a, mut b) = (
        pi * best.0.saturating_sub(1) as f64 / scan as f64,
        pi * (best.0 + 1).min(scan) as f64 / scan as f64,
    );
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut e) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fe) = (d(c)?, d(e)?);
    for _ in 0..30 {
        if fc > fe {
            b = e;
            e = c;
            fe = fc;
            c = b - g * (b - a);
            fc = d(c)?;
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + g * (b - a);
            fe = d(e)?;
        }
    }
    Ok(best.1.max(fc).max(fe))
}

/// Radius `ρ*` of the ball `{p : d(x, p) < r for all x ∈ B(o, R)}`, or
/// `None` when the set is empty.
pub fn far_radius(model: &WarpedModel, radius: f64, r: f64) -> Result<Option<f64>> {
    if r <= radius {
        return Ok(None);
    }
    if model.is_euclidean() {
        return Ok(Some(r - radius));
    }
    // ρ ≤ F(ρ) ≤ ρ + R brackets the root of F(ρ) = r in [r - R, r]
    let f = |rho: f64| farthest_boundary_distance(model, radius, rho).map(|v| v - r);
    let (mut a, mut b) = ((r - radius).max(0.0), r);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    if fa > 0.0 || fb < 0.0 {
        return Err(Error::Shooting(format!("far-set radius is not bracketed: F(a) - r = {fa:e}, F(b) - r = {fb:e}")));
    }
    let mut side = 0i32;
    for _ in 0..100 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = f(c)?;
        if fc.abs() < 1e-12 * r || (b - a) < 1e-12 * r {
            return Ok(Some(c));
        }
        if fc > 0.0 {
            b = c;
            fb = fc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        } else {
            a = c;
            fa = fc;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        }
    }
    Ok(Some(0.5 * (a + b)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CaptureStatus {
    Holds,
    Inconclusive,
    Violated,
    Vacuous,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaptureReport {
    pub r: f64,
    pub sigma: f64,
    /// Monte Carlo estimate of the far-set volume.
    pub lhs: f64,
    pub lhs_stderr: f64,
    /// The same volume by quadrature.
    pub lhs_exact: f64,
    /// `∫_U (1 + r f^{1/(n-1)})^n`.
    pub rhs: f64,
    pub slack: f64,
    pub far_radius: f64,
    pub lhs_over_rn: f64,
    /// `|B^n| θ`, the limit of `lhs / r^n`.
    pub asymptote: f64,
    pub samples: usize,
    pub seed: u64,
    pub status: CaptureStatus,
}

/// Integral of `(1 + r f^{1/(n-1)})^n` over `U = {|∇u| < 1}`.
pub fn u_weighted_volume(sol: &PotentialSolution, r: f64) -> Result<f64> {
    let n = sol.dim();
    let nf = n as f64;
    let model = &sol.model;
    match &sol.repr {
        SolutionRepr::Radial(s) => {
            let (r0, r1) = s.interval();
            let sphere = nf * unit_ball_volume(n);
            let integrand = |rho: f64| {
                let f = sol.density.radial_eval(rho).unwrap().0;
                (1.0 + r * f.powf(1.0 / (nf - 1.0))).powi(n as i32) * sphere * model.phi(rho).powi(n as i32 - 1)
            };
            let inside = |rho: f64| s.du(rho).abs() < 1.0;
            // split [r0, r1] at the crossings of |u'| = 1
            let m = 2000;
            let mut edges = vec![r0];
            let mut prev = inside(r0);
            for i in 1..=m {
                let rho = r0 + (r1 - r0) * i as f64 / m as f64;
                let cur = inside(rho);
                if cur != prev {
                    let lo = r0 + (r1 - r0) * (i - 1) as f64 / m as f64;
                    let cross =
                        crate::numeric::bisect(|t| s.du(t).abs() - 1.0, lo, rho, 1e-15 * (1.0 + r1), 200);
                    edges.push(cross);
                    prev = cur;
                }
            }
            edges.push(r1);
            let mut total = 0.0;
            for w in edges.windows(2) {
                let mid = 0.5 * (w[0] + w[1]);
                if inside(mid) {
                    total += integrate(integrand, w[0], w[1], TIGHT_QUAD)?.value;
                }
            }
            Ok(total)
        }
        SolutionRepr::Mesh(msol) => {
            let mesh = &msol.mesh;
            let mut total = 0.0;
            for (t, tri) in mesh.triangles.iter().enumerate() {
                let area = mesh.chart_area(t);
                let v = [mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]];
                for (l, w) in crate::potential::TRI_RULE {
                    let x = [
                        l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0],
                        l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1],
                    ];
                    let g = sol.gradient(&x)?;
                    if g[0] * g[0] + g[1] * g[1] >= 1.0 {
                        continue;
                    }
                    let f = sol.density.value(&x)?;
                    let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
                    total += w * area * model.chart_density(rho) * (1.0 + r * f.powf(1.0 / (nf - 1.0))).powi(n as i32);
                }
            }
            Ok(total)
        }
    }
}

/// Far-set volume against `∫_U (1 + r f^{1/(n-1)})^n`.
///
/// With `sigma > 0` only points at distance more than `σ r` from the
/// domain are counted (ball domains only).
pub fn capture_inequality(sol: &PotentialSolution, cfg: &TransportConfig, sigma: f64) -> Result<CaptureReport> {
    let model = &sol.model;
    let n = sol.dim();
    let r = cfg.r;
    let radius = sol.domain.outer_radius();
    if sigma > 0.0 && !matches!(sol.domain, GeoDomain::Ball { .. }) {
        return Err(Error::Unsupported("shell capture needs a ball domain".into()));
    }
    let asymptote = unit_ball_volume(n) * model.theta;
    let rhs = u_weighted_volume(sol, r)?;
    let rho_star = far_radius(model, radius, r)?;
    let inner = if sigma > 0.0 { radius + sigma * r } else { 0.0 };
    let Some(rho_star) = rho_star.filter(|rs| *rs > inner) else {
        return Ok(CaptureReport {
            r,
            sigma,
            lhs: 0.0,
            lhs_stderr: 0.0,
            lhs_exact: 0.0,
            rhs,
            slack: rhs,
            far_radius: 0.0,
            lhs_over_rn: 0.0,
            asymptote,
            samples: 0,
            seed: cfg.seed,
            status: CaptureStatus::Vacuous,
        });
    };
    let lhs_exact = ball_volume(model, rho_star)? - if inner > 0.0 { ball_volume(model, inner)? } else { 0.0 };

    let big = r + radius;
    let v_big = ball_volume(model, big)?;
    let sampler = RadialSampler::new(model, big, 4096);
    let chunk = 4096usize;
    let chunks = cfg.sample_count.div_ceil(chunk);
    use rayon::prelude::*;
    let hits: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(cfg.seed, c as u64);
            let count = chunk.min(cfg.sample_count - c * chunk);
            (0..count)
                .filter(|_| {
                    let rho = sampler.radius(rng.random::<f64>());
                    rho < rho_star && rho > inner
                })
                .count()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    let total = cfg.sample_count.max(1) as f64;
    let q = hits as f64 / total;
    let lhs = v_big * q;
    let lhs_stderr = v_big * (q * (1.0 - q) / total).sqrt();
    let status = if cfg.sample_count == 0 {
        CaptureStatus::Inconclusive
    } else if lhs > rhs + MC_SIGMAS * lhs_stderr {
        CaptureStatus::Violated
    } else if lhs + MC_SIGMAS * lhs_stderr <= rhs {
        CaptureStatus::Holds
    } else {
        CaptureStatus::Inconclusive
    };
    Ok(CaptureReport {
        r,
        sigma,
        lhs,
        lhs_stderr,
        lhs_exact,
        rhs,
        slack: rhs - lhs,
        far_radius: rho_star,
        lhs_over_rn: lhs / r.powi(n as i32),
        asymptote,
        samples: cfg.sample_count,
        seed: cfg.seed,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{CurvatureClass, WarpedProfile};
    use crate::potential::{normalize_density, solve_radial, DensityField};

    #[test]
    fn sampler_inverts_the_volume_cdf() {
        let m = WarpedModel::new(3, WarpedProfile::ConeSmoothed { alpha: 0.5 }, CurvatureClass::RicciNonneg).unwrap();
        let s = RadialSampler::new(&m, 5.0, 256);
        for q in [0.0, 0.1, 0.5, 0.93] {
            let rho = s.radius(q);
            let vol = |b: f64| integrate(|s| m.phi(s).powi(2), 0.0, b, TIGHT_QUAD).unwrap().value;
            assert!((vol(rho) - q * vol(5.0)).abs() < 1e-12 * vol(5.0), "q={q} {} {}", vol(rho), q * vol(5.0));
        }
    }

    #[test]
    fn euclidean_closed_forms() {
        let m = WarpedModel::euclidean(2);
        let d = GeoDomain::Ball { radius: 1.0 };
        let sol = solve_radial(&DensityField::constant(1.0), &d, &m).unwrap();
        for r in [10.0, 20.0, 40.0] {
            let rep = capture_inequality(&sol, &TransportConfig::new(r, 20_000, 3), 0.0).unwrap();
            let pi = std::f64::consts::PI;
            assert!((rep.lhs_exact - pi * (r - 1.0).powi(2)).abs() < 1e-9 * r * r);
            assert!((rep.rhs - pi * (r + 1.0).powi(2)).abs() < 1e-9 * r * r);
            assert_eq!(rep.status, CaptureStatus::Holds);
            assert!((rep.lhs - rep.lhs_exact).abs() < 4.0 * rep.lhs_stderr);
        }
        let vac = capture_inequality(&sol, &TransportConfig::new(0.5, 1000, 3), 0.0).unwrap();
        assert_eq!(vac.status, CaptureStatus::Vacuous);
    }

    #[test]
    fn cone_far_radius_brackets() {
        let m = WarpedModel::new(2, WarpedProfile::ConeSmoothed { alpha: 0.5 }, CurvatureClass::SectionalNonneg).unwrap();
        let rs = far_radius(&m, 1.0, 10.0).unwrap().unwrap();
        assert!(rs > 9.0 && rs <= 10.0, "{rs}");
        let d = GeoDomain::Ball { radius: 1.0 };
        let f = normalize_density(&DensityField::constant(1.0), &d, &m).unwrap();
        let sol = solve_radial(&f, &d, &m).unwrap();
        let rep = capture_inequality(&sol, &TransportConfig::new(10.0, 20_000, 5), 0.0).unwrap();
        assert_eq!(rep.status, CaptureStatus::Holds, "{rep:?}");
    }
}
