use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::geodesy::{distance, distance_with_direction};
use crate::models::PolarPoint;
use crate::numeric::stream_rng;
use crate::potential::{GeoDomain, PotentialSolution};

use super::capture::{far_radius, RadialSampler};
use super::{norm, phi_map, TransportConfig};


#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleStatus {
    Verified,
    ImageMismatch,
    NotInU,
    BoundaryMinimizer,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageSample {
    pub index: usize,
    pub target: Vec<f64>,
    pub minimizer: Vec<f64>,
    pub objective: f64,
    pub gradient_norm: f64,
    pub image_error: f64,
    pub jacobian: f64,
    pub jacobian_bound: f64,
    pub monotonicity_increase: f64,
    pub riccati_margin: f64,
    pub status: SampleStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub r: f64,
    pub seed: u64,
    pub starts: usize,
    pub tolerance: f64,
    pub far_radius: f64,
    pub vacuous: bool,
    pub targets: usize,
    pub verified: usize,
    pub verified_fraction: f64,
    pub boundary_minimizers: usize,
    pub not_in_u: usize,
    pub failures: usize,
    pub max_image_error: f64,
    /// `max (det DΦ_r - (1 + r f^{1/(n-1)})^n)` over verified samples.
    pub max_jacobian_excess: f64,
    pub max_monotonicity_increase: f64,
    pub min_riccati_margin: f64,
    pub samples: Vec<CoverageSample>,
}

struct Objective<'a> {
    sol: &'a PotentialSolution,
    target: PolarPoint,
    r: f64,
}

impl Objective<'_> {
    fn value(&self, x: &[f64]) -> Result<f64> {
        let d = distance(&self.sol.model, &PolarPoint::from_chart(x), &self.target)?;
        Ok(self.r * self.sol.value(x)? + 0.5 * d * d)
    }

    /// Value and gradient (orthonormal representation) of `r u + ½ d(·, p)²`.
    fn value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let dr = distance_with_direction(&self.sol.model, &PolarPoint::from_chart(x), &self.target)?;
        let gu = self.sol.gradient(x)?;
        let g = gu.iter().zip(&dr.direction).map(|(a, w)| self.r * a - dr.distance * w).collect();
        Ok((self.r * self.sol.value(x)? + 0.5 * dr.distance * dr.distance, g))
    }
}

/// Moves from `from` (inside) toward `to`, stopping at the domain boundary.
fn clip(domain: &GeoDomain, from: &[f64], to: &[f64]) -> (Vec<f64>, bool) {
    match domain {
        GeoDomain::Ball { radius } => {
            let n = norm(to);
            if n > *radius {
                (to.iter().map(|c| c * radius / n).collect(), true)
            } else {
                (to.to_vec(), false)
            }
        }
        GeoDomain::Annulus { inner, outer } => {
            let n = norm(to);
            let target = n.clamp(*inner, *outer);
            if target != n {
                (to.iter().map(|c| c * target / n).collect(), true)
            } else {
                (to.to_vec(), false)
            }
        }
        GeoDomain::Meshed(_) => {
            if domain.contains(to) {
                return (to.to_vec(), false);
            }
            let (mut lo, mut hi) = (0.0, 1.0);
            let at = |t: f64| -> Vec<f64> { from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect() };
            for _ in 0..60 {
                let m = 0.5 * (lo + hi);
                if domain.contains(&at(m)) {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            (at(lo), true)
        }
    }
}

struct Descent {
    x: Vec<f64>,
    value: f64,
    grad_norm: f64,
    clipped: bool,
}

fn descend(obj: &Objective, x0: Vec<f64>, gtol: f64, max_iter: usize) -> Result<Descent> {
    let sol = obj.sol;
    let mut x = x0;
    let (mut f, mut g) = obj.value_grad(&x)?;
    let mut clipped = false;
    for _ in 0..max_iter {
        let gn = norm(&g);
        if gn <= gtol {
            break;
        }
        let lmax = sol.hessian(&x)?.symmetric_eigenvalues().max().max(0.0);
        let mut step = 1.0 / (1.0 + obj.r * lmax);
        let dir = sol.model.chart_from_rep(&x, &g);
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a - step * d).collect();
            let (xn, c) = clip(&sol.domain, &x, &trial);
            let fnew = obj.value(&xn)?;
            if fnew <= f - 1e-4 * step * gn * gn || (c && fnew < f) {
                accepted = Some((xn, c));
                break;
            }
            // value differences are lost in round-off near the minimum
            if (fnew - f).abs() <= 1e-13 * (1.0 + f.abs()) && !c && norm(&obj.value_grad(&xn)?.1) < gn {
                accepted = Some((xn, c));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, c)) = accepted else { break };
        clipped = c;
        x = xn;
        let fg = obj.value_grad(&x)?;
        f = fg.0;
        g = fg.1;
    }
    Ok(Descent {
        grad_norm: norm(&g),
        x,
        value: f,
        clipped,
    })
}

/// Chart interval `[a, b]` of pole distances along direction `w` inside the domain.
fn ray_interval(domain: &GeoDomain, w: &[f64]) -> (f64, f64) {
    match domain {
        GeoDomain::Ball { radius } => (0.0, *radius),
        GeoDomain::Annulus { inner, outer } => (*inner, *outer),
        GeoDomain::Meshed(_) => {
            let r = domain.outer_radius();
            let (mut lo, mut hi) = (0.0, r);
            for _ in 0..60 {
                let m = 0.5 * (lo + hi);
                let x: Vec<f64> = w.iter().map(|c| c * m).collect();
                if domain.contains(&x) {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            (0.0, lo)
        }
    }
}

/// Golden-section minimizer of the objective restricted to the ray of `p`.
fn ray_seed(obj: &Objective) -> Result<Vec<f64>> {
    let w = &obj.target.omega;
    let (a0, b0) = ray_interval(&obj.sol.domain, w);
    let at = |rho: f64| -> Vec<f64> { w.iter().map(|c| c * rho).collect() };
    let g = |rho: f64| -> Result<f64> {
        Ok(obj.r * obj.sol.value(&at(rho))? + 0.5 * (obj.target.r - rho).powi(2))
    };
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (a0, b0);
    let (mut c, mut d) = (b - phi * (b - a), a + phi * (b - a));
    let (mut gc, mut gd) = (g(c)?, g(d)?);
    for _ in 0..90 {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - phi * (b - a);
            gc = g(c)?;
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + phi * (b - a);
            gd = g(d)?;
        }
    }
    let mut best = (0.5 * (a + b), g(0.5 * (a + b))?);
    for end in [a0, b0] {
        let v = g(end)?;
        if v < best.1 {
            best = (end, v);
        }
    }
    Ok(at(best.0))
}

fn random_in_domain(domain: &GeoDomain, k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let r = domain.outer_radius();
    loop {
        let mut v = vec![0.0; k];
        v[0] = rng.random_range(-r..r);
        v[1] = rng.random_range(-r..r);
        if norm(&v) < r && domain.contains(&v) {
            return v;
        }
    }
}

/// Samples targets in the far set, minimizes `x ↦ r u(x) + ½ d(x, p)²` from the
/// on-ray seed and `starts` random starts, and checks `Φ_r(x̄) = p`.
pub fn coverage_experiment(
    sol: &PotentialSolution,
    cfg: &TransportConfig,
    starts: usize,
    tolerance: f64,
) -> Result<CoverageReport> {
    let model = &sol.model;
    let k = sol.dim();
    let r = cfg.r;
    let rho_star = far_radius(model, sol.domain.outer_radius(), r)?;
    let empty = |far: f64, vacuous: bool| CoverageReport {
        r,
        seed: cfg.seed,
        starts,
        tolerance,
        far_radius: far,
        vacuous,
        targets: 0,
        verified: 0,
        verified_fraction: 0.0,
        boundary_minimizers: 0,
        not_in_u: 0,
        failures: 0,
        max_image_error: 0.0,
        max_jacobian_excess: f64::NEG_INFINITY,
        max_monotonicity_increase: f64::NEG_INFINITY,
        min_riccati_margin: f64::INFINITY,
        samples: Vec::new(),
    };
    let Some(rho_star) = rho_star else {
        return Ok(empty(0.0, true));
    };
    let sampler = RadialSampler::new(model, rho_star, 1024);
    let samples: Vec<CoverageSample> = (0..cfg.sample_count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(cfg.seed, (1u64 << 40) + i as u64);
            let rho = sampler.radius(rng.random::<f64>());
            let mut w: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let wn = norm(&w);
            w.iter_mut().for_each(|c| *c /= wn);
            let target = PolarPoint { r: rho, omega: w };
            let starts_x: Vec<Vec<f64>> = (0..starts).map(|_| random_in_domain(&sol.domain, k, &mut rng)).collect();
            evaluate_target(sol, cfg, i, target, starts_x, tolerance).unwrap_or_else(|_| CoverageSample {
                index: i,
                target: Vec::new(),
                minimizer: Vec::new(),
                objective: f64::NAN,
                gradient_norm: f64::NAN,
                image_error: f64::NAN,
                jacobian: f64::NAN,
                jacobian_bound: f64::NAN,
                monotonicity_increase: f64::NAN,
                riccati_margin: f64::NAN,
                status: SampleStatus::Failed,
            })
        })
        .collect();

    let mut rep = empty(rho_star, false);
    rep.targets = samples.len();
    for s in &samples {
        match s.status {
            SampleStatus::Verified => {
                rep.verified += 1;
                rep.max_jacobian_excess = rep.max_jacobian_excess.max(s.jacobian - s.jacobian_bound);
                rep.max_monotonicity_increase = rep.max_monotonicity_increase.max(s.monotonicity_increase);
                rep.min_riccati_margin = rep.min_riccati_margin.min(s.riccati_margin);
            }
            SampleStatus::NotInU => rep.not_in_u += 1,
            SampleStatus::BoundaryMinimizer => rep.boundary_minimizers += 1,
            SampleStatus::Failed => rep.failures += 1,
            SampleStatus::ImageMismatch => {}
        }
        if s.image_error.is_finite() {
            rep.max_image_error = rep.max_image_error.max(s.image_error);
        }
    }
    rep.verified_fraction = if rep.targets == 0 { 0.0 } else { rep.verified as f64 / rep.targets as f64 };
    rep.samples = samples;
    Ok(rep)
}

fn evaluate_target(
    sol: &PotentialSolution,
    cfg: &TransportConfig,
    index: usize,
    target: PolarPoint,
    starts: Vec<Vec<f64>>,
    tolerance: f64,
) -> Result<CoverageSample> {
    let r = cfg.r;
    let obj = Objective { sol, target, r };
    let gtol = 1e-10 * (1.0 + r);
    let seed = ray_seed(&obj)?;
    let mut best = descend(&obj, seed, gtol, 200)?;
    for x0 in starts {
        // coarse search from random starts; polished only if it beats the seed
        let d = descend(&obj, x0, 1e-4 * (1.0 + r), 60)?;
        if d.value < best.value - 1e-9 * (1.0 + best.value.abs()) {
            best = descend(&obj, d.x, gtol, 400)?;
        }
    }
    let target_chart = obj.target.to_chart();
    let mut sample = CoverageSample {
        index,
        target: target_chart,
        minimizer: best.x.clone(),
        objective: best.value,
        gradient_norm: norm(&sol.gradient(&best.x)?),
        image_error: f64::NAN,
        jacobian: f64::NAN,
        jacobian_bound: f64::NAN,
        monotonicity_increase: f64::NAN,
        riccati_margin: f64::NAN,
        status: SampleStatus::Failed,
    };
    if best.clipped && best.grad_norm > gtol {
        sample.status = SampleStatus::BoundaryMinimizer;
        return Ok(sample);
    }
    if sample.gradient_norm >= 1.0 {
        sample.status = SampleStatus::NotInU;
        return Ok(sample);
    }
    let img = phi_map(sol, &best.x, r)?;
    let err = distance(&sol.model, &PolarPoint::from_chart(&img.image), &obj.target)?;
    sample.image_error = err;
    sample.jacobian = img.jacobian;
    sample.jacobian_bound = img.jacobian_bound;
    sample.monotonicity_increase = img.monotonicity_increase;
    sample.riccati_margin = img.riccati_margin;
    sample.status = if err <= tolerance {
        SampleStatus::Verified
    } else {
        SampleStatus::ImageMismatch
    };
    Ok(sample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::WarpedModel;
    use crate::potential::{solve_radial, DensityField};

    #[test]
    fn euclidean_disk_is_covered() {
        let m = WarpedModel::euclidean(2);
        let d = GeoDomain::Ball { radius: 1.0 };
        let sol = solve_radial(&DensityField::constant(1.0), &d, &m).unwrap();
        let rep = coverage_experiment(&sol, &TransportConfig::new(10.0, 100, 11), 3, 1e-6).unwrap();
        assert_eq!(rep.verified, 100, "{rep:?}");
        for s in &rep.samples {
            for c in 0..2 {
                assert!((s.minimizer[c] - s.target[c] / 11.0).abs() < 1e-8, "{:?} {:?} {}", s.minimizer, s.target, s.image_error);
            }
        }
        assert!(rep.max_jacobian_excess <= 1e-6);
        let vac = coverage_experiment(&sol, &TransportConfig::new(0.5, 100, 11), 3, 1e-6).unwrap();
        assert!(vac.vacuous && vac.targets == 0);
    }
}
