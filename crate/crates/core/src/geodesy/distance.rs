//! Riemannian distance on a warped model by shooting in the 2-dimensional
//! slice through the pole.
//!
//! A unit-speed geodesic leaving radius `a` at angle `β` from the outward
//! radial direction has Clairaut constant `L = φ(a) sin β`. The angle it
//! sweeps before reaching radius `b ≥ a` and its length are explicit
//! integrals; shooting solves `swept(β) = Δψ` for the angular separation
//! `Δψ ∈ [0, π]`.

use crate::error::{Error, Result};
use crate::models::{PolarPoint, WarpedModel};
use crate::numeric::quadrature::{integrate, QuadTolerance};
use crate::tolerance;

/// Distance together with the initial unit direction of a minimizing
/// geodesic from `x` toward `p` (orthonormal representation at `x`).
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceResult {
    pub distance: f64,
    /// Zero vector when `x = p`.
    pub direction: Vec<f64>,
    pub through_pole: bool,
}

const SCAN: usize = 48;

fn quad<F: FnMut(f64) -> f64>(f: F, smax: f64) -> Result<f64> {
    let tol = QuadTolerance {
        abs: 1e-13,
        rel: 1e-11,
        max_intervals: 2000,
    };
    match integrate(f, 0.0, smax, tol) {
        Ok(r) => Ok(r.value),
        // rounding noise near a turning point can stall refinement slightly
        // above the target; such estimates are still far inside the
        // distance accuracy
        Err(Error::Quadrature { value, error }) if error <= 1e-9 * value.abs().max(1.0) => Ok(value),
        Err(e) => Err(e),
    }
}

fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    // robust for nearly parallel vectors
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let s: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
    let nd = d.iter().map(|x| x * x).sum::<f64>().sqrt();
    let ns = s.iter().map(|x| x * x).sum::<f64>().sqrt();
    2.0 * nd.atan2(ns)
}

struct Slice<'a> {
    model: &'a WarpedModel,
    a: f64,
    b: f64,
}

impl Slice<'_> {
    fn phi(&self, r: f64) -> f64 {
        self.model.phi(r)
    }

    // radius where φ = L (φ is increasing)
    fn turning_radius(&self, l: f64) -> f64 {
        if l <= 0.0 {
            return 0.0;
        }
        let mut lo = 0.0;
        let mut hi = self.a;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.phi(mid) < l {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * self.a.max(1.0) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    // φ(r0 + h) - φ(r0) without cancellation for small h
    fn phi_increment(&self, r0: f64, h: f64) -> f64 {
        if h < 1e-5 {
            let (_, dp, ddp) = self.model.profile.eval(r0);
            dp * h + 0.5 * ddp * h * h
        } else {
            self.phi(r0 + h) - self.phi(r0)
        }
    }

    // ∫_{r0}^{r1} of the (swept, length) integrands with r = r0 + s², where
    // `gap = φ(r0)² - L²` is supplied exactly by the caller
    fn leg(&self, l: f64, r0: f64, r1: f64, gap: f64) -> Result<(f64, f64)> {
        if r1 <= r0 {
            return Ok((0.0, 0.0));
        }
        let smax = (r1 - r0).sqrt();
        let (p0, dp0, _) = self.model.profile.eval(r0);
        let integrand = |s: f64, num: f64, p: f64| -> f64 {
            let h = s * s;
            let q2 = self.phi_increment(r0, h) * (p + p0) + gap;
            if q2 <= 0.0 || s == 0.0 {
                if gap > 0.0 {
                    return 0.0;
                }
                // limit of 2s / sqrt(φ² - L²) at a turning point
                return num / p0 * 2.0 / (2.0 * p0 * dp0).sqrt();
            }
            num / p * 2.0 * s / q2.sqrt()
        };
        let swept = if l > 0.0 {
            quad(|s| {
                let p = self.phi(r0 + s * s);
                integrand(s, l, p)
            }, smax)?
        } else {
            0.0
        };
        let length = quad(|s| {
            let p = self.phi(r0 + s * s);
            integrand(s, p * p, p)
        }, smax)?;
        Ok((swept, length))
    }

    /// Swept angle and length for initial angle `β ∈ [0, π)` from radius `a`.
    fn shoot(&self, beta: f64) -> Result<(f64, f64)> {
        let pa = self.phi(self.a);
        let l = pa * beta.sin();
        if beta <= std::f64::consts::FRAC_PI_2 {
            let c = pa * beta.cos();
            self.leg(l, self.a, self.b, c * c)
        } else {
            let rt = self.turning_radius(l);
            let l = self.phi(rt);
            let (s1, l1) = self.leg(l, rt, self.a, 0.0)?;
            let (s2, l2) = self.leg(l, rt, self.b, 0.0)?;
            Ok((s1 + s2, l1 + l2))
        }
    }
}

/// Distance between `x` and `p` with the minimizing initial direction.
pub fn distance_with_direction(model: &WarpedModel, x: &PolarPoint, p: &PolarPoint) -> Result<DistanceResult> {
    let k = model.dim;
    if x.dim() != k || p.dim() != k {
        return Err(Error::InvalidArgument("points must match the model dimension".into()));
    }
    let xc = x.to_chart();
    let pc = p.to_chart();
    if xc == pc {
        return Ok(DistanceResult {
            distance: 0.0,
            direction: vec![0.0; k],
            through_pole: false,
        });
    }
    if model.is_euclidean() {
        let d: Vec<f64> = pc.iter().zip(&xc).map(|(a, b)| a - b).collect();
        let n = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        return Ok(DistanceResult {
            distance: n,
            direction: d.iter().map(|v| v / n).collect(),
            through_pole: false,
        });
    }
    if x.r == 0.0 {
        return Ok(DistanceResult {
            distance: p.r,
            direction: p.omega.clone(),
            through_pole: false,
        });
    }
    if p.r == 0.0 {
        return Ok(DistanceResult {
            distance: x.r,
            direction: x.omega.iter().map(|w| -w).collect(),
            through_pole: false,
        });
    }
    let dpsi = angle_between(&x.omega, &p.omega);
    // unit tangential direction at x pointing toward p
    let cosd: f64 = x.omega.iter().zip(&p.omega).map(|(a, b)| a * b).sum();
    let tang: Vec<f64> = p.omega.iter().zip(&x.omega).map(|(b, a)| b - cosd * a).collect();
    let tn = tang.iter().map(|v| v * v).sum::<f64>().sqrt();
    if dpsi < 1.0 && (tn < 1e-15 || dpsi == 0.0) {
        let sign = if p.r > x.r { 1.0 } else { -1.0 };
        return Ok(DistanceResult {
            distance: (p.r - x.r).abs(),
            direction: x.omega.iter().map(|w| sign * w).collect(),
            through_pole: false,
        });
    }
    let pole = DistanceResult {
        distance: x.r + p.r,
        direction: x.omega.iter().map(|w| -w).collect(),
        through_pole: true,
    };
    // antipodal directions: every tangential direction is equivalent
    let tau: Vec<f64> = if tn < 1e-12 {
        super::geodesic::orthogonal_unit(&x.omega)
    } else {
        tang.iter().map(|v| v / tn).collect()
    };
    let x_is_inner = x.r <= p.r;
    let slice = Slice {
        model,
        a: x.r.min(p.r),
        b: x.r.max(p.r),
    };
    let pi = std::f64::consts::PI;
    let g = |beta: f64| -> Result<(f64, f64)> {
        let (s, l) = slice.shoot(beta)?;
        Ok((s - dpsi, l))
    };
    let mut best: Option<(f64, f64)> = None; // (length, beta)
    let betas: Vec<f64> = (0..=SCAN)
        .map(|i| if i == SCAN { pi * (1.0 - 1e-6) } else { pi * i as f64 / SCAN as f64 })
        .collect();
    let mut prev = (betas[0], g(betas[0])?.0);
    for &beta in &betas[1..] {
        let cur = (beta, g(beta)?.0);
        if prev.1 == 0.0 || prev.1.signum() != cur.1.signum() {
            let (mut lo, mut hi, mut glo) = (prev.0, cur.0, prev.1);
            for _ in 0..200 {
                if hi - lo <= 1e-15 {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                let gm = g(mid)?.0;
                if gm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if gm.signum() == glo.signum() {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
            }
            let mut root = 0.5 * (lo + hi);
            // Newton polish on the swept-angle residual
            for _ in 0..2 {
                let h = 1e-7;
                let (gr, _) = g(root)?;
                let (gp, _) = g((root + h).min(pi * (1.0 - 1e-12)))?;
                let slope = (gp - gr) / h;
                if slope.abs() > 1e-12 {
                    let cand = root - gr / slope;
                    if cand > lo - 1e-9 && cand < hi + 1e-9 && g(cand)?.0.abs() < gr.abs() {
                        root = cand;
                    }
                }
            }
            let (_, len) = g(root)?;
            if best.map_or(true, |(bl, _)| len < bl) {
                best = Some((len, root));
            }
        }
        prev = cur;
    }
    // The swept angle starts at 0 and stays below `dpsi` up to the last scan
    // direction, so the minimizer grazes the pole to within the scan gap.
    let Some((len, beta)) = best else {
        return Ok(pole);
    };
    if len >= pole.distance {
        return Ok(pole);
    }
    // initial direction at x: c ω_x + s τ
    let (c, s) = if x_is_inner {
        (beta.cos(), beta.sin())
    } else {
        let l = slice.phi(slice.a) * beta.sin();
        let s = (l / slice.phi(slice.b)).min(1.0);
        (-(1.0 - s * s).sqrt(), s)
    };
    let direction = x.omega.iter().zip(&tau).map(|(w, t)| c * w + s * t).collect();
    Ok(DistanceResult {
        distance: len,
        direction,
        through_pole: false,
    })
}

/// Riemannian distance `d(x, p)`.
pub fn distance(model: &WarpedModel, x: &PolarPoint, p: &PolarPoint) -> Result<f64> {
    Ok(distance_with_direction(model, x, p)?.distance)
}

/// Relative accuracy the shooting solver is designed for.
pub const DISTANCE_ACCURACY: f64 = tolerance::DISTANCE_REL;
