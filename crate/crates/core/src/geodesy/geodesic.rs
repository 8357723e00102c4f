//! Exponential map of a warped model by integration in the 2-plane of motion.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::models::{PolarPoint, WarpedModel};
use crate::numeric::ode::{integrate, DenseSolution, OdeOptions};
use crate::tolerance;

/// Number of uniform report samples kept on every curve (plus the endpoint).
pub const REPORT_SAMPLES: usize = 512;

#[derive(Debug, Clone)]
pub struct GeodesicSample {
    pub t: f64,
    pub position: PolarPoint,
    /// Velocity in the orthonormal representation at `position`.
    pub velocity: Vec<f64>,
    /// Parallel frame; column `i` is `E_i(t)` with `E_i(0) = e_i`.
    pub frame: DMatrix<f64>,
}

#[derive(Debug, Clone)]
enum Motion {
    /// `z(t) = z0 + t ż0` in the plane (Euclidean ambient or radial lines).
    Linear,
    Planar(DenseSolution),
}

/// A geodesic `t ↦ exp_x(t v)` on `[0, t_max]`.
///
/// The motion takes place in the plane spanned by the pole direction `e1`
/// and the tangential part `e2` of `v`; plane coordinates `z` are geodesic
/// polar coordinates of the 2-dimensional totally geodesic slice.
#[derive(Debug, Clone)]
pub struct GeodesicCurve {
    pub start: PolarPoint,
    pub initial_velocity: Vec<f64>,
    pub t_max: f64,
    pub samples: Vec<GeodesicSample>,
    model: WarpedModel,
    e1: Vec<f64>,
    e2: Vec<f64>,
    z0: [f64; 2],
    zdot0: [f64; 2],
    speed: f64,
    tangent_angle0: f64,
    motion: Motion,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// A unit vector orthogonal to `e` (Gram–Schmidt on the standard basis).
pub(crate) fn orthogonal_unit(e: &[f64]) -> Vec<f64> {
    let k = e.len();
    let mut best = 0;
    for i in 1..k {
        if e[i].abs() < e[best].abs() {
            best = i;
        }
    }
    let mut v = vec![0.0; k];
    v[best] = 1.0;
    let c = dot(&v, e);
    for i in 0..k {
        v[i] -= c * e[i];
    }
    let n = norm(&v);
    v.iter().map(|x| x / n).collect()
}

// Plane-of-motion acceleration for the state (z, ż).
fn plane_rhs(model: &WarpedModel, y: &[f64], dy: &mut [f64]) {
    dy[0] = y[2];
    dy[1] = y[3];
    let rho = (y[0] * y[0] + y[1] * y[1]).sqrt();
    if rho < 1e-12 {
        dy[2] = 0.0;
        dy[3] = 0.0;
        return;
    }
    let er = [y[0] / rho, y[1] / rho];
    let ep = [-er[1], er[0]];
    let rdot = y[2] * er[0] + y[3] * er[1];
    let psidot = (y[2] * ep[0] + y[3] * ep[1]) / rho;
    let (p, dp, _) = model.profile.eval(rho);
    let a_r = (p * dp - rho) * psidot * psidot;
    let a_p = 2.0 * rdot * psidot * (1.0 - rho * dp / p);
    dy[2] = a_r * er[0] + a_p * ep[0];
    dy[3] = a_r * er[1] + a_p * ep[1];
}

impl GeodesicCurve {
    /// Plane state `(z, ż)` at parameter `t`.
    pub fn plane_state(&self, t: f64) -> [f64; 4] {
        match &self.motion {
            Motion::Linear => [
                self.z0[0] + t * self.zdot0[0],
                self.z0[1] + t * self.zdot0[1],
                self.zdot0[0],
                self.zdot0[1],
            ],
            Motion::Planar(sol) => {
                let mut y = [0.0; 4];
                sol.eval_into(t, &mut y);
                y
            }
        }
    }

    fn lift(&self, a: f64, b: f64) -> Vec<f64> {
        self.e1.iter().zip(&self.e2).map(|(u, v)| a * u + b * v).collect()
    }

    // radial unit vector, rep velocity (plane coordinates), radius
    fn plane_kinematics(&self, t: f64) -> ([f64; 2], [f64; 2], f64) {
        let y = self.plane_state(t);
        let rho = (y[0] * y[0] + y[1] * y[1]).sqrt();
        if rho < 1e-300 {
            let s = (y[2] * y[2] + y[3] * y[3]).sqrt();
            return ([y[2] / s, y[3] / s], [y[2], y[3]], 0.0);
        }
        let er = [y[0] / rho, y[1] / rho];
        let ep = [-er[1], er[0]];
        let radial = y[2] * er[0] + y[3] * er[1];
        let tang = (y[2] * ep[0] + y[3] * ep[1]) * self.model.tangential_scale(rho);
        (er, [radial * er[0] + tang * ep[0], radial * er[1] + tang * ep[1]], rho)
    }

    /// Chart coordinates `r ω` of `γ(t)`.
    pub fn chart_position(&self, t: f64) -> Vec<f64> {
        let y = self.plane_state(t);
        self.lift(y[0], y[1])
    }

    pub fn position(&self, t: f64) -> PolarPoint {
        PolarPoint::from_chart(&self.chart_position(t))
    }

    /// Velocity `γ'(t)` in the orthonormal representation at `γ(t)`.
    pub fn velocity(&self, t: f64) -> Vec<f64> {
        let (_, v, _) = self.plane_kinematics(t);
        self.lift(v[0], v[1])
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    /// Rotation angle of the in-plane parallel frame at `t`.
    fn frame_angle(&self, t: f64) -> f64 {
        let (_, v, _) = self.plane_kinematics(t);
        v[1].atan2(v[0]) - self.tangent_angle0
    }

    /// Parallel frame `E(t)`; columns are the transported initial basis.
    pub fn frame(&self, t: f64) -> DMatrix<f64> {
        let k = self.e1.len();
        let b = self.frame_angle(t);
        let (c, s) = (b.cos(), b.sin());
        DMatrix::from_fn(k, k, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            let pp = self.e1[i] * self.e1[j] + self.e2[i] * self.e2[j];
            let rot = self.e2[i] * self.e1[j] - self.e1[i] * self.e2[j];
            id + (c - 1.0) * pp + s * rot
        })
    }

    /// Curvature matrix `S_ij(t) = R(γ', E_i, γ', E_j)` in the parallel frame.
    pub fn curvature_in_frame(&self, t: f64, out: &mut DMatrix<f64>) {
        let k = self.e1.len();
        out.fill(0.0);
        if self.model.is_euclidean() || self.speed == 0.0 {
            return;
        }
        let (er, v, rho) = self.plane_kinematics(t);
        let (k_rad, k_tan) = self.model.sectional_curvatures(rho);
        let c = ((v[0] * er[0] + v[1] * er[1]) / self.speed).clamp(-1.0, 1.0);
        let s2 = 1.0 - c * c;
        let v2 = self.speed * self.speed;
        let normal_coef = v2 * (k_rad * c * c + k_tan * s2);
        // in-plane unit normal to the initial tangent, carried by the frame
        let t0 = [self.tangent_angle0.cos(), self.tangent_angle0.sin()];
        let n0 = self.lift(-t0[1], t0[0]);
        for i in 0..k {
            for j in 0..k {
                let pp = self.e1[i] * self.e1[j] + self.e2[i] * self.e2[j];
                let id = if i == j { 1.0 } else { 0.0 };
                out[(i, j)] = v2 * k_rad * n0[i] * n0[j] + normal_coef * (id - pp);
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.e1.len()
    }

    pub fn model(&self) -> &WarpedModel {
        &self.model
    }

    /// Largest relative deviation of `|γ'|` from its initial value over the samples.
    pub fn energy_drift(&self) -> f64 {
        if self.speed == 0.0 {
            return 0.0;
        }
        self.samples
            .iter()
            .map(|s| (norm(&s.velocity) - self.speed).abs() / self.speed)
            .fold(0.0, f64::max)
    }

    /// Largest entry of `EᵀE - I` over the samples.
    pub fn frame_defect(&self) -> f64 {
        let k = self.dim();
        let id = DMatrix::<f64>::identity(k, k);
        self.samples
            .iter()
            .map(|s| (s.frame.transpose() * &s.frame - &id).amax())
            .fold(0.0, f64::max)
    }
}

/// Integrates `t ↦ exp_x(t v)` on `[0, t]` with local tolerance `tol`.
///
/// `v` is given in the orthonormal representation at `x`.
pub fn exp_map(model: &WarpedModel, x: &PolarPoint, v: &[f64], t: f64) -> Result<(PolarPoint, GeodesicCurve)> {
    exp_map_with_tol(model, x, v, t, tolerance::ODE)
}

pub fn exp_map_with_tol(
    model: &WarpedModel,
    x: &PolarPoint,
    v: &[f64],
    t: f64,
    tol: f64,
) -> Result<(PolarPoint, GeodesicCurve)> {
    let k = model.dim;
    if x.dim() != k || v.len() != k {
        return Err(Error::InvalidArgument(format!(
            "point and velocity must have dimension {k}, got {} and {}",
            x.dim(),
            v.len()
        )));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("geodesic parameter must be finite and nonnegative, got {t}")));
    }
    let speed = norm(v);
    if speed == 0.0 {
        return Err(Error::InvalidArgument("initial velocity must be nonzero".into()));
    }
    let (e1, e2, z0, zdot0) = if x.r == 0.0 {
        let e1: Vec<f64> = v.iter().map(|c| c / speed).collect();
        let e2 = orthogonal_unit(&e1);
        (e1, e2, [0.0, 0.0], [speed, 0.0])
    } else {
        let e1 = x.omega.clone();
        let radial = dot(v, &e1);
        let tang: Vec<f64> = v.iter().zip(&e1).map(|(a, w)| a - radial * w).collect();
        let tn = norm(&tang);
        let e2 = if tn > 1e-14 * speed {
            tang.iter().map(|c| c / tn).collect()
        } else {
            orthogonal_unit(&e1)
        };
        let tn = if tn > 1e-14 * speed { tn } else { 0.0 };
        // chart angular speed from the orthonormal tangential component
        (e1, e2, [x.r, 0.0], [radial, tn / model.tangential_scale(x.r)])
    };
    let linear = model.is_euclidean() || zdot0[1] == 0.0 || t == 0.0;
    let motion = if linear {
        Motion::Linear
    } else {
        let opts = OdeOptions::with_tol(tol);
        let y0 = [z0[0], z0[1], zdot0[0], zdot0[1]];
        let sol = integrate(|_, y, dy| plane_rhs(model, y, dy), 0.0, &y0, t, opts)?;
        Motion::Planar(sol)
    };
    let mut curve = GeodesicCurve {
        start: x.clone(),
        initial_velocity: v.to_vec(),
        t_max: t,
        samples: Vec::new(),
        model: model.clone(),
        e1,
        e2,
        z0,
        zdot0,
        speed,
        tangent_angle0: 0.0,
        motion,
    };
    let (_, v0, _) = curve.plane_kinematics(0.0);
    curve.tangent_angle0 = v0[1].atan2(v0[0]);
    let mut samples = Vec::with_capacity(REPORT_SAMPLES + 1);
    for i in 0..=REPORT_SAMPLES {
        let ti = t * i as f64 / REPORT_SAMPLES as f64;
        samples.push(GeodesicSample {
            t: ti,
            position: curve.position(ti),
            velocity: curve.velocity(ti),
            frame: curve.frame(ti),
        });
    }
    curve.samples = samples;
    let drift = curve.energy_drift();
    if drift > tolerance::GEODESIC_INVARIANT.max(10.0 * tol) {
        return Err(Error::Integration {
            t,
            reason: format!("speed drift {drift:e} exceeds the invariant tolerance"),
        });
    }
    let end = curve.position(t);
    Ok((end, curve))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{CurvatureClass, WarpedProfile};

    fn cone(alpha: f64, dim: usize) -> WarpedModel {
        WarpedModel::new(dim, WarpedProfile::ConeSmoothed { alpha }, CurvatureClass::SectionalNonneg).unwrap()
    }

    #[test]
    fn euclidean_straight_lines() {
        let m = WarpedModel::euclidean(3);
        let x = PolarPoint::from_chart(&[0.3, -0.2, 0.5]);
        let v = [0.7, 0.1, -0.4];
        let (end, curve) = exp_map(&m, &x, &v, 2.5).unwrap();
        let want: Vec<f64> = x.to_chart().iter().zip(&v).map(|(a, b)| a + 2.5 * b).collect();
        let got = end.to_chart();
        for i in 0..3 {
            assert!((got[i] - want[i]).abs() < 1e-12);
        }
        assert!(curve.frame_defect() < 1e-12);
        assert!(curve.energy_drift() < 1e-14);
    }

    #[test]
    fn radial_from_pole() {
        let m = cone(0.5, 2);
        let x = PolarPoint::new(0.0, vec![1.0, 0.0]).unwrap();
        let (end, _) = exp_map(&m, &x, &[0.0, 2.0], 1.5).unwrap();
        assert!((end.r - 3.0).abs() < 1e-14);
        assert!((end.omega[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn conserves_speed_and_clairaut() {
        let m = cone(0.5, 3);
        let x = PolarPoint::from_chart(&[1.0, 0.5, -0.2]);
        let v = [-0.8, 0.9, 0.3];
        let (_, curve) = exp_map(&m, &x, &v, 6.0).unwrap();
        assert!(curve.energy_drift() < 1e-9);
        assert!(curve.frame_defect() < 1e-9);
        // Clairaut: φ(r) × tangential speed is constant
        let l = |s: &GeodesicSample| {
            let radial: f64 = s.velocity.iter().zip(&s.position.omega).map(|(a, b)| a * b).sum();
            let vv: f64 = s.velocity.iter().map(|a| a * a).sum();
            m.phi(s.position.r) * (vv - radial * radial).max(0.0).sqrt()
        };
        let l0 = l(&curve.samples[0]);
        for s in &curve.samples {
            assert!((l(s) - l0).abs() < 1e-8, "{} vs {l0}", l(s));
        }
    }

    #[test]
    fn frame_is_parallel_in_euclidean_plane_curve_through_cone() {
        let m = cone(0.5, 2);
        let x = PolarPoint::from_chart(&[2.0, 0.0]);
        let (_, curve) = exp_map(&m, &x, &[0.0, 1.0], 3.0).unwrap();
        // the first frame vector follows the tangent
        for s in &curve.samples {
            let e = s.frame.column(1);
            let v = &s.velocity;
            assert!((e[0] - v[0]).abs() < 1e-9 && (e[1] - v[1]).abs() < 1e-9);
        }
    }
}
