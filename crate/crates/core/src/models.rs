//! Rotationally symmetric model manifolds `dr² + φ(r)² g_{S^{k-1}}`.
//!
//! Points are handled in the geodesic polar chart `X = r ω ∈ ℝ^k`. Tangent
//! vectors are carried in the *orthonormal representation*: the isometry
//! `T_X M → ℝ^k` sending `∂_r` to `ω` and unit spherical directions to the
//! corresponding unit vectors orthogonal to `ω`. Euclidean inner products of
//! representations are metric inner products.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::quadrature::{integrate, QuadTolerance};
use crate::numeric::spline::{CubicSpline, EndCondition};
use crate::tolerance;

/// Curvature hypothesis certified for a profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureClass {
    #[serde(alias = "ricci")]
    RicciNonneg,
    #[serde(alias = "sectional")]
    SectionalNonneg,
}

/// Concave cubic spline profile, extended linearly beyond the last knot.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineProfile {
    spline: CubicSpline,
    slope: f64,
    end: f64,
    end_value: f64,
}

impl SplineProfile {
    /// Knots must start at 0. The spline is clamped to `φ'(0) = 1` and
    /// `φ'(r_N) = slope`, then continued as `φ(r_N) + slope (r - r_N)`.
    pub fn new(knots: Vec<f64>, values: Vec<f64>, slope: f64) -> Result<Self> {
        if knots.first().copied() != Some(0.0) {
            return Err(Error::InvalidArgument("spline profile knots must start at r = 0".into()));
        }
        let spline = CubicSpline::new(knots, values, EndCondition::Clamped(1.0), EndCondition::Clamped(slope))?;
        let end = *spline.knots().last().unwrap();
        let end_value = spline.eval(end).0;
        Ok(Self {
            spline,
            slope,
            end,
            end_value,
        })
    }

    fn eval(&self, r: f64) -> (f64, f64, f64) {
        if r > self.end {
            (self.end_value + self.slope * (r - self.end), self.slope, 0.0)
        } else {
            self.spline.eval(r)
        }
    }

    /// Largest knot second derivative (concavity certificate on knots).
    pub fn max_knot_curvature(&self) -> f64 {
        self.spline
            .knot_second_derivatives()
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Warping function `φ` of a rotationally symmetric model.
#[derive(Debug, Clone, PartialEq)]
pub enum WarpedProfile {
    /// `φ(r) = r`.
    Euclidean,
    /// `φ(r) = α r + (1 - α)(1 - e^{-r})`.
    ConeSmoothed { alpha: f64 },
    /// `φ(r) = α r + (1 - α) a atan(r / a)`: positively curved cap, conical end.
    CappedParaboloid { alpha: f64, scale: f64 },
    Spline(SplineProfile),
    /// `φ(r) = Σ c_i r^i`.
    Polynomial { coeffs: Vec<f64> },
}

impl WarpedProfile {
    pub fn name(&self) -> &'static str {
        match self {
            WarpedProfile::Euclidean => "euclidean",
            WarpedProfile::ConeSmoothed { .. } => "cone_smoothed",
            WarpedProfile::CappedParaboloid { .. } => "capped_paraboloid",
            WarpedProfile::Spline(_) => "spline",
            WarpedProfile::Polynomial { .. } => "polynomial",
        }
    }

    /// `(φ, φ', φ'')` at `r`.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        match self {
            WarpedProfile::Euclidean => (r, 1.0, 0.0),
            WarpedProfile::ConeSmoothed { alpha } => {
                let e = (-r).exp();
                let b = 1.0 - alpha;
                (alpha * r + b * (1.0 - e), alpha + b * e, -b * e)
            }
            WarpedProfile::CappedParaboloid { alpha, scale } => {
                let b = 1.0 - alpha;
                let s = r / scale;
                let q = 1.0 + s * s;
                (
                    alpha * r + b * scale * s.atan(),
                    alpha + b / q,
                    -b * 2.0 * s / (scale * q * q),
                )
            }
            WarpedProfile::Spline(sp) => sp.eval(r),
            WarpedProfile::Polynomial { coeffs } => {
                let (mut v, mut d, mut dd) = (0.0, 0.0, 0.0);
                // pw = r^i, pw1 = r^(i-1), pw2 = r^(i-2)
                let (mut pw, mut pw1, mut pw2) = (1.0, 0.0, 0.0);
                for (i, c) in coeffs.iter().enumerate() {
                    let fi = i as f64;
                    v += c * pw;
                    d += c * fi * pw1;
                    dd += c * fi * (fi - 1.0) * pw2;
                    pw2 = pw1;
                    pw1 = pw;
                    pw *= r;
                }
                (v, d, dd)
            }
        }
    }

    pub fn phi(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    /// `lim φ(r)/r`; infinite for superlinear polynomials.
    pub fn asymptotic_slope(&self) -> f64 {
        match self {
            WarpedProfile::Euclidean => 1.0,
            WarpedProfile::ConeSmoothed { alpha } | WarpedProfile::CappedParaboloid { alpha, .. } => *alpha,
            WarpedProfile::Spline(sp) => sp.slope,
            WarpedProfile::Polynomial { coeffs } => {
                let deg = coeffs.iter().rposition(|c| *c != 0.0).unwrap_or(0);
                match deg {
                    0 => 0.0,
                    1 => coeffs[1],
                    _ if coeffs[deg] > 0.0 => f64::INFINITY,
                    _ => f64::NEG_INFINITY,
                }
            }
        }
    }
}

/// Result of [`validate_profile`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileCertificate {
    pub concavity_violation: f64,
    pub slope_violation: f64,
    pub positivity_violation: f64,
    pub ratio_monotonicity_violation: f64,
    pub asymptote_violation: f64,
    /// `φ(r_max)/r_max - slope` (informational, nonnegative for valid profiles).
    pub asymptote_gap: f64,
    pub accepted: bool,
}

impl ProfileCertificate {
    pub fn max_violation(&self) -> f64 {
        self.concavity_violation
            .max(self.slope_violation)
            .max(self.positivity_violation)
            .max(self.ratio_monotonicity_violation)
            .max(self.asymptote_violation)
    }
}

/// Certifies the curvature sign of `profile` on `grid`.
///
/// Errors on malformed grids and on profiles that are not smooth at the pole
/// (`φ(0) ≠ 0` or `φ'(0) ≠ 1`).
pub fn validate_profile(profile: &WarpedProfile, class: CurvatureClass, grid: &[f64]) -> Result<ProfileCertificate> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty validation grid".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("validation grid must be strictly increasing".into()));
    }
    let last = *grid.last().unwrap();
    if grid[0] < 0.0 || grid[0] > 1e-3 * last.max(1.0) {
        return Err(Error::InvalidArgument("validation grid must start near r = 0".into()));
    }
    let (phi0, dphi0, _) = profile.eval(0.0);
    if phi0.abs() > 1e-12 || (dphi0 - 1.0).abs() > 1e-12 {
        return Err(Error::ConePoint { phi0, dphi0 });
    }
    let mut concavity: f64 = 0.0;
    let mut slope_v: f64 = 0.0;
    let mut positivity: f64 = 0.0;
    let mut ratio_v: f64 = 0.0;
    let mut prev_ratio: Option<f64> = None;
    for &r in grid {
        let (p, dp, ddp) = profile.eval(r);
        concavity = concavity.max(ddp);
        if class == CurvatureClass::SectionalNonneg {
            slope_v = slope_v.max(dp - 1.0).max(-dp);
        }
        if r > 0.0 {
            if p <= 0.0 {
                positivity = positivity.max(-p).max(f64::MIN_POSITIVE);
            }
            let ratio = p / r;
            if let Some(prev) = prev_ratio {
                ratio_v = ratio_v.max(ratio - prev);
            }
            prev_ratio = Some(ratio);
        }
    }
    if let WarpedProfile::Spline(sp) = profile {
        concavity = concavity.max(sp.max_knot_curvature());
    }
    let slope = profile.asymptotic_slope();
    let final_ratio = if last > 0.0 { profile.phi(last) / last } else { 1.0 };
    let gap = final_ratio - slope;
    let asymptote_violation = if slope.is_finite() { (-gap).max(0.0) } else { f64::INFINITY };
    let mut cert = ProfileCertificate {
        concavity_violation: concavity,
        slope_violation: slope_v,
        positivity_violation: positivity,
        ratio_monotonicity_violation: ratio_v,
        asymptote_violation,
        asymptote_gap: gap,
        accepted: false,
    };
    cert.accepted = cert.max_violation() <= tolerance::PROFILE_VIOLATION;
    Ok(cert)
}

/// Default certification grid: dense near the pole, geometric tail to 10⁴.
pub fn default_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (0..=2000).map(|i| i as f64 * 0.01).collect();
    let mut r = 20.0;
    while r < 1e4 {
        r *= 1.02;
        g.push(r);
    }
    g
}

/// Volume of the unit ball in `ℝ^k`, `π^{k/2} / Γ(k/2 + 1)`.
pub fn unit_ball_volume(k: usize) -> f64 {
    use std::f64::consts::PI;
    if k % 2 == 0 {
        let j = k / 2;
        let fact: f64 = (1..=j).map(|i| i as f64).product();
        PI.powi(j as i32) / fact
    } else {
        let j = (k - 1) / 2;
        let fact_j: f64 = (1..=j).map(|i| i as f64).product();
        let fact_k: f64 = (1..=k).map(|i| i as f64).product();
        2f64.powi(k as i32) * PI.powi(j as i32) * fact_j / fact_k
    }
}

/// A point in polar coordinates about the pole.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarPoint {
    pub r: f64,
    pub omega: Vec<f64>,
}

impl PolarPoint {
    pub fn new(r: f64, omega: Vec<f64>) -> Result<Self> {
        let norm = omega.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r < 0.0 || !r.is_finite() {
            return Err(Error::InvalidArgument(format!("radius must be finite and nonnegative, got {r}")));
        }
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("direction must be a unit vector, |omega| = {norm}")));
        }
        Ok(Self { r, omega })
    }

    /// From geodesic polar chart coordinates `X = r ω`.
    pub fn from_chart(x: &[f64]) -> Self {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let omega = if r > 0.0 {
            x.iter().map(|v| v / r).collect()
        } else {
            let mut e = vec![0.0; x.len()];
            e[0] = 1.0;
            e
        };
        Self { r, omega }
    }

    pub fn to_chart(&self) -> Vec<f64> {
        self.omega.iter().map(|w| w * self.r).collect()
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }
}

/// A certified model manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpedModel {
    pub dim: usize,
    pub profile: WarpedProfile,
    pub class: CurvatureClass,
    pub theta: f64,
}

impl WarpedModel {
    /// Certifies the profile on [`default_grid`] and sets `theta = slope^{dim-1}`.
    pub fn new(dim: usize, profile: WarpedProfile, class: CurvatureClass) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument(format!("model dimension must be at least 2, got {dim}")));
        }
        let cert = validate_profile(&profile, class, &default_grid())?;
        if !cert.accepted {
            return Err(Error::ProfileRejected(format!(
                "{} profile violates the curvature certificate by {:e}",
                profile.name(),
                cert.max_violation()
            )));
        }
        let slope = profile.asymptotic_slope();
        if !(slope > 0.0 && slope <= 1.0) {
            return Err(Error::ProfileRejected(format!("asymptotic slope {slope} outside (0, 1]")));
        }
        let theta = slope.powi(dim as i32 - 1);
        Ok(Self {
            dim,
            profile,
            class,
            theta,
        })
    }

    pub fn euclidean(dim: usize) -> Self {
        Self {
            dim,
            profile: WarpedProfile::Euclidean,
            class: CurvatureClass::SectionalNonneg,
            theta: 1.0,
        }
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self.profile, WarpedProfile::Euclidean)
    }

    pub fn phi(&self, r: f64) -> f64 {
        self.profile.phi(r)
    }

    /// Radial and tangential sectional curvatures `(-φ''/φ, (1-φ'²)/φ²)`.
    ///
    /// Evaluated at `max(r, 1e-7)`; cone-smoothed profiles have an
    /// integrable `1/r` curvature singularity at the pole.
    pub fn sectional_curvatures(&self, r: f64) -> (f64, f64) {
        if self.is_euclidean() {
            return (0.0, 0.0);
        }
        let r = r.max(1e-7);
        let (p, dp, ddp) = self.profile.eval(r);
        (-ddp / p, (1.0 - dp * dp) / (p * p))
    }

    /// `φ(r)/r`, with the limit 1 at the pole.
    pub fn tangential_scale(&self, r: f64) -> f64 {
        if r <= 0.0 || self.is_euclidean() {
            1.0
        } else {
            self.phi(r) / r
        }
    }

    /// Riemannian volume density of the polar chart at radius `r`.
    pub fn chart_density(&self, r: f64) -> f64 {
        self.tangential_scale(r).powi(self.dim as i32 - 1)
    }

    /// Orthonormal representation of a chart vector `dx` attached at `x`.
    pub fn rep_from_chart(&self, x: &[f64], dx: &[f64]) -> Vec<f64> {
        let p = PolarPoint::from_chart(x);
        let s = self.tangential_scale(p.r);
        let radial: f64 = p.omega.iter().zip(dx).map(|(a, b)| a * b).sum();
        dx.iter()
            .zip(&p.omega)
            .map(|(d, w)| radial * w + s * (d - radial * w))
            .collect()
    }

    /// Inverse of [`Self::rep_from_chart`].
    pub fn chart_from_rep(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        let p = PolarPoint::from_chart(x);
        let s = self.tangential_scale(p.r);
        let radial: f64 = p.omega.iter().zip(v).map(|(a, b)| a * b).sum();
        v.iter()
            .zip(&p.omega)
            .map(|(d, w)| radial * w + (d - radial * w) / s)
            .collect()
    }

    /// Chart metric `G = ωωᵀ + (φ/r)² (I - ωωᵀ)`.
    pub fn chart_metric(&self, x: &[f64]) -> nalgebra::DMatrix<f64> {
        let p = PolarPoint::from_chart(x);
        let s2 = self.tangential_scale(p.r).powi(2);
        let k = x.len();
        nalgebra::DMatrix::from_fn(k, k, |i, j| {
            let ww = p.omega[i] * p.omega[j];
            let id = if i == j { 1.0 } else { 0.0 };
            ww + s2 * (id - ww)
        })
    }
}

/// Volume of the geodesic ball of radius `r` about the pole:
/// `k ω_k ∫₀^r φ(s)^{k-1} ds`.
pub fn ball_volume(model: &WarpedModel, r: f64) -> Result<f64> {
    if r < 0.0 {
        return Err(Error::InvalidArgument(format!("negative radius {r}")));
    }
    let k = model.dim;
    let area = k as f64 * unit_ball_volume(k);
    if model.is_euclidean() {
        return Ok(unit_ball_volume(k) * r.powi(k as i32));
    }
    let tol = QuadTolerance {
        abs: tolerance::QUAD_ABS,
        rel: tolerance::QUAD_REL,
        max_intervals: 4000,
    };
    let res = integrate(|s| model.phi(s).powi(k as i32 - 1), 0.0, r, tol)?;
    Ok(area * res.value)
}

/// One radius of the θ convergence trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaTracePoint {
    pub r: f64,
    pub slope_ratio: f64,
    pub volume_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaEstimate {
    pub theta: f64,
    pub slope_estimate: f64,
    pub volume_estimate: f64,
    pub trace: Vec<ThetaTracePoint>,
}

// Neville extrapolation to h = 0 of samples (h_i, v_i).
fn extrapolate_to_zero(h: &[f64], v: &[f64]) -> f64 {
    let mut p = v.to_vec();
    let n = p.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (h[i + m] * p[i] - h[i] * p[i + 1]) / (h[i + m] - h[i]);
        }
    }
    p[0]
}

/// Estimates θ from `(φ(r)/r)^{k-1}` (primary) and `|B_r| / (ω_k r^k)`
/// (cross-check), each extrapolated in `1/r` over radii `r_max / 2^j`,
/// `j = 0..=k`. Stores the result in `model.theta`.
pub fn asymptotic_volume_ratio(model: &mut WarpedModel, r_max: f64) -> Result<ThetaEstimate> {
    let k = model.dim;
    if !(r_max > 0.0) {
        return Err(Error::InvalidArgument("r_max must be positive".into()));
    }
    let wk = unit_ball_volume(k);
    let mut trace = Vec::with_capacity(k + 2);
    for j in 0..=k + 1 {
        let r = r_max / 2f64.powi(j as i32);
        let slope_ratio = (model.phi(r) / r).powi(k as i32 - 1);
        let volume_ratio = ball_volume(model, r)? / (wk * r.powi(k as i32));
        trace.push(ThetaTracePoint {
            r,
            slope_ratio,
            volume_ratio,
        });
    }
    let fine = &trace[..=k];
    let h: Vec<f64> = fine.iter().map(|p| 1.0 / p.r).collect();
    let s: Vec<f64> = fine.iter().map(|p| p.slope_ratio).collect();
    let v: Vec<f64> = fine.iter().map(|p| p.volume_ratio).collect();
    let slope_estimate = extrapolate_to_zero(&h, &s);
    let volume_estimate = extrapolate_to_zero(&h, &v);
    // stabilization: the coarser window must agree with the finer one
    let coarse = &trace[1..];
    let hc: Vec<f64> = coarse.iter().map(|p| 1.0 / p.r).collect();
    let sc: Vec<f64> = coarse.iter().map(|p| p.slope_ratio).collect();
    let slope_coarse = extrapolate_to_zero(&hc, &sc);
    if (slope_coarse - slope_estimate).abs() > tolerance::THETA_AGREEMENT
        || (slope_estimate - volume_estimate).abs() > tolerance::THETA_AGREEMENT
    {
        return Err(Error::ThetaMismatch {
            slope: slope_estimate,
            volume: volume_estimate,
        });
    }
    model.theta = slope_estimate;
    Ok(ThetaEstimate {
        theta: slope_estimate,
        slope_estimate,
        volume_estimate,
        trace,
    })
}

/// Bishop–Gromov quotient `|B_r| / (ω_k r^k)` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BishopGromovReport {
    pub radii: Vec<f64>,
    pub quotients: Vec<f64>,
    /// Largest increase between consecutive radii (≤ 0 when monotone).
    pub max_increase: f64,
    pub final_quotient: f64,
}

pub fn bishop_gromov(model: &WarpedModel, radii: &[f64]) -> Result<BishopGromovReport> {
    let wk = unit_ball_volume(model.dim);
    let mut quotients = Vec::with_capacity(radii.len());
    for &r in radii {
        if r <= 0.0 {
            return Err(Error::InvalidArgument("Bishop-Gromov radii must be positive".into()));
        }
        quotients.push(ball_volume(model, r)? / (wk * r.powi(model.dim as i32)));
    }
    let max_increase = quotients
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(BishopGromovReport {
        radii: radii.to_vec(),
        final_quotient: *quotients.last().unwrap_or(&f64::NAN),
        quotients,
        max_increase,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cone(alpha: f64) -> WarpedProfile {
        WarpedProfile::ConeSmoothed { alpha }
    }

    #[test]
    fn euclidean_profile_has_zero_violation() {
        let cert = validate_profile(&WarpedProfile::Euclidean, CurvatureClass::RicciNonneg, &default_grid()).unwrap();
        assert!(cert.accepted);
        assert_eq!(cert.max_violation(), 0.0);
    }

    #[test]
    fn cone_smoothed_sectional_accepted() {
        let cert = validate_profile(&cone(0.5), CurvatureClass::SectionalNonneg, &default_grid()).unwrap();
        assert!(cert.accepted, "{cert:?}");
    }

    #[test]
    fn convex_profile_rejected() {
        let p = WarpedProfile::Polynomial { coeffs: vec![0.0, 1.0, 1.0] };
        let cert = validate_profile(&p, CurvatureClass::RicciNonneg, &default_grid()).unwrap();
        assert!(!cert.accepted);
        assert!((cert.concavity_violation - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cone_point_is_an_error() {
        let p = WarpedProfile::Polynomial { coeffs: vec![0.0, 0.5] };
        assert!(matches!(
            validate_profile(&p, CurvatureClass::RicciNonneg, &default_grid()),
            Err(Error::ConePoint { .. })
        ));
        let p = WarpedProfile::Polynomial { coeffs: vec![0.1, 1.0] };
        assert!(matches!(
            validate_profile(&p, CurvatureClass::RicciNonneg, &default_grid()),
            Err(Error::ConePoint { .. })
        ));
    }

    #[test]
    fn malformed_grids() {
        let p = WarpedProfile::Euclidean;
        assert!(validate_profile(&p, CurvatureClass::RicciNonneg, &[]).is_err());
        assert!(validate_profile(&p, CurvatureClass::RicciNonneg, &[0.0, 1.0, 1.0]).is_err());
        assert!(validate_profile(&p, CurvatureClass::RicciNonneg, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn polynomial_derivatives() {
        let p = WarpedProfile::Polynomial { coeffs: vec![0.0, 1.0, -0.25, 0.5] };
        let (v, d, dd) = p.eval(2.0);
        assert!((v - (2.0 - 1.0 + 4.0)).abs() < 1e-14);
        assert!((d - (1.0 - 1.0 + 6.0)).abs() < 1e-14);
        assert!((dd - (-0.5 + 6.0)).abs() < 1e-14);
    }

    #[test]
    fn spline_profile_concavity_on_knots() {
        // samples of the cone-smoothed profile are concave
        let knots: Vec<f64> = (0..=60).map(|i| i as f64 * 0.5).collect();
        let vals: Vec<f64> = knots.iter().map(|r| cone(0.5).phi(*r)).collect();
        let sp = SplineProfile::new(knots, vals, 0.5).unwrap();
        assert!(sp.max_knot_curvature() <= 0.0);
        let model = WarpedModel::new(2, WarpedProfile::Spline(sp), CurvatureClass::SectionalNonneg).unwrap();
        assert!((model.theta - 0.5).abs() < 1e-15);
        // convex knots are rejected
        let knots = vec![0.0, 1.0, 2.0];
        let sp = SplineProfile::new(knots, vec![0.0, 1.0, 2.5], 1.0).unwrap();
        assert!(WarpedModel::new(2, WarpedProfile::Spline(sp), CurvatureClass::RicciNonneg).is_err());
    }

    #[test]
    fn unit_ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
        assert!((4.0 * unit_ball_volume(4) - 2.0 * unit_ball_volume(2) * unit_ball_volume(2)).abs() < 1e-13);
        assert!((unit_ball_volume(5) - 8.0 * PI * PI / 15.0).abs() < 1e-14);
        // recursion oracle w_k = w_{k-2} 2π/k
        let mut w = [1.0, 2.0].to_vec();
        for k in 2..=12 {
            w.push(w[k - 2] * 2.0 * PI / k as f64);
            assert!((unit_ball_volume(k) - w[k]).abs() < 1e-13 * w[k], "k = {k}");
        }
    }

    #[test]
    fn euclidean_ball_volumes() {
        let m = WarpedModel::euclidean(2);
        assert!((ball_volume(&m, 1.0).unwrap() - PI).abs() < 1e-14);
        let m = WarpedModel::euclidean(3);
        assert!((ball_volume(&m, 2.0).unwrap() - 32.0 * PI / 3.0).abs() < 1e-12);
        // quadrature path for the Euclidean profile as a polynomial
        let m = WarpedModel::new(3, WarpedProfile::Polynomial { coeffs: vec![0.0, 1.0] }, CurvatureClass::RicciNonneg).unwrap();
        assert!((ball_volume(&m, 2.0).unwrap() - 32.0 * PI / 3.0).abs() < 1e-10 * 32.0 * PI / 3.0);
    }

    #[test]
    fn cone_ball_volume_matches_trapezoid_oracle() {
        let m = WarpedModel::new(2, cone(0.5), CurvatureClass::SectionalNonneg).unwrap();
        let n = 1_000_000;
        let r = 10.0;
        let h = r / n as f64;
        let mut s = 0.5 * (m.phi(0.0) + m.phi(r));
        for i in 1..n {
            s += m.phi(i as f64 * h);
        }
        let oracle = 2.0 * PI * s * h;
        let v = ball_volume(&m, r).unwrap();
        assert!((v - oracle).abs() < 1e-8 * oracle, "{v} vs {oracle}");
    }

    #[test]
    fn theta_estimators() {
        let mut m = WarpedModel::euclidean(3);
        let est = asymptotic_volume_ratio(&mut m, 1e3).unwrap();
        assert!((est.theta - 1.0).abs() < 1e-12);
        let mut m = WarpedModel::new(2, cone(0.5), CurvatureClass::SectionalNonneg).unwrap();
        let est = asymptotic_volume_ratio(&mut m, 1e3).unwrap();
        // analytic slope at R = 1e3 is 0.5005; extrapolation removes the 1/R term
        assert!((est.trace[0].slope_ratio - 0.5005).abs() < 1e-6);
        assert!((est.theta - 0.5).abs() < 1e-4);
        assert!((est.slope_estimate - est.volume_estimate).abs() < 1e-6);
        assert_eq!(m.theta, est.theta);
    }

    #[test]
    fn theta_mismatch_when_slope_not_reached() {
        let mut m = WarpedModel::new(2, WarpedProfile::CappedParaboloid { alpha: 0.5, scale: 50.0 }, CurvatureClass::SectionalNonneg).unwrap();
        assert!(matches!(asymptotic_volume_ratio(&mut m, 20.0), Err(Error::ThetaMismatch { .. })));
    }

    #[test]
    fn chart_representation_round_trip() {
        let m = WarpedModel::new(3, cone(0.3), CurvatureClass::SectionalNonneg).unwrap();
        let x = [0.3, -0.4, 1.2];
        let dx = [0.5, 0.1, -0.7];
        let v = m.rep_from_chart(&x, &dx);
        let back = m.chart_from_rep(&x, &v);
        for i in 0..3 {
            assert!((back[i] - dx[i]).abs() < 1e-14);
        }
        // |v|² = dxᵀ G dx
        let g = m.chart_metric(&x);
        let d = nalgebra::DVector::from_column_slice(&dx);
        let q = (d.transpose() * &g * &d)[(0, 0)];
        let vv: f64 = v.iter().map(|a| a * a).sum();
        assert!((q - vv).abs() < 1e-14);
    }
}
