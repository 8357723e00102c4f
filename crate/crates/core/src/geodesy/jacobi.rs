//! Matrix Jacobi fields `P'' = -P S`, the Riccati quantity `Q = P⁻¹P'`, and
//! the comparison checks built on them.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geodesy::geodesic::{GeodesicCurve, REPORT_SAMPLES};
use crate::numeric::ode::{integrate, DenseSolution, OdeOptions};
use crate::numeric::quadrature::simpson_samples;
use crate::tolerance;

/// A symmetric curvature matrix `S(t)` along a curve.
pub trait CurvatureField: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, out: &mut DMatrix<f64>);
}

impl CurvatureField for GeodesicCurve {
    fn dim(&self) -> usize {
        GeodesicCurve::dim(self)
    }
    fn eval(&self, t: f64, out: &mut DMatrix<f64>) {
        self.curvature_in_frame(t, out)
    }
}

/// `S(t) ≡ S₀`.
#[derive(Debug, Clone)]
pub struct ConstantCurvature(pub DMatrix<f64>);

impl CurvatureField for ConstantCurvature {
    fn dim(&self) -> usize {
        self.0.nrows()
    }
    fn eval(&self, _t: f64, out: &mut DMatrix<f64>) {
        out.copy_from(&self.0);
    }
}

/// `S(t)` given by a closure.
pub struct FnCurvature<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(f64, &mut DMatrix<f64>) + Sync> CurvatureField for FnCurvature<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, t: f64, out: &mut DMatrix<f64>) {
        (self.f)(t, out)
    }
}

/// Initial data `P(0)`, `P'(0)` and block sizes `(n, m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiInit {
    pub p0: DMatrix<f64>,
    pub dp0: DMatrix<f64>,
    pub block_dims: (usize, usize),
}

impl JacobiInit {
    /// `P(0) = I`, `P'(0) = hessian`.
    pub fn identity(hessian: DMatrix<f64>) -> Self {
        let k = hessian.nrows();
        Self {
            p0: DMatrix::identity(k, k),
            dp0: hessian,
            block_dims: (k, 0),
        }
    }

    /// `P(0) = diag(I_n, 0)`, `P'(0) = [[a, b], [0, I_m]]`.
    pub fn block(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        let m = b.ncols();
        if a.ncols() != n || b.nrows() != n {
            return Err(Error::InvalidArgument("block initial data has inconsistent shapes".into()));
        }
        let k = n + m;
        let mut p0 = DMatrix::zeros(k, k);
        let mut dp0 = DMatrix::zeros(k, k);
        for i in 0..n {
            p0[(i, i)] = 1.0;
            for j in 0..n {
                dp0[(i, j)] = a[(i, j)];
            }
            for j in 0..m {
                dp0[(i, n + j)] = b[(i, j)];
            }
        }
        for j in 0..m {
            dp0[(n + j, n + j)] = 1.0;
        }
        Ok(Self {
            p0,
            dp0,
            block_dims: (n, m),
        })
    }

    /// `lim_{t→0} t^{-m} det P(t)`.
    pub fn normalized_det_limit(&self) -> f64 {
        let (n, m) = self.block_dims;
        let mut mm = self.p0.clone();
        for i in n..n + m {
            for j in 0..n + m {
                mm[(i, j)] = self.dp0[(i, j)];
            }
        }
        mm.determinant()
    }
}

/// Jacobi matrix curves on a uniform sample grid.
#[derive(Debug, Clone)]
pub struct JacobiSystem {
    pub block_dims: (usize, usize),
    pub init: JacobiInit,
    pub t: Vec<f64>,
    pub p: Vec<DMatrix<f64>>,
    pub dp: Vec<DMatrix<f64>>,
    pub s: Vec<DMatrix<f64>>,
    /// `max |P'Pᵀ - (P'Pᵀ)ᵀ|` over samples.
    pub symmetry_residual: f64,
    /// Smallest eigenvalue of `S` over samples.
    pub min_curvature_eigenvalue: f64,
    /// Largest `‖P'' + P S‖` at interior samples, by differencing the dense `P'`.
    pub ode_residual: f64,
    pub steps: usize,
}

impl JacobiSystem {
    pub fn dim(&self) -> usize {
        self.init.p0.nrows()
    }

    pub fn det(&self, i: usize) -> f64 {
        self.p[i].clone().determinant()
    }

    /// `Q = P⁻¹ P'` at sample `i` when `P` is invertible.
    pub fn q(&self, i: usize) -> Option<DMatrix<f64>> {
        self.p[i].clone().lu().solve(&self.dp[i])
    }

    pub fn trace_q(&self, i: usize) -> Option<f64> {
        self.q(i).map(|q| q.trace())
    }

    pub fn t_max(&self) -> f64 {
        *self.t.last().unwrap()
    }
}

fn unpack(y: &[f64], k: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let p = DMatrix::from_column_slice(k, k, &y[..k * k]);
    let dp = DMatrix::from_column_slice(k, k, &y[k * k..]);
    (p, dp)
}

// P(t) with its last m rows divided by t, so that the block case is regular at 0
fn scaled_p(sol: &DenseSolution, k: usize, m: usize, t: f64) -> DMatrix<f64> {
    let y = sol.eval(t);
    let mut p = DMatrix::from_column_slice(k, k, &y[..k * k]);
    if m > 0 {
        for i in k - m..k {
            for j in 0..k {
                p[(i, j)] /= t;
            }
        }
    }
    p
}

fn relative_smallest_singular_value(p: &DMatrix<f64>) -> f64 {
    let sv = p.clone().singular_values();
    sv.min() / sv.max().max(1.0)
}

fn first_conjugate_time(sol: &DenseSolution, k: usize, m: usize, t_max: f64) -> Option<f64> {
    let mut probe: Vec<f64> = sol.step_times();
    probe.extend((1..=4 * REPORT_SAMPLES).map(|i| t_max * i as f64 / (4 * REPORT_SAMPLES) as f64));
    probe.retain(|t| *t > 0.0);
    probe.sort_by(|a, b| a.partial_cmp(b).unwrap());
    probe.dedup();
    let interior = |t: f64| t < t_max * (1.0 - 1e-9);
    let mut dets = Vec::with_capacity(probe.len());
    let mut svs = Vec::with_capacity(probe.len());
    for &t in &probe {
        let p = scaled_p(sol, k, m, t);
        dets.push(p.clone().determinant());
        svs.push(relative_smallest_singular_value(&p));
    }
    for i in 0..probe.len() {
        if !(dets[i] > 0.0) {
            if !interior(probe[i]) {
                return None;
            }
            let lo = if i == 0 { probe[0] * 1e-6 } else { probe[i - 1] };
            let t = crate::numeric::bisect(|s| scaled_p(sol, k, m, s).determinant(), lo, probe[i], 1e-13 * t_max, 200);
            return Some(t);
        }
        if i > 0 && i + 1 < probe.len() && svs[i] < svs[i - 1] && svs[i] <= svs[i + 1] && svs[i] < 0.05 {
            // golden-section search for the singular-value minimum
            let (mut a, mut b) = (probe[i - 1], probe[i + 1]);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            let f = |t: f64| relative_smallest_singular_value(&scaled_p(sol, k, m, t));
            let mut c = b - g * (b - a);
            let mut d = a + g * (b - a);
            let (mut fc, mut fd) = (f(c), f(d));
            for _ in 0..100 {
                if (b - a) < 1e-14 * t_max {
                    break;
                }
                if fc < fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - g * (b - a);
                    fc = f(c);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + g * (b - a);
                    fd = f(d);
                }
            }
            let tm = 0.5 * (a + b);
            if f(tm) < 1e-7 && interior(tm) {
                return Some(tm);
            }
        }
    }
    None
}

/// Integrates `P'' = -P S` on `[0, t_max]` with local tolerance `tol`.
///
/// Fails with [`Error::ConjugatePoint`] when `det P` vanishes in `(0, t_max)`.
pub fn propagate_jacobi_with_tol(
    init: &JacobiInit,
    field: &dyn CurvatureField,
    t_max: f64,
    tol: f64,
) -> Result<JacobiSystem> {
    let k = init.p0.nrows();
    if field.dim() != k || init.dp0.shape() != (k, k) || init.p0.ncols() != k {
        return Err(Error::InvalidArgument(format!(
            "Jacobi data of size {k} does not match curvature dimension {}",
            field.dim()
        )));
    }
    if !(t_max > 0.0) {
        return Err(Error::InvalidArgument("t_max must be positive".into()));
    }
    let mut y0 = Vec::with_capacity(2 * k * k);
    y0.extend_from_slice(init.p0.as_slice());
    y0.extend_from_slice(init.dp0.as_slice());
    let mut s_buf = DMatrix::zeros(k, k);
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        field.eval(t, &mut s_buf);
        let p = DMatrix::from_column_slice(k, k, &y[..k * k]);
        dy[..k * k].copy_from_slice(&y[k * k..]);
        let acc = -(p * &s_buf);
        dy[k * k..].copy_from_slice(acc.as_slice());
    };
    let sol = integrate(rhs, 0.0, &y0, t_max, OdeOptions::with_tol(tol))?;

    // Conjugate points: a sign change of det P, or an even-multiplicity
    // touch detected as a local minimum of the smallest singular value.
    let (_, m) = init.block_dims;
    let t_conj = first_conjugate_time(&sol, k, m, t_max);
    if let Some(t) = t_conj {
        return Err(Error::ConjugatePoint { t });
    }

    let mut t_grid = Vec::with_capacity(REPORT_SAMPLES + 1);
    let mut ps = Vec::with_capacity(REPORT_SAMPLES + 1);
    let mut dps = Vec::with_capacity(REPORT_SAMPLES + 1);
    let mut ss = Vec::with_capacity(REPORT_SAMPLES + 1);
    let mut sym: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    for i in 0..=REPORT_SAMPLES {
        let t = t_max * i as f64 / REPORT_SAMPLES as f64;
        let (p, dp) = unpack(&sol.eval(t), k);
        let mut s = DMatrix::zeros(k, k);
        field.eval(t, &mut s);
        let a = &dp * p.transpose();
        sym = sym.max((&a - a.transpose()).amax());
        let sym_s = (&s + s.transpose()) * 0.5;
        min_eig = min_eig.min(sym_s.symmetric_eigenvalues().min());
        t_grid.push(t);
        ps.push(p);
        dps.push(dp);
        ss.push(s);
    }
    // central differences of P' against -P S at interior samples
    let h = t_max / REPORT_SAMPLES as f64;
    let mut ode_res: f64 = 0.0;
    for i in 1..REPORT_SAMPLES {
        let t = t_grid[i];
        let e = h * 1e-3;
        let (_, dp_plus) = unpack(&sol.eval(t + e), k);
        let (_, dp_minus) = unpack(&sol.eval(t - e), k);
        let ddp = (dp_plus - dp_minus) / (2.0 * e);
        let r = (ddp + &ps[i] * &ss[i]).amax();
        ode_res = ode_res.max(r / (1.0 + ps[i].amax()));
    }
    Ok(JacobiSystem {
        block_dims: init.block_dims,
        init: init.clone(),
        t: t_grid,
        p: ps,
        dp: dps,
        s: ss,
        symmetry_residual: sym,
        min_curvature_eigenvalue: min_eig,
        ode_residual: ode_res,
        steps: sol.accepted_steps,
    })
}

pub fn propagate_jacobi(init: &JacobiInit, field: &dyn CurvatureField, t_max: f64) -> Result<JacobiSystem> {
    propagate_jacobi_with_tol(init, field, t_max, tolerance::ODE)
}

/// Integrates the Riccati equation `Q' = -S - Q²` from `t0` on and returns
/// `tr Q` on `grid` (points below `t0` yield `NaN`).
///
/// `Q(t0)` comes from the second-order Taylor expansion of `P` at 0; for
/// the block initial data this reproduces the `t⁻¹ I` singular block.
pub fn riccati_trace(init: &JacobiInit, field: &dyn CurvatureField, grid: &[f64], t0: f64) -> Result<Vec<f64>> {
    let k = init.p0.nrows();
    let t_end = grid.iter().copied().fold(t0, f64::max);
    let mut s0 = DMatrix::zeros(k, k);
    field.eval(0.0, &mut s0);
    let ddp0 = -(&init.p0 * &s0);
    let p = &init.p0 + &init.dp0 * t0 + &ddp0 * (0.5 * t0 * t0);
    let dp = &init.dp0 + &ddp0 * t0;
    let q0 = p
        .lu()
        .solve(&dp)
        .ok_or_else(|| Error::Integration {
            t: t0,
            reason: "P(t0) is singular".into(),
        })?;
    let q0 = (&q0 + q0.transpose()) * 0.5;
    let mut s_buf = DMatrix::zeros(k, k);
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        field.eval(t, &mut s_buf);
        let q = DMatrix::from_column_slice(k, k, y);
        let d = -(&s_buf) - &q * &q;
        dy.copy_from_slice(d.as_slice());
    };
    if t_end <= t0 {
        return Ok(grid.iter().map(|t| if *t >= t0 { q0.trace() } else { f64::NAN }).collect());
    }
    let sol = integrate(rhs, t0, q0.as_slice(), t_end, OdeOptions::with_tol(tolerance::ODE))?;
    Ok(grid
        .iter()
        .map(|&t| {
            if t < t0 {
                f64::NAN
            } else {
                DMatrix::from_column_slice(k, k, &sol.eval(t)).trace()
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiccatiReport {
    /// `min_t (m/t + n c/(1+tc) - tr Q(t))` over samples with `t > 0`.
    pub margin: f64,
    /// `n c - tr Q(0⁺)` restricted to the `n × n` block.
    pub initial_margin: f64,
    pub t: Vec<f64>,
    pub trace_q: Vec<f64>,
    pub bound: Vec<f64>,
}

impl RiccatiReport {
    pub fn holds(&self) -> bool {
        self.margin >= -tolerance::MONOTONICITY
    }
}

/// Compares `tr Q(t)` with `m/t + n c/(1+tc)`.
pub fn riccati_trace_bound(sys: &JacobiSystem, c: f64) -> Result<RiccatiReport> {
    let (n, m) = sys.block_dims;
    let initial_trace: f64 = (0..n).map(|i| sys.init.dp0[(i, i)]).sum();
    let initial_margin = n as f64 * c - initial_trace;
    let mut margin = f64::INFINITY;
    let mut ts = Vec::new();
    let mut trs = Vec::new();
    let mut bounds = Vec::new();
    for (i, &t) in sys.t.iter().enumerate() {
        if t == 0.0 && m > 0 {
            continue;
        }
        let tr = sys.trace_q(i).ok_or(Error::ConjugatePoint { t })?;
        let bound = if m > 0 { m as f64 / t } else { 0.0 } + n as f64 * c / (1.0 + t * c);
        margin = margin.min(bound - tr);
        ts.push(t);
        trs.push(tr);
        bounds.push(bound);
    }
    Ok(RiccatiReport {
        margin,
        initial_margin,
        t: ts,
        trace_q: trs,
        bound: bounds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub t: Vec<f64>,
    /// `ρ(t) = t^{-m} (1+tc)^{-n} det P(t)`, with the limit at `t = 0`.
    pub rho: Vec<f64>,
    pub rho0: f64,
    /// `max_i (ρ_{i+1} - ρ_i) / ρ(0⁺)`.
    pub max_relative_increase: f64,
}

impl MonotonicityReport {
    pub fn holds(&self) -> bool {
        self.max_relative_increase <= tolerance::MONOTONICITY
    }
}

pub fn jacobian_ratio_monotone(sys: &JacobiSystem, c: f64) -> MonotonicityReport {
    let (n, m) = sys.block_dims;
    let rho0 = sys.init.normalized_det_limit();
    let mut rho = Vec::with_capacity(sys.t.len());
    for (i, &t) in sys.t.iter().enumerate() {
        if t == 0.0 {
            rho.push(rho0);
        } else {
            rho.push(sys.det(i) / (t.powi(m as i32) * (1.0 + t * c).powi(n as i32)));
        }
    }
    let inc = rho.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    MonotonicityReport {
        t: sys.t.clone(),
        rho,
        rho0,
        max_relative_increase: inc / rho0.abs(),
    }
}

/// Samples of a vector field `Z(t) = Σ z_i(t) E_i(t)` along a geodesic,
/// given by frame coefficients and their derivatives.
#[derive(Debug, Clone)]
pub struct FrameField {
    pub t: Vec<f64>,
    pub z: Vec<DVector<f64>>,
    pub dz: Vec<DVector<f64>>,
}

impl FrameField {
    /// `Z(t) = (t_max - t) W` for a parallel field `W`.
    pub fn linear_cutoff(w: &DVector<f64>, t_max: f64, samples: usize) -> Self {
        let t: Vec<f64> = (0..=samples).map(|i| t_max * i as f64 / samples as f64).collect();
        let z = t.iter().map(|s| w * (t_max - s)).collect();
        let dz = t.iter().map(|_| -w).collect();
        Self { t, z, dz }
    }
}

/// `H(Z(0), Z(0)) + ∫ (|D_t Z|² - R(γ', Z, γ', Z)) dt` by Simpson's rule.
pub fn index_form(field: &dyn CurvatureField, z: &FrameField, hessian_term: &DMatrix<f64>) -> Result<f64> {
    let n = z.t.len();
    let k = field.dim();
    if n < 2 || z.z.len() != n || z.dz.len() != n {
        return Err(Error::GridMismatch(format!(
            "{} times, {} values, {} derivatives",
            n,
            z.z.len(),
            z.dz.len()
        )));
    }
    if z.t[0] != 0.0 || z.t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::GridMismatch("sample times must start at 0 and increase".into()));
    }
    if z.z.iter().chain(&z.dz).any(|v| v.len() != k) || hessian_term.shape() != (k, k) {
        return Err(Error::GridMismatch(format!("field components must have dimension {k}")));
    }
    let mut s = DMatrix::zeros(k, k);
    let integrand: Vec<f64> = (0..n)
        .map(|i| {
            field.eval(z.t[i], &mut s);
            z.dz[i].norm_squared() - (z.z[i].transpose() * &s * &z.z[i])[(0, 0)]
        })
        .collect();
    let z0 = &z.z[0];
    Ok((z0.transpose() * hessian_term * z0)[(0, 0)] + simpson_samples(&z.t, &integrand))
}

/// Index form along a geodesic curve whose report grid must match `z.t`.
pub fn index_form_on_curve(curve: &GeodesicCurve, z: &FrameField, hessian_term: &DMatrix<f64>) -> Result<f64> {
    let t_end = *z.t.last().unwrap_or(&0.0);
    if (t_end - curve.t_max).abs() > 1e-12 * curve.t_max.max(1.0) {
        return Err(Error::GridMismatch(format!(
            "field ends at {t_end}, curve at {}",
            curve.t_max
        )));
    }
    index_form(curve, z, hessian_term)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero(k: usize) -> ConstantCurvature {
        ConstantCurvature(DMatrix::zeros(k, k))
    }

    #[test]
    fn flat_linear_growth() {
        let c = 0.7;
        let init = JacobiInit::identity(DMatrix::identity(3, 3) * c);
        let sys = propagate_jacobi(&init, &zero(3), 2.0).unwrap();
        for (i, &t) in sys.t.iter().enumerate() {
            assert!((&sys.p[i] - DMatrix::identity(3, 3) * (1.0 + c * t)).amax() < 1e-12);
        }
        let rep = riccati_trace_bound(&sys, c).unwrap();
        assert!(rep.margin.abs() < 1e-10);
        let mono = jacobian_ratio_monotone(&sys, c);
        assert!(mono.rho.iter().all(|r| (r - 1.0).abs() < 1e-10));
    }

    #[test]
    fn constant_curvature_cosine() {
        let kappa: f64 = 0.8;
        let init = JacobiInit::identity(DMatrix::zeros(2, 2));
        let sys = propagate_jacobi(&init, &ConstantCurvature(DMatrix::identity(2, 2) * kappa), 1.5).unwrap();
        for (i, &t) in sys.t.iter().enumerate() {
            let want = (kappa.sqrt() * t).cos();
            assert!((&sys.p[i] - DMatrix::identity(2, 2) * want).amax() < 1e-8);
        }
        assert!(sys.symmetry_residual < 1e-9);
        assert!(sys.ode_residual < 1e-6);
    }

    #[test]
    fn conjugate_point_detected() {
        // cos(t) vanishes at π/2
        let init = JacobiInit::identity(DMatrix::zeros(2, 2));
        let err = propagate_jacobi(&init, &ConstantCurvature(DMatrix::identity(2, 2)), 3.0).unwrap_err();
        match err {
            Error::ConjugatePoint { t } => assert!((t - std::f64::consts::FRAC_PI_2).abs() < 1e-8, "{t}"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn positive_curvature_strict_margin_and_decrease() {
        let kappa = 0.3;
        let c = 0.5;
        let init = JacobiInit::identity(DMatrix::identity(2, 2) * c);
        let field = ConstantCurvature(DMatrix::identity(2, 2) * kappa);
        let sys = propagate_jacobi(&init, &field, 1.0).unwrap();
        let rep = riccati_trace_bound(&sys, c).unwrap();
        assert!(rep.trace_q[1..].iter().zip(&rep.bound[1..]).all(|(q, b)| q < b));
        // scalar Riccati oracle q' = -κ - q²
        let sol = crate::numeric::ode::integrate(
            |_, y, dy| dy[0] = -kappa - y[0] * y[0],
            0.0,
            &[c],
            1.0,
            OdeOptions::with_tol(1e-12),
        )
        .unwrap();
        let last = rep.trace_q.len() - 1;
        assert!((rep.trace_q[last] - 2.0 * sol.y_end()[0]).abs() < 1e-8);
        let mono = jacobian_ratio_monotone(&sys, c);
        assert!(mono.rho.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn flat_block_case() {
        let a = DMatrix::identity(2, 2);
        let b = DMatrix::zeros(2, 2);
        let init = JacobiInit::block(a, b).unwrap();
        let sys = propagate_jacobi(&init, &zero(4), 1.0).unwrap();
        for (i, &t) in sys.t.iter().enumerate() {
            let want = t * t * (1.0 + t) * (1.0 + t);
            assert!((sys.det(i) - want).abs() < 1e-12);
        }
        let mono = jacobian_ratio_monotone(&sys, 1.0);
        assert!(mono.rho.iter().all(|r| (r - 1.0).abs() < 1e-10));
        let rep = riccati_trace_bound(&sys, 1.0).unwrap();
        assert!(rep.margin > -1e-8);
        // Riccati route agrees with the P route away from the singular start
        let tr = riccati_trace(&init, &zero(4), &sys.t, 1e-6).unwrap();
        for i in 8..sys.t.len() {
            assert!((tr[i] - sys.trace_q(i).unwrap()).abs() < 1e-6 * (1.0 + tr[i].abs()), "{} vs {}", tr[i], sys.trace_q(i).unwrap());
        }
    }

    #[test]
    fn index_form_flat_cutoff() {
        let r = 1.7;
        let c = 0.4;
        let w = DVector::from_vec(vec![0.3, -0.5]);
        let z = FrameField::linear_cutoff(&w, r, 64);
        let h = DMatrix::identity(2, 2) * c;
        let val = index_form(&zero(2), &z, &h).unwrap();
        let want = r * w.norm_squared() + r * r * c * w.norm_squared();
        assert!((val - want).abs() < 1e-12);
        let zz = FrameField {
            t: z.t.clone(),
            z: vec![DVector::zeros(2); z.t.len()],
            dz: vec![DVector::zeros(2); z.t.len()],
        };
        assert_eq!(index_form(&zero(2), &zz, &h).unwrap(), 0.0);
        let bad = FrameField {
            t: z.t.clone(),
            z: z.z[1..].to_vec(),
            dz: z.dz.clone(),
        };
        assert!(matches!(index_form(&zero(2), &bad, &h), Err(Error::GridMismatch(_))));
    }
}
