//! The normalized Neumann problem `div(f ∇u) = n f^{n/(n-1)} - |∇f|`,
//! `⟨∇u, η⟩ = 1` on the boundary, on geodesic balls, annuli and meshed regions.

mod fem;
mod radial;

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mesh::{patch_fit, vertex_patches, TriMesh};
use crate::models::{unit_ball_volume, PolarPoint, WarpedModel};
use crate::numeric::quadrature::{integrate, QuadTolerance};

pub use fem::{solve_mesh, MeshSolution};
pub(crate) use fem::{recover_hessians, TRI_RULE};
pub use radial::{solve_radial, RadialSolution};

/// Positive density, either a polynomial in the pole distance or P1 nodal data.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub kind: DensityKind,
    /// Scale factor applied by [`normalize_density`].
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DensityKind {
    /// `f(r) = Σ c_i r^i`.
    Radial { coeffs: Vec<f64> },
    /// Nodal values with recovered chart gradients.
    Nodal {
        mesh: Arc<TriMesh>,
        values: Vec<f64>,
        chart_gradients: Vec<[f64; 2]>,
    },
}

impl DensityField {
    pub fn constant(c: f64) -> Self {
        Self::radial(vec![c])
    }

    pub fn radial(coeffs: Vec<f64>) -> Self {
        Self {
            kind: DensityKind::Radial { coeffs },
            scale: 1.0,
        }
    }

    /// Nodal density; gradients come from quadratic patch fits.
    pub fn nodal(mesh: Arc<TriMesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_vertices() {
            return Err(Error::InvalidArgument(format!(
                "{} nodal values for {} vertices",
                values.len(),
                mesh.num_vertices()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::InvalidArgument(format!("density is not positive at node {i}")));
        }
        let chart_gradients = recover_gradients(&mesh, &values)?;
        Ok(Self {
            kind: DensityKind::Nodal {
                mesh,
                values,
                chart_gradients,
            },
            scale: 1.0,
        })
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.kind, DensityKind::Radial { .. })
    }

    pub fn with_scale(&self, scale: f64) -> Self {
        Self {
            kind: self.kind.clone(),
            scale,
        }
    }

    /// `(f(r), f'(r))` for radial densities.
    pub fn radial_eval(&self, r: f64) -> Option<(f64, f64)> {
        match &self.kind {
            DensityKind::Radial { coeffs } => {
                let (mut v, mut d) = (0.0, 0.0);
                for (i, c) in coeffs.iter().enumerate().rev() {
                    d = d * r + v;
                    v = v * r + c;
                    let _ = i;
                }
                Some((self.scale * v, self.scale * d))
            }
            DensityKind::Nodal { .. } => None,
        }
    }

    /// Value at a chart point.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        match &self.kind {
            DensityKind::Radial { .. } => Ok(self.radial_eval(norm(x)).unwrap().0),
            DensityKind::Nodal { mesh, values, .. } => {
                let (t, l) = locate(mesh, x)?;
                let tri = mesh.triangles[t];
                Ok(self.scale * (0..3).map(|i| l[i] * values[tri[i]]).sum::<f64>())
            }
        }
    }

    /// Riemannian gradient norm at a chart point.
    pub fn gradient_norm(&self, model: &WarpedModel, x: &[f64]) -> Result<f64> {
        match &self.kind {
            DensityKind::Radial { .. } => Ok(self.radial_eval(norm(x)).unwrap().1.abs()),
            DensityKind::Nodal {
                mesh,
                chart_gradients,
                ..
            } => {
                let (t, l) = locate(mesh, x)?;
                let tri = mesh.triangles[t];
                let mut g = [0.0; 2];
                for i in 0..3 {
                    for d in 0..2 {
                        g[d] += l[i] * chart_gradients[tri[i]][d];
                    }
                }
                Ok(self.scale * covector_norm(model, x, &g))
            }
        }
    }

    /// Node-wise `(f, |∇f|)` on a mesh, from the nodal data or the closed form.
    pub fn nodal_data(&self, model: &WarpedModel, mesh: &TriMesh) -> Result<(Vec<f64>, Vec<f64>)> {
        match &self.kind {
            DensityKind::Radial { .. } => Ok(mesh
                .vertices
                .iter()
                .map(|v| {
                    let (f, df) = self.radial_eval(norm(v)).unwrap();
                    (f, df.abs())
                })
                .unzip()),
            DensityKind::Nodal {
                mesh: own,
                values,
                chart_gradients,
            } => {
                if own.vertices != mesh.vertices || own.triangles != mesh.triangles {
                    return Err(Error::InvalidArgument("nodal density lives on a different mesh".into()));
                }
                Ok(values
                    .iter()
                    .zip(chart_gradients)
                    .zip(&mesh.vertices)
                    .map(|((v, g), x)| (self.scale * v, self.scale * covector_norm(model, x, g)))
                    .unzip())
            }
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn locate(mesh: &TriMesh, x: &[f64]) -> Result<(usize, [f64; 3])> {
    if x.len() != 2 {
        return Err(Error::InvalidArgument("mesh data needs 2-dimensional points".into()));
    }
    mesh.locate([x[0], x[1]])
        .ok_or_else(|| Error::InvalidArgument(format!("point ({:.6}, {:.6}) is outside the mesh", x[0], x[1])))
}

/// Metric norm of a chart covector `g` at `x`: `sqrt(gᵀ G⁻¹ g)`.
pub(crate) fn covector_norm(model: &WarpedModel, x: &[f64], g: &[f64]) -> f64 {
    let v = metric_gradient_rep(model, x, g);
    norm(&v)
}

/// Orthonormal representation of the gradient with chart differential `g`.
pub(crate) fn metric_gradient_rep(model: &WarpedModel, x: &[f64], g: &[f64]) -> Vec<f64> {
    let p = PolarPoint::from_chart(x);
    let s = model.tangential_scale(p.r);
    let radial: f64 = p.omega.iter().zip(g).map(|(a, b)| a * b).sum();
    g.iter()
        .zip(&p.omega)
        .map(|(d, w)| radial * w + (d - radial * w) / s)
        .collect()
}

/// Covariant Hessian in the orthonormal representation from the chart
/// gradient `g` and chart Hessian `h` at `x`.
pub(crate) fn covariant_hessian_rep(model: &WarpedModel, x: &[f64], g: &[f64], h: &DMatrix<f64>) -> DMatrix<f64> {
    let k = x.len();
    let rho = norm(x);
    if rho < 1e-12 || model.is_euclidean() {
        return h.clone();
    }
    let w = nalgebra::DVector::from_iterator(k, x.iter().map(|v| v / rho));
    let ge = nalgebra::DVector::from_column_slice(g);
    let (phi, dphi, _) = model.profile.eval(rho);
    let s = phi / rho;
    let u_rho = w.dot(&ge);
    let t = DMatrix::<f64>::identity(k, k) - &w * w.transpose();
    let hww = (w.transpose() * h * &w)[(0, 0)];
    let c = 1.0 / rho - dphi / phi;
    let mixed = (&t * h * &w + c * (&t * &ge)) / s;
    let tan = (&t * h * &t + (phi * dphi - rho) * u_rho / (rho * rho) * &t) / (s * s);
    let mut out = hww * &w * w.transpose() + &w * mixed.transpose() + &mixed * w.transpose() + tan;
    out = 0.5 * (&out + out.transpose());
    out
}

/// Chart gradients at every vertex from quadratic least-squares patch fits.
pub fn recover_gradients(mesh: &TriMesh, values: &[f64]) -> Result<Vec<[f64; 2]>> {
    let patches = vertex_patches(mesh, 12);
    patches
        .iter()
        .enumerate()
        .map(|(v, patch)| {
            let pts: Vec<[f64; 2]> = patch.iter().map(|&i| mesh.vertices[i]).collect();
            let vals: Vec<f64> = patch.iter().map(|&i| values[i]).collect();
            let c = patch_fit(mesh.vertices[v], &pts, &vals, 2)
                .or_else(|| patch_fit(mesh.vertices[v], &pts, &vals, 1))
                .ok_or_else(|| Error::Mesh(format!("gradient recovery patch at vertex {v} is degenerate")))?;
            Ok([c[1], c[2]])
        })
        .collect()
}

/// Compact domain carrying the potential problem.
#[derive(Debug, Clone, PartialEq)]
pub enum GeoDomain {
    Ball { radius: f64 },
    Annulus { inner: f64, outer: f64 },
    Meshed(Arc<TriMesh>),
}

impl GeoDomain {
    pub fn validate(&self) -> Result<()> {
        match self {
            GeoDomain::Ball { radius } if !(*radius > 0.0) => {
                Err(Error::DegenerateDomain(format!("ball radius {radius} must be positive")))
            }
            GeoDomain::Annulus { inner, outer } if !(*inner > 0.0 && outer > inner) => Err(Error::DegenerateDomain(
                format!("annulus needs 0 < inner < outer, got {inner}, {outer}"),
            )),
            _ => Ok(()),
        }
    }

    /// Largest pole distance in the domain.
    pub fn outer_radius(&self) -> f64 {
        match self {
            GeoDomain::Ball { radius } => *radius,
            GeoDomain::Annulus { outer, .. } => *outer,
            GeoDomain::Meshed(m) => m.vertices.iter().map(|v| norm(v)).fold(0.0, f64::max),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let r = norm(x);
        match self {
            GeoDomain::Ball { radius } => r <= *radius,
            GeoDomain::Annulus { inner, outer } => r >= *inner && r <= *outer,
            GeoDomain::Meshed(m) => x.len() == 2 && m.locate([x[0], x[1]]).is_some(),
        }
    }

    /// Outward unit normals (orthonormal representation) at boundary vertices.
    pub fn mesh_boundary_normals(&self, model: &WarpedModel) -> Vec<(usize, Vec<f64>)> {
        let GeoDomain::Meshed(mesh) = self else {
            return Vec::new();
        };
        let mut acc: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
        for e in &mesh.boundary_edges {
            let (a, b) = (mesh.vertices[e[0]], mesh.vertices[e[1]]);
            let t = [b[0] - a[0], b[1] - a[1]];
            let nu = [t[1], -t[0]];
            for &v in e {
                let x = mesh.vertices[v];
                let rep = metric_gradient_rep(model, &x, &nu);
                let len = norm(&rep);
                let slot = acc.entry(v).or_insert_with(|| vec![0.0; 2]);
                slot[0] += rep[0] / len;
                slot[1] += rep[1] / len;
            }
        }
        acc.into_iter()
            .map(|(v, n)| {
                let len = norm(&n);
                (v, n.iter().map(|c| c / len).collect())
            })
            .collect()
    }
}

/// `A = ∫|∇f| + ∫_∂D f` and `B = ∫ f^{n/(n-1)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationIntegrals {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl NormalizationIntegrals {
    /// `λ = (A/(nB))^{n-1}`.
    pub fn lambda(&self) -> f64 {
        (self.a / (self.n as f64 * self.b)).powi(self.n as i32 - 1)
    }

    /// `|A - nB| / A`.
    pub fn relative_residual(&self) -> f64 {
        (self.a - self.n as f64 * self.b).abs() / self.a
    }

    /// `∫_D |∇f| + ∫_∂D f` over `n (|B^n| θ)^{1/n} (∫ f^{n/(n-1)})^{(n-1)/n}`.
    pub fn sobolev_ratio(&self, theta: f64) -> f64 {
        let n = self.n as f64;
        let rhs = n * (unit_ball_volume(self.n) * theta).powf(1.0 / n) * self.b.powf((n - 1.0) / n);
        self.a / rhs
    }
}

pub(crate) const TIGHT_QUAD: QuadTolerance = QuadTolerance {
    abs: 1e-14,
    rel: 1e-13,
    max_intervals: 20_000,
};

pub fn normalization_integrals(f: &DensityField, domain: &GeoDomain, model: &WarpedModel) -> Result<NormalizationIntegrals> {
    domain.validate()?;
    let n = model.dim;
    if n < 2 {
        return Err(Error::InvalidArgument("the potential problem needs dimension n ≥ 2".into()));
    }
    let nf = n as f64;
    let expo = nf / (nf - 1.0);
    let sphere = nf * unit_ball_volume(n);
    let (a, b) = match domain {
        GeoDomain::Ball { .. } | GeoDomain::Annulus { .. } => {
            if !f.is_radial() {
                return Err(Error::InvalidArgument("ball and annulus domains need a radial density".into()));
            }
            let (r0, r1) = match domain {
                GeoDomain::Ball { radius } => (0.0, *radius),
                GeoDomain::Annulus { inner, outer } => (*inner, *outer),
                _ => unreachable!(),
            };
            check_radial_positive(f, r0, r1)?;
            let area = |r: f64| sphere * model.phi(r).powi(n as i32 - 1);
            let grad = integrate(|r| f.radial_eval(r).unwrap().1.abs() * area(r), r0, r1, TIGHT_QUAD)?.value;
            let vol = integrate(|r| f.radial_eval(r).unwrap().0.powf(expo) * area(r), r0, r1, TIGHT_QUAD)?.value;
            let mut bdry = f.radial_eval(r1).unwrap().0 * area(r1);
            if r0 > 0.0 {
                bdry += f.radial_eval(r0).unwrap().0 * area(r0);
            }
            (grad + bdry, vol)
        }
        GeoDomain::Meshed(mesh) => {
            if n != 2 {
                return Err(Error::Unsupported("meshed domains need a 2-dimensional model".into()));
            }
            let q = fem::MeshQuadrature::new(model, mesh, f)?;
            (q.grad_integral + q.boundary_integral, q.power_integral)
        }
    };
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::DegenerateDomain(format!("normalization integrals A = {a:e}, B = {b:e}")));
    }
    Ok(NormalizationIntegrals { a, b, n })
}

fn check_radial_positive(f: &DensityField, r0: f64, r1: f64) -> Result<()> {
    for i in 0..=1000 {
        let r = r0 + (r1 - r0) * i as f64 / 1000.0;
        let v = f.radial_eval(r).unwrap().0;
        if !(v > 0.0) {
            return Err(Error::InvalidArgument(format!("density is not positive at r = {r}: f = {v:e}")));
        }
    }
    Ok(())
}

/// Rescales `f` so that `∫|∇f| + ∫_∂D f = n ∫ f^{n/(n-1)}`.
pub fn normalize_density(f: &DensityField, domain: &GeoDomain, model: &WarpedModel) -> Result<DensityField> {
    let ints = normalization_integrals(f, domain, model)?;
    let g = f.with_scale(f.scale * ints.lambda());
    let check = normalization_integrals(&g, domain, model)?;
    if check.relative_residual() > crate::tolerance::NORMALIZATION {
        return Err(Error::Unnormalized {
            residual: check.relative_residual(),
            limit: crate::tolerance::NORMALIZATION,
        });
    }
    Ok(g)
}

/// Solution of the potential problem with its residual diagnostics.
#[derive(Debug, Clone)]
pub struct PotentialSolution {
    pub model: WarpedModel,
    pub domain: GeoDomain,
    pub density: DensityField,
    pub repr: SolutionRepr,
    /// Discrete L² residual of the interior equation (relative).
    pub residual_interior: f64,
    /// Largest deviation of `⟨∇u, η⟩` from 1.
    pub residual_neumann: f64,
}

#[derive(Debug, Clone)]
pub enum SolutionRepr {
    Radial(RadialSolution),
    Mesh(MeshSolution),
}

impl PotentialSolution {
    pub fn dim(&self) -> usize {
        self.model.dim
    }

    /// Mesh width of the discretization, zero for closed-form radial solves.
    pub fn mesh_width(&self) -> f64 {
        match &self.repr {
            SolutionRepr::Radial(_) => 0.0,
            SolutionRepr::Mesh(m) => m.mesh.h,
        }
    }

    /// Tolerance applied to recovered second derivatives downstream.
    pub fn hessian_tolerance(&self) -> f64 {
        match &self.repr {
            SolutionRepr::Radial(_) => 1e-8,
            SolutionRepr::Mesh(m) => crate::tolerance::mesh(m.mesh.h),
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        match &self.repr {
            SolutionRepr::Radial(s) => Ok(s.u(norm(x))),
            SolutionRepr::Mesh(m) => m.value(x),
        }
    }

    /// `∇u(x)` in the orthonormal representation at `x`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        match &self.repr {
            SolutionRepr::Radial(s) => {
                let r = norm(x);
                let du = s.du(r);
                Ok(if r == 0.0 {
                    vec![0.0; x.len()]
                } else {
                    x.iter().map(|c| du * c / r).collect()
                })
            }
            SolutionRepr::Mesh(m) => {
                let g = m.chart_gradient(x)?;
                Ok(metric_gradient_rep(&self.model, x, &g))
            }
        }
    }

    /// `D²u(x)` in the orthonormal representation at `x`.
    pub fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let k = x.len();
        match &self.repr {
            SolutionRepr::Radial(s) => {
                let r = norm(x);
                let ddu = s.ddu(r);
                if r == 0.0 {
                    return Ok(DMatrix::identity(k, k) * ddu);
                }
                let tang = if self.model.is_euclidean() {
                    s.du(r) / r
                } else {
                    let (phi, dphi, _) = self.model.profile.eval(r);
                    s.du(r) * dphi / phi
                };
                Ok(DMatrix::from_fn(k, k, |i, j| {
                    let ww = x[i] * x[j] / (r * r);
                    let id = if i == j { 1.0 } else { 0.0 };
                    ddu * ww + tang * (id - ww)
                }))
            }
            SolutionRepr::Mesh(m) => {
                let (g, h) = m.chart_derivatives(x)?;
                Ok(covariant_hessian_rep(&self.model, x, &g, &h))
            }
        }
    }

    pub fn density_value(&self, x: &[f64]) -> Result<f64> {
        self.density.value(x)
    }

    /// `{|∇u| < 1}` membership.
    pub fn in_u(&self, x: &[f64]) -> Result<bool> {
        Ok(norm(&self.gradient(x)?) < 1.0)
    }

    /// Sample points used for node-wise diagnostics: mesh vertices or a
    /// radial grid along the first axis.
    pub fn diagnostic_points(&self) -> Vec<Vec<f64>> {
        match (&self.repr, &self.domain) {
            (SolutionRepr::Mesh(m), _) => m.mesh.vertices.iter().map(|v| v.to_vec()).collect(),
            (SolutionRepr::Radial(s), _) => {
                let (r0, r1) = s.interval();
                (0..=400)
                    .map(|i| {
                        let mut x = vec![0.0; self.dim()];
                        x[0] = r0 + (r1 - r0) * i as f64 / 400.0;
                        x
                    })
                    .collect()
            }
        }
    }
}

/// Solves the potential problem, choosing the radial or mesh solver by domain.
pub fn solve(f: &DensityField, domain: &GeoDomain, model: &WarpedModel) -> Result<PotentialSolution> {
    match domain {
        GeoDomain::Meshed(_) => solve_mesh(f, domain, model),
        _ => solve_radial(f, domain, model),
    }
}

/// Result of the Laplacian comparison `Δu ≤ n f^{1/(n-1)}` on U.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplacianReport {
    /// `min (n f^{1/(n-1)} - Δu)` over sample points in U.
    pub margin: f64,
    /// `min (|∇f| + ⟨∇f, ∇u⟩)` over the same points.
    pub cauchy_schwarz_margin: f64,
    pub points_in_u: usize,
    pub points_total: usize,
}

pub fn laplacian_bound_check(sol: &PotentialSolution) -> Result<LaplacianReport> {
    let n = sol.dim() as f64;
    let mut margin = f64::INFINITY;
    let mut cs = f64::INFINITY;
    let pts = sol.diagnostic_points();
    let mut inside = 0;
    for x in &pts {
        let g = sol.gradient(x)?;
        if norm(&g) >= 1.0 {
            continue;
        }
        inside += 1;
        let lap = sol.hessian(x)?.trace();
        let f = sol.density.value(x)?;
        margin = margin.min(n * f.powf(1.0 / (n - 1.0)) - lap);
        let gf = density_gradient_rep(sol, x)?;
        let dot: f64 = gf.iter().zip(&g).map(|(a, b)| a * b).sum();
        cs = cs.min(norm(&gf) + dot);
    }
    Ok(LaplacianReport {
        margin,
        cauchy_schwarz_margin: cs,
        points_in_u: inside,
        points_total: pts.len(),
    })
}

pub(crate) fn density_gradient_rep(sol: &PotentialSolution, x: &[f64]) -> Result<Vec<f64>> {
    match &sol.density.kind {
        DensityKind::Radial { .. } => {
            let r = norm(x);
            let df = sol.density.radial_eval(r).unwrap().1;
            Ok(if r == 0.0 {
                vec![0.0; x.len()]
            } else {
                x.iter().map(|c| df * c / r).collect()
            })
        }
        DensityKind::Nodal {
            mesh, chart_gradients, ..
        } => {
            let (t, l) = locate(mesh, x)?;
            let tri = mesh.triangles[t];
            let mut g = [0.0; 2];
            for i in 0..3 {
                for d in 0..2 {
                    g[d] += sol.density.scale * l[i] * chart_gradients[tri[i]][d];
                }
            }
            Ok(metric_gradient_rep(&sol.model, x, &g))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{CurvatureClass, WarpedProfile};

    fn cone(alpha: f64) -> WarpedModel {
        WarpedModel::new(2, WarpedProfile::ConeSmoothed { alpha }, CurvatureClass::SectionalNonneg).unwrap()
    }

    #[test]
    fn euclidean_ball_lambda() {
        for n in 2..=4 {
            let m = WarpedModel::euclidean(n);
            let ints = normalization_integrals(&DensityField::constant(1.0), &GeoDomain::Ball { radius: 2.0 }, &m).unwrap();
            assert!((ints.lambda() - 2f64.powi(-(n as i32 - 1))).abs() < 1e-12);
            assert!((ints.sobolev_ratio(1.0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn normalization_is_idempotent() {
        let m = cone(0.5);
        let d = GeoDomain::Ball { radius: 1.0 };
        let f = normalize_density(&DensityField::radial(vec![2.0, 0.0, -1.0]), &d, &m).unwrap();
        let again = normalization_integrals(&f, &d, &m).unwrap();
        assert!((again.lambda() - 1.0).abs() < 1e-12);
        assert!(again.relative_residual() < 1e-12);
    }

    #[test]
    fn covariant_hessian_of_radial_function() {
        let m = cone(0.4);
        let x = [0.3, -0.5];
        let r = norm(&x);
        // u = r³: chart gradient 3r x, chart Hessian 3(r I + x xᵀ / r)
        let g = [3.0 * r * x[0], 3.0 * r * x[1]];
        let h = DMatrix::from_fn(2, 2, |i, j| 3.0 * (if i == j { r } else { 0.0 } + x[i] * x[j] / r));
        let rep = covariant_hessian_rep(&m, &x, &g, &h);
        let (phi, dphi, _) = m.profile.eval(r);
        let w = [x[0] / r, x[1] / r];
        let e = [-w[1], w[0]];
        let q = |a: [f64; 2], b: [f64; 2]| {
            (0..2).map(|i| (0..2).map(|j| a[i] * rep[(i, j)] * b[j]).sum::<f64>()).sum::<f64>()
        };
        assert!((q(w, w) - 6.0 * r).abs() < 1e-12);
        assert!(q(w, e).abs() < 1e-12);
        assert!((q(e, e) - 3.0 * r * r * dphi / phi).abs() < 1e-12);
    }
}
