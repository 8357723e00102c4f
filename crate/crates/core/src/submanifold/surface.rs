use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::numeric::quadrature::{gauss_legendre_on, integrate, QuadTolerance};
use crate::numeric::sparse::{pcg, CsrMatrix};
use crate::potential::{recover_gradients, recover_hessians, MeshSolution, TRI_RULE};
use crate::tolerance;

use super::extrinsic::{extrinsic_geometry, patch_integrals, point_geometry, PatchDensity, PointGeometry};
use super::patch::{ImmersedPatch, ParamDomain, QuadSpec};

const CURVE_PANELS: usize = 64;

/// Flux table of a curve potential.
///
/// With `Q = f u_s` the equation reads `Q_s = c - √(|∇f|² + f²|H|²)`; `Q`
/// is tabulated at panel ends and completed inside a panel by Gauss rules.
#[derive(Debug, Clone)]
pub struct CurvePotential {
    /// The constant source `c`, fixed by the boundary flux condition.
    pub source: f64,
    pub closed: bool,
    knots: Vec<f64>,
    flux: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum SurfaceRepr {
    Curve(CurvePotential),
    Mesh(MeshSolution),
}

/// Potential on a patch: `div_Σ(f ∇u) = source - √(|∇f|²+f²|H|²)` with unit
/// conormal flux.
#[derive(Debug, Clone)]
pub struct SurfacePotential {
    pub patch: ImmersedPatch,
    pub density: PatchDensity,
    pub repr: SurfaceRepr,
    /// Mesh width, zero for curves.
    pub h: f64,
    pub residual_interior: f64,
    pub residual_neumann: f64,
    /// Relative flux imbalance of the discrete problem before it is removed.
    pub compatibility_defect: f64,
    boundary_vertices: Vec<usize>,
}

/// Potential derivatives at one parameter point, in the orthonormal tangent frame.
#[derive(Debug, Clone)]
pub struct SurfaceJet {
    pub geometry: PointGeometry,
    pub f: f64,
    pub gradient: Vec<f64>,
    pub hessian: DMatrix<f64>,
    /// Upper bound for `Δ_Σ u - ⟨H, y⟩` over admissible `y`: the source
    /// divided by `f`, which is `n f^{1/(n-1)}` for surfaces.
    pub laplacian_bound: f64,
}

impl SurfaceJet {
    pub fn gradient_norm_sq(&self) -> f64 {
        self.gradient.iter().map(|g| g * g).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfaceLaplacianReport {
    /// `min (bound - Δ_Σ u - |H| √(1 - |∇u|²))`, the worst admissible normal.
    pub margin: f64,
    pub points_in_u: usize,
    pub points_total: usize,
}

/// Pointwise distances from the flat equality case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EqualityResiduals {
    /// `max ‖D²_Σ u - (bound/n) g‖`.
    pub hessian: f64,
    pub density_gradient: f64,
    pub second_form: f64,
}

struct CurvePoint {
    speed: f64,
    curvature_term: f64,
    f: f64,
    /// `df/dt`.
    f_t: f64,
    geometry: PointGeometry,
}

fn curve_point(patch: &ImmersedPatch, f: &PatchDensity, t: f64) -> Result<CurvePoint> {
    let g = point_geometry(patch, &[t], 0)?;
    let (fv, _) = f.eval(&g.position);
    Ok(CurvePoint {
        speed: g.area_element,
        curvature_term: f.curvature_term(&g),
        f: fv,
        f_t: f.param_gradient(&g)[0],
        geometry: g,
    })
}

fn gauss(a: f64, b: f64) -> Vec<(f64, f64)> {
    gauss_legendre_on(8, a, b)
}

impl CurvePotential {
    fn flux_increment(&self, patch: &ImmersedPatch, f: &PatchDensity, a: f64, b: f64) -> Result<f64> {
        if b == a {
            return Ok(0.0);
        }
        let mut s = 0.0;
        for (t, w) in gauss(a, b) {
            let c = curve_point(patch, f, t)?;
            s += w * (self.source - c.curvature_term) * c.speed;
        }
        Ok(s)
    }

    fn panel(&self, t: f64) -> usize {
        let j = self.knots.partition_point(|k| *k <= t);
        j.saturating_sub(1).min(self.knots.len() - 2)
    }

    fn wrap(&self, t: f64) -> f64 {
        let (a, b) = (self.knots[0], *self.knots.last().unwrap());
        if self.closed {
            a + (t - a).rem_euclid(b - a)
        } else {
            t
        }
    }

    fn flux_at(&self, patch: &ImmersedPatch, f: &PatchDensity, t: f64) -> Result<f64> {
        let t = self.wrap(t);
        let j = self.panel(t);
        Ok(self.flux[j] + self.flux_increment(patch, f, self.knots[j], t)?)
    }

    fn value_at(&self, patch: &ImmersedPatch, f: &PatchDensity, t: f64) -> Result<f64> {
        let t = self.wrap(t);
        let j = self.panel(t);
        let t0 = self.knots[j];
        let mut u = self.values[j];
        if t > t0 {
            for (s, w) in gauss(t0, t) {
                let c = curve_point(patch, f, s)?;
                let q = self.flux[j] + self.flux_increment(patch, f, t0, s)?;
                u += w * q / c.f * c.speed;
            }
        }
        Ok(u)
    }
}

fn solve_curve(patch: &ImmersedPatch, f: &PatchDensity) -> Result<SurfacePotential> {
    let (a, b, closed) = match patch.domain {
        ParamDomain::Interval { a, b } => (a, b, false),
        ParamDomain::Loop { a, b } => (a, b, true),
        _ => unreachable!("curve solve on a surface domain"),
    };
    let knots: Vec<f64> = (0..=CURVE_PANELS)
        .map(|j| a + (b - a) * j as f64 / CURVE_PANELS as f64)
        .collect();
    let (mut length, mut kint) = (0.0, 0.0);
    let mut min_f = f64::INFINITY;
    for w in knots.windows(2) {
        for (t, wt) in gauss(w[0], w[1]) {
            let c = curve_point(patch, f, t)?;
            length += wt * c.speed;
            kint += wt * c.curvature_term * c.speed;
            min_f = min_f.min(c.f);
        }
    }
    let end = |t: f64| curve_point(patch, f, t).map(|c| c.f);
    let (fa, fb) = (end(a)?, end(b)?);
    min_f = min_f.min(fa).min(fb);
    if !(min_f > 0.0) {
        return Err(Error::InvalidArgument(format!("density must be positive, minimum {min_f:e}")));
    }
    let source = if closed { kint / length } else { (kint + fa + fb) / length };

    let mut pot = CurvePotential {
        source,
        closed,
        knots: knots.clone(),
        flux: vec![0.0; knots.len()],
        values: vec![0.0; knots.len()],
    };
    // flux without its initial value, and the two pieces of ∫ Q/f ds
    let mut raw = vec![0.0; knots.len()];
    let mut inv_f = vec![0.0; knots.len() - 1];
    let mut raw_over_f = vec![0.0; knots.len() - 1];
    for j in 0..knots.len() - 1 {
        let (t0, t1) = (knots[j], knots[j + 1]);
        raw[j + 1] = raw[j] + pot.flux_increment(patch, f, t0, t1)?;
        for (s, w) in gauss(t0, t1) {
            let c = curve_point(patch, f, s)?;
            let q = raw[j] + pot.flux_increment(patch, f, t0, s)?;
            inv_f[j] += w * c.speed / c.f;
            raw_over_f[j] += w * q * c.speed / c.f;
        }
    }
    let q0 = if closed {
        -raw_over_f.iter().sum::<f64>() / inv_f.iter().sum::<f64>()
    } else {
        -fa
    };
    for j in 0..knots.len() {
        pot.flux[j] = q0 + raw[j];
        if j > 0 {
            pot.values[j] = pot.values[j - 1] + q0 * inv_f[j - 1] + raw_over_f[j - 1];
        }
    }

    // independent adaptive integration of the flux equation
    let tol = QuadTolerance {
        abs: 1e-13,
        rel: 1e-13,
        max_intervals: 20_000,
    };
    let mut failure = None;
    let check = integrate(
        |t| match curve_point(patch, f, t) {
            Ok(c) => (source - c.curvature_term) * c.speed,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        a,
        b,
        tol,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let scale = source.abs() * length + kint + fa.abs() + fb.abs();
    let q_end = *pot.flux.last().unwrap();
    let residual_interior = ((q0 + check.value) - q_end).abs() / scale;
    let residual_neumann = if closed {
        (q_end - q0).abs() / scale + pot.values.last().unwrap().abs() / (scale * length)
    } else {
        (q_end / fb - 1.0).abs().max((-q0 / fa - 1.0).abs())
    };
    Ok(SurfacePotential {
        patch: patch.clone(),
        density: f.clone(),
        repr: SurfaceRepr::Curve(pot),
        h: 0.0,
        residual_interior,
        residual_neumann,
        compatibility_defect: 0.0,
        boundary_vertices: Vec::new(),
    })
}

struct Element {
    tensor: [[f64; 2]; 2],
    load: [f64; 3],
    measure: f64,
}

fn solve_surface(patch: &ImmersedPatch, f: &PatchDensity, h: f64) -> Result<SurfacePotential> {
    let mesh = std::sync::Arc::new(patch.domain.mesh(h)?);
    let min_angle = mesh.min_angle_degrees();
    if min_angle < 20.0 {
        return Err(Error::Mesh(format!("minimum angle {min_angle:.2}° is below 20°")));
    }
    let ints = patch_integrals(&extrinsic_geometry(patch, QuadSpec::default())?, f);
    if !(ints.min_f > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "density must be positive, minimum {:e}",
            ints.min_f
        )));
    }
    let total = ints.lhs();
    let residual = (total - 2.0 * ints.power_integral).abs() / total;
    if residual > tolerance::COMPATIBILITY {
        return Err(Error::Unnormalized {
            residual,
            limit: tolerance::COMPATIBILITY,
        });
    }

    let elements: Vec<Element> = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let tri = mesh.triangles[t];
            let v = [mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]];
            let area = mesh.chart_area(t);
            let mut e = Element {
                tensor: [[0.0; 2]; 2],
                load: [0.0; 3],
                measure: 0.0,
            };
            for (l, w) in TRI_RULE {
                let x: Vec<f64> = (0..2).map(|d| l[0] * v[0][d] + l[1] * v[1][d] + l[2] * v[2][d]).collect();
                let g = point_geometry(patch, &x, t)?;
                let fv = f.eval(&g.position).0;
                let dv = w * area * g.area_element;
                for i in 0..2 {
                    for j in 0..2 {
                        e.tensor[i][j] += dv * fv * g.metric_inv[(i, j)];
                    }
                }
                let src = 2.0 * fv * fv - f.curvature_term(&g);
                for i in 0..3 {
                    e.load[i] -= dv * src * l[i];
                }
                e.measure += dv;
            }
            Ok(e)
        })
        .collect::<Result<_>>()?;

    let nv = mesh.num_vertices();
    let mut load = vec![0.0; nv];
    let mut mass = vec![0.0; nv];
    let mut triplets = Vec::with_capacity(9 * elements.len());
    for (t, e) in elements.iter().enumerate() {
        let tri = mesh.triangles[t];
        let grads = mesh.barycentric_gradients(t);
        for i in 0..3 {
            load[tri[i]] += e.load[i];
            mass[tri[i]] += e.measure / 3.0;
            for j in 0..3 {
                let mb = [
                    e.tensor[0][0] * grads[j][0] + e.tensor[0][1] * grads[j][1],
                    e.tensor[1][0] * grads[j][0] + e.tensor[1][1] * grads[j][1],
                ];
                triplets.push((tri[i], tri[j], grads[i][0] * mb[0] + grads[i][1] * mb[1]));
            }
        }
    }
    let gauss3 = [
        (0.5 - 0.5 * (0.6f64).sqrt(), 5.0 / 18.0),
        (0.5, 8.0 / 18.0),
        (0.5 + 0.5 * (0.6f64).sqrt(), 5.0 / 18.0),
    ];
    for (k, edge) in mesh.boundary_edges.iter().enumerate() {
        let (a, b) = (mesh.vertices[edge[0]], mesh.vertices[edge[1]]);
        let tv = [b[0] - a[0], b[1] - a[1]];
        for (tau, w) in gauss3 {
            let x = [a[0] + tau * tv[0], a[1] + tau * tv[1]];
            let g = point_geometry(patch, &x, k)?;
            let gm = &g.metric;
            let len = (tv[0] * tv[0] * gm[(0, 0)] + 2.0 * tv[0] * tv[1] * gm[(0, 1)] + tv[1] * tv[1] * gm[(1, 1)]).sqrt();
            let c = w * len * f.eval(&g.position).0;
            load[edge[0]] += c * (1.0 - tau);
            load[edge[1]] += c * tau;
        }
    }
    let defect: f64 = load.iter().sum();
    let total_mass: f64 = mass.iter().sum();
    for (b, m) in load.iter_mut().zip(&mass) {
        *b -= defect * m / total_mass;
    }
    let stiffness = CsrMatrix::from_triplets(nv, triplets);
    let (values, report) = pcg(&stiffness, &load, Some(&mass), 1e-13, 20 * nv + 100)?;
    let mut ku = vec![0.0; nv];
    stiffness.mul_vec(&values, &mut ku);
    let num: f64 = ku.iter().zip(&load).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = load.iter().map(|b| b * b).sum();
    let residual_interior = (num / den).sqrt();

    let chart_gradients = recover_gradients(&mesh, &values)?;
    let chart_hessians = recover_hessians(&mesh, &chart_gradients)?;
    let on_boundary = mesh.boundary_vertices();
    let boundary_vertices: Vec<usize> = (0..nv).filter(|v| on_boundary[*v]).collect();
    let mut residual_neumann: f64 = 0.0;
    for &v in &boundary_vertices {
        let Some(c) = patch.domain.boundary_covector(mesh.vertices[v]) else {
            continue;
        };
        let g = point_geometry(patch, &mesh.vertices[v], v)?;
        let du = chart_gradients[v];
        let gi = &g.metric_inv;
        let up = [gi[(0, 0)] * c[0] + gi[(0, 1)] * c[1], gi[(1, 0)] * c[0] + gi[(1, 1)] * c[1]];
        let flux = (du[0] * up[0] + du[1] * up[1]) / (c[0] * up[0] + c[1] * up[1]).sqrt();
        residual_neumann = residual_neumann.max((flux - 1.0).abs());
    }
    Ok(SurfacePotential {
        patch: patch.clone(),
        density: f.clone(),
        repr: SurfaceRepr::Mesh(MeshSolution {
            mesh: mesh.clone(),
            values,
            chart_gradients,
            chart_hessians,
            lumped_mass: mass,
            cg_iterations: report.iterations,
        }),
        h: mesh.h,
        residual_interior,
        residual_neumann,
        compatibility_defect: defect.abs() / total,
        boundary_vertices,
    })
}

/// Solves the potential problem on a patch: closed-form flux integration for
/// curves, a P1 solve on a parameter mesh of width `h` for surfaces.
pub fn surface_potential(patch: &ImmersedPatch, f: &PatchDensity, h: f64) -> Result<SurfacePotential> {
    match patch.param_dim() {
        1 => solve_curve(patch, f),
        2 => solve_surface(patch, f, h),
        n => Err(Error::Unsupported(format!("surface potentials need n ≤ 2, got {n}"))),
    }
}

impl SurfacePotential {
    pub fn dim(&self) -> usize {
        self.patch.param_dim()
    }

    fn mesh(&self) -> Option<&MeshSolution> {
        match &self.repr {
            SurfaceRepr::Mesh(m) => Some(m),
            SurfaceRepr::Curve(_) => None,
        }
    }

    pub fn value(&self, p: &[f64]) -> Result<f64> {
        match &self.repr {
            SurfaceRepr::Curve(c) => c.value_at(&self.patch, &self.density, p[0]),
            SurfaceRepr::Mesh(m) => match m.value(p) {
                Ok(v) => Ok(v),
                Err(_) => {
                    let (v, d) = self.nearest_boundary(m, p);
                    let g = m.chart_gradients[v];
                    Ok(m.values[v] + g[0] * d[0] + g[1] * d[1])
                }
            },
        }
    }

    fn nearest_boundary(&self, m: &MeshSolution, p: &[f64]) -> (usize, [f64; 2]) {
        let mut best = (usize::MAX, [0.0; 2], f64::INFINITY);
        for &v in &self.boundary_vertices {
            let x = m.mesh.vertices[v];
            let d = [p[0] - x[0], p[1] - x[1]];
            let dist = d[0] * d[0] + d[1] * d[1];
            if dist < best.2 {
                best = (v, d, dist);
            }
        }
        (best.0, best.1)
    }

    /// Chart gradient and Hessian at a parameter point; points in the thin
    /// region between the polygon and the curved boundary are extrapolated
    /// from the nearest boundary vertex.
    fn chart_derivatives(&self, m: &MeshSolution, p: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
        if let Ok(d) = m.chart_derivatives(p) {
            return d;
        }
        let (v, d) = self.nearest_boundary(m, p);
        let h = m.chart_hessians[v];
        let g = m.chart_gradients[v];
        (
            vec![g[0] + h[0] * d[0] + h[1] * d[1], g[1] + h[1] * d[0] + h[2] * d[1]],
            DMatrix::from_row_slice(2, 2, &[h[0], h[1], h[1], h[2]]),
        )
    }

    pub fn jet(&self, p: &[f64]) -> Result<SurfaceJet> {
        if p.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "parameter point has {} coordinates, expected {}",
                p.len(),
                self.dim()
            )));
        }
        match &self.repr {
            SurfaceRepr::Curve(c) => {
                let t = c.wrap(p[0]);
                let cp = curve_point(&self.patch, &self.density, t)?;
                let q = c.flux_at(&self.patch, &self.density, t)?;
                let f_s = cp.f_t / cp.speed;
                let u_ss = (c.source - cp.curvature_term) / cp.f - q * f_s / (cp.f * cp.f);
                Ok(SurfaceJet {
                    f: cp.f,
                    gradient: vec![q / cp.f],
                    hessian: DMatrix::from_element(1, 1, u_ss),
                    laplacian_bound: c.source / cp.f,
                    geometry: cp.geometry,
                })
            }
            SurfaceRepr::Mesh(m) => {
                let g = point_geometry(&self.patch, p, 0)?;
                let (du, d2u) = self.chart_derivatives(m, p);
                let mut cov = d2u;
                for (k, gamma) in g.christoffel.iter().enumerate() {
                    cov -= gamma * du[k];
                }
                let hessian = g.frame.transpose() * cov * &g.frame;
                let f = self.density.eval(&g.position).0;
                Ok(SurfaceJet {
                    f,
                    gradient: g.frame_components(&du),
                    hessian: (&hessian + hessian.transpose()) * 0.5,
                    laplacian_bound: 2.0 * f,
                    geometry: g,
                })
            }
        }
    }

    /// Interior parameter points used for pointwise diagnostics.
    pub fn diagnostic_points(&self) -> Vec<Vec<f64>> {
        match &self.repr {
            SurfaceRepr::Curve(c) => c
                .knots
                .windows(2)
                .flat_map(|w| gauss(w[0], w[1]).into_iter().map(|(t, _)| vec![t]))
                .collect(),
            SurfaceRepr::Mesh(m) => {
                let bd = m.mesh.boundary_vertices();
                m.mesh
                    .vertices
                    .iter()
                    .zip(bd)
                    .filter(|(_, b)| !*b)
                    .map(|(v, _)| v.to_vec())
                    .collect()
            }
        }
    }

    /// `Δ_Σ u - ⟨H, y⟩ ≤ bound` over all admissible normals, checked at the
    /// diagnostic points inside `U`.
    pub fn laplacian_margin(&self) -> Result<SurfaceLaplacianReport> {
        let pts = self.diagnostic_points();
        let jets = pts.par_iter().map(|p| self.jet(p)).collect::<Result<Vec<_>>>()?;
        let mut margin = f64::INFINITY;
        let mut inside = 0;
        for j in &jets {
            let g2 = j.gradient_norm_sq();
            if g2 >= 1.0 {
                continue;
            }
            inside += 1;
            let worst = j.hessian.trace() + j.geometry.mean_curvature_norm() * (1.0 - g2).sqrt();
            margin = margin.min(j.laplacian_bound - worst);
        }
        Ok(SurfaceLaplacianReport {
            margin,
            points_in_u: inside,
            points_total: pts.len(),
        })
    }

    pub fn equality_residuals(&self) -> Result<EqualityResiduals> {
        let pts = self.diagnostic_points();
        let n = self.dim();
        let jets = pts.par_iter().map(|p| self.jet(p)).collect::<Result<Vec<_>>>()?;
        let mut out = EqualityResiduals {
            hessian: 0.0,
            density_gradient: 0.0,
            second_form: 0.0,
        };
        for j in &jets {
            let target = DMatrix::<f64>::identity(n, n) * (j.laplacian_bound / n as f64);
            out.hessian = out.hessian.max((&j.hessian - target).norm());
            out.density_gradient = out.density_gradient.max(self.density.value_and_slope(&j.geometry).1);
            out.second_form = out.second_form.max(j.geometry.second_form_norm());
        }
        Ok(out)
    }

    /// Mass-weighted L² distance of the mesh values to `exact`, both with
    /// their means removed.
    pub fn l2_error<F: Fn([f64; 2]) -> f64>(&self, exact: F) -> Option<f64> {
        self.mesh().map(|m| m.l2_error(exact))
    }

    pub fn mesh_data(&self) -> Option<&TriMesh> {
        self.mesh().map(|m| m.mesh.as_ref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::submanifold::extrinsic::normalize_patch_density;

    #[test]
    fn flat_disk_recovers_half_square() {
        let d = ImmersedPatch::flat_disk(1.0, 4).unwrap();
        let f = PatchDensity::constant(1.0);
        let mut errs = Vec::new();
        for h in [0.1, 0.05] {
            let s = surface_potential(&d, &f, h).unwrap();
            assert!(s.residual_interior < 1e-10, "{}", s.residual_interior);
            assert!(s.compatibility_defect < 10.0 * h * h);
            errs.push(s.l2_error(|x| 0.5 * (x[0] * x[0] + x[1] * x[1])).unwrap());
            let j = s.jet(&[0.3, -0.2]).unwrap();
            assert!((j.gradient[0] - 0.3).abs() < 5.0 * h * h, "{:?}", j.gradient);
            assert!((&j.hessian - DMatrix::identity(2, 2)).amax() < 5.0 * h);
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 1.8, "observed order {order}");
    }

    #[test]
    fn unnormalized_surface_density_fails() {
        let d = ImmersedPatch::flat_disk(1.0, 4).unwrap();
        let err = surface_potential(&d, &PatchDensity::constant(2.0), 0.1).unwrap_err();
        assert!(matches!(err, Error::Unnormalized { .. }));
    }

    #[test]
    fn segment_potential_is_quadratic() {
        let seg = ImmersedPatch::from_fn("segment", ParamDomain::Interval { a: -1.0, b: 1.0 }, 3, |p| {
            vec![p[0], 0.0, 0.0]
        })
        .unwrap();
        let s = surface_potential(&seg, &PatchDensity::constant(1.0), 0.0).unwrap();
        assert!(s.residual_neumann < 1e-10);
        assert!(s.residual_interior < 1e-10);
        let j = s.jet(&[0.25]).unwrap();
        assert!((j.gradient[0] - 0.25).abs() < 1e-10);
        assert!((j.hessian[(0, 0)] - 1.0).abs() < 1e-8);
        let u = s.value(&[0.5]).unwrap() - s.value(&[0.0]).unwrap();
        assert!((u - 0.125).abs() < 1e-10);
    }

    #[test]
    fn spiral_flux_matches_boundary_data() {
        let sp = ImmersedPatch::spiral(0.2, 1.0, 3).unwrap();
        let f = PatchDensity { coeffs: vec![1.0, 0.1] };
        let s = surface_potential(&sp, &f, 0.0).unwrap();
        assert!(s.residual_neumann < 1e-10, "{}", s.residual_neumann);
        assert!(s.residual_interior < 1e-10, "{}", s.residual_interior);
        let m = s.laplacian_margin().unwrap();
        assert!(m.margin >= -1e-10, "{m:?}");
    }

    #[test]
    fn circle_potential_is_periodic() {
        let c = ImmersedPatch::circle(2.0, 3).unwrap();
        let s = surface_potential(&c, &PatchDensity::constant(1.0), 0.0).unwrap();
        assert!(s.residual_neumann < 1e-12);
        let j = s.jet(&[1.0]).unwrap();
        assert!(j.gradient[0].abs() < 1e-12);
        assert!((j.laplacian_bound - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hemisphere_margin_is_nonnegative() {
        let hs = ImmersedPatch::hemisphere().unwrap().lift_codim1().unwrap();
        let f = normalize_patch_density(&hs, &PatchDensity::constant(1.0), QuadSpec::default()).unwrap();
        let s = surface_potential(&hs, &f, 0.1).unwrap();
        let m = s.laplacian_margin().unwrap();
        assert!(m.points_in_u > 0);
        assert!(m.margin >= -tolerance::mesh(0.1), "{m:?}");
    }
}
