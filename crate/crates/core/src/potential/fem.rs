use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{patch_fit, vertex_patches, TriMesh};
use crate::models::WarpedModel;
use crate::numeric::sparse::{pcg, CsrMatrix};

use super::{
    locate, metric_gradient_rep, normalization_integrals, recover_gradients, DensityField, GeoDomain, PotentialSolution,
    SolutionRepr,
};

// Strang-Fix six-point rule, exact for degree 4.
const A1: f64 = 0.445_948_490_915_965;
const W1: f64 = 0.223_381_589_678_011;
const A2: f64 = 0.091_576_213_509_771;
const W2: f64 = 0.109_951_743_655_322;
pub(crate) const TRI_RULE: [([f64; 3], f64); 6] = [
    ([A1, A1, 1.0 - 2.0 * A1], W1),
    ([A1, 1.0 - 2.0 * A1, A1], W1),
    ([1.0 - 2.0 * A1, A1, A1], W1),
    ([A2, A2, 1.0 - 2.0 * A2], W2),
    ([A2, 1.0 - 2.0 * A2, A2], W2),
    ([1.0 - 2.0 * A2, A2, A2], W2),
];

struct ElementData {
    stiffness: [[f64; 3]; 3],
    load: [f64; 3],
    metric_area: f64,
    grad_integral: f64,
    power_integral: f64,
}

/// Element-wise quadrature of the weak form in the chart metric.
pub(crate) struct MeshQuadrature {
    pub grad_integral: f64,
    pub power_integral: f64,
    pub boundary_integral: f64,
    pub load: Vec<f64>,
    pub lumped_mass: Vec<f64>,
    pub stiffness: CsrMatrix,
}

impl MeshQuadrature {
    pub fn new(model: &WarpedModel, mesh: &TriMesh, f: &DensityField) -> Result<Self> {
        let n = model.dim as f64;
        let expo = n / (n - 1.0);
        let (fnode, gnode) = f.nodal_data(model, mesh)?;
        if let Some(i) = fnode.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::InvalidArgument(format!("density is not positive at node {i}")));
        }
        // (f, |∇f|) at a point given its triangle and barycentrics
        let eval = |t: usize, l: [f64; 3], x: [f64; 2]| -> (f64, f64) {
            if f.is_radial() {
                let (v, d) = f.radial_eval((x[0] * x[0] + x[1] * x[1]).sqrt()).unwrap();
                (v, d.abs())
            } else {
                let tri = mesh.triangles[t];
                (
                    (0..3).map(|i| l[i] * fnode[tri[i]]).sum(),
                    (0..3).map(|i| l[i] * gnode[tri[i]]).sum(),
                )
            }
        };
        let elements: Vec<ElementData> = (0..mesh.triangles.len())
            .into_par_iter()
            .map(|t| {
                let tri = mesh.triangles[t];
                let v = [mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]];
                let area = mesh.chart_area(t);
                let grads = mesh.barycentric_gradients(t);
                let mut m = [[0.0; 2]; 2];
                let mut e = ElementData {
                    stiffness: [[0.0; 3]; 3],
                    load: [0.0; 3],
                    metric_area: 0.0,
                    grad_integral: 0.0,
                    power_integral: 0.0,
                };
                for (l, w) in TRI_RULE {
                    let x = [
                        l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0],
                        l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1],
                    ];
                    let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
                    let s = model.tangential_scale(rho);
                    let dv = w * area * s;
                    let (fv, gv) = eval(t, l, x);
                    let g = n * fv.powf(expo) - gv;
                    // f G^{-1} sqrt(det G) = f (s ωωᵀ + (I - ωωᵀ)/s)
                    let (wx, wy) = if rho > 0.0 { (x[0] / rho, x[1] / rho) } else { (1.0, 0.0) };
                    let ww = [[wx * wx, wx * wy], [wx * wy, wy * wy]];
                    for i in 0..2 {
                        for j in 0..2 {
                            let id = if i == j { 1.0 } else { 0.0 };
                            m[i][j] += w * area * fv * (s * ww[i][j] + (id - ww[i][j]) / s);
                        }
                    }
                    for i in 0..3 {
                        e.load[i] -= dv * g * l[i];
                    }
                    e.metric_area += dv;
                    e.grad_integral += dv * gv;
                    e.power_integral += dv * fv.powf(expo);
                }
                for i in 0..3 {
                    for j in 0..3 {
                        let mb = [
                            m[0][0] * grads[j][0] + m[0][1] * grads[j][1],
                            m[1][0] * grads[j][0] + m[1][1] * grads[j][1],
                        ];
                        e.stiffness[i][j] = grads[i][0] * mb[0] + grads[i][1] * mb[1];
                    }
                }
                e
            })
            .collect();

        let nv = mesh.num_vertices();
        let mut load = vec![0.0; nv];
        let mut lumped_mass = vec![0.0; nv];
        let mut triplets = Vec::with_capacity(9 * elements.len());
        let (mut grad_integral, mut power_integral) = (0.0, 0.0);
        for (t, e) in elements.iter().enumerate() {
            let tri = mesh.triangles[t];
            for i in 0..3 {
                load[tri[i]] += e.load[i];
                lumped_mass[tri[i]] += e.metric_area / 3.0;
                for j in 0..3 {
                    triplets.push((tri[i], tri[j], e.stiffness[i][j]));
                }
            }
            grad_integral += e.grad_integral;
            power_integral += e.power_integral;
        }

        let gauss = [
            (0.5 - 0.5 * (0.6f64).sqrt(), 5.0 / 18.0),
            (0.5, 8.0 / 18.0),
            (0.5 + 0.5 * (0.6f64).sqrt(), 5.0 / 18.0),
        ];
        let mut boundary_integral = 0.0;
        for edge in &mesh.boundary_edges {
            let (a, b) = (mesh.vertices[edge[0]], mesh.vertices[edge[1]]);
            let tv = [b[0] - a[0], b[1] - a[1]];
            for (tau, w) in gauss {
                let x = [a[0] + tau * tv[0], a[1] + tau * tv[1]];
                let len = metric_length(model, x, tv);
                let (fv, _) = if f.is_radial() {
                    eval(0, [0.0; 3], x)
                } else {
                    ((1.0 - tau) * fnode[edge[0]] + tau * fnode[edge[1]], 0.0)
                };
                let c = w * len * fv;
                load[edge[0]] += c * (1.0 - tau);
                load[edge[1]] += c * tau;
                boundary_integral += c;
            }
        }
        Ok(Self {
            grad_integral,
            power_integral,
            boundary_integral,
            load,
            lumped_mass,
            stiffness: CsrMatrix::from_triplets(nv, triplets),
        })
    }
}

fn metric_length(model: &WarpedModel, x: [f64; 2], t: [f64; 2]) -> f64 {
    let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
    if rho == 0.0 {
        return (t[0] * t[0] + t[1] * t[1]).sqrt();
    }
    let s = model.tangential_scale(rho);
    let radial = (t[0] * x[0] + t[1] * x[1]) / rho;
    let tang2 = (t[0] * t[0] + t[1] * t[1] - radial * radial).max(0.0);
    (radial * radial + s * s * tang2).sqrt()
}

/// P1 potential with recovered nodal derivatives.
#[derive(Debug, Clone)]
pub struct MeshSolution {
    pub mesh: Arc<TriMesh>,
    pub values: Vec<f64>,
    pub chart_gradients: Vec<[f64; 2]>,
    /// Symmetric chart Hessians `(xx, xy, yy)`.
    pub chart_hessians: Vec<[f64; 3]>,
    pub lumped_mass: Vec<f64>,
    pub cg_iterations: usize,
}

impl MeshSolution {
    fn interpolate<const K: usize>(&self, x: &[f64], data: &[[f64; K]]) -> Result<[f64; K]> {
        let (t, l) = locate(&self.mesh, x)?;
        let tri = self.mesh.triangles[t];
        let mut out = [0.0; K];
        for i in 0..3 {
            for k in 0..K {
                out[k] += l[i] * data[tri[i]][k];
            }
        }
        Ok(out)
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let (t, l) = locate(&self.mesh, x)?;
        let tri = self.mesh.triangles[t];
        Ok((0..3).map(|i| l[i] * self.values[tri[i]]).sum())
    }

    pub fn chart_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.interpolate(x, &self.chart_gradients)?.to_vec())
    }

    pub fn chart_derivatives(&self, x: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let g = self.chart_gradient(x)?;
        let h = self.interpolate(x, &self.chart_hessians)?;
        Ok((g, DMatrix::from_row_slice(2, 2, &[h[0], h[1], h[1], h[2]])))
    }

    /// Mass-weighted L² distance to `exact` after removing both means.
    pub fn l2_error<F: Fn([f64; 2]) -> f64>(&self, exact: F) -> f64 {
        let total: f64 = self.lumped_mass.iter().sum();
        let ex: Vec<f64> = self.mesh.vertices.iter().map(|v| exact(*v)).collect();
        let mean = |v: &[f64]| v.iter().zip(&self.lumped_mass).map(|(a, m)| a * m).sum::<f64>() / total;
        let (mu, me) = (mean(&self.values), mean(&ex));
        self.values
            .iter()
            .zip(&ex)
            .zip(&self.lumped_mass)
            .map(|((u, e), m)| m * (u - mu - (e - me)).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// P1 solve of the potential problem on a meshed region of a surface model.
pub fn solve_mesh(f: &DensityField, domain: &GeoDomain, model: &WarpedModel) -> Result<PotentialSolution> {
    let GeoDomain::Meshed(mesh) = domain else {
        return Err(Error::InvalidArgument("solve_mesh needs a meshed domain".into()));
    };
    if model.dim != 2 {
        return Err(Error::Unsupported(format!("mesh solves need n = 2, got n = {}", model.dim)));
    }
    let min_angle = mesh.min_angle_degrees();
    if min_angle < 20.0 {
        return Err(Error::Mesh(format!("minimum angle {min_angle:.2}° is below 20°")));
    }
    let ints = normalization_integrals(f, domain, model)?;
    let q = MeshQuadrature::new(model, mesh, f)?;
    let compat: f64 = q.load.iter().sum();
    if compat.abs() > crate::tolerance::COMPATIBILITY * ints.a {
        return Err(Error::Unnormalized {
            residual: compat.abs() / ints.a,
            limit: crate::tolerance::COMPATIBILITY,
        });
    }
    let nv = mesh.num_vertices();
    let (values, report) = pcg(&q.stiffness, &q.load, Some(&q.lumped_mass), 1e-13, 20 * nv + 100)?;

    let mut ku = vec![0.0; nv];
    q.stiffness.mul_vec(&values, &mut ku);
    let shift = compat / nv as f64;
    let num: f64 = ku.iter().zip(&q.load).map(|(a, b)| (a - (b - shift)).powi(2)).sum::<f64>();
    let den: f64 = q.load.iter().map(|b| b * b).sum::<f64>();
    let residual_interior = (num / den).sqrt();

    let chart_gradients = recover_gradients(mesh, &values)?;
    let chart_hessians = recover_hessians(mesh, &chart_gradients)?;

    let mut residual_neumann: f64 = 0.0;
    for (v, eta) in domain.mesh_boundary_normals(model) {
        let g = metric_gradient_rep(model, &mesh.vertices[v], &chart_gradients[v]);
        let flux = g[0] * eta[0] + g[1] * eta[1];
        residual_neumann = residual_neumann.max((flux - 1.0).abs());
    }
    Ok(PotentialSolution {
        model: model.clone(),
        domain: domain.clone(),
        density: f.clone(),
        repr: SolutionRepr::Mesh(MeshSolution {
            mesh: mesh.clone(),
            values,
            chart_gradients,
            chart_hessians,
            lumped_mass: q.lumped_mass,
            cg_iterations: report.iterations,
        }),
        residual_interior,
        residual_neumann,
    })
}

// Second pass: least-squares fits of the recovered gradient components.
pub(crate) fn recover_hessians(mesh: &TriMesh, grads: &[[f64; 2]]) -> Result<Vec<[f64; 3]>> {
    let patches = vertex_patches(mesh, 12);
    patches
        .par_iter()
        .enumerate()
        .map(|(v, patch)| {
            let pts: Vec<[f64; 2]> = patch.iter().map(|&i| mesh.vertices[i]).collect();
            let mut jac = [[0.0; 2]; 2];
            for (c, row) in jac.iter_mut().enumerate() {
                let vals: Vec<f64> = patch.iter().map(|&i| grads[i][c]).collect();
                let fit = patch_fit(mesh.vertices[v], &pts, &vals, 2)
                    .or_else(|| patch_fit(mesh.vertices[v], &pts, &vals, 1))
                    .ok_or_else(|| Error::Mesh(format!("Hessian recovery patch at vertex {v} is degenerate")))?;
                *row = [fit[1], fit[2]];
            }
            Ok([jac[0][0], 0.5 * (jac[0][1] + jac[1][0]), jac[1][1]])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{CurvatureClass, WarpedProfile};
    use crate::potential::{laplacian_bound_check, normalize_density, solve_radial};

    fn disk(h: f64) -> GeoDomain {
        GeoDomain::Meshed(Arc::new(TriMesh::polar_disk(1.0, h).unwrap()))
    }

    fn l2(sol: &PotentialSolution, exact: impl Fn([f64; 2]) -> f64) -> f64 {
        let SolutionRepr::Mesh(m) = &sol.repr else { panic!() };
        m.l2_error(exact)
    }

    #[test]
    fn euclidean_disk_converges_quadratically() {
        let m = WarpedModel::euclidean(2);
        let errs: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&h| {
                let d = disk(h);
                let f = normalize_density(&DensityField::constant(1.0), &d, &m).unwrap();
                let sol = solve_mesh(&f, &d, &m).unwrap();
                assert!(sol.residual_interior < 1e-10);
                l2(&sol, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]))
            })
            .collect();
        let o1 = (errs[0] / errs[1]).log2();
        let o2 = (errs[1] / errs[2]).log2();
        assert!(o1 > 1.8 && o2 > 1.8, "{errs:?} {o1} {o2}");
    }

    #[test]
    fn radial_density_matches_radial_solver() {
        let m = WarpedModel::new(2, WarpedProfile::ConeSmoothed { alpha: 0.5 }, CurvatureClass::SectionalNonneg).unwrap();
        let ball = GeoDomain::Ball { radius: 1.0 };
        let fr = normalize_density(&DensityField::radial(vec![2.0, 0.0, -1.0]), &ball, &m).unwrap();
        let rad = solve_radial(&fr, &ball, &m).unwrap();
        let mut prev = f64::INFINITY;
        for h in [0.1, 0.05] {
            let d = disk(h);
            let f = normalize_density(&DensityField::radial(vec![2.0, 0.0, -1.0]), &d, &m).unwrap();
            let sol = solve_mesh(&f, &d, &m).unwrap();
            let e = l2(&sol, |x| rad.value(&x).unwrap());
            assert!(e < 0.05 * h, "h={h} err={e}");
            assert!(e < prev);
            prev = e;
        }
    }

    #[test]
    fn renumbering_keeps_gradients() {
        let m = WarpedModel::euclidean(2);
        let mesh = TriMesh::polar_disk(1.0, 0.2).unwrap();
        let n = mesh.num_vertices();
        let perm: Vec<usize> = (0..n).map(|i| (2 * n - 1 - i + 5) % n).collect();
        let other = mesh.renumbered(&perm).unwrap();
        let solve = |mesh: TriMesh| {
            let d = GeoDomain::Meshed(Arc::new(mesh));
            let f = normalize_density(&DensityField::constant(1.0), &d, &m).unwrap();
            let SolutionRepr::Mesh(s) = solve_mesh(&f, &d, &m).unwrap().repr else { panic!() };
            s
        };
        let (a, b) = (solve(mesh), solve(other));
        for i in 0..n {
            for c in 0..2 {
                assert!((a.chart_gradients[i][c] - b.chart_gradients[perm[i]][c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn laplacian_margin_on_disk() {
        let m = WarpedModel::euclidean(2);
        let d = disk(0.05);
        let f = normalize_density(&DensityField::constant(1.0), &d, &m).unwrap();
        let sol = solve_mesh(&f, &d, &m).unwrap();
        let rep = laplacian_bound_check(&sol).unwrap();
        assert!(rep.margin > -0.05 && rep.margin < 0.05, "{rep:?}");
        assert!(sol.residual_neumann < 0.05, "{}", sol.residual_neumann);
    }

    #[test]
    fn unnormalized_mesh_density_is_rejected() {
        let m = WarpedModel::euclidean(2);
        let err = solve_mesh(&DensityField::constant(2.0), &disk(0.2), &m).unwrap_err();
        assert!(matches!(err, Error::Unnormalized { .. }));
    }
}
