use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::unit_ball_volume;

use super::patch::{domain_quadrature, BoundaryNode, ImmersedPatch, QuadNode, QuadSpec};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// First and second fundamental forms at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointGeometry {
    pub p: Vec<f64>,
    pub position: Vec<f64>,
    /// `∂_i F` in ambient coordinates.
    pub d1: Vec<Vec<f64>>,
    pub metric: DMatrix<f64>,
    pub metric_inv: DMatrix<f64>,
    pub area_element: f64,
    /// `C` with orthonormal tangent frame `E_a = Σ_i ∂_i F C_{ia}`.
    pub frame: DMatrix<f64>,
    /// Orthonormal tangent frame as columns (ambient × n).
    pub tangent: DMatrix<f64>,
    /// Orthonormal normal frame as columns (ambient × m).
    pub normal: DMatrix<f64>,
    /// `⟨II(E_a, E_b), ν_α⟩` for each normal `ν_α`.
    pub second_form: Vec<DMatrix<f64>>,
    pub mean_curvature: Vec<f64>,
    /// `Γ^k_{ij}` as one `n × n` matrix per `k`.
    pub christoffel: Vec<DMatrix<f64>>,
    pub frame_defect: f64,
    pub symmetry_residual: f64,
}

impl PointGeometry {
    pub fn mean_curvature_norm(&self) -> f64 {
        norm(&self.mean_curvature)
    }

    pub fn second_form_norm(&self) -> f64 {
        self.second_form.iter().map(|h| h.norm_squared()).sum::<f64>().sqrt()
    }

    /// `⟨II, y⟩` in the orthonormal tangent frame for normal coefficients `y`.
    pub fn second_form_along(&self, y: &[f64]) -> DMatrix<f64> {
        let n = self.frame.nrows();
        let mut out = DMatrix::zeros(n, n);
        for (h, ya) in self.second_form.iter().zip(y) {
            out += h * *ya;
        }
        out
    }

    /// Ambient vector of a parameter covector `c` raised by the metric.
    pub fn raise(&self, c: &[f64]) -> Vec<f64> {
        let n = c.len();
        let up: Vec<f64> = (0..n).map(|i| (0..n).map(|j| self.metric_inv[(i, j)] * c[j]).sum()).collect();
        let amb = self.position.len();
        (0..amb).map(|k| (0..n).map(|i| self.d1[i][k] * up[i]).sum()).collect()
    }

    /// `cᵀ g⁻¹ c`.
    pub fn covector_norm_sq(&self, c: &[f64]) -> f64 {
        let n = c.len();
        (0..n)
            .map(|i| (0..n).map(|j| c[i] * self.metric_inv[(i, j)] * c[j]).sum::<f64>())
            .sum()
    }

    /// Components of a parameter covector in the orthonormal frame, `Cᵀ c`.
    pub fn frame_components(&self, c: &[f64]) -> Vec<f64> {
        let n = c.len();
        (0..n).map(|a| (0..n).map(|i| self.frame[(i, a)] * c[i]).sum()).collect()
    }
}

/// Fundamental forms at `p`, evaluated in the native ambient space and
/// padded with the flat lift directions.
pub fn point_geometry(patch: &ImmersedPatch, p: &[f64], node: usize) -> Result<PointGeometry> {
    let jet = patch.native_jet(p);
    let n = p.len();
    let n0 = patch.native_dim();
    let amb = patch.ambient_dim();
    let metric = DMatrix::from_fn(n, n, |i, j| dot(&jet.d1[i], &jet.d1[j]));
    let min_eig = metric.clone().symmetric_eigenvalues().min();
    if !(min_eig > 1e-10) {
        return Err(Error::DegenerateImmersion {
            node,
            reason: format!("first fundamental form has eigenvalue {min_eig:e} at {p:?}"),
        });
    }
    let metric_inv = metric
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::DegenerateImmersion {
            node,
            reason: "first fundamental form is singular".into(),
        })?;

    // modified Gram–Schmidt of the coordinate tangents: J = E R
    let mut e: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut r = DMatrix::zeros(n, n);
    for a in 0..n {
        let mut v = jet.d1[a].clone();
        for (b, eb) in e.iter().enumerate() {
            let c = dot(eb, &v);
            r[(b, a)] = c;
            for (vk, ek) in v.iter_mut().zip(eb) {
                *vk -= c * ek;
            }
        }
        let len = norm(&v);
        r[(a, a)] = len;
        e.push(v.iter().map(|x| x / len).collect());
    }
    let frame = r.try_inverse().ok_or_else(|| Error::DegenerateImmersion {
        node,
        reason: "tangent vectors are dependent".into(),
    })?;

    // normal frame: standard basis vectors, largest residual first
    let mut nu: Vec<Vec<f64>> = Vec::with_capacity(n0 - n);
    let mut used = vec![false; n0];
    for _ in 0..n0 - n {
        let mut best: Option<(usize, Vec<f64>, f64)> = None;
        for k in (0..n0).filter(|k| !used[*k]) {
            let mut v = vec![0.0; n0];
            v[k] = 1.0;
            for b in e.iter().chain(nu.iter()) {
                let c = dot(b, &v);
                for (vk, bk) in v.iter_mut().zip(b) {
                    *vk -= c * bk;
                }
            }
            let len = norm(&v);
            if best.as_ref().is_none_or(|(_, _, l)| len > *l) {
                best = Some((k, v, len));
            }
        }
        let (k, v, len) = best.unwrap();
        used[k] = true;
        nu.push(v.iter().map(|x| x / len).collect());
    }

    let mut symmetry_residual: f64 = 0.0;
    let mut second_form = Vec::with_capacity(amb - n);
    let mut mean = vec![0.0; n0];
    for v in &nu {
        let hp = DMatrix::from_fn(n, n, |i, j| dot(v, &jet.d2[i * n + j]));
        symmetry_residual = symmetry_residual.max((&hp - hp.transpose()).amax());
        let h = frame.transpose() * &hp * &frame;
        let tr = h.trace();
        for (mk, vk) in mean.iter_mut().zip(v) {
            *mk += tr * vk;
        }
        second_form.push(h);
    }
    let christoffel = (0..n)
        .map(|k| {
            DMatrix::from_fn(n, n, |i, j| {
                (0..n).map(|l| metric_inv[(k, l)] * dot(&jet.d2[i * n + j], &jet.d1[l])).sum()
            })
        })
        .collect();

    let mut basis: Vec<&Vec<f64>> = e.iter().collect();
    basis.extend(nu.iter());
    let mut frame_defect: f64 = 0.0;
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            frame_defect = frame_defect.max((dot(a, b) - want).abs());
        }
    }
    if frame_defect > 1e-9 {
        return Err(Error::DegenerateImmersion {
            node,
            reason: format!("frame orthonormality defect {frame_defect:e}"),
        });
    }

    let pad = |v: &[f64]| {
        let mut w = v.to_vec();
        w.resize(amb, 0.0);
        w
    };
    let mut normal = DMatrix::zeros(amb, amb - n);
    for (a, v) in nu.iter().enumerate() {
        for (k, x) in v.iter().enumerate() {
            normal[(k, a)] = *x;
        }
    }
    for extra in 0..amb - n0 {
        normal[(n0 + extra, n0 - n + extra)] = 1.0;
        second_form.push(DMatrix::zeros(n, n));
    }
    let mut tangent = DMatrix::zeros(amb, n);
    for (a, v) in e.iter().enumerate() {
        for (k, x) in v.iter().enumerate() {
            tangent[(k, a)] = *x;
        }
    }
    Ok(PointGeometry {
        p: p.to_vec(),
        position: pad(&jet.x),
        d1: jet.d1.iter().map(|v| pad(v)).collect(),
        area_element: metric.determinant().sqrt(),
        metric,
        metric_inv,
        frame,
        tangent,
        normal,
        second_form,
        mean_curvature: pad(&mean),
        christoffel,
        frame_defect,
        symmetry_residual,
    })
}

/// Boundary quadrature node with its length element and outward co-normal.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryGeometry {
    pub node: BoundaryNode,
    pub position: Vec<f64>,
    /// Metric length per unit parameter length (1 at curve endpoints).
    pub length_element: f64,
    pub conormal: Vec<f64>,
    pub geometry: PointGeometry,
}

/// Extrinsic data on a quadrature grid.
#[derive(Debug, Clone)]
pub struct ExtrinsicData {
    pub spec: QuadSpec,
    pub nodes: Vec<QuadNode>,
    pub points: Vec<PointGeometry>,
    pub boundary: Vec<BoundaryGeometry>,
    pub area: f64,
    pub boundary_measure: f64,
    pub max_mean_curvature: f64,
    pub max_second_form: f64,
    pub symmetry_residual: f64,
    pub frame_defect: f64,
}

pub fn extrinsic_geometry(patch: &ImmersedPatch, spec: QuadSpec) -> Result<ExtrinsicData> {
    let (nodes, bnodes) = domain_quadrature(&patch.domain, spec);
    let points = nodes
        .par_iter()
        .enumerate()
        .map(|(i, q)| point_geometry(patch, &q.p, i))
        .collect::<Result<Vec<_>>>()?;
    let offset = nodes.len();
    let boundary = bnodes
        .into_par_iter()
        .enumerate()
        .map(|(i, b)| {
            let g = point_geometry(patch, &b.p, offset + i)?;
            let (length_element, conormal) = if b.p.len() == 1 {
                let t = &g.d1[0];
                let len = norm(t);
                (1.0, t.iter().map(|x| b.covector[0] * x / len).collect())
            } else {
                let tv: Vec<f64> = (0..g.position.len())
                    .map(|k| b.tangent[0] * g.d1[0][k] + b.tangent[1] * g.d1[1][k])
                    .collect();
                let raised = g.raise(&b.covector);
                let len = g.covector_norm_sq(&b.covector).sqrt();
                (norm(&tv), raised.iter().map(|x| x / len).collect())
            };
            Ok(BoundaryGeometry {
                position: g.position.clone(),
                node: b,
                length_element,
                conormal,
                geometry: g,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let area = nodes.iter().zip(&points).map(|(q, g)| q.w * g.area_element).sum();
    let boundary_measure = boundary.iter().map(|b| b.node.w * b.length_element).sum();
    let fold = |f: &dyn Fn(&PointGeometry) -> f64| {
        points
            .iter()
            .chain(boundary.iter().map(|b| &b.geometry))
            .map(f)
            .fold(0.0, f64::max)
    };
    Ok(ExtrinsicData {
        spec,
        max_mean_curvature: fold(&|g| g.mean_curvature_norm()),
        max_second_form: fold(&|g| g.second_form_norm()),
        symmetry_residual: fold(&|g| g.symmetry_residual),
        frame_defect: fold(&|g| g.frame_defect),
        nodes,
        points,
        boundary,
        area,
        boundary_measure,
    })
}

/// Positive density on a patch, `f = Σ_k c_k |x|^{2k}` in ambient coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatchDensity {
    pub coeffs: Vec<f64>,
}

impl PatchDensity {
    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().skip(1).all(|c| *c == 0.0)
    }

    /// `(f, df/dq)` at ambient point `x`, `q = |x|²`.
    pub fn eval(&self, x: &[f64]) -> (f64, f64) {
        let q = dot(x, x);
        let (mut v, mut d) = (0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            d = d * q + v;
            v = v * q + c;
        }
        (v, d)
    }

    /// Parameter covector `∂_i f`.
    pub fn param_gradient(&self, g: &PointGeometry) -> Vec<f64> {
        let (_, fq) = self.eval(&g.position);
        g.d1.iter().map(|t| 2.0 * fq * dot(&g.position, t)).collect()
    }

    /// `(f, |∇^Σ f|)` at a point.
    pub fn value_and_slope(&self, g: &PointGeometry) -> (f64, f64) {
        let f = self.eval(&g.position).0;
        (f, g.covector_norm_sq(&self.param_gradient(g)).sqrt())
    }

    /// `√(|∇^Σ f|² + f² |H|²)`.
    pub fn curvature_term(&self, g: &PointGeometry) -> f64 {
        let (f, s) = self.value_and_slope(g);
        let h = g.mean_curvature_norm();
        (s * s + f * f * h * h).sqrt()
    }
}

/// Integrals entering both sides of the Michael–Simon inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatchIntegrals {
    /// `∫_Σ √(|∇f|² + f²|H|²)`.
    pub curvature_term: f64,
    /// `∫_{∂Σ} f`.
    pub boundary_term: f64,
    /// `∫_Σ f^{n/(n-1)}`; unused for curves.
    pub power_integral: f64,
    pub max_f: f64,
    pub min_f: f64,
    pub area: f64,
    pub boundary_measure: f64,
}

impl PatchIntegrals {
    pub fn lhs(&self) -> f64 {
        self.curvature_term + self.boundary_term
    }
}

pub fn patch_integrals(ext: &ExtrinsicData, f: &PatchDensity) -> PatchIntegrals {
    let n = ext.points.first().map(|g| g.p.len()).unwrap_or(2) as f64;
    let expo = if n > 1.0 { n / (n - 1.0) } else { f64::NAN };
    let (mut ct, mut pw) = (0.0, 0.0);
    let (mut max_f, mut min_f) = (f64::NEG_INFINITY, f64::INFINITY);
    for (q, g) in ext.nodes.iter().zip(&ext.points) {
        let dv = q.w * g.area_element;
        let fv = f.eval(&g.position).0;
        ct += dv * f.curvature_term(g);
        if n > 1.0 {
            pw += dv * fv.powf(expo);
        }
        max_f = max_f.max(fv);
        min_f = min_f.min(fv);
    }
    let mut bt = 0.0;
    for b in &ext.boundary {
        let fv = f.eval(&b.position).0;
        bt += b.node.w * b.length_element * fv;
        max_f = max_f.max(fv);
        min_f = min_f.min(fv);
    }
    PatchIntegrals {
        curvature_term: ct,
        boundary_term: bt,
        power_integral: pw,
        max_f,
        min_f,
        area: ext.area,
        boundary_measure: ext.boundary_measure,
    }
}

/// `(n+m)|B^{n+m}| / (m|B^m|)`.
pub fn ms_constant(n: usize, m: usize) -> f64 {
    (n + m) as f64 * unit_ball_volume(n + m) / (m as f64 * unit_ball_volume(m))
}

/// Right-hand side for given integrals. Curves use the `n → 1` limit
/// `C θ max f`.
pub fn ms_rhs(n: usize, m: usize, theta: f64, ints: &PatchIntegrals) -> f64 {
    let c = ms_constant(n, m);
    if n == 1 {
        return c * theta * ints.max_f;
    }
    let nf = n as f64;
    nf * (c * theta).powf(1.0 / nf) * ints.power_integral.powf((nf - 1.0) / nf)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MsSides {
    pub n: usize,
    pub m: usize,
    pub theta: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub integrals: PatchIntegrals,
    pub max_mean_curvature: f64,
    /// Relative change of both sides under quadrature refinement.
    pub quadrature_error: f64,
}

/// Both sides of the Michael–Simon inequality, evaluated on `spec` and its
/// refinement; the refined values are returned.
pub fn ms_sides(patch: &ImmersedPatch, f: &PatchDensity, theta: f64, spec: QuadSpec) -> Result<MsSides> {
    let (n, m) = (patch.param_dim(), patch.codim());
    if m < 2 {
        return Err(Error::CodimensionTooLow(m));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidArgument(format!("theta {theta} must lie in (0, 1]")));
    }
    let coarse = extrinsic_geometry(patch, spec)?;
    let fine = extrinsic_geometry(patch, spec.refined())?;
    let (ic, ifn) = (patch_integrals(&coarse, f), patch_integrals(&fine, f));
    if !(ifn.min_f > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "density must be positive on the patch, minimum {:e}",
            ifn.min_f
        )));
    }
    let (lc, lf) = (ic.lhs(), ifn.lhs());
    let (rc, rf) = (ms_rhs(n, m, theta, &ic), ms_rhs(n, m, theta, &ifn));
    let quadrature_error = ((lc - lf).abs() / lf).max((rc - rf).abs() / rf);
    if quadrature_error > 1e-8 {
        return Err(Error::Quadrature {
            value: lf,
            error: quadrature_error,
        });
    }
    Ok(MsSides {
        n,
        m,
        theta,
        lhs: lf,
        rhs: rf,
        ratio: lf / rf,
        integrals: ifn,
        max_mean_curvature: fine.max_mean_curvature,
        quadrature_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsoperimetryReport {
    pub n: usize,
    pub m: usize,
    pub theta: f64,
    pub area: f64,
    pub boundary_measure: f64,
    pub bound: f64,
    pub slack: f64,
    pub max_mean_curvature: f64,
    pub minimal: bool,
    pub holds: bool,
}

/// `|∂Σ| ≥ n ((n+m)|B^{n+m}|/(m|B^m|))^{1/n} θ^{1/n} |Σ|^{(n-1)/n}` for
/// minimal patches.
pub fn minimal_isoperimetry(patch: &ImmersedPatch, theta: f64, spec: QuadSpec) -> Result<IsoperimetryReport> {
    let sides = ms_sides(patch, &PatchDensity::constant(1.0), theta, spec)?;
    let ints = sides.integrals;
    let minimal = sides.max_mean_curvature <= 1e-8;
    let slack = ints.boundary_measure - sides.rhs;
    Ok(IsoperimetryReport {
        n: sides.n,
        m: sides.m,
        theta,
        area: ints.area,
        boundary_measure: ints.boundary_measure,
        bound: sides.rhs,
        slack,
        max_mean_curvature: sides.max_mean_curvature,
        minimal,
        holds: minimal && slack >= -1e-6,
    })
}

/// Normalizes `f` so that `∫√(|∇f|²+f²|H|²) + ∫_{∂Σ} f = n ∫ f^{n/(n-1)}`.
pub fn normalize_patch_density(patch: &ImmersedPatch, f: &PatchDensity, spec: QuadSpec) -> Result<PatchDensity> {
    let n = patch.param_dim();
    if n < 2 {
        return Ok(f.clone());
    }
    let ext = extrinsic_geometry(patch, spec)?;
    let ints = patch_integrals(&ext, f);
    let nf = n as f64;
    let lambda = (ints.lhs() / (nf * ints.power_integral)).powf(nf - 1.0);
    Ok(f.scaled(lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn flat_disk_is_totally_geodesic() {
        let d = ImmersedPatch::flat_disk(1.0, 4).unwrap();
        let e = extrinsic_geometry(&d, QuadSpec::default()).unwrap();
        assert_eq!(e.max_second_form, 0.0);
        assert!((e.area - PI).abs() < 1e-12);
        assert!((e.boundary_measure - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn hemisphere_has_mean_curvature_two() {
        let h = ImmersedPatch::hemisphere().unwrap();
        let e = extrinsic_geometry(&h, QuadSpec::default()).unwrap();
        for g in &e.points {
            assert!((g.mean_curvature_norm() - 2.0).abs() < 1e-12);
            // H points inward
            assert!(dot(&g.mean_curvature, &g.position) < 0.0);
        }
        assert!((e.area - 2.0 * PI).abs() < 1e-10);
        assert!((e.boundary_measure - 2.0 * PI).abs() < 1e-10);
        assert!(e.symmetry_residual < 1e-10);
    }

    #[test]
    fn complex_curves_and_catenoids_are_minimal() {
        for p in [
            ImmersedPatch::complex_curve(2, 1.0).unwrap(),
            ImmersedPatch::complex_curve(3, 0.8).unwrap(),
            ImmersedPatch::catenoid_band(0.7).unwrap(),
        ] {
            let e = extrinsic_geometry(&p, QuadSpec::default()).unwrap();
            assert!(e.max_mean_curvature < 1e-10, "{} {}", p.name, e.max_mean_curvature);
        }
    }

    #[test]
    fn complex_curve_area_and_length() {
        let p = ImmersedPatch::complex_curve(2, 1.0).unwrap();
        let e = extrinsic_geometry(&p, QuadSpec::default()).unwrap();
        assert!((e.area - 3.0 * PI).abs() < 1e-10);
        assert!((e.boundary_measure - 2.0 * PI * 5f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn flat_disk_equality() {
        let d = ImmersedPatch::flat_disk(1.0, 4).unwrap();
        let s = ms_sides(&d, &PatchDensity::constant(1.0), 1.0, QuadSpec::default()).unwrap();
        assert!((s.lhs - 2.0 * PI).abs() < 1e-12);
        assert!((s.ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lift_preserves_lhs_bitwise() {
        let d3 = ImmersedPatch::flat_disk(1.0, 3).unwrap().lift_codim1().unwrap();
        let d4 = ImmersedPatch::flat_disk(1.0, 4).unwrap();
        let f = PatchDensity { coeffs: vec![2.0, -0.5] };
        let a = ms_sides(&d3, &f, 1.0, QuadSpec::default()).unwrap();
        let b = ms_sides(&d4, &f, 1.0, QuadSpec::default()).unwrap();
        assert_eq!(a.lhs.to_bits(), b.lhs.to_bits());

        let h = ImmersedPatch::hemisphere().unwrap();
        let spec = QuadSpec::default();
        let before = patch_integrals(&extrinsic_geometry(&h, spec).unwrap(), &f);
        let after = ms_sides(&h.lift_codim1().unwrap(), &f, 1.0, spec).unwrap();
        let direct = patch_integrals(&extrinsic_geometry(&h.lift_codim1().unwrap(), spec).unwrap(), &f);
        assert_eq!(before.lhs().to_bits(), direct.lhs().to_bits());
        assert!((after.lhs - before.lhs()).abs() < 1e-12 * after.lhs);
    }

    #[test]
    fn hemisphere_lift_ratio_exceeds_one() {
        let h = ImmersedPatch::hemisphere().unwrap().lift_codim1().unwrap();
        let s = ms_sides(&h, &PatchDensity::constant(1.0), 1.0, QuadSpec::default()).unwrap();
        assert!((s.lhs - 6.0 * PI).abs() < 1e-9);
        assert!((s.rhs - 2.0 * PI * 2f64.sqrt()).abs() < 1e-9);
        assert!(s.ratio > 1.0);
    }

    #[test]
    fn codimension_one_is_rejected() {
        let h = ImmersedPatch::hemisphere().unwrap();
        assert!(matches!(
            ms_sides(&h, &PatchDensity::constant(1.0), 1.0, QuadSpec::default()),
            Err(Error::CodimensionTooLow(1))
        ));
        let d = ImmersedPatch::flat_disk(1.0, 4).unwrap();
        assert!(ms_sides(&d, &PatchDensity::constant(-1.0), 1.0, QuadSpec::default()).is_err());
    }

    #[test]
    fn curves_use_the_limit_constant() {
        let c = ImmersedPatch::circle(1.0, 3).unwrap();
        let s = ms_sides(&c, &PatchDensity::constant(1.0), 1.0, QuadSpec::default()).unwrap();
        assert!((s.lhs - 2.0 * PI).abs() < 1e-12);
        assert!((s.rhs - 2.0).abs() < 1e-12);
        let seg = ImmersedPatch::from_fn("segment", super::super::ParamDomain::Interval { a: -1.0, b: 1.0 }, 3, |p| {
            vec![p[0], 0.0, 0.0]
        })
        .unwrap();
        let s = ms_sides(&seg, &PatchDensity::constant(1.0), 1.0, QuadSpec::default()).unwrap();
        assert!((s.ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complex_curve_isoperimetry_is_strict() {
        let p = ImmersedPatch::complex_curve(2, 1.0).unwrap();
        let r = minimal_isoperimetry(&p, 1.0, QuadSpec::default()).unwrap();
        assert!(r.minimal && r.holds);
        assert!((r.bound - 2.0 * PI * 3f64.sqrt()).abs() < 1e-9);
        assert!(r.slack > 1.0);
    }

    #[test]
    fn normalization_balances_the_sides() {
        let p = ImmersedPatch::complex_curve(2, 1.0).unwrap();
        let f = normalize_patch_density(&p, &PatchDensity::constant(1.0), QuadSpec::default()).unwrap();
        assert!((f.coeffs[0] - 5f64.sqrt() / 3.0).abs() < 1e-10);
    }
}
