use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::numeric::quadrature::gauss_legendre_on;
use crate::numeric::spline::{CubicSpline, EndCondition};

/// Parameter domain of a patch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamDomain {
    /// Curve on `[a, b]` with two boundary points.
    Interval { a: f64, b: f64 },
    /// Closed curve, periodic on `[a, b)`.
    Loop { a: f64, b: f64 },
    /// Cartesian parameters in a centred disk.
    Disk { radius: f64 },
    Annulus { inner: f64, outer: f64 },
    Rectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
}

impl ParamDomain {
    pub fn dim(&self) -> usize {
        match self {
            ParamDomain::Interval { .. } | ParamDomain::Loop { .. } => 1,
            _ => 2,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ParamDomain::Interval { a, b } | ParamDomain::Loop { a, b } => b > a,
            ParamDomain::Disk { radius } => radius > 0.0,
            ParamDomain::Annulus { inner, outer } => inner > 0.0 && outer > inner,
            ParamDomain::Rectangle { x0, x1, y0, y1 } => x1 > x0 && y1 > y0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::DegenerateDomain(format!("invalid parameter domain {self:?}")))
        }
    }

    pub fn has_boundary(&self) -> bool {
        !matches!(self, ParamDomain::Loop { .. })
    }

    /// A parameter point near the middle of the domain.
    pub fn center(&self) -> Vec<f64> {
        match *self {
            ParamDomain::Interval { a, b } | ParamDomain::Loop { a, b } => vec![0.5 * (a + b)],
            ParamDomain::Disk { .. } => vec![0.0, 0.0],
            ParamDomain::Annulus { inner, outer } => vec![0.5 * (inner + outer), 0.0],
            ParamDomain::Rectangle { x0, x1, y0, y1 } => vec![0.5 * (x0 + x1), 0.5 * (y0 + y1)],
        }
    }

    /// Strict interior membership; every parameter of a loop is interior.
    pub fn contains_interior(&self, p: &[f64]) -> bool {
        if p.len() != self.dim() {
            return false;
        }
        match *self {
            ParamDomain::Interval { a, b } => p[0] > a && p[0] < b,
            ParamDomain::Loop { .. } => p[0].is_finite(),
            ParamDomain::Disk { radius } => p[0].hypot(p[1]) < radius,
            ParamDomain::Annulus { inner, outer } => {
                let r = p[0].hypot(p[1]);
                r > inner && r < outer
            }
            ParamDomain::Rectangle { x0, x1, y0, y1 } => p[0] > x0 && p[0] < x1 && p[1] > y0 && p[1] < y1,
        }
    }

    /// Triangulation of a two-dimensional parameter domain.
    pub fn mesh(&self, h: f64) -> Result<TriMesh> {
        match *self {
            ParamDomain::Disk { radius } => TriMesh::polar_disk(radius, h),
            ParamDomain::Annulus { inner, outer } => TriMesh::polar_annulus(inner, outer, h),
            ParamDomain::Rectangle { x0, x1, y0, y1 } => TriMesh::rectangle(x0, x1, y0, y1, h),
            _ => Err(Error::Unsupported("curves are not meshed".into())),
        }
    }

    /// Outward covector `dℓ` of a level-set description of the boundary
    /// through `p`, or `None` at rectangle corners.
    pub fn boundary_covector(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        match *self {
            ParamDomain::Disk { .. } | ParamDomain::Annulus { .. } => {
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                let sign = match *self {
                    ParamDomain::Annulus { inner, outer } if (r - inner).abs() < (r - outer).abs() => -1.0,
                    _ => 1.0,
                };
                Some([sign * p[0] / r, sign * p[1] / r])
            }
            ParamDomain::Rectangle { x0, x1, y0, y1 } => {
                let scale = (x1 - x0).max(y1 - y0);
                let near = |a: f64, b: f64| (a - b).abs() <= 1e-12 * scale;
                let hits = [near(p[0], x0), near(p[0], x1), near(p[1], y0), near(p[1], y1)];
                match hits {
                    [true, false, false, false] => Some([-1.0, 0.0]),
                    [false, true, false, false] => Some([1.0, 0.0]),
                    [false, false, true, false] => Some([0.0, -1.0]),
                    [false, false, false, true] => Some([0.0, 1.0]),
                    _ => None,
                }
            }
            _ => None,
        }
    }
}

/// Resolution of the tensor quadrature on a parameter domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadSpec {
    /// Gauss–Legendre panels (8 nodes each) per non-periodic direction.
    pub panels: usize,
    /// Trapezoid nodes per periodic direction.
    pub periodic: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            panels: 16,
            periodic: 256,
        }
    }
}

impl QuadSpec {
    pub fn refined(&self) -> Self {
        Self {
            panels: 2 * self.panels,
            periodic: 2 * self.periodic,
        }
    }
}

/// Interior quadrature node: parameter point and parameter-measure weight.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadNode {
    pub p: Vec<f64>,
    pub w: f64,
}

/// Boundary quadrature node.
///
/// `tangent` is the unit parameter direction along the boundary curve
/// (unused for curves), `covector` the outward level-set covector.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryNode {
    pub p: Vec<f64>,
    pub w: f64,
    pub tangent: Vec<f64>,
    pub covector: Vec<f64>,
}

fn gl_nodes(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / panels as f64;
    (0..panels)
        .flat_map(|i| gauss_legendre_on(8, a + i as f64 * h, a + (i + 1) as f64 * h))
        .collect()
}

fn trapezoid(a: f64, b: f64, count: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / count as f64;
    (0..count).map(|i| (a + i as f64 * h, h)).collect()
}

/// Tensor quadrature of the domain and its boundary.
pub fn domain_quadrature(domain: &ParamDomain, spec: QuadSpec) -> (Vec<QuadNode>, Vec<BoundaryNode>) {
    let two_pi = 2.0 * std::f64::consts::PI;
    let circle = |r: f64, sign: f64, out: &mut Vec<BoundaryNode>| {
        for (t, w) in trapezoid(0.0, two_pi, spec.periodic) {
            let (s, c) = t.sin_cos();
            out.push(BoundaryNode {
                p: vec![r * c, r * s],
                w: r * w,
                tangent: vec![-s, c],
                covector: vec![sign * c, sign * s],
            });
        }
    };
    let polar = |r0: f64, r1: f64| -> Vec<QuadNode> {
        let mut v = Vec::new();
        for (r, wr) in gl_nodes(r0, r1, spec.panels) {
            for (t, wt) in trapezoid(0.0, two_pi, spec.periodic) {
                v.push(QuadNode {
                    p: vec![r * t.cos(), r * t.sin()],
                    w: r * wr * wt,
                });
            }
        }
        v
    };
    let mut boundary = Vec::new();
    let interior = match *domain {
        ParamDomain::Interval { a, b } => {
            boundary.push(BoundaryNode {
                p: vec![a],
                w: 1.0,
                tangent: vec![],
                covector: vec![-1.0],
            });
            boundary.push(BoundaryNode {
                p: vec![b],
                w: 1.0,
                tangent: vec![],
                covector: vec![1.0],
            });
            gl_nodes(a, b, 4 * spec.panels)
                .into_iter()
                .map(|(t, w)| QuadNode { p: vec![t], w })
                .collect()
        }
        ParamDomain::Loop { a, b } => trapezoid(a, b, 4 * spec.periodic)
            .into_iter()
            .map(|(t, w)| QuadNode { p: vec![t], w })
            .collect(),
        ParamDomain::Disk { radius } => {
            circle(radius, 1.0, &mut boundary);
            polar(0.0, radius)
        }
        ParamDomain::Annulus { inner, outer } => {
            circle(inner, -1.0, &mut boundary);
            circle(outer, 1.0, &mut boundary);
            polar(inner, outer)
        }
        ParamDomain::Rectangle { x0, x1, y0, y1 } => {
            let xs = gl_nodes(x0, x1, spec.panels);
            let ys = gl_nodes(y0, y1, spec.panels);
            for &(x, w) in &xs {
                boundary.push(BoundaryNode {
                    p: vec![x, y0],
                    w,
                    tangent: vec![1.0, 0.0],
                    covector: vec![0.0, -1.0],
                });
                boundary.push(BoundaryNode {
                    p: vec![x, y1],
                    w,
                    tangent: vec![1.0, 0.0],
                    covector: vec![0.0, 1.0],
                });
            }
            for &(y, w) in &ys {
                boundary.push(BoundaryNode {
                    p: vec![x0, y],
                    w,
                    tangent: vec![0.0, 1.0],
                    covector: vec![-1.0, 0.0],
                });
                boundary.push(BoundaryNode {
                    p: vec![x1, y],
                    w,
                    tangent: vec![0.0, 1.0],
                    covector: vec![1.0, 0.0],
                });
            }
            xs.iter()
                .flat_map(|&(x, wx)| ys.iter().map(move |&(y, wy)| QuadNode { p: vec![x, y], w: wx * wy }))
                .collect()
        }
    };
    (interior, boundary)
}

/// Position and parameter derivatives of an immersion.
///
/// `d1[i]` is `∂_i F`; `d2[i * n + j]` is `∂_i ∂_j F`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub x: Vec<f64>,
    pub d1: Vec<Vec<f64>>,
    pub d2: Vec<Vec<f64>>,
}

type ParamFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
enum Shape {
    Flat,
    Circle { radius: f64 },
    Spiral { growth: f64 },
    ComplexPower { k: u32 },
    Hemisphere,
    Catenoid,
    CurveTable(Arc<Vec<CubicSpline>>),
    Function { f: ParamFn, step: f64 },
}

impl fmt::Debug for Shape {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Flat => write!(fm, "Flat"),
            Shape::Circle { radius } => write!(fm, "Circle {{ radius: {radius} }}"),
            Shape::Spiral { growth } => write!(fm, "Spiral {{ growth: {growth} }}"),
            Shape::ComplexPower { k } => write!(fm, "ComplexPower {{ k: {k} }}"),
            Shape::Hemisphere => write!(fm, "Hemisphere"),
            Shape::Catenoid => write!(fm, "Catenoid"),
            Shape::CurveTable(s) => write!(fm, "CurveTable({} coordinates)", s.len()),
            Shape::Function { step, .. } => write!(fm, "Function {{ step: {step} }}"),
        }
    }
}

fn cmul(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0]]
}

fn cpow(z: [f64; 2], k: u32) -> [f64; 2] {
    (0..k).fold([1.0, 0.0], |acc, _| cmul(acc, z))
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

impl Shape {
    fn jet(&self, p: &[f64], native: usize) -> Jet {
        match self {
            Shape::Flat => {
                let n = p.len();
                let mut x = vec![0.0; native];
                x[..n].copy_from_slice(p);
                let d1 = (0..n)
                    .map(|i| {
                        let mut v = vec![0.0; native];
                        v[i] = 1.0;
                        v
                    })
                    .collect();
                Jet {
                    x,
                    d1,
                    d2: vec![vec![0.0; native]; n * n],
                }
            }
            Shape::Circle { radius } => {
                let (s, c) = p[0].sin_cos();
                Jet {
                    x: vec![radius * c, radius * s],
                    d1: vec![vec![-radius * s, radius * c]],
                    d2: vec![vec![-radius * c, -radius * s]],
                }
            }
            Shape::Spiral { growth: a } => {
                let e = (a * p[0]).exp();
                let (s, c) = p[0].sin_cos();
                Jet {
                    x: vec![e * c, e * s],
                    d1: vec![vec![e * (a * c - s), e * (a * s + c)]],
                    d2: vec![vec![e * ((a * a - 1.0) * c - 2.0 * a * s), e * ((a * a - 1.0) * s + 2.0 * a * c)]],
                }
            }
            Shape::ComplexPower { k } => {
                let z = [p[0], p[1]];
                let kf = *k as f64;
                let w = cpow(z, *k);
                let dw = match k {
                    0 => [0.0, 0.0],
                    _ => {
                        let c = cpow(z, k - 1);
                        [kf * c[0], kf * c[1]]
                    }
                };
                let ddw = match k {
                    0 | 1 => [0.0, 0.0],
                    _ => {
                        let c = cpow(z, k - 2);
                        [kf * (kf - 1.0) * c[0], kf * (kf - 1.0) * c[1]]
                    }
                };
                let fxy = vec![0.0, 0.0, -ddw[1], ddw[0]];
                Jet {
                    x: vec![z[0], z[1], w[0], w[1]],
                    d1: vec![vec![1.0, 0.0, dw[0], dw[1]], vec![0.0, 1.0, -dw[1], dw[0]]],
                    d2: vec![
                        vec![0.0, 0.0, ddw[0], ddw[1]],
                        fxy.clone(),
                        fxy,
                        vec![0.0, 0.0, -ddw[0], -ddw[1]],
                    ],
                }
            }
            Shape::Hemisphere => {
                // stereographic chart (2x, 2y, 1 - |x|²) / (1 + |x|²)
                let d = 1.0 + p[0] * p[0] + p[1] * p[1];
                let inv = 1.0 / d;
                let di = |j: usize| -2.0 * p[j] * inv * inv;
                let dij = |j: usize, k: usize| -2.0 * delta(j, k) * inv * inv + 8.0 * p[j] * p[k] * inv * inv * inv;
                let mut jet = Jet {
                    x: vec![2.0 * p[0] * inv, 2.0 * p[1] * inv, 2.0 * inv - 1.0],
                    d1: vec![vec![0.0; 3]; 2],
                    d2: vec![vec![0.0; 3]; 4],
                };
                for j in 0..2 {
                    for a in 0..2 {
                        jet.d1[j][a] = 2.0 * delta(a, j) * inv + 2.0 * p[a] * di(j);
                    }
                    jet.d1[j][2] = 2.0 * di(j);
                    for k in 0..2 {
                        for a in 0..2 {
                            jet.d2[j * 2 + k][a] =
                                2.0 * delta(a, j) * di(k) + 2.0 * delta(a, k) * di(j) + 2.0 * p[a] * dij(j, k);
                        }
                        jet.d2[j * 2 + k][2] = 2.0 * dij(j, k);
                    }
                }
                jet
            }
            Shape::Catenoid => {
                // conformal chart over an annulus: height ln|x|, radius cosh(ln|x|)
                let q = p[0] * p[0] + p[1] * p[1];
                let s = 0.5 * (1.0 + 1.0 / q);
                let s1 = -0.5 / (q * q);
                let s2 = 1.0 / (q * q * q);
                let ds = |j: usize| 2.0 * s1 * p[j];
                let dds = |j: usize, k: usize| 4.0 * s2 * p[j] * p[k] + 2.0 * s1 * delta(j, k);
                let mut jet = Jet {
                    x: vec![p[0] * s, p[1] * s, 0.5 * q.ln()],
                    d1: vec![vec![0.0; 3]; 2],
                    d2: vec![vec![0.0; 3]; 4],
                };
                for j in 0..2 {
                    for a in 0..2 {
                        jet.d1[j][a] = delta(a, j) * s + p[a] * ds(j);
                    }
                    jet.d1[j][2] = p[j] / q;
                    for k in 0..2 {
                        for a in 0..2 {
                            jet.d2[j * 2 + k][a] = delta(a, j) * ds(k) + delta(a, k) * ds(j) + p[a] * dds(j, k);
                        }
                        jet.d2[j * 2 + k][2] = delta(j, k) / q - 2.0 * p[j] * p[k] / (q * q);
                    }
                }
                jet
            }
            Shape::CurveTable(splines) => {
                let e: Vec<(f64, f64, f64)> = splines.iter().map(|s| s.eval(p[0])).collect();
                Jet {
                    x: e.iter().map(|v| v.0).collect(),
                    d1: vec![e.iter().map(|v| v.1).collect()],
                    d2: vec![e.iter().map(|v| v.2).collect()],
                }
            }
            Shape::Function { f, step } => fd_jet(f.as_ref(), p, *step),
        }
    }
}

/// Fourth-order central differences.
fn fd_jet(f: &(dyn Fn(&[f64]) -> Vec<f64> + Send + Sync), p: &[f64], step: f64) -> Jet {
    let n = p.len();
    let x = f(p);
    let at = |shifts: &[(usize, f64)]| {
        let mut q = p.to_vec();
        for &(i, s) in shifts {
            q[i] += s;
        }
        f(&q)
    };
    let comb = |terms: &[(f64, Vec<f64>)], scale: f64| -> Vec<f64> {
        (0..x.len())
            .map(|c| terms.iter().map(|(w, v)| w * v[c]).sum::<f64>() / scale)
            .collect()
    };
    let h1 = step;
    let h2 = 2.0 * step;
    let d1 = (0..n)
        .map(|i| {
            comb(
                &[
                    (-1.0, at(&[(i, 2.0 * h1)])),
                    (8.0, at(&[(i, h1)])),
                    (-8.0, at(&[(i, -h1)])),
                    (1.0, at(&[(i, -2.0 * h1)])),
                ],
                12.0 * h1,
            )
        })
        .collect();
    let mut d2 = vec![Vec::new(); n * n];
    for i in 0..n {
        d2[i * n + i] = comb(
            &[
                (-1.0, at(&[(i, 2.0 * h2)])),
                (16.0, at(&[(i, h2)])),
                (-30.0, x.clone()),
                (16.0, at(&[(i, -h2)])),
                (-1.0, at(&[(i, -2.0 * h2)])),
            ],
            12.0 * h2 * h2,
        );
        for j in i + 1..n {
            let mut terms = Vec::new();
            for (a, wa) in [(1.0, 8.0), (-1.0, 8.0), (2.0, -1.0), (-2.0, -1.0)] {
                for (b, wb) in [(1.0, 8.0), (-1.0, 8.0), (2.0, -1.0), (-2.0, -1.0)] {
                    let sign = if (a > 0.0) == (b > 0.0) { 1.0 } else { -1.0 };
                    terms.push((sign * wa * wb, at(&[(i, a * h2), (j, b * h2)])));
                }
            }
            let v = comb(&terms, 144.0 * h2 * h2);
            d2[i * n + j] = v.clone();
            d2[j * n + i] = v;
        }
    }
    Jet { x, d1, d2 }
}

/// Compact immersed patch in Euclidean space.
///
/// The immersion is evaluated in its native ambient dimension and padded by
/// `lift` trailing zero coordinates.
#[derive(Debug, Clone)]
pub struct ImmersedPatch {
    pub name: String,
    pub domain: ParamDomain,
    shape: Shape,
    native_dim: usize,
    lift: usize,
    /// Declared minimal; checked against the computed mean curvature.
    pub minimal: bool,
}

impl ImmersedPatch {
    fn new(name: &str, domain: ParamDomain, shape: Shape, native_dim: usize, minimal: bool) -> Result<Self> {
        domain.validate()?;
        if native_dim < domain.dim() {
            return Err(Error::InvalidArgument(format!(
                "immersion dimension {native_dim} is below the patch dimension {}",
                domain.dim()
            )));
        }
        Ok(Self {
            name: name.to_string(),
            domain,
            shape,
            native_dim,
            lift: 0,
            minimal,
        })
    }

    fn padded(mut self, ambient_dim: usize) -> Result<Self> {
        if ambient_dim <= self.param_dim() {
            return Err(Error::InvalidArgument(format!(
                "{} needs ambient dimension above {}",
                self.name,
                self.param_dim()
            )));
        }
        if ambient_dim < self.native_dim {
            return Err(Error::InvalidArgument(format!(
                "{} needs ambient dimension at least {}",
                self.name, self.native_dim
            )));
        }
        self.lift = ambient_dim - self.native_dim;
        Ok(self)
    }

    /// Flat disk `{(x, y, 0, …)}` of the given radius.
    pub fn flat_disk(radius: f64, ambient_dim: usize) -> Result<Self> {
        Self::new("flat_disk", ParamDomain::Disk { radius }, Shape::Flat, 2, true)?.padded(ambient_dim)
    }

    /// Flat rectangle `[0, length] × [0, width]`.
    pub fn flat_strip(length: f64, width: f64, ambient_dim: usize) -> Result<Self> {
        let domain = ParamDomain::Rectangle {
            x0: 0.0,
            x1: length,
            y0: 0.0,
            y1: width,
        };
        Self::new("flat_strip", domain, Shape::Flat, 2, true)?.padded(ambient_dim)
    }

    pub fn circle(radius: f64, ambient_dim: usize) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidArgument(format!("circle radius {radius} must be positive")));
        }
        let domain = ParamDomain::Loop {
            a: 0.0,
            b: 2.0 * std::f64::consts::PI,
        };
        Self::new("circle", domain, Shape::Circle { radius }, 2, false)?.padded(ambient_dim)
    }

    /// Logarithmic spiral `e^{a t}(cos t, sin t)`, `0 ≤ t ≤ 2π·turns`.
    pub fn spiral(growth: f64, turns: f64, ambient_dim: usize) -> Result<Self> {
        let domain = ParamDomain::Interval {
            a: 0.0,
            b: 2.0 * std::f64::consts::PI * turns,
        };
        Self::new("spiral", domain, Shape::Spiral { growth }, 2, false)?.padded(ambient_dim)
    }

    /// Graph `z ↦ (z, z^k)` over `|z| ≤ radius` in `ℂ² = ℝ⁴`.
    pub fn complex_curve(k: u32, radius: f64) -> Result<Self> {
        Self::new("complex_curve", ParamDomain::Disk { radius }, Shape::ComplexPower { k }, 4, true)
    }

    /// Unit upper hemisphere in `ℝ³`.
    pub fn hemisphere() -> Result<Self> {
        Self::new("hemisphere", ParamDomain::Disk { radius: 1.0 }, Shape::Hemisphere, 3, false)
    }

    /// Catenoid `(cosh z cos t, cosh z sin t, z)` for `|z| ≤ half_height`, in `ℝ³`.
    pub fn catenoid_band(half_height: f64) -> Result<Self> {
        let domain = ParamDomain::Annulus {
            inner: (-half_height).exp(),
            outer: half_height.exp(),
        };
        Self::new("catenoid_band", domain, Shape::Catenoid, 3, true)
    }

    /// Curve through tabulated points `(t_i, x_i)` by cubic splines per coordinate.
    pub fn curve_table(name: &str, t: Vec<f64>, points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map(|p| p.len()).unwrap_or(0);
        if points.len() != t.len() || points.iter().any(|p| p.len() != dim) || t.len() < 4 || dim < 2 {
            return Err(Error::InvalidArgument(
                "curve table needs at least four rows of equal width with two or more coordinates".into(),
            ));
        }
        let splines = (0..dim)
            .map(|c| {
                CubicSpline::new(
                    t.clone(),
                    points.iter().map(|p| p[c]).collect(),
                    EndCondition::Natural,
                    EndCondition::Natural,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let domain = ParamDomain::Interval {
            a: t[0],
            b: *t.last().unwrap(),
        };
        Self::new(name, domain, Shape::CurveTable(Arc::new(splines)), dim, false)
    }

    /// Reads a curve table: one row `t x_1 … x_N` per line, `#` comments.
    pub fn read_curve_table(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut t = Vec::new();
        let mut pts = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let vals = line
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    path: path.display().to_string(),
                    line: i + 1,
                    reason: e.to_string(),
                })?;
            if vals.len() < 3 {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: i + 1,
                    reason: "expected a parameter and at least two coordinates".into(),
                });
            }
            t.push(vals[0]);
            pts.push(vals[1..].to_vec());
        }
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("table");
        Self::curve_table(name, t, pts)
    }

    /// Patch from a closure, differentiated by fourth-order central differences.
    pub fn from_fn<F>(name: &str, domain: ParamDomain, ambient_dim: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        let scale = match domain {
            ParamDomain::Interval { a, b } | ParamDomain::Loop { a, b } => b - a,
            ParamDomain::Disk { radius } => radius,
            ParamDomain::Annulus { outer, .. } => outer,
            ParamDomain::Rectangle { x0, x1, y0, y1 } => (x1 - x0).max(y1 - y0),
        };
        if ambient_dim <= domain.dim() {
            return Err(Error::InvalidArgument(format!(
                "ambient dimension {ambient_dim} must exceed the patch dimension {}",
                domain.dim()
            )));
        }
        let shape = Shape::Function {
            f: Arc::new(f),
            step: 1e-3 * scale,
        };
        Self::new(name, domain, shape, ambient_dim, false)
    }

    /// Same patch in one more ambient dimension, `Σ ⊂ M × ℝ`.
    pub fn lift_codim1(&self) -> Result<Self> {
        if self.codim() != 1 {
            return Err(Error::InvalidArgument(format!(
                "lift_codim1 expects codimension 1, got {}",
                self.codim()
            )));
        }
        let mut p = self.clone();
        p.lift += 1;
        Ok(p)
    }

    pub fn param_dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.native_dim + self.lift
    }

    pub fn codim(&self) -> usize {
        self.ambient_dim() - self.param_dim()
    }

    pub(crate) fn native_dim(&self) -> usize {
        self.native_dim
    }

    /// True for flat disks centred at the origin, where distances to the
    /// patch have closed forms.
    pub fn flat_disk_radius(&self) -> Option<f64> {
        match (&self.shape, self.domain) {
            (Shape::Flat, ParamDomain::Disk { radius }) => Some(radius),
            _ => None,
        }
    }

    /// Native jet (without the lift padding).
    pub(crate) fn native_jet(&self, p: &[f64]) -> Jet {
        self.shape.jet(p, self.native_dim)
    }

    /// Ambient position.
    pub fn position(&self, p: &[f64]) -> Vec<f64> {
        let mut x = self.native_jet(p).x;
        x.resize(self.ambient_dim(), 0.0);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_jets_match_differences() {
        let cases = [
            (ImmersedPatch::hemisphere().unwrap(), vec![0.3, -0.4]),
            (ImmersedPatch::catenoid_band(0.8).unwrap(), vec![0.9, 0.5]),
            (ImmersedPatch::complex_curve(3, 1.0).unwrap(), vec![0.2, 0.7]),
            (ImmersedPatch::spiral(0.1, 2.0, 2).unwrap(), vec![1.3]),
        ];
        for (patch, p) in cases {
            let exact = patch.native_jet(&p);
            let shape = patch.shape.clone();
            let native = patch.native_dim;
            let fd = fd_jet(&move |q: &[f64]| shape.jet(q, native).x, &p, 1e-3);
            for (a, b) in exact.d1.iter().flatten().zip(fd.d1.iter().flatten()) {
                assert!((a - b).abs() < 1e-9, "{}: {a} vs {b}", patch.name);
            }
            for (a, b) in exact.d2.iter().flatten().zip(fd.d2.iter().flatten()) {
                assert!((a - b).abs() < 1e-7, "{}: {a} vs {b}", patch.name);
            }
        }
    }

    #[test]
    fn hemisphere_chart_lands_on_the_sphere() {
        let h = ImmersedPatch::hemisphere().unwrap();
        for p in [[0.0, 0.0], [0.5, 0.5], [1.0, 0.0]] {
            let x = h.position(&p);
            let r: f64 = x.iter().map(|c| c * c).sum();
            assert!((r - 1.0).abs() < 1e-14);
            assert!(x[2] >= -1e-15);
        }
    }

    #[test]
    fn quadrature_measures_the_domains() {
        let pi = std::f64::consts::PI;
        let spec = QuadSpec::default();
        let cases = [
            (ParamDomain::Disk { radius: 2.0 }, 4.0 * pi, 4.0 * pi),
            (ParamDomain::Annulus { inner: 1.0, outer: 2.0 }, 3.0 * pi, 6.0 * pi),
            (
                ParamDomain::Rectangle {
                    x0: 0.0,
                    x1: 3.0,
                    y0: -1.0,
                    y1: 1.0,
                },
                6.0,
                10.0,
            ),
        ];
        for (d, area, perimeter) in cases {
            let (q, b) = domain_quadrature(&d, spec);
            let a: f64 = q.iter().map(|n| n.w).sum();
            let l: f64 = b.iter().map(|n| n.w).sum();
            assert!((a - area).abs() < 1e-12 * area);
            assert!((l - perimeter).abs() < 1e-12 * perimeter);
        }
    }

    #[test]
    fn lift_needs_codimension_one() {
        assert!(ImmersedPatch::flat_disk(1.0, 4).unwrap().lift_codim1().is_err());
        let l = ImmersedPatch::flat_disk(1.0, 3).unwrap().lift_codim1().unwrap();
        assert_eq!((l.ambient_dim(), l.codim()), (4, 2));
        assert_eq!(l.position(&[0.5, 0.25]), vec![0.5, 0.25, 0.0, 0.0]);
    }
}
