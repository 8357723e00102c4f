//! Planar triangle meshes in the geodesic polar chart of a 2-dimensional model.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// Boundary edges oriented with the domain on their left.
    pub boundary_edges: Vec<[usize; 2]>,
    /// Nominal mesh width.
    pub h: f64,
    grid: PointLocator,
}

#[derive(Debug, Clone, PartialEq)]
struct PointLocator {
    origin: [f64; 2],
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl PointLocator {
    fn build(vertices: &[[f64; 2]], triangles: &[[usize; 3]], h: f64) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for v in vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        let cell = (2.0 * h).max(1e-12);
        let nx = (((hi[0] - lo[0]) / cell).ceil() as usize).max(1);
        let ny = (((hi[1] - lo[1]) / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for (t, tri) in triangles.iter().enumerate() {
            let (mut a, mut b) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for &i in tri {
                for d in 0..2 {
                    a[d] = a[d].min(vertices[i][d]);
                    b[d] = b[d].max(vertices[i][d]);
                }
            }
            let ix0 = (((a[0] - lo[0]) / cell).floor() as usize).min(nx - 1);
            let ix1 = (((b[0] - lo[0]) / cell).floor() as usize).min(nx - 1);
            let iy0 = (((a[1] - lo[1]) / cell).floor() as usize).min(ny - 1);
            let iy1 = (((b[1] - lo[1]) / cell).floor() as usize).min(ny - 1);
            for ix in ix0..=ix1 {
                for iy in iy0..=iy1 {
                    buckets[iy * nx + ix].push(t);
                }
            }
        }
        Self {
            origin: lo,
            cell,
            nx,
            ny,
            buckets,
        }
    }
}

impl TriMesh {
    /// Validates orientation and conformity and derives the boundary.
    pub fn new(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>, h: f64) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::Mesh("mesh has no triangles".into()));
        }
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::Mesh(format!("triangle {t} references a missing vertex")));
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if !(area > 0.0) {
                return Err(Error::Mesh(format!("triangle {t} is not counter-clockwise (signed area {area:e})")));
            }
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                if edges.insert((a, b), t).is_some() {
                    return Err(Error::Mesh(format!("directed edge ({a}, {b}) appears twice: inconsistent orientation")));
                }
            }
        }
        let mut boundary_edges: Vec<[usize; 2]> = edges
            .keys()
            .filter(|(a, b)| !edges.contains_key(&(*b, *a)))
            .map(|(a, b)| [*a, *b])
            .collect();
        boundary_edges.sort();
        let grid = PointLocator::build(&vertices, &triangles, h);
        Ok(Self {
            vertices,
            triangles,
            boundary_edges,
            h,
            grid,
        })
    }

    /// Disk of radius `radius` with `ceil(radius/h)` rings of `6i` vertices.
    pub fn polar_disk(radius: f64, h: f64) -> Result<Self> {
        if !(radius > 0.0 && h > 0.0) {
            return Err(Error::Mesh("disk radius and mesh width must be positive".into()));
        }
        let rings = (radius / h).ceil() as usize;
        let mut vertices = vec![[0.0, 0.0]];
        let mut ring_start = vec![0usize];
        let mut ring_len = vec![1usize];
        for i in 1..=rings {
            let r = radius * i as f64 / rings as f64;
            let n = 6 * i;
            ring_start.push(vertices.len());
            ring_len.push(n);
            for j in 0..n {
                let a = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                vertices.push([r * a.cos(), r * a.sin()]);
            }
        }
        let mut triangles = Vec::new();
        for i in 1..=rings {
            zip_rings(&vertices, &ring_start, &ring_len, i - 1, i, &mut triangles);
        }
        Self::new(vertices, triangles, radius / rings as f64)
    }

    /// Annulus `inner ≤ |x| ≤ outer` with rings of near-uniform spacing.
    pub fn polar_annulus(inner: f64, outer: f64, h: f64) -> Result<Self> {
        if !(inner > 0.0 && outer > inner && h > 0.0) {
            return Err(Error::Mesh("annulus needs 0 < inner < outer and h > 0".into()));
        }
        let rings = ((outer - inner) / h).ceil() as usize;
        let mut vertices = Vec::new();
        let mut ring_start = Vec::new();
        let mut ring_len = Vec::new();
        for i in 0..=rings {
            let r = inner + (outer - inner) * i as f64 / rings as f64;
            let n = ((2.0 * std::f64::consts::PI * r / h).round() as usize).max(6);
            ring_start.push(vertices.len());
            ring_len.push(n);
            for j in 0..n {
                let a = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                vertices.push([r * a.cos(), r * a.sin()]);
            }
        }
        let mut triangles = Vec::new();
        for i in 1..=rings {
            zip_rings(&vertices, &ring_start, &ring_len, i - 1, i, &mut triangles);
        }
        Self::new(vertices, triangles, (outer - inner) / rings as f64)
    }

    /// Structured rectangle `[x0,x1] × [y0,y1]` split into right triangles.
    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64, h: f64) -> Result<Self> {
        let nx = ((x1 - x0) / h).ceil().max(1.0) as usize;
        let ny = ((y1 - y0) / h).ceil().max(1.0) as usize;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([
                    x0 + (x1 - x0) * i as f64 / nx as f64,
                    y0 + (y1 - y0) * j as f64 / ny as f64,
                ]);
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        Self::new(vertices, triangles, ((x1 - x0) / nx as f64).max((y1 - y0) / ny as f64))
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Vertices incident to at least one boundary edge.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut b = vec![false; self.vertices.len()];
        for e in &self.boundary_edges {
            b[e[0]] = true;
            b[e[1]] = true;
        }
        b
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_degrees(&self) -> f64 {
        let mut best = 180.0f64;
        for tri in &self.triangles {
            for e in 0..3 {
                let a = self.vertices[tri[e]];
                let b = self.vertices[tri[(e + 1) % 3]];
                let c = self.vertices[tri[(e + 2) % 3]];
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [c[0] - a[0], c[1] - a[1]];
                let cos = (u[0] * v[0] + u[1] * v[1]) / ((u[0] * u[0] + u[1] * u[1]).sqrt() * (v[0] * v[0] + v[1] * v[1]).sqrt());
                best = best.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
        best
    }

    /// Vertex adjacency (sorted, without the vertex itself).
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.vertices.len()];
        for tri in &self.triangles {
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                nb[a].push(b);
                nb[b].push(a);
            }
        }
        for v in nb.iter_mut() {
            v.sort_unstable();
            v.dedup();
        }
        nb
    }

    /// Triangle containing chart point `x` and its barycentric coordinates.
    pub fn locate(&self, x: [f64; 2]) -> Option<(usize, [f64; 3])> {
        let g = &self.grid;
        let fx = (x[0] - g.origin[0]) / g.cell;
        let fy = (x[1] - g.origin[1]) / g.cell;
        if fx < -1e-9 || fy < -1e-9 {
            return None;
        }
        let ix = (fx.floor().max(0.0) as usize).min(g.nx - 1);
        let iy = (fy.floor().max(0.0) as usize).min(g.ny - 1);
        if fx > g.nx as f64 + 1e-9 || fy > g.ny as f64 + 1e-9 {
            return None;
        }
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in &g.buckets[iy * g.nx + ix] {
            let tri = self.triangles[t];
            let (a, b, c) = (self.vertices[tri[0]], self.vertices[tri[1]], self.vertices[tri[2]]);
            let area = signed_area(a, b, c);
            let l0 = signed_area(x, b, c) / area;
            let l1 = signed_area(a, x, c) / area;
            let l2 = 1.0 - l0 - l1;
            let worst = l0.min(l1).min(l2);
            if worst >= 0.0 {
                return Some((t, [l0, l1, l2]));
            }
            if worst > -1e-10 && best.map_or(true, |(_, _, w)| worst > w) {
                best = Some((t, [l0, l1, l2], worst));
            }
        }
        best.map(|(t, l, _)| (t, l))
    }

    /// Chart gradients of the three barycentric coordinates of triangle `t`.
    pub fn barycentric_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let tri = self.triangles[t];
        let (a, b, c) = (self.vertices[tri[0]], self.vertices[tri[1]], self.vertices[tri[2]]);
        let two_area = 2.0 * signed_area(a, b, c);
        [
            [(b[1] - c[1]) / two_area, (c[0] - b[0]) / two_area],
            [(c[1] - a[1]) / two_area, (a[0] - c[0]) / two_area],
            [(a[1] - b[1]) / two_area, (b[0] - a[0]) / two_area],
        ]
    }

    pub fn chart_area(&self, t: usize) -> f64 {
        let tri = self.triangles[t];
        signed_area(self.vertices[tri[0]], self.vertices[tri[1]], self.vertices[tri[2]])
    }

    /// Applies a vertex permutation: new index of old vertex `i` is `perm[i]`.
    pub fn renumbered(&self, perm: &[usize]) -> Result<Self> {
        let n = self.vertices.len();
        if perm.len() != n {
            return Err(Error::Mesh("permutation length mismatch".into()));
        }
        let mut verts = vec![[0.0; 2]; n];
        for (i, &p) in perm.iter().enumerate() {
            verts[p] = self.vertices[i];
        }
        let tris = self.triangles.iter().map(|t| [perm[t[0]], perm[t[1]], perm[t[2]]]).collect();
        Self::new(verts, tris, self.h)
    }

    /// Plain-text form: `vertices N`, N lines `x y`, `triangles M`, M lines `i j k`.
    pub fn to_text(&self) -> String {
        let mut s = format!("vertices {}\n", self.vertices.len());
        for v in &self.vertices {
            s.push_str(&format!("{:.17e} {:.17e}\n", v[0], v[1]));
        }
        s.push_str(&format!("triangles {}\n", self.triangles.len()));
        for t in &self.triangles {
            s.push_str(&format!("{} {} {}\n", t[0], t[1], t[2]));
        }
        s
    }

    pub fn from_text(text: &str, source: &str) -> Result<Self> {
        let perr = |line: usize, reason: &str| Error::Parse {
            path: source.to_string(),
            line,
            reason: reason.to_string(),
        };
        let mut rest = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        fn header<'a>(
            rest: &mut impl Iterator<Item = (usize, &'a str)>,
            want: &str,
            perr: &dyn Fn(usize, &str) -> Error,
        ) -> Result<usize> {
            let (ln, l) = rest.next().ok_or_else(|| perr(0, &format!("missing '{want}' header")))?;
            let mut it = l.split_whitespace();
            if it.next() != Some(want) {
                return Err(perr(ln, &format!("expected '{want} <count>'")));
            }
            it.next().and_then(|c| c.parse().ok()).ok_or_else(|| perr(ln, "invalid count"))
        }
        let nv = header(&mut rest, "vertices", &perr)?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, l) = rest.next().ok_or_else(|| perr(0, "truncated vertex list"))?;
            let xs: Vec<f64> = l
                .split_whitespace()
                .map(|w| w.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| perr(ln, "vertex line must hold two numbers"))?;
            if xs.len() != 2 {
                return Err(perr(ln, "vertex line must hold two numbers"));
            }
            vertices.push([xs[0], xs[1]]);
        }
        let nt = header(&mut rest, "triangles", &perr)?;
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (ln, l) = rest.next().ok_or_else(|| perr(0, "truncated triangle list"))?;
            let ids: Vec<usize> = l
                .split_whitespace()
                .map(|w| w.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| perr(ln, "triangle line must hold three indices"))?;
            if ids.len() != 3 {
                return Err(perr(ln, "triangle line must hold three indices"));
            }
            triangles.push([ids[0], ids[1], ids[2]]);
        }
        // nominal width: longest edge
        let mut h: f64 = 0.0;
        for t in &triangles {
            for e in 0..3 {
                if let (Some(a), Some(b)) = (vertices.get(t[e]), vertices.get(t[(e + 1) % 3])) {
                    h = h.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
                }
            }
        }
        Self::new(vertices, triangles, h)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, &path.display().to_string())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

// Triangulates the band between rings `a` (inner) and `b` by merging angles.
fn zip_rings(
    vertices: &[[f64; 2]],
    start: &[usize],
    len: &[usize],
    a: usize,
    b: usize,
    out: &mut Vec<[usize; 3]>,
) {
    let angle = |v: usize| {
        let p = vertices[v];
        let t = p[1].atan2(p[0]);
        if t < 0.0 {
            t + 2.0 * std::f64::consts::PI
        } else {
            t
        }
    };
    let (na, nb) = (len[a], len[b]);
    if na == 1 {
        let c = start[a];
        for j in 0..nb {
            out.push([c, start[b] + j, start[b] + (j + 1) % nb]);
        }
        return;
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let (mut i, mut j) = (0usize, 0usize);
    while i < na || j < nb {
        let ia = start[a] + i % na;
        let ia1 = start[a] + (i + 1) % na;
        let jb = start[b] + j % nb;
        let jb1 = start[b] + (j + 1) % nb;
        let next_a = if i + 1 == na { two_pi } else { angle(ia1) };
        let next_b = if j + 1 == nb { two_pi } else { angle(jb1) };
        let advance_a = j >= nb || (i < na && next_a < next_b);
        if advance_a {
            out.push([ia, jb, ia1]);
            i += 1;
        } else {
            out.push([ia, jb, jb1]);
            j += 1;
        }
    }
}

/// Least-squares fit of a polynomial in local coordinates around `center`.
///
/// `degree` 1 fits `c + g·d`; degree 2 adds the quadratic terms. Returns the
/// coefficient vector or `None` when the patch is rank deficient.
pub fn patch_fit(center: [f64; 2], points: &[[f64; 2]], values: &[f64], degree: usize) -> Option<DVector<f64>> {
    let ncoef = if degree == 2 { 6 } else { 3 };
    if points.len() < ncoef {
        return None;
    }
    let mut scale: f64 = 0.0;
    for p in points {
        scale = scale.max((p[0] - center[0]).abs()).max((p[1] - center[1]).abs());
    }
    if scale == 0.0 {
        return None;
    }
    let a = DMatrix::from_fn(points.len(), ncoef, |i, j| {
        let dx = (points[i][0] - center[0]) / scale;
        let dy = (points[i][1] - center[1]) / scale;
        match j {
            0 => 1.0,
            1 => dx,
            2 => dy,
            3 => dx * dx,
            4 => dx * dy,
            _ => dy * dy,
        }
    });
    let b = DVector::from_column_slice(values);
    let svd = a.svd(true, true);
    let sv = &svd.singular_values;
    if sv.min() < 1e-10 * sv.max() {
        return None;
    }
    let c = svd.solve(&b, 0.0).ok()?;
    // undo the scaling
    let mut out = c.clone();
    out[1] /= scale;
    out[2] /= scale;
    if degree == 2 {
        out[3] /= scale * scale;
        out[4] /= scale * scale;
        out[5] /= scale * scale;
    }
    Some(out)
}

/// Vertex patches of growing ring depth, at least `min_points` strong.
pub fn vertex_patches(mesh: &TriMesh, min_points: usize) -> Vec<Vec<usize>> {
    let nb = mesh.neighbors();
    (0..mesh.num_vertices())
        .map(|v| {
            let mut set = vec![v];
            let mut frontier = vec![v];
            for _ in 0..4 {
                let mut next = Vec::new();
                for &u in &frontier {
                    for &w in &nb[u] {
                        if !set.contains(&w) {
                            set.push(w);
                            next.push(w);
                        }
                    }
                }
                frontier = next;
                if set.len() >= min_points {
                    break;
                }
            }
            set.sort_unstable();
            set
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_mesh_is_valid() {
        let m = TriMesh::polar_disk(1.0, 0.1).unwrap();
        assert_eq!(m.num_vertices(), 1 + 3 * 10 * 11);
        assert!(m.min_angle_degrees() >= 20.0, "{}", m.min_angle_degrees());
        let area: f64 = (0..m.triangles.len()).map(|t| m.chart_area(t)).sum();
        // inscribed 60-gon
        let want = 0.5 * 60.0 * (2.0 * std::f64::consts::PI / 60.0).sin();
        assert!((area - want).abs() < 1e-12);
        assert_eq!(m.boundary_edges.len(), 60);
    }

    #[test]
    fn annulus_and_rectangle() {
        let m = TriMesh::polar_annulus(0.5, 1.0, 0.1).unwrap();
        assert!(m.min_angle_degrees() >= 20.0, "{}", m.min_angle_degrees());
        let r = TriMesh::rectangle(0.0, 2.0, 0.0, 1.0, 0.25).unwrap();
        let area: f64 = (0..r.triangles.len()).map(|t| r.chart_area(t)).sum();
        assert!((area - 2.0).abs() < 1e-14);
        assert_eq!(r.boundary_edges.len(), 24);
    }

    #[test]
    fn text_round_trip() {
        let m = TriMesh::polar_disk(1.0, 0.25).unwrap();
        let back = TriMesh::from_text(&m.to_text(), "mem").unwrap();
        assert_eq!(back.vertices, m.vertices);
        assert_eq!(back.triangles, m.triangles);
        assert!(TriMesh::from_text("vertices 1\n0 0\ntriangles 1\n0 1 2\n", "mem").is_err());
    }

    #[test]
    fn orientation_errors() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(TriMesh::new(v.clone(), vec![[0, 2, 1]], 1.0).is_err());
        assert!(TriMesh::new(v, vec![[0, 1, 2]], 1.0).is_ok());
    }

    #[test]
    fn point_location() {
        let m = TriMesh::polar_disk(1.0, 0.2).unwrap();
        let (t, l) = m.locate([0.31, -0.42]).unwrap();
        let tri = m.triangles[t];
        let x: f64 = (0..3).map(|i| l[i] * m.vertices[tri[i]][0]).sum();
        assert!((x - 0.31).abs() < 1e-14);
        assert!(m.locate([2.0, 0.0]).is_none());
    }

    #[test]
    fn quadratic_patch_fit_is_exact() {
        let pts: Vec<[f64; 2]> = (0..9).map(|i| [(i % 3) as f64 * 0.1, (i / 3) as f64 * 0.1]).collect();
        let vals: Vec<f64> = pts.iter().map(|p| 1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[0] + 3.0 * p[0] * p[1]).collect();
        let c = patch_fit([0.1, 0.1], &pts, &vals, 2).unwrap();
        // gradient at the center: (2 + 0.1 + 0.3, -1 + 0.3)
        assert!((c[1] - 2.4).abs() < 1e-12);
        assert!((c[2] + 0.7).abs() < 1e-12);
        assert!((c[3] - 0.5).abs() < 1e-10);
    }
}
