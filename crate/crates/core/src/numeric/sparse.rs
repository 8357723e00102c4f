//! Compressed sparse row matrices and a Jacobi-preconditioned CG solver.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a square matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            out[i] = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.cols[k] == i {
                    d[i] += self.vals[k];
                }
            }
        }
        d
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CgReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` for symmetric positive (semi)definite `A` by
/// Jacobi-preconditioned conjugate gradients.
///
/// When `null_weights` is given, `A` is assumed to have the constant vector as
/// kernel; iterates are kept orthogonal to it in the `null_weights` inner
/// product, which fixes `sum_i w_i x_i = 0`.
pub fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    null_weights: Option<&[f64]>,
    rel_tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, CgReport)> {
    let n = a.n;
    let diag = a.diagonal();
    if diag.iter().any(|d| *d <= 0.0 || !d.is_finite()) {
        return Err(Error::Solver("matrix has a non-positive diagonal entry".into()));
    }
    let project = |v: &mut [f64]| {
        if let Some(w) = null_weights {
            let wsum: f64 = w.iter().sum();
            let mean = dot(w, v) / wsum;
            for x in v.iter_mut() {
                *x -= mean;
            }
        }
    };
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    if null_weights.is_some() {
        // remove the incompatible part of the load (constant kernel)
        let mean = r.iter().sum::<f64>() / n as f64;
        for v in r.iter_mut() {
            *v -= mean;
        }
    }
    let bnorm = dot(&r, &r).sqrt();
    if bnorm == 0.0 {
        return Ok((
            x,
            CgReport {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, di)| ri / di).collect();
    project(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut res = 1.0;
    for it in 0..max_iter {
        a.mul_vec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::Solver(format!("matrix is singular in the search direction (p'Ap = {pap:e})")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = dot(&r, &r).sqrt() / bnorm;
        if res <= rel_tol {
            project(&mut x);
            return Ok((
                x,
                CgReport {
                    iterations: it + 1,
                    relative_residual: res,
                },
            ));
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        project(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solver(format!(
        "CG did not converge in {max_iter} iterations (relative residual {res:e})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize, neumann: bool) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            let mut d = 2.0;
            if neumann && (i == 0 || i == n - 1) {
                d = 1.0;
            }
            t.push((i, i, d));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn dirichlet_system() {
        let a = laplacian_1d(50, false);
        let b = vec![1.0; 50];
        let (x, rep) = pcg(&a, &b, None, 1e-12, 1000).unwrap();
        let mut ax = vec![0.0; 50];
        a.mul_vec(&x, &mut ax);
        assert!(ax.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-9));
        assert!(rep.iterations <= 50);
    }

    #[test]
    fn neumann_system_has_zero_weighted_mean() {
        let n = 40;
        let a = laplacian_1d(n, true);
        let mut b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let m = b.iter().sum::<f64>() / n as f64;
        b.iter_mut().for_each(|v| *v -= m);
        let w = vec![1.0; n];
        let (x, _) = pcg(&a, &b, Some(&w), 1e-12, 1000).unwrap();
        assert!(x.iter().sum::<f64>().abs() < 1e-9);
        let mut ax = vec![0.0; n];
        a.mul_vec(&x, &mut ax);
        assert!(ax.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-8));
    }
}
