//! Cubic interpolating splines.

use crate::error::{Error, Result};

/// End condition for [`CubicSpline`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndCondition {
    Natural,
    Clamped(f64),
}

/// C² cubic spline through `(x_i, y_i)`, stored by knot second derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>, left: EndCondition, right: EndCondition) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::InvalidArgument("spline needs at least two knots and matching values".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("spline knots must be strictly increasing".into()));
        }
        // tridiagonal system for second derivatives m_i
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            sub[i] = h0 / 6.0;
            diag[i] = (h0 + h1) / 3.0;
            sup[i] = h1 / 6.0;
            rhs[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        }
        let h_first = x[1] - x[0];
        match left {
            EndCondition::Natural => {
                diag[0] = 1.0;
            }
            EndCondition::Clamped(d) => {
                diag[0] = h_first / 3.0;
                sup[0] = h_first / 6.0;
                rhs[0] = (y[1] - y[0]) / h_first - d;
            }
        }
        let h_last = x[n - 1] - x[n - 2];
        match right {
            EndCondition::Natural => {
                diag[n - 1] = 1.0;
            }
            EndCondition::Clamped(d) => {
                sub[n - 1] = h_last / 6.0;
                diag[n - 1] = h_last / 3.0;
                rhs[n - 1] = d - (y[n - 1] - y[n - 2]) / h_last;
            }
        }
        // Thomas algorithm
        for i in 1..n {
            let w = sub[i] / diag[i - 1];
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut m = vec![0.0; n];
        m[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = (rhs[i] - sup[i] * m[i + 1]) / diag[i];
        }
        Ok(Self { x, y, m })
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    /// Second derivatives at the knots; the spline's second derivative is
    /// piecewise linear between them.
    pub fn knot_second_derivatives(&self) -> &[f64] {
        &self.m
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.x.len();
        self.x.partition_point(|k| *k <= t).clamp(1, n - 1) - 1
    }

    /// Value, first and second derivative at `t` (cubic extrapolation outside the knots).
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let v = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d = (y1 - y0) / h - (3.0 * a * a - 1.0) / 6.0 * h * m0 + (3.0 * b * b - 1.0) / 6.0 * h * m1;
        let dd = a * m0 + b * m1;
        (v, d, dd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubic_with_clamped_ends() {
        let f = |x: f64| x * x * x - 2.0 * x + 1.0;
        let df = |x: f64| 3.0 * x * x - 2.0;
        let xs: Vec<f64> = (0..7).map(|i| i as f64 * 0.5).collect();
        let ys: Vec<f64> = xs.iter().map(|x| f(*x)).collect();
        let s = CubicSpline::new(xs, ys, EndCondition::Clamped(df(0.0)), EndCondition::Clamped(df(3.0))).unwrap();
        for i in 0..30 {
            let t = i as f64 * 0.1;
            let (v, d, dd) = s.eval(t);
            assert!((v - f(t)).abs() < 1e-12);
            assert!((d - df(t)).abs() < 1e-11);
            assert!((dd - 6.0 * t).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_unsorted_knots() {
        assert!(CubicSpline::new(vec![0.0, 0.0], vec![1.0, 2.0], EndCondition::Natural, EndCondition::Natural).is_err());
    }
}
