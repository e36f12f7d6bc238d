use crate::{Error, Result};

/// Natural cubic spline (zero second derivative at both ends).
#[derive(Clone, Debug, PartialEq)]
pub struct NaturalSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl NaturalSpline {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::Config(format!(
                "spline needs at least two knots with one value each, got {n} knots and {} values",
                ys.len()
            )));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("spline knots must be strictly increasing".into()));
        }
        // Thomas algorithm on the interior second derivatives.
        let mut m = vec![0.0; n];
        if n > 2 {
            let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 0..k {
                diag[i] = 2.0 * (h[i] + h[i + 1]);
                rhs[i] = 6.0 * ((ys[i + 2] - ys[i + 1]) / h[i + 1] - (ys[i + 1] - ys[i]) / h[i]);
            }
            for i in 1..k {
                let w = h[i] / diag[i - 1];
                diag[i] -= w * h[i];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - h[i + 1] * m[i + 2]) / diag[i];
            }
        }
        Ok(NaturalSpline { xs, ys, m })
    }

    /// Knots spread evenly over [x0, x1], endpoints included.
    pub fn uniform(x0: f64, x1: f64, ys: Vec<f64>) -> Result<Self> {
        let n = ys.len();
        if n < 2 {
            return Err(Error::Config("spline needs at least two knots".into()));
        }
        let xs = (0..n).map(|i| x0 + (x1 - x0) * i as f64 / (n - 1) as f64).collect();
        Self::new(xs, ys)
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }

    fn segment(&self, x: f64) -> usize {
        self.xs
            .partition_point(|&k| k <= x)
            .clamp(1, self.xs.len() - 1)
            - 1
    }

    /// Value at `x`; outside the knot range the end segments are extended.
    pub fn value(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        (self.ys[i + 1] - self.ys[i]) / h
            + ((1.0 - 3.0 * a * a) * self.m[i] + (3.0 * b * b - 1.0) * self.m[i + 1]) * h / 6.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_knots() {
        let ys = vec![0.3, -1.0, 2.0, 0.5, 0.0];
        let s = NaturalSpline::uniform(0.0, 4.0, ys.clone()).unwrap();
        for (i, y) in ys.iter().enumerate() {
            assert!((s.value(i as f64) - y).abs() < 1e-14);
        }
    }

    #[test]
    fn linear_data_is_reproduced() {
        let s = NaturalSpline::new(vec![0.0, 0.5, 2.0, 3.0], vec![1.0, 2.0, 5.0, 7.0]).unwrap();
        assert!((s.value(1.3) - 3.6).abs() < 1e-13);
        assert!((s.derivative(2.7) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn first_derivative_is_continuous() {
        let s = NaturalSpline::uniform(0.0, 1.0, vec![0.0, 1.0, -1.0, 0.5, 0.2]).unwrap();
        for k in 1..4 {
            let x = k as f64 * 0.25;
            assert!((s.derivative(x - 1e-9) - s.derivative(x + 1e-9)).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(NaturalSpline::new(vec![0.0], vec![1.0]).is_err());
        assert!(NaturalSpline::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
    }
}
