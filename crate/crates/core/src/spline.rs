//! Natural cubic spline on a uniform grid.

use crate::num::Real;

#[derive(Clone, Debug)]
pub struct UniformSpline<T> {
    x0: T,
    h: T,
    y: Vec<T>,
    m: Vec<T>,
}

impl<T: Real> UniformSpline<T> {
    /// Interpolates `y[i]` at `x0 + i*h`. Needs at least 3 samples.
    pub fn new(x0: T, h: T, y: Vec<T>) -> Self {
        let n = y.len();
        assert!(n >= 3, "spline needs three samples");
        // second derivatives from the tridiagonal system with m_0 = m_{n-1} = 0
        let mut m = vec![T::zero(); n];
        let mut cp = vec![T::zero(); n];
        let mut dp = vec![T::zero(); n];
        let six_h2 = T::lit(6.0) / (h * h);
        for i in 1..n - 1 {
            let rhs = (y[i + 1] - y[i] * T::lit(2.0) + y[i - 1]) * six_h2;
            let denom = T::lit(4.0) - cp[i - 1];
            cp[i] = T::one() / denom;
            dp[i] = (rhs - dp[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = dp[i] - cp[i] * m[i + 1];
        }
        Self { x0, h, y, m }
    }

    fn locate(&self, x: T) -> (usize, T) {
        let n = self.y.len();
        let s = ((x - self.x0) / self.h).max(T::zero());
        let i = s.floor().to_usize().unwrap_or(0).min(n - 2);
        (i, s - T::from_int(i))
    }

    /// Value, first and second derivative at `x` (clamped to the grid).
    pub fn eval3(&self, x: T) -> (T, T, T) {
        let (i, t) = self.locate(x);
        let h = self.h;
        let (y0, y1, m0, m1) = (self.y[i], self.y[i + 1], self.m[i], self.m[i + 1]);
        let u = T::one() - t;
        let six = T::lit(6.0);
        let v = u * y0 + t * y1 + h * h / six * ((u * u * u - u) * m0 + (t * t * t - t) * m1);
        let three = T::lit(3.0);
        let d = (y1 - y0) / h + h / six * ((T::one() - three * u * u) * m0 + (three * t * t - T::one()) * m1);
        let dd = u * m0 + t * m1;
        (v, d, dd)
    }

    pub fn eval(&self, x: T) -> T {
        self.eval3(x).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_linear_exactly() {
        let s = UniformSpline::new(0.0, 0.5, (0..9).map(|i| 2.0 * i as f64 * 0.5 + 1.0).collect());
        let (v, d, dd) = s.eval3(1.3);
        assert!((v - 3.6).abs() < 1e-14 && (d - 2.0).abs() < 1e-13 && dd.abs() < 1e-12);
    }

    #[test]
    fn smooth_function_fourth_order_interior() {
        let n = 201;
        let h = std::f64::consts::PI / (n - 1) as f64;
        let s = UniformSpline::new(0.0, h, (0..n).map(|i| (i as f64 * h).sin()).collect());
        assert!((s.eval(1.0) - 1f64.sin()).abs() < 1e-8);
    }
}
