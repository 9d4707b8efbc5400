//! Symmetric tridiagonal eigenvalues by Sturm bisection, eigenvectors by
//! inverse iteration.

use crate::num::Real;

/// Real symmetric tridiagonal matrix; `off[i]` couples rows `i` and `i+1`.
#[derive(Clone, Debug)]
pub(crate) struct Tridiag<T> {
    pub diag: Vec<T>,
    pub off: Vec<T>,
}

impl<T: Real> Tridiag<T> {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: T) -> usize {
        let tiny = T::eps() * T::eps();
        let mut count = 0;
        let mut d = T::one();
        for i in 0..self.len() {
            let b2 = if i == 0 { T::zero() } else { self.off[i - 1] * self.off[i - 1] };
            d = self.diag[i] - x - if i == 0 { T::zero() } else { b2 / d };
            if d == T::zero() {
                d = -tiny;
            }
            if d < T::zero() {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (T, T) {
        let n = self.len();
        let mut lo = T::max_value().unwrap();
        let mut hi = T::min_value().unwrap();
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { T::zero() }
                + if i + 1 < n { self.off[i].abs() } else { T::zero() };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Eigenvalue with ascending index `r` (0-based).
    pub fn eigenvalue(&self, r: usize) -> T {
        let (mut lo, mut hi) = self.gershgorin();
        for _ in 0..200 {
            let mid = (lo + hi) * T::lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > r {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (lo + hi) * T::lit(0.5)
    }

    /// Eigenvector for an accurate eigenvalue `lambda`, unit Euclidean norm.
    pub fn eigenvector(&self, lambda: T) -> Vec<T> {
        let n = self.len();
        let scale = self.gershgorin().1.abs().max(self.gershgorin().0.abs()).max(T::one());
        let shift = lambda + scale * T::eps() * T::lit(8.0);
        let mut x: Vec<T> = (0..n)
            .map(|i| T::one() + T::lit(0.5) * (T::lit(0.7) * T::from_int(i)).sin())
            .collect();
        let lu = TriLu::factor(self, shift, scale * T::eps());
        for _ in 0..3 {
            x = lu.solve(&x);
            let norm = x.iter().fold(T::zero(), |s, &v| s + v * v).sqrt();
            for v in &mut x {
                *v /= norm;
            }
        }
        x
    }
}

/// LU with partial pivoting of `T - shift*I` (two super-diagonals after
/// pivoting).
struct TriLu<T> {
    u0: Vec<T>,
    u1: Vec<T>,
    u2: Vec<T>,
    l: Vec<T>,
    swap: Vec<bool>,
}

impl<T: Real> TriLu<T> {
    fn factor(a: &Tridiag<T>, shift: T, tiny: T) -> Self {
        let n = a.len();
        let mut d: Vec<T> = a.diag.iter().map(|&v| v - shift).collect();
        let mut du: Vec<T> = a.off.clone();
        let dl: Vec<T> = a.off.clone();
        let mut du2 = vec![T::zero(); n.saturating_sub(2)];
        let mut l = vec![T::zero(); n.saturating_sub(1)];
        let mut swap = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == T::zero() {
                    d[i] = tiny;
                }
                let f = dl[i] / d[i];
                l[i] = f;
                d[i + 1] -= f * du[i];
            } else {
                swap[i] = true;
                let f = d[i] / dl[i];
                l[i] = f;
                d[i] = dl[i];
                let tmp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp - f * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -f * du[i + 1];
                }
            }
        }
        if n > 0 && d[n - 1] == T::zero() {
            d[n - 1] = tiny;
        }
        Self { u0: d, u1: du, u2: du2, l, swap }
    }

    fn solve(&self, b: &[T]) -> Vec<T> {
        let n = b.len();
        let mut x = b.to_vec();
        for i in 0..n.saturating_sub(1) {
            if self.swap[i] {
                x.swap(i, i + 1);
            }
            let xi = x[i];
            x[i + 1] -= self.l[i] * xi;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            if i + 1 < n {
                s -= self.u1[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= self.u2[i] * x[i + 2];
            }
            x[i] = s / self.u0[i];
        }
        x
    }
}
