//! Scalar abstraction so the same margin formulas yield values and gradients.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Largest number of parameters a margin can depend on.
pub const MAX_PARAMS: usize = 17;

pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(x: f64) -> Self;
    fn val(self) -> f64;

    /// Lifts a root `k` of `a k^2 + b k + c`, found numerically on the values,
    /// back into `Self` by implicit differentiation.
    fn implicit_root(a: Self, b: Self, c: Self, k: f64) -> Self;
}

impl Real for f64 {
    fn cst(x: f64) -> Self {
        x
    }

    fn val(self) -> f64 {
        self
    }

    fn implicit_root(_: f64, _: f64, _: f64, k: f64) -> f64 {
        k
    }
}

/// Forward-mode dual number carrying a gradient over up to [`MAX_PARAMS`] inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: [f64; MAX_PARAMS],
}

impl Dual {
    pub fn constant(v: f64) -> Self {
        Dual {
            v,
            d: [0.0; MAX_PARAMS],
        }
    }

    /// The `i`-th input variable, with value `v`.
    pub fn var(v: f64, i: usize) -> Self {
        let mut d = [0.0; MAX_PARAMS];
        d[i] = 1.0;
        Dual { v, d }
    }

    fn map(self, v: f64, f: impl Fn(f64) -> f64) -> Self {
        let mut d = self.d;
        for x in d.iter_mut() {
            *x = f(*x);
        }
        Dual { v, d }
    }

    fn zip(self, o: Self, v: f64, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut d = [0.0; MAX_PARAMS];
        for i in 0..MAX_PARAMS {
            d[i] = f(self.d[i], o.d[i]);
        }
        Dual { v, d }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        self.zip(o, self.v + o.v, |a, b| a + b)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        self.zip(o, self.v - o.v, |a, b| a - b)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        let (x, y) = (self.v, o.v);
        self.zip(o, x * y, |a, b| a * y + x * b)
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let (x, y) = (self.v, o.v);
        self.zip(o, x / y, |a, b| (a * y - x * b) / (y * y))
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        self.map(-self.v, |a| -a)
    }
}

impl Real for Dual {
    fn cst(x: f64) -> Self {
        Dual::constant(x)
    }

    fn val(self) -> f64 {
        self.v
    }

    fn implicit_root(a: Dual, b: Dual, c: Dual, k: f64) -> Dual {
        let slope = 2.0 * a.v * k + b.v;
        let mut d = [0.0; MAX_PARAMS];
        for i in 0..MAX_PARAMS {
            d[i] = -(a.d[i] * k * k + b.d[i] * k + c.d[i]) / slope;
        }
        Dual { v: k, d }
    }
}

/// Real roots of `a x^2 + b x + c` via the cancellation-free formula.
pub fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if a.abs() <= 1e-14 * scale {
        if b == 0.0 {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let s = disc.sqrt();
    let q = -0.5 * (b + s.copysign(b));
    let mut roots = vec![q / a];
    if q != 0.0 {
        roots.push(c / q);
    }
    roots.sort_by(|x, y| x.total_cmp(y));
    roots
}

/// Positive roots of `a x^2 + b x + c` in increasing order; roots within
/// `1e-12` of zero count as non-positive.
pub fn positive_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    quadratic_roots(a, b, c).into_iter().filter(|&r| r > 1e-12).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_arithmetic() {
        let x = Dual::var(3.0, 0);
        let y = Dual::var(2.0, 1);
        let f = (x * x + Dual::cst(1.0)) / y - x;
        assert!((f.v - 2.0).abs() < 1e-15);
        assert!((f.d[0] - (2.0 * 3.0 / 2.0 - 1.0)).abs() < 1e-15);
        assert!((f.d[1] + 10.0 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn stable_roots() {
        let r = quadratic_roots(1.0, -1e8, 1.0);
        assert!((r[0] - 1e-8).abs() < 1e-20);
        assert_eq!(positive_roots(1.0, 0.0, -4.0), vec![2.0]);
        assert!(positive_roots(1.0, 0.0, 4.0).is_empty());
        assert_eq!(quadratic_roots(0.0, 2.0, -4.0), vec![2.0]);
    }

    #[test]
    fn implicit_root_derivative() {
        // k^2 - p = 0 has root sqrt(p) with dk/dp = 1 / (2 sqrt(p)).
        let p = Dual::var(4.0, 0);
        let k = Dual::implicit_root(Dual::cst(1.0), Dual::cst(0.0), -p, 2.0);
        assert!((k.d[0] - 0.25).abs() < 1e-15);
    }
}
