//! Truncated bivariate Taylor jets.
//!
//! A [`Jet`] carries the Taylor coefficients of a scalar function of `(x, y)`
//! up to total degree three around an evaluation point. Arithmetic and the
//! usual elementary functions propagate all partial derivatives exactly, so
//! closed-form test fields get their gradients, Laplacians and third
//! derivatives without finite differences.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub const ORDER: usize = 3;
const LEN: usize = 10;

#[inline]
const fn slot(i: usize, j: usize) -> usize {
    // monomials ordered by total degree: 1, x, y, x2, xy, y2, x3, x2y, xy2, y3
    let d = i + j;
    d * (d + 1) / 2 + j
}

const MONOMIALS: [(usize, usize); LEN] = [
    (0, 0),
    (1, 0),
    (0, 1),
    (2, 0),
    (1, 1),
    (0, 2),
    (3, 0),
    (2, 1),
    (1, 2),
    (0, 3),
];

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Taylor coefficients `c[i,j]` of `dx^i dy^j` with `i + j <= 3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    c: [f64; LEN],
}

impl Jet {
    pub fn constant(v: f64) -> Jet {
        let mut c = [0.0; LEN];
        c[0] = v;
        Jet { c }
    }

    /// Independent variable `x` (`axis = 0`) or `y` (`axis = 1`) at `value`.
    pub fn var(value: f64, axis: usize) -> Jet {
        let mut j = Jet::constant(value);
        j.c[if axis == 0 { 1 } else { 2 }] = 1.0;
        j
    }

    /// The pair of coordinate jets at a point.
    pub fn point(p: [f64; 2]) -> (Jet, Jet) {
        (Jet::var(p[0], 0), Jet::var(p[1], 1))
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Mixed partial derivative `d^(i+j) / dx^i dy^j` at the expansion point.
    pub fn d(&self, i: usize, j: usize) -> f64 {
        assert!(i + j <= ORDER);
        self.c[slot(i, j)] * factorial(i) * factorial(j)
    }

    pub fn grad(&self) -> [f64; 2] {
        [self.d(1, 0), self.d(0, 1)]
    }

    pub fn laplacian(&self) -> f64 {
        self.d(2, 0) + self.d(0, 2)
    }

    /// Partial derivative as a jet. The top-degree coefficients of the result
    /// are unknown and set to zero, so only degrees `<= 2` are meaningful.
    pub fn dx(&self) -> Jet {
        self.partial(0)
    }

    pub fn dy(&self) -> Jet {
        self.partial(1)
    }

    fn partial(&self, axis: usize) -> Jet {
        let mut out = [0.0; LEN];
        for (k, &(i, j)) in MONOMIALS.iter().enumerate() {
            if i + j == ORDER {
                continue;
            }
            let (si, sj, mult) = if axis == 0 {
                (i + 1, j, (i + 1) as f64)
            } else {
                (i, j + 1, (j + 1) as f64)
            };
            out[k] = self.c[slot(si, sj)] * mult;
        }
        Jet { c: out }
    }

    fn nilpotent(&self) -> Jet {
        let mut n = *self;
        n.c[0] = 0.0;
        n
    }

    /// Compose with a scalar function given its derivatives `f, f', f'', f'''` at the value.
    fn compose(&self, derivs: [f64; 4]) -> Jet {
        let d = self.nilpotent();
        let d2 = d * d;
        let d3 = d2 * d;
        let mut out = Jet::constant(derivs[0]);
        out = out + d * derivs[1] + d2 * (derivs[2] / 2.0) + d3 * (derivs[3] / 6.0);
        out
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose([s, c, -s, -c])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose([c, -s, -c, s])
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose([e, e, e, e])
    }

    pub fn sqrt(&self) -> Jet {
        let v = self.value();
        let r = v.sqrt();
        self.compose([r, 0.5 / r, -0.25 / (r * v), 0.375 / (r * v * v)])
    }

    pub fn powi(&self, n: i32) -> Jet {
        let mut out = Jet::constant(1.0);
        let base = if n >= 0 { *self } else { self.recip() };
        for _ in 0..n.unsigned_abs() {
            out = out * base;
        }
        out
    }

    pub fn recip(&self) -> Jet {
        let v = self.value();
        self.compose([1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v), -6.0 / (v * v * v * v)])
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, o: Jet) -> Jet {
        for k in 0..LEN {
            self.c[k] += o.c[k];
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, o: Jet) -> Jet {
        for k in 0..LEN {
            self.c[k] -= o.c[k];
        }
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut out = [0.0; LEN];
        for (a, &(ia, ja)) in MONOMIALS.iter().enumerate() {
            if self.c[a] == 0.0 {
                continue;
            }
            for (b, &(ib, jb)) in MONOMIALS.iter().enumerate() {
                let (i, j) = (ia + ib, ja + jb);
                if i + j <= ORDER {
                    out[slot(i, j)] += self.c[a] * o.c[b];
                }
            }
        }
        Jet { c: out }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        for v in &mut self.c {
            *v = -*v;
        }
        self
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, o: f64) -> Jet {
        self.c[0] += o;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, o: f64) -> Jet {
        self.c[0] -= o;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, o: f64) -> Jet {
        for v in &mut self.c {
            *v *= o;
        }
        self
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, o: f64) -> Jet {
        self * (1.0 / o)
    }
}

impl Add<Jet> for f64 {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        o + self
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        -o + self
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        o * self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd<F: Fn(f64, f64) -> f64>(f: &F, p: [f64; 2], i: usize, j: usize) -> f64 {
        // nested central differences
        let h = 1e-3;
        match (i, j) {
            (0, 0) => f(p[0], p[1]),
            _ if i > 0 => {
                let g = |x: f64, y: f64| fd(f, [x, y], i - 1, j);
                (g(p[0] + h, p[1]) - g(p[0] - h, p[1])) / (2.0 * h)
            }
            _ => {
                let g = |x: f64, y: f64| fd(f, [x, y], i, j - 1);
                (g(p[0], p[1] + h) - g(p[0], p[1] - h)) / (2.0 * h)
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = [0.3, -0.7];
        let (x, y) = Jet::point(p);
        let jet = (x * y).sin() + (x * x - y).exp() * y.cos() + (1.0 + x * x + y * y).sqrt() / (2.0 + x);
        let f = |x: f64, y: f64| {
            (x * y).sin() + (x * x - y).exp() * y.cos() + (1.0 + x * x + y * y).sqrt() / (2.0 + x)
        };
        for &(i, j) in MONOMIALS.iter() {
            let expect = fd(&f, p, i, j);
            let got = jet.d(i, j);
            assert!((got - expect).abs() < 1e-4 * (1.0 + expect.abs()), "d({i},{j}): {got} vs {expect}");
        }
    }

    #[test]
    fn partial_commutes_with_d() {
        let (x, y) = Jet::point([0.5, 0.25]);
        let f = x.powi(3) * y + y.powi(2) * x.sin();
        let fx = f.dx();
        let fy = f.dy();
        assert!((fx.d(0, 1) - f.d(1, 1)).abs() < 1e-14);
        assert!((fx.d(1, 1) - f.d(2, 1)).abs() < 1e-13);
        assert!((fy.d(0, 2) - f.d(0, 3)).abs() < 1e-13);
        assert!((fy.value() - f.d(0, 1)).abs() < 1e-14);
    }

    #[test]
    fn polynomial_is_exact() {
        let (x, y) = Jet::point([2.0, -1.0]);
        let f = x * x * y - 3.0 * y * y * y + x;
        assert_eq!(f.value(), -4.0 + 3.0 + 2.0);
        assert_eq!(f.d(2, 1), 2.0);
        assert_eq!(f.d(0, 3), -18.0);
        assert_eq!(f.laplacian(), 2.0 * -1.0 + -18.0 * -1.0);
    }
}
