//! Gauss rules on the unit interval and on the reference triangle.

use std::f64::consts::PI;

/// Gauss-Legendre rule with `n` points mapped to `[0, 1]`; exact for degree `2n - 1`.
#[derive(Clone, Debug)]
pub struct LineRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LineRule {
    pub fn gauss(n: usize) -> LineRule {
        assert!(n >= 1);
        let mut points = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            // Newton on P_n from the Chebyshev-like initial guess
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            points.push(0.5 * (1.0 - x));
            weights.push(1.0 / ((1.0 - x * x) * dp * dp));
        }
        let mut pairs: Vec<(f64, f64)> = points.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // enforce exact mirror symmetry about 1/2
        let m = pairs.len();
        for k in 0..m / 2 {
            let (a, wa) = pairs[k];
            let (b, wb) = pairs[m - 1 - k];
            let s = 0.5 * (a + (1.0 - b));
            let s = 1.0 - (1.0 - s);
            let w = 0.5 * (wa + wb);
            pairs[k] = (s, w);
            pairs[m - 1 - k] = (1.0 - s, w);
        }
        if m % 2 == 1 {
            pairs[m / 2].0 = 0.5;
        }
        LineRule {
            points: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    /// Smallest Gauss rule exact for polynomials of degree `degree`.
    pub fn of_degree(degree: usize) -> LineRule {
        LineRule::gauss(degree / 2 + 1)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Quadrature on the reference triangle `{xi, eta >= 0, xi + eta <= 1}` (area 1/2).
#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Collapsed (Duffy) tensor Gauss rule exact for total degree `degree`.
    pub fn of_degree(degree: usize) -> TriangleRule {
        let n = (degree + 2).div_ceil(2);
        let g = LineRule::gauss(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (i, &u) in g.points.iter().enumerate() {
            for (j, &v) in g.points.iter().enumerate() {
                points.push([u, v * (1.0 - u)]);
                weights.push(g.weights[i] * g.weights[j] * (1.0 - u));
            }
        }
        TriangleRule { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Rule on the `4^levels` congruent sub-triangles of the reference triangle.
    pub fn subdivided(&self, levels: usize) -> TriangleRule {
        let mut tris = vec![[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]];
        for _ in 0..levels {
            let mut next = Vec::with_capacity(tris.len() * 4);
            for t in &tris {
                let m = |a: [f64; 2], b: [f64; 2]| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                let (a, b, c) = (t[0], t[1], t[2]);
                let (ab, bc, ca) = (m(a, b), m(b, c), m(c, a));
                next.push([a, ab, ca]);
                next.push([ab, b, bc]);
                next.push([ca, bc, c]);
                next.push([ab, bc, ca]);
            }
            tris = next;
        }
        let scale = 1.0 / tris.len() as f64;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for t in &tris {
            for (p, w) in self.points.iter().zip(&self.weights) {
                let x = t[0][0] + (t[1][0] - t[0][0]) * p[0] + (t[2][0] - t[0][0]) * p[1];
                let y = t[0][1] + (t[1][1] - t[0][1]) * p[0] + (t[2][1] - t[0][1]) * p[1];
                points.push([x, y]);
                weights.push(w * scale);
            }
        }
        TriangleRule { points, weights }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_rule_integrates_monomials() {
        for n in 1..8 {
            let r = LineRule::gauss(n);
            for p in 0..(2 * n) {
                let s: f64 = r.points.iter().zip(&r.weights).map(|(x, w)| w * x.powi(p as i32)).sum();
                assert!((s - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn line_rule_is_symmetric() {
        let r = LineRule::gauss(5);
        for k in 0..5 {
            assert_eq!(r.points[k], 1.0 - r.points[4 - k]);
            assert_eq!(r.weights[k], r.weights[4 - k]);
        }
    }

    #[test]
    fn triangle_rule_integrates_monomials() {
        // int_T xi^a eta^b = a! b! / (a + b + 2)!
        let fact = |n: u32| (1..=n).fold(1.0, |acc, k| acc * k as f64);
        for deg in [2usize, 4, 6, 8] {
            let r = TriangleRule::of_degree(deg);
            for a in 0..=deg {
                for b in 0..=(deg - a) {
                    let s: f64 = r
                        .points
                        .iter()
                        .zip(&r.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    let exact = fact(a as u32) * fact(b as u32) / fact((a + b + 2) as u32);
                    assert!((s - exact).abs() < 1e-14, "deg {deg} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn subdivided_rule_keeps_area() {
        let r = TriangleRule::of_degree(4).subdivided(2);
        let s: f64 = r.weights.iter().sum();
        assert!((s - 0.5).abs() < 1e-15);
        assert_eq!(r.len(), 16 * TriangleRule::of_degree(4).len());
    }
}
