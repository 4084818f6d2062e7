use super::DomainSpec;
use crate::jet::Jet;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

type VectorFn = dyn Fn(Jet, Jet) -> [Jet; 2] + Send + Sync;

/// Closed-form vector field evaluated on jets, so derivatives come for free.
#[derive(Clone)]
pub struct SmoothField {
    pub name: String,
    f: Arc<VectorFn>,
}

impl fmt::Debug for SmoothField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothField").field("name", &self.name).finish()
    }
}

impl SmoothField {
    pub fn new(name: &str, f: impl Fn(Jet, Jet) -> [Jet; 2] + Send + Sync + 'static) -> SmoothField {
        SmoothField { name: name.to_string(), f: Arc::new(f) }
    }

    /// Velocity `(d psi/dy, -d psi/dx)` of a stream function; divergence free.
    pub fn from_stream(name: &str, psi: impl Fn(Jet, Jet) -> Jet + Send + Sync + 'static) -> SmoothField {
        SmoothField::new(name, move |x, y| {
            let p = psi(x, y);
            [p.dy(), -p.dx()]
        })
    }

    pub fn eval(&self, x: Jet, y: Jet) -> [Jet; 2] {
        (self.f)(x, y)
    }

    pub fn value(&self, p: [f64; 2]) -> [f64; 2] {
        let (x, y) = Jet::point(p);
        let v = self.eval(x, y);
        [v[0].value(), v[1].value()]
    }

    /// Value and gradient `g[i][j] = d v_i / d x_j`.
    pub fn value_grad(&self, p: [f64; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
        let (x, y) = Jet::point(p);
        let v = self.eval(x, y);
        ([v[0].value(), v[1].value()], [v[0].grad(), v[1].grad()])
    }
}

/// Rigid rotation `(-y, x)`.
pub fn rotation() -> SmoothField {
    SmoothField::new("rotation", |x: Jet, y: Jet| [-y, x])
}

/// Smooth fields tangent to the boundary of `domain`.
pub fn smooth_field_suite(domain: &DomainSpec) -> Vec<SmoothField> {
    match *domain {
        DomainSpec::Disk { radius } => {
            let r2 = radius * radius;
            vec![
                rotation(),
                SmoothField::new("rotation_r2", |x: Jet, y: Jet| {
                    let r2 = x * x + y * y;
                    [-y * r2, x * r2]
                }),
                SmoothField::from_stream("stream_xy", move |x, y| (r2 - (x * x + y * y)) * (1.0 + x * y)),
            ]
        }
        DomainSpec::Annulus { inner, outer } => {
            let (a, b) = (inner * inner, outer * outer);
            vec![
                rotation(),
                SmoothField::new("rotation_r2", |x: Jet, y: Jet| {
                    let r2 = x * x + y * y;
                    [-y * r2, x * r2]
                }),
                SmoothField::from_stream("stream_band", move |x, y| {
                    let r2 = x * x + y * y;
                    (r2 - a) * (r2 - b) * (1.0 + x)
                }),
            ]
        }
        DomainSpec::Channel { length, height } => {
            let k = 2.0 * PI / length;
            vec![
                SmoothField::new("shear", move |_x: Jet, y: Jet| [y * (height - y), Jet::constant(0.0)]),
                SmoothField::new("uniform", |_x: Jet, _y: Jet| [Jet::constant(1.0), Jet::constant(0.0)]),
                SmoothField::from_stream("stream_wave", move |x, y| y * (height - y) * (1.0 + (x * k).sin())),
            ]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_is_tangential_and_solenoidal() {
        for dom in [
            DomainSpec::Disk { radius: 1.3 },
            DomainSpec::Annulus { inner: 0.5, outer: 1.0 },
            DomainSpec::Channel { length: 2.0, height: 1.0 },
        ] {
            for f in smooth_field_suite(&dom) {
                for (_, chart) in dom.charts() {
                    for k in 0..23 {
                        let s = chart.length() * k as f64 / 23.0;
                        let (v, g) = f.value_grad(chart.point(s));
                        let n = chart.normal(s);
                        assert!((v[0] * n[0] + v[1] * n[1]).abs() < 1e-12, "{}", f.name);
                        assert!((g[0][0] + g[1][1]).abs() < 1e-12, "{}", f.name);
                    }
                }
            }
        }
    }

    #[test]
    fn shear_sides_by_hand() {
        // v = (y(H - y), 0) on the bottom wall: 2[(Dv)n]_tau = -H and curl v = -H
        let h = 1.0;
        let f = &smooth_field_suite(&DomainSpec::Channel { length: 2.0, height: h })[0];
        let (_, g) = f.value_grad([0.7, 0.0]);
        let n = [0.0, -1.0];
        let t = [1.0, 0.0];
        let d01 = 0.5 * (g[0][1] + g[1][0]);
        let dn = [g[0][0] * n[0] + d01 * n[1], d01 * n[0] + g[1][1] * n[1]];
        assert_eq!(2.0 * (dn[0] * t[0] + dn[1] * t[1]), -h);
        assert_eq!(g[1][0] - g[0][1], -h);
    }
}
