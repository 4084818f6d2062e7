//! Curved 2D domains with exact boundary charts.
//!
//! Every boundary component carries one periodic arclength chart. The chart
//! tangent `tau` is the outward normal turned a quarter counterclockwise,
//! `tau = (-n_y, n_x)`, so the domain lies to the left when `s` increases and
//! the curvature defined by `dn/ds = kappa tau` is `+1/R` on an outer circle,
//! `-1/R0` on an inner circle and `0` on a flat wall.

mod fields;
mod frame;
mod mesh;
mod probe;

pub use fields::{rotation, smooth_field_suite, SmoothField};
pub use frame::{
    boundary_frame, check_navier_curl_identity, shape_operator_apply, BoundaryFrame, FramePoint,
};
pub use mesh::{build_mesh, BoundaryEdge, Mesh};
pub use probe::BallProbe;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Analytic parametrization of one boundary component by arclength `s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Chart {
    /// Circle of `radius` centred at the origin. `outer` means the domain is inside it.
    Circle { radius: f64, outer: bool },
    /// Straight wall `y = height` of the periodic channel `[0, length)`.
    Wall { height: f64, length: f64, top: bool },
}

impl Chart {
    pub fn length(&self) -> f64 {
        match *self {
            Chart::Circle { radius, .. } => 2.0 * PI * radius,
            Chart::Wall { length, .. } => length,
        }
    }

    fn angle(&self, s: f64) -> f64 {
        match *self {
            Chart::Circle { radius, outer } => {
                if outer {
                    s / radius
                } else {
                    -s / radius
                }
            }
            Chart::Wall { .. } => 0.0,
        }
    }

    pub fn point(&self, s: f64) -> [f64; 2] {
        match *self {
            Chart::Circle { radius, .. } => {
                let (sn, cs) = self.angle(s).sin_cos();
                [radius * cs, radius * sn]
            }
            Chart::Wall { height, length, top } => {
                if top {
                    [length - s, height]
                } else {
                    [s, height]
                }
            }
        }
    }

    /// Outward unit normal.
    pub fn normal(&self, s: f64) -> [f64; 2] {
        match *self {
            Chart::Circle { outer, .. } => {
                let (sn, cs) = self.angle(s).sin_cos();
                if outer {
                    [cs, sn]
                } else {
                    [-cs, -sn]
                }
            }
            Chart::Wall { top, .. } => {
                if top {
                    [0.0, 1.0]
                } else {
                    [0.0, -1.0]
                }
            }
        }
    }

    pub fn tangent(&self, s: f64) -> [f64; 2] {
        let n = self.normal(s);
        [-n[1], n[0]]
    }

    pub fn curvature(&self, _s: f64) -> f64 {
        match *self {
            Chart::Circle { radius, outer } => {
                if outer {
                    1.0 / radius
                } else {
                    -1.0 / radius
                }
            }
            Chart::Wall { .. } => 0.0,
        }
    }

    /// Distance from `x` to the chart curve.
    pub fn distance(&self, x: [f64; 2]) -> f64 {
        match *self {
            Chart::Circle { radius, .. } => ((x[0] * x[0] + x[1] * x[1]).sqrt() - radius).abs(),
            Chart::Wall { height, .. } => (x[1] - height).abs(),
        }
    }

    /// Arclength parameter of the closest chart point, in `[0, length)`.
    pub fn parameter(&self, x: [f64; 2]) -> f64 {
        let s = match *self {
            Chart::Circle { radius, outer } => {
                let th = x[1].atan2(x[0]);
                if outer {
                    th * radius
                } else {
                    -th * radius
                }
            }
            Chart::Wall { length, top, .. } => {
                if top {
                    length - x[0]
                } else {
                    x[0]
                }
            }
        };
        let l = self.length();
        let r = s.rem_euclid(l);
        if r >= l {
            0.0
        } else {
            r
        }
    }
}

/// The three supported domains.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainSpec {
    Disk { radius: f64 },
    Annulus { inner: f64, outer: f64 },
    /// Periodic in `x` with period `length`; slip walls at `y = 0` and `y = height`.
    Channel { length: f64, height: f64 },
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DomainSpec::Disk { radius } => radius > 0.0 && radius.is_finite(),
            DomainSpec::Annulus { inner, outer } => inner > 0.0 && inner < outer && outer.is_finite(),
            DomainSpec::Channel { length, height } => {
                length > 0.0 && height > 0.0 && length.is_finite() && height.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidDomain(format!("{self:?}")))
        }
    }

    /// Charts with their labels, one per boundary component.
    pub fn charts(&self) -> Vec<(&'static str, Chart)> {
        match *self {
            DomainSpec::Disk { radius } => vec![("outer", Chart::Circle { radius, outer: true })],
            DomainSpec::Annulus { inner, outer } => vec![
                ("inner", Chart::Circle { radius: inner, outer: false }),
                ("outer", Chart::Circle { radius: outer, outer: true }),
            ],
            DomainSpec::Channel { length, height } => vec![
                ("bottom", Chart::Wall { height: 0.0, length, top: false }),
                ("top", Chart::Wall { height, length, top: true }),
            ],
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            DomainSpec::Disk { radius } => 2.0 * radius,
            DomainSpec::Annulus { outer, .. } => 2.0 * outer,
            DomainSpec::Channel { length, height } => (length * length + height * height).sqrt(),
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            DomainSpec::Disk { radius } => PI * radius * radius,
            DomainSpec::Annulus { inner, outer } => PI * (outer * outer - inner * inner),
            DomainSpec::Channel { length, height } => length * height,
        }
    }

    /// Smallest geometric feature the mesh size must resolve.
    pub fn min_feature(&self) -> f64 {
        match *self {
            DomainSpec::Disk { radius } => radius,
            DomainSpec::Annulus { inner, outer } => (outer - inner) / 2.0,
            DomainSpec::Channel { length, height } => height.min(length) / 2.0,
        }
    }

    /// Closed-domain membership, with a small tolerance.
    pub fn contains(&self, x: [f64; 2]) -> bool {
        let tol = 1e-12;
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        match *self {
            DomainSpec::Disk { radius } => r <= radius + tol,
            DomainSpec::Annulus { inner, outer } => r >= inner - tol && r <= outer + tol,
            DomainSpec::Channel { height, .. } => x[1] >= -tol && x[1] <= height + tol,
        }
    }

    /// True when rigid motions tangent to the boundary exist (rotation or translation).
    pub fn has_rigid_kernel(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_normal_derivative(chart: &Chart, s: f64, ds: f64) -> [f64; 2] {
        let a = chart.normal(s + ds);
        let b = chart.normal(s - ds);
        [(a[0] - b[0]) / (2.0 * ds), (a[1] - b[1]) / (2.0 * ds)]
    }

    #[test]
    fn normal_derivative_is_curvature_times_tangent() {
        let charts = [
            Chart::Circle { radius: 2.0, outer: true },
            Chart::Circle { radius: 0.5, outer: false },
            Chart::Wall { height: 1.0, length: 2.0, top: true },
            Chart::Wall { height: 0.0, length: 2.0, top: false },
        ];
        for chart in charts {
            for k in 0..17 {
                let s = chart.length() * k as f64 / 17.0;
                let mut prev = f64::INFINITY;
                for ds in [1e-2, 5e-3] {
                    let dn = fd_normal_derivative(&chart, s, ds);
                    let t = chart.tangent(s);
                    let kap = chart.curvature(s);
                    let err = ((dn[0] - kap * t[0]).powi(2) + (dn[1] - kap * t[1]).powi(2)).sqrt();
                    // O(ds^2) with constant |kappa|^3 / 6
                    assert!(err <= kap.abs().powi(3) * ds * ds / 5.0 + 1e-12, "{chart:?} s={s}: {err}");
                    assert!(err <= prev);
                    prev = err;
                }
            }
        }
    }

    #[test]
    fn chart_point_moves_along_tangent() {
        let chart = Chart::Circle { radius: 0.5, outer: false };
        let s = 0.3;
        let ds = 1e-6;
        let a = chart.point(s + ds);
        let b = chart.point(s - ds);
        let t = chart.tangent(s);
        assert!(((a[0] - b[0]) / (2.0 * ds) - t[0]).abs() < 1e-8);
        assert!(((a[1] - b[1]) / (2.0 * ds) - t[1]).abs() < 1e-8);
        assert!((chart.parameter(chart.point(s)) - s).abs() < 1e-12);
    }

    #[test]
    fn annulus_curvature_signs() {
        let c = DomainSpec::Annulus { inner: 0.5, outer: 1.0 }.charts();
        assert_eq!(c[0].1.curvature(0.0), -2.0);
        assert_eq!(c[1].1.curvature(0.0), 1.0);
    }

    #[test]
    fn invalid_domains_are_rejected() {
        assert!(DomainSpec::Annulus { inner: 1.0, outer: 0.5 }.validate().is_err());
        assert!(DomainSpec::Disk { radius: 0.0 }.validate().is_err());
        assert!(DomainSpec::Channel { length: 1.0, height: -1.0 }.validate().is_err());
    }
}
