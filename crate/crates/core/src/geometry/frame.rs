use super::{Mesh, SmoothField};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::quadrature::LineRule;

/// Boundary quadrature point with the analytic frame of its chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FramePoint {
    /// Index into `mesh.boundary_edges`.
    pub edge: usize,
    /// Position along the edge in `[0, 1]`, from local vertex `e` to `e + 1`.
    pub t: f64,
    pub chart: usize,
    pub s: f64,
    pub position: [f64; 2],
    pub normal: [f64; 2],
    pub tangent: [f64; 2],
    pub curvature: f64,
    /// Arclength quadrature weight.
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct BoundaryFrame {
    pub points: Vec<FramePoint>,
    pub points_per_edge: usize,
}

/// Gauss points on every boundary edge, evaluated on the analytic chart.
pub fn boundary_frame(mesh: &Mesh, points_per_edge: usize) -> BoundaryFrame {
    let rule = LineRule::gauss(points_per_edge.max(1));
    let mut points = Vec::with_capacity(mesh.boundary_edges.len() * rule.len());
    for (k, e) in mesh.boundary_edges.iter().enumerate() {
        let chart = &mesh.charts[e.chart];
        let ds = e.s1 - e.s0;
        for (&t, &w) in rule.points.iter().zip(&rule.weights) {
            let s = e.s0 + t * ds;
            points.push(FramePoint {
                edge: k,
                t,
                chart: e.chart,
                s,
                position: chart.point(s),
                normal: chart.normal(s),
                tangent: chart.tangent(s),
                curvature: chart.curvature(s),
                weight: w * ds,
            });
        }
    }
    BoundaryFrame { points, points_per_edge: rule.len() }
}

impl BoundaryFrame {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.points.iter().map(|p| p.weight).sum()
    }
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Shape operator on a tangential trace: in 2D, `Lambda v = kappa (v . tau) tau`.
pub fn shape_operator_apply(frame: &BoundaryFrame, trace: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    if trace.len() != frame.len() {
        return Err(Error::DimensionMismatch(format!(
            "trace has {} values for {} frame points",
            trace.len(),
            frame.len()
        )));
    }
    frame
        .points
        .iter()
        .zip(trace)
        .enumerate()
        .map(|(i, (p, v))| {
            let vn = dot(*v, p.normal);
            if vn.abs() >= 1e-12 {
                return Err(Error::NonTangentialInput { index: i, normal_component: vn.abs() });
            }
            let c = p.curvature * dot(*v, p.tangent);
            Ok([c * p.tangent[0], c * p.tangent[1]])
        })
        .collect()
}

/// Boundary L2 norm of `2[(Dv)n]_tau - (curl v) tau + 2 Lambda v` for a smooth field
/// with `v . n = 0` on the boundary.
pub fn check_navier_curl_identity(_mesh: &Mesh, frame: &BoundaryFrame, field: &SmoothField) -> Result<f64> {
    let mut acc = 0.0;
    for (i, p) in frame.points.iter().enumerate() {
        let (x, y) = Jet::point(p.position);
        let v = field.eval(x, y);
        let val = [v[0].value(), v[1].value()];
        let vn = dot(val, p.normal);
        if vn.abs() > 1e-10 {
            return Err(Error::NormalTraceViolation { index: i, normal_component: vn.abs() });
        }
        let g = [v[0].grad(), v[1].grad()]; // g[i][j] = d v_i / d x_j
        let d = [
            [g[0][0], 0.5 * (g[0][1] + g[1][0])],
            [0.5 * (g[0][1] + g[1][0]), g[1][1]],
        ];
        let n = p.normal;
        let t = p.tangent;
        let dn = [d[0][0] * n[0] + d[0][1] * n[1], d[1][0] * n[0] + d[1][1] * n[1]];
        let lhs = 2.0 * dot(dn, t);
        let curl = g[1][0] - g[0][1];
        let lambda = p.curvature * dot(val, t);
        // all three vectors are multiples of tau
        let r = lhs - curl + 2.0 * lambda;
        acc += p.weight * r * r;
    }
    Ok(acc.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, smooth_field_suite, DomainSpec};

    #[test]
    fn disk_curvature_is_inverse_radius() {
        let m = build_mesh(&DomainSpec::Disk { radius: 2.0 }, 0.4).unwrap();
        let f = boundary_frame(&m, 4);
        for p in &f.points {
            assert_eq!(p.curvature, 0.5);
            assert!((dot(p.normal, p.normal) - 1.0).abs() < 1e-14);
            assert!((dot(p.tangent, p.tangent) - 1.0).abs() < 1e-14);
            assert!(dot(p.normal, p.tangent).abs() < 1e-14);
        }
        assert!((f.total_length() - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn channel_wall_is_flat() {
        let m = build_mesh(&DomainSpec::Channel { length: 2.0, height: 1.0 }, 0.25).unwrap();
        let f = boundary_frame(&m, 3);
        assert!(f.points.iter().all(|p| p.curvature == 0.0));
        let trace: Vec<[f64; 2]> = f.points.iter().map(|p| [3.0 * p.tangent[0], 3.0 * p.tangent[1]]).collect();
        let out = shape_operator_apply(&f, &trace).unwrap();
        assert!(out.iter().all(|v| v[0] == 0.0 && v[1] == 0.0));
    }

    #[test]
    fn shape_operator_on_unit_disk() {
        let m = build_mesh(&DomainSpec::Disk { radius: 1.0 }, 0.25).unwrap();
        let f = boundary_frame(&m, 2);
        let trace: Vec<[f64; 2]> = f.points.iter().map(|p| p.tangent).collect();
        let out = shape_operator_apply(&f, &trace).unwrap();
        for (o, p) in out.iter().zip(&f.points) {
            assert!((o[0] - p.tangent[0]).abs() < 1e-15 && (o[1] - p.tangent[1]).abs() < 1e-15);
        }
        let trace3: Vec<[f64; 2]> = f.points.iter().map(|p| [3.0 * p.tangent[0], 3.0 * p.tangent[1]]).collect();
        let out3 = shape_operator_apply(&f, &trace3).unwrap();
        for (o, p) in out3.iter().zip(&f.points) {
            assert!((o[0] - 3.0 * p.tangent[0]).abs() < 1e-14 && (o[1] - 3.0 * p.tangent[1]).abs() < 1e-14);
        }
        let bad: Vec<[f64; 2]> = f.points.iter().map(|p| p.normal).collect();
        assert!(matches!(shape_operator_apply(&f, &bad), Err(Error::NonTangentialInput { .. })));
    }

    #[test]
    fn curl_identity_holds_for_suite() {
        for dom in [
            DomainSpec::Disk { radius: 1.0 },
            DomainSpec::Annulus { inner: 0.5, outer: 1.0 },
            DomainSpec::Channel { length: 2.0, height: 1.0 },
        ] {
            let m = build_mesh(&dom, 0.2).unwrap();
            let f = boundary_frame(&m, 6);
            for field in smooth_field_suite(&dom) {
                let r = check_navier_curl_identity(&m, &f, &field).unwrap();
                assert!(r < 1e-10, "{dom:?} {}: {r:e}", field.name);
            }
        }
    }

    #[test]
    fn curl_identity_rejects_normal_flow() {
        let dom = DomainSpec::Disk { radius: 1.0 };
        let m = build_mesh(&dom, 0.25).unwrap();
        let f = boundary_frame(&m, 3);
        let radial = SmoothField::new("radial", |x: Jet, y: Jet| [x, y]);
        assert!(matches!(
            check_navier_curl_identity(&m, &f, &radial),
            Err(Error::NormalTraceViolation { .. })
        ));
    }
}
