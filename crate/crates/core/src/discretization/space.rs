use crate::geometry::{Mesh, SmoothField};
use crate::linalg::Scalar;
use std::collections::BTreeMap;

/// Boundary treatment of the velocity space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryMode {
    /// `u . n = 0`: one tangential dof per boundary node.
    Slip,
    /// `u = 0`: no dofs at boundary nodes.
    NoSlip,
}

/// Dofs carried by one velocity node: `u(node) = sum_k coef[dofs[k]] * dirs[k]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeDofs {
    pub count: usize,
    pub dofs: [usize; 2],
    pub dirs: [[f64; 2]; 2],
}

/// Boundary data of a velocity node, from the analytic chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeFrame {
    pub chart: usize,
    pub s: f64,
    pub normal: [f64; 2],
    pub tangent: [f64; 2],
}

/// Taylor-Hood P2/P1 space on an isoparametric mesh.
///
/// Local node order per cell: vertices 0, 1, 2, then the midpoints of edges
/// `(0,1)`, `(1,2)`, `(2,0)`. Boundary edge midpoints sit on the chart at
/// the arclength midpoint; all other geometry nodes are straight midpoints.
#[derive(Clone, Debug)]
pub struct FunctionSpace {
    pub mesh: Mesh,
    pub mode: BoundaryMode,
    pub node_pos: Vec<[f64; 2]>,
    pub node_frame: Vec<Option<NodeFrame>>,
    pub node_dofs: Vec<NodeDofs>,
    pub cell_nodes: Vec<[usize; 6]>,
    pub cell_geom: Vec<[[f64; 2]; 6]>,
    /// Cells with a curved edge use the quadratic map; others are affine.
    pub cell_curved: Vec<bool>,
    pub n_dofs: usize,
    /// Pressure nodes are the vertex nodes `0..n_pressure`.
    pub n_pressure: usize,
}

/// P2 shape values and reference gradients at `(xi, eta)`.
pub fn p2_shapes(xi: f64, eta: f64) -> ([f64; 6], [[f64; 2]; 6]) {
    let l = [1.0 - xi - eta, xi, eta];
    let gl = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
    let mut n = [0.0; 6];
    let mut g = [[0.0; 2]; 6];
    for i in 0..3 {
        n[i] = l[i] * (2.0 * l[i] - 1.0);
        for d in 0..2 {
            g[i][d] = (4.0 * l[i] - 1.0) * gl[i][d];
        }
    }
    for k in 0..3 {
        let (a, b) = (k, (k + 1) % 3);
        n[3 + k] = 4.0 * l[a] * l[b];
        for d in 0..2 {
            g[3 + k][d] = 4.0 * (l[b] * gl[a][d] + l[a] * gl[b][d]);
        }
    }
    (n, g)
}

pub fn p1_shapes(xi: f64, eta: f64) -> [f64; 3] {
    [1.0 - xi - eta, xi, eta]
}

/// Reference point of the parameter `t` along local edge `k` (from vertex `k` to `k + 1`).
pub fn edge_point(k: usize, t: f64) -> [f64; 2] {
    let v = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let (a, b) = (v[k], v[(k + 1) % 3]);
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Geometry and basis of one cell at one reference point.
#[derive(Clone, Copy, Debug)]
pub struct CellPoint {
    pub x: [f64; 2],
    pub det: f64,
    pub shape: [f64; 6],
    /// Physical gradients of the P2 shapes.
    pub grad: [[f64; 2]; 6],
    pub p1: [f64; 3],
}

impl FunctionSpace {
    pub fn new(mesh: &Mesh, mode: BoundaryMode) -> FunctionSpace {
        let mesh = mesh.clone();
        let nv = mesh.vertices.len();
        let mut vertex_node = vec![usize::MAX; nv];
        let mut node_pos = Vec::new();
        for v in 0..nv {
            if mesh.master[v] == v {
                vertex_node[v] = node_pos.len();
                node_pos.push(mesh.vertices[v]);
            }
        }
        for v in 0..nv {
            vertex_node[v] = vertex_node[mesh.master[v]];
        }
        let n_pressure = node_pos.len();

        let mut edge_node: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut cell_nodes = Vec::with_capacity(mesh.cells.len());
        let mut cell_geom = Vec::with_capacity(mesh.cells.len());
        for cell in &mesh.cells {
            let mut nodes = [0usize; 6];
            let mut geom = [[0.0; 2]; 6];
            for i in 0..3 {
                nodes[i] = vertex_node[cell[i]];
                geom[i] = mesh.vertices[cell[i]];
            }
            for k in 0..3 {
                let (a, b) = (nodes[k], nodes[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let pa = mesh.vertices[cell[k]];
                let pb = mesh.vertices[cell[(k + 1) % 3]];
                let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
                let id = *edge_node.entry(key).or_insert_with(|| {
                    node_pos.push(mid);
                    node_pos.len() - 1
                });
                nodes[3 + k] = id;
                geom[3 + k] = mid;
            }
            cell_nodes.push(nodes);
            cell_geom.push(geom);
        }

        let mut node_frame: Vec<Option<NodeFrame>> = vec![None; node_pos.len()];
        let mut cell_curved = vec![false; mesh.cells.len()];
        for e in &mesh.boundary_edges {
            let chart = mesh.charts[e.chart];
            let k = e.local_edge;
            let sm = 0.5 * (e.s0 + e.s1);
            let mid = chart.point(sm);
            let nodes = cell_nodes[e.cell];
            cell_geom[e.cell][3 + k] = mid;
            node_pos[nodes[3 + k]] = mid;
            if matches!(chart, crate::geometry::Chart::Circle { .. }) {
                cell_curved[e.cell] = true;
            }
            let frame_at = |s: f64| NodeFrame { chart: e.chart, s, normal: chart.normal(s), tangent: chart.tangent(s) };
            node_frame[nodes[3 + k]] = Some(frame_at(sm));
            for (j, s) in [(k, e.s0), (k + 1, e.s1)] {
                let node = nodes[j % 3];
                if node_frame[node].is_none() {
                    let s = s.rem_euclid(chart.length());
                    let s = chart.parameter(chart.point(s));
                    node_frame[node] = Some(frame_at(s));
                }
            }
        }

        let mut node_dofs = Vec::with_capacity(node_pos.len());
        let mut next = 0usize;
        for f in &node_frame {
            let nd = match (f, mode) {
                (None, _) => {
                    let d = NodeDofs { count: 2, dofs: [next, next + 1], dirs: [[1.0, 0.0], [0.0, 1.0]] };
                    next += 2;
                    d
                }
                (Some(fr), BoundaryMode::Slip) => {
                    let d = NodeDofs { count: 1, dofs: [next, usize::MAX], dirs: [fr.tangent, [0.0, 0.0]] };
                    next += 1;
                    d
                }
                (Some(_), BoundaryMode::NoSlip) => {
                    NodeDofs { count: 0, dofs: [usize::MAX; 2], dirs: [[0.0; 2]; 2] }
                }
            };
            node_dofs.push(nd);
        }

        FunctionSpace {
            mesh,
            mode,
            node_pos,
            node_frame,
            node_dofs,
            cell_nodes,
            cell_geom,
            cell_curved,
            n_dofs: next,
            n_pressure,
        }
    }

    /// The same mesh with the other boundary treatment.
    pub fn with_mode(&self, mode: BoundaryMode) -> FunctionSpace {
        FunctionSpace::new(&self.mesh, mode)
    }

    pub fn n_nodes(&self) -> usize {
        self.node_pos.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cell_nodes.len()
    }

    pub fn n_boundary_nodes(&self) -> usize {
        self.node_frame.iter().filter(|f| f.is_some()).count()
    }

    /// Geometry, shapes and physical gradients at reference point `xi` of cell `c`.
    pub fn cell_point(&self, c: usize, xi: [f64; 2]) -> CellPoint {
        let (shape, dref) = p2_shapes(xi[0], xi[1]);
        let g = &self.cell_geom[c];
        let mut x = [0.0; 2];
        let mut jac = [[0.0; 2]; 2];
        if self.cell_curved[c] {
            for k in 0..6 {
                for i in 0..2 {
                    x[i] += g[k][i] * shape[k];
                    for j in 0..2 {
                        jac[i][j] += g[k][i] * dref[k][j];
                    }
                }
            }
        } else {
            let l = p1_shapes(xi[0], xi[1]);
            for i in 0..2 {
                x[i] = g[0][i] * l[0] + g[1][i] * l[1] + g[2][i] * l[2];
                jac[i][0] = g[1][i] - g[0][i];
                jac[i][1] = g[2][i] - g[0][i];
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        // inv[i][j] = d xi_i / d x_j
        let inv = [[jac[1][1] / det, -jac[0][1] / det], [-jac[1][0] / det, jac[0][0] / det]];
        let mut grad = [[0.0; 2]; 6];
        for k in 0..6 {
            for j in 0..2 {
                grad[k][j] = dref[k][0] * inv[0][j] + dref[k][1] * inv[1][j];
            }
        }
        CellPoint { x, det, shape, grad, p1: p1_shapes(xi[0], xi[1]) }
    }

    /// Cartesian value of the field at velocity node `n`.
    pub fn node_value<T: Scalar>(&self, coef: &[T], n: usize) -> [T; 2] {
        let nd = &self.node_dofs[n];
        let mut v = [T::from(0.0); 2];
        for k in 0..nd.count {
            let c = coef[nd.dofs[k]];
            v[0] += c.scaled(nd.dirs[k][0]);
            v[1] += c.scaled(nd.dirs[k][1]);
        }
        v
    }

    /// Nodal values `[node][component]` of a field.
    pub fn nodal_values<T: Scalar>(&self, coef: &[T]) -> Vec<[T; 2]> {
        (0..self.n_nodes()).map(|n| self.node_value(coef, n)).collect()
    }

    /// Coefficients whose nodal values are the projection of `values` onto the
    /// admissible directions (normal parts dropped on slip nodes, boundary values
    /// dropped on no-slip nodes).
    pub fn from_nodal<T: Scalar>(&self, values: &[[T; 2]]) -> Vec<T> {
        let mut coef = vec![T::from(0.0); self.n_dofs];
        for (nd, v) in self.node_dofs.iter().zip(values) {
            for k in 0..nd.count {
                coef[nd.dofs[k]] = v[0].scaled(nd.dirs[k][0]) + v[1].scaled(nd.dirs[k][1]);
            }
        }
        coef
    }

    /// Nodal interpolation of a closed-form field.
    pub fn interpolate(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
        let vals: Vec<[f64; 2]> = self.node_pos.iter().map(|&p| f(p)).collect();
        self.from_nodal(&vals)
    }

    pub fn interpolate_field(&self, f: &SmoothField) -> Vec<f64> {
        self.interpolate(|p| f.value(p))
    }

    /// P1 interpolation of a scalar function at the pressure nodes.
    pub fn interpolate_pressure(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        self.node_pos[..self.n_pressure].iter().map(|&p| f(p)).collect()
    }

    /// Transfer a field from another space on the same mesh, node by node.
    pub fn embed<T: Scalar>(&self, from: &FunctionSpace, coef: &[T]) -> Vec<T> {
        assert_eq!(self.n_nodes(), from.n_nodes());
        self.from_nodal(&from.nodal_values(coef))
    }

    /// Velocity and gradient (`g[i][j] = d u_i / d x_j`) at a cell point.
    pub fn eval_at<T: Scalar>(&self, coef: &[T], c: usize, cp: &CellPoint) -> ([T; 2], [[T; 2]; 2]) {
        let mut v = [T::from(0.0); 2];
        let mut g = [[T::from(0.0); 2]; 2];
        for (k, &n) in self.cell_nodes[c].iter().enumerate() {
            let nv = self.node_value(coef, n);
            for i in 0..2 {
                v[i] += nv[i].scaled(cp.shape[k]);
                for j in 0..2 {
                    g[i][j] += nv[i].scaled(cp.grad[k][j]);
                }
            }
        }
        (v, g)
    }

    pub fn eval_pressure_at<T: Scalar>(&self, p: &[T], c: usize, cp: &CellPoint) -> T {
        let nodes = &self.cell_nodes[c];
        (0..3).fold(T::from(0.0), |acc, i| acc + p[nodes[i]].scaled(cp.p1[i]))
    }

    /// Trace of the velocity at parameter `t` of boundary edge `e` (reference-edge parametrization).
    pub fn boundary_value<T: Scalar>(&self, coef: &[T], e: usize, t: f64) -> [T; 2] {
        let be = &self.mesh.boundary_edges[e];
        let xi = edge_point(be.local_edge, t);
        let (shape, _) = p2_shapes(xi[0], xi[1]);
        let mut v = [T::from(0.0); 2];
        for (k, &n) in self.cell_nodes[be.cell].iter().enumerate() {
            if shape[k] == 0.0 {
                continue;
            }
            let nv = self.node_value(coef, n);
            v[0] += nv[0].scaled(shape[k]);
            v[1] += nv[1].scaled(shape[k]);
        }
        v
    }

    /// Interpolant of the rigid mode of the domain: rotation `(-y, x)` on the
    /// disk and annulus, translation `(1, 0)` on the channel.
    pub fn rigid_mode(&self) -> Vec<f64> {
        match self.mesh.domain {
            crate::geometry::DomainSpec::Channel { .. } => self.interpolate(|_| [1.0, 0.0]),
            _ => self.interpolate(|p| [-p[1], p[0]]),
        }
    }

    /// Largest `|u . n|` over boundary nodes.
    pub fn max_normal_trace(&self, coef: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (n, f) in self.node_frame.iter().enumerate() {
            if let Some(f) = f {
                let v = self.node_value(coef, n);
                worst = worst.max((v[0] * f.normal[0] + v[1] * f.normal[1]).abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, DomainSpec};

    #[test]
    fn shapes_partition_unity_and_nodal() {
        let (n, g) = p2_shapes(0.2, 0.3);
        assert!((n.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for d in 0..2 {
            assert!(g.iter().map(|x| x[d]).sum::<f64>().abs() < 1e-14);
        }
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, 0.0], [0.5, 0.5], [0.0, 0.5]];
        for (i, p) in pts.iter().enumerate() {
            let (n, _) = p2_shapes(p[0], p[1]);
            for (j, v) in n.iter().enumerate() {
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn boundary_nodes_keep_one_tangential_dof() {
        let mesh = build_mesh(&DomainSpec::Disk { radius: 1.0 }, 0.25).unwrap();
        let s = FunctionSpace::new(&mesh, BoundaryMode::Slip);
        let nb = s.n_boundary_nodes();
        assert_eq!(nb, 2 * mesh.boundary_edges.len());
        assert_eq!(s.n_dofs, 2 * (s.n_nodes() - nb) + nb);
        // node at (1, 0) keeps only the y component
        let n = s.node_pos.iter().position(|p| (p[0] - 1.0).abs() < 1e-14 && p[1].abs() < 1e-14).unwrap();
        let d = s.node_dofs[n];
        assert_eq!(d.count, 1);
        assert!(d.dirs[0][0].abs() < 1e-15 && (d.dirs[0][1].abs() - 1.0).abs() < 1e-15);
        let coef = s.interpolate(|p| [p[0] + 0.3, p[1] * p[1] - 2.0]);
        assert!(s.max_normal_trace(&coef) <= 1e-12);
        let ns = s.with_mode(BoundaryMode::NoSlip);
        assert_eq!(ns.n_dofs, 2 * (s.n_nodes() - nb));
    }

    #[test]
    fn channel_wall_keeps_x_component() {
        let mesh = build_mesh(&DomainSpec::Channel { length: 2.0, height: 1.0 }, 0.25).unwrap();
        let s = FunctionSpace::new(&mesh, BoundaryMode::Slip);
        for (nd, f) in s.node_dofs.iter().zip(&s.node_frame) {
            if f.is_some() {
                assert_eq!(nd.count, 1);
                assert_eq!(nd.dirs[0][1], 0.0);
                assert_eq!(nd.dirs[0][0].abs(), 1.0);
            }
        }
    }

    #[test]
    fn isoparametric_area_converges() {
        let mut errs = Vec::new();
        let rule = crate::quadrature::TriangleRule::of_degree(6);
        for h in [0.4, 0.2, 0.1] {
            let mesh = build_mesh(&DomainSpec::Disk { radius: 1.0 }, h).unwrap();
            let s = FunctionSpace::new(&mesh, BoundaryMode::Slip);
            let mut a = 0.0;
            for c in 0..s.n_cells() {
                for (p, w) in rule.points.iter().zip(&rule.weights) {
                    a += w * s.cell_point(c, *p).det;
                }
            }
            errs.push((a - std::f64::consts::PI).abs());
        }
        assert!(errs[1] / errs[2] > 10.0, "{errs:?}");
    }
}
