use crate::discretization::{p2_shapes, edge_point, OperatorSet};
use crate::geometry::{DomainSpec, FramePoint, SmoothField};
use crate::jet::Jet;
use crate::quadrature::TriangleRule;
use std::f64::consts::PI;
use std::sync::Arc;

type ScalarFn = dyn Fn(Jet, Jet) -> Jet + Send + Sync;

/// Closed-form solenoidal, tangential velocity with a zero-mean pressure.
#[derive(Clone)]
pub struct ManufacturedCase {
    pub id: String,
    pub domain: DomainSpec,
    pub velocity: SmoothField,
    pub pressure: Arc<ScalarFn>,
}

impl std::fmt::Debug for ManufacturedCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManufacturedCase").field("id", &self.id).field("domain", &self.domain).finish()
    }
}

/// Discretization errors of a computed pair against the closed form.
#[derive(Clone, Copy, Debug)]
pub struct ManufacturedErrors {
    pub velocity_l2: f64,
    pub velocity_h1: f64,
    pub pressure_l2: f64,
}

impl ManufacturedCase {
    /// Channel: `psi = y (H - y) (1 + sin(2 pi x / L))`, `pi = cos(2 pi x / L) (y - H/2)`.
    pub fn channel_wave(length: f64, height: f64) -> ManufacturedCase {
        let k = 2.0 * PI / length;
        ManufacturedCase {
            id: "channel_wave".into(),
            domain: DomainSpec::Channel { length, height },
            velocity: SmoothField::from_stream("channel_wave", move |x, y| y * (height - y) * (1.0 + (x * k).sin())),
            pressure: Arc::new(move |x: Jet, y: Jet| (x * k).cos() * (y - 0.5 * height)),
        }
    }

    /// Disk: `psi = (R^2 - r^2)(1 + x y)`, `pi = x y`.
    pub fn disk_vortex(radius: f64) -> ManufacturedCase {
        let r2 = radius * radius;
        ManufacturedCase {
            id: "disk_vortex".into(),
            domain: DomainSpec::Disk { radius },
            velocity: SmoothField::from_stream("disk_vortex", move |x, y| (r2 - (x * x + y * y)) * (1.0 + x * y)),
            pressure: Arc::new(|x: Jet, y: Jet| x * y),
        }
    }

    /// Channel shear `(y (H - y), 0)` with `pi = 0`; exactly representable in P2.
    pub fn channel_shear(length: f64, height: f64) -> ManufacturedCase {
        ManufacturedCase {
            id: "channel_shear".into(),
            domain: DomainSpec::Channel { length, height },
            velocity: SmoothField::new("channel_shear", move |_x: Jet, y: Jet| [y * (height - y), Jet::constant(0.0)]),
            pressure: Arc::new(|_x: Jet, _y: Jet| Jet::constant(0.0)),
        }
    }

    /// Interior forcing `-lap u + grad pi` (plus `lambda u` when `lambda != 0`).
    pub fn forcing(&self, x: [f64; 2], lambda: f64) -> [f64; 2] {
        let (xj, yj) = Jet::point(x);
        let u = self.velocity.eval(xj, yj);
        let gp = (self.pressure)(xj, yj).grad();
        [
            -u[0].laplacian() + gp[0] + lambda * u[0].value(),
            -u[1].laplacian() + gp[1] + lambda * u[1].value(),
        ]
    }

    /// Slip data `g = 2[(Du) n]_tau + alpha u_tau` at a boundary point.
    pub fn slip_data(&self, p: &FramePoint, alpha: f64) -> f64 {
        let (v, g) = self.velocity.value_grad(p.position);
        let d01 = 0.5 * (g[0][1] + g[1][0]);
        let n = p.normal;
        let dn = [g[0][0] * n[0] + d01 * n[1], d01 * n[0] + g[1][1] * n[1]];
        2.0 * (dn[0] * p.tangent[0] + dn[1] * p.tangent[1]) + alpha * (v[0] * p.tangent[0] + v[1] * p.tangent[1])
    }

    /// `(F, G)`: interior load and slip-data load on `ops`.
    pub fn loads(&self, ops: &OperatorSet, lambda: f64) -> (Vec<f64>, Vec<f64>) {
        let f = crate::discretization::load_vector(&ops.space, &|x| self.forcing(x, lambda));
        let g = slip_data_load(ops, |i, p| self.slip_data(p, ops.alpha[i]));
        (f, g)
    }

    pub fn pressure_value(&self, x: [f64; 2]) -> f64 {
        let (xj, yj) = Jet::point(x);
        (self.pressure)(xj, yj).value()
    }

    /// L2 and H1-seminorm velocity errors, and the L2 error of the pressure
    /// after removing the mean difference over the discrete domain.
    pub fn errors(&self, ops: &OperatorSet, u: &[f64], p: &[f64]) -> ManufacturedErrors {
        let space = &ops.space;
        let rule = TriangleRule::of_degree(8);
        let (mut eu, mut eg, mut area, mut pm) = (0.0, 0.0, 0.0, 0.0);
        let mut pd = Vec::with_capacity(space.n_cells() * rule.len());
        for c in 0..space.n_cells() {
            for (xi, w) in rule.points.iter().zip(&rule.weights) {
                let cp = space.cell_point(c, *xi);
                let wd = w * cp.det;
                let (uh, gh) = space.eval_at(u, c, &cp);
                let (ue, ge) = self.velocity.value_grad(cp.x);
                for i in 0..2 {
                    eu += wd * (uh[i] - ue[i]).powi(2);
                    for j in 0..2 {
                        eg += wd * (gh[i][j] - ge[i][j]).powi(2);
                    }
                }
                let d = space.eval_pressure_at(p, c, &cp) - self.pressure_value(cp.x);
                area += wd;
                pm += wd * d;
                pd.push((wd, d));
            }
        }
        let mean = pm / area;
        let ep: f64 = pd.iter().map(|(w, d)| w * (d - mean).powi(2)).sum();
        ManufacturedErrors { velocity_l2: eu.sqrt(), velocity_h1: eg.sqrt(), pressure_l2: ep.sqrt() }
    }
}

/// Load `<g, v_tau>_Gamma` from values `g(i, point)` at the frame points.
pub fn slip_data_load(ops: &OperatorSet, g: impl Fn(usize, &FramePoint) -> f64) -> Vec<f64> {
    let space = &ops.space;
    let mut load = vec![0.0; space.n_dofs];
    for (i, p) in ops.frame.points.iter().enumerate() {
        let gv = g(i, p);
        if gv == 0.0 {
            continue;
        }
        let be = &space.mesh.boundary_edges[p.edge];
        let xi = edge_point(be.local_edge, p.t);
        let (shape, _) = p2_shapes(xi[0], xi[1]);
        let nodes = space.cell_nodes[be.cell];
        for a in 0..6 {
            if shape[a] == 0.0 {
                continue;
            }
            let nd = &space.node_dofs[nodes[a]];
            for s in 0..nd.count {
                let t = nd.dirs[s][0] * p.tangent[0] + nd.dirs[s][1] * p.tangent[1];
                load[nd.dofs[s]] += p.weight * gv * shape[a] * t;
            }
        }
    }
    load
}
