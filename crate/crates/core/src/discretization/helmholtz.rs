use super::assemble::{cell_rule, OperatorSet};
use super::space::{edge_point, p2_shapes};
use crate::error::Result;
use crate::geometry::SmoothField;
use crate::jet::Jet;
use crate::linalg::{CsrMatrix, SaddleSolver, SaddleSpec};
use num_complex::Complex64;

/// Discrete Leray projector: the `M`-orthogonal projection onto discretely
/// divergence-free fields of the constrained space.
///
/// Solves `M u + D^T q = M psi`, `D u = 0`, `int q = 0`; then `u = P psi` and
/// `q` is the zero-mean potential.
pub struct LerayProjector {
    mass: CsrMatrix,
    solver: SaddleSolver<f64>,
}

impl LerayProjector {
    pub fn new(ops: &OperatorSet) -> Result<LerayProjector> {
        let spec = SaddleSpec {
            blocks: vec![(1.0, &ops.mass)],
            divergence: &ops.divergence,
            pressure_mean: Some(&ops.pressure_mean),
            velocity_constraints: vec![],
        };
        Ok(LerayProjector { mass: ops.mass.clone(), solver: SaddleSolver::new(&spec)? })
    }

    /// `(P psi, potential)`.
    pub fn project(&self, psi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let rhs = self.mass.matvec(psi);
        let (u, q, _) = self.solver.solve(&rhs, None)?;
        Ok((u, q))
    }

    /// Projection of a load vector `F` (a dual quantity): returns `P M^{-1} F`.
    pub fn project_load(&self, load: &[f64]) -> Result<Vec<f64>> {
        Ok(self.solver.solve(load, None)?.0)
    }

    pub fn project_complex(&self, psi: &[Complex64]) -> Result<Vec<Complex64>> {
        let re: Vec<f64> = psi.iter().map(|z| z.re).collect();
        let im: Vec<f64> = psi.iter().map(|z| z.im).collect();
        let (pr, _) = self.project(&re)?;
        let (pi, _) = self.project(&im)?;
        Ok(pr.into_iter().zip(pi).map(|(a, b)| Complex64::new(a, b)).collect())
    }
}

/// One-shot Helmholtz projection `(P psi, potential)`.
pub fn helmholtz_project(ops: &OperatorSet, psi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    LerayProjector::new(ops)?.project(psi)
}

/// Green's formula residual for a closed-form pair `(v, pi)` with `div v = 0`,
/// `v . n = 0`:
///
/// `int (-lap v + grad pi) . phi = 2 int Dv : D phi - int pi div phi - 2 <[(Dv) n]_tau, phi_tau>`
///
/// tested against every constrained basis field and normalized by its H1 norm.
pub fn greens_formula_check(
    ops: &OperatorSet,
    v: &SmoothField,
    pi: &(dyn Fn(Jet, Jet) -> Jet + Sync),
) -> f64 {
    let space = &ops.space;
    let n = space.n_dofs;
    let mut mismatch = vec![0.0; n];
    for c in 0..space.n_cells() {
        let rule = cell_rule(true);
        let nodes = space.cell_nodes[c];
        for (xi, w) in rule.points.iter().zip(&rule.weights) {
            let cp = space.cell_point(c, *xi);
            let wd = w * cp.det;
            let (x, y) = Jet::point(cp.x);
            let vj = v.eval(x, y);
            let pj = pi(x, y);
            let gp = pj.grad();
            let force = [-vj[0].laplacian() + gp[0], -vj[1].laplacian() + gp[1]];
            let g = [vj[0].grad(), vj[1].grad()];
            let d = [[g[0][0], 0.5 * (g[0][1] + g[1][0])], [0.5 * (g[0][1] + g[1][0]), g[1][1]]];
            let pv = pj.value();
            for a in 0..6 {
                let nd = &space.node_dofs[nodes[a]];
                for s in 0..nd.count {
                    let e = nd.dirs[s];
                    let lhs = (force[0] * e[0] + force[1] * e[1]) * cp.shape[a];
                    // grad phi = e (x) grad N: 2 Dv : D phi = 2 (Dv grad N) . e
                    let dg = [
                        d[0][0] * cp.grad[a][0] + d[0][1] * cp.grad[a][1],
                        d[1][0] * cp.grad[a][0] + d[1][1] * cp.grad[a][1],
                    ];
                    let div = e[0] * cp.grad[a][0] + e[1] * cp.grad[a][1];
                    let rhs = 2.0 * (dg[0] * e[0] + dg[1] * e[1]) - pv * div;
                    mismatch[nd.dofs[s]] += wd * (lhs - rhs);
                }
            }
        }
    }
    for p in &ops.frame.points {
        let be = &space.mesh.boundary_edges[p.edge];
        let xi = edge_point(be.local_edge, p.t);
        let (shape, _) = p2_shapes(xi[0], xi[1]);
        let (x, y) = Jet::point(p.position);
        let vj = v.eval(x, y);
        let g = [vj[0].grad(), vj[1].grad()];
        let d01 = 0.5 * (g[0][1] + g[1][0]);
        let nn = p.normal;
        let dn = [g[0][0] * nn[0] + d01 * nn[1], d01 * nn[0] + g[1][1] * nn[1]];
        let traction = 2.0 * (dn[0] * p.tangent[0] + dn[1] * p.tangent[1]);
        let nodes = space.cell_nodes[be.cell];
        for a in 0..6 {
            if shape[a] == 0.0 {
                continue;
            }
            let nd = &space.node_dofs[nodes[a]];
            for s in 0..nd.count {
                let e = nd.dirs[s];
                let phit = shape[a] * (e[0] * p.tangent[0] + e[1] * p.tangent[1]);
                // the right side carries -2<[(Dv)n]_tau, phi>
                mismatch[nd.dofs[s]] -= p.weight * traction * phit;
            }
        }
    }
    let mut worst: f64 = 0.0;
    for (i, m) in mismatch.iter().enumerate() {
        let h1 = (ops.mass.get(i, i) + ops.gradient.get(i, i)).sqrt();
        worst = worst.max(m.abs() / h1);
    }
    worst
}
