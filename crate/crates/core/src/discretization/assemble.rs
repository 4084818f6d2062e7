use super::slip::SlipCoefficient;
use super::space::{edge_point, p2_shapes, BoundaryMode, FunctionSpace};
use crate::error::{Error, Result};
use crate::geometry::{boundary_frame, build_mesh, BoundaryFrame, DomainSpec};
use crate::linalg::{CsrMatrix, Scalar};
use crate::quadrature::TriangleRule;
use rayon::prelude::*;

/// Assembled operators on the constrained velocity space.
#[derive(Clone, Debug)]
pub struct OperatorSet {
    pub space: FunctionSpace,
    pub frame: BoundaryFrame,
    /// Slip coefficient sampled at the frame points.
    pub alpha: Vec<f64>,
    /// Velocity mass.
    pub mass: CsrMatrix,
    /// `2 int D u : D v`.
    pub stiffness: CsrMatrix,
    /// `int_Gamma alpha u_tau v_tau`.
    pub boundary: CsrMatrix,
    /// `D[q][i] = -int psi_q div phi_i`.
    pub divergence: CsrMatrix,
    pub pressure_mass: CsrMatrix,
    /// Full gradient Gram `int grad u : grad v`.
    pub gradient: CsrMatrix,
    /// `int psi_q`, the pressure-mean functional.
    pub pressure_mean: Vec<f64>,
}

/// Interior rule for a cell: exact for affine cells, degree 6 on curved ones.
pub(crate) fn cell_rule(curved: bool) -> &'static TriangleRule {
    use std::sync::OnceLock;
    static AFFINE: OnceLock<TriangleRule> = OnceLock::new();
    static CURVED: OnceLock<TriangleRule> = OnceLock::new();
    if curved {
        CURVED.get_or_init(|| TriangleRule::of_degree(6))
    } else {
        AFFINE.get_or_init(|| TriangleRule::of_degree(4))
    }
}

/// Scatter a Cartesian local matrix `loc[(a, i)][(b, j)]` (index `2 a + i`) into dof triplets.
fn scatter_vv(space: &FunctionSpace, c: usize, loc: &[[f64; 12]; 12], out: &mut Vec<(usize, usize, f64)>) {
    let nodes = &space.cell_nodes[c];
    for a in 0..6 {
        let da = &space.node_dofs[nodes[a]];
        for sa in 0..da.count {
            let ea = da.dirs[sa];
            for b in 0..6 {
                let db = &space.node_dofs[nodes[b]];
                for sb in 0..db.count {
                    let eb = db.dirs[sb];
                    let mut v = 0.0;
                    for i in 0..2 {
                        for j in 0..2 {
                            v += ea[i] * loc[2 * a + i][2 * b + j] * eb[j];
                        }
                    }
                    out.push((da.dofs[sa], db.dofs[sb], v));
                }
            }
        }
    }
}

struct CellContribution {
    m: Vec<(usize, usize, f64)>,
    k: Vec<(usize, usize, f64)>,
    g: Vec<(usize, usize, f64)>,
    d: Vec<(usize, usize, f64)>,
    mp: Vec<(usize, usize, f64)>,
    mean: [(usize, f64); 3],
}

fn cell_contribution(space: &FunctionSpace, c: usize) -> CellContribution {
    let rule = cell_rule(space.cell_curved[c]);
    let mut ml = [[0.0; 12]; 12];
    let mut kl = [[0.0; 12]; 12];
    let mut gl = [[0.0; 12]; 12];
    let mut dl = [[0.0; 12]; 3];
    let mut mpl = [[0.0; 3]; 3];
    let mut meanl = [0.0; 3];
    for (xi, w) in rule.points.iter().zip(&rule.weights) {
        let cp = space.cell_point(c, *xi);
        let wd = w * cp.det;
        for a in 0..6 {
            for b in 0..6 {
                let mm = wd * cp.shape[a] * cp.shape[b];
                let gg = wd * (cp.grad[a][0] * cp.grad[b][0] + cp.grad[a][1] * cp.grad[b][1]);
                for i in 0..2 {
                    ml[2 * a + i][2 * b + i] += mm;
                    gl[2 * a + i][2 * b + i] += gg;
                    kl[2 * a + i][2 * b + i] += gg;
                    for j in 0..2 {
                        kl[2 * a + i][2 * b + j] += wd * cp.grad[a][j] * cp.grad[b][i];
                    }
                }
            }
        }
        for q in 0..3 {
            meanl[q] += wd * cp.p1[q];
            for r in 0..3 {
                mpl[q][r] += wd * cp.p1[q] * cp.p1[r];
            }
            for b in 0..6 {
                for j in 0..2 {
                    dl[q][2 * b + j] -= wd * cp.p1[q] * cp.grad[b][j];
                }
            }
        }
    }
    let mut out = CellContribution { m: vec![], k: vec![], g: vec![], d: vec![], mp: vec![], mean: [(0, 0.0); 3] };
    scatter_vv(space, c, &ml, &mut out.m);
    scatter_vv(space, c, &kl, &mut out.k);
    scatter_vv(space, c, &gl, &mut out.g);
    let nodes = &space.cell_nodes[c];
    for q in 0..3 {
        let pq = nodes[q];
        out.mean[q] = (pq, meanl[q]);
        for r in 0..3 {
            out.mp.push((pq, nodes[r], mpl[q][r]));
        }
        for b in 0..6 {
            let db = &space.node_dofs[nodes[b]];
            for sb in 0..db.count {
                let e = db.dirs[sb];
                out.d.push((pq, db.dofs[sb], dl[q][2 * b] * e[0] + dl[q][2 * b + 1] * e[1]));
            }
        }
    }
    out
}

fn check_frame(space: &FunctionSpace, frame: &BoundaryFrame) -> Result<()> {
    let edges = space.mesh.boundary_edges.len();
    if frame.len() != edges * frame.points_per_edge {
        return Err(Error::InconsistentChart(format!(
            "frame has {} points, mesh has {} boundary edges x {}",
            frame.len(),
            edges,
            frame.points_per_edge
        )));
    }
    for (i, p) in frame.points.iter().enumerate() {
        let e = &space.mesh.boundary_edges[p.edge];
        if p.edge != i / frame.points_per_edge || p.chart != e.chart {
            return Err(Error::InconsistentChart(format!("frame point {i} does not match edge {}", p.edge)));
        }
    }
    Ok(())
}

/// Tangential boundary mass `int_Gamma a u_tau v_tau` with `a` sampled at the frame points.
pub fn boundary_mass(space: &FunctionSpace, frame: &BoundaryFrame, a: &[f64]) -> Result<CsrMatrix> {
    check_frame(space, frame)?;
    let mut trips = Vec::new();
    for (p, &av) in frame.points.iter().zip(a) {
        if av == 0.0 {
            continue;
        }
        let be = &space.mesh.boundary_edges[p.edge];
        let xi = edge_point(be.local_edge, p.t);
        let (shape, _) = p2_shapes(xi[0], xi[1]);
        let nodes = &space.cell_nodes[be.cell];
        let k = be.local_edge;
        let locals = [k, (k + 1) % 3, 3 + k];
        for &la in &locals {
            let da = &space.node_dofs[nodes[la]];
            for sa in 0..da.count {
                let ta = da.dirs[sa][0] * p.tangent[0] + da.dirs[sa][1] * p.tangent[1];
                for &lb in &locals {
                    let db = &space.node_dofs[nodes[lb]];
                    for sb in 0..db.count {
                        let tb = db.dirs[sb][0] * p.tangent[0] + db.dirs[sb][1] * p.tangent[1];
                        let v = av * p.weight * shape[la] * shape[lb] * ta * tb;
                        trips.push((da.dofs[sa], db.dofs[sb], v));
                    }
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(space.n_dofs, space.n_dofs, trips).symmetrize())
}

/// Assemble all operators of the slip problem on `space`.
pub fn assemble(space: &FunctionSpace, frame: &BoundaryFrame, alpha: &SlipCoefficient) -> Result<OperatorSet> {
    check_frame(space, frame)?;
    let alpha_vals = alpha.sample(&space.mesh, frame)?;
    let parts: Vec<CellContribution> = (0..space.n_cells()).into_par_iter().map(|c| cell_contribution(space, c)).collect();
    let (nv, np) = (space.n_dofs, space.n_pressure);
    let mut m = Vec::new();
    let mut k = Vec::new();
    let mut g = Vec::new();
    let mut d = Vec::new();
    let mut mp = Vec::new();
    let mut mean_trips = Vec::new();
    for p in parts {
        m.extend(p.m);
        k.extend(p.k);
        g.extend(p.g);
        d.extend(p.d);
        mp.extend(p.mp);
        mean_trips.extend(p.mean.iter().map(|&(q, v)| (q, 0usize, v)));
    }
    let mean_col = CsrMatrix::from_triplets(np, 1, mean_trips);
    let pressure_mean = (0..np).map(|q| mean_col.get(q, 0)).collect();
    Ok(OperatorSet {
        space: space.clone(),
        frame: frame.clone(),
        mass: CsrMatrix::from_triplets(nv, nv, m).symmetrize(),
        stiffness: CsrMatrix::from_triplets(nv, nv, k).symmetrize(),
        gradient: CsrMatrix::from_triplets(nv, nv, g).symmetrize(),
        boundary: boundary_mass(space, frame, &alpha_vals)?,
        divergence: CsrMatrix::from_triplets(np, nv, d),
        pressure_mass: CsrMatrix::from_triplets(np, np, mp).symmetrize(),
        pressure_mean,
        alpha: alpha_vals,
    })
}

impl OperatorSet {
    /// Mesh, frame (4 Gauss points per boundary edge), space and operators in one call.
    pub fn build(domain: &DomainSpec, h: f64, alpha: &SlipCoefficient, mode: BoundaryMode) -> Result<OperatorSet> {
        let mesh = build_mesh(domain, h)?;
        let frame = boundary_frame(&mesh, 4);
        assemble(&FunctionSpace::new(&mesh, mode), &frame, alpha)
    }

    /// `K + B_alpha`.
    pub fn stokes_form(&self) -> CsrMatrix {
        CsrMatrix::linear_combination(&[(1.0, &self.stiffness), (1.0, &self.boundary)])
    }

    /// Same space and interior operators with a different slip coefficient.
    pub fn with_alpha(&self, alpha: &SlipCoefficient) -> Result<OperatorSet> {
        let vals = alpha.sample(&self.space.mesh, &self.frame)?;
        let mut out = self.clone();
        out.boundary = boundary_mass(&self.space, &self.frame, &vals)?;
        out.alpha = vals;
        Ok(out)
    }

    pub fn alpha_range(&self) -> (f64, f64) {
        let lo = self.alpha.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.alpha.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// True when the slip coefficient vanishes identically.
    pub fn alpha_is_zero(&self) -> bool {
        self.alpha.iter().all(|&a| a == 0.0)
    }

    /// `||u||_{L2}` (complex fields in the Hermitian sense).
    pub fn l2_norm<T: Scalar>(&self, u: &[T]) -> f64 {
        self.mass.energy(u).max(0.0).sqrt()
    }

    /// `||D u||_{L2}`.
    pub fn strain_norm<T: Scalar>(&self, u: &[T]) -> f64 {
        (0.5 * self.stiffness.energy(u)).max(0.0).sqrt()
    }

    pub fn pressure_norm<T: Scalar>(&self, p: &[T]) -> f64 {
        self.pressure_mass.energy(p).max(0.0).sqrt()
    }

    /// `int_Gamma alpha |u_tau|^2`.
    pub fn friction<T: Scalar>(&self, u: &[T]) -> f64 {
        self.boundary.energy(u).max(0.0)
    }

    /// `||u||_{H1}^2 = ||u||^2 + ||grad u||^2`.
    pub fn h1_norm_sq<T: Scalar>(&self, u: &[T]) -> f64 {
        self.mass.energy(u) + self.gradient.energy(u)
    }

    /// Debug export of every operator block, in coordinate-list form.
    pub fn export_coo(&self) -> Vec<(&'static str, String)> {
        vec![
            ("mass", self.mass.to_coo_text()),
            ("stiffness", self.stiffness.to_coo_text()),
            ("boundary", self.boundary.to_coo_text()),
            ("divergence", self.divergence.to_coo_text()),
            ("pressure_mass", self.pressure_mass.to_coo_text()),
        ]
    }
}

/// Skew-symmetric convection `C(w) = (N - N^T) / 2` with
/// `N[i][j] = int ((w . grad) phi_j) . phi_i`, so `u^T C(w) u = 0` for every `u`.
pub fn convection_matrix(space: &FunctionSpace, w: &[f64]) -> CsrMatrix {
    let parts: Vec<Vec<(usize, usize, f64)>> = (0..space.n_cells())
        .into_par_iter()
        .map(|c| {
            let rule = cell_rule(true);
            let mut loc = [[0.0; 12]; 12];
            for (xi, wt) in rule.points.iter().zip(&rule.weights) {
                let cp = space.cell_point(c, *xi);
                let (wv, _) = space.eval_at(w, c, &cp);
                for a in 0..6 {
                    for b in 0..6 {
                        let adv = wv[0] * cp.grad[b][0] + wv[1] * cp.grad[b][1];
                        let v = wt * cp.det * cp.shape[a] * adv;
                        loc[2 * a][2 * b] += v;
                        loc[2 * a + 1][2 * b + 1] += v;
                    }
                }
            }
            let mut out = Vec::new();
            scatter_vv(space, c, &loc, &mut out);
            out
        })
        .collect();
    let n = CsrMatrix::from_triplets(space.n_dofs, space.n_dofs, parts.into_iter().flatten().collect());
    let nt = n.transpose();
    CsrMatrix::linear_combination(&[(0.5, &n), (-0.5, &nt)])
}

/// Load vector `F_i = int f . phi_i` of a closed-form field.
pub fn load_vector(space: &FunctionSpace, f: &(dyn Fn([f64; 2]) -> [f64; 2] + Sync)) -> Vec<f64> {
    let parts: Vec<Vec<(usize, f64)>> = (0..space.n_cells())
        .into_par_iter()
        .map(|c| {
            let rule = cell_rule(true);
            let nodes = &space.cell_nodes[c];
            let mut loc = [[0.0; 2]; 6];
            for (xi, w) in rule.points.iter().zip(&rule.weights) {
                let cp = space.cell_point(c, *xi);
                let fv = f(cp.x);
                for a in 0..6 {
                    for i in 0..2 {
                        loc[a][i] += w * cp.det * fv[i] * cp.shape[a];
                    }
                }
            }
            let mut out = Vec::new();
            for a in 0..6 {
                let nd = &space.node_dofs[nodes[a]];
                for s in 0..nd.count {
                    out.push((nd.dofs[s], loc[a][0] * nd.dirs[s][0] + loc[a][1] * nd.dirs[s][1]));
                }
            }
            out
        })
        .collect();
    let mut load = vec![0.0; space.n_dofs];
    for part in parts {
        for (i, v) in part {
            load[i] += v;
        }
    }
    load
}

/// Quadrature recomputation of `2 ||D u||^2` and `int_Gamma alpha |u_tau|^2`
/// from point values of the discrete field, independent of the matrices.
pub fn energy_by_quadrature(ops: &OperatorSet, u: &[f64]) -> (f64, f64) {
    let space = &ops.space;
    let mut vol = 0.0;
    for c in 0..space.n_cells() {
        let rule = cell_rule(space.cell_curved[c]);
        for (xi, w) in rule.points.iter().zip(&rule.weights) {
            let cp = space.cell_point(c, *xi);
            let (_, g) = space.eval_at(u, c, &cp);
            let d01 = 0.5 * (g[0][1] + g[1][0]);
            vol += w * cp.det * 2.0 * (g[0][0] * g[0][0] + 2.0 * d01 * d01 + g[1][1] * g[1][1]);
        }
    }
    let mut bnd = 0.0;
    for (p, a) in ops.frame.points.iter().zip(&ops.alpha) {
        let v = space.boundary_value(u, p.edge, p.t);
        let ut = v[0] * p.tangent[0] + v[1] * p.tangent[1];
        bnd += a * p.weight * ut * ut;
    }
    (vol, bnd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::BoundaryMode;
    use crate::geometry::{boundary_frame, build_mesh, DomainSpec};
    use std::f64::consts::PI;

    fn setup(dom: DomainSpec, h: f64, alpha: f64) -> OperatorSet {
        let mesh = build_mesh(&dom, h).unwrap();
        let frame = boundary_frame(&mesh, 4);
        let space = FunctionSpace::new(&mesh, BoundaryMode::Slip);
        assemble(&space, &frame, &SlipCoefficient::constant(alpha)).unwrap()
    }

    #[test]
    fn operators_are_exactly_symmetric() {
        let ops = setup(DomainSpec::Annulus { inner: 0.5, outer: 1.0 }, 0.2, 3.0);
        assert_eq!(ops.stiffness.asymmetry(), 0.0);
        assert_eq!(ops.boundary.asymmetry(), 0.0);
        assert_eq!(ops.mass.asymmetry(), 0.0);
    }

    #[test]
    fn zero_alpha_gives_zero_boundary_mass_and_linearity() {
        let ops = setup(DomainSpec::Disk { radius: 1.0 }, 0.25, 0.0);
        assert!(ops.boundary.data.iter().all(|&v| v == 0.0));
        let a1 = ops.with_alpha(&SlipCoefficient::constant(1.5)).unwrap();
        let a2 = ops.with_alpha(&SlipCoefficient::constant(3.0)).unwrap();
        assert_eq!(a1.boundary.indices, a2.boundary.indices);
        for (x, y) in a1.boundary.data.iter().zip(&a2.boundary.data) {
            assert!((2.0 * x - y).abs() <= 1e-15 * y.abs());
        }
    }

    #[test]
    fn rigid_rotation_energy_is_boundary_length() {
        // u = (-y, x) on the unit disk: K u = 0 and int_Gamma |u_tau|^2 = 2 pi
        let ops = setup(DomainSpec::Disk { radius: 1.0 }, 0.1, 1.0);
        let r = ops.space.rigid_mode();
        let a = ops.stokes_form();
        let e = a.energy(&r);
        assert!(ops.stiffness.energy(&r).abs() < 1e-12);
        assert!((e - 2.0 * PI).abs() < 1e-4, "{e}");
    }

    #[test]
    fn quadratic_form_identity() {
        for dom in [DomainSpec::Disk { radius: 1.0 }, DomainSpec::Channel { length: 2.0, height: 1.0 }] {
            let ops = setup(dom, 0.25, 2.5);
            let u: Vec<f64> = (0..ops.space.n_dofs).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
            let lhs = ops.stokes_form().energy(&u);
            let (v, b) = energy_by_quadrature(&ops, &u);
            assert!((lhs - v - b).abs() <= 1e-12 * lhs, "{lhs} {v} {b}");
        }
    }

    #[test]
    fn constant_pressure_has_zero_gradient() {
        for dom in [
            DomainSpec::Disk { radius: 1.0 },
            DomainSpec::Annulus { inner: 0.5, outer: 1.0 },
            DomainSpec::Channel { length: 2.0, height: 1.0 },
        ] {
            let ops = setup(dom, 0.2, 1.0);
            let ones = vec![1.0; ops.space.n_pressure];
            let g = ops.divergence.tmatvec(&ones);
            let scale = ops.divergence.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(g.iter().all(|v| v.abs() < 1e-13 * scale), "{dom:?}");
            let area: f64 = ops.pressure_mean.iter().sum();
            assert!((area - dom.area()).abs() < 1e-3 * dom.area());
        }
    }

    #[test]
    fn rigid_kernel_of_stiffness() {
        let ops = setup(DomainSpec::Channel { length: 2.0, height: 1.0 }, 0.25, 0.0);
        let t = ops.space.rigid_mode();
        let kt = ops.stiffness.matvec(&t);
        assert!(kt.iter().all(|v| v.abs() < 1e-13));
    }
}
