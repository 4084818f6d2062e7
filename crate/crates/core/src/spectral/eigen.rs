use crate::discretization::{LerayProjector, OperatorSet};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, generalized_symmetric_eigen, CsrMatrix};
use crate::stokes::StokesSystem;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

/// Knobs of the shift-invert block Krylov eigensolver.
#[derive(Clone, Debug)]
pub struct EigenOptions {
    pub count: usize,
    /// Guard vectors carried beyond `count`.
    pub extra: usize,
    /// Krylov depth per restart (`depth` blocks of size `count + extra`).
    pub depth: usize,
    /// Shift `s > 0`: iterates with `(A + s)^{-1}`.
    pub shift: f64,
    /// Bound on `||P M^{-1}(A phi - mu M phi)||_M / max(mu, 1)`.
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

impl EigenOptions {
    pub fn new(count: usize) -> EigenOptions {
        EigenOptions { count, extra: (count / 4).max(4), depth: 3, shift: 1.0, tol: 1e-8, max_restarts: 60, seed: 7 }
    }
}

/// `M`-orthonormal eigenpairs `(mu_i, phi_i)`, ascending.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// Projected relative residual per pair.
    pub residuals: Vec<f64>,
    pub restarts: usize,
    pub(crate) mass: CsrMatrix,
    pub(crate) mass_vectors: Vec<Vec<f64>>,
}

impl EigenDecomposition {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    /// `max |phi_i^T M phi_j - delta_ij|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, mi) in self.mass_vectors.iter().enumerate() {
            for (j, pj) in self.vectors.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(mi, pj) - target).abs());
            }
        }
        worst
    }

    /// Expansion coefficients `c_i = phi_i^T M u` and the relative `M`-norm of
    /// the part of `u` outside the span.
    pub fn expand(&self, u: &[f64]) -> (Vec<f64>, f64) {
        let c: Vec<f64> = self.mass_vectors.iter().map(|m| dot(m, u)).collect();
        let mut rest = u.to_vec();
        for (ci, phi) in c.iter().zip(&self.vectors) {
            axpy(-ci, phi, &mut rest);
        }
        let un = self.mass.energy(u).sqrt();
        let leak = if un > 0.0 { self.mass.energy(&rest).sqrt() / un } else { 0.0 };
        (c, leak)
    }

    /// `sum_i c_i phi_i`.
    pub fn combine(&self, c: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.vectors[0].len()];
        for (ci, phi) in c.iter().zip(&self.vectors) {
            axpy(*ci, phi, &mut out);
        }
        out
    }
}

/// Ritz pairs of the `M`-orthonormalized span of `vecs`, lowest `keep`.
fn rayleigh_ritz(form: &CsrMatrix, mass: &CsrMatrix, vecs: Vec<Vec<f64>>, keep: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let (q, _) = m_orthonormalize(mass, vecs);
    let m = q.len();
    let aq: Vec<Vec<f64>> = q.iter().map(|v| form.matvec(v)).collect();
    let h = DMatrix::from_fn(m, m, |i, j| 0.5 * (dot(&q[i], &aq[j]) + dot(&q[j], &aq[i])));
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    order.truncate(keep.min(m));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let n = q.first().map_or(0, |v| v.len());
    let vectors = order
        .iter()
        .map(|&col| {
            let mut x = vec![0.0; n];
            for (r, qr) in q.iter().enumerate() {
                axpy(eig.eigenvectors[(r, col)], qr, &mut x);
            }
            x
        })
        .collect();
    (values, vectors)
}

fn m_orthonormalize(mass: &CsrMatrix, vecs: Vec<Vec<f64>>) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut mq: Vec<Vec<f64>> = Vec::new();
    for mut v in vecs {
        let n0 = mass.energy(&v).sqrt();
        if !(n0 > 0.0) {
            continue;
        }
        for _ in 0..2 {
            for (qi, mqi) in q.iter().zip(&mq) {
                let c = dot(mqi, &v);
                axpy(-c, qi, &mut v);
            }
        }
        let mut mv = mass.matvec(&v);
        let n = dot(&v, &mv).max(0.0).sqrt();
        if n <= 1e-6 * n0 {
            continue;
        }
        for (a, b) in v.iter_mut().zip(mv.iter_mut()) {
            *a /= n;
            *b /= n;
        }
        q.push(v);
        mq.push(mv);
    }
    (q, mq)
}

/// Fix the sign so the entry of largest modulus is positive.
fn normalize_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() * (1.0 + 1e-9) {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// `||P M^{-1}(A x - mu M x)||_M / max(mu, 1)`.
///
/// `A x - mu M x` is dominated by a discrete pressure gradient, which the
/// projector removes only to its own conditioning. The pressure of the
/// shifted solve `(A + s M) y + D^T q = M x` is subtracted first, leaving
/// `(A + s M)(x - (mu + s) y)` up to a gradient of size `||x - (mu + s) y||`.
fn projected_residual(
    ops: &OperatorSet,
    form: &CsrMatrix,
    sys: &StokesSystem<f64>,
    leray: &LerayProjector,
    mu: f64,
    shift: f64,
    x: &[f64],
) -> Result<f64> {
    let mx = ops.mass.matvec(x);
    let (_, q, _, _) = sys.solve(&mx)?;
    let mut r = form.matvec(x);
    axpy(-mu, &mx, &mut r);
    let dq = ops.divergence.tmatvec(&q);
    axpy(mu + shift, &dq, &mut r);
    let w = leray.project_load(&r)?;
    Ok(ops.mass.energy(&w).sqrt() / mu.abs().max(1.0))
}

/// Lowest `k` eigenpairs with default options.
pub fn eigensolve(ops: &OperatorSet, k: usize) -> Result<EigenDecomposition> {
    eigensolve_with(ops, &EigenOptions::new(k))
}

/// Shift-invert block Krylov iteration with Rayleigh–Ritz restarts.
///
/// The operator `(A + s)^{-1}` is applied by solving the saddle system with
/// velocity block `K + B + s M`, so every iterate is discretely
/// divergence-free and the pressure never enters the eigenproblem.
pub fn eigensolve_with(ops: &OperatorSet, opt: &EigenOptions) -> Result<EigenDecomposition> {
    let k = opt.count;
    if k == 0 || k > 50 {
        return Err(Error::InvalidArgument(format!("eigenpair count {k} outside 1..=50")));
    }
    if !(opt.shift > 0.0) || opt.depth < 2 {
        return Err(Error::InvalidArgument("shift must be positive and depth at least 2".into()));
    }
    let n = ops.space.n_dofs;
    let b = (k + opt.extra).min(n / 4).max(k);
    let form = ops.stokes_form();
    let sys = StokesSystem::<f64>::new(
        ops,
        vec![(opt.shift, &ops.mass), (1.0, &ops.stiffness), (1.0, &ops.boundary)],
        false,
    )?;
    let leray = LerayProjector::new(ops)?;
    let apply = |x: &[f64]| -> Result<Vec<f64>> { Ok(sys.solve(&ops.mass.matvec(x))?.0) };

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opt.seed);
    let start: Vec<Vec<f64>> = (0..b)
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect::<Vec<f64>>())
        .collect();
    let mut ritz = start.iter().map(|x| apply(x)).collect::<Result<Vec<_>>>()?;
    // Ritz values of the current block; `None` before the first Rayleigh–Ritz step.
    let mut theta: Option<Vec<f64>> = None;
    let mut residuals = vec![f64::INFINITY; k];
    for restart in 1..=opt.max_restarts {
        let mut basis = ritz.clone();
        let mut block = ritz.clone();
        for _ in 1..opt.depth {
            // `(T - 1/(mu_j + s)) x_j` spans the same Krylov space as `T x_j`
            // without cancelling against the converged part of `x_j`.
            block = block
                .iter()
                .enumerate()
                .map(|(j, x)| {
                    let mut y = apply(x)?;
                    if let Some(th) = &theta {
                        axpy(-1.0 / (th[j] + opt.shift), x, &mut y);
                    }
                    // Normalize, then project: a correction that is small
                    // against its block carries solver noise off the
                    // divergence-free subspace, where Rayleigh–Ritz would
                    // happily use it.
                    let n = ops.mass.energy(&y).sqrt();
                    if n > 0.0 {
                        y.iter_mut().for_each(|v| *v /= n);
                    }
                    Ok(leray.project(&y)?.0)
                })
                .collect::<Result<Vec<_>>>()?;
            basis.extend(block.iter().cloned());
        }
        let (values, next) = rayleigh_ritz(&form, &ops.mass, basis, b);
        if values.len() < k {
            return Err(Error::Nonconvergence(format!("Krylov basis collapsed to {} vectors", values.len())));
        }
        ritz = next;
        theta = Some(values.clone());
        for i in 0..k {
            residuals[i] = projected_residual(ops, &form, &sys, &leray, values[i], opt.shift, &ritz[i])?;
        }
        if residuals.iter().all(|&r| r <= opt.tol) {
            let mut vectors: Vec<Vec<f64>> = ritz.into_iter().take(k).collect();
            vectors.iter_mut().for_each(|v| normalize_sign(v));
            let mass_vectors = vectors.iter().map(|v| ops.mass.matvec(v)).collect();
            return Ok(EigenDecomposition {
                values: values[..k].to_vec(),
                vectors,
                residuals,
                restarts: restart,
                mass: ops.mass.clone(),
                mass_vectors,
            });
        }
    }
    let failed: Vec<String> = residuals
        .iter()
        .enumerate()
        .filter(|(_, r)| **r > opt.tol)
        .map(|(i, r)| format!("{}: {r:.3e}", i + 1))
        .collect();
    Err(Error::Nonconvergence(format!("eigenpairs not converged [{}]", failed.join(", "))))
}

/// Reference eigenvalues from a dense solve on an explicit basis of the
/// discrete divergence kernel. Intended for small meshes only.
pub fn dense_eigenvalues(ops: &OperatorSet, k: usize) -> Result<Vec<f64>> {
    let n = ops.space.n_dofs;
    if n > 2500 {
        return Err(Error::InvalidArgument(format!("{n} dofs is too many for the dense oracle")));
    }
    let d = ops.divergence.to_dense();
    let dtd = d.transpose() * &d;
    let e = SymmetricEigen::new(dtd);
    let top = e.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let cols: Vec<usize> = (0..n).filter(|&i| e.eigenvalues[i] <= 1e-10 * top).collect();
    let z = DMatrix::from_fn(n, cols.len(), |r, c| e.eigenvectors[(r, cols[c])]);
    let a = z.transpose() * ops.stokes_form().to_dense() * &z;
    let m = z.transpose() * ops.mass.to_dense() * &z;
    let (values, _) = generalized_symmetric_eigen(&a, &m)?;
    Ok(values.into_iter().take(k).collect())
}
