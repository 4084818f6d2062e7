use crate::discretization::{BoundaryMode, OperatorSet};
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, SaddleSolver, SaddleSpec, Scalar};
use num_complex::Complex64;
use serde::Serialize;

/// What to do with the rigid kernel when the steady slip problem has `alpha = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelPolicy {
    /// Project the rigid mode out of data and solution.
    Filter,
    /// Report a singular operator.
    Reject,
}

/// Rigid mode of the space when it spans a kernel of `K + B_alpha`, with `M r`.
pub(crate) struct RigidKernel {
    pub mode: Vec<f64>,
    pub mass_mode: Vec<f64>,
    pub norm_sq: f64,
}

impl RigidKernel {
    pub fn of(ops: &OperatorSet) -> Option<RigidKernel> {
        if ops.space.mode != BoundaryMode::Slip || !ops.alpha_is_zero() {
            return None;
        }
        let mode = ops.space.rigid_mode();
        let mass_mode = ops.mass.matvec(&mode);
        let norm_sq: f64 = mode.iter().zip(&mass_mode).map(|(a, b)| a * b).sum();
        Some(RigidKernel { mode, mass_mode, norm_sq })
    }

    /// Remove the component along `M r` from a load; returns the removed coefficient norm.
    pub fn filter_load<T: Scalar>(&self, load: &mut [T]) -> f64 {
        let c = self.mode.iter().zip(load.iter()).fold(T::from(0.0), |acc, (r, f)| acc + f.scaled(*r));
        let c = c.scaled(1.0 / self.norm_sq);
        for (f, m) in load.iter_mut().zip(&self.mass_mode) {
            *f += (-c).scaled(*m);
        }
        c.modulus_sq().sqrt() * self.norm_sq.sqrt()
    }

    /// M-orthogonal removal of the rigid component of a field.
    pub fn filter_field<T: Scalar>(&self, u: &mut [T]) -> f64 {
        let c = self.mass_mode.iter().zip(u.iter()).fold(T::from(0.0), |acc, (m, x)| acc + x.scaled(*m));
        let c = c.scaled(1.0 / self.norm_sq);
        for (x, r) in u.iter_mut().zip(&self.mode) {
            *x += (-c).scaled(*r);
        }
        c.modulus_sq().sqrt() * self.norm_sq.sqrt()
    }
}

/// Remove the `M`-orthogonal rigid component of `u` when the rigid mode is in
/// the kernel of `K + B_alpha` (slip space, `alpha = 0`); returns the removed norm.
pub fn remove_rigid_component(ops: &OperatorSet, u: &mut [f64]) -> f64 {
    match RigidKernel::of(ops) {
        Some(k) => k.filter_field(u),
        None => 0.0,
    }
}

/// Factorized `[lambda M + K + B, D^T; D, 0]` with the zero-mean pressure border.
pub struct StokesSystem<T: Scalar> {
    solver: SaddleSolver<T>,
    kernel: Option<RigidKernel>,
}

impl<T: Scalar> StokesSystem<T> {
    /// `sum_k c_k A_k` as velocity block; the rigid constraint is added when
    /// `filter_kernel` is set and the space has a rigid kernel.
    pub fn new(ops: &OperatorSet, blocks: Vec<(T, &CsrMatrix)>, filter_kernel: bool) -> Result<StokesSystem<T>> {
        let kernel = if filter_kernel { RigidKernel::of(ops) } else { None };
        let constraints = kernel.iter().map(|k| k.mass_mode.clone()).collect();
        let spec = SaddleSpec {
            blocks,
            divergence: &ops.divergence,
            pressure_mean: Some(&ops.pressure_mean),
            velocity_constraints: constraints,
        };
        Ok(StokesSystem { solver: SaddleSolver::new(&spec)?, kernel })
    }

    /// The resolvent operator `lambda M + K + B_alpha`.
    pub fn resolvent(ops: &OperatorSet, lambda: T) -> Result<StokesSystem<T>> {
        StokesSystem::new(
            ops,
            vec![(lambda, &ops.mass), (T::from(1.0), &ops.stiffness), (T::from(1.0), &ops.boundary)],
            false,
        )
    }

    /// Solve for a load vector; returns `(u, p, relative residual, removed kernel component)`.
    pub fn solve(&self, load: &[T]) -> Result<(Vec<T>, Vec<T>, f64, f64)> {
        let mut f = load.to_vec();
        let removed = match &self.kernel {
            Some(k) => k.filter_load(&mut f),
            None => 0.0,
        };
        let (u, p, res) = self.solver.solve(&f, None)?;
        Ok((u, p, res, removed))
    }
}

/// Steady solution with diagnostics.
#[derive(Clone, Debug)]
pub struct SteadySolution {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub residual: f64,
    /// Relative discrete divergence `||D u|| / ||rhs||`.
    pub divergence: f64,
    /// Norm of the rigid component removed from the data.
    pub kernel_projection: f64,
}

/// Steady slip-Stokes solve `a(u, v) - (p, div v) = <f, v> + <g, v_tau>` with
/// the loads `f_load` and optional `g_load` (see [`super::slip_data_load`]).
pub fn solve_steady(
    ops: &OperatorSet,
    f_load: &[f64],
    g_load: Option<&[f64]>,
    policy: KernelPolicy,
) -> Result<SteadySolution> {
    if ops.space.mode == BoundaryMode::Slip && ops.alpha_is_zero() && policy == KernelPolicy::Reject {
        return Err(Error::SingularOperator(
            "alpha vanishes identically and the rigid mode spans the kernel; enable kernel filtering".into(),
        ));
    }
    let mut load = f_load.to_vec();
    if let Some(g) = g_load {
        for (a, b) in load.iter_mut().zip(g) {
            *a += b;
        }
    }
    let sys = StokesSystem::<f64>::new(ops, vec![(1.0, &ops.stiffness), (1.0, &ops.boundary)], true)?;
    let (u, p, residual, kernel_projection) = sys.solve(&load)?;
    let bn = crate::linalg::norm2(&load).max(f64::MIN_POSITIVE);
    let divergence = crate::linalg::norm2(&ops.divergence.matvec(&u)) / bn;
    Ok(SteadySolution { u, p, residual, divergence, kernel_projection })
}

/// One resolvent solve with its norms.
#[derive(Clone, Debug, Serialize)]
pub struct ResolventSample {
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub norm_u: f64,
    pub norm_du: f64,
    pub norm_pi: f64,
    pub residual: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
}

impl ResolventSample {
    pub fn lambda(&self) -> Complex64 {
        Complex64::new(self.lambda_re, self.lambda_im)
    }
}

/// Resolvent solve `(lambda + A) u = P f` for `Re lambda >= 0`, `lambda != 0`.
pub fn solve_resolvent(
    ops: &OperatorSet,
    lambda: Complex64,
    load: &[Complex64],
) -> Result<(Vec<Complex64>, Vec<Complex64>, ResolventSample)> {
    if lambda.re < 0.0 {
        return Err(Error::InvalidArgument(format!("Re lambda = {} < 0", lambda.re)));
    }
    if lambda == Complex64::new(0.0, 0.0) {
        let re: Vec<f64> = load.iter().map(|z| z.re).collect();
        let im: Vec<f64> = load.iter().map(|z| z.im).collect();
        let a = solve_steady(ops, &re, None, KernelPolicy::Filter)?;
        let b = solve_steady(ops, &im, None, KernelPolicy::Filter)?;
        let join = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| Complex64::new(*a, *b)).collect::<Vec<_>>();
        let u = join(&a.u, &b.u);
        let p = join(&a.p, &b.p);
        let sample = sample_of(ops, Complex64::new(0.0, 0.0), &u, &p, a.residual.max(b.residual));
        return Ok((u, p, sample));
    }
    let sys = StokesSystem::<Complex64>::resolvent(ops, lambda)?;
    let (u, p, res, _) = sys.solve(load)?;
    let sample = sample_of(ops, lambda, &u, &p, res);
    Ok((u, p, sample))
}

fn sample_of(ops: &OperatorSet, lambda: Complex64, u: &[Complex64], p: &[Complex64], residual: f64) -> ResolventSample {
    let (alpha_min, alpha_max) = ops.alpha_range();
    ResolventSample {
        lambda_re: lambda.re,
        lambda_im: lambda.im,
        norm_u: ops.l2_norm(u),
        norm_du: ops.strain_norm(u),
        norm_pi: ops.pressure_norm(p),
        residual,
        alpha_min,
        alpha_max,
    }
}

/// No-slip companion: `ops` must be assembled on a [`BoundaryMode::NoSlip`] space.
/// `lambda = 0` gives the steady problem.
pub fn solve_dirichlet(
    ops: &OperatorSet,
    lambda: Complex64,
    load: &[Complex64],
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if ops.space.mode != BoundaryMode::NoSlip {
        return Err(Error::InvalidArgument("solve_dirichlet needs a no-slip space".into()));
    }
    if lambda.re < 0.0 {
        return Err(Error::InvalidArgument(format!("Re lambda = {} < 0", lambda.re)));
    }
    let sys = StokesSystem::<Complex64>::resolvent(ops, lambda)?;
    let (u, p, _, _) = sys.solve(load)?;
    Ok((u, p))
}

/// Real steady no-slip solve.
pub fn solve_dirichlet_steady(ops: &OperatorSet, load: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if ops.space.mode != BoundaryMode::NoSlip {
        return Err(Error::InvalidArgument("solve_dirichlet needs a no-slip space".into()));
    }
    let sys = StokesSystem::<f64>::new(ops, vec![(1.0, &ops.stiffness)], false)?;
    let (u, p, _, _) = sys.solve(load)?;
    Ok((u, p))
}
