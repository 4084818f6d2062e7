use super::{Convection, EvolutionTrace, SchemeConfig, TraceRow};
use crate::discretization::{convection_matrix, LerayProjector, OperatorSet};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, CsrMatrix};
use crate::stokes::{remove_rigid_component, StokesSystem};

/// Load vector of the forcing at time `t`.
pub type Forcing<'f> = &'f (dyn Fn(f64) -> Vec<f64> + Sync);

/// Final state and trace of a run.
#[derive(Clone, Debug)]
pub struct Evolution {
    pub trace: EvolutionTrace,
    pub u: Vec<f64>,
}

/// Step-by-step theta scheme
///
/// `M (u1 - u0) + dt (K + B + C(u0)) (theta u1 + (1 - theta) u0) + dt D^T p = dt Fbar`,
/// `D u1 = 0`, with `Fbar = theta F(t1) + (1 - theta) F(t0)` and `C = 0` without
/// convection. Testing with `theta u1 + (1 - theta) u0` gives the energy
/// balance that the trace accumulates; for `theta = 1/2` it is an identity.
pub struct Integrator<'a> {
    ops: &'a OperatorSet,
    cfg: SchemeConfig,
    form: CsrMatrix,
    linear: Option<StokesSystem<f64>>,
    u: Vec<f64>,
    n: usize,
    trace: EvolutionTrace,
    cum_work: f64,
}

impl<'a> Integrator<'a> {
    /// Starts from `u0`, replaced by its Leray projection unless already solenoidal.
    pub fn new(ops: &'a OperatorSet, u0: &[f64], cfg: SchemeConfig) -> Result<Integrator<'a>> {
        cfg.validate()?;
        if u0.len() != ops.space.n_dofs {
            return Err(Error::DimensionMismatch(format!("u0 has {} entries, space {}", u0.len(), ops.space.n_dofs)));
        }
        let (u, defect) = solenoidal_start(ops, u0)?;
        let linear = match cfg.convection {
            Convection::None => Some(step_system(ops, &cfg, None)?),
            Convection::Skew => None,
        };
        let mut it = Integrator {
            ops,
            cfg,
            form: ops.stokes_form(),
            linear,
            u,
            n: 0,
            trace: EvolutionTrace { rows: Vec::new(), initial_projection: defect, kernel_projection: 0.0 },
            cum_work: 0.0,
        };
        it.reset_initial_row();
        Ok(it)
    }

    /// Remove the rigid component from the initial state (only meaningful
    /// before the first step, when `alpha = 0` leaves it in the kernel).
    pub fn remove_kernel(mut self) -> Integrator<'a> {
        assert_eq!(self.n, 0, "kernel filtering applies to the initial state");
        self.trace.kernel_projection = remove_rigid_component(self.ops, &mut self.u);
        self.reset_initial_row();
        self
    }

    fn reset_initial_row(&mut self) {
        self.trace.rows = vec![TraceRow {
            time: 0.0,
            kinetic: 0.5 * self.ops.mass.energy(&self.u),
            cum_dissipation: 0.0,
            cum_friction: 0.0,
            norm_du: self.ops.strain_norm(&self.u),
            norm_dudt: 0.0,
            energy_residual: 0.0,
        }];
    }

    pub fn state(&self) -> &[f64] {
        &self.u
    }

    pub fn steps_taken(&self) -> usize {
        self.n
    }

    pub fn time(&self) -> f64 {
        self.cfg.time(self.n)
    }

    pub fn is_finished(&self) -> bool {
        self.n >= self.cfg.steps()
    }

    pub fn trace(&self) -> &EvolutionTrace {
        &self.trace
    }

    /// Advance one step; `forcing` gives the load vector at a time.
    pub fn step(&mut self, forcing: Option<Forcing<'_>>) -> Result<()> {
        let (ops, cfg) = (self.ops, self.cfg);
        let (t0, t1) = (cfg.time(self.n), cfg.time(self.n + 1));
        let (th, dt) = (cfg.theta, cfg.dt);
        let fail = |e: Error| Error::StepFailure { time: t1, reason: e.to_string() };
        let conv = match cfg.convection {
            Convection::Skew => Some(convection_matrix(&ops.space, &self.u)),
            Convection::None => None,
        };
        let u0 = &self.u;
        let mut rhs = ops.mass.matvec(u0);
        if th < 1.0 {
            let mut au = self.form.matvec(u0);
            if let Some(c) = &conv {
                axpy(1.0, &c.matvec(u0), &mut au);
            }
            axpy(-(1.0 - th) * dt, &au, &mut rhs);
        }
        let fbar = forcing.map(|f| {
            let mut fb = f(t1);
            fb.iter_mut().for_each(|v| *v *= th);
            if th < 1.0 {
                axpy(1.0 - th, &f(t0), &mut fb);
            }
            fb
        });
        if let Some(fb) = &fbar {
            axpy(dt, fb, &mut rhs);
        }
        let (u1, _, _, _) = match (&self.linear, &conv) {
            (Some(sys), _) => sys.solve(&rhs).map_err(fail)?,
            (None, c) => step_system(ops, &cfg, c.as_ref()).map_err(fail)?.solve(&rhs).map_err(fail)?,
        };

        let mut um: Vec<f64> = u1.iter().map(|x| th * x).collect();
        if th < 1.0 {
            axpy(1.0 - th, u0, &mut um);
        }
        let prev = *self.trace.final_row();
        let cum_dissipation = prev.cum_dissipation + dt * ops.stiffness.energy(&um);
        let cum_friction = prev.cum_friction + dt * ops.boundary.energy(&um);
        if let Some(fb) = &fbar {
            self.cum_work += dt * dot(fb, &um);
        }
        let kinetic = 0.5 * ops.mass.energy(&u1);
        let mut du = u1.clone();
        axpy(-1.0, u0, &mut du);
        let k0 = self.trace.initial_kinetic();
        let row = TraceRow {
            time: t1,
            kinetic,
            cum_dissipation,
            cum_friction,
            norm_du: ops.strain_norm(&u1),
            norm_dudt: ops.mass.energy(&du).sqrt() / dt,
            energy_residual: kinetic + cum_dissipation + cum_friction - k0 - self.cum_work,
        };
        if fbar.is_none() && prev.kinetic > 0.0 && kinetic > prev.kinetic * (1.0 + 1e-6) {
            return Err(Error::DivergenceAlarm { time: t1, growth: kinetic / prev.kinetic - 1.0 });
        }
        self.trace.rows.push(row);
        self.u = u1;
        self.n += 1;
        Ok(())
    }

    /// Step to the final time.
    pub fn run(&mut self, forcing: Option<Forcing<'_>>) -> Result<()> {
        while !self.is_finished() {
            self.step(forcing)?;
        }
        Ok(())
    }

    pub fn finish(self) -> Evolution {
        Evolution { trace: self.trace, u: self.u }
    }
}

fn solenoidal_start(ops: &OperatorSet, u0: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n0 = ops.mass.energy(u0).sqrt();
    if n0 == 0.0 {
        return Ok((u0.to_vec(), 0.0));
    }
    let (pu, _) = LerayProjector::new(ops)?.project(u0)?;
    let mut d = u0.to_vec();
    axpy(-1.0, &pu, &mut d);
    let defect = ops.mass.energy(&d).sqrt() / n0;
    // Keep bit-identical data when it is already solenoidal, so restarts
    // reproduce a single run exactly.
    if defect <= 1e-12 {
        Ok((u0.to_vec(), defect))
    } else {
        Ok((pu, defect))
    }
}

fn step_system(ops: &OperatorSet, cfg: &SchemeConfig, conv: Option<&CsrMatrix>) -> Result<StokesSystem<f64>> {
    let w = cfg.theta * cfg.dt;
    let mut blocks = vec![(1.0, &ops.mass), (w, &ops.stiffness), (w, &ops.boundary)];
    if let Some(c) = conv {
        blocks.push((w, c));
    }
    StokesSystem::new(ops, blocks, false)
}

/// Linear Stokes evolution from `u0` with optional forcing.
pub fn evolve_stokes(
    ops: &OperatorSet,
    u0: &[f64],
    forcing: Option<Forcing<'_>>,
    cfg: SchemeConfig,
) -> Result<Evolution> {
    if cfg.convection != Convection::None {
        return Err(Error::InvalidArgument("evolve_stokes takes no convection; use evolve_navier_stokes".into()));
    }
    let mut it = Integrator::new(ops, u0, cfg)?;
    it.run(forcing)?;
    Ok(it.finish())
}

/// Unforced Navier–Stokes evolution with semi-implicit skew-symmetric convection.
pub fn evolve_navier_stokes(ops: &OperatorSet, u0: &[f64], cfg: SchemeConfig) -> Result<Evolution> {
    if cfg.convection != Convection::Skew {
        return Err(Error::InvalidArgument("Navier–Stokes needs skew-symmetric convection".into()));
    }
    let mut it = Integrator::new(ops, u0, cfg)?;
    it.run(None)?;
    Ok(it.finish())
}
