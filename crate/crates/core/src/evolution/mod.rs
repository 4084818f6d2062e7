//! Time integration of the slip Stokes and Navier–Stokes systems with exact
//! discrete energy accounting, and the diagnostics built on the traces.

mod analysis;
mod integrator;

pub use analysis::{
    boundary_layer_field, fit_decay, maximal_regularity_ratio, measure_smoothing, DecayFit, ForcingMember, MaxRegularity,
    Smoothing, TimeProfile,
};
pub use integrator::{evolve_navier_stokes, evolve_stokes, Evolution, Forcing, Integrator};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Treatment of the convective term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convection {
    None,
    /// `b(w; u, v) = ((w.grad) u, v)/2 - ((w.grad) v, u)/2` with `w` the previous step.
    Skew,
}

/// Theta scheme: `theta = 1` is implicit Euler, `theta = 1/2` the trapezoidal rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub theta: f64,
    pub dt: f64,
    pub t_final: f64,
    pub convection: Convection,
}

impl SchemeConfig {
    pub fn trapezoidal(dt: f64, t_final: f64) -> SchemeConfig {
        SchemeConfig { theta: 0.5, dt, t_final, convection: Convection::None }
    }

    pub fn with_convection(mut self, convection: Convection) -> SchemeConfig {
        self.convection = convection;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta != 1.0 && self.theta != 0.5 {
            return Err(Error::InvalidArgument(format!("theta = {} (must be 1 or 1/2)", self.theta)));
        }
        if !(self.dt > 0.0) || !(self.t_final > self.dt) || !self.t_final.is_finite() {
            return Err(Error::InvalidArgument(format!("need 0 < dt < T (dt = {}, T = {})", self.dt, self.t_final)));
        }
        let n = self.t_final / self.dt;
        if (n - n.round()).abs() > 1e-9 * n {
            return Err(Error::InvalidArgument(format!("T = {} is not a multiple of dt = {}", self.t_final, self.dt)));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    /// Time of step `n`, computed directly so restarts see the same grid.
    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }
}

/// One trace sample at `t_n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub time: f64,
    /// `||u||^2 / 2`.
    pub kinetic: f64,
    /// Cumulative `2 ||D u||^2 dt` at the scheme's evaluation point.
    pub cum_dissipation: f64,
    /// Cumulative `int_Gamma alpha |u_tau|^2 dt`.
    pub cum_friction: f64,
    pub norm_du: f64,
    /// Backward difference quotient `||(u_n - u_{n-1}) / dt||`; 0 at `t = 0`.
    pub norm_dudt: f64,
    /// `kinetic + dissipation + friction - kinetic(0) - work of the forcing`.
    pub energy_residual: f64,
}

pub const TRACE_COLUMNS: [&str; 7] =
    ["time", "kinetic", "cum_dissipation", "cum_friction", "norm_Du", "norm_dudt", "energy_residual"];

impl TraceRow {
    pub fn values(&self) -> Vec<f64> {
        vec![
            self.time,
            self.kinetic,
            self.cum_dissipation,
            self.cum_friction,
            self.norm_du,
            self.norm_dudt,
            self.energy_residual,
        ]
    }

    pub fn norm_u(&self) -> f64 {
        (2.0 * self.kinetic).sqrt()
    }
}

#[derive(Clone, Debug, Default)]
pub struct EvolutionTrace {
    pub rows: Vec<TraceRow>,
    /// `||u0 - P u0|| / ||u0||` of the initial projection (0 when `u0` was solenoidal).
    pub initial_projection: f64,
    /// Norm of the rigid component removed from `u0`, when requested.
    pub kernel_projection: f64,
}

impl EvolutionTrace {
    pub fn initial_kinetic(&self) -> f64 {
        self.rows.first().map_or(0.0, |r| r.kinetic)
    }

    /// `max_t |energy residual| / kinetic(0)`.
    pub fn max_relative_residual(&self) -> f64 {
        let k0 = self.initial_kinetic();
        let worst = self.rows.iter().map(|r| r.energy_residual.abs()).fold(0.0, f64::max);
        if k0 > 0.0 {
            worst / k0
        } else {
            worst
        }
    }

    pub fn final_row(&self) -> &TraceRow {
        self.rows.last().expect("trace has the initial row")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{convection_matrix, BoundaryMode, OperatorSet, SlipCoefficient};
    use crate::geometry::DomainSpec;
    use crate::spectral::eigensolve;
    use crate::stokes::vortex_field;
    use rand::{Rng, SeedableRng};

    const DISK: DomainSpec = DomainSpec::Disk { radius: 1.0 };

    fn ops(dom: DomainSpec, h: f64, alpha: f64) -> OperatorSet {
        OperatorSet::build(&dom, h, &SlipCoefficient::constant(alpha), BoundaryMode::Slip).unwrap()
    }

    #[test]
    fn zero_data_stays_zero() {
        let o = ops(DISK, 0.3, 1.0);
        let z = vec![0.0; o.space.n_dofs];
        let cfg = SchemeConfig::trapezoidal(0.05, 0.2);
        let e = evolve_stokes(&o, &z, None, cfg).unwrap();
        assert!(e.u.iter().all(|v| *v == 0.0));
        let e = evolve_navier_stokes(&o, &z, cfg.with_convection(Convection::Skew)).unwrap();
        assert!(e.u.iter().all(|v| *v == 0.0));
        assert_eq!(e.trace.rows.len(), 5);
    }

    #[test]
    fn config_validation() {
        let o = ops(DISK, 0.4, 1.0);
        let z = vec![0.0; o.space.n_dofs];
        let bad = [
            SchemeConfig { theta: 0.7, ..SchemeConfig::trapezoidal(0.1, 1.0) },
            SchemeConfig::trapezoidal(0.3, 1.0),
            SchemeConfig::trapezoidal(1.0, 0.5),
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
        let skew = SchemeConfig::trapezoidal(0.1, 1.0).with_convection(Convection::Skew);
        assert!(evolve_stokes(&o, &z, None, skew).is_err());
        assert!(evolve_navier_stokes(&o, &z, SchemeConfig::trapezoidal(0.1, 1.0)).is_err());
    }

    #[test]
    fn trapezoidal_energy_identity_and_monotone_kinetic() {
        let o = ops(DISK, 0.2, 1.0);
        let u0 = vortex_field(&o, [0.2, -0.1], 0.4);
        let e = evolve_stokes(&o, &u0, None, SchemeConfig::trapezoidal(0.01, 0.5)).unwrap();
        assert!(e.trace.max_relative_residual() <= 1e-8, "{}", e.trace.max_relative_residual());
        for w in e.trace.rows.windows(2) {
            assert!(w[1].kinetic <= w[0].kinetic);
            assert!(w[1].cum_dissipation >= w[0].cum_dissipation && w[1].cum_friction >= w[0].cum_friction);
        }
        // Euler dissipates numerically but never gains energy
        let cfg = SchemeConfig { theta: 1.0, ..SchemeConfig::trapezoidal(0.01, 0.5) };
        let e = evolve_stokes(&o, &u0, None, cfg).unwrap();
        assert!(e.trace.rows.iter().all(|r| r.energy_residual <= 1e-12));
    }

    #[test]
    fn forced_energy_balance_includes_work() {
        let o = ops(DomainSpec::Annulus { inner: 0.5, outer: 1.0 }, 0.2, 3.0);
        let field = vortex_field(&o, [0.75, 0.0], 0.2);
        let load = o.mass.matvec(&field);
        let f = move |t: f64| load.iter().map(|v| (3.0 * t).cos() * v).collect::<Vec<_>>();
        let mut it = Integrator::new(&o, &vec![0.0; o.space.n_dofs], SchemeConfig::trapezoidal(0.02, 0.4)).unwrap();
        it.run(Some(&f)).unwrap();
        let tr = it.finish().trace;
        let scale = tr.rows.iter().map(|r| r.kinetic).fold(0.0, f64::max);
        let worst = tr.rows.iter().map(|r| r.energy_residual.abs()).fold(0.0, f64::max);
        assert!(worst <= 1e-10 * scale, "{worst} {scale}");
    }

    #[test]
    fn eigenfunction_decays_at_first_eigenvalue() {
        let o = ops(DISK, 0.2, 2.0);
        let eig = eigensolve(&o, 1).unwrap();
        let mu = eig.values[0];
        let t = 0.5;
        let e = evolve_stokes(&o, &eig.vectors[0], None, SchemeConfig::trapezoidal(0.005, t)).unwrap();
        let ratio = e.trace.final_row().norm_u() / e.trace.initial_kinetic().mul_add(2.0, 0.0).sqrt();
        assert!((ratio / (-mu * t).exp() - 1.0).abs() < 1e-3, "{ratio} {}", (-mu * t).exp());
        let fit = fit_decay(&e.trace, None).unwrap();
        assert!((fit.delta / mu - 1.0).abs() < 0.02, "{} {mu}", fit.delta);
        assert!(fit.warning.is_none());
        // smooth data: sqrt(t) ||D u(t)|| <= sqrt(t mu / 2) ||u0||, vanishing as t -> 0
        let s = measure_smoothing(&e.trace, 1.0);
        assert!(s.samples.len() >= 6);
        for [t, g, _] in &s.samples {
            assert!(*g <= (t * mu / 2.0).sqrt() * (1.0 + 1e-9));
        }
    }

    #[test]
    fn skew_convection_is_energy_neutral() {
        let o = ops(DomainSpec::Annulus { inner: 0.4, outer: 1.0 }, 0.25, 1.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = o.space.n_dofs;
        for _ in 0..3 {
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let c = convection_matrix(&o.space, &w);
            let cu = c.matvec(&u);
            let b: f64 = u.iter().zip(&cu).map(|(a, b)| a * b).sum();
            let scale = crate::linalg::norm2(&u) * crate::linalg::norm2(&cu);
            assert!(b.abs() <= 1e-14 * scale, "{b} {scale}");
        }
    }

    #[test]
    fn restart_reproduces_single_run_bitwise() {
        let o = ops(DISK, 0.25, 1.0);
        let u0 = vortex_field(&o, [0.1, 0.2], 0.5);
        for conv in [Convection::None, Convection::Skew] {
            let cfg = SchemeConfig::trapezoidal(0.02, 0.2).with_convection(conv);
            let mut whole = Integrator::new(&o, &u0, cfg).unwrap();
            whole.run(None).unwrap();
            let half = SchemeConfig { t_final: 0.1, ..cfg };
            let mut a = Integrator::new(&o, &u0, cfg).unwrap();
            while a.time() < 0.1 - 1e-12 {
                a.step(None).unwrap();
            }
            let mut b = Integrator::new(&o, a.state(), half).unwrap();
            b.run(None).unwrap();
            assert_eq!(whole.state(), b.state());
        }
    }

    #[test]
    fn navier_stokes_energy_equality() {
        let o = ops(DISK, 0.2, 1.0);
        let mut u0 = vortex_field(&o, [0.3, 0.0], 0.35);
        // scale to a Reynolds-like number ||u0||_inf * R of about 50
        let m = u0.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        u0.iter_mut().for_each(|v| *v *= 50.0 / m);
        let cfg = SchemeConfig::trapezoidal(0.005, 0.2).with_convection(Convection::Skew);
        let e = evolve_navier_stokes(&o, &u0, cfg).unwrap();
        assert!(e.trace.max_relative_residual() <= 1e-6, "{}", e.trace.max_relative_residual());
        assert!(e.trace.final_row().kinetic < e.trace.initial_kinetic());
    }

    #[test]
    fn rigid_rotation_is_nearly_steady_without_friction() {
        let o = ops(DISK, 0.15, 0.0);
        let u0 = o.space.interpolate(|x| [-x[1], x[0]]);
        let cfg = SchemeConfig::trapezoidal(0.01, 0.2).with_convection(Convection::Skew);
        let e = evolve_navier_stokes(&o, &u0, cfg).unwrap();
        let mut d = e.u.clone();
        crate::linalg::axpy(-1.0, &u0, &mut d);
        assert!(o.l2_norm(&d) < 1e-3 * o.l2_norm(&u0), "{}", o.l2_norm(&d) / o.l2_norm(&u0));
        assert!(e.trace.max_relative_residual() <= 1e-10);
    }

    #[test]
    fn kernel_filter_removes_rotation() {
        let o = ops(DomainSpec::Annulus { inner: 0.5, outer: 1.0 }, 0.2, 0.0);
        let u0 = o.space.interpolate(|x| [-x[1], x[0]]);
        let it = Integrator::new(&o, &u0, SchemeConfig::trapezoidal(0.1, 0.5)).unwrap().remove_kernel();
        assert!(it.trace().kernel_projection > 0.1);
        assert!(o.l2_norm(it.state()) < 1e-10);
    }

    #[test]
    fn maximal_regularity_matches_one_mode_oracle() {
        let o = ops(DISK, 0.2, 1.0);
        let eig = eigensolve(&o, 1).unwrap();
        let mu = eig.values[0];
        let t_final = 1.0;
        let member = ForcingMember::new("phi1", eig.vectors[0].clone(), TimeProfile::Sin { omega: mu });
        let cfg = SchemeConfig::trapezoidal(1e-3, t_final);
        let r = maximal_regularity_ratio(&o, &[member], cfg).unwrap();
        // u = a(t) phi1 with a' = -mu a + sin(mu t), a(0) = 0
        let w = mu;
        let d = mu * mu + w * w;
        let a = |t: f64| (mu * (w * t).sin() - w * (w * t).cos() + w * (-mu * t).exp()) / d;
        let da = |t: f64| -mu * a(t) + (w * t).sin();
        let n = 200_000;
        let h = t_final / n as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n {
            let t = (i as f64 + 0.5) * h;
            num += h * (da(t).powi(2) + mu * mu * a(t).powi(2));
            den += h * (w * t).sin().powi(2);
        }
        let oracle = num / den;
        assert!((r.max / oracle - 1.0).abs() < 0.05, "{} {oracle}", r.max);
        let z = ForcingMember::new("zero", vec![0.0; o.space.n_dofs], TimeProfile::Constant);
        assert_eq!(maximal_regularity_ratio(&o, &[z], SchemeConfig::trapezoidal(0.1, 0.5)).unwrap().max, 0.0);
    }

    #[test]
    fn standard_family_has_five_finite_members() {
        let o = ops(DISK, 0.3, 1.0);
        let eig = eigensolve(&o, 1).unwrap();
        let fam = ForcingMember::standard_family(&o, &eig.vectors[0], eig.values[0]);
        assert_eq!(fam.len(), 5);
        let r = maximal_regularity_ratio(&o, &fam, SchemeConfig::trapezoidal(0.01, 0.5)).unwrap();
        assert!(r.members.iter().all(|m| m.1.is_finite() && m.1 > 0.0), "{:?}", r.members);
    }
}
