use super::integrator::Integrator;
use super::{EvolutionTrace, SchemeConfig};
use crate::discretization::{LerayProjector, OperatorSet};
use crate::error::{Error, Result};
use crate::fit::fit_line;
use crate::linalg::axpy;
use crate::stokes::vortex_field;
use serde::Serialize;

/// Suprema of the smoothing quantities over dyadic sample times.
#[derive(Clone, Debug, Serialize)]
pub struct Smoothing {
    /// `sup sqrt(t) ||D u(t)|| / ||u0||`.
    pub sup_gradient: f64,
    /// `sup t ||d_t u(t)|| / ||u0||`.
    pub sup_time_derivative: f64,
    /// `(t, sqrt(t) ||D u|| / ||u0||, t ||d_t u|| / ||u0||)` per dyadic time.
    pub samples: Vec<[f64; 3]>,
}

/// Sample the trace at `t = T 2^-k >= dt`, using the trace row nearest to each time.
pub fn measure_smoothing(trace: &EvolutionTrace, u0_norm: f64) -> Smoothing {
    let rows = &trace.rows;
    let mut samples = Vec::new();
    if rows.len() >= 2 && u0_norm > 0.0 {
        let t_final = rows[rows.len() - 1].time;
        let dt = rows[1].time - rows[0].time;
        let mut t = t_final;
        while t >= dt * (1.0 - 1e-9) {
            let r = rows
                .iter()
                .skip(1)
                .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
                .expect("nonempty");
            samples.push([r.time, r.time.sqrt() * r.norm_du / u0_norm, r.time * r.norm_dudt / u0_norm]);
            t *= 0.5;
        }
        samples.reverse();
    }
    let sup = |k: usize| samples.iter().map(|s| s[k]).fold(0.0, f64::max);
    Smoothing { sup_gradient: sup(1), sup_time_derivative: sup(2), samples }
}

/// Exponential decay rate fitted on a window of the trace.
#[derive(Clone, Debug, Serialize)]
pub struct DecayFit {
    pub delta: f64,
    pub window: [f64; 2],
    pub points: usize,
    /// RMS residual of the fit of `log ||u||`.
    pub residual: f64,
    /// Set when the window holds too little decay for a reliable rate.
    pub warning: Option<String>,
}

/// Least-squares slope of `-log ||u(t)||` on `window` (default `[T/2, T]`).
pub fn fit_decay(trace: &EvolutionTrace, window: Option<[f64; 2]>) -> Result<DecayFit> {
    let t_final = trace.final_row().time;
    let window = window.unwrap_or([0.5 * t_final, t_final]);
    let eps = 1e-12 * t_final.max(1.0);
    let (t, y): (Vec<f64>, Vec<f64>) = trace
        .rows
        .iter()
        .filter(|r| r.time >= window[0] - eps && r.time <= window[1] + eps && r.kinetic > 0.0)
        .map(|r| (r.time, r.norm_u().ln()))
        .unzip();
    if t.len() < 3 {
        return Err(Error::DegenerateFit(format!("{} trace rows in decay window {window:?}", t.len())));
    }
    let fit = fit_line(&t, &y)?;
    let drop = y[0] - y[y.len() - 1];
    let warning = if t.len() < 8 {
        Some(format!("only {} samples in the decay window", t.len()))
    } else if drop < 1e-3 {
        Some(format!("norm decays by a factor {:.6} over the window", (-drop).exp()))
    } else {
        None
    };
    Ok(DecayFit { delta: -fit.slope, window, points: t.len(), residual: fit.residual, warning })
}

/// Time profile of a separable forcing `g(t) F(x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum TimeProfile {
    Constant,
    Sin { omega: f64 },
    Cos { omega: f64 },
}

impl TimeProfile {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Constant => 1.0,
            TimeProfile::Sin { omega } => (omega * t).sin(),
            TimeProfile::Cos { omega } => (omega * t).cos(),
        }
    }
}

/// Member `g(t) F(x)` of a forcing family; `field` holds the coefficients of `F`.
#[derive(Clone, Debug)]
pub struct ForcingMember {
    pub name: String,
    pub field: Vec<f64>,
    pub profile: TimeProfile,
}

impl ForcingMember {
    pub fn new(name: &str, field: Vec<f64>, profile: TimeProfile) -> ForcingMember {
        ForcingMember { name: name.into(), field, profile }
    }

    /// Five members: `phi1 sin(mu1 t)`, a steady and a fast-oscillating vortex,
    /// and a steady and an oscillating tangential boundary layer of width `4h`.
    pub fn standard_family(ops: &OperatorSet, phi1: &[f64], mu1: f64) -> Vec<ForcingMember> {
        let mesh = &ops.space.mesh;
        let (cx, cy) = mesh.vertices.iter().fold((0.0, 0.0), |(a, b), v| (a + v[0], b + v[1]));
        let nv = mesh.vertices.len() as f64;
        let sigma = 0.25 * mesh.domain.min_feature();
        let center = match mesh.domain {
            crate::geometry::DomainSpec::Annulus { inner, outer } => [0.5 * (inner + outer), 0.0],
            _ => [cx / nv + 0.1 * sigma, cy / nv],
        };
        let vortex = vortex_field(ops, center, sigma);
        let layer = boundary_layer_field(ops, 4.0 * mesh.h);
        vec![
            ForcingMember::new("eigenmode_sin", phi1.to_vec(), TimeProfile::Sin { omega: mu1 }),
            ForcingMember::new("vortex_steady", vortex.clone(), TimeProfile::Constant),
            ForcingMember::new("vortex_sin50", vortex, TimeProfile::Sin { omega: 50.0 }),
            ForcingMember::new("layer_steady", layer.clone(), TimeProfile::Constant),
            ForcingMember::new("layer_cos20", layer, TimeProfile::Cos { omega: 20.0 }),
        ]
    }
}

/// `exp(-d / width) tau` with `d` the distance to, and `tau` the tangent of, the nearest boundary curve.
pub fn boundary_layer_field(ops: &OperatorSet, width: f64) -> Vec<f64> {
    let charts = ops.space.mesh.charts.clone();
    ops.space.interpolate(|x| {
        let c = charts
            .iter()
            .min_by(|a, b| a.distance(x).total_cmp(&b.distance(x)))
            .expect("domain has a boundary");
        let tau = c.tangent(c.parameter(x));
        let w = (-c.distance(x) / width).exp();
        [w * tau[0], w * tau[1]]
    })
}

/// Per-member and worst ratios.
#[derive(Clone, Debug, Serialize)]
pub struct MaxRegularity {
    pub members: Vec<(String, f64)>,
    pub max: f64,
}

/// `(int ||d_t u||^2 + int ||A u||^2) / int ||f||^2` per member, with `u0 = 0`.
///
/// Time integrals use the scheme's own quantities: the difference quotient on
/// each step, `A_h = P M^-1 (K + B)` at the step's evaluation point, and the
/// scheme's averaged forcing.
pub fn maximal_regularity_ratio(
    ops: &OperatorSet,
    family: &[ForcingMember],
    cfg: SchemeConfig,
) -> Result<MaxRegularity> {
    let leray = LerayProjector::new(ops)?;
    let form = ops.stokes_form();
    let mut members = Vec::with_capacity(family.len());
    for m in family {
        if m.field.len() != ops.space.n_dofs {
            return Err(Error::DimensionMismatch(format!("forcing '{}' has {} entries", m.name, m.field.len())));
        }
        let load = ops.mass.matvec(&m.field);
        let fsq = ops.mass.energy(&m.field);
        let profile = m.profile;
        let forcing = move |t: f64| load.iter().map(|v| profile.at(t) * v).collect::<Vec<_>>();
        let mut it = Integrator::new(ops, &vec![0.0; ops.space.n_dofs], cfg)?;
        let (th, dt) = (cfg.theta, cfg.dt);
        let (mut num, mut den) = (0.0, 0.0);
        while !it.is_finished() {
            let t0 = it.time();
            let u0 = it.state().to_vec();
            it.step(Some(&forcing))?;
            let u1 = it.state();
            let mut du = u1.to_vec();
            axpy(-1.0, &u0, &mut du);
            let mut um: Vec<f64> = u1.iter().map(|x| th * x).collect();
            axpy(1.0 - th, &u0, &mut um);
            let au = leray.project_load(&form.matvec(&um))?;
            let g = th * profile.at(t0 + dt) + (1.0 - th) * profile.at(t0);
            num += ops.mass.energy(&du) / dt + dt * ops.mass.energy(&au);
            den += dt * g * g * fsq;
        }
        members.push((m.name.clone(), if den > 0.0 { num / den } else { 0.0 }));
    }
    let max = members.iter().map(|m| m.1).fold(0.0, f64::max);
    Ok(MaxRegularity { members, max })
}
