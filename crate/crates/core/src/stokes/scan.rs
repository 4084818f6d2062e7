use super::solve::{solve_resolvent, ResolventSample, StokesSystem};
use crate::discretization::{LerayProjector, OperatorSet};
use crate::error::{Error, Result};
use crate::fit::fit_loglog;
use crate::geometry::SmoothField;
use crate::jet::Jet;
use crate::linalg::to_complex;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// One row of a resolvent scan.
#[derive(Clone, Debug)]
pub struct ScanRow {
    pub ray_arg: f64,
    pub lambda_abs: f64,
    pub sample: ResolventSample,
}

/// Per-ray fitted slopes.
#[derive(Clone, Debug)]
pub struct RaySummary {
    pub ray_arg: f64,
    pub slope_u: f64,
    pub slope_du: f64,
    pub fit_residual_u: f64,
    pub fit_residual_du: f64,
}

#[derive(Clone, Debug)]
pub struct ScanResult {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub rows: Vec<ScanRow>,
    pub rays: Vec<RaySummary>,
    /// `sup |lambda| ||u|| / ||f||` over the samples with `|lambda| >= 10`.
    pub constant: f64,
}

pub const SCAN_COLUMNS: [&str; 8] =
    ["alpha_min", "alpha_max", "ray_arg", "lambda_abs", "norm_u", "norm_Du", "norm_pi", "residual"];

impl ScanRow {
    pub fn values(&self) -> Vec<f64> {
        let s = &self.sample;
        vec![s.alpha_min, s.alpha_max, self.ray_arg, self.lambda_abs, s.norm_u, s.norm_du, s.norm_pi, s.residual]
    }
}

/// Resolvent solves for `lambda = m e^{i arg}` over rays and magnitudes, with
/// the fixed velocity field `f` (load `M f`).
pub fn resolvent_scan(ops: &OperatorSet, rays: &[f64], magnitudes: &[f64], f: &[f64]) -> Result<ScanResult> {
    let lo = magnitudes.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = magnitudes.iter().cloned().fold(0.0, f64::max);
    if !(lo > 0.0) || hi / lo < 1e3 * (1.0 - 1e-12) {
        return Err(Error::InvalidArgument(format!("magnitudes [{lo}, {hi}] span fewer than 3 decades")));
    }
    let load = to_complex(&ops.mass.matvec(f));
    let fnorm = ops.l2_norm(f);
    let jobs: Vec<(f64, f64)> = rays.iter().flat_map(|&a| magnitudes.iter().map(move |&m| (a, m))).collect();
    let rows: Vec<ScanRow> = jobs
        .par_iter()
        .map(|&(arg, m)| {
            let lambda = Complex64::from_polar(m, arg);
            let (_, _, sample) = solve_resolvent(ops, lambda, &load)?;
            Ok(ScanRow { ray_arg: arg, lambda_abs: m, sample })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut summaries = Vec::new();
    for &arg in rays {
        let sel: Vec<&ScanRow> = rows.iter().filter(|r| r.ray_arg == arg).collect();
        let x: Vec<f64> = sel.iter().map(|r| r.lambda_abs).collect();
        let fu = fit_loglog(&x, &sel.iter().map(|r| r.sample.norm_u).collect::<Vec<_>>())?;
        let fd = fit_loglog(&x, &sel.iter().map(|r| r.sample.norm_du).collect::<Vec<_>>())?;
        summaries.push(RaySummary {
            ray_arg: arg,
            slope_u: fu.slope,
            slope_du: fd.slope,
            fit_residual_u: fu.residual,
            fit_residual_du: fd.residual,
        });
    }
    let constant = rows
        .iter()
        .filter(|r| r.lambda_abs >= 10.0)
        .map(|r| r.lambda_abs * r.sample.norm_u / fnorm)
        .fold(0.0, f64::max);
    let (alpha_min, alpha_max) = ops.alpha_range();
    Ok(ScanResult { alpha_min, alpha_max, rows, rays: summaries, constant })
}

/// Gaussian vortex `psi = exp(-r^2 / sigma^2)` centred at `center`, interpolated.
pub fn vortex_field(ops: &OperatorSet, center: [f64; 2], sigma: f64) -> Vec<f64> {
    let s2 = sigma * sigma;
    let field = SmoothField::from_stream("vortex", move |x: Jet, y: Jet| {
        let dx = x - center[0];
        let dy = y - center[1];
        (-(dx * dx + dy * dy) / s2).exp()
    });
    ops.space.interpolate_field(&field)
}

/// Borderline-rough data `A^{-1/2} xi`, with `xi` a Leray-projected Gaussian
/// vector whose covariance is spectrally equivalent to the `M`-white one.
///
/// Uses `A^{-1/2} = (2/pi) int_0^inf (t^2 + A)^{-1} dt` with `t = e^s` and the
/// trapezoidal rule in `s`, which converges geometrically for this integrand.
pub fn rough_forcing(ops: &OperatorSet, seed: u64) -> Result<Vec<f64>> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let z: Vec<f64> = (0..ops.space.n_dofs)
        .map(|i| {
            let g: f64 = StandardNormal.sample(&mut rng);
            g / ops.mass.get(i, i).sqrt()
        })
        .collect();
    let (xi, _) = LerayProjector::new(ops)?.project(&z)?;
    inverse_sqrt_apply(ops, &xi)
}

/// `A^{-1/2} v` for a discretely solenoidal `v`, by quadrature of the resolvent integral.
pub fn inverse_sqrt_apply(ops: &OperatorSet, v: &[f64]) -> Result<Vec<f64>> {
    let step: f64 = 0.5;
    let smax: f64 = 14.0;
    let n = (2.0 * smax / step).round() as i64;
    let mv = ops.mass.matvec(v);
    let parts: Vec<Vec<f64>> = (0..=n)
        .into_par_iter()
        .map(|k| {
            let s = -smax + step * k as f64;
            let t = s.exp();
            let sys = StokesSystem::<f64>::new(
                ops,
                vec![(t * t, &ops.mass), (1.0, &ops.stiffness), (1.0, &ops.boundary)],
                false,
            )?;
            let (u, _, _, _) = sys.solve(&mv)?;
            let w = step * t * 2.0 / std::f64::consts::PI;
            Ok(u.into_iter().map(|x| x * w).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![0.0; v.len()];
    for p in parts {
        for (o, x) in out.iter_mut().zip(p) {
            *o += x;
        }
    }
    Ok(out)
}
