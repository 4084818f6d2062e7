//! Caccioppoli and weak reverse Hölder probes for resolvent solutions whose
//! data vanish near the probe.

use crate::discretization::OperatorSet;
use crate::error::{Error, Result};
use crate::geometry::BallProbe;
use crate::quadrature::TriangleRule;
use crate::stokes::solve_resolvent;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

pub const RECORD_COLUMNS: [&str; 9] = ["probe_x", "probe_y", "r", "lambda_abs", "p", "lhs", "rhs", "ratio", "h"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimate {
    Caccioppoli,
    ReverseHolder,
}

/// One tested inequality `lhs <= C rhs`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LocalEstimateRecord {
    pub estimate: Estimate,
    pub probe_x: f64,
    pub probe_y: f64,
    pub r: f64,
    pub lambda_abs: f64,
    /// Exponent; 2 for Caccioppoli.
    pub p: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; 0 for the degenerate `0 / 0`.
    pub ratio: f64,
    pub h: f64,
    pub degenerate: bool,
}

impl LocalEstimateRecord {
    pub fn values(&self) -> Vec<f64> {
        vec![self.probe_x, self.probe_y, self.r, self.lambda_abs, self.p, self.lhs, self.rhs, self.ratio, self.h]
    }

    /// The ball centre is within one probe radius of the boundary.
    pub fn is_boundary(&self, ops: &OperatorSet) -> bool {
        let x = [self.probe_x, self.probe_y];
        ops.space.mesh.charts.iter().any(|c| c.distance(x) < self.r)
    }
}

fn ratio_of(lhs: f64, rhs: f64) -> (f64, bool) {
    if rhs > 0.0 {
        (lhs / rhs, false)
    } else if lhs == 0.0 {
        (0.0, true)
    } else {
        (f64::INFINITY, true)
    }
}

/// Cells whose bounding circle meets `B(center, radius)`.
fn cells_meeting(ops: &OperatorSet, center: [f64; 2], radius: f64) -> Vec<usize> {
    let space = &ops.space;
    (0..space.n_cells())
        .filter(|&c| {
            let g = &space.cell_geom[c];
            let m = [(g[0][0] + g[1][0] + g[2][0]) / 3.0, (g[0][1] + g[1][1] + g[2][1]) / 3.0];
            let rad = g.iter().map(|p| ((p[0] - m[0]).powi(2) + (p[1] - m[1]).powi(2)).sqrt()).fold(0.0, f64::max);
            let d = ((m[0] - center[0]).powi(2) + (m[1] - center[1]).powi(2)).sqrt();
            d <= radius + rad
        })
        .collect()
}

/// Reference-cell points and weights of `Omega ∩ B(center, radius)` within cell `c`.
///
/// Sub-triangles entirely inside keep the full rule, those entirely outside are
/// dropped, and cut ones are split recursively; at the deepest level the rule
/// points are kept when they fall inside the ball.
fn clipped_rule(ops: &OperatorSet, c: usize, rule: &TriangleRule, center: [f64; 2], radius: f64) -> Vec<([f64; 2], f64)> {
    const MAX_DEPTH: usize = 7;
    let space = &ops.space;
    let phys = |xi: [f64; 2]| space.cell_point(c, xi).x;
    let dist = |x: [f64; 2]| ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)).sqrt();
    let mut out = Vec::new();
    let mut stack = vec![([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], 0usize)];
    while let Some((t, depth)) = stack.pop() {
        let mid = |a: [f64; 2], b: [f64; 2]| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        let xs = [phys(t[0]), phys(t[1]), phys(t[2]), phys(mid(t[0], t[1])), phys(mid(t[1], t[2])), phys(mid(t[2], t[0]))];
        let g = [(xs[0][0] + xs[1][0] + xs[2][0]) / 3.0, (xs[0][1] + xs[1][1] + xs[2][1]) / 3.0];
        // the midpoints bound the curvature of the quadratic map
        let spread = xs.iter().map(|x| ((x[0] - g[0]).powi(2) + (x[1] - g[1]).powi(2)).sqrt()).fold(0.0, f64::max);
        let dg = dist(g);
        let inside = dg + 1.05 * spread <= radius;
        let outside = dg - 1.05 * spread > radius;
        if outside {
            continue;
        }
        if inside || depth == MAX_DEPTH {
            let jac = (t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[2][0] - t[0][0]) * (t[1][1] - t[0][1]);
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let xi = [
                    t[0][0] + (t[1][0] - t[0][0]) * p[0] + (t[2][0] - t[0][0]) * p[1],
                    t[0][1] + (t[1][1] - t[0][1]) * p[0] + (t[2][1] - t[0][1]) * p[1],
                ];
                if inside || dist(phys(xi)) <= radius {
                    out.push((xi, w * jac.abs()));
                }
            }
            continue;
        }
        let (a, b, cc) = (t[0], t[1], t[2]);
        let (ab, bc, ca) = (mid(a, b), mid(b, cc), mid(cc, a));
        for s in [[a, ab, ca], [ab, b, bc], [ca, bc, cc], [ab, bc, ca]] {
            stack.push((s, depth + 1));
        }
    }
    out
}

/// `(|Omega ∩ B|, int |u|^p, int |D u|^2)` over `Omega ∩ B(center, radius)`.
fn ball_integrals(ops: &OperatorSet, u: &[Complex64], center: [f64; 2], radius: f64, p: f64) -> [f64; 3] {
    let degree = (p.ceil() as usize + 2).max(6);
    let rule = TriangleRule::of_degree(degree);
    let space = &ops.space;
    let cells = cells_meeting(ops, center, radius);
    let parts: Vec<[f64; 3]> = cells
        .par_iter()
        .map(|&c| {
            let mut acc = [0.0; 3];
            for (xi, w) in clipped_rule(ops, c, &rule, center, radius) {
                let cp = space.cell_point(c, xi);
                let wd = w * cp.det;
                let (v, g) = space.eval_at(u, c, &cp);
                let m2 = v[0].norm_sqr() + v[1].norm_sqr();
                let d01 = (g[0][1] + g[1][0]) * 0.5;
                let strain = g[0][0].norm_sqr() + g[1][1].norm_sqr() + 2.0 * d01.norm_sqr();
                acc[0] += wd;
                acc[1] += wd * m2.powf(0.5 * p);
                acc[2] += wd * strain;
            }
            acc
        })
        .collect();
    parts.iter().fold([0.0; 3], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]])
}

/// Largest load entry on dofs whose basis support meets `B(center, radius)`,
/// relative to the largest entry overall.
pub fn load_overlap(ops: &OperatorSet, load: &[Complex64], center: [f64; 2], radius: f64) -> f64 {
    let scale = load.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let space = &ops.space;
    let mut worst: f64 = 0.0;
    for c in cells_meeting(ops, center, radius) {
        for &n in &space.cell_nodes[c] {
            let nd = &space.node_dofs[n];
            for &d in &nd.dofs[..nd.count] {
                worst = worst.max(load[d].norm());
            }
        }
    }
    worst / scale
}

/// Zero the load on every dof whose basis support meets `B(center, radius)`.
pub fn mask_load(ops: &OperatorSet, load: &mut [Complex64], center: [f64; 2], radius: f64) {
    let space = &ops.space;
    for c in cells_meeting(ops, center, radius) {
        for &n in &space.cell_nodes[c] {
            let nd = &space.node_dofs[n];
            for &d in &nd.dofs[..nd.count] {
                load[d] = Complex64::new(0.0, 0.0);
            }
        }
    }
}

fn check_support(ops: &OperatorSet, load: &[Complex64], center: [f64; 2], radius: f64) -> Result<()> {
    let overlap = load_overlap(ops, load, center, radius);
    if overlap > 1e-14 {
        return Err(Error::SupportViolation(overlap));
    }
    Ok(())
}

/// `int_{B_s ∩ Omega} |D u|^2 <= C (t - s)^-2 int_{B_t ∩ Omega} |u|^2` for the
/// solution `u` of the resolvent problem with load `load`, which must vanish on `B_t`.
pub fn caccioppoli_check(
    ops: &OperatorSet,
    u: &[Complex64],
    load: &[Complex64],
    probe: &BallProbe,
    s: f64,
    t: f64,
    lambda_abs: f64,
) -> Result<LocalEstimateRecord> {
    let r = probe.radius;
    if !(r <= s && s < t && t <= 2.0 * r * (1.0 + 1e-12)) {
        return Err(Error::InvalidProbe(format!("need r <= s < t <= 2r (r = {r}, s = {s}, t = {t})")));
    }
    check_support(ops, load, probe.center, t)?;
    let inner = ball_integrals(ops, u, probe.center, s, 2.0);
    let outer = ball_integrals(ops, u, probe.center, t, 2.0);
    let lhs = inner[2];
    let rhs = outer[1] / (t - s).powi(2);
    let (ratio, degenerate) = ratio_of(lhs, rhs);
    Ok(LocalEstimateRecord {
        estimate: Estimate::Caccioppoli,
        probe_x: probe.center[0],
        probe_y: probe.center[1],
        r,
        lambda_abs,
        p: 2.0,
        lhs,
        rhs,
        ratio,
        h: ops.space.mesh.h,
        degenerate,
    })
}

/// `(mean_{B_r ∩ Omega} |u|^p)^(1/p) <= C (mean_{B_2r ∩ Omega} |u|^2)^(1/2)`,
/// with means over `|Omega ∩ B|`; the outer ball is `B(center, factor r)`.
pub fn reverse_holder_check(
    ops: &OperatorSet,
    u: &[Complex64],
    load: &[Complex64],
    probe: &BallProbe,
    p: f64,
    lambda_abs: f64,
) -> Result<LocalEstimateRecord> {
    if !(p >= 2.0) {
        return Err(Error::InvalidArgument(format!("reverse Hölder exponent {p} < 2")));
    }
    let outer_r = probe.outer_radius();
    check_support(ops, load, probe.center, outer_r)?;
    let inner = ball_integrals(ops, u, probe.center, probe.radius, p);
    let outer = ball_integrals(ops, u, probe.center, outer_r, 2.0);
    if inner[0] <= 0.0 || outer[0] <= 0.0 {
        return Err(Error::InvalidProbe(format!("probe at {:?} misses the domain", probe.center)));
    }
    let lhs = (inner[1] / inner[0]).powf(1.0 / p);
    let rhs = (outer[1] / outer[0]).sqrt();
    let (ratio, degenerate) = ratio_of(lhs, rhs);
    Ok(LocalEstimateRecord {
        estimate: Estimate::ReverseHolder,
        probe_x: probe.center[0],
        probe_y: probe.center[1],
        r: probe.radius,
        lambda_abs,
        p,
        lhs,
        rhs,
        ratio,
        h: ops.space.mesh.h,
        degenerate,
    })
}

/// Grid of probes for a constant study.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeStudy {
    pub centers: Vec<[f64; 2]>,
    pub radii: Vec<f64>,
    /// Resolvent parameters on the ray `arg lambda = lambda_arg`.
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub lambda_arg: f64,
    pub exponents: Vec<f64>,
}

impl ProbeStudy {
    /// Two interior and two boundary probes on the unit disk, radii in `[0.08, 0.16]`.
    pub fn unit_disk() -> ProbeStudy {
        ProbeStudy {
            centers: vec![[0.0, 0.0], [-0.35, 0.25], [1.0, 0.0], [0.0, -1.0]],
            radii: vec![0.08, 0.12, 0.16],
            lambdas: vec![1.0, 10.0, 100.0],
            lambda_arg: 0.0,
            exponents: vec![3.0, 4.0, 6.0],
        }
    }
}

/// Largest ratios per estimate and probe family.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct StudyConstants {
    pub caccioppoli_interior: f64,
    pub caccioppoli_boundary: f64,
    pub reverse_holder_interior: f64,
    pub reverse_holder_boundary: f64,
}

impl StudyConstants {
    pub fn of(ops: &OperatorSet, records: &[LocalEstimateRecord]) -> StudyConstants {
        let mut c = StudyConstants::default();
        for r in records.iter().filter(|r| !r.degenerate) {
            let slot = match (r.estimate, r.is_boundary(ops)) {
                (Estimate::Caccioppoli, false) => &mut c.caccioppoli_interior,
                (Estimate::Caccioppoli, true) => &mut c.caccioppoli_boundary,
                (Estimate::ReverseHolder, false) => &mut c.reverse_holder_interior,
                (Estimate::ReverseHolder, true) => &mut c.reverse_holder_boundary,
            };
            *slot = slot.max(r.ratio);
        }
        c
    }

    pub fn values(&self) -> [f64; 4] {
        [self.caccioppoli_interior, self.caccioppoli_boundary, self.reverse_holder_interior, self.reverse_holder_boundary]
    }
}

/// Run every probe of the study: data `F` masked on `B(center, 3r)`, resolvent
/// solve, then Caccioppoli with `(s, t) = (r, 2r)` and reverse Hölder for each exponent.
pub fn run_probe_study(
    ops: &OperatorSet,
    study: &ProbeStudy,
    field: &(dyn Fn([f64; 2]) -> [f64; 2] + Sync),
) -> Result<Vec<LocalEstimateRecord>> {
    let domain = ops.space.mesh.domain;
    let base: Vec<Complex64> = crate::discretization::load_vector(&ops.space, field)
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect();
    let mut jobs = Vec::new();
    for c in &study.centers {
        for &r in &study.radii {
            for &l in &study.lambdas {
                jobs.push((BallProbe::new(&domain, *c, r, 2)?, l));
            }
        }
    }
    let chunks: Vec<Vec<LocalEstimateRecord>> = jobs
        .par_iter()
        .map(|(probe, l)| {
            let mut load = base.clone();
            mask_load(ops, &mut load, probe.center, 3.0 * probe.radius);
            let lambda = Complex64::from_polar(*l, study.lambda_arg);
            let (u, _, _) = solve_resolvent(ops, lambda, &load)?;
            let mut out = vec![caccioppoli_check(ops, &u, &load, probe, probe.radius, 2.0 * probe.radius, *l)?];
            for &p in &study.exponents {
                out.push(reverse_holder_check(ops, &u, &load, probe, p, *l)?);
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{BoundaryMode, SlipCoefficient};
    use crate::geometry::DomainSpec;

    const DISK: DomainSpec = DomainSpec::Disk { radius: 1.0 };

    fn ops(h: f64) -> OperatorSet {
        OperatorSet::build(&DISK, h, &SlipCoefficient::constant(1.0), BoundaryMode::Slip).unwrap()
    }

    fn cplx(v: Vec<f64>) -> Vec<Complex64> {
        v.into_iter().map(|x| Complex64::new(x, 0.0)).collect()
    }

    #[test]
    fn constants_and_rotations() {
        let o = ops(0.1);
        let zero = vec![Complex64::new(0.0, 0.0); o.space.n_dofs];
        let probe = BallProbe::new(&DISK, [0.2, -0.1], 0.15, 2).unwrap();
        let c = cplx(o.space.interpolate(|_| [0.3, -0.4]));
        for p in [3.0, 4.0, 6.0] {
            let r = reverse_holder_check(&o, &c, &zero, &probe, p, 1.0).unwrap();
            assert!((r.ratio - 1.0).abs() < 1e-12, "{}", r.ratio);
        }
        let rot = cplx(o.space.interpolate(|x| [-x[1], x[0]]));
        let r = caccioppoli_check(&o, &rot, &zero, &probe, 0.15, 0.3, 1.0).unwrap();
        assert!(r.lhs < 1e-20 && r.rhs > 0.0);
        let r = caccioppoli_check(&o, &zero, &zero, &probe, 0.15, 0.3, 1.0).unwrap();
        assert!(r.degenerate && r.ratio == 0.0);
    }

    #[test]
    fn clipped_area_is_accurate() {
        let o = ops(0.1);
        let u = cplx(o.space.interpolate(|_| [1.0, 0.0]));
        // interior disk and a ball centred on the boundary circle
        let a = ball_integrals(&o, &u, [0.1, 0.0], 0.2, 2.0);
        assert!((a[0] / (std::f64::consts::PI * 0.04) - 1.0).abs() < 1e-4, "{}", a[0]);
        let (rho, rr) = (0.2f64, 1.0f64);
        // lens area of two circles with centre distance rr
        let lens = rho * rho * (rho / (2.0 * rr)).acos() + rr * rr * (1.0 - rho * rho / (2.0 * rr * rr)).acos()
            - 0.5 * ((-rr + rho + rr) * (rr + rho - rr) * (rr - rho + rr) * (rr + rho + rr)).sqrt();
        let b = ball_integrals(&o, &u, [1.0, 0.0], rho, 2.0);
        assert!((b[0] / lens - 1.0).abs() < 1e-2, "{} {lens}", b[0]);
        // larger balls hold at least the inner mass
        let c = ball_integrals(&o, &u, [1.0, 0.0], 2.0 * rho, 2.0);
        assert!(c[1] >= b[1]);
    }

    #[test]
    fn forcing_inside_the_ball_is_rejected() {
        let o = ops(0.2);
        let load = cplx(crate::discretization::load_vector(&o.space, &|x| [1.0 + x[1], 0.5 - x[0]]));
        let probe = BallProbe::new(&DISK, [0.0, 0.0], 0.1, 2).unwrap();
        let (u, _, _) = solve_resolvent(&o, Complex64::new(1.0, 0.0), &load).unwrap();
        assert!(matches!(caccioppoli_check(&o, &u, &load, &probe, 0.1, 0.2, 1.0), Err(Error::SupportViolation(_))));
        assert!(matches!(reverse_holder_check(&o, &u, &load, &probe, 4.0, 1.0), Err(Error::SupportViolation(_))));
        let mut masked = load.clone();
        mask_load(&o, &mut masked, probe.center, 0.3);
        assert_eq!(load_overlap(&o, &masked, probe.center, 0.2), 0.0);
        assert!(caccioppoli_check(&o, &u, &masked, &probe, 0.1, 0.25, 1.0).is_err());
    }

    #[test]
    fn ratios_are_scale_invariant_and_bounded() {
        let o = ops(0.1);
        let study = ProbeStudy { radii: vec![0.12], lambdas: vec![10.0], ..ProbeStudy::unit_disk() };
        let field = |x: [f64; 2]| [1.0 + x[1], 0.5 - x[0]];
        let recs = run_probe_study(&o, &study, &field).unwrap();
        assert_eq!(recs.len(), 4 * 4);
        let scaled = |x: [f64; 2]| {
            let f = field(x);
            [10.0 * f[0], 10.0 * f[1]]
        };
        let recs10 = run_probe_study(&o, &study, &scaled).unwrap();
        for (a, b) in recs.iter().zip(&recs10) {
            assert!((a.ratio - b.ratio).abs() <= 1e-12 * a.ratio.max(1.0), "{} {}", a.ratio, b.ratio);
            assert!(a.ratio.is_finite() && !a.degenerate);
        }
        let c = StudyConstants::of(&o, &recs);
        assert!(c.values().iter().all(|v| *v > 0.0 && *v < 1e3), "{c:?}");
    }
}
