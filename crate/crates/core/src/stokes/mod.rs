//! Steady and resolvent solves of the slip-Stokes system and its no-slip twin.

mod manufactured;
mod scan;
mod solve;

pub use manufactured::{slip_data_load, ManufacturedCase, ManufacturedErrors};
pub use scan::{
    inverse_sqrt_apply, resolvent_scan, rough_forcing, vortex_field, RaySummary, ScanResult, ScanRow, SCAN_COLUMNS,
};
pub use solve::{
    remove_rigid_component, solve_dirichlet, solve_dirichlet_steady, solve_resolvent, solve_steady, KernelPolicy,
    ResolventSample,
    SteadySolution, StokesSystem,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{assemble, load_vector, BoundaryMode, FunctionSpace, OperatorSet, SlipCoefficient};
    use crate::error::Error;
    use crate::geometry::{boundary_frame, build_mesh, DomainSpec};
    use crate::linalg::to_complex;
    use num_complex::Complex64;

    fn setup(dom: DomainSpec, h: f64, alpha: f64, mode: BoundaryMode) -> OperatorSet {
        let mesh = build_mesh(&dom, h).unwrap();
        let frame = boundary_frame(&mesh, 4);
        let space = FunctionSpace::new(&mesh, mode);
        assemble(&space, &frame, &SlipCoefficient::constant(alpha)).unwrap()
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let ops = setup(DomainSpec::Disk { radius: 1.0 }, 0.25, 1.0, BoundaryMode::Slip);
        let s = solve_steady(&ops, &vec![0.0; ops.space.n_dofs], None, KernelPolicy::Reject).unwrap();
        assert!(s.u.iter().chain(&s.p).all(|v| *v == 0.0));
        let (u, _, _) = solve_resolvent(&ops, Complex64::new(3.0, 4.0), &vec![Complex64::new(0.0, 0.0); ops.space.n_dofs]).unwrap();
        assert!(u.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn zero_alpha_without_filter_is_singular() {
        let ops = setup(DomainSpec::Disk { radius: 1.0 }, 0.25, 0.0, BoundaryMode::Slip);
        let f = load_vector(&ops.space, &|x| [-x[1], x[0]]);
        assert!(matches!(solve_steady(&ops, &f, None, KernelPolicy::Reject), Err(Error::SingularOperator(_))));
        let s = solve_steady(&ops, &f, None, KernelPolicy::Filter).unwrap();
        // pure rotation data is entirely kernel
        assert!(s.kernel_projection > 0.1);
        assert!(ops.l2_norm(&s.u) < 1e-8);
    }

    #[test]
    fn rotation_forcing_matches_radial_closed_form() {
        // -lap u + grad pi = (-y, x), slip on r = R: u = U(r) e_theta with
        // U = -r^3/8 + (R^2/8 + R/(4 alpha)) r and pi = 0
        let (rad, alpha) = (1.0, 2.0);
        let ops = setup(DomainSpec::Disk { radius: rad }, 0.1, alpha, BoundaryMode::Slip);
        let f = load_vector(&ops.space, &|x| [-x[1], x[0]]);
        let s = solve_steady(&ops, &f, None, KernelPolicy::Reject).unwrap();
        let a = rad * rad / 8.0 + rad / (4.0 * alpha);
        let exact = ops.space.interpolate(|x| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            let c = -r2 / 8.0 + a;
            [-x[1] * c, x[0] * c]
        });
        let d: Vec<f64> = s.u.iter().zip(&exact).map(|(a, b)| a - b).collect();
        assert!(ops.l2_norm(&d) < 1e-4 * ops.l2_norm(&exact), "{}", ops.l2_norm(&d));
        assert!(s.residual < 1e-10 && s.divergence < 1e-10);
    }

    #[test]
    fn conjugate_lambda_gives_conjugate_solution() {
        let ops = setup(DomainSpec::Annulus { inner: 0.5, outer: 1.0 }, 0.2, 1.0, BoundaryMode::Slip);
        let f = to_complex(&load_vector(&ops.space, &|x| [x[1] * x[1], 1.0 - x[0]]));
        let lam = Complex64::new(2.0, 7.0);
        let (u1, _, _) = solve_resolvent(&ops, lam, &f).unwrap();
        let (u2, _, _) = solve_resolvent(&ops, lam.conj(), &f).unwrap();
        let scale = u1.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        for (a, b) in u1.iter().zip(&u2) {
            assert!((a - b.conj()).norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn discrete_energy_identity_for_real_lambda() {
        let ops = setup(DomainSpec::Disk { radius: 1.0 }, 0.2, 3.0, BoundaryMode::Slip);
        let fr = load_vector(&ops.space, &|x| [x[1] * x[1], 1.0 - x[0]]);
        let f = to_complex(&fr);
        let lam = 5.0;
        let (u, _, _) = solve_resolvent(&ops, Complex64::new(lam, 0.0), &f).unwrap();
        let lhs = lam * ops.l2_norm(&u).powi(2) + 2.0 * ops.strain_norm(&u).powi(2) + ops.friction(&u);
        let rhs: f64 = f.iter().zip(&u).map(|(a, b)| (a * b.conj()).re).sum();
        assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs(), "{lhs} {rhs}");
    }

    #[test]
    fn dirichlet_poiseuille_is_exact() {
        let (l, h) = (2.0, 1.0);
        let ops = setup(DomainSpec::Channel { length: l, height: h }, 0.25, 0.0, BoundaryMode::NoSlip);
        let f = load_vector(&ops.space, &|_| [1.0, 0.0]);
        let (u, p) = solve_dirichlet_steady(&ops, &f).unwrap();
        let exact = ops.space.interpolate(|x| [x[1] * (h - x[1]) / 2.0, 0.0]);
        let d: Vec<f64> = u.iter().zip(&exact).map(|(a, b)| a - b).collect();
        assert!(ops.l2_norm(&d) < 1e-12);
        assert!(ops.pressure_norm(&p) < 1e-11);
    }

    #[test]
    fn slip_poiseuille_and_compliance_domination() {
        let (l, h) = (2.0, 1.0);
        let dom = DomainSpec::Channel { length: l, height: h };
        let d_ops = setup(dom, 0.25, 0.0, BoundaryMode::NoSlip);
        let fd = load_vector(&d_ops.space, &|_| [1.0, 0.0]);
        let (ud, _) = solve_dirichlet_steady(&d_ops, &fd).unwrap();
        let cd: f64 = fd.iter().zip(&ud).map(|(a, b)| a * b).sum();
        for alpha in [0.5, 4.0, 100.0] {
            let ops = setup(dom, 0.25, alpha, BoundaryMode::Slip);
            let f = load_vector(&ops.space, &|_| [1.0, 0.0]);
            let s = solve_steady(&ops, &f, None, KernelPolicy::Reject).unwrap();
            let c = h / (2.0 * alpha);
            let exact = ops.space.interpolate(|x| [x[1] * (h - x[1]) / 2.0 + c, 0.0]);
            let d: Vec<f64> = s.u.iter().zip(&exact).map(|(a, b)| a - b).collect();
            assert!(ops.l2_norm(&d) < 1e-11 * (1.0 + c));
            let cs: f64 = f.iter().zip(&s.u).map(|(a, b)| a * b).sum();
            assert!(cd <= cs);
        }
    }

    #[test]
    fn scan_of_smooth_data_decays_like_one_over_lambda() {
        let ops = setup(DomainSpec::Disk { radius: 1.0 }, 0.25, 1.0, BoundaryMode::Slip);
        let f = vortex_field(&ops, [0.0, 0.0], 0.5);
        let mags = crate::fit::geometric_grid(1e3, 1e6, 4);
        let s = resolvent_scan(&ops, &[0.0, std::f64::consts::FRAC_PI_2], &mags, &f).unwrap();
        assert_eq!(s.rows.len(), 8);
        for r in &s.rays {
            assert!((r.slope_u + 1.0).abs() < 0.02, "{r:?}");
        }
        assert!(s.constant <= 1.0 + 1e-12, "{}", s.constant);
        assert!(matches!(resolvent_scan(&ops, &[0.0], &[1.0, 10.0], &f), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn shear_manufactured_case_is_reproduced() {
        let case = ManufacturedCase::channel_shear(2.0, 1.0);
        let ops = setup(case.domain, 0.25, 1.0, BoundaryMode::Slip);
        let (f, g) = case.loads(&ops, 0.0);
        let s = solve_steady(&ops, &f, Some(&g), KernelPolicy::Reject).unwrap();
        let e = case.errors(&ops, &s.u, &s.p);
        assert!(e.velocity_l2 < 1e-11 && e.pressure_l2 < 1e-10, "{e:?}");
    }
}
