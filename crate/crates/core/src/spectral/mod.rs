//! Eigenpairs of the discrete slip-Stokes operator on divergence-free fields
//! and the functional calculus built on them.

mod calculus;
mod eigen;

pub use calculus::{
    eig_alpha_table, fractional_apply, halfpower_equivalence, imaginary_power_norm, random_span_samples,
    EigAlphaTable, HalfPowerEquivalence, EIG_COLUMNS,
};
pub use eigen::{dense_eigenvalues, eigensolve, eigensolve_with, EigenDecomposition, EigenOptions};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{BoundaryMode, LerayProjector, OperatorSet, SlipCoefficient};
    use crate::error::Error;
    use crate::geometry::DomainSpec;
    use crate::linalg::axpy;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    const DISK: DomainSpec = DomainSpec::Disk { radius: 1.0 };

    fn ops(dom: DomainSpec, h: f64, alpha: f64) -> OperatorSet {
        OperatorSet::build(&dom, h, &SlipCoefficient::constant(alpha), BoundaryMode::Slip).unwrap()
    }

    #[test]
    fn matches_dense_oracle_on_coarse_mesh() {
        for (dom, h) in [(DISK, 0.35), (DomainSpec::Annulus { inner: 0.5, outer: 1.0 }, 0.2)] {
            let o = ops(dom, h, 2.0);
            assert!(o.space.n_dofs <= 600, "{}", o.space.n_dofs);
            let eig = eigensolve(&o, 8).unwrap();
            let dense = dense_eigenvalues(&o, 8).unwrap();
            for (a, b) in eig.values.iter().zip(&dense) {
                assert!((a - b).abs() <= 1e-8 * b.abs(), "{a} vs {b}");
            }
            assert!(eig.residuals.iter().all(|&r| r <= 1e-8));
            assert!(eig.orthonormality_defect() <= 1e-10);
        }
    }

    #[test]
    fn zero_alpha_disk_has_rotation_kernel() {
        let o = ops(DISK, 0.25, 0.0);
        let eig = eigensolve(&o, 3).unwrap();
        assert!(eig.values[0].abs() < 1e-10, "{}", eig.values[0]);
        assert!(eig.values[1] > 1.0);
        let r = o.space.rigid_mode();
        let (c, leak) = eig.expand(&r);
        let rn = o.mass.energy(&r).sqrt();
        assert!(leak < 1e-8);
        assert!((c[0].abs() - rn).abs() < 1e-8 * rn);
    }

    #[test]
    fn repeated_solves_are_identical() {
        let o = ops(DISK, 0.3, 1.0);
        let a = eigensolve(&o, 5).unwrap();
        let b = eigensolve(&o, 5).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.vectors, b.vectors);
    }

    #[test]
    fn rayleigh_quotients_bound_the_ground_state() {
        let o = ops(DISK, 0.3, 1.0);
        let eig = eigensolve(&o, 2).unwrap();
        let leray = LerayProjector::new(&o).unwrap();
        let form = o.stokes_form();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let z: Vec<f64> = (0..o.space.n_dofs).map(|_| StandardNormal.sample(&mut rng)).collect();
            let (u, _) = leray.project(&z).unwrap();
            let q = form.energy(&u) / o.mass.energy(&u);
            assert!(q >= eig.values[0] - 1e-8);
        }
    }

    #[test]
    fn eigenvalues_grow_with_alpha_and_approach_no_slip() {
        let o = ops(DISK, 0.25, 1.0);
        let d = OperatorSet::build(&DISK, 0.25, &SlipCoefficient::constant(0.0), BoundaryMode::NoSlip).unwrap();
        let table = eig_alpha_table(&o, &d, &[1e-2, 1.0, 1e2, 1e4, 1e5, 1e6], 3).unwrap();
        assert!(table.monotonicity_defect() <= 1e-10);
        assert!(table.gap_growth() <= 1e-10);
        assert!(table.relative_gap(0) <= 1e-2);
        assert!(table.top_decade_slope(0).unwrap() <= -0.9);
        assert_eq!(table.rows().len(), 18);
        assert!(eig_alpha_table(&o, &d, &[1.0, 10.0], 3).is_err());
    }

    #[test]
    fn coercivity_increases_with_alpha() {
        let o = ops(DomainSpec::Annulus { inner: 0.5, outer: 1.0 }, 0.2, 0.0);
        let mut prev = -1.0;
        for a in [0.0, 0.5, 2.0, 8.0] {
            let mu = dense_eigenvalues(&o.with_alpha(&SlipCoefficient::constant(a)).unwrap(), 1).unwrap()[0];
            if a > 0.0 {
                assert!(mu > 0.0);
            }
            assert!(mu > prev);
            prev = mu;
        }
    }

    #[test]
    fn fractional_powers_compose() {
        let o = ops(DISK, 0.3, 1.0);
        let eig = eigensolve(&o, 6).unwrap();
        let samples = random_span_samples(&eig, 5, 3);
        for u in &samples {
            let id = fractional_apply(&eig, 0.0, u).unwrap();
            let half = fractional_apply(&eig, 0.5, u).unwrap();
            let twice = fractional_apply(&eig, 0.5, &half).unwrap();
            let once = fractional_apply(&eig, 1.0, u).unwrap();
            let un = o.mass.energy(u).sqrt();
            let mut d0 = id.clone();
            axpy(-1.0, u, &mut d0);
            assert!(o.mass.energy(&d0).sqrt() <= 1e-12 * un);
            let mut d1 = twice.clone();
            axpy(-1.0, &once, &mut d1);
            assert!(o.mass.energy(&d1).sqrt() <= 1e-10 * o.mass.energy(&once).sqrt());
        }
        let phi = &eig.vectors[0];
        let a1 = fractional_apply(&eig, 1.0, phi).unwrap();
        for (x, p) in a1.iter().zip(phi) {
            assert!((x - eig.values[0] * p).abs() < 1e-10);
        }
        assert!(fractional_apply(&eig, 1.5, phi).is_err());
        let outside = o.space.interpolate(|x| [1.0 + x[0], x[1] * x[1]]);
        assert!(matches!(fractional_apply(&eig, 0.5, &outside), Err(Error::SpanDeficiency(_))));
    }

    #[test]
    fn negative_powers_of_the_kernel_are_rejected() {
        let o = ops(DISK, 0.3, 0.0);
        let eig = eigensolve(&o, 3).unwrap();
        let r = o.space.rigid_mode();
        assert!(fractional_apply(&eig, 0.5, &r).unwrap().iter().all(|x| x.abs() < 1e-6));
        assert!(matches!(fractional_apply(&eig, -0.5, &r), Err(Error::UndefinedPower(_))));
        assert!(imaginary_power_norm(&eig, 1.0, &[]).is_err());
    }

    #[test]
    fn half_power_norm_is_the_form() {
        let o = ops(DISK, 0.3, 1.0);
        let eig = eigensolve(&o, 10).unwrap();
        let samples = random_span_samples(&eig, 20, 5);
        let h = halfpower_equivalence(&eig, &o, &samples).unwrap();
        assert!(h.parseval_error <= 1e-10, "{}", h.parseval_error);
        assert!(h.c1 > 0.0 && h.c1 <= h.c2);
        assert!(halfpower_equivalence(&eig, &o, &samples[..5]).is_err());
    }

    #[test]
    fn imaginary_powers_are_unitary() {
        let o = ops(DISK, 0.3, 1.0);
        let eig = eigensolve(&o, 8).unwrap();
        let samples = random_span_samples(&eig, 10, 9);
        for s in [0.0, 1.0, -1.0, 5.0, -5.0] {
            let n = imaginary_power_norm(&eig, s, &samples).unwrap();
            assert!((n - 1.0).abs() <= 1e-10, "s = {s}: {n}");
        }
        assert!(imaginary_power_norm(&eig, 11.0, &samples).is_err());
    }
}
