use super::eigen::{eigensolve_with, EigenDecomposition, EigenOptions};
use crate::discretization::{OperatorSet, SlipCoefficient};
use crate::error::{Error, Result};
use crate::fit::fit_loglog;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// Eigenvalues below this fraction of the largest computed one count as zero.
const ZERO_EIGENVALUE: f64 = 1e-10;

fn is_zero(eig: &EigenDecomposition, mu: f64) -> bool {
    mu.abs() <= ZERO_EIGENVALUE * eig.values.last().copied().unwrap_or(1.0).abs().max(1.0)
}

fn power(eig: &EigenDecomposition, mu: f64, beta: f64) -> Result<f64> {
    if is_zero(eig, mu) {
        return match beta {
            b if b == 0.0 => Ok(1.0),
            b if b > 0.0 => Ok(0.0),
            _ => Err(Error::UndefinedPower(format!("mu = {mu:e} with beta = {beta}"))),
        };
    }
    Ok(mu.powf(beta))
}

fn expand_checked(eig: &EigenDecomposition, u: &[f64]) -> Result<Vec<f64>> {
    let (c, leak) = eig.expand(u);
    if leak > 1e-6 {
        return Err(Error::SpanDeficiency(leak));
    }
    Ok(c)
}

/// `A^beta u = sum_i mu_i^beta c_i phi_i` for `u` in the computed span, `beta in [-1, 1]`.
pub fn fractional_apply(eig: &EigenDecomposition, beta: f64, u: &[f64]) -> Result<Vec<f64>> {
    if !(-1.0..=1.0).contains(&beta) {
        return Err(Error::InvalidArgument(format!("beta = {beta} outside [-1, 1]")));
    }
    let c = expand_checked(eig, u)?;
    let scaled = c
        .iter()
        .zip(&eig.values)
        .map(|(ci, mu)| Ok(ci * power(eig, *mu, beta)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(eig.combine(&scaled))
}

/// `count` random fields in the span, with standard normal coefficients.
pub fn random_span_samples(eig: &EigenDecomposition, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let c: Vec<f64> = (0..eig.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
            eig.combine(&c)
        })
        .collect()
}

/// Extreme ratios of `||A^{1/2} u||^2 + ||u||^2` to `||u||_{H1}^2` over samples.
#[derive(Clone, Copy, Debug)]
pub struct HalfPowerEquivalence {
    pub c1: f64,
    pub c2: f64,
    /// Largest `|‖A^{1/2}u‖² - uᵀ(K+B)u|` relative to `max(uᵀ(K+B)u, ‖u‖²)`.
    pub parseval_error: f64,
}

impl HalfPowerEquivalence {
    pub fn spread(&self) -> f64 {
        self.c2 / self.c1
    }
}

pub fn halfpower_equivalence(
    eig: &EigenDecomposition,
    ops: &OperatorSet,
    samples: &[Vec<f64>],
) -> Result<HalfPowerEquivalence> {
    if samples.len() < 20 {
        return Err(Error::InvalidArgument(format!("{} sample fields; need at least 20", samples.len())));
    }
    let form = ops.stokes_form();
    let mut out = HalfPowerEquivalence { c1: f64::INFINITY, c2: 0.0, parseval_error: 0.0 };
    for u in samples {
        let half = fractional_apply(eig, 0.5, u)?;
        let a_half = ops.mass.energy(&half);
        let quad = form.energy(u);
        let l2 = ops.mass.energy(u);
        out.parseval_error = out.parseval_error.max((a_half - quad).abs() / quad.max(l2));
        let ratio = (a_half + l2) / ops.h1_norm_sq(u);
        out.c1 = out.c1.min(ratio);
        out.c2 = out.c2.max(ratio);
    }
    Ok(out)
}

/// `max ||A^{is} u||_M / ||u||_M` over the eigenvectors and the given span samples.
pub fn imaginary_power_norm(eig: &EigenDecomposition, s: f64, samples: &[Vec<f64>]) -> Result<f64> {
    if !(s.abs() <= 10.0) {
        return Err(Error::InvalidArgument(format!("|s| = {} > 10", s.abs())));
    }
    let mult = eig
        .values
        .iter()
        .map(|&mu| {
            if is_zero(eig, mu) || mu < 0.0 {
                Err(Error::UndefinedPower(format!("imaginary power of mu = {mu:e}")))
            } else {
                Ok(Complex64::from_polar(1.0, s * mu.ln()))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for u in eig.vectors.iter().chain(samples) {
        let c = expand_checked(eig, u)?;
        let mut w = vec![Complex64::new(0.0, 0.0); u.len()];
        for ((ci, m), phi) in c.iter().zip(&mult).zip(&eig.vectors) {
            let z = m * ci;
            for (wi, p) in w.iter_mut().zip(phi) {
                *wi += z * p;
            }
        }
        worst = worst.max(eig.mass().energy(&w).sqrt() / eig.mass().energy(u).sqrt());
    }
    Ok(worst)
}

pub const EIG_COLUMNS: [&str; 5] = ["alpha", "index", "mu", "mu_dirichlet", "gap"];

/// Eigenvalues over an ascending `alpha` grid with the no-slip row.
#[derive(Clone, Debug)]
pub struct EigAlphaTable {
    pub alphas: Vec<f64>,
    /// `mu[a][i]`: eigenvalue `i` at `alphas[a]`.
    pub mu: Vec<Vec<f64>>,
    pub mu_dirichlet: Vec<f64>,
}

impl EigAlphaTable {
    pub fn rows(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for (a, row) in self.alphas.iter().zip(&self.mu) {
            for (i, (m, md)) in row.iter().zip(&self.mu_dirichlet).enumerate() {
                out.push(vec![*a, (i + 1) as f64, *m, *md, md - m]);
            }
        }
        out
    }

    /// Largest decrease of `mu_i` between consecutive grid values (0 when monotone).
    pub fn monotonicity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for w in self.mu.windows(2) {
            for (a, b) in w[0].iter().zip(&w[1]) {
                worst = worst.max(a - b);
            }
        }
        worst
    }

    /// Largest increase of the gap `mu_i^D - mu_i` between consecutive grid values.
    pub fn gap_growth(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for w in self.mu.windows(2) {
            for ((a, b), d) in w[0].iter().zip(&w[1]).zip(&self.mu_dirichlet) {
                worst = worst.max((d - b) - (d - a));
            }
        }
        worst
    }

    pub fn relative_gap(&self, index: usize) -> f64 {
        let md = self.mu_dirichlet[index];
        (md - self.mu.last().expect("nonempty grid")[index]).abs() / md
    }

    /// Slope of `log(mu_i^D - mu_i)` against `log alpha` over the largest decade.
    pub fn top_decade_slope(&self, index: usize) -> Result<f64> {
        let top = *self.alphas.last().expect("nonempty grid");
        let sel: Vec<usize> = (0..self.alphas.len()).filter(|&a| self.alphas[a] >= top / 10.0 * (1.0 - 1e-12)).collect();
        let x: Vec<f64> = sel.iter().map(|&a| self.alphas[a]).collect();
        let y: Vec<f64> = sel.iter().map(|&a| self.mu_dirichlet[index] - self.mu[a][index]).collect();
        Ok(fit_loglog(&x, &y)?.slope)
    }
}

/// `mu_i(alpha)` for constant `alpha` over `alphas`, plus the no-slip eigenvalues
/// from `dirichlet` (assembled on the no-slip space of the same mesh).
pub fn eig_alpha_table(
    ops: &OperatorSet,
    dirichlet: &OperatorSet,
    alphas: &[f64],
    k: usize,
) -> Result<EigAlphaTable> {
    if alphas.windows(2).any(|w| !(w[0] < w[1])) || alphas.is_empty() {
        return Err(Error::InvalidArgument("alpha grid must be strictly ascending".into()));
    }
    let lo = alphas.iter().cloned().find(|a| *a > 0.0).unwrap_or(0.0);
    let hi = *alphas.last().unwrap();
    if !(lo > 0.0) || hi / lo < 1e4 * (1.0 - 1e-12) {
        return Err(Error::InvalidArgument("alpha grid must span at least 4 decades".into()));
    }
    let opt = EigenOptions::new(k);
    let mu = alphas
        .par_iter()
        .map(|&a| {
            let o = ops.with_alpha(&SlipCoefficient::constant(a))?;
            Ok(eigensolve_with(&o, &opt).map_err(|e| e.in_stage(format!("eigensolve alpha = {a}")))?.values)
        })
        .collect::<Result<Vec<_>>>()?;
    let mu_dirichlet = eigensolve_with(dirichlet, &opt).map_err(|e| e.in_stage("dirichlet eigensolve"))?.values;
    Ok(EigAlphaTable { alphas: alphas.to_vec(), mu, mu_dirichlet })
}
