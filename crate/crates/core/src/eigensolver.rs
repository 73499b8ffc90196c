//! Pinned-pinned eigenproblem (p y″)″ − g y = λ ρ y, solved by Galerkin projection onto sin(kx).

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::coefficients::CoefficientProfile;
use crate::error::{Error, Result};
use crate::grid::Grid;

pub const TOL_EIG: f64 = 1e-8;

/// The operator (p y″)″ − g y with weight ρ on a given profile.
#[derive(Debug, Clone)]
pub struct EigenProblem<'a> {
    pub profile: &'a CoefficientProfile,
    pub potential: Vec<f64>,
}

impl<'a> EigenProblem<'a> {
    pub fn new(profile: &'a CoefficientProfile, potential: Vec<f64>) -> Result<Self> {
        if potential.len() != profile.grid.len() {
            return Err(Error::InvalidGrid(format!(
                "potential has {} samples, profile grid has {}",
                potential.len(),
                profile.grid.len()
            )));
        }
        Ok(Self { profile, potential })
    }

    pub fn unperturbed(profile: &'a CoefficientProfile) -> Self {
        Self { profile, potential: vec![0.0; profile.grid.len()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.profile.grid
    }
}

/// Number of sine modes used for `j_count` eigenpairs on a grid with `n_x` subintervals.
pub fn default_basis_size(n_x: usize, j_count: usize) -> usize {
    (2 * j_count + 32).max(64).min(n_x / 2)
}

/// Galerkin stiffness and mass matrices in the basis sin(kx), k = 1..K.
#[derive(Debug, Clone)]
pub struct GalerkinMatrices {
    pub stiffness: DMatrix<f64>,
    pub mass: DMatrix<f64>,
}

/// Trapezoid cosine moments Σ_i w_i f_i cos(n x_i) for n = 0..=n_max.
fn cosine_moments(grid: &Grid, f: &[f64], n_max: usize) -> Vec<f64> {
    let w = grid.weights();
    let x = grid.x();
    (0..=n_max)
        .map(|n| {
            let nf = n as f64;
            (0..f.len()).map(|i| w[i] * f[i] * (nf * x[i]).cos()).sum()
        })
        .collect()
}

/// Gram matrix ∫ f sin(kx) sin(mx) by trapezoid quadrature, k, m = 1..K.
pub fn weighted_sine_gram(grid: &Grid, f: &[f64], k: usize) -> DMatrix<f64> {
    let c = cosine_moments(grid, f, 2 * k);
    DMatrix::from_fn(k, k, |a, b| {
        let (ka, kb) = (a + 1, b + 1);
        0.5 * (c[ka.abs_diff(kb)] - c[ka + kb])
    })
}

pub fn assemble(problem: &EigenProblem, k: usize) -> Result<GalerkinMatrices> {
    let prof = problem.profile;
    if let Some(index) = prof.rho.iter().position(|&r| !(r > 0.0)) {
        return Err(Error::SingularMass { index });
    }
    if k == 0 || k >= prof.n_x() {
        return Err(Error::InvalidParameter(format!("basis size {k} must lie in 1..{}", prof.n_x())));
    }
    let p = weighted_sine_gram(&prof.grid, &prof.p, k);
    let g = weighted_sine_gram(&prof.grid, &problem.potential, k);
    let mass = weighted_sine_gram(&prof.grid, &prof.rho, k);
    let stiffness = DMatrix::from_fn(k, k, |a, b| {
        let ka = ((a + 1) * (a + 1)) as f64;
        let kb = ((b + 1) * (b + 1)) as f64;
        ka * kb * p[(a, b)] - g[(a, b)]
    });
    Ok(GalerkinMatrices { stiffness, mass })
}

/// Lowest eigenpairs with ρ-orthonormal eigenfunctions.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub lambdas: Vec<f64>,
    pub mus: Vec<Complex64>,
    /// Sine coefficients of each eigenfunction (column j ↔ ψ_{j+1}).
    pub coefficients: DMatrix<f64>,
    /// Grid samples of each eigenfunction.
    pub eigenfunctions: Vec<Vec<f64>>,
    pub gap: f64,
    pub shift_m: f64,
    pub basis_size: usize,
    pub residuals: Vec<f64>,
}

pub fn mu_of(lambda: f64) -> Complex64 {
    if lambda < 0.0 {
        Complex64::new(0.0, (-lambda).sqrt())
    } else {
        Complex64::new(lambda.sqrt(), 0.0)
    }
}

pub fn solve_spectrum(problem: &EigenProblem, j_count: usize) -> Result<Spectrum> {
    let n_x = problem.profile.n_x();
    solve_spectrum_with_basis(problem, j_count, default_basis_size(n_x, j_count))
}

pub fn solve_spectrum_with_basis(problem: &EigenProblem, j_count: usize, k: usize) -> Result<Spectrum> {
    let n_x = problem.profile.n_x();
    let limit = n_x / 8;
    if j_count == 0 || j_count > limit {
        return Err(Error::ResolutionExceeded { requested: j_count, limit });
    }
    if k < j_count {
        return Err(Error::InvalidParameter(format!("basis size {k} below requested count {j_count}")));
    }
    let GalerkinMatrices { stiffness, mass } = assemble(problem, k)?;
    let prof = problem.profile;
    let sigma = prof
        .rho
        .iter()
        .zip(&problem.potential)
        .fold(0.0_f64, |m, (r, g)| m.max(g / r))
        + 1.0;
    // Shift-and-invert: (S + σM)⁻¹M has eigenvalues 1/(λ + σ), so the lowest modes are resolved
    // with relative rather than ‖S‖-absolute accuracy.
    let shifted = &stiffness + &mass * sigma;
    let chol = Cholesky::new(shifted)
        .ok_or_else(|| Error::EigenSolverFailure("shifted stiffness is not positive definite".into()))?;
    let l = chol.l();
    let linv_m = l
        .solve_lower_triangular(&mass)
        .ok_or_else(|| Error::EigenSolverFailure("triangular solve failed".into()))?;
    let b = l
        .solve_lower_triangular(&linv_m.transpose())
        .ok_or_else(|| Error::EigenSolverFailure("triangular solve failed".into()))?;
    let b = (&b + b.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(b, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::EigenSolverFailure("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let grid = &prof.grid;
    let mut lambdas = Vec::with_capacity(j_count);
    let mut coefficients = DMatrix::zeros(k, j_count);
    let mut residuals = Vec::with_capacity(j_count);
    for (col, &idx) in order.iter().take(j_count).enumerate() {
        let z = eig.eigenvectors.column(idx).into_owned();
        let mut c = l
            .tr_solve_lower_triangular(&z)
            .ok_or_else(|| Error::EigenSolverFailure("back substitution failed".into()))?;
        let mc = &mass * &c;
        let norm = c.dot(&mc).sqrt();
        c /= norm;
        let sc = &stiffness * &c;
        let mc = &mass * &c;
        let lambda = c.dot(&sc);
        let slope: f64 = c.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).sum();
        if slope < 0.0 {
            c = -c;
        }
        let res: DVector<f64> = &sc - &mc * lambda;
        let scale = (lambda.abs() * mc.norm()).max(mc.norm());
        residuals.push(res.norm() / scale);
        coefficients.set_column(col, &c);
        lambdas.push(lambda);
    }
    for j in 1..j_count {
        if !(lambdas[j] > lambdas[j - 1]) {
            return Err(Error::EigenSolverFailure(format!(
                "eigenvalues {} and {} are not strictly ordered",
                j,
                j + 1
            )));
        }
    }
    if let Some((j, r)) = residuals.iter().enumerate().find(|(_, &r)| !(r <= TOL_EIG)) {
        return Err(Error::EigenSolverFailure(format!("residual {r:.3e} of eigenpair {} exceeds tolerance", j + 1)));
    }
    let eigenfunctions = (0..j_count)
        .map(|j| grid.sine_synthesis(coefficients.column(j).as_slice()))
        .collect();
    let mus: Vec<Complex64> = lambdas.iter().map(|&l| mu_of(l)).collect();
    let gap = mus.windows(2).map(|w| (w[1] - w[0]).norm()).fold(f64::INFINITY, f64::min);
    let shift_m = (-lambdas[0]).max(0.0) + 1.0;
    Ok(Spectrum { lambdas, mus, coefficients, eigenfunctions, gap, shift_m, basis_size: k, residuals })
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn eigenfunction(&self, j: usize) -> Result<&[f64]> {
        if j == 0 || j > self.len() {
            return Err(Error::IndexOutOfRange { index: j, len: self.len() });
        }
        Ok(&self.eigenfunctions[j - 1])
    }

    /// ∫ρ ψ_j ψ_k by trapezoid quadrature.
    pub fn rho_inner(&self, profile: &CoefficientProfile, j: usize, k: usize) -> f64 {
        let g = &profile.grid;
        let f: Vec<f64> = (0..g.len())
            .map(|i| profile.rho[i] * self.eigenfunctions[j - 1][i] * self.eigenfunctions[k - 1][i])
            .collect();
        g.trapz(&f)
    }
}

/// First-order change of λ_j under g → g + h, namely −∫ψ_j² h.
pub fn eigenvalue_derivative(problem: &EigenProblem, spectrum: &Spectrum, j: usize, h: &[f64]) -> Result<f64> {
    let psi = spectrum.eigenfunction(j)?;
    let grid = problem.grid();
    if h.len() != grid.len() {
        return Err(Error::InvalidGrid("direction has the wrong number of samples".into()));
    }
    let f: Vec<f64> = psi.iter().zip(h).map(|(p, hv)| p * p * hv).collect();
    Ok(-grid.trapz(&f))
}

/// Strong-form (p y″)″ − g y for the first `modes` terms of the sine series through the samples
/// y, using (p y″)″ = p″y″ + 2p′y‴ + p y⁗ with exact derivatives of p.
pub fn apply_operator(profile: &CoefficientProfile, potential: &[f64], y: &[f64], modes: usize) -> Vec<f64> {
    let grid = &profile.grid;
    let mut b = grid.sine_analysis(y);
    b.truncate(modes);
    apply_operator_to_series(profile, potential, &b)
}

/// Same as [`apply_operator`] for a function given by its sine coefficients.
pub fn apply_operator_to_series(profile: &CoefficientProfile, potential: &[f64], b: &[f64]) -> Vec<f64> {
    let grid = &profile.grid;
    let y0 = grid.sine_synthesis(b);
    let y2 = grid.sine_series_derivative(b, 2);
    let y3 = grid.sine_series_derivative(b, 3);
    let y4 = grid.sine_series_derivative(b, 4);
    let dp = profile.dp();
    let d2p = profile.d2p();
    (0..grid.len())
        .map(|i| d2p[i] * y2[i] + 2.0 * dp[i] * y3[i] + profile.p[i] * y4[i] - potential[i] * y0[i])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{build_profile, Generator, GeneratorPair};

    fn sine_pair(n: usize, a: f64) -> CoefficientProfile {
        build_profile(&GeneratorPair::new(&Generator::SinePair { amplitude: a }, n, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn constant_beam_eigenvalues() {
        let prof = CoefficientProfile::constant(1024).unwrap();
        let spec = solve_spectrum(&EigenProblem::unperturbed(&prof), 10).unwrap();
        for (j, l) in spec.lambdas.iter().enumerate() {
            let exact = ((j + 1) as f64).powi(4);
            assert!(((l - exact) / exact).abs() < 1e-12, "j={} {l}", j + 1);
        }
        for j in 1..10 {
            let d = spec.mus[j].re - spec.mus[j - 1].re;
            assert!((d - (2 * j + 1) as f64).abs() < 1e-3);
        }
        assert!((spec.shift_m - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_potential_shifts_spectrum() {
        let prof = CoefficientProfile::constant(512).unwrap();
        let eps = 0.37;
        let spec = solve_spectrum(&EigenProblem::new(&prof, vec![eps; 513]).unwrap(), 8).unwrap();
        for (j, l) in spec.lambdas.iter().enumerate() {
            assert!((l - (((j + 1) as f64).powi(4) - eps)).abs() < 1e-6);
        }
    }

    #[test]
    fn negative_eigenvalues_give_imaginary_mu() {
        let prof = CoefficientProfile::constant(256).unwrap();
        let spec = solve_spectrum(&EigenProblem::new(&prof, vec![3.0; 257]).unwrap(), 4).unwrap();
        assert!((spec.lambdas[0] + 2.0).abs() < 1e-9);
        assert!((spec.mus[0] - Complex64::new(0.0, 2.0_f64.sqrt())).norm() < 1e-9);
        assert!((spec.shift_m - 3.0).abs() < 1e-9);
    }

    #[test]
    fn stiffness_is_symmetric_and_potential_enters_linearly() {
        let prof = sine_pair(256, 0.05);
        let k = 48;
        let base = assemble(&EigenProblem::unperturbed(&prof), k).unwrap();
        let shifted = assemble(&EigenProblem::new(&prof, vec![0.25; 257]).unwrap(), k).unwrap();
        let unit = weighted_sine_gram(&prof.grid, &vec![1.0; 257], k);
        let s = &base.stiffness;
        let max = s.amax();
        assert!((s - s.transpose()).amax() <= 1e-12 * max);
        let diff = &shifted.stiffness - (&base.stiffness - unit * 0.25);
        assert!(diff.amax() < 1e-12 * max);
    }

    #[test]
    fn galerkin_stiffness_on_sine_modes() {
        let prof = CoefficientProfile::constant(256).unwrap();
        let m = assemble(&EigenProblem::unperturbed(&prof), 20).unwrap();
        for j in 0..20 {
            let k4 = ((j + 1) as f64).powi(4);
            assert!((m.stiffness[(j, j)] - k4 * std::f64::consts::FRAC_PI_2).abs() < 1e-9 * k4);
        }
    }

    #[test]
    fn strong_operator_on_sines() {
        let prof = CoefficientProfile::constant(256).unwrap();
        for j in [1, 3, 7] {
            let y = prof.grid.sample(|x| (j as f64 * x).sin());
            let out = apply_operator(&prof, &vec![0.0; 257], &y, 16);
            let j4 = (j as f64).powi(4);
            for (o, v) in out.iter().zip(&y) {
                assert!((o - j4 * v).abs() < 1e-9 * j4);
            }
        }
    }

    #[test]
    fn eigenfunctions_are_rho_orthonormal_with_small_strong_residual() {
        let prof = sine_pair(1024, 0.05);
        let spec = solve_spectrum(&EigenProblem::unperturbed(&prof), 12).unwrap();
        for j in 1..=12 {
            for k in 1..=12 {
                let v = spec.rho_inner(&prof, j, k);
                let target = if j == k { 1.0 } else { 0.0 };
                assert!((v - target).abs() < 1e-8, "({j},{k}) {v}");
            }
        }
        let zero = vec![0.0; prof.grid.len()];
        for j in 1..=6 {
            let psi = spec.eigenfunction(j).unwrap();
            let lhs = apply_operator_to_series(&prof, &zero, spec.coefficients.column(j - 1).as_slice());
            let lam = spec.lambdas[j - 1];
            let num: f64 = lhs.iter().zip(psi).zip(&prof.rho).map(|((l, p), r)| (l - lam * r * p).powi(2)).sum();
            let den: f64 = psi.iter().zip(&prof.rho).map(|(p, r)| (lam * r * p).powi(2)).sum();
            assert!((num / den).sqrt() < 1e-6, "j={j}");
        }
    }

    #[test]
    fn resolution_guard() {
        let prof = CoefficientProfile::constant(128).unwrap();
        let err = solve_spectrum(&EigenProblem::unperturbed(&prof), 17).unwrap_err();
        assert!(matches!(err, Error::ResolutionExceeded { .. }));
    }

    #[test]
    fn derivative_of_constant_direction_is_minus_one() {
        let prof = CoefficientProfile::constant(512).unwrap();
        let problem = EigenProblem::unperturbed(&prof);
        let spec = solve_spectrum(&problem, 6).unwrap();
        for j in 1..=6 {
            let d = eigenvalue_derivative(&problem, &spec, j, &vec![1.0; 513]).unwrap();
            assert!((d + 1.0).abs() < 1e-12);
            assert_eq!(eigenvalue_derivative(&problem, &spec, j, &vec![0.0; 513]).unwrap(), 0.0);
        }
        assert!(matches!(
            eigenvalue_derivative(&problem, &spec, 7, &vec![1.0; 513]),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn sine_pair_refinement_oracle() {
        let coarse = sine_pair(1024, 0.05);
        let fine = sine_pair(4096, 0.05);
        let a = solve_spectrum(&EigenProblem::unperturbed(&coarse), 40).unwrap();
        let b = solve_spectrum(&EigenProblem::unperturbed(&fine), 40).unwrap();
        for j in 0..20 {
            assert!(((a.lambdas[j] - b.lambdas[j]) / b.lambdas[j]).abs() < 1e-3);
        }
    }
}
