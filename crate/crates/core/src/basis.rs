//! Galerkin coordinates for the split problem.
//!
//! The oscillating part w is expanded in the J lowest unperturbed beam modes ψ̄_j, so the beam
//! operator is diagonal there. The time mean v lives in the sine basis sin(kx), k = 1..K, where
//! the stiffness matrix of (p y″)″ is assembled once.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::coefficients::CoefficientProfile;
use crate::eigensolver::{assemble, default_basis_size, solve_spectrum, EigenProblem, Spectrum};
use crate::error::{Error, Result};
use crate::fields::TimeFourierField;
use crate::grid::Grid;

/// Coefficients ŵ_{l,j} for 1 ≤ l ≤ N, 1 ≤ j ≤ J (negative l by conjugation).
#[derive(Debug, Clone, PartialEq)]
pub struct ModalField {
    n: usize,
    j: usize,
    data: Vec<Complex64>,
}

impl ModalField {
    pub fn zeros(n: usize, j: usize) -> Self {
        Self { n, j, data: vec![Complex64::new(0.0, 0.0); n * j] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn j(&self) -> usize {
        self.j
    }

    /// Coefficient at time mode l (1-based) and beam mode j (1-based).
    pub fn get(&self, l: usize, j: usize) -> Complex64 {
        self.data[(l - 1) * self.j + (j - 1)]
    }

    pub fn set(&mut self, l: usize, j: usize, z: Complex64) {
        self.data[(l - 1) * self.j + (j - 1)] = z;
    }

    pub fn mode(&self, l: usize) -> &[Complex64] {
        &self.data[(l - 1) * self.j..l * self.j]
    }

    pub fn mode_mut(&mut self, l: usize) -> &mut [Complex64] {
        &mut self.data[(l - 1) * self.j..l * self.j]
    }

    /// Copy with `n` time modes, zero-padded or truncated.
    pub fn with_band(&self, n: usize) -> Self {
        let mut out = Self::zeros(n, self.j);
        let keep = n.min(self.n) * self.j;
        out.data[..keep].copy_from_slice(&self.data[..keep]);
        out
    }

    /// Real coordinates: for each l the block [Re ŵ_{l,1..J}, Im ŵ_{l,1..J}].
    pub fn to_real(&self) -> DVector<f64> {
        let mut v = DVector::zeros(2 * self.n * self.j);
        for l in 0..self.n {
            for k in 0..self.j {
                let z = self.data[l * self.j + k];
                v[2 * l * self.j + k] = z.re;
                v[2 * l * self.j + self.j + k] = z.im;
            }
        }
        v
    }

    pub fn from_real(n: usize, j: usize, v: &DVector<f64>) -> Self {
        assert_eq!(v.len(), 2 * n * j);
        let mut out = Self::zeros(n, j);
        for l in 0..n {
            for k in 0..j {
                out.data[l * j + k] = Complex64::new(v[2 * l * j + k], v[2 * l * j + j + k]);
            }
        }
        out
    }

    pub fn axpy(&self, c: f64, other: &Self) -> Self {
        assert_eq!(self.j, other.j);
        let n = self.n.max(other.n);
        let mut out = self.with_band(n);
        for (i, z) in other.data.iter().enumerate() {
            out.data[i] += c * z;
        }
        out
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { n: self.n, j: self.j, data: self.data.iter().map(|z| z * c).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    /// Zeroes time modes l ≤ `n_low`.
    pub fn high_part(&self, n_low: usize) -> Self {
        let mut out = self.clone();
        for z in out.data[..n_low.min(self.n) * self.j].iter_mut() {
            *z = Complex64::new(0.0, 0.0);
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct ModalBasis {
    pub profile: CoefficientProfile,
    /// Unperturbed spectrum; its eigenfunctions are the range-equation basis.
    pub spectrum: Spectrum,
    /// Samples of sin(kx), k = 1..K.
    pub sines: Vec<Vec<f64>>,
    /// K×K matrix ∫ p sin″_k sin″_m of the beam operator on sines.
    pub stiffness: DMatrix<f64>,
    /// S^{-1/2}, used to measure distance from degeneracy relative to the beam operator.
    pub stiffness_inv_sqrt: DMatrix<f64>,
    /// n_x+1 by J matrix of ψ̄_j samples.
    psi: DMatrix<f64>,
    /// n_x+1 by K matrix of sine samples.
    sin_mat: DMatrix<f64>,
}

impl ModalBasis {
    pub fn new(profile: &CoefficientProfile, j_count: usize, k_count: Option<usize>) -> Result<Self> {
        let problem = EigenProblem::unperturbed(profile);
        let spectrum = solve_spectrum(&problem, j_count)?;
        let grid = &profile.grid;
        let k = k_count.unwrap_or_else(|| default_basis_size(grid.n_x(), j_count));
        if k >= grid.n_x() {
            return Err(Error::ResolutionExceeded { requested: k, limit: grid.n_x() - 1 });
        }
        let stiffness = assemble(&problem, k)?.stiffness;
        let eig = stiffness.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&e| e <= 0.0) {
            return Err(Error::EigenSolverFailure("beam stiffness is not positive definite".into()));
        }
        let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| 1.0 / e.sqrt()));
        let stiffness_inv_sqrt = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose();
        let sines: Vec<Vec<f64>> = (1..=k).map(|m| grid.sample(|x| (m as f64 * x).sin())).collect();
        let n = grid.len();
        let psi = DMatrix::from_fn(n, j_count, |i, j| spectrum.eigenfunctions[j][i]);
        let sin_mat = DMatrix::from_fn(n, k, |i, m| sines[m][i]);
        Ok(Self { profile: profile.clone(), spectrum, sines, stiffness, stiffness_inv_sqrt, psi, sin_mat })
    }

    pub fn grid(&self) -> &Grid {
        &self.profile.grid
    }

    pub fn j(&self) -> usize {
        self.spectrum.len()
    }

    pub fn k(&self) -> usize {
        self.sines.len()
    }

    pub fn lambda_bar(&self, j: usize) -> f64 {
        self.spectrum.lambdas[j - 1]
    }

    /// w(t, x) on the grid with time band `band` ≥ w.n().
    pub fn synthesize(&self, w: &ModalField, band: usize) -> TimeFourierField {
        assert!(band >= w.n());
        let mut f = TimeFourierField::zeros(self.grid(), band);
        for l in 1..=w.n() {
            let coeffs = w.mode(l);
            if coeffs.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
                continue;
            }
            let out = f.mode_mut(l);
            for (j, c) in coeffs.iter().enumerate() {
                if c.re == 0.0 && c.im == 0.0 {
                    continue;
                }
                for (o, &p) in out.iter_mut().zip(self.psi.column(j).iter()) {
                    *o += c * p;
                }
            }
        }
        f
    }

    /// ∫ ψ̄_k F_l dx for 1 ≤ l ≤ n.
    pub fn project(&self, f: &TimeFourierField, n: usize) -> ModalField {
        let grid = self.grid();
        let j = self.j();
        let mut out = ModalField::zeros(n, j);
        let w = grid.weights();
        for l in 1..=n.min(f.n_time()) {
            let m = f.mode(l);
            for k in 0..j {
                let col = self.psi.column(k);
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..m.len() {
                    acc += m[i] * (w[i] * col[i]);
                }
                out.set(l, k + 1, acc);
            }
        }
        out
    }

    /// Samples of Σ_k v̂_k sin(kx).
    pub fn synthesize_mean(&self, v: &DVector<f64>) -> Vec<f64> {
        (&self.sin_mat * v).iter().copied().collect()
    }

    /// ∫ sin(kx) f dx for k = 1..K.
    pub fn project_mean(&self, f: &[f64]) -> DVector<f64> {
        let wf = DVector::from_iterator(f.len(), f.iter().zip(self.grid().weights()).map(|(a, b)| a * b));
        self.sin_mat.transpose() * wf
    }

    fn weighted_gram(&self, left: &DMatrix<f64>, right: &DMatrix<f64>, b: &[f64]) -> DMatrix<f64> {
        let w = self.grid().weights();
        let mut scaled = right.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= w[i] * b[i];
        }
        left.transpose() * scaled
    }

    /// (Re, Im) of ∫ ψ̄_k b ψ̄_j for complex samples b.
    pub fn psi_gram(&self, b: &[Complex64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let re: Vec<f64> = b.iter().map(|z| z.re).collect();
        let im: Vec<f64> = b.iter().map(|z| z.im).collect();
        (self.weighted_gram(&self.psi, &self.psi, &re), self.weighted_gram(&self.psi, &self.psi, &im))
    }

    /// (Re, Im) of ∫ ψ̄_k b sin(mx): J×K.
    pub fn psi_sine_gram(&self, b: &[Complex64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let re: Vec<f64> = b.iter().map(|z| z.re).collect();
        let im: Vec<f64> = b.iter().map(|z| z.im).collect();
        (self.weighted_gram(&self.psi, &self.sin_mat, &re), self.weighted_gram(&self.psi, &self.sin_mat, &im))
    }

    /// ∫ sin(kx) b sin(mx) for real samples b: K×K.
    pub fn sine_gram(&self, b: &[f64]) -> DMatrix<f64> {
        self.weighted_gram(&self.sin_mat, &self.sin_mat, b)
    }

    /// Sine-series coefficients of ψ̄_j (K_ψ of them, from the Galerkin solve).
    pub fn psi_sine_coefficients(&self, j: usize) -> Vec<f64> {
        self.spectrum.coefficients.column(j - 1).iter().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_coordinates_round_trip() {
        let mut w = ModalField::zeros(3, 2);
        w.set(2, 1, Complex64::new(1.0, -2.0));
        w.set(3, 2, Complex64::new(0.5, 0.25));
        let back = ModalField::from_real(3, 2, &w.to_real());
        assert_eq!(back, w);
        assert_eq!(w.to_real()[2 * 2 + 0], 1.0);
        assert_eq!(w.to_real()[2 * 2 + 2], -2.0);
    }

    #[test]
    fn synthesis_and_projection_are_inverse_on_the_basis() {
        let prof = CoefficientProfile::constant(128).unwrap();
        let basis = ModalBasis::new(&prof, 6, None).unwrap();
        let mut w = ModalField::zeros(2, 6);
        w.set(1, 3, Complex64::new(0.7, 0.1));
        w.set(2, 6, Complex64::new(-0.2, 0.4));
        let f = basis.synthesize(&w, 4);
        assert!(f.supported_in_band(2));
        // Constant density: projection is the ρ-weighted inner product.
        let back = basis.project(&f, 2);
        assert!(back.axpy(-1.0, &w).max_abs() < 1e-12);
    }

    #[test]
    fn mean_basis_round_trip() {
        let prof = CoefficientProfile::constant(128).unwrap();
        let basis = ModalBasis::new(&prof, 4, Some(16)).unwrap();
        let v = DVector::from_fn(16, |k, _| 1.0 / (k + 1) as f64);
        let s = basis.synthesize_mean(&v);
        let back = basis.project_mean(&s) * (2.0 / std::f64::consts::PI);
        assert!((back - v).amax() < 1e-13);
        // Constant-profile stiffness is diag(k⁴ π/2).
        assert!((basis.stiffness[(2, 2)] - 81.0 * std::f64::consts::FRAC_PI_2).abs() < 1e-9);
    }
}
