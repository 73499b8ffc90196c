//! Large-j expansion λ_j = j⁴ + 2j²υ₀ + υ₁ − ϱ_j + o(1)/j.
//!
//! Under ξ = φ(x), y = q·u the beam operator becomes y ↦ y⁗ + 2(P y′)′ + Q y in ξ with the same
//! hinged conditions (they survive because α + β = 0 at both ends). P and Q are explicit in α, β
//! and their first three derivatives; the constant and oscillatory terms follow from them.

use crate::coefficients::CoefficientProfile;
use crate::eigensolver::Spectrum;
use crate::error::{Error, Result};

/// Pointwise auxiliary functions of the generator pair (all sampled on the x-grid).
#[derive(Debug, Clone)]
pub struct Intermediates {
    /// (5α + 3β)/(2ζ); its boundary difference together with ∫𝔵/ζ gives πυ₀.
    pub d: Vec<f64>,
    /// 𝔵 = (5α² + 5β² + 6αβ)/4.
    pub xi: Vec<f64>,
    /// 𝔷 = (α + 3β)/2.
    pub z: Vec<f64>,
    pub eta_plus: Vec<f64>,
    pub eta_minus: Vec<f64>,
    /// Second-order coefficient P of the transformed operator.
    pub p_coef: Vec<f64>,
    /// dP/dξ.
    pub p_coef_dxi: Vec<f64>,
    /// d²P/dξ².
    pub p_coef_dxi2: Vec<f64>,
    /// Zeroth-order coefficient Q of the transformed operator, potential included.
    pub q_coef: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct AsymptoticCoefficients {
    pub upsilon0: f64,
    pub upsilon1: f64,
    /// ϱ_j for j = 1..=J.
    pub varrho: Vec<f64>,
    /// The same oscillatory quadrature evaluated at j = 0.
    pub varrho0: f64,
    pub intermediates: Intermediates,
}

impl AsymptoticCoefficients {
    pub fn varrho_at(&self, j: usize) -> f64 {
        self.varrho[j - 1]
    }

    /// j⁴ + 2j²υ₀ + υ₁ − ϱ_j.
    pub fn predicted(&self, j: usize) -> f64 {
        let jf = j as f64;
        jf.powi(4) + 2.0 * jf * jf * self.upsilon0 + self.upsilon1 - self.varrho_at(j)
    }
}

fn check_smoothness(profile: &CoefficientProfile) -> Result<()> {
    let max_abs = |v: &[f64]| v.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
    let scale = max_abs(&profile.alpha[0]).max(max_abs(&profile.beta[0]));
    if scale == 0.0 {
        return Ok(());
    }
    let ratio = max_abs(&profile.alpha[3]).max(max_abs(&profile.beta[3])) / scale;
    if ratio > 1e3 {
        return Err(Error::InsufficientSmoothness { ratio });
    }
    Ok(())
}

pub fn asymptotic_coefficients(
    profile: &CoefficientProfile,
    potential: &[f64],
    j_count: usize,
) -> Result<AsymptoticCoefficients> {
    check_smoothness(profile)?;
    let grid = &profile.grid;
    if potential.len() != grid.len() {
        return Err(Error::InvalidGrid("potential has the wrong number of samples".into()));
    }
    let n = grid.len();
    let pi = std::f64::consts::PI;
    let [a0, a1, a2, a3] = &profile.alpha;
    let [b0, b1, b2, b3] = &profile.beta;
    let zeta = &profile.zeta;

    let mut inter = Intermediates {
        d: vec![0.0; n],
        xi: vec![0.0; n],
        z: vec![0.0; n],
        eta_plus: vec![0.0; n],
        eta_minus: vec![0.0; n],
        p_coef: vec![0.0; n],
        p_coef_dxi: vec![0.0; n],
        p_coef_dxi2: vec![0.0; n],
        q_coef: vec![0.0; n],
    };
    for i in 0..n {
        let (a, da, d2a, d3a) = (a0[i], a1[i], a2[i], a3[i]);
        let (b, db, d2b, d3b) = (b0[i], b1[i], b2[i], b3[i]);
        let z = zeta[i];
        let (z2, z3, z4) = (z * z, z * z * z, z * z * z * z);
        inter.d[i] = (5.0 * a + 3.0 * b) / (2.0 * z);
        inter.xi[i] = (5.0 * a * a + 5.0 * b * b + 6.0 * a * b) / 4.0;
        inter.z[i] = (a + 3.0 * b) / 2.0;
        inter.eta_plus[i] = b + a;
        inter.eta_minus[i] = b - a;
        inter.p_coef[i] = -(10.0 * da - 5.0 * a * a + 10.0 * a * b + 6.0 * db + 11.0 * b * b) / (4.0 * z2);
        inter.p_coef_dxi[i] = -(5.0 * a.powi(3) - 15.0 * a * a * b - 15.0 * a * da - a * b * b - a * db
            + 15.0 * da * b
            + 5.0 * d2a
            + 11.0 * b.powi(3)
            + 17.0 * b * db
            + 3.0 * d2b)
            / (2.0 * z3);
        inter.p_coef_dxi2[i] = (15.0 * a.powi(4) - 60.0 * a.powi(3) * b - 60.0 * a * a * da
            + 42.0 * a * a * b * b
            + 12.0 * a * a * db
            + 120.0 * a * da * b
            + 30.0 * a * d2a
            + 36.0 * a * b.powi(3)
            + 56.0 * a * b * db
            + 10.0 * a * d2b
            + 15.0 * da * da
            - 44.0 * da * b * b
            - 14.0 * da * db
            - 30.0 * d2a * b
            - 5.0 * d3a
            - 33.0 * b.powi(4)
            - 84.0 * b * b * db
            - 26.0 * b * d2b
            - 17.0 * db * db
            - 3.0 * d3b)
            / (2.0 * z4);
        let q_geom = (108.0 * da * da - 324.0 * da * a * a + 648.0 * da * a * b - 24.0 * da * db
            - 132.0 * da * b * b
            + 144.0 * d2a * a
            - 144.0 * d2a * b
            - 24.0 * d3a
            + 81.0 * a.powi(4)
            - 324.0 * a.powi(3) * b
            + 36.0 * a * a * db
            + 198.0 * a * a * b * b
            + 312.0 * a * db * b
            + 48.0 * a * d2b
            + 252.0 * a * b.powi(3)
            - 20.0 * db * db
            - 28.0 * db * b * b
            - 48.0 * d2b * b
            - 8.0 * d3b
            + 49.0 * b.powi(4))
            / (16.0 * z4);
        inter.q_coef[i] = q_geom - potential[i] / profile.rho[i];
    }

    // Means over ξ: (1/π)∫ f dξ = (1/π)∫ f ζ dx.
    let xi_mean = |f: &[f64]| -> f64 {
        let w: Vec<f64> = f.iter().zip(zeta).map(|(a, z)| a * z).collect();
        grid.trapz(&w) / pi
    };
    let p_mean = xi_mean(&inter.p_coef);
    let q_mean = xi_mean(&inter.q_coef);
    let p_var: Vec<f64> = inter.p_coef.iter().map(|p| (p - p_mean).powi(2)).collect();
    let last = n - 1;
    let upsilon0 = -p_mean;
    let upsilon1 =
        q_mean - 0.5 * xi_mean(&p_var) - (inter.p_coef_dxi[last] - inter.p_coef_dxi[0]) / (2.0 * pi);

    let osc: Vec<f64> = (0..n).map(|i| inter.q_coef[i] - 0.5 * inter.p_coef_dxi2[i]).collect();
    let varrho_of = |j: usize| -> f64 {
        let f: Vec<f64> = (0..n).map(|i| osc[i] * (2.0 * j as f64 * profile.phi[i]).cos()).collect();
        xi_mean(&f)
    };
    let varrho = (1..=j_count).map(varrho_of).collect();
    let varrho0 = varrho_of(0);
    Ok(AsymptoticCoefficients { upsilon0, upsilon1, varrho, varrho0, intermediates: inter })
}

/// Residuals r_j = λ_j − j⁴ − 2j²υ₀ − υ₁ + ϱ_j and their log-log decay rate.
#[derive(Debug, Clone)]
pub struct DecayReport {
    pub js: Vec<usize>,
    pub residuals: Vec<f64>,
    /// Least-squares slope of ln|r_j| against ln j; `None` when every residual vanishes.
    pub slope: Option<f64>,
    /// Set when the range reaches past n_x/32, where discretization error dominates.
    pub discretization_dominated: bool,
}

pub fn verify_asymptotics(
    spectrum: &Spectrum,
    asym: &AsymptoticCoefficients,
    n_x: usize,
    j_lo: usize,
    j_hi: usize,
) -> Result<DecayReport> {
    let available = spectrum.len().min(asym.varrho.len());
    if j_lo == 0 || j_hi < j_lo || j_hi > available {
        return Err(Error::IndexOutOfRange { index: j_hi, len: available });
    }
    let js: Vec<usize> = (j_lo..=j_hi).collect();
    let residuals: Vec<f64> = js.iter().map(|&j| spectrum.lambdas[j - 1] - asym.predicted(j)).collect();
    let pts: Vec<(f64, f64)> = js
        .iter()
        .zip(&residuals)
        .filter(|(_, r)| **r != 0.0)
        .map(|(&j, r)| ((j as f64).ln(), r.abs().ln()))
        .collect();
    let slope = if pts.len() >= 2 { Some(least_squares_slope(&pts)) } else { None };
    Ok(DecayReport { js, residuals, slope, discretization_dominated: j_hi > n_x / 32 })
}

pub fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{build_profile, Generator, GeneratorPair};
    use crate::eigensolver::{solve_spectrum, EigenProblem};

    #[test]
    fn trivial_profile_has_vanishing_coefficients() {
        let prof = CoefficientProfile::constant(256).unwrap();
        let a = asymptotic_coefficients(&prof, &vec![0.0; 257], 10).unwrap();
        assert_eq!(a.upsilon0, 0.0);
        assert_eq!(a.upsilon1, 0.0);
        assert!(a.varrho.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_potential_shifts_upsilon1() {
        let prof = CoefficientProfile::constant(256).unwrap();
        let c = 0.7;
        let a = asymptotic_coefficients(&prof, &vec![c; 257], 10).unwrap();
        assert_eq!(a.upsilon0, 0.0);
        assert!((a.upsilon1 + c).abs() < 1e-14);
        assert!(a.varrho.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn xi_is_nonnegative() {
        let gen = Generator::Polynomial {
            alpha: vec![0.3, -0.2, 0.05],
            beta: vec![-0.3, 0.2 + 0.1 * std::f64::consts::PI, -0.15],
        };
        let prof = build_profile(&GeneratorPair::new(&gen, 256, 1.0).unwrap()).unwrap();
        let a = asymptotic_coefficients(&prof, &vec![0.0; 257], 4).unwrap();
        assert!(a.intermediates.xi.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn constant_profile_residuals_vanish() {
        let prof = CoefficientProfile::constant(1024).unwrap();
        let zero = vec![0.0; 1025];
        let spec = solve_spectrum(&EigenProblem::unperturbed(&prof), 20).unwrap();
        let a = asymptotic_coefficients(&prof, &zero, 20).unwrap();
        let rep = verify_asymptotics(&spec, &a, 1024, 1, 20).unwrap();
        assert!(rep.residuals.iter().zip(&rep.js).all(|(r, &j)| r.abs() < 1e-12 * (j as f64).powi(4)));
        assert!(!rep.discretization_dominated);
        let guarded = verify_asymptotics(&spec, &a, 256, 1, 20).unwrap();
        assert!(guarded.discretization_dominated);
    }
}
