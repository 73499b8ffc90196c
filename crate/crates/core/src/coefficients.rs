//! Variable coefficients ρ = exp(4∫α), p = p₀·exp(4∫β) and the Liouville auxiliaries ζ, q, φ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

pub const TOL_BC: f64 = 1e-10;
pub const TOL_NORM: f64 = 1e-8;
pub const MIN_GRID: usize = 64;

/// How the generator pair (α, β) is specified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum Generator {
    /// α ≡ β ≡ 0 (the constant-coefficient beam).
    Zero,
    /// α = a·sin x, β = −a·sin x.
    SinePair { amplitude: f64 },
    /// α = Σ aₖxᵏ, β = Σ bₖxᵏ (coefficients in increasing degree).
    Polynomial { alpha: Vec<f64>, beta: Vec<f64> },
    /// Raw samples on the grid; derivatives are obtained by 7-point differencing.
    Samples { alpha: Vec<f64>, beta: Vec<f64> },
}

/// Samples of α, β and their first three derivatives on a uniform grid, with the initial p(0).
#[derive(Debug, Clone)]
pub struct GeneratorPair {
    pub grid: Grid,
    /// α, α′, α″, α‴.
    pub alpha: [Vec<f64>; 4],
    /// β, β′, β″, β‴.
    pub beta: [Vec<f64>; 4],
    pub p0: f64,
}

fn horner_derivative(c: &[f64], d: usize, x: f64) -> f64 {
    let mut acc = 0.0;
    for k in (d..c.len()).rev() {
        let falling: f64 = (0..d).map(|m| (k - m) as f64).product();
        acc = acc * x + c[k] * falling;
    }
    acc
}

/// Finite-difference weights for derivatives 0..=m at `z` on the nodes `xs` (Fornberg's recursion).
pub fn fd_weights(z: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] *= c4 / c3;
        }
        c1 = c2;
    }
    c
}

/// First three derivatives of gridded samples using 7-point stencils (shifted near the ends).
pub fn sample_derivatives(grid: &Grid, f: &[f64]) -> [Vec<f64>; 4] {
    let n = grid.n_x();
    let x = grid.x();
    let mut d1 = vec![0.0; n + 1];
    let mut d2 = vec![0.0; n + 1];
    let mut d3 = vec![0.0; n + 1];
    for i in 0..=n {
        let start = i.saturating_sub(3).min(n - 6);
        let nodes = &x[start..start + 7];
        let w = fd_weights(x[i], nodes, 3);
        let vals = &f[start..start + 7];
        d1[i] = w[1].iter().zip(vals).map(|(a, b)| a * b).sum();
        d2[i] = w[2].iter().zip(vals).map(|(a, b)| a * b).sum();
        d3[i] = w[3].iter().zip(vals).map(|(a, b)| a * b).sum();
    }
    [f.to_vec(), d1, d2, d3]
}

impl GeneratorPair {
    pub fn new(generator: &Generator, n_x: usize, p0: f64) -> Result<Self> {
        if n_x < MIN_GRID {
            return Err(Error::InvalidGrid(format!("n_x = {n_x} is below {MIN_GRID}")));
        }
        if !(p0 > 0.0 && p0.is_finite()) {
            return Err(Error::InvalidParameter(format!("p0 must be positive, got {p0}")));
        }
        let grid = Grid::new(n_x)?;
        let (alpha, beta) = match generator {
            Generator::Zero => {
                let z = vec![0.0; n_x + 1];
                ([z.clone(), z.clone(), z.clone(), z.clone()], [z.clone(), z.clone(), z.clone(), z])
            }
            Generator::SinePair { amplitude: a } => {
                let a = *a;
                let s = grid.sample(|x| a * x.sin());
                let c = grid.sample(|x| a * x.cos());
                let neg = |v: &Vec<f64>| v.iter().map(|t| -t).collect::<Vec<_>>();
                (
                    [s.clone(), c.clone(), neg(&s), neg(&c)],
                    [neg(&s), neg(&c), s.clone(), c.clone()],
                )
            }
            Generator::Polynomial { alpha, beta } => {
                let eval = |c: &[f64]| -> [Vec<f64>; 4] {
                    [0, 1, 2, 3].map(|d| grid.sample(|x| horner_derivative(c, d, x)))
                };
                (eval(alpha), eval(beta))
            }
            Generator::Samples { alpha, beta } => {
                if alpha.len() != n_x + 1 || beta.len() != n_x + 1 {
                    return Err(Error::InvalidGrid(format!(
                        "sample arrays must have n_x + 1 = {} entries (got {} and {})",
                        n_x + 1,
                        alpha.len(),
                        beta.len()
                    )));
                }
                (sample_derivatives(&grid, alpha), sample_derivatives(&grid, beta))
            }
        };
        let pair = Self { grid, alpha, beta, p0 };
        pair.validate()?;
        Ok(pair)
    }

    pub fn n_x(&self) -> usize {
        self.grid.n_x()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_x();
        let at_zero = self.alpha[0][0] + self.beta[0][0];
        let at_pi = self.alpha[0][n] + self.beta[0][n];
        if !(at_zero.abs() <= TOL_BC && at_pi.abs() <= TOL_BC) {
            return Err(Error::BoundaryConstraintViolated { at_zero, at_pi });
        }
        Ok(())
    }

    /// Rejects generators whose third derivatives are dominated by differencing noise.
    pub fn check_smoothness(&self) -> Result<()> {
        let max_abs = |v: &[f64]| v.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
        let scale = max_abs(&self.alpha[0]).max(max_abs(&self.beta[0]));
        if scale == 0.0 {
            return Ok(());
        }
        let third = max_abs(&self.alpha[3]).max(max_abs(&self.beta[3]));
        let ratio = third / scale;
        if ratio > 1e3 {
            return Err(Error::InsufficientSmoothness { ratio });
        }
        Ok(())
    }
}

/// ρ, p and the Liouville quantities on the grid, normalized so that ∫₀^π ζ = π.
#[derive(Debug, Clone)]
pub struct CoefficientProfile {
    pub grid: Grid,
    pub alpha: [Vec<f64>; 4],
    pub beta: [Vec<f64>; 4],
    pub rho: Vec<f64>,
    pub p: Vec<f64>,
    pub zeta: Vec<f64>,
    pub q: Vec<f64>,
    pub phi: Vec<f64>,
    /// Calibrated p(0).
    pub p0: f64,
    pub p0_initial: f64,
    pub normalization_residual: f64,
}

pub fn build_profile(gen: &GeneratorPair) -> Result<CoefficientProfile> {
    gen.validate()?;
    let grid = gen.grid.clone();
    let int_alpha = grid.cumtrapz(&gen.alpha[0]);
    let int_beta = grid.cumtrapz(&gen.beta[0]);
    let rho: Vec<f64> = int_alpha.iter().map(|a| (4.0 * a).exp()).collect();
    let p_shape: Vec<f64> = int_beta.iter().map(|b| (4.0 * b).exp()).collect();
    let ratio: Vec<f64> = rho.iter().zip(&p_shape).map(|(r, s)| (r / s).powf(0.25)).collect();
    let p0 = (grid.trapz(&ratio) / std::f64::consts::PI).powi(4);
    let p: Vec<f64> = p_shape.iter().map(|s| p0 * s).collect();
    for i in 0..grid.len() {
        if !(rho[i] > 0.0 && rho[i].is_finite() && p[i] > 0.0 && p[i].is_finite()) {
            return Err(Error::NonPositiveCoefficient { index: i });
        }
    }
    let zeta: Vec<f64> = rho.iter().zip(&p).map(|(r, pp)| (r / pp).powf(0.25)).collect();
    let q: Vec<f64> = rho.iter().zip(&p).map(|(r, pp)| pp.powf(0.125) * r.powf(0.375)).collect();
    let phi = grid.cumtrapz(&zeta);
    let normalization_residual = (grid.trapz(&zeta) - std::f64::consts::PI).abs();
    if !p0.is_finite() || normalization_residual > TOL_NORM {
        return Err(Error::NonPositiveCoefficient { index: 0 });
    }
    Ok(CoefficientProfile {
        grid,
        alpha: gen.alpha.clone(),
        beta: gen.beta.clone(),
        rho,
        p,
        zeta,
        q,
        phi,
        p0,
        p0_initial: gen.p0,
        normalization_residual,
    })
}

impl CoefficientProfile {
    /// Builds the ρ ≡ p ≡ 1 profile.
    pub fn constant(n_x: usize) -> Result<Self> {
        build_profile(&GeneratorPair::new(&Generator::Zero, n_x, 1.0)?)
    }

    pub fn n_x(&self) -> usize {
        self.grid.n_x()
    }

    /// p′ = 4βp.
    pub fn dp(&self) -> Vec<f64> {
        self.p.iter().zip(&self.beta[0]).map(|(p, b)| 4.0 * b * p).collect()
    }

    /// p″ = (4β′ + 16β²)p.
    pub fn d2p(&self) -> Vec<f64> {
        (0..self.p.len())
            .map(|i| (4.0 * self.beta[1][i] + 16.0 * self.beta[0][i].powi(2)) * self.p[i])
            .collect()
    }

    /// ψ = φ⁻¹ evaluated at the uniform ξ-grid ξ_k = kπ/n_x.
    pub fn inverse_phi(&self) -> Result<Vec<f64>> {
        let x = self.grid.x();
        let n = self.n_x();
        for i in 0..n {
            if !(self.phi[i + 1] > self.phi[i]) {
                return Err(Error::Interpolation(format!("phi is not increasing at sample {i}")));
            }
        }
        let mut out = Vec::with_capacity(n + 1);
        let mut seg = 0;
        for k in 0..=n {
            let xi = k as f64 * self.grid.h();
            while seg + 1 < n && self.phi[seg + 1] < xi {
                seg += 1;
            }
            let (x0, x1) = (x[seg], x[seg + 1]);
            let (f0, f1) = (self.phi[seg], self.phi[seg + 1]);
            let (d0, d1) = (self.zeta[seg], self.zeta[seg + 1]);
            // Solve the cubic Hermite model of φ on [x0, x1] for φ = ξ by safeguarded Newton.
            let mut t = ((xi - f0) / (f1 - f0)).clamp(0.0, 1.0);
            let hseg = x1 - x0;
            for _ in 0..50 {
                let (v, dv) = hermite(t, f0, f1, d0 * hseg, d1 * hseg);
                let step = (v - xi) / dv;
                let next = (t - step).clamp(0.0, 1.0);
                let done = (next - t).abs() < 1e-15;
                t = next;
                if done {
                    break;
                }
            }
            out.push(x0 + t * hseg);
        }
        out[0] = 0.0;
        out[n] = std::f64::consts::PI;
        Ok(out)
    }
}

/// Cubic Hermite basis on t ∈ [0, 1]; returns value and d/dt.
fn hermite(t: f64, f0: f64, f1: f64, m0: f64, m1: f64) -> (f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    let v = (2.0 * t3 - 3.0 * t2 + 1.0) * f0
        + (t3 - 2.0 * t2 + t) * m0
        + (-2.0 * t3 + 3.0 * t2) * f1
        + (t3 - t2) * m1;
    let dv = (6.0 * t2 - 6.0 * t) * f0
        + (3.0 * t2 - 4.0 * t + 1.0) * m0
        + (-6.0 * t2 + 6.0 * t) * f1
        + (3.0 * t2 - 2.0 * t) * m1;
    (v, dv)
}

/// Cubic Hermite interpolation of gridded samples with central-difference slopes.
pub fn interpolate(grid: &Grid, f: &[f64], x: f64) -> f64 {
    let n = grid.n_x();
    let h = grid.h();
    let pos = (x / h).clamp(0.0, n as f64);
    let i = (pos.floor() as usize).min(n - 1);
    let t = pos - i as f64;
    let slope = |j: usize| -> f64 {
        if j == 0 {
            f[1] - f[0]
        } else if j == n {
            f[n] - f[n - 1]
        } else {
            0.5 * (f[j + 1] - f[j - 1])
        }
    };
    hermite(t, f[i], f[i + 1], slope(i), slope(i + 1)).0
}

/// y(ξ) = q(ψ(ξ))·u(ψ(ξ)) on the uniform ξ-grid.
pub fn barcilon_gottlieb_transform(profile: &CoefficientProfile, u: &[f64]) -> Result<Vec<f64>> {
    if u.len() != profile.grid.len() {
        return Err(Error::InvalidGrid(format!(
            "expected {} samples, got {}",
            profile.grid.len(),
            u.len()
        )));
    }
    let psi = profile.inverse_phi()?;
    Ok(psi
        .iter()
        .map(|&x| interpolate(&profile.grid, &profile.q, x) * interpolate(&profile.grid, u, x))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_generator_gives_unit_profile() {
        let prof = CoefficientProfile::constant(128).unwrap();
        assert!(prof.rho.iter().all(|&r| r == 1.0));
        assert!(prof.p.iter().all(|&p| (p - 1.0).abs() < 1e-14));
        for (phi, x) in prof.phi.iter().zip(prof.grid.x()) {
            assert!((phi - x).abs() < 1e-13);
        }
        assert!(prof.normalization_residual < 1e-14);
    }

    #[test]
    fn rejects_boundary_violation() {
        let gen = Generator::Polynomial { alpha: vec![0.1], beta: vec![0.0] };
        let err = GeneratorPair::new(&gen, 128, 1.0).unwrap_err();
        assert!(matches!(err, Error::BoundaryConstraintViolated { .. }));
    }

    #[test]
    fn rejects_coarse_grid() {
        assert!(GeneratorPair::new(&Generator::Zero, 32, 1.0).is_err());
    }

    #[test]
    fn fd_weights_reproduce_cubic_derivatives() {
        let xs: Vec<f64> = (0..7).map(|i| 0.1 * i as f64).collect();
        let w = fd_weights(0.05, &xs, 3);
        let f: Vec<f64> = xs.iter().map(|x| x * x * x - 2.0 * x).collect();
        let d: Vec<f64> = (0..4).map(|k| w[k].iter().zip(&f).map(|(a, b)| a * b).sum()).collect();
        assert!((d[1] - (3.0 * 0.0025 - 2.0)).abs() < 1e-10);
        assert!((d[2] - 0.3).abs() < 1e-8);
        assert!((d[3] - 6.0).abs() < 1e-6);
    }

    #[test]
    fn sampled_generator_matches_analytic_derivatives() {
        let n = 512;
        let g = Grid::new(n).unwrap();
        let a = 0.05;
        let alpha = g.sample(|x| a * x.sin());
        let beta = g.sample(|x| -a * x.sin());
        let sampled = GeneratorPair::new(&Generator::Samples { alpha, beta }, n, 1.0).unwrap();
        let exact = GeneratorPair::new(&Generator::SinePair { amplitude: a }, n, 1.0).unwrap();
        for d in 1..4 {
            let err = sampled.alpha[d]
                .iter()
                .zip(&exact.alpha[d])
                .fold(0.0_f64, |m, (s, e)| m.max((s - e).abs()));
            assert!(err < 1e-6, "derivative {d}: {err}");
        }
        sampled.check_smoothness().unwrap();
    }

    #[test]
    fn noisy_samples_are_rejected() {
        let n = 256;
        let g = Grid::new(n).unwrap();
        let mut alpha = g.sample(|x| 0.01 * x.sin());
        for (i, v) in alpha.iter_mut().enumerate().skip(1).take(n - 1) {
            *v += if i % 2 == 0 { 1e-4 } else { -1e-4 };
        }
        let beta: Vec<f64> = alpha.iter().map(|v| -v).collect();
        let pair = GeneratorPair::new(&Generator::Samples { alpha, beta }, n, 1.0).unwrap();
        assert!(matches!(pair.check_smoothness(), Err(Error::InsufficientSmoothness { .. })));
    }

    #[test]
    fn polynomial_generator_derivatives() {
        let gen = Generator::Polynomial { alpha: vec![0.0, 1.0, -1.0 / PI], beta: vec![0.0, -1.0, 1.0 / PI] };
        let pair = GeneratorPair::new(&gen, 64, 1.0).unwrap();
        let x = pair.grid.x()[10];
        assert!((pair.alpha[1][10] - (1.0 - 2.0 * x / PI)).abs() < 1e-14);
        assert!((pair.alpha[2][10] + 2.0 / PI).abs() < 1e-14);
        assert_eq!(pair.alpha[3][10], 0.0);
    }

    #[test]
    fn inverse_phi_is_identity_on_constant_profile() {
        let prof = CoefficientProfile::constant(256).unwrap();
        let psi = prof.inverse_phi().unwrap();
        for (p, x) in psi.iter().zip(prof.grid.x()) {
            assert!((p - x).abs() < 1e-12);
        }
    }

    #[test]
    fn transform_is_identity_on_constant_profile() {
        let prof = CoefficientProfile::constant(128).unwrap();
        let u = prof.grid.sample(|x| (3.0 * x).sin() + 0.2 * x);
        let y = barcilon_gottlieb_transform(&prof, &u).unwrap();
        for (a, b) in y.iter().zip(&u) {
            assert!((a - b).abs() < 1e-12);
        }
        let z = barcilon_gottlieb_transform(&prof, &vec![0.0; 129]).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
    }
}
