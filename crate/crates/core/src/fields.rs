//! Time-periodic fields u(t, x) = Σ_l u_l(x) e^{ilt} stored as spatial samples per time mode.
//!
//! Only l ≥ 0 is stored; negative modes are the complex conjugates, so every field is real.

use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::eigensolver::Spectrum;
use crate::coefficients::CoefficientProfile;
use crate::error::Result;
use crate::grid::Grid;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct TimeFourierField {
    grid: Grid,
    modes: Vec<Vec<Complex64>>,
    /// Sobolev norm (at the index used by the truncating operation) of modes discarded when the
    /// field was produced.
    pub discarded_tail: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    /// Time mean (l = 0).
    Mean,
    /// Zero-mean part (l ≠ 0).
    Oscillating,
    /// 1 ≤ |l| ≤ N.
    Low(usize),
    /// |l| > N.
    High(usize),
}

/// Weight 1 + |l|^{2s}, with the l = 0 term taken as 1 for every s.
pub fn sobolev_weight(l: usize, s: f64) -> f64 {
    if l == 0 {
        1.0
    } else {
        1.0 + (l as f64).powf(2.0 * s)
    }
}

impl TimeFourierField {
    pub fn zeros(grid: &Grid, n_time: usize) -> Self {
        Self { grid: grid.clone(), modes: vec![vec![ZERO; grid.len()]; n_time + 1], discarded_tail: 0.0 }
    }

    /// Builds a field from modes l = 0..=N. The imaginary part of the mean is dropped.
    pub fn from_modes(grid: &Grid, mut modes: Vec<Vec<Complex64>>) -> Self {
        assert!(!modes.is_empty(), "a field needs at least the mean mode");
        for m in &modes {
            assert_eq!(m.len(), grid.len(), "mode length does not match the grid");
        }
        for z in modes[0].iter_mut() {
            z.im = 0.0;
        }
        Self { grid: grid.clone(), modes, discarded_tail: 0.0 }
    }

    /// u(t, x) = a(x) (time independent).
    pub fn stationary(grid: &Grid, a: &[f64], n_time: usize) -> Self {
        let mut f = Self::zeros(grid, n_time);
        f.modes[0] = a.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        f
    }

    /// u(t, x) = a(x) cos(l t).
    pub fn cosine_mode(grid: &Grid, a: &[f64], l: usize, n_time: usize) -> Self {
        assert!(l <= n_time);
        let mut f = Self::zeros(grid, n_time);
        if l == 0 {
            f.modes[0] = a.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        } else {
            f.modes[l] = a.iter().map(|&v| Complex64::new(0.5 * v, 0.0)).collect();
        }
        f
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n_time(&self) -> usize {
        self.modes.len() - 1
    }

    pub fn modes(&self) -> &[Vec<Complex64>] {
        &self.modes
    }

    pub fn mode(&self, l: usize) -> &[Complex64] {
        &self.modes[l]
    }

    pub fn mode_mut(&mut self, l: usize) -> &mut Vec<Complex64> {
        &mut self.modes[l]
    }

    /// u_l for any integer l, zero outside the stored band.
    pub fn coefficient(&self, l: i64, i: usize) -> Complex64 {
        let a = l.unsigned_abs() as usize;
        if a > self.n_time() {
            return ZERO;
        }
        let z = self.modes[a][i];
        if l < 0 {
            z.conj()
        } else {
            z
        }
    }

    /// Real samples of the mean mode.
    pub fn mean(&self) -> Vec<f64> {
        self.modes[0].iter().map(|z| z.re).collect()
    }

    /// Re-bands the field to `n_time` modes, zero-padding or dropping (tail recorded at index `s`).
    pub fn with_band(&self, n_time: usize, s: f64) -> Self {
        let mut out = Self::zeros(&self.grid, n_time);
        for l in 0..=n_time.min(self.n_time()) {
            out.modes[l].clone_from(&self.modes[l]);
        }
        out.discarded_tail = if n_time < self.n_time() { self.project(Projection::High(n_time)).sobolev_norm(s) } else { 0.0 };
        out
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        for m in &mut out.modes {
            for z in m.iter_mut() {
                *z *= c;
            }
        }
        out
    }

    /// Sum of two fields on the same grid; the band is the larger of the two.
    pub fn add(&self, other: &Self) -> Self {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-1.0, other)
    }

    /// self + c·other.
    pub fn axpy(&self, c: f64, other: &Self) -> Self {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let n = self.n_time().max(other.n_time());
        let mut out = self.with_band(n, 0.0);
        out.discarded_tail = 0.0;
        for (l, m) in other.modes.iter().enumerate() {
            for (z, w) in out.modes[l].iter_mut().zip(m) {
                *z += c * w;
            }
        }
        out
    }

    /// Squared H² norm of mode l: real and imaginary parts summed.
    pub fn mode_h2_squared(&self, l: usize) -> f64 {
        let re: Vec<f64> = self.modes[l].iter().map(|z| z.re).collect();
        let im: Vec<f64> = self.modes[l].iter().map(|z| z.im).collect();
        self.grid.h2_norm_squared(&re) + self.grid.h2_norm_squared(&im)
    }

    /// ‖u‖_s = (Σ_{l∈ℤ} ‖u_l‖²_{H²} (1 + |l|^{2s}))^{1/2}.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        (0..=self.n_time())
            .map(|l| {
                let mult = if l == 0 { 1.0 } else { 2.0 };
                mult * self.mode_h2_squared(l) * sobolev_weight(l, s)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// max over (t, x) of |u| bounded by Σ_l max_x |u_l|.
    pub fn sup_bound(&self) -> f64 {
        self.modes
            .iter()
            .enumerate()
            .map(|(l, m)| {
                let mult = if l == 0 { 1.0 } else { 2.0 };
                mult * m.iter().fold(0.0_f64, |a, z| a.max(z.norm()))
            })
            .sum()
    }

    pub fn project(&self, which: Projection) -> Self {
        let keep = |l: usize| match which {
            Projection::Mean => l == 0,
            Projection::Oscillating => l != 0,
            Projection::Low(n) => l >= 1 && l <= n,
            Projection::High(n) => l > n,
        };
        let mut out = self.clone();
        out.discarded_tail = 0.0;
        for (l, m) in out.modes.iter_mut().enumerate() {
            if !keep(l) {
                m.iter_mut().for_each(|z| *z = ZERO);
            }
        }
        out
    }

    /// True if every coefficient outside 1 ≤ |l| ≤ n is exactly zero.
    pub fn supported_in_band(&self, n: usize) -> bool {
        self.modes
            .iter()
            .enumerate()
            .filter(|(l, _)| *l == 0 || *l > n)
            .all(|(_, m)| m.iter().all(|z| z.re == 0.0 && z.im == 0.0))
    }

    /// Samples u(t_k, x_i) at t_k = 2πk/m, returned as m rows of spatial samples.
    pub fn to_time_samples(&self, m: usize) -> Vec<Vec<f64>> {
        assert!(m > 2 * self.n_time(), "collocation grid too coarse for the band");
        let nx = self.grid.len();
        let mut planner = FftPlanner::new();
        let inv = planner.plan_fft_inverse(m);
        let mut out = vec![vec![0.0; nx]; m];
        let mut buf = vec![ZERO; m];
        for i in 0..nx {
            buf.iter_mut().for_each(|z| *z = ZERO);
            buf[0] = self.modes[0][i];
            for l in 1..=self.n_time() {
                buf[l] = self.modes[l][i];
                buf[m - l] = self.modes[l][i].conj();
            }
            inv.process(&mut buf);
            for k in 0..m {
                out[k][i] = buf[k].re;
            }
        }
        out
    }

    /// Inverse of `to_time_samples`, keeping modes 0..=n_time.
    pub fn from_time_samples(grid: &Grid, samples: &[Vec<f64>], n_time: usize) -> Self {
        let m = samples.len();
        assert!(m > 2 * n_time);
        let nx = grid.len();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(m);
        let mut modes = vec![vec![ZERO; nx]; n_time + 1];
        let mut buf = vec![ZERO; m];
        let scale = 1.0 / m as f64;
        for i in 0..nx {
            for k in 0..m {
                buf[k] = Complex64::new(samples[k][i], 0.0);
            }
            fwd.process(&mut buf);
            for l in 0..=n_time {
                modes[l][i] = buf[l] * scale;
            }
        }
        Self::from_modes(grid, modes)
    }

    /// Evaluates u at one time instant.
    pub fn at_time(&self, t: f64) -> Vec<f64> {
        let mut out: Vec<f64> = self.modes[0].iter().map(|z| z.re).collect();
        for l in 1..=self.n_time() {
            let e = Complex64::from_polar(2.0, l as f64 * t);
            for (o, z) in out.iter_mut().zip(&self.modes[l]) {
                *o += (z * e).re;
            }
        }
        out
    }

    /// Writes the coefficient table as CSV with columns (part, l, x_index, value).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        crate::report::field_table(self).write(path)
    }
}

/// Smallest power of two that is at least `n`.
fn next_pow2(n: usize) -> usize {
    n.next_power_of_two()
}

/// Pointwise product by alias-free FFT collocation. The result carries the full band
/// N_u + N_v.
pub fn field_product(u: &TimeFourierField, v: &TimeFourierField) -> TimeFourierField {
    assert_eq!(u.grid, v.grid, "fields live on different grids");
    let band = u.n_time() + v.n_time();
    let m = next_pow2(2 * band + 1);
    let us = u.to_time_samples(m);
    let vs = v.to_time_samples(m);
    let prod: Vec<Vec<f64>> =
        us.iter().zip(&vs).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).collect()).collect();
    TimeFourierField::from_time_samples(&u.grid, &prod, band)
}

/// Exact time convolution (uv)_l = Σ_{l₁+l₂=l} u_{l₁} v_{l₂} for 0 ≤ l ≤ `out_band`.
pub fn cauchy_product(u: &TimeFourierField, v: &TimeFourierField, out_band: usize) -> TimeFourierField {
    assert_eq!(u.grid, v.grid, "fields live on different grids");
    let nx = u.grid.len();
    let (nu, nv) = (u.n_time() as i64, v.n_time() as i64);
    let mut modes = vec![vec![ZERO; nx]; out_band + 1];
    for (l, out) in modes.iter_mut().enumerate() {
        let l = l as i64;
        let lo = (-nu).max(l - nv);
        let hi = nu.min(l + nv);
        for l1 in lo..=hi {
            let l2 = l - l1;
            let a = &u.modes[l1.unsigned_abs() as usize];
            let b = &v.modes[l2.unsigned_abs() as usize];
            match (l1 < 0, l2 < 0) {
                (false, false) => out.iter_mut().zip(a.iter().zip(b)).for_each(|(o, (x, y))| *o += x * y),
                (true, false) => out.iter_mut().zip(a.iter().zip(b)).for_each(|(o, (x, y))| *o += x.conj() * y),
                (false, true) => out.iter_mut().zip(a.iter().zip(b)).for_each(|(o, (x, y))| *o += x * y.conj()),
                (true, true) => out.iter_mut().zip(a.iter().zip(b)).for_each(|(o, (x, y))| *o += (x * y).conj()),
            }
        }
    }
    TimeFourierField::from_modes(&u.grid, modes)
}

/// Norm built on the eigen-coordinates of a beam spectrum: per mode
/// ‖y‖²_{ε,w} = Σ_j (λ_j + M) |⟨y, ψ_j⟩_ρ|², weighted by 1 + |l|^{2s} in time.
pub fn eigen_sobolev_norm(u: &TimeFourierField, profile: &CoefficientProfile, spectrum: &Spectrum, s: f64) -> f64 {
    let grid = u.grid();
    let mut total = 0.0;
    for l in 0..=u.n_time() {
        let mult = if l == 0 { 1.0 } else { 2.0 };
        let re: Vec<f64> = u.mode(l).iter().zip(&profile.rho).map(|(z, r)| z.re * r).collect();
        let im: Vec<f64> = u.mode(l).iter().zip(&profile.rho).map(|(z, r)| z.im * r).collect();
        let mut acc = 0.0;
        for (j, psi) in spectrum.eigenfunctions.iter().enumerate() {
            let cr = grid.inner(&re, psi);
            let ci = grid.inner(&im, psi);
            acc += (spectrum.lambdas[j] + spectrum.shift_m) * (cr * cr + ci * ci);
        }
        total += mult * acc * sobolev_weight(l, s);
    }
    total.sqrt()
}
