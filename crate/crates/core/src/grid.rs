//! Uniform grid on [0, π] with trapezoid quadrature and fast sine/cosine transforms.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform grid with `n_x` subintervals (so `n_x + 1` samples including both ends).
#[derive(Clone)]
pub struct Grid {
    n_x: usize,
    h: f64,
    x: Vec<f64>,
    weights: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("n_x", &self.n_x).finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n_x == other.n_x
    }
}

impl Grid {
    pub fn new(n_x: usize) -> Result<Self> {
        if n_x < 8 {
            return Err(Error::InvalidGrid(format!("n_x = {n_x} is below the minimum of 8")));
        }
        let h = std::f64::consts::PI / n_x as f64;
        let x = (0..=n_x).map(|i| i as f64 * h).collect();
        let mut weights = vec![h; n_x + 1];
        weights[0] = 0.5 * h;
        weights[n_x] = 0.5 * h;
        let fft = FftPlanner::new().plan_fft_inverse(2 * n_x);
        Ok(Self { n_x, h, x, weights, fft })
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn len(&self) -> usize {
        self.n_x + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn trapz(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.len());
        f.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    /// Trapezoid integral of the product of two sampled functions.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter().zip(g).zip(&self.weights).map(|((a, b), w)| a * b * w).sum()
    }

    /// Running trapezoid integral ∫₀^{x_i} f.
    pub fn cumtrapz(&self, f: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(f.len());
        let mut acc = 0.0;
        out.push(0.0);
        for i in 1..f.len() {
            acc += 0.5 * self.h * (f[i - 1] + f[i]);
            out.push(acc);
        }
        out
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.x.iter().map(|&x| f(x)).collect()
    }

    /// Evaluates Σ_k c_k e^{ikx_i} for k = 1..=c.len() at every grid point; the real part is the
    /// cosine series and the imaginary part the sine series.
    fn exp_series(&self, coeffs: &[f64]) -> Vec<Complex64> {
        let n2 = 2 * self.n_x;
        assert!(coeffs.len() < n2, "series longer than the grid can represent");
        let mut buf = vec![Complex64::new(0.0, 0.0); n2];
        for (k, &c) in coeffs.iter().enumerate() {
            buf[k + 1] = Complex64::new(c, 0.0);
        }
        self.fft.process(&mut buf);
        buf.truncate(self.n_x + 1);
        buf
    }

    /// Samples of Σ_k b_k sin(kx), k = 1..=b.len().
    pub fn sine_synthesis(&self, b: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = self.exp_series(b).iter().map(|z| z.im).collect();
        out[0] = 0.0;
        out[self.n_x] = 0.0;
        out
    }

    /// Samples of Σ_k b_k cos(kx), k = 1..=b.len().
    pub fn cosine_synthesis(&self, b: &[f64]) -> Vec<f64> {
        self.exp_series(b).iter().map(|z| z.re).collect()
    }

    /// Discrete sine transform: coefficients b_1..b_{n_x-1} with y_i = Σ b_k sin(k x_i) at the
    /// interior points. Exact for sine polynomials of degree below n_x.
    pub fn sine_analysis(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.len());
        let n = self.n_x;
        let mut ext = vec![0.0; n - 1];
        ext.copy_from_slice(&y[1..n]);
        // Σ_i y_i sin(k x_i) is the imaginary part of the forward exponential sum, which equals
        // the inverse transform evaluated at the mirrored index.
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * n];
        for (i, &v) in ext.iter().enumerate() {
            buf[i + 1] = Complex64::new(v, 0.0);
        }
        self.fft.process(&mut buf);
        (1..n).map(|k| 2.0 * buf[k].im / n as f64).collect()
    }

    /// Samples of the `order`-th derivative (0..=4) of the sine series with coefficients `b`.
    pub fn sine_series_derivative(&self, b: &[f64], order: u32) -> Vec<f64> {
        let scaled: Vec<f64> =
            b.iter().enumerate().map(|(k, &c)| c * ((k + 1) as f64).powi(order as i32)).collect();
        match order % 4 {
            0 => self.sine_synthesis(&scaled),
            1 => self.cosine_synthesis(&scaled),
            2 => self.sine_synthesis(&scaled).into_iter().map(|v| -v).collect(),
            _ => self.cosine_synthesis(&scaled).into_iter().map(|v| -v).collect(),
        }
    }

    /// Exact ∫₀^π (y² + y′² + y″²) for the sine series through the samples.
    pub fn h2_norm_squared(&self, y: &[f64]) -> f64 {
        let b = self.sine_analysis(y);
        h2_from_sine_coefficients(&b)
    }
}

/// ∫₀^π (y² + y′² + y″²) for y = Σ b_k sin(kx).
pub fn h2_from_sine_coefficients(b: &[f64]) -> f64 {
    let half_pi = 0.5 * std::f64::consts::PI;
    b.iter()
        .enumerate()
        .map(|(k, &c)| {
            let k2 = ((k + 1) * (k + 1)) as f64;
            c * c * (1.0 + k2 + k2 * k2)
        })
        .sum::<f64>()
        * half_pi
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn trapz_integrates_sine_squared() {
        let g = Grid::new(64).unwrap();
        let s: Vec<f64> = g.sample(|x| x.sin().powi(2));
        assert!((g.trapz(&s) - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn cumtrapz_of_constant_is_linear() {
        let g = Grid::new(16).unwrap();
        let c = g.cumtrapz(&vec![2.0; 17]);
        for (ci, xi) in c.iter().zip(g.x()) {
            assert!((ci - 2.0 * xi).abs() < 1e-14);
        }
    }

    #[test]
    fn sine_analysis_inverts_synthesis() {
        let g = Grid::new(128).unwrap();
        let b: Vec<f64> = (1..40).map(|k| 1.0 / (k * k) as f64).collect();
        let y = g.sine_synthesis(&b);
        let back = g.sine_analysis(&y);
        for (k, c) in b.iter().enumerate() {
            assert!((back[k] - c).abs() < 1e-13, "k={k}");
        }
        assert!(back[50..].iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn derivatives_of_sine_series() {
        let g = Grid::new(64).unwrap();
        let b = [0.0, 0.0, 1.0];
        let d3 = g.sine_series_derivative(&b, 3);
        let d4 = g.sine_series_derivative(&b, 4);
        for (i, &x) in g.x().iter().enumerate() {
            assert!((d3[i] + 27.0 * (3.0 * x).cos()).abs() < 1e-11);
            assert!((d4[i] - 81.0 * (3.0 * x).sin()).abs() < 1e-11);
        }
    }

    #[test]
    fn h2_norm_of_sine() {
        let g = Grid::new(64).unwrap();
        let s = g.sample(f64::sin);
        assert!((g.h2_norm_squared(&s) - 1.5 * PI).abs() < 1e-12);
    }
}
