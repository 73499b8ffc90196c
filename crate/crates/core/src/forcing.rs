//! Nonlinear loads f(t, x, u) and their composition with time-periodic fields.
//!
//! A model is a nonlinearity in u plus an explicit source g(x)·s(t) with s(t) = cos t or 1.
//! Polynomial nonlinearities are composed by exact time convolution; custom closures are
//! evaluated on an oversampled time collocation grid.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{cauchy_product, Projection, TimeFourierField};
use crate::grid::Grid;

/// Pointwise f, ∂_u f, ∂²_u f at (t, x, u).
pub type PointwiseForcing = dyn Fn(f64, f64, f64) -> [f64; 3] + Send + Sync;

#[derive(Clone)]
pub enum Nonlinearity {
    /// Σ_m c_m u^m.
    Polynomial(Vec<f64>),
    Custom(Arc<PointwiseForcing>),
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nonlinearity::Polynomial(c) => f.debug_tuple("Polynomial").field(c).finish(),
            Nonlinearity::Custom(_) => f.write_str("Custom"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceTime {
    /// g(x)·cos t.
    Cosine,
    /// g(x), constant in time.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceShape {
    /// g(x) = A sin x.
    Sine,
    /// g(x) = A.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinModel {
    /// f = g(x) s(t).
    LinearForcing,
    /// f = u + g(x) s(t).
    Affine,
    /// f = u² + g(x) s(t).
    Quadratic,
    /// f = u³ + g(x) s(t).
    Cubic,
}

impl BuiltinModel {
    pub fn coefficients(self) -> Vec<f64> {
        match self {
            BuiltinModel::LinearForcing => vec![],
            BuiltinModel::Affine => vec![0.0, 1.0],
            BuiltinModel::Quadratic => vec![0.0, 0.0, 1.0],
            BuiltinModel::Cubic => vec![0.0, 0.0, 0.0, 1.0],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BuiltinModel::LinearForcing => "linear_forcing",
            BuiltinModel::Affine => "affine",
            BuiltinModel::Quadratic => "quadratic",
            BuiltinModel::Cubic => "cubic",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ForcingModel {
    pub name: String,
    pub nonlinearity: Nonlinearity,
    /// Samples of g on the grid.
    pub source: Vec<f64>,
    pub source_time: SourceTime,
    /// Declared number of continuous u-derivatives.
    pub smoothness_k: u32,
    grid: Grid,
}

impl ForcingModel {
    pub fn polynomial(name: &str, grid: &Grid, coeffs: Vec<f64>, source: Vec<f64>, source_time: SourceTime) -> Self {
        assert_eq!(source.len(), grid.len());
        Self {
            name: name.to_string(),
            nonlinearity: Nonlinearity::Polynomial(coeffs),
            source,
            source_time,
            smoothness_k: u32::MAX,
            grid: grid.clone(),
        }
    }

    pub fn custom(
        name: &str,
        grid: &Grid,
        f: Arc<PointwiseForcing>,
        source: Vec<f64>,
        source_time: SourceTime,
        smoothness_k: u32,
    ) -> Self {
        assert_eq!(source.len(), grid.len());
        Self { name: name.to_string(), nonlinearity: Nonlinearity::Custom(f), source, source_time, smoothness_k, grid: grid.clone() }
    }

    pub fn builtin(model: BuiltinModel, grid: &Grid, shape: SourceShape, amplitude: f64, source_time: SourceTime) -> Self {
        let source = match shape {
            SourceShape::Sine => grid.sample(|x| amplitude * x.sin()),
            SourceShape::Constant => vec![amplitude; grid.len()],
        };
        Self::polynomial(model.name(), grid, model.coefficients(), source, source_time)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Degree of the polynomial nonlinearity, `None` for custom models.
    pub fn degree(&self) -> Option<usize> {
        match &self.nonlinearity {
            Nonlinearity::Polynomial(c) => Some(c.iter().rposition(|&v| v != 0.0).unwrap_or(0)),
            Nonlinearity::Custom(_) => None,
        }
    }

    /// True when ∂_u f does not depend on u.
    pub fn is_affine(&self) -> bool {
        matches!(self.degree(), Some(d) if d <= 1)
    }

    /// [f, ∂_u f, ∂²_u f] at (t, x_i, u).
    pub fn pointwise(&self, t: f64, i: usize, u: f64) -> [f64; 3] {
        let s = match self.source_time {
            SourceTime::Cosine => t.cos(),
            SourceTime::Constant => 1.0,
        };
        let src = self.source[i] * s;
        match &self.nonlinearity {
            Nonlinearity::Polynomial(c) => {
                let mut out = [0.0; 3];
                out[0] = src + c.iter().enumerate().map(|(m, &cm)| cm * u.powi(m as i32)).sum::<f64>();
                out[1] = c.iter().enumerate().skip(1).map(|(m, &cm)| cm * m as f64 * u.powi(m as i32 - 1)).sum();
                out[2] = c
                    .iter()
                    .enumerate()
                    .skip(2)
                    .map(|(m, &cm)| cm * (m * (m - 1)) as f64 * u.powi(m as i32 - 2))
                    .sum();
                out
            }
            Nonlinearity::Custom(f) => {
                let mut v = f(t, self.grid.x()[i], u);
                v[0] += src;
                v
            }
        }
    }

    /// F(u) = f(·, ·, u) (derivative 0), ∂_u f(u) (1) or ∂²_u f(u) (2), truncated to
    /// `out_band` time modes with the discarded tail recorded at Sobolev index 1.
    pub fn compose(&self, u: &TimeFourierField, derivative: u32, out_band: usize) -> Result<TimeFourierField> {
        assert!(derivative <= 2, "only derivatives up to order two are available");
        let out = match &self.nonlinearity {
            Nonlinearity::Polynomial(c) => {
                let d = derivative as usize;
                let coeffs: Vec<f64> = (d..c.len()).map(|m| c[m] * falling(m, d)).collect();
                let full = polynomial_of(&coeffs, u);
                let mut full = full.unwrap_or_else(|| TimeFourierField::zeros(u.grid(), 0));
                if derivative == 0 {
                    full = self.add_source(full);
                }
                full.with_band(out_band, 1.0)
            }
            Nonlinearity::Custom(_) => self.compose_collocated(u, derivative as usize, out_band)?,
        };
        if out.modes().iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFiniteEvaluation);
        }
        Ok(out)
    }

    fn add_source(&self, mut field: TimeFourierField) -> TimeFourierField {
        let (l, weight) = match self.source_time {
            SourceTime::Cosine => (1, 0.5),
            SourceTime::Constant => (0, 1.0),
        };
        if field.n_time() < l {
            field = field.with_band(l, 1.0);
        }
        for (z, g) in field.mode_mut(l).iter_mut().zip(&self.source) {
            *z += weight * g;
        }
        field
    }

    fn compose_collocated(&self, u: &TimeFourierField, derivative: usize, out_band: usize) -> Result<TimeFourierField> {
        let m = (4 * u.n_time() + 1).max(2 * out_band + 2).next_power_of_two();
        let samples = u.to_time_samples(m);
        let mut vals = vec![vec![0.0; u.grid().len()]; m];
        for (k, row) in samples.iter().enumerate() {
            let t = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
            for (i, &uv) in row.iter().enumerate() {
                let v = self.pointwise(t, i, uv)[derivative];
                if !v.is_finite() {
                    return Err(Error::NonFiniteEvaluation);
                }
                vals[k][i] = v;
            }
        }
        let top = m / 2 - 1;
        let full = TimeFourierField::from_time_samples(u.grid(), &vals, top);
        Ok(full.with_band(out_band, 1.0))
    }

    /// f(u + δ) − f(u) − ∂_u f(u)·δ, truncated to `out_band`. Exact binomial expansion for
    /// polynomial models (no cancellation), plain subtraction otherwise.
    pub fn taylor_remainder(&self, u: &TimeFourierField, delta: &TimeFourierField, out_band: usize) -> Result<TimeFourierField> {
        match &self.nonlinearity {
            Nonlinearity::Polynomial(c) => {
                let mut acc = TimeFourierField::zeros(u.grid(), out_band);
                let deg = c.len().saturating_sub(1);
                if deg < 2 {
                    return Ok(acc);
                }
                let upow = powers(u, deg);
                let dpow = powers(delta, deg);
                for (m, &cm) in c.iter().enumerate().skip(2) {
                    if cm == 0.0 {
                        continue;
                    }
                    for i in 2..=m {
                        let term = cauchy_product(&upow[m - i], &dpow[i], out_band);
                        acc = acc.axpy(cm * binomial(m, i), &term);
                    }
                }
                Ok(acc)
            }
            Nonlinearity::Custom(_) => {
                let band = out_band;
                let sum = u.add(delta);
                let f1 = self.compose(&sum, 0, band)?;
                let f0 = self.compose(u, 0, band)?;
                let b = self.compose(u, 1, band + delta.n_time())?;
                let lin = cauchy_product(&b, delta, band);
                Ok(f1.sub(&f0).sub(&lin))
            }
        }
    }
}

fn falling(m: usize, d: usize) -> f64 {
    (0..d).map(|i| (m - i) as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// u⁰, u¹, …, u^deg with full bands.
fn powers(u: &TimeFourierField, deg: usize) -> Vec<TimeFourierField> {
    let one = TimeFourierField::stationary(u.grid(), &vec![1.0; u.grid().len()], 0);
    let mut out = vec![one];
    for k in 1..=deg {
        let prev = &out[k - 1];
        let band = prev.n_time() + u.n_time();
        out.push(if k == 1 { u.clone() } else { cauchy_product(prev, u, band) });
    }
    out
}

/// Σ_m c_m u^m with the full band, `None` for an empty polynomial.
fn polynomial_of(c: &[f64], u: &TimeFourierField) -> Option<TimeFourierField> {
    let deg = c.iter().rposition(|&v| v != 0.0)?;
    let pw = powers(u, deg);
    let mut acc = TimeFourierField::zeros(u.grid(), pw[deg].n_time());
    for (m, &cm) in c.iter().enumerate().take(deg + 1) {
        if cm != 0.0 {
            acc = acc.axpy(cm, &pw[m]);
        }
    }
    Some(acc)
}

/// (time mean f₀, oscillating part f̄) with f₀ + f̄ = F.
pub fn split_mean(f: &TimeFourierField) -> (Vec<f64>, TimeFourierField) {
    (f.mean(), f.project(Projection::Oscillating))
}

/// Product b·h truncated to `out_band`.
pub fn multiply(b: &TimeFourierField, h: &TimeFourierField, out_band: usize) -> TimeFourierField {
    cauchy_product(b, h, out_band)
}
