//! Run configuration read from a TOML file with sections `coefficients`, `forcing`, `field`,
//! `solver`, `sieve` and `output`. Every key has a default, so an empty file is valid.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::basis::ModalBasis;
use crate::coefficients::{build_profile, CoefficientProfile, Generator, GeneratorPair};
use crate::error::{Error, Result};
use crate::forcing::{BuiltinModel, ForcingModel, SourceShape, SourceTime};
use crate::grid::Grid;
use crate::lyapunov_schmidt::QSettings;
use crate::nash_moser::{GatePolicy, NashMoserSettings};
use crate::sieve::MeasureParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorName {
    Zero,
    SinePair,
    Polynomial,
    Samples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoefficientsConfig {
    pub generator: GeneratorName,
    /// a in α = a sin x, β = −a sin x.
    pub amplitude: f64,
    /// Polynomial coefficients or grid samples of α and β.
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub n_x: usize,
    pub p0: f64,
}

impl Default for CoefficientsConfig {
    fn default() -> Self {
        Self { generator: GeneratorName::Zero, amplitude: 0.0, alpha: vec![], beta: vec![], n_x: 512, p0: 1.0 }
    }
}

impl CoefficientsConfig {
    pub fn generator(&self) -> Generator {
        match self.generator {
            GeneratorName::Zero => Generator::Zero,
            GeneratorName::SinePair => Generator::SinePair { amplitude: self.amplitude },
            GeneratorName::Polynomial => Generator::Polynomial { alpha: self.alpha.clone(), beta: self.beta.clone() },
            GeneratorName::Samples => Generator::Samples { alpha: self.alpha.clone(), beta: self.beta.clone() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForcingConfig {
    /// Built-in model name; ignored when `coefficients` is given.
    pub model: BuiltinModel,
    /// Polynomial coefficients c_0, c_1, … of f = Σ c_m u^m + g(x)s(t).
    pub coefficients: Option<Vec<f64>>,
    pub shape: SourceShape,
    pub amplitude: f64,
    pub source_time: SourceTime,
}

impl Default for ForcingConfig {
    fn default() -> Self {
        Self { model: BuiltinModel::Cubic, coefficients: None, shape: SourceShape::Sine, amplitude: 1.0, source_time: SourceTime::Cosine }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldConfig {
    /// Number of beam modes J in the range equation.
    pub j: usize,
    /// Sine modes for the time mean; `None` picks the eigensolver default.
    pub k: Option<usize>,
    /// Sobolev index s.
    pub s: f64,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self { j: 16, k: None, s: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub omega: f64,
    pub gamma: f64,
    pub tau: f64,
    pub n0: usize,
    pub stages: usize,
    pub n_cap: usize,
    pub tol_stage: f64,
    pub max_iter: usize,
    pub tol_q: f64,
    pub q_max_iter: usize,
    pub margin_min: f64,
    pub gate: GatePolicy,
    pub enforce_integer_family: bool,
    /// Seed for randomized probes (right-hand sides in `linop-check`).
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let nm = NashMoserSettings::default();
        let q = QSettings::default();
        Self {
            epsilon: 1e-3,
            omega: 2.5,
            gamma: nm.gamma,
            tau: nm.tau,
            n0: nm.n0,
            stages: nm.stages,
            n_cap: nm.n_cap,
            tol_stage: nm.tol_stage,
            max_iter: nm.max_iter,
            tol_q: q.tol_q,
            q_max_iter: q.max_iter,
            margin_min: q.margin_min,
            gate: nm.gate,
            enforce_integer_family: nm.enforce_integer,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SieveConfig {
    pub omega_range: (f64, f64),
    /// γ values for the ladder fit.
    pub gamma_ladder: Vec<f64>,
    pub l_max: usize,
    pub delta7: Option<f64>,
}

impl Default for SieveConfig {
    fn default() -> Self {
        Self { omega_range: (2.0, 3.0), gamma_ladder: vec![0.04, 0.02, 0.01], l_max: 64, delta7: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Also write the coefficient table of u.
    pub write_solution: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("flexure-out"), write_solution: true }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub coefficients: CoefficientsConfig,
    pub forcing: ForcingConfig,
    pub field: FieldConfig,
    pub solver: SolverConfig,
    pub sieve: SieveConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.solver;
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(s.tau > 1.0 && s.tau < 2.0) {
            return bad("solver.tau must lie in (1, 2)");
        }
        if !(s.gamma > 0.0 && s.gamma < 1.0) {
            return bad("solver.gamma must lie in (0, 1)");
        }
        if !(s.omega > 0.0) || !s.epsilon.is_finite() {
            return bad("solver.omega must be positive and solver.epsilon finite");
        }
        for (name, v) in [("solver.tol_stage", s.tol_stage), ("solver.tol_q", s.tol_q), ("solver.margin_min", s.margin_min)] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if s.n0 < 2 || s.n_cap < s.n0 || s.max_iter == 0 || s.q_max_iter == 0 {
            return bad("solver.n0 >= 2, solver.n_cap >= n0 and positive iteration limits are required");
        }
        if self.field.j == 0 || !(self.field.s >= 0.0) {
            return bad("field.j must be positive and field.s non-negative");
        }
        let (a, b) = self.sieve.omega_range;
        if !(b > a) || self.sieve.l_max == 0 {
            return bad("sieve.omega_range must be increasing and sieve.l_max positive");
        }
        if self.sieve.gamma_ladder.iter().any(|g| !(*g > 0.0 && *g < 1.0)) {
            return bad("sieve.gamma_ladder entries must lie in (0, 1)");
        }
        if let Some(c) = &self.forcing.coefficients {
            if c.iter().any(|x| !x.is_finite()) {
                return bad("forcing.coefficients must be finite");
            }
        }
        Ok(())
    }

    pub fn profile(&self) -> Result<CoefficientProfile> {
        let c = &self.coefficients;
        build_profile(&GeneratorPair::new(&c.generator(), c.n_x, c.p0)?)
    }

    pub fn forcing_model(&self, grid: &Grid) -> ForcingModel {
        let f = &self.forcing;
        match &f.coefficients {
            Some(c) => {
                let src = ForcingModel::builtin(BuiltinModel::LinearForcing, grid, f.shape, f.amplitude, f.source_time).source;
                ForcingModel::polynomial("polynomial", grid, c.clone(), src, f.source_time)
            }
            None => ForcingModel::builtin(f.model, grid, f.shape, f.amplitude, f.source_time),
        }
    }

    pub fn basis(&self, profile: &CoefficientProfile) -> Result<ModalBasis> {
        ModalBasis::new(profile, self.field.j, self.field.k)
    }

    pub fn q_settings(&self) -> QSettings {
        let s = &self.solver;
        QSettings { tol_q: s.tol_q, max_iter: s.q_max_iter, margin_min: s.margin_min }
    }

    pub fn nash_moser_settings(&self) -> NashMoserSettings {
        let s = &self.solver;
        NashMoserSettings {
            n0: s.n0,
            stages: s.stages,
            n_cap: s.n_cap,
            gamma: s.gamma,
            tau: s.tau,
            s: self.field.s,
            tol_stage: s.tol_stage,
            max_iter: s.max_iter,
            max_ratio: 0.99,
            gate: s.gate,
            enforce_integer: s.enforce_integer_family,
            q: self.q_settings(),
        }
    }

    pub fn measure_params(&self, gamma: f64) -> MeasureParams {
        MeasureParams {
            epsilon: self.solver.epsilon,
            omega_lo: self.sieve.omega_range.0,
            omega_hi: self.sieve.omega_range.1,
            gamma,
            tau: self.solver.tau,
            l_max: self.sieve.l_max,
            delta7: self.sieve.delta7,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c, RunConfig::default());
        c.validate().unwrap();
    }

    #[test]
    fn round_trip() {
        let mut c = RunConfig::default();
        c.coefficients.generator = GeneratorName::SinePair;
        c.coefficients.amplitude = 0.05;
        c.forcing.coefficients = Some(vec![0.0, 0.0, 1.0]);
        c.sieve.delta7 = Some(0.5);
        let back = RunConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn sections_parse() {
        let text = r#"
[coefficients]
generator = "sine_pair"
amplitude = 0.05
n_x = 256

[forcing]
model = "quadratic"
source_time = "constant"

[solver]
epsilon = 0.002
omega = 2.3
gate = "refuse"
"#;
        let c = RunConfig::from_toml(text).unwrap();
        assert_eq!(c.coefficients.generator(), Generator::SinePair { amplitude: 0.05 });
        assert_eq!(c.coefficients.n_x, 256);
        assert_eq!(c.forcing.model, BuiltinModel::Quadratic);
        assert_eq!(c.solver.gate, GatePolicy::Refuse);
        c.validate().unwrap();
    }

    #[test]
    fn invalid_values_are_rejected() {
        for text in ["[solver]\ntau = 2.5", "[solver]\ngamma = 0.0", "[solver]\ntol_q = -1.0", "[sieve]\nomega_range = [3.0, 2.0]"] {
            let c = RunConfig::from_toml(text).unwrap();
            assert!(matches!(c.validate(), Err(Error::Config(_))), "{text}");
        }
        assert!(RunConfig::from_toml("[solver]\nunknown = 1").is_err());
        assert!(RunConfig::from_toml("[forcing]\nmodel = \"quartic\"").is_err());
    }
}
