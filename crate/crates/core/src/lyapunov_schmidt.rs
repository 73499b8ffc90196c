//! Time-mean (bifurcation) equation (p v″)″ = ε Π_V F(v + w), solved by Newton's method in the
//! sine basis for a given oscillating part w.

use nalgebra::{DMatrix, DVector};

use crate::basis::ModalBasis;
use crate::error::{Error, Result};
use crate::fields::{cauchy_product, TimeFourierField};
use crate::forcing::ForcingModel;
use crate::grid::h2_from_sine_coefficients;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QSettings {
    /// Absolute L² tolerance on the residual.
    pub tol_q: f64,
    pub max_iter: usize,
    /// Floor for σ_min(S^{-1/2} J S^{-1/2}).
    pub margin_min: f64,
}

impl Default for QSettings {
    fn default() -> Self {
        Self { tol_q: 1e-10, max_iter: 50, margin_min: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct QSolveState {
    /// Samples of v.
    pub v: Vec<f64>,
    /// Sine coefficients of v.
    pub v_coeffs: DVector<f64>,
    pub epsilon: f64,
    /// L² residual before the first step and after each Newton step.
    pub newton_trace: Vec<f64>,
    pub steps: usize,
    pub nondegeneracy_margin: f64,
    /// Galerkin Jacobian S − ε ∫ sin_k ∂_u f̄ sin_m at the solution (∂_u f̄ the time mean).
    pub jacobian: DMatrix<f64>,
    /// Time mean of ∂_u f(v + w).
    pub mean_derivative: Vec<f64>,
}

impl QSolveState {
    pub fn residual(&self) -> f64 {
        *self.newton_trace.last().expect("trace holds the initial residual")
    }

    pub fn h2_norm(&self) -> f64 {
        h2_from_sine_coefficients(self.v_coeffs.as_slice()).sqrt()
    }
}

/// u = v + w with v stationary.
pub fn total_field(basis: &ModalBasis, v: &DVector<f64>, w: &TimeFourierField) -> TimeFourierField {
    let vs = basis.synthesize_mean(v);
    let mut u = w.clone();
    u.discarded_tail = 0.0;
    for (z, x) in u.mode_mut(0).iter_mut().zip(&vs) {
        z.re += x;
    }
    u
}

fn residual_l2(r: &DVector<f64>) -> f64 {
    // Σ r_k (2/π) sin kx has L² norm √(2/π)|r|.
    (2.0 / std::f64::consts::PI).sqrt() * r.norm()
}

fn q_residual(basis: &ModalBasis, forcing: &ForcingModel, eps: f64, v: &DVector<f64>, w: &TimeFourierField) -> Result<DVector<f64>> {
    let mut r = &basis.stiffness * v;
    if eps != 0.0 {
        let u = total_field(basis, v, w);
        let f0 = forcing.compose(&u, 0, 0)?.mean();
        r -= basis.project_mean(&f0) * eps;
    }
    Ok(r)
}

fn q_jacobian(basis: &ModalBasis, forcing: &ForcingModel, eps: f64, v: &DVector<f64>, w: &TimeFourierField) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let u = total_field(basis, v, w);
    let b0 = forcing.compose(&u, 1, 0)?.mean();
    let mut jac = basis.stiffness.clone();
    if eps != 0.0 {
        jac -= basis.sine_gram(&b0) * eps;
    }
    Ok((jac, b0))
}

/// σ_min of S^{-1/2} J S^{-1/2}; equals 1 for J = S.
pub fn nondegeneracy_margin(basis: &ModalBasis, jac: &DMatrix<f64>) -> f64 {
    let scaled = &basis.stiffness_inv_sqrt * jac * &basis.stiffness_inv_sqrt;
    scaled.singular_values().min()
}

pub fn solve_q(
    basis: &ModalBasis,
    forcing: &ForcingModel,
    epsilon: f64,
    w: &TimeFourierField,
    v_init: Option<&DVector<f64>>,
    settings: &QSettings,
) -> Result<QSolveState> {
    let k = basis.k();
    let mut v = v_init.cloned().unwrap_or_else(|| DVector::zeros(k));
    let mut r = q_residual(basis, forcing, epsilon, &v, w)?;
    let mut trace = vec![residual_l2(&r)];
    let mut steps = 0;
    let mut increases = 0;
    let (mut jac, mut b0);
    loop {
        (jac, b0) = q_jacobian(basis, forcing, epsilon, &v, w)?;
        if steps >= 1 && trace[steps] <= settings.tol_q {
            break;
        }
        if steps >= settings.max_iter || increases >= 3 {
            return Err(Error::NewtonDiverged { iterations: steps, residual: trace[steps] });
        }
        let lu = jac.clone().lu();
        let delta = lu.solve(&(-&r)).ok_or(Error::SingularOperator)?;
        v += delta;
        steps += 1;
        r = q_residual(basis, forcing, epsilon, &v, w)?;
        let res = residual_l2(&r);
        if !res.is_finite() {
            return Err(Error::NewtonDiverged { iterations: steps, residual: res });
        }
        increases = if res > trace[steps - 1] { increases + 1 } else { 0 };
        trace.push(res);
    }
    let margin = nondegeneracy_margin(basis, &jac);
    if margin <= settings.margin_min {
        return Err(Error::DegenerateLinearization { margin });
    }
    Ok(QSolveState {
        v: basis.synthesize_mean(&v),
        v_coeffs: v,
        epsilon,
        newton_trace: trace,
        steps,
        nondegeneracy_margin: margin,
        jacobian: jac,
        mean_derivative: b0,
    })
}

/// D_w v(ε, w)[h] = J⁻¹ ε ∫ sin_k (b h)₀ with b = ∂_u f(v + w).
pub fn mean_response(basis: &ModalBasis, state: &QSolveState, b: &TimeFourierField, h: &TimeFourierField) -> Result<DVector<f64>> {
    let bh0 = cauchy_product(b, h, 0).mean();
    let rhs = basis.project_mean(&bh0) * state.epsilon;
    state.jacobian.clone().lu().solve(&rhs).ok_or(Error::SingularOperator)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzProbe {
    /// ‖v(ε, w₁) − v(ε, w₂)‖_{H²} / ‖w₁ − w₂‖_s, 0 for coincident inputs.
    pub ratio: f64,
    pub degenerate_pair: bool,
}

pub fn q_lipschitz_probe(
    basis: &ModalBasis,
    forcing: &ForcingModel,
    epsilon: f64,
    w1: &TimeFourierField,
    w2: &TimeFourierField,
    s: f64,
    settings: &QSettings,
) -> Result<LipschitzProbe> {
    let dw = w1.sub(w2).sobolev_norm(s);
    if dw == 0.0 {
        return Ok(LipschitzProbe { ratio: 0.0, degenerate_pair: true });
    }
    let a = solve_q(basis, forcing, epsilon, w1, None, settings)?;
    let b = solve_q(basis, forcing, epsilon, w2, None, settings)?;
    let dv = h2_from_sine_coefficients((&a.v_coeffs - &b.v_coeffs).as_slice()).sqrt();
    Ok(LipschitzProbe { ratio: dv / dw, degenerate_pair: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::CoefficientProfile;
    use crate::forcing::{BuiltinModel, SourceShape, SourceTime};

    fn setup(n_x: usize) -> ModalBasis {
        ModalBasis::new(&CoefficientProfile::constant(n_x).unwrap(), 8, Some(32)).unwrap()
    }

    #[test]
    fn zero_epsilon_gives_zero_in_one_step() {
        let basis = setup(128);
        let f = ForcingModel::builtin(BuiltinModel::Cubic, basis.grid(), SourceShape::Sine, 1.0, SourceTime::Constant);
        let w = TimeFourierField::cosine_mode(basis.grid(), &basis.grid().sample(f64::sin), 1, 2);
        let st = solve_q(&basis, &f, 0.0, &w, None, &QSettings::default()).unwrap();
        assert_eq!(st.steps, 1);
        assert!(st.v.iter().all(|&x| x == 0.0));
        assert!((st.nondegeneracy_margin - 1.0).abs() < 1e-10);
    }

    #[test]
    fn linear_homogeneous_case_stays_trivial() {
        let basis = setup(128);
        let f = ForcingModel::builtin(BuiltinModel::Affine, basis.grid(), SourceShape::Sine, 1.0, SourceTime::Cosine);
        let w = TimeFourierField::zeros(basis.grid(), 2);
        let st = solve_q(&basis, &f, 1e-3, &w, None, &QSettings::default()).unwrap();
        assert!(st.h2_norm() <= 1e-10);
    }

    #[test]
    fn first_newton_step_for_static_load() {
        let basis = setup(128);
        let f = ForcingModel::builtin(BuiltinModel::Quadratic, basis.grid(), SourceShape::Sine, 1.0, SourceTime::Constant);
        let w = TimeFourierField::zeros(basis.grid(), 1);
        let one = QSettings { max_iter: 1, tol_q: f64::INFINITY, ..QSettings::default() };
        let st = solve_q(&basis, &f, 1e-3, &w, None, &one).unwrap();
        let s = basis.grid().sample(f64::sin);
        for (a, b) in st.v.iter().zip(&s) {
            assert!((a - 1e-3 * b).abs() < 1e-15);
        }
    }

    #[test]
    fn newton_converges_quadratically() {
        let basis = setup(128);
        let f = ForcingModel::builtin(BuiltinModel::Quadratic, basis.grid(), SourceShape::Sine, 1.0, SourceTime::Constant);
        let w = TimeFourierField::zeros(basis.grid(), 1);
        let st = solve_q(&basis, &f, 0.5, &w, None, &QSettings { tol_q: 1e-13, ..QSettings::default() }).unwrap();
        let t = &st.newton_trace;
        assert!(st.steps >= 3);
        for k in 1..t.len() - 1 {
            if t[k] < 1e-3 && t[k + 1] > 1e-14 {
                assert!(t[k + 1] <= 10.0 * t[k] * t[k], "trace {t:?}");
            }
        }
    }

    #[test]
    fn mean_response_matches_difference_quotient() {
        let basis = setup(128);
        let g = basis.grid().clone();
        let f = ForcingModel::builtin(BuiltinModel::Cubic, &g, SourceShape::Sine, 1.0, SourceTime::Constant);
        let w = TimeFourierField::cosine_mode(&g, &g.sample(|x| 0.3 * x.sin()), 1, 2);
        let h = TimeFourierField::cosine_mode(&g, &g.sample(|x| (2.0 * x).sin()), 1, 2);
        let eps = 0.1;
        let s = QSettings { tol_q: 1e-14, ..QSettings::default() };
        let st = solve_q(&basis, &f, eps, &w, None, &s).unwrap();
        let u = total_field(&basis, &st.v_coeffs, &w);
        let b = f.compose(&u, 1, 4).unwrap();
        let dv = mean_response(&basis, &st, &b, &h).unwrap();
        let d = 1e-5;
        let p = solve_q(&basis, &f, eps, &w.add(&h.scale(d)), None, &s).unwrap();
        let m = solve_q(&basis, &f, eps, &w.sub(&h.scale(d)), None, &s).unwrap();
        let fd = (&p.v_coeffs - &m.v_coeffs) / (2.0 * d);
        let err = (&fd - &dv).amax();
        assert!(err <= 1e-6 * dv.amax(), "{} vs {err}", dv.amax());
    }

    #[test]
    fn lipschitz_probe_cases() {
        let basis = setup(128);
        let g = basis.grid().clone();
        let f = ForcingModel::builtin(BuiltinModel::Cubic, &g, SourceShape::Sine, 1.0, SourceTime::Constant);
        let w = TimeFourierField::cosine_mode(&g, &g.sample(|x| 0.1 * x.sin()), 1, 2);
        let s = QSettings::default();
        let same = q_lipschitz_probe(&basis, &f, 1e-2, &w, &w, 1.0, &s).unwrap();
        assert!(same.degenerate_pair && same.ratio == 0.0);
        let zero = TimeFourierField::zeros(&g, 2);
        assert_eq!(q_lipschitz_probe(&basis, &f, 0.0, &w, &zero, 1.0, &s).unwrap().ratio, 0.0);
        let r1 = q_lipschitz_probe(&basis, &f, 1e-2, &w, &zero, 1.0, &s).unwrap().ratio;
        let r2 = q_lipschitz_probe(&basis, &f, 1e-2, &w.scale(0.1), &zero, 1.0, &s).unwrap().ratio;
        assert!(r1.is_finite() && r2.is_finite() && r2 <= r1 * 1.01);
    }
}
