//! Nash–Moser iteration for the range equation on the truncations N_n = ⌊e^{c2ⁿ}⌋, c = ln N₀,
//! and certification of the assembled solution u = v + w by its strong-form residual.

use std::time::Instant;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::asymptotics::least_squares_slope;
use crate::basis::{ModalBasis, ModalField};
use crate::eigensolver::{apply_operator_to_series, solve_spectrum, EigenProblem, Spectrum};
use crate::error::{Error, Result};
use crate::fields::TimeFourierField;
use crate::forcing::ForcingModel;
use crate::linop::{assemble_linop, divisor_diagnostics, range_residual, DivisorReport};
use crate::lyapunov_schmidt::{solve_q, total_field, QSettings, QSolveState};
use crate::sieve::{check_melnikov, MelnikovCertificate, MuSource};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationSchedule {
    pub n0: usize,
    pub c: f64,
    pub n_max: usize,
    /// Realized truncations N_0, …, N_{n_max} after clamping.
    pub ns: Vec<usize>,
    /// Unclamped values N₀^{2ⁿ} (saturating).
    pub raw_ns: Vec<usize>,
    pub n_cap: usize,
    pub clamped: bool,
}

impl IterationSchedule {
    /// N_n = N₀^{2ⁿ} (the exact value of ⌊e^{c2ⁿ}⌋), clamped at `n_cap`. Stages after the first
    /// clamped one are dropped so the sequence stays strictly increasing.
    pub fn new(n0: usize, n_max: usize, n_cap: usize) -> Result<Self> {
        if n0 < 2 {
            return Err(Error::InvalidParameter("N0 must be at least 2".into()));
        }
        if n_cap < n0 {
            return Err(Error::InvalidParameter("N_cap must be at least N0".into()));
        }
        let mut ns = vec![n0];
        let mut raw_ns = vec![n0];
        let mut clamped = false;
        let mut cur = n0;
        for _ in 0..n_max {
            cur = cur.saturating_mul(cur);
            raw_ns.push(cur);
            if cur > n_cap {
                clamped = true;
                if *ns.last().expect("nonempty") < n_cap {
                    ns.push(n_cap);
                }
                break;
            }
            ns.push(cur);
        }
        Ok(Self { n0, c: (n0 as f64).ln(), n_max: ns.len() - 1, ns, raw_ns, n_cap, clamped })
    }
}

/// What to do when a stage's Melnikov certificate fails after stage 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GatePolicy {
    /// Abort with `UncertifiedParameters`.
    Refuse,
    /// Record the failure as a deviation flag and continue.
    Flag,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NashMoserSettings {
    pub n0: usize,
    pub stages: usize,
    pub n_cap: usize,
    pub gamma: f64,
    pub tau: f64,
    /// Sobolev index s of the time scale.
    pub s: f64,
    pub tol_stage: f64,
    pub max_iter: usize,
    pub max_ratio: f64,
    pub gate: GatePolicy,
    pub enforce_integer: bool,
    pub q: QSettings,
}

impl Default for NashMoserSettings {
    fn default() -> Self {
        Self {
            n0: 4,
            stages: 2,
            n_cap: 64,
            gamma: 1e-2,
            tau: 1.5,
            s: 2.0,
            tol_stage: 1e-12,
            max_iter: 200,
            max_ratio: 0.99,
            gate: GatePolicy::Flag,
            enforce_integer: false,
            q: QSettings::default(),
        }
    }
}

impl NashMoserSettings {
    pub fn sigma(&self) -> f64 {
        self.tau * (self.tau - 1.0) / (2.0 - self.tau)
    }

    pub fn kappa(&self) -> f64 {
        6.0 * self.tau + 4.0 * self.sigma() + 2.0
    }
}

/// Shared, immutable inputs of one solve.
#[derive(Debug, Clone)]
pub struct SolveContext<'a> {
    pub basis: &'a ModalBasis,
    pub forcing: &'a ForcingModel,
    pub settings: NashMoserSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageRecord {
    pub stage: usize,
    pub n: usize,
    /// ‖h_n‖_s (‖w₀‖_s at stage 0).
    pub h_norm: f64,
    /// ‖Φ_{N_n}(w_n)‖_s.
    pub residual_norm: f64,
    pub w_norm_s_sigma: f64,
    pub w_norm_s_kappa: f64,
    pub iterations: usize,
    /// Largest ratio of successive fixed-point steps.
    pub contraction_ratio: f64,
    /// max_j |λ_j(ε, w_n) − λ_j(ε, w_{n−1})| and the same divided by ‖w_n − w_{n−1}‖_s.
    pub lambda_shift: f64,
    pub lambda_lipschitz: f64,
    pub certificate_passed: bool,
    pub worst_margin: f64,
    pub q_margin: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct NashMoserState {
    pub epsilon: f64,
    pub omega: f64,
    pub schedule: IterationSchedule,
    pub stage: usize,
    pub w: ModalField,
    pub q: QSolveState,
    /// Spectrum of the eigenproblem with potential ε·mean_t ∂_u f(v + w_n).
    pub spectrum: Spectrum,
    pub records: Vec<StageRecord>,
    pub certificates: Vec<MelnikovCertificate>,
    /// Per-stage μ sources used by the certificates.
    pub mu_sources: Vec<MuSource>,
    pub divisors: Option<DivisorReport>,
    pub flags: Vec<String>,
}

impl NashMoserState {
    pub fn n(&self) -> usize {
        self.schedule.ns[self.stage]
    }

    pub fn h_norms(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.h_norm).collect()
    }

    pub fn residual_norms(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.residual_norm).collect()
    }
}

fn modal_norm(basis: &ModalBasis, w: &ModalField, s: f64) -> f64 {
    basis.synthesize(w, w.n()).sobolev_norm(s)
}

fn potential_spectrum(basis: &ModalBasis, q: &QSolveState) -> Result<Spectrum> {
    let potential: Vec<f64> = q.mean_derivative.iter().map(|b| q.epsilon * b).collect();
    let problem = EigenProblem::new(&basis.profile, potential)?;
    solve_spectrum(&problem, basis.j())
}

fn certify(
    ctx: &SolveContext,
    epsilon: f64,
    omega: f64,
    n: usize,
    spectrum: &Spectrum,
) -> Result<(MelnikovCertificate, MuSource)> {
    let st = &ctx.settings;
    let mu = MuSource::from_spectrum(spectrum, None);
    let cert = check_melnikov(epsilon, omega, st.gamma, st.tau, n, &mu)?;
    Ok((cert, mu))
}

fn describe_failure(c: &MelnikovCertificate) -> String {
    let parts: Vec<String> = [c.worst_spectral, c.worst_integer]
        .into_iter()
        .flatten()
        .filter(|k| k.margin <= 1.0)
        .map(|k| format!("{:?} condition fails at l = {}, j = {} (divisor {:.3e}, margin {:.3e})", k.family, k.l, k.j, k.divisor, k.margin))
        .collect();
    if parts.is_empty() {
        format!("N = {}: certificate failed", c.n)
    } else {
        format!("N = {}: {}", c.n, parts.join("; "))
    }
}

/// Stage 0: Picard iteration w ↦ −ε P_{N₀} F̂(v(w) + w)/(ω²l² − λ̄_j) on the certified set A₀.
pub fn solve_stage0(ctx: &SolveContext, epsilon: f64, omega: f64, schedule: &IterationSchedule) -> Result<NashMoserState> {
    let start = Instant::now();
    let st = &ctx.settings;
    let basis = ctx.basis;
    let n = schedule.ns[0];
    let (cert, mu) = certify(ctx, epsilon, omega, n, &basis.spectrum)?;
    if !cert.gate(st.enforce_integer) {
        return Err(Error::UncertifiedParameters { stage: 0, detail: describe_failure(&cert) });
    }
    let j = basis.j();
    let divisor = |l: usize, k: usize| (omega * l as f64).powi(2) - basis.lambda_bar(k);
    let mut w = ModalField::zeros(n, j);
    let mut q = solve_q(basis, ctx.forcing, epsilon, &basis.synthesize(&w, n), None, &st.q)?;
    let mut prev_step: Option<f64> = None;
    let mut max_ratio = 0.0_f64;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let u = total_field(basis, &q.v_coeffs, &basis.synthesize(&w, n));
        let fhat = if epsilon != 0.0 {
            basis.project(&ctx.forcing.compose(&u, 0, n)?, n)
        } else {
            ModalField::zeros(n, j)
        };
        let mut next = ModalField::zeros(n, j);
        for l in 1..=n {
            for k in 1..=j {
                next.set(l, k, -epsilon * fhat.get(l, k) / divisor(l, k));
            }
        }
        let step = modal_norm(basis, &next.axpy(-1.0, &w), st.s);
        w = next;
        q = solve_q(basis, ctx.forcing, epsilon, &basis.synthesize(&w, n), Some(&q.v_coeffs), &st.q)?;
        if let Some(p) = prev_step {
            if p > 0.0 {
                let ratio = step / p;
                max_ratio = max_ratio.max(ratio);
                if ratio >= st.max_ratio {
                    return Err(Error::ContractionFailed { stage: 0, ratio });
                }
            }
        }
        if step == 0.0 || step <= st.tol_stage * modal_norm(basis, &w, st.s) {
            break;
        }
        if iterations >= st.max_iter {
            return Err(Error::ContractionFailed { stage: 0, ratio: max_ratio });
        }
        prev_step = Some(step);
    }
    let spectrum = potential_spectrum(basis, &q)?;
    let w_ss = modal_norm(basis, &w, st.s + st.sigma());
    if w_ss > 1.0 {
        return Err(Error::SmallnessViolated { stage: 0, norm: w_ss });
    }
    let residual = range_residual(basis, ctx.forcing, epsilon, omega, &w, &q.v_coeffs, n)?;
    let record = StageRecord {
        stage: 0,
        n,
        h_norm: modal_norm(basis, &w, st.s),
        residual_norm: modal_norm(basis, &residual, st.s),
        w_norm_s_sigma: w_ss,
        w_norm_s_kappa: modal_norm(basis, &w, st.s + st.kappa()),
        iterations,
        contraction_ratio: max_ratio,
        lambda_shift: 0.0,
        lambda_lipschitz: 0.0,
        certificate_passed: cert.passed,
        worst_margin: cert.worst_margin,
        q_margin: q.nondegeneracy_margin,
        seconds: start.elapsed().as_secs_f64(),
    };
    let mut flags = Vec::new();
    if !cert.passed {
        flags.push(format!("stage 0 certificate: {}", describe_failure(&cert)));
    }
    Ok(NashMoserState {
        epsilon,
        omega,
        schedule: schedule.clone(),
        stage: 0,
        w,
        q,
        spectrum,
        records: vec![record],
        certificates: vec![cert],
        mu_sources: vec![mu],
        divisors: None,
        flags,
    })
}

/// Solves J_Q δv = ε Π_V[b h + T(u; h + δv)] for δv by fixed-point iteration and returns
/// (δv, T(u; h + δv), e) with e = J_Q⁻¹ ε Π_V T.
struct MeanCorrection {
    delta: TimeFourierField,
    remainder: TimeFourierField,
    e: DVector<f64>,
}

fn mean_correction(
    ctx: &SolveContext,
    q: &QSolveState,
    u: &TimeFourierField,
    b: &TimeFourierField,
    h: &TimeFourierField,
    band: usize,
) -> Result<MeanCorrection> {
    let basis = ctx.basis;
    let eps = q.epsilon;
    let lu = q.jacobian.clone().lu();
    let bh0 = crate::fields::cauchy_product(b, h, 0).mean();
    let lin = basis.project_mean(&bh0) * eps;
    let with_mean = |dv: &DVector<f64>| total_field(basis, dv, h);
    let mut dv = lu.solve(&lin).ok_or(Error::SingularOperator)?;
    let mut prev = f64::INFINITY;
    for _ in 0..ctx.settings.max_iter {
        let t = ctx.forcing.taylor_remainder(u, &with_mean(&dv), 0)?;
        let next = lu.solve(&(&lin + basis.project_mean(&t.mean()) * eps)).ok_or(Error::SingularOperator)?;
        let step = (&next - &dv).amax();
        dv = next;
        if step == 0.0 || step <= ctx.settings.tol_stage * dv.amax() || step >= prev {
            break;
        }
        prev = step;
    }
    let delta = with_mean(&dv);
    let remainder = ctx.forcing.taylor_remainder(u, &delta, band)?;
    let e = lu.solve(&(basis.project_mean(&remainder.mean()) * eps)).ok_or(Error::SingularOperator)?;
    Ok(MeanCorrection { delta, remainder, e })
}

/// One Nash–Moser step N_n → N_{n+1}: h = 𝓛⁻¹(R(h) + r_n), w_{n+1} = w_n + h.
pub fn solve_stage(ctx: &SolveContext, state: NashMoserState) -> Result<NashMoserState> {
    let start = Instant::now();
    let st = &ctx.settings;
    let basis = ctx.basis;
    let (epsilon, omega) = (state.epsilon, state.omega);
    let stage = state.stage + 1;
    let n_old = state.n();
    let n = *state
        .schedule
        .ns
        .get(stage)
        .ok_or_else(|| Error::InvalidParameter(format!("schedule has no stage {stage}")))?;
    let mut state = state;

    let (cert, mu) = certify(ctx, epsilon, omega, n, &state.spectrum)?;
    if !cert.gate(st.enforce_integer) {
        match st.gate {
            GatePolicy::Refuse => {
                return Err(Error::UncertifiedParameters { stage, detail: describe_failure(&cert) })
            }
            GatePolicy::Flag => state.flags.push(format!("stage {stage} uncertified: {}", describe_failure(&cert))),
        }
    } else if !cert.passed {
        state.flags.push(format!("stage {stage} integer family: {}", describe_failure(&cert)));
    }

    let w_old = state.w.with_band(n);
    if epsilon == 0.0 {
        return finish_stage(ctx, state, stage, n, w_old, ModalField::zeros(n, basis.j()), 1, 0.0, cert, mu, None, start);
    }
    let op = assemble_linop(basis, ctx.forcing, epsilon, omega, &w_old, n, &state.q, st.gamma, st.tau)?;
    let divisors = divisor_diagnostics(&op);
    let inv = op.factorize()?;

    let u = total_field(basis, &state.q.v_coeffs, &basis.synthesize(&w_old, n));
    let r_n = basis.project(&ctx.forcing.compose(&u, 0, n)?, n).high_part(n_old).scale(-epsilon);
    let b = ctx.forcing.compose(&u, 1, 2 * n)?;

    let remainder = |h: &ModalField| -> Result<ModalField> {
        if ctx.forcing.is_affine() {
            return Ok(ModalField::zeros(n, basis.j()));
        }
        let hf = basis.synthesize(h, n);
        let mc = mean_correction(ctx, &state.q, &u, &b, &hf, n)?;
        let _ = &mc.delta;
        let e_field = TimeFourierField::stationary(basis.grid(), &basis.synthesize_mean(&mc.e), 0);
        let be = crate::fields::cauchy_product(&b, &e_field, n);
        Ok(basis.project(&mc.remainder.add(&be), n).scale(-epsilon))
    };

    let mut h = ModalField::zeros(n, basis.j());
    let mut prev_step: Option<f64> = None;
    let mut max_ratio = 0.0_f64;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let rhs = r_n.axpy(1.0, &remainder(&h)?);
        let next = inv.solve(&rhs)?;
        let step = modal_norm(basis, &next.axpy(-1.0, &h), st.s);
        h = next;
        if let Some(p) = prev_step {
            if p > 0.0 {
                let ratio = step / p;
                max_ratio = max_ratio.max(ratio);
                if ratio >= st.max_ratio {
                    return Err(Error::ContractionFailed { stage, ratio });
                }
            }
        }
        if step == 0.0 || step <= st.tol_stage * modal_norm(basis, &h, st.s) {
            break;
        }
        if iterations >= st.max_iter {
            return Err(Error::ContractionFailed { stage, ratio: max_ratio });
        }
        prev_step = Some(step);
    }

    finish_stage(ctx, state, stage, n, w_old, h, iterations, max_ratio, cert, mu, Some(divisors), start)
}

#[allow(clippy::too_many_arguments)]
fn finish_stage(
    ctx: &SolveContext,
    mut state: NashMoserState,
    stage: usize,
    n: usize,
    w_old: ModalField,
    h: ModalField,
    iterations: usize,
    max_ratio: f64,
    cert: MelnikovCertificate,
    mu: MuSource,
    divisors: Option<DivisorReport>,
    start: Instant,
) -> Result<NashMoserState> {
    let st = &ctx.settings;
    let basis = ctx.basis;
    let (epsilon, omega) = (state.epsilon, state.omega);
    let w = w_old.axpy(1.0, &h);
    let q = solve_q(basis, ctx.forcing, epsilon, &basis.synthesize(&w, n), Some(&state.q.v_coeffs), &st.q)?;
    let spectrum = potential_spectrum(basis, &q)?;
    let h_norm = modal_norm(basis, &h, st.s);
    let lambda_shift = spectrum
        .lambdas
        .iter()
        .zip(&state.spectrum.lambdas)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let w_ss = modal_norm(basis, &w, st.s + st.sigma());
    if w_ss > 1.0 {
        return Err(Error::SmallnessViolated { stage, norm: w_ss });
    }
    let residual = range_residual(basis, ctx.forcing, epsilon, omega, &w, &q.v_coeffs, n)?;
    state.records.push(StageRecord {
        stage,
        n,
        h_norm,
        residual_norm: modal_norm(basis, &residual, st.s),
        w_norm_s_sigma: w_ss,
        w_norm_s_kappa: modal_norm(basis, &w, st.s + st.kappa()),
        iterations,
        contraction_ratio: max_ratio,
        lambda_shift,
        lambda_lipschitz: if h_norm > 0.0 { lambda_shift / h_norm } else { 0.0 },
        certificate_passed: cert.passed,
        worst_margin: cert.worst_margin,
        q_margin: q.nondegeneracy_margin,
        seconds: start.elapsed().as_secs_f64(),
    });
    state.certificates.push(cert);
    state.mu_sources.push(mu);
    state.divisors = divisors;
    state.stage = stage;
    state.w = w;
    state.q = q;
    state.spectrum = spectrum;
    Ok(state)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub epsilon: f64,
    pub omega: f64,
    pub gamma: f64,
    pub tau: f64,
    pub s: f64,
    pub sigma: f64,
    pub kappa: f64,
    pub schedule: Vec<usize>,
    pub converged: bool,
    /// L² norm over (t, x) ∈ [0, 2π] × [0, π] of ω²ρu_tt + (p u_xx)_xx − εf(t, x, u).
    pub strong_residual: f64,
    /// L² norm in x of the residual's time mode l, l = 0..=residual_band.
    pub mode_residuals: Vec<f64>,
    pub residual_band: usize,
    pub stages: Vec<StageRecord>,
    /// Slope of log ‖h_k‖_s against log N_k (None with fewer than two nonzero increments).
    pub decay_exponent: Option<f64>,
    pub divisors: Option<DivisorReport>,
    pub q_margin: f64,
    pub v_h2_norm: f64,
    pub deviation_flags: Vec<String>,
}

/// u = v + w as a time-Fourier field on the grid.
pub fn assemble_solution(basis: &ModalBasis, state: &NashMoserState) -> TimeFourierField {
    let n = state.w.n();
    total_field(basis, &state.q.v_coeffs, &basis.synthesize(&state.w, n))
}

/// Strong-form residual per time mode, evaluated on the grid with spectral x-derivatives:
/// r_l = −ω²l²ρu_l + (p u_l″)″ − εF_l for 0 ≤ l ≤ `band`.
pub fn strong_residual_modes(
    basis: &ModalBasis,
    forcing: &ForcingModel,
    epsilon: f64,
    omega: f64,
    w: &ModalField,
    v: &DVector<f64>,
    band: usize,
) -> Result<Vec<Vec<Complex64>>> {
    let grid = basis.grid();
    let prof = &basis.profile;
    let zero = vec![0.0; grid.len()];
    let u = total_field(basis, v, &basis.synthesize(w, w.n().max(1)));
    let f = if epsilon != 0.0 { forcing.compose(&u, 0, band)? } else { TimeFourierField::zeros(grid, band) };
    let kpsi = basis.spectrum.coefficients.nrows();
    let mut out = Vec::with_capacity(band + 1);
    for l in 0..=band {
        let (re_c, im_c): (Vec<f64>, Vec<f64>) = if l == 0 {
            (v.iter().copied().collect(), vec![0.0; v.len()])
        } else if l <= w.n() {
            let mut re = vec![0.0; kpsi];
            let mut im = vec![0.0; kpsi];
            for (k, z) in w.mode(l).iter().enumerate() {
                let col = basis.spectrum.coefficients.column(k);
                for m in 0..kpsi {
                    re[m] += z.re * col[m];
                    im[m] += z.im * col[m];
                }
            }
            (re, im)
        } else {
            (vec![], vec![])
        };
        let a_re = if re_c.is_empty() { zero.clone() } else { apply_operator_to_series(prof, &zero, &re_c) };
        let a_im = if im_c.is_empty() { zero.clone() } else { apply_operator_to_series(prof, &zero, &im_c) };
        let um = if l <= u.n_time() { u.mode(l).to_vec() } else { vec![Complex64::new(0.0, 0.0); grid.len()] };
        let k2 = (omega * l as f64).powi(2);
        let fl = f.mode(l);
        let r: Vec<Complex64> = (0..grid.len())
            .map(|i| Complex64::new(a_re[i], a_im[i]) - um[i] * (k2 * prof.rho[i]) - fl[i] * epsilon)
            .collect();
        out.push(r);
    }
    Ok(out)
}

/// Assembles u = v + w, measures its residual on a time band finer than the final truncation,
/// and collects the iteration diagnostics.
pub fn certify_solution(ctx: &SolveContext, state: &NashMoserState) -> Result<SolveReport> {
    let basis = ctx.basis;
    let st = &ctx.settings;
    let grid = basis.grid();
    let n = state.w.n();
    let band = ctx.forcing.degree().unwrap_or(2).max(2) * n;
    let modes =
        strong_residual_modes(basis, ctx.forcing, state.epsilon, state.omega, &state.w, &state.q.v_coeffs, band)?;
    let mode_residuals: Vec<f64> = modes
        .iter()
        .map(|r| grid.trapz(&r.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>()).sqrt())
        .collect();
    let total: f64 = mode_residuals.iter().enumerate().map(|(l, r)| if l == 0 { r * r } else { 2.0 * r * r }).sum();
    let strong_residual = (2.0 * std::f64::consts::PI * total).sqrt();

    let pts: Vec<(f64, f64)> = state
        .records
        .iter()
        .filter(|r| r.h_norm > 0.0)
        .map(|r| ((r.n as f64).ln(), r.h_norm.ln()))
        .collect();
    let decay_exponent = (pts.len() >= 2).then(|| least_squares_slope(&pts));

    let mut deviation_flags = state.flags.clone();
    if state.schedule.clamped {
        deviation_flags.push(format!(
            "schedule clamped at N_cap = {}: unclamped truncations {:?}",
            state.schedule.n_cap, state.schedule.raw_ns
        ));
    }
    let finite = strong_residual.is_finite()
        && state.records.iter().all(|r| r.h_norm.is_finite() && r.residual_norm.is_finite());
    Ok(SolveReport {
        epsilon: state.epsilon,
        omega: state.omega,
        gamma: st.gamma,
        tau: st.tau,
        s: st.s,
        sigma: st.sigma(),
        kappa: st.kappa(),
        schedule: state.schedule.ns.clone(),
        converged: finite,
        strong_residual,
        mode_residuals,
        residual_band: band,
        stages: state.records.clone(),
        decay_exponent,
        divisors: state.divisors.clone(),
        q_margin: state.q.nondegeneracy_margin,
        v_h2_norm: state.q.h2_norm(),
        deviation_flags,
    })
}

/// Stage 0 followed by every stage of the schedule.
pub fn solve(ctx: &SolveContext, epsilon: f64, omega: f64) -> Result<NashMoserState> {
    let st = &ctx.settings;
    let schedule = IterationSchedule::new(st.n0, st.stages, st.n_cap)?;
    let mut state = solve_stage0(ctx, epsilon, omega, &schedule)?;
    while state.stage < schedule.n_max {
        state = solve_stage(ctx, state)?;
    }
    Ok(state)
}
