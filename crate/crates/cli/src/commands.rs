//! Subcommand implementations.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use flexure::asymptotics::asymptotic_coefficients;
use flexure::basis::ModalField;
use flexure::config::{GeneratorName, RunConfig};
use flexure::eigensolver::{solve_spectrum, EigenProblem};
use flexure::forcing::BuiltinModel;
use flexure::linop::{assemble_linop, divisor_diagnostics, inverse_norm_constant, invert_direct, invert_preconditioned};
use flexure::lyapunov_schmidt::solve_q;
use flexure::nash_moser::{assemble_solution, certify_solution, solve, solve_stage0, IterationSchedule, SolveContext};
use flexure::report::{self, num, Table};
use flexure::sieve::{gamma_ladder, measure_estimate, AsymptoticTail, MuSource};

use crate::{Command, Common};

const NEUMANN_MAX_TERMS: usize = 500;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Eig { common } => eig(&load(&common)?),
        Command::Qsolve { common, epsilon } => {
            let mut cfg = load(&common)?;
            set(&mut cfg.solver.epsilon, epsilon);
            qsolve(&validated(cfg)?)
        }
        Command::LinopCheck { common, epsilon, omega, n, gamma, tau } => {
            let mut cfg = load(&common)?;
            set(&mut cfg.solver.epsilon, epsilon);
            set(&mut cfg.solver.omega, omega);
            set(&mut cfg.solver.gamma, gamma);
            set(&mut cfg.solver.tau, tau);
            linop_check(&validated(cfg)?, n.unwrap_or(8))
        }
        Command::Solve { common, epsilon, omega, n0, stages, gamma, tau } => {
            let mut cfg = load(&common)?;
            set(&mut cfg.solver.epsilon, epsilon);
            set(&mut cfg.solver.omega, omega);
            set(&mut cfg.solver.n0, n0);
            set(&mut cfg.solver.stages, stages);
            set(&mut cfg.solver.gamma, gamma);
            set(&mut cfg.solver.tau, tau);
            solve_one(&validated(cfg)?)
        }
        Command::Sweep { common, epsilon_range, epsilon_steps, omega_range, omega_steps } => {
            let cfg = validated(load(&common)?)?;
            sweep(&cfg, grid(epsilon_range, epsilon_steps)?, grid(omega_range, omega_steps)?)
        }
        Command::Sieve { common, epsilon, omega_range, gamma, tau, gamma_ladder } => {
            let mut cfg = load(&common)?;
            set(&mut cfg.solver.epsilon, epsilon);
            set(&mut cfg.sieve.omega_range, omega_range);
            set(&mut cfg.solver.gamma, gamma);
            set(&mut cfg.solver.tau, tau);
            sieve(&validated(cfg)?, gamma_ladder)
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => RunConfig::default(),
    };
    set(&mut cfg.output.dir, common.out.clone());
    set(&mut cfg.coefficients.n_x, common.n_x);
    set(&mut cfg.field.j, common.j);
    if let Some(m) = &common.model {
        cfg.forcing.model = match m.as_str() {
            "linear_forcing" => BuiltinModel::LinearForcing,
            "affine" => BuiltinModel::Affine,
            "quadratic" => BuiltinModel::Quadratic,
            "cubic" => BuiltinModel::Cubic,
            other => return Err(flexure::Error::Config(format!("unknown forcing model {other:?}")).into()),
        };
        cfg.forcing.coefficients = None;
    }
    Ok(cfg)
}

fn validated(cfg: RunConfig) -> Result<RunConfig> {
    cfg.validate()?;
    Ok(cfg)
}

fn grid((a, b): (f64, f64), steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(flexure::Error::Config("grid needs at least one step".into()).into());
    }
    Ok(if steps == 1 { vec![a] } else { (0..steps).map(|k| a + (b - a) * k as f64 / (steps - 1) as f64).collect() })
}

fn write(dir: &Path, name: &str, table: &Table) -> Result<PathBuf> {
    let path = dir.join(name);
    table.write(&path).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn eig(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    let profile = cfg.profile()?;
    let spec = solve_spectrum(&EigenProblem::unperturbed(&profile), cfg.field.j)?;
    println!("n_x = {}", profile.n_x());
    println!("gap = {}", num(spec.gap));
    for (k, l) in spec.lambdas.iter().enumerate() {
        println!("lambda_{} = {}", k + 1, num(*l));
    }
    let path = write(&cfg.output.dir, "eig.csv", &report::spectrum_table(&spec))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn qsolve(cfg: &RunConfig) -> Result<()> {
    let profile = cfg.profile()?;
    let basis = cfg.basis(&profile)?;
    let forcing = cfg.forcing_model(basis.grid());
    let w = flexure::fields::TimeFourierField::zeros(basis.grid(), 1);
    let st = solve_q(&basis, &forcing, cfg.solver.epsilon, &w, None, &cfg.q_settings())?;
    println!("epsilon = {}", num(st.epsilon));
    println!("steps = {}", st.steps);
    println!("residual = {}", num(st.residual()));
    println!("v_h2_norm = {}", num(st.h2_norm()));
    println!("nondegeneracy_margin = {}", num(st.nondegeneracy_margin));
    let mut t = Table::new(&["x", "v"]);
    for (x, v) in basis.grid().x().iter().zip(&st.v) {
        t.push(vec![num(*x), num(*v)]);
    }
    let path = write(&cfg.output.dir, "qsolve.csv", &t)?;
    let mut trace = Table::new(&["step", "residual"]);
    for (k, r) in st.newton_trace.iter().enumerate() {
        trace.push(vec![k.to_string(), num(*r)]);
    }
    write(&cfg.output.dir, "qsolve_trace.csv", &trace)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn linop_check(cfg: &RunConfig, n: usize) -> Result<()> {
    let profile = cfg.profile()?;
    let basis = cfg.basis(&profile)?;
    let forcing = cfg.forcing_model(basis.grid());
    let mut settings = cfg.nash_moser_settings();
    settings.n0 = n;
    let ctx = SolveContext { basis: &basis, forcing: &forcing, settings };
    let (eps, omega) = (cfg.solver.epsilon, cfg.solver.omega);
    let schedule = IterationSchedule::new(n, 0, n)?;
    let state = solve_stage0(&ctx, eps, omega, &schedule)?;
    let op = assemble_linop(&basis, &forcing, eps, omega, &state.w, n, &state.q, cfg.solver.gamma, cfg.solver.tau)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.solver.seed);
    let mut rhs = ModalField::zeros(n, basis.j());
    for l in 1..=n {
        for j in 1..=basis.j() {
            rhs.set(l, j, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        }
    }
    let direct = invert_direct(&op, &rhs)?;
    let (pre, trace) = invert_preconditioned(&op, &rhs, NEUMANN_MAX_TERMS)?;
    let d = direct.to_real();
    let discrepancy = (pre.to_real() - &d).norm() / d.norm();
    let diag = divisor_diagnostics(&op);
    println!("epsilon = {}", num(eps));
    println!("omega = {}", num(omega));
    println!("N = {n}, J = {}", basis.j());
    println!("sigma = {}", num(diag.sigma));
    println!("first_order_ratio = {} (l = {})", num(diag.first_order_ratio), diag.first_order_l);
    println!("product_ratio = {} (pair {:?})", num(diag.product_ratio), diag.product_pair);
    println!("zero_divisors = {:?}", diag.zero_divisors);
    println!("vacuous = {}", diag.vacuous);
    println!("inverse_norm_constant = {}", num(inverse_norm_constant(&op, cfg.field.s)));
    println!("direct_vs_preconditioned = {}", num(discrepancy));
    println!("neumann_terms = {}", trace.term_norms.len());
    if let Some(r) = trace.observed_ratio {
        println!("neumann_ratio = {}", num(r));
    }
    let mut omega_l = Table::new(&["l", "omega_l"]);
    for (l, w) in diag.omega_l.iter().enumerate() {
        omega_l.push(vec![(l + 1).to_string(), num(*w)]);
    }
    write(&cfg.output.dir, "divisors.csv", &omega_l)?;
    let path = write(&cfg.output.dir, "neumann.csv", &report::neumann_table(&trace))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn solve_one(cfg: &RunConfig) -> Result<()> {
    let profile = cfg.profile()?;
    let basis = cfg.basis(&profile)?;
    let forcing = cfg.forcing_model(basis.grid());
    let ctx = SolveContext { basis: &basis, forcing: &forcing, settings: cfg.nash_moser_settings() };
    let state = solve(&ctx, cfg.solver.epsilon, cfg.solver.omega)?;
    let rep = certify_solution(&ctx, &state)?;
    for line in report::summary_lines(&rep) {
        println!("{line}");
    }
    let dir = &cfg.output.dir;
    write(dir, "stages.csv", &report::stages_table(&rep))?;
    write(dir, "mode_residuals.csv", &report::mode_residual_table(&rep))?;
    if cfg.output.write_solution {
        write(dir, "solution.csv", &report::field_table(&assemble_solution(&basis, &state)))?;
    }
    println!("wrote reports to {}", dir.display());
    Ok(())
}

struct SweepRow {
    i: usize,
    k: usize,
    epsilon: f64,
    omega: f64,
    outcome: std::result::Result<(f64, usize), String>,
}

fn workers() -> Result<usize> {
    match std::env::var("FLEXURE_WORKERS") {
        Ok(v) => {
            let n: usize = v.trim().parse().map_err(|_| flexure::Error::Config(format!("FLEXURE_WORKERS={v:?} is not a count")))?;
            Ok(n.max(1))
        }
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

fn sweep(cfg: &RunConfig, eps: Vec<f64>, omegas: Vec<f64>) -> Result<()> {
    let profile = cfg.profile()?;
    let basis = cfg.basis(&profile)?;
    let forcing = cfg.forcing_model(basis.grid());
    let ctx = SolveContext { basis: &basis, forcing: &forcing, settings: cfg.nash_moser_settings() };
    let points: Vec<(usize, usize)> = (0..eps.len()).flat_map(|i| (0..omegas.len()).map(move |k| (i, k))).collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers()?).build()?;
    let mut rows: Vec<SweepRow> = pool.install(|| {
        points
            .par_iter()
            .map(|&(i, k)| {
                let (e, w) = (eps[i], omegas[k]);
                let outcome = solve(&ctx, e, w)
                    .and_then(|st| certify_solution(&ctx, &st))
                    .map(|rep| (rep.strong_residual, rep.stages.len()))
                    .map_err(|err| err.to_string());
                let event = match &outcome {
                    Ok((res, stages)) => json!({"event": "point", "i": i, "k": k, "epsilon": e, "omega": w, "ok": true, "residual": res, "stages": stages}),
                    Err(msg) => json!({"event": "point", "i": i, "k": k, "epsilon": e, "omega": w, "ok": false, "error": msg}),
                };
                println!("{event}");
                SweepRow { i, k, epsilon: e, omega: w, outcome }
            })
            .collect()
    });
    rows.sort_by_key(|r| (r.i, r.k));
    let mut t = Table::new(&["i", "k", "epsilon", "omega", "ok", "residual", "stages", "error"]);
    let mut failures = 0;
    for r in &rows {
        let (ok, res, stages, err) = match &r.outcome {
            Ok((res, s)) => ("true", num(*res), s.to_string(), String::new()),
            Err(m) => {
                failures += 1;
                ("false", String::new(), String::new(), m.clone())
            }
        };
        t.push(vec![r.i.to_string(), r.k.to_string(), num(r.epsilon), num(r.omega), ok.into(), res, stages, err]);
    }
    let path = write(&cfg.output.dir, "sweep.csv", &t)?;
    println!("{}", json!({"event": "done", "points": rows.len(), "failures": failures, "csv": path.display().to_string()}));
    Ok(())
}

/// μ_j for the configured profile: exact squares for the constant beam at ε = 0, otherwise the
/// computed spectrum continued by its large-j asymptotics.
fn mu_source(cfg: &RunConfig) -> Result<MuSource> {
    if cfg.coefficients.generator == GeneratorName::Zero && cfg.coefficients.p0 == 1.0 {
        return Ok(MuSource::Squares);
    }
    let profile = cfg.profile()?;
    let j = (profile.n_x() / 8).min(64);
    let spec = solve_spectrum(&EigenProblem::unperturbed(&profile), j)?;
    let asym = asymptotic_coefficients(&profile, &vec![0.0; profile.grid.len()], j)?;
    let model = |k: usize| {
        let kf = k as f64;
        kf.powi(4) + 2.0 * kf * kf * asym.upsilon0 + asym.upsilon1
    };
    let slack = 2.0 * (j.saturating_sub(3)..=j).map(|k| (spec.lambdas[k - 1] - model(k)).abs()).fold(0.0, f64::max);
    let tail = AsymptoticTail { upsilon0: asym.upsilon0, upsilon1: asym.upsilon1, slack };
    Ok(MuSource::from_spectrum(&spec, Some(tail)))
}

fn sieve(cfg: &RunConfig, ladder: bool) -> Result<()> {
    let mu = mu_source(cfg)?;
    let gamma = cfg.solver.gamma;
    let rep = measure_estimate(&cfg.measure_params(gamma), &mu)?;
    println!("omega_interval = ({}, {})", num(rep.omega_interval.0), num(rep.omega_interval.1));
    println!("gamma = {}", num(rep.gamma));
    println!("tau = {}", num(rep.tau));
    println!("l_max = {}", rep.l_max);
    println!("passed_fraction = {}", num(rep.passed_fraction));
    println!("excluded_intervals = {}", rep.excluded_intervals.len());
    println!("truncation_bound = {}", num(rep.truncation_bound));
    println!("delta7_active = {}", rep.delta7_active);
    let dir = &cfg.output.dir;
    let path = write(dir, "excluded.csv", &report::excluded_table(&rep))?;
    if ladder {
        let gammas = [gamma, gamma / 2.0, gamma / 4.0];
        let lad = gamma_ladder(&cfg.measure_params(gamma), &gammas, &mu)?;
        let mut t = Table::new(&["gamma", "passed_fraction", "excluded_length"]);
        for r in &lad.reports {
            t.push(vec![num(r.gamma), num(r.passed_fraction), num(r.excluded_length)]);
        }
        write(dir, "gamma_ladder.csv", &t)?;
        println!("fitted_q = {}", num(lad.fitted_q));
        println!("ladder_exponent = {}", num(lad.exponent));
    }
    println!("wrote {}", path.display());
    Ok(())
}
