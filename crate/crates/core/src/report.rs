//! CSV tables with full-precision numbers, written atomically (temporary file + rename).

use std::fs;
use std::io::Write;
use std::path::Path;

use tempfile::NamedTempFile;

use crate::error::Result;
use crate::eigensolver::Spectrum;
use crate::fields::TimeFourierField;
use crate::linop::NeumannTrace;
use crate::nash_moser::SolveReport;
use crate::sieve::MeasureReport;

/// Round-trip representation of a float.
pub fn num(x: f64) -> String {
    format!("{x:.17e}")
}

/// Writes `bytes` to a temporary file next to `path` and renames it into place, so `path` is
/// either absent, the previous contents, or the complete new contents.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_csv()?)
    }
}

pub fn field_table(u: &TimeFourierField) -> Table {
    let mut t = Table::new(&["part", "l", "x_index", "value"]);
    for (l, m) in u.modes().iter().enumerate() {
        for (part, pick) in [("re", 0usize), ("im", 1)] {
            for (i, z) in m.iter().enumerate() {
                let v = if pick == 0 { z.re } else { z.im };
                t.push(vec![part.to_string(), l.to_string(), i.to_string(), num(v)]);
            }
        }
    }
    t
}

pub fn spectrum_table(spec: &Spectrum) -> Table {
    let mut t = Table::new(&["j", "lambda", "mu_re", "mu_im", "residual"]);
    for (k, l) in spec.lambdas.iter().enumerate() {
        let mu = spec.mus[k];
        t.push(vec![(k + 1).to_string(), num(*l), num(mu.re), num(mu.im), num(spec.residuals[k])]);
    }
    t
}

pub fn stages_table(rep: &SolveReport) -> Table {
    let mut t = Table::new(&[
        "stage",
        "n",
        "h_norm",
        "residual_norm",
        "w_norm_s_sigma",
        "w_norm_s_kappa",
        "iterations",
        "contraction_ratio",
        "lambda_shift",
        "certificate_passed",
        "worst_margin",
        "q_margin",
    ]);
    for r in &rep.stages {
        t.push(vec![
            r.stage.to_string(),
            r.n.to_string(),
            num(r.h_norm),
            num(r.residual_norm),
            num(r.w_norm_s_sigma),
            num(r.w_norm_s_kappa),
            r.iterations.to_string(),
            num(r.contraction_ratio),
            num(r.lambda_shift),
            r.certificate_passed.to_string(),
            num(r.worst_margin),
            num(r.q_margin),
        ]);
    }
    t
}

pub fn mode_residual_table(rep: &SolveReport) -> Table {
    let mut t = Table::new(&["l", "residual"]);
    for (l, r) in rep.mode_residuals.iter().enumerate() {
        t.push(vec![l.to_string(), num(*r)]);
    }
    t
}

pub fn neumann_table(trace: &NeumannTrace) -> Table {
    let mut t = Table::new(&["term", "norm"]);
    for (k, n) in trace.term_norms.iter().enumerate() {
        t.push(vec![k.to_string(), num(*n)]);
    }
    t
}

pub fn excluded_table(rep: &MeasureReport) -> Table {
    let mut t = Table::new(&["lo", "hi", "center", "halfwidth", "causes"]);
    for iv in &rep.excluded_intervals {
        let causes: Vec<String> = iv.causes.iter().map(|(l, j, f)| format!("{l}:{j}:{f:?}")).collect();
        t.push(vec![num(iv.lo), num(iv.hi), num(iv.center()), num(iv.halfwidth()), causes.join(" ")]);
    }
    t
}

/// Key-value summary of a solve.
pub fn summary_lines(rep: &SolveReport) -> Vec<String> {
    let mut out = vec![
        format!("epsilon = {}", num(rep.epsilon)),
        format!("omega = {}", num(rep.omega)),
        format!("gamma = {}", num(rep.gamma)),
        format!("tau = {}", num(rep.tau)),
        format!("schedule = {:?}", rep.schedule),
        format!("converged = {}", rep.converged),
        format!("strong_residual = {}", num(rep.strong_residual)),
        format!("v_h2_norm = {}", num(rep.v_h2_norm)),
        format!("q_margin = {}", num(rep.q_margin)),
    ];
    if let Some(e) = rep.decay_exponent {
        out.push(format!("decay_exponent = {}", num(e)));
    }
    if let Some(d) = &rep.divisors {
        out.push(format!("divisor_first_order_ratio = {}", num(d.first_order_ratio)));
        out.push(format!("divisor_product_ratio = {}", num(d.product_ratio)));
    }
    for r in &rep.stages {
        out.push(format!("stage {} (N = {}): h = {}, seconds = {:.3}", r.stage, r.n, num(r.h_norm), r.seconds));
    }
    for f in &rep.deviation_flags {
        out.push(format!("flag: {f}"));
    }
    out
}
