//! One function per command. Each returns its artifacts and a short
//! human-readable summary; writing happens in `main`.

use std::path::Path;

use qtrap::classical_baselines::rw_current;
use qtrap::exponent_estimation::{bernoulli_bound, fit_exponent, ExponentFit, FitMode};
use qtrap::fermion_entropy::entropy_series;
use qtrap::matrix_oracle::{krylov_current, state_moments, TrapSystem};
use qtrap::spectral_measure::{moments, MomentSequence, SpectralMeasure};
use qtrap::trap_dynamics::{
    current_series, disk_average, dyadic_ladder, g_on_circle, k_sequence, required_truncation, JtildeScanRow,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{relative_to, Command, FitKind, RunConfig};
use crate::error::CliError;
use crate::output::{float, Artifact};

pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub summary: Vec<String>,
    /// Set when a tolerance check failed; artifacts are still written.
    pub tolerance_failure: Option<String>,
}

impl Outcome {
    fn ok(artifacts: Vec<Artifact>, summary: Vec<String>) -> Self {
        Self {
            artifacts,
            summary,
            tolerance_failure: None,
        }
    }
}

/// `cfg` must come from [`RunConfig::resolve`], which fills every parameter
/// read with `expect` below.
pub fn run(cfg: &RunConfig, base: &Path) -> Result<Outcome, CliError> {
    match cfg.command.expect("resolved config") {
        Command::Moments => run_moments(cfg, base),
        Command::Current => run_current(cfg, base),
        Command::JtildeScan => run_jtilde_scan(cfg, base),
        Command::Exponent => run_exponent(cfg, base),
        Command::BernoulliTable => run_bernoulli_table(cfg),
        Command::Entropy => run_entropy(cfg),
        Command::OracleCompare => run_oracle_compare(cfg),
        Command::Baselines => run_baselines(cfg),
    }
}

fn measure(cfg: &RunConfig, base: &Path) -> Result<SpectralMeasure, CliError> {
    cfg.measure.as_ref().expect("resolved config").build(base)
}

fn system(cfg: &RunConfig) -> Result<TrapSystem, CliError> {
    cfg.system.as_ref().expect("resolved config").build()
}

fn rank_one_moments(sys: &TrapSystem, order: usize) -> Result<MomentSequence, CliError> {
    let phi = sys
        .rank_one_state()
        .ok_or_else(|| CliError::Config("system.trap: this command needs a rank-one projector trap".into()))?;
    Ok(state_moments(sys.unitary(), &phi, order)?)
}

#[derive(Serialize)]
struct FitJson {
    exponent: f64,
    intercept: f64,
    residual: f64,
    window: [usize; 2],
}

impl From<&ExponentFit> for FitJson {
    fn from(f: &ExponentFit) -> Self {
        Self {
            exponent: f.exponent,
            intercept: f.intercept,
            residual: f.residual,
            window: [f.window.start, f.window.end],
        }
    }
}

fn run_moments(cfg: &RunConfig, base: &Path) -> Result<Outcome, CliError> {
    let order = cfg.params.order.expect("resolved");
    let mu = moments(&measure(cfg, base)?, order)?;
    let rows = mu
        .coeffs()
        .iter()
        .enumerate()
        .map(|(s, m)| vec![s.to_string(), float(m.re), float(m.im)]);
    let csv = Artifact::csv(&["s", "mu_re", "mu_im"], rows)?;
    Ok(Outcome::ok(vec![csv], vec![format!("moments: s = 0..={order}")]))
}

fn run_current(cfg: &RunConfig, base: &Path) -> Result<Outcome, CliError> {
    let t_max = cfg.params.t_max.expect("resolved");
    let mu = match &cfg.measure {
        Some(_) => moments(&measure(cfg, base)?, t_max)?,
        None => rank_one_moments(&system(cfg)?, t_max)?,
    };
    let series = current_series(&k_sequence(&mu, t_max)?, t_max)?;
    let rows = (1..=t_max).map(|t| {
        let k = series.k[t - 1];
        vec![
            t.to_string(),
            float(k.re),
            float(k.im),
            float(series.current(t)),
            float(series.trapped(t)),
        ]
    });
    let csv = Artifact::csv(&["t", "K_re", "K_im", "J", "N"], rows)?;
    Ok(Outcome::ok(
        vec![csv],
        vec![format!("current: J({t_max}) = {}, N({t_max}) = {}", series.current(t_max), series.trapped(t_max))],
    ))
}

/// Same rows as `trap_dynamics::jtilde_scan`, one worker task per radius.
fn scan_rows(measure: &SpectralMeasure, ladder: &[f64], mesh: usize) -> Result<Vec<JtildeScanRow>, CliError> {
    let r_max = ladder.iter().copied().fold(0.0, f64::max);
    let mu = moments(measure, required_truncation(r_max))?;
    let rows = ladder
        .par_iter()
        .map(|&r| {
            let sample = g_on_circle(&mu, r, mesh)?;
            Ok(JtildeScanRow {
                r,
                one_minus_r: 1.0 - r,
                jtilde_true: disk_average(&sample, true),
                jtilde_no_im: disk_average(&sample, false),
            })
        })
        .collect::<qtrap::Result<Vec<_>>>()?;
    Ok(rows)
}

fn scan_fits(rows: &[JtildeScanRow]) -> Result<(ExponentFit, ExponentFit), CliError> {
    let with_im: Vec<(f64, f64)> = rows.iter().map(|r| (r.one_minus_r, r.jtilde_true)).collect();
    let no_im: Vec<(f64, f64)> = rows.iter().map(|r| (r.one_minus_r, r.jtilde_no_im)).collect();
    Ok((
        fit_exponent(&with_im, 0..rows.len(), FitMode::Alpha)?,
        fit_exponent(&no_im, 0..rows.len(), FitMode::Alpha)?,
    ))
}

fn ladder(cfg: &RunConfig) -> Vec<f64> {
    dyadic_ladder(cfg.params.k_min.expect("resolved"), cfg.params.k_max.expect("resolved"))
}

fn run_jtilde_scan(cfg: &RunConfig, base: &Path) -> Result<Outcome, CliError> {
    let mesh = cfg.params.mesh.expect("resolved");
    let rows = scan_rows(&measure(cfg, base)?, &ladder(cfg), mesh)?;
    let csv = Artifact::csv(
        &["r", "one_minus_r", "Jtilde_true", "Jtilde_noIm"],
        rows.iter()
            .map(|r| vec![float(r.r), float(r.one_minus_r), float(r.jtilde_true), float(r.jtilde_no_im)]),
    )?;
    let (with_im, no_im) = scan_fits(&rows)?;

    #[derive(Serialize)]
    struct ScanJson {
        alpha_true: FitJson,
        #[serde(rename = "alpha_noIm")]
        alpha_no_im: FitJson,
    }
    let json = Artifact::json(&ScanJson {
        alpha_true: (&with_im).into(),
        alpha_no_im: (&no_im).into(),
    })?;
    Ok(Outcome::ok(
        vec![csv, json],
        vec![format!(
            "jtilde-scan: alpha (with Im G) = {:.4}, alpha (no Im G) = {:.4}",
            with_im.exponent, no_im.exponent
        )],
    ))
}

/// Reads `(x, y)` pairs from a headed CSV.
fn read_pairs(path: &Path, x_col: Option<&str>, y_col: Option<&str>) -> Result<(Vec<(f64, f64)>, String), CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::csv(path, e))?;
    let header = reader.headers().map_err(|e| CliError::csv(path, e))?.clone();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Config(format!("{}: no column `{name}`", path.display())))
    };
    let (xi, yi) = match (x_col, y_col) {
        (Some(x), Some(y)) => (find(x)?, find(y)?),
        (None, None) if header.len() == 2 => (0, 1),
        _ => {
            return Err(CliError::Config(format!(
                "params.x_column/y_column: {} has {} columns, name both",
                path.display(),
                header.len()
            )))
        }
    };
    let mut pairs = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::csv(path, e))?;
        let parse = |j: usize| {
            rec.get(j)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| CliError::Config(format!("{}: row {} column {} is not a number", path.display(), i + 2, j + 1)))
        };
        pairs.push((parse(xi)?, parse(yi)?));
    }
    if pairs.is_empty() {
        return Err(CliError::Config(format!("{}: no data rows", path.display())));
    }
    Ok((pairs, header[xi].to_string()))
}

fn run_exponent(cfg: &RunConfig, base: &Path) -> Result<Outcome, CliError> {
    let p = &cfg.params;
    let path = relative_to(base, p.input.as_deref().expect("resolved"));
    let (pairs, x_name) = read_pairs(&path, p.x_column.as_deref(), p.y_column.as_deref())?;
    let kind = match (p.fit, x_name.as_str()) {
        (Some(k), _) => k,
        (None, "one_minus_r") => FitKind::Alpha,
        (None, "t") => FitKind::Gamma,
        (None, other) => {
            return Err(CliError::Config(format!(
                "params.fit: cannot infer alpha or gamma from column `{other}`"
            )))
        }
    };
    let window = p.window.map_or(0..pairs.len(), |[a, b]| a..b);
    let fit = fit_exponent(&pairs, window, kind.into())?;
    let mut summary = vec![format!(
        "exponent: {:.6} (max log residual {:.2e})",
        fit.exponent, fit.residual
    )];
    if fit.out_of_range {
        summary.push("exponent: outside [0, 1], check the window".into());
    }
    Ok(Outcome::ok(vec![Artifact::json(&FitJson::from(&fit))?], summary))
}

fn run_bernoulli_table(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = &cfg.params;
    let level = p.level.expect("resolved");
    let mesh = p.mesh.expect("resolved");
    let ladder = ladder(cfg);
    let rows = p
        .p_values
        .as_ref()
        .expect("resolved")
        .par_iter()
        .map(|&prob| {
            let measure = SpectralMeasure::bernoulli(prob, level)?;
            let scan = scan_rows(&measure, &ladder, mesh)?;
            let (with_im, no_im) = scan_fits(&scan)?;
            let analytical = bernoulli_bound(prob)?.alpha_lower;
            Ok((prob, analytical, no_im.exponent, with_im.exponent))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let summary = rows
        .iter()
        .map(|(prob, a, n, w)| format!("p = {prob:.4}: analytical {a:.3e}, no Im G {n:.3e}, with Im G {w:.3e}"))
        .collect();
    let csv = Artifact::csv(
        &["p", "alpha_analytical", "alpha_noIm", "alpha_withIm"],
        rows.iter().map(|&(prob, a, n, w)| vec![float(prob), float(a), float(n), float(w)]),
    )?;
    Ok(Outcome::ok(vec![csv], summary))
}

fn run_entropy(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = &cfg.params;
    let kappa = p.kappa.expect("resolved");
    let t_max = p.t_max.expect("resolved");
    let reports = entropy_series(&system(cfg)?, kappa, t_max)?;
    let csv = Artifact::csv(
        &["t", "trace_defect", "H_exact_nats", "H_lower_nats"],
        reports
            .iter()
            .map(|r| vec![r.t.to_string(), float(r.trace_defect), float(r.h_exact), float(r.h_lower)]),
    )?;
    let last = reports.last().expect("t_max >= 1");

    #[derive(Serialize)]
    struct EntropyJson<'a> {
        t: usize,
        kappa: f64,
        defect_spectrum: &'a [f64],
        trace_defect: f64,
        #[serde(rename = "H_exact_nats")]
        h_exact_nats: f64,
        #[serde(rename = "H_lower_nats")]
        h_lower_nats: f64,
    }
    let json = Artifact::json(&EntropyJson {
        t: last.t,
        kappa,
        defect_spectrum: &last.defect_spectrum,
        trace_defect: last.trace_defect,
        h_exact_nats: last.h_exact,
        h_lower_nats: last.h_lower,
    })?;
    let mut summary = vec![format!(
        "entropy: t = {}, H = {:.6} nats, lower bound {:.6} nats, Tr D_t = {:.6}",
        last.t, last.h_exact, last.h_lower, last.trace_defect
    )];
    if p.bits == Some(true) {
        let ln2 = std::f64::consts::LN_2;
        summary.push(format!(
            "entropy: H = {:.6} bits, lower bound {:.6} bits",
            last.h_exact / ln2,
            last.h_lower / ln2
        ));
    }
    Ok(Outcome::ok(vec![csv, json], summary))
}

fn run_oracle_compare(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let t_max = cfg.params.t_max.expect("resolved");
    let tolerance = cfg.params.tolerance.expect("resolved");
    let sys = system(cfg)?;
    let mu = rank_one_moments(&sys, t_max)?;
    let series = current_series(&k_sequence(&mu, t_max)?, t_max)?;
    let krylov = krylov_current(&mu, t_max)?;
    let direct = sys.trap_currents(t_max);
    let trapped = sys.trapped_numbers(t_max);

    let mut max_diff = 0.0f64;
    let mut telescoping = 0.0f64;
    let mut running = 0.0;
    let mut rows = Vec::with_capacity(t_max);
    for t in 1..=t_max {
        let (a, b, c) = (series.current(t), krylov[t - 1], direct[t - 1]);
        let diff = (a - b).abs().max((a - c).abs()).max((b - c).abs());
        max_diff = max_diff.max(diff);
        running += c;
        telescoping = telescoping.max((trapped[t] - running).abs());
        rows.push(vec![t.to_string(), float(a), float(b), float(c), float(diff)]);
    }
    let csv = Artifact::csv(&["t", "J_recursion", "J_krylov", "J_trace", "max_abs_diff"], rows)?;
    let pass = max_diff <= tolerance;

    #[derive(Serialize)]
    struct CompareJson {
        t_max: usize,
        tolerance: f64,
        max_abs_diff: f64,
        telescoping_defect: f64,
        pass: bool,
    }
    let json = Artifact::json(&CompareJson {
        t_max,
        tolerance,
        max_abs_diff: max_diff,
        telescoping_defect: telescoping,
        pass,
    })?;
    let summary = vec![format!(
        "oracle-compare: max |ΔJ| = {max_diff:.3e} (tolerance {tolerance:.1e}), telescoping defect {telescoping:.3e}"
    )];
    Ok(Outcome {
        artifacts: vec![csv, json],
        summary,
        tolerance_failure: (!pass).then(|| format!("max |ΔJ| = {max_diff:e} exceeds {tolerance:e}")),
    })
}

fn run_baselines(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let t_max = cfg.params.t_max.expect("resolved") as u64;
    let rows = (1..=t_max)
        .map(|t| Ok(vec![t.to_string(), float(rw_current(t)?.j)]))
        .collect::<Result<Vec<_>, CliError>>()?;
    let csv = Artifact::csv(&["t", "J"], rows)?;
    Ok(Outcome::ok(vec![csv], vec![format!("baselines: random walk current for t = 1..={t_max}")]))
}
