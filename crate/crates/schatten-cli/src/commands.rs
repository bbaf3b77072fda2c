//! The estimate, variance, and bounds subcommands.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;

use schatten::bounds::{bound_report, BoundReport};
use schatten::sketch::{estimate_vpn, run_experiment, sample_sketch, EstimateStats, SketchConfig};
use schatten::spectrum::{gram_spectrum, schatten_2p_power, trace_powers, Spectrum};
use schatten::variance::{
    brute_variance, exact_variance, oracle_variance, variance_literal, QContribution,
};
use schatten::{Error, Matrix, Result};

use crate::manifest::RunManifest;
use crate::output::{csv_document, fmt_f64, fmt_opt, render_json, text_document, Format};

fn require_n_ge_p(p: u32, n: u32) -> Result<()> {
    if p == 0 {
        return Err(Error::InvalidInput("p must be >= 1".into()));
    }
    if n < p {
        return Err(Error::InvalidInput(format!("n must be >= p (got p={p}, n={n})")));
    }
    Ok(())
}

/// Loads the spectrum from `--spectrum` (JSON eigenvalues) or `--matrix`
/// (CSV `B`, converted on ingest), recording the input digest.
fn load_spectrum(
    matrix: Option<&PathBuf>,
    spectrum: Option<&PathBuf>,
    manifest: RunManifest,
) -> Result<(Spectrum, RunManifest)> {
    match (matrix, spectrum) {
        (Some(path), None) => {
            let m = Matrix::load_csv(path)?;
            Ok((gram_spectrum(&m)?, manifest.input(path)?))
        }
        (None, Some(path)) => Ok((Spectrum::load_json(path)?, manifest.input(path)?)),
        _ => Err(Error::InvalidInput(
            "exactly one of --matrix and --spectrum is required".into(),
        )),
    }
}

// ---------------------------------------------------------------- estimate

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// CSV matrix B; the spectrum of BᵀB is computed on ingest.
    #[arg(long, value_name = "PATH", conflicts_with = "spectrum")]
    pub matrix: Option<PathBuf>,
    /// JSON array of non-negative eigenvalues of S.
    #[arg(long, value_name = "PATH")]
    pub spectrum: Option<PathBuf>,
    /// Cycle length; the estimator targets Tr(S^p).
    #[arg(long)]
    pub p: u32,
    /// Sketch rows; must be at least p.
    #[arg(long)]
    pub n: u32,
    /// Master seed; replicate r uses stream r of the generator.
    #[arg(long)]
    pub seed: u64,
    /// Replicate count; omit for a single sketch (stream 0).
    #[arg(long)]
    pub reps: Option<usize>,
}

#[derive(Serialize)]
struct EstimateReport {
    p: u32,
    n: u32,
    d: usize,
    seed: u64,
    /// The estimated quantity `Tr(S^p)`, from the input spectrum.
    target: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stats: Option<EstimateStats>,
}

pub fn cmd_estimate(args: &EstimateArgs, format: Format) -> Result<String> {
    require_n_ge_p(args.p, args.n)?;
    let mut manifest = RunManifest::new("estimate")
        .seed(args.seed)
        .param("p", args.p)
        .param("n", args.n);
    if let Some(reps) = args.reps {
        manifest = manifest.param("reps", reps as u64);
    }
    let (spectrum, manifest) =
        load_spectrum(args.matrix.as_ref(), args.spectrum.as_ref(), manifest)?;
    let d = spectrum.dim();
    let target = schatten_2p_power(&spectrum, args.p as usize)?;

    let report = match args.reps {
        None => {
            let x = sample_sketch(args.n, d, args.seed, 0);
            let estimate = estimate_vpn(&x, &spectrum, args.p)?;
            EstimateReport {
                p: args.p,
                n: args.n,
                d,
                seed: args.seed,
                target,
                estimate: Some(estimate),
                stats: None,
            }
        }
        Some(reps) => {
            let config = SketchConfig::new(args.p, args.n, args.seed, reps, spectrum)?;
            let stats = run_experiment(&config)?;
            EstimateReport {
                p: args.p,
                n: args.n,
                d,
                seed: args.seed,
                target,
                estimate: None,
                stats: Some(stats),
            }
        }
    };

    match format {
        Format::Json => render_json(manifest, report),
        Format::Csv => {
            let header = vec![
                "p", "n", "d", "seed", "reps", "estimate", "empirical_mean",
                "empirical_variance", "stderr_mean", "stderr_variance", "target",
            ]
            .into_iter()
            .map(String::from)
            .collect();
            let s = report.stats.as_ref();
            let row = vec![
                report.p.to_string(),
                report.n.to_string(),
                report.d.to_string(),
                report.seed.to_string(),
                s.map(|s| s.reps.to_string()).unwrap_or_default(),
                fmt_opt(report.estimate),
                s.map(|s| fmt_f64(s.empirical_mean)).unwrap_or_default(),
                fmt_opt(s.and_then(|s| s.empirical_variance)),
                fmt_opt(s.and_then(|s| s.stderr_mean)),
                fmt_opt(s.and_then(|s| s.stderr_variance)),
                fmt_f64(report.target),
            ];
            Ok(csv_document(&[header, row]))
        }
        Format::Text => {
            let mut pairs = vec![
                ("p".into(), report.p.to_string()),
                ("n".into(), report.n.to_string()),
                ("d".into(), report.d.to_string()),
                ("seed".into(), report.seed.to_string()),
                ("target".into(), fmt_f64(report.target)),
            ];
            if let Some(e) = report.estimate {
                pairs.push(("estimate".into(), fmt_f64(e)));
            }
            if let Some(s) = &report.stats {
                pairs.push(("reps".into(), s.reps.to_string()));
                pairs.push(("empirical_mean".into(), fmt_f64(s.empirical_mean)));
                pairs.push(("empirical_variance".into(), fmt_opt(s.empirical_variance)));
                pairs.push(("stderr_mean".into(), fmt_opt(s.stderr_mean)));
                pairs.push(("stderr_variance".into(), fmt_opt(s.stderr_variance)));
            }
            Ok(text_document(&pairs))
        }
    }
}

// ---------------------------------------------------------------- variance

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VarianceMethod {
    /// Exact pattern-class engine (default).
    Recursion,
    /// Literal transcription of the printed expansion; adds a
    /// discrepancy field against the exact engine (see ERRATA.md).
    PaperLiteral,
    /// Every ordered cycle pair through the Wick oracle; size-guarded.
    Brute,
    /// Pattern classes through the Wick oracle; size-guarded.
    Oracle,
}

impl VarianceMethod {
    fn name(self) -> &'static str {
        match self {
            VarianceMethod::Recursion => "recursion",
            VarianceMethod::PaperLiteral => "paper-literal",
            VarianceMethod::Brute => "brute",
            VarianceMethod::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Args)]
pub struct VarianceArgs {
    /// JSON array of non-negative eigenvalues of S.
    #[arg(long, value_name = "PATH")]
    pub spectrum: PathBuf,
    #[arg(long)]
    pub p: u32,
    #[arg(long)]
    pub n: u32,
    #[arg(long, value_enum, default_value_t = VarianceMethod::Recursion)]
    pub method: VarianceMethod,
}

#[derive(Serialize)]
struct VarianceCliReport {
    method: &'static str,
    p: u32,
    n: u32,
    d: usize,
    mean: f64,
    second_moment: f64,
    variance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    per_q: Option<Vec<QContribution>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    normative_variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    discrepancy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    convention_note: Option<String>,
}

pub fn cmd_variance(args: &VarianceArgs, format: Format) -> Result<String> {
    require_n_ge_p(args.p, args.n)?;
    let manifest = RunManifest::new("variance")
        .param("p", args.p)
        .param("n", args.n)
        .param("method", args.method.name());
    let (spectrum, manifest) = load_spectrum(None, Some(&args.spectrum), manifest)?;
    let d = spectrum.dim();
    let mean = schatten_2p_power(&spectrum, args.p as usize)?;

    let report = match args.method {
        VarianceMethod::Recursion => {
            let table = trace_powers(&spectrum, 2 * args.p as usize)?;
            let rep = exact_variance(args.p, args.n, &table)?;
            VarianceCliReport {
                method: args.method.name(),
                p: rep.p,
                n: rep.n,
                d: rep.d,
                mean: rep.mean,
                second_moment: rep.second_moment,
                variance: rep.variance,
                per_q: Some(rep.per_q),
                normative_variance: None,
                discrepancy: None,
                convention_note: None,
            }
        }
        VarianceMethod::PaperLiteral => {
            let table = trace_powers(&spectrum, 2 * args.p as usize)?;
            let rep = variance_literal(args.p, args.n, &table)?;
            VarianceCliReport {
                method: args.method.name(),
                p: rep.p,
                n: rep.n,
                d: rep.d,
                mean,
                second_moment: rep.literal_variance + mean * mean,
                variance: rep.literal_variance,
                per_q: None,
                normative_variance: Some(rep.normative_variance),
                discrepancy: Some(rep.discrepancy),
                convention_note: Some(rep.convention_note),
            }
        }
        VarianceMethod::Brute => {
            let variance = brute_variance(args.p, args.n, &spectrum)?;
            VarianceCliReport {
                method: args.method.name(),
                p: args.p,
                n: args.n,
                d,
                mean,
                second_moment: variance + mean * mean,
                variance,
                per_q: None,
                normative_variance: None,
                discrepancy: None,
                convention_note: None,
            }
        }
        VarianceMethod::Oracle => {
            let variance = oracle_variance(args.p, args.n, &spectrum)?;
            VarianceCliReport {
                method: args.method.name(),
                p: args.p,
                n: args.n,
                d,
                mean,
                second_moment: variance + mean * mean,
                variance,
                per_q: None,
                normative_variance: None,
                discrepancy: None,
                convention_note: None,
            }
        }
    };

    match format {
        Format::Json => render_json(manifest, report),
        Format::Csv => {
            let header = vec![
                "p", "n", "d", "method", "mean", "second_moment", "variance",
                "normative_variance", "discrepancy",
            ]
            .into_iter()
            .map(String::from)
            .collect();
            let row = vec![
                report.p.to_string(),
                report.n.to_string(),
                report.d.to_string(),
                report.method.to_string(),
                fmt_f64(report.mean),
                fmt_f64(report.second_moment),
                fmt_f64(report.variance),
                fmt_opt(report.normative_variance),
                fmt_opt(report.discrepancy),
            ];
            Ok(csv_document(&[header, row]))
        }
        Format::Text => {
            let mut pairs = vec![
                ("method".into(), report.method.to_string()),
                ("p".into(), report.p.to_string()),
                ("n".into(), report.n.to_string()),
                ("d".into(), report.d.to_string()),
                ("mean".into(), fmt_f64(report.mean)),
                ("second_moment".into(), fmt_f64(report.second_moment)),
                ("variance".into(), fmt_f64(report.variance)),
            ];
            if let Some(v) = report.normative_variance {
                pairs.push(("normative_variance".into(), fmt_f64(v)));
            }
            if let Some(v) = report.discrepancy {
                pairs.push(("discrepancy".into(), fmt_f64(v)));
            }
            if let Some(v) = &report.convention_note {
                pairs.push(("convention_note".into(), v.clone()));
            }
            if let Some(per_q) = &report.per_q {
                for c in per_q {
                    pairs.push((
                        format!("per_q[{}]", c.q),
                        format!("pairs={} sum={}", c.pair_count, fmt_f64(c.expectation_sum)),
                    ));
                }
            }
            Ok(text_document(&pairs))
        }
    }
}

// ---------------------------------------------------------------- bounds

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// JSON array of non-negative eigenvalues of S.
    #[arg(long, value_name = "PATH", required_unless_present = "grid", conflicts_with = "grid")]
    pub spectrum: Option<PathBuf>,
    #[arg(long, required_unless_present = "grid", conflicts_with = "grid")]
    pub p: Option<u32>,
    #[arg(long, required_unless_present = "grid", conflicts_with = "grid")]
    pub n: Option<u32>,
    /// Condition-number parameter of the baseline bound.
    #[arg(long, default_value_t = 3.0)]
    pub kappa: f64,
    /// Sweep specification `p=LIST;n=LIST;d=LIST` where LIST is
    /// comma-separated integers or inclusive ranges `a..b`. Sweeps use
    /// identity spectra (so the exact variance is available per cell)
    /// and emit one row per (p, n, d).
    #[arg(long, value_name = "SPEC")]
    pub grid: Option<String>,
}

pub fn cmd_bounds(args: &BoundsArgs, format: Format) -> Result<String> {
    match &args.grid {
        None => bounds_single(args, format),
        Some(spec) => bounds_grid(args, spec, format),
    }
}

fn bounds_single(args: &BoundsArgs, format: Format) -> Result<String> {
    let (p, n) = (args.p.expect("clap enforces"), args.n.expect("clap enforces"));
    if p == 0 || n == 0 {
        return Err(Error::InvalidInput("p and n must be >= 1".into()));
    }
    let manifest = RunManifest::new("bounds")
        .param("p", p)
        .param("n", n)
        .param("kappa", args.kappa);
    let (spectrum, manifest) = load_spectrum(None, args.spectrum.as_ref(), manifest)?;
    let d = spectrum.dim();
    let trace_p = schatten_2p_power(&spectrum, p as usize)?;
    // Exact variance when feasible: n >= p and the trace powers fit.
    let exact = if n >= p {
        trace_powers(&spectrum, 2 * p as usize)
            .and_then(|t| exact_variance(p, n, &t))
            .ok()
            .map(|r| r.variance)
    } else {
        None
    };
    let report = bound_report(p, n, d, args.kappa, trace_p, exact);
    render_bounds(manifest, vec![report], format)
}

fn bounds_grid(args: &BoundsArgs, spec: &str, format: Format) -> Result<String> {
    let (ps, ns, ds) = parse_grid(spec)?;
    let manifest = RunManifest::new("bounds")
        .param("grid", spec)
        .param("kappa", args.kappa);
    let mut reports = Vec::new();
    for &p in &ps {
        for &n in &ns {
            for &d in &ds {
                let spectrum = Spectrum::identity(d);
                let trace_p = schatten_2p_power(&spectrum, p as usize)?;
                let exact = if n >= p {
                    trace_powers(&spectrum, 2 * p as usize)
                        .and_then(|t| exact_variance(p, n, &t))
                        .ok()
                        .map(|r| r.variance)
                } else {
                    None
                };
                reports.push(bound_report(p, n, d, args.kappa, trace_p, exact));
            }
        }
    }
    render_bounds(manifest, reports, format)
}

/// Parses `p=LIST;n=LIST;d=LIST`; every key required exactly once.
fn parse_grid(spec: &str) -> Result<(Vec<u32>, Vec<u32>, Vec<usize>)> {
    let mut p: Option<Vec<u64>> = None;
    let mut n: Option<Vec<u64>> = None;
    let mut d: Option<Vec<u64>> = None;
    for segment in spec.split(';') {
        let (key, list) = segment.split_once('=').ok_or_else(|| {
            Error::InvalidInput(format!("grid segment {segment:?} is not key=LIST"))
        })?;
        let values = parse_list(list.trim())?;
        let slot = match key.trim() {
            "p" => &mut p,
            "n" => &mut n,
            "d" => &mut d,
            other => {
                return Err(Error::InvalidInput(format!(
                    "grid key {other:?} is not one of p, n, d"
                )))
            }
        };
        if slot.replace(values).is_some() {
            return Err(Error::InvalidInput(format!("grid key {} given twice", key.trim())));
        }
    }
    let p = p.ok_or_else(|| Error::InvalidInput("grid is missing p=".into()))?;
    let n = n.ok_or_else(|| Error::InvalidInput("grid is missing n=".into()))?;
    let d = d.ok_or_else(|| Error::InvalidInput("grid is missing d=".into()))?;
    if p.iter().any(|&x| x == 0) || n.iter().any(|&x| x == 0) || d.iter().any(|&x| x == 0) {
        return Err(Error::InvalidInput("grid values must be >= 1".into()));
    }
    Ok((
        p.into_iter().map(|x| x as u32).collect(),
        n.into_iter().map(|x| x as u32).collect(),
        d.into_iter().map(|x| x as usize).collect(),
    ))
}

fn parse_list(list: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for item in list.split(',') {
        let item = item.trim();
        if let Some((a, b)) = item.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| bad_grid_item(item))?;
            let b: u64 = b.trim().parse().map_err(|_| bad_grid_item(item))?;
            if a > b {
                return Err(Error::InvalidInput(format!("empty grid range {item:?}")));
            }
            out.extend(a..=b);
        } else {
            out.push(item.parse().map_err(|_| bad_grid_item(item))?);
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidInput("empty grid list".into()));
    }
    Ok(out)
}

fn bad_grid_item(item: &str) -> Error {
    Error::InvalidInput(format!("grid item {item:?} is not an integer or a..b range"))
}

fn render_bounds(manifest: RunManifest, reports: Vec<BoundReport>, format: Format) -> Result<String> {
    match format {
        Format::Json => {
            if reports.len() == 1 {
                render_json(manifest, reports.into_iter().next().expect("one report"))
            } else {
                render_json(manifest, reports)
            }
        }
        Format::Csv => {
            let mut rows = vec![vec![
                "p", "n", "d", "b1", "b2", "b3", "b4", "new_bound", "kv_bound",
                "exact_variance", "slack", "ratio",
            ]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>()];
            for r in &reports {
                rows.push(vec![
                    r.p.to_string(),
                    r.n.to_string(),
                    r.d.to_string(),
                    fmt_f64(r.b1),
                    fmt_f64(r.b2),
                    fmt_f64(r.b3),
                    fmt_f64(r.b4),
                    fmt_f64(r.new_bound),
                    fmt_f64(r.kv_bound),
                    fmt_opt(r.exact_variance),
                    fmt_opt(r.slack),
                    fmt_f64(r.ratio),
                ]);
            }
            Ok(csv_document(&rows))
        }
        Format::Text => {
            let mut pairs = Vec::new();
            for r in &reports {
                let prefix = if reports.len() == 1 {
                    String::new()
                } else {
                    format!("p={} n={} d={} ", r.p, r.n, r.d)
                };
                pairs.push((format!("{prefix}b1"), fmt_f64(r.b1)));
                pairs.push((format!("{prefix}b2"), fmt_f64(r.b2)));
                pairs.push((format!("{prefix}b3"), fmt_f64(r.b3)));
                pairs.push((format!("{prefix}b4"), fmt_f64(r.b4)));
                pairs.push((format!("{prefix}new_bound"), fmt_f64(r.new_bound)));
                pairs.push((format!("{prefix}adjusted_bound"), fmt_f64(r.adjusted_bound)));
                pairs.push((format!("{prefix}kv_bound"), fmt_f64(r.kv_bound)));
                pairs.push((format!("{prefix}ratio"), fmt_f64(r.ratio)));
                pairs.push((format!("{prefix}exact_variance"), fmt_opt(r.exact_variance)));
                pairs.push((format!("{prefix}slack"), fmt_opt(r.slack)));
            }
            Ok(text_document(&pairs))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_accepts_lists_and_ranges() {
        let (p, n, d) = parse_grid("p=2,3;n=4..6;d=2").unwrap();
        assert_eq!(p, vec![2, 3]);
        assert_eq!(n, vec![4, 5, 6]);
        assert_eq!(d, vec![2]);
    }

    #[test]
    fn grid_accepts_keys_in_any_order_with_spaces() {
        let (p, n, d) = parse_grid(" d = 2 , 4 ; p = 1 ; n = 3 .. 4 ").unwrap();
        assert_eq!(p, vec![1]);
        assert_eq!(n, vec![3, 4]);
        assert_eq!(d, vec![2, 4]);
    }

    #[test]
    fn grid_rejects_malformed_specs() {
        for bad in [
            "p=2;n=4",          // missing d
            "p=2;n=4;d=x",      // not an integer
            "p=2;n=4;d=3..1",   // empty range
            "p=2;p=3;n=4;d=2",  // duplicate key
            "q=2;n=4;d=2",      // unknown key
            "p=0;n=4;d=2",      // zero value
            "p=2;n=;d=2",       // empty list
            "p 2;n=4;d=2",      // no equals sign
        ] {
            assert!(parse_grid(bad).is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn n_below_p_is_rejected_with_the_documented_message() {
        let err = require_n_ge_p(5, 3).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("n must be >= p (got p=5, n=3)"));
    }
}
