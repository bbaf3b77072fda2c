//! The validate subcommand: a self-contained cross-check suite.
//!
//! Every check compares two independent routes to the same number
//! (closed form vs engine, engine vs Wick oracle, exact vs Monte
//! Carlo). The ERRATA section re-derives the known defects of the
//! printed formulas and reports whether they reproduce as documented;
//! an expected erratum is not a failure. All inputs are generated
//! deterministically from the seed, so two runs with the same
//! arguments emit byte-identical reports regardless of thread count.

use clap::Args;
use serde::Serialize;

use schatten::bounds::{bound_report, moment_sandwich_check};
use schatten::cycles::{
    binomial, overlap_decompose, pair_count, tech1_ratio, tech2_holds, IncreasingCycle,
};
use schatten::moments::{MomentEvaluator, MomentQuery};
use schatten::oracle::{isserlis_moment, quartic_identity_residual};
use schatten::sketch::{run_experiment, sample_sketch, SketchConfig};
use schatten::spectrum::{schatten_2p_power, trace_powers, Spectrum};
use schatten::variance::{
    brute_variance, exact_variance, exact_variance_closed_p2, oracle_variance, pair_expectation,
    variance_literal,
};
use schatten::{Error, Result};

use crate::manifest::RunManifest;
use crate::output::{csv_document, fmt_f64, render_json, Format};

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Cycle length for the variance and Monte Carlo checks.
    #[arg(long, default_value_t = 2)]
    pub p: u32,
    /// Sketch rows for the variance and Monte Carlo checks.
    #[arg(long, default_value_t = 6)]
    pub n: u32,
    /// Spectrum dimension for the variance and Monte Carlo checks.
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    /// Monte Carlo replicates.
    #[arg(long, default_value_t = 200_000)]
    pub reps: usize,
    /// Master seed for all generated inputs.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum CheckStatus {
    Pass,
    Fail,
    /// Check not applicable at these parameters (for example a size
    /// guard refused the brute-force route); never counts as failure.
    Skip,
}

#[derive(Serialize)]
struct CheckResult {
    name: &'static str,
    status: CheckStatus,
    detail: String,
}

impl CheckResult {
    fn pass(name: &'static str, detail: String) -> Self {
        Self { name, status: CheckStatus::Pass, detail }
    }
    fn fail(name: &'static str, detail: String) -> Self {
        Self { name, status: CheckStatus::Fail, detail }
    }
    fn skip(name: &'static str, detail: String) -> Self {
        Self { name, status: CheckStatus::Skip, detail }
    }
    fn of(name: &'static str, ok: bool, detail: String) -> Self {
        if ok {
            Self::pass(name, detail)
        } else {
            Self::fail(name, detail)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum ErrataStatus {
    /// The defect reproduces exactly as documented in ERRATA.md.
    Expected,
    /// The observation contradicts the documented defect.
    Unexpected,
}

#[derive(Serialize)]
struct ErrataItem {
    name: &'static str,
    status: ErrataStatus,
    detail: String,
}

impl ErrataItem {
    fn of(name: &'static str, expected: bool, detail: String) -> Self {
        let status = if expected { ErrataStatus::Expected } else { ErrataStatus::Unexpected };
        Self { name, status, detail }
    }
}

#[derive(Serialize)]
struct ValidateReport {
    p: u32,
    n: u32,
    d: usize,
    reps: usize,
    seed: u64,
    checks: Vec<CheckResult>,
    errata: Vec<ErrataItem>,
    /// True when every check passes (skips allowed) and every erratum
    /// reproduces as documented.
    passed: bool,
}

/// Runs the suite; the boolean is the overall verdict for the exit code.
pub fn cmd_validate(args: &ValidateArgs, format: Format) -> Result<(String, bool)> {
    if args.p == 0 {
        return Err(Error::InvalidInput("p must be >= 1".into()));
    }
    if args.n < args.p {
        return Err(Error::InvalidInput(format!(
            "n must be >= p (got p={}, n={})",
            args.p, args.n
        )));
    }
    if args.d == 0 {
        return Err(Error::InvalidInput("d must be >= 1".into()));
    }

    let manifest = RunManifest::new("validate")
        .seed(args.seed)
        .param("p", args.p)
        .param("n", args.n)
        .param("d", args.d as u64)
        .param("reps", args.reps as u64);

    let checks = vec![
        check_trace_power_table(),
        check_base_moment_values()?,
        check_closed_form_p2(args.seed)?,
        check_oracle_moment_agreement(args.seed, args.d)?,
        check_closed_vs_recursion(args.seed)?,
        check_brute_variance(args),
        check_oracle_variance(args),
        check_monte_carlo(args)?,
        check_sketch_determinism(args)?,
        check_quartic_identity(args.seed)?,
        check_sandwich_containment()?,
        check_counting_identities(),
    ];
    let errata = vec![
        erratum_literal_moment()?,
        erratum_literal_variance()?,
        erratum_printed_bound()?,
        erratum_printed_envelope()?,
    ];

    let passed = checks.iter().all(|c| c.status != CheckStatus::Fail)
        && errata.iter().all(|e| e.status == ErrataStatus::Expected);
    let report = ValidateReport {
        p: args.p,
        n: args.n,
        d: args.d,
        reps: args.reps,
        seed: args.seed,
        checks,
        errata,
        passed,
    };

    let rendered = match format {
        Format::Json => render_json(manifest, &report)?,
        Format::Csv => {
            let mut rows = vec![vec![
                "kind".to_string(),
                "name".to_string(),
                "status".to_string(),
                "detail".to_string(),
            ]];
            for c in &report.checks {
                rows.push(vec![
                    "check".into(),
                    c.name.into(),
                    format!("{:?}", c.status).to_lowercase(),
                    c.detail.clone(),
                ]);
            }
            for e in &report.errata {
                rows.push(vec![
                    "erratum".into(),
                    e.name.into(),
                    format!("{:?}", e.status).to_lowercase(),
                    e.detail.clone(),
                ]);
            }
            rows.push(vec![
                "summary".into(),
                "passed".into(),
                report.passed.to_string(),
                String::new(),
            ]);
            csv_document(&rows)
        }
        Format::Text => {
            let mut out = String::new();
            out.push_str("CHECKS\n");
            for c in &report.checks {
                let tag = format!("{:?}", c.status).to_uppercase();
                out.push_str(&format!("  [{tag}] {}: {}\n", c.name, c.detail));
            }
            out.push_str("ERRATA (documented defects of the printed formulas; expected is healthy)\n");
            for e in &report.errata {
                let tag = format!("{:?}", e.status).to_uppercase();
                out.push_str(&format!("  [{tag}] {}: {}\n", e.name, e.detail));
            }
            out.push_str(&format!("passed = {}\n", report.passed));
            out
        }
    };
    Ok((rendered, passed))
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Deterministic strictly positive spectrum derived from the sketch
/// generator, so the suite needs no separate randomness source.
fn seeded_spectrum(d: usize, seed: u64, stream: u64) -> Spectrum {
    let x = sample_sketch(1, d, seed, stream);
    let eig: Vec<f64> = x.as_slice().iter().map(|v| v * v + 0.05).collect();
    Spectrum::new(eig).expect("squares plus offset are valid eigenvalues")
}

fn check_trace_power_table() -> CheckResult {
    const NAME: &str = "trace_power_table";
    let id = Spectrum::identity(3);
    let t_id = match trace_powers(&id, 4) {
        Ok(t) => t,
        Err(e) => return CheckResult::fail(NAME, format!("table build failed: {e}")),
    };
    for k in 0..=4 {
        if t_id.value(k) != 3.0 {
            return CheckResult::fail(NAME, format!("identity power {k} gave {}", t_id.value(k)));
        }
    }
    let s = Spectrum::new(vec![1.0, 2.0, 3.0]).expect("valid");
    let t = match trace_powers(&s, 4) {
        Ok(t) => t,
        Err(e) => return CheckResult::fail(NAME, format!("table build failed: {e}")),
    };
    let want = [3.0, 6.0, 14.0, 36.0, 98.0];
    for (k, w) in want.iter().enumerate() {
        if (t.value(k) - w).abs() > 1e-12 * w {
            return CheckResult::fail(NAME, format!("power {k} gave {} not {w}", t.value(k)));
        }
    }
    CheckResult::pass(NAME, "power sums match hand values on two spectra".into())
}

fn check_base_moment_values() -> Result<CheckResult> {
    const NAME: &str = "base_moment_values";
    let s = Spectrum::new(vec![1.0, 2.0, 3.0]).expect("valid");
    let t = trace_powers(&s, 4)?;
    let b11 = schatten::moments::base_moment(1, 1, &t)?;
    let b22 = schatten::moments::base_moment(2, 2, &t)?;

    let id = Spectrum::identity(3);
    let tid = trace_powers(&id, 4)?;
    // One shared index between two 2-cycles: expectation 2S₄ + S₂².
    let sigma = IncreasingCycle::new(vec![1, 2], 3)?;
    let tau = IncreasingCycle::new(vec![2, 3], 3)?;
    let pattern = overlap_decompose(&sigma, &tau)?;
    let folded = pair_expectation(&pattern, &tid)?;
    let ev = MomentEvaluator::new(&tid);
    let same = ev.evaluate(&MomentQuery::same_order(vec![1, 1], vec![1, 1])?)?;
    let rev = ev.evaluate(&MomentQuery::reversed(vec![1, 1], vec![1, 1])?)?;

    let ok = (b11 - 64.0).abs() <= 1e-12 * 64.0
        && (b22 - 392.0).abs() <= 1e-12 * 392.0
        && (folded - 15.0).abs() <= 1e-12 * 15.0
        && (same - 45.0).abs() <= 1e-12 * 45.0
        && (rev - 75.0).abs() <= 1e-12 * 75.0;
    Ok(CheckResult::of(
        NAME,
        ok,
        format!(
            "base(1,1)={b11} base(2,2)={b22} folded_q1={folded} same_order={same} reversed={rev}"
        ),
    ))
}

fn check_closed_form_p2(seed: u64) -> Result<CheckResult> {
    const NAME: &str = "closed_form_p2";
    let mut worst = 0.0f64;
    let mut cells = 0u32;
    for (i, &n) in [2u32, 6, 11].iter().enumerate() {
        for j in 0..5u64 {
            let d = 2 + ((i as u64 + j) % 5) as usize;
            let s = seeded_spectrum(d, seed, 100 + 10 * i as u64 + j);
            let t = trace_powers(&s, 4)?;
            let engine = exact_variance(2, n, &t)?.variance;
            let closed = exact_variance_closed_p2(n, &t)?;
            worst = worst.max(rel_err(engine, closed));
            cells += 1;
        }
    }
    Ok(CheckResult::of(
        NAME,
        worst <= 1e-12,
        format!("pattern engine vs closed form, {cells} cells, worst rel err {worst:.3e}"),
    ))
}

fn check_oracle_moment_agreement(seed: u64, d: usize) -> Result<CheckResult> {
    const NAME: &str = "oracle_moment_agreement";
    let mut dims = vec![2usize, 3];
    if d <= 4 && !dims.contains(&d) {
        dims.push(d);
    }
    let mut worst = 0.0f64;
    let mut count = 0u32;
    for (di, &dim) in dims.iter().enumerate() {
        let s = seeded_spectrum(dim, seed, 200 + di as u64);
        let t = trace_powers(&s, 12)?;
        let ev = MomentEvaluator::new(&t);
        for q in 1..=3usize {
            for combo in exponent_combos(2 * q, 2) {
                let (k, m) = combo.split_at(q);
                for reversed in [false, true] {
                    let query = if reversed {
                        MomentQuery::reversed(k.to_vec(), m.to_vec())?
                    } else {
                        MomentQuery::same_order(k.to_vec(), m.to_vec())?
                    };
                    let lhs = ev.evaluate(&query)?;
                    let rhs = isserlis_moment(&query, &s)?;
                    worst = worst.max(rel_err(lhs, rhs));
                    count += 1;
                }
            }
        }
    }
    Ok(CheckResult::of(
        NAME,
        worst <= 1e-10,
        format!("recursion vs Wick enumeration, {count} queries, worst rel err {worst:.3e}"),
    ))
}

/// All exponent vectors of the given length with entries `0..=max`.
fn exponent_combos(len: usize, max: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        let mut next = Vec::with_capacity(out.len() * (max as usize + 1));
        for prefix in &out {
            for e in 0..=max {
                let mut v = prefix.clone();
                v.push(e);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

fn check_closed_vs_recursion(seed: u64) -> Result<CheckResult> {
    const NAME: &str = "closed_vs_recursion_words";
    let mut worst = 0.0f64;
    let mut count = 0u32;
    for (di, dim) in [2usize, 4, 6].into_iter().enumerate() {
        let s = seeded_spectrum(dim, seed, 300 + di as u64);
        let t = trace_powers(&s, 24)?;
        let ev = MomentEvaluator::new(&t);
        for q in 1..=4usize {
            // Exhaustive for short chains, a fixed stride for q = 4.
            let stride = if q == 4 { 37 } else { 1 };
            for (idx, combo) in exponent_combos(2 * q, 3).into_iter().enumerate() {
                if idx % stride != 0 {
                    continue;
                }
                let (k, m) = combo.split_at(q);
                let query = MomentQuery::reversed(k.to_vec(), m.to_vec())?;
                let rec = ev.evaluate(&query)?;
                let closed = ev.evaluate_closed(&query)?;
                worst = worst.max(rel_err(rec, closed));
                count += 1;
            }
        }
    }
    Ok(CheckResult::of(
        NAME,
        worst <= 1e-10,
        format!("recursion vs word closed form, {count} queries, worst rel err {worst:.3e}"),
    ))
}

fn check_brute_variance(args: &ValidateArgs) -> CheckResult {
    const NAME: &str = "brute_variance_agreement";
    let s = Spectrum::identity(args.d);
    match brute_variance(args.p, args.n, &s) {
        Err(Error::SizeGuard(msg)) => {
            CheckResult::skip(NAME, format!("brute-force route refused: {msg}"))
        }
        Err(e) => CheckResult::fail(NAME, format!("brute-force route errored: {e}")),
        Ok(brute) => match trace_powers(&s, 2 * args.p as usize)
            .and_then(|t| exact_variance(args.p, args.n, &t))
        {
            Err(e) => CheckResult::fail(NAME, format!("exact engine errored: {e}")),
            Ok(rep) => {
                let err = rel_err(brute, rep.variance);
                CheckResult::of(
                    NAME,
                    err <= 1e-10,
                    format!(
                        "all-pairs enumeration {} vs engine {} (rel err {err:.3e})",
                        fmt_f64(brute),
                        fmt_f64(rep.variance)
                    ),
                )
            }
        },
    }
}

fn check_oracle_variance(args: &ValidateArgs) -> CheckResult {
    const NAME: &str = "oracle_variance_agreement";
    let s = Spectrum::identity(args.d);
    match oracle_variance(args.p, args.n, &s) {
        Err(Error::SizeGuard(msg)) => {
            CheckResult::skip(NAME, format!("oracle route refused: {msg}"))
        }
        Err(e) => CheckResult::fail(NAME, format!("oracle route errored: {e}")),
        Ok(oracle) => match trace_powers(&s, 2 * args.p as usize)
            .and_then(|t| exact_variance(args.p, args.n, &t))
        {
            Err(e) => CheckResult::fail(NAME, format!("exact engine errored: {e}")),
            Ok(rep) => {
                let err = rel_err(oracle, rep.variance);
                CheckResult::of(
                    NAME,
                    err <= 1e-10,
                    format!(
                        "Wick-oracle classes {} vs engine {} (rel err {err:.3e})",
                        fmt_f64(oracle),
                        fmt_f64(rep.variance)
                    ),
                )
            }
        },
    }
}

fn check_monte_carlo(args: &ValidateArgs) -> Result<CheckResult> {
    const NAME: &str = "monte_carlo_agreement";
    if args.reps < 50 {
        return Ok(CheckResult::skip(
            NAME,
            format!("needs at least 50 replicates for batched errors, got {}", args.reps),
        ));
    }
    let s = Spectrum::identity(args.d);
    let target = schatten_2p_power(&s, args.p as usize)?;
    let table = trace_powers(&s, 2 * args.p as usize)?;
    let exact = exact_variance(args.p, args.n, &table)?.variance;
    let config = SketchConfig::new(args.p, args.n, args.seed, args.reps, s)?;
    let stats = run_experiment(&config)?;

    let se_mean = stats.stderr_mean.expect("reps >= 50");
    let se_var = stats.stderr_variance.expect("reps >= 50");
    let emp_var = stats.empirical_variance.expect("reps >= 50");
    let mean_ok = (stats.empirical_mean - target).abs() <= 4.0 * se_mean;
    let var_close = exact <= 0.0 || (emp_var - exact).abs() <= 0.05 * exact;
    let var_se_ok = (emp_var - exact).abs() <= 4.0 * se_var;
    Ok(CheckResult::of(
        NAME,
        mean_ok && var_close && var_se_ok,
        format!(
            "mean {} vs target {} (4se {}), variance {} vs exact {} (4se {})",
            fmt_f64(stats.empirical_mean),
            fmt_f64(target),
            fmt_f64(4.0 * se_mean),
            fmt_f64(emp_var),
            fmt_f64(exact),
            fmt_f64(4.0 * se_var)
        ),
    ))
}

fn check_sketch_determinism(args: &ValidateArgs) -> Result<CheckResult> {
    const NAME: &str = "sketch_determinism";
    let s = Spectrum::identity(args.d);
    let config = SketchConfig::new(args.p, args.n, args.seed, 64, s)?;
    let a = run_experiment(&config)?;
    let b = run_experiment(&config)?;
    let ok = a.empirical_mean.to_bits() == b.empirical_mean.to_bits()
        && a.empirical_variance.map(f64::to_bits) == b.empirical_variance.map(f64::to_bits);
    Ok(CheckResult::of(
        NAME,
        ok,
        "two 64-replicate runs reduced to bit-identical statistics".into(),
    ))
}

fn check_quartic_identity(seed: u64) -> Result<CheckResult> {
    const NAME: &str = "quartic_identity";
    let mut worst = 0.0f64;
    for t in 0..20u64 {
        let d = 2 + (t % 3) as usize;
        let a = sample_sketch(d as u32, d, seed, 400 + 2 * t);
        let s = seeded_spectrum(d, seed, 401 + 2 * t);
        worst = worst.max(quartic_identity_residual(&a, &s)?);
    }
    Ok(CheckResult::of(
        NAME,
        worst <= 1e-12,
        format!("20 seeded (A, S) pairs, worst residual {worst:.3e}"),
    ))
}

fn check_sandwich_containment() -> Result<CheckResult> {
    const NAME: &str = "sandwich_containment";
    let mut tested = 0u32;
    let mut printed_misses = 0u32;
    for d in [2usize, 3, 5] {
        let s = Spectrum::identity(d);
        let t = trace_powers(&s, 12)?;
        let mut queries = Vec::new();
        // Folded window shapes of genuine overlapping pairs at p = 3.
        for k in [[1u32, 2], [2, 1]] {
            for m in [[1u32, 2], [2, 1]] {
                queries.push(MomentQuery::same_order(k.to_vec(), m.to_vec())?);
                queries.push(MomentQuery::reversed(k.to_vec(), m.to_vec())?);
            }
        }
        queries.push(MomentQuery::same_order(vec![1, 1, 1], vec![1, 1, 1])?);
        queries.push(MomentQuery::reversed(vec![1, 1, 1], vec![1, 1, 1])?);
        for query in &queries {
            let rep = moment_sandwich_check(query, &t, 3)?;
            let lo = rep.cases.iter().map(|c| c.lower).fold(f64::INFINITY, f64::min);
            let hi = rep.cases.iter().map(|c| c.upper).fold(f64::NEG_INFINITY, f64::max);
            let tol = 1e-9 * rep.value.abs().max(1.0);
            if !(rep.value >= lo - tol && rep.value <= hi + tol) {
                return Ok(CheckResult::fail(
                    NAME,
                    format!(
                        "value {} outside outer envelope [{}, {}] at d={d}",
                        fmt_f64(rep.value),
                        fmt_f64(lo),
                        fmt_f64(hi)
                    ),
                ));
            }
            if !rep.printed_case_contains {
                printed_misses += 1;
            }
            tested += 1;
        }
    }
    Ok(CheckResult::pass(
        NAME,
        format!(
            "{tested} queries inside the outer envelope; printed case assignment missed {printed_misses} (see ERRATA.md)"
        ),
    ))
}

fn check_counting_identities() -> CheckResult {
    const NAME: &str = "counting_identities";
    for p in 1u32..=4 {
        for n in p..=12 {
            let mut total = pair_count(n, p, 0);
            for q in 1..=p {
                total += pair_count(n, p, q);
            }
            let cycles = binomial(n as u64, p as u64);
            if total != &cycles * &cycles {
                return CheckResult::fail(
                    NAME,
                    format!("overlap counts do not tile the square at p={p}, n={n}"),
                );
            }
            for q in 0..=p {
                let want = binomial((n - p) as u64, (p - q) as u64) * binomial(p as u64, q as u64);
                if tech1_ratio(n, p, q) != want {
                    return CheckResult::fail(
                        NAME,
                        format!("count ratio mismatch at p={p}, n={n}, q={q}"),
                    );
                }
            }
        }
        for n in 2 * p..=20 {
            for q in 0..=p {
                if !tech2_holds(n, p, q) {
                    return CheckResult::fail(
                        NAME,
                        format!("two-sided count inequality fails at p={p}, n={n}, q={q}"),
                    );
                }
            }
        }
    }
    CheckResult::pass(
        NAME,
        "pair counts tile the square, ratios match products, inequalities hold (p <= 4)".into(),
    )
}

fn erratum_literal_moment() -> Result<ErrataItem> {
    const NAME: &str = "literal_moment_discrepancy";
    let s = Spectrum::identity(3);
    let t = trace_powers(&s, 6)?;
    let ev = MomentEvaluator::new(&t);
    let query = MomentQuery::same_order(vec![1, 1], vec![1, 1])?;
    let literal = ev.evaluate_literal(&query)?;
    let normative = ev.evaluate(&query)?;
    let three = MomentQuery::same_order(vec![1, 1, 1], vec![1, 1, 1])?;
    let literal3 = ev.evaluate_literal(&three)?;
    let normative3 = ev.evaluate(&three)?;
    let expected = (literal - 15.0).abs() <= 1e-12 * 15.0
        && (normative - 45.0).abs() <= 1e-12 * 45.0
        && (literal3 - 105.0).abs() <= 1e-12 * 105.0
        && (normative3 - 165.0).abs() <= 1e-12 * 165.0;
    Ok(ErrataItem::of(
        NAME,
        expected,
        format!(
            "printed expansion gives {} where the recursion gives {} (documented: 15 vs 45); three-vector case gives {} vs {} (documented: 105 vs 165)",
            fmt_f64(literal),
            fmt_f64(normative),
            fmt_f64(literal3),
            fmt_f64(normative3)
        ),
    ))
}

fn erratum_literal_variance() -> Result<ErrataItem> {
    const NAME: &str = "literal_variance_discrepancy";
    let s = Spectrum::identity(3);
    let t = trace_powers(&s, 4)?;
    let rep = variance_literal(2, 6, &t)?;
    let expected = rep.discrepancy.abs() > 1e-6
        && (rep.normative_variance - 5.6).abs() <= 1e-9 * 5.6;
    Ok(ErrataItem::of(
        NAME,
        expected,
        format!(
            "printed second-moment expansion gives variance {} where the engine gives {} at p=2, n=6, identity d=3",
            fmt_f64(rep.literal_variance),
            fmt_f64(rep.normative_variance)
        ),
    ))
}

fn erratum_printed_bound() -> Result<ErrataItem> {
    const NAME: &str = "printed_bound_violation";
    // Skewed spectra make the dropped cross moment matter; the identity
    // spectrum satisfies the printed bound and is no witness.
    let s = Spectrum::new(vec![1.0, 0.1]).expect("valid");
    let t = trace_powers(&s, 4)?;
    let exact = exact_variance(2, 5, &t)?.variance;
    let trace_p = schatten_2p_power(&s, 2)?;
    let rep = bound_report(2, 5, 2, 3.0, trace_p, Some(exact));
    let expected = rep.slack.map(|x| x < 0.0).unwrap_or(false) && rep.adjusted_bound >= exact;
    Ok(ErrataItem::of(
        NAME,
        expected,
        format!(
            "exact variance {} exceeds printed bound {} at p=2, n=5, spectrum (1, 0.1); adjusted bound {} holds",
            fmt_f64(exact),
            fmt_f64(rep.new_bound),
            fmt_f64(rep.adjusted_bound)
        ),
    ))
}

fn erratum_printed_envelope() -> Result<ErrataItem> {
    const NAME: &str = "printed_envelope_violation";
    // Reversed chains: the printed case label points at the wrong
    // envelope on the identity pair (75 sits below the floor 81).
    let id = Spectrum::identity(3);
    let t_id = trace_powers(&id, 12)?;
    let rev = MomentQuery::reversed(vec![1, 1], vec![1, 1])?;
    let rev_rep = moment_sandwich_check(&rev, &t_id, 2)?;
    let label_defect = !rev_rep.printed_case_contains && rev_rep.swapped_case_contains;

    // Ordered chains: off flat spectra both orientations fail outright
    // (6S₄ + 3S₂² exceeds both uppers whenever eigenvalues differ).
    let skew = Spectrum::new(vec![1.0, 0.5]).expect("valid");
    let t_skew = trace_powers(&skew, 4)?;
    let ord = MomentQuery::same_order(vec![1, 1], vec![1, 1])?;
    let ord_rep = moment_sandwich_check(&ord, &t_skew, 2)?;
    let envelope_defect = !ord_rep.printed_case_contains && !ord_rep.swapped_case_contains;

    Ok(ErrataItem::of(
        NAME,
        label_defect && envelope_defect,
        format!(
            "reversed identity pair {} misses its printed case (swapped case contains); ordered moment {} on spectrum (1, 0.5) escapes both orientations",
            fmt_f64(rev_rep.value),
            fmt_f64(ord_rep.value)
        ),
    ))
}
