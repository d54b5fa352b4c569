//! Command-line front end: analyze → eval → scan → verify → report.
//!
//! Exit codes: 0 success, 1 parse error, 2 invalid input, 3 classification
//! failure, 4 missing dependency.

pub mod journal;
pub mod output;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{error::ErrorKind, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::decay::{self, DecayScan, ScanConfig, XMode};
use crate::error::{LabError, Result};
use crate::oscillatory::{Evaluator, Method, Target};
use crate::partition::{self, RegionContext};
use crate::spectral::{analyze_detailed, exponent_table, Analysis, SpectralConfig};
use crate::symbol::PolynomialSymbol;
use journal::{JournalEntry, OutputDigest};
use output::{digest, real, to_document, to_line, write_file, TableHeader};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_CLASSIFICATION: i32 = 3;
pub const EXIT_MISSING: i32 = 4;

pub fn exit_code(e: &LabError) -> i32 {
    match e {
        LabError::Parse(_) => EXIT_PARSE,
        LabError::Classification(_) => EXIT_CLASSIFICATION,
        LabError::MissingDependency(_) => EXIT_MISSING,
        LabError::InvalidInput(_)
        | LabError::Numerical(_)
        | LabError::NonConvergence(_)
        | LabError::Internal(_)
        | LabError::Io(_) => EXIT_INVALID,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    Mollified,
    Partition,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Mollified => Method::Mollified,
            MethodArg::Partition => Method::PartitionGuided,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum TargetArg {
    #[value(name = "I")]
    I,
    #[value(name = "I1")]
    I1,
}

impl From<TargetArg> for Target {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::I => Target::I,
            TargetArg::I1 => Target::I1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Sup,
    Origin,
}

fn positive_real(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s} is not a positive finite number"))
    }
}

fn finite_real(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s} is not finite"))
    }
}

fn positive_count(s: &str) -> std::result::Result<u64, String> {
    let v: u64 = s.trim().parse().map_err(|e| format!("{e}"))?;
    if v > 0 {
        Ok(v)
    } else {
        Err("must be positive".into())
    }
}

#[derive(Debug, Parser)]
#[command(name = "dispersion-lab", version, about = "Fundamental solutions of higher-order Schrödinger equations and their decay")]
#[command(allow_negative_numbers = true)]
pub struct Cli {
    /// Symbol file.
    #[arg(long, global = true)]
    pub symbol: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Absolute tolerance per evaluation.
    #[arg(long, global = true, default_value_t = 1e-6, value_parser = positive_real)]
    pub tol: f64,
    /// Integrand evaluations allowed per evaluation.
    #[arg(long, global = true, default_value_t = crate::oscillatory::DEFAULT_BUDGET, value_parser = positive_count)]
    pub budget: u64,
    #[arg(long, global = true, value_enum, default_value = "partition")]
    pub method: MethodArg,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ellipticity, b, sign condition, L and exponents.
    Analyze,
    /// One evaluation of I or I₁.
    #[command(allow_negative_numbers = true)]
    Eval {
        /// Time; any finite non-zero value.
        #[arg(long, value_parser = finite_real, allow_hyphen_values = true)]
        t: f64,
        /// Comma-separated coordinates; zero when omitted.
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        /// Low-frequency radius; taken from the analysis when omitted.
        #[arg(long, value_parser = positive_real)]
        l: Option<f64>,
        #[arg(long, value_enum, default_value = "I")]
        target: TargetArg,
    },
    /// Region membership and cutoffs on a grid.
    #[command(allow_negative_numbers = true)]
    Regions {
        #[arg(long, value_parser = finite_real, allow_hyphen_values = true)]
        t: f64,
        /// Comma-separated coordinates; zero when omitted.
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        /// Low-frequency radius; taken from the analysis when omitted.
        #[arg(long, value_parser = positive_real)]
        l: Option<f64>,
        /// Grid covers [−half_width, half_width]ⁿ.
        #[arg(long, value_parser = positive_real)]
        half_width: Option<f64>,
        /// Grid points per axis.
        #[arg(long, default_value_t = 41)]
        points: usize,
        /// Also sample this many pairs for the gradient separation check.
        #[arg(long)]
        pairs: Option<usize>,
    },
    /// Sup-over-x amplitude scan over the t grid.
    Scan {
        #[arg(long, value_enum, default_value = "I")]
        target: TargetArg,
        #[arg(long, value_enum, default_value = "sup")]
        mode: ModeArg,
        /// Comma-separated small-t grid in (0, 1).
        #[arg(long)]
        small_t: Option<String>,
        /// Comma-separated large-t grid in [1, ∞).
        #[arg(long)]
        large_t: Option<String>,
    },
    /// Theorem verdict and comparison table from a stored scan.
    Verify {
        #[arg(long, value_enum, default_value = "I")]
        target: TargetArg,
    },
    /// Log-log columns with reference slopes from a stored scan.
    Report {
        #[arg(long, value_enum, default_value = "I")]
        target: TargetArg,
    },
}

/// Everything that determines the output documents.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub symbol_digest: Option<String>,
    pub seed: u64,
    pub tol: f64,
    pub budget: u64,
    pub method: MethodArg,
    pub params: Value,
    pub version: String,
}

impl RunConfig {
    pub fn hash(&self) -> Result<String> {
        Ok(digest(to_line(self)?.as_bytes()))
    }
}

struct Context {
    cli_out: PathBuf,
    config: RunConfig,
    hash: String,
    symbol: Option<(PolynomialSymbol, String)>,
}

impl Context {
    fn symbol(&self) -> Result<&PolynomialSymbol> {
        self.symbol
            .as_ref()
            .map(|(p, _)| p)
            .ok_or_else(|| LabError::InvalidInput("--symbol is required for this command".into()))
    }

    fn header(&self, payload: Value) -> Value {
        let mut doc = json!({
            "version": env!("CARGO_PKG_VERSION"),
            "config_hash": self.hash,
            "command": self.config.command,
        });
        if let (Value::Object(d), Value::Object(p)) = (&mut doc, payload) {
            d.extend(p);
        }
        doc
    }

    fn write(&self, name: &str, text: &str, outputs: &mut Vec<OutputDigest>) -> Result<()> {
        let d = write_file(&self.cli_out.join(name), text)?;
        outputs.push(OutputDigest {
            path: name.to_string(),
            digest: d,
        });
        Ok(())
    }

    fn journal(&self, input_digest: &str, outputs: Vec<OutputDigest>) -> Result<()> {
        journal::append(&self.cli_out, &JournalEntry::new(&self.hash, &self.config.command, input_digest, outputs))
    }

    fn input_digest(&self) -> String {
        self.symbol.as_ref().map(|(_, d)| d.clone()).unwrap_or_default()
    }
}

fn load_symbol(path: &Path) -> Result<(PolynomialSymbol, String)> {
    let bytes = fs::read(path).map_err(|_| LabError::MissingDependency(format!("symbol file {} not found", path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| LabError::Parse(format!("{}: {e}", path.display())))?;
    let p = PolynomialSymbol::parse(&text).map_err(|e| match e {
        LabError::Parse(m) => LabError::Parse(format!("{}: {m}", path.display())),
        other => other,
    })?;
    Ok((p, digest(&bytes)))
}

fn parse_x(s: Option<&str>, n: usize) -> Result<Vec<f64>> {
    let Some(s) = s.map(str::trim).filter(|s| !s.is_empty()) else {
        return Ok(vec![0.0; n]);
    };
    let x: Vec<f64> = s
        .split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|e| LabError::Parse(format!("x component '{c}': {e}"))))
        .collect::<Result<_>>()?;
    if x.len() != n {
        return Err(LabError::InvalidInput(format!("x has {} components but n = {n}", x.len())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(LabError::InvalidInput("x must be finite".into()));
    }
    Ok(x)
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|c| !c.trim().is_empty())
        .map(|c| c.trim().parse::<f64>().map_err(|e| LabError::Parse(format!("grid value '{c}': {e}"))))
        .collect()
}

fn analysis_of(p: &PolynomialSymbol) -> Result<Analysis> {
    analyze_detailed(p, &SpectralConfig::for_dim(p.dim()))
}

/// L, b and exponents of a classified symbol; exit 2/3 otherwise.
fn classified(p: &PolynomialSymbol) -> Result<(Analysis, f64)> {
    let a = analysis_of(p)?;
    if !a.certificate.is_elliptic {
        return Err(LabError::InvalidInput(a.failure.unwrap_or_default()));
    }
    if !a.classified() {
        return Err(LabError::Classification(a.failure.clone().unwrap_or_else(|| "classification failed".into())));
    }
    let l = a.report.as_ref().map(|r| r.l).unwrap_or(f64::NAN);
    Ok((a, l))
}

fn header_for(scan: &DecayScan, hash: &str) -> TableHeader {
    TableHeader {
        symbol: scan.symbol.clone(),
        n: scan.n,
        m: scan.m,
        b: scan.b,
        l: scan.l,
        sigma: scan.sigma,
        config_hash: hash.to_string(),
    }
}

fn cmd_analyze(ctx: &Context) -> Result<()> {
    let p = ctx.symbol()?;
    let a = analysis_of(p)?;
    let doc = ctx.header(json!({
        "symbol": p.to_document(),
        "certificate": a.certificate,
        "report": a.report,
        "exponents": a.exponents,
        "failure": a.failure,
        "classified": a.classified(),
    }));
    let mut outputs = Vec::new();
    ctx.write("analysis.json", &to_document(&doc)?, &mut outputs)?;
    ctx.journal(&ctx.input_digest(), outputs)?;
    if !a.certificate.is_elliptic {
        return Err(LabError::InvalidInput(format!(
            "{}: {}",
            p.name(),
            a.failure.unwrap_or_default()
        )));
    }
    if !a.classified() {
        return Err(LabError::Classification(format!(
            "{}: {}",
            p.name(),
            a.failure.unwrap_or_else(|| "eigenvalues change sign".into())
        )));
    }
    let e = a.exponents.as_ref().expect("classified analyses carry exponents");
    println!(
        "{}: elliptic, b = {}, L = {}, sigma = {}, rho_b = {}",
        p.name(),
        real(e.b),
        real(a.report.as_ref().map(|r| r.l).unwrap_or(f64::NAN)),
        real(e.sigma),
        real(e.rho_b)
    );
    Ok(())
}

fn resolve_l(p: &PolynomialSymbol, l: Option<f64>) -> Result<f64> {
    match l {
        Some(l) => Ok(l),
        None => Ok(classified(p)?.1),
    }
}

fn cmd_eval(ctx: &Context, t: f64, x: Option<&str>, l: Option<f64>, target: Target) -> Result<()> {
    let p = ctx.symbol()?;
    let x = parse_x(x, p.dim())?;
    if t == 0.0 {
        return Err(LabError::InvalidInput("t = 0 is outside the evaluator's domain".into()));
    }
    let eval = Evaluator::new(p)?.with_budget(ctx.config.budget);
    let method: Method = ctx.config.method.into();
    let needs_l = method == Method::PartitionGuided || target == Target::I1;
    let l = if needs_l { resolve_l(p, l)? } else { l.unwrap_or(f64::NAN) };
    let r = eval.evaluate(method, target, t, &x, l, ctx.config.tol)?;
    let doc = ctx.header(json!({
        "symbol": p.name(),
        "t": t,
        "x": x,
        "L": l,
        "target": target.name(),
        "method": r.method.name(),
        "value": {"re": r.value.re, "im": r.value.im},
        "magnitude": r.value.norm(),
        "abs_error_estimate": r.abs_error_estimate,
        "converged": r.converged,
        "diagnostics": r.diagnostics,
    }));
    let mut outputs = Vec::new();
    ctx.write("eval.json", &to_document(&doc)?, &mut outputs)?;
    ctx.journal(&ctx.input_digest(), outputs)?;
    println!(
        "{}({}, {:?}) = {} {:+}i  |.| = {}  err = {}  converged = {}",
        target.name(),
        t,
        x,
        real(r.value.re),
        r.value.im,
        real(r.value.norm()),
        real(r.abs_error_estimate),
        r.converged
    );
    Ok(())
}

fn cmd_regions(
    ctx: &Context,
    t: f64,
    x: Option<&str>,
    l: Option<f64>,
    half_width: Option<f64>,
    points: usize,
    pairs: Option<usize>,
) -> Result<()> {
    let p = ctx.symbol()?;
    let x = parse_x(x, p.dim())?;
    let l = resolve_l(p, l)?;
    let rc = RegionContext::new(t, &x, l, p.degree())?;
    let bounds = crate::bounds::GrowthBounds::for_symbol(p)?.0;
    let reach = bounds.stationary_radius(t, crate::sphere::norm(&x)).max(rc.low_freq_radius).max(l);
    let half_width = half_width.unwrap_or(1.5 * reach);
    let rows = partition::region_grid(p, &rc, half_width, points)?;
    let n = p.dim();
    let mut columns: Vec<String> = (1..=n).map(|j| format!("xi{j}")).collect();
    columns.extend(["regions", "phi1", "phi2", "phi3"].map(String::from));
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let (b, sigma) = match classified(p) {
        Ok((a, _)) => {
            let e = a.exponents.expect("classified analyses carry exponents");
            (e.b, e.sigma)
        }
        Err(_) => (f64::NAN, f64::NAN),
    };
    let header = TableHeader {
        symbol: p.name().to_string(),
        n,
        m: p.degree(),
        b,
        l,
        sigma,
        config_hash: ctx.hash.clone(),
    };
    let mut text = header.render(&cols);
    for row in &rows {
        let mut fields: Vec<String> = row.xi.iter().map(|v| real(*v)).collect();
        let labels: Vec<&str> = row.regions.iter().map(|r| r.label()).collect();
        fields.push(labels.join(","));
        fields.extend([row.cutoffs.phi1, row.cutoffs.phi2, row.cutoffs.phi3].map(real));
        text.push_str(&fields.join("\t"));
        text.push('\n');
    }
    let mut outputs = Vec::new();
    ctx.write("regions.tsv", &text, &mut outputs)?;
    if let Some(pairs) = pairs {
        let rep = partition::check_gradient_separation(p, if b.is_finite() { b } else { 1.0 }, l, t, &x, pairs, ctx.config.seed)?;
        let doc = ctx.header(json!({ "symbol": p.name(), "t": t, "x": x, "separation": rep }));
        ctx.write("separation.json", &to_document(&doc)?, &mut outputs)?;
    }
    ctx.journal(&ctx.input_digest(), outputs)?;
    println!("{} grid points written", rows.len());
    Ok(())
}

fn scan_name(target: Target) -> String {
    format!("scan_{}", target.name())
}

fn cmd_scan(ctx: &Context, target: Target, mode: ModeArg, small: Option<&str>, large: Option<&str>) -> Result<()> {
    let p = ctx.symbol()?;
    let (a, l) = classified(p)?;
    let exps = a.exponents.expect("classified analyses carry exponents");
    let mut cfg = ScanConfig::new(target);
    cfg.method = ctx.config.method.into();
    cfg.mode = match mode {
        ModeArg::Sup => XMode::SupOverX,
        ModeArg::Origin => XMode::Origin,
    };
    cfg.tol = ctx.config.tol;
    cfg.budget = ctx.config.budget;
    if let Some(s) = small {
        cfg.small_t = parse_grid(s)?;
    }
    if let Some(s) = large {
        cfg.large_t = parse_grid(s)?;
    }
    let eval = Evaluator::new(p)?;
    let scan = decay::run_scan(&eval, p.name(), &exps, l, &cfg)?;
    let doc = ctx.header(json!({ "scan": scan }));
    let mut outputs = Vec::new();
    let name = scan_name(target);
    ctx.write(&format!("{name}.json"), &to_document(&doc)?, &mut outputs)?;

    let n = scan.n;
    let mut columns: Vec<String> = vec!["t".into()];
    columns.extend((1..=n).map(|j| format!("x_star{j}")));
    columns.extend(["amplitude", "eval_error", "amplitude_t_sigma", "amplitude_t_half_n", "reliable"].map(String::from));
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut text = header_for(&scan, &ctx.hash).render(&cols);
    for r in &scan.records {
        let mut f = vec![real(r.t)];
        f.extend(r.x_star.iter().map(|v| real(*v)));
        f.push(real(r.amplitude));
        f.push(real(r.eval_error));
        f.push(real(r.amplitude * r.t.powf(scan.sigma)));
        f.push(real(r.amplitude * r.t.powf(n as f64 / 2.0)));
        f.push(r.reliable.to_string());
        text.push_str(&f.join("\t"));
        text.push('\n');
    }
    ctx.write(&format!("{name}.tsv"), &text, &mut outputs)?;
    ctx.journal(&ctx.input_digest(), outputs)?;
    println!(
        "{} scan of {}: slope_small_t = {}, slope_large_t = {}, unreliable points: {}",
        target.name(),
        p.name(),
        scan.fitted.slope_small_t.map_or("null".into(), real),
        scan.fitted.slope_large_t.map_or("null".into(), real),
        scan.unreliable.len()
    );
    Ok(())
}

/// Reads a stored scan document; exit 4 when it is absent.
fn load_scan(out: &Path, target: Target) -> Result<(DecayScan, String)> {
    let path = out.join(format!("{}.json", scan_name(target)));
    let bytes = fs::read(&path).map_err(|_| LabError::MissingDependency(format!("{} not found; run `scan --target {}` first", path.display(), target.name())))?;
    let doc: Value = serde_json::from_slice(&bytes).map_err(|e| LabError::Parse(format!("{}: {e}", path.display())))?;
    let scan: DecayScan = serde_json::from_value(doc["scan"].clone()).map_err(|e| LabError::Parse(format!("{}: {e}", path.display())))?;
    Ok((scan, digest(&bytes)))
}

fn cmd_verify(ctx: &Context, target: Target) -> Result<()> {
    let (scan, input) = load_scan(&ctx.cli_out, target)?;
    let (verdict, file) = match target {
        Target::I1 => (decay::verify_theorem1(&scan)?, "verdict_theorem1.json"),
        Target::I => (decay::verify_theorem2(&scan)?, "verdict_theorem2.json"),
    };
    let exps = exponent_table(scan.n, scan.m, scan.b)?;
    let rows = decay::comparison_table(&exps, Some(&scan));
    let mut outputs = Vec::new();
    let doc = ctx.header(json!({ "verdict": verdict, "exponents": exps }));
    ctx.write(file, &to_document(&doc)?, &mut outputs)?;
    let mut text = header_for(&scan, &ctx.hash).render(&["regime", "new", "yao", "cui", "measured", "holds", "equality"]);
    let opt_bool = |b: Option<bool>| b.map_or("-".to_string(), |v| v.to_string());
    for r in &rows {
        text.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.regime,
            real(r.new),
            real(r.yao),
            real(r.cui),
            r.measured.map_or("null".into(), real),
            opt_bool(r.holds),
            opt_bool(r.equality)
        ));
    }
    ctx.write("comparison.tsv", &text, &mut outputs)?;
    ctx.journal(&input, outputs)?;
    println!("theorem {} on {}: {}", verdict.theorem, scan.symbol, if verdict.pass { "PASS" } else { "FAIL" });
    Ok(())
}

fn cmd_report(ctx: &Context, target: Target) -> Result<()> {
    let (scan, input) = load_scan(&ctx.cli_out, target)?;
    let half = scan.n as f64 / 2.0;
    let anchor = |small: bool| {
        scan.records
            .iter()
            .find(|r| (r.t < 1.0) == small && r.amplitude > 0.0)
            .map(|r| (r.t.log10(), r.amplitude.log10()))
    };
    let small = anchor(true);
    let large = anchor(false);
    let mut text = header_for(&scan, &ctx.hash).render(&["log10_t", "log10_amplitude", "ref_slope_minus_sigma", "ref_slope_minus_half_n"]);
    for r in &scan.records {
        let lt = r.t.log10();
        let la = if r.amplitude > 0.0 { r.amplitude.log10() } else { f64::NAN };
        let rs = small.map_or(f64::NAN, |(t0, a0)| a0 - scan.sigma * (lt - t0));
        let rl = large.map_or(f64::NAN, |(t0, a0)| a0 - half * (lt - t0));
        text.push_str(&format!("{}\t{}\t{}\t{}\n", real(lt), real(la), real(rs), real(rl)));
    }
    let mut outputs = Vec::new();
    ctx.write(&format!("report_{}.tsv", target.name()), &text, &mut outputs)?;
    ctx.journal(&input, outputs)?;
    println!("report for {} written", scan.symbol);
    Ok(())
}

fn params(cmd: &Command) -> (&'static str, Value) {
    match cmd {
        Command::Analyze => ("analyze", json!({})),
        Command::Eval { t, x, l, target } => ("eval", json!({"t": t, "x": x, "L": l, "target": target})),
        Command::Regions { t, x, l, half_width, points, pairs } => (
            "regions",
            json!({"t": t, "x": x, "L": l, "half_width": half_width, "points": points, "pairs": pairs}),
        ),
        Command::Scan { target, mode, small_t, large_t } => (
            "scan",
            json!({"target": target, "mode": mode, "small_t": small_t, "large_t": large_t}),
        ),
        Command::Verify { target } => ("verify", json!({"target": target})),
        Command::Report { target } => ("report", json!({"target": target})),
    }
}

/// Runs a parsed command line.
pub fn execute(cli: Cli) -> Result<()> {
    let symbol = match &cli.symbol {
        Some(path) => Some(load_symbol(path)?),
        None => None,
    };
    let (name, params) = params(&cli.command);
    let config = RunConfig {
        command: name.to_string(),
        symbol_digest: symbol.as_ref().map(|(_, d)| d.clone()),
        seed: cli.seed,
        tol: cli.tol,
        budget: cli.budget,
        method: cli.method,
        params,
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let ctx = Context {
        cli_out: cli.out.clone(),
        hash: config.hash()?,
        config,
        symbol,
    };
    match &cli.command {
        Command::Analyze => cmd_analyze(&ctx),
        Command::Eval { t, x, l, target } => cmd_eval(&ctx, *t, x.as_deref(), *l, (*target).into()),
        Command::Regions { t, x, l, half_width, points, pairs } => {
            cmd_regions(&ctx, *t, x.as_deref(), *l, *half_width, *points, *pairs)
        }
        Command::Scan { target, mode, small_t, large_t } => {
            cmd_scan(&ctx, (*target).into(), *mode, small_t.as_deref(), large_t.as_deref())
        }
        Command::Verify { target } => cmd_verify(&ctx, (*target).into()),
        Command::Report { target } => cmd_report(&ctx, (*target).into()),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    EXIT_OK
                }
                ErrorKind::ValueValidation => EXIT_INVALID,
                _ => EXIT_PARSE,
            };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
