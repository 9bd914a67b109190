//! The `sepl` command line: translate XACML, evaluate requests, analyze,
//! compare and measure policies, and check the law catalog.
//!
//! Exit codes: 0 success, 1 input error, 2 usage error, 3 when an analysis
//! finds gaps or conflicts or the law catalog misses its expected profile.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use sepl::analysis::{
    check_law, compare, conflict_report, distance, incompleteness, law_catalog, AnalysisError, AnalysisReport,
    LawConfig, LawStatus, Metric, RegionSummary,
};
use sepl::lang::{parse_policy, print_policy, Policy};
use sepl::schema::{parse_request, parse_schema_with_cap, AttributeSchema, DEFAULT_POINT_CAP};
use sepl::semantics::{decide, eval_rel, EvalError};
use sepl::xacml::{parse_xacml, translate, translate_components, XacmlDoc};

/// Environment variable that overrides the point cap.
pub const POINT_CAP_VAR: &str = "SEPL_POINT_CAP";

#[derive(Debug, Parser)]
#[command(name = "sepl", version, about = "Three-valued policy algebra toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Translate an XACML policy into policy-algebra text.
    Translate {
        input: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        fmt: FormatArg,
    },
    /// Decide one request.
    Eval {
        policy: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        request: PathBuf,
        #[command(flatten)]
        fmt: FormatArg,
    },
    /// Report coverage gaps and conflicts over the whole domain.
    Analyze {
        policy: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[command(flatten)]
        fmt: FormatArg,
    },
    /// Order two policies by inclusion of their accept and deny regions.
    Compare {
        left: PathBuf,
        right: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[command(flatten)]
        fmt: FormatArg,
    },
    /// Measure how far apart two policies are.
    Distance {
        left: PathBuf,
        right: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long, value_enum, default_value_t = MetricArg::Hamming)]
        metric: MetricArg,
        #[command(flatten)]
        fmt: FormatArg,
    },
    /// Check the algebraic law catalog by sampling.
    Laws {
        #[arg(long)]
        schema: PathBuf,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        fmt: FormatArg,
    },
}

#[derive(Debug, Args)]
struct FormatArg {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    Hamming,
    Jaccard,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Metric {
        match m {
            MetricArg::Hamming => Metric::Hamming,
            MetricArg::Jaccard => Metric::Jaccard,
        }
    }
}

/// A failure, with the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input {
        file: PathBuf,
        line: Option<usize>,
        col: Option<usize>,
        message: String,
    },
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input { .. } | CliError::Output(_) => 1,
        }
    }

    fn input(file: &Path, line: Option<usize>, col: Option<usize>, message: impl fmt::Display) -> Self {
        CliError::Input {
            file: file.to_path_buf(),
            line,
            col,
            message: message.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Output(m) => write!(f, "error: {m}"),
            CliError::Input { file, line, col, message } => {
                write!(f, "{}", file.display())?;
                if let Some(l) = line {
                    write!(f, ":{l}")?;
                    if let Some(c) = col {
                        write!(f, ":{c}")?;
                    }
                }
                write!(f, ": {message}")
            }
        }
    }
}

impl std::error::Error for CliError {}

/// Runs one invocation and returns its exit code. `args` includes the
/// program name.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::input(path, None, None, e))
}

fn point_cap() -> Result<u64, CliError> {
    match std::env::var(POINT_CAP_VAR) {
        Err(_) => Ok(DEFAULT_POINT_CAP),
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{POINT_CAP_VAR} must be a positive integer, got `{v}`"))),
    }
}

fn load_schema(path: &Path) -> Result<AttributeSchema, CliError> {
    parse_schema_with_cap(&read(path)?, point_cap()?).map_err(|e| CliError::input(path, e.line(), None, e))
}

fn is_xml(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("xml"))
}

fn load_xacml(path: &Path) -> Result<XacmlDoc, CliError> {
    parse_xacml(&read(path)?).map_err(|e| CliError::input(path, Some(e.loc.line), Some(e.loc.col), e.kind))
}

/// Loads a policy from `.xml` (translated) or policy-algebra text.
fn load_policy(path: &Path, schema: &AttributeSchema) -> Result<Policy, CliError> {
    if is_xml(path) {
        let doc = load_xacml(path)?;
        translate(&doc, schema).map_err(|e| CliError::input(path, Some(e.loc.line), Some(e.loc.col), e.kind))
    } else {
        parse_policy(&read(path)?, schema)
            .map_err(|e| CliError::input(path, Some(e.line), Some(e.col), &e.message))
    }
}

fn eval_failure(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::input(path, None, None, e)
}

fn analysis_failure(path: &Path, e: AnalysisError) -> CliError {
    eval_failure(path, e)
}

fn emit(out: &mut dyn Write, text: impl fmt::Display) -> Result<(), CliError> {
    writeln!(out, "{text}").map_err(|e| CliError::Output(e.to_string()))
}

/// Structured output: a header record, then one JSON object per line.
fn emit_records(out: &mut dyn Write, records: &[Value]) -> Result<(), CliError> {
    emit(out, json!({"format": "sepl-report", "version": 1}))?;
    for r in records {
        emit(out, r)?;
    }
    Ok(())
}

fn execute(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    match cmd {
        Command::Translate {
            input,
            schema,
            output,
            fmt,
        } => {
            let schema = load_schema(&schema)?;
            let policy = load_policy(&input, &schema)?;
            let text = print_policy(&policy);
            if let Some(path) = &output {
                std::fs::write(path, format!("{text}\n"))
                    .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
            }
            match (fmt.format, &output) {
                (Format::Text, None) => emit(out, &text)?,
                (Format::Text, Some(_)) => {}
                (Format::Structured, _) => emit_records(
                    out,
                    &[json!({
                        "record": "translation",
                        "input": input.display().to_string(),
                        "output": output.as_ref().map(|p| p.display().to_string()),
                        "policy": text,
                    })],
                )?,
            }
            Ok(0)
        }
        Command::Eval {
            policy,
            schema: schema_path,
            request,
            fmt,
        } => {
            let schema = load_schema(&schema_path)?;
            let p = load_policy(&policy, &schema)?;
            let (req, warnings) =
                parse_request(&read(&request)?, &schema).map_err(|e| CliError::input(&request, Some(e.line), None, &e.source))?;
            for w in &warnings {
                let _ = writeln!(err, "{}: warning: {w}", request.display());
            }
            let pair = eval_rel(&p, &req, &schema).map_err(|e: EvalError| eval_failure(&policy, e))?;
            let decision = decide(&p, &req, &schema).map_err(|e| eval_failure(&policy, e))?;
            match fmt.format {
                Format::Text => emit(out, decision.token())?,
                Format::Structured => emit_records(
                    out,
                    &[json!({
                        "record": "decision",
                        "decision": decision.token(),
                        "accept": pair.accept.to_string(),
                        "deny": pair.deny.to_string(),
                    })],
                )?,
            }
            Ok(0)
        }
        Command::Analyze {
            policy,
            schema: schema_path,
            fmt,
        } => {
            let schema = load_schema(&schema_path)?;
            let p = load_policy(&policy, &schema)?;
            let mut report = incompleteness(&p, &schema).map_err(|e| analysis_failure(&policy, e))?;
            // components of an XACML document are checked against each other
            let mut names = Vec::new();
            if is_xml(&policy) {
                let doc = load_xacml(&policy)?;
                let parts = translate_components(&doc, &schema)
                    .map_err(|e| CliError::input(&policy, Some(e.loc.line), Some(e.loc.col), e.kind))?;
                if parts.len() > 1 {
                    let policies: Vec<Policy> = parts.iter().map(|(_, p)| p.clone()).collect();
                    let pairwise = conflict_report(&policies, &schema).map_err(|e| analysis_failure(&policy, e))?;
                    report.overlaps = pairwise.overlaps;
                }
                names = parts.into_iter().map(|(n, _)| n).collect();
            }
            match fmt.format {
                Format::Text => write_report_text(out, &report, &names, &schema)?,
                Format::Structured => emit_records(out, &report_records(&report, &names, &schema))?,
            }
            Ok(if report.complete() && report.conflict_free() { 0 } else { 3 })
        }
        Command::Compare {
            left,
            right,
            schema: schema_path,
            fmt,
        } => {
            let schema = load_schema(&schema_path)?;
            let (p, q) = (load_policy(&left, &schema)?, load_policy(&right, &schema)?);
            let report = compare(&p, &q, &schema).map_err(|e| analysis_failure(&left, e))?;
            match fmt.format {
                Format::Text => emit(out, report.relation.token())?,
                Format::Structured => emit_records(
                    out,
                    &[json!({
                        "record": "comparison",
                        "relation": report.relation.token(),
                        "applicability_disjoint": report.applicability_disjoint,
                        "left_in_right": report.left_in_right.holds,
                        "right_in_left": report.right_in_left.holds,
                        "left_unknown_points": report.unknown_points.0,
                        "right_unknown_points": report.unknown_points.1,
                    })],
                )?,
            }
            Ok(0)
        }
        Command::Distance {
            left,
            right,
            schema: schema_path,
            metric,
            fmt,
        } => {
            let schema = load_schema(&schema_path)?;
            let (p, q) = (load_policy(&left, &schema)?, load_policy(&right, &schema)?);
            let d = distance(&p, &q, &schema, metric.into()).map_err(|e| analysis_failure(&left, e))?;
            let value = *d.numer() as f64 / *d.denom() as f64;
            match fmt.format {
                Format::Text => emit(out, format_decimal(value))?,
                Format::Structured => emit_records(
                    out,
                    &[json!({
                        "record": "distance",
                        "metric": format!("{metric:?}").to_lowercase(),
                        "value": value,
                        "exact": format!("{}/{}", d.numer(), d.denom()),
                    })],
                )?,
            }
            Ok(0)
        }
        Command::Laws {
            schema: schema_path,
            samples,
            seed,
            fmt,
        } => {
            let schema = load_schema(&schema_path)?;
            let cfg = LawConfig {
                samples,
                seed,
                ..LawConfig::default()
            };
            let mut all_expected = true;
            let mut records = Vec::new();
            for law in law_catalog() {
                let v = check_law(&law, &schema, &cfg).map_err(|e| eval_failure(&schema_path, e))?;
                all_expected &= v.as_expected();
                let expected = format!("{:?}", v.expect).to_uppercase();
                let met = if v.as_expected() { "as expected" } else { "UNEXPECTED" };
                match &v.status {
                    LawStatus::Pass { instantiations } => {
                        records.push(json!({
                            "record": "law", "law": v.law, "lhs": v.lhs, "rhs": v.rhs,
                            "verdict": "PASS", "expected": expected, "as_expected": v.as_expected(),
                            "instantiations": instantiations,
                        }));
                        if fmt.format == Format::Text {
                            emit(
                                out,
                                format!("{:<6} PASS            {} = {}  ({instantiations} instantiations, {met})", v.law, v.lhs, v.rhs),
                            )?;
                        }
                    }
                    LawStatus::Counterexample { bindings, point, lhs, rhs } => {
                        let binds: Vec<String> =
                            bindings.iter().map(|(k, p)| format!("{k}={}", print_policy(p))).collect();
                        records.push(json!({
                            "record": "law", "law": v.law, "lhs": v.lhs, "rhs": v.rhs,
                            "verdict": "COUNTEREXAMPLE", "expected": expected, "as_expected": v.as_expected(),
                            "bindings": binds, "point": schema.describe_point(*point),
                            "lhs_value": lhs.to_string(), "rhs_value": rhs.to_string(),
                        }));
                        if fmt.format == Format::Text {
                            emit(
                                out,
                                format!(
                                    "{:<6} COUNTEREXAMPLE  {} = {}  at {} with {}: {lhs} vs {rhs}  ({met})",
                                    v.law,
                                    v.lhs,
                                    v.rhs,
                                    schema.describe_point(*point),
                                    binds.join(", "),
                                ),
                            )?;
                        }
                    }
                }
            }
            match fmt.format {
                Format::Text => emit(
                    out,
                    if all_expected { "profile: met" } else { "profile: NOT met" },
                )?,
                Format::Structured => {
                    records.push(json!({"record": "summary", "profile_met": all_expected}));
                    emit_records(out, &records)?;
                }
            }
            Ok(if all_expected { 0 } else { 3 })
        }
    }
}

/// Up to six decimals, trailing zeros dropped.
fn format_decimal(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() {
        "0".into()
    } else {
        s.to_string()
    }
}

fn describe_samples(r: &RegionSummary, schema: &AttributeSchema) -> Vec<String> {
    r.samples.iter().map(|&p| schema.describe_point(p)).collect()
}

fn component_name(names: &[String], i: usize) -> String {
    names.get(i).cloned().unwrap_or_else(|| format!("#{i}"))
}

fn write_report_text(
    out: &mut dyn Write,
    report: &AnalysisReport,
    names: &[String],
    schema: &AttributeSchema,
) -> Result<(), CliError> {
    let yes = |b: bool| if b { "yes" } else { "no" };
    emit(out, format!("points: {}", report.points))?;
    emit(out, format!("complete: {}", yes(report.complete())))?;
    emit(out, format!("conflict-free: {}", yes(report.conflict_free())))?;
    for (label, region) in [
        ("not applicable", &report.not_applicable),
        ("indeterminate", &report.indeterminate),
        ("conflict", &report.conflict),
    ] {
        emit(out, format!("{label}: {}", region.count))?;
        for s in describe_samples(region, schema) {
            emit(out, format!("  {s}"))?;
        }
    }
    for o in &report.overlaps {
        emit(
            out,
            format!(
                "overlap {} / {}: {} points, {} opposing",
                component_name(names, o.left),
                component_name(names, o.right),
                o.region.count,
                o.opposing.count
            ),
        )?;
        for s in describe_samples(&o.opposing, schema) {
            emit(out, format!("  {s}"))?;
        }
    }
    Ok(())
}

fn report_records(report: &AnalysisReport, names: &[String], schema: &AttributeSchema) -> Vec<Value> {
    let region = |r: &RegionSummary| json!({"count": r.count, "samples": describe_samples(r, schema)});
    let mut records = vec![json!({
        "record": "analysis",
        "points": report.points,
        "complete": report.complete(),
        "conflict_free": report.conflict_free(),
        "not_applicable": region(&report.not_applicable),
        "indeterminate": region(&report.indeterminate),
        "conflict": region(&report.conflict),
    })];
    for o in &report.overlaps {
        records.push(json!({
            "record": "overlap",
            "left": component_name(names, o.left),
            "right": component_name(names, o.right),
            "region": region(&o.region),
            "opposing": region(&o.opposing),
        }));
    }
    records
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals() {
        assert_eq!(format_decimal(0.25), "0.25");
        assert_eq!(format_decimal(0.0), "0");
        assert_eq!(format_decimal(1.0), "1");
        assert_eq!(format_decimal(1.0 / 3.0), "0.333333");
    }

    #[test]
    fn usage_errors_exit_2() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["sepl", "frobnicate"], &mut out, &mut err), 2);
        assert_eq!(run(["sepl", "eval", "p.sepl"], &mut out, &mut err), 2);
        assert_eq!(run(["sepl", "--help"], &mut out, &mut err), 0);
    }

    #[test]
    fn missing_file_is_an_input_error() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(
            ["sepl", "analyze", "/nonexistent/p.sepl", "--schema", "/nonexistent/s.schema"],
            &mut out,
            &mut err,
        );
        assert_eq!(code, 1);
        assert!(String::from_utf8(err).unwrap().starts_with("/nonexistent/s.schema"));
    }
}
