//! Command-line front end: curvature sweeps, classification, corollary checks
//! and i-motion checks, reported as JSON (or CSV for grid data).

use std::collections::BTreeMap;

use clap::{Args, Parser, Subcommand, ValueEnum};
use isoprod::classify::{
    check_corollary_34, check_corollary_35, classify_constant_h_on, classify_constant_k_on,
    constancy_test, ClassificationResult, ClassifyError, ConstancyVerdict, Grid, GridAxis,
    Quantity,
};
use isoprod::expr::{parse, Expr, ExprError};
use isoprod::geometry::{IMotion, MongeSurface};
use isoprod::models::{ModelError, ProductionModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser, Serialize)]
#[command(name = "isoprod", version, about = "Isotropic curvature of production surfaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Evaluate an expression (and, over x and y, its curvatures) at a point.
    Eval(EvalArgs),
    /// Sample h, K and H over a grid and test K and H for constancy.
    Curvature(SurfaceArgs),
    /// Match a product f(x) g(y) against the constant-K and constant-H cases.
    Classify(SurfaceArgs),
    /// Check the curvature statements for the Spillman-Mitscherlich and
    /// transcendental families.
    Corollary(SurfaceArgs),
    /// Move the surface by random i-motions and report the largest change of
    /// K and H at corresponding points.
    MotionCheck(MotionArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SourceArgs {
    /// Height function h(x, y).
    #[arg(long, allow_hyphen_values = true)]
    pub expr: Option<String>,
    /// Factor f(x) of a product h = f(x) g(y).
    #[arg(long, allow_hyphen_values = true, requires = "g")]
    pub f: Option<String>,
    /// Factor g(y) of a product h = f(x) g(y).
    #[arg(long, allow_hyphen_values = true, requires = "f")]
    pub g: Option<String>,
    /// Model literal, e.g. {"type":"cobb_douglas","A":1,"alphas":[0.5,0.5]}.
    #[arg(long)]
    pub model: Option<String>,
    /// Model family: cobb-douglas, spillman, transcendental.
    #[arg(long)]
    pub family: Option<String>,
    /// Scale factor A of a model family (default 1).
    #[arg(long = "A", allow_hyphen_values = true)]
    #[serde(rename = "A")]
    pub scale: Option<f64>,
    /// Spillman-Mitscherlich rate for x (negative).
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Spillman-Mitscherlich rate for y (negative).
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    /// Transcendental exponent of x.
    #[arg(long, allow_hyphen_values = true)]
    pub a1: Option<f64>,
    /// Transcendental exponential rate of x.
    #[arg(long, allow_hyphen_values = true)]
    pub b1: Option<f64>,
    /// Transcendental exponent of y.
    #[arg(long, allow_hyphen_values = true)]
    pub a2: Option<f64>,
    /// Transcendental exponential rate of y.
    #[arg(long, allow_hyphen_values = true)]
    pub b2: Option<f64>,
    /// Cobb-Douglas exponents, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alphas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CommonArgs {
    /// Grid `min:max:count`, for both axes unless --grid-y is given.
    #[arg(long, default_value = "0.5:5:21")]
    pub grid: String,
    /// Grid `min:max:count` for the y axis.
    #[arg(long)]
    pub grid_y: Option<String>,
    /// Relative tolerance of the constancy tests.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Seed for randomised commands
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SurfaceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: SourceArgs,
    /// Variable binding `name=value`; repeat for each variable.
    #[arg(long = "at", allow_hyphen_values = true)]
    pub at: Vec<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MotionArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub surface: SurfaceArgs,
    /// Number of random motions.
    #[arg(long, default_value_t = 1)]
    pub motions: usize,
}

impl Command {
    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Eval(a) => &a.common,
            Command::Curvature(a) | Command::Classify(a) | Command::Corollary(a) => &a.common,
            Command::MotionCheck(a) => &a.surface.common,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot write CSV: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Machine-readable error code.
    pub fn code(&self) -> &'static str {
        fn expr_code(e: &ExprError) -> &'static str {
            match e {
                ExprError::Syntax { .. }
                | ExprError::UnknownFunction { .. }
                | ExprError::UnknownVariable { .. } => "parse_error",
                _ => "domain_error",
            }
        }
        match self {
            CliError::Config(_) => "invalid_config",
            CliError::Expr(e) => expr_code(e),
            CliError::Model(ModelError::Expr(e)) => expr_code(e),
            CliError::Model(ModelError::Literal(_)) => "parse_error",
            CliError::Model(ModelError::InvalidParameter(_)) => "invalid_parameter",
            CliError::Model(ModelError::NotHomogeneous { .. }) => "domain_error",
            CliError::Classify(ClassifyError::Model(e)) => CliError::Model(e.clone()).code(),
            CliError::Classify(ClassifyError::Anomaly(_)) => "anomaly",
            CliError::Classify(
                ClassifyError::Domain { .. } | ClassifyError::FactorDomain { .. },
            ) => "domain_error",
            CliError::Classify(_) => "invalid_config",
            CliError::Io(_) | CliError::Csv(_) => "io_error",
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.code() == "anomaly" {
            2
        } else {
            1
        }
    }
}

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub version: &'static str,
    pub config: Value,
    pub results: Value,
    pub verdicts: Vec<ConstancyVerdict>,
    pub anomalies: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

/// Rendered output and process exit code.
#[derive(Debug)]
pub struct Outcome {
    pub exit_code: i32,
    pub output: String,
}

pub fn parse_axis(text: &str) -> Result<GridAxis, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || config(format!("grid `{text}` must be `min:max:count`, e.g. 0.5:5:21"));
    let [lo, hi, count] = parts.as_slice() else {
        return Err(bad());
    };
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let count: usize = count.trim().parse().map_err(|_| bad())?;
    GridAxis::new(lo, hi, count).map_err(|e| config(e.to_string()))
}

pub fn parse_grid(common: &CommonArgs) -> Result<Grid, CliError> {
    let x = parse_axis(&common.grid)?;
    let y = match &common.grid_y {
        Some(g) => parse_axis(g)?,
        None => x,
    };
    Ok(Grid::new(x, y)?)
}

fn parse_expr(text: &str) -> Result<Expr, CliError> {
    Ok(parse(text)?.simplify())
}

/// The model described by exactly one of `--expr`, `--f/--g`, `--model` or
/// `--family`.
pub fn resolve_model(src: &SourceArgs) -> Result<ProductionModel, CliError> {
    let given = [
        src.expr.is_some(),
        src.f.is_some(),
        src.model.is_some(),
        src.family.is_some(),
    ]
    .into_iter()
    .filter(|b| *b)
    .count();
    if given != 1 {
        return Err(config(
            "give exactly one of --expr, --f/--g, --model or --family",
        ));
    }
    if let Some(e) = &src.expr {
        return Ok(ProductionModel::custom(parse_expr(e)?)?);
    }
    if let (Some(f), Some(g)) = (&src.f, &src.g) {
        return Ok(ProductionModel::product(parse_expr(f)?, parse_expr(g)?)?);
    }
    if let Some(m) = &src.model {
        return Ok(ProductionModel::from_json(m)?);
    }
    let family = src.family.as_deref().unwrap_or_default();
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| config(format!("--family {family} needs --{name}")))
    };
    let scale = src.scale.unwrap_or(1.0);
    match family.replace('_', "-").as_str() {
        "cobb-douglas" => {
            let alphas = src
                .alphas
                .clone()
                .ok_or_else(|| config("--family cobb-douglas needs --alphas"))?;
            Ok(ProductionModel::cobb_douglas(scale, alphas)?)
        }
        "spillman" | "spillman-mitscherlich" => Ok(ProductionModel::spillman_mitscherlich(
            scale,
            need(src.a, "a")?,
            need(src.b, "b")?,
        )?),
        "transcendental" => Ok(ProductionModel::transcendental(
            scale,
            need(src.a1, "a1")?,
            need(src.b1, "b1")?,
            need(src.a2, "a2")?,
            need(src.b2, "b2")?,
        )?),
        other => Err(config(format!(
            "unknown family `{other}` (expected cobb-douglas, spillman or transcendental)"
        ))),
    }
}

fn two_input_height(model: &ProductionModel) -> Result<Expr, CliError> {
    if model.variables() != ["x", "y"] {
        return Err(config("curvature needs a model over the two inputs x and y"));
    }
    Ok(model.to_expr())
}

/// Executes the command and renders its report.
pub fn run(cli: &Cli) -> Outcome {
    let common = cli.command.common();
    let mut report = Report {
        version: VERSION,
        config: serde_json::to_value(&cli.command).unwrap_or(Value::Null),
        results: Value::Null,
        verdicts: vec![],
        anomalies: vec![],
        error: None,
    };
    let mut csv_rows = None;
    let result = dispatch(&cli.command, &mut report, &mut csv_rows);
    let exit_code = match result {
        Ok(()) if report.anomalies.is_empty() => 0,
        Ok(()) => 2,
        Err(e) => {
            report.error = Some(ErrorBody {
                code: e.code(),
                message: e.to_string(),
            });
            if let CliError::Classify(ClassifyError::Anomaly(msg)) = &e {
                report.anomalies.push(msg.clone());
            }
            e.exit_code()
        }
    };
    let output = match (common.format, csv_rows) {
        (Format::Csv, Some(rows)) if report.error.is_none() => match render_csv(&rows) {
            Ok(text) => text,
            Err(e) => return error_outcome(&mut report, e),
        },
        _ => render_json(&report),
    };
    Outcome { exit_code, output }
}

fn error_outcome(report: &mut Report, e: CliError) -> Outcome {
    report.error = Some(ErrorBody {
        code: e.code(),
        message: e.to_string(),
    });
    Outcome {
        exit_code: e.exit_code(),
        output: render_json(report),
    }
}

fn render_json(report: &Report) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report is serializable");
    text.push('\n');
    text
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Row {
    pub x: f64,
    pub y: f64,
    pub h: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "H")]
    pub hm: f64,
}

fn render_csv(rows: &[Row]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

fn dispatch(
    command: &Command,
    report: &mut Report,
    csv_rows: &mut Option<Vec<Row>>,
) -> Result<(), CliError> {
    let common = command.common();
    if !(common.tol > 0.0 && common.tol.is_finite()) {
        return Err(config(format!("--tol must be positive, got {}", common.tol)));
    }
    if common.format == Format::Csv && !matches!(command, Command::Curvature(_)) {
        return Err(config("--format csv is only available for `curvature`"));
    }
    match command {
        Command::Eval(args) => eval(args, report),
        Command::Curvature(args) => curvature(args, report, csv_rows),
        Command::Classify(args) => classify(args, report),
        Command::Corollary(args) => corollary(args, report),
        Command::MotionCheck(args) => motion_check(args, report),
    }
}

fn eval(args: &EvalArgs, report: &mut Report) -> Result<(), CliError> {
    let model = resolve_model(&args.source)?;
    let h = model.to_expr();
    let mut at = BTreeMap::new();
    for binding in &args.at {
        let (name, value) = binding
            .split_once('=')
            .ok_or_else(|| config(format!("--at `{binding}` must be name=value")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| config(format!("--at `{binding}`: `{value}` is not a number")))?;
        at.insert(name.trim().to_string(), value);
    }
    let value = h.eval(&at)?;
    let mut results = json!({ "expr": h.to_string(), "at": at, "value": value });
    if model.variables() == ["x", "y"] {
        if let (Some(&x), Some(&y)) = (at.get("x"), at.get("y")) {
            let c = MongeSurface::new(h).curvatures([x, y])?;
            results["K"] = json!(c.relative);
            results["H"] = json!(c.mean);
        }
    }
    report.results = results;
    Ok(())
}

fn curvature(
    args: &SurfaceArgs,
    report: &mut Report,
    csv_rows: &mut Option<Vec<Row>>,
) -> Result<(), CliError> {
    let grid = parse_grid(&args.common)?;
    let h = two_input_height(&resolve_model(&args.source)?)?;
    let surface = MongeSurface::new(h.clone());
    let mut rows = Vec::new();
    for [x, y] in grid.points() {
        let at = |e: ExprError| CliError::Classify(ClassifyError::Domain { x, y, source: e });
        let c = surface.curvatures([x, y]).map_err(at)?;
        rows.push(Row {
            x,
            y,
            h: surface.value([x, y]).map_err(at)?,
            k: c.relative,
            hm: c.mean,
        });
    }
    if grid.x.count >= 5 && grid.y.count >= 5 {
        for q in [Quantity::K, Quantity::H] {
            report.verdicts.push(constancy_test(&h, q, &grid, args.common.tol)?);
        }
    }
    report.results = json!({ "expr": h.to_string(), "rows": rows });
    *csv_rows = Some(rows);
    Ok(())
}

fn classify(args: &SurfaceArgs, report: &mut Report) -> Result<(), CliError> {
    let grid = parse_grid(&args.common)?;
    let model = resolve_model(&args.source)?;
    let (f, g) = model
        .factors()
        .ok_or_else(|| config("classification needs a product f(x) g(y) (use --f/--g)"))?;
    let tol = args.common.tol;
    let mut labels = vec![];
    let mut results = serde_json::Map::new();
    results.insert("f".into(), json!(f.to_string()));
    results.insert("g".into(), json!(g.to_string()));
    type Classifier = fn(&Expr, &Expr, &Grid, f64) -> Result<ClassificationResult, ClassifyError>;
    let classifiers: [(&str, Classifier); 2] =
        [("K", classify_constant_k_on), ("H", classify_constant_h_on)];
    for (key, classify) in classifiers {
        match classify(&f, &g, &grid, tol) {
            Ok(r) => {
                if r.label != isoprod::classify::CaseLabel::None {
                    labels.push(r.label.code());
                }
                if let Some(v) = &r.verdict {
                    report.verdicts.push(v.clone());
                }
                results.insert(key.into(), serde_json::to_value(&r).expect("serializable"));
            }
            Err(ClassifyError::Anomaly(msg)) => {
                report.anomalies.push(format!("constant-{key} classification: {msg}"));
                results.insert(key.into(), Value::Null);
            }
            Err(e) => return Err(e.into()),
        }
    }
    results.insert("labels".into(), json!(labels));
    report.results = Value::Object(results);
    Ok(())
}

fn corollary(args: &SurfaceArgs, report: &mut Report) -> Result<(), CliError> {
    let grid = parse_grid(&args.common)?;
    let tol = args.common.tol;
    match resolve_model(&args.source)? {
        ProductionModel::SpillmanMitscherlich { scale, a, b } => {
            let rep = check_corollary_34(scale, a, b, &grid, tol)?;
            report.verdicts = vec![rep.k.clone(), rep.h.clone()];
            if !rep.holds {
                report.anomalies.push(
                    "a Spillman-Mitscherlich surface passed a constancy test".into(),
                );
            }
            report.results = json!({
                "family": "spillman_mitscherlich",
                "K_constant": rep.k_constant,
                "H_constant": rep.h_constant,
                "holds": rep.holds,
            });
        }
        ProductionModel::Transcendental {
            scale,
            a1,
            b1,
            a2,
            b2,
        } => {
            let rep = check_corollary_35(scale, a1, b1, a2, b2, &grid, tol)?;
            report.verdicts = vec![rep.k.clone(), rep.h.clone()];
            report.anomalies.extend(rep.anomalies.iter().cloned());
            report.results = json!({
                "family": "transcendental",
                "predicted": rep.predicted,
                "K_zero_case": rep.k_zero_case,
                "H_zero": rep.h_zero,
                "K_constant": rep.k.is_constant,
                "H_constant": rep.h.is_constant,
            });
        }
        _ => {
            return Err(config(
                "corollary checks need --family spillman or --family transcendental",
            ))
        }
    }
    Ok(())
}

fn motion_check(args: &MotionArgs, report: &mut Report) -> Result<(), CliError> {
    let common = &args.surface.common;
    let grid = parse_grid(common)?;
    let h = two_input_height(&resolve_model(&args.surface.source)?)?;
    if args.motions == 0 {
        return Err(config("--motions must be at least 1"));
    }
    let surface = MongeSurface::new(h.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
    let (mut max_dk, mut max_dh) = (0.0f64, 0.0f64);
    let mut motions = Vec::with_capacity(args.motions);
    for _ in 0..args.motions {
        let motion = IMotion::sample(&mut rng);
        let moved = motion.transform_monge(&surface);
        for p in grid.points() {
            let at = |e: ExprError| {
                CliError::Classify(ClassifyError::Domain {
                    x: p[0],
                    y: p[1],
                    source: e,
                })
            };
            let before = surface.curvatures(p).map_err(at)?;
            let after = moved.curvatures(motion.top_view(p)).map_err(at)?;
            max_dk = max_dk.max((before.relative - after.relative).abs());
            max_dh = max_dh.max((before.mean - after.mean).abs());
        }
        motions.push(motion);
    }
    report.results = json!({
        "expr": h.to_string(),
        "motions": motions,
        "points": grid.x.count * grid.y.count,
        "max_delta_K": max_dk,
        "max_delta_H": max_dh,
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_syntax() {
        let axis = parse_axis("0.5:5:21").unwrap();
        assert_eq!((axis.lo, axis.hi, axis.count), (0.5, 5.0, 21));
        for bad in ["0.5:5", "a:5:3", "0.5:5:1", "5:0.5:3", "-1:2:3"] {
            assert_eq!(parse_axis(bad).unwrap_err().code(), "invalid_config", "{bad}");
        }
    }
}
