//! Command-line front end: load tower files, run traces, classification,
//! foliations and model builds, and write CSV/JSON/SVG artifacts.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::blaschke::{
    build_model_tower, model_svg, region_json, verify_model_invariants, BlaschkeError, BuildPolicy, ModelSource,
};
use crate::classify::annuli::absorbing_annuli;
use crate::classify::foliation::{foliation, Foliation, LeafKind};
use crate::classify::{
    infinitesimal_type, main_type, ClassifyError, InfinitesimalType, OrbitSource, Tolerances, DEFAULT_PAIR_SAMPLES,
    DEFAULT_SEED,
};
use crate::tower::{OrbitTrace, Tower, TowerError, TowerSpec};

pub const SCHEMA: &str = "hypdyn/1";
/// Largest model level accepted by `blaschke build`.
pub const LEVEL_CAP: usize = 8;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {reason}")]
    Input { path: PathBuf, reason: String },
    #[error("{0}")]
    Inconclusive(String),
    #[error("{0}")]
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Input { .. } => EXIT_USAGE,
            Self::Inconclusive(_) => EXIT_INCONCLUSIVE,
            Self::Invariant(_) => EXIT_INVARIANT,
        }
    }
}

impl From<ClassifyError> for CliError {
    fn from(e: ClassifyError) -> Self {
        match e {
            ClassifyError::Tower(TowerError::Invalid { .. }) | ClassifyError::Precondition(_) => {
                Self::Inconclusive(e.to_string())
            }
            ClassifyError::ToleranceOrder => Self::Usage(e.to_string()),
            _ => Self::Inconclusive(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hypdyn", version, about = "Distortion, injectivity radii and classification of towers of holomorphic maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Args)]
pub struct Output {
    /// Directory for written artifacts.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Artifact formats to write.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "json")]
    pub emit: Vec<Emit>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TolArgs {
    #[arg(long)]
    pub tol_iso: Option<f64>,
    #[arg(long)]
    pub tol_zero: Option<f64>,
    #[arg(long)]
    pub tol_const: Option<f64>,
    /// Thinness threshold for injectivity radii.
    #[arg(long)]
    pub tol_thin: Option<f64>,
    #[arg(long)]
    pub tol_divergence: Option<f64>,
}

impl TolArgs {
    pub fn resolve(&self) -> Result<Tolerances, CliError> {
        let d = Tolerances::default();
        let t = Tolerances {
            tol_iso: self.tol_iso.unwrap_or(d.tol_iso),
            tol_zero: self.tol_zero.unwrap_or(d.tol_zero),
            tol_const: self.tol_const.unwrap_or(d.tol_const),
            thin: self.tol_thin.unwrap_or(d.thin),
            divergence: self.tol_divergence.unwrap_or(d.divergence),
        };
        t.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(t)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-level λ, δ and pair distances along the base orbit.
    Trace {
        #[arg(long)]
        tower: PathBuf,
        #[arg(long)]
        horizon: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Six-type verdict for one tower.
    Classify {
        #[arg(long)]
        tower: PathBuf,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_PAIR_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        tol: TolArgs,
        #[command(flatten)]
        output: Output,
    },
    /// The degree-2 Blaschke model tower.
    Blaschke {
        #[command(subcommand)]
        command: BlaschkeCommand,
    },
    /// Contracting and eventually isometric leaves of a thin tower.
    Foliation {
        #[arg(long)]
        tower: PathBuf,
        #[arg(long)]
        horizon: Option<usize>,
        /// Samples per leaf.
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[command(flatten)]
        tol: TolArgs,
        #[command(flatten)]
        output: Output,
    },
    /// Verdicts for several towers, plus absorbing annuli where defined.
    Report {
        /// Tower files; defaults to every `.json` file in `--dir`.
        #[arg(long)]
        tower: Vec<PathBuf>,
        #[arg(long, default_value = "towers")]
        dir: PathBuf,
        #[arg(long)]
        horizon: Option<usize>,
        /// Injectivity threshold for absorbing annuli.
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[command(flatten)]
        tol: TolArgs,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Debug, Subcommand)]
pub enum BlaschkeCommand {
    /// Build levels `0..=N`, verify the invariants and write the regions.
    Build {
        #[arg(long, default_value_t = 6)]
        levels: usize,
        #[arg(long, default_value_t = BuildPolicy::default().samples)]
        samples: usize,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Debug, Clone, Copy, Deserialize)]
struct ModelConfig {
    levels: usize,
}

/// Contents of a tower file.
pub enum TowerFile {
    Tower(Box<Tower>),
    Model { name: Option<String>, levels: usize },
}

impl TowerFile {
    pub fn load(path: &Path, horizon: Option<usize>) -> Result<Self, CliError> {
        let input = |reason: String| CliError::Input {
            path: path.to_path_buf(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| input(e.to_string()))?;
        let value: Value = serde_json::from_str(&text).map_err(|e| input(e.to_string()))?;
        if let Some(m) = value.get("blaschke_model") {
            let cfg: ModelConfig = serde_json::from_value(m.clone()).map_err(|e| input(e.to_string()))?;
            if cfg.levels > LEVEL_CAP {
                return Err(input(format!("levels {} exceeds the cap of {LEVEL_CAP}", cfg.levels)));
            }
            let name = value.get("name").and_then(Value::as_str).map(String::from);
            return Ok(Self::Model { name, levels: cfg.levels });
        }
        let spec: TowerSpec = serde_json::from_str(&text).map_err(|e| input(e.to_string()))?;
        let tower = match horizon {
            Some(h) => Tower::with_horizon(spec, h),
            None => Tower::new(spec),
        }
        .map_err(|e| input(e.to_string()))?;
        Ok(Self::Tower(Box::new(tower)))
    }

    fn name(&self, path: &Path) -> String {
        let stem = || path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "tower".into());
        match self {
            Self::Tower(t) => t.spec().name.clone().unwrap_or_else(stem),
            Self::Model { name, .. } => name.clone().unwrap_or_else(stem),
        }
    }
}

fn model_source(levels: usize) -> Result<ModelSource, CliError> {
    let state = build_model_tower(levels, BuildPolicy::default()).map_err(|e| CliError::Invariant(e.to_string()))?;
    if let Some(reason) = &state.stopped {
        return Err(CliError::Invariant(format!("model build stopped: {reason}")));
    }
    Ok(ModelSource::new(state))
}

/// Floats with 17 significant digits; non-finite values become `null`.
pub fn to_json_string(v: &Value) -> String {
    fn walk(v: &Value, indent: usize, out: &mut String) {
        let pad = "  ".repeat(indent + 1);
        match v {
            Value::Number(n) if n.is_f64() => {
                let x = n.as_f64().unwrap();
                let _ = write!(out, "{x:.16e}");
            }
            Value::Array(items) if items.is_empty() => out.push_str("[]"),
            Value::Array(items) => {
                out.push_str("[\n");
                for (i, item) in items.iter().enumerate() {
                    out.push_str(&pad);
                    walk(item, indent + 1, out);
                    out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
                }
                let _ = write!(out, "{}]", "  ".repeat(indent));
            }
            Value::Object(map) if map.is_empty() => out.push_str("{}"),
            Value::Object(map) => {
                out.push_str("{\n");
                for (i, (k, item)) in map.iter().enumerate() {
                    let _ = write!(out, "{pad}{}: ", Value::String(k.clone()));
                    walk(item, indent + 1, out);
                    out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
                }
                let _ = write!(out, "{}}}", "  ".repeat(indent));
            }
            other => out.push_str(&other.to_string()),
        }
    }
    let mut out = String::new();
    walk(v, 0, &mut out);
    out.push('\n');
    out
}

fn csv_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

/// Columns `n, base_re, base_im, lambda, delta, dist_pair_0, …`.
pub fn trace_csv(trace: &OrbitTrace) -> String {
    let pairs = trace.rows.first().map_or(0, |r| r.distances.len());
    let mut out = String::from("n,base_re,base_im,lambda,delta");
    for i in 0..pairs {
        let _ = write!(out, ",dist_pair_{i}");
    }
    out.push('\n');
    for r in &trace.rows {
        let _ = write!(
            out,
            "{},{},{},{},{}",
            r.n,
            csv_float(r.base.re),
            csv_float(r.base.im),
            csv_float(r.lambda),
            csv_float(r.delta)
        );
        for d in &r.distances {
            let _ = write!(out, ",{}", csv_float(*d));
        }
        out.push('\n');
    }
    out
}

struct Writer<'a> {
    output: &'a Output,
    written: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    fn new(output: &'a Output) -> Result<Self, CliError> {
        std::fs::create_dir_all(&output.out).map_err(|e| CliError::Input {
            path: output.out.clone(),
            reason: e.to_string(),
        })?;
        Ok(Self {
            output,
            written: Vec::new(),
        })
    }

    fn wants(&self, e: Emit) -> bool {
        self.output.emit.contains(&e)
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.output.out.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::Input {
            path: path.clone(),
            reason: e.to_string(),
        })?;
        self.written.push(path);
        Ok(())
    }

    fn json(&mut self, name: &str, v: &Value) -> Result<(), CliError> {
        if self.wants(Emit::Json) {
            self.write(name, &to_json_string(v))?;
        }
        Ok(())
    }
}

fn envelope(command: &str, body: Value) -> Value {
    let mut v = json!({ "schema": SCHEMA, "command": command });
    if let (Some(dst), Value::Object(src)) = (v.as_object_mut(), body) {
        dst.extend(src);
    }
    v
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

fn run_trace(tower: &Path, horizon: Option<usize>, output: &Output) -> Result<String, CliError> {
    let file = TowerFile::load(tower, horizon)?;
    let name = file.name(tower);
    let TowerFile::Tower(t) = file else {
        return Err(CliError::Usage("trace needs a tower spec, not a model build".into()));
    };
    let trace = t.trace().map_err(|e| CliError::Inconclusive(e.to_string()))?;
    let mut w = Writer::new(output)?;
    if w.wants(Emit::Csv) {
        w.write(&format!("{name}_trace.csv"), &trace_csv(&trace))?;
    }
    w.json(&format!("{name}_trace.json"), &envelope("trace", json!({ "tower": name, "trace": to_value(&trace) })))?;
    let mut msg = format!("{name}: traced {} levels", trace.rows.len());
    if let Some(f) = &trace.truncated {
        let _ = write!(msg, " (truncated at level {}: {})", f.level, f.reason);
    }
    Ok(msg)
}

fn classify_source(src: &dyn OrbitSource, samples: usize, seed: u64, tol: &Tolerances) -> Result<Value, CliError> {
    let v = main_type(src, samples, seed, tol)?;
    Ok(json!({
        "tolerances": to_value(tol),
        "samples": samples,
        "seed": seed,
        "horizon": src.horizon(),
        "verdict": to_value(&v),
    }))
}

fn classify_file(
    path: &Path,
    horizon: Option<usize>,
    samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<(String, Value), CliError> {
    let file = TowerFile::load(path, horizon)?;
    let name = file.name(path);
    let body = match file {
        TowerFile::Tower(t) => classify_source(t.as_ref(), samples, seed, tol)?,
        TowerFile::Model { levels, .. } => classify_source(&model_source(levels)?, samples, seed, tol)?,
    };
    Ok((name, body))
}

fn row_of(body: &Value) -> Option<u64> {
    body["verdict"]["row"].as_u64()
}

fn run_classify(
    tower: &Path,
    horizon: Option<usize>,
    samples: usize,
    seed: u64,
    tol: &TolArgs,
    output: &Output,
) -> Result<String, CliError> {
    let tol = tol.resolve()?;
    let (name, body) = classify_file(tower, horizon, samples, seed, &tol)?;
    let mut w = Writer::new(output)?;
    let mut report = envelope("classify", body);
    report["tower"] = json!(name);
    w.json(&format!("{name}_classify.json"), &report)?;
    let discrepancies = report["verdict"]["discrepancies"].as_array().map_or(0, Vec::len);
    match row_of(&report) {
        Some(r) => Ok(format!("{name}: row {r}, {discrepancies} discrepancies")),
        None => Err(CliError::Inconclusive(format!("{name}: classification inconclusive"))),
    }
}

fn run_blaschke_build(levels: usize, samples: usize, output: &Output) -> Result<String, CliError> {
    if levels > LEVEL_CAP {
        return Err(CliError::Usage(format!("--levels {levels} exceeds the cap of {LEVEL_CAP}")));
    }
    if samples < 8 {
        return Err(CliError::Usage("--samples must be at least 8".into()));
    }
    let policy = BuildPolicy {
        samples,
        ..BuildPolicy::default()
    };
    let state = match build_model_tower(levels, policy) {
        Ok(s) => s,
        Err(e @ BlaschkeError::BadParameter(_)) => return Err(CliError::Usage(e.to_string())),
        Err(e) => return Err(CliError::Invariant(e.to_string())),
    };
    let report = verify_model_invariants(&state);
    let bracket: Vec<Value> = (0..=state.built())
        .map(|n| match state.local_isometry_bracket(n, Complex64::new(0.0, 0.0)) {
            Ok(b) => to_value(&b),
            Err(e) => json!({ "level": n, "error": e.to_string() }),
        })
        .collect();
    let mut w = Writer::new(output)?;
    let mut regions = region_json(&state);
    regions["command"] = json!("blaschke build");
    w.json("blaschke_regions.json", &regions)?;
    w.json(
        "blaschke_report.json",
        &envelope(
            "blaschke build",
            json!({
                "levels": state.levels.iter().map(to_value).collect::<Vec<_>>(),
                "r0": state.levels.first().map(|l| l.r),
                "verification": to_value(&report),
                "isometry_brackets": bracket,
                "stopped": state.stopped,
            }),
        ),
    )?;
    if w.wants(Emit::Svg) {
        w.write("blaschke_model.svg", &model_svg(&state))?;
    }
    if w.wants(Emit::Csv) {
        let mut csv = String::from("m,a,r,eps,critical_point,critical_value\n");
        for l in &state.levels {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{}",
                l.m,
                csv_float(l.a),
                csv_float(l.r),
                csv_float(l.eps),
                csv_float(l.critical_point),
                csv_float(l.critical_value)
            );
        }
        w.write("blaschke_levels.csv", &csv)?;
    }
    if let Some(reason) = &state.stopped {
        return Err(CliError::Invariant(format!("build stopped: {reason}")));
    }
    let failed = report.failures().count();
    if failed > 0 {
        let first = report.failures().next().map(|c| format!("{} at level {:?}: {}", c.name, c.level, c.detail));
        return Err(CliError::Invariant(format!(
            "{failed} invariant checks failed; first: {}",
            first.unwrap_or_default()
        )));
    }
    Ok(format!(
        "built levels 0..={} (r_0 = {}), {} checks passed",
        state.built(),
        state.levels[0].r,
        report.checks.len()
    ))
}

fn leaves_svg(f: &Foliation) -> String {
    let scale = 200.0;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{0} {0} {1} {1}\">\n\
         <circle cx=\"0\" cy=\"0\" r=\"{scale}\" fill=\"none\" stroke=\"black\" stroke-width=\"0.8\"/>\n",
        -1.1 * scale,
        2.2 * scale
    );
    for leaf in &f.leaves {
        let colour = match leaf.kind {
            LeafKind::Contracting => "#c03030",
            LeafKind::EventuallyIsometric => "#3070b0",
        };
        out.push_str("<polyline fill=\"none\" stroke-width=\"0.8\" stroke=\"");
        out.push_str(colour);
        out.push_str("\" points=\"");
        for z in &leaf.reps {
            let _ = write!(out, "{:.3},{:.3} ", z.re * scale, -z.im * scale);
        }
        out.push_str("\"/>\n");
    }
    out.push_str("</svg>\n");
    out
}

fn run_foliation(
    tower: &Path,
    horizon: Option<usize>,
    samples: usize,
    tol: &TolArgs,
    output: &Output,
) -> Result<String, CliError> {
    let tol = tol.resolve()?;
    let file = TowerFile::load(tower, horizon)?;
    let name = file.name(tower);
    let TowerFile::Tower(t) = file else {
        return Err(CliError::Inconclusive(
            "the model tower has no continuous geometric limit; no foliation extraction".into(),
        ));
    };
    let base = t.base_rep().map_err(ClassifyError::from)?;
    let inf = infinitesimal_type(t.as_ref(), base, &tol)?;
    if inf.kind == InfinitesimalType::Contracting {
        return Err(CliError::Inconclusive("contracting tower; no foliation extraction".into()));
    }
    let mut seeds = vec![t.spec().base];
    seeds.extend(t.spec().pairs.iter().map(|p| p[0]));
    let f = foliation(&t, &seeds, samples, &tol)?;
    let mut w = Writer::new(output)?;
    w.json(
        &format!("{name}_foliation.json"),
        &envelope("foliation", json!({ "tower": name, "tolerances": to_value(&tol), "foliation": to_value(&f) })),
    )?;
    if w.wants(Emit::Svg) {
        w.write(&format!("{name}_foliation.svg"), &leaves_svg(&f))?;
    }
    if w.wants(Emit::Csv) {
        let mut csv = String::from("leaf,kind,index,re,im\n");
        for (i, leaf) in f.leaves.iter().enumerate() {
            for (j, z) in leaf.reps.iter().enumerate() {
                let _ = writeln!(csv, "{i},{:?},{j},{},{}", leaf.kind, csv_float(z.re), csv_float(z.im));
            }
        }
        w.write(&format!("{name}_leaves.csv"), &csv)?;
    }
    let passed = f.checks.iter().filter(|c| c.passed).count();
    let msg = format!("{name}: {} leaves, {passed}/{} leaf checks passed", f.leaves.len(), f.checks.len());
    if f.all_passed {
        Ok(msg)
    } else {
        Err(CliError::Invariant(msg))
    }
}

fn tower_files(towers: &[PathBuf], dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    if !towers.is_empty() {
        return Ok(towers.to_vec());
    }
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Input {
        path: dir.to_path_buf(),
        reason: e.to_string(),
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Input {
            path: dir.to_path_buf(),
            reason: "no tower files".into(),
        });
    }
    Ok(files)
}

fn run_report(
    towers: &[PathBuf],
    dir: &Path,
    horizon: Option<usize>,
    eps: f64,
    tol: &TolArgs,
    output: &Output,
) -> Result<String, CliError> {
    let tol = tol.resolve()?;
    let files = tower_files(towers, dir)?;
    let mut entries = Vec::new();
    let mut summary = Vec::new();
    let mut clean = true;
    for path in &files {
        let (name, body) = classify_file(path, horizon, DEFAULT_PAIR_SAMPLES, DEFAULT_SEED, &tol)?;
        let row = row_of(&body);
        let discrepancies = body["verdict"]["discrepancies"].clone();
        clean &= row.is_some() && discrepancies.as_array().is_some_and(Vec::is_empty);
        let annuli = match TowerFile::load(path, horizon)? {
            TowerFile::Tower(t) => match absorbing_annuli(&t, eps, t.horizon().min(20), &[], &tol) {
                Ok(a) => to_value(&a),
                Err(e) => json!({ "skipped": e.to_string() }),
            },
            TowerFile::Model { .. } => json!({ "skipped": "no annulus levels" }),
        };
        summary.push(format!("{name}: row {}", row.map_or("?".into(), |r| r.to_string())));
        entries.push(json!({
            "tower": name,
            "path": path.display().to_string(),
            "row": row,
            "labels": body["verdict"]["modality"]["labels"].clone(),
            "discrepancies": discrepancies,
            "classification": body,
            "absorbing_annuli": annuli,
        }));
    }
    let mut rows: Vec<u64> = entries.iter().filter_map(|e| e["row"].as_u64()).collect();
    rows.sort_unstable();
    rows.dedup();
    let mut w = Writer::new(output)?;
    w.json(
        "report.json",
        &envelope(
            "report",
            json!({ "tolerances": to_value(&tol), "eps": eps, "rows_covered": rows, "towers": entries }),
        ),
    )?;
    if w.wants(Emit::Csv) {
        let mut csv = String::from("tower,row,discrepancies\n");
        for e in &entries {
            let _ = writeln!(
                csv,
                "{},{},{}",
                e["tower"].as_str().unwrap_or(""),
                e["row"].as_u64().map_or(String::new(), |r| r.to_string()),
                e["discrepancies"].as_array().map_or(0, Vec::len)
            );
        }
        w.write("report.csv", &csv)?;
    }
    let msg = summary.join("\n");
    if clean {
        Ok(msg)
    } else {
        Err(CliError::Inconclusive(format!("{msg}\nsome towers are inconclusive or inconsistent")))
    }
}

pub fn execute(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Trace { tower, horizon, output } => run_trace(&tower, horizon, &output),
        Command::Classify {
            tower,
            horizon,
            samples,
            seed,
            tol,
            output,
        } => run_classify(&tower, horizon, samples, seed, &tol, &output),
        Command::Blaschke {
            command: BlaschkeCommand::Build { levels, samples, output },
        } => run_blaschke_build(levels, samples, &output),
        Command::Foliation {
            tower,
            horizon,
            samples,
            tol,
            output,
        } => run_foliation(&tower, horizon, samples, &tol, &output),
        Command::Report {
            tower,
            dir,
            horizon,
            eps,
            tol,
            output,
        } => run_report(&tower, &dir, horizon, eps, &tol, &output),
    }
}

/// Parse `args`, run the command and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(msg) => {
            println!("{msg}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_floats_have_seventeen_digits() {
        let s = to_json_string(&json!({ "x": 0.1, "n": 3, "bad": f64::NAN }));
        assert!(s.contains("\"x\": 1.0000000000000001e-1"), "{s}");
        assert!(s.contains("\"n\": 3"));
        assert!(s.contains("\"bad\": null"));
    }

    #[test]
    fn csv_marks_infinity() {
        assert_eq!(csv_float(f64::INFINITY), "inf");
        assert_eq!(csv_float(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn tolerance_overrides_keep_order() {
        let bad = TolArgs {
            tol_const: Some(1e-3),
            ..TolArgs::default()
        };
        assert!(matches!(bad.resolve(), Err(CliError::Usage(_))));
        assert!(TolArgs::default().resolve().is_ok());
    }

    #[test]
    fn negative_levels_are_a_usage_error() {
        assert_eq!(run(["hypdyn", "blaschke", "build", "--levels", "-1"]), EXIT_USAGE);
        assert_eq!(run(["hypdyn", "blaschke", "build", "--levels", "9"]), EXIT_USAGE);
    }
}
