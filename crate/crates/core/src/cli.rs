//! Command-line front end. Data records go to stdout (or `--out`), the
//! human-readable summary to stderr.
//!
//! Exit codes: 0 success, 1 usage, 2 budget exceeded, 3 verification failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::bounds::{self, BoundsRow, Rounding};
use crate::construct::{self, Budget, ConstructError, Mode, Params};
use crate::gf::{Field, VectorSpace};
use crate::tensor::MultilinearForm;

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "erdos-box",
    version,
    about = "Box-free hypergraphs from random multilinear forms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exponent table of the deletion, GRS and multilinear lower bounds.
    Table(TableArgs),
    /// Build one instance, delete the bad edges and verify box-freeness.
    Construct(ConstructArgs),
    /// Repeat the construction over many form tuples and aggregate counts.
    Trials(TrialsArgs),
    /// Re-check a json-lines dump written by `construct`.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    JsonLines,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exact,
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RoundingArg {
    Truncate,
    HalfUp,
}

#[derive(Debug, Args)]
struct Output {
    #[arg(long, value_enum, default_value = "json-lines")]
    format: Format,
    /// Write data records here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TableArgs {
    d_min: u32,
    d_max: u32,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[arg(long, value_enum, default_value = "truncate")]
    rounding: RoundingArg,
    /// Largest r searched for the multilinear bound.
    #[arg(long, default_value_t = 1)]
    r_max: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ParamArgs {
    /// Uniformity, the number of parts.
    #[arg(long)]
    d: usize,
    /// Number of random forms.
    #[arg(long)]
    r: usize,
    /// Dimension of each part's vector space.
    #[arg(long)]
    s: usize,
    /// Field characteristic.
    #[arg(long)]
    p: u32,
    /// Extension degree, q = p^k.
    #[arg(long, default_value_t = 1)]
    k: u32,
    /// Reduction polynomial coefficients, low to high, e.g. 1,1,1.
    #[arg(long, value_delimiter = ',')]
    modulus: Option<Vec<u32>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Max vertex tuples (q^s)^d to enumerate.
    #[arg(long)]
    budget_tuples: Option<u128>,
    /// Max size q^(r s^d) of the space of form tuples.
    #[arg(long)]
    budget_tensor_space: Option<u128>,
}

#[derive(Debug, Args)]
struct ConstructArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Also export the edges of the pruned hypergraph with integer vertex ids.
    #[arg(long)]
    edges: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct TrialsArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long, value_enum, default_value = "sample")]
    mode: ModeArg,
    /// Instances with |E'| >= (1 - delta) q^(ds - r) are counted as good.
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// A json-lines dump from `construct`.
    dump: PathBuf,
    #[arg(long)]
    budget_tuples: Option<u128>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Budget(String),
    Verify(String),
    Io(io::Error),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => EXIT_USAGE,
            CliError::Budget(_) => EXIT_BUDGET,
            CliError::Verify(_) => EXIT_VERIFY,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Budget(m) => write!(f, "budget exceeded: {m}"),
            CliError::Verify(m) => write!(f, "verification failed: {m}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<ConstructError> for CliError {
    fn from(e: ConstructError) -> Self {
        match e {
            ConstructError::Budget { .. } => CliError::Budget(e.to_string()),
            ConstructError::Inconsistent(_) | ConstructError::NotSubset => {
                CliError::Verify(e.to_string())
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Table(a) => cmd_table(&a, stdout, stderr),
        Command::Construct(a) => cmd_construct(&a, stdout, stderr),
        Command::Trials(a) => cmd_trials(&a, stdout, stderr),
        Command::Verify(a) => cmd_verify(&a, stdout, stderr),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.code()
        }
    }
}

/// Line-oriented record sink for the three output formats.
struct Records<'a> {
    out: &'a mut dyn Write,
    format: Format,
    csv_kind: Option<String>,
}

impl<'a> Records<'a> {
    fn new(out: &'a mut dyn Write, format: Format) -> Self {
        Records {
            out,
            format,
            csv_kind: None,
        }
    }

    fn emit(&mut self, kind: &str, fields: Map<String, Value>) -> io::Result<()> {
        match self.format {
            Format::JsonLines => {
                let mut obj = Map::new();
                obj.insert("schema".into(), json!(SCHEMA_VERSION));
                obj.insert("record".into(), json!(kind));
                obj.extend(fields);
                writeln!(self.out, "{}", Value::Object(obj))
            }
            Format::Text => {
                let parts: Vec<String> = fields
                    .iter()
                    .map(|(k, v)| format!("{k}={}", text_value(v)))
                    .collect();
                writeln!(self.out, "{kind} {}", parts.join(" "))
            }
            Format::Csv => {
                if self.csv_kind.as_deref() != Some(kind) {
                    let header: Vec<&str> = fields.keys().map(String::as_str).collect();
                    writeln!(self.out, "record,schema,{}", header.join(","))?;
                    self.csv_kind = Some(kind.to_string());
                }
                let row: Vec<String> = fields.values().map(|v| csv_value(&text_value(v))).collect();
                writeln!(self.out, "{kind},{SCHEMA_VERSION},{}", row.join(","))
            }
        }
    }
}

fn text_value(v: &Value) -> String {
    match v {
        Value::Null => "-".into(),
        Value::String(s) if s.contains(char::is_whitespace) => Value::String(s.clone()).to_string(),
        Value::String(s) => s.clone(),
        Value::Array(xs) => xs.iter().map(text_value).collect::<Vec<_>>().join(","),
        other => other.to_string(),
    }
}

fn csv_value(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn fields(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("records are built from json objects"),
    }
}

fn with_sink<F>(out: &Option<PathBuf>, stdout: &mut dyn Write, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
{
    match out {
        Some(path) => {
            let mut file = io::BufWriter::new(File::create(path)?);
            f(&mut file)?;
            file.flush()?;
            Ok(())
        }
        None => f(stdout),
    }
}

fn cmd_table(
    a: &TableArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    if a.d_min < 2 || a.d_min > a.d_max || a.d_max > 64 {
        return Err(CliError::Usage(format!(
            "table needs 2 <= d_min <= d_max <= 64, got {} {}",
            a.d_min, a.d_max
        )));
    }
    let rows = bounds::comparison_table(a.d_min, a.d_max, a.r_max.max(1))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mode = match a.rounding {
        RoundingArg::Truncate => Rounding::Truncate,
        RoundingArg::HalfUp => Rounding::HalfUp,
    };
    writeln!(
        stderr,
        "columns: d, deletion, GRS, multilinear (alpha in n^(d - 1/alpha))"
    )?;
    for row in &rows {
        if row.alpha_new.r != 1 {
            writeln!(stderr, "d = {}: r = {} beats r = 1", row.d, row.alpha_new.r)?;
        }
    }
    with_sink(&a.out, stdout, |out| {
        match a.format {
            Format::Text => out.write_all(render_table_text(&rows, mode).as_bytes())?,
            Format::Csv => {
                writeln!(
                    out,
                    "d,deletion,grs,new,upper_exact,deletion_exact,grs_s,grs_exact,new_r,new_s,new_exact"
                )?;
                for row in &rows {
                    let [d, del, grs, new] = row.cells(mode);
                    let (gs, ge) = row
                        .alpha_grs
                        .as_ref()
                        .map(|g| (g.s.to_string(), g.alpha.to_string()))
                        .unwrap_or_default();
                    writeln!(
                        out,
                        "{d},{del},{grs},{new},{},{},{gs},{ge},{},{},{}",
                        row.alpha_upper,
                        row.alpha_deletion,
                        row.alpha_new.r,
                        row.alpha_new.s,
                        row.alpha_new.alpha
                    )?;
                }
            }
            Format::JsonLines => {
                let mut rec = Records::new(out, Format::JsonLines);
                for row in &rows {
                    let [_, del, grs, new] = row.cells(mode);
                    let mut m = fields(serde_json::to_value(row).expect("rows serialize"));
                    m.insert("deletion".into(), json!(del));
                    m.insert(
                        "grs".into(),
                        if grs.is_empty() {
                            Value::Null
                        } else {
                            json!(grs)
                        },
                    );
                    m.insert("new".into(), json!(new));
                    rec.emit("bounds", m)?;
                }
            }
        }
        Ok(())
    })
}

/// Right-aligned columns separated by two spaces; the GRS cell is blank when
/// the bound does not apply.
pub fn render_table_text(rows: &[BoundsRow], mode: Rounding) -> String {
    let cells: Vec<[String; 4]> = rows.iter().map(|r| r.cells(mode)).collect();
    let mut widths = [0usize; 4];
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut s = String::new();
    for row in &cells {
        let line: Vec<String> = row
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect();
        s.push_str(line.join("  ").trim_end());
        s.push('\n');
    }
    s
}

fn build_params(a: &ParamArgs) -> Result<(Params, Budget), CliError> {
    let field =
        Field::new(a.p, a.k, a.modulus.as_deref()).map_err(|e| CliError::Usage(e.to_string()))?;
    let params = Params::new(a.d, a.r, a.s, field)?;
    let mut budget = Budget::default();
    if let Some(t) = a.budget_tuples {
        budget.tuples = t;
    }
    if let Some(t) = a.budget_tensor_space {
        budget.tensor_space = t;
    }
    Ok((params, budget))
}

fn params_record(params: &Params, seed: u64) -> Map<String, Value> {
    let f = params.field();
    fields(json!({
        "version": env!("CARGO_PKG_VERSION"),
        "d": params.d(),
        "r": params.r(),
        "s": params.s(),
        "p": f.p(),
        "k": f.k(),
        "modulus": f.modulus(),
        "q": f.q(),
        "seed": seed,
        "n": params.n().to_string(),
        "target_exponent": params.target_exponent().to_string(),
        "theorem_regime": params.theorem_regime(),
        "leading_constant": params.leading_constant(),
    }))
}

fn regime_note(params: &Params, stderr: &mut dyn Write) -> io::Result<()> {
    if !params.theorem_regime() {
        writeln!(
            stderr,
            "note: d(s-1) < (2^d-1)r fails for (d, r, s) = ({}, {}, {}); deletion is not expected to be negligible",
            params.d(),
            params.r(),
            params.s()
        )?;
    }
    Ok(())
}

/// Vertex id: part index times `q^s` plus the vector's index in its part.
fn vertex_id(space: &VectorSpace, part: usize, v: &crate::gf::Vector) -> u64 {
    let q = space.field().q() as u64;
    let idx = v
        .entries()
        .iter()
        .fold(0u64, |acc, x| acc * q + x.index() as u64);
    part as u64 * space.size().expect("part size fits") + idx
}

fn cmd_construct(
    a: &ConstructArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let (params, budget) = build_params(&a.params)?;
    regime_note(&params, stderr)?;
    params.check_tuple_budget(&budget)?;
    let forms = params.sample_forms(&mut construct::trial_rng(a.params.seed, 0));
    let inst = construct::run_instance(&params, &forms, &budget)?;
    let counts = inst.counts();

    let edge_scale = bounds::to_f64(&params.edge_scale());
    let n = params.n().to_string().parse::<f64>().unwrap_or(f64::NAN);
    let c_n = params.leading_constant() * n.powf(bounds::to_f64(&params.target_exponent()));

    writeln!(
        stderr,
        "n = {}, |E| = {}, |F| = {}, |L| = {}, |B| = {}, |E'| = {}, box-free: {}",
        params.n(),
        counts.edges,
        counts.boxes,
        counts.lines,
        counts.bad,
        counts.pruned,
        inst.box_free()
    )?;
    writeln!(
        stderr,
        "|E'| / (c n^(d - r/s)) = {:.4} with c n^(d - r/s) = q^(ds - r) = {}",
        counts.pruned as f64 / c_n,
        edge_scale
    )?;

    with_sink(&a.output.out, stdout, |out| {
        let mut rec = Records::new(out, a.output.format);
        rec.emit("params", params_record(&params, a.params.seed))?;
        for (i, t) in forms.iter().enumerate() {
            rec.emit("form", fields(json!({ "index": i, "tensor": t.to_text() })))?;
        }
        let mut m = fields(serde_json::to_value(counts).expect("counts serialize"));
        m.insert("box_free".into(), json!(inst.box_free()));
        m.insert(
            "bad_direct_agrees".into(),
            json!(inst.bad == inst.bad_direct),
        );
        m.insert(
            "expected_edges".into(),
            json!(params.expected_edges().to_string()),
        );
        m.insert(
            "expected_boxes".into(),
            json!(params.expected_boxes().to_string()),
        );
        m.insert("edge_scale".into(), json!(edge_scale));
        m.insert("c_n_target".into(), json!(c_n));
        m.insert(
            "pruned_over_target".into(),
            json!(counts.pruned as f64 / c_n),
        );
        rec.emit("instance", m)?;
        if a.edges {
            let space = params.space();
            for e in inst.pruned.iter() {
                let ids: Vec<u64> = e
                    .slots()
                    .iter()
                    .enumerate()
                    .map(|(j, v)| vertex_id(&space, j, v))
                    .collect();
                rec.emit("edge", fields(json!({ "vertices": ids })))?;
            }
        }
        if let Some(w) = &inst.witness {
            let pairs: Vec<String> = w.pairs().iter().map(|(x, y)| format!("{x}|{y}")).collect();
            rec.emit("witness", fields(json!({ "pairs": pairs })))?;
        }
        Ok(())
    })?;
    if !inst.box_free() {
        return Err(CliError::Verify(
            "the pruned hypergraph contains a box".into(),
        ));
    }
    Ok(())
}

fn cmd_trials(
    a: &TrialsArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&a.delta) {
        return Err(CliError::Usage("--delta must lie in [0, 1]".into()));
    }
    let (params, budget) = build_params(&a.params)?;
    regime_note(&params, stderr)?;
    let mode = match a.mode {
        ModeArg::Exact => Mode::Exact,
        ModeArg::Sample => Mode::Sampled,
    };
    let stats = construct::run_trials(&params, a.trials, a.params.seed, mode, &budget)?;

    let exp_e = params.expected_edges();
    let exp_f = params.expected_boxes();
    let me = stats.moments(|c| c.edges);
    let mf = stats.moments(|c| c.boxes);
    let ml = stats.moments(|c| c.lines);
    let mb = stats.moments(|c| c.bad);
    let mp = stats.moments(|c| c.pruned);
    let exp_e_f = bounds::to_f64(&exp_e);
    let exp_f_f = bounds::to_f64(&exp_f);
    let q1d = ((params.q() - 1) as f64).powi(params.d() as i32);
    let good = stats.good_instances(a.delta);

    let mut summary = fields(json!({
        "mode": mode,
        "trials": stats.count(),
        "mean_edges": me.mean,
        "se_edges": me.std_err,
        "mean_boxes": mf.mean,
        "se_boxes": mf.std_err,
        "mean_lines": ml.mean,
        "se_lines": ml.std_err,
        "mean_bad": mb.mean,
        "se_bad": mb.std_err,
        "mean_pruned": mp.mean,
        "se_pruned": mp.std_err,
        "expected_edges": exp_e.to_string(),
        "expected_edges_f64": exp_e_f,
        "expected_boxes": exp_f.to_string(),
        "expected_boxes_f64": exp_f_f,
        "bad_bound": exp_f_f / q1d,
        "bad_over_edges": if me.mean > 0.0 { mb.mean / me.mean } else { 0.0 },
        "edge_scale": bounds::to_f64(&params.edge_scale()),
        "delta": a.delta,
        "good_instances": good.len(),
        "all_box_free": stats.all_box_free(),
    }));
    let mut exact_ok = true;
    match mode {
        Mode::Exact => {
            let mean_e = stats.exact_mean(|c| c.edges);
            let mean_f = stats.exact_mean(|c| c.boxes);
            exact_ok = mean_e == exp_e && mean_f == exp_f;
            summary.insert("exact_mean_edges".into(), json!(mean_e.to_string()));
            summary.insert("exact_mean_boxes".into(), json!(mean_f.to_string()));
            summary.insert("exact_match".into(), json!(exact_ok));
        }
        Mode::Sampled => {
            summary.insert("z_edges".into(), json!(finite_or_null(me.z_score(exp_e_f))));
            summary.insert("z_boxes".into(), json!(finite_or_null(mf.z_score(exp_f_f))));
        }
    }
    writeln!(
        stderr,
        "{} instances: mean |E| = {:.4} (expected {:.4}), mean |F| = {:.4} (expected {:.4}), mean |B|/mean |E| = {:.4}",
        stats.count(),
        me.mean,
        exp_e_f,
        mf.mean,
        exp_f_f,
        if me.mean > 0.0 { mb.mean / me.mean } else { 0.0 }
    )?;

    with_sink(&a.output.out, stdout, |out| {
        let mut rec = Records::new(out, a.output.format);
        rec.emit("params", params_record(&params, a.params.seed))?;
        for r in &stats.records {
            rec.emit(
                "trial",
                fields(serde_json::to_value(r).expect("records serialize")),
            )?;
        }
        rec.emit("summary", summary)?;
        Ok(())
    })?;
    if !stats.all_box_free() {
        return Err(CliError::Verify(
            "some pruned hypergraph contains a box".into(),
        ));
    }
    if !exact_ok {
        return Err(CliError::Verify(
            "exact means differ from the closed forms".into(),
        ));
    }
    Ok(())
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn cmd_verify(
    a: &VerifyArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let reader = BufReader::new(File::open(&a.dump)?);
    let mut params_rec: Option<Value> = None;
    let mut forms: Vec<(u64, MultilinearForm)> = Vec::new();
    let mut instance: Option<Value> = None;
    let mut edges: Vec<Vec<u64>> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(&line).map_err(|e| {
            CliError::Usage(format!("line {}: not a json-lines dump ({e})", lineno + 1))
        })?;
        if v["schema"] != json!(SCHEMA_VERSION) {
            return Err(CliError::Usage(format!(
                "line {}: unsupported schema",
                lineno + 1
            )));
        }
        match v["record"].as_str() {
            Some("params") => params_rec = Some(v),
            Some("form") => {
                let text = v["tensor"]
                    .as_str()
                    .ok_or_else(|| CliError::Usage("form record without tensor".into()))?;
                let t =
                    MultilinearForm::from_text(text).map_err(|e| CliError::Usage(e.to_string()))?;
                forms.push((v["index"].as_u64().unwrap_or(0), t));
            }
            Some("instance") => instance = Some(v),
            Some("edge") => edges.push(
                serde_json::from_value(v["vertices"].clone())
                    .map_err(|e| CliError::Usage(format!("bad edge record: {e}")))?,
            ),
            _ => {}
        }
    }
    let p = params_rec.ok_or_else(|| CliError::Usage("dump has no params record".into()))?;
    let instance = instance.ok_or_else(|| CliError::Usage("dump has no instance record".into()))?;
    forms.sort_by_key(|(i, _)| *i);
    let forms: Vec<MultilinearForm> = forms.into_iter().map(|(_, t)| t).collect();
    let field = forms
        .first()
        .map(|t| t.field().clone())
        .ok_or_else(|| CliError::Usage("dump has no forms".into()))?;
    let get = |k: &str| -> Result<usize, CliError> {
        p[k].as_u64()
            .map(|x| x as usize)
            .ok_or_else(|| CliError::Usage(format!("params record lacks {k}")))
    };
    let params = Params::new(get("d")?, get("r")?, get("s")?, field)?;
    let mut budget = Budget::default();
    if let Some(t) = a.budget_tuples {
        budget.tuples = t;
    }
    let inst = construct::run_instance(&params, &forms, &budget)?;
    let counts = inst.counts();
    let recorded = |k: &str| instance[k].as_u64();
    let mut problems = Vec::new();
    for (k, got) in [
        ("edges", counts.edges),
        ("boxes", counts.boxes),
        ("lines", counts.lines),
        ("bad", counts.bad),
        ("pruned", counts.pruned),
    ] {
        if recorded(k) != Some(got) {
            problems.push(format!(
                "{k}: dump says {:?}, recomputed {got}",
                recorded(k)
            ));
        }
    }
    if !inst.box_free() {
        problems.push("recomputed pruned hypergraph contains a box".into());
    }
    if !edges.is_empty() {
        let space = params.space();
        let mut mine: Vec<Vec<u64>> = inst
            .pruned
            .iter()
            .map(|e| {
                e.slots()
                    .iter()
                    .enumerate()
                    .map(|(j, v)| vertex_id(&space, j, v))
                    .collect()
            })
            .collect();
        mine.sort();
        edges.sort();
        if mine != edges {
            problems.push("exported edges differ from the recomputed pruned hypergraph".into());
        }
    }
    writeln!(
        stdout,
        "verify edges={} boxes={} lines={} bad={} pruned={} box_free={} ok={}",
        counts.edges,
        counts.boxes,
        counts.lines,
        counts.bad,
        counts.pruned,
        inst.box_free(),
        problems.is_empty()
    )?;
    if problems.is_empty() {
        Ok(())
    } else {
        for p in &problems {
            writeln!(stderr, "{p}")?;
        }
        Err(CliError::Verify(problems.join("; ")))
    }
}
