//! Command-line front end.
//!
//! Every setting is a flat key (`L`, `window`, `emin.resolution`, ...) that can
//! come from `--config FILE` (a JSON object, or a previous `manifest.json`) and
//! be overridden by the flag of the same name.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::error::Error;
use crate::models::{momentum_grid, ModelKind, ModelSpec};
use crate::scan::{run_convergence_study, run_path_scan, run_plane_scan, run_plane_scan_resumable, ScanConfig, ScanResult};
use crate::zeros::{analytic_zero_lines, boundary_estimate, compare_lines, extract_zeros};
use config::Settings;
use output::{num, unix_now, write_manifest, Csv, ManifestInfo, OutputSet};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CAP: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Config { key: String, message: String },
    Lib(Error),
    Io(String),
}

impl CliError {
    pub(crate) fn config(key: &'static str, message: impl Into<String>) -> Self {
        CliError::Config {
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn config_owned(key: String, message: impl Into<String>) -> Self {
        CliError::Config {
            key,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io(_) => EXIT_CONFIG,
            CliError::Lib(Error::ResolutionCap { .. }) => EXIT_CAP,
            CliError::Lib(Error::Degenerate { .. }) => EXIT_NUMERICAL,
            CliError::Lib(_) => EXIT_CONFIG,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { key, message } => write!(f, "invalid parameter `{key}`: {message}"),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "fidzero", version, about = "Fidelity zeros of two-band lattice models in a complex parameter plane")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate F_min / E_min / total fidelity on a grid of the complex plane.
    Scan(ScanArgs),
    /// Total fidelity and Re(E) of every mode along a horizontal path.
    Path(PathArgs),
    /// Analytic zero lines, optionally compared with a finished scan.
    Zeros(ZerosArgs),
    /// Boundary estimates over a list of system sizes.
    Converge(ConvergeArgs),
    /// Print the model catalog and defaults.
    Models,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config with flat keys, or a previous manifest.json.
    #[arg(long)]
    config: Option<PathBuf>,
    /// kitaev | ssh | haldane | qwz
    #[arg(long)]
    model: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<String>,
    /// Kitaev: use the full zone m = -L/2+1..L/2 instead of m = 0..L/2.
    #[arg(long = "full-zone")]
    full_zone: bool,
    #[arg(long, allow_hyphen_values = true)]
    t1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t2: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
}

impl Common {
    fn settings(&self) -> Result<Settings, CliError> {
        let mut s = match &self.config {
            Some(p) => Settings::load(p)?,
            None => Settings::default(),
        };
        s.set_str("model", self.model.as_ref());
        s.set_str("delta", self.delta.as_ref());
        s.set_flag("full-zone", self.full_zone);
        s.set_str("t1", self.t1.as_ref());
        s.set_str("t2", self.t2.as_ref());
        s.set_str("theta", self.theta.as_ref());
        s.set_str("out", self.out.as_ref());
        Ok(s)
    }
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[command(flatten)]
    common: Common,
    /// System size L.
    #[arg(short = 'L', long = "L")]
    size: Option<String>,
    /// re_min,re_max,im_min,im_max
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    /// n_re,n_im
    #[arg(long)]
    res: Option<String>,
    /// re,im of the displacement δγ.
    #[arg(long, allow_hyphen_values = true)]
    dgamma: Option<String>,
    /// Comma list from f_min, e_min, total_fidelity.
    #[arg(long)]
    quantities: Option<String>,
    #[arg(long = "emin.resolution")]
    emin_resolution: Option<String>,
    #[arg(long = "emin.refine")]
    emin_refine: Option<String>,
    /// strict | lenient
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    threads: Option<String>,
    /// Maximum number of grid nodes.
    #[arg(long)]
    cap: Option<String>,
    /// Compute in chunks of this many rows with a resumable checkpoint.
    #[arg(long = "chunk-rows")]
    chunk_rows: Option<String>,
    /// Add gnuplot commands to the CSV comment header.
    #[arg(long = "gnuplot-hints")]
    gnuplot_hints: bool,
}

#[derive(Debug, Args)]
struct PathArgs {
    #[command(flatten)]
    common: Common,
    #[arg(short = 'L', long = "L")]
    size: Option<String>,
    /// Fixed imaginary part of the path.
    #[arg(long = "path.im", allow_hyphen_values = true)]
    im: Option<String>,
    /// lo,hi of the real part.
    #[arg(long = "path.re-range", allow_hyphen_values = true)]
    re_range: Option<String>,
    #[arg(long = "path.points")]
    points: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    dgamma: Option<String>,
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Debug, Args)]
struct ZerosArgs {
    #[command(flatten)]
    common: Common,
    #[arg(short = 'L', long = "L")]
    size: Option<String>,
    /// Output directory of a previous `scan`; enables detection and comparison.
    #[arg(long)]
    scan: Option<String>,
}

#[derive(Debug, Args)]
struct ConvergeArgs {
    #[command(flatten)]
    common: Common,
    /// Comma list of system sizes.
    #[arg(long, allow_hyphen_values = true)]
    sizes: Option<String>,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Scan(a) => cmd_scan(&a),
        Command::Path(a) => cmd_path(&a),
        Command::Zeros(a) => cmd_zeros(&a),
        Command::Converge(a) => cmd_converge(&a),
        Command::Models => {
            print!("{}", catalog());
            Ok(())
        }
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn describe_model(spec: &ModelSpec) -> String {
    config::model_values(spec)
        .into_iter()
        .map(|(k, v)| match v {
            Value::String(s) => format!("{k}={s}"),
            other => format!("{k}={other}"),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn grid_csv(cfg: &ScanConfig, what: &str, hints: bool, cell: impl Fn(usize) -> String) -> Vec<u8> {
    let w = cfg.window;
    let mut csv = Csv::default();
    csv.comment(format!("{} scan {what}", env!("CARGO_PKG_NAME")))
        .comment(format!("{} L={}", describe_model(&cfg.model), cfg.size))
        .comment(format!("window={},{},{},{}", num(w.re_min), num(w.re_max), num(w.im_min), num(w.im_max)))
        .comment(format!("res={},{}", cfg.n_re, cfg.n_im))
        .comment(format!("dgamma={},{}", num(cfg.delta_gamma.re), num(cfg.delta_gamma.im)))
        .comment("row i: im = im_min + i*(im_max-im_min)/(n_im-1); column j: re = re_min + j*(re_max-re_min)/(n_re-1)");
    if hints {
        let file = format!("{what}.csv");
        csv.comment("gnuplot: set datafile separator ','")
            .comment(format!("gnuplot: set xrange [{}:{}]; set yrange [{}:{}]", w.re_min, w.re_max, w.im_min, w.im_max))
            .comment(format!(
                "gnuplot: plot '{file}' matrix using ({}+$1*{}):({}+$2*{}):3 with image",
                w.re_min,
                cfg.re_step(),
                w.im_min,
                cfg.im_step()
            ));
    }
    for i in 0..cfg.n_im {
        csv.row((0..cfg.n_re).map(|j| cell(i * cfg.n_re + j)));
    }
    csv.into_bytes()
}

fn cmd_scan(a: &ScanArgs) -> Result<(), CliError> {
    let started = unix_now();
    let mut s = a.common.settings()?;
    s.set_str("L", a.size.as_ref());
    s.set_str("window", a.window.as_ref());
    s.set_str("res", a.res.as_ref());
    s.set_str("dgamma", a.dgamma.as_ref());
    s.set_str("quantities", a.quantities.as_ref());
    s.set_str("emin.resolution", a.emin_resolution.as_ref());
    s.set_str("emin.refine", a.emin_refine.as_ref());
    s.set_str("mode", a.mode.as_ref());
    s.set_str("threads", a.threads.as_ref());
    s.set_str("cap", a.cap.as_ref());
    s.set_str("chunk-rows", a.chunk_rows.as_ref());
    s.set_flag("gnuplot-hints", a.gnuplot_hints);
    let ss = config::scan_settings(&s)?;
    let cfg = ss.config;
    cfg.validate()?;

    let mut outputs = OutputSet::new(&ss.out)?;
    let result = match ss.chunk_rows {
        Some(n) => run_plane_scan_resumable(&cfg, outputs.dir(), n, None)?,
        None => run_plane_scan(&cfg)?,
    };
    if let Some(f) = &result.f_min {
        outputs.write("fmin.csv", &grid_csv(&cfg, "fmin", ss.gnuplot_hints, |c| num(f[c])))?;
    }
    if let Some(arg) = &result.argmin {
        outputs.write("argmin.csv", &grid_csv(&cfg, "argmin", ss.gnuplot_hints, |c| arg[c].to_string()))?;
    }
    if let Some(e) = &result.e_min {
        outputs.write("emin.csv", &grid_csv(&cfg, "emin", ss.gnuplot_hints, |c| num(e[c])))?;
    }
    if let Some(t) = &result.total_fidelity {
        outputs.write("total.csv", &grid_csv(&cfg, "total", ss.gnuplot_hints, |c| num(t[c])))?;
    }
    let flagged = result.flags.iter().filter(|&&b| b & 0b11 != 0).count();
    let mut extra = Map::new();
    extra.insert("config_digest".into(), cfg.digest().into());
    extra.insert("wall_time_s".into(), result.wall_time_s.into());
    write_manifest(
        &outputs,
        ManifestInfo {
            command: "scan",
            config: config::scan_values(&cfg, &ss.out, ss.chunk_rows, ss.gnuplot_hints),
            model: serde_json::to_value(cfg.model).unwrap_or(Value::Null),
            started,
            flags: Some((result.flag_summary(), flagged)),
            extra,
        },
    )
}

fn cmd_path(a: &PathArgs) -> Result<(), CliError> {
    let started = unix_now();
    let mut s = a.common.settings()?;
    s.set_str("L", a.size.as_ref());
    s.set_str("path.im", a.im.as_ref());
    s.set_str("path.re-range", a.re_range.as_ref());
    s.set_str("path.points", a.points.as_ref());
    s.set_str("dgamma", a.dgamma.as_ref());
    s.set_str("mode", a.mode.as_ref());
    let p = config::path_settings(&s)?;
    let result = run_path_scan(&p.model, p.size, &p.path, p.dgamma, p.mode)?;

    let mut outputs = OutputSet::new(&p.out)?;
    let mut csv = Csv::default();
    let mut columns = vec!["re".to_string(), "total_fidelity".to_string()];
    for label in &result.grid.labels {
        let tag = if result.grid.kind.dimension() == 1 {
            format!("{}", label[0])
        } else {
            format!("{}:{}", label[0], label[1])
        };
        columns.push(format!("re_e_plus[{tag}]"));
        columns.push(format!("re_e_minus[{tag}]"));
    }
    csv.comment(format!("{} path", env!("CARGO_PKG_NAME")))
        .comment(format!("{} L={}", describe_model(&p.model), p.size))
        .comment(format!("im={} points={}", num(p.path.fixed_im), p.path.n_points))
        .comment(format!("dgamma={},{}", num(p.dgamma.re), num(p.dgamma.im)))
        .comment(columns.join(","));
    for row in &result.rows {
        csv.row(
            [num(row.re), num(row.total_fidelity)]
                .into_iter()
                .chain(row.re_energies.iter().map(|&e| num(e))),
        );
    }
    outputs.write("path.csv", &csv.into_bytes())?;

    let mut crossings = Csv::default();
    crossings.comment("gap closings between rows step and step+1").comment("step,mode,re");
    for c in &result.crossings {
        crossings.row([c.step.to_string(), c.mode.to_string(), num(c.re)]);
    }
    outputs.write("crossings.csv", &crossings.into_bytes())?;

    let flags = result
        .rows
        .iter()
        .fold(0u8, |acc, r| acc | r.flags);
    let flagged = result.rows.iter().filter(|r| r.flags & 0b11 != 0).count();
    write_manifest(
        &outputs,
        ManifestInfo {
            command: "path",
            config: config::path_values(&p),
            model: serde_json::to_value(p.model).unwrap_or(Value::Null),
            started,
            flags: Some((flags_from_bits(flags), flagged)),
            extra: Map::new(),
        },
    )
}

fn flags_from_bits(bits: u8) -> crate::fidelity::FidelityFlags {
    crate::fidelity::FidelityFlags {
        real_part_tie: bits & 1 != 0,
        exceptional_point: bits & 2 != 0,
        lenient: bits & 4 != 0,
    }
}

/// Rebuilds the F_min part of a scan from its output directory.
pub fn load_scan(dir: &Path) -> Result<ScanResult, CliError> {
    let manifest = dir.join("manifest.json");
    if !manifest.is_file() {
        return Err(CliError::config_owned("scan".into(), format!("no manifest.json in {}", dir.display())));
    }
    let mut s = Settings::load(&manifest)?;
    // the manifest records where it was written; loading must not depend on it
    s.set("out", Value::String(dir.display().to_string()));
    let cfg = config::scan_settings(&s)?.config;
    let path = dir.join("fmin.csv");
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::config_owned("scan".into(), format!("{}: {e}", path.display())))?;
    let mut values = Vec::with_capacity(cfg.n_re * cfg.n_im);
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        for cell in line.split(',') {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| CliError::config("scan", format!("unparsable value `{cell}` in fmin.csv")))?;
            values.push(v);
        }
    }
    if values.len() != cfg.n_re * cfg.n_im {
        return Err(CliError::config("scan", "fmin.csv does not match the manifest resolution"));
    }
    let cells = values.len();
    Ok(ScanResult {
        config: cfg,
        f_min: Some(values),
        argmin: None,
        e_min: None,
        total_fidelity: None,
        flags: vec![0; cells],
        complete_rows: vec![true; cfg.n_im],
        wall_time_s: 0.0,
    })
}

fn cmd_zeros(a: &ZerosArgs) -> Result<(), CliError> {
    let started = unix_now();
    let mut s = a.common.settings()?;
    s.set_str("L", a.size.as_ref());
    s.set_str("scan", a.scan.as_ref());
    s.check_known(config::ZEROS_KEYS)?;
    let scan = s.string("scan")?.map(|d| load_scan(Path::new(&d))).transpose()?;

    let (model, size) = match &scan {
        Some(r) => {
            let given_model = s.get("model").is_some().then(|| config::model_spec(&s)).transpose()?;
            if given_model.is_some_and(|m| m != r.config.model) {
                return Err(CliError::config("model", "differs from the scan's model"));
            }
            if s.usize("L")?.is_some_and(|l| l != r.config.size) {
                return Err(CliError::config("L", "differs from the scan's L"));
            }
            (r.config.model, r.config.size)
        }
        None => (config::model_spec(&s)?, config::size(&s)?),
    };
    momentum_grid(&model, size)?;
    let lines = analytic_zero_lines(&model, size)?;
    let boundary = boundary_estimate(&model, size)?;
    let out = config::out_dir(&s)?;
    let mut outputs = OutputSet::new(&out)?;
    outputs.write_json(
        "zeros_analytic.json",
        &json!({ "v": 1, "model": model, "L": size, "boundary": boundary, "lines": lines }),
    )?;
    let mut extra = Map::new();
    if let Some(r) = &scan {
        let detected = extract_zeros(r)?;
        let cmp = compare_lines(&lines, &detected, &r.config.window);
        outputs.write_json("zeros_detected.json", &json!({ "v": 1, "model": model, "L": size, "detection": detected }))?;
        outputs.write_json("comparison.json", &json!({ "v": 1, "agrees": cmp.agrees(), "comparison": cmp }))?;
        extra.insert("agrees".into(), cmp.agrees().into());
    }

    let mut cfg = Map::new();
    for (k, v) in config::model_values(&model) {
        cfg.insert(k.into(), v);
    }
    cfg.insert("L".into(), size.into());
    cfg.insert("scan".into(), s.string("scan")?.map_or(Value::Null, Value::from));
    cfg.insert("out".into(), out.display().to_string().into());
    write_manifest(
        &outputs,
        ManifestInfo {
            command: "zeros",
            config: cfg,
            model: serde_json::to_value(model).unwrap_or(Value::Null),
            started,
            flags: None,
            extra,
        },
    )
}

fn cmd_converge(a: &ConvergeArgs) -> Result<(), CliError> {
    let started = unix_now();
    let mut s = a.common.settings()?;
    s.set_str("sizes", a.sizes.as_ref());
    s.check_known(config::CONVERGE_KEYS)?;
    let model = config::model_spec(&s)?;
    let sizes = config::sizes(&s)?;
    let table = run_convergence_study(&model, &sizes)?;

    let out = config::out_dir(&s)?;
    let mut outputs = OutputSet::new(&out)?;
    let mut csv = Csv::default();
    csv.comment(format!("{} converge", env!("CARGO_PKG_NAME")))
        .comment(describe_model(&model))
        .comment(format!("continuum_bound={}", num(table.continuum_bound)))
        .comment("L,max_real,min_real,critical_lo,critical_hi,gap_to_critical");
    for r in &table.rows {
        csv.row([
            r.size.to_string(),
            num(r.max_real),
            num(r.min_real),
            num(r.critical_lo),
            num(r.critical_hi),
            num(r.gap_to_critical),
        ]);
    }
    outputs.write("convergence.csv", &csv.into_bytes())?;

    let mut cfg = Map::new();
    for (k, v) in config::model_values(&model) {
        cfg.insert(k.into(), v);
    }
    cfg.insert("sizes".into(), sizes.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(",").into());
    cfg.insert("out".into(), out.display().to_string().into());
    write_manifest(
        &outputs,
        ManifestInfo {
            command: "converge",
            config: cfg,
            model: serde_json::to_value(model).unwrap_or(Value::Null),
            started,
            flags: None,
            extra: Map::new(),
        },
    )
}

/// Text listing of the models, their driving parameters and defaults.
pub fn catalog() -> String {
    let mut out = String::new();
    for kind in ModelKind::ALL {
        let spec = ModelSpec::default_for(kind);
        let defaults: Vec<String> = config::model_values(&spec)
            .into_iter()
            .skip(1)
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        let critical: Vec<String> = spec.critical_points().iter().map(|c| format!("{c:.6}")).collect();
        out.push_str(&format!(
            "{:<8} {}D  driving={:<3} defaults: {:<40} critical: {}\n",
            kind.name(),
            kind.dimension(),
            kind.driving_parameter(),
            if defaults.is_empty() { "-".to_string() } else { defaults.join(" ") },
            critical.join(", "),
        ));
    }
    out.push_str("kitaev requires --delta; L must be even for kitaev and ssh\n");
    out
}
