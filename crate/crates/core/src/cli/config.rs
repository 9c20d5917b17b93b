//! Flat dotted-key settings shared by config files, manifests and flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde_json::{Map, Value};

use super::CliError;
use crate::linalg2::Strictness;
use crate::models::{ModelKind, ModelSpec};
use crate::scan::{PathSpec, Quantities, ScanConfig, Window, DEFAULT_CAP};
use crate::spectrum::EminOptions;

pub const MODEL_KEYS: &[&str] = &["model", "delta", "full-zone", "t1", "t2", "theta"];

/// Resolved key/value pairs. Later sources override earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, Value>,
}

fn flatten(prefix: &str, value: &Value, out: &mut BTreeMap<String, Value>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other.clone());
        }
    }
}

impl Settings {
    /// Loads a config file; a run manifest is accepted and its `config` used.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
        let json: Value =
            serde_json::from_str(&text).map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
        let body = match &json {
            Value::Object(map) if map.contains_key("v") && map.contains_key("config") => &map["config"],
            Value::Object(_) => &json,
            _ => return Err(CliError::config("config", "expected a JSON object")),
        };
        let mut values = BTreeMap::new();
        flatten("", body, &mut values);
        Ok(Settings { values })
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.values.insert(key.to_string(), value);
    }

    pub fn set_str(&mut self, key: &str, value: Option<&String>) {
        if let Some(v) = value {
            self.set(key, Value::String(v.clone()));
        }
    }

    pub fn set_flag(&mut self, key: &str, on: bool) {
        if on {
            self.set(key, Value::Bool(true));
        }
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.values.get(key)
    }

    /// Rejects keys this command does not understand.
    pub fn check_known(&self, known: &[&str]) -> Result<(), CliError> {
        for key in self.values.keys() {
            if !known.contains(&key.as_str()) && !MODEL_KEYS.contains(&key.as_str()) {
                return Err(CliError::config_owned(key.clone(), "unknown key"));
            }
        }
        Ok(())
    }

    pub fn retain(&mut self, keys: &[&str]) {
        self.values.retain(|k, _| keys.contains(&k.as_str()));
    }

    fn text(&self, key: &'static str) -> Result<Option<String>, CliError> {
        match self.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.trim().to_string())),
            Some(Value::Number(n)) => Ok(Some(n.to_string())),
            Some(Value::Bool(b)) => Ok(Some(b.to_string())),
            Some(Value::Array(items)) => {
                let parts: Vec<String> = items
                    .iter()
                    .map(|v| match v {
                        Value::Number(n) => Ok(n.to_string()),
                        Value::String(s) => Ok(s.clone()),
                        _ => Err(CliError::config(key, "list entries must be numbers or strings")),
                    })
                    .collect::<Result<_, _>>()?;
                Ok(Some(parts.join(",")))
            }
            Some(Value::Object(_)) => Err(CliError::config(key, "unexpected object")),
        }
    }

    pub fn f64(&self, key: &'static str) -> Result<Option<f64>, CliError> {
        self.text(key)?
            .map(|s| parse_f64(key, &s))
            .transpose()
    }

    pub fn usize(&self, key: &'static str) -> Result<Option<usize>, CliError> {
        self.text(key)?
            .map(|s| s.parse::<usize>().map_err(|_| CliError::config(key, format!("expected a nonnegative integer, got `{s}`"))))
            .transpose()
    }

    pub fn bool(&self, key: &'static str) -> Result<Option<bool>, CliError> {
        self.text(key)?
            .map(|s| match s.as_str() {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(CliError::config(key, format!("expected true or false, got `{s}`"))),
            })
            .transpose()
    }

    pub fn string(&self, key: &'static str) -> Result<Option<String>, CliError> {
        self.text(key)
    }

    pub fn f64_list(&self, key: &'static str, len: Option<usize>) -> Result<Option<Vec<f64>>, CliError> {
        let Some(s) = self.text(key)? else { return Ok(None) };
        let items = s
            .split(',')
            .map(|p| parse_f64(key, p.trim()))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(n) = len {
            if items.len() != n {
                return Err(CliError::config(key, format!("expected {n} comma-separated values, got {}", items.len())));
            }
        }
        Ok(Some(items))
    }

    pub fn usize_list(&self, key: &'static str) -> Result<Option<Vec<usize>>, CliError> {
        let Some(s) = self.text(key)? else { return Ok(None) };
        if s.is_empty() {
            return Ok(Some(Vec::new()));
        }
        s.split(',')
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::config(key, format!("expected integers, got `{}`", p.trim())))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }
}

fn parse_f64(key: &'static str, s: &str) -> Result<f64, CliError> {
    let v: f64 = s
        .parse()
        .map_err(|_| CliError::config(key, format!("expected a number, got `{s}`")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(key, "value must be finite"))
    }
}

pub fn model_spec(s: &Settings) -> Result<ModelSpec, CliError> {
    let name = s.string("model")?.ok_or_else(|| CliError::config("model", "missing required key"))?;
    let kind: ModelKind = name.parse().map_err(|_| CliError::config("model", format!("unknown model `{name}`")))?;
    let spec = match kind {
        ModelKind::Kitaev => ModelSpec::Kitaev {
            delta: s.f64("delta")?.ok_or_else(|| CliError::config("delta", "missing required key for kitaev"))?,
            full_zone: s.bool("full-zone")?.unwrap_or(false),
        },
        ModelKind::Ssh => {
            let ModelSpec::Ssh { t2 } = ModelSpec::default_for(kind) else { unreachable!() };
            ModelSpec::ssh(s.f64("t2")?.unwrap_or(t2))
        }
        ModelKind::Haldane => {
            let ModelSpec::Haldane { t1, t2, theta } = ModelSpec::default_for(kind) else { unreachable!() };
            ModelSpec::haldane(
                s.f64("t1")?.unwrap_or(t1),
                s.f64("t2")?.unwrap_or(t2),
                s.f64("theta")?.unwrap_or(theta),
            )
        }
        ModelKind::Qwz => ModelSpec::Qwz,
    };
    spec.validate()?;
    Ok(spec)
}

/// Flat keys describing `spec`, suitable for writing back into a manifest.
pub fn model_values(spec: &ModelSpec) -> Vec<(&'static str, Value)> {
    let mut out = vec![("model", Value::String(spec.kind().name().to_string()))];
    match *spec {
        ModelSpec::Kitaev { delta, full_zone } => {
            out.push(("delta", delta.into()));
            out.push(("full-zone", full_zone.into()));
        }
        ModelSpec::Ssh { t2 } => out.push(("t2", t2.into())),
        ModelSpec::Haldane { t1, t2, theta } => {
            out.push(("t1", t1.into()));
            out.push(("t2", t2.into()));
            out.push(("theta", theta.into()));
        }
        ModelSpec::Qwz => {}
    }
    out
}

pub fn size(s: &Settings) -> Result<usize, CliError> {
    s.usize("L")?.ok_or_else(|| CliError::config("L", "missing required key"))
}

pub fn strictness(s: &Settings) -> Result<Strictness, CliError> {
    match s.string("mode")?.as_deref() {
        None | Some("lenient") => Ok(Strictness::Lenient),
        Some("strict") => Ok(Strictness::Strict),
        Some(other) => Err(CliError::config("mode", format!("expected strict or lenient, got `{other}`"))),
    }
}

pub fn dgamma(s: &Settings) -> Result<Complex64, CliError> {
    Ok(s
        .f64_list("dgamma", Some(2))?
        .map_or(Complex64::new(0.01, 0.01), |v| Complex64::new(v[0], v[1])))
}

pub fn out_dir(s: &Settings) -> Result<PathBuf, CliError> {
    Ok(PathBuf::from(s.string("out")?.unwrap_or_else(|| ".".to_string())))
}

pub struct ScanSettings {
    pub config: ScanConfig,
    pub out: PathBuf,
    pub chunk_rows: Option<usize>,
    pub gnuplot_hints: bool,
}

pub const SCAN_KEYS: &[&str] = &[
    "L",
    "window",
    "res",
    "dgamma",
    "quantities",
    "emin.resolution",
    "emin.refine",
    "mode",
    "threads",
    "cap",
    "out",
    "chunk-rows",
    "gnuplot-hints",
];

pub fn scan_settings(s: &Settings) -> Result<ScanSettings, CliError> {
    s.check_known(SCAN_KEYS)?;
    let model = model_spec(s)?;
    let size = size(s)?;
    let window = match s.f64_list("window", Some(4))? {
        Some(w) => Window::new(w[0], w[1], w[2], w[3]),
        None => default_window(model.kind()),
    };
    if !(window.re_min < window.re_max && window.im_min < window.im_max) {
        return Err(CliError::config("window", "expected re_min < re_max and im_min < im_max"));
    }
    let (n_re, n_im) = match s.usize_list("res")? {
        Some(r) if r.len() == 2 => (r[0], r[1]),
        Some(_) => return Err(CliError::config("res", "expected n_re,n_im")),
        None => (301, 301),
    };
    let quantities = match s.string("quantities")? {
        None => Quantities::default(),
        Some(list) => {
            let mut q = Quantities {
                f_min: false,
                e_min: false,
                total_fidelity: false,
            };
            for item in list.split(',').map(str::trim) {
                match item {
                    "f_min" | "fmin" => q.f_min = true,
                    "e_min" | "emin" => q.e_min = true,
                    "total_fidelity" | "total" => q.total_fidelity = true,
                    other => return Err(CliError::config("quantities", format!("unknown quantity `{other}`"))),
                }
            }
            q
        }
    };
    let mut e_min = EminOptions::default_for(model.kind());
    if let Some(r) = s.usize("emin.resolution")? {
        e_min.resolution = r;
    }
    if let Some(r) = s.bool("emin.refine")? {
        e_min.refine = r;
    }
    let mut config = ScanConfig::new(model, size, window)
        .with_resolution(n_re, n_im)
        .with_delta(dgamma(s)?)
        .with_quantities(quantities)
        .with_threads(s.usize("threads")?);
    config.e_min = e_min;
    config.mode = strictness(s)?;
    config.cap = s.usize("cap")?.unwrap_or(DEFAULT_CAP);
    Ok(ScanSettings {
        config,
        out: out_dir(s)?,
        chunk_rows: s.usize("chunk-rows")?,
        gnuplot_hints: s.bool("gnuplot-hints")?.unwrap_or(false),
    })
}

/// Canonical flat echo of a scan config.
pub fn scan_values(cfg: &ScanConfig, out: &Path, chunk_rows: Option<usize>, hints: bool) -> Map<String, Value> {
    let mut m = Map::new();
    for (k, v) in model_values(&cfg.model) {
        m.insert(k.into(), v);
    }
    let w = cfg.window;
    m.insert("L".into(), cfg.size.into());
    m.insert("window".into(), vec![w.re_min, w.re_max, w.im_min, w.im_max].into());
    m.insert("res".into(), vec![cfg.n_re, cfg.n_im].into());
    m.insert("dgamma".into(), vec![cfg.delta_gamma.re, cfg.delta_gamma.im].into());
    let q = cfg.quantities;
    let names: Vec<&str> = [(q.f_min, "f_min"), (q.e_min, "e_min"), (q.total_fidelity, "total_fidelity")]
        .into_iter()
        .filter_map(|(on, n)| on.then_some(n))
        .collect();
    m.insert("quantities".into(), names.join(",").into());
    m.insert("emin.resolution".into(), cfg.e_min.resolution.into());
    m.insert("emin.refine".into(), cfg.e_min.refine.into());
    m.insert("mode".into(), mode_name(cfg.mode).into());
    m.insert("threads".into(), cfg.threads.map_or(Value::Null, Value::from));
    m.insert("cap".into(), cfg.cap.into());
    m.insert("out".into(), out.display().to_string().into());
    m.insert("chunk-rows".into(), chunk_rows.map_or(Value::Null, Value::from));
    m.insert("gnuplot-hints".into(), hints.into());
    m
}

pub fn mode_name(mode: Strictness) -> &'static str {
    match mode {
        Strictness::Strict => "strict",
        Strictness::Lenient => "lenient",
    }
}

pub fn default_window(kind: ModelKind) -> Window {
    match kind {
        ModelKind::Qwz => Window::new(-2.5, 2.5, -2.0, 2.0),
        _ => Window::square(1.5),
    }
}

pub struct PathSettings {
    pub model: ModelSpec,
    pub size: usize,
    pub path: PathSpec,
    pub dgamma: Complex64,
    pub mode: Strictness,
    pub out: PathBuf,
}

pub const PATH_KEYS: &[&str] = &["L", "path.im", "path.re-range", "path.points", "dgamma", "mode", "out"];

pub fn path_settings(s: &Settings) -> Result<PathSettings, CliError> {
    s.check_known(PATH_KEYS)?;
    let model = model_spec(s)?;
    let re_range = match s.f64_list("path.re-range", Some(2))? {
        Some(r) => (r[0], r[1]),
        None => {
            let w = default_window(model.kind());
            (w.re_min, w.re_max)
        }
    };
    if re_range.0 >= re_range.1 {
        return Err(CliError::config("path.re-range", "expected lo < hi"));
    }
    let n_points = s.usize("path.points")?.unwrap_or(3001);
    if n_points < 2 {
        return Err(CliError::config("path.points", "a path needs at least 2 points"));
    }
    Ok(PathSettings {
        model,
        size: size(s)?,
        path: PathSpec {
            fixed_im: s.f64("path.im")?.unwrap_or(0.0),
            re_range,
            n_points,
        },
        dgamma: dgamma(s)?,
        mode: strictness(s)?,
        out: out_dir(s)?,
    })
}

pub fn path_values(p: &PathSettings) -> Map<String, Value> {
    let mut m = Map::new();
    for (k, v) in model_values(&p.model) {
        m.insert(k.into(), v);
    }
    m.insert("L".into(), p.size.into());
    m.insert("path.im".into(), p.path.fixed_im.into());
    m.insert("path.re-range".into(), vec![p.path.re_range.0, p.path.re_range.1].into());
    m.insert("path.points".into(), p.path.n_points.into());
    m.insert("dgamma".into(), vec![p.dgamma.re, p.dgamma.im].into());
    m.insert("mode".into(), mode_name(p.mode).into());
    m.insert("out".into(), p.out.display().to_string().into());
    m
}

pub const ZEROS_KEYS: &[&str] = &["L", "scan", "out"];
pub const CONVERGE_KEYS: &[&str] = &["sizes", "out"];

pub fn sizes(s: &Settings) -> Result<Vec<usize>, CliError> {
    let list = s
        .usize_list("sizes")?
        .ok_or_else(|| CliError::config("sizes", "missing required key"))?;
    if list.is_empty() {
        return Err(CliError::config("sizes", "size list is empty"));
    }
    Ok(list)
}
