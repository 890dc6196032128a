//! Experiment configuration: flat dotted-key TOML, typed schema with exact
//! field paths in every rejection, and flag-over-file override order.
//!
//! Resolution order is defaults, then the config file, then command-line
//! flags; the manifest echoes the fully resolved result so a run is
//! reproducible from its manifest alone.

use std::fmt;
use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;
use toml::Value;

use crate::cli::CommonArgs;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config field {path}: {message}")]
    Schema { path: String, message: String },
    #[error("cannot read config file {path}: {message}")]
    ConfigRead { path: String, message: String },
    #[error("config file does not parse as TOML: {0}")]
    ConfigParse(String),
    #[error("{0}")]
    Run(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Schema { path: path.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKindTag {
    Bands,
    Thresholds,
    Flatband,
    Count,
    Ssf,
    Fit,
    Constant,
    Toroidal,
    Validate,
}

impl CommandKindTag {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandKindTag::Bands => "bands",
            CommandKindTag::Thresholds => "thresholds",
            CommandKindTag::Flatband => "flatband",
            CommandKindTag::Count => "count",
            CommandKindTag::Ssf => "ssf",
            CommandKindTag::Fit => "fit",
            CommandKindTag::Constant => "constant",
            CommandKindTag::Toroidal => "toroidal",
            CommandKindTag::Validate => "validate",
        }
    }
}

impl fmt::Display for CommandKindTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelConfig {
    pub m: f64,
    pub gamma: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub operator: String,
    pub v1: String,
    pub v1_amplitude: f64,
    pub v1_decay: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NumericsConfig {
    pub l: Vec<usize>,
    pub boundary: String,
    pub truncations: Vec<usize>,
    pub grid: usize,
    pub quad_resolution: usize,
    pub richardson: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaConfig {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub scale: String,
    pub center: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitConfig {
    pub input: Option<String>,
    pub reference: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputConfig {
    pub directory: String,
    pub formats: Vec<String>,
}

/// The fully resolved experiment configuration echoed into every manifest.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub command: String,
    pub model: ModelConfig,
    pub numerics: NumericsConfig,
    pub lambda: LambdaConfig,
    pub fit: FitConfig,
    pub output: OutputConfig,
}

impl ResolvedConfig {
    pub fn defaults(command: CommandKindTag) -> Self {
        ResolvedConfig {
            command: command.as_str().to_string(),
            model: ModelConfig {
                m: 1.0,
                gamma: 4.0,
                gamma2: 1.0,
                gamma3: 1.0,
                operator: "Hplus".to_string(),
                v1: "zero".to_string(),
                v1_amplitude: 1.0,
                v1_decay: 4.0,
            },
            numerics: NumericsConfig {
                l: vec![16],
                boundary: "periodic".to_string(),
                truncations: vec![6, 12],
                grid: 64,
                quad_resolution: 1024,
                richardson: true,
                seed: 0,
            },
            lambda: LambdaConfig {
                min: 1e-4,
                max: 1e-2,
                points: 9,
                scale: "log".to_string(),
                center: 0.0,
            },
            fit: FitConfig { input: None, reference: None },
            output: OutputConfig {
                directory: "out".to_string(),
                formats: vec!["csv".to_string(), "json".to_string()],
            },
        }
    }

    /// The lambda grid the config describes: `points` offsets spaced on the
    /// chosen scale between `min` and `max`, shifted by `center`, ascending.
    pub fn lambda_grid(&self) -> Vec<f64> {
        let lc = &self.lambda;
        if lc.points == 1 {
            return vec![lc.center + lc.min];
        }
        (0..lc.points)
            .map(|i| {
                let t = i as f64 / (lc.points - 1) as f64;
                let offset = if lc.scale == "log" {
                    (lc.min.ln() + t * (lc.max.ln() - lc.min.ln())).exp()
                } else {
                    lc.min + t * (lc.max - lc.min)
                };
                lc.center + offset
            })
            .collect()
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("model", &["m", "gamma", "gamma2", "gamma3", "operator", "v1", "v1_amplitude", "v1_decay"]),
    ("numerics", &["l", "boundary", "truncations", "grid", "quad_resolution", "richardson", "seed"]),
    ("lambda", &["min", "max", "points", "scale", "center"]),
    ("fit", &["input", "reference"]),
    ("output", &["directory", "formats"]),
];

fn f64_of(v: &Value, path: &str) -> Result<f64, CliError> {
    v.as_float()
        .or_else(|| v.as_integer().map(|i| i as f64))
        .ok_or_else(|| CliError::schema(path, "expected a number"))
}

fn usize_of(v: &Value, path: &str) -> Result<usize, CliError> {
    match v.as_integer() {
        Some(i) if i >= 0 => Ok(i as usize),
        _ => Err(CliError::schema(path, "expected a nonnegative integer")),
    }
}

fn u64_of(v: &Value, path: &str) -> Result<u64, CliError> {
    match v.as_integer() {
        Some(i) if i >= 0 => Ok(i as u64),
        _ => Err(CliError::schema(path, "expected a nonnegative integer")),
    }
}

fn bool_of(v: &Value, path: &str) -> Result<bool, CliError> {
    v.as_bool().ok_or_else(|| CliError::schema(path, "expected true or false"))
}

fn string_of(v: &Value, path: &str) -> Result<String, CliError> {
    v.as_str()
        .map(str::to_string)
        .ok_or_else(|| CliError::schema(path, "expected a string"))
}

fn usize_list_of(v: &Value, path: &str) -> Result<Vec<usize>, CliError> {
    let arr = v
        .as_array()
        .ok_or_else(|| CliError::schema(path, "expected a list of nonnegative integers"))?;
    arr.iter().map(|e| usize_of(e, path)).collect()
}

fn string_list_of(v: &Value, path: &str) -> Result<Vec<String>, CliError> {
    let arr = v
        .as_array()
        .ok_or_else(|| CliError::schema(path, "expected a list of strings"))?;
    arr.iter().map(|e| string_of(e, path)).collect()
}

/// Merges a parsed TOML document into the config, rejecting unknown keys
/// and type mismatches with the exact dotted field path.
fn merge_file(cfg: &mut ResolvedConfig, doc: &Value, command: CommandKindTag) -> Result<(), CliError> {
    let table = doc
        .as_table()
        .ok_or_else(|| CliError::schema("(root)", "config root must be a table"))?;
    for (key, value) in table {
        match key.as_str() {
            "command" => {
                let stated = string_of(value, "command")?;
                if stated != command.as_str() {
                    return Err(CliError::schema(
                        "command",
                        format!(
                            "config names command \"{stated}\" but the invoked subcommand is \"{command}\""
                        ),
                    ));
                }
            }
            section_name => {
                let known = SECTIONS
                    .iter()
                    .find(|(s, _)| *s == section_name)
                    .ok_or_else(|| CliError::schema(section_name, "unknown section"))?;
                let section = value.as_table().ok_or_else(|| {
                    CliError::schema(section_name, "expected a table of keys")
                })?;
                for (k, v) in section {
                    let path = format!("{section_name}.{k}");
                    if !known.1.contains(&k.as_str()) {
                        return Err(CliError::schema(path, "unknown key"));
                    }
                    merge_key(cfg, section_name, k, v, &path)?;
                }
            }
        }
    }
    Ok(())
}

fn merge_key(
    cfg: &mut ResolvedConfig,
    section: &str,
    key: &str,
    v: &Value,
    path: &str,
) -> Result<(), CliError> {
    match (section, key) {
        ("model", "m") => cfg.model.m = f64_of(v, path)?,
        ("model", "gamma") => cfg.model.gamma = f64_of(v, path)?,
        ("model", "gamma2") => cfg.model.gamma2 = f64_of(v, path)?,
        ("model", "gamma3") => cfg.model.gamma3 = f64_of(v, path)?,
        ("model", "operator") => cfg.model.operator = string_of(v, path)?,
        ("model", "v1") => cfg.model.v1 = string_of(v, path)?,
        ("model", "v1_amplitude") => cfg.model.v1_amplitude = f64_of(v, path)?,
        ("model", "v1_decay") => cfg.model.v1_decay = f64_of(v, path)?,
        ("numerics", "l") => cfg.numerics.l = usize_list_of(v, path)?,
        ("numerics", "boundary") => cfg.numerics.boundary = string_of(v, path)?,
        ("numerics", "truncations") => cfg.numerics.truncations = usize_list_of(v, path)?,
        ("numerics", "grid") => cfg.numerics.grid = usize_of(v, path)?,
        ("numerics", "quad_resolution") => cfg.numerics.quad_resolution = usize_of(v, path)?,
        ("numerics", "richardson") => cfg.numerics.richardson = bool_of(v, path)?,
        ("numerics", "seed") => cfg.numerics.seed = u64_of(v, path)?,
        ("lambda", "min") => cfg.lambda.min = f64_of(v, path)?,
        ("lambda", "max") => cfg.lambda.max = f64_of(v, path)?,
        ("lambda", "points") => cfg.lambda.points = usize_of(v, path)?,
        ("lambda", "scale") => cfg.lambda.scale = string_of(v, path)?,
        ("lambda", "center") => cfg.lambda.center = f64_of(v, path)?,
        ("fit", "input") => cfg.fit.input = Some(string_of(v, path)?),
        ("fit", "reference") => cfg.fit.reference = Some(f64_of(v, path)?),
        ("output", "directory") => cfg.output.directory = string_of(v, path)?,
        ("output", "formats") => cfg.output.formats = string_list_of(v, path)?,
        _ => unreachable!("key membership was checked against SECTIONS"),
    }
    Ok(())
}

fn apply_flags(cfg: &mut ResolvedConfig, a: &CommonArgs) {
    macro_rules! take {
        ($flag:expr, $slot:expr) => {
            if let Some(x) = &$flag {
                $slot = x.clone();
            }
        };
    }
    take!(a.m, cfg.model.m);
    take!(a.gamma, cfg.model.gamma);
    take!(a.gamma2, cfg.model.gamma2);
    take!(a.gamma3, cfg.model.gamma3);
    take!(a.operator, cfg.model.operator);
    take!(a.v1, cfg.model.v1);
    take!(a.v1_amplitude, cfg.model.v1_amplitude);
    take!(a.v1_decay, cfg.model.v1_decay);
    take!(a.l, cfg.numerics.l);
    take!(a.boundary, cfg.numerics.boundary);
    take!(a.truncations, cfg.numerics.truncations);
    take!(a.grid, cfg.numerics.grid);
    take!(a.quad_resolution, cfg.numerics.quad_resolution);
    take!(a.richardson, cfg.numerics.richardson);
    take!(a.seed, cfg.numerics.seed);
    take!(a.lambda_min, cfg.lambda.min);
    take!(a.lambda_max, cfg.lambda.max);
    take!(a.lambda_points, cfg.lambda.points);
    take!(a.lambda_scale, cfg.lambda.scale);
    take!(a.lambda_center, cfg.lambda.center);
    if let Some(x) = &a.input {
        cfg.fit.input = Some(x.clone());
    }
    if let Some(x) = a.reference {
        cfg.fit.reference = Some(x);
    }
    take!(a.out, cfg.output.directory);
    take!(a.formats, cfg.output.formats);
}

fn require_finite(value: f64, path: &str) -> Result<(), CliError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(CliError::schema(path, "must be finite"))
    }
}

fn validate(cfg: &ResolvedConfig, command: CommandKindTag) -> Result<(), CliError> {
    let m = &cfg.model;
    require_finite(m.m, "model.m")?;
    if m.m < 0.0 {
        return Err(CliError::schema("model.m", "mass must be nonnegative"));
    }
    require_finite(m.gamma, "model.gamma")?;
    if m.gamma <= 0.0 {
        return Err(CliError::schema("model.gamma", "decay exponent must be positive"));
    }
    for (value, path) in [
        (m.gamma2, "model.gamma2"),
        (m.gamma3, "model.gamma3"),
        (m.v1_amplitude, "model.v1_amplitude"),
    ] {
        require_finite(value, path)?;
        if value < 0.0 {
            return Err(CliError::schema(path, "amplitude must be nonnegative"));
        }
    }
    require_finite(m.v1_decay, "model.v1_decay")?;
    if m.v1_decay <= 0.0 {
        return Err(CliError::schema("model.v1_decay", "decay exponent must be positive"));
    }
    if !["H0", "Hplus", "Hminus"].contains(&m.operator.as_str()) {
        return Err(CliError::schema(
            "model.operator",
            format!("\"{}\" is not one of H0, Hplus, Hminus", m.operator),
        ));
    }
    if !["zero", "power", "point"].contains(&m.v1.as_str()) {
        return Err(CliError::schema(
            "model.v1",
            format!("\"{}\" is not one of zero, power, point", m.v1),
        ));
    }

    let n = &cfg.numerics;
    if n.l.is_empty() {
        return Err(CliError::schema("numerics.l", "at least one box side is required"));
    }
    if let Some(&bad) = n.l.iter().find(|&&l| l < 2) {
        return Err(CliError::schema(
            "numerics.l",
            format!("box side {bad} is below the minimum 2"),
        ));
    }
    if !["open", "periodic"].contains(&n.boundary.as_str()) {
        return Err(CliError::schema(
            "numerics.boundary",
            format!("\"{}\" is not one of open, periodic", n.boundary),
        ));
    }
    if n.truncations.is_empty() {
        return Err(CliError::schema("numerics.truncations", "at least one truncation is required"));
    }
    if let Some(&bad) = n.truncations.iter().find(|&&t| t < 4) {
        return Err(CliError::schema(
            "numerics.truncations",
            format!("truncation {bad} is below the minimum 4"),
        ));
    }
    if n.grid < 2 {
        return Err(CliError::schema("numerics.grid", "grid resolution must be at least 2"));
    }
    if n.quad_resolution < 16 {
        return Err(CliError::schema(
            "numerics.quad_resolution",
            "quadrature resolution must be at least 16",
        ));
    }

    let lc = &cfg.lambda;
    require_finite(lc.min, "lambda.min")?;
    require_finite(lc.max, "lambda.max")?;
    require_finite(lc.center, "lambda.center")?;
    if lc.points == 0 {
        return Err(CliError::schema("lambda.points", "at least one grid point is required"));
    }
    if lc.points > 1 && !(lc.min < lc.max) {
        return Err(CliError::schema("lambda.min", "min must be strictly below max"));
    }
    if !["log", "linear"].contains(&lc.scale.as_str()) {
        return Err(CliError::schema(
            "lambda.scale",
            format!("\"{}\" is not one of log, linear", lc.scale),
        ));
    }
    if lc.scale == "log" && lc.min <= 0.0 {
        return Err(CliError::schema("lambda.min", "log spacing requires a positive minimum"));
    }

    let o = &cfg.output;
    if o.formats.is_empty() {
        return Err(CliError::schema("output.formats", "at least one format is required"));
    }
    if let Some(bad) = o.formats.iter().find(|f| !["csv", "json"].contains(&f.as_str())) {
        return Err(CliError::schema(
            "output.formats",
            format!("\"{bad}\" is not one of csv, json"),
        ));
    }
    if o.directory.is_empty() {
        return Err(CliError::schema("output.directory", "must not be empty"));
    }

    // command-specific hypotheses
    match command {
        CommandKindTag::Constant | CommandKindTag::Toroidal => {
            if !(m.gamma > 2.0) {
                return Err(CliError::schema(
                    "model.gamma",
                    format!(
                        "gamma = {} is outside the regime of the asymptotic counting law \
                         (the constants require decay gamma > 2)",
                        m.gamma
                    ),
                ));
            }
        }
        _ => {}
    }
    match command {
        CommandKindTag::Toroidal => {
            let max_m = *n.truncations.iter().max().expect("nonempty checked above");
            let need = 8 * max_m + 4;
            if n.grid < need {
                return Err(CliError::schema(
                    "numerics.grid",
                    format!(
                        "resolution {} cannot resolve truncation {max_m} (needs at least {need})",
                        n.grid
                    ),
                ));
            }
            if lc.center != 0.0 {
                return Err(CliError::schema(
                    "lambda.center",
                    "toroidal counting levels are absolute; center must be 0",
                ));
            }
            if lc.min <= 1e-12 {
                return Err(CliError::schema(
                    "lambda.min",
                    "counting levels must exceed 1e-12",
                ));
            }
        }
        CommandKindTag::Ssf => {
            if m.operator == "H0" {
                return Err(CliError::schema(
                    "model.operator",
                    "the shift proxy compares a perturbed operator against the free one; \
                     choose Hplus or Hminus",
                ));
            }
        }
        CommandKindTag::Fit => {
            if cfg.fit.input.is_none() {
                return Err(CliError::schema("fit.input", "a series file is required"));
            }
        }
        _ => {}
    }
    Ok(())
}

/// Builds the resolved config for one invocation: defaults, then the file
/// behind `--config` (if any), then flag overrides, then schema validation.
pub fn resolve(command: CommandKindTag, args: &CommonArgs) -> Result<ResolvedConfig, CliError> {
    let mut cfg = ResolvedConfig::defaults(command);
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::ConfigRead {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let doc: Value = text.parse().map_err(|e: toml::de::Error| {
            CliError::ConfigParse(e.message().to_string())
        })?;
        merge_file(&mut cfg, &doc, command)?;
    }
    apply_flags(&mut cfg, args);
    validate(&cfg, command)?;
    Ok(cfg)
}

/// Output directory before config resolution, for failure manifests:
/// the `--out` flag if present, else the default, both under the
/// `DIRAC2D_OUTPUT_ROOT` environment variable when it is set.
pub fn outdir_hint(args: &CommonArgs) -> PathBuf {
    rooted_outdir(args.out.as_deref().unwrap_or("out"))
}

pub fn rooted_outdir(directory: &str) -> PathBuf {
    let dir = PathBuf::from(directory);
    match std::env::var_os("DIRAC2D_OUTPUT_ROOT") {
        Some(root) if !dir.is_absolute() => PathBuf::from(root).join(dir),
        _ => dir,
    }
}
