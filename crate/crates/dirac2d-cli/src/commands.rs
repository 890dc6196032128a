//! Execution of the resolved experiments.  Each command returns the files
//! it wrote plus any numeric warnings; the caller turns those into the
//! manifest and the exit code.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use dirac2d::counting::{counting_series, finite_volume_ssf, fit_power_law, flat_band_multiplicity};
use dirac2d::fiber::{band_values, classify_thresholds};
use dirac2d::lattice::{build_lattice, Boundary, ComponentSpec, Potential, Sign};
use dirac2d::levelset::{asymptotic_constant_c, asymptotic_constants, ConstantQuadSpec};
use dirac2d::series::CountingSeries;
use dirac2d::toroidal::{
    flat_band_multipliers, verify_counting_asymptotics, DiscreteSymbol, ToroidalComponent,
};

use crate::config::{CliError, CommandKindTag, ResolvedConfig};

#[derive(Debug, Default)]
pub struct RunOutput {
    pub files: Vec<String>,
    pub warnings: Vec<String>,
    pub summary: String,
}

impl RunOutput {
    fn file(&mut self, name: impl Into<String>) {
        self.files.push(name.into());
    }
}

/// Writes `body` to `dir/name` only when `format` is among the requested
/// output formats.
fn emit(
    out: &mut RunOutput,
    cfg: &ResolvedConfig,
    dir: &Path,
    name: &str,
    format: &str,
    body: &str,
) -> Result<(), CliError> {
    if !cfg.output.formats.iter().any(|f| f == format) {
        return Ok(());
    }
    std::fs::write(dir.join(name), body)?;
    out.file(name);
    Ok(())
}

fn emit_json(
    out: &mut RunOutput,
    cfg: &ResolvedConfig,
    dir: &Path,
    name: &str,
    value: &impl Serialize,
) -> Result<(), CliError> {
    let mut body = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Run(format!("json serialization failed: {e}")))?;
    body.push('\n');
    emit(out, cfg, dir, name, "json", &body)
}

fn boundary_of(cfg: &ResolvedConfig) -> Boundary {
    match cfg.numerics.boundary.as_str() {
        "open" => Boundary::Open,
        _ => Boundary::Periodic,
    }
}

fn sign_of(cfg: &ResolvedConfig) -> Sign {
    match cfg.model.operator.as_str() {
        "Hminus" => Sign::Minus,
        _ => Sign::Plus,
    }
}

/// The diagonal perturbation described by the model section: v1 on
/// vertices per the configured shape, power-decay v2/v3 with amplitudes
/// Gamma2/Gamma3.
fn potential_of(cfg: &ResolvedConfig) -> Potential {
    let m = &cfg.model;
    let v1 = match m.v1.as_str() {
        "power" => ComponentSpec::PowerDecay { amplitude: m.v1_amplitude, decay: m.v1_decay },
        "point" => {
            let mut t = BTreeMap::new();
            t.insert((0i64, 0i64), m.v1_amplitude);
            ComponentSpec::Table(t)
        }
        _ => ComponentSpec::Zero,
    };
    Potential::new(
        v1,
        ComponentSpec::PowerDecay { amplitude: m.gamma2, decay: m.gamma },
        ComponentSpec::PowerDecay { amplitude: m.gamma3, decay: m.gamma },
    )
}

/// Shortest round-trip float formatting, matching the series CSV codec.
fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

pub fn execute(
    command: CommandKindTag,
    cfg: &ResolvedConfig,
    dir: &Path,
) -> Result<RunOutput, CliError> {
    std::fs::create_dir_all(dir)?;
    match command {
        CommandKindTag::Bands => run_bands(cfg, dir),
        CommandKindTag::Thresholds => run_thresholds(cfg, dir),
        CommandKindTag::Flatband => run_flatband(cfg, dir),
        CommandKindTag::Count => run_series(cfg, dir, false),
        CommandKindTag::Ssf => run_series(cfg, dir, true),
        CommandKindTag::Fit => run_fit(cfg, dir),
        CommandKindTag::Constant => run_constant(cfg, dir),
        CommandKindTag::Toroidal => run_toroidal(cfg, dir),
        CommandKindTag::Validate => Ok(RunOutput {
            files: Vec::new(),
            warnings: Vec::new(),
            summary: "config valid".to_string(),
        }),
    }
}

fn run_bands(cfg: &ResolvedConfig, dir: &Path) -> Result<RunOutput, CliError> {
    let mut out = RunOutput::default();
    let n = cfg.numerics.grid;
    let m = cfg.model.m;
    let mut csv = String::new();
    let _ = writeln!(csv, "# band values of the free operator at mass m = {}", fmt_f64(m));
    let _ = writeln!(csv, "# {n} x {n} uniform grid on the torus, xi in [0,1)^2");
    csv.push_str("xi1,xi2,z_minus,z_zero,z_plus\n");
    let mut rows = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let xi = [i as f64 / n as f64, j as f64 / n as f64];
            let b = band_values(xi, m);
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                fmt_f64(xi[0]),
                fmt_f64(xi[1]),
                fmt_f64(b.z_minus),
                fmt_f64(b.z_zero),
                fmt_f64(b.z_plus)
            );
            rows.push([xi[0], xi[1], b.z_minus, b.z_zero, b.z_plus]);
        }
    }
    emit(&mut out, cfg, dir, "bands.csv", "csv", &csv)?;
    emit_json(
        &mut out,
        cfg,
        dir,
        "bands.json",
        &json!({
            "m": m,
            "grid": n,
            "columns": ["xi1", "xi2", "z_minus", "z_zero", "z_plus"],
            "rows": rows,
        }),
    )?;
    out.summary = format!("sampled {} momenta", n * n);
    Ok(out)
}

fn run_thresholds(cfg: &ResolvedConfig, dir: &Path) -> Result<RunOutput, CliError> {
    let mut out = RunOutput::default();
    let m = cfg.model.m;
    let set = classify_thresholds(m).map_err(|e| CliError::Run(e.to_string()))?;
    let mut csv = String::new();
    let _ = writeln!(csv, "# spectral thresholds at mass m = {}", fmt_f64(m));
    csv.push_str("value,kind\n");
    for t in &set.thresholds {
        let kind = serde_json::to_value(t.kind)
            .map_err(|e| CliError::Run(e.to_string()))?
            .as_str()
            .expect("threshold kinds serialize as strings")
            .to_string();
        let _ = writeln!(csv, "{},{kind}", fmt_f64(t.value));
    }
    emit(&mut out, cfg, dir, "thresholds.csv", "csv", &csv)?;
    emit_json(&mut out, cfg, dir, "thresholds.json", &json!({ "m": m, "thresholds": set }))?;
    out.summary = format!("{} thresholds", set.thresholds.len());
    Ok(out)
}

fn run_flatband(cfg: &ResolvedConfig, dir: &Path) -> Result<RunOutput, CliError> {
    let mut out = RunOutput::default();
    let m = cfg.model.m;
    let boundary = boundary_of(cfg);
    let mut csv = String::new();
    let _ = writeln!(csv, "# flat-band multiplicity of the free operator at mass m = {}", fmt_f64(m));
    csv.push_str("L,boundary,m,multiplicity\n");
    let mut rows = Vec::new();
    for &l in &cfg.numerics.l {
        let boxx = build_lattice(l, boundary).map_err(|e| CliError::Run(e.to_string()))?;
        let mult = flat_band_multiplicity(&boxx, m).map_err(|e| CliError::Run(e.to_string()))?;
        let _ = writeln!(csv, "{l},{},{},{mult}", cfg.numerics.boundary, fmt_f64(m));
        rows.push(json!({
            "l": l,
            "boundary": cfg.numerics.boundary,
            "m": m,
            "multiplicity": mult,
        }));
    }
    emit(&mut out, cfg, dir, "flatband.csv", "csv", &csv)?;
    emit_json(&mut out, cfg, dir, "flatband.json", &json!({ "rows": rows }))?;
    out.summary = format!("{} box sizes", cfg.numerics.l.len());
    Ok(out)
}

fn series_files(
    out: &mut RunOutput,
    cfg: &ResolvedConfig,
    dir: &Path,
    stem: &str,
    series: &CountingSeries,
    preamble: &str,
) -> Result<(), CliError> {
    let mut csv = String::new();
    for line in preamble.lines() {
        let _ = writeln!(csv, "# {line}");
    }
    csv.push_str(&series.to_csv_string());
    emit(out, cfg, dir, &format!("{stem}.csv"), "csv", &csv)?;
    emit_json(out, cfg, dir, &format!("{stem}.json"), series)?;
    Ok(())
}

fn run_series(cfg: &ResolvedConfig, dir: &Path, ssf: bool) -> Result<RunOutput, CliError> {
    let mut out = RunOutput::default();
    let m = cfg.model.m;
    let boundary = boundary_of(cfg);
    let sign = sign_of(cfg);
    let grid = cfg.lambda_grid();
    let potential = potential_of(cfg);
    potential.validate().map_err(|e| CliError::Run(e.to_string()))?;
    let free = cfg.model.operator == "H0";
    for &l in &cfg.numerics.l {
        let boxx = build_lattice(l, boundary).map_err(|e| CliError::Run(e.to_string()))?;
        let (stem, series) = if ssf {
            let series = finite_volume_ssf(&boxx, m, &potential, sign, &grid)
                .map_err(|e| CliError::Run(e.to_string()))?;
            (format!("ssf_L{l}"), series)
        } else {
            let series = counting_series(
                &boxx,
                m,
                if free { None } else { Some(&potential) },
                sign,
                &grid,
            )
            .map_err(|e| CliError::Run(e.to_string()))?;
            (format!("counts_L{l}"), series)
        };
        let preamble = if ssf {
            format!(
                "eigenvalue-count difference free minus {} on the {l} x {l} {} box",
                cfg.model.operator, cfg.numerics.boundary
            )
        } else {
            format!(
                "eigenvalues of {} between lambda and the band edge on the {l} x {l} {} box",
                cfg.model.operator, cfg.numerics.boundary
            )
        };
        series_files(&mut out, cfg, dir, &stem, &series, &preamble)?;
    }
    out.summary = format!(
        "{} box sizes, {} lambda points each",
        cfg.numerics.l.len(),
        grid.len()
    );
    Ok(out)
}

fn run_fit(cfg: &ResolvedConfig, dir: &Path) -> Result<RunOutput, CliError> {
    let mut out = RunOutput::default();
    let input = cfg.fit.input.as_deref().expect("schema requires fit.input");
    let text = std::fs::read_to_string(input)
        .map_err(|e| CliError::Run(format!("cannot read series {input}: {e}")))?;
    let series =
        CountingSeries::from_csv_str(&text).map_err(|e| CliError::Run(e.to_string()))?;
    let reference = cfg.fit.reference.unwrap_or(-cfg.model.m);
    let fit = fit_power_law(&series, reference).map_err(|e| CliError::Run(e.to_string()))?;
    // the stored model parameters predict the asymptotic law when the
    // series carries a power-decay potential in the valid regime
    let (predicted_exponent, predicted_constant) = match (
        series.meta.gamma,
        series.meta.gamma2,
        series.meta.gamma3,
    ) {
        (Some(g), Some(g2), Some(g3)) if g > 2.0 => {
            let spec = ConstantQuadSpec {
                resolution: cfg.numerics.quad_resolution,
                richardson: cfg.numerics.richardson,
            };
            let c = asymptotic_constant_c(g, g2, g3, &spec)
                .map_err(|e| CliError::Run(e.to_string()))?;
            (Some(2.0 / g), Some(c))
        }
        _ => (None, None),
    };
    if fit.residual > 0.5 {
        out.warnings.push(format!(
            "fit residual {:.3} is large; the series may not follow a power law",
            fit.residual
        ));
    }
    emit_json(
        &mut out,
        cfg,
        dir,
        "fit.json",
        &json!({
            "input": input,
            "reference": reference,
            "fit": fit,
            "predicted_exponent": predicted_exponent,
            "predicted_constant": predicted_constant,
        }),
    )?;
    let mut csv = String::new();
    csv.push_str("exponent,constant,residual,window_min,window_max,points_used\n");
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{}",
        fmt_f64(fit.exponent),
        fmt_f64(fit.constant),
        fmt_f64(fit.residual),
        fmt_f64(fit.window.0),
        fmt_f64(fit.window.1),
        fit.points_used
    );
    emit(&mut out, cfg, dir, "fit.csv", "csv", &csv)?;
    out.summary = format!(
        "exponent {:.4}, constant {:.4} from {} points",
        fit.exponent, fit.constant, fit.points_used
    );
    Ok(out)
}

fn run_constant(cfg: &ResolvedConfig, dir: &Path) -> Result<RunOutput, CliError> {
    let mut out = RunOutput::default();
    let spec = ConstantQuadSpec {
        resolution: cfg.numerics.quad_resolution,
        richardson: cfg.numerics.richardson,
    };
    let constants =
        asymptotic_constants(cfg.model.gamma, cfg.model.gamma2, cfg.model.gamma3, &spec)
            .map_err(|e| CliError::Run(e.to_string()))?;
    emit_json(&mut out, cfg, dir, "constants.json", &constants)?;
    let mut csv = String::new();
    csv.push_str("gamma,Gamma2,Gamma3,c_value,c_plus,c_minus\n");
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{}",
        fmt_f64(constants.gamma),
        fmt_f64(constants.gamma2),
        fmt_f64(constants.gamma3),
        fmt_f64(constants.c_value),
        fmt_f64(constants.c_plus),
        fmt_f64(constants.c_minus)
    );
    emit(&mut out, cfg, dir, "constants.csv", "csv", &csv)?;
    out.summary = format!("C = {:.12}", constants.c_value);
    Ok(out)
}

fn run_toroidal(cfg: &ResolvedConfig, dir: &Path) -> Result<RunOutput, CliError> {
    let mut out = RunOutput::default();
    let gamma = cfg.model.gamma;
    let (b1, b2) = flat_band_multipliers(cfg.numerics.grid);
    let components = vec![
        ToroidalComponent {
            multiplier: b1,
            symbol: DiscreteSymbol::power_decay(2, cfg.model.gamma2, gamma),
        },
        ToroidalComponent {
            multiplier: b2,
            symbol: DiscreteSymbol::power_decay(2, cfg.model.gamma3, gamma),
        },
    ];
    let window = cfg.lambda_grid();
    let report =
        verify_counting_asymptotics(&components, &cfg.numerics.truncations, &window, gamma, 2)
            .map_err(|e| CliError::Run(e.to_string()))?;
    if !report.deviation_nonincreasing {
        out.warnings.push(
            "scaled-count deviation did not improve along the truncation list".to_string(),
        );
    }
    let lambda_min = window.iter().cloned().fold(f64::INFINITY, f64::min);
    if let Some(worst) = report
        .summaries
        .iter()
        .max_by_key(|s| s.truncation)
        .filter(|s| s.tail_bound > 0.5 * lambda_min)
    {
        out.warnings.push(format!(
            "truncation tail bound {:.3e} at M = {} is comparable to the smallest counting \
             level {:.3e}",
            worst.tail_bound, worst.truncation, lambda_min
        ));
    }
    emit_json(&mut out, cfg, dir, "toroidal.json", &report)?;
    let mut csv = String::new();
    let _ = writeln!(csv, "# scaled eigenvalue counts of the truncated toroidal operator");
    let _ = writeln!(csv, "# targets: C_B+ = {}, C_B- = {}", report.target_plus, report.target_minus);
    csv.push_str("M,lambda,n_plus,n_minus,scaled_plus,scaled_minus\n");
    for s in &report.samples {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            s.truncation,
            fmt_f64(s.lambda),
            s.n_plus,
            s.n_minus,
            fmt_f64(s.scaled_plus),
            fmt_f64(s.scaled_minus)
        );
    }
    emit(&mut out, cfg, dir, "toroidal.csv", "csv", &csv)?;
    let last = report.summaries.last().expect("at least one truncation");
    out.summary = format!(
        "median scaled count {:.4} against {:.4} at M = {}",
        last.median_scaled_plus, report.target_plus, last.truncation
    );
    Ok(out)
}
