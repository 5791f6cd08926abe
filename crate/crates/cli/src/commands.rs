use std::path::Path;
use std::sync::Arc;

use serde::Serialize;
use unispread::criterion::{GrowthMode, GrowthOptions};
use unispread::geometry::{format_point_file, parse_point_file};
use unispread::{
    bottleneck_distance, cesaro_average, generate, growth_analysis, lattice_displacement, lebesgue_distance,
    shift_bijection, shift_sweep, verify_chain, GeneratorSpec, GridMeasure, Measure, MeasureRef, Point,
    PointConfiguration, ShiftGrid,
};

use crate::options::{header_dim, read, Options};
use crate::CliError;

/// What a command hands back: the JSON report plus the summary numbers.
pub struct Outcome {
    pub report: serde_json::Value,
    pub value: f64,
    pub error_bound: f64,
    pub note: Option<String>,
    /// Extra artifact (path, contents), e.g. the growth CSV.
    pub extra: Option<(std::path::PathBuf, String)>,
    /// Raw text written instead of a JSON envelope (point files from `gen`).
    pub raw: Option<String>,
}

impl Outcome {
    fn new<T: Serialize>(report: &T, value: f64, error_bound: f64) -> Result<Outcome, CliError> {
        Ok(Outcome {
            report: serde_json::to_value(report).map_err(unispread::Error::from)?,
            value,
            error_bound,
            note: None,
            extra: None,
            raw: None,
        })
    }
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "json")
}

fn load_points(path: &Path, opts: &Options) -> Result<PointConfiguration, CliError> {
    let text = read(path)?;
    let dim = header_dim(&text).unwrap_or(1);
    let window = opts.window(dim)?;
    parse_point_file(&text, &window).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn load_measure(path: &Path, opts: &Options) -> Result<Measure, CliError> {
    if is_json(path) {
        let grid = GridMeasure::from_json(&read(path)?)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        Ok(Measure::Grid(grid.subdivide(
            opts.s.unwrap_or(1),
            unispread::bottleneck::DEFAULT_REFINE_CAP,
        )?))
    } else {
        Ok(Measure::Points(load_points(path, opts)?))
    }
}

/// The single configuration a criterion command works on.
fn configuration(opts: &Options) -> Result<PointConfiguration, CliError> {
    if let Some(spec) = opts.generator_spec()? {
        if !opts.inputs.is_empty() {
            return Err(CliError::Validation("give either INPUT or --spec, not both".into()));
        }
        return Ok(generate(&spec)?);
    }
    match opts.inputs.as_slice() {
        [path] => load_points(path, opts),
        [] => Err(CliError::Validation("expected one point file or --spec".into())),
        more => Err(CliError::Validation(format!(
            "expected one point file, got {}",
            more.len()
        ))),
    }
}

fn shift_grid(opts: &Options) -> Result<ShiftGrid, CliError> {
    Ok(match &opts.shift_grid {
        Some(s) => s.parse()?,
        None => ShiftGrid::default(),
    })
}

#[derive(Serialize)]
struct GenReport<'a> {
    spec: &'a GeneratorSpec,
    points: Vec<&'a [f64]>,
    masses: &'a [u64],
}

pub fn gen(opts: &Options) -> Result<Outcome, CliError> {
    let spec = opts
        .generator_spec()?
        .ok_or_else(|| CliError::Validation("gen needs --spec or --kind".into()))?;
    let config = generate(&spec)?;
    let report = GenReport {
        spec: &spec,
        points: config.points().iter().map(|p| p.coords()).collect(),
        masses: config.masses(),
    };
    let mut out = Outcome::new(&report, config.len() as f64, 0.0)?;
    out.note = Some(format!("{} points", config.len()));
    match opts.format.as_deref() {
        None | Some("points") => out.raw = Some(format_point_file(&config)),
        Some("json") => {}
        Some(other) => {
            return Err(CliError::Validation(format!(
                "--format must be points or json, got `{other}`"
            )))
        }
    }
    Ok(out)
}

pub fn dist(opts: &Options) -> Result<Outcome, CliError> {
    let [a, b] = opts.inputs.as_slice() else {
        return Err(CliError::Validation(format!(
            "dist expects two inputs, got {}",
            opts.inputs.len()
        )));
    };
    let source: MeasureRef = Arc::new(load_measure(a, opts)?);
    let target: MeasureRef = Arc::new(load_measure(b, opts)?);
    let r = bottleneck_distance(&source, &target)?;
    Outcome::new(&r, r.value, r.error_bound)
}

pub fn lattice_dist(opts: &Options) -> Result<Outcome, CliError> {
    let config = configuration(opts)?;
    let r = lattice_displacement(&config, opts.alpha.unwrap_or(1.0))?;
    Outcome::new(&r, r.value, r.error_bound)
}

pub fn lebesgue_dist(opts: &Options) -> Result<Outcome, CliError> {
    let config = configuration(opts)?;
    let r = lebesgue_distance(&config, opts.beta, opts.h.unwrap_or(1.0), opts.s.unwrap_or(1))?;
    Outcome::new(&r, r.value, r.error_bound)
}

pub fn shift_sweep_cmd(opts: &Options) -> Result<Outcome, CliError> {
    let config = configuration(opts)?;
    let r = shift_sweep(&config, &shift_grid(opts)?)?;
    let mut out = Outcome::new(&r, r.empirical_c3, 0.0)?;
    out.note = r.certified_sup.map(|c| format!("certified_sup={c}"));
    Ok(out)
}

pub fn cesaro(opts: &Options) -> Result<Outcome, CliError> {
    let config = configuration(opts)?;
    let k = opts.k.clone().unwrap_or_else(|| vec![0; config.dim()]);
    let r = cesaro_average(&config, &k, opts.n.unwrap_or(1))?;
    let mut out = Outcome::new(&r, r.distance.value, r.distance.error_bound)?;
    out.note = Some(format!("spread={} bound_holds={}", r.spread, r.bound_holds));
    Ok(out)
}

pub fn bijection(opts: &Options) -> Result<Outcome, CliError> {
    let config = configuration(opts)?;
    let z = Point::new(
        opts.z
            .clone()
            .ok_or_else(|| CliError::Validation("bijection needs --z".into()))?,
    );
    let r = shift_bijection(&config, &z)?;
    let mut out = Outcome::new(&r, r.c7, 0.0)?;
    out.note = Some(format!("bijection={}", r.is_bijection));
    Ok(out)
}

pub fn growth(opts: &Options) -> Result<Outcome, CliError> {
    let spec = opts
        .generator_spec()?
        .ok_or_else(|| CliError::Validation("growth needs --spec or --kind".into()))?;
    let sides = opts.sides.clone().unwrap_or_else(|| vec![8.0, 16.0, 32.0]);
    let mut options = GrowthOptions {
        beta: opts.beta,
        ..GrowthOptions::default()
    };
    options.mode = match opts.mode.as_deref() {
        None | Some("lebesgue") => GrowthMode::Lebesgue {
            h: opts.h.unwrap_or(1.0),
            s: opts.s.unwrap_or(1),
        },
        Some("shift") => GrowthMode::Shift {
            grid: opts.shift_grid.clone().unwrap_or_else(|| "quarter+integer".into()),
        },
        Some(other) => {
            return Err(CliError::Validation(format!(
                "--mode must be lebesgue or shift, got `{other}`"
            )))
        }
    };
    if let Some(t) = opts.slope_threshold {
        options.slope_threshold = t;
    }
    if let Some(t) = opts.ratio_threshold {
        options.ratio_threshold = t;
    }
    let r = growth_analysis(&spec, &sides, &options)?;
    let last = r.entries.last().expect("at least three windows");
    let mut out = Outcome::new(&r, last.value, last.error_bound)?;
    out.note = Some(format!(
        "slope={} classification={}",
        r.slope,
        out.report["classification"].as_str().unwrap_or("")
    ));
    let csv_path = opts
        .csv
        .clone()
        .or_else(|| opts.out.as_ref().map(|p| p.with_extension("csv")));
    out.extra = csv_path.map(|p| (p, r.to_csv()));
    Ok(out)
}

pub fn verify_chain_cmd(opts: &Options) -> Result<Outcome, CliError> {
    let config = configuration(opts)?;
    let r = verify_chain(&config, opts.alpha.unwrap_or(1.0), opts.s.unwrap_or(1))?;
    let mut out = Outcome::new(&r, r.d_leb.value, r.d_leb.error_bound)?;
    out.note = Some(format!(
        "d_lat={} constructive_holds={}",
        r.d_lat.value, r.constructive_holds
    ));
    Ok(out)
}
