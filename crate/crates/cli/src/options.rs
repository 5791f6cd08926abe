use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;
use unispread::generators::GeneratorKind;
use unispread::{Boundary, GeneratorSpec, Window};

use crate::CliError;

/// A generator spec given inline (`{...}`) or as a path to a JSON file.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SpecArg {
    Inline(GeneratorSpec),
    Path(PathBuf),
}

fn parse_spec_arg(s: &str) -> Result<SpecArg, String> {
    if s.trim_start().starts_with('{') {
        serde_json::from_str(s)
            .map(SpecArg::Inline)
            .map_err(|e| format!("inline spec: {e}"))
    } else {
        Ok(SpecArg::Path(PathBuf::from(s)))
    }
}

fn parse_kind(s: &str) -> Result<GeneratorKind, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_")))
        .map_err(|_| format!("unknown generator kind `{s}` (lattice, perturbed, poisson, fibonacci, density_defect)"))
}

fn parse_boundary(s: &str) -> Result<Boundary, String> {
    s.parse().map_err(|e: unispread::Error| e.to_string())
}

/// Every knob of a run. Flags fill it; a `--config` JSON file with the same
/// (kebab-case) keys overrides whatever it sets.
#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Options {
    /// Point files (`dim d` header), or grid JSON files ending in `.json`.
    #[arg(value_name = "INPUT")]
    pub inputs: Vec<PathBuf>,

    /// Generator spec: a JSON file path or inline JSON. Replaces INPUT.
    #[arg(long, value_parser = parse_spec_arg)]
    pub spec: Option<SpecArg>,

    /// Window as `lo,L`: the cube [lo, lo + L)^d.
    #[arg(long)]
    pub window: Option<String>,

    #[arg(long, value_parser = parse_boundary)]
    pub boundary: Option<Boundary>,

    /// Dimension for `gen` without a spec.
    #[arg(long)]
    pub dim: Option<usize>,

    /// Generator family for `gen` without a spec.
    #[arg(long, value_parser = parse_kind)]
    pub kind: Option<GeneratorKind>,

    #[arg(long)]
    pub alpha: Option<f64>,

    /// Density of the comparison measure (default: total mass / volume).
    #[arg(long)]
    pub beta: Option<f64>,

    /// Grid cell side.
    #[arg(long)]
    pub h: Option<f64>,

    /// Subdivisions per cell axis.
    #[arg(long)]
    pub s: Option<usize>,

    #[arg(long)]
    pub epsilon: Option<f64>,

    #[arg(long)]
    pub intensity: Option<f64>,

    /// Two densities for density_defect, e.g. `1,2`.
    #[arg(long, value_delimiter = ',')]
    pub densities: Option<Vec<f64>>,

    /// `quarter`, `integer`, `quarter+integer`, `window-quarters`,
    /// `full:<step>`, or explicit shifts `0.5,0;1,1`.
    #[arg(long)]
    pub shift_grid: Option<String>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Center of the Cesaro box, e.g. `0,0`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub k: Option<Vec<i64>>,

    /// Half-width of the Cesaro box.
    #[arg(long)]
    pub n: Option<u32>,

    /// Shift vector for `bijection`, e.g. `0.5,-1`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub z: Option<Vec<f64>>,

    /// Window sides for `growth`, e.g. `8,16,32`.
    #[arg(long, value_delimiter = ',')]
    pub sides: Option<Vec<f64>>,

    /// Growth measurement: `lebesgue` or `shift`.
    #[arg(long)]
    pub mode: Option<String>,

    #[arg(long)]
    pub slope_threshold: Option<f64>,

    #[arg(long)]
    pub ratio_threshold: Option<f64>,

    /// Report path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// CSV path for `growth` (default: the report path with a `.csv` extension).
    #[arg(long)]
    pub csv: Option<PathBuf>,

    /// Output of `gen`: `points` (point file) or `json`.
    #[arg(long)]
    pub format: Option<String>,

    /// Omit the timestamp and wall time so reports compare byte for byte.
    #[arg(long)]
    pub canonical: bool,

    /// JSON run configuration overriding the flags it sets.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Command named in a config file; must match the subcommand.
    #[arg(skip)]
    pub command: Option<String>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),*) => {
        $(if $top.$field.is_some() { $base.$field = $top.$field; })*
    };
}

impl Options {
    /// Applies `--config`, if given.
    pub fn resolve(mut self, command: &str) -> Result<Options, CliError> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = read(&path)?;
        let top: Options =
            serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        if let Some(c) = &top.command {
            if c != command {
                return Err(CliError::Validation(format!(
                    "{}: config is for command `{c}`, not `{command}`",
                    path.display()
                )));
            }
        }
        if !top.inputs.is_empty() {
            self.inputs = top.inputs.clone();
        }
        self.canonical |= top.canonical;
        overlay!(self, top; spec, window, boundary, dim, kind, alpha, beta, h, s, epsilon, intensity,
            densities, shift_grid, seed, k, n, z, sides, mode, slope_threshold, ratio_threshold, out, csv, format);
        Ok(self)
    }

    pub fn window(&self, dim: usize) -> Result<Window, CliError> {
        let Some(text) = &self.window else {
            return Err(CliError::Validation("--window lo,L is required".into()));
        };
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        let nums: Option<Vec<f64>> = parts.iter().map(|p| p.parse().ok()).collect();
        match nums.as_deref() {
            Some(&[lo, side]) => Ok(Window::cube(dim, lo, side, self.boundary.unwrap_or_default())?),
            _ => Err(CliError::Validation(format!("--window expects `lo,L`, got `{text}`"))),
        }
    }

    /// The generator spec from `--spec` or the individual flags, with
    /// `--seed` and `--window` applied on top.
    pub fn generator_spec(&self) -> Result<Option<GeneratorSpec>, CliError> {
        let mut spec = match &self.spec {
            Some(SpecArg::Inline(s)) => s.clone(),
            Some(SpecArg::Path(p)) => {
                serde_json::from_str(&read(p)?).map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?
            }
            None => {
                let Some(kind) = self.kind else { return Ok(None) };
                let dim = self.dim.unwrap_or(1);
                let mut spec = GeneratorSpec::new(kind, self.window(dim)?);
                if let Some(a) = self.alpha {
                    spec.alpha = a;
                }
                if let Some(e) = self.epsilon {
                    spec.epsilon = e;
                }
                if let Some(i) = self.intensity {
                    spec.intensity = i;
                }
                if let Some(d) = &self.densities {
                    spec.densities = <[f64; 2]>::try_from(d.as_slice())
                        .map_err(|_| CliError::Validation("--densities expects two values".into()))?;
                }
                spec
            }
        };
        if let Some(seed) = self.seed {
            spec.seed = seed;
        }
        if self.window.is_some() {
            spec.window = self.window(spec.window.dim())?;
        } else if let Some(b) = self.boundary {
            spec.window = Window::new(spec.window.lower().to_vec(), spec.window.side(), b)?;
        }
        spec.validate()?;
        Ok(Some(spec))
    }
}

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Dimension announced by a point file's `dim d` header, if readable.
pub fn header_dim(text: &str) -> Option<usize> {
    let line = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .find(|l| !l.is_empty())?;
    match line.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["dim", d] => d.parse().ok(),
        _ => None,
    }
}
