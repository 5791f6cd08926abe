//! The shift criterion and the experiments built around it.
//!
//! Everything here runs on torus windows unless stated otherwise, so that a
//! configuration and its translates carry the same mass.

use std::collections::BTreeSet;
use std::str::FromStr;
use std::sync::Arc;

use num_integer::Integer;
use rayon::prelude::*;
use serde::Serialize;

use crate::bottleneck::{bottleneck_distance, point_to_grid_distance, DistanceResult};
use crate::error::{Error, Result};
use crate::generators::{generate, GeneratorSpec};
use crate::geometry::{cartesian, make_lattice, restrict, shift, GridMeasure, Point, PointConfiguration, Window};
use crate::quantum::Quantum;
use crate::transport::{average_plans, compose, product_plan_to_cells, Measure, MeasureRef, TransportPlan};
use crate::SCHEMA_VERSION;

/// Largest refinement of the mass quantum accepted when splitting the total
/// mass evenly over grid cells.
pub const CELL_REFINE_CAP: u64 = 1 << 40;

fn require_torus(config: &PointConfiguration, what: &str) -> Result<()> {
    if !config.window().is_torus() {
        return Err(Error::InvalidWindow(format!("{what} needs a torus window")));
    }
    Ok(())
}

fn points_ref(config: PointConfiguration) -> MeasureRef {
    Arc::new(Measure::Points(config))
}

/// Length of `z` in the window's metric (torus length on a torus).
pub fn torus_length(config: &PointConfiguration, z: &Point) -> f64 {
    config.window().metric().norm(z)
}

/// `Tra(nu, nu^z)` on the window.
pub fn shift_distance(config: &PointConfiguration, z: &Point) -> Result<DistanceResult> {
    let source = points_ref(config.clone());
    shift_distance_from(&source, config, z)
}

fn shift_distance_from(source: &MeasureRef, config: &PointConfiguration, z: &Point) -> Result<DistanceResult> {
    z.check_dim(config.dim())?;
    let moved = shift(config, z)?;
    if config.window().is_torus() {
        return bottleneck_distance(source, &points_ref(moved));
    }
    let window = config.window();
    let kept = points_ref(restrict(config, window)?);
    let moved = points_ref(restrict(&moved, window)?);
    bottleneck_distance(&kept, &moved)
}

/// Finite set of shifts standing in for "all z".
#[derive(Debug, Clone, Default, PartialEq)]
pub enum ShiftGrid {
    /// `{0, 1/4, 1/2, 3/4}^d`.
    Quarter,
    /// `{0, 1, ..., floor(L/2)}^d`.
    Integer,
    #[default]
    QuarterAndInteger,
    /// `(j / 4) L` per axis, `j = 0..3`.
    WindowQuarters,
    /// Every multiple of `step` in the window, per axis.
    Full {
        step: f64,
    },
    Explicit(Vec<Point>),
}

impl FromStr for ShiftGrid {
    type Err = Error;

    /// `quarter`, `integer`, `quarter+integer`, `window-quarters`,
    /// `full:<step>`, or explicit shifts like `0.5,0;1,1`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "quarter" => return Ok(ShiftGrid::Quarter),
            "integer" => return Ok(ShiftGrid::Integer),
            "quarter+integer" | "default" => return Ok(ShiftGrid::QuarterAndInteger),
            "window-quarters" => return Ok(ShiftGrid::WindowQuarters),
            _ => {}
        }
        if let Some(step) = s.strip_prefix("full:") {
            let step: f64 = step
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad shift-grid step `{step}`")))?;
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "shift-grid step must be positive, got {step}"
                )));
            }
            return Ok(ShiftGrid::Full { step });
        }
        let shifts = s
            .split(';')
            .map(|z| {
                z.split(',')
                    .map(|c| {
                        c.trim()
                            .parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .ok_or_else(|| Error::InvalidParameter(format!("bad shift coordinate `{c}` in `{z}`")))
                    })
                    .collect::<Result<Vec<f64>>>()
                    .map(Point::new)
            })
            .collect::<Result<Vec<Point>>>()?;
        Ok(ShiftGrid::Explicit(shifts))
    }
}

impl ShiftGrid {
    pub fn shifts(&self, window: &Window) -> Result<Vec<Point>> {
        let d = window.dim();
        let side = window.side();
        let axis = |values: Vec<f64>| {
            cartesian(&vec![values; d])
                .into_iter()
                .map(Point::new)
                .collect::<Vec<_>>()
        };
        let quarter = || axis(vec![0.0, 0.25, 0.5, 0.75]);
        let integer = || axis((0..=(side / 2.0).floor() as usize).map(|k| k as f64).collect());
        let out = match self {
            ShiftGrid::Quarter => quarter(),
            ShiftGrid::Integer => integer(),
            ShiftGrid::QuarterAndInteger => {
                let mut seen = BTreeSet::new();
                quarter()
                    .into_iter()
                    .chain(integer())
                    .filter(|z| seen.insert(z.iter().map(|c| c.to_bits()).collect::<Vec<_>>()))
                    .collect()
            }
            ShiftGrid::WindowQuarters => axis((0..4).map(|j| j as f64 * side / 4.0).collect()),
            ShiftGrid::Full { step } => {
                let n = window
                    .steps(*step)
                    .ok_or(Error::NonIntegralSpacing { side, spacing: *step })?;
                axis((0..n).map(|j| j as f64 * step).collect())
            }
            ShiftGrid::Explicit(list) => {
                for z in list {
                    z.check_dim(d)?;
                }
                list.clone()
            }
        };
        if out.is_empty() {
            return Err(Error::InvalidParameter("shift grid is empty".into()));
        }
        Ok(out)
    }

    /// Torus distance from any shift to the nearest grid shift, when the grid
    /// covers the whole window.
    fn covering_radius(&self, d: usize) -> Option<f64> {
        match self {
            ShiftGrid::Full { step } => Some(step * (d as f64).sqrt() / 2.0),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ShiftEntry {
    pub z: Point,
    pub torus_length: f64,
    pub distance: DistanceResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShiftSweepReport {
    pub schema_version: u32,
    pub window: Window,
    pub shifts: Vec<ShiftEntry>,
    pub empirical_c3: f64,
    /// Index into `shifts` of the largest value.
    pub argmax: usize,
    /// Bound on the supremum over all shifts: sampled max plus the covering
    /// radius of the grid (Tra(nu, nu^z) is 1-Lipschitz in z).
    pub certified_sup: Option<f64>,
}

pub fn shift_sweep(config: &PointConfiguration, grid: &ShiftGrid) -> Result<ShiftSweepReport> {
    require_torus(config, "shift sweep")?;
    let shifts = grid.shifts(config.window())?;
    let source = points_ref(config.clone());
    let entries = shifts
        .into_par_iter()
        .map(|z| {
            let distance = shift_distance_from(&source, config, &z)?;
            Ok(ShiftEntry {
                torus_length: torus_length(config, &z),
                z,
                distance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (argmax, empirical_c3) =
        entries
            .iter()
            .map(|e| e.distance.value)
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |best, (i, v)| if v > best.1 { (i, v) } else { best },
            );
    let certified_sup = grid.covering_radius(config.dim()).map(|r| empirical_c3 + r);
    Ok(ShiftSweepReport {
        schema_version: SCHEMA_VERSION,
        window: config.window().clone(),
        shifts: entries,
        empirical_c3,
        argmax,
        certified_sup,
    })
}

/// Windowed `inf_psi sup_n |a_n - alpha psi(n)|` against `alpha Z^d`.
pub fn lattice_displacement(config: &PointConfiguration, alpha: f64) -> Result<DistanceResult> {
    require_torus(config, "lattice displacement")?;
    let lattice = make_lattice(alpha, config.window())?;
    let sites = lattice.len() as u64;
    if !Quantum::same_amount(config.total_units(), config.quantum(), sites as u128, Quantum::ONE) {
        return Err(Error::CountMismatch {
            points: config.quantum().describe(config.total_units()),
            sites,
        });
    }
    bottleneck_distance(&points_ref(config.clone()), &points_ref(lattice))
}

/// The uniform grid of side `h` carrying the configuration's total mass,
/// with cells centered on `h Z^d`.
pub fn uniform_grid_for(config: &PointConfiguration, beta: Option<f64>, h: f64) -> Result<GridMeasure> {
    require_torus(config, "the Lebesgue comparison")?;
    let window = config.window();
    if let Some(beta) = beta {
        let volume_mass = beta * window.volume();
        let total = config.total_mass();
        if beta.is_nan() || beta <= 0.0 || (volume_mass - total).abs() > 1e-9 * total.abs().max(1.0) {
            return Err(Error::MassMismatch {
                source_mass: format!("{total}"),
                target_mass: format!("{volume_mass} (beta {beta} times volume {})", window.volume()),
            });
        }
    }
    let per_axis = window.steps(h).ok_or(Error::NonIntegralSpacing {
        side: window.side(),
        spacing: h,
    })?;
    let cells = (per_axis as u128)
        .checked_pow(window.dim() as u32)
        .filter(|&c| c <= u64::MAX as u128)
        .ok_or(Error::SizeCap {
            size: usize::MAX,
            cap: usize::MAX,
        })?;
    let units = config.total_units();
    let factor = cells / units.gcd(&cells);
    if factor > CELL_REFINE_CAP as u128 {
        return Err(Error::QuantumOverflow {
            factor,
            cap: CELL_REFINE_CAP,
        });
    }
    let per_cell = u64::try_from(units * factor / cells).map_err(|_| Error::QuantumOverflow {
        factor,
        cap: CELL_REFINE_CAP,
    })?;
    let quantum = config.quantum().divided_by(factor as u64)?;
    GridMeasure::uniform(
        window.clone(),
        GridMeasure::centered_origin(window, h),
        h,
        per_cell,
        quantum,
    )
}

/// `Tra(nu, beta omega)` through the grid of side `h` split `s` ways per axis.
pub fn lebesgue_distance(config: &PointConfiguration, beta: Option<f64>, h: f64, s: usize) -> Result<DistanceResult> {
    let grid = uniform_grid_for(config, beta, h)?;
    point_to_grid_distance(config, &grid, s)
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainReport {
    pub schema_version: u32,
    pub alpha: f64,
    pub d_lat: DistanceResult,
    pub d_leb: DistanceResult,
    /// Radius of the lattice witness composed with the site-to-own-cell plan.
    pub product_plan_radius: f64,
    pub bound: f64,
    pub constructive_holds: bool,
    /// `D_lat / max(D_leb, 1e-12)`, reported only.
    pub c2_ratio: f64,
}

/// Both sides of the lattice/Lebesgue comparison on one configuration.
pub fn verify_chain(config: &PointConfiguration, alpha: f64, s: usize) -> Result<ChainReport> {
    let d_lat = lattice_displacement(config, alpha)?;
    let d = config.dim() as f64;
    let beta = alpha.powi(-(config.dim() as i32));
    let d_leb = lebesgue_distance(config, Some(beta), alpha, s)?;

    let lattice = d_lat
        .witness
        .target()
        .as_points()
        .expect("lattice witness ends on points")
        .clone();
    let cells = uniform_grid_for(&lattice, None, alpha)?;
    let assignment = lattice
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            cells.locate(p).ok_or(Error::OutsideWindow {
                index: i,
                coords: p.coords().to_vec(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let product = product_plan_to_cells(&lattice, &assignment, &cells)?;
    let product_plan_radius = compose(&d_lat.witness, &product)?.support_radius()?.value;

    let bound = d_lat.value + alpha * d.sqrt() / 2.0 + d_leb.error_bound;
    Ok(ChainReport {
        schema_version: SCHEMA_VERSION,
        alpha,
        constructive_holds: d_leb.value <= bound + 1e-9,
        c2_ratio: d_lat.value / d_leb.value.max(1e-12),
        product_plan_radius,
        bound,
        d_lat,
        d_leb,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CesaroReport {
    pub schema_version: u32,
    pub k: Vec<i64>,
    pub n: u32,
    pub shift_count: usize,
    /// Unit of `cell_units`.
    pub quantum: Quantum,
    /// Averaged mass per unit cell, row-major.
    pub cell_units: Vec<u64>,
    pub cell_masses: Vec<f64>,
    pub spread_units: u64,
    pub spread: f64,
    pub averaged_plan_radius: f64,
    pub max_shift_value: f64,
    pub marginals_ok: bool,
    pub distance: DistanceResult,
    pub bound_holds: bool,
}

/// Averages the optimal shift plans over integer shifts `m` with
/// `|m - k|_inf <= n` and compares the result with the configuration.
pub fn cesaro_average(config: &PointConfiguration, k: &[i64], n: u32) -> Result<CesaroReport> {
    require_torus(config, "Cesaro averaging")?;
    let window = config.window();
    if k.len() != config.dim() {
        return Err(Error::DimensionMismatch {
            expected: config.dim(),
            found: k.len(),
        });
    }
    let side = window.side();
    if (side - side.round()).abs() > 1e-9 {
        return Err(Error::InvalidWindow(format!(
            "Cesaro averaging needs an integer side, got {side}"
        )));
    }
    let axes: Vec<Vec<f64>> = k
        .iter()
        .map(|&c| (c - n as i64..=c + n as i64).map(|m| m as f64).collect())
        .collect();
    let shifts: Vec<Point> = cartesian(&axes).into_iter().map(Point::new).collect();

    let source = points_ref(config.clone());
    let results = shifts
        .par_iter()
        .map(|z| shift_distance_from(&source, config, z))
        .collect::<Result<Vec<_>>>()?;
    let max_shift_value = results.iter().map(|r| r.value).fold(0.0, f64::max);
    let plans: Vec<TransportPlan> = results.into_iter().map(|r| r.witness).collect();
    let averaged = average_plans(&plans, &source)?;
    let plan = &averaged.plan;
    let marginals_ok = plan.verify_marginals().ok;
    let averaged_plan_radius = plan.support_radius()?.value;

    let targets = plan.target().as_points().expect("shift plans end on points");
    let marginal = plan
        .target_marginal()
        .into_iter()
        .map(|m| {
            u64::try_from(m).map_err(|_| Error::QuantumOverflow {
                factor: m,
                cap: u64::MAX,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let cells = GridMeasure::bin_masses(
        targets,
        &marginal,
        plan.quantum(),
        GridMeasure::centered_origin(window, 1.0),
        1.0,
    )?;
    let q = cells.quantum();
    let cell_units = cells.cells().to_vec();
    let lo = cell_units.iter().copied().min().unwrap_or(0);
    let hi = cell_units.iter().copied().max().unwrap_or(0);
    let distance = point_to_grid_distance(config, &cells, 1)?;
    let bound_holds = distance.value <= max_shift_value + distance.error_bound + 1e-9;
    Ok(CesaroReport {
        schema_version: SCHEMA_VERSION,
        k: k.to_vec(),
        n,
        shift_count: shifts.len(),
        quantum: q,
        cell_masses: cell_units.iter().map(|&u| u as f64 * q.to_f64()).collect(),
        spread_units: hi - lo,
        spread: (hi - lo) as f64 * q.to_f64(),
        cell_units,
        averaged_plan_radius,
        max_shift_value,
        marginals_ok,
        distance,
        bound_holds,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BijectionReport {
    pub schema_version: u32,
    pub z: Point,
    /// Pairs `(n, sigma(n))`: point `n` shifted by `z` goes to point `sigma(n)`.
    pub pairing: Vec<(usize, usize)>,
    /// `max_n |a_n + z - a_sigma(n)|`, recomputed from the pairing.
    pub c7: f64,
    pub shift_value: f64,
    pub is_bijection: bool,
}

/// Reads the optimal shift plan of a simple configuration as an index bijection.
pub fn shift_bijection(config: &PointConfiguration, z: &Point) -> Result<BijectionReport> {
    require_torus(config, "shift bijection")?;
    if !config.has_unit_masses() {
        return Err(Error::NonUnitMass);
    }
    let result = shift_distance(config, z)?;
    let moved = result.witness.target().as_points().expect("shift plans end on points");
    let metric = config.window().metric();
    let len = config.len();
    let mut sigma = vec![usize::MAX; len];
    let mut hit = vec![false; len];
    let mut is_bijection = true;
    for a in result.witness.atoms() {
        // unit masses give a 0/1 flow, so each atom carries one point
        if a.mass != 1 || sigma[a.target] != usize::MAX || hit[a.source] {
            is_bijection = false;
        }
        sigma[a.target] = a.source;
        hit[a.source] = true;
    }
    is_bijection &= hit.iter().all(|&h| h) && sigma.iter().all(|&s| s != usize::MAX);
    let pairing: Vec<(usize, usize)> = sigma.iter().copied().enumerate().collect();
    let c7 = pairing
        .iter()
        .filter(|&&(_, s)| s != usize::MAX)
        .map(|&(n, s)| metric.dist(&moved.points()[n], &config.points()[s]))
        .fold(0.0, f64::max);
    Ok(BijectionReport {
        schema_version: SCHEMA_VERSION,
        z: z.clone(),
        pairing,
        c7,
        shift_value: result.value,
        is_bijection,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TriangleReport {
    pub schema_version: u32,
    pub shift_value: f64,
    pub lebesgue_value: f64,
    pub shifted_lebesgue_value: f64,
    pub error_bound: f64,
    /// Radius of `nu -> grid -> nu^z`, the composition of the two witnesses.
    pub composed_radius: f64,
    pub holds: bool,
}

/// `Tra(nu, nu^z) <= Tra(nu, beta omega) + Tra(beta omega, nu^z)`, with the
/// right side realized by composing plans through the grid.
pub fn shift_triangle(config: &PointConfiguration, z: &Point, h: f64, s: usize) -> Result<TriangleReport> {
    let direct = shift_distance(config, z)?;
    let moved = shift(config, z)?;
    let there = lebesgue_distance(config, None, h, s)?;
    let back = lebesgue_distance(&moved, None, h, s)?;
    let composed_radius = compose(&there.witness, &back.witness.transpose())?
        .support_radius()?
        .value;
    let error_bound = there.error_bound.max(back.error_bound);
    let holds =
        direct.value <= there.value + back.value + 2.0 * error_bound + 1e-9 && direct.value <= composed_radius + 1e-9;
    Ok(TriangleReport {
        schema_version: SCHEMA_VERSION,
        shift_value: direct.value,
        lebesgue_value: there.value,
        shifted_lebesgue_value: back.value,
        error_bound,
        composed_radius,
        holds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GrowthMode {
    Lebesgue { h: f64, s: usize },
    Shift { grid: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthOptions {
    pub mode: GrowthMode,
    pub beta: Option<f64>,
    pub slope_threshold: f64,
    pub ratio_threshold: f64,
}

impl Default for GrowthOptions {
    fn default() -> Self {
        GrowthOptions {
            mode: GrowthMode::Lebesgue { h: 1.0, s: 1 },
            beta: None,
            slope_threshold: 0.05,
            ratio_threshold: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    SpreadConsistent,
    GrowthDetected,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthEntry {
    pub side: f64,
    pub value: f64,
    pub error_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub schema_version: u32,
    pub mode: GrowthMode,
    pub entries: Vec<GrowthEntry>,
    pub slope: f64,
    /// Last value over first; absent when the first value is zero.
    pub ratio: Option<f64>,
    pub slope_threshold: f64,
    pub ratio_threshold: f64,
    pub classification: Classification,
}

impl GrowthReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("L,value,error_bound\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{}\n", e.side, e.value, e.error_bound));
        }
        out
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Runs one family over growing windows and classifies the trend.
pub fn growth_analysis(spec: &GeneratorSpec, sides: &[f64], options: &GrowthOptions) -> Result<GrowthReport> {
    if sides.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "growth analysis needs at least 3 window sides, got {}",
            sides.len()
        )));
    }
    if sides
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
    {
        return Err(Error::InvalidParameter(format!(
            "window sides must be strictly increasing: {sides:?}"
        )));
    }
    let grid = match &options.mode {
        GrowthMode::Shift { grid } => Some(grid.parse::<ShiftGrid>()?),
        GrowthMode::Lebesgue { .. } => None,
    };
    let entries = sides
        .par_iter()
        .map(|&side| {
            let config = generate(&spec.with_side(side)?)?;
            let (value, error_bound) = match (&options.mode, &grid) {
                (GrowthMode::Lebesgue { h, s }, _) => {
                    let r = lebesgue_distance(&config, options.beta, *h, *s)?;
                    (r.value, r.error_bound)
                }
                (GrowthMode::Shift { .. }, Some(grid)) => (shift_sweep(&config, grid)?.empirical_c3, 0.0),
                (GrowthMode::Shift { .. }, None) => unreachable!("shift grid parsed above"),
            };
            Ok(GrowthEntry {
                side,
                value,
                error_bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let xs: Vec<f64> = entries.iter().map(|e| e.side).collect();
    let ys: Vec<f64> = entries.iter().map(|e| e.value).collect();
    let slope = fit_slope(&xs, &ys);
    let (first, last) = (ys[0], ys[ys.len() - 1]);
    let ratio = (first > 0.0).then(|| last / first);
    let grows = match ratio {
        Some(r) => r >= options.ratio_threshold,
        None => last > 0.0,
    };
    let classification = if slope > options.slope_threshold && grows {
        Classification::GrowthDetected
    } else {
        Classification::SpreadConsistent
    };
    Ok(GrowthReport {
        schema_version: SCHEMA_VERSION,
        mode: options.mode.clone(),
        entries,
        slope,
        ratio,
        slope_threshold: options.slope_threshold,
        ratio_threshold: options.ratio_threshold,
        classification,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Boundary;

    fn torus(d: usize, side: f64) -> Window {
        Window::cube(d, 0.0, side, Boundary::Torus).unwrap()
    }

    fn z(c: &[f64]) -> Point {
        Point::new(c.to_vec())
    }

    fn perturbed(eps: f64, seed: u64, d: usize, side: f64) -> PointConfiguration {
        generate(&GeneratorSpec::perturbed(1.0, eps, seed, torus(d, side))).unwrap()
    }

    #[test]
    fn zero_shift_is_free() {
        let c = perturbed(0.2, 3, 2, 4.0);
        assert_eq!(shift_distance(&c, &Point::origin(2)).unwrap().value, 0.0);
    }

    #[test]
    fn half_shift_of_integer_torus() {
        let c = make_lattice(1.0, &torus(1, 8.0)).unwrap();
        let r = shift_distance(&c, &z(&[0.5])).unwrap();
        assert!((r.value - 0.5).abs() < 1e-12);
        assert!(r.is_consistent());
    }

    #[test]
    fn integer_shift_of_perturbed_lattice() {
        for seed in 0..5 {
            let c = perturbed(0.1, seed, 2, 6.0);
            let r = shift_distance(&c, &z(&[2.0, -1.0])).unwrap();
            assert!(r.value <= 0.2 + 1e-12, "{}", r.value);
        }
    }

    #[test]
    fn free_window_shift_restricts_both_sides() {
        let w = Window::cube(1, 0.0, 4.0, Boundary::Free).unwrap();
        let c = PointConfiguration::unit(w, (0..4).map(|i| z(&[i as f64 + 0.5])).collect()).unwrap();
        assert!(shift_distance(&c, &z(&[1.0])).is_err());
    }

    #[test]
    fn sweep_of_exact_lattice_on_integer_shifts() {
        let c = make_lattice(1.0, &torus(2, 4.0)).unwrap();
        let r = shift_sweep(&c, &ShiftGrid::Integer).unwrap();
        assert_eq!(r.empirical_c3, 0.0);
        assert_eq!(r.shifts.len(), 9);
    }

    #[test]
    fn sweep_of_integer_torus_with_fractional_shifts() {
        let c = make_lattice(1.0, &torus(1, 8.0)).unwrap();
        let grid: ShiftGrid = "0;0.25;0.5".parse().unwrap();
        let r = shift_sweep(&c, &grid).unwrap();
        assert!((r.empirical_c3 - 0.5).abs() < 1e-12);
        assert_eq!(r.argmax, 2);
        let max = r.shifts.iter().map(|e| e.distance.value).fold(0.0, f64::max);
        assert_eq!(max, r.empirical_c3);
    }

    #[test]
    fn full_grid_certifies_the_supremum() {
        let c = make_lattice(1.0, &torus(1, 4.0)).unwrap();
        let r = shift_sweep(&c, &ShiftGrid::Full { step: 0.5 }).unwrap();
        assert_eq!(r.shifts.len(), 8);
        assert!((r.certified_sup.unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn default_grid_merges_quarter_and_integer_shifts() {
        let shifts = ShiftGrid::default().shifts(&torus(1, 8.0)).unwrap();
        let c: Vec<f64> = shifts.iter().map(|p| p[0]).collect();
        assert_eq!(c, vec![0.0, 0.25, 0.5, 0.75, 1.0, 2.0, 3.0, 4.0]);
        let wq = ShiftGrid::WindowQuarters.shifts(&torus(1, 8.0)).unwrap();
        assert_eq!(wq.iter().map(|p| p[0]).collect::<Vec<_>>(), vec![0.0, 2.0, 4.0, 6.0]);
    }

    #[test]
    fn shift_grid_parsing() {
        assert_eq!("full:0.5".parse::<ShiftGrid>().unwrap(), ShiftGrid::Full { step: 0.5 });
        assert_eq!(
            "0.5,0;1,1".parse::<ShiftGrid>().unwrap(),
            ShiftGrid::Explicit(vec![z(&[0.5, 0.0]), z(&[1.0, 1.0])])
        );
        assert!("0.5,x".parse::<ShiftGrid>().is_err());
        assert!("full:-1".parse::<ShiftGrid>().is_err());
    }

    #[test]
    fn lattice_displacement_of_lattice_and_perturbation() {
        let w = torus(2, 4.0);
        let lat = make_lattice(1.0, &w).unwrap();
        assert_eq!(lattice_displacement(&lat, 1.0).unwrap().value, 0.0);
        for seed in 0..4 {
            let c = perturbed(0.15, seed, 2, 4.0);
            assert!(lattice_displacement(&c, 1.0).unwrap().value <= 0.15 + 1e-12);
        }
    }

    #[test]
    fn density_defect_has_no_bijection() {
        let spec = GeneratorSpec::density_defect(1.0, [1.0, 2.0], torus(1, 8.0));
        let c = generate(&spec).unwrap();
        match lattice_displacement(&c, 1.0) {
            Err(Error::CountMismatch { points, sites }) => {
                assert_eq!(points, "12");
                assert_eq!(sites, 8);
            }
            other => panic!("expected a count mismatch, got {other:?}"),
        }
    }

    #[test]
    fn lebesgue_distance_of_exact_lattice() {
        for d in 1..=2 {
            let c = make_lattice(1.0, &torus(d, 4.0)).unwrap();
            let r = lebesgue_distance(&c, Some(1.0), 1.0, 1).unwrap();
            assert_eq!(r.value, 0.0);
            assert!((r.error_bound - (d as f64).sqrt() / 2.0).abs() < 1e-12);
            let r2 = lebesgue_distance(&c, None, 1.0, 2).unwrap();
            assert!((r2.error_bound - r.error_bound / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lebesgue_distance_of_perturbed_lattice() {
        let c = perturbed(0.1, 9, 1, 8.0);
        let r = lebesgue_distance(&c, None, 1.0, 1).unwrap();
        assert!(r.upper_bound() <= 0.6 + 1e-9);
    }

    #[test]
    fn mismatched_beta_is_rejected() {
        let c = make_lattice(1.0, &torus(1, 4.0)).unwrap();
        assert!(matches!(
            lebesgue_distance(&c, Some(2.0), 1.0, 1),
            Err(Error::MassMismatch { .. })
        ));
    }

    #[test]
    fn uneven_totals_refine_the_cell_quantum() {
        let c = make_lattice(1.0, &torus(1, 3.0)).unwrap();
        let g = uniform_grid_for(&c, None, 0.5).unwrap();
        assert_eq!(g.quantum(), Quantum::new(1, 2).unwrap());
        assert!(g.cells().iter().all(|&m| m == 1));
    }

    #[test]
    fn chain_on_lattice_and_perturbation() {
        let lat = make_lattice(1.0, &torus(2, 4.0)).unwrap();
        let r = verify_chain(&lat, 1.0, 1).unwrap();
        assert_eq!(r.d_lat.value, 0.0);
        assert!(r.d_leb.value <= 2f64.sqrt() / 2.0 + 1e-12);
        assert!(r.constructive_holds);

        let c = perturbed(0.1, 1, 1, 8.0);
        let r = verify_chain(&c, 1.0, 1).unwrap();
        assert!(r.d_lat.value <= 0.1 + 1e-12);
        assert!(r.d_leb.value <= 0.6 + r.d_leb.error_bound);
        assert!(r.product_plan_radius <= r.d_lat.value + 0.5 + 1e-9);
        assert!(r.constructive_holds);
    }

    #[test]
    fn cesaro_on_exact_lattice_is_flat() {
        let c = make_lattice(1.0, &torus(2, 4.0)).unwrap();
        let r = cesaro_average(&c, &[0, 0], 1).unwrap();
        assert_eq!(r.shift_count, 9);
        assert_eq!(r.spread_units, 0);
        assert!(r.marginals_ok);
        assert!(r.bound_holds);
        assert!(r.cell_masses.iter().all(|&m| (m - 1.0).abs() < 1e-12));
    }

    #[test]
    fn cesaro_spread_of_perturbed_lattice() {
        let c = perturbed(0.1, 4, 1, 8.0);
        let one = cesaro_average(&c, &[0], 1).unwrap();
        let two = cesaro_average(&c, &[0], 2).unwrap();
        assert!(two.spread <= one.spread + 1e-12);
        assert!(one.bound_holds && two.bound_holds);
        assert!(two.averaged_plan_radius <= two.max_shift_value + 1e-12);
    }

    #[test]
    fn bijection_for_integer_and_half_shift() {
        let c = make_lattice(1.0, &torus(1, 8.0)).unwrap();
        let id = shift_bijection(&c, &z(&[0.0])).unwrap();
        assert!(id.is_bijection);
        assert_eq!(id.c7, 0.0);
        assert!(id.pairing.iter().all(|&(n, s)| n == s));

        let one = shift_bijection(&c, &z(&[1.0])).unwrap();
        assert!(one.is_bijection);
        assert_eq!(one.c7, 0.0);
        assert!(one.pairing.iter().all(|&(n, s)| s == (n + 1) % 8));

        let half = shift_bijection(&c, &z(&[0.5])).unwrap();
        assert!(half.is_bijection);
        assert!((half.c7 - 0.5).abs() < 1e-12);
        assert!((half.c7 - half.shift_value).abs() < 1e-12);
    }

    #[test]
    fn bijection_needs_unit_masses() {
        let w = torus(1, 2.0);
        let c = PointConfiguration::new(w, vec![z(&[0.0])], vec![2], Quantum::ONE).unwrap();
        assert!(matches!(shift_bijection(&c, &z(&[0.5])), Err(Error::NonUnitMass)));
    }

    #[test]
    fn triangle_through_lebesgue() {
        let c = perturbed(0.2, 7, 2, 4.0);
        let r = shift_triangle(&c, &z(&[0.3, 1.7]), 1.0, 1).unwrap();
        assert!(r.holds, "{r:?}");
        assert!(r.composed_radius <= r.lebesgue_value + r.shifted_lebesgue_value + 2.0 * r.error_bound + 1e-9);
    }

    #[test]
    fn growth_classifies_the_families() {
        let sides = [8.0, 16.0, 32.0];
        let opts = GrowthOptions::default();
        let defect = GeneratorSpec::density_defect(1.0, [1.0, 2.0], torus(1, 8.0));
        let r = growth_analysis(&defect, &sides, &opts).unwrap();
        assert_eq!(r.classification, Classification::GrowthDetected, "{r:?}");
        assert!(r.entries.windows(2).all(|w| w[0].value < w[1].value));

        let pert = GeneratorSpec::perturbed(1.0, 0.1, 5, torus(1, 8.0));
        let r = growth_analysis(&pert, &sides, &opts).unwrap();
        assert_eq!(r.classification, Classification::SpreadConsistent);
        assert!(r.entries.iter().all(|e| e.value <= 0.1 + 1e-9));

        let lat = GeneratorSpec::lattice(1.0, torus(1, 8.0));
        let r = growth_analysis(&lat, &sides, &opts).unwrap();
        assert_eq!(r.slope, 0.0);
        assert_eq!(r.classification, Classification::SpreadConsistent);
        assert!(r.to_csv().starts_with("L,value,error_bound\n8,0,0.5\n"));
    }

    #[test]
    fn growth_rejects_bad_sides() {
        let lat = GeneratorSpec::lattice(1.0, torus(1, 8.0));
        let opts = GrowthOptions::default();
        assert!(growth_analysis(&lat, &[8.0, 16.0], &opts).is_err());
        assert!(growth_analysis(&lat, &[8.0, 8.0, 16.0], &opts).is_err());
    }

    #[test]
    fn slope_fit() {
        assert!((fit_slope(&[1.0, 2.0, 3.0], &[1.0, 3.0, 5.0]) - 2.0).abs() < 1e-12);
    }
}
