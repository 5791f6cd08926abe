//! Windows, points, and the measures built on them.
//!
//! Every cube here is half-open, `[lower, lower + side)` per axis, so binning
//! partitions a window without double counting. A torus window identifies
//! opposite faces; a free window is only a membership test and distances
//! are plain Euclidean.

mod config;
mod grid;
mod io;

pub(crate) use config::cartesian;
pub use config::{make_lattice, restrict, shift, PointConfiguration};
pub use grid::{cell_mass, GridMeasure, GridRecord};
pub use io::{format_point_file, parse_point_file};

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for "is an integer multiple of" checks on lengths.
pub(crate) const LENGTH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Torus,
    Free,
}

impl std::str::FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "torus" => Ok(Boundary::Torus),
            "free" => Ok(Boundary::Free),
            other => Err(Error::InvalidParameter(format!(
                "unknown boundary mode `{other}` (expected torus or free)"
            ))),
        }
    }
}

/// A point of `R^d`. Also used for shift vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn negated(&self) -> Point {
        Point(self.0.iter().map(|x| -x).collect())
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: self.dim(),
            });
        }
        Ok(())
    }
}

impl Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

/// A cubical computation domain `[lower, lower + side)^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WindowRecord", into = "WindowRecord")]
pub struct Window {
    lower: Vec<f64>,
    side: f64,
    boundary: Boundary,
}

#[derive(Serialize, Deserialize)]
struct WindowRecord {
    lower: Vec<f64>,
    side: f64,
    #[serde(default)]
    boundary: Boundary,
}

impl TryFrom<WindowRecord> for Window {
    type Error = Error;
    fn try_from(r: WindowRecord) -> Result<Self> {
        Window::new(r.lower, r.side, r.boundary)
    }
}

impl From<Window> for WindowRecord {
    fn from(w: Window) -> Self {
        WindowRecord {
            lower: w.lower,
            side: w.side,
            boundary: w.boundary,
        }
    }
}

impl Window {
    pub fn new(lower: Vec<f64>, side: f64, boundary: Boundary) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidWindow("dimension must be at least 1".into()));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::InvalidWindow(format!(
                "side length must be positive, got {side}"
            )));
        }
        if lower.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidWindow("lower corner must be finite".into()));
        }
        Ok(Window { lower, side, boundary })
    }

    /// `[lo, lo + side)^dim`.
    pub fn cube(dim: usize, lo: f64, side: f64, boundary: Boundary) -> Result<Self> {
        Window::new(vec![lo; dim], side, boundary)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn is_torus(&self) -> bool {
        self.boundary == Boundary::Torus
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim() as i32)
    }

    /// The same window with a different side length.
    pub fn with_side(&self, side: f64) -> Result<Self> {
        Window::new(self.lower.clone(), side, self.boundary)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.lower).all(|(&c, &lo)| c >= lo && c < lo + self.side)
    }

    /// Reduces every coordinate into `[lower, lower + side)`.
    pub fn wrap(&self, x: &[f64]) -> Point {
        Point(
            x.iter()
                .zip(&self.lower)
                .map(|(&c, &lo)| wrap_coord(c, lo, self.side))
                .collect(),
        )
    }

    /// The metric two measures on `self` and `other` are compared in.
    pub fn shared_metric(&self, other: &Window) -> Result<Metric> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        if self.boundary != other.boundary {
            return Err(Error::WindowMismatch(format!(
                "boundary modes differ ({:?} vs {:?})",
                self.boundary, other.boundary
            )));
        }
        if (self.side - other.side).abs() > LENGTH_TOL * self.side.max(other.side) {
            return Err(Error::WindowMismatch(format!(
                "side lengths differ ({} vs {})",
                self.side, other.side
            )));
        }
        Ok(self.metric())
    }

    pub fn metric(&self) -> Metric {
        match self.boundary {
            Boundary::Torus => Metric {
                torus_side: Some(self.side),
            },
            Boundary::Free => Metric { torus_side: None },
        }
    }

    /// Number of spacing steps that fit the side, if it is (nearly) integral.
    pub(crate) fn steps(&self, spacing: f64) -> Option<usize> {
        let r = self.side / spacing;
        let n = r.round();
        if n >= 1.0 && (r - n).abs() <= LENGTH_TOL * r.max(1.0) {
            Some(n as usize)
        } else {
            None
        }
    }
}

fn wrap_coord(c: f64, lo: f64, side: f64) -> f64 {
    let x = lo + (c - lo).rem_euclid(side);
    // rounding can land exactly on the far face
    if x >= lo + side {
        lo
    } else {
        x
    }
}

/// Euclidean distance, optionally on a flat torus of the given side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metric {
    pub torus_side: Option<f64>,
}

impl Metric {
    pub const EUCLIDEAN: Metric = Metric { torus_side: None };

    fn axis(&self, t: f64) -> f64 {
        match self.torus_side {
            None => t.abs(),
            Some(l) => {
                let r = t.rem_euclid(l);
                r.min(l - r)
            }
        }
    }

    pub fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| {
                let t = self.axis(x - y);
                t * t
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Length of a displacement vector (`|z|` or `|z|_torus`).
    pub fn norm(&self, z: &[f64]) -> f64 {
        z.iter().map(|&t| self.axis(t).powi(2)).sum::<f64>().sqrt()
    }

    /// Largest axis distance between `a` in `[a0, a1]` and `b` in `[b0, b1]`.
    fn axis_max(&self, a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
        let (lo, hi) = (a0 - b1, a1 - b0);
        match self.torus_side {
            None => lo.abs().max(hi.abs()),
            Some(l) => {
                let half = l / 2.0;
                if hi - lo >= l {
                    return half;
                }
                let k = ((lo - half) / l).ceil();
                if half + k * l <= hi {
                    half
                } else {
                    self.axis(lo).max(self.axis(hi))
                }
            }
        }
    }

    /// Largest distance between a point of `a` and a point of `b`.
    pub fn max_distance(&self, a: &Extent, b: &Extent) -> f64 {
        let (alo, ahi) = a.bounds();
        let (blo, bhi) = b.bounds();
        (0..alo.len())
            .map(|j| self.axis_max(alo[j], ahi[j], blo[j], bhi[j]).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Spatial footprint of one measure element: an atom or a closed cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Extent {
    Atom(Vec<f64>),
    Cell { lower: Vec<f64>, upper: Vec<f64> },
}

impl Extent {
    fn bounds(&self) -> (&[f64], &[f64]) {
        match self {
            Extent::Atom(x) => (x, x),
            Extent::Cell { lower, upper } => (lower, upper),
        }
    }
}
