use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::Quantum;

use super::{Boundary, Extent, PointConfiguration, Window};

/// A measure with constant density on each cell of a cubical grid.
///
/// Cell `k` (multi-index) covers `origin + h * [k, k + 1)` per axis. The grid
/// spans one window side per axis, so on a torus the cells tile the window
/// whatever the origin. Cells are stored row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasure {
    window: Window,
    origin: Vec<f64>,
    h: f64,
    per_axis: usize,
    cells: Vec<u64>,
    quantum: Quantum,
}

impl GridMeasure {
    pub fn new(window: Window, origin: Vec<f64>, h: f64, cells: Vec<u64>, quantum: Quantum) -> Result<Self> {
        if origin.len() != window.dim() {
            return Err(Error::DimensionMismatch {
                expected: window.dim(),
                found: origin.len(),
            });
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter(format!("cell size must be positive, got {h}")));
        }
        let per_axis = window.steps(h).ok_or(Error::NonIntegralSpacing {
            side: window.side(),
            spacing: h,
        })?;
        let expected = per_axis.checked_pow(window.dim() as u32).ok_or(Error::SizeCap {
            size: usize::MAX,
            cap: usize::MAX,
        })?;
        if cells.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "grid with {per_axis} cells per axis needs {expected} cell masses, got {}",
                cells.len()
            )));
        }
        Ok(GridMeasure {
            window,
            origin,
            h,
            per_axis,
            cells,
            quantum,
        })
    }

    /// Every cell carries `mass` quantum units.
    pub fn uniform(window: Window, origin: Vec<f64>, h: f64, mass: u64, quantum: Quantum) -> Result<Self> {
        let per_axis = window.steps(h).ok_or(Error::NonIntegralSpacing {
            side: window.side(),
            spacing: h,
        })?;
        let count = per_axis.pow(window.dim() as u32);
        Self::new(window, origin, h, vec![mass; count], quantum)
    }

    /// Origin placing cell centers on `h * Z^d`, i.e. cells `Q(h m, h)`.
    pub fn centered_origin(window: &Window, h: f64) -> Vec<f64> {
        window.lower().iter().map(|&lo| (lo / h).ceil() * h - h / 2.0).collect()
    }

    /// Sums the configuration's masses cell by cell.
    pub fn bin(config: &PointConfiguration, origin: Vec<f64>, h: f64) -> Result<Self> {
        Self::bin_masses(config, config.masses(), config.quantum(), origin, h)
    }

    /// Bins arbitrary per-point masses (one per point of `config`).
    pub fn bin_masses(
        config: &PointConfiguration,
        masses: &[u64],
        quantum: Quantum,
        origin: Vec<f64>,
        h: f64,
    ) -> Result<Self> {
        let mut grid = Self::uniform(config.window().clone(), origin, h, 0, quantum)?;
        for (i, (p, &m)) in config.points().iter().zip(masses).enumerate() {
            let k = grid.locate(p).ok_or(Error::OutsideWindow {
                index: i,
                coords: p.coords().to_vec(),
            })?;
            grid.cells[k] += m;
        }
        Ok(grid)
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.h
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[u64] {
        &self.cells
    }

    pub fn quantum(&self) -> Quantum {
        self.quantum
    }

    pub fn total_units(&self) -> u128 {
        self.cells.iter().map(|&m| m as u128).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.total_units() as f64 * self.quantum.to_f64()
    }

    pub fn linear_index(&self, k: &[usize]) -> Result<usize> {
        if k.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: k.len(),
            });
        }
        let mut idx = 0;
        for &kj in k {
            if kj >= self.per_axis {
                return Err(Error::OutOfRange {
                    index: kj,
                    bound: self.per_axis,
                });
            }
            idx = idx * self.per_axis + kj;
        }
        Ok(idx)
    }

    pub fn multi_index(&self, mut linear: usize) -> Vec<usize> {
        let mut k = vec![0; self.dim()];
        for slot in k.iter_mut().rev() {
            *slot = linear % self.per_axis;
            linear /= self.per_axis;
        }
        k
    }

    /// Linear index of the cell containing `x` (wrapping on a torus).
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        let n = self.per_axis as i64;
        let mut idx = 0usize;
        for (j, &c) in x.iter().enumerate() {
            let raw = ((c - self.origin[j]) / self.h).floor() as i64;
            let kj = match self.window.boundary() {
                Boundary::Torus => raw.rem_euclid(n),
                Boundary::Free if (0..n).contains(&raw) => raw,
                Boundary::Free => return None,
            };
            idx = idx * self.per_axis + kj as usize;
        }
        Some(idx)
    }

    pub fn cell_lower(&self, linear: usize) -> Vec<f64> {
        self.multi_index(linear)
            .into_iter()
            .zip(&self.origin)
            .map(|(k, &o)| o + self.h * k as f64)
            .collect()
    }

    pub fn cell_center(&self, linear: usize) -> Vec<f64> {
        self.cell_lower(linear).into_iter().map(|x| x + self.h / 2.0).collect()
    }

    /// The closed cell, used for certified farthest-point distances.
    pub fn cell_extent(&self, linear: usize) -> Extent {
        let lower = self.cell_lower(linear);
        let upper = lower.iter().map(|x| x + self.h).collect();
        Extent::Cell { lower, upper }
    }

    /// Half the cell diagonal: the farthest a cell point is from its center.
    pub fn half_diagonal(&self) -> f64 {
        self.h * (self.dim() as f64).sqrt() / 2.0
    }

    /// Splits every cell into `s^d` equal subcells, refining the quantum when
    /// a cell mass is not divisible by `s^d`. The refinement factor is capped.
    pub fn subdivide(&self, s: usize, refine_cap: u64) -> Result<GridMeasure> {
        if s == 0 {
            return Err(Error::InvalidParameter("subdivision factor must be at least 1".into()));
        }
        if s == 1 {
            return Ok(self.clone());
        }
        let d = self.dim();
        let pieces = (s as u64).checked_pow(d as u32).ok_or(Error::QuantumOverflow {
            factor: u128::MAX,
            cap: refine_cap,
        })?;
        let g = self.cells.iter().fold(pieces, |acc, &m| acc.gcd(&m));
        let factor = pieces / g;
        if factor > refine_cap {
            return Err(Error::QuantumOverflow {
                factor: factor as u128,
                cap: refine_cap,
            });
        }
        let quantum = self.quantum.divided_by(factor)?;
        let fine_axis = self.per_axis * s;
        let fine_count = fine_axis.pow(d as u32);
        let mut cells = vec![0u64; fine_count];
        for (fine, slot) in cells.iter_mut().enumerate() {
            // coarse cell of this subcell
            let mut rem = fine;
            let mut coarse = 0usize;
            let mut stride = 1usize;
            for _ in 0..d {
                let kj = rem % fine_axis;
                rem /= fine_axis;
                coarse += (kj / s) * stride;
                stride *= self.per_axis;
            }
            let m = self.cells[coarse] as u128 * factor as u128 / pieces as u128;
            *slot = u64::try_from(m).map_err(|_| Error::QuantumOverflow {
                factor: factor as u128,
                cap: refine_cap,
            })?;
        }
        GridMeasure::new(
            self.window.clone(),
            self.origin.clone(),
            self.h / s as f64,
            cells,
            quantum,
        )
    }

    pub fn to_record(&self) -> GridRecord {
        GridRecord {
            dim: self.dim(),
            origin: self.origin.clone(),
            h: self.h,
            side: self.window.side(),
            quantum: self.quantum,
            cells: self.cells.clone(),
            lower: Some(self.window.lower().to_vec()),
            boundary: self.window.boundary(),
        }
    }

    pub fn from_record(r: GridRecord) -> Result<Self> {
        if r.origin.len() != r.dim {
            return Err(Error::DimensionMismatch {
                expected: r.dim,
                found: r.origin.len(),
            });
        }
        let lower = r.lower.unwrap_or_else(|| r.origin.clone());
        let window = Window::new(lower, r.side, r.boundary)?;
        GridMeasure::new(window, r.origin, r.h, r.cells, r.quantum)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_record()).expect("grid record serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_record(serde_json::from_str(text)?)
    }
}

/// Wire form of a grid measure: `{dim, origin, h, L, quantum, cells}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    pub dim: usize,
    pub origin: Vec<f64>,
    pub h: f64,
    #[serde(rename = "L")]
    pub side: f64,
    pub quantum: Quantum,
    pub cells: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<f64>>,
    #[serde(default)]
    pub boundary: Boundary,
}

/// Mass stored in cell `k`, in quantum units.
pub fn cell_mass(grid: &GridMeasure, k: &[usize]) -> Result<u64> {
    Ok(grid.cells[grid.linear_index(k)?])
}
