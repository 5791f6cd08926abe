use crate::error::{Error, Result};
use crate::quantum::Quantum;

use super::{Point, Window};

/// A finite sum of weighted Dirac masses, `q * sum_i m_i delta(a_i)`.
///
/// Points keep insertion order; duplicates are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct PointConfiguration {
    window: Window,
    points: Vec<Point>,
    masses: Vec<u64>,
    quantum: Quantum,
}

impl PointConfiguration {
    /// Validates dimensions and masses; in torus mode every point must already
    /// lie in the window.
    pub fn new(window: Window, points: Vec<Point>, masses: Vec<u64>, quantum: Quantum) -> Result<Self> {
        if points.len() != masses.len() {
            return Err(Error::InvalidParameter(format!(
                "{} points but {} masses",
                points.len(),
                masses.len()
            )));
        }
        for (i, p) in points.iter().enumerate() {
            p.check_dim(window.dim())?;
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "point {i} has a non-finite coordinate"
                )));
            }
            if window.is_torus() && !window.contains(p) {
                return Err(Error::OutsideWindow {
                    index: i,
                    coords: p.coords().to_vec(),
                });
            }
        }
        if let Some(i) = masses.iter().position(|&m| m == 0) {
            return Err(Error::InvalidParameter(format!("point {i} has zero mass")));
        }
        Ok(PointConfiguration {
            window,
            points,
            masses,
            quantum,
        })
    }

    /// Unit masses, quantum 1.
    pub fn unit(window: Window, points: Vec<Point>) -> Result<Self> {
        let masses = vec![1; points.len()];
        Self::new(window, points, masses, Quantum::ONE)
    }

    /// Like [`PointConfiguration::new`], but wraps points into a torus window first.
    pub fn wrapped(window: Window, points: Vec<Point>, masses: Vec<u64>, quantum: Quantum) -> Result<Self> {
        let points = if window.is_torus() {
            points
                .into_iter()
                .map(|p| {
                    p.check_dim(window.dim())?;
                    Ok(window.wrap(&p))
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            points
        };
        Self::new(window, points, masses, quantum)
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn masses(&self) -> &[u64] {
        &self.masses
    }

    pub fn quantum(&self) -> Quantum {
        self.quantum
    }

    /// Total mass in quantum units.
    pub fn total_units(&self) -> u128 {
        self.masses.iter().map(|&m| m as u128).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.total_units() as f64 * self.quantum.to_f64()
    }

    pub fn has_unit_masses(&self) -> bool {
        self.masses.iter().all(|&m| m == 1)
    }

    /// Same points, masses rescaled to a finer quantum `self.quantum / factor`.
    pub fn refined(&self, factor: u64) -> Result<Self> {
        let masses = self
            .masses
            .iter()
            .map(|&m| {
                m.checked_mul(factor).ok_or(Error::QuantumOverflow {
                    factor: factor as u128,
                    cap: u64::MAX,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PointConfiguration {
            window: self.window.clone(),
            points: self.points.clone(),
            masses,
            quantum: self.quantum.divided_by(factor)?,
        })
    }
}

/// The lattice `alpha * Z^d` intersected with the window, unit masses,
/// lexicographic in the lattice index (first axis slowest).
pub fn make_lattice(alpha: f64, window: &Window) -> Result<PointConfiguration> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lattice spacing must be positive, got {alpha}"
        )));
    }
    let axes: Vec<Vec<f64>> = if window.is_torus() {
        let n = window.steps(alpha).ok_or(Error::NonIntegralSpacing {
            side: window.side(),
            spacing: alpha,
        })?;
        window
            .lower()
            .iter()
            .map(|&lo| {
                let k0 = (lo / alpha - super::LENGTH_TOL).ceil() as i64;
                (0..n as i64)
                    .map(|i| {
                        let x = alpha * (k0 + i) as f64;
                        // snap sites that rounding pushed just past the seam
                        if x >= lo + window.side() {
                            x - window.side()
                        } else {
                            x.max(lo)
                        }
                    })
                    .collect()
            })
            .collect()
    } else {
        window
            .lower()
            .iter()
            .map(|&lo| {
                let hi = lo + window.side();
                let mut k = (lo / alpha).ceil() as i64;
                let mut sites = Vec::new();
                while alpha * (k as f64) < hi {
                    let x = alpha * k as f64;
                    if x >= lo {
                        sites.push(x);
                    }
                    k += 1;
                }
                sites
            })
            .collect()
    };
    let points = cartesian(&axes).into_iter().map(Point::new).collect();
    PointConfiguration::unit(window.clone(), points)
}

/// All coordinate tuples, first axis slowest.
pub(crate) fn cartesian(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::with_capacity(axes.len())];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&c| {
                    let mut p = prefix.clone();
                    p.push(c);
                    p
                })
            })
            .collect();
    }
    out
}

/// Translates every point by `z`. Torus windows wrap; free windows keep their
/// attachment and points may leave the window.
pub fn shift(config: &PointConfiguration, z: &Point) -> Result<PointConfiguration> {
    z.check_dim(config.dim())?;
    let window = config.window();
    let points = config
        .points
        .iter()
        .map(|p| {
            let moved: Vec<f64> = p.iter().zip(z.iter()).map(|(a, b)| a + b).collect();
            if window.is_torus() {
                window.wrap(&moved)
            } else {
                Point::new(moved)
            }
        })
        .collect();
    Ok(PointConfiguration {
        window: window.clone(),
        points,
        masses: config.masses.clone(),
        quantum: config.quantum,
    })
}

/// Keeps the points inside the half-open `window` and attaches it.
pub fn restrict(config: &PointConfiguration, window: &Window) -> Result<PointConfiguration> {
    if window.dim() != config.dim() {
        return Err(Error::DimensionMismatch {
            expected: config.dim(),
            found: window.dim(),
        });
    }
    let (points, masses): (Vec<Point>, Vec<u64>) = config
        .points
        .iter()
        .zip(&config.masses)
        .filter(|(p, _)| window.contains(p))
        .map(|(p, &m)| (p.clone(), m))
        .unzip();
    Ok(PointConfiguration {
        window: window.clone(),
        points,
        masses,
        quantum: config.quantum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Boundary;

    fn coords(c: &PointConfiguration) -> Vec<Vec<f64>> {
        c.points().iter().map(|p| p.coords().to_vec()).collect()
    }

    #[test]
    fn lattice_examples() {
        let w = Window::cube(1, 0.0, 4.0, Boundary::Torus).unwrap();
        let c = make_lattice(1.0, &w).unwrap();
        assert_eq!(coords(&c), vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]]);
        assert!(c.has_unit_masses());

        let w2 = Window::cube(2, 0.0, 4.0, Boundary::Torus).unwrap();
        let c = make_lattice(2.0, &w2).unwrap();
        assert_eq!(
            coords(&c),
            vec![vec![0.0, 0.0], vec![0.0, 2.0], vec![2.0, 0.0], vec![2.0, 2.0]]
        );

        let w3 = Window::cube(1, 0.0, 2.0, Boundary::Torus).unwrap();
        let c = make_lattice(0.5, &w3).unwrap();
        assert_eq!(coords(&c), vec![vec![0.0], vec![0.5], vec![1.0], vec![1.5]]);
    }

    #[test]
    fn lattice_rejects_uneven_torus() {
        let w = Window::cube(1, 0.0, 4.0, Boundary::Torus).unwrap();
        assert!(matches!(make_lattice(1.5, &w), Err(Error::NonIntegralSpacing { .. })));
        let free = Window::cube(1, 0.0, 4.0, Boundary::Free).unwrap();
        assert_eq!(make_lattice(1.5, &free).unwrap().len(), 3);
    }

    #[test]
    fn lattice_off_origin_window() {
        let w = Window::cube(1, 0.5, 3.0, Boundary::Free).unwrap();
        assert_eq!(
            coords(&make_lattice(1.0, &w).unwrap()),
            vec![vec![1.0], vec![2.0], vec![3.0]]
        );
    }

    #[test]
    fn shift_examples() {
        let w = Window::cube(1, 0.0, 4.0, Boundary::Torus).unwrap();
        let c = PointConfiguration::unit(w, vec![Point::new(vec![0.0]), Point::new(vec![3.0])]).unwrap();
        assert_eq!(shift(&c, &Point::origin(1)).unwrap(), c);
        assert_eq!(
            coords(&shift(&c, &Point::new(vec![1.5])).unwrap()),
            vec![vec![1.5], vec![0.5]]
        );

        let free = Window::cube(1, 0.0, 4.0, Boundary::Free).unwrap();
        let c = PointConfiguration::unit(free.clone(), vec![Point::new(vec![0.0]), Point::new(vec![1.0])]).unwrap();
        let s = shift(&c, &Point::new(vec![10.0])).unwrap();
        assert_eq!(coords(&s), vec![vec![10.0], vec![11.0]]);
        assert_eq!(s.window(), &free);
        assert!(shift(&c, &Point::origin(2)).is_err());
    }

    #[test]
    fn restrict_examples() {
        let big = Window::cube(1, 0.0, 4.0, Boundary::Free).unwrap();
        let c = make_lattice(1.0, &big).unwrap();
        let mid = Window::cube(1, 1.0, 2.0, Boundary::Free).unwrap();
        assert_eq!(coords(&restrict(&c, &mid).unwrap()), vec![vec![1.0], vec![2.0]]);
        assert_eq!(restrict(&c, &big).unwrap(), c);

        let c = PointConfiguration::unit(big, vec![Point::new(vec![0.999]), Point::new(vec![1.0])]).unwrap();
        let unit = Window::cube(1, 1.0, 1.0, Boundary::Free).unwrap();
        assert_eq!(coords(&restrict(&c, &unit).unwrap()), vec![vec![1.0]]);
    }

    #[test]
    fn torus_rejects_outside_points() {
        let w = Window::cube(1, 0.0, 4.0, Boundary::Torus).unwrap();
        assert!(PointConfiguration::unit(w.clone(), vec![Point::new(vec![4.0])]).is_err());
        let c = PointConfiguration::wrapped(w, vec![Point::new(vec![4.0])], vec![1], Quantum::ONE).unwrap();
        assert_eq!(coords(&c), vec![vec![0.0]]);
    }

    #[test]
    fn zero_mass_rejected() {
        let w = Window::cube(1, 0.0, 4.0, Boundary::Torus).unwrap();
        assert!(PointConfiguration::new(w, vec![Point::new(vec![1.0])], vec![0], Quantum::ONE).is_err());
    }
}
