//! Seeded point-set families on a window.
//!
//! Randomness comes from a ChaCha stream keyed by the spec's seed, so a
//! `GeneratorSpec` serialized to JSON replays exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::cartesian;
use crate::geometry::{make_lattice, Point, PointConfiguration, Window};
use crate::quantum::Quantum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    /// `alpha Z^d` in the window.
    Lattice,
    /// Lattice sites moved uniformly inside the `epsilon`-ball.
    Perturbed,
    /// Homogeneous Poisson process of the given intensity.
    Poisson,
    /// One-dimensional cut-and-project set `alpha * floor(n * phi)`.
    Fibonacci,
    /// Lattice of density `densities[0]` on the lower half of axis 0 and
    /// `densities[1]` on the upper half (spacing along axis 0 divided by the
    /// density).
    DensityDefect,
}

fn one() -> f64 {
    1.0
}

fn default_densities() -> [f64; 2] {
    [1.0, 2.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "one")]
    pub intensity: f64,
    #[serde(default = "default_densities")]
    pub densities: [f64; 2],
    #[serde(default)]
    pub seed: u64,
    pub window: Window,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, window: Window) -> Self {
        GeneratorSpec {
            kind,
            alpha: 1.0,
            epsilon: 0.0,
            intensity: 1.0,
            densities: default_densities(),
            seed: 0,
            window,
        }
    }

    pub fn lattice(alpha: f64, window: Window) -> Self {
        GeneratorSpec {
            alpha,
            ..Self::new(GeneratorKind::Lattice, window)
        }
    }

    pub fn perturbed(alpha: f64, epsilon: f64, seed: u64, window: Window) -> Self {
        GeneratorSpec {
            alpha,
            epsilon,
            seed,
            ..Self::new(GeneratorKind::Perturbed, window)
        }
    }

    pub fn poisson(intensity: f64, seed: u64, window: Window) -> Self {
        GeneratorSpec {
            intensity,
            seed,
            ..Self::new(GeneratorKind::Poisson, window)
        }
    }

    pub fn fibonacci(alpha: f64, window: Window) -> Self {
        GeneratorSpec {
            alpha,
            ..Self::new(GeneratorKind::Fibonacci, window)
        }
    }

    pub fn density_defect(alpha: f64, densities: [f64; 2], window: Window) -> Self {
        GeneratorSpec {
            alpha,
            densities,
            ..Self::new(GeneratorKind::DensityDefect, window)
        }
    }

    /// The same family on a window of another side length.
    pub fn with_side(&self, side: f64) -> Result<Self> {
        Ok(GeneratorSpec {
            window: self.window.with_side(side)?,
            ..self.clone()
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be nonnegative, got {}", self.epsilon));
        }
        if !(self.intensity > 0.0 && self.intensity.is_finite()) {
            return bad(format!("intensity must be positive, got {}", self.intensity));
        }
        if self.densities.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return bad(format!("densities must be positive, got {:?}", self.densities));
        }
        if self.kind == GeneratorKind::Fibonacci && self.window.dim() != 1 {
            return bad(format!(
                "the fibonacci family is one-dimensional, window has d = {}",
                self.window.dim()
            ));
        }
        Ok(())
    }
}

/// Builds the configuration described by `spec`; a pure function of it.
pub fn generate(spec: &GeneratorSpec) -> Result<PointConfiguration> {
    spec.validate()?;
    let window = &spec.window;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.kind {
        GeneratorKind::Lattice => make_lattice(spec.alpha, window),
        GeneratorKind::Perturbed => {
            let sites = make_lattice(spec.alpha, window)?;
            let points = sites
                .points()
                .iter()
                .map(|p| {
                    let off = ball_sample(&mut rng, window.dim(), spec.epsilon);
                    Point::new(p.iter().zip(off).map(|(a, b)| a + b).collect())
                })
                .collect::<Vec<_>>();
            let n = points.len();
            PointConfiguration::wrapped(window.clone(), points, vec![1; n], Quantum::ONE)
        }
        GeneratorKind::Poisson => {
            let mean = spec.intensity * window.volume();
            let count = Poisson::new(mean)
                .map_err(|e| Error::InvalidParameter(format!("poisson mean {mean}: {e}")))?
                .sample(&mut rng) as usize;
            let points = (0..count)
                .map(|_| {
                    Point::new(
                        window
                            .lower()
                            .iter()
                            .map(|&lo| lo + window.side() * rng.random::<f64>())
                            .collect(),
                    )
                })
                .collect::<Vec<_>>();
            PointConfiguration::wrapped(window.clone(), points, vec![1; count], Quantum::ONE)
        }
        GeneratorKind::Fibonacci => {
            let phi = (1.0 + 5f64.sqrt()) / 2.0;
            let lo = window.lower()[0];
            let hi = lo + window.side();
            let step = spec.alpha * phi;
            let first = (lo / step).floor() as i64 - 2;
            let last = (hi / step).ceil() as i64 + 2;
            let points: Vec<Point> = (first..=last)
                .map(|n| spec.alpha * (n as f64 * phi).floor())
                .filter(|&x| x >= lo && x < hi)
                .map(|x| Point::new(vec![x]))
                .collect();
            PointConfiguration::unit(window.clone(), points)
        }
        GeneratorKind::DensityDefect => density_defect(spec),
    }
}

/// Uniform sample from the closed Euclidean ball of the given radius.
fn ball_sample<R: Rng>(rng: &mut R, dim: usize, radius: f64) -> Vec<f64> {
    if radius == 0.0 {
        return vec![0.0; dim];
    }
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
        if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            return v.into_iter().map(|x| x * radius).collect();
        }
    }
}

fn density_defect(spec: &GeneratorSpec) -> Result<PointConfiguration> {
    let window = &spec.window;
    let side = window.side();
    let half = side / 2.0;
    let lower = window.lower();
    let mut points = Vec::new();
    for (part, &rho) in spec.densities.iter().enumerate() {
        let spacing = spec.alpha / rho;
        let start = lower[0] + part as f64 * half;
        let mut axes = vec![sites(start, half, spacing, window.is_torus())?];
        for &lo in &lower[1..] {
            axes.push(sites(lo, side, spec.alpha, window.is_torus())?);
        }
        points.extend(cartesian(&axes).into_iter().map(Point::new));
    }
    let n = points.len();
    PointConfiguration::wrapped(window.clone(), points, vec![1; n], Quantum::ONE)
}

/// `spacing * Z` inside `[lo, lo + len)`; on a torus the length must be a
/// whole number of steps.
fn sites(lo: f64, len: f64, spacing: f64, torus: bool) -> Result<Vec<f64>> {
    let r = len / spacing;
    let n = r.round();
    if torus && (n < 1.0 || (r - n).abs() > 1e-9 * r.max(1.0)) {
        return Err(Error::NonIntegralSpacing { side: len, spacing });
    }
    let mut k = (lo / spacing - 1e-9).ceil() as i64;
    let mut out = Vec::new();
    loop {
        let x = spacing * k as f64;
        if x >= lo + len - 1e-9 * spacing {
            break;
        }
        out.push(x.max(lo));
        k += 1;
    }
    Ok(out)
}
