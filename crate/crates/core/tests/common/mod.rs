#![allow(dead_code)]

use std::sync::Arc;

use rand::Rng;
use unispread::{Boundary, Measure, MeasureRef, Point, PointConfiguration, Quantum, Window};

pub fn window(d: usize, side: f64, boundary: Boundary) -> Window {
    Window::cube(d, 0.0, side, boundary).unwrap()
}

pub fn uniform_points<R: Rng>(rng: &mut R, w: &Window, n: usize) -> Vec<Point> {
    (0..n)
        .map(|_| {
            Point::new(
                w.lower()
                    .iter()
                    .map(|&lo| lo + rng.random::<f64>() * w.side())
                    .collect(),
            )
        })
        .collect()
}

pub fn unit_config<R: Rng>(rng: &mut R, w: &Window, n: usize) -> PointConfiguration {
    PointConfiguration::unit(w.clone(), uniform_points(rng, w, n)).unwrap()
}

/// A random split of `total` into `parts` positive integers.
pub fn composition<R: Rng>(rng: &mut R, total: u64, parts: usize) -> Vec<u64> {
    let mut masses = vec![1u64; parts];
    for _ in 0..total - parts as u64 {
        masses[rng.random_range(0..parts)] += 1;
    }
    masses
}

pub fn weighted_config<R: Rng>(rng: &mut R, w: &Window, total: u64) -> PointConfiguration {
    let parts = rng.random_range(1..=total as usize);
    let masses = composition(rng, total, parts);
    PointConfiguration::new(w.clone(), uniform_points(rng, w, parts), masses, Quantum::ONE).unwrap()
}

pub fn arc(config: PointConfiguration) -> MeasureRef {
    Arc::new(Measure::Points(config))
}

pub fn boundary_of(i: usize) -> Boundary {
    if i.is_multiple_of(2) {
        Boundary::Torus
    } else {
        Boundary::Free
    }
}
