//! Exact bottleneck transport between finite measures.
//!
//! For atomic measures the optimal largest displacement is one of the
//! pairwise distances, so the solver binary-searches the sorted candidate
//! list, deciding each threshold with an integral max-flow. An infeasible
//! threshold yields a Hall violator read off the minimum cut: a set of
//! sources whose mass exceeds everything reachable within the radius.
//!
//! Grid cells enter as atoms at their centers; the result then carries an
//! error bound equal to the cell half-diagonal.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowNetwork;
use crate::geometry::{GridMeasure, Metric, PointConfiguration};
use crate::quantum::Quantum;
use crate::transport::{Atom, Measure, MeasureRef, PlanRecord, TransportPlan};

/// Largest instance the permutation oracle accepts.
pub const BRUTE_FORCE_CAP: usize = 8;

/// Default cap on the quantum refinement factor when atomizing grids.
pub const DEFAULT_REFINE_CAP: u64 = 1 << 20;

/// Slack on the admission test `distance <= radius`. Distances are computed
/// in floating point, so two pairs at the same true distance can differ in
/// the last few bits; candidates closer than this are merged.
pub const RADIUS_TOL: f64 = 1e-13;

const UNBOUNDED: u64 = u64::MAX / 4;

fn within(d: f64, r: f64) -> bool {
    d <= r + RADIUS_TOL
}

/// Sorts and merges values closer than [`RADIUS_TOL`] to the first of their run.
fn merge_candidates(mut c: Vec<f64>) -> Vec<f64> {
    c.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(c.len());
    for x in c {
        match out.last() {
            Some(&head) if within(x, head) => {}
            _ => out.push(x),
        }
    }
    out
}

/// Certificate that no plan moves every source within `radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HallViolator {
    pub radius: f64,
    pub sources: Vec<usize>,
    /// Mass of all targets within `radius` of some member of `sources`.
    pub neighborhood_mass: u128,
    pub source_mass: u128,
    /// Unit of the two masses.
    pub quantum: Quantum,
}

impl HallViolator {
    /// Recounts both masses from the measures and checks the deficiency.
    pub fn recount(&self, source: &Measure, target: &Measure) -> Result<bool> {
        let metric = source.window().shared_metric(target.window())?;
        let (g, fs, ft) = Quantum::common(source.quantum(), target.quantum())?;
        let centers: Vec<Vec<f64>> = self.sources.iter().map(|&i| source.center(i)).collect();
        let src_units: u128 = self
            .sources
            .iter()
            .map(|&i| source.masses()[i] as u128 * fs as u128)
            .sum();
        let nbr_units: u128 = (0..target.len())
            .filter(|&j| {
                let y = target.center(j);
                centers.iter().any(|x| within(metric.dist(x, &y), self.radius))
            })
            .map(|j| target.masses()[j] as u128 * ft as u128)
            .sum();
        Ok(Quantum::same_amount(src_units, g, self.source_mass, self.quantum)
            && Quantum::same_amount(nbr_units, g, self.neighborhood_mass, self.quantum)
            && nbr_units < src_units)
    }
}

#[derive(Debug, Clone)]
pub enum Feasibility {
    Feasible(TransportPlan),
    Infeasible(HallViolator),
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }
}

/// Bottleneck distance with its witness plan and, when the optimum is not
/// the smallest candidate, a certificate at the next smaller candidate.
#[derive(Debug, Clone)]
pub struct DistanceResult {
    pub value: f64,
    pub witness: TransportPlan,
    pub certificate: Option<HallViolator>,
    /// Zero between atomic measures; otherwise the cell half-diagonal(s).
    pub error_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRecord {
    pub value: f64,
    pub error_bound: f64,
    pub witness: PlanRecord,
    pub certificate: Option<HallViolator>,
}

impl DistanceResult {
    pub fn to_record(&self) -> DistanceRecord {
        DistanceRecord {
            value: self.value,
            error_bound: self.error_bound,
            witness: self.witness.to_record(),
            certificate: self.certificate.clone(),
        }
    }

    /// Upper end of the certified interval for the true distance.
    pub fn upper_bound(&self) -> f64 {
        self.value + self.error_bound
    }

    /// Witness marginals, witness radius, and certificate all check out.
    pub fn is_consistent(&self) -> bool {
        if !self.witness.verify_marginals().ok {
            return false;
        }
        match self.witness.support_radius() {
            Ok(r) if r.value <= self.value + self.error_bound + 1e-12 => {}
            _ => return false,
        }
        match &self.certificate {
            None => true,
            Some(c) => {
                c.radius < self.value && c.recount(self.witness.source(), self.witness.target()).unwrap_or(false)
            }
        }
    }
}

impl Serialize for DistanceResult {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_record().serialize(s)
    }
}

/// Both measures reduced to centers and integer masses in a common quantum.
struct Instance {
    source: MeasureRef,
    target: MeasureRef,
    quantum: Quantum,
    src_units: Vec<u64>,
    tgt_units: Vec<u64>,
    total: u128,
    /// Row-major `source x target` center distances.
    dist: Vec<f64>,
}

impl Instance {
    fn new(source: &MeasureRef, target: &MeasureRef) -> Result<Self> {
        let metric = source.window().shared_metric(target.window())?;
        let (quantum, fs, ft) = Quantum::common(source.quantum(), target.quantum())?;
        let scale = |masses: &[u64], f: u64| -> Result<Vec<u64>> {
            masses
                .iter()
                .map(|&m| {
                    m.checked_mul(f)
                        .filter(|&v| v < UNBOUNDED)
                        .ok_or(Error::QuantumOverflow {
                            factor: f as u128,
                            cap: UNBOUNDED,
                        })
                })
                .collect()
        };
        let src_units = scale(source.masses(), fs)?;
        let tgt_units = scale(target.masses(), ft)?;
        let src_total: u128 = src_units.iter().map(|&m| m as u128).sum();
        let tgt_total: u128 = tgt_units.iter().map(|&m| m as u128).sum();
        if src_total != tgt_total {
            return Err(Error::MassMismatch {
                source_mass: source.describe_total(),
                target_mass: target.describe_total(),
            });
        }
        let dist = pairwise(&metric, source, target);
        Ok(Instance {
            source: source.clone(),
            target: target.clone(),
            quantum,
            src_units,
            tgt_units,
            total: src_total,
            dist,
        })
    }

    fn m(&self) -> usize {
        self.tgt_units.len()
    }

    fn candidates(&self) -> Vec<f64> {
        let m = self.m();
        let mut c: Vec<f64> = Vec::new();
        for (i, &mi) in self.src_units.iter().enumerate() {
            if mi == 0 {
                continue;
            }
            for (j, &mj) in self.tgt_units.iter().enumerate() {
                if mj > 0 {
                    c.push(self.dist[i * m + j]);
                }
            }
        }
        merge_candidates(c)
    }

    fn feasible(&self, r: f64) -> Result<Feasibility> {
        let (n, m) = (self.src_units.len(), self.m());
        let (s, t) = (0, n + m + 1);
        let mut net = FlowNetwork::new(n + m + 2);
        let mut links = Vec::new();
        for (i, &mi) in self.src_units.iter().enumerate() {
            if mi == 0 {
                continue;
            }
            net.add_edge(s, 1 + i, mi);
            for (j, &mj) in self.tgt_units.iter().enumerate() {
                if mj > 0 && within(self.dist[i * m + j], r) {
                    links.push((i, j, net.add_edge(1 + i, 1 + n + j, UNBOUNDED)));
                }
            }
        }
        for (j, &mj) in self.tgt_units.iter().enumerate() {
            if mj > 0 {
                net.add_edge(1 + n + j, t, mj);
            }
        }
        let flow = net.max_flow(s, t) as u128;
        if flow == self.total {
            let atoms = links
                .into_iter()
                .filter_map(|(i, j, key)| {
                    let f = net.flow_on(key);
                    (f > 0).then_some(Atom {
                        source: i,
                        target: j,
                        mass: f,
                    })
                })
                .collect();
            let plan = TransportPlan::new(self.source.clone(), self.target.clone(), self.quantum, atoms)?;
            return Ok(Feasibility::Feasible(plan));
        }
        let reach = net.residual_reachable(s);
        let sources: Vec<usize> = (0..n).filter(|&i| reach[1 + i] && self.src_units[i] > 0).collect();
        let neighborhood_mass = (0..m)
            .filter(|&j| self.tgt_units[j] > 0 && sources.iter().any(|&i| within(self.dist[i * m + j], r)))
            .map(|j| self.tgt_units[j] as u128)
            .sum();
        let source_mass = sources.iter().map(|&i| self.src_units[i] as u128).sum();
        Ok(Feasibility::Infeasible(HallViolator {
            radius: r,
            sources,
            neighborhood_mass,
            source_mass,
            quantum: self.quantum,
        }))
    }

    fn error_bound(&self) -> f64 {
        self.source.slack() + self.target.slack()
    }
}

fn pairwise(metric: &Metric, source: &Measure, target: &Measure) -> Vec<f64> {
    let tc: Vec<Vec<f64>> = (0..target.len()).map(|j| target.center(j)).collect();
    let mut out = Vec::with_capacity(source.len() * target.len());
    for i in 0..source.len() {
        let x = source.center(i);
        out.extend(tc.iter().map(|y| metric.dist(&x, y)));
    }
    out
}

/// Sorted distances between positively weighted elements, with runs closer
/// than [`RADIUS_TOL`] merged into their smallest member.
pub fn candidate_radii(source: &MeasureRef, target: &MeasureRef) -> Result<Vec<f64>> {
    let metric = source.window().shared_metric(target.window())?;
    let m = target.len();
    let dist = pairwise(&metric, source, target);
    let mut c: Vec<f64> = Vec::new();
    for (i, &mi) in source.masses().iter().enumerate() {
        for (j, &mj) in target.masses().iter().enumerate() {
            if mi > 0 && mj > 0 {
                c.push(dist[i * m + j]);
            }
        }
    }
    Ok(merge_candidates(c))
}

/// Decides whether every unit of mass can move at most `r`.
pub fn feasible_at(source: &MeasureRef, target: &MeasureRef, r: f64) -> Result<Feasibility> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::InvalidParameter(format!("radius must be nonnegative, got {r}")));
    }
    Instance::new(source, target)?.feasible(r)
}

/// Exact bottleneck distance between two measures of equal total mass.
pub fn bottleneck_distance(source: &MeasureRef, target: &MeasureRef) -> Result<DistanceResult> {
    let inst = Instance::new(source, target)?;
    let error_bound = inst.error_bound();
    let candidates = inst.candidates();
    if candidates.is_empty() {
        let witness = TransportPlan::new(source.clone(), target.clone(), inst.quantum, Vec::new())?;
        return Ok(DistanceResult {
            value: 0.0,
            witness,
            certificate: None,
            error_bound,
        });
    }

    // smallest feasible index in [lo, hi]; the largest candidate always is
    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    let mut best: Option<TransportPlan> = None;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        match inst.feasible(candidates[mid])? {
            Feasibility::Feasible(plan) => {
                best = Some(plan);
                hi = mid;
            }
            Feasibility::Infeasible(_) => lo = mid + 1,
        }
    }
    let witness = match best {
        Some(plan) if plan_within(&plan, &inst, candidates[lo]) => plan,
        _ => match inst.feasible(candidates[lo])? {
            Feasibility::Feasible(plan) => plan,
            Feasibility::Infeasible(_) => {
                return Err(Error::InvalidPlan("largest candidate radius is infeasible".into()))
            }
        },
    };
    let certificate = if lo > 0 {
        match inst.feasible(candidates[lo - 1])? {
            Feasibility::Infeasible(v) => Some(v),
            Feasibility::Feasible(_) => None,
        }
    } else {
        None
    };
    Ok(DistanceResult {
        value: candidates[lo],
        witness,
        certificate,
        error_bound,
    })
}

fn plan_within(plan: &TransportPlan, inst: &Instance, r: f64) -> bool {
    let m = inst.m();
    plan.atoms()
        .iter()
        .all(|a| within(inst.dist[a.source * m + a.target], r))
}

/// Bottleneck distance from points to a grid measure whose cells are split
/// into `s^d` subcells, each atomized at its center.
///
/// The value is exact for the atomized problem; the true distance lies within
/// `error_bound = (h / s) * sqrt(d) / 2` of it.
pub fn point_to_grid_distance(config: &PointConfiguration, grid: &GridMeasure, s: usize) -> Result<DistanceResult> {
    point_to_grid_distance_capped(config, grid, s, DEFAULT_REFINE_CAP)
}

pub fn point_to_grid_distance_capped(
    config: &PointConfiguration,
    grid: &GridMeasure,
    s: usize,
    refine_cap: u64,
) -> Result<DistanceResult> {
    let fine = grid.subdivide(s, refine_cap)?;
    let source: MeasureRef = Arc::new(Measure::Points(config.clone()));
    let target: MeasureRef = Arc::new(Measure::Grid(fine));
    bottleneck_distance(&source, &target)
}

/// Minimum over all bijections of the largest displacement, by enumeration.
pub fn brute_force_bottleneck(source: &PointConfiguration, target: &PointConfiguration) -> Result<f64> {
    if !source.has_unit_masses() || !target.has_unit_masses() {
        return Err(Error::NonUnitMass);
    }
    if source.len() != target.len() {
        return Err(Error::MassMismatch {
            source_mass: source.len().to_string(),
            target_mass: target.len().to_string(),
        });
    }
    let n = source.len();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::SizeCap {
            size: n,
            cap: BRUTE_FORCE_CAP,
        });
    }
    let metric = source.window().shared_metric(target.window())?;
    let d: Vec<Vec<f64>> = source
        .points()
        .iter()
        .map(|x| target.points().iter().map(|y| metric.dist(x, y)).collect())
        .collect();

    fn walk(d: &[Vec<f64>], row: usize, used: &mut [bool], worst: f64, best: &mut f64) {
        if row == d.len() {
            *best = best.min(worst);
            return;
        }
        for j in 0..d.len() {
            if !used[j] {
                used[j] = true;
                walk(d, row + 1, used, worst.max(d[row][j]), best);
                used[j] = false;
            }
        }
    }
    let mut best = if n == 0 { 0.0 } else { f64::INFINITY };
    walk(&d, 0, &mut vec![false; n], 0.0, &mut best);
    Ok(best)
}
