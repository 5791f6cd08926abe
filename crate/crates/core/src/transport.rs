//! Transport plans between finite measures.
//!
//! A plan is a finite list of atoms `(source id, target id, mass)` with exact
//! integer masses in the plan's own quantum. Marginals are checked against
//! indicator test functions of single elements, which for atomic and
//! piecewise-uniform measures is the same as checking them against every
//! compactly supported continuous function.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Extent, GridMeasure, Metric, PointConfiguration, Window};
use crate::quantum::Quantum;

#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    Points(PointConfiguration),
    Grid(GridMeasure),
}

pub type MeasureRef = Arc<Measure>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    Points,
    Grid,
}

impl Measure {
    pub fn kind(&self) -> MeasureKind {
        match self {
            Measure::Points(_) => MeasureKind::Points,
            Measure::Grid(_) => MeasureKind::Grid,
        }
    }

    /// Number of addressable elements (points or cells).
    pub fn len(&self) -> usize {
        match self {
            Measure::Points(c) => c.len(),
            Measure::Grid(g) => g.cell_count(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn masses(&self) -> &[u64] {
        match self {
            Measure::Points(c) => c.masses(),
            Measure::Grid(g) => g.cells(),
        }
    }

    pub fn quantum(&self) -> Quantum {
        match self {
            Measure::Points(c) => c.quantum(),
            Measure::Grid(g) => g.quantum(),
        }
    }

    pub fn window(&self) -> &Window {
        match self {
            Measure::Points(c) => c.window(),
            Measure::Grid(g) => g.window(),
        }
    }

    pub fn total_units(&self) -> u128 {
        self.masses().iter().map(|&m| m as u128).sum()
    }

    pub fn describe_total(&self) -> String {
        self.quantum().describe(self.total_units())
    }

    /// Representative location: the point itself or the cell center.
    pub fn center(&self, id: usize) -> Vec<f64> {
        match self {
            Measure::Points(c) => c.points()[id].coords().to_vec(),
            Measure::Grid(g) => g.cell_center(id),
        }
    }

    pub fn extent(&self, id: usize) -> Extent {
        match self {
            Measure::Points(c) => Extent::Atom(c.points()[id].coords().to_vec()),
            Measure::Grid(g) => g.cell_extent(id),
        }
    }

    /// Largest distance between a representative location and a point of
    /// the element it stands for.
    pub fn slack(&self) -> f64 {
        match self {
            Measure::Points(_) => 0.0,
            Measure::Grid(g) => g.half_diagonal(),
        }
    }

    pub fn as_points(&self) -> Option<&PointConfiguration> {
        match self {
            Measure::Points(c) => Some(c),
            Measure::Grid(_) => None,
        }
    }

    pub fn as_grid(&self) -> Option<&GridMeasure> {
        match self {
            Measure::Grid(g) => Some(g),
            Measure::Points(_) => None,
        }
    }
}

impl From<PointConfiguration> for Measure {
    fn from(c: PointConfiguration) -> Self {
        Measure::Points(c)
    }
}

impl From<GridMeasure> for Measure {
    fn from(g: GridMeasure) -> Self {
        Measure::Grid(g)
    }
}

/// Same object, or the same measure element by element.
pub fn same_measure(a: &MeasureRef, b: &MeasureRef) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub source: usize,
    pub target: usize,
    pub mass: u64,
}

#[derive(Debug, Clone)]
pub struct TransportPlan {
    source: MeasureRef,
    target: MeasureRef,
    quantum: Quantum,
    atoms: Vec<Atom>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Source,
    Target,
}

/// First element whose marginal disagrees with its mass.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarginalViolation {
    pub side: Side,
    pub id: usize,
    /// Element mass, in units of `quantum`.
    pub expected: u128,
    /// Mass the plan moves through the element, in units of `quantum`.
    pub found: u128,
    pub quantum: Quantum,
}

impl MarginalViolation {
    /// Positive when the plan moves too little mass through the element.
    pub fn deficit(&self) -> i128 {
        self.expected as i128 - self.found as i128
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarginalCheck {
    pub ok: bool,
    pub violation: Option<MarginalViolation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanRadius {
    pub value: f64,
    /// `(source id, target id)` of the first atom attaining the value.
    pub atom: Option<(usize, usize)>,
}

/// Wire form: `{source_kind, target_kind, quantum_num, quantum_den, atoms}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub source_kind: MeasureKind,
    pub target_kind: MeasureKind,
    pub quantum_num: u64,
    pub quantum_den: u64,
    pub atoms: Vec<[u64; 3]>,
}

impl TransportPlan {
    /// Checks ids and masses; marginals are left to [`TransportPlan::verify_marginals`].
    pub fn new(source: MeasureRef, target: MeasureRef, quantum: Quantum, atoms: Vec<Atom>) -> Result<Self> {
        if source.window().dim() != target.window().dim() {
            return Err(Error::DimensionMismatch {
                expected: source.window().dim(),
                found: target.window().dim(),
            });
        }
        for a in &atoms {
            if a.source >= source.len() {
                return Err(Error::OutOfRange {
                    index: a.source,
                    bound: source.len(),
                });
            }
            if a.target >= target.len() {
                return Err(Error::OutOfRange {
                    index: a.target,
                    bound: target.len(),
                });
            }
            if a.mass == 0 {
                return Err(Error::InvalidPlan(format!(
                    "atom ({}, {}) carries zero mass",
                    a.source, a.target
                )));
            }
        }
        Ok(TransportPlan {
            source,
            target,
            quantum,
            atoms,
        })
    }

    /// Each element sent to itself.
    pub fn identity(measure: MeasureRef) -> Self {
        let atoms = measure
            .masses()
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0)
            .map(|(i, &m)| Atom {
                source: i,
                target: i,
                mass: m,
            })
            .collect();
        let quantum = measure.quantum();
        TransportPlan {
            source: measure.clone(),
            target: measure,
            quantum,
            atoms,
        }
    }

    pub fn source(&self) -> &MeasureRef {
        &self.source
    }

    pub fn target(&self) -> &MeasureRef {
        &self.target
    }

    pub fn quantum(&self) -> Quantum {
        self.quantum
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// The same coupling read backwards.
    pub fn transpose(&self) -> TransportPlan {
        TransportPlan {
            source: self.target.clone(),
            target: self.source.clone(),
            quantum: self.quantum,
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    source: a.target,
                    target: a.source,
                    mass: a.mass,
                })
                .collect(),
        }
    }

    /// Per-element mass moved out of each source id, in plan units.
    pub fn source_marginal(&self) -> Vec<u128> {
        let mut sums = vec![0u128; self.source.len()];
        for a in &self.atoms {
            sums[a.source] += a.mass as u128;
        }
        sums
    }

    /// Per-element mass delivered to each target id, in plan units.
    pub fn target_marginal(&self) -> Vec<u128> {
        let mut sums = vec![0u128; self.target.len()];
        for a in &self.atoms {
            sums[a.target] += a.mass as u128;
        }
        sums
    }

    /// Exact integer check of both marginals. Never fails; reports the first
    /// offending element (sources first, then targets, by id).
    pub fn verify_marginals(&self) -> MarginalCheck {
        let sides = [
            (Side::Source, &self.source, self.source_marginal()),
            (Side::Target, &self.target, self.target_marginal()),
        ];
        for (side, measure, sums) in sides {
            let mq = measure.quantum();
            for (id, (&mass, &found)) in measure.masses().iter().zip(&sums).enumerate() {
                if !Quantum::same_amount(mass as u128, mq, found, self.quantum) {
                    let violation = match Quantum::common(mq, self.quantum) {
                        Ok((g, fm, fp)) => MarginalViolation {
                            side,
                            id,
                            expected: mass as u128 * fm as u128,
                            found: found * fp as u128,
                            quantum: g,
                        },
                        Err(_) => MarginalViolation {
                            side,
                            id,
                            expected: mass as u128,
                            found,
                            quantum: mq,
                        },
                    };
                    return MarginalCheck {
                        ok: false,
                        violation: Some(violation),
                    };
                }
            }
        }
        MarginalCheck {
            ok: true,
            violation: None,
        }
    }

    pub fn metric(&self) -> Result<Metric> {
        self.source.window().shared_metric(self.target.window())
    }

    /// Largest displacement over the atoms. Point-to-point atoms use the
    /// distance of the two points; atoms touching a grid cell use the
    /// farthest point of the closed cell, so the value bounds the true
    /// supremum from above.
    pub fn support_radius(&self) -> Result<PlanRadius> {
        let metric = self.metric()?;
        let mut best = PlanRadius { value: 0.0, atom: None };
        for a in &self.atoms {
            let r = atom_displacement(&metric, &self.source, a.source, &self.target, a.target);
            if best.atom.is_none() || r > best.value {
                best = PlanRadius {
                    value: r,
                    atom: Some((a.source, a.target)),
                };
            }
        }
        Ok(best)
    }

    pub fn to_record(&self) -> PlanRecord {
        PlanRecord {
            source_kind: self.source.kind(),
            target_kind: self.target.kind(),
            quantum_num: self.quantum.num(),
            quantum_den: self.quantum.den(),
            atoms: self
                .atoms
                .iter()
                .map(|a| [a.source as u64, a.target as u64, a.mass])
                .collect(),
        }
    }

    /// Rebuilds a plan from its wire form against the measures it references.
    pub fn from_record(record: &PlanRecord, source: MeasureRef, target: MeasureRef) -> Result<Self> {
        if record.source_kind != source.kind() || record.target_kind != target.kind() {
            return Err(Error::MeasureMismatch(format!(
                "record couples {:?} to {:?}, measures are {:?} and {:?}",
                record.source_kind,
                record.target_kind,
                source.kind(),
                target.kind()
            )));
        }
        let quantum = Quantum::new(record.quantum_num, record.quantum_den)?;
        let atoms = record
            .atoms
            .iter()
            .map(|&[s, t, m]| Atom {
                source: s as usize,
                target: t as usize,
                mass: m,
            })
            .collect();
        TransportPlan::new(source, target, quantum, atoms)
    }

    fn require_valid(&self, what: &str) -> Result<()> {
        match self.verify_marginals().violation {
            None => Ok(()),
            Some(v) => Err(Error::InvalidPlan(format!(
                "{what}: {:?} id {} expected {} but plan moves {} (quantum {})",
                v.side, v.id, v.expected, v.found, v.quantum
            ))),
        }
    }
}

pub(crate) fn atom_displacement(metric: &Metric, src: &Measure, s: usize, tgt: &Measure, t: usize) -> f64 {
    match (src, tgt) {
        (Measure::Points(a), Measure::Points(b)) => metric.dist(&a.points()[s], &b.points()[t]),
        _ => metric.max_distance(&src.extent(s), &tgt.extent(t)),
    }
}

/// Glues `ab: A -> B` and `bc: B -> C` along the shared middle measure.
///
/// Mass arriving at each middle element is split greedily, in increasing id
/// order on both sides, across the mass leaving it.
pub fn compose(ab: &TransportPlan, bc: &TransportPlan) -> Result<TransportPlan> {
    if !same_measure(&ab.target, &bc.source) {
        return Err(Error::MeasureMismatch(
            "target of the first plan is not the source of the second".into(),
        ));
    }
    ab.require_valid("first plan")?;
    bc.require_valid("second plan")?;
    let (quantum, fa, fb) = Quantum::common(ab.quantum, bc.quantum)?;

    let middle = ab.target.len();
    let mut incoming: Vec<Vec<(usize, u128)>> = vec![Vec::new(); middle];
    let mut outgoing: Vec<Vec<(usize, u128)>> = vec![Vec::new(); middle];
    for a in &ab.atoms {
        incoming[a.target].push((a.source, a.mass as u128 * fa as u128));
    }
    for a in &bc.atoms {
        outgoing[a.source].push((a.target, a.mass as u128 * fb as u128));
    }

    let mut glued: BTreeMap<(usize, usize), u128> = BTreeMap::new();
    for (mut ins, mut outs) in incoming.into_iter().zip(outgoing) {
        ins.sort_by_key(|&(id, _)| id);
        outs.sort_by_key(|&(id, _)| id);
        let (mut i, mut o) = (0, 0);
        while i < ins.len() && o < outs.len() {
            let moved = ins[i].1.min(outs[o].1);
            *glued.entry((ins[i].0, outs[o].0)).or_default() += moved;
            ins[i].1 -= moved;
            outs[o].1 -= moved;
            if ins[i].1 == 0 {
                i += 1;
            }
            if outs[o].1 == 0 {
                o += 1;
            }
        }
    }
    TransportPlan::new(ab.source.clone(), bc.target.clone(), quantum, collect_atoms(glued)?)
}

fn collect_atoms(map: BTreeMap<(usize, usize), u128>) -> Result<Vec<Atom>> {
    map.into_iter()
        .filter(|&(_, m)| m > 0)
        .map(|((source, target), m)| {
            let mass = u64::try_from(m).map_err(|_| Error::QuantumOverflow {
                factor: m,
                cap: u64::MAX,
            })?;
            Ok(Atom { source, target, mass })
        })
        .collect()
}

/// Sends each point wholly to one cell: `sum_i m_i delta(a_i) (x) uniform(cell_i)`.
///
/// `assignment[i]` is the linear cell id of point `i`. The mass assigned to
/// each cell must equal that cell's mass.
pub fn product_plan_to_cells(
    config: &PointConfiguration,
    assignment: &[usize],
    grid: &GridMeasure,
) -> Result<TransportPlan> {
    if assignment.len() != config.len() {
        return Err(Error::InvalidParameter(format!(
            "assignment covers {} points, configuration has {}",
            assignment.len(),
            config.len()
        )));
    }
    config.window().shared_metric(grid.window())?;
    let (quantum, fc, fg) = Quantum::common(config.quantum(), grid.quantum())?;
    let mut assigned = vec![0u128; grid.cell_count()];
    for (&cell, &m) in assignment.iter().zip(config.masses()) {
        if cell >= grid.cell_count() {
            return Err(Error::OutOfRange {
                index: cell,
                bound: grid.cell_count(),
            });
        }
        assigned[cell] += m as u128 * fc as u128;
    }
    for (cell, (&got, &mass)) in assigned.iter().zip(grid.cells()).enumerate() {
        let expected = mass as u128 * fg as u128;
        if got != expected {
            return Err(Error::CellMassMismatch {
                cell,
                assigned: got,
                expected,
            });
        }
    }
    let atoms = assignment
        .iter()
        .zip(config.masses())
        .enumerate()
        .map(|(i, (&cell, &m))| Atom {
            source: i,
            target: cell,
            mass: m * fc,
        })
        .collect();
    TransportPlan::new(
        Arc::new(Measure::Points(config.clone())),
        Arc::new(Measure::Grid(grid.clone())),
        quantum,
        atoms,
    )
}

/// The sum of `count` plans sharing a source, carried with scale `1 / count`.
#[derive(Debug, Clone)]
pub struct AveragedPlan {
    /// Atoms hold the unnormalized sum; the `1 / count` lives in the quantum.
    pub plan: TransportPlan,
    pub count: usize,
}

impl AveragedPlan {
    pub fn scale(&self) -> Quantum {
        Quantum::new(1, self.count as u64).expect("count is positive")
    }
}

/// Cesaro-style average of plans with a common source.
///
/// The target is the averaged measure, stored as the integer sum of the
/// input targets with quantum divided by the number of plans: identical
/// targets merge, grids on one geometry add cell-wise, and point targets on
/// one window are concatenated (target ids offset plan by plan).
pub fn average_plans(plans: &[TransportPlan], common_source: &MeasureRef) -> Result<AveragedPlan> {
    let Some(first) = plans.first() else {
        return Err(Error::InvalidParameter("cannot average an empty list of plans".into()));
    };
    if let Some(i) = plans.iter().position(|p| !same_measure(&p.source, common_source)) {
        return Err(Error::MeasureMismatch(format!(
            "plan {i} has a different source measure"
        )));
    }
    let n = plans.len() as u64;

    let mut plan_q = first.quantum;
    for p in &plans[1..] {
        plan_q = Quantum::common(plan_q, p.quantum)?.0;
    }
    let plan_factors = plans
        .iter()
        .map(|p| Ok(Quantum::common(p.quantum, plan_q)?.1))
        .collect::<Result<Vec<u64>>>()?;

    let (target, offsets) = sum_targets(plans)?;
    let target_q = target.quantum();
    let target = Arc::new(rescale_quantum(target, target_q.divided_by(n)?));

    let mut glued: BTreeMap<(usize, usize), u128> = BTreeMap::new();
    for ((p, &f), &off) in plans.iter().zip(&plan_factors).zip(&offsets) {
        for a in &p.atoms {
            *glued.entry((a.source, off + a.target)).or_default() += a.mass as u128 * f as u128;
        }
    }
    let plan = TransportPlan::new(
        common_source.clone(),
        target,
        plan_q.divided_by(n)?,
        collect_atoms(glued)?,
    )?;
    Ok(AveragedPlan {
        plan,
        count: plans.len(),
    })
}

fn rescale_quantum(measure: Measure, quantum: Quantum) -> Measure {
    match measure {
        Measure::Points(c) => Measure::Points(
            PointConfiguration::new(c.window().clone(), c.points().to_vec(), c.masses().to_vec(), quantum)
                .expect("rescaling keeps a valid configuration"),
        ),
        Measure::Grid(g) => Measure::Grid(
            GridMeasure::new(
                g.window().clone(),
                g.origin().to_vec(),
                g.cell_size(),
                g.cells().to_vec(),
                quantum,
            )
            .expect("rescaling keeps a valid grid"),
        ),
    }
}

/// Integer sum of the targets (in a common quantum) and per-plan id offsets.
fn sum_targets(plans: &[TransportPlan]) -> Result<(Measure, Vec<usize>)> {
    let targets: Vec<&MeasureRef> = plans.iter().map(|p| &p.target).collect();
    let mut q = targets[0].quantum();
    for t in &targets[1..] {
        q = Quantum::common(q, t.quantum())?.0;
    }
    let factors = targets
        .iter()
        .map(|t| Ok(Quantum::common(t.quantum(), q)?.1))
        .collect::<Result<Vec<u64>>>()?;
    let overflow = || Error::QuantumOverflow {
        factor: plans.len() as u128,
        cap: u64::MAX,
    };

    let merged_masses = |len: usize| -> Result<Vec<u64>> {
        let mut masses = vec![0u64; len];
        for (t, &f) in targets.iter().zip(&factors) {
            for (slot, &m) in masses.iter_mut().zip(t.masses()) {
                *slot = m
                    .checked_mul(f)
                    .and_then(|v| slot.checked_add(v))
                    .ok_or_else(overflow)?;
            }
        }
        Ok(masses)
    };

    if targets.iter().all(|t| same_measure(t, targets[0])) {
        let masses = merged_masses(targets[0].len())?;
        let merged = match &**targets[0] {
            Measure::Points(c) => Measure::Points(PointConfiguration::new(
                c.window().clone(),
                c.points().to_vec(),
                masses,
                q,
            )?),
            Measure::Grid(g) => Measure::Grid(GridMeasure::new(
                g.window().clone(),
                g.origin().to_vec(),
                g.cell_size(),
                masses,
                q,
            )?),
        };
        return Ok((merged, vec![0; plans.len()]));
    }

    match &**targets[0] {
        Measure::Grid(g0) => {
            for t in &targets {
                let g = t
                    .as_grid()
                    .ok_or_else(|| Error::MeasureMismatch("mixed target kinds".into()))?;
                if g.window() != g0.window() || g.origin() != g0.origin() || g.cell_size() != g0.cell_size() {
                    return Err(Error::MeasureMismatch("grid targets on different geometries".into()));
                }
            }
            let masses = merged_masses(g0.cell_count())?;
            let grid = GridMeasure::new(g0.window().clone(), g0.origin().to_vec(), g0.cell_size(), masses, q)?;
            Ok((Measure::Grid(grid), vec![0; plans.len()]))
        }
        Measure::Points(c0) => {
            let mut points = Vec::new();
            let mut masses = Vec::new();
            let mut offsets = Vec::with_capacity(plans.len());
            for (t, &f) in targets.iter().zip(&factors) {
                let c = t
                    .as_points()
                    .ok_or_else(|| Error::MeasureMismatch("mixed target kinds".into()))?;
                c0.window().shared_metric(c.window())?;
                offsets.push(points.len());
                points.extend_from_slice(c.points());
                for &m in c.masses() {
                    masses.push(m.checked_mul(f).ok_or_else(overflow)?);
                }
            }
            Ok((
                Measure::Points(PointConfiguration::new(c0.window().clone(), points, masses, q)?),
                offsets,
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_lattice, shift, Boundary, Point};

    fn line(points: &[f64], boundary: Boundary, side: f64) -> MeasureRef {
        let w = Window::cube(1, 0.0, side, boundary).unwrap();
        let pts = points.iter().map(|&x| Point::new(vec![x])).collect();
        Arc::new(Measure::Points(PointConfiguration::unit(w, pts).unwrap()))
    }

    fn single(src: &MeasureRef, tgt: &MeasureRef) -> TransportPlan {
        TransportPlan::new(
            src.clone(),
            tgt.clone(),
            Quantum::ONE,
            vec![Atom {
                source: 0,
                target: 0,
                mass: 1,
            }],
        )
        .unwrap()
    }

    #[test]
    fn identity_is_valid_with_zero_radius() {
        let m = line(&[0.0, 1.5, 3.0], Boundary::Torus, 4.0);
        let id = TransportPlan::identity(m);
        assert!(id.verify_marginals().ok);
        assert_eq!(id.support_radius().unwrap().value, 0.0);
    }

    #[test]
    fn missing_atom_reports_deficit() {
        let m = line(&[0.0, 1.0], Boundary::Torus, 4.0);
        let plan = TransportPlan::new(
            m.clone(),
            m,
            Quantum::ONE,
            vec![Atom {
                source: 0,
                target: 0,
                mass: 1,
            }],
        )
        .unwrap();
        let check = plan.verify_marginals();
        assert!(!check.ok);
        let v = check.violation.unwrap();
        assert_eq!((v.side, v.id, v.deficit()), (Side::Source, 1, 1));
    }

    #[test]
    fn single_atom_radius() {
        let a = line(&[0.0], Boundary::Free, 10.0);
        let b = line(&[3.0], Boundary::Free, 10.0);
        let r = single(&a, &b).support_radius().unwrap();
        assert_eq!(r.value, 3.0);
        assert_eq!(r.atom, Some((0, 0)));
    }

    #[test]
    fn mixed_windows_rejected() {
        let a = line(&[0.0], Boundary::Free, 10.0);
        let b = line(&[3.0], Boundary::Torus, 10.0);
        assert!(matches!(single(&a, &b).support_radius(), Err(Error::WindowMismatch(_))));
        let c = line(&[3.0], Boundary::Free, 12.0);
        assert!(single(&a, &c).support_radius().is_err());
    }

    #[test]
    fn point_to_own_cell_radius() {
        for d in 1..=3usize {
            let w = Window::cube(d, 0.0, 4.0, Boundary::Free).unwrap();
            let m = vec![2.0; d];
            let config = PointConfiguration::unit(w.clone(), vec![Point::new(m.clone())]).unwrap();
            let origin = GridMeasure::centered_origin(&w, 1.0);
            let mut cells = vec![0u64; 4usize.pow(d as u32)];
            let grid0 = GridMeasure::new(w.clone(), origin.clone(), 1.0, cells.clone(), Quantum::ONE).unwrap();
            let k = grid0.locate(&m).unwrap();
            cells[k] = 1;
            let grid = GridMeasure::new(w, origin, 1.0, cells, Quantum::ONE).unwrap();
            let plan = product_plan_to_cells(&config, &[k], &grid).unwrap();
            assert!(plan.verify_marginals().ok);
            // corner enumeration of Q(m, 1)
            let corner = (0..1u32 << d)
                .map(|mask| {
                    (0..d)
                        .map(|j| if mask >> j & 1 == 1 { 0.5f64 } else { -0.5 })
                        .map(|t| t * t)
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(0.0, f64::max);
            assert!((plan.support_radius().unwrap().value - corner).abs() < 1e-15);
        }
    }

    #[test]
    fn compose_with_identity() {
        let a = line(&[0.0, 1.0, 2.0], Boundary::Free, 8.0);
        let b = line(&[0.5, 2.5, 1.0], Boundary::Free, 8.0);
        let p = TransportPlan::new(
            a.clone(),
            b.clone(),
            Quantum::ONE,
            vec![
                Atom {
                    source: 0,
                    target: 0,
                    mass: 1,
                },
                Atom {
                    source: 1,
                    target: 2,
                    mass: 1,
                },
                Atom {
                    source: 2,
                    target: 1,
                    mass: 1,
                },
            ],
        )
        .unwrap();
        let left = compose(&TransportPlan::identity(a), &p).unwrap();
        let right = compose(&p, &TransportPlan::identity(b)).unwrap();
        let mut want = p.atoms().to_vec();
        want.sort_by_key(|a| (a.source, a.target));
        assert_eq!(left.atoms(), want.as_slice());
        assert_eq!(right.atoms(), want.as_slice());
    }

    #[test]
    fn compose_one_point_chain() {
        let a = line(&[0.0], Boundary::Free, 8.0);
        let b = line(&[1.0], Boundary::Free, 8.0);
        let c = line(&[3.0], Boundary::Free, 8.0);
        let ac = compose(&single(&a, &b), &single(&b, &c)).unwrap();
        assert_eq!(
            ac.atoms(),
            &[Atom {
                source: 0,
                target: 0,
                mass: 1
            }]
        );
        assert_eq!(ac.support_radius().unwrap().value, 3.0);
        assert!(matches!(
            compose(&single(&a, &b), &single(&c, &a)),
            Err(Error::MeasureMismatch(_))
        ));
    }

    #[test]
    fn compose_splits_mass() {
        let w = Window::cube(1, 0.0, 8.0, Boundary::Free).unwrap();
        let heavy = Arc::new(Measure::Points(
            PointConfiguration::new(w, vec![Point::new(vec![1.0])], vec![2], Quantum::ONE).unwrap(),
        ));
        let two = line(&[0.0, 2.0], Boundary::Free, 8.0);
        let gather = TransportPlan::new(
            two.clone(),
            heavy.clone(),
            Quantum::ONE,
            vec![
                Atom {
                    source: 0,
                    target: 0,
                    mass: 1,
                },
                Atom {
                    source: 1,
                    target: 0,
                    mass: 1,
                },
            ],
        )
        .unwrap();
        let spread = gather.transpose();
        let round = compose(&gather, &spread).unwrap();
        assert!(round.verify_marginals().ok);
        assert_eq!(round.atoms().len(), 2);
        assert!(round.support_radius().unwrap().value <= 2.0);
    }

    #[test]
    fn product_plan_on_unit_lattice() {
        let w = Window::cube(1, 0.0, 4.0, Boundary::Torus).unwrap();
        let lat = make_lattice(1.0, &w).unwrap();
        let grid =
            GridMeasure::uniform(w.clone(), GridMeasure::centered_origin(&w, 1.0), 1.0, 1, Quantum::ONE).unwrap();
        let assignment: Vec<usize> = lat.points().iter().map(|p| grid.locate(p).unwrap()).collect();
        let plan = product_plan_to_cells(&lat, &assignment, &grid).unwrap();
        assert!(plan.verify_marginals().ok);
        assert_eq!(plan.support_radius().unwrap().value, 0.5);

        // mass 1 sent into a mass-2 cell
        let heavy = GridMeasure::new(w.clone(), vec![0.0], 2.0, vec![2, 2], Quantum::ONE).unwrap();
        match product_plan_to_cells(&lat, &[0, 1, 1, 1], &heavy) {
            Err(Error::CellMassMismatch { cell, .. }) => assert_eq!(cell, 0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn product_plan_single_heavy_point() {
        let w = Window::cube(1, 0.0, 2.0, Boundary::Free).unwrap();
        let c = PointConfiguration::new(w.clone(), vec![Point::new(vec![0.25])], vec![2], Quantum::ONE).unwrap();
        let g = GridMeasure::new(w, vec![0.0], 1.0, vec![2, 0], Quantum::ONE).unwrap();
        let plan = product_plan_to_cells(&c, &[0], &g).unwrap();
        assert_eq!(
            plan.atoms(),
            &[Atom {
                source: 0,
                target: 0,
                mass: 2
            }]
        );
        assert_eq!(plan.support_radius().unwrap().value, 0.75);
    }

    #[test]
    fn averaging_examples() {
        let m = line(&[0.0, 1.0, 2.5], Boundary::Torus, 4.0);
        let id = TransportPlan::identity(m.clone());
        let one = average_plans(std::slice::from_ref(&id), &m).unwrap();
        assert_eq!(one.scale(), Quantum::ONE);
        assert_eq!(one.plan.atoms(), id.atoms());

        let two = average_plans(&[id.clone(), id.clone()], &m).unwrap();
        assert_eq!(two.plan.quantum(), Quantum::new(1, 2).unwrap());
        assert!(two.plan.atoms().iter().all(|a| a.source == a.target && a.mass == 2));
        assert!(two.plan.verify_marginals().ok);
        assert_eq!(two.scale(), Quantum::new(1, 2).unwrap());

        let other = line(&[0.0, 1.0, 2.5], Boundary::Torus, 4.0);
        let foreign = TransportPlan::identity(line(&[0.5, 1.0, 2.5], Boundary::Torus, 4.0));
        assert!(average_plans(&[id.clone(), foreign], &other).is_err());
    }

    #[test]
    fn averaging_shift_plans_takes_max_radius() {
        let w = Window::cube(1, 0.0, 8.0, Boundary::Torus).unwrap();
        let lat = make_lattice(1.0, &w).unwrap();
        let src: MeasureRef = Arc::new(Measure::Points(lat.clone()));
        // gamma_m pairs site i with site i + m, shifted by m' = m + 0.25 m
        let plans: Vec<TransportPlan> = [-1.0f64, 0.0, 1.0]
            .iter()
            .map(|&m| {
                let shifted = shift(&lat, &Point::new(vec![m * 1.25])).unwrap();
                let tgt: MeasureRef = Arc::new(Measure::Points(shifted));
                let atoms = (0..8)
                    .map(|i| Atom {
                        source: i,
                        target: i,
                        mass: 1,
                    })
                    .collect();
                TransportPlan::new(src.clone(), tgt, Quantum::ONE, atoms).unwrap()
            })
            .collect();
        let radii: Vec<f64> = plans.iter().map(|p| p.support_radius().unwrap().value).collect();
        let avg = average_plans(&plans, &src).unwrap();
        assert!(avg.plan.verify_marginals().ok);
        assert_eq!(avg.plan.target().len(), 24);
        assert_eq!(
            avg.plan.support_radius().unwrap().value,
            radii.iter().cloned().fold(0.0, f64::max)
        );
        assert_eq!(avg.plan.support_radius().unwrap().value, 1.25);
    }

    #[test]
    fn plan_record_round_trip() {
        let m = line(&[0.0, 1.0], Boundary::Torus, 4.0);
        let id = TransportPlan::identity(m.clone());
        let rec = id.to_record();
        let json = serde_json::to_string(&rec).unwrap();
        assert_eq!(
            json,
            r#"{"source_kind":"points","target_kind":"points","quantum_num":1,"quantum_den":1,"atoms":[[0,0,1],[1,1,1]]}"#
        );
        let back = TransportPlan::from_record(&serde_json::from_str(&json).unwrap(), m.clone(), m).unwrap();
        assert_eq!(back.atoms(), id.atoms());
    }
}
