//! Return detection on sampled trajectories.
//!
//! A trajectory is sampled every `T` time units, the samples are covered by a
//! greedy net of L2 balls of radius `delta` centred on samples, and balls that
//! are visited repeatedly are reported as returns.

use rayon::prelude::*;

use crate::diagnostics::{enstrophy_from_omega, kinetic_energy};
use crate::dynamics::{EulerSolver, InitialCondition, RunAbort, RunObserver, SolverConfig, State};
use crate::error::{Error, Result};
use crate::grid::{ChannelGrid, VectorField};
use crate::ops::l2_distance;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecurrenceConfig {
    pub period: f64,
    pub samples: usize,
    /// Absolute ball radius in the L2 velocity norm.
    pub delta: f64,
}

impl RecurrenceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(Error::InvalidConfig(format!("period must be positive, got {}", self.period)));
        }
        if self.samples == 0 {
            return Err(Error::InvalidConfig("samples must be positive".into()));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::InvalidConfig(format!("delta must be positive, got {}", self.delta)));
        }
        Ok(())
    }

    pub fn sample_times(&self) -> Vec<f64> {
        (0..self.samples).map(|m| m as f64 * self.period).collect()
    }

    pub fn duration(&self) -> f64 {
        (self.samples - 1) as f64 * self.period
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub m: usize,
    pub t: f64,
    /// Reduced velocity; the mean flow is stored in `mean_u`.
    pub velocity: VectorField,
    pub mean_u: f64,
    pub energy: f64,
    pub enstrophy: f64,
}

impl Snapshot {
    /// Velocity with the mean flow added back.
    pub fn full_velocity(&self) -> VectorField {
        let u = self.velocity.u.map(|x| x + self.mean_u);
        VectorField::new(u, self.velocity.v.clone()).expect("same grid")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotStore {
    grid: ChannelGrid,
    samples: Vec<Snapshot>,
}

impl SnapshotStore {
    pub fn new(grid: ChannelGrid) -> Self {
        Self { grid, samples: Vec::new() }
    }

    /// Appends the next sample; its index must be the store length.
    pub fn push(&mut self, snapshot: Snapshot) -> Result<()> {
        self.grid.ensure_same(snapshot.velocity.grid())?;
        if snapshot.m != self.samples.len() {
            return Err(Error::IndexOutOfRange { index: snapshot.m, len: self.samples.len() });
        }
        self.samples.push(snapshot);
        Ok(())
    }

    pub fn grid(&self) -> &ChannelGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[Snapshot] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> Result<f64> {
        let a = self.get(i)?;
        let b = self.get(j)?;
        l2_distance(&a.velocity, &b.velocity)
    }

    fn get(&self, i: usize) -> Result<&Snapshot> {
        self.samples.get(i).ok_or(Error::IndexOutOfRange { index: i, len: self.samples.len() })
    }
}

/// Result of [`sample_trajectory`]; `abort` is set when the solver stopped early
/// and `store` then holds the samples taken before the failure.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub store: SnapshotStore,
    pub final_state: State,
    pub abort: Option<RunAbort>,
}

struct Sampler<'a> {
    store: SnapshotStore,
    inner: &'a mut dyn RunObserver,
}

impl RunObserver for Sampler<'_> {
    fn record(&mut self, record: &crate::diagnostics::DiagnosticsRecord) {
        self.inner.record(record);
    }

    fn sample(&mut self, index: usize, state: &State, velocity: &VectorField) {
        let snap = Snapshot {
            m: index,
            t: state.t,
            velocity: velocity.clone(),
            mean_u: state.mean_u,
            energy: kinetic_energy(velocity),
            enstrophy: enstrophy_from_omega(&state.omega),
        };
        self.store.push(snap).expect("samples arrive in order on one grid");
        self.inner.sample(index, state, velocity);
    }
}

/// Runs the solver to `(M - 1) T`, capturing the velocity at every multiple of
/// `T`. `solver.t_end` is replaced by the sampling horizon.
pub fn sample_trajectory(
    grid: ChannelGrid,
    initial: &InitialCondition,
    config: &RecurrenceConfig,
    solver: &SolverConfig,
    observer: &mut dyn RunObserver,
) -> Result<Trajectory> {
    config.validate()?;
    let solver = EulerSolver::new(grid, SolverConfig { t_end: config.duration(), ..*solver })?;
    let mut sampler = Sampler { store: SnapshotStore::new(grid), inner: observer };
    let outcome = solver.run(initial, &config.sample_times(), &mut sampler);
    let store = sampler.store;
    Ok(match outcome {
        Ok(final_state) => Trajectory { store, final_state, abort: None },
        Err(abort) => Trajectory { store, final_state: abort.last.clone(), abort: Some(abort) },
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverCenter {
    pub center_index: usize,
    pub visits: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverNet {
    pub radius: f64,
    pub centers: Vec<CoverCenter>,
    /// `assignment[m]` is the position in `centers` of the ball sample `m` joined.
    pub assignment: Vec<usize>,
}

impl CoverNet {
    pub fn max_visits(&self) -> usize {
        self.centers.iter().map(|c| c.visits.len()).max().unwrap_or(0)
    }

    pub fn n_samples(&self) -> usize {
        self.assignment.len()
    }

    /// `ceil(M / N_centers)`, the visit count some ball must reach.
    pub fn pigeonhole_bound(&self) -> usize {
        self.n_samples().div_ceil(self.centers.len().max(1))
    }

    pub fn pigeonhole_holds(&self) -> bool {
        self.max_visits() >= self.pigeonhole_bound()
    }
}

/// Greedy first-fit cover: each sample joins the earliest-created center within
/// `delta` (strictly), or becomes a new center.
pub fn build_cover(store: &SnapshotStore, delta: f64) -> Result<CoverNet> {
    if store.is_empty() {
        return Err(Error::Empty("snapshot store"));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidConfig(format!("delta must be positive, got {delta}")));
    }
    let mut centers: Vec<CoverCenter> = Vec::new();
    let mut assignment = Vec::with_capacity(store.len());
    for (m, s) in store.samples().iter().enumerate() {
        let dists: Vec<f64> = centers
            .par_iter()
            .map(|c| l2_distance(&s.velocity, &store.samples()[c.center_index].velocity))
            .collect::<Result<_>>()?;
        match dists.iter().position(|&d| d < delta) {
            Some(k) => {
                centers[k].visits.push(m);
                assignment.push(k);
            }
            None => {
                assignment.push(centers.len());
                centers.push(CoverCenter { center_index: m, visits: vec![m] });
            }
        }
    }
    Ok(CoverNet { radius: delta, centers, assignment })
}

/// Centers with at least `k` visits, in creation order.
pub fn detect_returns(net: &CoverNet, k: usize) -> Result<Vec<CoverCenter>> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("return threshold must be at least 2, got {k}")));
    }
    Ok(net.centers.iter().filter(|c| c.visits.len() >= k).cloned().collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReturnPoint {
    pub m: usize,
    pub t: f64,
    pub distance: f64,
    pub running_min: f64,
}

/// Distances of every other sample to sample `reference`, with the running minimum over `m`.
pub fn closest_return_curve(store: &SnapshotStore, reference: usize) -> Result<Vec<ReturnPoint>> {
    let r = store.get(reference)?;
    let others: Vec<&Snapshot> = store.samples().iter().filter(|s| s.m != reference).collect();
    let dists: Vec<f64> = others.par_iter().map(|s| l2_distance(&s.velocity, &r.velocity)).collect::<Result<_>>()?;
    let mut running = f64::INFINITY;
    Ok(others
        .iter()
        .zip(dists)
        .map(|(s, d)| {
            running = running.min(d);
            ReturnPoint { m: s.m, t: s.t, distance: d, running_min: running }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverAudit {
    /// Largest distance from a sample to the center of its ball.
    pub max_member_distance: f64,
    /// Smallest distance between two centers (infinite with one center).
    pub min_center_separation: f64,
    pub every_sample_assigned: bool,
}

impl CoverAudit {
    pub fn passes(&self, delta: f64) -> bool {
        self.every_sample_assigned && self.max_member_distance < delta && self.min_center_separation >= 0.5 * delta
    }
}

/// Recomputes every distance the cover invariants depend on.
pub fn audit_cover(store: &SnapshotStore, net: &CoverNet) -> Result<CoverAudit> {
    let mut seen = vec![0usize; store.len()];
    let mut pairs = Vec::new();
    for c in &net.centers {
        for &m in &c.visits {
            store.get(m)?;
            seen[m] += 1;
            pairs.push((m, c.center_index));
        }
    }
    let member: Vec<f64> = pairs.par_iter().map(|&(m, c)| store.distance(m, c)).collect::<Result<_>>()?;
    let mut center_pairs = Vec::new();
    for (i, a) in net.centers.iter().enumerate() {
        for b in &net.centers[i + 1..] {
            center_pairs.push((a.center_index, b.center_index));
        }
    }
    let sep: Vec<f64> = center_pairs.par_iter().map(|&(a, b)| store.distance(a, b)).collect::<Result<_>>()?;
    Ok(CoverAudit {
        max_member_distance: member.into_iter().fold(0.0, f64::max),
        min_center_separation: sep.into_iter().fold(f64::INFINITY, f64::min),
        every_sample_assigned: seen.iter().all(|&n| n >= 1),
    })
}

/// Whether every sample keeps `G <= 2 G(0) (1 + tolerance)`.
pub fn enstrophy_confined(store: &SnapshotStore, tolerance: f64) -> bool {
    match store.samples().first() {
        Some(first) => store.samples().iter().all(|s| s.enstrophy <= 2.0 * first.enstrophy * (1.0 + tolerance)),
        None => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ScalarField;

    fn store_of(points: &[f64]) -> SnapshotStore {
        let g = ChannelGrid::reference(4, 3).unwrap();
        let mut store = SnapshotStore::new(g);
        for (m, &p) in points.iter().enumerate() {
            let u = ScalarField::constant(g, p);
            let vel = VectorField::new(u, ScalarField::zeros(g)).unwrap();
            store
                .push(Snapshot { m, t: m as f64, velocity: vel, mean_u: 0.0, energy: 0.0, enstrophy: 1.0 })
                .unwrap();
        }
        store
    }

    // Constant fields on the reference channel have L2 distance |p - q| * pi * sqrt(2).
    const SCALE: f64 = std::f64::consts::PI * std::f64::consts::SQRT_2;

    #[test]
    fn identical_samples_form_one_ball() {
        let store = store_of(&[1.0; 6]);
        let net = build_cover(&store, 1e-3).unwrap();
        assert_eq!(net.centers.len(), 1);
        assert_eq!(net.centers[0].visits, (0..6).collect::<Vec<_>>());
        let ret = detect_returns(&net, 6).unwrap();
        assert_eq!(ret.len(), 1);
    }

    #[test]
    fn separated_clusters_split() {
        let delta = 0.1 * SCALE;
        let store = store_of(&[0.0, 1.0, 0.01, 1.02, 0.0]);
        let net = build_cover(&store, delta).unwrap();
        assert_eq!(net.centers.len(), 2);
        assert_eq!(net.centers[0].visits, vec![0, 2, 4]);
        assert_eq!(net.centers[1].visits, vec![1, 3]);
        assert_eq!(net.assignment, vec![0, 1, 0, 1, 0]);
        let audit = audit_cover(&store, &net).unwrap();
        assert!(audit.passes(delta));
    }

    #[test]
    fn first_fit_prefers_older_centers() {
        let d = SCALE;
        // 1.5 is within 1 of both 1.0 and 2.1; it must join center 1.0.
        let store = store_of(&[1.0, 2.1, 1.5]);
        let net = build_cover(&store, 1.0 * d).unwrap();
        assert_eq!(net.assignment, vec![0, 1, 0]);
    }

    #[test]
    fn boundary_distance_is_not_inside() {
        let store = store_of(&[0.0, 1.0]);
        let d = store.distance(0, 1).unwrap();
        let net = build_cover(&store, d).unwrap();
        assert_eq!(net.centers.len(), 2);
    }

    #[test]
    fn pigeonhole_example() {
        let pts: Vec<f64> = (0..200).map(|m| (m % 40) as f64).collect();
        let net = build_cover(&store_of(&pts), 0.5).unwrap();
        assert_eq!(net.centers.len(), 40);
        assert_eq!(net.pigeonhole_bound(), 5);
        assert!(!detect_returns(&net, 5).unwrap().is_empty());
        assert!(detect_returns(&net, 1).is_err());
    }

    #[test]
    fn closest_return_of_two_samples() {
        let store = store_of(&[0.0, 2.0]);
        let curve = closest_return_curve(&store, 0).unwrap();
        assert_eq!(curve.len(), 1);
        assert_eq!(curve[0].m, 1);
        assert!((curve[0].distance - 2.0 * SCALE).abs() < 1e-12);
        assert!(closest_return_curve(&store, 2).is_err());
    }

    #[test]
    fn running_minimum_is_monotone() {
        let store = store_of(&[0.0, 3.0, 1.0, 2.0, 0.5]);
        let curve = closest_return_curve(&store, 0).unwrap();
        let mins: Vec<f64> = curve.iter().map(|p| p.running_min / SCALE).collect();
        for (got, want) in mins.iter().zip([3.0, 1.0, 1.0, 0.5]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_store_and_bad_config() {
        let g = ChannelGrid::reference(4, 3).unwrap();
        assert!(build_cover(&SnapshotStore::new(g), 1.0).is_err());
        assert!(RecurrenceConfig { period: 0.0, samples: 3, delta: 1.0 }.validate().is_err());
        assert!(RecurrenceConfig { period: 1.0, samples: 0, delta: 1.0 }.validate().is_err());
        assert!(RecurrenceConfig { period: 1.0, samples: 3, delta: -1.0 }.validate().is_err());
    }

    #[test]
    fn store_rejects_out_of_order_samples() {
        let mut store = store_of(&[0.0]);
        let g = *store.grid();
        let snap = Snapshot { m: 3, t: 0.0, velocity: VectorField::zeros(g), mean_u: 0.0, energy: 0.0, enstrophy: 0.0 };
        assert!(store.push(snap).is_err());
    }
}
