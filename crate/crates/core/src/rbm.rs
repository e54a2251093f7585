//! Freeze-and-evolve random batch integration and the deterministic baseline.
//!
//! The horizon `[0, T]` is cut into windows of length `h`. On each window one
//! batch is drawn; the FEM system restricted to its active edges, with scaled
//! operators, is advanced with inner steps `dt` while every other dof keeps
//! its value from the start of the window. Interior vertices cut by the batch
//! are Dirichlet dofs holding that frozen value; boundary vertices of the full
//! graph in the active subgraph hold `g(t)`.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::decomposition::{BatchFamily, SubgraphPartition};
use crate::error::{Error, Result};
use crate::fem::{
    build_dofmap, interpolate, l2_distance_sq, l2_error_sq, restrict_to_batch, CoefficientSet, DirichletKind,
    DofMap, ElementCache, Mesh, Restriction,
};
use crate::graph::{EdgeId, MetricGraph};
use crate::timestep::{Scheme, Stepper};

/// Relative tolerance when checking that time lengths are integer multiples.
const GRID_TOLERANCE: f64 = 1e-9;

/// Graph, mesh and data with Dirichlet conditions on every boundary vertex.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub graph: MetricGraph,
    pub mesh: Mesh,
    pub dofmap: DofMap,
    pub coeffs: CoefficientSet,
    cache: ElementCache,
}

impl Discretization {
    pub fn new(graph: &MetricGraph, mesh: Mesh, coeffs: CoefficientSet) -> Result<Self> {
        let dofmap = build_dofmap(graph, mesh, &graph.boundary_vertices())?;
        let cache = ElementCache::new(graph, mesh, &coeffs)?;
        Ok(Self { graph: graph.clone(), mesh, dofmap, coeffs, cache })
    }

    pub fn n_dofs(&self) -> usize {
        self.dofmap.n_dofs()
    }

    pub fn cache(&self) -> &ElementCache {
        &self.cache
    }

    /// Nodal interpolant of `y0`, with boundary dofs set to `g(., 0)`.
    pub fn initial_state(&self) -> Vec<f64> {
        let y0 = &self.coeffs.y0;
        let mut u = interpolate(&self.graph, &self.dofmap, |e, x| y0(e, x));
        for &v in self.dofmap.dirichlet_vertices() {
            u[self.dofmap.vertex_dof(v)] = (self.coeffs.g)(v, 0.0);
        }
        u
    }

    /// `||u - reference||^2` over the whole graph.
    pub fn l2_error_sq(&self, u: &[f64], reference: impl Fn(EdgeId, f64) -> f64) -> f64 {
        l2_error_sq(&self.graph, &self.dofmap, u, reference)
    }

    pub fn l2_distance_sq(&self, u: &[f64], v: &[f64]) -> f64 {
        l2_distance_sq(&self.graph, &self.dofmap, u, v)
    }
}

/// Time grid and integration settings of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbmConfig {
    /// Window length.
    pub h: f64,
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    pub seed: u64,
    /// Snapshots are stored every `snapshot_stride` inner steps and at `T`.
    pub snapshot_stride: usize,
}

fn integer_ratio(num: f64, den: f64, what: &str) -> Result<usize> {
    let ratio = num / den;
    let rounded = ratio.round();
    if rounded < 1.0 || (ratio - rounded).abs() > GRID_TOLERANCE * rounded.max(1.0) {
        return Err(Error::ScheduleMismatch(format!("{what}: {num} is not a positive integer multiple of {den}")));
    }
    Ok(rounded as usize)
}

impl RbmConfig {
    pub fn new(h: f64, dt: f64, t_final: f64, scheme: Scheme) -> Self {
        Self { h, dt, t_final, scheme, seed: 0, snapshot_stride: 1 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    /// `(windows, steps per window)`.
    pub fn validate(&self) -> Result<(usize, usize)> {
        self.scheme.validate()?;
        if !(self.dt > 0.0 && self.h > 0.0 && self.t_final > 0.0) {
            return Err(Error::Config(format!(
                "h, dt and T must be positive (h={}, dt={}, T={})",
                self.h, self.dt, self.t_final
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::Config("snapshot stride must be at least 1".into()));
        }
        let windows = integer_ratio(self.t_final, self.h, "T = (K + 1) h")?;
        let steps = integer_ratio(self.h, self.dt, "h = m dt")?;
        Ok((windows, steps))
    }

    pub fn total_steps(&self) -> Result<usize> {
        let (w, s) = self.validate()?;
        Ok(w * s)
    }

    /// A hash of every field, bit-exact on the floats.
    pub fn hash_value(&self) -> u64 {
        let mut hasher = DefaultHasher::new();
        self.h.to_bits().hash(&mut hasher);
        self.dt.to_bits().hash(&mut hasher);
        self.t_final.to_bits().hash(&mut hasher);
        self.scheme.label().hash(&mut hasher);
        self.scheme.theta().map(f64::to_bits).hash(&mut hasher);
        self.seed.hash(&mut hasher);
        self.snapshot_stride.hash(&mut hasher);
        hasher.finish()
    }
}

/// The batch drawn on each window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampledSchedule {
    pub omega: Vec<usize>,
    pub seed: u64,
}

/// `windows` i.i.d. draws from `probs` with a seeded ChaCha8 stream.
pub fn sample_schedule(windows: usize, probs: &[f64], seed: u64) -> Result<SampledSchedule> {
    let dist = WeightedIndex::new(probs).map_err(|e| Error::BadProbabilityVector(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(SampledSchedule { omega: (0..windows).map(|_| dist.sample(&mut rng)).collect(), seed })
}

/// Step indices kept in a trajectory: multiples of the stride and the last step.
pub fn snapshot_steps(total_steps: usize, stride: usize) -> Vec<usize> {
    let mut steps: Vec<usize> = (0..=total_steps).step_by(stride.max(1)).collect();
    if steps.last() != Some(&total_steps) {
        steps.push(total_steps);
    }
    steps
}

/// Cost counters of one run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunStats {
    /// Largest active system over the windows, in dofs.
    pub max_active_dofs: usize,
    pub mean_active_dofs: f64,
    /// Largest factorization used, in stored entries.
    pub max_factor_entries: usize,
    /// Distinct systems factored for this run.
    pub factorizations: usize,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub schedule: Option<SampledSchedule>,
    pub stats: RunStats,
    pub config_hash: u64,
}

impl Trajectory {
    pub fn state_at(&self, t: f64) -> Result<&[f64]> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= GRID_TOLERANCE * t.abs().max(1.0))
            .map(|k| self.states[k].as_slice())
            .ok_or(Error::GridMismatch(t))
    }
}

/// Load on the listed edges at time `t`, in the given local numbering.
fn load(disc: &Discretization, local: &[usize], edges: &[(EdgeId, f64)], t: f64, out: &mut [f64]) {
    disc.cache.load_local(&disc.dofmap, &disc.coeffs.f, t, local, edges, out);
}

/// Deterministic full-graph integration.
pub fn run_full(disc: &Discretization, config: &RbmConfig) -> Result<Trajectory> {
    let total = config.total_steps()?;
    let n = disc.n_dofs();
    let identity: Vec<usize> = (0..n).collect();
    let edges: Vec<(EdgeId, f64)> = disc.graph.edge_ids().map(|e| (e, 1.0)).collect();
    let ops = disc.cache.assemble_local(&disc.dofmap, &identity, n, &edges);
    let stepper = Stepper::new(config.scheme, &ops, config.dt, disc.dofmap.constrained_mask())?;

    let keep = snapshot_steps(total, config.snapshot_stride);
    let mut times = Vec::with_capacity(keep.len());
    let mut states = Vec::with_capacity(keep.len());
    let mut u = disc.initial_state();
    times.push(0.0);
    states.push(u.clone());
    let mut next_keep = 1;

    let mut f_now = vec![0.0; n];
    let mut f_next = vec![0.0; n];
    let mut next = vec![0.0; n];
    if stepper.needs_current_load() {
        load(disc, &identity, &edges, 0.0, &mut f_now);
    }
    for s in 1..=total {
        let t = s as f64 * config.dt;
        load(disc, &identity, &edges, t, &mut f_next);
        for &v in disc.dofmap.dirichlet_vertices() {
            next[disc.dofmap.vertex_dof(v)] = (disc.coeffs.g)(v, t);
        }
        stepper.advance(&u, &f_now, &f_next, &mut next);
        std::mem::swap(&mut u, &mut next);
        std::mem::swap(&mut f_now, &mut f_next);
        if next_keep < keep.len() && keep[next_keep] == s {
            times.push(t);
            states.push(u.clone());
            next_keep += 1;
        }
    }
    let stats = RunStats {
        max_active_dofs: n,
        mean_active_dofs: n as f64,
        max_factor_entries: stepper.factor_entries(),
        factorizations: 1,
    };
    Ok(Trajectory { times, states, schedule: None, stats, config_hash: config.hash_value() })
}

/// The factored system of one batch.
#[derive(Debug, Clone)]
pub struct BatchSystem {
    pub restriction: Restriction,
    /// Active edges with their scaling factors.
    pub edges: Vec<(EdgeId, f64)>,
    pub stepper: Stepper,
}

/// Per-batch systems for a fixed scheme and step, shared by all realizations.
#[derive(Debug, Clone)]
pub struct RbmEngine {
    probs: Vec<f64>,
    systems: Vec<BatchSystem>,
    scheme: Scheme,
    dt: f64,
}

impl RbmEngine {
    pub fn new(
        disc: &Discretization,
        partition: &SubgraphPartition,
        family: &BatchFamily,
        scheme: Scheme,
        dt: f64,
    ) -> Result<Self> {
        let report = crate::decomposition::check_vertex_coverage(&disc.graph, partition, family.batches())?;
        if !report.holds {
            let names: Vec<_> = report.violations.iter().map(|&v| disc.graph.vertex_name(v)).collect();
            log::warn!("no batch makes these vertices interior: {}", names.join(", "));
        }
        let systems = (0..family.len())
            .map(|j| {
                let view = family.view(&disc.graph, partition, j)?;
                let zeta = family.zeta(&disc.graph, partition, j)?;
                let restriction = restrict_to_batch(&disc.graph, &disc.dofmap, &view);
                let edges: Vec<(EdgeId, f64)> = view.active_edges.iter().map(|&e| (e, zeta.edge_factor(e))).collect();
                let ops = disc.cache.assemble_local(&disc.dofmap, restriction.local_map(), restriction.n_dofs(), &edges);
                let mut mask = vec![false; restriction.n_dofs()];
                for &(k, _, _) in &restriction.dirichlet {
                    mask[k] = true;
                }
                let stepper = Stepper::new(scheme, &ops, dt, &mask)?;
                Ok(BatchSystem { restriction, edges, stepper })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { probs: family.probs().to_vec(), systems, scheme, dt })
    }

    pub fn len(&self) -> usize {
        self.systems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.systems.is_empty()
    }

    pub fn system(&self, j: usize) -> &BatchSystem {
        &self.systems[j]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// One realization with the schedule drawn from `config.seed`.
    pub fn run(&self, disc: &Discretization, config: &RbmConfig) -> Result<Trajectory> {
        let (windows, _) = config.validate()?;
        let schedule = sample_schedule(windows, &self.probs, config.seed)?;
        self.run_schedule(disc, config, schedule)
    }

    /// One realization along a given schedule.
    pub fn run_schedule(&self, disc: &Discretization, config: &RbmConfig, schedule: SampledSchedule) -> Result<Trajectory> {
        let (windows, steps) = config.validate()?;
        if config.scheme != self.scheme || (config.dt - self.dt).abs() > GRID_TOLERANCE * self.dt {
            return Err(Error::Config("run configuration differs from the engine's scheme or step".into()));
        }
        if schedule.omega.len() != windows {
            return Err(Error::ScheduleMismatch(format!(
                "{} batch draws for {windows} windows",
                schedule.omega.len()
            )));
        }
        if let Some(&j) = schedule.omega.iter().find(|&&j| j >= self.systems.len()) {
            return Err(Error::BadBatchIndex { index: j, len: self.systems.len() });
        }
        let total = windows * steps;
        let keep = snapshot_steps(total, config.snapshot_stride);
        let mut times = Vec::with_capacity(keep.len());
        let mut states = Vec::with_capacity(keep.len());
        let mut u = disc.initial_state();
        times.push(0.0);
        states.push(u.clone());
        let mut next_keep = 1;

        let mut used = vec![false; self.systems.len()];
        let mut active_sum = 0usize;
        let mut stats = RunStats::default();
        for (k, &j) in schedule.omega.iter().enumerate() {
            let sys = &self.systems[j];
            let r = &sys.restriction;
            used[j] = true;
            active_sum += r.n_dofs();
            stats.max_active_dofs = stats.max_active_dofs.max(r.n_dofs());
            stats.max_factor_entries = stats.max_factor_entries.max(sys.stepper.factor_entries());

            let local = r.local_map();
            let mut x = r.extract(&u);
            let mut next = x.clone();
            let mut f_now = vec![0.0; r.n_dofs()];
            let mut f_next = vec![0.0; r.n_dofs()];
            let start = k * steps;
            if sys.stepper.needs_current_load() {
                load(disc, local, &sys.edges, start as f64 * config.dt, &mut f_now);
            }
            for s in start + 1..=start + steps {
                let t = s as f64 * config.dt;
                load(disc, local, &sys.edges, t, &mut f_next);
                for &(i, v, kind) in &r.dirichlet {
                    if kind == DirichletKind::Exterior {
                        next[i] = (disc.coeffs.g)(v, t);
                    }
                }
                sys.stepper.advance(&x, &f_now, &f_next, &mut next);
                std::mem::swap(&mut x, &mut next);
                std::mem::swap(&mut f_now, &mut f_next);
                if next_keep < keep.len() && keep[next_keep] == s {
                    r.inject(&x, &mut u);
                    times.push(t);
                    states.push(u.clone());
                    next_keep += 1;
                }
            }
            r.inject(&x, &mut u);
        }
        stats.mean_active_dofs = active_sum as f64 / windows as f64;
        stats.factorizations = used.iter().filter(|&&b| b).count();
        Ok(Trajectory { times, states, schedule: Some(schedule), stats, config_hash: config.hash_value() })
    }
}

/// Builds the engine and runs a single realization.
pub fn run_rbm(
    disc: &Discretization,
    partition: &SubgraphPartition,
    family: &BatchFamily,
    config: &RbmConfig,
) -> Result<Trajectory> {
    RbmEngine::new(disc, partition, family, config.scheme, config.dt)?.run(disc, config)
}

/// What errors are measured against.
pub enum Reference<'a> {
    /// A closed-form solution `y(e, x, t)`.
    Exact(&'a (dyn Fn(EdgeId, f64, f64) -> f64 + Sync)),
    /// A discrete trajectory on the same time grid.
    Baseline(&'a Trajectory),
}

impl Reference<'_> {
    fn distance_sq(&self, disc: &Discretization, k: usize, t: f64, z: &[f64]) -> f64 {
        match self {
            Reference::Exact(y) => disc.l2_error_sq(z, |e, x| y(e, x, t)),
            Reference::Baseline(traj) => disc.l2_distance_sq(z, &traj.states[k]),
        }
    }
}

/// Sup-in-time Monte-Carlo error statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorEstimate {
    /// `sup_t E ||y - z||^2`.
    pub error1: f64,
    /// `sup_t ||y - E z||^2`.
    pub error2: f64,
    /// `sup_t Var ||y - z||` (population variance over realizations).
    pub variance: f64,
    pub realizations: usize,
    pub times: Vec<f64>,
    pub mean_sq_error: Vec<f64>,
    pub mean_error_sq: Vec<f64>,
}

/// Streaming accumulator over realizations on a common time grid.
#[derive(Debug, Clone)]
pub struct ErrorAccumulator {
    times: Vec<f64>,
    sum_sq: Vec<f64>,
    sum_norm: Vec<f64>,
    sum_norm_sq: Vec<f64>,
    sum_state: Vec<Vec<f64>>,
    count: usize,
}

impl ErrorAccumulator {
    pub fn new(times: Vec<f64>, n_dofs: usize) -> Self {
        let m = times.len();
        Self {
            times,
            sum_sq: vec![0.0; m],
            sum_norm: vec![0.0; m],
            sum_norm_sq: vec![0.0; m],
            sum_state: vec![vec![0.0; n_dofs]; m],
            count: 0,
        }
    }

    fn check_grid(&self, traj: &Trajectory) -> Result<()> {
        if traj.times.len() != self.times.len() {
            return Err(Error::GridMismatch(traj.times.last().copied().unwrap_or(f64::NAN)));
        }
        for (&a, &b) in traj.times.iter().zip(&self.times) {
            if (a - b).abs() > GRID_TOLERANCE * b.abs().max(1.0) {
                return Err(Error::GridMismatch(a));
            }
        }
        Ok(())
    }

    /// Squared errors of one trajectory at every stored time.
    pub fn squared_errors(&self, disc: &Discretization, traj: &Trajectory, reference: &Reference<'_>) -> Result<Vec<f64>> {
        self.check_grid(traj)?;
        if let Reference::Baseline(base) = reference {
            self.check_grid(base)?;
        }
        Ok(traj
            .times
            .iter()
            .zip(&traj.states)
            .enumerate()
            .map(|(k, (&t, z))| reference.distance_sq(disc, k, t, z))
            .collect())
    }

    /// Adds a trajectory with its precomputed squared errors.
    pub fn push(&mut self, traj: &Trajectory, squared_errors: &[f64]) -> Result<()> {
        self.check_grid(traj)?;
        for (k, &e) in squared_errors.iter().enumerate() {
            self.sum_sq[k] += e;
            let norm = e.sqrt();
            self.sum_norm[k] += norm;
            self.sum_norm_sq[k] += norm * norm;
            for (s, z) in self.sum_state[k].iter_mut().zip(&traj.states[k]) {
                *s += z;
            }
        }
        self.count += 1;
        Ok(())
    }

    pub fn add(&mut self, disc: &Discretization, traj: &Trajectory, reference: &Reference<'_>) -> Result<()> {
        let errs = self.squared_errors(disc, traj, reference)?;
        self.push(traj, &errs)
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish(&self, disc: &Discretization, reference: &Reference<'_>) -> Result<ErrorEstimate> {
        if self.count == 0 {
            return Err(Error::Config("no realizations to aggregate".into()));
        }
        let r = self.count as f64;
        let mean_sq_error: Vec<f64> = self.sum_sq.iter().map(|s| s / r).collect();
        let mean_error_sq: Vec<f64> = self
            .times
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                let mean: Vec<f64> = self.sum_state[k].iter().map(|s| s / r).collect();
                reference.distance_sq(disc, k, t, &mean)
            })
            .collect();
        let variance = self
            .sum_norm
            .iter()
            .zip(&self.sum_norm_sq)
            .map(|(s, s2)| {
                let m = s / r;
                (s2 / r - m * m).max(0.0)
            })
            .fold(0.0, f64::max);
        Ok(ErrorEstimate {
            error1: mean_sq_error.iter().copied().fold(0.0, f64::max),
            error2: mean_error_sq.iter().copied().fold(0.0, f64::max),
            variance,
            realizations: self.count,
            times: self.times.clone(),
            mean_sq_error,
            mean_error_sq,
        })
    }
}

/// Error statistics of a set of trajectories sharing one time grid.
pub fn estimate_errors(disc: &Discretization, runs: &[Trajectory], reference: &Reference<'_>) -> Result<ErrorEstimate> {
    let first = runs.first().ok_or_else(|| Error::Config("no realizations to aggregate".into()))?;
    let mut acc = ErrorAccumulator::new(first.times.clone(), disc.n_dofs());
    for traj in runs {
        acc.add(disc, traj, reference)?;
    }
    acc.finish(disc, reference)
}

/// Outcome of a Monte-Carlo batch of realizations.
#[derive(Debug, Clone)]
pub struct MonteCarloResult {
    pub estimate: ErrorEstimate,
    pub stats: Vec<RunStats>,
    /// Wall time of each realization, in seconds.
    pub wall_times: Vec<f64>,
    pub seeds: Vec<u64>,
}

/// Runs `realizations` independent trajectories with seeds `master ^ r` in
/// parallel and aggregates their errors in realization order.
pub fn monte_carlo(
    disc: &Discretization,
    engine: &RbmEngine,
    config: &RbmConfig,
    realizations: usize,
    reference: &Reference<'_>,
) -> Result<MonteCarloResult> {
    if realizations == 0 {
        return Err(Error::Config("at least one realization is required".into()));
    }
    let total = config.total_steps()?;
    let times: Vec<f64> = snapshot_steps(total, config.snapshot_stride).iter().map(|&s| s as f64 * config.dt).collect();
    let mut acc = ErrorAccumulator::new(times, disc.n_dofs());
    let seeds: Vec<u64> = (0..realizations as u64).map(|r| config.seed ^ r).collect();
    let chunk = rayon::current_num_threads().max(1);
    let mut stats = Vec::with_capacity(realizations);
    let mut wall_times = Vec::with_capacity(realizations);
    for group in seeds.chunks(chunk) {
        let runs = group
            .par_iter()
            .map(|&seed| {
                let start = std::time::Instant::now();
                let traj = engine.run(disc, &config.with_seed(seed))?;
                let elapsed = start.elapsed().as_secs_f64();
                let errs = acc.squared_errors(disc, &traj, reference)?;
                Ok((traj, errs, elapsed))
            })
            .collect::<Result<Vec<_>>>()?;
        for (traj, errs, elapsed) in runs {
            acc.push(&traj, &errs)?;
            stats.push(traj.stats);
            wall_times.push(elapsed);
        }
    }
    Ok(MonteCarloResult { estimate: acc.finish(disc, reference)?, stats, wall_times, seeds })
}

/// Empirical frequency of each batch index in a schedule.
pub fn batch_frequencies(schedule: &SampledSchedule, n_batches: usize) -> Vec<f64> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &j in &schedule.omega {
        *counts.entry(j).or_default() += 1;
    }
    let total = schedule.omega.len().max(1) as f64;
    (0..n_batches).map(|j| counts.get(&j).copied().unwrap_or(0) as f64 / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{demo_partition, option_one, option_two};
    use crate::graph::demo_graph;
    use std::sync::Arc;

    fn problem(n: usize) -> Discretization {
        let g = demo_graph();
        let coeffs = CoefficientSet::heat(1.0)
            .with_a(|_, x| x * (x - 1.0) + 0.5)
            .with_b(|_, x| (std::f64::consts::PI * x).sin() / 2.0)
            .with_p(|_, x| (std::f64::consts::PI * x).sin())
            .with_source(|e, x, t| (e.0 as f64 + x).cos() * (3.0 * t).sin())
            .with_boundary(|v, t| (v.0 as f64 * t).sin())
            .with_initial(|e, x| (e.0 as f64 * x).sin() * x * (1.0 - x));
        Discretization::new(&g, Mesh::new(n).unwrap(), coeffs).unwrap()
    }

    #[test]
    fn config_validation() {
        let c = RbmConfig::new(0.002, 0.001, 0.1, Scheme::ImplicitEuler);
        assert_eq!(c.validate().unwrap(), (50, 2));
        assert!(matches!(RbmConfig::new(0.0015, 0.001, 0.1, Scheme::ImplicitEuler).validate(), Err(Error::ScheduleMismatch(_))));
        assert!(matches!(RbmConfig::new(0.03, 0.01, 0.1, Scheme::ImplicitEuler).validate(), Err(Error::ScheduleMismatch(_))));
        assert!(RbmConfig::new(0.01, 0.01, 0.1, Scheme::ImplicitEuler).with_stride(0).validate().is_err());
        assert_eq!(snapshot_steps(10, 4), vec![0, 4, 8, 10]);
        assert_eq!(snapshot_steps(8, 4), vec![0, 4, 8]);
    }

    #[test]
    fn schedule_sampling() {
        let s = sample_schedule(100, &[1.0], 9).unwrap();
        assert!(s.omega.iter().all(|&j| j == 0));
        let a = sample_schedule(1000, &[0.2; 5], 42).unwrap();
        assert_eq!(a, sample_schedule(1000, &[0.2; 5], 42).unwrap());
        assert_ne!(a, sample_schedule(1000, &[0.2; 5], 43).unwrap());
        let draws = 100_000;
        let big = sample_schedule(draws, &[0.2; 5], 7).unwrap();
        let sigma = (0.2 * 0.8 / draws as f64).sqrt();
        for f in batch_frequencies(&big, 5) {
            assert!((f - 0.2).abs() < 3.0 * sigma, "{f}");
        }
    }

    #[test]
    fn zero_data_gives_zero_trajectory() {
        let g = demo_graph();
        let disc = Discretization::new(&g, Mesh::new(6).unwrap(), CoefficientSet::heat(1.0)).unwrap();
        let traj = run_full(&disc, &RbmConfig::new(0.01, 0.01, 0.1, Scheme::CrankNicolson)).unwrap();
        assert!(traj.states.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn single_batch_reproduces_full_solve() {
        let disc = problem(8);
        let part = demo_partition(&disc.graph).unwrap();
        let single = BatchFamily::single(&part);
        for scheme in [Scheme::ImplicitEuler, Scheme::CrankNicolson, Scheme::Theta(0.75), Scheme::SemiImplicitEuler] {
            let config = RbmConfig::new(0.02, 0.01, 0.2, scheme).with_seed(5);
            let full = run_full(&disc, &config).unwrap();
            let rbm = run_rbm(&disc, &part, &single, &config).unwrap();
            assert_eq!(full.times, rbm.times);
            for (a, b) in full.states.iter().zip(&rbm.states) {
                for (x, y) in a.iter().zip(b) {
                    assert!((x - y).abs() <= 1e-12, "{scheme}");
                }
            }
            assert_eq!(rbm.stats.max_active_dofs, disc.n_dofs());
        }
    }

    #[test]
    fn freeze_interface_and_exterior_invariants() {
        let disc = problem(6);
        let part = demo_partition(&disc.graph).unwrap();
        let fam = option_one(&part).unwrap();
        let engine = RbmEngine::new(&disc, &part, &fam, Scheme::ImplicitEuler, 0.01).unwrap();
        // Store every step so each window's endpoints are visible.
        let config = RbmConfig::new(0.03, 0.01, 0.3, Scheme::ImplicitEuler).with_seed(11);
        let traj = engine.run(&disc, &config).unwrap();
        let schedule = traj.schedule.clone().unwrap();
        for (k, &j) in schedule.omega.iter().enumerate() {
            let sys = engine.system(j);
            let start = &traj.states[3 * k];
            for inner in 1..=3 {
                let state = &traj.states[3 * k + inner];
                let t = traj.times[3 * k + inner];
                for d in 0..disc.n_dofs() {
                    if sys.restriction.local_of(d).is_none() {
                        assert_eq!(state[d].to_bits(), start[d].to_bits(), "frozen dof {d} in window {k}");
                    }
                }
                for &(_, v, kind) in &sys.restriction.dirichlet {
                    let d = disc.dofmap.vertex_dof(v);
                    match kind {
                        DirichletKind::Interface => assert_eq!(state[d].to_bits(), start[d].to_bits()),
                        DirichletKind::Exterior => assert_eq!(state[d], (disc.coeffs.g)(v, t)),
                    }
                }
            }
        }
    }

    #[test]
    fn seed_determinism() {
        let disc = problem(5);
        let part = demo_partition(&disc.graph).unwrap();
        let fam = option_two(&part).unwrap();
        let config = RbmConfig::new(0.02, 0.01, 0.2, Scheme::CrankNicolson).with_seed(77);
        let a = run_rbm(&disc, &part, &fam, &config).unwrap();
        let b = run_rbm(&disc, &part, &fam, &config).unwrap();
        assert_eq!(a.schedule, b.schedule);
        for (x, y) in a.states.iter().flatten().zip(b.states.iter().flatten()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(a.config_hash, b.config_hash);
    }

    #[test]
    fn error_estimates_degenerate_cases() {
        let disc = problem(5);
        let part = demo_partition(&disc.graph).unwrap();
        let config = RbmConfig::new(0.02, 0.01, 0.2, Scheme::ImplicitEuler);
        let full = run_full(&disc, &config).unwrap();
        let est = estimate_errors(&disc, std::slice::from_ref(&full), &Reference::Baseline(&full)).unwrap();
        assert!(est.error1 <= 1e-20 && est.error2 <= 1e-20 && est.variance == 0.0);

        let fam = option_two(&part).unwrap();
        let one = run_rbm(&disc, &part, &fam, &config.with_seed(3)).unwrap();
        let est = estimate_errors(&disc, std::slice::from_ref(&one), &Reference::Baseline(&full)).unwrap();
        let direct = one
            .states
            .iter()
            .zip(&full.states)
            .map(|(z, y)| disc.l2_distance_sq(z, y))
            .fold(0.0, f64::max);
        assert!((est.error1 - direct).abs() <= 1e-15 * direct.max(1.0));
        assert!((est.error2 - direct).abs() <= 1e-15 * direct.max(1.0));
        assert_eq!(est.variance, 0.0);

        let coarse = RbmConfig::new(0.04, 0.01, 0.2, Scheme::ImplicitEuler).with_stride(4);
        let other = run_full(&disc, &coarse).unwrap();
        assert!(matches!(
            estimate_errors(&disc, &[other], &Reference::Baseline(&full)),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn monte_carlo_matches_sequential_estimate() {
        let disc = problem(5);
        let part = demo_partition(&disc.graph).unwrap();
        let fam = option_two(&part).unwrap();
        let config = RbmConfig::new(0.02, 0.01, 0.2, Scheme::ImplicitEuler).with_seed(100);
        let engine = RbmEngine::new(&disc, &part, &fam, config.scheme, config.dt).unwrap();
        let zero: Arc<dyn Fn(EdgeId, f64, f64) -> f64 + Send + Sync> = Arc::new(|_, _, _| 0.0);
        let reference = Reference::Exact(&*zero);
        let mc = monte_carlo(&disc, &engine, &config, 7, &reference).unwrap();
        let runs: Vec<_> = (0..7u64).map(|r| engine.run(&disc, &config.with_seed(100 ^ r)).unwrap()).collect();
        let seq = estimate_errors(&disc, &runs, &reference).unwrap();
        assert_eq!(mc.estimate, seq);
        assert_eq!(mc.seeds, (0..7u64).map(|r| 100 ^ r).collect::<Vec<_>>());
    }
}
