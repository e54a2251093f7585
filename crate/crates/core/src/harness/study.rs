use crate::decomposition::{BatchFamily, SubgraphPartition};
use crate::error::{Error, Result};
use crate::fem::{CoefficientSet, Mesh};
use crate::graph::{EdgeId, MetricGraph};
use crate::manufactured::ManufacturedSolution;
use crate::rbm::{monte_carlo, run_full, Discretization, RbmConfig, RbmEngine, Reference};
use crate::timestep::Scheme;

use super::bench::{benchmark, peak_rss_mb};
use super::record::ExperimentRecord;

/// Where the data come from and what errors are measured against.
#[derive(Debug, Clone)]
pub enum Problem {
    /// Errors against the closed-form solution.
    Manufactured(ManufacturedSolution),
    /// Errors against the full-graph solve with the same scheme and step.
    Custom(CoefficientSet),
}

impl Problem {
    pub fn coefficients(&self) -> CoefficientSet {
        match self {
            Problem::Manufactured(sol) => sol.derive_data(),
            Problem::Custom(c) => c.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub graph: MetricGraph,
    pub partition: SubgraphPartition,
    pub family: BatchFamily,
    pub problem: Problem,
    pub schemes: Vec<Scheme>,
    pub dt: f64,
    pub t_final: f64,
    pub h_list: Vec<f64>,
    pub realizations: usize,
    pub seed: u64,
    pub nodes_per_edge: usize,
    pub snapshot_stride: usize,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::Config("at least one realization is required".into()));
        }
        if self.schemes.is_empty() || self.h_list.is_empty() {
            return Err(Error::Config("a study needs at least one scheme and one h".into()));
        }
        for &scheme in &self.schemes {
            for &h in &self.h_list {
                self.config(scheme, h).validate()?;
            }
        }
        Ok(())
    }

    fn config(&self, scheme: Scheme, h: f64) -> RbmConfig {
        RbmConfig::new(h, self.dt, self.t_final, scheme).with_seed(self.seed).with_stride(self.snapshot_stride)
    }
}

/// The deterministic full-graph run of one scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRecord {
    pub scheme: String,
    pub dt: f64,
    /// `sup_t ||y - y_h||^2` when an exact solution is known.
    pub error: Option<f64>,
    pub wall_time_s: f64,
    pub dofs: usize,
    pub factor_entries: usize,
    pub peak_rss_mb: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct StudyOutput {
    /// Sorted by `(scheme, h)`.
    pub records: Vec<ExperimentRecord>,
    pub baselines: Vec<BaselineRecord>,
}

/// For each scheme: one full-graph baseline, then `R` realizations per `h`.
pub fn run_study(spec: &ExperimentSpec) -> Result<StudyOutput> {
    spec.validate()?;
    let disc = Discretization::new(&spec.graph, Mesh::new(spec.nodes_per_edge)?, spec.problem.coefficients())?;
    let exact_fn = match &spec.problem {
        Problem::Manufactured(sol) => {
            let sol = sol.clone();
            Some(move |e: EdgeId, x: f64, t: f64| sol.exact(e, x, t))
        }
        Problem::Custom(_) => None,
    };
    let mut records = Vec::new();
    let mut baselines = Vec::new();
    for &scheme in &spec.schemes {
        let base_config = spec.config(scheme, spec.dt);
        let (baseline, bench) = benchmark(|| run_full(&disc, &base_config));
        let baseline = baseline?;
        let error = exact_fn.as_ref().map(|y| {
            baseline
                .times
                .iter()
                .zip(&baseline.states)
                .map(|(&t, u)| disc.l2_error_sq(u, |e, x| y(e, x, t)))
                .fold(0.0, f64::max)
        });
        baselines.push(BaselineRecord {
            scheme: scheme.label().to_string(),
            dt: spec.dt,
            error,
            wall_time_s: bench.wall_seconds,
            dofs: disc.n_dofs(),
            factor_entries: baseline.stats.max_factor_entries,
            peak_rss_mb: bench.peak_rss_mb,
        });

        let (engine, setup) = benchmark(|| RbmEngine::new(&disc, &spec.partition, &spec.family, scheme, spec.dt));
        let engine = engine?;
        for &h in &spec.h_list {
            let config = spec.config(scheme, h);
            let reference = match &exact_fn {
                Some(y) => Reference::Exact(y),
                None => Reference::Baseline(&baseline),
            };
            let mc = monte_carlo(&disc, &engine, &config, spec.realizations, &reference)?;
            let r = spec.realizations as f64;
            let avg_time = mc.wall_times.iter().sum::<f64>() / r + setup.wall_seconds / r;
            records.push(ExperimentRecord {
                scheme: scheme.label().to_string(),
                h,
                dt: spec.dt,
                realizations: spec.realizations,
                error1: mc.estimate.error1,
                error2: mc.estimate.error2,
                variance: mc.estimate.variance,
                avg_time_s: avg_time,
                mem_proxy: mc.stats.iter().map(|s| s.max_active_dofs).max().unwrap_or(0),
                peak_rss_mb: peak_rss_mb(),
                seed: spec.seed,
            });
        }
    }
    records.sort_by(|a, b| a.scheme.cmp(&b.scheme).then(a.h.total_cmp(&b.h)));
    Ok(StudyOutput { records, baselines })
}
