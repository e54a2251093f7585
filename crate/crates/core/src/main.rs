use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use metric_rbm::decomposition::{check_vertex_coverage, verify_unbiased, BatchFamily, EdgeField, SubgraphPartition};
use metric_rbm::error::{Error, Result};
use metric_rbm::fem::{CoefficientSet, Mesh};
use metric_rbm::graph::{EdgeId, MetricGraph};
use metric_rbm::harness::{benchmark, emit_csv, fit_slope, run_study, write_csv, ExperimentSpec, Problem};
use metric_rbm::io::{batches_from_spec, demo_batch_spec, demo_graph_spec, graph_from_spec, load_batches, load_graph};
use metric_rbm::manufactured::{ManufacturedSolution, SpatialCoefficients};
use metric_rbm::rbm::{batch_frequencies, run_full, Discretization, RbmConfig, RbmEngine, Reference, Trajectory};
use metric_rbm::timestep::Scheme;

#[derive(Parser)]
#[command(name = "metric-rbm", version, about = "Random batch solver for parabolic equations on metric graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Deterministic full-graph solve.
    Solve(Common),
    /// One random batch realization per scheme and window length.
    Rbm {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        random: Random,
    },
    /// Monte-Carlo error study over window lengths, written as CSV.
    Study {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        random: Random,
        #[arg(long, default_value_t = 20)]
        realizations: usize,
    },
    /// Validate a graph and batch family.
    Check {
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        batches: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    /// Graph JSON file; the built-in demo graph when absent.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Batch JSON file, or `builtin:option1` / `builtin:option2`.
    #[arg(long)]
    batches: Option<String>,
    /// One or more of ie, cn, theta, siem.
    #[arg(long, value_delimiter = ',', default_value = "ie")]
    scheme: Vec<String>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long = "t-final", default_value_t = 0.996)]
    t_final: f64,
    /// Interior nodes per edge.
    #[arg(long, default_value_t = 100)]
    nodes_per_edge: usize,
    #[arg(long = "snapshot-stride", default_value_t = 1)]
    snapshot_stride: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Random {
    /// Window lengths.
    #[arg(long, value_delimiter = ',', default_value = "0.002")]
    h: Vec<f64>,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
}

struct Setup {
    graph: MetricGraph,
    problem: Problem,
}

impl Setup {
    fn load(path: Option<&Path>) -> Result<Self> {
        let loaded = match path {
            Some(p) => load_graph(p)?,
            None => graph_from_spec(&demo_graph_spec())?,
        };
        let problem = match &loaded.quartic {
            Some((alpha, beta)) => Problem::Manufactured(ManufacturedSolution::new(
                &loaded.graph,
                SpatialCoefficients::standard(),
                alpha,
                beta,
            )?),
            None => Problem::Custom(CoefficientSet::heat(1.0).with_source(|_, _, _| 1.0)),
        };
        Ok(Self { graph: loaded.graph, problem })
    }

    fn exact(&self) -> Option<impl Fn(EdgeId, f64, f64) -> f64 + Sync + '_> {
        match &self.problem {
            Problem::Manufactured(sol) => Some(move |e, x, t| sol.exact(e, x, t)),
            Problem::Custom(_) => None,
        }
    }

    fn batches(&self, arg: Option<&str>, demo_default: bool) -> Result<(SubgraphPartition, BatchFamily)> {
        let loaded = match arg {
            Some("builtin:option1") => batches_from_spec(&self.graph, &demo_batch_spec(1)?)?,
            Some("builtin:option2") => batches_from_spec(&self.graph, &demo_batch_spec(2)?)?,
            Some(path) => load_batches(&self.graph, Path::new(path))?,
            None if demo_default => batches_from_spec(&self.graph, &demo_batch_spec(2)?)?,
            None => return Err(Error::Config("--batches is required with a custom graph".into())),
        };
        Ok((loaded.partition, loaded.family))
    }
}

fn schemes(common: &Common) -> Result<Vec<Scheme>> {
    common.scheme.iter().map(|s| Scheme::from_name(s, common.theta)).collect()
}

#[derive(Serialize)]
struct ErrorRow {
    scheme: String,
    h: Option<f64>,
    t: f64,
    error_sq: f64,
}

fn error_rows(disc: &Discretization, traj: &Trajectory, reference: &Reference<'_>) -> Vec<(f64, f64)> {
    traj.times
        .iter()
        .zip(&traj.states)
        .enumerate()
        .map(|(k, (&t, u))| {
            let e = match reference {
                Reference::Exact(y) => disc.l2_error_sq(u, |e, x| y(e, x, t)),
                Reference::Baseline(base) => disc.l2_distance_sq(u, &base.states[k]),
            };
            (t, e)
        })
        .collect()
}

fn write_rows(path: &Path, rows: &[ErrorRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn solve(common: &Common) -> Result<()> {
    let setup = Setup::load(common.graph.as_deref())?;
    let disc = Discretization::new(&setup.graph, Mesh::new(common.nodes_per_edge)?, setup.problem.coefficients())?;
    let exact = setup.exact();
    let mut rows = Vec::new();
    for scheme in schemes(common)? {
        let config = RbmConfig::new(common.dt, common.dt, common.t_final, scheme).with_stride(common.snapshot_stride);
        let (traj, bench) = benchmark(|| run_full(&disc, &config));
        let traj = traj?;
        let zero = vec![0.0; disc.n_dofs()];
        let series: Vec<(f64, f64)> = match &exact {
            Some(y) => error_rows(&disc, &traj, &Reference::Exact(y)),
            None => traj.times.iter().zip(&traj.states).map(|(&t, u)| (t, disc.l2_distance_sq(u, &zero))).collect(),
        };
        let sup = series.iter().map(|r| r.1).fold(0.0, f64::max);
        let label = if exact.is_some() { "sup error^2" } else { "sup norm^2" };
        println!(
            "{scheme:<12} dofs {}  {label} {sup:.4e}  time {:.3}s  factor entries {}",
            disc.n_dofs(),
            bench.wall_seconds,
            traj.stats.max_factor_entries
        );
        rows.extend(series.into_iter().map(|(t, e)| ErrorRow { scheme: scheme.label().into(), h: None, t, error_sq: e }));
    }
    if let Some(path) = &common.out {
        write_rows(path, &rows)?;
    }
    Ok(())
}

fn rbm(common: &Common, random: &Random) -> Result<()> {
    let setup = Setup::load(common.graph.as_deref())?;
    let (partition, family) = setup.batches(common.batches.as_deref(), common.graph.is_none())?;
    let disc = Discretization::new(&setup.graph, Mesh::new(common.nodes_per_edge)?, setup.problem.coefficients())?;
    let exact = setup.exact();
    let mut rows = Vec::new();
    for scheme in schemes(common)? {
        let engine = RbmEngine::new(&disc, &partition, &family, scheme, common.dt)?;
        for &h in &random.h {
            let config = RbmConfig::new(h, common.dt, common.t_final, scheme)
                .with_seed(random.seed)
                .with_stride(common.snapshot_stride);
            let baseline = match exact {
                Some(_) => None,
                None => Some(run_full(&disc, &config)?),
            };
            let reference = match (&exact, &baseline) {
                (Some(y), _) => Reference::Exact(y),
                (None, Some(b)) => Reference::Baseline(b),
                (None, None) => unreachable!(),
            };
            let (traj, bench) = benchmark(|| engine.run(&disc, &config));
            let traj = traj?;
            let series = error_rows(&disc, &traj, &reference);
            let sup = series.iter().map(|r| r.1).fold(0.0, f64::max);
            let freq = traj.schedule.as_ref().map(|s| batch_frequencies(s, engine.len())).unwrap_or_default();
            let freq: Vec<String> = freq.iter().map(|f| format!("{f:.3}")).collect();
            println!(
                "{scheme:<12} h {h:<8} seed {}  sup error^2 {sup:.4e}  time {:.3}s  active dofs max {} mean {:.1}  batch frequencies [{}]",
                random.seed,
                bench.wall_seconds,
                traj.stats.max_active_dofs,
                traj.stats.mean_active_dofs,
                freq.join(" ")
            );
            rows.extend(series.into_iter().map(|(t, e)| ErrorRow { scheme: scheme.label().into(), h: Some(h), t, error_sq: e }));
        }
    }
    if let Some(path) = &common.out {
        write_rows(path, &rows)?;
    }
    Ok(())
}

fn study(common: &Common, random: &Random, realizations: usize) -> Result<()> {
    let setup = Setup::load(common.graph.as_deref())?;
    let (partition, family) = setup.batches(common.batches.as_deref(), common.graph.is_none())?;
    let spec = ExperimentSpec {
        graph: setup.graph,
        partition,
        family,
        problem: setup.problem,
        schemes: schemes(common)?,
        dt: common.dt,
        t_final: common.t_final,
        h_list: random.h.clone(),
        realizations,
        seed: random.seed,
        nodes_per_edge: common.nodes_per_edge,
        snapshot_stride: common.snapshot_stride,
    };
    let out = run_study(&spec)?;
    for b in &out.baselines {
        let err = b.error.map(|e| format!("{e:.4e}")).unwrap_or_else(|| "-".into());
        eprintln!("full {:<6} dofs {} error {err} time {:.3}s", b.scheme, b.dofs, b.wall_time_s);
    }
    match &common.out {
        Some(path) => emit_csv(&out.records, path)?,
        None => write_csv(&out.records, std::io::stdout())?,
    }
    for scheme in &spec.schemes {
        let rows: Vec<_> = out.records.iter().filter(|r| r.scheme == scheme.label()).collect();
        if rows.len() >= 2 {
            let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
            let e1: Vec<f64> = rows.iter().map(|r| r.error1).collect();
            if let Ok(fit) = fit_slope(&h, &e1) {
                eprintln!("{scheme}: error1 slope {:.3}", fit.slope);
            }
        }
    }
    Ok(())
}

fn check(graph: Option<&Path>, batches: Option<&str>) -> Result<()> {
    let setup = Setup::load(graph)?;
    let g = &setup.graph;
    println!("graph: {} vertices, {} edges, boundary {:?}", g.n_vertices(), g.n_edges(),
        g.boundary_vertices().iter().map(|&v| g.vertex_name(v)).collect::<Vec<_>>());
    if let Problem::Manufactured(sol) = &setup.problem {
        let (continuity, kirchhoff) = sol.vertex_residuals();
        println!("manufactured solution: continuity residual {continuity:.1e}, flux residual {kirchhoff:.1e}");
    }
    let (partition, family) = setup.batches(batches, graph.is_none())?;
    for (i, part) in partition.parts().iter().enumerate() {
        let names: Vec<_> = part.iter().map(|&e| g.edge_name(e)).collect();
        println!("part {}: {names:?}, normalizer {:.4}", i + 1, family.normalizers()[i]);
    }
    for (j, batch) in family.batches().iter().enumerate() {
        let parts: Vec<_> = batch.iter().map(|i| i + 1).collect();
        println!("batch {}: parts {parts:?}, probability {:.4}", j + 1, family.probs()[j]);
    }
    let c = SpatialCoefficients::standard();
    let one = |_: EdgeId, _: f64| 1.0;
    let a = move |_: EdgeId, x: f64| (c.a)(x);
    let fields: [EdgeField<'_>; 2] = [&one, &a];
    let points: Vec<(EdgeId, f64)> = g.edge_ids().flat_map(|e| (1..10).map(move |k| (e, k as f64 / 10.0))).collect();
    println!("max coefficient bias {:.1e}", verify_unbiased(g, &partition, &family, &fields, &points)?);
    let report = check_vertex_coverage(g, &partition, family.batches())?;
    if !report.holds {
        let names: Vec<_> = report.violations.iter().map(|&v| g.vertex_name(v)).collect();
        return Err(Error::Config(format!("no batch makes these interior vertices interior: {}", names.join(", "))));
    }
    println!("every interior vertex is interior to some active subgraph");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(common) => solve(common),
        Command::Rbm { common, random } => rbm(common, random),
        Command::Study { common, random, realizations } => study(common, random, *realizations),
        Command::Check { graph, batches } => check(graph.as_deref(), batches.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
