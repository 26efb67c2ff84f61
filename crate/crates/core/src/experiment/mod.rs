//! The shallow/deep cross-check.
//!
//! For a size class with shallow variant `X_1` and deep variants `X_3`, `X_5`,
//! every method is run on seven (network, data source) blocks: the three
//! self-fits `X_i` on `X_i`, the shallow net on data from each deep net, and
//! each deep net on data from the shallow net. Self-fit blocks have a known
//! optimum of zero; cross blocks do not.
//!
//! Problem `k` of a data source uses seed `master_seed + k`. The fitted
//! network starts from `init_weights(network, derive_seed(seed, INIT_SEED_LABEL))`,
//! independent of the generating weights. All methods and all fitting networks
//! share the same problems for a given (data source, seed).

mod store;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcore::ArchitectureSpec;
use crate::optim::{self, Method, OptimizerConfig, TrainTrace};
use crate::probgen::{self, InputDistribution, Problem, SizeClass, SizeClassSpec};

pub use store::{load, persist, read_store, write_store, StoreContents, SCHEMA_VERSION};

/// Label mixed into a problem seed to obtain the fitted network's start seed.
pub const INIT_SEED_LABEL: u64 = 0x1417;

pub fn init_seed_for(problem_seed: u64) -> u64 {
    probgen::derive_seed(problem_seed, INIT_SEED_LABEL)
}

/// Seeds `master_seed, master_seed + 1, ...`.
pub fn seeds_from_master(master_seed: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|k| master_seed.wrapping_add(k)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Median,
    Mean,
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregation::Median => "median",
            Aggregation::Mean => "mean",
        })
    }
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "median" => Ok(Aggregation::Median),
            "mean" => Ok(Aggregation::Mean),
            other => Err(Error::InvalidConfig(format!("unknown aggregation `{other}`"))),
        }
    }
}

/// Summary statistics of one quantity over the seeds of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub median: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        Some(Stats {
            median,
            mean: values.iter().sum::<f64>() / n as f64,
            min: sorted[0],
            max: sorted[n - 1],
        })
    }

    pub fn get(&self, aggregation: Aggregation) -> f64 {
        match aggregation {
            Aggregation::Median => self.median,
            Aggregation::Mean => self.mean,
        }
    }
}

/// An architecture together with its display name (e.g. `A_3`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedArch {
    pub name: String,
    pub arch: ArchitectureSpec,
}

/// One (network, data source, method) cell over a list of seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub network: NamedArch,
    pub data_source: NamedArch,
    pub n_samples: usize,
    pub input_distribution: InputDistribution,
    pub optimizer: OptimizerConfig,
    pub seeds: Vec<u64>,
}

impl CellSpec {
    pub fn method(&self) -> Method {
        self.optimizer.method
    }

    pub fn is_self_fit(&self) -> bool {
        self.network.arch == self.data_source.arch
    }

    pub fn validate(&self) -> Result<()> {
        self.network.arch.validate()?;
        self.data_source.arch.validate()?;
        if !self.network.arch.same_io(&self.data_source.arch) {
            return Err(Error::InvalidConfig(format!(
                "network {} ({}) and data source {} ({}) differ in input/output dimensions",
                self.network.name,
                self.network.arch.describe(),
                self.data_source.name,
                self.data_source.arch.describe()
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("a cell needs at least one seed".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig("cell seeds must be distinct".into()));
        }
        if self.n_samples == 0 {
            return Err(Error::InvalidConfig("n_samples must be >= 1".into()));
        }
        self.optimizer.validate()
    }
}

/// One successful fit of a cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub init_seed: u64,
    pub trace: TrainTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub spec: CellSpec,
    /// Successful runs in seed order.
    pub runs: Vec<SeedRun>,
    pub failures: Vec<SeedFailure>,
    pub aggregation: Aggregation,
}

impl CellResult {
    pub fn f_init_stats(&self) -> Option<Stats> {
        Stats::of(&self.runs.iter().map(|r| r.trace.f_init).collect::<Vec<_>>())
    }

    pub fn f_opt_stats(&self) -> Option<Stats> {
        Stats::of(&self.runs.iter().map(|r| r.trace.f_opt).collect::<Vec<_>>())
    }

    pub fn gradient_calls_stats(&self) -> Option<Stats> {
        Stats::of(
            &self
                .runs
                .iter()
                .map(|r| r.trace.gradient_calls_used as f64)
                .collect::<Vec<_>>(),
        )
    }

    pub fn f_init_agg(&self) -> Option<f64> {
        self.f_init_stats().map(|s| s.get(self.aggregation))
    }

    pub fn f_opt_agg(&self) -> Option<f64> {
        self.f_opt_stats().map(|s| s.get(self.aggregation))
    }
}

/// Fits `network` to `problem` from the seeded fresh start.
pub fn fit_problem(network: &ArchitectureSpec, problem: &Problem, optimizer: &OptimizerConfig) -> Result<SeedRun> {
    let init_seed = init_seed_for(problem.seed);
    let x0 = probgen::init_weights(network, init_seed);
    let out = optim::run_fit(network, &problem.dataset, &x0, optimizer)?;
    Ok(SeedRun {
        seed: problem.seed,
        init_seed,
        trace: out.trace,
    })
}

fn generate(spec: &CellSpec, seed: u64) -> Result<Problem> {
    probgen::generate_problem(&spec.data_source.arch, spec.n_samples, spec.input_distribution, seed)
}

fn assemble(
    spec: CellSpec,
    aggregation: Aggregation,
    outcomes: Vec<(u64, Result<SeedRun>)>,
) -> CellResult {
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (seed, outcome) in outcomes {
        match outcome {
            Ok(run) => runs.push(run),
            Err(e) => failures.push(SeedFailure {
                seed,
                message: e.to_string(),
            }),
        }
    }
    CellResult {
        spec,
        runs,
        failures,
        aggregation,
    }
}

/// Runs every seed of a cell sequentially.
pub fn run_cell(spec: &CellSpec, aggregation: Aggregation) -> Result<CellResult> {
    spec.validate()?;
    let outcomes = spec
        .seeds
        .iter()
        .map(|&seed| {
            let run = generate(spec, seed).and_then(|p| fit_problem(&spec.network.arch, &p, &spec.optimizer));
            (seed, run)
        })
        .collect();
    let result = assemble(spec.clone(), aggregation, outcomes);
    if result.runs.is_empty() {
        return Err(Error::CellFailed(spec.seeds.len()));
    }
    Ok(result)
}

/// `f_opt(method) / f_opt(cg)`; absent when the CG value is not positive.
pub fn ratio_to_cg(method_f_opt: f64, cg_f_opt: f64) -> Option<f64> {
    positive_ratio(method_f_opt, cg_f_opt)
}

/// `f_opt(deep net on shallow data) / f_opt(shallow net on deep data)`.
pub fn deep_shallow_ratio(deep_on_shallow: f64, shallow_on_deep: f64) -> Option<f64> {
    positive_ratio(deep_on_shallow, shallow_on_deep)
}

fn positive_ratio(num: f64, den: f64) -> Option<f64> {
    let r = num / den;
    (den > 0.0 && r.is_finite()).then_some(r)
}

/// Settings of a full cross-check run. Everything needed to regenerate the
/// results is here; the worker count is not, since it cannot change them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub size_class: SizeClass,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub budget: usize,
    pub saturation_factor: f64,
    pub input_distribution: InputDistribution,
    pub aggregation: Aggregation,
    pub master_seed: u64,
    /// Hyperparameters per method, with the budget applied.
    pub optimizers: Vec<OptimizerConfig>,
}

impl ExperimentConfig {
    /// 15 seeds from `master_seed`, budget 2000, all four methods with default hyperparameters.
    pub fn new(size_class: SizeClass, master_seed: u64) -> Self {
        let mut cfg = Self {
            size_class,
            methods: Method::ALL.to_vec(),
            seeds: seeds_from_master(master_seed, 15),
            budget: 2000,
            saturation_factor: probgen::DEFAULT_SATURATION_FACTOR,
            input_distribution: InputDistribution::default(),
            aggregation: Aggregation::default(),
            master_seed,
            optimizers: Vec::new(),
        };
        cfg.reset_optimizers();
        cfg
    }

    /// Rebuilds `optimizers` from defaults for `methods` and `budget`.
    pub fn reset_optimizers(&mut self) {
        self.optimizers = self
            .methods
            .iter()
            .map(|&m| OptimizerConfig::defaults(m).with_budget(self.budget))
            .collect();
    }

    pub fn optimizer(&self, method: Method) -> Option<&OptimizerConfig> {
        self.optimizers.iter().find(|o| o.method == method)
    }

    pub fn size_spec(&self) -> SizeClassSpec {
        probgen::build_size_class(self.size_class)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no methods selected".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("no seeds selected".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig("seeds must be distinct".into()));
        }
        if self.budget == 0 {
            return Err(Error::InvalidConfig("budget must be >= 1".into()));
        }
        if !(self.saturation_factor.is_finite() && self.saturation_factor > 0.0) {
            return Err(Error::InvalidConfig("saturation factor must be > 0".into()));
        }
        for &m in &self.methods {
            self.optimizer(m)
                .ok_or_else(|| Error::InvalidConfig(format!("no optimizer settings for {m}")))?
                .validate()?;
        }
        Ok(())
    }

    /// The seven (network, data source) blocks in table order.
    pub fn blocks(&self) -> Vec<(NamedArch, NamedArch)> {
        let spec = self.size_spec();
        let named = |v| NamedArch {
            name: spec.variant_name(v),
            arch: spec.arch(v, self.saturation_factor),
        };
        let shallow = spec.shallow();
        let mut blocks: Vec<_> = spec.variants.iter().map(|&v| (named(v), named(v))).collect();
        for &d in spec.deep() {
            blocks.push((named(shallow), named(d)));
        }
        for &d in spec.deep() {
            blocks.push((named(d), named(shallow)));
        }
        blocks
    }

    /// Cell specs for every block and method, block-major.
    pub fn cells(&self) -> Vec<CellSpec> {
        let n_samples = self.size_spec().data_size;
        let methods = self.ordered_methods();
        self.blocks()
            .into_iter()
            .flat_map(|(network, data_source)| {
                methods.iter().map(move |&m| CellSpec {
                    network: network.clone(),
                    data_source: data_source.clone(),
                    n_samples,
                    input_distribution: self.input_distribution,
                    optimizer: self.optimizer(m).expect("validated").clone(),
                    seeds: self.seeds.clone(),
                })
            })
            .collect()
    }

    /// Selected methods in table order.
    pub fn ordered_methods(&self) -> Vec<Method> {
        Method::ALL
            .into_iter()
            .filter(|m| self.methods.contains(m))
            .collect()
    }
}

/// One line of the detail table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub network: String,
    pub data_source: String,
    pub method: Method,
    pub self_fit: bool,
    pub seeds: usize,
    pub failed_seeds: usize,
    pub gradient_calls: Option<f64>,
    pub f_init: Option<f64>,
    pub f_opt: Option<f64>,
    pub f_init_stats: Option<Stats>,
    pub f_opt_stats: Option<Stats>,
    pub ratio_to_cg: Option<f64>,
    pub deep_shallow_ratio: Option<f64>,
}

/// One line of the shallow/deep summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub shallow: String,
    pub deep: String,
    pub method: Method,
    /// Shallow network fitted to data generated by the deep one.
    pub data_deep_nn_shallow: Option<f64>,
    /// Deep network fitted to data generated by the shallow one.
    pub data_shallow_nn_deep: Option<f64>,
    pub ratio_deep_shallow: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheckTable {
    pub size_class: SizeClass,
    pub aggregation: Aggregation,
    pub rows: Vec<TableRow>,
    pub summary: Vec<SummaryRow>,
}

impl CrossCheckTable {
    pub fn row(&self, network: &str, data_source: &str, method: Method) -> Option<&TableRow> {
        self.rows
            .iter()
            .find(|r| r.network == network && r.data_source == data_source && r.method == method)
    }

    pub fn summary_for(&self, method: Method) -> Vec<&SummaryRow> {
        self.summary.iter().filter(|s| s.method == method).collect()
    }

    /// Builds the table (aggregates and both ratio columns) from cell results.
    pub fn from_cells(size_class: SizeClass, aggregation: Aggregation, cells: &[CellResult]) -> Self {
        let spec = probgen::build_size_class(size_class);
        let shallow = spec.variant_name(spec.shallow());
        let f_opt: BTreeMap<(String, String, Method), f64> = cells
            .iter()
            .filter_map(|c| {
                let v = c.f_opt_stats()?.get(aggregation);
                Some(((c.spec.network.name.clone(), c.spec.data_source.name.clone(), c.spec.method()), v))
            })
            .collect();
        let lookup = |n: &str, d: &str, m: Method| f_opt.get(&(n.to_string(), d.to_string(), m)).copied();

        let rows = cells
            .iter()
            .map(|c| {
                let (n, d, m) = (&c.spec.network.name, &c.spec.data_source.name, c.spec.method());
                let own = lookup(n, d, m);
                let ratio_to_cg = match (m, own, lookup(n, d, Method::Cg)) {
                    (Method::Cg, ..) => None,
                    (_, Some(v), Some(cg)) => ratio_to_cg(v, cg),
                    _ => None,
                };
                let deep_shallow = if *d == shallow && *n != shallow {
                    match (own, lookup(&shallow, n, m)) {
                        (Some(num), Some(den)) => deep_shallow_ratio(num, den),
                        _ => None,
                    }
                } else {
                    None
                };
                let f_init_stats = c.f_init_stats();
                let f_opt_stats = c.f_opt_stats();
                TableRow {
                    network: n.clone(),
                    data_source: d.clone(),
                    method: m,
                    self_fit: n == d,
                    seeds: c.spec.seeds.len(),
                    failed_seeds: c.failures.len(),
                    gradient_calls: c.gradient_calls_stats().map(|s| s.get(aggregation)),
                    f_init: f_init_stats.map(|s| s.get(aggregation)),
                    f_opt: own,
                    f_init_stats,
                    f_opt_stats,
                    ratio_to_cg,
                    deep_shallow_ratio: deep_shallow,
                }
            })
            .collect();

        let mut methods: Vec<Method> = cells.iter().map(|c| c.spec.method()).collect();
        methods.sort();
        methods.dedup();
        let mut summary = Vec::new();
        for &m in &methods {
            for &dv in spec.deep() {
                let deep = spec.variant_name(dv);
                let data_deep_nn_shallow = lookup(&shallow, &deep, m);
                let data_shallow_nn_deep = lookup(&deep, &shallow, m);
                if data_deep_nn_shallow.is_none() && data_shallow_nn_deep.is_none() {
                    continue;
                }
                let ratio = match (data_shallow_nn_deep, data_deep_nn_shallow) {
                    (Some(num), Some(den)) => deep_shallow_ratio(num, den),
                    _ => None,
                };
                summary.push(SummaryRow {
                    shallow: shallow.clone(),
                    deep,
                    method: m,
                    data_deep_nn_shallow,
                    data_shallow_nn_deep,
                    ratio_deep_shallow: ratio,
                });
            }
        }
        CrossCheckTable {
            size_class,
            aggregation,
            rows,
            summary,
        }
    }
}

/// Everything a cross-check produces.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixResult {
    pub config: ExperimentConfig,
    pub cells: Vec<CellResult>,
    pub table: CrossCheckTable,
}

impl MatrixResult {
    pub fn failed_runs(&self) -> usize {
        self.cells.iter().map(|c| c.failures.len()).sum()
    }

    pub fn total_runs(&self) -> usize {
        self.cells.iter().map(|c| c.spec.seeds.len()).sum()
    }
}

/// Runs the full cross-check matrix on `workers` threads.
///
/// Problems are generated once per (data source, seed) and shared by all
/// cells. Work is split into (cell, seed) units; results are merged in a
/// fixed order, so the output does not depend on `workers`.
pub fn run_matrix(config: &ExperimentConfig, workers: usize) -> Result<MatrixResult> {
    config.validate()?;
    let cells = config.cells();
    let spec = config.size_spec();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;

    let problem_keys: Vec<(usize, u64)> = (0..spec.variants.len())
        .flat_map(|v| config.seeds.iter().map(move |&s| (v, s)))
        .collect();
    let problems: Vec<Result<Arc<Problem>>> = pool.install(|| {
        problem_keys
            .par_iter()
            .map(|&(v, seed)| {
                let arch = spec.arch(spec.variants[v], config.saturation_factor);
                probgen::generate_problem(&arch, spec.data_size, config.input_distribution, seed).map(Arc::new)
            })
            .collect()
    });
    let problem_index: BTreeMap<(String, u64), usize> = problem_keys
        .iter()
        .enumerate()
        .map(|(i, &(v, s))| ((spec.variant_name(spec.variants[v]), s), i))
        .collect();

    let units: Vec<(usize, u64)> = cells
        .iter()
        .enumerate()
        .flat_map(|(c, cell)| cell.seeds.iter().map(move |&s| (c, s)))
        .collect();
    let outcomes: Vec<Result<SeedRun>> = pool.install(|| {
        units
            .par_iter()
            .map(|&(c, seed)| {
                let cell = &cells[c];
                let idx = problem_index[&(cell.data_source.name.clone(), seed)];
                match &problems[idx] {
                    Ok(problem) => fit_problem(&cell.network.arch, problem, &cell.optimizer),
                    Err(e) => Err(Error::InvalidConfig(format!("problem generation failed: {e}"))),
                }
            })
            .collect()
    });

    let mut outcomes = units.into_iter().zip(outcomes);
    let results: Vec<CellResult> = cells
        .into_iter()
        .map(|cell| {
            let n = cell.seeds.len();
            let own: Vec<(u64, Result<SeedRun>)> = outcomes.by_ref().take(n).map(|((_, s), r)| (s, r)).collect();
            assemble(cell, config.aggregation, own)
        })
        .collect();

    let table = CrossCheckTable::from_cells(config.size_class, config.aggregation, &results);
    Ok(MatrixResult {
        config: config.clone(),
        cells: results,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probgen::DEFAULT_SATURATION_FACTOR;

    fn tiny_cell(method: Method, seeds: Vec<u64>, budget: usize) -> CellSpec {
        let arch = ArchitectureSpec::new(6, 4, 1, 3, DEFAULT_SATURATION_FACTOR).unwrap();
        CellSpec {
            network: NamedArch {
                name: "n".into(),
                arch: arch.clone(),
            },
            data_source: NamedArch {
                name: "n".into(),
                arch,
            },
            n_samples: 12,
            input_distribution: InputDistribution::StandardNormal,
            optimizer: OptimizerConfig::defaults(method).with_budget(budget),
            seeds,
        }
    }

    #[test]
    fn stats_basics() {
        let s = Stats::of(&[3.0, 1.0, 2.0, 10.0]).unwrap();
        assert_eq!(s.median, 2.5);
        assert_eq!(s.mean, 4.0);
        assert_eq!((s.min, s.max), (1.0, 10.0));
        assert_eq!(Stats::of(&[7.0]).unwrap().median, 7.0);
        assert!(Stats::of(&[]).is_none());
    }

    #[test]
    fn ratio_examples() {
        assert!((ratio_to_cg(0.098e-3, 0.012e-3).unwrap() - 8.1667).abs() < 1e-3);
        assert_eq!(ratio_to_cg(1.5, 1.5), Some(1.0));
        assert!((ratio_to_cg(4.0e-3, 0.5e-3).unwrap() - 8.0).abs() < 1e-12);
        assert_eq!(ratio_to_cg(1.0, 0.0), None);
        assert!((deep_shallow_ratio(4.415e-3, 0.075e-3).unwrap() - 58.87).abs() < 0.01);
        assert!((deep_shallow_ratio(11.353e-3, 0.035e-3).unwrap() - 324.37).abs() < 0.01);
        assert_eq!(deep_shallow_ratio(2.0, 2.0), Some(1.0));
        assert_eq!(deep_shallow_ratio(2.0, 0.0), None);
    }

    #[test]
    fn singleton_cell_aggregate_is_the_trace() {
        let r = run_cell(&tiny_cell(Method::Rmsprop, vec![4], 20), Aggregation::Median).unwrap();
        assert_eq!(r.runs.len(), 1);
        assert_eq!(r.f_opt_agg(), Some(r.runs[0].trace.f_opt));
        let r = run_cell(&tiny_cell(Method::Rmsprop, vec![4], 20), Aggregation::Mean).unwrap();
        assert_eq!(r.f_opt_agg(), Some(r.runs[0].trace.f_opt));
    }

    #[test]
    fn cell_is_deterministic_and_seed_isolated() {
        let a = run_cell(&tiny_cell(Method::Cg, vec![1, 2], 60), Aggregation::Median).unwrap();
        let b = run_cell(&tiny_cell(Method::Cg, vec![1, 2], 60), Aggregation::Median).unwrap();
        let c = run_cell(&tiny_cell(Method::Cg, vec![1, 3], 60), Aggregation::Median).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.runs[0], c.runs[0]);
        assert_ne!(a.runs[1], c.runs[1]);
    }

    #[test]
    fn self_fit_start_differs_from_generator() {
        let cell = tiny_cell(Method::Sgd, vec![9], 1);
        let r = run_cell(&cell, Aggregation::Median).unwrap();
        assert!(r.runs[0].trace.f_init > 1e-6);
        assert_ne!(r.runs[0].init_seed, 9);
    }

    #[test]
    fn invalid_cells_rejected() {
        let mut c = tiny_cell(Method::Cg, vec![1, 1], 5);
        assert!(run_cell(&c, Aggregation::Median).is_err());
        c.seeds = vec![];
        assert!(run_cell(&c, Aggregation::Median).is_err());
        c.seeds = vec![1];
        c.data_source.arch.output_dim = 5;
        assert!(run_cell(&c, Aggregation::Median).is_err());
    }

    #[test]
    fn block_structure() {
        let cfg = ExperimentConfig::new(SizeClass::A, 0);
        let blocks: Vec<_> = cfg
            .blocks()
            .into_iter()
            .map(|(n, d)| format!("{}<-{}", n.name, d.name))
            .collect();
        assert_eq!(
            blocks,
            ["A_1<-A_1", "A_3<-A_3", "A_5<-A_5", "A_1<-A_3", "A_1<-A_5", "A_3<-A_1", "A_5<-A_1"]
        );
        assert_eq!(cfg.cells().len(), 28);
        assert_eq!(cfg.seeds.len(), 15);
        assert_eq!(cfg.budget, 2000);
    }
}
