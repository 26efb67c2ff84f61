//! Run configuration: an optional TOML file overlaid with command-line flags.
//!
//! ```toml
//! size = "A"
//! methods = ["rmsprop", "cg"]
//! seeds = 15            # a count, or an explicit list such as [3, 7, 11]
//! budget = 2000
//! wf = 1.35
//! input_dist = "normal"
//! agg = "median"
//! master_seed = 1
//! out = "results"
//! workers = 4
//!
//! [optimizer.rmsprop]
//! learning_rate = 0.002
//!
//! [optimizer.cg]
//! gradient_tolerance = 1e-6
//! c2 = 0.1
//! beta = "fletcher_reeves"
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use repcap::experiment::{seeds_from_master, Aggregation, ExperimentConfig};
use repcap::optim::{CgBeta, Method, OptimizerConfig};
use repcap::probgen::{InputDistribution, SizeClass, DEFAULT_SATURATION_FACTOR};

use crate::CliError;

pub const OUT_ENV: &str = "REPCAP_OUT";
pub const DEFAULT_SEED_COUNT: usize = 15;
pub const DEFAULT_BUDGET: usize = 2000;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum SeedsSpec {
    Count(usize),
    List(Vec<u64>),
}

impl FromStr for SeedsSpec {
    type Err = String;

    /// `"15"` is a count; `"3,7,11"` (or `"5,"` for a single seed) is a list.
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if !s.contains(',') {
            return s
                .parse()
                .map(SeedsSpec::Count)
                .map_err(|_| format!("`{s}` is neither a seed count nor a comma-separated seed list"));
        }
        s.split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| p.parse::<u64>().map_err(|_| format!("invalid seed `{p}`")))
            .collect::<Result<Vec<_>, _>>()
            .map(SeedsSpec::List)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodOverrides {
    pub learning_rate: Option<f64>,
    pub decay_rho: Option<f64>,
    pub epsilon: Option<f64>,
    pub gradient_tolerance: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub max_bracket_steps: Option<usize>,
    pub initial_step: Option<f64>,
    pub beta: Option<String>,
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub size: Option<String>,
    pub methods: Option<Vec<String>>,
    pub seeds: Option<SeedsSpec>,
    pub budget: Option<usize>,
    pub wf: Option<f64>,
    pub input_dist: Option<String>,
    pub agg: Option<String>,
    pub master_seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    #[serde(default)]
    pub optimizer: BTreeMap<String, MethodOverrides>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Flag values; `None` means "not given on the command line".
#[derive(Debug, Clone, Default)]
pub struct FlagOverrides {
    pub size: Option<String>,
    pub methods: Option<Vec<String>>,
    pub seeds: Option<SeedsSpec>,
    pub budget: Option<usize>,
    pub wf: Option<f64>,
    pub input_dist: Option<String>,
    pub agg: Option<String>,
    pub master_seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

/// Fully resolved settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub size_class: SizeClass,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub budget: usize,
    pub wf: f64,
    pub input_distribution: InputDistribution,
    pub aggregation: Aggregation,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub workers: usize,
    pub overrides: BTreeMap<Method, MethodOverrides>,
}

fn parse_field<T: FromStr>(name: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::Config(format!("invalid {name} `{value}`: {e}")))
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Output directory when neither flag nor file sets one.
pub fn default_output_dir() -> PathBuf {
    std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("repcap-out"))
}

impl RunConfig {
    /// Flags win over file values, which win over defaults.
    pub fn resolve(file: FileConfig, flags: FlagOverrides) -> Result<Self, CliError> {
        let size = flags.size.or(file.size).unwrap_or_else(|| "A".into());
        let size_class: SizeClass = parse_field("size", &size)?;

        let methods = match flags.methods.or(file.methods) {
            Some(names) => {
                let mut out = Vec::new();
                for n in names {
                    let m: Method = parse_field("method", n.trim())?;
                    if !out.contains(&m) {
                        out.push(m);
                    }
                }
                out
            }
            None => Method::ALL.to_vec(),
        };
        if methods.is_empty() {
            return Err(CliError::Config("methods: at least one method is required".into()));
        }

        let master_seed = flags.master_seed.or(file.master_seed).unwrap_or(1);
        let seeds = match flags
            .seeds
            .or(file.seeds)
            .unwrap_or(SeedsSpec::Count(DEFAULT_SEED_COUNT))
        {
            SeedsSpec::Count(0) => return Err(CliError::Config("seeds: count must be at least 1".into())),
            SeedsSpec::Count(n) => seeds_from_master(master_seed, n),
            SeedsSpec::List(list) if list.is_empty() => {
                return Err(CliError::Config("seeds: list must not be empty".into()))
            }
            SeedsSpec::List(list) => list,
        };

        let budget = flags.budget.or(file.budget).unwrap_or(DEFAULT_BUDGET);
        if budget == 0 {
            return Err(CliError::Config("budget: must be at least 1".into()));
        }
        let wf = flags.wf.or(file.wf).unwrap_or(DEFAULT_SATURATION_FACTOR);
        if !(wf.is_finite() && wf > 0.0) {
            return Err(CliError::Config(format!("wf: must be a positive number, got {wf}")));
        }
        let input_distribution = match flags.input_dist.or(file.input_dist) {
            Some(s) => parse_field("input_dist", &s)?,
            None => InputDistribution::default(),
        };
        let aggregation = match flags.agg.or(file.agg) {
            Some(s) => parse_field("agg", &s)?,
            None => Aggregation::default(),
        };
        let output_dir = flags.out.or(file.out).unwrap_or_else(default_output_dir);
        let workers = flags.workers.or(file.workers).unwrap_or_else(default_workers);
        if workers == 0 {
            return Err(CliError::Config("workers: must be at least 1".into()));
        }

        let mut overrides = BTreeMap::new();
        for (name, o) in file.optimizer {
            let m: Method = parse_field("optimizer section", &name)?;
            overrides.insert(m, o);
        }

        let cfg = RunConfig {
            size_class,
            methods,
            seeds,
            budget,
            wf,
            input_distribution,
            aggregation,
            master_seed,
            output_dir,
            workers,
            overrides,
        };
        cfg.experiment()?.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn optimizer(&self, method: Method) -> Result<OptimizerConfig, CliError> {
        let mut c = OptimizerConfig::defaults(method).with_budget(self.budget);
        if let Some(o) = self.overrides.get(&method) {
            if let Some(v) = o.learning_rate {
                c.learning_rate = v;
            }
            if let Some(v) = o.decay_rho {
                c.decay_rho = v;
            }
            if let Some(v) = o.epsilon {
                c.epsilon = v;
            }
            if let Some(v) = o.gradient_tolerance {
                c.cg_gradient_tolerance = v;
            }
            if let Some(v) = o.c1 {
                c.line_search.c1 = v;
            }
            if let Some(v) = o.c2 {
                c.line_search.c2 = v;
            }
            if let Some(v) = o.max_bracket_steps {
                c.line_search.max_bracket_steps = v;
            }
            if let Some(v) = o.initial_step {
                c.line_search.initial_step = v;
            }
            if let Some(b) = &o.beta {
                c.cg_beta = match b.as_str() {
                    "polak_ribiere_plus" | "pr+" => CgBeta::PolakRibierePlus,
                    "fletcher_reeves" | "fr" => CgBeta::FletcherReeves,
                    other => return Err(CliError::Config(format!("optimizer.{method}.beta: unknown `{other}`"))),
                };
            }
        }
        c.validate()
            .map_err(|e| CliError::Config(format!("optimizer.{method}: {e}")))?;
        Ok(c)
    }

    /// The experiment settings recorded in the results store.
    pub fn experiment(&self) -> Result<ExperimentConfig, CliError> {
        let mut e = ExperimentConfig::new(self.size_class, self.master_seed);
        e.methods = self.methods.clone();
        e.seeds = self.seeds.clone();
        e.budget = self.budget;
        e.saturation_factor = self.wf;
        e.input_distribution = self.input_distribution;
        e.aggregation = self.aggregation;
        e.optimizers = self
            .methods
            .iter()
            .map(|&m| self.optimizer(m))
            .collect::<Result<_, _>>()?;
        Ok(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_protocol() {
        let c = RunConfig::resolve(FileConfig::default(), FlagOverrides::default()).unwrap();
        assert_eq!(c.size_class, SizeClass::A);
        assert_eq!(c.seeds.len(), 15);
        assert_eq!(c.budget, 2000);
        assert_eq!(c.methods, Method::ALL.to_vec());
        assert_eq!(c.wf, DEFAULT_SATURATION_FACTOR);
    }

    #[test]
    fn flags_win_over_file() {
        let file = FileConfig::parse("size = \"B\"\nbudget = 10\nseeds = [4, 5]\nwf = 2.0\n").unwrap();
        let flags = FlagOverrides {
            budget: Some(20),
            ..Default::default()
        };
        let c = RunConfig::resolve(file, flags).unwrap();
        assert_eq!(c.size_class, SizeClass::B);
        assert_eq!(c.budget, 20);
        assert_eq!(c.seeds, vec![4, 5]);
        assert_eq!(c.wf, 2.0);
    }

    #[test]
    fn seed_specs() {
        assert_eq!("15".parse::<SeedsSpec>().unwrap(), SeedsSpec::Count(15));
        assert_eq!("3, 7,11".parse::<SeedsSpec>().unwrap(), SeedsSpec::List(vec![3, 7, 11]));
        assert_eq!("9,".parse::<SeedsSpec>().unwrap(), SeedsSpec::List(vec![9]));
        assert!("x".parse::<SeedsSpec>().is_err());
    }

    #[test]
    fn invalid_fields_are_named() {
        let err = RunConfig::resolve(
            FileConfig::default(),
            FlagOverrides {
                size: Some("D".into()),
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(matches!(&err, CliError::Config(m) if m.contains("size")));
        assert!(FileConfig::parse("sizes = \"A\"").is_err());
        let dup = FlagOverrides {
            seeds: Some(SeedsSpec::List(vec![1, 1])),
            ..Default::default()
        };
        assert!(matches!(RunConfig::resolve(FileConfig::default(), dup), Err(CliError::Config(_))));
    }

    #[test]
    fn optimizer_sections_apply() {
        let file = FileConfig::parse("[optimizer.cg]\nc2 = 0.1\nbeta = \"fr\"\n[optimizer.sgd]\nlearning_rate = 0.5\n").unwrap();
        let c = RunConfig::resolve(file, FlagOverrides::default()).unwrap();
        let cg = c.optimizer(Method::Cg).unwrap();
        assert_eq!(cg.line_search.c2, 0.1);
        assert_eq!(cg.cg_beta, CgBeta::FletcherReeves);
        assert_eq!(c.optimizer(Method::Sgd).unwrap().learning_rate, 0.5);
        let bad = FileConfig::parse("[optimizer.cg]\nc2 = 2.0\n").unwrap();
        assert!(RunConfig::resolve(bad, FlagOverrides::default()).is_err());
    }
}
