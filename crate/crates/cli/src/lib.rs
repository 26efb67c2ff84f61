//! Command-line front end for the `repcap` benchmark harness.
//!
//! Subcommands: `gen` writes problem files, `fit` trains one network on one
//! problem, `crosscheck` runs the shallow/deep matrix and `report` re-renders
//! tables from a results store.

pub mod config;
pub mod render;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use repcap::experiment::{self, init_seed_for, MatrixResult};
use repcap::optim::{self, Method, OptimizerConfig};
use repcap::probgen::{self, parse_variant_name, Problem, DEFAULT_SATURATION_FACTOR};

use config::{FileConfig, FlagOverrides, RunConfig, SeedsSpec};
use render::Format;

pub const RESULTS_FILE: &str = "results.jsonl";
pub const PROBLEMS_DIR: &str = "problems";
pub const MANIFEST_FILE: &str = "manifest.sha256";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Partial(String),
    #[error("{0}")]
    Total(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Other(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Partial(_) => 4,
            CliError::Total(_) => 5,
        }
    }
}

impl From<repcap::Error> for CliError {
    fn from(e: repcap::Error) -> Self {
        use repcap::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidArchitecture(_)
            | E::InvalidConfig(_)
            | E::UnknownSizeClass(_)
            | E::UnknownVariant(_)
            | E::LayerDimension { .. }
            | E::ParameterLength { .. }
            | E::DatasetShape(_) => CliError::Config(msg),
            E::Io(_) | E::Json(_) | E::Version { .. } | E::Corrupt(_) => CliError::Io(msg),
            E::CellFailed(_) => CliError::Total(msg),
            _ => CliError::Other(msg),
        }
    }
}

fn io_err(what: &str, path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{what} {}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "repcap", version, about = "Shallow vs deep network fitting benchmark")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate problem files for every variant and seed of a size class.
    Gen(GenArgs),
    /// Fit one network to one problem file.
    Fit(FitArgs),
    /// Run the shallow/deep cross-check matrix.
    Crosscheck(CrosscheckArgs),
    /// Render tables from a results store.
    Report(ReportArgs),
}

/// Settings shared by `gen` and `crosscheck`.
#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Size class: A, B or C.
    #[arg(long)]
    pub size: Option<String>,
    /// Seed count (`15`) or explicit list (`3,7,11`).
    #[arg(long)]
    pub seeds: Option<SeedsSpec>,
    /// First seed when `--seeds` is a count.
    #[arg(long)]
    pub master_seed: Option<u64>,
    /// Saturation factor w_f.
    #[arg(long)]
    pub wf: Option<f64>,
    /// Input distribution: normal or uniform.
    #[arg(long)]
    pub input_dist: Option<String>,
    /// Output directory.
    #[arg(long, env = config::OUT_ENV)]
    pub out: Option<PathBuf>,
}

impl CommonArgs {
    fn flags(&self) -> FlagOverrides {
        FlagOverrides {
            size: self.size.clone(),
            seeds: self.seeds.clone(),
            master_seed: self.master_seed,
            wf: self.wf,
            input_dist: self.input_dist.clone(),
            out: self.out.clone(),
            ..Default::default()
        }
    }

    fn file(&self) -> Result<FileConfig, CliError> {
        self.config.as_deref().map_or_else(|| Ok(FileConfig::default()), FileConfig::load)
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Store only the recipe; arrays are regenerated on load.
    #[arg(long)]
    pub no_arrays: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Problem file written by `gen`.
    #[arg(long)]
    pub problem: PathBuf,
    /// Network variant such as `A_3`.
    #[arg(long)]
    pub network: String,
    #[arg(long, default_value = "cg")]
    pub method: Method,
    /// Gradient-call budget.
    #[arg(long, default_value_t = config::DEFAULT_BUDGET)]
    pub budget: usize,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Saturation factor for the initial weights.
    #[arg(long, default_value_t = DEFAULT_SATURATION_FACTOR)]
    pub wf: f64,
    /// Seed for the initial weights; derived from the problem seed by default.
    #[arg(long)]
    pub init_seed: Option<u64>,
    /// Write the full trace as JSON to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CrosscheckArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated methods (adadelta, rmsprop, sgd, cg).
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    /// Gradient-call budget per run.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Aggregation across seeds: median or mean.
    #[arg(long)]
    pub agg: Option<String>,
    /// Worker threads.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableChoice {
    Detail,
    Summary,
    Both,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Results store written by `crosscheck`.
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long, value_enum, default_value = "txt")]
    pub format: Format,
    #[arg(long, value_enum, default_value = "both")]
    pub table: TableChoice,
    /// Method shown in the summary table; RMSprop by default.
    #[arg(long)]
    pub summary_method: Option<Method>,
}

/// Runs a parsed command, writing human-readable output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Gen(a) => gen(&a, out),
        Command::Fit(a) => fit(&a, out),
        Command::Crosscheck(a) => crosscheck(&a, out),
        Command::Report(a) => report(&a, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Io(format!("cannot write output: {e}")))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| io_err("cannot create", path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| io_err("cannot write", path, e))
}

pub fn problem_file_name(variant: &str, seed: u64) -> String {
    format!("{variant}_seed{seed}.json")
}

fn gen(a: &GenArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(a.common.file()?, a.common.flags())?;
    let spec = probgen::build_size_class(cfg.size_class);
    let dir = cfg.output_dir.join(PROBLEMS_DIR);
    create_dir(&dir)?;

    let mut manifest = String::new();
    for &variant in &spec.variants {
        let name = spec.variant_name(variant);
        let arch = spec.arch(variant, cfg.wf);
        for &seed in &cfg.seeds {
            let problem = probgen::generate_problem(&arch, spec.data_size, cfg.input_distribution, seed)?;
            let mut bytes = Vec::new();
            problem.write_to(&mut bytes, !a.no_arrays)?;
            let file = problem_file_name(&name, seed);
            write_file(&dir.join(&file), &bytes)?;
            let digest = Sha256::digest(&bytes);
            let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
            manifest += &format!("{hex}  {file}\n");
        }
    }
    write_file(&dir.join(MANIFEST_FILE), manifest.as_bytes())?;
    emit(
        out,
        &format!(
            "wrote {} problems for size class {} to {}\n",
            spec.variants.len() * cfg.seeds.len(),
            cfg.size_class,
            dir.display()
        ),
    )
}

fn fit(a: &FitArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let problem = Problem::load(&a.problem).map_err(|e| match e {
        repcap::Error::Io(io) => io_err("cannot read problem", &a.problem, io),
        other => other.into(),
    })?;
    let (spec, variant) = parse_variant_name(&a.network)?;
    let network = spec.arch(variant, a.wf);
    if !network.same_io(&problem.arch) {
        return Err(CliError::Config(format!(
            "network {} ({}) does not match the problem ({})",
            a.network,
            network.describe(),
            problem.arch.describe()
        )));
    }
    let mut optimizer = OptimizerConfig::defaults(a.method).with_budget(a.budget);
    if let Some(lr) = a.learning_rate {
        optimizer = optimizer.with_learning_rate(lr);
    }
    optimizer.validate()?;

    let init_seed = a.init_seed.unwrap_or_else(|| init_seed_for(problem.seed));
    let x0 = probgen::init_weights(&network, init_seed);
    let result = optim::run_fit(&network, &problem.dataset, &x0, &optimizer)?;
    let t = &result.trace;
    emit(
        out,
        &format!(
            "network         {}\nmethod          {}\ninit seed       {init_seed}\nf_init          {:.6e}\nf_opt           {:.6e}\ngradient calls  {}\ntermination     {}\n",
            a.network, t.method, t.f_init, t.f_opt, t.gradient_calls_used, t.termination
        ),
    )?;
    if let Some(path) = &a.out {
        let json = serde_json::to_vec_pretty(t).map_err(|e| CliError::Other(e.to_string()))?;
        write_file(path, &json)?;
    }
    Ok(())
}

/// Text printed by `crosscheck` and by `report` with default options.
pub fn tables_text(
    result: &MatrixResult,
    format: Format,
    table: TableChoice,
    summary_method: Option<Method>,
) -> Result<String, CliError> {
    let mut text = String::new();
    if table != TableChoice::Summary {
        text += &render::render_detail(&result.table, format)?;
    }
    if table != TableChoice::Detail {
        if let Some(m) = render::summary_method(&result.table, summary_method) {
            if !text.is_empty() {
                text += "\n";
            }
            text += &render::render_summary(&result.table, m, format)?;
        }
    }
    Ok(text)
}

fn failure_status(result: &MatrixResult) -> Result<(), CliError> {
    let (failed, total) = (result.failed_runs(), result.total_runs());
    if failed == 0 {
        Ok(())
    } else if failed == total {
        Err(CliError::Total(format!("all {total} runs failed")))
    } else {
        Err(CliError::Partial(format!("{failed} of {total} runs failed")))
    }
}

fn crosscheck(a: &CrosscheckArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut flags = a.common.flags();
    flags.methods = a.methods.clone();
    flags.budget = a.budget;
    flags.agg = a.agg.clone();
    flags.workers = a.workers;
    let cfg = RunConfig::resolve(a.common.file()?, flags)?;
    let result = experiment::run_matrix(&cfg.experiment()?, cfg.workers)?;

    create_dir(&cfg.output_dir)?;
    let store = cfg.output_dir.join(RESULTS_FILE);
    experiment::persist(&result, &store).map_err(|e| io_err("cannot write", &store, e))?;
    for format in [Format::Txt, Format::Md, Format::Csv] {
        let ext = render::extension(format);
        let detail = render::render_detail(&result.table, format)?;
        write_file(&cfg.output_dir.join(format!("table_detail.{ext}")), detail.as_bytes())?;
        if let Some(m) = render::summary_method(&result.table, None) {
            let summary = render::render_summary(&result.table, m, format)?;
            write_file(&cfg.output_dir.join(format!("table_summary.{ext}")), summary.as_bytes())?;
        }
    }
    emit(out, &tables_text(&result, Format::Txt, TableChoice::Both, None)?)?;
    failure_status(&result)
}

fn report(a: &ReportArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let result = experiment::load(&a.store).map_err(|e| match e {
        repcap::Error::Io(io) => io_err("cannot read store", &a.store, io),
        other => CliError::Io(format!("{}: {other}", a.store.display())),
    })?;
    if result.table.rows.is_empty() {
        return Err(CliError::Io(format!("{}: store holds no table rows", a.store.display())));
    }
    emit(out, &tables_text(&result, a.format, a.table, a.summary_method)?)
}
