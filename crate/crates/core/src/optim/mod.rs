//! Full-batch optimizers compared by the number of gradient calls.
//!
//! Every method sees the objective only through [`Objective`]. One call of
//! [`Objective::value_and_gradient`] is one gradient call (one epoch); the
//! budget [`OptimizerConfig::max_gradient_calls`] limits these calls. A single
//! value-only evaluation is made at the end of first-order runs so the last
//! iterate is scored; it is reported in [`TrainTrace::objective_calls`] and does
//! not count against the budget.

mod cg;
mod first_order;
mod line_search;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcore::{self, ArchitectureSpec, Dataset, Reduction};

pub use cg::cg_run;
pub use first_order::{adadelta_run, rmsprop_run, sgd_run};
pub use line_search::{
    check_strong_wolfe, scalar_wolfe_search, wolfe_line_search, LineSearchOutcome,
    LineSearchParams,
};

/// Upper bound on stored history points per run.
pub const MAX_HISTORY_POINTS: usize = 500;

/// A differentiable scalar function of a flat vector.
pub trait Objective {
    fn dim(&self) -> usize;

    /// Objective value only.
    fn value(&mut self, x: &[f64]) -> f64;

    /// Objective value, with the gradient written into `grad`.
    fn value_and_gradient(&mut self, x: &[f64], grad: &mut [f64]) -> f64;
}

/// Adapts a closure `f(x, grad) -> value` into an [`Objective`].
pub struct FnObjective<F> {
    dim: usize,
    f: F,
    scratch: Vec<f64>,
}

impl<F> FnObjective<F>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self {
            dim,
            f,
            scratch: vec![0.0; dim],
        }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&mut self, x: &[f64]) -> f64 {
        (self.f)(x, &mut self.scratch)
    }

    fn value_and_gradient(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        (self.f)(x, grad)
    }
}

/// Network training objective on a fixed dataset; shapes are checked on construction.
pub struct NetworkObjective<'a> {
    arch: &'a ArchitectureSpec,
    data: &'a Dataset,
    reduction: Reduction,
}

impl<'a> NetworkObjective<'a> {
    pub fn new(arch: &'a ArchitectureSpec, data: &'a Dataset, reduction: Reduction) -> Result<Self> {
        // one evaluation at zero parameters surfaces every shape error
        let zeros = vec![0.0; arch.param_count()];
        netcore::evaluate(arch, &zeros, data, reduction, None)?;
        Ok(Self {
            arch,
            data,
            reduction,
        })
    }
}

impl Objective for NetworkObjective<'_> {
    fn dim(&self) -> usize {
        self.arch.param_count()
    }

    fn value(&mut self, x: &[f64]) -> f64 {
        netcore::evaluate(self.arch, x, self.data, self.reduction, None)
            .expect("shapes validated on construction")
    }

    fn value_and_gradient(&mut self, x: &[f64], grad: &mut [f64]) -> f64 {
        netcore::evaluate(self.arch, x, self.data, self.reduction, Some(grad))
            .expect("shapes validated on construction")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Adadelta,
    Rmsprop,
    Sgd,
    Cg,
}

impl Method {
    /// All methods, in the order result tables list them.
    pub const ALL: [Method; 4] = [Method::Adadelta, Method::Rmsprop, Method::Sgd, Method::Cg];

    pub fn label(&self) -> &'static str {
        match self {
            Method::Adadelta => "Adadelta",
            Method::Rmsprop => "RMSprop",
            Method::Sgd => "SGD",
            Method::Cg => "CG",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Adadelta => "adadelta",
            Method::Rmsprop => "rmsprop",
            Method::Sgd => "sgd",
            Method::Cg => "cg",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(Method::Sgd),
            "rmsprop" => Ok(Method::Rmsprop),
            "adadelta" => Ok(Method::Adadelta),
            "cg" => Ok(Method::Cg),
            other => Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

/// Conjugate-gradient update formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CgBeta {
    #[default]
    PolakRibierePlus,
    FletcherReeves,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub method: Method,
    pub learning_rate: f64,
    pub decay_rho: f64,
    pub epsilon: f64,
    pub max_gradient_calls: usize,
    pub cg_gradient_tolerance: f64,
    pub cg_beta: CgBeta,
    pub line_search: LineSearchParams,
}

impl OptimizerConfig {
    /// Framework-default hyperparameters for `method` and a 2000-call budget.
    pub fn defaults(method: Method) -> Self {
        let (learning_rate, decay_rho, epsilon) = match method {
            Method::Sgd => (0.01, 0.9, 1e-7),
            Method::Rmsprop => (0.001, 0.9, 1e-7),
            Method::Adadelta => (1.0, 0.95, 1e-7),
            Method::Cg => (1.0, 0.9, 1e-7),
        };
        Self {
            method,
            learning_rate,
            decay_rho,
            epsilon,
            max_gradient_calls: 2000,
            cg_gradient_tolerance: 1e-5,
            cg_beta: CgBeta::default(),
            line_search: LineSearchParams::default(),
        }
    }

    pub fn with_budget(mut self, max_gradient_calls: usize) -> Self {
        self.max_gradient_calls = max_gradient_calls;
        self
    }

    pub fn with_learning_rate(mut self, learning_rate: f64) -> Self {
        self.learning_rate = learning_rate;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.max_gradient_calls == 0 {
            return bad("max_gradient_calls must be at least 1".into());
        }
        match self.method {
            Method::Sgd | Method::Rmsprop | Method::Adadelta => {
                if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
                    return bad(format!("learning rate must be >= 0, got {}", self.learning_rate));
                }
            }
            Method::Cg => {
                if !(self.cg_gradient_tolerance > 0.0) {
                    return bad("cg_gradient_tolerance must be > 0".into());
                }
                self.line_search.validate()?;
            }
        }
        if matches!(self.method, Method::Rmsprop | Method::Adadelta) {
            if !(self.decay_rho > 0.0 && self.decay_rho < 1.0) {
                return bad(format!("decay_rho must lie in (0, 1), got {}", self.decay_rho));
            }
            if !(self.epsilon > 0.0) {
                return bad(format!("epsilon must be > 0, got {}", self.epsilon));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    BudgetExhausted,
    GradientToleranceMet,
    LineSearchFailure,
    /// A non-finite objective or gradient was produced; the trace holds the best finite point.
    NonFinite,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::BudgetExhausted => "budget_exhausted",
            Termination::GradientToleranceMet => "gradient_tolerance_met",
            Termination::LineSearchFailure => "line_search_failure",
            Termination::NonFinite => "non_finite",
        })
    }
}

/// Objective of an iterate and the number of gradient calls spent to reach it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryPoint {
    pub gradient_calls: usize,
    pub objective: f64,
}

/// Record of one optimization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub method: Method,
    pub config: OptimizerConfig,
    pub gradient_calls_used: usize,
    /// Value-only evaluations; these do not count against the budget.
    pub objective_calls: usize,
    pub iterations: usize,
    pub f_init: f64,
    /// Best objective over all visited iterates.
    pub f_opt: f64,
    /// Objective at the last iterate.
    pub f_final: f64,
    pub line_search_restarts: usize,
    pub termination: Termination,
    /// Iterate objectives, thinned to at most [`MAX_HISTORY_POINTS`].
    pub objective_history: Vec<HistoryPoint>,
}

/// Result of a run: its trace and the best parameters visited.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub trace: TrainTrace,
    pub params: Vec<f64>,
}

/// Counts gradient calls and tracks the best iterate of a run.
pub(crate) struct Recorder {
    config: OptimizerConfig,
    pub(crate) gradient_calls: usize,
    objective_calls: usize,
    pub(crate) iterations: usize,
    f_init: Option<f64>,
    f_best: f64,
    f_last: f64,
    x_best: Vec<f64>,
    history: Vec<HistoryPoint>,
    pub(crate) line_search_restarts: usize,
}

impl Recorder {
    pub(crate) fn new(config: &OptimizerConfig) -> Self {
        Self {
            config: config.clone(),
            gradient_calls: 0,
            objective_calls: 0,
            iterations: 0,
            f_init: None,
            f_best: f64::INFINITY,
            f_last: f64::NAN,
            x_best: Vec::new(),
            history: Vec::new(),
            line_search_restarts: 0,
        }
    }

    pub(crate) fn budget_left(&self) -> bool {
        self.gradient_calls < self.config.max_gradient_calls
    }

    /// Evaluates value and gradient, counting the call.
    pub(crate) fn grad<O: Objective + ?Sized>(&mut self, obj: &mut O, x: &[f64], g: &mut [f64]) -> f64 {
        self.gradient_calls += 1;
        obj.value_and_gradient(x, g)
    }

    pub(crate) fn value<O: Objective + ?Sized>(&mut self, obj: &mut O, x: &[f64]) -> f64 {
        self.objective_calls += 1;
        obj.value(x)
    }

    /// Registers the objective of an accepted iterate reached after `calls` gradient calls.
    pub(crate) fn visit(&mut self, x: &[f64], f: f64, calls: usize) {
        if self.f_init.is_none() {
            self.f_init = Some(f);
        }
        self.f_last = f;
        self.history.push(HistoryPoint {
            gradient_calls: calls,
            objective: f,
        });
        if f < self.f_best {
            self.f_best = f;
            self.x_best.clear();
            self.x_best.extend_from_slice(x);
        }
    }

    pub(crate) fn finish(self, termination: Termination) -> RunOutput {
        let f_init = self.f_init.expect("at least one iterate visited");
        RunOutput {
            trace: TrainTrace {
                method: self.config.method,
                config: self.config,
                gradient_calls_used: self.gradient_calls,
                objective_calls: self.objective_calls,
                iterations: self.iterations,
                f_init,
                f_opt: self.f_best,
                f_final: self.f_last,
                line_search_restarts: self.line_search_restarts,
                termination,
                objective_history: thin_history(self.history, MAX_HISTORY_POINTS),
            },
            params: self.x_best,
        }
    }
}

/// Keeps at most `max` evenly spaced points, always including the first and last.
fn thin_history(history: Vec<HistoryPoint>, max: usize) -> Vec<HistoryPoint> {
    let n = history.len();
    if n <= max || max < 2 {
        return history;
    }
    (0..max)
        .map(|k| history[k * (n - 1) / (max - 1)])
        .collect()
}

pub(crate) fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Runs the configured method from `x0`.
pub fn run<O: Objective + ?Sized>(obj: &mut O, x0: &[f64], config: &OptimizerConfig) -> Result<RunOutput> {
    match config.method {
        Method::Sgd => sgd_run(obj, x0, config),
        Method::Rmsprop => rmsprop_run(obj, x0, config),
        Method::Adadelta => adadelta_run(obj, x0, config),
        Method::Cg => cg_run(obj, x0, config),
    }
}

/// Fits `arch` to `data` starting from `x0` with the mean-squared-error objective.
pub fn run_fit(
    arch: &ArchitectureSpec,
    data: &Dataset,
    x0: &[f64],
    config: &OptimizerConfig,
) -> Result<RunOutput> {
    run_fit_with(arch, data, x0, config, Reduction::Mean)
}

pub fn run_fit_with(
    arch: &ArchitectureSpec,
    data: &Dataset,
    x0: &[f64],
    config: &OptimizerConfig,
    reduction: Reduction,
) -> Result<RunOutput> {
    if x0.len() != arch.param_count() {
        return Err(Error::ParameterLength {
            expected: arch.param_count(),
            actual: x0.len(),
        });
    }
    let mut obj = NetworkObjective::new(arch, data, reduction)?;
    run(&mut obj, x0, config)
}
