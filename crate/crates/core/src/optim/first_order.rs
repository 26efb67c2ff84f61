use super::{all_finite, Objective, OptimizerConfig, Recorder, RunOutput, Termination};
use crate::error::{Error, Result};

/// Shared loop: one gradient call per iteration, then `step` updates `x` in place.
fn first_order<O, S>(obj: &mut O, x0: &[f64], config: &OptimizerConfig, mut step: S) -> Result<RunOutput>
where
    O: Objective + ?Sized,
    S: FnMut(&mut [f64], &[f64]),
{
    config.validate()?;
    let mut rec = Recorder::new(config);
    let mut x = x0.to_vec();
    let mut g = vec![0.0; x.len()];

    while rec.budget_left() {
        let f = rec.grad(obj, &x, &mut g);
        if !f.is_finite() || !all_finite(&g) {
            if rec.gradient_calls == 1 {
                return Err(Error::NonFiniteStart);
            }
            return Ok(rec.finish(Termination::NonFinite));
        }
        rec.visit(&x, f, rec.iterations);
        step(&mut x, &g);
        rec.iterations += 1;
    }

    let f = rec.value(obj, &x);
    if !f.is_finite() {
        return Ok(rec.finish(Termination::NonFinite));
    }
    rec.visit(&x, f, rec.iterations);
    Ok(rec.finish(Termination::BudgetExhausted))
}

/// Full-batch gradient descent `x <- x - lr * g`.
pub fn sgd_run<O: Objective + ?Sized>(obj: &mut O, x0: &[f64], config: &OptimizerConfig) -> Result<RunOutput> {
    let lr = config.learning_rate;
    first_order(obj, x0, config, |x, g| {
        for (xi, gi) in x.iter_mut().zip(g) {
            *xi -= lr * gi;
        }
    })
}

/// RMSprop: `a <- rho a + (1 - rho) g^2`, `x <- x - lr g / (sqrt(a) + eps)`.
pub fn rmsprop_run<O: Objective + ?Sized>(obj: &mut O, x0: &[f64], config: &OptimizerConfig) -> Result<RunOutput> {
    let (lr, rho, eps) = (config.learning_rate, config.decay_rho, config.epsilon);
    let mut acc = vec![0.0; x0.len()];
    first_order(obj, x0, config, |x, g| {
        for ((xi, gi), ai) in x.iter_mut().zip(g).zip(acc.iter_mut()) {
            *ai = rho * *ai + (1.0 - rho) * gi * gi;
            *xi -= lr * gi / (ai.sqrt() + eps);
        }
    })
}

/// Adadelta with running averages of squared gradients `a` and squared updates `u`:
/// `dx = sqrt(u + eps) / sqrt(a + eps) * g`, `x <- x - lr dx`.
pub fn adadelta_run<O: Objective + ?Sized>(obj: &mut O, x0: &[f64], config: &OptimizerConfig) -> Result<RunOutput> {
    let (lr, rho, eps) = (config.learning_rate, config.decay_rho, config.epsilon);
    let mut acc_grad = vec![0.0; x0.len()];
    let mut acc_update = vec![0.0; x0.len()];
    first_order(obj, x0, config, |x, g| {
        for i in 0..x.len() {
            let gi = g[i];
            acc_grad[i] = rho * acc_grad[i] + (1.0 - rho) * gi * gi;
            let dx = (acc_update[i] + eps).sqrt() / (acc_grad[i] + eps).sqrt() * gi;
            acc_update[i] = rho * acc_update[i] + (1.0 - rho) * dx * dx;
            x[i] -= lr * dx;
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::{FnObjective, Method};

    fn square() -> FnObjective<impl FnMut(&[f64], &mut [f64]) -> f64> {
        FnObjective::new(1, |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * x[0];
            x[0] * x[0]
        })
    }

    fn cfg(method: Method, budget: usize) -> OptimizerConfig {
        OptimizerConfig::defaults(method).with_budget(budget)
    }

    #[test]
    fn sgd_single_step_arithmetic() {
        // linear objective g.x with g = [0.5, -1], so the stepped point is also the best one
        let mut obj = FnObjective::new(2, |x: &[f64], g: &mut [f64]| {
            g[0] = 0.5;
            g[1] = -1.0;
            0.5 * x[0] - x[1]
        });
        let out = sgd_run(&mut obj, &[1.0, 2.0], &cfg(Method::Sgd, 1).with_learning_rate(0.1)).unwrap();
        assert_eq!(out.trace.gradient_calls_used, 1);
        assert!((out.params[0] - 0.95).abs() < 1e-15);
        assert!((out.params[1] - 2.1).abs() < 1e-15);
    }

    #[test]
    fn sgd_square_follows_closed_form() {
        // x_k = (1 - 2 lr)^k = 0.8^k
        for k in [1usize, 5, 30] {
            let out = sgd_run(&mut square(), &[1.0], &cfg(Method::Sgd, k).with_learning_rate(0.1)).unwrap();
            let expected = 0.8f64.powi(k as i32);
            assert!((out.params[0] - expected).abs() < 1e-14 * (1.0 + expected));
            assert!((out.trace.f_opt - expected * expected).abs() < 1e-14);
            let h = &out.trace.objective_history;
            assert!(h.windows(2).all(|w| w[1].objective < w[0].objective));
        }
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        for m in [Method::Sgd, Method::Rmsprop, Method::Adadelta] {
            let out = run_method(&cfg(m, 10).with_learning_rate(0.0));
            assert_eq!(out.params, vec![1.0]);
            assert_eq!(out.trace.f_opt, out.trace.f_init);
            assert_eq!(out.trace.f_final, out.trace.f_init);
        }
    }

    fn run_method(c: &OptimizerConfig) -> RunOutput {
        crate::optim::run(&mut square(), &[1.0], c).unwrap()
    }

    #[test]
    fn rmsprop_first_step() {
        let c = cfg(Method::Rmsprop, 1);
        let g = 2.0;
        let x1 = 1.0 - c.learning_rate * g / (((1.0 - c.decay_rho) * g * g).sqrt() + c.epsilon);
        let out = rmsprop_run(&mut square(), &[1.0], &c).unwrap();
        assert_eq!(out.params, vec![x1]);
        assert!((out.trace.f_final - x1 * x1).abs() < 1e-15);
    }

    #[test]
    fn rmsprop_constant_gradient_step_bounded_by_lr() {
        let mut obj = FnObjective::new(1, |x: &[f64], g: &mut [f64]| {
            g[0] = 3.0;
            3.0 * x[0]
        });
        let c = cfg(Method::Rmsprop, 200);
        let out = rmsprop_run(&mut obj, &[0.0], &c).unwrap();
        // final iterate is reached after 200 steps; the last steps approach lr
        let x_final = out.trace.f_final / 3.0;
        assert!(x_final < 0.0);
        let per_step = -x_final / 200.0;
        assert!(per_step <= 3.2 * c.learning_rate);
        assert!(per_step >= c.learning_rate * 0.99);
    }

    #[test]
    fn zero_gradient_keeps_point() {
        for m in [Method::Rmsprop, Method::Adadelta, Method::Sgd] {
            let mut obj = FnObjective::new(2, |_: &[f64], g: &mut [f64]| {
                g.fill(0.0);
                1.5
            });
            let out = crate::optim::run(&mut obj, &[0.3, -0.7], &cfg(m, 25)).unwrap();
            assert_eq!(out.params, vec![0.3, -0.7]);
            assert_eq!(out.trace.f_final, 1.5);
        }
    }

    #[test]
    fn adadelta_first_step() {
        let c = cfg(Method::Adadelta, 1);
        let g = 2.0;
        let step = c.learning_rate * c.epsilon.sqrt() / ((1.0 - c.decay_rho) * g * g + c.epsilon).sqrt() * g;
        let out = adadelta_run(&mut square(), &[1.0], &c).unwrap();
        let x1 = 1.0 - step;
        assert!((out.trace.f_final - x1 * x1).abs() < 1e-15);
    }

    #[test]
    fn adadelta_decreases_square() {
        let out = adadelta_run(&mut square(), &[1.0], &cfg(Method::Adadelta, 200)).unwrap();
        let h = &out.trace.objective_history;
        assert!(h.windows(2).all(|w| w[1].objective < w[0].objective));
        assert!(out.trace.f_final < out.trace.f_init);
    }

    #[test]
    fn budget_one_spends_one_call() {
        for m in [Method::Sgd, Method::Rmsprop, Method::Adadelta] {
            let out = run_method(&cfg(m, 1));
            assert_eq!(out.trace.gradient_calls_used, 1);
            assert_eq!(out.trace.objective_calls, 1);
            assert!(out.trace.f_opt <= out.trace.f_init);
        }
    }

    #[test]
    fn divergence_is_flagged() {
        // lr = 10 on x^2 multiplies x by -19 each step until overflow
        let out = sgd_run(&mut square(), &[1.0], &cfg(Method::Sgd, 2000).with_learning_rate(10.0)).unwrap();
        assert_eq!(out.trace.termination, Termination::NonFinite);
        assert_eq!(out.trace.f_opt, 1.0);
        assert!(out.trace.gradient_calls_used < 2000);
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let mut obj = FnObjective::new(1, |_: &[f64], g: &mut [f64]| {
            g[0] = 0.0;
            f64::NAN
        });
        assert!(matches!(
            sgd_run(&mut obj, &[0.0], &cfg(Method::Sgd, 3)),
            Err(Error::NonFiniteStart)
        ));
    }
}
