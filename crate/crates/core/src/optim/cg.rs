use super::line_search::{dot, scalar_wolfe_search};
use super::{all_finite, CgBeta, Objective, OptimizerConfig, Recorder, RunOutput, Termination};
use crate::error::{Error, Result};

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Nonlinear conjugate gradient with a strong Wolfe line search.
///
/// The direction is reset to steepest descent every `dim` iterations and
/// whenever it stops being a descent direction. A failed line search restarts
/// along steepest descent; a failure along steepest descent ends the run.
/// Every evaluation, including those inside line searches, is a gradient call;
/// a line search started before the budget ran out is allowed to finish.
pub fn cg_run<O: Objective + ?Sized>(obj: &mut O, x0: &[f64], config: &OptimizerConfig) -> Result<RunOutput> {
    config.validate()?;
    let n = x0.len();
    let ls = config.line_search;
    let mut rec = Recorder::new(config);

    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut f = rec.grad(obj, &x, &mut g);
    if !f.is_finite() || !all_finite(&g) {
        return Err(Error::NonFiniteStart);
    }
    rec.visit(&x, f, 0);

    let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    // makes the first trial step 1.01 / |g|
    let mut f_prev = f + dot(&g, &g).sqrt() / 2.0;
    let mut since_restart = 0usize;

    let termination = loop {
        if max_abs(&g) <= config.cg_gradient_tolerance {
            break Termination::GradientToleranceMet;
        }
        if !rec.budget_left() {
            break Termination::BudgetExhausted;
        }
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            steepest_descent(&mut d, &g);
            slope = dot(&g, &d);
            since_restart = 0;
        }
        let guess = 1.01 * 2.0 * (f - f_prev) / slope;
        let alpha0 = if guess.is_finite() && guess > 0.0 {
            guess.min(ls.initial_step)
        } else {
            ls.initial_step
        };

        let search = scalar_wolfe_search(
            |alpha| {
                for ((t, xi), di) in x_new.iter_mut().zip(&x).zip(&d) {
                    *t = xi + alpha * di;
                }
                let v = rec.grad(obj, &x_new, &mut g_new);
                (v, dot(&g_new, &d))
            },
            f,
            slope,
            alpha0,
            &ls,
        );

        match search {
            Ok(step) => {
                // the accepted point is always the last one evaluated
                std::mem::swap(&mut x, &mut x_new);
                std::mem::swap(&mut g, &mut g_new);
                f_prev = f;
                f = step.value;
                rec.iterations += 1;
                rec.visit(&x, f, rec.gradient_calls - 1);

                let g_old = &g_new;
                let old_sq = dot(g_old, g_old);
                let mut beta = match config.cg_beta {
                    CgBeta::PolakRibierePlus => {
                        let pr = g.iter().zip(g_old).map(|(a, b)| a * (a - b)).sum::<f64>() / old_sq;
                        pr.max(0.0)
                    }
                    CgBeta::FletcherReeves => dot(&g, &g) / old_sq,
                };
                since_restart += 1;
                if since_restart >= n || !beta.is_finite() {
                    beta = 0.0;
                    since_restart = 0;
                }
                for (di, gi) in d.iter_mut().zip(&g) {
                    *di = beta * *di - gi;
                }
            }
            Err(Error::LineSearchFailed { .. }) => {
                if since_restart == 0 {
                    break Termination::LineSearchFailure;
                }
                rec.line_search_restarts += 1;
                steepest_descent(&mut d, &g);
                since_restart = 0;
            }
            Err(e) => return Err(e),
        }
    };
    Ok(rec.finish(termination))
}

fn steepest_descent(d: &mut [f64], g: &[f64]) {
    for (di, gi) in d.iter_mut().zip(g) {
        *di = -gi;
    }
}
