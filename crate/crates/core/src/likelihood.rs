//! Observed-data log-likelihood for censored bivariate pairs.
//!
//! Each row contributes exactly one of four censoring-pattern terms:
//! log S, log(-dS/dt1), log(-dS/dt2), or log(d2S/dt1 dt2), all evaluated
//! from the model's closed forms. Writing H_j = r_j t^(a_j) and w_j =
//! dH_j/dt, the derivative terms factor as w_j times a bracket in the
//! H's (the B terms of the Gumbel model and the D/E terms of the FGM
//! model); brackets are assembled by signed log-sum-exp because the cure
//! cells and the power terms span many orders of magnitude.
//!
//! Non-finite intermediates (overflow, log of a non-positive bracket)
//! surface as a -inf log-likelihood, never a panic, so the optimizer can
//! back away from infeasible regions.

use crate::cure::CureCells;
use crate::data::{BivariateDataset, Observation};
use crate::error::{Error, Result};
use crate::numerics::{central_gradient, signed_log_sum};
use crate::paramspace::ParamLayout;
use crate::survival::{gumbel_lambda, FrailtySpec, ModelCopula, ModelParams};

#[cfg(test)]
use std::cell::Cell;

#[cfg(test)]
thread_local! {
    static DOUBLE_EVENT_EVALS: Cell<usize> = const { Cell::new(0) };
}

/// Log-scale pieces of the copula-mixture fourth term Phi(H1, H2):
/// Phi itself, its negated H-partials, and the mixed H-derivative.
struct PhiLogs {
    phi: f64,
    phi1: f64,
    phi2: f64,
    phi12: f64,
}

fn phi_logs(copula: ModelCopula, frailty: &FrailtySpec, h1: f64, h2: f64) -> PhiLogs {
    let inf = f64::NEG_INFINITY;
    match copula {
        ModelCopula::Independence => {
            let s = h1 + h2;
            PhiLogs {
                phi: frailty.log_power(s, 0.0),
                phi1: frailty.log_power(s, 1.0),
                phi2: frailty.log_power(s, 1.0),
                phi12: (1.0 + frailty.variance).ln() + frailty.log_power(s, 2.0),
            }
        }
        ModelCopula::Gumbel { theta } => {
            let gamma = frailty.variance;
            let lambda = gumbel_lambda(theta, h1, h2);
            let ln_lambda = lambda.ln();
            let a = 1.0 + gamma * lambda;
            let bracket = (1.0 + gamma) * lambda + theta * a;
            PhiLogs {
                phi: frailty.log_power(lambda, 0.0),
                phi1: theta * (h1.ln() - ln_lambda) + frailty.log_power(lambda, 1.0),
                phi2: theta * (h2.ln() - ln_lambda) + frailty.log_power(lambda, 1.0),
                phi12: theta * (h1.ln() + h2.ln() - 2.0 * ln_lambda) - ln_lambda
                    + frailty.log_power(lambda, 2.0)
                    + bracket.ln(),
            }
        }
        ModelCopula::Fgm { theta } => {
            let terms = crate::copula::gen_fgm_terms(theta);
            let mut t0 = [(0.0, 0.0); 4];
            let mut t1 = [(0.0, 0.0); 4];
            let mut t2 = [(0.0, 0.0); 4];
            let mut t12 = [(0.0, 0.0); 4];
            for (k, &(a, b, c)) in terms.iter().enumerate() {
                let s = a * h1 + b * h2;
                t0[k] = (c, frailty.log_power(s, 0.0));
                t1[k] = (c * a, frailty.log_power(s, 1.0));
                t2[k] = (c * b, frailty.log_power(s, 1.0));
                t12[k] = (c * a * b, frailty.log_power(s, 2.0));
            }
            PhiLogs {
                phi: signed_log_sum(&t0).unwrap_or(inf),
                phi1: signed_log_sum(&t1).unwrap_or(inf),
                phi2: signed_log_sum(&t2).unwrap_or(inf),
                phi12: signed_log_sum(&t12)
                    .map(|v| (1.0 + frailty.variance).ln() + v)
                    .unwrap_or(inf),
            }
        }
    }
}

/// Log of the bracket p_off * (1 + gamma h)^-(1/gamma+1) + p00 * Phi_j,
/// the content of B_ij / D_ij with the Weibull factor w_j cancelled.
fn inner_log(p_off: f64, log_m: f64, p00: f64, log_phi_j: f64) -> f64 {
    signed_log_sum(&[(p_off, log_m), (p00, log_phi_j)]).unwrap_or(f64::NEG_INFINITY)
}

/// The four pattern contributions of one observation, all on the log scale,
/// plus the margin brackets exposed for testing.
#[derive(Debug, Clone, Copy)]
pub struct PatternTerms {
    /// log S(t1, t2)
    pub log_survival: f64,
    /// log(-dS/dt1): the single-event margin-1 term
    pub log_f1: f64,
    /// log(-dS/dt2)
    pub log_f2: f64,
    /// log(d2S/dt1 dt2): the double-event term
    pub log_f12: f64,
    /// bracket of log_f1 without the Weibull hazard factor
    pub log_inner1: f64,
    /// bracket of log_f2 without the Weibull hazard factor
    pub log_inner2: f64,
}

/// Evaluate all four pattern terms analytically at one observation.
pub fn pattern_terms(params: &ModelParams, obs: &Observation) -> Result<PatternTerms> {
    params.validate()?;
    if !(obs.t1 > 0.0 && obs.t2 > 0.0) {
        return Err(Error::ParamDomain("pattern terms require positive times".into()));
    }
    let cells = params.cure.cells(params.regime, obs.x1.as_deref(), obs.x2.as_deref())?;
    Ok(pattern_terms_at(params, &cells, obs))
}

fn pattern_terms_at(params: &ModelParams, cells: &CureCells, obs: &Observation) -> PatternTerms {
    let h1 = params.margin1.cum_hazard(obs.t1);
    let h2 = params.margin2.cum_hazard(obs.t2);
    let logs = phi_logs(params.copula, &params.frailty, h1, h2);
    let log_m1 = params.frailty.log_power(h1, 1.0);
    let log_m2 = params.frailty.log_power(h2, 1.0);
    let log_s1 = params.frailty.log_power(h1, 0.0);
    let log_s2 = params.frailty.log_power(h2, 0.0);
    let log_w1 = params.margin1.log_hazard_factor(obs.t1);
    let log_w2 = params.margin2.log_hazard_factor(obs.t2);

    let log_survival = signed_log_sum(&[
        (cells.p11, 0.0),
        (cells.p01, log_s1),
        (cells.p10, log_s2),
        (cells.p00, logs.phi),
    ])
    .unwrap_or(f64::NEG_INFINITY);
    let log_inner1 = inner_log(cells.p01, log_m1, cells.p00, logs.phi1);
    let log_inner2 = inner_log(cells.p10, log_m2, cells.p00, logs.phi2);
    let log_f12 = log_w1 + log_w2 + cells.p00.ln() + logs.phi12;
    PatternTerms {
        log_survival,
        log_f1: log_w1 + log_inner1,
        log_f2: log_w2 + log_inner2,
        log_f12,
        log_inner1,
        log_inner2,
    }
}

fn row_loglik(params: &ModelParams, cells: &CureCells, obs: &Observation) -> f64 {
    let h1 = params.margin1.cum_hazard(obs.t1);
    let h2 = params.margin2.cum_hazard(obs.t2);
    match (obs.d1, obs.d2) {
        (false, false) => {
            let logs = phi_logs(params.copula, &params.frailty, h1, h2);
            signed_log_sum(&[
                (cells.p11, 0.0),
                (cells.p01, params.frailty.log_power(h1, 0.0)),
                (cells.p10, params.frailty.log_power(h2, 0.0)),
                (cells.p00, logs.phi),
            ])
            .unwrap_or(f64::NEG_INFINITY)
        }
        (true, false) => {
            let logs = phi_logs(params.copula, &params.frailty, h1, h2);
            params.margin1.log_hazard_factor(obs.t1)
                + inner_log(cells.p01, params.frailty.log_power(h1, 1.0), cells.p00, logs.phi1)
        }
        (false, true) => {
            let logs = phi_logs(params.copula, &params.frailty, h1, h2);
            params.margin2.log_hazard_factor(obs.t2)
                + inner_log(cells.p10, params.frailty.log_power(h2, 1.0), cells.p00, logs.phi2)
        }
        (true, true) => {
            #[cfg(test)]
            DOUBLE_EVENT_EVALS.with(|c| c.set(c.get() + 1));
            let logs = phi_logs(params.copula, &params.frailty, h1, h2);
            params.margin1.log_hazard_factor(obs.t1)
                + params.margin2.log_hazard_factor(obs.t2)
                + cells.p00.ln()
                + logs.phi12
        }
    }
}

/// Observed-data log-likelihood. Returns -inf when any row contribution is
/// non-finite (infeasible parameter values, degenerate cure cells, bracket
/// cancellation).
pub fn loglik(params: &ModelParams, data: &BivariateDataset) -> f64 {
    let shared_cells = if params.cure.has_covariates() {
        None
    } else {
        match params.cure.cells(params.regime, None, None) {
            Ok(c) => Some(c),
            Err(_) => return f64::NEG_INFINITY,
        }
    };
    let mut total = 0.0;
    for obs in data.rows() {
        let cells = match &shared_cells {
            Some(c) => *c,
            None => match params.cure.cells(params.regime, obs.x1.as_deref(), obs.x2.as_deref()) {
                Ok(c) => c,
                Err(_) => return f64::NEG_INFINITY,
            },
        };
        let term = row_loglik(params, &cells, obs);
        if term == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        total += term;
    }
    if total.is_nan() {
        f64::NEG_INFINITY
    } else {
        total
    }
}

/// Like [`loglik`] but reports which row went non-finite; used for
/// diagnostics rather than inside optimizer loops.
pub fn loglik_verbose(params: &ModelParams, data: &BivariateDataset) -> Result<f64> {
    params.validate()?;
    if data.n() == 0 {
        return Err(Error::InsufficientData("log-likelihood needs a nonempty dataset".into()));
    }
    let mut total = 0.0;
    for (i, obs) in data.rows().iter().enumerate() {
        let cells = params.cure.cells(params.regime, obs.x1.as_deref(), obs.x2.as_deref())?;
        let term = row_loglik(params, &cells, obs);
        if !term.is_finite() {
            return Err(Error::NumericalDegeneracy(format!(
                "non-finite log-likelihood contribution at row {i} (pattern ({}, {}))",
                obs.d1 as u8, obs.d2 as u8
            )));
        }
        total += term;
    }
    Ok(total)
}

/// Central-difference gradient of the log-likelihood on the transformed
/// (unconstrained) parameter scale, step 1e-6 * max(1, |psi|).
pub fn loglik_gradient(params: &ModelParams, data: &BivariateDataset) -> Result<Vec<f64>> {
    let (n1, n2) = data.covariate_names();
    let layout = ParamLayout::for_model(params, n1, n2)?;
    let x = layout.pack(params);
    central_gradient(|x| loglik(&layout.unpack(x), data), &x, 1e-6)
}

#[cfg(test)]
pub(crate) fn reset_double_event_counter() {
    DOUBLE_EVENT_EVALS.with(|c| c.set(0));
}

#[cfg(test)]
pub(crate) fn double_event_evals() -> usize {
    DOUBLE_EVENT_EVALS.with(|c| c.get())
}
