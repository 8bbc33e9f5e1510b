//! EM estimation for the Gumbel model with independent cure indicators
//! (R = 1) and no covariates, treating the cure indicators as latent data.
//!
//! The E-step posterior over the four cure configurations is available in
//! closed form per censoring pattern: an observed event forces that
//! margin's indicator to zero, the doubly censored pattern uses the ratio
//! of survival components, and the single-event patterns use a Bayes ratio
//! of the margin bracket terms. The M-step maximizes the expected
//! complete-data log-likelihood with the same quasi-Newton machinery as
//! direct estimation, warm-started at the current parameter value.

use crate::cure::OddsRatioRegime;
use crate::data::{BivariateDataset, Observation};
use crate::error::{Error, Result};
use crate::estimate::{assemble_from_point, FitReport};
use crate::likelihood::{loglik, pattern_terms};
use crate::numerics::mix64;
use crate::optim::maximize;
use crate::paramspace::ParamLayout;
use crate::survival::{gumbel_lambda, CureModel, ModelCopula, ModelParams};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// Posterior means of the latent cure indicators for one row:
/// E[X1], E[X2], and E[X1 X2] given the observed data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EStepExpectations {
    pub x1: f64,
    pub x2: f64,
    pub x12: f64,
}

impl EStepExpectations {
    /// Posterior weights over the four configurations
    /// (x1, x2) in {(1,1), (1,0), (0,1), (0,0)}.
    pub fn weights(&self) -> [f64; 4] {
        [
            self.x12,
            self.x1 - self.x12,
            self.x2 - self.x12,
            1.0 - self.x1 - self.x2 + self.x12,
        ]
    }
}

/// EM control settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmConfig {
    /// Convergence tolerance on the Euclidean norm of the untransformed
    /// parameter change.
    pub eps: f64,
    pub max_em_iter: usize,
    /// Multi-start count (start 0 is the direct-fit heuristic).
    pub starts: usize,
    pub mstep_max_iter: usize,
    pub mstep_grad_tol: f64,
    pub seed: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            eps: 1e-5,
            max_em_iter: 500,
            starts: 4,
            mstep_max_iter: 300,
            mstep_grad_tol: 1e-6,
            seed: 0xe111,
        }
    }
}

fn check_scope(params: &ModelParams, data: &BivariateDataset) -> Result<()> {
    if !matches!(params.copula, ModelCopula::Gumbel { .. }) {
        return Err(Error::Unsupported("EM is implemented for the Gumbel copula".into()));
    }
    if !matches!(params.regime, OddsRatioRegime::Eq1) {
        return Err(Error::Unsupported("EM is implemented for the R = 1 regime".into()));
    }
    if !matches!(params.cure, CureModel::Margins { .. }) || data.has_covariates() {
        return Err(Error::Unsupported("EM is implemented for the covariate-free model".into()));
    }
    Ok(())
}

/// Posterior cure-indicator expectations for every row at the current
/// parameter value.
pub fn e_step(params: &ModelParams, data: &BivariateDataset) -> Result<Vec<EStepExpectations>> {
    check_scope(params, data)?;
    params.validate()?;
    let (p1, p2) = match params.cure {
        CureModel::Margins { p1, p2 } => (p1, p2),
        _ => unreachable!(),
    };
    let mut out = Vec::with_capacity(data.n());
    for obs in data.rows() {
        let terms = pattern_terms(params, obs)?;
        let e = match (obs.d1, obs.d2) {
            (true, true) => EStepExpectations { x1: 0.0, x2: 0.0, x12: 0.0 },
            (false, false) => {
                let s = terms.log_survival.exp();
                if !(s > 0.0) {
                    return Err(Error::NumericalDegeneracy(
                        "zero joint survival in the E-step denominator".into(),
                    ));
                }
                let s1u = params.frailty.laplace(params.margin1.cum_hazard(obs.t1));
                let s2u = params.frailty.laplace(params.margin2.cum_hazard(obs.t2));
                EStepExpectations {
                    x1: (p1 * p2 + p1 * (1.0 - p2) * s2u) / s,
                    x2: (p1 * p2 + (1.0 - p1) * p2 * s1u) / s,
                    x12: p1 * p2 / s,
                }
            }
            (true, false) => {
                // X1 = 0 forced; X2 = 1 with posterior p01 m1 / bracket
                let log_m1 = params.frailty.log_power(params.margin1.cum_hazard(obs.t1), 1.0);
                let p01 = (1.0 - p1) * p2;
                let x2 = (p01.ln() + log_m1 - terms.log_inner1).exp();
                EStepExpectations { x1: 0.0, x2: x2.min(1.0), x12: 0.0 }
            }
            (false, true) => {
                let log_m2 = params.frailty.log_power(params.margin2.cum_hazard(obs.t2), 1.0);
                let p10 = p1 * (1.0 - p2);
                let x1 = (p10.ln() + log_m2 - terms.log_inner2).exp();
                EStepExpectations { x1: x1.min(1.0), x2: 0.0, x12: 0.0 }
            }
        };
        out.push(e);
    }
    Ok(out)
}

/// Complete-data log density of one row at a fixed cure configuration;
/// -inf when the configuration is incompatible with an observed event.
fn complete_logdens(params: &ModelParams, obs: &Observation, x1: bool, x2: bool) -> f64 {
    let (p1, p2) = match params.cure {
        CureModel::Margins { p1, p2 } => (p1, p2),
        _ => unreachable!(),
    };
    if (x1 && obs.d1) || (x2 && obs.d2) {
        return f64::NEG_INFINITY;
    }
    let theta = params.copula.theta().unwrap_or(0.0);
    let cure_mass = |x: bool, p: f64| if x { p.ln() } else { (1.0 - p).ln() };
    let mut ll = cure_mass(x1, p1) + cure_mass(x2, p2);
    let h1 = params.margin1.cum_hazard(obs.t1);
    let h2 = params.margin2.cum_hazard(obs.t2);
    let fr = &params.frailty;
    match (x1, x2) {
        (true, true) => {}
        (false, true) => {
            // only margin 1 susceptible
            ll += fr.log_power(h1, if obs.d1 { 1.0 } else { 0.0 });
            if obs.d1 {
                ll += params.margin1.log_hazard_factor(obs.t1);
            }
        }
        (true, false) => {
            ll += fr.log_power(h2, if obs.d2 { 1.0 } else { 0.0 });
            if obs.d2 {
                ll += params.margin2.log_hazard_factor(obs.t2);
            }
        }
        (false, false) => {
            let lambda = gumbel_lambda(theta, h1, h2);
            let ln_lambda = lambda.ln();
            match (obs.d1, obs.d2) {
                (false, false) => ll += fr.log_power(lambda, 0.0),
                (true, false) => {
                    ll += params.margin1.log_hazard_factor(obs.t1)
                        + theta * (h1.ln() - ln_lambda)
                        + fr.log_power(lambda, 1.0);
                }
                (false, true) => {
                    ll += params.margin2.log_hazard_factor(obs.t2)
                        + theta * (h2.ln() - ln_lambda)
                        + fr.log_power(lambda, 1.0);
                }
                (true, true) => {
                    let a = 1.0 + fr.variance * lambda;
                    let bracket = (1.0 + fr.variance) * lambda + theta * a;
                    ll += params.margin1.log_hazard_factor(obs.t1)
                        + params.margin2.log_hazard_factor(obs.t2)
                        + theta * (h1.ln() + h2.ln() - 2.0 * ln_lambda)
                        - ln_lambda
                        + fr.log_power(lambda, 2.0)
                        + bracket.ln();
                }
            }
        }
    }
    ll
}

const CONFIGS: [(bool, bool); 4] = [(true, true), (true, false), (false, true), (false, false)];

/// Expected complete-data log-likelihood Q(psi | expectations). Weights of
/// exactly zero suppress their configuration term, so pattern-forced zeros
/// never multiply an infinite log density.
pub fn q_function(
    params: &ModelParams,
    expectations: &[EStepExpectations],
    data: &BivariateDataset,
) -> f64 {
    debug_assert_eq!(expectations.len(), data.n());
    let mut total = 0.0;
    for (obs, e) in data.rows().iter().zip(expectations) {
        let weights = e.weights();
        for (w, (x1, x2)) in weights.into_iter().zip(CONFIGS) {
            if w > 0.0 {
                total += w * complete_logdens(params, obs, x1, x2);
            }
        }
    }
    if total.is_nan() {
        f64::NEG_INFINITY
    } else {
        total
    }
}

/// EM run output: the fit report plus the observed log-likelihood after
/// each iteration (the ascent trajectory).
#[derive(Debug, Clone)]
pub struct EmFit {
    pub report: FitReport,
    pub iterations: usize,
    pub loglik_path: Vec<f64>,
}

fn em_single_start(
    start: &ModelParams,
    layout: &ParamLayout,
    data: &BivariateDataset,
    config: &EmConfig,
) -> Result<(ModelParams, usize, Vec<f64>, bool)> {
    let mut params = start.clone();
    let mut prev_ll = loglik(&params, data);
    if !prev_ll.is_finite() {
        return Err(Error::NonConvergence("EM start has non-finite log-likelihood".into()));
    }
    let mut path = vec![prev_ll];
    let mut converged = false;
    let mut iterations = 0;
    for k in 1..=config.max_em_iter {
        iterations = k;
        let expectations = e_step(&params, data)?;
        let x = layout.pack(&params);
        let res = maximize(
            |x| q_function(&layout.unpack(x), &expectations, data),
            &x,
            config.mstep_max_iter,
            config.mstep_grad_tol,
        );
        let new_params = layout.unpack(&res.x);
        let new_ll = loglik(&new_params, data);
        if new_ll < prev_ll - 1e-8 {
            return Err(Error::NumericalDegeneracy(format!(
                "EM ascent violated at iteration {k}: {prev_ll} -> {new_ll}"
            )));
        }
        path.push(new_ll);
        let old_v = layout.values(&params);
        let new_v = layout.values(&new_params);
        let delta: f64 = old_v
            .iter()
            .zip(&new_v)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        params = new_params;
        prev_ll = new_ll;
        if delta <= config.eps {
            converged = true;
            break;
        }
    }
    Ok((params, iterations, path, converged))
}

/// Fit by EM with multiple starts; keeps the run with the best final
/// observed log-likelihood. Standard errors come from the observed
/// information of the observed-data log-likelihood at the EM limit.
pub fn em_fit(data: &BivariateDataset, config: &EmConfig) -> Result<EmFit> {
    em_fit_from(data, config, None)
}

/// Like [`em_fit`], but start 0 can be pinned to a given parameter value
/// (the direct-optimization MLE in the comparison study).
pub fn em_fit_from(
    data: &BivariateDataset,
    config: &EmConfig,
    start0: Option<&ModelParams>,
) -> Result<EmFit> {
    if data.n() == 0 {
        return Err(Error::InsufficientData("EM needs a nonempty dataset".into()));
    }
    let heuristic = crate::estimate::em_start_template(data)?;
    check_scope(&heuristic, data)?;
    let layout = ParamLayout::for_model(&heuristic, &[], &[])?;
    let base = match start0 {
        Some(p) => {
            check_scope(p, data)?;
            p.clone()
        }
        None => heuristic,
    };
    let x0 = layout.pack(&base);

    let mut best: Option<(ModelParams, usize, Vec<f64>)> = None;
    let mut failures = Vec::new();
    for s in 0..config.starts.max(1) {
        let xs: Vec<f64> = if s == 0 {
            x0.clone()
        } else {
            let mut rng = ChaCha12Rng::seed_from_u64(mix64(config.seed, s as u64));
            x0.iter().map(|&x| x + rng.random_range(-0.3..=0.3)).collect()
        };
        let start = layout.unpack(&xs);
        match em_single_start(&start, &layout, data, config) {
            Ok((params, iterations, path, converged)) => {
                if !converged {
                    failures.push(format!("start {s}: hit max_em_iter"));
                    continue;
                }
                let ll = *path.last().unwrap();
                let better = best
                    .as_ref()
                    .map_or(true, |(_, _, p)| ll > *p.last().unwrap());
                if better {
                    best = Some((params, iterations, path));
                }
            }
            Err(e) => failures.push(format!("start {s}: {e}")),
        }
    }
    let (params, iterations, path) = best.ok_or_else(|| {
        Error::NonConvergence(format!("no EM start converged: [{}]", failures.join("; ")))
    })?;
    let mut report = assemble_from_point(
        &layout,
        data,
        &params,
        true,
        iterations,
        vec![format!("EM converged in {iterations} iterations (eps {})", config.eps)],
    )?;
    report.iterations = iterations;
    Ok(EmFit { report, iterations, loglik_path: path })
}
