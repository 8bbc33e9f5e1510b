//! Maximum-likelihood fitting: multi-start quasi-Newton optimization on the
//! transformed scale, observed-information standard errors, back-transformed
//! Wald intervals, AIC/BIC bookkeeping, regime comparison, and the
//! likelihood ratio test of cure independence (R = 1).

use crate::cure::{CureRegression, OddsRatioRegime};
use crate::data::BivariateDataset;
use crate::error::{Error, Result};
use crate::likelihood::loglik;
use crate::numerics::{central_hessian, mix64};
use crate::optim::{maximize, OptimResult};
use crate::paramspace::{ParamLayout, Transform};
use crate::survival::{CureModel, FrailtySpec, ModelCopula, ModelParams, WeibullMargin};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Copula family selector for fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CopulaKind {
    Independence,
    Gumbel,
    Fgm,
}

/// Odds-ratio regime selector for fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    Eq1,
    Lt1,
    Gt1,
    Inf,
}

impl RegimeKind {
    pub const ALL: [RegimeKind; 4] = [RegimeKind::Eq1, RegimeKind::Lt1, RegimeKind::Gt1, RegimeKind::Inf];

    pub fn label(&self) -> &'static str {
        match self {
            RegimeKind::Eq1 => "eq1",
            RegimeKind::Lt1 => "lt1",
            RegimeKind::Gt1 => "gt1",
            RegimeKind::Inf => "inf",
        }
    }
}

/// Multi-start optimizer settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitConfig {
    /// Number of starts; start 0 is the moment-flavored heuristic, the rest
    /// are perturbations of it.
    pub starts: usize,
    pub max_iter: usize,
    pub grad_tol: f64,
    /// Half-width of the uniform perturbation applied on the transformed
    /// scale (0.3 is roughly +-30% for log-scale coordinates).
    pub perturb_scale: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { starts: 8, max_iter: 500, grad_tol: 1e-6, perturb_scale: 0.3, seed: 0x0b1c_u64 }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.starts < 1 {
            return Err(Error::Config("at least one start is required".into()));
        }
        if !(self.grad_tol > 0.0 && self.perturb_scale >= 0.0 && self.max_iter > 0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// One back-transformed parameter estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub name: String,
    pub estimate: f64,
    /// Delta-method standard error on the original scale; absent when the
    /// observed information is singular.
    pub se: Option<f64>,
    /// 95% Wald interval, back-transformed from the unconstrained scale.
    pub ci: Option<(f64, f64)>,
}

/// Per-regime row of the model-comparison table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegimeSummary {
    pub regime: String,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub n_params: usize,
    pub converged: bool,
    pub error: Option<String>,
}

/// Full fit output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub params: ModelParams,
    pub estimates: Vec<ParamEstimate>,
    pub loglik: f64,
    pub n_params: usize,
    pub n_obs: usize,
    pub aic: f64,
    pub bic: f64,
    pub converged: bool,
    pub grad_inf_norm: f64,
    pub iterations: usize,
    pub starts_converged: usize,
    pub se_available: bool,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub regime_table: Option<Vec<RegimeSummary>>,
}

const Z_95: f64 = 1.96;

/// Back-transformed Wald interval: endpoints g^-1(g(psi) +- 1.96 se_t), with
/// `se_t` the standard error on the transformed scale.
pub fn wald_ci(estimate: f64, se_transformed: f64, transform: Transform) -> (f64, f64) {
    let x = transform.forward(estimate);
    (
        transform.inverse(x - Z_95 * se_transformed),
        transform.inverse(x + Z_95 * se_transformed),
    )
}

/// 90th percentile of observed event times of one margin; the cure-fraction
/// heuristic counts censored subjects beyond it.
fn cure_heuristic(data: &BivariateDataset, margin: usize) -> f64 {
    let pick = |r: &crate::data::Observation| if margin == 1 { (r.t1, r.d1) } else { (r.t2, r.d2) };
    let mut event_times: Vec<f64> =
        data.rows().iter().map(&pick).filter(|(_, d)| *d).map(|(t, _)| t).collect();
    if event_times.is_empty() {
        return 0.5;
    }
    event_times.sort_by(f64::total_cmp);
    let q90 = event_times[((event_times.len() - 1) as f64 * 0.9).floor() as usize];
    let late_censored =
        data.rows().iter().map(&pick).filter(|(t, d)| !*d && *t > q90).count();
    (late_censored as f64 / data.n() as f64).clamp(0.02, 0.9)
}

/// Moment-flavored starting point: Weibull shape 1 with rate events per
/// unit of observed time, frailty variance 0.5, small dependence, cure
/// fractions from the late-censoring heuristic.
fn start_template(
    copula: CopulaKind,
    regime: RegimeKind,
    data: &BivariateDataset,
) -> Result<ModelParams> {
    let rate = |margin: usize| {
        let (events, total): (usize, f64) = match margin {
            1 => (data.d1_total(), data.rows().iter().map(|r| r.t1).sum()),
            _ => (data.d2_total(), data.rows().iter().map(|r| r.t2).sum()),
        };
        (events as f64 / total.max(1e-12)).clamp(1e-4, 1e4)
    };
    let p1 = cure_heuristic(data, 1);
    let p2 = cure_heuristic(data, 2);
    let logit = |p: f64| (p / (1.0 - p)).ln();
    let (names1, names2) = data.covariate_names();
    let cure = if data.has_covariates() {
        let beta = |p: f64, len: usize| {
            let mut b = vec![0.0; len + 1];
            b[0] = logit(p);
            b
        };
        match regime {
            RegimeKind::Inf => {
                let pooled = 0.5 * (p1 + p2);
                CureModel::Regression(CureRegression::shared(beta(pooled, names1.len())))
            }
            _ => CureModel::Regression(CureRegression::new(
                beta(p1, names1.len()),
                beta(p2, names2.len()),
            )),
        }
    } else {
        match regime {
            RegimeKind::Inf => {
                let pooled = 0.5 * (p1 + p2);
                CureModel::Margins { p1: pooled, p2: pooled }
            }
            _ => CureModel::Margins { p1, p2 },
        }
    };
    Ok(ModelParams {
        copula: match copula {
            CopulaKind::Independence => ModelCopula::Independence,
            CopulaKind::Gumbel => ModelCopula::Gumbel { theta: 0.5 },
            CopulaKind::Fgm => ModelCopula::Fgm { theta: 0.0 },
        },
        frailty: FrailtySpec { variance: 0.5 },
        cure,
        regime: match regime {
            RegimeKind::Eq1 => OddsRatioRegime::Eq1,
            RegimeKind::Lt1 => OddsRatioRegime::Lt1 { r: 0.5 },
            RegimeKind::Gt1 => OddsRatioRegime::Gt1 { r: 2.0 },
            RegimeKind::Inf => OddsRatioRegime::Inf,
        },
        margin1: WeibullMargin { shape: 1.0, rate: rate(1) },
        margin2: WeibullMargin { shape: 1.0, rate: rate(2) },
    })
}

/// Under R = inf the two margins share one cure probability, so only
/// covariates observed identically on both margins are usable. Returns the
/// reduced dataset (common columns copied to both margins) and their names.
fn shared_covariate_view(data: &BivariateDataset) -> Result<(BivariateDataset, Vec<String>)> {
    let (names1, names2) = data.covariate_names();
    let mut common: Vec<usize> = Vec::new();
    for (j, name) in names1.iter().enumerate() {
        if let Some(k) = names2.iter().position(|n| n == name) {
            let identical = data.rows().iter().all(|r| {
                match (&r.x1, &r.x2) {
                    (Some(a), Some(b)) => a[j] == b[k],
                    _ => false,
                }
            });
            if identical {
                common.push(j);
            }
        }
    }
    let names: Vec<String> = common.iter().map(|&j| names1[j].clone()).collect();
    let rows = data
        .rows()
        .iter()
        .map(|r| {
            let x: Vec<f64> = common.iter().map(|&j| r.x1.as_ref().unwrap()[j]).collect();
            crate::data::Observation {
                x1: Some(x.clone()),
                x2: Some(x),
                ..r.clone()
            }
        })
        .collect();
    Ok((BivariateDataset::new(rows, names.clone(), names.clone())?, names))
}

struct PreparedFit {
    layout: ParamLayout,
    data: BivariateDataset,
    notes: Vec<String>,
}

fn prepare(copula: CopulaKind, regime: RegimeKind, data: &BivariateDataset) -> Result<PreparedFit> {
    if data.n() == 0 {
        return Err(Error::InsufficientData("cannot fit an empty dataset".into()));
    }
    let mut notes = Vec::new();
    let (work, names1, names2) = if data.has_covariates() && regime == RegimeKind::Inf {
        let (reduced, names) = shared_covariate_view(data)?;
        notes.push(format!(
            "R = inf uses the shared-beta cure model over margin-invariant covariates: [{}]",
            names.join(", ")
        ));
        (reduced.clone(), names.clone(), names)
    } else {
        let (n1, n2) = data.covariate_names();
        (data.clone(), n1.to_vec(), n2.to_vec())
    };
    let template = start_template(copula, regime, &work)?;
    let layout = ParamLayout::for_model(&template, &names1, &names2)?;
    Ok(PreparedFit { layout, data: work, notes })
}

fn best_of_starts(
    layout: &ParamLayout,
    data: &BivariateDataset,
    config: &FitConfig,
) -> Result<(OptimResult, usize)> {
    let x0 = layout.pack(layout.template());
    let objective = |x: &[f64]| loglik(&layout.unpack(x), data);
    let mut best: Option<OptimResult> = None;
    let mut converged = 0usize;
    let mut failures: Vec<String> = Vec::new();
    for s in 0..config.starts {
        let xs: Vec<f64> = if s == 0 {
            x0.clone()
        } else {
            let mut rng = ChaCha12Rng::seed_from_u64(mix64(config.seed, s as u64));
            x0.iter()
                .map(|&x| x + rng.random_range(-config.perturb_scale..=config.perturb_scale))
                .collect()
        };
        let res = maximize(objective, &xs, config.max_iter, config.grad_tol);
        if res.converged {
            converged += 1;
            let better = best.as_ref().map_or(true, |b| res.value > b.value);
            if better {
                best = Some(res);
            }
        } else {
            failures.push(format!("start {s}: {} (loglik {:.4})", res.message, res.value));
        }
    }
    match best {
        Some(b) => Ok((b, converged)),
        None => Err(Error::NonConvergence(format!(
            "no start converged out of {}: [{}]",
            config.starts,
            failures.join("; ")
        ))),
    }
}

/// Observed-information Hessian of -loglik on the transformed scale at the
/// given parameter point.
pub fn observed_information(
    params: &ModelParams,
    data: &BivariateDataset,
) -> Result<Vec<Vec<f64>>> {
    let (n1, n2) = data.covariate_names();
    let layout = ParamLayout::for_model(params, n1, n2)?;
    let x = layout.pack(params);
    central_hessian(|x| -loglik(&layout.unpack(x), data), &x, 1e-4)
}

fn assemble_report(
    layout: &ParamLayout,
    data: &BivariateDataset,
    best: OptimResult,
    starts_converged: usize,
    mut notes: Vec<String>,
) -> FitReport {
    let params = layout.unpack(&best.x);
    let k = layout.len();
    let n = data.n();
    let aic = -2.0 * best.value + 2.0 * k as f64;
    let bic = -2.0 * best.value + k as f64 * (n as f64).ln();

    // observed information on the transformed scale
    let objective = |x: &[f64]| -loglik(&layout.unpack(x), data);
    let hess = central_hessian(objective, &best.x, 1e-4).ok();
    let mut se_t: Option<Vec<f64>> = None;
    if let Some(h) = &hess {
        let flat = h.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if flat < 1e-5 {
            notes.push(
                "flat likelihood: the observed information is numerically zero, \
                 parameters are not identified on this dataset"
                    .into(),
            );
        } else {
            let hm = DMatrix::from_fn(k, k, |i, j| h[i][j]);
            if let Some(cov) = hm.try_inverse() {
                let diag: Vec<f64> = (0..k).map(|i| cov[(i, i)]).collect();
                if diag.iter().all(|&v| v.is_finite() && v > 0.0) {
                    se_t = Some(diag.iter().map(|v| v.sqrt()).collect());
                } else {
                    notes.push("observed information is not positive definite; SEs unavailable".into());
                }
            } else {
                notes.push("observed information is singular; SEs unavailable".into());
            }
        }
    } else {
        notes.push("Hessian evaluation failed near the optimum; SEs unavailable".into());
    }

    let values = layout.values(&params);
    let estimates: Vec<ParamEstimate> = layout
        .specs()
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let (se, ci) = match &se_t {
                Some(s) => (
                    Some(spec.transform.jacobian(values[i]).abs() * s[i]),
                    Some(wald_ci(values[i], s[i], spec.transform)),
                ),
                None => (None, None),
            };
            ParamEstimate { name: spec.name.clone(), estimate: values[i], se, ci }
        })
        .collect();

    FitReport {
        params,
        estimates,
        loglik: best.value,
        n_params: k,
        n_obs: n,
        aic,
        bic,
        converged: best.converged,
        grad_inf_norm: best.grad_inf_norm,
        iterations: best.iterations,
        starts_converged,
        se_available: se_t.is_some(),
        notes,
        regime_table: None,
    }
}

/// Heuristic start for the EM scope (Gumbel copula, R = 1, no covariates).
pub(crate) fn em_start_template(data: &BivariateDataset) -> Result<ModelParams> {
    start_template(CopulaKind::Gumbel, RegimeKind::Eq1, data)
}

/// Build a [`FitReport`] at a given parameter point: evaluates the
/// log-likelihood, its transformed-scale gradient norm, and the
/// observed-information standard errors there. Used by the EM path, whose
/// optimum is found outside the direct maximizer.
pub(crate) fn assemble_from_point(
    layout: &ParamLayout,
    data: &BivariateDataset,
    params: &ModelParams,
    converged: bool,
    iterations: usize,
    notes: Vec<String>,
) -> Result<FitReport> {
    let x = layout.pack(params);
    let value = loglik(params, data);
    if !value.is_finite() {
        return Err(Error::NumericalDegeneracy(
            "non-finite log-likelihood at the requested point".into(),
        ));
    }
    let grad = crate::numerics::central_gradient(
        |x| loglik(&layout.unpack(x), data),
        &x,
        1e-6,
    )?;
    let grad_inf_norm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let best = OptimResult {
        x,
        value,
        grad_inf_norm,
        iterations,
        converged,
        message: String::new(),
    };
    Ok(assemble_report(layout, data, best, 1, notes))
}

/// Fit one copula/regime combination by multi-start quasi-Newton
/// maximization of the log-likelihood on the transformed scale.
pub fn fit_regime(
    copula: CopulaKind,
    regime: RegimeKind,
    data: &BivariateDataset,
    config: &FitConfig,
) -> Result<FitReport> {
    config.validate()?;
    let prepared = prepare(copula, regime, data)?;
    let (best, starts_converged) = best_of_starts(&prepared.layout, &prepared.data, config)?;
    Ok(assemble_report(&prepared.layout, &prepared.data, best, starts_converged, prepared.notes))
}

/// Fit all four odds-ratio regimes and return the best fit by log-likelihood
/// (ties broken toward the earlier regime in the order eq1, lt1, gt1, inf),
/// with the full per-regime comparison table attached.
pub fn fit_all_regimes(
    copula: CopulaKind,
    data: &BivariateDataset,
    config: &FitConfig,
) -> Result<FitReport> {
    let mut table = Vec::with_capacity(4);
    let mut best: Option<FitReport> = None;
    for regime in RegimeKind::ALL {
        match fit_regime(copula, regime, data, config) {
            Ok(report) => {
                table.push(RegimeSummary {
                    regime: regime.label().into(),
                    loglik: report.loglik,
                    aic: report.aic,
                    bic: report.bic,
                    n_params: report.n_params,
                    converged: report.converged,
                    error: None,
                });
                let better = best.as_ref().map_or(true, |b| report.loglik > b.loglik);
                if report.converged && better {
                    best = Some(report);
                }
            }
            Err(err) => table.push(RegimeSummary {
                regime: regime.label().into(),
                loglik: f64::NEG_INFINITY,
                aic: f64::INFINITY,
                bic: f64::INFINITY,
                n_params: 0,
                converged: false,
                error: Some(err.to_string()),
            }),
        }
    }
    match best {
        Some(mut report) => {
            report.regime_table = Some(table);
            Ok(report)
        }
        None => Err(Error::NonConvergence(format!(
            "no regime converged: [{}]",
            table
                .iter()
                .map(|r| format!("{}: {}", r.regime, r.error.as_deref().unwrap_or("did not converge")))
                .collect::<Vec<_>>()
                .join("; ")
        ))),
    }
}

/// Likelihood-ratio test of H0: R = 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LrtResult {
    /// lambda = 2 (unrestricted max - max under R = 1), clamped at zero.
    pub lambda: f64,
    /// Upper-tail probability under the chi-squared(1) reference.
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub restricted_loglik: f64,
    pub unrestricted_loglik: f64,
    pub best_regime: String,
    pub regime_table: Vec<RegimeSummary>,
}

/// Run the LRT at level `alpha`: the unrestricted maximum is taken over all
/// four regimes, the restricted one under R = 1, and lambda is referred to
/// chi-squared with one degree of freedom.
pub fn lrt_r_equals_one(
    copula: CopulaKind,
    data: &BivariateDataset,
    config: &FitConfig,
    alpha: f64,
) -> Result<LrtResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let best = fit_all_regimes(copula, data, config)?;
    let table = best.regime_table.clone().unwrap_or_default();
    let eq1 = table
        .iter()
        .find(|r| r.regime == "eq1" && r.error.is_none() && r.converged)
        .ok_or_else(|| Error::NonConvergence("the R = 1 fit did not converge".into()))?;
    let lambda = (2.0 * (best.loglik - eq1.loglik)).max(0.0);
    let chi2 = ChiSquared::new(1.0).expect("chi-squared(1) exists");
    let p_value = 1.0 - chi2.cdf(lambda);
    let reject = lambda > chi2.inverse_cdf(1.0 - alpha);
    Ok(LrtResult {
        lambda,
        p_value,
        reject,
        alpha,
        restricted_loglik: eq1.loglik,
        unrestricted_loglik: best.loglik,
        best_regime: table
            .iter()
            .filter(|r| r.error.is_none() && r.converged)
            .max_by(|a, b| a.loglik.total_cmp(&b.loglik))
            .map(|r| r.regime.clone())
            .unwrap_or_default(),
        regime_table: table,
    })
}
