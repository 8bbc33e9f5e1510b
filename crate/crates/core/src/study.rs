//! Monte Carlo study runner: rank-correlation validation, estimator
//! performance tables, likelihood-ratio-test size and power, and the
//! EM-versus-direct comparison.
//!
//! Replications are embarrassingly parallel: replication k derives its own
//! seed from the base seed, runs single-threaded, and results are
//! aggregated in replication order, so a study report is byte-identical
//! regardless of the worker count. The BICURE_THREADS environment variable
//! caps the pool size.

use crate::cure::OddsRatioRegime;
use crate::data::BivariateDataset;
use crate::datagen::{generate, replicate_seeds, Censoring, GeneratedData, SimDesign};
use crate::dependence::{
    dependence_report, sample_rho_b, sample_tau_b,
};
use crate::em::{em_fit, EmConfig};
use crate::error::{Error, Result};
use crate::estimate::{
    fit_regime, lrt_r_equals_one, CopulaKind, FitConfig, FitReport, RegimeKind,
};
use crate::numerics::mix64;
use crate::paramspace::ParamLayout;
use crate::survival::{ModelCopula, ModelParams};
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Which study to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    /// Sample tie-adjusted coefficients against their theoretical values on
    /// uncensored data.
    RankValidation,
    /// Estimation performance: mean, bias, MSE, SD, mean SE, coverage.
    MleStudy,
    /// Rejection rate of the R = 1 test under the null.
    LrtTypeI,
    /// Power of the R = 1 test over a grid of odds ratios.
    LrtPower,
    /// EM versus direct optimization.
    EmCompare,
}

fn default_fit_starts() -> usize {
    4
}

fn default_em_starts() -> usize {
    2
}

/// A complete study specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudySpec {
    pub study: StudyKind,
    pub design: SimDesign,
    pub replications: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Odds-ratio grid for the power study (1.0 rows report the size).
    #[serde(default)]
    pub r_grid: Vec<f64>,
    #[serde(default = "default_fit_starts")]
    pub fit_starts: usize,
    #[serde(default = "default_em_starts")]
    pub em_starts: usize,
    #[serde(default)]
    pub output_path: Option<String>,
}

fn default_alpha() -> f64 {
    0.05
}

impl StudySpec {
    pub fn validate(&self) -> Result<()> {
        self.design.validate()?;
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.study == StudyKind::LrtPower && self.r_grid.is_empty() {
            return Err(Error::Config("the power study needs a nonempty r_grid".into()));
        }
        if self.study == StudyKind::RankValidation
            && !matches!(self.design.censoring, Censoring::None)
        {
            return Err(Error::Config(
                "rank validation works on uncensored cure-truth data; set censoring to none".into(),
            ));
        }
        Ok(())
    }

    fn fit_config(&self) -> FitConfig {
        FitConfig {
            starts: self.fit_starts,
            seed: mix64(self.design.seed, 0xF17),
            ..FitConfig::default()
        }
    }
}

/// Shared replication bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyMeta {
    pub replications: usize,
    pub used: usize,
    pub failed: usize,
    /// More than 20% failed replications marks the study unreliable.
    pub unreliable: bool,
    pub base_seed: u64,
    pub n: usize,
}

impl StudyMeta {
    fn new(spec_replications: usize, used: usize, base_seed: u64, n: usize) -> StudyMeta {
        let failed = spec_replications - used;
        StudyMeta {
            replications: spec_replications,
            used,
            failed,
            unreliable: failed * 5 > spec_replications,
            base_seed,
            n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankValidationReport {
    pub meta: StudyMeta,
    pub theoretical_tau_b: f64,
    pub theoretical_rho_b: f64,
    pub tau_mean: f64,
    pub tau_se: f64,
    pub tau_ci: (f64, f64),
    pub rho_mean: f64,
    pub rho_se: f64,
    pub rho_ci: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleParamRow {
    pub name: String,
    pub truth: f64,
    pub mean: f64,
    pub bias: f64,
    pub mse: f64,
    pub sd: f64,
    pub se_mean: f64,
    pub cp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleReport {
    pub meta: StudyMeta,
    pub rows: Vec<MleParamRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrtTypeIReport {
    pub meta: StudyMeta,
    pub alpha: f64,
    pub rejection_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrtPowerRow {
    pub r: f64,
    pub n: usize,
    pub power: f64,
    pub used: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrtPowerReport {
    pub meta: StudyMeta,
    pub alpha: f64,
    pub rows: Vec<LrtPowerRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmCompareRow {
    pub name: String,
    pub truth: f64,
    pub em_mean: f64,
    pub em_bias: f64,
    pub em_sd: f64,
    pub em_mse: f64,
    pub direct_mean: f64,
    pub direct_bias: f64,
    pub direct_sd: f64,
    pub direct_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmCompareReport {
    pub meta: StudyMeta,
    pub rows: Vec<EmCompareRow>,
    pub max_abs_loglik_diff: f64,
    pub median_em_iterations: f64,
    /// Informational wall-clock medians (milliseconds).
    pub median_em_ms: f64,
    pub median_direct_ms: f64,
}

/// Study output, tagged by kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "study", rename_all = "snake_case")]
pub enum StudyReport {
    RankValidation(RankValidationReport),
    MleStudy(MleReport),
    LrtTypeI(LrtTypeIReport),
    LrtPower(LrtPowerReport),
    EmCompare(EmCompareReport),
}

fn threads_from_env() -> usize {
    std::env::var("BICURE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0)
}

/// Run independent replications in a dedicated pool and return results in
/// replication order. Failed replications carry their error text.
fn run_replications<T: Send>(
    count: usize,
    job: impl Fn(usize) -> Result<T> + Sync,
) -> Result<Vec<std::result::Result<T, String>>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads_from_env())
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(|| {
        use rayon::prelude::*;
        (0..count)
            .into_par_iter()
            .map(|k| job(k).map_err(|e| e.to_string()))
            .collect::<Vec<_>>()
    }))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt()
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn copula_kind_of(params: &ModelParams) -> CopulaKind {
    match params.copula {
        ModelCopula::Independence => CopulaKind::Independence,
        ModelCopula::Gumbel { .. } => CopulaKind::Gumbel,
        ModelCopula::Fgm { .. } => CopulaKind::Fgm,
    }
}

fn regime_kind_of(params: &ModelParams) -> RegimeKind {
    match params.regime {
        OddsRatioRegime::Eq1 => RegimeKind::Eq1,
        OddsRatioRegime::Lt1 { .. } => RegimeKind::Lt1,
        OddsRatioRegime::Gt1 { .. } => RegimeKind::Gt1,
        OddsRatioRegime::Inf => RegimeKind::Inf,
    }
}

fn generate_censored(design: &SimDesign) -> Result<BivariateDataset> {
    match generate(design)? {
        GeneratedData::Censored(d) => Ok(d),
        GeneratedData::CureTruth(_) => Err(Error::Config(
            "this study needs censored data; set a censoring mechanism".into(),
        )),
    }
}

fn rank_validation(spec: &StudySpec) -> Result<RankValidationReport> {
    let truth = &spec.design.params;
    if truth.cure.has_covariates() {
        return Err(Error::Config(
            "rank validation uses the covariate-free design (population cells)".into(),
        ));
    }
    let cells = truth.cure.cells(truth.regime, None, None)?;
    let dep = dependence_report(truth.copula, truth.frailty.variance, &cells)?;
    let results = run_replications(spec.replications, |k| {
        let design = spec.design.with_seed(replicate_seeds(spec.design.seed, k as u64));
        let data = generate(&design)?
            .cure_truth()
            .ok_or_else(|| Error::Config("rank validation needs uncensored data".into()))?;
        Ok((sample_tau_b(&data.pairs)?, sample_rho_b(&data.pairs)?))
    })?;
    let ok: Vec<&(f64, f64)> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
    if ok.len() < 2 {
        return Err(Error::InsufficientData("fewer than two successful replications".into()));
    }
    let taus: Vec<f64> = ok.iter().map(|p| p.0).collect();
    let rhos: Vec<f64> = ok.iter().map(|p| p.1).collect();
    let k = ok.len() as f64;
    let (tm, rm) = (mean(&taus), mean(&rhos));
    let (tse, rse) = (sample_sd(&taus) / k.sqrt(), sample_sd(&rhos) / k.sqrt());
    Ok(RankValidationReport {
        meta: StudyMeta::new(spec.replications, ok.len(), spec.design.seed, spec.design.n),
        theoretical_tau_b: dep.tau_b,
        theoretical_rho_b: dep.rho_b,
        tau_mean: tm,
        tau_se: tse,
        tau_ci: (tm - 1.96 * tse, tm + 1.96 * tse),
        rho_mean: rm,
        rho_se: rse,
        rho_ci: (rm - 1.96 * rse, rm + 1.96 * rse),
    })
}

fn mle_study(spec: &StudySpec) -> Result<MleReport> {
    let truth = &spec.design.params;
    let copula = copula_kind_of(truth);
    let regime = regime_kind_of(truth);
    let config = spec.fit_config();
    let (names1, names2) = match spec.design.covariates {
        crate::datagen::CovariateScheme::None => (vec![], vec![]),
        _ => (vec!["u".to_string()], vec!["u".to_string()]),
    };
    let layout = ParamLayout::for_model(truth, &names1, &names2)?;
    let truth_values = layout.values(truth);
    let names: Vec<String> = layout.specs().iter().map(|s| s.name.clone()).collect();

    let results = run_replications(spec.replications, |k| {
        let design = spec.design.with_seed(replicate_seeds(spec.design.seed, k as u64));
        let data = generate_censored(&design)?;
        let report = fit_regime(copula, regime, &data, &config)?;
        if !report.se_available {
            return Err(Error::NonConvergence("standard errors unavailable".into()));
        }
        Ok(report)
    })?;
    let ok: Vec<&FitReport> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
    if ok.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "fewer than two successful replications ({} / {})",
            ok.len(),
            spec.replications
        )));
    }
    let rows = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let ests: Vec<f64> = ok.iter().map(|r| r.estimates[j].estimate).collect();
            let ses: Vec<f64> = ok.iter().map(|r| r.estimates[j].se.unwrap_or(f64::NAN)).collect();
            let truth_j = truth_values[j];
            let covered = ok
                .iter()
                .filter(|r| {
                    r.estimates[j]
                        .ci
                        .map(|(lo, hi)| lo <= truth_j && truth_j <= hi)
                        .unwrap_or(false)
                })
                .count();
            MleParamRow {
                name: name.clone(),
                truth: truth_j,
                mean: mean(&ests),
                bias: mean(&ests) - truth_j,
                mse: ests.iter().map(|e| (e - truth_j) * (e - truth_j)).sum::<f64>()
                    / ests.len() as f64,
                sd: sample_sd(&ests),
                se_mean: mean(&ses),
                cp: covered as f64 / ok.len() as f64,
            }
        })
        .collect();
    Ok(MleReport {
        meta: StudyMeta::new(spec.replications, ok.len(), spec.design.seed, spec.design.n),
        rows,
    })
}

fn lrt_type_i(spec: &StudySpec) -> Result<LrtTypeIReport> {
    let copula = copula_kind_of(&spec.design.params);
    let config = spec.fit_config();
    let results = run_replications(spec.replications, |k| {
        let design = spec.design.with_seed(replicate_seeds(spec.design.seed, k as u64));
        let data = generate_censored(&design)?;
        Ok(lrt_r_equals_one(copula, &data, &config, spec.alpha)?.reject)
    })?;
    let ok: Vec<bool> = results.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
    if ok.is_empty() {
        return Err(Error::InsufficientData("no successful replications".into()));
    }
    Ok(LrtTypeIReport {
        meta: StudyMeta::new(spec.replications, ok.len(), spec.design.seed, spec.design.n),
        alpha: spec.alpha,
        rejection_rate: ok.iter().filter(|&&r| r).count() as f64 / ok.len() as f64,
    })
}

fn regime_for_r(r: f64) -> Result<OddsRatioRegime> {
    if !(r > 0.0) {
        return Err(Error::Config(format!("odds ratio must be positive, got {r}")));
    }
    Ok(if r == 1.0 {
        OddsRatioRegime::Eq1
    } else if r < 1.0 {
        OddsRatioRegime::Lt1 { r }
    } else {
        OddsRatioRegime::Gt1 { r }
    })
}

fn lrt_power(spec: &StudySpec) -> Result<LrtPowerReport> {
    let copula = copula_kind_of(&spec.design.params);
    let config = spec.fit_config();
    let mut rows = Vec::with_capacity(spec.r_grid.len());
    let mut total_used = 0usize;
    for (gi, &r) in spec.r_grid.iter().enumerate() {
        let mut design = spec.design.clone();
        design.params.regime = regime_for_r(r)?;
        // decorrelate grid points while keeping per-point determinism
        let grid_seed = mix64(spec.design.seed, 0xB00 + gi as u64);
        let results = run_replications(spec.replications, |k| {
            let design = design.with_seed(replicate_seeds(grid_seed, k as u64));
            let data = generate_censored(&design)?;
            Ok(lrt_r_equals_one(copula, &data, &config, spec.alpha)?.reject)
        })?;
        let ok: Vec<bool> = results.iter().filter_map(|x| x.as_ref().ok().copied()).collect();
        if ok.is_empty() {
            return Err(Error::InsufficientData(format!("no successful replications at R = {r}")));
        }
        total_used += ok.len();
        rows.push(LrtPowerRow {
            r,
            n: spec.design.n,
            power: ok.iter().filter(|&&x| x).count() as f64 / ok.len() as f64,
            used: ok.len(),
            failed: spec.replications - ok.len(),
        });
    }
    let total = spec.replications * spec.r_grid.len();
    let mut meta = StudyMeta::new(total, total_used, spec.design.seed, spec.design.n);
    meta.replications = total;
    Ok(LrtPowerReport { meta, alpha: spec.alpha, rows })
}

fn em_compare(spec: &StudySpec) -> Result<EmCompareReport> {
    let truth = &spec.design.params;
    if copula_kind_of(truth) != CopulaKind::Gumbel || regime_kind_of(truth) != RegimeKind::Eq1 {
        return Err(Error::Unsupported(
            "the EM comparison runs the Gumbel model with R = 1".into(),
        ));
    }
    let config = spec.fit_config();
    let em_config = EmConfig {
        starts: spec.em_starts,
        seed: mix64(spec.design.seed, 0xE3),
        ..EmConfig::default()
    };
    let layout = ParamLayout::for_model(truth, &[], &[])?;
    let truth_values = layout.values(truth);
    let names: Vec<String> = layout.specs().iter().map(|s| s.name.clone()).collect();

    struct Rep {
        em: Vec<f64>,
        direct: Vec<f64>,
        loglik_diff: f64,
        em_iters: f64,
        em_ms: f64,
        direct_ms: f64,
    }
    let results = run_replications(spec.replications, |k| {
        let design = spec.design.with_seed(replicate_seeds(spec.design.seed, k as u64));
        let data = generate_censored(&design)?;
        let t0 = Instant::now();
        let direct = fit_regime(CopulaKind::Gumbel, RegimeKind::Eq1, &data, &config)?;
        let direct_ms = t0.elapsed().as_secs_f64() * 1e3;
        let t1 = Instant::now();
        let em = em_fit(&data, &em_config)?;
        let em_ms = t1.elapsed().as_secs_f64() * 1e3;
        Ok(Rep {
            em: em.report.estimates.iter().map(|e| e.estimate).collect(),
            direct: direct.estimates.iter().map(|e| e.estimate).collect(),
            loglik_diff: (em.report.loglik - direct.loglik).abs(),
            em_iters: em.iterations as f64,
            em_ms,
            direct_ms,
        })
    })?;
    let ok: Vec<&Rep> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
    if ok.len() < 2 {
        return Err(Error::InsufficientData("fewer than two successful replications".into()));
    }
    let rows = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let em: Vec<f64> = ok.iter().map(|r| r.em[j]).collect();
            let direct: Vec<f64> = ok.iter().map(|r| r.direct[j]).collect();
            let truth_j = truth_values[j];
            let msde = |v: &[f64]| {
                v.iter().map(|x| (x - truth_j) * (x - truth_j)).sum::<f64>() / v.len() as f64
            };
            EmCompareRow {
                name: name.clone(),
                truth: truth_j,
                em_mean: mean(&em),
                em_bias: mean(&em) - truth_j,
                em_sd: sample_sd(&em),
                em_mse: msde(&em),
                direct_mean: mean(&direct),
                direct_bias: mean(&direct) - truth_j,
                direct_sd: sample_sd(&direct),
                direct_mse: msde(&direct),
            }
        })
        .collect();
    let mut iters: Vec<f64> = ok.iter().map(|r| r.em_iters).collect();
    let mut em_ms: Vec<f64> = ok.iter().map(|r| r.em_ms).collect();
    let mut direct_ms: Vec<f64> = ok.iter().map(|r| r.direct_ms).collect();
    Ok(EmCompareReport {
        meta: StudyMeta::new(spec.replications, ok.len(), spec.design.seed, spec.design.n),
        rows,
        max_abs_loglik_diff: ok.iter().map(|r| r.loglik_diff).fold(0.0, f64::max),
        median_em_iterations: median(&mut iters),
        median_em_ms: median(&mut em_ms),
        median_direct_ms: median(&mut direct_ms),
    })
}

/// Run a study to completion.
pub fn run_study(spec: &StudySpec) -> Result<StudyReport> {
    spec.validate()?;
    Ok(match spec.study {
        StudyKind::RankValidation => StudyReport::RankValidation(rank_validation(spec)?),
        StudyKind::MleStudy => StudyReport::MleStudy(mle_study(spec)?),
        StudyKind::LrtTypeI => StudyReport::LrtTypeI(lrt_type_i(spec)?),
        StudyKind::LrtPower => StudyReport::LrtPower(lrt_power(spec)?),
        StudyKind::EmCompare => StudyReport::EmCompare(em_compare(spec)?),
    })
}

impl StudyReport {
    /// The shared bookkeeping block.
    pub fn meta(&self) -> &StudyMeta {
        match self {
            StudyReport::RankValidation(r) => &r.meta,
            StudyReport::MleStudy(r) => &r.meta,
            StudyReport::LrtTypeI(r) => &r.meta,
            StudyReport::LrtPower(r) => &r.meta,
            StudyReport::EmCompare(r) => &r.meta,
        }
    }

    /// Flat CSV rendering of the study table (one shape per study kind).
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        match self {
            StudyReport::RankValidation(r) => {
                out.push_str("coefficient,theoretical,mean,se,ci_lo,ci_hi\n");
                let _ = writeln!(
                    out,
                    "tau_b,{},{},{},{},{}",
                    r.theoretical_tau_b, r.tau_mean, r.tau_se, r.tau_ci.0, r.tau_ci.1
                );
                let _ = writeln!(
                    out,
                    "rho_b,{},{},{},{},{}",
                    r.theoretical_rho_b, r.rho_mean, r.rho_se, r.rho_ci.0, r.rho_ci.1
                );
            }
            StudyReport::MleStudy(r) => {
                out.push_str("parameter,truth,mean,bias,mse,sd,se_mean,cp\n");
                for row in &r.rows {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{},{}",
                        row.name, row.truth, row.mean, row.bias, row.mse, row.sd, row.se_mean,
                        row.cp
                    );
                }
            }
            StudyReport::LrtTypeI(r) => {
                out.push_str("alpha,rejection_rate,used,failed\n");
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    r.alpha, r.rejection_rate, r.meta.used, r.meta.failed
                );
            }
            StudyReport::LrtPower(r) => {
                out.push_str("r,n,power,used,failed\n");
                for row in &r.rows {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{}",
                        row.r, row.n, row.power, row.used, row.failed
                    );
                }
            }
            StudyReport::EmCompare(r) => {
                out.push_str(
                    "parameter,truth,em_mean,em_bias,em_sd,em_mse,direct_mean,direct_bias,\
                     direct_sd,direct_mse\n",
                );
                for row in &r.rows {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{},{},{},{}",
                        row.name,
                        row.truth,
                        row.em_mean,
                        row.em_bias,
                        row.em_sd,
                        row.em_mse,
                        row.direct_mean,
                        row.direct_bias,
                        row.direct_sd,
                        row.direct_mse
                    );
                }
            }
        }
        out
    }
}
