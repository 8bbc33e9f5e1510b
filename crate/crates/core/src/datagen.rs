//! Synthetic data generation under the model.
//!
//! Follows the generation algorithm step by step: covariates, subject
//! cure fractions, cure indicators (Bernoulli for R = 1, multinomial over
//! the four cells otherwise, copied indicators for R = inf), a shared
//! gamma frailty, copula uniforms, inversion of the conditional survival
//! function, then optional uniform censoring. Cured margins produce an
//! infinite event time, kept as [`ExtTime::Inf`] in uncensored output and
//! censored at C with indicator 0 otherwise.

use crate::cure::OddsRatioRegime;
use crate::data::{BivariateDataset, CureTruthDataset, ExtTime, Observation};
use crate::error::{Error, Result};
use crate::numerics::mix64;
use crate::survival::{CureModel, ModelParams};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma, Open01};
use serde::{Deserialize, Serialize};

/// Censoring mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Censoring {
    None,
    Uniform { lo: f64, hi: f64 },
}

/// Covariate scheme: none, independent Uniform(0,1) per margin, or one
/// shared Uniform(0,1) draw per subject (required under R = inf).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateScheme {
    None,
    UniformPerMargin,
    SharedUniform,
}

/// A complete simulation design: truth parameters, sample size, censoring,
/// covariate scheme, and the base seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimDesign {
    pub params: ModelParams,
    pub n: usize,
    pub censoring: Censoring,
    pub covariates: CovariateScheme,
    pub seed: u64,
}

impl SimDesign {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.n == 0 {
            return Err(Error::Config("sample size must be >= 1".into()));
        }
        if let Censoring::Uniform { lo, hi } = self.censoring {
            if !(hi > lo && lo >= 0.0) {
                return Err(Error::Config(format!(
                    "uniform censoring requires hi > lo >= 0, got ({lo}, {hi})"
                )));
            }
        }
        match (&self.params.cure, self.covariates) {
            (CureModel::Margins { .. }, CovariateScheme::None) => {}
            (CureModel::Regression(_), CovariateScheme::UniformPerMargin) => {}
            (CureModel::Regression(_), CovariateScheme::SharedUniform) => {}
            _ => {
                return Err(Error::Config(
                    "covariate scheme must match the cure component (margins <-> none, \
                     regression <-> uniform)"
                        .into(),
                ))
            }
        }
        if matches!(self.params.regime, OddsRatioRegime::Inf)
            && self.covariates == CovariateScheme::UniformPerMargin
        {
            return Err(Error::Config(
                "R = inf with covariates requires the shared covariate scheme".into(),
            ));
        }
        Ok(())
    }

    /// Clone with a different seed; used by the replication harness.
    pub fn with_seed(&self, seed: u64) -> SimDesign {
        SimDesign { seed, ..self.clone() }
    }
}

/// Output of [`generate`]: censored observations or uncensored cure-truth
/// pairs, depending on the design's censoring setting.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratedData {
    Censored(BivariateDataset),
    CureTruth(CureTruthDataset),
}

impl GeneratedData {
    pub fn censored(self) -> Option<BivariateDataset> {
        match self {
            GeneratedData::Censored(d) => Some(d),
            GeneratedData::CureTruth(_) => None,
        }
    }

    pub fn cure_truth(self) -> Option<CureTruthDataset> {
        match self {
            GeneratedData::CureTruth(d) => Some(d),
            GeneratedData::Censored(_) => None,
        }
    }
}

/// One latent draw before censoring.
struct LatentPair {
    time1: ExtTime,
    time2: ExtTime,
    x1: Option<Vec<f64>>,
    x2: Option<Vec<f64>>,
}

fn draw_latent(design: &SimDesign, rng: &mut ChaCha12Rng) -> Result<Vec<LatentPair>> {
    let params = &design.params;
    let gamma = params.frailty.variance;
    let frailty_dist = Gamma::new(1.0 / gamma, gamma)
        .map_err(|e| Error::Config(format!("invalid frailty distribution: {e}")))?;
    let copula = params.copula.family();
    let uniforms = copula.sample(rng, design.n)?;

    let mut out = Vec::with_capacity(design.n);
    for (u1, u2) in uniforms {
        // covariates
        let (x1, x2) = match design.covariates {
            CovariateScheme::None => (None, None),
            CovariateScheme::UniformPerMargin => (
                Some(vec![rng.sample::<f64, _>(Open01)]),
                Some(vec![rng.sample::<f64, _>(Open01)]),
            ),
            CovariateScheme::SharedUniform => {
                let x: f64 = rng.sample(Open01);
                (Some(vec![x]), Some(vec![x]))
            }
        };
        // cure indicators
        let cells = params.cure.cells(params.regime, x1.as_deref(), x2.as_deref())?;
        let (cured1, cured2) = match params.regime {
            OddsRatioRegime::Eq1 => {
                (rng.random_bool(cells.p1()), rng.random_bool(cells.p2()))
            }
            OddsRatioRegime::Inf => {
                let c = rng.random_bool(cells.p1());
                (c, c)
            }
            _ => {
                let u: f64 = rng.random();
                if u < cells.p11 {
                    (true, true)
                } else if u < cells.p11 + cells.p10 {
                    (true, false)
                } else if u < cells.p11 + cells.p10 + cells.p01 {
                    (false, true)
                } else {
                    (false, false)
                }
            }
        };
        // shared frailty and inversion of the conditional survival
        let w = frailty_dist.sample(rng);
        let invert = |cured: bool, u: f64, shape: f64, rate: f64| -> ExtTime {
            if cured {
                ExtTime::Inf
            } else {
                ExtTime::Finite((-u.ln() / (rate * w)).powf(1.0 / shape))
            }
        };
        out.push(LatentPair {
            time1: invert(cured1, u1, params.margin1.shape, params.margin1.rate),
            time2: invert(cured2, u2, params.margin2.shape, params.margin2.rate),
            x1,
            x2,
        });
    }
    Ok(out)
}

/// Generate one dataset. Deterministic given the design (including seed).
pub fn generate(design: &SimDesign) -> Result<GeneratedData> {
    design.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(design.seed);
    let latent = draw_latent(design, &mut rng)?;
    match design.censoring {
        Censoring::None => Ok(GeneratedData::CureTruth(CureTruthDataset {
            pairs: latent.into_iter().map(|p| (p.time1, p.time2)).collect(),
        })),
        Censoring::Uniform { lo, hi } => {
            let rows: Vec<Observation> = latent
                .into_iter()
                .map(|p| {
                    let c = lo + (hi - lo) * rng.sample::<f64, _>(Open01);
                    let censor = |t: ExtTime| match t {
                        ExtTime::Finite(v) if v <= c => (v, true),
                        _ => (c, false),
                    };
                    let (t1, d1) = censor(p.time1);
                    let (t2, d2) = censor(p.time2);
                    Observation { t1, t2, d1, d2, x1: p.x1, x2: p.x2 }
                })
                .collect();
            let names = |present: bool| if present { vec!["u".to_string()] } else { vec![] };
            let has_cov = design.covariates != CovariateScheme::None;
            Ok(GeneratedData::Censored(BivariateDataset::new(
                rows,
                names(has_cov),
                names(has_cov),
            )?))
        }
    }
}

/// Deterministic per-replication seed: an avalanche mix of the base seed
/// and the replication index, distinct across k.
pub fn replicate_seeds(base_seed: u64, k: u64) -> u64 {
    mix64(base_seed, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cure::{odds_ratio_of, CureRegression};
    use crate::survival::{joint_survival, FrailtySpec, ModelCopula, WeibullMargin};

    /// Covariate-free Setting A: theta 2, gamma 0.5, p (0.6, 0.4), R 2,
    /// Weibull (1, 1.5) and (1, 2).
    pub(crate) fn setting_a_margins() -> ModelParams {
        ModelParams {
            copula: ModelCopula::Gumbel { theta: 2.0 },
            frailty: FrailtySpec { variance: 0.5 },
            cure: CureModel::Margins { p1: 0.6, p2: 0.4 },
            regime: OddsRatioRegime::Gt1 { r: 2.0 },
            margin1: WeibullMargin { shape: 1.0, rate: 1.5 },
            margin2: WeibullMargin { shape: 1.0, rate: 2.0 },
        }
    }

    /// Covariate Setting A: logistic intercepts (1, -1), slopes (-1, 1).
    pub(crate) fn setting_a_covariates() -> ModelParams {
        ModelParams {
            cure: CureModel::Regression(CureRegression::new(vec![1.0, -1.0], vec![-1.0, 1.0])),
            ..setting_a_margins()
        }
    }

    #[test]
    fn extreme_intercepts_give_all_cured() {
        let design = SimDesign {
            params: ModelParams {
                cure: CureModel::Regression(CureRegression::new(vec![20.0], vec![20.0])),
                regime: OddsRatioRegime::Eq1,
                ..setting_a_margins()
            },
            n: 200,
            censoring: Censoring::None,
            covariates: CovariateScheme::UniformPerMargin,
            seed: 5,
        };
        // covariate scheme mismatch: intercept-only regression still needs
        // empty covariate vectors, so use slopes of zero instead
        let design = SimDesign {
            params: ModelParams {
                cure: CureModel::Regression(CureRegression::new(
                    vec![20.0, 0.0],
                    vec![20.0, 0.0],
                )),
                regime: OddsRatioRegime::Eq1,
                ..design.params
            },
            ..design
        };
        let truth = generate(&design).unwrap().cure_truth().unwrap();
        assert!(truth.pairs.iter().all(|(a, b)| a.is_inf() && b.is_inf()));

        let censored = generate(&SimDesign {
            censoring: Censoring::Uniform { lo: 0.0, hi: 6.0 },
            ..design
        })
        .unwrap()
        .censored()
        .unwrap();
        assert!(censored.rows().iter().all(|r| !r.d1 && !r.d2));
    }

    #[test]
    fn covariate_setting_censoring_rates() {
        let design = SimDesign {
            params: setting_a_covariates(),
            n: 100_000,
            censoring: Censoring::Uniform { lo: 0.0, hi: 6.0 },
            covariates: CovariateScheme::UniformPerMargin,
            seed: 11,
        };
        let data = generate(&design).unwrap().censored().unwrap();
        let rate1 = 1.0 - data.d1_total() as f64 / data.n() as f64;
        let rate2 = 1.0 - data.d2_total() as f64 / data.n() as f64;
        assert!((rate1 - 0.69).abs() < 0.01, "margin-1 censoring {rate1}");
        assert!((rate2 - 0.47).abs() < 0.01, "margin-2 censoring {rate2}");
    }

    #[test]
    fn margins_setting_censoring_rates() {
        let design = SimDesign {
            params: setting_a_margins(),
            n: 100_000,
            censoring: Censoring::Uniform { lo: 0.0, hi: 6.0 },
            covariates: CovariateScheme::None,
            seed: 13,
        };
        let data = generate(&design).unwrap().censored().unwrap();
        let rate1 = 1.0 - data.d1_total() as f64 / data.n() as f64;
        let rate2 = 1.0 - data.d2_total() as f64 / data.n() as f64;
        assert!((rate1 - 0.67).abs() < 0.01, "margin-1 censoring {rate1}");
        assert!((rate2 - 0.49).abs() < 0.01, "margin-2 censoring {rate2}");
    }

    #[test]
    fn cure_frequency_matches_margin() {
        let design = SimDesign {
            params: setting_a_margins(),
            n: 1_000_000,
            censoring: Censoring::None,
            covariates: CovariateScheme::None,
            seed: 17,
        };
        let truth = generate(&design).unwrap().cure_truth().unwrap();
        let freq1 =
            truth.pairs.iter().filter(|(a, _)| a.is_inf()).count() as f64 / truth.n() as f64;
        let tol = 3.0 * (0.6f64 * 0.4 / truth.n() as f64).sqrt();
        assert!((freq1 - 0.6).abs() < tol, "cure frequency {freq1}");
    }

    #[test]
    fn empirical_odds_ratio_matches_design() {
        for r in [0.5, 2.0] {
            let regime =
                if r < 1.0 { OddsRatioRegime::Lt1 { r } } else { OddsRatioRegime::Gt1 { r } };
            let design = SimDesign {
                params: ModelParams { regime, ..setting_a_margins() },
                n: 1_000_000,
                censoring: Censoring::None,
                covariates: CovariateScheme::None,
                seed: 19,
            };
            let truth = generate(&design).unwrap().cure_truth().unwrap();
            let mut counts = [0usize; 4];
            for (a, b) in &truth.pairs {
                counts[(a.is_inf() as usize) * 2 + b.is_inf() as usize] += 1;
            }
            let n = truth.n() as f64;
            let cells = crate::cure::CureCells {
                p00: counts[0] as f64 / n,
                p01: counts[1] as f64 / n,
                p10: counts[2] as f64 / n,
                p11: counts[3] as f64 / n,
            };
            let emp = odds_ratio_of(&cells);
            assert!((emp - r).abs() / r < 0.05, "R {r} empirical {emp}");
        }
    }

    #[test]
    fn joint_survival_monte_carlo_link() {
        // empirical P(T1 > t, T2 > t) against the closed form
        let params = setting_a_margins();
        let cells = params.cure.cells(params.regime, None, None).unwrap();
        let design = SimDesign {
            params: params.clone(),
            n: 1_000_000,
            censoring: Censoring::None,
            covariates: CovariateScheme::None,
            seed: 23,
        };
        let truth = generate(&design).unwrap().cure_truth().unwrap();
        let n = truth.n() as f64;
        for t in [0.5, 1.0, 2.0] {
            let above = |x: &ExtTime| x.finite().map_or(true, |v| v > t);
            let emp = truth.pairs.iter().filter(|(a, b)| above(a) && above(b)).count() as f64 / n;
            let s = joint_survival(&params, &cells, t, t);
            let se = (s * (1.0 - s) / n).sqrt();
            assert!((emp - s).abs() < 3.0 * se, "t {t}: {emp} vs {s}");
        }
    }

    #[test]
    fn gumbel_model_survival_link_at_unit_time() {
        // Gumbel theta 2, gamma 0.5, cells from (0.6, 0.4, R = 2),
        // Weibull (1, 1.5) and (1, 2), at (1, 1)
        let params = setting_a_margins();
        let cells = params.cure.cells(params.regime, None, None).unwrap();
        let design = SimDesign {
            params: params.clone(),
            n: 1_000_000,
            censoring: Censoring::None,
            covariates: CovariateScheme::None,
            seed: 29,
        };
        let truth = generate(&design).unwrap().cure_truth().unwrap();
        let above = |x: &ExtTime| x.finite().map_or(true, |v| v > 1.0);
        let emp =
            truth.pairs.iter().filter(|(a, b)| above(a) && above(b)).count() as f64
                / truth.n() as f64;
        let s = joint_survival(&params, &cells, 1.0, 1.0);
        let se = (s * (1.0 - s) / truth.n() as f64).sqrt();
        assert!((emp - s).abs() < 3.0 * se, "{emp} vs {s}");
    }

    #[test]
    fn deterministic_given_seed() {
        let design = SimDesign {
            params: setting_a_covariates(),
            n: 50,
            censoring: Censoring::Uniform { lo: 0.0, hi: 6.0 },
            covariates: CovariateScheme::UniformPerMargin,
            seed: 31,
        };
        let a = generate(&design).unwrap();
        let b = generate(&design).unwrap();
        assert_eq!(a, b);
        let c = generate(&design.with_seed(32)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn replicate_seeds_distinct_and_stable() {
        assert_eq!(replicate_seeds(7, 3), replicate_seeds(7, 3));
        assert_ne!(replicate_seeds(7, 3), replicate_seeds(8, 3));
        // injectivity in k is proven by construction; spot-check a window
        let mut seen = std::collections::HashSet::new();
        for k in 0..100_000 {
            assert!(seen.insert(replicate_seeds(7, k)));
        }
    }

    #[test]
    fn shared_scheme_required_for_inf() {
        let design = SimDesign {
            params: ModelParams {
                cure: CureModel::Regression(CureRegression::shared(vec![0.0, 0.5])),
                regime: OddsRatioRegime::Inf,
                ..setting_a_margins()
            },
            n: 100,
            censoring: Censoring::None,
            covariates: CovariateScheme::UniformPerMargin,
            seed: 37,
        };
        assert!(matches!(generate(&design), Err(Error::Config(_))));
        let ok = SimDesign { covariates: CovariateScheme::SharedUniform, ..design };
        let truth = generate(&ok).unwrap().cure_truth().unwrap();
        // perfect concordance: cure states always match
        assert!(truth.pairs.iter().all(|(a, b)| a.is_inf() == b.is_inf()));
    }
}
