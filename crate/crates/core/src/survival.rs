//! Closed-form joint and marginal survival functions with Weibull baselines
//! and zero-inflated gamma frailty.
//!
//! Every power of the form (1 + gamma s)^(-1/gamma - k) is evaluated as
//! exp(-(1/gamma + k) log1p(gamma s)), which stays exact through the
//! gamma -> 0 (no-frailty) limit. The Gumbel aggregate is handled through
//! Lambda = (H1^(theta+1) + H2^(theta+1))^(1/(theta+1)) computed in log
//! space, so A = 1 + gamma Lambda never overflows the inner powers.

use crate::copula::{gen_fgm_terms, CopulaFamily};
use crate::cure::{solve_cells, subject_cells, CureCells, CureRegression, OddsRatioRegime};
use crate::error::{Error, Result};
use crate::numerics::log1p_div;
use serde::{Deserialize, Serialize};

/// Weibull baseline S0(t) = exp(-rate * t^shape).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullMargin {
    pub shape: f64,
    pub rate: f64,
}

impl WeibullMargin {
    pub fn validate(&self) -> Result<()> {
        if self.shape > 0.0 && self.rate > 0.0 && self.shape.is_finite() && self.rate.is_finite() {
            Ok(())
        } else {
            Err(Error::ParamDomain(format!(
                "Weibull margin requires shape > 0 and rate > 0, got ({}, {})",
                self.shape, self.rate
            )))
        }
    }

    /// Cumulative baseline hazard H(t) = rate * t^shape.
    pub fn cum_hazard(&self, t: f64) -> f64 {
        if t == 0.0 {
            0.0
        } else {
            self.rate * t.powf(self.shape)
        }
    }

    /// log(rate * shape * t^(shape - 1)), the log of dH/dt. Defined for
    /// t > 0 only; the hazard is singular at zero when shape < 1.
    pub fn log_hazard_factor(&self, t: f64) -> f64 {
        self.rate.ln() + self.shape.ln() + (self.shape - 1.0) * t.ln()
    }
}

/// Gamma frailty with mean 1 and variance `variance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrailtySpec {
    pub variance: f64,
}

impl FrailtySpec {
    pub fn validate(&self) -> Result<()> {
        if self.variance > 0.0 && self.variance.is_finite() {
            Ok(())
        } else {
            Err(Error::ParamDomain(format!(
                "frailty variance must be positive, got {}",
                self.variance
            )))
        }
    }

    /// Laplace transform (1 + gamma s)^(-1/gamma).
    pub fn laplace(&self, s: f64) -> f64 {
        crate::numerics::stable_log1p_pow(self.variance, s)
    }

    /// log of (1 + gamma s)^(-(1/gamma + extra)).
    pub fn log_power(&self, s: f64, extra: f64) -> f64 {
        let g = self.variance;
        -(log1p_div(g, s) + extra * (g * s).ln_1p())
    }
}

/// Copula choices of the survival model (the families with closed-form
/// mixtures).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelCopula {
    Independence,
    Gumbel { theta: f64 },
    Fgm { theta: f64 },
}

impl ModelCopula {
    pub fn validate(&self) -> Result<()> {
        self.family().validate()
    }

    pub fn family(&self) -> CopulaFamily {
        match *self {
            ModelCopula::Independence => CopulaFamily::Independence,
            ModelCopula::Gumbel { theta } => CopulaFamily::Gumbel { theta },
            ModelCopula::Fgm { theta } => CopulaFamily::Fgm { theta },
        }
    }

    pub fn theta(&self) -> Option<f64> {
        match *self {
            ModelCopula::Independence => None,
            ModelCopula::Gumbel { theta } | ModelCopula::Fgm { theta } => Some(theta),
        }
    }
}

/// Cure component: plain margins or logistic regressions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CureModel {
    Margins { p1: f64, p2: f64 },
    Regression(CureRegression),
}

impl CureModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            CureModel::Margins { p1, p2 } => {
                if *p1 > 0.0 && *p1 < 1.0 && *p2 > 0.0 && *p2 < 1.0 {
                    Ok(())
                } else {
                    Err(Error::ParamDomain(format!(
                        "cure fractions must lie in (0, 1), got ({p1}, {p2})"
                    )))
                }
            }
            CureModel::Regression(reg) => reg.validate(),
        }
    }

    pub fn has_covariates(&self) -> bool {
        matches!(self, CureModel::Regression(_))
    }

    /// Cure cells for one subject. Covariate vectors are ignored by the
    /// margins variant and required by the regression variant.
    pub fn cells(
        &self,
        regime: OddsRatioRegime,
        x1: Option<&[f64]>,
        x2: Option<&[f64]>,
    ) -> Result<CureCells> {
        match self {
            CureModel::Margins { p1, p2 } => solve_cells(*p1, *p2, regime),
            CureModel::Regression(reg) => {
                let x1 = x1.ok_or_else(|| {
                    Error::Shape("cure regression requires margin-1 covariates".into())
                })?;
                let x2 = x2.ok_or_else(|| {
                    Error::Shape("cure regression requires margin-2 covariates".into())
                })?;
                subject_cells(reg, x1, x2, regime)
            }
        }
    }
}

/// Full parameter vector of the bivariate cure frailty-copula model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub copula: ModelCopula,
    pub frailty: FrailtySpec,
    pub cure: CureModel,
    pub regime: OddsRatioRegime,
    pub margin1: WeibullMargin,
    pub margin2: WeibullMargin,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        self.copula.validate()?;
        self.frailty.validate()?;
        self.cure.validate()?;
        self.regime.validate()?;
        self.margin1.validate()?;
        self.margin2.validate()
    }
}

/// Population-level cure fractions of a fitted model. The margins variant
/// returns its fractions directly; the regression variant averages the
/// per-subject logistic fractions over the supplied dataset.
pub fn average_cure_fractions(
    params: &ModelParams,
    data: Option<&crate::data::BivariateDataset>,
) -> Result<(f64, f64)> {
    match &params.cure {
        CureModel::Margins { p1, p2 } => Ok((*p1, *p2)),
        CureModel::Regression(reg) => {
            let data = data.ok_or_else(|| {
                Error::Config(
                    "averaging covariate cure fractions requires the fitted dataset".into(),
                )
            })?;
            if data.n() == 0 {
                return Err(Error::InsufficientData("empty dataset".into()));
            }
            let mut sum1 = 0.0;
            let mut sum2 = 0.0;
            for row in data.rows() {
                let x1 = row.x1.as_deref().unwrap_or(&[]);
                let x2 = row.x2.as_deref().unwrap_or(&[]);
                sum1 += crate::cure::cure_fraction(&reg.beta1, x1)?;
                sum2 += crate::cure::cure_fraction(&reg.beta2, x2)?;
            }
            let n = data.n() as f64;
            Ok((sum1 / n, sum2 / n))
        }
    }
}

/// Marginal survival of the uncured subpopulation,
/// (1 + gamma r t^a)^(-1/gamma).
pub fn marginal_survival_uncured(m: &WeibullMargin, f: &FrailtySpec, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    f.laplace(m.cum_hazard(t))
}

/// Population marginal survival p + (1 - p) * uncured survival; tends to the
/// cure fraction p as t grows.
pub fn marginal_survival_population(p: f64, m: &WeibullMargin, f: &FrailtySpec, t: f64) -> f64 {
    p + (1.0 - p) * marginal_survival_uncured(m, f, t)
}

/// The Gumbel norm Lambda = (h1^(theta+1) + h2^(theta+1))^(1/(theta+1)),
/// evaluated in log space.
pub(crate) fn gumbel_lambda(theta: f64, h1: f64, h2: f64) -> f64 {
    if h1 == 0.0 {
        return h2;
    }
    if h2 == 0.0 {
        return h1;
    }
    let delta = theta + 1.0;
    let (lmax, lmin) = {
        let (l1, l2) = (h1.ln(), h2.ln());
        if l1 >= l2 {
            (l1, l2)
        } else {
            (l2, l1)
        }
    };
    (lmax + (delta * (lmin - lmax)).exp().ln_1p() / delta).exp()
}

/// Copula-specific fourth term of the joint survival function: the mixture
/// of C_theta(S01^w, S02^w) over the gamma frailty, expressed through the
/// cumulative hazards h1, h2.
pub(crate) fn fourth_term(copula: ModelCopula, frailty: &FrailtySpec, h1: f64, h2: f64) -> f64 {
    match copula {
        ModelCopula::Independence => frailty.laplace(h1 + h2),
        ModelCopula::Gumbel { theta } => frailty.laplace(gumbel_lambda(theta, h1, h2)),
        ModelCopula::Fgm { theta } => gen_fgm_terms(theta)
            .iter()
            .map(|&(a, b, c)| c * frailty.laplace(a * h1 + b * h2))
            .sum(),
    }
}

/// Joint survival S(t1, t2) for given cure cells.
pub fn joint_survival(params: &ModelParams, cells: &CureCells, t1: f64, t2: f64) -> f64 {
    debug_assert!(t1 >= 0.0 && t2 >= 0.0);
    let h1 = params.margin1.cum_hazard(t1);
    let h2 = params.margin2.cum_hazard(t2);
    let s1 = params.frailty.laplace(h1);
    let s2 = params.frailty.laplace(h2);
    cells.p11
        + cells.p01 * s1
        + cells.p10 * s2
        + cells.p00 * fourth_term(params.copula, &params.frailty, h1, h2)
}

/// The Gumbel aggregate A = 1 + gamma Lambda(t1, t2); equals 1 exactly when
/// t1 = t2 = 0. Defined for the Gumbel copula and its theta = 0 collapse.
pub fn gumbel_a(params: &ModelParams, t1: f64, t2: f64) -> Result<f64> {
    let theta = match params.copula {
        ModelCopula::Gumbel { theta } => theta,
        ModelCopula::Independence => 0.0,
        ModelCopula::Fgm { .. } => {
            return Err(Error::Unsupported(
                "the A aggregate is defined for the Gumbel model".into(),
            ))
        }
    };
    let h1 = params.margin1.cum_hazard(t1);
    let h2 = params.margin2.cum_hazard(t2);
    Ok(1.0 + params.frailty.variance * gumbel_lambda(theta, h1, h2))
}
