//! Bijections between the constrained model parameters and the
//! unconstrained vector the optimizer works on.
//!
//! Positives (theta for Gumbel, gamma, Weibull shapes and rates) map through
//! log. Probabilities map through logit. The odds ratio uses the
//! region-specific transform: logit on (0, 1) and log(R - 1) on (1, inf).
//! Regression coefficients are already unconstrained. Wald intervals are
//! built on the transformed scale and mapped back through the inverse, with
//! delta-method standard errors on the original scale.

use crate::cure::{CureRegression, OddsRatioRegime};
use crate::error::{Error, Result};
use crate::numerics::logistic;
use crate::survival::{CureModel, ModelCopula, ModelParams};
use serde::{Deserialize, Serialize};

/// Scalar reparameterization of one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    /// (0, inf) via x = ln psi.
    Log,
    /// (0, 1) via x = logit(psi).
    Logit,
    /// (-1, 1) via x = logit((psi + 1)/2); the FGM dependence parameter.
    LogitSym,
    /// (1, inf) via x = ln(psi - 1); the odds ratio above one.
    LogShifted,
    /// Unconstrained coefficients.
    Identity,
}

impl Transform {
    /// Constrained value -> unconstrained coordinate.
    pub fn forward(&self, v: f64) -> f64 {
        match self {
            Transform::Log => v.ln(),
            Transform::Logit => (v / (1.0 - v)).ln(),
            Transform::LogitSym => {
                let p = 0.5 * (v + 1.0);
                (p / (1.0 - p)).ln()
            }
            Transform::LogShifted => (v - 1.0).ln(),
            Transform::Identity => v,
        }
    }

    /// Unconstrained coordinate -> constrained value.
    pub fn inverse(&self, x: f64) -> f64 {
        match self {
            Transform::Log => x.exp(),
            Transform::Logit => logistic(x),
            Transform::LogitSym => 2.0 * logistic(x) - 1.0,
            Transform::LogShifted => 1.0 + x.exp(),
            Transform::Identity => x,
        }
    }

    /// Jacobian d(constrained)/d(unconstrained) evaluated at the constrained
    /// value `v`; used by the delta method.
    pub fn jacobian(&self, v: f64) -> f64 {
        match self {
            Transform::Log => v,
            Transform::Logit => v * (1.0 - v),
            Transform::LogitSym => 0.5 * (1.0 - v * v),
            Transform::LogShifted => v - 1.0,
            Transform::Identity => 1.0,
        }
    }
}

/// Name and transform of one packed coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub transform: Transform,
}

/// Packing order and transforms for one model structure (copula kind,
/// regime, cure component shape). The layout owns a template whose
/// structural fields are reused when unpacking a coordinate vector.
#[derive(Debug, Clone)]
pub struct ParamLayout {
    template: ModelParams,
    specs: Vec<ParamSpec>,
}

impl ParamLayout {
    /// Derive the layout from a template. Coordinate order follows the
    /// parameter vector convention (theta, gamma, cure, R, a1, r1, a2, r2).
    /// `cov_names` label regression slopes; pass empty slices for the
    /// margins variant.
    pub fn for_model(
        template: &ModelParams,
        cov_names1: &[String],
        cov_names2: &[String],
    ) -> Result<Self> {
        template.validate()?;
        let mut specs = Vec::new();
        match template.copula {
            ModelCopula::Independence => {}
            ModelCopula::Gumbel { .. } => {
                specs.push(ParamSpec { name: "theta".into(), transform: Transform::Log })
            }
            ModelCopula::Fgm { .. } => {
                specs.push(ParamSpec { name: "theta".into(), transform: Transform::LogitSym })
            }
        }
        specs.push(ParamSpec { name: "gamma".into(), transform: Transform::Log });
        let beta_names = |prefix: &str, len: usize, names: &[String]| -> Result<Vec<String>> {
            if len != names.len() + 1 {
                return Err(Error::Shape(format!(
                    "{prefix}: coefficient length {len} does not match {} covariate names + intercept",
                    names.len()
                )));
            }
            let mut out = vec![format!("{prefix}_0")];
            for name in names {
                out.push(format!("{prefix}_{name}"));
            }
            Ok(out)
        };
        match (&template.cure, template.regime) {
            (CureModel::Margins { p1, p2 }, OddsRatioRegime::Inf) => {
                if (p1 - p2).abs() > 1e-12 {
                    return Err(Error::InconsistentMargins(
                        "R = inf without covariates uses a single cure fraction".into(),
                    ));
                }
                specs.push(ParamSpec { name: "p".into(), transform: Transform::Logit });
            }
            (CureModel::Margins { .. }, _) => {
                specs.push(ParamSpec { name: "p1".into(), transform: Transform::Logit });
                specs.push(ParamSpec { name: "p2".into(), transform: Transform::Logit });
            }
            (CureModel::Regression(reg), OddsRatioRegime::Inf) => {
                if !reg.shared {
                    return Err(Error::InconsistentMargins(
                        "R = inf with covariates requires the shared-beta structure".into(),
                    ));
                }
                for name in beta_names("beta", reg.beta1.len(), cov_names1)? {
                    specs.push(ParamSpec { name, transform: Transform::Identity });
                }
            }
            (CureModel::Regression(reg), _) => {
                for name in beta_names("beta1", reg.beta1.len(), cov_names1)? {
                    specs.push(ParamSpec { name, transform: Transform::Identity });
                }
                for name in beta_names("beta2", reg.beta2.len(), cov_names2)? {
                    specs.push(ParamSpec { name, transform: Transform::Identity });
                }
            }
        }
        match template.regime {
            OddsRatioRegime::Lt1 { .. } => {
                specs.push(ParamSpec { name: "R".into(), transform: Transform::Logit })
            }
            OddsRatioRegime::Gt1 { .. } => {
                specs.push(ParamSpec { name: "R".into(), transform: Transform::LogShifted })
            }
            OddsRatioRegime::Eq1 | OddsRatioRegime::Inf => {}
        }
        for name in ["a1", "r1", "a2", "r2"] {
            specs.push(ParamSpec { name: name.into(), transform: Transform::Log });
        }
        Ok(ParamLayout { template: template.clone(), specs })
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn specs(&self) -> &[ParamSpec] {
        &self.specs
    }

    pub fn template(&self) -> &ModelParams {
        &self.template
    }

    /// Constrained parameter values in packing order.
    pub fn values(&self, params: &ModelParams) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.specs.len());
        if let Some(theta) = params.copula.theta() {
            out.push(theta);
        }
        out.push(params.frailty.variance);
        match (&params.cure, params.regime) {
            (CureModel::Margins { p1, .. }, OddsRatioRegime::Inf) => out.push(*p1),
            (CureModel::Margins { p1, p2 }, _) => {
                out.push(*p1);
                out.push(*p2);
            }
            (CureModel::Regression(reg), OddsRatioRegime::Inf) => out.extend(&reg.beta1),
            (CureModel::Regression(reg), _) => {
                out.extend(&reg.beta1);
                out.extend(&reg.beta2);
            }
        }
        match params.regime {
            OddsRatioRegime::Lt1 { r } | OddsRatioRegime::Gt1 { r } => out.push(r),
            _ => {}
        }
        out.extend([
            params.margin1.shape,
            params.margin1.rate,
            params.margin2.shape,
            params.margin2.rate,
        ]);
        debug_assert_eq!(out.len(), self.specs.len());
        out
    }

    /// Pack to the unconstrained scale.
    pub fn pack(&self, params: &ModelParams) -> Vec<f64> {
        self.values(params)
            .iter()
            .zip(&self.specs)
            .map(|(&v, spec)| spec.transform.forward(v))
            .collect()
    }

    /// Unpack an unconstrained vector into a full parameter set.
    pub fn unpack(&self, x: &[f64]) -> ModelParams {
        assert_eq!(x.len(), self.specs.len(), "coordinate vector length mismatch");
        let v: Vec<f64> =
            x.iter().zip(&self.specs).map(|(&xi, spec)| spec.transform.inverse(xi)).collect();
        let mut params = self.template.clone();
        let mut at = 0;
        let mut take = || {
            at += 1;
            v[at - 1]
        };
        params.copula = match params.copula {
            ModelCopula::Independence => ModelCopula::Independence,
            ModelCopula::Gumbel { .. } => ModelCopula::Gumbel { theta: take() },
            ModelCopula::Fgm { .. } => ModelCopula::Fgm { theta: take() },
        };
        params.frailty.variance = take();
        params.cure = match (&self.template.cure, self.template.regime) {
            (CureModel::Margins { .. }, OddsRatioRegime::Inf) => {
                let p = take();
                CureModel::Margins { p1: p, p2: p }
            }
            (CureModel::Margins { .. }, _) => {
                CureModel::Margins { p1: take(), p2: take() }
            }
            (CureModel::Regression(reg), OddsRatioRegime::Inf) => {
                let beta: Vec<f64> = (0..reg.beta1.len()).map(|_| take()).collect();
                CureModel::Regression(CureRegression::shared(beta))
            }
            (CureModel::Regression(reg), _) => {
                let beta1: Vec<f64> = (0..reg.beta1.len()).map(|_| take()).collect();
                let beta2: Vec<f64> = (0..reg.beta2.len()).map(|_| take()).collect();
                CureModel::Regression(CureRegression::new(beta1, beta2))
            }
        };
        params.regime = match self.template.regime {
            OddsRatioRegime::Lt1 { .. } => OddsRatioRegime::Lt1 { r: take() },
            OddsRatioRegime::Gt1 { .. } => OddsRatioRegime::Gt1 { r: take() },
            other => other,
        };
        params.margin1.shape = take();
        params.margin1.rate = take();
        params.margin2.shape = take();
        params.margin2.rate = take();
        params
    }
}
