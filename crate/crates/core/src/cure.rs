//! Joint distribution of the latent cure indicators: marginal cure
//! fractions linked by an odds ratio R, optionally driven by logistic
//! regressions on covariates.

use crate::error::{Error, Result};
use crate::numerics::logistic;
use serde::{Deserialize, Serialize};

/// The four regimes of the cure odds ratio. The likelihood takes a
/// different parametric form in each, so the regime is part of the model
/// structure rather than a plain parameter value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OddsRatioRegime {
    /// R = 1: independent cure indicators.
    Eq1,
    /// 0 < R < 1: negative association.
    Lt1 { r: f64 },
    /// R > 1: positive association.
    Gt1 { r: f64 },
    /// R = infinity: X1 = X2 almost surely.
    Inf,
}

impl OddsRatioRegime {
    pub fn validate(&self) -> Result<()> {
        match *self {
            OddsRatioRegime::Lt1 { r } if !(r > 0.0 && r < 1.0) => Err(Error::ParamDomain(
                format!("Lt1 regime requires 0 < R < 1, got {r}"),
            )),
            OddsRatioRegime::Gt1 { r } if !(r > 1.0 && r.is_finite()) => Err(Error::ParamDomain(
                format!("Gt1 regime requires finite R > 1, got {r}"),
            )),
            _ => Ok(()),
        }
    }

    /// The odds-ratio value represented by this regime (1 for Eq1, +inf for
    /// Inf).
    pub fn r_value(&self) -> f64 {
        match *self {
            OddsRatioRegime::Eq1 => 1.0,
            OddsRatioRegime::Lt1 { r } | OddsRatioRegime::Gt1 { r } => r,
            OddsRatioRegime::Inf => f64::INFINITY,
        }
    }
}

/// Cell probabilities of the 2x2 cure table, p_rs = P(X1 = r, X2 = s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CureCells {
    pub p11: f64,
    pub p10: f64,
    pub p01: f64,
    pub p00: f64,
}

impl CureCells {
    /// Row margin P(X1 = 1).
    pub fn p1(&self) -> f64 {
        self.p11 + self.p10
    }

    /// Column margin P(X2 = 1).
    pub fn p2(&self) -> f64 {
        self.p11 + self.p01
    }
}

/// Solve for the joint cure cells given margins and an odds-ratio regime.
///
/// For R != 1 the cell p11 solves the quadratic
/// (R-1) p^2 - {(R-1)(p1+p2) + 1} p + R p1 p2 = 0, and only the minus root
/// is admissible. It is evaluated in the rationalized form
/// p11 = 2 R p1 p2 / (f + sqrt(D)) with f = (R-1)(p1+p2) + 1, which has no
/// subtractive cancellation anywhere in (0, inf) and extends continuously
/// through R = 1.
pub fn solve_cells(p1: f64, p2: f64, regime: OddsRatioRegime) -> Result<CureCells> {
    if !(p1 > 0.0 && p1 < 1.0 && p2 > 0.0 && p2 < 1.0) {
        return Err(Error::ParamDomain(format!(
            "cure fractions must lie strictly in (0, 1), got ({p1}, {p2})"
        )));
    }
    regime.validate()?;
    match regime {
        OddsRatioRegime::Eq1 => Ok(CureCells {
            p11: p1 * p2,
            p10: p1 * (1.0 - p2),
            p01: (1.0 - p1) * p2,
            p00: (1.0 - p1) * (1.0 - p2),
        }),
        OddsRatioRegime::Inf => {
            if (p1 - p2).abs() > 1e-12 {
                return Err(Error::InconsistentMargins(format!(
                    "R = inf forces X1 = X2, which requires p1 = p2; got ({p1}, {p2})"
                )));
            }
            Ok(CureCells { p11: p1, p10: 0.0, p01: 0.0, p00: 1.0 - p1 })
        }
        OddsRatioRegime::Lt1 { r } | OddsRatioRegime::Gt1 { r } => {
            let e = r - 1.0;
            let f = e * (p1 + p2) + 1.0;
            // discriminant expanded in powers of (R - 1): for R > 1 every
            // term is nonnegative, so no cancellation occurs even at huge R
            // where the textbook form f^2 - 4R(R-1)p1p2 loses all digits
            let d = e * e * (p1 - p2) * (p1 - p2)
                + 2.0 * e * (p1 * (1.0 - p2) + p2 * (1.0 - p1))
                + 1.0;
            if d <= 0.0 {
                return Err(Error::NumericalDegeneracy(format!(
                    "discriminant {d} <= 0 for (p1, p2, R) = ({p1}, {p2}, {r})"
                )));
            }
            // minus root in rationalized form, projected into the Frechet box
            let p11 = (2.0 * r * p1 * p2 / (f + d.sqrt()))
                .min(p1.min(p2))
                .max((p1 + p2 - 1.0).max(0.0));
            Ok(CureCells {
                p11,
                p10: p1 - p11,
                p01: p2 - p11,
                p00: (1.0 - p1 - p2 + p11).max(0.0),
            })
        }
    }
}

/// Odds ratio p11 p00 / (p10 p01) of a cell table.
///
/// A zero off-diagonal cell yields the infinite-odds signal `+inf` rather
/// than an error.
pub fn odds_ratio_of(cells: &CureCells) -> f64 {
    let num = cells.p11 * cells.p00;
    let den = cells.p10 * cells.p01;
    if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// Logistic cure regressions for the two margins. Coefficient vectors start
/// with the intercept; `shared` marks the common-beta structure used under
/// R = infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CureRegression {
    pub beta1: Vec<f64>,
    pub beta2: Vec<f64>,
    pub shared: bool,
}

impl CureRegression {
    pub fn new(beta1: Vec<f64>, beta2: Vec<f64>) -> Self {
        CureRegression { beta1, beta2, shared: false }
    }

    /// Common-beta regression for the perfect-concordance regime.
    pub fn shared(beta: Vec<f64>) -> Self {
        CureRegression { beta1: beta.clone(), beta2: beta, shared: true }
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta1.is_empty() || self.beta2.is_empty() {
            return Err(Error::Shape("cure regression needs at least an intercept".into()));
        }
        if self.shared && self.beta1 != self.beta2 {
            return Err(Error::Shape("shared cure regression must have beta1 == beta2".into()));
        }
        Ok(())
    }
}

/// Conditional cure probability exp(eta)/(1 + exp(eta)) with
/// eta = intercept + slopes . x.
pub fn cure_fraction(beta: &[f64], x: &[f64]) -> Result<f64> {
    if beta.len() != x.len() + 1 {
        return Err(Error::Shape(format!(
            "coefficient length {} does not match covariate length {} + intercept",
            beta.len(),
            x.len()
        )));
    }
    let eta = beta[0] + beta[1..].iter().zip(x).map(|(b, xi)| b * xi).sum::<f64>();
    Ok(logistic(eta))
}

/// Subject-specific cure cells: logistic fractions composed with
/// [`solve_cells`].
///
/// Under R = infinity the table is (p, 0, 0, 1-p) with p evaluated from the
/// shared coefficients at `x1`; equality of the two margins is carried by
/// the `shared` structure, not re-checked numerically.
pub fn subject_cells(
    reg: &CureRegression,
    x1: &[f64],
    x2: &[f64],
    regime: OddsRatioRegime,
) -> Result<CureCells> {
    reg.validate()?;
    regime.validate()?;
    if let OddsRatioRegime::Inf = regime {
        if !reg.shared {
            return Err(Error::InconsistentMargins(
                "R = inf with covariates requires the shared-beta structure".into(),
            ));
        }
        let p = cure_fraction(&reg.beta1, x1)?;
        return Ok(CureCells { p11: p, p10: 0.0, p01: 0.0, p00: 1.0 - p });
    }
    let p1 = cure_fraction(&reg.beta1, x1)?;
    let p2 = cure_fraction(&reg.beta2, x2)?;
    solve_cells(p1, p2, regime)
}
