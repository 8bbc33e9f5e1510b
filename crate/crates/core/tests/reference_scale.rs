//! Desk-scale reproductions of the negative-dependence reference setting
//! (theta = 0.5, R = 0.5): estimator recovery of the odds ratio, and the
//! EM-versus-direct log-likelihood bound specific to this setting.

use bicure::cure::{CureRegression, OddsRatioRegime};
use bicure::datagen::{Censoring, CovariateScheme, SimDesign};
use bicure::study::{run_study, StudyKind, StudyReport, StudySpec};
use bicure::survival::{CureModel, FrailtySpec, ModelCopula, ModelParams, WeibullMargin};

fn setting_b_covariates() -> ModelParams {
    ModelParams {
        copula: ModelCopula::Gumbel { theta: 0.5 },
        frailty: FrailtySpec { variance: 0.5 },
        cure: CureModel::Regression(CureRegression::new(vec![1.0, -1.0], vec![-1.0, 1.0])),
        regime: OddsRatioRegime::Lt1 { r: 0.5 },
        margin1: WeibullMargin { shape: 1.0, rate: 1.5 },
        margin2: WeibullMargin { shape: 1.0, rate: 2.0 },
    }
}

#[test]
fn setting_b_odds_ratio_recovery() {
    let spec = StudySpec {
        study: StudyKind::MleStudy,
        design: SimDesign {
            params: setting_b_covariates(),
            n: 400,
            censoring: Censoring::Uniform { lo: 0.0, hi: 6.0 },
            covariates: CovariateScheme::UniformPerMargin,
            seed: 0xB400,
        },
        replications: 200,
        alpha: 0.05,
        r_grid: vec![],
        fit_starts: 3,
        em_starts: 1,
        output_path: None,
    };
    let report = match run_study(&spec).unwrap() {
        StudyReport::MleStudy(r) => r,
        _ => unreachable!(),
    };
    assert!(!report.meta.unreliable);
    let r_row = report.rows.iter().find(|r| r.name == "R").unwrap();
    assert!(
        (r_row.mean - 0.5).abs() < 0.06,
        "mean R-hat {} strays from 0.5 beyond the reference band",
        r_row.mean
    );
    let theta_row = report.rows.iter().find(|r| r.name == "theta").unwrap();
    assert!((theta_row.mean - 0.5).abs() < 0.10, "mean theta-hat {}", theta_row.mean);
}

#[test]
fn setting_b_em_direct_loglik_bound() {
    let spec = StudySpec {
        study: StudyKind::EmCompare,
        design: SimDesign {
            params: ModelParams {
                copula: ModelCopula::Gumbel { theta: 0.5 },
                frailty: FrailtySpec { variance: 0.5 },
                cure: CureModel::Margins { p1: 0.6, p2: 0.4 },
                regime: OddsRatioRegime::Eq1,
                margin1: WeibullMargin { shape: 1.0, rate: 1.5 },
                margin2: WeibullMargin { shape: 1.0, rate: 2.0 },
            },
            n: 200,
            censoring: Censoring::Uniform { lo: 0.0, hi: 6.0 },
            covariates: CovariateScheme::None,
            seed: 0xB0E1,
        },
        replications: 15,
        alpha: 0.05,
        r_grid: vec![],
        fit_starts: 3,
        em_starts: 2,
        output_path: None,
    };
    let report = match run_study(&spec).unwrap() {
        StudyReport::EmCompare(r) => r,
        _ => unreachable!(),
    };
    assert!(
        report.max_abs_loglik_diff <= 0.90,
        "max |loglik_EM - loglik_direct| = {} above the setting-B bound",
        report.max_abs_loglik_diff
    );
}
