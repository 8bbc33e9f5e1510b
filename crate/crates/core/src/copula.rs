//! Copula families: evaluation, analytic partial derivatives, sampling, and
//! the frailty-induced family C* obtained by mixing a base copula over a
//! gamma frailty.
//!
//! Six families are supported. Independence, Gumbel, and FGM are the base
//! families of the survival model; Clayton, BB1, and the generalized FGM
//! (GenFgm) arise as the induced copulas of the uncured subpopulation and
//! drive the rank-correlation formulas.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{Exp1, Open01};
use serde::{Deserialize, Serialize};

/// A parametric copula family.
///
/// `theta` is the base dependence parameter; `gamma` is the second parameter
/// of the two-parameter families induced by gamma-frailty mixing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CopulaFamily {
    Independence,
    Gumbel { theta: f64 },
    Fgm { theta: f64 },
    Clayton { gamma: f64 },
    Bb1 { theta: f64, gamma: f64 },
    GenFgm { theta: f64, gamma: f64 },
}

/// Signed generalized-FGM expansion: (alpha, beta, coefficient) per term,
/// with the copula equal to Sum coeff * (alpha u^-g + beta v^-g - (alpha +
/// beta - 1))^(-1/g). The same table drives the FGM survival fourth term
/// and its likelihood contributions.
pub(crate) fn gen_fgm_terms(theta: f64) -> [(f64, f64, f64); 4] {
    [
        (1.0, 1.0, 1.0 + theta),
        (2.0, 1.0, -theta),
        (1.0, 2.0, -theta),
        (2.0, 2.0, theta),
    ]
}

impl CopulaFamily {
    /// Check the parameter domain of the family.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ParamDomain(msg));
        match *self {
            CopulaFamily::Independence => Ok(()),
            CopulaFamily::Gumbel { theta } => {
                if theta.is_finite() && theta >= 0.0 {
                    Ok(())
                } else {
                    bad(format!("Gumbel requires theta >= 0, got {theta}"))
                }
            }
            CopulaFamily::Fgm { theta } => {
                if theta.is_finite() && (-1.0..=1.0).contains(&theta) {
                    Ok(())
                } else {
                    bad(format!("FGM requires theta in [-1, 1], got {theta}"))
                }
            }
            CopulaFamily::Clayton { gamma } => {
                if gamma.is_finite() && gamma > 0.0 {
                    Ok(())
                } else {
                    bad(format!("Clayton requires gamma > 0, got {gamma}"))
                }
            }
            CopulaFamily::Bb1 { theta, gamma } => {
                if theta.is_finite() && theta >= 0.0 && gamma.is_finite() && gamma > 0.0 {
                    Ok(())
                } else {
                    bad(format!("BB1 requires theta >= 0 and gamma > 0, got ({theta}, {gamma})"))
                }
            }
            CopulaFamily::GenFgm { theta, gamma } => {
                if theta.is_finite()
                    && (-1.0..=1.0).contains(&theta)
                    && gamma.is_finite()
                    && gamma > 0.0
                {
                    Ok(())
                } else {
                    bad(format!(
                        "GenFGM requires theta in [-1, 1] and gamma > 0, got ({theta}, {gamma})"
                    ))
                }
            }
        }
    }

    /// The copula C* of the uncured subpopulation when this base family is
    /// mixed over a gamma frailty with variance `gamma`.
    ///
    /// Independence induces Clayton(gamma), Gumbel(theta) induces
    /// BB1(theta, gamma), and FGM(theta) induces GenFgm(theta, gamma).
    pub fn induced(&self, gamma: f64) -> Result<CopulaFamily> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::ParamDomain(format!(
                "frailty variance must be positive, got {gamma}"
            )));
        }
        let fam = match *self {
            CopulaFamily::Independence => CopulaFamily::Clayton { gamma },
            CopulaFamily::Gumbel { theta } => CopulaFamily::Bb1 { theta, gamma },
            CopulaFamily::Fgm { theta } => CopulaFamily::GenFgm { theta, gamma },
            other => {
                return Err(Error::Unsupported(format!(
                    "no induced copula for base family {other:?}"
                )))
            }
        };
        fam.validate()?;
        Ok(fam)
    }

    /// C(u, v) on the closed unit square.
    pub fn cdf(&self, u: f64, v: f64) -> Result<f64> {
        self.validate()?;
        if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
            return Err(Error::ParamDomain(format!(
                "copula arguments must lie in [0, 1], got ({u}, {v})"
            )));
        }
        if u == 0.0 || v == 0.0 {
            return Ok(0.0);
        }
        if u == 1.0 {
            return Ok(v);
        }
        if v == 1.0 {
            return Ok(u);
        }
        Ok(match *self {
            CopulaFamily::Independence => u * v,
            CopulaFamily::Gumbel { theta } => {
                if theta == 0.0 {
                    u * v
                } else {
                    (-gumbel_g(theta, -u.ln(), -v.ln())).exp()
                }
            }
            CopulaFamily::Fgm { theta } => u * v * (1.0 + theta * (1.0 - u) * (1.0 - v)),
            CopulaFamily::Clayton { gamma } => {
                let tau = clayton_arg(gamma, u) + clayton_arg(gamma, v);
                (-tau.ln_1p() / gamma).exp()
            }
            CopulaFamily::Bb1 { theta, gamma } => {
                let s = bb1_s(theta, gamma, u, v);
                (-s.ln_1p() / gamma).exp()
            }
            CopulaFamily::GenFgm { theta, gamma } => {
                let xu = clayton_arg(gamma, u);
                let xv = clayton_arg(gamma, v);
                let mut total = 0.0;
                for (a, b, c) in gen_fgm_terms(theta) {
                    let tau = a * xu + b * xv;
                    total += c * (-tau.ln_1p() / gamma).exp();
                }
                total
            }
        })
    }

    /// Analytic (dC/du, dC/dv, d2C/dudv) at an interior point.
    pub fn partials(&self, u: f64, v: f64) -> Result<(f64, f64, f64)> {
        self.validate()?;
        if !(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0) {
            return Err(Error::Boundary(format!(
                "partials require an interior point, got ({u}, {v})"
            )));
        }
        Ok(match *self {
            CopulaFamily::Independence => (v, u, 1.0),
            CopulaFamily::Gumbel { theta } => {
                if theta == 0.0 {
                    (v, u, 1.0)
                } else {
                    let delta = theta + 1.0;
                    let x = -u.ln();
                    let y = -v.ln();
                    let g = gumbel_g(theta, x, y);
                    let c = (-g).exp();
                    let cu = c * (x / g).powf(delta - 1.0) / u;
                    let cv = c * (y / g).powf(delta - 1.0) / v;
                    let dens = c * (x * y).powf(delta - 1.0) * g.powf(1.0 - 2.0 * delta)
                        * (g + delta - 1.0)
                        / (u * v);
                    (cu, cv, dens)
                }
            }
            CopulaFamily::Fgm { theta } => {
                let cu = v * (1.0 + theta * (1.0 - v) * (1.0 - 2.0 * u));
                let cv = u * (1.0 + theta * (1.0 - u) * (1.0 - 2.0 * v));
                let dens = 1.0 + theta * (1.0 - 2.0 * u) * (1.0 - 2.0 * v);
                (cu, cv, dens)
            }
            CopulaFamily::Clayton { gamma } => {
                let tau = clayton_arg(gamma, u) + clayton_arg(gamma, v);
                let lt = tau.ln_1p();
                let cu = (-(1.0 / gamma + 1.0) * lt - (gamma + 1.0) * u.ln()).exp();
                let cv = (-(1.0 / gamma + 1.0) * lt - (gamma + 1.0) * v.ln()).exp();
                let dens = (1.0 + gamma)
                    * (-(1.0 / gamma + 2.0) * lt - (gamma + 1.0) * (u.ln() + v.ln())).exp();
                (cu, cv, dens)
            }
            CopulaFamily::Bb1 { theta, gamma } => {
                let delta = theta + 1.0;
                let x = clayton_arg(gamma, u);
                let y = clayton_arg(gamma, v);
                let s = bb1_s(theta, gamma, u, v);
                let ls = s.ln_1p();
                let cu = (-(1.0 / gamma + 1.0) * ls).exp()
                    * (x / s).powf(delta - 1.0)
                    * (-(gamma + 1.0) * u.ln()).exp();
                let cv = (-(1.0 / gamma + 1.0) * ls).exp()
                    * (y / s).powf(delta - 1.0)
                    * (-(gamma + 1.0) * v.ln()).exp();
                let dens = (x * y).powf(delta - 1.0)
                    * (-(gamma + 1.0) * (u.ln() + v.ln())).exp()
                    * s.powf(1.0 - 2.0 * delta)
                    * (-(1.0 / gamma + 2.0) * ls).exp()
                    * ((1.0 + gamma) * s + gamma * theta * (1.0 + s));
                (cu, cv, dens)
            }
            CopulaFamily::GenFgm { theta, gamma } => {
                let xu = clayton_arg(gamma, u);
                let xv = clayton_arg(gamma, v);
                let (mut cu, mut cv, mut dens) = (0.0, 0.0, 0.0);
                for (a, b, c) in gen_fgm_terms(theta) {
                    let lt = (a * xu + b * xv).ln_1p();
                    cu += c * a * (-(1.0 / gamma + 1.0) * lt).exp();
                    cv += c * b * (-(1.0 / gamma + 1.0) * lt).exp();
                    dens += c * a * b * (-(1.0 / gamma + 2.0) * lt).exp();
                }
                let ju = (-(gamma + 1.0) * u.ln()).exp();
                let jv = (-(gamma + 1.0) * v.ln()).exp();
                (cu * ju, cv * jv, dens * (1.0 + gamma) * ju * jv)
            }
        })
    }

    /// Draw `n` i.i.d. pairs with uniform margins and this copula.
    ///
    /// Sampling is implemented for the three base families only. Gumbel uses
    /// the Marshall-Olkin construction with a Chambers-Mallows-Stuck
    /// positive-stable variate; FGM uses closed-form conditional inversion.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<(f64, f64)>> {
        self.validate()?;
        if n == 0 {
            return Err(Error::ParamDomain("sample size must be >= 1".into()));
        }
        let mut out = Vec::with_capacity(n);
        match *self {
            CopulaFamily::Independence => {
                for _ in 0..n {
                    out.push((rng.sample(Open01), rng.sample(Open01)));
                }
            }
            CopulaFamily::Gumbel { theta } => {
                if theta < 1e-10 {
                    // removable singularity at theta = 0: exact product copula
                    for _ in 0..n {
                        out.push((rng.sample(Open01), rng.sample(Open01)));
                    }
                } else {
                    let alpha = 1.0 / (theta + 1.0);
                    for _ in 0..n {
                        let v = positive_stable(rng, alpha);
                        let e1: f64 = rng.sample(Exp1);
                        let e2: f64 = rng.sample(Exp1);
                        out.push(((-(e1 / v).powf(alpha)).exp(), (-(e2 / v).powf(alpha)).exp()));
                    }
                }
            }
            CopulaFamily::Fgm { theta } => {
                for _ in 0..n {
                    let u: f64 = rng.sample(Open01);
                    let w: f64 = rng.sample(Open01);
                    let b = theta * (1.0 - 2.0 * u);
                    let v = if b.abs() < 1e-12 {
                        w
                    } else {
                        let one_b = 1.0 + b;
                        (one_b - (one_b * one_b - 4.0 * b * w).sqrt()) / (2.0 * b)
                    };
                    out.push((u, v));
                }
            }
            other => {
                return Err(Error::Unsupported(format!(
                    "sampling is not implemented for {other:?}"
                )))
            }
        }
        Ok(out)
    }
}

/// u^(-gamma) - 1 evaluated without cancellation for small gamma.
fn clayton_arg(gamma: f64, u: f64) -> f64 {
    (-gamma * u.ln()).exp_m1()
}

/// Gumbel exponent g = (x^d + y^d)^(1/d) with d = theta + 1, in log space so
/// large theta cannot overflow the inner powers.
fn gumbel_g(theta: f64, x: f64, y: f64) -> f64 {
    let delta = theta + 1.0;
    if x == 0.0 {
        return y;
    }
    if y == 0.0 {
        return x;
    }
    let (lmax, lmin) = {
        let (lx, ly) = (x.ln(), y.ln());
        if lx >= ly {
            (lx, ly)
        } else {
            (ly, lx)
        }
    };
    (lmax + ((delta * (lmin - lmax)).exp().ln_1p()) / delta).exp()
}

/// BB1 inner sum s = ((u^-g - 1)^d + (v^-g - 1)^d)^(1/d).
fn bb1_s(theta: f64, gamma: f64, u: f64, v: f64) -> f64 {
    gumbel_g(theta, clayton_arg(gamma, u), clayton_arg(gamma, v))
}

/// Positive stable variate with Laplace transform exp(-s^alpha), alpha in
/// (0, 1), by the Chambers-Mallows-Stuck angular representation
/// (equivalently Kanter's method for the totally skewed case).
fn positive_stable<R: Rng + ?Sized>(rng: &mut R, alpha: f64) -> f64 {
    debug_assert!(alpha > 0.0 && alpha < 1.0);
    let theta: f64 = rng.sample::<f64, _>(Open01) * std::f64::consts::PI;
    let e: f64 = rng.sample(Exp1);
    (alpha * theta).sin()
        * theta.sin().powf(-1.0 / alpha)
        * (((1.0 - alpha) * theta).sin() / e).powf((1.0 - alpha) / alpha)
}

/// C*(u, v): the gamma-frailty mixture of the base copula, evaluated through
/// its closed form.
pub fn induced_copula_cstar(base: &CopulaFamily, gamma: f64, u: f64, v: f64) -> Result<f64> {
    base.induced(gamma)?.cdf(u, v)
}

/// Direct mixture-integral evaluation of C*(u, v), used as an oracle against
/// the closed forms: integral of C_theta(exp(-w(u^-g-1)/g), exp(-w(v^-g-1)/g))
/// against the gamma density.
pub fn cstar_mixture_oracle(base: &CopulaFamily, gamma: f64, u: f64, v: f64) -> Result<f64> {
    base.validate()?;
    if !(gamma > 0.0) {
        return Err(Error::ParamDomain("gamma must be positive".into()));
    }
    if u == 0.0 || v == 0.0 {
        return Ok(0.0);
    }
    let su = clayton_arg(gamma, u) / gamma;
    let sv = clayton_arg(gamma, v) / gamma;
    let base = *base;
    Ok(crate::numerics::gamma_mixture_integral(
        move |w| {
            base.cdf((-w * su).exp(), (-w * sv).exp())
                .expect("base copula arguments stay in [0, 1]")
        },
        gamma,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn all_families() -> Vec<CopulaFamily> {
        vec![
            CopulaFamily::Independence,
            CopulaFamily::Gumbel { theta: 1.0 },
            CopulaFamily::Gumbel { theta: 3.5 },
            CopulaFamily::Fgm { theta: 0.8 },
            CopulaFamily::Fgm { theta: -1.0 },
            CopulaFamily::Clayton { gamma: 2.0 },
            CopulaFamily::Bb1 { theta: 1.0, gamma: 1.0 },
            CopulaFamily::Bb1 { theta: 0.5, gamma: 3.0 },
            CopulaFamily::GenFgm { theta: 0.5, gamma: 0.5 },
            CopulaFamily::GenFgm { theta: -0.7, gamma: 2.0 },
        ]
    }

    #[test]
    fn gumbel_theta_zero_is_product() {
        let c = CopulaFamily::Gumbel { theta: 0.0 };
        assert_abs_diff_eq!(c.cdf(0.3, 0.7).unwrap(), 0.21, epsilon = 1e-15);
    }

    #[test]
    fn fgm_formula_value() {
        let c = CopulaFamily::Fgm { theta: 1.0 };
        assert_abs_diff_eq!(c.cdf(0.5, 0.5).unwrap(), 0.3125, epsilon = 1e-15);
    }

    #[test]
    fn bb1_margin_condition() {
        let c = CopulaFamily::Bb1 { theta: 1.0, gamma: 1.0 };
        for u in [0.1, 0.5, 0.9] {
            assert_abs_diff_eq!(c.cdf(u, 1.0).unwrap(), u, epsilon = 1e-15);
        }
    }

    #[test]
    fn gen_fgm_matches_mixture_oracle() {
        let base = CopulaFamily::Fgm { theta: 0.5 };
        let closed = induced_copula_cstar(&base, 0.5, 0.4, 0.6).unwrap();
        let oracle = cstar_mixture_oracle(&base, 0.5, 0.4, 0.6).unwrap();
        assert_abs_diff_eq!(closed, oracle, epsilon = 1e-8);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(CopulaFamily::Gumbel { theta: -0.1 }.cdf(0.5, 0.5).is_err());
        assert!(CopulaFamily::Fgm { theta: 1.5 }.cdf(0.5, 0.5).is_err());
        assert!(CopulaFamily::Clayton { gamma: 0.0 }.cdf(0.5, 0.5).is_err());
        assert!(CopulaFamily::Independence.cdf(1.2, 0.5).is_err());
    }

    #[test]
    fn partials_independence() {
        let (cu, cv, dens) = CopulaFamily::Independence.partials(0.3, 0.7).unwrap();
        assert_abs_diff_eq!(cu, 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(cv, 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(dens, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn fgm_density_at_center() {
        let (_, _, dens) = CopulaFamily::Fgm { theta: -1.0 }.partials(0.5, 0.5).unwrap();
        assert_abs_diff_eq!(dens, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn partials_reject_boundary() {
        assert!(matches!(
            CopulaFamily::Independence.partials(0.0, 0.5),
            Err(Error::Boundary(_))
        ));
    }

    #[test]
    fn boundary_conditions_all_families() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for fam in all_families() {
            for _ in 0..100 {
                let u: f64 = rng.sample(Open01);
                assert_abs_diff_eq!(fam.cdf(u, 1.0).unwrap(), u, epsilon = 1e-12);
                assert_abs_diff_eq!(fam.cdf(1.0, u).unwrap(), u, epsilon = 1e-12);
                assert_eq!(fam.cdf(u, 0.0).unwrap(), 0.0);
                assert_eq!(fam.cdf(0.0, u).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn two_increasing_all_families() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for fam in all_families() {
            for _ in 0..1000 {
                let mut u: [f64; 2] = [rng.sample(Open01), rng.sample(Open01)];
                let mut v: [f64; 2] = [rng.sample(Open01), rng.sample(Open01)];
                u.sort_by(f64::total_cmp);
                v.sort_by(f64::total_cmp);
                let c = |a: f64, b: f64| fam.cdf(a, b).unwrap();
                let vol = c(u[1], v[1]) - c(u[0], v[1]) - c(u[1], v[0]) + c(u[0], v[0]);
                assert!(vol >= -1e-12, "{fam:?} rectangle mass {vol}");
            }
        }
    }

    #[test]
    fn partials_match_finite_differences() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let h = 1e-5;
        for fam in all_families() {
            for _ in 0..100 {
                let u = 0.05 + 0.9 * rng.sample::<f64, _>(Open01);
                let v = 0.05 + 0.9 * rng.sample::<f64, _>(Open01);
                let (cu, cv, dens) = fam.partials(u, v).unwrap();
                let c = |a: f64, b: f64| fam.cdf(a, b).unwrap();
                let fd_u = (c(u + h, v) - c(u - h, v)) / (2.0 * h);
                let fd_v = (c(u, v + h) - c(u, v - h)) / (2.0 * h);
                // the density is differenced from the analytic dC/du: a raw
                // mixed stencil of C at step 1e-5 sits on the roundoff floor
                let fd_uv = (fam.partials(u, v + h).unwrap().0
                    - fam.partials(u, v - h).unwrap().0)
                    / (2.0 * h);
                let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-3);
                assert!(rel(cu, fd_u) < 1e-6, "{fam:?} dC/du {cu} vs {fd_u}");
                assert!(rel(cv, fd_v) < 1e-6, "{fam:?} dC/dv {cv} vs {fd_v}");
                assert!(rel(dens, fd_uv) < 1e-5, "{fam:?} density {dens} vs {fd_uv}");
                assert!(dens >= 0.0);
            }
        }
    }

    #[test]
    fn gumbel_partials_match_fd_at_center() {
        let fam = CopulaFamily::Gumbel { theta: 1.0 };
        let (cu, cv, _) = fam.partials(0.5, 0.5).unwrap();
        let h = 1e-6;
        let c = |a: f64, b: f64| fam.cdf(a, b).unwrap();
        assert_abs_diff_eq!(cu, (c(0.5 + h, 0.5) - c(0.5 - h, 0.5)) / (2.0 * h), epsilon = 1e-6);
        assert_abs_diff_eq!(cv, (c(0.5, 0.5 + h) - c(0.5, 0.5 - h)) / (2.0 * h), epsilon = 1e-6);
    }

    #[test]
    fn induced_dispatch() {
        let bb1 = CopulaFamily::Gumbel { theta: 1.0 }.induced(1.0).unwrap();
        assert_eq!(bb1, CopulaFamily::Bb1 { theta: 1.0, gamma: 1.0 });
        let closed = bb1.cdf(0.5, 0.5).unwrap();
        // BB1(1,1)(.5,.5) = (1 + sqrt(2))^-1
        assert_abs_diff_eq!(closed, 1.0 / (1.0 + 2f64.sqrt()), epsilon = 1e-14);
        let oracle =
            cstar_mixture_oracle(&CopulaFamily::Gumbel { theta: 1.0 }, 1.0, 0.5, 0.5).unwrap();
        assert_abs_diff_eq!(closed, oracle, epsilon = 1e-8);

        // margin condition of the induced family
        let clayton = CopulaFamily::Independence.induced(1.0).unwrap();
        for u in [0.2, 0.5, 0.8] {
            assert_abs_diff_eq!(clayton.cdf(u, 1.0).unwrap(), u, epsilon = 1e-14);
        }
    }

    #[test]
    fn gen_fgm_theta_zero_is_clayton() {
        let gen = CopulaFamily::Fgm { theta: 0.0 }.induced(2.0).unwrap();
        let clayton = CopulaFamily::Clayton { gamma: 2.0 };
        for i in 1..=5 {
            for j in 1..=5 {
                let (u, v) = (i as f64 / 6.0, j as f64 / 6.0);
                assert_abs_diff_eq!(
                    gen.cdf(u, v).unwrap(),
                    clayton.cdf(u, v).unwrap(),
                    epsilon = 1e-13
                );
            }
        }
    }

    #[test]
    fn induced_matches_mixture_across_grid() {
        let bases = [
            CopulaFamily::Independence,
            CopulaFamily::Gumbel { theta: 1.5 },
            CopulaFamily::Fgm { theta: -0.5 },
        ];
        for base in bases {
            for gamma in [0.25, 1.0, 4.0] {
                for i in 1..=7 {
                    for j in 1..=7 {
                        let (u, v) = (i as f64 / 8.0, j as f64 / 8.0);
                        let closed = induced_copula_cstar(&base, gamma, u, v).unwrap();
                        let oracle = cstar_mixture_oracle(&base, gamma, u, v).unwrap();
                        assert_abs_diff_eq!(closed, oracle, epsilon = 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn induced_rejects_nonpositive_gamma() {
        assert!(CopulaFamily::Independence.induced(0.0).is_err());
        assert!(CopulaFamily::Independence.induced(-1.0).is_err());
    }

    /// Sample Kendall tau of (u, v) pairs, O(n^2) — test sizes only.
    fn raw_tau(pairs: &[(f64, f64)]) -> f64 {
        let n = pairs.len();
        let mut s = 0i64;
        for i in 0..n {
            for j in (i + 1)..n {
                let a = (pairs[i].0 - pairs[j].0).signum();
                let b = (pairs[i].1 - pairs[j].1).signum();
                s += (a * b) as i64;
            }
        }
        s as f64 / (n * (n - 1) / 2) as f64
    }

    #[test]
    fn sampler_tau_independence() {
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let pairs = CopulaFamily::Independence.sample(&mut rng, 20_000).unwrap();
        assert!(raw_tau(&pairs).abs() < 0.02);
    }

    #[test]
    fn sampler_tau_gumbel() {
        let mut rng = ChaCha12Rng::seed_from_u64(22);
        let pairs = CopulaFamily::Gumbel { theta: 1.0 }.sample(&mut rng, 20_000).unwrap();
        // theta/(theta+1) = 0.5, cross-checked against quadrature in dependence tests
        assert!((raw_tau(&pairs) - 0.5).abs() < 0.02);
    }

    #[test]
    fn sampler_tau_fgm() {
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let pairs = CopulaFamily::Fgm { theta: 1.0 }.sample(&mut rng, 20_000).unwrap();
        assert!((raw_tau(&pairs) - 2.0 / 9.0).abs() < 0.02);
    }

    #[test]
    fn sampler_empirical_copula_sup_norm() {
        let n = 100_000;
        for (seed, fam) in [
            (31, CopulaFamily::Independence),
            (32, CopulaFamily::Gumbel { theta: 1.0 }),
            (33, CopulaFamily::Fgm { theta: 1.0 }),
        ] {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let pairs = fam.sample(&mut rng, n).unwrap();
            let mut worst = 0.0f64;
            for i in 1..=10 {
                for j in 1..=10 {
                    let (u, v) = (i as f64 / 10.0, j as f64 / 10.0);
                    let emp = pairs.iter().filter(|(a, b)| *a <= u && *b <= v).count() as f64
                        / n as f64;
                    worst = worst.max((emp - fam.cdf(u, v).unwrap()).abs());
                }
            }
            assert!(worst < 0.01, "{fam:?} sup-norm {worst}");
        }
    }

    #[test]
    fn sampler_rejects_unsupported_families() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        assert!(matches!(
            CopulaFamily::Clayton { gamma: 1.0 }.sample(&mut rng, 3),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn sampler_deterministic_given_seed() {
        let fam = CopulaFamily::Gumbel { theta: 2.0 };
        let a = fam.sample(&mut ChaCha12Rng::seed_from_u64(99), 20).unwrap();
        let b = fam.sample(&mut ChaCha12Rng::seed_from_u64(99), 20).unwrap();
        assert_eq!(a, b);
    }
}
