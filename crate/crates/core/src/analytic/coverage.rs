//! Coverage probabilities of the typical primary and secondary links.
//!
//! Every expression is evaluated in log space. Integrals are always taken
//! against a decaying sensing envelope `exp(-N (u + shift)^alpha / P_p)`, so the
//! `N -> 0` and `N -> inf` ends are handled as closed-form limits instead.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::quadrature::{integrate_semi_infinite, DEFAULT_REL_TOL};
use super::{boosted_st_density, interference_constant, opportunity, CoverageBounds};
use crate::error::{invalid, Result};
use crate::params::SystemParams;
use crate::protocols::ProtocolKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Primary,
    Secondary,
}

/// `1 / (1 + u^alpha / c)` or its complement `(u^alpha / c) / (1 + u^alpha / c)`.
#[derive(Debug, Clone, Copy)]
struct Kernel {
    c: f64,
    alpha: f64,
    complement: bool,
}

impl Kernel {
    /// Kernel of an interferer with power `p_int` against a link with power
    /// `p_sig`, length `d` and target `theta`.
    fn new(theta: f64, p_sig: f64, p_int: f64, d: f64, alpha: f64, complement: bool) -> Self {
        Kernel {
            c: theta * p_sig * d.powf(alpha) / p_int,
            alpha,
            complement,
        }
    }

    #[inline]
    fn eval(&self, u: f64) -> f64 {
        let ua = u.powf(self.alpha);
        let k = if self.c == 0.0 {
            if ua == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            self.c / (self.c + ua)
        };
        if self.complement {
            1.0 - k
        } else {
            k
        }
    }

    /// `∫ u k(u) du` for the plain kernel.
    #[cfg(test)]
    fn plain_integral(&self) -> f64 {
        self.c.powf(2.0 / self.alpha) * interference_constant(self.alpha) / (2.0 * PI)
    }
}

#[derive(Debug, Clone, Copy)]
struct Envelope {
    /// `N / P_p`
    rate: f64,
    alpha: f64,
}

impl Envelope {
    #[inline]
    fn exponent(&self, u: f64) -> f64 {
        if u == 0.0 {
            0.0
        } else {
            self.rate * u.powf(self.alpha)
        }
    }
}

fn envelope_integral(env: Envelope, kernel: Kernel, shift: f64) -> Result<f64> {
    integrate_semi_infinite(
        |u| {
            let e = (-env.exponent(u + shift)).exp();
            if e == 0.0 {
                0.0
            } else {
                e * kernel.eval(u) * u
            }
        },
        DEFAULT_REL_TOL,
    )
}

/// `∫ (exp(-a(u)) - exp(-a(u + shift))) k(u) u du`, non-negative by construction.
fn envelope_deficit(env: Envelope, kernel: Kernel, shift: f64) -> Result<f64> {
    integrate_semi_infinite(
        |u| {
            let a = env.exponent(u);
            let b = env.exponent(u + shift);
            let e = (-a).exp();
            if e == 0.0 {
                0.0
            } else {
                e * -(a - b).exp_m1() * kernel.eval(u) * u
            }
        },
        DEFAULT_REL_TOL,
    )
}

/// The integrals appearing in the coverage expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoverageIntegral {
    /// Conditioned interference of PRA-active STs at the typical PR.
    PrimaryPra,
    PrimaryPtaUpper,
    PrimaryPtaLower,
    SecondaryPra,
    SecondaryPtaUpper,
    SecondaryPtaLower,
}

impl CoverageIntegral {
    pub const ALL: [CoverageIntegral; 6] = [
        CoverageIntegral::PrimaryPra,
        CoverageIntegral::PrimaryPtaUpper,
        CoverageIntegral::PrimaryPtaLower,
        CoverageIntegral::SecondaryPra,
        CoverageIntegral::SecondaryPtaUpper,
        CoverageIntegral::SecondaryPtaLower,
    ];

    pub fn protocol(self) -> ProtocolKind {
        match self {
            CoverageIntegral::PrimaryPra | CoverageIntegral::SecondaryPra => ProtocolKind::Pra,
            _ => ProtocolKind::Pta,
        }
    }

    fn parts(self, params: &SystemParams) -> Result<(Envelope, Kernel, f64)> {
        let threshold = match self.protocol() {
            ProtocolKind::Pra => params.require_n_ra()?,
            _ => params.require_n_ta()?,
        };
        if !(threshold > 0.0 && threshold.is_finite()) {
            return Err(invalid("threshold", "integral needs a positive finite threshold"));
        }
        let a = params.alpha;
        let env = Envelope {
            rate: threshold / params.power_p,
            alpha: a,
        };
        let (p, s) = (params.power_p, params.power_s);
        let primary = |complement| Kernel::new(params.theta_p, s, p, params.d_p, a, complement);
        let secondary = Kernel::new(params.theta_s, p, s, params.d_s, a, false);
        Ok(match self {
            CoverageIntegral::PrimaryPra => (env, primary(true), 0.0),
            CoverageIntegral::PrimaryPtaUpper => (env, primary(false), 0.0),
            CoverageIntegral::PrimaryPtaLower => (env, primary(false), params.d_p),
            CoverageIntegral::SecondaryPra => (env, secondary, params.d_p + params.d_s),
            CoverageIntegral::SecondaryPtaUpper => (env, secondary, 0.0),
            CoverageIntegral::SecondaryPtaLower => (env, secondary, params.d_s),
        })
    }

    /// The integrand `f(u)` with the integral being `∫_0^∞ f(u) du`.
    pub fn integrand(self, params: &SystemParams) -> Result<impl Fn(f64) -> f64> {
        params.validate()?;
        let (env, kernel, shift) = self.parts(params)?;
        Ok(move |u: f64| {
            let e = (-env.exponent(u + shift)).exp();
            if e == 0.0 {
                0.0
            } else {
                e * kernel.eval(u) * u
            }
        })
    }

    pub fn evaluate(self, params: &SystemParams) -> Result<f64> {
        params.validate()?;
        let (env, kernel, shift) = self.parts(params)?;
        envelope_integral(env, kernel, shift)
    }
}

fn require_positive(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0) {
        return Err(invalid(name, format!("must be > 0 for coverage, got {v}")));
    }
    Ok(())
}

fn check_primary(params: &SystemParams) -> Result<()> {
    params.validate()?;
    require_positive("power_p", params.power_p)?;
    require_positive("d_p", params.d_p)
}

fn check_secondary(params: &SystemParams) -> Result<()> {
    params.validate()?;
    require_positive("power_p", params.power_p)?;
    require_positive("power_s", params.power_s)?;
    require_positive("d_s", params.d_s)
}

/// `-ln` of the shared first factor at the typical PR with STs of density `lambda_s`.
fn primary_base(params: &SystemParams, lambda_s: f64) -> f64 {
    let a = params.alpha;
    interference_constant(a)
        * params.theta_p.powf(2.0 / a)
        * params.d_p * params.d_p
        * (params.mu_p() + lambda_s * (params.power_s / params.power_p).powf(2.0 / a))
}

/// `-ln` of the shared first factor at the typical SR with STs of density `lambda_s`.
fn secondary_base(params: &SystemParams, lambda_s: f64) -> f64 {
    let a = params.alpha;
    interference_constant(a)
        * params.theta_s.powf(2.0 / a)
        * params.d_s * params.d_s
        * (params.mu_p() * (params.power_p / params.power_s).powf(2.0 / a) + lambda_s)
}

fn probability(log: f64) -> f64 {
    log.min(0.0).exp()
}

/// Primary coverage with no secondary transmitters at all.
pub fn no_secondary_coverage(params: &SystemParams) -> Result<f64> {
    check_primary(params)?;
    Ok(probability(-primary_base(params, 0.0)))
}

/// Primary coverage when every candidate ST transmits.
pub fn all_active_primary_coverage(params: &SystemParams) -> Result<f64> {
    check_primary(params)?;
    Ok(probability(-primary_base(params, params.lambda_0)))
}

/// Secondary coverage when every candidate ST transmits.
pub fn all_active_secondary_coverage(params: &SystemParams) -> Result<f64> {
    check_secondary(params)?;
    Ok(probability(-secondary_base(params, params.lambda_0)))
}

/// Primary coverage under PRA, with active STs around the typical PR
/// treated as a Poisson process of the conditioned density.
pub fn coverage_primary_pra(params: &SystemParams) -> Result<f64> {
    check_primary(params)?;
    let n = params.require_n_ra()?;
    if n == 0.0 {
        return no_secondary_coverage(params);
    }
    if n == f64::INFINITY {
        return all_active_primary_coverage(params);
    }
    let a = params.alpha;
    let lambda_s = params.lambda_0 * opportunity(params, ProtocolKind::Pra)?;
    let mut log = -primary_base(params, lambda_s);
    if lambda_s > 0.0 {
        log += 2.0 * PI / a * lambda_s * (params.power_p / n).powf(2.0 / a) * gamma(2.0 / a);
        let hold = (-params.theta_p * params.power_s * n * params.d_p.powf(a)
            / (params.power_p * params.power_p))
            .exp();
        if hold > 0.0 {
            let integral = CoverageIntegral::PrimaryPra.evaluate(params)?;
            log -= 2.0 * PI * lambda_s * hold * integral;
        }
    }
    Ok(probability(log))
}

/// Bounds on primary coverage under PTA.
pub fn coverage_primary_pta_bounds(params: &SystemParams) -> Result<CoverageBounds> {
    check_primary(params)?;
    let n = params.require_n_ta()?;
    if n == 0.0 {
        let v = no_secondary_coverage(params)?;
        return Ok(CoverageBounds::new(v, v));
    }
    if n == f64::INFINITY {
        let v = all_active_primary_coverage(params)?;
        return Ok(CoverageBounds::new(v, v));
    }
    let lambda_s = params.lambda_0 * opportunity(params, ProtocolKind::Pta)?;
    let base = -primary_base(params, lambda_s);
    if lambda_s == 0.0 {
        let v = probability(base);
        return Ok(CoverageBounds::new(v, v));
    }
    let (env, kernel, _) = CoverageIntegral::PrimaryPtaUpper.parts(params)?;
    let upper = envelope_integral(env, kernel, 0.0)?;
    let lower = (upper - envelope_deficit(env, kernel, params.d_p)?).max(0.0);
    Ok(CoverageBounds::new(
        probability(base + 2.0 * PI * lambda_s * lower),
        probability(base + 2.0 * PI * lambda_s * upper),
    ))
}

/// Lower bound on secondary coverage under PRA.
pub fn coverage_secondary_pra_lower(params: &SystemParams) -> Result<f64> {
    check_secondary(params)?;
    let n = params.require_n_ra()?;
    let mu_p = params.mu_p();
    let boosted = boosted_st_density(params.lambda_0, mu_p, params.power_p, n, params.alpha);
    if n == 0.0 {
        // no active STs, and the primary interference term cancels exactly
        return Ok(1.0);
    }
    if n == f64::INFINITY {
        return all_active_secondary_coverage(params);
    }
    let (env, kernel, shift) = CoverageIntegral::SecondaryPra.parts(params)?;
    let mut log = -secondary_base(params, boosted);
    if mu_p > 0.0 {
        log += 2.0 * PI * mu_p * envelope_integral(env, kernel, shift)?;
    }
    Ok(probability(log))
}

/// Bounds on secondary coverage under PTA.
pub fn coverage_secondary_pta_bounds(params: &SystemParams) -> Result<CoverageBounds> {
    check_secondary(params)?;
    let n = params.require_n_ta()?;
    let mu_p = params.mu_p();
    if n == 0.0 {
        // no active STs, and the primary interference term cancels exactly
        return Ok(CoverageBounds::new(1.0, 1.0));
    }
    if n == f64::INFINITY {
        let v = all_active_secondary_coverage(params)?;
        return Ok(CoverageBounds::new(v, v));
    }
    let lambda_s = params.lambda_0 * opportunity(params, ProtocolKind::Pta)?;
    let boosted = boosted_st_density(params.lambda_0, mu_p, params.power_p, n, params.alpha).max(lambda_s);
    let (mut upper_int, mut lower_int) = (0.0, 0.0);
    if mu_p > 0.0 {
        let (env, kernel, _) = CoverageIntegral::SecondaryPtaUpper.parts(params)?;
        upper_int = envelope_integral(env, kernel, 0.0)?;
        lower_int = (upper_int - envelope_deficit(env, kernel, params.d_s)?).max(0.0);
    }
    Ok(CoverageBounds::new(
        probability(-secondary_base(params, boosted) + 2.0 * PI * mu_p * lower_int),
        probability(-secondary_base(params, lambda_s) + 2.0 * PI * mu_p * upper_int),
    ))
}

/// What the analysis offers for a protocol and tier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticCoverage {
    Value(f64),
    Lower(f64),
    Bounds(CoverageBounds),
    Unavailable,
}

pub fn analytic_coverage(params: &SystemParams, kind: ProtocolKind, tier: Tier) -> Result<AnalyticCoverage> {
    use AnalyticCoverage::*;
    Ok(match (tier, kind) {
        (Tier::Primary, ProtocolKind::Pra) => Value(coverage_primary_pra(params)?),
        (Tier::Primary, ProtocolKind::Pta) => Bounds(coverage_primary_pta_bounds(params)?),
        (Tier::Primary, ProtocolKind::AllActive) => Value(all_active_primary_coverage(params)?),
        (Tier::Primary, ProtocolKind::NoneActive) => Value(no_secondary_coverage(params)?),
        (Tier::Secondary, ProtocolKind::Pra) => Lower(coverage_secondary_pra_lower(params)?),
        (Tier::Secondary, ProtocolKind::Pta) => Bounds(coverage_secondary_pta_bounds(params)?),
        (Tier::Secondary, ProtocolKind::AllActive) => Value(all_active_secondary_coverage(params)?),
        _ => Unavailable,
    })
}
