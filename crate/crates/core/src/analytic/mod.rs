//! Closed-form and quadrature evaluation of opportunity, conditional
//! densities, coverage and spatial throughput.

mod coverage;
pub mod quadrature;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Result};
use crate::params::SystemParams;
use crate::protocols::ProtocolKind;

pub use coverage::{
    all_active_primary_coverage, all_active_secondary_coverage, analytic_coverage, coverage_primary_pra,
    coverage_primary_pta_bounds, coverage_secondary_pra_lower, coverage_secondary_pta_bounds,
    no_secondary_coverage, AnalyticCoverage, CoverageIntegral, Tier,
};
pub use quadrature::{integrate_interval, integrate_semi_infinite, DEFAULT_REL_TOL};

/// An analytic lower/upper pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageBounds {
    pub lower: f64,
    pub upper: f64,
}

impl CoverageBounds {
    pub fn new(lower: f64, upper: f64) -> Self {
        assert!(
            0.0 <= lower && lower <= upper && upper <= 1.0,
            "bounds out of order: [{lower}, {upper}]"
        );
        CoverageBounds { lower, upper }
    }

    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64, slack: f64) -> bool {
        self.lower - slack <= x && x <= self.upper + slack
    }

    /// Applies a non-decreasing map to both ends.
    pub fn map(self, f: impl Fn(f64) -> f64) -> (f64, f64) {
        (f(self.lower), f(self.upper))
    }
}

/// Radial density profiles with closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DensityProfileKind {
    /// Active STs around the typical PR under PRA.
    StAroundPrPra,
    /// Active STs around the typical PT under PTA.
    StAroundPtPta,
    /// Upper bound on active STs around the typical PR under PTA.
    StAroundPrPtaUpper,
    /// Active PRs around an active ST under PRA.
    PrAroundStPra,
    /// Active PTs around an active ST under PTA.
    PtAroundStPta,
    /// Upper bound on active PTs around an active ST under PRA.
    PtAroundStPraUpper,
    /// Upper bound on active PTs around the typical SR under PRA.
    PtAroundSrPraUpper,
    /// Upper bound on active PTs around the typical SR under PTA.
    PtAroundSrPtaUpper,
}

impl DensityProfileKind {
    pub const ALL: [DensityProfileKind; 8] = [
        DensityProfileKind::StAroundPrPra,
        DensityProfileKind::StAroundPtPta,
        DensityProfileKind::StAroundPrPtaUpper,
        DensityProfileKind::PrAroundStPra,
        DensityProfileKind::PtAroundStPta,
        DensityProfileKind::PtAroundStPraUpper,
        DensityProfileKind::PtAroundSrPraUpper,
        DensityProfileKind::PtAroundSrPtaUpper,
    ];

    /// Protocol whose threshold the profile reads.
    pub fn protocol(self) -> ProtocolKind {
        use DensityProfileKind::*;
        match self {
            StAroundPrPra | PrAroundStPra | PtAroundStPraUpper | PtAroundSrPraUpper => ProtocolKind::Pra,
            _ => ProtocolKind::Pta,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 2.0) {
        return Err(invalid("alpha", format!("path-loss exponent must exceed 2, got {alpha}")));
    }
    Ok(())
}

fn check_non_negative(name: &'static str, v: f64) -> Result<()> {
    if v.is_nan() || v < 0.0 {
        return Err(invalid(name, format!("must be >= 0, got {v}")));
    }
    Ok(())
}

/// `2 pi^2 / (alpha sin(2 pi / alpha))`, i.e. `2 pi` times `∫ u / (1 + u^alpha) du`.
pub fn interference_constant(alpha: f64) -> f64 {
    2.0 * PI * PI / (alpha * (2.0 * PI / alpha).sin())
}

/// `-ln Q` for a max-power threshold rule.
fn opportunity_exponent(mu_p: f64, power_p: f64, threshold: f64, alpha: f64) -> f64 {
    if mu_p == 0.0 || power_p == 0.0 || threshold == f64::INFINITY {
        return 0.0;
    }
    if threshold == 0.0 {
        return f64::INFINITY;
    }
    2.0 * PI * mu_p * gamma(2.0 / alpha) * (power_p / threshold).powf(2.0 / alpha) / alpha
}

/// `ln beta`.
fn beta_exponent(mu_p: f64, power_p: f64, threshold: f64, alpha: f64) -> f64 {
    if mu_p == 0.0 || power_p == 0.0 || threshold == f64::INFINITY {
        return 0.0;
    }
    if threshold == 0.0 {
        return f64::INFINITY;
    }
    PI * mu_p * gamma((2.0 + alpha) / alpha) * (power_p / (2.0 * threshold)).powf(2.0 / alpha)
}

/// Probability that an arbitrary location sees every active primary's
/// beacon (or pilot) at or below `threshold`. A zero threshold gives the
/// limit 0, an infinite one gives 1.
pub fn spatial_opportunity(mu_p: f64, power_p: f64, threshold: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_non_negative("mu_p", mu_p)?;
    check_non_negative("power_p", power_p)?;
    check_non_negative("threshold", threshold)?;
    Ok((-opportunity_exponent(mu_p, power_p, threshold, alpha)).exp())
}

/// Threshold giving opportunity `q`; the inverse of [`spatial_opportunity`].
pub fn threshold_for_opportunity(q: f64, mu_p: f64, power_p: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(q > 0.0 && q <= 1.0) {
        return Err(invalid("q_target", format!("must lie in (0, 1], got {q}")));
    }
    check_non_negative("mu_p", mu_p)?;
    if q == 1.0 || mu_p == 0.0 {
        return Ok(f64::INFINITY);
    }
    let c = 2.0 * PI * mu_p * gamma(2.0 / alpha) / (alpha * -q.ln());
    Ok(power_p * c.powf(alpha / 2.0))
}

/// Density of active secondary transmitters.
pub fn active_st_density(lambda_0: f64, q: f64) -> Result<f64> {
    check_non_negative("lambda_0", lambda_0)?;
    if !(0.0..=1.0).contains(&q) {
        return Err(invalid("q", format!("must lie in [0, 1], got {q}")));
    }
    Ok(lambda_0 * q)
}

/// Opportunity of an exclusion-disc rule with radius `radius`.
pub fn exclusion_opportunity(mu_p: f64, radius: f64) -> Result<f64> {
    check_non_negative("mu_p", mu_p)?;
    check_non_negative("d_excl", radius)?;
    if mu_p == 0.0 {
        return Ok(1.0);
    }
    Ok((-mu_p * PI * radius * radius).exp())
}

/// Exclusion radius giving opportunity `q`.
pub fn exclusion_radius_for_opportunity(q: f64, mu_p: f64) -> Result<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(invalid("q_target", format!("must lie in (0, 1], got {q}")));
    }
    if mu_p <= 0.0 {
        return Err(invalid("mu_p", "must be positive to invert the exclusion opportunity"));
    }
    Ok((-q.ln() / (PI * mu_p)).sqrt())
}

/// Opportunity of any protocol under `params`.
pub fn opportunity(params: &SystemParams, kind: ProtocolKind) -> Result<f64> {
    let mu_p = params.mu_p();
    match kind {
        ProtocolKind::Pra => spatial_opportunity(mu_p, params.power_p, params.require_n_ra()?, params.alpha),
        ProtocolKind::Pta => spatial_opportunity(mu_p, params.power_p, params.require_n_ta()?, params.alpha),
        ProtocolKind::Err => exclusion_opportunity(mu_p, params.require_d_excl("ERR")?),
        ProtocolKind::Ert => exclusion_opportunity(mu_p, params.require_d_excl("ERT")?),
        ProtocolKind::AllActive => Ok(1.0),
        ProtocolKind::NoneActive => Ok(0.0),
    }
}

/// Sets the parameter controlling `kind`'s opportunity so that it equals `q`.
/// ALL_ACTIVE and NONE_ACTIVE have no such parameter.
pub fn set_opportunity(params: &mut SystemParams, kind: ProtocolKind, q: f64) -> Result<()> {
    match kind {
        ProtocolKind::Pra => {
            params.n_ra = Some(threshold_for_opportunity(q, params.mu_p(), params.power_p, params.alpha)?)
        }
        ProtocolKind::Pta => {
            params.n_ta = Some(threshold_for_opportunity(q, params.mu_p(), params.power_p, params.alpha)?)
        }
        ProtocolKind::Err | ProtocolKind::Ert => {
            params.d_excl = Some(exclusion_radius_for_opportunity(q, params.mu_p())?)
        }
        ProtocolKind::AllActive | ProtocolKind::NoneActive => {
            return Err(invalid("q_target", format!("{kind} has no opportunity parameter")))
        }
    }
    Ok(())
}

/// Largest fading gain below which a source at distance `r` stays unheard:
/// `N r^alpha / P`.
pub(crate) fn hearing_margin(threshold: f64, power_p: f64, r: f64, alpha: f64) -> f64 {
    if r == 0.0 || threshold == 0.0 {
        return 0.0;
    }
    if power_p == 0.0 {
        return f64::INFINITY;
    }
    threshold * r.powf(alpha) / power_p
}

/// `1 - exp(-N r^alpha / P)`: probability a source at `r` stays below the threshold.
pub(crate) fn unheard_probability(threshold: f64, power_p: f64, r: f64, alpha: f64) -> f64 {
    -(-hearing_margin(threshold, power_p, r, alpha)).exp_m1()
}

/// Density at distance `r` of the profile `kind`.
pub fn conditional_density(kind: DensityProfileKind, r: f64, params: &SystemParams) -> Result<f64> {
    use DensityProfileKind::*;
    check_non_negative("r", r)?;
    params.validate()?;
    let threshold = match kind.protocol() {
        ProtocolKind::Pra => params.require_n_ra()?,
        _ => params.require_n_ta()?,
    };
    let mu_p = params.mu_p();
    let (level, shift) = match kind {
        StAroundPrPra | StAroundPtPta => (params.lambda_0 * opportunity(params, kind.protocol())?, 0.0),
        StAroundPrPtaUpper => (params.lambda_0 * opportunity(params, kind.protocol())?, params.d_p),
        PrAroundStPra | PtAroundStPta => (mu_p, 0.0),
        PtAroundStPraUpper => (mu_p, params.d_p),
        PtAroundSrPraUpper => (mu_p, params.d_p + params.d_s),
        PtAroundSrPtaUpper => (mu_p, params.d_s),
    };
    Ok(level * unheard_probability(threshold, params.power_p, r + shift, params.alpha))
}

/// Average of the profile `kind` over the annulus `inner < r <= outer`.
pub fn annulus_density(kind: DensityProfileKind, inner: f64, outer: f64, params: &SystemParams) -> Result<f64> {
    check_non_negative("inner", inner)?;
    if !(outer > inner && outer.is_finite()) {
        return Err(invalid("outer", format!("must be finite and exceed {inner}, got {outer}")));
    }
    conditional_density(kind, inner, params)?;
    let mass = integrate_interval(
        |r| conditional_density(kind, r, params).map_or(f64::NAN, |d| d * r),
        inner,
        outer,
        1e-10,
    )?;
    Ok(2.0 * mass / (outer * outer - inner * inner))
}

/// `beta = exp{pi mu_p Γ((2 + alpha)/alpha) (P_p / 2N)^(2/alpha)}`, at least 1;
/// infinite when `threshold` is 0 and primaries exist.
pub fn beta_factor(mu_p: f64, power_p: f64, threshold: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_non_negative("mu_p", mu_p)?;
    check_non_negative("power_p", power_p)?;
    check_non_negative("threshold", threshold)?;
    let beta = beta_exponent(mu_p, power_p, threshold, alpha).exp();
    debug_assert!(beta >= 1.0);
    Ok(beta)
}

/// `lambda_0 Q beta`, finite in the `N -> 0` limit where it vanishes.
pub(crate) fn boosted_st_density(lambda_0: f64, mu_p: f64, power_p: f64, threshold: f64, alpha: f64) -> f64 {
    if threshold == 0.0 && mu_p > 0.0 && power_p > 0.0 {
        return 0.0;
    }
    let log = beta_exponent(mu_p, power_p, threshold, alpha) - opportunity_exponent(mu_p, power_p, threshold, alpha);
    lambda_0 * log.exp()
}

/// `C_p = mu_p tau_p`.
pub fn spatial_throughput_primary(mu_p: f64, coverage: f64) -> f64 {
    mu_p * coverage
}

/// `C_s = lambda_0 Q tau_s`.
pub fn spatial_throughput_secondary(lambda_0: f64, q: f64, coverage: f64) -> f64 {
    lambda_0 * q * coverage
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn opportunity_anchor_values() {
        assert_eq!(spatial_opportunity(0.0, 5.0, 5.0, 4.0).unwrap(), 1.0);
        // exp(-2 pi 0.01 sqrt(pi) r / 4) for P/N = r^2
        assert!((spatial_opportunity(0.01, 5.0, 5.0, 4.0).unwrap() - 0.972_542_366_4).abs() < 1e-9);
        assert!((spatial_opportunity(0.01, 10.0, 1.0, 4.0).unwrap() - 0.915_721_503_4).abs() < 1e-9);
        assert_eq!(spatial_opportunity(0.01, 5.0, 0.0, 4.0).unwrap(), 0.0);
        assert_eq!(spatial_opportunity(0.01, 5.0, f64::INFINITY, 4.0).unwrap(), 1.0);
        assert!(spatial_opportunity(0.01, 5.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn opportunity_inversion() {
        for &q in &[0.1, 0.5, 0.9, 0.99] {
            let n = threshold_for_opportunity(q, 0.01, 5.0, 4.0).unwrap();
            assert_relative_eq!(spatial_opportunity(0.01, 5.0, n, 4.0).unwrap(), q, max_relative = 1e-12);
            let d = exclusion_radius_for_opportunity(q, 0.01).unwrap();
            assert_relative_eq!(exclusion_opportunity(0.01, d).unwrap(), q, max_relative = 1e-12);
        }
        assert_eq!(threshold_for_opportunity(1.0, 0.01, 5.0, 4.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn active_density_examples() {
        assert_eq!(active_st_density(0.1, 1.0).unwrap(), 0.1);
        assert_eq!(active_st_density(0.1, 0.0).unwrap(), 0.0);
        assert!((active_st_density(0.1, 0.972543).unwrap() - 0.0972543).abs() < 1e-15);
        assert!(active_st_density(0.1, 1.2).is_err());
    }

    #[test]
    fn exclusion_examples() {
        assert_eq!(exclusion_opportunity(0.01, 0.0).unwrap(), 1.0);
        assert!((exclusion_opportunity(0.01, 3.0).unwrap() - 0.753_713_212_0).abs() < 1e-9);
    }

    #[test]
    fn beta_examples() {
        assert_eq!(beta_factor(0.0, 5.0, 5.0, 4.0).unwrap(), 1.0);
        assert!((beta_factor(0.01, 5.0, 5.0, 4.0).unwrap() - 1.019_882_079_7).abs() < 1e-9);
        assert_eq!(beta_factor(0.01, 5.0, 0.0, 4.0).unwrap(), f64::INFINITY);
        let mut last = f64::INFINITY;
        for k in 1..50 {
            let b = beta_factor(0.01, 5.0, 0.1 * k as f64, 4.0).unwrap();
            assert!(b < last && b >= 1.0);
            last = b;
        }
    }

    #[test]
    fn boosted_density_limits() {
        assert_eq!(boosted_st_density(0.1, 0.01, 5.0, 0.0, 4.0), 0.0);
        assert_eq!(boosted_st_density(0.1, 0.01, 5.0, f64::INFINITY, 4.0), 0.1);
        let q = spatial_opportunity(0.01, 5.0, 2.0, 4.0).unwrap();
        let b = beta_factor(0.01, 5.0, 2.0, 4.0).unwrap();
        assert_relative_eq!(boosted_st_density(0.1, 0.01, 5.0, 2.0, 4.0), 0.1 * q * b, max_relative = 1e-14);
    }

    #[test]
    fn half_density_radius() {
        let mut p = SystemParams::defaults();
        p.lambda_0 = 0.1;
        let r = std::f64::consts::LN_2.powf(0.25);
        assert!((r - 0.912444).abs() < 5e-7);
        let lambda_s = 0.1 * opportunity(&p, ProtocolKind::Pra).unwrap();
        let v = conditional_density(DensityProfileKind::StAroundPrPra, r, &p).unwrap();
        assert_relative_eq!(v, 0.5 * lambda_s, max_relative = 1e-12);
    }

    #[test]
    fn profiles_vanish_at_origin_and_saturate() {
        let p = SystemParams::defaults();
        let lambda_s = p.lambda_0 * opportunity(&p, ProtocolKind::Pra).unwrap();
        for kind in DensityProfileKind::ALL {
            let far = conditional_density(kind, 1e3, &p).unwrap();
            let level = match kind {
                DensityProfileKind::StAroundPrPra
                | DensityProfileKind::StAroundPtPta
                | DensityProfileKind::StAroundPrPtaUpper => lambda_s,
                _ => p.mu_p(),
            };
            assert_relative_eq!(far, level, max_relative = 1e-12);
        }
        for kind in [
            DensityProfileKind::StAroundPrPra,
            DensityProfileKind::StAroundPtPta,
            DensityProfileKind::PrAroundStPra,
            DensityProfileKind::PtAroundStPta,
        ] {
            assert_eq!(conditional_density(kind, 0.0, &p).unwrap(), 0.0);
        }
        assert!(conditional_density(DensityProfileKind::StAroundPrPtaUpper, 0.0, &p).unwrap() > 0.0);
    }

    #[test]
    fn profile_tags_serialize() {
        let s = serde_json::to_string(&DensityProfileKind::PtAroundSrPraUpper).unwrap();
        assert_eq!(s, "\"PT_AROUND_SR_PRA_UPPER\"");
        let k: DensityProfileKind = serde_json::from_str("\"ST_AROUND_PR_PRA\"").unwrap();
        assert_eq!(k, DensityProfileKind::StAroundPrPra);
    }

    #[test]
    fn throughput_examples() {
        assert_eq!(spatial_throughput_primary(0.01, 0.0), 0.0);
        assert!((spatial_throughput_primary(0.01, 0.918079) - 0.00918079).abs() < 1e-15);
        let b = CoverageBounds::new(0.4, 0.6);
        let (l, u) = b.map(|t| spatial_throughput_secondary(0.1, 0.9, t));
        assert!((l - 0.09 * 0.4).abs() < 1e-15 && (u - 0.09 * 0.6).abs() < 1e-15);
    }

    #[test]
    fn interference_constant_at_four() {
        assert_relative_eq!(interference_constant(4.0), PI * PI / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn annulus_density_of_first_bin() {
        // ∫_0^b (1 - e^{-r^4}) 2r dr / b^2 with N = P_p
        let p = SystemParams::defaults();
        let level = p.lambda_0 * opportunity(&p, ProtocolKind::Pra).unwrap();
        let b = 0.5f64;
        let m = 20_000;
        let h = b / m as f64;
        let avg: f64 = (0..m)
            .map(|j| {
                let r = h * (j as f64 + 0.5);
                -(-r.powi(4)).exp_m1() * 2.0 * r * h
            })
            .sum::<f64>()
            / (b * b);
        let got = annulus_density(DensityProfileKind::StAroundPrPra, 0.0, b, &p).unwrap();
        assert_relative_eq!(got, level * avg, max_relative = 1e-7);
        assert!(annulus_density(DensityProfileKind::StAroundPrPra, 1.0, 1.0, &p).is_err());
    }
}
