//! Model parameters shared by the analytic and simulation paths.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::error::{invalid, Error, Result};

/// Scalar parameters of the overlaid networks.
///
/// The active primary density is `mu_0 * p_access`. In serialized form it may
/// be given as `mu_p` alone, as `mu_0` and `p_access`, or as all three when
/// they agree to 1e-12 relative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct SystemParams {
    /// Density of deployed primary transmitters.
    pub mu_0: f64,
    /// Aloha access probability of the primary transmitters.
    pub p_access: f64,
    /// Density of candidate secondary transmitters.
    pub lambda_0: f64,
    pub power_p: f64,
    pub power_s: f64,
    pub d_p: f64,
    pub d_s: f64,
    pub theta_p: f64,
    pub theta_s: f64,
    pub alpha: f64,
    pub n_ra: Option<f64>,
    pub n_ta: Option<f64>,
    /// Exclusion radius for ERR/ERT.
    pub d_excl: Option<f64>,
}

impl SystemParams {
    /// Numerical-results defaults: `mu_p = 0.01`, `P_p = 5`, `P_s = 2`,
    /// `d_p = d_s = 1`, `theta_p = theta_s = 3`, `alpha = 4`, with
    /// `lambda_0 = 0.01` and thresholds `N = P_p`.
    pub fn defaults() -> Self {
        SystemParams {
            mu_0: 0.01,
            p_access: 1.0,
            lambda_0: 0.01,
            power_p: 5.0,
            power_s: 2.0,
            d_p: 1.0,
            d_s: 1.0,
            theta_p: 3.0,
            theta_s: 3.0,
            alpha: 4.0,
            n_ra: Some(5.0),
            n_ta: Some(5.0),
            d_excl: Some(3.0),
        }
    }

    /// Active primary density `mu_0 * p_access`.
    pub fn mu_p(&self) -> f64 {
        self.mu_0 * self.p_access
    }

    /// Sets the active primary density, keeping the access probability.
    pub fn set_mu_p(&mut self, mu_p: f64) {
        if self.p_access > 0.0 {
            self.mu_0 = mu_p / self.p_access;
        } else {
            self.mu_0 = mu_p;
            self.p_access = 1.0;
        }
    }

    pub fn channel(&self) -> Result<ChannelParams> {
        ChannelParams::new(self.alpha)
    }

    pub fn validate(&self) -> Result<()> {
        fn non_negative(name: &'static str, v: f64) -> Result<()> {
            if v.is_nan() || v < 0.0 {
                return Err(invalid(name, format!("must be >= 0, got {v}")));
            }
            Ok(())
        }
        for (name, v) in [
            ("mu_0", self.mu_0),
            ("lambda_0", self.lambda_0),
            ("power_p", self.power_p),
            ("power_s", self.power_s),
            ("d_p", self.d_p),
            ("d_s", self.d_s),
            ("theta_p", self.theta_p),
            ("theta_s", self.theta_s),
        ] {
            non_negative(name, v)?;
            if v.is_infinite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        if !(0.0..=1.0).contains(&self.p_access) {
            return Err(invalid("p_access", format!("must lie in [0, 1], got {}", self.p_access)));
        }
        for (name, v) in [("n_ra", self.n_ra), ("n_ta", self.n_ta), ("d_excl", self.d_excl)] {
            if let Some(v) = v {
                non_negative(name, v)?;
            }
        }
        self.channel()?;
        Ok(())
    }

    pub fn require_n_ra(&self) -> Result<f64> {
        self.n_ra.ok_or(Error::MissingThreshold {
            protocol: "PRA",
            name: "n_ra",
        })
    }

    pub fn require_n_ta(&self) -> Result<f64> {
        self.n_ta.ok_or(Error::MissingThreshold {
            protocol: "PTA",
            name: "n_ta",
        })
    }

    pub fn require_d_excl(&self, protocol: &'static str) -> Result<f64> {
        self.d_excl.ok_or(Error::MissingThreshold {
            protocol,
            name: "d_excl",
        })
    }

    /// Sets a field by its serialized name; used by parameter sweeps.
    pub fn set_field(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "mu_0" => self.mu_0 = value,
            "p_access" => self.p_access = value,
            "mu_p" => self.set_mu_p(value),
            "lambda_0" => self.lambda_0 = value,
            "power_p" => self.power_p = value,
            "power_s" => self.power_s = value,
            "d_p" => self.d_p = value,
            "d_s" => self.d_s = value,
            "theta_p" => self.theta_p = value,
            "theta_s" => self.theta_s = value,
            "alpha" => self.alpha = value,
            "n_ra" => self.n_ra = Some(value),
            "n_ta" => self.n_ta = Some(value),
            "d_excl" => self.d_excl = Some(value),
            _ => return Err(invalid("sweep", format!("unknown parameter `{name}`"))),
        }
        Ok(())
    }

    pub const FIELD_NAMES: [&'static str; 14] = [
        "mu_0", "p_access", "mu_p", "lambda_0", "power_p", "power_s", "d_p", "d_s", "theta_p",
        "theta_s", "alpha", "n_ra", "n_ta", "d_excl",
    ];
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::defaults()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu_0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p_access: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu_p: Option<f64>,
    lambda_0: f64,
    power_p: f64,
    power_s: f64,
    d_p: f64,
    d_s: f64,
    theta_p: f64,
    theta_s: f64,
    alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_ra: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_ta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d_excl: Option<f64>,
}

impl TryFrom<RawParams> for SystemParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        let (mu_0, p_access) = match (raw.mu_0, raw.p_access, raw.mu_p) {
            (Some(m0), p, mu_p) => {
                let p = p.unwrap_or(1.0);
                if let Some(mu_p) = mu_p {
                    let implied = m0 * p;
                    if (implied - mu_p).abs() > 1e-12 * mu_p.abs().max(implied.abs()) {
                        return Err(invalid(
                            "mu_p",
                            format!("mu_0 * p_access = {implied} disagrees with mu_p = {mu_p}"),
                        ));
                    }
                }
                (m0, p)
            }
            (None, Some(p), Some(mu_p)) if p > 0.0 => (mu_p / p, p),
            (None, None, Some(mu_p)) => (mu_p, 1.0),
            _ => return Err(invalid("mu_p", "give mu_p, or mu_0 with p_access")),
        };
        let params = SystemParams {
            mu_0,
            p_access,
            lambda_0: raw.lambda_0,
            power_p: raw.power_p,
            power_s: raw.power_s,
            d_p: raw.d_p,
            d_s: raw.d_s,
            theta_p: raw.theta_p,
            theta_s: raw.theta_s,
            alpha: raw.alpha,
            n_ra: raw.n_ra,
            n_ta: raw.n_ta,
            d_excl: raw.d_excl,
        };
        params.validate()?;
        Ok(params)
    }
}

impl From<SystemParams> for RawParams {
    fn from(p: SystemParams) -> Self {
        RawParams {
            mu_0: Some(p.mu_0),
            p_access: Some(p.p_access),
            mu_p: None,
            lambda_0: p.lambda_0,
            power_p: p.power_p,
            power_s: p.power_s,
            d_p: p.d_p,
            d_s: p.d_s,
            theta_p: p.theta_p,
            theta_s: p.theta_s,
            alpha: p.alpha,
            n_ra: p.n_ra,
            n_ta: p.n_ta,
            d_excl: p.d_excl,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let p = SystemParams::defaults();
        p.validate().unwrap();
        assert_eq!(p.mu_p(), 0.01);
    }

    #[test]
    fn alpha_at_most_two_rejected() {
        let mut p = SystemParams::defaults();
        p.alpha = 2.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn missing_thresholds_reported() {
        let mut p = SystemParams::defaults();
        p.n_ra = None;
        assert!(matches!(p.require_n_ra(), Err(Error::MissingThreshold { .. })));
        assert!(p.require_n_ta().is_ok());
    }

    #[test]
    fn set_mu_p_keeps_access_probability() {
        let mut p = SystemParams::defaults();
        p.p_access = 0.5;
        p.set_mu_p(0.02);
        assert_eq!(p.mu_0, 0.04);
        assert_eq!(p.mu_p(), 0.02);
    }

    #[test]
    fn unknown_sweep_field_rejected() {
        let mut p = SystemParams::defaults();
        assert!(p.set_field("beta", 1.0).is_err());
        for name in SystemParams::FIELD_NAMES {
            p.clone().set_field(name, 0.5).unwrap();
        }
    }
}
