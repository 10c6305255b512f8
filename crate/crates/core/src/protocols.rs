//! Medium access: Aloha for the primary tier, spectrum-hole detection for
//! the secondary tier, and assembly of one joint network realization.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{received_power, ChannelBank, ChannelParams, FadingDraw, NodeId, Role, MAX_FADING};
use crate::error::{invalid, Error, Result};
use crate::rng::combine;
use crate::geometry::{distance, distance_sq, place_partner, sample_hppp, Point, PointPattern, SimWindow, SpatialIndex};
use crate::params::SystemParams;

/// Secondary access policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProtocolKind {
    /// Threshold on the strongest beacon from active primary receivers.
    #[serde(rename = "PRA")]
    Pra,
    /// Threshold on the strongest pilot from active primary transmitters.
    #[serde(rename = "PTA")]
    Pta,
    /// Exclusion discs around active primary receivers.
    #[serde(rename = "ERR")]
    Err,
    /// Exclusion discs around active primary transmitters.
    #[serde(rename = "ERT")]
    Ert,
    #[serde(rename = "ALL_ACTIVE")]
    AllActive,
    #[serde(rename = "NONE_ACTIVE")]
    NoneActive,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 6] = [
        ProtocolKind::Pra,
        ProtocolKind::Pta,
        ProtocolKind::Err,
        ProtocolKind::Ert,
        ProtocolKind::AllActive,
        ProtocolKind::NoneActive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolKind::Pra => "PRA",
            ProtocolKind::Pta => "PTA",
            ProtocolKind::Err => "ERR",
            ProtocolKind::Ert => "ERT",
            ProtocolKind::AllActive => "ALL_ACTIVE",
            ProtocolKind::NoneActive => "NONE_ACTIVE",
        }
    }

    /// Role of the primary nodes this protocol senses, if any.
    pub fn sensed_role(self) -> Option<Role> {
        match self {
            ProtocolKind::Pra | ProtocolKind::Err => Some(Role::PrimaryRx),
            ProtocolKind::Pta | ProtocolKind::Ert => Some(Role::PrimaryTx),
            ProtocolKind::AllActive | ProtocolKind::NoneActive => None,
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProtocolKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid("protocol", format!("unknown protocol `{s}`")))
    }
}

/// A protocol together with the parameter it reads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AccessRule {
    Pra { threshold: f64 },
    Pta { threshold: f64 },
    Err { radius: f64 },
    Ert { radius: f64 },
    AllActive,
    NoneActive,
}

impl AccessRule {
    pub fn resolve(kind: ProtocolKind, params: &SystemParams) -> Result<Self> {
        Ok(match kind {
            ProtocolKind::Pra => AccessRule::Pra {
                threshold: params.require_n_ra()?,
            },
            ProtocolKind::Pta => AccessRule::Pta {
                threshold: params.require_n_ta()?,
            },
            ProtocolKind::Err => AccessRule::Err {
                radius: params.require_d_excl("ERR")?,
            },
            ProtocolKind::Ert => AccessRule::Ert {
                radius: params.require_d_excl("ERT")?,
            },
            ProtocolKind::AllActive => AccessRule::AllActive,
            ProtocolKind::NoneActive => AccessRule::NoneActive,
        })
    }

    pub fn kind(&self) -> ProtocolKind {
        match self {
            AccessRule::Pra { .. } => ProtocolKind::Pra,
            AccessRule::Pta { .. } => ProtocolKind::Pta,
            AccessRule::Err { .. } => ProtocolKind::Err,
            AccessRule::Ert { .. } => ProtocolKind::Ert,
            AccessRule::AllActive => ProtocolKind::AllActive,
            AccessRule::NoneActive => ProtocolKind::NoneActive,
        }
    }
}

/// Keeps each point independently with probability `p_access`.
pub fn aloha_thin<R: Rng + ?Sized>(pattern: &PointPattern, p_access: f64, rng: &mut R) -> Result<PointPattern> {
    if !(0.0..=1.0).contains(&p_access) {
        return Err(invalid("p_access", format!("must lie in [0, 1], got {p_access}")));
    }
    let points = if p_access == 1.0 {
        pattern.points.clone()
    } else if p_access == 0.0 {
        Vec::new()
    } else {
        pattern
            .points
            .iter()
            .copied()
            .filter(|_| rng.random::<f64>() < p_access)
            .collect()
    };
    Ok(PointPattern {
        points,
        window: pattern.window,
        density: pattern.density * p_access,
    })
}

/// Strongest power received at `st` from `sources`, each transmitting `p_tx`
/// over its own fading draw. Zero when there are no sources.
pub fn max_sensed_power(
    st: Point,
    sources: &[Point],
    fadings: &[FadingDraw],
    p_tx: f64,
    channel: &ChannelParams,
) -> Result<f64> {
    if sources.len() != fadings.len() {
        return Err(Error::MisalignedFadings {
            sources: sources.len(),
            fadings: fadings.len(),
        });
    }
    sources
        .iter()
        .zip(fadings)
        .try_fold(0.0f64, |m, (&s, &h)| Ok(m.max(received_power(p_tx, h, distance(st, s), channel)?)))
}

/// Distance beyond which a primary source cannot block a secondary
/// transmitter: where `N d^alpha / P` exceeds the largest possible fading
/// gain for the threshold rules, the radius for the exclusion rules.
pub fn sensing_reach(rule: AccessRule, power_p: f64, channel: &ChannelParams) -> f64 {
    match rule {
        AccessRule::Pra { threshold } | AccessRule::Pta { threshold } => {
            if power_p == 0.0 || threshold == f64::INFINITY {
                0.0
            } else if threshold == 0.0 {
                f64::INFINITY
            } else {
                (MAX_FADING * power_p / threshold).powf(1.0 / channel.alpha())
            }
        }
        AccessRule::Err { radius } | AccessRule::Ert { radius } => radius,
        AccessRule::AllActive | AccessRule::NoneActive => 0.0,
    }
}

/// Spectrum-hole detector for one set of active primaries.
///
/// Sources beyond [`sensing_reach`] are never examined, which changes no
/// decision.
#[derive(Debug, Clone)]
pub struct Sensing<'a> {
    rule: AccessRule,
    sources: &'a [Point],
    role: Role,
    index: SpatialIndex,
    reach: f64,
    power_p: f64,
    channel: ChannelParams,
    bank: ChannelBank,
    include: Option<&'a [bool]>,
}

impl<'a> Sensing<'a> {
    /// `pts`/`prs` are the active primary transmitters and receivers.
    pub fn new(
        rule: AccessRule,
        pts: &'a [Point],
        prs: &'a [Point],
        power_p: f64,
        channel: ChannelParams,
        bank: ChannelBank,
    ) -> Self {
        let (sources, role): (&[Point], Role) = match rule {
            AccessRule::Pra { .. } | AccessRule::Err { .. } => (prs, Role::PrimaryRx),
            AccessRule::Pta { .. } | AccessRule::Ert { .. } => (pts, Role::PrimaryTx),
            AccessRule::AllActive | AccessRule::NoneActive => (&[], Role::PrimaryRx),
        };
        let reach = sensing_reach(rule, power_p, &channel);
        let index = SpatialIndex::new(sources, reach);
        Sensing {
            rule,
            sources,
            role,
            index,
            reach,
            power_p,
            channel,
            bank,
            include: None,
        }
    }

    /// Restricts sensing to primary pairs `i` with `include[i]`.
    pub fn with_include(mut self, include: &'a [bool]) -> Self {
        self.include = Some(include);
        self
    }

    pub fn rule(&self) -> AccessRule {
        self.rule
    }

    #[inline]
    fn counts(&self, i: usize) -> bool {
        self.include.is_none_or(|inc| inc[i])
    }

    /// Whether the secondary transmitter `st_id` at `st` may transmit.
    #[inline]
    pub fn allows(&self, st: Point, st_id: NodeId) -> bool {
        match self.rule {
            AccessRule::AllActive => true,
            AccessRule::NoneActive => false,
            AccessRule::Pra { threshold } | AccessRule::Pta { threshold } => {
                let reach_sq = self.reach * self.reach;
                self.index.for_each_candidate(st, self.reach, |i| {
                    let d_sq = distance_sq(st, self.sources[i]);
                    if d_sq >= reach_sq || !self.counts(i) {
                        return true;
                    }
                    let h = self.bank.gain(NodeId::new(self.role, i), st_id).gain();
                    self.power_p * h * self.channel.path_gain_sq(d_sq) <= threshold
                })
            }
            AccessRule::Err { radius } | AccessRule::Ert { radius } => {
                let r_sq = radius * radius;
                self.index.for_each_candidate(st, radius, |i| {
                    distance_sq(st, self.sources[i]) >= r_sq || !self.counts(i)
                })
            }
        }
    }
}

/// Palm conditioning applied when building a realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning {
    None,
    /// Typical primary receiver at the origin, its transmitter at `d_p`.
    TypicalPrimaryPair,
    /// Typical secondary receiver at the origin, its transmitter at `d_s`,
    /// accepted only when that transmitter is active.
    TypicalSecondaryPair,
}

/// One joint draw of both networks.
///
/// Under [`Conditioning::TypicalPrimaryPair`] the typical pair is index 0 of
/// `active_pts`/`active_prs`; under [`Conditioning::TypicalSecondaryPair`]
/// it is index 0 of `candidate_sts`/`paired_srs`.
#[derive(Debug, Clone)]
pub struct NetworkRealization {
    pub rule: AccessRule,
    pub conditioning: Conditioning,
    pub active_pts: PointPattern,
    pub active_prs: PointPattern,
    pub candidate_sts: PointPattern,
    pub paired_srs: PointPattern,
    pub st_active: Vec<bool>,
    pub channels: ChannelBank,
    /// Attempts discarded because the typical secondary transmitter was silent.
    pub rejected: u64,
}

impl NetworkRealization {
    /// Fading on the sensing channel between secondary transmitter `st` and
    /// primary node `primary` of the sensed role.
    pub fn sensing_fading(&self, st: usize, primary: usize) -> Option<FadingDraw> {
        let role = self.rule.kind().sensed_role()?;
        Some(self.channels.gain(NodeId::new(role, primary), NodeId::st(st)))
    }

    /// Fading on the data/interference channel between two nodes.
    pub fn data_fading(&self, tx: NodeId, rx: NodeId) -> FadingDraw {
        self.channels.gain(tx, rx)
    }

    pub fn active_sts(&self) -> impl Iterator<Item = usize> + '_ {
        self.st_active.iter().enumerate().filter(|(_, &a)| a).map(|(i, _)| i)
    }

    pub fn active_st_count(&self) -> usize {
        self.st_active.iter().filter(|&&a| a).count()
    }

    /// Re-evaluates activation of candidate `st` under another rule, reusing
    /// this realization's geometry and fadings.
    pub fn activation_under(&self, rule: AccessRule, st: usize, params: &SystemParams) -> Result<bool> {
        let sensing = Sensing::new(
            rule,
            &self.active_pts.points,
            &self.active_prs.points,
            params.power_p,
            params.channel()?,
            self.channels,
        );
        Ok(sensing.allows(self.candidate_sts.points[st], NodeId::st(st)))
    }
}

/// Activation decision for candidate `st` of `realization` under `kind`.
pub fn secondary_activation(
    realization: &NetworkRealization,
    st: usize,
    kind: ProtocolKind,
    params: &SystemParams,
) -> Result<bool> {
    let rule = AccessRule::resolve(kind, params)?;
    realization.activation_under(rule, st, params)
}

/// Default cap on conditioning attempts per realization.
pub const DEFAULT_REJECTION_CAP: u64 = 1_000_000;

/// Active primary transmitters and their receivers. With `typical`, index 0
/// is the typical receiver at the origin and its transmitter at `d_p`.
pub fn sample_primary_layer<R: Rng + ?Sized>(
    params: &SystemParams,
    window: SimWindow,
    typical: bool,
    rng: &mut R,
) -> Result<(PointPattern, PointPattern)> {
    let deployed = sample_hppp(params.mu_0, window, rng)?;
    let active = aloha_thin(&deployed, params.p_access, rng)?;
    let mut pts = Vec::with_capacity(active.len() + 1);
    let mut prs = Vec::with_capacity(active.len() + 1);
    if typical {
        pts.push(place_partner(Point::ORIGIN, params.d_p, rng));
        prs.push(Point::ORIGIN);
    }
    for &t in &active.points {
        pts.push(t);
        prs.push(place_partner(t, params.d_p, rng));
    }
    let mu_p = params.mu_p();
    Ok((
        PointPattern {
            points: pts,
            window: window.grown(params.d_p),
            density: mu_p,
        },
        PointPattern {
            points: prs,
            window: window.grown(params.d_p),
            density: mu_p,
        },
    ))
}

/// Candidate secondary transmitters and their receivers. With `typical_st`,
/// index 0 is that transmitter paired with a receiver at the origin.
pub fn sample_secondary_layer<R: Rng + ?Sized>(
    params: &SystemParams,
    window: SimWindow,
    typical_st: Option<Point>,
    rng: &mut R,
) -> Result<(PointPattern, PointPattern)> {
    let others = sample_hppp(params.lambda_0, window, rng)?;
    let mut sts = Vec::with_capacity(others.len() + 1);
    let mut srs = Vec::with_capacity(others.len() + 1);
    if let Some(st) = typical_st {
        sts.push(st);
        srs.push(Point::ORIGIN);
    }
    for &s in &others.points {
        sts.push(s);
        srs.push(place_partner(s, params.d_s, rng));
    }
    Ok((
        PointPattern {
            points: sts,
            window,
            density: params.lambda_0,
        },
        PointPattern {
            points: srs,
            window: window.grown(params.d_s),
            density: params.lambda_0,
        },
    ))
}

/// Draws one realization of both networks under `kind`.
///
/// Fading gains are keyed by `channel_key`; under secondary conditioning
/// each attempt gets its own key derived from it.
pub fn build_realization<R: Rng + ?Sized>(
    params: &SystemParams,
    window: SimWindow,
    kind: ProtocolKind,
    conditioning: Conditioning,
    rejection_cap: u64,
    channel_key: u64,
    rng: &mut R,
) -> Result<NetworkRealization> {
    params.validate()?;
    let rule = AccessRule::resolve(kind, params)?;
    let channel = params.channel()?;
    if conditioning == Conditioning::TypicalSecondaryPair && rule == AccessRule::NoneActive {
        // acceptance probability is exactly zero
        return Err(Error::RejectionCapExceeded { attempts: rejection_cap });
    }

    let mut rejected = 0u64;
    loop {
        let bank = ChannelBank::new(combine(channel_key, rejected));
        let (pts, prs) =
            sample_primary_layer(params, window, conditioning == Conditioning::TypicalPrimaryPair, rng)?;
        let sensing = Sensing::new(rule, &pts.points, &prs.points, params.power_p, channel, bank);

        let mut typical_st = None;
        if conditioning == Conditioning::TypicalSecondaryPair {
            let st = place_partner(Point::ORIGIN, params.d_s, rng);
            if !sensing.allows(st, NodeId::st(0)) {
                rejected += 1;
                if rejected >= rejection_cap {
                    return Err(Error::RejectionCapExceeded { attempts: rejected });
                }
                continue;
            }
            typical_st = Some(st);
        }
        let (sts, srs) = sample_secondary_layer(params, window, typical_st, rng)?;
        let st_active = sts
            .points
            .iter()
            .enumerate()
            .map(|(i, &s)| sensing.allows(s, NodeId::st(i)))
            .collect();
        drop(sensing);

        return Ok(NetworkRealization {
            rule,
            conditioning,
            active_pts: pts,
            active_prs: prs,
            candidate_sts: sts,
            paired_srs: srs,
            st_active,
            channels: bank,
            rejected,
        });
    }
}
