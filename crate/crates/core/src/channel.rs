//! Rayleigh power fading with power-law path loss.
//!
//! A link of length `d` carrying transmit power `P` delivers `P * h * d^-alpha`,
//! with `h ~ Exp(1)`. Thermal noise is ignored, so link quality is the
//! signal-to-interference ratio alone.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{combine, unit_from_bits};

/// Upper bound on every gain [`fading_from_bits`] can produce (`-ln(2^-53)`
/// is 36.73680...).
///
/// A sensing comparison `h <= t` with `t >= MAX_FADING` is decided without
/// drawing `h`, which is what keeps far-away sources free in simulation.
pub const MAX_FADING: f64 = 36.737;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    alpha: f64,
}

impl ChannelParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 2.0) {
            return Err(invalid("alpha", format!("path-loss exponent must exceed 2, got {alpha}")));
        }
        Ok(ChannelParams { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `d^-alpha` evaluated from the squared distance.
    #[inline]
    pub fn path_gain_sq(&self, d_sq: f64) -> f64 {
        if self.alpha == 4.0 {
            1.0 / (d_sq * d_sq)
        } else {
            d_sq.powf(-0.5 * self.alpha)
        }
    }

    /// `d^alpha` evaluated from the squared distance.
    #[inline]
    pub fn path_loss_sq(&self, d_sq: f64) -> f64 {
        if self.alpha == 4.0 {
            d_sq * d_sq
        } else {
            d_sq.powf(0.5 * self.alpha)
        }
    }
}

/// Power gain of one fading channel.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct FadingDraw(pub f64);

impl FadingDraw {
    pub fn gain(self) -> f64 {
        self.0
    }
}

/// Inverse-CDF map from 64 random bits to an `Exp(1)` gain.
#[inline]
pub fn fading_from_bits(bits: u64) -> f64 {
    -(1.0 - unit_from_bits(bits)).ln()
}

pub fn sample_fading<R: RngCore + ?Sized>(rng: &mut R) -> FadingDraw {
    FadingDraw(fading_from_bits(rng.next_u64()))
}

/// `P_tx * h * d^-alpha`.
pub fn received_power(p_tx: f64, h: FadingDraw, d: f64, params: &ChannelParams) -> Result<f64> {
    if d == 0.0 {
        return Err(Error::ZeroDistance);
    }
    if !(d > 0.0) {
        return Err(invalid("d", format!("distance must be positive, got {d}")));
    }
    Ok(p_tx * h.0 * d.powf(-params.alpha))
}

/// Signal-to-interference ratio; `+inf` when there is no interference.
pub fn sir(signal: f64, interference: f64) -> Result<f64> {
    if !(signal >= 0.0) || !(interference >= 0.0) {
        return Err(invalid("power", "signal and interference must be non-negative"));
    }
    if interference == 0.0 {
        if signal == 0.0 {
            return Err(Error::UndefinedSir);
        }
        return Ok(f64::INFINITY);
    }
    Ok(signal / interference)
}

/// Role of a node in a realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    PrimaryTx = 1,
    PrimaryRx = 2,
    SecondaryTx = 3,
    SecondaryRx = 4,
}

/// A node identity: role plus index into that role's pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(u64);

impl NodeId {
    pub fn new(role: Role, index: usize) -> Self {
        NodeId(((role as u64) << 56) | index as u64)
    }

    pub fn pt(i: usize) -> Self {
        Self::new(Role::PrimaryTx, i)
    }
    pub fn pr(i: usize) -> Self {
        Self::new(Role::PrimaryRx, i)
    }
    pub fn st(i: usize) -> Self {
        Self::new(Role::SecondaryTx, i)
    }
    pub fn sr(i: usize) -> Self {
        Self::new(Role::SecondaryRx, i)
    }
}

/// All fading gains of one trial.
///
/// There is one independent draw per physical channel, i.e. per unordered
/// node pair. A primary receiver's beacon heard by a secondary transmitter
/// and that transmitter's interference at the same receiver therefore share
/// one gain (reciprocity), while a pilot from a primary transmitter and the
/// interference at its receiver are different channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelBank {
    key: u64,
}

impl ChannelBank {
    pub fn new(key: u64) -> Self {
        ChannelBank { key }
    }

    #[inline]
    pub fn gain(&self, a: NodeId, b: NodeId) -> FadingDraw {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        FadingDraw(fading_from_bits(combine(self.key ^ lo.0, hi.0)))
    }
}
