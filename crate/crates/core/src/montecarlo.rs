//! Palm-conditioned Monte-Carlo estimators.
//!
//! Each trial draws its own realization from a stream keyed by
//! `(seed, label, trial)`. Trials are reduced through integer counters, so
//! results do not depend on the number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::Tier;
use crate::channel::{ChannelBank, ChannelParams, NodeId};
use crate::error::{invalid, Error, Result};
use crate::geometry::{distance_sq, place_partner, Point, SimWindow};
use crate::params::SystemParams;
use crate::protocols::{
    build_realization, sample_primary_layer, sample_secondary_layer, sensing_reach, AccessRule, Conditioning,
    NetworkRealization, ProtocolKind, Sensing, DEFAULT_REJECTION_CAP,
};
use crate::rng::{combine, trial_channel_key, trial_rng, StreamLabel};

/// Run settings shared by all estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_trials: u64,
    pub seed: u64,
    pub window: SimWindow,
    /// Worker threads; 0 uses the global pool.
    pub threads: usize,
    /// Attempts allowed per conditioned trial.
    pub rejection_cap: u64,
}

impl McConfig {
    pub const DEFAULT_TRIALS: u64 = 100_000;

    pub fn new(n_trials: u64, seed: u64) -> Self {
        McConfig {
            n_trials,
            seed,
            window: SimWindow::default(),
            threads: 0,
            rejection_cap: DEFAULT_REJECTION_CAP,
        }
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }

    pub fn with_window(mut self, window: SimWindow) -> Self {
        self.window = window;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(invalid("n_trials", "must be at least 1"));
        }
        if self.rejection_cap == 0 {
            return Err(invalid("rejection_cap", "must be at least 1"));
        }
        Ok(())
    }
}

/// A simulated mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_trials: u64,
    pub n_rejected: u64,
    pub master_seed: u64,
}

impl Estimate {
    /// Bernoulli estimate from `successes` out of `trials`.
    pub fn from_counts(successes: u64, trials: u64, rejected: u64, seed: u64) -> Result<Self> {
        if trials == 0 {
            return Err(invalid("n_trials", "no accepted trials"));
        }
        let p = successes as f64 / trials as f64;
        Ok(Estimate {
            mean: p,
            stderr: (p * (1.0 - p) / trials as f64).sqrt(),
            n_trials: trials,
            n_rejected: rejected,
            master_seed: seed,
        })
    }

    pub fn scaled(self, c: f64) -> Self {
        Estimate {
            mean: self.mean * c,
            stderr: self.stderr * c.abs(),
            ..self
        }
    }

    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.stderr
    }
}

/// Empirical radial density around a typical node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub bin_edges: Vec<f64>,
    pub bin_density: Vec<f64>,
    pub bin_stderr: Vec<f64>,
    pub n_trials: u64,
    pub n_rejected: u64,
}

impl RadialProfile {
    pub fn bin_centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

/// Typical node a profile is measured around.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileCenter {
    TypicalPr,
    TypicalPt,
    TypicalSt,
    TypicalSr,
}

/// Points counted by a profile. The typical pair itself is never counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfilePopulation {
    ActiveSts,
    ActivePrs,
    ActivePts,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    trials: u64,
    successes: u64,
    rejected: u64,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            trials: self.trials + o.trials,
            successes: self.successes + o.successes,
            rejected: self.rejected + o.rejected,
        }
    }
}

/// Runs `trial` for every index and reduces with `merge`.
fn run_trials<A, F, M>(config: &McConfig, zero: A, trial: F, merge: M) -> Result<A>
where
    A: Clone + Send + Sync,
    F: Fn(u64, &mut A) -> Result<()> + Sync,
    M: Fn(A, A) -> A + Sync,
{
    config.validate()?;
    let n = config.n_trials;
    if config.threads == 1 {
        let mut acc = zero;
        for t in 0..n {
            trial(t, &mut acc)?;
        }
        return Ok(acc);
    }
    let body = || {
        (0..n)
            .into_par_iter()
            .try_fold(
                || zero.clone(),
                |mut acc, t| {
                    trial(t, &mut acc)?;
                    Ok::<A, Error>(acc)
                },
            )
            .try_reduce(|| zero.clone(), |a, b| Ok(merge(a, b)))
    };
    if config.threads == 0 {
        body()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| invalid("threads", e.to_string()))?
            .install(body)
    }
}

fn shrunk(window: SimWindow, radius: f64) -> Result<SimWindow> {
    if radius.is_finite() && radius < window.radius() {
        SimWindow::new(radius.max(1.0))
    } else {
        Ok(window)
    }
}

/// Extra distance between a sensed node and the transmitter it is paired with.
fn source_offset(rule: AccessRule, params: &SystemParams) -> f64 {
    match rule {
        AccessRule::Pra { .. } | AccessRule::Err { .. } => params.d_p,
        _ => 0.0,
    }
}

/// Fraction of trials in which the origin is a detected spectrum hole.
pub fn estimate_spatial_opportunity(params: &SystemParams, kind: ProtocolKind, config: &McConfig) -> Result<Estimate> {
    params.validate()?;
    let rule = AccessRule::resolve(kind, params)?;
    let channel = params.channel()?;
    // primaries farther than this cannot affect the origin
    let window = shrunk(
        config.window,
        sensing_reach(rule, params.power_p, &channel) + source_offset(rule, params),
    )?;
    let seed = config.seed;
    let tally = run_trials(
        config,
        Tally::default(),
        |t, acc| {
            let mut rng = trial_rng(seed, StreamLabel::Opportunity, t);
            let bank = ChannelBank::new(trial_channel_key(seed, StreamLabel::Opportunity, t));
            let (pts, prs) = sample_primary_layer(params, window, false, &mut rng)?;
            let sensing = Sensing::new(rule, &pts.points, &prs.points, params.power_p, channel, bank);
            acc.trials += 1;
            acc.successes += sensing.allows(Point::ORIGIN, NodeId::st(0)) as u64;
            Ok(())
        },
        Tally::merge,
    )?;
    Estimate::from_counts(tally.successes, tally.trials, tally.rejected, seed)
}

/// Which nodes of a realization take part when only a disc of radius
/// `limit` around the origin is simulated.
struct Mask {
    primary: Vec<bool>,
    secondary: Vec<bool>,
}

impl Mask {
    fn new(r: &NetworkRealization, limit: f64) -> Self {
        let limit_sq = limit * limit;
        let typical_p = r.conditioning == Conditioning::TypicalPrimaryPair;
        let typical_s = r.conditioning == Conditioning::TypicalSecondaryPair;
        Mask {
            primary: r
                .active_pts
                .points
                .iter()
                .enumerate()
                .map(|(i, p)| (typical_p && i == 0) || p.norm_sq() <= limit_sq)
                .collect(),
            secondary: r
                .candidate_sts
                .points
                .iter()
                .enumerate()
                .map(|(i, p)| (typical_s && i == 0) || p.norm_sq() <= limit_sq)
                .collect(),
        }
    }
}

/// Activation of every candidate ST, optionally restricted to a mask.
fn activations(r: &NetworkRealization, params: &SystemParams, channel: ChannelParams, mask: Option<&Mask>) -> Vec<bool> {
    match mask {
        None => r.st_active.clone(),
        Some(m) => {
            let sensing = Sensing::new(
                r.rule,
                &r.active_pts.points,
                &r.active_prs.points,
                params.power_p,
                channel,
                r.channels,
            )
            .with_include(&m.primary);
            r.candidate_sts
                .points
                .iter()
                .enumerate()
                .map(|(j, &s)| m.secondary[j] && sensing.allows(s, NodeId::st(j)))
                .collect()
        }
    }
}

/// Whether the typical link of `tier` meets its SIR target in `r`.
fn link_success(r: &NetworkRealization, params: &SystemParams, tier: Tier, mask: Option<&Mask>) -> Result<bool> {
    let channel = params.channel()?;
    let active = activations(r, params, channel, mask);
    let pts = &r.active_pts.points;
    let sts = &r.candidate_sts.points;
    let (rx, rx_pos, theta) = match tier {
        Tier::Primary => (NodeId::pr(0), r.active_prs.points[0], params.theta_p),
        Tier::Secondary => (NodeId::sr(0), r.paired_srs.points[0], params.theta_s),
    };
    let gain = |tx: NodeId, at: Point| r.channels.gain(tx, rx).gain() * channel.path_gain_sq(distance_sq(at, rx_pos));
    let signal = match tier {
        Tier::Primary => params.power_p * gain(NodeId::pt(0), pts[0]),
        Tier::Secondary => params.power_s * gain(NodeId::st(0), sts[0]),
    };
    let skip_pt = tier == Tier::Primary;
    let skip_st = tier == Tier::Secondary;

    let mut interference = 0.0;
    for (i, &p) in pts.iter().enumerate() {
        if (skip_pt && i == 0) || mask.is_some_and(|m| !m.primary[i]) {
            continue;
        }
        interference += params.power_p * gain(NodeId::pt(i), p);
    }
    for (j, &s) in sts.iter().enumerate() {
        if (skip_st && j == 0) || !active[j] {
            continue;
        }
        interference += params.power_s * gain(NodeId::st(j), s);
    }
    Ok(signal >= theta * interference)
}

/// Coverage of the typical primary link.
pub fn estimate_coverage_primary(params: &SystemParams, kind: ProtocolKind, config: &McConfig) -> Result<Estimate> {
    params.validate()?;
    if !(params.d_p > 0.0) {
        return Err(invalid("d_p", "must be > 0 for coverage"));
    }
    AccessRule::resolve(kind, params)?;
    let seed = config.seed;
    let tally = run_trials(
        config,
        Tally::default(),
        |t, acc| {
            let label = StreamLabel::CoveragePrimary;
            let r = build_realization(
                params,
                config.window,
                kind,
                Conditioning::TypicalPrimaryPair,
                config.rejection_cap,
                trial_channel_key(seed, label, t),
                &mut trial_rng(seed, label, t),
            )?;
            acc.trials += 1;
            acc.successes += link_success(&r, params, Tier::Primary, None)? as u64;
            Ok(())
        },
        Tally::merge,
    )?;
    Estimate::from_counts(tally.successes, tally.trials, tally.rejected, seed)
}

/// Coverage of the typical secondary link, given that its transmitter is active.
pub fn estimate_coverage_secondary(params: &SystemParams, kind: ProtocolKind, config: &McConfig) -> Result<Estimate> {
    params.validate()?;
    if !(params.d_s > 0.0) {
        return Err(invalid("d_s", "must be > 0 for coverage"));
    }
    AccessRule::resolve(kind, params)?;
    let seed = config.seed;
    let tally = run_trials(
        config,
        Tally::default(),
        |t, acc| {
            let label = StreamLabel::CoverageSecondary;
            let r = build_realization(
                params,
                config.window,
                kind,
                Conditioning::TypicalSecondaryPair,
                config.rejection_cap,
                trial_channel_key(seed, label, t),
                &mut trial_rng(seed, label, t),
            )?;
            acc.trials += 1;
            acc.rejected += r.rejected;
            acc.successes += link_success(&r, params, Tier::Secondary, None)? as u64;
            Ok(())
        },
        Tally::merge,
    )?;
    Estimate::from_counts(tally.successes, tally.trials, tally.rejected, seed)
}

/// Paired estimates of coverage in `config.window` and in the disc of
/// radius `inner` inside it, from the same realizations.
///
/// The inner estimate is distributed exactly as a run with window radius
/// `inner`, while sharing every point and gain with the outer one, so the
/// difference isolates the contribution of the ring between the two.
pub fn estimate_truncation_pair(
    params: &SystemParams,
    kind: ProtocolKind,
    tier: Tier,
    inner: f64,
    config: &McConfig,
) -> Result<(Estimate, Estimate)> {
    params.validate()?;
    if !(inner > 0.0 && inner < config.window.radius()) {
        return Err(invalid("inner", "must lie strictly inside the window"));
    }
    let rule = AccessRule::resolve(kind, params)?;
    let channel = params.channel()?;
    let seed = config.seed;
    let window = config.window;
    let label = StreamLabel::Generic;

    let (outer, inner_t) = run_trials(
        config,
        (Tally::default(), Tally::default()),
        |t, (outer, inner_t)| {
            let key = trial_channel_key(seed, label, t);
            let mut rng = trial_rng(seed, label, t);
            match tier {
                Tier::Primary => {
                    let r = build_realization(
                        params,
                        window,
                        kind,
                        Conditioning::TypicalPrimaryPair,
                        config.rejection_cap,
                        key,
                        &mut rng,
                    )?;
                    let mask = Mask::new(&r, inner);
                    outer.trials += 1;
                    outer.successes += link_success(&r, params, tier, None)? as u64;
                    inner_t.trials += 1;
                    inner_t.successes += link_success(&r, params, tier, Some(&mask))? as u64;
                }
                Tier::Secondary => {
                    // attempts are accepted by the inner (more permissive)
                    // detector; the outer one accepts a subset of them
                    if rule == AccessRule::NoneActive {
                        return Err(Error::RejectionCapExceeded {
                            attempts: config.rejection_cap,
                        });
                    }
                    let limit_sq = inner * inner;
                    let mut attempt = 0u64;
                    loop {
                        let bank = ChannelBank::new(combine(key, attempt));
                        let (pts, prs) = sample_primary_layer(params, window, false, &mut rng)?;
                        let include: Vec<bool> = pts.points.iter().map(|p| p.norm_sq() <= limit_sq).collect();
                        let full = Sensing::new(rule, &pts.points, &prs.points, params.power_p, channel, bank);
                        let st = place_partner(Point::ORIGIN, params.d_s, &mut rng);
                        let inner_ok = full.clone().with_include(&include).allows(st, NodeId::st(0));
                        if !inner_ok {
                            attempt += 1;
                            inner_t.rejected += 1;
                            outer.rejected += 1;
                            if attempt >= config.rejection_cap {
                                return Err(Error::RejectionCapExceeded { attempts: attempt });
                            }
                            continue;
                        }
                        let outer_ok = full.allows(st, NodeId::st(0));
                        let (sts, srs) = sample_secondary_layer(params, window, Some(st), &mut rng)?;
                        let st_active = sts
                            .points
                            .iter()
                            .enumerate()
                            .map(|(i, &s)| full.allows(s, NodeId::st(i)))
                            .collect();
                        drop(full);
                        let r = NetworkRealization {
                            rule,
                            conditioning: Conditioning::TypicalSecondaryPair,
                            active_pts: pts,
                            active_prs: prs,
                            candidate_sts: sts,
                            paired_srs: srs,
                            st_active,
                            channels: bank,
                            rejected: attempt,
                        };
                        let mask = Mask::new(&r, inner);
                        debug_assert_eq!(mask.primary, include);
                        inner_t.trials += 1;
                        inner_t.successes += link_success(&r, params, tier, Some(&mask))? as u64;
                        if outer_ok {
                            outer.trials += 1;
                            outer.successes += link_success(&r, params, tier, None)? as u64;
                        } else {
                            outer.rejected += 1;
                        }
                        break;
                    }
                }
            }
            Ok(())
        },
        |a, b| (a.0.merge(b.0), a.1.merge(b.1)),
    )?;
    Ok((
        Estimate::from_counts(outer.successes, outer.trials, outer.rejected, seed)?,
        Estimate::from_counts(inner_t.successes, inner_t.trials, inner_t.rejected, seed)?,
    ))
}

/// Radial density of `population` around `center` under `kind`.
///
/// Bin `k` covers distances in `(edges[k], edges[k + 1]]`.
pub fn estimate_conditional_density(
    params: &SystemParams,
    kind: ProtocolKind,
    center: ProfileCenter,
    population: ProfilePopulation,
    edges: &[f64],
    config: &McConfig,
) -> Result<RadialProfile> {
    params.validate()?;
    if edges.len() < 2 || edges[0] < 0.0 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("bins", "edges must be non-negative and strictly increasing"));
    }
    let r_max = *edges.last().expect("checked length");
    if r_max > config.window.radius() {
        return Err(invalid("bins", "outermost edge lies outside the window"));
    }
    let rule = AccessRule::resolve(kind, params)?;
    let channel = params.channel()?;
    let conditioning = match center {
        ProfileCenter::TypicalPr | ProfileCenter::TypicalPt => Conditioning::TypicalPrimaryPair,
        ProfileCenter::TypicalSt | ProfileCenter::TypicalSr => Conditioning::TypicalSecondaryPair,
    };
    // everything that can influence counts within r_max of the center
    let reach = sensing_reach(rule, params.power_p, &channel);
    let window = shrunk(config.window, r_max + reach + 2.0 * (params.d_p + params.d_s))?;
    let nbins = edges.len() - 1;
    let edges_sq: Vec<f64> = edges.iter().map(|e| e * e).collect();
    let seed = config.seed;
    let label = StreamLabel::DensityProfile;

    #[derive(Clone)]
    struct Counts {
        trials: u64,
        rejected: u64,
        sum: Vec<u64>,
        sum_sq: Vec<u64>,
    }
    let zero = Counts {
        trials: 0,
        rejected: 0,
        sum: vec![0; nbins],
        sum_sq: vec![0; nbins],
    };

    let counts = run_trials(
        config,
        zero,
        |t, acc| {
            let r = build_realization(
                params,
                window,
                kind,
                conditioning,
                config.rejection_cap,
                trial_channel_key(seed, label, t),
                &mut trial_rng(seed, label, t),
            )?;
            let c = match center {
                ProfileCenter::TypicalPr => r.active_prs.points[0],
                ProfileCenter::TypicalPt => r.active_pts.points[0],
                ProfileCenter::TypicalSt => r.candidate_sts.points[0],
                ProfileCenter::TypicalSr => r.paired_srs.points[0],
            };
            let (points, skip_first, active): (&[Point], bool, Option<&[bool]>) = match population {
                ProfilePopulation::ActiveSts => (
                    &r.candidate_sts.points,
                    conditioning == Conditioning::TypicalSecondaryPair,
                    Some(&r.st_active),
                ),
                ProfilePopulation::ActivePrs => (
                    &r.active_prs.points,
                    conditioning == Conditioning::TypicalPrimaryPair,
                    None,
                ),
                ProfilePopulation::ActivePts => (
                    &r.active_pts.points,
                    conditioning == Conditioning::TypicalPrimaryPair,
                    None,
                ),
            };
            let mut here = vec![0u64; nbins];
            for (i, &p) in points.iter().enumerate() {
                if (skip_first && i == 0) || active.is_some_and(|a| !a[i]) {
                    continue;
                }
                let d_sq = distance_sq(p, c);
                if d_sq <= edges_sq[0] || d_sq > edges_sq[nbins] {
                    continue;
                }
                // first edge at or beyond the point
                let k = edges_sq.partition_point(|&e| e < d_sq) - 1;
                here[k] += 1;
            }
            acc.trials += 1;
            acc.rejected += r.rejected;
            for (k, &h) in here.iter().enumerate() {
                acc.sum[k] += h;
                acc.sum_sq[k] += h * h;
            }
            Ok(())
        },
        |mut a, b| {
            a.trials += b.trials;
            a.rejected += b.rejected;
            for k in 0..nbins {
                a.sum[k] += b.sum[k];
                a.sum_sq[k] += b.sum_sq[k];
            }
            a
        },
    )?;

    let n = counts.trials as f64;
    let mut bin_density = Vec::with_capacity(nbins);
    let mut bin_stderr = Vec::with_capacity(nbins);
    for k in 0..nbins {
        let area = std::f64::consts::PI * (edges_sq[k + 1] - edges_sq[k]);
        let mean = counts.sum[k] as f64 / n;
        let var = (counts.sum_sq[k] as f64 / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
        bin_density.push(mean / area);
        bin_stderr.push((var / n).sqrt() / area);
    }
    Ok(RadialProfile {
        bin_edges: edges.to_vec(),
        bin_density,
        bin_stderr,
        n_trials: counts.trials,
        n_rejected: counts.rejected,
    })
}

/// Simulated spatial throughput of both tiers.
///
/// The secondary value combines separate opportunity and coverage runs, with
/// the standard error propagated to first order.
pub fn estimate_throughput(params: &SystemParams, kind: ProtocolKind, config: &McConfig) -> Result<(Estimate, Estimate)> {
    let primary = estimate_coverage_primary(params, kind, config)?.scaled(params.mu_p());
    let secondary = if kind == ProtocolKind::NoneActive || params.lambda_0 == 0.0 {
        Estimate {
            mean: 0.0,
            stderr: 0.0,
            n_trials: config.n_trials,
            n_rejected: 0,
            master_seed: config.seed,
        }
    } else {
        let q = estimate_spatial_opportunity(params, kind, config)?;
        let tau = estimate_coverage_secondary(params, kind, config)?;
        let l = params.lambda_0;
        Estimate {
            mean: l * q.mean * tau.mean,
            stderr: l * ((tau.mean * q.stderr).powi(2) + (q.mean * tau.stderr).powi(2)).sqrt(),
            n_trials: tau.n_trials,
            n_rejected: tau.n_rejected,
            master_seed: config.seed,
        }
    };
    Ok((primary, secondary))
}
