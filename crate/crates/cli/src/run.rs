use osa_core::analytic::{
    analytic_coverage, annulus_density, beta_factor, opportunity, set_opportunity, AnalyticCoverage,
    DensityProfileKind, Tier,
};
use osa_core::geometry::SimWindow;
use osa_core::montecarlo::{
    estimate_conditional_density, estimate_coverage_primary, estimate_coverage_secondary,
    estimate_spatial_opportunity, estimate_throughput, Estimate, McConfig, ProfileCenter, ProfilePopulation,
};
use osa_core::{ProtocolKind, SystemParams};

use crate::error::{CliError, Result};
use crate::output::ResultRow;
use crate::spec::{ExperimentSpec, Metric, ProfileSpec, Q_TARGET};

/// Analytic side of a row.
#[derive(Debug, Clone, Copy, Default)]
struct Analytic {
    value: Option<f64>,
    lower: Option<f64>,
    upper: Option<f64>,
}

impl Analytic {
    fn value(v: f64) -> Self {
        Analytic {
            value: Some(v),
            ..Default::default()
        }
    }

    fn from_coverage(c: AnalyticCoverage) -> Self {
        match c {
            AnalyticCoverage::Value(v) => Analytic::value(v),
            AnalyticCoverage::Lower(l) => Analytic {
                lower: Some(l),
                ..Default::default()
            },
            AnalyticCoverage::Bounds(b) => Analytic {
                lower: Some(b.lower),
                upper: Some(b.upper),
                ..Default::default()
            },
            AnalyticCoverage::Unavailable => Analytic::default(),
        }
    }

    fn scaled(self, c: f64) -> Self {
        Analytic {
            value: self.value.map(|v| v * c),
            lower: self.lower.map(|v| v * c),
            upper: self.upper.map(|v| v * c),
        }
    }

    fn is_empty(&self) -> bool {
        self.value.is_none() && self.lower.is_none() && self.upper.is_none()
    }
}

struct Context<'a> {
    spec: &'a ExperimentSpec,
    config: McConfig,
}

impl Context<'_> {
    fn row(&self, metric: &str, sweep: Option<(&str, f64)>, analytic: Analytic, sim: Option<Estimate>) -> Result<ResultRow> {
        let spec = self.spec;
        if spec.mode.analytic() && !spec.mode.simulate() && analytic.is_empty() {
            return Err(CliError::Config(format!(
                "no analytic result for {metric} under {}; use mode simulate or both",
                spec.protocol
            )));
        }
        let analytic = if spec.mode.analytic() { analytic } else { Analytic::default() };
        Ok(ResultRow {
            protocol: spec.protocol.as_str().to_string(),
            metric: metric.to_string(),
            sweep_name: sweep.map(|(n, _)| n.to_string()),
            sweep_value: sweep.map(|(_, v)| v),
            analytic_value: analytic.value,
            bound_lower: analytic.lower,
            bound_upper: analytic.upper,
            simulated_mean: sim.map(|e| e.mean),
            simulated_stderr: sim.map(|e| e.stderr),
            n_trials: sim.map(|e| e.n_trials),
            n_rejected: sim.map(|e| e.n_rejected),
            seed: sim.map(|e| e.master_seed),
            series: spec.series.clone(),
        })
    }

    fn point(&self, params: &SystemParams, sweep: Option<(&str, f64)>) -> Result<Vec<ResultRow>> {
        let (spec, kind) = (self.spec, self.spec.protocol);
        let analytic = spec.mode.analytic();
        let simulate = spec.mode.simulate();
        let cfg = &self.config;
        match spec.metric {
            Metric::Opportunity => {
                let a = if analytic { Analytic::value(opportunity(params, kind)?) } else { Analytic::default() };
                let s = simulate.then(|| estimate_spatial_opportunity(params, kind, cfg)).transpose()?;
                Ok(vec![self.row("opportunity", sweep, a, s)?])
            }
            Metric::CoveragePrimary | Metric::CoverageSecondary => {
                let (tier, name) = if spec.metric == Metric::CoveragePrimary {
                    (Tier::Primary, "coverage_primary")
                } else {
                    (Tier::Secondary, "coverage_secondary")
                };
                let a = if analytic {
                    Analytic::from_coverage(analytic_coverage(params, kind, tier)?)
                } else {
                    Analytic::default()
                };
                let s = if !simulate {
                    None
                } else if tier == Tier::Primary {
                    Some(estimate_coverage_primary(params, kind, cfg)?)
                } else {
                    Some(estimate_coverage_secondary(params, kind, cfg)?)
                };
                Ok(vec![self.row(name, sweep, a, s)?])
            }
            Metric::Throughput => {
                let (mut ap, mut as_) = (Analytic::default(), Analytic::default());
                if analytic {
                    ap = Analytic::from_coverage(analytic_coverage(params, kind, Tier::Primary)?).scaled(params.mu_p());
                    let q = opportunity(params, kind)?;
                    as_ = if q == 0.0 || params.lambda_0 == 0.0 {
                        Analytic::value(0.0)
                    } else {
                        Analytic::from_coverage(analytic_coverage(params, kind, Tier::Secondary)?)
                            .scaled(params.lambda_0 * q)
                    };
                }
                let (sp, ss) = if simulate {
                    let (p, s) = estimate_throughput(params, kind, cfg)?;
                    (Some(p), Some(s))
                } else {
                    (None, None)
                };
                Ok(vec![
                    self.row("throughput_primary", sweep, ap, sp)?,
                    self.row("throughput_secondary", sweep, as_, ss)?,
                ])
            }
            Metric::DensityProfile => {
                let profile = spec.profile.as_ref().expect("validated");
                self.profile_rows(params, profile)
            }
        }
    }

    fn profile_rows(&self, params: &SystemParams, profile: &ProfileSpec) -> Result<Vec<ResultRow>> {
        let kind = self.spec.protocol;
        let edges = &profile.bin_edges;
        let sim = if self.spec.mode.simulate() {
            Some(estimate_conditional_density(
                params,
                kind,
                profile.center,
                profile.population,
                edges,
                &self.config,
            )?)
        } else {
            None
        };
        let mut rows = Vec::with_capacity(edges.len() - 1);
        for k in 0..edges.len() - 1 {
            let (a, b) = (edges[k], edges[k + 1]);
            if !(b > a && a >= 0.0) {
                return Err(CliError::Config("bin edges must be non-negative and increasing".into()));
            }
            let analytic = if self.spec.mode.analytic() {
                profile_formula(params, kind, profile.center, profile.population, a, b)?
            } else {
                Analytic::default()
            };
            let est = sim.as_ref().map(|p| Estimate {
                mean: p.bin_density[k],
                stderr: p.bin_stderr[k],
                n_trials: p.n_trials,
                n_rejected: p.n_rejected,
                master_seed: self.config.seed,
            });
            rows.push(self.row("density_profile", Some(("r", 0.5 * (a + b))), analytic, est)?);
        }
        Ok(rows)
    }
}

/// Closed-form value or bound for a profile, averaged over the bin `(a, b]`.
fn profile_formula(
    params: &SystemParams,
    kind: ProtocolKind,
    center: ProfileCenter,
    population: ProfilePopulation,
    a: f64,
    b: f64,
) -> Result<Analytic> {
    use DensityProfileKind as D;
    use ProfileCenter as C;
    use ProfilePopulation as P;
    use ProtocolKind as K;
    let exact = |d| annulus_density(d, a, b, params).map(Analytic::value);
    let upper = |d| {
        annulus_density(d, a, b, params).map(|u| Analytic {
            upper: Some(u),
            ..Default::default()
        })
    };
    Ok(match (kind, center, population) {
        (K::Pra, C::TypicalPr, P::ActiveSts) => exact(D::StAroundPrPra)?,
        (K::Pta, C::TypicalPt, P::ActiveSts) => exact(D::StAroundPtPta)?,
        (K::Pta, C::TypicalPr, P::ActiveSts) => upper(D::StAroundPrPtaUpper)?,
        (K::Pra, C::TypicalSt, P::ActivePrs) => exact(D::PrAroundStPra)?,
        (K::Pta, C::TypicalSt, P::ActivePts) => exact(D::PtAroundStPta)?,
        (K::Pra, C::TypicalSt, P::ActivePts) => upper(D::PtAroundStPraUpper)?,
        (K::Pra, C::TypicalSr, P::ActivePts) => upper(D::PtAroundSrPraUpper)?,
        (K::Pta, C::TypicalSr, P::ActivePts) => upper(D::PtAroundSrPtaUpper)?,
        (K::Pra | K::Pta, C::TypicalSt, P::ActiveSts) => {
            let threshold = if kind == K::Pra { params.require_n_ra()? } else { params.require_n_ta()? };
            let level = params.lambda_0 * opportunity(params, kind)?;
            let beta = beta_factor(params.mu_p(), params.power_p, threshold, params.alpha)?;
            Analytic {
                value: None,
                lower: Some(level),
                upper: Some(level * beta),
            }
        }
        _ => Analytic::default(),
    })
}

/// Evaluates `spec` at every sweep point, in sweep order.
pub fn run(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    run_with_threads(spec, 0)
}

/// As [`run`], with simulations on `threads` workers (0 uses the global pool).
pub fn run_with_threads(spec: &ExperimentSpec, threads: usize) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let window = SimWindow::new(spec.r_sim)?;
    let ctx = Context {
        spec,
        config: McConfig::new(spec.n_trials.max(1), spec.seed)
            .with_window(window)
            .with_threads(threads),
    };
    let Some(sweep) = &spec.sweep else {
        return ctx.point(&spec.params, None);
    };
    let mut rows = Vec::new();
    for &v in &sweep.values {
        let mut params = spec.params.clone();
        if sweep.variable == Q_TARGET {
            set_opportunity(&mut params, spec.protocol, v)?;
        } else {
            params.set_field(&sweep.variable, v)?;
        }
        params.validate()?;
        rows.extend(ctx.point(&params, Some((sweep.variable.as_str(), v)))?);
    }
    Ok(rows)
}
