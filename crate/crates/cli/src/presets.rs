//! Experiments behind the standard figures.

use osa_core::{ProtocolKind, SystemParams};

use crate::error::{CliError, Result};
use crate::spec::{ExperimentSpec, Metric, Mode, Sweep, Q_TARGET};

pub const PRESET_NAMES: [&str; 8] = ["fig3", "fig4a", "fig4b", "fig5a", "fig5b", "fig6", "fig7", "fig8"];

const OPPORTUNITY_TRIALS: u64 = 100_000;
const COVERAGE_TRIALS: u64 = 20_000;
const SEED: u64 = 1;

fn q_grid() -> Vec<f64> {
    vec![0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99]
}

fn q_sweep(lambda_0: f64, protocol: ProtocolKind, metric: Metric) -> ExperimentSpec {
    let mut params = SystemParams::defaults();
    params.lambda_0 = lambda_0;
    let mut spec = ExperimentSpec::new(params, protocol, metric);
    spec.mode = Mode::Both;
    spec.sweep = Some(Sweep {
        variable: Q_TARGET.to_string(),
        values: q_grid(),
    });
    spec.n_trials = COVERAGE_TRIALS;
    spec.seed = SEED;
    spec.series = Some(format!("lambda_0={lambda_0}"));
    spec
}

fn panel(lambda_0: f64, metric: Metric, protocols: &[ProtocolKind]) -> Vec<ExperimentSpec> {
    protocols.iter().map(|&k| q_sweep(lambda_0, k, metric)).collect()
}

/// The experiments regenerating figure `name`, in output order.
///
/// Figures with two density panels (6, 7 and 8) return both, distinguished
/// by each spec's `series` label.
pub fn preset(name: &str) -> Result<Vec<ExperimentSpec>> {
    use ProtocolKind as K;
    let threshold = [K::Pra, K::Pta];
    let all = [K::Pra, K::Pta, K::Err, K::Ert];
    Ok(match name {
        "fig3" => {
            let mut specs = Vec::new();
            for ratio in [1.0, 5.0, 10.0] {
                for kind in threshold {
                    let mut params = SystemParams::defaults();
                    params.n_ra = Some(params.power_p / ratio);
                    params.n_ta = Some(params.power_p / ratio);
                    let mut spec = ExperimentSpec::new(params, kind, Metric::Opportunity);
                    spec.sweep = Some(Sweep {
                        variable: "mu_p".into(),
                        values: (1..=10).map(|k| 0.005 * k as f64).collect(),
                    });
                    spec.n_trials = OPPORTUNITY_TRIALS;
                    spec.seed = SEED;
                    spec.series = Some(format!("P_p/N={ratio}"));
                    specs.push(spec);
                }
            }
            specs
        }
        "fig4a" => panel(0.01, Metric::CoveragePrimary, &threshold),
        "fig4b" => panel(0.1, Metric::CoveragePrimary, &threshold),
        "fig5a" => panel(0.01, Metric::CoverageSecondary, &threshold),
        "fig5b" => panel(0.1, Metric::CoverageSecondary, &threshold),
        "fig6" | "fig7" => [0.01, 0.1]
            .iter()
            .flat_map(|&l| panel(l, Metric::Throughput, &threshold))
            .collect(),
        "fig8" => [0.01, 0.1]
            .iter()
            .flat_map(|&l| panel(l, Metric::Throughput, &all))
            .collect(),
        _ => {
            return Err(CliError::Config(format!(
                "unknown preset `{name}`; expected one of {}",
                PRESET_NAMES.join(", ")
            )))
        }
    })
}
