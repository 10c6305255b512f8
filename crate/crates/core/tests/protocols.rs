use osa_core::channel::NodeId;
use osa_core::geometry::{Point, SimWindow};
use osa_core::protocols::{build_realization, AccessRule, Conditioning, NetworkRealization, DEFAULT_REJECTION_CAP};
use osa_core::rng::{trial_channel_key, trial_rng, StreamLabel};
use osa_core::{ProtocolKind, SystemParams};
use proptest::prelude::*;

fn realize(params: &SystemParams, kind: ProtocolKind, radius: f64, t: u64) -> NetworkRealization {
    let mut rng = trial_rng(77, StreamLabel::Generic, t);
    build_realization(
        params,
        SimWindow::new(radius).unwrap(),
        kind,
        Conditioning::None,
        DEFAULT_REJECTION_CAP,
        trial_channel_key(77, StreamLabel::Generic, t),
        &mut rng,
    )
    .unwrap()
}

// pooled fraction of active candidates inside a disc, with a ratio-estimator stderr
// that treats realizations as the independent units
struct Pooled {
    active: Vec<f64>,
    total: Vec<f64>,
}

impl Pooled {
    fn new() -> Self {
        Pooled {
            active: Vec::new(),
            total: Vec::new(),
        }
    }

    fn add(&mut self, r: &NetworkRealization, center: Point, radius: f64) {
        let (mut a, mut n) = (0.0, 0.0);
        for (i, p) in r.candidate_sts.points.iter().enumerate() {
            if osa_core::geometry::distance(*p, center) <= radius {
                n += 1.0;
                if r.st_active[i] {
                    a += 1.0;
                }
            }
        }
        self.active.push(a);
        self.total.push(n);
    }

    fn fraction(&self) -> (f64, f64) {
        let sa: f64 = self.active.iter().sum();
        let sn: f64 = self.total.iter().sum();
        let f = sa / sn;
        let m = self.active.len() as f64;
        let ss: f64 = self
            .active
            .iter()
            .zip(&self.total)
            .map(|(a, n)| (a - f * n).powi(2))
            .sum();
        (f, (ss * m / (m - 1.0)).sqrt() / sn)
    }
}

#[test]
fn pra_activation_fraction_matches_opportunity() {
    let params = SystemParams::defaults();
    let mut pooled = Pooled::new();
    for t in 0..10_000 {
        let r = realize(&params, ProtocolKind::Pra, 50.0, t);
        pooled.add(&r, Point::ORIGIN, 40.0);
    }
    let (f, se) = pooled.fraction();
    let want = 0.972_542_366_4;
    assert!((f - want).abs() < 3.0 * se, "fraction {f} +- {se}, want {want}");
}

#[test]
fn thinning_is_stationary_across_subregions() {
    let mut params = SystemParams::defaults();
    params.mu_0 = 0.05;
    params.lambda_0 = 0.05;
    for kind in [ProtocolKind::Pra, ProtocolKind::Pta, ProtocolKind::Err] {
        let centers = [Point::new(-22.0, 0.0), Point::ORIGIN, Point::new(0.0, 22.0)];
        let mut regions: Vec<Pooled> = centers.iter().map(|_| Pooled::new()).collect();
        for t in 0..1500 {
            let r = realize(&params, kind, 45.0, t);
            for (pool, c) in regions.iter_mut().zip(&centers) {
                pool.add(&r, *c, 10.0);
            }
        }
        let stats: Vec<(f64, f64)> = regions.iter().map(Pooled::fraction).collect();
        for i in 0..stats.len() {
            for j in i + 1..stats.len() {
                let (a, sa) = stats[i];
                let (b, sb) = stats[j];
                let z = (a - b) / (sa * sa + sb * sb).sqrt();
                assert!(z.abs() < 3.5, "{kind}: regions {i} and {j} differ, z = {z}");
            }
        }
    }
}

#[test]
fn pra_sensing_reuses_the_data_channel() {
    let params = SystemParams::defaults();
    for t in 0..20 {
        let r = realize(&params, ProtocolKind::Pra, 30.0, t);
        for j in 0..r.candidate_sts.len() {
            for i in 0..r.active_prs.len() {
                let sensed = r.sensing_fading(j, i).unwrap();
                assert_eq!(sensed, r.data_fading(NodeId::st(j), NodeId::pr(i)));
                assert_eq!(sensed, r.data_fading(NodeId::pr(i), NodeId::st(j)));
            }
        }
    }
}

#[test]
fn pta_sensing_is_independent_of_interference_channel() {
    let params = SystemParams::defaults();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for t in 0..100 {
        let r = realize(&params, ProtocolKind::Pta, 30.0, t);
        for j in 0..r.candidate_sts.len() {
            for i in 0..r.active_pts.len() {
                xs.push(r.sensing_fading(j, i).unwrap().gain());
                ys.push(r.data_fading(NodeId::st(j), NodeId::pr(i)).gain());
            }
        }
    }
    let n = xs.len() as f64;
    assert!(n > 10_000.0);
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / n;
    let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>() / n;
    let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum::<f64>() / n;
    let rho = cov / (vx * vy).sqrt();
    assert!(rho.abs() < 4.0 / n.sqrt(), "correlation {rho} over {n} pairs");
}

#[test]
fn limits_activate_everything_or_nothing() {
    let params = SystemParams::defaults();
    let r = realize(&params, ProtocolKind::Pra, 30.0, 1);
    for j in 0..r.candidate_sts.len() {
        assert!(r.activation_under(AccessRule::AllActive, j, &params).unwrap());
        assert!(!r.activation_under(AccessRule::NoneActive, j, &params).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn raising_the_threshold_only_adds_transmitters(
        seed in 0u64..1000,
        low in 0.01f64..20.0,
        factor in 1.0f64..50.0,
        pta in any::<bool>(),
    ) {
        let mut params = SystemParams::defaults();
        params.mu_0 = 0.05;
        params.lambda_0 = 0.05;
        let kind = if pta { ProtocolKind::Pta } else { ProtocolKind::Pra };
        let r = realize(&params, kind, 20.0, seed);
        let high = low * factor;
        let (strict, loose) = if pta {
            (AccessRule::Pta { threshold: low }, AccessRule::Pta { threshold: high })
        } else {
            (AccessRule::Pra { threshold: low }, AccessRule::Pra { threshold: high })
        };
        for j in 0..r.candidate_sts.len() {
            if r.activation_under(strict, j, &params).unwrap() {
                prop_assert!(r.activation_under(loose, j, &params).unwrap());
            }
        }
    }

    #[test]
    fn widening_the_exclusion_region_only_removes_transmitters(
        seed in 0u64..1000,
        small in 0.0f64..6.0,
        extra in 0.0f64..6.0,
        ert in any::<bool>(),
    ) {
        let mut params = SystemParams::defaults();
        params.mu_0 = 0.05;
        params.lambda_0 = 0.05;
        let kind = if ert { ProtocolKind::Ert } else { ProtocolKind::Err };
        let r = realize(&params, kind, 20.0, seed);
        let large = small + extra;
        let (wide, narrow) = if ert {
            (AccessRule::Ert { radius: large }, AccessRule::Ert { radius: small })
        } else {
            (AccessRule::Err { radius: large }, AccessRule::Err { radius: small })
        };
        for j in 0..r.candidate_sts.len() {
            if r.activation_under(wide, j, &params).unwrap() {
                prop_assert!(r.activation_under(narrow, j, &params).unwrap());
            }
        }
    }
}
