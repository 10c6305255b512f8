use osa_core::analytic::{
    all_active_primary_coverage, conditional_density, coverage_primary_pta_bounds, no_secondary_coverage,
    DensityProfileKind, Tier,
};
use osa_core::geometry::SimWindow;
use osa_core::montecarlo::{
    estimate_conditional_density, estimate_coverage_primary, estimate_coverage_secondary,
    estimate_spatial_opportunity, estimate_throughput, estimate_truncation_pair, McConfig, ProfileCenter,
    ProfilePopulation,
};
use osa_core::{ProtocolKind, SystemParams};

fn within(est: f64, se: f64, want: f64, k: f64) -> bool {
    (est - want).abs() <= k * se
}

#[test]
fn opportunity_matches_closed_forms() {
    let mut p = SystemParams::defaults();
    p.n_ra = Some(p.power_p);
    let e = estimate_spatial_opportunity(&p, ProtocolKind::Pra, &McConfig::new(100_000, 3)).unwrap();
    assert!(within(e.mean, e.stderr, 0.972_542_366_4, 3.0), "{e:?}");

    let e = estimate_spatial_opportunity(&p, ProtocolKind::Err, &McConfig::new(100_000, 3)).unwrap();
    assert!(within(e.mean, e.stderr, 0.753_713_212_0, 3.0), "{e:?}");

    p.mu_0 = 0.0;
    let e = estimate_spatial_opportunity(&p, ProtocolKind::Pta, &McConfig::new(1000, 3)).unwrap();
    assert_eq!((e.mean, e.stderr), (1.0, 0.0));
}

#[test]
fn bernoulli_stderr_from_counts() {
    let e = estimate_spatial_opportunity(&SystemParams::defaults(), ProtocolKind::Ert, &McConfig::new(5000, 9)).unwrap();
    let n = e.n_trials as f64;
    let k = (e.mean * n).round();
    assert_eq!(k / n, e.mean);
    assert!((e.stderr - (e.mean * (1.0 - e.mean) / n).sqrt()).abs() < 1e-15);
}

#[test]
fn primary_coverage_limits() {
    let p = SystemParams::defaults();
    let cfg = McConfig::new(20_000, 5);
    let none = estimate_coverage_primary(&p, ProtocolKind::NoneActive, &cfg).unwrap();
    assert!(within(none.mean, none.stderr, no_secondary_coverage(&p).unwrap(), 3.0), "{none:?}");
    let all = estimate_coverage_primary(&p, ProtocolKind::AllActive, &cfg).unwrap();
    assert!(within(all.mean, all.stderr, all_active_primary_coverage(&p).unwrap(), 3.0), "{all:?}");
}

#[test]
fn secondary_coverage_without_primaries() {
    let mut p = SystemParams::defaults();
    p.mu_0 = 0.0;
    let e = estimate_coverage_secondary(&p, ProtocolKind::AllActive, &McConfig::new(20_000, 6)).unwrap();
    assert!(within(e.mean, e.stderr, 0.918_077_672_5, 3.0), "{e:?}");
    assert_eq!(e.n_rejected, 0);
}

#[test]
fn pta_primary_inside_bounds() {
    let p = SystemParams::defaults();
    let b = coverage_primary_pta_bounds(&p).unwrap();
    let e = estimate_coverage_primary(&p, ProtocolKind::Pta, &McConfig::new(20_000, 8)).unwrap();
    assert!(b.contains(e.mean, 3.0 * e.stderr), "{e:?} vs {b:?}");
}

#[test]
fn throughput_of_silent_secondaries() {
    let p = SystemParams::defaults();
    let (cp, cs) = estimate_throughput(&p, ProtocolKind::NoneActive, &McConfig::new(20_000, 12)).unwrap();
    assert!(within(cp.mean, cp.stderr, 0.01 * no_secondary_coverage(&p).unwrap(), 3.0), "{cp:?}");
    assert_eq!(cs.mean, 0.0);
}

#[test]
fn scaling_every_power_changes_nothing() {
    let p = SystemParams::defaults();
    let mut q = p.clone();
    let c = 7.25;
    q.power_p *= c;
    q.power_s *= c;
    q.n_ra = q.n_ra.map(|n| n * c);
    q.n_ta = q.n_ta.map(|n| n * c);
    let cfg = McConfig::new(3000, 21);
    for kind in [ProtocolKind::Pra, ProtocolKind::Pta] {
        let a = estimate_coverage_primary(&p, kind, &cfg).unwrap();
        let b = estimate_coverage_primary(&q, kind, &cfg).unwrap();
        assert_eq!(a, b);
        let a = estimate_coverage_secondary(&p, kind, &cfg).unwrap();
        let b = estimate_coverage_secondary(&q, kind, &cfg).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let mut p = SystemParams::defaults();
    p.lambda_0 = 0.05;
    let seq = McConfig::new(2000, 99).with_threads(1);
    let par = McConfig::new(2000, 99).with_threads(4);
    for kind in [ProtocolKind::Pra, ProtocolKind::Pta, ProtocolKind::Ert] {
        assert_eq!(
            estimate_coverage_primary(&p, kind, &seq).unwrap(),
            estimate_coverage_primary(&p, kind, &par).unwrap()
        );
        assert_eq!(
            estimate_coverage_secondary(&p, kind, &seq).unwrap(),
            estimate_coverage_secondary(&p, kind, &par).unwrap()
        );
        assert_eq!(
            estimate_spatial_opportunity(&p, kind, &seq).unwrap(),
            estimate_spatial_opportunity(&p, kind, &par).unwrap()
        );
    }
    let edges: Vec<f64> = (0..=5).map(f64::from).collect();
    let a = estimate_conditional_density(
        &p,
        ProtocolKind::Pra,
        ProfileCenter::TypicalPr,
        ProfilePopulation::ActiveSts,
        &edges,
        &seq,
    )
    .unwrap();
    let b = estimate_conditional_density(
        &p,
        ProtocolKind::Pra,
        ProfileCenter::TypicalPr,
        ProfilePopulation::ActiveSts,
        &edges,
        &par,
    )
    .unwrap();
    assert_eq!(a.bin_density, b.bin_density);
    assert_eq!(a.bin_stderr, b.bin_stderr);
}

#[test]
fn same_seed_same_estimate_other_seed_differs() {
    let p = SystemParams::defaults();
    let a = estimate_coverage_primary(&p, ProtocolKind::Pra, &McConfig::new(3000, 1)).unwrap();
    let b = estimate_coverage_primary(&p, ProtocolKind::Pra, &McConfig::new(3000, 1)).unwrap();
    let c = estimate_coverage_primary(&p, ProtocolKind::Pra, &McConfig::new(3000, 2)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.mean, c.mean);
}

#[test]
fn doubling_the_window_is_within_one_stderr() {
    let p = SystemParams::defaults();
    let cfg = McConfig::new(10_000, 31).with_window(SimWindow::new(100.0).unwrap());
    for kind in [ProtocolKind::Pra, ProtocolKind::Pta] {
        for tier in [Tier::Primary, Tier::Secondary] {
            let (outer, inner) = estimate_truncation_pair(&p, kind, tier, SimWindow::DEFAULT_RADIUS, &cfg).unwrap();
            assert!(
                (outer.mean - inner.mean).abs() < inner.stderr,
                "{kind} {tier:?}: {outer:?} vs {inner:?}"
            );
        }
    }
}

#[test]
fn pra_profile_around_receiver_follows_closed_form() {
    let mut p = SystemParams::defaults();
    p.lambda_0 = 0.1;
    p.n_ra = Some(p.power_p);
    let edges: Vec<f64> = (0..=10).map(|k| 0.5 * k as f64).collect();
    let prof = estimate_conditional_density(
        &p,
        ProtocolKind::Pra,
        ProfileCenter::TypicalPr,
        ProfilePopulation::ActiveSts,
        &edges,
        &McConfig::new(20_000, 41),
    )
    .unwrap();
    for k in 0..10 {
        // annulus average of the closed form
        let (a, b) = (edges[k], edges[k + 1]);
        let m = 200;
        let mut acc = 0.0;
        for j in 0..m {
            let r = a + (b - a) * (j as f64 + 0.5) / m as f64;
            acc += conditional_density(DensityProfileKind::StAroundPrPra, r, &p).unwrap() * r;
        }
        let want = acc * (b - a) / m as f64 * 2.0 / (b * b - a * a);
        let (got, se) = (prof.bin_density[k], prof.bin_stderr[k]);
        assert!(within(got, se, want, 3.5), "bin {k}: {got} +- {se} vs {want}");
    }
}
