//! Cross-module validation: the analytic fixed-point machinery against
//! the Monte Carlo estimators on models where both are cheap.

use brw_core::genfun::{self, FixedPointOptions};
use brw_core::mc::{self, SimConfig};
use brw_core::model::BoundaryPolicy;
use brw_core::registry;

fn opts() -> FixedPointOptions {
    FixedPointOptions::default()
}

/// The constrained-map construction of the never-visit probability is an
/// implementer's reading of the recursion; its iterates must match the
/// simulated never-visit frequencies.
#[test]
fn never_visit_prob_matches_simulation() {
    // ghost-die is the converging end of the bracket for never-visit
    // questions: escapees genuinely never return. The windows exceed the
    // horizons, so the simulations see no boundary. Both parameter sets
    // keep M_s decisively away from 1: near-critical first-visit times
    // have tails far beyond any feasible horizon.
    struct Case {
        lambda: f64,
        root_loop: f64,
        start: i64,
        horizon: u32,
        cap: u64,
    }
    let cases = [
        // M_s = 0.4 * 2 sqrt(3) = 1.386: visits settle within ~10 gens
        Case {
            lambda: 0.4,
            root_loop: 0.0,
            start: 2,
            horizon: 100,
            cap: 10_000_000,
        },
        // bulk subcritical, survival localized at the root
        Case {
            lambda: 0.22,
            root_loop: 5.0,
            start: 3,
            horizon: 300,
            cap: 200_000,
        },
    ];
    for c in cases {
        let m = registry::tree_counterpart_radial(
            4,
            c.lambda,
            c.root_loop,
            101,
            BoundaryPolicy::GhostSurvive,
        )
        .unwrap();
        let q0 = genfun::never_visit_prob(&m.with_policy(BoundaryPolicy::GhostDie), &[0], &opts())
            .unwrap();
        let cfg = SimConfig {
            seed: 7_000 + c.start as u64,
            replicates: 40_000,
            horizon: c.horizon,
            particle_cap: c.cap,
            target: vec![0],
            track_visits: true,
        };
        let out = mc::simulate(&m, c.start, &cfg).unwrap();
        let analytic = q0.vector.value_at(&m, c.start).unwrap();
        assert!(
            out.never_visited.within(analytic, 3.5, cfg.replicates),
            "lambda {}: MC {} +- {} vs analytic {analytic}",
            c.lambda,
            out.never_visited.value,
            out.never_visited.se
        );
        // the ghost-survive run brackets from below
        let lower = genfun::never_visit_prob(&m, &[0], &opts())
            .unwrap()
            .vector
            .value_at(&m, c.start)
            .unwrap();
        assert!(lower <= out.never_visited.value + 3.5 * out.never_visited.se);
    }
}

/// Global extinction from the generating function against the simulated
/// extinction fraction, on the supercritical radial tree.
#[test]
fn global_extinction_matches_simulation() {
    let m =
        registry::tree_counterpart_radial(4, 0.35, 0.0, 101, BoundaryPolicy::GhostSurvive).unwrap();
    let analytic = genfun::global_extinction(&m, &opts()).vector.values[0];
    let cfg = SimConfig {
        seed: 11,
        replicates: 40_000,
        horizon: 100,
        particle_cap: 30_000,
        ..Default::default()
    };
    let out = mc::simulate(&m, 0, &cfg).unwrap();
    assert!(
        out.extinct.within(analytic, 3.5, cfg.replicates),
        "MC {} +- {} vs analytic {analytic}",
        out.extinct.value,
        out.extinct.se
    );
    // and the closed form for the tree
    assert!((analytic - 1.0 / 1.4).abs() < 1e-6);
}

/// The empirical regime of the loop model agrees with the analytic
/// classification on both sides of lambda_w.
#[test]
fn regime_labels_agree_at_moderate_scale() {
    for (lambda, horizon, cap) in [(0.22, 300u32, 60_000u64), (0.27, 400, 400_000)] {
        let sim_model =
            registry::tree_counterpart_radial(4, lambda, 5.0, 60, BoundaryPolicy::GhostSurvive)
                .unwrap();
        let cfg = SimConfig {
            seed: 23,
            replicates: 20_000,
            horizon,
            particle_cap: cap,
            target: vec![0],
            track_visits: true,
        };
        let est = mc::estimate_regime(&sim_model, 0, &cfg).unwrap();

        let analytic_model =
            registry::tree_counterpart_radial(4, lambda, 5.0, 300, BoundaryPolicy::GhostSurvive)
                .unwrap();
        let analytic = genfun::classify(&analytic_model, 0, &[0], &opts(), 1e-4).unwrap();
        let same = matches!(
            (est.regime, analytic.regime),
            (
                mc::EmpiricalRegime::StrongLocal,
                genfun::Regime::StrongLocal
            ) | (
                mc::EmpiricalRegime::NonStrongLocal,
                genfun::Regime::NonStrongLocal
            ) | (mc::EmpiricalRegime::PureGlobal, genfun::Regime::PureGlobal)
                | (
                    mc::EmpiricalRegime::GlobalExtinction,
                    genfun::Regime::GlobalExtinction
                )
        );
        assert!(
            same || est.inconclusive,
            "lambda {lambda}: empirical {:?} (sep {:.1}) vs analytic {:?}",
            est.regime,
            est.separation,
            analytic.regime
        );
        assert!(
            est.outcome
                .extinct
                .within(analytic.q_bar_x, 3.5, cfg.replicates),
            "lambda {lambda}: q_bar MC {} vs analytic {}",
            est.outcome.extinct.value,
            analytic.q_bar_x
        );
    }
}
