//! Analytic properties asserted over the analysed parameter ranges:
//! d ∈ {2, 4}, r_r ∈ {2, 4}, h ∈ {1, 2}, Q1 ∈ 100..=1000, t_s ∈ 0.05..=1 s.

use molmimo::analysis::{h_of_q1, run_ber_experiment, sir, BerSweepConfig};
use molmimo::channel_model::{slot_probs, DEFAULT_MEMORY};
use molmimo::detection::{detector_stats_ex, detector_stats_in, threshold_pair};
use molmimo::link_sim::mean_channel_matrices;
use molmimo::{ChannelModelParams, DetectorKind, LinkClass, SlotProbabilities, Topology};

const SYMBOL_DURATIONS: [f64; 6] = [0.05, 0.08, 0.1, 0.2, 0.5, 1.0];

fn topologies() -> Vec<Topology> {
    let mut out = vec![];
    for d in [2.0, 4.0] {
        for r in [2.0, 4.0] {
            for h in [1.0, 2.0] {
                out.push(Topology::new(d, h, r, 50.0).unwrap());
            }
        }
    }
    out
}

/// The reference fitted coefficients transplanted onto `topo`.
fn params(topo: Topology) -> (ChannelModelParams, ChannelModelParams) {
    let (p, c) = (
        ChannelModelParams::reference_pair(),
        ChannelModelParams::reference_cross(),
    );
    (
        ChannelModelParams::new(LinkClass::Pair, p.b1, p.b2, p.b3, topo).unwrap(),
        ChannelModelParams::new(LinkClass::Cross, c.b1, c.b2, c.b3, topo).unwrap(),
    )
}

fn all_probs() -> Vec<SlotProbabilities> {
    topologies()
        .into_iter()
        .flat_map(|t| {
            let (p, c) = params(t);
            SYMBOL_DURATIONS.map(|t_s| slot_probs(&p, &c, t_s, DEFAULT_MEMORY).unwrap())
        })
        .collect()
}

#[test]
fn full_rank_everywhere() {
    for probs in all_probs() {
        assert!(probs.a0() > probs.b0(), "{probs:?}");
        assert!(probs.full_rank());
    }
}

#[test]
fn mean_inlink_matrix_is_diagonally_dominant() {
    let (p, c) = (
        ChannelModelParams::reference_pair(),
        ChannelModelParams::reference_cross(),
    );
    let probs = slot_probs(&p, &c, 0.08, DEFAULT_MEMORY).unwrap();
    let (ex, inn) = mean_channel_matrices(&probs, 700).unwrap();
    assert!(inn.m[0][1] < inn.m[0][0] && inn.m[1][0] < inn.m[1][1]);
    assert!((inn.det() - 700f64.powi(2) * (probs.a0().powi(2) - probs.b0().powi(2))).abs() < 1e-9 * inn.det());
    let no_cross = mean_channel_matrices(&probs.without_cross(), 700).unwrap();
    assert_eq!(no_cross.0, no_cross.1);
    assert_eq!(ex, no_cross.0);
}

#[test]
fn upper_threshold_between_means_on_all_swept_configurations() {
    for probs in all_probs() {
        for q1 in (1..=10).map(|k| k as f64 * 100.0) {
            for stats in [
                detector_stats_ex(&probs, q1, 0.5, 10.0).unwrap(),
                detector_stats_in(&probs, q1, 0.5, 10.0).unwrap(),
            ] {
                let t = threshold_pair(&stats).unwrap();
                assert!(t.lower < t.upper);
                assert!(stats.mu0 < t.upper && t.upper < stats.mu1, "{stats:?} {t:?}");
            }
        }
    }
}

#[test]
fn h_sign_structure_under_acceptable_interference() {
    let mut checked = 0;
    for probs in all_probs() {
        let h = h_of_q1(&probs, 10.0, 0.5).unwrap();
        if h.acceptable_interference() {
            checked += 1;
            assert!(h.a > 0.0 && h.c < 0.0);
            assert_eq!(h.positive_roots, 1);
        }
    }
    assert!(checked > 0);
}

#[test]
fn shrinking_distance_helps_sir_more_than_widening_separation() {
    for t_s in SYMBOL_DURATIONS {
        for r in [2.0, 4.0] {
            let sir_at = |d: f64, h: f64| {
                let (p, c) = params(Topology::new(d, h, r, 50.0).unwrap());
                sir(&p, &c, t_s).unwrap()
            };
            let base = sir_at(4.0, 1.0);
            let closer = sir_at(2.0, 1.0);
            let wider = sir_at(4.0, 2.0);
            assert!(closer > base && wider > base);
            assert!(closer - base > wider - base, "t_s={t_s} r={r}: {base} {closer} {wider}");
        }
    }
}

#[test]
fn genie_is_never_worse_than_practical_detectors() {
    let cfg = BerSweepConfig {
        q1_values: (3..=10).map(|k| k * 100).collect(),
        n_bits: 20_000,
        replications: 4,
        calibration_bits: 20_000,
        seed: 31,
        ..BerSweepConfig::default()
    };
    let rows = run_ber_experiment(&cfg).unwrap();
    for q1 in cfg.q1_values.iter().copied() {
        let at = |k| rows.iter().find(|r| r.q1 == q1 && r.detector == k).unwrap();
        let genie = at(DetectorKind::Genie);
        for kind in [
            DetectorKind::Fixed,
            DetectorKind::Adaptive,
            DetectorKind::ZfEx,
            DetectorKind::ZfIn,
        ] {
            let other = at(kind);
            // Up to CI overlap.
            assert!(genie.ci_low <= other.ci_high, "Q1={q1} genie {genie:?} vs {other:?}");
        }
        assert_eq!(at(DetectorKind::Adaptive).errors, at(DetectorKind::ZfEx).errors);
    }
}
