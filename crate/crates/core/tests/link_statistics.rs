//! Monte Carlo checks of the link simulator against the analytic moments the
//! detectors are built on.

use molmimo::analysis::{average_error_probability, compare_ggd_gaussian, fit_ggd};
use molmimo::channel_model::slot_probs;
use molmimo::detection::{detector_stats_ex, detector_stats_in, interference_stats, split_outputs};
use molmimo::link_sim::{simulate_link, simulate_trace};
use molmimo::protocol::{s_ili_ratio, simulate_probes};
use molmimo::rng::{substream, Domain};
use molmimo::{ChannelModelParams, DetectorBank, DetectorKind, NoiseConfig, SlotProbabilities, TxConfig};

const SLOTS: usize = 100_000;

fn reference_probs(t_s: f64, memory: usize) -> SlotProbabilities {
    slot_probs(
        &ChannelModelParams::reference_pair(),
        &ChannelModelParams::reference_cross(),
        t_s,
        memory,
    )
    .unwrap()
}

fn mean_var(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = v.collect();
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

fn rel(got: f64, want: f64) -> f64 {
    (got / want - 1.0).abs()
}

#[test]
fn all_ones_history_matches_moment_sums() {
    let probs = reference_probs(0.08, 3);
    let q1 = 500;
    let tx = TxConfig::new(q1, 1.0, 0.08, SLOTS).unwrap();
    let ones = vec![1u8; SLOTS];
    let obs = simulate_link(
        &ones,
        &ones,
        &tx,
        &probs,
        &NoiseConfig::new(10.0).unwrap(),
        &mut substream(11, Domain::Link, 0, 0),
    )
    .unwrap();
    let q = q1 as f64;
    let ps = probs.pair.iter().chain(&probs.cross);
    let want_mean: f64 = ps.clone().map(|p| q * p).sum();
    let want_var: f64 = ps.map(|p| q * p * (1.0 - p)).sum::<f64>() + 100.0;
    let (m, v) = mean_var(obs[probs.memory()..].iter().map(|o| o.y[0]));
    assert!(rel(m, want_mean) < 0.02, "{m} vs {want_mean}");
    assert!(rel(v, want_var) < 0.02, "{v} vs {want_var}");
}

#[test]
fn realized_diagonal_is_binomial() {
    let probs = reference_probs(0.08, 3);
    for q1 in [300u64, 700] {
        let tx = TxConfig::new(q1, 0.5, 0.08, SLOTS).unwrap();
        let trace = simulate_trace(&tx, &probs, &NoiseConfig::default(), 12, q1).unwrap();
        let (m, v) = mean_var(trace.observations.iter().map(|o| o.realized_h[0][0] as f64));
        let a0 = probs.a0();
        assert!(rel(m, q1 as f64 * a0) < 0.02);
        assert!(rel(v, q1 as f64 * a0 * (1.0 - a0)) < 0.02);
    }
}

#[test]
fn interference_moments_match_analysis() {
    let probs = reference_probs(0.08, 3);
    let q1 = 600;
    let tx = TxConfig::new(q1, 0.5, 0.08, SLOTS).unwrap();
    let trace = simulate_trace(&tx, &probs, &NoiseConfig::default(), 13, 0).unwrap();
    let want = interference_stats(&probs, q1 as f64, 0.5, 10.0);
    let steady = &trace.observations[probs.memory()..];
    let (m, v) = mean_var(steady.iter().map(|o| o.isi[0] as f64 + o.noise[0]));
    assert!(rel(m, want.mean) < 0.02, "{m} vs {}", want.mean);
    assert!(rel(v, want.variance) < 0.02, "{v} vs {}", want.variance);
    let (m, _) = mean_var(steady.iter().map(|o| o.ili[0] as f64));
    assert!(rel(m, want.ili_mean) < 0.05);
}

#[test]
fn zero_forcing_output_moments_match_analysis() {
    let probs = reference_probs(0.08, 3);
    for q1 in [300u64, 800] {
        let tx = TxConfig::new(q1, 0.5, 0.08, SLOTS).unwrap();
        let trace = simulate_trace(&tx, &probs, &NoiseConfig::default(), 14, q1).unwrap();
        let bank = DetectorBank::new(&probs, q1, 0.5, 10.0).unwrap();
        for (kind, stats) in [
            (
                DetectorKind::ZfEx,
                detector_stats_ex(&probs, q1 as f64, 0.5, 10.0).unwrap(),
            ),
            (
                DetectorKind::ZfIn,
                detector_stats_in(&probs, q1 as f64, 0.5, 10.0).unwrap(),
            ),
        ] {
            let (zero, one) = split_outputs(&bank, kind, &trace);
            let (m0, v0) = mean_var(zero.into_iter());
            let (m1, v1) = mean_var(one.into_iter());
            for (got, want, what) in [
                (m0, stats.mu0, "mu0"),
                (v0, stats.var0, "var0"),
                (m1, stats.mu1, "mu1"),
                (v1, stats.var1, "var1"),
            ] {
                // μ0 of zf_in is tiny, so its tolerance is absolute in units of σ0.
                let err = if what == "mu0" && kind == DetectorKind::ZfIn {
                    (got - want).abs() / stats.var0.sqrt()
                } else {
                    rel(got, want)
                };
                assert!(err < 0.02, "{kind} Q1={q1} {what}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn probe_ratio_estimates_pair_over_cross() {
    let probs = reference_probs(0.08, 3);
    let obs = simulate_probes(&probs, 1000, &NoiseConfig::noiseless(), 10_000, 15).unwrap();
    let ratio = s_ili_ratio(&obs);
    let want = probs.a0() / probs.b0();
    assert!(rel(ratio, want) < 0.10, "{ratio} vs {want}");
    let no_cross = simulate_probes(&probs.without_cross(), 1000, &NoiseConfig::noiseless(), 100, 15).unwrap();
    assert_eq!(s_ili_ratio(&no_cross), f64::INFINITY);
}

#[test]
fn genie_rarely_falls_back() {
    let probs = reference_probs(0.08, 3);
    for q1 in [300u64, 1000] {
        let tx = TxConfig::new(q1, 0.5, 0.08, 20_000).unwrap();
        let trace = simulate_trace(&tx, &probs, &NoiseConfig::default(), 16, q1).unwrap();
        let tally = DetectorBank::new(&probs, q1, 0.5, 10.0)
            .unwrap()
            .tally(DetectorKind::Genie, &trace);
        assert!((tally.genie_fallbacks as f64) < 0.01 * trace.len() as f64);
    }
}

#[test]
fn separable_outputs_give_no_errors() {
    let probs = reference_probs(0.08, 0);
    let tx = TxConfig::new(1000, 0.5, 0.08, 20_000).unwrap();
    let trace = simulate_trace(&tx, &probs, &NoiseConfig::noiseless(), 17, 0).unwrap();
    let mut bank = DetectorBank::new(&probs, 1000, 0.5, 0.0).unwrap();
    bank.calibrate_genie(&trace).unwrap();
    for kind in [
        DetectorKind::Adaptive,
        DetectorKind::ZfEx,
        DetectorKind::ZfIn,
        DetectorKind::Genie,
    ] {
        assert_eq!(bank.tally(kind, &trace).errors, 0, "{kind}");
    }
}

#[test]
fn ggd_fits_outputs_better_than_gaussian() {
    let probs = reference_probs(0.08, 3);
    for q1 in [300u64, 700] {
        let tx = TxConfig::new(q1, 0.5, 0.08, SLOTS).unwrap();
        let trace = simulate_trace(&tx, &probs, &NoiseConfig::default(), 18, q1).unwrap();
        let bank = DetectorBank::new(&probs, q1, 0.5, 10.0).unwrap();
        let (zero, one) = split_outputs(&bank, DetectorKind::ZfEx, &trace);
        for s in [zero, one] {
            let c = compare_ggd_gaussian(&s).unwrap();
            assert!(c.ks_ggd <= c.ks_gaussian, "Q1={q1}: {c:?}");
        }
    }
}

#[test]
fn ggd_error_probability_tracks_simulated_ber() {
    let probs = reference_probs(0.08, 3);
    for q1 in [300u64, 500] {
        let tx = TxConfig::new(q1, 0.5, 0.08, SLOTS).unwrap();
        let trace = simulate_trace(&tx, &probs, &NoiseConfig::default(), 19, q1).unwrap();
        let bank = DetectorBank::new(&probs, q1, 0.5, 10.0).unwrap();
        let (zero, one) = split_outputs(&bank, DetectorKind::ZfEx, &trace);
        let (g0, g1) = (fit_ggd(&zero).unwrap(), fit_ggd(&one).unwrap());
        let pe = average_error_probability(&g0, &g1, bank.zf_ex.upper, 0.5);
        let ber = bank.tally(DetectorKind::ZfEx, &trace).ber();
        assert!(pe / ber > 0.5 && pe / ber < 2.0, "Q1={q1}: Pe {pe} vs BER {ber}");
    }
}
