use std::path::Path;

use molmimo::analysis::{h_of_q1, run_ber_experiment, sir, siso_probabilities};
use molmimo::channel_model::{fit_model, slot_probs};
use molmimo::detection::{detector_stats_adaptive, detector_stats_ex, detector_stats_in, threshold_pair};
use molmimo::particle_sim::{estimate_cdfs, simulate_all, time_grid, CdfRow};
use molmimo::protocol::{end_to_end_demo, siso_end_to_end_demo, DemoConfig, DemoReport, SlotAccount};
use molmimo::{FitReport, LinkCdfs, LinkClass, Topology};
use serde::Serialize;

use crate::config::{ChannelSection, ExperimentConfig};
use crate::error::CliError;
use crate::output::{read_csv, Output};

fn simulate_cdfs(cfg: &ExperimentConfig) -> Result<(LinkCdfs, Vec<molmimo::HittingRecord>, usize), CliError> {
    let topology = cfg.topology()?;
    let sim = cfg.sim_config()?;
    if topology.diffusion == 0.0 {
        eprintln!("warning: D = 0, molecules never move; every CDF is identically zero");
    }
    let records = simulate_all(&topology, &sim)?;
    let n = sim.emitted_per_source();
    let cdfs = estimate_cdfs(&records, n, &time_grid(sim.dt, sim.t_max))?;
    Ok((cdfs, records, n))
}

pub fn simulate_channel(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let out = Output::new("simulate-channel", cfg)?;
    let (cdfs, records, n) = simulate_cdfs(cfg)?;
    let extra = [("n_emitted", n.to_string())];
    let path = out.csv("channel_cdf.csv", &cdfs.rows(), &extra)?;
    out.csv("hitting_records.csv", &records, &extra)?;
    let last = |c: &molmimo::EmpiricalCdf| c.fraction.last().copied().unwrap_or(0.0);
    println!(
        "{} molecules per source, {} hits; F11({t}) = {:.4}, F12({t}) = {:.4} -> {}",
        n,
        records.len(),
        last(&cdfs.f11),
        last(&cdfs.f12),
        path.display(),
        t = cfg.sim.t_max,
    );
    Ok(())
}

#[derive(Serialize)]
struct FitRow {
    link_class: LinkClass,
    b1: f64,
    b2: f64,
    b3: f64,
    residual_norm: f64,
    rms: f64,
    iterations: usize,
    converged: bool,
}

impl FitRow {
    fn new(link_class: LinkClass, r: &FitReport) -> Self {
        let [b1, b2, b3] = r.params.coefficients();
        Self {
            link_class,
            b1,
            b2,
            b3,
            residual_norm: r.residual_norm,
            rms: r.rms,
            iterations: r.iterations,
            converged: r.converged,
        }
    }
}

#[derive(Serialize)]
struct ChannelFile {
    channel: ChannelSection,
}

/// Fits the pooled pair and cross CDFs, read from `cdf` or simulated afresh.
/// Results are written before a non-convergence is reported.
pub fn fit(cfg: &ExperimentConfig, cdf: Option<&Path>) -> Result<(), CliError> {
    let out = Output::new("fit", cfg)?;
    let cdfs = match cdf {
        Some(path) => {
            let (rows, meta): (Vec<CdfRow<f64>>, _) = read_csv(path)?;
            let n = match meta.iter().find(|(k, _)| k == "n_emitted") {
                Some((_, v)) => v
                    .parse()
                    .map_err(|_| CliError::Config(format!("{}: bad n_emitted {v:?}", path.display())))?,
                None => cfg.sim_config()?.emitted_per_source(),
            };
            LinkCdfs::from_rows(&rows, n)?
        }
        None => simulate_cdfs(cfg)?.0,
    };
    let topology = cfg.topology()?;
    let pair = fit_model(&cdfs.pooled_pair()?, &topology, LinkClass::Pair)?;
    let cross = fit_model(&cdfs.pooled_cross()?, &topology, LinkClass::Cross)?;
    let rows = [
        FitRow::new(LinkClass::Pair, &pair),
        FitRow::new(LinkClass::Cross, &cross),
    ];
    out.csv("fit.csv", &rows, &[])?;

    let mut body = String::new();
    for (name, r) in [("pair", &pair), ("cross", &cross)] {
        body.push_str(&format!(
            "# {name}: residual_norm={:.6e} rms={:.6e} iterations={} converged={}\n",
            r.residual_norm, r.rms, r.iterations, r.converged
        ));
    }
    let file = ChannelFile {
        channel: ChannelSection {
            pair: (&pair.params).into(),
            cross: (&cross.params).into(),
        },
    };
    body.push_str(&toml::to_string(&file).expect("plain numbers"));
    out.text("channel_params.toml", &body)?;

    for r in &rows {
        println!(
            "{:?}: b = ({:.4}, {:.4}, {:.4}), rms {:.2e}, {} iterations{}",
            r.link_class,
            r.b1,
            r.b2,
            r.b3,
            r.rms,
            r.iterations,
            if r.converged { "" } else { " (not converged)" }
        );
    }
    if !(pair.converged && cross.converged) {
        return Err(CliError::Numeric("least-squares fit did not converge".into()));
    }
    Ok(())
}

pub fn ber_sweep(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let out = Output::new("ber-sweep", cfg)?;
    let sweep = cfg.ber_sweep()?;
    let points = run_ber_experiment(&sweep)?;
    let path = out.csv("ber.csv", &points, &[])?;
    for p in &points {
        println!(
            "{:<14} Q1={:<5} t_s={:<6} BER {:.3e} [{:.3e}, {:.3e}]",
            p.detector.name(),
            p.q1,
            p.t_s,
            p.ber,
            p.ci_low,
            p.ci_high
        );
    }
    println!("-> {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct SirRow {
    distance: f64,
    separation: f64,
    receiver_radius: f64,
    t_s: f64,
    sir: f64,
    sir_db: f64,
}

/// SIR over the topology grid. The fitted coefficients are held fixed and
/// only the geometry in the model changes.
pub fn sir_sweep(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let out = Output::new("sir-sweep", cfg)?;
    let s = &cfg.sir;
    let mut rows = Vec::new();
    for &distance in &s.distances {
        for &separation in &s.separations {
            for &receiver_radius in &s.radii {
                let topology = Topology::new(distance, separation, receiver_radius, cfg.topology.diffusion)?;
                let (pair, cross) = cfg.channel_on(topology)?;
                for &t_s in &s.symbol_durations {
                    let v = sir(&pair, &cross, t_s)?;
                    rows.push(SirRow {
                        distance,
                        separation,
                        receiver_radius,
                        t_s,
                        sir: v,
                        sir_db: 10.0 * v.log10(),
                    });
                }
            }
        }
    }
    let path = out.csv("sir.csv", &rows, &[])?;
    println!("{} SIR points -> {}", rows.len(), path.display());
    Ok(())
}

#[derive(Serialize)]
struct ThresholdRow {
    detector: &'static str,
    q1: u64,
    t_s: f64,
    mu0: f64,
    mu1: f64,
    var0: f64,
    var1: f64,
    beta: f64,
    eta_lower: f64,
    eta_upper: f64,
}

#[derive(Serialize)]
struct CrossoverRow {
    memory: usize,
    t_s: f64,
    a: f64,
    b: f64,
    c: f64,
    crossover_q1: Option<f64>,
    positive_roots: usize,
    ili_ok: bool,
    isi_ok: bool,
}

/// MAP thresholds per `(Q1, t_s)` and the `h(Q1)` crossover of the two
/// zero-forcing detectors for each interference memory.
pub fn threshold_table(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let out = Output::new("threshold-table", cfg)?;
    let (pair, cross) = cfg.channel()?;
    let l = &cfg.link;
    let mut rows = Vec::new();
    for &t_s in &l.symbol_durations {
        let probs = slot_probs(&pair, &cross, t_s, l.memory)?;
        for &q1 in &l.q1_values {
            let q = q1 as f64;
            for stats in [
                detector_stats_adaptive(&probs, q, l.pi1, l.sigma_n)?,
                detector_stats_ex(&probs, q, l.pi1, l.sigma_n)?,
                detector_stats_in(&probs, q, l.pi1, l.sigma_n)?,
            ] {
                let thr = threshold_pair(&stats)?;
                rows.push(ThresholdRow {
                    detector: stats.kind.name(),
                    q1,
                    t_s,
                    mu0: stats.mu0,
                    mu1: stats.mu1,
                    var0: stats.var0,
                    var1: stats.var1,
                    beta: stats.beta_ratio(),
                    eta_lower: thr.lower,
                    eta_upper: thr.upper,
                });
            }
        }
    }
    let mut crossover = Vec::new();
    for &t_s in &l.symbol_durations {
        for &memory in &cfg.threshold.memories {
            let h = h_of_q1(&slot_probs(&pair, &cross, t_s, memory)?, l.sigma_n, l.pi1)?;
            crossover.push(CrossoverRow {
                memory,
                t_s,
                a: h.a,
                b: h.b,
                c: h.c,
                crossover_q1: h.root,
                positive_roots: h.positive_roots,
                ili_ok: h.ili_ok,
                isi_ok: h.isi_ok,
            });
        }
    }
    out.csv("thresholds.csv", &rows, &[])?;
    let path = out.csv("crossover.csv", &crossover, &[])?;
    for c in &crossover {
        let root = c.crossover_q1.map_or("none".to_string(), |r| format!("{r:.4e}"));
        println!("t_s={} memory={}: zf_in beats zf_ex above Q1 = {root}", c.t_s, c.memory);
    }
    println!("-> {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct DecisionRow {
    slot: usize,
    sent1: u8,
    sent2: u8,
    decided1: u8,
    decided2: u8,
}

fn decision_rows(r: &DemoReport) -> Vec<DecisionRow> {
    (0..r.slots)
        .map(|i| DecisionRow {
            slot: i,
            sent1: r.sent.stream1[i],
            sent2: r.sent.stream2[i],
            decided1: r.received.stream1[i],
            decided2: r.received.stream2[i],
        })
        .collect()
}

fn bits(v: &[u8]) -> String {
    v.iter().map(|b| char::from(b'0' + b)).collect()
}

/// Sends `text` over the emulated 2×2 link and over a single link, then
/// reports both decodes and the slot counts.
pub fn protocol_demo(cfg: &ExperimentConfig, text: Option<&str>) -> Result<(), CliError> {
    let out = Output::new("protocol-demo", cfg)?;
    let p = &cfg.protocol;
    let text = text.unwrap_or(&p.text);
    let (pair, cross) = cfg.channel()?;
    let demo = DemoConfig {
        probs: slot_probs(&pair, &cross, p.symbol_duration, p.memory)?,
        q1: p.q1,
        sigma_n: p.sigma_n,
        detector: p.detector,
        calibration_bits: p.calibration_bits,
        seed: cfg.seed,
    };
    let mimo = end_to_end_demo(text, &demo)?;
    let siso_cfg = DemoConfig {
        probs: siso_probabilities(&pair, p.symbol_duration, p.memory)?,
        ..demo.clone()
    };
    // Without ISI, cross link and noise the single-link bit-0 output is
    // deterministic and has no MAP threshold; only that comparison is skipped.
    let siso = match siso_end_to_end_demo(text, &siso_cfg) {
        Err(molmimo::Error::DegenerateVariance) => None,
        other => Some(other?),
    };

    println!("slot  sent  decided");
    for r in decision_rows(&mimo) {
        let mark = if (r.sent1, r.sent2) == (r.decided1, r.decided2) {
            ""
        } else {
            "  *"
        };
        println!(
            "{:>4}  {}{}    {}{}{mark}",
            r.slot, r.sent1, r.sent2, r.decided1, r.decided2
        );
    }
    println!("Tx1 {}", bits(&mimo.sent.stream1));
    println!("Tx2 {}", bits(&mimo.sent.stream2));
    let show = |r: &DemoReport| match &r.decoded {
        Ok(s) => format!("{s:?}"),
        Err(e) => format!("decode failed ({e})"),
    };
    let account = SlotAccount::new(text.chars().count());
    println!(
        "2x2 {} with detector {}: {} in {} slots, {} bit errors",
        text,
        p.detector,
        show(&mimo),
        mimo.slots,
        mimo.bit_errors
    );
    match &siso {
        Some(r) => println!("1x1: {} in {} slots, {} bit errors", show(r), r.slots, r.bit_errors),
        None => println!("1x1: not simulated, bit-0 output is noiseless so no threshold exists"),
    }
    println!("slots: 2x2 {} vs 1x1 {}", account.mimo_slots, account.siso_slots);
    println!("speedup {:.4}", account.speedup());

    let traces: Vec<_> = mimo.observations.iter().map(|o| o.trace_row()).collect();
    out.csv("demo_trace.csv", &traces, &[])?;
    out.csv(
        "demo_decisions.csv",
        &decision_rows(&mimo),
        &[("text", text.replace(' ', "_"))],
    )?;
    Ok(())
}
