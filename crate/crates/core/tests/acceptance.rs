//! Acceptance criteria. Each criterion prints one `PASS` or `FAIL` line;
//! the process exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use aoi_sim::codec::{decode, encode, Beacon, Feedback, Frame, StatusUpdate, DEFAULT_AP_ID};
use aoi_sim::harness::{
    mean_and_stderr, run_experiment, write_csv, ExperimentConfig, ExperimentId, ExperimentReport,
    Group, Protocol, ReportRow, E1_DELTAS,
};
use aoi_sim::{
    adra_average_aoi, adra_optimize_cap, aira_average_aoi, exact_average_aoi_markov, run_summary,
    ChannelParams, NetworkConfig, Policy,
};

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn simulate(n: u16, policy: Policy<f64>, horizon: u64, seed: u64) -> f64 {
    let cfg = NetworkConfig::homogeneous(n, policy, ChannelParams::collision_only(), horizon, seed);
    run_summary(&cfg).unwrap().network_average()
}

fn aira_formula_exactness() -> Verdict {
    let mut worst: f64 = 0.0;
    for n in 1..=3u32 {
        for p in [0.1, 0.3, 0.5, 1.0 / n as f64] {
            let exact = exact_average_aoi_markov(n, &Policy::aira(p).unwrap()).unwrap();
            worst = worst.max((exact - aira_average_aoi(n, p).unwrap()).abs());
        }
    }
    verdict(
        worst < 1e-8,
        format!("max |markov - formula| = {worst:.2e} (tol 1e-8)"),
    )
}

fn monte_carlo_convergence() -> Verdict {
    let formula = aira_average_aoi(8, 0.125).unwrap();
    let sim = simulate(8, Policy::aira(0.125).unwrap(), 1_000_000, 8);
    let rel = (sim - formula).abs() / formula;
    verdict(
        rel < 0.02,
        format!(
            "simulated {sim:.4} vs formula {formula:.4}, rel err {:.3}% (tol 2%)",
            rel * 100.0
        ),
    )
}

fn adra_reduction() -> Verdict {
    let mut worst: f64 = 0.0;
    for n in [1u32, 2, 3, 5, 8, 13, 24, 40, 100] {
        for i in 1..100 {
            let p = i as f64 / 100.0;
            let aira = aira_average_aoi(n, p).unwrap();
            let diff = (adra_average_aoi(n, 1, p).unwrap() - aira).abs();
            // Values reach 1e16 at large n; the tolerance is scaled so it
            // stays above one unit in the last place there.
            worst = worst.max(diff / aira.max(1.0));
        }
    }
    verdict(
        worst <= 1e-12,
        format!("max |adra(delta=1) - aira| / max(1, aira) = {worst:.2e} (tol 1e-12)"),
    )
}

fn relative_errors(p_of: impl Fn(u64) -> f64 + Sync) -> Vec<(u64, f64, f64, f64, f64)> {
    E1_DELTAS
        .par_iter()
        .map(|&delta| {
            let p = p_of(delta);
            let formula = adra_average_aoi(8, delta, p).unwrap();
            let sim = simulate(8, Policy::adra(delta, p).unwrap(), 1_000_000, 1_000 + delta);
            (delta, p, sim, formula, (sim - formula).abs() / formula)
        })
        .collect()
}

fn adra_approximation_quality() -> Verdict {
    let rows = relative_errors(|_| 1.0 / 8.0);
    let worst = rows.iter().map(|r| r.4).fold(0.0, f64::max);
    let detail = rows
        .iter()
        .map(|(d, _, _, _, rel)| format!("d{d}:{:.2}%", rel * 100.0))
        .collect::<Vec<_>>()
        .join(" ");

    // Same check at the CAP chosen by the optimiser, reported for reference.
    for (delta, p, sim, formula, rel) in relative_errors(|d| adra_optimize_cap(8, d).unwrap()) {
        println!(
            "INFO  adra-approximation at optimised CAP: delta={delta} p={p:.4} sim={sim:.3} formula={formula:.3} rel={:.2}%",
            rel * 100.0
        );
    }
    verdict(
        worst < 0.10,
        format!(
            "N=8, p=1/8, worst {:.2}% (tol 10%); {detail}",
            worst * 100.0
        ),
    )
}

fn aira_rows(report: &ExperimentReport) -> Vec<&ReportRow> {
    report
        .rows
        .iter()
        .filter(|r| r.protocol == Protocol::Aira)
        .collect()
}

fn e1_report() -> ExperimentReport {
    let cfg = ExperimentConfig {
        replications: 100,
        ..ExperimentConfig::e1()
    };
    run_experiment(&cfg).unwrap()
}

fn e1_single_run_agreement() -> Verdict {
    let report = e1_report();
    let mut pass = true;
    let mut parts = Vec::new();
    for row in aira_rows(&report) {
        let analytic = row.analytical.unwrap();
        let within = row
            .samples
            .iter()
            .filter(|&&s| (s - analytic).abs() <= 0.3)
            .count();
        let frac = within as f64 / row.samples.len() as f64;
        pass &= frac >= 0.8;
        let (_, se) = mean_and_stderr(&row.samples);
        let sd = se * (row.samples.len() as f64).sqrt();
        parts.push(format!(
            "N={}: {:.0}% within 0.3 (run sd {sd:.2})",
            row.n,
            frac * 100.0
        ));
    }
    verdict(
        pass,
        format!("{} of 800-slot runs (need 80%)", parts.join(", ")),
    )
}

fn e1_averaged_agreement() -> Verdict {
    let report = e1_report();
    let mut pass = true;
    let mut parts = Vec::new();
    for row in aira_rows(&report) {
        let diff = row.empirical_mean - row.analytical.unwrap();
        pass &= diff.abs() <= 0.3;
        parts.push(format!("N={}: {diff:+.3}", row.n));
    }
    verdict(
        pass,
        format!(
            "mean over 100 runs minus formula: {} (tol 0.3)",
            parts.join(", ")
        ),
    )
}

fn e2_ordering() -> Verdict {
    let report = run_experiment(&ExperimentConfig::e2()).unwrap();
    let mut gaps = Vec::new();
    let mut ordered = true;
    for pair in report.rows.chunks(2) {
        let (aira, adra) = (&pair[0], &pair[1]);
        assert_eq!(
            (aira.protocol, adra.protocol),
            (Protocol::Aira, Protocol::Adra)
        );
        ordered &= adra.empirical_mean < aira.empirical_mean;
        gaps.push((aira.n, aira.empirical_mean - adra.empirical_mean));
    }
    let gap8 = gaps.iter().find(|g| g.0 == 8).unwrap().1;
    let gap40 = gaps.iter().find(|g| g.0 == 40).unwrap().1;
    let detail = gaps
        .iter()
        .map(|(n, g)| format!("N={n}: {g:.2}"))
        .collect::<Vec<_>>()
        .join(", ");
    verdict(
        ordered && gap40 > gap8,
        format!("AIRA - ADRA gap {detail}; ADRA lower everywhere: {ordered}"),
    )
}

fn e3_groups() -> Verdict {
    let cfg = ExperimentConfig::e3();
    let beta = cfg.beta_db;
    let report = run_experiment(&cfg).unwrap();
    let row = |n: u16, gap: f64, group: Group| {
        report
            .rows
            .iter()
            .find(|r| r.n == n && r.gap_db == Some(gap) && r.group == Some(group))
            .unwrap()
    };
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    for &n in &cfg.n_values {
        // (a) equal powers: paired difference within two standard errors.
        let (low, high) = (row(n, 0.0, Group::Low), row(n, 0.0, Group::High));
        let diffs: Vec<f64> = low
            .samples
            .iter()
            .zip(&high.samples)
            .map(|(l, h)| l - h)
            .collect();
        let (d, se) = mean_and_stderr(&diffs);
        if d.abs() > 2.0 * se {
            failures.push(format!("(a) N={n} diff {d:.3} > 2se {:.3}", 2.0 * se));
        }

        // (b) high group non-increasing up to beta + 2 dB.
        let upto: Vec<f64> = cfg
            .gaps_db
            .iter()
            .copied()
            .filter(|&g| g <= beta + 2.0)
            .collect();
        for w in upto.windows(2) {
            let (a, b) = (row(n, w[0], Group::High), row(n, w[1], Group::High));
            if b.empirical_mean > a.empirical_mean {
                failures.push(format!(
                    "(b) N={n} high {:.3}@{} < {:.3}@{}",
                    a.empirical_mean, w[0], b.empirical_mean, w[1]
                ));
            }
        }

        // (c) saturation between 10 and 12 dB.
        let (h10, h12) = (
            row(n, 10.0, Group::High).empirical_mean,
            row(n, 12.0, Group::High).empirical_mean,
        );
        let sat = (h12 - h10).abs() / h10;
        if sat >= 0.05 {
            failures.push(format!("(c) N={n} high varies {:.2}%", sat * 100.0));
        }

        // (d) low group stable across gaps >= 8 dB.
        let lows: Vec<f64> = cfg
            .gaps_db
            .iter()
            .filter(|&&g| g >= 8.0)
            .map(|&g| row(n, g, Group::Low).empirical_mean)
            .collect();
        let (lo, hi) = lows
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        let spread = (hi - lo) / lo;
        if spread >= 0.10 {
            failures.push(format!("(d) N={n} low varies {:.2}%", spread * 100.0));
        }
        notes.push(format!(
            "N={n}: gap0 diff {d:+.3}±{se:.3}, high {:.2}->{:.2}, low@>=8dB spread {:.2}%",
            row(n, 0.0, Group::High).empirical_mean,
            h12,
            spread * 100.0
        ));
    }
    let detail = if failures.is_empty() {
        notes.join("; ")
    } else {
        failures.join("; ")
    };
    verdict(failures.is_empty(), detail)
}

fn random_frame(rng: &mut ChaCha8Rng) -> Frame {
    let payload: Vec<u8> = (0..rng.gen_range(0..200)).map(|_| rng.gen()).collect();
    match rng.gen_range(0..3) {
        0 => Frame::Beacon(Beacon {
            bitrate_code: rng.gen(),
            source_id: rng.gen(),
            beacon_number: rng.gen(),
            interval_slots: rng.gen(),
        }),
        1 => Frame::StatusUpdate(StatusUpdate {
            bitrate_code: rng.gen(),
            destination_id: rng.gen_range(0..0xFFFF),
            source_id: rng.gen(),
            slot_number: rng.gen(),
            payload,
        }),
        _ => Frame::Feedback(Feedback {
            bitrate_code: rng.gen(),
            source_id: rng.gen(),
            slot_number: rng.gen(),
            feedback_id: rng.gen_bool(0.8).then(|| rng.gen_range(1..=0xFFFF)),
            payload,
        }),
    }
}

fn codec_properties() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2021);
    let mut roundtrip_failures = 0;
    for _ in 0..10_000 {
        let frame = random_frame(&mut rng);
        if decode(&encode(&frame).unwrap()).ok() != Some(frame) {
            roundtrip_failures += 1;
        }
    }
    let fixed = [
        Frame::Beacon(Beacon {
            bitrate_code: 1,
            source_id: DEFAULT_AP_ID,
            beacon_number: 3,
            interval_slots: 100,
        }),
        Frame::StatusUpdate(StatusUpdate {
            bitrate_code: 1,
            destination_id: DEFAULT_AP_ID,
            source_id: 4,
            slot_number: 250,
            payload: vec![0xAB; 12],
        }),
        Frame::Feedback(Feedback {
            bitrate_code: 1,
            source_id: DEFAULT_AP_ID,
            slot_number: 250,
            feedback_id: Some(4),
            payload: vec![],
        }),
    ];
    let mut flips = 0;
    let mut undetected = 0;
    for frame in &fixed {
        let bytes = encode(frame).unwrap();
        for bit in 0..bytes.len() * 8 {
            let mut corrupted = bytes.clone();
            corrupted[bit / 8] ^= 1 << (bit % 8);
            flips += 1;
            if decode(&corrupted).is_ok() {
                undetected += 1;
            }
        }
    }
    verdict(
        roundtrip_failures == 0 && undetected == 0,
        format!(
            "10000 roundtrips, {roundtrip_failures} failed; {flips} single-bit flips, {undetected} undetected"
        ),
    )
}

fn determinism() -> Verdict {
    let csv = |cfg: &ExperimentConfig| {
        let mut buf = Vec::new();
        write_csv(&run_experiment(cfg).unwrap(), &mut buf).unwrap();
        buf
    };
    let mut mismatched = Vec::new();
    for id in [
        ExperimentId::E1,
        ExperimentId::E2,
        ExperimentId::E3,
        ExperimentId::Custom,
    ] {
        let cfg = ExperimentConfig::defaults_for(id);
        if csv(&cfg) != csv(&cfg) {
            mismatched.push(id.name());
        }
    }
    verdict(
        mismatched.is_empty(),
        format!("e1, e2, e3, custom at defaults; mismatched: {mismatched:?}"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("aira-formula-exactness", aira_formula_exactness),
        ("monte-carlo-convergence", monte_carlo_convergence),
        ("adra-reduction", adra_reduction),
        ("adra-approximation-quality", adra_approximation_quality),
        ("e1-single-run-agreement", e1_single_run_agreement),
        ("e1-averaged-agreement", e1_averaged_agreement),
        ("e2-adra-beats-aira", e2_ordering),
        ("e3-capture-groups", e3_groups),
        ("codec-properties", codec_properties),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("{tag}  {name}: {}", outcome.detail);
        failed += usize::from(!outcome.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
