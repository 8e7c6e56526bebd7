//! Acceptance run: one line per criterion, with wall time. Exits nonzero
//! when any criterion fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use dynlab::experiments::{run_experiment, ExperimentConfig, Outcome, Report, EXPERIMENTS};

const SEED: u64 = 20240917;

/// Wall-time budgets per criterion, where one is stated.
fn budget(criterion: u32) -> Option<Duration> {
    match criterion {
        1 => Some(Duration::from_secs(10)),
        2 => Some(Duration::from_secs(60)),
        4 => Some(Duration::from_secs(300)),
        _ => None,
    }
}

fn config(id: &str) -> ExperimentConfig {
    ExperimentConfig { experiment: Some(id.into()), seed: Some(SEED), ..Default::default() }
}

struct Line {
    ok: bool,
    time: Duration,
    notes: Vec<String>,
}

fn main() -> ExitCode {
    let mut lines: BTreeMap<u32, Line> = BTreeMap::new();
    let mut reports: Vec<(String, Report)> = Vec::new();
    for id in EXPERIMENTS {
        let t = Instant::now();
        let report = match run_experiment(&config(id)) {
            Ok(r) => r,
            Err(e) => {
                println!("experiment {id} errored: {e}");
                return ExitCode::FAILURE;
            }
        };
        let elapsed = t.elapsed();
        let mut seen = Vec::new();
        for v in &report.verdicts {
            let line = lines.entry(v.criterion).or_insert(Line { ok: true, time: Duration::ZERO, notes: Vec::new() });
            if v.outcome != Outcome::Pass {
                line.ok = false;
                line.notes.push(format!("{}: {}", v.clause, v.detail));
            }
            if !seen.contains(&v.criterion) {
                line.time += elapsed;
                seen.push(v.criterion);
            }
        }
        reports.push((id.to_string(), report));
    }

    let t = Instant::now();
    let mut drift = Vec::new();
    for (id, first) in &reports {
        match run_experiment(&config(id)) {
            Ok(again) if again.payload() == first.payload() => {}
            Ok(_) => drift.push(format!("{id}: payload differs on rerun")),
            Err(e) => drift.push(format!("{id}: rerun errored: {e}")),
        }
    }
    lines.insert(9, Line { ok: drift.is_empty(), time: t.elapsed(), notes: drift });

    let mut all = true;
    for (c, line) in &lines {
        let mut ok = line.ok;
        let mut notes = line.notes.clone();
        if let Some(b) = budget(*c) {
            if line.time > b {
                ok = false;
                notes.push(format!("runtime {:.2?} over budget {:.0?}", line.time, b));
            }
        }
        all &= ok;
        println!("criterion {c}: {} ({:.2?})", if ok { "PASS" } else { "FAIL" }, line.time);
        for n in notes {
            println!("    {n}");
        }
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
