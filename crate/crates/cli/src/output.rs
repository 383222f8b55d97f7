//! Files written by the CLI: the per-query CSV, the JSON summary, the φ
//! diagnostic table and the plain-text comparison table.

use std::fmt::Write as _;
use std::io::Write;

use alq_core::format::csv_float;
use alq_core::simulation::{ExperimentSummary, RoundResult};
use alq_core::CiSummary;

pub const PER_QUERY_HEADER: [&str; 15] = [
    "strategy",
    "q",
    "labeled_size",
    "lambda_mean",
    "lambda_lo",
    "lambda_hi",
    "zeta_mean",
    "zeta_lo",
    "zeta_hi",
    "eta_mean",
    "eta_lo",
    "eta_hi",
    "auc_mean",
    "f1_mean",
    "n_missing_eta",
];

fn ci_cells(ci: Option<&CiSummary>) -> [String; 3] {
    match ci {
        Some(ci) => [csv_float(ci.mean), csv_float(ci.lower), csv_float(ci.upper)],
        None => [String::new(), String::new(), String::new()],
    }
}

/// One row per (strategy, q), strategies in the given order, q ascending.
pub fn write_per_query_csv<W: Write>(summaries: &[ExperimentSummary], writer: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(PER_QUERY_HEADER)?;
    for summary in summaries {
        for agg in &summary.per_query {
            let mut row = vec![summary.strategy.clone(), agg.q.to_string(), agg.labeled_size.to_string()];
            row.extend(ci_cells(Some(&agg.lambda)));
            row.extend(ci_cells(Some(&agg.zeta)));
            row.extend(ci_cells(agg.eta.as_ref()));
            row.push(csv_float(agg.auc.mean));
            row.push(csv_float(agg.f1.mean));
            row.push(agg.n_missing_eta.to_string());
            out.write_record(&row)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Per round and query: how many unlabeled instances fell in the interim
/// uncertainty band, and the spread of their final-model probabilities.
pub fn write_phi_csv<W: Write>(strategy: &str, rounds: &[RoundResult], writer: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["strategy", "seed", "q", "delta", "count", "phi_mean", "phi_min", "phi_max"])?;
    let mut ordered: Vec<&RoundResult> = rounds.iter().collect();
    ordered.sort_by_key(|r| r.seed);
    for round in ordered {
        let Some(trace) = &round.phi_trace else { continue };
        for pq in &trace.queries {
            let (mean, min, max) = if pq.phi.is_empty() {
                (String::new(), String::new(), String::new())
            } else {
                let mean = pq.phi.iter().sum::<f64>() / pq.phi.len() as f64;
                let min = pq.phi.iter().copied().fold(f64::INFINITY, f64::min);
                let max = pq.phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (csv_float(mean), csv_float(min), csv_float(max))
            };
            out.write_record([
                strategy.to_string(),
                round.seed.to_string(),
                pq.q.to_string(),
                csv_float(trace.delta),
                pq.phi.len().to_string(),
                mean,
                min,
                max,
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

fn ci_text(ci: Option<&CiSummary>) -> String {
    match ci {
        Some(ci) => format!("{:.4} [{:.4}, {:.4}]", ci.mean, ci.lower, ci.upper),
        None => "undefined".to_string(),
    }
}

/// Final-query λ, ζ and η per strategy with their confidence bounds.
pub fn final_query_table(summaries: &[ExperimentSummary]) -> String {
    let mut text = String::new();
    let Some(first) = summaries.first() else {
        return text;
    };
    let last = first.final_query();
    let conf = (first.config.confidence * 100.0).round();
    let _ = writeln!(
        text,
        "final query q={} (labeled={}), means with {conf}% CI over {} rounds",
        last.q,
        last.labeled_size,
        first.round_seeds.len()
    );
    let _ = writeln!(text, "{:<16} {:<28} {:<28} {:<28}", "strategy", "lambda", "zeta", "eta");
    for s in summaries {
        let f = s.final_query();
        let _ = writeln!(
            text,
            "{:<16} {:<28} {:<28} {:<28}",
            s.strategy,
            ci_text(Some(&f.lambda)),
            ci_text(Some(&f.zeta)),
            ci_text(f.eta.as_ref())
        );
    }
    text
}
