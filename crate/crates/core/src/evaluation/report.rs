use std::fmt::Write;

use super::{Metrics, MetricsReport};

fn list(xs: &[u8]) -> String {
    xs.iter().map(u8::to_string).collect::<Vec<_>>().join(",")
}

/// Text report: a header, a per-symptom table with means, then one
/// `metric \t symptom|mean \t value` line per value for scripts.
pub fn render_report(r: &MetricsReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "run: {}", r.run_tag);
    let _ = writeln!(out, "mode: {}", r.mode);
    let _ = writeln!(out, "evaluated_symptoms: {}", r.evaluated_query_count);
    let _ = writeln!(out, "excluded_symptoms: {} [{}]", r.excluded.len(), list(&r.excluded));
    let _ = writeln!(out, "relevant_total: {}", r.relevant_total);
    let _ = writeln!(out, "judged_total: {}", r.judged_total);
    out.push('\n');
    let _ = writeln!(
        out,
        "{:>7} {:>8} {:>9} {:>7} {:>8} {:>8} {:>8} {:>12}",
        "symptom", "relevant", "retrieved", "rel_ret", "ap", "r_prec", "p_at_10", "ndcg_at_1000"
    );
    let row = |out: &mut String, label: &str, counts: [String; 3], m: &Metrics| {
        let [a, b, c, d] = m.values();
        let _ = writeln!(
            out,
            "{label:>7} {:>8} {:>9} {:>7} {a:>8.4} {b:>8.4} {c:>8.4} {d:>12.4}",
            counts[0], counts[1], counts[2]
        );
    };
    for s in &r.per_symptom {
        row(
            &mut out,
            &s.symptom_index.to_string(),
            [s.relevant, s.retrieved, s.relevant_retrieved].map(|n| n.to_string()),
            &s.metrics,
        );
    }
    let total = |f: fn(&super::SymptomMetrics) -> usize| r.per_symptom.iter().map(f).sum::<usize>().to_string();
    row(
        &mut out,
        "mean",
        [total(|s| s.relevant), total(|s| s.retrieved), total(|s| s.relevant_retrieved)],
        &r.mean,
    );
    out.push('\n');
    for (i, name) in Metrics::NAMES.iter().enumerate() {
        for s in &r.per_symptom {
            let _ = writeln!(out, "{name}\t{}\t{:.6}", s.symptom_index, s.metrics.values()[i]);
        }
        let _ = writeln!(out, "{name}\tmean\t{:.6}", r.mean.values()[i]);
    }
    out
}
