//! CSV tables laid out like the reference results: one row per
//! (language, metric), one column per model report.

use super::pipeline::{Aggregate, PipelineReport};

pub const TABLE_LANGUAGES: [&str; 2] = ["java", "python"];

pub const COMPILABILITY_ROWS: [&str; 3] = ["Before", "After", "% Increase"];
pub const NDCG_ROWS: [&str; 5] = [
    "# Prompts",
    "Model's # prompts (rel_1=3)",
    "Framework's # prompts (rel_1=3)",
    "Model's NDCG@k",
    "Framework's NDCG@k",
];
pub const TIMING_ROWS: [&str; 4] = ["Filtering Phase", "Ranking Phase", "Repairing Phase", "Total"];

const MISSING: &str = "-";

fn display_language(lang: &str) -> &str {
    match lang {
        "java" => "Java",
        "python" => "Python",
        other => other,
    }
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn table<F>(reports: &[PipelineReport], metrics: &[&str], cell: F) -> String
where
    F: Fn(&Aggregate, usize) -> Option<String>,
{
    let mut out = String::new();
    let mut header = vec!["language".to_string(), "metric".to_string()];
    header.extend(reports.iter().map(|r| quote(&r.metadata.model)));
    out.push_str(&header.join(","));
    out.push('\n');
    for lang in TABLE_LANGUAGES {
        for (i, metric) in metrics.iter().enumerate() {
            let mut row = vec![display_language(lang).to_string(), quote(metric)];
            for report in reports {
                let value = report.aggregate(lang).and_then(|a| cell(a, i));
                row.push(value.unwrap_or_else(|| MISSING.to_string()));
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
    }
    out
}

/// Percentage of parseable suggestions before and after filtering.
pub fn compilability_table(reports: &[PipelineReport]) -> String {
    table(reports, &COMPILABILITY_ROWS, |a, i| {
        let c = &a.compilability;
        if c.total == 0 {
            return None;
        }
        Some(format!("{:.2}", [c.pct_before, c.pct_after, c.pct_increase][i]))
    })
}

/// NDCG@10 for the model's order and the re-ranked order.
pub fn ndcg_table(reports: &[PipelineReport]) -> String {
    table(reports, &NDCG_ROWS, |a, i| {
        let n = &a.ndcg;
        if n.prompts == 0 {
            return None;
        }
        Some(match i {
            0 => n.prompts.to_string(),
            1 => n.model_top_rel3.to_string(),
            2 => n.framework_top_rel3.to_string(),
            3 => format!("{:.4}", n.mean_model?),
            _ => format!("{:.4}", n.mean_framework?),
        })
    })
}

/// Mean seconds per phase; empty unless the run recorded timings.
pub fn timing_table(reports: &[PipelineReport]) -> String {
    table(reports, &TIMING_ROWS, |a, i| {
        let t = a.mean_timings?;
        Some(format!("{:.6}", [t.filtering_s, t.ranking_s, t.repair_prompt_s, t.total_s][i]))
    })
}
