//! Wall time and peak memory of several runs, relative to a reference run.

use crate::compare::RunData;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimingRow {
    pub run: String,
    #[serde(rename = "wall_time [s]")]
    pub wall_time_s: f64,
    #[serde(rename = "peak_rss [KiB]")]
    pub peak_rss_kib: Option<u64>,
    #[serde(rename = "relative_time [1]")]
    pub relative_time: f64,
    #[serde(rename = "relative_memory [1]")]
    pub relative_memory: Option<f64>,
}

pub const TIMING_HEADER: [&str; 5] =
    ["run", "wall_time [s]", "peak_rss [KiB]", "relative_time [1]", "relative_memory [1]"];

/// `(label, wall time, peak RSS)` per run, normalized by entry `reference`.
pub fn timing_report(runs: &[(String, f64, Option<u64>)], reference: usize) -> Vec<TimingRow> {
    let (_, t_ref, m_ref) = &runs[reference];
    runs.iter()
        .map(|(label, t, m)| TimingRow {
            run: label.clone(),
            wall_time_s: *t,
            peak_rss_kib: *m,
            relative_time: t / t_ref,
            relative_memory: match (m, m_ref) {
                (Some(a), Some(b)) if *b > 0 => Some(*a as f64 / *b as f64),
                _ => None,
            },
        })
        .collect()
}

pub fn timing_entries(runs: &[RunData]) -> Vec<(String, f64, Option<u64>)> {
    runs.iter()
        .map(|r| (r.label(), r.manifest.timing.total_s, r.manifest.timing.peak_rss_kib))
        .collect()
}

/// Aligned plain-text table.
pub fn format_table(rows: &[TimingRow]) -> String {
    let cells: Vec<[String; 5]> = rows
        .iter()
        .map(|r| {
            [
                r.run.clone(),
                format!("{:.3}", r.wall_time_s),
                r.peak_rss_kib.map_or("-".to_string(), |m| m.to_string()),
                format!("{:.3}", r.relative_time),
                r.relative_memory.map_or("-".to_string(), |m| format!("{m:.3}")),
            ]
        })
        .collect();
    let head = ["run", "wall [s]", "peak RSS [KiB]", "time / ref", "memory / ref"];
    let mut width: Vec<usize> = head.iter().map(|h| h.len()).collect();
    for c in &cells {
        for (w, s) in width.iter_mut().zip(c) {
            *w = (*w).max(s.len());
        }
    }
    let line = |c: &[String]| {
        let mut s = format!("{:<w$}", c[0], w = width[0]);
        for (v, w) in c.iter().zip(&width).skip(1) {
            s.push_str(&format!("  {v:>w$}"));
        }
        s.push('\n');
        s
    };
    let mut out = line(&head.map(String::from));
    out.push_str(&line(&width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>()));
    for c in &cells {
        out.push_str(&line(c));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_row_is_one() {
        let runs = vec![
            ("M50".to_string(), 4.0, Some(2000)),
            ("N1000".to_string(), 2.0, Some(1000)),
            ("N8000".to_string(), 40.0, None),
        ];
        let rows = timing_report(&runs, 0);
        assert_eq!(rows[0].relative_time, 1.0);
        assert_eq!(rows[0].relative_memory, Some(1.0));
        assert_eq!(rows[1].relative_time, 0.5);
        assert_eq!(rows[2].relative_memory, None);
        let text = format_table(&rows);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines.iter().all(|l| l.len() == lines[0].len()), "{text}");
    }
}
