//! CSV and aligned-text renderings of evaluation results.

use std::fmt::Write as _;

use templatecut_core::eval::{ColumnStats, EvalReport, Summary};

type StatRow = (&'static str, fn(&ColumnStats) -> f64);

pub const CSV_HEADER: &str = "case,dsc_percent,vol_auto_cm,vol_ref_cm,voxels_auto,voxels_ref";

pub fn csv(cases: &[(String, EvalReport)]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (name, r) in cases {
        writeln!(out, "{},{},{},{},{},{}", name, r.dsc, r.vol_auto, r.vol_ref, r.voxels_auto, r.voxels_ref).unwrap();
    }
    out
}

/// One row per case, then min, max, mean and standard deviation rows.
pub fn table(cases: &[(String, EvalReport)], summary: Option<&Summary>) -> String {
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut header = vec!["Case".to_string()];
    header.extend(EvalReport::COLUMNS.iter().map(|s| s.to_string()));
    rows.push(header);
    for (name, r) in cases {
        let mut row = vec![name.clone()];
        row.extend([
            format!("{:.2}", r.dsc),
            format!("{:.2}", r.vol_auto),
            format!("{:.2}", r.vol_ref),
            r.voxels_auto.to_string(),
            r.voxels_ref.to_string(),
        ]);
        rows.push(row);
    }
    if let Some(s) = summary {
        let stat_rows: [StatRow; 4] =
            [("min", |c| c.min), ("max", |c| c.max), ("mean", |c| c.mean), ("std", |c| c.std)];
        for (label, get) in stat_rows {
            let mut row = vec![label.to_string()];
            row.extend(s.columns.iter().map(|c| format!("{:.2}", get(c))));
            rows.push(row);
        }
    }
    let widths: Vec<usize> = (0..rows[0].len()).map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (cell, w))| if c == 0 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
        if i == 0 || (summary.is_some() && i == cases.len()) {
            out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
            out.push('\n');
        }
    }
    out
}
