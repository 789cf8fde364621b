//! Run comparison: join summaries from several run directories into one
//! markdown + CSV table.
//!
//! Joins are gated on the dataset content hash; comparing runs over
//! different datasets is refused outright.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use crate::runner::RunSummary;

pub struct ReportRow {
    pub name: String,
    pub summary: RunSummary,
    /// aut_precision relative to the delay-0 run with the same config key.
    pub precision_drop: Option<f64>,
}

pub fn load_summaries(run_dirs: &[PathBuf]) -> Result<Vec<(String, RunSummary)>> {
    let mut out = Vec::new();
    for dir in run_dirs {
        let path = if dir.is_dir() { dir.join("summary.json") } else { dir.clone() };
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("reading {}", path.display()))?;
        let summary: RunSummary = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", path.display()))?;
        if summary.kind != "prequential" {
            bail!(
                "{} is a {} summary; reports compare prequential runs",
                path.display(),
                summary.kind
            );
        }
        let name = dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string());
        out.push((name, summary));
    }
    if out.is_empty() {
        bail!("no run directories given");
    }
    Ok(out)
}

pub fn build_rows(summaries: Vec<(String, RunSummary)>) -> Result<Vec<ReportRow>> {
    let first_hash = summaries[0].1.dataset_sha256.clone();
    for (name, s) in &summaries {
        if s.dataset_sha256 != first_hash {
            bail!(
                "run {name} was produced on a different dataset \
                 ({} vs {first_hash}); refusing an apples-to-oranges comparison",
                s.dataset_sha256
            );
        }
    }

    // Delay-0 baseline per config key.
    let mut baselines: std::collections::BTreeMap<String, f64> = Default::default();
    for (_, s) in &summaries {
        if s.delay_days == 0 {
            baselines.insert(s.config_key.clone(), s.aut_precision);
        }
    }

    Ok(summaries
        .into_iter()
        .map(|(name, summary)| {
            let precision_drop = baselines.get(&summary.config_key).and_then(|base| {
                (*base > 0.0).then(|| summary.aut_precision / base)
            });
            ReportRow { name, summary, precision_drop }
        })
        .collect())
}

pub fn markdown_table(rows: &[ReportRow]) -> String {
    let mut md = String::new();
    md.push_str("| run | config | delay | final F1 | AUT(F1) | AUT(precision) | drifts | precision vs delay-0 |\n");
    md.push_str("|---|---|---:|---:|---:|---:|---:|---:|\n");
    for row in rows {
        let s = &row.summary;
        let drop = row
            .precision_drop
            .map(|d| format!("{d:.3}"))
            .unwrap_or_else(|| "-".into());
        md.push_str(&format!(
            "| {} | {} | {} | {:.4} | {:.4} | {:.4} | {} | {} |\n",
            row.name,
            s.config_key,
            s.delay_days,
            s.r#final.f1,
            s.aut_f1,
            s.aut_precision,
            s.drifts.len(),
            drop
        ));
    }
    md
}

pub fn csv_table(rows: &[ReportRow]) -> String {
    let mut csv = String::from(
        "run,config_key,delay_days,final_f1,aut_f1,aut_precision,drifts,precision_drop_vs_delay0\n",
    );
    for row in rows {
        let s = &row.summary;
        let drop = row.precision_drop.map(|d| d.to_string()).unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.name,
            s.config_key,
            s.delay_days,
            s.r#final.f1,
            s.aut_f1,
            s.aut_precision,
            s.drifts.len(),
            drop
        ));
    }
    csv
}

pub fn cmd_report(run_dirs: &[PathBuf], out_dir: Option<&Path>) -> Result<()> {
    let rows = build_rows(load_summaries(run_dirs)?)?;
    let md = markdown_table(&rows);
    print!("{md}");
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.md"), &md)?;
        std::fs::write(dir.join("report.csv"), csv_table(&rows))?;
        println!("\nwrote {}/report.md and report.csv", dir.display());
    }
    Ok(())
}
