//! Report rows and their CSV, table and plot-data renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::{aupr, auroc, basic_metrics, confusion, Confusion};
use crate::error::Result;
use crate::label::Label;
use crate::models::{ModelKind, TrainedModel};

pub const CSV_HEADER: &str = "model,pipeline,augmented,acc,prec,rec,f1,mcc,auroc,aupr,tp,fp,tn,fn,seed";
pub const POSITIVE_CLASS: Label = Label::Takeoff;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: ModelKind,
    pub pipeline: String,
    pub augmented: bool,
    pub seed: u64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mcc: f64,
    pub auroc: f64,
    pub aupr: f64,
    pub confusion: Confusion,
    pub n_train: usize,
    pub n_test: usize,
    /// Hash of the ordered test ids, equal across the cells of one run.
    pub test_fingerprint: u64,
}

/// Cell identity of a report.
#[derive(Debug, Clone)]
pub struct CellInfo {
    pub model: ModelKind,
    pub pipeline: String,
    pub augmented: bool,
    pub seed: u64,
    pub n_train: usize,
    pub test_fingerprint: u64,
}

/// Scores `model` on the rows of `x`.
pub fn evaluate(model: &TrainedModel, x: &[Vec<f64>], y: &[Label], cell: CellInfo) -> Result<MetricsReport> {
    let mut scores = Vec::with_capacity(x.len());
    let mut preds = Vec::with_capacity(x.len());
    for row in x {
        let p = model.predict_proba(row)?;
        scores.push(p[1]);
        preds.push(model.predict(row)?);
    }
    score_predictions(y, &preds, &scores, cell)
}

pub fn score_predictions(y: &[Label], preds: &[Label], scores: &[f64], cell: CellInfo) -> Result<MetricsReport> {
    let c = confusion(y, preds)?;
    let m = basic_metrics(&c);
    Ok(MetricsReport {
        model: cell.model,
        pipeline: cell.pipeline,
        augmented: cell.augmented,
        seed: cell.seed,
        accuracy: m.accuracy,
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
        mcc: m.mcc,
        auroc: auroc(y, scores)?,
        aupr: aupr(y, scores)?,
        confusion: c,
        n_train: cell.n_train,
        n_test: y.len(),
        test_fingerprint: cell.test_fingerprint,
    })
}

fn f(v: f64) -> String {
    format!("{v:.6}")
}

pub fn csv_row(r: &MetricsReport) -> String {
    let c = &r.confusion;
    [
        r.model.to_string(),
        r.pipeline.clone(),
        r.augmented.to_string(),
        f(r.accuracy),
        f(r.precision),
        f(r.recall),
        f(r.f1),
        f(r.mcc),
        f(r.auroc),
        f(r.aupr),
        c.tp.to_string(),
        c.fp.to_string(),
        c.tn.to_string(),
        c.fn_.to_string(),
        r.seed.to_string(),
    ]
    .join(",")
}

pub fn reports_to_csv(reports: &[MetricsReport]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in reports {
        s.push_str(&csv_row(r));
        s.push('\n');
    }
    s
}

/// Parses rows written by [`reports_to_csv`]. Sizes and fingerprints are
/// not part of the CSV and come back as zero.
pub fn reports_from_csv(text: &str) -> Result<Vec<MetricsReport>> {
    use crate::error::Error;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if n == 0 || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 15 {
            return Err(Error::InvalidData(format!("report line {} has {} columns", n + 1, cols.len())));
        }
        let num = |i: usize| -> Result<f64> {
            cols[i]
                .parse()
                .map_err(|_| Error::InvalidData(format!("report line {}: bad number {:?}", n + 1, cols[i])))
        };
        let int = |i: usize| -> Result<usize> {
            cols[i]
                .parse()
                .map_err(|_| Error::InvalidData(format!("report line {}: bad count {:?}", n + 1, cols[i])))
        };
        out.push(MetricsReport {
            model: cols[0].parse()?,
            pipeline: cols[1].to_string(),
            augmented: cols[2] == "true",
            accuracy: num(3)?,
            precision: num(4)?,
            recall: num(5)?,
            f1: num(6)?,
            mcc: num(7)?,
            auroc: num(8)?,
            aupr: num(9)?,
            confusion: Confusion {
                tp: int(10)?,
                fp: int(11)?,
                tn: int(12)?,
                fn_: int(13)?,
            },
            seed: cols[14]
                .parse()
                .map_err(|_| Error::InvalidData(format!("report line {}: bad seed", n + 1)))?,
            n_train: 0,
            n_test: int(10)? + int(11)? + int(12)? + int(13)?,
            test_fingerprint: 0,
        });
    }
    Ok(out)
}

pub fn format_table(reports: &[MetricsReport]) -> String {
    let mut s = format!(
        "{:<9} {:<17} {:<5} {:>6} {:>6} {:>6} {:>6} {:>7} {:>6} {:>6}\n",
        "model", "pipeline", "aug", "acc", "prec", "rec", "f1", "mcc", "auroc", "aupr"
    );
    for r in reports {
        let _ = writeln!(
            s,
            "{:<9} {:<17} {:<5} {:>6.3} {:>6.3} {:>6.3} {:>6.3} {:>7.3} {:>6.3} {:>6.3}",
            r.model.as_str(),
            r.pipeline,
            if r.augmented { "on" } else { "off" },
            r.accuracy,
            r.precision,
            r.recall,
            r.f1,
            r.mcc,
            r.auroc,
            r.aupr
        );
    }
    let seeds: std::collections::BTreeSet<u64> = reports.iter().map(|r| r.seed).collect();
    let seeds: Vec<String> = seeds.iter().map(u64::to_string).collect();
    let _ = writeln!(s, "positive class: {POSITIVE_CLASS}; seed: {}", seeds.join(","));
    s
}

/// `(f1, mcc)` pairs, one row per cell.
pub fn f1_mcc_csv(reports: &[MetricsReport]) -> String {
    let mut s = String::from("model,pipeline,augmented,seed,f1,mcc\n");
    for r in reports {
        let _ = writeln!(s, "{},{},{},{},{},{}", r.model, r.pipeline, r.augmented, r.seed, f(r.f1), f(r.mcc));
    }
    s
}

/// `(auroc, aupr)` pairs, one row per cell.
pub fn auroc_aupr_csv(reports: &[MetricsReport]) -> String {
    let mut s = String::from("model,pipeline,augmented,seed,auroc,aupr\n");
    for r in reports {
        let _ = writeln!(s, "{},{},{},{},{},{}", r.model, r.pipeline, r.augmented, r.seed, f(r.auroc), f(r.aupr));
    }
    s
}

pub const METRIC_NAMES: [&str; 7] = ["acc", "prec", "rec", "f1", "mcc", "auroc", "aupr"];

pub fn metric_values(r: &MetricsReport) -> [f64; 7] {
    [r.accuracy, r.precision, r.recall, r.f1, r.mcc, r.auroc, r.aupr]
}

/// All seven metrics per cell, for correlation plots.
pub fn metric_matrix_csv(reports: &[MetricsReport]) -> String {
    let mut s = format!("model,pipeline,augmented,seed,{}\n", METRIC_NAMES.join(","));
    for r in reports {
        let vals: Vec<String> = metric_values(r).iter().map(|&v| f(v)).collect();
        let _ = writeln!(s, "{},{},{},{},{}", r.model, r.pipeline, r.augmented, r.seed, vals.join(","));
    }
    s
}

/// Mean and sample standard deviation of each metric over repeated runs
/// of the same cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub model: ModelKind,
    pub pipeline: String,
    pub augmented: bool,
    pub runs: usize,
    pub mean: [f64; 7],
    pub sd: [f64; 7],
}

pub fn summarize(reports: &[MetricsReport]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, ModelKind, bool), Vec<[f64; 7]>> = BTreeMap::new();
    let mut order = Vec::new();
    for r in reports {
        let key = (r.pipeline.clone(), r.model, r.augmented);
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(metric_values(r));
    }
    order
        .into_iter()
        .map(|key| {
            let rows = &groups[&key];
            let n = rows.len() as f64;
            let mut mean = [0.0; 7];
            let mut sd = [0.0; 7];
            for k in 0..7 {
                mean[k] = rows.iter().map(|r| r[k]).sum::<f64>() / n;
                sd[k] = if rows.len() > 1 {
                    (rows.iter().map(|r| (r[k] - mean[k]).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
                } else {
                    0.0
                };
            }
            SummaryRow {
                model: key.1,
                pipeline: key.0,
                augmented: key.2,
                runs: rows.len(),
                mean,
                sd,
            }
        })
        .collect()
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from("model,pipeline,augmented,runs");
    for m in METRIC_NAMES {
        let _ = write!(s, ",{m}_mean,{m}_sd");
    }
    s.push('\n');
    for r in rows {
        let _ = write!(s, "{},{},{},{}", r.model, r.pipeline, r.augmented, r.runs);
        for k in 0..7 {
            let _ = write!(s, ",{},{}", f(r.mean[k]), f(r.sd[k]));
        }
        s.push('\n');
    }
    s
}
