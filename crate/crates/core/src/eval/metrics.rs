//! Confusion counts and threshold-free ranking metrics. Takeoff is the
//! positive class throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn confusion(y_true: &[Label], y_pred: &[Label]) -> Result<Confusion> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch(y_true.len(), y_pred.len()));
    }
    let mut c = Confusion::default();
    for (t, p) in y_true.iter().zip(y_pred) {
        match (t.is_positive(), p.is_positive()) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BasicMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mcc: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Zero denominators give 0 for precision, recall, F1 and MCC.
pub fn basic_metrics(c: &Confusion) -> BasicMetrics {
    let (tp, fp, tn, fn_) = (c.tp as f64, c.fp as f64, c.tn as f64, c.fn_ as f64);
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = ratio(2.0 * precision * recall, precision + recall);
    let den = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    let mcc = if den == 0.0 {
        0.0
    } else {
        (tp * tn - fp * fn_) / den.sqrt()
    };
    BasicMetrics {
        accuracy: ratio(tp + tn, c.total() as f64),
        precision,
        recall,
        f1,
        mcc,
    }
}

fn check_lengths(y_true: &[Label], scores: &[f64]) -> Result<()> {
    if y_true.len() != scores.len() {
        return Err(Error::LengthMismatch(y_true.len(), scores.len()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidData("scores contain NaN".into()));
    }
    Ok(())
}

/// Indices sorted by score, grouped into runs of equal scores.
fn tie_groups(scores: &[f64], descending: bool) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        let o = scores[a].total_cmp(&scores[b]);
        if descending {
            o.reverse()
        } else {
            o
        }
    });
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in idx {
        match groups.last_mut() {
            Some(g) if scores[g[0]] == scores[i] => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Mann-Whitney statistic with midranks for ties.
pub fn auroc(y_true: &[Label], scores: &[f64]) -> Result<f64> {
    check_lengths(y_true, scores)?;
    let n_pos = y_true.iter().filter(|l| l.is_positive()).count();
    let n_neg = y_true.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClassTruth);
    }
    let mut rank_sum = 0.0;
    let mut next_rank = 1.0;
    for g in tie_groups(scores, false) {
        let mid = next_rank + (g.len() as f64 - 1.0) / 2.0;
        rank_sum += mid * g.iter().filter(|&&i| y_true[i].is_positive()).count() as f64;
        next_rank += g.len() as f64;
    }
    let np = n_pos as f64;
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

/// Step-wise area under the precision-recall curve: one threshold per
/// distinct score, taken in descending order.
pub fn aupr(y_true: &[Label], scores: &[f64]) -> Result<f64> {
    check_lengths(y_true, scores)?;
    let n_pos = y_true.iter().filter(|l| l.is_positive()).count();
    if n_pos == 0 {
        return Err(Error::NoPositives);
    }
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut area = 0.0;
    for g in tie_groups(scores, true) {
        let pos = g.iter().filter(|&&i| y_true[i].is_positive()).count();
        tp += pos;
        fp += g.len() - pos;
        let recall = tp as f64 / n_pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(area)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Landing as L, Takeoff as T};

    #[test]
    fn confusion_examples() {
        let truth = [T, L, T, L];
        let c = confusion(&truth, &truth).unwrap();
        assert_eq!((c.fp, c.fn_), (0, 0));
        let c = confusion(&[T, L], &[T, T]).unwrap();
        assert_eq!((c.tp, c.fp), (1, 1));
        let inv: Vec<Label> = truth.iter().map(|&l| if l == T { L } else { T }).collect();
        let p = confusion(&truth, &truth).unwrap();
        let q = confusion(&truth, &inv).unwrap();
        assert_eq!((q.tp, q.fn_, q.tn, q.fp), (p.fn_, p.tp, p.fp, p.tn));
        assert!(matches!(confusion(&[T], &[]), Err(Error::LengthMismatch(1, 0))));
    }

    #[test]
    fn metric_examples() {
        let m = basic_metrics(&Confusion { tp: 2, fp: 1, tn: 3, fn_: 2 });
        assert!((m.precision - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.recall, 0.5);
        assert!((m.f1 - 0.571_428_571_428_571_4).abs() < 1e-12);
        assert!((m.mcc - 0.258_198_889_747_161_1).abs() < 1e-12);
        let perfect = basic_metrics(&Confusion { tp: 3, fp: 0, tn: 4, fn_: 0 });
        assert_eq!((perfect.accuracy, perfect.f1, perfect.mcc), (1.0, 1.0, 1.0));
        let inverted = basic_metrics(&Confusion { tp: 0, fp: 4, tn: 0, fn_: 3 });
        assert_eq!((inverted.accuracy, inverted.mcc), (0.0, -1.0));
        let degenerate = basic_metrics(&Confusion { tp: 0, fp: 0, tn: 5, fn_: 0 });
        assert_eq!((degenerate.precision, degenerate.f1, degenerate.mcc), (0.0, 0.0, 0.0));
    }

    #[test]
    fn auroc_examples() {
        assert_eq!(auroc(&[L, L, T, T], &[0.1, 0.2, 0.8, 0.9]).unwrap(), 1.0);
        assert_eq!(auroc(&[L, T, T, L], &[0.4; 4]).unwrap(), 0.5);
        assert!(matches!(auroc(&[T, T], &[0.1, 0.2]), Err(Error::SingleClassTruth)));
    }

    #[test]
    fn aupr_examples() {
        assert_eq!(aupr(&[L, T, T], &[0.1, 0.8, 0.9]).unwrap(), 1.0);
        assert!((aupr(&[L, T, L, L, T], &[0.3; 5]).unwrap() - 0.4).abs() < 1e-15);
        assert!(matches!(aupr(&[L, L], &[0.1, 0.2]), Err(Error::NoPositives)));
    }
}
