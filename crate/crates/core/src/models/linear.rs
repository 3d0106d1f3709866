//! Logistic regression and a linear SVM with Platt-scaled probabilities.

use serde::{Deserialize, Serialize};

use super::params::{Params, Tensor};
use super::{check_training_set, Classifier};
use crate::error::Result;
use crate::label::Label;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `-ln(sigmoid(z))` without overflow.
fn softplus_neg(z: f64) -> f64 {
    (-z).max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Binary cross-entropy of a logit against a 0/1 target.
pub fn logit_bce(z: f64, y: f64) -> f64 {
    y * softplus_neg(z) + (1.0 - y) * softplus_neg(-z)
}

fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogregHyper {
    pub lr: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LogregHyper {
    fn default() -> Self {
        LogregHyper {
            lr: 0.5,
            epochs: 500,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegression {
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// Mean log loss plus `l2/2 * |w|^2` and its gradient `(dw, db)`.
pub fn logreg_loss_and_grad(
    weights: &[f64],
    bias: f64,
    x: &[Vec<f64>],
    y: &[Label],
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = x.len().max(1) as f64;
    let mut loss = 0.0;
    let mut gw = vec![0.0; weights.len()];
    let mut gb = 0.0;
    for (row, label) in x.iter().zip(y) {
        let z = dot(weights, row) + bias;
        let t = label.target();
        loss += logit_bce(z, t);
        let r = sigmoid(z) - t;
        for (g, v) in gw.iter_mut().zip(row) {
            *g += r * v;
        }
        gb += r;
    }
    loss /= n;
    gb /= n;
    for (g, w) in gw.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
    }
    loss += 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    (loss, gw, gb)
}

/// Full-batch gradient descent from zero weights.
pub fn train_logreg(x: &[Vec<f64>], y: &[Label], hyper: &LogregHyper) -> Result<LogisticRegression> {
    let d = check_training_set(x, y)?;
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    for _ in 0..hyper.epochs {
        let (_, gw, gb) = logreg_loss_and_grad(&w, b, x, y, hyper.l2);
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= hyper.lr * g;
        }
        b -= hyper.lr * gb;
    }
    Ok(LogisticRegression { weights: w, bias: b })
}

impl LogisticRegression {
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    pub fn to_params(&self) -> Params {
        let mut p = Params::default();
        p.put("weights", Tensor::vector(self.weights.clone()))
            .put("bias", Tensor::scalar(self.bias));
        p
    }

    pub fn from_params(p: &Params) -> Result<Self> {
        Ok(LogisticRegression {
            weights: p.vector("weights")?,
            bias: p.scalar("bias")?,
        })
    }
}

impl Classifier for LogisticRegression {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn predict_proba(&self, x: &[f64]) -> [f64; 2] {
        let p = sigmoid(self.decision(x));
        [1.0 - p, p]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmHyper {
    pub lr: f64,
    pub epochs: usize,
    #[serde(rename = "C")]
    pub c: f64,
}

impl Default for SvmHyper {
    fn default() -> Self {
        SvmHyper {
            lr: 0.01,
            epochs: 1000,
            c: 10.0,
        }
    }
}

/// Linear SVM; `P(takeoff) = sigmoid(platt_a * margin + platt_b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub platt_a: f64,
    pub platt_b: f64,
}

fn sign(label: Label) -> f64 {
    if label.is_positive() {
        1.0
    } else {
        -1.0
    }
}

/// `0.5 |w|^2 + C * mean hinge`.
pub fn svm_objective(w: &[f64], b: f64, x: &[Vec<f64>], y: &[Label], c: f64) -> f64 {
    let n = x.len().max(1) as f64;
    let hinge: f64 = x
        .iter()
        .zip(y)
        .map(|(row, &l)| (1.0 - sign(l) * (dot(w, row) + b)).max(0.0))
        .sum();
    0.5 * dot(w, w) + c * hinge / n
}

/// Full-batch subgradient descent on the hinge objective from zero weights
/// with step `lr / sqrt(1 + t/100)`, keeping the iterate with the lowest
/// objective; then a Platt fit on the training margins.
pub fn train_svm(x: &[Vec<f64>], y: &[Label], hyper: &SvmHyper) -> Result<LinearSvm> {
    let d = check_training_set(x, y)?;
    let n = x.len() as f64;
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut best = (svm_objective(&w, b, x, y, hyper.c), w.clone(), b);
    for t in 0..hyper.epochs {
        let step = hyper.lr / (1.0 + t as f64 / 100.0).sqrt();
        let mut gw = w.clone();
        let mut gb = 0.0;
        for (row, &l) in x.iter().zip(y) {
            let s = sign(l);
            if s * (dot(&w, row) + b) < 1.0 {
                let k = hyper.c * s / n;
                for (g, v) in gw.iter_mut().zip(row) {
                    *g -= k * v;
                }
                gb -= k;
            }
        }
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= step * g;
        }
        b -= step * gb;
        let obj = svm_objective(&w, b, x, y, hyper.c);
        if obj < best.0 {
            best = (obj, w.clone(), b);
        }
    }
    let (_, w, b) = best;
    let margins: Vec<f64> = x.iter().map(|row| dot(&w, row) + b).collect();
    let (platt_a, platt_b) = platt_fit(&margins, y);
    Ok(LinearSvm {
        weights: w,
        bias: b,
        platt_a,
        platt_b,
    })
}

/// Fits `P(takeoff | m) = sigmoid(a m + b)` by Newton's method with
/// Platt's smoothed targets.
pub fn platt_fit(margins: &[f64], y: &[Label]) -> (f64, f64) {
    let n_pos = y.iter().filter(|l| l.is_positive()).count() as f64;
    let n_neg = y.len() as f64 - n_pos;
    let hi = (n_pos + 1.0) / (n_pos + 2.0);
    let lo = 1.0 / (n_neg + 2.0);
    let targets: Vec<f64> = y.iter().map(|l| if l.is_positive() { hi } else { lo }).collect();
    let objective = |a: f64, b: f64| -> f64 {
        margins
            .iter()
            .zip(&targets)
            .map(|(&m, &t)| logit_bce(a * m + b, t))
            .sum()
    };
    let mut a = 0.0;
    let mut b = ((n_pos + 1.0) / (n_neg + 1.0)).ln();
    let mut f = objective(a, b);
    for _ in 0..100 {
        let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (0.0, 0.0, 1e-12, 0.0, 1e-12);
        for (&m, &t) in margins.iter().zip(&targets) {
            let p = sigmoid(a * m + b);
            let r = p - t;
            let h = p * (1.0 - p);
            ga += r * m;
            gb += r;
            haa += h * m * m;
            hab += h * m;
            hbb += h;
        }
        if ga.abs() < 1e-10 && gb.abs() < 1e-10 {
            break;
        }
        let det = haa * hbb - hab * hab;
        if det <= 0.0 {
            break;
        }
        let da = (hbb * ga - hab * gb) / det;
        let db = (haa * gb - hab * ga) / det;
        let mut step = 1.0;
        let mut improved = false;
        while step > 1e-10 {
            let (na, nb) = (a - step * da, b - step * db);
            let nf = objective(na, nb);
            if nf < f + 1e-4 * step * (ga * -da + gb * -db) {
                a = na;
                b = nb;
                f = nf;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (a, b)
}

impl LinearSvm {
    pub fn margin(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    pub fn platt(&self, margin: f64) -> f64 {
        sigmoid(self.platt_a * margin + self.platt_b)
    }

    pub fn to_params(&self) -> Params {
        let mut p = Params::default();
        p.put("weights", Tensor::vector(self.weights.clone()))
            .put("bias", Tensor::scalar(self.bias))
            .put("platt", Tensor::vector(vec![self.platt_a, self.platt_b]));
        p
    }

    pub fn from_params(p: &Params) -> Result<Self> {
        let platt = p.vector("platt")?;
        if platt.len() != 2 {
            return Err(crate::Error::Serialization("platt tensor needs 2 values".into()));
        }
        Ok(LinearSvm {
            weights: p.vector("weights")?,
            bias: p.scalar("bias")?,
            platt_a: platt[0],
            platt_b: platt[1],
        })
    }
}

impl Classifier for LinearSvm {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn predict_proba(&self, x: &[f64]) -> [f64; 2] {
        let p = self.platt(self.margin(x));
        [1.0 - p, p]
    }
}
