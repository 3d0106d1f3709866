//! Small convolutional network over a single-channel spectrogram:
//! two blocks of 3x3 "same" convolution + ReLU + 2x2 max-pool, then
//! dense(ReLU) and a sigmoid output, trained with Adam on binary
//! cross-entropy.

use std::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::linear::{logit_bce, sigmoid};
use super::params::{Params, Tensor};
use super::Classifier;
use crate::error::{Error, Result};
use crate::label::Label;
use crate::rng::rng_for;
use crate::spectral::{Spectrogram, N_FRAMES, N_MELS};
use crate::Scalar;

const K: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnnSpec {
    pub input_rows: usize,
    pub input_cols: usize,
    pub conv1_filters: usize,
    pub conv2_filters: usize,
    pub dense_units: usize,
}

impl Default for CnnSpec {
    fn default() -> Self {
        CnnSpec {
            input_rows: N_MELS,
            input_cols: N_FRAMES,
            conv1_filters: 8,
            conv2_filters: 16,
            dense_units: 32,
        }
    }
}

/// Offsets of each tensor inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub conv1_w: Range<usize>,
    pub conv1_b: Range<usize>,
    pub conv2_w: Range<usize>,
    pub conv2_b: Range<usize>,
    pub dense1_w: Range<usize>,
    pub dense1_b: Range<usize>,
    pub dense2_w: Range<usize>,
    pub dense2_b: Range<usize>,
}

impl Layout {
    pub fn total(&self) -> usize {
        self.dense2_b.end
    }

    pub fn named(&self) -> [(&'static str, Range<usize>); 8] {
        [
            ("conv1_w", self.conv1_w.clone()),
            ("conv1_b", self.conv1_b.clone()),
            ("conv2_w", self.conv2_w.clone()),
            ("conv2_b", self.conv2_b.clone()),
            ("dense1_w", self.dense1_w.clone()),
            ("dense1_b", self.dense1_b.clone()),
            ("dense2_w", self.dense2_w.clone()),
            ("dense2_b", self.dense2_b.clone()),
        ]
    }
}

impl CnnSpec {
    pub fn validate(&self) -> Result<()> {
        if self.input_rows < 4 || self.input_cols < 4 {
            return Err(Error::InvalidConfig("CNN input must be at least 4x4".into()));
        }
        if self.conv1_filters == 0 || self.conv2_filters == 0 || self.dense_units == 0 {
            return Err(Error::InvalidConfig("CNN layer widths must be positive".into()));
        }
        Ok(())
    }

    pub fn input_len(&self) -> usize {
        self.input_rows * self.input_cols
    }

    fn pooled1(&self) -> (usize, usize) {
        (self.input_rows / 2, self.input_cols / 2)
    }

    fn pooled2(&self) -> (usize, usize) {
        let (r, c) = self.pooled1();
        (r / 2, c / 2)
    }

    pub fn flat_len(&self) -> usize {
        let (r, c) = self.pooled2();
        self.conv2_filters * r * c
    }

    pub fn layout(&self) -> Layout {
        let mut at = 0;
        let mut take = |n: usize| {
            let r = at..at + n;
            at += n;
            r
        };
        let (f1, f2, u) = (self.conv1_filters, self.conv2_filters, self.dense_units);
        Layout {
            conv1_w: take(f1 * K * K),
            conv1_b: take(f1),
            conv2_w: take(f2 * f1 * K * K),
            conv2_b: take(f2),
            dense1_w: take(u * self.flat_len()),
            dense1_b: take(u),
            dense2_w: take(u),
            dense2_b: take(1),
        }
    }
}

/// 3x3 convolution with zero padding keeping `rows x cols`. Input and output
/// are channel-major; weights are `[out][in][ky][kx]`.
fn conv_same(input: &[f64], in_ch: usize, rows: usize, cols: usize, w: &[f64], b: &[f64]) -> Vec<f64> {
    let out_ch = b.len();
    let plane = rows * cols;
    let mut out = vec![0.0; out_ch * plane];
    for o in 0..out_ch {
        let dst = &mut out[o * plane..(o + 1) * plane];
        dst.fill(b[o]);
        for i in 0..in_ch {
            let src = &input[i * plane..(i + 1) * plane];
            for ky in 0..K {
                for kx in 0..K {
                    let wv = w[((o * in_ch + i) * K + ky) * K + kx];
                    if wv == 0.0 {
                        continue;
                    }
                    let (rs, cs) = (shift_range(rows, ky), shift_range(cols, kx));
                    for r in rs {
                        let sr = r + ky - 1;
                        let d = &mut dst[r * cols + cs.start..r * cols + cs.end];
                        let s = &src[sr * cols + cs.start + kx - 1..sr * cols + cs.end + kx - 1];
                        for (dv, sv) in d.iter_mut().zip(s) {
                            *dv += wv * sv;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Output positions whose source `pos + k - 1` stays in range.
fn shift_range(n: usize, k: usize) -> Range<usize> {
    let lo = if k == 0 { 1 } else { 0 };
    let hi = if k == K - 1 { n - 1 } else { n };
    lo..hi
}

/// Gradients of `conv_same` with respect to weights (accumulated into `gw`,
/// `gb`) and, if requested, the input.
fn conv_same_backward(
    input: &[f64],
    in_ch: usize,
    rows: usize,
    cols: usize,
    w: &[f64],
    dout: &[f64],
    gw: &mut [f64],
    gb: &mut [f64],
    mut din: Option<&mut [f64]>,
) {
    let out_ch = gb.len();
    let plane = rows * cols;
    for o in 0..out_ch {
        let dz = &dout[o * plane..(o + 1) * plane];
        gb[o] += dz.iter().sum::<f64>();
        for i in 0..in_ch {
            let src = &input[i * plane..(i + 1) * plane];
            for ky in 0..K {
                for kx in 0..K {
                    let widx = ((o * in_ch + i) * K + ky) * K + kx;
                    let (rs, cs) = (shift_range(rows, ky), shift_range(cols, kx));
                    let mut acc = 0.0;
                    for r in rs.clone() {
                        let sr = r + ky - 1;
                        let d = &dz[r * cols + cs.start..r * cols + cs.end];
                        let s = &src[sr * cols + cs.start + kx - 1..sr * cols + cs.end + kx - 1];
                        acc += d.iter().zip(s).map(|(a, b)| a * b).sum::<f64>();
                    }
                    gw[widx] += acc;
                    if let Some(din) = din.as_deref_mut() {
                        let wv = w[widx];
                        if wv == 0.0 {
                            continue;
                        }
                        let dplane = &mut din[i * plane..(i + 1) * plane];
                        for r in rs {
                            let sr = r + ky - 1;
                            let d = &dz[r * cols + cs.start..r * cols + cs.end];
                            let t = &mut dplane[sr * cols + cs.start + kx - 1..sr * cols + cs.end + kx - 1];
                            for (tv, dv) in t.iter_mut().zip(d) {
                                *tv += wv * dv;
                            }
                        }
                    }
                }
            }
        }
    }
}

/// 2x2 max-pool with stride 2 (odd trailing rows/cols dropped). Returns the
/// pooled values and, for each, the flat index of the winning input; the
/// first maximum in row-major window order wins.
pub fn max_pool(input: &[f64], ch: usize, rows: usize, cols: usize) -> (Vec<f64>, Vec<usize>) {
    let (pr, pc) = (rows / 2, cols / 2);
    let mut out = Vec::with_capacity(ch * pr * pc);
    let mut arg = Vec::with_capacity(ch * pr * pc);
    for c in 0..ch {
        let base = c * rows * cols;
        for r in 0..pr {
            for q in 0..pc {
                let cands = [
                    base + 2 * r * cols + 2 * q,
                    base + 2 * r * cols + 2 * q + 1,
                    base + (2 * r + 1) * cols + 2 * q,
                    base + (2 * r + 1) * cols + 2 * q + 1,
                ];
                let mut best = cands[0];
                for &k in &cands[1..] {
                    if input[k] > input[best] {
                        best = k;
                    }
                }
                out.push(input[best]);
                arg.push(best);
            }
        }
    }
    (out, arg)
}

fn relu_in_place(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

struct Trace {
    a1: Vec<f64>,
    p1: Vec<f64>,
    arg1: Vec<usize>,
    a2: Vec<f64>,
    flat: Vec<f64>,
    arg2: Vec<usize>,
    a3: Vec<f64>,
    logit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cnn {
    pub spec: CnnSpec,
    pub params: Vec<f64>,
    /// Mean training loss per epoch.
    pub loss_trace: Vec<f64>,
}

impl Cnn {
    pub fn zeros(spec: CnnSpec) -> Self {
        let n = spec.layout().total();
        Cnn {
            spec,
            params: vec![0.0; n],
            loss_trace: Vec::new(),
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(spec: CnnSpec, seed: u64) -> Self {
        let mut m = Cnn::zeros(spec);
        let l = spec.layout();
        let mut rng = rng_for(seed, "cnn/init");
        let (f1, f2, u) = (spec.conv1_filters, spec.conv2_filters, spec.dense_units);
        let blocks = [
            (l.conv1_w, K * K, f1 * K * K),
            (l.conv2_w, f1 * K * K, f2 * K * K),
            (l.dense1_w, spec.flat_len(), u),
            (l.dense2_w, u, 1),
        ];
        for (range, fan_in, fan_out) in blocks {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for w in &mut m.params[range] {
                *w = rng.random_range(-limit..limit);
            }
        }
        m
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.spec.input_len() {
            return Err(Error::ShapeMismatch {
                expected: (self.spec.input_rows, self.spec.input_cols),
                actual: (x.len() / self.spec.input_cols.max(1), x.len() % self.spec.input_cols.max(1)),
            });
        }
        Ok(())
    }

    fn forward_trace(&self, x: &[f64]) -> Trace {
        let s = &self.spec;
        let l = s.layout();
        let p = &self.params;
        let (r0, c0) = (s.input_rows, s.input_cols);
        let (r1, c1) = s.pooled1();
        let mut a1 = conv_same(x, 1, r0, c0, &p[l.conv1_w.clone()], &p[l.conv1_b.clone()]);
        relu_in_place(&mut a1);
        let (p1, arg1) = max_pool(&a1, s.conv1_filters, r0, c0);
        let mut a2 = conv_same(&p1, s.conv1_filters, r1, c1, &p[l.conv2_w.clone()], &p[l.conv2_b.clone()]);
        relu_in_place(&mut a2);
        let (flat, arg2) = max_pool(&a2, s.conv2_filters, r1, c1);
        let w3 = &p[l.dense1_w.clone()];
        let b3 = &p[l.dense1_b.clone()];
        let n = flat.len();
        let a3: Vec<f64> = (0..s.dense_units)
            .map(|u| {
                let z = b3[u] + w3[u * n..(u + 1) * n].iter().zip(&flat).map(|(a, b)| a * b).sum::<f64>();
                z.max(0.0)
            })
            .collect();
        let w4 = &p[l.dense2_w.clone()];
        let logit = p[l.dense2_b.start] + w4.iter().zip(&a3).map(|(a, b)| a * b).sum::<f64>();
        Trace {
            a1,
            p1,
            arg1,
            a2,
            flat,
            arg2,
            a3,
            logit,
        }
    }

    /// Probability of takeoff for a flattened row-major input.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        Ok(sigmoid(self.forward_trace(x).logit))
    }

    pub fn forward_spectrogram<T: Scalar>(&self, spec: &Spectrogram<T>) -> Result<f64> {
        if spec.shape() != (self.spec.input_rows, self.spec.input_cols) {
            return Err(Error::ShapeMismatch {
                expected: (self.spec.input_rows, self.spec.input_cols),
                actual: spec.shape(),
            });
        }
        let x: Vec<f64> = spec.values.iter().map(|v| v.as_f64()).collect();
        self.forward(&x)
    }

    /// Adds `d(BCE)/d(params) * scale` for one example to `grad`; returns the loss.
    fn backward(&self, x: &[f64], y: f64, scale: f64, grad: &mut [f64]) -> f64 {
        let s = &self.spec;
        let l = s.layout();
        let p = &self.params;
        let t = self.forward_trace(x);
        let loss = logit_bce(t.logit, y);
        let dz4 = (sigmoid(t.logit) - y) * scale;

        grad[l.dense2_b.start] += dz4;
        let w4 = &p[l.dense2_w.clone()];
        let mut dz3 = vec![0.0; s.dense_units];
        for u in 0..s.dense_units {
            grad[l.dense2_w.start + u] += dz4 * t.a3[u];
            if t.a3[u] > 0.0 {
                dz3[u] = dz4 * w4[u];
            }
        }

        let n = t.flat.len();
        let mut dflat = vec![0.0; n];
        for (u, &d) in dz3.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            grad[l.dense1_b.start + u] += d;
            let gw = &mut grad[l.dense1_w.start + u * n..l.dense1_w.start + (u + 1) * n];
            for (g, f) in gw.iter_mut().zip(&t.flat) {
                *g += d * f;
            }
            let w = &p[l.dense1_w.start + u * n..l.dense1_w.start + (u + 1) * n];
            for (df, wv) in dflat.iter_mut().zip(w) {
                *df += d * wv;
            }
        }

        let (r0, c0) = (s.input_rows, s.input_cols);
        let (r1, c1) = s.pooled1();
        let mut dz2 = vec![0.0; t.a2.len()];
        for (&k, &d) in t.arg2.iter().zip(&dflat) {
            if t.a2[k] > 0.0 {
                dz2[k] += d;
            }
        }
        let mut dp1 = vec![0.0; t.p1.len()];
        {
            let (gw, rest) = grad[l.conv2_w.start..].split_at_mut(l.conv2_w.len());
            let gb = &mut rest[..l.conv2_b.len()];
            conv_same_backward(
                &t.p1,
                s.conv1_filters,
                r1,
                c1,
                &p[l.conv2_w.clone()],
                &dz2,
                gw,
                gb,
                Some(&mut dp1),
            );
        }
        let mut dz1 = vec![0.0; t.a1.len()];
        for (&k, &d) in t.arg1.iter().zip(&dp1) {
            if t.a1[k] > 0.0 {
                dz1[k] += d;
            }
        }
        let (gw, rest) = grad[l.conv1_w.start..].split_at_mut(l.conv1_w.len());
        let gb = &mut rest[..l.conv1_b.len()];
        conv_same_backward(x, 1, r0, c0, &p[l.conv1_w.clone()], &dz1, gw, gb, None);
        loss
    }

    /// Mean BCE over the batch and its gradient.
    pub fn loss_and_grad(&self, xs: &[&[f64]], ys: &[Label]) -> Result<(f64, Vec<f64>)> {
        for x in xs {
            self.check_input(x)?;
        }
        let mut grad = vec![0.0; self.params.len()];
        let scale = 1.0 / xs.len().max(1) as f64;
        let mut loss = 0.0;
        for (x, y) in xs.iter().zip(ys) {
            loss += self.backward(x, y.target(), scale, &mut grad);
        }
        Ok((loss * scale, grad))
    }

    pub fn loss(&self, xs: &[&[f64]], ys: &[Label]) -> Result<f64> {
        let mut total = 0.0;
        for (x, y) in xs.iter().zip(ys) {
            self.check_input(x)?;
            total += logit_bce(self.forward_trace(x).logit, y.target());
        }
        Ok(total / xs.len().max(1) as f64)
    }

    pub fn tensor(&self, name: &str) -> Option<&[f64]> {
        let l = self.spec.layout();
        l.named()
            .into_iter()
            .find(|(n, _)| *n == name)
            .map(|(_, r)| &self.params[r])
    }

    fn shapes(&self) -> [Vec<usize>; 8] {
        let s = &self.spec;
        let (f1, f2, u) = (s.conv1_filters, s.conv2_filters, s.dense_units);
        [
            vec![f1, 1, K, K],
            vec![f1],
            vec![f2, f1, K, K],
            vec![f2],
            vec![u, s.flat_len()],
            vec![u],
            vec![1, u],
            vec![1],
        ]
    }

    pub fn to_params(&self) -> Params {
        let mut p = Params::default();
        for ((name, range), shape) in self.spec.layout().named().into_iter().zip(self.shapes()) {
            p.put(name, Tensor::new(shape, self.params[range].to_vec()));
        }
        let s = &self.spec;
        p.put(
            "spec",
            Tensor::indices(&[s.input_rows, s.input_cols, s.conv1_filters, s.conv2_filters, s.dense_units]),
        )
        .put("loss_trace", Tensor::vector(self.loss_trace.clone()));
        p
    }

    pub fn from_params(p: &Params) -> Result<Self> {
        let dims = p.indices("spec")?;
        let [input_rows, input_cols, conv1_filters, conv2_filters, dense_units] = dims[..] else {
            return Err(Error::Serialization("CNN spec tensor needs 5 values".into()));
        };
        let spec = CnnSpec {
            input_rows,
            input_cols,
            conv1_filters,
            conv2_filters,
            dense_units,
        };
        spec.validate()?;
        let mut m = Cnn::zeros(spec);
        for (name, range) in spec.layout().named() {
            let t = p.get(name)?;
            if t.data.len() != range.len() {
                return Err(Error::Serialization(format!("CNN tensor {name} has the wrong size")));
            }
            m.params[range].copy_from_slice(&t.data);
        }
        m.loss_trace = p.vector("loss_trace")?;
        Ok(m)
    }
}

impl Classifier for Cnn {
    fn n_features(&self) -> usize {
        self.spec.input_len()
    }

    fn predict_proba(&self, x: &[f64]) -> [f64; 2] {
        let p = sigmoid(self.forward_trace(x).logit);
        [1.0 - p, p]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CnnHyper {
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub spec: CnnSpec,
}

impl Default for CnnHyper {
    fn default() -> Self {
        CnnHyper {
            epochs: 15,
            batch: 16,
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            spec: CnnSpec::default(),
        }
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn step(&mut self, params: &mut [f64], grad: &[f64], h: &CnnHyper) {
        self.t += 1;
        let c1 = 1.0 - h.beta1.powi(self.t);
        let c2 = 1.0 - h.beta2.powi(self.t);
        for ((p, g), (m, v)) in params.iter_mut().zip(grad).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = h.beta1 * *m + (1.0 - h.beta1) * g;
            *v = h.beta2 * *v + (1.0 - h.beta2) * g * g;
            *p -= h.lr * (*m / c1) / ((*v / c2).sqrt() + h.eps);
        }
    }
}

/// Mini-batch Adam from a seeded Glorot initialization; examples are
/// reshuffled each epoch from the seed.
pub fn train_cnn(x: &[Vec<f64>], y: &[Label], hyper: &CnnHyper, seed: u64) -> Result<Cnn> {
    hyper.spec.validate()?;
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 2 || !Label::ALL.iter().all(|l| y.contains(l)) {
        return Err(Error::SingleClassTrainingSet);
    }
    if hyper.batch == 0 {
        return Err(Error::InvalidConfig("batch size must be positive".into()));
    }
    let mut model = Cnn::init(hyper.spec, seed);
    for row in x {
        model.check_input(row)?;
    }
    let n_params = model.params.len();
    let mut adam = Adam {
        m: vec![0.0; n_params],
        v: vec![0.0; n_params],
        t: 0,
    };
    let mut order: Vec<usize> = (0..x.len()).collect();
    for epoch in 0..hyper.epochs {
        order.shuffle(&mut rng_for(seed, &format!("cnn/shuffle/{epoch}")));
        let mut total = 0.0;
        for batch in order.chunks(hyper.batch) {
            let mut grad = vec![0.0; n_params];
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                total += model.backward(&x[i], y[i].target(), scale, &mut grad);
            }
            adam.step(&mut model.params, &grad, hyper);
        }
        let mean = total / x.len() as f64;
        if !mean.is_finite() || model.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFiniteLoss { epoch });
        }
        model.loss_trace.push(mean);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;

    pub(crate) fn small_spec() -> CnnSpec {
        CnnSpec {
            input_rows: 8,
            input_cols: 10,
            ..CnnSpec::default()
        }
    }

    fn random_inputs(spec: &CnnSpec, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = rng_for(seed, "test/inputs");
        (0..n)
            .map(|_| (0..spec.input_len()).map(|_| rng.random::<f64>()).collect())
            .collect()
    }

    #[test]
    fn zero_network_outputs_half() {
        let m = Cnn::zeros(CnnSpec::default());
        let x = vec![0.3; CnnSpec::default().input_len()];
        assert_eq!(m.forward(&x).unwrap(), 0.5);
    }

    #[test]
    fn pool_picks_max() {
        let (v, a) = max_pool(&[1.0, 2.0, 3.0, 4.0], 1, 2, 2);
        assert_eq!(v, vec![4.0]);
        assert_eq!(a, vec![3]);
    }

    #[test]
    fn conv_matches_direct_sum() {
        let (rows, cols, in_ch) = (5, 6, 2);
        let mut rng = rng_for(3, "test/conv");
        let input: Vec<f64> = (0..in_ch * rows * cols).map(|_| rng.random::<f64>() - 0.5).collect();
        let w: Vec<f64> = (0..3 * in_ch * 9).map(|_| rng.random::<f64>() - 0.5).collect();
        let b = [0.1, -0.2, 0.3];
        let out = conv_same(&input, in_ch, rows, cols, &w, &b);
        for o in 0..3 {
            for r in 0..rows as isize {
                for c in 0..cols as isize {
                    let mut s = b[o];
                    for i in 0..in_ch {
                        for ky in 0..3isize {
                            for kx in 0..3isize {
                                let (sr, sc) = (r + ky - 1, c + kx - 1);
                                if sr < 0 || sc < 0 || sr >= rows as isize || sc >= cols as isize {
                                    continue;
                                }
                                s += w[((o * in_ch + i) * 3 + ky as usize) * 3 + kx as usize]
                                    * input[i * rows * cols + sr as usize * cols + sc as usize];
                            }
                        }
                    }
                    let got = out[o * rows * cols + r as usize * cols + c as usize];
                    assert!((got - s).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn dead_relu_region_is_ignored() {
        let spec = small_spec();
        let mut m = Cnn::init(spec, 5);
        let l = spec.layout();
        // Non-positive first-layer filters and bias: every conv1 unit is dead
        // for non-negative inputs.
        for w in &mut m.params[l.conv1_w.clone()] {
            *w = -w.abs();
        }
        for b in &mut m.params[l.conv1_b.clone()] {
            *b = -0.1;
        }
        let x = random_inputs(&spec, 1, 1).remove(0);
        let shifted: Vec<f64> = x.iter().map(|v| v + 0.7).collect();
        assert_eq!(m.forward(&x).unwrap(), m.forward(&shifted).unwrap());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let spec = small_spec();
        let m = Cnn::init(spec, 11);
        let xs = random_inputs(&spec, 4, 2);
        let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let ys = [Label::Landing, Label::Takeoff, Label::Takeoff, Label::Landing];
        let (_, grad) = m.loss_and_grad(&refs, &ys).unwrap();
        let h = 1e-6;
        for (name, range) in spec.layout().named() {
            for i in range.clone().step_by(7) {
                let mut plus = m.clone();
                plus.params[i] += h;
                let mut minus = m.clone();
                minus.params[i] -= h;
                let num = (plus.loss(&refs, &ys).unwrap() - minus.loss(&refs, &ys).unwrap()) / (2.0 * h);
                let err = (num - grad[i]).abs() / num.abs().max(grad[i].abs()).max(1e-6);
                assert!(err < 1e-4, "{name}[{}]: analytic {} numeric {num}", i - range.start, grad[i]);
            }
        }
    }

    #[test]
    fn training_is_deterministic_and_reduces_loss() {
        let spec = small_spec();
        let mut rng = rng_for(9, "test/separable");
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..32 {
            let label = Label::from_index(i % 2);
            let row: Vec<f64> = (0..spec.input_len())
                .map(|k| {
                    let top = k / spec.input_cols < spec.input_rows / 2;
                    let base = if top == label.is_positive() { 0.8 } else { 0.1 };
                    base + 0.1 * rng.random::<f64>()
                })
                .collect();
            x.push(row);
            y.push(label);
        }
        let hyper = CnnHyper {
            epochs: 20,
            spec,
            ..CnnHyper::default()
        };
        let a = train_cnn(&x, &y, &hyper, 4).unwrap();
        let b = train_cnn(&x, &y, &hyper, 4).unwrap();
        assert_eq!(a.params, b.params);
        assert!(a.loss_trace[19] < a.loss_trace[0]);
    }

    #[test]
    fn single_class_rejected() {
        let spec = small_spec();
        let x = random_inputs(&spec, 3, 1);
        let hyper = CnnHyper { spec, ..CnnHyper::default() };
        assert!(matches!(
            train_cnn(&x, &[Label::Takeoff; 3], &hyper, 1),
            Err(Error::SingleClassTrainingSet)
        ));
    }

    #[test]
    fn params_round_trip() {
        let m = Cnn::init(small_spec(), 3);
        assert_eq!(Cnn::from_params(&m.to_params()).unwrap(), m);
    }
}
