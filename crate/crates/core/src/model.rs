//! The segmentation frame classifier: a feature normalizer followed by a
//! one-hidden-layer perceptron over a stacked context of frames.

use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::features::{FeatureError, FeatureExtractor, FrameFeatures, FrameVector, FEATURE_DIM};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` inside the loss.
pub const PROB_CLAMP: f64 = 1e-7;
pub const DEFAULT_CONTEXT_RADIUS: usize = 10;
pub const DEFAULT_HIDDEN: usize = 64;

const STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("model normalizer has not been fitted")]
    UnfittedModel,
    #[error("length mismatch: {0} probabilities vs {1} labels")]
    LengthMismatch(usize, usize),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("cannot fit a normalizer on zero frames")]
    EmptyFit,
}

/// Per-dimension affine normalizer fitted on training features.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub mean: Vec<f32>,
    pub std: Vec<f32>,
}

impl Normalizer {
    /// Population mean and standard deviation per dimension. Dimensions
    /// with (near-)zero spread get a unit divisor.
    pub fn fit<'a, I>(features: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = &'a FrameFeatures>,
        I::IntoIter: Clone,
    {
        let iter = features.into_iter();
        let mut sum = [0.0f64; FEATURE_DIM];
        let mut n = 0usize;
        for v in iter.clone().flat_map(|f| f.frames()) {
            for (s, &x) in sum.iter_mut().zip(v) {
                *s += x as f64;
            }
            n += 1;
        }
        if n == 0 {
            return Err(ModelError::EmptyFit);
        }
        let mean = sum.map(|s| s / n as f64);
        let mut sq = [0.0f64; FEATURE_DIM];
        for v in iter.flat_map(|f| f.frames()) {
            for ((s, &x), m) in sq.iter_mut().zip(v).zip(&mean) {
                *s += (x as f64 - m) * (x as f64 - m);
            }
        }
        let std = sq.map(|s| {
            let sd = libm::sqrt(s / n as f64);
            if sd < STD_FLOOR {
                1.0
            } else {
                sd
            }
        });
        Ok(Self {
            mean: mean.iter().map(|&m| m as f32).collect(),
            std: std.iter().map(|&s| s as f32).collect(),
        })
    }

    pub fn apply(&self, v: &FrameVector) -> [f64; FEATURE_DIM] {
        let mut out = [0.0; FEATURE_DIM];
        for i in 0..FEATURE_DIM {
            out[i] = (v[i] as f64 - self.mean[i] as f64) / self.std[i] as f64;
        }
        out
    }
}

/// Parameters are stored flat as `[w1 (hidden x input, row-major) | b1 | w2 | b2]`
/// so the optimizer and gradient checks can treat them uniformly.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    input: usize,
    hidden: usize,
    params: Vec<f64>,
}

impl Mlp {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            input,
            hidden,
            params: alloc::vec![0.0; Self::param_count(input, hidden)],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let mut mlp = Self::zeros(input, hidden);
        let b1 = libm::sqrt(6.0 / (input + hidden) as f64);
        let b2 = libm::sqrt(6.0 / (hidden + 1) as f64);
        let (w1_len, w2_at) = (hidden * input, hidden * input + hidden);
        for (i, p) in mlp.params.iter_mut().enumerate() {
            if i < w1_len {
                *p = rng.gen_range(-b1..b1);
            } else if (w2_at..w2_at + hidden).contains(&i) {
                *p = rng.gen_range(-b2..b2);
            }
        }
        mlp
    }

    pub fn from_params(input: usize, hidden: usize, params: Vec<f64>) -> Option<Self> {
        (params.len() == Self::param_count(input, hidden)).then_some(Self {
            input,
            hidden,
            params,
        })
    }

    pub const fn param_count(input: usize, hidden: usize) -> usize {
        hidden * input + hidden + hidden + 1
    }

    pub fn input_dim(&self) -> usize {
        self.input
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn split(&self) -> (&[f64], &[f64], &[f64], f64) {
        let (w1, rest) = self.params.split_at(self.hidden * self.input);
        let (b1, rest) = rest.split_at(self.hidden);
        let (w2, b2) = rest.split_at(self.hidden);
        (w1, b1, w2, b2[0])
    }

    fn hidden_and_logit(&self, x: &[f64], h: &mut [f64]) -> f64 {
        let (w1, b1, w2, b2) = self.split();
        let mut z = b2;
        for j in 0..self.hidden {
            let row = &w1[j * self.input..(j + 1) * self.input];
            let a = b1[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            h[j] = a.max(0.0);
            z += w2[j] * h[j];
        }
        z
    }

    /// Probabilities for each `input`-wide row of `rows`.
    pub fn forward_rows(&self, rows: &[f64]) -> Vec<f64> {
        let mut h = alloc::vec![0.0; self.hidden];
        rows.chunks_exact(self.input)
            .map(|x| sigmoid(self.hidden_and_logit(x, &mut h)))
            .collect()
    }

    /// Adds `scale * dL/dθ` of the summed weighted BCE over `rows` into
    /// `grad` and returns the summed (unscaled) loss.
    pub fn accumulate_gradient(
        &self,
        rows: &[f64],
        labels: &[bool],
        w_neg: f64,
        scale: f64,
        grad: &mut [f64],
    ) -> f64 {
        assert_eq!(grad.len(), self.params.len());
        assert_eq!(rows.len(), labels.len() * self.input);
        let (_, _, w2, _) = self.split();
        let (gw1, rest) = grad.split_at_mut(self.hidden * self.input);
        let (gb1, rest) = rest.split_at_mut(self.hidden);
        let (gw2, gb2) = rest.split_at_mut(self.hidden);
        let mut h = alloc::vec![0.0; self.hidden];
        let mut loss = 0.0;
        for (x, &y) in rows.chunks_exact(self.input).zip(labels) {
            let z = self.hidden_and_logit(x, &mut h);
            let p = sigmoid(z);
            loss += bce_term(p, y, w_neg);
            // d/dz of -[y log p + w (1-y) log(1-p)]
            let dz = scale * if y { p - 1.0 } else { w_neg * p };
            gb2[0] += dz;
            for j in 0..self.hidden {
                gw2[j] += dz * h[j];
                if h[j] > 0.0 {
                    let dh = dz * w2[j];
                    gb1[j] += dh;
                    let row = &mut gw1[j * self.input..(j + 1) * self.input];
                    for (g, v) in row.iter_mut().zip(x) {
                        *g += dh * v;
                    }
                }
            }
        }
        loss
    }

    /// Mean weighted BCE over `rows`; the reference for gradient checks.
    pub fn mean_loss(&self, rows: &[f64], labels: &[bool], w_neg: f64) -> f64 {
        let probs = self.forward_rows(rows);
        let total: f64 = probs.iter().zip(labels).map(|(&p, &y)| bce_term(p, y, w_neg)).sum();
        total / labels.len().max(1) as f64
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

fn bce_term(p: f64, positive: bool, w_neg: f64) -> f64 {
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    if positive {
        -libm::log(p)
    } else {
        -w_neg * libm::log(1.0 - p)
    }
}

/// `-mean[y log p + w_neg (1 - y) log(1 - p)]` with `p` clamped to
/// `[1e-7, 1 - 1e-7]`.
pub fn weighted_bce(probs: &[f32], labels: &[bool], w_neg: f64) -> Result<f64, ModelError> {
    if probs.len() != labels.len() {
        return Err(ModelError::LengthMismatch(probs.len(), labels.len()));
    }
    if probs.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| bce_term(p as f64, y, w_neg))
        .sum();
    Ok(total / probs.len() as f64)
}

/// A trained or trainable frame classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct SfcModel {
    context_radius: usize,
    normalizer: Option<Normalizer>,
    mlp: Mlp,
}

impl SfcModel {
    pub fn new(context_radius: usize, mlp: Mlp) -> Self {
        assert_eq!(mlp.input_dim(), Self::input_dim_for(context_radius));
        Self {
            context_radius,
            normalizer: None,
            mlp,
        }
    }

    pub fn with_normalizer(mut self, normalizer: Normalizer) -> Self {
        self.normalizer = Some(normalizer);
        self
    }

    pub const fn input_dim_for(context_radius: usize) -> usize {
        (2 * context_radius + 1) * FEATURE_DIM
    }

    pub fn context_radius(&self) -> usize {
        self.context_radius
    }

    pub fn normalizer(&self) -> Option<&Normalizer> {
        self.normalizer.as_ref()
    }

    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }

    pub fn mlp_mut(&mut self) -> &mut Mlp {
        &mut self.mlp
    }

    /// Normalized features stacked over `[i - C, i + C]` for every frame,
    /// repeating the first/last frame past the edges.
    pub fn context_rows(&self, features: &FrameFeatures) -> Result<Vec<f64>, ModelError> {
        let norm = self.normalizer.as_ref().ok_or(ModelError::UnfittedModel)?;
        let normalized: Vec<[f64; FEATURE_DIM]> =
            features.frames().iter().map(|v| norm.apply(v)).collect();
        let n = normalized.len();
        let c = self.context_radius as isize;
        let mut rows = Vec::with_capacity(n * self.mlp.input_dim());
        for i in 0..n as isize {
            for o in -c..=c {
                let j = (i + o).clamp(0, n as isize - 1) as usize;
                rows.extend_from_slice(&normalized[j]);
            }
        }
        Ok(rows)
    }

    pub fn forward(&self, features: &FrameFeatures) -> Result<Vec<f32>, ModelError> {
        let rows = self.context_rows(features)?;
        Ok(self.mlp.forward_rows(&rows).into_iter().map(|p| p as f32).collect())
    }

    /// Normalizes a raw sample window, extracts features and classifies
    /// every frame.
    pub fn score_samples(
        &self,
        extractor: &FeatureExtractor,
        window: &[f32],
    ) -> Result<Vec<f32>, ModelError> {
        let normalized = crate::audio::normalize_window(window)
            .map_err(|_| FeatureError::WindowTooShort(window.len()))?;
        let feats = extractor.extract(&normalized)?;
        self.forward(&feats)
    }

    /// Rounds every stored value to `f32` precision, matching what a
    /// checkpoint file holds.
    pub fn quantized(&self) -> Self {
        let mut m = self.clone();
        for p in m.mlp.params_mut() {
            *p = *p as f32 as f64;
        }
        m
    }
}
