//! A small trainable query/code matching model.
//!
//! The model embeds the `[bos] query [sep] code` id sequence, pools it
//! (mean or learned attention) into one hidden vector, and maps that
//! through a two-logit linear head. Softmax over the logits gives the
//! probability that the query describes the code; cross-entropy drives
//! training. Heads start at zero, so an untrained model scores every pair
//! at exactly 0.5.
//!
//! All math is plain `f64` with explicit loops: the models are small
//! enough that clarity and bit-for-bit reproducibility matter more than
//! throughput.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::corpus::PairExample;
use crate::error::Error;
use crate::rng::{hash64, stream};
use crate::subtoken::{code_tokens, query_tokens};
use crate::vocab::{Vocab, PAD};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pooling {
    Mean,
    Attention,
}

impl Pooling {
    pub fn as_str(self) -> &'static str {
        match self {
            Pooling::Mean => "mean",
            Pooling::Attention => "attention",
        }
    }
}

impl core::str::FromStr for Pooling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "mean" => Ok(Pooling::Mean),
            "attention" => Ok(Pooling::Attention),
            other => Err(Error::contract(alloc::format!("unknown pooling '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    /// Plain stochastic gradient descent.
    Sgd,
    /// Per-parameter adaptive step sizes (accumulated squared gradients).
    Adagrad,
}

impl Optimizer {
    pub fn as_str(self) -> &'static str {
        match self {
            Optimizer::Sgd => "sgd",
            Optimizer::Adagrad => "adagrad",
        }
    }
}

impl core::str::FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "sgd" => Ok(Optimizer::Sgd),
            "adagrad" => Ok(Optimizer::Adagrad),
            other => Err(Error::contract(alloc::format!("unknown optimizer '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub pooling: Pooling,
    pub max_len: usize,
    pub min_frequency: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub batch_size: usize,
    pub epochs: usize,
    /// Gradient updates larger than this global norm are rescaled to it.
    pub clip_norm: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 128,
            pooling: Pooling::Mean,
            max_len: 256,
            min_frequency: 2,
            learning_rate: 1e-3,
            optimizer: Optimizer::Adagrad,
            batch_size: 32,
            epochs: 10,
            clip_norm: 5.0,
        }
    }
}

/// A pre-encoded training example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedExample {
    pub ids: Vec<usize>,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderModel {
    pub vocab: Vocab,
    pub dim: usize,
    pub pooling: Pooling,
    pub max_len: usize,
    /// Label describing what this model was trained on (e.g. a perspective).
    pub tag: String,
    pub seed: u64,
    /// vocab.len() x dim embedding table, row major.
    embedding: Vec<f64>,
    /// dim-vector scoring attention weights (unused under mean pooling).
    attn: Vec<f64>,
    /// 2 x dim head, row major.
    head_w: Vec<f64>,
    head_b: Vec<f64>,
}

/// Per-example forward state kept for the backward pass.
#[derive(Debug, Clone)]
pub struct EncodeTrace {
    pub ids: Vec<usize>,
    /// Pooling weight of each position (1/T under mean pooling).
    pub weights: Vec<f64>,
    pub hidden: Vec<f64>,
}

/// Gradient accumulator shaped like the model. Embedding gradients stay
/// sparse: only rows that appeared in the batch get entries.
#[derive(Debug, Clone, Default)]
pub struct EncoderGrads {
    pub embedding: BTreeMap<usize, Vec<f64>>,
    pub attn: Vec<f64>,
    pub head_w: Vec<f64>,
    pub head_b: Vec<f64>,
}

impl EncoderGrads {
    pub fn zeros(dim: usize) -> Self {
        EncoderGrads {
            embedding: BTreeMap::new(),
            attn: vec![0.0; dim],
            head_w: vec![0.0; 2 * dim],
            head_b: vec![0.0; 2],
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for row in self.embedding.values_mut() {
            for g in row {
                *g *= factor;
            }
        }
        for g in self
            .attn
            .iter_mut()
            .chain(self.head_w.iter_mut())
            .chain(self.head_b.iter_mut())
        {
            *g *= factor;
        }
    }

    pub fn squared_norm(&self) -> f64 {
        let mut total = 0.0;
        for row in self.embedding.values() {
            for g in row {
                total += g * g;
            }
        }
        for g in self.attn.iter().chain(&self.head_w).chain(&self.head_b) {
            total += g * g;
        }
        total
    }

    fn embedding_row(&mut self, id: usize, dim: usize) -> &mut Vec<f64> {
        self.embedding.entry(id).or_insert_with(|| vec![0.0; dim])
    }
}

/// Batch loss plus the gradients that produced it.
#[derive(Debug, Clone)]
pub struct BatchGrads {
    pub loss: f64,
    pub grads: EncoderGrads,
}

/// A trained model together with its per-epoch mean loss.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: EncoderModel,
    pub loss_curve: Vec<f64>,
}

impl EncoderModel {
    /// Fresh model: embeddings drawn uniformly from ±0.05, everything else
    /// zero. Zero heads make the untrained score exactly 0.5, and a zero
    /// attention vector starts attention pooling as a plain mean.
    pub fn new(
        vocab: Vocab,
        dim: usize,
        pooling: Pooling,
        max_len: usize,
        tag: &str,
        seed: u64,
    ) -> Result<Self, Error> {
        if dim == 0 {
            return Err(Error::contract("embedding dimension must be positive"));
        }
        let mut rng = stream(seed, "init", &[hash64(tag.as_bytes())]);
        let embedding = (0..vocab.len() * dim)
            .map(|_| rng.gen_range(-0.05..=0.05))
            .collect();
        Ok(EncoderModel {
            vocab,
            dim,
            pooling,
            max_len,
            tag: String::from(tag),
            seed,
            embedding,
            attn: vec![0.0; dim],
            head_w: vec![0.0; 2 * dim],
            head_b: vec![0.0; 2],
        })
    }

    /// Rebuilds a model from stored tensors, validating shapes.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        vocab: Vocab,
        dim: usize,
        pooling: Pooling,
        max_len: usize,
        tag: &str,
        seed: u64,
        embedding: Vec<f64>,
        attn: Vec<f64>,
        head_w: Vec<f64>,
        head_b: Vec<f64>,
    ) -> Result<Self, Error> {
        if dim == 0 {
            return Err(Error::contract("embedding dimension must be positive"));
        }
        if embedding.len() != vocab.len() * dim {
            return Err(Error::contract("embedding tensor shape mismatch"));
        }
        if attn.len() != dim || head_w.len() != 2 * dim || head_b.len() != 2 {
            return Err(Error::contract("head tensor shape mismatch"));
        }
        Ok(EncoderModel {
            vocab,
            dim,
            pooling,
            max_len,
            tag: String::from(tag),
            seed,
            embedding,
            attn,
            head_w,
            head_b,
        })
    }

    pub fn embedding(&self) -> &[f64] {
        &self.embedding
    }

    /// Adds `delta` to one embedding scalar (ensemble fine-tuning path).
    pub(crate) fn nudge_embedding(&mut self, k: usize, delta: f64) {
        self.embedding[k] += delta;
    }

    /// Adds `delta` to one attention scalar (ensemble fine-tuning path).
    pub(crate) fn nudge_attn(&mut self, j: usize, delta: f64) {
        self.attn[j] += delta;
    }

    pub fn attn(&self) -> &[f64] {
        &self.attn
    }

    pub fn head_w(&self) -> &[f64] {
        &self.head_w
    }

    pub fn head_b(&self) -> &[f64] {
        &self.head_b
    }

    /// Total number of scalar parameters.
    pub fn parameter_count(&self) -> usize {
        self.embedding.len() + self.attn.len() + self.head_w.len() + self.head_b.len()
    }

    /// Reads the flat parameter vector `embedding ‖ attn ‖ head_w ‖ head_b`.
    pub fn get_param(&self, mut i: usize) -> f64 {
        for part in [&self.embedding, &self.attn, &self.head_w, &self.head_b] {
            if i < part.len() {
                return part[i];
            }
            i -= part.len();
        }
        panic!("parameter index out of range");
    }

    pub fn set_param(&mut self, mut i: usize, value: f64) {
        for part in [
            &mut self.embedding,
            &mut self.attn,
            &mut self.head_w,
            &mut self.head_b,
        ] {
            if i < part.len() {
                part[i] = value;
                return;
            }
            i -= part.len();
        }
        panic!("parameter index out of range");
    }

    /// Encodes raw query/code text into the model's id sequence.
    pub fn encode_pair_ids(&self, query: &str, code: &str) -> Vec<usize> {
        self.vocab
            .encode_pair(&query_tokens(query), &code_tokens(code), self.max_len)
    }

    fn row(&self, id: usize) -> &[f64] {
        &self.embedding[id * self.dim..(id + 1) * self.dim]
    }

    /// Forward pass through embedding and pooling, keeping what the
    /// backward pass needs.
    pub fn encode_trace(&self, ids: &[usize]) -> EncodeTrace {
        let dim = self.dim;
        let active: Vec<usize> = ids.iter().copied().filter(|&id| id != PAD).collect();
        let mut weights = vec![0.0; active.len()];
        let mut hidden = vec![0.0; dim];
        if active.is_empty() {
            return EncodeTrace {
                ids: active,
                weights,
                hidden,
            };
        }
        match self.pooling {
            Pooling::Mean => {
                let w = 1.0 / active.len() as f64;
                for weight in &mut weights {
                    *weight = w;
                }
            }
            Pooling::Attention => {
                let scores: Vec<f64> = active
                    .iter()
                    .map(|&id| dot(&self.attn, self.row(id)))
                    .collect();
                let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut total = 0.0;
                for (w, s) in weights.iter_mut().zip(&scores) {
                    *w = libm::exp(s - max);
                    total += *w;
                }
                for w in &mut weights {
                    *w /= total;
                }
            }
        }
        for (&id, &w) in active.iter().zip(&weights) {
            for (h, e) in hidden.iter_mut().zip(self.row(id)) {
                *h += w * e;
            }
        }
        EncodeTrace {
            ids: active,
            weights,
            hidden,
        }
    }

    /// Pooled hidden vector for an id sequence.
    pub fn encode_ids(&self, ids: &[usize]) -> Vec<f64> {
        self.encode_trace(ids).hidden
    }

    /// Pooled hidden vector for raw text.
    pub fn hidden_for_pair(&self, query: &str, code: &str) -> Vec<f64> {
        self.encode_ids(&self.encode_pair_ids(query, code))
    }

    pub fn logits(&self, hidden: &[f64]) -> [f64; 2] {
        [
            dot(&self.head_w[..self.dim], hidden) + self.head_b[0],
            dot(&self.head_w[self.dim..], hidden) + self.head_b[1],
        ]
    }

    /// Match probability for an id sequence.
    pub fn score_ids(&self, ids: &[usize]) -> f64 {
        let logits = self.logits(&self.encode_ids(ids));
        softmax2(logits)[1]
    }

    /// Match probability for raw query/code text.
    pub fn score_pair(&self, query: &str, code: &str) -> f64 {
        self.score_ids(&self.encode_pair_ids(query, code))
    }

    /// Propagates a gradient on the hidden vector back into embedding and
    /// attention gradients. The head is not involved: callers that use the
    /// head (training) add its gradients separately.
    pub fn encode_backward(&self, trace: &EncodeTrace, d_hidden: &[f64], grads: &mut EncoderGrads) {
        if trace.ids.is_empty() {
            return;
        }
        match self.pooling {
            Pooling::Mean => {
                for (&id, &w) in trace.ids.iter().zip(&trace.weights) {
                    let row = grads.embedding_row(id, self.dim);
                    for (g, dh) in row.iter_mut().zip(d_hidden) {
                        *g += w * dh;
                    }
                }
            }
            Pooling::Attention => {
                // hidden = sum_t w_t e_t with w = softmax(attn . e).
                let d_w: Vec<f64> = trace
                    .ids
                    .iter()
                    .map(|&id| dot(d_hidden, self.row(id)))
                    .collect();
                let mean: f64 = trace
                    .weights
                    .iter()
                    .zip(&d_w)
                    .map(|(w, dw)| w * dw)
                    .sum();
                for ((&id, &w), &dw) in trace.ids.iter().zip(&trace.weights).zip(&d_w) {
                    let d_score = w * (dw - mean);
                    let e: Vec<f64> = self.row(id).to_vec();
                    for (ga, ev) in grads.attn.iter_mut().zip(&e) {
                        *ga += d_score * ev;
                    }
                    let row = grads.embedding_row(id, self.dim);
                    for ((g, dh), a) in row.iter_mut().zip(d_hidden).zip(&self.attn) {
                        *g += w * dh + d_score * a;
                    }
                }
            }
        }
    }

    /// Mean cross-entropy loss and gradients over a batch.
    pub fn batch_gradients(&self, batch: &[EncodedExample]) -> BatchGrads {
        let mut grads = EncoderGrads::zeros(self.dim);
        let mut loss = 0.0;
        for ex in batch {
            let trace = self.encode_trace(&ex.ids);
            let logits = self.logits(&trace.hidden);
            let probs = softmax2(logits);
            loss += log_sum_exp2(logits) - logits[usize::from(ex.label)];

            let mut d_logits = probs;
            d_logits[usize::from(ex.label)] -= 1.0;
            let mut d_hidden = vec![0.0; self.dim];
            for k in 0..2 {
                grads.head_b[k] += d_logits[k];
                let w_row = &self.head_w[k * self.dim..(k + 1) * self.dim];
                for j in 0..self.dim {
                    grads.head_w[k * self.dim + j] += d_logits[k] * trace.hidden[j];
                    d_hidden[j] += d_logits[k] * w_row[j];
                }
            }
            self.encode_backward(&trace, &d_hidden, &mut grads);
        }
        let inv = 1.0 / batch.len().max(1) as f64;
        grads.scale(inv);
        BatchGrads {
            loss: loss * inv,
            grads,
        }
    }

    /// Loss and a dense gradient in [`get_param`] order, for numerical
    /// verification of the backward pass.
    pub fn loss_and_flat_grad(&self, batch: &[EncodedExample]) -> (f64, Vec<f64>) {
        let bg = self.batch_gradients(batch);
        let mut flat = vec![0.0; self.parameter_count()];
        for (&id, row) in &bg.grads.embedding {
            flat[id * self.dim..(id + 1) * self.dim].copy_from_slice(row);
        }
        let mut offset = self.embedding.len();
        flat[offset..offset + self.dim].copy_from_slice(&bg.grads.attn);
        offset += self.dim;
        flat[offset..offset + 2 * self.dim].copy_from_slice(&bg.grads.head_w);
        offset += 2 * self.dim;
        flat[offset..offset + 2].copy_from_slice(&bg.grads.head_b);
        (bg.loss, flat)
    }

    /// Mean loss over a set of examples (no gradients).
    pub fn mean_loss(&self, examples: &[EncodedExample]) -> f64 {
        if examples.is_empty() {
            return 0.0;
        }
        let total: f64 = examples
            .iter()
            .map(|ex| {
                let logits = self.logits(&self.encode_ids(&ex.ids));
                log_sum_exp2(logits) - logits[usize::from(ex.label)]
            })
            .sum();
        total / examples.len() as f64
    }

    /// Encodes a pair dataset with this model's vocabulary.
    pub fn encode_examples(&self, examples: &[PairExample]) -> Vec<EncodedExample> {
        examples
            .iter()
            .map(|p| EncodedExample {
                ids: self.encode_pair_ids(&p.query, &p.code),
                label: p.label,
            })
            .collect()
    }

    /// Applies one clipped gradient step.
    fn apply_update(&mut self, mut grads: EncoderGrads, opt: &mut OptimizerState, cfg: &TrainConfig) {
        let norm = libm::sqrt(grads.squared_norm());
        if norm > cfg.clip_norm {
            grads.scale(cfg.clip_norm / norm);
        }
        let lr = cfg.learning_rate;
        match cfg.optimizer {
            Optimizer::Sgd => {
                for (&id, row) in &grads.embedding {
                    for (j, g) in row.iter().enumerate() {
                        self.embedding[id * self.dim + j] -= lr * g;
                    }
                }
                for (a, g) in self.attn.iter_mut().zip(&grads.attn) {
                    *a -= lr * g;
                }
                for (w, g) in self.head_w.iter_mut().zip(&grads.head_w) {
                    *w -= lr * g;
                }
                for (b, g) in self.head_b.iter_mut().zip(&grads.head_b) {
                    *b -= lr * g;
                }
            }
            Optimizer::Adagrad => {
                const EPS: f64 = 1e-8;
                for (&id, row) in &grads.embedding {
                    for (j, g) in row.iter().enumerate() {
                        let k = id * self.dim + j;
                        opt.embedding[k] += g * g;
                        self.embedding[k] -= lr * g / (libm::sqrt(opt.embedding[k]) + EPS);
                    }
                }
                for (j, g) in grads.attn.iter().enumerate() {
                    opt.attn[j] += g * g;
                    self.attn[j] -= lr * g / (libm::sqrt(opt.attn[j]) + EPS);
                }
                for (j, g) in grads.head_w.iter().enumerate() {
                    opt.head_w[j] += g * g;
                    self.head_w[j] -= lr * g / (libm::sqrt(opt.head_w[j]) + EPS);
                }
                for (j, g) in grads.head_b.iter().enumerate() {
                    opt.head_b[j] += g * g;
                    self.head_b[j] -= lr * g / (libm::sqrt(opt.head_b[j]) + EPS);
                }
            }
        }
    }

    /// Trains a fresh model on a balanced pair dataset. The vocabulary is
    /// built from the training texts. Returns the model and the per-epoch
    /// mean loss; a non-finite epoch loss aborts with a divergence error.
    pub fn train(
        examples: &[PairExample],
        config: &TrainConfig,
        tag: &str,
        seed: u64,
    ) -> Result<TrainOutcome, Error> {
        if examples.is_empty() {
            return Err(Error::contract("training set is empty"));
        }
        let positives = examples.iter().filter(|e| e.label == 1).count();
        if positives == 0 || positives == examples.len() {
            return Err(Error::contract(
                "training set must contain both matched and mismatched pairs",
            ));
        }
        if config.batch_size == 0 || config.epochs == 0 {
            return Err(Error::contract("batch size and epochs must be positive"));
        }

        let mut docs: Vec<Vec<String>> = Vec::with_capacity(examples.len() * 2);
        for ex in examples {
            docs.push(query_tokens(&ex.query));
            docs.push(code_tokens(&ex.code));
        }
        let vocab = Vocab::build(docs.iter().map(|d| d.as_slice()), config.min_frequency);
        let mut model = EncoderModel::new(
            vocab,
            config.dim,
            config.pooling,
            config.max_len,
            tag,
            seed,
        )?;
        let encoded = model.encode_examples(examples);

        let mut opt = OptimizerState::zeros(&model);
        let mut order: Vec<usize> = (0..encoded.len()).collect();
        let mut loss_curve = Vec::with_capacity(config.epochs);
        for epoch in 0..config.epochs {
            let mut rng = stream(seed, "shuffle", &[epoch as u64]);
            for i in (1..order.len()).rev() {
                let j = rng.gen_range(0..=i);
                order.swap(i, j);
            }
            let mut epoch_loss = 0.0;
            let mut batches = 0usize;
            let mut batch: Vec<EncodedExample> = Vec::with_capacity(config.batch_size);
            for (done, &idx) in order.iter().enumerate() {
                batch.push(encoded[idx].clone());
                if batch.len() == config.batch_size || done + 1 == order.len() {
                    let bg = model.batch_gradients(&batch);
                    epoch_loss += bg.loss;
                    batches += 1;
                    model.apply_update(bg.grads, &mut opt, config);
                    batch.clear();
                }
            }
            let mean = epoch_loss / batches.max(1) as f64;
            if !mean.is_finite() {
                return Err(Error::Divergence { epoch, loss: mean });
            }
            loss_curve.push(mean);
        }
        Ok(TrainOutcome { model, loss_curve })
    }
}

/// Adaptive optimizer accumulators, shaped like the model.
struct OptimizerState {
    embedding: Vec<f64>,
    attn: Vec<f64>,
    head_w: Vec<f64>,
    head_b: Vec<f64>,
}

impl OptimizerState {
    fn zeros(model: &EncoderModel) -> Self {
        OptimizerState {
            embedding: vec![0.0; model.embedding.len()],
            attn: vec![0.0; model.attn.len()],
            head_w: vec![0.0; model.head_w.len()],
            head_b: vec![0.0; model.head_b.len()],
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn softmax2(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e0 = libm::exp(logits[0] - m);
    let e1 = libm::exp(logits[1] - m);
    let total = e0 + e1;
    [e0 / total, e1 / total]
}

pub(crate) fn log_sum_exp2(logits: [f64; 2]) -> f64 {
    let m = logits[0].max(logits[1]);
    if m.is_infinite() {
        return m;
    }
    m + libm::log(libm::exp(logits[0] - m) + libm::exp(logits[1] - m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Provenance;

    fn pair(query: &str, code: &str, label: u8) -> PairExample {
        PairExample {
            query: query.into(),
            code: code.into(),
            label,
            provenance: Provenance::Original,
            origin_id: String::from("t"),
        }
    }

    /// Small linearly separable dataset: every snippet is alpha-themed, so
    /// matched queries mention alpha while mismatched ones mention omega.
    /// (A pooled additive model cannot represent query/code interactions,
    /// so the toy signal must live in aggregate token statistics.)
    fn toy_pairs() -> Vec<PairExample> {
        let mut out = Vec::new();
        for i in 0..8 {
            let code = alloc::format!(
                "int alphaCount{i}(int x) {{ return x + alpha{i}.size(); }}"
            );
            out.push(pair(&alloc::format!("count the alpha items {i}"), &code, 1));
            out.push(pair(&alloc::format!("count the omega items {i}"), &code, 0));
        }
        out
    }

    fn small_config(pooling: Pooling) -> TrainConfig {
        TrainConfig {
            dim: 8,
            pooling,
            max_len: 64,
            min_frequency: 1,
            learning_rate: 0.1,
            optimizer: Optimizer::Adagrad,
            batch_size: 4,
            epochs: 30,
            clip_norm: 5.0,
        }
    }

    #[test]
    fn untrained_score_is_exactly_half() {
        let docs = [alloc::vec![String::from("a"), String::from("b")]];
        let vocab = Vocab::build(docs.iter().map(|d| d.as_slice()), 1);
        let model = EncoderModel::new(vocab, 16, Pooling::Mean, 32, "t", 7).unwrap();
        assert_eq!(model.score_pair("any query", "any code"), 0.5);
        assert_eq!(model.score_pair("", ""), 0.5);
    }

    #[test]
    fn training_reduces_loss_and_separates_toys() {
        let out = EncoderModel::train(&toy_pairs(), &small_config(Pooling::Mean), "t", 3).unwrap();
        let curve = &out.loss_curve;
        assert!(curve[curve.len() - 1] < curve[0] * 0.5, "loss did not drop: {curve:?}");
        for ex in toy_pairs() {
            let s = out.model.score_pair(&ex.query, &ex.code);
            if ex.label == 1 {
                assert!(s > 0.5, "positive scored {s}");
            } else {
                assert!(s < 0.5, "negative scored {s}");
            }
        }
    }

    #[test]
    fn attention_pooling_trains_too() {
        let out =
            EncoderModel::train(&toy_pairs(), &small_config(Pooling::Attention), "t", 3).unwrap();
        let curve = &out.loss_curve;
        assert!(curve[curve.len() - 1] < curve[0]);
        // The attention vector actually moved off its zero start.
        assert!(out.model.attn().iter().any(|&a| a != 0.0));
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let cfg = small_config(Pooling::Mean);
        let a = EncoderModel::train(&toy_pairs(), &cfg, "t", 11).unwrap();
        let b = EncoderModel::train(&toy_pairs(), &cfg, "t", 11).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.loss_curve, b.loss_curve);
        let c = EncoderModel::train(&toy_pairs(), &cfg, "t", 12).unwrap();
        assert_ne!(a.model, c.model);
    }

    #[test]
    fn degenerate_training_sets_are_rejected() {
        assert!(EncoderModel::train(&[], &TrainConfig::default(), "t", 0).is_err());
        let only_pos = alloc::vec![pair("q", "c", 1), pair("q2", "c2", 1)];
        assert!(EncoderModel::train(&only_pos, &TrainConfig::default(), "t", 0).is_err());
    }

    #[test]
    fn divergence_is_reported_with_epoch() {
        let mut cfg = small_config(Pooling::Mean);
        cfg.optimizer = Optimizer::Sgd;
        cfg.learning_rate = 1e18;
        cfg.clip_norm = f64::INFINITY;
        cfg.epochs = 3;
        match EncoderModel::train(&toy_pairs(), &cfg, "t", 1) {
            Err(Error::Divergence { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn clipping_caps_the_update_step() {
        let docs = [alloc::vec![String::from("alpha")]];
        let vocab = Vocab::build(docs.iter().map(|d| d.as_slice()), 1);
        let mut model = EncoderModel::new(vocab, 4, Pooling::Mean, 8, "t", 0).unwrap();
        // Force a large gradient by putting huge weights in the head.
        for i in 0..model.head_w.len() {
            model.head_w[i] = 100.0;
        }
        let encoded = EncodedExample {
            ids: model.encode_pair_ids("alpha", "alpha"),
            label: 0,
        };
        let before: Vec<f64> = (0..model.parameter_count()).map(|i| model.get_param(i)).collect();
        let cfg = TrainConfig {
            clip_norm: 0.5,
            learning_rate: 1.0,
            optimizer: Optimizer::Sgd,
            ..small_config(Pooling::Mean)
        };
        let bg = model.batch_gradients(core::slice::from_ref(&encoded));
        assert!(libm::sqrt(bg.grads.squared_norm()) > cfg.clip_norm);
        let mut opt = OptimizerState::zeros(&model);
        model.apply_update(bg.grads, &mut opt, &cfg);
        let moved: f64 = (0..model.parameter_count())
            .map(|i| {
                let d = model.get_param(i) - before[i];
                d * d
            })
            .sum();
        assert!(libm::sqrt(moved) <= cfg.clip_norm * cfg.learning_rate + 1e-9);
    }

    fn check_gradients(pooling: Pooling) {
        let docs = [alloc::vec![
            String::from("alpha"),
            String::from("omega"),
            String::from("count"),
        ]];
        let vocab = Vocab::build(docs.iter().map(|d| d.as_slice()), 1);
        let mut model = EncoderModel::new(vocab, 3, pooling, 16, "t", 5).unwrap();
        // Move off the all-zero head so head/attention gradients are
        // exercised at a generic point.
        let n = model.parameter_count();
        for i in 0..n {
            let bump = 0.01 * ((i % 7) as f64 - 3.0);
            model.set_param(i, model.get_param(i) + bump);
        }
        let batch = alloc::vec![
            EncodedExample { ids: model.encode_pair_ids("count alpha", "alpha count"), label: 1 },
            EncodedExample { ids: model.encode_pair_ids("count omega", "alpha count"), label: 0 },
            EncodedExample { ids: model.encode_pair_ids("omega", "omega omega"), label: 1 },
        ];
        let (_, analytic) = model.loss_and_flat_grad(&batch);
        let step = 1e-4;
        let mut checked = 0;
        for i in 0..n {
            let orig = model.get_param(i);
            model.set_param(i, orig + step);
            let (up, _) = model.loss_and_flat_grad(&batch);
            model.set_param(i, orig - step);
            let (down, _) = model.loss_and_flat_grad(&batch);
            model.set_param(i, orig);
            let numeric = (up - down) / (2.0 * step);
            let denom = analytic[i].abs().max(numeric.abs());
            if denom > 1e-8 {
                let rel = (analytic[i] - numeric).abs() / denom;
                assert!(rel < 1e-3, "param {i}: analytic {} vs numeric {numeric}", analytic[i]);
                checked += 1;
            } else {
                assert!((analytic[i] - numeric).abs() < 1e-8);
            }
        }
        assert!(checked > 0, "no informative parameters checked");
    }

    #[test]
    fn mean_pooling_gradients_match_finite_differences() {
        check_gradients(Pooling::Mean);
    }

    #[test]
    fn attention_pooling_gradients_match_finite_differences() {
        check_gradients(Pooling::Attention);
    }

    #[test]
    fn flat_param_round_trip() {
        let docs = [alloc::vec![String::from("a")]];
        let vocab = Vocab::build(docs.iter().map(|d| d.as_slice()), 1);
        let mut model = EncoderModel::new(vocab, 2, Pooling::Mean, 8, "t", 1).unwrap();
        let n = model.parameter_count();
        assert_eq!(n, 5 * 2 + 2 + 4 + 2); // 5 vocab rows + attn + head
        for i in 0..n {
            model.set_param(i, i as f64);
        }
        for i in 0..n {
            assert_eq!(model.get_param(i), i as f64);
        }
        let rebuilt = EncoderModel::from_parts(
            model.vocab.clone(),
            model.dim,
            model.pooling,
            model.max_len,
            &model.tag,
            model.seed,
            model.embedding().to_vec(),
            model.attn().to_vec(),
            model.head_w().to_vec(),
            model.head_b().to_vec(),
        )
        .unwrap();
        assert_eq!(model, rebuilt);
    }

    #[test]
    fn shape_mismatches_are_rejected() {
        let docs = [alloc::vec![String::from("a")]];
        let vocab = Vocab::build(docs.iter().map(|d| d.as_slice()), 1);
        let bad = EncoderModel::from_parts(
            vocab,
            2,
            Pooling::Mean,
            8,
            "t",
            0,
            alloc::vec![0.0; 3],
            alloc::vec![0.0; 2],
            alloc::vec![0.0; 4],
            alloc::vec![0.0; 2],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn hidden_vector_ignores_padding() {
        let docs = [alloc::vec![String::from("alpha"), String::from("beta")]];
        let vocab = Vocab::build(docs.iter().map(|d| d.as_slice()), 1);
        let model = EncoderModel::new(vocab, 4, Pooling::Mean, 16, "t", 2).unwrap();
        let base = model.encode_pair_ids("alpha", "beta");
        let mut padded = base.clone();
        padded.extend([PAD, PAD, PAD]);
        assert_eq!(model.encode_ids(&base), model.encode_ids(&padded));
    }
}
