//! Combining several trained matching models into one scorer.
//!
//! Each member model turns a query/code pair into its pooled hidden
//! vector; the ensemble concatenates those blocks and feeds them through a
//! two-layer ReLU network ending in the usual two logits. Members stay
//! frozen by default — their hidden vectors are cached once and only the
//! combining network trains — but fine-tuning can propagate gradients back
//! into member embeddings and attention weights.
//!
//! The output layer starts at zero, so an untrained ensemble scores every
//! pair at exactly 0.5, matching the single-model convention.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::corpus::PairExample;
use crate::encoder::{log_sum_exp2, softmax2, EncoderGrads, EncoderModel, Optimizer};
use crate::error::Error;
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    /// Width of the combining layer; defaults to half the concatenated
    /// input width (at least 2).
    pub hidden: Option<usize>,
    /// Propagate gradients into member embeddings and attention weights.
    pub finetune_members: bool,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub batch_size: usize,
    pub epochs: usize,
    pub clip_norm: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            hidden: None,
            finetune_members: false,
            learning_rate: 1e-2,
            optimizer: Optimizer::Adagrad,
            batch_size: 32,
            epochs: 20,
            clip_norm: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    pub members: Vec<EncoderModel>,
    pub hidden_dim: usize,
    pub seed: u64,
    /// Whether member parameters were updated during ensemble training.
    pub finetuned: bool,
    /// Per-coordinate feature mean, fixed from the training set. Pooled
    /// member vectors are tiny (averages of small embeddings), so inputs
    /// are standardized before the combining network sees them.
    mu: Vec<f64>,
    /// Per-coordinate feature deviation; constant coordinates keep 1.
    sigma: Vec<f64>,
    /// hidden_dim x input_dim combining layer, row major.
    w1: Vec<f64>,
    b1: Vec<f64>,
    /// 2 x hidden_dim output layer, row major.
    w2: Vec<f64>,
    b2: Vec<f64>,
}

/// Concatenates each member's pooled hidden vector for one pair.
pub fn concat_hidden(members: &[EncoderModel], query: &str, code: &str) -> Vec<f64> {
    let mut out = Vec::with_capacity(members.iter().map(|m| m.dim).sum());
    for m in members {
        out.extend(m.hidden_for_pair(query, code));
    }
    out
}

/// A trained ensemble with its per-epoch mean loss.
#[derive(Debug, Clone)]
pub struct EnsembleTrainOutcome {
    pub model: EnsembleModel,
    pub loss_curve: Vec<f64>,
}

struct MlpGrads {
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

impl MlpGrads {
    fn zeros(model: &EnsembleModel) -> Self {
        MlpGrads {
            w1: vec![0.0; model.w1.len()],
            b1: vec![0.0; model.b1.len()],
            w2: vec![0.0; model.w2.len()],
            b2: vec![0.0; model.b2.len()],
        }
    }

    fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut())
    }

    fn squared_norm(&self) -> f64 {
        self.w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(&self.b2)
            .map(|g| g * g)
            .sum()
    }
}

impl EnsembleModel {
    /// Fresh ensemble over trained members. The combining layer is seeded
    /// uniform ±0.05; the rest starts at zero.
    pub fn new(members: Vec<EncoderModel>, hidden: Option<usize>, seed: u64) -> Result<Self, Error> {
        if members.is_empty() {
            return Err(Error::contract("an ensemble needs at least one member"));
        }
        let input_dim: usize = members.iter().map(|m| m.dim).sum();
        let hidden_dim = hidden.unwrap_or((input_dim / 2).max(2));
        if hidden_dim == 0 {
            return Err(Error::contract("combining layer width must be positive"));
        }
        let mut rng = stream(seed, "ensemble-init", &[]);
        let w1 = (0..hidden_dim * input_dim)
            .map(|_| rng.gen_range(-0.05..=0.05))
            .collect();
        Ok(EnsembleModel {
            members,
            hidden_dim,
            seed,
            finetuned: false,
            mu: vec![0.0; input_dim],
            sigma: vec![1.0; input_dim],
            w1,
            b1: vec![0.0; hidden_dim],
            w2: vec![0.0; 2 * hidden_dim],
            b2: vec![0.0; 2],
        })
    }

    /// Restores an ensemble from stored tensors, validating shapes.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        members: Vec<EncoderModel>,
        hidden_dim: usize,
        seed: u64,
        finetuned: bool,
        mu: Vec<f64>,
        sigma: Vec<f64>,
        w1: Vec<f64>,
        b1: Vec<f64>,
        w2: Vec<f64>,
        b2: Vec<f64>,
    ) -> Result<Self, Error> {
        if members.is_empty() {
            return Err(Error::contract("an ensemble needs at least one member"));
        }
        let input_dim: usize = members.iter().map(|m| m.dim).sum();
        if mu.len() != input_dim
            || sigma.len() != input_dim
            || w1.len() != hidden_dim * input_dim
            || b1.len() != hidden_dim
            || w2.len() != 2 * hidden_dim
            || b2.len() != 2
        {
            return Err(Error::contract("combining network tensor shape mismatch"));
        }
        if sigma.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::contract("feature deviations must be positive"));
        }
        Ok(EnsembleModel {
            members,
            hidden_dim,
            seed,
            finetuned,
            mu,
            sigma,
            w1,
            b1,
            w2,
            b2,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.members.iter().map(|m| m.dim).sum()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn w1(&self) -> &[f64] {
        &self.w1
    }

    pub fn b1(&self) -> &[f64] {
        &self.b1
    }

    pub fn w2(&self) -> &[f64] {
        &self.w2
    }

    pub fn b2(&self) -> &[f64] {
        &self.b2
    }

    /// Concatenated member features for one pair.
    pub fn features(&self, query: &str, code: &str) -> Vec<f64> {
        concat_hidden(&self.members, query, code)
    }

    /// Fixes the input standardization from a set of training features.
    fn fit_standardization(&mut self, features: &[Vec<f64>]) {
        let n = features.len();
        if n == 0 {
            return;
        }
        let dim = self.input_dim();
        let mut mean = vec![0.0; dim];
        for x in features {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let mut var = vec![0.0; dim];
        for x in features {
            for ((v, m), acc) in x.iter().zip(&mean).zip(var.iter_mut()) {
                let d = v - m;
                *acc += d * d;
            }
        }
        self.mu = mean;
        self.sigma = var
            .into_iter()
            .map(|v| {
                let v = v / n as f64;
                if v > 1e-12 {
                    libm::sqrt(v)
                } else {
                    1.0
                }
            })
            .collect();
    }

    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mu)
            .zip(&self.sigma)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    /// Forward pass over an already-standardized input.
    fn forward(&self, xs: &[f64]) -> (Vec<f64>, Vec<f64>, [f64; 2]) {
        let input_dim = self.input_dim();
        let mut z = vec![0.0; self.hidden_dim];
        for i in 0..self.hidden_dim {
            let row = &self.w1[i * input_dim..(i + 1) * input_dim];
            z[i] = row.iter().zip(xs).map(|(w, v)| w * v).sum::<f64>() + self.b1[i];
        }
        let r: Vec<f64> = z.iter().map(|&v| v.max(0.0)).collect();
        let mut logits = [self.b2[0], self.b2[1]];
        for k in 0..2 {
            let row = &self.w2[k * self.hidden_dim..(k + 1) * self.hidden_dim];
            logits[k] += row.iter().zip(&r).map(|(w, v)| w * v).sum::<f64>();
        }
        (z, r, logits)
    }

    /// Match probability from precomputed (raw) features.
    pub fn score_features(&self, x: &[f64]) -> f64 {
        let (_, _, logits) = self.forward(&self.standardize(x));
        softmax2(logits)[1]
    }

    /// Match probability for raw query/code text.
    pub fn score_pair(&self, query: &str, code: &str) -> f64 {
        self.score_features(&self.features(query, code))
    }

    /// Cross-entropy loss and gradients on the combining network for one
    /// batch of cached features. Returns the gradient on each input too,
    /// for fine-tuning members.
    fn mlp_batch(&self, batch: &[(&[f64], u8)]) -> (f64, MlpGrads, Vec<Vec<f64>>) {
        let input_dim = self.input_dim();
        let mut grads = MlpGrads::zeros(self);
        let mut d_inputs = Vec::with_capacity(batch.len());
        let mut loss = 0.0;
        for (x, label) in batch {
            let xs = self.standardize(x);
            let (z, r, logits) = self.forward(&xs);
            loss += log_sum_exp2(logits) - logits[usize::from(*label)];
            let probs = softmax2(logits);
            let mut d_logits = probs;
            d_logits[usize::from(*label)] -= 1.0;

            let mut d_r = vec![0.0; self.hidden_dim];
            for k in 0..2 {
                grads.b2[k] += d_logits[k];
                for j in 0..self.hidden_dim {
                    grads.w2[k * self.hidden_dim + j] += d_logits[k] * r[j];
                    d_r[j] += d_logits[k] * self.w2[k * self.hidden_dim + j];
                }
            }
            let mut d_x = vec![0.0; input_dim];
            for i in 0..self.hidden_dim {
                if z[i] <= 0.0 {
                    continue;
                }
                let dz = d_r[i];
                grads.b1[i] += dz;
                let row = &self.w1[i * input_dim..(i + 1) * input_dim];
                for j in 0..input_dim {
                    grads.w1[i * input_dim + j] += dz * xs[j];
                    d_x[j] += dz * row[j];
                }
            }
            // Chain back through the fixed standardization to raw features.
            for (g, s) in d_x.iter_mut().zip(&self.sigma) {
                *g /= s;
            }
            d_inputs.push(d_x);
        }
        let inv = 1.0 / batch.len().max(1) as f64;
        for g in grads.iter_mut() {
            *g *= inv;
        }
        for dx in &mut d_inputs {
            for g in dx.iter_mut() {
                *g *= inv;
            }
        }
        (loss * inv, grads, d_inputs)
    }

    /// Number of combining-network parameters (`w1 ‖ b1 ‖ w2 ‖ b2`).
    pub fn mlp_parameter_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    pub fn get_mlp_param(&self, mut i: usize) -> f64 {
        for part in [&self.w1, &self.b1, &self.w2, &self.b2] {
            if i < part.len() {
                return part[i];
            }
            i -= part.len();
        }
        panic!("parameter index out of range");
    }

    pub fn set_mlp_param(&mut self, mut i: usize, value: f64) {
        for part in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2] {
            if i < part.len() {
                part[i] = value;
                return;
            }
            i -= part.len();
        }
        panic!("parameter index out of range");
    }

    /// Loss and dense combining-network gradient in [`get_mlp_param`]
    /// order, for numerical verification.
    pub fn mlp_loss_and_flat_grad(&self, features: &[(Vec<f64>, u8)]) -> (f64, Vec<f64>) {
        let batch: Vec<(&[f64], u8)> = features.iter().map(|(x, l)| (x.as_slice(), *l)).collect();
        let (loss, grads, _) = self.mlp_batch(&batch);
        let mut flat = Vec::with_capacity(self.mlp_parameter_count());
        flat.extend(&grads.w1);
        flat.extend(&grads.b1);
        flat.extend(&grads.w2);
        flat.extend(&grads.b2);
        (loss, flat)
    }

    /// Trains the ensemble on a balanced pair dataset. With frozen members
    /// the features are computed once and reused every epoch.
    pub fn train(
        members: Vec<EncoderModel>,
        examples: &[PairExample],
        config: &EnsembleConfig,
        seed: u64,
    ) -> Result<EnsembleTrainOutcome, Error> {
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
        let mut model = EnsembleModel::new(members, config.hidden, seed)?;

        // Per-member id sequences are fixed either way; frozen training
        // additionally fixes the features themselves.
        let member_ids: Vec<Vec<Vec<usize>>> = model
            .members
            .iter()
            .map(|m| {
                examples
                    .iter()
                    .map(|ex| m.encode_pair_ids(&ex.query, &ex.code))
                    .collect()
            })
            .collect();
        let labels: Vec<u8> = examples.iter().map(|ex| ex.label).collect();
        let initial_features: Vec<Vec<f64>> = (0..examples.len())
            .map(|e| {
                let mut x = Vec::with_capacity(model.input_dim());
                for (m, ids) in model.members.iter().zip(&member_ids) {
                    x.extend(m.encode_ids(&ids[e]));
                }
                x
            })
            .collect();
        model.fit_standardization(&initial_features);
        let frozen_features = if config.finetune_members {
            Vec::new()
        } else {
            initial_features
        };

        let mut opt = OptState::zeros(&model);
        let mut order: Vec<usize> = (0..examples.len()).collect();
        let mut loss_curve = Vec::with_capacity(config.epochs);
        for epoch in 0..config.epochs {
            let mut rng = stream(seed, "ensemble-shuffle", &[epoch as u64]);
            for i in (1..order.len()).rev() {
                let j = rng.gen_range(0..=i);
                order.swap(i, j);
            }
            let mut epoch_loss = 0.0;
            let mut batches = 0usize;
            for chunk in order.chunks(config.batch_size) {
                let loss = if config.finetune_members {
                    model.finetune_step(chunk, &member_ids, &labels, config, &mut opt)
                } else {
                    model.frozen_step(chunk, &frozen_features, &labels, config, &mut opt)
                };
                epoch_loss += loss;
                batches += 1;
            }
            let mean = epoch_loss / batches.max(1) as f64;
            if !mean.is_finite() {
                return Err(Error::Divergence { epoch, loss: mean });
            }
            loss_curve.push(mean);
        }
        model.finetuned = config.finetune_members;
        Ok(EnsembleTrainOutcome { model, loss_curve })
    }

    fn frozen_step(
        &mut self,
        chunk: &[usize],
        features: &[Vec<f64>],
        labels: &[u8],
        config: &EnsembleConfig,
        opt: &mut OptState,
    ) -> f64 {
        let batch: Vec<(&[f64], u8)> = chunk
            .iter()
            .map(|&e| (features[e].as_slice(), labels[e]))
            .collect();
        let (loss, mut grads, _) = self.mlp_batch(&batch);
        let norm = libm::sqrt(grads.squared_norm());
        if norm > config.clip_norm {
            let f = config.clip_norm / norm;
            for g in grads.iter_mut() {
                *g *= f;
            }
        }
        self.apply_mlp(&grads, opt, config);
        loss
    }

    fn finetune_step(
        &mut self,
        chunk: &[usize],
        member_ids: &[Vec<Vec<usize>>],
        labels: &[u8],
        config: &EnsembleConfig,
        opt: &mut OptState,
    ) -> f64 {
        // Forward: fresh features (members move between batches).
        let traces: Vec<Vec<crate::encoder::EncodeTrace>> = chunk
            .iter()
            .map(|&e| {
                self.members
                    .iter()
                    .zip(member_ids)
                    .map(|(m, ids)| m.encode_trace(&ids[e]))
                    .collect()
            })
            .collect();
        let feats: Vec<Vec<f64>> = traces
            .iter()
            .map(|per_member| {
                let mut x = Vec::with_capacity(self.input_dim());
                for t in per_member {
                    x.extend(t.hidden.iter().copied());
                }
                x
            })
            .collect();
        let batch: Vec<(&[f64], u8)> = chunk
            .iter()
            .zip(&feats)
            .map(|(&e, x)| (x.as_slice(), labels[e]))
            .collect();
        let (loss, mut grads, d_inputs) = self.mlp_batch(&batch);

        // Backward into members, blockwise.
        let mut member_grads: Vec<EncoderGrads> =
            self.members.iter().map(|m| EncoderGrads::zeros(m.dim)).collect();
        for (per_member, d_x) in traces.iter().zip(&d_inputs) {
            let mut offset = 0;
            for ((m, trace), mg) in self
                .members
                .iter()
                .zip(per_member)
                .zip(member_grads.iter_mut())
            {
                m.encode_backward(trace, &d_x[offset..offset + m.dim], mg);
                offset += m.dim;
            }
        }

        let mut total = grads.squared_norm();
        for mg in &member_grads {
            total += mg.squared_norm();
        }
        let norm = libm::sqrt(total);
        if norm > config.clip_norm {
            let f = config.clip_norm / norm;
            for g in grads.iter_mut() {
                *g *= f;
            }
            for mg in &mut member_grads {
                mg.scale(f);
            }
        }
        self.apply_mlp(&grads, opt, config);
        for ((m, mg), state) in self
            .members
            .iter_mut()
            .zip(member_grads)
            .zip(&mut opt.members)
        {
            apply_member(m, mg, state, config);
        }
        loss
    }

    fn apply_mlp(&mut self, grads: &MlpGrads, opt: &mut OptState, config: &EnsembleConfig) {
        let lr = config.learning_rate;
        let params = self
            .w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut());
        let grad_vals = grads.w1.iter().chain(&grads.b1).chain(&grads.w2).chain(&grads.b2);
        match config.optimizer {
            Optimizer::Sgd => {
                for (p, g) in params.zip(grad_vals) {
                    *p -= lr * g;
                }
            }
            Optimizer::Adagrad => {
                const EPS: f64 = 1e-8;
                for ((p, g), acc) in params.zip(grad_vals).zip(opt.mlp.iter_mut()) {
                    *acc += g * g;
                    *p -= lr * g / (libm::sqrt(*acc) + EPS);
                }
            }
        }
    }
}

/// Adaptive accumulators for the combining network and, under
/// fine-tuning, each member.
struct OptState {
    mlp: Vec<f64>,
    members: Vec<MemberOpt>,
}

struct MemberOpt {
    embedding: Vec<f64>,
    attn: Vec<f64>,
}

impl OptState {
    fn zeros(model: &EnsembleModel) -> Self {
        OptState {
            mlp: vec![0.0; model.mlp_parameter_count()],
            members: model
                .members
                .iter()
                .map(|m| MemberOpt {
                    embedding: vec![0.0; m.embedding().len()],
                    attn: vec![0.0; m.dim],
                })
                .collect(),
        }
    }
}

fn apply_member(
    model: &mut EncoderModel,
    grads: EncoderGrads,
    opt: &mut MemberOpt,
    config: &EnsembleConfig,
) {
    let lr = config.learning_rate;
    let dim = model.dim;
    // Only pooling-path parameters receive gradient here; the member heads
    // are not part of the ensemble forward pass.
    let mut emb_updates: Vec<(usize, f64)> = Vec::new();
    for (&id, row) in &grads.embedding {
        for (j, g) in row.iter().enumerate() {
            emb_updates.push((id * dim + j, *g));
        }
    }
    match config.optimizer {
        Optimizer::Sgd => {
            for (k, g) in emb_updates {
                model.nudge_embedding(k, -lr * g);
            }
            for (j, g) in grads.attn.iter().enumerate() {
                model.nudge_attn(j, -lr * g);
            }
        }
        Optimizer::Adagrad => {
            const EPS: f64 = 1e-8;
            for (k, g) in emb_updates {
                opt.embedding[k] += g * g;
                model.nudge_embedding(k, -lr * g / (libm::sqrt(opt.embedding[k]) + EPS));
            }
            for (j, g) in grads.attn.iter().enumerate() {
                opt.attn[j] += g * g;
                model.nudge_attn(j, -lr * g / (libm::sqrt(opt.attn[j]) + EPS));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Provenance;
    use crate::encoder::Pooling;
    use crate::vocab::Vocab;
    use alloc::string::String;

    fn pair(query: &str, code: &str, label: u8) -> PairExample {
        PairExample {
            query: query.into(),
            code: code.into(),
            label,
            provenance: Provenance::Original,
            origin_id: String::from("t"),
        }
    }

    /// Matching pairs repeat a cue word across query and code; mismatched
    /// ones split their cues. Additive member models cannot separate this,
    /// but the combining network can (repetition concentrates feature mass).
    fn coincidence_pairs() -> Vec<PairExample> {
        let cues = ["alpha", "bravo", "carol", "delta", "echo", "frank"];
        let mut out = Vec::new();
        for i in 0..24 {
            let cue = cues[i % cues.len()];
            let other = cues[(i + 1 + i % 3) % cues.len()];
            let code = alloc::format!(
                "int {cue}Total(int n{i}) {{ int {cue} = n{i}; return {cue} + {cue}; }}"
            );
            out.push(pair(&alloc::format!("compute the {cue} total"), &code, 1));
            out.push(pair(&alloc::format!("compute the {other} total"), &code, 0));
        }
        out
    }

    fn untrained_members(examples: &[PairExample], dims: &[usize]) -> Vec<EncoderModel> {
        let mut docs: Vec<Vec<String>> = Vec::new();
        for ex in examples {
            docs.push(crate::subtoken::query_tokens(&ex.query));
            docs.push(crate::subtoken::code_tokens(&ex.code));
        }
        let vocab = Vocab::build(docs.iter().map(|d| d.as_slice()), 1);
        dims.iter()
            .enumerate()
            .map(|(i, &dim)| {
                EncoderModel::new(
                    vocab.clone(),
                    dim,
                    Pooling::Mean,
                    64,
                    &alloc::format!("m{i}"),
                    40 + i as u64,
                )
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn untrained_ensemble_scores_half() {
        let examples = coincidence_pairs();
        let members = untrained_members(&examples, &[8, 6]);
        let model = EnsembleModel::new(members, None, 1).unwrap();
        assert_eq!(model.score_pair("any query", "any code"), 0.5);
    }

    #[test]
    fn features_concatenate_member_blocks() {
        let examples = coincidence_pairs();
        let members = untrained_members(&examples, &[8, 6, 4]);
        let model = EnsembleModel::new(members.clone(), None, 1).unwrap();
        assert_eq!(model.input_dim(), 18);
        let x = model.features("compute the alpha total", "int a() { return 1; }");
        assert_eq!(x.len(), 18);
        for (i, m) in members.iter().enumerate() {
            let offset: usize = members[..i].iter().map(|m| m.dim).sum();
            let own = m.hidden_for_pair("compute the alpha total", "int a() { return 1; }");
            assert_eq!(&x[offset..offset + m.dim], own.as_slice());
        }
    }

    #[test]
    fn frozen_training_learns_what_members_cannot() {
        let examples = coincidence_pairs();
        let members = untrained_members(&examples, &[12, 12]);
        let before: Vec<EncoderModel> = members.clone();
        let config = EnsembleConfig {
            hidden: Some(24),
            epochs: 300,
            learning_rate: 0.05,
            batch_size: 16,
            ..EnsembleConfig::default()
        };
        let out = EnsembleModel::train(members, &examples, &config, 7).unwrap();
        let curve = &out.loss_curve;
        assert!(
            curve[curve.len() - 1] < 0.45,
            "combining network failed to learn: {:?}",
            &curve[curve.len().saturating_sub(3)..]
        );
        // Frozen members come out bit-identical.
        assert_eq!(out.model.members, before);
        assert!(!out.model.finetuned);
        let correct = examples
            .iter()
            .filter(|ex| {
                let s = out.model.score_pair(&ex.query, &ex.code);
                (s > 0.5) == (ex.label == 1)
            })
            .count();
        assert!(
            correct * 10 >= examples.len() * 8,
            "accuracy {correct}/{}",
            examples.len()
        );
    }

    #[test]
    fn finetuning_moves_member_parameters() {
        let examples = coincidence_pairs();
        let members = untrained_members(&examples, &[8, 8]);
        let before = members.clone();
        let config = EnsembleConfig {
            hidden: Some(16),
            finetune_members: true,
            epochs: 40,
            learning_rate: 0.05,
            batch_size: 16,
            ..EnsembleConfig::default()
        };
        let out = EnsembleModel::train(members, &examples, &config, 7).unwrap();
        assert!(out.model.finetuned);
        assert_ne!(out.model.members, before, "fine-tuning left members frozen");
        assert!(out.loss_curve[out.loss_curve.len() - 1] < out.loss_curve[0]);
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let examples = coincidence_pairs();
        let config = EnsembleConfig {
            hidden: Some(8),
            epochs: 5,
            ..EnsembleConfig::default()
        };
        let a = EnsembleModel::train(untrained_members(&examples, &[8]), &examples, &config, 3)
            .unwrap();
        let b = EnsembleModel::train(untrained_members(&examples, &[8]), &examples, &config, 3)
            .unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.loss_curve, b.loss_curve);
        let c = EnsembleModel::train(untrained_members(&examples, &[8]), &examples, &config, 4)
            .unwrap();
        assert_ne!(a.model, c.model);
    }

    #[test]
    fn mlp_gradients_match_finite_differences() {
        let examples = coincidence_pairs();
        let members = untrained_members(&examples, &[5, 3]);
        let mut model = EnsembleModel::new(members, Some(6), 9).unwrap();
        // Move off the zero output layer so every path carries gradient,
        // then push each hidden unit firmly active or firmly dead: probing
        // across the ReLU kink would make finite differences lie.
        for i in 0..model.mlp_parameter_count() {
            let bump = 0.03 * (((i * 7) % 11) as f64 - 5.0) / 5.0;
            model.set_mlp_param(i, model.get_mlp_param(i) + bump);
        }
        let b1_offset = model.w1().len();
        for i in 0..model.hidden_dim {
            let sign = if i % 2 == 0 { 0.5 } else { -0.5 };
            model.set_mlp_param(b1_offset + i, sign);
        }
        let feats: Vec<(Vec<f64>, u8)> = examples[..6]
            .iter()
            .map(|ex| (model.features(&ex.query, &ex.code), ex.label))
            .collect();
        let (_, analytic) = model.mlp_loss_and_flat_grad(&feats);
        let step = 1e-4;
        let mut checked = 0;
        for i in 0..model.mlp_parameter_count() {
            let orig = model.get_mlp_param(i);
            model.set_mlp_param(i, orig + step);
            let (up, _) = model.mlp_loss_and_flat_grad(&feats);
            model.set_mlp_param(i, orig - step);
            let (down, _) = model.mlp_loss_and_flat_grad(&feats);
            model.set_mlp_param(i, orig);
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
        assert!(checked > 0);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let examples = coincidence_pairs();
        assert!(EnsembleModel::new(Vec::new(), None, 0).is_err());
        let members = untrained_members(&examples, &[4]);
        assert!(
            EnsembleModel::train(members.clone(), &[], &EnsembleConfig::default(), 0).is_err()
        );
        let only_pos: Vec<PairExample> =
            examples.iter().filter(|e| e.label == 1).cloned().collect();
        assert!(EnsembleModel::train(members, &only_pos, &EnsembleConfig::default(), 0).is_err());
    }

    #[test]
    fn tensor_round_trip() {
        let examples = coincidence_pairs();
        let members = untrained_members(&examples, &[4, 4]);
        let model = EnsembleModel::new(members, Some(5), 2).unwrap();
        let rebuilt = EnsembleModel::from_parts(
            model.members.clone(),
            model.hidden_dim,
            model.seed,
            model.finetuned,
            model.mu().to_vec(),
            model.sigma().to_vec(),
            model.w1().to_vec(),
            model.b1().to_vec(),
            model.w2().to_vec(),
            model.b2().to_vec(),
        )
        .unwrap();
        assert_eq!(model, rebuilt);
        assert!(EnsembleModel::from_parts(
            model.members.clone(),
            model.hidden_dim + 1,
            model.seed,
            false,
            model.mu().to_vec(),
            model.sigma().to_vec(),
            model.w1().to_vec(),
            model.b1().to_vec(),
            model.w2().to_vec(),
            model.b2().to_vec(),
        )
        .is_err());
    }
}
