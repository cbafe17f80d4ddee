//! A desk-scale sequence-to-sequence transformer with exact gradients.
//!
//! Deliberately small and auditable: f64 parameters and activations, no
//! autodiff framework, no GPU. Training follows the standard recipe — Adam on
//! batches of 64, linear warmup then cosine scheduling — and every run is a
//! deterministic function of (seed, data order).

mod checkpoint;
mod mat;
mod model;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use model::{GradBuf, Model};
pub use train::{lr_schedule, train_step, AdamState, TrainConfig, TrainLogRow};

use crate::codec::Scheme;
use crate::codec::{self, TaskKind};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("token id {id} is outside the vocabulary")]
    OutOfVocabulary { id: u32 },
    #[error("sequence of length {len} exceeds the maximum {max}")]
    SequenceTooLong { len: usize, max: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("training diverged at step {step}: loss {loss}")]
    Diverged { step: u64, loss: f64 },
    #[error("checkpoint io error on {path}: {source}")]
    CheckpointIo {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid checkpoint: {0}")]
    InvalidCheckpoint(String),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelConfig {
    pub enc_layers: usize,
    pub dec_layers: usize,
    pub dim: usize,
    pub heads: usize,
    pub ffn_mult: usize,
    pub src_scheme: Scheme,
    pub tgt_scheme: Scheme,
    pub max_src_len: usize,
    pub max_tgt_len: usize,
    pub seed: u64,
}

impl ModelConfig {
    /// Desk-scale defaults sized for a given task/matrix side: 2 encoder
    /// layers, 1 decoder layer, width 64, 4 heads.
    pub fn desk(
        task: TaskKind,
        n: usize,
        src_scheme: Scheme,
        tgt_scheme: Scheme,
        seed: u64,
    ) -> ModelConfig {
        ModelConfig {
            enc_layers: 2,
            dec_layers: 1,
            dim: 64,
            heads: 4,
            ffn_mult: 4,
            src_scheme,
            tgt_scheme,
            max_src_len: codec::input_len(n, src_scheme),
            max_tgt_len: codec::target_len(task, n, tgt_scheme) + 2,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.enc_layers == 0 || self.dec_layers == 0 {
            return Err(TrainError::InvalidConfig("layers must be >= 1".into()));
        }
        if self.dim == 0 || self.heads == 0 || self.dim % self.heads != 0 {
            return Err(TrainError::InvalidConfig(format!(
                "dim {} must be a positive multiple of heads {}",
                self.dim, self.heads
            )));
        }
        if self.ffn_mult == 0 {
            return Err(TrainError::InvalidConfig("ffn_mult must be >= 1".into()));
        }
        if self.max_src_len == 0 || self.max_tgt_len < 2 {
            return Err(TrainError::InvalidConfig(
                "sequence length limits are too small".into(),
            ));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.dim / self.heads
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{BOS, EOS};
    use crate::datagen::{self, DatasetSpec};
    use crate::ensembles::{EnsembleConfig, EnsembleKind};

    fn toy_cfg(seed: u64) -> ModelConfig {
        ModelConfig {
            enc_layers: 2,
            dec_layers: 1,
            dim: 16,
            heads: 4,
            ffn_mult: 2,
            src_scheme: Scheme::P1000,
            tgt_scheme: Scheme::P1000,
            max_src_len: 16,
            max_tgt_len: 10,
            seed,
        }
    }

    fn toy_batch(count: usize, seed: u64) -> Vec<(Vec<u32>, Vec<u32>)> {
        let spec = DatasetSpec::new(
            TaskKind::Eigenvalues,
            EnsembleConfig::new(EnsembleKind::Semicircle, 2, seed),
            Scheme::P1000,
            Scheme::P1000,
            count as u64,
            seed,
        );
        datagen::stream_records(&spec)
            .map(|r| {
                let r = r.unwrap();
                (r.input.ids, r.target.ids)
            })
            .collect()
    }

    #[test]
    fn config_validation() {
        assert!(toy_cfg(0).validate().is_ok());
        let mut bad = toy_cfg(0);
        bad.dim = 30;
        assert!(bad.validate().is_err());
        bad = toy_cfg(0);
        bad.enc_layers = 0;
        assert!(bad.validate().is_err());
        // Head width 43 (e.g. 516 dims / 12 heads) is allowed.
        let mut odd = toy_cfg(0);
        odd.dim = 516;
        odd.heads = 12;
        assert!(odd.validate().is_ok());
        assert_eq!(odd.head_dim(), 43);
    }

    #[test]
    fn desk_config_head_dim() {
        let cfg = ModelConfig::desk(TaskKind::Eigenvalues, 2, Scheme::P1000, Scheme::P1000, 0);
        assert_eq!(cfg.dim / cfg.heads, 16);
        let cfg8 = ModelConfig {
            dim: 64,
            heads: 8,
            ..cfg
        };
        assert_eq!(cfg8.head_dim(), 8);
    }

    #[test]
    fn init_is_deterministic() {
        let cfg = toy_cfg(7);
        let a = Model::init(&cfg).unwrap();
        let b = Model::init(&cfg).unwrap();
        let ta = a.tensors();
        let tb = b.tensors();
        assert_eq!(ta.len(), tb.len());
        for (x, y) in ta.iter().zip(&tb) {
            assert_eq!(x.data, y.data);
        }
        let c = Model::init(&ModelConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a.tensors()[0].data, c.tensors()[0].data);
    }

    #[test]
    fn parameter_count_matches_closed_form() {
        let cfg = toy_cfg(0);
        let model = Model::init(&cfg).unwrap();
        let d = cfg.dim;
        let f = cfg.ffn_mult * d;
        let vs = cfg.src_scheme.vocab().len();
        let vt = cfg.tgt_scheme.vocab().len();
        // embeddings + positions
        let mut expected = vs * d + cfg.max_src_len * d + vt * d + cfg.max_tgt_len * d;
        // encoder layer: 2 LNs + 4 attn linears + FFN
        expected += cfg.enc_layers * (2 * 2 * d + 4 * (d * d + d) + (d * f + f) + (f * d + d));
        // decoder layer: 3 LNs + 8 attn linears + FFN
        expected += cfg.dec_layers * (3 * 2 * d + 8 * (d * d + d) + (d * f + f) + (f * d + d));
        // final norms + output projection
        expected += 2 * 2 * d + (d * vt + vt);
        assert_eq!(model.parameter_count(), expected);
    }

    #[test]
    fn untrained_loss_is_near_log_vocab() {
        let model = Model::init(&toy_cfg(3)).unwrap();
        let batch = toy_batch(8, 123);
        let loss = model.forward_loss(&batch).unwrap();
        let baseline = (Scheme::P1000.vocab().len() as f64).ln();
        assert!(
            (loss - baseline).abs() / baseline < 0.1,
            "loss {loss} vs ln V {baseline}"
        );
    }

    #[test]
    fn repeated_example_keeps_batch_loss() {
        let model = Model::init(&toy_cfg(4)).unwrap();
        let one = toy_batch(1, 9);
        let single = model.forward_loss(&one).unwrap();
        let repeated: Vec<_> = std::iter::repeat(one[0].clone()).take(6).collect();
        let batch = model.forward_loss(&repeated).unwrap();
        assert!((single - batch).abs() < 1e-12, "{single} vs {batch}");
    }

    #[test]
    fn batch_loss_is_permutation_invariant() {
        let model = Model::init(&toy_cfg(5)).unwrap();
        let mut batch = toy_batch(6, 31);
        let a = model.forward_loss(&batch).unwrap();
        batch.reverse();
        let b = model.forward_loss(&batch).unwrap();
        batch.swap(0, 3);
        let c = model.forward_loss(&batch).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(a.to_bits(), c.to_bits());
    }

    #[test]
    fn decoder_is_causal() {
        let model = Model::init(&toy_cfg(6)).unwrap();
        let batch = toy_batch(1, 77);
        let (src, tgt) = batch[0].clone();
        let base = model.teacher_logits(&src, &tgt).unwrap();
        // Alter the final target token: logits at all earlier positions must
        // be bit-identical.
        let mut altered = tgt.clone();
        let last = altered.len() - 1;
        altered[last] = if altered[last] == 10 { 11 } else { 10 };
        let changed = model.teacher_logits(&src, &altered).unwrap();
        assert_eq!(base.rows, changed.rows);
        for t in 0..last + 1 {
            let a: Vec<u64> = base.row(t).iter().map(|v| v.to_bits()).collect();
            let b: Vec<u64> = changed.row(t).iter().map(|v| v.to_bits()).collect();
            assert_eq!(a, b, "position {t} saw a future token");
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        // Central differences at h = 1e-5 over parameters sampled from every
        // tensor class; relative error floored at 1e-6 magnitude.
        let cfg = toy_cfg(17);
        let mut model = Model::init(&cfg).unwrap();
        let batch = toy_batch(4, 55);
        let (_, grads) = model.forward_backward(&batch, 1).unwrap();

        let mut stream = crate::rng::Stream::derive(99, 0, crate::rng::Lane::Model);
        let shapes: Vec<(usize, usize)> = model
            .tensors()
            .iter()
            .map(|t| (t.id, t.data.len()))
            .collect();
        let mut worst: f64 = 0.0;
        let mut checked = 0;
        let h = 1e-5;
        // Round-robin over tensors so every class is covered.
        'outer: loop {
            for &(id, len) in &shapes {
                let k = (stream.next_u64() % len as u64) as usize;
                let analytic = grads.slice(id)[k];
                let original = model.tensors()[id].data[k];
                model.tensors_mut()[id].data[k] = original + h;
                let plus = model.forward_loss(&batch).unwrap();
                model.tensors_mut()[id].data[k] = original - h;
                let minus = model.forward_loss(&batch).unwrap();
                model.tensors_mut()[id].data[k] = original;
                let numeric = (plus - minus) / (2.0 * h);
                let denom = analytic.abs().max(numeric.abs()).max(1e-6);
                let rel = (analytic - numeric).abs() / denom;
                worst = worst.max(rel);
                assert!(
                    rel < 1e-4,
                    "tensor {id} [{k}]: analytic {analytic:e} vs numeric {numeric:e} (rel {rel:e})"
                );
                checked += 1;
                if checked >= 220 {
                    break 'outer;
                }
            }
        }
        assert!(checked >= 200, "only {checked} parameters checked");
        println!("finite-difference check: {checked} params, worst rel err {worst:.2e}");
    }

    #[test]
    fn greedy_decode_is_deterministic_and_bounded() {
        let model = Model::init(&toy_cfg(8)).unwrap();
        let batch = toy_batch(1, 5);
        let a = model.greedy_decode(&batch[0].0, 8);
        let b = model.greedy_decode(&batch[0].0, 8);
        assert_eq!(a, b);
        let one = model.greedy_decode(&batch[0].0, 1);
        assert!(one.len() <= 1);
        assert!(!a.contains(&BOS));
        assert!(!a.contains(&EOS));
    }
}
