//! Encoder–decoder transformer with hand-written exact backpropagation.
//!
//! Pre-norm residual blocks throughout: `x + Attn(LN(x))`, `x + FFN(LN(x))`,
//! with a final LayerNorm on each stack. Everything is f64 and deterministic;
//! the gradient of every parameter tensor is exact (checked against central
//! finite differences in the tests).
//!
//! Batches are lists of (src, tgt) id sequences. Trailing `<pad>` tokens are
//! stripped before processing, so padded batches lose nothing but the pad
//! positions — they never attend, and they never contribute loss.

use super::mat::Mat;
use super::{ModelConfig, TrainError};
use crate::codec::{BOS, EOS, PAD};
use crate::rng::{Lane, Stream};

pub(crate) struct Tensor {
    pub id: usize,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    fn mat_view(&self) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.clone(),
        }
    }
}

/// Gradient buffers indexed by tensor id, shaped like the model parameters.
pub struct GradBuf {
    bufs: Vec<Vec<f64>>,
}

impl GradBuf {
    pub fn zeros_like(model: &Model) -> GradBuf {
        GradBuf {
            bufs: model.tensors().iter().map(|t| vec![0.0; t.data.len()]).collect(),
        }
    }

    #[inline]
    fn buf(&mut self, id: usize) -> &mut [f64] {
        &mut self.bufs[id]
    }

    pub fn slice(&self, id: usize) -> &[f64] {
        &self.bufs[id]
    }

    pub fn merge(&mut self, other: &GradBuf) {
        for (a, b) in self.bufs.iter_mut().zip(&other.bufs) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

struct TensorBuilder {
    next_id: usize,
    shapes: Vec<(String, usize, usize)>,
    stream: Stream,
}

impl TensorBuilder {
    fn glorot(&mut self, name: &str, rows: usize, cols: usize) -> Tensor {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        let data = (0..rows * cols)
            .map(|_| self.stream.range(-limit, limit))
            .collect();
        self.register(name, rows, cols, data)
    }

    fn constant(&mut self, name: &str, rows: usize, cols: usize, value: f64) -> Tensor {
        self.register(name, rows, cols, vec![value; rows * cols])
    }

    fn register(&mut self, name: &str, rows: usize, cols: usize, data: Vec<f64>) -> Tensor {
        let id = self.next_id;
        self.next_id += 1;
        self.shapes.push((name.to_string(), rows, cols));
        Tensor {
            id,
            rows,
            cols,
            data,
        }
    }
}

pub(crate) struct Linear {
    pub w: Tensor, // (out, in)
    pub b: Tensor, // (1, out)
}

impl Linear {
    fn new(tb: &mut TensorBuilder, name: &str, out: usize, inp: usize) -> Linear {
        Linear {
            w: tb.glorot(&format!("{name}.w"), out, inp),
            b: tb.constant(&format!("{name}.b"), 1, out, 0.0),
        }
    }

    fn forward(&self, x: &Mat) -> Mat {
        let mut y = x.matmul_nt(&self.w.mat_view());
        for i in 0..y.rows {
            let row = y.row_mut(i);
            for (j, v) in row.iter_mut().enumerate() {
                *v += self.b.data[j];
            }
        }
        y
    }

    /// Returns dx; accumulates dW and db.
    fn backward(&self, dy: &Mat, x: &Mat, g: &mut GradBuf) -> Mat {
        dy.matmul_tn_into(x, g.buf(self.w.id));
        {
            let db = g.buf(self.b.id);
            for i in 0..dy.rows {
                for (j, v) in dy.row(i).iter().enumerate() {
                    db[j] += v;
                }
            }
        }
        dy.matmul(&self.w.mat_view())
    }
}

pub(crate) struct LayerNorm {
    pub gamma: Tensor,
    pub beta: Tensor,
}

const LN_EPS: f64 = 1e-5;

struct LnCache {
    x_hat: Mat,
    inv_std: Vec<f64>,
}

impl LayerNorm {
    fn new(tb: &mut TensorBuilder, name: &str, dim: usize) -> LayerNorm {
        LayerNorm {
            gamma: tb.constant(&format!("{name}.gamma"), 1, dim, 1.0),
            beta: tb.constant(&format!("{name}.beta"), 1, dim, 0.0),
        }
    }

    fn forward(&self, x: &Mat) -> (Mat, LnCache) {
        let d = x.cols as f64;
        let mut out = Mat::zeros(x.rows, x.cols);
        let mut x_hat = Mat::zeros(x.rows, x.cols);
        let mut inv_std = Vec::with_capacity(x.rows);
        for i in 0..x.rows {
            let row = x.row(i);
            let mean = row.iter().sum::<f64>() / d;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d;
            let istd = 1.0 / (var + LN_EPS).sqrt();
            inv_std.push(istd);
            let xh = x_hat.row_mut(i);
            let o = out.row_mut(i);
            for j in 0..row.len() {
                xh[j] = (row[j] - mean) * istd;
                o[j] = self.gamma.data[j] * xh[j] + self.beta.data[j];
            }
        }
        (out, LnCache { x_hat, inv_std })
    }

    fn backward(&self, dy: &Mat, cache: &LnCache, g: &mut GradBuf) -> Mat {
        let d = dy.cols as f64;
        let mut dx = Mat::zeros(dy.rows, dy.cols);
        for i in 0..dy.rows {
            let dyr = dy.row(i);
            let xh = cache.x_hat.row(i);
            {
                let dgamma = g.buf(self.gamma.id);
                for j in 0..dyr.len() {
                    dgamma[j] += dyr[j] * xh[j];
                }
            }
            {
                let dbeta = g.buf(self.beta.id);
                for j in 0..dyr.len() {
                    dbeta[j] += dyr[j];
                }
            }
            // dx = (g − mean(g) − x̂·mean(g⊙x̂)) · inv_std, g = dy⊙γ
            let mut mean_g = 0.0;
            let mut mean_gx = 0.0;
            for j in 0..dyr.len() {
                let gj = dyr[j] * self.gamma.data[j];
                mean_g += gj;
                mean_gx += gj * xh[j];
            }
            mean_g /= d;
            mean_gx /= d;
            let istd = cache.inv_std[i];
            let dxr = dx.row_mut(i);
            for j in 0..dyr.len() {
                let gj = dyr[j] * self.gamma.data[j];
                dxr[j] = (gj - mean_g - xh[j] * mean_gx) * istd;
            }
        }
        dx
    }
}

pub(crate) struct Mha {
    pub wq: Linear,
    pub wk: Linear,
    pub wv: Linear,
    pub wo: Linear,
}

struct AttnCache {
    q_in: Mat,
    kv_in: Mat,
    q: Mat,
    k: Mat,
    v: Mat,
    /// Softmax probabilities per head, each (T_q, T_k).
    probs: Vec<Mat>,
    /// Concatenated head outputs, input to the output projection.
    merged: Mat,
}

impl Mha {
    fn new(tb: &mut TensorBuilder, name: &str, dim: usize) -> Mha {
        Mha {
            wq: Linear::new(tb, &format!("{name}.wq"), dim, dim),
            wk: Linear::new(tb, &format!("{name}.wk"), dim, dim),
            wv: Linear::new(tb, &format!("{name}.wv"), dim, dim),
            wo: Linear::new(tb, &format!("{name}.wo"), dim, dim),
        }
    }

    fn forward(&self, q_in: &Mat, kv_in: &Mat, heads: usize, causal: bool) -> (Mat, AttnCache) {
        let dim = q_in.cols;
        let dh = dim / heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let q = self.wq.forward(q_in);
        let k = self.wk.forward(kv_in);
        let v = self.wv.forward(kv_in);
        let tq = q.rows;
        let tk = k.rows;
        let mut merged = Mat::zeros(tq, dim);
        let mut probs = Vec::with_capacity(heads);
        for h in 0..heads {
            let base = h * dh;
            let mut p = Mat::zeros(tq, tk);
            for i in 0..tq {
                let limit = if causal { i + 1 } else { tk };
                let qi = &q.row(i)[base..base + dh];
                let row = p.row_mut(i);
                let mut max = f64::NEG_INFINITY;
                for (j, r) in row.iter_mut().enumerate().take(limit) {
                    let kj = &k.row(j)[base..base + dh];
                    let mut acc = 0.0;
                    for c in 0..dh {
                        acc += qi[c] * kj[c];
                    }
                    *r = acc * scale;
                    max = max.max(*r);
                }
                let mut sum = 0.0;
                for r in row.iter_mut().take(limit) {
                    *r = (*r - max).exp();
                    sum += *r;
                }
                for r in row.iter_mut().take(limit) {
                    *r /= sum;
                }
                // positions beyond `limit` stay exactly zero
            }
            for i in 0..tq {
                let out_row = &mut merged.row_mut(i)[base..base + dh];
                let limit = if causal { i + 1 } else { tk };
                for j in 0..limit {
                    let pij = p.at(i, j);
                    if pij == 0.0 {
                        continue;
                    }
                    let vj = &v.row(j)[base..base + dh];
                    for c in 0..dh {
                        out_row[c] += pij * vj[c];
                    }
                }
            }
            probs.push(p);
        }
        let out = self.wo.forward(&merged);
        (
            out,
            AttnCache {
                q_in: q_in.clone(),
                kv_in: kv_in.clone(),
                q,
                k,
                v,
                probs,
                merged,
            },
        )
    }

    /// Returns (d_q_in, d_kv_in).
    fn backward(&self, dy: &Mat, cache: &AttnCache, heads: usize, g: &mut GradBuf) -> (Mat, Mat) {
        let dim = dy.cols;
        let dh = dim / heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let d_merged = self.wo.backward(dy, &cache.merged, g);
        let tq = cache.q.rows;
        let tk = cache.k.rows;
        let mut dq = Mat::zeros(tq, dim);
        let mut dk = Mat::zeros(tk, dim);
        let mut dv = Mat::zeros(tk, dim);
        for h in 0..heads {
            let base = h * dh;
            let p = &cache.probs[h];
            for i in 0..tq {
                let dm = &d_merged.row(i)[base..base + dh];
                let prow = p.row(i);
                // dP and the softmax Jacobian row dot product.
                let mut dp = vec![0.0; tk];
                let mut dot = 0.0;
                for (j, dpj) in dp.iter_mut().enumerate() {
                    let pij = prow[j];
                    if pij == 0.0 {
                        continue;
                    }
                    let vj = &cache.v.row(j)[base..base + dh];
                    let mut acc = 0.0;
                    for c in 0..dh {
                        acc += dm[c] * vj[c];
                    }
                    *dpj = acc;
                    dot += acc * pij;
                }
                for j in 0..tk {
                    let pij = prow[j];
                    if pij == 0.0 {
                        continue;
                    }
                    let dz = pij * (dp[j] - dot) * scale;
                    // dV via Pᵀ·d_merged
                    let dvj = &mut dv.row_mut(j)[base..base + dh];
                    for c in 0..dh {
                        dvj[c] += pij * dm[c];
                    }
                    let kj = &cache.k.row(j)[base..base + dh];
                    let qi = &cache.q.row(i)[base..base + dh];
                    let dqi = &mut dq.row_mut(i)[base..base + dh];
                    for c in 0..dh {
                        dqi[c] += dz * kj[c];
                    }
                    let dkj = &mut dk.row_mut(j)[base..base + dh];
                    for c in 0..dh {
                        dkj[c] += dz * qi[c];
                    }
                }
            }
        }
        let d_q_in = self.wq.backward(&dq, &cache.q_in, g);
        let mut d_kv_in = self.wk.backward(&dk, &cache.kv_in, g);
        d_kv_in.add_assign(&self.wv.backward(&dv, &cache.kv_in, g));
        (d_q_in, d_kv_in)
    }
}

pub(crate) struct FeedForward {
    pub w1: Linear,
    pub w2: Linear,
}

struct FfnCache {
    input: Mat,
    pre: Mat,
    hidden: Mat,
}

impl FeedForward {
    fn new(tb: &mut TensorBuilder, name: &str, dim: usize, mult: usize) -> FeedForward {
        FeedForward {
            w1: Linear::new(tb, &format!("{name}.w1"), dim * mult, dim),
            w2: Linear::new(tb, &format!("{name}.w2"), dim, dim * mult),
        }
    }

    fn forward(&self, x: &Mat) -> (Mat, FfnCache) {
        let pre = self.w1.forward(x);
        let mut hidden = pre.clone();
        for v in hidden.data.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let out = self.w2.forward(&hidden);
        (
            out,
            FfnCache {
                input: x.clone(),
                pre,
                hidden,
            },
        )
    }

    fn backward(&self, dy: &Mat, cache: &FfnCache, g: &mut GradBuf) -> Mat {
        let mut dh = self.w2.backward(dy, &cache.hidden, g);
        for (d, p) in dh.data.iter_mut().zip(&cache.pre.data) {
            if *p < 0.0 {
                *d = 0.0;
            }
        }
        self.w1.backward(&dh, &cache.input, g)
    }
}

pub(crate) struct EncoderLayer {
    ln1: LayerNorm,
    attn: Mha,
    ln2: LayerNorm,
    ffn: FeedForward,
}

struct EncLayerCache {
    ln1: LnCache,
    attn: AttnCache,
    ln2: LnCache,
    ffn: FfnCache,
}

pub(crate) struct DecoderLayer {
    ln1: LayerNorm,
    self_attn: Mha,
    ln2: LayerNorm,
    cross_attn: Mha,
    ln3: LayerNorm,
    ffn: FeedForward,
}

struct DecLayerCache {
    ln1: LnCache,
    self_attn: AttnCache,
    ln2: LnCache,
    cross_attn: AttnCache,
    ln3: LnCache,
    ffn: FfnCache,
}

pub struct Model {
    pub cfg: ModelConfig,
    pub(crate) src_embed: Tensor,
    pub(crate) src_pos: Tensor,
    pub(crate) tgt_embed: Tensor,
    pub(crate) tgt_pos: Tensor,
    pub(crate) enc: Vec<EncoderLayer>,
    pub(crate) enc_norm: LayerNorm,
    pub(crate) dec: Vec<DecoderLayer>,
    pub(crate) dec_norm: LayerNorm,
    pub(crate) out_proj: Linear,
    shapes: Vec<(String, usize, usize)>,
}

/// Per-example activation record for the backward pass.
struct ExampleTape {
    src: Vec<u32>,
    dec_in: Vec<u32>,
    labels: Vec<u32>,
    enc_caches: Vec<EncLayerCache>,
    enc_norm_cache: LnCache,
    enc_out: Mat,
    dec_caches: Vec<DecLayerCache>,
    dec_norm_cache: LnCache,
    dec_normed: Mat,
    /// Softmax probabilities at each decoder position.
    probs: Mat,
    ce_sum: f64,
}

fn strip_trailing_pad(ids: &[u32]) -> &[u32] {
    let mut end = ids.len();
    while end > 0 && ids[end - 1] == PAD {
        end -= 1;
    }
    &ids[..end]
}

impl Model {
    /// Deterministic initialization from the config seed: Glorot-uniform
    /// weights and embeddings, unit/zero layer norms, zero biases.
    pub fn init(cfg: &ModelConfig) -> Result<Model, TrainError> {
        cfg.validate()?;
        let mut tb = TensorBuilder {
            next_id: 0,
            shapes: Vec::new(),
            stream: Stream::derive(cfg.seed, 0, Lane::Model),
        };
        let dim = cfg.dim;
        let src_vocab = cfg.src_scheme.vocab().len();
        let tgt_vocab = cfg.tgt_scheme.vocab().len();
        let src_embed = tb.glorot("src_embed", src_vocab, dim);
        let src_pos = tb.glorot("src_pos", cfg.max_src_len, dim);
        let tgt_embed = tb.glorot("tgt_embed", tgt_vocab, dim);
        let tgt_pos = tb.glorot("tgt_pos", cfg.max_tgt_len, dim);
        let enc = (0..cfg.enc_layers)
            .map(|l| EncoderLayer {
                ln1: LayerNorm::new(&mut tb, &format!("enc{l}.ln1"), dim),
                attn: Mha::new(&mut tb, &format!("enc{l}.attn"), dim),
                ln2: LayerNorm::new(&mut tb, &format!("enc{l}.ln2"), dim),
                ffn: FeedForward::new(&mut tb, &format!("enc{l}.ffn"), dim, cfg.ffn_mult),
            })
            .collect();
        let enc_norm = LayerNorm::new(&mut tb, "enc_norm", dim);
        let dec = (0..cfg.dec_layers)
            .map(|l| DecoderLayer {
                ln1: LayerNorm::new(&mut tb, &format!("dec{l}.ln1"), dim),
                self_attn: Mha::new(&mut tb, &format!("dec{l}.self_attn"), dim),
                ln2: LayerNorm::new(&mut tb, &format!("dec{l}.ln2"), dim),
                cross_attn: Mha::new(&mut tb, &format!("dec{l}.cross_attn"), dim),
                ln3: LayerNorm::new(&mut tb, &format!("dec{l}.ln3"), dim),
                ffn: FeedForward::new(&mut tb, &format!("dec{l}.ffn"), dim, cfg.ffn_mult),
            })
            .collect();
        let dec_norm = LayerNorm::new(&mut tb, "dec_norm", dim);
        let out_proj = Linear::new(&mut tb, "out_proj", tgt_vocab, dim);
        Ok(Model {
            cfg: cfg.clone(),
            src_embed,
            src_pos,
            tgt_embed,
            tgt_pos,
            enc,
            enc_norm,
            dec,
            dec_norm,
            out_proj,
            shapes: tb.shapes,
        })
    }

    /// Parameter tensors in declaration order (the checkpoint order).
    pub(crate) fn tensors(&self) -> Vec<&Tensor> {
        let mut out: Vec<&Tensor> = vec![
            &self.src_embed,
            &self.src_pos,
            &self.tgt_embed,
            &self.tgt_pos,
        ];
        for layer in &self.enc {
            out.extend([&layer.ln1.gamma, &layer.ln1.beta]);
            for lin in [&layer.attn.wq, &layer.attn.wk, &layer.attn.wv, &layer.attn.wo] {
                out.extend([&lin.w, &lin.b]);
            }
            out.extend([&layer.ln2.gamma, &layer.ln2.beta]);
            out.extend([&layer.ffn.w1.w, &layer.ffn.w1.b, &layer.ffn.w2.w, &layer.ffn.w2.b]);
        }
        out.extend([&self.enc_norm.gamma, &self.enc_norm.beta]);
        for layer in &self.dec {
            out.extend([&layer.ln1.gamma, &layer.ln1.beta]);
            for lin in [
                &layer.self_attn.wq,
                &layer.self_attn.wk,
                &layer.self_attn.wv,
                &layer.self_attn.wo,
            ] {
                out.extend([&lin.w, &lin.b]);
            }
            out.extend([&layer.ln2.gamma, &layer.ln2.beta]);
            for lin in [
                &layer.cross_attn.wq,
                &layer.cross_attn.wk,
                &layer.cross_attn.wv,
                &layer.cross_attn.wo,
            ] {
                out.extend([&lin.w, &lin.b]);
            }
            out.extend([&layer.ln3.gamma, &layer.ln3.beta]);
            out.extend([&layer.ffn.w1.w, &layer.ffn.w1.b, &layer.ffn.w2.w, &layer.ffn.w2.b]);
        }
        out.extend([&self.dec_norm.gamma, &self.dec_norm.beta]);
        out.extend([&self.out_proj.w, &self.out_proj.b]);
        debug_assert!(out.iter().enumerate().all(|(k, t)| t.id == k));
        out
    }

    pub(crate) fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = vec![
            &mut self.src_embed,
            &mut self.src_pos,
            &mut self.tgt_embed,
            &mut self.tgt_pos,
        ];
        for layer in &mut self.enc {
            out.extend([&mut layer.ln1.gamma, &mut layer.ln1.beta]);
            for lin in [
                &mut layer.attn.wq,
                &mut layer.attn.wk,
                &mut layer.attn.wv,
                &mut layer.attn.wo,
            ] {
                out.push(&mut lin.w);
                out.push(&mut lin.b);
            }
            out.extend([&mut layer.ln2.gamma, &mut layer.ln2.beta]);
            out.push(&mut layer.ffn.w1.w);
            out.push(&mut layer.ffn.w1.b);
            out.push(&mut layer.ffn.w2.w);
            out.push(&mut layer.ffn.w2.b);
        }
        out.extend([&mut self.enc_norm.gamma, &mut self.enc_norm.beta]);
        for layer in &mut self.dec {
            out.extend([&mut layer.ln1.gamma, &mut layer.ln1.beta]);
            for lin in [
                &mut layer.self_attn.wq,
                &mut layer.self_attn.wk,
                &mut layer.self_attn.wv,
                &mut layer.self_attn.wo,
            ] {
                out.push(&mut lin.w);
                out.push(&mut lin.b);
            }
            out.extend([&mut layer.ln2.gamma, &mut layer.ln2.beta]);
            for lin in [
                &mut layer.cross_attn.wq,
                &mut layer.cross_attn.wk,
                &mut layer.cross_attn.wv,
                &mut layer.cross_attn.wo,
            ] {
                out.push(&mut lin.w);
                out.push(&mut lin.b);
            }
            out.extend([&mut layer.ln3.gamma, &mut layer.ln3.beta]);
            out.push(&mut layer.ffn.w1.w);
            out.push(&mut layer.ffn.w1.b);
            out.push(&mut layer.ffn.w2.w);
            out.push(&mut layer.ffn.w2.b);
        }
        out.extend([&mut self.dec_norm.gamma, &mut self.dec_norm.beta]);
        out.extend([&mut self.out_proj.w, &mut self.out_proj.b]);
        out
    }

    /// (name, rows, cols) per tensor, in id order.
    pub fn parameter_shapes(&self) -> &[(String, usize, usize)] {
        &self.shapes
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    fn embed(&self, ids: &[u32], embed: &Tensor, pos: &Tensor) -> Result<Mat, TrainError> {
        let mut x = Mat::zeros(ids.len(), self.cfg.dim);
        for (t, &id) in ids.iter().enumerate() {
            if id as usize >= embed.rows {
                return Err(TrainError::OutOfVocabulary { id });
            }
            if t >= pos.rows {
                return Err(TrainError::SequenceTooLong {
                    len: ids.len(),
                    max: pos.rows,
                });
            }
            let e = &embed.data[id as usize * self.cfg.dim..(id as usize + 1) * self.cfg.dim];
            let p = &pos.data[t * self.cfg.dim..(t + 1) * self.cfg.dim];
            let row = x.row_mut(t);
            for c in 0..self.cfg.dim {
                row[c] = e[c] + p[c];
            }
        }
        Ok(x)
    }

    fn encode(&self, src: &[u32]) -> Result<(Vec<EncLayerCache>, LnCache, Mat), TrainError> {
        let mut x = self.embed(src, &self.src_embed, &self.src_pos)?;
        let mut caches = Vec::with_capacity(self.enc.len());
        for layer in &self.enc {
            let (normed, ln1) = layer.ln1.forward(&x);
            let (attn_out, attn) = layer.attn.forward(&normed, &normed, self.cfg.heads, false);
            x.add_assign(&attn_out);
            let (normed2, ln2) = layer.ln2.forward(&x);
            let (ffn_out, ffn) = layer.ffn.forward(&normed2);
            x.add_assign(&ffn_out);
            caches.push(EncLayerCache {
                ln1,
                attn,
                ln2,
                ffn,
            });
        }
        let (enc_out, enc_norm_cache) = self.enc_norm.forward(&x);
        Ok((caches, enc_norm_cache, enc_out))
    }

    fn decode_layers(
        &self,
        dec_in: &[u32],
        enc_out: &Mat,
    ) -> Result<(Vec<DecLayerCache>, LnCache, Mat), TrainError> {
        let mut y = self.embed(dec_in, &self.tgt_embed, &self.tgt_pos)?;
        let mut caches = Vec::with_capacity(self.dec.len());
        for layer in &self.dec {
            let (normed, ln1) = layer.ln1.forward(&y);
            let (self_out, self_attn) = layer
                .self_attn
                .forward(&normed, &normed, self.cfg.heads, true);
            y.add_assign(&self_out);
            let (normed2, ln2) = layer.ln2.forward(&y);
            let (cross_out, cross_attn) =
                layer
                    .cross_attn
                    .forward(&normed2, enc_out, self.cfg.heads, false);
            y.add_assign(&cross_out);
            let (normed3, ln3) = layer.ln3.forward(&y);
            let (ffn_out, ffn) = layer.ffn.forward(&normed3);
            y.add_assign(&ffn_out);
            caches.push(DecLayerCache {
                ln1,
                self_attn,
                ln2,
                cross_attn,
                ln3,
                ffn,
            });
        }
        let (dec_normed, dec_norm_cache) = self.dec_norm.forward(&y);
        Ok((caches, dec_norm_cache, dec_normed))
    }

    /// Cross-entropy sums and softmax probabilities for one example.
    fn forward_example(&self, src: &[u32], tgt: &[u32]) -> Result<ExampleTape, TrainError> {
        let src = strip_trailing_pad(src).to_vec();
        let tgt_clean = strip_trailing_pad(tgt);
        let mut dec_in = Vec::with_capacity(tgt_clean.len() + 1);
        dec_in.push(BOS);
        dec_in.extend_from_slice(tgt_clean);
        let mut labels = tgt_clean.to_vec();
        labels.push(EOS);

        let (enc_caches, enc_norm_cache, enc_out) = self.encode(&src)?;
        let (dec_caches, dec_norm_cache, dec_normed) = self.decode_layers(&dec_in, &enc_out)?;
        let logits = self.out_proj.forward(&dec_normed);

        let mut probs = Mat::zeros(logits.rows, logits.cols);
        let mut ce_sum = 0.0;
        for t in 0..logits.rows {
            let row = logits.row(t);
            let label = labels[t] as usize;
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for &v in row {
                sum += (v - max).exp();
            }
            let lse = max + sum.ln();
            ce_sum += lse - row[label];
            let prow = probs.row_mut(t);
            for (j, &v) in row.iter().enumerate() {
                prow[j] = (v - max).exp() / sum;
            }
        }
        Ok(ExampleTape {
            src,
            dec_in,
            labels,
            enc_caches,
            enc_norm_cache,
            enc_out,
            dec_caches,
            dec_norm_cache,
            dec_normed,
            probs,
            ce_sum,
        })
    }

    /// Mean token-level cross-entropy over non-pad target positions,
    /// teacher-forced. Exactly invariant under example reordering.
    pub fn forward_loss(&self, batch: &[(Vec<u32>, Vec<u32>)]) -> Result<f64, TrainError> {
        if batch.is_empty() {
            return Err(TrainError::EmptyBatch);
        }
        let mut partials = Vec::with_capacity(batch.len());
        let mut tokens = 0usize;
        for (src, tgt) in batch {
            let tape = self.forward_example(src, tgt)?;
            partials.push(tape.ce_sum);
            tokens += tape.labels.len();
        }
        // Order-independent reduction: sort the per-example sums first.
        partials.sort_by(f64::total_cmp);
        Ok(partials.iter().sum::<f64>() / tokens as f64)
    }

    fn backward_example(&self, tape: &ExampleTape, weight: f64, g: &mut GradBuf) {
        // dLogits = (softmax − onehot) · weight
        let mut dlogits = tape.probs.clone();
        for t in 0..dlogits.rows {
            let row = dlogits.row_mut(t);
            row[tape.labels[t] as usize] -= 1.0;
            for v in row.iter_mut() {
                *v *= weight;
            }
        }
        let d_dec_normed = self.out_proj.backward(&dlogits, &tape.dec_normed, g);
        let mut dy = self
            .dec_norm
            .backward(&d_dec_normed, &tape.dec_norm_cache, g);
        let mut d_enc_out = Mat::zeros(tape.enc_out.rows, tape.enc_out.cols);
        for (li, layer) in self.dec.iter().enumerate().rev() {
            let cache = &tape.dec_caches[li];
            // x3 + ffn(ln3(x3))
            let d_ffn_out = dy.clone();
            let d_normed3 = layer.ffn.backward(&d_ffn_out, &cache.ffn, g);
            dy.add_assign(&layer.ln3.backward(&d_normed3, &cache.ln3, g));
            // x2 + cross(ln2(x2), enc_out)
            let d_cross_out = dy.clone();
            let (d_normed2, d_enc) =
                layer
                    .cross_attn
                    .backward(&d_cross_out, &cache.cross_attn, self.cfg.heads, g);
            d_enc_out.add_assign(&d_enc);
            dy.add_assign(&layer.ln2.backward(&d_normed2, &cache.ln2, g));
            // x1 + self(ln1(x1))
            let d_self_out = dy.clone();
            let (d_normed1, d_normed1_kv) =
                layer
                    .self_attn
                    .backward(&d_self_out, &cache.self_attn, self.cfg.heads, g);
            let mut d_normed = d_normed1;
            d_normed.add_assign(&d_normed1_kv);
            dy.add_assign(&layer.ln1.backward(&d_normed, &cache.ln1, g));
        }
        // Decoder embedding gradients.
        for (t, &id) in tape.dec_in.iter().enumerate() {
            let row = dy.row(t);
            let ge = &mut g.buf(self.tgt_embed.id)
                [id as usize * self.cfg.dim..(id as usize + 1) * self.cfg.dim];
            for c in 0..self.cfg.dim {
                ge[c] += row[c];
            }
            let gp =
                &mut g.buf(self.tgt_pos.id)[t * self.cfg.dim..(t + 1) * self.cfg.dim];
            for c in 0..self.cfg.dim {
                gp[c] += row[c];
            }
        }

        // Encoder stack.
        let mut dx = self
            .enc_norm
            .backward(&d_enc_out, &tape.enc_norm_cache, g);
        for (li, layer) in self.enc.iter().enumerate().rev() {
            let cache = &tape.enc_caches[li];
            let d_ffn_out = dx.clone();
            let d_normed2 = layer.ffn.backward(&d_ffn_out, &cache.ffn, g);
            dx.add_assign(&layer.ln2.backward(&d_normed2, &cache.ln2, g));
            let d_attn_out = dx.clone();
            let (d_q, d_kv) = layer
                .attn
                .backward(&d_attn_out, &cache.attn, self.cfg.heads, g);
            let mut d_normed = d_q;
            d_normed.add_assign(&d_kv);
            dx.add_assign(&layer.ln1.backward(&d_normed, &cache.ln1, g));
        }
        for (t, &id) in tape.src.iter().enumerate() {
            let row = dx.row(t);
            let ge = &mut g.buf(self.src_embed.id)
                [id as usize * self.cfg.dim..(id as usize + 1) * self.cfg.dim];
            for c in 0..self.cfg.dim {
                ge[c] += row[c];
            }
            let gp =
                &mut g.buf(self.src_pos.id)[t * self.cfg.dim..(t + 1) * self.cfg.dim];
            for c in 0..self.cfg.dim {
                gp[c] += row[c];
            }
        }
    }

    /// Loss plus exact parameter gradients. `lanes` fixes the gradient
    /// reduction partition: the batch is split into `lanes` contiguous chunks
    /// (processed in parallel), merged in chunk order, so the result depends
    /// only on (batch, lanes) — never on thread scheduling. `lanes = 1` is
    /// the fully sequential reduction.
    pub fn forward_backward(
        &self,
        batch: &[(Vec<u32>, Vec<u32>)],
        lanes: usize,
    ) -> Result<(f64, GradBuf), TrainError> {
        if batch.is_empty() {
            return Err(TrainError::EmptyBatch);
        }
        let lanes = lanes.clamp(1, batch.len());
        let total_tokens: usize = batch
            .iter()
            .map(|(_, tgt)| strip_trailing_pad(tgt).len() + 1)
            .sum();
        let weight = 1.0 / total_tokens as f64;

        let chunk = batch.len().div_ceil(lanes);
        let results: Vec<Result<(Vec<f64>, GradBuf), TrainError>> = {
            use rayon::prelude::*;
            batch
                .par_chunks(chunk)
                .map(|examples| {
                    let mut g = GradBuf::zeros_like(self);
                    let mut sums = Vec::with_capacity(examples.len());
                    for (src, tgt) in examples {
                        let tape = self.forward_example(src, tgt)?;
                        self.backward_example(&tape, weight, &mut g);
                        sums.push(tape.ce_sum);
                    }
                    Ok((sums, g))
                })
                .collect()
        };
        let mut partials = Vec::with_capacity(batch.len());
        let mut total: Option<GradBuf> = None;
        for r in results {
            let (sums, g) = r?;
            partials.extend(sums);
            match &mut total {
                None => total = Some(g),
                Some(t) => t.merge(&g),
            }
        }
        partials.sort_by(f64::total_cmp);
        let loss = partials.iter().sum::<f64>() / total_tokens as f64;
        Ok((loss, total.expect("at least one lane")))
    }

    /// Teacher-forced logits, one row per decoder position.
    #[cfg(test)]
    pub(crate) fn teacher_logits(&self, src: &[u32], tgt: &[u32]) -> Result<Mat, TrainError> {
        let tape = self.forward_example(src, tgt)?;
        let (_, _, dec_normed) = self.decode_layers(&tape.dec_in, &tape.enc_out)?;
        Ok(self.out_proj.forward(&dec_normed))
    }

    /// Argmax decoding until `<eos>` or `max_len` emitted tokens. The source
    /// is truncated to the model's maximum length; output never includes
    /// `<bos>`/`<eos>`.
    pub fn greedy_decode(&self, src: &[u32], max_len: usize) -> Vec<u32> {
        let src: Vec<u32> = strip_trailing_pad(src)
            .iter()
            .copied()
            .take(self.cfg.max_src_len)
            .collect();
        let enc = match self.encode(&src) {
            Ok((_, _, enc_out)) => enc_out,
            Err(_) => return Vec::new(),
        };
        let mut out: Vec<u32> = Vec::new();
        let limit = max_len.min(self.cfg.max_tgt_len.saturating_sub(1));
        while out.len() < limit {
            let mut dec_in = Vec::with_capacity(out.len() + 1);
            dec_in.push(BOS);
            dec_in.extend_from_slice(&out);
            let (_, _, dec_normed) = match self.decode_layers(&dec_in, &enc) {
                Ok(v) => v,
                Err(_) => break,
            };
            let last = Mat {
                rows: 1,
                cols: dec_normed.cols,
                data: dec_normed.row(dec_normed.rows - 1).to_vec(),
            };
            let logits = self.out_proj.forward(&last);
            let row = logits.row(0);
            let mut best = 0usize;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            if best as u32 == EOS {
                break;
            }
            out.push(best as u32);
        }
        out
    }
}
