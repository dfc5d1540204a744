//! Forward and backward passes for a single sequence, all in f64.
//!
//! Matrices are row-major; a weight of shape `[k, n]` maps a row vector of
//! width `k` to width `n` (`out = in · W + b`).

use super::{LayerOffsets, Layout, SequenceModel};
use crate::error::Result;

const LN_EPS: f64 = 1e-5;
const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

#[derive(Debug, Clone)]
struct LnCache {
    out: Vec<f64>,
    xhat: Vec<f64>,
    rstd: Vec<f64>,
}

#[derive(Debug, Clone)]
struct LayerCache {
    ln1: LnCache,
    qkv: Vec<f64>,
    att: Vec<f64>,
    y: Vec<f64>,
    ln2: LnCache,
    h: Vec<f64>,
    g: Vec<f64>,
}

/// Activations of one forward pass, retained for backpropagation.
#[derive(Debug, Clone)]
pub struct SeqTrace {
    input: Vec<u32>,
    /// `(position, target token)` for each scored response token.
    targets: Vec<(usize, u32)>,
    layers: Vec<LayerCache>,
    lnf: LnCache,
    /// Softmax rows at scored positions, `targets.len() × vocab`.
    probs: Vec<f64>,
    token_logprobs: Vec<f64>,
    logprob: f64,
}

impl SeqTrace {
    pub fn logprob(&self) -> f64 {
        self.logprob
    }

    pub fn token_logprobs(&self) -> &[f64] {
        &self.token_logprobs
    }

    pub fn scored_tokens(&self) -> usize {
        self.targets.len()
    }
}

fn linear(out: &mut [f64], inp: &[f64], w: &[f64], b: &[f64], rows: usize, k: usize, n: usize) {
    for r in 0..rows {
        let o = &mut out[r * n..(r + 1) * n];
        o.copy_from_slice(&b[..n]);
        let x = &inp[r * k..(r + 1) * k];
        for (kk, &a) in x.iter().enumerate() {
            let wr = &w[kk * n..(kk + 1) * n];
            for (oj, &wj) in o.iter_mut().zip(wr) {
                *oj += a * wj;
            }
        }
    }
}

/// dinp += dout · Wᵀ ; dW += inpᵀ · dout ; db += Σ_rows dout.
#[allow(clippy::too_many_arguments)]
fn linear_backward(
    dout: &[f64],
    inp: &[f64],
    w: &[f64],
    rows: usize,
    k: usize,
    n: usize,
    dinp: &mut [f64],
    grads: &mut [f64],
    w_off: usize,
    b_off: usize,
) {
    for r in 0..rows {
        let dr = &dout[r * n..(r + 1) * n];
        let x = &inp[r * k..(r + 1) * k];
        let di = &mut dinp[r * k..(r + 1) * k];
        for kk in 0..k {
            let wr = &w[kk * n..(kk + 1) * n];
            di[kk] += dot(dr, wr);
            let a = x[kk];
            let gw = &mut grads[w_off + kk * n..w_off + (kk + 1) * n];
            for (g, &d) in gw.iter_mut().zip(dr) {
                *g += a * d;
            }
        }
        for (g, &d) in grads[b_off..b_off + n].iter_mut().zip(dr) {
            *g += d;
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn layer_norm(x: &[f64], gain: &[f64], bias: &[f64], rows: usize, d: usize) -> LnCache {
    let mut out = vec![0.0; rows * d];
    let mut xhat = vec![0.0; rows * d];
    let mut rstd = vec![0.0; rows];
    for r in 0..rows {
        let xr = &x[r * d..(r + 1) * d];
        let mean = xr.iter().sum::<f64>() / d as f64;
        let var = xr.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let rs = 1.0 / (var + LN_EPS).sqrt();
        rstd[r] = rs;
        for i in 0..d {
            let xh = (xr[i] - mean) * rs;
            xhat[r * d + i] = xh;
            out[r * d + i] = xh * gain[i] + bias[i];
        }
    }
    LnCache { out, xhat, rstd }
}

fn layer_norm_backward(
    dout: &[f64],
    cache: &LnCache,
    gain: &[f64],
    rows: usize,
    d: usize,
    dx: &mut [f64],
    grads: &mut [f64],
    g_off: usize,
    b_off: usize,
) {
    let mut dxhat = vec![0.0; d];
    for r in 0..rows {
        let dr = &dout[r * d..(r + 1) * d];
        let xh = &cache.xhat[r * d..(r + 1) * d];
        for i in 0..d {
            grads[g_off + i] += dr[i] * xh[i];
            grads[b_off + i] += dr[i];
            dxhat[i] = dr[i] * gain[i];
        }
        let mean_d = dxhat.iter().sum::<f64>() / d as f64;
        let mean_dx = dot(&dxhat, xh) / d as f64;
        let rs = cache.rstd[r];
        for i in 0..d {
            dx[r * d + i] += rs * (dxhat[i] - mean_d - xh[i] * mean_dx);
        }
    }
}

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let t = (GELU_C * (x + GELU_A * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

struct Dims {
    t: usize,
    d: usize,
    f: usize,
    heads: usize,
}

fn attention(qkv: &[f64], dims: &Dims) -> (Vec<f64>, Vec<f64>) {
    let Dims { t, d, heads, .. } = *dims;
    let hd = d / heads;
    let scale = 1.0 / (hd as f64).sqrt();
    let mut att = vec![0.0; heads * t * t];
    let mut y = vec![0.0; t * d];
    for h in 0..heads {
        for i in 0..t {
            let q = &qkv[i * 3 * d + h * hd..i * 3 * d + (h + 1) * hd];
            let row = &mut att[(h * t + i) * t..(h * t + i + 1) * t];
            let mut max = f64::NEG_INFINITY;
            for (u, a) in row.iter_mut().enumerate().take(i + 1) {
                let k = &qkv[u * 3 * d + d + h * hd..u * 3 * d + d + (h + 1) * hd];
                *a = scale * dot(q, k);
                max = max.max(*a);
            }
            let mut sum = 0.0;
            for a in row.iter_mut().take(i + 1) {
                *a = (*a - max).exp();
                sum += *a;
            }
            let yi = &mut y[i * d + h * hd..i * d + (h + 1) * hd];
            for (u, a) in row.iter_mut().enumerate().take(i + 1) {
                *a /= sum;
                let v = &qkv[u * 3 * d + 2 * d + h * hd..u * 3 * d + 2 * d + (h + 1) * hd];
                for (yv, &vv) in yi.iter_mut().zip(v) {
                    *yv += *a * vv;
                }
            }
        }
    }
    (att, y)
}

fn attention_backward(dy: &[f64], att: &[f64], qkv: &[f64], dims: &Dims) -> Vec<f64> {
    let Dims { t, d, heads, .. } = *dims;
    let hd = d / heads;
    let scale = 1.0 / (hd as f64).sqrt();
    let mut dqkv = vec![0.0; t * 3 * d];
    let mut da = vec![0.0; t];
    for h in 0..heads {
        for i in 0..t {
            let dyi = &dy[i * d + h * hd..i * d + (h + 1) * hd];
            let row = &att[(h * t + i) * t..(h * t + i + 1) * t];
            let mut weighted = 0.0;
            for u in 0..=i {
                let vo = u * 3 * d + 2 * d + h * hd;
                da[u] = dot(dyi, &qkv[vo..vo + hd]);
                weighted += row[u] * da[u];
                for j in 0..hd {
                    dqkv[vo + j] += row[u] * dyi[j];
                }
            }
            let qo = i * 3 * d + h * hd;
            for u in 0..=i {
                let ds = row[u] * (da[u] - weighted) * scale;
                if ds == 0.0 {
                    continue;
                }
                let ko = u * 3 * d + d + h * hd;
                for j in 0..hd {
                    dqkv[qo + j] += ds * qkv[ko + j];
                    dqkv[ko + j] += ds * qkv[qo + j];
                }
            }
        }
    }
    dqkv
}

fn block_forward(w: &[f64], lo: &LayerOffsets, x: &[f64], dims: &Dims) -> (LayerCache, Vec<f64>) {
    let Dims { t, d, f, .. } = *dims;
    let ln1 = layer_norm(x, &w[lo.ln1_g..], &w[lo.ln1_b..], t, d);
    let mut qkv = vec![0.0; t * 3 * d];
    linear(&mut qkv, &ln1.out, &w[lo.wqkv..], &w[lo.bqkv..], t, d, 3 * d);
    let (att, y) = attention(&qkv, dims);
    let mut x_mid = vec![0.0; t * d];
    linear(&mut x_mid, &y, &w[lo.wo..], &w[lo.bo..], t, d, d);
    for (m, &xi) in x_mid.iter_mut().zip(x) {
        *m += xi;
    }
    let ln2 = layer_norm(&x_mid, &w[lo.ln2_g..], &w[lo.ln2_b..], t, d);
    let mut h = vec![0.0; t * f];
    linear(&mut h, &ln2.out, &w[lo.w1..], &w[lo.b1..], t, d, f);
    let g: Vec<f64> = h.iter().map(|&v| gelu(v)).collect();
    let mut x_out = vec![0.0; t * d];
    linear(&mut x_out, &g, &w[lo.w2..], &w[lo.b2..], t, f, d);
    for (o, &m) in x_out.iter_mut().zip(&x_mid) {
        *o += m;
    }
    (LayerCache { ln1, qkv, att, y, ln2, h, g }, x_out)
}

fn block_backward(
    w: &[f64],
    lo: &LayerOffsets,
    cache: &LayerCache,
    dx_out: &[f64],
    dims: &Dims,
    grads: &mut [f64],
) -> Vec<f64> {
    let Dims { t, d, f, .. } = *dims;
    let mut dg = vec![0.0; t * f];
    linear_backward(dx_out, &cache.g, &w[lo.w2..], t, f, d, &mut dg, grads, lo.w2, lo.b2);
    for (dgi, &hi) in dg.iter_mut().zip(&cache.h) {
        *dgi *= gelu_grad(hi);
    }
    let mut dln2 = vec![0.0; t * d];
    linear_backward(&dg, &cache.ln2.out, &w[lo.w1..], t, d, f, &mut dln2, grads, lo.w1, lo.b1);
    let mut dx_mid = dx_out.to_vec();
    layer_norm_backward(&dln2, &cache.ln2, &w[lo.ln2_g..], t, d, &mut dx_mid, grads, lo.ln2_g, lo.ln2_b);

    let mut dy = vec![0.0; t * d];
    linear_backward(&dx_mid, &cache.y, &w[lo.wo..], t, d, d, &mut dy, grads, lo.wo, lo.bo);
    let dqkv = attention_backward(&dy, &cache.att, &cache.qkv, dims);
    let mut dln1 = vec![0.0; t * d];
    linear_backward(&dqkv, &cache.ln1.out, &w[lo.wqkv..], t, d, 3 * d, &mut dln1, grads, lo.wqkv, lo.bqkv);
    let mut dx_in = dx_mid;
    layer_norm_backward(&dln1, &cache.ln1, &w[lo.ln1_g..], t, d, &mut dx_in, grads, lo.ln1_g, lo.ln1_b);
    dx_in
}

/// Runs embeddings, all blocks and the final layer norm.
fn run_body(model: &SequenceModel, input: &[u32]) -> (Vec<LayerCache>, LnCache) {
    let cfg = model.config();
    let lay: &Layout = model.layout_arc();
    let w = model.wide();
    let dims = Dims { t: input.len(), d: cfg.d_model, f: cfg.d_ff, heads: cfg.n_heads };
    let d = dims.d;
    let mut x = vec![0.0; dims.t * d];
    for (pos, &tok) in input.iter().enumerate() {
        let te = &w[lay.wte + tok as usize * d..lay.wte + (tok as usize + 1) * d];
        let pe = &w[lay.wpe + pos * d..lay.wpe + (pos + 1) * d];
        for i in 0..d {
            x[pos * d + i] = te[i] + pe[i];
        }
    }
    let mut layers = Vec::with_capacity(lay.layers.len());
    for lo in &lay.layers {
        let (cache, next) = block_forward(w, lo, &x, &dims);
        layers.push(cache);
        x = next;
    }
    let lnf = layer_norm(&x, &w[lay.lnf_g..], &w[lay.lnf_b..], dims.t, d);
    (layers, lnf)
}

fn head_logits(model: &SequenceModel, hidden: &[f64], out: &mut [f64]) {
    let cfg = model.config();
    let lay = model.layout_arc();
    let w = model.wide();
    linear(out, hidden, &w[lay.head_w..], &w[lay.head_b..], 1, cfg.d_model, cfg.vocab_size);
}

/// In-place softmax; returns log Σ exp(logits).
fn softmax(logits: &mut [f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for l in logits.iter_mut() {
        *l = (*l - max).exp();
        sum += *l;
    }
    for l in logits.iter_mut() {
        *l /= sum;
    }
    max + sum.ln()
}

pub(crate) fn forward_traced(model: &SequenceModel, prompt: &[u32], response: &[u32]) -> Result<SeqTrace> {
    let mut tokens = prompt.to_vec();
    tokens.extend_from_slice(response);
    let t = tokens.len() - 1;
    model.check_length(t)?;
    let input = tokens[..t].to_vec();
    let (layers, lnf) = run_body(model, &input);

    let d = model.config().d_model;
    let v = model.config().vocab_size;
    let targets: Vec<(usize, u32)> = (prompt.len() - 1..t).map(|p| (p, tokens[p + 1])).collect();
    let mut probs = vec![0.0; targets.len() * v];
    let mut token_logprobs = Vec::with_capacity(targets.len());
    for (i, &(pos, target)) in targets.iter().enumerate() {
        let row = &mut probs[i * v..(i + 1) * v];
        head_logits(model, &lnf.out[pos * d..(pos + 1) * d], row);
        let target_logit = row[target as usize];
        let lse = softmax(row);
        token_logprobs.push(target_logit - lse);
    }
    let logprob = token_logprobs.iter().sum();
    Ok(SeqTrace { input, targets, layers, lnf, probs, token_logprobs, logprob })
}

/// Adds `c · ∇θ log π(response | prompt)` to `grads`.
pub(crate) fn backward(model: &SequenceModel, trace: &SeqTrace, c: f64, grads: &mut [f64]) {
    let cfg = model.config();
    let lay = model.layout_arc();
    let w = model.wide();
    let dims = Dims { t: trace.input.len(), d: cfg.d_model, f: cfg.d_ff, heads: cfg.n_heads };
    let (t, d, v) = (dims.t, dims.d, cfg.vocab_size);

    let mut dlnf = vec![0.0; t * d];
    let mut dlogits = vec![0.0; v];
    for (i, &(pos, target)) in trace.targets.iter().enumerate() {
        let p = &trace.probs[i * v..(i + 1) * v];
        for (dl, &pj) in dlogits.iter_mut().zip(p) {
            *dl = -c * pj;
        }
        dlogits[target as usize] += c;
        linear_backward(
            &dlogits,
            &trace.lnf.out[pos * d..(pos + 1) * d],
            &w[lay.head_w..],
            1,
            d,
            v,
            &mut dlnf[pos * d..(pos + 1) * d],
            grads,
            lay.head_w,
            lay.head_b,
        );
    }
    let mut dx = vec![0.0; t * d];
    layer_norm_backward(&dlnf, &trace.lnf, &w[lay.lnf_g..], t, d, &mut dx, grads, lay.lnf_g, lay.lnf_b);
    for (lo, cache) in lay.layers.iter().zip(&trace.layers).rev() {
        dx = block_backward(w, lo, cache, &dx, &dims, grads);
    }
    for (pos, &tok) in trace.input.iter().enumerate() {
        let src = &dx[pos * d..(pos + 1) * d];
        let te = lay.wte + tok as usize * d;
        let pe = lay.wpe + pos * d;
        for i in 0..d {
            grads[te + i] += src[i];
            grads[pe + i] += src[i];
        }
    }
}

/// Softmax of logits / temperature at the last position of `context`.
pub(crate) fn last_position_probs(model: &SequenceModel, context: &[u32], temperature: f64) -> Vec<f64> {
    let d = model.config().d_model;
    let (_, lnf) = run_body(model, context);
    let last = context.len() - 1;
    let mut row = vec![0.0; model.config().vocab_size];
    head_logits(model, &lnf.out[last * d..(last + 1) * d], &mut row);
    if temperature != 1.0 {
        row.iter_mut().for_each(|l| *l /= temperature);
    }
    softmax(&mut row);
    row
}
