//! Flat-parameter feed-forward network with hand-written backprop.
//!
//! Layout of the input vector: `view ++ messages[0] ++ ... ++ messages[n_slots-1]`.
//!
//! `Mlp`: input → tanh(hidden) → tanh(latent) → logits.
//!
//! `Attention`: each view cell `c` with value `v_c` is embedded as
//! `e_c = v_c * w_embed + pos_c`, passed through one single-head
//! self-attention block with a residual connection, `f = e + softmax(QKᵀ/√m) V`,
//! and the flattened `f` replaces the raw view in front of the MLP.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Arch {
    Mlp,
    Attention { embed_dim: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub arch: Arch,
    pub view_len: usize,
    pub n_slots: usize,
    pub latent_dim: usize,
    pub hidden: usize,
    pub outputs: usize,
}

/// Offsets of each parameter block in the flat vector.
#[derive(Debug, Clone, Copy)]
struct Offsets {
    embed: usize,
    pos: usize,
    wq: usize,
    wk: usize,
    wv: usize,
    l1: usize,
    l2: usize,
    l3: usize,
    total: usize,
}

/// Forward activations kept for backprop.
#[derive(Debug, Clone)]
pub struct Cache {
    input: Vec<f64>,
    // attention block (empty for Mlp)
    embed: Vec<f64>,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    attn: Vec<f64>,
    /// Input to the first dense layer.
    features: Vec<f64>,
    h1: Vec<f64>,
    pub(crate) h2: Vec<f64>,
    pub(crate) logits: Vec<f64>,
}

impl Layout {
    pub fn message_len(&self) -> usize {
        self.n_slots * self.latent_dim
    }

    pub fn input_len(&self) -> usize {
        self.view_len + self.message_len()
    }

    fn feature_len(&self) -> usize {
        match self.arch {
            Arch::Mlp => self.input_len(),
            Arch::Attention { embed_dim } => self.view_len * embed_dim + self.message_len(),
        }
    }

    fn offsets(&self) -> Offsets {
        let m = match self.arch {
            Arch::Mlp => 0,
            Arch::Attention { embed_dim } => embed_dim,
        };
        let embed = 0;
        let pos = embed + m;
        let wq = pos + self.view_len * m;
        let wk = wq + m * m;
        let wv = wk + m * m;
        let l1 = wv + m * m;
        let l2 = l1 + (self.feature_len() + 1) * self.hidden;
        let l3 = l2 + (self.hidden + 1) * self.latent_dim;
        let total = l3 + (self.latent_dim + 1) * self.outputs;
        Offsets {
            embed,
            pos,
            wq,
            wk,
            wv,
            l1,
            l2,
            l3,
            total,
        }
    }

    pub fn param_count(&self) -> usize {
        self.offsets().total
    }

    /// Per-parameter `fan_in`, used for the `uniform(-1/√fan_in, 1/√fan_in)` init.
    pub fn fan_in(&self) -> Vec<usize> {
        let o = self.offsets();
        let mut fan = vec![0; o.total];
        let m = o.pos - o.embed;
        fan[o.embed..o.wq].fill(1);
        fan[o.wq..o.l1].fill(m.max(1));
        fan[o.l1..o.l2].fill(self.feature_len());
        fan[o.l2..o.l3].fill(self.hidden);
        fan[o.l3..o.total].fill(self.latent_dim);
        fan
    }

    fn first_layer_indices(&self, cols: std::ops::Range<usize>) -> Vec<usize> {
        let o = self.offsets();
        let fl = self.feature_len();
        (0..self.hidden)
            .flat_map(|r| cols.clone().map(move |c| o.l1 + r * fl + c))
            .collect()
    }

    /// First-layer weights reading the message slots.
    pub fn message_weight_indices(&self) -> Vec<usize> {
        let fl = self.feature_len();
        self.first_layer_indices(fl - self.message_len()..fl)
    }

    /// First-layer weights reading the view (or the attention features).
    pub fn view_weight_indices(&self) -> Vec<usize> {
        self.first_layer_indices(0..self.feature_len() - self.message_len())
    }

    /// Weights and biases of the logit layer.
    pub fn output_param_range(&self) -> std::ops::Range<usize> {
        let o = self.offsets();
        o.l3..o.total
    }

    pub fn forward(&self, params: &[f64], input: &[f64]) -> Cache {
        assert_eq!(
            params.len(),
            self.param_count(),
            "parameter vector does not match layout"
        );
        assert_eq!(input.len(), self.input_len(), "input does not match layout");
        let o = self.offsets();
        let mut cache = Cache {
            input: input.to_vec(),
            embed: Vec::new(),
            q: Vec::new(),
            k: Vec::new(),
            v: Vec::new(),
            attn: Vec::new(),
            features: Vec::new(),
            h1: Vec::new(),
            h2: Vec::new(),
            logits: Vec::new(),
        };
        cache.features = match self.arch {
            Arch::Mlp => input.to_vec(),
            Arch::Attention { embed_dim: m } => {
                let n = self.view_len;
                let w_embed = &params[o.embed..o.pos];
                let pos = &params[o.pos..o.wq];
                let mut e = vec![0.0; n * m];
                for c in 0..n {
                    for j in 0..m {
                        e[c * m + j] = input[c] * w_embed[j] + pos[c * m + j];
                    }
                }
                let q = matmul(&e, &params[o.wq..o.wk], n, m, m);
                let k = matmul(&e, &params[o.wk..o.wv], n, m, m);
                let v = matmul(&e, &params[o.wv..o.l1], n, m, m);
                let scale = 1.0 / (m as f64).sqrt();
                let mut attn = vec![0.0; n * n];
                for r in 0..n {
                    let row = &mut attn[r * n..(r + 1) * n];
                    for (c, a) in row.iter_mut().enumerate() {
                        *a = scale * dot(&q[r * m..(r + 1) * m], &k[c * m..(c + 1) * m]);
                    }
                    softmax_in_place(row);
                }
                let av = matmul(&attn, &v, n, n, m);
                let mut features: Vec<f64> = e.iter().zip(&av).map(|(a, b)| a + b).collect();
                features.extend_from_slice(&input[n..]);
                cache.embed = e;
                cache.q = q;
                cache.k = k;
                cache.v = v;
                cache.attn = attn;
                features
            }
        };
        let fl = self.feature_len();
        cache.h1 = dense(&params[o.l1..o.l2], &cache.features, fl, self.hidden);
        cache.h1.iter_mut().for_each(|x| *x = x.tanh());
        cache.h2 = dense(&params[o.l2..o.l3], &cache.h1, self.hidden, self.latent_dim);
        cache.h2.iter_mut().for_each(|x| *x = x.tanh());
        cache.logits = dense(&params[o.l3..o.total], &cache.h2, self.latent_dim, self.outputs);
        cache
    }

    /// Backprop of `d_logits` to parameter gradients and input gradients.
    pub fn backward(&self, params: &[f64], cache: &Cache, d_logits: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let o = self.offsets();
        let mut grad = vec![0.0; o.total];
        let fl = self.feature_len();

        let mut d_h2 = dense_backward(
            &params[o.l3..o.total],
            &cache.h2,
            d_logits,
            self.latent_dim,
            self.outputs,
            &mut grad[o.l3..o.total],
        );
        for (d, h) in d_h2.iter_mut().zip(&cache.h2) {
            *d *= 1.0 - h * h;
        }
        let mut d_h1 = dense_backward(
            &params[o.l2..o.l3],
            &cache.h1,
            &d_h2,
            self.hidden,
            self.latent_dim,
            &mut grad[o.l2..o.l3],
        );
        for (d, h) in d_h1.iter_mut().zip(&cache.h1) {
            *d *= 1.0 - h * h;
        }
        let d_features = dense_backward(
            &params[o.l1..o.l2],
            &cache.features,
            &d_h1,
            fl,
            self.hidden,
            &mut grad[o.l1..o.l2],
        );

        let d_input = match self.arch {
            Arch::Mlp => d_features,
            Arch::Attention { embed_dim: m } => {
                let n = self.view_len;
                let d_f = &d_features[..n * m];
                // f = e + A v
                let mut d_e = d_f.to_vec();
                let d_attn = matmul_bt(d_f, &cache.v, n, m, n); // dA = dF Vᵀ
                let d_v = matmul_at(&cache.attn, d_f, n, n, m); // dV = Aᵀ dF
                let scale = 1.0 / (m as f64).sqrt();
                let mut d_s = vec![0.0; n * n];
                for r in 0..n {
                    let a = &cache.attn[r * n..(r + 1) * n];
                    let da = &d_attn[r * n..(r + 1) * n];
                    let inner = dot(a, da);
                    for c in 0..n {
                        d_s[r * n + c] = scale * a[c] * (da[c] - inner);
                    }
                }
                let d_q = matmul(&d_s, &cache.k, n, n, m); // dQ = dS K
                let d_k = matmul_at(&d_s, &cache.q, n, n, m); // dK = dSᵀ Q
                for (proj, d_proj) in [(o.wq, &d_q), (o.wk, &d_k), (o.wv, &d_v)] {
                    let w = &params[proj..proj + m * m];
                    // dW = Eᵀ dP ; dE += dP Wᵀ
                    let d_w = matmul_at(&cache.embed, d_proj, n, m, m);
                    for (g, d) in grad[proj..proj + m * m].iter_mut().zip(&d_w) {
                        *g += d;
                    }
                    let back = matmul_bt(d_proj, w, n, m, m);
                    for (de, b) in d_e.iter_mut().zip(&back) {
                        *de += b;
                    }
                }
                let w_embed = &params[o.embed..o.pos];
                let mut d_input = vec![0.0; self.input_len()];
                for c in 0..n {
                    for j in 0..m {
                        let de = d_e[c * m + j];
                        grad[o.embed + j] += de * cache.input[c];
                        grad[o.pos + c * m + j] += de;
                        d_input[c] += de * w_embed[j];
                    }
                }
                d_input[n..].copy_from_slice(&d_features[n * m..]);
                d_input
            }
        };
        (grad, d_input)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for x in row.iter_mut() {
        *x = (*x - max).exp();
        total += *x;
    }
    for x in row.iter_mut() {
        *x /= total;
    }
}

/// `a (r×k) · b (k×c)`, row-major.
fn matmul(a: &[f64], b: &[f64], r: usize, k: usize, c: usize) -> Vec<f64> {
    let mut out = vec![0.0; r * c];
    for i in 0..r {
        for t in 0..k {
            let av = a[i * k + t];
            if av == 0.0 {
                continue;
            }
            for j in 0..c {
                out[i * c + j] += av * b[t * c + j];
            }
        }
    }
    out
}

/// `a (r×k) · bᵀ` where `b` is `c×k`.
fn matmul_bt(a: &[f64], b: &[f64], r: usize, k: usize, c: usize) -> Vec<f64> {
    let mut out = vec![0.0; r * c];
    for i in 0..r {
        for j in 0..c {
            out[i * c + j] = dot(&a[i * k..(i + 1) * k], &b[j * k..(j + 1) * k]);
        }
    }
    out
}

/// `aᵀ · b` where `a` is `k×r` and `b` is `k×c`.
fn matmul_at(a: &[f64], b: &[f64], k: usize, r: usize, c: usize) -> Vec<f64> {
    let mut out = vec![0.0; r * c];
    for t in 0..k {
        for i in 0..r {
            let av = a[t * r + i];
            if av == 0.0 {
                continue;
            }
            for j in 0..c {
                out[i * c + j] += av * b[t * c + j];
            }
        }
    }
    out
}

/// `W x + b` with `W` stored row-major `out×in` followed by `b`.
fn dense(block: &[f64], x: &[f64], n_in: usize, n_out: usize) -> Vec<f64> {
    let (w, b) = block.split_at(n_in * n_out);
    (0..n_out)
        .map(|o| b[o] + dot(&w[o * n_in..(o + 1) * n_in], x))
        .collect()
}

fn dense_backward(block: &[f64], x: &[f64], dy: &[f64], n_in: usize, n_out: usize, grad: &mut [f64]) -> Vec<f64> {
    let (w, _) = block.split_at(n_in * n_out);
    let (gw, gb) = grad.split_at_mut(n_in * n_out);
    let mut dx = vec![0.0; n_in];
    for o in 0..n_out {
        let d = dy[o];
        if d == 0.0 {
            continue;
        }
        gb[o] += d;
        let row = &w[o * n_in..(o + 1) * n_in];
        let grow = &mut gw[o * n_in..(o + 1) * n_in];
        for i in 0..n_in {
            grow[i] += d * x[i];
            dx[i] += d * row[i];
        }
    }
    dx
}
