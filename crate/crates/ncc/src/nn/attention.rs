//! Scaled dot-product self-attention over a small set of tokens.

use serde::{Deserialize, Serialize};

use crate::nn::layers::{softmax_rows, softmax_rows_backward, Linear, LinearGrad, ParamPack};
use crate::nn::matrix::DenseMatrix;
use crate::rng::Prng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfAttention {
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub output: Linear,
    pub num_heads: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfAttentionGrad {
    pub query: LinearGrad,
    pub key: LinearGrad,
    pub value: LinearGrad,
    pub output: LinearGrad,
}

pub struct AttentionCache {
    q: DenseMatrix,
    k: DenseMatrix,
    v: DenseMatrix,
    /// Attention probabilities per head, each tokens x tokens.
    probs: Vec<DenseMatrix>,
    /// Concatenated head contexts, input to the output projection.
    context: DenseMatrix,
}

impl SelfAttention {
    /// `d_model` must be divisible by `num_heads`.
    pub fn init(d_in: usize, d_model: usize, d_out: usize, num_heads: usize, rng: &mut Prng) -> Self {
        assert!(num_heads >= 1 && d_model % num_heads == 0, "d_model must split across heads");
        Self {
            query: Linear::init(d_in, d_model, rng),
            key: Linear::init(d_in, d_model, rng),
            value: Linear::init(d_in, d_model, rng),
            output: Linear::init(d_model, d_out, rng),
            num_heads,
        }
    }

    pub fn d_in(&self) -> usize {
        self.query.in_dim()
    }

    pub fn d_out(&self) -> usize {
        self.output.out_dim()
    }

    pub fn forward(&self, tokens: &DenseMatrix) -> DenseMatrix {
        self.forward_cached(tokens).0
    }

    pub fn forward_cached(&self, tokens: &DenseMatrix) -> (DenseMatrix, AttentionCache) {
        assert_eq!(tokens.cols, self.d_in(), "attention input dim mismatch");
        let d_model = self.query.out_dim();
        let dk = d_model / self.num_heads;
        let scale = 1.0 / (dk as f64).sqrt();

        let q = self.query.forward(tokens);
        let k = self.key.forward(tokens);
        let v = self.value.forward(tokens);

        let mut probs = Vec::with_capacity(self.num_heads);
        let mut contexts = Vec::with_capacity(self.num_heads);
        for h in 0..self.num_heads {
            let qh = q.col_slice(h * dk, dk);
            let kh = k.col_slice(h * dk, dk);
            let vh = v.col_slice(h * dk, dk);
            let scores = qh.matmul_nt(&kh).scale(scale);
            let a = softmax_rows(&scores);
            contexts.push(a.matmul(&vh));
            probs.push(a);
        }
        let context = DenseMatrix::hcat(&contexts.iter().collect::<Vec<_>>());
        let out = self.output.forward(&context);
        (out, AttentionCache { q, k, v, probs, context })
    }

    pub fn backward(
        &self,
        tokens: &DenseMatrix,
        cache: &AttentionCache,
        grad_out: &DenseMatrix,
    ) -> (DenseMatrix, SelfAttentionGrad) {
        let d_model = self.query.out_dim();
        let dk = d_model / self.num_heads;
        let scale = 1.0 / (dk as f64).sqrt();

        let (grad_context, grad_output_params) = self.output.backward(&cache.context, grad_out);

        let mut grad_q = DenseMatrix::zeros(tokens.rows, d_model);
        let mut grad_k = DenseMatrix::zeros(tokens.rows, d_model);
        let mut grad_v = DenseMatrix::zeros(tokens.rows, d_model);
        for h in 0..self.num_heads {
            let qh = cache.q.col_slice(h * dk, dk);
            let kh = cache.k.col_slice(h * dk, dk);
            let vh = cache.v.col_slice(h * dk, dk);
            let a = &cache.probs[h];
            let g_ctx = grad_context.col_slice(h * dk, dk);

            let g_a = g_ctx.matmul_nt(&vh);
            let g_vh = a.matmul_tn(&g_ctx);
            let g_scores = softmax_rows_backward(a, &g_a).scale(scale);
            let g_qh = g_scores.matmul(&kh);
            let g_kh = g_scores.matmul_tn(&qh);

            for r in 0..tokens.rows {
                for c in 0..dk {
                    grad_q.set(r, h * dk + c, g_qh.get(r, c));
                    grad_k.set(r, h * dk + c, g_kh.get(r, c));
                    grad_v.set(r, h * dk + c, g_vh.get(r, c));
                }
            }
        }

        let (gx_q, grad_query) = self.query.backward(tokens, &grad_q);
        let (gx_k, grad_key) = self.key.backward(tokens, &grad_k);
        let (gx_v, grad_value) = self.value.backward(tokens, &grad_v);
        let mut grad_tokens = gx_q;
        grad_tokens.add_assign(&gx_k);
        grad_tokens.add_assign(&gx_v);
        (
            grad_tokens,
            SelfAttentionGrad {
                query: grad_query,
                key: grad_key,
                value: grad_value,
                output: grad_output_params,
            },
        )
    }
}

impl ParamPack for SelfAttention {
    fn collect_params(&self, out: &mut Vec<f64>) {
        self.query.collect_params(out);
        self.key.collect_params(out);
        self.value.collect_params(out);
        self.output.collect_params(out);
    }

    fn assign_params(&mut self, src: &mut dyn Iterator<Item = f64>) {
        self.query.assign_params(src);
        self.key.assign_params(src);
        self.value.assign_params(src);
        self.output.assign_params(src);
    }

    fn param_count(&self) -> usize {
        self.query.param_count()
            + self.key.param_count()
            + self.value.param_count()
            + self.output.param_count()
    }
}

impl ParamPack for SelfAttentionGrad {
    fn collect_params(&self, out: &mut Vec<f64>) {
        self.query.collect_params(out);
        self.key.collect_params(out);
        self.value.collect_params(out);
        self.output.collect_params(out);
    }

    fn assign_params(&mut self, src: &mut dyn Iterator<Item = f64>) {
        self.query.assign_params(src);
        self.key.assign_params(src);
        self.value.assign_params(src);
        self.output.assign_params(src);
    }

    fn param_count(&self) -> usize {
        self.query.param_count()
            + self.key.param_count()
            + self.value.param_count()
            + self.output.param_count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn single_token_attends_to_itself() {
        let mut r = rng::seeded(1);
        let sa = SelfAttention::init(4, 4, 4, 1, &mut r);
        let token = DenseMatrix::from_vec(1, 4, vec![0.3, -0.2, 0.7, 0.1]).unwrap();
        let out = sa.forward(&token);
        // softmax over one element is 1, so out = Wo(Wv(token) + bv) + bo
        let expect = sa.output.forward(&sa.value.forward(&token));
        for (a, b) in out.data().iter().zip(expect.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_output_projection_zeroes_result() {
        let mut r = rng::seeded(2);
        let mut sa = SelfAttention::init(4, 4, 4, 1, &mut r);
        sa.output = Linear::zeros(4, 4);
        let tokens = DenseMatrix::from_vec(3, 4, (0..12).map(|i| i as f64 * 0.1).collect()).unwrap();
        let out = sa.forward(&tokens);
        assert!(out.data().iter().all(|&v| v == 0.0));
    }
}
