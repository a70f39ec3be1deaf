//! The learned scoring function: a message-passing encoder over the KNN
//! graph, global pooling, self-attention over center tokens, and a
//! pairwise node-center decoder. Forward and backward passes are
//! hand-composed for this fixed architecture.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knn::KnnGraph;
use crate::nn::attention::AttentionCache;
use crate::nn::layers::{gelu, gelu_backward, LayerNorm, LayerNormGrad, Linear, LinearGrad, Mlp, MlpCache, MlpGrad, ParamPack};
use crate::nn::loss::log_sigmoid;
use crate::nn::matrix::DenseMatrix;
use crate::nn::{SelfAttention, SelfAttentionGrad};
use crate::rng;
use crate::scoring::{PriorityKind, PriorityMatrix};
use crate::solver::Centers;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Spatial dimension of the instances.
    pub dim: usize,
    pub d_emb: usize,
    pub d_hidden: usize,
    /// Message-passing layer count L.
    pub layers: usize,
    /// KNN graph degree the model expects.
    pub kappa: usize,
    pub num_heads: usize,
    /// Adds the depot encoder and widens the center tokens.
    pub cvrp: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            d_emb: 64,
            d_hidden: 64,
            layers: 3,
            kappa: 25,
            num_heads: 1,
            cvrp: false,
        }
    }
}

impl ModelConfig {
    pub fn token_dim(&self) -> usize {
        if self.cvrp {
            3 * self.d_emb
        } else {
            2 * self.d_emb
        }
    }
}

/// One message-passing layer: transformed self state plus a distance
/// weighted neighbor aggregate, GELU, residual, post-norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GnnLayer {
    mlp_self: Mlp,
    mlp_agg: Mlp,
    norm: LayerNorm,
}

#[derive(Debug, Clone)]
struct GnnLayerGrad {
    mlp_self: MlpGrad,
    mlp_agg: MlpGrad,
    norm: LayerNormGrad,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScoreModel {
    pub config: ModelConfig,
    input_proj: Linear,
    gnn: Vec<GnnLayer>,
    pool_mlp: Mlp,
    attention: SelfAttention,
    center_mlp: Mlp,
    decoder: Mlp,
    depot_mlp: Option<Mlp>,
    #[serde(skip)]
    encoder_passes: AtomicUsize,
}

impl Clone for ScoreModel {
    fn clone(&self) -> Self {
        Self {
            config: self.config,
            input_proj: self.input_proj.clone(),
            gnn: self.gnn.clone(),
            pool_mlp: self.pool_mlp.clone(),
            attention: self.attention.clone(),
            center_mlp: self.center_mlp.clone(),
            decoder: self.decoder.clone(),
            depot_mlp: self.depot_mlp.clone(),
            encoder_passes: AtomicUsize::new(0),
        }
    }
}

/// Gradients mirroring [`ScoreModel`]'s parameter layout.
pub struct ScoreModelGrad {
    input_proj: LinearGrad,
    gnn: Vec<GnnLayerGrad>,
    pool_mlp: MlpGrad,
    attention: SelfAttentionGrad,
    center_mlp: MlpGrad,
    decoder: MlpGrad,
    depot_mlp: Option<MlpGrad>,
}

/// Buffered encoder state: final node embeddings and the pooled graph
/// embedding. Valid only for the graph it was computed from.
#[derive(Debug, Clone)]
pub struct EncoderOutput {
    pub node_emb: DenseMatrix,
    pub graph_emb: DenseMatrix,
    graph_n: usize,
    graph_kappa: usize,
}

struct GnnLayerCache {
    self_cache: MlpCache,
    agg_cache: MlpCache,
    /// Pre-GELU sum of the two branches.
    z: DenseMatrix,
    /// Residual sum entering the norm.
    pre_norm: DenseMatrix,
}

struct EncoderCache {
    node_features: DenseMatrix,
    layers: Vec<GnnLayerCache>,
    node_emb: DenseMatrix,
    max_arg: Vec<usize>,
    pool_cache: MlpCache,
    graph_emb: DenseMatrix,
}

/// Everything the training backward pass needs.
pub struct ForwardCache {
    encoder: EncoderCache,
    medoids: Vec<usize>,
    tokens: DenseMatrix,
    sa_cache: AttentionCache,
    center_cache: MlpCache,
    dec_cache: MlpCache,
    depot_cache: Option<MlpCache>,
}

impl ScoreModel {
    pub fn init(config: ModelConfig, seed: u64) -> Self {
        let mut rng = rng::seeded(seed);
        let d = config.d_emb;
        let dh = config.d_hidden;
        let input_proj = Linear::init(config.dim + 1, d, &mut rng);
        let gnn = (0..config.layers)
            .map(|_| GnnLayer {
                mlp_self: Mlp::init(&[d, dh, d], &mut rng),
                mlp_agg: Mlp::init(&[d, dh, d], &mut rng),
                norm: LayerNorm::identity(d),
            })
            .collect();
        let pool_mlp = Mlp::init(&[2 * d, dh, d], &mut rng);
        let token_dim = config.token_dim();
        let attention = SelfAttention::init(token_dim, token_dim, token_dim, config.num_heads, &mut rng);
        let center_mlp = Mlp::init(&[token_dim, dh, d], &mut rng);
        let decoder = Mlp::init(&[2 * d, dh, dh, 1], &mut rng);
        let depot_mlp = config
            .cvrp
            .then(|| Mlp::init(&[config.dim, dh, d], &mut rng));
        Self {
            config,
            input_proj,
            gnn,
            pool_mlp,
            attention,
            center_mlp,
            decoder,
            depot_mlp,
            encoder_passes: AtomicUsize::new(0),
        }
    }

    pub fn encoder_passes(&self) -> usize {
        self.encoder_passes.load(Ordering::Relaxed)
    }

    fn check_graph(&self, graph: &KnnGraph) -> Result<()> {
        if graph.feature_dim != self.config.dim + 1 {
            return Err(Error::shape(format!(
                "graph feature dim {} does not match model input dim {}",
                graph.feature_dim,
                self.config.dim + 1
            )));
        }
        Ok(())
    }

    fn node_feature_matrix(&self, graph: &KnnGraph) -> DenseMatrix {
        let mut x = DenseMatrix::zeros(graph.n, graph.feature_dim);
        for i in 0..graph.n {
            x.row_mut(i).copy_from_slice(graph.node_feature(i));
        }
        x
    }

    /// Distance-weighted neighbor sum per node.
    fn aggregate(&self, graph: &KnnGraph, h: &DenseMatrix) -> DenseMatrix {
        let mut agg = DenseMatrix::zeros(h.rows, h.cols);
        for i in 0..graph.n {
            for (r, &j) in graph.neighbors(i).iter().enumerate() {
                let w = graph.edge_weights(i)[r];
                let src = h.row(j).to_vec();
                for (a, s) in agg.row_mut(i).iter_mut().zip(&src) {
                    *a += w * s;
                }
            }
        }
        agg
    }

    /// Scatter counterpart of [`aggregate`].
    fn aggregate_backward(&self, graph: &KnnGraph, grad_agg: &DenseMatrix) -> DenseMatrix {
        let mut grad_h = DenseMatrix::zeros(grad_agg.rows, grad_agg.cols);
        for i in 0..graph.n {
            for (r, &j) in graph.neighbors(i).iter().enumerate() {
                let w = graph.edge_weights(i)[r];
                let g = grad_agg.row(i).to_vec();
                for (dst, s) in grad_h.row_mut(j).iter_mut().zip(&g) {
                    *dst += w * s;
                }
            }
        }
        grad_h
    }

    fn encode_cached(&self, graph: &KnnGraph) -> Result<EncoderCache> {
        self.check_graph(graph)?;
        self.encoder_passes.fetch_add(1, Ordering::Relaxed);
        let d = self.config.d_emb;
        let node_features = self.node_feature_matrix(graph);
        let mut h = self.input_proj.forward(&node_features);
        let mut layers = Vec::with_capacity(self.gnn.len());
        for layer in &self.gnn {
            let h_in = h.clone();
            let agg = self.aggregate(graph, &h);
            let (zs, self_cache) = layer.mlp_self.forward_cached(&h);
            let (za, agg_cache) = layer.mlp_agg.forward_cached(&agg);
            let z = zs.add(&za);
            let pre_norm = h_in.add(&gelu(&z));
            h = layer.norm.forward(&pre_norm);
            layers.push(GnnLayerCache {
                self_cache,
                agg_cache,
                z,
                pre_norm,
            });
        }
        let node_emb = h;
        // concatenated max and mean pooling over nodes
        let n = node_emb.rows as f64;
        let mut pooled_in = DenseMatrix::zeros(1, 2 * d);
        let mut max_arg = vec![0usize; d];
        for c in 0..d {
            let mut best = f64::NEG_INFINITY;
            let mut mean = 0.0;
            for i in 0..node_emb.rows {
                let v = node_emb.get(i, c);
                if v > best {
                    best = v;
                    max_arg[c] = i;
                }
                mean += v;
            }
            pooled_in.set(0, c, best);
            pooled_in.set(0, d + c, mean / n);
        }
        let (graph_emb, pool_cache) = self.pool_mlp.forward_cached(&pooled_in);
        Ok(EncoderCache {
            node_features,
            layers,
            node_emb,
            max_arg,
            pool_cache,
            graph_emb,
        })
    }

    /// Runs the node encoder once and returns the buffered embeddings.
    pub fn encode(&self, graph: &KnnGraph) -> Result<EncoderOutput> {
        let cache = self.encode_cached(graph)?;
        Ok(EncoderOutput {
            node_emb: cache.node_emb,
            graph_emb: cache.graph_emb,
            graph_n: graph.n,
            graph_kappa: graph.kappa,
        })
    }

    /// Picks the node nearest to each center, tie-break on the lowest
    /// index, using the coordinate part of the graph's node features.
    fn center_nodes(&self, graph: &KnnGraph, centers: &Centers) -> Vec<usize> {
        let dim = self.config.dim;
        (0..centers.len())
            .map(|k| {
                let pos = centers.position(k);
                let mut best = 0;
                let mut best_d = f64::INFINITY;
                for i in 0..graph.n {
                    let coords = &graph.node_feature(i)[..dim];
                    let d = crate::instance::euclidean(coords, pos);
                    if d < best_d {
                        best_d = d;
                        best = i;
                    }
                }
                best
            })
            .collect()
    }

    fn build_tokens(
        &self,
        enc_nodes: &DenseMatrix,
        graph_emb: &DenseMatrix,
        medoids: &[usize],
        depot_emb: Option<&DenseMatrix>,
    ) -> DenseMatrix {
        let d = self.config.d_emb;
        let token_dim = self.config.token_dim();
        let mut tokens = DenseMatrix::zeros(medoids.len(), token_dim);
        for (k, &j) in medoids.iter().enumerate() {
            tokens.row_mut(k)[..d].copy_from_slice(graph_emb.row(0));
            tokens.row_mut(k)[d..2 * d].copy_from_slice(enc_nodes.row(j));
            if let Some(dep) = depot_emb {
                tokens.row_mut(k)[2 * d..].copy_from_slice(dep.row(0));
            }
        }
        tokens
    }

    fn decoder_pairs(&self, enc_nodes: &DenseMatrix, center_emb: &DenseMatrix) -> DenseMatrix {
        let d = self.config.d_emb;
        let n = enc_nodes.rows;
        let k = center_emb.rows;
        let mut pairs = DenseMatrix::zeros(n * k, 2 * d);
        for i in 0..n {
            for c in 0..k {
                let row = pairs.row_mut(i * k + c);
                row[..d].copy_from_slice(enc_nodes.row(i));
                row[d..].copy_from_slice(center_emb.row(c));
            }
        }
        pairs
    }

    /// Scores every node-center pair given buffered encoder output.
    /// Returns log-sigmoid scores, one column per center.
    pub fn decode(
        &self,
        graph: &KnnGraph,
        enc: &EncoderOutput,
        centers: &Centers,
        depot: Option<&[f64]>,
    ) -> Result<PriorityMatrix> {
        if enc.graph_n != graph.n || enc.graph_kappa != graph.kappa {
            return Err(Error::invalid(
                "encoder cache does not match graph; re-encode".to_string(),
            ));
        }
        if self.config.cvrp != depot.is_some() {
            return Err(Error::invalid(format!(
                "model cvrp mode = {}, depot given = {}",
                self.config.cvrp,
                depot.is_some()
            )));
        }
        let depot_emb = match (&self.depot_mlp, depot) {
            (Some(mlp), Some(dep)) => {
                let input = DenseMatrix::from_vec(1, self.config.dim, dep.to_vec())?;
                Some(mlp.forward(&input))
            }
            _ => None,
        };
        let medoids = self.center_nodes(graph, centers);
        let tokens = self.build_tokens(&enc.node_emb, &enc.graph_emb, &medoids, depot_emb.as_ref());
        let sa_out = self.attention.forward(&tokens);
        let center_emb = self.center_mlp.forward(&sa_out);
        let pairs = self.decoder_pairs(&enc.node_emb, &center_emb);
        let logits = self.decoder.forward(&pairs);
        let k = centers.len();
        let mut values = DenseMatrix::zeros(graph.n, k);
        for i in 0..graph.n {
            for c in 0..k {
                values.set(i, c, log_sigmoid(logits.get(i * k + c, 0)));
            }
        }
        Ok(PriorityMatrix {
            values,
            kind: PriorityKind::Neural,
        })
    }

    /// Full forward returning raw logits (n x K) plus the caches needed
    /// for the backward pass.
    pub fn forward_training(
        &self,
        graph: &KnnGraph,
        centers: &Centers,
        depot: Option<&[f64]>,
    ) -> Result<(DenseMatrix, ForwardCache)> {
        if self.config.cvrp != depot.is_some() {
            return Err(Error::invalid("depot presence must match model mode"));
        }
        let encoder = self.encode_cached(graph)?;
        let (depot_emb, depot_cache) = match (&self.depot_mlp, depot) {
            (Some(mlp), Some(dep)) => {
                let input = DenseMatrix::from_vec(1, self.config.dim, dep.to_vec())?;
                let (emb, cache) = mlp.forward_cached(&input);
                (Some(emb), Some(cache))
            }
            _ => (None, None),
        };
        let medoids = self.center_nodes(graph, centers);
        let tokens = self.build_tokens(
            &encoder.node_emb,
            &encoder.graph_emb,
            &medoids,
            depot_emb.as_ref(),
        );
        let (sa_out, sa_cache) = self.attention.forward_cached(&tokens);
        let (center_emb, center_cache) = self.center_mlp.forward_cached(&sa_out);
        let pairs = self.decoder_pairs(&encoder.node_emb, &center_emb);
        let (logits_col, dec_cache) = self.decoder.forward_cached(&pairs);
        let k = centers.len();
        let mut logits = DenseMatrix::zeros(graph.n, k);
        for i in 0..graph.n {
            for c in 0..k {
                logits.set(i, c, logits_col.get(i * k + c, 0));
            }
        }
        let cache = ForwardCache {
            encoder,
            medoids,
            tokens,
            sa_cache,
            center_cache,
            dec_cache,
            depot_cache,
        };
        Ok((logits, cache))
    }

    /// Backward pass from a gradient on the raw logits.
    pub fn backward(
        &self,
        graph: &KnnGraph,
        cache: &ForwardCache,
        grad_logits: &DenseMatrix,
    ) -> ScoreModelGrad {
        let d = self.config.d_emb;
        let n = graph.n;
        let k = grad_logits.cols;

        let mut g_col = DenseMatrix::zeros(n * k, 1);
        for i in 0..n {
            for c in 0..k {
                g_col.set(i * k + c, 0, grad_logits.get(i, c));
            }
        }
        let (g_pairs, g_decoder) = self.decoder.backward(&cache.dec_cache, &g_col);

        let mut g_node_emb = DenseMatrix::zeros(n, d);
        let mut g_center_emb = DenseMatrix::zeros(k, d);
        for i in 0..n {
            for c in 0..k {
                let row = g_pairs.row(i * k + c);
                for (dst, &s) in g_node_emb.row_mut(i).iter_mut().zip(&row[..d]) {
                    *dst += s;
                }
                for (dst, &s) in g_center_emb.row_mut(c).iter_mut().zip(&row[d..]) {
                    *dst += s;
                }
            }
        }

        let (g_sa_out, g_center_mlp) = self.center_mlp.backward(&cache.center_cache, &g_center_emb);
        let (g_tokens, g_attention) = self.attention.backward(&cache.tokens, &cache.sa_cache, &g_sa_out);

        // split token gradients back into graph embedding, medoid node
        // embedding, and depot embedding parts
        let mut g_graph_emb = DenseMatrix::zeros(1, d);
        let mut g_depot_emb = DenseMatrix::zeros(1, d);
        for (c, &j) in cache.medoids.iter().enumerate() {
            let row = g_tokens.row(c);
            for (dst, &s) in g_graph_emb.row_mut(0).iter_mut().zip(&row[..d]) {
                *dst += s;
            }
            for (dst, &s) in g_node_emb.row_mut(j).iter_mut().zip(&row[d..2 * d]) {
                *dst += s;
            }
            if self.config.cvrp {
                for (dst, &s) in g_depot_emb.row_mut(0).iter_mut().zip(&row[2 * d..]) {
                    *dst += s;
                }
            }
        }

        let g_depot_mlp = match (&self.depot_mlp, &cache.depot_cache) {
            (Some(mlp), Some(dc)) => Some(mlp.backward(dc, &g_depot_emb).1),
            _ => None,
        };

        let (g_pooled_in, g_pool_mlp) = self.pool_mlp.backward(&cache.encoder.pool_cache, &g_graph_emb);
        let inv_n = 1.0 / n as f64;
        for c in 0..d {
            let i = cache.encoder.max_arg[c];
            let cur = g_node_emb.get(i, c);
            g_node_emb.set(i, c, cur + g_pooled_in.get(0, c));
            let mean_g = g_pooled_in.get(0, d + c) * inv_n;
            for row in 0..n {
                let cur = g_node_emb.get(row, c);
                g_node_emb.set(row, c, cur + mean_g);
            }
        }

        // message-passing layers in reverse
        let mut g_h = g_node_emb;
        let mut gnn_grads: Vec<GnnLayerGrad> = Vec::with_capacity(self.gnn.len());
        for (layer, lc) in self.gnn.iter().zip(&cache.encoder.layers).rev() {
            let (g_pre_norm, g_norm) = layer.norm.backward(&lc.pre_norm, &g_h);
            let g_act = gelu_backward(&lc.z, &g_pre_norm);
            let (g_h_self, g_mlp_self) = layer.mlp_self.backward(&lc.self_cache, &g_act);
            let (g_agg, g_mlp_agg) = layer.mlp_agg.backward(&lc.agg_cache, &g_act);
            let g_h_from_agg = self.aggregate_backward(graph, &g_agg);
            g_h = g_pre_norm; // residual path
            g_h.add_assign(&g_h_self);
            g_h.add_assign(&g_h_from_agg);
            gnn_grads.push(GnnLayerGrad {
                mlp_self: g_mlp_self,
                mlp_agg: g_mlp_agg,
                norm: g_norm,
            });
        }
        gnn_grads.reverse();

        let (_, g_input_proj) = self.input_proj.backward(&cache.encoder.node_features, &g_h);

        ScoreModelGrad {
            input_proj: g_input_proj,
            gnn: gnn_grads,
            pool_mlp: g_pool_mlp,
            attention: g_attention,
            center_mlp: g_center_mlp,
            decoder: g_decoder,
            depot_mlp: g_depot_mlp,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.collect_params(&mut out);
        out
    }

    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.param_count(), "param count mismatch");
        self.assign_params(&mut params.iter().copied());
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = ModelFile {
            version: 1,
            config: self.config,
            params: self.params(),
        };
        let text = serde_json::to_string(&file).expect("model serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        if file.version != 1 {
            return Err(Error::Validation {
                path: path.display().to_string(),
                detail: format!("unsupported model version {}", file.version),
            });
        }
        let mut model = ScoreModel::init(file.config, 0);
        if file.params.len() != model.param_count() {
            return Err(Error::Validation {
                path: path.display().to_string(),
                detail: format!(
                    "expected {} parameters for config, file has {}",
                    model.param_count(),
                    file.params.len()
                ),
            });
        }
        model.set_params(&file.params);
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    config: ModelConfig,
    params: Vec<f64>,
}

impl ParamPack for ScoreModel {
    fn collect_params(&self, out: &mut Vec<f64>) {
        self.input_proj.collect_params(out);
        for l in &self.gnn {
            l.mlp_self.collect_params(out);
            l.mlp_agg.collect_params(out);
            l.norm.collect_params(out);
        }
        self.pool_mlp.collect_params(out);
        self.attention.collect_params(out);
        self.center_mlp.collect_params(out);
        self.decoder.collect_params(out);
        if let Some(m) = &self.depot_mlp {
            m.collect_params(out);
        }
    }

    fn assign_params(&mut self, src: &mut dyn Iterator<Item = f64>) {
        self.input_proj.assign_params(src);
        for l in &mut self.gnn {
            l.mlp_self.assign_params(src);
            l.mlp_agg.assign_params(src);
            l.norm.assign_params(src);
        }
        self.pool_mlp.assign_params(src);
        self.attention.assign_params(src);
        self.center_mlp.assign_params(src);
        self.decoder.assign_params(src);
        if let Some(m) = &mut self.depot_mlp {
            m.assign_params(src);
        }
    }

    fn param_count(&self) -> usize {
        self.input_proj.param_count()
            + self
                .gnn
                .iter()
                .map(|l| l.mlp_self.param_count() + l.mlp_agg.param_count() + l.norm.param_count())
                .sum::<usize>()
            + self.pool_mlp.param_count()
            + self.attention.param_count()
            + self.center_mlp.param_count()
            + self.decoder.param_count()
            + self.depot_mlp.as_ref().map_or(0, Mlp::param_count)
    }
}

impl ParamPack for ScoreModelGrad {
    fn collect_params(&self, out: &mut Vec<f64>) {
        self.input_proj.collect_params(out);
        for l in &self.gnn {
            l.mlp_self.collect_params(out);
            l.mlp_agg.collect_params(out);
            l.norm.collect_params(out);
        }
        self.pool_mlp.collect_params(out);
        self.attention.collect_params(out);
        self.center_mlp.collect_params(out);
        self.decoder.collect_params(out);
        if let Some(m) = &self.depot_mlp {
            m.collect_params(out);
        }
    }

    fn assign_params(&mut self, _src: &mut dyn Iterator<Item = f64>) {
        unreachable!("gradients are read-only packs");
    }

    fn param_count(&self) -> usize {
        let mut v = Vec::new();
        self.collect_params(&mut v);
        v.len()
    }
}

/// Full pipeline: encode the graph, then score every node-center pair.
pub fn model_forward(
    model: &ScoreModel,
    graph: &KnnGraph,
    centers: &Centers,
    depot: Option<&[f64]>,
) -> Result<PriorityMatrix> {
    let enc = model.encode(graph)?;
    model.decode(graph, &enc, centers, depot)
}

/// Runs the encoder once for reuse across solver iterations.
pub fn cache_node_embeddings(model: &ScoreModel, graph: &KnnGraph) -> Result<EncoderOutput> {
    model.encode(graph)
}

/// Elementwise product of the neural probabilities with the heuristic
/// priorities.
pub fn scaled_priority(neural: &PriorityMatrix, heuristic: &PriorityMatrix) -> Result<PriorityMatrix> {
    if !neural.values.same_shape(&heuristic.values) {
        return Err(Error::shape(format!(
            "priority shapes differ: {}x{} vs {}x{}",
            neural.values.rows, neural.values.cols, heuristic.values.rows, heuristic.values.cols
        )));
    }
    let mut values = heuristic.values.clone();
    for (v, &s) in values.data_mut().iter_mut().zip(neural.values.data()) {
        *v *= s.exp(); // log-probability -> probability
    }
    Ok(PriorityMatrix {
        values,
        kind: PriorityKind::NeuralScaled,
    })
}
