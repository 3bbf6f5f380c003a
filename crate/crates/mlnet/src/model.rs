//! Multi-layer directed co-block model: core types and the synthetic
//! network generator.
//!
//! # Model
//!
//! A network has `L` layers on a shared node set of size `n`. Each layer is
//! a directed binary adjacency matrix with a zero diagonal. Every node
//! carries a sender community in `0..k_s` and a receiver community in
//! `0..k_r`; conditional on the labels, edges are independent Bernoulli
//! draws with `P(A_l[i,j] = 1) = B_l[g_s[i], g_r[j]]` for `i != j`.
//!
//! # Conventions
//!
//! * Labels are 0-based throughout.
//! * All randomness flows through [`crate::rng`] sub-seeds, so each layer's
//!   block parameters and each layer's edges form independent, individually
//!   replayable streams.

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::rng_from;

/// Binary directed multi-layer network with a common node set.
///
/// Layers are stored as `u8` matrices (`0`/`1`) to keep large simulated
/// networks cheap to hold; linear algebra promotes to `f64` on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLayerNetwork {
    layers: Vec<Array2<u8>>,
    n: usize,
}

impl MultiLayerNetwork {
    /// Validates and wraps adjacency layers: at least one layer, all square
    /// of equal side >= 2, entries 0/1, zero diagonals.
    pub fn new(layers: Vec<Array2<u8>>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::DegenerateInput("network needs at least one layer".into()))?;
        let n = first.nrows();
        if n < 2 {
            return Err(Error::DegenerateInput(format!(
                "network needs at least 2 nodes, got {n}"
            )));
        }
        for (l, a) in layers.iter().enumerate() {
            if a.nrows() != n || a.ncols() != n {
                return Err(Error::DimensionMismatch {
                    context: "network layer",
                    expected: format!("{n}x{n}"),
                    actual: format!("{}x{} (layer {l})", a.nrows(), a.ncols()),
                });
            }
            for i in 0..n {
                if a[[i, i]] != 0 {
                    return Err(Error::DegenerateInput(format!(
                        "layer {l} has a self-loop at node {i}"
                    )));
                }
            }
            if a.iter().any(|&x| x > 1) {
                return Err(Error::DegenerateInput(format!(
                    "layer {l} has entries outside {{0,1}}"
                )));
            }
        }
        Ok(Self { n, layers })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layer(&self, l: usize) -> &Array2<u8> {
        &self.layers[l]
    }

    pub fn layers(&self) -> &[Array2<u8>] {
        &self.layers
    }

    /// Entrywise sum of all layers as `f64` (exact: integer-valued).
    pub fn layer_sum(&self) -> Array2<f64> {
        let mut s = Array2::<f64>::zeros((self.n, self.n));
        for a in &self.layers {
            for (dst, &src) in s.iter_mut().zip(a.iter()) {
                *dst += f64::from(src);
            }
        }
        s
    }

    /// Total edge count across layers.
    pub fn edge_count(&self) -> usize {
        self.layers
            .iter()
            .map(|a| a.iter().filter(|&&x| x == 1).count())
            .sum()
    }

    /// Returns the same network with layers in `order`. Used by tests for
    /// layer-permutation invariance; `order` must be a permutation.
    pub fn with_layer_order(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.layers.len() {
            return Err(Error::DimensionMismatch {
                context: "layer order",
                expected: format!("{}", self.layers.len()),
                actual: format!("{}", order.len()),
            });
        }
        let mut seen = vec![false; self.layers.len()];
        for &l in order {
            if l >= self.layers.len() || seen[l] {
                return Err(Error::DegenerateInput("layer order is not a permutation".into()));
            }
            seen[l] = true;
        }
        Ok(Self {
            n: self.n,
            layers: order.iter().map(|&l| self.layers[l].clone()).collect(),
        })
    }
}

/// Node-to-community assignment with labels in `0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunityLabels {
    labels: Vec<usize>,
    k: usize,
}

impl CommunityLabels {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::DegenerateInput("community count must be >= 1".into()));
        }
        if labels.is_empty() {
            return Err(Error::DegenerateInput("label vector must be non-empty".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&g| g >= k) {
            return Err(Error::DegenerateInput(format!(
                "label {bad} out of range for k = {k}"
            )));
        }
        Ok(Self { labels, k })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    /// Number of nodes in each community; may contain zeros.
    pub fn community_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &g in &self.labels {
            sizes[g] += 1;
        }
        sizes
    }
}

/// Per-layer block probability matrices, each `k_s x k_r` with entries in [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTensor {
    blocks: Vec<Array2<f64>>,
    k_s: usize,
    k_r: usize,
}

impl BlockTensor {
    pub fn new(blocks: Vec<Array2<f64>>) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::DegenerateInput("block tensor needs at least one layer".into()))?;
        let (k_s, k_r) = (first.nrows(), first.ncols());
        if k_s == 0 || k_r == 0 {
            return Err(Error::DegenerateInput("block matrices must be non-empty".into()));
        }
        for (l, b) in blocks.iter().enumerate() {
            if b.nrows() != k_s || b.ncols() != k_r {
                return Err(Error::DimensionMismatch {
                    context: "block tensor layer",
                    expected: format!("{k_s}x{k_r}"),
                    actual: format!("{}x{} (layer {l})", b.nrows(), b.ncols()),
                });
            }
            if b.iter().any(|&p| !(0.0..=1.0).contains(&p) || p.is_nan()) {
                return Err(Error::DegenerateInput(format!(
                    "layer {l} has block probabilities outside [0,1]"
                )));
            }
        }
        Ok(Self { k_s, k_r, blocks })
    }

    pub fn num_layers(&self) -> usize {
        self.blocks.len()
    }

    pub fn k_s(&self) -> usize {
        self.k_s
    }

    pub fn k_r(&self) -> usize {
        self.k_r
    }

    pub fn layer(&self, l: usize) -> &Array2<f64> {
        &self.blocks[l]
    }

    pub fn layers(&self) -> &[Array2<f64>] {
        &self.blocks
    }
}

/// Parameters of one simulated network draw.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub n: usize,
    pub num_layers: usize,
    pub k_s: usize,
    pub k_r: usize,
    /// Global sparsity factor multiplying every block probability.
    pub rho: f64,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::DegenerateInput(format!("n must be >= 2, got {}", self.n)));
        }
        if self.num_layers == 0 {
            return Err(Error::DegenerateInput("layer count must be >= 1".into()));
        }
        if self.k_s == 0 || self.k_r == 0 {
            return Err(Error::DegenerateInput("community counts must be >= 1".into()));
        }
        if self.k_s > self.n || self.k_r > self.n {
            return Err(Error::DegenerateInput(format!(
                "community counts ({}, {}) exceed n = {}",
                self.k_s, self.k_r, self.n
            )));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::DegenerateInput(format!(
                "rho must lie in (0, 1], got {}",
                self.rho
            )));
        }
        Ok(())
    }
}

/// The recorded draws behind one layer's block matrix, sufficient to
/// recompute it exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerBlockParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Entrywise perturbation added to the patterned base matrix.
    pub perturbation: Array2<f64>,
}

/// One full generator draw: the network plus everything it was built from.
#[derive(Debug, Clone)]
pub struct GeneratedNetwork {
    pub network: MultiLayerNetwork,
    pub sender_labels: CommunityLabels,
    pub receiver_labels: CommunityLabels,
    pub blocks: BlockTensor,
    pub layer_params: Vec<LayerBlockParams>,
}

/// Uniform i.i.d. labels over `0..k`. Communities are balanced in
/// expectation only; use [`sample_strict_balanced_labels`] for exact balance.
pub fn sample_balanced_labels<R: Rng>(n: usize, k: usize, rng: &mut R) -> Result<CommunityLabels> {
    if k == 0 || n == 0 {
        return Err(Error::DegenerateInput("need n >= 1 and k >= 1".into()));
    }
    if k > n {
        return Err(Error::DegenerateInput(format!(
            "cannot place {k} communities on {n} nodes"
        )));
    }
    let labels = (0..n).map(|_| rng.random_range(0..k)).collect();
    CommunityLabels::new(labels, k)
}

/// Labels with community sizes differing by at most one, in shuffled node
/// order. Intended for tests that need every community non-trivially filled.
pub fn sample_strict_balanced_labels<R: Rng>(
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<CommunityLabels> {
    if k == 0 || n == 0 {
        return Err(Error::DegenerateInput("need n >= 1 and k >= 1".into()));
    }
    if k > n {
        return Err(Error::DegenerateInput(format!(
            "cannot place {k} communities on {n} nodes"
        )));
    }
    let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    // Fisher-Yates; draw order is part of the frozen determinism contract.
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        labels.swap(i, j);
    }
    CommunityLabels::new(labels, k)
}

/// Patterned-plus-noise block matrices for simulation studies.
///
/// Per layer `l` (each from its own `("blocks", l)` sub-stream, draws in the
/// frozen order alpha, beta, gamma, then the perturbation row-major):
///
/// * base pattern: `alpha ~ U[0.6,0.8]` on the diagonal `k == l`,
///   `gamma ~ U[0.4,0.6]` on the shifted band `l == (k + k_s) mod k_r`,
///   `beta ~ U[0.1,0.3]` elsewhere; the diagonal rule wins when both apply;
/// * perturbation entries `~ U[-0.1, 0.1]`;
/// * final entry: `rho * clamp(base + perturbation, 0, 1)`.
pub fn build_experiment_blocks(
    k_s: usize,
    k_r: usize,
    num_layers: usize,
    rho: f64,
    seed: u64,
) -> Result<(BlockTensor, Vec<LayerBlockParams>)> {
    if k_s == 0 || k_r == 0 || num_layers == 0 {
        return Err(Error::DegenerateInput("need k_s, k_r, L >= 1".into()));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::DegenerateInput(format!("rho must lie in (0, 1], got {rho}")));
    }
    let mut blocks = Vec::with_capacity(num_layers);
    let mut params = Vec::with_capacity(num_layers);
    for l in 0..num_layers {
        let mut rng = rng_from(seed, "blocks", &[l as u64]);
        let alpha: f64 = rng.random_range(0.6..0.8);
        let beta: f64 = rng.random_range(0.1..0.3);
        let gamma: f64 = rng.random_range(0.4..0.6);
        let perturbation =
            Array2::from_shape_fn((k_s, k_r), |_| rng.random_range(-0.1..0.1));
        let b = assemble_block_matrix(k_s, k_r, rho, alpha, beta, gamma, &perturbation);
        blocks.push(b);
        params.push(LayerBlockParams { alpha, beta, gamma, perturbation });
    }
    Ok((BlockTensor::new(blocks)?, params))
}

/// Deterministic assembly step of [`build_experiment_blocks`], exposed so
/// recorded draws can be replayed exactly.
pub fn assemble_block_matrix(
    k_s: usize,
    k_r: usize,
    rho: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
    perturbation: &Array2<f64>,
) -> Array2<f64> {
    Array2::from_shape_fn((k_s, k_r), |(k, l)| {
        let base = if k == l {
            alpha
        } else if l == (k + k_s) % k_r {
            gamma
        } else {
            beta
        };
        rho * (base + perturbation[[k, l]]).clamp(0.0, 1.0)
    })
}

/// Edge-probability matrix of one layer: entry `(i,j)` is
/// `B_l[g_s[i], g_r[j]]` off the diagonal and 0 on it.
pub fn expected_adjacency(
    sender: &CommunityLabels,
    receiver: &CommunityLabels,
    blocks: &BlockTensor,
    layer: usize,
) -> Result<Array2<f64>> {
    check_label_block_dims(sender, receiver, blocks)?;
    if layer >= blocks.num_layers() {
        return Err(Error::DegenerateInput(format!(
            "layer {layer} out of range for {} layers",
            blocks.num_layers()
        )));
    }
    let n = sender.len();
    let b = blocks.layer(layer);
    let gs = sender.as_slice();
    let gr = receiver.as_slice();
    let mut omega = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                omega[[i, j]] = b[[gs[i], gr[j]]];
            }
        }
    }
    Ok(omega)
}

fn check_label_block_dims(
    sender: &CommunityLabels,
    receiver: &CommunityLabels,
    blocks: &BlockTensor,
) -> Result<()> {
    if sender.len() != receiver.len() {
        return Err(Error::DimensionMismatch {
            context: "label vectors",
            expected: format!("{}", sender.len()),
            actual: format!("{}", receiver.len()),
        });
    }
    if sender.k() != blocks.k_s() || receiver.k() != blocks.k_r() {
        return Err(Error::DimensionMismatch {
            context: "labels vs block tensor",
            expected: format!("({}, {})", blocks.k_s(), blocks.k_r()),
            actual: format!("({}, {})", sender.k(), receiver.k()),
        });
    }
    Ok(())
}

/// Draws every layer's adjacency matrix given labels and block matrices.
/// Layer `l` consumes the `("adj", l)` sub-stream in row-major order over
/// off-diagonal entries.
pub fn sample_network(
    sender: &CommunityLabels,
    receiver: &CommunityLabels,
    blocks: &BlockTensor,
    seed: u64,
) -> Result<MultiLayerNetwork> {
    check_label_block_dims(sender, receiver, blocks)?;
    let n = sender.len();
    if n < 2 {
        return Err(Error::DegenerateInput("need at least 2 nodes".into()));
    }
    let gs = sender.as_slice();
    let gr = receiver.as_slice();
    let mut layers = Vec::with_capacity(blocks.num_layers());
    for l in 0..blocks.num_layers() {
        let mut rng = rng_from(seed, "adj", &[l as u64]);
        let b = blocks.layer(l);
        let mut a = Array2::<u8>::zeros((n, n));
        for i in 0..n {
            let row = b.row(gs[i]);
            for j in 0..n {
                if i != j {
                    a[[i, j]] = u8::from(rng.random::<f64>() < row[gr[j]]);
                }
            }
        }
        layers.push(a);
    }
    MultiLayerNetwork::new(layers)
}

/// Full generator pipeline: labels, block matrices, then adjacency layers,
/// each from its own sub-stream of `config.seed`.
pub fn generate(config: &GeneratorConfig) -> Result<GeneratedNetwork> {
    config.validate()?;
    let mut label_rng_s = rng_from(config.seed, "labels", &[0]);
    let mut label_rng_r = rng_from(config.seed, "labels", &[1]);
    let sender_labels = sample_balanced_labels(config.n, config.k_s, &mut label_rng_s)?;
    let receiver_labels = sample_balanced_labels(config.n, config.k_r, &mut label_rng_r)?;
    let (blocks, layer_params) =
        build_experiment_blocks(config.k_s, config.k_r, config.num_layers, config.rho, config.seed)?;
    let network = sample_network(&sender_labels, &receiver_labels, &blocks, config.seed)?;
    Ok(GeneratedNetwork {
        network,
        sender_labels,
        receiver_labels,
        blocks,
        layer_params,
    })
}
