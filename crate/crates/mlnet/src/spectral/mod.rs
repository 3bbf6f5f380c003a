//! Spectral co-clustering of multi-layer directed networks.
//!
//! Sender communities are found from the debiased sum of outgoing Gram
//! matrices `sum_l (A_l A_l' - D_l_out)`, receiver communities from the
//! incoming counterpart `sum_l (A_l' A_l - D_l_in)`. Subtracting the degree
//! diagonals removes the self-product bias so the sum concentrates around
//! its population version. Both sides are embedded with the same number of
//! leading eigenvectors, `min(k_s0, k_r0)`, then clustered by k-means.

mod eigen;
mod kmeans;

pub use eigen::{
    top_eigenpairs, top_eigenpairs_dense, top_eigenpairs_lanczos, Embedding, DENSE_EIGEN_MAX,
};
pub use kmeans::{kmeans, KMeansParams, KMeansResult};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::{CommunityLabels, MultiLayerNetwork};
use crate::rng::derive_seed;

/// Which Gram matrix to aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Side {
    Sender,
    Receiver,
}

/// Estimated sender and receiver assignments for one candidate order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoClusterResult {
    pub sender: CommunityLabels,
    pub receiver: CommunityLabels,
}

/// Sum over layers of `A A'` (sender side) or `A' A` (receiver side) with
/// the diagonal zeroed.
///
/// For binary zero-diagonal layers, `diag(A A')` is exactly the out-degree
/// matrix (and `diag(A' A)` the in-degree matrix), so the debiasing term
/// reduces to clearing the diagonal of the accumulated sum. Every entry is
/// an exact small integer in `f64`, hence the result is exactly symmetric
/// with an exactly zero diagonal regardless of summation order.
pub fn debiased_gram_sum(net: &MultiLayerNetwork, side: Side) -> Array2<f64> {
    let n = net.n();
    let mut s = Array2::<f64>::zeros((n, n));
    for layer in net.layers() {
        let a = layer.mapv(f64::from);
        let prod = match side {
            Side::Sender => a.dot(&a.t()),
            Side::Receiver => a.t().dot(&a),
        };
        s += &prod;
    }
    for i in 0..n {
        s[[i, i]] = 0.0;
    }
    s
}

/// Full debiased spectral co-clustering under a candidate order
/// `(k_s0, k_r0)`: both Gram sums, `min(k_s0, k_r0)` leading eigenvectors
/// each, then k-means with `k_s0` / `k_r0` clusters on the embedding rows.
///
/// All k-means draws derive from `seed`, so the result is a deterministic
/// function of `(net, k_s0, k_r0, seed)`.
pub fn debiased_gram_cocluster(
    net: &MultiLayerNetwork,
    k_s0: usize,
    k_r0: usize,
    seed: u64,
) -> Result<CoClusterResult> {
    let d = validate_candidate(net, k_s0, k_r0)?;
    let emb_s = top_eigenpairs(&debiased_gram_sum(net, Side::Sender), d)?;
    let emb_r = top_eigenpairs(&debiased_gram_sum(net, Side::Receiver), d)?;
    cluster_embeddings(&emb_s, &emb_r, k_s0, k_r0, seed)
}

pub(crate) fn validate_candidate(
    net: &MultiLayerNetwork,
    k_s0: usize,
    k_r0: usize,
) -> Result<usize> {
    let n = net.n();
    if k_s0 == 0 || k_r0 == 0 || k_s0 > n || k_r0 > n {
        return Err(Error::DegenerateInput(format!(
            "candidate order ({k_s0}, {k_r0}) invalid for n = {n}"
        )));
    }
    Ok(k_s0.min(k_r0))
}

/// Clustering stage shared by [`debiased_gram_cocluster`] and the cached evaluator;
/// keeping it in one place guarantees the two paths draw identically.
pub(crate) fn cluster_embeddings(
    emb_s: &Embedding,
    emb_r: &Embedding,
    k_s0: usize,
    k_r0: usize,
    seed: u64,
) -> Result<CoClusterResult> {
    let sender_run = kmeans(
        &emb_s.matrix.view(),
        &KMeansParams::with_k(k_s0),
        derive_seed(seed, "kmeans", &[0]),
    )?;
    let receiver_run = kmeans(
        &emb_r.matrix.view(),
        &KMeansParams::with_k(k_r0),
        derive_seed(seed, "kmeans", &[1]),
    )?;
    Ok(CoClusterResult {
        sender: CommunityLabels::new(sender_run.labels, k_s0)?,
        receiver: CommunityLabels::new(receiver_run.labels, k_r0)?,
    })
}
