//! Brute-force oracles shared by the integration suites. Each one
//! re-implements a definition directly from its formula, without reusing
//! the library's computation path.

#![allow(dead_code)]

use ndarray::Array2;
use rand::Rng;

use mlnet::model::{CommunityLabels, MultiLayerNetwork};
use mlnet::rng::rng_from;
use mlnet::spectral::Side;

/// Triple-loop aggregated debiased Gram sum.
///
/// Sender: `S(i, j) = sum_l sum_m A_l(i, m) A_l(j, m)` for `i != j`,
/// receiver: `sum_l sum_m A_l(m, i) A_l(m, j)`; the diagonal (the degree
/// bias) is removed entirely. All terms are small integers, so the result
/// is exact in f64 no matter the summation order.
pub fn gram_sum_bruteforce(net: &MultiLayerNetwork, side: Side) -> Array2<f64> {
    let n = net.n();
    let mut s = Array2::<f64>::zeros((n, n));
    for a in net.layers() {
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let mut acc = 0.0;
                for m in 0..n {
                    let (x, y) = match side {
                        Side::Sender => (a[[i, m]], a[[j, m]]),
                        Side::Receiver => (a[[m, i]], a[[m, j]]),
                    };
                    acc += f64::from(x) * f64::from(y);
                }
                s[[i, j]] += acc;
            }
        }
    }
    s
}

/// Quadruple-loop block probability estimates: for each layer and block
/// `(k, l)`, the mean of the layer over every ordered node pair `(i, j)`
/// with sender community `k` and receiver community `l`, including the
/// structurally zero same-node pairs. Empty blocks estimate 0.
pub fn block_estimates_bruteforce(
    net: &MultiLayerNetwork,
    sender: &CommunityLabels,
    receiver: &CommunityLabels,
) -> Vec<Array2<f64>> {
    let n = net.n();
    let (k_s, k_r) = (sender.k(), receiver.k());
    let gs = sender.as_slice();
    let gr = receiver.as_slice();
    net.layers()
        .iter()
        .map(|a| {
            let mut b = Array2::<f64>::zeros((k_s, k_r));
            for k in 0..k_s {
                for l in 0..k_r {
                    let mut num = 0.0;
                    let mut denom = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            if gs[i] == k && gr[j] == l {
                                denom += 1.0;
                                num += f64::from(a[[i, j]]);
                            }
                        }
                    }
                    if denom > 0.0 {
                        b[[k, l]] = num / denom;
                    }
                }
            }
            b
        })
        .collect()
}

/// A directed multi-layer network with i.i.d. Bernoulli(p) off-diagonal
/// entries, for oracle comparisons on arbitrary unstructured inputs.
pub fn random_network(n: usize, layers: usize, p: f64, seed: u64) -> MultiLayerNetwork {
    let mut rng = rng_from(seed, "test-net", &[n as u64, layers as u64]);
    let mats = (0..layers)
        .map(|_| {
            let mut a = Array2::<u8>::zeros((n, n));
            for i in 0..n {
                for j in 0..n {
                    if i != j && rng.random::<f64>() < p {
                        a[[i, j]] = 1;
                    }
                }
            }
            a
        })
        .collect();
    MultiLayerNetwork::new(mats).unwrap()
}

/// Uniformly random labels covering `0..k` (every community hit at least
/// once, so estimators face no empty rows), for brute-force comparisons.
pub fn random_labels(n: usize, k: usize, seed: u64) -> CommunityLabels {
    assert!(k <= n);
    let mut rng = rng_from(seed, "test-labels", &[n as u64, k as u64]);
    loop {
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let mut seen = vec![false; k];
        for &g in &labels {
            seen[g] = true;
        }
        if seen.iter().all(|&s| s) {
            return CommunityLabels::new(labels, k).unwrap();
        }
    }
}
