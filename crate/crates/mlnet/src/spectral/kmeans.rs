//! Seeded k-means on embedding rows.
//!
//! Lloyd iterations with k-means++ initialization, a fixed number of
//! restarts, and deterministic tie-breaking:
//!
//! * nearest-centroid ties assign to the lowest centroid index;
//! * equal restart objectives keep the earliest restart;
//! * an emptied cluster is re-seeded at the point currently farthest from
//!   its assigned centroid (preferring donors that keep their own cluster
//!   non-empty).
//!
//! Every draw comes from sub-streams of the caller's seed, so the whole
//! procedure is a pure function of (points, params, seed).

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::rng_from;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansParams {
    pub k: usize,
    pub restarts: usize,
    pub max_iters: usize,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self { k: 1, restarts: 10, max_iters: 100 }
    }
}

impl KMeansParams {
    pub fn with_k(k: usize) -> Self {
        Self { k, ..Self::default() }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    /// Cluster index in `0..k` per point.
    pub labels: Vec<usize>,
    /// `k x d` centroid matrix of the winning restart.
    pub centroids: Array2<f64>,
    /// Within-cluster sum of squared distances.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Runs all restarts and returns the one with the smallest objective.
pub fn kmeans(points: &ArrayView2<f64>, params: &KMeansParams, seed: u64) -> Result<KMeansResult> {
    let n = points.nrows();
    if n == 0 || points.ncols() == 0 {
        return Err(Error::DegenerateInput("k-means needs a non-empty point matrix".into()));
    }
    if params.k == 0 || params.k > n {
        return Err(Error::DegenerateInput(format!(
            "k-means needs 1 <= k <= n, got k = {}, n = {n}",
            params.k
        )));
    }
    if points.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateInput("k-means points must be finite".into()));
    }
    if params.restarts == 0 || params.max_iters == 0 {
        return Err(Error::DegenerateInput("k-means needs restarts >= 1 and max_iters >= 1".into()));
    }

    let mut best: Option<KMeansResult> = None;
    for r in 0..params.restarts {
        let mut rng = rng_from(seed, "kmeans-restart", &[r as u64]);
        let run = lloyd_once(points, params, &mut rng);
        let better = match &best {
            None => true,
            Some(b) => run.objective < b.objective,
        };
        if better {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn lloyd_once<R: Rng>(points: &ArrayView2<f64>, params: &KMeansParams, rng: &mut R) -> KMeansResult {
    let (n, d) = (points.nrows(), points.ncols());
    let k = params.k;
    let mut centroids = plus_plus_init(points, k, rng);
    let mut labels = vec![0usize; n];
    let mut prev_objective = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    for _ in 0..params.max_iters {
        iterations += 1;
        let mut changed = false;
        let mut objective = 0.0;
        for (label, row) in labels.iter_mut().zip(points.rows()) {
            let (c, dist) = nearest_centroid(&row, &centroids);
            if *label != c {
                *label = c;
                changed = true;
            }
            objective += dist;
        }

        let mut sizes = vec![0usize; k];
        for &c in &labels {
            sizes[c] += 1;
        }
        let repaired = repair_empty_clusters(points, &mut centroids, &mut labels, &mut sizes);
        if repaired {
            // Re-seeding puts a point at distance zero from its new
            // centroid; recompute the objective it changed.
            objective = 0.0;
            for (row, &label) in points.rows().into_iter().zip(&labels) {
                objective += squared_distance(&row, &centroids.row(label));
            }
            changed = true;
        }

        // Lloyd steps never increase the objective; a violation means the
        // update logic is broken, so fail loudly.
        assert!(
            objective <= prev_objective * (1.0 + 1e-9) + 1e-12,
            "k-means objective increased: {prev_objective} -> {objective}"
        );
        prev_objective = objective;

        if !changed {
            converged = true;
            break;
        }

        let mut sums = Array2::<f64>::zeros((k, d));
        for i in 0..n {
            for j in 0..d {
                sums[[labels[i], j]] += points[[i, j]];
            }
        }
        for c in 0..k {
            if sizes[c] > 0 {
                for j in 0..d {
                    centroids[[c, j]] = sums[[c, j]] / sizes[c] as f64;
                }
            }
        }
    }

    KMeansResult { labels, centroids, objective: prev_objective, iterations, converged }
}

/// k-means++: first centroid uniform, then each next centroid drawn with
/// probability proportional to the squared distance to the nearest chosen
/// one. When every remaining point coincides with a chosen centroid the
/// lowest unchosen index is taken.
fn plus_plus_init<R: Rng>(points: &ArrayView2<f64>, k: usize, rng: &mut R) -> Array2<f64> {
    let (n, d) = (points.nrows(), points.ncols());
    let mut centroids = Array2::<f64>::zeros((k, d));
    let mut chosen = vec![false; n];

    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&points.row(first));
    chosen[first] = true;

    let mut dist2: Vec<f64> = (0..n)
        .map(|i| squared_distance(&points.row(i), &centroids.row(0)))
        .collect();

    for c in 1..k {
        let total: f64 = dist2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &w) in dist2.iter().enumerate() {
                acc += w;
                if acc > target {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            (0..n).find(|&i| !chosen[i]).unwrap_or(0)
        };
        centroids.row_mut(c).assign(&points.row(pick));
        chosen[pick] = true;
        for (slot, row) in dist2.iter_mut().zip(points.rows()) {
            let dd = squared_distance(&row, &centroids.row(c));
            if dd < *slot {
                *slot = dd;
            }
        }
    }
    centroids
}

fn nearest_centroid(point: &ArrayView1<f64>, centroids: &Array2<f64>) -> (usize, f64) {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (c, row) in centroids.rows().into_iter().enumerate() {
        let dd = squared_distance(point, &row);
        if dd < best_d {
            best_d = dd;
            best = c;
        }
    }
    (best, best_d)
}

/// Moves each empty cluster's centroid onto the farthest point (from its
/// currently assigned centroid) and reassigns that point. Returns whether
/// anything changed.
fn repair_empty_clusters(
    points: &ArrayView2<f64>,
    centroids: &mut Array2<f64>,
    labels: &mut [usize],
    sizes: &mut [usize],
) -> bool {
    let k = sizes.len();
    let mut repaired = false;
    for c in 0..k {
        if sizes[c] > 0 {
            continue;
        }
        let mut pick: Option<(usize, f64)> = None;
        for i in 0..points.nrows() {
            if sizes[labels[i]] < 2 {
                continue; // keep donor clusters non-empty
            }
            let dd = squared_distance(&points.row(i), &centroids.row(labels[i]));
            if pick.is_none_or(|(_, best)| dd > best) {
                pick = Some((i, dd));
            }
        }
        if let Some((i, _)) = pick {
            centroids.row_mut(c).assign(&points.row(i));
            sizes[labels[i]] -= 1;
            labels[i] = c;
            sizes[c] += 1;
            repaired = true;
        }
    }
    repaired
}

fn squared_distance(a: &ArrayView1<f64>, b: &ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}
