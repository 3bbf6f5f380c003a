//! Top eigenpairs of symmetric matrices.
//!
//! Two routes with one contract:
//!
//! * dense full decomposition (nalgebra) for moderate sizes, and
//! * Lanczos with full reorthogonalization for large matrices, where only
//!   a handful of leading eigenvectors is ever needed.
//!
//! Eigenvalues are ordered by descending algebraic value (not magnitude);
//! ties break toward the earlier position. Each returned eigenvector has
//! its first nonzero component made positive so results are reproducible
//! across routes and reruns.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::rng_from;

/// Orthonormal spectral embedding: columns are eigenvectors, ordered to
/// match `eigenvalues` (descending algebraic order).
#[derive(Debug, Clone)]
pub struct Embedding {
    pub eigenvalues: Vec<f64>,
    /// `n x d`; rows are the node coordinates handed to k-means.
    pub matrix: Array2<f64>,
}

impl Embedding {
    /// Leading `d` eigenpairs as a new embedding. Slicing a dense full
    /// decomposition is bitwise identical to a direct dense call at `d`:
    /// the global ordering and the per-column sign rule do not depend on
    /// the columns dropped.
    pub fn truncated(&self, d: usize) -> Embedding {
        assert!(d >= 1 && d <= self.matrix.ncols(), "truncation width {d} out of range");
        Embedding {
            eigenvalues: self.eigenvalues[..d].to_vec(),
            matrix: self.matrix.slice(ndarray::s![.., ..d]).to_owned(),
        }
    }

    /// Largest absolute entry of `UᵀU - I`; zero for a perfectly
    /// orthonormal basis.
    pub fn orthonormality_defect(&self) -> f64 {
        let d = self.matrix.ncols();
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in a..d {
                let dot = self.matrix.column(a).dot(&self.matrix.column(b));
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// Dense decomposition is preferred up to this side length; beyond it only
/// the requested leading eigenpairs are computed iteratively.
pub const DENSE_EIGEN_MAX: usize = 2048;

const LANCZOS_TOL: f64 = 1e-10;
const LANCZOS_START_SEED: u64 = 0x6d6c_6e65_745f_6569;

fn validate_symmetric_input(s: &Array2<f64>, d: usize) -> Result<usize> {
    let n = s.nrows();
    if s.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "symmetric eigensolver",
            expected: format!("{n}x{n}"),
            actual: format!("{}x{}", s.nrows(), s.ncols()),
        });
    }
    if n == 0 || d == 0 || d > n {
        return Err(Error::DegenerateInput(format!(
            "need 1 <= d <= n, got d = {d}, n = {n}"
        )));
    }
    let mut scale = 0.0f64;
    for &x in s.iter() {
        if !x.is_finite() {
            return Err(Error::DegenerateInput("matrix has non-finite entries".into()));
        }
        scale = scale.max(x.abs());
    }
    let asym_tol = 1e-9 * scale.max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            if (s[[i, j]] - s[[j, i]]).abs() > asym_tol {
                return Err(Error::DegenerateInput(format!(
                    "matrix is not symmetric at ({i},{j})"
                )));
            }
        }
    }
    Ok(n)
}

/// Leading `d` eigenpairs of symmetric `s`, dispatching between the dense
/// and iterative routes.
pub fn top_eigenpairs(s: &Array2<f64>, d: usize) -> Result<Embedding> {
    let n = validate_symmetric_input(s, d)?;
    if n <= DENSE_EIGEN_MAX || 4 * d >= n {
        top_eigenpairs_dense(s, d)
    } else {
        top_eigenpairs_lanczos(s, d, LANCZOS_TOL)
    }
}

/// Dense route: full symmetric decomposition, then the leading `d` columns.
pub fn top_eigenpairs_dense(s: &Array2<f64>, d: usize) -> Result<Embedding> {
    let n = validate_symmetric_input(s, d)?;
    let m = DMatrix::from_row_iterator(n, n, s.iter().copied());
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite eigenvalues")
            .then(a.cmp(&b))
    });
    let mut matrix = Array2::<f64>::zeros((n, d));
    let mut eigenvalues = Vec::with_capacity(d);
    for (c, &k) in order.iter().take(d).enumerate() {
        eigenvalues.push(eig.eigenvalues[k]);
        for i in 0..n {
            matrix[[i, c]] = eig.eigenvectors[(i, k)];
        }
    }
    canonicalize_signs(&mut matrix);
    Ok(Embedding { eigenvalues, matrix })
}

/// Iterative route: Lanczos with full reorthogonalization against the whole
/// basis. Convergence requires every requested Ritz pair's residual bound
/// `beta * |last tridiagonal eigenvector component|` to fall below
/// `tol * max|theta|`.
pub fn top_eigenpairs_lanczos(s: &Array2<f64>, d: usize, tol: f64) -> Result<Embedding> {
    let n = validate_symmetric_input(s, d)?;
    let frob = s.iter().map(|x| x * x).sum::<f64>().sqrt();
    let breakdown_tol = 1e-14 * frob.max(1e-300);
    let max_basis = n.min((4 * d + 40).max(120));

    let mut rng = rng_from(LANCZOS_START_SEED, "lanczos-start", &[n as u64]);
    let mut v = random_unit_vector(n, &mut rng);
    let mut basis: Vec<Array1<f64>> = vec![v.clone()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut v_prev: Option<Array1<f64>> = None;
    let mut last_residual = f64::INFINITY;

    for step in 0..max_basis {
        let mut w = s.dot(&v);
        let alpha = v.dot(&w);
        w.scaled_add(-alpha, &v);
        if let Some(prev) = &v_prev {
            w.scaled_add(-betas[step - 1], prev);
        }
        // Full reorthogonalization, twice; once is not enough when the
        // spectrum is clustered.
        for _ in 0..2 {
            for u in &basis {
                let c = u.dot(&w);
                w.scaled_add(-c, u);
            }
        }
        alphas.push(alpha);
        let mut beta = w.dot(&w).sqrt();
        let broke_down = beta <= breakdown_tol;

        let dim = alphas.len();
        if dim >= d && (broke_down || dim == max_basis || dim.is_multiple_of(5)) {
            let (theta, ritz_small) = tridiagonal_eigen_desc(&alphas, &betas, d);
            let theta_scale = theta.iter().fold(0.0f64, |m, t| m.max(t.abs())).max(1e-300);
            last_residual = ritz_small
                .iter()
                .map(|w_col| beta * w_col[dim - 1].abs())
                .fold(0.0f64, f64::max);
            if last_residual <= tol * theta_scale || (broke_down && dim >= d) {
                let mut matrix = Array2::<f64>::zeros((n, d));
                for (c, w_col) in ritz_small.iter().enumerate() {
                    for (j, u) in basis.iter().enumerate() {
                        let coef = w_col[j];
                        for i in 0..n {
                            matrix[[i, c]] += coef * u[i];
                        }
                    }
                }
                canonicalize_signs(&mut matrix);
                return Ok(Embedding { eigenvalues: theta, matrix });
            }
        }

        if broke_down {
            // The Krylov space closed early; continue from a fresh direction
            // orthogonal to everything seen so far.
            let mut fresh = random_unit_vector(n, &mut rng);
            for _ in 0..2 {
                for u in &basis {
                    let c = u.dot(&fresh);
                    fresh.scaled_add(-c, u);
                }
            }
            let norm = fresh.dot(&fresh).sqrt();
            if norm <= breakdown_tol {
                break;
            }
            w = fresh / norm;
            beta = 0.0;
        } else {
            w /= beta;
        }
        betas.push(beta);
        v_prev = Some(v);
        v = w.clone();
        basis.push(w);
    }

    Err(Error::NoConvergence {
        routine: "lanczos eigensolver",
        iterations: alphas.len(),
        residual: last_residual,
        tolerance: tol,
    })
}

/// Eigen-decomposes the symmetric tridiagonal defined by `alphas`/`betas`
/// and returns the top `d` (value, vector) pairs, descending.
fn tridiagonal_eigen_desc(alphas: &[f64], betas: &[f64], d: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = alphas.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = t.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite eigenvalues")
            .then(a.cmp(&b))
    });
    let take = d.min(m);
    let mut values = Vec::with_capacity(take);
    let mut vectors = Vec::with_capacity(take);
    for &k in order.iter().take(take) {
        values.push(eig.eigenvalues[k]);
        vectors.push((0..m).map(|i| eig.eigenvectors[(i, k)]).collect());
    }
    (values, vectors)
}

fn random_unit_vector<R: Rng>(n: usize, rng: &mut R) -> Array1<f64> {
    loop {
        let v = Array1::from_shape_fn(n, |_| rng.random::<f64>() - 0.5);
        let norm = v.dot(&v).sqrt();
        if norm > 1e-6 {
            return v / norm;
        }
    }
}

/// Flips each column so its first nonzero component is positive.
pub(crate) fn canonicalize_signs(matrix: &mut Array2<f64>) {
    for mut col in matrix.columns_mut() {
        if let Some(&lead) = col.iter().find(|&&x| x != 0.0) {
            if lead < 0.0 {
                col.mapv_inplace(|x| -x);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn random_symmetric(n: usize, seed: u64) -> Array2<f64> {
        let mut rng = rng_from(seed, "test-sym", &[n as u64]);
        let a = Array2::from_shape_fn((n, n), |_| rng.random::<f64>() - 0.5);
        &a + &a.t()
    }

    #[test]
    fn two_by_two_hand_case() {
        // Eigenvalues of [[2,1],[1,2]] are 3 and 1, vectors (1,1)/sqrt2 and (1,-1)/sqrt2.
        let s = array![[2.0, 1.0], [1.0, 2.0]];
        let e = top_eigenpairs_dense(&s, 2).unwrap();
        assert!((e.eigenvalues[0] - 3.0).abs() < 1e-12);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-12);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.matrix[[0, 0]] - r).abs() < 1e-12);
        assert!((e.matrix[[1, 0]] - r).abs() < 1e-12);
        // Sign rule: first component positive.
        assert!((e.matrix[[0, 1]] - r).abs() < 1e-12);
        assert!((e.matrix[[1, 1]] + r).abs() < 1e-12);
    }

    #[test]
    fn ordering_is_algebraic_not_magnitude() {
        let s = array![[-5.0, 0.0], [0.0, 1.0]];
        let e = top_eigenpairs_dense(&s, 1).unwrap();
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn truncated_full_decomposition_equals_direct_call() {
        let s = random_symmetric(40, 3);
        let full = top_eigenpairs_dense(&s, 40).unwrap();
        for d in [1, 2, 5, 40] {
            let direct = top_eigenpairs_dense(&s, d).unwrap();
            let sliced = full.truncated(d);
            assert_eq!(direct.eigenvalues, sliced.eigenvalues, "d = {d}");
            assert_eq!(direct.matrix, sliced.matrix, "d = {d}");
        }
    }

    #[test]
    fn lanczos_matches_dense_on_random_matrices() {
        for seed in 0..5 {
            let s = random_symmetric(120, 100 + seed);
            let dense = top_eigenpairs_dense(&s, 4).unwrap();
            let lz = top_eigenpairs_lanczos(&s, 4, 1e-10).unwrap();
            assert!(lz.orthonormality_defect() < 1e-8);
            for k in 0..4 {
                let rel = (dense.eigenvalues[k] - lz.eigenvalues[k]).abs()
                    / dense.eigenvalues[k].abs().max(1.0);
                assert!(rel < 1e-8, "seed {seed} pair {k}");
                let align = dense.matrix.column(k).dot(&lz.matrix.column(k)).abs();
                assert!(align > 1.0 - 1e-6, "seed {seed} vector {k}: align {align}");
            }
        }
    }

    #[test]
    fn lanczos_handles_low_rank_gram_like_input() {
        // Rank-3 plus small noise, the shape the co-clustering pipeline feeds in.
        let n = 150;
        let mut rng = rng_from(9, "lowrank", &[]);
        let f = Array2::from_shape_fn((n, 3), |_| rng.random::<f64>() - 0.5);
        let noise = random_symmetric(n, 77) * 1e-3;
        let s = f.dot(&f.t()) * 10.0 + noise;
        let dense = top_eigenpairs_dense(&s, 3).unwrap();
        let lz = top_eigenpairs_lanczos(&s, 3, 1e-10).unwrap();
        for k in 0..3 {
            assert!((dense.eigenvalues[k] - lz.eigenvalues[k]).abs() < 1e-8 * dense.eigenvalues[0]);
        }
    }

    #[test]
    fn zero_matrix_yields_zero_eigenvalues_and_orthonormal_basis() {
        let s = Array2::<f64>::zeros((6, 6));
        for e in [top_eigenpairs_dense(&s, 2).unwrap(), top_eigenpairs_lanczos(&s, 2, 1e-10).unwrap()] {
            assert!(e.eigenvalues.iter().all(|&v| v.abs() < 1e-12));
            assert!(e.orthonormality_defect() < 1e-8);
        }
    }

    #[test]
    fn full_basis_is_orthonormal() {
        let s = random_symmetric(40, 3);
        let e = top_eigenpairs(&s, 40).unwrap();
        assert!(e.orthonormality_defect() < 1e-8);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let s = random_symmetric(10, 1);
        assert!(top_eigenpairs(&s, 0).is_err());
        assert!(top_eigenpairs(&s, 11).is_err());
        let mut asym = s.clone();
        asym[[0, 1]] += 1.0;
        assert!(top_eigenpairs(&asym, 2).is_err());
    }
}
