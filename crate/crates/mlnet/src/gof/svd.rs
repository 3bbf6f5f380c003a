//! Largest singular value of a dense real matrix.
//!
//! Dense SVD (nalgebra) up to [`DENSE_SVD_MAX`]; above that a Golub-Kahan
//! bidiagonalization with full reorthogonalization, which converges far
//! faster than plain power iteration when the top of the spectrum is
//! clustered (the typical shape of a standardized residual matrix). The
//! iterative route is validated against the dense one in tests and is
//! available at any size via [`largest_singular_value_iterative`].

use nalgebra::DMatrix;
use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::rng::rng_from;

/// Largest side length still sent to the dense route by default.
pub const DENSE_SVD_MAX: usize = 1024;

/// Relative tolerance on the iterative Ritz residual.
pub const ITERATIVE_SVD_TOL: f64 = 1e-10;

/// Cap on Golub-Kahan steps before reporting non-convergence.
pub const ITERATIVE_SVD_MAX_ITERS: usize = 1000;

const GK_START_SEED: u64 = 0x6d6c_6e65_745f_676b;

fn validate(m: &Array2<f64>) -> Result<(usize, usize)> {
    let (nr, nc) = (m.nrows(), m.ncols());
    if nr == 0 || nc == 0 {
        return Err(Error::DegenerateInput("singular values of an empty matrix".into()));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateInput("matrix has non-finite entries".into()));
    }
    Ok((nr, nc))
}

/// Dispatching entry point: dense up to [`DENSE_SVD_MAX`], iterative beyond.
pub fn largest_singular_value(m: &Array2<f64>) -> Result<f64> {
    let (nr, nc) = validate(m)?;
    if nr.max(nc) <= DENSE_SVD_MAX {
        largest_singular_value_dense(m)
    } else {
        largest_singular_value_iterative(m, ITERATIVE_SVD_TOL, ITERATIVE_SVD_MAX_ITERS)
    }
}

/// Dense route; also the oracle the iterative route is tested against.
pub fn largest_singular_value_dense(m: &Array2<f64>) -> Result<f64> {
    let (nr, nc) = validate(m)?;
    let dm = DMatrix::from_row_iterator(nr, nc, m.iter().copied());
    let sv = dm.singular_values();
    Ok(sv.iter().fold(0.0f64, |a, &b| a.max(b)))
}

/// Golub-Kahan-Lanczos with full reorthogonalization of both bases.
///
/// Stops when the top Ritz triplet's residual bound
/// `beta * |last component of its left small-vector|` drops below
/// `tol * sigma`. Exhausting `max_iters` steps (or the smaller matrix
/// dimension) without convergence is an error.
pub fn largest_singular_value_iterative(
    m: &Array2<f64>,
    tol: f64,
    max_iters: usize,
) -> Result<f64> {
    let (nr, nc) = validate(m)?;
    let scale = m.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if scale == 0.0 {
        return Ok(0.0);
    }
    let breakdown_tol = 1e-14 * scale * ((nr * nc) as f64).sqrt();
    let mt = m.t();
    let steps = max_iters.min(nr.min(nc));

    let mut rng = rng_from(GK_START_SEED, "gk-start", &[nr as u64, nc as u64]);
    let mut v = random_unit_vector(nc, &mut rng);
    let mut us: Vec<Array1<f64>> = Vec::new();
    let mut vs: Vec<Array1<f64>> = vec![v.clone()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut last_residual = f64::INFINITY;

    for step in 0..steps {
        let mut u = m.dot(&v);
        if step > 0 {
            u.scaled_add(-betas[step - 1], &us[step - 1]);
        }
        reorthogonalize(&mut u, &us);
        let alpha = u.dot(&u).sqrt();
        if alpha <= breakdown_tol {
            // The left subspace closed. The captured block is the
            // t x (t+1) bidiagonal including the trailing coupling beta_t
            // (M V_{t+1} = U_t [B_t | beta_t e_t]), so keep that column.
            if !alphas.is_empty() {
                return Ok(augmented_bidiagonal_top(&alphas, &betas));
            }
            return Ok(0.0);
        }
        u /= alpha;
        alphas.push(alpha);

        let mut w = mt.dot(&u);
        w.scaled_add(-alpha, &v);
        reorthogonalize(&mut w, &vs);
        let beta = w.dot(&w).sqrt();

        let t = alphas.len();
        let check = t <= 40 || t.is_multiple_of(5) || t == steps || beta <= breakdown_tol;
        if check {
            let (sigma, top_left_last) = bidiagonal_top(&alphas, &betas);
            last_residual = beta * top_left_last.abs();
            if last_residual <= tol * sigma.max(1e-300) {
                return Ok(sigma);
            }
        }

        us.push(u);
        if beta <= breakdown_tol {
            // Subspace closed without meeting the residual test (possible
            // only right at the start); restart from a fresh direction.
            let mut fresh = random_unit_vector(nc, &mut rng);
            reorthogonalize(&mut fresh, &vs);
            let norm = fresh.dot(&fresh).sqrt();
            if norm <= breakdown_tol {
                return Ok(bidiagonal_top(&alphas, &betas).0);
            }
            v = fresh / norm;
            betas.push(0.0);
        } else {
            v = w / beta;
            betas.push(beta);
        }
        vs.push(v.clone());
    }

    Err(Error::NoConvergence {
        routine: "golub-kahan singular value",
        iterations: alphas.len(),
        residual: last_residual,
        tolerance: tol,
    })
}

/// Largest singular value of the accumulated bidiagonal, plus the last
/// component of its top left singular vector (drives the residual bound).
fn bidiagonal_top(alphas: &[f64], betas: &[f64]) -> (f64, f64) {
    let t = alphas.len();
    let mut b = DMatrix::<f64>::zeros(t, t);
    for i in 0..t {
        b[(i, i)] = alphas[i];
        if i + 1 < t && i < betas.len() {
            b[(i, i + 1)] = betas[i];
        }
    }
    let svd = b.svd(true, false);
    let mut best = 0usize;
    let mut sigma = f64::NEG_INFINITY;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > sigma {
            sigma = s;
            best = k;
        }
    }
    let u = svd.u.expect("left vectors requested");
    (sigma, u[(t - 1, best)])
}

/// Top singular value of the t x (t+1) matrix [B_t | beta_t e_t]: the exact
/// restriction of M to the Krylov subspace when the left side closes.
fn augmented_bidiagonal_top(alphas: &[f64], betas: &[f64]) -> f64 {
    let t = alphas.len();
    debug_assert_eq!(betas.len(), t);
    let mut b = DMatrix::<f64>::zeros(t, t + 1);
    for i in 0..t {
        b[(i, i)] = alphas[i];
        b[(i, i + 1)] = betas[i];
    }
    b.singular_values().iter().fold(0.0f64, |a, &s| a.max(s))
}

fn reorthogonalize(w: &mut Array1<f64>, basis: &[Array1<f64>]) {
    for _ in 0..2 {
        for u in basis {
            let c = u.dot(w);
            w.scaled_add(-c, u);
        }
    }
}

fn random_unit_vector<R: rand::Rng>(n: usize, rng: &mut R) -> Array1<f64> {
    loop {
        let v = Array1::from_shape_fn(n, |_| rng.random::<f64>() - 0.5);
        let norm = v.dot(&v).sqrt();
        if norm > 1e-6 {
            return v / norm;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;

    fn random_matrix(nr: usize, nc: usize, seed: u64) -> Array2<f64> {
        let mut rng = rng_from(seed, "svd-test", &[]);
        Array2::from_shape_fn((nr, nc), |_| rng.random::<f64>() - 0.5)
    }

    #[test]
    fn diagonal_hand_case() {
        let m = array![[3.0, 0.0], [0.0, -1.0]];
        assert!((largest_singular_value_dense(&m).unwrap() - 3.0).abs() < 1e-14);
        let it = largest_singular_value_iterative(&m, 1e-12, 100).unwrap();
        assert!((it - 3.0).abs() < 1e-10);
    }

    #[test]
    fn iterative_matches_dense_on_random_matrices() {
        for seed in 0..8 {
            let m = random_matrix(50, 50, seed);
            let dense = largest_singular_value_dense(&m).unwrap();
            let iter = largest_singular_value_iterative(&m, 1e-10, 1000).unwrap();
            assert!(
                (dense - iter).abs() <= 1e-8 * dense,
                "seed {seed}: dense {dense} vs iterative {iter}"
            );
        }
    }

    #[test]
    fn rectangular_matrices_work() {
        let m = random_matrix(40, 70, 5);
        let dense = largest_singular_value_dense(&m).unwrap();
        let iter = largest_singular_value_iterative(&m, 1e-10, 1000).unwrap();
        assert!((dense - iter).abs() <= 1e-8 * dense);
    }

    #[test]
    fn rank_one_matrix_is_exact() {
        let u = array![1.0, 2.0, 2.0];
        let v = array![3.0, 0.0, 4.0];
        let mut m = Array2::<f64>::zeros((3, 3));
        for i in 0..3 {
            for j in 0..3 {
                m[[i, j]] = u[i] * v[j];
            }
        }
        // sigma1 = |u| * |v| = 3 * 5 = 15.
        assert!((largest_singular_value(&m).unwrap() - 15.0).abs() < 1e-12);
        let it = largest_singular_value_iterative(&m, 1e-10, 100).unwrap();
        assert!((it - 15.0).abs() < 1e-8);
    }

    #[test]
    fn zero_matrix_has_zero_sigma() {
        let m = Array2::<f64>::zeros((5, 7));
        assert_eq!(largest_singular_value_dense(&m).unwrap(), 0.0);
        assert_eq!(largest_singular_value_iterative(&m, 1e-10, 100).unwrap(), 0.0);
    }

    #[test]
    fn empty_and_non_finite_inputs_are_rejected() {
        assert!(largest_singular_value(&Array2::<f64>::zeros((0, 3))).is_err());
        let mut m = Array2::<f64>::zeros((2, 2));
        m[[0, 0]] = f64::NAN;
        assert!(largest_singular_value(&m).is_err());
    }
}
