//! FastICA with symmetric decorrelation and the log-cosh contrast.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::scalar::{c, Scalar};

/// FastICA settings.
#[derive(Debug, Clone, Copy)]
pub struct FastIcaConfig<T> {
    pub n_components: usize,
    pub max_iters: usize,
    pub tol: T,
    pub seed: u64,
}

impl<T: Scalar> FastIcaConfig<T> {
    pub fn new(n_components: usize, seed: u64) -> Self {
        FastIcaConfig { n_components, max_iters: 200, tol: c(1e-4), seed }
    }
}

/// Projected latents plus convergence diagnostics.
#[derive(Debug, Clone)]
pub struct FastIcaOutput<T> {
    /// N×n_components recovered latents
    pub latents: Mat<T>,
    pub converged: bool,
    pub iterations: usize,
}

/// Centers the input, whitens through the covariance eigendecomposition
/// (keeping the top `n_components` directions), and runs the symmetric
/// fixed-point iteration with G'(u) = tanh(u). Non-convergence returns the
/// best iterate with `converged = false`.
pub fn fastica_fit<T: Scalar>(xs: &Mat<T>, cfg: &FastIcaConfig<T>) -> Result<FastIcaOutput<T>> {
    let n_samples = xs.rows();
    let m = xs.cols();
    let n = cfg.n_components;
    if n == 0 || n > m {
        return Err(Error::Param(format!(
            "n_components = {} must lie in 1..=input dimension {}",
            n, m
        )));
    }
    if n_samples <= m {
        return Err(Error::SampleSize(format!(
            "need more samples than input dimensions ({} ≤ {})",
            n_samples, m
        )));
    }
    // center
    let nt = c::<T>(n_samples as f64);
    let means: Vec<T> = (0..m).map(|j| (0..n_samples).map(|i| xs[(i, j)]).sum::<T>() / nt).collect();
    let centered = Mat::from_fn(n_samples, m, |i, j| xs[(i, j)] - means[j]);
    // covariance eigendecomposition
    let denom = c::<T>((n_samples - 1) as f64);
    let mut cov = Mat::zeros(m, m);
    for i in 0..n_samples {
        let row = centered.row(i);
        for a in 0..m {
            for b in a..m {
                cov[(a, b)] = cov[(a, b)] + row[a] * row[b];
            }
        }
    }
    for a in 0..m {
        for b in a..m {
            let v: T = cov[(a, b)] / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    let (evals, evecs) = linalg::sym_eigen(&cov)?;
    // ascending order: the top n_components live at the tail
    let lam_max = evals[m - 1];
    let floor = c::<T>(1e-12) * lam_max.max(T::one());
    for k in 0..n {
        let lam = evals[m - 1 - k];
        if lam <= floor {
            return Err(Error::Rank(format!(
                "covariance has fewer than {} positive directions",
                n
            )));
        }
    }
    // whitening matrix K: n×m, rows λ^{-1/2} eᵀ
    let whiten = Mat::from_fn(n, m, |k, j| {
        let idx = m - 1 - k;
        evecs[(j, idx)] / evals[idx].sqrt()
    });
    let white = centered.matmul(&whiten.transpose()); // N×n, unit covariance

    // symmetric fixed-point iteration
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let init = Mat::from_fn(n, n, |_, _| c::<T>(rng.sample::<f64, _>(rand_distr::StandardNormal)));
    let mut w = symmetric_decorrelate(&init)?;
    let mut converged = false;
    let mut iterations = 0;
    for iter in 0..cfg.max_iters {
        iterations = iter + 1;
        // U = X_white Wᵀ (component i in column i)
        let u = white.matmul(&w.transpose());
        // W₁[i] = E[x·tanh(u_i)] − E[1 − tanh²(u_i)]·W[i]
        let mut w_new = Mat::zeros(n, n);
        for i in 0..n {
            let mut gsum = vec![T::zero(); n];
            let mut gprime_sum = T::zero();
            for row in 0..n_samples {
                let t = u[(row, i)].tanh();
                gprime_sum = gprime_sum + (T::one() - t * t);
                let xrow = white.row(row);
                for j in 0..n {
                    gsum[j] = gsum[j] + xrow[j] * t;
                }
            }
            let gprime_mean = gprime_sum / nt;
            for j in 0..n {
                w_new[(i, j)] = gsum[j] / nt - gprime_mean * w[(i, j)];
            }
        }
        let w_next = symmetric_decorrelate(&w_new)?;
        // max |1 − |diag(W_new W_oldᵀ)||
        let overlap = w_next.matmul(&w.transpose());
        let mut crit = T::zero();
        for i in 0..n {
            let d = (T::one() - overlap[(i, i)].abs()).abs();
            if d > crit {
                crit = d;
            }
        }
        w = w_next;
        if crit < cfg.tol {
            converged = true;
            break;
        }
    }
    let latents = white.matmul(&w.transpose());
    Ok(FastIcaOutput { latents, converged, iterations })
}

/// W ← (W Wᵀ)^{-1/2} W.
fn symmetric_decorrelate<T: Scalar>(w: &Mat<T>) -> Result<Mat<T>> {
    let wwt = w.matmul(&w.transpose());
    let inv_sqrt = linalg::spd_inv_sqrt(&wwt)
        .map_err(|_| Error::Rank("unmixing matrix lost rank during decorrelation".into()))?;
    Ok(inv_sqrt.matmul(w))
}
