//! Source-recovery metrics: mean correlation coefficient via linear
//! assignment on absolute Pearson correlations, and total correlation via the
//! Kraskov k-nearest-neighbor estimator (algorithm 1, max-norm joint space).

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::{c, Scalar};
use crate::stream::derive_rng;

/// MCC result: the scalar plus the matched permutation, signs, and the raw
/// absolute-correlation inputs.
#[derive(Debug, Clone)]
pub struct MccReport<T> {
    pub mcc: T,
    /// permutation[i] = index of the true column matched to recovered column i
    pub permutation: Vec<usize>,
    /// sign of the matched correlation per recovered column
    pub signs: Vec<i8>,
    /// corr_matrix[(i, j)] = Pearson corr(recovered_i, true_j)
    pub corr_matrix: Mat<T>,
}

/// Total-correlation estimate in nats.
#[derive(Debug, Clone, Copy)]
pub struct TcReport<T> {
    pub tc_nats: T,
    pub k: usize,
    pub n_samples: usize,
    /// true when duplicate joint points forced the jitter fallback
    pub jittered: bool,
}

fn column_mean_std<T: Scalar>(m: &Mat<T>, col: usize) -> (T, T) {
    let n = m.rows();
    let nt = c::<T>(n as f64);
    let mean = (0..n).map(|i| m[(i, col)]).sum::<T>() / nt;
    let var = (0..n).map(|i| (m[(i, col)] - mean) * (m[(i, col)] - mean)).sum::<T>() / nt;
    (mean, var.sqrt())
}

/// Mean correlation coefficient between recovered and true sources.
///
/// Builds the |Pearson| matrix, solves max-weight perfect matching by the
/// Hungarian algorithm on cost 1 − |corr|, and averages the matched entries.
/// Zero-variance columns correlate to 0 against everything.
pub fn mcc<T: Scalar>(s_true: &Mat<T>, s_hat: &Mat<T>) -> Result<MccReport<T>> {
    let n_samples = s_true.rows();
    let n = s_true.cols();
    if s_hat.rows() != n_samples || s_hat.cols() != n {
        return Err(Error::Param("source matrices must have matching shapes".into()));
    }
    if n_samples < 3 {
        return Err(Error::SampleSize(format!("need at least 3 samples, got {}", n_samples)));
    }
    let nt = c::<T>(n_samples as f64);
    let hat_stats: Vec<(T, T)> = (0..n).map(|j| column_mean_std(s_hat, j)).collect();
    let true_stats: Vec<(T, T)> = (0..n).map(|j| column_mean_std(s_true, j)).collect();
    let mut corr = Mat::zeros(n, n);
    for i in 0..n {
        let (mi, si) = hat_stats[i];
        for j in 0..n {
            let (mj, sj) = true_stats[j];
            if si == T::zero() || sj == T::zero() {
                continue; // leave correlation at 0
            }
            let mut cov = T::zero();
            for row in 0..n_samples {
                cov = cov + (s_hat[(row, i)] - mi) * (s_true[(row, j)] - mj);
            }
            corr[(i, j)] = cov / (nt * si * sj);
        }
    }
    // Hungarian on cost = 1 − |corr|
    let cost = Mat::from_fn(n, n, |i, j| T::one() - corr[(i, j)].abs());
    let permutation = hungarian_min_cost(&cost);
    let mut total = T::zero();
    let mut signs = Vec::with_capacity(n);
    for (i, &j) in permutation.iter().enumerate() {
        total = total + corr[(i, j)].abs();
        signs.push(if corr[(i, j)] >= T::zero() { 1 } else { -1 });
    }
    Ok(MccReport { mcc: total / c(n as f64), permutation, signs, corr_matrix: corr })
}

/// Hungarian algorithm (shortest augmenting paths with potentials) for the
/// square min-cost assignment problem; deterministic, ties resolved by the
/// lowest row index. Returns `assign[row] = column`.
pub fn hungarian_min_cost<T: Scalar>(cost: &Mat<T>) -> Vec<usize> {
    let n = cost.rows();
    assert_eq!(n, cost.cols());
    let inf = T::infinity();
    // potentials and matching over 1-based internal arrays
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut way = vec![0usize; n + 1];
    let mut matched = vec![0usize; n + 1]; // matched[col] = row
    for i in 1..=n {
        matched[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched[j]] = u[matched[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
                }
            }
            j0 = j1;
            if matched[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched[j0] = matched[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        if matched[j] > 0 {
            assign[matched[j] - 1] = j - 1;
        }
    }
    assign
}

/// Digamma function, accurate to ~1e-10: upward recurrence to x ≥ 10 plus
/// the asymptotic Bernoulli series.
pub fn digamma(x: f64) -> Result<f64> {
    if x <= 0.0 || !x.is_finite() {
        return Err(Error::Param(format!("digamma requires x > 0, got {}", x)));
    }
    let mut value = 0.0;
    let mut y = x;
    while y < 10.0 {
        value -= 1.0 / y;
        y += 1.0;
    }
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    // ψ(y) ≈ ln y − 1/(2y) − Σ B_{2k}/(2k y^{2k})
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
    Ok(value + y.ln() - 0.5 * inv - series)
}

/// Kraskov-style total correlation (algorithm 1) at k neighbors:
///
/// TC = ψ(k) + (n−1)ψ(N) − ⟨Σ_i ψ(m_i + 1)⟩
///
/// with the k-th neighbor distance in the max-norm joint space and m_i the
/// strictly-within-ε marginal neighbor counts. Duplicate joint points fall
/// back to a deterministic uniform jitter at 1e-10 scale.
pub fn total_correlation<T: Scalar>(s_hat: &Mat<T>, k: usize) -> Result<TcReport<T>> {
    if k < 1 {
        return Err(Error::Param("neighbor count k must be at least 1".into()));
    }
    let n_samples = s_hat.rows();
    if n_samples <= k + 1 {
        return Err(Error::SampleSize(format!(
            "need more than k+1 = {} samples, got {}",
            k + 1,
            n_samples
        )));
    }
    // work in f64 regardless of the storage scalar
    let dim = s_hat.cols();
    let data: Vec<Vec<f64>> = (0..n_samples)
        .map(|i| s_hat.row(i).iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect())
        .collect();
    if data.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Eval("total correlation requires finite inputs".into()));
    }
    match tc_pass(&data, k, n_samples, dim)? {
        Some(tc) => Ok(TcReport { tc_nats: c(tc), k, n_samples, jittered: false }),
        None => {
            // duplicate joint points: jitter deterministically and retry
            let mut rng = derive_rng(0x7c_5eed, &["tc-jitter"]);
            let jittered: Vec<Vec<f64>> = data
                .iter()
                .map(|row| row.iter().map(|v| v + (rng.gen::<f64>() - 0.5) * 1e-10).collect())
                .collect();
            let tc = tc_pass(&jittered, k, n_samples, dim)?
                .ok_or_else(|| Error::Eval("duplicate points persisted after jitter".into()))?;
            Ok(TcReport { tc_nats: c(tc), k, n_samples, jittered: true })
        }
    }
}

/// One estimator pass; `None` signals a zero k-th neighbor distance.
fn tc_pass(data: &[Vec<f64>], k: usize, n_samples: usize, dim: usize) -> Result<Option<f64>> {
    // ε_i = max-norm distance to the k-th nearest neighbor
    let eps: Vec<f64> = data
        .par_iter()
        .enumerate()
        .map(|(i, xi)| {
            let mut best = vec![f64::INFINITY; k];
            for (j, xj) in data.iter().enumerate() {
                if j == i {
                    continue;
                }
                let mut d = 0.0f64;
                for (a, b) in xi.iter().zip(xj) {
                    let dd = (a - b).abs();
                    if dd > d {
                        d = dd;
                    }
                }
                // keep the k smallest distances
                if d < best[k - 1] {
                    let mut pos = k - 1;
                    while pos > 0 && best[pos - 1] > d {
                        best[pos] = best[pos - 1];
                        pos -= 1;
                    }
                    best[pos] = d;
                }
            }
            best[k - 1]
        })
        .collect();
    if eps.contains(&0.0) {
        return Ok(None);
    }
    // sorted marginals for counting |x_j − x_i| < ε_i per coordinate
    let mut sorted_cols: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for col in 0..dim {
        let mut v: Vec<f64> = data.iter().map(|row| row[col]).collect();
        v.sort_by(|a, b| a.partial_cmp(b).expect("finite marginals"));
        sorted_cols.push(v);
    }
    let psi_terms: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for (col, sorted) in sorted_cols.iter().enumerate() {
                let lo = data[i][col] - eps[i];
                let hi = data[i][col] + eps[i];
                // strict inequality: points with |x − x_i| < ε_i
                let start = sorted.partition_point(|&v| v <= lo);
                let end = sorted.partition_point(|&v| v < hi);
                let m_i = (end - start).saturating_sub(1); // exclude the point itself
                acc += digamma((m_i + 1) as f64).expect("positive digamma argument");
            }
            acc
        })
        .collect();
    let mean_psi = psi_terms.iter().sum::<f64>() / n_samples as f64;
    let tc = digamma(k as f64)? + (dim as f64 - 1.0) * digamma(n_samples as f64)? - mean_psi;
    Ok(Some(tc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::derive_rng;
    use rand::Rng;

    fn gauss(rng: &mut impl Rng) -> f64 {
        rng.sample::<f64, _>(rand_distr::StandardNormal)
    }

    #[test]
    fn digamma_reference_identities() {
        let gamma = 0.5772156649015329;
        assert!((digamma(1.0).unwrap() + gamma).abs() < 1e-10);
        assert!((digamma(2.0).unwrap() - (1.0 - gamma)).abs() < 1e-10);
        assert!((digamma(0.5).unwrap() - (-gamma - 2.0 * 2.0f64.ln())).abs() < 1e-10);
        assert!((digamma(0.5).unwrap() + 1.9635100260214235).abs() < 1e-10);
        // recurrence ψ(x+1) = ψ(x) + 1/x at an awkward point
        let x = 3.7;
        assert!((digamma(x + 1.0).unwrap() - digamma(x).unwrap() - 1.0 / x).abs() < 1e-12);
        assert!(digamma(0.0).is_err());
        assert!(digamma(-1.0).is_err());
    }

    #[test]
    fn hungarian_matches_brute_force() {
        // exhaustive permutation oracle on small instances
        fn brute(cost: &Mat<f64>) -> f64 {
            let n = cost.rows();
            let mut perm: Vec<usize> = (0..n).collect();
            let mut best = f64::INFINITY;
            loop {
                let total: f64 = perm.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
                best = best.min(total);
                // next permutation
                let mut i = n as isize - 2;
                while i >= 0 && perm[i as usize] >= perm[i as usize + 1] {
                    i -= 1;
                }
                if i < 0 {
                    break;
                }
                let mut j = n - 1;
                while perm[j] <= perm[i as usize] {
                    j -= 1;
                }
                perm.swap(i as usize, j);
                perm[i as usize + 1..].reverse();
            }
            best
        }
        let mut rng = derive_rng(77, &["hungarian"]);
        for n in 2..=6 {
            for _ in 0..20 {
                let cost = Mat::from_fn(n, n, |_, _| rng.gen::<f64>());
                let assign = hungarian_min_cost(&cost);
                // valid permutation
                let mut seen = vec![false; n];
                for &j in &assign {
                    assert!(!seen[j]);
                    seen[j] = true;
                }
                let total: f64 = assign.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
                let best = brute(&cost);
                assert!((total - best).abs() < 1e-12, "n={} got {} best {}", n, total, best);
            }
        }
    }

    #[test]
    fn mcc_signed_permutation_is_one() {
        let mut rng = derive_rng(42, &["mcc-perm"]);
        let n = 5;
        let rows = 200;
        let s = Mat::from_fn(rows, n, |_, _| gauss(&mut rng));
        // permute columns (2,0,4,1,3), flip some signs, rescale, shift
        let perm = [2usize, 0, 4, 1, 3];
        let signs = [1.0, -1.0, 1.0, -1.0, -1.0];
        let hat = Mat::from_fn(rows, n, |i, j| s[(i, perm[j])] * signs[j] * 2.0 + 5.0);
        let rep = mcc(&s, &hat).unwrap();
        assert!((rep.mcc - 1.0).abs() < 1e-12);
        for (j, &p) in perm.iter().enumerate() {
            assert_eq!(rep.permutation[j], p);
            assert_eq!(rep.signs[j] as f64, signs[j]);
        }
    }

    #[test]
    fn mcc_affine_invariance_exact() {
        let mut rng = derive_rng(43, &["mcc-affine"]);
        let s = Mat::from_fn(300, 3, |_, _| gauss(&mut rng));
        let rep1 = mcc(&s, &s).unwrap();
        let hat = Mat::from_fn(300, 3, |i, j| 2.0 * s[(i, j)] + 5.0);
        let rep2 = mcc(&s, &hat).unwrap();
        assert!((rep1.mcc - 1.0).abs() < 1e-12);
        assert!((rep2.mcc - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mcc_relabeling_true_columns_keeps_scalar() {
        let mut rng = derive_rng(44, &["mcc-relabel"]);
        let s = Mat::from_fn(250, 4, |_, _| gauss(&mut rng));
        let hat = Mat::from_fn(250, 4, |i, j| s[(i, j)] + 0.3 * gauss(&mut rng));
        let rep1 = mcc(&s, &hat).unwrap();
        let perm = [3usize, 1, 0, 2];
        let s2 = Mat::from_fn(250, 4, |i, j| s[(i, perm[j])]);
        let rep2 = mcc(&s2, &hat).unwrap();
        assert!((rep1.mcc - rep2.mcc).abs() < 1e-12);
    }

    #[test]
    fn mcc_independent_noise_is_small() {
        let mut rng = derive_rng(45, &["mcc-null"]);
        let n = 8;
        let rows = 10_000;
        let s = Mat::from_fn(rows, n, |_, _| gauss(&mut rng));
        let hat = Mat::from_fn(rows, n, |_, _| gauss(&mut rng));
        let rep = mcc(&s, &hat).unwrap();
        // null matched correlations concentrate near √(2 log n / N)
        assert!(rep.mcc < 0.05, "null MCC {}", rep.mcc);
    }

    #[test]
    fn mcc_zero_variance_column() {
        let mut rng = derive_rng(46, &["mcc-zerovar"]);
        let s = Mat::from_fn(100, 2, |_, _| gauss(&mut rng));
        let hat = Mat::from_fn(100, 2, |i, j| if j == 0 { 3.25 } else { s[(i, 1)] });
        let rep = mcc(&s, &hat).unwrap();
        assert!((rep.mcc - 0.5).abs() < 1e-12); // one perfect, one zero
    }

    #[test]
    fn mcc_rejects_tiny_samples() {
        let s = Mat::<f64>::zeros(2, 2);
        assert!(matches!(mcc(&s, &s), Err(Error::SampleSize(_))));
    }

    #[test]
    fn tc_independent_normals_near_zero() {
        let mut rng = derive_rng(47, &["tc-indep"]);
        let s = Mat::from_fn(10_000, 4, |_, _| gauss(&mut rng));
        let rep = total_correlation(&s, 3).unwrap();
        assert!(rep.tc_nats.abs() < 0.1, "TC {}", rep.tc_nats);
        assert!(!rep.jittered);
    }

    #[test]
    fn tc_duplicated_coordinate_is_large() {
        let mut rng = derive_rng(48, &["tc-dup"]);
        let s = Mat::from_fn(10_000, 2, |_i, j| {
            if j == 0 {
                gauss(&mut rng)
            } else {
                0.0
            }
        });
        let s = Mat::from_fn(10_000, 2, |i, j| if j == 1 { s[(i, 0)] } else { s[(i, 0)] });
        let rep = total_correlation(&s, 3).unwrap();
        assert!(rep.tc_nats > 2.0, "TC {}", rep.tc_nats);
    }

    #[test]
    fn tc_gaussian_matches_closed_form_and_histogram() {
        // 2-D Gaussian, ρ = 0.8: TC = −½ log(1−ρ²) = 0.5108256237659907
        let rho: f64 = 0.8;
        let closed_form = -0.5 * (1.0 - rho * rho).ln();
        assert!((closed_form - 0.5108256237659907).abs() < 1e-15);
        let mut rng = derive_rng(49, &["tc-gauss"]);
        let n = 10_000;
        let mut s = Mat::zeros(n, 2);
        for i in 0..n {
            let z1 = gauss(&mut rng);
            let z2 = gauss(&mut rng);
            s[(i, 0)] = z1;
            s[(i, 1)] = rho * z1 + (1.0 - rho * rho).sqrt() * z2;
        }
        let rep = total_correlation(&s, 3).unwrap();
        assert!(
            (rep.tc_nats - closed_form).abs() < 0.15,
            "KSG {} vs closed form {}",
            rep.tc_nats,
            closed_form
        );
        // histogram plug-in oracle
        let hist = histogram_tc_2d(&s, 24);
        assert!(
            (rep.tc_nats - hist).abs() < 0.15,
            "KSG {} vs histogram {}",
            rep.tc_nats,
            hist
        );
    }

    #[test]
    fn tc_invariant_under_monotone_maps() {
        let mut rng = derive_rng(50, &["tc-monotone"]);
        let n = 10_000;
        let rho: f64 = 0.6;
        let mut s = Mat::zeros(n, 2);
        for i in 0..n {
            let z1 = gauss(&mut rng);
            let z2 = gauss(&mut rng);
            s[(i, 0)] = z1;
            s[(i, 1)] = rho * z1 + (1.0 - rho * rho).sqrt() * z2;
        }
        let base = total_correlation(&s, 3).unwrap().tc_nats;
        let warped = Mat::from_fn(n, 2, |i, j| {
            if j == 0 {
                s[(i, 0)].tanh()
            } else {
                s[(i, 1)].exp()
            }
        });
        let after = total_correlation(&warped, 3).unwrap().tc_nats;
        assert!((base - after).abs() < 0.1, "TC {} vs warped {}", base, after);
    }

    #[test]
    fn tc_rejects_too_few_samples() {
        let s = Mat::<f64>::zeros(4, 2);
        assert!(matches!(total_correlation(&s, 3), Err(Error::SampleSize(_))));
        assert!(matches!(total_correlation(&s, 0), Err(Error::Param(_))));
    }

    #[test]
    fn tc_jitter_fallback_on_duplicates() {
        // integer-valued duplicated data forces zero neighbor distances
        let s = Mat::from_fn(64, 2, |i, _| (i % 4) as f64);
        let rep = total_correlation(&s, 3).unwrap();
        assert!(rep.jittered);
        assert!(rep.tc_nats.is_finite());
    }

    /// Histogram plug-in TC for 2-D data: Σ p_ij log(p_ij / (p_i q_j)).
    fn histogram_tc_2d(s: &Mat<f64>, bins: usize) -> f64 {
        let n = s.rows();
        let (min0, max0) = s.column(0).iter().fold((f64::MAX, f64::MIN), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
        let (min1, max1) = s.column(1).iter().fold((f64::MAX, f64::MIN), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
        let mut joint = vec![vec![0usize; bins]; bins];
        for i in 0..n {
            let b0 = (((s[(i, 0)] - min0) / (max0 - min0) * bins as f64) as usize).min(bins - 1);
            let b1 = (((s[(i, 1)] - min1) / (max1 - min1) * bins as f64) as usize).min(bins - 1);
            joint[b0][b1] += 1;
        }
        let marg0: Vec<f64> =
            (0..bins).map(|i| joint[i].iter().sum::<usize>() as f64 / n as f64).collect();
        let marg1: Vec<f64> = (0..bins)
            .map(|j| (0..bins).map(|i| joint[i][j]).sum::<usize>() as f64 / n as f64)
            .collect();
        let mut tc = 0.0;
        for i in 0..bins {
            for j in 0..bins {
                let pij = joint[i][j] as f64 / n as f64;
                if pij > 0.0 {
                    tc += pij * (pij / (marg0[i] * marg1[j])).ln();
                }
            }
        }
        tc
    }
}
