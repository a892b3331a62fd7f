//! Disentanglement tensor, g-orthogonal diagonalization, and source recovery.
//!
//! The tensor D = ∇² log ρ − ⅓ Ric is assembled in chart coordinates from a
//! log-density and a metric; diagonalizing the pencil (D, g) with a Cholesky
//! reduction produces a g-orthogonal frame whose normal coordinates are
//! pointwise disentangled. Recovery maps observations through the log map and
//! the inverse frame.

use crate::error::{Error, Result};
use crate::geodesics::{exp_map, log_map};
use crate::geometry::{
    christoffel, fd_gradient, fd_hessian, fd_step, log_hausdorff_density, transform_02,
    MetricField, Point, ScalarField, Tangent,
};
use crate::linalg::{self, Mat};
use crate::manifolds::ManifoldSpec;
use crate::scalar::{c, Scalar};

/// g-orthogonal frame at a point: columns are tangent components with
/// Jᵀ g(x) J = I.
#[derive(Debug, Clone)]
pub struct Frame<T> {
    pub mat: Mat<T>,
    pub at: Point<T>,
}

impl<T: Scalar> Frame<T> {
    pub fn new(mat: Mat<T>, at: Point<T>) -> Self {
        assert_eq!(mat.rows(), at.dim(), "frame dimension mismatch");
        Frame { mat, at }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    /// ‖Jᵀ g J − I‖∞, the g-orthogonality residual.
    pub fn orthogonality_residual(&self, m: &MetricField<T>) -> Result<T> {
        let g = m.metric_at(&self.at)?;
        let prod = self.mat.congruence(&g);
        Ok(prod.sub(&Mat::identity(self.dim())).max_norm())
    }

    /// Left inverse J⁻¹ = Jᵀ g(x).
    pub fn inverse(&self, m: &MetricField<T>) -> Result<Mat<T>> {
        let g = m.metric_at(&self.at)?;
        Ok(self.mat.transpose().matmul(&g))
    }
}

/// Symmetric coordinate matrix of the disentanglement tensor at a point,
/// with the pre-symmetrization residual kept for diagnostics.
#[derive(Debug, Clone)]
pub struct DisentanglementMatrix<T> {
    pub d: Mat<T>,
    pub at: Point<T>,
    pub asymmetry: T,
}

/// Result of the g-orthogonal diagonalization.
#[derive(Debug, Clone)]
pub struct EigenResult<T> {
    pub frame: Frame<T>,
    /// ascending eigenvalues of the (D, g) pencil
    pub lambdas: Vec<T>,
    pub min_adjacent_gap: T,
}

/// Coordinate formula for the disentanglement tensor:
///
/// D_ij = ∂²r − Γ^k_{ij} ∂_k r − ⅓ ∂_a Γ^a_{ij} + ⅓ Γ^a_{ib} Γ^b_{aj}
///
/// with r(x) = log p(x) − ⅓ log det g(x). Derivatives fall back to central
/// finite differences; the output is symmetrized.
pub fn disentanglement_tensor<T: Scalar>(
    p: &ScalarField<T>,
    m: &MetricField<T>,
    x0: &Point<T>,
) -> Result<DisentanglementMatrix<T>> {
    let n = m.dim();
    let step = fd_step(x0);
    let r_field = {
        let p = p.clone();
        let m = m.clone();
        ScalarField::new(move |x: &Point<T>| {
            let g = m.metric_at(x)?;
            let logdet = linalg::log_det_spd(&g)?;
            Ok(p.log_value_at(x)? - logdet / c(3.0))
        })
    };
    let grad_r = fd_gradient(&r_field, x0, step)?;
    let hess_r = fd_hessian(&r_field, x0, step)?;
    let gamma0 = christoffel(m, x0, step)?;
    // divergence-like term ∂_a Γ^a_{ij}
    let two = c::<T>(2.0);
    let mut div_gamma = Mat::zeros(n, n);
    for a in 0..n {
        let gp = christoffel(m, &x0.shifted(a, step), step)?;
        let gm = christoffel(m, &x0.shifted(a, -step), step)?;
        for i in 0..n {
            for j in 0..n {
                let d = (gp.get(a, i, j) - gm.get(a, i, j)) / (two * step);
                div_gamma[(i, j)] = div_gamma[(i, j)] + d;
            }
        }
    }
    let third = c::<T>(1.0 / 3.0);
    let mut raw = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut v = hess_r[(i, j)];
            for k in 0..n {
                v = v - gamma0.get(k, i, j) * grad_r[k];
            }
            v = v - third * div_gamma[(i, j)];
            let mut gg = T::zero();
            for a in 0..n {
                for b in 0..n {
                    gg = gg + gamma0.get(a, i, b) * gamma0.get(b, a, j);
                }
            }
            v = v + third * gg;
            raw[(i, j)] = v;
        }
    }
    Ok(DisentanglementMatrix { asymmetry: raw.asymmetry(), d: raw.symmetrize(), at: x0.clone() })
}

/// Computational shortcut for the tangent-source model:
/// D_x = J⁻ᵀ D_s(0) J⁻¹ with J⁻¹ = Jᵀ g(x0), i.e. D_x = g J D_s Jᵀ g.
pub fn disentanglement_tensor_shortcut<T: Scalar>(
    frame: &Frame<T>,
    d_s0: &Mat<T>,
    m: &MetricField<T>,
) -> Result<DisentanglementMatrix<T>> {
    let j_inv = frame.inverse(m)?;
    let raw = j_inv.transpose().matmul(&d_s0.matmul(&j_inv));
    Ok(DisentanglementMatrix {
        asymmetry: raw.asymmetry(),
        d: raw.symmetrize(),
        at: frame.at.clone(),
    })
}

/// Components of the tensor in normal coordinates: Jᵀ D J.
pub fn to_normal<T: Scalar>(d: &DisentanglementMatrix<T>, frame: &Frame<T>) -> Mat<T> {
    transform_02(&d.d, &frame.mat)
}

/// Solves the symmetric-definite pencil (D, g(x0)) by Cholesky reduction:
/// g = LLᵀ, B = L⁻¹ D L⁻ᵀ, B = QΛQᵀ, J* = L⁻ᵀQ. Columns are sorted by
/// ascending eigenvalue, each column's largest-magnitude entry made positive.
pub fn rica_diagonalize<T: Scalar>(
    d: &DisentanglementMatrix<T>,
    m: &MetricField<T>,
) -> Result<EigenResult<T>> {
    let n = d.d.rows();
    let g = m.metric_at(&d.at)?;
    let l = linalg::cholesky(&g)?;
    // B = L⁻¹ D L⁻ᵀ, built column by column through triangular solves
    let mut half = Mat::zeros(n, n); // L⁻¹ D
    for j in 0..n {
        let col = linalg::solve_lower(&l, &d.d.column(j));
        half.set_column(j, &col);
    }
    let mut b = Mat::zeros(n, n); // (L⁻¹ (L⁻¹ D)ᵀ)ᵀ
    let half_t = half.transpose();
    for j in 0..n {
        let col = linalg::solve_lower(&l, &half_t.column(j));
        b.set_column(j, &col);
    }
    let b = b.transpose().symmetrize();
    let (lambdas, q) = linalg::sym_eigen(&b)?;
    // J* = L⁻ᵀ Q
    let mut jstar = Mat::zeros(n, n);
    for j in 0..n {
        let col = linalg::solve_lower_transpose(&l, &q.column(j));
        jstar.set_column(j, &col);
    }
    // sign convention: largest-magnitude entry of each column is positive
    for j in 0..n {
        let mut best = 0usize;
        let mut best_abs = T::zero();
        for i in 0..n {
            if jstar[(i, j)].abs() > best_abs {
                best_abs = jstar[(i, j)].abs();
                best = i;
            }
        }
        if jstar[(best, j)] < T::zero() {
            for i in 0..n {
                jstar[(i, j)] = -jstar[(i, j)];
            }
        }
    }
    let min_adjacent_gap = if n < 2 {
        T::infinity()
    } else {
        (1..n)
            .map(|i| (lambdas[i] - lambdas[i - 1]).abs())
            .fold(T::infinity(), |m, v| m.min(v))
    };
    Ok(EigenResult {
        frame: Frame::new(jstar, d.at.clone()),
        lambdas,
        min_adjacent_gap,
    })
}

/// Latents recovered per sample: ŝ = Jᵀ g(x0) · log_map(x0, x). Samples whose
/// log map fails (cut locus) are flagged and carry non-finite latents.
pub fn rica_recover<T: Scalar>(
    spec: &ManifoldSpec,
    x0: &Point<T>,
    frame: &Frame<T>,
    xs: &[Point<T>],
) -> Result<(Mat<T>, Vec<bool>)> {
    let n = spec.dim();
    let m = crate::manifolds::intrinsic_metric(spec);
    let j_inv = frame.inverse(&m)?;
    let mut latents = Mat::zeros(xs.len(), n);
    let mut ok = vec![true; xs.len()];
    for (row, x) in xs.iter().enumerate() {
        match log_map(spec, x0, x) {
            Ok(v) => {
                let s = j_inv.matvec(&v.comps);
                latents.row_mut(row).copy_from_slice(&s);
            }
            Err(Error::Radius(_)) => {
                ok[row] = false;
                for val in latents.row_mut(row) {
                    *val = T::nan();
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok((latents, ok))
}

/// Both sides of the pointwise change-of-variables identity at the base
/// point: (log p(x0) + log|det J|, log ρ(x0)). Equality is the caller's
/// assertion.
pub fn pointwise_cov_check<T: Scalar>(
    p: &ScalarField<T>,
    m: &MetricField<T>,
    x0: &Point<T>,
    frame: &Frame<T>,
) -> Result<(T, T)> {
    let logp = p.log_value_at(x0)?;
    if !logp.is_finite() {
        return Err(Error::Eval("log-density is non-finite at the base point".into()));
    }
    let lu = linalg::lu_factor(&frame.mat)?;
    let (log_abs_det, _) = lu.log_abs_det();
    let lhs = logp + log_abs_det;
    let rhs = log_hausdorff_density(p, m, x0)?;
    Ok((lhs, rhs))
}

/// Finite-difference steps for the normal-coordinate Hessian check.
#[derive(Debug, Clone, Copy)]
pub struct HessianCheckSteps<T> {
    /// step for the numeric Jacobian of s ↦ exp(Js)
    pub jacobian_step: T,
    /// step for the outer second differences in s
    pub hessian_step: T,
}

impl<T: Scalar> Default for HessianCheckSteps<T> {
    fn default() -> Self {
        HessianCheckSteps { jacobian_step: c(1e-5), hessian_step: c(5e-3) }
    }
}

/// Numeric Hessian of the latent log-likelihood at the normal-coordinate
/// origin, computed by finite differences of
///
/// log p_s(s) = log p_x(f(s)) + ½ log det g_s(s) − ½ log det g_x(f(s)),
///
/// where f(s) = exp_{x0}(J s) and g_s is the pullback of g through the
/// numeric Jacobian of f ((0,2)-transform). The two log-det terms together
/// are the change-of-variables volume correction log|det ∂f/∂s|.
pub fn normal_loglik_hessian_fd<T: Scalar>(
    p: &ScalarField<T>,
    m: &MetricField<T>,
    spec: &ManifoldSpec,
    x0: &Point<T>,
    frame: &Frame<T>,
    steps: HessianCheckSteps<T>,
) -> Result<Mat<T>> {
    let n = spec.dim();
    let decode = |s: &[T]| -> Result<Point<T>> {
        let v = frame.mat.matvec(s);
        exp_map(spec, x0, &Tangent::new(x0.clone(), v))
    };
    let log_ps = |s: &[T]| -> Result<T> {
        let x = decode(s)?;
        let logp = p.log_value_at(&x)?;
        // numeric Jacobian of the decoder at s
        let h = steps.jacobian_step;
        let two = c::<T>(2.0);
        let mut jac = Mat::zeros(n, n);
        for j in 0..n {
            let mut sp = s.to_vec();
            sp[j] = sp[j] + h;
            let fp = decode(&sp)?;
            let mut sm = s.to_vec();
            sm[j] = sm[j] - h;
            let fm = decode(&sm)?;
            for i in 0..n {
                jac[(i, j)] = (fp.coords[i] - fm.coords[i]) / (two * h);
            }
        }
        let gx = m.metric_at(&x)?;
        let gs = transform_02(&gx, &jac);
        let half = c::<T>(0.5);
        Ok(logp + half * linalg::log_det_spd(&gs)? - half * linalg::log_det_spd(&gx)?)
    };
    let h = steps.hessian_step;
    let origin = vec![T::zero(); n];
    let f0 = log_ps(&origin)?;
    let two = c::<T>(2.0);
    let four = c::<T>(4.0);
    let mut hess = Mat::zeros(n, n);
    for i in 0..n {
        let mut sp = origin.clone();
        sp[i] = h;
        let mut sm = origin.clone();
        sm[i] = -h;
        hess[(i, i)] = (log_ps(&sp)? - two * f0 + log_ps(&sm)?) / (h * h);
        for j in (i + 1)..n {
            let eval = |si: T, sj: T| -> Result<T> {
                let mut s = origin.clone();
                s[i] = si;
                s[j] = sj;
                log_ps(&s)
            };
            let v = (eval(h, h)? - eval(h, -h)? - eval(-h, h)? + eval(-h, -h)?) / (four * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Ok(hess)
}

/// ‖numeric Hessian − Jᵀ D J‖∞ with D the full disentanglement tensor; the
/// residual is small when the tensor is correct.
pub fn pointwise_hessian_check<T: Scalar>(
    p: &ScalarField<T>,
    m: &MetricField<T>,
    spec: &ManifoldSpec,
    x0: &Point<T>,
    frame: &Frame<T>,
) -> Result<T> {
    let numeric = normal_loglik_hessian_fd(p, m, spec, x0, frame, Default::default())?;
    let d = disentanglement_tensor(p, m, x0)?;
    let predicted = to_normal(&d, frame);
    Ok(numeric.sub(&predicted).max_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ScalarField;
    use crate::manifolds::intrinsic_metric;

    #[test]
    fn tensor_reduces_to_hessian_on_flat_metric() {
        let m = MetricField::euclidean(3);
        let p = ScalarField::gaussian_isotropic(3);
        let d = disentanglement_tensor(&p, &m, &Point::zeros(3)).unwrap();
        assert!(d.d.sub(&Mat::scaled_identity(3, -1.0)).max_norm() < 1e-6);
    }

    #[test]
    fn tensor_on_torus_logistic_matches_analytic_diagonal() {
        // identity metric; logistic product density has Hessian −1/(2bᵢ²) at 0
        let spec = ManifoldSpec::torus(3);
        let m = intrinsic_metric::<f64>(&spec);
        let scales = vec![0.3, 0.5, 0.9];
        let p = ScalarField::logistic_product(scales.clone());
        let d = disentanglement_tensor(&p, &m, &Point::zeros(3)).unwrap();
        for (i, &b) in scales.iter().enumerate() {
            let expect = -1.0 / (2.0 * b * b);
            assert!(
                (d.d[(i, i)] - expect).abs() < 1e-5,
                "diag {} vs {}",
                d.d[(i, i)],
                expect
            );
        }
        assert!((d.d[(0, 0)] + 5.555555555555555).abs() < 1e-5);
        // finite-difference cross-check of the analytic diagonal
        let fd = fd_hessian(&p, &Point::zeros(3), 1e-4).unwrap();
        assert!(d.d.sub(&fd).max_norm() < 1e-6);
    }

    #[test]
    fn shortcut_identity_cases() {
        let m = MetricField::euclidean(2);
        let frame = Frame::new(Mat::identity(2), Point::zeros(2));
        let d_s = Mat::diag(&[-2.0, -5.0]);
        let d = disentanglement_tensor_shortcut(&frame, &d_s, &m).unwrap();
        assert!(d.d.sub(&d_s).max_norm() < 1e-14);
        // transforming back recovers D_s
        let back = to_normal(&d, &frame);
        assert!(back.sub(&d_s).max_norm() < 1e-14);
    }

    #[test]
    fn diagonalize_diagonal_pencil() {
        let m = MetricField::euclidean(2);
        let d = DisentanglementMatrix {
            d: Mat::diag(&[-1.0f64, -2.0]),
            at: Point::zeros(2),
            asymmetry: 0.0,
        };
        let r = rica_diagonalize(&d, &m).unwrap();
        assert!((r.lambdas[0] + 2.0).abs() < 1e-12);
        assert!((r.lambdas[1] + 1.0).abs() < 1e-12);
        // frame is a signed permutation of the identity
        let jj = r.frame.mat.clone();
        for j in 0..2 {
            let col = jj.column(j);
            let nonzero: Vec<f64> = col.iter().filter(|v| v.abs() > 1e-9).cloned().collect();
            assert_eq!(nonzero.len(), 1);
            assert!((nonzero[0].abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonalize_degenerate_pencil_still_valid() {
        // g = diag(4,1), D = diag(−8,−2): pencil eigenvalues (−2,−2)
        let m = MetricField::new(2, |_| Ok(Mat::diag(&[4.0f64, 1.0])));
        let d = DisentanglementMatrix {
            d: Mat::diag(&[-8.0, -2.0]),
            at: Point::zeros(2),
            asymmetry: 0.0,
        };
        let r = rica_diagonalize(&d, &m).unwrap();
        assert!((r.lambdas[0] + 2.0).abs() < 1e-12 && (r.lambdas[1] + 2.0).abs() < 1e-12);
        assert!(r.min_adjacent_gap < 1e-12);
        // residuals hold even for the degenerate spectrum
        let res = r.frame.orthogonality_residual(&m).unwrap();
        assert!(res < 1e-10);
        let diag = r.frame.mat.congruence(&d.d);
        assert!((diag[(0, 1)]).abs() < 1e-10);
        // expected frame diag(0.5, 1) up to signed permutation
        assert!((r.frame.mat[(0, 0)].abs() - 0.5).abs() < 1e-12);
        assert!((r.frame.mat[(1, 1)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonalize_random_pencil_residuals() {
        let mut seed = 4242u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let n = 6;
        for _ in 0..20 {
            let a = Mat::from_fn(n, n, |_, _| next());
            let g = a.matmul(&a.transpose()).add(&Mat::scaled_identity(n, 0.5));
            let d_raw = Mat::from_fn(n, n, |_, _| next()).symmetrize();
            let m = MetricField::new(n, move |_| Ok(g.clone()));
            let dm =
                DisentanglementMatrix { d: d_raw.clone(), at: Point::zeros(n), asymmetry: 0.0 };
            let r = rica_diagonalize(&dm, &m).unwrap();
            assert!(r.frame.orthogonality_residual(&m).unwrap() < 1e-10);
            let lam = r.frame.mat.congruence(&d_raw);
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        assert!(lam[(i, j)].abs() < 1e-10);
                    }
                }
            }
            for i in 1..n {
                assert!(r.lambdas[i] >= r.lambdas[i - 1]);
            }
        }
    }

    #[test]
    fn recover_base_point_is_zero() {
        let spec = ManifoldSpec::sphere(2);
        let x0 = Point::zeros(2);
        let frame = Frame::new(Mat::scaled_identity(2, 0.5f64), x0.clone());
        let (latents, ok) = rica_recover(&spec, &x0, &frame, &[x0.clone()]).unwrap();
        assert!(ok[0]);
        assert!(latents.row(0).iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn recover_torus_identity_frame_is_wrapped_difference() {
        let spec = ManifoldSpec::torus(2);
        let x0 = Point::zeros(2);
        let frame = Frame::new(Mat::identity(2), x0.clone());
        let xs = vec![Point::new(vec![3.5f64, -0.4])];
        let (latents, ok) = rica_recover(&spec, &x0, &frame, &xs).unwrap();
        assert!(ok[0]);
        assert!((latents[(0, 0)] - (3.5 - 2.0 * std::f64::consts::PI)).abs() < 1e-14);
        assert!((latents[(0, 1)] + 0.4).abs() < 1e-14);
    }

    #[test]
    fn cov_check_euclidean_identity_frame() {
        let m = MetricField::euclidean(2);
        let p = ScalarField::gaussian_isotropic(2);
        let x0 = Point::new(vec![0.3f64, -0.7]);
        let frame = Frame::new(Mat::identity(2), x0.clone());
        let (lhs, rhs) = pointwise_cov_check(&p, &m, &x0, &frame).unwrap();
        assert!((lhs - rhs).abs() < 1e-14);
        assert!((lhs - p.log_value_at(&x0).unwrap()).abs() < 1e-14);
    }
}
