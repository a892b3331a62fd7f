//! Coordinate representations of metric tensors and their derivatives.
//!
//! A [`MetricField`] assigns a symmetric positive-definite matrix to each
//! chart point, optionally with analytic Christoffel/Ricci providers; a
//! [`ScalarField`] carries a log-density with optional analytic gradient and
//! Hessian. Everything else — Christoffel symbols, Ricci curvature, covariant
//! Hessians, Hausdorff densities — is computed from those providers, falling
//! back to central finite differences where no analytic route exists.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::scalar::{c, Scalar};

/// Point in a named chart; plain coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point<T> {
    pub coords: Vec<T>,
}

impl<T: Scalar> Point<T> {
    pub fn new(coords: Vec<T>) -> Self {
        Point { coords }
    }

    pub fn zeros(n: usize) -> Self {
        Point { coords: vec![T::zero(); n] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|v| v.is_finite())
    }

    /// Point shifted by `h` along coordinate axis `i`.
    pub fn shifted(&self, i: usize, h: T) -> Point<T> {
        let mut coords = self.coords.clone();
        coords[i] = coords[i] + h;
        Point { coords }
    }
}

/// Tangent vector: components at a base point.
#[derive(Debug, Clone, PartialEq)]
pub struct Tangent<T> {
    pub base: Point<T>,
    pub comps: Vec<T>,
}

impl<T: Scalar> Tangent<T> {
    pub fn new(base: Point<T>, comps: Vec<T>) -> Self {
        assert_eq!(base.dim(), comps.len(), "tangent dimension mismatch");
        Tangent { base, comps }
    }
}

type MetricFn<T> = dyn Fn(&Point<T>) -> Result<Mat<T>> + Send + Sync;
type ChristoffelFn<T> = dyn Fn(&Point<T>) -> Result<ChristoffelTensor<T>> + Send + Sync;
type ScalarFn<T> = dyn Fn(&Point<T>) -> Result<T> + Send + Sync;
type GradFn<T> = dyn Fn(&Point<T>) -> Result<Vec<T>> + Send + Sync;
type HessFn<T> = dyn Fn(&Point<T>) -> Result<Mat<T>> + Send + Sync;

/// Riemannian metric as a matrix-valued field with optional analytic
/// derivative providers. Providers must be thread-safe; all operations here
/// are pure.
#[derive(Clone)]
pub struct MetricField<T> {
    dim: usize,
    metric: Arc<MetricFn<T>>,
    christoffel: Option<Arc<ChristoffelFn<T>>>,
    ricci: Option<Arc<HessFn<T>>>,
}

impl<T: Scalar> MetricField<T> {
    pub fn new(dim: usize, metric: impl Fn(&Point<T>) -> Result<Mat<T>> + Send + Sync + 'static) -> Self {
        MetricField { dim, metric: Arc::new(metric), christoffel: None, ricci: None }
    }

    /// Euclidean metric on R^n.
    pub fn euclidean(dim: usize) -> Self {
        MetricField::new(dim, move |_| Ok(Mat::identity(dim)))
            .with_christoffel(move |_| Ok(ChristoffelTensor::zeros(dim)))
    }

    pub fn with_christoffel(
        mut self,
        gamma: impl Fn(&Point<T>) -> Result<ChristoffelTensor<T>> + Send + Sync + 'static,
    ) -> Self {
        self.christoffel = Some(Arc::new(gamma));
        self
    }

    pub fn with_ricci(
        mut self,
        ric: impl Fn(&Point<T>) -> Result<Mat<T>> + Send + Sync + 'static,
    ) -> Self {
        self.ricci = Some(Arc::new(ric));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_analytic_christoffel(&self) -> bool {
        self.christoffel.is_some()
    }

    /// Metric matrix at a point.
    pub fn metric_at(&self, x: &Point<T>) -> Result<Mat<T>> {
        if x.dim() != self.dim {
            return Err(Error::Param(format!(
                "point dimension {} does not match metric dimension {}",
                x.dim(),
                self.dim
            )));
        }
        (self.metric)(x)
    }

    pub fn analytic_christoffel_at(&self, x: &Point<T>) -> Option<Result<ChristoffelTensor<T>>> {
        self.christoffel.as_ref().map(|f| f(x))
    }

    pub fn analytic_ricci_at(&self, x: &Point<T>) -> Option<Result<Mat<T>>> {
        self.ricci.as_ref().map(|f| f(x))
    }
}

/// Log-density field with optional analytic gradient/Hessian providers.
#[derive(Clone)]
pub struct ScalarField<T> {
    log_value: Arc<ScalarFn<T>>,
    gradient: Option<Arc<GradFn<T>>>,
    hessian: Option<Arc<HessFn<T>>>,
}

impl<T: Scalar> ScalarField<T> {
    pub fn new(log_value: impl Fn(&Point<T>) -> Result<T> + Send + Sync + 'static) -> Self {
        ScalarField { log_value: Arc::new(log_value), gradient: None, hessian: None }
    }

    pub fn with_gradient(
        mut self,
        grad: impl Fn(&Point<T>) -> Result<Vec<T>> + Send + Sync + 'static,
    ) -> Self {
        self.gradient = Some(Arc::new(grad));
        self
    }

    pub fn with_hessian(
        mut self,
        hess: impl Fn(&Point<T>) -> Result<Mat<T>> + Send + Sync + 'static,
    ) -> Self {
        self.hessian = Some(Arc::new(hess));
        self
    }

    pub fn log_value_at(&self, x: &Point<T>) -> Result<T> {
        (self.log_value)(x)
    }

    pub fn gradient_at(&self, x: &Point<T>) -> Result<Vec<T>> {
        match &self.gradient {
            Some(g) => g(x),
            None => fd_gradient(self, x, fd_step(x)),
        }
    }

    pub fn hessian_at(&self, x: &Point<T>) -> Result<Mat<T>> {
        match &self.hessian {
            Some(h) => h(x),
            None => fd_hessian(self, x, fd_step(x)),
        }
    }

    /// Isotropic unit-variance Gaussian log-density with analytic providers.
    pub fn gaussian_isotropic(dim: usize) -> Self {
        let norm_const = c::<T>(-0.5 * (dim as f64) * (2.0 * std::f64::consts::PI).ln());
        ScalarField::new(move |x: &Point<T>| {
            let q: T = x.coords.iter().map(|&v| v * v).sum();
            Ok(norm_const - q * c(0.5))
        })
        .with_gradient(|x: &Point<T>| Ok(x.coords.iter().map(|&v| -v).collect()))
        .with_hessian(move |x: &Point<T>| Ok(Mat::scaled_identity(x.dim(), -T::one())))
    }

    /// Product of centered logistic log-densities with the given scales.
    pub fn logistic_product(scales: Vec<T>) -> Self {
        ScalarField::new(move |x: &Point<T>| {
            if x.dim() != scales.len() {
                return Err(Error::Param("logistic product dimension mismatch".into()));
            }
            let mut acc = T::zero();
            for (&v, &b) in x.coords.iter().zip(&scales) {
                acc = acc + logistic_log_density(v, b);
            }
            Ok(acc)
        })
    }
}

/// Centered logistic log-density log p(s; 0, b), evaluated stably via |s|.
pub fn logistic_log_density<T: Scalar>(s: T, b: T) -> T {
    let z = s.abs() / b;
    -z - b.ln() - c::<T>(2.0) * (-z).exp().ln_1p()
}

/// Christoffel symbols Γ^k_{ij}, stored as `gamma[k][(i, j)]`.
#[derive(Debug, Clone)]
pub struct ChristoffelTensor<T> {
    gamma: Vec<Mat<T>>,
}

impl<T: Scalar> ChristoffelTensor<T> {
    pub fn zeros(n: usize) -> Self {
        ChristoffelTensor { gamma: (0..n).map(|_| Mat::zeros(n, n)).collect() }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        ChristoffelTensor {
            gamma: (0..n).map(|k| Mat::from_fn(n, n, |i, j| f(k, i, j))).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> T {
        self.gamma[k][(i, j)]
    }

    pub fn upper(&self, k: usize) -> &Mat<T> {
        &self.gamma[k]
    }

    /// Enforces symmetry in the lower indices by averaging.
    pub fn symmetrized_lower(&self) -> Self {
        ChristoffelTensor { gamma: self.gamma.iter().map(|m| m.symmetrize()).collect() }
    }

    pub fn max_norm(&self) -> T {
        self.gamma.iter().fold(T::zero(), |m, g| m.max(g.max_norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.gamma.iter().all(|m| m.is_finite())
    }
}

/// Symmetrized Ricci matrix with its pre-symmetrization residual.
#[derive(Debug, Clone)]
pub struct RicciMatrix<T> {
    pub ric: Mat<T>,
    /// max-norm asymmetry of the raw tensor before symmetrization
    pub asymmetry: T,
}

/// Default central-difference step: 1e-4 · (1 + ‖x‖∞).
pub fn fd_step<T: Scalar>(x: &Point<T>) -> T {
    c::<T>(1e-4) * (T::one() + linalg::norm_inf(&x.coords))
}

fn check_step<T: Scalar>(step: T) -> Result<()> {
    if step <= T::zero() || !step.is_finite() {
        return Err(Error::Param(format!("finite-difference step must be positive, got {:?}", step)));
    }
    Ok(())
}

/// Central-difference gradient of a scalar field.
pub fn fd_gradient<T: Scalar>(f: &ScalarField<T>, x: &Point<T>, step: T) -> Result<Vec<T>> {
    check_step(step)?;
    let n = x.dim();
    let two = c::<T>(2.0);
    let mut g = Vec::with_capacity(n);
    for i in 0..n {
        let fp = f.log_value_at(&x.shifted(i, step))?;
        let fm = f.log_value_at(&x.shifted(i, -step))?;
        g.push((fp - fm) / (two * step));
    }
    Ok(g)
}

/// Central-difference Hessian of a scalar field.
pub fn fd_hessian<T: Scalar>(f: &ScalarField<T>, x: &Point<T>, step: T) -> Result<Mat<T>> {
    check_step(step)?;
    let n = x.dim();
    let f0 = f.log_value_at(x)?;
    let four = c::<T>(4.0);
    let two = c::<T>(2.0);
    let mut h = Mat::zeros(n, n);
    for i in 0..n {
        let fp = f.log_value_at(&x.shifted(i, step))?;
        let fm = f.log_value_at(&x.shifted(i, -step))?;
        h[(i, i)] = (fp - two * f0 + fm) / (step * step);
        for j in (i + 1)..n {
            let fpp = f.log_value_at(&x.shifted(i, step).shifted(j, step))?;
            let fpm = f.log_value_at(&x.shifted(i, step).shifted(j, -step))?;
            let fmp = f.log_value_at(&x.shifted(i, -step).shifted(j, step))?;
            let fmm = f.log_value_at(&x.shifted(i, -step).shifted(j, -step))?;
            let v = (fpp - fpm - fmp + fmm) / (four * step * step);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    Ok(h)
}

/// Christoffel symbols at `x`: the analytic provider when the field has one,
/// otherwise central differences of the metric with the given step.
///
/// Γ^k_{ij} = ½ g^{km} (∂_j g_{im} + ∂_i g_{jm} − ∂_m g_{ij}); lower-index
/// symmetry is enforced by averaging.
pub fn christoffel<T: Scalar>(m: &MetricField<T>, x: &Point<T>, step: T) -> Result<ChristoffelTensor<T>> {
    if let Some(res) = m.analytic_christoffel_at(x) {
        return Ok(res?.symmetrized_lower());
    }
    christoffel_fd(m, x, step)
}

/// Finite-difference Christoffel path, bypassing any analytic provider.
pub fn christoffel_fd<T: Scalar>(
    m: &MetricField<T>,
    x: &Point<T>,
    step: T,
) -> Result<ChristoffelTensor<T>> {
    check_step(step)?;
    let n = m.dim();
    let g = m.metric_at(x)?;
    let ginv = linalg::inverse(&g).map_err(|_| {
        Error::Linalg("metric is singular; cannot raise Christoffel index".into())
    })?;
    let two = c::<T>(2.0);
    // dg[k] = ∂ g / ∂ x^k
    let mut dg = Vec::with_capacity(n);
    for k in 0..n {
        let gp = m.metric_at(&x.shifted(k, step))?;
        let gm = m.metric_at(&x.shifted(k, -step))?;
        dg.push(gp.sub(&gm).scale(T::one() / (two * step)));
    }
    let half = c::<T>(0.5);
    let gamma = ChristoffelTensor::from_fn(n, |k, i, j| {
        let mut s = T::zero();
        for mm in 0..n {
            s = s + ginv[(k, mm)] * (dg[j][(i, mm)] + dg[i][(j, mm)] - dg[mm][(i, j)]);
        }
        s * half
    });
    Ok(gamma.symmetrized_lower())
}

/// Ricci curvature at `x`: analytic provider if present, otherwise the
/// contraction Ric_{ij} = ∂_k Γ^k_{ij} − ∂_j Γ^k_{ik} + Γ^a_{ab}Γ^b_{ij}
/// − Γ^a_{ib}Γ^b_{aj} with Christoffel derivatives by central differences.
/// The output is symmetrized; the raw asymmetry is reported.
pub fn ricci<T: Scalar>(m: &MetricField<T>, x: &Point<T>, step: T) -> Result<RicciMatrix<T>> {
    if let Some(res) = m.analytic_ricci_at(x) {
        let raw = res?;
        return Ok(RicciMatrix { asymmetry: raw.asymmetry(), ric: raw.symmetrize() });
    }
    ricci_fd(m, x, step)
}

/// Finite-difference Ricci path, bypassing any analytic Ricci provider
/// (an analytic Christoffel provider is still used if present).
pub fn ricci_fd<T: Scalar>(m: &MetricField<T>, x: &Point<T>, step: T) -> Result<RicciMatrix<T>> {
    check_step(step)?;
    let n = m.dim();
    let gamma0 = christoffel(m, x, step)?;
    let two = c::<T>(2.0);
    // dgamma[l] = ∂ Γ / ∂ x^l
    let mut dgamma = Vec::with_capacity(n);
    for l in 0..n {
        let gp = christoffel(m, &x.shifted(l, step), step)?;
        let gm = christoffel(m, &x.shifted(l, -step), step)?;
        let scale = T::one() / (two * step);
        let diff =
            ChristoffelTensor::from_fn(n, |k, i, j| (gp.get(k, i, j) - gm.get(k, i, j)) * scale);
        dgamma.push(diff);
    }
    // contracted Γ^a_{ab}
    let contracted: Vec<T> = (0..n)
        .map(|b| (0..n).map(|a| gamma0.get(a, a, b)).sum())
        .collect();
    let mut raw = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut v = T::zero();
            for k in 0..n {
                v = v + dgamma[k].get(k, i, j); // ∂_k Γ^k_{ij}
                v = v - dgamma[j].get(k, i, k); // −∂_j Γ^k_{ik}
            }
            for b in 0..n {
                v = v + contracted[b] * gamma0.get(b, i, j); // Γ^a_{ab} Γ^b_{ij}
                for a in 0..n {
                    v = v - gamma0.get(a, i, b) * gamma0.get(b, a, j); // −Γ^a_{ib} Γ^b_{aj}
                }
            }
            raw[(i, j)] = v;
        }
    }
    Ok(RicciMatrix { asymmetry: raw.asymmetry(), ric: raw.symmetrize() })
}

/// Covariant Hessian (∇²f)_{ij} = ∂²f/∂x^i∂x^j − Γ^k_{ij} ∂f/∂x^k.
pub fn covariant_hessian<T: Scalar>(
    f: &ScalarField<T>,
    m: &MetricField<T>,
    x: &Point<T>,
) -> Result<Mat<T>> {
    let step = fd_step(x);
    let grad = f.gradient_at(x)?;
    let hess = f.hessian_at(x)?;
    let gamma = christoffel(m, x, step)?;
    let n = m.dim();
    let mut out = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut v = hess[(i, j)];
            for k in 0..n {
                v = v - gamma.get(k, i, j) * grad[k];
            }
            out[(i, j)] = v;
        }
    }
    Ok(out.symmetrize())
}

/// log of the Hausdorff density: log p(x) − ½ log det g(x).
pub fn log_hausdorff_density<T: Scalar>(
    f: &ScalarField<T>,
    m: &MetricField<T>,
    x: &Point<T>,
) -> Result<T> {
    let g = m.metric_at(x)?;
    let logdet = linalg::log_det_spd(&g)?;
    Ok(f.log_value_at(x)? - logdet * c(0.5))
}

/// (0,2)-tensor transformation: jacᵀ · t · jac.
pub fn transform_02<T: Scalar>(t: &Mat<T>, jac: &Mat<T>) -> Mat<T> {
    jac.congruence(t)
}

/// Blend of the Euclidean metric with an encoder pullback:
/// g(x) = (1−λ)·I + λ·Jᵀ(x)J(x). SPD for any J because λ < 1.
pub fn pullback_blend_metric<T: Scalar>(
    dim: usize,
    encoder_jacobian: impl Fn(&Point<T>) -> Result<Mat<T>> + Send + Sync + 'static,
    lambda: T,
) -> Result<MetricField<T>> {
    if lambda <= T::zero() || lambda >= T::one() {
        return Err(Error::Param(format!("blend weight must lie in (0,1), got {:?}", lambda)));
    }
    Ok(MetricField::new(dim, move |x: &Point<T>| {
        let j = encoder_jacobian(x)?;
        if j.cols() != dim {
            return Err(Error::Param(format!(
                "encoder jacobian has {} columns, expected {}",
                j.cols(),
                dim
            )));
        }
        let jtj = j.transpose().matmul(&j);
        let mut g = jtj.scale(lambda);
        let keep = T::one() - lambda;
        for i in 0..dim {
            g[(i, i)] = g[(i, i)] + keep;
        }
        Ok(g)
    }))
}

/// Gaussian softmax weights used by [`anchor_score_metric`].
pub fn anchor_score_weights<T: Scalar>(anchors: &[Point<T>], bandwidth: T, x: &Point<T>) -> Vec<T> {
    let inv = -T::one() / (c::<T>(2.0) * bandwidth * bandwidth);
    let logits: Vec<T> = anchors
        .iter()
        .map(|a| {
            let d2: T = a
                .coords
                .iter()
                .zip(&x.coords)
                .map(|(&ai, &xi)| (xi - ai) * (xi - ai))
                .sum();
            d2 * inv
        })
        .collect();
    let max = logits.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
    let exps: Vec<T> = logits.iter().map(|&v| (v - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Score-anchored metric g(x) = I + α² Σ_m w_m(x) s_m s_mᵀ with Gaussian
/// softmax weights over the anchor points.
pub fn anchor_score_metric<T: Scalar>(
    anchors: Vec<Point<T>>,
    scores: Vec<Vec<T>>,
    alpha2: T,
    bandwidth: T,
) -> Result<MetricField<T>> {
    if anchors.is_empty() {
        return Err(Error::Param("anchor list must not be empty".into()));
    }
    if anchors.len() != scores.len() {
        return Err(Error::Param("anchor and score counts differ".into()));
    }
    let dim = anchors[0].dim();
    if anchors.iter().any(|a| a.dim() != dim) || scores.iter().any(|s| s.len() != dim) {
        return Err(Error::Param("anchor/score dimensions are inconsistent".into()));
    }
    if alpha2 <= T::zero() || bandwidth <= T::zero() {
        return Err(Error::Param("alpha2 and bandwidth must be positive".into()));
    }
    Ok(MetricField::new(dim, move |x: &Point<T>| {
        let w = anchor_score_weights(&anchors, bandwidth, x);
        let mut g = Mat::identity(dim);
        for (wm, s) in w.iter().zip(&scores) {
            let coef = alpha2 * *wm;
            for i in 0..dim {
                for j in 0..dim {
                    g[(i, j)] = g[(i, j)] + coef * s[i] * s[j];
                }
            }
        }
        Ok(g)
    }))
}
