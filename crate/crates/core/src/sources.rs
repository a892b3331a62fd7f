//! Tangent-source generative model: logistic sources pushed through a random
//! g-orthonormal frame and the exponential map, x = exp_{x0}(J s) with
//! s_i ~ Logistic(0, b·r_s^{i−1}).

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geodesics::{exp_map, injectivity_radius};
use crate::geometry::{logistic_log_density, MetricField, Point, ScalarField, Tangent};
use crate::linalg::{self, Mat};
use crate::manifolds::{alternate_chart, base_point, ChartId, ChartTag, ManifoldKind, ManifoldSpec};
use crate::rica::Frame;
use crate::scalar::{c, pi, Scalar};

/// Source model parameters.
#[derive(Debug, Clone, Copy)]
pub struct SourceConfig<T> {
    pub n: usize,
    /// base scale b > 0
    pub b: T,
    /// per-coordinate geometric decay r_s ∈ (0, 1]
    pub r_s: T,
    /// sample count
    pub n_samples: usize,
}

impl<T: Scalar> SourceConfig<T> {
    pub fn new(n: usize, b: T, r_s: T, n_samples: usize) -> Result<Self> {
        if b <= T::zero() {
            return Err(Error::Param("base scale b must be positive".into()));
        }
        if r_s <= T::zero() || r_s > T::one() {
            return Err(Error::Param("decay r_s must lie in (0, 1]".into()));
        }
        if n_samples == 0 || n == 0 {
            return Err(Error::Param("dimension and sample count must be positive".into()));
        }
        Ok(SourceConfig { n, b, r_s, n_samples })
    }

    /// b_i = b · r_s^{i−1} for i = 1..n.
    pub fn scales(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.n);
        let mut cur = self.b;
        for _ in 0..self.n {
            out.push(cur);
            cur = cur * self.r_s;
        }
        out
    }
}

/// Paired ground-truth sources and observations, plus optional
/// alternate-chart observations and per-sample injectivity flags.
#[derive(Debug, Clone)]
pub struct SourceBatch<T> {
    /// ground-truth sources, N×n
    pub s: Mat<T>,
    /// intrinsic-chart observations, N×n
    pub x: Mat<T>,
    /// alternate-chart observations, N×m; present iff requested
    pub z: Option<Mat<T>>,
    /// true when the generating tangent stayed inside the injectivity radius
    pub in_radius: Vec<bool>,
}

impl<T: Scalar> SourceBatch<T> {
    pub fn len(&self) -> usize {
        self.s.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn frac_out_of_radius(&self) -> f64 {
        let out = self.in_radius.iter().filter(|ok| !**ok).count();
        out as f64 / self.in_radius.len().max(1) as f64
    }

    pub fn points(&self) -> Vec<Point<T>> {
        (0..self.x.rows()).map(|i| Point::new(self.x.row(i).to_vec())).collect()
    }
}

fn open_unit_uniform<T: Scalar>(rng: &mut impl Rng) -> T {
    // rejection keeps the inverse CDF away from ±∞
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 && u < 1.0 {
            return c(u);
        }
    }
}

/// N×n matrix of logistic sources via the inverse CDF s = b_i·log(u/(1−u));
/// column i uses scale b_i = b·r_s^{i−1}.
pub fn sample_logistic_sources<T: Scalar>(cfg: &SourceConfig<T>, rng: &mut impl Rng) -> Mat<T> {
    let scales = cfg.scales();
    let mut out = Mat::zeros(cfg.n_samples, cfg.n);
    for row in 0..cfg.n_samples {
        for (col, &b) in scales.iter().enumerate() {
            let u = open_unit_uniform::<T>(rng);
            out[(row, col)] = b * (u / (T::one() - u)).ln();
        }
    }
    out
}

/// Random g-orthonormal frame at x0: Gaussian matrix M orthonormalized by
/// the symmetric inverse square root, J = M (Mᵀ g M)^{−1/2}.
pub fn random_g_frame<T: Scalar>(
    m: &MetricField<T>,
    x0: &Point<T>,
    rng: &mut impl Rng,
) -> Result<Frame<T>> {
    let n = m.dim();
    let g = m.metric_at(x0)?;
    let half = c::<T>(0.5);
    let three = c::<T>(3.0);
    for _attempt in 0..2 {
        let gauss = Mat::from_fn(n, n, |_, _| c::<T>(rng.sample::<f64, _>(StandardNormal)));
        let a = gauss.congruence(&g);
        match linalg::spd_inv_sqrt(&a) {
            Ok(inv_sqrt) => {
                let mut j = gauss.matmul(&inv_sqrt);
                // Newton–Schulz polish: ill-conditioned draws leave ~1e-9
                // residual in JᵀgJ; two steps drive it to machine precision
                for _ in 0..2 {
                    let e = j.congruence(&g);
                    let correction =
                        Mat::scaled_identity(n, three * half).sub(&e.scale(half));
                    j = j.matmul(&correction);
                }
                return Ok(Frame::new(j, x0.clone()));
            }
            Err(_) => continue, // rank-deficient draw: retry once
        }
    }
    Err(Error::DegenerateDraw)
}

/// Generates a paired batch from the tangent-source model. Observations are
/// x = exp_{x0}(J s); alternate-chart coordinates are attached when `chart`
/// is the manifold's alternate chart. In-radius flags compare the generating
/// tangent against the injectivity radius (per-coordinate on the torus).
pub fn generate<T: Scalar>(
    spec: &ManifoldSpec,
    cfg: &SourceConfig<T>,
    frame: &Frame<T>,
    chart: &ChartId,
    rng: &mut impl Rng,
) -> Result<SourceBatch<T>> {
    if cfg.n != spec.dim() {
        return Err(Error::Param("source dimension must match the manifold".into()));
    }
    let x0 = base_point::<T>(spec);
    let s = sample_logistic_sources(cfg, rng);
    let n = cfg.n;
    let radius = injectivity_radius::<T>(spec);
    let want_alt = chart.tag == ChartTag::Alternate;
    let mut x = Mat::zeros(cfg.n_samples, n);
    let mut z = if want_alt { Some(Mat::zeros(cfg.n_samples, spec.alternate_dim())) } else { None };
    let mut in_radius = vec![true; cfg.n_samples];
    for row in 0..cfg.n_samples {
        let srow = s.row(row);
        let v = frame.mat.matvec(srow);
        in_radius[row] = match spec.kind {
            // flat torus: the exp map is invertible iff every coordinate of
            // the tangent stays below half a period
            ManifoldKind::Torus => v.iter().all(|vi| vi.abs() < pi()),
            // at the base point ‖Js‖_g = ‖s‖₂ because Jᵀ g J = I
            _ => linalg::norm2(srow) < radius,
        };
        let pt = exp_map(spec, &x0, &Tangent::new(x0.clone(), v))?;
        x.row_mut(row).copy_from_slice(&pt.coords);
        if let Some(zm) = z.as_mut() {
            let alt = alternate_chart(spec, &pt)?;
            zm.row_mut(row).copy_from_slice(&alt);
        }
    }
    Ok(SourceBatch { s, x, z, in_radius })
}

/// Ground-truth spectrum of the normal-coordinate tensor for the logistic
/// model: λ_i = −1/(2 b_i²), ascending, with the minimum adjacent gap
/// (infinite when n = 1).
pub fn ground_truth_spectrum<T: Scalar>(cfg: &SourceConfig<T>) -> (Vec<T>, T) {
    let half = c::<T>(0.5);
    let mut lambdas: Vec<T> =
        cfg.scales().iter().map(|&b| -(half / (b * b))).collect();
    lambdas.sort_by(|a, b| a.partial_cmp(b).expect("finite spectrum"));
    let min_gap = if lambdas.len() < 2 {
        T::infinity()
    } else {
        (1..lambdas.len())
            .map(|i| (lambdas[i] - lambdas[i - 1]).abs())
            .fold(T::infinity(), |m, v| m.min(v))
    };
    (lambdas, min_gap)
}

/// Normal-coordinate tensor of the logistic model: diag(−1/(2 b_i²)).
pub fn ground_truth_normal_tensor<T: Scalar>(cfg: &SourceConfig<T>) -> Mat<T> {
    let half = c::<T>(0.5);
    let diag: Vec<T> = cfg.scales().iter().map(|&b| -(half / (b * b))).collect();
    Mat::diag(&diag)
}

/// Log-density of the tangent-source model on the intrinsic chart:
///
/// log p_x(x) = Σ_i log Logistic((J⁻¹ log_{x0} x)_i; b_i)
///            + log|det J⁻¹| + log det D log_{x0}(x),
///
/// with the log-map Jacobian determinant in closed form per geometry
/// (radial for the conformal charts, identity for torus and SPD).
pub fn tangent_source_density<T: Scalar>(
    spec: &ManifoldSpec,
    frame: &Frame<T>,
    scales: Vec<T>,
) -> Result<ScalarField<T>> {
    let spec = *spec;
    let x0 = base_point::<T>(&spec);
    let metric = crate::manifolds::intrinsic_metric(&spec);
    let j_inv = frame.inverse(&metric)?;
    let lu = linalg::lu_factor(&j_inv)?;
    let (log_det_jinv, _) = lu.log_abs_det();
    Ok(ScalarField::new(move |x: &Point<T>| {
        let v = crate::geodesics::log_map(&spec, &x0, x)?;
        let s = j_inv.matvec(&v.comps);
        let mut acc = log_det_jinv;
        for (&si, &b) in s.iter().zip(&scales) {
            acc = acc + logistic_log_density(si, b);
        }
        acc = acc + log_det_log_map(&spec, x)?;
        Ok(acc)
    }))
}

/// log det of the Jacobian of log_{x0} at x, base point at the chart origin.
///
/// Sphere: (atan r / r)^{n−1} / (1+r²); hyperbolic: (atanh r / r)^{n−1} /
/// (1−r²); torus and SPD: 1 (the chart log map is the identity there).
fn log_det_log_map<T: Scalar>(spec: &ManifoldSpec, x: &Point<T>) -> Result<T> {
    let n = c::<T>(spec.dim() as f64);
    let r = linalg::norm2(&x.coords);
    let small = c::<T>(1e-8);
    match spec.kind {
        ManifoldKind::Torus | ManifoldKind::Spd => Ok(T::zero()),
        ManifoldKind::Sphere => {
            if r < small {
                // atan(r)/r = 1 − r²/3 + O(r⁴)
                let r2 = r * r;
                Ok((n - T::one()) * (-r2 / c(3.0)) - (T::one() + r2).ln())
            } else {
                Ok((n - T::one()) * (r.atan() / r).ln() - (T::one() + r * r).ln())
            }
        }
        ManifoldKind::Hyperbolic => {
            if r < small {
                let r2 = r * r;
                Ok((n - T::one()) * (r2 / c(3.0)) - (T::one() - r2).ln())
            } else {
                Ok((n - T::one()) * (r.atanh() / r).ln() - (T::one() - r * r).ln())
            }
        }
    }
}
