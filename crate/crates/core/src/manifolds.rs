//! The four closed-form geometries: sphere, hyperbolic space, flat torus, and
//! SPD matrices, each with an intrinsic chart, its metric, a base point at the
//! chart origin, and an alternate embedding chart for baseline inputs.

use crate::error::{Error, Result};
use crate::geometry::{ChristoffelTensor, MetricField, Point};
use crate::linalg::{self, Mat};
use crate::scalar::{c, pi, tau, Scalar};

/// Geometry kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ManifoldKind {
    Sphere,
    Hyperbolic,
    Torus,
    Spd,
}

/// Which of a manifold's two benchmark charts a coordinate array lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChartTag {
    Intrinsic,
    Alternate,
}

/// Chart identifier: intrinsic/alternate tag plus the canonical chart name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChartId {
    pub tag: ChartTag,
    pub name: &'static str,
}

/// Manifold with a fixed intrinsic dimension; SPD stores the matrix size `p`
/// with intrinsic dimension p(p+1)/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ManifoldSpec {
    pub kind: ManifoldKind,
    intrinsic_dim: usize,
    spd_size: usize,
}

impl ManifoldSpec {
    pub fn sphere(n: usize) -> Self {
        assert!(n >= 1);
        ManifoldSpec { kind: ManifoldKind::Sphere, intrinsic_dim: n, spd_size: 0 }
    }

    pub fn hyperbolic(n: usize) -> Self {
        assert!(n >= 1);
        ManifoldSpec { kind: ManifoldKind::Hyperbolic, intrinsic_dim: n, spd_size: 0 }
    }

    pub fn torus(n: usize) -> Self {
        assert!(n >= 1);
        ManifoldSpec { kind: ManifoldKind::Torus, intrinsic_dim: n, spd_size: 0 }
    }

    pub fn spd(p: usize) -> Self {
        assert!(p >= 2);
        ManifoldSpec { kind: ManifoldKind::Spd, intrinsic_dim: p * (p + 1) / 2, spd_size: p }
    }

    /// Parses a canonical CLI name.
    pub fn from_name(name: &str, n_target: usize) -> Result<Self> {
        match name {
            "sphere" => Ok(ManifoldSpec::sphere(n_target)),
            "hyperbolic" => Ok(ManifoldSpec::hyperbolic(n_target)),
            "torus" => Ok(ManifoldSpec::torus(n_target)),
            "spd" => Ok(ManifoldSpec::spd(spd_size_for_target(n_target))),
            other => Err(Error::Param(format!(
                "unknown manifold '{}'; expected sphere|hyperbolic|torus|spd",
                other
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ManifoldKind::Sphere => "sphere",
            ManifoldKind::Hyperbolic => "hyperbolic",
            ManifoldKind::Torus => "torus",
            ManifoldKind::Spd => "spd",
        }
    }

    pub fn dim(&self) -> usize {
        self.intrinsic_dim
    }

    /// SPD matrix size `p`; zero for the other kinds.
    pub fn spd_size(&self) -> usize {
        self.spd_size
    }

    pub fn intrinsic_chart(&self) -> ChartId {
        let name = match self.kind {
            ManifoldKind::Sphere => "stereographic",
            ManifoldKind::Hyperbolic => "poincare",
            ManifoldKind::Torus => "angle",
            ManifoldKind::Spd => "log-euclidean",
        };
        ChartId { tag: ChartTag::Intrinsic, name }
    }

    pub fn alternate_chart_id(&self) -> ChartId {
        let name = match self.kind {
            ManifoldKind::Sphere => "ambient",
            ManifoldKind::Hyperbolic => "lorentz",
            ManifoldKind::Torus => "sincos",
            ManifoldKind::Spd => "vech",
        };
        ChartId { tag: ChartTag::Alternate, name }
    }

    /// Resolves a chart name against this manifold.
    pub fn chart_from_name(&self, name: &str) -> Result<ChartId> {
        if name == self.intrinsic_chart().name {
            Ok(self.intrinsic_chart())
        } else if name == self.alternate_chart_id().name {
            Ok(self.alternate_chart_id())
        } else {
            Err(Error::Param(format!(
                "chart '{}' does not belong to manifold '{}'",
                name,
                self.name()
            )))
        }
    }

    /// Dimension of the alternate chart output.
    pub fn alternate_dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Sphere | ManifoldKind::Hyperbolic => self.intrinsic_dim + 1,
            ManifoldKind::Torus => 2 * self.intrinsic_dim,
            ManifoldKind::Spd => self.intrinsic_dim,
        }
    }
}

/// Smallest p with p(p+1)/2 ≥ n_target.
pub fn spd_size_for_target(n_target: usize) -> usize {
    let mut p = 2;
    while p * (p + 1) / 2 < n_target {
        p += 1;
    }
    p
}

/// Base point: the chart origin for all four geometries (the SPD base is
/// P₀ = I_p, whose log-Euclidean coordinate is the zero vector).
pub fn base_point<T: Scalar>(spec: &ManifoldSpec) -> Point<T> {
    Point::zeros(spec.dim())
}

/// Wraps an angle to (−π, π]; +π maps to itself.
pub fn wrap_angle<T: Scalar>(x: T) -> T {
    let t = tau::<T>();
    let mut y = x % t;
    if y > pi() {
        y = y - t;
    } else if y <= -pi::<T>() {
        y = y + t;
    }
    y
}

fn sq_norm<T: Scalar>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum()
}

/// Poincaré chart domain guard.
pub(crate) fn check_poincare_domain<T: Scalar>(x: &Point<T>) -> Result<()> {
    let r = sq_norm(&x.coords).sqrt();
    if r >= T::one() - c(1e-9) {
        return Err(Error::Domain(format!(
            "Poincaré chart requires ‖x‖ < 1 − 1e-9, got ‖x‖ = {}",
            r
        )));
    }
    Ok(())
}

fn conformal_christoffel<T: Scalar>(n: usize, dphi: &[T]) -> ChristoffelTensor<T> {
    ChristoffelTensor::from_fn(n, |k, i, j| {
        let mut v = T::zero();
        if k == i {
            v = v + dphi[j];
        }
        if k == j {
            v = v + dphi[i];
        }
        if i == j {
            v = v - dphi[k];
        }
        v
    })
}

/// Intrinsic-chart metric for the geometry.
///
/// Sphere: 4(1+‖x‖²)⁻² I (stereographic, unit round sphere).
/// Hyperbolic: 4(1−‖x‖²)⁻² I (Poincaré ball, unit curvature).
/// Torus: I (angle chart).
/// SPD: g_ij(x) = tr(P⁻¹E_i P⁻¹E_j) with P(x) = expm(unvech(x)) in the
/// scaled vech basis.
///
/// Sphere, hyperbolic, and torus carry analytic Christoffel providers; SPD
/// uses the finite-difference path.
pub fn intrinsic_metric<T: Scalar>(spec: &ManifoldSpec) -> MetricField<T> {
    let n = spec.dim();
    match spec.kind {
        ManifoldKind::Sphere => MetricField::new(n, move |x: &Point<T>| {
            let r2 = sq_norm(&x.coords);
            let den = T::one() + r2;
            Ok(Mat::scaled_identity(n, c::<T>(4.0) / (den * den)))
        })
        .with_christoffel(move |x: &Point<T>| {
            // φ = log 2 − log(1+‖x‖²) → ∂_iφ = −2x_i/(1+‖x‖²)
            let r2 = sq_norm(&x.coords);
            let den = T::one() + r2;
            let dphi: Vec<T> = x.coords.iter().map(|&v| -(c::<T>(2.0) * v) / den).collect();
            Ok(conformal_christoffel(n, &dphi))
        }),
        ManifoldKind::Hyperbolic => MetricField::new(n, move |x: &Point<T>| {
            check_poincare_domain(x)?;
            let r2 = sq_norm(&x.coords);
            let den = T::one() - r2;
            Ok(Mat::scaled_identity(n, c::<T>(4.0) / (den * den)))
        })
        .with_christoffel(move |x: &Point<T>| {
            check_poincare_domain(x)?;
            // φ = log 2 − log(1−‖x‖²) → ∂_iφ = 2x_i/(1−‖x‖²)
            let r2 = sq_norm(&x.coords);
            let den = T::one() - r2;
            let dphi: Vec<T> = x.coords.iter().map(|&v| c::<T>(2.0) * v / den).collect();
            Ok(conformal_christoffel(n, &dphi))
        }),
        // angle chart wraps rather than rejects, so the metric accepts any x
        ManifoldKind::Torus => MetricField::new(n, move |_: &Point<T>| Ok(Mat::identity(n)))
            .with_christoffel(move |_| Ok(ChristoffelTensor::zeros(n))),
        ManifoldKind::Spd => {
            let p = spec.spd_size();
            MetricField::new(n, move |x: &Point<T>| spd_metric_at(p, x))
        }
    }
}

// ---------------------------------------------------------------------------
// SPD chart machinery (scaled vech basis)
// ---------------------------------------------------------------------------

/// Lower-triangle index pairs in column-major order, diagonal entry first
/// within each column: (0,0), (1,0), …, (p−1,0), (1,1), (2,1), …
pub fn vech_index_pairs(p: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(p * (p + 1) / 2);
    for col in 0..p {
        for row in col..p {
            pairs.push((row, col));
        }
    }
    pairs
}

/// Symmetric matrix from scaled-vech coordinates: diagonal weight 1,
/// off-diagonal entries get x/√2 on both symmetric slots.
pub fn unvech_scaled<T: Scalar>(p: usize, x: &[T]) -> Mat<T> {
    let pairs = vech_index_pairs(p);
    assert_eq!(pairs.len(), x.len(), "coordinate length must be p(p+1)/2");
    let inv_sqrt2 = T::one() / c::<T>(2.0).sqrt();
    let mut s = Mat::zeros(p, p);
    for (&(r, cidx), &v) in pairs.iter().zip(x) {
        if r == cidx {
            s[(r, cidx)] = v;
        } else {
            s[(r, cidx)] = v * inv_sqrt2;
            s[(cidx, r)] = v * inv_sqrt2;
        }
    }
    s
}

/// Scaled-vech coordinates of a symmetric matrix; inverse of [`unvech_scaled`].
pub fn vech_scaled<T: Scalar>(s: &Mat<T>) -> Vec<T> {
    let p = s.rows();
    let sqrt2 = c::<T>(2.0).sqrt();
    vech_index_pairs(p)
        .into_iter()
        .map(|(r, c_)| if r == c_ { s[(r, c_)] } else { s[(r, c_)] * sqrt2 })
        .collect()
}

/// Plain vech (stacked lower-triangle entries, no scaling); used by the
/// SPD alternate chart.
pub fn vech_plain<T: Scalar>(s: &Mat<T>) -> Vec<T> {
    vech_index_pairs(s.rows()).into_iter().map(|(r, c_)| s[(r, c_)]).collect()
}

/// Divided-difference matrix F_{kl} = (e^{λ_k} − e^{λ_l})/(λ_k − λ_l),
/// evaluated stably as e^{(λ_k+λ_l)/2}·sinch((λ_k−λ_l)/2).
fn exp_divided_differences<T: Scalar>(w: &[T]) -> Mat<T> {
    let n = w.len();
    let half = c::<T>(0.5);
    Mat::from_fn(n, n, |k, l| {
        let mid = (w[k] + w[l]) * half;
        let d = (w[k] - w[l]) * half;
        let sinch = if d.abs() < c(1e-5) {
            let d2 = d * d;
            T::one() + d2 / c(6.0) + d2 * d2 / c(120.0)
        } else {
            d.sinh() / d
        };
        mid.exp() * sinch
    })
}

/// SPD chart data at x: P = expm(unvech(x)), its inverse, and the coordinate
/// basis vectors E_i = ∂P/∂x_i (Fréchet derivatives of expm along the scaled
/// vech basis).
struct SpdChartData<T> {
    p_inv: Mat<T>,
    basis: Vec<Mat<T>>,
}

fn spd_chart_data<T: Scalar>(p: usize, x: &Point<T>) -> Result<SpdChartData<T>> {
    let s = unvech_scaled(p, &x.coords);
    let (w, v) = linalg::sym_eigen(&s)?;
    let vt = v.transpose();
    let f = exp_divided_differences(&w);
    let exp_neg: Vec<T> = w.iter().map(|&wi| (-wi).exp()).collect();
    let p_inv = {
        let mut m = Mat::zeros(p, p);
        for i in 0..p {
            for j in 0..p {
                let mut acc = T::zero();
                for k in 0..p {
                    acc = acc + v[(i, k)] * exp_neg[k] * v[(j, k)];
                }
                m[(i, j)] = acc;
            }
        }
        m.symmetrize()
    };
    let pairs = vech_index_pairs(p);
    let inv_sqrt2 = T::one() / c::<T>(2.0).sqrt();
    let mut basis = Vec::with_capacity(pairs.len());
    for &(r, cidx) in &pairs {
        let mut b = Mat::zeros(p, p);
        if r == cidx {
            b[(r, cidx)] = T::one();
        } else {
            b[(r, cidx)] = inv_sqrt2;
            b[(cidx, r)] = inv_sqrt2;
        }
        // Daleckii–Krein: Dexp_S[B] = V (F ∘ (Vᵀ B V)) Vᵀ
        let inner = vt.matmul(&b).matmul(&v);
        let mut hadamard = Mat::zeros(p, p);
        for i in 0..p {
            for j in 0..p {
                hadamard[(i, j)] = inner[(i, j)] * f[(i, j)];
            }
        }
        basis.push(v.matmul(&hadamard).matmul(&vt).symmetrize());
    }
    Ok(SpdChartData { p_inv, basis })
}

/// Affine-invariant metric in the scaled vech chart:
/// g_ij(x) = tr(P⁻¹ E_i P⁻¹ E_j).
fn spd_metric_at<T: Scalar>(p: usize, x: &Point<T>) -> Result<Mat<T>> {
    let data = spd_chart_data(p, x)?;
    let n = data.basis.len();
    let lifted: Vec<Mat<T>> = data.basis.iter().map(|e| data.p_inv.matmul(e)).collect();
    let mut g = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = lifted[i].matmul(&lifted[j]).trace();
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

/// Coordinate components of a symmetric tangent matrix `u_mat` at chart point
/// x: solves Σ_i u_i E_i(x) = U via the inverse Fréchet derivative.
pub fn spd_tangent_coords<T: Scalar>(p: usize, x: &Point<T>, u_mat: &Mat<T>) -> Result<Vec<T>> {
    let s = unvech_scaled(p, &x.coords);
    let (w, v) = linalg::sym_eigen(&s)?;
    let vt = v.transpose();
    let f = exp_divided_differences(&w);
    let inner = vt.matmul(u_mat).matmul(&v);
    let mut quotient = Mat::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            quotient[(i, j)] = inner[(i, j)] / f[(i, j)];
        }
    }
    let raw = v.matmul(&quotient).matmul(&vt).symmetrize();
    Ok(vech_scaled(&raw))
}

/// Tangent matrix Σ_i v_i E_i(x) for coordinate components `v`.
pub fn spd_tangent_matrix<T: Scalar>(p: usize, x: &Point<T>, v: &[T]) -> Result<Mat<T>> {
    let s = unvech_scaled(p, &x.coords);
    let (w, q) = linalg::sym_eigen(&s)?;
    let qt = q.transpose();
    let f = exp_divided_differences(&w);
    let b = unvech_scaled(p, v);
    let inner = qt.matmul(&b).matmul(&q);
    let mut hadamard = Mat::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            hadamard[(i, j)] = inner[(i, j)] * f[(i, j)];
        }
    }
    Ok(q.matmul(&hadamard).matmul(&qt).symmetrize())
}

/// SPD matrix P(x) = expm(unvech(x)).
pub fn spd_point_matrix<T: Scalar>(p: usize, x: &Point<T>) -> Result<Mat<T>> {
    linalg::sym_expm(&unvech_scaled(p, &x.coords))
}

// ---------------------------------------------------------------------------
// Alternate charts
// ---------------------------------------------------------------------------

/// Maps an intrinsic-chart point into the manifold's alternate chart.
///
/// Sphere: ambient embedding into R^{n+1}; hyperbolic: Lorentz embedding into
/// R^{n+1}; torus: sine–cosine embedding into R^{2n}; SPD: plain vech of the
/// matrix exponential.
pub fn alternate_chart<T: Scalar>(spec: &ManifoldSpec, x: &Point<T>) -> Result<Vec<T>> {
    if x.dim() != spec.dim() {
        return Err(Error::Param("point dimension does not match manifold".into()));
    }
    match spec.kind {
        ManifoldKind::Sphere => {
            let r2 = sq_norm(&x.coords);
            let den = T::one() + r2;
            let two = c::<T>(2.0);
            let mut z: Vec<T> = x.coords.iter().map(|&v| two * v / den).collect();
            z.push((r2 - T::one()) / den);
            Ok(z)
        }
        ManifoldKind::Hyperbolic => {
            check_poincare_domain(x)?;
            let r2 = sq_norm(&x.coords);
            let den = T::one() - r2;
            let two = c::<T>(2.0);
            let mut z: Vec<T> = x.coords.iter().map(|&v| two * v / den).collect();
            z.push((T::one() + r2) / den);
            Ok(z)
        }
        ManifoldKind::Torus => {
            let mut z = Vec::with_capacity(2 * x.dim());
            for &v in &x.coords {
                z.push(v.sin());
                z.push(v.cos());
            }
            Ok(z)
        }
        ManifoldKind::Spd => {
            let pm = spd_point_matrix(spec.spd_size(), x)?;
            Ok(vech_plain(&pm))
        }
    }
}

/// The eight (manifold, chart) benchmark rows in canonical table order, with
/// sphere/hyperbolic/torus at `n_target` and SPD at the smallest p whose
/// intrinsic dimension reaches the target.
pub fn table_rows(n_target: usize) -> Vec<(ManifoldSpec, ChartId)> {
    let sphere = ManifoldSpec::sphere(n_target);
    let hyper = ManifoldSpec::hyperbolic(n_target);
    let torus = ManifoldSpec::torus(n_target);
    let spd = ManifoldSpec::spd(spd_size_for_target(n_target));
    vec![
        (sphere, sphere.alternate_chart_id()),
        (sphere, sphere.intrinsic_chart()),
        (hyper, hyper.alternate_chart_id()),
        (hyper, hyper.intrinsic_chart()),
        (torus, torus.intrinsic_chart()),
        (torus, torus.alternate_chart_id()),
        (spd, spd.intrinsic_chart()),
        (spd, spd.alternate_chart_id()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(coords: &[f64]) -> Point<f64> {
        Point::new(coords.to_vec())
    }

    #[test]
    fn base_points_are_zero() {
        assert_eq!(base_point::<f64>(&ManifoldSpec::sphere(4)).coords, vec![0.0; 4]);
        assert_eq!(base_point::<f64>(&ManifoldSpec::spd(2)).coords, vec![0.0; 3]);
        assert_eq!(base_point::<f64>(&ManifoldSpec::torus(2)).coords, vec![0.0; 2]);
    }

    #[test]
    fn intrinsic_metric_examples() {
        let torus = intrinsic_metric::<f64>(&ManifoldSpec::torus(3));
        let g = torus.metric_at(&pt(&[2.0, -1.0, 0.5])).unwrap();
        assert!(g.sub(&Mat::identity(3)).max_norm() == 0.0);

        let spd = intrinsic_metric::<f64>(&ManifoldSpec::spd(2));
        let g = spd.metric_at(&Point::zeros(3)).unwrap();
        assert!(g.sub(&Mat::identity(3)).max_norm() < 1e-12);

        let hyp = intrinsic_metric::<f64>(&ManifoldSpec::hyperbolic(2));
        let g = hyp.metric_at(&pt(&[0.5, 0.0])).unwrap();
        assert!(g.sub(&Mat::scaled_identity(2, 64.0 / 9.0)).max_norm() < 1e-12);
    }

    #[test]
    fn metric_at_base_matches_conformal_factor() {
        for (spec, factor) in [
            (ManifoldSpec::sphere(3), 4.0),
            (ManifoldSpec::hyperbolic(3), 4.0),
            (ManifoldSpec::torus(3), 1.0),
            (ManifoldSpec::spd(3), 1.0),
        ] {
            let m = intrinsic_metric::<f64>(&spec);
            let g = m.metric_at(&base_point(&spec)).unwrap();
            let expect = Mat::scaled_identity(spec.dim(), factor);
            assert!(g.sub(&expect).max_norm() < 1e-12, "{:?}", spec.kind);
        }
    }

    #[test]
    fn alternate_chart_examples() {
        let sphere = ManifoldSpec::sphere(2);
        let z = alternate_chart(&sphere, &Point::<f64>::zeros(2)).unwrap();
        assert_eq!(z.len(), 3);
        assert!((z[0]).abs() < 1e-15 && (z[1]).abs() < 1e-15 && (z[2] + 1.0).abs() < 1e-15);

        let torus = ManifoldSpec::torus(1);
        let z = alternate_chart(&torus, &pt(&[std::f64::consts::FRAC_PI_2])).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-15 && z[1].abs() < 1e-15);

        let hyp = ManifoldSpec::hyperbolic(2);
        let z = alternate_chart(&hyp, &Point::<f64>::zeros(2)).unwrap();
        assert!((z[2] - 1.0).abs() < 1e-15 && z[0].abs() < 1e-15);
    }

    #[test]
    fn sphere_chart_lands_on_unit_sphere() {
        let spec = ManifoldSpec::sphere(3);
        for k in 0..40 {
            let x = pt(&[(k as f64 * 0.37).sin() * 2.0, (k as f64 * 0.11).cos(), k as f64 * 0.05]);
            let z = alternate_chart(&spec, &x).unwrap();
            let norm: f64 = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lorentz_chart_satisfies_hyperboloid_constraint() {
        let spec = ManifoldSpec::hyperbolic(3);
        for k in 0..40 {
            let s = 0.9 * (k as f64 / 40.0);
            let x = pt(&[s * (k as f64).cos() * 0.5, s * 0.4, s * 0.3]);
            let z = alternate_chart(&spec, &x).unwrap();
            let spatial: f64 = z[..3].iter().map(|v| v * v).sum();
            let constraint = z[3] * z[3] - spatial;
            assert!((constraint - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn sincos_chart_pairs_are_unit() {
        let spec = ManifoldSpec::torus(4);
        let x = pt(&[0.3, -2.9, 1.7, 3.1]);
        let z = alternate_chart(&spec, &x).unwrap();
        for pair in z.chunks(2) {
            assert!((pair[0] * pair[0] + pair[1] * pair[1] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn spd_chart_output_is_positive_definite() {
        let spec = ManifoldSpec::spd(3);
        let x = pt(&[0.4, -0.6, 0.2, 0.9, -0.1, -0.5]);
        let z = alternate_chart(&spec, &x).unwrap();
        // un-vech and check eigenvalues
        let pairs = vech_index_pairs(3);
        let mut m = Mat::zeros(3, 3);
        for (&(r, c_), &v) in pairs.iter().zip(&z) {
            m[(r, c_)] = v;
            m[(c_, r)] = v;
        }
        let (w, _) = linalg::sym_eigen(&m).unwrap();
        assert!(w[0] > 0.0);
    }

    #[test]
    fn spd_metric_matches_affine_invariant_inner_product() {
        let p = 3;
        let spec = ManifoldSpec::spd(p);
        let metric = intrinsic_metric::<f64>(&spec);
        let mut seed = 99u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for _ in 0..10 {
            let x = Point::new((0..spec.dim()).map(|_| next() * 0.6).collect::<Vec<f64>>());
            let g = metric.metric_at(&x).unwrap();
            let u_sym = Mat::from_fn(p, p, |_, _| next()).symmetrize();
            let v_sym = Mat::from_fn(p, p, |_, _| next()).symmetrize();
            let u = spd_tangent_coords(p, &x, &u_sym).unwrap();
            let v = spd_tangent_coords(p, &x, &v_sym).unwrap();
            // coordinate inner product uᵀ g v
            let gv = g.matvec(&v);
            let coord: f64 = linalg::dot(&u, &gv);
            // affine-invariant tr(P⁻¹ U P⁻¹ V)
            let pm = spd_point_matrix(p, &x).unwrap();
            let p_inv = linalg::inverse(&pm).unwrap();
            let intrinsic = p_inv.matmul(&u_sym).matmul(&p_inv).matmul(&v_sym).trace();
            assert!(
                (coord - intrinsic).abs() < 1e-8 * (1.0 + intrinsic.abs()),
                "coord {} vs intrinsic {}",
                coord,
                intrinsic
            );
        }
    }

    #[test]
    fn spd_tangent_roundtrip() {
        let p = 3;
        let x = pt(&[0.2, -0.4, 0.7, 0.1, 0.3, -0.2]);
        let v = vec![0.5, -0.3, 0.8, 0.2, -0.6, 0.4];
        let mat = spd_tangent_matrix(p, &x, &v).unwrap();
        let back = spd_tangent_coords(p, &x, &mat).unwrap();
        for (a, b) in back.iter().zip(&v) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn table_rows_order() {
        let rows = table_rows(8);
        assert_eq!(rows.len(), 8);
        assert_eq!(rows[0].0.kind, ManifoldKind::Sphere);
        assert_eq!(rows[0].1.name, "ambient");
        assert_eq!(rows[5].0.kind, ManifoldKind::Torus);
        assert_eq!(rows[5].1.name, "sincos");
        assert_eq!(rows[7].0.kind, ManifoldKind::Spd);
        assert_eq!(rows[7].1.name, "vech");
        // desk scale: SPD p=4 → intrinsic dim 10
        assert_eq!(rows[7].0.spd_size(), 4);
        assert_eq!(rows[7].0.dim(), 10);
        // paper-scale profile dimensions
        assert_eq!(spd_size_for_target(32), 8);
        assert_eq!(spd_size_for_target(64), 11);
    }

    #[test]
    fn wrap_angle_convention() {
        let pi = std::f64::consts::PI;
        assert!((wrap_angle(pi) - pi).abs() < 1e-15);
        assert!((wrap_angle(-pi) - pi).abs() < 1e-15);
        assert!((wrap_angle(3.5) - (3.5 - 2.0 * pi)).abs() < 1e-15);
        assert!((wrap_angle(3.0f64) - 3.0).abs() < 1e-15);
        assert!((wrap_angle(-3.5) - (2.0 * pi - 3.5)).abs() < 1e-15);
    }
}
