//! Exponential and logarithmic maps.
//!
//! Each benchmark geometry has analytic maps at its base point (the torus and
//! SPD charts everywhere); arbitrary metric fields fall back to RK4
//! integration of the geodesic equation and Newton shooting for the inverse.

use crate::error::{Error, Result};
use crate::geometry::{christoffel, fd_step, ChristoffelTensor, MetricField, Point, Tangent};
use crate::linalg::{self, Mat};
use crate::manifolds::{self, wrap_angle, ManifoldKind, ManifoldSpec};
use crate::scalar::{c, pi, Scalar};

/// Integrator/shooting configuration for the generic maps.
#[derive(Debug, Clone, Copy)]
pub struct GeodesicSolverConfig<T> {
    pub rk4_steps: usize,
    pub shooting_max_iters: usize,
    pub shooting_tol: T,
}

impl<T: Scalar> Default for GeodesicSolverConfig<T> {
    fn default() -> Self {
        GeodesicSolverConfig { rk4_steps: 100, shooting_max_iters: 50, shooting_tol: c(1e-10) }
    }
}

fn is_origin<T: Scalar>(x: &Point<T>) -> bool {
    x.coords.iter().all(|&v| v == T::zero())
}

/// Largest geodesic-ball radius on which the exponential map is invertible.
/// For the torus the radius applies per coordinate.
pub fn injectivity_radius<T: Scalar>(spec: &ManifoldSpec) -> T {
    match spec.kind {
        ManifoldKind::Sphere | ManifoldKind::Torus => pi(),
        ManifoldKind::Hyperbolic | ManifoldKind::Spd => T::infinity(),
    }
}

/// Exponential map on a benchmark geometry.
///
/// Analytic forms hold at the base point for the sphere and hyperbolic space
/// (everywhere for the torus and SPD); other base points use the ODE path.
pub fn exp_map<T: Scalar>(spec: &ManifoldSpec, x0: &Point<T>, v: &Tangent<T>) -> Result<Point<T>> {
    if v.comps.iter().any(|c| !c.is_finite()) {
        return Err(Error::Param("tangent components must be finite".into()));
    }
    match spec.kind {
        ManifoldKind::Torus => {
            let coords = x0
                .coords
                .iter()
                .zip(&v.comps)
                .map(|(&x, &d)| wrap_angle(x + d))
                .collect();
            Ok(Point::new(coords))
        }
        ManifoldKind::Sphere if is_origin(x0) => {
            // exp₀(v) = tan(‖v‖_g/2) · v/‖v‖_E with ‖v‖_g = 2‖v‖_E
            let r = linalg::norm2(&v.comps);
            if r == T::zero() {
                return Ok(x0.clone());
            }
            let scale = r.tan() / r;
            Ok(Point::new(v.comps.iter().map(|&c| c * scale).collect()))
        }
        ManifoldKind::Hyperbolic if is_origin(x0) => {
            // exp₀(v) = tanh(‖v‖_g/2) · v/‖v‖_E with ‖v‖_g = 2‖v‖_E
            let r = linalg::norm2(&v.comps);
            if r == T::zero() {
                return Ok(x0.clone());
            }
            // cap inside the chart domain (‖x‖ < 1 − 1e-9) so saturated
            // tangents still land on valid chart points
            let cap = T::one() - c(2e-9);
            let t = r.tanh().min(cap);
            let scale = t / r;
            Ok(Point::new(v.comps.iter().map(|&c| c * scale).collect()))
        }
        ManifoldKind::Spd => spd_exp(spec.spd_size(), x0, &v.comps),
        _ => {
            let m = manifolds::intrinsic_metric(spec);
            generic_exp_ode(&m, x0, v, &GeodesicSolverConfig::default())
        }
    }
}

/// Logarithmic map on a benchmark geometry; inverse of [`exp_map`] inside the
/// injectivity radius.
pub fn log_map<T: Scalar>(spec: &ManifoldSpec, x0: &Point<T>, x: &Point<T>) -> Result<Tangent<T>> {
    match spec.kind {
        ManifoldKind::Torus => {
            let mut comps = Vec::with_capacity(x.dim());
            for (&a, &b) in x.coords.iter().zip(&x0.coords) {
                let d = wrap_angle(a - b);
                if d.abs() == pi() {
                    // antipodal in this coordinate: both preimages equidistant
                    return Err(Error::Radius(
                        "torus coordinate difference is exactly π".into(),
                    ));
                }
                comps.push(d);
            }
            Ok(Tangent::new(x0.clone(), comps))
        }
        ManifoldKind::Sphere if is_origin(x0) => {
            let r = linalg::norm2(&x.coords);
            if r == T::zero() {
                return Ok(Tangent::new(x0.clone(), vec![T::zero(); x.dim()]));
            }
            let scale = r.atan() / r;
            Ok(Tangent::new(x0.clone(), x.coords.iter().map(|&c| c * scale).collect()))
        }
        ManifoldKind::Hyperbolic if is_origin(x0) => {
            let r = linalg::norm2(&x.coords);
            if r == T::zero() {
                return Ok(Tangent::new(x0.clone(), vec![T::zero(); x.dim()]));
            }
            // clamp the radius so boundary rounding cannot produce ±∞
            let cap = T::one() - c(1e-16);
            let scale = r.min(cap).atanh() / r;
            Ok(Tangent::new(x0.clone(), x.coords.iter().map(|&c| c * scale).collect()))
        }
        ManifoldKind::Spd => spd_log(spec.spd_size(), x0, x),
        _ => {
            let m = manifolds::intrinsic_metric(spec);
            generic_log_shoot(&m, x0, x, &GeodesicSolverConfig::default())
        }
    }
}

// ---------------------------------------------------------------------------
// SPD closed forms
// ---------------------------------------------------------------------------

/// exp_P(V) = P^{1/2} expm(P^{-1/2} V P^{-1/2}) P^{1/2} pushed through the
/// log-Euclidean chart; at the base point x0 = 0 this reduces to x = v.
fn spd_exp<T: Scalar>(p: usize, x0: &Point<T>, v: &[T]) -> Result<Point<T>> {
    if is_origin(x0) {
        // geodesics through I are straight lines in the log chart
        return Ok(Point::new(v.to_vec()));
    }
    let p0 = manifolds::spd_point_matrix(p, x0)?;
    let v_mat = manifolds::spd_tangent_matrix(p, x0, v)?;
    let sqrt = linalg::spd_sqrt(&p0)?;
    let inv_sqrt = linalg::spd_inv_sqrt(&p0)?;
    let inner = inv_sqrt.matmul(&v_mat).matmul(&inv_sqrt).symmetrize();
    let p1 = sqrt.matmul(&linalg::sym_expm(&inner)?).matmul(&sqrt).symmetrize();
    let log_p1 = linalg::spd_logm(&p1)?;
    Ok(Point::new(manifolds::vech_scaled(&log_p1)))
}

fn spd_log<T: Scalar>(p: usize, x0: &Point<T>, x: &Point<T>) -> Result<Tangent<T>> {
    if is_origin(x0) {
        return Ok(Tangent::new(x0.clone(), x.coords.clone()));
    }
    let p0 = manifolds::spd_point_matrix(p, x0)?;
    let p1 = manifolds::spd_point_matrix(p, x)?;
    let sqrt = linalg::spd_sqrt(&p0)?;
    let inv_sqrt = linalg::spd_inv_sqrt(&p0)?;
    let inner = inv_sqrt.matmul(&p1).matmul(&inv_sqrt).symmetrize();
    let v_mat = sqrt.matmul(&linalg::spd_logm(&inner)?).matmul(&sqrt).symmetrize();
    let comps = manifolds::spd_tangent_coords(p, x0, &v_mat)?;
    Ok(Tangent::new(x0.clone(), comps))
}

// ---------------------------------------------------------------------------
// Generic ODE / shooting paths
// ---------------------------------------------------------------------------

fn geodesic_accel<T: Scalar>(
    m: &MetricField<T>,
    x: &Point<T>,
    u: &[T],
) -> Result<Vec<T>> {
    let gamma: ChristoffelTensor<T> = christoffel(m, x, fd_step(x))?;
    let n = u.len();
    let mut acc = vec![T::zero(); n];
    for k in 0..n {
        let gk = gamma.upper(k);
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                s = s + gk[(i, j)] * u[i] * u[j];
            }
        }
        acc[k] = -s;
    }
    Ok(acc)
}

/// RK4 integration of ẍ^k + Γ^k_{ij} ẋ^i ẋ^j = 0 over t ∈ [0,1], returning
/// the full (position, velocity) trajectory including the initial state.
pub fn generic_exp_ode_trace<T: Scalar>(
    m: &MetricField<T>,
    x0: &Point<T>,
    v: &Tangent<T>,
    cfg: &GeodesicSolverConfig<T>,
) -> Result<Vec<(Point<T>, Vec<T>)>> {
    let n = x0.dim();
    let steps = cfg.rk4_steps.max(1);
    let h = T::one() / c(steps as f64);
    let mut x = x0.coords.clone();
    let mut u = v.comps.clone();
    let mut trace = Vec::with_capacity(steps + 1);
    trace.push((Point::new(x.clone()), u.clone()));
    let two = c::<T>(2.0);
    let six = c::<T>(6.0);
    for step in 0..steps {
        let eval = |xs: &[T], us: &[T]| -> Result<(Vec<T>, Vec<T>)> {
            let acc = geodesic_accel(m, &Point::new(xs.to_vec()), us)?;
            Ok((us.to_vec(), acc))
        };
        let (k1x, k1u) = eval(&x, &u)?;
        let x2: Vec<T> = x.iter().zip(&k1x).map(|(&a, &b)| a + b * h / two).collect();
        let u2: Vec<T> = u.iter().zip(&k1u).map(|(&a, &b)| a + b * h / two).collect();
        let (k2x, k2u) = eval(&x2, &u2)?;
        let x3: Vec<T> = x.iter().zip(&k2x).map(|(&a, &b)| a + b * h / two).collect();
        let u3: Vec<T> = u.iter().zip(&k2u).map(|(&a, &b)| a + b * h / two).collect();
        let (k3x, k3u) = eval(&x3, &u3)?;
        let x4: Vec<T> = x.iter().zip(&k3x).map(|(&a, &b)| a + b * h).collect();
        let u4: Vec<T> = u.iter().zip(&k3u).map(|(&a, &b)| a + b * h).collect();
        let (k4x, k4u) = eval(&x4, &u4)?;
        for i in 0..n {
            x[i] = x[i] + h / six * (k1x[i] + two * k2x[i] + two * k3x[i] + k4x[i]);
            u[i] = u[i] + h / six * (k1u[i] + two * k2u[i] + two * k3u[i] + k4u[i]);
        }
        if x.iter().any(|v| !v.is_finite()) || u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration { step });
        }
        trace.push((Point::new(x.clone()), u.clone()));
    }
    Ok(trace)
}

/// Endpoint of the RK4 geodesic; see [`generic_exp_ode_trace`].
pub fn generic_exp_ode<T: Scalar>(
    m: &MetricField<T>,
    x0: &Point<T>,
    v: &Tangent<T>,
    cfg: &GeodesicSolverConfig<T>,
) -> Result<Point<T>> {
    let trace = generic_exp_ode_trace(m, x0, v, cfg)?;
    Ok(trace.last().expect("trace never empty").0.clone())
}

/// Newton shooting for the logarithmic map: solves exp(v) = x with a
/// finite-difference Jacobian, starting from the chart difference.
pub fn generic_log_shoot<T: Scalar>(
    m: &MetricField<T>,
    x0: &Point<T>,
    x: &Point<T>,
    cfg: &GeodesicSolverConfig<T>,
) -> Result<Tangent<T>> {
    let n = x0.dim();
    let mut v: Vec<T> = x.coords.iter().zip(&x0.coords).map(|(&a, &b)| a - b).collect();
    let mut residual_norm = T::infinity();
    for _ in 0..cfg.shooting_max_iters {
        let reached = generic_exp_ode(m, x0, &Tangent::new(x0.clone(), v.clone()), cfg)?;
        let residual: Vec<T> =
            reached.coords.iter().zip(&x.coords).map(|(&a, &b)| a - b).collect();
        residual_norm = linalg::norm2(&residual);
        if residual_norm <= cfg.shooting_tol {
            return Ok(Tangent::new(x0.clone(), v));
        }
        // finite-difference Jacobian of v ↦ exp(v)
        let h = c::<T>(1e-6) * (T::one() + linalg::norm_inf(&v));
        let mut jac = Mat::zeros(n, n);
        for j in 0..n {
            let mut vp = v.clone();
            vp[j] = vp[j] + h;
            let fp = generic_exp_ode(m, x0, &Tangent::new(x0.clone(), vp), cfg)?;
            let mut vm = v.clone();
            vm[j] = vm[j] - h;
            let fm = generic_exp_ode(m, x0, &Tangent::new(x0.clone(), vm), cfg)?;
            for i in 0..n {
                jac[(i, j)] = (fp.coords[i] - fm.coords[i]) / (c::<T>(2.0) * h);
            }
        }
        let lu = linalg::lu_factor(&jac)?;
        let neg_res: Vec<T> = residual.iter().map(|&r| -r).collect();
        let delta = lu.solve(&neg_res);
        for i in 0..n {
            v[i] = v[i] + delta[i];
        }
    }
    Err(Error::Convergence { residual: residual_norm.to_f64().unwrap_or(f64::NAN) })
}
