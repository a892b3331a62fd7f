//! Conformal nonlinear-ICA baseline: a composition of Möbius transformations
//! trained by maximum likelihood under a logistic prior.
//!
//! Each layer is f(s) = α O (s−a)/‖s−a‖² + b with constrained parameters
//! α = exp(4 tanh η̃) ∈ [e⁻⁴, e⁴], O = expm(A − Aᵀ) orthogonal, and
//! ‖a‖ = ‖b‖ = 2√n. Gradients are reverse-accumulated through the closed-form
//! layer operations; the expm adjoint uses the Fréchet block trick.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::scalar::{c, Scalar};

const POLE_GUARD_SQ: f64 = 1e-24; // ‖s − a‖ < 1e-12 counts as a pole hit

/// Raw (unconstrained) flow parameters; also reused as the gradient and
/// Adam-moment container since the shapes coincide.
#[derive(Debug, Clone)]
pub struct MobiusFlow<T> {
    pub n: usize,
    pub eta: Vec<T>,
    pub skew: Vec<Mat<T>>,
    pub a_raw: Vec<Vec<T>>,
    pub b_raw: Vec<Vec<T>>,
}

/// Constrained per-layer parameters derived from the raw ones.
#[derive(Debug, Clone)]
pub struct MobiusLayerView<T> {
    pub alpha: T,
    pub o: Mat<T>,
    pub a: Vec<T>,
    pub b: Vec<T>,
}

impl<T: Scalar> MobiusFlow<T> {
    /// η̃ = 0 (α = 1), A = 0 (O = I), raw centers i.i.d. normal.
    pub fn init(n: usize, layers: usize, rng: &mut impl Rng) -> Self {
        let mut gauss = |_: usize| -> Vec<T> {
            (0..n).map(|_| c::<T>(rng.sample::<f64, _>(rand_distr::StandardNormal))).collect()
        };
        let a_raw: Vec<Vec<T>> = (0..layers).map(&mut gauss).collect();
        let b_raw: Vec<Vec<T>> = (0..layers).map(&mut gauss).collect();
        MobiusFlow {
            n,
            eta: vec![T::zero(); layers],
            skew: (0..layers).map(|_| Mat::zeros(n, n)).collect(),
            a_raw,
            b_raw,
        }
    }

    pub fn layers(&self) -> usize {
        self.eta.len()
    }

    pub fn zeros_like(&self) -> Self {
        MobiusFlow {
            n: self.n,
            eta: vec![T::zero(); self.layers()],
            skew: (0..self.layers()).map(|_| Mat::zeros(self.n, self.n)).collect(),
            a_raw: vec![vec![T::zero(); self.n]; self.layers()],
            b_raw: vec![vec![T::zero(); self.n]; self.layers()],
        }
    }

    /// Constrained parameters per layer.
    pub fn derived(&self) -> Result<Vec<MobiusLayerView<T>>> {
        let two_sqrt_n = c::<T>(2.0) * c::<T>(self.n as f64).sqrt();
        (0..self.layers())
            .map(|l| {
                let alpha = (c::<T>(4.0) * self.eta[l].tanh()).exp();
                let s = self.skew[l].sub(&self.skew[l].transpose());
                let o = linalg::expm(&s);
                let norm_a = linalg::norm2(&self.a_raw[l]);
                let norm_b = linalg::norm2(&self.b_raw[l]);
                if norm_a < c(1e-30) || norm_b < c(1e-30) {
                    return Err(Error::Param(
                        "raw Möbius center collapsed to zero norm".into(),
                    ));
                }
                let a = self.a_raw[l].iter().map(|&v| v * two_sqrt_n / norm_a).collect();
                let b = self.b_raw[l].iter().map(|&v| v * two_sqrt_n / norm_b).collect();
                Ok(MobiusLayerView { alpha, o, a, b })
            })
            .collect()
    }

    fn to_flat(&self) -> Vec<T> {
        let mut out = Vec::new();
        for l in 0..self.layers() {
            out.push(self.eta[l]);
            out.extend_from_slice(self.skew[l].data());
            out.extend_from_slice(&self.a_raw[l]);
            out.extend_from_slice(&self.b_raw[l]);
        }
        out
    }

    fn assign_from_flat(&mut self, flat: &[T]) {
        let n = self.n;
        let mut idx = 0;
        for l in 0..self.layers() {
            self.eta[l] = flat[idx];
            idx += 1;
            self.skew[l] = Mat::from_fn(n, n, |i, j| flat[idx + i * n + j]);
            idx += n * n;
            self.a_raw[l].copy_from_slice(&flat[idx..idx + n]);
            idx += n;
            self.b_raw[l].copy_from_slice(&flat[idx..idx + n]);
            idx += n;
        }
    }
}

/// One decoder layer: f(s) = α O (s−a)/‖s−a‖² + b.
pub fn layer_forward<T: Scalar>(layer: &MobiusLayerView<T>, s: &[T]) -> Result<Vec<T>> {
    let diff: Vec<T> = s.iter().zip(&layer.a).map(|(&x, &a)| x - a).collect();
    let nw2 = linalg::dot(&diff, &diff);
    if nw2 < c(POLE_GUARD_SQ) {
        return Err(Error::Pole("input too close to the layer inversion center".into()));
    }
    let inverted: Vec<T> = diff.iter().map(|&d| d / nw2).collect();
    let rotated = layer.o.matvec(&inverted);
    Ok(rotated.iter().zip(&layer.b).map(|(&v, &b)| v * layer.alpha + b).collect())
}

/// log|det ∂f/∂s| of one decoder layer: n·log α − 2n·log ‖s − a‖.
pub fn layer_log_det_forward<T: Scalar>(layer: &MobiusLayerView<T>, s: &[T]) -> Result<T> {
    let diff: Vec<T> = s.iter().zip(&layer.a).map(|(&x, &a)| x - a).collect();
    let nw2 = linalg::dot(&diff, &diff);
    if nw2 < c(POLE_GUARD_SQ) {
        return Err(Error::Pole("log-det evaluated at the inversion center".into()));
    }
    let n = c::<T>(layer.a.len() as f64);
    Ok(n * layer.alpha.ln() - n * nw2.ln())
}

/// Full decoder: layers applied in order 1..L.
pub fn mobius_forward<T: Scalar>(flow: &MobiusFlow<T>, s: &[T]) -> Result<Vec<T>> {
    let derived = flow.derived()?;
    let mut cur = s.to_vec();
    for layer in &derived {
        cur = layer_forward(layer, &cur)?;
    }
    Ok(cur)
}

/// Full encoder: per layer (reverse order) w = Oᵀ(x−b)/α, s = a + w/‖w‖².
pub fn mobius_inverse<T: Scalar>(flow: &MobiusFlow<T>, x: &[T]) -> Result<Vec<T>> {
    let derived = flow.derived()?;
    let mut cur = x.to_vec();
    for layer in derived.iter().rev() {
        let shifted: Vec<T> = cur.iter().zip(&layer.b).map(|(&v, &b)| v - b).collect();
        let w: Vec<T> =
            layer.o.transpose().matvec(&shifted).iter().map(|&v| v / layer.alpha).collect();
        let nw2 = linalg::dot(&w, &w);
        if nw2 < c(POLE_GUARD_SQ) {
            return Err(Error::Pole("encoder hit an inversion pole".into()));
        }
        cur = w.iter().zip(&layer.a).map(|(&wi, &a)| a + wi / nw2).collect();
    }
    Ok(cur)
}

/// Training settings for the flow baseline.
#[derive(Debug, Clone)]
pub struct TrainConfig<T> {
    pub steps: usize,
    pub batch: usize,
    pub lr: T,
    pub weight_decay: T,
    /// logistic prior scales b_i (also fixes the latent dimension)
    pub prior_scales: Vec<T>,
    pub layers: usize,
}

impl<T: Scalar> TrainConfig<T> {
    pub fn new(prior_scales: Vec<T>) -> Self {
        TrainConfig {
            steps: 3_000,
            batch: 128,
            lr: c(1e-3),
            weight_decay: c(1e-4),
            prior_scales,
            layers: 8,
        }
    }
}

/// Trained-encoder latents plus optimization diagnostics.
#[derive(Debug, Clone)]
pub struct NlicaOutput<T> {
    /// N×n latents from the trained encoder
    pub latents: Mat<T>,
    /// per-step training loss (mean NLL over the batch)
    pub loss_history: Vec<T>,
    /// original input dimension when a principal-subspace reduction ran
    pub reduced_from: Option<usize>,
    pub pole_resamples: usize,
    /// rows whose final encoding hit a pole (emitted as NaN)
    pub nonfinite_latents: usize,
}

// ---------------------------------------------------------------------------
// Encoder tape and reverse accumulation
// ---------------------------------------------------------------------------

struct SampleTape<T> {
    /// per layer (parameter order 0..L−1): w, ‖w‖², u = x_ℓ − b
    w: Vec<Vec<T>>,
    nw2: Vec<T>,
    u: Vec<Vec<T>>,
    s: Vec<T>,
    loglik: T,
}

fn encode_sample<T: Scalar>(
    derived: &[MobiusLayerView<T>],
    x: &[T],
    scales: &[T],
) -> Result<SampleTape<T>> {
    let layers = derived.len();
    let n = x.len();
    let nt = c::<T>(n as f64);
    let mut w_cache = vec![Vec::new(); layers];
    let mut nw2_cache = vec![T::zero(); layers];
    let mut u_cache = vec![Vec::new(); layers];
    let mut cur = x.to_vec();
    let mut logdet = T::zero();
    for (l, layer) in derived.iter().enumerate().rev() {
        let u: Vec<T> = cur.iter().zip(&layer.b).map(|(&v, &b)| v - b).collect();
        let w: Vec<T> =
            layer.o.transpose().matvec(&u).iter().map(|&v| v / layer.alpha).collect();
        let nw2 = linalg::dot(&w, &w);
        if nw2 < c(POLE_GUARD_SQ) || !nw2.is_finite() {
            return Err(Error::Pole(format!("pole hit in layer {}", l)));
        }
        cur = w.iter().zip(&layer.a).map(|(&wi, &a)| a + wi / nw2).collect();
        logdet = logdet - nt * layer.alpha.ln() - nt * nw2.ln();
        w_cache[l] = w;
        nw2_cache[l] = nw2;
        u_cache[l] = u;
    }
    let mut loglik = logdet;
    for (&si, &b) in cur.iter().zip(scales) {
        loglik = loglik + crate::geometry::logistic_log_density(si, b);
    }
    if !loglik.is_finite() {
        return Err(Error::Eval("non-finite log-likelihood".into()));
    }
    Ok(SampleTape { w: w_cache, nw2: nw2_cache, u: u_cache, s: cur, loglik })
}

/// Gradients in derived-parameter space, accumulated across a batch.
struct DerivedGrads<T> {
    alpha: Vec<T>,
    o: Vec<Mat<T>>,
    a: Vec<Vec<T>>,
    b: Vec<Vec<T>>,
}

impl<T: Scalar> DerivedGrads<T> {
    fn zeros(n: usize, layers: usize) -> Self {
        DerivedGrads {
            alpha: vec![T::zero(); layers],
            o: (0..layers).map(|_| Mat::zeros(n, n)).collect(),
            a: vec![vec![T::zero(); n]; layers],
            b: vec![vec![T::zero(); n]; layers],
        }
    }
}

/// d/ds of the centered logistic log-density: (1 − 2σ(s/b))/b.
fn logistic_score<T: Scalar>(s: T, b: T) -> T {
    let z = s / b;
    let sig = if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    };
    (T::one() - c::<T>(2.0) * sig) / b
}

/// Accumulates ∂loss/∂(derived params) for one sample with weight `gl`
/// (= −1/B for a mean-NLL loss).
fn backward_sample<T: Scalar>(
    derived: &[MobiusLayerView<T>],
    tape: &SampleTape<T>,
    scales: &[T],
    gl: T,
    grads: &mut DerivedGrads<T>,
) {
    let n = tape.s.len();
    let nt = c::<T>(n as f64);
    let two = c::<T>(2.0);
    // gradient wrt latents from the prior
    let mut g_x: Vec<T> = tape
        .s
        .iter()
        .zip(scales)
        .map(|(&si, &b)| gl * logistic_score(si, b))
        .collect();
    // encoder applied layers L−1..0, so reverse accumulation walks 0..L−1
    for (l, layer) in derived.iter().enumerate() {
        let w = &tape.w[l];
        let nw2 = tape.nw2[l];
        let u = &tape.u[l];
        let inv2 = T::one() / nw2;
        // x_prev = a + w·inv2
        for i in 0..n {
            grads.a[l][i] = grads.a[l][i] + g_x[i];
        }
        let wg = linalg::dot(w, &g_x);
        let mut g_w: Vec<T> = (0..n)
            .map(|i| inv2 * g_x[i] - two * inv2 * inv2 * wg * w[i])
            .collect();
        // logdet term −n·ln nw2 contributes −2n·inv2·w
        let ld_coef = gl * (-two * nt * inv2);
        for i in 0..n {
            g_w[i] = g_w[i] + ld_coef * w[i];
        }
        // logdet term −n·ln α
        grads.alpha[l] = grads.alpha[l] + gl * (-nt / layer.alpha);
        // w = Oᵀ u / α
        let g_u: Vec<T> = layer.o.matvec(&g_w).iter().map(|&v| v / layer.alpha).collect();
        // ∂w/∂α = −w/α
        grads.alpha[l] = grads.alpha[l] - linalg::dot(w, &g_w) / layer.alpha;
        // ∂loss/∂O += u g_wᵀ / α
        for i in 0..n {
            for j in 0..n {
                grads.o[l][(i, j)] = grads.o[l][(i, j)] + u[i] * g_w[j] / layer.alpha;
            }
        }
        // u = x_ℓ − b
        for i in 0..n {
            grads.b[l][i] = grads.b[l][i] - g_u[i];
        }
        g_x = g_u;
    }
}

/// Maps accumulated derived-space gradients back to the raw parameters.
fn raw_gradients<T: Scalar>(
    flow: &MobiusFlow<T>,
    derived: &[MobiusLayerView<T>],
    dg: &DerivedGrads<T>,
) -> MobiusFlow<T> {
    let n = flow.n;
    let four = c::<T>(4.0);
    let two_sqrt_n = c::<T>(2.0) * c::<T>(n as f64).sqrt();
    let mut out = flow.zeros_like();
    for l in 0..flow.layers() {
        // α = exp(4 tanh η̃)
        let th = flow.eta[l].tanh();
        out.eta[l] = dg.alpha[l] * derived[l].alpha * four * (T::one() - th * th);
        // O = expm(S), S = A − Aᵀ: adjoint via the Fréchet derivative at Sᵀ
        let s = flow.skew[l].sub(&flow.skew[l].transpose());
        let g_s = linalg::expm_frechet(&s.transpose(), &dg.o[l]);
        out.skew[l] = g_s.sub(&g_s.transpose());
        // a = 2√n ã/‖ã‖ (same for b)
        for (raw, (g_np, slot)) in [
            (&flow.a_raw[l], (&dg.a[l], &mut out.a_raw[l])),
            (&flow.b_raw[l], (&dg.b[l], &mut out.b_raw[l])),
        ] {
            let norm = linalg::norm2(raw);
            let unit: Vec<T> = raw.iter().map(|&v| v / norm).collect();
            let along = linalg::dot(&unit, g_np);
            for i in 0..n {
                slot[i] = two_sqrt_n / norm * (g_np[i] - along * unit[i]);
            }
        }
    }
    out
}

/// Mean NLL over the batch rows and its gradient wrt the raw parameters.
/// Any pole hit inside the batch is reported as an error.
pub fn nll_and_gradients<T: Scalar>(
    flow: &MobiusFlow<T>,
    batch: &Mat<T>,
    scales: &[T],
) -> Result<(T, MobiusFlow<T>)> {
    let derived = flow.derived()?;
    let b = batch.rows();
    let gl = -T::one() / c::<T>(b as f64);
    let mut dg = DerivedGrads::zeros(flow.n, flow.layers());
    let mut loss = T::zero();
    for row in 0..b {
        let tape = encode_sample(&derived, batch.row(row), scales)?;
        loss = loss - tape.loglik / c::<T>(b as f64);
        backward_sample(&derived, &tape, scales, gl, &mut dg);
    }
    Ok((loss, raw_gradients(flow, &derived, &dg)))
}

/// Centers the input and, when it is wider than `n`, projects it onto the
/// top-n principal subspace. Returns the reduced matrix and whether a
/// reduction ran.
pub fn center_and_project<T: Scalar>(xs: &Mat<T>, n: usize) -> Result<(Mat<T>, bool)> {
    let rows = xs.rows();
    let m = xs.cols();
    if m < n {
        return Err(Error::Param(format!("input dimension {} below latent dimension {}", m, n)));
    }
    let nt = c::<T>(rows as f64);
    let means: Vec<T> = (0..m).map(|j| (0..rows).map(|i| xs[(i, j)]).sum::<T>() / nt).collect();
    let centered = Mat::from_fn(rows, m, |i, j| xs[(i, j)] - means[j]);
    if m == n {
        return Ok((centered, false));
    }
    let denom = c::<T>((rows - 1).max(1) as f64);
    let mut cov = Mat::zeros(m, m);
    for i in 0..rows {
        let row = centered.row(i);
        for a in 0..m {
            for b in a..m {
                cov[(a, b)] = cov[(a, b)] + row[a] * row[b];
            }
        }
    }
    for a in 0..m {
        for b in a..m {
            let v = cov[(a, b)] / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    let (_, evecs) = linalg::sym_eigen(&cov)?;
    // top-n eigenvectors live in the last n columns (ascending order)
    let proj = Mat::from_fn(n, m, |k, j| evecs[(j, m - 1 - k)]);
    Ok((centered.matmul(&proj.transpose()), true))
}

/// Trains the Möbius flow by maximum likelihood with AdamW (β = (0.9, 0.999),
/// ε = 1e-8, decoupled weight decay) and returns the trained-encoder latents.
/// Batch elements that hit an inversion pole are resampled.
pub fn nlica_fit<T: Scalar>(
    xs: &Mat<T>,
    cfg: &TrainConfig<T>,
    rng: &mut impl Rng,
) -> Result<NlicaOutput<T>> {
    let n = cfg.prior_scales.len();
    if n == 0 {
        return Err(Error::Param("prior scales must be non-empty".into()));
    }
    let (data, reduced) = center_and_project(xs, n)?;
    let rows = data.rows();
    if rows == 0 {
        return Err(Error::SampleSize("empty training input".into()));
    }
    let mut flow = MobiusFlow::init(n, cfg.layers, rng);
    let mut flat = flow.to_flat();
    let mut m1 = vec![T::zero(); flat.len()];
    let mut m2 = vec![T::zero(); flat.len()];
    let beta1 = c::<T>(0.9);
    let beta2 = c::<T>(0.999);
    let eps = c::<T>(1e-8);
    let mut pole_resamples = 0usize;
    let mut loss_history = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let derived = flow.derived()?;
        // assemble the batch, resampling pole hits
        let gl = -T::one() / c::<T>(cfg.batch as f64);
        let mut dg = DerivedGrads::zeros(n, cfg.layers);
        let mut loss = T::zero();
        for _ in 0..cfg.batch {
            let mut tape = None;
            for _attempt in 0..100 {
                let idx = rng.gen_range(0..rows);
                match encode_sample(&derived, data.row(idx), &cfg.prior_scales) {
                    Ok(t) => {
                        tape = Some(t);
                        break;
                    }
                    Err(Error::Pole(_)) => {
                        pole_resamples += 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                }
            }
            let tape = tape.ok_or(Error::Training {
                step,
                msg: "could not draw a pole-free batch element".into(),
            })?;
            loss = loss - tape.loglik / c::<T>(cfg.batch as f64);
            backward_sample(&derived, &tape, &cfg.prior_scales, gl, &mut dg);
        }
        if !loss.is_finite() {
            return Err(Error::Training { step, msg: "non-finite loss".into() });
        }
        loss_history.push(loss);
        if cfg.layers == 0 {
            continue; // identity flow has nothing to update
        }
        let grads = raw_gradients(&flow, &derived, &dg).to_flat();
        let t = c::<T>((step + 1) as f64);
        let bc1 = T::one() - beta1.powf(t);
        let bc2 = T::one() - beta2.powf(t);
        for i in 0..flat.len() {
            let g = grads[i];
            m1[i] = beta1 * m1[i] + (T::one() - beta1) * g;
            m2[i] = beta2 * m2[i] + (T::one() - beta2) * g * g;
            let mhat = m1[i] / bc1;
            let vhat = m2[i] / bc2;
            flat[i] = flat[i] - cfg.lr * (mhat / (vhat.sqrt() + eps)) - cfg.lr * cfg.weight_decay * flat[i];
        }
        flow.assign_from_flat(&flat);
    }
    // final encode of the full dataset
    let derived = flow.derived()?;
    let mut latents = Mat::zeros(rows, n);
    let mut nonfinite = 0usize;
    for i in 0..rows {
        match encode_sample(&derived, data.row(i), &cfg.prior_scales) {
            Ok(tape) => latents.row_mut(i).copy_from_slice(&tape.s),
            Err(Error::Pole(_)) => {
                nonfinite += 1;
                for v in latents.row_mut(i) {
                    *v = T::nan();
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(NlicaOutput {
        latents,
        loss_history,
        reduced_from: if reduced { Some(xs.cols()) } else { None },
        pole_resamples,
        nonfinite_latents: nonfinite,
    })
}
