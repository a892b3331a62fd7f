//! Experiment execution: per-cell source generation, method runs, metric
//! evaluation, and deterministic aggregation.

use rayon::prelude::*;

use rica_core::baselines::{fastica_fit, nlica_fit, FastIcaConfig, TrainConfig};
use rica_core::geometry::Point;
use rica_core::linalg::Mat;
use rica_core::manifolds::{ChartId, ChartTag, ManifoldSpec};
use rica_core::metrics::{mcc, total_correlation};
use rica_core::rica::{disentanglement_tensor_shortcut, rica_diagonalize, rica_recover};
use rica_core::sources::{
    generate, ground_truth_normal_tensor, ground_truth_spectrum, random_g_frame, SourceBatch,
    SourceConfig,
};
use rica_core::stream::{derive_rng, derive_seed_u64};

use crate::config::{ExperimentConfig, Method};

/// One (manifold, chart, method, seed, draw) result row.
#[derive(Debug, Clone)]
pub struct CellRun {
    pub manifold: String,
    pub chart: String,
    pub method: Method,
    pub n: usize,
    pub n_samples: usize,
    pub b: f64,
    pub r_s: f64,
    pub seed: usize,
    pub draw: usize,
    pub mcc: f64,
    pub tc: f64,
    pub frac_out_of_radius: f64,
    pub warnings: Vec<String>,
}

/// Aggregate over the seeds × draws pool for one (manifold, chart, method).
#[derive(Debug, Clone, serde::Serialize)]
pub struct CellResult {
    pub manifold: String,
    pub chart: String,
    pub method: String,
    pub mcc_mean: f64,
    pub mcc_std: f64,
    pub tc_mean: f64,
    pub tc_std: f64,
    pub n: usize,
    pub n_samples: usize,
    pub b: f64,
    pub r_s: f64,
    pub seed_count: usize,
    pub draw_count: usize,
    pub frac_out_of_radius_mean: f64,
    pub warnings: Vec<String>,
}

/// Sweep row: (r_s, min_gap, method, mcc mean/std) per benchmark row.
#[derive(Debug, Clone)]
pub struct EigengapRow {
    pub manifold: String,
    pub chart: String,
    pub r_s: f64,
    pub min_gap: f64,
    pub method: Method,
    pub mcc_mean: f64,
    pub mcc_std: f64,
}

/// Sweep row: (b, out-of-radius fraction, mcc mean/std) per benchmark row.
#[derive(Debug, Clone)]
pub struct BaseScaleRow {
    pub manifold: String,
    pub chart: String,
    pub b: f64,
    pub frac_out_of_radius: f64,
    pub mcc_mean: f64,
    pub mcc_std: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = finite.len() as f64;
    let mean = finite.iter().sum::<f64>() / n;
    if finite.len() < 2 {
        return (mean, 0.0);
    }
    let var = finite.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Pairs finite latent rows with the matching true rows; drops the rest.
fn finite_pairs(s_true: &Mat<f64>, s_hat: &Mat<f64>) -> (Mat<f64>, Mat<f64>, usize) {
    let keep: Vec<usize> = (0..s_hat.rows())
        .filter(|&i| s_hat.row(i).iter().all(|v| v.is_finite()))
        .collect();
    let dropped = s_hat.rows() - keep.len();
    let t = Mat::from_fn(keep.len(), s_true.cols(), |i, j| s_true[(keep[i], j)]);
    let h = Mat::from_fn(keep.len(), s_hat.cols(), |i, j| s_hat[(keep[i], j)]);
    (t, h, dropped)
}

struct MethodOutcome {
    latents: Option<Mat<f64>>,
    warnings: Vec<String>,
}

fn run_rica(
    spec: &ManifoldSpec,
    frame: &rica_core::rica::Frame<f64>,
    src: &SourceConfig<f64>,
    batch: &SourceBatch<f64>,
) -> MethodOutcome {
    let m = rica_core::manifolds::intrinsic_metric::<f64>(spec);
    let x0 = Point::zeros(spec.dim());
    let attempt = || -> Result<Mat<f64>, rica_core::Error> {
        let d_s = ground_truth_normal_tensor(src);
        let d = disentanglement_tensor_shortcut(frame, &d_s, &m)?;
        let eig = rica_diagonalize(&d, &m)?;
        let (latents, _) = rica_recover(spec, &x0, &eig.frame, &batch.points())?;
        Ok(latents)
    };
    match attempt() {
        Ok(latents) => MethodOutcome { latents: Some(latents), warnings: vec![] },
        Err(e) => MethodOutcome {
            latents: None,
            warnings: vec![format!("rica_failed:{}", compact(&e.to_string()))],
        },
    }
}

fn run_fastica(
    spec: &ManifoldSpec,
    input: &Mat<f64>,
    master_seed: u64,
    path: &[&str],
) -> MethodOutcome {
    let seed = derive_seed_u64(master_seed, path);
    let cfg = FastIcaConfig::new(spec.dim(), seed);
    match fastica_fit(input, &cfg) {
        Ok(out) => {
            let mut warnings = vec![];
            if !out.converged {
                warnings.push("fastica_nonconverged".to_string());
            }
            MethodOutcome { latents: Some(out.latents), warnings }
        }
        Err(e) => MethodOutcome {
            latents: None,
            warnings: vec![format!("fastica_failed:{}", compact(&e.to_string()))],
        },
    }
}

fn run_nlica(
    spec: &ManifoldSpec,
    input: &Mat<f64>,
    src: &SourceConfig<f64>,
    cfg: &ExperimentConfig,
    path: &[&str],
) -> MethodOutcome {
    let mut tc = TrainConfig::new(src.scales());
    tc.steps = cfg.nlica.steps;
    tc.batch = cfg.nlica.batch;
    tc.lr = cfg.nlica.lr;
    tc.weight_decay = cfg.nlica.weight_decay;
    tc.layers = cfg.nlica.layers;
    let mut rng = derive_rng(cfg.master_seed, path);
    match nlica_fit(input, &tc, &mut rng) {
        Ok(out) => {
            let mut warnings = vec![];
            if let Some(from) = out.reduced_from {
                warnings.push(format!("nlica_pca_reduced_from_{}_to_{}", from, spec.dim()));
            }
            if out.pole_resamples > 0 {
                warnings.push(format!("nlica_pole_resamples_{}", out.pole_resamples));
            }
            MethodOutcome { latents: Some(out.latents), warnings }
        }
        Err(e) => MethodOutcome {
            latents: None,
            warnings: vec![format!("nlica_failed:{}", compact(&e.to_string()))],
        },
    }
}

/// Keeps warning strings CSV-safe: no commas, spaces, or quotes.
fn compact(msg: &str) -> String {
    msg.chars()
        .map(|c| if c.is_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

/// Runs one (row, draw, seed) task: generates the shared batch and evaluates
/// every requested method on it.
#[allow(clippy::too_many_arguments)]
fn run_task(
    cfg: &ExperimentConfig,
    spec: &ManifoldSpec,
    chart: &ChartId,
    draw: usize,
    seed: usize,
    b: f64,
    r_s: f64,
    compute_tc: bool,
) -> Vec<CellRun> {
    let manifold = spec.name().to_string();
    let chart_name = chart.name.to_string();
    let n = spec.dim();
    let draw_label = draw.to_string();
    let seed_label = seed.to_string();
    let mk = |method: Method, mcc: f64, tc: f64, frac: f64, warnings: Vec<String>| CellRun {
        manifold: manifold.clone(),
        chart: chart_name.clone(),
        method,
        n,
        n_samples: cfg.n_samples,
        b,
        r_s,
        seed,
        draw,
        mcc,
        tc,
        frac_out_of_radius: frac,
        warnings,
    };
    let src = match SourceConfig::new(n, b, r_s, cfg.n_samples) {
        Ok(s) => s,
        Err(e) => {
            let warn = vec![format!("config_failed:{}", compact(&e.to_string()))];
            return cfg
                .methods
                .iter()
                .map(|&m| mk(m, f64::NAN, f64::NAN, f64::NAN, warn.clone()))
                .collect();
        }
    };
    let metric = rica_core::manifolds::intrinsic_metric::<f64>(spec);
    let x0 = Point::zeros(n);
    let mut frame_rng =
        derive_rng(cfg.master_seed, &[&manifold, &chart_name, "frame", &draw_label]);
    let frame = match random_g_frame(&metric, &x0, &mut frame_rng) {
        Ok(f) => f,
        Err(e) => {
            let warn = vec![format!("frame_failed:{}", compact(&e.to_string()))];
            return cfg
                .methods
                .iter()
                .map(|&m| mk(m, f64::NAN, f64::NAN, f64::NAN, warn.clone()))
                .collect();
        }
    };
    let mut source_rng = derive_rng(
        cfg.master_seed,
        &[&manifold, &chart_name, "sources", &draw_label, &seed_label],
    );
    let batch = match generate(spec, &src, &frame, chart, &mut source_rng) {
        Ok(b) => b,
        Err(e) => {
            let warn = vec![format!("generate_failed:{}", compact(&e.to_string()))];
            return cfg
                .methods
                .iter()
                .map(|&m| mk(m, f64::NAN, f64::NAN, f64::NAN, warn.clone()))
                .collect();
        }
    };
    let frac_out = batch.frac_out_of_radius();
    let chart_input: &Mat<f64> = match chart.tag {
        ChartTag::Alternate => batch.z.as_ref().expect("alternate chart requested"),
        ChartTag::Intrinsic => &batch.x,
    };
    cfg.methods
        .iter()
        .map(|&method| {
            let outcome = match method {
                Method::Rica => run_rica(spec, &frame, &src, &batch),
                Method::Fastica => run_fastica(
                    spec,
                    chart_input,
                    cfg.master_seed,
                    &[&manifold, &chart_name, "fastica", &draw_label, &seed_label],
                ),
                Method::Nlica => run_nlica(
                    spec,
                    chart_input,
                    &src,
                    cfg,
                    &[&manifold, &chart_name, "nlica", &draw_label, &seed_label],
                ),
            };
            let mut warnings = outcome.warnings;
            if frac_out > 0.01 {
                warnings.push(format!("out_of_radius_frac={:.4}", frac_out));
            }
            let (mcc_val, tc_val) = match &outcome.latents {
                Some(latents) => {
                    let (s_t, s_h, dropped) = finite_pairs(&batch.s, latents);
                    if dropped > 0 {
                        warnings.push(format!("dropped_nonfinite_rows_{}", dropped));
                    }
                    let mcc_val = match mcc(&s_t, &s_h) {
                        Ok(rep) => rep.mcc,
                        Err(e) => {
                            warnings.push(format!("mcc_failed:{}", compact(&e.to_string())));
                            f64::NAN
                        }
                    };
                    let tc_val = if compute_tc {
                        match total_correlation(&s_h, 3) {
                            Ok(rep) => {
                                if rep.jittered {
                                    warnings.push("tc_jittered".to_string());
                                }
                                rep.tc_nats
                            }
                            Err(e) => {
                                warnings.push(format!("tc_failed:{}", compact(&e.to_string())));
                                f64::NAN
                            }
                        }
                    } else {
                        f64::NAN
                    };
                    (mcc_val, tc_val)
                }
                None => (f64::NAN, f64::NAN),
            };
            mk(method, mcc_val, tc_val, frac_out, warnings)
        })
        .collect()
}

/// Runs the full benchmark table: every selected (manifold, chart) row across
/// draws × seeds × methods. Rows come back in deterministic table order.
pub fn run_table(cfg: &ExperimentConfig) -> Vec<CellRun> {
    run_grid(cfg, cfg.b, cfg.r_s, true)
}

fn run_grid(cfg: &ExperimentConfig, b: f64, r_s: f64, compute_tc: bool) -> Vec<CellRun> {
    let rows = cfg.selected_rows();
    let mut tasks = Vec::new();
    for (row_idx, (spec, chart)) in rows.iter().enumerate() {
        for draw in 0..cfg.draws {
            for seed in 0..cfg.seeds {
                tasks.push((row_idx, *spec, *chart, draw, seed));
            }
        }
    }
    let mut results: Vec<(usize, usize, usize, Vec<CellRun>)> = tasks
        .par_iter()
        .map(|&(row_idx, spec, chart, draw, seed)| {
            let runs = run_task(cfg, &spec, &chart, draw, seed, b, r_s, compute_tc);
            (row_idx, draw, seed, runs)
        })
        .collect();
    results.sort_by_key(|(row_idx, draw, seed, _)| (*row_idx, *draw, *seed));
    results.into_iter().flat_map(|(_, _, _, runs)| runs).collect()
}

/// Aggregates per-cell runs into per-(manifold, chart, method) results.
pub fn aggregate(cfg: &ExperimentConfig, runs: &[CellRun]) -> Vec<CellResult> {
    let rows = cfg.selected_rows();
    let mut out = Vec::new();
    for (spec, chart) in &rows {
        for method in &cfg.methods {
            let pool: Vec<&CellRun> = runs
                .iter()
                .filter(|r| {
                    r.manifold == spec.name() && r.chart == chart.name && r.method == *method
                })
                .collect();
            if pool.is_empty() {
                continue;
            }
            let (mcc_mean, mcc_std) = mean_std(&pool.iter().map(|r| r.mcc).collect::<Vec<_>>());
            let (tc_mean, tc_std) = mean_std(&pool.iter().map(|r| r.tc).collect::<Vec<_>>());
            let frac_mean =
                pool.iter().map(|r| r.frac_out_of_radius).sum::<f64>() / pool.len() as f64;
            let mut warnings: Vec<String> =
                pool.iter().flat_map(|r| r.warnings.iter().cloned()).collect();
            warnings.sort();
            warnings.dedup();
            out.push(CellResult {
                manifold: spec.name().to_string(),
                chart: chart.name.to_string(),
                method: method.name().to_string(),
                mcc_mean,
                mcc_std,
                tc_mean,
                tc_std,
                n: spec.dim(),
                n_samples: cfg.n_samples,
                b: cfg.b,
                r_s: cfg.r_s,
                seed_count: cfg.seeds,
                draw_count: cfg.draws,
                frac_out_of_radius_mean: frac_mean,
                warnings,
            });
        }
    }
    out
}

/// Eigengap sweep: varies r_s over the grid at fixed b and reports pooled
/// MCC per (row, method) next to the ground-truth minimum adjacent eigengap.
pub fn run_eigengap_sweep(cfg: &ExperimentConfig, rs_grid: &[f64]) -> Vec<EigengapRow> {
    let mut out = Vec::new();
    for &r_s in rs_grid {
        let runs = run_grid(cfg, cfg.b, r_s, false);
        for (spec, chart) in cfg.selected_rows() {
            let src = SourceConfig::new(spec.dim(), cfg.b, r_s, cfg.n_samples)
                .expect("validated config");
            let (_, min_gap) = ground_truth_spectrum(&src);
            for method in &cfg.methods {
                let pool: Vec<f64> = runs
                    .iter()
                    .filter(|r| {
                        r.manifold == spec.name() && r.chart == chart.name && r.method == *method
                    })
                    .map(|r| r.mcc)
                    .collect();
                let (mcc_mean, mcc_std) = mean_std(&pool);
                out.push(EigengapRow {
                    manifold: spec.name().to_string(),
                    chart: chart.name.to_string(),
                    r_s,
                    min_gap,
                    method: *method,
                    mcc_mean,
                    mcc_std,
                });
            }
        }
    }
    out
}

/// Base-scale sweep: varies b over the grid at fixed r_s, recovery with the
/// closed-form pipeline only.
pub fn run_base_scale_sweep(cfg: &ExperimentConfig, b_grid: &[f64]) -> Vec<BaseScaleRow> {
    let mut rica_cfg = cfg.clone();
    rica_cfg.methods = vec![Method::Rica];
    let mut out = Vec::new();
    for &b in b_grid {
        let runs = run_grid(&rica_cfg, b, cfg.r_s, false);
        for (spec, chart) in rica_cfg.selected_rows() {
            let pool: Vec<&CellRun> = runs
                .iter()
                .filter(|r| r.manifold == spec.name() && r.chart == chart.name)
                .collect();
            if pool.is_empty() {
                continue;
            }
            let (mcc_mean, mcc_std) = mean_std(&pool.iter().map(|r| r.mcc).collect::<Vec<_>>());
            let frac =
                pool.iter().map(|r| r.frac_out_of_radius).sum::<f64>() / pool.len() as f64;
            out.push(BaseScaleRow {
                manifold: spec.name().to_string(),
                chart: chart.name.to_string(),
                b,
                frac_out_of_radius: frac,
                mcc_mean,
                mcc_std,
            });
        }
    }
    out
}
