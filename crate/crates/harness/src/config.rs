//! Experiment configuration: profiles, config-file parsing, and precedence.
//!
//! Settings resolve in three layers: profile defaults, then the optional TOML
//! config file, then command-line flags. Later layers win.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use rica_core::manifolds::{table_rows, ChartId, ManifoldSpec};

pub const ALL_MANIFOLDS: [&str; 4] = ["sphere", "hyperbolic", "torus", "spd"];
pub const RS_GRID: [f64; 8] = [0.999, 0.99, 0.97, 0.95, 0.9, 0.85, 0.75, 0.6];
pub const B_GRID: [f64; 9] = [0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.0];

/// Named scale presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    Desk,
    PaperScale,
}

impl Profile {
    pub fn parse(s: &str) -> anyhow::Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper-scale" => Ok(Profile::PaperScale),
            other => bail!("unknown profile '{}'; expected desk|paper-scale", other),
        }
    }
}

/// Recovery methods the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rica,
    Fastica,
    Nlica,
}

impl Method {
    pub fn parse(s: &str) -> anyhow::Result<Self> {
        match s {
            "rica" => Ok(Method::Rica),
            "fastica" => Ok(Method::Fastica),
            "nlica" => Ok(Method::Nlica),
            other => bail!("unknown method '{}'; expected rica|fastica|nlica", other),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Rica => "rica",
            Method::Fastica => "fastica",
            Method::Nlica => "nlica",
        }
    }
}

/// Flow-training settings surfaced through the config.
#[derive(Debug, Clone, Serialize)]
pub struct NlicaSettings {
    pub steps: usize,
    pub batch: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub layers: usize,
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub profile: Profile,
    pub manifolds: Vec<String>,
    /// per-manifold chart allow-list; absent manifolds keep both charts
    pub charts: BTreeMap<String, Vec<String>>,
    pub n_target: usize,
    pub n_samples: usize,
    pub b: f64,
    pub r_s: f64,
    pub seeds: usize,
    pub draws: usize,
    pub methods: Vec<Method>,
    pub nlica: NlicaSettings,
    pub out_dir: PathBuf,
    pub master_seed: u64,
    pub plot: bool,
}

impl ExperimentConfig {
    pub fn from_profile(profile: Profile) -> Self {
        let (n_target, n_samples, seeds, draws, steps) = match profile {
            Profile::Desk => (8, 5_000, 3, 3, 3_000),
            Profile::PaperScale => (32, 10_000, 5, 5, 30_000),
        };
        ExperimentConfig {
            profile,
            manifolds: ALL_MANIFOLDS.iter().map(|s| s.to_string()).collect(),
            charts: BTreeMap::new(),
            n_target,
            n_samples,
            b: 0.3,
            r_s: 0.85,
            seeds,
            draws,
            methods: vec![Method::Rica, Method::Fastica, Method::Nlica],
            nlica: NlicaSettings {
                steps,
                batch: 128,
                lr: 1e-3,
                weight_decay: 1e-4,
                layers: 8,
            },
            out_dir: PathBuf::from("out"),
            master_seed: 0,
            plot: false,
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.methods.is_empty() {
            bail!("method set must not be empty");
        }
        if self.seeds == 0 || self.draws == 0 {
            bail!("seeds and draws must be at least 1");
        }
        if self.n_samples < 16 {
            bail!("sample count {} is too small", self.n_samples);
        }
        if self.b <= 0.0 {
            bail!("base scale b must be positive, got {}", self.b);
        }
        if self.r_s <= 0.0 || self.r_s > 1.0 {
            bail!("decay r_s must lie in (0, 1], got {}", self.r_s);
        }
        if self.n_target < 2 {
            bail!("target dimension must be at least 2");
        }
        for m in &self.manifolds {
            if !ALL_MANIFOLDS.contains(&m.as_str()) {
                bail!("unknown manifold '{}'", m);
            }
        }
        for (manifold, charts) in &self.charts {
            if !ALL_MANIFOLDS.contains(&manifold.as_str()) {
                bail!("chart filter names unknown manifold '{}'", manifold);
            }
            let spec = ManifoldSpec::from_name(manifold, self.n_target)
                .map_err(|e| anyhow::anyhow!(e.to_string()))?;
            for chart in charts {
                spec.chart_from_name(chart).map_err(|e| anyhow::anyhow!(e.to_string()))?;
            }
        }
        Ok(())
    }

    /// Benchmark rows selected by this config, in canonical table order.
    pub fn selected_rows(&self) -> Vec<(ManifoldSpec, ChartId)> {
        table_rows(self.n_target)
            .into_iter()
            .filter(|(spec, chart)| {
                if !self.manifolds.iter().any(|m| m == spec.name()) {
                    return false;
                }
                match self.charts.get(spec.name()) {
                    Some(allowed) => allowed.iter().any(|c| c == chart.name),
                    None => true,
                }
            })
            .collect()
    }
}

/// Raw config-file schema: flat keys, all optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub profile: Option<String>,
    pub manifolds: Option<Vec<String>>,
    pub charts: Option<BTreeMap<String, Vec<String>>>,
    pub n: Option<usize>,
    pub samples: Option<usize>,
    pub b: Option<f64>,
    pub rs: Option<f64>,
    pub seeds: Option<usize>,
    pub draws: Option<usize>,
    pub methods: Option<Vec<String>>,
    pub out: Option<PathBuf>,
    pub master_seed: Option<u64>,
    pub plot: Option<bool>,
    pub nlica_steps: Option<usize>,
    pub nlica_batch: Option<usize>,
    pub nlica_lr: Option<f64>,
    pub nlica_weight_decay: Option<f64>,
    pub nlica_layers: Option<usize>,
}

pub fn load_file_config(path: &Path) -> anyhow::Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config file {}", path.display()))
}

/// Applies file-config overrides on top of profile defaults.
pub fn apply_file_config(cfg: &mut ExperimentConfig, file: &FileConfig) -> anyhow::Result<()> {
    if let Some(manifolds) = &file.manifolds {
        cfg.manifolds = manifolds.clone();
    }
    if let Some(charts) = &file.charts {
        cfg.charts = charts.clone();
    }
    if let Some(n) = file.n {
        cfg.n_target = n;
    }
    if let Some(samples) = file.samples {
        cfg.n_samples = samples;
    }
    if let Some(b) = file.b {
        cfg.b = b;
    }
    if let Some(rs) = file.rs {
        cfg.r_s = rs;
    }
    if let Some(seeds) = file.seeds {
        cfg.seeds = seeds;
    }
    if let Some(draws) = file.draws {
        cfg.draws = draws;
    }
    if let Some(methods) = &file.methods {
        cfg.methods = methods.iter().map(|m| Method::parse(m)).collect::<Result<_, _>>()?;
    }
    if let Some(out) = &file.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = file.master_seed {
        cfg.master_seed = seed;
    }
    if let Some(plot) = file.plot {
        cfg.plot = plot;
    }
    if let Some(v) = file.nlica_steps {
        cfg.nlica.steps = v;
    }
    if let Some(v) = file.nlica_batch {
        cfg.nlica.batch = v;
    }
    if let Some(v) = file.nlica_lr {
        cfg.nlica.lr = v;
    }
    if let Some(v) = file.nlica_weight_decay {
        cfg.nlica.weight_decay = v;
    }
    if let Some(v) = file.nlica_layers {
        cfg.nlica.layers = v;
    }
    Ok(())
}
