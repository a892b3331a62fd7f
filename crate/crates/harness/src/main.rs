//! Command-line benchmark runner for Riemannian ICA source recovery.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rica_harness::config::{
    apply_file_config, load_file_config, ExperimentConfig, Method, Profile, B_GRID, RS_GRID,
};
use rica_harness::{emit, plot, runner, selftest};

/// Source-recovery benchmarks on closed-form Riemannian geometries.
///
/// Config precedence: profile defaults < config file < command-line flags.
#[derive(Parser)]
#[command(
    name = "rica",
    version,
    about = "Riemannian ICA source-recovery benchmark harness",
    long_about = "Source-recovery benchmarks on closed-form Riemannian geometries.\n\n\
        Config file (TOML, flat key-value pairs; every key optional):\n\
        \u{20}  profile       = \"desk\" | \"paper-scale\"\n\
        \u{20}  manifolds     = [\"sphere\", \"hyperbolic\", \"torus\", \"spd\"]\n\
        \u{20}  n             = 8          # target intrinsic dimension\n\
        \u{20}  samples       = 5000       # samples per draw\n\
        \u{20}  b             = 0.3        # base source scale\n\
        \u{20}  rs            = 0.85       # per-coordinate scale decay\n\
        \u{20}  seeds         = 3\n\
        \u{20}  draws         = 3          # random frames per row\n\
        \u{20}  methods       = [\"rica\", \"fastica\", \"nlica\"]\n\
        \u{20}  out           = \"out\"\n\
        \u{20}  master_seed   = 0\n\
        \u{20}  plot          = false\n\
        \u{20}  nlica_steps   = 3000\n\
        \u{20}  nlica_batch   = 128\n\
        \u{20}  nlica_lr      = 1e-3\n\
        \u{20}  nlica_weight_decay = 1e-4\n\
        \u{20}  nlica_layers  = 8\n\
        \u{20}  [charts]                   # optional per-manifold chart filter\n\
        \u{20}  sphere = [\"ambient\", \"stereographic\"]\n\n\
        Command-line flags override file values. Exit codes: 0 ok, 1 config\n\
        error, 2 runtime cell failures (outputs still written)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonFlags {
    /// TOML config file
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Manifold to include (repeatable): sphere|hyperbolic|torus|spd
    #[arg(long = "manifold", value_name = "NAME")]
    manifolds: Vec<String>,
    /// Chart filter (repeatable); charts outside the manifold set are errors
    #[arg(long = "chart", value_name = "NAME")]
    charts: Vec<String>,
    /// Target intrinsic dimension
    #[arg(long)]
    n: Option<usize>,
    /// Samples per draw
    #[arg(long)]
    samples: Option<usize>,
    /// Base source scale b
    #[arg(long)]
    b: Option<f64>,
    /// Per-coordinate scale decay r_s
    #[arg(long)]
    rs: Option<f64>,
    /// Seed count
    #[arg(long)]
    seeds: Option<usize>,
    /// Random-frame draw count
    #[arg(long)]
    draws: Option<usize>,
    /// Comma-separated subset of rica,fastica,nlica
    #[arg(long, value_name = "CSV")]
    methods: Option<String>,
    /// Scale preset: desk | paper-scale
    #[arg(long, default_value = "desk")]
    profile: String,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Render SVG charts for sweeps
    #[arg(long)]
    plot: bool,
    /// Master seed for all derived RNG streams
    #[arg(long, value_name = "INT")]
    master_seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Full benchmark table over the selected (manifold, chart) rows
    Table(CommonFlags),
    /// Sweep the source decay r_s over the canonical grid
    SweepEigengap {
        #[command(flatten)]
        common: CommonFlags,
        /// Comma-separated r_s grid override
        #[arg(long, value_name = "CSV")]
        rs_grid: Option<String>,
    },
    /// Sweep the base scale b over the canonical grid
    SweepBaseScale {
        #[command(flatten)]
        common: CommonFlags,
        /// Comma-separated b grid override
        #[arg(long, value_name = "CSV")]
        b_grid: Option<String>,
    },
    /// Run quick end-to-end self-checks
    Selftest,
}

fn resolve_config(common: &CommonFlags) -> anyhow::Result<ExperimentConfig> {
    let profile = Profile::parse(&common.profile)?;
    let mut cfg = ExperimentConfig::from_profile(profile);
    if let Some(path) = &common.config {
        let file = load_file_config(path)?;
        if let Some(p) = &file.profile {
            cfg = ExperimentConfig::from_profile(Profile::parse(p)?);
        }
        apply_file_config(&mut cfg, &file)?;
    }
    if !common.manifolds.is_empty() {
        cfg.manifolds = common.manifolds.clone();
    }
    if !common.charts.is_empty() {
        // group the chart filter by owning manifold
        let mut map: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for chart in &common.charts {
            let mut owner = None;
            for m in &cfg.manifolds {
                let spec = rica_core::manifolds::ManifoldSpec::from_name(m, cfg.n_target.max(2))
                    .map_err(|e| anyhow::anyhow!(e.to_string()))?;
                if spec.chart_from_name(chart).is_ok() {
                    owner = Some(m.clone());
                    break;
                }
            }
            let owner = owner
                .ok_or_else(|| anyhow::anyhow!("chart '{}' matches no selected manifold", chart))?;
            map.entry(owner).or_default().push(chart.clone());
        }
        cfg.charts = map;
    }
    if let Some(n) = common.n {
        cfg.n_target = n;
    }
    if let Some(samples) = common.samples {
        cfg.n_samples = samples;
    }
    if let Some(b) = common.b {
        cfg.b = b;
    }
    if let Some(rs) = common.rs {
        cfg.r_s = rs;
    }
    if let Some(seeds) = common.seeds {
        cfg.seeds = seeds;
    }
    if let Some(draws) = common.draws {
        cfg.draws = draws;
    }
    if let Some(methods) = &common.methods {
        cfg.methods = methods
            .split(',')
            .filter(|s| !s.is_empty())
            .map(Method::parse)
            .collect::<Result<_, _>>()?;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    if common.plot {
        cfg.plot = true;
    }
    if let Some(seed) = common.master_seed {
        cfg.master_seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_grid(csv: &str) -> anyhow::Result<Vec<f64>> {
    csv.split(',')
        .filter(|s| !s.is_empty())
        .map(|s| s.trim().parse::<f64>().map_err(|e| anyhow::anyhow!("bad grid value '{}': {}", s, e)))
        .collect()
}

fn has_failures(runs: &[runner::CellRun]) -> bool {
    runs.iter().any(|r| r.warnings.iter().any(|w| w.contains("_failed")))
}

fn cmd_table(common: &CommonFlags) -> anyhow::Result<u8> {
    let cfg = resolve_config(common)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let runs = runner::run_table(&cfg);
    let cells = runner::aggregate(&cfg, &runs);
    emit::write_results_csv(&cfg.out_dir, &runs)?;
    emit::write_summary_json(&cfg.out_dir, "table", &cfg, &cells)?;
    for cell in &cells {
        println!(
            "{:<11} {:<14} {:<8} MCC {:.4} ± {:.4}  TC {:+.4} ± {:.4}{}",
            cell.manifold,
            cell.chart,
            cell.method,
            cell.mcc_mean,
            cell.mcc_std,
            cell.tc_mean,
            cell.tc_std,
            if cell.warnings.is_empty() { String::new() } else { format!("  [{}]", cell.warnings.join(";")) },
        );
    }
    println!("wrote {}", cfg.out_dir.join("results.csv").display());
    Ok(if has_failures(&runs) { 2 } else { 0 })
}

fn cmd_sweep_eigengap(common: &CommonFlags, rs_grid: Option<&str>) -> anyhow::Result<u8> {
    let mut cfg = resolve_config(common)?;
    // sweeps default to the intrinsic charts unless filtered explicitly
    if cfg.charts.is_empty() {
        for m in cfg.manifolds.clone() {
            let spec = rica_core::manifolds::ManifoldSpec::from_name(&m, cfg.n_target)
                .map_err(|e| anyhow::anyhow!(e.to_string()))?;
            cfg.charts.insert(m, vec![spec.intrinsic_chart().name.to_string()]);
        }
    }
    let grid = match rs_grid {
        Some(csv) => parse_grid(csv)?,
        None => RS_GRID.to_vec(),
    };
    if grid.iter().any(|&v| v <= 0.0 || v > 1.0) {
        anyhow::bail!("r_s grid values must lie in (0, 1]");
    }
    std::fs::create_dir_all(&cfg.out_dir)?;
    let rows = runner::run_eigengap_sweep(&cfg, &grid);
    emit::write_eigengap_csv(&cfg.out_dir, &rows)?;
    emit::write_summary_json(&cfg.out_dir, "sweep-eigengap", &cfg, &[])?;
    if cfg.plot {
        plot::plot_eigengap(&cfg.out_dir, &rows)?;
    }
    for r in &rows {
        println!(
            "r_s={:<6} gap={:<9.4} {:<11} {:<8} MCC {:.4} ± {:.4}",
            r.r_s,
            r.min_gap,
            r.manifold,
            r.method.name(),
            r.mcc_mean,
            r.mcc_std
        );
    }
    println!("wrote {}", cfg.out_dir.join("sweep_eigengap.csv").display());
    Ok(0)
}

fn cmd_sweep_base_scale(common: &CommonFlags, b_grid: Option<&str>) -> anyhow::Result<u8> {
    let mut cfg = resolve_config(common)?;
    if cfg.charts.is_empty() {
        for m in cfg.manifolds.clone() {
            let spec = rica_core::manifolds::ManifoldSpec::from_name(&m, cfg.n_target)
                .map_err(|e| anyhow::anyhow!(e.to_string()))?;
            cfg.charts.insert(m, vec![spec.intrinsic_chart().name.to_string()]);
        }
    }
    let grid = match b_grid {
        Some(csv) => parse_grid(csv)?,
        None => B_GRID.to_vec(),
    };
    if grid.iter().any(|&v| v <= 0.0) {
        anyhow::bail!("b grid values must be positive");
    }
    std::fs::create_dir_all(&cfg.out_dir)?;
    let rows = runner::run_base_scale_sweep(&cfg, &grid);
    emit::write_base_scale_csv(&cfg.out_dir, &rows)?;
    emit::write_summary_json(&cfg.out_dir, "sweep-base-scale", &cfg, &[])?;
    if cfg.plot {
        plot::plot_base_scale(&cfg.out_dir, &rows)?;
    }
    for r in &rows {
        println!(
            "b={:<5} {:<11} out={:.3} MCC {:.4} ± {:.4}",
            r.b, r.manifold, r.frac_out_of_radius, r.mcc_mean, r.mcc_std
        );
    }
    println!("wrote {}", cfg.out_dir.join("sweep_base_scale.csv").display());
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Table(common) => cmd_table(common),
        Command::SweepEigengap { common, rs_grid } => {
            cmd_sweep_eigengap(common, rs_grid.as_deref())
        }
        Command::SweepBaseScale { common, b_grid } => {
            cmd_sweep_base_scale(common, b_grid.as_deref())
        }
        Command::Selftest => {
            let failures = selftest();
            return if failures == 0 { ExitCode::SUCCESS } else { ExitCode::from(2) };
        }
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {:#}", err);
            ExitCode::from(1)
        }
    }
}
