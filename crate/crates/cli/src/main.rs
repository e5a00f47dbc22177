//! `morbench` drives the empirical-Gramian model reduction comparison:
//! `run` executes the full method x norm sweep on the thermal-block
//! benchmark and writes MORscore tables plus error graphs, `score`
//! recomputes MORscores from emitted error-graph CSVs, and
//! `export-system` writes the benchmark system in matrix-market files.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use morbench_core::harness::{emit, run_experiment, ExperimentConfig, MethodId, Variant};
use morbench_core::morscore::{morscore, parse_graph_csv, render_table_markdown, GraphMeta};
use morbench_core::norms::NormId;
use morbench_core::thermal_block::{build, ThermalBlockConfig};

#[derive(Parser)]
#[command(name = "morbench", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the benchmark comparison and emit tables and error graphs.
    Run(RunArgs),
    /// Recompute MORscores from emitted errorgraph CSV files.
    Score(ScoreArgs),
    /// Export the thermal-block system as matrix-market files.
    ExportSystem(ExportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Fixed,
    Single,
    Multi,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Fixed => Variant::Fixed,
            VariantArg::Single => Variant::Single,
            VariantArg::Multi => Variant::Multi,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file; explicit flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Benchmark parameterization.
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    /// Grid cells per axis (state dimension is grid-n squared).
    #[arg(long)]
    grid_n: Option<usize>,
    /// Conductivity-circle radius.
    #[arg(long)]
    radius: Option<f64>,
    /// Maximum reduced order.
    #[arg(long)]
    n_max: Option<usize>,
    /// Rank of the truncated decompositions.
    #[arg(long)]
    tsvd_rank: Option<usize>,
    /// Time step of the implicit Euler integrator.
    #[arg(long)]
    dt: Option<f64>,
    /// Number of time samples per trajectory.
    #[arg(long)]
    steps: Option<usize>,
    /// Number of random test parameters (parametric variants).
    #[arg(long)]
    test_count: Option<usize>,
    /// RNG seed; a fixed seed reproduces outputs byte for byte.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated method tags (pm_wc, pm_wo, ab_wcwo, ab_wz, ds_wcwo,
    /// ds_wz, bt_wcwo, bt_wz, bg_wcwo, bg_wz).
    #[arg(long)]
    methods: Option<String>,
    /// Comma-separated norm tags (l0, l1, l2, linf, h2, hinf, hsh, ha,
    /// indp, indd).
    #[arg(long)]
    norms: Option<String>,
    /// Machine precision used by the MORscore normalization.
    #[arg(long)]
    eps_mach: Option<f64>,
    /// Print the resulting tables to stdout.
    #[arg(long, default_value_t = true)]
    print_tables: bool,
}

#[derive(Args)]
struct ScoreArgs {
    /// Directory holding errorgraph_*.csv files.
    dir: PathBuf,
    /// Machine precision used by the MORscore normalization.
    #[arg(long, default_value_t = 1e-16)]
    eps_mach: f64,
    /// Write the recomputed scores to this CSV file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    /// Grid cells per axis.
    #[arg(long, default_value_t = 16)]
    grid_n: usize,
    /// Conductivity-circle radius.
    #[arg(long, default_value_t = 0.2)]
    radius: f64,
    /// Target directory for E.mtx, A0..A4.mtx, B.mtx, C.mtx.
    #[arg(long)]
    out: PathBuf,
}

fn parse_methods(spec: &str) -> Result<Vec<MethodId>> {
    spec.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            MethodId::from_tag(t).with_context(|| {
                let valid: Vec<&str> = MethodId::ALL.iter().map(|m| m.tag()).collect();
                format!("unknown method `{t}`; valid: {}", valid.join(", "))
            })
        })
        .collect()
}

fn parse_norms(spec: &str) -> Result<Vec<NormId>> {
    spec.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            NormId::from_tag(t).with_context(|| {
                let valid: Vec<&str> = NormId::ALL.iter().map(|n| n.tag()).collect();
                format!("unknown norm `{t}`; valid: {}", valid.join(", "))
            })
        })
        .collect()
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            toml::from_str::<ExperimentConfig>(&text)
                .with_context(|| format!("parsing config {}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(v) = args.variant {
        cfg.variant = v.into();
    }
    if let Some(g) = args.grid_n {
        cfg.grid_n = g;
    }
    if let Some(r) = args.radius {
        cfg.circle_radius = r;
    }
    if let Some(n) = args.n_max {
        cfg.n_max = n;
    }
    if let Some(r) = args.tsvd_rank {
        cfg.tsvd_rank = r;
    }
    if let Some(dt) = args.dt {
        cfg.dt = dt;
    }
    if let Some(k) = args.steps {
        cfg.steps = k;
    }
    if let Some(c) = args.test_count {
        cfg.test_count = c;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(out) = args.out {
        cfg.out_dir = out;
    }
    if let Some(spec) = &args.methods {
        cfg.methods = parse_methods(spec)?;
    }
    if let Some(spec) = &args.norms {
        cfg.norms = parse_norms(spec)?;
    }
    if let Some(e) = args.eps_mach {
        cfg.eps_mach = e;
    }

    let output = run_experiment(&cfg)?;
    let files = emit(&output, &cfg.out_dir)?;
    if args.print_tables {
        for (mode, table) in &output.tables {
            println!(
                "MORscore({}, 1e{}) {} / {} composition",
                table.n_max,
                table.eps_exponent,
                cfg.variant.label(),
                mode.tag()
            );
            println!("{}", render_table_markdown(table));
        }
    }
    println!("wrote {} files to {}", files.len(), cfg.out_dir.display());
    Ok(())
}

fn score(args: ScoreArgs) -> Result<()> {
    let mut entries: Vec<(String, PathBuf)> = fs::read_dir(&args.dir)
        .with_context(|| format!("reading {}", args.dir.display()))?
        .filter_map(|e| e.ok())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), e.path()))
        .filter(|(name, _)| name.starts_with("errorgraph_") && name.ends_with(".csv"))
        .collect();
    if entries.is_empty() {
        bail!("no errorgraph_*.csv files in {}", args.dir.display());
    }
    entries.sort();

    let mut out = String::from("graph,n_max,morscore\n");
    for (name, path) in &entries {
        let text = fs::read_to_string(path)?;
        let graph = parse_graph_csv(&text, GraphMeta::default())
            .with_context(|| format!("parsing {name}"))?;
        let mu = morscore(&graph, args.eps_mach).with_context(|| format!("scoring {name}"))?;
        let stem = name
            .trim_start_matches("errorgraph_")
            .trim_end_matches(".csv");
        out.push_str(&format!("{stem},{},{mu}\n", graph.n_max));
    }
    match &args.out {
        Some(path) => {
            fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {} scores to {}", entries.len(), path.display());
        }
        None => print!("{out}"),
    }
    Ok(())
}

fn export_system(args: ExportArgs) -> Result<()> {
    let cfg = ThermalBlockConfig {
        grid_n: args.grid_n,
        circle_radius: args.radius,
        ..ThermalBlockConfig::default()
    };
    let sys = build(&cfg)?;
    let files = morbench_core::io::export_system(&sys, &args.out)?;
    println!(
        "exported {}-state system ({} files) to {}",
        sys.state_dim(),
        files.len(),
        args.out.display()
    );
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Score(args) => score(args),
        Command::ExportSystem(args) => export_system(args),
    }
}
