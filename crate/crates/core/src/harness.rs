//! Experiment orchestration: builds the benchmark, samples parameters,
//! runs the method x norm x order comparison, composes parametric error
//! graphs, scores them, and emits tables and graphs as files.
//!
//! Every random draw comes from a dedicated, label-derived ChaCha stream of
//! the configured seed, and all reductions run in a fixed order, so a fixed
//! seed reproduces byte-identical outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gramians::{parametric_average, GramianKind, GramianScales, GramianSet};
use crate::morscore::{
    aggregate_unstable, morscore, render_graph_csv, render_table_csv, render_table_markdown,
    ErrorGraph, GraphMeta, MorScoreRow, MorScoreTable,
};
use crate::norms::{
    compose_relative, full_order_normalizer, relative_error, ComposeMode, ErrorContext, NormId,
};
use crate::reducers::{
    ab_wcwo, ab_wx, balance_wcwo, balance_wx, bg, bt, ds_wcwo, ds_wz, pm, BalancedRealization,
    ProjectionPair,
};
use crate::system::{
    simulate, spectral_abscissa, AffineLTISystem, Capture, Input, ParameterPoint, SimGrid,
};
use crate::thermal_block::{self, ThermalBlockConfig, ThetaSpec};

/// Benchmark parameterization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Parameters treated as constants.
    Fixed,
    /// One scalar parameter scaling all four conductivities.
    Single,
    /// All four conductivities free.
    Multi,
}

impl Variant {
    pub fn label(self) -> &'static str {
        match self {
            Variant::Fixed => "fixed",
            Variant::Single => "single",
            Variant::Multi => "multi",
        }
    }

    /// Effective parameter dimension of the variant.
    pub fn dim(self) -> usize {
        match self {
            Variant::Fixed => 0,
            Variant::Single => 1,
            Variant::Multi => 4,
        }
    }
}

/// The ten compared method/flavor combinations, in table row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodId {
    PmWc,
    PmWo,
    AbWcwo,
    AbWz,
    DsWcwo,
    DsWz,
    BtWcwo,
    BtWz,
    BgWcwo,
    BgWz,
}

/// Which Gramians feed a method; also selects the balanced realization
/// used for its realization-based error norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    WcWo,
    Wz,
}

impl MethodId {
    pub const ALL: [MethodId; 10] = [
        MethodId::PmWc,
        MethodId::PmWo,
        MethodId::AbWcwo,
        MethodId::AbWz,
        MethodId::DsWcwo,
        MethodId::DsWz,
        MethodId::BtWcwo,
        MethodId::BtWz,
        MethodId::BgWcwo,
        MethodId::BgWz,
    ];

    /// Table row label.
    pub fn label(self) -> &'static str {
        match self {
            MethodId::PmWc => "PM(WC)",
            MethodId::PmWo => "PM(WO)",
            MethodId::AbWcwo => "AB(WC,WO)",
            MethodId::AbWz => "AB(WZ)",
            MethodId::DsWcwo => "DS(WC,WO)",
            MethodId::DsWz => "DS(WZ)",
            MethodId::BtWcwo => "BT(WC,WO)",
            MethodId::BtWz => "BT(WZ)",
            MethodId::BgWcwo => "BG(WC,WO)",
            MethodId::BgWz => "BG(WZ)",
        }
    }

    /// File-name tag.
    pub fn tag(self) -> &'static str {
        match self {
            MethodId::PmWc => "pm_wc",
            MethodId::PmWo => "pm_wo",
            MethodId::AbWcwo => "ab_wcwo",
            MethodId::AbWz => "ab_wz",
            MethodId::DsWcwo => "ds_wcwo",
            MethodId::DsWz => "ds_wz",
            MethodId::BtWcwo => "bt_wcwo",
            MethodId::BtWz => "bt_wz",
            MethodId::BgWcwo => "bg_wcwo",
            MethodId::BgWz => "bg_wz",
        }
    }

    pub fn from_tag(tag: &str) -> Option<MethodId> {
        MethodId::ALL.iter().copied().find(|m| m.tag() == tag)
    }

    pub fn short_name(self) -> &'static str {
        match self {
            MethodId::PmWc | MethodId::PmWo => "pm",
            MethodId::AbWcwo | MethodId::AbWz => "ab",
            MethodId::DsWcwo | MethodId::DsWz => "ds",
            MethodId::BtWcwo | MethodId::BtWz => "bt",
            MethodId::BgWcwo | MethodId::BgWz => "bg",
        }
    }

    pub fn flavor_name(self) -> &'static str {
        match self {
            MethodId::PmWc => "wc",
            MethodId::PmWo => "wo",
            MethodId::AbWcwo | MethodId::DsWcwo | MethodId::BtWcwo | MethodId::BgWcwo => "wcwo",
            MethodId::AbWz | MethodId::DsWz | MethodId::BtWz | MethodId::BgWz => "wz",
        }
    }

    pub fn flavor(self) -> Flavor {
        match self {
            MethodId::PmWc
            | MethodId::PmWo
            | MethodId::AbWcwo
            | MethodId::DsWcwo
            | MethodId::BtWcwo
            | MethodId::BgWcwo => Flavor::WcWo,
            _ => Flavor::Wz,
        }
    }
}

fn default_methods() -> Vec<MethodId> {
    MethodId::ALL.to_vec()
}

fn default_norms() -> Vec<NormId> {
    NormId::ALL.to_vec()
}

fn default_grid_n() -> usize {
    16
}

fn default_radius() -> f64 {
    0.2
}

fn default_n_max() -> usize {
    50
}

fn default_rank() -> usize {
    100
}

fn default_dt() -> f64 {
    1e-3
}

fn default_steps() -> usize {
    1000
}

fn default_test_count() -> usize {
    10
}

fn default_eps_mach() -> f64 {
    1e-16
}

fn default_out() -> PathBuf {
    PathBuf::from("morbench-out")
}

/// Full experiment description; mirrored one-to-one by the CLI flags and
/// the TOML config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub variant: Variant,
    pub grid_n: usize,
    pub circle_radius: f64,
    /// Maximum reduced order in the error graphs.
    pub n_max: usize,
    /// Rank of the truncated decompositions.
    pub tsvd_rank: usize,
    pub dt: f64,
    pub steps: usize,
    /// Random test parameter draws (parametric variants).
    pub test_count: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub methods: Vec<MethodId>,
    pub norms: Vec<NormId>,
    pub eps_mach: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            variant: Variant::Fixed,
            grid_n: default_grid_n(),
            circle_radius: default_radius(),
            n_max: default_n_max(),
            tsvd_rank: default_rank(),
            dt: default_dt(),
            steps: default_steps(),
            test_count: default_test_count(),
            seed: 0,
            out_dir: default_out(),
            methods: default_methods(),
            norms: default_norms(),
            eps_mach: default_eps_mach(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_max == 0 {
            return Err(Error::Config {
                reason: "n_max must be positive".into(),
            });
        }
        if self.n_max > self.tsvd_rank {
            return Err(Error::Config {
                reason: format!(
                    "n_max ({}) must not exceed the decomposition rank ({})",
                    self.n_max, self.tsvd_rank
                ),
            });
        }
        if self.methods.is_empty() || self.norms.is_empty() {
            return Err(Error::Config {
                reason: "method and norm selections must be nonempty".into(),
            });
        }
        if !(self.eps_mach > 0.0 && self.eps_mach < 1.0) {
            return Err(Error::Config {
                reason: format!("eps_mach must be in (0, 1), got {}", self.eps_mach),
            });
        }
        if self.variant != Variant::Fixed && self.test_count == 0 {
            return Err(Error::Config {
                reason: "parametric variants need at least one test sample".into(),
            });
        }
        SimGrid::new(self.dt, self.steps)?;
        Ok(())
    }

    pub fn sim_grid(&self) -> SimGrid {
        SimGrid {
            dt: self.dt,
            steps: self.steps,
        }
    }

    pub fn block_config(&self) -> ThermalBlockConfig {
        ThermalBlockConfig {
            grid_n: self.grid_n,
            circle_radius: self.circle_radius,
            ..ThermalBlockConfig::default()
        }
    }

    fn eps_floor(&self) -> f64 {
        self.eps_mach
    }
}

fn stream_rng(seed: u64, label: &str, index: u64) -> ChaCha12Rng {
    // Stable label-derived stream; FNV-1a over the label keeps the
    // streams independent of method/norm masks.
    let mut h = 0xcbf29ce484222325u64;
    for byte in label.bytes() {
        h ^= byte as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    ChaCha12Rng::seed_from_u64(seed ^ h ^ index.wrapping_mul(0x9E3779B97F4A7C15))
}

/// Training samples: a logarithmically uniform grid over the variant's
/// effective parameter space, `3 * dim(theta)` points (one-at-a-time for
/// the multi variant), or the single fixed point.
pub fn sample_training(variant: Variant, _seed: u64) -> Vec<ParameterPoint> {
    let log_grid = [1.0, 10f64.sqrt(), 10.0];
    match variant {
        Variant::Fixed => vec![thermal_block::variant_theta(ThetaSpec::Fixed)],
        Variant::Single => log_grid
            .iter()
            .map(|&s| thermal_block::variant_theta(ThetaSpec::Single(s)))
            .collect(),
        Variant::Multi => {
            let center = 10f64.sqrt();
            let mut points = Vec::with_capacity(12);
            for p in 0..4 {
                for &g in &log_grid {
                    let mut theta = [center; 4];
                    theta[p] = g;
                    points.push(thermal_block::variant_theta(ThetaSpec::Multi(theta)));
                }
            }
            points
        }
    }
}

/// Test samples: `count` random draws from a logarithmically uniform
/// distribution over the effective parameter space (each coordinate
/// `10^U[0,1]`), deterministic under the seed; the fixed variant tests at
/// its fixed point. Training and test sets of the parametric variants are
/// disjoint almost surely, which is asserted.
pub fn sample_test(variant: Variant, seed: u64, count: usize) -> Vec<ParameterPoint> {
    let mut rng = stream_rng(seed, "test-samples", 0);
    let log_uniform = |rng: &mut ChaCha12Rng| 10f64.powf(rng.random::<f64>());
    let points: Vec<ParameterPoint> = match variant {
        Variant::Fixed => vec![thermal_block::variant_theta(ThetaSpec::Fixed)],
        Variant::Single => (0..count)
            .map(|_| thermal_block::variant_theta(ThetaSpec::Single(log_uniform(&mut rng))))
            .collect(),
        Variant::Multi => (0..count)
            .map(|_| {
                let mut theta = [0.0; 4];
                for t in &mut theta {
                    *t = log_uniform(&mut rng);
                }
                thermal_block::variant_theta(ThetaSpec::Multi(theta))
            })
            .collect(),
    };
    if variant != Variant::Fixed {
        let training = sample_training(variant, seed);
        assert!(
            points.iter().all(|t| !training.contains(t)),
            "training and test parameter sets must be disjoint"
        );
    }
    points
}

/// ROM health at one (method, order, test parameter) cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RomStatus {
    Stable,
    Unstable,
    Failed(String),
}

impl RomStatus {
    pub fn is_stable(&self) -> bool {
        matches!(self, RomStatus::Stable)
    }
}

/// One cell of the sweep: the relative errors of one reduced order against
/// one test parameter, in the order of the configured norms.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub method: MethodId,
    pub order: usize,
    pub theta_index: usize,
    pub status: RomStatus,
    pub errors: Vec<f64>,
    pub elapsed: Duration,
}

/// Everything a run produces before it is written to disk.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub training: Vec<ParameterPoint>,
    pub test: Vec<ParameterPoint>,
    pub tables: Vec<(ComposeMode, MorScoreTable)>,
    pub graphs: Vec<ErrorGraph>,
    pub records: Vec<RunRecord>,
}

/// Projected full-rank system of one method; order-`n` models are its
/// leading blocks.
struct ProjectedSystem {
    e: DMatrix<f64>,
    a_terms: Vec<DMatrix<f64>>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    rank: usize,
}

impl ProjectedSystem {
    fn new(sys: &AffineLTISystem, pair: &ProjectionPair) -> Self {
        let project = |m: &DMatrix<f64>| &pair.reduce_map * (m * &pair.reconstruct);
        ProjectedSystem {
            e: project(sys.mass()),
            a_terms: sys.a_terms().iter().map(project).collect(),
            b: &pair.reduce_map * sys.input_map(),
            c: sys.output_map() * &pair.reconstruct,
            rank: pair.rank(),
        }
    }

    /// Assembles the projected `A(theta)` at full rank.
    fn assemble(&self, theta: &ParameterPoint) -> DMatrix<f64> {
        let mut a = self.a_terms[0].clone();
        for (p, w) in theta.as_slice().iter().enumerate() {
            a.zip_apply(&self.a_terms[p + 1], |ai, ti| *ai += w * ti);
        }
        a
    }

    fn order_n(&self, a_full: &DMatrix<f64>, n: usize) -> AffineLTISystem {
        let e = self.e.view((0, 0), (n, n)).into_owned();
        let a = a_full.view((0, 0), (n, n)).into_owned();
        let b = self.b.rows(0, n).into_owned();
        let c = self.c.columns(0, n).into_owned();
        AffineLTISystem::new(e, vec![a], b, c).expect("projected dimensions are consistent")
    }
}

enum MethodState {
    Ready(ProjectedSystem),
    Broken(String),
}

fn build_pair(
    method: MethodId,
    wc: &GramianSet,
    wo: &GramianSet,
    wz: &GramianSet,
    bal_cw: &Result<BalancedRealization>,
    bal_z: &Result<BalancedRealization>,
    rank: usize,
) -> Result<ProjectionPair> {
    let full = |bal: &Result<BalancedRealization>| match bal {
        Ok(b) => Ok(b.rank()),
        Err(e) => Err(Error::Config {
            reason: format!("balancing unavailable: {e}"),
        }),
    };
    match method {
        MethodId::PmWc => pm(wc, rank),
        MethodId::PmWo => pm(wo, rank),
        MethodId::AbWcwo => ab_wcwo(wc, wo, rank),
        MethodId::AbWz => ab_wx(wz, rank),
        MethodId::DsWcwo => ds_wcwo(wc, wo, rank),
        MethodId::DsWz => ds_wz(wz, rank),
        MethodId::BtWcwo => bt(bal_cw.as_ref().map_err(clone_err)?, full(bal_cw)?),
        MethodId::BtWz => bt(bal_z.as_ref().map_err(clone_err)?, full(bal_z)?),
        MethodId::BgWcwo => bg(bal_cw.as_ref().map_err(clone_err)?, full(bal_cw)?),
        MethodId::BgWz => bg(bal_z.as_ref().map_err(clone_err)?, full(bal_z)?),
    }
}

fn clone_err(e: &Error) -> Error {
    Error::Config {
        reason: e.to_string(),
    }
}

/// Runs the full comparison pipeline and returns tables, graphs, and the
/// raw per-cell records.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let sys = thermal_block::build(&cfg.block_config())?;
    let grid = cfg.sim_grid();
    let scales = GramianScales::for_system(&sys);
    let n_state = sys.state_dim();
    let eps = cfg.eps_floor();

    let training = sample_training(cfg.variant, cfg.seed);
    let test = sample_test(cfg.variant, cfg.seed, cfg.test_count);

    // Parameter-averaged training Gramians. The cross Gramian always runs:
    // it also supplies the H2 estimate of the {WC,WO}-flavored methods.
    let wc = parametric_average(GramianKind::Wc, &sys, &training, grid, &scales)?;
    let wo = parametric_average(GramianKind::Wo, &sys, &training, grid, &scales)?;
    let wz = parametric_average(GramianKind::Wz, &sys, &training, grid, &scales)?;

    let rank = cfg.tsvd_rank.min(n_state);
    let bal_cw = balance_wcwo(&sys, &wc, &wo, rank).map(|b| b.with_cross(&wz));
    let bal_z = balance_wx(&sys, &wz, rank);

    // Projection pairs and projected systems per selected method; a method
    // whose construction fails stays in the table with worst-case cells.
    let methods: Vec<(MethodId, MethodState)> = cfg
        .methods
        .iter()
        .map(|&m| {
            let state = match build_pair(m, &wc, &wo, &wz, &bal_cw, &bal_z, rank) {
                Ok(pair) => MethodState::Ready(ProjectedSystem::new(&sys, &pair)),
                Err(e) => MethodState::Broken(e.to_string()),
            };
            (m, state)
        })
        .collect();

    // Shared per-parameter excitation and full-model reference trajectory.
    let inputs: Vec<DMatrix<f64>> = (0..test.len())
        .map(|k| {
            let mut rng = stream_rng(cfg.seed, "test-input", k as u64);
            DMatrix::from_fn(sys.input_dim(), grid.steps, |_, _| {
                rng.sample(StandardNormal)
            })
        })
        .collect();
    let full_outputs: Vec<DMatrix<f64>> = test
        .par_iter()
        .zip(inputs.par_iter())
        .map(|(theta, u)| {
            let x0 = DVector::zeros(n_state);
            simulate(&sys, theta, Input::Matrix(u), &x0, grid, Capture::Output).map(|t| t.values)
        })
        .collect::<Result<_>>()?;

    // Sweep over (theta, method, order); rayon over the outer grid, fixed
    // collection order afterwards.
    let cells: Vec<Vec<RunRecord>> = test
        .par_iter()
        .enumerate()
        .flat_map(|(ti, theta)| {
            methods
                .par_iter()
                .map(move |(mid, state)| (ti, theta, mid, state))
        })
        .map(|(ti, theta, mid, state)| {
            sweep_orders(
                cfg,
                *mid,
                state,
                theta,
                ti,
                &full_outputs[ti],
                &inputs[ti],
                flavor_bal(*mid, &bal_cw, &bal_z),
                grid,
                n_state,
                eps,
            )
        })
        .collect();

    // Re-key records into deterministic (method, theta, order) order.
    let mut records: Vec<RunRecord> = Vec::with_capacity(cells.len() * cfg.n_max);
    for (mi, _) in methods.iter().enumerate() {
        for ti in 0..test.len() {
            let chunk = &cells[ti * methods.len() + mi];
            records.extend(chunk.iter().cloned());
        }
    }

    let modes: Vec<ComposeMode> = if cfg.variant == Variant::Fixed {
        vec![ComposeMode::L2]
    } else {
        ComposeMode::ALL.to_vec()
    };

    // Per-(theta, norm) full-order normalizers for the composition.
    let normalizers = normalizer_table(cfg, &test, &full_outputs, &bal_cw, &bal_z, grid, n_state);

    let mut graphs = Vec::new();
    let mut tables = Vec::new();
    for &mode in &modes {
        let mut rows = Vec::new();
        for (mi, (mid, _)) in methods.iter().enumerate() {
            let base = mi * test.len() * cfg.n_max;
            let mut scores = Vec::new();
            for (ni, &norm) in cfg.norms.iter().enumerate() {
                let mut points = Vec::with_capacity(cfg.n_max);
                for n in 1..=cfg.n_max {
                    let mut rel = Vec::with_capacity(test.len());
                    let mut weights = Vec::with_capacity(test.len());
                    for ti in 0..test.len() {
                        let rec = &records[base + ti * cfg.n_max + (n - 1)];
                        debug_assert_eq!(rec.order, n);
                        debug_assert_eq!(rec.theta_index, ti);
                        rel.push(rec.errors[ni]);
                        weights.push(normalizers[flavor_index(*mid)][ti][ni]);
                    }
                    points.push((n, compose_relative(&rel, &weights, mode, eps)));
                }
                let graph = ErrorGraph::new(
                    cfg.n_max,
                    points,
                    GraphMeta {
                        method: mid.short_name().into(),
                        flavor: mid.flavor_name().into(),
                        norm: norm.tag().into(),
                        variant: cfg.variant.label().into(),
                        mode: mode.tag().into(),
                    },
                );
                scores.push(morscore(&graph, cfg.eps_mach)?);
                graphs.push(graph);
            }
            let counts: Vec<usize> = (0..test.len())
                .map(|ti| {
                    (1..=cfg.n_max)
                        .filter(|n| !records[base + ti * cfg.n_max + (n - 1)].status.is_stable())
                        .count()
                })
                .collect();
            rows.push(MorScoreRow {
                label: mid.label().into(),
                scores,
                unstable: aggregate_unstable(&counts, mode),
            });
        }
        tables.push((
            mode,
            MorScoreTable {
                norms: cfg.norms.clone(),
                rows,
                n_max: cfg.n_max,
                eps_exponent: crate::morscore::eps_exponent(cfg.eps_mach),
            },
        ));
    }

    Ok(ExperimentOutput {
        config: cfg.clone(),
        training,
        test,
        tables,
        graphs,
        records,
    })
}

fn flavor_index(m: MethodId) -> usize {
    match m.flavor() {
        Flavor::WcWo => 0,
        Flavor::Wz => 1,
    }
}

fn flavor_bal<'a>(
    m: MethodId,
    bal_cw: &'a Result<BalancedRealization>,
    bal_z: &'a Result<BalancedRealization>,
) -> Option<&'a BalancedRealization> {
    match m.flavor() {
        Flavor::WcWo => bal_cw.as_ref().ok(),
        Flavor::Wz => bal_z.as_ref().ok(),
    }
}

/// Full-order normalizers per flavor, test parameter and selected norm.
/// Signal norms never need the realization; a broken realization degrades
/// only the realization-based columns to unit weights.
fn normalizer_table(
    cfg: &ExperimentConfig,
    test: &[ParameterPoint],
    full_outputs: &[DMatrix<f64>],
    bal_cw: &Result<BalancedRealization>,
    bal_z: &Result<BalancedRealization>,
    grid: SimGrid,
    n_state: usize,
) -> Vec<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(2);
    for flavor in [Flavor::WcWo, Flavor::Wz] {
        let bal = match flavor {
            Flavor::WcWo => bal_cw.as_ref().ok(),
            Flavor::Wz => bal_z.as_ref().ok(),
        };
        let mut per_theta = Vec::with_capacity(test.len());
        for (ti, _) in test.iter().enumerate() {
            let ctx =
                ErrorContext::failed(&full_outputs[ti], grid, bal, 0, n_state, cfg.eps_floor());
            let per_norm = cfg
                .norms
                .iter()
                .map(|&norm| full_order_normalizer(&ctx, norm).unwrap_or(1.0))
                .collect();
            per_theta.push(per_norm);
        }
        out.push(per_theta);
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn sweep_orders(
    cfg: &ExperimentConfig,
    method: MethodId,
    state: &MethodState,
    theta: &ParameterPoint,
    theta_index: usize,
    full_output: &DMatrix<f64>,
    input: &DMatrix<f64>,
    bal: Option<&BalancedRealization>,
    grid: SimGrid,
    n_state: usize,
    eps: f64,
) -> Vec<RunRecord> {
    let worst = |n: usize, status: RomStatus, elapsed: Duration| RunRecord {
        method,
        order: n,
        theta_index,
        status,
        errors: vec![1.0; cfg.norms.len()],
        elapsed,
    };
    let proj = match state {
        MethodState::Ready(p) => p,
        MethodState::Broken(reason) => {
            return (1..=cfg.n_max)
                .map(|n| worst(n, RomStatus::Failed(reason.clone()), Duration::ZERO))
                .collect()
        }
    };
    let a_full = proj.assemble(theta);
    (1..=cfg.n_max)
        .map(|n| {
            let started = std::time::Instant::now();
            if n > proj.rank {
                return worst(
                    n,
                    RomStatus::Failed(format!("order exceeds achieved rank {}", proj.rank)),
                    started.elapsed(),
                );
            }
            let rom = proj.order_n(&a_full, n);
            let stable = match spectral_abscissa(rom.mass(), &rom.a_terms()[0]) {
                Ok(alpha) => alpha < 0.0,
                Err(e) => return worst(n, RomStatus::Failed(e.to_string()), started.elapsed()),
            };
            if !stable {
                return worst(n, RomStatus::Unstable, started.elapsed());
            }
            let x0 = DVector::zeros(n);
            let empty_theta = ParameterPoint(vec![]);
            let reduced_output = match simulate(
                &rom,
                &empty_theta,
                Input::Matrix(input),
                &x0,
                grid,
                Capture::Output,
            ) {
                Ok(t) if t.is_finite() => t.values,
                Ok(_) => {
                    return worst(
                        n,
                        RomStatus::Failed("divergent reduced trajectory".into()),
                        started.elapsed(),
                    )
                }
                Err(e) => return worst(n, RomStatus::Failed(e.to_string()), started.elapsed()),
            };
            let errors: Vec<f64> =
                match ErrorContext::new(full_output, &reduced_output, grid, bal, n, n_state, eps) {
                    Ok(ctx) => cfg
                        .norms
                        .iter()
                        .map(|&norm| relative_error(&ctx, norm).unwrap_or(1.0))
                        .collect(),
                    Err(_) => vec![1.0; cfg.norms.len()],
                };
            RunRecord {
                method,
                order: n,
                theta_index,
                status: RomStatus::Stable,
                errors,
                elapsed: started.elapsed(),
            }
        })
        .collect()
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a ExperimentConfig,
    state_dim: usize,
    training: Vec<Vec<f64>>,
    test: Vec<Vec<f64>>,
}

/// Writes the MORscore tables (CSV and Markdown), every error graph, and a
/// run manifest into `dir`. Re-running with the same seed reproduces the
/// files byte for byte.
pub fn emit(output: &ExperimentOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let put = |name: String, content: String, written: &mut Vec<PathBuf>| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    let variant = output.config.variant.label();
    for (mode, table) in &output.tables {
        put(
            format!("morscore_{variant}_{}.csv", mode.tag()),
            render_table_csv(table),
            &mut written,
        )?;
        put(
            format!("morscore_{variant}_{}.md", mode.tag()),
            render_table_markdown(table),
            &mut written,
        )?;
    }
    for graph in &output.graphs {
        let name = format!(
            "errorgraph_{}_{}_{}_{}.csv",
            graph.meta.method, graph.meta.flavor, graph.meta.norm, graph.meta.mode
        );
        put(name, render_graph_csv(graph), &mut written)?;
    }
    let manifest = Manifest {
        tool: "morbench",
        version: env!("CARGO_PKG_VERSION"),
        config: &output.config,
        state_dim: output.config.grid_n * output.config.grid_n,
        training: output
            .training
            .iter()
            .map(|t| t.as_slice().to_vec())
            .collect(),
        test: output.test.iter().map(|t| t.as_slice().to_vec()).collect(),
    };
    let body = toml::to_string(&manifest).map_err(|e| Error::Config {
        reason: format!("manifest serialization: {e}"),
    })?;
    put("manifest.toml".into(), body, &mut written)?;
    Ok(written)
}
