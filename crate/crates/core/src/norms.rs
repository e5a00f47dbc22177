//! Approximate error norms: four signal norms evaluated on output
//! trajectories, four system norms and two modified induced norms evaluated
//! through a balanced realization of the full model instead of frequency
//! sampling, plus the parametric compositions over a test sample.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reducers::BalancedRealization;
use crate::system::SimGrid;

/// Entries with smaller magnitude are clamped before the log-space
/// geometric mean, so exactly reproduced samples floor the L0 value
/// instead of collapsing it to zero.
pub const L0_FLOOR: f64 = 1e-300;

/// The ten error measures, in table column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormId {
    #[serde(rename = "l0")]
    L0,
    #[serde(rename = "l1")]
    L1,
    #[serde(rename = "l2")]
    L2,
    #[serde(rename = "linf")]
    Linf,
    #[serde(rename = "h2")]
    H2,
    #[serde(rename = "hinf")]
    Hinf,
    #[serde(rename = "hsh")]
    Hsh,
    #[serde(rename = "ha")]
    Hankel,
    #[serde(rename = "indp")]
    InducedPrimal,
    #[serde(rename = "indd")]
    InducedDual,
}

impl NormId {
    pub const ALL: [NormId; 10] = [
        NormId::L0,
        NormId::L1,
        NormId::L2,
        NormId::Linf,
        NormId::H2,
        NormId::Hinf,
        NormId::Hsh,
        NormId::Hankel,
        NormId::InducedPrimal,
        NormId::InducedDual,
    ];

    /// Column header.
    pub fn label(self) -> &'static str {
        match self {
            NormId::L0 => "L0",
            NormId::L1 => "L1",
            NormId::L2 => "L2",
            NormId::Linf => "Linf",
            NormId::H2 => "H2",
            NormId::Hinf => "Hinf",
            NormId::Hsh => "HSH",
            NormId::Hankel => "Ha",
            NormId::InducedPrimal => "IndP",
            NormId::InducedDual => "IndD",
        }
    }

    /// File-name tag.
    pub fn tag(self) -> &'static str {
        match self {
            NormId::L0 => "l0",
            NormId::L1 => "l1",
            NormId::L2 => "l2",
            NormId::Linf => "linf",
            NormId::H2 => "h2",
            NormId::Hinf => "hinf",
            NormId::Hsh => "hsh",
            NormId::Hankel => "ha",
            NormId::InducedPrimal => "indp",
            NormId::InducedDual => "indd",
        }
    }

    pub fn from_tag(tag: &str) -> Option<NormId> {
        NormId::ALL.iter().copied().find(|n| n.tag() == tag)
    }
}

/// Composition of per-parameter values into one parametric value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComposeMode {
    /// Sum over the sample (mean for instability counts).
    L1,
    /// Root of the sum of squares.
    L2,
    /// Maximum.
    Linf,
}

impl ComposeMode {
    pub const ALL: [ComposeMode; 3] = [ComposeMode::L1, ComposeMode::L2, ComposeMode::Linf];

    pub fn tag(self) -> &'static str {
        match self {
            ComposeMode::L1 => "l1",
            ComposeMode::L2 => "l2",
            ComposeMode::Linf => "linf",
        }
    }

    pub fn from_tag(tag: &str) -> Option<ComposeMode> {
        ComposeMode::ALL.iter().copied().find(|m| m.tag() == tag)
    }
}

fn check_shapes(y: &DMatrix<f64>, yt: &DMatrix<f64>) -> Result<()> {
    if y.nrows() != yt.nrows() || y.ncols() != yt.ncols() {
        return Err(Error::DimensionMismatch {
            what: "output trajectories",
            expected: y.len(),
            found: yt.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    Ok(())
}

/// Approximate L0 "norm": geometric mean of the entrywise absolute errors
/// over all `Q*K` samples, computed in log space.
pub fn l0_approx(y: &DMatrix<f64>, yt: &DMatrix<f64>) -> Result<f64> {
    check_shapes(y, yt)?;
    let n = y.len() as f64;
    let log_sum: f64 = y
        .iter()
        .zip(yt.iter())
        .map(|(a, b)| (a - b).abs().max(L0_FLOOR).ln())
        .sum();
    Ok((log_sum / n).exp())
}

/// Approximate Lebesgue L1 norm: `dt * |vec(y - yt)|_1`.
pub fn l1_signal(y: &DMatrix<f64>, yt: &DMatrix<f64>, dt: f64) -> Result<f64> {
    check_shapes(y, yt)?;
    Ok(dt
        * y.iter()
            .zip(yt.iter())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}

/// Approximate Lebesgue L2 norm: `sqrt(dt) * |vec(y - yt)|_2`.
pub fn l2_signal(y: &DMatrix<f64>, yt: &DMatrix<f64>, dt: f64) -> Result<f64> {
    check_shapes(y, yt)?;
    let ss: f64 = y
        .iter()
        .zip(yt.iter())
        .map(|(a, b)| {
            let e = a - b;
            e * e
        })
        .sum();
    Ok(dt.sqrt() * ss.sqrt())
}

/// Approximate Lebesgue L-infinity norm: `|vec(y - yt)|_inf`.
pub fn linf_signal(y: &DMatrix<f64>, yt: &DMatrix<f64>) -> Result<f64> {
    check_shapes(y, yt)?;
    Ok(y.iter()
        .zip(yt.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Everything needed to evaluate the ten error measures of one reduced
/// order against the full model: the two output trajectories, the full
/// model's balanced realization, and the clamping floor for relative
/// errors. A context marked failed (unstable or unbuildable ROM) yields
/// the worst-case relative error 1 in every norm; a missing realization
/// does the same for the realization-based norms only.
pub struct ErrorContext<'a> {
    pub full_output: &'a DMatrix<f64>,
    pub reduced_output: Option<&'a DMatrix<f64>>,
    pub grid: SimGrid,
    pub bal: Option<&'a BalancedRealization>,
    /// Reduced order `n`; balanced coordinates are partitioned at this index.
    pub order: usize,
    /// Full state dimension `N`, capped by the realization rank for the
    /// singular-value sums.
    pub state_dim: usize,
    pub eps_floor: f64,
    pub failed: bool,
}

impl<'a> ErrorContext<'a> {
    pub fn new(
        full_output: &'a DMatrix<f64>,
        reduced_output: &'a DMatrix<f64>,
        grid: SimGrid,
        bal: Option<&'a BalancedRealization>,
        order: usize,
        state_dim: usize,
        eps_floor: f64,
    ) -> Result<Self> {
        check_shapes(full_output, reduced_output)?;
        Ok(ErrorContext {
            full_output,
            reduced_output: Some(reduced_output),
            grid,
            bal,
            order,
            state_dim,
            eps_floor,
            failed: false,
        })
    }

    /// Context for an unstable or failed ROM: every relative error is 1.
    pub fn failed(
        full_output: &'a DMatrix<f64>,
        grid: SimGrid,
        bal: Option<&'a BalancedRealization>,
        order: usize,
        state_dim: usize,
        eps_floor: f64,
    ) -> Self {
        ErrorContext {
            full_output,
            reduced_output: None,
            grid,
            bal,
            order,
            state_dim,
            eps_floor,
            failed: true,
        }
    }

    fn realization(&self) -> Result<&'a BalancedRealization> {
        self.bal.ok_or(Error::MissingRealization)
    }

    /// `N_eff = min(N, r)`: singular values past the decomposition rank are
    /// unavailable and treated as zero.
    pub fn n_eff(&self) -> usize {
        self.state_dim.min(self.bal.map_or(0, |b| b.rank()))
    }
}

fn sigma_at(bal: &BalancedRealization, n: usize) -> f64 {
    if n < bal.rank() {
        bal.hsv[n]
    } else {
        0.0
    }
}

/// Approximate Hardy-2 norm: `sqrt(|trace(C2 WZ22 B2)|)` over the discarded
/// balanced coordinates, the trace reducing the Q x M product to a scalar.
pub fn h2_approx(ctx: &ErrorContext<'_>) -> Result<f64> {
    h2_from(ctx.realization()?, ctx.order)
}

fn h2_from(bal: &BalancedRealization, n: usize) -> Result<f64> {
    let wz = bal.cross_bal.as_ref().ok_or(Error::MissingCrossGramian)?;
    let r = bal.rank();
    if n >= r {
        return Ok(0.0);
    }
    let s = r - n;
    let c2 = bal.output_bal.columns(n, s);
    let b2 = bal.input_bal.rows(n, s);
    let w22 = wz.view((n, n), (s, s));
    let product = c2 * (w22 * b2);
    let trace: f64 = (0..product.nrows().min(product.ncols()))
        .map(|i| product[(i, i)])
        .sum();
    Ok(trace.abs().sqrt())
}

/// Approximate Hardy-infinity norm: `2 (N_eff - n) sigma_{n+1}`.
pub fn hinf_approx(ctx: &ErrorContext<'_>, n_eff: usize) -> Result<f64> {
    Ok(hinf_from(ctx.realization()?, ctx.order, n_eff))
}

fn hinf_from(bal: &BalancedRealization, n: usize, n_eff: usize) -> f64 {
    if n >= n_eff {
        return 0.0;
    }
    2.0 * (n_eff - n) as f64 * sigma_at(bal, n)
}

/// Approximate Hilbert-Schmidt-Hankel norm: `sqrt(N_eff - n) * sigma_{n+1}`.
pub fn hsh_approx(ctx: &ErrorContext<'_>, n_eff: usize) -> Result<f64> {
    Ok(hsh_from(ctx.realization()?, ctx.order, n_eff))
}

fn hsh_from(bal: &BalancedRealization, n: usize, n_eff: usize) -> f64 {
    if n >= n_eff {
        return 0.0;
    }
    ((n_eff - n) as f64).sqrt() * sigma_at(bal, n)
}

/// Hankel norm: the principal discarded Hankel singular value.
pub fn hankel_norm(ctx: &ErrorContext<'_>) -> Result<f64> {
    Ok(sigma_at(ctx.realization()?, ctx.order))
}

/// Modified induced primal norm:
/// `sqrt(lambda_max(B2^T diag(sigma_2) B2))` over the M x M matrix, using
/// the balanced-coordinate approximation `WO22 ~ diag(sigma)`.
pub fn induced_primal(ctx: &ErrorContext<'_>) -> Result<f64> {
    Ok(induced_primal_from(ctx.realization()?, ctx.order))
}

fn induced_primal_from(bal: &BalancedRealization, n: usize) -> f64 {
    let r = bal.rank();
    if n >= r {
        return 0.0;
    }
    let s = r - n;
    let mut scaled = bal.input_bal.rows(n, s).into_owned();
    for k in 0..s {
        let w = sigma_at(bal, n + k).max(0.0).sqrt();
        let mut row = scaled.row_mut(k);
        row *= w;
    }
    let m = scaled.transpose() * &scaled;
    m.symmetric_eigen().eigenvalues.max().max(0.0).sqrt()
}

/// Modified induced dual norm:
/// `sqrt(lambda_max(C2 diag(sigma_2) C2^T))` over the Q x Q matrix.
pub fn induced_dual(ctx: &ErrorContext<'_>) -> Result<f64> {
    Ok(induced_dual_from(ctx.realization()?, ctx.order))
}

fn induced_dual_from(bal: &BalancedRealization, n: usize) -> f64 {
    let r = bal.rank();
    if n >= r {
        return 0.0;
    }
    let s = r - n;
    let mut scaled = bal.output_bal.columns(n, s).into_owned();
    for k in 0..s {
        let w = sigma_at(bal, n + k).max(0.0).sqrt();
        let mut col = scaled.column_mut(k);
        col *= w;
    }
    let m = &scaled * scaled.transpose();
    m.symmetric_eigen().eigenvalues.max().max(0.0).sqrt()
}

/// Absolute error of the context's reduced order in the given norm.
pub fn absolute_error(ctx: &ErrorContext<'_>, id: NormId) -> Result<f64> {
    let reduced = || {
        ctx.reduced_output.ok_or_else(|| Error::Config {
            reason: "signal norm requested without a reduced trajectory".into(),
        })
    };
    match id {
        NormId::L0 => l0_approx(ctx.full_output, reduced()?),
        NormId::L1 => l1_signal(ctx.full_output, reduced()?, ctx.grid.dt),
        NormId::L2 => l2_signal(ctx.full_output, reduced()?, ctx.grid.dt),
        NormId::Linf => linf_signal(ctx.full_output, reduced()?),
        NormId::H2 => h2_approx(ctx),
        NormId::Hinf => hinf_approx(ctx, ctx.n_eff()),
        NormId::Hsh => hsh_approx(ctx, ctx.n_eff()),
        NormId::Hankel => hankel_norm(ctx),
        NormId::InducedPrimal => induced_primal(ctx),
        NormId::InducedDual => induced_dual(ctx),
    }
}

/// True for the norms evaluated through the balanced realization rather
/// than from trajectories.
pub fn is_realization_based(id: NormId) -> bool {
    !matches!(id, NormId::L0 | NormId::L1 | NormId::L2 | NormId::Linf)
}

/// The full-order reference the relative error divides by: for signal norms
/// the same norm of the full output against zero, for the realization-based
/// norms the same formula at `n = 0`.
pub fn full_order_normalizer(ctx: &ErrorContext<'_>, id: NormId) -> Result<f64> {
    let zero;
    let value = match id {
        NormId::L0 | NormId::L1 | NormId::L2 | NormId::Linf => {
            zero = DMatrix::zeros(ctx.full_output.nrows(), ctx.full_output.ncols());
            match id {
                NormId::L0 => l0_approx(ctx.full_output, &zero)?,
                NormId::L1 => l1_signal(ctx.full_output, &zero, ctx.grid.dt)?,
                NormId::L2 => l2_signal(ctx.full_output, &zero, ctx.grid.dt)?,
                NormId::Linf => linf_signal(ctx.full_output, &zero)?,
                _ => unreachable!(),
            }
        }
        NormId::H2 => h2_from(ctx.realization()?, 0)?,
        NormId::Hinf => hinf_from(ctx.realization()?, 0, ctx.n_eff()),
        NormId::Hsh => hsh_from(ctx.realization()?, 0, ctx.n_eff()),
        NormId::Hankel => sigma_at(ctx.realization()?, 0),
        NormId::InducedPrimal => induced_primal_from(ctx.realization()?, 0),
        NormId::InducedDual => induced_dual_from(ctx.realization()?, 0),
    };
    if value == 0.0 || !value.is_finite() {
        return Err(Error::ZeroNormalizer {
            norm: id.label().into(),
        });
    }
    Ok(value)
}

/// Relative error in `(0, 1]`: the absolute error divided by the full-order
/// normalizer, clamped into `[eps_floor, 1]`. Failed or unstable ROMs yield
/// the worst case 1, as do realization-based norms without a realization.
pub fn relative_error(ctx: &ErrorContext<'_>, id: NormId) -> Result<f64> {
    if ctx.failed {
        return Ok(1.0);
    }
    if is_realization_based(id) && ctx.bal.is_none() {
        return Ok(1.0);
    }
    let value = absolute_error(ctx, id)?;
    let normalizer = full_order_normalizer(ctx, id)?;
    let rel = value / normalizer;
    if rel.is_nan() {
        return Ok(1.0);
    }
    Ok(rel.clamp(ctx.eps_floor, 1.0))
}

/// Plain composition of per-parameter values: sum, root-sum-square or max.
pub fn parametric_compose(values: &[f64], mode: ComposeMode) -> f64 {
    match mode {
        ComposeMode::L1 => values.iter().sum(),
        ComposeMode::L2 => values.iter().map(|v| v * v).sum::<f64>().sqrt(),
        ComposeMode::Linf => values.iter().copied().fold(0.0, f64::max),
    }
}

/// Composition for relative-error graphs: per-parameter relative errors
/// `rel` weighted by their full-order normalizers `weight`. Sum and RSS
/// compose absolute errors and divide by the identically composed
/// normalizers; max takes the largest relative error. Result stays in
/// `(0, 1]` and is clamped to `eps_floor` from below.
pub fn compose_relative(rel: &[f64], weight: &[f64], mode: ComposeMode, eps_floor: f64) -> f64 {
    debug_assert_eq!(rel.len(), weight.len());
    let value = match mode {
        ComposeMode::Linf => rel.iter().copied().fold(0.0, f64::max),
        ComposeMode::L1 | ComposeMode::L2 => {
            let abs: Vec<f64> = rel.iter().zip(weight).map(|(r, w)| r * w).collect();
            let num = parametric_compose(&abs, mode);
            let den = parametric_compose(weight, mode);
            if den > 0.0 {
                num / den
            } else {
                1.0
            }
        }
    };
    value.clamp(eps_floor, 1.0)
}
