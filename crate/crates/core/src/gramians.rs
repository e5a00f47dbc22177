//! Empirical system Gramians assembled by quadrature over simulated
//! impulse-response trajectories.
//!
//! All four Gramians use the left-rectangle rule with weight `dt` over the
//! trajectory samples, which matches the summation form of their
//! definitions:
//!
//! ```text
//!   WC = sum_m  sum_k dt x^m_k (x^m_k)^T     (controllability)
//!   WO = sum_q  sum_k dt z^q_k (z^q_k)^T     (observability, dual runs)
//!   WX = sum_m  sum_k dt x^m_k (z^m_k)^T     (cross, square systems)
//!   WZ =        sum_k dt x_k   z_k^T         (non-symmetric cross,
//!                                             averaged input/output)
//! ```
//!
//! Impulses are realized through initial values (`x0 = E^-1 B c_m e_m`,
//! `z0 = E^-T C^T d_q e_q`), so every run has zero input. Per-channel and
//! per-parameter runs execute in parallel; accumulation is a fixed-order
//! sequential sum so results are reproducible.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::{
    simulate, AffineLTISystem, Capture, Input, ParameterPoint, SimGrid, Trajectory,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GramianKind {
    /// Empirical controllability Gramian.
    Wc,
    /// Empirical observability Gramian.
    Wo,
    /// Empirical cross Gramian (square systems only).
    Wx,
    /// Empirical non-symmetric cross Gramian (averaged system).
    Wz,
}

impl GramianKind {
    pub fn label(self) -> &'static str {
        match self {
            GramianKind::Wc => "WC",
            GramianKind::Wo => "WO",
            GramianKind::Wx => "WX",
            GramianKind::Wz => "WZ",
        }
    }
}

/// Perturbation scales for the impulse excitations; `input[m] = c_m`,
/// `output[q] = d_q`. The benchmark keeps all scales at one.
#[derive(Debug, Clone, PartialEq)]
pub struct GramianScales {
    pub input: Vec<f64>,
    pub output: Vec<f64>,
}

impl GramianScales {
    pub fn ones(inputs: usize, outputs: usize) -> Self {
        GramianScales {
            input: vec![1.0; inputs],
            output: vec![1.0; outputs],
        }
    }

    pub fn for_system(sys: &AffineLTISystem) -> Self {
        Self::ones(sys.input_dim(), sys.output_dim())
    }
}

/// An assembled empirical Gramian plus the provenance needed to reproduce it.
#[derive(Debug, Clone)]
pub struct GramianSet {
    pub kind: GramianKind,
    pub matrix: DMatrix<f64>,
    pub scales: GramianScales,
    pub grid: SimGrid,
    pub params_used: Vec<ParameterPoint>,
}

impl GramianSet {
    /// Frobenius distance from the symmetric part, relative to the matrix
    /// norm. WC/WO must stay below ~1e-10; WX/WZ carry no such invariant.
    pub fn symmetry_defect(&self) -> f64 {
        let norm = self.matrix.norm();
        if norm == 0.0 {
            return 0.0;
        }
        (&self.matrix - self.matrix.transpose()).norm() / norm
    }
}

fn finite_or_divergent(traj: &Trajectory, what: &str) -> Result<()> {
    if traj.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite {
            what: format!("{what} trajectory (divergent simulation)"),
        })
    }
}

/// `sum_k dt x_k y_k^T` for two equally long sampled trajectories.
fn rectangle_outer(x: &Trajectory, y: &Trajectory) -> DMatrix<f64> {
    (&x.values * y.values.transpose()) * x.grid.dt
}

fn impulse_response(
    sys: &AffineLTISystem,
    theta: &ParameterPoint,
    x0: &nalgebra::DVector<f64>,
    grid: SimGrid,
    what: &str,
) -> Result<Trajectory> {
    let traj = simulate(sys, theta, Input::Zero, x0, grid, Capture::State)?;
    finite_or_divergent(&traj, what)?;
    Ok(traj)
}

/// Per-channel partial Gramians computed in parallel and summed in channel
/// order; trajectories are dropped as soon as their outer product exists.
fn channel_sum<F>(n: usize, channels: usize, per_channel: F) -> Result<DMatrix<f64>>
where
    F: Fn(usize) -> Result<DMatrix<f64>> + Send + Sync,
{
    let parts: Vec<DMatrix<f64>> = (0..channels)
        .into_par_iter()
        .map(per_channel)
        .collect::<Result<_>>()?;
    Ok(parts
        .into_iter()
        .fold(DMatrix::zeros(n, n), |acc, p| acc + p))
}

/// Empirical controllability Gramian at one parameter point.
pub fn empirical_wc(
    sys: &AffineLTISystem,
    theta: &ParameterPoint,
    grid: SimGrid,
    scales: &GramianScales,
) -> Result<GramianSet> {
    let starts = sys.impulse_states(&scales.input)?;
    let matrix = channel_sum(sys.state_dim(), starts.len(), |m| {
        let x = impulse_response(sys, theta, &starts[m], grid, "controllability")?;
        Ok(rectangle_outer(&x, &x))
    })?;
    Ok(GramianSet {
        kind: GramianKind::Wc,
        matrix,
        scales: scales.clone(),
        grid,
        params_used: vec![theta.clone()],
    })
}

/// Empirical observability Gramian: the dual system's controllability
/// Gramian, one run per output channel.
pub fn empirical_wo(
    sys: &AffineLTISystem,
    theta: &ParameterPoint,
    grid: SimGrid,
    scales: &GramianScales,
) -> Result<GramianSet> {
    let dual = sys.dual();
    let starts = dual.impulse_states(&scales.output)?;
    let matrix = channel_sum(sys.state_dim(), starts.len(), |q| {
        let z = impulse_response(&dual, theta, &starts[q], grid, "observability")?;
        Ok(rectangle_outer(&z, &z))
    })?;
    Ok(GramianSet {
        kind: GramianKind::Wo,
        matrix,
        scales: scales.clone(),
        grid,
        params_used: vec![theta.clone()],
    })
}

/// Empirical cross Gramian, pairing the primal response of input channel
/// `m` with the dual response of output channel `m`. Square systems only.
pub fn empirical_wx(
    sys: &AffineLTISystem,
    theta: &ParameterPoint,
    grid: SimGrid,
    scales: &GramianScales,
) -> Result<GramianSet> {
    if sys.input_dim() != sys.output_dim() {
        return Err(Error::NonSquareSystem {
            inputs: sys.input_dim(),
            outputs: sys.output_dim(),
        });
    }
    let dual = sys.dual();
    let primal_starts = sys.impulse_states(&scales.input)?;
    let dual_starts = dual.impulse_states(&scales.output)?;
    let matrix = channel_sum(sys.state_dim(), primal_starts.len(), |m| {
        let x = impulse_response(sys, theta, &primal_starts[m], grid, "cross (primal)")?;
        let z = impulse_response(&dual, theta, &dual_starts[m], grid, "cross (dual)")?;
        Ok(rectangle_outer(&x, &z))
    })?;
    Ok(GramianSet {
        kind: GramianKind::Wx,
        matrix,
        scales: scales.clone(),
        grid,
        params_used: vec![theta.clone()],
    })
}

/// Empirical non-symmetric cross Gramian: the cross Gramian of the average
/// system `(A, B_bar, C_bar, E)` with `B_bar = sum_m c_m B_{:,m}` and
/// `C_bar = sum_q d_q C_{q,:}`, computed from one primal and one dual run.
pub fn empirical_wz(
    sys: &AffineLTISystem,
    theta: &ParameterPoint,
    grid: SimGrid,
    scales: &GramianScales,
) -> Result<GramianSet> {
    let averaged = average_system(sys, scales)?;
    let ones = [1.0];
    let dual = averaged.dual();
    let x0 = averaged.impulse_states(&ones)?;
    let z0 = dual.impulse_states(&ones)?;
    let (x, z) = rayon::join(
        || impulse_response(&averaged, theta, &x0[0], grid, "cross (primal)"),
        || impulse_response(&dual, theta, &z0[0], grid, "cross (dual)"),
    );
    Ok(GramianSet {
        kind: GramianKind::Wz,
        matrix: rectangle_outer(&x?, &z?),
        scales: scales.clone(),
        grid,
        params_used: vec![theta.clone()],
    })
}

fn average_system(sys: &AffineLTISystem, scales: &GramianScales) -> Result<AffineLTISystem> {
    if scales.input.len() != sys.input_dim() || scales.output.len() != sys.output_dim() {
        return Err(Error::DimensionMismatch {
            what: "gramian scales",
            expected: sys.input_dim(),
            found: scales.input.len(),
        });
    }
    let n = sys.state_dim();
    let mut b_bar = DMatrix::zeros(n, 1);
    for (m, c) in scales.input.iter().enumerate() {
        b_bar
            .column_mut(0)
            .zip_apply(&sys.input_map().column(m), |bi, v| *bi += c * v);
    }
    let mut c_bar = DMatrix::zeros(1, n);
    for (q, d) in scales.output.iter().enumerate() {
        c_bar
            .row_mut(0)
            .zip_apply(&sys.output_map().row(q), |ci, v| *ci += d * v);
    }
    AffineLTISystem::new(sys.mass().clone(), sys.a_terms().to_vec(), b_bar, c_bar)
}

/// The Gramian flavors that [`parametric_average`] can assemble.
pub type GramianBuilder =
    fn(&AffineLTISystem, &ParameterPoint, SimGrid, &GramianScales) -> Result<GramianSet>;

pub fn builder_for(kind: GramianKind) -> GramianBuilder {
    match kind {
        GramianKind::Wc => empirical_wc,
        GramianKind::Wo => empirical_wo,
        GramianKind::Wx => empirical_wx,
        GramianKind::Wz => empirical_wz,
    }
}

/// Parameter-averaged empirical Gramian `sum_{theta in Theta_h} W(theta)`.
///
/// Per-parameter Gramians are computed in parallel and summed in sample
/// order. A failure at one sample is reported with the offending parameter.
pub fn parametric_average(
    kind: GramianKind,
    sys: &AffineLTISystem,
    thetas: &[ParameterPoint],
    grid: SimGrid,
    scales: &GramianScales,
) -> Result<GramianSet> {
    if thetas.is_empty() {
        return Err(Error::EmptyParameterSet);
    }
    let build = builder_for(kind);
    let parts: Vec<GramianSet> = thetas
        .par_iter()
        .enumerate()
        .map(|(index, theta)| {
            build(sys, theta, grid, scales).map_err(|e| Error::ParameterSample {
                index,
                theta: theta.as_slice().to_vec(),
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let n = sys.state_dim();
    let matrix = parts
        .iter()
        .fold(DMatrix::zeros(n, n), |acc, g| acc + &g.matrix);
    Ok(GramianSet {
        kind,
        matrix,
        scales: scales.clone(),
        grid,
        params_used: thetas.to_vec(),
    })
}
