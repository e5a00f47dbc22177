//! Generalized affine-parametric LTI systems and their time-domain simulation.
//!
//! The system class is
//!
//! ```text
//!     E x'(t) = (A_0 + sum_p theta_p A_p) x(t) + B u(t)
//!        y(t) = C x(t)
//! ```
//!
//! with a nonsingular mass matrix `E`. Simulation uses implicit Euler with a
//! fixed step; one factorization of `(E - dt*A(theta))` is reused across all
//! steps. Dirac impulses are realized as the initial value `x0 = E^-1 B w`
//! with zero input, which is equivalent for linear systems.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameter vector `theta` of length `P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterPoint(pub Vec<f64>);

impl ParameterPoint {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ParameterPoint {
    fn from(v: Vec<f64>) -> Self {
        ParameterPoint(v)
    }
}

/// Fixed-step time grid: `steps` samples at `t_k = k*dt`, `k = 0..steps`.
///
/// The horizon `T = dt*steps` is exclusive; a trajectory on this grid covers
/// `[0, T)` with one sample per quadrature rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimGrid {
    pub dt: f64,
    pub steps: usize,
}

impl SimGrid {
    pub fn new(dt: f64, steps: usize) -> Result<Self> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::Config {
                reason: format!("time step must be positive and finite, got {dt}"),
            });
        }
        if steps < 1 {
            return Err(Error::Config {
                reason: "time grid needs at least one step".into(),
            });
        }
        Ok(SimGrid { dt, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.steps as f64
    }
}

/// Sampled trajectory; column `k` holds the sample at `t = k*dt`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub values: DMatrix<f64>,
    pub grid: SimGrid,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Which quantity a simulation records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Capture {
    State,
    Output,
}

/// Input signal for a simulation run.
pub enum Input<'a> {
    /// Zero input (impulses enter through the initial value).
    Zero,
    /// One column per time sample; column `k` is `u(t_k)`. Must have
    /// `M` rows and at least `steps` columns.
    Matrix(&'a DMatrix<f64>),
    /// Input as a function of time.
    Function(&'a dyn Fn(f64) -> DVector<f64>),
}

/// Generalized affine-parametric LTI system.
#[derive(Debug, Clone)]
pub struct AffineLTISystem {
    e: DMatrix<f64>,
    a_terms: Vec<DMatrix<f64>>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
}

impl AffineLTISystem {
    /// Builds a system from `E`, `[A_0, A_1, ..., A_P]`, `B` and `C`,
    /// checking mutual dimension consistency. `E` is required nonsingular,
    /// which is enforced where it is factorized.
    pub fn new(
        e: DMatrix<f64>,
        a_terms: Vec<DMatrix<f64>>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
    ) -> Result<Self> {
        let n = e.nrows();
        if e.ncols() != n {
            return Err(Error::DimensionMismatch {
                what: "mass matrix columns",
                expected: n,
                found: e.ncols(),
            });
        }
        if a_terms.is_empty() {
            return Err(Error::Config {
                reason: "system needs at least the constant term A_0".into(),
            });
        }
        for a in &a_terms {
            if a.nrows() != n || a.ncols() != n {
                return Err(Error::DimensionMismatch {
                    what: "system matrix term",
                    expected: n,
                    found: a.nrows().max(a.ncols()),
                });
            }
        }
        if b.nrows() != n {
            return Err(Error::DimensionMismatch {
                what: "input matrix rows",
                expected: n,
                found: b.nrows(),
            });
        }
        if c.ncols() != n {
            return Err(Error::DimensionMismatch {
                what: "output matrix columns",
                expected: n,
                found: c.ncols(),
            });
        }
        Ok(AffineLTISystem { e, a_terms, b, c })
    }

    pub fn state_dim(&self) -> usize {
        self.e.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.c.nrows()
    }

    pub fn param_dim(&self) -> usize {
        self.a_terms.len() - 1
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.e
    }

    pub fn a_terms(&self) -> &[DMatrix<f64>] {
        &self.a_terms
    }

    pub fn input_map(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn output_map(&self) -> &DMatrix<f64> {
        &self.c
    }

    /// Assembles `A(theta) = A_0 + sum_p theta_p A_p`.
    pub fn assemble(&self, theta: &ParameterPoint) -> Result<DMatrix<f64>> {
        if theta.len() != self.param_dim() {
            return Err(Error::DimensionMismatch {
                what: "parameter point",
                expected: self.param_dim(),
                found: theta.len(),
            });
        }
        let mut a = self.a_terms[0].clone();
        for (p, weight) in theta.as_slice().iter().enumerate() {
            a.zip_apply(&self.a_terms[p + 1], |ai, ti| *ai += weight * ti);
        }
        Ok(a)
    }

    /// The dual system `(E^T, A(theta)^T, C^T, B^T)`; its inputs are the
    /// primal outputs and vice versa.
    pub fn dual(&self) -> AffineLTISystem {
        AffineLTISystem {
            e: self.e.transpose(),
            a_terms: self.a_terms.iter().map(|a| a.transpose()).collect(),
            b: self.c.transpose(),
            c: self.b.transpose(),
        }
    }

    /// Initial values realizing the impulse `B (scale_m e_m) delta(t)` for
    /// every input channel, i.e. the columns of `E^-1 B` scaled per channel.
    pub fn impulse_states(&self, scales: &[f64]) -> Result<Vec<DVector<f64>>> {
        if scales.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                what: "impulse scales",
                expected: self.input_dim(),
                found: scales.len(),
            });
        }
        let lu = self.e.clone().lu();
        let cols = lu.solve(&self.b).ok_or_else(|| Error::Singular {
            what: "mass matrix".into(),
        })?;
        Ok(scales
            .iter()
            .enumerate()
            .map(|(m, s)| DVector::from(cols.column(m) * *s))
            .collect())
    }
}

/// Implicit-Euler simulation of `E x' = A(theta) x + B u` from `x(0) = x0`.
///
/// Returns `steps` samples (column `k` at `t = k*dt`, including the initial
/// value). With `Capture::Output` the samples are `y_k = C x_k`.
pub fn simulate(
    sys: &AffineLTISystem,
    theta: &ParameterPoint,
    input: Input<'_>,
    x0: &DVector<f64>,
    grid: SimGrid,
    capture: Capture,
) -> Result<Trajectory> {
    let n = sys.state_dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            what: "initial state",
            expected: n,
            found: x0.len(),
        });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "initial state".into(),
        });
    }
    if let Input::Matrix(u) = input {
        if u.nrows() != sys.input_dim() {
            return Err(Error::DimensionMismatch {
                what: "input matrix rows",
                expected: sys.input_dim(),
                found: u.nrows(),
            });
        }
        if u.ncols() < grid.steps {
            return Err(Error::DimensionMismatch {
                what: "input matrix columns",
                expected: grid.steps,
                found: u.ncols(),
            });
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "input signal".into(),
            });
        }
    }

    let a = sys.assemble(theta)?;
    let mut lhs = sys.e.clone();
    lhs.zip_apply(&a, |li, ai| *li -= grid.dt * ai);
    let lu = lhs.lu();
    // One factorization per (theta, dt); the step map and the input map are
    // solved for once and applied by matrix-vector products.
    let singular = || Error::Singular {
        what: "implicit Euler matrix (E - dt*A)".into(),
    };
    let step_map = lu.solve(&sys.e).ok_or_else(singular)?;
    let input_map = match input {
        Input::Zero => None,
        _ => Some(lu.solve(&(&sys.b * grid.dt)).ok_or_else(singular)?),
    };

    let rows = match capture {
        Capture::State => n,
        Capture::Output => sys.output_dim(),
    };
    let mut values = DMatrix::zeros(rows, grid.steps);
    let record = |k: usize, x: &DVector<f64>, values: &mut DMatrix<f64>| match capture {
        Capture::State => values.column_mut(k).copy_from(x),
        Capture::Output => values.column_mut(k).gemv(1.0, &sys.c, x, 0.0),
    };

    let mut x = x0.clone();
    record(0, &x, &mut values);

    let mut next = DVector::zeros(n);
    for k in 1..grid.steps {
        next.gemv(1.0, &step_map, &x, 0.0);
        match input {
            Input::Zero => {}
            Input::Matrix(u) => next.gemv(1.0, input_map.as_ref().unwrap(), &u.column(k), 1.0),
            Input::Function(f) => {
                let uk = f(k as f64 * grid.dt);
                if uk.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite {
                        what: "input signal".into(),
                    });
                }
                next.gemv(1.0, input_map.as_ref().unwrap(), &uk, 1.0);
            }
        }
        std::mem::swap(&mut x, &mut next);
        record(k, &x, &mut values);
    }

    Ok(Trajectory { values, grid })
}

/// Dual-system simulation: `E^T z' = A(theta)^T z + C^T v` from `z(0) = z0`.
/// Output capture records `B^T z_k`.
pub fn simulate_dual(
    sys: &AffineLTISystem,
    theta: &ParameterPoint,
    input: Input<'_>,
    z0: &DVector<f64>,
    grid: SimGrid,
    capture: Capture,
) -> Result<Trajectory> {
    simulate(&sys.dual(), theta, input, z0, grid, capture)
}

/// Largest real part over the generalized eigenvalues of the pencil
/// `(A, E)`, i.e. the eigenvalues of `E^-1 A`. A result `>= 0` means the
/// pencil is not asymptotically stable.
pub fn spectral_abscissa(e: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<f64> {
    if e.nrows() != a.nrows() || e.ncols() != a.ncols() || e.nrows() != e.ncols() {
        return Err(Error::DimensionMismatch {
            what: "pencil matrices",
            expected: e.nrows(),
            found: a.nrows(),
        });
    }
    let lu = e.clone().lu();
    let m = lu.solve(a).ok_or_else(|| Error::Singular {
        what: "pencil mass matrix".into(),
    })?;
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "pencil E^-1 A".into(),
        });
    }
    let schur = nalgebra::linalg::Schur::try_new(m, f64::EPSILON, 100_000)
        .ok_or(Error::EigenvalueFailure)?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max))
}
