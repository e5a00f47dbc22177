//! Benchmarking toolkit for empirical-Gramian-based model order reduction.
//!
//! The pipeline: build an affine-parametric LTI benchmark system
//! ([`thermal_block`]), assemble empirical Gramians from impulse-response
//! quadrature ([`gramians`]), construct reduced models through five
//! projection methods in two Gramian flavors ([`reducers`]), measure the
//! reduction error in ten approximate norms ([`norms`]), and condense each
//! method/norm pair into a single MORscore ([`morscore`]). The [`harness`]
//! module orchestrates the whole comparison and emits score tables and
//! error graphs; [`io`] provides matrix-market import/export so external
//! systems can be benchmarked.

pub mod error;
pub mod gramians;
pub mod harness;
pub mod io;
pub mod morscore;
pub mod norms;
pub mod reducers;
pub mod system;
pub mod thermal_block;

pub use error::{Error, Result};
pub use gramians::{GramianKind, GramianScales, GramianSet};
pub use harness::{ExperimentConfig, ExperimentOutput, MethodId, RomStatus, RunRecord, Variant};
pub use morscore::{ErrorGraph, GraphMeta, MorScoreRow, MorScoreTable};
pub use norms::{ComposeMode, ErrorContext, NormId};
pub use reducers::{BalancedRealization, ProjectionKind, ProjectionPair, ReducedModel};
pub use system::{AffineLTISystem, Capture, Input, ParameterPoint, SimGrid, Trajectory};
pub use thermal_block::{ThermalBlockConfig, ThetaSpec};
