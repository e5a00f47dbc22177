//! Empirical Gramians against algebraic Kronecker-product oracles.

mod support;

use morbench_core::gramians::{
    empirical_wc, empirical_wo, empirical_wx, empirical_wz, GramianScales,
};
use morbench_core::thermal_block::{self, ThermalBlockConfig};
use morbench_core::{ParameterPoint, SimGrid};
use nalgebra::DMatrix;
use support::{dual_lyapunov_oracle, lyapunov_oracle, sylvester_oracle, ConjugatedDiagonal};

fn quadrature_grid() -> SimGrid {
    SimGrid::new(1e-4, 200_000).unwrap()
}

/// Expected values frozen from the Kronecker Lyapunov oracle for
/// `A = diag(-1, -2)`, `B = [1; 1]`, `E = I`; the oracle run below guards
/// the frozen numbers.
const TWO_STATE_WC: [[f64; 2]; 2] = [[0.5, 1.0 / 3.0], [1.0 / 3.0, 0.25]];

fn two_state() -> morbench_core::AffineLTISystem {
    let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]);
    let b = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
    let c = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
    morbench_core::AffineLTISystem::new(DMatrix::identity(2, 2), vec![a], b, c).unwrap()
}

#[test]
fn wc_two_state_matches_frozen_oracle_values() {
    let sys = two_state();
    let frozen = DMatrix::from_fn(2, 2, |i, j| TWO_STATE_WC[i][j]);
    let oracle = lyapunov_oracle(&sys.a_terms()[0], sys.mass(), sys.input_map());
    assert!((&oracle - &frozen).norm() < 1e-12, "frozen values drifted");

    let w = empirical_wc(
        &sys,
        &ParameterPoint(vec![]),
        quadrature_grid(),
        &GramianScales::for_system(&sys),
    )
    .unwrap();
    assert!((&w.matrix - &frozen).norm() < 1e-3);
}

#[test]
fn wx_two_state_matches_sylvester_oracle() {
    let sys = two_state();
    let oracle = sylvester_oracle(
        &sys.a_terms()[0],
        sys.mass(),
        sys.input_map(),
        sys.output_map(),
    );
    // Same entries as the Lyapunov solution for this symmetric system.
    let frozen = DMatrix::from_fn(2, 2, |i, j| TWO_STATE_WC[i][j]);
    assert!((&oracle - &frozen).norm() < 1e-12);

    let w = empirical_wx(
        &sys,
        &ParameterPoint(vec![]),
        quadrature_grid(),
        &GramianScales::for_system(&sys),
    )
    .unwrap();
    assert!((&w.matrix - &oracle).norm() < 1e-3);
}

#[test]
fn twenty_state_residuals_stay_below_five_percent() {
    let fixture = ConjugatedDiagonal::new(20, -10.0, -0.5, 0xC0FFEE);
    let sys = &fixture.system;
    let theta = ParameterPoint(vec![]);
    let grid = quadrature_grid();
    let scales = GramianScales::for_system(sys);
    let a = &sys.a_terms()[0];
    let e = sys.mass();

    let wc = empirical_wc(sys, &theta, grid, &scales).unwrap();
    let bbt = sys.input_map() * sys.input_map().transpose();
    let res = (a * &wc.matrix * e.transpose() + e * &wc.matrix * a.transpose() + &bbt).norm()
        / bbt.norm();
    assert!(res <= 0.05, "Lyapunov residual {res}");

    let wo = empirical_wo(sys, &theta, grid, &scales).unwrap();
    let ctc = sys.output_map().transpose() * sys.output_map();
    let res_dual = (a.transpose() * &wo.matrix * e + e.transpose() * &wo.matrix * a + &ctc).norm()
        / ctc.norm();
    assert!(res_dual <= 0.05, "dual residual {res_dual}");

    let wx = empirical_wx(sys, &theta, grid, &scales).unwrap();
    let bc = sys.input_map() * sys.output_map();
    let res_sylv = (a * &wx.matrix * e + e * &wx.matrix * a + &bc).norm() / bc.norm();
    assert!(res_sylv <= 0.05, "Sylvester residual {res_sylv}");

    // And directly against the oracle solutions.
    let wc_exact = lyapunov_oracle(a, e, sys.input_map());
    assert!((&wc.matrix - &wc_exact).norm() / wc_exact.norm() < 5e-3);
    let wo_exact = dual_lyapunov_oracle(a, e, sys.output_map());
    assert!((&wo.matrix - &wo_exact).norm() / wo_exact.norm() < 5e-3);
}

#[test]
fn wz_thermal_block_trace_matches_sylvester_oracle() {
    // 64-state averaged-system check at 1e-2 relative on the trace.
    let cfg = ThermalBlockConfig::with_grid(8);
    let sys = thermal_block::build(&cfg).unwrap();
    let theta = ParameterPoint(vec![2.0, 3.0, 1.5, 5.0]);
    let grid = SimGrid::new(1e-4, 100_000).unwrap();
    let wz = empirical_wz(&sys, &theta, grid, &GramianScales::for_system(&sys)).unwrap();
    assert_eq!(wz.matrix.nrows(), 64);
    assert!(wz.matrix.iter().all(|v| v.is_finite()));

    let a = sys.assemble(&theta).unwrap();
    let mut b_bar = DMatrix::zeros(64, 1);
    for m in 0..sys.input_dim() {
        b_bar += sys.input_map().column(m);
    }
    let mut c_bar = DMatrix::zeros(1, 64);
    for q in 0..sys.output_dim() {
        c_bar += sys.output_map().row(q);
    }
    let oracle = sylvester_oracle(&a, sys.mass(), &b_bar, &c_bar);
    let rel = (wz.matrix.trace() - oracle.trace()).abs() / oracle.trace().abs();
    assert!(rel <= 1e-2, "trace mismatch: {rel}");
}

#[test]
fn wo_dual_lyapunov_oracle_two_state() {
    // Asymmetric C exercises the dual route separately.
    let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.3, 0.0, -2.0]);
    let b = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
    let c = DMatrix::from_row_slice(1, 2, &[0.5, 2.0]);
    let sys = morbench_core::AffineLTISystem::new(DMatrix::identity(2, 2), vec![a], b, c).unwrap();
    let w = empirical_wo(
        &sys,
        &ParameterPoint(vec![]),
        quadrature_grid(),
        &GramianScales::for_system(&sys),
    )
    .unwrap();
    let oracle = dual_lyapunov_oracle(&sys.a_terms()[0], sys.mass(), sys.output_map());
    assert!((&w.matrix - &oracle).norm() < 1e-3);
}
