//! Reducers against dense eigen/SVD oracles and balancing properties at
//! quadrature tolerance.

mod support;

use morbench_core::gramians::{empirical_wc, empirical_wo, empirical_wx, GramianScales};
use morbench_core::reducers::{
    ab_wx, balance_wcwo, balance_wx, bt, pm, reduce, tsvd, ProjectionKind,
};
use morbench_core::{AffineLTISystem, ParameterPoint, SimGrid};
use nalgebra::{Complex, DMatrix};
use support::{hsv_oracle, lyapunov_oracle, transfer_function, ConjugatedDiagonal};

fn two_state() -> AffineLTISystem {
    let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]);
    let b = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
    let c = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
    AffineLTISystem::new(DMatrix::identity(2, 2), vec![a], b, c).unwrap()
}

fn fine_grid() -> SimGrid {
    SimGrid::new(1e-4, 200_000).unwrap()
}

fn empirical_pair(sys: &AffineLTISystem) -> (morbench_core::GramianSet, morbench_core::GramianSet) {
    let theta = ParameterPoint(vec![]);
    let scales = GramianScales::for_system(sys);
    let wc = empirical_wc(sys, &theta, fine_grid(), &scales).unwrap();
    let wo = empirical_wo(sys, &theta, fine_grid(), &scales).unwrap();
    (wc, wo)
}

#[test]
fn pm_aligns_with_dominant_eigenvector() {
    let sys = two_state();
    let (wc, _) = empirical_pair(&sys);
    let pair = pm(&wc, 1).unwrap();

    // Dense eigendecomposition oracle on the exact Gramian.
    let exact = lyapunov_oracle(&sys.a_terms()[0], sys.mass(), sys.input_map());
    let eig = exact.symmetric_eigen();
    let dominant = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;
    let v = eig.eigenvectors.column(dominant);
    let u = pair.reconstruct.column(0);
    let angle = u.dot(&v).abs().min(1.0).acos();
    assert!(angle < 1e-3, "angle {angle}");
}

#[test]
fn ab_wx_matches_dense_svd_oracle() {
    let sys = two_state();
    let theta = ParameterPoint(vec![]);
    let wx = empirical_wx(&sys, &theta, fine_grid(), &GramianScales::for_system(&sys)).unwrap();
    let pair = ab_wx(&wx, 2).unwrap();
    // Dense SVD oracle on the same matrix.
    let dense = wx.matrix.clone().svd(true, true);
    for k in 0..2 {
        let u_dense = dense.u.as_ref().unwrap().column(k);
        let u_pair = pair.reconstruct.column(k);
        let align = u_dense.dot(&u_pair).abs();
        assert!((align - 1.0).abs() < 1e-8, "column {k} misaligned: {align}");
    }
    // Each side orthonormal with respect to itself.
    let utu = pair.reconstruct.transpose() * &pair.reconstruct;
    let vvt = &pair.reduce_map * pair.reduce_map.transpose();
    assert!((utu - DMatrix::identity(2, 2)).norm() < 1e-10);
    assert!((vvt - DMatrix::identity(2, 2)).norm() < 1e-10);
}

#[test]
fn balance_wcwo_hsv_match_kronecker_oracle() {
    let sys = two_state();
    let (wc, wo) = empirical_pair(&sys);
    let bal = balance_wcwo(&sys, &wc, &wo, 2).unwrap();

    let wc_exact = lyapunov_oracle(&sys.a_terms()[0], sys.mass(), sys.input_map());
    let oracle = hsv_oracle(&wc_exact, &wc_exact);
    assert_eq!(bal.rank(), 2);
    for (k, reference) in oracle.iter().enumerate() {
        let rel = (bal.hsv[k] - reference).abs() / reference;
        assert!(rel < 1e-3, "hsv {k}: {} vs {reference} ({rel})", bal.hsv[k]);
    }
}

#[test]
fn balance_wcwo_balances_the_symmetric_system() {
    let sys = two_state();
    let (wc, wo) = empirical_pair(&sys);
    let bal = balance_wcwo(&sys, &wc, &wo, 2).unwrap();
    let v = &bal.projections.reduce_map;
    let u = &bal.projections.reconstruct;
    let vu = v * u;
    assert!((&vu - DMatrix::identity(2, 2)).norm() < 1e-8);

    let sigma = DMatrix::from_diagonal(&bal.hsv);
    let wc_bal = v * &wc.matrix * v.transpose();
    let wo_bal = u.transpose() * &wo.matrix * u;
    assert!((&wc_bal - &sigma).norm() / sigma.norm() < 5e-2);
    assert!((&wo_bal - &sigma).norm() / sigma.norm() < 5e-2);
}

#[test]
fn balance_wx_agrees_with_wcwo_on_symmetric_systems() {
    let sys = two_state();
    let theta = ParameterPoint(vec![]);
    let scales = GramianScales::for_system(&sys);
    let wx = empirical_wx(&sys, &theta, fine_grid(), &scales).unwrap();
    assert!(wx.symmetry_defect() < 1e-6);
    let bal_x = balance_wx(&sys, &wx, 2).unwrap();
    let (wc, wo) = empirical_pair(&sys);
    let bal_cw = balance_wcwo(&sys, &wc, &wo, 2).unwrap();
    for k in 0..2 {
        let rel = (bal_x.hsv[k] - bal_cw.hsv[k]).abs() / bal_cw.hsv[k];
        assert!(rel < 5e-2, "hsv {k} differs: {rel}");
    }
    // tr(C WX B) identity: the impulse-response energy is the gain sum.
    let energy = (sys.output_map() * &wx.matrix * sys.input_map())[(0, 0)];
    let gain_sum: f64 = (0..2)
        .map(|k| bal_cw.output_bal.column(k).norm_squared() * bal_cw.hsv[k])
        .sum();
    assert!((energy - gain_sum).abs() / energy.abs() < 5e-2);
}

#[test]
fn balance_wx_correction_enforces_biorthogonality() {
    let sys = two_state();
    let theta = ParameterPoint(vec![]);
    let wx = empirical_wx(&sys, &theta, fine_grid(), &GramianScales::for_system(&sys)).unwrap();
    let bal = balance_wx(&sys, &wx, 2).unwrap();
    let vu = &bal.projections.reduce_map * &bal.projections.reconstruct;
    assert!((vu - DMatrix::identity(2, 2)).norm() < 1e-8);
    assert_eq!(bal.projections.kind, ProjectionKind::PetrovGalerkin);
}

#[test]
fn balance_wx_biorthogonal_on_the_thermal_block() {
    use morbench_core::gramians::empirical_wz;
    use morbench_core::thermal_block::{build, variant_theta, ThermalBlockConfig, ThetaSpec};
    let sys = build(&ThermalBlockConfig::with_grid(16)).unwrap();
    let theta = variant_theta(ThetaSpec::Fixed);
    let grid = SimGrid::new(1e-3, 1000).unwrap();
    let wz = empirical_wz(&sys, &theta, grid, &GramianScales::for_system(&sys)).unwrap();
    let bal = balance_wx(&sys, &wz, 100).unwrap();
    let r = bal.rank();
    assert!(r >= 5, "achieved rank {r} unexpectedly small");
    let vu = &bal.projections.reduce_map * &bal.projections.reconstruct;
    assert!(
        (&vu - DMatrix::identity(r, r)).norm() < 1e-8,
        "VU0 deviates from identity by {:e}",
        (&vu - DMatrix::identity(r, r)).norm()
    );
    // Leading-block truncations inherit the bi-orthogonality.
    for n in [1usize, r / 2, r] {
        let p = bt(&bal, n).unwrap();
        let vu = &p.reduce_map * &p.reconstruct;
        assert!((vu - DMatrix::identity(n, n)).norm() < 1e-8, "order {n}");
    }
}

#[test]
fn oblique_rom_keeps_and_uses_its_mass_matrix() {
    // The approximate-balancing ROM of the thermal block has a nontrivial
    // reduced mass matrix even though E = I, and simulation factorizes it.
    use morbench_core::gramians::{empirical_wc, empirical_wo};
    use morbench_core::system::{simulate, Capture, Input};
    use morbench_core::thermal_block::{build, variant_theta, ThermalBlockConfig, ThetaSpec};
    use nalgebra::DVector;
    let sys = build(&ThermalBlockConfig::with_grid(16)).unwrap();
    let theta = variant_theta(ThetaSpec::Fixed);
    let grid = SimGrid::new(1e-3, 1000).unwrap();
    let scales = GramianScales::for_system(&sys);
    let wc = empirical_wc(&sys, &theta, grid, &scales).unwrap();
    let wo = empirical_wo(&sys, &theta, grid, &scales).unwrap();
    let pair = ab_wcwo(&wc, &wo, 20).unwrap();
    let rom = reduce(&sys, &pair, 10).unwrap();
    let e = rom.system.mass();
    assert!(
        (e - DMatrix::identity(10, 10)).norm() > 1e-6,
        "oblique reduced mass matrix collapsed to the identity"
    );
    let u = DMatrix::from_fn(1, grid.steps, |_, k| (k as f64 * grid.dt).sin());
    let traj = simulate(
        &rom.system,
        &theta,
        Input::Matrix(&u),
        &DVector::zeros(10),
        grid,
        Capture::Output,
    )
    .unwrap();
    assert!(traj.is_finite());
    assert!(traj.values.norm() > 0.0);
}

#[test]
fn bt_full_order_rom_matches_transfer_function() {
    let sys = two_state();
    let (wc, wo) = empirical_pair(&sys);
    let bal = balance_wcwo(&sys, &wc, &wo, 2).unwrap();
    let pair = bt(&bal, 2).unwrap();
    let rom = reduce(&sys, &pair, 2).unwrap();
    let theta = ParameterPoint(vec![]);
    let a_full = sys.assemble(&theta).unwrap();
    let a_rom = rom.system.assemble(&theta).unwrap();
    // Frequency-response oracle at 10 sample points.
    for k in 0..10 {
        let omega = 10f64.powf(-2.0 + 4.0 * k as f64 / 9.0);
        let s = Complex::new(0.0, omega);
        let g_full = transfer_function(&sys, &a_full, s);
        let g_rom = transfer_function(&rom.system, &a_rom, s);
        let err = (&g_full - &g_rom).map(|z| z.norm()).sum();
        let scale = g_full.map(|z| z.norm()).sum();
        assert!(err <= 1e-3 * scale.max(1.0), "omega {omega}: {err}");
    }
}

#[test]
fn hsv_invariant_under_gain_rebalancing() {
    // (B, C) -> (alpha B, C / alpha) preserves Hankel singular values.
    let fixture = ConjugatedDiagonal::new(8, -5.0, -0.5, 0xBEEF);
    let sys = &fixture.system;
    let alpha = 3.7;
    let scaled = AffineLTISystem::new(
        sys.mass().clone(),
        sys.a_terms().to_vec(),
        sys.input_map() * alpha,
        sys.output_map() / alpha,
    )
    .unwrap();
    let grid = SimGrid::new(1e-3, 30_000).unwrap();
    let theta = ParameterPoint(vec![]);
    let hsv_of = |s: &AffineLTISystem| {
        let scales = GramianScales::for_system(s);
        let wc = empirical_wc(s, &theta, grid, &scales).unwrap();
        let wo = empirical_wo(s, &theta, grid, &scales).unwrap();
        balance_wcwo(s, &wc, &wo, 8).unwrap().hsv
    };
    let base = hsv_of(sys);
    let rebalanced = hsv_of(&scaled);
    for k in 0..8 {
        let rel = (base[k] - rebalanced[k]).abs() / base[k];
        assert!(rel < 1e-6, "hsv {k} moved: {rel}");
    }
}

#[test]
fn hsv_are_nonincreasing() {
    let fixture = ConjugatedDiagonal::new(12, -8.0, -0.5, 0xACE);
    let sys = &fixture.system;
    let theta = ParameterPoint(vec![]);
    let grid = SimGrid::new(1e-3, 30_000).unwrap();
    let scales = GramianScales::for_system(sys);
    let wc = empirical_wc(sys, &theta, grid, &scales).unwrap();
    let wo = empirical_wo(sys, &theta, grid, &scales).unwrap();
    let bal = balance_wcwo(sys, &wc, &wo, 12).unwrap();
    for k in 1..bal.rank() {
        assert!(bal.hsv[k] <= bal.hsv[k - 1]);
        assert!(bal.hsv[k] >= 0.0);
    }
}

#[test]
fn tsvd_recovers_prescribed_spectrum() {
    // Deterministic spectrum via the conjugated fixture's exact Gramian.
    let fixture = ConjugatedDiagonal::new(10, -4.0, -0.5, 0x51);
    let exact_wc = lyapunov_oracle(
        &fixture.system.a_terms()[0],
        fixture.system.mass(),
        fixture.system.input_map(),
    );
    let t = tsvd(&exact_wc, 10).unwrap();
    let mut expected = fixture.exact_hsv();
    expected.sort_by(|a, b| b.partial_cmp(a).unwrap());
    for (k, reference) in expected.iter().enumerate() {
        let rel = (t.s[k] - reference).abs() / reference;
        assert!(rel < 1e-10, "sigma {k}: {rel}");
    }
    let rebuilt = &t.u * DMatrix::from_diagonal(&t.s) * t.v.transpose();
    assert!((&exact_wc - rebuilt).norm() <= 1e-10 * exact_wc.norm());
}

#[test]
fn galerkin_stability_is_preserved_on_dissipative_systems() {
    // Symmetric negative definite A: every PM ROM pencil stays stable.
    let fixture = ConjugatedDiagonal::new(10, -6.0, -0.5, 0x7777);
    let sys = &fixture.system;
    let theta = ParameterPoint(vec![]);
    let grid = SimGrid::new(1e-3, 20_000).unwrap();
    let wc = empirical_wc(sys, &theta, grid, &GramianScales::for_system(sys)).unwrap();
    let pair = pm(&wc, 10).unwrap();
    for n in 1..=10 {
        let rom = reduce(sys, &pair, n).unwrap();
        let alpha = morbench_core::system::spectral_abscissa(
            rom.system.mass(),
            &rom.system.assemble(&theta).unwrap(),
        )
        .unwrap();
        assert!(alpha < 0.0, "order {n}: abscissa {alpha}");
    }
}

#[test]
fn reduced_models_export_like_full_systems() {
    let sys = two_state();
    let (wc, _) = empirical_pair(&sys);
    let pair = pm(&wc, 1).unwrap();
    let rom = reduce(&sys, &pair, 1).unwrap().with_provenance("pm_wc");
    assert_eq!(rom.provenance.as_deref(), Some("pm_wc"));
    let dir = tempfile::tempdir().unwrap();
    let files = morbench_core::io::export_system(&rom.system, dir.path()).unwrap();
    assert!(files.iter().any(|f| f.ends_with("E.mtx")));
    let back = morbench_core::io::import_system(dir.path()).unwrap();
    assert_eq!(back.state_dim(), 1);
    assert!((back.mass() - rom.system.mass()).norm() == 0.0);
}
