mod common;

use common::{random_model, random_q, rng};
use nalgebra::{DVector, Vector3};
use rand::seq::SliceRandom;
use rand::Rng;
use robcal_core::estimator::ols_estimate;
use robcal_core::io::bundled_model;
use robcal_core::kinematics::{forward_kinematics, DhField, JointVector, ManipulatorModel, ParamId};
use robcal_core::regressor::{elastostatic_regressor, geometric_regressor, ComplianceParameterMap, Wrench};
use robcal_core::simulator::{simulate_measurements, stack_design, StudyDesign};

/// Position Jacobian column by central differences of forward kinematics.
fn fd_column(model: &ManipulatorModel, q: &JointVector, marker: usize, joint: usize) -> Vector3<f64> {
    let h = 1e-6;
    let mut plus = q.as_slice().to_vec();
    let mut minus = plus.clone();
    plus[joint] += h;
    minus[joint] -= h;
    let pp = forward_kinematics(model, &plus.into(), marker).unwrap().position;
    let pm = forward_kinematics(model, &minus.into(), marker).unwrap().position;
    (pp - pm) / (2.0 * h)
}

#[test]
fn compliance_regressor_matches_virtual_work_loop() {
    // torque about joint j from a pure force is (∂p_load/∂q_j)·F; the marker
    // moves by k_j τ_j ∂p_marker/∂q_j
    let mut r = rng(21);
    for _ in 0..10 {
        let model = random_model(&mut r, 6);
        let q = random_q(&mut r, 6);
        let cmap = ComplianceParameterMap::new(1, vec![q.as_slice()[1]], vec![2, 3, 4, 5]).unwrap();
        let k = DVector::from_fn(5, |_, _| r.random_range(0.1..3.0) * 1e-6);
        let f = Vector3::new(r.random_range(-500.0..500.0), r.random_range(-500.0..500.0), -2600.0);
        let wrench = Wrench::force(f, 2);
        for marker in 0..2 {
            let a = elastostatic_regressor(&model, &q, &wrench, &cmap, marker).unwrap();
            let predicted = &a * &k;
            let mut oracle = Vector3::zeros();
            for (i, joint) in [1usize, 2, 3, 4, 5].into_iter().enumerate() {
                let torque = fd_column(&model, &q, 2, joint).dot(&f);
                oracle += fd_column(&model, &q, marker, joint) * (k[i] * torque);
            }
            assert!(
                (Vector3::from_iterator(predicted.iter().copied()) - oracle).norm() <= 1e-6 * oracle.norm(),
                "marker {marker}"
            );
        }
    }
}

#[test]
fn compliance_regressor_is_linear_in_the_wrench() {
    let mut r = rng(22);
    let model = random_model(&mut r, 6);
    let q = random_q(&mut r, 6);
    let cmap = ComplianceParameterMap::new(1, vec![q.as_slice()[1]], vec![2, 3, 4, 5]).unwrap();
    let w = Wrench::force(Vector3::new(120.0, -40.0, -2600.0), 1);
    let base = elastostatic_regressor(&model, &q, &w, &cmap, 0).unwrap();
    assert_eq!(elastostatic_regressor(&model, &q, &w.scaled(4.0), &cmap, 0).unwrap(), &base * 4.0);
    let odd = elastostatic_regressor(&model, &q, &w.scaled(0.3), &cmap, 0).unwrap();
    assert!((odd - &base * 0.3).norm() <= 1e-14 * base.norm());
}

#[test]
fn every_row_hits_exactly_one_bucket() {
    let mf = bundled_model();
    let design = StudyDesign::kr270(mf.compliance.clone().unwrap(), mf.load_marker.unwrap());
    let recs = simulate_measurements(&design, &mf.model).unwrap();
    let sys = stack_design(&design, &mf.model, &recs, 1e-5).unwrap();
    for row in 0..sys.n_rows() {
        let hits = (0..5).filter(|&c| sys.b[(row, c)] != 0.0).count();
        assert_eq!(hits, 1, "row {row}");
    }
}

#[test]
fn geometric_prediction_is_first_order_accurate() {
    let mf = bundled_model();
    let q = JointVector::from_degrees(&[79.2, -0.01, -5.57, 51.0, -97.52, -91.67]);
    for joint in [1, 2, 3] {
        let p = ParamId::Joint { joint, field: DhField::A };
        let delta = 1e-5;
        let jac = geometric_regressor(&mf.model, &q, 0, &[p]).unwrap();
        let linear = jac.column(0) * delta;
        let exact = forward_kinematics(&mf.model.perturbed(p, delta).unwrap(), &q, 0).unwrap().position
            - forward_kinematics(&mf.model, &q, 0).unwrap().position;
        assert!((linear - exact).norm() <= 1e-3 * exact.norm());
        // zero error, zero prediction
        assert!((jac.column(0) * 0.0).iter().all(|v| *v == 0.0));
    }
}

#[test]
fn stacked_rows_and_permutation_invariance() {
    let mf = bundled_model();
    let mut design = StudyDesign::kr270(mf.compliance.clone().unwrap(), mf.load_marker.unwrap());
    design.seed = 3;
    let mut recs = simulate_measurements(&design, &mf.model).unwrap();
    let sys = stack_design(&design, &mf.model, &recs, 1e-5).unwrap();
    assert_eq!(sys.n_rows(), 810);
    let x = ols_estimate(&sys).unwrap().x_hat;

    recs.shuffle(&mut rng(4));
    let shuffled = stack_design(&design, &mf.model, &recs, 1e-5).unwrap();
    let y = ols_estimate(&shuffled).unwrap().x_hat;
    assert!((&x - &y).norm() <= 1e-12 * x.norm());
}
