use nalgebra::DVector;

use wp_curvature::rankone::{lemma51_check, wedge_of, QuaternionicStructure};
use wp_curvature::wedge::{exterior_square, j_wedge_matrix};
use wp_curvature::Error;

#[test]
fn induced_j_matches_the_complex_structure_action() {
    for m in 1..=2 {
        let qs = QuaternionicStructure::new(m).unwrap();
        assert!((exterior_square(&qs.j) - j_wedge_matrix(2 * m)).amax() <= 1e-15);
    }
}

#[test]
fn wedge_operator_agrees_with_the_tensor() {
    let qs = QuaternionicStructure::new(1).unwrap();
    let q = qs.wedge_operator();
    assert!((&q - q.transpose()).amax() <= 1e-12);
    let u = DVector::from_vec(vec![0.3, -1.0, 0.5, 2.0]);
    let v = DVector::from_vec(vec![1.0, 0.2, -0.7, 0.1]);
    let w = wedge_of(&u, &v);
    let direct = qs.curvature(&u, &v, &u, &v).unwrap();
    assert!(((w.transpose() * &q * &w)[(0, 0)] - direct).abs() <= 1e-12 * direct.abs().max(1.0));
}

#[test]
fn two_vector_checks_report_each_margin() {
    let r = lemma51_check(&[1, 2], 5, 3, "h").unwrap();
    assert_eq!(r.trials.len(), 10);
    for t in &r.trials {
        assert!(t.fixed_residual <= 1e-12);
        assert!(t.pullback_residual <= 1e-12);
        assert!(t.lsq_residual >= t.omega_norm / 2.0);
        // Constant curvature -4 on the quaternionic line makes Q(w, w) = -4 |w|^2.
        assert!((t.null_residual - 4.0 * t.omega_norm.powi(2)).abs() <= 1e-10);
    }
    assert!(!r.passed);
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(matches!(lemma51_check(&[1], 0, 0, "h"), Err(Error::InvalidParameter(_))));
    assert!(matches!(lemma51_check(&[0], 1, 0, "h"), Err(Error::InvalidParameter(_))));
}
