mod common;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wp_curvature::fuchsian::octagon_group;
use wp_curvature::qdiff::{
    beltrami_at, beltrami_value, build_qdiff_basis, gram_matrix, orthonormalize, probe_points, SeriesOptions,
};
use wp_curvature::Error;

#[test]
fn basis_has_three_series_and_passes_gates() {
    let run = common::level3();
    let series = run.series.as_ref().unwrap();
    assert_eq!(series.series.len(), 3);
    assert_eq!(series.report.degrees, vec![0, 2, 4]);
    assert!(series.report.tail <= 1e-5 && series.report.automorphy_residual <= 1e-5);
}

#[test]
fn value_at_origin_converges_with_word_length() {
    let run = common::level3();
    let series = &run.series.as_ref().unwrap().series;
    let origin = Complex64::new(0.0, 0.0);
    for q in series {
        let (short, full) = (q.eval_truncated(origin, 10), q.eval(origin));
        assert!((short - full).norm() <= 1e-5 * full.norm().max(1.0), "degree {}", q.degree);
    }
}

#[test]
fn automorphy_holds_at_probes() {
    let run = common::level3();
    let group = run.group.as_ref().unwrap();
    let series = &run.series.as_ref().unwrap().series;
    let z_pts = probe_points(20, 99);
    for q in series {
        for &z in &z_pts {
            for g in &group.generators {
                // Sample well inside the truncation region on both sides.
                let gz = g.apply(z).unwrap();
                if gz.norm() > 0.9 {
                    continue;
                }
                let lhs = q.eval(gz) * g.derivative(z).unwrap().powi(2);
                let rhs = q.eval(z);
                assert!((lhs - rhs).norm() <= 1e-4 * rhs.norm().max(1.0), "degree {} at {z}", q.degree);
            }
        }
    }
}

#[test]
fn beltrami_field_is_invariant_under_generators() {
    let run = common::level3();
    let group = run.group.as_ref().unwrap();
    let q = &run.series.as_ref().unwrap().series[1];
    let z = Complex64::new(0.2, -0.1);
    for g in &group.generators {
        let gz = g.apply(z).unwrap();
        let d = g.derivative(z).unwrap();
        let pulled = beltrami_value(q.eval(gz), gz) * d.conj() / d;
        let here = beltrami_value(q.eval(z), z);
        assert!((pulled - here).norm() <= 1e-4 * here.norm().max(1e-3));
    }
    let field = beltrami_at(q, &[z]);
    assert_eq!(field.values[0], beltrami_value(q.eval(z), z));
}

#[test]
fn gram_is_hermitian_positive_and_orthonormalizes() {
    let run = common::level3();
    let gram = run.gram.as_ref().unwrap();
    let g = &gram.entries;
    assert!((g - g.adjoint()).camax() <= 1e-12 * g.camax());
    assert!(gram.eigenvalues().iter().all(|&v| v > 0.0));

    let surface = run.surface.as_ref().unwrap();
    let raw = run.raw_fields.as_ref().unwrap();
    let (fields, change) = orthonormalize(raw, gram).unwrap();
    let again = gram_matrix(&fields, &surface.weights).unwrap();
    let eye = nalgebra::DMatrix::<Complex64>::identity(3, 3);
    assert!((&again.entries - eye).camax() <= 1e-10);
    assert!((change.c.adjoint() * &change.c - g).camax() <= 1e-10 * g.camax());
}

#[test]
fn gram_converges_between_mesh_levels() {
    let coarse = common::level3().gram.as_ref().unwrap().entries.clone();
    let fine = common::run_through_q(4).gram.unwrap().entries;
    let change = (&coarse - &fine).norm() / fine.norm();
    assert!(change <= 0.02, "relative Frobenius change {change}");
}

#[test]
fn gram_rejects_mismatched_lengths() {
    let run = common::level3();
    let raw = run.raw_fields.as_ref().unwrap();
    assert!(matches!(gram_matrix(raw, &[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn short_word_length_is_rejected() {
    let group = octagon_group(2).unwrap();
    let opts = SeriesOptions { word_length: 3, ..SeriesOptions::default() };
    assert!(matches!(build_qdiff_basis(&group, 3, &opts), Err(Error::InvalidParameter(_))));
}

#[test]
fn beltrami_scales_linearly() {
    let run = common::level3();
    let raw = &run.raw_fields.as_ref().unwrap()[0];
    let c = Complex64::new(0.5, -2.0);
    let scaled = raw.scaled(c);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let p = rng.random_range(0..raw.len());
        assert!((scaled.values[p] - c * raw.values[p]).norm() <= 1e-15 * raw.values[p].norm().max(1.0));
    }
}
