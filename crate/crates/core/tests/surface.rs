use std::sync::OnceLock;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use wp_curvature::fuchsian::octagon_group;
use wp_curvature::smoothing::SmoothingOperator;
use wp_curvature::surface::{assemble_laplacian, build_mesh, green_kernel, DOperator, DiscreteSurface, GreenKernel};
use wp_curvature::Error;

fn surface(level: u32) -> DiscreteSurface {
    let mut s = build_mesh(&octagon_group(2).unwrap(), level, 100_000).unwrap();
    assemble_laplacian(&mut s).unwrap();
    s
}

fn level3() -> &'static (DiscreteSurface, DOperator) {
    static S: OnceLock<(DiscreteSurface, DOperator)> = OnceLock::new();
    S.get_or_init(|| {
        let s = surface(3);
        let d = DOperator::new(&s).unwrap();
        (s, d)
    })
}

fn random(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

#[test]
fn area_converges_to_four_pi() {
    let exact = 4.0 * std::f64::consts::PI;
    assert!((surface(1).area() - exact).abs() / exact < 0.05);
    assert!((surface(4).area() - exact).abs() / exact < 0.005);
}

#[test]
fn boundary_nodes_pair_up_and_corners_form_one_class() {
    let s = &level3().0;
    let sizes: Vec<usize> = s.identification.iter().map(|c| c.members.len()).collect();
    assert_eq!(sizes.iter().filter(|&&k| k == 8).count(), 1);
    assert!(sizes.iter().all(|&k| k == 1 || k == 2 || k == 8));
    assert!(sizes.contains(&2));
    assert_eq!(s.euler_characteristic(), -2);
}

#[test]
fn mesh_budget_is_enforced() {
    let err = build_mesh(&octagon_group(2).unwrap(), 6, 1000).unwrap_err();
    assert!(matches!(err, Error::MeshBudget { cap: 1000, .. }));
}

#[test]
fn laplacian_kills_constants_and_is_nonpositive() {
    let s = &level3().0;
    let ones = vec![1.0; s.len()];
    assert!(s.apply_laplacian(&ones).unwrap().iter().all(|v| v.abs() < 1e-9));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let f = random(s.len(), &mut rng);
        let lf = s.apply_laplacian(&f).unwrap();
        let form: f64 = lf.iter().zip(&f).zip(&s.weights).map(|((a, b), w)| a * b * w).sum();
        assert!(form <= 1e-12);
    }
    let (ev, _) = s.laplacian_eigen().unwrap();
    assert!(ev[0].abs() < 1e-9);
    assert!(ev[1] > 1e-3, "first nonzero eigenvalue {}", ev[1]);
}

#[test]
fn d_is_self_adjoint_positive_and_solves_to_tolerance() {
    let (s, d) = level3();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).zip(&s.weights).map(|((x, y), w)| w * x * y).sum::<f64>();
    for _ in 0..20 {
        let (f, g) = (random(s.len(), &mut rng), random(s.len(), &mut rng));
        let (df, dg) = (d.apply_real(&f).unwrap(), d.apply_real(&g).unwrap());
        assert!((dot(&df, &g) - dot(&f, &dg)).abs() <= 1e-10 * (dot(&f, &f) * dot(&g, &g)).sqrt());
        assert!(dot(&df, &f) >= 0.0);
        // (Delta_h - 2) u + 2 f = 0
        let lu = s.apply_laplacian(&df).unwrap();
        let r: Vec<f64> = (0..s.len()).map(|p| lu[p] - 2.0 * df[p] + 2.0 * f[p]).collect();
        assert!(dot(&r, &r).sqrt() <= 1e-10 * dot(&f, &f).sqrt());
    }
}

#[test]
fn spectral_mapping_on_lowest_modes() {
    let (s, d) = level3();
    let (ev, vecs) = s.laplacian_eigen().unwrap();
    for (k, lambda) in ev.iter().take(5).enumerate() {
        let v: Vec<f64> = vecs.column(k).iter().copied().collect();
        let expected = 2.0 / (lambda + 2.0);
        assert!(expected > 0.0 && expected <= 1.0 + 1e-12);
        let dv = d.apply_real(&v).unwrap();
        let err = dv.iter().zip(&v).map(|(a, b)| (a - expected * b).abs()).fold(0.0, f64::max);
        let scale = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
        assert!(err <= 1e-8 * scale, "mode {k}: {err}");
    }
}

#[test]
fn lowest_eigenvalues_stable_under_refinement() {
    let (a, _) = surface(3).laplacian_eigen().unwrap();
    let (b, _) = surface(4).laplacian_eigen().unwrap();
    for k in 1..=3 {
        assert!((a[k] - b[k]).abs() / b[k] <= 0.03, "mode {k}: {} vs {}", a[k], b[k]);
    }
}

#[test]
fn green_kernel_properties_and_consistency() {
    let (s, d) = level3();
    let g = green_kernel(s, d, 10_000).unwrap();
    let r = g.validate();
    assert!(r.min_entry > 0.0 && r.asymmetry <= 1e-8 && r.row_sum_error <= 1e-8, "{r:?}");
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..20 {
        let f = random(s.len(), &mut rng);
        let (a, b) = (d.apply_real(&f).unwrap(), g.apply_real(&f).unwrap());
        let scale = DVector::from_vec(a.clone()).amax();
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-8 * scale));
    }
    assert!(matches!(green_kernel(s, d, 10), Err(Error::KernelBudget { cap: 10, .. })));
}

#[test]
fn green_export_reloads_bit_exact() {
    let (s, d) = level3();
    let g = green_kernel(s, d, 10_000).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (bin, side) = (dir.path().join("g.bin"), dir.path().join("g.json"));
    g.write(&bin, &side, "cfg", &s.node_hash()).unwrap();
    let back = GreenKernel::read(&bin, &side, s.weights.clone(), &s.node_hash()).unwrap();
    assert!(g.g.iter().zip(back.g.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    assert!(GreenKernel::read(&bin, &side, s.weights.clone(), "other").is_err());
}

#[test]
fn coarse_mesh_reports_quality() {
    let s = surface(1);
    let q = s.quality().unwrap();
    assert!(q.min_angle_deg > 0.0 && q.min_angle_deg < 90.0);
    let json = serde_json::to_value(s.export("h")).unwrap();
    assert_eq!(json["nodes"].as_array().unwrap().len(), s.len());
    assert_eq!(json["config_hash"], "h");
}
