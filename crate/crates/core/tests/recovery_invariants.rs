//! End-to-end recovery properties: spectrum invariance, identifiability up to
//! signed permutation, and exact source recovery on noiseless data.

use rica_core::geometry::Point;
use rica_core::linalg::{self, Mat};
use rica_core::manifolds::{intrinsic_metric, ManifoldSpec};
use rica_core::metrics::{mcc, total_correlation};
use rica_core::rica::{disentanglement_tensor_shortcut, rica_diagonalize, rica_recover, Frame};
use rica_core::sources::{
    generate, ground_truth_normal_tensor, random_g_frame, sample_logistic_sources, SourceConfig,
};
use rica_core::stream::derive_rng;

#[test]
fn spectrum_invariant_under_frame_choice() {
    // eigenvalues of JᵀDJ agree for any two g-orthogonal frames
    let spec = ManifoldSpec::sphere(5);
    let m = intrinsic_metric::<f64>(&spec);
    let x0 = Point::zeros(5);
    let d_raw = {
        let mut rng = derive_rng(300, &["spectrum-d"]);
        let f = random_g_frame(&m, &x0, &mut rng).unwrap();
        let cfg = SourceConfig::new(5, 0.3, 0.8, 1).unwrap();
        disentanglement_tensor_shortcut(&f, &ground_truth_normal_tensor(&cfg), &m).unwrap()
    };
    let mut spectra = Vec::new();
    for k in 0..2 {
        let mut rng = derive_rng(301 + k, &["spectrum-frame"]);
        let frame = random_g_frame(&m, &x0, &mut rng).unwrap();
        let projected = frame.mat.congruence(&d_raw.d);
        let (mut w, _) = linalg::sym_eigen(&projected).unwrap();
        w.sort_by(|a, b| a.partial_cmp(b).unwrap());
        spectra.push(w);
    }
    for (a, b) in spectra[0].iter().zip(&spectra[1]) {
        assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
    }
}

#[test]
fn diagonalization_identifies_generating_frame_up_to_signed_permutation() {
    // distinct eigenvalues: the recovered frame matches the generating frame
    // column-for-column in the g-inner product
    for spec in [ManifoldSpec::hyperbolic(5), ManifoldSpec::spd(3)] {
        let m = intrinsic_metric::<f64>(&spec);
        let x0 = Point::zeros(spec.dim());
        let g = m.metric_at(&x0).unwrap();
        for draw in 0..2u64 {
            let mut rng = derive_rng(310 + draw, &["identif", spec.name()]);
            let frame = random_g_frame(&m, &x0, &mut rng).unwrap();
            let cfg = SourceConfig::new(spec.dim(), 0.3, 0.8, 1).unwrap();
            let d =
                disentanglement_tensor_shortcut(&frame, &ground_truth_normal_tensor(&cfg), &m)
                    .unwrap();
            let eig = rica_diagonalize(&d, &m).unwrap();
            assert!(eig.min_adjacent_gap > 1e-6);
            // g-inner products between recovered and generating columns
            let overlap = eig.frame.mat.transpose().matmul(&g.matmul(&frame.mat));
            for i in 0..spec.dim() {
                let row = overlap.row(i);
                let near_one = row.iter().filter(|v| (v.abs() - 1.0).abs() < 1e-8).count();
                let near_zero = row.iter().filter(|v| v.abs() < 1e-8).count();
                assert_eq!(near_one, 1, "row {}: {:?}", i, row);
                assert_eq!(near_zero, spec.dim() - 1);
            }
        }
    }
}

#[test]
fn noiseless_recovery_reaches_unit_mcc_up_to_dim_16() {
    for spec in [
        ManifoldSpec::sphere(16),
        ManifoldSpec::hyperbolic(16),
        ManifoldSpec::torus(16),
        ManifoldSpec::spd(5), // intrinsic dimension 15
    ] {
        let m = intrinsic_metric::<f64>(&spec);
        let x0 = Point::zeros(spec.dim());
        let mut rng = derive_rng(320, &["recoverable", spec.name()]);
        let frame = random_g_frame(&m, &x0, &mut rng).unwrap();
        // keep the total spread inside the sphere's radius at n = 16
        let cfg = SourceConfig::new(spec.dim(), 0.2, 0.85, 2000).unwrap();
        let batch = generate(&spec, &cfg, &frame, &spec.intrinsic_chart(), &mut rng).unwrap();
        let d = disentanglement_tensor_shortcut(&frame, &ground_truth_normal_tensor(&cfg), &m)
            .unwrap();
        let eig = rica_diagonalize(&d, &m).unwrap();
        let (latents, ok) = rica_recover(&spec, &x0, &eig.frame, &batch.points()).unwrap();
        let keep: Vec<usize> = (0..batch.len())
            .filter(|&i| ok[i] && batch.in_radius[i])
            .collect();
        let s_t = Mat::from_fn(keep.len(), spec.dim(), |i, j| batch.s[(keep[i], j)]);
        let s_h = Mat::from_fn(keep.len(), spec.dim(), |i, j| latents[(keep[i], j)]);
        let rep = mcc(&s_t, &s_h).unwrap();
        assert!(rep.mcc >= 0.999, "{}: MCC {}", spec.name(), rep.mcc);
    }
}

#[test]
fn ground_truth_sources_have_negligible_total_correlation() {
    // the latent density factors by construction, so TC sits in the
    // estimator noise band at N = 10000
    let cfg = SourceConfig::<f64>::new(8, 0.3, 0.85, 10_000).unwrap();
    let mut rng = derive_rng(330, &["tc-band"]);
    let s = sample_logistic_sources(&cfg, &mut rng);
    let rep = total_correlation(&s, 3).unwrap();
    assert!(rep.tc_nats.abs() < 0.1, "TC {}", rep.tc_nats);
}

#[test]
fn recover_after_generate_is_identity_with_matched_frame() {
    let spec = ManifoldSpec::torus(6);
    let m = intrinsic_metric::<f64>(&spec);
    let x0 = Point::zeros(6);
    let mut rng = derive_rng(340, &["gen-recover"]);
    let frame = random_g_frame(&m, &x0, &mut rng).unwrap();
    let cfg = SourceConfig::new(6, 0.3, 0.85, 800).unwrap();
    let batch = generate(&spec, &cfg, &frame, &spec.intrinsic_chart(), &mut rng).unwrap();
    let (latents, _) = rica_recover(&spec, &x0, &frame, &batch.points()).unwrap();
    for row in 0..batch.len() {
        if !batch.in_radius[row] {
            continue;
        }
        for col in 0..6 {
            assert!((latents[(row, col)] - batch.s[(row, col)]).abs() < 1e-8);
        }
    }
}

#[test]
fn degenerate_spectrum_loses_identifiability_but_stays_valid() {
    // r_s = 1 makes every eigenvalue equal: any g-orthogonal frame solves the
    // pencil, so the recovered frame no longer matches the generating one
    let spec = ManifoldSpec::sphere(6);
    let m = intrinsic_metric::<f64>(&spec);
    let x0 = Point::zeros(6);
    let mut rng = derive_rng(350, &["degenerate"]);
    let frame = random_g_frame(&m, &x0, &mut rng).unwrap();
    let cfg = SourceConfig::new(6, 0.3, 1.0, 500).unwrap();
    let d =
        disentanglement_tensor_shortcut(&frame, &ground_truth_normal_tensor(&cfg), &m).unwrap();
    let eig = rica_diagonalize(&d, &m).unwrap();
    assert!(eig.min_adjacent_gap < 1e-9);
    let res = eig.frame.orthogonality_residual(&m).unwrap();
    assert!(res < 1e-8, "degenerate frame residual {}", res);
}

#[test]
fn frame_type_rejects_dimension_mismatch() {
    let result = std::panic::catch_unwind(|| {
        Frame::new(Mat::<f64>::identity(3), Point::<f64>::zeros(2))
    });
    assert!(result.is_err());
}
