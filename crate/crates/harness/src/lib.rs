//! Experiment runner behind the `rica` binary: configuration, cell
//! execution, output emission, and a quick self-test.

pub mod config;
pub mod emit;
pub mod plot;
pub mod runner;

use rica_core::geometry::Point;
use rica_core::linalg::Mat;
use rica_core::manifolds::{intrinsic_metric, ManifoldSpec};

/// Runs a handful of fast end-to-end checks, printing one PASS/FAIL line
/// each. Returns the number of failures.
pub fn selftest() -> usize {
    let mut failures = 0;
    let mut check = |name: &str, ok: bool| {
        println!("{} {}", if ok { "PASS" } else { "FAIL" }, name);
        if !ok {
            failures += 1;
        }
    };

    // digamma reference identities
    let gamma = 0.5772156649015329f64;
    let d1 = rica_core::metrics::digamma(1.0).map(|v| (v + gamma).abs() < 1e-10);
    check("digamma reference values", d1.unwrap_or(false));

    // exponential/log round trip on the sphere
    let spec = ManifoldSpec::sphere(3);
    let x0 = Point::zeros(3);
    let v = rica_core::geometry::Tangent::new(x0.clone(), vec![0.4f64, -0.2, 0.3]);
    let roundtrip = rica_core::geodesics::exp_map(&spec, &x0, &v)
        .and_then(|x| rica_core::geodesics::log_map(&spec, &x0, &x))
        .map(|back| {
            back.comps
                .iter()
                .zip(&v.comps)
                .all(|(a, b)| (a - b).abs() < 1e-9)
        })
        .unwrap_or(false);
    check("sphere exp/log round trip", roundtrip);

    // Möbius forward/inverse round trip
    let mut rng = rica_core::stream::derive_rng(1, &["selftest", "mobius"]);
    let flow = rica_core::baselines::MobiusFlow::<f64>::init(3, 4, &mut rng);
    let mob = rica_core::baselines::mobius_forward(&flow, &[0.3, -0.5, 0.2])
        .and_then(|x| rica_core::baselines::mobius_inverse(&flow, &x))
        .map(|s| (s[0] - 0.3).abs() < 1e-9 && (s[1] + 0.5).abs() < 1e-9)
        .unwrap_or(false);
    check("mobius forward/inverse round trip", mob);

    // FastICA on a small linear logistic mixture
    let src = rica_core::sources::SourceConfig::new(2, 1.0, 1.0, 2_000).unwrap();
    let mut rng = rica_core::stream::derive_rng(1, &["selftest", "fastica"]);
    let s = rica_core::sources::sample_logistic_sources(&src, &mut rng);
    let mixing = Mat::from_rows(&[vec![1.0, 0.7], vec![-0.3, 1.1]]);
    let x = s.matmul(&mixing.transpose());
    let fastica_ok = rica_core::baselines::fastica_fit(
        &x,
        &rica_core::baselines::FastIcaConfig::new(2, 17),
    )
    .and_then(|out| rica_core::metrics::mcc(&s, &out.latents).map(|r| r.mcc > 0.98))
    .unwrap_or(false);
    check("fastica linear mixture recovery", fastica_ok);

    // end-to-end closed-form recovery on a small hyperbolic instance
    let spec = ManifoldSpec::hyperbolic(3);
    let m = intrinsic_metric::<f64>(&spec);
    let x0 = Point::zeros(3);
    let mut rng = rica_core::stream::derive_rng(1, &["selftest", "recovery"]);
    let end_to_end = rica_core::sources::random_g_frame(&m, &x0, &mut rng)
        .and_then(|frame| {
            let src = rica_core::sources::SourceConfig::new(3, 0.3, 0.85, 500)?;
            let batch = rica_core::sources::generate(
                &spec,
                &src,
                &frame,
                &spec.intrinsic_chart(),
                &mut rng,
            )?;
            let d_s = rica_core::sources::ground_truth_normal_tensor(&src);
            let d = rica_core::rica::disentanglement_tensor_shortcut(&frame, &d_s, &m)?;
            let eig = rica_core::rica::rica_diagonalize(&d, &m)?;
            let (latents, _) =
                rica_core::rica::rica_recover(&spec, &x0, &eig.frame, &batch.points())?;
            let rep = rica_core::metrics::mcc(&batch.s, &latents)?;
            Ok(rep.mcc > 0.999)
        })
        .unwrap_or(false);
    check("closed-form source recovery", end_to_end);

    // deterministic stream derivation
    let a = rica_core::stream::derive_seed_u64(9, &["selftest", "stream"]);
    let b = rica_core::stream::derive_seed_u64(9, &["selftest", "stream"]);
    check("deterministic rng streams", a == b);

    failures
}
