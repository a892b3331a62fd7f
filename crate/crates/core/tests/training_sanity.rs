//! Optimization sanity for the Möbius-flow baseline at benchmark settings.

use rica_core::baselines::{nlica_fit, TrainConfig};
use rica_core::geometry::Point;
use rica_core::manifolds::{intrinsic_metric, ManifoldSpec};
use rica_core::sources::{generate, random_g_frame, SourceConfig};
use rica_core::stream::derive_rng;

#[test]
fn nlica_loss_moving_average_is_non_increasing() {
    // sphere instance at n = 4: window means over 500 steps must not rise
    let spec = ManifoldSpec::sphere(4);
    let m = intrinsic_metric::<f64>(&spec);
    let x0 = Point::zeros(4);
    let mut rng = derive_rng(400, &["train-sanity"]);
    let frame = random_g_frame(&m, &x0, &mut rng).unwrap();
    let cfg = SourceConfig::new(4, 0.3, 0.85, 4000).unwrap();
    let batch = generate(&spec, &cfg, &frame, &spec.intrinsic_chart(), &mut rng).unwrap();
    let tcfg = TrainConfig::new(cfg.scales());
    let out = nlica_fit(&batch.x, &tcfg, &mut rng).unwrap();
    assert_eq!(out.loss_history.len(), 3000);
    let windows: Vec<f64> = out
        .loss_history
        .chunks(500)
        .map(|w| w.iter().sum::<f64>() / w.len() as f64)
        .collect();
    for pair in windows.windows(2) {
        assert!(
            pair[1] <= pair[0] + 1e-9,
            "window mean rose: {:?}",
            windows
        );
    }
    // trained latents stay finite for the full dataset
    assert_eq!(out.nonfinite_latents, 0);
    assert!(out.latents.is_finite());
}
