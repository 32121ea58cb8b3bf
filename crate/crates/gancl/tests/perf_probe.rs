//! Rough throughput probe for the training-loop hot path. Ignored by
//! default; run with `cargo test --test perf_probe -- --ignored --nocapture`.

use gancl::nn::{Activation, LayerSpec, Network, WeightInit};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::time::Instant;

#[test]
#[ignore]
fn hot_path_throughput() {
    let mut rng = ChaCha12Rng::seed_from_u64(1);
    let disc = Network::init(
        vec![
            LayerSpec::new(2, 128, Activation::Relu),
            LayerSpec::new(128, 128, Activation::Relu),
            LayerSpec::new(128, 1, Activation::Sigmoid),
        ],
        WeightInit::XavierUniform,
        &mut rng,
    )
    .unwrap();
    let genr = Network::init(
        vec![
            LayerSpec::new(64, 128, Activation::Relu),
            LayerSpec::new(128, 128, Activation::Relu),
            LayerSpec::new(128, 2, Activation::Identity),
        ],
        WeightInit::XavierUniform,
        &mut rng,
    )
    .unwrap();

    let m = 256;
    let z: Array2<f64> = Array2::from_shape_fn((m, 64), |_| rng.random_range(-1.0..1.0));
    let x: Array2<f64> = Array2::from_shape_fn((m, 2), |_| rng.random_range(-2.0..2.0));
    let up1: Array2<f64> = Array2::from_shape_fn((m, 1), |_| rng.random_range(-1.0..1.0));
    let up2: Array2<f64> = Array2::from_shape_fn((m, 2), |_| rng.random_range(-1.0..1.0));

    let iters = 200;
    let t0 = Instant::now();
    let mut sink = 0.0;
    for _ in 0..iters {
        // Mimics one training iteration's large ops.
        let g_trace = genr.forward_trace(z.view()).unwrap();
        let fake = g_trace.output().to_owned();
        let d_real = disc.forward_trace(x.view()).unwrap();
        let d_fake = disc.forward_trace(fake.view()).unwrap();
        let gr = disc.backward(&d_real, up1.view()).unwrap();
        let gf = disc.backward(&d_fake, up1.view()).unwrap();
        let d_fake2 = disc.forward_trace(fake.view()).unwrap();
        let dx = disc.input_gradient(&d_fake2, up1.view()).unwrap();
        let gg = genr.backward(&g_trace, dx.view()).unwrap();
        sink += gr.values()[0] + gf.values()[1] + gg.values()[2] + up2[[0, 0]];
    }
    let dt = t0.elapsed().as_secs_f64();
    println!("sink {sink}");
    println!(
        "{iters} iterations in {dt:.3}s → {:.1} it/s → 25K iterations ≈ {:.0}s",
        iters as f64 / dt,
        25000.0 * dt / iters as f64
    );
}
