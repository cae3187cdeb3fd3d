//! Desk calibration for the model-ordering and seen/unseen checks: trains the
//! three predictors on the default synthetic dataset and prints test MSEs.

use std::time::Instant;

use perfcast_core::dataset::{assemble_samples, split_random_by_trace};
use perfcast_core::models::ModelSpec;
use perfcast_core::synth::{generate_dataset, SynthSpec};
use perfcast_core::train::{train, TrainConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let epochs_hier: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let epochs_flat: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(20);

    let t0 = Instant::now();
    let spec = SynthSpec::default(); // 20 benchmarks x 15 skus x 300 intervals, seed 1
    let data = generate_dataset(&spec).unwrap();
    println!("generated {} traces in {:.1}s", data.traces.len(), t0.elapsed().as_secs_f64());

    let t0 = Instant::now();
    let set = assemble_samples(&data.traces).unwrap();
    let (tr, te) = split_random_by_trace(&set, 0.8, 7).unwrap();
    println!(
        "assembled {} samples ({} train / {} test) in {:.1}s",
        set.len(),
        tr.len(),
        te.len(),
        t0.elapsed().as_secs_f64()
    );

    let mut mses = Vec::new();
    for (name, mspec, cfg) in [
        (
            "linreg",
            ModelSpec::linreg(1),
            TrainConfig { lr: 1e-2, batch_size: 4096, epochs: epochs_flat, ..Default::default() },
        ),
        (
            "mlp",
            ModelSpec::mlp(1),
            TrainConfig { lr: 1e-3, batch_size: 1024, epochs: epochs_flat, ..Default::default() },
        ),
        (
            "hier_lstm",
            ModelSpec::hier_lstm(1),
            TrainConfig { lr: 2e-3, batch_size: 64, epochs: epochs_hier, ..Default::default() },
        ),
    ] {
        let t0 = Instant::now();
        let (_, record) = train(&mspec, &tr, &te, &cfg).unwrap();
        let dt = t0.elapsed().as_secs_f64();
        println!(
            "{name}: epochs={} final_train={:.6} final_test={:.6} converged={} wall={:.1}s ({:.2}s/epoch)",
            record.train_loss.len(),
            record.final_train,
            record.final_test,
            record.converged,
            dt,
            dt / record.train_loss.len() as f64
        );
        let k = record.test_mse.len();
        let tail: Vec<String> = record.test_mse[k.saturating_sub(8)..]
            .iter()
            .map(|v| format!("{v:.5}"))
            .collect();
        println!("  test mse tail: {}", tail.join(" "));
        mses.push((name, record.final_test));
    }
    println!("\nordering: {mses:?}");
}
