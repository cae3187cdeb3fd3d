use perfcast_core::dataset::Window;
use perfcast_core::models::{build, grad_check, ModelSpec};
use perfcast_core::seed::rng_for;
use rand::Rng;
use std::time::Instant;

fn random_window(uaim_dim: usize, cfg_dim: usize, t: usize, seed: u64) -> Window {
    let mut rng = rng_for(seed, &["gc-window"]);
    Window {
        benchmark: "b".into(),
        sku_id: "s".into(),
        start_index: 0,
        uaim: (0..t).map(|_| (0..uaim_dim).map(|_| rng.random_range(-1.5..1.5)).collect()).collect(),
        cfg: (0..cfg_dim).map(|_| rng.random_range(-1.5..1.5)).collect(),
        ipc: (0..t).map(|_| rng.random_range(0.2..2.0)).collect(),
    }
}

fn main() {
    let specs: Vec<(&str, ModelSpec)> = vec![
        ("linreg", ModelSpec::linreg(21)),
        ("mlp", ModelSpec::mlp(22)),
        (
            "simple_lstm",
            ModelSpec { hidden: 4, fc: 2, ..ModelSpec::simple_lstm(23) },
        ),
        (
            "hier_lstm",
            ModelSpec { hu: 4, hc: 4, h2: 4, fc: 2, ..ModelSpec::hier_lstm(24) },
        ),
    ];
    for (name, spec) in specs {
        let mut model = build(&spec).unwrap();
        let windows = vec![random_window(spec.uaim_dim, spec.cfg_dim, 3, 77)];
        let t0 = Instant::now();
        let report = grad_check(&mut model, &windows, 1e-5).unwrap();
        println!(
            "{name}: params={} max_rel_err={:.3e} worst={} (analytic {:.6e}, numeric {:.6e}) [{:.2}s]",
            model.param_count(),
            report.max_rel_err,
            report.worst_param,
            report.analytic,
            report.numeric,
            t0.elapsed().as_secs_f64()
        );
    }
}
