//! Runs the synthetic experiment and prints pooled boundary metrics.
//!
//! cargo run --release -p shas --example synthetic

use std::time::Instant;

use shas::experiment::{describe, run, ExperimentConfig};

fn main() {
    let cfg = ExperimentConfig::default();
    let t = Instant::now();
    let r = run(&cfg);
    for e in &r.log {
        println!("epoch {:2}  loss {:.4}  dev F1 {:?}", e.epoch, e.loss, e.dev_f1);
    }
    println!("best epoch {}, baseline {:?}", r.best_epoch, r.baseline_setting);
    for (k, v) in describe(&r, cfg.tolerance_frames) {
        println!("{k:20} {v:.4}");
    }
    println!("{} test waves in {:.1}s", r.test_waves, t.elapsed().as_secs_f64());
}
