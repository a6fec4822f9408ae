//! Runtime should grow linearly in the number of replications.

use std::time::Instant;

use condist_core::Estimator;
use condist_simulate::{run_rates, ExperimentConfig};

fn seconds(replications: usize) -> f64 {
    let text = format!(r#"{{"dgp": "A", "n": [1000, 2000, 4000, 8000], "replications": {replications}, "seed": 3}}"#);
    let cfg = ExperimentConfig::from_json(&text).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    pool.install(|| run_rates(&cfg, Estimator::Smoothed)).unwrap();
    start.elapsed().as_secs_f64()
}

#[test]
fn runtime_is_roughly_linear_in_replications() {
    seconds(2);
    let mut ratio = 0.0;
    // Retry once in case the machine was briefly busy.
    for _ in 0..2 {
        let (t1, t2) = (seconds(8), seconds(16));
        ratio = t2 / (2.0 * t1);
        if (0.7..=1.5).contains(&ratio) {
            break;
        }
    }
    assert!((0.7..=1.5).contains(&ratio), "time(2R) / (2 time(R)) = {ratio}");
}
