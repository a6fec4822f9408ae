use condist_simulate::{run, ExperimentConfig, ExperimentKind};

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let text = match kind {
        ExperimentKind::Clt => r#"{"dgp": "A", "n": [300], "replications": 8, "bandwidth": {"gamma": 0.35}, "grid": {"m_y": 41, "m_x": 11}, "seed": 99}"#,
        ExperimentKind::Bias => r#"{"dgp": "C", "bias": {"h": [0.2, 0.1], "m_y": 5, "m_x": 3}}"#,
        _ => r#"{"dgp": "A", "n": [200, 400, 800, 1600], "replications": 6, "grid": {"m_y": 41, "m_x": 11}, "seed": 99}"#,
    };
    ExperimentConfig::from_json(text).unwrap()
}

fn reports_with_threads(kind: ExperimentKind, threads: usize) -> Vec<String> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let cfg = small(kind);
    pool.install(|| run(kind, &cfg)).unwrap().iter().map(|r| r.to_json()).collect()
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    for kind in [
        ExperimentKind::Rates,
        ExperimentKind::Alr,
        ExperimentKind::Equicont,
        ExperimentKind::Clt,
        ExperimentKind::Bias,
    ] {
        let one = reports_with_threads(kind, 1);
        let three = reports_with_threads(kind, 3);
        assert_eq!(one, three, "{kind} differs between 1 and 3 threads");
        assert_eq!(one, reports_with_threads(kind, 1), "{kind} differs between runs");
    }
}

#[test]
fn record_count_is_schedule_times_replications() {
    let cfg = small(ExperimentKind::Rates);
    for report in run(ExperimentKind::Rates, &cfg).unwrap() {
        assert_eq!(report.records.len(), cfg.n.len() * cfg.replications);
    }
}

#[test]
fn seed_changes_every_record() {
    let mut cfg = small(ExperimentKind::Rates);
    let a = run(ExperimentKind::Rates, &cfg).unwrap();
    cfg.seed += 1;
    let b = run(ExperimentKind::Rates, &cfg).unwrap();
    for (ra, rb) in a[0].records.iter().zip(&b[0].records) {
        assert_ne!(ra.value("sup_error"), rb.value("sup_error"));
    }
}
