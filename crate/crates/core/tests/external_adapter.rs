use std::process::Command;
use std::time::{Duration, Instant};

use onml::blackbox::{BlackBox, ExternalModel};
use onml::Error;

fn python() -> Option<&'static str> {
    let ok = Command::new("python3").arg("--version").output().is_ok_and(|o| o.status.success());
    if !ok {
        eprintln!("python3 not found, skipping");
    }
    ok.then_some("python3")
}

fn spawn(mode: &str, timeout: Duration) -> onml::Result<ExternalModel> {
    let script = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/adapter.py");
    ExternalModel::spawn(python().unwrap(), &[script.to_string(), mode.to_string()], timeout)
}

#[test]
fn out_of_order_responses_are_matched_by_id() {
    if python().is_none() {
        return;
    }
    let m = spawn("normal", Duration::from_secs(10)).unwrap();
    assert_eq!(m.labels(), ["neg", "pos"]);
    assert_eq!(m.max_in_flight(), 4);
    let texts: Vec<String> = (0..60)
        .map(|i| if i % 3 == 0 { format!("good {i}") } else { format!("bad {i}") })
        .collect();
    let out = m.predict_batch(&texts).unwrap();
    for (t, s) in texts.iter().zip(&out) {
        let want = if t.starts_with("good") { 0.9 } else { 0.2 };
        assert!((s.scores[1] - want).abs() < 1e-12, "{t}");
    }
    // The connection stays usable across batches.
    assert!((m.predict("good").unwrap().scores[1] - 0.9).abs() < 1e-12);
}

#[test]
fn slow_adapter_times_out_and_stays_failed() {
    if python().is_none() {
        return;
    }
    let m = spawn("slow", Duration::from_millis(300)).unwrap();
    let start = Instant::now();
    assert!(matches!(m.predict("good"), Err(Error::Timeout(_))));
    assert!(start.elapsed() < Duration::from_secs(3));
    assert!(m.predict("good").is_err());
}

#[test]
fn protocol_violations_are_errors() {
    if python().is_none() {
        return;
    }
    assert!(matches!(
        spawn("nohandshake", Duration::from_secs(10)),
        Err(Error::Protocol(_))
    ));
    let m = spawn("badlabels", Duration::from_secs(10)).unwrap();
    assert!(m.predict("good").is_err());
    let m = spawn("unnormalized", Duration::from_secs(10)).unwrap();
    assert!(m.predict("good").is_err());
}

#[test]
fn missing_program_is_an_io_error() {
    let err = ExternalModel::spawn("/nonexistent/adapter", &[], Duration::from_secs(1)).unwrap_err();
    assert!(matches!(err, Error::Io { .. }), "{err:?}");
}
