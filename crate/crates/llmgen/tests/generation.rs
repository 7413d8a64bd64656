use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use assocnet_llmgen::{
    generate, read_log, resume, ChatClient, GenConfig, GenError, RequestError, SlotStatus,
};
use tokio::time::Instant;

type Script = dyn Fn(usize, &str) -> Result<String, RequestError> + Send + Sync;

struct Mock {
    calls: AtomicUsize,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
    starts: Mutex<Vec<Instant>>,
    latency: Duration,
    script: Box<Script>,
}

impl Mock {
    fn new(script: impl Fn(usize, &str) -> Result<String, RequestError> + Send + Sync + 'static) -> Self {
        Mock {
            calls: AtomicUsize::new(0),
            in_flight: AtomicUsize::new(0),
            max_in_flight: AtomicUsize::new(0),
            starts: Mutex::new(Vec::new()),
            latency: Duration::from_millis(10),
            script: Box::new(script),
        }
    }

    fn echo() -> Self {
        Mock::new(|n, prompt| Ok(format!("{prompt}-a, b{n}, c, d")))
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl ChatClient for Mock {
    async fn complete(&self, prompt: &str) -> Result<String, RequestError> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst);
        self.starts.lock().unwrap().push(Instant::now());
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.max_in_flight.fetch_max(now, Ordering::SeqCst);
        tokio::time::sleep(self.latency).await;
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        (self.script)(n, prompt)
    }
}

fn cfg(reps: usize) -> GenConfig {
    GenConfig {
        endpoint: "http://unused".into(),
        model: "mock".into(),
        template: "{cue}".into(),
        repetitions: reps,
        backoff_ms: 100,
        max_backoff_ms: 1000,
        max_attempts: 3,
        max_in_flight: 4,
        ..Default::default()
    }
}

#[tokio::test(start_paused = true)]
async fn table_is_rectangular_and_sorted() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("gen.jsonl");
    let mock = Mock::echo();
    let run = generate(&mock, &["pear", "apple", " "], &cfg(5), &log).await.unwrap();
    assert_eq!(mock.calls(), 10);
    assert_eq!(run.requested, 10);
    assert_eq!(run.failed, 0);
    assert_eq!(run.table.len(), 10);
    let cues: Vec<&str> = run.table.rows.iter().map(|r| r.cue.as_str()).collect();
    assert_eq!(cues[..5], ["apple"; 5]);
    assert_eq!(cues[5..], ["pear"; 5]);
    for row in &run.table.rows {
        assert_eq!(row.responses[0].as_deref(), Some(format!("{}-a", row.cue).as_str()));
        assert_eq!(row.responses[2].as_deref(), Some("c"));
    }
    let (header, entries) = read_log(&log).unwrap();
    assert_eq!(header.cues, ["pear", "apple"]);
    assert_eq!(entries.len(), 10);
    assert!(entries.iter().all(|e| e.responses.len() == 3 && e.attempts == 1));
}

#[tokio::test(start_paused = true)]
async fn concurrency_is_bounded() {
    let dir = tempfile::tempdir().unwrap();
    let mock = Mock::echo();
    generate(&mock, &["a", "b", "c"], &cfg(10), &dir.path().join("l")).await.unwrap();
    assert_eq!(mock.max_in_flight.load(Ordering::SeqCst), 4);
}

#[tokio::test(start_paused = true)]
async fn rate_limit_is_respected() {
    let dir = tempfile::tempdir().unwrap();
    let mock = Mock::echo();
    let c = GenConfig { rate_limit: Some(5.0), max_in_flight: 8, ..cfg(20) };
    let t0 = Instant::now();
    generate(&mock, &["x"], &c, &dir.path().join("l")).await.unwrap();
    let mut starts = mock.starts.lock().unwrap().clone();
    starts.sort();
    assert_eq!(starts.len(), 20);
    for w in starts.windows(2) {
        assert!(w[1] - w[0] >= Duration::from_millis(200));
    }
    // any one-second window holds at most 5 starts
    for (i, s) in starts.iter().enumerate() {
        let within = starts[i..].iter().take_while(|t| **t - *s < Duration::from_secs(1)).count();
        assert!(within <= 5);
    }
    assert!(Instant::now() - t0 >= Duration::from_millis(3800));
}

#[tokio::test(start_paused = true)]
async fn transient_errors_retry_then_blank() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("l");
    // cue "ok" succeeds on the second try; "down" never succeeds
    let mock = Mock::new(|_, p| match p {
        "down" => Err(RequestError::Transient("timeout".into())),
        _ => Ok("x, y".into()),
    });
    let t0 = Instant::now();
    let run = generate(&mock, &["down", "ok"], &GenConfig { max_in_flight: 1, ..cfg(1) }, &log).await.unwrap();
    assert_eq!(mock.calls(), 4);
    assert_eq!(run.failed, 1);
    assert_eq!(run.table.rows[0].cue, "down");
    assert_eq!(run.table.rows[0].present().count(), 0);
    assert_eq!(run.table.rows[1].present().collect::<Vec<_>>(), ["x", "y"]);
    // backoff 100 ms then 200 ms before the last try
    assert!(Instant::now() - t0 >= Duration::from_millis(300));
    let (_, entries) = read_log(&log).unwrap();
    let down = entries.iter().find(|e| e.cue == "down").unwrap();
    assert_eq!(down.status, SlotStatus::Failed);
    assert_eq!(down.attempts, 3);
    assert!(down.error.as_deref().unwrap().contains("timeout"));
}

#[tokio::test(start_paused = true)]
async fn rejected_and_malformed_are_not_retried() {
    let dir = tempfile::tempdir().unwrap();
    let mock = Mock::new(|_, p| match p {
        "bad" => Err(RequestError::Rejected("HTTP 400".into())),
        _ => Err(RequestError::Malformed("no content".into())),
    });
    let run = generate(&mock, &["bad", "odd"], &cfg(2), &dir.path().join("l")).await.unwrap();
    assert_eq!(mock.calls(), 4);
    assert_eq!(run.failed, 4);
    assert_eq!(run.table.len(), 4);
}

#[tokio::test(start_paused = true)]
async fn auth_failure_aborts() {
    let dir = tempfile::tempdir().unwrap();
    let mock = Mock::new(|_, _| Err(RequestError::Auth("HTTP 401".into())));
    let err = generate(&mock, &["a", "b"], &cfg(50), &dir.path().join("l")).await.unwrap_err();
    assert!(matches!(err, GenError::Auth(_)));
    assert!(mock.calls() <= 4);
}

#[tokio::test(start_paused = true)]
async fn resume_requests_only_missing_slots() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("l");
    let first = Mock::echo();
    let full = generate(&first, &["a", "b"], &cfg(5), &log).await.unwrap();

    // complete log: nothing is requested, table unchanged
    let second = Mock::echo();
    let again = resume(&second, &cfg(5), &log).await.unwrap();
    assert_eq!(second.calls(), 0);
    assert_eq!(again.requested, 0);
    assert_eq!(again.table, full.table);

    // drop three entries and resume
    let text = std::fs::read_to_string(&log).unwrap();
    let kept: Vec<&str> = text.lines().filter(|l| !l.contains("\"repetition\":4") && !l.contains("\"cue\":\"b\",\"repetition\":0")).collect();
    assert_eq!(text.lines().count() - kept.len(), 3);
    std::fs::write(&log, kept.join("\n") + "\n").unwrap();
    let third = Mock::echo();
    let resumed = resume(&third, &cfg(5), &log).await.unwrap();
    assert_eq!(third.calls(), 3);
    assert_eq!(resumed.requested, 3);
    assert_eq!(resumed.table.len(), 10);
    assert_eq!(resumed.failed, 0);
}

#[tokio::test(start_paused = true)]
async fn resume_retries_failed_slots() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("l");
    let flaky = Mock::new(|n, _| if n % 2 == 0 { Err(RequestError::Rejected("no".into())) } else { Ok("w".into()) });
    let c = GenConfig { max_in_flight: 1, ..cfg(4) };
    let run = generate(&flaky, &["a"], &c, &log).await.unwrap();
    assert_eq!(run.failed, 2);
    let good = Mock::echo();
    let run = resume(&good, &c, &log).await.unwrap();
    assert_eq!(good.calls(), 2);
    assert_eq!(run.failed, 0);
}

#[tokio::test(start_paused = true)]
async fn resume_guards() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("l");
    generate(&Mock::echo(), &["a"], &cfg(2), &log).await.unwrap();
    let other = GenConfig { model: "other".into(), ..cfg(2) };
    let err = resume(&Mock::echo(), &other, &log).await.unwrap_err();
    assert!(matches!(err, GenError::LogMismatch { field: "model", .. }));
    let err = resume(&Mock::echo(), &cfg(3), &log).await.unwrap_err();
    assert!(matches!(err, GenError::LogMismatch { field: "repetitions", .. }));

    std::fs::write(&log, "{\"type\":\"header\"\n").unwrap();
    assert!(matches!(resume(&Mock::echo(), &cfg(2), &log).await, Err(GenError::CorruptLog { .. })));
    std::fs::write(&log, "").unwrap();
    assert!(matches!(resume(&Mock::echo(), &cfg(2), &log).await, Err(GenError::CorruptLog { .. })));
}

#[tokio::test(start_paused = true)]
async fn cue_list_checks() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("l");
    assert!(matches!(generate(&Mock::echo(), &["a", "a "], &cfg(1), &log).await, Err(GenError::Cues(_))));
    assert!(matches!(generate(&Mock::echo(), &[""], &cfg(1), &log).await, Err(GenError::Cues(_))));
}
