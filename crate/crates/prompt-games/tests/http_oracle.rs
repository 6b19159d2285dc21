//! HTTP oracle behavior against the mock endpoint: caching, retries, and
//! cache-file replay semantics.

mod common;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use prompt_games::game::{ActionSpace, Player};
use prompt_games::oracle::{CacheRecord, HttpOracle, InfoVector, OracleQuery, PolicyOracle, PromptSpec};
use prompt_games::Error;

fn rps_space() -> ActionSpace {
    ActionSpace::new(vec!["Rock".into(), "Paper".into(), "Scissors".into()]).unwrap()
}

struct QueryParts {
    info: InfoVector,
    prompt: PromptSpec,
    actions: ActionSpace,
}

impl QueryParts {
    fn new(prompt_id: &str, text: &str) -> Self {
        QueryParts {
            info: InfoVector::new(vec![0.2, 0.3, 0.5], "").unwrap(),
            prompt: PromptSpec {
                id: prompt_id.into(),
                text: text.into(),
            },
            actions: rps_space(),
        }
    }

    fn query(&self) -> OracleQuery<'_> {
        OracleQuery {
            player: Player::A,
            info: &self.info,
            prompt: &self.prompt,
            worldview: "mock",
            actions: &self.actions,
        }
    }
}

#[test]
fn cache_is_shared_across_oracle_instances() {
    let server = common::MockLlm::start(common::valid_handler());
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.jsonl");

    let first = HttpOracle::new(server.url.clone(), None, &cache).unwrap();
    let alpha = QueryParts::new("x1", "alpha");
    let beta = QueryParts::new("x2", "beta");
    let mu_alpha = first.induce_policy(&alpha.query()).unwrap();
    let mu_beta = first.induce_policy(&beta.query()).unwrap();
    assert_eq!(server.hits(), 2);

    // Same instance, repeated queries: in-memory cache answers.
    first.induce_policy(&alpha.query()).unwrap();
    assert_eq!(server.hits(), 2);

    // Fresh instance over the same cache file: no new requests, identical
    // weights bit-for-bit.
    let second = HttpOracle::new(server.url.clone(), None, &cache).unwrap();
    let replay_alpha = second.induce_policy(&alpha.query()).unwrap();
    let replay_beta = second.induce_policy(&beta.query()).unwrap();
    assert_eq!(server.hits(), 2);
    assert_eq!(mu_alpha.weights(), replay_alpha.weights());
    assert_eq!(mu_beta.weights(), replay_beta.weights());
    assert_eq!(first.digest(), second.digest());
}

#[test]
fn transient_500s_are_retried() {
    let attempts = Arc::new(AtomicUsize::new(0));
    let seen = Arc::clone(&attempts);
    let server = common::MockLlm::start(move |_| {
        if seen.fetch_add(1, Ordering::SeqCst) < 2 {
            (500, "{\"error\": \"busy\"}".into())
        } else {
            (
                200,
                "{\"weights\": {\"Rock\": 1.0, \"Paper\": 1.0, \"Scissors\": 2.0}}".into(),
            )
        }
    });
    let dir = tempfile::tempdir().unwrap();
    let oracle = HttpOracle::new(server.url.clone(), None, &dir.path().join("c.jsonl")).unwrap();
    let parts = QueryParts::new("x1", "alpha");
    let mu = oracle.induce_policy(&parts.query()).unwrap();
    assert_eq!(attempts.load(Ordering::SeqCst), 3);
    assert!((mu.weights()[2] - 0.5).abs() < 1e-12);
}

#[test]
fn persistent_failure_is_an_upstream_error() {
    let server = common::MockLlm::start(|_| (503, "{\"error\": \"down\"}".into()));
    let dir = tempfile::tempdir().unwrap();
    let oracle = HttpOracle::new(server.url.clone(), None, &dir.path().join("c.jsonl")).unwrap();
    let parts = QueryParts::new("x1", "alpha");
    let err = oracle.induce_policy(&parts.query()).unwrap_err();
    assert!(matches!(err, Error::UpstreamError(_)), "got {err:?}");
    assert_eq!(server.hits(), 3, "expected exactly 3 transport attempts");
}

#[test]
fn corrupt_cache_line_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("c.jsonl");
    std::fs::write(&cache, "this is not a cache record\n").unwrap();
    let err = HttpOracle::new("http://127.0.0.1:9/x".into(), None, &cache)
        .map(|_| ())
        .unwrap_err();
    assert!(matches!(err, Error::SchemaError { .. }), "got {err:?}");
}

#[test]
fn later_cache_lines_win() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("c.jsonl");
    let parts = QueryParts::new("x1", "alpha");
    let key = parts.query().key();
    let record = |weights: Vec<f64>| CacheRecord {
        player: key.player,
        info_hash: key.info_hash.clone(),
        prompt_id: key.prompt_id.clone(),
        worldview: key.worldview.clone(),
        action_space_fingerprint: key.action_space_fingerprint.clone(),
        weights,
        created_at: "2026-01-01T00:00:00Z".into(),
    };
    let lines = [
        serde_json::to_string(&record(vec![1.0, 0.0, 0.0])).unwrap(),
        serde_json::to_string(&record(vec![0.0, 0.0, 1.0])).unwrap(),
    ];
    std::fs::write(&cache, lines.join("\n") + "\n").unwrap();

    // The URL is never contacted: the cache answers.
    let oracle = HttpOracle::new("http://127.0.0.1:9/x".into(), None, &cache).unwrap();
    let mu = oracle.induce_policy(&parts.query()).unwrap();
    assert_eq!(mu.weights(), &[0.0, 0.0, 1.0]);
}
