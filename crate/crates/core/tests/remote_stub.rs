mod common;

use std::sync::Arc;
use std::time::Duration;

use common::*;
use mova::parse_symbol;
use mova::remote::{QuoteCache, QuoteClient, RemoteEndpointConfig, RemoteError};

fn quick_config(stub: &Stub) -> RemoteEndpointConfig {
    let mut c = RemoteEndpointConfig::new(stub.template()).unwrap();
    c.backoff = Duration::from_millis(10);
    c.timeout = Duration::from_secs(5);
    c
}

fn ebay() -> mova::SymbolRef {
    parse_symbol("EBAY.US").unwrap()
}

#[tokio::test(flavor = "multi_thread")]
async fn fetch_parses_payload_and_stamps_symbol() {
    let stub = Stub::start(Reply::Body(sample_text())).await;
    let frame = QuoteClient::new(quick_config(&stub)).fetch(&ebay()).await.unwrap();
    assert_eq!(frame.source_label(), "EBAY.US");
    assert!(frames_identical(&frame, &sample_frame()));
    assert_eq!(stub.paths(), ["ebay.us.csv"]);
}

#[tokio::test(flavor = "multi_thread")]
async fn empty_body_and_no_data_are_unknown_symbol() {
    let stub = Stub::start(Reply::Body(String::new())).await;
    let client = QuoteClient::new(quick_config(&stub));
    let err = client.fetch(&parse_symbol("XXXX.ZZ").unwrap()).await.unwrap_err();
    assert_eq!(err.code(), "unknown-symbol");
    stub.set_fallback(Reply::Body("No data".into()));
    let err = client.fetch(&parse_symbol("XXXX.ZZ").unwrap()).await.unwrap_err();
    assert!(matches!(err, RemoteError::UnknownSymbol(_)));
    assert_eq!(stub.hits(), 2);
}

#[tokio::test(flavor = "multi_thread")]
async fn garbage_is_malformed_payload() {
    let stub = Stub::start(Reply::Body("Date,Close\nyesterday,1\n".into())).await;
    let err = QuoteClient::new(quick_config(&stub)).fetch(&ebay()).await.unwrap_err();
    assert_eq!(err.code(), "malformed-payload");
}

#[tokio::test(flavor = "multi_thread")]
async fn retries_then_succeeds_after_three_attempts() {
    let stub = Stub::start(Reply::Body(sample_text())).await;
    stub.script([Reply::Status(503), Reply::Status(500)]);
    let frame = QuoteClient::new(quick_config(&stub)).fetch(&ebay()).await.unwrap();
    assert_eq!(frame.len(), 29);
    assert_eq!(stub.hits(), 3);
}

#[tokio::test(flavor = "multi_thread")]
async fn gives_up_after_retries() {
    let stub = Stub::start(Reply::Status(503)).await;
    let err = QuoteClient::new(quick_config(&stub)).fetch(&ebay()).await.unwrap_err();
    match err {
        RemoteError::NetworkFailure { attempts, .. } => assert_eq!(attempts, 3),
        e => panic!("{e:?}"),
    }
    assert_eq!(stub.hits(), 3);
}

#[tokio::test(flavor = "multi_thread")]
async fn timeout_is_network_failure() {
    let stub = Stub::start(Reply::Slow(Duration::from_secs(3), sample_text())).await;
    let mut config = quick_config(&stub);
    config.timeout = Duration::from_millis(100);
    config.max_retries = 0;
    let err = QuoteClient::new(config).fetch(&ebay()).await.unwrap_err();
    assert_eq!(err.code(), "network-failure");
}

#[tokio::test(flavor = "multi_thread")]
async fn connection_refused_is_network_failure() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let mut config = RemoteEndpointConfig::new(format!("http://{addr}/{{symbol}}")).unwrap();
    config.backoff = Duration::from_millis(1);
    let err = QuoteClient::new(config).fetch(&ebay()).await.unwrap_err();
    assert!(matches!(err, RemoteError::NetworkFailure { attempts: 3, .. }));
}

#[tokio::test(flavor = "multi_thread")]
async fn oversize_response_is_rejected() {
    let stub = Stub::start(Reply::Body(sample_text())).await;
    let mut config = quick_config(&stub);
    config.max_response_bytes = 64;
    let err = QuoteClient::new(config).fetch(&ebay()).await.unwrap_err();
    assert_eq!(err.code(), "payload-too-large");
}

#[tokio::test(flavor = "multi_thread")]
async fn cache_hit_makes_no_request() {
    let stub = Stub::start(Reply::Body(sample_text())).await;
    let cache = QuoteCache::new(QuoteClient::new(quick_config(&stub)), Duration::from_secs(60));
    let first = cache.get_or_fetch(&ebay()).await.unwrap();
    let second = cache.get_or_fetch(&parse_symbol("ebay.us").unwrap()).await.unwrap();
    assert_eq!(stub.hits(), 1);
    assert!(Arc::ptr_eq(&first.frame, &second.frame));
    assert!(!second.stale);
    assert_eq!(cache.len().await, 1);
}

#[tokio::test(flavor = "multi_thread")]
async fn symbols_do_not_share_entries() {
    let stub = Stub::start(Reply::Body(sample_text())).await;
    let cache = QuoteCache::new(QuoteClient::new(quick_config(&stub)), Duration::from_secs(60));
    let a = cache.get_or_fetch(&ebay()).await.unwrap();
    let b = cache.get_or_fetch(&parse_symbol("AAPL.US").unwrap()).await.unwrap();
    assert_eq!(a.frame.source_label(), "EBAY.US");
    assert_eq!(b.frame.source_label(), "AAPL.US");
    assert_eq!(stub.hits(), 2);
}

#[tokio::test(flavor = "multi_thread")]
async fn concurrent_cold_fetches_coalesce() {
    let stub = Stub::start(Reply::Slow(Duration::from_millis(200), sample_text())).await;
    let cache = Arc::new(QuoteCache::new(
        QuoteClient::new(quick_config(&stub)),
        Duration::from_secs(60),
    ));
    let tasks: Vec<_> = (0..16)
        .map(|_| {
            let cache = cache.clone();
            tokio::spawn(async move { cache.get_or_fetch(&ebay()).await.unwrap() })
        })
        .collect();
    for t in tasks {
        assert_eq!(t.await.unwrap().frame.len(), 29);
    }
    assert_eq!(stub.hits(), 1);
}

#[tokio::test(flavor = "multi_thread")]
async fn expiry_refetches_once() {
    let stub = Stub::start(Reply::Body(sample_text())).await;
    let cache = QuoteCache::new(QuoteClient::new(quick_config(&stub)), Duration::from_millis(100));
    cache.get_or_fetch(&ebay()).await.unwrap();
    tokio::time::sleep(Duration::from_millis(150)).await;
    let fresh = cache.get_or_fetch(&ebay()).await.unwrap();
    assert!(!fresh.stale);
    assert_eq!(stub.hits(), 2);
}

#[tokio::test(flavor = "multi_thread")]
async fn stale_entry_served_when_refresh_fails() {
    let stub = Stub::start(Reply::Body(sample_text())).await;
    let mut config = quick_config(&stub);
    config.max_retries = 0;
    let cache = QuoteCache::new(QuoteClient::new(config), Duration::from_millis(100));
    let original = cache.get_or_fetch(&ebay()).await.unwrap();
    stub.set_fallback(Reply::Status(503));
    tokio::time::sleep(Duration::from_millis(150)).await;
    let degraded = cache.get_or_fetch(&ebay()).await.unwrap();
    assert!(degraded.stale);
    assert!(degraded.age >= Duration::from_millis(100));
    assert!(Arc::ptr_eq(&original.frame, &degraded.frame));
    assert_eq!(stub.hits(), 2);
}

#[tokio::test(flavor = "multi_thread")]
async fn cold_failure_propagates() {
    let stub = Stub::start(Reply::Status(503)).await;
    let mut config = quick_config(&stub);
    config.max_retries = 0;
    let cache = QuoteCache::new(QuoteClient::new(config), Duration::from_secs(60));
    assert!(cache.get_or_fetch(&ebay()).await.is_err());
    assert_eq!(cache.len().await, 0);
}
