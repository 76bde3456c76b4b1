//! The HTTP client against a scripted local server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use symsearch::synthgen::{complete, CompleteError, GenerationConfig, HttpCompletionClient};

/// Serves one scripted `(status, body)` per connection and forwards each raw
/// request (headers and body) to the returned channel.
fn serve(script: Vec<(u16, &'static str)>) -> (String, mpsc::Receiver<String>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base = format!("http://{}/v1", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, body) in script {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream);
            let mut head = String::new();
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                head.push_str(&line);
                if line == "\r\n" {
                    break;
                }
            }
            let mut payload = vec![0; len];
            reader.read_exact(&mut payload).unwrap();
            tx.send(head + &String::from_utf8(payload).unwrap()).unwrap();
            let mut stream = reader.into_inner();
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (base, rx)
}

fn cfg() -> GenerationConfig {
    GenerationConfig {
        backoff_initial: Duration::ZERO,
        retries: 2,
        ..GenerationConfig::default()
    }
}

const OK: &str = r#"{"choices":[{"text":"1. \"first\"\n2. \"second\""}],"usage":{"total_tokens":17}}"#;

#[test]
fn retries_rate_limits_and_server_errors() {
    let (base, requests) = serve(vec![(429, "{}"), (503, "busy"), (200, OK)]);
    let client = HttpCompletionClient::new(&base, "sk-local");
    let out = complete(&client, "write posts", &cfg()).unwrap();
    assert_eq!(out.retries, 2);
    assert_eq!(out.completion.tokens, Some(17));
    assert!(out.completion.text.starts_with("1. \"first\""));

    let first = requests.recv().unwrap();
    assert!(first.starts_with("POST /v1/completions "));
    assert!(first.contains("Bearer sk-local"));
    let body: serde_json::Value = serde_json::from_str(first.split("\r\n\r\n").nth(1).unwrap()).unwrap();
    assert_eq!(body["model"], "text-davinci-003");
    assert_eq!(body["prompt"], "write posts");
    assert_eq!(body["temperature"], 0.7);
}

#[test]
fn gives_up_after_the_retry_budget() {
    let (base, _rx) = serve(vec![(500, "a"), (500, "b"), (500, "c")]);
    let client = HttpCompletionClient::new(&base, "k");
    match complete(&client, "p", &cfg()) {
        Err(CompleteError::RetriesExhausted { attempts, .. }) => assert_eq!(attempts, 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn auth_and_rejections_are_not_retried() {
    let (base, _rx) = serve(vec![(401, "{}"), (400, "bad prompt"), (200, "not json")]);
    let client = HttpCompletionClient::new(&base, "k");
    assert!(matches!(complete(&client, "p", &cfg()), Err(CompleteError::Auth(_))));
    assert!(matches!(
        complete(&client, "p", &cfg()),
        Err(CompleteError::Rejected { status: 400, .. })
    ));
    assert!(matches!(complete(&client, "p", &cfg()), Err(CompleteError::Malformed(_))));
}
