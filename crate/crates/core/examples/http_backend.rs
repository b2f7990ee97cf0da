//! Talk to an OpenAI-style chat completions server.
//!
//!     ROBOCMD_API_KEY=... cargo run --example http_backend -- http://localhost:8000 "go to the kitchen"
//!
//! With no URL a throwaway local server answers once, so the example runs offline.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;

use robocmd::assets;
use robocmd::llm::{HttpBackend, HttpConfig};
use robocmd::pipeline::{run_hybrid, PipelineConfig};

fn canned_server() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    std::thread::spawn(move || {
        let (mut stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut len = 0;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            if line.trim().is_empty() {
                break;
            }
            if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                len = v.trim().parse().unwrap();
            }
        }
        reader.read_exact(&mut vec![0; len]).unwrap();
        let content = r#"{"frames":[{"frame":"Motion","elements":{"Goal":"the kitchen"}}]}"#;
        let body = serde_json::json!({"choices": [{"message": {"content": content}}]}).to_string();
        write!(stream, "HTTP/1.1 200 OK\r\nContent-Length: {}\r\n\r\n{body}", body.len()).unwrap();
    });
    url
}

fn main() {
    let mut args = std::env::args().skip(1);
    let base_url = args.next().unwrap_or_else(canned_server);
    let sentence = args.next().unwrap_or_else(|| "go to the kitchen".into());
    let backend = HttpBackend::new(HttpConfig {
        base_url,
        ..Default::default()
    })
    .expect("http client");
    match run_hybrid(&sentence, &backend, &assets::schema(), &PipelineConfig::default()) {
        Ok(r) => println!("{:?} after {}: {}", r.outcome, r.attempts_used, r.final_frames.to_json()),
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(3);
        }
    }
}
