//! Attack a classifier served over HTTP. A throwaway server in this process
//! answers the scoring protocol with the builtin model.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::Arc;
use std::thread;

use charmer::attack::{charmer_attack, AttackConfig};
use charmer::oracle::{
    train_builtin, BuiltinClassifier, Label, OracleHandle, RemoteConfig, RemoteOracle, TrainConfig,
};
use charmer::sentence::{Alphabet, Sentence};
use charmer::synth::{keyword_corpus, CorpusConfig};
use serde_json::{json, Value};

fn serve(model: Arc<BuiltinClassifier>) -> std::io::Result<String> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let url = format!("http://{}", listener.local_addr()?);
    thread::spawn(move || {
        for mut stream in listener.incoming().flatten() {
            let mut reader = BufReader::new(stream.try_clone().expect("clone"));
            let mut length = 0;
            let mut line = String::new();
            while reader.read_line(&mut line).is_ok() && line != "\r\n" && !line.is_empty() {
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap_or(0);
                }
                line.clear();
            }
            let mut body = vec![0; length];
            if reader.read_exact(&mut body).is_err() {
                continue;
            }
            let request: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
            let rows: Vec<Vec<f64>> = request["sentences"]
                .as_array()
                .map(|a| {
                    a.iter()
                        .filter_map(Value::as_str)
                        .map(|t| model.logits(&Sentence::new(t).unwrap()))
                        .collect()
                })
                .unwrap_or_default();
            let payload = json!({ "scores": rows }).to_string();
            let _ = write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                payload.len()
            );
        }
    });
    Ok(url)
}

fn main() -> charmer::Result<()> {
    let model = Arc::new(train_builtin(
        &keyword_corpus(&CorpusConfig::default()),
        &TrainConfig::default(),
    )?);
    let url = serve(Arc::clone(&model))?;
    let remote = RemoteOracle::new(
        &url,
        RemoteConfig {
            retries: 2,
            ..RemoteConfig::default()
        },
    )?;
    println!("scoring through {}", remote.url());
    let oracle = OracleHandle::remote(remote);

    let s = Sentence::new("the actors were lovely")?;
    let config = AttackConfig::new(Alphabet::new("abcdefghijklmnopqrstuvwxyz ".chars())?);
    let o = charmer_attack(&oracle, &s, Label(1), &config)?;
    println!(
        "{s} -> {} (success {}, {} queries)",
        o.adversarial, o.success, o.queries
    );

    let local = charmer_attack(model.as_ref(), &s, Label(1), &config)?;
    assert_eq!(local.adversarial, o.adversarial);
    println!("matches the in-process attack");
    Ok(())
}
