use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use inquest_core::rng::SplitMix64;
use inquest_core::store::RecordStore;
use inquest_core::{Difficulty, Mode, QuestionType};
use inquest_service::{serve_tcp, AgentServerConfig};
use serde_json::Value;
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::oneshot;

async fn start(config: AgentServerConfig) -> (std::net::SocketAddr, oneshot::Sender<()>) {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let (stop, stopped) = oneshot::channel::<()>();
    tokio::spawn(serve_tcp(listener, config, async {
        let _ = stopped.await;
    }));
    (addr, stop)
}

/// Plays one session. `choose` picks the reply to each obs frame.
/// Returns every line exchanged, prefixed with `<` (server) or `>` (agent).
async fn play(addr: std::net::SocketAddr, mut choose: impl FnMut(&Value) -> String) -> Vec<String> {
    let stream = TcpStream::connect(addr).await.unwrap();
    let (r, mut w) = stream.into_split();
    let mut lines = BufReader::new(r).lines();
    let mut log = Vec::new();
    while let Some(line) = lines.next_line().await.unwrap() {
        log.push(format!("< {line}"));
        let frame: Value = serde_json::from_str(&line).unwrap();
        let needs_reply = match frame["type"].as_str().unwrap() {
            "obs" => true,
            "error" => !frame["fatal"].as_bool().unwrap(),
            _ => false,
        };
        if needs_reply {
            let reply = choose(&frame);
            log.push(format!("> {reply}"));
            w.write_all(format!("{reply}\n").as_bytes()).await.unwrap();
        }
    }
    log
}

fn scripted(commands: &[&str], answer: &str) -> impl FnMut(&Value) -> String {
    let mut queue: Vec<String> = commands.iter().rev().map(|c| c.to_string()).collect();
    let answer = answer.to_owned();
    move |frame| {
        if frame["type"] == "obs" && frame["done"].as_bool().unwrap() {
            return serde_json::json!({"type": "answer", "token": answer}).to_string();
        }
        let cmd = queue.pop().unwrap_or_else(|| "wait".into());
        serde_json::json!({"type": "cmd", "text": cmd}).to_string()
    }
}

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/session.jsonl")
}

fn golden_config(mode: Mode) -> AgentServerConfig {
    let mut config = AgentServerConfig::new(Difficulty::FixedMap, QuestionType::Location, mode, 2019);
    config.repeat_seed = true;
    config
}

const GOLDEN_SCRIPT: [&str; 9] =
    ["look", "open cupboard", "inventory", "dance", "go north", "go west", "take razor", "eat razor", "wait"];

#[tokio::test]
async fn golden_session_replays_byte_identically() {
    let (addr, _stop) = start(golden_config(Mode::Test)).await;
    let transcript = play(addr, scripted(&GOLDEN_SCRIPT, "kitchen")).await.join("\n") + "\n";
    let path = golden_path();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &transcript).unwrap();
    }
    let golden = std::fs::read_to_string(&path).expect("golden transcript; regenerate with UPDATE_GOLDEN=1");
    assert_eq!(transcript, golden);
    let again = play(addr, scripted(&GOLDEN_SCRIPT, "kitchen")).await.join("\n") + "\n";
    assert_eq!(again, golden);
}

#[tokio::test]
async fn golden_frames_carry_every_schema_field() {
    let golden = std::fs::read_to_string(golden_path()).unwrap();
    let mut seen: HashMap<String, Vec<String>> = HashMap::new();
    for line in golden.lines() {
        let v: Value = serde_json::from_str(&line[2..]).unwrap();
        let kind = v["type"].as_str().unwrap().to_owned();
        if line.starts_with("< ") {
            assert_eq!(v["version"], 1, "{line}");
        }
        seen.entry(kind).or_default().extend(v.as_object().unwrap().keys().cloned());
    }
    let obs = &seen["obs"];
    for field in ["version", "step", "observation", "feedback", "question", "qtype", "done", "mode", "max_steps", "lexicons"] {
        assert!(obs.contains(&field.to_owned()), "obs frames lack {field}");
    }
    assert!(!obs.contains(&"train_only".to_owned()));
    for kind in ["result", "bye", "cmd", "answer"] {
        assert!(seen.contains_key(kind), "no {kind} frame in the golden transcript");
    }
    assert!(!golden.contains("valid_commands") && !golden.contains("episodic_bonus") && !golden.contains("sufficient_info"));
}

#[tokio::test]
async fn training_sessions_expose_training_fields() {
    let (addr, _stop) = start(golden_config(Mode::Train)).await;
    let log = play(addr, scripted(&GOLDEN_SCRIPT, "kitchen")).await;
    let obs: Vec<Value> =
        log.iter().filter(|l| l.starts_with("< ")).map(|l| serde_json::from_str::<Value>(&l[2..]).unwrap()).filter(|v| v["type"] == "obs").collect();
    assert!(obs.iter().all(|v| v["train_only"]["valid_commands"].is_array() && v["train_only"]["episodic_bonus"].is_number()));
    let result: Value = log.iter().rev().find(|l| l.contains("\"result\"")).map(|l| serde_json::from_str(&l[2..]).unwrap()).unwrap();
    assert!(result["sufficient_info"].is_number());
    assert!(result.get("ground_truth").is_none());
}

#[tokio::test]
async fn protocol_violations_get_error_frames() {
    let (addr, _stop) = start(golden_config(Mode::Test)).await;
    let mut turn = 0;
    let log = play(addr, move |_| {
        turn += 1;
        match turn {
            1 => r#"{"type":"answer","token":"kitchen"}"#.into(),
            2 => r#"{"type":"cmd","text":"wait"}"#.into(),
            _ => r#"{"type":"answer","token":"kitchen"}"#.into(),
        }
    })
    .await;
    let err: Value = serde_json::from_str(&log[2][2..]).unwrap();
    assert_eq!((err["type"].as_str(), err["fatal"].as_bool()), (Some("error"), Some(false)));
    assert!(log.last().unwrap().contains("bye"));
    assert!(log.iter().any(|l| l.contains("\"result\"")));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 8)]
async fn concurrent_sessions_are_isolated() {
    const SESSIONS: u64 = 32;
    let dir = tempfile::tempdir().unwrap();
    let store = Arc::new(RecordStore::open(dir.path()).unwrap());
    let mut config = AgentServerConfig::new(Difficulty::RandomMap, QuestionType::Existence, Mode::Train, 99);
    config.store = Some(Arc::clone(&store));
    let (addr, _stop) = start(config).await;

    let clients: Vec<_> = (0..SESSIONS)
        .map(|i| {
            tokio::spawn(async move {
                let mut rng = SplitMix64::new(i);
                let mut pauses = SplitMix64::new(i ^ 0xfeed);
                let mut steps = 0;
                let chooser = move |frame: &Value| {
                    steps += 1;
                    if frame["done"].as_bool() == Some(true) {
                        return r#"{"type":"answer","token":"yes"}"#.to_owned();
                    }
                    let valid = frame["train_only"]["valid_commands"].as_array().unwrap();
                    let cmd = if steps > 25 { "wait" } else { valid[rng.below(valid.len() as u64) as usize].as_str().unwrap() };
                    serde_json::json!({"type": "cmd", "text": cmd}).to_string()
                };
                let log = play_with_pauses(addr, chooser, move || Duration::from_micros(pauses.below(3000))).await;
                log.into_iter()
                    .filter_map(|l| l.strip_prefix("< ").map(|s| serde_json::from_str::<Value>(s).unwrap()))
                    .filter(|v| v["type"] == "obs")
                    .map(|v| (v["observation"].as_str().unwrap().to_owned(), v["feedback"].as_str().unwrap().to_owned()))
                    .collect::<Vec<_>>()
            })
        })
        .collect();
    let mut transcripts = Vec::new();
    for c in clients {
        transcripts.push(c.await.unwrap());
    }

    // every client transcript is exactly one stored record, and vice versa
    // records are saved just after the socket closes
    let mut index = store.index().unwrap();
    for _ in 0..100 {
        if index.len() >= SESSIONS as usize {
            break;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
        index = store.index().unwrap();
    }
    assert_eq!(index.len(), SESSIONS as usize);
    let mut unmatched = transcripts;
    for entry in index {
        let rec = store.load(&entry.file).unwrap();
        assert!(rec.aborted.is_none());
        let pairs: Vec<_> = std::iter::once(&rec.initial)
            .chain(rec.steps.iter().map(|s| &s.outcome))
            .map(|o| (o.observation.clone(), o.feedback.clone()))
            .collect();
        let pos = unmatched.iter().position(|t| *t == pairs).expect("a record matches no client transcript");
        unmatched.swap_remove(pos);
        assert_eq!(inquest_core::replay(&rec).unwrap(), rec);
    }
    assert!(unmatched.is_empty());
}

async fn play_with_pauses(
    addr: std::net::SocketAddr,
    mut choose: impl FnMut(&Value) -> String,
    mut pause: impl FnMut() -> Duration,
) -> Vec<String> {
    let stream = TcpStream::connect(addr).await.unwrap();
    let (r, mut w) = stream.into_split();
    let mut lines = BufReader::new(r).lines();
    let mut log = Vec::new();
    while let Some(line) = lines.next_line().await.unwrap() {
        log.push(format!("< {line}"));
        let frame: Value = serde_json::from_str(&line).unwrap();
        if frame["type"] == "obs" {
            tokio::time::sleep(pause()).await;
            w.write_all(format!("{}\n", choose(&frame)).as_bytes()).await.unwrap();
        }
    }
    log
}
