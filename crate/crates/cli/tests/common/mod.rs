#![allow(dead_code)]

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use egp_core::corpus::{
    parse_conllu_blocks, write_egp_catalog, write_sentence_pairs, CanDoStatement, Sentence,
    SentencePair,
};
use egp_core::ruleset::BUILTIN_IDS;
use egp_core::{Band, Level};
use tempfile::TempDir;

pub fn egp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_egp"))
        .args(args)
        .env_remove("EGP_LLM_API_KEY")
        .output()
        .expect("run egp")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn statement(egp_id: u32, level: Level) -> CanDoStatement {
    CanDoStatement {
        egp_id,
        statement: format!("Can use construct {egp_id}."),
        supercategory: if egp_id.is_multiple_of(2) {
            "CLAUSES"
        } else {
            "VERBS"
        }
        .into(),
        subcategory: format!("sub{}", egp_id % 3),
        guideword: format!("FORM: {egp_id}"),
        level,
        examples: vec![format!("Example for {egp_id}.")],
        lexical: false,
    }
}

/// The built-in constructs spread over the six levels, two per level.
pub fn builtin_catalog() -> Vec<CanDoStatement> {
    BUILTIN_IDS
        .iter()
        .enumerate()
        .map(|(i, &id)| statement(id, Level::ALL[i / 2]))
        .collect()
}

/// Tagged sentences from the rule-pack fixture of the core crate.
pub fn fixture_sentences() -> Vec<Sentence> {
    let path =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/rule_pack.conllu");
    let text = fs::read_to_string(path).unwrap();
    parse_conllu_blocks(&text)
        .unwrap()
        .into_iter()
        .map(|b| b.sentence)
        .collect()
}

pub const BANDS: [Band; 4] = [Band::A2, Band::B1, Band::B2, Band::C1];

pub struct Fixture {
    pub dir: TempDir,
}

impl Fixture {
    pub fn new() -> Self {
        Fixture {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn arg(&self, name: &str) -> String {
        self.path(name).to_str().unwrap().to_string()
    }

    pub fn write(&self, name: &str, text: &str) -> String {
        fs::write(self.path(name), text).unwrap();
        self.arg(name)
    }

    pub fn read(&self, name: &str) -> String {
        fs::read_to_string(self.path(name)).unwrap()
    }

    pub fn catalog(&self, statements: &[CanDoStatement]) -> String {
        let mut buf = Vec::new();
        write_egp_catalog(&mut buf, statements).unwrap();
        self.write("catalog.csv", std::str::from_utf8(&buf).unwrap())
    }

    pub fn corpus(&self, pairs: &[SentencePair]) -> String {
        let mut buf = Vec::new();
        write_sentence_pairs(&mut buf, pairs).unwrap();
        self.write("pairs.jsonl", std::str::from_utf8(&buf).unwrap())
    }

    pub fn meta(&self, essays: &[(&str, Band)]) -> String {
        let mut text = String::from("essay_id,cefr,prompt_id\n");
        for (id, band) in essays {
            text.push_str(&format!("{id},{band},\n"));
        }
        self.write("essays.csv", &text)
    }

    /// Detections CSV from (essay, index, egp, p_o, p_c) rows.
    pub fn detections(&self, name: &str, rows: &[(&str, usize, u32, f64, f64)]) -> String {
        let mut text = String::from("essay_id,index,egp_id,p_o,p_c\n");
        for (e, i, id, o, c) in rows {
            text.push_str(&format!("{e},{i},{id},{o},{c}\n"));
        }
        self.write(name, &text)
    }

    /// Built-in catalog plus a corpus of 12 essays over the rule-pack
    /// sentences, each pair joining consecutive fixture sentences.
    pub fn rules_setup(&self) -> (String, String, String) {
        let sentences = fixture_sentences();
        let mut pairs = Vec::new();
        let mut essays = Vec::new();
        for e in 0..12 {
            let id = format!("essay{e:02}");
            for k in 0..10 {
                let s = (e * 22 + k * 2) % sentences.len();
                pairs.push(SentencePair {
                    essay_id: id.clone(),
                    index: k,
                    original: sentences[s].clone(),
                    corrected: sentences[(s + 1) % sentences.len()].clone(),
                });
            }
            essays.push((id, BANDS[e % BANDS.len()]));
        }
        let essays: Vec<(&str, Band)> = essays.iter().map(|(i, b)| (i.as_str(), *b)).collect();
        (
            self.catalog(&builtin_catalog()),
            self.corpus(&pairs),
            self.meta(&essays),
        )
    }
}

/// Chat-completions stub answering every request with the same Yes/No
/// log probabilities.
pub struct MockServer {
    pub url: String,
    hits: Arc<AtomicUsize>,
}

impl MockServer {
    pub fn start(logp_yes: f64, logp_no: f64) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let h = hits.clone();
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { break };
                let h = h.clone();
                std::thread::spawn(move || serve(stream, &h, logp_yes, logp_no));
            }
        });
        MockServer { url, hits }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

fn serve(stream: TcpStream, hits: &AtomicUsize, logp_yes: f64, logp_no: f64) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut out = stream;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        let mut len = 0;
        loop {
            let mut h = String::new();
            reader.read_line(&mut h).unwrap();
            let h = h.trim_end();
            if h.is_empty() {
                break;
            }
            if let Some((name, value)) = h.split_once(':') {
                if name.eq_ignore_ascii_case("content-length") {
                    len = value.trim().parse().unwrap();
                }
            }
        }
        let mut body = vec![0; len];
        reader.read_exact(&mut body).unwrap();
        hits.fetch_add(1, Ordering::SeqCst);
        let text = serde_json::json!({
            "choices": [{
                "message": {"role": "assistant", "content": "Yes"},
                "logprobs": {"content": [{
                    "token": "Yes",
                    "logprob": logp_yes,
                    "top_logprobs": [
                        {"token": "Yes", "logprob": logp_yes},
                        {"token": "No", "logprob": logp_no}
                    ]
                }]}
            }]
        })
        .to_string();
        let reply = format!(
            "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{text}",
            text.len()
        );
        if out.write_all(reply.as_bytes()).is_err() {
            return;
        }
    }
}

/// A port nothing listens on.
pub fn dead_url() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port();
    drop(listener);
    format!("http://127.0.0.1:{port}/v1")
}

/// Rows of a CSV file as string maps.
pub fn csv_rows(path: &Path) -> Vec<std::collections::HashMap<String, String>> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let headers = rdr.headers().unwrap().clone();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            headers
                .iter()
                .map(String::from)
                .zip(r.iter().map(String::from))
                .collect()
        })
        .collect()
}

pub fn num(s: &str) -> f64 {
    s.parse().unwrap()
}
