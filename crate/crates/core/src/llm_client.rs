//! Yes/No presence classification with a chat-completions endpoint.
//!
//! The client sends the construct prompt with `max_tokens = 1` and
//! `temperature = 0`, reads the top log probabilities of the first generated
//! token and turns the `Yes`/`No` pair into a probability with a two-way
//! softmax. Results are cached on disk, one JSON file per (model, prompt)
//! digest.

use std::collections::HashMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{CanDoStatement, Sentence};
use crate::error::{Error, Result};

pub const API_KEY_ENV: &str = "EGP_LLM_API_KEY";
pub const MAX_ATTEMPTS: usize = 3;

const INSTRUCTION: &str = "Read this sentence written by an L2 learner of English and its respective PoS, grammatical, and universal dependency tags associated to each token:";
const QUESTION: &str = "Does the following can-do statement apply to this sentence? Just answer Yes or No without adding any comments, notes, or explanations. The SuperCategory, SuperCategory, and Guideword entries will help you contextualise the can-do statement better. Furthermore, you will see one or more examples written by other L2 learners for which the can-do statement applies.";

#[derive(Debug, Clone, Copy)]
pub struct PromptContext<'a> {
    pub statement: &'a CanDoStatement,
    pub sentence: &'a Sentence,
}

/// Probability that the construct is present, in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PresenceProbability(f64);

impl PresenceProbability {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Value(format!("probability {p} outside [0, 1]")));
        }
        Ok(PresenceProbability(p))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmConfig {
    /// Base URL such as `http://localhost:8000/v1`; `/chat/completions` is
    /// appended unless already present.
    pub base_url: String,
    pub model: String,
    pub max_in_flight: usize,
    #[serde(with = "secs")]
    pub timeout: Duration,
    pub cache_dir: PathBuf,
    #[serde(default = "default_top_logprobs")]
    pub top_logprobs: u32,
    /// First retry delay; doubled on each further attempt.
    #[serde(default = "default_backoff", with = "secs")]
    pub backoff: Duration,
}

fn default_top_logprobs() -> u32 {
    20
}

fn default_backoff() -> Duration {
    Duration::from_millis(500)
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

impl LlmConfig {
    pub fn new(
        base_url: impl Into<String>,
        model: impl Into<String>,
        cache_dir: impl Into<PathBuf>,
    ) -> Self {
        LlmConfig {
            base_url: base_url.into(),
            model: model.into(),
            max_in_flight: 4,
            timeout: Duration::from_secs(60),
            cache_dir: cache_dir.into(),
            top_logprobs: default_top_logprobs(),
            backoff: default_backoff(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_in_flight == 0 {
            return Err(Error::Value("max_in_flight must be at least 1".into()));
        }
        if self.top_logprobs < 5 {
            return Err(Error::Value("top_logprobs must be at least 5".into()));
        }
        if self.model.trim().is_empty() {
            return Err(Error::Value("model must not be empty".into()));
        }
        Ok(())
    }

    fn endpoint(&self) -> String {
        let base = self.base_url.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

/// Python `repr` of a string: single quotes unless the text contains a single
/// quote and no double quote.
fn py_repr(s: &str) -> String {
    let quote = if s.contains('\'') && !s.contains('"') {
        '"'
    } else {
        '\''
    };
    let mut out = String::with_capacity(s.len() + 2);
    out.push(quote);
    for ch in s.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c == quote => {
                out.push('\\');
                out.push(c);
            }
            c => out.push(c),
        }
    }
    out.push(quote);
    out
}

/// Render the classification prompt.
pub fn build_prompt(ctx: &PromptContext<'_>) -> Result<String> {
    let st = ctx.statement;
    if st.examples.is_empty() {
        return Err(Error::Precondition(format!(
            "statement {} has no examples for the prompt",
            st.egp_id
        )));
    }
    if ctx.sentence.tokens.is_empty() {
        return Err(Error::Precondition("sentence has no tokens".into()));
    }
    let tuples: Vec<String> = ctx
        .sentence
        .tokens
        .iter()
        .map(|t| {
            format!(
                "({}, {}, {}, {})",
                py_repr(&t.form),
                py_repr(&t.upos),
                py_repr(&t.xpos),
                py_repr(&t.dep)
            )
        })
        .collect();

    let mut lines = vec![
        INSTRUCTION.to_string(),
        py_repr(&ctx.sentence.text),
        format!("[{}]", tuples.join(", ")),
        QUESTION.to_string(),
        format!("Can-do statement: {}", st.statement),
        format!("SuperCategory: {}", st.supercategory),
        format!("SubCategory: {}", st.subcategory),
        format!("Guideword: {}", st.guideword),
        "Example(s):".to_string(),
    ];
    lines.extend(st.examples.iter().cloned());
    lines.push("Your answer:".to_string());
    Ok(lines.join("\n"))
}

/// Two-way softmax of the Yes/No log probabilities.
pub fn softmax_confidence(logp_yes: f64, logp_no: f64) -> Result<PresenceProbability> {
    if !logp_yes.is_finite() || !logp_no.is_finite() {
        return Err(Error::Value(format!(
            "log probabilities must be finite: yes={logp_yes}, no={logp_no}"
        )));
    }
    let m = logp_yes.max(logp_no);
    let yes = (logp_yes - m).exp();
    let no = (logp_no - m).exp();
    PresenceProbability::new(yes / (yes + no))
}

// ---------------------------------------------------------------------------
// Wire format

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    max_tokens: u32,
    temperature: f64,
    logprobs: bool,
    top_logprobs: u32,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    logprobs: Option<ChoiceLogprobs>,
}

#[derive(Deserialize)]
struct ChoiceLogprobs {
    content: Option<Vec<TokenLogprob>>,
}

#[derive(Deserialize)]
struct TokenLogprob {
    token: String,
    logprob: f64,
    #[serde(default)]
    top_logprobs: Vec<TopLogprob>,
}

#[derive(Deserialize)]
struct TopLogprob {
    token: String,
    logprob: f64,
}

/// Yes/No log probabilities among the first token's alternatives. Case and
/// leading whitespace are ignored; when a variant appears several times the
/// highest log probability is used.
pub fn extract_yes_no(alternatives: &[(String, f64)]) -> Result<(f64, f64)> {
    let mut yes: Option<f64> = None;
    let mut no: Option<f64> = None;
    for (tok, lp) in alternatives {
        let slot = match tok.trim_start().to_lowercase().as_str() {
            "yes" => &mut yes,
            "no" => &mut no,
            _ => continue,
        };
        *slot = Some(slot.map_or(*lp, |v: f64| v.max(*lp)));
    }
    match (yes, no) {
        (Some(y), Some(n)) => Ok((y, n)),
        (None, None) => Err(Error::Classification(
            "neither Yes nor No among the first-token alternatives".into(),
        )),
        (None, _) => Err(Error::Classification(
            "Yes missing from the first-token alternatives".into(),
        )),
        (_, None) => Err(Error::Classification(
            "No missing from the first-token alternatives".into(),
        )),
    }
}

fn parse_response(body: &str) -> Result<(f64, f64)> {
    let resp: ChatResponse = serde_json::from_str(body)
        .map_err(|e| Error::Classification(format!("malformed response: {e}")))?;
    let first = resp
        .choices
        .into_iter()
        .next()
        .and_then(|c| c.logprobs)
        .and_then(|l| l.content)
        .and_then(|c| c.into_iter().next())
        .ok_or_else(|| {
            Error::Classification("response carries no token log probabilities".into())
        })?;
    let mut alternatives: Vec<(String, f64)> = first
        .top_logprobs
        .into_iter()
        .map(|t| (t.token, t.logprob))
        .collect();
    alternatives.push((first.token, first.logprob));
    extract_yes_no(&alternatives)
}

// ---------------------------------------------------------------------------
// Cache

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub model: String,
    pub digest: String,
    pub logp_yes: f64,
    pub logp_no: f64,
    pub p: f64,
}

pub fn prompt_digest(model: &str, prompt: &str) -> String {
    let mut h = Sha256::new();
    h.update(model.as_bytes());
    h.update([0u8]);
    h.update(prompt.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn cache_path(dir: &Path, digest: &str) -> PathBuf {
    dir.join(format!("{digest}.json"))
}

fn read_cache(dir: &Path, digest: &str) -> Option<CacheRecord> {
    let path = cache_path(dir, digest);
    let text = fs::read_to_string(&path).ok()?;
    match serde_json::from_str(&text) {
        Ok(r) => Some(r),
        Err(e) => {
            warn!("ignoring unreadable cache entry {}: {e}", path.display());
            None
        }
    }
}

fn write_cache(dir: &Path, record: &CacheRecord) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = cache_path(dir, &record.digest);
    let tmp = dir.join(format!(".{}.tmp", record.digest));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(serde_json::to_string(record)?.as_bytes())
        .map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct CacheStats {
    pub entries: usize,
    pub bytes: u64,
}

pub fn cache_stats(dir: &Path) -> Result<CacheStats> {
    let mut stats = CacheStats::default();
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(stats),
        Err(e) => return Err(Error::io(dir, e)),
    };
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.extension().is_some_and(|x| x == "json") {
            stats.entries += 1;
            stats.bytes += entry.metadata().map(|m| m.len()).unwrap_or(0);
        }
    }
    Ok(stats)
}

/// Remove all cache entries; returns how many were deleted.
pub fn clear_cache(dir: &Path) -> Result<usize> {
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(0),
        Err(e) => return Err(Error::io(dir, e)),
    };
    let mut n = 0;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|x| x == "json") {
            fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
            n += 1;
        }
    }
    Ok(n)
}

// ---------------------------------------------------------------------------
// Client

/// Thread-safe client. Requests for the same (model, prompt) are serialized so
/// a repeated prompt is answered from the cache.
pub struct LlmClient {
    cfg: LlmConfig,
    agent: ureq::Agent,
    api_key: Option<String>,
    key_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    requests: AtomicUsize,
}

impl LlmClient {
    pub fn new(cfg: LlmConfig) -> Result<Self> {
        cfg.validate()?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(LlmClient {
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            cfg,
            agent,
            key_locks: Mutex::new(HashMap::new()),
            requests: AtomicUsize::new(0),
        })
    }

    pub fn config(&self) -> &LlmConfig {
        &self.cfg
    }

    /// HTTP requests sent so far, retries included.
    pub fn requests_sent(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    fn key_lock(&self, digest: &str) -> Arc<Mutex<()>> {
        let mut locks = self.key_locks.lock().expect("lock map poisoned");
        locks.entry(digest.to_string()).or_default().clone()
    }

    pub fn classify(&self, ctx: &PromptContext<'_>) -> Result<PresenceProbability> {
        let prompt = build_prompt(ctx)?;
        self.classify_prompt(&prompt)
    }

    pub fn classify_prompt(&self, prompt: &str) -> Result<PresenceProbability> {
        let digest = prompt_digest(&self.cfg.model, prompt);
        let lock = self.key_lock(&digest);
        let _guard = lock.lock().expect("cache key lock poisoned");

        if let Some(hit) = read_cache(&self.cfg.cache_dir, &digest) {
            debug!("cache hit {digest}");
            return PresenceProbability::new(hit.p);
        }
        let (logp_yes, logp_no) = self.query(prompt)?;
        let p = softmax_confidence(logp_yes, logp_no)?;
        write_cache(
            &self.cfg.cache_dir,
            &CacheRecord {
                model: self.cfg.model.clone(),
                digest,
                logp_yes,
                logp_no,
                p: p.value(),
            },
        )?;
        Ok(p)
    }

    fn query(&self, prompt: &str) -> Result<(f64, f64)> {
        let request = ChatRequest {
            model: &self.cfg.model,
            messages: [ChatMessage {
                role: "user",
                content: prompt,
            }],
            max_tokens: 1,
            temperature: 0.0,
            logprobs: true,
            top_logprobs: self.cfg.top_logprobs,
        };
        let body = serde_json::to_string(&request)?;
        let url = self.cfg.endpoint();

        let mut last_err = String::new();
        for attempt in 0..MAX_ATTEMPTS {
            if attempt > 0 {
                let delay = self.cfg.backoff * 2u32.pow(attempt as u32 - 1);
                debug!("retrying in {delay:?} after: {last_err}");
                std::thread::sleep(delay);
            }
            self.requests.fetch_add(1, Ordering::SeqCst);
            let mut req = self
                .agent
                .post(&url)
                .header("Content-Type", "application/json");
            if let Some(key) = &self.api_key {
                req = req.header("Authorization", &format!("Bearer {key}"));
            }
            match req.send(body.as_str()) {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    let text = resp.body_mut().read_to_string();
                    if status >= 500 || status == 429 {
                        last_err = format!("HTTP {status}");
                        continue;
                    }
                    let text = text.map_err(|e| Error::Transport(e.to_string()))?;
                    if status >= 400 {
                        return Err(Error::Transport(format!("HTTP {status}: {text}")));
                    }
                    return parse_response(&text);
                }
                Err(e) => last_err = e.to_string(),
            }
        }
        Err(Error::Transport(format!(
            "{url}: giving up after {MAX_ATTEMPTS} attempts: {last_err}"
        )))
    }

    /// Classify many contexts with at most `max_in_flight` concurrent
    /// requests. Results keep input order; failures are reported per item.
    pub fn classify_batch(&self, ctxs: &[PromptContext<'_>]) -> BatchReport {
        let prompts: Vec<Result<String>> = ctxs.iter().map(build_prompt).collect();
        self.classify_prompts(prompts)
    }

    pub fn classify_prompts(&self, prompts: Vec<Result<String>>) -> BatchReport {
        let n = prompts.len();
        let slots: Vec<Mutex<Option<Result<PresenceProbability>>>> =
            (0..n).map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.cfg.max_in_flight.min(n);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= n {
                        break;
                    }
                    let result = match &prompts[i] {
                        Ok(p) => self.classify_prompt(p),
                        Err(e) => Err(Error::Precondition(e.to_string())),
                    };
                    *slots[i].lock().expect("slot poisoned") = Some(result);
                });
            }
        });
        BatchReport {
            results: slots
                .into_iter()
                .map(|s| {
                    s.into_inner()
                        .expect("slot poisoned")
                        .expect("every slot filled")
                })
                .collect(),
        }
    }
}

#[derive(Debug)]
pub struct BatchReport {
    pub results: Vec<Result<PresenceProbability>>,
}

impl BatchReport {
    pub fn probabilities(&self) -> Vec<Option<f64>> {
        self.results
            .iter()
            .map(|r| r.as_ref().ok().map(|p| p.value()))
            .collect()
    }

    pub fn errors(&self) -> Vec<(usize, &Error)> {
        self.results
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.as_ref().err().map(|e| (i, e)))
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.results.iter().all(Result::is_ok)
    }
}

/// One-shot classification with a fresh client.
pub fn classify(ctx: &PromptContext<'_>, cfg: &LlmConfig) -> Result<PresenceProbability> {
    LlmClient::new(cfg.clone())?.classify(ctx)
}

pub fn classify_batch(ctxs: &[PromptContext<'_>], cfg: &LlmConfig) -> Result<BatchReport> {
    Ok(LlmClient::new(cfg.clone())?.classify_batch(ctxs))
}
