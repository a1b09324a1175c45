//! Data model and loaders for tagged sentence pairs, essays, attempt
//! annotations and the EGP catalog.
//!
//! All text is UTF-8. Curly apostrophes are folded to `'` when a file is
//! loaded so that lexical rules can match forms such as `didn't`.
//!
//! Token heads are stored 0-based; the root token points at itself. CoNLL-U
//! input (1-based, `0` = root) is converted on the way in.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cefr::{Band, Level};
use crate::error::{Error, Result};

/// Replace typographic apostrophes with the ASCII one.
pub fn normalize_apostrophes(s: &str) -> String {
    s.replace(['\u{2019}', '\u{2018}', '\u{02BC}'], "'")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub dep: String,
    /// 0-based index of the syntactic head; the root refers to itself.
    pub head: usize,
}

impl TaggedToken {
    pub fn new(form: &str, lemma: &str, upos: &str, xpos: &str, dep: &str, head: usize) -> Self {
        TaggedToken {
            form: form.to_string(),
            lemma: lemma.to_string(),
            upos: upos.to_string(),
            xpos: xpos.to_string(),
            dep: dep.to_string(),
            head,
        }
    }

    fn normalized(mut self) -> Self {
        self.form = normalize_apostrophes(&self.form);
        self.lemma = normalize_apostrophes(&self.lemma);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub tokens: Vec<TaggedToken>,
}

impl Sentence {
    /// Build a sentence, checking the token invariants.
    pub fn new(text: impl Into<String>, tokens: Vec<TaggedToken>) -> Result<Self> {
        let sentence = Sentence {
            text: text.into(),
            tokens,
        };
        sentence.validate()?;
        Ok(sentence)
    }

    /// A sentence whose text is the space-joined token forms.
    pub fn from_tokens(tokens: Vec<TaggedToken>) -> Result<Self> {
        let text = tokens
            .iter()
            .map(|t| t.form.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        Sentence::new(text, tokens)
    }

    pub fn empty() -> Self {
        Sentence {
            text: String::new(),
            tokens: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.tokens.len();
        for (i, t) in self.tokens.iter().enumerate() {
            if t.form.is_empty() {
                return Err(Error::Value(format!("token {i} has an empty form")));
            }
            if t.head >= n {
                return Err(Error::Value(format!(
                    "token {i} ({}) has head {} outside a sentence of {n} tokens",
                    t.form, t.head
                )));
            }
        }
        if !self.forms_align_with_text() {
            return Err(Error::Value(format!(
                "token forms do not occur in order in the text `{}`",
                self.text
            )));
        }
        Ok(())
    }

    /// Every token form occurs in `text`, in order, ignoring whitespace
    /// placement.
    pub fn forms_align_with_text(&self) -> bool {
        let mut rest = self.text.as_str();
        for t in &self.tokens {
            match rest.find(t.form.as_str()) {
                Some(at) => rest = &rest[at + t.form.len()..],
                None => return false,
            }
        }
        true
    }

    /// Indices of `anchor` and all of its dependents, in sentence order.
    ///
    /// Malformed head chains (cycles not passing through a root) are cut off
    /// after `len` steps.
    pub fn subtree(&self, anchor: usize) -> Vec<usize> {
        let n = self.tokens.len();
        (0..n)
            .filter(|&i| {
                let mut cur = i;
                for _ in 0..=n {
                    if cur == anchor {
                        return true;
                    }
                    let head = self.tokens[cur].head;
                    if head == cur {
                        return false;
                    }
                    cur = head;
                }
                false
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentencePair {
    pub essay_id: String,
    pub index: usize,
    pub original: Sentence,
    pub corrected: Sentence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Essay {
    pub essay_id: String,
    pub cefr: Band,
    pub prompt_id: Option<String>,
    pub pairs: Vec<SentencePair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanDoStatement {
    pub egp_id: u32,
    pub statement: String,
    pub supercategory: String,
    pub subcategory: String,
    pub guideword: String,
    pub level: Level,
    pub examples: Vec<String>,
    pub lexical: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptAnnotation {
    pub essay_id: String,
    pub index: usize,
    pub egp_id: u32,
    pub y_o: u8,
    pub y_c: u8,
}

/// Lookup of statements by id.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    statements: Vec<CanDoStatement>,
    by_id: HashMap<u32, usize>,
}

impl Catalog {
    pub fn new(statements: Vec<CanDoStatement>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(statements.len());
        for (i, s) in statements.iter().enumerate() {
            if by_id.insert(s.egp_id, i).is_some() {
                return Err(Error::DuplicateId(s.egp_id));
            }
        }
        Ok(Catalog { statements, by_id })
    }

    pub fn get(&self, egp_id: u32) -> Option<&CanDoStatement> {
        self.by_id.get(&egp_id).map(|&i| &self.statements[i])
    }

    pub fn level(&self, egp_id: u32) -> Result<Level> {
        self.get(egp_id)
            .map(|s| s.level)
            .ok_or(Error::UnknownStatement(egp_id))
    }

    pub fn statements(&self) -> &[CanDoStatement] {
        &self.statements
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }
}

// ---------------------------------------------------------------------------
// EGP catalog

pub const CATALOG_COLUMNS: [&str; 8] = [
    "egp_id",
    "level",
    "supercategory",
    "subcategory",
    "guideword",
    "statement",
    "examples",
    "lexical",
];

pub const EXAMPLE_SEPARATOR: &str = "||";

pub fn load_egp_catalog(path: impl AsRef<Path>) -> Result<Vec<CanDoStatement>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_egp_catalog(file)
}

pub fn read_egp_catalog<R: Read>(reader: R) -> Result<Vec<CanDoStatement>> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(false)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut col = HashMap::new();
    for name in CATALOG_COLUMNS {
        let idx = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
        col.insert(name, idx);
    }

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        // Header is row 1.
        let row = i + 2;
        let record = record?;
        let field = |name: &str| record.get(col[name]).unwrap_or("").trim();

        let egp_id: u32 = field("egp_id").parse().map_err(|_| Error::RowValue {
            row,
            message: format!("egp_id `{}` is not an integer", field("egp_id")),
        })?;
        let level: Level = field("level").parse().map_err(|_| Error::RowValue {
            row,
            message: format!("level `{}` is not one of A1..C2", field("level")),
        })?;
        let lexical = match field("lexical").to_ascii_lowercase().as_str() {
            "true" => true,
            "false" => false,
            other => {
                return Err(Error::RowValue {
                    row,
                    message: format!("lexical must be true/false, got `{other}`"),
                })
            }
        };
        if !seen.insert(egp_id) {
            return Err(Error::DuplicateId(egp_id));
        }
        let examples = field("examples")
            .split(EXAMPLE_SEPARATOR)
            .map(|e| normalize_apostrophes(e.trim()))
            .filter(|e| !e.is_empty())
            .collect();
        out.push(CanDoStatement {
            egp_id,
            statement: normalize_apostrophes(field("statement")),
            supercategory: field("supercategory").to_string(),
            subcategory: field("subcategory").to_string(),
            guideword: field("guideword").to_string(),
            level,
            examples,
            lexical,
        });
    }
    Ok(out)
}

pub fn write_egp_catalog<W: Write>(writer: W, statements: &[CanDoStatement]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(CATALOG_COLUMNS)?;
    for s in statements {
        wtr.write_record([
            s.egp_id.to_string(),
            s.level.to_string(),
            s.supercategory.clone(),
            s.subcategory.clone(),
            s.guideword.clone(),
            s.statement.clone(),
            s.examples.join(EXAMPLE_SEPARATOR),
            s.lexical.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<catalog writer>", e))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// CoNLL-U

/// A sentence block from a CoNLL-U document with its `sent_id`, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct ConlluSentence {
    pub sent_id: Option<String>,
    pub sentence: Sentence,
}

pub fn parse_conllu(text: &str) -> Result<Vec<Sentence>> {
    Ok(parse_conllu_blocks(text)?
        .into_iter()
        .map(|b| b.sentence)
        .collect())
}

/// Parse a CoNLL-U document keeping `# sent_id` metadata.
///
/// Multiword-token ranges (`3-4`) and empty nodes (`5.1`) are skipped.
pub fn parse_conllu_blocks(text: &str) -> Result<Vec<ConlluSentence>> {
    struct Pending {
        sent_id: Option<String>,
        text: Option<String>,
        // (1-based id, token with 1-based head still in `head`), start line
        rows: Vec<(usize, TaggedToken, usize)>,
        start: usize,
    }

    fn finish(p: Pending, out: &mut Vec<ConlluSentence>) -> Result<()> {
        if p.rows.is_empty() {
            return Ok(());
        }
        let n = p.rows.len();
        let mut tokens = Vec::with_capacity(n);
        for (pos, (id, mut tok, line)) in p.rows.into_iter().enumerate() {
            if id != pos + 1 {
                return Err(Error::Parse {
                    line,
                    message: format!("token id {id} out of sequence (expected {})", pos + 1),
                });
            }
            tok.head = match tok.head {
                0 => pos,
                h if h <= n => h - 1,
                h => {
                    return Err(Error::Parse {
                        line,
                        message: format!("HEAD {h} exceeds sentence length {n}"),
                    })
                }
            };
            tokens.push(tok);
        }
        let text = p.text.unwrap_or_else(|| {
            tokens
                .iter()
                .map(|t: &TaggedToken| t.form.as_str())
                .collect::<Vec<_>>()
                .join(" ")
        });
        let sentence = Sentence::new(text, tokens).map_err(|e| Error::Parse {
            line: p.start,
            message: e.to_string(),
        })?;
        out.push(ConlluSentence {
            sent_id: p.sent_id,
            sentence,
        });
        Ok(())
    }

    let new_pending = |start| Pending {
        sent_id: None,
        text: None,
        rows: Vec::new(),
        start,
    };

    let mut out = Vec::new();
    let mut cur = new_pending(1);
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            let done = std::mem::replace(&mut cur, new_pending(line_no + 1));
            finish(done, &mut out)?;
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                match key.trim() {
                    "sent_id" => cur.sent_id = Some(value.trim().to_string()),
                    "text" => cur.text = Some(normalize_apostrophes(value.trim())),
                    _ => {}
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let id: usize = cols[0].parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("ID `{}` is not numeric", cols[0]),
        })?;
        let head: usize = cols[6].parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("HEAD `{}` is not numeric", cols[6]),
        })?;
        let field = |s: &str| {
            if s == "_" {
                String::new()
            } else {
                s.to_string()
            }
        };
        let token = TaggedToken {
            form: cols[1].to_string(),
            lemma: field(cols[2]),
            upos: field(cols[3]),
            xpos: field(cols[4]),
            dep: field(cols[7]),
            head,
        }
        .normalized();
        if cur.rows.is_empty() {
            cur.start = line_no;
        }
        cur.rows.push((id, token, line_no));
    }
    finish(cur, &mut out)?;
    Ok(out)
}

/// Render sentences as CoNLL-U (heads converted back to 1-based).
pub fn write_conllu(sentences: &[ConlluSentence]) -> String {
    let mut out = String::new();
    let or_blank = |s: &str| {
        if s.is_empty() {
            "_".to_string()
        } else {
            s.to_string()
        }
    };
    for s in sentences {
        if let Some(id) = &s.sent_id {
            out.push_str(&format!("# sent_id = {id}\n"));
        }
        out.push_str(&format!("# text = {}\n", s.sentence.text));
        for (i, t) in s.sentence.tokens.iter().enumerate() {
            let head = if t.head == i { 0 } else { t.head + 1 };
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t_\t{}\t{}\t_\t_\n",
                i + 1,
                t.form,
                or_blank(&t.lemma),
                or_blank(&t.upos),
                or_blank(&t.xpos),
                head,
                or_blank(&t.dep)
            ));
        }
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Sentence pairs (JSON lines)

#[derive(Debug, Deserialize)]
struct PairRecord {
    essay_id: String,
    index: usize,
    original: Option<SideRecord>,
    corrected: Option<SideRecord>,
}

#[derive(Debug, Deserialize)]
struct SideRecord {
    text: String,
    #[serde(default)]
    tokens: Option<Vec<TaggedToken>>,
    #[serde(default)]
    conllu_ref: Option<ConlluRef>,
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq, Eq, Hash)]
pub struct ConlluRef {
    pub file: String,
    pub sent_id: String,
}

/// Load JSON-lines sentence pairs. `conllu_ref` sidecar paths are resolved
/// relative to the directory of `path`.
pub fn load_sentence_pairs(path: impl AsRef<Path>) -> Result<Vec<SentencePair>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    read_sentence_pairs(BufReader::new(file), &base)
}

pub fn read_sentence_pairs<R: BufRead>(reader: R, base_dir: &Path) -> Result<Vec<SentencePair>> {
    let mut sidecars: HashMap<PathBuf, HashMap<String, Sentence>> = HashMap::new();
    let mut seen = HashSet::new();
    let mut out = Vec::new();

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io("<sentence pairs>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PairRecord = serde_json::from_str(&line).map_err(|e| Error::Record {
            line: line_no,
            message: e.to_string(),
        })?;
        let original = record.original.ok_or_else(|| Error::Record {
            line: line_no,
            message: "missing `original` side".into(),
        })?;
        let corrected = record.corrected.ok_or_else(|| Error::Record {
            line: line_no,
            message: "missing `corrected` side".into(),
        })?;
        if !seen.insert((record.essay_id.clone(), record.index)) {
            return Err(Error::Record {
                line: line_no,
                message: format!("duplicate pair ({}, {})", record.essay_id, record.index),
            });
        }
        let original = resolve_side(original, base_dir, &mut sidecars, line_no)?;
        let corrected = resolve_side(corrected, base_dir, &mut sidecars, line_no)?;
        out.push(SentencePair {
            essay_id: record.essay_id,
            index: record.index,
            original,
            corrected,
        });
    }
    Ok(out)
}

fn resolve_side(
    side: SideRecord,
    base_dir: &Path,
    sidecars: &mut HashMap<PathBuf, HashMap<String, Sentence>>,
    line: usize,
) -> Result<Sentence> {
    let text = normalize_apostrophes(&side.text);
    if let Some(tokens) = side.tokens {
        let tokens = tokens.into_iter().map(TaggedToken::normalized).collect();
        return Sentence::new(text, tokens).map_err(|e| Error::Record {
            line,
            message: e.to_string(),
        });
    }
    let Some(reference) = side.conllu_ref else {
        return Err(Error::Record {
            line,
            message: "side has neither `tokens` nor `conllu_ref`".into(),
        });
    };
    let file = base_dir.join(&reference.file);
    if !sidecars.contains_key(&file) {
        let content = fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
        let blocks = parse_conllu_blocks(&content)?;
        let map = blocks
            .into_iter()
            .filter_map(|b| b.sent_id.map(|id| (id, b.sentence)))
            .collect();
        sidecars.insert(file.clone(), map);
    }
    let sentence = sidecars[&file].get(&reference.sent_id).ok_or_else(|| {
        Error::io(
            &file,
            std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("sent_id `{}` not found", reference.sent_id),
            ),
        )
    })?;
    let mut sentence = sentence.clone();
    sentence.text = text;
    sentence.validate().map_err(|e| Error::Record {
        line,
        message: e.to_string(),
    })?;
    Ok(sentence)
}

/// Write pairs as JSON lines with inline tokens.
pub fn write_sentence_pairs<W: Write>(mut writer: W, pairs: &[SentencePair]) -> Result<()> {
    for p in pairs {
        serde_json::to_writer(&mut writer, p)?;
        writer
            .write_all(b"\n")
            .map_err(|e| Error::io("<sentence pairs writer>", e))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Essay metadata and grouping

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EssayMeta {
    pub essay_id: String,
    pub cefr: Band,
    #[serde(default, deserialize_with = "empty_as_none")]
    pub prompt_id: Option<String>,
}

fn empty_as_none<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    let s: Option<String> = Option::deserialize(d)?;
    Ok(s.filter(|s| !s.trim().is_empty()))
}

pub fn load_essay_meta(path: impl AsRef<Path>) -> Result<Vec<EssayMeta>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_essay_meta(file)
}

pub fn read_essay_meta<R: Read>(reader: R) -> Result<Vec<EssayMeta>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    for name in ["essay_id", "cefr"] {
        if !headers.iter().any(|h| h.trim() == name) {
            return Err(Error::MissingColumn(name.into()));
        }
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<EssayMeta>().enumerate() {
        out.push(rec.map_err(|e| Error::RowValue {
            row: i + 2,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Partition pairs by essay, in order of first appearance, with each essay's
/// pairs sorted by sentence index.
pub fn group_into_essays(pairs: Vec<SentencePair>, meta: &[EssayMeta]) -> Result<Vec<Essay>> {
    let meta: HashMap<&str, &EssayMeta> = meta.iter().map(|m| (m.essay_id.as_str(), m)).collect();
    let missing: Vec<String> = pairs
        .iter()
        .map(|p| p.essay_id.as_str())
        .filter(|id| !meta.contains_key(id))
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .map(str::to_string)
        .collect();
    if !missing.is_empty() {
        return Err(Error::Join(missing));
    }

    let mut order: Vec<String> = Vec::new();
    let mut grouped: HashMap<String, Vec<SentencePair>> = HashMap::new();
    for p in pairs {
        if !grouped.contains_key(&p.essay_id) {
            order.push(p.essay_id.clone());
        }
        grouped.entry(p.essay_id.clone()).or_default().push(p);
    }
    Ok(order
        .into_iter()
        .map(|id| {
            let mut pairs = grouped.remove(&id).unwrap_or_default();
            pairs.sort_by_key(|p| p.index);
            let m = meta[id.as_str()];
            Essay {
                essay_id: id,
                cefr: m.cefr,
                prompt_id: m.prompt_id.clone(),
                pairs,
            }
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Attempt annotations

pub fn load_annotations(path: impl AsRef<Path>) -> Result<Vec<AttemptAnnotation>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_annotations(BufReader::new(file))
}

pub fn read_annotations<R: BufRead>(reader: R) -> Result<Vec<AttemptAnnotation>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<annotations>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let a: AttemptAnnotation = serde_json::from_str(&line).map_err(|e| Error::Record {
            line: i + 1,
            message: e.to_string(),
        })?;
        if a.y_o > 1 || a.y_c > 1 {
            return Err(Error::Record {
                line: i + 1,
                message: format!("labels must be 0 or 1, got y_o={} y_c={}", a.y_o, a.y_c),
            });
        }
        out.push(a);
    }
    Ok(out)
}

pub fn write_annotations<W: Write>(mut writer: W, annotations: &[AttemptAnnotation]) -> Result<()> {
    for a in annotations {
        serde_json::to_writer(&mut writer, a)?;
        writer
            .write_all(b"\n")
            .map_err(|e| Error::io("<annotations writer>", e))?;
    }
    Ok(())
}

/// Index annotations by (essay_id, index, egp_id).
pub fn index_annotations(
    annotations: &[AttemptAnnotation],
) -> BTreeMap<(String, usize, u32), (u8, u8)> {
    annotations
        .iter()
        .map(|a| ((a.essay_id.clone(), a.index, a.egp_id), (a.y_o, a.y_c)))
        .collect()
}
