//! Token-pattern rule engine.
//!
//! A [`Rule`] is an any-of over alternative clause groups; a group matches
//! when all of its clauses hold on the sentence. Clauses test tokens through
//! conjunctions of [`TokenPredicate`]s. Lexical predicates compare
//! case-folded, apostrophe-normalized forms; tag predicates compare tags
//! ASCII case-insensitively.
//!
//! Rules are written as JSON documents:
//!
//! ```json
//! {
//!   "schema": 1,
//!   "egp_id": 295,
//!   "mode": "detector",
//!   "clauses": [
//!     { "type": "sentence-contains",
//!       "predicate": { "kind": "form-in-set", "words": ["another"] } }
//!   ]
//! }
//! ```
//!
//! `any_of` (a list of clause lists) may be given instead of `clauses`.
//! Clause types are `token-match`, `sequence`, `follows-within`,
//! `sentence-contains` and `sentence-lacks`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{normalize_apostrophes, Sentence, TaggedToken};
use crate::error::{Error, Result};

pub const RULE_SCHEMA_VERSION: u32 = 1;
pub const MAX_PREDICATE_DEPTH: usize = 4;

/// Case-fold and normalize a word for lexical comparison.
pub fn fold(word: &str) -> String {
    normalize_apostrophes(word).to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TokenPredicate {
    FormInSet { words: BTreeSet<String> },
    LemmaInSet { words: BTreeSet<String> },
    UposIs { tag: String },
    XposIs { tag: String },
    DepIs { tag: String },
    Not { predicate: Box<TokenPredicate> },
}

impl TokenPredicate {
    pub fn form_in<I: IntoIterator<Item = S>, S: AsRef<str>>(words: I) -> Self {
        TokenPredicate::FormInSet {
            words: words.into_iter().map(|w| fold(w.as_ref())).collect(),
        }
    }

    pub fn lemma_in<I: IntoIterator<Item = S>, S: AsRef<str>>(words: I) -> Self {
        TokenPredicate::LemmaInSet {
            words: words.into_iter().map(|w| fold(w.as_ref())).collect(),
        }
    }

    pub fn upos(tag: &str) -> Self {
        TokenPredicate::UposIs { tag: tag.into() }
    }

    pub fn xpos(tag: &str) -> Self {
        TokenPredicate::XposIs { tag: tag.into() }
    }

    pub fn dep(tag: &str) -> Self {
        TokenPredicate::DepIs { tag: tag.into() }
    }

    pub fn negate(self) -> Self {
        TokenPredicate::Not {
            predicate: Box::new(self),
        }
    }

    pub fn matches(&self, token: &TaggedToken) -> bool {
        match self {
            TokenPredicate::FormInSet { words } => words.contains(&fold(&token.form)),
            TokenPredicate::LemmaInSet { words } => words.contains(&fold(&token.lemma)),
            TokenPredicate::UposIs { tag } => token.upos.eq_ignore_ascii_case(tag),
            TokenPredicate::XposIs { tag } => token.xpos.eq_ignore_ascii_case(tag),
            TokenPredicate::DepIs { tag } => token.dep.eq_ignore_ascii_case(tag),
            TokenPredicate::Not { predicate } => !predicate.matches(token),
        }
    }

    fn compile(self, depth: usize) -> Result<Self> {
        if depth > MAX_PREDICATE_DEPTH {
            return Err(Error::Compile(format!(
                "predicate nesting deeper than {MAX_PREDICATE_DEPTH}"
            )));
        }
        let check_words = |words: BTreeSet<String>| -> Result<BTreeSet<String>> {
            let folded: BTreeSet<String> = words
                .iter()
                .map(|w| fold(w.trim()))
                .filter(|w| !w.is_empty())
                .collect();
            if folded.is_empty() {
                return Err(Error::Compile("empty word set".into()));
            }
            Ok(folded)
        };
        let check_tag = |tag: String| -> Result<String> {
            let tag = tag.trim().to_string();
            if tag.is_empty() {
                return Err(Error::Compile("empty tag".into()));
            }
            Ok(tag)
        };
        Ok(match self {
            TokenPredicate::FormInSet { words } => TokenPredicate::FormInSet {
                words: check_words(words)?,
            },
            TokenPredicate::LemmaInSet { words } => TokenPredicate::LemmaInSet {
                words: check_words(words)?,
            },
            TokenPredicate::UposIs { tag } => TokenPredicate::UposIs {
                tag: check_tag(tag)?,
            },
            TokenPredicate::XposIs { tag } => TokenPredicate::XposIs {
                tag: check_tag(tag)?,
            },
            TokenPredicate::DepIs { tag } => TokenPredicate::DepIs {
                tag: check_tag(tag)?,
            },
            TokenPredicate::Not { predicate } => TokenPredicate::Not {
                predicate: Box::new(predicate.compile(depth + 1)?),
            },
        })
    }
}

/// A conjunction of predicates tested on a single token.
pub type TokenTest = Vec<TokenPredicate>;

fn test_matches(test: &[TokenPredicate], token: &TaggedToken) -> bool {
    test.iter().all(|p| p.matches(token))
}

fn compile_test(test: TokenTest, what: &str) -> Result<TokenTest> {
    if test.is_empty() {
        return Err(Error::Compile(format!("{what}: empty token test")));
    }
    test.into_iter().map(|p| p.compile(1)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// The second token comes after the first.
    #[default]
    After,
    /// The second token comes before the first.
    Before,
}

/// Tokens that must not appear within `window` tokens before a match.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecedenceGuard {
    pub token: TokenTest,
    pub window: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Clause {
    /// Some token satisfies every predicate.
    TokenMatch { token: TokenTest },
    /// Consecutive tokens spell out `words`.
    Sequence {
        words: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        not_preceded_by: Option<PrecedenceGuard>,
    },
    /// A token matching `first`, and a token matching `then` within `window`
    /// tokens in `direction` (anywhere in that direction when `window` is
    /// absent).
    FollowsWithin {
        first: TokenTest,
        then: TokenTest,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<usize>,
        #[serde(default)]
        direction: Direction,
    },
    /// Some token satisfies the predicate.
    SentenceContains { predicate: TokenPredicate },
    /// No token satisfies the predicate. With `within_subtree_of`, some token
    /// matching that test must exist whose dependency subtree has no match.
    SentenceLacks {
        predicate: TokenPredicate,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        within_subtree_of: Option<TokenTest>,
    },
}

impl Clause {
    fn compile(self) -> Result<Self> {
        Ok(match self {
            Clause::TokenMatch { token } => Clause::TokenMatch {
                token: compile_test(token, "token-match")?,
            },
            Clause::Sequence {
                words,
                not_preceded_by,
            } => {
                let words: Vec<String> = words.iter().map(|w| fold(w.trim())).collect();
                if words.is_empty() || words.iter().any(String::is_empty) {
                    return Err(Error::Compile("sequence: empty word".into()));
                }
                let not_preceded_by = match not_preceded_by {
                    Some(g) => {
                        if g.window == 0 {
                            return Err(Error::Compile("guard window must be >= 1".into()));
                        }
                        Some(PrecedenceGuard {
                            token: compile_test(g.token, "guard")?,
                            window: g.window,
                        })
                    }
                    None => None,
                };
                Clause::Sequence {
                    words,
                    not_preceded_by,
                }
            }
            Clause::FollowsWithin {
                first,
                then,
                window,
                direction,
            } => {
                if window == Some(0) {
                    return Err(Error::Compile("follows-within: window must be >= 1".into()));
                }
                Clause::FollowsWithin {
                    first: compile_test(first, "follows-within")?,
                    then: compile_test(then, "follows-within")?,
                    window,
                    direction,
                }
            }
            Clause::SentenceContains { predicate } => Clause::SentenceContains {
                predicate: predicate.compile(1)?,
            },
            Clause::SentenceLacks {
                predicate,
                within_subtree_of,
            } => Clause::SentenceLacks {
                predicate: predicate.compile(1)?,
                within_subtree_of: within_subtree_of
                    .map(|t| compile_test(t, "sentence-lacks"))
                    .transpose()?,
            },
        })
    }

    /// Spans satisfying the clause, or `None` when it fails.
    fn evaluate(&self, sentence: &Sentence) -> Option<Vec<(usize, usize)>> {
        let tokens = &sentence.tokens;
        match self {
            Clause::TokenMatch { token } => {
                let spans: Vec<_> = (0..tokens.len())
                    .filter(|&i| test_matches(token, &tokens[i]))
                    .map(|i| (i, i + 1))
                    .collect();
                non_empty(spans)
            }
            Clause::SentenceContains { predicate } => {
                let spans: Vec<_> = (0..tokens.len())
                    .filter(|&i| predicate.matches(&tokens[i]))
                    .map(|i| (i, i + 1))
                    .collect();
                non_empty(spans)
            }
            Clause::Sequence {
                words,
                not_preceded_by,
            } => {
                let n = words.len();
                if tokens.len() < n {
                    return None;
                }
                let spans: Vec<_> = (0..=tokens.len() - n)
                    .filter(|&start| {
                        words
                            .iter()
                            .zip(&tokens[start..start + n])
                            .all(|(w, t)| *w == fold(&t.form))
                    })
                    .filter(|&start| match not_preceded_by {
                        None => true,
                        Some(g) => !tokens[start.saturating_sub(g.window)..start]
                            .iter()
                            .any(|t| test_matches(&g.token, t)),
                    })
                    .map(|start| (start, start + n))
                    .collect();
                non_empty(spans)
            }
            Clause::FollowsWithin {
                first,
                then,
                window,
                direction,
            } => {
                let n = tokens.len();
                let mut spans = Vec::new();
                for a in (0..n).filter(|&a| test_matches(first, &tokens[a])) {
                    let range: Vec<usize> = match direction {
                        Direction::After => {
                            let end = window.map_or(n, |k| (a + 1 + k).min(n));
                            (a + 1..end).collect()
                        }
                        Direction::Before => {
                            let start = window.map_or(0, |k| a.saturating_sub(k));
                            (start..a).collect()
                        }
                    };
                    if let Some(b) = range.into_iter().find(|&b| test_matches(then, &tokens[b])) {
                        spans.push((a.min(b), a.max(b) + 1));
                    }
                }
                non_empty(spans)
            }
            Clause::SentenceLacks {
                predicate,
                within_subtree_of,
            } => match within_subtree_of {
                None => {
                    if tokens.iter().any(|t| predicate.matches(t)) {
                        None
                    } else {
                        Some(Vec::new())
                    }
                }
                Some(anchor) => {
                    let spans: Vec<_> = (0..tokens.len())
                        .filter(|&i| test_matches(anchor, &tokens[i]))
                        .filter(|&i| {
                            !sentence
                                .subtree(i)
                                .into_iter()
                                .any(|j| predicate.matches(&tokens[j]))
                        })
                        .map(|i| (i, i + 1))
                        .collect();
                    non_empty(spans)
                }
            },
        }
    }
}

fn non_empty(spans: Vec<(usize, usize)>) -> Option<Vec<(usize, usize)>> {
    if spans.is_empty() {
        None
    } else {
        Some(spans)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, Hash)]
#[serde(rename_all = "kebab-case")]
pub enum RuleMode {
    #[default]
    Detector,
    Filter,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rule {
    pub egp_id: u32,
    pub mode: RuleMode,
    /// Alternatives; the rule matches when every clause of some group holds.
    pub any_of: Vec<Vec<Clause>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RuleMatch {
    pub matched: bool,
    /// Token ranges `[start, end)` that satisfied the clauses of the first
    /// matching group, sorted and deduplicated.
    pub spans: Vec<(usize, usize)>,
}

impl Rule {
    /// Validate and normalize a rule built in code.
    pub fn new(egp_id: u32, mode: RuleMode, any_of: Vec<Vec<Clause>>) -> Result<Self> {
        if any_of.is_empty() || any_of.iter().any(Vec::is_empty) {
            return Err(Error::Compile(format!(
                "rule {egp_id}: every rule needs at least one clause per group"
            )));
        }
        let any_of = any_of
            .into_iter()
            .map(|group| {
                group
                    .into_iter()
                    .map(Clause::compile)
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| match e {
                Error::Compile(m) => Error::Compile(format!("rule {egp_id}: {m}")),
                other => other,
            })?;
        Ok(Rule {
            egp_id,
            mode,
            any_of,
        })
    }

    fn all_of(egp_id: u32, mode: RuleMode, clauses: Vec<Clause>) -> Self {
        Rule::new(egp_id, mode, vec![clauses]).expect("built-in rule is well formed")
    }

    fn alternatives(egp_id: u32, mode: RuleMode, groups: Vec<Vec<Clause>>) -> Self {
        Rule::new(egp_id, mode, groups).expect("built-in rule is well formed")
    }
}

pub fn evaluate_rule(rule: &Rule, sentence: &Sentence) -> RuleMatch {
    if sentence.is_empty() {
        return RuleMatch::default();
    }
    for group in &rule.any_of {
        let mut spans = Vec::new();
        let mut ok = true;
        for clause in group {
            match clause.evaluate(sentence) {
                Some(s) => spans.extend(s),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            spans.sort_unstable();
            spans.dedup();
            return RuleMatch {
                matched: true,
                spans,
            };
        }
    }
    RuleMatch::default()
}

/// Evaluate every rule on one sentence. Duplicate egp ids keep the last rule.
pub fn run_detectors(rules: &[Rule], sentence: &Sentence) -> BTreeMap<u32, bool> {
    let mut latest: BTreeMap<u32, &Rule> = BTreeMap::new();
    for r in rules {
        latest.insert(r.egp_id, r);
    }
    latest
        .into_iter()
        .map(|(id, r)| (id, evaluate_rule(r, sentence).matched))
        .collect()
}

// ---------------------------------------------------------------------------
// Rule files

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleDocument {
    schema: u32,
    egp_id: u32,
    #[serde(default)]
    mode: RuleMode,
    #[serde(default)]
    clauses: Option<Vec<Clause>>,
    #[serde(default)]
    any_of: Option<Vec<Vec<Clause>>>,
}

impl RuleDocument {
    fn into_rule(self) -> Result<Rule> {
        if self.schema != RULE_SCHEMA_VERSION {
            return Err(Error::Compile(format!(
                "unsupported rule schema {} (expected {RULE_SCHEMA_VERSION})",
                self.schema
            )));
        }
        let groups = match (self.clauses, self.any_of) {
            (Some(c), None) => vec![c],
            (None, Some(g)) => g,
            (Some(_), Some(_)) => {
                return Err(Error::Compile(
                    "give either `clauses` or `any_of`, not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Compile(format!("rule {}: no clauses", self.egp_id)))
            }
        };
        Rule::new(self.egp_id, self.mode, groups)
    }
}

#[derive(Serialize)]
struct RuleDocumentOut<'a> {
    schema: u32,
    egp_id: u32,
    mode: RuleMode,
    any_of: &'a [Vec<Clause>],
}

/// Compile one JSON rule document.
pub fn compile_rule(definition: &str) -> Result<Rule> {
    let doc: RuleDocument =
        serde_json::from_str(definition).map_err(|e| Error::Compile(e.to_string()))?;
    doc.into_rule()
}

/// Compile a document holding either one rule or an array of rules.
pub fn compile_rules(definition: &str) -> Result<Vec<Rule>> {
    let value: serde_json::Value =
        serde_json::from_str(definition).map_err(|e| Error::Compile(e.to_string()))?;
    let docs = match value {
        serde_json::Value::Array(items) => items,
        single => vec![single],
    };
    docs.into_iter()
        .map(|v| {
            serde_json::from_value::<RuleDocument>(v)
                .map_err(|e| Error::Compile(e.to_string()))?
                .into_rule()
        })
        .collect()
}

pub fn load_rule_file(path: impl AsRef<Path>) -> Result<Vec<Rule>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    compile_rules(&text)
}

/// Serialize a rule back to its document form.
pub fn rule_to_json(rule: &Rule) -> String {
    serde_json::to_string_pretty(&RuleDocumentOut {
        schema: RULE_SCHEMA_VERSION,
        egp_id: rule.egp_id,
        mode: rule.mode,
        any_of: &rule.any_of,
    })
    .expect("rule serializes")
}

// ---------------------------------------------------------------------------
// Built-in rules

/// Statements with a built-in detector and filter.
pub const BUILTIN_IDS: [u32; 12] = [19, 37, 209, 228, 242, 249, 266, 295, 367, 598, 708, 983];

const IRREGULAR_COMPARATIVES: [&str; 5] = ["better", "worse", "further", "farther", "elder"];
const RELATIVE_PRONOUNS: [&str; 4] = ["that", "who", "whom", "which"];
const TIME_CONJUNCTIONS: [&str; 10] = [
    "after", "before", "when", "while", "since", "as", "once", "until", "till", "whenever",
];
const CONDITIONAL_CONJUNCTIONS: [&str; 5] = ["if", "unless", "provided", "providing", "supposing"];

fn contains(p: TokenPredicate) -> Clause {
    Clause::SentenceContains { predicate: p }
}

fn token(test: TokenTest) -> Clause {
    Clause::TokenMatch { token: test }
}

fn seq(phrase: &str) -> Clause {
    Clause::Sequence {
        words: phrase.split_whitespace().map(str::to_string).collect(),
        not_preceded_by: None,
    }
}

fn groups_of_sequences(phrases: &[&str]) -> Vec<Vec<Clause>> {
    phrases.iter().map(|p| vec![seq(p)]).collect()
}

/// The built-in detector for a statement.
///
/// EGP 37 requires the adjective immediately before `enough`. EGP 228 looks
/// for relative pronouns only inside the subtree of the `relcl` token. EGP
/// 598 rejects `used to` when lemma `be` occurs in the two tokens before it.
/// EGP 242 uses the single-word list `after before when while since as once
/// until till whenever` (tagged SCONJ); its filter list differs slightly.
pub fn builtin_detector(egp_id: u32) -> Result<Rule> {
    use TokenPredicate as P;
    let mode = RuleMode::Detector;
    Ok(match egp_id {
        19 => Rule::all_of(
            19,
            mode,
            vec![token(vec![
                P::form_in(IRREGULAR_COMPARATIVES),
                P::upos("ADJ"),
                P::xpos("JJR"),
            ])],
        ),
        37 => Rule::all_of(
            37,
            mode,
            vec![Clause::FollowsWithin {
                first: vec![P::form_in(["enough"])],
                then: vec![P::upos("ADJ")],
                window: Some(1),
                direction: Direction::Before,
            }],
        ),
        209 => Rule::all_of(
            209,
            mode,
            vec![contains(P::lemma_in(["not"])), contains(P::form_in(["?"]))],
        ),
        228 => Rule::all_of(
            228,
            mode,
            vec![
                contains(P::dep("relcl")),
                Clause::SentenceLacks {
                    predicate: P::form_in(RELATIVE_PRONOUNS),
                    within_subtree_of: Some(vec![P::dep("relcl")]),
                },
            ],
        ),
        242 => {
            let mut groups = groups_of_sequences(&["as soon as", "by the time", "as long as"]);
            groups.push(vec![token(vec![
                P::form_in(TIME_CONJUNCTIONS),
                P::upos("SCONJ"),
            ])]);
            Rule::alternatives(242, mode, groups)
        }
        249 => {
            let mut groups = groups_of_sequences(&["so long as", "as long as", "in case"]);
            groups.push(vec![contains(P::form_in(CONDITIONAL_CONJUNCTIONS))]);
            Rule::alternatives(249, mode, groups)
        }
        266 => Rule::all_of(
            266,
            mode,
            vec![Clause::FollowsWithin {
                first: vec![P::form_in(["either"])],
                then: vec![P::form_in(["or"])],
                window: None,
                direction: Direction::After,
            }],
        ),
        295 => Rule::all_of(295, mode, vec![contains(P::form_in(["another"]))]),
        367 => would_future_in_past(mode),
        598 => {
            let mut groups = vec![vec![Clause::Sequence {
                words: vec!["used".into(), "to".into()],
                not_preceded_by: Some(PrecedenceGuard {
                    token: vec![P::lemma_in(["be"])],
                    window: 2,
                }),
            }]];
            groups.extend(groups_of_sequences(&[
                "did not use to",
                "did n't use to",
                "didn't use to",
            ]));
            Rule::alternatives(598, mode, groups)
        }
        708 => Rule::all_of(
            708,
            mode,
            vec![token(vec![P::form_in(["was", "were"]), P::dep("auxpass")])],
        ),
        983 => Rule::alternatives(
            983,
            mode,
            vec![
                vec![token(vec![P::form_in(["everything"]), P::dep("nsubj")])],
                vec![token(vec![P::form_in(["everything"]), P::dep("nsubjpass")])],
            ],
        ),
        other => return Err(Error::NotFound(other)),
    })
}

fn would_future_in_past(mode: RuleMode) -> Rule {
    use TokenPredicate as P;
    Rule::all_of(
        367,
        mode,
        vec![
            Clause::FollowsWithin {
                first: vec![P::lemma_in(["would"])],
                then: vec![P::xpos("VB")],
                window: Some(5),
                direction: Direction::After,
            },
            contains(P::xpos("VBD")),
        ],
    )
}

/// The broad, recall-oriented pre-filter for a statement. Every filter
/// matches whenever the corresponding detector does.
pub fn builtin_filter(egp_id: u32) -> Result<Rule> {
    use TokenPredicate as P;
    let mode = RuleMode::Filter;
    Ok(match egp_id {
        19 => Rule::all_of(
            19,
            mode,
            vec![contains(P::form_in([
                "better", "worse", "further", "farther", "elder", "eldest", "best", "worst",
                "furthest", "farthest", "more", "less", "least", "most",
            ]))],
        ),
        37 => Rule::all_of(37, mode, vec![contains(P::form_in(["enough"]))]),
        209 => Rule::all_of(209, mode, vec![contains(P::lemma_in(["not"]))]),
        228 => Rule::all_of(228, mode, vec![contains(P::dep("relcl"))]),
        242 => Rule::alternatives(
            242,
            mode,
            vec![
                vec![contains(P::form_in([
                    "after", "before", "when", "while", "as", "once", "since", "until", "till",
                    "whenever", "now", "long", "soon",
                ]))],
                // "by the time" is a detector phrase with no listed filter word.
                vec![seq("by the time")],
            ],
        ),
        249 => {
            let mut groups = groups_of_sequences(&["so long as", "as long as", "in case"]);
            groups.push(vec![contains(P::form_in(CONDITIONAL_CONJUNCTIONS))]);
            Rule::alternatives(249, mode, groups)
        }
        266 => Rule::all_of(266, mode, vec![contains(P::form_in(["either"]))]),
        295 => Rule::all_of(295, mode, vec![contains(P::form_in(["another"]))]),
        367 => would_future_in_past(mode),
        598 => {
            let mut groups = vec![vec![contains(P::form_in(["used"]))]];
            groups.extend(groups_of_sequences(&[
                "didn't use",
                "did n't use",
                "did not use",
            ]));
            Rule::alternatives(598, mode, groups)
        }
        708 => Rule::all_of(
            708,
            mode,
            vec![
                contains(P::dep("auxpass")),
                contains(P::form_in(["was", "were"])),
            ],
        ),
        983 => Rule::all_of(983, mode, vec![contains(P::form_in(["everything"]))]),
        other => return Err(Error::NotFound(other)),
    })
}

pub fn builtin_detectors() -> Vec<Rule> {
    BUILTIN_IDS
        .iter()
        .map(|&id| builtin_detector(id).expect("built-in id"))
        .collect()
}

pub fn builtin_filters() -> Vec<Rule> {
    BUILTIN_IDS
        .iter()
        .map(|&id| builtin_filter(id).expect("built-in id"))
        .collect()
}
