//! Essay-level proficiency scoring from detected construct attempts.
//!
//! Each essay gets one indicator per construct (a construct attempted in
//! several sentences counts once). The score is the mean CEFR weight of the
//! positive indicators, so it is undefined for essays without attempts.
//! Per-level thresholds are tuned by exhaustive grid search with k-fold
//! cross-validation against the essays' CEFR bands, maximising Spearman
//! correlation.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cefr::{Band, Level};
use crate::corpus::Catalog;
use crate::error::{Error, Result};

pub const DEFAULT_CANDIDATES: [f64; 5] = [0.70, 0.80, 0.90, 0.95, 0.99];
pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreMode {
    /// Construct present in the corrected sentence.
    General,
    /// Construct present in both the original and the corrected sentence.
    Successful,
}

impl ScoreMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreMode::General => "general",
            ScoreMode::Successful => "successful",
        }
    }
}

impl fmt::Display for ScoreMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScoreMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(ScoreMode::General),
            "successful" => Ok(ScoreMode::Successful),
            other => Err(Error::Value(format!("unknown scoring mode `{other}`"))),
        }
    }
}

/// What the score denominator counts in successful mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Denominator {
    /// Unique attempts of the same mode as the numerator.
    #[default]
    SameMode,
    /// Unique general attempts, whatever the numerator mode.
    General,
}

/// How fold correlations are combined during tuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FoldAggregation {
    #[default]
    MeanOfFolds,
    /// One correlation over all held-out scores.
    Pooled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelWeights([f64; 6]);

impl Default for LevelWeights {
    fn default() -> Self {
        LevelWeights([1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
    }
}

impl LevelWeights {
    pub fn new(weights: [f64; 6]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite()) || weights.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Value(format!(
                "level weights must be finite and strictly increasing: {weights:?}"
            )));
        }
        Ok(LevelWeights(weights))
    }

    pub fn weight(&self, level: Level) -> f64 {
        self.0[level.index()]
    }

    pub fn min(&self) -> f64 {
        self.0[0]
    }

    pub fn max(&self) -> f64 {
        self.0[5]
    }
}

/// One threshold per CEFR level, applied to both sides of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig([f64; 6]);

impl ThresholdConfig {
    pub fn new(thresholds: [f64; 6]) -> Result<Self> {
        if let Some(t) = thresholds.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::Value(format!("threshold {t} outside [0, 1]")));
        }
        Ok(ThresholdConfig(thresholds))
    }

    pub fn uniform(tau: f64) -> Result<Self> {
        ThresholdConfig::new([tau; 6])
    }

    pub fn get(&self, level: Level) -> f64 {
        self.0[level.index()]
    }

    pub fn values(&self) -> [f64; 6] {
        self.0
    }
}

impl fmt::Display for ThresholdConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = Level::ALL
            .iter()
            .map(|l| format!("{l}={}", self.get(*l)))
            .collect();
        f.write_str(&parts.join(","))
    }
}

/// A binary prediction for one construct on one sentence pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub index: usize,
    pub egp_id: u32,
    pub y_o: bool,
    pub y_c: bool,
}

/// Presence probabilities for one construct on one sentence pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbPrediction {
    pub index: usize,
    pub egp_id: u32,
    pub p_o: f64,
    pub p_c: f64,
}

/// Threshold probabilities per the level of each statement.
pub fn threshold_predictions(
    probs: &[ProbPrediction],
    catalog: &Catalog,
    thresholds: &ThresholdConfig,
) -> Result<Vec<Prediction>> {
    probs
        .iter()
        .map(|p| {
            let tau = thresholds.get(catalog.level(p.egp_id)?);
            Ok(Prediction {
                index: p.index,
                egp_id: p.egp_id,
                y_o: p.p_o >= tau,
                y_c: p.p_c >= tau,
            })
        })
        .collect()
}

/// Per-construct unique-attempt indicators for one essay.
pub fn unique_indicators(preds: &[Prediction], mode: ScoreMode) -> BTreeMap<u32, bool> {
    let mut out = BTreeMap::new();
    for p in preds {
        let hit = match mode {
            ScoreMode::Successful => p.y_o && p.y_c,
            ScoreMode::General => p.y_c,
        };
        *out.entry(p.egp_id).or_insert(false) |= hit;
    }
    out
}

/// Number of positive indicators at each level.
pub fn level_counts(indicators: &BTreeMap<u32, bool>, catalog: &Catalog) -> Result<[usize; 6]> {
    let mut counts = [0usize; 6];
    for (&id, &on) in indicators {
        let level = catalog.level(id)?;
        if on {
            counts[level.index()] += 1;
        }
    }
    Ok(counts)
}

/// Mean level weight of the positive indicators; `None` without attempts.
pub fn attempt_score(
    indicators: &BTreeMap<u32, bool>,
    catalog: &Catalog,
    weights: &LevelWeights,
) -> Result<Option<f64>> {
    let counts = level_counts(indicators, catalog)?;
    Ok(score_from_counts(&counts, &counts, weights))
}

/// Score whose denominator counts `denominator` indicators (for example the
/// general attempts while the numerator counts successful ones).
pub fn attempt_score_with_denominator(
    numerator: &BTreeMap<u32, bool>,
    denominator: &BTreeMap<u32, bool>,
    catalog: &Catalog,
    weights: &LevelWeights,
) -> Result<Option<f64>> {
    let num = level_counts(numerator, catalog)?;
    let den = level_counts(denominator, catalog)?;
    Ok(score_from_counts(&num, &den, weights))
}

fn score_from_counts(num: &[usize; 6], den: &[usize; 6], weights: &LevelWeights) -> Option<f64> {
    let total: usize = den.iter().sum();
    if total == 0 {
        return None;
    }
    let weighted: f64 = Level::ALL
        .iter()
        .map(|&l| weights.weight(l) * num[l.index()] as f64)
        .sum();
    Some(weighted / total as f64)
}

pub fn encode_cefr(label: &str) -> Result<f64> {
    Ok(label.parse::<Band>()?.encode())
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Value(format!(
            "correlation inputs differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Undefined(format!(
            "correlation needs at least 2 points, got {}",
            x.len()
        )));
    }
    Ok(())
}

/// Sample Pearson correlation.
pub fn pcc(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("correlation of a constant vector".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Fractional (1-based, tie-averaged) ranks.
pub fn fractional_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation (Pearson over fractional ranks).
pub fn src(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    pcc(&fractional_ranks(x), &fractional_ranks(y))
}

// ---------------------------------------------------------------------------
// Threshold tuning

/// Probabilities for one essay, the input to tuning.
#[derive(Debug, Clone, PartialEq)]
pub struct EssayProbabilities {
    pub essay_id: String,
    pub cefr: Band,
    pub predictions: Vec<ProbPrediction>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchOptions {
    pub candidates: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
    pub mode: ScoreMode,
    pub aggregation: FoldAggregation,
    pub denominator: Denominator,
    pub weights: LevelWeights,
}

impl Default for GridSearchOptions {
    fn default() -> Self {
        GridSearchOptions {
            candidates: DEFAULT_CANDIDATES.to_vec(),
            folds: DEFAULT_FOLDS,
            seed: 0,
            mode: ScoreMode::Successful,
            aggregation: FoldAggregation::MeanOfFolds,
            denominator: Denominator::SameMode,
            weights: LevelWeights::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuningReport {
    pub thresholds: ThresholdConfig,
    /// Objective of the chosen configuration.
    pub objective: f64,
    /// Held-out SRC of the chosen configuration per fold (`None` where it was
    /// undefined and counted as -1). A single entry in pooled mode.
    pub fold_src: Vec<Option<f64>>,
    pub configs_evaluated: usize,
    pub folds: Vec<Vec<String>>,
}

/// Per essay and construct: the strongest evidence for an attempt.
/// An indicator is on at threshold τ iff the strength reaches τ.
#[derive(Debug, Clone)]
struct EssayEvidence {
    encoded: f64,
    /// (level index, successful strength, general strength)
    constructs: Vec<(usize, f64, f64)>,
}

impl EssayEvidence {
    fn build(essay: &EssayProbabilities, catalog: &Catalog) -> Result<Self> {
        let mut per: BTreeMap<u32, (usize, f64, f64)> = BTreeMap::new();
        for p in &essay.predictions {
            let level = catalog.level(p.egp_id)?.index();
            let e = per
                .entry(p.egp_id)
                .or_insert((level, f64::NEG_INFINITY, f64::NEG_INFINITY));
            e.1 = e.1.max(p.p_o.min(p.p_c));
            e.2 = e.2.max(p.p_c);
        }
        Ok(EssayEvidence {
            encoded: essay.cefr.encode(),
            constructs: per.into_values().collect(),
        })
    }

    fn score(&self, thresholds: &[f64; 6], opts: &GridSearchOptions) -> Option<f64> {
        let mut num = [0usize; 6];
        let mut gen = [0usize; 6];
        for &(level, succ, general) in &self.constructs {
            let tau = thresholds[level];
            let strength = match opts.mode {
                ScoreMode::Successful => succ,
                ScoreMode::General => general,
            };
            if strength >= tau {
                num[level] += 1;
            }
            if general >= tau {
                gen[level] += 1;
            }
        }
        let den = match opts.denominator {
            Denominator::SameMode => &num,
            Denominator::General => &gen,
        };
        score_from_counts(&num, den, &opts.weights)
    }
}

/// Deterministic fold assignment: essays sorted by id, shuffled with `seed`,
/// then dealt round-robin into `k` folds. Returns essay positions per fold.
pub fn assign_folds(essay_ids: &[&str], k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..essay_ids.len()).collect();
    order.sort_by(|&a, &b| essay_ids[a].cmp(essay_ids[b]));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut folds = vec![Vec::new(); k];
    for (i, idx) in order.into_iter().enumerate() {
        folds[i % k].push(idx);
    }
    folds
}

/// Threshold vector for configuration number `index`; A1 is the most
/// significant digit, so increasing indices are lexicographically increasing
/// vectors when `candidates` is sorted.
fn config_at(index: usize, candidates: &[f64]) -> [f64; 6] {
    let base = candidates.len();
    let mut out = [0.0; 6];
    let mut rest = index;
    for slot in out.iter_mut().rev() {
        *slot = candidates[rest % base];
        rest /= base;
    }
    out
}

/// SRC between scores and encoded bands on a subset of essays; essays with
/// no attempts are skipped.
fn subset_src(
    evidence: &[EssayEvidence],
    members: &[usize],
    thresholds: &[f64; 6],
    opts: &GridSearchOptions,
) -> Option<f64> {
    let mut xs = Vec::with_capacity(members.len());
    let mut ys = Vec::with_capacity(members.len());
    for &i in members {
        if let Some(s) = evidence[i].score(thresholds, opts) {
            xs.push(s);
            ys.push(evidence[i].encoded);
        }
    }
    src(&xs, &ys).ok()
}

fn evaluate_config(
    evidence: &[EssayEvidence],
    folds: &[Vec<usize>],
    thresholds: &[f64; 6],
    opts: &GridSearchOptions,
) -> (f64, Vec<Option<f64>>) {
    match opts.aggregation {
        FoldAggregation::MeanOfFolds => {
            let per: Vec<Option<f64>> = folds
                .iter()
                .map(|f| subset_src(evidence, f, thresholds, opts))
                .collect();
            let mean = per.iter().map(|v| v.unwrap_or(-1.0)).sum::<f64>() / per.len() as f64;
            (mean, per)
        }
        FoldAggregation::Pooled => {
            let all: Vec<usize> = folds.iter().flatten().copied().collect();
            let v = subset_src(evidence, &all, thresholds, opts);
            (v.unwrap_or(-1.0), vec![v])
        }
    }
}

/// Exhaustive search over one threshold per level.
///
/// Every configuration is scored on each held-out fold; the configuration
/// with the best objective wins, ties going to the lexicographically smallest
/// threshold vector (A1 first).
pub fn grid_search(
    essays: &[EssayProbabilities],
    catalog: &Catalog,
    opts: &GridSearchOptions,
) -> Result<TuningReport> {
    let mut candidates = opts.candidates.clone();
    if candidates.is_empty() {
        return Err(Error::Value("no candidate thresholds".into()));
    }
    if candidates.iter().any(|c| !(0.0..=1.0).contains(c)) {
        return Err(Error::Value(format!(
            "candidate thresholds outside [0, 1]: {candidates:?}"
        )));
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    if opts.folds < 2 {
        return Err(Error::Value(format!(
            "need at least 2 folds, got {}",
            opts.folds
        )));
    }
    if essays.len() < opts.folds {
        return Err(Error::Value(format!(
            "{} essays cannot fill {} folds",
            essays.len(),
            opts.folds
        )));
    }

    let evidence = essays
        .iter()
        .map(|e| EssayEvidence::build(e, catalog))
        .collect::<Result<Vec<_>>>()?;
    let ids: Vec<&str> = essays.iter().map(|e| e.essay_id.as_str()).collect();
    let folds = assign_folds(&ids, opts.folds, opts.seed);

    let total = candidates.len().pow(6);
    let (best_idx, best_obj) = (0..total)
        .into_par_iter()
        .map(|i| {
            let t = config_at(i, &candidates);
            (i, evaluate_config(&evidence, &folds, &t, opts).0)
        })
        .reduce(
            || (usize::MAX, f64::NEG_INFINITY),
            |a, b| {
                if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        );

    let thresholds = config_at(best_idx, &candidates);
    let (objective, fold_src) = evaluate_config(&evidence, &folds, &thresholds, opts);
    debug_assert_eq!(objective, best_obj);
    for (f, v) in fold_src.iter().enumerate() {
        if v.is_none() {
            warn!("SRC undefined on fold {f} for the chosen thresholds; counted as -1");
        }
    }
    Ok(TuningReport {
        thresholds: ThresholdConfig::new(thresholds)?,
        objective,
        fold_src,
        configs_evaluated: total,
        folds: folds
            .iter()
            .map(|f| f.iter().map(|&i| essays[i].essay_id.clone()).collect())
            .collect(),
    })
}

/// Objective of one configuration under the same fold split as
/// [`grid_search`]; for auditing a tuning result.
pub fn evaluate_thresholds(
    essays: &[EssayProbabilities],
    catalog: &Catalog,
    thresholds: &ThresholdConfig,
    opts: &GridSearchOptions,
) -> Result<(f64, Vec<Option<f64>>)> {
    let evidence = essays
        .iter()
        .map(|e| EssayEvidence::build(e, catalog))
        .collect::<Result<Vec<_>>>()?;
    let ids: Vec<&str> = essays.iter().map(|e| e.essay_id.as_str()).collect();
    let folds = assign_folds(&ids, opts.folds, opts.seed);
    Ok(evaluate_config(
        &evidence,
        &folds,
        &thresholds.values(),
        opts,
    ))
}

// ---------------------------------------------------------------------------
// Score export

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EssayScore {
    pub essay_id: String,
    pub cefr: Band,
    pub score_general: Option<f64>,
    pub score_successful: Option<f64>,
    /// Unique general attempts.
    pub n_attempts: usize,
}

/// Score every essay in both modes from binary predictions.
pub fn score_essays(
    essays: &[(String, Band, Vec<Prediction>)],
    catalog: &Catalog,
    weights: &LevelWeights,
    denominator: Denominator,
) -> Result<Vec<EssayScore>> {
    essays
        .iter()
        .map(|(id, band, preds)| {
            let general = unique_indicators(preds, ScoreMode::General);
            let successful = unique_indicators(preds, ScoreMode::Successful);
            let score_general = attempt_score(&general, catalog, weights)?;
            let score_successful = match denominator {
                Denominator::SameMode => attempt_score(&successful, catalog, weights)?,
                Denominator::General => {
                    attempt_score_with_denominator(&successful, &general, catalog, weights)?
                }
            };
            Ok(EssayScore {
                essay_id: id.clone(),
                cefr: *band,
                score_general,
                score_successful,
                n_attempts: general.values().filter(|&&v| v).count(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub mode: ScoreMode,
    pub pcc: Option<f64>,
    pub src: Option<f64>,
    pub n_scored: usize,
    /// Essays left out because they had no attempts.
    pub n_excluded: usize,
}

/// PCC/SRC between scores and encoded bands, excluding zero-attempt essays.
pub fn correlate(scores: &[EssayScore], mode: ScoreMode) -> CorrelationReport {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in scores {
        let v = match mode {
            ScoreMode::General => s.score_general,
            ScoreMode::Successful => s.score_successful,
        };
        if let Some(v) = v {
            xs.push(v);
            ys.push(s.cefr.encode());
        }
    }
    CorrelationReport {
        mode,
        pcc: pcc(&xs, &ys).ok(),
        src: src(&xs, &ys).ok(),
        n_scored: xs.len(),
        n_excluded: scores.len() - xs.len(),
    }
}

pub fn write_scores_csv<W: Write>(writer: W, scores: &[EssayScore]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "essay_id",
        "cefr",
        "encoded_cefr",
        "score_general",
        "score_successful",
        "n_attempts",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for s in scores {
        w.write_record([
            s.essay_id.clone(),
            s.cefr.to_string(),
            s.cefr.encode().to_string(),
            opt(s.score_general),
            opt(s.score_successful),
            s.n_attempts.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<scores csv>", e))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Level distribution analyses

/// Level axis ordered from the top of the scale down.
pub const DESCENDING_LEVELS: [Level; 6] = [
    Level::C2,
    Level::C1,
    Level::B2,
    Level::B1,
    Level::A2,
    Level::A1,
];

/// Fraction of attempts at each level or higher, along C2..A1.
pub fn cumulative_curve(levels: &[Level]) -> Option<[f64; 6]> {
    if levels.is_empty() {
        return None;
    }
    let mut counts = [0usize; 6];
    for l in levels {
        counts[l.index()] += 1;
    }
    Some(cumulative_from_counts(&counts))
}

fn cumulative_from_counts(counts: &[usize; 6]) -> [f64; 6] {
    let total: usize = counts.iter().sum();
    let mut out = [0.0; 6];
    let mut acc = 0usize;
    for (slot, level) in out.iter_mut().zip(DESCENDING_LEVELS) {
        acc += counts[level.index()];
        *slot = acc as f64 / total as f64;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CumulativeRow {
    pub band: Band,
    pub n_essays: usize,
    pub n_attempts: usize,
    /// Along C2..A1; `None` when the group has no attempts.
    pub fractions: Option<[f64; 6]>,
}

/// Pool each band's unique attempts and report the cumulative share at each
/// level or above.
pub fn cumulative_level_distribution(essays: &[(Band, Vec<Level>)]) -> Vec<CumulativeRow> {
    let mut groups: BTreeMap<Band, (usize, [usize; 6])> = BTreeMap::new();
    for (band, levels) in essays {
        let g = groups.entry(*band).or_insert((0, [0; 6]));
        g.0 += 1;
        for l in levels {
            g.1[l.index()] += 1;
        }
    }
    groups
        .into_iter()
        .map(|(band, (n_essays, counts))| {
            let n_attempts = counts.iter().sum();
            CumulativeRow {
                band,
                n_essays,
                n_attempts,
                fractions: (n_attempts > 0).then(|| cumulative_from_counts(&counts)),
            }
        })
        .collect()
}

/// Area under a cumulative curve by the trapezoidal rule, unit spacing.
pub fn curve_auc(curve: &[f64; 6]) -> f64 {
    curve.windows(2).map(|w| (w[0] + w[1]) / 2.0).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EcdfRow {
    pub band: Band,
    /// (AUC value, fraction of the band's essays with AUC <= value)
    pub points: Vec<(f64, f64)>,
}

/// Per-essay AUCs (absent for essays without attempts) and the per-band
/// empirical CDF of the defined ones.
pub fn ecdf_auc(curves: &[(Band, Option<[f64; 6]>)]) -> (Vec<Option<f64>>, Vec<EcdfRow>) {
    let aucs: Vec<Option<f64>> = curves
        .iter()
        .map(|(_, c)| c.as_ref().map(curve_auc))
        .collect();
    let mut by_band: BTreeMap<Band, Vec<f64>> = BTreeMap::new();
    for ((band, _), auc) in curves.iter().zip(&aucs) {
        if let Some(a) = auc {
            by_band.entry(*band).or_default().push(*a);
        }
    }
    let rows = by_band
        .into_iter()
        .map(|(band, mut v)| {
            v.sort_by(f64::total_cmp);
            let n = v.len() as f64;
            let mut points: Vec<(f64, f64)> = Vec::new();
            for (i, &x) in v.iter().enumerate() {
                let frac = (i + 1) as f64 / n;
                match points.last_mut() {
                    Some(last) if last.0 == x => last.1 = frac,
                    _ => points.push((x, frac)),
                }
            }
            EcdfRow { band, points }
        })
        .collect();
    (aucs, rows)
}

pub fn write_cumulative_csv<W: Write>(writer: W, rows: &[CumulativeRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["band".to_string(), "n_essays".into(), "n_attempts".into()];
    header.extend(DESCENDING_LEVELS.iter().map(|l| format!("ge_{l}")));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.band.to_string(),
            r.n_essays.to_string(),
            r.n_attempts.to_string(),
        ];
        match r.fractions {
            Some(f) => rec.extend(f.iter().map(|v| v.to_string())),
            None => rec.extend(std::iter::repeat_n("absent".to_string(), 6)),
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<cumulative csv>", e))?;
    Ok(())
}

pub fn write_ecdf_csv<W: Write>(writer: W, rows: &[EcdfRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["band", "auc", "ecdf"])?;
    for r in rows {
        for (x, f) in &r.points {
            w.write_record([r.band.to_string(), x.to_string(), f.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io("<ecdf csv>", e))?;
    Ok(())
}

/// Levels of the positive indicators of one essay.
pub fn indicator_levels(indicators: &BTreeMap<u32, bool>, catalog: &Catalog) -> Result<Vec<Level>> {
    indicators
        .iter()
        .filter(|(_, &on)| on)
        .map(|(&id, _)| catalog.level(id))
        .collect()
}

/// Group flat (essay, prediction) rows by essay id, preserving first-seen order.
pub fn group_by_essay<T: Clone>(rows: &[(String, T)]) -> Vec<(String, Vec<T>)> {
    let mut order = Vec::new();
    let mut map: HashMap<&str, Vec<T>> = HashMap::new();
    for (id, v) in rows {
        if !map.contains_key(id.as_str()) {
            order.push(id.clone());
        }
        map.entry(id.as_str()).or_default().push(v.clone());
    }
    order
        .into_iter()
        .map(|id| {
            let v = map.remove(id.as_str()).unwrap_or_default();
            (id, v)
        })
        .collect()
}
