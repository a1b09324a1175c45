//! Detection-quality metrics.
//!
//! Probabilistic systems are evaluated over every pair of thresholds
//! (τ_o, τ_c) drawn from the observed probabilities plus a sentinel above
//! the maximum. With inclusive comparisons that finite grid reaches every
//! achievable labelling. The resulting scatter is reduced to the maximum
//! precision at each exact recall value.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::attempts::{class_at, one_vs_rest, AttemptClass, Task};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn confusion(pred: &[bool], gold: &[bool]) -> Result<Confusion> {
    if pred.len() != gold.len() {
        return Err(Error::Value(format!(
            "prediction/gold length mismatch: {} vs {}",
            pred.len(),
            gold.len()
        )));
    }
    let mut c = Confusion::default();
    for (&p, &g) in pred.iter().zip(gold) {
        match (p, g) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// `(precision, recall)`; `None` where the denominator is zero.
pub fn precision_recall(c: &Confusion) -> (Option<f64>, Option<f64>) {
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    (ratio(c.tp, c.tp + c.fp), ratio(c.tp, c.tp + c.fn_))
}

/// F-beta score; zero when both precision and recall are zero.
pub fn f_beta(p: f64, r: f64, beta: f64) -> Result<f64> {
    if !beta.is_finite() || beta <= 0.0 {
        return Err(Error::Value(format!("beta must be positive, got {beta}")));
    }
    let b2 = beta * beta;
    if p == 0.0 && r == 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 + b2) * p * r / (b2 * p + r))
}

pub fn f1(p: f64, r: f64) -> f64 {
    f_beta(p, r, 1.0).expect("beta = 1")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrPoint {
    pub tau_o: f64,
    pub tau_c: f64,
    pub precision: Option<f64>,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Envelope {
    /// `(recall, max precision)`, recall strictly increasing.
    pub points: Vec<(f64, f64)>,
}

/// Candidate thresholds: sorted distinct values plus a sentinel above the
/// maximum (max + 1).
pub fn candidate_thresholds(values: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    let sentinel = v.last().copied().unwrap_or(0.0) + 1.0;
    v.push(sentinel);
    v
}

/// Precision–recall point for every candidate threshold pair, ordered by
/// τ_o then τ_c.
pub fn pr_scatter(
    p_o: &[f64],
    p_c: &[f64],
    gold: &[AttemptClass],
    task: Task,
) -> Result<Vec<PrPoint>> {
    if p_o.len() != p_c.len() || p_o.len() != gold.len() {
        return Err(Error::Value(format!(
            "length mismatch: p_o={}, p_c={}, gold={}",
            p_o.len(),
            p_c.len(),
            gold.len()
        )));
    }
    for &p in p_o.iter().chain(p_c) {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Value(format!("probability {p} outside [0, 1]")));
        }
    }
    let gold: Vec<bool> = gold.iter().map(|&c| one_vs_rest(c, task)).collect();
    if !gold.iter().any(|&g| g) {
        return Err(Error::Undefined(format!(
            "no gold positives for the {task} task; recall is undefined"
        )));
    }
    let cand_o = candidate_thresholds(p_o);
    let cand_c = candidate_thresholds(p_c);

    let points = cand_o
        .par_iter()
        .flat_map_iter(|&tau_o| {
            let gold = &gold;
            cand_c.iter().map(move |&tau_c| {
                let pred: Vec<bool> = p_o
                    .iter()
                    .zip(p_c)
                    .map(|(&o, &c)| one_vs_rest(class_at(o, c, tau_o, tau_c), task))
                    .collect();
                let conf = confusion(&pred, gold).expect("equal lengths");
                let (precision, recall) = precision_recall(&conf);
                PrPoint {
                    tau_o,
                    tau_c,
                    precision,
                    recall: recall.expect("gold positives exist"),
                }
            })
        })
        .collect();
    Ok(points)
}

/// Maximum defined precision at each exact recall value.
pub fn max_precision_envelope(points: &[PrPoint]) -> Result<Envelope> {
    if points.is_empty() {
        return Err(Error::Value("no precision-recall points".into()));
    }
    let mut best: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    for pt in points {
        let Some(p) = pt.precision else { continue };
        // Recall is non-negative, so the bit pattern orders like the value.
        let key = pt.recall.to_bits();
        let entry = best.entry(key).or_insert((pt.recall, p));
        if p > entry.1 {
            entry.1 = p;
        }
    }
    Ok(Envelope {
        points: best.into_values().collect(),
    })
}

/// Best F1 along the envelope.
pub fn best_f1(env: &Envelope) -> Result<f64> {
    env.points
        .iter()
        .map(|&(r, p)| f1(p, r))
        .reduce(f64::max)
        .ok_or_else(|| Error::Value("empty envelope".into()))
}

/// Non-increasing running maximum of the envelope from high recall to low;
/// a plotting aid, not the exact-recall envelope.
pub fn running_max_envelope(env: &Envelope) -> Vec<(f64, f64)> {
    let mut out = env.points.clone();
    let mut acc = f64::NEG_INFINITY;
    for pt in out.iter_mut().rev() {
        acc = acc.max(pt.1);
        pt.1 = acc;
    }
    out
}

pub fn cohen_kappa(a: &[bool], b: &[bool]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Value(format!(
            "rater length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Value("kappa needs at least one item".into()));
    }
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64;
    let a1 = a.iter().filter(|&&x| x).count() as f64 / n;
    let b1 = b.iter().filter(|&&x| x).count() as f64 / n;
    let p_obs = agree / n;
    let p_exp = a1 * b1 + (1.0 - a1) * (1.0 - b1);
    if p_exp == 1.0 {
        // Both raters constant on the same value.
        return Ok(1.0);
    }
    Ok((p_obs - p_exp) / (1.0 - p_exp))
}

pub fn write_scatter_csv<W: Write>(writer: W, points: &[PrPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["tau_o", "tau_c", "precision", "recall"])?;
    for p in points {
        w.write_record([
            p.tau_o.to_string(),
            p.tau_c.to_string(),
            p.precision.map(|v| v.to_string()).unwrap_or_default(),
            p.recall.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<scatter csv>", e))?;
    Ok(())
}

pub fn write_envelope_csv<W: Write>(writer: W, env: &Envelope) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["recall", "max_precision"])?;
    for (r, p) in &env.points {
        w.write_record([r.to_string(), p.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<envelope csv>", e))?;
    Ok(())
}
