use std::collections::BTreeMap;

use egp_core::corpus::{load_sentence_pairs, Catalog, Sentence, SentencePair};
use egp_core::llm_client::{LlmClient, PromptContext};
use egp_core::ruleset::{
    builtin_detectors, builtin_filters, evaluate_rule, load_rule_file, Rule, RuleMode,
};
use log::{debug, info};
use rayon::prelude::*;

use super::{listing, load_catalog, out_path};
use crate::config::{Engine, RunConfig};
use crate::detections::{self, Detection};
use crate::failure::{Context, Failure};

pub fn detect(cfg: &RunConfig) -> Result<(), Failure> {
    let catalog = load_catalog(cfg)?;
    let corpus = cfg.corpus()?;
    let pairs =
        load_sentence_pairs(corpus).context(format!("loading corpus {}", corpus.display()))?;
    let (detectors, filters) = rule_sets(cfg, &catalog)?;

    let rows = match cfg.engine() {
        Engine::Rules => run_rules(&pairs, &detectors),
        Engine::Llm => run_llm(cfg, &catalog, &pairs, None)?,
        Engine::RulesThenLlm => run_llm(cfg, &catalog, &pairs, Some(&filters))?,
    };
    let path = out_path(cfg, detections::FILE_NAME)?;
    detections::write(&path, &rows)?;
    info!("wrote {} detections to {}", rows.len(), path.display());
    Ok(())
}

type RulesById = BTreeMap<u32, Rule>;

/// Built-in rules overridden by the user's rule files, keyed by EGP id:
/// (detectors, filters).
fn rule_sets(cfg: &RunConfig, catalog: &Catalog) -> Result<(RulesById, RulesById), Failure> {
    let mut detectors = BTreeMap::new();
    let mut filters = BTreeMap::new();
    for r in builtin_detectors() {
        if catalog.get(r.egp_id).is_some() {
            detectors.insert(r.egp_id, r);
        } else {
            debug!("built-in detector {} skipped: not in the catalog", r.egp_id);
        }
    }
    for r in builtin_filters() {
        if catalog.get(r.egp_id).is_some() {
            filters.insert(r.egp_id, r);
        }
    }
    for path in &cfg.rules {
        let rules = load_rule_file(path).context(format!("loading rules {}", path.display()))?;
        for r in rules {
            if catalog.get(r.egp_id).is_none() {
                return Err(Failure::input(format!(
                    "{}: rule for EGP {} which is not in the catalog",
                    path.display(),
                    r.egp_id
                )));
            }
            match r.mode {
                RuleMode::Detector => detectors.insert(r.egp_id, r),
                RuleMode::Filter => filters.insert(r.egp_id, r),
            };
        }
    }
    Ok((detectors, filters))
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn run_rules(pairs: &[SentencePair], detectors: &RulesById) -> Vec<Detection> {
    pairs
        .par_iter()
        .flat_map_iter(|pair| {
            detectors.values().map(move |rule| Detection {
                essay_id: pair.essay_id.clone(),
                index: pair.index,
                egp_id: rule.egp_id,
                p_o: indicator(evaluate_rule(rule, &pair.original).matched),
                p_c: indicator(evaluate_rule(rule, &pair.corrected).matched),
            })
        })
        .collect()
}

/// Query the LLM for every statement and side. With `filters`, a side whose
/// filter does not match is fixed to 0 without a query.
fn run_llm(
    cfg: &RunConfig,
    catalog: &Catalog,
    pairs: &[SentencePair],
    filters: Option<&RulesById>,
) -> Result<Vec<Detection>, Failure> {
    let client = LlmClient::new(cfg.llm_config()?)?;
    let mut rows = Vec::with_capacity(pairs.len() * catalog.len());
    let mut ctxs = Vec::new();
    // (row, is_original) for each context.
    let mut slots = Vec::new();
    for pair in pairs {
        for st in catalog.statements() {
            let filter = filters.and_then(|f| f.get(&st.egp_id));
            let wanted = |s: &Sentence| {
                !s.tokens.is_empty() && filter.is_none_or(|r| evaluate_rule(r, s).matched)
            };
            let row = rows.len();
            for (side, sentence) in [(true, &pair.original), (false, &pair.corrected)] {
                if wanted(sentence) {
                    ctxs.push(PromptContext {
                        statement: st,
                        sentence,
                    });
                    slots.push((row, side));
                }
            }
            rows.push(Detection {
                essay_id: pair.essay_id.clone(),
                index: pair.index,
                egp_id: st.egp_id,
                p_o: 0.0,
                p_c: 0.0,
            });
        }
    }
    info!(
        "{} LLM queries for {} sentence pairs and {} statements",
        ctxs.len(),
        pairs.len(),
        catalog.len()
    );

    let report = client.classify_batch(&ctxs);
    let errors = report.errors();
    if !errors.is_empty() {
        let external = errors.iter().any(|(_, e)| e.is_external());
        let (i, first) = errors[0];
        let (row, _) = slots[i];
        let d = &rows[row];
        let msg = format!(
            "{} of {} LLM queries failed; first at essay {} sentence {} EGP {}: {first}",
            errors.len(),
            ctxs.len(),
            d.essay_id,
            d.index,
            d.egp_id
        );
        return Err(if external {
            Failure::External(msg)
        } else {
            Failure::Input(msg)
        });
    }
    for ((row, side), p) in slots.iter().zip(report.probabilities()) {
        let p = p.expect("complete batch");
        if *side {
            rows[*row].p_o = p;
        } else {
            rows[*row].p_c = p;
        }
    }
    info!("{} HTTP requests sent", client.requests_sent());
    let ids: Vec<u32> = catalog.statements().iter().map(|s| s.egp_id).collect();
    debug!("queried statements: {}", listing(ids.iter()));
    Ok(rows)
}
