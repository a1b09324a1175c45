use egp_core::scoring::{
    correlate, grid_search, score_essays, threshold_predictions, write_scores_csv,
    EssayProbabilities, FoldAggregation, LevelWeights, ScoreMode, ThresholdConfig,
};
use log::info;
use serde::Serialize;

use super::{
    create, essays_with_predictions, load_catalog, load_detections, load_meta, out_path, write_json,
};
use crate::config::RunConfig;
use crate::failure::Failure;

#[derive(Serialize)]
struct CorrelationFile {
    thresholds: ThresholdConfig,
    denominator: egp_core::scoring::Denominator,
    general: egp_core::scoring::CorrelationReport,
    successful: egp_core::scoring::CorrelationReport,
}

pub fn score(cfg: &RunConfig) -> Result<(), Failure> {
    let mode = cfg.mode().score_mode()?;
    let catalog = load_catalog(cfg)?;
    let meta = load_meta(cfg)?;
    let rows = load_detections(cfg)?;
    let thresholds = cfg.thresholds()?;

    let essays = essays_with_predictions(&meta, &rows, &catalog)?
        .into_iter()
        .map(|(id, band, probs)| {
            Ok((
                id,
                band,
                threshold_predictions(&probs, &catalog, &thresholds)?,
            ))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let scores = score_essays(
        &essays,
        &catalog,
        &LevelWeights::default(),
        cfg.denominator(),
    )?;
    write_scores_csv(create(&out_path(cfg, "scores.csv")?)?, &scores)?;

    let report = CorrelationFile {
        thresholds,
        denominator: cfg.denominator(),
        general: correlate(&scores, ScoreMode::General),
        successful: correlate(&scores, ScoreMode::Successful),
    };
    write_json(&out_path(cfg, "correlation.json")?, &report)?;

    let selected = match mode {
        ScoreMode::General => &report.general,
        ScoreMode::Successful => &report.successful,
    };
    let fmt = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.4}"));
    println!(
        "{mode}: PCC {} SRC {} over {} essays ({} without attempts excluded)",
        fmt(selected.pcc),
        fmt(selected.src),
        selected.n_scored,
        selected.n_excluded
    );
    if selected.pcc.is_none() || selected.src.is_none() {
        return Err(Failure::Undefined(format!(
            "{mode}-mode correlation is undefined over {} scored essays",
            selected.n_scored
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct TuningFile {
    #[serde(flatten)]
    report: egp_core::scoring::TuningReport,
    mode: ScoreMode,
    candidates: Vec<f64>,
    seed: u64,
    aggregation: FoldAggregation,
    denominator: egp_core::scoring::Denominator,
}

pub fn tune(cfg: &RunConfig) -> Result<(), Failure> {
    let opts = cfg.grid_options()?;
    let catalog = load_catalog(cfg)?;
    let meta = load_meta(cfg)?;
    let rows = load_detections(cfg)?;
    let essays: Vec<EssayProbabilities> = essays_with_predictions(&meta, &rows, &catalog)?
        .into_iter()
        .map(|(essay_id, cefr, predictions)| EssayProbabilities {
            essay_id,
            cefr,
            predictions,
        })
        .collect();

    let report = grid_search(&essays, &catalog, &opts)?;
    println!(
        "best thresholds {} with objective {:.4} over {} configurations",
        report.thresholds, report.objective, report.configs_evaluated
    );
    info!("fold SRC: {:?}", report.fold_src);
    let file = TuningFile {
        report,
        mode: opts.mode,
        candidates: opts.candidates,
        seed: opts.seed,
        aggregation: opts.aggregation,
        denominator: opts.denominator,
    };
    write_json(&out_path(cfg, "tuning.json")?, &file)
}
