use egp_core::scoring::{
    cumulative_curve, cumulative_level_distribution, ecdf_auc, indicator_levels,
    threshold_predictions, unique_indicators, write_cumulative_csv, write_ecdf_csv,
};
use log::info;

use super::{create, essays_with_predictions, load_catalog, load_detections, load_meta, out_path};
use crate::config::RunConfig;
use crate::failure::Failure;

/// Level distributions of unique attempts per band, and the per-essay areas
/// under the cumulative curve with their empirical CDF.
pub fn analyze(cfg: &RunConfig) -> Result<(), Failure> {
    let mode = cfg.mode().score_mode()?;
    let catalog = load_catalog(cfg)?;
    let meta = load_meta(cfg)?;
    let rows = load_detections(cfg)?;
    let thresholds = cfg.thresholds()?;

    let mut levels = Vec::new();
    for (id, band, probs) in essays_with_predictions(&meta, &rows, &catalog)? {
        let preds = threshold_predictions(&probs, &catalog, &thresholds)?;
        let l = indicator_levels(&unique_indicators(&preds, mode), &catalog)?;
        levels.push((id, band, l));
    }

    let grouped: Vec<_> = levels.iter().map(|(_, b, l)| (*b, l.clone())).collect();
    write_cumulative_csv(
        create(&out_path(cfg, "cumulative.csv")?)?,
        &cumulative_level_distribution(&grouped),
    )?;

    let curves: Vec<_> = levels
        .iter()
        .map(|(_, b, l)| (*b, cumulative_curve(l)))
        .collect();
    let (aucs, ecdf) = ecdf_auc(&curves);
    write_ecdf_csv(create(&out_path(cfg, "ecdf.csv")?)?, &ecdf)?;

    let mut w = csv::Writer::from_writer(create(&out_path(cfg, "essay_auc.csv")?)?);
    w.write_record(["essay_id", "cefr", "n_attempts", "auc"])?;
    for ((id, band, l), auc) in levels.iter().zip(&aucs) {
        w.write_record([
            id.clone(),
            band.to_string(),
            l.len().to_string(),
            auc.map_or("absent".to_string(), |a| a.to_string()),
        ])?;
    }
    w.flush()?;
    info!("{mode}-mode distributions for {} essays", levels.len());
    Ok(())
}
