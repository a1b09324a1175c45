use egp_core::attempts::{class_from_probs, AttemptClass, ThresholdPair};
use log::info;

use super::{load_catalog, load_detections, out_path};
use crate::config::{Mode, RunConfig};
use crate::failure::Failure;

pub const FILE_NAME: &str = "attempts.csv";

/// Export detected attempts, grouped by category, with each statement's
/// level threshold applied to both sides.
pub fn classify(cfg: &RunConfig) -> Result<(), Failure> {
    let catalog = load_catalog(cfg)?;
    let rows = load_detections(cfg)?;
    let thresholds = cfg.thresholds()?;
    let keep = |c: AttemptClass| match cfg.mode() {
        Mode::General => c != AttemptClass::NoAttemptOrOther,
        Mode::Successful => c == AttemptClass::Successful,
        Mode::Unsuccessful => c == AttemptClass::Unsuccessful,
    };

    let mut attempts = Vec::new();
    for d in &rows {
        let st = catalog.get(d.egp_id).ok_or_else(|| {
            Failure::input(format!(
                "detections refer to EGP {} which is not in the catalog",
                d.egp_id
            ))
        })?;
        let tau = thresholds.get(st.level);
        let class = class_from_probs(d.p_o, d.p_c, ThresholdPair::both(tau)?);
        if keep(class) {
            attempts.push((st, d, class));
        }
    }
    attempts.sort_by(|a, b| {
        (
            &a.0.supercategory,
            &a.0.subcategory,
            a.0.egp_id,
            &a.1.essay_id,
            a.1.index,
        )
            .cmp(&(
                &b.0.supercategory,
                &b.0.subcategory,
                b.0.egp_id,
                &b.1.essay_id,
                b.1.index,
            ))
    });

    let path = out_path(cfg, FILE_NAME)?;
    let mut w = csv::Writer::from_writer(super::create(&path)?);
    w.write_record([
        "supercategory",
        "subcategory",
        "guideword",
        "egp_id",
        "level",
        "essay_id",
        "index",
        "p_o",
        "p_c",
        "class",
    ])?;
    for (st, d, class) in &attempts {
        w.write_record([
            st.supercategory.clone(),
            st.subcategory.clone(),
            st.guideword.clone(),
            st.egp_id.to_string(),
            st.level.to_string(),
            d.essay_id.clone(),
            d.index.to_string(),
            d.p_o.to_string(),
            d.p_c.to_string(),
            class.to_string(),
        ])?;
    }
    w.flush()?;
    info!("wrote {} attempts to {}", attempts.len(), path.display());
    Ok(())
}
