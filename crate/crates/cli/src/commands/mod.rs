mod analyze;
mod classify;
mod detect;
mod evaluate;
mod score;

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use egp_core::corpus::{load_egp_catalog, load_essay_meta, Catalog, EssayMeta};
use egp_core::llm_client::{cache_stats, clear_cache};
use egp_core::scoring::ProbPrediction;
use egp_core::Band;
use serde::Serialize;

use crate::config::RunConfig;
use crate::detections::{self, Detection};
use crate::failure::{Context, Failure};

pub use analyze::analyze;
pub use classify::classify;
pub use detect::detect;
pub use evaluate::evaluate;
pub use score::{score, tune};

pub fn cache(cfg: &RunConfig, clear: bool) -> Result<(), Failure> {
    let dir = cfg.cache_dir();
    if clear {
        let n = clear_cache(&dir).context(format!("clearing cache {}", dir.display()))?;
        println!("removed {n} entries from {}", dir.display());
    } else {
        let s = cache_stats(&dir).context(format!("reading cache {}", dir.display()))?;
        println!(
            "{}: {} entries, {} bytes",
            dir.display(),
            s.entries,
            s.bytes
        );
    }
    Ok(())
}

fn load_catalog(cfg: &RunConfig) -> Result<Catalog, Failure> {
    let path = cfg.catalog()?;
    let what = format!("loading catalog {}", path.display());
    let statements = load_egp_catalog(path).context(&what)?;
    Catalog::new(statements).context(&what)
}

fn load_meta(cfg: &RunConfig) -> Result<Vec<EssayMeta>, Failure> {
    let path = cfg.meta()?;
    let meta =
        load_essay_meta(path).context(format!("loading essay metadata {}", path.display()))?;
    let mut seen = BTreeSet::new();
    if let Some(dup) = meta.iter().find(|m| !seen.insert(m.essay_id.as_str())) {
        return Err(Failure::input(format!(
            "{}: essay {} listed twice",
            path.display(),
            dup.essay_id
        )));
    }
    Ok(meta)
}

fn load_detections(cfg: &RunConfig) -> Result<Vec<Detection>, Failure> {
    detections::read(&cfg.detections())
}

/// Detections of every essay in the metadata, in metadata order. Essays
/// without rows get an empty list.
fn essays_with_predictions(
    meta: &[EssayMeta],
    rows: &[Detection],
    catalog: &Catalog,
) -> Result<Vec<(String, Band, Vec<ProbPrediction>)>, Failure> {
    let mut by_essay: BTreeMap<&str, Vec<ProbPrediction>> = meta
        .iter()
        .map(|m| (m.essay_id.as_str(), Vec::new()))
        .collect();
    let mut unknown = BTreeSet::new();
    for d in rows {
        if catalog.get(d.egp_id).is_none() {
            return Err(Failure::input(format!(
                "detections refer to EGP {} which is not in the catalog",
                d.egp_id
            )));
        }
        match by_essay.get_mut(d.essay_id.as_str()) {
            Some(v) => v.push(ProbPrediction {
                index: d.index,
                egp_id: d.egp_id,
                p_o: d.p_o,
                p_c: d.p_c,
            }),
            None => {
                unknown.insert(d.essay_id.as_str());
            }
        }
    }
    if !unknown.is_empty() {
        return Err(Failure::input(format!(
            "detections for essays missing from the metadata: {}",
            listing(unknown.iter())
        )));
    }
    Ok(meta
        .iter()
        .map(|m| {
            let preds = by_essay.remove(m.essay_id.as_str()).unwrap_or_default();
            (m.essay_id.clone(), m.cefr, preds)
        })
        .collect())
}

/// Comma-separated list, cut off after ten items.
fn listing<T: std::fmt::Display>(items: impl ExactSizeIterator<Item = T>) -> String {
    let n = items.len();
    let mut s: Vec<String> = items.take(10).map(|x| x.to_string()).collect();
    if n > 10 {
        s.push(format!("... ({n} in total)"));
    }
    s.join(", ")
}

fn out_path(cfg: &RunConfig, name: &str) -> Result<PathBuf, Failure> {
    let dir = cfg.out_dir();
    fs::create_dir_all(&dir).context(format!("creating {}", dir.display()))?;
    Ok(dir.join(name))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).context(format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).context(format!("writing {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).context(format!("writing {}", path.display()))
}
