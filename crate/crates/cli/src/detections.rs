//! The detection table passed between commands.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::failure::{Context, Failure};

pub const FILE_NAME: &str = "detections.csv";

/// Presence of one construct in one sentence pair; binary engines write 0/1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub essay_id: String,
    pub index: usize,
    pub egp_id: u32,
    pub p_o: f64,
    pub p_c: f64,
}

pub type Key = (String, usize, u32);

impl Detection {
    pub fn key(&self) -> Key {
        (self.essay_id.clone(), self.index, self.egp_id)
    }
}

pub fn write(path: &Path, rows: &[Detection]) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).context(format!("creating {}", dir.display()))?;
    }
    let mut w = csv::Writer::from_path(path).context(format!("writing {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read(path: &Path) -> Result<Vec<Detection>, Failure> {
    let what = format!("reading detections {}", path.display());
    let mut rdr = csv::Reader::from_path(path).context(&what)?;
    let mut out = Vec::new();
    let mut seen = BTreeMap::new();
    for (i, rec) in rdr.deserialize::<Detection>().enumerate() {
        let row = i + 2;
        let d = rec.map_err(|e| Failure::input(format!("{what}: row {row}: {e}")))?;
        for p in [d.p_o, d.p_c] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Failure::input(format!(
                    "{what}: row {row}: probability {p} outside [0, 1]"
                )));
            }
        }
        if let Some(prev) = seen.insert(d.key(), row) {
            return Err(Failure::input(format!(
                "{what}: row {row} repeats ({}, {}, {}) from row {prev}",
                d.essay_id, d.index, d.egp_id
            )));
        }
        out.push(d);
    }
    Ok(out)
}

/// True when every value is exactly 0 or 1.
pub fn is_binary(rows: &[Detection]) -> bool {
    rows.iter()
        .all(|d| [d.p_o, d.p_c].iter().all(|&p| p == 0.0 || p == 1.0))
}
