//! SINR to MCS mapping and transport accounting.
//!
//! The MCS table file is a CSV with header `index,threshold_db,efficiency`
//! and exactly 15 rows, thresholds and efficiencies strictly increasing.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::BandPlan;

pub const NUM_MCS: usize = 15;

#[derive(Debug, Error)]
pub enum McsError {
    #[error("cannot read MCS table {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed MCS table: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid MCS table: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McsEntry {
    pub index: usize,
    pub threshold_db: f64,
    /// bits/s/Hz
    pub efficiency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McsTable {
    entries: Vec<McsEntry>,
}

const DEFAULT_EFFICIENCY: [f64; NUM_MCS] = [
    0.25, 0.40, 0.60, 0.85, 1.15, 1.45, 1.80, 2.15, 2.55, 2.95, 3.40, 3.85, 4.35, 4.85, 5.40,
];

impl Default for McsTable {
    /// QPSK 1/8 at -6 dB up to 64QAM 9/10 at 19.8 dB in equal threshold steps.
    fn default() -> Self {
        let (lo, hi) = (-6.0, 19.8);
        let step = (hi - lo) / (NUM_MCS - 1) as f64;
        let entries = DEFAULT_EFFICIENCY
            .iter()
            .enumerate()
            .map(|(i, &efficiency)| McsEntry {
                index: i + 1,
                threshold_db: if i == NUM_MCS - 1 { hi } else { lo + step * i as f64 },
                efficiency,
            })
            .collect();
        Self { entries }
    }
}

impl McsTable {
    pub fn new(entries: Vec<McsEntry>) -> Result<Self, McsError> {
        if entries.len() != NUM_MCS {
            return Err(McsError::Invalid(format!("expected {NUM_MCS} entries, found {}", entries.len())));
        }
        for (i, e) in entries.iter().enumerate() {
            if e.index != i + 1 {
                return Err(McsError::Invalid(format!("row {} has index {}, expected {}", i + 1, e.index, i + 1)));
            }
            if !e.threshold_db.is_finite() || !(e.efficiency.is_finite() && e.efficiency > 0.0) {
                return Err(McsError::Invalid(format!("entry {} has a non-finite or non-positive value", e.index)));
            }
        }
        for w in entries.windows(2) {
            if w[1].threshold_db <= w[0].threshold_db || w[1].efficiency <= w[0].efficiency {
                return Err(McsError::Invalid(format!(
                    "entries {} and {} are not strictly increasing",
                    w[0].index, w[1].index
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self, McsError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let entries = rdr.deserialize().collect::<Result<Vec<McsEntry>, _>>()?;
        Self::new(entries)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, McsError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| McsError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_csv_reader(file)
    }

    pub fn to_csv_string(&self) -> String {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        for e in &self.entries {
            wtr.serialize(e).expect("in-memory CSV write");
        }
        String::from_utf8(wtr.into_inner().expect("in-memory CSV flush")).expect("CSV is UTF-8")
    }

    pub fn entries(&self) -> &[McsEntry] {
        &self.entries
    }

    /// Entry for a 1-based MCS index.
    pub fn entry(&self, index: usize) -> &McsEntry {
        &self.entries[index - 1]
    }

    pub fn max_efficiency(&self) -> f64 {
        self.entries[NUM_MCS - 1].efficiency
    }

    /// Highest MCS whose threshold does not exceed the SINR, or `None` below
    /// the lowest threshold.
    pub fn select_mcs(&self, estimated_sinr_db: f64) -> Option<usize> {
        if estimated_sinr_db.is_nan() {
            return None;
        }
        let n = self.entries.partition_point(|e| e.threshold_db <= estimated_sinr_db);
        (n > 0).then_some(n)
    }

    /// Delivered spectral efficiency under a hard threshold: the chosen MCS
    /// either decodes at full efficiency or the block is lost.
    pub fn transport_outcome(&self, chosen: usize, realized_sinr_db: f64) -> f64 {
        let e = self.entry(chosen);
        if realized_sinr_db >= e.threshold_db {
            e.efficiency
        } else {
            0.0
        }
    }

    /// Efficiency the link would carry at this SINR, zero below the table.
    pub fn efficiency_at(&self, sinr_db: f64) -> f64 {
        self.select_mcs(sinr_db).map_or(0.0, |i| self.entry(i).efficiency)
    }
}

/// Rate from the delivered efficiencies on each resource block assigned to
/// one user in a slot.
pub fn user_rate(delivered_efficiencies: &[f64], band: &BandPlan) -> f64 {
    delivered_efficiencies.iter().sum::<f64>() * band.rb_bandwidth_hz
}
