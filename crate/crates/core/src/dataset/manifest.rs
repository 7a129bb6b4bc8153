use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DatasetError, MutationLabels};

/// One emitted crop with its study metadata. Serialized as one JSON object
/// per manifest line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CropRecord {
    pub patient_id: String,
    pub lesion_id: u32,
    pub slice_index: u32,
    pub image_path: String,
    pub resolution: u32,
    pub labels: MutationLabels,
    pub slice_spacing_mm: f64,
    pub days_ct_to_biopsy: i64,
}

/// Identity of a crop within one resolution.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CropKey {
    pub patient_id: String,
    pub lesion_id: u32,
    pub slice_index: u32,
}

impl CropRecord {
    pub fn key(&self) -> CropKey {
        CropKey {
            patient_id: self.patient_id.clone(),
            lesion_id: self.lesion_id,
            slice_index: self.slice_index,
        }
    }
}

impl std::fmt::Display for CropKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}/{}", self.patient_id, self.lesion_id, self.slice_index)
    }
}

/// Parse JSON lines; blank lines are skipped.
pub fn read_jsonl<T: for<'de> Deserialize<'de>>(reader: impl BufRead) -> Result<Vec<T>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| DatasetError::Json {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(mut writer: impl Write, items: &[T]) -> Result<(), DatasetError> {
    for item in items {
        let line = serde_json::to_string(item).map_err(|e| DatasetError::Json {
            line: 0,
            message: e.to_string(),
        })?;
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Vec<CropRecord>, DatasetError> {
    let f = std::fs::File::open(path)?;
    read_jsonl(std::io::BufReader::new(f))
}

pub fn write_manifest(path: &Path, records: &[CropRecord]) -> Result<(), DatasetError> {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, records)?;
    std::fs::write(path, buf)?;
    Ok(())
}
