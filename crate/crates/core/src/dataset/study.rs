use serde::{Deserialize, Serialize};

use super::MutationLabels;

/// Biopsy labels of one lesion, keyed by its 26-connected label id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyLesion {
    pub lesion_id: u32,
    pub labels: MutationLabels,
}

/// One patient's input files and metadata; one JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyEntry {
    pub patient_id: String,
    /// NIfTI file, or a directory holding one DICOM series.
    pub volume_path: String,
    pub mask_path: String,
    pub days_ct_to_biopsy: i64,
    /// Labels for lesions not listed in `lesions`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<MutationLabels>,
    #[serde(default)]
    pub lesions: Vec<StudyLesion>,
}

impl StudyEntry {
    pub fn labels_for(&self, lesion_id: u32) -> Option<MutationLabels> {
        self.lesions
            .iter()
            .find(|l| l.lesion_id == lesion_id)
            .map(|l| l.labels)
            .or(self.labels)
    }
}
