use serde::Serialize;

use super::CropRecord;

/// Largest accepted distance between slices, inclusive.
pub const MAX_SLICE_SPACING_MM: f64 = 2.5;
/// Largest accepted delay between CT and biopsy report, inclusive.
pub const MAX_DAYS_CT_TO_BIOPSY: i64 = 90;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Spacing,
    DaysToBiopsy,
    LabelConsistency,
}

impl std::fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ViolationKind::Spacing => "spacing",
            ViolationKind::DaysToBiopsy => "days to biopsy",
            ViolationKind::LabelConsistency => "label consistency",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// Position of the record in the input.
    pub index: usize,
    pub patient_id: String,
    pub lesion_id: u32,
    pub slice_index: u32,
    pub kind: ViolationKind,
    pub detail: String,
}

/// Check study inclusion rules on every record.
pub fn validate_study(records: &[CropRecord]) -> Vec<Violation> {
    let mut out = Vec::new();
    for (index, r) in records.iter().enumerate() {
        let mut push = |kind, detail: String| {
            out.push(Violation {
                index,
                patient_id: r.patient_id.clone(),
                lesion_id: r.lesion_id,
                slice_index: r.slice_index,
                kind,
                detail,
            })
        };
        if !(r.slice_spacing_mm > 0.0 && r.slice_spacing_mm <= MAX_SLICE_SPACING_MM) {
            push(
                ViolationKind::Spacing,
                format!("slice spacing {} mm outside (0, {MAX_SLICE_SPACING_MM}]", r.slice_spacing_mm),
            );
        }
        if r.days_ct_to_biopsy > MAX_DAYS_CT_TO_BIOPSY {
            push(
                ViolationKind::DaysToBiopsy,
                format!("{} days exceeds {MAX_DAYS_CT_TO_BIOPSY}", r.days_ct_to_biopsy),
            );
        }
        if !r.labels.is_consistent() {
            push(ViolationKind::LabelConsistency, format!("{:?}", r.labels));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{MutationClass, MutationLabels};

    fn record(spacing: f64, days: i64, labels: MutationLabels) -> CropRecord {
        CropRecord {
            patient_id: "P".into(),
            lesion_id: 1,
            slice_index: 0,
            image_path: String::new(),
            resolution: 32,
            labels,
            slice_spacing_mm: spacing,
            days_ct_to_biopsy: days,
        }
    }

    #[test]
    fn boundaries_inclusive() {
        let r = record(2.5, 90, MutationLabels::single(MutationClass::Kras));
        assert!(validate_study(&[r]).is_empty());
    }

    #[test]
    fn spacing_violation() {
        let v = validate_study(&[record(3.0, 10, MutationLabels::single(MutationClass::Kras))]);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind.to_string(), "spacing");
    }

    #[test]
    fn days_violation() {
        let v = validate_study(&[record(1.0, 91, MutationLabels::single(MutationClass::Kras))]);
        assert_eq!(v[0].kind, ViolationKind::DaysToBiopsy);
    }

    #[test]
    fn label_violation() {
        let l = MutationLabels { other: true, kras: true, ..Default::default() };
        let v = validate_study(&[record(1.0, 1, l)]);
        assert_eq!(v[0].kind.to_string(), "label consistency");
        let v = validate_study(&[record(1.0, 1, MutationLabels::default())]);
        assert_eq!(v[0].kind, ViolationKind::LabelConsistency);
    }
}
