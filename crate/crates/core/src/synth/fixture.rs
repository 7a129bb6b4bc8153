use crate::dataset::{CropRecord, MutationClass, MutationLabels};

/// Per-class patient, lesion and image counts of the reference cohort,
/// ordered NRAS, KRAS, BRAF, PIK3CA, OTHER.
pub const REFERENCE_PATIENTS: [usize; 5] = [4, 37, 5, 16, 38];
pub const REFERENCE_LESIONS: [usize; 5] = [10, 76, 6, 38, 70];
pub const REFERENCE_IMAGES: [usize; 5] = [24, 136, 12, 56, 172];

/// Single-label manifest whose class distribution reproduces the reference
/// percentages at patient, lesion and image level.
///
/// Lesions are dealt round-robin over the patients of their class, images
/// round-robin over the lesions.
pub fn reference_cohort() -> Vec<CropRecord> {
    let mut records = Vec::new();
    for class in MutationClass::ALL {
        let c = class.index();
        let (np, nl, ni) = (REFERENCE_PATIENTS[c], REFERENCE_LESIONS[c], REFERENCE_IMAGES[c]);
        for m in 0..ni {
            let lesion = m % nl;
            let patient = lesion % np;
            let patient_id = format!("ref_{}_{patient:02}", class.name().to_lowercase());
            let lesion_id = (lesion / np) as u32 + 1;
            let slice_index = (m / nl) as u32;
            records.push(CropRecord {
                image_path: format!("crops/{patient_id}_{lesion_id:03}_{slice_index:04}_128.png"),
                patient_id,
                lesion_id,
                slice_index,
                resolution: 128,
                labels: MutationLabels::single(class),
                slice_spacing_mm: 1.0,
                days_ct_to_biopsy: 30,
            });
        }
    }
    records
}
