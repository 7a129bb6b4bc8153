mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::opening_oracle;
use hepacrop::lesion::{connected_components_26, preprocess_patient, BinarySlice};
use hepacrop::synth::{synth_generate, SynthConfig};
use hepacrop::PreprocessConfig;

/// (lesion, slice) pairs that pass the inclusion rule, from the oracle opening
/// of each component's slices on the full grid.
fn expected_slices(mask: &hepacrop::AnnotationMask, eps: f64) -> BTreeSet<(u32, usize)> {
    let [nx, ny, _] = mask.dims();
    let mut out = BTreeSet::new();
    for c in connected_components_26(mask) {
        let mut areas: BTreeMap<usize, usize> = BTreeMap::new();
        for z in c.per_slice_area.keys().copied() {
            let mut s = BinarySlice::new(nx, ny);
            for v in c.voxels.iter().filter(|v| v[2] == z) {
                s.set(v[0], v[1], true);
            }
            let a = opening_oracle(&s).area();
            if a > 0 {
                areas.insert(z, a);
            }
        }
        if areas.is_empty() {
            continue;
        }
        let mean = areas.values().sum::<usize>() as f64 / areas.len() as f64;
        out.extend(areas.iter().filter(|(_, &a)| a as f64 > eps * mean).map(|(&z, _)| (c.label_id, z)));
    }
    out
}

#[test]
fn synthetic_cohort_through_extraction() {
    let cfg = SynthConfig {
        n_patients: 6,
        seed: 3,
        ..SynthConfig::default()
    };
    let patients = synth_generate(&cfg).unwrap();
    for p in &patients {
        let mut per_res = Vec::new();
        for r in [32, 64, 128] {
            let pc = PreprocessConfig {
                resolution: r,
                ..PreprocessConfig::default()
            };
            let out = preprocess_patient(&p.volume, &p.mask, &pc, &p.patient_id).unwrap();
            for c in &out.crops {
                assert_eq!(c.pixels.len(), r * r);
                assert!(c.slice_area as f64 > pc.epsilon * c.mean_area);
                assert!((0.0..1.0).contains(&c.pad_fraction));
            }
            // Every generated lesion is either cropped or reported.
            let seen: BTreeSet<u32> = out
                .crops
                .iter()
                .map(|c| c.lesion_id)
                .chain(out.skipped.iter().map(|s| s.lesion_id))
                .collect();
            let generated: BTreeSet<u32> = p.lesions.iter().map(|l| l.lesion_id).collect();
            assert_eq!(seen, generated, "{}", p.patient_id);
            let got: BTreeSet<(u32, usize)> = out.crops.iter().map(|c| (c.lesion_id, c.slice_index)).collect();
            assert_eq!(got, expected_slices(&p.mask, pc.epsilon));
            per_res.push(got);
        }
        // Slice selection does not depend on the output size.
        assert!(per_res.windows(2).all(|w| w[0] == w[1]));
    }
}

#[test]
fn zero_epsilon_keeps_every_opened_slice() {
    let cfg = SynthConfig {
        n_patients: 2,
        seed: 9,
        ..SynthConfig::default()
    };
    for p in synth_generate(&cfg).unwrap() {
        let pc = PreprocessConfig {
            epsilon: 0.0,
            resolution: 32,
            ..PreprocessConfig::default()
        };
        let out = preprocess_patient(&p.volume, &p.mask, &pc, &p.patient_id).unwrap();
        assert_eq!(
            out.crops.iter().map(|c| (c.lesion_id, c.slice_index)).collect::<BTreeSet<_>>(),
            expected_slices(&p.mask, 0.0)
        );
    }
}
