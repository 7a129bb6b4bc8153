use hepacrop::synth::{gzip_bytes, write_dicom_series, write_nifti, write_nifti_mask, write_nifti_with, NiftiEncoding};
use hepacrop::volume::{
    parse_dicom_series, parse_nifti, parse_nifti_mask, parse_nifti_pair, Geometry, NiftiDatatype, ParseError,
    RescaleParams, NIFTI_HEADER_SIZE,
};
use hepacrop::{AnnotationMask, Volume};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_volume(rng: &mut ChaCha8Rng, integer: bool) -> Volume {
    let dims = [rng.gen_range(1..20), rng.gen_range(1..20), rng.gen_range(1..12)];
    // Spacings that float32 holds exactly.
    let spacing = [0; 3].map(|_| rng.gen_range(1..=40) as f64 / 16.0);
    let g = Geometry::new(dims, spacing).unwrap();
    let data = (0..g.voxel_count())
        .map(|_| {
            if integer {
                rng.gen_range(-1024..3072) as f32
            } else {
                rng.gen_range(-1024.0f32..3071.0)
            }
        })
        .collect();
    Volume::new(g, data, "r").unwrap()
}

#[test]
fn nifti_float32_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let v = random_volume(&mut rng, false);
        let bytes = write_nifti(&v);
        assert_eq!(parse_nifti(&bytes, "r").unwrap(), v);
        assert_eq!(parse_nifti(&gzip_bytes(&bytes), "r").unwrap(), v);
    }
}

#[test]
fn nifti_integer_encodings_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..30 {
        let v = random_volume(&mut rng, true);
        for enc in [
            NiftiEncoding::CT_INT16,
            NiftiEncoding { datatype: NiftiDatatype::Int32, slope: 1.0, intercept: 0.0 },
            NiftiEncoding { datatype: NiftiDatatype::Float64, slope: 1.0, intercept: 0.0 },
            NiftiEncoding { datatype: NiftiDatatype::Int16, slope: 0.5, intercept: -1024.0 },
        ] {
            let bytes = write_nifti_with(&v, enc).unwrap();
            assert_eq!(parse_nifti(&bytes, "r").unwrap(), v, "{enc:?}");
        }
    }
}

#[test]
fn nifti_pair_reads_split_files() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let v = random_volume(&mut rng, false);
    let bytes = write_nifti(&v);
    let mut header = bytes[..NIFTI_HEADER_SIZE].to_vec();
    header[344..348].copy_from_slice(b"ni1\0");
    // vox_offset 0: the image file holds only voxels.
    header[108..112].copy_from_slice(&0f32.to_le_bytes());
    let image = &bytes[352..];
    assert_eq!(parse_nifti_pair(&header, image, "r").unwrap(), v);
}

#[test]
fn truncated_and_padded_streams_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let v = random_volume(&mut rng, false);
    let bytes = write_nifti(&v);
    assert!(matches!(parse_nifti(&bytes[..bytes.len() - 1], "r"), Err(ParseError::LengthMismatch { .. })));
    let mut longer = bytes.clone();
    longer.push(0);
    assert!(matches!(parse_nifti(&longer, "r"), Err(ParseError::LengthMismatch { .. })));
    assert!(parse_nifti(&bytes[..100], "r").is_err());
}

#[test]
fn mask_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let g = Geometry::new([rng.gen_range(1..16), rng.gen_range(1..16), rng.gen_range(1..8)], [1.0, 1.0, 2.5]).unwrap();
        let data = (0..g.voxel_count()).map(|_| rng.gen_bool(0.3) as u8).collect();
        let m = AnnotationMask::new(g, data, "m").unwrap();
        assert_eq!(parse_nifti_mask(&write_nifti_mask(&m), "m").unwrap(), m);
    }
}

#[test]
fn dicom_series_order_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let v = random_volume(&mut rng, true);
        if v.dims()[2] < 2 {
            continue;
        }
        let mut files = write_dicom_series(&v, RescaleParams::new(1.0, -1024.0).unwrap()).unwrap();
        files.shuffle(&mut rng);
        let back = parse_dicom_series(&files, "d").unwrap();
        assert_eq!(back.data(), v.data());
        assert_eq!(back.dims(), v.dims());
        let [sx, sy, sz] = back.spacing();
        assert_eq!([sx, sy], [v.spacing()[0], v.spacing()[1]]);
        // Slice gaps are bucketed to 1 um.
        assert!((sz - v.spacing()[2]).abs() <= 0.5e-3 + 1e-12);
    }
}

#[test]
fn dicom_single_slice_uses_thickness() {
    let g = Geometry::new([4, 3, 1], [0.5, 0.75, 3.0]).unwrap();
    let v = Volume::new(g, (0..12).map(|i| i as f32).collect(), "s").unwrap();
    let files = write_dicom_series(&v, RescaleParams::IDENTITY).unwrap();
    assert_eq!(parse_dicom_series(&files, "s").unwrap().spacing(), [0.5, 0.75, 3.0]);
}

#[test]
fn dicom_rejects_duplicate_positions() {
    let g = Geometry::new([2, 2, 2], [1.0, 1.0, 2.0]).unwrap();
    let v = Volume::new(g, vec![0.0; 8], "s").unwrap();
    let files = write_dicom_series(&v, RescaleParams::IDENTITY).unwrap();
    let dup = vec![files[0].clone(), files[0].clone()];
    assert!(matches!(parse_dicom_series(&dup, "s"), Err(ParseError::DuplicateSlicePosition(_))));
    assert_eq!(parse_dicom_series::<Vec<u8>>(&[], "s"), Err(ParseError::EmptySeries));
}
