mod common;

use std::collections::BTreeSet;

use common::{bfs_components, random_mask, scan_index};
use hepacrop::lesion::connected_components_26;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn partition_matches_flood_fill() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..60 {
        let mask = random_mask(&mut rng, 24);
        let dims = mask.dims();
        let ours = connected_components_26(&mask);
        let mut oracle = bfs_components(&mask);
        // Labels follow the first voxel in scan order.
        oracle.sort_by_key(|c| c.iter().map(|&v| scan_index(v, dims)).min().unwrap());
        assert_eq!(ours.len(), oracle.len());
        for (k, (c, o)) in ours.iter().zip(&oracle).enumerate() {
            assert_eq!(c.label_id, k as u32 + 1);
            let set: BTreeSet<_> = c.voxels.iter().copied().collect();
            assert_eq!(&set, o);
            let total: usize = c.per_slice_area.values().sum();
            assert_eq!(total, c.len());
            assert!((c.mean_area - total as f64 / c.per_slice_area.len() as f64).abs() < 1e-12);
        }
    }
}

#[test]
fn full_mask_is_one_component() {
    let g = hepacrop::volume::Geometry::new([5, 4, 3], [1.0; 3]).unwrap();
    let m = hepacrop::AnnotationMask::new(g, vec![1; 60], "m").unwrap();
    let c = connected_components_26(&m);
    assert_eq!(c.len(), 1);
    assert_eq!(c[0].len(), 60);
    assert_eq!(c[0].mean_area, 20.0);
}

#[test]
fn checkerboard_joins_diagonally() {
    // Alternating voxels are all 26-connected through corners.
    let g = hepacrop::volume::Geometry::new([6, 6, 6], [1.0; 3]).unwrap();
    let mut m = hepacrop::AnnotationMask::empty(g, "m");
    for z in 0..6 {
        for y in 0..6 {
            for x in 0..6 {
                if (x + y + z) % 2 == 0 {
                    m.set(x, y, z, true);
                }
            }
        }
    }
    assert_eq!(connected_components_26(&m).len(), 1);
}
