use std::collections::BTreeMap;

use crate::volume::AnnotationMask;

/// One maximal 26-connected set of positive voxels.
#[derive(Debug, Clone, PartialEq)]
pub struct LesionComponent {
    /// 1-based, in first-encounter scan order.
    pub label_id: u32,
    /// Voxel coordinates in scan order.
    pub voxels: Vec<[usize; 3]>,
    /// Positive pixel count per axial slice, only slices with area ≥ 1.
    pub per_slice_area: BTreeMap<usize, usize>,
    /// Mean of `per_slice_area` values.
    pub mean_area: f64,
}

impl LesionComponent {
    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }

    pub(crate) fn from_voxels(label_id: u32, voxels: Vec<[usize; 3]>) -> Self {
        let mut per_slice_area = BTreeMap::new();
        for v in &voxels {
            *per_slice_area.entry(v[2]).or_insert(0usize) += 1;
        }
        let mean_area = voxels.len() as f64 / per_slice_area.len().max(1) as f64;
        Self {
            label_id,
            voxels,
            per_slice_area,
            mean_area,
        }
    }
}

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Keep the earlier provisional label as root.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Label the positive voxels of `mask` into 26-connected components.
///
/// Two-pass labeling with a union-find over provisional labels. Only the 13
/// neighbours that precede a voxel in x-fastest scan order are inspected in
/// the first pass.
pub fn connected_components_26(mask: &AnnotationMask) -> Vec<LesionComponent> {
    let [nx, ny, nz] = mask.dims();
    let data = mask.data();
    let mut labels = vec![0u32; data.len()];
    let mut sets = DisjointSet { parent: vec![0] };

    let idx = |x: usize, y: usize, z: usize| x + nx * (y + ny * z);
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let i = idx(x, y, z);
                if data[i] == 0 {
                    continue;
                }
                let mut current = 0u32;
                for dz in -1i64..=0 {
                    for dy in -1i64..=1 {
                        for dx in -1i64..=1 {
                            // Predecessors only: previous slice, previous row, or left.
                            if dz == 0 && (dy > 0 || (dy == 0 && dx >= 0)) {
                                continue;
                            }
                            let (qx, qy, qz) = (x as i64 + dx, y as i64 + dy, z as i64 + dz);
                            if qx < 0 || qy < 0 || qz < 0 || qx >= nx as i64 || qy >= ny as i64 {
                                continue;
                            }
                            let l = labels[idx(qx as usize, qy as usize, qz as usize)];
                            if l == 0 {
                                continue;
                            }
                            if current == 0 {
                                current = l;
                            } else if current != l {
                                sets.union(current, l);
                            }
                        }
                    }
                }
                if current == 0 {
                    current = sets.parent.len() as u32;
                    sets.parent.push(current);
                }
                labels[i] = current;
            }
        }
    }

    let mut final_label: Vec<u32> = vec![0; sets.parent.len()];
    let mut components: Vec<Vec<[usize; 3]>> = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        let root = sets.find(l) as usize;
        if final_label[root] == 0 {
            components.push(Vec::new());
            final_label[root] = components.len() as u32;
        }
        let x = i % nx;
        let rest = i / nx;
        components[final_label[root] as usize - 1].push([x, rest % ny, rest / ny]);
    }

    components
        .into_iter()
        .enumerate()
        .map(|(k, voxels)| LesionComponent::from_voxels(k as u32 + 1, voxels))
        .collect()
}
