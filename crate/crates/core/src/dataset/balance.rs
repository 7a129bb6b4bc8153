use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CropRecord, DatasetError, MutationClass};

/// A rebalanced training sample: indices into the train records, repeated
/// where a minority group was re-sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancedSample {
    pub indices: Vec<usize>,
    /// Balancing key of every train record, by input index.
    pub keys: Vec<MutationClass>,
    /// Target size each key group was brought to.
    pub target: usize,
}

impl BalancedSample {
    pub fn records<'a>(&'a self, train: &'a [CropRecord]) -> impl Iterator<Item = &'a CropRecord> + 'a {
        self.indices.iter().map(move |&i| &train[i])
    }

    /// Output size per key group.
    pub fn group_sizes(&self) -> BTreeMap<MutationClass, usize> {
        let mut out = BTreeMap::new();
        for &i in &self.indices {
            *out.entry(self.keys[i]).or_insert(0) += 1;
        }
        out
    }
}

/// Rarest positive class of each record, counting positives over all of
/// `train`. Equal counts resolve in NRAS, KRAS, BRAF, PIK3CA, OTHER order.
pub fn balancing_keys(train: &[CropRecord]) -> Result<Vec<MutationClass>, DatasetError> {
    let mut counts = [0usize; 5];
    for r in train {
        for c in r.labels.positives() {
            counts[c.index()] += 1;
        }
    }
    train
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.labels
                .positives()
                .min_by_key(|c| (counts[c.index()], c.index()))
                .ok_or(DatasetError::NoPositiveLabel(i))
        })
        .collect()
}

/// Median of group sizes; an even number of groups averages the two middle
/// sizes and rounds half up.
pub fn median_size(sizes: &[usize]) -> usize {
    let mut s = sizes.to_vec();
    s.sort_unstable();
    let n = s.len();
    if n == 0 {
        0
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]).div_ceil(2)
    }
}

/// Equalize key groups to their median size.
///
/// Larger groups are sub-sampled without replacement. Smaller groups keep
/// every record once and are topped up by drawing from the same group with
/// replacement. The result is shuffled with the same seeded generator.
pub fn balance_train(train: &[CropRecord], seed: u64) -> Result<BalancedSample, DatasetError> {
    let keys = balancing_keys(train)?;
    let mut groups: BTreeMap<MutationClass, Vec<usize>> = BTreeMap::new();
    for (i, &k) in keys.iter().enumerate() {
        groups.entry(k).or_default().push(i);
    }
    let sizes: Vec<usize> = groups.values().map(Vec::len).collect();
    let target = median_size(&sizes);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices = Vec::with_capacity(target * groups.len());
    for members in groups.values() {
        if members.len() >= target {
            indices.extend(members.choose_multiple(&mut rng, target).copied());
        } else {
            indices.extend_from_slice(members);
            for _ in members.len()..target {
                indices.push(members[rng.gen_range(0..members.len())]);
            }
        }
    }
    indices.shuffle(&mut rng);
    Ok(BalancedSample { indices, keys, target })
}
