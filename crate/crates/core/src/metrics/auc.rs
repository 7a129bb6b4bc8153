use serde::{Deserialize, Serialize};

use super::{check_shape_scores, MetricsError};

/// Probability that a random positive outscores a random negative, ties
/// counting one half. `None` when either class is absent.
///
/// Computed from mid-ranks: sort once, give tied scores their average rank,
/// then apply the Mann-Whitney identity.
pub fn auc_binary(scores: &[f64], labels: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), labels.len(), "scores and labels differ in length");
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Twice the rank sum keeps mid-ranks integral.
    let mut rank_sum_x2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1 ..= j+1 share the mid-rank (i + j + 2) / 2.
        let mid_x2 = (i + j + 2) as u128;
        let pos_in_run = order[i..=j].iter().filter(|&&k| labels[k]).count() as u128;
        rank_sum_x2 += mid_x2 * pos_in_run;
        i = j + 1;
    }
    let np = n_pos as u128;
    let u_x2 = rank_sum_x2 - np * (np + 1);
    Some(u_x2 as f64 / (2.0 * n_pos as f64 * n_neg as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedAuc {
    pub value: f64,
    /// Per-class AUC; `None` for classes without both outcomes.
    pub per_class: Vec<Option<f64>>,
    /// Positive count of every class.
    pub support: Vec<usize>,
    pub excluded: Vec<usize>,
}

/// `Σ w·v / Σ w` over the defined values; `None` if no weight remains.
pub fn weighted_average(values: &[Option<f64>], weights: &[usize]) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (v, &w) in values.iter().zip(weights) {
        if let Some(v) = v {
            num += w as f64 * v;
            den += w as f64;
        }
    }
    (den > 0.0).then(|| num / den)
}

/// One-vs-rest AUC averaged with positive-count weights. Classes lacking
/// positives or negatives are left out of the average.
pub fn auc_ovr_weighted(scores: &[Vec<f64>], labels: &[Vec<bool>]) -> Result<WeightedAuc, MetricsError> {
    let classes = check_shape_scores(scores, labels)?;
    let mut per_class = Vec::with_capacity(classes);
    let mut support = Vec::with_capacity(classes);
    let mut excluded = Vec::new();
    for c in 0..classes {
        let s: Vec<f64> = scores.iter().map(|r| r[c]).collect();
        let l: Vec<bool> = labels.iter().map(|r| r[c]).collect();
        let w = l.iter().filter(|&&b| b).count();
        let auc = auc_binary(&s, &l);
        if auc.is_none() {
            log::warn!("event=auc_class_excluded class={c} positives={w} samples={}", l.len());
            excluded.push(c);
        }
        per_class.push(auc);
        support.push(w);
    }
    let value = weighted_average(&per_class, &support).ok_or(MetricsError::AllClassesDegenerate)?;
    Ok(WeightedAuc {
        value,
        per_class,
        support,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(auc_binary(&[0.9, 0.1], &[true, false]), Some(1.0));
        assert_eq!(auc_binary(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]), Some(0.75));
        assert_eq!(auc_binary(&[0.3; 6], &[true, false, true, false, false, true]), Some(0.5));
        assert_eq!(auc_binary(&[0.3, 0.2], &[true, true]), None);
    }

    #[test]
    fn weighted_examples() {
        // Class 0 perfectly ranked, class 1 all ties; both have 2 positives.
        let scores = vec![vec![0.9, 0.5], vec![0.8, 0.5], vec![0.1, 0.5], vec![0.2, 0.5]];
        let labels = vec![vec![true, true], vec![true, false], vec![false, true], vec![false, false]];
        let w = auc_ovr_weighted(&scores, &labels).unwrap();
        assert_eq!(w.value, 0.75);

        let one = auc_ovr_weighted(&[vec![0.9, 0.1], vec![0.1, 0.1]], &[vec![true, true], vec![false, true]]).unwrap();
        assert_eq!(one.value, 1.0);
        assert_eq!(one.excluded, vec![1]);

        assert!(matches!(
            auc_ovr_weighted(&[vec![0.2], vec![0.4]], &[vec![true], vec![true]]),
            Err(MetricsError::AllClassesDegenerate)
        ));
    }

    #[test]
    fn weighted_mean_of_class_aucs() {
        let v = weighted_average(&[Some(0.8), Some(0.4)], &[3, 1]).unwrap();
        assert!((v - 0.7).abs() < 1e-12);
        assert_eq!(weighted_average(&[None, Some(0.6)], &[4, 2]), Some(0.6));
        assert_eq!(weighted_average(&[None], &[4]), None);
    }

    #[test]
    fn weights_three_to_one() {
        let scores = vec![
            vec![0.9, 0.9],
            vec![0.8, 0.1],
            vec![0.3, 0.6],
            vec![0.6, 0.5],
            vec![0.1, 0.2],
        ];
        let labels = vec![
            vec![true, false],
            vec![true, false],
            vec![true, true],
            vec![false, false],
            vec![false, false],
        ];
        let w = auc_ovr_weighted(&scores, &labels).unwrap();
        // Class 0: 5 of 6 pairs ordered. Class 1: 3 of 4.
        assert!((w.per_class[0].unwrap() - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(w.per_class[1], Some(0.75));
        assert_eq!(w.support, vec![3, 1]);
        assert!((w.value - (3.0 * 5.0 / 6.0 + 0.75) / 4.0).abs() < 1e-15);
    }
}
