mod common;

use common::{auc_pairs, brute_counts, brute_f1, brute_hamming, random_manifest, T_TABLE_975};
use hepacrop::dataset::{make_split, ClassSpace, Side};
use hepacrop::metrics::{
    aggregate_ci, aggregate_seeds, auc_binary, auc_ovr_weighted, f1_per_class, hamming, render_table,
    score_predictions, spec_sens, t_quantile_975, ConfusionCounts, MetricsError, PredictionSet,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, k: usize, p: f64) -> Vec<Vec<bool>> {
    (0..n).map(|_| (0..k).map(|_| rng.gen_bool(p)).collect()).collect()
}

fn column(m: &[Vec<bool>], c: usize) -> Vec<bool> {
    m.iter().map(|r| r[c]).collect()
}

#[test]
fn classification_metrics_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..1000 {
        let n = rng.gen_range(1..40);
        let k = rng.gen_range(1..6);
        let (py, pp) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
        let y = random_matrix(&mut rng, n, k, py);
        let p = random_matrix(&mut rng, n, k, pp);
        let f1 = f1_per_class(&y, &p).unwrap();
        let counts = ConfusionCounts::per_class(&y, &p).unwrap();
        for c in 0..k {
            let (yc, pc) = (column(&y, c), column(&p, c));
            assert!((f1[c].f1 - brute_f1(&yc, &pc)).abs() < 1e-9);
            let b = brute_counts(&yc, &pc);
            assert_eq!((counts[c].tp, counts[c].fp, counts[c].tn, counts[c].fn_), (b.tp, b.fp, b.tn, b.fn_));
            let (spec, sens) = spec_sens(&counts[c]);
            let ratio = |a: usize, d: usize| (d > 0).then(|| a as f64 / d as f64);
            assert_eq!(spec, ratio(b.tn, b.tn + b.fp));
            assert_eq!(sens, ratio(b.tp, b.tp + b.fn_));
        }
        assert!((hamming(&y, &p).unwrap() - brute_hamming(&y, &p)).abs() < 1e-9);
    }
}

#[test]
fn auc_matches_pair_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..1000 {
        let n = rng.gen_range(1..60);
        // Coarse scores so ties are common.
        let levels = rng.gen_range(2..12);
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..levels) as f64 / levels as f64).collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
        match (auc_binary(&scores, &labels), auc_pairs(&scores, &labels)) {
            (Some(a), Some(b)) => assert!((a - b).abs() < 1e-9, "{a} vs {b}"),
            (None, None) => {}
            other => panic!("definedness differs: {other:?}"),
        }
    }
}

#[test]
fn auc_worked_example() {
    assert_eq!(auc_binary(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]), Some(0.75));
}

#[test]
fn weighted_auc_matches_support_weighting() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..200 {
        let n = rng.gen_range(4..50);
        let scores: Vec<Vec<f64>> = (0..n).map(|_| (0..5).map(|_| rng.gen()).collect()).collect();
        let labels = random_matrix(&mut rng, n, 5, 0.3);
        let (mut num, mut den) = (0.0, 0.0);
        for c in 0..5 {
            let s: Vec<f64> = scores.iter().map(|r| r[c]).collect();
            let l = column(&labels, c);
            if let Some(a) = auc_pairs(&s, &l) {
                let w = l.iter().filter(|&&b| b).count() as f64;
                num += w * a;
                den += w;
            }
        }
        match auc_ovr_weighted(&scores, &labels) {
            Ok(w) => assert!((w.value - num / den).abs() < 1e-9),
            Err(MetricsError::AllClassesDegenerate) => assert_eq!(den, 0.0),
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn interval_uses_tabulated_t() {
    for dof in 1..=30 {
        assert!((t_quantile_975(dof) - T_TABLE_975[dof - 1]).abs() < 1e-3, "dof {dof}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..100 {
        let n = rng.gen_range(2..=31);
        let v: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let mean = v.iter().sum::<f64>() / n as f64;
        let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        let ci = aggregate_ci(&v).unwrap();
        assert!((ci.mean - mean).abs() < 1e-12);
        let expected = T_TABLE_975[n - 2] * sd / (n as f64).sqrt();
        // Table values carry three decimals.
        assert!((ci.half_width - expected).abs() <= 5e-4 * sd / (n as f64).sqrt() + 1e-12);
    }
}

proptest! {
    #[test]
    fn auc_invariant_under_monotone_transform(
        pairs in prop::collection::vec((0u32..20, any::<bool>()), 2..40)
    ) {
        let scores: Vec<f64> = pairs.iter().map(|p| p.0 as f64 / 20.0).collect();
        let labels: Vec<bool> = pairs.iter().map(|p| p.1).collect();
        let warped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() / 30.0).collect();
        prop_assert_eq!(auc_binary(&scores, &labels), auc_binary(&warped, &labels));
    }

    #[test]
    fn metrics_permutation_invariant(
        rows in prop::collection::vec((prop::collection::vec(any::<bool>(), 3), prop::collection::vec(any::<bool>(), 3)), 1..30),
        rot in 0usize..30,
    ) {
        let y: Vec<Vec<bool>> = rows.iter().map(|r| r.0.clone()).collect();
        let p: Vec<Vec<bool>> = rows.iter().map(|r| r.1.clone()).collect();
        let k = rot % y.len();
        let (mut y2, mut p2) = (y.clone(), p.clone());
        y2.rotate_left(k);
        p2.rotate_left(k);
        prop_assert_eq!(f1_per_class(&y, &p).unwrap(), f1_per_class(&y2, &p2).unwrap());
        prop_assert_eq!(hamming(&y, &p).unwrap(), hamming(&y2, &p2).unwrap());
    }

    #[test]
    fn hamming_and_f1_bounded(
        rows in prop::collection::vec((prop::collection::vec(any::<bool>(), 5), prop::collection::vec(any::<bool>(), 5)), 1..30),
    ) {
        let y: Vec<Vec<bool>> = rows.iter().map(|r| r.0.clone()).collect();
        let p: Vec<Vec<bool>> = rows.iter().map(|r| r.1.clone()).collect();
        let h = hamming(&y, &p).unwrap();
        prop_assert!((0.0..=1.0).contains(&h));
        prop_assert_eq!(hamming(&y, &y).unwrap(), 0.0);
        for c in f1_per_class(&y, &p).unwrap() {
            prop_assert!((0.0..=1.0).contains(&c.f1));
        }
    }
}

fn predictions(
    manifest: &[hepacrop::CropRecord],
    plan: &hepacrop::SplitPlan,
    space: ClassSpace,
    f: impl Fn(&hepacrop::CropRecord) -> Vec<f64>,
) -> PredictionSet {
    PredictionSet {
        model_tag: "m".into(),
        seed: plan.seed,
        class_space: space,
        scores: plan.select(manifest, Side::Test).into_iter().map(|r| (r.key(), f(r))).collect(),
    }
}

#[test]
fn oracle_predictor_is_perfect() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let manifest = random_manifest(&mut rng, 60);
    let plan = make_split(&manifest, 1, 0.9, 200).unwrap();
    for space in [ClassSpace::Five, ClassSpace::Three] {
        let preds = predictions(&manifest, &plan, space, |r| {
            space.encode(&r.labels).iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
        });
        let s = score_predictions(&manifest, &plan, &preds, space).unwrap();
        assert_eq!(s.hamming, 0.0);
        for c in &s.classes {
            assert!(c.f1_degenerate || c.f1 == 1.0);
            assert!(c.auc.is_none_or(|a| a == 1.0));
        }
    }
}

#[test]
fn constant_zero_predictor_hamming_is_positive_density() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let manifest = random_manifest(&mut rng, 60);
    let plan = make_split(&manifest, 2, 0.9, 200).unwrap();
    let preds = predictions(&manifest, &plan, ClassSpace::Five, |_| vec![0.0; 5]);
    let s = score_predictions(&manifest, &plan, &preds, ClassSpace::Five).unwrap();
    let test = plan.select(&manifest, Side::Test);
    let ones: usize = test.iter().map(|r| r.labels.positives().count()).sum();
    assert!((s.hamming - ones as f64 / (5 * test.len()) as f64).abs() < 1e-12);
    for c in &s.classes {
        assert_eq!(c.specificity, Some(1.0));
        assert!(c.sensitivity.is_none_or(|v| v == 0.0));
        assert_eq!(c.f1, 0.0);
        // Constant scores rank nothing.
        assert!(c.auc.is_none_or(|a| a == 0.5));
    }
}

#[test]
fn predictions_must_cover_exactly_the_test_side() {
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    let manifest = random_manifest(&mut rng, 40);
    let plan = make_split(&manifest, 3, 0.9, 100).unwrap();
    let mut preds = predictions(&manifest, &plan, ClassSpace::Five, |_| vec![0.0; 5]);
    let first = preds.scores.keys().next().unwrap().clone();
    let removed = preds.scores.remove(&first).unwrap();
    assert!(matches!(
        score_predictions(&manifest, &plan, &preds, ClassSpace::Five),
        Err(MetricsError::MissingPrediction(_))
    ));
    preds.scores.insert(first, removed);
    let train = plan.select(&manifest, Side::Train)[0].key();
    preds.scores.insert(train, vec![0.0; 5]);
    assert!(matches!(
        score_predictions(&manifest, &plan, &preds, ClassSpace::Five),
        Err(MetricsError::UnexpectedPrediction(_))
    ));
    assert!(matches!(
        score_predictions(&manifest, &plan, &preds, ClassSpace::Three),
        Err(MetricsError::ClassSpaceMismatch { .. })
    ));
}

#[test]
fn three_class_table_leads_with_ras() {
    let mut rng = ChaCha8Rng::seed_from_u64(28);
    let manifest = random_manifest(&mut rng, 60);
    let runs: Vec<_> = (1..=3)
        .map(|seed| {
            let plan = make_split(&manifest, seed, 0.9, 100).unwrap();
            let preds = predictions(&manifest, &plan, ClassSpace::Three, |r| {
                let ras = r.labels.nras || r.labels.kras;
                vec![if ras { 0.8 } else { 0.3 }, 0.2, 0.6]
            });
            score_predictions(&manifest, &plan, &preds, ClassSpace::Three).unwrap()
        })
        .collect();
    let report = aggregate_seeds(&runs).unwrap();
    assert_eq!(report.classes[0].name, "RAS");
    assert_eq!(report.classes[0].sensitivity.mean, Some(1.0));
    let table = render_table(&[report]);
    for col in ["AUC", "F1 RAS", "Spec RAS", "Sens RAS", "Hamming", "64x64"] {
        assert!(table.contains(col), "{col} missing from\n{table}");
    }
}
