use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::aggregate::aggregate_ci;
use super::auc::{auc_binary, weighted_average};
use super::classification::{binarize, f1_from_counts, hamming, spec_sens, ConfusionCounts, DEFAULT_THRESHOLD};
use super::MetricsError;
use crate::dataset::{read_jsonl, ClassSpace, CropKey, CropRecord, Side, SplitPlan};

/// One line of a prediction file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionLine {
    pub patient_id: String,
    pub lesion_id: u32,
    pub slice_index: u32,
    pub scores: Vec<f64>,
    pub class_space: ClassSpace,
    pub seed: u64,
    pub model_tag: String,
}

/// Per-crop class scores of one model run.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub model_tag: String,
    pub seed: u64,
    pub class_space: ClassSpace,
    pub scores: BTreeMap<CropKey, Vec<f64>>,
}

impl PredictionSet {
    /// Group prediction lines by `(model_tag, seed)`, validating each line.
    pub fn from_lines(lines: Vec<PredictionLine>) -> Result<Vec<PredictionSet>, MetricsError> {
        let mut sets: BTreeMap<(String, u64), PredictionSet> = BTreeMap::new();
        for (i, line) in lines.into_iter().enumerate() {
            let n = line.class_space.n_classes();
            if line.scores.len() != n {
                return Err(MetricsError::InvalidPrediction(format!(
                    "line {}: {} scores for {}",
                    i + 1,
                    line.scores.len(),
                    line.class_space
                )));
            }
            if let Some(s) = line.scores.iter().find(|s| !(s.is_finite() && (0.0..=1.0).contains(*s))) {
                return Err(MetricsError::InvalidPrediction(format!(
                    "line {}: score {s} outside [0, 1]",
                    i + 1
                )));
            }
            let set = sets
                .entry((line.model_tag.clone(), line.seed))
                .or_insert_with(|| PredictionSet {
                    model_tag: line.model_tag.clone(),
                    seed: line.seed,
                    class_space: line.class_space,
                    scores: BTreeMap::new(),
                });
            if set.class_space != line.class_space {
                return Err(MetricsError::ClassSpaceMismatch {
                    expected: set.class_space,
                    found: line.class_space,
                });
            }
            let key = CropKey {
                patient_id: line.patient_id,
                lesion_id: line.lesion_id,
                slice_index: line.slice_index,
            };
            if set.scores.insert(key.clone(), line.scores).is_some() {
                return Err(MetricsError::DuplicateKey(key.to_string()));
            }
        }
        Ok(sets.into_values().collect())
    }

    pub fn read(reader: impl BufRead) -> Result<Vec<PredictionSet>, MetricsError> {
        let lines: Vec<PredictionLine> = read_jsonl(reader)?;
        Self::from_lines(lines)
    }

    pub fn to_lines(&self) -> Vec<PredictionLine> {
        self.scores
            .iter()
            .map(|(k, s)| PredictionLine {
                patient_id: k.patient_id.clone(),
                lesion_id: k.lesion_id,
                slice_index: k.slice_index,
                scores: s.clone(),
                class_space: self.class_space,
                seed: self.seed,
                model_tag: self.model_tag.clone(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub name: String,
    pub support: usize,
    pub counts: ConfusionCounts,
    pub f1: f64,
    pub f1_degenerate: bool,
    pub specificity: Option<f64>,
    pub sensitivity: Option<f64>,
    pub auc: Option<f64>,
}

/// Metrics of one prediction set against one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedScores {
    pub model_tag: String,
    pub seed: u64,
    pub class_space: ClassSpace,
    pub resolution: u32,
    pub n_crops: usize,
    pub classes: Vec<ClassScores>,
    pub weighted_auc: Option<f64>,
    /// Mean F1 over all classes, degenerate ones counting 0.
    pub macro_f1: f64,
    pub hamming: f64,
    pub warnings: Vec<String>,
}

/// Score the test side of `plan` against `preds` in `grouping` class space.
pub fn score_predictions(
    manifest: &[CropRecord],
    plan: &SplitPlan,
    preds: &PredictionSet,
    grouping: ClassSpace,
) -> Result<SeedScores, MetricsError> {
    if preds.class_space != grouping {
        return Err(MetricsError::ClassSpaceMismatch {
            expected: grouping,
            found: preds.class_space,
        });
    }
    let test = plan.select(manifest, Side::Test);
    if test.is_empty() {
        return Err(MetricsError::Empty);
    }
    let resolutions: BTreeSet<u32> = test.iter().map(|r| r.resolution).collect();
    if resolutions.len() > 1 {
        return Err(MetricsError::MixedResolutions(resolutions.into_iter().collect()));
    }
    let mut seen = BTreeSet::new();
    let mut truth = Vec::with_capacity(test.len());
    let mut scores = Vec::with_capacity(test.len());
    for r in &test {
        let key = r.key();
        let s = preds
            .scores
            .get(&key)
            .ok_or_else(|| MetricsError::MissingPrediction(key.to_string()))?;
        if !seen.insert(key.clone()) {
            return Err(MetricsError::DuplicateKey(key.to_string()));
        }
        truth.push(grouping.encode(&r.labels));
        scores.push(s.clone());
    }
    if let Some(extra) = preds.scores.keys().find(|k| !seen.contains(*k)) {
        return Err(MetricsError::UnexpectedPrediction(extra.to_string()));
    }

    let predicted = binarize(&scores, DEFAULT_THRESHOLD);
    let counts = ConfusionCounts::per_class(&truth, &predicted)?;
    let mut warnings = Vec::new();
    let names = grouping.class_names();
    let classes: Vec<ClassScores> = counts
        .iter()
        .enumerate()
        .map(|(c, cc)| {
            let f1 = f1_from_counts(cc);
            let (specificity, sensitivity) = spec_sens(cc);
            let col_s: Vec<f64> = scores.iter().map(|r| r[c]).collect();
            let col_t: Vec<bool> = truth.iter().map(|r| r[c]).collect();
            let auc = auc_binary(&col_s, &col_t);
            if auc.is_none() {
                warnings.push(format!("class {} has a single outcome on the test side; AUC excluded", names[c]));
            }
            if f1.degenerate {
                warnings.push(format!("class {} absent and never predicted; F1 reported as 0", names[c]));
            }
            ClassScores {
                name: names[c].to_owned(),
                support: cc.tp + cc.fn_,
                counts: *cc,
                f1: f1.f1,
                f1_degenerate: f1.degenerate,
                specificity,
                sensitivity,
                auc,
            }
        })
        .collect();
    let per_class_auc: Vec<Option<f64>> = classes.iter().map(|c| c.auc).collect();
    let support: Vec<usize> = classes.iter().map(|c| c.support).collect();
    let weighted_auc = weighted_average(&per_class_auc, &support);
    if weighted_auc.is_none() {
        warnings.push("every class is degenerate; weighted AUC undefined".to_owned());
    }
    let macro_f1 = classes.iter().map(|c| c.f1).sum::<f64>() / classes.len() as f64;
    Ok(SeedScores {
        model_tag: preds.model_tag.clone(),
        seed: preds.seed,
        class_space: grouping,
        resolution: test[0].resolution,
        n_crops: test.len(),
        classes,
        weighted_auc,
        macro_f1,
        hamming: hamming(&truth, &predicted)?,
        warnings,
    })
}

/// A metric across seeds. `half_width` is absent with fewer than two
/// defined values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: Option<f64>,
    pub half_width: Option<f64>,
    pub n: usize,
}

impl Summary {
    pub fn of(values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let defined: Vec<f64> = values.into_iter().flatten().collect();
        let n = defined.len();
        match n {
            0 => Summary { mean: None, half_width: None, n },
            1 => Summary { mean: Some(defined[0]), half_width: None, n },
            _ => {
                let ci = aggregate_ci(&defined).expect("n >= 2");
                Summary {
                    mean: Some(ci.mean),
                    half_width: Some(ci.half_width),
                    n,
                }
            }
        }
    }

    pub fn render(&self) -> String {
        match (self.mean, self.half_width) {
            (Some(m), Some(h)) => format!("{m:.2}±{h:.2}"),
            (Some(m), None) => format!("{m:.2}"),
            _ => "n/a".to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub name: String,
    pub f1: Summary,
    pub specificity: Summary,
    pub sensitivity: Summary,
    pub auc: Summary,
}

/// Metrics of one model at one resolution, aggregated over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model_tag: String,
    pub class_space: ClassSpace,
    pub resolution: u32,
    pub n_seeds: usize,
    pub seeds: Vec<u64>,
    pub weighted_auc: Summary,
    pub macro_f1: Summary,
    pub hamming: Summary,
    pub classes: Vec<ClassSummary>,
    pub per_seed: Vec<SeedScores>,
}

/// Fold per-seed scores of one model into a report.
pub fn aggregate_seeds(runs: &[SeedScores]) -> Result<MetricsReport, MetricsError> {
    let first = runs.first().ok_or(MetricsError::Empty)?;
    for r in runs {
        if r.model_tag != first.model_tag || r.class_space != first.class_space || r.resolution != first.resolution {
            return Err(MetricsError::InvalidPrediction(format!(
                "cannot aggregate {}/{}/{} with {}/{}/{}",
                r.model_tag, r.class_space, r.resolution, first.model_tag, first.class_space, first.resolution
            )));
        }
    }
    let classes = (0..first.classes.len())
        .map(|c| ClassSummary {
            name: first.classes[c].name.clone(),
            f1: Summary::of(runs.iter().map(|r| Some(r.classes[c].f1))),
            specificity: Summary::of(runs.iter().map(|r| r.classes[c].specificity)),
            sensitivity: Summary::of(runs.iter().map(|r| r.classes[c].sensitivity)),
            auc: Summary::of(runs.iter().map(|r| r.classes[c].auc)),
        })
        .collect();
    Ok(MetricsReport {
        model_tag: first.model_tag.clone(),
        class_space: first.class_space,
        resolution: first.resolution,
        n_seeds: runs.len(),
        seeds: runs.iter().map(|r| r.seed).collect(),
        weighted_auc: Summary::of(runs.iter().map(|r| r.weighted_auc)),
        macro_f1: Summary::of(runs.iter().map(|r| Some(r.macro_f1))),
        hamming: Summary::of(runs.iter().map(|r| Some(r.hamming))),
        classes,
        per_seed: runs.to_vec(),
    })
}

/// Text table with one row per model and one column group per resolution:
/// weighted AUC, F1 of the first class (RAS under 3-class grouping), its
/// specificity and sensitivity, and Hamming loss.
pub fn render_table(reports: &[MetricsReport]) -> String {
    let resolutions: BTreeSet<u32> = reports.iter().map(|r| r.resolution).collect();
    let mut models: Vec<&str> = Vec::new();
    for r in reports {
        if !models.contains(&r.model_tag.as_str()) {
            models.push(&r.model_tag);
        }
    }
    let lead = reports
        .first()
        .and_then(|r| r.classes.first())
        .map(|c| c.name.clone())
        .unwrap_or_default();
    let columns = [
        "AUC".to_owned(),
        format!("F1 {lead}"),
        format!("Spec {lead}"),
        format!("Sens {lead}"),
        "Hamming".to_owned(),
    ];
    let cell = 12;
    let name_w = models.iter().map(|m| m.len()).max().unwrap_or(0).max(5);
    let mut out = String::new();
    let _ = write!(out, "{:name_w$}", "");
    for r in &resolutions {
        let _ = write!(out, " | {:^w$}", format!("{r}x{r}"), w = columns.len() * (cell + 3) - 3);
    }
    out.push('\n');
    let _ = write!(out, "{:name_w$}", "model");
    for _ in &resolutions {
        for c in &columns {
            let _ = write!(out, " | {c:^cell$}");
        }
    }
    out.push('\n');
    for m in models {
        let _ = write!(out, "{m:name_w$}");
        for res in &resolutions {
            let report = reports.iter().find(|r| r.model_tag == m && r.resolution == *res);
            let cells: Vec<String> = match report {
                Some(r) => {
                    let c0 = &r.classes[0];
                    vec![
                        r.weighted_auc.render(),
                        c0.f1.render(),
                        c0.specificity.render(),
                        c0.sensitivity.render(),
                        r.hamming.render(),
                    ]
                }
                None => vec!["-".to_owned(); columns.len()],
            };
            for c in cells {
                let _ = write!(out, " | {c:^cell$}");
            }
        }
        out.push('\n');
    }
    out
}
