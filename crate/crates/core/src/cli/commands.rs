use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::io::{jsonl, load_manifest, load_mask, load_split, load_volume, read_study, resolve, write_file};
use super::{
    BalanceArgs, Cli, CliError, Command, PreprocessArgs, ScoreArgs, SplitArgs, StatsArgs, SynthArgs, ValidateArgs,
    VolumeFormat,
};
use crate::dataset::{
    balance_train, class_distribution, label_correlation, lesion_labels, make_split, validate_study, ClassSpace,
    CropRecord, MutationClass, Side, StudyEntry,
};
use crate::lesion::{crop_filename, encode_png, render_crops, select_slices, PreprocessConfig};
use crate::metrics::{aggregate_seeds, render_table, score_predictions, MetricsReport, PredictionSet, SeedScores};
use crate::synth::{
    gzip_bytes, synth_patient, write_dicom_series, write_nifti, write_nifti_mask, SynthConfig, SynthLesion,
};
use crate::volume::{RescaleParams, Volume};

type Out<'a> = &'a mut (dyn Write + Send);

pub fn dispatch(cli: &Cli, out: Out<'_>) -> Result<(), CliError> {
    let dry = cli.dry_run;
    match &cli.command {
        Command::Synth(a) => synth(a, dry, out),
        Command::Preprocess(a) => preprocess(a, dry, out),
        Command::Split(a) => split(a, dry, out),
        Command::Balance(a) => balance(a, dry, out),
        Command::Score(a) => score(a, dry, out),
        Command::Stats(a) => stats(a, out),
        Command::Validate(a) => validate(a, out),
    }
}

fn default_seed() -> u64 {
    std::env::var("HEPACROP_SEED")
        .ok()
        .and_then(|s| s.split(',').next().and_then(|x| x.trim().parse().ok()))
        .unwrap_or(crate::DEFAULT_SEEDS[0])
}

fn pretty_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Per-patient work runs in bounded batches; results are written in input
/// order after each batch.
fn batch_size() -> usize {
    2 * rayon::current_num_threads().max(1)
}

#[derive(Serialize)]
struct TruthLine<'a> {
    patient_id: &'a str,
    days_ct_to_biopsy: i64,
    lesions: &'a [SynthLesion],
}

fn integer_hu(volume: &Volume) -> Result<Volume, CliError> {
    let data = volume.data().iter().map(|v| v.round()).collect();
    Volume::new(*volume.geometry(), data, volume.source_id()).map_err(|e| CliError::Validation(e.to_string()))
}

fn synth(a: &SynthArgs, dry: bool, out: Out<'_>) -> Result<(), CliError> {
    let cfg = SynthConfig {
        n_patients: a.patients,
        lesions_per_patient: (a.min_lesions, a.max_lesions),
        seed: a.seed.unwrap_or_else(default_seed),
        ..SynthConfig::default()
    };
    cfg.validate()?;
    if dry {
        writeln!(
            out,
            "synth: {} patients, seed {}, {:?} volumes into {}",
            cfg.n_patients,
            cfg.seed,
            a.format,
            a.out.display()
        )?;
        return Ok(());
    }
    let mut study = Vec::new();
    let mut stdout_study = Vec::new();
    let mut truth = Vec::new();
    let mut lesions = 0usize;
    let indices: Vec<usize> = (0..cfg.n_patients).collect();
    for chunk in indices.chunks(batch_size()) {
        let patients = chunk
            .par_iter()
            .map(|&i| synth_patient(&cfg, i))
            .collect::<Result<Vec<_>, _>>()?;
        for p in patients {
            let volume_rel = match a.format {
                VolumeFormat::Nifti => format!("volumes/{}.nii", p.patient_id),
                VolumeFormat::NiftiGz => format!("volumes/{}.nii.gz", p.patient_id),
                VolumeFormat::Dicom => format!("volumes/{}", p.patient_id),
            };
            let mask_rel = format!("masks/{}.nii", p.patient_id);
            match a.format {
                VolumeFormat::Nifti => write_file(&a.out.join(&volume_rel), &write_nifti(&p.volume))?,
                VolumeFormat::NiftiGz => write_file(&a.out.join(&volume_rel), &gzip_bytes(&write_nifti(&p.volume)))?,
                VolumeFormat::Dicom => {
                    let rescale = RescaleParams::new(1.0, -1024.0).expect("nonzero slope");
                    let files = write_dicom_series(&integer_hu(&p.volume)?, rescale)?;
                    for (k, bytes) in files.iter().enumerate() {
                        write_file(&a.out.join(&volume_rel).join(format!("slice_{k:04}.dcm")), bytes)?;
                    }
                }
            }
            write_file(&a.out.join(&mask_rel), &write_nifti_mask(&p.mask))?;
            let joined = |rel: &str| a.out.join(rel).to_string_lossy().into_owned();
            stdout_study.push(p.study_entry(&joined(&volume_rel), &joined(&mask_rel)));
            study.push(p.study_entry(&volume_rel, &mask_rel));
            truth.push(serde_json::to_string(&TruthLine {
                patient_id: &p.patient_id,
                days_ct_to_biopsy: p.days_ct_to_biopsy,
                lesions: &p.lesions,
            })?);
            lesions += p.lesions.len();
        }
    }
    write_file(&a.out.join("study.jsonl"), &jsonl(&study)?)?;
    let mut truth_bytes = truth.join("\n").into_bytes();
    truth_bytes.push(b'\n');
    write_file(&a.out.join("truth.jsonl"), &truth_bytes)?;
    out.write_all(&jsonl(&stdout_study)?)?;
    log::info!(
        "event=synth_done patients={} lesions={} seed={} out={}",
        study.len(),
        lesions,
        cfg.seed,
        a.out.display()
    );
    Ok(())
}

struct PatientOutput {
    records: BTreeMap<usize, Vec<CropRecord>>,
    files: Vec<(PathBuf, Vec<u8>)>,
    skipped: usize,
}

fn process_entry(entry: &StudyEntry, base: &Path, cfg: &PreprocessConfig, res: &[usize]) -> Result<PatientOutput, CliError> {
    let volume = load_volume(&resolve(base, &entry.volume_path), &entry.patient_id)?;
    let mask = load_mask(&resolve(base, &entry.mask_path), &entry.patient_id)?;
    let mut records = BTreeMap::new();
    let mut files = Vec::new();
    mask.check_congruent(&volume).map_err(|e| CliError::Validation(format!("{}: {e}", entry.patient_id)))?;
    // Slice selection does not depend on the output resolution.
    let (selected, skipped) = select_slices(&mask, cfg)?;
    let skipped = skipped.len();
    for &r in res {
        let crops = render_crops(&volume, &entry.patient_id, &selected, cfg, r);
        let mut recs = Vec::with_capacity(crops.len());
        for crop in &crops {
            let labels = entry.labels_for(crop.lesion_id).ok_or_else(|| {
                CliError::Validation(format!("{}: no labels for lesion {}", entry.patient_id, crop.lesion_id))
            })?;
            let name = crop_filename(&entry.patient_id, crop.lesion_id, crop.slice_index, r);
            files.push((PathBuf::from("crops").join(&name), encode_png(crop)?));
            recs.push(CropRecord {
                patient_id: entry.patient_id.clone(),
                lesion_id: crop.lesion_id,
                slice_index: crop.slice_index as u32,
                image_path: format!("crops/{name}"),
                resolution: r as u32,
                labels,
                slice_spacing_mm: volume.spacing()[2],
                days_ct_to_biopsy: entry.days_ct_to_biopsy,
            });
        }
        records.insert(r, recs);
    }
    log::info!(
        "event=patient_done patient_id={} crops={} skipped_lesions={}",
        entry.patient_id,
        records.values().next().map_or(0, Vec::len),
        skipped
    );
    Ok(PatientOutput { records, files, skipped })
}

fn preprocess(a: &PreprocessArgs, dry: bool, out: Out<'_>) -> Result<(), CliError> {
    let cfg = PreprocessConfig {
        epsilon: a.eps,
        border_mm: a.border_mm,
        resolution: a.res.first().copied().unwrap_or(128),
        window_center: a.window_center,
        window_width: a.window_width,
        mean_pre_opening: a.mean_pre_opening,
    };
    let mut res = a.res.clone();
    res.sort_unstable();
    res.dedup();
    if res.is_empty() {
        return Err(CliError::Validation("no resolution given".into()));
    }
    for &r in &res {
        PreprocessConfig { resolution: r, ..cfg.clone() }.validate()?;
    }
    let (entries, base) = read_study(&a.study)?;
    if entries.is_empty() {
        return Err(CliError::Validation(format!("study {} has no entries", a.study)));
    }
    if dry {
        writeln!(
            out,
            "preprocess: {} patients, eps {}, border {} mm, window {}/{}, resolutions {:?} into {}",
            entries.len(),
            cfg.epsilon,
            cfg.border_mm,
            cfg.window_center,
            cfg.window_width,
            res,
            a.out.display()
        )?;
        return Ok(());
    }
    let mut manifests: BTreeMap<usize, Vec<CropRecord>> = res.iter().map(|&r| (r, Vec::new())).collect();
    let mut skipped = 0;
    for chunk in entries.chunks(batch_size()) {
        let outputs = chunk
            .par_iter()
            .map(|e| process_entry(e, &base, &cfg, &res))
            .collect::<Result<Vec<_>, _>>()?;
        for o in outputs {
            for (path, bytes) in &o.files {
                write_file(&a.out.join(path), bytes)?;
            }
            for (r, recs) in o.records {
                manifests.get_mut(&r).expect("known resolution").extend(recs);
            }
            skipped += o.skipped;
        }
    }
    for (r, recs) in &manifests {
        write_file(&a.out.join(format!("manifest_{r}.jsonl")), &jsonl(recs)?)?;
    }
    log::info!(
        "event=preprocess_done patients={} crops_per_resolution={} skipped_lesions={} out={}",
        entries.len(),
        manifests.values().next().map_or(0, Vec::len),
        skipped,
        a.out.display()
    );
    Ok(())
}

fn split(a: &SplitArgs, dry: bool, out: Out<'_>) -> Result<(), CliError> {
    let seeds = a.seeds.resolve();
    let manifest = load_manifest(&a.manifest)?;
    if dry {
        for s in &seeds {
            writeln!(out, "split: seed {s} -> {}", a.out.join(format!("split_seed{s}.json")).display())?;
        }
        return Ok(());
    }
    for &seed in &seeds {
        let plan = make_split(&manifest, seed, a.train_fraction, a.candidates)?;
        log::info!(
            "event=split_done seed={seed} train_fraction={:.4} divergence={:.4} train_images={} test_images={}",
            plan.achieved_train_fraction,
            plan.label_divergence,
            plan.train_images,
            plan.test_images
        );
        write_file(&a.out.join(format!("split_seed{seed}.json")), &pretty_json(&plan)?)?;
    }
    Ok(())
}

fn balance(a: &BalanceArgs, dry: bool, out: Out<'_>) -> Result<(), CliError> {
    let manifest = load_manifest(&a.manifest)?;
    let plan = load_split(&a.split)?;
    let seed = a.seed.unwrap_or(plan.seed);
    let train: Vec<CropRecord> = plan.select(&manifest, Side::Train).into_iter().cloned().collect();
    let sample = balance_train(&train, seed)?;
    if dry {
        writeln!(
            out,
            "balance: {} train records -> {} (target {} per group) into {}",
            train.len(),
            sample.indices.len(),
            sample.target,
            a.out.display()
        )?;
        return Ok(());
    }
    let balanced: Vec<CropRecord> = sample.records(&train).cloned().collect();
    write_file(&a.out, &jsonl(&balanced)?)?;
    let sizes: Vec<String> = sample
        .group_sizes()
        .iter()
        .map(|(c, n)| format!("{}:{n}", c.name()))
        .collect();
    log::info!("event=balance_done seed={seed} target={} groups={}", sample.target, sizes.join(","));
    Ok(())
}

fn score(a: &ScoreArgs, dry: bool, out: Out<'_>) -> Result<(), CliError> {
    let grouping = ClassSpace::from_group(a.group)
        .ok_or_else(|| CliError::Validation(format!("grouping {} is not 3 or 5", a.group)))?;
    if a.manifest.len() != 1 && a.manifest.len() != a.pred.len() {
        return Err(CliError::Validation(format!(
            "{} manifests for {} prediction files",
            a.manifest.len(),
            a.pred.len()
        )));
    }
    let mut plans = BTreeMap::new();
    for p in &a.split {
        let plan = load_split(p)?;
        if plans.insert(plan.seed, plan).is_some() {
            return Err(CliError::Validation(format!("two splits share a seed ({})", p.display())));
        }
    }
    if dry {
        writeln!(
            out,
            "score: {} prediction files against {} splits (seeds {:?}), {grouping}",
            a.pred.len(),
            plans.len(),
            plans.keys().collect::<Vec<_>>()
        )?;
        return Ok(());
    }
    let mut manifests = Vec::new();
    for m in &a.manifest {
        manifests.push(load_manifest(m)?);
    }
    let mut groups: BTreeMap<(String, u32), Vec<SeedScores>> = BTreeMap::new();
    let mut order: Vec<(String, u32)> = Vec::new();
    for (i, path) in a.pred.iter().enumerate() {
        let manifest = &manifests[if manifests.len() == 1 { 0 } else { i }];
        let file = std::fs::File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        for set in PredictionSet::read(std::io::BufReader::new(file))? {
            let plan = plans
                .get(&set.seed)
                .ok_or_else(|| CliError::Validation(format!("no split for seed {} ({})", set.seed, path.display())))?;
            let scores = score_predictions(manifest, plan, &set, grouping)?;
            for w in &scores.warnings {
                log::warn!("event=score_warning model={} seed={} message=\"{w}\"", scores.model_tag, scores.seed);
            }
            let key = (scores.model_tag.clone(), scores.resolution);
            if !order.contains(&key) {
                order.push(key.clone());
            }
            groups.entry(key).or_default().push(scores);
        }
    }
    let mut reports: Vec<MetricsReport> = Vec::new();
    for key in &order {
        let mut runs = groups.remove(key).expect("grouped");
        runs.sort_by_key(|r| r.seed);
        if let Some(w) = runs.windows(2).find(|w| w[0].seed == w[1].seed) {
            return Err(CliError::Validation(format!("model {} scored twice for seed {}", key.0, w[0].seed)));
        }
        reports.push(aggregate_seeds(&runs)?);
    }
    let table = render_table(&reports);
    if let Some(p) = &a.report {
        write_file(p, &pretty_json(&reports)?)?;
    }
    if let Some(p) = &a.table {
        write_file(p, table.as_bytes())?;
    }
    out.write_all(table.as_bytes())?;
    Ok(())
}

#[derive(Serialize)]
struct StatsOutput {
    distribution: crate::dataset::ClassDistribution,
    correlation: Option<crate::dataset::CorrelationMatrix>,
}

fn stats(a: &StatsArgs, out: Out<'_>) -> Result<(), CliError> {
    let manifest = load_manifest(&a.manifest)?;
    let distribution = class_distribution(&manifest)?;
    let correlation = label_correlation(&lesion_labels(&manifest)).ok();
    if a.json {
        out.write_all(&pretty_json(&StatsOutput { distribution, correlation })?)?;
        return Ok(());
    }
    let mut s = String::new();
    let names: Vec<&str> = MutationClass::ALL.iter().map(|c| c.name()).collect();
    let _ = write!(s, "{:<10}{:>6}", "level", "n");
    for n in &names {
        let _ = write!(s, "{n:>8}");
    }
    s.push('\n');
    for (level, n, pct) in [
        ("patients", distribution.n_patients, distribution.patients),
        ("lesions", distribution.n_lesions, distribution.lesions),
        ("images", distribution.n_images, distribution.images),
    ] {
        let _ = write!(s, "{level:<10}{n:>6}");
        for v in pct {
            let _ = write!(s, "{:>7.0}%", v);
        }
        s.push('\n');
    }
    if let Some(m) = &correlation {
        s.push_str("\nlesion label correlation\n");
        let _ = write!(s, "{:<8}", "");
        for n in &names {
            let _ = write!(s, "{n:>8}");
        }
        s.push('\n');
        for (i, row) in m.values.iter().enumerate() {
            let _ = write!(s, "{:<8}", names[i]);
            for v in row {
                match v {
                    Some(v) => {
                        let _ = write!(s, "{v:>8.2}");
                    }
                    None => {
                        let _ = write!(s, "{:>8}", "n/a");
                    }
                }
            }
            s.push('\n');
        }
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

fn validate(a: &ValidateArgs, out: Out<'_>) -> Result<(), CliError> {
    let manifest = load_manifest(&a.manifest)?;
    let violations = validate_study(&manifest);
    for v in &violations {
        writeln!(
            out,
            "record {} {}/{}/{}: {}: {}",
            v.index + 1,
            v.patient_id,
            v.lesion_id,
            v.slice_index,
            v.kind,
            v.detail
        )?;
    }
    if violations.is_empty() {
        writeln!(out, "{} records ok", manifest.len())?;
        Ok(())
    } else {
        Err(CliError::Validation(format!("{} violations in {} records", violations.len(), manifest.len())))
    }
}
