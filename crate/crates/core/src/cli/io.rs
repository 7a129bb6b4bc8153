use std::fs;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use crate::dataset::{read_jsonl, read_manifest, CropRecord, SplitPlan, StudyEntry};
use crate::volume::{parse_dicom_series, parse_nifti, parse_nifti_mask, parse_nifti_pair, AnnotationMask, Volume};

use super::CliError;

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn with_path<E: std::fmt::Display>(path: &Path) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

/// A NIfTI file (`.nii`, `.nii.gz`, or a `.hdr` with its `.img`), or a
/// directory holding one DICOM series.
pub fn load_volume(path: &Path, source_id: &str) -> Result<Volume, CliError> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(with_path(path))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        let slices = files.iter().map(|f| read_bytes(f)).collect::<Result<Vec<_>, _>>()?;
        return parse_dicom_series(&slices, source_id).map_err(with_path(path));
    }
    if path.extension().is_some_and(|e| e == "hdr") {
        let header = read_bytes(path)?;
        let image = read_bytes(&path.with_extension("img"))?;
        return parse_nifti_pair(&header, &image, source_id).map_err(with_path(path));
    }
    parse_nifti(&read_bytes(path)?, source_id).map_err(with_path(path))
}

pub fn load_mask(path: &Path, source_id: &str) -> Result<AnnotationMask, CliError> {
    parse_nifti_mask(&read_bytes(path)?, source_id).map_err(with_path(path))
}

/// Study lines from a file or, for `-`, standard input. Returns the entries
/// and the directory relative paths in them are resolved against.
pub fn read_study(source: &str) -> Result<(Vec<StudyEntry>, PathBuf), CliError> {
    if source == "-" {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text)?;
        Ok((read_jsonl(text.as_bytes())?, PathBuf::from(".")))
    } else {
        let path = Path::new(source);
        let file = fs::File::open(path).map_err(with_path(path))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((read_jsonl(BufReader::new(file))?, base))
    }
}

pub fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn load_manifest(path: &Path) -> Result<Vec<CropRecord>, CliError> {
    read_manifest(path).map_err(|e| match e {
        crate::dataset::DatasetError::Io(io) => CliError::Io(format!("{}: {io}", path.display())),
        other => other.into(),
    })
}

pub fn load_split(path: &Path) -> Result<SplitPlan, CliError> {
    let text = fs::read_to_string(path).map_err(with_path(path))?;
    serde_json::from_str(&text).map_err(with_path(path))
}

/// Write `bytes` to `path`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(with_path(parent))?;
        }
    }
    fs::write(path, bytes).map_err(with_path(path))
}

pub fn jsonl<T: serde::Serialize>(items: &[T]) -> Result<Vec<u8>, CliError> {
    let mut out = Vec::new();
    crate::dataset::write_jsonl(&mut out, items)?;
    Ok(out)
}
