//! On-disk dataset layout: `stimuli/`, `fixation_pixels/` and an optional
//! `fixation_blobs/`, paired by file stem.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io::is_raster_path;

pub const STIMULI_DIR: &str = "stimuli";
pub const PIXELS_DIR: &str = "fixation_pixels";
pub const BLOBS_DIR: &str = "fixation_blobs";

/// Raster files in `dir` keyed by stem, in sorted order.
pub fn list_rasters(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if !path.is_file() || !is_raster_path(&path) {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            out.insert(stem.to_string(), path);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub id: String,
    pub stimulus: PathBuf,
    pub fixation_pixels: PathBuf,
    pub fixation_blob: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct DatasetLayout {
    pub root: PathBuf,
    pub entries: Vec<DatasetEntry>,
    /// Files that could not be paired or whose dimensions disagree.
    pub problems: Vec<String>,
}

impl DatasetLayout {
    pub fn looks_like(root: &Path) -> bool {
        root.join(PIXELS_DIR).is_dir()
    }

    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        let pixels_dir = root.join(PIXELS_DIR);
        let stimuli_dir = root.join(STIMULI_DIR);
        if !pixels_dir.is_dir() || !stimuli_dir.is_dir() {
            return Err(Error::InvalidInput(format!(
                "{} must contain {STIMULI_DIR}/ and {PIXELS_DIR}/",
                root.display()
            )));
        }
        let pixels = list_rasters(&pixels_dir)?;
        let stimuli = list_rasters(&stimuli_dir)?;
        let blobs = if root.join(BLOBS_DIR).is_dir() {
            list_rasters(&root.join(BLOBS_DIR))?
        } else {
            BTreeMap::new()
        };

        let mut entries = Vec::new();
        let mut problems = Vec::new();
        for (id, pix) in pixels {
            let Some(stim) = stimuli.get(&id) else {
                problems.push(format!("{}: no matching stimulus", pix.display()));
                continue;
            };
            let dims = image::image_dimensions(&pix);
            let stim_dims = image::image_dimensions(stim);
            match (dims, stim_dims) {
                (Ok(a), Ok(b)) if a == b => {}
                (Ok(a), Ok(b)) => {
                    problems.push(format!(
                        "{id}: fixation map is {}x{} but stimulus is {}x{}",
                        a.0, a.1, b.0, b.1
                    ));
                    continue;
                }
                (Err(e), _) | (_, Err(e)) => {
                    problems.push(format!("{id}: {e}"));
                    continue;
                }
            }
            entries.push(DatasetEntry {
                fixation_blob: blobs.get(&id).cloned(),
                id,
                stimulus: stim.clone(),
                fixation_pixels: pix,
            });
        }
        Ok(Self {
            root,
            entries,
            problems,
        })
    }
}
