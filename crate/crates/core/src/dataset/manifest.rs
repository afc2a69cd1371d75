use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_GRADES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Split::ALL.into_iter().find(|v| v.name() == s)
    }
}

/// Where an entry came from and which augmentation produced it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    /// `"original"` or the op name of an augmented copy, e.g. `"aug3:rotate"`.
    pub lineage: String,
}

impl Provenance {
    pub fn original(source: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            lineage: "original".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub image_path: PathBuf,
    pub grade: u8,
    pub provenance: Provenance,
}

impl ManifestEntry {
    pub fn new(id: impl Into<String>, image_path: impl Into<PathBuf>, grade: u8, source: &str) -> Result<Self> {
        if usize::from(grade) >= NUM_GRADES {
            return Err(Error::param(format!("grade {grade} outside 0..=4")));
        }
        Ok(Self {
            id: id.into(),
            image_path: image_path.into(),
            grade,
            provenance: Provenance::original(source),
        })
    }

    pub fn binary_label(&self) -> u8 {
        u8::from(self.grade > 0)
    }
}

/// A manifest row that may carry a split assignment (prepared manifests).
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedRow {
    pub entry: ManifestEntry,
    pub split: Option<Split>,
}

fn manifest_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Manifest {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Read an `id_code,diagnosis` CSV. Optional columns `image_path`, `split`,
/// `source` and `lineage` are honoured; missing image paths default to
/// `<manifest dir>/<id>.png`, missing sources to the file stem.
pub fn load_manifest_rows(path: impl AsRef<Path>) -> Result<Vec<LoadedRow>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = rdr
        .headers()
        .map_err(|e| manifest_err(path, 1, e.to_string()))?
        .clone();
    if headers.get(0) != Some("id_code") || headers.get(1) != Some("diagnosis") {
        return Err(manifest_err(path, 1, "header must start with id_code,diagnosis"));
    }
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (c_path, c_split, c_source, c_lineage) = (col("image_path"), col("split"), col("source"), col("lineage"));
    let dir = path.parent().unwrap_or(Path::new("."));
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();

    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| manifest_err(path, line, e.to_string()))?;
        let id = rec.get(0).unwrap_or("").to_string();
        if id.is_empty() {
            return Err(manifest_err(path, line, "empty id_code"));
        }
        let raw = rec.get(1).unwrap_or("");
        let grade: u8 = raw
            .parse()
            .ok()
            .filter(|g| usize::from(*g) < NUM_GRADES)
            .ok_or_else(|| manifest_err(path, line, format!("diagnosis `{raw}` is not a grade in 0..=4")))?;
        if !seen.insert(id.clone()) {
            return Err(manifest_err(path, line, format!("duplicate id_code `{id}`")));
        }
        let field = |c: Option<usize>| c.and_then(|c| rec.get(c)).filter(|s| !s.is_empty());
        let image_path = match field(c_path) {
            Some(p) if Path::new(p).is_absolute() => PathBuf::from(p),
            Some(p) => dir.join(p),
            None => dir.join(format!("{id}.png")),
        };
        let split = match field(c_split) {
            Some(s) => Some(Split::parse(s).ok_or_else(|| manifest_err(path, line, format!("unknown split `{s}`")))?),
            None => None,
        };
        rows.push(LoadedRow {
            entry: ManifestEntry {
                id,
                image_path,
                grade,
                provenance: Provenance {
                    source: field(c_source).unwrap_or(&stem).to_string(),
                    lineage: field(c_lineage).unwrap_or("original").to_string(),
                },
            },
            split,
        });
    }
    Ok(rows)
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    Ok(load_manifest_rows(path)?.into_iter().map(|r| r.entry).collect())
}

/// Write rows with all optional columns. Image paths are written relative to
/// the manifest directory when possible.
pub fn save_manifest_rows<'a>(
    path: impl AsRef<Path>,
    rows: impl IntoIterator<Item = (&'a ManifestEntry, Option<Split>)>,
) -> Result<()> {
    let path = path.as_ref();
    let dir = path.parent().unwrap_or(Path::new(""));
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    w.write_record(["id_code", "diagnosis", "image_path", "split", "source", "lineage"])
        .map_err(|e| csv_io(path, e))?;
    for (e, split) in rows {
        let rel = e.image_path.strip_prefix(dir).unwrap_or(&e.image_path);
        w.write_record([
            e.id.as_str(),
            &e.grade.to_string(),
            &rel.to_string_lossy(),
            split.map(Split::name).unwrap_or(""),
            &e.provenance.source,
            &e.provenance.lineage,
        ])
        .map_err(|e| csv_io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    let kind = match e.kind() {
        csv::ErrorKind::Io(io) => io.kind(),
        _ => std::io::ErrorKind::Other,
    };
    Error::io(path, std::io::Error::new(kind, e.to_string()))
}
