use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{PipelineError, Result};

/// Disease labels and the binary Normal/Abnormal labels; a manifest uses one
/// family or the other.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Pneumonia,
    Atelectasis,
    Pneumothorax,
    #[serde(rename = "Pleural Effusion")]
    PleuralEffusion,
    #[serde(rename = "No finding")]
    NoFinding,
    Normal,
    Abnormal,
}

impl Label {
    pub const DISEASE: [Label; 5] =
        [Label::Pneumonia, Label::Atelectasis, Label::Pneumothorax, Label::PleuralEffusion, Label::NoFinding];
    pub const BINARY: [Label; 2] = [Label::Normal, Label::Abnormal];

    pub fn is_binary(self) -> bool {
        matches!(self, Label::Normal | Label::Abnormal)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Pneumonia => "Pneumonia",
            Label::Atelectasis => "Atelectasis",
            Label::Pneumothorax => "Pneumothorax",
            Label::PleuralEffusion => "Pleural Effusion",
            Label::NoFinding => "No finding",
            Label::Normal => "Normal",
            Label::Abnormal => "Abnormal",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self> {
        Label::DISEASE
            .iter()
            .chain(&Label::BINARY)
            .copied()
            .find(|l| l.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| PipelineError::Manifest(format!("unknown label {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub image_id: String,
    pub path: PathBuf,
    pub label: Label,
    #[serde(default, deserialize_with = "empty_as_none")]
    pub split: Option<String>,
}

fn empty_as_none<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<String>, D::Error> {
    let s: Option<String> = Option::deserialize(d)?;
    Ok(s.filter(|s| !s.trim().is_empty()))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DatasetManifest {
    pub rows: Vec<ManifestRow>,
}

impl DatasetManifest {
    pub fn new(rows: Vec<ManifestRow>) -> Result<Self> {
        let m = Self { rows };
        m.validate()?;
        Ok(m)
    }

    /// Unique ids and a single label family.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for r in &self.rows {
            if !seen.insert(r.image_id.as_str()) {
                return Err(PipelineError::Manifest(format!("duplicate image_id {:?}", r.image_id)));
            }
        }
        if let Some(first) = self.rows.first() {
            if let Some(r) = self.rows.iter().find(|r| r.label.is_binary() != first.label.is_binary()) {
                return Err(PipelineError::Manifest(format!(
                    "label {} of {:?} mixes binary and disease labels",
                    r.label, r.image_id
                )));
            }
        }
        Ok(())
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut rows = Vec::new();
        for rec in rdr.deserialize::<CsvRow>() {
            let rec = rec.map_err(|e| PipelineError::Manifest(e.to_string()))?;
            rows.push(ManifestRow {
                image_id: rec.image_id,
                path: rec.path,
                label: rec.label.parse()?,
                split: rec.split.filter(|s| !s.is_empty()),
            });
        }
        Self::new(rows)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text).map_err(|e| PipelineError::Manifest(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    /// Reads CSV, or JSON when the extension is `.json`. Relative image paths
    /// are resolved against the manifest's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let io = |e: std::io::Error| PipelineError::Io { path: path.display().to_string(), source: e };
        let text = std::fs::read_to_string(path).map_err(io)?;
        let mut m = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::from_json(&text)?
        } else {
            Self::from_csv_reader(text.as_bytes())?
        };
        let base = path.parent().unwrap_or(Path::new(""));
        for r in &mut m.rows {
            if r.path.is_relative() {
                r.path = base.join(&r.path);
            }
        }
        Ok(m)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(CsvRow {
                image_id: r.image_id.clone(),
                path: r.path.clone(),
                label: r.label.to_string(),
                split: r.split.clone(),
            })
            .map_err(|e| PipelineError::Manifest(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| PipelineError::Manifest(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| PipelineError::Manifest(e.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.rows.iter().map(|r| r.image_id.as_str())
    }
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    image_id: String,
    path: PathBuf,
    label: String,
    #[serde(default)]
    split: Option<String>,
}
