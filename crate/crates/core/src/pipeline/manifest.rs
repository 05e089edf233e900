use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Top-level network domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Social,
    Biological,
    Informational,
    Technological,
}

impl Domain {
    pub const ALL: [Domain; 4] = [
        Domain::Social,
        Domain::Biological,
        Domain::Informational,
        Domain::Technological,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Domain::Social => "social",
            Domain::Biological => "biological",
            Domain::Informational => "informational",
            Domain::Technological => "technological",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Domain::ALL
            .into_iter()
            .find(|d| d.name() == lower)
            .ok_or_else(|| Error::Manifest(format!("unknown domain {s:?}")))
    }
}

/// One network in a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub path: PathBuf,
    pub domain: Domain,
    #[serde(default)]
    pub subdomain: Option<String>,
    #[serde(default)]
    pub directed: bool,
    #[serde(default)]
    pub weighted: bool,
    #[serde(default)]
    pub multi: bool,
}

/// CSV row before validation; the domain may still be blank in a stub.
#[derive(Debug, Deserialize, Serialize)]
struct Row {
    id: String,
    path: String,
    domain: String,
    #[serde(default)]
    subdomain: String,
    #[serde(default, deserialize_with = "flag")]
    directed: bool,
    #[serde(default, deserialize_with = "flag")]
    weighted: bool,
    #[serde(default, deserialize_with = "flag")]
    multi: bool,
}

fn flag<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<bool, D::Error> {
    let s = String::deserialize(d)?;
    match s.trim().to_ascii_lowercase().as_str() {
        "" | "0" | "false" | "no" => Ok(false),
        "1" | "true" | "yes" => Ok(true),
        other => Err(serde::de::Error::custom(format!("not a boolean: {other:?}"))),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonManifest {
    List(Vec<ManifestEntry>),
    Wrapped { entries: Vec<ManifestEntry> },
}

impl CorpusManifest {
    /// Load a manifest from CSV, or from JSON when the file ends in `.json`.
    /// Relative paths are resolved against the manifest's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut text = String::new();
        File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(Error::with_path(path))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut manifest = if is_json {
            Self::from_json(&text)?
        } else {
            Self::from_csv(text.as_bytes())?
        };
        let base = path.parent().unwrap_or(Path::new(""));
        for e in &mut manifest.entries {
            if e.path.is_relative() {
                e.path = base.join(&e.path);
            }
        }
        Ok(manifest)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let entries = match serde_json::from_str(text)? {
            JsonManifest::List(entries) | JsonManifest::Wrapped { entries } => entries,
        };
        let manifest = CorpusManifest { entries };
        manifest.validate()?;
        Ok(manifest)
    }

    /// Columns: `id,path,domain,subdomain,directed,weighted,multi`; the last
    /// four may be omitted or blank.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(reader);
        let mut entries = Vec::new();
        for row in rdr.deserialize() {
            let row: Row = row?;
            if row.domain.is_empty() {
                return Err(Error::Manifest(format!(
                    "entry {:?} has no domain; fill in one of social, biological, informational, technological",
                    row.id
                )));
            }
            entries.push(ManifestEntry {
                domain: row.domain.parse()?,
                subdomain: Some(row.subdomain).filter(|s| !s.is_empty()),
                id: row.id,
                path: PathBuf::from(row.path),
                directed: row.directed,
                weighted: row.weighted,
                multi: row.multi,
            });
        }
        let manifest = CorpusManifest { entries };
        manifest.validate()?;
        Ok(manifest)
    }

    /// Ids must be non-empty and unique.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if e.id.is_empty() {
                return Err(Error::Manifest("empty network id".into()));
            }
            if !seen.insert(e.id.as_str()) {
                return Err(Error::Manifest(format!("duplicate network id {:?}", e.id)));
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for e in &self.entries {
            wtr.serialize(Row {
                id: e.id.clone(),
                path: e.path.to_string_lossy().into_owned(),
                domain: e.domain.to_string(),
                subdomain: e.subdomain.clone().unwrap_or_default(),
                directed: e.directed,
                weighted: e.weighted,
                multi: e.multi,
            })?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Write a manifest stub with blank domains for manual completion.
pub(crate) fn write_stub<W: Write>(w: W, files: &[(String, String)]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for (id, path) in files {
        wtr.serialize(Row {
            id: id.clone(),
            path: path.clone(),
            domain: String::new(),
            subdomain: String::new(),
            directed: false,
            weighted: false,
            multi: false,
        })?;
    }
    wtr.flush()?;
    Ok(())
}
