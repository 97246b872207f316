//! Dataset manifest: CSV mapping of audio files to individual/sex/age.

use super::{Age, Sex};
use crate::error::{Error, Result};
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub individual_id: String,
    pub sex: Sex,
    pub age: Age,
}

/// Parsed and validated dataset manifest.
///
/// Invariants enforced at load time: no duplicate paths, and every
/// individual id belongs to exactly one (sex, age) stratum.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub sample_rate_expected: u32,
}

impl DatasetManifest {
    /// Reads `path,individual_id,sex,age` CSV (header required).
    /// Sex accepts M/F/male/female, age adult/juvenile, case-insensitive.
    pub fn from_csv_reader<R: std::io::Read>(reader: R, sample_rate_expected: u32) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        {
            let headers = rdr
                .headers()
                .map_err(|e| Error::Data(format!("manifest header: {e}")))?;
            let want = ["path", "individual_id", "sex", "age"];
            let got: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
            if got != want {
                return Err(Error::Data(format!(
                    "manifest header must be 'path,individual_id,sex,age', got '{}'",
                    got.join(",")
                )));
            }
        }
        let mut entries = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Data(format!("manifest row {}: {e}", i + 2)))?;
            if rec.len() != 4 {
                return Err(Error::Data(format!(
                    "manifest row {}: expected 4 fields, got {}",
                    i + 2,
                    rec.len()
                )));
            }
            entries.push(ManifestEntry {
                path: PathBuf::from(&rec[0]),
                individual_id: rec[1].to_string(),
                sex: rec[2].parse()?,
                age: rec[3].parse()?,
            });
        }
        let m = DatasetManifest { entries, sample_rate_expected };
        m.validate()?;
        Ok(m)
    }

    pub fn from_csv_path(path: &Path, sample_rate_expected: u32) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::from_csv_reader(f, sample_rate_expected)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("path,individual_id,sex,age\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{}\n",
                e.path.display(),
                e.individual_id,
                match e.sex {
                    Sex::Male => "M",
                    Sex::Female => "F",
                },
                e.age
            ));
        }
        out
    }

    fn validate(&self) -> Result<()> {
        let mut paths = BTreeSet::new();
        for e in &self.entries {
            if !paths.insert(e.path.clone()) {
                return Err(Error::Data(format!("duplicate manifest path '{}'", e.path.display())));
            }
        }
        let mut stratum_of: BTreeMap<&str, (Sex, Age)> = BTreeMap::new();
        for e in &self.entries {
            match stratum_of.get(e.individual_id.as_str()) {
                None => {
                    stratum_of.insert(&e.individual_id, (e.sex, e.age));
                }
                Some(&(s, a)) if s == e.sex && a == e.age => {}
                Some(_) => {
                    return Err(Error::Data(format!(
                        "individual '{}' appears in more than one (sex, age) group",
                        e.individual_id
                    )))
                }
            }
        }
        Ok(())
    }

    /// Individuals grouped by stratum, ids sorted for determinism.
    pub fn individuals_by_stratum(&self) -> BTreeMap<(Sex, Age), Vec<String>> {
        let mut map: BTreeMap<(Sex, Age), BTreeSet<String>> = BTreeMap::new();
        for e in &self.entries {
            map.entry((e.sex, e.age)).or_default().insert(e.individual_id.clone());
        }
        map.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect()
    }
}
