use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{match_gold, parse_statements, parse_triples_document, EntityDescription, Resource};

/// One train/valid/test split. Test entities must not appear in train or
/// valid; train and valid may share entities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSpec {
    pub index: usize,
    pub train: Vec<String>,
    #[serde(default)]
    pub valid: Vec<String>,
    pub test: Vec<String>,
}

impl FoldSpec {
    fn validate(&self, known: &HashMap<String, usize>) -> Result<()> {
        let fail = |reason: String| Error::InvalidFold {
            index: self.index,
            reason,
        };
        if self.train.is_empty() {
            return Err(fail("empty train list".into()));
        }
        if self.test.is_empty() {
            return Err(fail("empty test list".into()));
        }
        for (name, list) in [("train", &self.train), ("valid", &self.valid), ("test", &self.test)] {
            let mut seen = HashSet::new();
            for iri in list {
                if !known.contains_key(iri) {
                    return Err(fail(format!("{name} lists unknown entity <{iri}>")));
                }
                if !seen.insert(iri) {
                    return Err(fail(format!("{name} lists <{iri}> twice")));
                }
            }
        }
        let fitted: HashSet<&String> = self.train.iter().chain(&self.valid).collect();
        if let Some(iri) = self.test.iter().find(|iri| fitted.contains(iri)) {
            return Err(fail(format!("<{iri}> is both a test entity and a train/valid entity")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DatasetManifest {
    pub name: String,
    pub entities: Vec<EntityDescription>,
    pub folds: Vec<FoldSpec>,
    index: HashMap<String, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ManifestStats {
    pub entities: usize,
    pub triples: usize,
    pub golds: usize,
}

impl DatasetManifest {
    /// Builds a manifest and validates every entity and fold.
    pub fn new(name: impl Into<String>, entities: Vec<EntityDescription>, folds: Vec<FoldSpec>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, e) in entities.iter().enumerate() {
            e.validate()?;
            if index.insert(e.iri().to_string(), i).is_some() {
                return Err(Error::Manifest(format!("entity <{}> listed twice", e.iri())));
            }
        }
        let mut fold_ids = HashSet::new();
        for fold in &folds {
            if !fold_ids.insert(fold.index) {
                return Err(Error::InvalidFold {
                    index: fold.index,
                    reason: "duplicate fold index".into(),
                });
            }
            fold.validate(&index)?;
        }
        Ok(DatasetManifest {
            name: name.into(),
            entities,
            folds,
            index,
        })
    }

    pub fn entity(&self, iri: &str) -> Result<&EntityDescription> {
        self.index
            .get(iri)
            .map(|&i| &self.entities[i])
            .ok_or_else(|| Error::UnknownEntity(iri.to_string()))
    }

    pub fn stats(&self) -> ManifestStats {
        ManifestStats {
            entities: self.entities.len(),
            triples: self.entities.iter().map(|e| e.triples.len()).sum(),
            golds: self
                .entities
                .iter()
                .flat_map(|e| e.gold.values())
                .map(Vec::len)
                .sum(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    name: String,
    entities: Vec<EntityEntry>,
    #[serde(default)]
    folds: Vec<FoldSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EntityEntry {
    iri: String,
    desc_file: PathBuf,
    #[serde(default)]
    gold: BTreeMap<usize, Vec<GoldEntry>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GoldEntry {
    annotator: String,
    file: PathBuf,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Loads a JSON manifest; description and gold paths resolve relative to
/// the manifest's directory.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = read(path)?;
    let file: ManifestFile =
        serde_json::from_str(&text).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));

    let mut entities = Vec::with_capacity(file.entities.len());
    for entry in file.entities {
        let desc_text = read(&base.join(&entry.desc_file))?;
        let triples = parse_triples_document(&desc_text, &entry.iri)?;
        let mut desc = EntityDescription {
            entity: Resource::iri(entry.iri.clone()),
            triples,
            gold: BTreeMap::new(),
        };
        for (k, golds) in entry.gold {
            if k == 0 {
                return Err(Error::Manifest(format!("<{}>: gold slot k=0", entry.iri)));
            }
            let mut slot = Vec::with_capacity(golds.len());
            for g in golds {
                let statements = parse_statements(&read(&base.join(&g.file))?)?;
                let mut gold = match_gold(&desc, &g.file.display().to_string(), &statements, k)?;
                gold.annotator = g.annotator;
                slot.push(gold);
            }
            desc.gold.insert(k, slot);
        }
        entities.push(desc);
    }
    DatasetManifest::new(file.name, entities, file.folds)
}
