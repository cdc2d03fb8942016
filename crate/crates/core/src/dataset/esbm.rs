//! Adapter for the ESBM benchmark directory layout.
//!
//! ```text
//! <root>/elist.txt                                  eid \t dataset \t euri ...
//! <root>/<dataset>_data/<eid>/<eid>_desc.nt
//! <root>/<dataset>_data/<eid>/<eid>_gold_top<k>_<j>.nt   j = 0, 1, ...
//! <root>/<dataset>_split/Fold<i>/{train,valid,test}.txt  one eid per line
//! ```
//!
//! `<dataset>` is `dbpedia` or `lmdb`. The directory names are fields of
//! [`EsbmLayout`] in case a local copy differs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::{match_gold, parse_statements, parse_triples_document, DatasetManifest, EntityDescription, FoldSpec, Resource};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EsbmSubset {
    Dbpedia,
    Lmdb,
    All,
}

impl EsbmSubset {
    fn datasets(self) -> &'static [&'static str] {
        match self {
            EsbmSubset::Dbpedia => &["dbpedia"],
            EsbmSubset::Lmdb => &["lmdb"],
            EsbmSubset::All => &["dbpedia", "lmdb"],
        }
    }

    fn name(self) -> &'static str {
        match self {
            EsbmSubset::Dbpedia => "dbpedia",
            EsbmSubset::Lmdb => "lmdb",
            EsbmSubset::All => "esbm",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EsbmLayout {
    pub root: PathBuf,
    pub elist: String,
    pub data_suffix: String,
    pub split_suffix: String,
    pub ks: Vec<usize>,
    pub folds: usize,
}

impl EsbmLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        EsbmLayout {
            root: root.into(),
            elist: "elist.txt".into(),
            data_suffix: "_data".into(),
            split_suffix: "_split".into(),
            ks: vec![5, 10],
            folds: 5,
        }
    }
}

struct ElistRow {
    eid: String,
    dataset: String,
    iri: String,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn read_elist(path: &Path) -> Result<Vec<ElistRow>> {
    let mut rows = Vec::new();
    for (i, line) in read(path)?.lines().enumerate() {
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        if cols.len() < 3 || cols[0].is_empty() {
            continue;
        }
        if cols[0].parse::<u64>().is_err() {
            if i == 0 {
                continue; // header
            }
            return Err(Error::Manifest(format!("{}:{}: bad entity id", path.display(), i + 1)));
        }
        rows.push(ElistRow {
            eid: cols[0].to_string(),
            dataset: cols[1].to_string(),
            iri: cols[2].to_string(),
        });
    }
    Ok(rows)
}

fn read_split(path: &Path) -> Result<Vec<String>> {
    Ok(read(path)?
        .lines()
        .filter_map(|l| l.split_whitespace().next())
        .map(str::to_string)
        .collect())
}

/// Builds a manifest from an ESBM checkout.
pub fn load_esbm(layout: &EsbmLayout, subset: EsbmSubset) -> Result<DatasetManifest> {
    let rows = read_elist(&layout.root.join(&layout.elist))?;
    let mut entities = Vec::new();
    let mut eid_to_iri = BTreeMap::new();

    for row in rows.iter().filter(|r| subset.datasets().contains(&r.dataset.as_str())) {
        let dir = layout
            .root
            .join(format!("{}{}", row.dataset, layout.data_suffix))
            .join(&row.eid);
        let desc_text = read(&dir.join(format!("{}_desc.nt", row.eid)))?;
        let triples = parse_triples_document(&desc_text, &row.iri)?;
        let mut desc = EntityDescription {
            entity: Resource::iri(row.iri.clone()),
            triples,
            gold: BTreeMap::new(),
        };
        for &k in &layout.ks {
            let mut slot = Vec::new();
            for j in 0.. {
                let file = dir.join(format!("{}_gold_top{}_{}.nt", row.eid, k, j));
                if !file.exists() {
                    break;
                }
                let statements = parse_statements(&read(&file)?)?;
                slot.push(match_gold(&desc, &format!("{}_gold_top{}_{}", row.eid, k, j), &statements, k)?);
            }
            if !slot.is_empty() {
                desc.gold.insert(k, slot);
            }
        }
        eid_to_iri.insert((row.dataset.clone(), row.eid.clone()), row.iri.clone());
        entities.push(desc);
    }

    let mut folds = Vec::with_capacity(layout.folds);
    for index in 0..layout.folds {
        let mut fold = FoldSpec {
            index,
            train: Vec::new(),
            valid: Vec::new(),
            test: Vec::new(),
        };
        for &dataset in subset.datasets() {
            let dir = layout
                .root
                .join(format!("{dataset}{}", layout.split_suffix))
                .join(format!("Fold{index}"));
            for (part, list) in [("train", &mut fold.train), ("valid", &mut fold.valid), ("test", &mut fold.test)] {
                for eid in read_split(&dir.join(format!("{part}.txt")))? {
                    let iri = eid_to_iri
                        .get(&(dataset.to_string(), eid.clone()))
                        .ok_or_else(|| Error::InvalidFold {
                            index,
                            reason: format!("{dataset} {part} split lists unknown eid {eid}"),
                        })?;
                    list.push(iri.clone());
                }
            }
        }
        folds.push(fold);
    }
    DatasetManifest::new(subset.name(), entities, folds)
}
