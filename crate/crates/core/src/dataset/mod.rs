//! Entity descriptions, gold summaries and benchmark fold layouts.

mod esbm;
mod manifest;
mod ntriples;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use esbm::{load_esbm, EsbmLayout, EsbmSubset};
pub use manifest::{load_manifest, DatasetManifest, FoldSpec, ManifestStats};
pub use ntriples::{parse_statements, parse_triples_document, Statement, RDFS_LABEL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ResourceKind {
    Iri,
    BlankNode,
    Literal,
}

/// An RDF term. For literals `raw` is the lexical form and `lang` /
/// `datatype` carry the suffix; `label` is only ever set on IRIs and blank
/// nodes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Resource {
    pub kind: ResourceKind,
    pub raw: String,
    pub label: Option<String>,
    pub lang: Option<String>,
    pub datatype: Option<String>,
}

impl Resource {
    fn new(kind: ResourceKind, raw: impl Into<String>) -> Self {
        Resource {
            kind,
            raw: raw.into(),
            label: None,
            lang: None,
            datatype: None,
        }
    }

    pub fn iri(raw: impl Into<String>) -> Self {
        Self::new(ResourceKind::Iri, raw)
    }

    pub fn blank(raw: impl Into<String>) -> Self {
        Self::new(ResourceKind::BlankNode, raw)
    }

    pub fn literal(lexical: impl Into<String>) -> Self {
        Self::new(ResourceKind::Literal, lexical)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn is_iri(&self, iri: &str) -> bool {
        self.kind == ResourceKind::Iri && self.raw == iri
    }

    /// Term equality ignoring label annotations.
    pub fn same_term(&self, other: &Resource) -> bool {
        self.kind == other.kind
            && self.raw == other.raw
            && self.lang == other.lang
            && self.datatype == other.datatype
    }
}

impl std::fmt::Display for Resource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            ResourceKind::Iri => write!(f, "<{}>", self.raw),
            ResourceKind::BlankNode => write!(f, "_:{}", self.raw),
            ResourceKind::Literal => {
                write!(f, "{:?}", self.raw)?;
                if let Some(lang) = &self.lang {
                    write!(f, "@{lang}")?;
                } else if let Some(dt) = &self.datatype {
                    write!(f, "^^<{dt}>")?;
                }
                Ok(())
            }
        }
    }
}

/// One statement of an entity description. The entity is the subject when
/// `entity_is_subject`, otherwise the object.
#[derive(Debug, Clone, PartialEq)]
pub struct Triple {
    pub id: usize,
    pub subject: Resource,
    pub predicate: Resource,
    pub object: Resource,
    pub entity_is_subject: bool,
}

impl Triple {
    pub fn prop(&self) -> &Resource {
        &self.predicate
    }

    pub fn val(&self) -> &Resource {
        if self.entity_is_subject {
            &self.object
        } else {
            &self.subject
        }
    }

    pub fn matches(&self, st: &Statement) -> bool {
        self.subject.same_term(&st.subject)
            && self.predicate.same_term(&st.predicate)
            && self.object.same_term(&st.object)
    }
}

impl std::fmt::Display for Triple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldSummary {
    pub annotator: String,
    pub triple_ids: BTreeSet<usize>,
}

/// How gold summaries are turned into regression targets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SupervisionTarget {
    /// Fraction of gold summaries that contain the triple.
    #[default]
    GoldFrequency,
    /// 1 if any gold summary contains the triple, else 0.
    AnyGold,
}

#[derive(Debug, Clone)]
pub struct EntityDescription {
    pub entity: Resource,
    pub triples: Vec<Triple>,
    /// Gold summaries keyed by summary size k.
    pub gold: BTreeMap<usize, Vec<GoldSummary>>,
}

impl EntityDescription {
    pub fn iri(&self) -> &str {
        &self.entity.raw
    }

    pub fn golds(&self, k: usize) -> Result<&[GoldSummary]> {
        match self.gold.get(&k) {
            Some(golds) if !golds.is_empty() => Ok(golds),
            _ => Err(Error::NoGoldForK {
                entity: self.entity.raw.clone(),
                k,
            }),
        }
    }

    /// For every triple (in id order), the number of gold summaries of slot
    /// `k` that contain it.
    pub fn membership_counts(&self, k: usize) -> Result<Vec<usize>> {
        let golds = self.golds(k)?;
        let mut counts = vec![0; self.triples.len()];
        for gold in golds {
            for &id in &gold.triple_ids {
                counts[id] += 1;
            }
        }
        Ok(counts)
    }

    pub fn supervision_label(&self, triple_id: usize, k: usize) -> Result<f64> {
        let golds = self.golds(k)?;
        let hits = golds.iter().filter(|g| g.triple_ids.contains(&triple_id)).count();
        Ok(hits as f64 / golds.len() as f64)
    }

    /// Regression targets for every triple in id order.
    pub fn supervision_labels(&self, k: usize, target: SupervisionTarget) -> Result<Vec<f64>> {
        let m = self.golds(k)?.len() as f64;
        let counts = self.membership_counts(k)?;
        Ok(counts
            .into_iter()
            .map(|c| match target {
                SupervisionTarget::GoldFrequency => c as f64 / m,
                SupervisionTarget::AnyGold => f64::from(u8::from(c > 0)),
            })
            .collect())
    }

    /// Checks id contiguity and gold containment.
    pub fn validate(&self) -> Result<()> {
        for (i, t) in self.triples.iter().enumerate() {
            if t.id != i {
                return Err(Error::Manifest(format!(
                    "<{}>: triple ids must be contiguous from 0",
                    self.iri()
                )));
            }
        }
        for (&k, golds) in &self.gold {
            if k == 0 {
                return Err(Error::Manifest(format!("<{}>: gold slot k=0", self.iri())));
            }
            for g in golds {
                if g.triple_ids.len() > k {
                    return Err(Error::GoldTooLarge {
                        entity: self.iri().to_string(),
                        file: g.annotator.clone(),
                        k,
                        size: g.triple_ids.len(),
                    });
                }
                if g.triple_ids.iter().any(|&id| id >= self.triples.len()) {
                    return Err(Error::GoldNotSubset {
                        entity: self.iri().to_string(),
                        file: g.annotator.clone(),
                        line: 0,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Maps the statements of a gold file onto triple ids of `desc`.
///
/// A repeated statement claims the next unclaimed duplicate in the
/// description, so duplicated triples can both be gold.
pub fn match_gold(
    desc: &EntityDescription,
    annotator: &str,
    statements: &[Statement],
    k: usize,
) -> Result<GoldSummary> {
    let mut ids = BTreeSet::new();
    for st in statements {
        let mut candidates = desc.triples.iter().filter(|t| t.matches(st)).map(|t| t.id);
        let first = candidates.next().ok_or_else(|| Error::GoldNotSubset {
            entity: desc.iri().to_string(),
            file: annotator.to_string(),
            line: st.line,
        })?;
        let id = std::iter::once(first)
            .chain(candidates)
            .find(|id| !ids.contains(id))
            .unwrap_or(first);
        ids.insert(id);
    }
    if ids.len() > k {
        return Err(Error::GoldTooLarge {
            entity: desc.iri().to_string(),
            file: annotator.to_string(),
            k,
            size: ids.len(),
        });
    }
    Ok(GoldSummary {
        annotator: annotator.to_string(),
        triple_ids: ids,
    })
}
