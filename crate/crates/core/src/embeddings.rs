//! Textual forms of RDF resources and averaged word-vector embeddings.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::dataset::{DatasetManifest, Resource, ResourceKind};
use crate::error::{Error, Result};

/// Human-readable text of a resource: a literal's lexical form, otherwise
/// the label if known, otherwise the IRI local name.
pub fn textual_form(r: &Resource) -> &str {
    match r.kind {
        ResourceKind::Literal => &r.raw,
        _ => r.label.as_deref().unwrap_or_else(|| local_name(&r.raw)),
    }
}

/// Substring after the last `#`, else after the last `/`, else the whole
/// string.
pub fn local_name(raw: &str) -> &str {
    if let Some(i) = raw.rfind('#') {
        &raw[i + 1..]
    } else if let Some(i) = raw.rfind('/') {
        &raw[i + 1..]
    } else {
        raw
    }
}

/// Splits on non-alphanumeric characters and lower→upper camel-case
/// boundaries, then lowercases.
pub fn tokenize(s: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut prev_lower = false;
    for c in s.chars() {
        if !c.is_alphanumeric() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            prev_lower = false;
            continue;
        }
        if c.is_uppercase() && prev_lower && !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
        current.extend(c.to_lowercase());
        prev_lower = c.is_lowercase();
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Word vectors keyed by lowercase word.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResourceEmbedding {
    pub vector: Vec<f64>,
    pub covered: usize,
    pub total: usize,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Self {
        EmbeddingStore {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Inserts a vector unless the (lowercased) word is already present.
    pub fn insert(&mut self, word: &str, vector: Vec<f64>) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::ShapeMismatch {
                context: "word vector",
                expected: self.dim,
                found: vector.len(),
            });
        }
        let key = word.to_lowercase();
        if self.vectors.contains_key(&key) {
            return Ok(false);
        }
        self.vectors.insert(key, vector);
        Ok(true)
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(&word.to_lowercase()).map(Vec::as_slice)
    }

    /// Mean of the vectors of the tokens found in the store; unknown tokens
    /// are skipped and do not count towards the denominator.
    pub fn embed_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> ResourceEmbedding {
        let mut sum = vec![0.0; self.dim];
        let mut covered = 0;
        for tok in tokens {
            if let Some(v) = self.get(tok.as_ref()) {
                for (s, x) in sum.iter_mut().zip(v) {
                    *s += x;
                }
                covered += 1;
            }
        }
        if covered > 0 {
            let n = covered as f64;
            sum.iter_mut().for_each(|s| *s /= n);
        }
        ResourceEmbedding {
            vector: sum,
            covered,
            total: tokens.len(),
        }
    }

    pub fn embed_resource(&self, r: &Resource) -> ResourceEmbedding {
        self.embed_tokens(&tokenize(textual_form(r)))
    }
}

/// Every token of every property and value text in the manifest.
pub fn manifest_vocabulary(manifest: &DatasetManifest) -> BTreeSet<String> {
    manifest
        .entities
        .iter()
        .flat_map(|e| &e.triples)
        .flat_map(|t| [t.prop(), t.val()])
        .flat_map(|r| tokenize(textual_form(r)))
        .collect()
}

/// Reads a one-word-per-line vocabulary file.
pub fn load_vocab_file(path: impl AsRef<Path>) -> Result<HashSet<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect())
}

/// Loads a fastText `.vec` text file, optionally keeping only words in
/// `filter` (compared lowercase).
pub fn load_vec_file(path: impl AsRef<Path>, filter: Option<&HashSet<String>>) -> Result<EmbeddingStore> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_vec(BufReader::new(file), filter).map_err(|e| with_path(e, path))
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    }
}

pub fn read_vec<R: BufRead>(reader: R, filter: Option<&HashSet<String>>) -> Result<EmbeddingStore> {
    let mut store: Option<EmbeddingStore> = None;
    for_each_vec_line(reader, |line_no, header_dim, word, values| {
        let dim = header_dim.unwrap_or(values.len());
        let store = store.get_or_insert_with(|| EmbeddingStore::new(dim));
        if filter.is_some_and(|f| !f.contains(&word.to_lowercase())) {
            return Ok(());
        }
        let vector = parse_values(line_no, values, store.dim)?;
        store.insert(word, vector)?;
        Ok(())
    })
    .map(|dim| store.unwrap_or_else(|| EmbeddingStore::new(dim.unwrap_or(0))))
}

fn parse_values(line_no: usize, values: &[&str], dim: usize) -> Result<Vec<f64>> {
    if values.len() != dim {
        return Err(Error::DimMismatch {
            line: line_no,
            expected: dim,
            found: values.len(),
        });
    }
    values
        .iter()
        .map(|v| {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::VecParse {
                    line: line_no,
                    reason: format!("bad number {v:?}"),
                })
        })
        .collect()
}

/// Walks the data lines of a `.vec` stream. Returns the header dimension if
/// the first line was a `count dim` header.
fn for_each_vec_line<R: BufRead>(
    reader: R,
    mut f: impl FnMut(usize, Option<usize>, &str, &[&str]) -> Result<()>,
) -> Result<Option<usize>> {
    let mut header_dim = None;
    let mut seen_dim = None;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io("<vec>", e))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if line_no == 1 && fields.len() == 2 {
            if let (Ok(_), Ok(dim)) = (fields[0].parse::<usize>(), fields[1].parse::<usize>()) {
                header_dim = Some(dim);
                continue;
            }
        }
        let dim = *seen_dim.get_or_insert(header_dim.unwrap_or(fields.len() - 1));
        if fields.len() - 1 != dim {
            return Err(Error::DimMismatch {
                line: line_no,
                expected: dim,
                found: fields.len() - 1,
            });
        }
        f(line_no, Some(dim), fields[0], &fields[1..])?;
    }
    Ok(header_dim.or(seen_dim))
}

/// Copies the vectors of `vocab` words from `src` into a new `.vec` file
/// at `out`, keeping the first occurrence of each lowercased word and the
/// original number text. Returns the number of vectors written.
pub fn filter_vec_file(src: impl AsRef<Path>, vocab: &BTreeSet<String>, out: impl AsRef<Path>) -> Result<usize> {
    let src = src.as_ref();
    let out = out.as_ref();
    let file = File::open(src).map_err(|e| Error::io(src, e))?;
    let mut kept: Vec<String> = Vec::new();
    let mut seen = HashSet::new();
    let dim = for_each_vec_line(BufReader::new(file), |line_no, dim, word, values| {
        let key = word.to_lowercase();
        if vocab.contains(&key) && !seen.contains(&key) {
            parse_values(line_no, values, dim.unwrap_or(values.len()))?;
            kept.push(format!("{key} {}", values.join(" ")));
            seen.insert(key);
        }
        Ok(())
    })
    .map_err(|e| with_path(e, src))?
    .unwrap_or(0);

    let file = File::create(out).map_err(|e| Error::io(out, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(out, e);
    writeln!(w, "{} {}", kept.len(), dim).map_err(io)?;
    for line in &kept {
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)?;
    Ok(kept.len())
}
