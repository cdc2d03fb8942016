//! The triple scorer.
//!
//! Each triple is encoded as `t = [emb(prop); emb(val)]`. The candidate's
//! representation is `h = C(t_c)`; every triple of the description
//! (candidate included) gets a context representation `g_i = D(t_i)`. The
//! context vector `d` is the softmax-over-cosine weighted sum of the `g_i`
//! and the score is `S([h; d])`.
//!
//! Context sums run in ascending triple-id order whatever the input order,
//! so scores are bit-identical under any permutation of the input.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{EntityDescription, Triple};
use crate::embeddings::EmbeddingStore;
use crate::error::{Error, Result};
use crate::nn::{cosine_with_grad, mse_loss, softmax, softmax_backward, Activation, DenseLayer, GradientTape, Mlp, MlpCache};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub embed_dim: usize,
    pub mlp_c_hidden: Vec<usize>,
    pub mlp_d_hidden: Vec<usize>,
    pub mlp_s_hidden: Vec<usize>,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            embed_dim: 300,
            mlp_c_hidden: vec![64, 64],
            mlp_d_hidden: vec![64, 64],
            mlp_s_hidden: vec![64, 64, 64],
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn with_embed_dim(embed_dim: usize) -> Self {
        ModelConfig {
            embed_dim,
            ..Self::default()
        }
    }

    pub fn input_dim(&self) -> usize {
        2 * self.embed_dim
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInput(format!("model config: {msg}")));
        if self.embed_dim == 0 {
            return bad("embed_dim must be positive");
        }
        if self.mlp_c_hidden.is_empty() || self.mlp_d_hidden.is_empty() {
            return bad("candidate and context MLPs need at least one layer");
        }
        let all = self.mlp_c_hidden.iter().chain(&self.mlp_d_hidden).chain(&self.mlp_s_hidden);
        if all.into_iter().any(|&w| w == 0) {
            return bad("layer widths must be positive");
        }
        if self.mlp_c_hidden.last() != self.mlp_d_hidden.last() {
            return bad("candidate and context MLPs must end in the same width");
        }
        Ok(())
    }
}

/// Initial representation of one triple.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleVector {
    pub id: usize,
    pub values: Vec<f64>,
}

pub fn encode_triple(t: &Triple, store: &EmbeddingStore) -> TripleVector {
    let mut values = store.embed_resource(t.prop()).vector;
    values.extend(store.embed_resource(t.val()).vector);
    TripleVector { id: t.id, values }
}

pub fn encode_description(desc: &EntityDescription, store: &EmbeddingStore) -> Vec<TripleVector> {
    desc.triples.iter().map(|t| encode_triple(t, store)).collect()
}

/// Scores for every triple of a description, in ascending id order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDescription {
    pub entity: Option<String>,
    pub ids: Vec<usize>,
    pub scores: Vec<f64>,
    /// `attention[c][i]`: weight of context triple `ids[i]` for candidate `ids[c]`.
    pub attention: Vec<Vec<f64>>,
}

impl ScoredDescription {
    pub fn score(&self, id: usize) -> Option<f64> {
        self.ids.binary_search(&id).ok().map(|i| self.scores[i])
    }

    pub fn attention(&self, candidate: usize, context: usize) -> Option<f64> {
        let c = self.ids.binary_search(&candidate).ok()?;
        let i = self.ids.binary_search(&context).ok()?;
        Some(self.attention[c][i])
    }
}

/// The ids of the `min(k, n)` best-scoring triples, by descending score
/// then ascending id.
pub fn select_summary(scored: &ScoredDescription, k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scored.ids.len()).collect();
    order.sort_by(|&a, &b| {
        scored.scores[b]
            .total_cmp(&scored.scores[a])
            .then(scored.ids[a].cmp(&scored.ids[b]))
    });
    order.into_iter().take(k).map(|i| scored.ids[i]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeepLensModel {
    pub config: ModelConfig,
    pub mlp_c: Mlp,
    pub mlp_d: Mlp,
    pub mlp_s: Mlp,
}

/// Gradient accumulators for all three MLPs.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGradients {
    pub c: GradientTape,
    pub d: GradientTape,
    pub s: GradientTape,
}

impl ModelGradients {
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = self.c.slices();
        out.extend(self.d.slices());
        out.extend(self.s.slices());
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = self.c.slices_mut();
        out.extend(self.d.slices_mut());
        out.extend(self.s.slices_mut());
        out
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.slices().concat()
    }
}

struct CandidateForward {
    h_cache: MlpCache,
    s_cache: MlpCache,
    h: Vec<f64>,
    attention: Vec<f64>,
}

struct Forward<'a> {
    sorted: Vec<&'a TripleVector>,
    g: Vec<Vec<f64>>,
    g_caches: Vec<MlpCache>,
    candidates: Vec<CandidateForward>,
    scores: Vec<f64>,
}

impl DeepLensModel {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let input = config.input_dim();
        let mlp_c = Mlp::new(input, &config.mlp_c_hidden, None, &mut rng);
        let mlp_d = Mlp::new(input, &config.mlp_d_hidden, None, &mut rng);
        let joint = mlp_c.output_dim() + mlp_d.output_dim();
        let mlp_s = Mlp::new(joint, &config.mlp_s_hidden, Some(1), &mut rng);
        Ok(DeepLensModel {
            config,
            mlp_c,
            mlp_d,
            mlp_s,
        })
    }

    /// Assembles a model from explicit layers, checking them against `config`.
    pub fn from_parts(config: ModelConfig, mlp_c: Mlp, mlp_d: Mlp, mlp_s: Mlp) -> Result<Self> {
        config.validate()?;
        let shape = |mlp: &Mlp| -> Vec<(usize, usize, Activation)> {
            mlp.layers.iter().map(|l| (l.inputs, l.outputs, l.activation)).collect()
        };
        let expected = DeepLensModel::new(config.clone())?;
        for (name, got, want) in [
            ("candidate", &mlp_c, &expected.mlp_c),
            ("context", &mlp_d, &expected.mlp_d),
            ("scoring", &mlp_s, &expected.mlp_s),
        ] {
            if shape(got) != shape(want) {
                return Err(Error::InvalidInput(format!("{name} MLP does not match the config")));
            }
        }
        Ok(DeepLensModel {
            config,
            mlp_c: Mlp::from_layers(mlp_c.layers)?,
            mlp_d: Mlp::from_layers(mlp_d.layers)?,
            mlp_s: Mlp::from_layers(mlp_s.layers)?,
        })
    }

    pub fn check_store(&self, store: &EmbeddingStore) -> Result<()> {
        if store.dim() != self.config.embed_dim {
            return Err(Error::ShapeMismatch {
                context: "embedding dimension",
                expected: self.config.embed_dim,
                found: store.dim(),
            });
        }
        Ok(())
    }

    pub fn params(&self) -> Vec<&[f64]> {
        let mut out = self.mlp_c.params();
        out.extend(self.mlp_d.params());
        out.extend(self.mlp_s.params());
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = self.mlp_c.params_mut();
        out.extend(self.mlp_d.params_mut());
        out.extend(self.mlp_s.params_mut());
        out
    }

    pub fn flat_params(&self) -> Vec<f64> {
        self.params().concat()
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        let total: usize = self.params().iter().map(|s| s.len()).sum();
        if total != flat.len() {
            return Err(Error::ShapeMismatch {
                context: "flat parameters",
                expected: total,
                found: flat.len(),
            });
        }
        let mut offset = 0;
        for slice in self.params_mut() {
            slice.copy_from_slice(&flat[offset..offset + slice.len()]);
            offset += slice.len();
        }
        Ok(())
    }

    pub fn zero_gradients(&self) -> ModelGradients {
        ModelGradients {
            c: GradientTape::for_mlp(&self.mlp_c),
            d: GradientTape::for_mlp(&self.mlp_d),
            s: GradientTape::for_mlp(&self.mlp_s),
        }
    }

    fn sort_inputs<'a>(&self, vectors: &'a [TripleVector]) -> Result<Vec<&'a TripleVector>> {
        if vectors.is_empty() {
            return Err(Error::InvalidInput("cannot score an empty description".into()));
        }
        let mut sorted: Vec<&TripleVector> = vectors.iter().collect();
        sorted.sort_by_key(|t| t.id);
        for pair in sorted.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::InvalidInput(format!("duplicate triple id {}", pair[0].id)));
            }
        }
        for t in &sorted {
            if t.values.len() != self.config.input_dim() {
                return Err(Error::ShapeMismatch {
                    context: "triple vector",
                    expected: self.config.input_dim(),
                    found: t.values.len(),
                });
            }
        }
        Ok(sorted)
    }

    fn forward<'a>(&self, vectors: &'a [TripleVector]) -> Result<Forward<'a>> {
        let sorted = self.sort_inputs(vectors)?;
        let mut g = Vec::with_capacity(sorted.len());
        let mut g_caches = Vec::with_capacity(sorted.len());
        for t in &sorted {
            let (gi, cache) = self.mlp_d.forward(&t.values)?;
            g.push(gi);
            g_caches.push(cache);
        }

        let mut candidates = Vec::with_capacity(sorted.len());
        let mut scores = Vec::with_capacity(sorted.len());
        for t in &sorted {
            let (h, h_cache) = self.mlp_c.forward(&t.values)?;
            let sims = g
                .iter()
                .map(|gi| cosine_with_grad(&h, gi).map(|(c, _, _)| c))
                .collect::<Result<Vec<f64>>>()?;
            let attention = softmax(&sims);
            let mut d = vec![0.0; h.len()];
            for (a, gi) in attention.iter().zip(&g) {
                for (dj, gij) in d.iter_mut().zip(gi) {
                    *dj += a * gij;
                }
            }
            let mut joint = h.clone();
            joint.extend_from_slice(&d);
            let (score, s_cache) = self.mlp_s.forward(&joint)?;
            scores.push(score[0]);
            candidates.push(CandidateForward {
                h_cache,
                s_cache,
                h,
                attention,
            });
        }
        Ok(Forward {
            sorted,
            g,
            g_caches,
            candidates,
            scores,
        })
    }

    /// Scores every triple of a description in the context of all of them.
    pub fn score_description(&self, vectors: &[TripleVector]) -> Result<ScoredDescription> {
        let fwd = self.forward(vectors)?;
        Ok(ScoredDescription {
            entity: None,
            ids: fwd.sorted.iter().map(|t| t.id).collect(),
            scores: fwd.scores,
            attention: fwd.candidates.into_iter().map(|c| c.attention).collect(),
        })
    }

    pub fn score_entity(&self, desc: &EntityDescription, store: &EmbeddingStore) -> Result<ScoredDescription> {
        self.check_store(store)?;
        let mut scored = self.score_description(&encode_description(desc, store))?;
        scored.entity = Some(desc.iri().to_string());
        Ok(scored)
    }

    /// Mean squared error of the description's scores against `targets`
    /// (aligned with ascending triple id), plus its gradient with respect
    /// to every parameter.
    pub fn loss_and_gradients(&self, vectors: &[TripleVector], targets: &[f64]) -> Result<(f64, ModelGradients)> {
        let fwd = self.forward(vectors)?;
        let (loss, dscores) = mse_loss(&fwd.scores, targets)?;
        let mut grads = self.zero_gradients();
        let width = self.mlp_c.output_dim();
        let mut dg = vec![vec![0.0; width]; fwd.g.len()];

        for (cand, &dscore) in fwd.candidates.iter().zip(&dscores) {
            let djoint = self.mlp_s.backward(&cand.s_cache, &[dscore], &mut grads.s)?;
            let (dh_direct, dd) = djoint.split_at(width);
            let mut dh = dh_direct.to_vec();

            // d = sum_i a_i g_i
            let da: Vec<f64> = fwd
                .g
                .iter()
                .map(|gi| gi.iter().zip(dd).map(|(x, y)| x * y).sum())
                .collect();
            for (dgi, a) in dg.iter_mut().zip(&cand.attention) {
                for (x, y) in dgi.iter_mut().zip(dd) {
                    *x += a * y;
                }
            }
            // a = softmax(cos(h, g_i))
            let dsims = softmax_backward(&cand.attention, &da);
            for ((gi, dgi), ds) in fwd.g.iter().zip(dg.iter_mut()).zip(&dsims) {
                let (_, dcos_dh, dcos_dg) = cosine_with_grad(&cand.h, gi)?;
                for (x, y) in dh.iter_mut().zip(&dcos_dh) {
                    *x += ds * y;
                }
                for (x, y) in dgi.iter_mut().zip(&dcos_dg) {
                    *x += ds * y;
                }
            }
            self.mlp_c.backward(&cand.h_cache, &dh, &mut grads.c)?;
        }
        for (cache, dgi) in fwd.g_caches.iter().zip(&dg) {
            self.mlp_d.backward(cache, dgi, &mut grads.d)?;
        }
        Ok((loss, grads))
    }
}

const CHECKPOINT_FORMAT: &str = "deeplens-checkpoint";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct LayerRecord {
    inputs: usize,
    outputs: usize,
    activation: Activation,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    config: ModelConfig,
    mlp_c: Vec<LayerRecord>,
    mlp_d: Vec<LayerRecord>,
    mlp_s: Vec<LayerRecord>,
}

fn records(mlp: &Mlp) -> Vec<LayerRecord> {
    mlp.layers
        .iter()
        .map(|l| LayerRecord {
            inputs: l.inputs,
            outputs: l.outputs,
            activation: l.activation,
            weights: l.weights.clone(),
            bias: l.bias.clone(),
        })
        .collect()
}

fn from_records(records: Vec<LayerRecord>) -> Result<Mlp> {
    Mlp::from_layers(
        records
            .into_iter()
            .map(|r| DenseLayer {
                inputs: r.inputs,
                outputs: r.outputs,
                activation: r.activation,
                weights: r.weights,
                bias: r.bias,
            })
            .collect(),
    )
    .map_err(|e| Error::CorruptCheckpoint(e.to_string()))
}

/// Serializes a model as versioned JSON. Numbers use shortest round-trip
/// formatting, so loading restores bit-identical parameters.
pub fn checkpoint_to_string(model: &DeepLensModel) -> String {
    let file = CheckpointFile {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        config: model.config.clone(),
        mlp_c: records(&model.mlp_c),
        mlp_d: records(&model.mlp_d),
        mlp_s: records(&model.mlp_s),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("checkpoint serializes");
    text.push('\n');
    text
}

pub fn checkpoint_from_str(text: &str) -> Result<DeepLensModel> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
    if value.get("format").and_then(|f| f.as_str()) != Some(CHECKPOINT_FORMAT) {
        return Err(Error::CorruptCheckpoint("not a deeplens checkpoint".into()));
    }
    let version = value
        .get("version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::CorruptCheckpoint("missing version".into()))?;
    if version != u64::from(CHECKPOINT_VERSION) {
        return Err(Error::VersionMismatch {
            found: version.try_into().unwrap_or(u32::MAX),
            expected: CHECKPOINT_VERSION,
        });
    }
    let file: CheckpointFile = serde_json::from_value(value).map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
    DeepLensModel::from_parts(
        file.config,
        from_records(file.mlp_c)?,
        from_records(file.mlp_d)?,
        from_records(file.mlp_s)?,
    )
    .map_err(|e| match e {
        Error::CorruptCheckpoint(_) => e,
        other => Error::CorruptCheckpoint(other.to_string()),
    })
}

pub fn save_checkpoint(model: &DeepLensModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, checkpoint_to_string(model)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<DeepLensModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_str(&text)
}

/// Writes `entity_iri \t triple_id \t score \t selected` rows (with header
/// when `header` is set), `selected` being 1 for the top-k triples.
pub fn write_scores_tsv<W: Write>(out: &mut W, scored: &ScoredDescription, k: usize, header: bool) -> std::io::Result<()> {
    if header {
        writeln!(out, "entity_iri\ttriple_id\tscore\tselected")?;
    }
    let selected = select_summary(scored, k);
    let entity = scored.entity.as_deref().unwrap_or("");
    for (id, score) in scored.ids.iter().zip(&scored.scores) {
        writeln!(out, "{entity}\t{id}\t{score}\t{}", u8::from(selected.contains(id)))?;
    }
    Ok(())
}
