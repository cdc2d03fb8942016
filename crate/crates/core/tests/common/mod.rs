#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use deeplens::dataset::{parse_triples_document, GoldSummary, Resource};
use deeplens::nn::{Activation, Mlp};
use deeplens::{DatasetManifest, DeepLensModel, EmbeddingStore, EntityDescription, FoldSpec, ModelConfig, TripleVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy")
}

pub const TIM: &str = "http://example.org/resource/Tim_Berners-Lee";
pub const ADA: &str = "http://example.org/resource/Ada_Lovelace";

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// embed 6, hidden [8,8] / [8,8] / [8,8,8]
pub fn toy_config(seed: u64) -> ModelConfig {
    ModelConfig {
        embed_dim: 6,
        mlp_c_hidden: vec![8, 8],
        mlp_d_hidden: vec![8, 8],
        mlp_s_hidden: vec![8, 8, 8],
        seed,
    }
}

pub fn random_description(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<TripleVector> {
    (0..n)
        .map(|id| TripleVector {
            id,
            values: (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        })
        .collect()
}

pub fn shuffled(rng: &mut ChaCha8Rng, v: &[TripleVector]) -> Vec<TripleVector> {
    let mut out = v.to_vec();
    out.shuffle(rng);
    out
}

// Straight-line evaluation of the scorer, written against raw layer weights
// without the library's forward code.

fn ref_mlp(mlp: &Mlp, x: &[f64]) -> Vec<f64> {
    ref_mlp_margin(mlp, x).0
}

/// Output plus the smallest |pre-activation| over the ReLU units.
fn ref_mlp_margin(mlp: &Mlp, x: &[f64]) -> (Vec<f64>, f64) {
    let mut margin = f64::INFINITY;
    let mut a = x.to_vec();
    for layer in &mlp.layers {
        let mut next = Vec::with_capacity(layer.outputs);
        for o in 0..layer.outputs {
            let mut z = layer.bias[o];
            for i in 0..layer.inputs {
                z += layer.weights[o * layer.inputs + i] * a[i];
            }
            next.push(match layer.activation {
                Activation::Relu => {
                    margin = margin.min(z.abs());
                    z.max(0.0)
                }
                Activation::Linear => z,
            });
        }
        a = next;
    }
    (a, margin)
}

fn ref_cos(u: &[f64], v: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut uu = 0.0;
    let mut vv = 0.0;
    for i in 0..u.len() {
        dot += u[i] * v[i];
        uu += u[i] * u[i];
        vv += v[i] * v[i];
    }
    if uu.sqrt() < 1e-12 || vv.sqrt() < 1e-12 {
        0.0
    } else {
        dot / (uu.sqrt() * vv.sqrt())
    }
}

/// Scores keyed by triple id.
pub fn reference_scores(model: &DeepLensModel, vectors: &[TripleVector]) -> BTreeMap<usize, f64> {
    reference_pass(model, vectors).0
}

/// Distance of the nearest ReLU unit from its kink over a whole scoring pass.
/// Finite differences are only meaningful when this exceeds the step size.
pub fn relu_margin(model: &DeepLensModel, vectors: &[TripleVector]) -> f64 {
    reference_pass(model, vectors).1
}

fn reference_pass(model: &DeepLensModel, vectors: &[TripleVector]) -> (BTreeMap<usize, f64>, f64) {
    let mut sorted: Vec<&TripleVector> = vectors.iter().collect();
    sorted.sort_by_key(|t| t.id);
    let mut margin = f64::INFINITY;
    let mut g = Vec::new();
    for t in &sorted {
        let (gi, m) = ref_mlp_margin(&model.mlp_d, &t.values);
        margin = margin.min(m);
        g.push(gi);
    }
    let mut out = BTreeMap::new();
    for t in &sorted {
        let (h, m) = ref_mlp_margin(&model.mlp_c, &t.values);
        margin = margin.min(m);
        let sims: Vec<f64> = g.iter().map(|gi| ref_cos(&h, gi)).collect();
        let max = sims.iter().cloned().fold(f64::MIN, f64::max);
        let exps: Vec<f64> = sims.iter().map(|s| (s - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        let mut d = vec![0.0; h.len()];
        for (e, gi) in exps.iter().zip(&g) {
            for j in 0..d.len() {
                d[j] += e / total * gi[j];
            }
        }
        let mut joint = h.clone();
        joint.extend(d);
        let (score, m) = ref_mlp_margin(&model.mlp_s, &joint);
        margin = margin.min(m);
        out.insert(t.id, score[0]);
    }
    (out, margin)
}

/// Mean-MSE loss of `model` with parameters replaced by `flat`.
pub fn loss_at(model: &DeepLensModel, flat: &[f64], vectors: &[TripleVector], targets: &[f64]) -> f64 {
    let mut m = model.clone();
    m.set_flat_params(flat).unwrap();
    m.loss_and_gradients(vectors, targets).unwrap().0
}

/// Every size-`size` subset of `0..n` as a bitmask.
pub fn subsets(n: usize, size: usize) -> impl Iterator<Item = u32> {
    (0u32..(1 << n)).filter(move |m| m.count_ones() as usize == size)
}

pub fn mask_ids(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

/// A single-entity dataset (no folds; train with [`memorization_fold`]) whose six golds all pick the first `k` triples,
/// with a random `dim`-dimensional vector per word.
pub fn memorization_dataset(n: usize, k: usize, dim: usize, seed: u64) -> (DatasetManifest, EmbeddingStore) {
    let mut r = rng(seed);
    let doc: String = (0..n)
        .map(|i| format!("<http://x/e> <http://x/prop{}> \"word{} other{}\" .\n", i % 4, i, i % 3))
        .collect();
    let triples = parse_triples_document(&doc, "http://x/e").unwrap();
    let golds = (0..6)
        .map(|a| GoldSummary {
            annotator: format!("a{a}"),
            triple_ids: (0..k).collect(),
        })
        .collect();
    let desc = EntityDescription {
        entity: Resource::iri("http://x/e"),
        triples,
        gold: BTreeMap::from([(k, golds)]),
    };
    let mut store = EmbeddingStore::new(dim);
    let words = (0..4)
        .map(|i| format!("prop{i}"))
        .chain((0..n).map(|i| format!("word{i}")))
        .chain((0..3).map(|i| format!("other{i}")));
    for w in words {
        let v = (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect();
        store.insert(&w, v).unwrap();
    }
    let manifest = DatasetManifest::new("memorize", vec![desc], vec![]).unwrap();
    (manifest, store)
}

pub fn memorization_fold() -> FoldSpec {
    FoldSpec {
        index: 0,
        train: vec!["http://x/e".into()],
        valid: vec!["http://x/e".into()],
        test: vec![],
    }
}
