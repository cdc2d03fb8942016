//! Per-entity Adam training with early stopping, and k-fold
//! cross-validation over a manifest's folds.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetManifest, FoldSpec, SupervisionTarget};
use crate::embeddings::EmbeddingStore;
use crate::error::{Error, Result};
use crate::eval::{f1_against_golds, EvalReport};
use crate::model::{encode_description, select_summary, DeepLensModel, ModelConfig, ScoredDescription, TripleVector};
use crate::nn::{mse_loss, AdamState};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum EarlyStopMetric {
    /// Maximize mean validation F1.
    #[default]
    ValF1,
    /// Minimize mean validation MSE.
    ValLoss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub max_epochs: usize,
    pub k: usize,
    pub seed: u64,
    pub early_stop: EarlyStopMetric,
    pub target: SupervisionTarget,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.01,
            max_epochs: 50,
            k: 5,
            seed: 0,
            early_stop: EarlyStopMetric::ValF1,
            target: SupervisionTarget::GoldFrequency,
        }
    }
}

/// Triple vectors of every entity, computed once from a store.
#[derive(Debug, Clone)]
pub struct EncodedDataset {
    dim: usize,
    vectors: BTreeMap<String, Vec<TripleVector>>,
}

impl EncodedDataset {
    pub fn new(manifest: &DatasetManifest, store: &EmbeddingStore) -> Self {
        EncodedDataset {
            dim: store.dim(),
            vectors: manifest
                .entities
                .iter()
                .map(|e| (e.iri().to_string(), encode_description(e, store)))
                .collect(),
        }
    }

    pub fn embed_dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, iri: &str) -> Result<&[TripleVector]> {
        self.vectors
            .get(iri)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownEntity(iri.to_string()))
    }
}

/// Anything that scores a description's triple vectors.
pub trait TripleScorer {
    fn score(&self, vectors: &[TripleVector]) -> Result<ScoredDescription>;
}

impl TripleScorer for DeepLensModel {
    fn score(&self, vectors: &[TripleVector]) -> Result<ScoredDescription> {
        self.score_description(vectors)
    }
}

/// Per-entity F1 of the scorer's top-k summaries, in the given order.
pub fn evaluate_entities<S: TripleScorer + ?Sized>(
    scorer: &S,
    manifest: &DatasetManifest,
    encoded: &EncodedDataset,
    entities: &[String],
    k: usize,
) -> Result<Vec<(String, f64)>> {
    entities
        .iter()
        .map(|iri| {
            let desc = manifest.entity(iri)?;
            let scored = scorer.score(encoded.get(iri)?)?;
            let f1 = f1_against_golds(&select_summary(&scored, k), desc.golds(k)?)?;
            Ok((iri.clone(), f1))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_metric: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainedFold {
    pub model: DeepLensModel,
    pub chosen_epoch: usize,
    pub history: Vec<EpochRecord>,
}

fn validation_metric(
    model: &DeepLensModel,
    manifest: &DatasetManifest,
    encoded: &EncodedDataset,
    fold: &FoldSpec,
    cfg: &TrainConfig,
) -> Result<f64> {
    let mut total = 0.0;
    for iri in &fold.valid {
        let vectors = encoded.get(iri)?;
        total += match cfg.early_stop {
            EarlyStopMetric::ValF1 => {
                let scored = model.score_description(vectors)?;
                f1_against_golds(&select_summary(&scored, cfg.k), manifest.entity(iri)?.golds(cfg.k)?)?
            }
            EarlyStopMetric::ValLoss => {
                let scored = model.score_description(vectors)?;
                let targets = manifest.entity(iri)?.supervision_labels(cfg.k, cfg.target)?;
                mse_loss(&scored.scores, &targets)?.0
            }
        };
    }
    Ok(total / fold.valid.len() as f64)
}

/// Trains one model on the fold's training entities.
///
/// Each epoch visits the training entities in an order shuffled from
/// `(seed, epoch)` and takes one Adam step per entity on the mean squared
/// error between its scores and supervision labels. The snapshot with the
/// best validation metric is returned (earliest epoch on ties); without
/// validation entities the final epoch is kept.
pub fn train_fold(
    manifest: &DatasetManifest,
    fold: &FoldSpec,
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
    encoded: &EncodedDataset,
) -> Result<TrainedFold> {
    if cfg.max_epochs == 0 {
        return Err(Error::InvalidInput("max_epochs must be at least 1".into()));
    }
    if encoded.embed_dim() != model_cfg.embed_dim {
        return Err(Error::ShapeMismatch {
            context: "embedding dimension",
            expected: model_cfg.embed_dim,
            found: encoded.embed_dim(),
        });
    }
    let mut targets = BTreeMap::new();
    for iri in &fold.train {
        targets.insert(iri.as_str(), manifest.entity(iri)?.supervision_labels(cfg.k, cfg.target)?);
    }
    for iri in &fold.valid {
        manifest.entity(iri)?.golds(cfg.k)?;
    }

    let mut model = DeepLensModel::new(model_cfg.clone())?;
    let mut adam = AdamState::new(cfg.lr);
    let mut best: Option<(f64, usize, DeepLensModel)> = None;
    let mut history = Vec::with_capacity(cfg.max_epochs);
    let mut order = fold.train.clone();

    for epoch in 1..=cfg.max_epochs {
        order.clone_from(&fold.train);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(epoch as u64);
        order.shuffle(&mut rng);

        let mut epoch_loss = 0.0;
        for iri in &order {
            let (loss, grads) = model.loss_and_gradients(encoded.get(iri)?, &targets[iri.as_str()])?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    entity: iri.clone(),
                    epoch,
                    loss,
                });
            }
            epoch_loss += loss;
            adam.step(model.params_mut(), grads.slices())?;
        }

        let valid_metric = if fold.valid.is_empty() {
            None
        } else {
            Some(validation_metric(&model, manifest, encoded, fold, cfg)?)
        };
        history.push(EpochRecord {
            epoch,
            train_loss: epoch_loss / order.len() as f64,
            valid_metric,
        });
        if let Some(metric) = valid_metric {
            let improved = match (&best, cfg.early_stop) {
                (None, _) => true,
                (Some((b, _, _)), EarlyStopMetric::ValF1) => metric > *b,
                (Some((b, _, _)), EarlyStopMetric::ValLoss) => metric < *b,
            };
            if improved {
                best = Some((metric, epoch, model.clone()));
            }
        }
    }

    let (chosen_epoch, model) = match best {
        Some((_, epoch, snapshot)) => (epoch, snapshot),
        None => (cfg.max_epochs, model),
    };
    Ok(TrainedFold {
        model,
        chosen_epoch,
        history,
    })
}

#[derive(Debug, Clone)]
pub struct FoldOutcome<S> {
    pub fold: usize,
    pub scorer: S,
    pub chosen_epoch: Option<usize>,
    pub report: EvalReport,
}

#[derive(Debug, Clone)]
pub struct CrossValidation<S> {
    pub folds: Vec<FoldOutcome<S>>,
    /// Per-entity F1 concatenated over all folds' test entities.
    pub aggregate: EvalReport,
}

/// Runs `fit` on every fold and evaluates the result on that fold's test
/// entities. `fit` returns a scorer and, if it has one, the chosen epoch.
pub fn cross_validate_with<S, F>(
    manifest: &DatasetManifest,
    encoded: &EncodedDataset,
    k: usize,
    parallel: bool,
    fit: F,
) -> Result<CrossValidation<S>>
where
    S: TripleScorer + Send,
    F: Fn(&FoldSpec) -> Result<(S, Option<usize>)> + Sync,
{
    if manifest.folds.is_empty() {
        return Err(Error::Manifest("no folds to cross-validate".into()));
    }
    let run = |fold: &FoldSpec| -> Result<FoldOutcome<S>> {
        let wrap = |e: Error| Error::Fold {
            index: fold.index,
            source: Box::new(e),
        };
        if let Some(iri) = fold.test.iter().find(|t| fold.train.contains(t) || fold.valid.contains(t)) {
            return Err(wrap(Error::InvalidFold {
                index: fold.index,
                reason: format!("test entity <{iri}> was used for fitting"),
            }));
        }
        let (scorer, chosen_epoch) = fit(fold).map_err(wrap)?;
        let scores = evaluate_entities(&scorer, manifest, encoded, &fold.test, k).map_err(wrap)?;
        let report = EvalReport::new(manifest.name.clone(), k, Some(fold.index), chosen_epoch, scores);
        Ok(FoldOutcome {
            fold: fold.index,
            scorer,
            chosen_epoch,
            report,
        })
    };
    let folds: Vec<FoldOutcome<S>> = if parallel {
        manifest.folds.par_iter().map(run).collect::<Result<_>>()?
    } else {
        manifest.folds.iter().map(run).collect::<Result<_>>()?
    };
    let per_entity = folds
        .iter()
        .flat_map(|f| f.report.per_entity_f1.iter().cloned())
        .collect();
    let aggregate = EvalReport::new(manifest.name.clone(), k, None, None, per_entity);
    Ok(CrossValidation { folds, aggregate })
}

/// Trains and evaluates one model per fold.
pub fn cross_validate(
    manifest: &DatasetManifest,
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
    encoded: &EncodedDataset,
    parallel: bool,
) -> Result<CrossValidation<DeepLensModel>> {
    cross_validate_with(manifest, encoded, cfg.k, parallel, |fold| {
        let trained = train_fold(manifest, fold, model_cfg, cfg, encoded)?;
        Ok((trained.model, Some(trained.chosen_epoch)))
    })
}
