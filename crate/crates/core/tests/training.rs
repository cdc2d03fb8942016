mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use deeplens::dataset::{parse_triples_document, SupervisionTarget};
use deeplens::embeddings::load_vec_file;
use deeplens::model::ScoredDescription;
use deeplens::train::{cross_validate_with, evaluate_entities, TripleScorer};
use deeplens::{
    cross_validate, f1_against_golds, load_manifest, train_fold, DatasetManifest, EarlyStopMetric, EncodedDataset,
    EntityDescription, FoldSpec, GoldSummary, Resource, TrainConfig, TripleVector,
};
use proptest::prelude::*;

/// Scores every triple 0, so summaries are the k smallest ids.
#[derive(Debug)]
struct Flat;

impl TripleScorer for Flat {
    fn score(&self, vectors: &[TripleVector]) -> deeplens::Result<ScoredDescription> {
        let mut ids: Vec<usize> = vectors.iter().map(|t| t.id).collect();
        ids.sort();
        Ok(ScoredDescription {
            entity: None,
            scores: vec![0.0; ids.len()],
            attention: vec![],
            ids,
        })
    }
}

fn toy() -> (DatasetManifest, EncodedDataset) {
    let m = load_manifest(fixture_dir().join("manifest.json")).unwrap();
    let store = load_vec_file(fixture_dir().join("toy.vec"), None).unwrap();
    let enc = EncodedDataset::new(&m, &store);
    (m, enc)
}

fn toy_model() -> deeplens::ModelConfig {
    deeplens::ModelConfig {
        embed_dim: 3,
        ..toy_config(0)
    }
}

fn cfg(max_epochs: usize) -> TrainConfig {
    TrainConfig {
        max_epochs,
        k: 2,
        ..TrainConfig::default()
    }
}

/// Hand F1: mean over golds of 2PR/(P+R).
fn hand_f1(summary: &BTreeSet<usize>, golds: &[GoldSummary]) -> f64 {
    let mut total = 0.0;
    for g in golds {
        let hit = summary.intersection(&g.triple_ids).count() as f64;
        if hit > 0.0 {
            let p = hit / summary.len() as f64;
            let r = hit / g.triple_ids.len() as f64;
            total += 2.0 * p * r / (p + r);
        }
    }
    total / golds.len() as f64
}

#[test]
fn single_epoch_is_chosen() {
    let (m, enc) = toy();
    let trained = train_fold(&m, &m.folds[0], &toy_model(), &cfg(1), &enc).unwrap();
    assert_eq!(trained.chosen_epoch, 1);
    assert_eq!(trained.history.len(), 1);
}

#[test]
fn training_is_bit_reproducible() {
    let (m, enc) = toy();
    let a = cross_validate(&m, &toy_model(), &cfg(8), &enc, false).unwrap();
    let b = cross_validate(&m, &toy_model(), &cfg(8), &enc, true).unwrap();
    for (x, y) in a.folds.iter().zip(&b.folds) {
        let (px, py) = (x.scorer.flat_params(), y.scorer.flat_params());
        assert!(px.iter().zip(&py).all(|(p, q)| p.to_bits() == q.to_bits()));
        assert_eq!(x.chosen_epoch, y.chosen_epoch);
    }
    assert_eq!(a.aggregate, b.aggregate);
}

#[test]
fn chosen_epoch_has_best_validation_metric() {
    let (m, enc) = toy();
    for early_stop in [EarlyStopMetric::ValF1, EarlyStopMetric::ValLoss] {
        let c = TrainConfig { early_stop, ..cfg(15) };
        let trained = train_fold(&m, &m.folds[1], &toy_model(), &c, &enc).unwrap();
        let metrics: Vec<f64> = trained.history.iter().map(|r| r.valid_metric.unwrap()).collect();
        let chosen = metrics[trained.chosen_epoch - 1];
        let better = |a: f64, b: f64| match early_stop {
            EarlyStopMetric::ValF1 => a > b,
            EarlyStopMetric::ValLoss => a < b,
        };
        assert!(metrics.iter().all(|&v| !better(v, chosen)));
        // earliest among ties
        assert!(metrics[..trained.chosen_epoch - 1].iter().all(|&v| better(chosen, v)));

        // the snapshot really is the chosen epoch's model
        let again = train_fold(&m, &m.folds[1], &toy_model(), &TrainConfig { max_epochs: trained.chosen_epoch, ..c }, &enc)
            .unwrap();
        assert_eq!(again.history.last().unwrap().valid_metric, Some(chosen));
        assert_eq!(again.model.flat_params(), trained.model.flat_params());
    }
}

#[test]
fn memorizes_a_single_entity() {
    let (m, store) = memorization_dataset(8, 3, 6, 7);
    let enc = EncodedDataset::new(&m, &store);
    let c = TrainConfig { k: 3, max_epochs: 200, ..TrainConfig::default() };
    let trained = train_fold(&m, &memorization_fold(), &toy_config(1), &c, &enc).unwrap();
    let f1 = evaluate_entities(&trained.model, &m, &enc, &["http://x/e".to_string()], 3).unwrap();
    assert_eq!(f1[0].1, 1.0);
    let first = trained.history[0].train_loss;
    assert!(trained.history.last().unwrap().train_loss < first);
}

#[test]
fn constant_scorer_matches_hand_f1() {
    let (m, enc) = toy();
    let cv = cross_validate_with(&m, &enc, 2, false, |_| Ok((Flat, None))).unwrap();
    let summary = BTreeSet::from([0, 1]);
    // every Tim gold is {2,6}, so Tim scores 0
    for (iri, f1) in &cv.aggregate.per_entity_f1 {
        let expected = hand_f1(&summary, m.entity(iri).unwrap().golds(2).unwrap());
        assert!((f1 - expected).abs() < 1e-15, "{iri}");
    }
    assert_eq!(cv.aggregate.per_entity_f1.len(), 2);
    assert_eq!(cv.folds[1].report.per_entity_f1, vec![(TIM.to_string(), 0.0)]);
}

#[test]
fn one_fold_cross_validation_equals_direct_training() {
    let (m, enc) = toy();
    let single = DatasetManifest::new("one", m.entities.clone(), vec![m.folds[0].clone()]).unwrap();
    let cv = cross_validate(&single, &toy_model(), &cfg(5), &enc, false).unwrap();
    let trained = train_fold(&m, &m.folds[0], &toy_model(), &cfg(5), &enc).unwrap();
    let direct = evaluate_entities(&trained.model, &m, &enc, &m.folds[0].test, 2).unwrap();
    assert_eq!(cv.folds[0].report.per_entity_f1, direct);
    assert_eq!(cv.folds[0].chosen_epoch, Some(trained.chosen_epoch));
}

#[test]
fn leaking_fold_is_rejected() {
    let (m, enc) = toy();
    let mut leaky = m.clone();
    leaky.folds[0].valid.push(ADA.to_string());
    let err = cross_validate_with(&leaky, &enc, 2, false, |_| Ok((Flat, None))).unwrap_err();
    assert!(err.to_string().contains("fold 0"), "{err}");
}

fn synthetic(entities: usize, folds: usize) -> DatasetManifest {
    let mut descs = Vec::new();
    for e in 0..entities {
        let iri = format!("http://x/e{e}");
        let doc: String = (0..6).map(|i| format!("<{iri}> <http://x/p{i}> \"v{}\" .\n", (i + e) % 4)).collect();
        let golds = (0..6)
            .map(|a| GoldSummary {
                annotator: a.to_string(),
                triple_ids: [(a + e) % 6, (a * 2 + 1) % 6].into(),
            })
            .collect();
        descs.push(EntityDescription {
            entity: Resource::iri(&iri),
            triples: parse_triples_document(&doc, &iri).unwrap(),
            gold: BTreeMap::from([(2, golds)]),
        });
    }
    let per = entities / folds;
    let specs = (0..folds)
        .map(|f| {
            let test: Vec<String> = (f * per..(f + 1) * per).map(|e| format!("http://x/e{e}")).collect();
            FoldSpec {
                index: f,
                train: (0..entities).filter(|e| e / per != f).map(|e| format!("http://x/e{e}")).collect(),
                valid: vec![],
                test,
            }
        })
        .collect();
    DatasetManifest::new("synthetic", descs, specs).unwrap()
}

#[test]
fn five_folds_score_every_entity_once() {
    let m = synthetic(125, 5);
    let store = load_vec_file(fixture_dir().join("toy.vec"), None).unwrap();
    let enc = EncodedDataset::new(&m, &store);
    let cv = cross_validate_with(&m, &enc, 2, true, |_| Ok((Flat, None))).unwrap();
    assert_eq!(cv.aggregate.per_entity_f1.len(), 125);
    let seen: BTreeSet<&String> = cv.aggregate.per_entity_f1.iter().map(|(e, _)| e).collect();
    assert_eq!(seen.len(), 125);
    assert!(cv.folds.iter().all(|f| f.report.per_entity_f1.len() == 25));
    let mean = cv.aggregate.scores().iter().sum::<f64>() / 125.0;
    assert!((cv.aggregate.mean_f1 - mean).abs() < 1e-12);
}

#[test]
fn gold_frequency_and_any_gold_targets_differ_only_where_expected() {
    let (m, _) = toy();
    let ada = m.entity(ADA).unwrap();
    let freq = ada.supervision_labels(2, SupervisionTarget::GoldFrequency).unwrap();
    let any = ada.supervision_labels(2, SupervisionTarget::AnyGold).unwrap();
    for (f, a) in freq.iter().zip(&any) {
        assert_eq!(*a, if *f > 0.0 { 1.0 } else { 0.0 });
    }
}

fn gold_strategy() -> impl Strategy<Value = Vec<BTreeSet<usize>>> {
    prop::collection::vec(prop::collection::btree_set(0usize..10, 1..=4), 1..7)
}

proptest! {
    #[test]
    fn f1_matches_hand_oracle(summary in prop::collection::btree_set(0usize..10, 1..=4), golds in gold_strategy()) {
        let golds: Vec<GoldSummary> = golds.into_iter().map(|g| GoldSummary { annotator: String::new(), triple_ids: g }).collect();
        let ids: Vec<usize> = summary.iter().copied().collect();
        let f1 = f1_against_golds(&ids, &golds).unwrap();
        prop_assert!((0.0..=1.0).contains(&f1));
        prop_assert!((f1 - hand_f1(&summary, &golds)).abs() < 1e-12);
    }

    #[test]
    fn adding_a_gold_hit_never_lowers_f1(golds in gold_strategy(), a in 0usize..10, b in 0usize..10) {
        // replace a triple outside every gold by one inside the first gold
        let golds: Vec<GoldSummary> = golds.into_iter().map(|g| GoldSummary { annotator: String::new(), triple_ids: g }).collect();
        let inside = *golds[0].triple_ids.iter().next().unwrap();
        let outside = 10 + a;
        let filler = b % 10;
        prop_assume!(filler != inside);
        let before = f1_against_golds(&[filler, outside], &golds).unwrap();
        let after = f1_against_golds(&[filler, inside], &golds).unwrap();
        prop_assert!(after >= before);
    }
}
