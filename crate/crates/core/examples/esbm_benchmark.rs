//! Five-fold cross-validation on an ESBM checkout with fastText vectors.
//!
//!     ESBM_DIR=/data/ESBM FASTTEXT_VEC=/data/wiki-news-300d-1M.vec \
//!         cargo run --release --example esbm_benchmark -- [dbpedia|lmdb|all] [K]

use std::collections::HashSet;

use deeplens::dataset::{load_esbm, EsbmLayout, EsbmSubset};
use deeplens::embeddings::manifest_vocabulary;
use deeplens::eval::oracle_scores;
use deeplens::{cross_validate, load_vec_file, paired_ttest, EncodedDataset, ModelConfig, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (Ok(root), Ok(vec_path)) = (std::env::var("ESBM_DIR"), std::env::var("FASTTEXT_VEC")) else {
        eprintln!("set ESBM_DIR and FASTTEXT_VEC");
        std::process::exit(1);
    };
    let mut args = std::env::args().skip(1);
    let subset = match args.next().as_deref() {
        None | Some("dbpedia") => EsbmSubset::Dbpedia,
        Some("lmdb") => EsbmSubset::Lmdb,
        Some("all") => EsbmSubset::All,
        Some(other) => return Err(format!("unknown subset {other}").into()),
    };
    let k: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(5);

    let manifest = load_esbm(&EsbmLayout::new(root), subset)?;
    let vocab: HashSet<String> = manifest_vocabulary(&manifest).into_iter().collect();
    let store = load_vec_file(&vec_path, Some(&vocab))?;
    println!("{} entities, {} of {} words have vectors", manifest.entities.len(), store.len(), vocab.len());

    let encoded = EncodedDataset::new(&manifest, &store);
    let cfg = TrainConfig { k, ..TrainConfig::default() };
    let cv = cross_validate(&manifest, &ModelConfig::with_embed_dim(store.dim()), &cfg, &encoded, true)?;
    for fold in &cv.folds {
        println!("fold {}: epoch {:?}, F1 {:.4}", fold.fold, fold.chosen_epoch, fold.report.mean_f1);
    }
    println!("mean F1@{k} {:.4}", cv.aggregate.mean_f1);

    let oracle: Vec<f64> = {
        let by_iri: std::collections::HashMap<String, f64> = oracle_scores(&manifest.entities, k)?.into_iter().collect();
        cv.aggregate.per_entity_f1.iter().map(|(e, _)| by_iri[e]).collect()
    };
    println!("ORACLE F1@{k} {:.4}", oracle.iter().sum::<f64>() / oracle.len() as f64);
    println!("vs ORACLE: {}", paired_ttest(&cv.aggregate.scores(), &oracle)?);
    Ok(())
}
