//! Train and evaluate one model per fold of the bundled two-entity dataset,
//! then save the fold 0 checkpoint.
//!
//!     cargo run --release --example cross_validate_fixture -- [EPOCHS]

use std::path::PathBuf;

use deeplens::model::save_checkpoint;
use deeplens::{cross_validate, load_manifest, load_vec_file, EncodedDataset, ModelConfig, TrainConfig};

fn main() -> deeplens::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(30);
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy");
    let manifest = load_manifest(dir.join("manifest.json"))?;
    let store = load_vec_file(dir.join("toy.vec"), None)?;
    let encoded = EncodedDataset::new(&manifest, &store);

    let model_cfg = ModelConfig::with_embed_dim(store.dim());
    let cfg = TrainConfig {
        k: 2,
        max_epochs: epochs,
        ..TrainConfig::default()
    };
    let cv = cross_validate(&manifest, &model_cfg, &cfg, &encoded, true)?;
    for fold in &cv.folds {
        println!(
            "fold {}: epoch {:?}, F1 {:.4} on {:?}",
            fold.fold,
            fold.chosen_epoch,
            fold.report.mean_f1,
            fold.report.per_entity_f1.iter().map(|(e, _)| e.as_str()).collect::<Vec<_>>()
        );
    }
    println!("mean F1 {:.4}", cv.aggregate.mean_f1);

    let path = std::env::temp_dir().join("deeplens-fold0.checkpoint.json");
    save_checkpoint(&cv.folds[0].scorer, &path)?;
    println!("fold 0 model saved to {}", path.display());
    Ok(())
}
