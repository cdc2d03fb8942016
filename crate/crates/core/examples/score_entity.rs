//! Score one entity with a freshly initialized (or saved) model and show
//! where each candidate's attention goes.
//!
//!     cargo run --example score_entity -- [CHECKPOINT]

use std::path::PathBuf;

use deeplens::embeddings::{load_vec_file, textual_form};
use deeplens::model::load_checkpoint;
use deeplens::{load_manifest, select_summary, DeepLensModel, ModelConfig};

fn main() -> deeplens::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy");
    let manifest = load_manifest(dir.join("manifest.json"))?;
    let store = load_vec_file(dir.join("toy.vec"), None)?;
    let model = match std::env::args().nth(1) {
        Some(path) => load_checkpoint(path)?,
        None => DeepLensModel::new(ModelConfig::with_embed_dim(store.dim()))?,
    };

    let desc = manifest.entity("http://example.org/resource/Ada_Lovelace")?;
    let scored = model.score_entity(desc, &store)?;
    for (i, &id) in scored.ids.iter().enumerate() {
        let t = &desc.triples[id];
        let top = scored.attention[i]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(j, w)| format!("{}:{w:.3}", scored.ids[j]))
            .unwrap_or_default();
        println!(
            "{id:>2} {:>9.5}  {:<12} {:<28} attends most to {top}",
            scored.scores[i],
            textual_form(t.prop()),
            textual_form(t.val())
        );
    }
    println!("top 2: {:?}", select_summary(&scored, 2));
    Ok(())
}
