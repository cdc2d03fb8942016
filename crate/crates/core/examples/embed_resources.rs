//! Tokenize resources and average their word vectors.
//!
//!     cargo run --example embed_resources -- [VEC_FILE] [TEXT...]

use std::path::PathBuf;

use deeplens::embeddings::{load_vec_file, tokenize};

fn main() -> deeplens::Result<()> {
    let mut args = std::env::args().skip(1);
    let vec_path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy/toy.vec"));
    let mut texts: Vec<String> = args.collect();
    if texts.is_empty() {
        texts = ["birthPlace", "World_Wide_Web", "Tim Berners-Lee", "rdf-schema#label"]
            .map(String::from)
            .to_vec();
    }
    let store = load_vec_file(&vec_path, None)?;
    println!("{} vectors of dimension {}", store.len(), store.dim());
    for text in &texts {
        let tokens = tokenize(text);
        let e = store.embed_tokens(&tokens);
        let shown: Vec<String> = e.vector.iter().map(|x| format!("{x:.4}")).collect();
        println!("{text:?} -> {tokens:?} ({}/{} known) [{}]", e.covered, e.total, shown.join(", "));
    }
    Ok(())
}
