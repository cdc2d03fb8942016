//! Parse an N-Triples file into the candidate triples of one entity.
//!
//!     cargo run --example parse_description -- [FILE ENTITY_IRI]

use std::path::PathBuf;

use deeplens::dataset::parse_triples_document;
use deeplens::embeddings::textual_form;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (path, entity) = match args.as_slice() {
        [path, entity] => (PathBuf::from(path), entity.clone()),
        _ => (
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy/tim.nt"),
            "http://example.org/resource/Tim_Berners-Lee".to_string(),
        ),
    };
    let text = std::fs::read_to_string(&path)?;
    let triples = parse_triples_document(&text, &entity)?;
    println!("{} candidate triples for <{entity}>", triples.len());
    for t in &triples {
        let side = if t.entity_is_subject { "out" } else { "in " };
        println!("{:>3} {side} {:<14} {}", t.id, textual_form(t.prop()), textual_form(t.val()));
    }
    Ok(())
}
