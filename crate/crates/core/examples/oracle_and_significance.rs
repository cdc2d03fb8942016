//! Upper-bound summaries from gold agreement, F1 scoring and a paired t-test.

use std::path::PathBuf;

use deeplens::eval::oracle_scores;
use deeplens::{f1_against_golds, load_manifest, oracle_summary, paired_ttest};

fn main() -> deeplens::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy");
    let manifest = load_manifest(dir.join("manifest.json"))?;
    let k = 2;
    for desc in &manifest.entities {
        let oracle = oracle_summary(desc, k)?;
        let first_k: Vec<usize> = (0..k).collect();
        println!(
            "{}: oracle {:?} F1 {:.4}, first {k} F1 {:.4}",
            desc.iri(),
            oracle,
            f1_against_golds(&oracle, desc.golds(k)?)?,
            f1_against_golds(&first_k, desc.golds(k)?)?
        );
    }
    let oracle: Vec<f64> = oracle_scores(&manifest.entities, k)?.into_iter().map(|(_, f)| f).collect();
    println!("oracle scores {oracle:?}");

    // paired comparison of two systems over the same entities
    let system_a = [0.41, 0.52, 0.38, 0.60, 0.47, 0.55];
    let system_b = [0.35, 0.50, 0.30, 0.52, 0.49, 0.44];
    println!("A vs B: {}", paired_ttest(&system_a, &system_b)?);
    Ok(())
}
