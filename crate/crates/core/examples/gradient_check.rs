//! Compare backpropagated gradients with central finite differences.

use deeplens::model::TripleVector;
use deeplens::nn::grad_check;
use deeplens::{DeepLensModel, ModelConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> deeplens::Result<()> {
    let config = ModelConfig {
        embed_dim: 4,
        mlp_c_hidden: vec![6, 6],
        mlp_d_hidden: vec![6, 6],
        mlp_s_hidden: vec![6, 6, 6],
        seed: 3,
    };
    let model = DeepLensModel::new(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 1..=4 {
        let vectors: Vec<TripleVector> = (0..n)
            .map(|id| TripleVector {
                id,
                values: (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            })
            .collect();
        let targets: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let (loss, grads) = model.loss_and_gradients(&vectors, &targets)?;
        let err = grad_check(
            |p| {
                let mut m = model.clone();
                m.set_flat_params(p).expect("same length");
                m.loss_and_gradients(&vectors, &targets).expect("valid input").0
            },
            &model.flat_params(),
            &grads.flatten(),
        );
        println!("{n} triples: loss {loss:.6}, max relative error {err:.2e}");
    }
    Ok(())
}
