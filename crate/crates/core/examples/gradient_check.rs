//! Finite-difference check of the backward pass for a few small networks.

use keydyn::models::{CnnRnnConfig, ModelConfig};
use keydyn::nn::{grad_check, CellKind, GradCheckOptions, LayerSpec, Network, Tensor};
use rand::{Rng, SeedableRng};

fn random(shape: &[usize], seed: u64) -> Tensor<f64> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    Tensor::new(shape.to_vec(), (0..shape.iter().product()).map(|_| rng.random_range(-1.0..1.0)).collect())
}

fn report(name: &str, net: &Network<f64>, seed: u64) {
    let x = random(&net.input_shape, seed);
    let y = random(net.output_shape(), seed + 1);
    let r = grad_check(net, &x, &y, &GradCheckOptions::default()).unwrap();
    println!(
        "{name:>22}: {:6} entries  max rel err {:.2e}  {}",
        r.checked,
        r.max_rel_error,
        if r.pass { "ok" } else { "FAIL" }
    );
}

fn main() {
    let dense = Network::<f64>::new(
        vec![12],
        vec![
            LayerSpec::Dense { inputs: 12, outputs: 6 },
            LayerSpec::Sigmoid,
            LayerSpec::Dense { inputs: 6, outputs: 2 },
        ],
        1,
    )
    .unwrap();
    report("dense + sigmoid", &dense, 10);

    for cell in [CellKind::Rnn, CellKind::Gru, CellKind::Lstm] {
        let rec = Network::<f64>::new(
            vec![7, 4],
            vec![LayerSpec::Recurrent { cell, input_size: 4, hidden_size: 5, num_layers: 2 }],
            2,
        )
        .unwrap();
        report(&format!("{cell:?} x2"), &rec, 20);
    }

    let small = ModelConfig::CnnRnn(CnnRnnConfig { conv_filters: 3, rnn_hidden: 4, ..Default::default() });
    let net = small.build(&[1, 8, 13], 3).unwrap().cast::<f64>();
    report("reduced CNN-RNN", &net, 30);
}
