//! Train the CNN-RNN on one-hot keystroke sequences, comparing GRU, LSTM and
//! a plain RNN cell.

use keydyn::evaluate::{assemble, train_model, FeatureSet, FoldPlan, Metrics};
use keydyn::features::{build_kds, window, CutoutSpec, KeyEncoding, Normalization};
use keydyn::ingest::{pair_events, synthesize};
use keydyn::models::{CnnRnnConfig, ModelConfig};
use keydyn::nn::{CellKind, OptimizerSpec, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let norm = Normalization::default();
    let mut items = Vec::new();
    for s in &pair_events(&synthesize(7, 3, 3000)?).streams {
        items.extend(window(s, 50)?.iter().map(|w| (w.user_id.clone(), build_kds(w, KeyEncoding::OneHot, &norm))));
    }
    let data = FeatureSet::from_kds(&items)?;
    println!("input shape {:?}, users {:?}", data.input_shape, data.counts());

    let set = assemble("user01", &data.counts(), 3)?;
    let labels = set.labels();
    let plan = FoldPlan::new(&labels, 5, 3)?;
    let train: Vec<_> = plan.train_indices(0).iter().map(|&i| set.samples[i].clone()).collect();
    let test = plan.test_indices(0);
    let test_labels: Vec<u8> = test.iter().map(|&i| labels[i]).collect();

    for cell in [CellKind::Gru, CellKind::Lstm, CellKind::Rnn] {
        let model = ModelConfig::CnnRnn(CnnRnnConfig { rnn_kind: cell, ..Default::default() });
        let cfg = TrainConfig {
            epochs: 6,
            batch_size: 8,
            optimizer: OptimizerSpec { learning_rate: 0.003, ..Default::default() },
            seed: 0,
        };
        let (net, fit) = train_model(&data, &train, &model, &cfg, &CutoutSpec::default(), 5, 6)?;
        let mut scores = Vec::new();
        for &i in &test {
            scores.push(net.predict(data.get(&set.samples[i]))?.data[0] as f64);
        }
        let m = Metrics::compute(&scores, &test_labels)?;
        println!(
            "{cell:?}: {} params, final loss {:.3}, EER {:.3}, accuracy {:.3}",
            net.param_count(),
            fit.epoch_losses.last().unwrap(),
            m.eer,
            m.accuracy
        );
    }
    Ok(())
}
