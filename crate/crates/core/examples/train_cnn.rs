//! Train the keystroke-image CNN to tell one synthetic user from another.
//!
//! `cargo run --release --example train_cnn -- [epochs]`

use keydyn::evaluate::{assemble, train_model, FeatureSet, FoldPlan, Metrics};
use keydyn::features::{build_kdi, window, CutoutSpec, Normalization};
use keydyn::ingest::{pair_events, synthesize};
use keydyn::models::{ModelConfig, ModelKind};
use keydyn::nn::{OptimizerSpec, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let epochs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(5);
    let norm = Normalization::default();
    let mut items = Vec::new();
    for s in &pair_events(&synthesize(7, 2, 8000)?).streams {
        items.extend(window(s, 100)?.iter().map(|w| (w.user_id.clone(), build_kdi(w, &norm))));
    }
    let data = FeatureSet::from_kdis(&items);

    let set = assemble("user00", &data.counts(), 0)?;
    let labels = set.labels();
    let plan = FoldPlan::new(&labels, 5, 0)?;
    let train: Vec<_> = plan.train_indices(0).iter().map(|&i| set.samples[i].clone()).collect();

    let model = ModelConfig::default_for(ModelKind::Cnn);
    let cfg = TrainConfig {
        epochs,
        batch_size: 8,
        optimizer: OptimizerSpec { learning_rate: model.default_learning_rate(), ..Default::default() },
        seed: 1,
    };
    let (net, fit) = train_model(&data, &train, &model, &cfg, &CutoutSpec::default(), 1, 2)?;
    println!("{} parameters, epoch losses {:.3?}", net.param_count(), fit.epoch_losses);

    let test = plan.test_indices(0);
    let mut scores = Vec::new();
    for &i in &test {
        scores.push(net.predict(data.get(&set.samples[i]))?.data[0] as f64);
    }
    let test_labels: Vec<u8> = test.iter().map(|&i| labels[i]).collect();
    let m = Metrics::compute(&scores, &test_labels)?;
    println!("held-out: {} samples, EER {:.3}, accuracy {:.3}", test.len(), m.eer, m.accuracy);
    Ok(())
}
