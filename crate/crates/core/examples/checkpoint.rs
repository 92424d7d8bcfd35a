//! Save a trained verifier and score new samples with the reloaded copy.

use keydyn::evaluate::{assemble, train_model, FeatureSet};
use keydyn::features::{build_kds, window, CutoutSpec, KeyEncoding, Normalization};
use keydyn::ingest::{pair_events, synthesize};
use keydyn::models::{ModelConfig, ModelKind};
use keydyn::nn::{Checkpoint, OptimizerSpec, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let norm = Normalization::default();
    let mut items = Vec::new();
    for s in &pair_events(&synthesize(9, 2, 1000)?).streams {
        items.extend(window(s, 50)?.iter().map(|w| (w.user_id.clone(), build_kds(w, KeyEncoding::OneHot, &norm))));
    }
    let data = FeatureSet::from_kds(&items)?;
    let set = assemble("user01", &data.counts(), 0)?;
    let model = ModelConfig::default_for(ModelKind::CnnRnn);
    let cfg = TrainConfig {
        epochs: 2,
        batch_size: 8,
        optimizer: OptimizerSpec { learning_rate: 0.003, ..Default::default() },
        seed: 0,
    };
    let (net, _) = train_model(&data, &set.samples, &model, &cfg, &CutoutSpec::disabled(), 1, 2)?;

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("user01.ckpt.json");
    let metrics = serde_json::json!({ "user_id": "user01" });
    Checkpoint::capture(&net, "cnn-rnn", serde_json::to_value(&model)?, 0, cfg.epochs, metrics).save(&path)?;
    println!("checkpoint: {} bytes", std::fs::metadata(&path)?.len());

    let back = Checkpoint::load(&path)?.network()?;
    for (user, samples) in &data.users {
        let a = net.predict(&samples[0])?.data[0];
        let b = back.predict(&samples[0])?.data[0];
        assert_eq!(a.to_bits(), b.to_bits());
        println!("{user}: score {a:.4}");
    }
    Ok(())
}
