//! Stratified 5-fold cross validation for every user, then a CSV summary.

use keydyn::evaluate::{assemble, cross_validate, fold_csv, summarize, FeatureSet};
use keydyn::features::{build_kds, window, CutoutSpec, KeyEncoding, Normalization};
use keydyn::ingest::{pair_events, synthesize};
use keydyn::models::{ModelConfig, ModelKind};
use keydyn::nn::{OptimizerSpec, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let norm = Normalization::default();
    let mut items = Vec::new();
    for s in &pair_events(&synthesize(2, 3, 1500)?).streams {
        items.extend(window(s, 50)?.iter().map(|w| (w.user_id.clone(), build_kds(w, KeyEncoding::Index, &norm))));
    }
    let data = FeatureSet::from_kds(&items)?;
    let model = ModelConfig::default_for(ModelKind::CnnRnn);
    let cfg = TrainConfig {
        epochs: 4,
        batch_size: 8,
        optimizer: OptimizerSpec { learning_rate: 0.003, ..Default::default() },
        seed: 0,
    };

    let mut results = Vec::new();
    for user in data.users.keys() {
        let set = assemble(user, &data.counts(), 0)?;
        results.push(cross_validate(&data, &set, &model, &cfg, &CutoutSpec::default(), 5, 0)?);
    }
    print!("{}", fold_csv(&results));
    let summary = summarize(&results);
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
