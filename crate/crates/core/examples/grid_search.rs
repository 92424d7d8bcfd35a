//! A small hyper-parameter grid for one user.

use keydyn::evaluate::{assemble, grid_csv, grid_search, FeatureSet, GridSpec};
use keydyn::features::{build_kds, window, CutoutSpec, KeyEncoding, Normalization};
use keydyn::ingest::{pair_events, synthesize};
use keydyn::models::{CnnRnnConfig, ModelConfig};
use keydyn::nn::{OptimizerKind, Schedule, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let norm = Normalization::default();
    let mut items = Vec::new();
    for s in &pair_events(&synthesize(4, 2, 1200)?).streams {
        items.extend(window(s, 40)?.iter().map(|w| (w.user_id.clone(), build_kds(w, KeyEncoding::Index, &norm))));
    }
    let data = FeatureSet::from_kds(&items)?;
    let model =
        ModelConfig::CnnRnn(CnnRnnConfig { conv_filters: 8, rnn_hidden: 16, rnn_layers: 1, ..Default::default() });

    let grid = GridSpec {
        epochs: vec![2, 4],
        learning_rates: vec![0.01, 0.003],
        optimizers: vec![OptimizerKind::Adam, OptimizerKind::SgdMomentum],
        schedules: vec![Schedule::step(0.5), Schedule::plateau()],
    };
    println!("{} cells; the full preset has {}", grid.len(), GridSpec::paper().len());

    let set = assemble("user00", &data.counts(), 0)?;
    let base = TrainConfig { batch_size: 8, ..Default::default() };
    let results = grid_search(&data, &set, &model, &grid, &base, &CutoutSpec::default(), 1, 0)?;
    print!("{}", grid_csv(std::slice::from_ref(&results)));
    let best = results.best();
    println!("best: {:?} with EER {:.3}", best.cell, best.mean_eer);
    Ok(())
}
