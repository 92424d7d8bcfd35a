//! Keystroke dynamics sequences with one-hot and index key encodings.

use keydyn::features::{build_kds, window, KeyEncoding, Normalization, TIMING_COLUMN_NAMES};
use keydyn::ingest::{pair_events, synthesize};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let events = synthesize(11, 1, 300)?;
    let stream = &pair_events(&events).streams[0];
    let sub = &window(stream, 50)?[0];
    let norm = Normalization::default();

    for enc in [KeyEncoding::OneHot, KeyEncoding::Index] {
        let kds = build_kds(sub, enc, &norm);
        println!("{}: shape {:?}", enc.name(), kds.shape());
        let keys = enc.key_columns();
        for i in 0..3 {
            let row = kds.row(i);
            let key = match enc {
                KeyEncoding::OneHot => row[..keys].iter().position(|v| *v == 1.0).unwrap_or(usize::MAX) as f64,
                KeyEncoding::Index => row[0],
            };
            let timing: Vec<String> = TIMING_COLUMN_NAMES
                .iter()
                .zip(&row[keys..])
                .map(|(n, v)| format!("{n}={:.0}ms", v * norm.clip_ms))
                .collect();
            println!("  row {i}: key {key:.3}  {}", timing.join(" "));
        }
    }
    Ok(())
}
