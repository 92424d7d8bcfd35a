//! Build a keystroke dynamics image from one window of synthetic typing.

use keydyn::features::{build_kdi, window, KdiChannel, Normalization};
use keydyn::ingest::{pair_events, synthesize, KeyIndex, NUM_KEYS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let events = synthesize(3, 1, 400)?;
    let stream = &pair_events(&events).streams[0];
    let windows = window(stream, 100)?;
    let kdi = build_kdi(&windows[0], &Normalization::default());

    for ch in KdiChannel::ALL {
        let mut filled = 0;
        let mut top = (0.0f64, 0, 0);
        for r in 0..NUM_KEYS {
            for c in 0..NUM_KEYS {
                let v = kdi.get(ch, r, c);
                if v != 0.0 {
                    filled += 1;
                }
                if v.abs() > top.0.abs() {
                    top = (v, r, c);
                }
            }
        }
        let name = |i: usize| KeyIndex::new(i as u8).unwrap().canonical_label();
        println!(
            "{:>8}: {:4} non-zero cells, largest {:+.4} at ({}, {}) = {:.0} ms",
            ch.name(),
            filled,
            top.0,
            name(top.1),
            name(top.2),
            top.0 * 5000.0
        );
    }
    Ok(())
}
