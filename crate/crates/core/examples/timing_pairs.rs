//! The six timing features between consecutive keystrokes.

use keydyn::features::timing_features;
use keydyn::ingest::{normalize_key, Keystroke};

fn main() {
    let k = |label: &str, down, up| Keystroke::new(normalize_key(label).unwrap(), down, up);
    // "the" with an overlapping h -> e rollover
    let typed = [k("t", 0, 95), k("h", 160, 260), k("e", 230, 300), k("space", 410, 470)];

    println!("{:>4} {:>4} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6}", "a", "b", "dur_a", "dur_b", "DD", "UD", "UU", "DU");
    for w in typed.windows(2) {
        let t = timing_features(&w[0], &w[1]);
        println!(
            "{:>4} {:>4} {:>6} {:>6} {:>6} {:>6} {:>6} {:>6}",
            w[0].key.canonical_label(),
            w[1].key.canonical_label(),
            t.duration_a,
            t.duration_b,
            t.dd,
            t.ud,
            t.uu,
            t.du
        );
        assert_eq!(t.du - t.dd, t.duration_b);
        assert_eq!(t.uu - t.ud, t.duration_b);
    }
}
