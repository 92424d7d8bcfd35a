//! Generate seeded synthetic typists and summarise their timing.
//!
//! `cargo run --release --example synthetic_users -- [seed] [users] [keystrokes]`

use keydyn::features::timing_features;
use keydyn::ingest::{pair_events, profiles, synthesize};

fn arg(i: usize, default: u64) -> u64 {
    std::env::args().nth(i).and_then(|a| a.parse().ok()).unwrap_or(default)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = arg(1, 7);
    let users = arg(2, 4) as usize;
    let n = arg(3, 2000) as usize;

    let events = synthesize(seed, users, n)?;
    let pairing = pair_events(&events);
    println!("{} events -> {} users", events.len(), pairing.streams.len());

    for (p, s) in profiles(seed, users).iter().zip(&pairing.streams) {
        let ks = &s.keystrokes;
        let hold = ks.iter().map(|k| k.duration_ms() as f64).sum::<f64>() / ks.len() as f64;
        let dd = ks.windows(2).map(|w| timing_features(&w[0], &w[1]).dd as f64).sum::<f64>() / (ks.len() - 1) as f64;
        println!(
            "{}  profile hold {:6.1} ms   observed hold {:6.1} ms   mean DD {:6.1} ms",
            s.user_id,
            p.mean_hold(),
            hold,
            dd
        );
    }
    Ok(())
}
