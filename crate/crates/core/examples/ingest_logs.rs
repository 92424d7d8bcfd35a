//! Parse raw keystroke logs in the three supported layouts and pair them
//! into per-user keystroke streams.

use keydyn::ingest::{pair_events, parse_events, write_canonical, EventFormat};

const CANONICAL: &str = "user_id,key,action,timestamp_ms
alice,h,D,1000
alice,h,U,1090
alice,i,D,1180
alice,Space,D,1250
alice,i,U,1262
alice,Space,U,1330
alice,F5,D,1400
alice,F5,U,1450
";

const BUFFALO: &str = "H KeyDown 5000
H KeyUp 5085
E KeyDown 5170
E KeyUp 5251
Y KeyDown 5300
Y KeyUp 5380
";

const CLARKSON: &str = "9000\t0\tq
9070\t1\tq
9140\t0\tLShiftKey
9160\t0\tw
9230\t1\tw
9250\t1\tLShiftKey
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut events = parse_events(CANONICAL.as_bytes(), EventFormat::Canonical, None, "")?.events;
    events.extend(parse_events(BUFFALO.as_bytes(), EventFormat::Buffalo, None, "bob")?.events);
    events.extend(parse_events(CLARKSON.as_bytes(), EventFormat::Clarkson, None, "carol")?.events);

    let pairing = pair_events(&events);
    for s in &pairing.streams {
        let keys: Vec<String> = s.keystrokes.iter().map(|k| k.key.canonical_label()).collect();
        println!("{:6} {} keystrokes: {}", s.user_id, s.keystrokes.len(), keys.join(" "));
    }
    println!(
        "dropped downs {}, orphan ups {}, untracked {}",
        pairing.dropped_downs, pairing.orphan_ups, pairing.untracked
    );

    // canonical CSV of everything that paired
    let paired: Vec<_> = pairing.streams.iter().flat_map(|s| s.to_events()).collect();
    let mut out = Vec::new();
    write_canonical(&mut out, &paired)?;
    print!("{}", String::from_utf8(out)?);
    Ok(())
}
