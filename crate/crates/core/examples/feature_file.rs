//! Write and read back a binary feature file.

use keydyn::features::{build_kds, window, KdfFile, KeyEncoding, Normalization};
use keydyn::ingest::{pair_events, synthesize};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let norm = Normalization::default();
    let pairing = pair_events(&synthesize(1, 3, 500)?);
    let mut items = Vec::new();
    for s in &pairing.streams {
        for w in window(s, 50)? {
            items.push((w.user_id.clone(), build_kds(&w, KeyEncoding::Index, &norm)));
        }
    }
    let kdf = KdfFile::from_kds(&items, None, norm, KeyEncoding::Index, 50)?;

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("features.kdf");
    kdf.save(&path)?;
    let bytes = std::fs::metadata(&path)?.len();
    let back = KdfFile::load(&path)?;
    assert_eq!(back, kdf);

    let h = &back.header;
    println!("{} bytes, layout {}, shape {:?}", bytes, h.layout, h.shape);
    println!("channels: {}", h.channel_order.join(", "));
    println!("first sample starts {:?}", &back.sample(0)[..7]);
    Ok(())
}
