//! Cutout on keystroke images and sequences.

use keydyn::features::{
    apply_cutout, build_kdi, build_kds, window, Cutout, CutoutSpec, Kdi, KeyEncoding, Normalization, KDI_LEN,
};
use keydyn::ingest::{pair_events, synthesize};

fn zeros(v: &[f64]) -> usize {
    v.iter().filter(|x| **x == 0.0).count()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let stream = pair_events(&synthesize(5, 1, 200)?).streams.remove(0);
    let sub = &window(&stream, 100)?[0];
    let norm = Normalization::default();
    let kdi = build_kdi(sub, &norm);
    let kds = build_kds(sub, KeyEncoding::OneHot, &norm);

    let forced = CutoutSpec { probability: 1.0, rng_seed: 42, ..Default::default() };
    let img = apply_cutout(&kdi, &forced);
    let seq = apply_cutout(&kds, &forced);
    println!("image: {} -> {} zero cells", zeros(&kdi.data), zeros(&img.data));
    // most of a real image is already empty; a dense one shows the full square
    let dense = Kdi { data: vec![1.0; KDI_LEN] };
    println!(
        "dense image: {} cells zeroed (square {} on all 5 channels)",
        zeros(&apply_cutout(&dense, &forced).data),
        forced.kdi_size
    );
    println!("sequence: {} -> {} zero cells (span {} rows)", zeros(&kds.data), zeros(&seq.data), forced.kds_span);

    // a fixed anchor
    let corner = kdi.cutout_at(&forced, (0, 0));
    println!("anchored at (0, 0): first row starts {:?}", &corner.data[..4]);

    let off = CutoutSpec { probability: 0.0, ..forced };
    assert_eq!(apply_cutout(&kdi, &off), kdi);
    assert_eq!(apply_cutout(&kdi, &forced), img);
    println!("probability 0 is the identity; same seed gives the same cutout");
    Ok(())
}
