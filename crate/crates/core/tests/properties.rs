mod common;

use std::collections::BTreeMap;

use keydyn::evaluate::{accuracy, assemble, eer, roc, FoldPlan};
use keydyn::features::{
    apply_cutout, build_kdi, build_kds, timing_features, CutoutSpec, Kdi, KdiChannel, KeyEncoding, Normalization,
    KDI_LEN, TIMING_COLUMNS,
};
use keydyn::ingest::{
    pair_events, parse_events, synthesize, write_canonical, Action, EventFormat, KeyEvent, KeyIndex, Keystroke,
    UserStream, NUM_KEYS,
};
use keydyn::nn::{fit, LayerSpec, Network, OptimizerSpec, Schedule, Tensor, TrainConfig, TrainState};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Valid stream: presses strictly increase and a key is never pressed again
/// before its previous release.
fn stream_strategy() -> impl Strategy<Value = UserStream> {
    prop::collection::vec((0u8..NUM_KEYS as u8, 1u64..400, 1u64..300), 1..120).prop_map(|spec| {
        let mut t = 0u64;
        let mut last_release = [0u64; NUM_KEYS];
        let mut keystrokes = Vec::new();
        for (k, gap, hold) in spec {
            t = (t + gap).max(last_release[k as usize] + 1);
            let release = t + hold;
            last_release[k as usize] = release;
            keystrokes.push(Keystroke::new(KeyIndex::new(k).unwrap(), t, release));
        }
        UserStream { user_id: "u1".into(), keystrokes }
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn canonical_csv_round_trips_streams(stream in stream_strategy()) {
        let mut csv = Vec::new();
        write_canonical(&mut csv, &stream.to_events()).unwrap();
        let parsed = parse_events(csv.as_slice(), EventFormat::Canonical, None, "").unwrap();
        prop_assert_eq!(parsed.malformed, 0);
        let back = pair_events(&parsed.events);
        prop_assert_eq!(back.streams, vec![stream]);
        prop_assert_eq!((back.dropped_downs, back.orphan_ups, back.untracked), (0, 0, 0));
    }

    #[test]
    fn pairing_accounts_for_every_tracked_down(
        raw in prop::collection::vec((0usize..4, 0usize..46, any::<bool>(), 0u64..2000), 0..300)
    ) {
        const LABELS: [&str; 4] = ["F1", "-", "Enter", "Home"];
        let events: Vec<KeyEvent> = raw
            .iter()
            .map(|&(u, k, down, t)| {
                let label = if k < NUM_KEYS { KeyIndex::new(k as u8).unwrap().canonical_label() } else { LABELS[k - NUM_KEYS].to_string() };
                KeyEvent::new(format!("u{u}"), label, if down { Action::Down } else { Action::Up }, t)
            })
            .collect();
        let p = pair_events(&events);
        let downs = raw.iter().filter(|(_, k, d, _)| *d && *k < NUM_KEYS).count();
        let paired: usize = p.streams.iter().map(|s| s.keystrokes.len()).sum();
        prop_assert_eq!(paired + p.dropped_downs, downs);
        for s in &p.streams {
            prop_assert!(s.keystrokes.windows(2).all(|w| w[0].press_ms <= w[1].press_ms));
            prop_assert!(s.keystrokes.iter().all(|k| k.release_ms >= k.press_ms && k.key.as_usize() < NUM_KEYS));
        }
    }

    #[test]
    fn timing_identities_hold(ap in 0u64..1_000_000, ha in 0u64..3000, gap in 0u64..5000, hb in 0u64..3000) {
        let a = Keystroke::new(KeyIndex::new(3).unwrap(), ap, ap + ha);
        let b = Keystroke::new(KeyIndex::new(9).unwrap(), ap + gap, ap + gap + hb);
        let t = timing_features(&a, &b);
        prop_assert_eq!(t.du - t.dd, t.duration_b);
        prop_assert_eq!(t.uu - t.ud, t.duration_b);
        prop_assert!(t.dd >= 0 && t.duration_a >= 0 && t.duration_b >= 0);
    }

    #[test]
    fn kdi_matches_oracle_and_shape_rules(seed in any::<u64>(), len in 2usize..120) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sub = common::random_window(&mut rng, len);
        let norm = Normalization::default();
        let kdi = build_kdi(&sub, &norm);
        let want = common::kdi_oracle(&sub, norm.clip_ms);
        for (a, b) in kdi.data.iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
        prop_assert!(kdi.data.iter().all(|v| (-1.0..=1.0).contains(v)));
        for r in 0..NUM_KEYS {
            for c in 0..NUM_KEYS {
                if r != c {
                    prop_assert_eq!(kdi.get(KdiChannel::Duration, r, c), 0.0);
                }
            }
        }
        prop_assert_eq!(build_kdi(&sub, &norm), kdi);
    }

    #[test]
    fn kds_rows_follow_encoding(seed in any::<u64>(), len in 2usize..120) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sub = common::random_window(&mut rng, len);
        let norm = Normalization::default();
        let kds = build_kds(&sub, KeyEncoding::OneHot, &norm);
        prop_assert_eq!(kds.shape(), [len, NUM_KEYS + TIMING_COLUMNS]);
        for i in 0..len {
            prop_assert_eq!(kds.row(i)[..NUM_KEYS].iter().sum::<f64>(), 1.0);
        }
        prop_assert!(kds.row(0)[NUM_KEYS + 1..].iter().all(|v| *v == 0.0));
        let idx = build_kds(&sub, KeyEncoding::Index, &norm);
        for i in 0..len {
            prop_assert_eq!(&idx.row(i)[1..], &kds.row(i)[NUM_KEYS..]);
        }
    }

    #[test]
    fn cutout_only_zeroes_its_region(
        seed in any::<u64>(), size in 1usize..=42, span in 1usize..=60, p in 0.0f64..=1.0, len in 60usize..100
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sub = common::random_window(&mut rng, len);
        let norm = Normalization::default();
        let spec = CutoutSpec { enabled: true, kdi_size: size, kds_span: span, probability: p, rng_seed: seed };
        let kdi = build_kdi(&sub, &norm);
        let out = apply_cutout(&kdi, &spec);
        let changed: Vec<usize> = (0..KDI_LEN).filter(|&i| out.data[i] != kdi.data[i]).collect();
        prop_assert!(changed.len() <= size * size * 5);
        prop_assert!(changed.iter().all(|&i| out.data[i] == 0.0));
        prop_assert_eq!(apply_cutout(&kdi, &spec), out);

        let kds = build_kds(&sub, KeyEncoding::Index, &norm);
        let seq = apply_cutout(&kds, &spec);
        let changed = kds.data.iter().zip(&seq.data).filter(|(a, b)| a != b).count();
        prop_assert!(changed <= span * kds.width);
        prop_assert!(kds.data.iter().zip(&seq.data).all(|(a, b)| a == b || *b == 0.0));
    }

    #[test]
    fn eer_matches_threshold_sweep(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s, l) = common::random_scores(&mut rng);
        let got = eer(&s, &l).unwrap().0;
        prop_assert!((got - common::eer_oracle(&s, &l, 0.0, 1.0, 10_000)).abs() <= 1e-3);
    }

    #[test]
    fn eer_ignores_monotone_transforms(
        pairs in prop::collection::vec((0.0f64..1.0, any::<bool>()), 2..150)
    ) {
        let mut labels: Vec<u8> = pairs.iter().map(|p| p.1 as u8).collect();
        labels[0] = 0;
        labels[1] = 1;
        let s: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let base = eer(&s, &labels).unwrap().0;
        let cubed: Vec<f64> = s.iter().map(|v| v * v * v).collect();
        let shifted: Vec<f64> = s.iter().map(|v| 10.0 * v - 3.0).collect();
        prop_assert!((eer(&cubed, &labels).unwrap().0 - base).abs() <= 1e-9);
        prop_assert!((eer(&shifted, &labels).unwrap().0 - base).abs() <= 1e-9);
        let r = roc(&s, &labels).unwrap();
        prop_assert!(r.windows(2).all(|w| w[1].fpr <= w[0].fpr));
    }

    #[test]
    fn accuracy_plus_error_is_one(
        pairs in prop::collection::vec((0.0f64..1.0, any::<bool>()), 1..100), t in 0.0f64..1.0
    ) {
        let s: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let l: Vec<u8> = pairs.iter().map(|p| p.1 as u8).collect();
        let errors = s.iter().zip(&l).filter(|(v, y)| (**v >= t) != (**y == 1)).count();
        let acc = accuracy(&s, &l, t);
        prop_assert!((acc + errors as f64 / s.len() as f64 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn assembled_sets_are_balanced_and_clean(
        counts in prop::collection::vec(2usize..60, 2..7), target in 0usize..7, seed in any::<u64>()
    ) {
        let counts: BTreeMap<String, usize> = counts.iter().enumerate().map(|(i, c)| (format!("user{i}"), *c)).collect();
        let user = format!("user{}", target % counts.len());
        let others: usize = counts.iter().filter(|(u, _)| **u != user).map(|(_, c)| c).sum();
        match assemble(&user, &counts, seed) {
            Ok(set) => {
                let labels = set.labels();
                let pos = labels.iter().filter(|l| **l == 1).count();
                prop_assert_eq!(pos * 2, labels.len());
                for s in &set.samples {
                    prop_assert_eq!(s.label == 1, s.user == user);
                    prop_assert!(s.index < counts[&s.user]);
                }
                let mut seen: Vec<_> = set.samples.iter().map(|s| (s.user.clone(), s.index)).collect();
                seen.sort();
                seen.dedup();
                prop_assert_eq!(seen.len(), set.samples.len());
            }
            Err(_) => prop_assert!(others < counts[&user]),
        }
    }

    #[test]
    fn folds_partition_and_stratify(pos in 5usize..80, neg in 5usize..80, k in 2usize..6, seed in any::<u64>()) {
        let mut labels = vec![1u8; pos];
        labels.extend(vec![0u8; neg]);
        let plan = FoldPlan::new(&labels, k, seed).unwrap();
        let mut seen = vec![0; labels.len()];
        let mut per_class = Vec::new();
        for f in 0..k {
            let test = plan.test_indices(f);
            let train = plan.train_indices(f);
            prop_assert_eq!(test.len() + train.len(), labels.len());
            for &i in &test {
                seen[i] += 1;
            }
            per_class.push((test.iter().filter(|&&i| labels[i] == 1).count(), test.iter().filter(|&&i| labels[i] == 0).count()));
        }
        prop_assert!(seen.iter().all(|&n| n == 1));
        for class in [0, 1] {
            let sizes: Vec<usize> = per_class.iter().map(|c| if class == 1 { c.0 } else { c.1 }).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn plateau_never_raises_the_rate(losses in prop::collection::vec(0.0f64..2.0, 1..80), patience in 0usize..5) {
        let spec = OptimizerSpec { schedule: Schedule::Plateau { factor: 0.5, patience }, ..OptimizerSpec::default() };
        let net = Network::<f32>::new(vec![2], vec![LayerSpec::Dense { inputs: 2, outputs: 1 }], 0).unwrap();
        let mut state = TrainState::new(spec, &net.params, 0).unwrap();
        let mut lr = state.lr;
        for l in losses {
            state.end_epoch(l);
            prop_assert!(state.lr <= lr);
            lr = state.lr;
        }
    }

    #[test]
    fn inference_is_pure(seed in any::<u64>()) {
        let layers = vec![
            LayerSpec::Dense { inputs: 6, outputs: 5 },
            LayerSpec::ReLU,
            LayerSpec::Dropout { rate: 0.5 },
            LayerSpec::Dense { inputs: 5, outputs: 1 },
            LayerSpec::Sigmoid,
        ];
        let net = Network::<f32>::new(vec![6], layers, seed).unwrap();
        let x = Tensor::new(vec![6], (0..6).map(|i| (seed.wrapping_mul(i + 1) % 97) as f32 / 97.0).collect());
        let a = net.predict(&x).unwrap();
        let b = net.predict(&x).unwrap();
        prop_assert_eq!(a.data[0].to_bits(), b.data[0].to_bits());
        prop_assert!(a.data[0] > 0.0 && a.data[0] < 1.0);
    }
}

#[test]
fn synthesize_is_a_pure_function() {
    assert_eq!(synthesize(5, 3, 400).unwrap(), synthesize(5, 3, 400).unwrap());
    assert_ne!(synthesize(5, 3, 400).unwrap(), synthesize(6, 3, 400).unwrap());
}

#[test]
fn kdi_unseen_pairs_are_zero() {
    let k = |key, p, r| Keystroke::new(KeyIndex::new(key).unwrap(), p, r);
    let sub = keydyn::features::Subsequence {
        user_id: "u".into(),
        keystrokes: vec![k(0, 0, 90), k(1, 150, 230), k(0, 300, 380)],
    };
    let kdi = build_kdi(&sub, &Normalization::default());
    let populated = kdi.data.iter().filter(|v| **v != 0.0).count();
    // (a,b) and (b,a) on four pair channels, plus two diagonal durations
    assert_eq!(populated, 2 * 4 + 2);
    assert_eq!(kdi.get(KdiChannel::UpDown, 0, 1), 60.0 / 5000.0);
    assert_eq!(Kdi::index(KdiChannel::Duration as usize, 1, 1), 4 * NUM_KEYS * NUM_KEYS + NUM_KEYS + 1);
}

/// Fixed synthetic batch, full-batch Adam at lr 0.01: the epoch loss must not
/// rise over the first 10 epochs in at least 9 of 10 seeded runs.
#[test]
fn loss_is_non_increasing_early_in_training() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    use rand::Rng;
    let xs: Vec<Tensor<f32>> =
        (0..32).map(|_| Tensor::new(vec![8], (0..8).map(|_| rng.random_range(-1.0f32..1.0)).collect())).collect();
    let ys: Vec<f32> = xs.iter().map(|x| (x.data[0] + 0.5 * x.data[3] > 0.0) as u8 as f32).collect();
    let mut good = 0;
    for seed in 0..10 {
        let layers = vec![
            LayerSpec::Dense { inputs: 8, outputs: 16 },
            LayerSpec::ReLU,
            LayerSpec::Dense { inputs: 16, outputs: 1 },
            LayerSpec::Sigmoid,
        ];
        let mut net = Network::<f32>::new(vec![8], layers, seed).unwrap();
        let cfg = TrainConfig { epochs: 10, batch_size: 32, optimizer: OptimizerSpec::default(), seed };
        let rep = fit(&mut net, &xs, &ys, &cfg, None).unwrap();
        if rep.epoch_losses.windows(2).all(|w| w[1] <= w[0]) {
            good += 1;
        }
    }
    assert!(good >= 9, "{good}/10 runs non-increasing");
}
