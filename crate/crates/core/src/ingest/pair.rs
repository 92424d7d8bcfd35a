use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::alphabet::{normalize_key, KeyIndex, NUM_KEYS};
use super::parse::{Action, KeyEvent};

/// One press/release of a tracked key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Keystroke {
    pub key: KeyIndex,
    pub press_ms: u64,
    pub release_ms: u64,
}

impl Keystroke {
    /// Panics if `release_ms < press_ms`.
    pub fn new(key: KeyIndex, press_ms: u64, release_ms: u64) -> Self {
        assert!(release_ms >= press_ms, "release before press");
        Keystroke { key, press_ms, release_ms }
    }

    pub fn duration_ms(&self) -> u64 {
        self.release_ms - self.press_ms
    }
}

/// A user's keystrokes ordered by press time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserStream {
    pub user_id: String,
    pub keystrokes: Vec<Keystroke>,
}

impl UserStream {
    /// Serialize back to canonical events in time order.
    ///
    /// On equal timestamps, releases of earlier presses come first, then
    /// presses, then releases of zero-duration keystrokes, so that
    /// [`pair_events`] reconstructs the stream.
    pub fn to_events(&self) -> Vec<KeyEvent> {
        let mut tagged: Vec<(u64, u8, KeyEvent)> = Vec::with_capacity(self.keystrokes.len() * 2);
        for k in &self.keystrokes {
            let label = k.key.canonical_label();
            let up_rank = if k.release_ms > k.press_ms { 0 } else { 2 };
            tagged.push((k.press_ms, 1, KeyEvent::new(self.user_id.clone(), label.clone(), Action::Down, k.press_ms)));
            tagged.push((k.release_ms, up_rank, KeyEvent::new(self.user_id.clone(), label, Action::Up, k.release_ms)));
        }
        tagged.sort_by_key(|(t, rank, _)| (*t, *rank));
        tagged.into_iter().map(|(_, _, e)| e).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Pairing {
    /// One stream per user, ordered by user id.
    pub streams: Vec<UserStream>,
    /// Downs that never found a matching Up (auto-repeat or never released).
    pub dropped_downs: usize,
    /// Ups with no pending Down.
    pub orphan_ups: usize,
    /// Events whose key is outside the tracked alphabet.
    pub untracked: usize,
}

/// Pair Down/Up events into keystrokes per user.
///
/// Each Down is matched with the next Up of the same key. While a Down is
/// pending, further Downs of that key are dropped (first Down wins).
pub fn pair_events(events: &[KeyEvent]) -> Pairing {
    let mut order: Vec<usize> = (0..events.len()).collect();
    order.sort_by_key(|&i| events[i].timestamp_ms);

    let mut per_user: BTreeMap<&str, (Vec<Keystroke>, [Option<u64>; NUM_KEYS])> = BTreeMap::new();
    let mut out = Pairing::default();
    for i in order {
        let e = &events[i];
        let Some(key) = normalize_key(&e.key_label) else {
            out.untracked += 1;
            continue;
        };
        let (strokes, pending) = per_user.entry(e.user_id.as_str()).or_insert_with(|| (Vec::new(), [None; NUM_KEYS]));
        let slot = &mut pending[key.as_usize()];
        match (e.action, *slot) {
            (Action::Down, None) => *slot = Some(e.timestamp_ms),
            (Action::Down, Some(_)) => out.dropped_downs += 1,
            (Action::Up, Some(press)) => {
                strokes.push(Keystroke::new(key, press, e.timestamp_ms));
                *slot = None;
            }
            (Action::Up, None) => out.orphan_ups += 1,
        }
    }
    for (user, (mut strokes, pending)) in per_user {
        out.dropped_downs += pending.iter().filter(|p| p.is_some()).count();
        strokes.sort_by_key(|k| k.press_ms);
        out.streams.push(UserStream { user_id: user.to_string(), keystrokes: strokes });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(key: &str, action: Action, t: u64) -> KeyEvent {
        KeyEvent::new("u", key, action, t)
    }

    fn k(i: u8, p: u64, r: u64) -> Keystroke {
        Keystroke::new(KeyIndex::new(i).unwrap(), p, r)
    }

    #[test]
    fn simple_pair() {
        let p = pair_events(&[ev("A", Action::Down, 0), ev("A", Action::Up, 100)]);
        assert_eq!(p.streams[0].keystrokes, vec![k(0, 0, 100)]);
        assert_eq!(p.dropped_downs, 0);
    }

    #[test]
    fn rollover_interleaving() {
        let p = pair_events(&[
            ev("A", Action::Down, 0),
            ev("B", Action::Down, 50),
            ev("A", Action::Up, 120),
            ev("B", Action::Up, 150),
        ]);
        assert_eq!(p.streams[0].keystrokes, vec![k(0, 0, 120), k(1, 50, 150)]);
    }

    #[test]
    fn auto_repeat_keeps_first_down() {
        let p = pair_events(&[ev("A", Action::Down, 0), ev("A", Action::Down, 30), ev("A", Action::Up, 100)]);
        assert_eq!(p.streams[0].keystrokes, vec![k(0, 0, 100)]);
        assert_eq!(p.dropped_downs, 1);
    }

    #[test]
    fn unsorted_input_is_sorted() {
        let p = pair_events(&[ev("A", Action::Up, 100), ev("A", Action::Down, 0)]);
        assert_eq!(p.streams[0].keystrokes, vec![k(0, 0, 100)]);
    }

    #[test]
    fn orphans_and_unreleased_are_counted() {
        let p = pair_events(&[
            ev("A", Action::Up, 5),
            ev("B", Action::Down, 10),
            ev("F5", Action::Down, 11),
            ev("C", Action::Down, 12),
            ev("C", Action::Up, 20),
        ]);
        assert_eq!(p.orphan_ups, 1);
        assert_eq!(p.dropped_downs, 1);
        assert_eq!(p.untracked, 1);
        assert_eq!(p.streams[0].keystrokes, vec![k(2, 12, 20)]);
    }

    #[test]
    fn users_are_separated() {
        let p = pair_events(&[
            KeyEvent::new("b", "x", Action::Down, 0),
            KeyEvent::new("a", "x", Action::Down, 1),
            KeyEvent::new("b", "x", Action::Up, 2),
            KeyEvent::new("a", "x", Action::Up, 3),
        ]);
        assert_eq!(p.streams.len(), 2);
        assert_eq!(p.streams[0].user_id, "a");
        assert_eq!(p.streams[0].keystrokes, vec![k(23, 1, 3)]);
        assert_eq!(p.streams[1].keystrokes, vec![k(23, 0, 2)]);
    }
}
