//! The fixed 42-key alphabet: `a`–`z`, `0`–`9` and six meta keys.

use serde::{Deserialize, Serialize};

/// Number of tracked keys.
pub const NUM_KEYS: usize = 42;

pub const SPACE: u8 = 36;
pub const BACKSPACE: u8 = 37;
pub const LEFT_SHIFT: u8 = 38;
pub const RIGHT_SHIFT: u8 = 39;
pub const TAB: u8 = 40;
pub const CAPS_LOCK: u8 = 41;

const META_NAMES: [&str; 6] = ["space", "backspace", "lshift", "rshift", "tab", "capslock"];

/// Index of a tracked key, always in `0..42`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct KeyIndex(u8);

impl KeyIndex {
    pub fn new(index: u8) -> Option<Self> {
        ((index as usize) < NUM_KEYS).then_some(Self(index))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn as_usize(self) -> usize {
        self.0 as usize
    }

    /// Canonical label written by the canonical CSV writer.
    pub fn canonical_label(self) -> String {
        match self.0 {
            i @ 0..=25 => ((b'a' + i) as char).to_string(),
            i @ 26..=35 => ((b'0' + i - 26) as char).to_string(),
            i => META_NAMES[(i - 36) as usize].to_string(),
        }
    }
}

impl TryFrom<u8> for KeyIndex {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        KeyIndex::new(value).ok_or_else(|| format!("key index {value} outside 0..{NUM_KEYS}"))
    }
}

impl From<KeyIndex> for u8 {
    fn from(k: KeyIndex) -> u8 {
        k.0
    }
}

/// Maps raw key labels onto [`KeyIndex`].
///
/// Letters are case-folded; common aliases used by keyloggers and browser
/// `KeyboardEvent.key`/`code` values are accepted for the meta keys.
/// Shifted digit symbols fold onto their digit; other punctuation is untracked.
#[derive(Debug, Clone, Default)]
pub struct KeyAlphabet;

impl KeyAlphabet {
    pub fn new() -> Self {
        KeyAlphabet
    }

    pub fn len(&self) -> usize {
        NUM_KEYS
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn normalize(&self, label: &str) -> Option<KeyIndex> {
        normalize_key(label)
    }
}

/// Resolve a raw key label to its tracked index, or `None` for untracked keys.
pub fn normalize_key(label: &str) -> Option<KeyIndex> {
    // a bare space must be checked before trimming
    if label == " " {
        return Some(KeyIndex(SPACE));
    }
    let trimmed = label.trim().trim_matches('"');
    let mut chars = trimmed.chars();
    if let (Some(c), None) = (chars.next(), chars.clone().next()) {
        let c = c.to_ascii_lowercase();
        return match c {
            'a'..='z' => Some(KeyIndex(c as u8 - b'a')),
            '0'..='9' => Some(KeyIndex(26 + c as u8 - b'0')),
            '\t' => Some(KeyIndex(TAB)),
            // shifted digits on a US layout resolve to their base key
            ')' => Some(KeyIndex(26)),
            '!' | '@' | '#' | '$' | '%' | '^' | '&' | '*' | '(' => {
                let pos = "!@#$%^&*(".find(c).unwrap() as u8;
                Some(KeyIndex(27 + pos))
            }
            _ => None,
        };
    }
    let lower = trimmed.to_ascii_lowercase();
    let lower = lower.as_str();
    // "KeyA" / "Digit7" style codes
    if let Some(rest) = lower.strip_prefix("key") {
        if rest.len() == 1 {
            return normalize_key(rest);
        }
    }
    if let Some(rest) = lower.strip_prefix("digit") {
        if rest.len() == 1 {
            return normalize_key(rest);
        }
    }
    if let Some(rest) = lower.strip_prefix("d") {
        // Windows virtual-key names D0..D9
        if rest.len() == 1 && rest.as_bytes()[0].is_ascii_digit() {
            return normalize_key(rest);
        }
    }
    let idx = match lower {
        "space" | "spacebar" | "spc" | "<space>" => SPACE,
        "backspace" | "back" | "bksp" | "bs" | "<backspace>" => BACKSPACE,
        "lshift" | "leftshift" | "left_shift" | "left-shift" | "shiftleft" | "lshiftkey" | "shift" | "<shift>" => {
            LEFT_SHIFT
        }
        "rshift" | "rightshift" | "right_shift" | "right-shift" | "shiftright" | "rshiftkey" => RIGHT_SHIFT,
        "tab" | "<tab>" => TAB,
        "capslock" | "caps_lock" | "caps" | "capital" | "caps-lock" => CAPS_LOCK,
        _ => return None,
    };
    Some(KeyIndex(idx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifted_digits_map_to_base_key() {
        assert_eq!(normalize_key("!").unwrap().get(), 27);
        assert_eq!(normalize_key("(").unwrap().get(), 35);
        assert_eq!(normalize_key(")").unwrap().get(), 26);
        assert_eq!(normalize_key("?"), None);
    }

    #[test]
    fn letters_fold_case() {
        assert_eq!(normalize_key("A").unwrap().get(), 0);
        assert_eq!(normalize_key("a").unwrap().get(), 0);
        assert_eq!(normalize_key("z").unwrap().get(), 25);
        assert_eq!(normalize_key("KeyQ").unwrap().get(), 16);
    }

    #[test]
    fn digits_follow_letters() {
        assert_eq!(normalize_key("7").unwrap().get(), 33);
        assert_eq!(normalize_key("0").unwrap().get(), 26);
        assert_eq!(normalize_key("Digit9").unwrap().get(), 35);
        assert_eq!(normalize_key("D4").unwrap().get(), 30);
    }

    #[test]
    fn meta_aliases() {
        assert_eq!(normalize_key("Space").unwrap().get(), SPACE);
        assert_eq!(normalize_key(" ").unwrap().get(), SPACE);
        assert_eq!(normalize_key("Back").unwrap().get(), BACKSPACE);
        assert_eq!(normalize_key("LShiftKey").unwrap().get(), LEFT_SHIFT);
        assert_eq!(normalize_key("ShiftRight").unwrap().get(), RIGHT_SHIFT);
        assert_eq!(normalize_key("Capital").unwrap().get(), CAPS_LOCK);
        assert_eq!(normalize_key("Tab").unwrap().get(), TAB);
    }

    #[test]
    fn untracked_keys() {
        assert_eq!(normalize_key("F5"), None);
        assert_eq!(normalize_key("-"), None);
        assert_eq!(normalize_key("Enter"), None);
        assert_eq!(normalize_key(""), None);
    }

    #[test]
    fn canonical_labels_round_trip() {
        let mut seen = std::collections::HashSet::new();
        for i in 0..NUM_KEYS as u8 {
            let k = KeyIndex::new(i).unwrap();
            let label = k.canonical_label();
            assert_eq!(normalize_key(&label), Some(k), "{label}");
            assert!(seen.insert(label));
        }
        assert!(KeyIndex::new(42).is_none());
    }
}
