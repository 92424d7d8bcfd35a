use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::ingest::{Keystroke, UserStream};

/// Default subsequence length.
pub const DEFAULT_LENGTH: usize = 100;

/// A fixed-length window of one user's keystrokes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subsequence {
    pub user_id: String,
    pub keystrokes: Vec<Keystroke>,
}

impl Subsequence {
    pub fn len(&self) -> usize {
        self.keystrokes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keystrokes.is_empty()
    }
}

/// Split a stream into non-overlapping windows of `length` keystrokes.
/// The trailing remainder is discarded.
pub fn window(stream: &UserStream, length: usize) -> Result<Vec<Subsequence>, FeatureError> {
    if length < 2 {
        return Err(FeatureError::InvalidLength(length));
    }
    Ok(stream
        .keystrokes
        .chunks_exact(length)
        .map(|c| Subsequence { user_id: stream.user_id.clone(), keystrokes: c.to_vec() })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::KeyIndex;

    fn stream(n: usize) -> UserStream {
        let k = KeyIndex::new(0).unwrap();
        UserStream {
            user_id: "u".into(),
            keystrokes: (0..n as u64).map(|i| Keystroke::new(k, i * 200, i * 200 + 90)).collect(),
        }
    }

    #[test]
    fn counts() {
        assert_eq!(window(&stream(250), 100).unwrap().len(), 2);
        assert!(window(&stream(99), 100).unwrap().is_empty());
        assert_eq!(window(&stream(300), 75).unwrap().len(), 4);
    }

    #[test]
    fn windows_are_consecutive() {
        let w = window(&stream(250), 100).unwrap();
        assert_eq!(w[1].keystrokes[0].press_ms, 100 * 200);
        assert!(w.iter().all(|s| s.len() == 100));
    }

    #[test]
    fn too_short_length() {
        assert!(matches!(window(&stream(10), 1), Err(FeatureError::InvalidLength(1))));
    }
}
