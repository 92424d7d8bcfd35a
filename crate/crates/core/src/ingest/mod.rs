//! Raw keystroke logs to per-user keystroke streams.

mod alphabet;
mod pair;
mod parse;
mod synth;

pub use alphabet::{normalize_key, KeyAlphabet, KeyIndex, NUM_KEYS};
pub use pair::{pair_events, Keystroke, Pairing, UserStream};
pub use parse::{
    parse_events, write_canonical, Action, ActionTokens, AdapterConfig, ColumnMap, EventFormat, KeyEvent, ParsedEvents,
};
pub use synth::{profiles, synthesize, user_label, TypingProfile};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line} is not valid UTF-8")]
    Encoding { line: usize },
    #[error(
        "{malformed} of {total} lines malformed; input does not match the format (first bad line {line}: {text:?})"
    )]
    FormatMismatch { malformed: usize, total: usize, line: usize, text: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
