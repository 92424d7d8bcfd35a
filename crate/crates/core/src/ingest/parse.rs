//! Line-oriented event log parsing.
//!
//! The canonical layout is `user_id,key,action,timestamp_ms` with action
//! `D` or `U`. Dataset layouts are described by an [`AdapterConfig`].

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use super::IngestError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Down,
    Up,
}

impl Action {
    pub fn token(self) -> &'static str {
        match self {
            Action::Down => "D",
            Action::Up => "U",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyEvent {
    pub user_id: String,
    pub key_label: String,
    pub action: Action,
    pub timestamp_ms: u64,
}

impl KeyEvent {
    pub fn new(user_id: impl Into<String>, key_label: impl Into<String>, action: Action, timestamp_ms: u64) -> Self {
        KeyEvent { user_id: user_id.into(), key_label: key_label.into(), action, timestamp_ms }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventFormat {
    Canonical,
    Buffalo,
    Clarkson,
}

impl std::str::FromStr for EventFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "canonical" => Ok(EventFormat::Canonical),
            "buffalo" => Ok(EventFormat::Buffalo),
            "clarkson" => Ok(EventFormat::Clarkson),
            other => Err(format!("unknown event format `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMap {
    /// Column holding the user id. When absent, the caller supplies one
    /// (typically derived from the file name).
    #[serde(default)]
    pub user: Option<usize>,
    pub key: usize,
    pub action: usize,
    pub timestamp: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionTokens {
    pub down: Vec<String>,
    pub up: Vec<String>,
}

/// Column layout of a dataset's raw event files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterConfig {
    /// Field delimiter. A single space means "any run of whitespace".
    pub delimiter: String,
    pub columns: ColumnMap,
    pub action_tokens: ActionTokens,
    /// Multiplier converting the raw timestamp unit to milliseconds.
    #[serde(default = "one")]
    pub timestamp_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl AdapterConfig {
    pub fn canonical() -> Self {
        AdapterConfig {
            delimiter: ",".into(),
            columns: ColumnMap { user: Some(0), key: 1, action: 2, timestamp: 3 },
            action_tokens: ActionTokens { down: vec!["D".into()], up: vec!["U".into()] },
            timestamp_scale: 1.0,
        }
    }

    /// `KEY KeyDown 63521873232345` per line, one file per user session.
    pub fn buffalo() -> Self {
        AdapterConfig {
            delimiter: " ".into(),
            columns: ColumnMap { user: None, key: 0, action: 1, timestamp: 2 },
            action_tokens: ActionTokens {
                down: vec!["KeyDown".into(), "down".into()],
                up: vec!["KeyUp".into(), "up".into()],
            },
            timestamp_scale: 1.0,
        }
    }

    /// Tab-separated `timestamp<TAB>action<TAB>key`, one file per user.
    pub fn clarkson() -> Self {
        AdapterConfig {
            delimiter: "\t".into(),
            columns: ColumnMap { user: None, key: 2, action: 1, timestamp: 0 },
            action_tokens: ActionTokens {
                down: vec!["KeyDown".into(), "down".into(), "0".into()],
                up: vec!["KeyUp".into(), "up".into(), "1".into()],
            },
            timestamp_scale: 1.0,
        }
    }

    pub fn for_format(format: EventFormat) -> Self {
        match format {
            EventFormat::Canonical => Self::canonical(),
            EventFormat::Buffalo => Self::buffalo(),
            EventFormat::Clarkson => Self::clarkson(),
        }
    }

    fn split<'a>(&self, line: &'a str) -> Vec<&'a str> {
        if self.delimiter == " " {
            line.split_whitespace().collect()
        } else {
            line.split(self.delimiter.as_str()).collect()
        }
    }

    fn action(&self, token: &str) -> Option<Action> {
        let token = token.trim();
        if self.action_tokens.down.iter().any(|t| t.eq_ignore_ascii_case(token)) {
            Some(Action::Down)
        } else if self.action_tokens.up.iter().any(|t| t.eq_ignore_ascii_case(token)) {
            Some(Action::Up)
        } else {
            None
        }
    }
}

/// Outcome of parsing one input.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedEvents {
    pub events: Vec<KeyEvent>,
    pub malformed: usize,
    /// 1-based line number and text of the first malformed line.
    pub first_malformed: Option<(usize, String)>,
    pub header_skipped: bool,
}

/// Parse a timestamp and round it to integer milliseconds, half-up.
fn parse_timestamp(field: &str, scale: f64) -> Option<u64> {
    let field = field.trim();
    if let Ok(v) = field.parse::<u64>() {
        if scale == 1.0 {
            return Some(v);
        }
    }
    let v: f64 = field.parse().ok()?;
    let ms = v * scale;
    if !ms.is_finite() || ms < 0.0 {
        return None;
    }
    Some((ms + 0.5).floor() as u64)
}

fn looks_numeric(field: &str) -> bool {
    field.trim().parse::<f64>().is_ok()
}

/// Parse an event log.
///
/// `default_user` is used when the adapter has no user column. Lines that
/// fail to parse are counted; when more than half of the non-blank lines are
/// malformed the whole input is rejected.
pub fn parse_events<R: Read>(
    input: R,
    format: EventFormat,
    column_map: Option<&AdapterConfig>,
    default_user: &str,
) -> Result<ParsedEvents, IngestError> {
    let default_cfg;
    let cfg = match column_map {
        Some(c) => c,
        None => {
            default_cfg = AdapterConfig::for_format(format);
            &default_cfg
        }
    };
    let reader = BufReader::new(input);
    let mut out = ParsedEvents::default();
    let mut considered = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => IngestError::Encoding { line: i + 1 },
            _ => IngestError::Io(e),
        })?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields = cfg.split(line);
        // header: first non-blank line with a non-numeric timestamp field
        if considered == 0 && !out.header_skipped {
            if let Some(ts) = fields.get(cfg.columns.timestamp) {
                if !looks_numeric(ts) {
                    out.header_skipped = true;
                    continue;
                }
            }
        }
        considered += 1;
        match parse_line(&fields, cfg, default_user) {
            Some(ev) => out.events.push(ev),
            None => {
                out.malformed += 1;
                if out.first_malformed.is_none() {
                    out.first_malformed = Some((i + 1, line.to_string()));
                }
            }
        }
    }
    if considered > 0 && out.malformed * 2 > considered {
        let (line, text) = out.first_malformed.clone().unwrap_or_default();
        return Err(IngestError::FormatMismatch { malformed: out.malformed, total: considered, line, text });
    }
    Ok(out)
}

fn parse_line(fields: &[&str], cfg: &AdapterConfig, default_user: &str) -> Option<KeyEvent> {
    let c = &cfg.columns;
    let needed = [Some(c.key), Some(c.action), Some(c.timestamp), c.user].into_iter().flatten().max().unwrap_or(0);
    if fields.len() <= needed {
        return None;
    }
    let user_id = match c.user {
        Some(u) => fields[u].trim().to_string(),
        None => default_user.to_string(),
    };
    if user_id.is_empty() {
        return None;
    }
    let key_label = fields[c.key];
    if key_label.is_empty() {
        return None;
    }
    let action = cfg.action(fields[c.action])?;
    let timestamp_ms = parse_timestamp(fields[c.timestamp], cfg.timestamp_scale)?;
    Some(KeyEvent { user_id, key_label: key_label.to_string(), action, timestamp_ms })
}

/// Write events in canonical CSV form (with header).
pub fn write_canonical<W: Write>(mut out: W, events: &[KeyEvent]) -> std::io::Result<()> {
    writeln!(out, "user_id,key,action,timestamp_ms")?;
    for e in events {
        writeln!(out, "{},{},{},{}", e.user_id, e.key_label, e.action.token(), e.timestamp_ms)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical(text: &str) -> Result<ParsedEvents, IngestError> {
        parse_events(text.as_bytes(), EventFormat::Canonical, None, "")
    }

    #[test]
    fn canonical_line_maps_fields() {
        let p = canonical("u1,a,D,1000\n").unwrap();
        assert_eq!(p.events, vec![KeyEvent::new("u1", "a", Action::Down, 1000)]);
        assert_eq!(p.malformed, 0);
    }

    #[test]
    fn order_is_preserved() {
        let p = canonical("u1,a,D,1000\nu1,a,U,1100\n").unwrap();
        assert_eq!(
            p.events,
            vec![KeyEvent::new("u1", "a", Action::Down, 1000), KeyEvent::new("u1", "a", Action::Up, 1100)]
        );
    }

    #[test]
    fn malformed_lines_are_counted() {
        let text = "u1,a,D,1000\n\
                    u1,a,U,1100\n\
                    u1,b,X,1200\n\
                    u1,b,D,1300\n\
                    u1,b,U,1400\n\
                    u1,c\n\
                    u1,c,D,1500\n\
                    u1,c,U,1600\n\
                    u2,a,D,10\n\
                    u2,a,U,20\n";
        let p = canonical(text).unwrap();
        assert_eq!(p.events.len(), 8);
        assert_eq!(p.malformed, 2);
        assert_eq!(p.first_malformed.as_ref().unwrap().0, 3);
    }

    #[test]
    fn header_is_detected() {
        let p = canonical("user_id,key,action,timestamp_ms\nu1,a,D,5\n").unwrap();
        assert!(p.header_skipped);
        assert_eq!(p.events.len(), 1);
        assert_eq!(p.malformed, 0);
    }

    #[test]
    fn mostly_garbage_is_a_format_mismatch() {
        let err = canonical("u1,a,D,1\nhello\nworld\nfoo bar\n").unwrap_err();
        match err {
            IngestError::FormatMismatch { line, malformed, .. } => {
                assert_eq!(line, 2);
                assert_eq!(malformed, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fractional_timestamps_round_half_up() {
        let p = canonical("u,a,D,10.5\nu,a,U,11.49\n").unwrap();
        assert_eq!(p.events[0].timestamp_ms, 11);
        assert_eq!(p.events[1].timestamp_ms, 11);
    }

    #[test]
    fn negative_timestamp_is_malformed() {
        let p = canonical("u,a,D,-3\nu,a,D,4\nu,a,U,5\n").unwrap();
        assert_eq!(p.malformed, 1);
    }

    #[test]
    fn buffalo_adapter_uses_whitespace_and_default_user() {
        let text = "A KeyDown 63521873232345\nA KeyUp 63521873232400\nSpace KeyDown 63521873232500\n";
        let p = parse_events(text.as_bytes(), EventFormat::Buffalo, None, "s001").unwrap();
        assert_eq!(p.events.len(), 3);
        assert_eq!(p.events[0].user_id, "s001");
        assert_eq!(p.events[2].key_label, "Space");
        assert_eq!(p.events[1].action, Action::Up);
    }

    #[test]
    fn custom_adapter_from_json() {
        let cfg: AdapterConfig = serde_json::from_str(
            r#"{"delimiter":";","columns":{"user":3,"key":0,"action":1,"timestamp":2},
                "action_tokens":{"down":["press"],"up":["release"]},"timestamp_scale":0.001}"#,
        )
        .unwrap();
        let p = parse_events("x;press;1500000;bob\n".as_bytes(), EventFormat::Canonical, Some(&cfg), "").unwrap();
        assert_eq!(p.events, vec![KeyEvent::new("bob", "x", Action::Down, 1500)]);
    }

    #[test]
    fn invalid_utf8_is_rejected() {
        let bytes: &[u8] = b"u1,a,D,1\n\xff\xfe,b,D,2\n";
        assert!(matches!(
            parse_events(bytes, EventFormat::Canonical, None, ""),
            Err(IngestError::Encoding { line: 2 })
        ));
    }
}
