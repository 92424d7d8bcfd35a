use std::collections::BTreeSet;
use std::path::Path;

use clap::Args;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use super::{CliError, EvalArgs, FeaturizeArgs, GridArgs, IngestArgs, ReportArgs, SynthArgs, TrainArgs};

const COMMANDS: [&str; 7] = ["ingest", "synth", "featurize", "train", "eval", "gridsearch", "report"];

pub fn load_config(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {} is not valid JSON: {e}", path.display())))?;
    let Value::Object(map) = value else {
        return Err(CliError::Usage(format!("config {} must hold a JSON object", path.display())));
    };
    let all = all_keys();
    for (k, v) in &map {
        if COMMANDS.contains(&k.as_str()) {
            if !v.is_object() {
                return Err(CliError::Usage(format!("config section `{k}` must be an object")));
            }
        } else if k != "jobs" && !all.contains(k) {
            return Err(CliError::Usage(format!("config key `{k}` matches no flag")));
        }
    }
    Ok(map)
}

fn keys_of<A: Args>() -> BTreeSet<String> {
    let cmd = A::augment_args(clap::Command::new("keys"));
    let mut keys: BTreeSet<String> = cmd.get_arguments().map(|a| a.get_id().to_string()).collect();
    if keys.contains("input") {
        keys.insert("in".into());
    }
    keys
}

fn all_keys() -> BTreeSet<String> {
    let mut all = BTreeSet::new();
    all.extend(keys_of::<IngestArgs>());
    all.extend(keys_of::<SynthArgs>());
    all.extend(keys_of::<FeaturizeArgs>());
    all.extend(keys_of::<TrainArgs>());
    all.extend(keys_of::<EvalArgs>());
    all.extend(keys_of::<GridArgs>());
    all.extend(keys_of::<ReportArgs>());
    all
}

fn put(out: &mut Map<String, Value>, k: &str, v: &Value) {
    let k = if k == "in" { "input" } else { k };
    out.insert(k.to_string(), v.clone());
}

/// Overlay command-line values on the config file: shared top-level keys
/// first, then the command's own section, then flags.
pub fn merge_args<A>(flags: A, file: Option<&Map<String, Value>>, command: &str) -> Result<A, CliError>
where
    A: Args + Serialize + DeserializeOwned,
{
    let Some(file) = file else {
        return Ok(flags);
    };
    let known = keys_of::<A>();
    let mut merged = Map::new();
    for (k, v) in file {
        if known.contains(k) && !COMMANDS.contains(&k.as_str()) {
            put(&mut merged, k, v);
        }
    }
    if let Some(Value::Object(section)) = file.get(command) {
        for (k, v) in section {
            if !known.contains(k) {
                return Err(CliError::Usage(format!("config section `{command}` has unknown key `{k}`")));
            }
            put(&mut merged, k, v);
        }
    }
    let Value::Object(given) = serde_json::to_value(&flags).expect("arguments serialize") else {
        unreachable!("argument structs serialize to objects")
    };
    for (k, v) in given {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Usage(format!("config for `{command}`: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn map(v: Value) -> Map<String, Value> {
        v.as_object().unwrap().clone()
    }

    #[test]
    fn flags_override_file() {
        let file = map(json!({"seed": 3, "train": {"epochs": 7, "lr": 0.1}}));
        let flags = TrainArgs { lr: Some(0.5), ..Default::default() };
        let a = merge_args(flags, Some(&file), "train").unwrap();
        assert_eq!(a.common.seed, Some(3));
        assert_eq!(a.epochs, Some(7));
        assert_eq!(a.lr, Some(0.5));
    }

    #[test]
    fn shared_keys_apply_only_where_known() {
        let file = map(json!({"seed": 3, "length": 50, "in": "ev.csv"}));
        let f = merge_args(FeaturizeArgs::default(), Some(&file), "featurize").unwrap();
        assert_eq!(f.length, Some(50));
        assert_eq!(f.input.as_deref(), Some(Path::new("ev.csv")));
        let s = merge_args(SynthArgs::default(), Some(&file), "synth").unwrap();
        assert_eq!(s.seed, Some(3));
    }

    #[test]
    fn unknown_section_key_is_a_usage_error() {
        let file = map(json!({"train": {"epoch": 7}}));
        let err = merge_args(TrainArgs::default(), Some(&file), "train").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn load_rejects_unknown_top_level_keys() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"sed": 1}"#).unwrap();
        assert_eq!(load_config(&p).unwrap_err().exit_code(), 2);
        std::fs::write(&p, r#"{"seed": 1, "jobs": 2, "train": {"epochs": 3}}"#).unwrap();
        assert_eq!(load_config(&p).unwrap().len(), 3);
        assert_eq!(load_config(&dir.path().join("missing.json")).unwrap_err().exit_code(), 1);
    }
}
