//! Line-based `key = value` configuration files.
//!
//! Keys are command-line flag names without the leading dashes
//! (`max-size` and `max_size` are the same key). `#` starts a comment line.
//! Values may be wrapped in double quotes. A repeatable flag may appear on
//! several lines.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given more than once")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: `{value}` is not a boolean for `{key}`")]
    NotBoolean { line: usize, key: String, value: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// How a key maps onto a flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyKind {
    Value,
    Repeatable,
    Switch,
}

pub fn normalize_key(key: &str) -> String {
    key.trim().replace('_', "-")
}

pub fn parse(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                message: "expected `key = value`".into(),
            });
        };
        let key = normalize_key(key);
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') {
            return Err(ConfigError::Syntax {
                line,
                message: format!("invalid key `{}`", key),
            });
        }
        let value = value.trim();
        let value = value
            .strip_prefix('"')
            .and_then(|v| v.strip_suffix('"'))
            .unwrap_or(value);
        entries.push(Entry {
            line,
            key,
            value: value.to_string(),
        });
    }
    Ok(entries)
}

fn parse_bool(value: &str) -> Option<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Some(true),
        "false" | "no" | "off" | "0" => Some(false),
        _ => None,
    }
}

/// Turns entries into `--key value` tokens. `kind_of` returns `None` for
/// keys the command does not accept.
pub fn to_args(
    entries: &[Entry],
    kind_of: impl Fn(&str) -> Option<KeyKind>,
) -> Result<Vec<String>, ConfigError> {
    let mut seen = std::collections::HashSet::new();
    let mut args = Vec::new();
    for e in entries {
        let kind = kind_of(&e.key).ok_or_else(|| ConfigError::UnknownKey {
            line: e.line,
            key: e.key.clone(),
        })?;
        if kind != KeyKind::Repeatable && !seen.insert(e.key.clone()) {
            return Err(ConfigError::Duplicate {
                line: e.line,
                key: e.key.clone(),
            });
        }
        match kind {
            KeyKind::Switch => {
                let on = parse_bool(&e.value).ok_or_else(|| ConfigError::NotBoolean {
                    line: e.line,
                    key: e.key.clone(),
                    value: e.value.clone(),
                })?;
                if on {
                    args.push(format!("--{}", e.key));
                }
            }
            KeyKind::Value | KeyKind::Repeatable => {
                args.push(format!("--{}={}", e.key, e.value));
            }
        }
    }
    Ok(args)
}
