//! Line-oriented scenario configs: `[section]` headers, `key = value`
//! lines and `#` comments. This module only knows the text grammar and the
//! key schema; [`crate::scenario`] gives the values meaning.

use crate::error::{Error, Result};

/// Sections and the keys each accepts.
pub const SCHEMA: [(&str, &[&str]); 4] = [
    ("action", &["id", "frequencies", "boundary_samples"]),
    (
        "symbol",
        &[
            "expr",
            "name",
            "profile",
            "base",
            "amp",
            "trig",
            "mode",
            "partner",
            "expansion",
            "expansion_partner",
        ],
    ),
    ("grid", &["L", "N", "ladder", "resolution", "expansion_L"]),
    (
        "run",
        &["name", "description", "experiments", "hbar", "base_points", "seed", "samples", "out"],
    ),
];

fn known_section(section: &str) -> bool {
    SCHEMA.iter().any(|(s, _)| *s == section)
}

pub fn is_known_key(section: &str, key: &str) -> bool {
    SCHEMA
        .iter()
        .any(|(s, keys)| *s == section && keys.contains(&key))
}

/// A `key = value` line. Overrides carry line 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub section: String,
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// Parsed but not yet validated config.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    entries: Vec<Entry>,
}

fn is_key(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = RawConfig::default();
        let mut section: Option<String> = None;
        let mut seen_sections: Vec<String> = Vec::new();
        for (i, raw) in text.split('\n').enumerate() {
            let line = i + 1;
            let err = |message: String| Error::Config { line, message };
            let content = raw.strip_suffix('\r').unwrap_or(raw);
            let content = content.split('#').next().unwrap().trim_matches([' ', '\t']);
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err("section header must end with `]`".into()))?
                    .trim_matches([' ', '\t']);
                if !known_section(name) {
                    return Err(err(format!(
                        "unknown section [{name}] (expected action, symbol, grid or run)"
                    )));
                }
                if seen_sections.iter().any(|s| s == name) {
                    return Err(err(format!("section [{name}] appears twice")));
                }
                seen_sections.push(name.to_string());
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err("expected `key = value` or `[section]`".into()))?;
            let (key, value) = (key.trim_matches([' ', '\t']), value.trim_matches([' ', '\t']));
            if !is_key(key) {
                return Err(err(format!("malformed key `{key}`")));
            }
            let section = section
                .as_deref()
                .ok_or_else(|| err(format!("key `{key}` appears before any section")))?;
            if !is_known_key(section, key) {
                return Err(err(format!("unknown key `{key}` in [{section}]")));
            }
            if value.is_empty() {
                return Err(err(format!("key `{key}` has an empty value")));
            }
            if config.get(section, key).is_some() {
                return Err(err(format!("duplicate key `{key}` in [{section}]")));
            }
            config.entries.push(Entry {
                section: section.to_string(),
                key: key.to_string(),
                value: value.to_string(),
                line,
            });
        }
        Ok(config)
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries
            .iter()
            .find(|e| e.section == section && e.key == key)
    }

    pub fn value(&self, section: &str, key: &str) -> Option<&str> {
        self.get(section, key).map(|e| e.value.as_str())
    }

    /// Applies a dotted override such as `grid.N=512`. The key must belong
    /// to the schema; an existing value is replaced.
    pub fn apply_override(&mut self, text: &str) -> Result<()> {
        let invalid = |message: String| Error::Validation {
            field: text.to_string(),
            message,
        };
        let (path, value) = text
            .split_once('=')
            .ok_or_else(|| invalid("override must look like section.key=value".into()))?;
        let (section, key) = path
            .trim()
            .split_once('.')
            .ok_or_else(|| invalid("override key must be dotted, e.g. grid.N".into()))?;
        let value = value.trim();
        if !is_known_key(section, key) {
            return Err(invalid(format!("no config key `{section}.{key}`")));
        }
        if value.is_empty() {
            return Err(invalid("override value is empty".into()));
        }
        match self
            .entries
            .iter_mut()
            .find(|e| e.section == section && e.key == key)
        {
            Some(e) => {
                e.value = value.to_string();
                e.line = 0;
            }
            None => self.entries.push(Entry {
                section: section.to_string(),
                key: key.to_string(),
                value: value.to_string(),
                line: 0,
            }),
        }
        Ok(())
    }
}
