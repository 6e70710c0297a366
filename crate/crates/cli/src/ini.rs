//! Flat sectioned `key = value` files. `#` and `;` start comments, both on
//! their own line and after whitespace at the end of a value.

use std::collections::BTreeMap;

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ini {
    sections: BTreeMap<String, Vec<(String, String, usize)>>,
}

fn strip_comment(line: &str) -> &str {
    let bytes = line.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if (b == b'#' || b == b';') && (i == 0 || bytes[i - 1].is_ascii_whitespace()) {
            return &line[..i];
        }
    }
    line
}

impl Ini {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut ini = Ini::default();
        let mut current: Option<String> = None;
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| CliError::Config(format!("{origin}:{line_no}: {msg}"));
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| bad("unterminated section header".into()))?
                    .trim();
                if name.is_empty() {
                    return Err(bad("empty section name".into()));
                }
                if ini.sections.contains_key(name) {
                    return Err(bad(format!("duplicate section [{name}]")));
                }
                ini.sections.insert(name.to_string(), Vec::new());
                current = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(bad("empty key".into()));
            }
            let section = current
                .as_ref()
                .ok_or_else(|| bad(format!("key `{key}` outside any section")))?;
            let entries = ini.sections.get_mut(section).expect("section exists");
            if entries.iter().any(|(k, _, _)| k == key) {
                return Err(bad(format!("duplicate key `{key}` in [{section}]")));
            }
            entries.push((key.to_string(), value.trim().to_string(), line_no));
        }
        Ok(ini)
    }

    pub fn has_section(&self, name: &str) -> bool {
        self.sections.contains_key(name)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .get(section)?
            .iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, _)| v.as_str())
    }

    /// Entries of a section in file order.
    pub fn entries(&self, section: &str) -> Vec<(&str, &str)> {
        self.sections
            .get(section)
            .map(|e| e.iter().map(|(k, v, _)| (k.as_str(), v.as_str())).collect())
            .unwrap_or_default()
    }

    /// Rejects keys outside `allowed` so typos do not pass silently.
    pub fn check_keys(&self, section: &str, allowed: &[&str]) -> Result<(), CliError> {
        if let Some(entries) = self.sections.get(section) {
            if let Some((k, _, line)) = entries.iter().find(|(k, _, _)| !allowed.contains(&k.as_str())) {
                return Err(CliError::Config(format!(
                    "line {line}: unknown key `{k}` in [{section}] (expected one of: {})",
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub fn sections(&self) -> impl Iterator<Item = &str> {
        self.sections.keys().map(|s| s.as_str())
    }
}
