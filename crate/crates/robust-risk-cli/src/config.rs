//! Flat `key = value` config files with one level of `[section]` nesting.
//! Section keys are stored dotted (`section.key`); `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Parse config text into a dotted-key map. Later keys override earlier ones.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| ConfigError { line: i + 1, message };
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| err("unterminated section header".into()))?.trim();
            if name.is_empty() || name.contains('.') {
                return Err(err(format!("invalid section name '{name}'")));
            }
            section = Some(name.to_ascii_lowercase());
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| err(format!("expected 'key = value', got '{line}'")))?;
        let k = k.trim().to_ascii_lowercase();
        if k.is_empty() {
            return Err(err("empty key".into()));
        }
        let key = match &section {
            Some(s) => format!("{s}.{k}"),
            None => k,
        };
        if key.matches('.').count() > 1 {
            return Err(err(format!("key '{key}' nests more than one level")));
        }
        out.insert(key, unquote(v.trim()).to_string());
    }
    Ok(out)
}

/// Parse a `key=value` override given on the command line.
pub fn parse_override(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got '{s}'"))?;
    let k = k.trim().to_ascii_lowercase();
    if k.is_empty() {
        return Err(format!("empty key in '{s}'"));
    }
    Ok((k, unquote(v.trim()).to_string()))
}

fn strip_comment(line: &str) -> &str {
    // A '#' inside quotes is kept.
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn unquote(v: &str) -> &str {
    if v.len() >= 2 && v.starts_with('"') && v.ends_with('"') {
        &v[1..v.len() - 1]
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_comments_and_quotes() {
        let m = parse_config("# header\nseed = 7\n[hedging]\npaths = 2000 # scaled\nlabel = \"a # b\"\n").unwrap();
        assert_eq!(m["seed"], "7");
        assert_eq!(m["hedging.paths"], "2000");
        assert_eq!(m["hedging.label"], "a # b");
    }

    #[test]
    fn rejects_malformed_lines() {
        assert_eq!(parse_config("a = 1\nnonsense\n").unwrap_err().line, 2);
        assert!(parse_config("[open\n").is_err());
        assert!(parse_config("a.b.c = 1\n").is_err());
    }
}
