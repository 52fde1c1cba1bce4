//! Parsing of catalog identifiers such as `polynomial(3)`,
//! `gl-cvar(sigma=0.3,p=2,d=2)` or `pareto_neg(alpha=2,xm=1)`.

use crate::error::{Error, Result};

/// A parsed call-style identifier: a lowercase name with hyphens normalised to
/// underscores, plus positional or named numeric arguments.
#[derive(Clone, Debug, PartialEq)]
pub struct CallSpec {
    pub name: String,
    pub args: Vec<(Option<String>, f64)>,
    raw: String,
}

impl CallSpec {
    pub fn parse(input: &str) -> Result<Self> {
        let raw = input.trim().to_string();
        let err = |reason: &str| Error::Parse { input: raw.clone(), reason: reason.to_string() };
        let (name, rest) = match raw.find('(') {
            Some(i) => {
                if !raw.ends_with(')') {
                    return Err(err("missing closing parenthesis"));
                }
                (&raw[..i], Some(&raw[i + 1..raw.len() - 1]))
            }
            None => (raw.as_str(), None),
        };
        let name = name.trim().to_ascii_lowercase().replace('-', "_");
        if name.is_empty() {
            return Err(err("empty name"));
        }
        let mut args = Vec::new();
        if let Some(rest) = rest {
            for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                let (key, val) = match part.split_once('=') {
                    Some((k, v)) => (Some(k.trim().to_ascii_lowercase()), v.trim()),
                    None => (None, part),
                };
                let v: f64 = val.parse().map_err(|_| err(&format!("'{val}' is not a number")))?;
                args.push((key, v));
            }
        }
        Ok(Self { name, args, raw })
    }

    /// Resolve arguments against an ordered parameter list. Positional
    /// arguments fill parameters in order; named ones match by name (aliases
    /// allowed via `|`, e.g. `"lambda|scale"`). Missing parameters take the
    /// given default, or fail when the default is `None`.
    pub fn resolve(&self, params: &[(&str, Option<f64>)]) -> Result<Vec<f64>> {
        let mut out: Vec<Option<f64>> = vec![None; params.len()];
        let mut pos = 0;
        for (key, v) in &self.args {
            let idx = match key {
                Some(k) => params
                    .iter()
                    .position(|(n, _)| n.split('|').any(|alias| alias == k))
                    .ok_or_else(|| self.error(&format!("unknown parameter '{k}'")))?,
                None => {
                    let i = pos;
                    pos += 1;
                    if i >= params.len() {
                        return Err(self.error("too many arguments"));
                    }
                    i
                }
            };
            if out[idx].is_some() {
                return Err(self.error(&format!("parameter '{}' given twice", params[idx].0)));
            }
            out[idx] = Some(*v);
        }
        out.iter()
            .zip(params)
            .map(|(v, (n, d))| v.or(*d).ok_or_else(|| self.error(&format!("missing parameter '{n}'"))))
            .collect()
    }

    pub fn error(&self, reason: &str) -> Error {
        Error::Parse { input: self.raw.clone(), reason: reason.to_string() }
    }
}

/// Format a parameter value compactly for canonical identifiers.
pub fn fmt_param(v: f64) -> String {
    format!("{v}")
}
