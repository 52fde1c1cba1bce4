//! Typed access to config values. Every lookup is recorded with the value
//! actually used (defaults included) so the manifest can reproduce the run,
//! and keys never looked up are reported as unknown.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::str::FromStr;

use robust_risk::{Divergence, Form, NominalModel, RiskSpec};

pub struct Params {
    map: BTreeMap<String, String>,
    resolved: RefCell<BTreeMap<String, String>>,
    errors: RefCell<Vec<String>>,
}

impl Params {
    /// `prefixes` are section names stripped from dotted keys (the command
    /// and target), so `[hedging] paths = 10` reads as `paths`.
    pub fn new(raw: &BTreeMap<String, String>, prefixes: &[&str]) -> Self {
        let mut map = BTreeMap::new();
        for (k, v) in raw {
            let key = match k.split_once('.') {
                Some((sec, rest)) if prefixes.contains(&sec) => rest.to_string(),
                _ => k.clone(),
            };
            map.insert(key, v.clone());
        }
        Self { map, resolved: RefCell::new(BTreeMap::new()), errors: RefCell::new(Vec::new()) }
    }

    fn record(&self, key: &str, value: String) {
        self.resolved.borrow_mut().insert(key.to_string(), value);
    }

    fn fail(&self, msg: String) {
        self.errors.borrow_mut().push(msg);
    }

    pub fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<String> {
        let v = self.map.get(key).cloned();
        if let Some(v) = &v {
            self.record(key, v.clone());
        }
        v
    }

    fn parsed<T: FromStr>(&self, key: &str, what: &str) -> Option<T> {
        let v = self.raw(key)?;
        match v.trim().parse() {
            Ok(x) => Some(x),
            Err(_) => {
                self.fail(format!("key '{key}': '{v}' is not {what}"));
                None
            }
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> f64 {
        self.parsed(key, "a number").unwrap_or_else(|| {
            self.record(key, default.to_string());
            default
        })
    }

    pub fn usize_or(&self, key: &str, default: usize) -> usize {
        self.parsed(key, "a non-negative integer").unwrap_or_else(|| {
            self.record(key, default.to_string());
            default
        })
    }

    pub fn bool_or(&self, key: &str, default: bool) -> bool {
        self.parsed(key, "true or false").unwrap_or_else(|| {
            self.record(key, default.to_string());
            default
        })
    }

    pub fn seed(&self) -> Option<u64> {
        self.parsed("seed", "a non-negative integer")
    }

    pub fn opt_f64(&self, key: &str) -> Option<f64> {
        self.parsed(key, "a number")
    }

    fn list<T: FromStr + ToString>(&self, key: &str, default: &[T], what: &str) -> Vec<T>
    where
        T: Clone,
    {
        let Some(v) = self.raw(key) else {
            self.record(key, join(default));
            return default.to_vec();
        };
        let mut out = Vec::new();
        for part in v.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.parse() {
                Ok(x) => out.push(x),
                Err(_) => self.fail(format!("key '{key}': '{part}' is not {what}")),
            }
        }
        out
    }

    pub fn f64_list_or(&self, key: &str, default: &[f64]) -> Vec<f64> {
        self.list(key, default, "a number")
    }

    pub fn usize_list_or(&self, key: &str, default: &[usize]) -> Vec<usize> {
        self.list(key, default, "a non-negative integer")
    }

    fn catalog<T>(&self, key: &str, default: Option<&str>, parse: impl Fn(&str) -> robust_risk::Result<T>) -> Option<T> {
        let v = match self.raw(key) {
            Some(v) => v,
            None => match default {
                Some(d) => {
                    self.record(key, d.to_string());
                    d.to_string()
                }
                None => {
                    self.fail(format!("missing required key '{key}'"));
                    return None;
                }
            },
        };
        match parse(&v) {
            Ok(x) => Some(x),
            Err(e) => {
                self.fail(format!("key '{key}': {e}"));
                None
            }
        }
    }

    pub fn divergence(&self, key: &str, default: Option<&str>) -> Option<Divergence> {
        self.catalog(key, default, Divergence::parse)
    }

    pub fn risk(&self, key: &str, default: Option<&str>) -> Option<RiskSpec> {
        self.catalog(key, default, RiskSpec::parse)
    }

    pub fn model(&self, key: &str, default: Option<&str>) -> Option<NominalModel> {
        self.catalog(key, default, NominalModel::parse)
    }

    pub fn form(&self, key: &str, default: Option<&str>) -> Option<Form> {
        self.catalog(key, default, Form::parse)
    }

    /// Values actually used, defaults included.
    pub fn resolved(&self) -> BTreeMap<String, String> {
        self.resolved.borrow().clone()
    }

    /// Parse failures plus keys that no lookup consumed.
    pub fn errors(&self) -> Vec<String> {
        let mut out = self.errors.borrow().clone();
        let used = self.resolved.borrow();
        for k in self.map.keys() {
            if !used.contains_key(k) {
                out.push(format!("unknown key '{k}'"));
            }
        }
        out
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}
