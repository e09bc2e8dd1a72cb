//! Flat `key = value` study configuration.
//!
//! Blank lines and lines starting with `#` are ignored. A key may repeat; the
//! last value wins for scalar lookups and every value is kept for list keys
//! such as `recruit_pattern`. Each lookup records the value it resolved
//! (including defaults) so reports can print the effective configuration.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::str::FromStr;

use crate::bins::{parse_edges, BinEdges};
use crate::discourse::Statistic;
use crate::error::{Error, Result};

pub const KNOWN_KEYS: &[&str] = &[
    "study",
    "seed",
    "covariates",
    "bins",
    "statistics",
    "period_start",
    "period_end",
    "window_days",
    "cohort_days",
    "cohort_weighting",
    "exclude_overlapping",
    "truncate_pct",
    "stabilized",
    "bootstrap",
    "level",
    "related_threshold",
    "engaged_k",
    "w_pre_days",
    "w_during_days",
    "team_size_strata",
    "recruit_window_days",
    "recruit_pattern",
    "external_communities",
    "meta_communities",
    "treatment",
    "outcome",
    "health_column",
    "topic_prefix",
    "size_edges",
    "team_size_edges",
    "experience_cuts",
];

#[derive(Debug, Default)]
pub struct StudyConfig {
    entries: Vec<(String, String)>,
    resolved: RefCell<BTreeMap<String, String>>,
}

impl Clone for StudyConfig {
    fn clone(&self) -> Self {
        StudyConfig {
            entries: self.entries.clone(),
            resolved: RefCell::new(self.resolved.borrow().clone()),
        }
    }
}

impl StudyConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            let key = k.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::Config(format!("line {}: unknown key {key:?}", i + 1)));
            }
            entries.push((key.to_string(), v.trim().to_string()));
        }
        Ok(StudyConfig {
            entries,
            resolved: RefCell::default(),
        })
    }

    /// Sets or overrides a key, e.g. from a command-line flag.
    pub fn set(&mut self, key: &str, value: impl ToString) -> Result<()> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::Config(format!("unknown key {key:?}")));
        }
        self.entries.retain(|(k, _)| k != key);
        self.entries.push((key.to_string(), value.to_string()));
        Ok(())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn all(&self, key: &str) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .collect()
    }

    fn record(&self, key: &str, value: impl Into<String>) {
        self.resolved.borrow_mut().insert(key.to_string(), value.into());
    }

    pub fn get<T: FromStr + ToString>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            Some(v) => {
                let parsed = v
                    .parse::<T>()
                    .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))?;
                self.record(key, v);
                Ok(parsed)
            }
            None => {
                self.record(key, default.to_string());
                Ok(default)
            }
        }
    }

    pub fn required<T: FromStr>(&self, key: &str) -> Result<T> {
        let v = self
            .raw(key)
            .ok_or_else(|| Error::Config(format!("missing required key {key:?}")))?;
        self.record(key, v);
        v.parse::<T>()
            .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
    }

    pub fn optional(&self, key: &str) -> Option<String> {
        let v = self.raw(key)?.to_string();
        self.record(key, &v);
        Some(v)
    }

    /// Comma-separated list, or `default` when absent.
    pub fn list(&self, key: &str, default: &[&str]) -> Vec<String> {
        let items: Vec<String> = match self.raw(key) {
            Some(v) => v
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect(),
            None => default.iter().map(|s| s.to_string()).collect(),
        };
        self.record(key, items.join(","));
        items
    }

    /// Every value given for a repeatable key, or `default`.
    pub fn repeated(&self, key: &str, default: &[&str]) -> Vec<String> {
        let given = self.all(key);
        let items: Vec<String> = if given.is_empty() {
            default.iter().map(|s| s.to_string()).collect()
        } else {
            given.into_iter().map(str::to_string).collect()
        };
        let mut resolved = self.resolved.borrow_mut();
        for (i, v) in items.iter().enumerate() {
            resolved.insert(format!("{key}.{i}"), v.clone());
        }
        items
    }

    pub fn edges(&self, key: &str, default: &[f64]) -> Result<BinEdges> {
        let edges = match self.raw(key) {
            Some(v) => parse_edges(v)?,
            None => BinEdges::new(default.to_vec())?,
        };
        self.record(
            key,
            edges.edges().iter().map(|e| e.to_string()).collect::<Vec<_>>().join(","),
        );
        Ok(edges)
    }

    pub fn statistics(&self, default: &[Statistic]) -> Result<Vec<Statistic>> {
        let names: Vec<&str> = default.iter().map(|s| s.name()).collect();
        self.list("statistics", &names)
            .iter()
            .map(|s| s.parse::<Statistic>())
            .collect()
    }

    pub fn flag(&self, key: &str, default: bool) -> Result<bool> {
        self.get(key, default)
    }

    /// Every value looked up so far, sorted by key.
    pub fn resolved(&self) -> Vec<(String, String)> {
        self.resolved
            .borrow()
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }
}
