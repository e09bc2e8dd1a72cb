//! Shared domain types and time conventions.
//!
//! Every timestamp is an integer count of UTC seconds since the Unix epoch and
//! every interval is closed-open, `[start, end)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DAY: i64 = 86_400;

/// A closed-open interval of UTC seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    pub start: i64,
    pub end: i64,
}

impl Window {
    pub fn new(start: i64, end: i64) -> Result<Self> {
        if end <= start {
            return Err(Error::EmptyWindow { start, end });
        }
        Ok(Window { start, end })
    }

    pub fn contains(&self, t: i64) -> bool {
        self.start <= t && t < self.end
    }

    pub fn seconds(&self) -> i64 {
        self.end - self.start
    }

    pub fn days(&self) -> f64 {
        self.seconds() as f64 / DAY as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Post,
    Comment,
}

impl FromStr for EventKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "post" => Ok(EventKind::Post),
            "comment" => Ok(EventKind::Comment),
            other => Err(Error::UnknownKind(other.to_string())),
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Post => "post",
            EventKind::Comment => "comment",
        })
    }
}

/// Mod-discourse sentiment label. `Exclude` marks items the classifier judged
/// not to be about this community's moderators; it never counts as discourse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sentiment {
    Positive,
    Neutral,
    Negative,
    Exclude,
}

impl Sentiment {
    pub const ALL: [Sentiment; 4] = [
        Sentiment::Positive,
        Sentiment::Neutral,
        Sentiment::Negative,
        Sentiment::Exclude,
    ];

    /// The three labels that count as mod discourse.
    pub const IN_SCOPE: [Sentiment; 3] =
        [Sentiment::Positive, Sentiment::Neutral, Sentiment::Negative];

    pub fn as_str(&self) -> &'static str {
        match self {
            Sentiment::Positive => "positive",
            Sentiment::Neutral => "neutral",
            Sentiment::Negative => "negative",
            Sentiment::Exclude => "exclude",
        }
    }

    pub fn is_mod_discourse(&self) -> bool {
        !matches!(self, Sentiment::Exclude)
    }
}

impl FromStr for Sentiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Sentiment::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One post or comment. Body text is not retained.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscourseEvent {
    pub event_id: String,
    pub community: String,
    pub author: String,
    pub created_utc: i64,
    pub kind: EventKind,
    /// Whether the author moderated this community at `created_utc`,
    /// materialized at ingestion.
    pub author_is_mod: bool,
    pub removed: bool,
    pub deleted: bool,
    pub label: Option<Sentiment>,
}

impl DiscourseEvent {
    pub fn validate(&self) -> Result<()> {
        if self.created_utc <= 0 {
            return Err(Error::MalformedTimestamp {
                event_id: self.event_id.clone(),
                value: self.created_utc,
            });
        }
        if self.removed && self.deleted {
            return Err(Error::ContradictoryFlags {
                event_id: self.event_id.clone(),
            });
        }
        Ok(())
    }

    pub fn is_mod_discourse(&self) -> bool {
        self.label.is_some_and(|l| l.is_mod_discourse())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub username: String,
    pub appointed_utc: i64,
    pub rank: u32,
}

/// One captured moderator listing, ordered by seniority.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModSnapshot {
    pub community: String,
    pub captured_utc: i64,
    pub roster: Vec<RosterEntry>,
}

impl ModSnapshot {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::BadSnapshot {
            community: self.community.clone(),
            captured_utc: self.captured_utc,
            reason,
        };
        for (i, entry) in self.roster.iter().enumerate() {
            if entry.rank as usize != i {
                return Err(bad(format!(
                    "ranks not contiguous: position {i} has rank {}",
                    entry.rank
                )));
            }
            if entry.appointed_utc > self.captured_utc {
                return Err(bad(format!(
                    "{} appointed at {} after capture",
                    entry.username, entry.appointed_utc
                )));
            }
        }
        Ok(())
    }

    /// Re-assigns contiguous ranks in current order (used after filtering).
    pub fn rerank(&mut self) {
        for (i, entry) in self.roster.iter_mut().enumerate() {
            entry.rank = i as u32;
        }
    }
}

/// A moderator's stint on one team. `end_utc` is the first capture at which
/// the moderator was absent; `end_lower_utc` the last capture still listing them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModTenure {
    pub community: String,
    pub username: String,
    pub start_utc: i64,
    pub end_utc: Option<i64>,
    pub end_lower_utc: Option<i64>,
}

impl ModTenure {
    pub fn covers(&self, t: i64) -> bool {
        self.start_utc <= t && self.end_utc.is_none_or(|end| t < end)
    }
}

/// A covariate table: shared column ordering plus one row of finite values per unit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CovariateTable {
    pub names: Vec<String>,
    pub rows: Vec<CovariateRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovariateRow {
    pub unit_id: String,
    pub values: Vec<f64>,
}

impl CovariateTable {
    pub fn new(names: Vec<String>) -> Self {
        CovariateTable {
            names,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, unit_id: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let unit_id = unit_id.into();
        if values.len() != self.names.len() {
            return Err(Error::LengthMismatch(format!(
                "unit {unit_id} has {} values for {} covariates",
                values.len(),
                self.names.len()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                covariate: self.names[j].clone(),
                unit_id,
            });
        }
        self.rows.push(CovariateRow { unit_id, values });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownCovariate(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self.index_of(name)?;
        Ok(self.rows.iter().map(|r| r.values[j]).collect())
    }

    /// Projects onto the named columns, in the order given.
    pub fn select<S: AsRef<str>>(&self, names: &[S]) -> Result<CovariateTable> {
        let idx = names
            .iter()
            .map(|n| self.index_of(n.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(CovariateTable {
            names: names.iter().map(|n| n.as_ref().to_string()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| CovariateRow {
                    unit_id: r.unit_id.clone(),
                    values: idx.iter().map(|&j| r.values[j]).collect(),
                })
                .collect(),
        })
    }

    /// Keeps the rows whose position passes `keep`.
    pub fn filter_rows(&self, mut keep: impl FnMut(usize, &CovariateRow) -> bool) -> CovariateTable {
        CovariateTable {
            names: self.names.clone(),
            rows: self
                .rows
                .iter()
                .enumerate()
                .filter(|(i, r)| keep(*i, r))
                .map(|(_, r)| r.clone())
                .collect(),
        }
    }

    pub fn row(&self, unit_id: &str) -> Option<&CovariateRow> {
        self.rows.iter().find(|r| r.unit_id == unit_id)
    }
}

/// A unit's received treatment: its raw value, bin, and one-vs-rest indicator.
#[derive(Debug, Clone, PartialEq)]
pub struct TreatmentAssignment {
    pub unit_id: String,
    pub treatment_value: f64,
    pub bin_index: usize,
    pub z: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ValidationReport {
    pub n_ok: usize,
    pub n_rejected: usize,
    pub per_community: BTreeMap<String, usize>,
    /// Keys: the four labels plus `unlabeled`.
    pub labels: BTreeMap<String, usize>,
    pub first_error: Option<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.n_rejected == 0
    }
}

pub fn validate_events<'a>(events: impl IntoIterator<Item = &'a DiscourseEvent>) -> ValidationReport {
    let mut report = ValidationReport::default();
    for event in events {
        match event.validate() {
            Ok(()) => {
                report.n_ok += 1;
                *report
                    .per_community
                    .entry(event.community.clone())
                    .or_default() += 1;
                let key = event.label.map_or("unlabeled", |l| l.as_str());
                *report.labels.entry(key.to_string()).or_default() += 1;
            }
            Err(e) => {
                report.n_rejected += 1;
                if report.first_error.is_none() {
                    report.first_error = Some(e.to_string());
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn event(id: &str, t: i64, label: Option<Sentiment>) -> DiscourseEvent {
        DiscourseEvent {
            event_id: id.into(),
            community: "c".into(),
            author: "a".into(),
            created_utc: t,
            kind: EventKind::Comment,
            author_is_mod: false,
            removed: false,
            deleted: false,
            label,
        }
    }

    #[test]
    fn counts_labels_and_unlabeled() {
        let events = vec![
            event("1", 10, Some(Sentiment::Positive)),
            event("2", 11, Some(Sentiment::Negative)),
            event("3", 12, None),
        ];
        let report = validate_events(&events);
        assert_eq!(report.n_ok, 3);
        assert!(report.is_ok());
        assert_eq!(report.labels["positive"], 1);
        assert_eq!(report.labels["negative"], 1);
        assert_eq!(report.labels["unlabeled"], 1);
        assert_eq!(report.per_community["c"], 3);
    }

    #[test]
    fn zero_timestamp_is_malformed() {
        let report = validate_events(&[event("ev9", 0, None)]);
        assert_eq!(report.n_rejected, 1);
        let msg = report.first_error.unwrap();
        assert!(msg.contains("malformed timestamp"), "{msg}");
        assert!(msg.contains("ev9"));
    }

    #[test]
    fn removed_and_deleted_conflict() {
        let mut e = event("x", 5, None);
        e.removed = true;
        e.deleted = true;
        let msg = validate_events(&[e]).first_error.unwrap();
        assert!(msg.contains("contradictory removal flags"));
    }

    #[test]
    fn sentiment_has_four_states() {
        for s in Sentiment::ALL {
            assert_eq!(s.as_str().parse::<Sentiment>().unwrap(), s);
        }
        assert!(matches!("mixed".parse::<Sentiment>(), Err(Error::UnknownLabel(_))));
        assert!(!Sentiment::Exclude.is_mod_discourse());
    }

    #[test]
    fn window_is_closed_open() {
        let w = Window::new(10, 20).unwrap();
        assert!(w.contains(10));
        assert!(!w.contains(20));
        assert!(Window::new(5, 5).is_err());
    }

    #[test]
    fn covariate_table_rejects_non_finite() {
        let mut t = CovariateTable::new(vec!["a".into()]);
        assert!(t.push("u", vec![f64::NAN]).is_err());
        assert!(t.push("u", vec![1.0, 2.0]).is_err());
        t.push("u", vec![1.0]).unwrap();
        assert_eq!(t.column("a").unwrap(), vec![1.0]);
    }
}
