//! Mod-discourse prefiltering, per-community metrics, eligibility, and
//! grouped summaries with bootstrap intervals.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::Serialize;

use crate::bins::BinEdges;
use crate::error::{Error, Result};
use crate::model::{DiscourseEvent, Sentiment, Window};
use crate::stats::{self, BootstrapConfig};

static MOD_WORD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(?:mods?|moderators?)\b").expect("valid pattern"));

/// Recall-oriented candidate filter: non-moderator text mentioning mods.
pub fn prefilter(body: &str, author_is_mod: bool) -> bool {
    !author_is_mod && MOD_WORD.is_match(body)
}

/// Raw counts over a set of events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SentimentCounts {
    pub items: usize,
    pub positive: usize,
    pub neutral: usize,
    pub negative: usize,
    pub exclude: usize,
    pub removed: usize,
    pub deleted: usize,
}

impl SentimentCounts {
    pub fn add(&mut self, e: &DiscourseEvent) {
        self.items += 1;
        self.removed += e.removed as usize;
        self.deleted += e.deleted as usize;
        match e.label {
            Some(Sentiment::Positive) => self.positive += 1,
            Some(Sentiment::Neutral) => self.neutral += 1,
            Some(Sentiment::Negative) => self.negative += 1,
            Some(Sentiment::Exclude) => self.exclude += 1,
            None => {}
        }
    }

    pub fn from_events<'a>(events: impl IntoIterator<Item = &'a DiscourseEvent>) -> Self {
        let mut c = SentimentCounts::default();
        for e in events {
            c.add(e);
        }
        c
    }

    pub fn mod_discourse(&self) -> usize {
        self.positive + self.neutral + self.negative
    }

    pub fn get(&self, s: Sentiment) -> usize {
        match s {
            Sentiment::Positive => self.positive,
            Sentiment::Neutral => self.neutral,
            Sentiment::Negative => self.negative,
            Sentiment::Exclude => self.exclude,
        }
    }

    /// Percent of in-scope mod discourse carrying `s`.
    pub fn composition(&self, s: Sentiment) -> Option<f64> {
        let md = self.mod_discourse();
        (md > 0 && s.is_mod_discourse()).then(|| 100.0 * self.get(s) as f64 / md as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommunityMetrics {
    pub community: String,
    pub n_items: usize,
    pub n_mod_discourse: usize,
    pub counts: SentimentCounts,
    pub amount: f64,
    /// Percent per in-scope sentiment; sums to 100.
    pub composition: BTreeMap<Sentiment, f64>,
    pub frac_removed: f64,
    pub frac_deleted: f64,
    pub size_per_day: f64,
}

/// Metrics for one community's events inside `period`. Events from other
/// communities are ignored.
pub fn community_metrics<'a>(
    community: &str,
    events: impl IntoIterator<Item = &'a DiscourseEvent>,
    period: Window,
) -> Result<CommunityMetrics> {
    let counts = SentimentCounts::from_events(
        events
            .into_iter()
            .filter(|e| e.community == community && period.contains(e.created_utc)),
    );
    metrics_from_counts(community, counts, period)
}

pub fn metrics_from_counts(
    community: &str,
    counts: SentimentCounts,
    period: Window,
) -> Result<CommunityMetrics> {
    if counts.items == 0 {
        return Err(Error::EmptyCommunityPeriod);
    }
    if counts.mod_discourse() == 0 {
        return Err(Error::NoModDiscourse);
    }
    let n = counts.items as f64;
    Ok(CommunityMetrics {
        community: community.to_string(),
        n_items: counts.items,
        n_mod_discourse: counts.mod_discourse(),
        counts,
        amount: counts.mod_discourse() as f64 / n,
        composition: Sentiment::IN_SCOPE
            .into_iter()
            .map(|s| (s, counts.composition(s).expect("non-empty discourse")))
            .collect(),
        frac_removed: counts.removed as f64 / n,
        frac_deleted: counts.deleted as f64 / n,
        size_per_day: n / period.days(),
    })
}

/// Metrics for every community present in `events`, skipping communities
/// with no in-scope discourse in the period.
pub fn all_community_metrics(events: &[DiscourseEvent], period: Window) -> Vec<CommunityMetrics> {
    let mut counts: BTreeMap<&str, SentimentCounts> = BTreeMap::new();
    for e in events.iter().filter(|e| period.contains(e.created_utc)) {
        counts.entry(&e.community).or_default().add(e);
    }
    counts
        .into_iter()
        .filter_map(|(c, k)| metrics_from_counts(c, k, period).ok())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Statistic {
    Amount,
    CompositionPositive,
    CompositionNeutral,
    CompositionNegative,
    FracRemoved,
    FracDeleted,
    SizePerDay,
}

impl Statistic {
    pub fn name(&self) -> &'static str {
        match self {
            Statistic::Amount => "amount",
            Statistic::CompositionPositive => "composition-positive",
            Statistic::CompositionNeutral => "composition-neutral",
            Statistic::CompositionNegative => "composition-negative",
            Statistic::FracRemoved => "frac-removed",
            Statistic::FracDeleted => "frac-deleted",
            Statistic::SizePerDay => "size-per-day",
        }
    }

    pub fn of(&self, m: &CommunityMetrics) -> f64 {
        match self {
            Statistic::Amount => m.amount,
            Statistic::CompositionPositive => m.composition[&Sentiment::Positive],
            Statistic::CompositionNeutral => m.composition[&Sentiment::Neutral],
            Statistic::CompositionNegative => m.composition[&Sentiment::Negative],
            Statistic::FracRemoved => m.frac_removed,
            Statistic::FracDeleted => m.frac_deleted,
            Statistic::SizePerDay => m.size_per_day,
        }
    }

    /// Evaluates on raw window counts; `None` when there is no in-scope discourse.
    pub fn of_counts(&self, c: &SentimentCounts) -> Option<f64> {
        if c.mod_discourse() == 0 {
            return None;
        }
        let n = c.items as f64;
        Some(match self {
            Statistic::Amount => c.mod_discourse() as f64 / n,
            Statistic::CompositionPositive => c.composition(Sentiment::Positive)?,
            Statistic::CompositionNeutral => c.composition(Sentiment::Neutral)?,
            Statistic::CompositionNegative => c.composition(Sentiment::Negative)?,
            Statistic::FracRemoved => c.removed as f64 / n,
            Statistic::FracDeleted => c.deleted as f64 / n,
            Statistic::SizePerDay => return None,
        })
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Statistic::Amount,
            Statistic::CompositionPositive,
            Statistic::CompositionNeutral,
            Statistic::CompositionNegative,
            Statistic::FracRemoved,
            Statistic::FracDeleted,
            Statistic::SizePerDay,
        ]
        .into_iter()
        .find(|st| st.name() == s)
        .ok_or_else(|| Error::UnknownStatistic(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Eligibility {
    pub eligible: bool,
    pub reason: Option<String>,
}

/// Communities need at least one item of each in-scope sentiment and must
/// not be devoted to discussing moderators in general.
pub fn eligibility(metrics: &CommunityMetrics, meta_communities: &HashSet<String>) -> Eligibility {
    let reject = |r: &str| Eligibility {
        eligible: false,
        reason: Some(r.to_string()),
    };
    if meta_communities.contains(&metrics.community) {
        return reject("meta community");
    }
    for s in Sentiment::IN_SCOPE {
        if metrics.counts.get(s) == 0 {
            return reject(&format!("no {s}"));
        }
    }
    Eligibility {
        eligible: true,
        reason: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GroupKey {
    SizeBin,
    Topic,
    HealthQuartile,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSpec {
    pub key: GroupKey,
    /// Size-bin edges (size bins only).
    pub edges: Option<BinEdges>,
    /// Category labels in output order (topic and custom only).
    pub labels: Vec<String>,
}

pub const DEFAULT_SIZE_EDGES: [f64; 4] = [10.0, 100.0, 1000.0, 10_000.0];
pub const HEALTH_QUARTILES: [&str; 4] = ["Q1", "Q2", "Q3", "Q4"];

/// Per-unit group keys fed to [`GroupSpec::assign`].
pub enum GroupInput<'a> {
    Numeric(&'a [f64]),
    Categorical(&'a [String]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grouping {
    pub labels: Vec<String>,
    pub assignment: Vec<usize>,
}

impl GroupSpec {
    pub fn size_bins(edges: BinEdges) -> Self {
        GroupSpec {
            key: GroupKey::SizeBin,
            edges: Some(edges),
            labels: Vec::new(),
        }
    }

    pub fn default_size_bins() -> Self {
        Self::size_bins(BinEdges::new(DEFAULT_SIZE_EDGES.to_vec()).expect("static edges"))
    }

    pub fn topics(labels: Vec<String>) -> Self {
        GroupSpec {
            key: GroupKey::Topic,
            edges: None,
            labels,
        }
    }

    pub fn health_quartiles() -> Self {
        GroupSpec {
            key: GroupKey::HealthQuartile,
            edges: None,
            labels: HEALTH_QUARTILES.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn custom(labels: Vec<String>) -> Self {
        GroupSpec {
            key: GroupKey::Custom,
            edges: None,
            labels,
        }
    }

    pub fn assign(&self, input: GroupInput<'_>) -> Result<Grouping> {
        match (self.key, input) {
            (GroupKey::SizeBin, GroupInput::Numeric(v)) => {
                let edges = self
                    .edges
                    .as_ref()
                    .ok_or_else(|| Error::InvalidParameter("size grouping needs edges".into()))?;
                Ok(Grouping {
                    labels: edges.labels(),
                    assignment: edges.assign_all(v)?,
                })
            }
            (GroupKey::HealthQuartile, GroupInput::Numeric(v)) => Ok(Grouping {
                labels: self.labels.clone(),
                assignment: quartile_groups(v)?,
            }),
            (GroupKey::Topic | GroupKey::Custom, GroupInput::Categorical(cats)) => {
                let unique: HashSet<&String> = self.labels.iter().collect();
                if unique.len() != self.labels.len() {
                    return Err(Error::InvalidParameter("duplicate group labels".into()));
                }
                let assignment = cats
                    .iter()
                    .map(|c| {
                        self.labels.iter().position(|l| l == c).ok_or_else(|| {
                            Error::InvalidParameter(format!("unit in unknown group {c:?}"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Grouping {
                    labels: self.labels.clone(),
                    assignment,
                })
            }
            _ => Err(Error::InvalidParameter(
                "group input kind does not match the grouping key".into(),
            )),
        }
    }
}

/// Quartile index per value. Cuts are the nearest-rank 25/50/75th
/// percentiles; a value equal to a cut falls in the lower quartile.
pub fn quartile_groups(values: &[f64]) -> Result<Vec<usize>> {
    if values.is_empty() {
        return Ok(Vec::new());
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite grouping value".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cuts = [25.0, 50.0, 75.0].map(|p| stats::nearest_rank(&sorted, p));
    Ok(values
        .iter()
        .map(|v| cuts.iter().filter(|&&c| *v > c).count())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub group: String,
    pub statistic: String,
    pub mean: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub n: usize,
}

/// Per-group mean of a community-level statistic with a percentile bootstrap
/// over communities. With `weights`, means are weighted (e.g. by item count).
pub fn group_and_summarize(
    grouping: &Grouping,
    values: &[f64],
    weights: Option<&[f64]>,
    statistic: &str,
    cfg: &BootstrapConfig,
) -> Result<Vec<GroupSummary>> {
    if grouping.assignment.len() != values.len() || weights.is_some_and(|w| w.len() != values.len()) {
        return Err(Error::LengthMismatch("grouping, values and weights differ in length".into()));
    }
    grouping
        .labels
        .iter()
        .enumerate()
        .map(|(g, label)| {
            let members: Vec<usize> = (0..values.len())
                .filter(|&i| grouping.assignment[i] == g)
                .collect();
            let vals: Vec<f64> = members.iter().map(|&i| values[i]).collect();
            let wts: Vec<f64> = match weights {
                Some(w) => members.iter().map(|&i| w[i]).collect(),
                None => vec![1.0; vals.len()],
            };
            let mut row = GroupSummary {
                group: label.clone(),
                statistic: statistic.to_string(),
                mean: None,
                ci_low: None,
                ci_high: None,
                n: vals.len(),
            };
            if vals.is_empty() {
                return Ok(row);
            }
            row.mean = stats::weighted_mean(&vals, &wts);
            let n = vals.len();
            let ci = stats::bootstrap(&cfg.derived(g as u64), |rng| {
                let (mut num, mut den) = (0.0, 0.0);
                for i in stats::resample_indices(rng, n) {
                    num += vals[i] * wts[i];
                    den += wts[i];
                }
                (den > 0.0).then(|| num / den)
            })?;
            row.ci_low = Some(ci.low);
            row.ci_high = Some(ci.high);
            Ok(row)
        })
        .collect()
}

pub fn write_group_summaries(out: impl Write, rows: &[GroupSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["group", "statistic", "mean", "ci_low", "ci_high", "n"])?;
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.group.clone(),
            r.statistic.clone(),
            cell(r.mean),
            cell(r.ci_low),
            cell(r.ci_high),
            r.n.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<summary>", e))?;
    Ok(())
}
