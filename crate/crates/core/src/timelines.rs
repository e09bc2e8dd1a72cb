//! Moderator tenures from roster snapshots, and the series derived from them:
//! team size over time, per-moderator workload, and prior experience.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DiscourseEvent, ModSnapshot, ModTenure, Window, DAY};

/// Merges one community's snapshots into tenures.
///
/// A tenure runs from the listed appointment timestamp until the first
/// capture that no longer lists the moderator under that appointment. Captures
/// sharing a timestamp are unioned, so input order among them is irrelevant.
pub fn merge_snapshots(snapshots: &[ModSnapshot]) -> Result<Vec<ModTenure>> {
    let Some(first) = snapshots.first() else {
        return Err(Error::NoSnapshots);
    };
    let community = first.community.clone();

    // capture time -> username -> appointed_utc
    let mut captures: BTreeMap<i64, BTreeMap<&str, i64>> = BTreeMap::new();
    for snap in snapshots {
        let roster = captures.entry(snap.captured_utc).or_default();
        for entry in &snap.roster {
            if let Some(prev) = roster.insert(&entry.username, entry.appointed_utc) {
                if prev != entry.appointed_utc {
                    return Err(Error::CorruptRun {
                        community: community.clone(),
                        username: entry.username.clone(),
                        first: prev,
                        second: entry.appointed_utc,
                    });
                }
            }
        }
    }

    struct Open {
        start: i64,
        last_seen: i64,
    }
    let mut open: BTreeMap<String, Open> = BTreeMap::new();
    let mut tenures = Vec::new();
    let close = |name: &str, run: &Open, end: i64| ModTenure {
        community: community.clone(),
        username: name.to_string(),
        start_utc: run.start,
        end_utc: Some(end),
        end_lower_utc: Some(run.last_seen),
    };

    for (&t, roster) in &captures {
        let departed: Vec<String> = open
            .keys()
            .filter(|name| !roster.contains_key(name.as_str()))
            .cloned()
            .collect();
        for name in departed {
            let run = open.remove(&name).expect("present");
            tenures.push(close(&name, &run, t));
        }
        for (&name, &appointed) in roster {
            match open.get_mut(name) {
                Some(run) if run.start == appointed => run.last_seen = t,
                Some(run) if appointed > run.last_seen => {
                    // Removed and re-appointed between two captures.
                    tenures.push(close(name, run, t));
                    *run = Open {
                        start: appointed,
                        last_seen: t,
                    };
                }
                Some(run) => {
                    return Err(Error::CorruptRun {
                        community: community.clone(),
                        username: name.to_string(),
                        first: run.start,
                        second: appointed,
                    });
                }
                None => {
                    open.insert(
                        name.to_string(),
                        Open {
                            start: appointed,
                            last_seen: t,
                        },
                    );
                }
            }
        }
    }
    for (name, run) in open {
        tenures.push(ModTenure {
            community: community.clone(),
            username: name,
            start_utc: run.start,
            end_utc: None,
            end_lower_utc: None,
        });
    }
    tenures.sort_by(|a, b| {
        let key = |t: &ModTenure| (t.start_utc, t.username.clone(), t.end_utc.unwrap_or(i64::MAX));
        key(a).cmp(&key(b))
    });
    Ok(tenures)
}

/// Piecewise-constant team size. Each breakpoint's size holds until the next.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TeamSeries {
    pub community: String,
    pub breakpoints: Vec<(i64, u32)>,
}

pub fn team_size_series(community: &str, tenures: &[ModTenure]) -> TeamSeries {
    let mut deltas: BTreeMap<i64, i64> = BTreeMap::new();
    for t in tenures {
        *deltas.entry(t.start_utc).or_default() += 1;
        if let Some(end) = t.end_utc {
            *deltas.entry(end).or_default() -= 1;
        }
    }
    if deltas.is_empty() {
        return TeamSeries {
            community: community.to_string(),
            breakpoints: vec![(0, 0)],
        };
    }
    let mut size = 0i64;
    let breakpoints = deltas
        .into_iter()
        .map(|(t, d)| {
            size += d;
            (t, size.max(0) as u32)
        })
        .collect();
    TeamSeries {
        community: community.to_string(),
        breakpoints,
    }
}

impl TeamSeries {
    pub fn size_at(&self, t: i64) -> u32 {
        match self.breakpoints.partition_point(|&(bt, _)| bt <= t) {
            0 => 0,
            i => self.breakpoints[i - 1].1,
        }
    }

    /// Moderator-seconds over the window.
    pub fn integral(&self, window: Window) -> f64 {
        let mut total = 0.0;
        let mut cursor = window.start;
        let mut size = self.size_at(window.start);
        let from = self.breakpoints.partition_point(|&(bt, _)| bt <= window.start);
        for &(bt, s) in &self.breakpoints[from..] {
            if bt >= window.end {
                break;
            }
            total += size as f64 * (bt - cursor) as f64;
            cursor = bt;
            size = s;
        }
        total + size as f64 * (window.end - cursor) as f64
    }

    pub fn mean_size(&self, window: Window) -> f64 {
        self.integral(window) / window.seconds() as f64
    }
}

/// Posts and comments per moderator per day over the window.
pub fn workload<'a>(
    events: impl IntoIterator<Item = &'a DiscourseEvent>,
    team: &TeamSeries,
    window: Window,
) -> Result<f64> {
    let mean = team.mean_size(window);
    if mean <= 0.0 {
        return Err(Error::NoModerators);
    }
    let count = events
        .into_iter()
        .filter(|e| e.community == team.community && window.contains(e.created_utc))
        .count();
    Ok(count as f64 / window.days() / mean)
}

pub const YEAR: f64 = 365.25 * DAY as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ExperienceClass {
    Novice,
    UnderTwoYears,
    TwoYearsPlus,
}

impl ExperienceClass {
    pub fn from_seconds(seconds: i64) -> Self {
        if seconds <= 0 {
            ExperienceClass::Novice
        } else if (seconds as f64) < 2.0 * YEAR {
            ExperienceClass::UnderTwoYears
        } else {
            ExperienceClass::TwoYearsPlus
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ExperienceClass::Novice => "novice",
            ExperienceClass::UnderTwoYears => "<2y",
            ExperienceClass::TwoYearsPlus => ">=2y",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Experience {
    pub seconds: i64,
    pub class: ExperienceClass,
}

/// Time since the user's earliest appointment anywhere that began strictly before `t`.
pub fn experience_at(username: &str, tenures: &[ModTenure], t: i64) -> Experience {
    let seconds = tenures
        .iter()
        .filter(|x| x.username == username && x.start_utc < t)
        .map(|x| x.start_utc)
        .min()
        .map_or(0, |earliest| t - earliest);
    Experience {
        seconds,
        class: ExperienceClass::from_seconds(seconds),
    }
}

/// Earliest appointment per user, for repeated experience lookups.
pub fn earliest_starts(tenures: &[ModTenure]) -> HashMap<&str, Vec<i64>> {
    let mut by_user: HashMap<&str, Vec<i64>> = HashMap::new();
    for t in tenures {
        by_user.entry(t.username.as_str()).or_default().push(t.start_utc);
    }
    for starts in by_user.values_mut() {
        starts.sort_unstable();
    }
    by_user
}

/// Bins an experience duration (seconds) by cut points given in years.
/// Index 0 is `novice`; index i ≥ 1 covers `[cut[i-1], cut[i])` years.
pub fn experience_bin(seconds: i64, cuts_years: &[f64]) -> usize {
    if seconds <= 0 {
        return 0;
    }
    let years = seconds as f64 / YEAR;
    1 + cuts_years.iter().filter(|&&c| years >= c).count()
}
