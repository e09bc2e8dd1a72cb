//! Public moderator recruiting: phrase detection in moderators' own posts and
//! matching of later appointments.

use std::collections::{HashMap, HashSet};

use regex::{Regex, RegexBuilder};
use serde::Serialize;

use crate::acquisition::RawPost;
use crate::did::AppointmentEvent;
use crate::error::{Error, Result};
use crate::model::{ModTenure, DAY};

pub const DEFAULT_PATTERNS: [&str; 4] = [
    r"recruiting (new )?mod",
    r"applications? open .* mods?",
    r"mod elections?",
    r"accepting mod applications",
];

pub const DEFAULT_EXTERNAL: [&str; 1] = ["needamod"];
pub const RECRUIT_WINDOW: i64 = 56 * DAY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum RecruitSource {
    Internal,
    External,
}

impl RecruitSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            RecruitSource::Internal => "internal",
            RecruitSource::External => "external",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct RecruitingEvent {
    pub community: String,
    pub t: i64,
    pub source: RecruitSource,
    /// Index of the first matching pattern.
    pub pattern: usize,
    pub event_id: String,
}

pub struct RecruitDetector {
    patterns: Vec<Regex>,
    external: HashSet<String>,
}

impl RecruitDetector {
    pub fn new<S: AsRef<str>>(patterns: &[S], external: &[S]) -> Result<Self> {
        let patterns = patterns
            .iter()
            .map(|p| {
                RegexBuilder::new(p.as_ref())
                    .case_insensitive(true)
                    .build()
                    .map_err(|e| Error::Config(format!("bad recruiting pattern {:?}: {e}", p.as_ref())))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RecruitDetector {
            patterns,
            external: external.iter().map(|s| s.as_ref().to_lowercase()).collect(),
        })
    }

    pub fn with_defaults() -> Self {
        Self::new(&DEFAULT_PATTERNS, &DEFAULT_EXTERNAL).expect("default patterns compile")
    }

    pub fn matching_pattern(&self, body: &str) -> Option<usize> {
        self.patterns.iter().position(|p| p.is_match(body))
    }

    /// Recruiting posts by sitting moderators of the recruiting community.
    /// Listings in an external recruiting community count for their target.
    pub fn detect(&self, posts: &[RawPost], tenures: &[ModTenure]) -> Vec<RecruitingEvent> {
        let mut by_mod: HashMap<(&str, &str), Vec<&ModTenure>> = HashMap::new();
        for t in tenures {
            by_mod
                .entry((t.community.as_str(), t.username.as_str()))
                .or_default()
                .push(t);
        }
        let mut found: Vec<RecruitingEvent> = posts
            .iter()
            .filter_map(|p| {
                let e = &p.event;
                let (community, source) = match &p.target_community {
                    Some(target) if self.external.contains(&e.community.to_lowercase()) => {
                        (target.as_str(), RecruitSource::External)
                    }
                    _ => (e.community.as_str(), RecruitSource::Internal),
                };
                let sitting = by_mod
                    .get(&(community, e.author.as_str()))
                    .is_some_and(|ts| ts.iter().any(|t| t.covers(e.created_utc)));
                if !sitting {
                    return None;
                }
                let pattern = self.matching_pattern(&p.body)?;
                Some(RecruitingEvent {
                    community: community.to_string(),
                    t: e.created_utc,
                    source,
                    pattern,
                    event_id: e.event_id.clone(),
                })
            })
            .collect();
        found.sort();
        found
    }
}

pub fn detect_public_recruiting(posts: &[RawPost], tenures: &[ModTenure]) -> Vec<RecruitingEvent> {
    RecruitDetector::with_defaults().detect(posts, tenures)
}

/// Sets `publicly_recruited` on every appointment: true iff a recruiting
/// event in the same community at `r` satisfies `r <= t0 <= r + window`.
/// Also records `recruit_source` (internal, external, or both) when public.
pub fn match_recruitment(
    appointments: &mut [AppointmentEvent],
    recruiting: &[RecruitingEvent],
    window: i64,
) {
    let mut by_community: HashMap<&str, Vec<(i64, RecruitSource)>> = HashMap::new();
    for r in recruiting {
        by_community.entry(&r.community).or_default().push((r.t, r.source));
    }
    for v in by_community.values_mut() {
        v.sort();
    }
    for a in appointments.iter_mut() {
        let hits: Vec<RecruitSource> = by_community
            .get(a.community.as_str())
            .map(|v| {
                let lo = v.partition_point(|&(t, _)| t < a.t0 - window);
                v[lo..]
                    .iter()
                    .take_while(|&&(t, _)| t <= a.t0)
                    .map(|&(_, s)| s)
                    .collect()
            })
            .unwrap_or_default();
        a.set("publicly_recruited", !hits.is_empty());
        let internal = hits.contains(&RecruitSource::Internal);
        let external = hits.contains(&RecruitSource::External);
        let source = match (internal, external) {
            (true, true) => "both",
            (true, false) => "internal",
            (false, true) => "external",
            (false, false) => "private",
        };
        a.set("recruit_source", source);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DiscourseEvent, EventKind};

    fn post(community: &str, author: &str, t: i64, body: &str, target: Option<&str>) -> RawPost {
        RawPost {
            event: DiscourseEvent {
                event_id: format!("{community}-{t}"),
                community: community.into(),
                author: author.into(),
                created_utc: t,
                kind: EventKind::Post,
                author_is_mod: true,
                removed: false,
                deleted: false,
                label: None,
            },
            body: body.into(),
            target_community: target.map(str::to_string),
        }
    }

    fn tenure(community: &str, user: &str, start: i64, end: Option<i64>) -> ModTenure {
        ModTenure {
            community: community.into(),
            username: user.into(),
            start_utc: start,
            end_utc: end,
            end_lower_utc: end.map(|e| e - 1),
        }
    }

    #[test]
    fn only_sitting_mods_with_recruiting_phrases() {
        let tenures = vec![tenure("c", "boss", 0, None), tenure("c", "old", 0, Some(50))];
        let posts = vec![
            post("c", "boss", 100, "We are recruiting new mods!", None),
            post("c", "random", 100, "We are recruiting new mods!", None),
            post("c", "boss", 200, "installed new mods for Skyrim", None),
            post("c", "old", 300, "Mod elections next week", None),
            post("c", "boss", 400, "APPLICATIONS OPEN for two new mods", None),
        ];
        let found = detect_public_recruiting(&posts, &tenures);
        assert_eq!(found.len(), 2);
        assert_eq!((found[0].t, found[0].source, found[0].pattern), (100, RecruitSource::Internal, 0));
        assert_eq!((found[1].t, found[1].pattern), (400, 1));
    }

    #[test]
    fn external_listings_count_for_target() {
        let tenures = vec![tenure("c", "boss", 0, None)];
        let posts = vec![
            post("needamod", "boss", 10, "[c] accepting mod applications", Some("c")),
            post("needamod", "stranger", 10, "[c] accepting mod applications", Some("c")),
        ];
        let found = detect_public_recruiting(&posts, &tenures);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].community, "c");
        assert_eq!(found[0].source, RecruitSource::External);
    }

    #[test]
    fn eight_week_forward_window() {
        let rec = vec![RecruitingEvent {
            community: "c".into(),
            t: 0,
            source: RecruitSource::Internal,
            pattern: 0,
            event_id: "r".into(),
        }];
        let mut apps = vec![
            AppointmentEvent::new("c", "a", 30 * DAY),
            AppointmentEvent::new("c", "b", 70 * DAY),
            AppointmentEvent::new("c", "d", -5 * DAY),
            AppointmentEvent::new("c", "e", 56 * DAY),
            AppointmentEvent::new("c", "f", 0),
            AppointmentEvent::new("other", "g", 30 * DAY),
        ];
        match_recruitment(&mut apps, &rec, RECRUIT_WINDOW);
        let flags: Vec<bool> = apps.iter().map(|a| a.flag("publicly_recruited").unwrap()).collect();
        assert_eq!(flags, vec![true, false, false, true, true, false]);
    }
}
