//! A new moderator's activity before and during their tenure.

use std::collections::HashMap;

use serde::Serialize;

use crate::did::AppointmentEvent;
use crate::model::{DiscourseEvent, DAY};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EngagementParams {
    pub w_pre: i64,
    pub w_during: i64,
    /// Minimum item count for a flag to be set.
    pub k: usize,
}

impl Default for EngagementParams {
    fn default() -> Self {
        EngagementParams {
            w_pre: 84 * DAY,
            w_during: 84 * DAY,
            k: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Engagement {
    pub before: usize,
    pub during: usize,
    pub elsewhere: usize,
    pub engaged_before: bool,
    pub engaged_during: bool,
    pub active_elsewhere: bool,
}

pub const ENGAGEMENT_ATTRIBUTES: [&str; 3] = ["engaged_before", "engaged_during", "active_elsewhere"];

/// Counts the appointee's items in the community over `[t0 - w_pre, t0)` and
/// `[t0, t0 + w_during)`, and elsewhere over `[t0 - w_pre, t0)`.
/// `author_events` should be the appointee's items; others are ignored.
pub fn engagement_attributes<'a>(
    appointment: &AppointmentEvent,
    author_events: impl IntoIterator<Item = &'a DiscourseEvent>,
    params: &EngagementParams,
) -> Engagement {
    let t0 = appointment.t0;
    let (mut before, mut during, mut elsewhere) = (0, 0, 0);
    for e in author_events {
        if e.author != appointment.username {
            continue;
        }
        let t = e.created_utc;
        let pre = t0 - params.w_pre <= t && t < t0;
        if e.community == appointment.community {
            if pre {
                before += 1;
            } else if t0 <= t && t < t0 + params.w_during {
                during += 1;
            }
        } else if pre {
            elsewhere += 1;
        }
    }
    Engagement {
        before,
        during,
        elsewhere,
        engaged_before: before >= params.k,
        engaged_during: during >= params.k,
        active_elsewhere: elsewhere >= params.k,
    }
}

/// Computes and attaches engagement flags and raw counts to each appointment.
pub fn annotate_engagement(
    appointments: &mut [AppointmentEvent],
    events: &[DiscourseEvent],
    params: &EngagementParams,
) {
    let mut by_author: HashMap<&str, Vec<&DiscourseEvent>> = HashMap::new();
    for e in events {
        by_author.entry(&e.author).or_default().push(e);
    }
    for a in appointments.iter_mut() {
        let mine = by_author.get(a.username.as_str()).map(Vec::as_slice).unwrap_or(&[]);
        let g = engagement_attributes(a, mine.iter().copied(), params);
        a.set("engaged_before", g.engaged_before);
        a.set("engaged_during", g.engaged_during);
        a.set("active_elsewhere", g.active_elsewhere);
        a.set("before_count", g.before as f64);
        a.set("during_count", g.during as f64);
        a.set("elsewhere_count", g.elsewhere as f64);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EventKind;

    const T0: i64 = 500 * DAY;

    fn item(community: &str, t: i64) -> DiscourseEvent {
        DiscourseEvent {
            event_id: format!("{community}{t}"),
            community: community.into(),
            author: "newmod".into(),
            created_utc: t,
            kind: EventKind::Comment,
            author_is_mod: false,
            removed: false,
            deleted: false,
            label: None,
        }
    }

    fn app() -> AppointmentEvent {
        AppointmentEvent::new("home", "newmod", T0)
    }

    #[test]
    fn nothing_anywhere() {
        let g = engagement_attributes(&app(), &[], &EngagementParams::default());
        assert!(!g.engaged_before && !g.engaged_during && !g.active_elsewhere);
    }

    #[test]
    fn threshold_rule() {
        let mut events = Vec::new();
        for i in 0..12 {
            events.push(item("home", T0 - (i + 1) * DAY));
        }
        for i in 0..30 {
            events.push(item("elsewhere", T0 - (i + 1) * 3600));
        }
        let g = engagement_attributes(&app(), &events, &EngagementParams::default());
        assert_eq!((g.before, g.during, g.elsewhere), (12, 0, 30));
        assert!(g.engaged_before && g.active_elsewhere && !g.engaged_during);
    }

    #[test]
    fn exactly_k_counts() {
        let p = EngagementParams::default();
        let events: Vec<_> = (0..5).map(|i| item("home", T0 + i * DAY)).collect();
        assert!(engagement_attributes(&app(), &events, &p).engaged_during);
        let events: Vec<_> = (0..4).map(|i| item("home", T0 + i * DAY)).collect();
        assert!(!engagement_attributes(&app(), &events, &p).engaged_during);
    }

    #[test]
    fn window_edges() {
        let p = EngagementParams::default();
        let events = vec![
            item("home", T0 - p.w_pre),
            item("home", T0 - p.w_pre - 1),
            item("home", T0),
            item("home", T0 + p.w_during),
        ];
        let g = engagement_attributes(&app(), &events, &p);
        assert_eq!((g.before, g.during), (1, 1));
    }
}
