//! Difference-in-differences around moderator appointments.
//!
//! Each appointment contributes `post - pre`, the change in a discourse
//! statistic between the window just after and the window just before the
//! appointment. Appointments are grouped into calendar cohorts; within a
//! cohort the treated mean change minus the control mean change removes any
//! trend the two arms share. Cohort effects are then averaged.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::discourse::{SentimentCounts, Statistic};
use crate::error::{Error, Result};
use crate::model::{DiscourseEvent, Window, DAY};
use crate::stats::{self, BootstrapConfig, Interval};

pub const WINDOW: i64 = 28 * DAY;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Bool(bool),
    Real(f64),
    Text(String),
}

impl From<bool> for AttrValue {
    fn from(v: bool) -> Self {
        AttrValue::Bool(v)
    }
}

impl From<f64> for AttrValue {
    fn from(v: f64) -> Self {
        AttrValue::Real(v)
    }
}

impl From<&str> for AttrValue {
    fn from(v: &str) -> Self {
        AttrValue::Text(v.to_string())
    }
}

/// A new moderator's appointment, with attributes that define study arms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppointmentEvent {
    pub community: String,
    pub username: String,
    pub t0: i64,
    #[serde(default)]
    pub attributes: BTreeMap<String, AttrValue>,
}

impl AppointmentEvent {
    pub fn new(community: impl Into<String>, username: impl Into<String>, t0: i64) -> Self {
        AppointmentEvent {
            community: community.into(),
            username: username.into(),
            t0,
            attributes: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &str, value: impl Into<AttrValue>) -> Self {
        self.attributes.insert(name.to_string(), value.into());
        self
    }

    pub fn set(&mut self, name: &str, value: impl Into<AttrValue>) {
        self.attributes.insert(name.to_string(), value.into());
    }

    pub fn flag(&self, name: &str) -> Result<bool> {
        match self.attributes.get(name) {
            Some(AttrValue::Bool(b)) => Ok(*b),
            _ => Err(Error::NonBooleanAttribute {
                attribute: name.to_string(),
                community: self.community.clone(),
                username: self.username.clone(),
            }),
        }
    }

    fn key(&self) -> (&str, i64, &str) {
        (&self.community, self.t0, &self.username)
    }
}

/// Events grouped by community and sorted by time for window lookups.
pub struct EventIndex<'a> {
    by_community: HashMap<&'a str, Vec<&'a DiscourseEvent>>,
}

impl<'a> EventIndex<'a> {
    pub fn new(events: &'a [DiscourseEvent]) -> Self {
        let mut by_community: HashMap<&str, Vec<&DiscourseEvent>> = HashMap::new();
        for e in events {
            by_community.entry(&e.community).or_default().push(e);
        }
        for v in by_community.values_mut() {
            v.sort_by(|a, b| {
                a.created_utc
                    .cmp(&b.created_utc)
                    .then_with(|| a.event_id.cmp(&b.event_id))
            });
        }
        EventIndex { by_community }
    }

    pub fn window(&self, community: &str, window: Window) -> &[&'a DiscourseEvent] {
        let Some(v) = self.by_community.get(community) else {
            return &[];
        };
        let lo = v.partition_point(|e| e.created_utc < window.start);
        let hi = v.partition_point(|e| e.created_utc < window.end);
        &v[lo..hi]
    }

    pub fn counts(&self, community: &str, window: Window) -> SentimentCounts {
        SentimentCounts::from_events(self.window(community, window).iter().copied())
    }
}

/// Converts a statistic to percentage points for differencing.
fn pp_scale(statistic: Statistic) -> Result<f64> {
    match statistic {
        Statistic::CompositionPositive
        | Statistic::CompositionNeutral
        | Statistic::CompositionNegative => Ok(1.0),
        Statistic::Amount | Statistic::FracRemoved | Statistic::FracDeleted => Ok(100.0),
        Statistic::SizePerDay => Err(Error::InvalidParameter(
            "size-per-day is not a window statistic".into(),
        )),
    }
}

/// The statistic over one community's events in `window`, in percentage
/// points. `None` when the window holds no in-scope mod discourse.
pub fn window_outcome(
    index: &EventIndex<'_>,
    community: &str,
    window: Window,
    statistic: Statistic,
) -> Result<Option<f64>> {
    let scale = pp_scale(statistic)?;
    Ok(statistic
        .of_counts(&index.counts(community, window))
        .map(|v| v * scale))
}

/// Post-window minus pre-window outcome, `None` if either is missing.
pub fn event_diff(
    event: &AppointmentEvent,
    index: &EventIndex<'_>,
    statistic: Statistic,
    window: i64,
) -> Result<Option<f64>> {
    let pre = Window::new(event.t0 - window, event.t0)?;
    let post = Window::new(event.t0, event.t0 + window)?;
    let before = window_outcome(index, &event.community, pre, statistic)?;
    let after = window_outcome(index, &event.community, post, statistic)?;
    Ok(before.zip(after).map(|(b, a)| a - b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CohortWeighting {
    /// Weight each cohort by its treated count.
    Treated,
    /// Weight each cohort by all its events, symmetric in the two arms.
    Pooled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DidConfig {
    pub window: i64,
    pub cohort_period: i64,
    pub weighting: CohortWeighting,
    pub exclude_overlapping: bool,
    pub bootstrap: BootstrapConfig,
}

impl Default for DidConfig {
    fn default() -> Self {
        DidConfig {
            window: WINDOW,
            cohort_period: WINDOW,
            weighting: CohortWeighting::Treated,
            exclude_overlapping: false,
            bootstrap: BootstrapConfig::default(),
        }
    }
}

/// Calendar cohort of `t`, counted in whole periods from the Unix epoch.
pub fn cohort_of(t: i64, period: i64) -> i64 {
    t.div_euclid(period)
}

/// Whether another appointment in the same community at a different time
/// falls inside this event's pre or post window.
pub fn overlapping(appointments: &[AppointmentEvent], window: i64) -> Vec<bool> {
    let mut by_community: HashMap<&str, Vec<i64>> = HashMap::new();
    for a in appointments {
        by_community.entry(&a.community).or_default().push(a.t0);
    }
    for v in by_community.values_mut() {
        v.sort_unstable();
    }
    appointments
        .iter()
        .map(|a| {
            let times = &by_community[a.community.as_str()];
            let lo = times.partition_point(|&t| t < a.t0 - window);
            let hi = times.partition_point(|&t| t < a.t0 + window);
            times[lo..hi].iter().any(|&t| t != a.t0)
        })
        .collect()
}

/// One appointment's change, tagged with its arm and cohort.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventDiff {
    pub community: String,
    pub username: String,
    pub t0: i64,
    pub cohort: i64,
    pub treated: bool,
    pub diff: f64,
    pub overlapping: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortEffect {
    pub cohort: i64,
    pub start_utc: i64,
    pub n_treated: usize,
    pub n_control: usize,
    pub mean_treated: f64,
    pub mean_control: f64,
    pub effect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DidResult {
    pub attribute: String,
    pub statistic: String,
    /// Percentage points.
    pub estimate: f64,
    pub ci: Interval,
    /// Events in cohorts where both arms are present.
    pub n_treated: usize,
    pub n_control: usize,
    /// Events without a resolvable pre or post window.
    pub n_dropped: usize,
    /// Events in cohorts lacking one arm.
    pub n_unmatched: usize,
    pub n_overlapping: usize,
    /// Plain mean post-pre change among treated events, with no control.
    pub naive_treated: f64,
    pub cohorts: Vec<CohortEffect>,
}

struct Cohort {
    cohort: i64,
    treated: Vec<f64>,
    control: Vec<f64>,
}

fn combine(cohorts: &[(i64, &[f64], &[f64])], weighting: CohortWeighting) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (_, t, c) in cohorts {
        let effect = stats::mean(t)? - stats::mean(c)?;
        let w = match weighting {
            CohortWeighting::Treated => t.len() as f64,
            CohortWeighting::Pooled => (t.len() + c.len()) as f64,
        };
        num += w * effect;
        den += w;
    }
    (den > 0.0).then(|| num / den)
}

/// Cohort-aligned DID over precomputed per-event changes.
pub fn did_from_diffs(
    diffs: &[EventDiff],
    weighting: CohortWeighting,
    cohort_period: i64,
    bootstrap: &BootstrapConfig,
) -> Result<(f64, Interval, Vec<CohortEffect>, usize)> {
    let n_t = diffs.iter().filter(|d| d.treated).count();
    if n_t == 0 || n_t == diffs.len() {
        return Err(Error::SingleArm);
    }
    let mut sorted: Vec<&EventDiff> = diffs.iter().collect();
    sorted.sort_by(|a, b| {
        (a.cohort, a.community.as_str(), a.t0, a.username.as_str())
            .cmp(&(b.cohort, b.community.as_str(), b.t0, b.username.as_str()))
            .then(a.diff.total_cmp(&b.diff))
    });
    let mut grouped: BTreeMap<i64, Cohort> = BTreeMap::new();
    for d in sorted {
        let c = grouped.entry(d.cohort).or_insert_with(|| Cohort {
            cohort: d.cohort,
            treated: Vec::new(),
            control: Vec::new(),
        });
        if d.treated {
            c.treated.push(d.diff);
        } else {
            c.control.push(d.diff);
        }
    }
    let (usable, partial): (Vec<Cohort>, Vec<Cohort>) = grouped
        .into_values()
        .partition(|c| !c.treated.is_empty() && !c.control.is_empty());
    if usable.is_empty() {
        return Err(Error::NoOverlappingCohort);
    }
    let n_unmatched = partial
        .iter()
        .map(|c| c.treated.len() + c.control.len())
        .sum();

    let views: Vec<(i64, &[f64], &[f64])> = usable
        .iter()
        .map(|c| (c.cohort, c.treated.as_slice(), c.control.as_slice()))
        .collect();
    let estimate = combine(&views, weighting).expect("both arms present");

    // Resample within each (cohort, arm) stratum.
    let ci = stats::bootstrap(bootstrap, |rng| {
        let draw = |rng: &mut _, v: &[f64]| -> Vec<f64> {
            stats::resample_indices(rng, v.len()).map(|i| v[i]).collect()
        };
        let resampled: Vec<(i64, Vec<f64>, Vec<f64>)> = usable
            .iter()
            .map(|c| (c.cohort, draw(rng, &c.treated), draw(rng, &c.control)))
            .collect();
        let views: Vec<(i64, &[f64], &[f64])> = resampled
            .iter()
            .map(|(k, t, c)| (*k, t.as_slice(), c.as_slice()))
            .collect();
        combine(&views, weighting)
    })?;

    let cohorts = usable
        .iter()
        .map(|c| {
            let mt = stats::mean(&c.treated).expect("non-empty");
            let mc = stats::mean(&c.control).expect("non-empty");
            CohortEffect {
                cohort: c.cohort,
                start_utc: c.cohort * cohort_period,
                n_treated: c.treated.len(),
                n_control: c.control.len(),
                mean_treated: mt,
                mean_control: mc,
                effect: mt - mc,
            }
        })
        .collect();
    Ok((estimate, ci, cohorts, n_unmatched))
}

/// Computes every appointment's change and the cohort-aligned DID between
/// appointments whose boolean `attribute` is true (treated) and false (control).
pub fn did_estimate(
    appointments: &[AppointmentEvent],
    events: &EventIndex<'_>,
    attribute: &str,
    statistic: Statistic,
    cfg: &DidConfig,
) -> Result<DidResult> {
    if cfg.cohort_period <= 0 || cfg.window <= 0 {
        return Err(Error::InvalidParameter("DID periods must be positive".into()));
    }
    let arms = appointments
        .iter()
        .map(|a| a.flag(attribute))
        .collect::<Result<Vec<bool>>>()?;
    let n_treated_all = arms.iter().filter(|&&t| t).count();
    if n_treated_all == 0 || n_treated_all == arms.len() {
        return Err(Error::SingleArm);
    }
    let overlaps = overlapping(appointments, cfg.window);

    let compute = |i: usize| -> Result<Option<EventDiff>> {
        let a = &appointments[i];
        Ok(event_diff(a, events, statistic, cfg.window)?.map(|diff| EventDiff {
            community: a.community.clone(),
            username: a.username.clone(),
            t0: a.t0,
            cohort: cohort_of(a.t0, cfg.cohort_period),
            treated: arms[i],
            diff,
            overlapping: overlaps[i],
        }))
    };
    #[cfg(feature = "parallel")]
    let computed: Vec<Option<EventDiff>> = {
        use rayon::prelude::*;
        (0..appointments.len())
            .into_par_iter()
            .map(compute)
            .collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let computed: Vec<Option<EventDiff>> =
        (0..appointments.len()).map(compute).collect::<Result<_>>()?;

    let n_dropped = computed.iter().filter(|d| d.is_none()).count();
    let n_overlapping = overlaps.iter().filter(|&&o| o).count();
    let diffs: Vec<EventDiff> = computed
        .into_iter()
        .flatten()
        .filter(|d| !(cfg.exclude_overlapping && d.overlapping))
        .collect();

    let (estimate, ci, cohorts, n_unmatched) =
        did_from_diffs(&diffs, cfg.weighting, cfg.cohort_period, &cfg.bootstrap)?;
    let mut treated: Vec<(&str, i64, &str, f64)> = diffs
        .iter()
        .filter(|d| d.treated)
        .map(|d| (d.community.as_str(), d.t0, d.username.as_str(), d.diff))
        .collect();
    treated.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
    let naive_treated =
        stats::mean(&treated.iter().map(|t| t.3).collect::<Vec<_>>()).unwrap_or(f64::NAN);

    Ok(DidResult {
        attribute: attribute.to_string(),
        statistic: statistic.name().to_string(),
        estimate,
        ci,
        n_treated: cohorts.iter().map(|c: &CohortEffect| c.n_treated).sum(),
        n_control: cohorts.iter().map(|c| c.n_control).sum(),
        n_dropped,
        n_unmatched,
        n_overlapping,
        naive_treated,
        cohorts,
    })
}

/// Sorts appointments into a canonical order.
pub fn sort_appointments(appointments: &mut [AppointmentEvent]) {
    appointments.sort_by(|a, b| a.key().cmp(&b.key()));
}

pub const DID_HEADER: [&str; 8] = [
    "attribute",
    "statistic",
    "estimate_pp",
    "ci_low",
    "ci_high",
    "n_treated",
    "n_control",
    "n_dropped",
];

pub fn write_did_results(out: impl Write, results: &[DidResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DID_HEADER)?;
    for r in results {
        w.write_record([
            r.attribute.clone(),
            r.statistic.clone(),
            r.estimate.to_string(),
            r.ci.low.to_string(),
            r.ci.high.to_string(),
            r.n_treated.to_string(),
            r.n_control.to_string(),
            r.n_dropped.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<did>", e))?;
    Ok(())
}

pub fn write_cohorts(out: impl Write, result: &DidResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "cohort",
        "start_utc",
        "n_treated",
        "n_control",
        "mean_treated",
        "mean_control",
        "effect_pp",
    ])?;
    for c in &result.cohorts {
        w.write_record([
            c.cohort.to_string(),
            c.start_utc.to_string(),
            c.n_treated.to_string(),
            c.n_control.to_string(),
            c.mean_treated.to_string(),
            c.mean_control.to_string(),
            c.effect.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<cohorts>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EventKind, Sentiment};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const T0: i64 = 1_000 * DAY;

    fn ev(id: usize, community: &str, t: i64, label: Option<Sentiment>) -> DiscourseEvent {
        DiscourseEvent {
            event_id: format!("e{id}"),
            community: community.into(),
            author: "a".into(),
            created_utc: t,
            kind: EventKind::Comment,
            author_is_mod: false,
            removed: false,
            deleted: false,
            label,
        }
    }

    /// `pos` positive and `10 - pos` neutral items spread over [start, start + 28d).
    fn window_events(out: &mut Vec<DiscourseEvent>, community: &str, start: i64, pos: usize) {
        for k in 0..10 {
            let label = if k < pos { Sentiment::Positive } else { Sentiment::Neutral };
            out.push(ev(out.len(), community, start + k as i64 * DAY, Some(label)));
        }
    }

    fn diff(cohort: i64, treated: bool, d: f64, id: usize) -> EventDiff {
        EventDiff {
            community: format!("c{id}"),
            username: "u".into(),
            t0: cohort * WINDOW,
            cohort,
            treated,
            diff: d,
            overlapping: false,
        }
    }

    fn boot() -> BootstrapConfig {
        BootstrapConfig {
            resamples: 200,
            ..Default::default()
        }
    }

    #[test]
    fn composition_in_window() {
        let mut events = Vec::new();
        window_events(&mut events, "c", T0 - WINDOW, 4);
        let index = EventIndex::new(&events);
        let w = Window::new(T0 - WINDOW, T0).unwrap();
        let v = window_outcome(&index, "c", w, Statistic::CompositionPositive).unwrap();
        assert_eq!(v, Some(40.0));
        let empty = Window::new(T0, T0 + WINDOW).unwrap();
        assert_eq!(window_outcome(&index, "c", empty, Statistic::CompositionPositive).unwrap(), None);
    }

    #[test]
    fn pre_window_excludes_t0() {
        let events = vec![ev(0, "c", T0, Some(Sentiment::Positive))];
        let index = EventIndex::new(&events);
        let pre = Window::new(T0 - WINDOW, T0).unwrap();
        assert!(index.window("c", pre).is_empty());
        let post = Window::new(T0, T0 + WINDOW).unwrap();
        assert_eq!(index.window("c", post).len(), 1);
    }

    #[test]
    fn diff_is_post_minus_pre() {
        let mut events = Vec::new();
        window_events(&mut events, "c", T0 - WINDOW, 1);
        // 14% in the post window: 7 of 50 positive.
        for k in 0..50 {
            let label = if k < 7 { Sentiment::Positive } else { Sentiment::Negative };
            events.push(ev(100 + k, "c", T0 + k as i64 * 3600, Some(label)));
        }
        let index = EventIndex::new(&events);
        let a = AppointmentEvent::new("c", "m", T0);
        let d = event_diff(&a, &index, Statistic::CompositionPositive, WINDOW).unwrap().unwrap();
        assert_abs_diff_eq!(d, 4.0, epsilon = 1e-12);

        let missing = AppointmentEvent::new("c", "m", T0 - WINDOW);
        assert_eq!(event_diff(&missing, &index, Statistic::CompositionPositive, WINDOW).unwrap(), None);
    }

    #[test]
    fn amount_is_reported_in_points() {
        let mut events = Vec::new();
        events.push(ev(0, "c", T0, Some(Sentiment::Positive)));
        for k in 1..4 {
            events.push(ev(k, "c", T0 + 1, None));
        }
        let index = EventIndex::new(&events);
        let w = Window::new(T0, T0 + WINDOW).unwrap();
        assert_eq!(window_outcome(&index, "c", w, Statistic::Amount).unwrap(), Some(25.0));
        assert!(window_outcome(&index, "c", w, Statistic::SizePerDay).is_err());
    }

    #[test]
    fn single_cohort_arithmetic() {
        let diffs = vec![diff(5, true, 3.0, 0), diff(5, false, 1.0, 1)];
        let (est, ci, cohorts, unmatched) =
            did_from_diffs(&diffs, CohortWeighting::Treated, WINDOW, &boot()).unwrap();
        assert_eq!(est, 2.0);
        assert_eq!(ci, Interval::point(2.0));
        assert_eq!(cohorts.len(), 1);
        assert_eq!(unmatched, 0);
    }

    #[test]
    fn cohorts_weighted_by_treated_count() {
        let diffs = vec![
            diff(1, true, 4.0, 0),
            diff(1, true, 4.0, 1),
            diff(1, true, 4.0, 2),
            diff(1, false, 0.0, 3),
            diff(2, true, 10.0, 4),
            diff(2, false, 9.0, 5),
            diff(2, false, 9.0, 6),
            diff(3, true, 100.0, 7),
        ];
        let (est, _, cohorts, unmatched) =
            did_from_diffs(&diffs, CohortWeighting::Treated, WINDOW, &boot()).unwrap();
        assert_abs_diff_eq!(est, (3.0 * 4.0 + 1.0 * 1.0) / 4.0, epsilon = 1e-12);
        assert_eq!(cohorts.len(), 2);
        assert_eq!(unmatched, 1);
        let (pooled, ..) = did_from_diffs(&diffs, CohortWeighting::Pooled, WINDOW, &boot()).unwrap();
        assert_abs_diff_eq!(pooled, (4.0 * 4.0 + 3.0 * 1.0) / 7.0, epsilon = 1e-12);
    }

    #[test]
    fn no_shared_cohort_is_an_error() {
        let diffs = vec![diff(1, true, 1.0, 0), diff(2, false, 1.0, 1)];
        assert!(matches!(
            did_from_diffs(&diffs, CohortWeighting::Treated, WINDOW, &boot()),
            Err(Error::NoOverlappingCohort)
        ));
        let diffs = vec![diff(1, true, 1.0, 0)];
        assert!(matches!(
            did_from_diffs(&diffs, CohortWeighting::Treated, WINDOW, &boot()),
            Err(Error::SingleArm)
        ));
    }

    #[test]
    fn single_arm_attribute() {
        let events = Vec::new();
        let index = EventIndex::new(&events);
        let apps = vec![
            AppointmentEvent::new("a", "x", T0).with("treated", false),
            AppointmentEvent::new("b", "y", T0).with("treated", false),
        ];
        let err = did_estimate(&apps, &index, "treated", Statistic::CompositionPositive, &DidConfig::default())
            .unwrap_err();
        assert_eq!(err.to_string(), "single-arm study");
        let apps = vec![AppointmentEvent::new("a", "x", T0).with("treated", 1.0)];
        assert!(matches!(
            did_estimate(&apps, &index, "treated", Statistic::CompositionPositive, &DidConfig::default()),
            Err(Error::NonBooleanAttribute { .. })
        ));
    }

    #[test]
    fn overlapping_appointments_flagged() {
        let apps = vec![
            AppointmentEvent::new("c", "a", T0),
            AppointmentEvent::new("c", "b", T0 + 10 * DAY),
            AppointmentEvent::new("c", "c", T0 + 100 * DAY),
            AppointmentEvent::new("c", "d", T0 + 100 * DAY),
            AppointmentEvent::new("other", "e", T0 + DAY),
        ];
        assert_eq!(overlapping(&apps, WINDOW), vec![true, true, false, false, false]);
    }

    fn panel(pos_treated: (usize, usize), pos_control: (usize, usize)) -> (Vec<DiscourseEvent>, Vec<AppointmentEvent>) {
        let mut events = Vec::new();
        let mut apps = Vec::new();
        for (i, (treated, (pre, post))) in [(true, pos_treated), (false, pos_control)].into_iter().enumerate() {
            for j in 0..3 {
                let community = format!("c{i}{j}");
                let t0 = T0 + j as i64 * 2 * WINDOW;
                window_events(&mut events, &community, t0 - WINDOW, pre);
                window_events(&mut events, &community, t0, post);
                apps.push(AppointmentEvent::new(&community, "m", t0).with("treated", treated));
            }
        }
        (events, apps)
    }

    #[test]
    fn end_to_end_estimate() {
        let (events, apps) = panel((2, 7), (2, 3));
        let index = EventIndex::new(&events);
        let r = did_estimate(&apps, &index, "treated", Statistic::CompositionPositive, &DidConfig::default()).unwrap();
        assert_abs_diff_eq!(r.estimate, 40.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.naive_treated, 50.0, epsilon = 1e-9);
        assert_eq!((r.n_treated, r.n_control, r.n_dropped), (3, 3, 0));
        assert_eq!(r.cohorts.len(), 3);
        let mut out = Vec::new();
        write_did_results(&mut out, &[r]).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("attribute,statistic,estimate_pp,ci_low,ci_high,n_treated,n_control,n_dropped\n"));
        assert!(text.contains("treated,composition-positive,40"));
    }

    #[test]
    fn input_order_does_not_matter() {
        let (events, apps) = panel((2, 7), (1, 3));
        let index = EventIndex::new(&events);
        let cfg = DidConfig::default();
        let a = did_estimate(&apps, &index, "treated", Statistic::CompositionPositive, &cfg).unwrap();
        let mut rev_events = events.clone();
        rev_events.reverse();
        let mut rev_apps = apps.clone();
        rev_apps.reverse();
        let index = EventIndex::new(&rev_events);
        let b = did_estimate(&rev_apps, &index, "treated", Statistic::CompositionPositive, &cfg).unwrap();
        assert_eq!(a, b);
    }

    fn arb_diffs() -> impl Strategy<Value = Vec<EventDiff>> {
        prop::collection::vec((0i64..4, any::<bool>(), -20.0f64..20.0), 2..30).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (c, t, d))| diff(c, t, d, i))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn constant_shift_leaves_estimate(diffs in arb_diffs(), c in -50.0f64..50.0) {
            let base = did_from_diffs(&diffs, CohortWeighting::Treated, WINDOW, &boot());
            prop_assume!(base.is_ok());
            let (est, ..) = base.unwrap();
            let shifted: Vec<EventDiff> = diffs.iter().cloned().map(|mut d| { d.diff += c; d }).collect();
            let (est2, ..) = did_from_diffs(&shifted, CohortWeighting::Treated, WINDOW, &boot()).unwrap();
            prop_assert!((est - est2).abs() < 1e-9);
        }

        #[test]
        fn swapping_arms_negates_pooled(diffs in arb_diffs()) {
            let base = did_from_diffs(&diffs, CohortWeighting::Pooled, WINDOW, &boot());
            prop_assume!(base.is_ok());
            let (est, ..) = base.unwrap();
            let swapped: Vec<EventDiff> = diffs.iter().cloned().map(|mut d| { d.treated = !d.treated; d }).collect();
            let (est2, ..) = did_from_diffs(&swapped, CohortWeighting::Pooled, WINDOW, &boot()).unwrap();
            prop_assert_eq!(est, -est2);
        }

        #[test]
        fn cohort_trend_cancels(diffs in arb_diffs(), slope in -5.0f64..5.0) {
            let base = did_from_diffs(&diffs, CohortWeighting::Treated, WINDOW, &boot());
            prop_assume!(base.is_ok());
            let (est, ..) = base.unwrap();
            let trended: Vec<EventDiff> = diffs.iter().cloned().map(|mut d| { d.diff += slope * d.cohort as f64; d }).collect();
            let (est2, ..) = did_from_diffs(&trended, CohortWeighting::Treated, WINDOW, &boot()).unwrap();
            prop_assert!((est - est2).abs() < 1e-9);
        }
    }

    #[test]
    fn appointment_json_round_trip() {
        let a = AppointmentEvent::new("c", "m", 5)
            .with("publicly_recruited", true)
            .with("engaged_before_count", 12.0)
            .with("experience_class", "novice");
        let s = serde_json::to_string(&a).unwrap();
        let back: AppointmentEvent = serde_json::from_str(&s).unwrap();
        assert_eq!(back, a);
        assert!(back.flag("publicly_recruited").unwrap());
    }
}
