//! End-to-end study pipelines over ingested data.
//!
//! IPTW studies (`workload`, `removal`, `dose_response`) estimate binned
//! dose-response curves with balance diagnostics. Grouping studies (`size`,
//! `topic`, `health`) summarize community metrics by group. DID studies
//! (`engagement`, `recruiting`) compare appointments by a boolean attribute.
//! `experience` tabulates new moderators' prior experience by team size.

pub mod config;
pub mod engagement;
pub mod recruiting;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::Serialize;

use crate::acquisition::RawPost;
use crate::chart::{Chart, Point, Series};
use crate::did::{
    did_estimate, write_did_results, AppointmentEvent, CohortWeighting, DidConfig, DidResult,
    EventIndex,
};
use crate::discourse::{
    all_community_metrics, eligibility, group_and_summarize, write_group_summaries, CommunityMetrics,
    GroupInput, GroupSpec, GroupSummary, Statistic, DEFAULT_SIZE_EDGES,
};
use crate::error::{Error, Result};
use crate::model::{CovariateTable, DiscourseEvent, ModTenure, Window, DAY};
use crate::propensity::{
    dose_response, run_iptw, write_balance_report, DosePoint, IptwConfig, LogisticConfig,
    TreatmentSpec,
};
use crate::stats::BootstrapConfig;
use crate::timelines::{experience_at, experience_bin, team_size_series, workload, TeamSeries};

pub use config::StudyConfig;
pub use engagement::{annotate_engagement, engagement_attributes, Engagement, EngagementParams};
pub use recruiting::{
    detect_public_recruiting, match_recruitment, RecruitDetector, RecruitSource, RecruitingEvent,
};

pub const STUDIES: [&str; 9] = [
    "workload",
    "removal",
    "dose_response",
    "size",
    "topic",
    "health",
    "engagement",
    "recruiting",
    "experience",
];

pub const TOPIC_PREFIX: &str = "category_";

/// Everything a study may read. Unused inputs may be left empty.
#[derive(Debug, Clone, Default)]
pub struct StudyData {
    pub events: Vec<DiscourseEvent>,
    pub tenures: Vec<ModTenure>,
    pub covariates: Option<CovariateTable>,
    pub appointments: Option<Vec<AppointmentEvent>>,
    pub posts: Vec<RawPost>,
}

impl StudyData {
    /// Puts every input into a canonical order so results do not depend on
    /// record order.
    pub fn canonicalize(&mut self) {
        self.events.sort_by(|a, b| {
            (&a.community, a.created_utc, &a.event_id).cmp(&(&b.community, b.created_utc, &b.event_id))
        });
        self.tenures.sort();
        if let Some(t) = &mut self.covariates {
            t.rows.sort_by(|a, b| a.unit_id.cmp(&b.unit_id));
        }
        if let Some(a) = &mut self.appointments {
            crate::did::sort_appointments(a);
        }
        self.posts.sort_by(|a, b| {
            (a.event.created_utc, &a.event.event_id).cmp(&(b.event.created_utc, &b.event.event_id))
        });
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub csv: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyReport {
    pub study: String,
    pub version: String,
    pub config: Vec<(String, String)>,
    pub summary: Vec<(String, String)>,
    pub warnings: Vec<String>,
    pub tables: Vec<Table>,
    pub charts: Vec<Chart>,
}

impl StudyReport {
    fn new(study: &str) -> Self {
        StudyReport {
            study: study.to_string(),
            version: crate::VERSION.to_string(),
            config: Vec::new(),
            summary: Vec::new(),
            warnings: Vec::new(),
            tables: Vec::new(),
            charts: Vec::new(),
        }
    }

    fn note(&mut self, key: impl Into<String>, value: impl ToString) {
        self.summary.push((key.into(), value.to_string()));
    }

    pub fn summary_value(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn table(&self, name: &str) -> Option<&str> {
        self.tables.iter().find(|t| t.name == name).map(|t| t.csv.as_str())
    }

    /// Text form: `#` header lines with version, config, summary and warnings,
    /// then each table introduced by a `# table: name` line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# modgov {}", self.version);
        let _ = writeln!(out, "# study = {}", self.study);
        for (k, v) in &self.config {
            let _ = writeln!(out, "# config: {k} = {v}");
        }
        for (k, v) in &self.summary {
            let _ = writeln!(out, "# summary: {k} = {v}");
        }
        for w in &self.warnings {
            let _ = writeln!(out, "# warning: {w}");
        }
        for t in &self.tables {
            let _ = writeln!(out, "# table: {}", t.name);
            out.push_str(&t.csv);
        }
        out
    }
}

fn csv_string(write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<String> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn run_study(name: &str, cfg: &StudyConfig, data: &StudyData) -> Result<StudyReport> {
    if !STUDIES.contains(&name) {
        return Err(Error::UnknownStudy(name.to_string()));
    }
    let mut data = data.clone();
    data.canonicalize();
    let seed: u64 = cfg.required("seed")?;
    let mut report = StudyReport::new(name);
    let ctx = Context::new(cfg, &data, seed)?;
    match name {
        "workload" => workload_study(&ctx, &mut report)?,
        "removal" => removal_study(&ctx, &mut report)?,
        "dose_response" => generic_iptw_study(&ctx, &mut report)?,
        "size" | "topic" | "health" => grouping_study(name, &ctx, &mut report)?,
        "engagement" => engagement_study(&ctx, &mut report)?,
        "recruiting" => recruiting_study(&ctx, &mut report)?,
        "experience" => experience_study(&ctx, &mut report)?,
        _ => unreachable!("checked above"),
    }
    report.config = cfg.resolved();
    Ok(report)
}

struct Context<'a> {
    cfg: &'a StudyConfig,
    data: &'a StudyData,
    period: Window,
    bootstrap: BootstrapConfig,
}

impl<'a> Context<'a> {
    fn new(cfg: &'a StudyConfig, data: &'a StudyData, seed: u64) -> Result<Self> {
        let bootstrap = BootstrapConfig {
            resamples: cfg.get("bootstrap", 1000usize)?,
            level: cfg.get("level", 95.0)?,
            seed,
        };
        bootstrap.validate()?;
        // Default period: whole UTC days covering every event.
        let span = || {
            let lo = data.events.iter().map(|e| e.created_utc).min();
            let hi = data.events.iter().map(|e| e.created_utc).max();
            lo.zip(hi)
                .map(|(lo, hi)| (lo.div_euclid(DAY) * DAY, (hi.div_euclid(DAY) + 1) * DAY))
        };
        let start = match cfg.raw("period_start") {
            Some(_) => cfg.required::<i64>("period_start")?,
            None => span().map_or(0, |s| s.0),
        };
        let end = match cfg.raw("period_end") {
            Some(_) => cfg.required::<i64>("period_end")?,
            None => span().map_or(1, |s| s.1 + 1),
        };
        Ok(Context {
            cfg,
            data,
            period: Window::new(start, end)?,
            bootstrap,
        })
    }

    fn covariates(&self) -> Result<&'a CovariateTable> {
        self.data
            .covariates
            .as_ref()
            .ok_or_else(|| Error::MissingInput("covariate table".into()))
    }

    fn meta(&self) -> std::collections::HashSet<String> {
        self.cfg.list("meta_communities", &[]).into_iter().collect()
    }

    /// Metrics of every eligible community, plus exclusion counts by reason.
    fn eligible_metrics(&self) -> (BTreeMap<String, CommunityMetrics>, BTreeMap<String, usize>) {
        let meta = self.meta();
        let mut kept = BTreeMap::new();
        let mut excluded: BTreeMap<String, usize> = BTreeMap::new();
        for m in all_community_metrics(&self.data.events, self.period) {
            let e = eligibility(&m, &meta);
            if e.eligible {
                kept.insert(m.community.clone(), m);
            } else {
                *excluded.entry(e.reason.unwrap_or_default()).or_default() += 1;
            }
        }
        (kept, excluded)
    }

    fn iptw_config(&self) -> Result<IptwConfig> {
        Ok(IptwConfig {
            logistic: LogisticConfig::default(),
            truncate_pct: self.cfg.get("truncate_pct", 99.0)?,
            stabilized: self.cfg.flag("stabilized", false)?,
            bootstrap: self.bootstrap,
        })
    }

    fn did_config(&self) -> Result<DidConfig> {
        let weighting = match self.cfg.get("cohort_weighting", "treated".to_string())?.as_str() {
            "treated" => CohortWeighting::Treated,
            "pooled" => CohortWeighting::Pooled,
            other => return Err(Error::Config(format!("cohort_weighting: unknown value {other:?}"))),
        };
        Ok(DidConfig {
            window: self.cfg.get("window_days", 28i64)? * DAY,
            cohort_period: self.cfg.get("cohort_days", 28i64)? * DAY,
            weighting,
            exclude_overlapping: self.cfg.flag("exclude_overlapping", false)?,
            bootstrap: self.bootstrap,
        })
    }

    fn team_series(&self) -> BTreeMap<&'a str, TeamSeries> {
        let mut by_community: BTreeMap<&str, Vec<ModTenure>> = BTreeMap::new();
        for t in &self.data.tenures {
            by_community.entry(&t.community).or_default().push(t.clone());
        }
        by_community
            .into_iter()
            .map(|(c, ts)| (c, team_size_series(c, &ts)))
            .collect()
    }

    /// Supplied appointments, or every tenure start, restricted to starts at
    /// least `margin` inside the study period.
    fn appointments(&self, margin: i64) -> Vec<AppointmentEvent> {
        let all: Vec<AppointmentEvent> = match &self.data.appointments {
            Some(a) => a.clone(),
            None => {
                let mut derived: Vec<AppointmentEvent> = self
                    .data
                    .tenures
                    .iter()
                    .map(|t| AppointmentEvent::new(&t.community, &t.username, t.start_utc))
                    .collect();
                crate::did::sort_appointments(&mut derived);
                derived.dedup();
                derived
            }
        };
        all.into_iter()
            .filter(|a| self.period.start + margin <= a.t0 && a.t0 + margin <= self.period.end)
            .collect()
    }
}

/// Name of the topic column with the largest value (first on ties).
fn topic_of(names: &[String], values: &[f64], prefix: &str) -> Option<String> {
    names
        .iter()
        .zip(values)
        .filter(|(n, _)| n.starts_with(prefix))
        .fold(None::<(&String, f64)>, |best, (n, &v)| match best {
            Some((_, bv)) if bv >= v => best,
            _ => Some((n, v)),
        })
        .map(|(n, _)| n[prefix.len()..].to_string())
}

fn topic_labels(names: &[String], prefix: &str) -> Vec<String> {
    names
        .iter()
        .filter(|n| n.starts_with(prefix))
        .map(|n| n[prefix.len()..].to_string())
        .collect()
}

fn note_exclusions(report: &mut StudyReport, excluded: &BTreeMap<String, usize>) {
    for (reason, n) in excluded {
        report.note(format!("excluded.{reason}"), n);
    }
}

pub fn dose_chart(title: &str, x_label: &str, statistic: &str, points: &[DosePoint]) -> Chart {
    let series = |name: &str, f: &dyn Fn(&DosePoint) -> (f64, f64, f64)| Series {
        name: name.to_string(),
        points: points
            .iter()
            .map(|p| {
                let (value, low, high) = f(p);
                Point {
                    label: p.label.clone(),
                    value,
                    low,
                    high,
                }
            })
            .collect(),
    };
    Chart {
        title: title.to_string(),
        x_label: x_label.to_string(),
        y_label: statistic.to_string(),
        series: vec![
            series("adjusted", &|p| (p.weighted_mean, p.weighted_ci.low, p.weighted_ci.high)),
            series("unadjusted", &|p| (p.unweighted_mean, p.unweighted_ci.low, p.unweighted_ci.high)),
        ],
    }
}

pub fn group_chart(title: &str, rows: &[GroupSummary]) -> Chart {
    let mut by_stat: BTreeMap<&str, Vec<Point>> = BTreeMap::new();
    for r in rows {
        by_stat.entry(&r.statistic).or_default().push(Point {
            label: r.group.clone(),
            value: r.mean.unwrap_or(f64::NAN),
            low: r.ci_low.unwrap_or(f64::NAN),
            high: r.ci_high.unwrap_or(f64::NAN),
        });
    }
    Chart {
        title: title.to_string(),
        x_label: "group".into(),
        y_label: "mean".into(),
        series: by_stat
            .into_iter()
            .map(|(name, points)| Series {
                name: name.to_string(),
                points,
            })
            .collect(),
    }
}

fn write_dose_table(rows: &[(String, &DosePoint)]) -> Result<String> {
    csv_string(|buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record([
            "statistic",
            "bin",
            "bin_label",
            "n",
            "weighted_mean",
            "weighted_ci_low",
            "weighted_ci_high",
            "unweighted_mean",
            "unweighted_ci_low",
            "unweighted_ci_high",
        ])?;
        for (stat, p) in rows {
            w.write_record([
                stat.clone(),
                p.bin.to_string(),
                p.label.clone(),
                p.n.to_string(),
                p.weighted_mean.to_string(),
                p.weighted_ci.low.to_string(),
                p.weighted_ci.high.to_string(),
                p.unweighted_mean.to_string(),
                p.unweighted_ci.low.to_string(),
                p.unweighted_ci.high.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<dose-response>", e))?;
        Ok(())
    })
}

/// One IPTW analysis with one or more outcomes sharing the same weights.
struct IptwInput<'a> {
    subset: &'a str,
    table: CovariateTable,
    treatment: Vec<f64>,
    outcomes: Vec<(String, Vec<f64>)>,
    spec: TreatmentSpec,
}

fn iptw_section(ctx: &Context<'_>, report: &mut StudyReport, input: IptwInput<'_>) -> Result<()> {
    let icfg = ctx.iptw_config()?;
    let related: f64 = ctx.cfg.get("related_threshold", 0.1)?;
    let (first_name, first) = input
        .outcomes
        .first()
        .ok_or_else(|| Error::InvalidParameter("no outcome".into()))?;
    let analysis = run_iptw(&input.table, &input.treatment, first, &input.spec, &icfg)?;

    let mut rows: Vec<(String, DosePoint)> = analysis
        .dose_response
        .iter()
        .map(|p| (first_name.clone(), p.clone()))
        .collect();
    for (k, (name, y)) in input.outcomes.iter().enumerate().skip(1) {
        let pts = dose_response(
            y,
            &analysis.bins,
            &analysis.weights.weights,
            &analysis.bin_labels,
            &icfg.bootstrap.derived(1000 + k as u64),
        )?;
        rows.extend(pts.into_iter().map(|p| (name.clone(), p)));
    }

    let s = input.subset;
    let imbalanced = analysis.balance.imbalanced(related);
    report.note(format!("{s}.n_units"), input.table.len());
    report.note(
        format!("{s}.status"),
        if imbalanced.is_empty() { "balanced" } else { "imbalanced" },
    );
    report.note(format!("{s}.max_abs_smd"), analysis.balance.max_abs_smd());
    report.note(format!("{s}.n_weights_capped"), analysis.weights.n_capped);
    for e in imbalanced {
        report.warnings.push(format!(
            "{s}: covariate {} in bin {} has SMD {:.3}",
            e.covariate, e.bin_label, e.smd
        ));
    }
    for (b, m) in analysis.propensities.models.iter().enumerate() {
        for w in &m.warnings {
            report.warnings.push(format!("{s}: bin {}: {w}", analysis.bin_labels[b]));
        }
    }

    for (name, _) in &input.outcomes {
        let pts: Vec<DosePoint> = rows
            .iter()
            .filter(|(n, _)| n == name)
            .map(|(_, p)| p.clone())
            .collect();
        report.charts.push(dose_chart(
            &format!("{} {s}: {name}", report.study),
            &input.spec.name,
            name,
            &pts,
        ));
    }
    let refs: Vec<(String, &DosePoint)> = rows.iter().map(|(n, p)| (n.clone(), p)).collect();
    report.tables.push(Table {
        name: format!("dose_response:{s}"),
        csv: write_dose_table(&refs)?,
    });
    report.tables.push(Table {
        name: format!("balance:{s}"),
        csv: csv_string(|b| write_balance_report(b, &analysis.balance))?,
    });
    Ok(())
}

/// Selects configured covariates (default: all columns except `exclude`).
fn select_covariates(ctx: &Context<'_>, table: &CovariateTable, exclude: &[&str]) -> Result<CovariateTable> {
    let default: Vec<&str> = table
        .names
        .iter()
        .map(String::as_str)
        .filter(|n| !exclude.contains(n))
        .collect();
    let names = ctx.cfg.list("covariates", &default);
    table.select(&names)
}

fn workload_study(ctx: &Context<'_>, report: &mut StudyReport) -> Result<()> {
    let table = ctx.covariates()?;
    let (metrics, mut excluded) = ctx.eligible_metrics();
    let teams = ctx.team_series();
    let stats = ctx.cfg.statistics(&[Statistic::CompositionPositive, Statistic::CompositionNegative])?;
    let edges = ctx.cfg.edges("bins", &[5.0, 10.0, 100.0])?;
    let selected = select_covariates(ctx, table, &[])?;

    let mut by_community: HashMap<&str, Vec<&DiscourseEvent>> = HashMap::new();
    for e in &ctx.data.events {
        by_community.entry(&e.community).or_default().push(e);
    }
    let mut keep = Vec::new();
    let mut treatment = Vec::new();
    for (i, row) in selected.rows.iter().enumerate() {
        let Some(_) = metrics.get(&row.unit_id) else {
            *excluded.entry("ineligible or no discourse".into()).or_default() += 1;
            continue;
        };
        let Some(team) = teams.get(row.unit_id.as_str()) else {
            *excluded.entry("no moderators".into()).or_default() += 1;
            continue;
        };
        let events = by_community.get(row.unit_id.as_str()).map(Vec::as_slice).unwrap_or(&[]);
        match workload(events.iter().copied(), team, ctx.period) {
            Ok(w) => {
                keep.push(i);
                treatment.push(w);
            }
            Err(Error::NoModerators) => *excluded.entry("no moderators".into()).or_default() += 1,
            Err(e) => return Err(e),
        }
    }
    let kept: BTreeSet<usize> = keep.iter().copied().collect();
    let table = selected.filter_rows(|i, _| kept.contains(&i));
    let outcomes = stats
        .iter()
        .map(|s| {
            let y = table.rows.iter().map(|r| s.of(&metrics[&r.unit_id])).collect();
            (s.name().to_string(), y)
        })
        .collect();
    note_exclusions(report, &excluded);
    iptw_section(
        ctx,
        report,
        IptwInput {
            subset: "all",
            table,
            treatment,
            outcomes,
            spec: TreatmentSpec {
                name: "posts+comments per mod per day".into(),
                bins: edges,
            },
        },
    )
}

fn removal_study(ctx: &Context<'_>, report: &mut StudyReport) -> Result<()> {
    let table = ctx.covariates()?;
    let (metrics, mut excluded) = ctx.eligible_metrics();
    let stats = ctx.cfg.statistics(&[Statistic::CompositionNegative])?;
    let edges = ctx.cfg.edges("bins", &[1.0, 2.0, 3.0])?;
    let prefix = ctx.cfg.get("topic_prefix", TOPIC_PREFIX.to_string())?;
    let selected = select_covariates(ctx, table, &["frac_removed"])?;

    let topics: Vec<Option<String>> = table
        .rows
        .iter()
        .map(|r| topic_of(&table.names, &r.values, &prefix))
        .collect();
    let in_scope: Vec<bool> = selected
        .rows
        .iter()
        .map(|r| metrics.contains_key(&r.unit_id))
        .collect();
    *excluded.entry("ineligible or no discourse".into()).or_default() +=
        in_scope.iter().filter(|&&k| !k).count();
    note_exclusions(report, &excluded);

    let build = |filter: &dyn Fn(usize) -> bool, drop_topics: bool| -> Result<IptwInput<'static>> {
        let t = selected.filter_rows(|i, _| in_scope[i] && filter(i));
        let t = if drop_topics {
            let names: Vec<String> = t.names.iter().filter(|n| !n.starts_with(&prefix)).cloned().collect();
            t.select(&names)?
        } else {
            t
        };
        let treatment = t
            .rows
            .iter()
            .map(|r| 100.0 * metrics[&r.unit_id].frac_removed)
            .collect();
        let outcomes = stats
            .iter()
            .map(|s| (s.name().to_string(), t.rows.iter().map(|r| s.of(&metrics[&r.unit_id])).collect()))
            .collect();
        Ok(IptwInput {
            subset: "",
            table: t,
            treatment,
            outcomes,
            spec: TreatmentSpec {
                name: "removed content (% of items)".into(),
                bins: edges.clone(),
            },
        })
    };

    let pooled = build(&|_| true, false)?;
    iptw_section(ctx, report, IptwInput { subset: "pooled", ..pooled })?;
    for topic in topic_labels(&table.names, &prefix) {
        let input = build(&|i| topics[i].as_deref() == Some(topic.as_str()), true)?;
        let mut scratch = StudyReport::new(&report.study);
        match iptw_section(ctx, &mut scratch, IptwInput { subset: &topic, ..input }) {
            Ok(()) => {
                report.summary.extend(scratch.summary);
                report.warnings.extend(scratch.warnings);
                report.tables.extend(scratch.tables);
                report.charts.extend(scratch.charts);
            }
            Err(e) => report.note(format!("{topic}.status"), format!("skipped: {e}")),
        }
    }
    Ok(())
}

fn generic_iptw_study(ctx: &Context<'_>, report: &mut StudyReport) -> Result<()> {
    let table = ctx.covariates()?;
    let treatment_col: String = ctx.cfg.required("treatment")?;
    let outcome_col: String = ctx.cfg.required("outcome")?;
    let edges = match ctx.cfg.raw("bins") {
        Some(_) => ctx.cfg.edges("bins", &[])?,
        None => return Err(Error::Config("missing required key \"bins\"".into())),
    };
    let treatment = table.column(&treatment_col)?;
    let outcome = table.column(&outcome_col)?;
    let selected = select_covariates(ctx, table, &[&treatment_col, &outcome_col])?;
    iptw_section(
        ctx,
        report,
        IptwInput {
            subset: "all",
            table: selected,
            treatment,
            outcomes: vec![(outcome_col.clone(), outcome)],
            spec: TreatmentSpec {
                name: treatment_col,
                bins: edges,
            },
        },
    )
}

fn grouping_study(name: &str, ctx: &Context<'_>, report: &mut StudyReport) -> Result<()> {
    let (metrics, mut excluded) = ctx.eligible_metrics();
    let stats = ctx.cfg.statistics(&[
        Statistic::Amount,
        Statistic::CompositionPositive,
        Statistic::CompositionNegative,
    ])?;

    let (communities, grouping) = match name {
        "size" => {
            let edges = ctx.cfg.edges("size_edges", &DEFAULT_SIZE_EDGES)?;
            let communities: Vec<&CommunityMetrics> = metrics.values().collect();
            let sizes: Vec<f64> = communities.iter().map(|m| m.size_per_day).collect();
            let grouping = GroupSpec::size_bins(edges).assign(GroupInput::Numeric(&sizes))?;
            (communities, grouping)
        }
        "topic" => {
            let table = ctx.covariates()?;
            let prefix = ctx.cfg.get("topic_prefix", TOPIC_PREFIX.to_string())?;
            let labels = topic_labels(&table.names, &prefix);
            if labels.is_empty() {
                return Err(Error::UnknownCovariate(format!("{prefix}*")));
            }
            let mut communities = Vec::new();
            let mut cats = Vec::new();
            for (c, m) in &metrics {
                match table.row(c).and_then(|r| topic_of(&table.names, &r.values, &prefix)) {
                    Some(t) => {
                        communities.push(m);
                        cats.push(t);
                    }
                    None => *excluded.entry("no topic".into()).or_default() += 1,
                }
            }
            let grouping = GroupSpec::topics(labels).assign(GroupInput::Categorical(&cats))?;
            (communities, grouping)
        }
        _ => {
            let table = ctx.covariates()?;
            let column: String = ctx.cfg.required("health_column")?;
            let j = table.index_of(&column)?;
            let mut communities = Vec::new();
            let mut scores = Vec::new();
            for (c, m) in &metrics {
                match table.row(c) {
                    Some(r) => {
                        communities.push(m);
                        scores.push(r.values[j]);
                    }
                    None => *excluded.entry("not surveyed".into()).or_default() += 1,
                }
            }
            let grouping = GroupSpec::health_quartiles().assign(GroupInput::Numeric(&scores))?;
            (communities, grouping)
        }
    };
    if communities.is_empty() {
        return Err(Error::EmptyInput);
    }
    note_exclusions(report, &excluded);
    report.note("n_communities", communities.len());

    let mut rows = Vec::new();
    for (k, s) in stats.iter().enumerate() {
        let values: Vec<f64> = communities.iter().map(|m| s.of(m)).collect();
        rows.extend(group_and_summarize(
            &grouping,
            &values,
            None,
            s.name(),
            &ctx.bootstrap.derived(k as u64),
        )?);
    }
    report.charts.push(group_chart(&format!("{name} groups"), &rows));
    report.tables.push(Table {
        name: "groups".into(),
        csv: csv_string(|b| write_group_summaries(b, &rows))?,
    });
    Ok(())
}

fn did_rows(
    ctx: &Context<'_>,
    appointments: &[AppointmentEvent],
    attributes: &[String],
    stats: &[Statistic],
    suffix: &str,
) -> Result<Vec<DidResult>> {
    let index = EventIndex::new(&ctx.data.events);
    let dcfg = ctx.did_config()?;
    let mut out = Vec::new();
    for (a, attr) in attributes.iter().enumerate() {
        for (k, s) in stats.iter().enumerate() {
            let cfg = DidConfig {
                bootstrap: dcfg.bootstrap.derived((a * 100 + k) as u64),
                ..dcfg
            };
            let mut r = did_estimate(appointments, &index, attr, *s, &cfg)?;
            r.attribute.push_str(suffix);
            out.push(r);
        }
    }
    Ok(out)
}

fn push_did(report: &mut StudyReport, results: &[DidResult]) -> Result<()> {
    for r in results {
        let key = format!("{}.{}", r.attribute, r.statistic);
        report.note(format!("{key}.n_unmatched"), r.n_unmatched);
        report.note(format!("{key}.n_overlapping"), r.n_overlapping);
        report.note(format!("{key}.naive_treated_pp"), r.naive_treated);
    }
    let mut by_stat: BTreeMap<&str, Vec<Point>> = BTreeMap::new();
    for r in results {
        by_stat.entry(&r.statistic).or_default().push(Point {
            label: r.attribute.clone(),
            value: r.estimate,
            low: r.ci.low,
            high: r.ci.high,
        });
    }
    report.charts.push(Chart {
        title: format!("{} DID estimates", report.study),
        x_label: "attribute".into(),
        y_label: "percentage points".into(),
        series: by_stat
            .into_iter()
            .map(|(name, points)| Series {
                name: name.to_string(),
                points,
            })
            .collect(),
    });
    report.tables.push(Table {
        name: "did".into(),
        csv: csv_string(|b| write_did_results(b, results))?,
    });
    Ok(())
}

fn engagement_study(ctx: &Context<'_>, report: &mut StudyReport) -> Result<()> {
    let dcfg = ctx.did_config()?;
    let params = EngagementParams {
        w_pre: ctx.cfg.get("w_pre_days", 84i64)? * DAY,
        w_during: ctx.cfg.get("w_during_days", 84i64)? * DAY,
        k: ctx.cfg.get("engaged_k", 5usize)?,
    };
    let stats = ctx.cfg.statistics(&[Statistic::CompositionPositive, Statistic::CompositionNegative])?;
    let mut apps = ctx.appointments(dcfg.window);
    if apps.is_empty() {
        return Err(Error::EmptyInput);
    }
    annotate_engagement(&mut apps, &ctx.data.events, &params);
    report.note("n_appointments", apps.len());
    let attributes: Vec<String> = engagement::ENGAGEMENT_ATTRIBUTES.iter().map(|s| s.to_string()).collect();
    let mut results = did_rows(ctx, &apps, &attributes, &stats, "")?;

    if ctx.cfg.raw("team_size_strata").is_some() {
        let edges = ctx.cfg.edges("team_size_strata", &[])?;
        let teams = ctx.team_series();
        for (b, label) in edges.labels().iter().enumerate() {
            let stratum: Vec<AppointmentEvent> = apps
                .iter()
                .filter(|a| {
                    let size = teams.get(a.community.as_str()).map_or(0, |t| t.size_at(a.t0 - 1));
                    edges.assign(size as f64).ok() == Some(b)
                })
                .cloned()
                .collect();
            match did_rows(ctx, &stratum, &attributes, &stats, &format!("[team {label}]")) {
                Ok(r) => results.extend(r),
                Err(e) => report.note(format!("stratum {label}"), format!("skipped: {e}")),
            }
        }
    }
    push_did(report, &results)
}

fn recruiting_study(ctx: &Context<'_>, report: &mut StudyReport) -> Result<()> {
    let dcfg = ctx.did_config()?;
    let patterns = ctx.cfg.repeated("recruit_pattern", &recruiting::DEFAULT_PATTERNS);
    let external = ctx.cfg.list("external_communities", &recruiting::DEFAULT_EXTERNAL);
    let window = ctx.cfg.get("recruit_window_days", 56i64)? * DAY;
    let stats = ctx.cfg.statistics(&[
        Statistic::CompositionPositive,
        Statistic::CompositionNeutral,
        Statistic::CompositionNegative,
    ])?;
    let detector = RecruitDetector::new(&patterns, &external)?;
    let found = detector.detect(&ctx.data.posts, &ctx.data.tenures);

    let mut apps = ctx.appointments(dcfg.window);
    if apps.is_empty() {
        return Err(Error::EmptyInput);
    }
    match_recruitment(&mut apps, &found, window);
    report.note("n_recruiting_events", found.len());
    report.note("n_appointments", apps.len());

    // Community size by recruiting behaviour.
    let (metrics, _) = ctx.eligible_metrics();
    let mut sources: BTreeMap<&str, BTreeSet<RecruitSource>> = BTreeMap::new();
    for r in &found {
        sources.entry(&r.community).or_default().insert(r.source);
    }
    let appointed: BTreeSet<&str> = apps.iter().map(|a| a.community.as_str()).collect();
    let mean_size = |pred: &dyn Fn(&str) -> bool| -> Option<f64> {
        let v: Vec<f64> = metrics
            .values()
            .filter(|m| pred(&m.community))
            .map(|m| m.size_per_day)
            .collect();
        crate::stats::mean(&v)
    };
    let private = mean_size(&|c| appointed.contains(c) && !sources.contains_key(c));
    let public = mean_size(&|c| sources.contains_key(c));
    let both = mean_size(&|c| sources.get(c).is_some_and(|s| s.len() == 2));
    if let (Some(p), Some(q)) = (public, private) {
        report.note("size_ratio_public_vs_private", p / q);
    }
    if let (Some(p), Some(q)) = (both, private) {
        report.note("size_ratio_both_vs_private", p / q);
    }

    report.tables.push(Table {
        name: "recruiting_events".into(),
        csv: csv_string(|buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["community", "t", "source", "pattern", "event_id"])?;
            for r in &found {
                w.write_record([
                    r.community.clone(),
                    r.t.to_string(),
                    r.source.as_str().to_string(),
                    r.pattern.to_string(),
                    r.event_id.clone(),
                ])?;
            }
            w.flush().map_err(|e| Error::io("<recruiting>", e))?;
            Ok(())
        })?,
    });
    let results = did_rows(ctx, &apps, &["publicly_recruited".to_string()], &stats, "")?;
    push_did(report, &results)
}

/// Class labels for `experience_bin` with the given year cuts.
fn experience_labels(cuts: &[f64]) -> Vec<String> {
    let mut labels = vec!["novice".to_string()];
    for (i, c) in cuts.iter().enumerate() {
        labels.push(if i == 0 {
            format!("<{c}y")
        } else {
            format!("{}-{c}y", cuts[i - 1])
        });
    }
    if let Some(last) = cuts.last() {
        labels.push(format!(">={last}y"));
    } else {
        labels.push("experienced".into());
    }
    labels
}

fn experience_study(ctx: &Context<'_>, report: &mut StudyReport) -> Result<()> {
    let edges = ctx.cfg.edges("team_size_edges", &[10.0, 100.0])?;
    let cuts: Vec<f64> = ctx
        .cfg
        .list("experience_cuts", &["2"])
        .iter()
        .map(|c| c.parse::<f64>().map_err(|_| Error::Config(format!("experience_cuts: bad value {c:?}"))))
        .collect::<Result<_>>()?;
    if cuts.windows(2).any(|w| w[0] >= w[1]) || cuts.iter().any(|c| *c <= 0.0) {
        return Err(Error::Config("experience_cuts must be positive and increasing".into()));
    }
    let labels = experience_labels(&cuts);
    let apps = ctx.appointments(0);
    if apps.is_empty() {
        return Err(Error::EmptyInput);
    }
    let teams = ctx.team_series();
    let mut sizes = Vec::with_capacity(apps.len());
    let mut classes = Vec::with_capacity(apps.len());
    for a in &apps {
        sizes.push(teams.get(a.community.as_str()).map_or(0, |t| t.size_at(a.t0 - 1)) as f64);
        let exp = experience_at(&a.username, &ctx.data.tenures, a.t0);
        classes.push(experience_bin(exp.seconds, &cuts));
    }
    let grouping = GroupSpec::size_bins(edges).assign(GroupInput::Numeric(&sizes))?;
    let mut rows = Vec::new();
    for (k, label) in labels.iter().enumerate() {
        let indicator: Vec<f64> = classes.iter().map(|&c| (c == k) as u8 as f64).collect();
        rows.extend(group_and_summarize(
            &grouping,
            &indicator,
            None,
            &format!("frac-{label}"),
            &ctx.bootstrap.derived(k as u64),
        )?);
    }
    report.note("n_appointments", apps.len());
    report.charts.push(group_chart("experience by team size", &rows));
    report.tables.push(Table {
        name: "experience".into(),
        csv: csv_string(|b| write_group_summaries(b, &rows))?,
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topic_argmax() {
        let names: Vec<String> = ["x", "category_news", "category_hobby"].map(String::from).to_vec();
        assert_eq!(topic_of(&names, &[9.0, 0.2, 0.7], "category_").as_deref(), Some("hobby"));
        assert_eq!(topic_of(&names, &[9.0, 0.5, 0.5], "category_").as_deref(), Some("news"));
        assert_eq!(topic_of(&names[..1], &[9.0], "category_"), None);
        assert_eq!(topic_labels(&names, "category_"), vec!["news", "hobby"]);
    }

    #[test]
    fn experience_class_labels() {
        assert_eq!(experience_labels(&[2.0]), vec!["novice", "<2y", ">=2y"]);
        assert_eq!(experience_labels(&[1.0, 5.0]), vec!["novice", "<1y", "1-5y", ">=5y"]);
    }

    #[test]
    fn unknown_study() {
        let cfg = StudyConfig::parse("seed = 1").unwrap();
        assert!(matches!(
            run_study("nope", &cfg, &StudyData::default()),
            Err(Error::UnknownStudy(_))
        ));
    }

    #[test]
    fn seed_required() {
        let cfg = StudyConfig::parse("").unwrap();
        assert!(matches!(run_study("size", &cfg, &StudyData::default()), Err(Error::Config(_))));
    }
}
