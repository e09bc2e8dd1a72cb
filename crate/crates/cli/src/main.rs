mod output;
mod report;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use modgov::acquisition::{
    dedup_snapshots, default_botlist, filter_bots_snapshots, filter_bots_tenures, read_appointments,
    read_botlist, read_covariates, read_events, read_raw_posts, read_snapshots, read_tenures,
    snapshots_by_community, write_appointments, write_covariates, write_events, write_snapshots,
    write_tenures,
};
use modgov::chart::render_svg;
use modgov::did::{
    did_estimate, sort_appointments, write_cohorts, write_did_results, CohortWeighting, DidConfig,
    EventIndex,
};
use modgov::discourse::{all_community_metrics, eligibility, Statistic};
use modgov::model::{CovariateTable, Sentiment, Window, DAY};
use modgov::propensity::{
    run_iptw, write_balance_report, write_dose_response, IptwConfig, LogisticConfig, TreatmentSpec,
};
use modgov::stats::BootstrapConfig;
use modgov::studies::{dose_chart, run_study, StudyConfig, StudyData};
use modgov::synth::{gen_confounded_crosssection, gen_did_panel, materialize_workload, SynthSpec, PANEL_START};
use modgov::timelines::merge_snapshots;
use serde::Serialize;

use output::{slug, Run};

#[derive(Parser, Debug)]
#[command(name = "modgov", version, about = "Moderator timelines, mod-discourse metrics and effect estimation")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Global {
    /// Seed for every stochastic step (bootstrap, synthesis).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Bootstrap resamples.
    #[arg(long, global = true)]
    bootstrap: Option<usize>,
    /// Confidence level in percent.
    #[arg(long, global = true)]
    level: Option<f64>,
    /// Weight truncation percentile; 100 disables truncation.
    #[arg(long = "truncate-pct", global = true)]
    truncate_pct: Option<f64>,
    /// Worker threads. Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate and normalize an event or snapshot file.
    Ingest(IngestArgs),
    /// Merge roster snapshots into moderator tenures.
    Timelines(TimelinesArgs),
    /// Per-community discourse metrics and eligibility.
    Metrics(MetricsArgs),
    /// Binned IPTW dose-response with a balance report.
    Iptw(IptwArgs),
    /// Cohort-aligned difference-in-differences on appointments.
    Did(DidArgs),
    /// Run a configured study end to end.
    Study(StudyArgs),
    /// Generate synthetic data with known ground truth.
    Synth(SynthArgs),
    /// Render charts and a summary from a study report.
    Report(ReportArgs),
}

#[derive(Args, Debug, Serialize)]
#[command(group(ArgGroup::new("input").required(true).args(["events", "snapshots"])))]
struct IngestArgs {
    #[arg(long)]
    events: Option<PathBuf>,
    #[arg(long)]
    snapshots: Option<PathBuf>,
    /// Bot accounts to drop from rosters (default: automoderator).
    #[arg(long, requires = "snapshots")]
    botlist: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct TimelinesArgs {
    #[arg(long)]
    snapshots: PathBuf,
    #[arg(long)]
    botlist: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct MetricsArgs {
    #[arg(long)]
    events: PathBuf,
    /// Period start (unix seconds); default is the first event's day.
    #[arg(long)]
    start: Option<i64>,
    /// Period end (unix seconds, exclusive); default is the day after the last event.
    #[arg(long)]
    end: Option<i64>,
    /// Comma-separated communities about moderation in general.
    #[arg(long, value_delimiter = ',')]
    meta: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct IptwArgs {
    #[arg(long)]
    covariates: PathBuf,
    /// Column holding the continuous treatment.
    #[arg(long)]
    treatment: String,
    /// Column holding the outcome.
    #[arg(long)]
    outcome: String,
    /// Treatment bin edges, e.g. `5,10,100`; an empty value means one bin.
    #[arg(long, allow_hyphen_values = true)]
    bins: String,
    /// Covariates for the propensity model (default: all other columns).
    #[arg(long, value_delimiter = ',')]
    use_covariates: Vec<String>,
    #[arg(long)]
    stabilized: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum Weighting {
    Treated,
    Pooled,
}

#[derive(Args, Debug, Serialize)]
struct DidArgs {
    #[arg(long)]
    events: PathBuf,
    #[arg(long)]
    appointments: PathBuf,
    /// Boolean appointment attribute that defines the treated arm.
    #[arg(long)]
    attribute: String,
    #[arg(long, default_value = "composition-positive", value_delimiter = ',')]
    statistic: Vec<String>,
    #[arg(long, default_value_t = 28)]
    window_days: i64,
    #[arg(long, default_value_t = 28)]
    cohort_days: i64,
    #[arg(long, value_enum, default_value_t = Weighting::Treated)]
    weighting: Weighting,
    #[arg(long)]
    exclude_overlapping: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct StudyArgs {
    /// Study name; may instead come from `study = ...` in the config.
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    events: Option<PathBuf>,
    #[arg(long)]
    tenures: Option<PathBuf>,
    #[arg(long)]
    covariates: Option<PathBuf>,
    #[arg(long)]
    appointments: Option<PathBuf>,
    /// Posts with bodies, for recruiting detection.
    #[arg(long)]
    posts: Option<PathBuf>,
    /// Report file; charts are written alongside it.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    no_charts: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum SynthKind {
    /// Confounded cross-section: covariates.csv with x, treatment, outcome.
    Crosssection,
    /// Cross-section rendered as events, tenures and covariates.
    Workload,
    /// Appointment panel: events and appointments with a `treated` flag.
    Panel,
}

#[derive(Args, Debug, Serialize)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: SynthKind,
    #[arg(long)]
    n: Option<usize>,
    /// Confounder strength on the outcome.
    #[arg(long)]
    gamma: Option<f64>,
    /// True effect: one value, or one per bin for cross-sections.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    effect: Vec<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Background trend per 28 days (panels).
    #[arg(long, allow_hyphen_values = true)]
    trend: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    bin_edges: Vec<f64>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct ReportArgs {
    /// A report written by `study`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Data(e.into())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(jobs) = cli.global.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("warning: {e}");
        }
    }
    match dispatch(&cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: &Cli, argv: Vec<String>) -> CliResult<()> {
    let g = &cli.global;
    let mut run = Run::new(argv, g.seed);
    match &cli.command {
        Command::Ingest(a) => ingest(&mut run, a),
        Command::Timelines(a) => timelines(&mut run, a),
        Command::Metrics(a) => metrics(&mut run, a),
        Command::Iptw(a) => iptw(&mut run, g, a),
        Command::Did(a) => did(&mut run, g, a),
        Command::Study(a) => study(&mut run, g, a),
        Command::Synth(a) => synth(&mut run, a),
        Command::Report(a) => report_cmd(&mut run, a),
    }
}

fn require_seed(g: &Global) -> CliResult<u64> {
    g.seed
        .ok_or_else(|| Failure::Usage("--seed is required for this command".into()))
}

fn bootstrap_config(g: &Global, seed: u64) -> CliResult<BootstrapConfig> {
    let cfg = BootstrapConfig {
        resamples: g.bootstrap.unwrap_or(1000),
        level: g.level.unwrap_or(95.0),
        seed,
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

fn config_json(args: &impl Serialize, g: &Global) -> serde_json::Value {
    serde_json::json!({ "global": g, "args": args })
}

fn to_bytes(write: impl FnOnce(&mut Vec<u8>) -> modgov::Result<()>) -> anyhow::Result<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn ingest(run: &mut Run, a: &IngestArgs) -> CliResult<()> {
    run.config = serde_json::to_value(a)?;
    if let Some(path) = &a.events {
        let mut events = read_events(run.input(path)?)?;
        events.sort_by(|x, y| {
            (&x.community, x.created_utc, &x.event_id).cmp(&(&y.community, y.created_utc, &y.event_id))
        });
        let before = events.len();
        events.dedup_by(|x, y| x.event_id == y.event_id && x.community == y.community);
        eprintln!("{} events ({} duplicates dropped)", events.len(), before - events.len());
        run.emit(&a.out, &to_bytes(|b| write_events(b, &events))?)?;
    } else if let Some(path) = &a.snapshots {
        let mut snaps = read_snapshots(run.input(path)?)?;
        let dupes = dedup_snapshots(&mut snaps);
        let bots = botlist(run, a.botlist.as_deref())?;
        let removed = filter_bots_snapshots(&mut snaps, &bots);
        snaps.sort_by(|x, y| (&x.community, x.captured_utc).cmp(&(&y.community, y.captured_utc)));
        eprintln!(
            "{} snapshots ({dupes} duplicate captures dropped, {removed} bot roster entries removed)",
            snaps.len()
        );
        run.emit(&a.out, &to_bytes(|b| write_snapshots(b, &snaps))?)?;
    }
    Ok(())
}

fn botlist(run: &mut Run, path: Option<&Path>) -> anyhow::Result<std::collections::HashSet<String>> {
    Ok(match path {
        Some(p) => read_botlist(run.input(p)?)?,
        None => default_botlist(),
    })
}

fn timelines(run: &mut Run, a: &TimelinesArgs) -> CliResult<()> {
    run.config = serde_json::to_value(a)?;
    let mut snaps = read_snapshots(run.input(&a.snapshots)?)?;
    dedup_snapshots(&mut snaps);
    let bots = botlist(run, a.botlist.as_deref())?;
    filter_bots_snapshots(&mut snaps, &bots);
    let mut tenures = Vec::new();
    for (community, group) in snapshots_by_community(snaps) {
        tenures.extend(merge_snapshots(&group).with_context(|| format!("community {community}"))?);
    }
    filter_bots_tenures(&mut tenures, &bots);
    tenures.sort();
    eprintln!("{} tenures", tenures.len());
    run.emit(&a.out, &to_bytes(|b| write_tenures(b, &tenures))?)?;
    Ok(())
}

fn default_period(events: &[modgov::model::DiscourseEvent], start: Option<i64>, end: Option<i64>) -> CliResult<Window> {
    let lo = events.iter().map(|e| e.created_utc).min().unwrap_or(0);
    let hi = events.iter().map(|e| e.created_utc).max().unwrap_or(0);
    let start = start.unwrap_or(lo.div_euclid(DAY) * DAY);
    let end = end.unwrap_or((hi.div_euclid(DAY) + 1) * DAY);
    Window::new(start, end).map_err(|e| Failure::Usage(e.to_string()))
}

fn metrics(run: &mut Run, a: &MetricsArgs) -> CliResult<()> {
    run.config = serde_json::to_value(a)?;
    let events = read_events(run.input(&a.events)?)?;
    let period = default_period(&events, a.start, a.end)?;
    let meta = a.meta.iter().cloned().collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "community",
        "n_items",
        "n_mod_discourse",
        "amount",
        "composition_positive",
        "composition_neutral",
        "composition_negative",
        "frac_removed",
        "frac_deleted",
        "size_per_day",
        "eligible",
        "exclusion_reason",
    ])?;
    for m in all_community_metrics(&events, period) {
        let e = eligibility(&m, &meta);
        let comp = |s: Sentiment| m.composition.get(&s).copied().unwrap_or(f64::NAN).to_string();
        w.write_record([
            m.community.clone(),
            m.n_items.to_string(),
            m.n_mod_discourse.to_string(),
            m.amount.to_string(),
            comp(Sentiment::Positive),
            comp(Sentiment::Neutral),
            comp(Sentiment::Negative),
            m.frac_removed.to_string(),
            m.frac_deleted.to_string(),
            m.size_per_day.to_string(),
            e.eligible.to_string(),
            e.reason.unwrap_or_default(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow!("{e}"))?;
    run.emit(&a.out, &bytes)?;
    Ok(())
}

fn iptw(run: &mut Run, g: &Global, a: &IptwArgs) -> CliResult<()> {
    let seed = require_seed(g)?;
    let bins = modgov::bins::parse_edges(&a.bins).map_err(|e| Failure::Usage(format!("--bins: {e}")))?;
    run.config = config_json(a, g);
    let table = read_covariates(run.input(&a.covariates)?)?;
    let treatment = table.column(&a.treatment)?;
    let outcome = table.column(&a.outcome)?;
    let names: Vec<String> = if a.use_covariates.is_empty() {
        table
            .names
            .iter()
            .filter(|n| **n != a.treatment && **n != a.outcome)
            .cloned()
            .collect()
    } else {
        a.use_covariates.clone()
    };
    let x: CovariateTable = table.select(&names)?;
    let cfg = IptwConfig {
        logistic: LogisticConfig::default(),
        truncate_pct: g.truncate_pct.unwrap_or(99.0),
        stabilized: a.stabilized,
        bootstrap: bootstrap_config(g, seed)?,
    };
    let spec = TreatmentSpec {
        name: a.treatment.clone(),
        bins,
    };
    let analysis = run_iptw(&x, &treatment, &outcome, &spec, &cfg)?;

    let imbalanced = analysis.balance.imbalanced(0.1);
    eprintln!(
        "{} units, {} bins, max |SMD| {:.3}: {}",
        x.len(),
        analysis.bin_labels.len(),
        analysis.balance.max_abs_smd(),
        if imbalanced.is_empty() { "balanced" } else { "imbalanced" }
    );
    let dir = &a.out_dir;
    run.emit(&dir.join("dose_response.csv"), &to_bytes(|b| write_dose_response(b, &analysis.dose_response))?)?;
    run.emit(&dir.join("balance.csv"), &to_bytes(|b| write_balance_report(b, &analysis.balance))?)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["unit_id", "bin", "propensity", "weight"])?;
    let received = analysis.propensities.received(&analysis.bins);
    for (i, row) in x.rows.iter().enumerate() {
        w.write_record([
            row.unit_id.clone(),
            analysis.bin_labels[analysis.bins[i]].clone(),
            received[i].to_string(),
            analysis.weights.weights[i].to_string(),
        ])?;
    }
    run.emit(&dir.join("weights.csv"), &w.into_inner().map_err(|e| anyhow!("{e}"))?)?;

    let chart = dose_chart(
        &format!("{} by {}", a.outcome, a.treatment),
        &a.treatment,
        &a.outcome,
        &analysis.dose_response,
    );
    run.emit_best_effort(&dir.join("dose_response.svg"), render_svg(&chart).as_bytes());
    Ok(())
}

fn did(run: &mut Run, g: &Global, a: &DidArgs) -> CliResult<()> {
    let seed = require_seed(g)?;
    if a.window_days <= 0 || a.cohort_days <= 0 {
        return Err(Failure::Usage("--window-days and --cohort-days must be positive".into()));
    }
    let stats = a
        .statistic
        .iter()
        .map(|s| s.parse::<Statistic>())
        .collect::<modgov::Result<Vec<_>>>()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    run.config = config_json(a, g);
    let events = read_events(run.input(&a.events)?)?;
    let mut apps = read_appointments(run.input(&a.appointments)?)?;
    sort_appointments(&mut apps);
    let index = EventIndex::new(&events);
    let base = DidConfig {
        window: a.window_days * DAY,
        cohort_period: a.cohort_days * DAY,
        weighting: match a.weighting {
            Weighting::Treated => CohortWeighting::Treated,
            Weighting::Pooled => CohortWeighting::Pooled,
        },
        exclude_overlapping: a.exclude_overlapping,
        bootstrap: bootstrap_config(g, seed)?,
    };
    let mut results = Vec::new();
    for (k, s) in stats.iter().enumerate() {
        let cfg = DidConfig {
            bootstrap: base.bootstrap.derived(k as u64),
            ..base
        };
        let r = did_estimate(&apps, &index, &a.attribute, *s, &cfg)?;
        eprintln!(
            "{} {}: {:+.3}pp [{:.3}, {:.3}] ({} treated, {} control, {} dropped)",
            r.attribute, r.statistic, r.estimate, r.ci.low, r.ci.high, r.n_treated, r.n_control, r.n_dropped
        );
        results.push(r);
    }
    let dir = &a.out_dir;
    run.emit(&dir.join("did.csv"), &to_bytes(|b| write_did_results(b, &results))?)?;
    for r in &results {
        run.emit(
            &dir.join(format!("cohorts_{}.csv", slug(&r.statistic))),
            &to_bytes(|b| write_cohorts(b, r))?,
        )?;
    }
    Ok(())
}

fn study(run: &mut Run, g: &Global, a: &StudyArgs) -> CliResult<()> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(run.input(p)?).with_context(|| format!("cannot read {}", p.display()))?;
            StudyConfig::parse(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?
        }
        None => StudyConfig::parse("").expect("empty config"),
    };
    let name = match (&a.name, cfg.raw("study")) {
        (Some(n), Some(c)) if n != c => {
            return Err(Failure::Usage(format!("--name {n} conflicts with study = {c} in the config")))
        }
        (Some(n), _) => n.clone(),
        (None, Some(c)) => c.to_string(),
        (None, None) => return Err(Failure::Usage("--name is required when the config names no study".into())),
    };
    let set = |cfg: &mut StudyConfig, key: &str, v: Option<String>| -> CliResult<()> {
        if let Some(v) = v {
            cfg.set(key, v).map_err(|e| Failure::Usage(e.to_string()))?;
        }
        Ok(())
    };
    set(&mut cfg, "seed", g.seed.map(|s| s.to_string()))?;
    set(&mut cfg, "bootstrap", g.bootstrap.map(|s| s.to_string()))?;
    set(&mut cfg, "level", g.level.map(|s| s.to_string()))?;
    set(&mut cfg, "truncate_pct", g.truncate_pct.map(|s| s.to_string()))?;
    let seed = match cfg.raw("seed") {
        Some(s) => s.parse::<u64>().map_err(|_| Failure::Usage(format!("seed: cannot parse {s:?}")))?,
        None => return Err(Failure::Usage("--seed is required for this command".into())),
    };
    run.seed = Some(seed);

    let mut data = StudyData::default();
    if let Some(p) = &a.events {
        data.events = read_events(run.input(p)?)?;
    }
    if let Some(p) = &a.tenures {
        data.tenures = read_tenures(run.input(p)?).with_context(|| format!("{}", p.display()))?;
    }
    if let Some(p) = &a.covariates {
        data.covariates = Some(read_covariates(run.input(p)?)?);
    }
    if let Some(p) = &a.appointments {
        data.appointments = Some(read_appointments(run.input(p)?)?);
    }
    if let Some(p) = &a.posts {
        data.posts = read_raw_posts(run.input(p)?)?;
    }

    let report = run_study(&name, &cfg, &data).map_err(|e| match e {
        modgov::Error::UnknownStudy(_) | modgov::Error::Config(_) => Failure::Usage(e.to_string()),
        other => Failure::Data(other.into()),
    })?;
    run.config = serde_json::to_value(report.config.iter().cloned().collect::<BTreeMap<_, _>>())?;
    for (k, v) in &report.summary {
        if k.ends_with("status") {
            eprintln!("{k}: {v}");
        }
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    run.emit(&a.out, report.render().as_bytes())?;
    if !a.no_charts {
        let stem = a.out.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        for (k, chart) in report.charts.iter().enumerate() {
            let path = a.out.with_file_name(format!("{stem}.{k:02}.{}.svg", slug(&chart.title)));
            run.emit_best_effort(&path, render_svg(chart).as_bytes());
        }
    }
    Ok(())
}

fn synth(run: &mut Run, a: &SynthArgs) -> CliResult<()> {
    let seed = run
        .seed
        .ok_or_else(|| Failure::Usage("--seed is required for this command".into()))?;
    let base = match a.kind {
        SynthKind::Panel => SynthSpec::did_default(),
        _ => SynthSpec::default(),
    };
    let spec = SynthSpec {
        n: a.n.unwrap_or(match a.kind {
            SynthKind::Workload => 1000,
            _ => base.n,
        }),
        gamma: a.gamma.unwrap_or(base.gamma),
        effect: if a.effect.is_empty() { base.effect.clone() } else { a.effect.clone() },
        sigma: a.sigma.unwrap_or(base.sigma),
        trend: a.trend.unwrap_or(base.trend),
        bin_edges: if a.bin_edges.is_empty() { base.bin_edges.clone() } else { a.bin_edges.clone() },
        seed,
        ..base
    };
    spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    run.config = serde_json::to_value(&spec)?;
    let dir = &a.out_dir;
    match a.kind {
        SynthKind::Crosssection => {
            let cs = gen_confounded_crosssection(&spec)?;
            let mut table = CovariateTable::new(vec!["x".into(), "treatment".into(), "outcome".into()]);
            for (i, row) in cs.covariates.rows.iter().enumerate() {
                table.push(row.unit_id.clone(), vec![row.values[0], cs.treatments[i], cs.outcomes[i]])?;
            }
            run.emit(&dir.join("covariates.csv"), &to_bytes(|b| write_covariates(b, &table))?)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["bin", "bin_label", "true_mean"])?;
            for (b, v) in cs.true_curve.iter().enumerate() {
                w.write_record([b.to_string(), cs.bins.label(b), v.to_string()])?;
            }
            run.emit(&dir.join("truth.csv"), &w.into_inner().map_err(|e| anyhow!("{e}"))?)?;
        }
        SynthKind::Workload => {
            let cs = gen_confounded_crosssection(&spec)?;
            let fx = materialize_workload(&cs, PANEL_START, 28)?;
            run.emit(&dir.join("events.jsonl"), &to_bytes(|b| write_events(b, &fx.events))?)?;
            run.emit(&dir.join("tenures.csv"), &to_bytes(|b| write_tenures(b, &fx.tenures))?)?;
            run.emit(&dir.join("covariates.csv"), &to_bytes(|b| write_covariates(b, &fx.covariates))?)?;
        }
        SynthKind::Panel => {
            let panel = gen_did_panel(&spec)?;
            run.emit(&dir.join("events.jsonl"), &to_bytes(|b| write_events(b, &panel.events))?)?;
            run.emit(
                &dir.join("appointments.jsonl"),
                &to_bytes(|b| write_appointments(b, &panel.appointments))?,
            )?;
        }
    }
    Ok(())
}

fn report_cmd(run: &mut Run, a: &ReportArgs) -> CliResult<()> {
    run.config = serde_json::to_value(a)?;
    let text = fs::read_to_string(run.input(&a.input)?).with_context(|| format!("cannot read {}", a.input.display()))?;
    let parsed = report::parse(&text).with_context(|| a.input.display().to_string())?;
    run.emit(&a.out_dir.join("summary.md"), report::markdown(&parsed).as_bytes())?;
    match report::charts(&parsed) {
        Ok(charts) => {
            for (k, chart) in charts.iter().enumerate() {
                let path = a.out_dir.join(format!("{k:02}.{}.svg", slug(&chart.title)));
                run.emit_best_effort(&path, render_svg(chart).as_bytes());
            }
        }
        Err(e) => eprintln!("warning: charts not rendered: {e:#}"),
    }
    Ok(())
}
