use modgov::acquisition::RawPost;
use modgov::did::AppointmentEvent;
use modgov::discourse::{group_and_summarize, Grouping};
use modgov::model::{CovariateTable, DiscourseEvent, EventKind, ModTenure, Sentiment, DAY};
use modgov::propensity::read_balance_report;
use modgov::stats::BootstrapConfig;
use modgov::studies::{run_study, StudyConfig, StudyData, StudyReport};
use modgov::synth::{gen_confounded_crosssection, gen_did_panel, materialize_workload, SynthSpec, PANEL_START};
use modgov::Error;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(text: &str) -> StudyConfig {
    StudyConfig::parse(text).unwrap()
}

fn dose_rows(report: &StudyReport, table: &str, statistic: &str) -> Vec<(f64, f64)> {
    let mut r = csv::Reader::from_reader(report.table(table).unwrap().as_bytes());
    r.records()
        .map(|row| row.unwrap())
        .filter(|row| &row[0] == statistic)
        .map(|row| (row[4].parse().unwrap(), row[7].parse().unwrap()))
        .collect()
}

fn workload_data(n: usize, seed: u64) -> StudyData {
    let cs = gen_confounded_crosssection(&SynthSpec {
        n,
        seed,
        ..Default::default()
    })
    .unwrap();
    let fx = materialize_workload(&cs, PANEL_START, 28).unwrap();
    StudyData {
        events: fx.events,
        tenures: fx.tenures,
        covariates: Some(fx.covariates),
        ..Default::default()
    }
}

#[test]
fn workload_study_recovers_flat_curve() {
    let data = workload_data(4000, 3);
    let cfg = config("seed = 1\nbins = 1\ntruncate_pct = 100\nbootstrap = 200\nstatistics = composition-positive");
    let report = run_study("workload", &cfg, &data).unwrap();
    assert_eq!(report.summary_value("all.status"), Some("balanced"));
    let rows = dose_rows(&report, "dose_response:all", "composition-positive");
    assert_eq!(rows.len(), 2);
    let adjusted = (rows[0].0 - rows[1].0).abs();
    let naive = (rows[0].1 - rows[1].1).abs();
    // Outcome noise is 8pp on the composition scale.
    assert!(adjusted < 0.1 * 8.0, "adjusted gap {adjusted}");
    assert!(naive > 0.2 * 8.0, "naive gap {naive}");
    let balance = read_balance_report(report.table("balance:all").unwrap().as_bytes()).unwrap();
    assert!(balance.entries.iter().all(|e| e.smd.abs() < 0.25));
}

#[test]
fn record_order_does_not_change_reports() {
    let data = workload_data(600, 4);
    let cfg = config("seed = 5\nbins = 1\nbootstrap = 100");
    let a = run_study("workload", &cfg, &data).unwrap().render();

    let mut shuffled = data.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    shuffled.events.shuffle(&mut rng);
    shuffled.tenures.shuffle(&mut rng);
    shuffled.covariates.as_mut().unwrap().rows.shuffle(&mut rng);
    let b = run_study("workload", &cfg, &shuffled).unwrap().render();
    assert_eq!(a, b);
}

#[test]
fn report_header_carries_version_and_config() {
    let data = workload_data(300, 6);
    let report = run_study("workload", &config("seed = 2\nbins = 1\nbootstrap = 50"), &data).unwrap();
    let text = report.render();
    assert!(text.starts_with(&format!("# modgov {}\n# study = workload\n", modgov::VERSION)));
    assert!(text.contains("# config: seed = 2\n"));
    assert!(text.contains("# config: truncate_pct = 99\n"));
    assert!(text.contains("# table: balance:all\n"));
}

#[test]
fn missing_covariate_is_an_error() {
    let data = workload_data(100, 1);
    let cfg = config("seed = 1\ncovariates = x, nope");
    assert!(matches!(run_study("workload", &cfg, &data), Err(Error::UnknownCovariate(_))));
}

const TOPICS: [&str; 6] = ["news", "hobby", "games", "sport", "place", "other"];

/// Communities whose removal rate and negative share both rise with `x`.
fn removal_data(per_topic: usize) -> StudyData {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut names = vec!["x".to_string()];
    names.extend(TOPICS.iter().map(|t| format!("category_{t}")));
    let mut table = CovariateTable::new(names);
    let mut events = Vec::new();
    for (ti, _) in TOPICS.iter().enumerate() {
        for i in 0..per_topic {
            let community = format!("r{ti}-{i:04}");
            let x: f64 = rng.random_range(-1.5..1.5);
            let removed_pct = (2.0 + x + rng.random_range(-1.5..1.5)).clamp(0.0, 6.0);
            let negative = (20.0 + 8.0 * x).round() as usize;
            for k in 0..100usize {
                let label = match k {
                    _ if k >= 50 => None,
                    _ if k < negative / 2 => Some(Sentiment::Negative),
                    _ if k % 2 == 0 => Some(Sentiment::Positive),
                    _ => Some(Sentiment::Neutral),
                };
                events.push(DiscourseEvent {
                    event_id: format!("{community}-{k}"),
                    community: community.clone(),
                    author: format!("u{k}"),
                    created_utc: PANEL_START + k as i64 * 3600,
                    kind: EventKind::Comment,
                    author_is_mod: false,
                    removed: (k as f64) < removed_pct,
                    deleted: false,
                    label,
                });
            }
            let mut values = vec![x];
            values.extend((0..TOPICS.len()).map(|t| (t == ti) as u8 as f64));
            table.push(community, values).unwrap();
        }
    }
    StudyData {
        events,
        covariates: Some(table),
        ..Default::default()
    }
}

#[test]
fn removal_study_runs_pooled_and_one_per_topic() {
    let data = removal_data(150);
    let report = run_study("removal", &config("seed = 3\nbootstrap = 50"), &data).unwrap();
    assert!(report.table("dose_response:pooled").is_some());
    for t in TOPICS {
        assert!(report.table(&format!("dose_response:{t}")).is_some(), "{t}: {:?}", report.summary);
        assert!(report.summary_value(&format!("{t}.status")).is_some());
    }
    assert_eq!(report.tables.iter().filter(|t| t.name.starts_with("balance:")).count(), 7);
}

fn panel_data(seed: u64) -> StudyData {
    let panel = gen_did_panel(&SynthSpec {
        seed,
        ..SynthSpec::did_default()
    })
    .unwrap();
    StudyData {
        events: panel.events,
        appointments: Some(panel.appointments),
        ..Default::default()
    }
}

#[test]
fn engagement_without_any_activity_is_single_arm() {
    let data = panel_data(1);
    let err = run_study("engagement", &config("seed = 1\nbootstrap = 20"), &data).unwrap_err();
    assert!(matches!(err, Error::SingleArm));
    assert!(err.to_string().contains("single-arm"));
}

#[test]
fn recruiting_study_estimates_injected_effect() {
    let mut data = panel_data(2);
    let apps: Vec<AppointmentEvent> = data.appointments.clone().unwrap();
    for a in &apps {
        data.tenures.push(ModTenure {
            community: a.community.clone(),
            username: "headmod".into(),
            start_utc: PANEL_START - 100 * DAY,
            end_utc: None,
            end_lower_utc: None,
        });
        if a.flag("treated").unwrap() {
            let t = a.t0 - 10 * DAY + 7;
            data.posts.push(RawPost {
                event: DiscourseEvent {
                    event_id: format!("rec-{}", a.community),
                    community: a.community.clone(),
                    author: "headmod".into(),
                    created_utc: t,
                    kind: EventKind::Post,
                    author_is_mod: true,
                    removed: false,
                    deleted: false,
                    label: None,
                },
                body: "We are recruiting new mods!".into(),
                target_community: None,
            });
        }
    }
    let cfg = config("seed = 4\nbootstrap = 200\nstatistics = composition-positive");
    let report = run_study("recruiting", &cfg, &data).unwrap();
    assert_eq!(report.summary_value("n_recruiting_events"), Some("100"));
    let mut r = csv::Reader::from_reader(report.table("did").unwrap().as_bytes());
    let headers = r.headers().unwrap().clone();
    let row = r.records().next().unwrap().unwrap();
    let col = |name: &str| row[headers.iter().position(|h| h == name).unwrap()].to_string();
    assert_eq!(col("attribute"), "publicly_recruited");
    let estimate: f64 = col("estimate_pp").parse().unwrap();
    assert!((estimate - 5.0).abs() < 1.0, "estimate {estimate}");
}

#[test]
fn single_bin_dose_response_matches_group_summary() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut table = CovariateTable::new(vec!["x".into(), "dose".into(), "y".into()]);
    let mut ys = Vec::new();
    for i in 0..80 {
        let y: f64 = rng.random_range(0.0..10.0);
        ys.push(y);
        table
            .push(format!("u{i:03}"), vec![rng.random_range(0.0..1.0), rng.random_range(0.0..5.0), y])
            .unwrap();
    }
    let data = StudyData {
        covariates: Some(table),
        ..Default::default()
    };
    let cfg = config("seed = 9\nbootstrap = 300\ntreatment = dose\noutcome = y\nbins =");
    let report = run_study("dose_response", &cfg, &data).unwrap();

    let grouping = Grouping {
        labels: vec!["all".into()],
        assignment: vec![0; ys.len()],
    };
    let boot = BootstrapConfig {
        resamples: 300,
        level: 95.0,
        seed: 9,
    };
    let expected = &group_and_summarize(&grouping, &ys, None, "y", &boot).unwrap()[0];
    let mut r = csv::Reader::from_reader(report.table("dose_response:all").unwrap().as_bytes());
    let row = r.records().next().unwrap().unwrap();
    let num = |i: usize| row[i].parse::<f64>().unwrap();
    assert_eq!(&row[2], "all");
    assert_eq!(num(7), expected.mean.unwrap());
    assert_eq!(num(8), expected.ci_low.unwrap());
    assert_eq!(num(9), expected.ci_high.unwrap());
    // Unit weights: adjusted equals unadjusted.
    assert_eq!(num(4), num(7));
}

#[test]
fn size_grouping_study() {
    let data = panel_data(3);
    let cfg = config("seed = 1\nbootstrap = 50\nsize_edges = 10, 100");
    let report = run_study("size", &cfg, &data).unwrap();
    assert_eq!(report.summary_value("n_communities"), Some("200"));
    let csv = report.table("groups").unwrap();
    // 20 items a day put every community in the middle bin.
    assert!(csv.lines().any(|l| l.starts_with("10-100,amount,") && l.ends_with(",200")));
}

#[test]
fn experience_study_counts_prior_tenures() {
    let mut tenures = Vec::new();
    let base = PANEL_START;
    for c in 0..30 {
        let community = format!("c{c}");
        for m in 0..(c % 15 + 1) {
            tenures.push(ModTenure {
                community: community.clone(),
                username: format!("old{c}-{m}"),
                start_utc: base - 400 * DAY,
                end_utc: None,
                end_lower_utc: None,
            });
        }
        let user = format!("new{c}");
        if c % 3 != 0 {
            tenures.push(ModTenure {
                community: "elsewhere".into(),
                username: user.clone(),
                start_utc: base - (c as i64 * 100) * DAY,
                end_utc: None,
                end_lower_utc: None,
            });
        }
        tenures.push(ModTenure {
            community,
            username: user,
            start_utc: base + 10 * DAY,
            end_utc: None,
            end_lower_utc: None,
        });
    }
    let data = StudyData {
        tenures,
        ..Default::default()
    };
    let cfg = config(&format!(
        "seed = 1\nbootstrap = 50\nperiod_start = {}\nperiod_end = {}",
        base,
        base + 100 * DAY
    ));
    let report = run_study("experience", &cfg, &data).unwrap();
    assert_eq!(report.summary_value("n_appointments"), Some("30"));
    let csv = report.table("experience").unwrap();
    // Teams of 1 to 15 before the appointment: all in the smallest two bins.
    assert!(csv.lines().any(|l| l.starts_with("0-10,frac-novice,")));
    assert!(csv.lines().any(|l| l.starts_with(">100,frac->=2y,") && l.ends_with(",,,,0")));
}
