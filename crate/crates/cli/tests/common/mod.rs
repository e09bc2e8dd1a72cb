//! Fixture files for driving the `modgov` binary.

#![allow(dead_code)]

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use modgov::acquisition::{write_appointments, write_covariates, write_events, write_raw_posts, write_tenures, RawPost};
use modgov::model::{CovariateTable, DiscourseEvent, EventKind, ModTenure, Sentiment, DAY};
use modgov::synth::{gen_confounded_crosssection, gen_did_panel, materialize_workload, SynthSpec, PANEL_START};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn modgov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modgov"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn create(path: &Path) -> BufWriter<File> {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    BufWriter::new(File::create(path).unwrap())
}

pub const TOPICS: [&str; 6] = ["news", "hobby", "games", "sport", "place", "other"];

/// Every input any study needs, written under `dir`.
pub struct Fixtures {
    pub dir: PathBuf,
}

impl Fixtures {
    pub fn path(&self, rel: &str) -> String {
        self.dir.join(rel).display().to_string()
    }

    pub fn write(dir: &Path) -> Fixtures {
        workload(dir);
        removal(dir);
        crosssection(dir);
        panel(dir);
        Fixtures { dir: dir.to_path_buf() }
    }

    /// Arguments for `study --name <name>`, excluding the output path.
    pub fn study_args(&self, name: &str) -> Vec<String> {
        let mut args = vec!["study".to_string(), "--name".into(), name.into()];
        let mut add = |flag: &str, rel: &str| {
            args.push(flag.into());
            args.push(self.path(rel));
        };
        match name {
            "workload" => {
                add("--events", "wl/events.jsonl");
                add("--tenures", "wl/tenures.csv");
                add("--covariates", "wl/covariates.csv");
            }
            "removal" | "size" | "topic" | "health" => {
                add("--events", "rm/events.jsonl");
                add("--covariates", "rm/covariates.csv");
            }
            "dose_response" => add("--covariates", "cs/covariates.csv"),
            "engagement" | "recruiting" | "experience" => {
                add("--events", "panel/events.jsonl");
                add("--tenures", "panel/tenures.csv");
                add("--posts", "panel/posts.jsonl");
                if name != "experience" {
                    add("--appointments", "panel/appointments.jsonl");
                }
            }
            other => panic!("no fixture for {other}"),
        }
        let extra = match name {
            "dose_response" => "treatment = treatment\noutcome = outcome\nbins = 1\n",
            "health" => "health_column = health\n",
            "workload" => "bins = 1\n",
            _ => "",
        };
        let cfg = self.dir.join(format!("{name}.cfg"));
        std::fs::write(&cfg, format!("# {name}\nbootstrap = 200\n{extra}")).unwrap();
        args.push("--config".into());
        args.push(cfg.display().to_string());
        args
    }
}

fn workload(dir: &Path) {
    let cs = gen_confounded_crosssection(&SynthSpec {
        n: 400,
        seed: 1,
        ..Default::default()
    })
    .unwrap();
    let fx = materialize_workload(&cs, PANEL_START, 28).unwrap();
    write_events(create(&dir.join("wl/events.jsonl")), &fx.events).unwrap();
    write_tenures(create(&dir.join("wl/tenures.csv")), &fx.tenures).unwrap();
    write_covariates(create(&dir.join("wl/covariates.csv")), &fx.covariates).unwrap();
}

fn crosssection(dir: &Path) {
    let cs = gen_confounded_crosssection(&SynthSpec {
        n: 1000,
        seed: 2,
        ..Default::default()
    })
    .unwrap();
    let mut t = CovariateTable::new(vec!["x".into(), "treatment".into(), "outcome".into()]);
    for (i, row) in cs.covariates.rows.iter().enumerate() {
        t.push(row.unit_id.clone(), vec![row.values[0], cs.treatments[i], cs.outcomes[i]])
            .unwrap();
    }
    write_covariates(create(&dir.join("cs/covariates.csv")), &t).unwrap();
}

fn item(community: &str, k: usize, t: i64, label: Option<Sentiment>, removed: bool) -> DiscourseEvent {
    DiscourseEvent {
        event_id: format!("{community}-{k}"),
        community: community.into(),
        author: format!("u{}", k % 13),
        created_utc: t,
        kind: if k.is_multiple_of(3) { EventKind::Post } else { EventKind::Comment },
        author_is_mod: false,
        removed,
        deleted: false,
        label,
    }
}

/// Removal rate and negative share both rise with `x`; six topics.
fn removal(dir: &Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut names = vec!["x".to_string(), "health".to_string()];
    names.extend(TOPICS.iter().map(|t| format!("category_{t}")));
    let mut table = CovariateTable::new(names);
    let mut events = Vec::new();
    for ti in 0..TOPICS.len() {
        for i in 0..80 {
            let community = format!("r{ti}-{i:03}");
            let x: f64 = rng.random_range(-1.5..1.5);
            let removed_pct = (2.0 + x + rng.random_range(-1.5..1.5)).clamp(0.0, 6.0);
            let negative = (20.0 + 8.0 * x).round() as usize;
            let items = 60 + 20 * (i % 5);
            for k in 0..items {
                let label = match k {
                    _ if k >= 50 => None,
                    _ if k < negative / 2 => Some(Sentiment::Negative),
                    _ if k % 2 == 0 => Some(Sentiment::Positive),
                    _ => Some(Sentiment::Neutral),
                };
                events.push(item(&community, k, PANEL_START + k as i64 * 3600, label, (k as f64) < removed_pct));
            }
            let mut values = vec![x, rng.random_range(0.0..10.0)];
            values.extend((0..TOPICS.len()).map(|t| (t == ti) as u8 as f64));
            table.push(community, values).unwrap();
        }
    }
    write_events(create(&dir.join("rm/events.jsonl")), &events).unwrap();
    write_covariates(create(&dir.join("rm/covariates.csv")), &table).unwrap();
}

/// A small appointment panel. Every community has a sitting head moderator;
/// treated communities recruit publicly before the appointment, and a third
/// of new moderators were active in the community beforehand.
fn panel(dir: &Path) {
    let panel = gen_did_panel(&SynthSpec {
        n: 40,
        days: 112,
        seed: 4,
        ..SynthSpec::did_default()
    })
    .unwrap();
    let mut events = panel.events;
    let mut tenures = Vec::new();
    let mut posts = Vec::new();
    for (c, a) in panel.appointments.iter().enumerate() {
        tenures.push(ModTenure {
            community: a.community.clone(),
            username: "headmod".into(),
            start_utc: PANEL_START - 400 * DAY,
            end_utc: None,
            end_lower_utc: None,
        });
        tenures.push(ModTenure {
            community: a.community.clone(),
            username: a.username.clone(),
            start_utc: a.t0,
            end_utc: None,
            end_lower_utc: None,
        });
        if c % 4 == 1 {
            tenures.push(ModTenure {
                community: "elsewhere".into(),
                username: a.username.clone(),
                start_utc: PANEL_START - 900 * DAY,
                end_utc: Some(PANEL_START - 100 * DAY),
                end_lower_utc: Some(PANEL_START - 101 * DAY),
            });
        }
        for k in 0..6 {
            let mut activity = Vec::new();
            if c % 3 == 0 {
                activity.push(item(&a.community, 9000 + k, a.t0 - (k as i64 + 1) * DAY + 5, None, false));
            }
            if c % 4 == 0 {
                activity.push(item(&a.community, 9100 + k, a.t0 + (k as i64 + 1) * DAY + 5, None, false));
            }
            if c % 5 == 0 {
                activity.push(item("elsewhere", 9200 + c * 10 + k, a.t0 - (k as i64 + 1) * DAY + 9, None, false));
            }
            for mut e in activity {
                e.author = a.username.clone();
                events.push(e);
            }
        }
        if a.flag("treated").unwrap() {
            let mut e = item(&a.community, 9999, a.t0 - 10 * DAY + 7, None, false);
            e.author = "headmod".into();
            e.author_is_mod = true;
            posts.push(RawPost {
                event: e,
                body: "We are recruiting new mods!".into(),
                target_community: None,
            });
        }
    }
    write_events(create(&dir.join("panel/events.jsonl")), &events).unwrap();
    write_tenures(create(&dir.join("panel/tenures.csv")), &tenures).unwrap();
    write_raw_posts(create(&dir.join("panel/posts.jsonl")), &posts).unwrap();
    write_appointments(create(&dir.join("panel/appointments.jsonl")), &panel.appointments).unwrap();
}
