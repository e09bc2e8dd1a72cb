//! Line-record readers and writers for events, snapshots, covariates,
//! tenures, and appointments.
//!
//! Event, snapshot, and appointment files are one JSON object per line.
//! Covariate and tenure files are comma-separated with a header row. Every
//! parse error carries its 1-based line number.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::did::AppointmentEvent;
use crate::error::{Error, Result};
use crate::model::{
    CovariateTable, DiscourseEvent, EventKind, ModSnapshot, ModTenure, Sentiment,
};

/// A post or comment together with its body, used only by the text-matching
/// stages (prefilter and recruiting detection).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPost {
    pub event: DiscourseEvent,
    pub body: String,
    /// Set on listings in an external recruiting community: the community
    /// that is recruiting.
    pub target_community: Option<String>,
}

#[derive(Debug, Deserialize)]
struct EventRecord {
    event_id: String,
    community: String,
    author: String,
    created_utc: i64,
    kind: String,
    author_is_mod: bool,
    removed: bool,
    deleted: bool,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    body: Option<String>,
    #[serde(default)]
    target_community: Option<String>,
}

impl EventRecord {
    fn into_raw(self) -> Result<RawPost> {
        let event = DiscourseEvent {
            event_id: self.event_id,
            community: self.community,
            author: self.author,
            created_utc: self.created_utc,
            kind: self.kind.parse::<EventKind>()?,
            author_is_mod: self.author_is_mod,
            removed: self.removed,
            deleted: self.deleted,
            label: self.label.map(|l| l.parse::<Sentiment>()).transpose()?,
        };
        event.validate()?;
        Ok(RawPost {
            event,
            body: self.body.unwrap_or_default(),
            target_community: self.target_community,
        })
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn parse_err(source: &str, line: usize, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        path: source.to_string(),
        line,
        message: e.to_string(),
    }
}

/// Streams JSON lines, skipping blank ones, tagging failures with `source:line`.
pub struct JsonLines<R, T> {
    lines: std::io::Lines<R>,
    line: usize,
    source: String,
    _marker: std::marker::PhantomData<T>,
}

impl<R: BufRead, T: for<'de> Deserialize<'de>> JsonLines<R, T> {
    pub fn new(reader: R, source: impl Into<String>) -> Self {
        JsonLines {
            lines: reader.lines(),
            line: 0,
            source: source.into(),
            _marker: std::marker::PhantomData,
        }
    }
}

impl<R: BufRead, T: for<'de> Deserialize<'de>> Iterator for JsonLines<R, T> {
    type Item = Result<(usize, T)>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let text = match self.lines.next()? {
                Ok(t) => t,
                Err(e) => return Some(Err(parse_err(&self.source, self.line + 1, e))),
            };
            self.line += 1;
            if text.trim().is_empty() {
                continue;
            }
            return Some(
                serde_json::from_str::<T>(&text)
                    .map(|v| (self.line, v))
                    .map_err(|e| parse_err(&self.source, self.line, e)),
            );
        }
    }
}

pub fn read_raw_posts_from(reader: impl BufRead, source: &str) -> Result<Vec<RawPost>> {
    JsonLines::<_, EventRecord>::new(reader, source)
        .map(|r| {
            let (line, rec) = r?;
            rec.into_raw().map_err(|e| parse_err(source, line, e))
        })
        .collect()
}

pub fn read_events_from(reader: impl BufRead, source: &str) -> Result<Vec<DiscourseEvent>> {
    Ok(read_raw_posts_from(reader, source)?
        .into_iter()
        .map(|p| p.event)
        .collect())
}

pub fn read_events(path: impl AsRef<Path>) -> Result<Vec<DiscourseEvent>> {
    let path = path.as_ref();
    read_events_from(open(path)?, &path.display().to_string())
}

/// Reads events keeping bodies; the only reader that does.
pub fn read_raw_posts(path: impl AsRef<Path>) -> Result<Vec<RawPost>> {
    let path = path.as_ref();
    read_raw_posts_from(open(path)?, &path.display().to_string())
}

/// Events with their bodies, readable by [`read_raw_posts`].
pub fn write_raw_posts<'a>(mut out: impl Write, posts: impl IntoIterator<Item = &'a RawPost>) -> Result<()> {
    for p in posts {
        let mut v = serde_json::to_value(&p.event)?;
        let obj = v.as_object_mut().expect("events serialize as objects");
        obj.insert("body".into(), p.body.clone().into());
        if let Some(t) = &p.target_community {
            obj.insert("target_community".into(), t.clone().into());
        }
        serde_json::to_writer(&mut out, &v)?;
        writeln!(out).map_err(|e| Error::io("<posts>", e))?;
    }
    Ok(())
}

pub fn write_events<'a>(
    mut out: impl Write,
    events: impl IntoIterator<Item = &'a DiscourseEvent>,
) -> Result<()> {
    for e in events {
        serde_json::to_writer(&mut out, e)?;
        writeln!(out).map_err(|e| Error::io("<events>", e))?;
    }
    Ok(())
}

pub fn read_snapshots_from(reader: impl BufRead, source: &str) -> Result<Vec<ModSnapshot>> {
    JsonLines::<_, ModSnapshot>::new(reader, source)
        .map(|r| {
            let (line, snap) = r?;
            snap.validate().map_err(|e| parse_err(source, line, e))?;
            Ok(snap)
        })
        .collect()
}

pub fn read_snapshots(path: impl AsRef<Path>) -> Result<Vec<ModSnapshot>> {
    let path = path.as_ref();
    read_snapshots_from(open(path)?, &path.display().to_string())
}

pub fn write_snapshots<'a>(
    mut out: impl Write,
    snapshots: impl IntoIterator<Item = &'a ModSnapshot>,
) -> Result<()> {
    for s in snapshots {
        serde_json::to_writer(&mut out, s)?;
        writeln!(out).map_err(|e| Error::io("<snapshots>", e))?;
    }
    Ok(())
}

/// Drops repeat captures of the same `(community, captured_utc)`, keeping the
/// first occurrence. Returns the number dropped.
pub fn dedup_snapshots(snapshots: &mut Vec<ModSnapshot>) -> usize {
    let before = snapshots.len();
    let mut seen = HashSet::new();
    snapshots.retain(|s| seen.insert((s.community.clone(), s.captured_utc)));
    before - snapshots.len()
}

/// Groups snapshots by community, each group sorted by capture time.
pub fn snapshots_by_community(snapshots: Vec<ModSnapshot>) -> BTreeMap<String, Vec<ModSnapshot>> {
    let mut groups: BTreeMap<String, Vec<ModSnapshot>> = BTreeMap::new();
    for s in snapshots {
        groups.entry(s.community.clone()).or_default().push(s);
    }
    for g in groups.values_mut() {
        g.sort_by_key(|s| s.captured_utc);
    }
    groups
}

pub fn read_covariates_from(reader: impl Read, source: &str) -> Result<CovariateTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Ok(CovariateTable::default()),
        Some(h) => h?,
    };
    if header.get(0) != Some("unit_id") {
        return Err(parse_err(source, 1, "first column must be unit_id"));
    }
    let mut table = CovariateTable::new(header.iter().skip(1).map(str::to_string).collect());
    let mut seen = HashSet::new();
    for rec in records {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(parse_err(
                source,
                line,
                format!("{} fields, header has {}", rec.len(), header.len()),
            ));
        }
        let unit_id = rec[0].to_string();
        if !seen.insert(unit_id.clone()) {
            return Err(Error::DuplicateUnit { unit_id, line });
        }
        let values = rec
            .iter()
            .skip(1)
            .zip(&table.names)
            .map(|(v, name)| {
                v.parse::<f64>()
                    .map_err(|_| parse_err(source, line, format!("{name}: not a number: {v:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        table
            .push(unit_id, values)
            .map_err(|e| parse_err(source, line, e))?;
    }
    Ok(table)
}

pub fn read_covariates(path: impl AsRef<Path>) -> Result<CovariateTable> {
    let path = path.as_ref();
    read_covariates_from(open(path)?, &path.display().to_string())
}

pub fn write_covariates(out: impl Write, table: &CovariateTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(std::iter::once("unit_id").chain(table.names.iter().map(String::as_str)))?;
    for row in &table.rows {
        let mut rec = vec![row.unit_id.clone()];
        rec.extend(row.values.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<covariates>", e))?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct TenureRecord {
    community: String,
    username: String,
    start_utc: i64,
    end_utc: Option<i64>,
    end_lower_utc: Option<i64>,
}

/// Tenures as CSV; open ends are written as empty cells.
pub fn write_tenures<'a>(
    out: impl Write,
    tenures: impl IntoIterator<Item = &'a ModTenure>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for t in tenures {
        w.serialize(TenureRecord {
            community: t.community.clone(),
            username: t.username.clone(),
            start_utc: t.start_utc,
            end_utc: t.end_utc,
            end_lower_utc: t.end_lower_utc,
        })?;
    }
    w.flush().map_err(|e| Error::io("<tenures>", e))?;
    Ok(())
}

pub fn read_tenures_from(reader: impl Read) -> Result<Vec<ModTenure>> {
    let mut rdr = csv::Reader::from_reader(reader);
    rdr.deserialize::<TenureRecord>()
        .map(|r| {
            let r = r?;
            Ok(ModTenure {
                community: r.community,
                username: r.username,
                start_utc: r.start_utc,
                end_utc: r.end_utc,
                end_lower_utc: r.end_lower_utc,
            })
        })
        .collect()
}

pub fn read_tenures(path: impl AsRef<Path>) -> Result<Vec<ModTenure>> {
    let path = path.as_ref();
    read_tenures_from(open(path)?)
}

pub fn read_appointments_from(reader: impl BufRead, source: &str) -> Result<Vec<AppointmentEvent>> {
    JsonLines::<_, AppointmentEvent>::new(reader, source)
        .map(|r| r.map(|(_, a)| a))
        .collect()
}

pub fn read_appointments(path: impl AsRef<Path>) -> Result<Vec<AppointmentEvent>> {
    let path = path.as_ref();
    read_appointments_from(open(path)?, &path.display().to_string())
}

pub fn write_appointments<'a>(
    mut out: impl Write,
    appointments: impl IntoIterator<Item = &'a AppointmentEvent>,
) -> Result<()> {
    for a in appointments {
        serde_json::to_writer(&mut out, a)?;
        writeln!(out).map_err(|e| Error::io("<appointments>", e))?;
    }
    Ok(())
}

/// One lowercase username per line; blank lines and `#` comments ignored.
pub fn read_botlist_from(reader: impl BufRead) -> Result<HashSet<String>> {
    let mut bots = HashSet::new();
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io("<botlist>", e))?;
        let name = line.trim();
        if !name.is_empty() && !name.starts_with('#') {
            bots.insert(name.to_lowercase());
        }
    }
    Ok(bots)
}

pub fn read_botlist(path: impl AsRef<Path>) -> Result<HashSet<String>> {
    read_botlist_from(open(path.as_ref())?)
}

pub fn read_lines(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for line in open(path)?.lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if !line.is_empty() && !line.starts_with('#') {
            out.push(line.to_string());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EVENT: &str = r#"{"event_id":"e1","community":"c","author":"a","created_utc":100,"kind":"post","author_is_mod":false,"removed":false,"deleted":false,"label":"positive"}"#;

    #[test]
    fn events_parse_and_round_trip_bytes() {
        let input = format!("{EVENT}\n\n{}\n", EVENT.replace("\"positive\"", "null").replace("e1", "e2"));
        let events = read_events_from(input.as_bytes(), "mem").unwrap();
        assert_eq!(events.len(), 2);
        assert_eq!(events[0].label, Some(Sentiment::Positive));
        assert_eq!(events[1].label, None);
        let mut out = Vec::new();
        write_events(&mut out, &events).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), input.replace("\n\n", "\n"));
    }

    #[test]
    fn raw_posts_round_trip() {
        let text = r#"{"event_id":"p1","community":"needamod","author":"boss","created_utc":10,"kind":"post","author_is_mod":true,"removed":false,"deleted":false,"label":null,"body":"[c] mods wanted","target_community":"c"}"#;
        let posts = read_raw_posts_from(text.as_bytes(), "t").unwrap();
        let mut out = Vec::new();
        write_raw_posts(&mut out, &posts).unwrap();
        assert_eq!(read_raw_posts_from(out.as_slice(), "t").unwrap(), posts);
        assert_eq!(posts[0].target_community.as_deref(), Some("c"));
    }

    #[test]
    fn missing_field_names_line() {
        let bad = EVENT.replace(r#""created_utc":100,"#, "");
        let input = format!("{EVENT}\n{bad}\n");
        let err = read_events_from(input.as_bytes(), "events.jsonl").unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("events.jsonl:2:"), "{msg}");
        assert!(msg.contains("created_utc"), "{msg}");
    }

    #[test]
    fn unknown_label_and_kind_are_located_errors() {
        let input = EVENT.replace("positive", "mixed");
        let msg = read_events_from(input.as_bytes(), "f").unwrap_err().to_string();
        assert!(msg.contains("f:1") && msg.contains("unknown label"), "{msg}");
        let input = EVENT.replace("\"post\"", "\"reply\"");
        assert!(read_events_from(input.as_bytes(), "f")
            .unwrap_err()
            .to_string()
            .contains("unknown kind"));
    }

    #[test]
    fn empty_files_are_empty() {
        assert!(read_events_from(&b""[..], "f").unwrap().is_empty());
        assert!(read_snapshots_from(&b""[..], "f").unwrap().is_empty());
        assert!(read_covariates_from(&b""[..], "f").unwrap().is_empty());
    }

    #[test]
    fn covariate_columns_keep_header_order() {
        let names = [
            "total_items",
            "frac_deleted",
            "frac_removed",
            "num_mods",
            "category_hobby",
            "category_discussion",
            "category_memes",
            "category_news",
            "category_media",
            "category_identity",
        ];
        let mut csv = format!("unit_id,{}\n", names.join(","));
        csv.push_str("r1,100,0.1,0.2,3,1,0,0,0,0,0\n");
        csv.push_str("r2,50,0.0,0.1,2,0,0,0,0,0,1\n");
        let table = read_covariates_from(csv.as_bytes(), "cov.csv").unwrap();
        assert_eq!(table.names, names);
        assert_eq!(table.rows[1].values[9], 1.0);
        let mut out = Vec::new();
        write_covariates(&mut out, &table).unwrap();
        assert_eq!(read_covariates_from(&out[..], "again").unwrap(), table);
    }

    #[test]
    fn duplicate_unit_is_rejected() {
        let csv = "unit_id,a\nu,1\nu,2\n";
        assert!(matches!(
            read_covariates_from(csv.as_bytes(), "f"),
            Err(Error::DuplicateUnit { line: 3, .. })
        ));
    }

    #[test]
    fn non_contiguous_ranks_rejected() {
        let line = r#"{"community":"c","captured_utc":100,"roster":[{"username":"a","appointed_utc":5,"rank":0},{"username":"b","appointed_utc":6,"rank":2}]}"#;
        let msg = read_snapshots_from(line.as_bytes(), "s").unwrap_err().to_string();
        assert!(msg.contains("not contiguous"), "{msg}");
    }

    #[test]
    fn dedup_keeps_first_capture() {
        let snap = |t, who: &str| ModSnapshot {
            community: "c".into(),
            captured_utc: t,
            roster: vec![crate::model::RosterEntry {
                username: who.into(),
                appointed_utc: 1,
                rank: 0,
            }],
        };
        let mut snaps = vec![snap(10, "a"), snap(10, "b"), snap(20, "a")];
        assert_eq!(dedup_snapshots(&mut snaps), 1);
        assert_eq!(snaps[0].roster[0].username, "a");
    }

    #[test]
    fn tenures_round_trip_with_open_ends() {
        let tenures = vec![
            ModTenure {
                community: "c".into(),
                username: "a".into(),
                start_utc: 50,
                end_utc: Some(300),
                end_lower_utc: Some(200),
            },
            ModTenure {
                community: "c".into(),
                username: "b".into(),
                start_utc: 150,
                end_utc: None,
                end_lower_utc: None,
            },
        ];
        let mut out = Vec::new();
        write_tenures(&mut out, &tenures).unwrap();
        let text = String::from_utf8(out.clone()).unwrap();
        assert!(text.starts_with("community,username,start_utc,end_utc,end_lower_utc\n"));
        assert!(text.contains("c,b,150,,\n"));
        assert_eq!(read_tenures_from(&out[..]).unwrap(), tenures);
    }

    #[test]
    fn botlist_is_lowercased() {
        let bots = read_botlist_from("AutoModerator\n# comment\n\n  BotDefense \n".as_bytes()).unwrap();
        assert!(bots.contains("automoderator"));
        assert!(bots.contains("botdefense"));
        assert_eq!(bots.len(), 2);
    }
}
