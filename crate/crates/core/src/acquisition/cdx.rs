//! Wayback Machine CDX index queries for moderator-page captures.
//!
//! Only query construction, response parsing, and a retrying fetch loop live
//! here. The HTTP client is supplied by the caller through [`CdxTransport`].

use std::time::Duration;

use chrono::NaiveDateTime;

use crate::error::{Error, Result};

pub const CDX_ENDPOINT: &str = "http://web.archive.org/cdx/search/cdx";
pub const DEFAULT_FIELDS: [&str; 4] = ["timestamp", "original", "statuscode", "digest"];
const TS_FORMAT: &str = "%Y%m%d%H%M%S";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CdxQuery {
    pub target_url_pattern: String,
    pub from_ts: String,
    pub to_ts: String,
    pub fields: Vec<String>,
}

impl CdxQuery {
    /// Captures of `reddit.com/r/<community>/about/moderators*` across whole years.
    pub fn moderators_page(community: &str, from_year: i32, to_year: i32) -> Result<Self> {
        if community.is_empty()
            || community.contains('/')
            || community.chars().any(char::is_whitespace)
        {
            return Err(Error::InvalidCommunity(community.to_string()));
        }
        if from_year < 2005 {
            return Err(Error::YearTooEarly(from_year));
        }
        if to_year < from_year {
            return Err(Error::InvertedYearRange {
                from: from_year,
                to: to_year,
            });
        }
        Ok(CdxQuery {
            target_url_pattern: format!("reddit.com/r/{community}/about/moderators"),
            from_ts: format!("{from_year:04}0101000000"),
            to_ts: format!("{to_year:04}1231235959"),
            fields: DEFAULT_FIELDS.iter().map(|s| s.to_string()).collect(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        parse_timestamp(&self.from_ts)?;
        parse_timestamp(&self.to_ts)?;
        if self.from_ts > self.to_ts {
            return Err(Error::InvalidParameter(format!(
                "from {} after to {}",
                self.from_ts, self.to_ts
            )));
        }
        if self.fields.is_empty() {
            return Err(Error::InvalidParameter("empty CDX field list".into()));
        }
        Ok(())
    }

    /// Renders the query string. Day-aligned bounds are shortened to their
    /// 8-digit date prefix, which the CDX server expands to the same range.
    pub fn to_url(&self) -> String {
        let from = self.from_ts.strip_suffix("000000").unwrap_or(&self.from_ts);
        let to = self.to_ts.strip_suffix("235959").unwrap_or(&self.to_ts);
        let query = form_urlencoded::Serializer::new(String::new())
            .append_pair("url", &self.target_url_pattern)
            .append_pair("from", from)
            .append_pair("to", to)
            .append_pair("matchType", "prefix")
            .append_pair("output", "json")
            .append_pair("fl", &self.fields.join(","))
            .finish();
        format!("{CDX_ENDPOINT}?{query}")
    }

    pub fn from_url(url: &str) -> Result<Self> {
        let query = url
            .strip_prefix(CDX_ENDPOINT)
            .and_then(|rest| rest.strip_prefix('?'))
            .ok_or_else(|| Error::InvalidParameter(format!("not a CDX url: {url}")))?;
        let mut q = CdxQuery {
            target_url_pattern: String::new(),
            from_ts: String::new(),
            to_ts: String::new(),
            fields: Vec::new(),
        };
        for (key, value) in form_urlencoded::parse(query.as_bytes()) {
            match key.as_ref() {
                "url" => q.target_url_pattern = value.into_owned(),
                "from" => q.from_ts = pad_timestamp(&value, false),
                "to" => q.to_ts = pad_timestamp(&value, true),
                "fl" => q.fields = value.split(',').map(str::to_string).collect(),
                _ => {}
            }
        }
        q.validate()?;
        Ok(q)
    }
}

// Expands a CDX timestamp prefix (4, 6, 8, ... digits) to 14 digits. Lower
// bounds take the earliest instant of the prefix, upper bounds the latest.
fn pad_timestamp(prefix: &str, upper: bool) -> String {
    const LOW: &str = "00000101000000";
    const HIGH: &str = "99991231235959";
    if prefix.len() >= 14 {
        return prefix[..14].to_string();
    }
    let fill = if upper { HIGH } else { LOW };
    format!("{prefix}{}", &fill[prefix.len()..])
}

pub fn parse_timestamp(ts: &str) -> Result<i64> {
    if ts.len() != 14 || !ts.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::InvalidParameter(format!("bad CDX timestamp {ts:?}")));
    }
    NaiveDateTime::parse_from_str(ts, TS_FORMAT)
        .map(|dt| dt.and_utc().timestamp())
        .map_err(|e| Error::InvalidParameter(format!("bad CDX timestamp {ts:?}: {e}")))
}

pub fn format_timestamp(utc: i64) -> Option<String> {
    chrono::DateTime::from_timestamp(utc, 0).map(|dt| dt.format(TS_FORMAT).to_string())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CdxRecord {
    pub capture_ts: String,
    pub capture_utc: i64,
    pub original_url: String,
    /// `None` when the index reports `-` (revisit records).
    pub status_code: Option<u16>,
    pub digest: String,
}

impl CdxRecord {
    pub fn is_ok(&self) -> bool {
        self.status_code == Some(200)
    }
}

/// Parses a JSON array-of-arrays response whose first row names the columns.
pub fn parse_cdx_response(body: &[u8]) -> Result<Vec<CdxRecord>> {
    let value: serde_json::Value = serde_json::from_slice(body)?;
    let rows = value.as_array().ok_or(Error::ExpectedArray)?;
    let Some((header, data)) = rows.split_first() else {
        return Ok(Vec::new());
    };
    let header = string_row(header, 0)?;
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingCdxField(name.to_string()))
    };
    let (ts, orig, status, digest) = (
        col("timestamp")?,
        col("original")?,
        col("statuscode")?,
        col("digest")?,
    );
    data.iter()
        .enumerate()
        .map(|(i, row)| {
            let row_no = i + 1;
            let cells = string_row(row, row_no)?;
            if cells.len() != header.len() {
                return Err(Error::BadCdxRow {
                    row: row_no,
                    reason: format!("{} cells for {} columns", cells.len(), header.len()),
                });
            }
            let capture_utc = parse_timestamp(&cells[ts]).map_err(|e| Error::BadCdxRow {
                row: row_no,
                reason: e.to_string(),
            })?;
            let status_code = match cells[status].as_str() {
                "-" => None,
                s => Some(s.parse().map_err(|_| Error::BadCdxRow {
                    row: row_no,
                    reason: format!("status code {s:?}"),
                })?),
            };
            Ok(CdxRecord {
                capture_ts: cells[ts].clone(),
                capture_utc,
                original_url: cells[orig].clone(),
                status_code,
                digest: cells[digest].clone(),
            })
        })
        .collect()
}

fn string_row(row: &serde_json::Value, row_no: usize) -> Result<Vec<String>> {
    let cells = row.as_array().ok_or_else(|| Error::BadCdxRow {
        row: row_no,
        reason: "row is not an array".into(),
    })?;
    cells
        .iter()
        .map(|c| match c {
            serde_json::Value::String(s) => Ok(s.clone()),
            serde_json::Value::Number(n) => Ok(n.to_string()),
            _ => Err(Error::BadCdxRow {
                row: row_no,
                reason: format!("non-scalar cell {c}"),
            }),
        })
        .collect()
}

/// The single network boundary. Implementations perform one GET.
pub trait CdxTransport {
    fn get(&self, url: &str) -> std::result::Result<Vec<u8>, String>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            initial_backoff: Duration::from_secs(1),
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (1-based), doubling each time.
    pub fn backoff(&self, retry: u32) -> Duration {
        self.initial_backoff * 2u32.saturating_pow(retry.saturating_sub(1))
    }
}

/// Fetches and parses a query, retrying transport failures with exponential
/// backoff. `sleep` is injected so tests can observe delays without waiting.
pub fn fetch_captures(
    transport: &dyn CdxTransport,
    query: &CdxQuery,
    policy: RetryPolicy,
    mut sleep: impl FnMut(Duration),
) -> Result<Vec<CdxRecord>> {
    query.validate()?;
    let url = query.to_url();
    let mut last_err = String::new();
    for attempt in 0..policy.attempts.max(1) {
        if attempt > 0 {
            sleep(policy.backoff(attempt));
        }
        match transport.get(&url) {
            Ok(body) => return parse_cdx_response(&body),
            Err(e) => last_err = e,
        }
    }
    Err(Error::InvalidParameter(format!(
        "CDX fetch failed after {} attempts: {last_err}",
        policy.attempts
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::Cell;

    #[test]
    fn askreddit_query() {
        let q = CdxQuery::moderators_page("askreddit", 2010, 2021).unwrap();
        let url = q.to_url();
        assert!(url.starts_with(CDX_ENDPOINT));
        assert!(
            url.contains("url=reddit.com%2Fr%2Faskreddit%2Fabout%2Fmoderators&from=20100101&to=20211231"),
            "{url}"
        );
        assert!(url.contains("output=json"));
        assert!(url.contains("matchType=prefix"));
        assert_eq!(CdxQuery::from_url(&url).unwrap(), q);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(
            CdxQuery::moderators_page("", 2010, 2021),
            Err(Error::InvalidCommunity(_))
        ));
        assert!(matches!(
            CdxQuery::moderators_page("a/b", 2010, 2021),
            Err(Error::InvalidCommunity(_))
        ));
        let err = CdxQuery::moderators_page("x", 2021, 2010).unwrap_err();
        assert!(err.to_string().contains("inverted year range"));
        assert!(CdxQuery::moderators_page("x", 2004, 2010).is_err());
    }

    #[test]
    fn parses_rows_by_header_position() {
        let body = br#"[["original","timestamp","digest","statuscode"],
            ["http://reddit.com/r/x/about/moderators","20120304050607","AAA","200"],
            ["http://reddit.com/r/x/about/moderators/","20130101000000","BBB","301"]]"#;
        let recs = parse_cdx_response(body).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].capture_ts, "20120304050607");
        assert_eq!(recs[0].digest, "AAA");
        assert_eq!(recs[0].capture_utc, 1_330_837_567);
        assert!(recs[0].is_ok());
        assert_eq!(recs[1].status_code, Some(301));
        assert!(!recs[1].is_ok());
    }

    #[test]
    fn header_only_and_bad_payloads() {
        assert!(parse_cdx_response(br#"[["timestamp","original","statuscode","digest"]]"#)
            .unwrap()
            .is_empty());
        assert!(parse_cdx_response(b"[]").unwrap().is_empty());
        let err = parse_cdx_response(b"{}").unwrap_err();
        assert_eq!(err.to_string(), "expected array response");
        assert!(matches!(
            parse_cdx_response(br#"[["timestamp","original","statuscode"]]"#),
            Err(Error::MissingCdxField(f)) if f == "digest"
        ));
        assert!(parse_cdx_response(br#"[["timestamp","original","statuscode","digest"],["20121340000000","u","200","d"]]"#).is_err());
    }

    #[test]
    fn revisit_status_is_flagged() {
        let body = br#"[["timestamp","original","statuscode","digest"],["20150101000000","u","-","d"]]"#;
        let recs = parse_cdx_response(body).unwrap();
        assert_eq!(recs[0].status_code, None);
        assert!(!recs[0].is_ok());
    }

    struct Flaky {
        failures: Cell<u32>,
        body: &'static [u8],
    }

    impl CdxTransport for Flaky {
        fn get(&self, _url: &str) -> std::result::Result<Vec<u8>, String> {
            if self.failures.get() > 0 {
                self.failures.set(self.failures.get() - 1);
                Err("503".into())
            } else {
                Ok(self.body.to_vec())
            }
        }
    }

    #[test]
    fn retries_with_doubling_backoff() {
        let t = Flaky {
            failures: Cell::new(2),
            body: br#"[["timestamp","original","statuscode","digest"],["20150101000000","u","200","d"]]"#,
        };
        let q = CdxQuery::moderators_page("x", 2015, 2015).unwrap();
        let mut slept = Vec::new();
        let recs = fetch_captures(&t, &q, RetryPolicy::default(), |d| slept.push(d)).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(slept, vec![Duration::from_secs(1), Duration::from_secs(2)]);

        let t = Flaky {
            failures: Cell::new(3),
            body: b"[]",
        };
        assert!(fetch_captures(&t, &q, RetryPolicy::default(), |_| {}).is_err());
    }

    #[test]
    fn timestamp_round_trip() {
        let utc = parse_timestamp("20211231235959").unwrap();
        assert_eq!(format_timestamp(utc).unwrap(), "20211231235959");
    }
}
