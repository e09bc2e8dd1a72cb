use std::path::PathBuf;

/// Errors raised anywhere in the toolkit.
///
/// Variants carry enough location data (event id, line number, bin, covariate)
/// for a caller to point at the offending record.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed timestamp in event {event_id}: {value}")]
    MalformedTimestamp { event_id: String, value: i64 },

    #[error("contradictory removal flags in event {event_id}")]
    ContradictoryFlags { event_id: String },

    #[error("unknown kind {0:?}")]
    UnknownKind(String),

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("invalid community id {0:?}")]
    InvalidCommunity(String),

    #[error("inverted year range {from}..{to}")]
    InvertedYearRange { from: i32, to: i32 },

    #[error("year {0} precedes the archive (minimum 2005)")]
    YearTooEarly(i32),

    #[error("expected array response")]
    ExpectedArray,

    #[error("CDX header missing field {0:?}")]
    MissingCdxField(String),

    #[error("bad CDX row {row}: {reason}")]
    BadCdxRow { row: usize, reason: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("duplicate unit id {unit_id:?} at line {line}")]
    DuplicateUnit { unit_id: String, line: usize },

    #[error("snapshot for {community} at {captured_utc}: {reason}")]
    BadSnapshot {
        community: String,
        captured_utc: i64,
        reason: String,
    },

    #[error("corrupt snapshots: {username} in {community} changes appointed_utc {first} -> {second} within one run")]
    CorruptRun {
        community: String,
        username: String,
        first: i64,
        second: i64,
    },

    #[error("no snapshots supplied")]
    NoSnapshots,

    #[error("no moderators in window")]
    NoModerators,

    #[error("empty window [{start}, {end})")]
    EmptyWindow { start: i64, end: i64 },

    #[error("empty community-period")]
    EmptyCommunityPeriod,

    #[error("no in-scope mod discourse")]
    NoModDiscourse,

    #[error("empty input")]
    EmptyInput,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("negative treatment value {0}")]
    NegativeTreatment(f64),

    #[error("non-finite covariate {covariate} for unit {unit_id}")]
    NonFinite { covariate: String, unit_id: String },

    #[error("single-class outcome: every unit has z = {0}")]
    SingleClass(bool),

    #[error("separation detected on covariate {covariate} (standardized coefficient {coefficient:.2})")]
    Separation { covariate: String, coefficient: f64 },

    #[error("bin too small: bin {bin} has {count} unit(s)")]
    BinTooSmall { bin: usize, count: usize },

    #[error("propensity fit failed for bin {bin}: {source}")]
    BinFit {
        bin: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("probability {0} outside (0, 1)")]
    ProbabilityOutOfRange(f64),

    #[error("zero-variance covariate {0}")]
    ZeroVariance(String),

    #[error("empty bin {0}")]
    EmptyBin(usize),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("no cohort contains both arms")]
    NoOverlappingCohort,

    #[error("single-arm study")]
    SingleArm,

    #[error("attribute {attribute} on appointment {community}/{username} is not boolean")]
    NonBooleanAttribute {
        attribute: String,
        community: String,
        username: String,
    },

    #[error("unknown covariate {0:?}")]
    UnknownCovariate(String),

    #[error("unknown study {0:?}")]
    UnknownStudy(String),

    #[error("unknown statistic {0:?}")]
    UnknownStatistic(String),

    #[error("config: {0}")]
    Config(String),

    #[error("missing input {0}")]
    MissingInput(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
