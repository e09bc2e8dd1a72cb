//! Synthetic data with known ground truth.
//!
//! Every generator is a pure function of its spec. Randomness comes from
//! ChaCha8 streams keyed by the `SynthSpec` seed, drawn in a fixed order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::bins::BinEdges;
use crate::did::AppointmentEvent;
use crate::error::{Error, Result};
use crate::model::{
    CovariateTable, DiscourseEvent, EventKind, ModTenure, Sentiment, Window, DAY,
};
use crate::stats::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthSpec {
    pub n: usize,
    /// Confounder strength: outcome loading on the covariate.
    pub gamma: f64,
    /// True effect: one value per treatment bin, or a single scalar.
    pub effect: Vec<f64>,
    /// Outcome noise standard deviation.
    pub sigma: f64,
    /// Background trend per 28-day period.
    pub trend: f64,
    pub seed: u64,
    /// Treatment loading on the covariate: `T = exp(a x + tau eta)`.
    pub treatment_loading: f64,
    pub treatment_noise: f64,
    pub bin_edges: Vec<f64>,
    /// Panel length in days.
    pub days: i64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n: 10_000,
            gamma: 1.0,
            effect: vec![0.0],
            sigma: 1.6,
            trend: 0.0,
            seed: 0,
            treatment_loading: 1.0,
            treatment_noise: 1.0,
            bin_edges: vec![1.0],
            days: 224,
        }
    }
}

impl SynthSpec {
    /// Panel defaults: 200 communities, 5pp effect, 1pp per period trend.
    pub fn did_default() -> Self {
        SynthSpec {
            n: 200,
            effect: vec![5.0],
            sigma: 2.0,
            trend: 1.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return Err(Error::InvalidParameter(format!("n = {} < 10", self.n)));
        }
        if self.sigma.is_nan() || self.sigma < 0.0 {
            return Err(Error::InvalidParameter(format!("sigma = {}", self.sigma)));
        }
        if self.effect.is_empty() {
            return Err(Error::InvalidParameter("effect must be non-empty".into()));
        }
        Ok(())
    }

    fn rng(&self, tag: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(derive_seed(self.seed, tag))
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Standard logistic draw by inverting the CDF.
fn logistic(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random_range(f64::EPSILON..1.0);
    (u / (1.0 - u)).ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossSection {
    /// One covariate, `x`, per unit.
    pub covariates: CovariateTable,
    pub treatments: Vec<f64>,
    pub outcomes: Vec<f64>,
    pub bins: BinEdges,
    /// The true mean outcome in each bin, net of confounding.
    pub true_curve: Vec<f64>,
}

/// `x ~ N(0, 1)`, `T = exp(a x + tau eta)`, `y = f(bin(T)) + gamma x + sigma eps`,
/// with `eta` standard logistic and `eps` standard normal. Logistic treatment
/// noise makes `P(T >= e | x)` exactly logistic in `x` for any edge `e`.
pub fn gen_confounded_crosssection(spec: &SynthSpec) -> Result<CrossSection> {
    spec.validate()?;
    let bins = BinEdges::new(spec.bin_edges.clone())?;
    let k = bins.n_bins();
    let true_curve = match spec.effect.len() {
        1 => vec![spec.effect[0]; k],
        m if m == k => spec.effect.clone(),
        m => {
            return Err(Error::InvalidParameter(format!(
                "effect curve has {m} values for {k} bins"
            )))
        }
    };
    let mut rng = spec.rng(1);
    let mut covariates = CovariateTable::new(vec!["x".into()]);
    let mut treatments = Vec::with_capacity(spec.n);
    let mut outcomes = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let x = normal(&mut rng);
        let t = (spec.treatment_loading * x + spec.treatment_noise * logistic(&mut rng)).exp();
        let b = bins.assign(t)?;
        let y = true_curve[b] + spec.gamma * x + spec.sigma * normal(&mut rng);
        covariates.push(format!("u{i:05}"), vec![x])?;
        treatments.push(t);
        outcomes.push(y);
    }
    Ok(CrossSection {
        covariates,
        treatments,
        outcomes,
        bins,
        true_curve,
    })
}

/// A cross-section rendered as raw events and tenures, so that workload and
/// sentiment are recomputed by the regular pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadFixture {
    pub events: Vec<DiscourseEvent>,
    pub tenures: Vec<ModTenure>,
    pub covariates: CovariateTable,
    pub period: Window,
}

pub const WORKLOAD_ITEMS: usize = 200;
pub const WORKLOAD_LABELED: usize = 100;

/// Each community gets [`WORKLOAD_ITEMS`] items over `days` and a team whose
/// time-averaged size yields the generated workload. The outcome becomes the
/// positive share of [`WORKLOAD_LABELED`] labeled items, `50 + 5 y` percent.
pub fn materialize_workload(cs: &CrossSection, start_utc: i64, days: i64) -> Result<WorkloadFixture> {
    let period = Window::new(start_utc, start_utc + days * DAY)?;
    let span = period.seconds();
    let mut events = Vec::new();
    let mut tenures = Vec::new();
    let mut covariates = CovariateTable::new(cs.covariates.names.clone());
    for (i, row) in cs.covariates.rows.iter().enumerate() {
        let community = format!("s{i:05}");
        let positives = (50.0 + 5.0 * cs.outcomes[i]).round().clamp(0.0, WORKLOAD_LABELED as f64) as usize;
        for k in 0..WORKLOAD_ITEMS {
            let label = if k < positives {
                Some(Sentiment::Positive)
            } else if k < WORKLOAD_LABELED {
                Some(if k % 2 == 0 { Sentiment::Neutral } else { Sentiment::Negative })
            } else {
                None
            };
            events.push(DiscourseEvent {
                event_id: format!("{community}-{k:03}"),
                community: community.clone(),
                author: format!("user{}", k % 17),
                created_utc: start_utc + (k as i64 * span) / WORKLOAD_ITEMS as i64,
                kind: if k % 3 == 0 { EventKind::Post } else { EventKind::Comment },
                author_is_mod: false,
                removed: false,
                deleted: false,
                label,
            });
        }
        // Mean team size that produces the target workload.
        let size = WORKLOAD_ITEMS as f64 / (days as f64 * cs.treatments[i]);
        let full = size.floor() as usize;
        let partial = ((size - full as f64) * span as f64).round() as i64;
        for m in 0..full {
            tenures.push(ModTenure {
                community: community.clone(),
                username: format!("mod{m}"),
                start_utc: start_utc - DAY,
                end_utc: None,
                end_lower_utc: None,
            });
        }
        if partial > 0 {
            tenures.push(ModTenure {
                community: community.clone(),
                username: format!("mod{full}"),
                start_utc,
                end_utc: Some(start_utc + partial),
                end_lower_utc: Some(start_utc + partial - 1),
            });
        }
        covariates.push(community, row.values.clone())?;
    }
    Ok(WorkloadFixture {
        events,
        tenures,
        covariates,
        period,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DidPanel {
    pub events: Vec<DiscourseEvent>,
    pub appointments: Vec<AppointmentEvent>,
    pub true_effect: f64,
    pub start_utc: i64,
}

pub const PANEL_START: i64 = 1_600_000_000 / DAY * DAY;
pub const LABELED_PER_DAY: usize = 10;
pub const UNLABELED_PER_DAY: usize = 10;

/// A panel of `n` communities observed for `spec.days` days, each with one
/// appointment at a day boundary; even-numbered communities are treated.
///
/// A community's daily positive share is its base rate (a multiple of 10
/// percent) plus the shared trend, plus `sigma` Gaussian noise, plus the
/// effect from `t0` on when treated. Daily label counts are realized by error
/// diffusion over the running expected count, so window shares track the
/// underlying rates; with no trend and no noise they are exact.
pub fn gen_did_panel(spec: &SynthSpec) -> Result<DidPanel> {
    spec.validate()?;
    if spec.days < 4 * 28 {
        return Err(Error::InvalidParameter(format!("panel of {} days is too short", spec.days)));
    }
    let effect = spec.effect[0];
    let mut rng = spec.rng(2);
    let per_day = LABELED_PER_DAY + UNLABELED_PER_DAY;
    let mut events = Vec::with_capacity(spec.n * spec.days as usize * per_day);
    let mut appointments = Vec::with_capacity(spec.n);
    for c in 0..spec.n {
        let community = format!("p{c:04}");
        let treated = c % 2 == 0;
        let base = 10.0 * rng.random_range(2..=6) as f64;
        let t0_day = rng.random_range(28..=spec.days - 28);
        let t0 = PANEL_START + t0_day * DAY;
        appointments.push(AppointmentEvent::new(&community, format!("newmod{c}"), t0).with("treated", treated));

        let mut expected = 0.0f64;
        let mut realized = 0usize;
        for day in 0..spec.days {
            let mut pct = base + spec.trend * day as f64 / 28.0 + spec.sigma * normal(&mut rng);
            if treated && day >= t0_day {
                pct += effect;
            }
            expected += LABELED_PER_DAY as f64 * pct.clamp(0.0, 100.0) / 100.0;
            let target = ((expected + 1e-6).floor() as usize).max(realized);
            let positives = (target - realized).min(LABELED_PER_DAY);
            realized += positives;

            let day_start = PANEL_START + day * DAY;
            for k in 0..per_day {
                let label = if k % 2 == 1 {
                    None
                } else {
                    let j = k / 2;
                    Some(if j < positives {
                        Sentiment::Positive
                    } else if j % 2 == 0 {
                        Sentiment::Neutral
                    } else {
                        Sentiment::Negative
                    })
                };
                events.push(DiscourseEvent {
                    event_id: format!("{community}-{day:03}-{k:02}"),
                    community: community.clone(),
                    author: format!("user{}", k % 7),
                    created_utc: day_start + k as i64 * (DAY / per_day as i64),
                    kind: if k % 4 == 0 { EventKind::Post } else { EventKind::Comment },
                    author_is_mod: false,
                    removed: false,
                    deleted: false,
                    label,
                });
            }
        }
    }
    Ok(DidPanel {
        events,
        appointments,
        true_effect: effect,
        start_utc: PANEL_START,
    })
}
