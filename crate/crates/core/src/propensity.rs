//! Binned inverse probability of treatment weighting.
//!
//! A continuous treatment is cut into bins. Each bin gets its own logistic
//! propensity model fitted one-versus-rest, every unit is weighted by the
//! inverse probability of the bin it actually landed in, and the weighted
//! per-bin outcome means form the adjusted dose-response curve. Balance is
//! checked per bin as the standardized difference between the weighted bin
//! mean of each covariate and the unweighted mean of the whole population.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::bins::BinEdges;
use crate::error::{Error, Result};
use crate::linalg::cholesky_solve;
use crate::model::{CovariateTable, TreatmentAssignment};
use crate::stats::{self, BootstrapConfig, Interval};

pub const SMD_THRESHOLD: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreatmentSpec {
    pub name: String,
    pub bins: BinEdges,
}

impl TreatmentSpec {
    pub fn new(name: impl Into<String>, edges: Vec<f64>) -> Result<Self> {
        Ok(TreatmentSpec {
            name: name.into(),
            bins: BinEdges::new(edges)?,
        })
    }
}

pub fn assign_bins(values: &[f64], spec: &TreatmentSpec) -> Result<Vec<usize>> {
    spec.bins.assign_all(values)
}

/// Treatment assignments with the one-vs-rest indicator for `target_bin`.
pub fn treatment_assignments(
    unit_ids: &[String],
    values: &[f64],
    spec: &TreatmentSpec,
    target_bin: usize,
) -> Result<Vec<TreatmentAssignment>> {
    let bins = assign_bins(values, spec)?;
    Ok(unit_ids
        .iter()
        .zip(values)
        .zip(bins)
        .map(|((id, &v), b)| TreatmentAssignment {
            unit_id: id.clone(),
            treatment_value: v,
            bin_index: b,
            z: b == target_bin,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogisticConfig {
    /// L2 penalty on standardized slopes (the intercept is unpenalized).
    pub ridge: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Standardized |coefficient| above which the data are declared separated.
    pub separation_limit: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            ridge: 1e-6,
            tol: 1e-8,
            max_iter: 100,
            separation_limit: 15.0,
        }
    }
}

/// A logistic model on internally standardized covariates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropensityModel {
    pub names: Vec<String>,
    pub means: Vec<f64>,
    /// Sample standard deviations; 0 marks a constant (dropped) covariate.
    pub stds: Vec<f64>,
    /// Coefficients on the standardized scale; 0 for dropped covariates.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

// log(1 + exp(eta)) without overflow
fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

impl PropensityModel {
    fn standardize<'a>(&'a self, x: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        x.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| if *s > 0.0 { (v - m) / s } else { 0.0 })
    }

    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        self.intercept
            + self
                .standardize(x)
                .zip(&self.coefficients)
                .map(|(v, b)| v * b)
                .sum::<f64>()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        sigmoid(self.linear_predictor(x))
    }

    pub fn predict_table(&self, table: &CovariateTable) -> Vec<f64> {
        table.rows.iter().map(|r| self.predict(&r.values)).collect()
    }

    /// Slopes on the original covariate scale.
    pub fn raw_coefficients(&self) -> Vec<f64> {
        self.coefficients
            .iter()
            .zip(&self.stds)
            .map(|(b, s)| if *s > 0.0 { b / s } else { 0.0 })
            .collect()
    }

    /// Intercept on the original covariate scale.
    pub fn raw_intercept(&self) -> f64 {
        self.intercept
            - self
                .coefficients
                .iter()
                .zip(self.means.iter().zip(&self.stds))
                .map(|(b, (m, s))| if *s > 0.0 { b * m / s } else { 0.0 })
                .sum::<f64>()
    }

    /// Gradient of the penalized log-likelihood with respect to
    /// `(intercept, standardized coefficients)`.
    pub fn penalized_score(&self, table: &CovariateTable, z: &[bool], ridge: f64) -> Vec<f64> {
        let mut g = vec![0.0; self.coefficients.len() + 1];
        for (row, &zi) in table.rows.iter().zip(z) {
            let r = zi as u8 as f64 - self.predict(&row.values);
            g[0] += r;
            for (j, xs) in self.standardize(&row.values).enumerate() {
                g[j + 1] += r * xs;
            }
        }
        for (j, b) in self.coefficients.iter().enumerate() {
            if self.stds[j] > 0.0 {
                g[j + 1] -= ridge * b;
            } else {
                g[j + 1] = 0.0;
            }
        }
        g
    }
}

/// Ridge-penalized logistic regression by iteratively reweighted least squares.
pub fn fit_logistic(
    table: &CovariateTable,
    z: &[bool],
    cfg: &LogisticConfig,
) -> Result<PropensityModel> {
    let n = table.len();
    if z.len() != n {
        return Err(Error::LengthMismatch(format!("{n} rows, {} outcomes", z.len())));
    }
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let n_pos = z.iter().filter(|&&v| v).count();
    if n_pos == 0 || n_pos == n {
        return Err(Error::SingleClass(n_pos == n));
    }

    let p = table.names.len();
    let mut means = vec![0.0; p];
    let mut stds = vec![0.0; p];
    let mut warnings = Vec::new();
    for j in 0..p {
        let col: Vec<f64> = table.rows.iter().map(|r| r.values[j]).collect();
        if let Some(k) = col.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                covariate: table.names[j].clone(),
                unit_id: table.rows[k].unit_id.clone(),
            });
        }
        means[j] = stats::mean(&col).expect("non-empty");
        let s = stats::sample_std(&col).unwrap_or(0.0);
        if s > 1e-12 * means[j].abs().max(1.0) {
            stds[j] = s;
        } else {
            warnings.push(format!("dropped constant covariate {}", table.names[j]));
        }
    }
    let active: Vec<usize> = (0..p).filter(|&j| stds[j] > 0.0).collect();
    let k = active.len() + 1;

    // Design rows: [1, standardized active covariates].
    let design: Vec<Vec<f64>> = table
        .rows
        .iter()
        .map(|r| {
            std::iter::once(1.0)
                .chain(active.iter().map(|&j| (r.values[j] - means[j]) / stds[j]))
                .collect()
        })
        .collect();
    let y: Vec<f64> = z.iter().map(|&v| v as u8 as f64).collect();

    let objective = |beta: &[f64]| -> f64 {
        let ll: f64 = design
            .iter()
            .zip(&y)
            .map(|(x, yi)| {
                let eta: f64 = x.iter().zip(beta).map(|(a, b)| a * b).sum();
                yi * eta - softplus(eta)
            })
            .sum();
        ll - 0.5 * cfg.ridge * beta[1..].iter().map(|b| b * b).sum::<f64>()
    };

    let mut beta = vec![0.0; k];
    beta[0] = (n_pos as f64 / (n - n_pos) as f64).ln();
    let mut converged = false;
    let mut iterations = 0;
    let mut current = objective(&beta);
    while iterations < cfg.max_iter {
        iterations += 1;
        let mut grad = vec![0.0; k];
        let mut hess = vec![0.0; k * k];
        for (x, yi) in design.iter().zip(&y) {
            let eta: f64 = x.iter().zip(&beta).map(|(a, b)| a * b).sum();
            let mu = sigmoid(eta);
            let w = (mu * (1.0 - mu)).max(1e-300);
            for a in 0..k {
                grad[a] += (yi - mu) * x[a];
                for b in 0..=a {
                    hess[a * k + b] += w * x[a] * x[b];
                }
            }
        }
        for a in 1..k {
            grad[a] -= cfg.ridge * beta[a];
            hess[a * k + a] += cfg.ridge;
        }
        for a in 0..k {
            for b in a + 1..k {
                hess[a * k + b] = hess[b * k + a];
            }
        }
        let Some(step) = cholesky_solve(&hess, &grad) else {
            return Err(separation_error(&beta, &active, table));
        };

        // Step halving keeps the penalized likelihood non-decreasing.
        let mut scale = 1.0;
        let mut candidate: Vec<f64>;
        let mut value;
        loop {
            candidate = beta.iter().zip(&step).map(|(b, s)| b + scale * s).collect();
            value = objective(&candidate);
            if value >= current - 1e-12 * current.abs().max(1.0) || scale < 1e-6 {
                break;
            }
            scale *= 0.5;
        }
        let change = beta
            .iter()
            .zip(&candidate)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        beta = candidate;
        current = value;

        if beta[1..].iter().any(|b| b.abs() > cfg.separation_limit) {
            return Err(separation_error(&beta, &active, table));
        }
        if change < cfg.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        warnings.push(format!("did not converge in {} iterations", cfg.max_iter));
    }

    let mut coefficients = vec![0.0; p];
    for (slot, &j) in active.iter().enumerate() {
        coefficients[j] = beta[slot + 1];
    }
    Ok(PropensityModel {
        names: table.names.clone(),
        means,
        stds,
        coefficients,
        intercept: beta[0],
        iterations,
        converged,
        warnings,
    })
}

fn separation_error(beta: &[f64], active: &[usize], table: &CovariateTable) -> Error {
    let (slot, coef) = beta[1..]
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, b)| (i, *b))
        .unwrap_or((0, 0.0));
    Error::Separation {
        covariate: active
            .get(slot)
            .map_or_else(|| "(intercept)".to_string(), |&j| table.names[j].clone()),
        coefficient: coef,
    }
}

/// Per-bin models and each unit's propensity for every bin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OneVsRest {
    pub models: Vec<PropensityModel>,
    /// `probabilities[i][b]`: unit i's modeled probability of landing in bin b.
    /// Fits are independent, so a row need not sum to 1.
    pub probabilities: Vec<Vec<f64>>,
}

impl OneVsRest {
    /// Each unit's probability of the bin it actually received.
    pub fn received(&self, bins: &[usize]) -> Vec<f64> {
        self.probabilities
            .iter()
            .zip(bins)
            .map(|(row, &b)| row[b])
            .collect()
    }
}

pub fn one_vs_rest_propensities(
    table: &CovariateTable,
    bins: &[usize],
    n_bins: usize,
    cfg: &LogisticConfig,
) -> Result<OneVsRest> {
    if bins.len() != table.len() {
        return Err(Error::LengthMismatch(format!(
            "{} rows, {} bin indices",
            table.len(),
            bins.len()
        )));
    }
    for b in 0..n_bins {
        let count = bins.iter().filter(|&&x| x == b).count();
        if count < 2 {
            return Err(Error::BinTooSmall { bin: b, count });
        }
    }
    let fit_bin = |b: usize| -> Result<PropensityModel> {
        let z: Vec<bool> = bins.iter().map(|&x| x == b).collect();
        fit_logistic(table, &z, cfg).map_err(|e| Error::BinFit {
            bin: b,
            source: Box::new(e),
        })
    };
    #[cfg(feature = "parallel")]
    let models: Vec<PropensityModel> = {
        use rayon::prelude::*;
        (0..n_bins).into_par_iter().map(fit_bin).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let models: Vec<PropensityModel> = (0..n_bins).map(fit_bin).collect::<Result<_>>()?;

    let probabilities = table
        .rows
        .iter()
        .map(|r| models.iter().map(|m| m.predict(&r.values)).collect())
        .collect();
    Ok(OneVsRest {
        models,
        probabilities,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightVector {
    pub weights: Vec<f64>,
    /// Weights before truncation.
    pub untrimmed: Vec<f64>,
    pub truncate_pct: f64,
    pub cap: Option<f64>,
    pub n_capped: usize,
}

/// `w = z/p + (1-z)/(1-p)`, then capped at the `truncate_pct` nearest-rank
/// percentile of all weights (100 disables the cap).
pub fn iptw_weights(p: &[f64], z: &[bool], truncate_pct: f64) -> Result<WeightVector> {
    if p.len() != z.len() {
        return Err(Error::LengthMismatch(format!("{} probabilities, {} indicators", p.len(), z.len())));
    }
    if !(truncate_pct > 0.0 && truncate_pct <= 100.0) {
        return Err(Error::InvalidParameter(format!("truncation percentile {truncate_pct}")));
    }
    let untrimmed = p
        .iter()
        .zip(z)
        .map(|(&pi, &zi)| {
            if !(pi > 0.0 && pi < 1.0) {
                return Err(Error::ProbabilityOutOfRange(pi));
            }
            let zf = zi as u8 as f64;
            Ok(zf / pi + (1.0 - zf) / (1.0 - pi))
        })
        .collect::<Result<Vec<f64>>>()?;
    let (weights, cap, n_capped) = if truncate_pct < 100.0 && !untrimmed.is_empty() {
        let mut sorted = untrimmed.clone();
        sorted.sort_by(f64::total_cmp);
        let cap = stats::nearest_rank(&sorted, truncate_pct);
        let n_capped = untrimmed.iter().filter(|&&w| w > cap).count();
        (untrimmed.iter().map(|&w| w.min(cap)).collect(), Some(cap), n_capped)
    } else {
        (untrimmed.clone(), None, 0)
    };
    Ok(WeightVector {
        weights,
        untrimmed,
        truncate_pct,
        cap,
        n_capped,
    })
}

/// Multiplies each weight by the marginal share of the unit's bin.
pub fn stabilize(weights: &mut [f64], bins: &[usize], n_bins: usize) {
    let n = bins.len() as f64;
    let mut counts = vec![0usize; n_bins];
    for &b in bins {
        counts[b] += 1;
    }
    for (w, &b) in weights.iter_mut().zip(bins) {
        *w *= counts[b] as f64 / n;
    }
}

/// Weighted mean among `in_group` minus the unweighted mean of `reference`,
/// over the reference sample standard deviation.
pub fn smd(values: &[f64], weights: &[f64], in_group: &[bool], reference: &[f64]) -> Result<f64> {
    let sd = stats::sample_std(reference).unwrap_or(0.0);
    if sd <= 0.0 {
        return Err(Error::ZeroVariance("reference".into()));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for ((v, w), &g) in values.iter().zip(weights).zip(in_group) {
        if g {
            num += v * w;
            den += w;
        }
    }
    if den <= 0.0 {
        return Err(Error::EmptyInput);
    }
    let reference_mean = stats::mean(reference).expect("sd implies non-empty");
    Ok((num / den - reference_mean) / sd)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceEntry {
    pub bin_label: String,
    pub covariate: String,
    pub smd: f64,
    /// Standardized coefficient of this covariate in the bin's propensity model.
    pub ps_coefficient: Option<f64>,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceReport {
    pub entries: Vec<BalanceEntry>,
    pub threshold: f64,
}

/// SMD for every (bin, covariate) pair. Constant covariates report 0.
pub fn balance_report(
    table: &CovariateTable,
    weights: &[f64],
    bins: &[usize],
    bin_labels: &[String],
    models: Option<&[PropensityModel]>,
) -> Result<BalanceReport> {
    if weights.len() != table.len() || bins.len() != table.len() {
        return Err(Error::LengthMismatch("weights/bins vs covariate rows".into()));
    }
    let mut entries = Vec::with_capacity(bin_labels.len() * table.names.len());
    for (b, label) in bin_labels.iter().enumerate() {
        let in_bin: Vec<bool> = bins.iter().map(|&x| x == b).collect();
        for (j, name) in table.names.iter().enumerate() {
            let col: Vec<f64> = table.rows.iter().map(|r| r.values[j]).collect();
            let value = match smd(&col, weights, &in_bin, &col) {
                Ok(v) => v,
                Err(Error::ZeroVariance(_)) => 0.0,
                Err(e) => return Err(e),
            };
            entries.push(BalanceEntry {
                bin_label: label.clone(),
                covariate: name.clone(),
                smd: value,
                ps_coefficient: models.and_then(|m| m.get(b)).map(|m| m.coefficients[j]),
                flagged: value.abs() >= SMD_THRESHOLD,
            });
        }
    }
    Ok(BalanceReport {
        entries,
        threshold: SMD_THRESHOLD,
    })
}

impl BalanceReport {
    pub fn max_abs_smd(&self) -> f64 {
        self.entries.iter().map(|e| e.smd.abs()).fold(0.0, f64::max)
    }

    pub fn flagged(&self) -> impl Iterator<Item = &BalanceEntry> {
        self.entries.iter().filter(|e| e.flagged)
    }

    /// Flagged entries on covariates the propensity model actually leans on
    /// (|standardized coefficient| at least `related`).
    pub fn imbalanced(&self, related: f64) -> Vec<&BalanceEntry> {
        self.flagged()
            .filter(|e| e.ps_coefficient.is_none_or(|c| c.abs() >= related))
            .collect()
    }

    pub fn smd_of(&self, bin_label: &str, covariate: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.bin_label == bin_label && e.covariate == covariate)
            .map(|e| e.smd)
    }
}

pub fn write_balance_report(out: impl Write, report: &BalanceReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin_label", "covariate", "smd", "ps_coefficient", "flagged"])?;
    for e in &report.entries {
        w.write_record([
            e.bin_label.clone(),
            e.covariate.clone(),
            e.smd.to_string(),
            e.ps_coefficient.map(|c| c.to_string()).unwrap_or_default(),
            e.flagged.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<balance>", e))?;
    Ok(())
}

/// Reads a balance table written by [`write_balance_report`]; `#` lines are skipped.
pub fn read_balance_report(input: impl Read) -> Result<BalanceReport> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let entries = rdr
        .deserialize::<BalanceEntry>()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(BalanceReport {
        entries,
        threshold: SMD_THRESHOLD,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DosePoint {
    pub bin: usize,
    pub label: String,
    pub n: usize,
    pub weighted_mean: f64,
    pub weighted_ci: Interval,
    pub unweighted_mean: f64,
    pub unweighted_ci: Interval,
}

/// Weighted and unweighted per-bin outcome means with unit-level bootstrap
/// intervals. Weights stay fixed across resamples.
pub fn dose_response(
    outcomes: &[f64],
    bins: &[usize],
    weights: &[f64],
    bin_labels: &[String],
    cfg: &BootstrapConfig,
) -> Result<Vec<DosePoint>> {
    if outcomes.len() != bins.len() || weights.len() != bins.len() {
        return Err(Error::LengthMismatch("outcomes/bins/weights".into()));
    }
    bin_labels
        .iter()
        .enumerate()
        .map(|(b, label)| {
            let members: Vec<usize> = (0..bins.len()).filter(|&i| bins[i] == b).collect();
            if members.is_empty() {
                return Err(Error::EmptyBin(b));
            }
            let y: Vec<f64> = members.iter().map(|&i| outcomes[i]).collect();
            let w: Vec<f64> = members.iter().map(|&i| weights[i]).collect();
            let n = y.len();
            let weighted_mean = stats::weighted_mean(&y, &w).ok_or(Error::EmptyBin(b))?;
            let unweighted_mean = stats::mean(&y).expect("non-empty");
            // The unweighted interval uses the same stream as a plain grouped
            // summary of bin b, so a single-bin analysis reproduces it.
            let unweighted_ci = stats::bootstrap(&cfg.derived(b as u64), |rng| {
                let sum: f64 = stats::resample_indices(rng, n).map(|i| y[i]).sum();
                Some(sum / n as f64)
            })?;
            let weighted_ci = stats::bootstrap(&cfg.derived(b as u64).derived(1), |rng| {
                let (mut num, mut den) = (0.0, 0.0);
                for i in stats::resample_indices(rng, n) {
                    num += w[i] * y[i];
                    den += w[i];
                }
                Some(num / den)
            })?;
            Ok(DosePoint {
                bin: b,
                label: label.clone(),
                n,
                weighted_mean,
                weighted_ci,
                unweighted_mean,
                unweighted_ci,
            })
        })
        .collect()
}

pub fn write_dose_response(out: impl Write, points: &[DosePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
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
    for p in points {
        w.write_record([
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
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IptwConfig {
    pub logistic: LogisticConfig,
    pub truncate_pct: f64,
    pub stabilized: bool,
    pub bootstrap: BootstrapConfig,
}

impl Default for IptwConfig {
    fn default() -> Self {
        IptwConfig {
            logistic: LogisticConfig::default(),
            truncate_pct: 99.0,
            stabilized: false,
            bootstrap: BootstrapConfig::default(),
        }
    }
}

/// Everything one binned IPTW analysis produces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IptwAnalysis {
    pub bin_labels: Vec<String>,
    pub bins: Vec<usize>,
    pub propensities: OneVsRest,
    pub weights: WeightVector,
    pub dose_response: Vec<DosePoint>,
    pub balance: BalanceReport,
}

pub fn run_iptw(
    table: &CovariateTable,
    treatment: &[f64],
    outcomes: &[f64],
    spec: &TreatmentSpec,
    cfg: &IptwConfig,
) -> Result<IptwAnalysis> {
    if treatment.len() != table.len() || outcomes.len() != table.len() {
        return Err(Error::LengthMismatch(format!(
            "{} rows, {} treatments, {} outcomes",
            table.len(),
            treatment.len(),
            outcomes.len()
        )));
    }
    let bins = assign_bins(treatment, spec)?;
    let labels = spec.bins.labels();
    let (propensities, mut weights) = if labels.len() == 1 {
        // Every unit received the only bin with certainty.
        let n = table.len();
        let ones = vec![1.0; n];
        (
            OneVsRest {
                models: Vec::new(),
                probabilities: vec![vec![1.0]; n],
            },
            WeightVector {
                weights: ones.clone(),
                untrimmed: ones,
                truncate_pct: cfg.truncate_pct,
                cap: None,
                n_capped: 0,
            },
        )
    } else {
        let propensities = one_vs_rest_propensities(table, &bins, labels.len(), &cfg.logistic)?;
        let received = propensities.received(&bins);
        let weights = iptw_weights(&received, &vec![true; received.len()], cfg.truncate_pct)?;
        (propensities, weights)
    };
    if cfg.stabilized {
        stabilize(&mut weights.weights, &bins, labels.len());
    }
    let dose = dose_response(outcomes, &bins, &weights.weights, &labels, &cfg.bootstrap)?;
    let balance = balance_report(table, &weights.weights, &bins, &labels, Some(&propensities.models))?;
    Ok(IptwAnalysis {
        bin_labels: labels,
        bins,
        propensities,
        weights,
        dose_response: dose,
        balance,
    })
}
