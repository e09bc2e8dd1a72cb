//! Browser bindings for three interactive explorers. Every entry point takes
//! plain numbers or JSON text and returns JSON text.

use modgov::acquisition::default_botlist;
use modgov::acquisition::filter_bots_snapshots;
use modgov::chart::render_svg;
use modgov::did::{did_estimate, CohortWeighting, DidConfig, EventIndex};
use modgov::discourse::Statistic;
use modgov::model::ModSnapshot;
use modgov::propensity::{run_iptw, IptwConfig, TreatmentSpec};
use modgov::stats::BootstrapConfig;
use modgov::studies::dose_chart;
use modgov::synth::{gen_confounded_crosssection, gen_did_panel, SynthSpec};
use modgov::timelines::merge_snapshots;
use serde_json::json;
use wasm_bindgen::prelude::*;

const RESAMPLES: usize = 300;

fn bootstrap(seed: u64) -> BootstrapConfig {
    BootstrapConfig {
        resamples: RESAMPLES,
        seed,
        ..Default::default()
    }
}

fn parse_edges(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("bad bin edge {s:?}")))
        .collect()
}

/// Synthetic confounded cross-section, then the adjusted and naive curves.
pub fn iptw_demo(n: usize, gamma: f64, edges: &str, truncate_pct: f64, seed: u64) -> Result<String, String> {
    let edges = parse_edges(edges)?;
    let cs = gen_confounded_crosssection(&SynthSpec {
        n,
        gamma,
        seed,
        bin_edges: edges.clone(),
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;
    let spec = TreatmentSpec::new("treatment", edges).map_err(|e| e.to_string())?;
    let cfg = IptwConfig {
        truncate_pct,
        bootstrap: bootstrap(seed),
        ..Default::default()
    };
    let a = run_iptw(&cs.covariates, &cs.treatments, &cs.outcomes, &spec, &cfg).map_err(|e| e.to_string())?;
    let chart = dose_chart("Outcome by treatment bin", "treatment bin", "outcome", &a.dose_response);
    Ok(json!({
        "dose_response": a.dose_response,
        "true_curve": cs.true_curve,
        "max_abs_smd": a.balance.max_abs_smd(),
        "balance": a.balance,
        "n_capped": a.weights.n_capped,
        "svg": render_svg(&chart),
    })
    .to_string())
}

/// Synthetic appointment panel, then the cohort-aligned DID estimate.
pub fn did_demo(n: usize, effect: f64, trend: f64, sigma: f64, pooled: bool, seed: u64) -> Result<String, String> {
    let panel = gen_did_panel(&SynthSpec {
        n,
        effect: vec![effect],
        trend,
        sigma,
        seed,
        ..SynthSpec::did_default()
    })
    .map_err(|e| e.to_string())?;
    let index = EventIndex::new(&panel.events);
    let cfg = DidConfig {
        weighting: if pooled { CohortWeighting::Pooled } else { CohortWeighting::Treated },
        bootstrap: bootstrap(seed),
        ..Default::default()
    };
    let r = did_estimate(&panel.appointments, &index, "treated", Statistic::CompositionPositive, &cfg)
        .map_err(|e| e.to_string())?;
    Ok(json!({
        "true_effect": panel.true_effect,
        "estimate_pp": r.estimate,
        "ci": r.ci,
        "naive_treated_pp": r.naive_treated,
        "n_treated": r.n_treated,
        "n_control": r.n_control,
        "cohorts": r.cohorts,
    })
    .to_string())
}

/// Roster snapshots, one JSON object per line, merged into tenures.
pub fn timeline_demo(snapshots_jsonl: &str, drop_bots: bool) -> Result<String, String> {
    let mut snapshots = Vec::new();
    for (i, line) in snapshots_jsonl.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let s: ModSnapshot = serde_json::from_str(line).map_err(|e| format!("line {}: {e}", i + 1))?;
        snapshots.push(s);
    }
    if drop_bots {
        filter_bots_snapshots(&mut snapshots, &default_botlist());
    }
    let tenures = merge_snapshots(&snapshots).map_err(|e| e.to_string())?;
    Ok(json!({ "tenures": tenures }).to_string())
}

#[wasm_bindgen(js_name = iptwDemo)]
pub fn iptw_demo_js(n: usize, gamma: f64, edges: &str, truncate_pct: f64, seed: u32) -> Result<String, JsValue> {
    iptw_demo(n, gamma, edges, truncate_pct, seed.into()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = didDemo)]
pub fn did_demo_js(n: usize, effect: f64, trend: f64, sigma: f64, pooled: bool, seed: u32) -> Result<String, JsValue> {
    did_demo(n, effect, trend, sigma, pooled, seed.into()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = timelineDemo)]
pub fn timeline_demo_js(snapshots_jsonl: &str, drop_bots: bool) -> Result<String, JsValue> {
    timeline_demo(snapshots_jsonl, drop_bots).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn iptw_flattens_confounded_curve() {
        let v: Value = serde_json::from_str(&iptw_demo(3000, 1.0, "1", 100.0, 5).unwrap()).unwrap();
        let pts = v["dose_response"].as_array().unwrap();
        assert_eq!(pts.len(), 2);
        let gap = pts[1]["weighted_mean"].as_f64().unwrap() - pts[0]["weighted_mean"].as_f64().unwrap();
        assert!(gap.abs() < 0.3, "{gap}");
        assert!(v["svg"].as_str().unwrap().starts_with("<svg"));
    }

    #[test]
    fn did_recovers_effect() {
        let v: Value = serde_json::from_str(&did_demo(100, 5.0, 1.0, 2.0, false, 1).unwrap()).unwrap();
        let est = v["estimate_pp"].as_f64().unwrap();
        assert!((est - 5.0).abs() < 1.5, "{est}");
    }

    #[test]
    fn timeline_merges_and_reports_bad_lines() {
        let text = r#"{"community":"c","captured_utc":10,"roster":[{"username":"a","appointed_utc":5,"rank":0}]}
{"community":"c","captured_utc":20,"roster":[]}"#;
        let v: Value = serde_json::from_str(&timeline_demo(text, true).unwrap()).unwrap();
        assert_eq!(v["tenures"][0]["end_utc"], 20);
        assert!(timeline_demo("{", false).unwrap_err().starts_with("line 1"));
    }

    #[test]
    fn bad_edges_are_rejected() {
        assert!(iptw_demo(100, 1.0, "1,x", 99.0, 0).is_err());
    }
}
