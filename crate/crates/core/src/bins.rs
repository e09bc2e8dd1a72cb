//! Left-closed, right-open binning of non-negative values: `[0, e1)`,
//! `[e1, e2)`, ..., `[ek, inf)`. No edges means a single bin, `all`.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinEdges {
    edges: Vec<f64>,
}

impl BinEdges {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.iter().any(|e| !e.is_finite() || *e <= 0.0) {
            return Err(Error::InvalidParameter(format!("edges must be finite and positive: {edges:?}")));
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!("edges not strictly increasing: {edges:?}")));
        }
        Ok(BinEdges { edges })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len() + 1
    }

    pub fn assign(&self, value: f64) -> Result<usize> {
        if value < 0.0 || value.is_nan() {
            return Err(Error::NegativeTreatment(value));
        }
        Ok(self.edges.partition_point(|&e| e <= value))
    }

    pub fn assign_all(&self, values: &[f64]) -> Result<Vec<usize>> {
        values.iter().map(|&v| self.assign(v)).collect()
    }

    /// Labels in the style `0-5`, `5-10`, `>100`.
    pub fn label(&self, bin: usize) -> String {
        if self.edges.is_empty() {
            return "all".to_string();
        }
        let lo = if bin == 0 { 0.0 } else { self.edges[bin - 1] };
        match self.edges.get(bin) {
            Some(hi) => format!("{}-{}", fmt_edge(lo), fmt_edge(*hi)),
            None => format!(">{}", fmt_edge(lo)),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.n_bins()).map(|b| self.label(b)).collect()
    }
}

fn fmt_edge(v: f64) -> String {
    if v >= 1000.0 && v % 1000.0 == 0.0 {
        format!("{}k", v / 1000.0)
    } else {
        format!("{v}")
    }
}

/// Parses `5,10,100`. An empty string is the single-bin identity.
pub fn parse_edges(text: &str) -> Result<BinEdges> {
    let edges = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad bin edge {s:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    BinEdges::new(edges)
}
