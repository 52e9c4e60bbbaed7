//! Agreement between automated metric scores and expert ratings.
//!
//! Pearson, Spearman and Kendall tau-b correlations with two-sided p-values,
//! simple least-squares regression of expert rating on metric score, and a
//! ranked comparison table across metrics.

mod correlation;
mod regression;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use correlation::{average_ranks, kendall_tau_b, pearson, spearman, CorrelationResult};
pub use regression::{ols_simple, RegressionResult};

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("need at least 3 paired samples, got {n}")]
    TooFew { n: usize },
    #[error("series lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("degenerate series")]
    Degenerate,
    #[error("non-finite value in series")]
    NonFinite,
    #[error("value {value} outside [0, {max}]")]
    OutOfRange { value: f64, max: f64 },
    #[error("normalizer must be positive, got {0}")]
    BadMax(f64),
    #[error("metric `{metric}` is not aligned with expert scores: missing {missing:?}, unexpected {unexpected:?}")]
    Misaligned {
        metric: String,
        missing: Vec<String>,
        unexpected: Vec<String>,
    },
}

pub(crate) fn check_pair(x: &[f64], y: &[f64]) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 3 {
        return Err(StatsError::TooFew { n: x.len() });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

/// Divides every value by `max_value`.
pub fn normalize(values: &[f64], max_value: f64) -> Result<Vec<f64>, StatsError> {
    if !(max_value > 0.0 && max_value.is_finite()) {
        return Err(StatsError::BadMax(max_value));
    }
    values
        .iter()
        .map(|&v| {
            if (0.0..=max_value).contains(&v) {
                Ok(v / max_value)
            } else {
                Err(StatsError::OutOfRange { value: v, max: max_value })
            }
        })
        .collect()
}

/// Metric and expert values aligned by report id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairedSamples {
    pub ids: Vec<String>,
    pub metric: Vec<f64>,
    pub expert: Vec<f64>,
}

impl PairedSamples {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn pearson(&self) -> Result<CorrelationResult, StatsError> {
        pearson(&self.metric, &self.expert)
    }

    pub fn spearman(&self) -> Result<CorrelationResult, StatsError> {
        spearman(&self.metric, &self.expert)
    }

    pub fn kendall_tau_b(&self) -> Result<CorrelationResult, StatsError> {
        kendall_tau_b(&self.metric, &self.expert)
    }

    /// Regression of expert rating on metric score.
    pub fn ols(&self) -> Result<RegressionResult, StatsError> {
        ols_simple(&self.metric, &self.expert)
    }
}

/// Drops pairs whose raw expert score is 0; returns the kept pairs and the
/// number removed.
pub fn filter_zero_expert(pairs: &PairedSamples) -> (PairedSamples, usize) {
    let mut kept = PairedSamples::default();
    for i in 0..pairs.len() {
        if pairs.expert[i] != 0.0 {
            kept.ids.push(pairs.ids[i].clone());
            kept.metric.push(pairs.metric[i]);
            kept.expert.push(pairs.expert[i]);
        }
    }
    let removed = pairs.len() - kept.len();
    (kept, removed)
}

/// One metric's scores keyed by report id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricSeries {
    pub name: String,
    pub values: BTreeMap<String, f64>,
}

impl MetricSeries {
    pub fn new(name: impl Into<String>) -> Self {
        MetricSeries { name: name.into(), values: BTreeMap::new() }
    }

    /// Pairs this series with `expert`; both must cover the same ids.
    pub fn align(&self, expert: &MetricSeries) -> Result<PairedSamples, StatsError> {
        let mine: BTreeSet<&String> = self.values.keys().collect();
        let theirs: BTreeSet<&String> = expert.values.keys().collect();
        if mine != theirs {
            return Err(StatsError::Misaligned {
                metric: self.name.clone(),
                missing: theirs.difference(&mine).map(|s| s.to_string()).collect(),
                unexpected: mine.difference(&theirs).map(|s| s.to_string()).collect(),
            });
        }
        let mut out = PairedSamples::default();
        for (id, &e) in &expert.values {
            out.ids.push(id.clone());
            out.metric.push(self.values[id]);
            out.expert.push(e);
        }
        Ok(out)
    }
}

/// A statistic that may be undefined for a degenerate series.
pub type Stat<T> = Option<T>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub metric: String,
    pub n: usize,
    pub pearson: Stat<CorrelationResult>,
    pub spearman: Stat<CorrelationResult>,
    pub kendall: Stat<CorrelationResult>,
    pub regression: Stat<RegressionResult>,
}

impl ComparisonRow {
    pub fn r(&self) -> Option<f64> {
        self.pearson.map(|p| p.coefficient)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// Ascending by Pearson r; undefined r sorts first.
    pub rows: Vec<ComparisonRow>,
}

fn defined<T>(r: Result<T, StatsError>) -> Result<Option<T>, StatsError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(StatsError::Degenerate) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Correlates every metric with the expert series and sorts rows by Pearson
/// r. A degenerate (constant) metric yields a row with undefined statistics
/// rather than an error.
pub fn compare_metrics(metrics: &[MetricSeries], expert: &MetricSeries) -> Result<ComparisonReport, StatsError> {
    let mut rows = Vec::with_capacity(metrics.len());
    for m in metrics {
        let pairs = m.align(expert)?;
        rows.push(ComparisonRow {
            metric: m.name.clone(),
            n: pairs.len(),
            pearson: defined(pairs.pearson())?,
            spearman: defined(pairs.spearman())?,
            kendall: defined(pairs.kendall_tau_b())?,
            regression: defined(pairs.ols())?,
        });
    }
    rows.sort_by(|a, b| match (a.r(), b.r()) {
        (Some(x), Some(y)) => x.total_cmp(&y).then_with(|| a.metric.cmp(&b.metric)),
        (None, Some(_)) => std::cmp::Ordering::Less,
        (Some(_), None) => std::cmp::Ordering::Greater,
        (None, None) => a.metric.cmp(&b.metric),
    });
    Ok(ComparisonReport { rows })
}

impl ComparisonReport {
    /// Plain-text table with aligned columns.
    pub fn to_table(&self) -> String {
        let header = ["metric", "n", "r", "p(r)", "rho", "p(rho)", "tau_b", "p(tau)", "R2", "RMSE"];
        let fmt_c = |c: &Stat<CorrelationResult>| match c {
            Some(c) => [format!("{:.3}", c.coefficient), format!("{:.2e}", c.p_value)],
            None => ["n/a".to_string(), "n/a".to_string()],
        };
        let mut cells: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        for row in &self.rows {
            let mut line = vec![row.metric.clone(), row.n.to_string()];
            for c in [&row.pearson, &row.spearman, &row.kendall] {
                line.extend(fmt_c(c));
            }
            match &row.regression {
                Some(g) => line.extend([format!("{:.3}", g.r2), format!("{:.3}", g.rmse)]),
                None => line.extend(["n/a".to_string(), "n/a".to_string()]),
            }
            cells.push(line);
        }
        let widths: Vec<usize> = (0..header.len())
            .map(|i| cells.iter().map(|r| r[i].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for line in &cells {
            let mut first = true;
            for (cell, w) in line.iter().zip(&widths) {
                if first {
                    let _ = write!(out, "{cell:<w$}");
                    first = false;
                } else {
                    let _ = write!(out, "  {cell:>w$}");
                }
            }
            out.push('\n');
        }
        out
    }
}
