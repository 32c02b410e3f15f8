use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::MetricsReport;

pub const RESULTS_HEADER: &str = "dataset,mechanism,method,seed,cascade,macro_precision,macro_recall,macro_f1,accuracy,aed";

/// One line of the results table; `seed = None` marks a mean over seeds and
/// `cascade = None` a mean over test cascades.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub mechanism: String,
    pub method: String,
    pub seed: Option<u64>,
    pub cascade: Option<usize>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub aed: f64,
}

impl ResultRow {
    pub fn new(dataset: &str, mechanism: &str, method: &str, seed: Option<u64>, m: &MetricsReport) -> Self {
        Self {
            dataset: dataset.into(),
            mechanism: mechanism.into(),
            method: method.into(),
            seed,
            cascade: None,
            macro_precision: m.macro_precision,
            macro_recall: m.macro_recall,
            macro_f1: m.macro_f1,
            accuracy: m.accuracy,
            aed: m.aed,
        }
    }

    /// The aggregate row followed by one row per test cascade.
    pub fn with_cascades(dataset: &str, mechanism: &str, method: &str, seed: Option<u64>, m: &MetricsReport) -> Vec<Self> {
        let head = Self::new(dataset, mechanism, method, seed, m);
        let mut rows = vec![head.clone()];
        for (i, c) in m.per_cascade.iter().enumerate() {
            rows.push(Self {
                cascade: Some(i),
                macro_precision: c.scores.precision,
                macro_recall: c.scores.recall,
                macro_f1: c.scores.f1,
                accuracy: c.scores.accuracy,
                aed: c.aed,
                ..head.clone()
            });
        }
        rows
    }

    /// Mean over rows sharing dataset, mechanism and method.
    pub fn aggregate(rows: &[ResultRow]) -> Option<Self> {
        let first = rows.first()?;
        let n = rows.len() as f64;
        let mean = |f: fn(&ResultRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
        Some(Self {
            dataset: first.dataset.clone(),
            mechanism: first.mechanism.clone(),
            method: first.method.clone(),
            seed: None,
            cascade: None,
            macro_precision: mean(|r| r.macro_precision),
            macro_recall: mean(|r| r.macro_recall),
            macro_f1: mean(|r| r.macro_f1),
            accuracy: mean(|r| r.accuracy),
            aed: mean(|r| r.aed),
        })
    }

    fn csv_line(&self) -> String {
        let seed = self.seed.map_or_else(|| "mean".to_string(), |s| s.to_string());
        let cascade = self.cascade.map_or_else(|| "all".to_string(), |c| c.to_string());
        format!(
            "{},{},{},{seed},{cascade},{},{},{},{},{}",
            self.dataset,
            self.mechanism,
            self.method,
            self.macro_precision,
            self.macro_recall,
            self.macro_f1,
            self.accuracy,
            self.aed
        )
    }
}

/// Header plus one line per row.
pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.csv_line());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(seed: u64, f1: f64) -> ResultRow {
        ResultRow {
            dataset: "ba200".into(),
            mechanism: "SI".into(),
            method: "pdsl".into(),
            seed: Some(seed),
            cascade: None,
            macro_precision: f1,
            macro_recall: f1,
            macro_f1: f1,
            accuracy: 1.0,
            aed: 2.0 * f1,
        }
    }

    #[test]
    fn aggregate_is_mean_of_seed_rows() {
        let rows: Vec<ResultRow> = (0..10).map(|s| row(s, s as f64 / 10.0)).collect();
        let agg = ResultRow::aggregate(&rows).unwrap();
        assert!((agg.macro_f1 - 0.45).abs() < 1e-12);
        assert!((agg.aed - 0.9).abs() < 1e-12);
        assert_eq!(agg.seed, None);
        assert!(ResultRow::aggregate(&[]).is_none());
    }

    #[test]
    fn per_cascade_rows_follow_aggregate() {
        use crate::metrics::{CascadeMetrics, Scores};
        let c = CascadeMetrics { scores: Scores { precision: 1.0, recall: 1.0, f1: 1.0, accuracy: 1.0 }, aed: 0.0 };
        let m = MetricsReport::from_cascades(vec![c, c]);
        let rows = ResultRow::with_cascades("g", "SI", "pdsl", Some(1), &m);
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].cascade, None);
        assert_eq!(rows[2].cascade, Some(1));
    }

    #[test]
    fn csv_layout() {
        let text = results_csv(&[row(3, 0.5)]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], RESULTS_HEADER);
        assert_eq!(lines[1], "ba200,SI,pdsl,3,all,0.5,0.5,0.5,1,1");
    }
}
