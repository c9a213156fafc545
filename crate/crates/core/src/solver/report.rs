//! Long-format experiment results: `(seed, arm, metric, value)` rows plus named PASS criteria.

use crate::io::fmt_e12;

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub seed: u64,
    pub arm: String,
    pub metric: String,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentReport {
    pub name: String,
    pub rows: Vec<ReportRow>,
    /// `(criterion, pass)` in insertion order.
    pub criteria: Vec<(String, bool)>,
    /// Seed-independent summary values, e.g. medians over seeds.
    pub aggregates: Vec<(String, f64)>,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Default::default() }
    }

    pub fn push(&mut self, seed: u64, arm: impl Into<String>, metric: impl Into<String>, value: f64) {
        self.rows.push(ReportRow { seed, arm: arm.into(), metric: metric.into(), value });
    }

    pub fn criterion(&mut self, name: impl Into<String>, pass: bool) {
        self.criteria.push((name.into(), pass));
    }

    pub fn aggregate(&mut self, name: impl Into<String>, value: f64) {
        self.aggregates.push((name.into(), value));
    }

    pub fn aggregate_value(&self, name: &str) -> Option<f64> {
        self.aggregates.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn pass(&self) -> bool {
        self.criteria.iter().all(|(_, p)| *p)
    }

    pub fn criterion_pass(&self, name: &str) -> Option<bool> {
        self.criteria.iter().find(|(n, _)| n == name).map(|(_, p)| *p)
    }

    pub fn value(&self, seed: u64, arm: &str, metric: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.seed == seed && r.arm == arm && r.metric == metric).map(|r| r.value)
    }

    /// All values of `metric` in `arm`, in row order.
    pub fn values(&self, arm: &str, metric: &str) -> Vec<f64> {
        self.rows.iter().filter(|r| r.arm == arm && r.metric == metric).map(|r| r.value).collect()
    }

    /// Appends `other`'s rows; its criteria are prefixed with its seed tag.
    pub fn absorb(&mut self, other: ExperimentReport, tag: &str) {
        self.rows.extend(other.rows);
        for (n, p) in other.criteria {
            self.criteria.push((format!("{tag}:{n}"), p));
        }
        self.aggregates.extend(other.aggregates.into_iter().map(|(n, v)| (format!("{tag}:{n}"), v)));
        self.notes.extend(other.notes);
    }

    /// Stable sort by seed, keeping arm/metric order within a seed.
    pub fn sort_by_seed(&mut self) {
        self.rows.sort_by_key(|r| r.seed);
    }

    pub fn csv_header() -> [&'static str; 4] {
        ["seed", "arm", "metric", "value"]
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows.iter().map(|r| vec![r.seed.to_string(), r.arm.clone(), r.metric.clone(), fmt_e12(r.value)]).collect()
    }

    /// `kind,name,value` rows: one `seed` row per seed with per-seed criteria
    /// (`1` when all of them pass), aggregates, then criteria as `1`/`0`.
    pub fn summary_rows(&self) -> Vec<Vec<String>> {
        let mut seeds: Vec<(u64, bool)> = Vec::new();
        for r in self.rows.iter().filter(|r| r.arm == "criteria") {
            match seeds.iter_mut().find(|(s, _)| *s == r.seed) {
                Some(e) => e.1 &= r.value != 0.0,
                None => seeds.push((r.seed, r.value != 0.0)),
            }
        }
        let mut rows: Vec<Vec<String>> = seeds.iter().map(|(s, p)| vec!["seed".into(), s.to_string(), if *p { "1" } else { "0" }.into()]).collect();
        rows.extend(self.aggregates.iter().map(|(n, v)| vec!["aggregate".into(), n.clone(), fmt_e12(*v)]));
        rows.extend(self.criteria.iter().map(|(n, p)| vec!["criterion".into(), n.clone(), if *p { "1" } else { "0" }.into()]));
        rows
    }

    /// One line per criterion.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for (n, v) in &self.aggregates {
            s.push_str(&format!("{} {}: {}\n", self.name, n, fmt_e12(*v)));
        }
        for (n, p) in &self.criteria {
            s.push_str(&format!("{} {}: {}\n", self.name, n, if *p { "PASS" } else { "FAIL" }));
        }
        s
    }
}

/// Median of a slice (NaNs sort last).
pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let m = s.len() / 2;
    if s.len() % 2 == 1 { s[m] } else { 0.5 * (s[m - 1] + s[m]) }
}
