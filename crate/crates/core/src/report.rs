//! Pass/fail records shared by the experiment drivers.

use std::collections::BTreeMap;

use serde::Serialize;

/// Summary of signed margins `bound − observed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginSummary {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl MarginSummary {
    /// `None` for an empty slice.
    pub fn of(margins: &[f64]) -> Option<Self> {
        if margins.is_empty() {
            return None;
        }
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for &m in margins {
            min = min.min(m);
            max = max.max(m);
            sum += m;
        }
        Some(Self {
            min,
            mean: sum / margins.len() as f64,
            max,
        })
    }
}

/// Outcome of checking one almost-sure inequality over many samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub claim: String,
    pub params: BTreeMap<String, f64>,
    pub n_paths: usize,
    /// Margins below `-slack`.
    pub violations: usize,
    pub margins: Option<MarginSummary>,
    pub slack: f64,
    pub pass: bool,
}

impl BoundReport {
    pub fn from_margins(
        claim: impl Into<String>,
        params: BTreeMap<String, f64>,
        n_paths: usize,
        margins: &[f64],
        slack: f64,
    ) -> Self {
        let violations = margins.iter().filter(|&&m| !(m >= -slack)).count();
        Self {
            claim: claim.into(),
            params,
            n_paths,
            violations,
            margins: MarginSummary::of(margins),
            slack,
            pass: violations == 0,
        }
    }

    /// Pool several reports of the same claim.
    pub fn merge(claim: impl Into<String>, params: BTreeMap<String, f64>, parts: &[BoundReport]) -> Self {
        let n_paths = parts.iter().map(|r| r.n_paths).sum();
        let violations = parts.iter().map(|r| r.violations).sum();
        let slack = parts.iter().map(|r| r.slack).fold(0.0, f64::max);
        let summaries: Vec<MarginSummary> = parts.iter().filter_map(|r| r.margins).collect();
        let margins = if summaries.is_empty() {
            None
        } else {
            let weights: Vec<f64> = parts
                .iter()
                .filter(|r| r.margins.is_some())
                .map(|r| r.n_paths.max(1) as f64)
                .collect();
            let total: f64 = weights.iter().sum();
            Some(MarginSummary {
                min: summaries.iter().map(|s| s.min).fold(f64::INFINITY, f64::min),
                mean: summaries.iter().zip(&weights).map(|(s, w)| s.mean * w).sum::<f64>() / total,
                max: summaries.iter().map(|s| s.max).fold(f64::NEG_INFINITY, f64::max),
            })
        };
        Self {
            claim: claim.into(),
            params,
            n_paths,
            violations,
            margins,
            slack,
            pass: violations == 0,
        }
    }
}

/// Numerical slack `10·dt + 10⁻¹²·scale` below which a negative margin is
/// not counted as a violation.
pub fn numerical_slack(dt: f64, scale: f64) -> f64 {
    10.0 * dt + 1e-12 * scale.abs()
}

/// Build a parameter map from `(name, value)` pairs.
pub fn params<const K: usize>(pairs: [(&str, f64); K]) -> BTreeMap<String, f64> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_only_margins_beyond_slack() {
        let r = BoundReport::from_margins("x", params([("a", 1.0)]), 3, &[0.5, -0.001, -0.1], 0.01);
        assert_eq!(r.violations, 1);
        assert!(!r.pass);
        let m = r.margins.unwrap();
        assert_eq!(m.min, -0.1);
        assert_eq!(m.max, 0.5);
        let r = BoundReport::from_margins("x", BTreeMap::new(), 1, &[f64::NAN], 0.01);
        assert_eq!(r.violations, 1);
    }

    #[test]
    fn merge_pools_counts() {
        let a = BoundReport::from_margins("x", BTreeMap::new(), 2, &[1.0, 3.0], 0.0);
        let b = BoundReport::from_margins("x", BTreeMap::new(), 2, &[-1.0, 1.0], 0.0);
        let m = BoundReport::merge("x", BTreeMap::new(), &[a, b]);
        assert_eq!(m.n_paths, 4);
        assert_eq!(m.violations, 1);
        assert_eq!(m.margins.unwrap().mean, 1.0);
    }
}
