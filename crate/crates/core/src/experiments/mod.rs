//! Verification experiments: grid expectations, goodness probabilities, NTV
//! surgery averages and the good-λ corpus.

mod appendix;
mod goodlambda;
mod goodness;
mod mc;
mod surgery;

pub use appendix::{exp_appendix_parts, AppendixConfig, AppendixInstance};
pub use goodlambda::{
    corpus, corpus_reports, exp_good_lambda, exp_one_dim_strong, good_lambda_suite, strong_ratio, Baseline,
    CorpusSpec, GoodLambdaConfig, PairReport,
};
pub use goodness::{
    exp_bad_grid_prob, exp_bad_projection, exp_bad_projection_with, exp_cond_prob_bad, projection_data,
    BadGridConfig, BadProjectionConfig, CondProbConfig,
};
pub use mc::{column_estimates, mc_expect, mc_expect_many, mc_rows, Estimate, GridMode};
pub use surgery::{
    exp_follow_est, exp_surgery_hand, lattice_window, two_step_hand_average, wall_measure, SurgeryConfig,
    TranslationMode, TRANSLATION_CAP,
};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub x: f64,
    pub estimate: f64,
    pub stderr: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

impl SweepPoint {
    pub fn new(x: f64, estimate: f64, stderr: f64) -> Self {
        SweepPoint {
            x,
            estimate,
            stderr,
            ratio: None,
            extra: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Le,
    Ge,
}

/// One asserted inequality `value (<= | >=) bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<serde_json::Value>,
}

impl Check {
    pub fn le(name: &str, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            relation: Relation::Le,
            bound,
            pass: value <= bound,
            witness: None,
        }
    }

    pub fn ge(name: &str, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            relation: Relation::Ge,
            bound,
            pass: value >= bound,
            witness: None,
        }
    }

    pub fn with_witness(mut self, w: serde_json::Value) -> Self {
        self.witness = Some(w);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: String,
    /// Meaning of `SweepPoint::x`: `"lambda"` or `"r"`.
    pub x_label: String,
    pub points: Vec<SweepPoint>,
    pub slope: Option<f64>,
    pub fitted_constant: Option<f64>,
    pub max_ratio: Option<f64>,
    pub seeds: Vec<u64>,
    pub samples: u64,
    pub checks: Vec<Check>,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

impl ExperimentResult {
    pub fn new(name: &str, x_label: &str) -> Self {
        ExperimentResult {
            name: name.into(),
            x_label: x_label.into(),
            points: Vec::new(),
            slope: None,
            fitted_constant: None,
            max_ratio: None,
            seeds: Vec::new(),
            samples: 0,
            checks: Vec::new(),
            passed: true,
            notes: Vec::new(),
            details: serde_json::Value::Null,
        }
    }

    pub fn check(&mut self, c: Check) {
        self.passed &= c.pass;
        self.checks.push(c);
    }

    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    /// Columns `lambda_or_r,estimate,stderr,slope,ratio`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda_or_r,estimate,stderr,slope,ratio\n");
        let slope = self.slope.map(|v| v.to_string()).unwrap_or_default();
        for p in &self.points {
            let ratio = p.ratio.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(s, "{},{},{},{},{}", p.x, p.estimate, p.stderr, slope, ratio);
        }
        s
    }
}

/// Least-squares slope of `y` against `x`; `None` with fewer than two points.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// Slope of `log2 estimate` against `log2 x` over the positive estimates.
pub fn loglog_slope(points: &[SweepPoint]) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| p.estimate > 0.0 && p.x > 0.0)
        .map(|p| (p.x.log2(), p.estimate.log2()))
        .unzip();
    fit_slope(&x, &y)
}

/// Slope of `log2 estimate` against `x` itself.
pub fn semilog_slope(points: &[SweepPoint]) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| p.estimate > 0.0)
        .map(|p| (p.x, p.estimate.log2()))
        .unzip();
    fit_slope(&x, &y)
}
