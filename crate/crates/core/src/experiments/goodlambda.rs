//! The good-λ ratio and the one-dimensional strong ratio over a corpus.

use super::{Check, ExperimentResult, SweepPoint};
use crate::constants::{full_report, ConstantsParams, ConstantsReport, CubeFamily, FamilySpec};
use crate::error::{Error, Result};
use crate::exec::{argmax, Exec};
use crate::geometry::Cube;
use crate::kernels::KernelSpec;
use crate::measures::{random_uniform, AtomicMeasure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

/// Random pairs on `[0,1)^n` with atom counts uniform in `min_atoms..=max_atoms`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub pairs: usize,
    pub dim: usize,
    pub min_atoms: usize,
    pub max_atoms: usize,
    pub snap_level: i32,
    pub spread: f64,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            pairs: 50,
            dim: 1,
            min_atoms: 1,
            max_atoms: 32,
            snap_level: 10,
            spread: 0.5,
            seed: 2024,
        }
    }
}

pub fn corpus(spec: &CorpusSpec) -> Result<Vec<(AtomicMeasure, AtomicMeasure)>> {
    if spec.min_atoms == 0 || spec.min_atoms > spec.max_atoms {
        return Err(Error::InvalidParameter("need 1 <= min_atoms <= max_atoms".into()));
    }
    let window = Cube::unit(spec.dim);
    (0..spec.pairs as u64)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(i);
            let ns = rng.random_range(spec.min_atoms..=spec.max_atoms);
            let nw = rng.random_range(spec.min_atoms..=spec.max_atoms);
            let (s1, s2) = (rng.random::<u64>(), rng.random::<u64>());
            Ok((
                random_uniform(spec.dim, ns, &window, spec.snap_level, spec.spread, s1)?,
                random_uniform(spec.dim, nw, &window, spec.snap_level, spec.spread, s2)?,
            ))
        })
        .collect()
}

/// Regression baseline for the corpus maxima.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub good_lambda_max_ratio: f64,
    pub one_dim_strong_max_ratio: f64,
    pub corpus: CorpusSpec,
    pub lambdas: Vec<f64>,
    pub family: FamilySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodLambdaConfig {
    pub corpus: CorpusSpec,
    pub lambdas: Vec<f64>,
    pub family: FamilySpec,
    pub params: ConstantsParams,
    /// Declared bound on the corpus maximum of the good-λ ratio.
    pub bound: f64,
    /// Allowed relative drift when the family is doubled.
    pub drift: f64,
    /// Allowed relative distance from the baseline.
    pub baseline_tolerance: f64,
    pub check_doubling: bool,
}

impl Default for GoodLambdaConfig {
    fn default() -> Self {
        GoodLambdaConfig {
            corpus: CorpusSpec::default(),
            lambdas: (2..=9).map(|k| 2f64.powi(-k)).collect(),
            family: FamilySpec::default(),
            params: ConstantsParams::default(),
            bound: 1.0,
            drift: 0.05,
            baseline_tolerance: 0.10,
            check_doubling: true,
        }
    }
}

/// Per-instance summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub index: usize,
    pub sigma_atoms: usize,
    pub omega_atoms: usize,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// The λ maximising the ratio, i.e. minimising the right-hand side.
    pub argmax_lambda: f64,
    pub strong_ratio: f64,
    #[serde(rename = "WBP")]
    pub wbp: f64,
    #[serde(rename = "frakA2")]
    pub frak_a2: f64,
    #[serde(rename = "T_test")]
    pub t_test: f64,
    #[serde(rename = "T_test_star")]
    pub t_test_star: f64,
    #[serde(rename = "E_strong")]
    pub e_strong: f64,
    #[serde(rename = "E_strong_star")]
    pub e_strong_star: f64,
    #[serde(rename = "N_norm")]
    pub n_norm: f64,
}

/// `WBP / (√𝔄₂ + 𝔗 + 𝔗*)`, or 0 when the denominator vanishes.
pub fn strong_ratio(r: &ConstantsReport) -> f64 {
    let d = r.frak_a2.sqrt() + r.t_test + r.t_test_star;
    if d > 0.0 {
        r.wbp / d
    } else {
        0.0
    }
}

fn summarise(index: usize, s: &AtomicMeasure, w: &AtomicMeasure, r: &ConstantsReport, lambdas: &[f64]) -> PairReport {
    let ratios: Vec<f64> = lambdas.iter().map(|&l| r.ratio_at(l)).collect();
    let (k, max_ratio) = argmax(ratios.iter().copied()).unwrap_or((0, 0.0));
    PairReport {
        index,
        sigma_atoms: s.len(),
        omega_atoms: w.len(),
        argmax_lambda: lambdas.get(k).copied().unwrap_or(f64::NAN),
        ratios,
        max_ratio,
        strong_ratio: strong_ratio(r),
        wbp: r.wbp,
        frak_a2: r.frak_a2,
        t_test: r.t_test,
        t_test_star: r.t_test_star,
        e_strong: r.e_strong,
        e_strong_star: r.e_strong_star,
        n_norm: r.n_norm,
    }
}

/// Constants reports for every pair, each on its own family built from `family`.
pub fn corpus_reports(
    pairs: &[(AtomicMeasure, AtomicMeasure)],
    family: &FamilySpec,
    params: &ConstantsParams,
    exec: Exec,
) -> Result<Vec<ConstantsReport>> {
    exec.map_slice(pairs, |(s, w)| {
        let spec = KernelSpec::default_for(params.alpha, s, w)?;
        let fam = CubeFamily::build(s, w, family)?;
        full_report(&spec, s, w, &fam, params, Exec::Sequential)
    })
    .into_iter()
    .collect()
}

fn summaries(
    pairs: &[(AtomicMeasure, AtomicMeasure)],
    family: &FamilySpec,
    cfg: &GoodLambdaConfig,
    exec: Exec,
) -> Result<Vec<PairReport>> {
    let reps = corpus_reports(pairs, family, &cfg.params, exec)?;
    Ok(pairs
        .iter()
        .zip(&reps)
        .enumerate()
        .map(|(i, ((s, w), r))| summarise(i, s, w, r, &cfg.lambdas))
        .collect())
}

fn validate(pairs: &[(AtomicMeasure, AtomicMeasure)], cfg: &GoodLambdaConfig) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if cfg.lambdas.is_empty() || cfg.lambdas.iter().any(|&l| !(l > 0.0 && l < 0.5)) {
        return Err(Error::InvalidParameter("lambda values must lie in (0, 1/2)".into()));
    }
    cfg.params.validate()
}

fn max_of(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, f64::max)
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

/// Both corpus experiments from one pass over the reports.
pub fn good_lambda_suite(
    pairs: &[(AtomicMeasure, AtomicMeasure)],
    cfg: &GoodLambdaConfig,
    baseline: Option<&Baseline>,
    exec: Exec,
) -> Result<(ExperimentResult, ExperimentResult)> {
    validate(pairs, cfg)?;
    let base = summaries(pairs, &cfg.family, cfg, exec)?;
    let doubled = if cfg.check_doubling {
        Some(summaries(pairs, &cfg.family.doubled(), cfg, exec)?)
    } else {
        None
    };
    Ok((
        good_lambda_result(&base, doubled.as_deref(), cfg, baseline),
        strong_result(&base, doubled.as_deref(), cfg, baseline)?,
    ))
}

fn good_lambda_result(
    base: &[PairReport],
    doubled: Option<&[PairReport]>,
    cfg: &GoodLambdaConfig,
    baseline: Option<&Baseline>,
) -> ExperimentResult {
    let mut res = ExperimentResult::new("good_lambda", "lambda");
    for (k, &l) in cfg.lambdas.iter().enumerate() {
        let m = max_of(base.iter().map(|p| p.ratios[k]));
        let mut pt = SweepPoint::new(l, m, 0.0);
        pt.ratio = Some(m);
        res.points.push(pt);
    }
    let mx = max_of(base.iter().map(|p| p.max_ratio));
    res.max_ratio = Some(mx);
    res.fitted_constant = Some(mx);
    res.samples = base.len() as u64;
    res.seeds = vec![cfg.corpus.seed];
    let witness = argmax(base.iter().map(|p| p.max_ratio)).map(|(i, _)| json!({ "instance": i, "lambda": base[i].argmax_lambda }));
    let mut c = Check::le("max_ratio", mx, cfg.bound);
    if let Some(w) = witness {
        c = c.with_witness(w);
    }
    res.check(c);
    res.check(Check::ge("max_ratio_finite", mx.is_finite() as u8 as f64, 1.0));
    let mut doubled_max = None;
    if let Some(d) = doubled {
        let m2 = max_of(d.iter().map(|p| p.max_ratio));
        doubled_max = Some(m2);
        res.check(Check::le("doubling_drift", rel(m2, mx), cfg.drift));
    }
    if let Some(b) = baseline {
        res.check(Check::le("baseline_drift", rel(mx, b.good_lambda_max_ratio), cfg.baseline_tolerance));
    }
    res.details = json!({
        "config": cfg,
        "instances": base,
        "doubled_max_ratio": doubled_max,
    });
    res
}

fn strong_result(
    base: &[PairReport],
    doubled: Option<&[PairReport]>,
    cfg: &GoodLambdaConfig,
    baseline: Option<&Baseline>,
) -> Result<ExperimentResult> {
    if cfg.corpus.dim != 1 || base.is_empty() {
        return Err(if base.is_empty() {
            Error::EmptyCorpus
        } else {
            Error::InvalidParameter("the strong ratio is for one-dimensional corpora".into())
        });
    }
    let mut res = ExperimentResult::new("one_dim_strong", "instance");
    for p in base {
        let mut pt = SweepPoint::new(p.index as f64, p.strong_ratio, 0.0);
        pt.ratio = Some(p.strong_ratio);
        res.points.push(pt);
    }
    let mx = max_of(base.iter().map(|p| p.strong_ratio));
    res.max_ratio = Some(mx);
    res.fitted_constant = Some(mx);
    res.samples = base.len() as u64;
    res.seeds = vec![cfg.corpus.seed];
    res.check(Check::ge("max_ratio_finite", mx.is_finite() as u8 as f64, 1.0));
    let mut doubled_max = None;
    if let Some(d) = doubled {
        let m2 = max_of(d.iter().map(|p| p.strong_ratio));
        doubled_max = Some(m2);
        res.check(Check::le("doubling_drift", rel(m2, mx), cfg.drift));
    }
    if let Some(b) = baseline {
        res.check(Check::le("baseline_drift", rel(mx, b.one_dim_strong_max_ratio), cfg.baseline_tolerance));
    }
    res.details = json!({ "config": cfg, "doubled_max_ratio": doubled_max });
    Ok(res)
}

pub fn exp_good_lambda(
    pairs: &[(AtomicMeasure, AtomicMeasure)],
    cfg: &GoodLambdaConfig,
    baseline: Option<&Baseline>,
    exec: Exec,
) -> Result<ExperimentResult> {
    validate(pairs, cfg)?;
    let base = summaries(pairs, &cfg.family, cfg, exec)?;
    let doubled = match cfg.check_doubling {
        true => Some(summaries(pairs, &cfg.family.doubled(), cfg, exec)?),
        false => None,
    };
    Ok(good_lambda_result(&base, doubled.as_deref(), cfg, baseline))
}

pub fn exp_one_dim_strong(
    pairs: &[(AtomicMeasure, AtomicMeasure)],
    cfg: &GoodLambdaConfig,
    baseline: Option<&Baseline>,
    exec: Exec,
) -> Result<ExperimentResult> {
    validate(pairs, cfg)?;
    if pairs.iter().any(|(s, w)| s.dim() != 1 || w.dim() != 1) {
        return Err(Error::InvalidParameter("the strong ratio is for one-dimensional corpora".into()));
    }
    let base = summaries(pairs, &cfg.family, cfg, exec)?;
    let doubled = match cfg.check_doubling {
        true => Some(summaries(pairs, &cfg.family.doubled(), cfg, exec)?),
        false => None,
    };
    strong_result(&base, doubled.as_deref(), cfg, baseline)
}

impl Baseline {
    pub fn from_results(cfg: &GoodLambdaConfig, good: &ExperimentResult, strong: &ExperimentResult) -> Self {
        Baseline {
            good_lambda_max_ratio: good.max_ratio.unwrap_or(f64::NAN),
            one_dim_strong_max_ratio: strong.max_ratio.unwrap_or(f64::NAN),
            corpus: cfg.corpus.clone(),
            lambdas: cfg.lambdas.clone(),
            family: cfg.family.clone(),
        }
    }
}
