//! Probability that cubes, grids and Haar projections are bad.

use super::mc::{column_estimates, mc_rows, GridMode};
use super::{semilog_slope, Check, ExperimentResult, SweepPoint};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::{f64_to_units, is_good_cube, is_q_good_grid, Cube, GoodnessParams};
use crate::haar::HaarBasis;
use crate::measures::{random_uniform, AtomicMeasure};
use crate::operators::good_bad_split;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

fn check_r_values(r_values: &[u32], eps: f64) -> Result<()> {
    if r_values.is_empty() {
        return Err(Error::InvalidParameter("empty r sweep".into()));
    }
    for &r in r_values {
        GoodnessParams::with_r(r, eps).validate()?;
    }
    Ok(())
}

fn seeds_of(mode: GridMode) -> Vec<u64> {
    match mode {
        GridMode::Exhaustive => Vec::new(),
        GridMode::Sample { seed, .. } => vec![seed],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondProbConfig {
    pub dim: usize,
    #[serde(rename = "M")]
    pub fine: i32,
    #[serde(rename = "N")]
    pub top: i32,
    pub r_values: Vec<u32>,
    pub eps: f64,
    pub mode: GridMode,
    /// The tested cube at each level is the one containing this point.
    pub point: Vec<f64>,
    pub slope_bound: f64,
}

impl Default for CondProbConfig {
    fn default() -> Self {
        CondProbConfig {
            dim: 1,
            fine: 10,
            top: 0,
            r_values: (2..=6).collect(),
            eps: 0.45,
            mode: GridMode::Exhaustive,
            point: vec![0.0],
            slope_bound: -0.38,
        }
    }
}

/// `P{I bad | I ∈ D}` per `r`, averaged over the levels `ℓ` with
/// `ℓ - N >= r`. With no such level the estimate is 0.
pub fn exp_cond_prob_bad(cfg: &CondProbConfig, exec: Exec) -> Result<ExperimentResult> {
    check_r_values(&cfg.r_values, cfg.eps)?;
    if cfg.point.len() != cfg.dim {
        return Err(Error::DimensionMismatch {
            expected: cfg.dim,
            got: cfg.point.len(),
        });
    }
    let x: Vec<i64> = cfg.point.iter().map(|&v| f64_to_units(v)).collect::<Result<_>>()?;
    let rows = mc_rows(
        cfg.dim,
        cfg.fine,
        cfg.top,
        cfg.mode,
        |g| {
            cfg.r_values
                .iter()
                .map(|&r| {
                    let params = GoodnessParams::with_r(r, cfg.eps);
                    let first = cfg.top + r as i32;
                    if first > cfg.fine {
                        return Ok(0.0);
                    }
                    let mut bad = 0usize;
                    for level in first..=cfg.fine {
                        if !is_good_cube(&g.cube_at(&x, level), g, &params)? {
                            bad += 1;
                        }
                    }
                    Ok(bad as f64 / (cfg.fine - first + 1) as f64)
                })
                .collect()
        },
        exec,
    )?;
    let est = column_estimates(&rows, cfg.mode);
    let mut res = ExperimentResult::new("cond_prob_bad", "r");
    res.points = cfg
        .r_values
        .iter()
        .zip(&est)
        .map(|(&r, e)| SweepPoint::new(r as f64, e.mean, e.stderr))
        .collect();
    res.samples = rows.len() as u64;
    res.seeds = seeds_of(cfg.mode);
    res.slope = semilog_slope(&res.points);
    res.fitted_constant = fitted(&res.points, cfg.eps);
    match res.slope {
        Some(s) => res.check(Check::le("slope_log2_prob_vs_r", s, cfg.slope_bound)),
        None => res.notes.push("fewer than two positive estimates; slope not fitted".into()),
    }
    res.details = json!({ "config": cfg });
    Ok(res)
}

/// `max_r P(r) 2^{rate r}`.
fn fitted(points: &[SweepPoint], rate: f64) -> Option<f64> {
    points
        .iter()
        .map(|p| p.estimate * 2f64.powf(rate * p.x))
        .fold(None, |a: Option<f64>, v| Some(a.map_or(v, |a| a.max(v))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BadGridConfig {
    pub q: Cube,
    #[serde(rename = "M")]
    pub fine: i32,
    #[serde(rename = "N")]
    pub top: i32,
    pub r_values: Vec<u32>,
    pub eps: f64,
    pub mode: GridMode,
    pub slope_bound: f64,
}

impl Default for BadGridConfig {
    fn default() -> Self {
        // Lower corner an odd multiple of 2^-16.
        let q = Cube::new(&[(2 * 9830 + 1) << 8], 12).expect("valid cube");
        BadGridConfig {
            q,
            fine: 16,
            top: 0,
            r_values: (4..=10).collect(),
            eps: 0.45,
            mode: GridMode::Sample {
                count: 10_000,
                seed: 1,
            },
            slope_bound: -0.38,
        }
    }
}

/// `P{D is Q-bad}` per `r`. The constant is fitted at the smallest `r` and
/// reused for the later points, with three standard errors of slack.
pub fn exp_bad_grid_prob(cfg: &BadGridConfig, exec: Exec) -> Result<ExperimentResult> {
    check_r_values(&cfg.r_values, cfg.eps)?;
    let rows = mc_rows(
        cfg.q.dim(),
        cfg.fine,
        cfg.top,
        cfg.mode,
        |g| {
            Ok(cfg
                .r_values
                .iter()
                .map(|&r| {
                    let v = is_q_good_grid(g, &cfg.q, &GoodnessParams::with_r(r, cfg.eps));
                    (!v.good) as u8 as f64
                })
                .collect())
        },
        exec,
    )?;
    let est = column_estimates(&rows, cfg.mode);
    let mut res = ExperimentResult::new("bad_grid_prob", "r");
    res.points = cfg
        .r_values
        .iter()
        .zip(&est)
        .map(|(&r, e)| SweepPoint::new(r as f64, e.mean, e.stderr))
        .collect();
    res.samples = rows.len() as u64;
    res.seeds = seeds_of(cfg.mode);
    res.slope = semilog_slope(&res.points);
    let p0 = &res.points[0];
    let c = p0.estimate * 2f64.powf(cfg.eps * p0.x);
    res.fitted_constant = Some(c);
    for p in res.points[1..].to_vec() {
        let bound = c * 2f64.powf(-cfg.eps * p.x) + 3.0 * p.stderr;
        res.check(Check::le(&format!("prob_r{}", p.x), p.estimate, bound));
    }
    let nested = rows.iter().all(|r| r.windows(2).all(|w| w[1] <= w[0]));
    res.check(Check::ge("nested_events", nested as u8 as f64, 1.0));
    match res.slope {
        Some(s) => res.check(Check::le("slope_log2_prob_vs_r", s, cfg.slope_bound)),
        None => res.notes.push("fewer than two positive estimates; slope not fitted".into()),
    }
    res.details = json!({ "config": cfg });
    Ok(res)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BadProjectionConfig {
    pub q: Cube,
    #[serde(rename = "M")]
    pub fine: i32,
    #[serde(rename = "N")]
    pub top: i32,
    pub atoms: usize,
    pub atom_level: i32,
    pub r_values: Vec<u32>,
    pub eps: f64,
    pub mode: GridMode,
    /// Seed for the measure and the function.
    pub data_seed: u64,
    pub slope_bound: f64,
}

impl Default for BadProjectionConfig {
    fn default() -> Self {
        BadProjectionConfig {
            q: Cube::unit(1),
            fine: 10,
            top: -6,
            atoms: 32,
            atom_level: 8,
            r_values: (2..=6).collect(),
            eps: 0.45,
            mode: GridMode::Sample {
                count: 10_000,
                seed: 2,
            },
            data_seed: 7,
            slope_bound: -0.19,
        }
    }
}

/// Random measure on `Q` and a mean-zero function with values in `[-1, 1]`
/// before centring.
pub fn projection_data(cfg: &BadProjectionConfig) -> Result<(AtomicMeasure, Vec<f64>)> {
    let mu = random_uniform(cfg.q.dim(), cfg.atoms, &cfg.q, cfg.atom_level, 0.5, cfg.data_seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.data_seed ^ 0x5eed);
    let mut f: Vec<f64> = (0..mu.len()).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let mean = mu.integral(&f) / mu.total_mass();
    for v in &mut f {
        *v -= mean;
    }
    Ok((mu, f))
}

/// `E‖P_bad f‖ / ‖f‖` per `r`, with the per-grid orthogonality and
/// decomposition residuals.
pub fn exp_bad_projection(cfg: &BadProjectionConfig, exec: Exec) -> Result<ExperimentResult> {
    check_r_values(&cfg.r_values, cfg.eps)?;
    let (mu, f) = projection_data(cfg)?;
    exp_bad_projection_with(cfg, &mu, &f, exec)
}

pub fn exp_bad_projection_with(
    cfg: &BadProjectionConfig,
    mu: &AtomicMeasure,
    f: &[f64],
    exec: Exec,
) -> Result<ExperimentResult> {
    check_r_values(&cfg.r_values, cfg.eps)?;
    if let Some(a) = mu.atoms().iter().find(|a| !cfg.q.contains(&a.point)) {
        return Err(Error::AtomOutsideRoot(a.point.to_string()));
    }
    let f2 = mu.inner(f, f);
    if !(f2 > 0.0) {
        return Err(Error::InvalidParameter("f has zero norm".into()));
    }
    let k = cfg.r_values.len();
    let rows = mc_rows(
        cfg.q.dim(),
        cfg.fine,
        cfg.top,
        cfg.mode,
        |g| {
            let basis = HaarBasis::build_forest(g, mu)?;
            let mut out = vec![0.0; 3 * k];
            for (i, &r) in cfg.r_values.iter().enumerate() {
                let s = good_bad_split(&basis, f, &cfg.q, &GoodnessParams::with_r(r, cfg.eps))?;
                let gg = mu.inner(&s.good, &s.good);
                let bb = mu.inner(&s.bad, &s.bad);
                let gb = mu.inner(&s.good, &s.bad);
                out[i] = (bb / f2).sqrt();
                out[k + i] = gb.abs() / f2;
                out[2 * k + i] = (f2 - gg - bb - 2.0 * gb).abs() / f2;
            }
            Ok(out)
        },
        exec,
    )?;
    let est = column_estimates(&rows, cfg.mode);
    let max_col = |j: usize| rows.iter().map(|r| r[j]).fold(0.0f64, f64::max);
    let mut res = ExperimentResult::new("bad_projection", "r");
    res.points = cfg
        .r_values
        .iter()
        .zip(&est)
        .enumerate()
        .map(|(i, (&r, e))| {
            let mut p = SweepPoint::new(r as f64, e.mean, e.stderr);
            p.extra.insert("orthogonality_residual_max".into(), max_col(k + i));
            p.extra.insert("identity_residual_max".into(), max_col(2 * k + i));
            p
        })
        .collect();
    res.samples = rows.len() as u64;
    res.seeds = seeds_of(cfg.mode);
    res.seeds.push(cfg.data_seed);
    res.slope = semilog_slope(&res.points);
    res.fitted_constant = fitted(&res.points, cfg.eps / 2.0);
    let ortho = (0..k).map(|i| max_col(k + i)).fold(0.0, f64::max);
    let ident = (0..k).map(|i| max_col(2 * k + i)).fold(0.0, f64::max);
    res.check(Check::le("orthogonality_residual", ortho, 1e-10));
    res.check(Check::le("identity_residual", ident, 1e-10));
    match res.slope {
        Some(s) => res.check(Check::le("slope_log2_bad_norm_vs_r", s, cfg.slope_bound)),
        None => res.notes.push("fewer than two positive estimates; slope not fitted".into()),
    }
    res.details = json!({ "config": cfg, "atoms": mu.len(), "f_norm": f2.sqrt() });
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cond_prob_decays_and_vacuous() {
        let res = exp_cond_prob_bad(&CondProbConfig::default(), Exec::default()).unwrap();
        assert!(res.passed, "{:?}", res.points);
        let cfg = CondProbConfig {
            fine: 4,
            r_values: vec![5, 6],
            ..Default::default()
        };
        let res = exp_cond_prob_bad(&cfg, Exec::default()).unwrap();
        assert!(res.points.iter().all(|p| p.estimate == 0.0));
    }

    #[test]
    fn cond_prob_stderr_scales() {
        let run = |count| {
            let cfg = CondProbConfig {
                mode: GridMode::Sample { count, seed: 3 },
                r_values: vec![3],
                ..Default::default()
            };
            exp_cond_prob_bad(&cfg, Exec::default()).unwrap().points[0].stderr
        };
        let ratio = run(2000) / run(4000);
        assert!((ratio - 2f64.sqrt()).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn top_sized_q_is_never_bad() {
        let cfg = BadGridConfig {
            q: Cube::unit(1),
            r_values: vec![1, 2],
            mode: GridMode::Sample { count: 200, seed: 1 },
            ..Default::default()
        };
        let res = exp_bad_grid_prob(&cfg, Exec::default()).unwrap();
        assert!(res.points.iter().all(|p| p.estimate == 0.0));
    }

    #[test]
    fn bad_grid_sampled_matches_exhaustive() {
        let base = BadGridConfig {
            fine: 12,
            q: Cube::new(&[(2 * 300 + 1) << 12], 8).unwrap(),
            r_values: vec![3, 5],
            ..Default::default()
        };
        let ex = exp_bad_grid_prob(
            &BadGridConfig {
                mode: GridMode::Exhaustive,
                ..base.clone()
            },
            Exec::default(),
        )
        .unwrap();
        let mc = exp_bad_grid_prob(
            &BadGridConfig {
                mode: GridMode::Sample { count: 4000, seed: 9 },
                ..base
            },
            Exec::default(),
        )
        .unwrap();
        for (a, b) in ex.points.iter().zip(&mc.points) {
            assert!((a.estimate - b.estimate).abs() <= 4.0 * b.stderr + 1e-12, "{a:?} {b:?}");
        }
    }

    #[test]
    fn projection_residuals_small() {
        let cfg = BadProjectionConfig {
            mode: GridMode::Sample { count: 300, seed: 4 },
            ..Default::default()
        };
        let res = exp_bad_projection(&cfg, Exec::default()).unwrap();
        for c in &res.checks[..2] {
            assert!(c.pass, "{c:?}");
        }
        assert!(res.points.iter().all(|p| p.estimate <= 1.0 + 1e-12));
    }
}
