//! Translation averages of boundary collars of `J' \ J_λ`.
//!
//! `J` is replaced by its periodic union `J + γ + ℓ(J)Z^n`, and `γ` runs over
//! the step-`2^-M` lattice of one period `[0, ℓ(J))^n`. Averaging a quantity
//! summed over the tiles is the same as averaging a single translate over a
//! large window and rescaling.

use super::{loglog_slope, Check, ExperimentResult, SweepPoint};
use crate::error::{Error, Result};
use crate::exec::{CompensatedSum, Exec};
use crate::geometry::{check_dim, side_units, Cube, Point, MAX_DIM, UNIT};
use crate::measures::AtomicMeasure;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::collections::BTreeMap;

/// Upper bound on exhaustive translation counts.
pub const TRANSLATION_CAP: u64 = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TranslationMode {
    Exhaustive,
    Sample { count: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurgeryConfig {
    /// The cube `R`.
    pub r: Cube,
    /// Level of `J`; its side is `2^-j_level`.
    pub j_level: i32,
    /// Translation step is `2^-M`.
    #[serde(rename = "M")]
    pub fine: i32,
    pub lambdas: Vec<f64>,
    pub mode: TranslationMode,
    /// Assert the lower bound `λ/2` as well (only meaningful when `ω` is a
    /// proxy for Lebesgue measure around `R`).
    #[serde(default)]
    pub lebesgue_proxy: bool,
}

impl SurgeryConfig {
    pub fn default_for(dim: usize) -> Self {
        SurgeryConfig {
            r: Cube::unit(dim),
            j_level: 1,
            fine: 12,
            lambdas: (2..=8).map(|k| 2f64.powi(-k)).collect(),
            mode: if dim == 1 {
                TranslationMode::Exhaustive
            } else {
                TranslationMode::Sample { count: 1024, seed: 11 }
            },
            lebesgue_proxy: false,
        }
    }

    fn validate(&self, omega: &AtomicMeasure) -> Result<()> {
        let n = self.r.dim();
        if omega.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: omega.dim(),
            });
        }
        if self.lambdas.is_empty() || self.lambdas.iter().any(|&l| !(l > 0.0 && l < 0.5)) {
            return Err(Error::InvalidParameter("lambda values must lie in (0, 1/2)".into()));
        }
        if self.fine <= self.j_level || self.fine > crate::geometry::RES_BITS {
            return Err(Error::InvalidParameter(format!(
                "translation step 2^-{} must be finer than J",
                self.fine
            )));
        }
        if (self.j_level - self.r.level()).abs() > 9 {
            return Err(Error::InvalidParameter("J and R sides are not comparable".into()));
        }
        if let TranslationMode::Exhaustive = self.mode {
            if self.translation_count() > TRANSLATION_CAP {
                return Err(Error::EnumerationCap {
                    count: self.translation_count() as u128,
                    cap: TRANSLATION_CAP as u128,
                });
            }
        }
        if omega.mass(&self.r) <= 0.0 {
            return Err(Error::NullCube(self.r.to_string()));
        }
        Ok(())
    }

    fn per_axis(&self) -> u64 {
        1u64 << (self.fine - self.j_level)
    }

    /// Number of translations in one period.
    pub fn translation_count(&self) -> u64 {
        self.per_axis().saturating_pow(self.r.dim() as u32)
    }

    fn samples(&self) -> u64 {
        match self.mode {
            TranslationMode::Exhaustive => self.translation_count(),
            TranslationMode::Sample { count, .. } => count,
        }
    }

    fn gamma(&self, i: u64) -> [i64; MAX_DIM] {
        let n = self.r.dim();
        let per = self.per_axis();
        let step = side_units(self.fine);
        let mut g = [0i64; MAX_DIM];
        match self.mode {
            TranslationMode::Exhaustive => {
                let mut idx = i;
                for k in (0..n).rev() {
                    g[k] = (idx % per) as i64 * step;
                    idx /= per;
                }
            }
            TranslationMode::Sample { seed, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i);
                for gk in g.iter_mut().take(n) {
                    *gk = rng.random_range(0..per) as i64 * step;
                }
            }
        }
        g
    }
}

/// Atoms at the centres of the level-`level` tiles of `window`, each of mass
/// `2^{-n level}`.
pub fn lattice_window(window: &Cube, level: i32) -> Result<AtomicMeasure> {
    let n = window.dim();
    if level < window.level() || level >= crate::geometry::RES_BITS {
        return Err(Error::InvalidParameter(format!("lattice level {level} incompatible with {window}")));
    }
    let per = 1i64 << (level - window.level());
    if (per as u64).saturating_pow(n as u32) > TRANSLATION_CAP {
        return Err(Error::InvalidParameter("lattice too large".into()));
    }
    let s = side_units(level);
    let mass = 2f64.powi(-(n as i32) * level);
    let total = per.pow(n as u32);
    let atoms: Result<Vec<(Point, f64)>> = (0..total)
        .map(|mut i| {
            let mut u = vec![0i64; n];
            for k in (0..n).rev() {
                u[k] = window.lo(k) + (i % per) * s + s / 2;
                i /= per;
            }
            Point::from_units(&u).map(|p| (p, mass))
        })
        .collect();
    AtomicMeasure::new(n, atoms?)
}

/// Atoms on the hyperplane `x_0 = x0`: lattice centres of level `level`
/// across the other axes of `window`, each of mass `2^{-(n-1) level}`.
pub fn wall_measure(window: &Cube, x0: f64, level: i32) -> Result<AtomicMeasure> {
    let n = window.dim();
    check_dim(n)?;
    if n < 2 {
        return Err(Error::InvalidParameter("a wall needs dimension at least 2".into()));
    }
    let x0u = crate::geometry::f64_to_units(x0)?;
    let per = 1i64 << (level - window.level());
    let s = side_units(level);
    let mass = 2f64.powi(-(n as i32 - 1) * level);
    let total = per.pow(n as u32 - 1);
    let atoms: Result<Vec<(Point, f64)>> = (0..total)
        .map(|mut i| {
            let mut u = vec![x0u; n];
            for k in (1..n).rev() {
                u[k] = window.lo(k) + (i % per) * s + s / 2;
                i /= per;
            }
            Point::from_units(&u).map(|p| (p, mass))
        })
        .collect();
    AtomicMeasure::new(n, atoms?)
}

#[derive(Default, Clone)]
struct Tile {
    mass: Vec<f64>,
    mass_r: Vec<f64>,
    /// `[child][lambda]`.
    collar: Vec<f64>,
    collar_r: Vec<f64>,
}

const HAND: usize = 0;
const FOLLOW: usize = 1;
const EXCEED: usize = 2;

struct Prepared {
    units: Vec<[i64; MAX_DIM]>,
    mass: Vec<f64>,
    in_r: Vec<bool>,
}

fn prepare(omega: &AtomicMeasure, r: &Cube) -> Prepared {
    let mut units = Vec::with_capacity(omega.len());
    let mut mass = Vec::with_capacity(omega.len());
    let mut in_r = Vec::with_capacity(omega.len());
    for a in omega.atoms() {
        let mut u = [0i64; MAX_DIM];
        u[..a.point.dim()].copy_from_slice(a.point.units());
        units.push(u);
        mass.push(a.mass);
        in_r.push(r.contains(&a.point));
    }
    Prepared { units, mass, in_r }
}

/// Per-translation values laid out as `[kind][child][lambda]`.
fn per_translation(cfg: &SurgeryConfig, data: &Prepared, gamma: &[i64; MAX_DIM]) -> Vec<f64> {
    let n = cfg.r.dim();
    let nc = 1usize << n;
    let nl = cfg.lambdas.len();
    let big = side_units(cfg.j_level);
    let half = big / 2;
    let ell = big as f64 / UNIT;
    let margins: Vec<f64> = cfg.lambdas.iter().map(|l| l * ell).collect();
    let mut tiles: BTreeMap<[i64; MAX_DIM], Tile> = BTreeMap::new();
    for (a, x) in data.units.iter().enumerate() {
        let mut key = [0i64; MAX_DIM];
        let mut c = 0usize;
        let mut dmin = i64::MAX;
        for k in 0..n {
            let v = x[k] - gamma[k];
            key[k] = v.div_euclid(big);
            let u = v.rem_euclid(big);
            c = (c << 1) | (u >= half) as usize;
            dmin = dmin.min(u).min(big - u);
        }
        let d = dmin as f64 / UNIT;
        let t = tiles.entry(key).or_insert_with(|| Tile {
            mass: vec![0.0; nc],
            mass_r: vec![0.0; nc],
            collar: vec![0.0; nc * nl],
            collar_r: vec![0.0; nc * nl],
        });
        let m = data.mass[a];
        t.mass[c] += m;
        if data.in_r[a] {
            t.mass_r[c] += m;
        }
        for (li, &mg) in margins.iter().enumerate() {
            if d <= mg {
                t.collar[c * nl + li] += m;
                if data.in_r[a] {
                    t.collar_r[c * nl + li] += m;
                }
            }
        }
    }
    let mut out = vec![0.0; 3 * nc * nl];
    let roots: Vec<f64> = cfg.lambdas.iter().map(|l| l.sqrt()).collect();
    for t in tiles.values() {
        let mt: f64 = t.mass.iter().sum();
        let mrt: f64 = t.mass_r.iter().sum();
        let avg = mrt / mt;
        for c in 0..nc {
            if t.mass[c] <= 0.0 {
                continue;
            }
            let ac = t.mass_r[c] / t.mass[c];
            let d2 = (ac - avg).powi(2);
            for li in 0..nl {
                let j = c * nl + li;
                out[HAND * nc * nl + j] += t.collar_r[j];
                out[FOLLOW * nc * nl + j] += t.collar[j] * d2;
                if t.collar[j] / t.mass[c] * ac > roots[li] {
                    out[EXCEED * nc * nl + j] = 1.0;
                }
            }
        }
    }
    out
}

fn translation_rows(cfg: &SurgeryConfig, omega: &AtomicMeasure, exec: Exec) -> Vec<Vec<f64>> {
    let data = prepare(omega, &cfg.r);
    exec.map_range(cfg.samples() as usize, |i| per_translation(cfg, &data, &cfg.gamma(i as u64)))
}

struct Averages {
    mean: Vec<f64>,
    stderr: Vec<f64>,
}

fn average(rows: &[Vec<f64>], sampled: bool) -> Averages {
    let width = rows.first().map_or(0, |r| r.len());
    let n = rows.len() as f64;
    let mut mean = vec![0.0; width];
    let mut stderr = vec![0.0; width];
    for j in 0..width {
        let mut s = CompensatedSum::new();
        for r in rows {
            s.add(r[j]);
        }
        mean[j] = s.value() / n;
        if sampled && rows.len() > 1 {
            let mut ss = CompensatedSum::new();
            for r in rows {
                ss.add((r[j] - mean[j]).powi(2));
            }
            stderr[j] = (ss.value() / (n - 1.0) / n).sqrt();
        }
    }
    Averages { mean, stderr }
}

enum Which {
    Hand,
    Follow,
}

fn run(cfg: &SurgeryConfig, omega: &AtomicMeasure, which: Which, exec: Exec) -> Result<ExperimentResult> {
    cfg.validate(omega)?;
    let n = cfg.r.dim();
    let nc = 1usize << n;
    let nl = cfg.lambdas.len();
    let rmass = omega.mass(&cfg.r);
    let rows = translation_rows(cfg, omega, exec);
    let sampled = matches!(cfg.mode, TranslationMode::Sample { .. });
    let av = average(&rows, sampled);
    let kind = match which {
        Which::Hand => HAND,
        Which::Follow => FOLLOW,
    };
    let name = match which {
        Which::Hand => "surgery_hand",
        Which::Follow => "follow_est",
    };
    let mut res = ExperimentResult::new(name, "lambda");
    let mut per_child = Vec::new();
    for (li, &lam) in cfg.lambdas.iter().enumerate() {
        let vals: Vec<f64> = (0..nc).map(|c| av.mean[kind * nc * nl + c * nl + li] / rmass).collect();
        let (best, v) = crate::exec::argmax(vals.iter().copied()).expect("at least one child");
        let mut p = SweepPoint::new(lam, v, av.stderr[kind * nc * nl + best * nl + li] / rmass);
        p.extra.insert("child".into(), best as f64);
        let exceed = (0..nc)
            .map(|c| av.mean[EXCEED * nc * nl + c * nl + li])
            .fold(0.0, f64::max);
        p.extra.insert("exceed_sqrt_lambda".into(), exceed);
        let rate = match which {
            Which::Hand => lam,
            Which::Follow => lam.sqrt(),
        };
        p.ratio = Some(v / rate);
        per_child.push(vals);
        res.points.push(p);
    }
    res.samples = rows.len() as u64;
    if let TranslationMode::Sample { seed, .. } = cfg.mode {
        res.seeds.push(seed);
    }
    res.fitted_constant = res.points.iter().filter_map(|p| p.ratio).reduce(f64::max);
    res.max_ratio = res.fitted_constant;
    res.slope = loglog_slope(&res.points);
    let all_zero = res.points.iter().all(|p| p.estimate == 0.0);
    match which {
        Which::Hand => {
            let cn = 4.0 * n as f64;
            for p in res.points.clone() {
                res.check(Check::le(&format!("hand_upper_lambda_{}", p.x), p.estimate, cn * p.x + 3.0 * p.stderr));
                if cfg.lebesgue_proxy {
                    res.check(Check::ge(&format!("hand_lower_lambda_{}", p.x), p.estimate, p.x / 2.0 - 3.0 * p.stderr));
                }
            }
            match res.slope {
                Some(s) if !all_zero => res.check(Check::ge("loglog_slope", s, 0.9)),
                _ => res.notes.push("all estimates zero; slope not fitted".into()),
            }
        }
        Which::Follow => match res.slope {
            Some(s) if !all_zero => {
                res.check(Check::ge("loglog_slope", s, 0.45));
                if cfg.lebesgue_proxy {
                    res.check(Check::le("loglog_slope_upper", s, 1.1));
                }
            }
            _ => res.notes.push("all estimates zero; slope not fitted".into()),
        },
    }
    res.details = json!({
        "config": cfg,
        "r_mass": rmass,
        "atoms": omega.len(),
        "per_child": per_child,
    });
    Ok(res)
}

/// `max_{J'} E |R ∩ [(J+γ)' \ (J+γ)_λ]|_ω / |R|_ω` per `λ`.
pub fn exp_surgery_hand(cfg: &SurgeryConfig, omega: &AtomicMeasure, exec: Exec) -> Result<ExperimentResult> {
    run(cfg, omega, Which::Hand, exec)
}

/// `max_{J'} E ∫_{J' \ J_λ} |Δ_J 1_R|² dω / |R|_ω` per `λ`.
pub fn exp_follow_est(cfg: &SurgeryConfig, omega: &AtomicMeasure, exec: Exec) -> Result<ExperimentResult> {
    run(cfg, omega, Which::Follow, exec)
}

/// The hand average for one `λ` and child `child`, computed directly over
/// step `2^-M` and as the average of averages over the cosets of the
/// coarser step `2^{-⌊log2(1/(λℓ(J)))⌋}`. Exhaustive mode only.
pub fn two_step_hand_average(
    cfg: &SurgeryConfig,
    omega: &AtomicMeasure,
    lambda_index: usize,
    child: usize,
    exec: Exec,
) -> Result<(f64, f64)> {
    cfg.validate(omega)?;
    if cfg.mode != TranslationMode::Exhaustive {
        return Err(Error::InvalidParameter("two-step average needs exhaustive translations".into()));
    }
    let n = cfg.r.dim();
    let nl = cfg.lambdas.len();
    if lambda_index >= nl || child >= 1 << n {
        return Err(Error::InvalidParameter("lambda or child index out of range".into()));
    }
    let rows = translation_rows(cfg, omega, exec);
    let vals: Vec<f64> = rows.iter().map(|r| r[HAND * (nl << n) + child * nl + lambda_index]).collect();
    let direct = crate::exec::compensated_sum(vals.iter().copied()) / vals.len() as f64;
    let width = cfg.lambdas[lambda_index] * 2f64.powi(-cfg.j_level);
    let coarse_level = (-width.log2()).ceil() as i32;
    let coarse_level = coarse_level.clamp(cfg.j_level, cfg.fine);
    let ratio = 1u64 << (cfg.fine - coarse_level);
    let per = cfg.per_axis();
    // Offsets within one coarse cell, per axis; the coset of an offset is
    // every translation congruent to it modulo the coarse step.
    let cosets = ratio.pow(n as u32);
    let mut coset_means = Vec::with_capacity(cosets as usize);
    for o in 0..cosets {
        let mut off = [0u64; MAX_DIM];
        let mut t = o;
        for k in (0..n).rev() {
            off[k] = t % ratio;
            t /= ratio;
        }
        let members: Vec<f64> = (0..rows.len() as u64)
            .filter(|&i| {
                let mut idx = i;
                let mut ok = true;
                for k in (0..n).rev() {
                    ok &= (idx % per) % ratio == off[k];
                    idx /= per;
                }
                ok
            })
            .map(|i| vals[i as usize])
            .collect();
        coset_means.push(crate::exec::compensated_sum(members.iter().copied()) / members.len() as f64);
    }
    let two_step = crate::exec::compensated_sum(coset_means.iter().copied()) / coset_means.len() as f64;
    Ok((direct, two_step))
}
