//! Grid averages of the bilinear forms `B`, `C_D` and `S_D`.

use super::mc::{column_estimates, mc_rows, GridMode};
use super::{Check, ExperimentResult, SweepPoint};
use crate::constants::{full_report, ConstantsParams, ConstantsReport, CubeFamily, FamilySpec};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::Cube;
use crate::kernels::KernelSpec;
use crate::measures::{random_uniform, AtomicMeasure};
use crate::operators::forms_b_c_s;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Debug, Clone, PartialEq)]
pub struct AppendixInstance {
    pub sigma: AtomicMeasure,
    pub omega: AtomicMeasure,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

fn centred(mu: &AtomicMeasure, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut f: Vec<f64> = (0..mu.len()).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let m = mu.integral(&f) / mu.total_mass();
    for v in &mut f {
        *v -= m;
    }
    f
}

impl AppendixInstance {
    /// Random one-dimensional instance with mean-zero `f` and `g`.
    pub fn random(atoms: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = Cube::unit(1);
        let sigma = random_uniform(1, atoms, &w, 10, 0.5, rng.random())?;
        let omega = random_uniform(1, atoms, &w, 10, 0.5, rng.random())?;
        let f = centred(&sigma, &mut rng);
        let g = centred(&omega, &mut rng);
        Ok(AppendixInstance { sigma, omega, f, g })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixConfig {
    pub lambdas: Vec<f64>,
    pub family: FamilySpec,
    pub params: ConstantsParams,
    pub mode: GridMode,
}

impl Default for AppendixConfig {
    fn default() -> Self {
        AppendixConfig {
            lambdas: (2..=6).map(|k| 2f64.powi(-k)).collect(),
            family: FamilySpec::default(),
            params: ConstantsParams::default(),
            mode: GridMode::Sample { count: 32, seed: 5 },
        }
    }
}

/// `(1/λ)√𝔄₂ + 𝔗 + 𝔗* + λ^{1/4}𝔑`.
fn rhs_part2(r: &ConstantsReport, lambda: f64) -> f64 {
    r.frak_a2.sqrt() / lambda + r.t_test + r.t_test_star + lambda.powf(0.25) * r.n_norm
}

/// The part-2 right-hand side plus `ℰ + ℰ* + 2^{-εr}𝔑`.
fn rhs_part1(r: &ConstantsReport, lambda: f64) -> f64 {
    let g = &r.params.goodness;
    rhs_part2(r, lambda) + r.e_strong + r.e_strong_star + 2f64.powf(-g.eps * g.r as f64) * r.n_norm
}

fn safe_div(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        0.0
    }
}

/// `E|B - C_D|` and `E S_D` per instance, normalised by the right-hand sides
/// and `‖f‖‖g‖`; the fitted constants are the maxima over `λ` and instances.
pub fn exp_appendix_parts(instances: &[AppendixInstance], cfg: &AppendixConfig, exec: Exec) -> Result<ExperimentResult> {
    if instances.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    cfg.params.validate()?;
    let nl = cfg.lambdas.len();
    let mut part1 = vec![0.0f64; nl];
    let mut part2 = vec![0.0f64; nl];
    let mut triangle_ok = true;
    let mut per_instance = Vec::new();
    let mut samples = 0;
    for inst in instances {
        let spec = KernelSpec::default_for(cfg.params.alpha, &inst.sigma, &inst.omega)?;
        let fam = CubeFamily::build(&inst.sigma, &inst.omega, &cfg.family)?;
        let rep = full_report(&spec, &inst.sigma, &inst.omega, &fam, &cfg.params, exec)?;
        let params = cfg.params.goodness;
        let rows = mc_rows(
            spec.dim,
            cfg.family.fine,
            cfg.family.top,
            cfg.mode,
            |grid| {
                let fm = forms_b_c_s(&spec, &inst.sigma, &inst.omega, &inst.f, &inst.g, grid, &params, Exec::Sequential)?;
                Ok(vec![(fm.b - fm.c).abs(), fm.s, (fm.c.abs() <= fm.s * (1.0 + 1e-12) + 1e-300) as u8 as f64])
            },
            exec,
        )?;
        samples += rows.len() as u64;
        triangle_ok &= rows.iter().all(|r| r[2] == 1.0);
        let est = column_estimates(&rows, cfg.mode);
        let norms = inst.sigma.norm(&inst.f) * inst.omega.norm(&inst.g);
        for (k, &l) in cfg.lambdas.iter().enumerate() {
            part1[k] = part1[k].max(safe_div(est[0].mean, rhs_part1(&rep, l) * norms));
            part2[k] = part2[k].max(safe_div(est[1].mean, rhs_part2(&rep, l) * norms));
        }
        per_instance.push(json!({
            "b_minus_c": est[0],
            "s": est[1],
            "norms": norms,
            "N_norm": rep.n_norm,
        }));
    }
    let mut res = ExperimentResult::new("appendix_parts", "lambda");
    for k in 0..nl {
        let mut p = SweepPoint::new(cfg.lambdas[k], part2[k], 0.0);
        p.ratio = Some(part2[k]);
        p.extra.insert("part1_ratio".into(), part1[k]);
        res.points.push(p);
    }
    let c1 = part1.iter().copied().fold(0.0, f64::max);
    let c2 = part2.iter().copied().fold(0.0, f64::max);
    res.fitted_constant = Some(c2);
    res.max_ratio = Some(c1.max(c2));
    res.samples = samples;
    if let GridMode::Sample { seed, .. } = cfg.mode {
        res.seeds.push(seed);
    }
    res.check(Check::ge("c_abs_le_s_every_grid", triangle_ok as u8 as f64, 1.0));
    res.check(Check::ge("constants_finite", (c1.is_finite() && c2.is_finite()) as u8 as f64, 1.0));
    res.details = json!({
        "config": cfg,
        "fitted_part1": c1,
        "fitted_part2": c2,
        "instances": per_instance,
    });
    Ok(res)
}
