//! One line per acceptance criterion. Exits non-zero if any criterion fails.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::time::Instant;
use weightlab::cauchy::{b_testing_ratio, discrete_check, flat_pv_ratio, log_square_integral, CurveSpec};
use weightlab::constants::{full_report, ConstantsParams, CubeFamily, FamilySpec};
use weightlab::experiments::*;
use weightlab::geometry::{side_units, Cube, DyadicGrid};
use weightlab::haar::HaarBasis;
use weightlab::kernels::{seam_gap, tangent_s, Component, KernelSpec, Truncation};
use weightlab::measures::{random_uniform, AtomicMeasure};
use weightlab::Exec;

type Outcome = Result<String, String>;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn haar_correctness() -> Outcome {
    let (mut ortho, mut parseval, mut tele, mut useful) = (0.0f64, 0.0f64, 0.0f64, true);
    for seed in 0..100u64 {
        let n = 1 + (seed % 2) as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let atoms = rng.random_range(2..=64);
        let mu = random_uniform(n, atoms, &Cube::unit(n), 10, 0.5, rng.random()).map_err(|e| e.to_string())?;
        let grid = DyadicGrid::sample(seed, n, 12, 0).map_err(|e| e.to_string())?;
        let basis = HaarBasis::build_forest(&grid, &mu).map_err(|e| e.to_string())?;
        let f: Vec<f64> = (0..mu.len()).map(|_| rng.random_range(-1.0..1.0)).collect();

        // Haar functions together with the normalised root indicators.
        let mut vecs: Vec<Vec<f64>> = Vec::new();
        for node in basis.nodes() {
            for a in 0..node.functions.len() {
                vecs.push(basis.function(&node.cube, a).unwrap());
            }
        }
        for root in basis.roots() {
            let m = mu.mass(root);
            vecs.push(mu.indicator(root).into_iter().map(|v| v / m.sqrt()).collect());
        }
        if vecs.len() != mu.len() {
            return Err(format!("seed {seed}: {} basis vectors for {} atoms", vecs.len(), mu.len()));
        }
        for i in 0..vecs.len() {
            for j in i..vecs.len() {
                let want = if i == j { 1.0 } else { 0.0 };
                ortho = ortho.max((mu.inner(&vecs[i], &vecs[j]) - want).abs());
            }
        }

        let mut rhs = basis.coefficient_energy(&f, None);
        for root in basis.roots() {
            rhs += mu.mass(root) * basis.avg(&f, root).unwrap().powi(2);
        }
        let lhs = mu.norm(&f).powi(2);
        parseval = parseval.max((lhs - rhs).abs() / lhs);

        for node in basis.nodes() {
            let q1 = node.cube;
            for child in &node.children {
                let e0 = basis.avg(&f, &child.cube).unwrap();
                let mut acc = vec![0.0; mu.len()];
                for level in (grid.top()..=q1.level()).rev() {
                    let q2 = grid.ancestor(&q1, level);
                    let d = basis.delta(&f, &q2);
                    for (x, y) in acc.iter_mut().zip(&d) {
                        *x += y;
                    }
                    let e2 = basis.avg(&f, &q2).unwrap();
                    for &i in &child.atoms {
                        tele = tele.max((acc[i] - (e0 - e2)).abs());
                    }
                }
            }
            for h in &node.functions {
                for (c, child) in node.children.iter().enumerate() {
                    useful &= h[c].abs() <= (1.0 + 1e-12) / child.mass.sqrt();
                }
            }
        }
    }
    verdict(
        ortho <= 1e-12 && parseval <= 1e-10 && tele <= 1e-12 && useful,
        format!("orthonormality {ortho:.1e}, parseval {parseval:.1e}, telescoping {tele:.1e}, useful bound {useful}"),
    )
}

fn kernel_truncation() -> Outcome {
    let mut s_err = 0.0f64;
    let mut gap = 0.0f64;
    let mut sweep_ok = true;
    for (n, alpha) in [(1usize, 0.0), (2, 0.0), (2, 1.0), (2, 0.5)] {
        let p = n as f64 - alpha;
        for big_r in [1.0f64, 2.0, 7.5] {
            // the tangent line at R through (R, R^-p) with slope -p R^{-p-1}
            let zero = big_r + big_r.powf(-p) / (p * big_r.powf(-p - 1.0));
            s_err = s_err.max((tangent_s(alpha, n, big_r) - zero).abs() / zero);
        }
        let comp = if n == 1 { Component::Scalar1d } else { Component::Vector };
        let spec = KernelSpec::new(alpha, n, comp, Truncation::tangent(0.3, 2.0)).map_err(|e| e.to_string())?;
        gap = gap.max(seam_gap(&spec, 0.3)).max(seam_gap(&spec, 2.0));
        let s = spec.s();
        for k in 1..=10_000 {
            let r = 1.2 * s * k as f64 / 10_000.0;
            let v = spec.psi(r);
            sweep_ok &= v >= 0.0 && v <= r.powf(alpha - n as f64) * (1.0 + 1e-12);
        }
    }
    verdict(
        s_err <= 1e-12 && gap <= 1e-6 && sweep_ok,
        format!("S error {s_err:.1e}, seam gap {gap:.1e}, 0 <= psi <= r^(a-n) {sweep_ok}"),
    )
}

fn single_atom() -> Outcome {
    let s = AtomicMeasure::from_f64(1, &[(&[0.25], 1.0)]).unwrap();
    let w = AtomicMeasure::from_f64(1, &[(&[0.75], 1.0)]).unwrap();
    let spec = KernelSpec::default_for(0.0, &s, &w).map_err(|e| e.to_string())?;
    let fam = CubeFamily::build(&s, &w, &FamilySpec::default()).map_err(|e| e.to_string())?;
    let r = full_report(&spec, &s, &w, &fam, &ConstantsParams::default(), Exec::default()).map_err(|e| e.to_string())?;
    let twos = [r.t_test, r.t_test_star, r.n_norm, r.wbp, r.i_touch];
    let err = twos.iter().map(|v| (v - 2.0).abs()).fold((r.a2_offset - 4.0).abs(), f64::max);
    verdict(
        err <= 1e-9,
        format!("T={} T*={} N={} WBP={} I={} A2={} (max error {err:.1e})", r.t_test, r.t_test_star, r.n_norm, r.wbp, r.i_touch, r.a2_offset),
    )
}

fn necessity_ordering() -> Outcome {
    let cfg = GoodLambdaConfig::default();
    let pairs = corpus(&cfg.corpus).map_err(|e| e.to_string())?;
    let reps = corpus_reports(&pairs, &cfg.family, &cfg.params, Exec::default()).map_err(|e| e.to_string())?;
    let mut worst = f64::NEG_INFINITY;
    let mut at = 0;
    for (i, r) in reps.iter().enumerate() {
        let m = r.t_test.max(r.t_test_star).max(r.wbp).max(r.i_touch);
        if m - r.n_norm > worst {
            worst = m - r.n_norm;
            at = i;
        }
    }
    verdict(
        worst <= 1e-9,
        format!("{} instances, max(T, T*, WBP, I) - N <= {worst:.3e} (instance {at})", reps.len()),
    )
}

/// Level-`l` cube containing `x` in the grid built from scale bits: the
/// standard tiling shifted by `sum_{l < i <= M} 2^-i beta_i`.
fn beta_cube(bits: &[bool], axis: usize, fine: i32, top: i32, x: i64, level: i32) -> i64 {
    let per_axis = (fine - top + 1) as usize;
    let off: i64 = ((level + 1)..=fine)
        .filter(|&i| bits[axis * per_axis + (i - top) as usize])
        .map(side_units)
        .sum();
    let s = side_units(level);
    off + (x - off).div_euclid(s) * s
}

fn grid_equivalence() -> Outcome {
    let mut cases = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (n, max_depth) in [(1usize, 10i32), (2, 4)] {
        for depth in 1..=max_depth {
            let (fine, top) = (depth, 0);
            let count = 1u128 << (n as i32 * depth);
            let gammas: BTreeSet<DyadicGrid> = (0..count)
                .map(|i| DyadicGrid::by_index(n, fine, top, i).unwrap())
                .collect();
            let per_axis = (fine - top + 1) as usize;
            let nbits = n * per_axis;
            let mut betas = BTreeSet::new();
            for code in 0u64..(1 << nbits) {
                let bits: Vec<bool> = (0..nbits).map(|b| code >> b & 1 == 1).collect();
                let g = DyadicGrid::from_scales(n, fine, top, &bits).unwrap();
                for _ in 0..3 {
                    let x: Vec<i64> = (0..n).map(|_| rng.random_range(-(1i64 << 24)..(2i64 << 24))).collect();
                    for level in top..=fine {
                        let q = g.cube_at(&x, level);
                        for k in 0..n {
                            if q.lo(k) != beta_cube(&bits, k, fine, top, x[k], level) {
                                return Err(format!("n={n} M-N={depth}: grid cube differs from the scale construction"));
                            }
                        }
                    }
                }
                betas.insert(g);
            }
            if betas != gammas || gammas.len() as u128 != count {
                return Err(format!("n={n} M-N={depth}: {} scale grids, {} translations", betas.len(), gammas.len()));
            }
            cases.push(format!("{n}:{depth}"));
        }
    }
    Ok(format!("sets equal with 2^(n(M-N)) members for n:M-N in {}", cases.join(" ")))
}

fn slope_of(r: &ExperimentResult) -> String {
    r.slope.map(|s| format!("{s:.3}")).unwrap_or_else(|| "none".into())
}

fn probabilistic_decay() -> Outcome {
    let e = Exec::default();
    let a = exp_cond_prob_bad(&CondProbConfig::default(), e).map_err(|e| e.to_string())?;
    let b = exp_bad_grid_prob(&BadGridConfig::default(), e).map_err(|e| e.to_string())?;
    let c = exp_bad_projection(&BadProjectionConfig::default(), e).map_err(|e| e.to_string())?;
    let ok = [&a, &b, &c].iter().all(|r| r.passed)
        && a.slope.is_some_and(|s| s <= -0.38)
        && b.slope.is_some_and(|s| s <= -0.38)
        && c.slope.is_some_and(|s| s <= -0.19);
    verdict(
        ok,
        format!("slopes: conditional {}, bad grid {}, bad projection {}", slope_of(&a), slope_of(&b), slope_of(&c)),
    )
}

fn surgery() -> Outcome {
    let e = Exec::default();
    let w1 = Cube::new(&[-(1i64 << 24)], -2).unwrap();
    let w2 = Cube::new(&[-(1i64 << 24), -(1i64 << 24)], -2).unwrap();
    let lat = lattice_window(&w1, 9).map_err(|e| e.to_string())?;
    let cfg = SurgeryConfig {
        lebesgue_proxy: true,
        ..SurgeryConfig::default_for(1)
    };
    let hand = exp_surgery_hand(&cfg, &lat, e).map_err(|e| e.to_string())?;
    let (lo, hi) = hand.points.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), p| {
        (lo.min(p.estimate / p.x), hi.max(p.estimate / p.x))
    });
    let in_band = lo >= 0.5 && hi <= 4.0;
    let follow_lat = exp_follow_est(&cfg, &lat, e).map_err(|e| e.to_string())?;
    let one = AtomicMeasure::from_f64(1, &[(&[0.5], 1.0)]).unwrap();
    let follow_atom = exp_follow_est(&SurgeryConfig::default_for(1), &one, e).map_err(|e| e.to_string())?;
    let wall = wall_measure(&w2, 0.5 + 1.0 / 4096.0 + 1.0 / 8192.0, 8).map_err(|e| e.to_string())?;
    let follow_wall = exp_follow_est(&SurgeryConfig::default_for(2), &wall, e).map_err(|e| e.to_string())?;
    let atom_zero = follow_atom.points.iter().all(|p| p.estimate == 0.0);
    let ok = hand.passed
        && in_band
        && hand.slope.is_some_and(|s| s >= 0.9)
        && follow_lat.passed
        && follow_lat.slope.is_some_and(|s| s >= 0.45)
        && follow_atom.passed
        && (atom_zero || follow_atom.slope.is_some_and(|s| s >= 0.45))
        && follow_wall.passed
        && follow_wall.slope.is_some_and(|s| s >= 0.45);
    verdict(
        ok,
        format!(
            "hand/lambda in [{lo:.3}, {hi:.3}] slope {}; follow slopes lattice {}, atom {}, wall {}",
            slope_of(&hand),
            slope_of(&follow_lat),
            if atom_zero { "identically 0".into() } else { slope_of(&follow_atom) },
            slope_of(&follow_wall)
        ),
    )
}

fn good_lambda() -> Outcome {
    let baseline: Baseline =
        serde_json::from_str(include_str!("../baselines/goodlambda.json")).map_err(|e| e.to_string())?;
    let cfg = GoodLambdaConfig::default();
    if baseline.corpus != cfg.corpus || baseline.lambdas != cfg.lambdas || baseline.family != cfg.family {
        return Err("baseline was produced with a different configuration".into());
    }
    let pairs = corpus(&cfg.corpus).map_err(|e| e.to_string())?;
    let (good, strong) = good_lambda_suite(&pairs, &cfg, Some(&baseline), Exec::default()).map_err(|e| e.to_string())?;
    let failed: Vec<String> = good.failed_checks().iter().chain(strong.failed_checks().iter()).map(|c| c.name.clone()).collect();
    verdict(
        good.passed && strong.passed,
        format!(
            "good-lambda max {:.6} (baseline {:.6}, doubled {}), strong max {:.6} (baseline {:.6}){}",
            good.max_ratio.unwrap_or(f64::NAN),
            baseline.good_lambda_max_ratio,
            good.details["doubled_max_ratio"],
            strong.max_ratio.unwrap_or(f64::NAN),
            baseline.one_dim_strong_max_ratio,
            if failed.is_empty() { String::new() } else { format!("; failed {failed:?}") }
        ),
    )
}

fn cauchy_demo() -> Outcome {
    let e = |e: weightlab::Error| e.to_string();
    let base = b_testing_ratio(&CurveSpec::Zero, 0.0, 1.0, 64).map_err(e)?.value;
    let mut spread = 0.0f64;
    for (a, b) in [(2.0, 2.5), (-1.0, 3.0), (10.0, 10.125)] {
        let v = b_testing_ratio(&CurveSpec::Zero, a, b, 64).map_err(e)?.value;
        spread = spread.max((v - base).abs() / base);
    }
    let oracle = flat_pv_ratio().map_err(e)?.value + PI * PI;
    let oracle_err = (base - oracle).abs() / oracle;
    let log2 = (log_square_integral().map_err(e)?.value - 2.0).abs();
    let d = discrete_check(10, Exec::default()).map_err(e)?;
    verdict(
        spread <= 0.01 && oracle_err <= 1e-4 && log2 <= 1e-8 && d.relative_error <= 0.05,
        format!(
            "interval spread {spread:.1e}, oracle error {oracle_err:.1e}, log-square error {log2:.1e}, lattice error {:.3}",
            d.relative_error
        ),
    )
}

fn all_reports(exec: Exec) -> Vec<String> {
    let js = |r: &ExperimentResult| serde_json::to_string(r).unwrap();
    let mut out = Vec::new();
    out.push(js(&exp_cond_prob_bad(&CondProbConfig::default(), exec).unwrap()));
    let bg = BadGridConfig {
        mode: GridMode::Sample { count: 2000, seed: 1 },
        ..Default::default()
    };
    out.push(js(&exp_bad_grid_prob(&bg, exec).unwrap()));
    let bp = BadProjectionConfig {
        mode: GridMode::Sample { count: 300, seed: 2 },
        ..Default::default()
    };
    out.push(js(&exp_bad_projection(&bp, exec).unwrap()));
    let w1 = Cube::new(&[-(1i64 << 24)], -2).unwrap();
    let lat = lattice_window(&w1, 9).unwrap();
    let sc = SurgeryConfig::default_for(1);
    out.push(js(&exp_surgery_hand(&sc, &lat, exec).unwrap()));
    let w2 = Cube::new(&[-(1i64 << 24), -(1i64 << 24)], -2).unwrap();
    let wall = wall_measure(&w2, 0.5 + 1.0 / 4096.0, 6).unwrap();
    let sc2 = SurgeryConfig {
        mode: TranslationMode::Sample { count: 128, seed: 3 },
        ..SurgeryConfig::default_for(2)
    };
    out.push(js(&exp_follow_est(&sc2, &wall, exec).unwrap()));
    let mut cfg = GoodLambdaConfig::default();
    cfg.corpus.pairs = 6;
    cfg.corpus.max_atoms = 12;
    let pairs = corpus(&cfg.corpus).unwrap();
    let (g, s) = good_lambda_suite(&pairs, &cfg, None, exec).unwrap();
    out.push(js(&g));
    out.push(js(&s));
    let inst = vec![AppendixInstance::random(6, 1).unwrap()];
    let ac = AppendixConfig {
        mode: GridMode::Sample { count: 8, seed: 5 },
        ..Default::default()
    };
    out.push(js(&exp_appendix_parts(&inst, &ac, exec).unwrap()));
    out
}

fn determinism() -> Outcome {
    let reference = all_reports(Exec::Sequential);
    let mut runs = 0;
    for threads in [1, 2, 4] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
        let got = pool.install(|| all_reports(Exec::Parallel));
        if got != reference {
            let bad: Vec<usize> = (0..got.len()).filter(|&i| got[i] != reference[i]).collect();
            return Err(format!("{threads} threads: reports {bad:?} differ from the sequential run"));
        }
        runs += 1;
    }
    Ok(format!("{} reports identical across sequential and {runs} thread counts", reference.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("Haar correctness", haar_correctness),
        ("kernel truncation", kernel_truncation),
        ("single-atom closed forms", single_atom),
        ("necessity ordering", necessity_ordering),
        ("grid-construction equivalence", grid_equivalence),
        ("probabilistic decay", probabilistic_decay),
        ("surgery estimates", surgery),
        ("good-lambda inequality", good_lambda),
        ("Cauchy demo", cauchy_demo),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let res = f();
        let secs = t.elapsed().as_secs_f64();
        match res {
            Ok(d) => println!("criterion {:>2} PASS {name} ({secs:.1}s): {d}", i + 1),
            Err(d) => {
                failures += 1;
                println!("criterion {:>2} FAIL {name} ({secs:.1}s): {d}", i + 1);
            }
        }
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
