//! Testing, weak boundedness and indicator/touching constants.

use super::{sup_by, CubeFamily, Sup, Witness};
use crate::error::{Error, Result};
use crate::exec::{CompensatedSum, Exec};
use crate::geometry::touching;
use crate::measures::AtomicMeasure;
use crate::operators::KernelTable;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestingMode {
    Local,
    Full,
}

/// `sqrt(sup_Q (1/|Q|_σ) ∫ |T(1_Q σ)|² dω)`, the `ω`-integral over `Q`
/// (local) or over every atom (full).
pub fn testing(
    table: &KernelTable,
    sigma: &AtomicMeasure,
    omega: &AtomicMeasure,
    family: &CubeFamily,
    mode: TestingMode,
    exec: Exec,
) -> Sup {
    let (sa, wa) = (sigma.atoms(), omega.atoms());
    let cubes = family.cubes();
    let all: Vec<usize> = (0..omega.len()).collect();
    sup_by(
        exec,
        cubes.len(),
        |q| {
            let fc = &cubes[q];
            if fc.sigma_mass <= 0.0 {
                return 0.0;
            }
            let rows = if mode == TestingMode::Local { &fc.omega } else { &all };
            let mut acc = CompensatedSum::new();
            for &i in rows {
                for c in 0..table.outputs() {
                    let t = crate::exec::compensated_sum(fc.sigma.iter().map(|&j| table.get(c, i, j) * sa[j].mass));
                    acc.add(wa[i].mass * t * t);
                }
            }
            acc.value() / fc.sigma_mass
        },
        |q| Witness::Cube { cube: cubes[q].cube },
    )
    .sqrt()
}

/// The dual condition: `T*` applied to `1_Q ω`, integrated against `σ`.
pub fn testing_star(
    table: &KernelTable,
    sigma: &AtomicMeasure,
    omega: &AtomicMeasure,
    family: &CubeFamily,
    mode: TestingMode,
    exec: Exec,
) -> Sup {
    let (sa, wa) = (sigma.atoms(), omega.atoms());
    let cubes = family.cubes();
    let all: Vec<usize> = (0..sigma.len()).collect();
    sup_by(
        exec,
        cubes.len(),
        |q| {
            let fc = &cubes[q];
            if fc.omega_mass <= 0.0 {
                return 0.0;
            }
            let cols = if mode == TestingMode::Local { &fc.sigma } else { &all };
            let mut acc = CompensatedSum::new();
            for &j in cols {
                for c in 0..table.outputs() {
                    let t = crate::exec::compensated_sum(fc.omega.iter().map(|&i| table.get(c, i, j) * wa[i].mass));
                    acc.add(sa[j].mass * t * t);
                }
            }
            acc.value() / fc.omega_mass
        },
        |q| Witness::Cube { cube: cubes[q].cube },
    )
    .sqrt()
}

/// `|∫_A T(1_B σ) dω| / sqrt(|A|_ω |B|_σ)`, the modulus taken over components.
fn pair_value(table: &KernelTable, sigma: &AtomicMeasure, omega: &AtomicMeasure, family: &CubeFamily, a: usize, b: usize) -> f64 {
    let cubes = family.cubes();
    let (fa, fb) = (&cubes[a], &cubes[b]);
    let (sa, wa) = (sigma.atoms(), omega.atoms());
    let mut sq = 0.0;
    for c in 0..table.outputs() {
        let mut acc = CompensatedSum::new();
        for &i in &fa.omega {
            for &j in &fb.sigma {
                acc.add(wa[i].mass * table.get(c, i, j) * sa[j].mass);
            }
        }
        sq += acc.value() * acc.value();
    }
    sq.sqrt() / (fa.omega_mass * fb.sigma_mass).sqrt()
}

/// Ordered pairs `(A, B)`: `A` charged by `ω`, `B` by `σ`, comparable within
/// `2^eta`, one inside the triple of the other and disjoint.
fn separated_pairs(family: &CubeFamily, eta: u32, touching_only: bool) -> Vec<(usize, usize)> {
    let cubes = family.cubes();
    let mut out = Vec::new();
    for (a, fa) in cubes.iter().enumerate() {
        if fa.omega_mass <= 0.0 {
            continue;
        }
        for b in family.related(&fa.cube, eta) {
            let fb = &cubes[b];
            if fb.sigma_mass > 0.0 && (!touching_only || touching(&fa.cube, &fb.cube)) {
                out.push((a, b));
            }
        }
    }
    out
}

fn pair_sup(
    table: &KernelTable,
    sigma: &AtomicMeasure,
    omega: &AtomicMeasure,
    family: &CubeFamily,
    pairs: &[(usize, usize)],
    exec: Exec,
) -> Sup {
    let cubes = family.cubes();
    sup_by(
        exec,
        pairs.len(),
        |p| pair_value(table, sigma, omega, family, pairs[p].0, pairs[p].1),
        |p| Witness::Pair {
            first: cubes[pairs[p].0].cube,
            second: cubes[pairs[p].1].cube,
        },
    )
}

/// Weak boundedness over pairs with side ratio within `2^eta`. The witness
/// lists the `ω` cube first.
pub fn wbp(
    table: &KernelTable,
    sigma: &AtomicMeasure,
    omega: &AtomicMeasure,
    family: &CubeFamily,
    eta: u32,
    exec: Exec,
) -> Result<Sup> {
    let pairs = separated_pairs(family, eta, false);
    if pairs.is_empty() {
        return Err(Error::NoQualifyingPairs);
    }
    Ok(pair_sup(table, sigma, omega, family, &pairs, exec))
}

/// The touching restriction of [`wbp`]; zero when no pair qualifies.
pub fn indicator_touching(
    table: &KernelTable,
    sigma: &AtomicMeasure,
    omega: &AtomicMeasure,
    family: &CubeFamily,
    eta: u32,
    exec: Exec,
) -> Sup {
    let pairs = separated_pairs(family, eta, true);
    pair_sup(table, sigma, omega, family, &pairs, exec)
}
