//! Two-weight characteristic constants over explicit cube families.
//!
//! Every constant is a maximum over a finite [`CubeFamily`], so each reported
//! value is a certified lower bound of the corresponding supremum, attained
//! by its recorded witness.

mod a2;
mod energy;
mod family;
mod report;
mod testing;

pub use a2::{offset_a2, one_tailed_a2, one_tailed_a2_star, poisson_repro, poisson_standard, punctured_a2, punctured_a2_star};
pub use energy::{
    alternate_cubes, energy_alternate_value, energy_partition_value, maximal_deep_subcubes, refined_deep_subcubes,
    strong_energy, strong_energy_star, EnergyParams,
};
pub use family::{CubeFamily, FamilyCube, FamilySpec, GridSelection};
pub use report::{full_report, ConstantsParams, ConstantsReport, FamilySummary};
pub use testing::{indicator_touching, testing, testing_star, wbp, TestingMode};

use crate::exec::{argmax, Exec};
use crate::geometry::{Cube, Point, UNIT};
use serde::{Deserialize, Serialize};

/// Where a supremum is attained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    None,
    Cube {
        cube: Cube,
    },
    Pair {
        first: Cube,
        second: Cube,
    },
    /// Energy witness: the cube `I`, the pieces of its partition (line one)
    /// or the grid index and refinement depth (line two).
    Energy {
        cube: Cube,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        grid: Option<usize>,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        ell: Option<u32>,
        #[serde(skip_serializing_if = "Vec::is_empty", default)]
        pieces: Vec<Cube>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sup {
    pub value: f64,
    pub witness: Witness,
}

impl Sup {
    pub fn zero() -> Self {
        Sup {
            value: 0.0,
            witness: Witness::None,
        }
    }

    fn sqrt(self) -> Self {
        Sup {
            value: self.value.sqrt(),
            witness: self.witness,
        }
    }
}

/// Evaluates `f` on `0..n` and keeps the first maximiser.
pub(crate) fn sup_by<F, W>(exec: Exec, n: usize, f: F, witness: W) -> Sup
where
    F: Fn(usize) -> f64 + Sync + Send,
    W: Fn(usize) -> Witness,
{
    let vals = exec.map_range(n, f);
    match argmax(vals) {
        Some((i, v)) => Sup {
            value: v,
            witness: witness(i),
        },
        None => Sup::zero(),
    }
}

/// `|x - x_Q|` from exact unit arithmetic.
pub(crate) fn center_dist(q: &Cube, p: &Point) -> f64 {
    let s = q.side_units() as i128;
    let mut acc: i128 = 0;
    for k in 0..q.dim() {
        let d = 2 * p.unit(k) as i128 - (2 * q.lo(k) as i128 + s);
        acc += d * d;
    }
    (acc as f64).sqrt() / (2.0 * UNIT)
}

/// `|Q|^{1 - α/n}`.
pub(crate) fn fractional_volume(q: &Cube, alpha: f64) -> f64 {
    q.volume().powf(1.0 - alpha / q.dim() as f64)
}
