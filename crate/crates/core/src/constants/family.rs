//! Finite cube families over which every sup is taken.

use crate::error::{Error, Result};
use crate::geometry::{check_dim, in_three_minus, Cube, DyadicGrid, Point, DEFAULT_GRID_CAP};
use crate::measures::AtomicMeasure;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};

/// Which grids contribute cubes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridSelection {
    Standard,
    Enumerate,
    /// `count` distinct grids drawn from `seed`; the standard grid is the
    /// first member when `include_standard` is set.
    Sample {
        count: usize,
        seed: u64,
        #[serde(default = "yes")]
        include_standard: bool,
    },
    Explicit { grids: Vec<DyadicGrid> },
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    #[serde(rename = "M")]
    pub fine: i32,
    #[serde(rename = "N")]
    pub top: i32,
    pub grids: GridSelection,
}

impl Default for FamilySpec {
    fn default() -> Self {
        FamilySpec {
            fine: 10,
            top: 0,
            grids: GridSelection::Sample {
                count: 8,
                seed: 0,
                include_standard: true,
            },
        }
    }
}

impl FamilySpec {
    pub fn new(fine: i32, top: i32, grids: GridSelection) -> Self {
        FamilySpec { fine, top, grids }
    }

    /// The same spec with twice as many sampled grids.
    pub fn doubled(&self) -> Self {
        let mut s = self.clone();
        if let GridSelection::Sample { count, .. } = &mut s.grids {
            *count *= 2;
        }
        s
    }

    pub fn grids(&self, dim: usize) -> Result<Vec<DyadicGrid>> {
        check_dim(dim)?;
        match &self.grids {
            GridSelection::Standard => Ok(vec![DyadicGrid::standard(dim, self.fine, self.top)?]),
            GridSelection::Enumerate => DyadicGrid::enumerate(dim, self.fine, self.top, DEFAULT_GRID_CAP),
            GridSelection::Sample {
                count,
                seed,
                include_standard,
            } => {
                if *count == 0 {
                    return Err(Error::InvalidParameter("grid count must be positive".into()));
                }
                let total = crate::geometry::grid_count(dim, self.fine, self.top);
                if total <= *count as u128 {
                    return DyadicGrid::enumerate(dim, self.fine, self.top, DEFAULT_GRID_CAP);
                }
                let mut out = Vec::with_capacity(*count);
                let mut seen = BTreeSet::new();
                if *include_standard {
                    let g = DyadicGrid::standard(dim, self.fine, self.top)?;
                    seen.insert(g.gamma_units().to_vec());
                    out.push(g);
                }
                let mut stream = 0u64;
                while out.len() < *count && stream < 64 * *count as u64 + 64 {
                    let g = DyadicGrid::sample_stream(*seed, stream, dim, self.fine, self.top)?;
                    stream += 1;
                    if seen.insert(g.gamma_units().to_vec()) {
                        out.push(g);
                    }
                }
                Ok(out)
            }
            GridSelection::Explicit { grids } => {
                if grids.is_empty() {
                    return Err(Error::InvalidParameter("empty grid list".into()));
                }
                for g in grids {
                    if g.dim() != dim {
                        return Err(Error::DimensionMismatch {
                            expected: dim,
                            got: g.dim(),
                        });
                    }
                }
                Ok(grids.clone())
            }
        }
    }
}

/// A member cube with the atoms of both measures it holds.
#[derive(Debug, Clone)]
pub struct FamilyCube {
    pub cube: Cube,
    pub sigma: Vec<usize>,
    pub omega: Vec<usize>,
    pub sigma_mass: f64,
    pub omega_mass: f64,
}

/// Every charged cube of the listed grids at levels `top..=fine`, sorted by
/// level and then lexicographically by lower corner.
#[derive(Debug, Clone)]
pub struct CubeFamily {
    dim: usize,
    fine: i32,
    top: i32,
    grids: Vec<DyadicGrid>,
    cubes: Vec<FamilyCube>,
    level_start: Vec<usize>,
    index: HashMap<Cube, usize>,
    window: (Vec<i64>, Vec<i64>),
}

impl CubeFamily {
    pub fn build(sigma: &AtomicMeasure, omega: &AtomicMeasure, spec: &FamilySpec) -> Result<Self> {
        if sigma.dim() != omega.dim() {
            return Err(Error::DimensionMismatch {
                expected: sigma.dim(),
                got: omega.dim(),
            });
        }
        let grids = spec.grids(sigma.dim())?;
        Self::charged(sigma, omega, grids)
    }

    /// Charged cubes of explicit grids, which must share their level range.
    pub fn charged(sigma: &AtomicMeasure, omega: &AtomicMeasure, grids: Vec<DyadicGrid>) -> Result<Self> {
        let first = grids
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty grid list".into()))?;
        let (dim, fine, top) = (first.dim(), first.fine(), first.top());
        if grids.iter().any(|g| g.fine() != fine || g.top() != top || g.dim() != dim) {
            return Err(Error::InvalidParameter("grids must share dimension and levels".into()));
        }
        let mut points: Vec<Point> = sigma.points().chain(omega.points()).copied().collect();
        if points.is_empty() {
            points.push(Point::from_units(&vec![0; dim])?);
        }
        points.sort();
        points.dedup();
        let mut set = BTreeSet::new();
        for g in &grids {
            for level in top..=fine {
                for p in &points {
                    set.insert(g.cube_containing(p, level));
                }
            }
        }
        Self::from_cubes(sigma, omega, grids, set)
    }

    /// A family from an explicit cube list (deduplicated and sorted).
    pub fn from_cubes(
        sigma: &AtomicMeasure,
        omega: &AtomicMeasure,
        grids: Vec<DyadicGrid>,
        cubes: impl IntoIterator<Item = Cube>,
    ) -> Result<Self> {
        let first = grids
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty grid list".into()))?;
        let (dim, fine, top) = (first.dim(), first.fine(), first.top());
        let set: BTreeSet<Cube> = cubes.into_iter().collect();
        if set.is_empty() {
            return Err(Error::InvalidParameter("empty cube family".into()));
        }
        let mut list = Vec::with_capacity(set.len());
        for c in set {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.dim(),
                });
            }
            if c.level() < top || c.level() > fine {
                return Err(Error::InvalidParameter(format!("cube {c} outside levels {top}..={fine}")));
            }
            let s: Vec<usize> = sigma.indices_in(&c).collect();
            let w: Vec<usize> = omega.indices_in(&c).collect();
            let sa = sigma.atoms();
            let wa = omega.atoms();
            list.push(FamilyCube {
                cube: c,
                sigma_mass: crate::exec::compensated_sum(s.iter().map(|&i| sa[i].mass)),
                omega_mass: crate::exec::compensated_sum(w.iter().map(|&i| wa[i].mass)),
                sigma: s,
                omega: w,
            });
        }
        let levels = (fine - top + 1) as usize;
        let mut level_start = vec![0; levels + 1];
        for fc in &list {
            level_start[(fc.cube.level() - top) as usize + 1] += 1;
        }
        for l in 0..levels {
            level_start[l + 1] += level_start[l];
        }
        let index = list.iter().enumerate().map(|(i, fc)| (fc.cube, i)).collect();
        let mut lo = vec![i64::MAX; dim];
        let mut hi = vec![i64::MIN; dim];
        for fc in &list {
            for k in 0..dim {
                lo[k] = lo[k].min(fc.cube.lo(k));
                hi[k] = hi[k].max(fc.cube.hi(k));
            }
        }
        Ok(CubeFamily {
            dim,
            fine,
            top,
            grids,
            cubes: list,
            level_start,
            index,
            window: (lo, hi),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fine(&self) -> i32 {
        self.fine
    }

    pub fn top(&self) -> i32 {
        self.top
    }

    pub fn grids(&self) -> &[DyadicGrid] {
        &self.grids
    }

    pub fn cubes(&self) -> &[FamilyCube] {
        &self.cubes
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// Bounding box of all member cubes, in units.
    pub fn window(&self) -> (&[i64], &[i64]) {
        (&self.window.0, &self.window.1)
    }

    pub fn position(&self, q: &Cube) -> Option<usize> {
        self.index.get(q).copied()
    }

    pub fn get(&self, q: &Cube) -> Option<&FamilyCube> {
        self.position(q).map(|i| &self.cubes[i])
    }

    fn level_range(&self, level: i32) -> std::ops::Range<usize> {
        if level < self.top || level > self.fine {
            return 0..0;
        }
        let l = (level - self.top) as usize;
        self.level_start[l]..self.level_start[l + 1]
    }

    /// Members at `level` whose first lower coordinate lies in `[lo, hi)`.
    pub fn near(&self, level: i32, lo: i64, hi: i64) -> std::ops::Range<usize> {
        let r = self.level_range(level);
        let s = &self.cubes[r.clone()];
        let a = s.partition_point(|c| c.cube.lo(0) < lo);
        let b = s.partition_point(|c| c.cube.lo(0) < hi);
        r.start + a..r.start + b
    }

    /// Neighbour pairs `(Q, Q')`: `Q` a member and `Q'` one of its adjacent
    /// cubes, with the member index of `Q'` when it belongs to the family.
    pub fn neighbour_pairs(&self) -> Vec<(usize, Cube, Option<usize>)> {
        let mut out = Vec::new();
        for (i, fc) in self.cubes.iter().enumerate() {
            for a in fc.cube.adjacent() {
                out.push((i, a, self.position(&a)));
            }
        }
        out
    }

    /// Members `B` with `|level(A) - level(B)| <= eta` and either
    /// `A ⊂ 3B \ B` or `B ⊂ 3A \ A`.
    pub fn related(&self, a: &Cube, eta: u32) -> Vec<usize> {
        let mut out = Vec::new();
        let la = a.side_units();
        for level in (a.level() - eta as i32)..=(a.level() + eta as i32) {
            let lb = crate::geometry::side_units(level.clamp(crate::geometry::MIN_LEVEL, crate::geometry::RES_BITS));
            let lo = (a.lo(0) - la).min(a.hi(0) - 2 * lb);
            let hi = (a.hi(0) + la).max(a.lo(0) + lb + 1);
            for j in self.near(level, lo, hi) {
                let b = &self.cubes[j].cube;
                if in_three_minus(a, b) || in_three_minus(b, a) {
                    out.push(j);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair() -> (AtomicMeasure, AtomicMeasure) {
        (
            AtomicMeasure::from_f64(1, &[(&[0.25], 1.0)]).unwrap(),
            AtomicMeasure::from_f64(1, &[(&[0.75], 1.0)]).unwrap(),
        )
    }

    #[test]
    fn standard_family_is_charged_chain() {
        let (s, w) = pair();
        let f = CubeFamily::build(&s, &w, &FamilySpec::new(3, 0, GridSelection::Standard)).unwrap();
        // [0,1) shared, then two chains of three
        assert_eq!(f.len(), 7);
        let top = f.get(&Cube::unit(1)).unwrap();
        assert_eq!((top.sigma_mass, top.omega_mass), (1.0, 1.0));
        assert!(f.cubes().windows(2).all(|w| w[0].cube < w[1].cube));
    }

    #[test]
    fn sampled_grids_are_distinct_and_nested() {
        let spec = FamilySpec::default();
        let g = spec.grids(1).unwrap();
        assert_eq!(g.len(), 8);
        assert_eq!(g[0], DyadicGrid::standard(1, 10, 0).unwrap());
        let g2 = spec.doubled().grids(1).unwrap();
        assert_eq!(&g2[..8], &g[..]);
    }

    #[test]
    fn related_matches_brute_force() {
        let (s, w) = pair();
        let f = CubeFamily::build(&s, &w, &FamilySpec::new(4, -1, GridSelection::Enumerate)).unwrap();
        for fc in f.cubes().iter().step_by(7) {
            let a = fc.cube;
            let mut fast = f.related(&a, 2);
            fast.sort();
            let slow: Vec<usize> = (0..f.len())
                .filter(|&j| {
                    let b = f.cubes()[j].cube;
                    (a.level() - b.level()).abs() <= 2 && (in_three_minus(&a, &b) || in_three_minus(&b, &a))
                })
                .collect();
            assert_eq!(fast, slow);
        }
    }
}
