//! Deeply embedded subcubes, alternate cubes and the strong energy constants.

use super::a2::poisson_standard_on;
use super::{CubeFamily, Sup, Witness};
use crate::error::{Error, Result};
use crate::exec::{argmax, Exec};
use crate::geometry::{is_deeply_embedded, Cube, DyadicGrid, GoodnessParams};
use crate::haar::coordinate_energy;
use crate::measures::AtomicMeasure;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    pub goodness: GoodnessParams,
    pub d_part: u32,
    pub ell_max: u32,
}

impl Default for EnergyParams {
    fn default() -> Self {
        EnergyParams {
            goodness: GoodnessParams::default(),
            d_part: 3,
            ell_max: 2,
        }
    }
}

/// Top-down search below `k`. With `charge`, only cubes holding at least two
/// atoms of the measure are visited or emitted.
fn deep_walk(
    k: &Cube,
    j: &Cube,
    fine: i32,
    params: &GoodnessParams,
    charge: Option<(&AtomicMeasure, &[usize])>,
    out: &mut Vec<Cube>,
) {
    if let Some((_, idx)) = charge {
        if idx.len() < 2 {
            return;
        }
    }
    if is_deeply_embedded(j, k, params) {
        out.push(*j);
        return;
    }
    if j.level() >= fine {
        return;
    }
    for c in j.children() {
        match charge {
            Some((mu, idx)) => {
                let atoms = mu.atoms();
                let sub: Vec<usize> = idx.iter().copied().filter(|&i| c.contains(&atoms[i].point)).collect();
                deep_walk(k, &c, fine, params, Some((mu, &sub)), out);
            }
            None => deep_walk(k, &c, fine, params, None, out),
        }
    }
}

fn deep(k: &Cube, fine: i32, params: &GoodnessParams, charge: Option<&AtomicMeasure>) -> Vec<Cube> {
    let mut out = Vec::new();
    if k.level() >= fine {
        return out;
    }
    match charge {
        Some(mu) => {
            let idx: Vec<usize> = mu.indices_in(k).collect();
            for c in k.children() {
                let atoms = mu.atoms();
                let sub: Vec<usize> = idx.iter().copied().filter(|&i| c.contains(&atoms[i].point)).collect();
                deep_walk(k, &c, fine, params, Some((mu, &sub)), &mut out);
            }
        }
        None => {
            for c in k.children() {
                deep_walk(k, &c, fine, params, None, &mut out);
            }
        }
    }
    out
}

fn check_subdivides(k: &Cube, grid: &DyadicGrid) -> Result<()> {
    if k.level() < grid.fine() && !grid.contains_cube(&k.children()[0]) {
        return Err(Error::NotAGridCube(k.to_string()));
    }
    Ok(())
}

/// The maximal grid cubes `J ⊂ K` that are `(r, ε)`-deeply embedded in `K`,
/// down to the finest grid level.
pub fn maximal_deep_subcubes(k: &Cube, grid: &DyadicGrid, params: &GoodnessParams) -> Result<Vec<Cube>> {
    check_subdivides(k, grid)?;
    Ok(deep(k, grid.fine(), params, None))
}

/// The `2^n` cubes of side `2ℓ(L)` made of grid cubes and containing `L`.
pub fn alternate_cubes(grid: &DyadicGrid, l: &Cube) -> Result<Vec<Cube>> {
    if !grid.contains_cube(l) {
        return Err(Error::NotAGridCube(l.to_string()));
    }
    if l.level() <= grid.top() {
        return Err(Error::TopLevel(l.to_string()));
    }
    let n = l.dim();
    let s = l.side_units();
    let mut out = Vec::with_capacity(1 << n);
    for mask in 0..(1usize << n) {
        let lower: Vec<i64> = (0..n)
            .map(|k| l.lo(k) - if mask >> (n - 1 - k) & 1 == 1 { s } else { 0 })
            .collect();
        out.push(Cube::new(&lower, l.level() - 1)?);
    }
    Ok(out)
}

fn refined(k: &Cube, grid: &DyadicGrid, ell: u32, params: &GoodnessParams, charge: Option<&AtomicMeasure>) -> Result<Vec<Cube>> {
    check_subdivides(k, grid)?;
    let base = deep(k, grid.fine(), params, charge);
    if ell == 0 {
        return Ok(base);
    }
    let mut out = BTreeSet::new();
    for kp in k.children() {
        let level = kp.level() - ell as i32;
        if level < grid.top() {
            return Err(Error::TopLevel(format!("{ell}-fold parent of {kp}")));
        }
        let p = grid.ancestor(&kp, level);
        for j in deep(&p, grid.fine(), params, charge) {
            if base.iter().any(|l| l.contains_cube(&j)) {
                out.insert(j);
            }
        }
    }
    Ok(out.into_iter().collect())
}

/// `M^ℓ(K)`: deep subcubes of the `ℓ`-fold grid parents of the children of
/// `K` that lie inside some deep subcube of `K`.
pub fn refined_deep_subcubes(k: &Cube, grid: &DyadicGrid, ell: u32, params: &GoodnessParams) -> Result<Vec<Cube>> {
    refined(k, grid, ell, params, None)
}

/// `Σ_J (P^α(J, 1_I σ) / ℓ(J))² ‖P_J^ω x‖²` over the given subcubes.
fn energy_sum(src: &AtomicMeasure, src_idx: &[usize], tgt: &AtomicMeasure, alpha: f64, js: &[Cube]) -> f64 {
    crate::exec::compensated_sum(js.iter().map(|j| {
        let e = coordinate_energy(tgt, j);
        if e == 0.0 {
            return 0.0;
        }
        let p = poisson_standard_on(j, src, src_idx, alpha) / j.side();
        p * p * e
    }))
}

struct Line1<'a> {
    src: &'a AtomicMeasure,
    tgt: &'a AtomicMeasure,
    src_idx: Vec<usize>,
    alpha: f64,
    fine: i32,
    params: &'a GoodnessParams,
}

impl Line1<'_> {
    fn own(&self, p: &Cube) -> f64 {
        let js = deep(p, self.fine, self.params, Some(self.tgt));
        energy_sum(self.src, &self.src_idx, self.tgt, self.alpha, &js)
    }

    fn best(&self, p: &Cube, depth: u32) -> (f64, Vec<Cube>) {
        if self.tgt.indices_in(p).nth(1).is_none() {
            return (0.0, vec![*p]);
        }
        let own = self.own(p);
        if depth == 0 || p.level() >= self.fine {
            return (own, vec![*p]);
        }
        let mut total = 0.0;
        let mut pieces = Vec::new();
        for c in p.children() {
            let (v, mut ps) = self.best(&c, depth - 1);
            total += v;
            pieces.append(&mut ps);
        }
        if total > own {
            (total, pieces)
        } else {
            (own, vec![*p])
        }
    }
}

/// Line-one term for cube `I` and an explicit partition of it.
pub fn energy_partition_value(
    src: &AtomicMeasure,
    tgt: &AtomicMeasure,
    alpha: f64,
    i: &Cube,
    pieces: &[Cube],
    fine: i32,
    params: &GoodnessParams,
) -> f64 {
    let src_idx: Vec<usize> = src.indices_in(i).collect();
    let m = src.mass(i);
    if m <= 0.0 {
        return 0.0;
    }
    let total: f64 = pieces
        .iter()
        .map(|p| {
            let js = deep(p, fine, params, Some(tgt));
            energy_sum(src, &src_idx, tgt, alpha, &js)
        })
        .sum();
    total / m
}

/// Line-two term for an alternate cube `I` of `grid` at refinement `ell`.
pub fn energy_alternate_value(
    src: &AtomicMeasure,
    tgt: &AtomicMeasure,
    alpha: f64,
    grid: &DyadicGrid,
    i: &Cube,
    ell: u32,
    params: &GoodnessParams,
) -> Result<f64> {
    let m = src.mass(i);
    if m <= 0.0 {
        return Ok(0.0);
    }
    let src_idx: Vec<usize> = src.indices_in(i).collect();
    let js = refined(i, grid, ell, params, Some(tgt))?;
    Ok(energy_sum(src, &src_idx, tgt, alpha, &js) / m)
}

fn energy(src: &AtomicMeasure, tgt: &AtomicMeasure, alpha: f64, family: &CubeFamily, params: &EnergyParams, exec: Exec) -> Result<Sup> {
    if params.d_part == 0 {
        return Err(Error::InvalidParameter("d_part must be at least 1".into()));
    }
    let g = &params.goodness;
    let fine = family.fine();
    let cubes = family.cubes();
    let line1 = exec.map_range(cubes.len(), |q| {
        let i = cubes[q].cube;
        let m = src.mass(&i);
        if m <= 0.0 || tgt.indices_in(&i).nth(1).is_none() {
            return (0.0, Vec::new());
        }
        let l = Line1 {
            src,
            tgt,
            src_idx: src.indices_in(&i).collect(),
            alpha,
            fine,
            params: g,
        };
        let (v, pieces) = l.best(&i, params.d_part);
        (v / m, pieces)
    });

    let mut alts: Vec<(usize, Cube)> = Vec::new();
    for (gi, grid) in family.grids().iter().enumerate() {
        let mut set = BTreeSet::new();
        for fc in cubes {
            let l = &fc.cube;
            if l.level() > grid.top() && grid.contains_cube(l) {
                for a in alternate_cubes(grid, l)? {
                    set.insert(a);
                }
            }
        }
        alts.extend(set.into_iter().map(|a| (gi, a)));
    }
    let ells = params.ell_max as usize + 1;
    let line2 = exec.map_range(alts.len() * ells, |t| {
        let (gi, i) = alts[t / ells];
        let ell = (t % ells) as u32;
        let grid = &family.grids()[gi];
        if i.level() + 1 - (ell as i32) < grid.top() || tgt.indices_in(&i).nth(1).is_none() {
            return Ok(0.0);
        }
        energy_alternate_value(src, tgt, alpha, grid, &i, ell, g)
    });
    let line2: Vec<f64> = line2.into_iter().collect::<Result<_>>()?;

    let b1 = argmax(line1.iter().map(|x| x.0));
    let b2 = argmax(line2.iter().copied());
    let best = match (b1, b2) {
        (Some((q, v1)), b2) if b2.map_or(true, |(_, v2)| v1 >= v2) => Sup {
            value: v1,
            witness: Witness::Energy {
                cube: cubes[q].cube,
                grid: None,
                ell: None,
                pieces: line1[q].1.clone(),
            },
        },
        (_, Some((t, v2))) => Sup {
            value: v2,
            witness: Witness::Energy {
                cube: alts[t / ells].1,
                grid: Some(alts[t / ells].0),
                ell: Some((t % ells) as u32),
                pieces: Vec::new(),
            },
        },
        _ => Sup::zero(),
    };
    Ok(best.sqrt())
}

/// `ℰ^strong`: the square root of the larger of the partition and alternate
/// cube suprema.
pub fn strong_energy(sigma: &AtomicMeasure, omega: &AtomicMeasure, alpha: f64, family: &CubeFamily, params: &EnergyParams, exec: Exec) -> Result<Sup> {
    energy(sigma, omega, alpha, family, params, exec)
}

/// The dual energy with the roles of `σ` and `ω` exchanged.
pub fn strong_energy_star(sigma: &AtomicMeasure, omega: &AtomicMeasure, alpha: f64, family: &CubeFamily, params: &EnergyParams, exec: Exec) -> Result<Sup> {
    energy(omega, sigma, alpha, family, params, exec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{poisson_standard, FamilySpec, GridSelection};

    fn p(r: u32, eps: f64) -> GoodnessParams {
        GoodnessParams::with_r(r, eps)
    }

    #[test]
    fn deep_subcubes_are_disjoint_and_deep() {
        let grid = DyadicGrid::standard(1, 10, 0).unwrap();
        let k = Cube::unit(1);
        let params = p(2, 0.5);
        let js = maximal_deep_subcubes(&k, &grid, &params).unwrap();
        assert!(!js.is_empty());
        for (a, j) in js.iter().enumerate() {
            assert!(k.contains_cube(j));
            assert!(is_deeply_embedded(j, &k, &params));
            let parent = grid.parent(j).unwrap();
            assert!(parent == k || !is_deeply_embedded(&parent, &k, &params));
            for other in &js[a + 1..] {
                assert!(!j.intersects(other));
            }
        }
        let centre = Cube::from_f64(&[0.25], 0.25).unwrap();
        assert!(js.iter().any(|j| j.contains_cube(&centre) || centre.contains_cube(j)));
        let fine = Cube::from_f64(&[0.0], 2f64.powi(-9)).unwrap();
        assert!(maximal_deep_subcubes(&fine, &grid, &params).unwrap().is_empty());
    }

    #[test]
    fn alternates() {
        let grid = DyadicGrid::standard(1, 6, 0).unwrap();
        let l = Cube::from_f64(&[0.25], 0.25).unwrap();
        let a = alternate_cubes(&grid, &l).unwrap();
        assert_eq!(a, vec![Cube::from_f64(&[0.25], 0.5).unwrap(), Cube::from_f64(&[0.0], 0.5).unwrap()]);
        assert!(a.contains(&grid.parent(&l).unwrap()));
        assert!(matches!(alternate_cubes(&grid, &Cube::unit(1)), Err(Error::TopLevel(_))));
        let g2 = DyadicGrid::standard(2, 6, 0).unwrap();
        let l2 = Cube::from_f64(&[0.25, 0.5], 0.25).unwrap();
        assert_eq!(alternate_cubes(&g2, &l2).unwrap().len(), 4);
    }

    #[test]
    fn refined_filter_and_disjointness() {
        let grid = DyadicGrid::standard(2, 7, -2).unwrap();
        let params = p(2, 0.5);
        let k = Cube::from_f64(&[0.25, 0.0], 0.5).unwrap();
        let base = maximal_deep_subcubes(&k, &grid, &params).unwrap();
        assert_eq!(refined_deep_subcubes(&k, &grid, 0, &params).unwrap(), base);
        for ell in 1..=2 {
            let js = refined_deep_subcubes(&k, &grid, ell, &params).unwrap();
            for j in &js {
                assert!(base.iter().any(|l| l.contains_cube(j)));
            }
            for l in &base {
                let inside: Vec<_> = js.iter().filter(|j| l.contains_cube(j)).collect();
                for (a, x) in inside.iter().enumerate() {
                    for y in &inside[a + 1..] {
                        assert!(!x.intersects(y), "{x} {y}");
                    }
                }
            }
        }
    }

    #[test]
    fn poisson_term_example() {
        let s = AtomicMeasure::from_f64(1, &[(&[0.5], 1.0)]).unwrap();
        let j = Cube::from_f64(&[0.25 - 1.0 / 32.0], 1.0 / 16.0).unwrap();
        assert!((poisson_standard(&j, &s, 0.0) - 0.64).abs() < 1e-15);
    }

    #[test]
    fn single_target_atom_has_no_energy() {
        let s = AtomicMeasure::from_f64(1, &[(&[0.5], 1.0), (&[0.1], 1.0)]).unwrap();
        let w = AtomicMeasure::from_f64(1, &[(&[0.3], 1.0)]).unwrap();
        let f = CubeFamily::build(&s, &w, &FamilySpec::new(8, 0, GridSelection::Standard)).unwrap();
        let e = strong_energy(&s, &w, 0.0, &f, &EnergyParams::default(), Exec::Sequential).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn energy_monotone_in_depth_and_witness_reproduces() {
        let s = crate::measures::random_uniform(1, 12, &Cube::unit(1), 10, 0.5, 3).unwrap();
        let w = crate::measures::random_uniform(1, 24, &Cube::unit(1), 10, 0.5, 4).unwrap();
        let f = CubeFamily::build(&s, &w, &FamilySpec::new(10, 0, GridSelection::Standard)).unwrap();
        let mut params = EnergyParams {
            goodness: p(2, 0.45),
            d_part: 1,
            ell_max: 1,
        };
        let mut last = 0.0;
        for d in 1..=3 {
            params.d_part = d;
            let e = strong_energy(&s, &w, 0.0, &f, &params, Exec::Sequential).unwrap();
            assert!(e.value >= last);
            last = e.value;
            let again = match &e.witness {
                Witness::Energy { cube, grid: None, pieces, .. } => {
                    energy_partition_value(&s, &w, 0.0, cube, pieces, f.fine(), &params.goodness)
                }
                Witness::Energy { cube, grid: Some(g), ell: Some(l), .. } => {
                    energy_alternate_value(&s, &w, 0.0, &f.grids()[*g], cube, *l, &params.goodness).unwrap()
                }
                other => panic!("{other:?}"),
            };
            assert!((again.sqrt() - e.value).abs() <= 1e-12 * e.value.max(1.0));
        }
        assert!(last > 0.0);
        let par = strong_energy(&s, &w, 0.0, &f, &params, Exec::default()).unwrap();
        assert_eq!(par.value.to_bits(), last.to_bits());
    }
}
