//! Finitely atomic positive measures.

use crate::error::{Error, Result};
use crate::exec::{compensated_sum, CompensatedSum};
use crate::geometry::{check_dim, Coord, Cube, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub point: Point,
    pub mass: f64,
}

/// Atoms sorted lexicographically by point; points distinct, masses positive.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    dim: usize,
    atoms: Vec<Atom>,
}

impl AtomicMeasure {
    /// Builds a measure, merging atoms at coincident points.
    pub fn new(dim: usize, atoms: impl IntoIterator<Item = (Point, f64)>) -> Result<Self> {
        check_dim(dim)?;
        let mut v: Vec<Atom> = Vec::new();
        for (point, mass) in atoms {
            if point.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: point.dim(),
                });
            }
            if !(mass > 0.0 && mass.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "atom mass {mass} at {point} is not positive and finite"
                )));
            }
            v.push(Atom { point, mass });
        }
        v.sort_by(|a, b| a.point.cmp(&b.point));
        let mut atoms: Vec<Atom> = Vec::with_capacity(v.len());
        for a in v {
            match atoms.last_mut() {
                Some(last) if last.point == a.point => last.mass += a.mass,
                _ => atoms.push(a),
            }
        }
        Ok(AtomicMeasure { dim, atoms })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::new(dim, std::iter::empty())
    }

    /// Convenience constructor from real coordinates.
    pub fn from_f64(dim: usize, atoms: &[(&[f64], f64)]) -> Result<Self> {
        let pts: Result<Vec<(Point, f64)>> = atoms
            .iter()
            .map(|(x, m)| Point::from_f64(x).map(|p| (p, *m)))
            .collect();
        Self::new(dim, pts?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = &Point> {
        self.atoms.iter().map(|a| &a.point)
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.atoms.iter().map(|a| a.mass))
    }

    /// Index range of atoms whose first coordinate lies in `[lo, hi)`.
    fn first_axis_range(&self, lo: i64, hi: i64) -> std::ops::Range<usize> {
        let a = self.atoms.partition_point(|x| x.point.unit(0) < lo);
        let b = self.atoms.partition_point(|x| x.point.unit(0) < hi);
        a..b
    }

    /// Indices of atoms in `Q`, ascending.
    pub fn indices_in(&self, q: &Cube) -> impl Iterator<Item = usize> + '_ {
        let q = *q;
        self.first_axis_range(q.lo(0), q.hi(0))
            .filter(move |&i| q.contains(&self.atoms[i].point))
    }

    pub fn atoms_in<'a>(&'a self, q: &Cube) -> impl Iterator<Item = &'a Atom> + 'a {
        self.indices_in(q).map(move |i| &self.atoms[i])
    }

    /// `|Q|_μ`.
    pub fn mass(&self, q: &Cube) -> f64 {
        compensated_sum(self.atoms_in(q).map(|a| a.mass))
    }

    /// `|Q|_μ` minus the largest atom of `μ` at a point of `P` inside `Q`.
    pub fn punctured_mass(&self, q: &Cube, p: &PunctureSet) -> f64 {
        let mut acc = CompensatedSum::new();
        let mut biggest = 0.0f64;
        for a in self.atoms_in(q) {
            acc.add(a.mass);
            if a.mass > biggest && p.contains(&a.point) {
                biggest = a.mass;
            }
        }
        let total = acc.value();
        if biggest == 0.0 {
            total
        } else {
            (total - biggest).max(0.0)
        }
    }

    /// Index of the atom at `p`, if any.
    pub fn find(&self, p: &Point) -> Option<usize> {
        self.atoms.binary_search_by(|a| a.point.cmp(p)).ok()
    }

    pub fn scaled(&self, t: f64) -> Result<Self> {
        if self.is_empty() {
            return Ok(self.clone());
        }
        Self::new(self.dim, self.atoms.iter().map(|a| (a.point, a.mass * t)))
    }

    /// Restriction to `Q`.
    pub fn restrict(&self, q: &Cube) -> Self {
        AtomicMeasure {
            dim: self.dim,
            atoms: self.atoms_in(q).copied().collect(),
        }
    }

    /// `L²(μ)` inner product of functions indexed by atoms.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        compensated_sum(self.atoms.iter().zip(f.iter().zip(g)).map(|(a, (x, y))| a.mass * x * y))
    }

    pub fn norm(&self, f: &[f64]) -> f64 {
        self.inner(f, f).sqrt()
    }

    pub fn indicator(&self, q: &Cube) -> Vec<f64> {
        self.atoms
            .iter()
            .map(|a| if q.contains(&a.point) { 1.0 } else { 0.0 })
            .collect()
    }

    /// `∫ f dμ`.
    pub fn integral(&self, f: &[f64]) -> f64 {
        compensated_sum(self.atoms.iter().zip(f).map(|(a, x)| a.mass * x))
    }

    /// Smallest and largest coordinates per axis, in units.
    pub fn bounding_box(&self) -> Option<(Vec<i64>, Vec<i64>)> {
        let first = self.atoms.first()?;
        let mut lo = first.point.units().to_vec();
        let mut hi = lo.clone();
        for a in &self.atoms {
            for k in 0..self.dim {
                lo[k] = lo[k].min(a.point.unit(k));
                hi[k] = hi[k].max(a.point.unit(k));
            }
        }
        Some((lo, hi))
    }

    pub fn to_file(&self) -> MeasureFile {
        MeasureFile {
            dim: self.dim,
            atoms: self
                .atoms
                .iter()
                .map(|a| AtomRecord {
                    point: a.point.to_decimal().into_iter().map(Coord::Text).collect(),
                    mass: a.mass,
                })
                .collect(),
        }
    }

    pub fn from_file(file: &MeasureFile) -> Result<Self> {
        let mut atoms = Vec::with_capacity(file.atoms.len());
        for rec in &file.atoms {
            if rec.point.len() != file.dim {
                return Err(Error::DimensionMismatch {
                    expected: file.dim,
                    got: rec.point.len(),
                });
            }
            let u: Result<Vec<i64>> = rec.point.iter().map(Coord::to_units).collect();
            atoms.push((Point::from_units(&u?)?, rec.mass));
        }
        Self::new(file.dim, atoms)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_file(&serde_json::from_str(s)?)
    }
}

/// Smallest distance between distinct points of the combined supports.
pub fn min_gap(measures: &[&AtomicMeasure]) -> Option<f64> {
    let mut pts: Vec<Point> = measures.iter().flat_map(|m| m.points().copied()).collect();
    pts.sort();
    pts.dedup();
    let mut best: Option<f64> = None;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = pts[i].dist(&pts[j]);
            if best.is_none_or(|b| d < b) {
                best = Some(d);
            }
        }
    }
    best
}

/// Diameter of the combined supports.
pub fn diameter(measures: &[&AtomicMeasure]) -> f64 {
    let pts: Vec<Point> = measures.iter().flat_map(|m| m.points().copied()).collect();
    let mut d = 0.0f64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d = d.max(pts[i].dist(&pts[j]));
        }
    }
    d
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureFile {
    pub dim: usize,
    pub atoms: Vec<AtomRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub point: Vec<Coord>,
    pub mass: f64,
}

/// Sorted set of points at which atoms are removed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PunctureSet {
    points: Vec<Point>,
}

impl PunctureSet {
    pub fn new(mut points: Vec<Point>) -> Self {
        points.sort();
        points.dedup();
        PunctureSet { points }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.points.binary_search(p).is_ok()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Points carrying atoms of both measures.
pub fn common_points(sigma: &AtomicMeasure, omega: &AtomicMeasure) -> PunctureSet {
    PunctureSet::new(
        sigma
            .points()
            .filter(|p| omega.find(p).is_some())
            .copied()
            .collect(),
    )
}

/// Measure generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    /// Centers of the level-`level` tiles of `[0,1)^n`, mass `2^{-n level}` each.
    Lattice { dim: usize, level: i32 },
    /// `count` uniform points in `window`, snapped to `2^-snap_level`; masses
    /// uniform in `[1 - spread, 1 + spread]` and normalised to total 1.
    RandomUniform {
        dim: usize,
        count: usize,
        window: Cube,
        snap_level: i32,
        spread: f64,
    },
    /// Middle-half Cantor construction on `[0,1]` to `depth`, left pieces
    /// receiving fraction `ratio` of the mass; product measure in higher
    /// dimensions.
    Cantor { dim: usize, depth: u32, ratio: f64 },
    PointMasses { dim: usize, atoms: Vec<AtomRecord> },
}

pub fn generate(gen: &Generator, seed: u64) -> Result<AtomicMeasure> {
    match gen {
        Generator::Lattice { dim, level } => lattice(*dim, *level),
        Generator::RandomUniform {
            dim,
            count,
            window,
            snap_level,
            spread,
        } => random_uniform(*dim, *count, window, *snap_level, *spread, seed),
        Generator::Cantor { dim, depth, ratio } => cantor(*dim, *depth, *ratio),
        Generator::PointMasses { dim, atoms } => AtomicMeasure::from_file(&MeasureFile {
            dim: *dim,
            atoms: atoms.clone(),
        }),
    }
}

fn multi_indices(dim: usize, per_axis: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = per_axis.pow(dim as u32);
    (0..total).map(move |mut i| {
        let mut idx = vec![0; dim];
        for k in (0..dim).rev() {
            idx[k] = i % per_axis;
            i /= per_axis;
        }
        idx
    })
}

pub fn lattice(dim: usize, level: i32) -> Result<AtomicMeasure> {
    check_dim(dim)?;
    if !(0..crate::geometry::RES_BITS).contains(&level) || dim as i32 * level > 24 {
        return Err(Error::InvalidParameter(format!(
            "lattice level {level} unsupported in dimension {dim}"
        )));
    }
    let per = 1usize << level;
    let s = crate::geometry::side_units(level);
    let mass = 2f64.powi(-(dim as i32) * level);
    let atoms: Result<Vec<(Point, f64)>> = multi_indices(dim, per)
        .map(|idx| {
            let u: Vec<i64> = idx.iter().map(|&i| i as i64 * s + s / 2).collect();
            Point::from_units(&u).map(|p| (p, mass))
        })
        .collect();
    AtomicMeasure::new(dim, atoms?)
}

pub fn cantor(dim: usize, depth: u32, ratio: f64) -> Result<AtomicMeasure> {
    check_dim(dim)?;
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "cantor ratio {ratio} not in (0,1)"
        )));
    }
    if 2 * depth as i32 + 1 > crate::geometry::RES_BITS || dim as u32 * depth > 16 {
        return Err(Error::InvalidParameter(format!(
            "cantor depth {depth} too large"
        )));
    }
    // One-dimensional generation: 2^depth intervals of length 4^-depth.
    let half = crate::geometry::side_units(2 * depth as i32 + 1);
    let mut line: Vec<(i64, f64)> = vec![(0, 1.0)];
    for d in 0..depth {
        let shift = 3 * crate::geometry::side_units(2 * d as i32 + 2);
        line = line
            .into_iter()
            .flat_map(|(x, m)| [(x, m * ratio), (x + shift, m * (1.0 - ratio))])
            .collect();
    }
    let atoms: Result<Vec<(Point, f64)>> = multi_indices(dim, line.len())
        .map(|idx| {
            let u: Vec<i64> = idx.iter().map(|&i| line[i].0 + half).collect();
            let m: f64 = idx.iter().map(|&i| line[i].1).product();
            Point::from_units(&u).map(|p| (p, m))
        })
        .collect();
    AtomicMeasure::new(dim, atoms?)
}

pub fn random_uniform(
    dim: usize,
    count: usize,
    window: &Cube,
    snap_level: i32,
    spread: f64,
    seed: u64,
) -> Result<AtomicMeasure> {
    check_dim(dim)?;
    if window.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: window.dim(),
        });
    }
    if !(0.0..1.0).contains(&spread) || snap_level < window.level() {
        return Err(Error::InvalidParameter(
            "random_uniform needs spread in [0,1) and snap level below the window side".into(),
        ));
    }
    if snap_level >= crate::geometry::RES_BITS {
        return Err(Error::InvalidParameter(format!("snap level {snap_level} too fine")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = crate::geometry::side_units(snap_level);
    let cells = window.side_units() / step;
    let mut raw = Vec::with_capacity(count);
    for _ in 0..count {
        let u: Vec<i64> = (0..dim)
            .map(|k| window.lo(k) + rng.random_range(0..cells) * step + step / 2)
            .collect();
        let m = if spread == 0.0 {
            1.0
        } else {
            rng.random_range(1.0 - spread..=1.0 + spread)
        };
        raw.push((Point::from_units(&u)?, m));
    }
    let total: f64 = compensated_sum(raw.iter().map(|x| x.1));
    AtomicMeasure::new(dim, raw.into_iter().map(|(p, m)| (p, m / total)))
}
