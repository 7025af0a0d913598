use super::{
    check_dim, check_level, decimal_to_units, side_units, units_to_decimal, units_to_f64,
    DyadicGrid, Point, MAX_DIM, RES_BITS,
};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Half-open cube `prod_k [lower_k, lower_k + 2^-level)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "CubeRepr", into = "CubeRepr")]
pub struct Cube {
    dim: u8,
    level: i32,
    lower: [i64; MAX_DIM],
}

impl Cube {
    pub fn new(lower_units: &[i64], level: i32) -> Result<Self> {
        check_dim(lower_units.len())?;
        check_level(level)?;
        let mut lower = [0; MAX_DIM];
        lower[..lower_units.len()].copy_from_slice(lower_units);
        Ok(Cube {
            dim: lower_units.len() as u8,
            level,
            lower,
        })
    }

    /// Cube from real corner and side. Both must be exact at the resolution
    /// and the side must be a power of two.
    pub fn from_f64(lower: &[f64], side: f64) -> Result<Self> {
        if !(side > 0.0) || side.log2().fract() != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "cube side {side} is not a power of two"
            )));
        }
        let level = -(side.log2() as i32);
        let mut u = Vec::with_capacity(lower.len());
        for &x in lower {
            let v = x * super::UNIT;
            if v.fract() != 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "coordinate {x} is not a multiple of 2^-{RES_BITS}"
                )));
            }
            u.push(v as i64);
        }
        Self::new(&u, level)
    }

    /// `[0,1)^n`.
    pub fn unit(dim: usize) -> Self {
        Self::new(&vec![0; dim], 0).expect("valid dimension")
    }

    pub(crate) fn from_parts(dim: usize, level: i32, lower: [i64; MAX_DIM]) -> Self {
        Cube {
            dim: dim as u8,
            level,
            lower,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    /// Dyadic level: side is `2^-level`.
    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn side_units(&self) -> i64 {
        side_units(self.level)
    }

    pub fn side(&self) -> f64 {
        2f64.powi(-self.level)
    }

    pub fn volume(&self) -> f64 {
        self.side().powi(self.dim() as i32)
    }

    pub fn lower_units(&self) -> &[i64] {
        &self.lower[..self.dim()]
    }

    pub fn lo(&self, k: usize) -> i64 {
        self.lower[k]
    }

    pub fn hi(&self, k: usize) -> i64 {
        self.lower[k] + self.side_units()
    }

    pub fn lower(&self) -> Vec<f64> {
        self.lower_units().iter().map(|&u| units_to_f64(u)).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        let h = self.side() / 2.0;
        self.lower().into_iter().map(|x| x + h).collect()
    }

    pub fn contains(&self, p: &Point) -> bool {
        debug_assert_eq!(p.dim(), self.dim());
        (0..self.dim()).all(|k| self.lo(k) <= p.unit(k) && p.unit(k) < self.hi(k))
    }

    pub fn contains_cube(&self, other: &Cube) -> bool {
        other.level >= self.level
            && (0..self.dim()).all(|k| self.lo(k) <= other.lo(k) && other.hi(k) <= self.hi(k))
    }

    /// Half-open intersection, equivalently interior overlap.
    pub fn intersects(&self, other: &Cube) -> bool {
        (0..self.dim()).all(|k| self.lo(k) < other.hi(k) && other.lo(k) < self.hi(k))
    }

    pub fn closures_intersect(&self, other: &Cube) -> bool {
        (0..self.dim()).all(|k| self.lo(k) <= other.hi(k) && other.lo(k) <= self.hi(k))
    }

    /// The `2^n` dyadic children in lexicographic order.
    pub fn children(&self) -> Vec<Cube> {
        let n = self.dim();
        let h = self.side_units() / 2;
        (0..1usize << n)
            .map(|mask| {
                let mut lower = self.lower;
                for k in 0..n {
                    // Lexicographic: the first axis is the most significant bit.
                    if mask >> (n - 1 - k) & 1 == 1 {
                        lower[k] += h;
                    }
                }
                Cube::from_parts(n, self.level + 1, lower)
            })
            .collect()
    }

    /// Translate by integer multiples of the side.
    pub fn shifted(&self, steps: &[i64]) -> Cube {
        let mut lower = self.lower;
        for (k, s) in steps.iter().enumerate() {
            lower[k] += s * self.side_units();
        }
        Cube::from_parts(self.dim(), self.level, lower)
    }

    /// The `3^n` same-size cubes tiling `3Q`, in lexicographic order.
    pub fn triadic_siblings(&self) -> Vec<Cube> {
        let n = self.dim();
        let mut out = Vec::with_capacity(3usize.pow(n as u32));
        let mut steps = vec![-1i64; n];
        loop {
            out.push(self.shifted(&steps));
            let mut k = n;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                if steps[k] < 1 {
                    steps[k] += 1;
                    break;
                }
                steps[k] = -1;
            }
        }
    }

    /// The `3^n - 1` same-size cubes adjacent to `Q`.
    pub fn adjacent(&self) -> Vec<Cube> {
        self.triadic_siblings()
            .into_iter()
            .filter(|c| c != self)
            .collect()
    }

    /// Is `self` inside the open-or-closed dilate `3Q`, as a box?
    pub fn inside_triple(&self, q: &Cube) -> bool {
        let s = q.side_units();
        (0..self.dim()).all(|k| q.lo(k) - s <= self.lo(k) && self.hi(k) <= q.hi(k) + s)
    }
}

/// `Q ⊂ 3Q' \ Q'`.
pub fn in_three_minus(q: &Cube, qp: &Cube) -> bool {
    q.inside_triple(qp) && !q.intersects(qp)
}

/// Closures meet and interiors are disjoint.
pub fn touching(q: &Cube, r: &Cube) -> bool {
    q.closures_intersect(r) && !q.intersects(r)
}

pub fn are_neighbours(k: &Cube, kp: &Cube, grid: &DyadicGrid) -> bool {
    grid.contains_cube(k)
        && grid.contains_cube(kp)
        && in_three_minus(k, kp)
        && in_three_minus(kp, k)
}

/// Comparable within `2^eta`, both in the grid, touching, and one inside the
/// triple of the other.
pub fn eta_close(k: &Cube, l: &Cube, eta: u32, grid: &DyadicGrid) -> bool {
    (k.level - l.level).abs() <= eta as i32
        && grid.contains_cube(k)
        && grid.contains_cube(l)
        && touching(k, l)
        && (k.inside_triple(l) || l.inside_triple(k))
}

impl fmt::Debug for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = (0..self.dim())
            .map(|k| {
                format!(
                    "[{},{})",
                    units_to_decimal(self.lo(k)),
                    units_to_decimal(self.hi(k))
                )
            })
            .collect();
        f.write_str(&parts.join("x"))
    }
}

impl fmt::Display for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Serialize, Deserialize)]
struct CubeRepr {
    lower: Vec<String>,
    side: String,
}

impl From<Cube> for CubeRepr {
    fn from(c: Cube) -> Self {
        CubeRepr {
            lower: c.lower_units().iter().map(|&u| units_to_decimal(u)).collect(),
            side: units_to_decimal(c.side_units()),
        }
    }
}

impl TryFrom<CubeRepr> for Cube {
    type Error = Error;
    fn try_from(r: CubeRepr) -> Result<Self> {
        let side = decimal_to_units(&r.side)?;
        if side <= 0 || side.count_ones() != 1 {
            return Err(Error::Parse(format!("bad cube side {}", r.side)));
        }
        let level = RES_BITS - side.trailing_zeros() as i32;
        let lower: Result<Vec<i64>> = r.lower.iter().map(|s| decimal_to_units(s)).collect();
        Cube::new(&lower?, level)
    }
}
