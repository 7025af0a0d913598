use super::{
    check_dim, check_level, decimal_to_units, side_units, units_to_decimal, Cube, Point, MAX_DIM,
    RES_BITS,
};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Default bound on exhaustive grid enumeration.
pub const DEFAULT_GRID_CAP: u128 = 1 << 20;

/// Truncated translated dyadic grid: levels `N..=M`, cubes at level `l` have
/// lower corners congruent to `gamma` modulo `2^-l`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct DyadicGrid {
    dim: u8,
    fine: i32,
    top: i32,
    gamma: [i64; MAX_DIM],
}

/// Number of grids `2^{n(M-N)}`.
pub fn grid_count(dim: usize, fine: i32, top: i32) -> u128 {
    let e = dim as u32 * (fine - top) as u32;
    if e >= 128 {
        u128::MAX
    } else {
        1u128 << e
    }
}

fn check_levels(fine: i32, top: i32) -> Result<()> {
    check_level(fine)?;
    check_level(top)?;
    if top > fine {
        return Err(Error::InvalidParameter(format!(
            "top level N={top} exceeds fine level M={fine}"
        )));
    }
    Ok(())
}

impl DyadicGrid {
    pub fn standard(dim: usize, fine: i32, top: i32) -> Result<Self> {
        check_dim(dim)?;
        Self::from_translation(&vec![0; dim], fine, top)
    }

    /// `D + gamma`, with `gamma` in units.
    pub fn from_translation(gamma: &[i64], fine: i32, top: i32) -> Result<Self> {
        check_dim(gamma.len())?;
        check_levels(fine, top)?;
        let step = side_units(fine);
        let range = side_units(top);
        let mut g = [0; MAX_DIM];
        for (k, &v) in gamma.iter().enumerate() {
            if v < 0 || v >= range || v % step != 0 {
                return Err(Error::OffsetOutOfRange { fine });
            }
            g[k] = v;
        }
        Ok(DyadicGrid {
            dim: gamma.len() as u8,
            fine,
            top,
            gamma: g,
        })
    }

    pub fn from_translation_f64(gamma: &[f64], fine: i32, top: i32) -> Result<Self> {
        let mut u = Vec::with_capacity(gamma.len());
        for &x in gamma {
            let v = x * super::UNIT;
            if v.fract() != 0.0 {
                return Err(Error::OffsetOutOfRange { fine });
            }
            u.push(v as i64);
        }
        Self::from_translation(&u, fine, top)
    }

    /// Grid from scale bits. `bits` is axis-major: for each axis, the bits
    /// `beta_N, ..., beta_M`. The offset is `sum_{N<i<=M} 2^-i beta_i`;
    /// `beta_N` shifts by a whole top cube and so has no effect.
    pub fn from_scales(dim: usize, fine: i32, top: i32, bits: &[bool]) -> Result<Self> {
        check_dim(dim)?;
        check_levels(fine, top)?;
        let per_axis = (fine - top + 1) as usize;
        if bits.len() != dim * per_axis {
            return Err(Error::BitCountMismatch {
                expected: dim * per_axis,
                got: bits.len(),
            });
        }
        let gamma: Vec<i64> = (0..dim)
            .map(|k| {
                ((top + 1)..=fine)
                    .filter(|&i| bits[k * per_axis + (i - top) as usize])
                    .map(side_units)
                    .sum()
            })
            .collect();
        Self::from_translation(&gamma, fine, top)
    }

    /// The `idx`-th grid in enumeration order (mixed radix over axes, first
    /// axis most significant).
    pub fn by_index(dim: usize, fine: i32, top: i32, mut idx: u128) -> Result<Self> {
        check_dim(dim)?;
        check_levels(fine, top)?;
        let per = 1u128 << (fine - top);
        let step = side_units(fine);
        let mut gamma = vec![0i64; dim];
        for k in (0..dim).rev() {
            gamma[k] = (idx % per) as i64 * step;
            idx /= per;
        }
        Self::from_translation(&gamma, fine, top)
    }

    /// All `2^{n(M-N)}` grids.
    pub fn enumerate(dim: usize, fine: i32, top: i32, cap: u128) -> Result<Vec<Self>> {
        check_dim(dim)?;
        check_levels(fine, top)?;
        let count = grid_count(dim, fine, top);
        if count > cap {
            return Err(Error::EnumerationCap { count, cap });
        }
        (0..count)
            .map(|i| Self::by_index(dim, fine, top, i))
            .collect()
    }

    /// Uniformly random grid, deterministic in `seed`.
    pub fn sample(seed: u64, dim: usize, fine: i32, top: i32) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::sample_with(&mut rng, dim, fine, top)
    }

    /// The `stream`-th independent draw for `seed`.
    pub fn sample_stream(seed: u64, stream: u64, dim: usize, fine: i32, top: i32) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self::sample_with(&mut rng, dim, fine, top)
    }

    pub fn sample_with<R: Rng>(rng: &mut R, dim: usize, fine: i32, top: i32) -> Result<Self> {
        check_dim(dim)?;
        check_levels(fine, top)?;
        let per = 1i64 << (fine - top);
        let step = side_units(fine);
        let gamma: Vec<i64> = (0..dim).map(|_| rng.random_range(0..per) * step).collect();
        Self::from_translation(&gamma, fine, top)
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    /// Finest level `M`.
    pub fn fine(&self) -> i32 {
        self.fine
    }

    /// Coarsest level `N`.
    pub fn top(&self) -> i32 {
        self.top
    }

    pub fn gamma_units(&self) -> &[i64] {
        &self.gamma[..self.dim()]
    }

    pub fn gamma(&self) -> Vec<f64> {
        self.gamma_units()
            .iter()
            .map(|&u| super::units_to_f64(u))
            .collect()
    }

    pub fn has_level(&self, level: i32) -> bool {
        (self.top..=self.fine).contains(&level)
    }

    pub fn contains_cube(&self, q: &Cube) -> bool {
        if q.dim() != self.dim() || !self.has_level(q.level()) {
            return false;
        }
        let s = q.side_units();
        (0..self.dim()).all(|k| (q.lo(k) - self.gamma[k]).rem_euclid(s) == 0)
    }

    fn snap(&self, x: i64, k: usize, side: i64) -> i64 {
        let g = self.gamma[k];
        g + (x - g).div_euclid(side) * side
    }

    /// The level-`level` grid cube containing the unit coordinates `x`.
    pub fn cube_at(&self, x: &[i64], level: i32) -> Cube {
        debug_assert!(self.has_level(level));
        let s = side_units(level);
        let mut lower = [0; MAX_DIM];
        for k in 0..self.dim() {
            lower[k] = self.snap(x[k], k, s);
        }
        Cube::from_parts(self.dim(), level, lower)
    }

    pub fn cube_containing(&self, p: &Point, level: i32) -> Cube {
        self.cube_at(p.units(), level)
    }

    /// Ancestor of a grid cube at a coarser level.
    pub fn ancestor(&self, q: &Cube, level: i32) -> Cube {
        debug_assert!(level <= q.level());
        self.cube_at(q.lower_units(), level)
    }

    /// Grid parent, or `None` at the top level.
    pub fn parent(&self, q: &Cube) -> Option<Cube> {
        (q.level() > self.top).then(|| self.ancestor(q, q.level() - 1))
    }

    /// Grid children, or empty at the finest level.
    pub fn children(&self, q: &Cube) -> Vec<Cube> {
        if q.level() < self.fine {
            q.children()
        } else {
            Vec::new()
        }
    }

    /// Grid cubes at `level` meeting the half-open box `[lo, hi)`, in
    /// lexicographic order.
    pub fn cubes_meeting(&self, level: i32, lo: &[i64], hi: &[i64]) -> Vec<Cube> {
        let n = self.dim();
        let s = side_units(level);
        let mut first = [0i64; MAX_DIM];
        let mut count = [0i64; MAX_DIM];
        for k in 0..n {
            if hi[k] <= lo[k] {
                return Vec::new();
            }
            first[k] = self.snap(lo[k], k, s);
            let last = self.snap(hi[k] - 1, k, s);
            count[k] = (last - first[k]) / s + 1;
        }
        let total: i64 = count[..n].iter().product();
        let mut out = Vec::with_capacity(total as usize);
        let mut idx = [0i64; MAX_DIM];
        loop {
            let mut lower = [0; MAX_DIM];
            for k in 0..n {
                lower[k] = first[k] + idx[k] * s;
            }
            out.push(Cube::from_parts(n, level, lower));
            let mut k = n;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < count[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    dim: usize,
    #[serde(rename = "M")]
    fine: i32,
    #[serde(rename = "N")]
    top: i32,
    gamma: Vec<String>,
}

impl From<DyadicGrid> for GridRepr {
    fn from(g: DyadicGrid) -> Self {
        GridRepr {
            dim: g.dim(),
            fine: g.fine,
            top: g.top,
            gamma: g.gamma_units().iter().map(|&u| units_to_decimal(u)).collect(),
        }
    }
}

impl TryFrom<GridRepr> for DyadicGrid {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Self> {
        let gamma: Result<Vec<i64>> = r.gamma.iter().map(|s| decimal_to_units(s)).collect();
        let gamma = gamma?;
        if gamma.len() != r.dim {
            return Err(Error::DimensionMismatch {
                expected: r.dim,
                got: gamma.len(),
            });
        }
        DyadicGrid::from_translation(&gamma, r.fine, r.top)
    }
}

const _: () = assert!(RES_BITS < 62);
