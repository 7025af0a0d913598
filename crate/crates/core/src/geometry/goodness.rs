use super::{Cube, DyadicGrid, UNIT};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Comparison slack for the fractional-power threshold.
const MARGIN: f64 = 1.0 / (1u64 << 40) as f64;

/// Goodness parameters `(r, eps)`, the comparability exponent `rho` and the
/// stricter order `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoodnessParams {
    pub r: u32,
    pub eps: f64,
    pub rho: u32,
    pub tau: u32,
    /// Also require children and the first `tau` ancestors to be good.
    #[serde(default)]
    pub strict_tau: bool,
}

impl Default for GoodnessParams {
    fn default() -> Self {
        Self::with_r(6, 0.45)
    }
}

impl GoodnessParams {
    /// `rho = r + 3`, `tau = r + 1`.
    pub fn with_r(r: u32, eps: f64) -> Self {
        GoodnessParams {
            r,
            eps,
            rho: r + 3,
            tau: r + 1,
            strict_tau: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eps = {} not in (0,1)",
                self.eps
            )));
        }
        if self.r < 1 || self.rho <= self.r {
            return Err(Error::InvalidParameter(format!(
                "need rho > r >= 1, got r = {}, rho = {}",
                self.r, self.rho
            )));
        }
        if self.tau < 1 {
            return Err(Error::InvalidParameter("tau must be positive".into()));
        }
        Ok(())
    }
}

/// `dist(A, ∂B)` for boxes: the smallest inner face gap when the closure of
/// `A` lies in the interior of `B`, the Euclidean gap when they are
/// separated, and 0 otherwise.
pub fn dist_to_boundary(a: &Cube, b: &Cube) -> f64 {
    let n = a.dim();
    let mut inner = i64::MAX;
    let mut outer: i128 = 0;
    for k in 0..n {
        let g = (a.lo(k) - b.lo(k)).min(b.hi(k) - a.hi(k));
        inner = inner.min(g);
        let sep = (b.lo(k) - a.hi(k)).max(a.lo(k) - b.hi(k)).max(0) as i128;
        outer += sep * sep;
    }
    if inner > 0 {
        inner as f64 / UNIT
    } else {
        (outer as f64).sqrt() / UNIT
    }
}

/// `½ ℓ_small^ε ℓ_big^{1-ε}`.
pub fn threshold(l_small: f64, l_big: f64, eps: f64) -> f64 {
    0.5 * l_small.powf(eps) * l_big.powf(1.0 - eps)
}

/// Ties count as passing.
pub fn passes_threshold(dist: f64, thr: f64) -> bool {
    dist + MARGIN >= thr
}

pub fn is_deeply_embedded(j: &Cube, k: &Cube, params: &GoodnessParams) -> bool {
    k.contains_cube(j)
        && j.level() - k.level() >= params.r as i32
        && passes_threshold(
            dist_to_boundary(j, k),
            threshold(j.side(), k.side(), params.eps),
        )
}

fn ancestors_good(i: &Cube, grid: &DyadicGrid, params: &GoodnessParams) -> bool {
    let ti = i.side();
    let mut level = i.level() - params.r as i32;
    while level >= grid.top() {
        let k = grid.ancestor(i, level);
        if !passes_threshold(dist_to_boundary(i, &k), threshold(ti, k.side(), params.eps)) {
            return false;
        }
        level -= 1;
    }
    true
}

/// `(r, eps)`-goodness of a grid cube against all ancestors up to the top level.
/// With `strict_tau`, dispatches to [`is_tau_good_cube`].
pub fn is_good_cube(i: &Cube, grid: &DyadicGrid, params: &GoodnessParams) -> Result<bool> {
    if !grid.contains_cube(i) {
        return Err(Error::NotAGridCube(i.to_string()));
    }
    if params.strict_tau {
        return is_tau_good_cube(i, grid, params);
    }
    Ok(ancestors_good(i, grid, params))
}

/// The cube, its grid children and its first `tau` ancestors are all good.
pub fn is_tau_good_cube(i: &Cube, grid: &DyadicGrid, params: &GoodnessParams) -> Result<bool> {
    if !grid.contains_cube(i) {
        return Err(Error::NotAGridCube(i.to_string()));
    }
    if !ancestors_good(i, grid, params) {
        return Ok(false);
    }
    if !grid.children(i).iter().all(|c| ancestors_good(c, grid, params)) {
        return Ok(false);
    }
    let lowest = (i.level() - params.tau as i32).max(grid.top());
    Ok((lowest..i.level()).all(|l| ancestors_good(&grid.ancestor(i, l), grid, params)))
}

/// Small cubes must stay away from the boundaries of all triadic siblings of `Q`.
pub fn is_q_good_cube(i: &Cube, q: &Cube, params: &GoodnessParams) -> bool {
    if i.level() < q.level() + params.rho as i32 {
        return true;
    }
    let thr = threshold(i.side(), q.side(), params.eps);
    q.triadic_siblings()
        .iter()
        .all(|qp| passes_threshold(dist_to_boundary(i, qp), thr))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QGridVerdict {
    pub good: bool,
    /// No grid level is large enough to test.
    pub vacuous: bool,
}

/// Every triadic sibling of `Q` is far from the boundary of every grid cube
/// at least `2^r` times larger.
pub fn is_q_good_grid(grid: &DyadicGrid, q: &Cube, params: &GoodnessParams) -> QGridVerdict {
    let deepest = q.level() - params.r as i32;
    if deepest < grid.top() {
        return QGridVerdict {
            good: true,
            vacuous: true,
        };
    }
    let n = q.dim();
    let siblings = q.triadic_siblings();
    for level in grid.top()..=deepest {
        let big = 2f64.powi(-level);
        let thr = threshold(q.side(), big, params.eps);
        let pad = (thr * UNIT).ceil() as i64 + 1;
        for qp in &siblings {
            let lo: Vec<i64> = (0..n).map(|k| qp.lo(k) - pad).collect();
            let hi: Vec<i64> = (0..n).map(|k| qp.hi(k) + pad).collect();
            for i in grid.cubes_meeting(level, &lo, &hi) {
                if !passes_threshold(dist_to_boundary(qp, &i), thr) {
                    return QGridVerdict {
                        good: false,
                        vacuous: false,
                    };
                }
            }
        }
    }
    QGridVerdict {
        good: true,
        vacuous: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c1(lo: f64, side: f64) -> Cube {
        Cube::from_f64(&[lo], side).unwrap()
    }

    fn p(r: u32, eps: f64) -> GoodnessParams {
        GoodnessParams::with_r(r, eps)
    }

    #[test]
    fn distance_cases() {
        let k = c1(0.0, 1.0);
        assert_eq!(dist_to_boundary(&c1(0.25, 0.0625), &k), 0.25);
        assert_eq!(dist_to_boundary(&c1(0.0, 0.0625), &k), 0.0);
        assert_eq!(dist_to_boundary(&c1(1.5, 0.25), &k), 0.5);
        assert_eq!(dist_to_boundary(&c1(0.5, 1.0), &k), 0.0);
        let a = Cube::from_f64(&[1.75, 2.0], 0.25).unwrap();
        assert_eq!(dist_to_boundary(&a, &Cube::unit(2)), 1.25);
    }

    #[test]
    fn deep_embedding_examples() {
        let k = c1(0.0, 1.0);
        assert!(is_deeply_embedded(&c1(0.25, 0.0625), &k, &p(3, 0.5)));
        assert!(!is_deeply_embedded(&k, &k, &p(3, 0.5)));
        assert!(!is_deeply_embedded(&c1(0.0, 0.0625), &k, &p(3, 0.5)));
    }

    #[test]
    fn good_cube_examples() {
        let g = DyadicGrid::standard(1, 10, 0).unwrap();
        assert!(is_good_cube(&c1(0.0, 1.0), &g, &p(3, 0.5)).unwrap());
        assert!(!is_good_cube(&c1(0.0, 1.0 / 32.0), &g, &p(3, 0.5)).unwrap());
        assert!(is_good_cube(&c1(0.5, 1.0), &g, &p(3, 0.5)).is_err());
        // Deep in the middle of its ancestors.
        let mid = g.cube_at(&[(0.3 * UNIT) as i64], 8);
        assert!(is_good_cube(&mid, &g, &p(3, 0.5)).unwrap());
    }

    #[test]
    fn tau_good_is_stricter() {
        let g = DyadicGrid::standard(1, 10, 0).unwrap();
        let params = GoodnessParams {
            strict_tau: true,
            ..p(2, 0.5)
        };
        for i in 0..1024 {
            let c = g.cube_at(&[i << 14], 10 - (i % 5) as i32);
            if is_good_cube(&c, &g, &params).unwrap() {
                assert!(is_good_cube(&c, &g, &p(2, 0.5)).unwrap());
            }
        }
    }

    #[test]
    fn q_good_cube_examples() {
        let q = c1(0.0, 1.0);
        let mut params = p(3, 0.5);
        params.rho = 5;
        assert!(is_q_good_cube(&q, &q, &params));
        let i = c1(0.5 - 2f64.powi(-9), 2f64.powi(-9));
        assert!(is_q_good_cube(&i, &q, &params));
        let i = c1(1.0 - 2f64.powi(-9), 2f64.powi(-9));
        assert!(!is_q_good_cube(&i, &q, &params));
        let i = c1(0.25, 2f64.powi(-8));
        assert!(is_q_good_cube(&i, &q, &params));
    }

    #[test]
    fn q_good_grid_examples() {
        let g = DyadicGrid::standard(1, 10, 0).unwrap();
        let v = is_q_good_grid(&g, &c1(0.0, 1.0), &p(2, 0.5));
        assert!(v.good && v.vacuous);
        let q = c1(0.5 - 2f64.powi(-6), 2f64.powi(-6));
        let v = is_q_good_grid(&g, &q, &p(2, 0.5));
        assert!(!v.good && !v.vacuous);
        let q2 = c1(0.25 + 2f64.powi(-7), 2f64.powi(-8));
        let shifted = DyadicGrid::from_translation_f64(&[0.5], 10, 0).unwrap();
        assert!(is_q_good_grid(&g, &q2, &p(2, 0.5)).good == false);
        assert!(is_q_good_grid(&shifted, &q2, &p(2, 0.5)).good == false);
    }
}
