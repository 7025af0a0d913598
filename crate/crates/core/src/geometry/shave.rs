use super::{Cube, Point, UNIT};
use crate::error::{Error, Result};

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "shave parameter {lambda} not in (0, 1/2)"
        )))
    }
}

fn check_child(child: &Cube, parent: &Cube) -> Result<()> {
    if child.level() == parent.level() + 1 && parent.contains_cube(child) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{child} is not a child of {parent}"
        )))
    }
}

/// Open cube `J_λ = {x ∈ J : dist(x, ∂J) > λℓ(J)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShavedCube {
    pub cube: Cube,
    pub lambda: f64,
}

pub fn shave(j: &Cube, lambda: f64) -> Result<ShavedCube> {
    check_lambda(lambda)?;
    Ok(ShavedCube { cube: *j, lambda })
}

impl ShavedCube {
    pub fn margin(&self) -> f64 {
        self.lambda * self.cube.side()
    }

    pub fn contains(&self, p: &Point) -> bool {
        let m = self.margin();
        let c = &self.cube;
        (0..c.dim()).all(|k| {
            (p.unit(k) - c.lo(k)) as f64 / UNIT > m && (c.hi(k) - p.unit(k)) as f64 / UNIT > m
        })
    }

    /// Open interval of the shaved cube along axis `k`.
    pub fn interval(&self, k: usize) -> (f64, f64) {
        let m = self.margin();
        (
            self.cube.lo(k) as f64 / UNIT + m,
            self.cube.hi(k) as f64 / UNIT - m,
        )
    }

    pub fn volume(&self) -> f64 {
        (self.cube.side() * (1.0 - 2.0 * self.lambda)).powi(self.cube.dim() as i32)
    }
}

/// `J' \ J_λ` for a child `J'` of `J`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerRegion {
    pub child: Cube,
    pub shaved: ShavedCube,
}

pub fn corner_region(child: &Cube, parent: &Cube, lambda: f64) -> Result<CornerRegion> {
    check_child(child, parent)?;
    Ok(CornerRegion {
        child: *child,
        shaved: shave(parent, lambda)?,
    })
}

impl CornerRegion {
    pub fn contains(&self, p: &Point) -> bool {
        self.child.contains(p) && !self.shaved.contains(p)
    }

    pub fn volume(&self) -> f64 {
        let n = self.child.dim() as i32;
        let h = self.child.side();
        h.powi(n) - (h - self.shaved.margin()).powi(n)
    }
}

/// Slab of `J'` within `λℓ(J)` of the face of `J` perpendicular to `axis`,
/// minus the slabs of earlier axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub axis: usize,
    pub child: Cube,
    pub parent: Cube,
    pub lambda: f64,
}

pub fn faces(child: &Cube, parent: &Cube, lambda: f64) -> Result<Vec<Face>> {
    check_child(child, parent)?;
    check_lambda(lambda)?;
    Ok((0..child.dim())
        .map(|axis| Face {
            axis,
            child: *child,
            parent: *parent,
            lambda,
        })
        .collect())
}

impl Face {
    /// Does the child share the lower face of the parent along `axis`?
    pub fn at_lower(&self) -> bool {
        self.child.lo(self.axis) == self.parent.lo(self.axis)
    }

    fn in_slab(&self, p: &Point, k: usize) -> bool {
        let m = self.lambda * self.parent.side();
        let d = if self.child.lo(k) == self.parent.lo(k) {
            p.unit(k) - self.parent.lo(k)
        } else {
            self.parent.hi(k) - p.unit(k)
        };
        d as f64 / UNIT <= m
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.child.contains(p)
            && self.in_slab(p, self.axis)
            && (0..self.axis).all(|k| !self.in_slab(p, k))
    }

    pub fn volume(&self) -> f64 {
        let m = self.lambda * self.parent.side();
        let h = self.child.side();
        let n = self.child.dim() as i32;
        let k = self.axis as i32;
        m * (h - m).powi(k) * h.powi(n - 1 - k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: &[f64]) -> Point {
        Point::from_f64(x).unwrap()
    }

    #[test]
    fn shave_one_dim() {
        let j = Cube::unit(1);
        let s = shave(&j, 0.25).unwrap();
        assert_eq!(s.interval(0), (0.25, 0.75));
        assert!(!s.contains(&pt(&[0.25])));
        assert!(s.contains(&pt(&[0.3])));
        let c = corner_region(&j.children()[0], &j, 0.25).unwrap();
        assert!(c.contains(&pt(&[0.0])));
        assert!(c.contains(&pt(&[0.25])));
        assert!(!c.contains(&pt(&[0.26])));
        assert_eq!(c.volume(), 0.25);
        assert!(shave(&j, 0.5).is_err());
        assert!(shave(&j, 0.0).is_err());
    }

    #[test]
    fn corner_area_two_dim() {
        let j = Cube::unit(2);
        let c = corner_region(&j.children()[0], &j, 0.25).unwrap();
        assert_eq!(c.volume(), 0.1875);
        let f = faces(&j.children()[0], &j, 0.25).unwrap();
        assert_eq!(f.iter().map(|f| f.volume()).sum::<f64>(), 0.1875);
    }

    #[test]
    fn faces_partition_corner() {
        let j = Cube::from_f64(&[0.0, 0.0], 1.0).unwrap();
        let step = 1.0 / 64.0;
        for child in j.children() {
            let c = corner_region(&child, &j, 0.25).unwrap();
            let fs = faces(&child, &j, 0.25).unwrap();
            for a in 0..64 {
                for b in 0..64 {
                    let p = pt(&[a as f64 * step, b as f64 * step]);
                    let hits = fs.iter().filter(|f| f.contains(&p)).count();
                    assert_eq!(hits, c.contains(&p) as usize);
                }
            }
        }
    }

    #[test]
    fn collar_vanishes() {
        let j = Cube::unit(2);
        let small = corner_region(&j.children()[3], &j, 1e-6).unwrap();
        assert!(small.volume() < 1e-5);
        assert!(faces(&j, &j, 0.1).is_err());
    }
}
