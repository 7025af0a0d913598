//! Exact dyadic geometry.
//!
//! Coordinates are integers in units of `2^-RES_BITS`. Cubes have power-of-two
//! sides, so every membership, nesting and touching test is exact.

mod cube;
mod goodness;
mod grid;
mod shave;

pub use cube::{are_neighbours, eta_close, in_three_minus, touching, Cube};
pub use goodness::{
    dist_to_boundary, is_deeply_embedded, is_good_cube, is_q_good_cube, is_q_good_grid,
    is_tau_good_cube, passes_threshold, threshold, GoodnessParams, QGridVerdict,
};
pub use grid::{grid_count, DyadicGrid, DEFAULT_GRID_CAP};
pub use shave::{corner_region, faces, shave, CornerRegion, Face, ShavedCube};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Highest supported ambient dimension.
pub const MAX_DIM: usize = 4;
/// Global resolution: coordinates are multiples of `2^-RES_BITS`.
pub const RES_BITS: i32 = 24;
/// Coarsest supported level (side `2^30`).
pub const MIN_LEVEL: i32 = -30;

pub const UNIT: f64 = (1u64 << RES_BITS) as f64;

pub fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        Err(Error::UnsupportedDimension(dim))
    } else {
        Ok(())
    }
}

pub(crate) fn check_level(level: i32) -> Result<()> {
    if (MIN_LEVEL..=RES_BITS).contains(&level) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "level {level} outside [{MIN_LEVEL}, {RES_BITS}]"
        )))
    }
}

/// Side length of a level-`level` cube, in units.
#[inline]
pub fn side_units(level: i32) -> i64 {
    1i64 << (RES_BITS - level)
}

#[inline]
pub fn units_to_f64(u: i64) -> f64 {
    u as f64 / UNIT
}

/// Nearest unit to a real coordinate.
pub fn f64_to_units(x: f64) -> Result<i64> {
    if !x.is_finite() || x.abs() > 2f64.powi(-MIN_LEVEL + 2) {
        return Err(Error::InvalidParameter(format!("coordinate {x} out of range")));
    }
    Ok((x * UNIT).round() as i64)
}

/// Exact decimal expansion of `u * 2^-RES_BITS`.
pub fn units_to_decimal(u: i64) -> String {
    let neg = u < 0;
    let a = (u as i128).unsigned_abs();
    let int = a >> RES_BITS;
    let frac = a & ((1u128 << RES_BITS) - 1);
    let mut s = String::new();
    if neg {
        s.push('-');
    }
    s.push_str(&int.to_string());
    if frac != 0 {
        // frac / 2^24 = frac * 5^24 / 10^24
        let digits = frac * 5u128.pow(RES_BITS as u32);
        let d = format!("{:0width$}", digits, width = RES_BITS as usize);
        s.push('.');
        s.push_str(d.trim_end_matches('0'));
    }
    s
}

/// Parses a decimal string, snapping to the nearest unit.
pub fn decimal_to_units(s: &str) -> Result<i64> {
    let bad = || Error::Parse(format!("invalid coordinate {s:?}"));
    let t = s.trim();
    let (neg, body) = match t.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (ip, fp) = match body.split_once('.') {
        Some((a, b)) => (a, b),
        None => (body, ""),
    };
    if (ip.is_empty() && fp.is_empty())
        || !ip.bytes().all(|c| c.is_ascii_digit())
        || !fp.bytes().all(|c| c.is_ascii_digit())
        || ip.len() > 12
    {
        // Fall back to float syntax such as 1e-3.
        let x: f64 = t.parse().map_err(|_| bad())?;
        return f64_to_units(x);
    }
    let int: i128 = if ip.is_empty() { 0 } else { ip.parse().map_err(|_| bad())? };
    let fp = &fp[..fp.len().min(30)];
    let mut frac_units: i128 = 0;
    if !fp.is_empty() {
        let num: i128 = fp.parse().map_err(|_| bad())?;
        let den = 10i128.pow(fp.len() as u32);
        let scaled = num << RES_BITS;
        frac_units = scaled / den;
        if 2 * (scaled % den) >= den {
            frac_units += 1;
        }
    }
    let mag = (int << RES_BITS) + frac_units;
    let v = if neg { -mag } else { mag };
    i64::try_from(v).map_err(|_| bad())
}

/// A point of `R^n` with coordinates in units.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    dim: u8,
    coords: [i64; MAX_DIM],
}

impl Point {
    pub fn from_units(units: &[i64]) -> Result<Self> {
        check_dim(units.len())?;
        let mut coords = [0; MAX_DIM];
        coords[..units.len()].copy_from_slice(units);
        Ok(Point {
            dim: units.len() as u8,
            coords,
        })
    }

    /// Snaps real coordinates to the resolution grid.
    pub fn from_f64(x: &[f64]) -> Result<Self> {
        let u: Result<Vec<i64>> = x.iter().map(|&v| f64_to_units(v)).collect();
        Self::from_units(&u?)
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn units(&self) -> &[i64] {
        &self.coords[..self.dim()]
    }

    pub fn unit(&self, k: usize) -> i64 {
        self.coords[k]
    }

    pub fn coord(&self, k: usize) -> f64 {
        units_to_f64(self.coords[k])
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.units().iter().map(|&u| units_to_f64(u)).collect()
    }

    pub fn to_decimal(&self) -> Vec<String> {
        self.units().iter().map(|&u| units_to_decimal(u)).collect()
    }

    /// Euclidean distance, from exact squared unit differences.
    pub fn dist(&self, other: &Point) -> f64 {
        let s: i128 = (0..self.dim())
            .map(|k| {
                let d = (self.coords[k] - other.coords[k]) as i128;
                d * d
            })
            .sum();
        (s as f64).sqrt() / UNIT
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.to_decimal().join(","))
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// JSON form of a coordinate: an exact decimal string or a plain number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coord {
    Text(String),
    Number(f64),
}

impl Coord {
    pub fn to_units(&self) -> Result<i64> {
        match self {
            Coord::Text(s) => decimal_to_units(s),
            Coord::Number(x) => f64_to_units(*x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_round_trip() {
        for u in [0i64, 1, -1, 1 << 22, 3 << 20, -(5 << 23), 123456789] {
            assert_eq!(decimal_to_units(&units_to_decimal(u)).unwrap(), u);
        }
        assert_eq!(units_to_decimal(1 << 22), "0.25");
        assert_eq!(units_to_decimal(-(3 << 23)), "-1.5");
        assert_eq!(units_to_decimal(1), "0.000000059604644775390625");
    }

    #[test]
    fn decimal_parse_snaps() {
        assert_eq!(decimal_to_units("0.1").unwrap(), (0.1 * UNIT).round() as i64);
        assert_eq!(decimal_to_units("2").unwrap(), 2 << 24);
        assert_eq!(decimal_to_units("1e-1").unwrap(), (0.1 * UNIT).round() as i64);
        assert!(decimal_to_units("abc").is_err());
    }

    #[test]
    fn point_distance() {
        let a = Point::from_f64(&[0.0, 0.0]).unwrap();
        let b = Point::from_f64(&[0.75, 1.0]).unwrap();
        assert_eq!(a.dist(&b), 1.25);
    }
}
