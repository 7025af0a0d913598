//! Expectations over the random grid.

use crate::error::{Error, Result};
use crate::exec::{CompensatedSum, Exec};
use crate::geometry::{grid_count, DyadicGrid, DEFAULT_GRID_CAP};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GridMode {
    Exhaustive,
    Sample { count: u64, seed: u64 },
}

/// Mean with its standard error (zero when exact).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub count: u64,
}

type GridMaker = Box<dyn Fn(u64) -> Result<DyadicGrid> + Sync + Send>;

fn grids(dim: usize, fine: i32, top: i32, mode: GridMode) -> Result<(u64, GridMaker)> {
    match mode {
        GridMode::Exhaustive => {
            let total = grid_count(dim, fine, top);
            if total > DEFAULT_GRID_CAP {
                return Err(Error::EnumerationCap {
                    count: total,
                    cap: DEFAULT_GRID_CAP,
                });
            }
            Ok((total as u64, Box::new(move |i| DyadicGrid::by_index(dim, fine, top, i as u128))))
        }
        GridMode::Sample { count, seed } => {
            if count == 0 {
                return Err(Error::InvalidParameter("sample count must be positive".into()));
            }
            Ok((count, Box::new(move |i| DyadicGrid::sample_stream(seed, i, dim, fine, top))))
        }
    }
}

/// Per-grid statistic rows, in grid order.
pub fn mc_rows<F>(dim: usize, fine: i32, top: i32, mode: GridMode, stat: F, exec: Exec) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&DyadicGrid) -> Result<Vec<f64>> + Sync + Send,
{
    let (count, make) = grids(dim, fine, top, mode)?;
    exec.map_range(count as usize, |i| stat(&make(i as u64)?))
        .into_iter()
        .collect()
}

/// Column means of `rows` with standard errors (zero for exhaustive runs).
pub fn column_estimates(rows: &[Vec<f64>], mode: GridMode) -> Vec<Estimate> {
    let Some(first) = rows.first() else {
        return Vec::new();
    };
    let count = rows.len() as u64;
    let n = rows.len() as f64;
    (0..first.len())
        .map(|j| {
            let mut s = CompensatedSum::new();
            for r in rows {
                s.add(r[j]);
            }
            let mean = s.value() / n;
            let stderr = match mode {
                GridMode::Exhaustive => 0.0,
                GridMode::Sample { .. } if count > 1 => {
                    let mut ss = CompensatedSum::new();
                    for r in rows {
                        ss.add((r[j] - mean).powi(2));
                    }
                    (ss.value() / (n - 1.0) / n).sqrt()
                }
                _ => f64::INFINITY,
            };
            Estimate { mean, stderr, count }
        })
        .collect()
}

/// Expectations of `k` statistics computed together per grid. Rows are
/// reduced in grid order, so results do not depend on the worker count.
pub fn mc_expect_many<F>(
    dim: usize,
    fine: i32,
    top: i32,
    mode: GridMode,
    k: usize,
    stat: F,
    exec: Exec,
) -> Result<Vec<Estimate>>
where
    F: Fn(&DyadicGrid) -> Result<Vec<f64>> + Sync + Send,
{
    let rows = mc_rows(dim, fine, top, mode, stat, exec)?;
    if let Some(r) = rows.iter().find(|r| r.len() != k) {
        return Err(Error::InvalidParameter(format!("statistic returned {} values, expected {k}", r.len())));
    }
    Ok(column_estimates(&rows, mode))
}

/// `E_Ω stat` over all grids (exact) or a seeded sample.
pub fn mc_expect<F>(dim: usize, fine: i32, top: i32, mode: GridMode, stat: F, exec: Exec) -> Result<Estimate>
where
    F: Fn(&DyadicGrid) -> f64 + Sync + Send,
{
    Ok(mc_expect_many(dim, fine, top, mode, 1, |g| Ok(vec![stat(g)]), exec)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_indicator() {
        let e = mc_expect(1, 3, 0, GridMode::Exhaustive, |_| 2.5, Exec::default()).unwrap();
        assert_eq!((e.mean, e.stderr, e.count), (2.5, 0.0, 8));
        let target = DyadicGrid::by_index(1, 2, 0, 3).unwrap();
        let e = mc_expect(1, 2, 0, GridMode::Exhaustive, |g| (*g == target) as u8 as f64, Exec::default()).unwrap();
        assert_eq!(e.mean, 0.25);
    }

    #[test]
    fn sampled_agrees_with_exhaustive() {
        let stat = |g: &DyadicGrid| g.gamma()[0];
        let ex = mc_expect(1, 6, 0, GridMode::Exhaustive, stat, Exec::default()).unwrap();
        let s = mc_expect(1, 6, 0, GridMode::Sample { count: 2000, seed: 5 }, stat, Exec::default()).unwrap();
        assert!((s.mean - ex.mean).abs() <= 3.0 * s.stderr, "{s:?} {ex:?}");
        let seq = mc_expect(1, 6, 0, GridMode::Sample { count: 2000, seed: 5 }, stat, Exec::Sequential).unwrap();
        assert_eq!(seq.mean.to_bits(), s.mean.to_bits());
    }

    #[test]
    fn cap_enforced() {
        assert!(matches!(
            mc_expect(2, 12, 0, GridMode::Exhaustive, |_| 0.0, Exec::default()),
            Err(Error::EnumerationCap { .. })
        ));
    }
}
