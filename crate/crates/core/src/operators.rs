//! Truncated fractional operators on atomic measures.

use crate::error::{Error, Result};
use crate::exec::{compensated_sum, CompensatedSum, Exec};
use crate::geometry::{eta_close, is_good_cube, is_q_good_grid, Cube, DyadicGrid, GoodnessParams, Point};
use crate::haar::{HaarBasis, MuFunction};
use crate::kernels::KernelSpec;
use crate::measures::AtomicMeasure;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Above this many atoms on either side the norm uses power iteration.
pub const DENSE_SVD_LIMIT: usize = 512;

/// Unweighted kernel values `K(x_i, y_j)` between the atoms of `ω` (rows)
/// and `σ` (columns), one block per output component.
#[derive(Debug, Clone)]
pub struct KernelTable {
    rows: usize,
    cols: usize,
    outputs: usize,
    data: Vec<f64>,
}

impl KernelTable {
    pub fn new(spec: &KernelSpec, sigma: &AtomicMeasure, omega: &AtomicMeasure, exec: Exec) -> Self {
        let (rows, cols, outputs) = (omega.len(), sigma.len(), spec.outputs());
        let ys: Vec<Point> = sigma.points().copied().collect();
        let per_row = exec.map_slice(omega.atoms(), |a| {
            let mut row = vec![0.0; outputs * cols];
            let mut out = [0.0; crate::geometry::MAX_DIM];
            for (j, y) in ys.iter().enumerate() {
                spec.eval(&a.point, y, &mut out);
                for c in 0..outputs {
                    row[c * cols + j] = out[c];
                }
            }
            row
        });
        let mut data = vec![0.0; outputs * rows * cols];
        for (i, row) in per_row.into_iter().enumerate() {
            for c in 0..outputs {
                let dst = (c * rows + i) * cols;
                data[dst..dst + cols].copy_from_slice(&row[c * cols..(c + 1) * cols]);
            }
        }
        KernelTable {
            rows,
            cols,
            outputs,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    #[inline]
    pub fn get(&self, comp: usize, i: usize, j: usize) -> f64 {
        self.data[(comp * self.rows + i) * self.cols + j]
    }

    /// `T(h σ)` at every `ω` atom for component `comp`, summing only over the
    /// listed `σ` atoms.
    pub fn apply_on(&self, comp: usize, sigma: &AtomicMeasure, h: &[f64], support: &[usize]) -> Vec<f64> {
        let sa = sigma.atoms();
        (0..self.rows)
            .map(|i| {
                compensated_sum(
                    support
                        .iter()
                        .map(|&j| self.get(comp, i, j) * sa[j].mass * h[j]),
                )
            })
            .collect()
    }
}

/// `T_σ f` at the given points, one vector of components per point.
pub fn apply(spec: &KernelSpec, sigma: &AtomicMeasure, f: &[f64], at: &[Point]) -> Vec<Vec<f64>> {
    let q = spec.outputs();
    at.iter()
        .map(|x| {
            let mut acc = vec![CompensatedSum::new(); q];
            let mut out = [0.0; crate::geometry::MAX_DIM];
            for (a, fv) in sigma.atoms().iter().zip(f) {
                spec.eval(x, &a.point, &mut out);
                for c in 0..q {
                    acc[c].add(out[c] * a.mass * fv);
                }
            }
            acc.iter().map(|s| s.value()).collect()
        })
        .collect()
}

/// `⟨T_σ f, g⟩_ω` for a scalar kernel.
pub fn bilinear(
    spec: &KernelSpec,
    sigma: &AtomicMeasure,
    omega: &AtomicMeasure,
    f: &[f64],
    g: &[f64],
) -> Result<f64> {
    if !spec.is_scalar() {
        return Err(Error::ScalarKernelRequired);
    }
    let mut acc = CompensatedSum::new();
    for (b, gv) in omega.atoms().iter().zip(g) {
        for (a, fv) in sigma.atoms().iter().zip(f) {
            acc.add(spec.scalar(&b.point, &a.point) * a.mass * fv * b.mass * gv);
        }
    }
    Ok(acc.value())
}

/// `⟨f, T*_ω g⟩_σ` with `K*(x, y) = K(y, x)`.
pub fn bilinear_adjoint(
    spec: &KernelSpec,
    sigma: &AtomicMeasure,
    omega: &AtomicMeasure,
    f: &[f64],
    g: &[f64],
) -> Result<f64> {
    if !spec.is_scalar() {
        return Err(Error::ScalarKernelRequired);
    }
    let mut acc = CompensatedSum::new();
    for (a, fv) in sigma.atoms().iter().zip(f) {
        for (b, gv) in omega.atoms().iter().zip(g) {
            acc.add(a.mass * fv * spec.scalar(&b.point, &a.point) * b.mass * gv);
        }
    }
    Ok(acc.value())
}

/// Weighted matrix `√ω_i K(x_i, y_j) √σ_j`, components stacked by rows.
pub fn operator_matrix(
    spec: &KernelSpec,
    sigma: &AtomicMeasure,
    omega: &AtomicMeasure,
    exec: Exec,
) -> DMatrix<f64> {
    let t = KernelTable::new(spec, sigma, omega, exec);
    let (r, c, q) = (t.rows, t.cols, t.outputs);
    let ws: Vec<f64> = omega.atoms().iter().map(|a| a.mass.sqrt()).collect();
    let ss: Vec<f64> = sigma.atoms().iter().map(|a| a.mass.sqrt()).collect();
    DMatrix::from_fn(q * r, c, |row, j| {
        let (comp, i) = (row / r.max(1), row % r.max(1));
        ws[i] * t.get(comp, i, j) * ss[j]
    })
}

/// Matrix of the adjoint: rows `σ` atoms, columns `ω` atoms, kernel `K(y, x)`.
pub fn adjoint_matrix(
    spec: &KernelSpec,
    sigma: &AtomicMeasure,
    omega: &AtomicMeasure,
) -> DMatrix<f64> {
    let (sa, wa) = (sigma.atoms(), omega.atoms());
    DMatrix::from_fn(sa.len(), wa.len(), |j, i| {
        sa[j].mass.sqrt() * spec.scalar(&wa[i].point, &sa[j].point) * wa[i].mass.sqrt()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    DenseSvd,
    PowerIteration,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormResult {
    pub value: f64,
    pub method: NormMethod,
    pub iterations: usize,
}

/// Largest singular value of a dense matrix.
pub fn matrix_norm(a: &DMatrix<f64>, force_power: bool) -> Result<NormResult> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(NormResult {
            value: 0.0,
            method: NormMethod::DenseSvd,
            iterations: 0,
        });
    }
    if !force_power && a.nrows() <= DENSE_SVD_LIMIT * crate::geometry::MAX_DIM && a.ncols() <= DENSE_SVD_LIMIT {
        let s = a.singular_values();
        return Ok(NormResult {
            value: s.iter().fold(0.0f64, |m, &x| m.max(x)),
            method: NormMethod::DenseSvd,
            iterations: 0,
        });
    }
    power_iteration(a, 1e-10, 10_000)
}

/// Power iteration on `AᵀA`; on failure reports the bracket
/// `[‖Av‖, ‖A‖_F]`.
pub fn power_iteration(a: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<NormResult> {
    let n = a.ncols();
    let mut v = DVector::from_fn(n, |j, _| 1.0 + 0.01 * ((j * 37 % 101) as f64) / 101.0);
    v /= v.norm();
    let mut last = 0.0;
    for it in 1..=max_iter {
        let av = a * &v;
        let est = av.norm();
        let w = a.transpose() * av;
        let wn = w.norm();
        if wn == 0.0 {
            return Ok(NormResult {
                value: 0.0,
                method: NormMethod::PowerIteration,
                iterations: it,
            });
        }
        v = w / wn;
        if (est - last).abs() <= tol * est {
            return Ok(NormResult {
                value: est,
                method: NormMethod::PowerIteration,
                iterations: it,
            });
        }
        last = est;
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        lower: (a * &v).norm(),
        upper: a.norm(),
    })
}

/// `‖T_σ‖_{L²(σ) → L²(ω)}`.
pub fn operator_norm(
    spec: &KernelSpec,
    sigma: &AtomicMeasure,
    omega: &AtomicMeasure,
    exec: Exec,
) -> Result<NormResult> {
    let a = operator_matrix(spec, sigma, omega, exec);
    let force = sigma.len() > DENSE_SVD_LIMIT || omega.len() > DENSE_SVD_LIMIT;
    matrix_norm(&a, force)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Good,
    Bad,
}

/// Good and bad parts of `f` relative to `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct GoodBad {
    pub good: MuFunction,
    pub bad: MuFunction,
    pub grid_good: bool,
}

/// Splits `f = good + bad` where `good = Σ Δ_I f` over good grid cubes `I`,
/// or 0 if the grid is `Q`-bad.
pub fn good_bad_split(
    basis: &HaarBasis,
    f: &[f64],
    q: &Cube,
    params: &GoodnessParams,
) -> Result<GoodBad> {
    let grid = basis.grid();
    let n = basis.measure().len();
    let grid_good = is_q_good_grid(grid, q, params).good;
    let mut good = vec![0.0; n];
    if grid_good {
        for node in basis.nodes() {
            if is_good_cube(&node.cube, grid, params)? {
                let d = basis.delta(f, &node.cube);
                for i in 0..n {
                    good[i] += d[i];
                }
            }
        }
    }
    let bad = f.iter().zip(&good).map(|(a, b)| a - b).collect();
    Ok(GoodBad {
        good,
        bad,
        grid_good,
    })
}

pub fn good_projection(
    basis: &HaarBasis,
    f: &[f64],
    q: &Cube,
    params: &GoodnessParams,
    side: Side,
) -> Result<MuFunction> {
    let s = good_bad_split(basis, f, q, params)?;
    Ok(match side {
        Side::Good => s.good,
        Side::Bad => s.bad,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Forms {
    /// `Σ_{I,J} ⟨T Δ_I f, Δ_J g⟩`.
    pub b: f64,
    /// Restricted to `r`-close pairs.
    pub c: f64,
    /// Absolute values over `r`-close pairs.
    pub s: f64,
}

fn check_mean_zero(mu: &AtomicMeasure, f: &[f64], which: &'static str) -> Result<()> {
    let mean = mu.integral(f);
    let scale = compensated_sum(mu.atoms().iter().zip(f).map(|(a, x)| a.mass * x.abs())).max(1.0);
    if mean.abs() > 1e-12 * scale {
        return Err(Error::MeanZeroViolation { which, mean });
    }
    Ok(())
}

/// The forms `B`, `C_D` and `S_D` on one grid; `r`-close means `η`-close
/// with `η = r`.
#[allow(clippy::too_many_arguments)]
pub fn forms_b_c_s(
    spec: &KernelSpec,
    sigma: &AtomicMeasure,
    omega: &AtomicMeasure,
    f: &[f64],
    g: &[f64],
    grid: &DyadicGrid,
    params: &GoodnessParams,
    exec: Exec,
) -> Result<Forms> {
    if !spec.is_scalar() {
        return Err(Error::ScalarKernelRequired);
    }
    check_mean_zero(sigma, f, "f")?;
    check_mean_zero(omega, g, "g")?;
    let bs = HaarBasis::build_forest(grid, sigma)?;
    let bw = HaarBasis::build_forest(grid, omega)?;
    let table = KernelTable::new(spec, sigma, omega, exec);
    let all_sigma: Vec<usize> = (0..sigma.len()).collect();
    let dg: Vec<(Cube, MuFunction)> = bw
        .nodes()
        .iter()
        .map(|n| (n.cube, bw.delta(g, &n.cube)))
        .collect();
    let rows = exec.map_slice(bs.nodes(), |ni| {
        let df = bs.delta(f, &ni.cube);
        let u = table.apply_on(0, sigma, &df, &all_sigma);
        let (mut b, mut c, mut s) = (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
        for (cj, dgj) in &dg {
            let v = omega.inner(&u, dgj);
            b.add(v);
            if eta_close(&ni.cube, cj, params.r, grid) {
                c.add(v);
                s.add(v.abs());
            }
        }
        (b.value(), c.value(), s.value())
    });
    Ok(Forms {
        b: compensated_sum(rows.iter().map(|r| r.0)),
        c: compensated_sum(rows.iter().map(|r| r.1)),
        s: compensated_sum(rows.iter().map(|r| r.2)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{Component, Truncation};
    use crate::measures::random_uniform;

    fn spec() -> KernelSpec {
        KernelSpec::new(0.0, 1, Component::Scalar1d, Truncation::tangent(0.01, 10.0)).unwrap()
    }

    fn atom(x: f64, m: f64) -> AtomicMeasure {
        AtomicMeasure::from_f64(1, &[(&[x], m)]).unwrap()
    }

    #[test]
    fn apply_examples() {
        let s = atom(0.25, 1.0);
        let x = Point::from_f64(&[0.75]).unwrap();
        assert_eq!(apply(&spec(), &s, &[1.0], &[x]), vec![vec![2.0]]);
        assert_eq!(apply(&spec(), &s, &[0.0], &[x]), vec![vec![0.0]]);
        let v = KernelSpec::new(0.0, 2, Component::Vector, Truncation::tangent(0.01, 10.0)).unwrap();
        let s2 = AtomicMeasure::from_f64(2, &[(&[0.0, 0.0], 1.0)]).unwrap();
        let out = apply(&v, &s2, &[1.0], &[Point::from_f64(&[1.0, 0.0]).unwrap()]);
        assert_eq!(out, vec![vec![1.0, 0.0]]);
    }

    #[test]
    fn norm_examples() {
        let n = operator_norm(&spec(), &atom(0.25, 1.0), &atom(0.75, 1.0), Exec::Sequential).unwrap();
        assert_eq!(n.value, 2.0);
        let n2 = operator_norm(&spec(), &atom(0.25, 3.0), &atom(0.75, 3.0), Exec::Sequential).unwrap();
        assert!((n2.value - 6.0).abs() < 1e-14);
    }

    #[test]
    fn power_iteration_matches_svd() {
        let s = random_uniform(1, 40, &Cube::unit(1), 12, 0.5, 1).unwrap();
        let w = random_uniform(1, 30, &Cube::unit(1), 12, 0.5, 2).unwrap();
        let k = KernelSpec::default_for(0.0, &s, &w).unwrap();
        let a = operator_matrix(&k, &s, &w, Exec::Parallel);
        let d = matrix_norm(&a, false).unwrap();
        let p = matrix_norm(&a, true).unwrap();
        assert_eq!(p.method, NormMethod::PowerIteration);
        assert!((d.value - p.value).abs() < 1e-8 * d.value);
    }

    #[test]
    fn adjoint_and_duality() {
        let s = random_uniform(1, 12, &Cube::unit(1), 12, 0.5, 3).unwrap();
        let w = random_uniform(1, 9, &Cube::unit(1), 12, 0.5, 4).unwrap();
        let k = KernelSpec::default_for(0.0, &s, &w).unwrap();
        let a = operator_matrix(&k, &s, &w, Exec::Sequential);
        let at = adjoint_matrix(&k, &s, &w);
        assert!((a.transpose() - at).abs().max() < 1e-14);
        let f: Vec<f64> = (0..s.len()).map(|i| (i as f64).sin()).collect();
        let g: Vec<f64> = (0..w.len()).map(|i| (i as f64).cos()).collect();
        let x = bilinear(&k, &s, &w, &f, &g).unwrap();
        let y = bilinear_adjoint(&k, &s, &w, &f, &g).unwrap();
        assert!((x - y).abs() < 1e-12);
        let v = KernelSpec::new(0.0, 2, Component::Vector, Truncation::tangent(0.01, 10.0)).unwrap();
        let s2 = AtomicMeasure::from_f64(2, &[(&[0.0, 0.0], 1.0)]).unwrap();
        assert!(matches!(
            bilinear(&v, &s2, &s2, &[1.0], &[1.0]),
            Err(Error::ScalarKernelRequired)
        ));
    }

    #[test]
    fn good_projection_branches() {
        let s = random_uniform(1, 16, &Cube::unit(1), 10, 0.5, 5).unwrap();
        let f: Vec<f64> = (0..s.len()).map(|i| i as f64).collect();
        let g = DyadicGrid::standard(1, 10, 0).unwrap();
        let b = HaarBasis::build_forest(&g, &s).unwrap();
        let q = Cube::from_f64(&[0.5 - 2f64.powi(-6)], 2f64.powi(-6)).unwrap();
        let p = GoodnessParams::with_r(2, 0.5);
        let split = good_bad_split(&b, &f, &q, &p).unwrap();
        assert!(!split.grid_good);
        assert!(split.good.iter().all(|&x| x == 0.0));
        assert_eq!(split.bad, f);
    }

    #[test]
    fn forms_match_bilinear() {
        let g = DyadicGrid::standard(1, 12, 0).unwrap();
        let s = random_uniform(1, 10, &Cube::unit(1), 12, 0.5, 6).unwrap();
        let w = random_uniform(1, 11, &Cube::unit(1), 12, 0.5, 7).unwrap();
        let k = KernelSpec::default_for(0.0, &s, &w).unwrap();
        let mut f: Vec<f64> = (0..s.len()).map(|i| (i as f64 * 1.3).sin()).collect();
        let mut h: Vec<f64> = (0..w.len()).map(|i| (i as f64 * 0.7).cos()).collect();
        let mf = s.integral(&f) / s.total_mass();
        f.iter_mut().for_each(|x| *x -= mf);
        let mh = w.integral(&h) / w.total_mass();
        h.iter_mut().for_each(|x| *x -= mh);
        let forms = forms_b_c_s(&k, &s, &w, &f, &h, &g, &GoodnessParams::with_r(2, 0.5), Exec::Parallel).unwrap();
        let direct = bilinear(&k, &s, &w, &f, &h).unwrap();
        assert!((forms.b - direct).abs() < 1e-8 * direct.abs().max(1.0));
        assert!(forms.c.abs() <= forms.s + 1e-15);
        let zero = vec![0.0; s.len()];
        let z = forms_b_c_s(&k, &s, &w, &zero, &h, &g, &GoodnessParams::with_r(2, 0.5), Exec::Sequential).unwrap();
        assert_eq!((z.b, z.c, z.s), (0.0, 0.0, 0.0));
        let ones = vec![1.0; s.len()];
        assert!(matches!(
            forms_b_c_s(&k, &s, &w, &ones, &h, &g, &GoodnessParams::with_r(2, 0.5), Exec::Sequential),
            Err(Error::MeanZeroViolation { .. })
        ));
    }
}
