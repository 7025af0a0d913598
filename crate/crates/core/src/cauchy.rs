//! Cauchy integrals on graph curves `{x + iA(x)}`: closed-form indicator
//! transforms, the accretive weight `b = 1 + iA'` and `b`-testing integrals.

use crate::constants::{testing, CubeFamily, TestingMode};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::{Cube, DyadicGrid};
use crate::kernels::{Component, KernelSpec, Truncation};
use crate::measures::lattice;
use crate::operators::KernelTable;
use crate::quadrature::{integrate, QuadOptions, QuadResult};
use nalgebra::Complex;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CurveSpec {
    Zero,
    Linear { a: f64 },
    Sine { amp: f64, freq: f64 },
    /// `A(x) = Σ c_k x^k`.
    Poly { coeffs: Vec<f64> },
}

impl CurveSpec {
    pub fn a(&self, x: f64) -> f64 {
        match self {
            CurveSpec::Zero => 0.0,
            CurveSpec::Linear { a } => a * x,
            CurveSpec::Sine { amp, freq } => amp * (2.0 * PI * freq * x).sin(),
            CurveSpec::Poly { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
        }
    }

    pub fn a_prime(&self, x: f64) -> f64 {
        match self {
            CurveSpec::Zero => 0.0,
            CurveSpec::Linear { a } => *a,
            CurveSpec::Sine { amp, freq } => amp * 2.0 * PI * freq * (2.0 * PI * freq * x).cos(),
            CurveSpec::Poly { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, c)| acc * x + k as f64 * c),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            CurveSpec::Zero => true,
            CurveSpec::Linear { a } => a.is_finite(),
            CurveSpec::Sine { amp, freq } => amp.is_finite() && freq.is_finite(),
            CurveSpec::Poly { coeffs } => coeffs.iter().all(|c| c.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("non-finite curve {self:?}")))
        }
    }
}

fn wrap(theta: f64) -> f64 {
    let mut t = theta;
    while t <= -PI {
        t += 2.0 * PI;
    }
    while t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// `C_A(1_I b)(x) = log((x - a + i(A(x) - A(a))) / (x - b + i(A(x) - A(b))))`
/// on the principal branch, argument in `(-π, π]`.
pub fn cauchy_indicator(curve: &CurveSpec, a: f64, b: f64, x: f64) -> Result<Complex<f64>> {
    if x == a || x == b {
        return Err(Error::InvalidParameter(format!("x = {x} is an endpoint")));
    }
    let ax = curve.a(x);
    let za = Complex::new(x - a, ax - curve.a(a));
    let zb = Complex::new(x - b, ax - curve.a(b));
    Ok(Complex::new(za.norm().ln() - zb.norm().ln(), wrap(za.arg() - zb.arg())))
}

pub fn accretive_b(curve: &CurveSpec, x: f64) -> Complex<f64> {
    Complex::new(1.0, curve.a_prime(x))
}

/// `(min Re b, max |b|)` over `pts` equally spaced points of `[lo, hi]`.
pub fn accretivity_bounds(curve: &CurveSpec, lo: f64, hi: f64, pts: usize) -> (f64, f64) {
    let n = pts.max(2);
    let mut c = f64::INFINITY;
    let mut big = 0.0f64;
    for k in 0..n {
        let x = lo + (hi - lo) * k as f64 / (n - 1) as f64;
        let b = accretive_b(curve, x);
        c = c.min(b.re);
        big = big.max(b.norm());
    }
    (c, big)
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if a.is_finite() && b.is_finite() && a < b {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("bad interval [{a}, {b}]")))
    }
}

/// `(1/|I|) ∫_I |C_A(1_I b)(x)|² dx` by adaptive quadrature starting from
/// `quadrature_pts` equal panels.
pub fn b_testing_ratio(curve: &CurveSpec, a: f64, b: f64, quadrature_pts: usize) -> Result<QuadResult> {
    curve.validate()?;
    check_interval(a, b)?;
    if quadrature_pts < 64 {
        return Err(Error::InvalidParameter("at least 64 quadrature panels".into()));
    }
    let opts = QuadOptions {
        initial_panels: quadrature_pts,
        ..Default::default()
    };
    let r = integrate(
        |x| cauchy_indicator(curve, a, b, x).map(|z| z.norm_sqr()).unwrap_or(0.0),
        a,
        b,
        &opts,
    )?;
    let len = b - a;
    Ok(QuadResult {
        value: r.value / len,
        error: r.error / len,
        panels: r.panels,
    })
}

/// `∫₀¹ |ln w|² dw`, the comparison integral, from the same engine.
pub fn log_square_integral() -> Result<QuadResult> {
    integrate(|w: f64| w.ln().powi(2), 0.0, 1.0, &QuadOptions::default())
}

/// Principal-value ratio for the flat curve, `∫₀¹ ln²(t/(1-t)) dt = π²/3`.
pub fn flat_pv_ratio() -> Result<QuadResult> {
    integrate(|t: f64| (t / (1.0 - t)).ln().powi(2), 0.0, 1.0, &QuadOptions::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteCheck {
    pub level: i32,
    /// Squared local testing constant of the lattice pair on `[0,1)`.
    pub discrete: f64,
    pub principal_value: f64,
    pub relative_error: f64,
}

/// Flat curve: the lattice of level `level` on `[0,1)` as both measures, the
/// truncated Hilbert kernel, and the local testing constant on `[0,1)`
/// against the principal-value integral.
pub fn discrete_check(level: i32, exec: Exec) -> Result<DiscreteCheck> {
    let mu = lattice(1, level)?;
    let trunc = Truncation::for_measures(&[&mu]);
    let spec = KernelSpec::new(0.0, 1, Component::Scalar1d, trunc)?;
    let grid = DyadicGrid::standard(1, level, 0)?;
    let family = CubeFamily::from_cubes(&mu, &mu, vec![grid], [Cube::unit(1)])?;
    let table = KernelTable::new(&spec, &mu, &mu, exec);
    let t = testing(&table, &mu, &mu, &family, TestingMode::Local, exec).value;
    let pv = flat_pv_ratio()?.value;
    let discrete = t * t;
    Ok(DiscreteCheck {
        level,
        discrete,
        principal_value: pv,
        relative_error: (discrete - pv).abs() / pv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_examples() {
        let z = cauchy_indicator(&CurveSpec::Zero, 0.0, 1.0, 0.5).unwrap();
        assert_eq!(z, Complex::new(0.0, PI));
        let z = cauchy_indicator(&CurveSpec::Zero, 0.0, 1.0, 0.25).unwrap();
        assert!((z.re - (1.0f64 / 3.0).ln()).abs() < 1e-15 && (z.im - PI).abs() < 1e-15);
        for t in [0.01, 0.2, 0.4] {
            let l = cauchy_indicator(&CurveSpec::Zero, 2.0, 3.0, 2.0 + t).unwrap().norm();
            let r = cauchy_indicator(&CurveSpec::Zero, 2.0, 3.0, 3.0 - t).unwrap().norm();
            assert!((l - r).abs() < 1e-12);
        }
        assert!(cauchy_indicator(&CurveSpec::Zero, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn accretivity() {
        assert_eq!(accretivity_bounds(&CurveSpec::Zero, 0.0, 1.0, 100), (1.0, 1.0));
        let (c, big) = accretivity_bounds(&CurveSpec::Linear { a: 1.0 }, 0.0, 1.0, 100);
        assert_eq!(c, 1.0);
        assert!((big - 2f64.sqrt()).abs() < 1e-15);
        let s = CurveSpec::Sine { amp: 0.1, freq: 1.0 };
        let (c, big) = accretivity_bounds(&s, 0.0, 1.0, 1000);
        assert_eq!(c, 1.0);
        assert!(big <= (1.0 + (0.2 * PI).powi(2)).sqrt() + 1e-12);
        let p = CurveSpec::Poly { coeffs: vec![1.0, 2.0, 3.0] };
        assert_eq!(p.a(2.0), 17.0);
        assert_eq!(p.a_prime(2.0), 14.0);
    }

    #[test]
    fn flat_ratio_closed_form() {
        let r = b_testing_ratio(&CurveSpec::Zero, 0.0, 1.0, 64).unwrap();
        assert!((r.value - 4.0 * PI * PI / 3.0).abs() < 1e-8 * r.value, "{r:?}");
        assert!((log_square_integral().unwrap().value - 2.0).abs() < 1e-10);
        assert!(b_testing_ratio(&CurveSpec::Zero, 0.0, 1.0, 10).is_err());
    }

    #[test]
    fn interval_independent_and_oracle() {
        let base = b_testing_ratio(&CurveSpec::Zero, 0.0, 1.0, 64).unwrap().value;
        for (a, b) in [(2.0, 2.5), (-1.0, 3.0)] {
            let r = b_testing_ratio(&CurveSpec::Zero, a, b, 64).unwrap().value;
            assert!((r - base).abs() < 1e-9 * base);
        }
        let oracle = flat_pv_ratio().unwrap().value + PI * PI;
        assert!((base - oracle).abs() < 1e-10 * oracle);
    }

    #[test]
    fn small_amplitude_continuity() {
        let zero = b_testing_ratio(&CurveSpec::Zero, 0.0, 1.0, 64).unwrap().value;
        let gaps: Vec<f64> = [0.1, 0.01, 0.001]
            .iter()
            .map(|&amp| {
                let r = b_testing_ratio(&CurveSpec::Sine { amp, freq: 1.0 }, 0.0, 1.0, 64).unwrap().value;
                (r - zero).abs()
            })
            .collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
        assert!(gaps[1] < 0.2 * gaps[0] && gaps[2] < 0.2 * gaps[1], "{gaps:?}");
    }

    #[test]
    fn discrete_lattice_matches() {
        let d = discrete_check(10, Exec::default()).unwrap();
        assert!(d.relative_error < 0.05, "{d:?}");
    }
}
