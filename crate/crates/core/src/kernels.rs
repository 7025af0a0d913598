//! Fractional Riesz kernels with tangent-line truncation.

use crate::error::{Error, Result};
use crate::geometry::{check_dim, Point};
use crate::measures::{diameter, min_gap, AtomicMeasure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    /// One Riesz component, 1-based.
    Index(usize),
    /// All `n` components, stacked.
    Vector,
    /// The one-dimensional kernel `w/|w|^{2-α}`.
    Scalar1d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncStyle {
    TangentLine,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub delta: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub style: TruncStyle,
}

impl Truncation {
    pub fn tangent(delta: f64, big_r: f64) -> Self {
        Truncation {
            delta,
            big_r,
            style: TruncStyle::TangentLine,
        }
    }

    /// Half the smallest atom gap and twice the diameter of the combined
    /// supports, so that no pair of atoms sees the truncation.
    pub fn for_measures(measures: &[&AtomicMeasure]) -> Self {
        let diam = diameter(measures);
        let big_r = if diam > 0.0 { 2.0 * diam } else { 1.0 };
        let delta = match min_gap(measures) {
            Some(g) => 0.5 * g,
            None => 0.5 * big_r,
        };
        Truncation::tangent(delta, big_r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub alpha: f64,
    pub dim: usize,
    pub component: Component,
    pub trunc: Truncation,
}

/// Zero of the tangent line to `r^{α-n}` at `R`.
pub fn tangent_s(alpha: f64, n: usize, big_r: f64) -> f64 {
    let p = n as f64 - alpha;
    big_r * (p + 1.0) / p
}

/// Tangent-line truncation of `r^{α-n}`.
pub fn tangent_psi(alpha: f64, n: usize, delta: f64, big_r: f64, r: f64) -> f64 {
    let p = n as f64 - alpha;
    if r <= 0.0 {
        0.0
    } else if r < delta {
        let v = delta.powf(-p);
        v - p * v / delta * (r - delta)
    } else if r <= big_r {
        r.powf(-p)
    } else if r < tangent_s(alpha, n, big_r) {
        let v = big_r.powf(-p);
        (v - p * v / big_r * (r - big_r)).max(0.0)
    } else {
        0.0
    }
}

impl KernelSpec {
    pub fn new(alpha: f64, dim: usize, component: Component, trunc: Truncation) -> Result<Self> {
        let s = KernelSpec {
            alpha,
            dim,
            component,
            trunc,
        };
        s.validate()?;
        Ok(s)
    }

    /// Component 1 (the Hilbert-like kernel when `n = 1`) with the default
    /// truncation for the pair.
    pub fn default_for(alpha: f64, sigma: &AtomicMeasure, omega: &AtomicMeasure) -> Result<Self> {
        let component = if sigma.dim() == 1 {
            Component::Scalar1d
        } else {
            Component::Index(1)
        };
        Self::new(
            alpha,
            sigma.dim(),
            component,
            Truncation::for_measures(&[sigma, omega]),
        )
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.dim)?;
        if !(self.alpha >= 0.0 && self.alpha < self.dim as f64) {
            return Err(Error::InvalidParameter(format!(
                "alpha = {} not in [0, {})",
                self.alpha, self.dim
            )));
        }
        let t = &self.trunc;
        if !(t.delta > 0.0 && t.big_r > t.delta && t.big_r.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "truncation needs 0 < delta < R, got {} and {}",
                t.delta, t.big_r
            )));
        }
        match self.component {
            Component::Index(l) if l == 0 || l > self.dim => Err(Error::InvalidParameter(
                format!("component {l} not in 1..={}", self.dim),
            )),
            Component::Scalar1d if self.dim != 1 => Err(Error::InvalidParameter(
                "scalar_1d kernel needs n = 1".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Number of output components.
    pub fn outputs(&self) -> usize {
        match self.component {
            Component::Vector => self.dim,
            _ => 1,
        }
    }

    pub fn is_scalar(&self) -> bool {
        self.outputs() == 1
    }

    pub fn s(&self) -> f64 {
        tangent_s(self.alpha, self.dim, self.trunc.big_r)
    }

    pub fn psi(&self, r: f64) -> f64 {
        match self.trunc.style {
            TruncStyle::TangentLine => {
                tangent_psi(self.alpha, self.dim, self.trunc.delta, self.trunc.big_r, r)
            }
            TruncStyle::None if r > 0.0 => r.powf(self.alpha - self.dim as f64),
            TruncStyle::None => 0.0,
        }
    }

    /// Kernel at displacement `w = x - y`, written into `out`.
    pub fn eval_w(&self, w: &[f64], out: &mut [f64]) {
        let r = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = if r > 0.0 { self.psi(r) / r } else { 0.0 };
        match self.component {
            Component::Vector => {
                for (o, x) in out.iter_mut().zip(w) {
                    *o = x * scale;
                }
            }
            Component::Index(l) => out[0] = w[l - 1] * scale,
            Component::Scalar1d => out[0] = w[0] * scale,
        }
    }

    /// Scalar kernel value; the first component for vector kernels.
    pub fn scalar_w(&self, w: &[f64]) -> f64 {
        let mut out = [0.0; crate::geometry::MAX_DIM];
        self.eval_w(w, &mut out);
        out[0]
    }

    /// `K(x, y)` written into `out`; zero on the diagonal.
    pub fn eval(&self, x: &Point, y: &Point, out: &mut [f64]) {
        let mut w = [0.0; crate::geometry::MAX_DIM];
        for k in 0..self.dim {
            w[k] = crate::geometry::units_to_f64(x.unit(k) - y.unit(k));
        }
        self.eval_w(&w[..self.dim], out)
    }

    pub fn scalar(&self, x: &Point, y: &Point) -> f64 {
        let mut out = [0.0; crate::geometry::MAX_DIM];
        self.eval(x, y, &mut out);
        out[0]
    }
}

/// Empirical constants from the size and smoothness probes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelProbe {
    /// `sup |K| |x-y|^{n-α}`.
    pub size: f64,
    /// `sup |∇K| |x-y|^{n-α+1}` by central differences.
    pub gradient: f64,
    /// `sup |∇K(x,y)-∇K(x',y)| |x-y|^{n-α+1} (|x-y|/|x-x'|)^{1/2}` over
    /// `|x-x'| <= |x-y|/2`. Only reported: the gradient jumps at `S`.
    pub holder: f64,
    /// One-sided derivative gaps of `ψ` at `δ` and at `R`.
    pub seam_gap_delta: f64,
    pub seam_gap_r: f64,
    pub samples: usize,
}

fn one_sided_derivatives(f: impl Fn(f64) -> f64, x: f64, h: f64) -> (f64, f64) {
    let left = (3.0 * f(x) - 4.0 * f(x - h) + f(x - 2.0 * h)) / (2.0 * h);
    let right = (-3.0 * f(x) + 4.0 * f(x + h) - f(x + 2.0 * h)) / (2.0 * h);
    (left, right)
}

/// One-sided second-order finite-difference derivative gap of `ψ` at `r0`.
pub fn seam_gap(spec: &KernelSpec, r0: f64) -> f64 {
    let (l, r) = one_sided_derivatives(|r| spec.psi(r), r0, 1e-6 * r0);
    (l - r).abs()
}

fn gradient(spec: &KernelSpec, w: &[f64], comp: usize) -> Vec<f64> {
    let r = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    let h = 1e-6 * r;
    let mut out = vec![0.0; spec.outputs()];
    (0..w.len())
        .map(|k| {
            let mut a = w.to_vec();
            let mut b = w.to_vec();
            a[k] += h;
            b[k] -= h;
            spec.eval_w(&a, &mut out);
            let fa = out[comp];
            spec.eval_w(&b, &mut out);
            (fa - out[comp]) / (2.0 * h)
        })
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Samples displacements with `|w|` log-uniform in `[δ/2, 2R]` and reports the
/// smallest constants consistent with the samples.
pub fn check_kernel_estimates(spec: &KernelSpec, samples: usize, seed: u64) -> KernelProbe {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.dim;
    let p = n as f64 - spec.alpha;
    let (lo, hi) = ((spec.trunc.delta / 2.0).ln(), (2.0 * spec.trunc.big_r).ln());
    let mut probe = KernelProbe {
        size: 0.0,
        gradient: 0.0,
        holder: 0.0,
        seam_gap_delta: seam_gap(spec, spec.trunc.delta),
        seam_gap_r: seam_gap(spec, spec.trunc.big_r),
        samples,
    };
    let mut out = vec![0.0; spec.outputs()];
    for _ in 0..samples {
        let r = rng.random_range(lo..hi).exp();
        let mut dir: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let d = norm(&dir).max(1e-12);
        dir.iter_mut().for_each(|x| *x *= r / d);
        spec.eval_w(&dir, &mut out);
        probe.size = probe.size.max(norm(&out) * r.powf(p));
        let t = rng.random_range(0.01..0.5) * r;
        let mut shift: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = norm(&shift).max(1e-12);
        shift.iter_mut().for_each(|x| *x *= t / s);
        let moved: Vec<f64> = dir.iter().zip(&shift).map(|(a, b)| a + b).collect();
        for c in 0..spec.outputs() {
            let g0 = gradient(spec, &dir, c);
            let g1 = gradient(spec, &moved, c);
            probe.gradient = probe.gradient.max(norm(&g0) * r.powf(p + 1.0));
            let diff: Vec<f64> = g0.iter().zip(&g1).map(|(a, b)| a - b).collect();
            probe.holder = probe
                .holder
                .max(norm(&diff) * r.powf(p + 1.0) * (r / t).sqrt());
        }
    }
    probe
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec1(delta: f64, big_r: f64) -> KernelSpec {
        KernelSpec::new(0.0, 1, Component::Scalar1d, Truncation::tangent(delta, big_r)).unwrap()
    }

    #[test]
    fn s_examples() {
        assert_eq!(tangent_s(0.0, 1, 1.0), 2.0);
        assert_eq!(tangent_s(1.0, 2, 1.0), 2.0);
        assert_eq!(tangent_s(0.0, 2, 1.0), 1.5);
    }

    #[test]
    fn psi_examples() {
        let s = spec1(0.5, 1.0);
        assert!((s.psi(0.75) - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.psi(1.5), 0.5);
        assert_eq!(s.psi(2.0), 0.0);
        assert_eq!(s.psi(3.0), 0.0);
        assert_eq!(s.psi(0.25), 3.0);
        assert_eq!(s.psi(0.0), 0.0);
    }

    #[test]
    fn kernel_examples() {
        let s = spec1(0.1, 4.0);
        let x = Point::from_f64(&[0.75]).unwrap();
        let y = Point::from_f64(&[0.25]).unwrap();
        assert_eq!(s.scalar(&x, &y), 2.0);
        assert_eq!(s.scalar(&y, &x), -2.0);
        assert_eq!(s.scalar(&x, &x), 0.0);

        let v = KernelSpec::new(0.0, 2, Component::Vector, Truncation::tangent(0.1, 4.0)).unwrap();
        let mut out = [0.0; 2];
        v.eval(
            &Point::from_f64(&[1.0, 0.0]).unwrap(),
            &Point::from_f64(&[0.0, 0.0]).unwrap(),
            &mut out,
        );
        assert_eq!(out, [1.0, 0.0]);
    }

    #[test]
    fn truncation_is_invisible_inside_window() {
        let t = spec1(0.1, 4.0);
        let mut u = t;
        u.trunc.style = TruncStyle::None;
        for w in [0.1, 0.3, -2.0, 3.99, 4.0] {
            assert_eq!(t.scalar_w(&[w]), u.scalar_w(&[w]));
        }
    }

    #[test]
    fn probes() {
        let mut untrunc = spec1(0.1, 4.0);
        untrunc.trunc.style = TruncStyle::None;
        let p = check_kernel_estimates(&untrunc, 2000, 1);
        assert!((p.size - 1.0).abs() < 1e-9);
        for (n, a) in [(1, 0.0), (2, 0.0), (2, 1.0), (2, 0.5)] {
            let s = KernelSpec::new(a, n, Component::Vector, Truncation::tangent(0.3, 2.0)).unwrap();
            let p = check_kernel_estimates(&s, 2000, 2);
            assert!(p.size <= 1.0 + 1e-12);
            assert!(p.seam_gap_delta < 1e-6, "{p:?}");
            assert!(p.seam_gap_r < 1e-6, "{p:?}");
            assert!(p.gradient.is_finite());
        }
    }

    #[test]
    fn vanishes_before_s() {
        let s = spec1(0.5, 1.0);
        assert!(s.psi(s.s() - 1e-9) < 1e-6 * s.psi(1.0));
    }

    #[test]
    fn validation() {
        assert!(KernelSpec::new(1.0, 1, Component::Scalar1d, Truncation::tangent(0.1, 1.0)).is_err());
        assert!(KernelSpec::new(0.0, 1, Component::Scalar1d, Truncation::tangent(1.0, 1.0)).is_err());
        assert!(KernelSpec::new(0.0, 2, Component::Index(3), Truncation::tangent(0.1, 1.0)).is_err());
        assert!(KernelSpec::new(0.0, 2, Component::Scalar1d, Truncation::tangent(0.1, 1.0)).is_err());
    }
}
