//! Poisson integrals and the `A₂` family.

use super::{center_dist, fractional_volume, sup_by, CubeFamily, Sup, Witness};
use crate::error::{Error, Result};
use crate::exec::{CompensatedSum, Exec};
use crate::geometry::Cube;
use crate::measures::{common_points, AtomicMeasure};

fn poisson_sum(q: &Cube, mu: &AtomicMeasure, outside_only: bool, term: impl Fn(f64, f64) -> f64) -> f64 {
    let l = q.side();
    let mut acc = CompensatedSum::new();
    for a in mu.atoms() {
        if outside_only && q.contains(&a.point) {
            continue;
        }
        acc.add(a.mass * term(l, center_dist(q, &a.point)));
    }
    acc.value()
}

fn standard_term(n: f64, alpha: f64) -> impl Fn(f64, f64) -> f64 {
    move |l, d| l / (l + d).powf(n + 1.0 - alpha)
}

fn repro_term(n: f64, alpha: f64) -> impl Fn(f64, f64) -> f64 {
    move |l, d| (l / ((l + d) * (l + d))).powf(n - alpha)
}

/// `P^α(Q, μ) = Σ m |Q|^{1/n} / (|Q|^{1/n} + |x - x_Q|)^{n+1-α}`.
pub fn poisson_standard(q: &Cube, mu: &AtomicMeasure, alpha: f64) -> f64 {
    poisson_sum(q, mu, false, standard_term(q.dim() as f64, alpha))
}

/// `𝒫^α(Q, μ) = Σ m (|Q|^{1/n} / (|Q|^{1/n} + |x - x_Q|)²)^{n-α}`.
pub fn poisson_repro(q: &Cube, mu: &AtomicMeasure, alpha: f64) -> f64 {
    poisson_sum(q, mu, false, repro_term(q.dim() as f64, alpha))
}

pub(crate) fn poisson_standard_on(q: &Cube, mu: &AtomicMeasure, idx: &[usize], alpha: f64) -> f64 {
    let t = standard_term(q.dim() as f64, alpha);
    let l = q.side();
    let atoms = mu.atoms();
    crate::exec::compensated_sum(idx.iter().map(|&i| atoms[i].mass * t(l, center_dist(q, &atoms[i].point))))
}

fn repro_outside(q: &Cube, mu: &AtomicMeasure, alpha: f64) -> f64 {
    poisson_sum(q, mu, true, repro_term(q.dim() as f64, alpha))
}

/// Offset `A₂`: the sup over neighbour pairs of
/// `|Q|_σ |Q'|_ω / |Q|^{2(1-α/n)}`.
pub fn offset_a2(_sigma: &AtomicMeasure, _omega: &AtomicMeasure, alpha: f64, family: &CubeFamily, exec: Exec) -> Result<Sup> {
    let pairs = family.neighbour_pairs();
    if pairs.is_empty() {
        return Err(Error::NoQualifyingPairs);
    }
    let cubes = family.cubes();
    Ok(sup_by(
        exec,
        pairs.len(),
        |p| {
            let (i, _, j) = pairs[p];
            let q = &cubes[i];
            let wq = j.map_or(0.0, |j| cubes[j].omega_mass);
            let v = fractional_volume(&q.cube, alpha);
            (q.sigma_mass / v) * (wq / v)
        },
        |p| Witness::Pair {
            first: cubes[pairs[p].0].cube,
            second: pairs[p].1,
        },
    ))
}

fn one_tailed(tail: &AtomicMeasure, alpha: f64, family: &CubeFamily, local: impl Fn(usize) -> f64 + Sync + Send, exec: Exec) -> Sup {
    let cubes = family.cubes();
    sup_by(
        exec,
        cubes.len(),
        |i| {
            let m = local(i);
            if m <= 0.0 {
                return 0.0;
            }
            let q = &cubes[i].cube;
            repro_outside(q, tail, alpha) * m / fractional_volume(q, alpha)
        },
        |i| Witness::Cube { cube: cubes[i].cube },
    )
}

/// `𝒜₂ = sup_Q 𝒫^α(Q, 1_{Q^c} σ) |Q|_ω / |Q|^{1-α/n}`.
pub fn one_tailed_a2(sigma: &AtomicMeasure, _omega: &AtomicMeasure, alpha: f64, family: &CubeFamily, exec: Exec) -> Sup {
    let c = family.cubes();
    one_tailed(sigma, alpha, family, |i| c[i].omega_mass, exec)
}

/// `𝒜₂* = sup_Q 𝒫^α(Q, 1_{Q^c} ω) |Q|_σ / |Q|^{1-α/n}`.
pub fn one_tailed_a2_star(_sigma: &AtomicMeasure, omega: &AtomicMeasure, alpha: f64, family: &CubeFamily, exec: Exec) -> Sup {
    let c = family.cubes();
    one_tailed(omega, alpha, family, |i| c[i].sigma_mass, exec)
}

fn punctured(sigma: &AtomicMeasure, omega: &AtomicMeasure, alpha: f64, family: &CubeFamily, star: bool, exec: Exec) -> Sup {
    let p = common_points(sigma, omega);
    let cubes = family.cubes();
    sup_by(
        exec,
        cubes.len(),
        |i| {
            let fc = &cubes[i];
            let (holed, plain) = if star {
                (sigma.punctured_mass(&fc.cube, &p), fc.omega_mass)
            } else {
                (omega.punctured_mass(&fc.cube, &p), fc.sigma_mass)
            };
            let v = fractional_volume(&fc.cube, alpha);
            (holed / v) * (plain / v)
        },
        |i| Witness::Cube { cube: cubes[i].cube },
    )
}

/// `sup_Q ω(Q, P) |Q|_σ / |Q|^{2(1-α/n)}` with `P` the common atoms.
pub fn punctured_a2(sigma: &AtomicMeasure, omega: &AtomicMeasure, alpha: f64, family: &CubeFamily, exec: Exec) -> Sup {
    punctured(sigma, omega, alpha, family, false, exec)
}

pub fn punctured_a2_star(sigma: &AtomicMeasure, omega: &AtomicMeasure, alpha: f64, family: &CubeFamily, exec: Exec) -> Sup {
    punctured(sigma, omega, alpha, family, true, exec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{FamilySpec, GridSelection};

    fn m(x: &[(f64, f64)]) -> AtomicMeasure {
        let v: Vec<([f64; 1], f64)> = x.iter().map(|&(p, w)| ([p], w)).collect();
        let r: Vec<(&[f64], f64)> = v.iter().map(|(p, w)| (&p[..], *w)).collect();
        AtomicMeasure::from_f64(1, &r).unwrap()
    }

    #[test]
    fn poisson_examples() {
        let q = Cube::unit(1);
        assert_eq!(poisson_standard(&q, &m(&[(0.5, 1.0)]), 0.0), 1.0);
        assert_eq!(poisson_repro(&q, &m(&[(0.5, 1.0)]), 0.0), 1.0);
        assert_eq!(poisson_standard(&q, &m(&[(1.5, 1.0)]), 0.0), 0.25);
        assert_eq!(poisson_standard(&q, &m(&[]), 0.0), 0.0);
        let mu = m(&[(0.1, 0.5), (3.0, 2.0), (-1.25, 1.0)]);
        assert!((poisson_standard(&q, &mu, 0.0) - poisson_repro(&q, &mu, 0.0)).abs() < 1e-15);
    }

    #[test]
    fn offset_single_atoms() {
        let (s, w) = (m(&[(0.25, 1.0)]), m(&[(0.75, 1.0)]));
        let f = CubeFamily::build(&s, &w, &FamilySpec::new(6, -1, GridSelection::Enumerate)).unwrap();
        let r = offset_a2(&s, &w, 0.0, &f, Exec::default()).unwrap();
        assert_eq!(r.value, 4.0);
        match r.witness {
            Witness::Pair { first, second } => {
                assert_eq!(first.side(), 0.5);
                assert_eq!(second.side(), 0.5);
            }
            _ => panic!(),
        }
        let (s2, w2) = (s.scaled(2.0).unwrap(), w.scaled(2.0).unwrap());
        let f2 = CubeFamily::build(&s2, &w2, &FamilySpec::new(6, -1, GridSelection::Enumerate)).unwrap();
        assert_eq!(offset_a2(&s2, &w2, 0.0, &f2, Exec::default()).unwrap().value, 16.0);
        let z = m(&[]);
        let fz = CubeFamily::build(&z, &w, &FamilySpec::new(6, -1, GridSelection::Standard)).unwrap();
        assert_eq!(offset_a2(&z, &w, 0.0, &fz, Exec::default()).unwrap().value, 0.0);
    }

    #[test]
    fn one_tailed_example() {
        let (s, w) = (m(&[(1.5, 1.0)]), m(&[(0.5, 1.0)]));
        let f = CubeFamily::from_cubes(&s, &w, vec![crate::geometry::DyadicGrid::standard(1, 4, 0).unwrap()], [Cube::unit(1)]).unwrap();
        assert_eq!(one_tailed_a2(&s, &w, 0.0, &f, Exec::Sequential).value, 0.25);
        // A common atom never sees itself through the tail.
        let c = m(&[(0.25, 1.0)]);
        let fc = CubeFamily::build(&c, &c, &FamilySpec::new(4, 0, GridSelection::Standard)).unwrap();
        assert_eq!(one_tailed_a2(&c, &c, 0.0, &fc, Exec::Sequential).value, 0.0);
        assert_eq!(one_tailed_a2(&m(&[]), &w, 0.0, &f, Exec::Sequential).value, 0.0);
    }

    #[test]
    fn punctured_examples() {
        let spec = FamilySpec::new(4, 0, GridSelection::Standard);
        let a = m(&[(0.5, 1.0)]);
        let fa = CubeFamily::build(&a, &a, &spec).unwrap();
        assert_eq!(punctured_a2(&a, &a, 0.0, &fa, Exec::Sequential).value, 0.0);
        let w = m(&[(0.5, 1.0), (0.75, 1.0)]);
        let f = CubeFamily::build(&a, &w, &spec).unwrap();
        let r = punctured_a2(&a, &w, 0.0, &f, Exec::Sequential);
        assert_eq!(r.value, 4.0);
        assert_eq!(r.witness, Witness::Cube { cube: Cube::from_f64(&[0.5], 0.5).unwrap() });
    }
}
