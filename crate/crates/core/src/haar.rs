//! Weighted Haar bases adapted to an atomic measure on a dyadic grid.
//!
//! Each node carries an orthonormal basis of the functions on its cube that
//! are constant on children and have mean zero. Functions are stored by
//! their value on each charged child.

use crate::error::{Error, Result};
use crate::exec::{compensated_sum, CompensatedSum};
use crate::geometry::{Cube, DyadicGrid};
use crate::measures::AtomicMeasure;
use std::collections::HashMap;

/// Element of `L²(μ)`, indexed like the atoms of `μ`.
pub type MuFunction = Vec<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct ChargedChild {
    pub cube: Cube,
    pub mass: f64,
    /// Indices into the atoms of `μ`.
    pub atoms: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HaarNode {
    pub cube: Cube,
    pub mass: f64,
    /// Children of positive mass, lexicographic.
    pub children: Vec<ChargedChild>,
    /// `functions[a][c]`: value of the `a`-th function on child `c`.
    pub functions: Vec<Vec<f64>>,
}

impl HaarNode {
    pub fn atoms(&self) -> impl Iterator<Item = usize> + '_ {
        self.children.iter().flat_map(|c| c.atoms.iter().copied())
    }

    /// Mean of `f` over each charged child.
    pub fn child_means(&self, mu: &AtomicMeasure, f: &[f64]) -> Vec<f64> {
        self.children
            .iter()
            .map(|c| child_integral(mu, f, c) / c.mass)
            .collect()
    }
}

fn child_integral(mu: &AtomicMeasure, f: &[f64], c: &ChargedChild) -> f64 {
    let atoms = mu.atoms();
    compensated_sum(c.atoms.iter().map(|&i| atoms[i].mass * f[i]))
}

#[derive(Debug, Clone)]
pub struct HaarBasis {
    grid: DyadicGrid,
    mu: AtomicMeasure,
    roots: Vec<Cube>,
    nodes: Vec<HaarNode>,
    index: HashMap<Cube, usize>,
}

/// Orthonormal basis of the mean-zero child-constant functions by
/// Gram-Schmidt on `1_{Q_i} - (m_i/m_Q) 1_Q`; the first nonzero value of each
/// function is made negative.
fn node_functions(masses: &[f64]) -> Vec<Vec<f64>> {
    let k = masses.len();
    let total: f64 = compensated_sum(masses.iter().copied());
    let ip = |u: &[f64], v: &[f64]| compensated_sum((0..k).map(|c| masses[c] * u[c] * v[c]));
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(k.saturating_sub(1));
    for i in 0..k.saturating_sub(1) {
        let mut v: Vec<f64> = (0..k)
            .map(|c| (if c == i { 1.0 } else { 0.0 }) - masses[i] / total)
            .collect();
        // Two passes of modified Gram-Schmidt.
        for _ in 0..2 {
            for h in &out {
                let t = ip(&v, h);
                for c in 0..k {
                    v[c] -= t * h[c];
                }
            }
            // Mean zero, re-imposed against drift.
            let mean = compensated_sum((0..k).map(|c| masses[c] * v[c])) / total;
            v.iter_mut().for_each(|x| *x -= mean);
        }
        let nrm = ip(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= nrm);
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-14 * nrm.max(1.0)) {
            if *first > 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        out.push(v);
    }
    out
}

impl HaarBasis {
    /// Basis on the grid cubes inside `root`.
    pub fn build(grid: &DyadicGrid, mu: &AtomicMeasure, root: &Cube) -> Result<Self> {
        if !grid.contains_cube(root) {
            return Err(Error::NotAGridCube(root.to_string()));
        }
        if let Some(a) = mu.atoms().iter().find(|a| !root.contains(&a.point)) {
            return Err(Error::AtomOutsideRoot(a.point.to_string()));
        }
        Self::build_roots(grid, mu, vec![*root])
    }

    /// Basis over every top-level grid cube carrying mass.
    pub fn build_forest(grid: &DyadicGrid, mu: &AtomicMeasure) -> Result<Self> {
        let mut roots: Vec<Cube> = mu
            .points()
            .map(|p| grid.cube_containing(p, grid.top()))
            .collect();
        roots.sort();
        roots.dedup();
        Self::build_roots(grid, mu, roots)
    }

    fn build_roots(grid: &DyadicGrid, mu: &AtomicMeasure, roots: Vec<Cube>) -> Result<Self> {
        if mu.dim() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                got: mu.dim(),
            });
        }
        let mut nodes = Vec::new();
        for root in &roots {
            let atoms: Vec<usize> = mu.indices_in(root).collect();
            build_node(grid, mu, *root, atoms, &mut nodes)?;
        }
        let index = nodes.iter().enumerate().map(|(i, n)| (n.cube, i)).collect();
        Ok(HaarBasis {
            grid: *grid,
            mu: mu.clone(),
            roots,
            nodes,
            index,
        })
    }

    pub fn grid(&self) -> &DyadicGrid {
        &self.grid
    }

    pub fn measure(&self) -> &AtomicMeasure {
        &self.mu
    }

    pub fn roots(&self) -> &[Cube] {
        &self.roots
    }

    /// Nodes in top-down depth-first order.
    pub fn nodes(&self) -> &[HaarNode] {
        &self.nodes
    }

    pub fn node(&self, q: &Cube) -> Option<&HaarNode> {
        self.index.get(q).map(|&i| &self.nodes[i])
    }

    pub fn node_index(&self, q: &Cube) -> Option<usize> {
        self.index.get(q).copied()
    }

    /// Number of basis functions.
    pub fn len(&self) -> usize {
        self.nodes.iter().map(|n| n.functions.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `E_Q^μ f`.
    pub fn avg(&self, f: &[f64], q: &Cube) -> Result<f64> {
        avg(&self.mu, f, q)
    }

    /// `⟨f, h_Q^a⟩_μ` for every `a`; empty if `Q` is not a node.
    pub fn coeffs(&self, f: &[f64], q: &Cube) -> Vec<f64> {
        match self.node(q) {
            Some(n) => node_coeffs(&self.mu, n, f),
            None => Vec::new(),
        }
    }

    pub fn coeff(&self, f: &[f64], q: &Cube, a: usize) -> Result<f64> {
        self.coeffs(f, q).get(a).copied().ok_or_else(|| {
            Error::InvalidParameter(format!("no Haar function {a} on {q}"))
        })
    }

    /// `h_Q^a` as a function on all atoms.
    pub fn function(&self, q: &Cube, a: usize) -> Option<MuFunction> {
        let n = self.node(q)?;
        let h = n.functions.get(a)?;
        let mut out = vec![0.0; self.mu.len()];
        for (c, child) in n.children.iter().enumerate() {
            for &i in &child.atoms {
                out[i] = h[c];
            }
        }
        Some(out)
    }

    /// `Δ_Q^μ f`.
    pub fn delta(&self, f: &[f64], q: &Cube) -> MuFunction {
        let mut out = vec![0.0; self.mu.len()];
        if let Some(n) = self.node(q) {
            add_delta(&self.mu, n, f, &mut out);
        }
        out
    }

    /// `P_K^μ f = Σ_{J ⊆ K} Δ_J^μ f`.
    pub fn project(&self, f: &[f64], k: &Cube) -> MuFunction {
        let mut out = vec![0.0; self.mu.len()];
        for n in self.nodes.iter().filter(|n| k.contains_cube(&n.cube)) {
            add_delta(&self.mu, n, f, &mut out);
        }
        out
    }

    /// `Σ_Q Σ_a |⟨f, h_Q^a⟩|²` over nodes inside `k` (all nodes if `None`).
    pub fn coefficient_energy(&self, f: &[f64], k: Option<&Cube>) -> f64 {
        let mut acc = CompensatedSum::new();
        for n in &self.nodes {
            if k.is_none_or(|k| k.contains_cube(&n.cube)) {
                for c in node_coeffs(&self.mu, n, f) {
                    acc.add(c * c);
                }
            }
        }
        acc.value()
    }

    /// `Σ_{J' ⊆ J} Σ_a Σ_k |⟨x_k, h_{J'}^a⟩|²`.
    pub fn coordinate_energy_haar(&self, j: &Cube) -> f64 {
        (0..self.mu.dim())
            .map(|k| {
                let x: Vec<f64> = self.mu.points().map(|p| p.coord(k)).collect();
                self.coefficient_energy(&x, Some(j))
            })
            .sum()
    }
}

fn build_node(
    grid: &DyadicGrid,
    mu: &AtomicMeasure,
    q: Cube,
    atoms: Vec<usize>,
    nodes: &mut Vec<HaarNode>,
) -> Result<()> {
    if atoms.len() < 2 {
        return Ok(());
    }
    if q.level() >= grid.fine() {
        return Err(Error::DepthInsufficient(q.to_string()));
    }
    let pts = mu.atoms();
    let children: Vec<ChargedChild> = q
        .children()
        .into_iter()
        .filter_map(|c| {
            let a: Vec<usize> = atoms
                .iter()
                .copied()
                .filter(|&i| c.contains(&pts[i].point))
                .collect();
            (!a.is_empty()).then(|| ChargedChild {
                cube: c,
                mass: compensated_sum(a.iter().map(|&i| pts[i].mass)),
                atoms: a,
            })
        })
        .collect();
    if children.len() >= 2 {
        let masses: Vec<f64> = children.iter().map(|c| c.mass).collect();
        nodes.push(HaarNode {
            cube: q,
            mass: compensated_sum(masses.iter().copied()),
            functions: node_functions(&masses),
            children: children.clone(),
        });
    }
    for c in children {
        build_node(grid, mu, c.cube, c.atoms, nodes)?;
    }
    Ok(())
}

fn node_coeffs(mu: &AtomicMeasure, n: &HaarNode, f: &[f64]) -> Vec<f64> {
    let integrals: Vec<f64> = n.children.iter().map(|c| child_integral(mu, f, c)).collect();
    n.functions
        .iter()
        .map(|h| compensated_sum(h.iter().zip(&integrals).map(|(a, b)| a * b)))
        .collect()
}

fn add_delta(mu: &AtomicMeasure, n: &HaarNode, f: &[f64], out: &mut [f64]) {
    let coeffs = node_coeffs(mu, n, f);
    for (c, child) in n.children.iter().enumerate() {
        let v: f64 = coeffs
            .iter()
            .zip(&n.functions)
            .map(|(a, h)| a * h[c])
            .sum();
        for &i in &child.atoms {
            out[i] += v;
        }
    }
}

/// `E_Q^μ f`.
pub fn avg(mu: &AtomicMeasure, f: &[f64], q: &Cube) -> Result<f64> {
    let m = mu.mass(q);
    if m <= 0.0 {
        return Err(Error::NullCube(q.to_string()));
    }
    let atoms = mu.atoms();
    Ok(compensated_sum(mu.indices_in(q).map(|i| atoms[i].mass * f[i])) / m)
}

/// `‖P_J^ω x‖²` in closed form: the `ω`-variance of the position in `J`.
pub fn coordinate_energy(omega: &AtomicMeasure, j: &Cube) -> f64 {
    let atoms: Vec<_> = omega.atoms_in(j).collect();
    if atoms.len() < 2 {
        return 0.0;
    }
    let m = compensated_sum(atoms.iter().map(|a| a.mass));
    let mut acc = CompensatedSum::new();
    for k in 0..omega.dim() {
        // Center at the cube corner to keep the subtraction small.
        let base = j.lo(k);
        let rel = |a: &&crate::measures::Atom| crate::geometry::units_to_f64(a.point.unit(k) - base);
        let bary = compensated_sum(atoms.iter().map(|a| a.mass * rel(a))) / m;
        for a in &atoms {
            let d = rel(a) - bary;
            acc.add(a.mass * d * d);
        }
    }
    acc.value()
}
