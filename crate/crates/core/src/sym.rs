//! Symmetric-group enumeration and Weingarten calculus over `alpha` replicas.
//!
//! Permutations act on replica labels `0..alpha`. Overlaps between permutation
//! states on a `q`-dimensional space are `q^{#cycles(pi^-1 sigma)}`; the
//! Weingarten matrix is the pseudo-inverse of that Gram matrix.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{invalid, Error, Result};

pub const MIN_ALPHA: usize = 2;
pub const MAX_ALPHA: usize = 6;

/// Relative eigenvalue cutoff used by the pseudo-inverse.
pub const PINV_CUTOFF: f64 = 1e-12;

/// A permutation of `0..alpha` in one-line notation: `images[i]` is the image of `i`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let alpha = images.len();
        let mut seen = vec![false; alpha];
        for &i in &images {
            if i >= alpha || seen[i] {
                return invalid(format!("{images:?} is not a bijection on 0..{alpha}"));
            }
            seen[i] = true;
        }
        Ok(Self { images })
    }

    pub fn identity(alpha: usize) -> Self {
        Self { images: (0..alpha).collect() }
    }

    /// The cyclic shift `i -> i + 1 (mod alpha)`, i.e. `(2 3 ... alpha 1)` in
    /// one-based one-line notation. For `alpha = 2` this is the swap.
    pub fn full_cycle(alpha: usize) -> Self {
        Self { images: (0..alpha).map(|i| (i + 1) % alpha).collect() }
    }

    pub fn alpha(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Self) -> Self {
        debug_assert_eq!(self.alpha(), other.alpha());
        Self { images: other.images.iter().map(|&i| self.images[i]).collect() }
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.alpha()];
        for (i, &j) in self.images.iter().enumerate() {
            inv[j] = i;
        }
        Self { images: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &j)| i == j)
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation{:?}", self.images)
    }
}

/// Returns `(cycle_count, fixed_points)`; 1-cycles count towards both.
pub fn cycles(p: &Permutation) -> (usize, usize) {
    let alpha = p.alpha();
    let mut visited = vec![false; alpha];
    let mut count = 0;
    let mut fixed = 0;
    for start in 0..alpha {
        if visited[start] {
            continue;
        }
        count += 1;
        let mut len = 0;
        let mut i = start;
        while !visited[i] {
            visited[i] = true;
            i = p.apply(i);
            len += 1;
        }
        if len == 1 {
            fixed += 1;
        }
    }
    (count, fixed)
}

/// All `alpha!` permutations with cached cycle data and composition table.
///
/// Elements are listed in lexicographic order of their one-line notation, so
/// the identity is element `0`.
#[derive(Clone, Debug)]
pub struct SymmetricGroup {
    alpha: usize,
    elements: Vec<Permutation>,
    cycle_counts: Vec<usize>,
    fixed_points: Vec<usize>,
    inverse: Vec<usize>,
    compose: Vec<usize>,
    full_cycle: usize,
}

impl SymmetricGroup {
    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Permutation] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &Permutation {
        &self.elements[i]
    }

    pub fn identity(&self) -> usize {
        0
    }

    /// Index of the canonical full cycle `i -> i + 1`.
    pub fn full_cycle(&self) -> usize {
        self.full_cycle
    }

    pub fn cycle_count(&self, i: usize) -> usize {
        self.cycle_counts[i]
    }

    pub fn fixed_points(&self, i: usize) -> usize {
        self.fixed_points[i]
    }

    pub fn inverse(&self, i: usize) -> usize {
        self.inverse[i]
    }

    /// Index of `elements[a] ∘ elements[b]`.
    pub fn compose(&self, a: usize, b: usize) -> usize {
        self.compose[a * self.order() + b]
    }

    /// `#cycles(pi^-1 sigma)` by index.
    pub fn relative_cycles(&self, pi: usize, sigma: usize) -> usize {
        self.cycle_counts[self.compose(self.inverse[pi], sigma)]
    }

    pub fn index_of(&self, p: &Permutation) -> Option<usize> {
        self.elements.binary_search(p).ok()
    }
}

/// Enumerates `S_alpha` for `2 <= alpha <= 6`.
pub fn enumerate_group(alpha: usize) -> Result<SymmetricGroup> {
    if !(MIN_ALPHA..=MAX_ALPHA).contains(&alpha) {
        return invalid(format!("alpha = {alpha} outside {MIN_ALPHA}..={MAX_ALPHA}"));
    }
    let mut elements = Vec::new();
    let mut current: Vec<usize> = (0..alpha).collect();
    loop {
        elements.push(Permutation { images: current.clone() });
        if !next_permutation(&mut current) {
            break;
        }
    }
    let order = elements.len();
    let (cycle_counts, fixed_points): (Vec<_>, Vec<_>) = elements.iter().map(cycles).unzip();
    let index = |p: &Permutation| elements.binary_search(p).expect("closed under composition");
    let inverse = elements.iter().map(|p| index(&p.inverse())).collect();
    let mut compose = Vec::with_capacity(order * order);
    for a in &elements {
        for b in &elements {
            compose.push(index(&a.compose(b)));
        }
    }
    let full_cycle = index(&Permutation::full_cycle(alpha));
    Ok(SymmetricGroup { alpha, elements, cycle_counts, fixed_points, inverse, compose, full_cycle })
}

fn next_permutation(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Which boundary/channel configuration an overlap matrix was evaluated for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OverlapKind {
    Clean,
    NoisyAllReplicas,
    NoisyOneReplica,
    /// Channel on an arbitrary proper subset of replicas.
    NoisySubset,
}

/// `entries[pi][sigma] = <<pi| X |sigma>>` for permutation states of one site.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapMatrix {
    pub entries: DMatrix<f64>,
    pub dim_q: usize,
    pub kind: OverlapKind,
}

impl OverlapMatrix {
    pub fn get(&self, pi: usize, sigma: usize) -> f64 {
        self.entries[(pi, sigma)]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeingartenMatrix {
    pub entries: DMatrix<f64>,
    pub dim_q: u64,
}

impl WeingartenMatrix {
    pub fn get(&self, pi: usize, sigma: usize) -> f64 {
        self.entries[(pi, sigma)]
    }
}

/// Exact integer Gram entries `q^{#cycles(pi^-1 sigma)}`.
pub fn gram_exact(q: u64, group: &SymmetricGroup) -> Result<Vec<u128>> {
    let order = group.order();
    let mut out = Vec::with_capacity(order * order);
    for pi in 0..order {
        for sigma in 0..order {
            let c = group.relative_cycles(pi, sigma) as u32;
            let v = (q as u128)
                .checked_pow(c)
                .ok_or_else(|| Error::InvalidInput(format!("q^{c} overflows for q = {q}")))?;
            out.push(v);
        }
    }
    Ok(out)
}

fn gram_matrix(q: u64, group: &SymmetricGroup) -> Result<DMatrix<f64>> {
    let order = group.order();
    let exact = gram_exact(q, group)?;
    Ok(DMatrix::from_fn(order, order, |i, j| exact[i * order + j] as f64))
}

/// Clean overlap matrix of permutation states on a `q`-dimensional space.
pub fn gram(q: usize, alpha: usize) -> Result<OverlapMatrix> {
    if q < 2 {
        return invalid(format!("local dimension q = {q} must be at least 2"));
    }
    let group = enumerate_group(alpha)?;
    Ok(OverlapMatrix { entries: gram_matrix(q as u64, &group)?, dim_q: q, kind: OverlapKind::Clean })
}

/// Moore–Penrose pseudo-inverse of `gram(q, alpha)`.
pub fn weingarten(q: u64, alpha: usize) -> Result<WeingartenMatrix> {
    let group = enumerate_group(alpha)?;
    weingarten_for(q, &group)
}

pub fn weingarten_for(q: u64, group: &SymmetricGroup) -> Result<WeingartenMatrix> {
    if q < 2 {
        return invalid(format!("q = {q} must be at least 2"));
    }
    let g = gram_matrix(q, group)?;
    Ok(WeingartenMatrix { entries: symmetric_pinv(&g)?, dim_q: q })
}

/// Pseudo-inverse of a symmetric positive semidefinite matrix by eigendecomposition.
pub fn symmetric_pinv(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.iter().fold(0.0_f64, |acc, &v| acc.max(v.abs()));
    if max == 0.0 || !max.is_finite() {
        return Err(Error::Numerical("pseudo-inverse of a zero or non-finite matrix".into()));
    }
    let cutoff = PINV_CUTOFF * max;
    let mut out = DMatrix::<f64>::zeros(n, n);
    let mut rank = 0;
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() <= cutoff {
            continue;
        }
        rank += 1;
        let v = eig.eigenvectors.column(k);
        out += (v * v.transpose()) / lambda;
    }
    if rank == 0 {
        return Err(Error::Numerical("pseudo-inverse has rank 0".into()));
    }
    // Symmetrize away rounding asymmetry from the outer products.
    Ok((&out + out.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn s2_is_identity_then_swap() {
        let g = enumerate_group(2).unwrap();
        assert_eq!(g.order(), 2);
        assert!(g.element(0).is_identity());
        assert_eq!(g.element(g.full_cycle()).images(), &[1, 0]);
    }

    #[test]
    fn s3_fixed_point_census() {
        let g = enumerate_group(3).unwrap();
        assert_eq!(g.order(), 6);
        let count = |nf| (0..6).filter(|&i| g.fixed_points(i) == nf).count();
        assert_eq!(count(3), 1);
        assert_eq!(count(1), 3);
        assert_eq!(count(0), 2);
        assert_eq!(enumerate_group(4).unwrap().order(), 24);
        assert_eq!(enumerate_group(6).unwrap().order(), 720);
    }

    #[test]
    fn alpha_out_of_range_is_rejected() {
        assert!(enumerate_group(1).is_err());
        assert!(enumerate_group(7).is_err());
    }

    #[test]
    fn cycle_examples() {
        assert_eq!(cycles(&Permutation::identity(3)), (3, 3));
        assert_eq!(cycles(&Permutation::new(vec![1, 0, 2]).unwrap()), (2, 1));
        assert_eq!(cycles(&Permutation::new(vec![1, 2, 0]).unwrap()), (1, 0));
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
    }

    #[test]
    fn gram_alpha2() {
        let g = gram(2, 2).unwrap();
        assert_eq!(g.entries, DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 4.0]));
        let g = gram(4, 2).unwrap();
        assert_eq!(g.entries, DMatrix::from_row_slice(2, 2, &[16.0, 4.0, 4.0, 16.0]));
    }

    /// Brute-force oracle: act with both permutations on explicit index strings
    /// and count the orbits of `pi^-1 sigma` by following images.
    #[test]
    fn gram_alpha3_matches_brute_force_cycle_count() {
        let group = enumerate_group(3).unwrap();
        let g = gram(2, 3).unwrap();
        for (i, pi) in group.elements().iter().enumerate() {
            for (j, sigma) in group.elements().iter().enumerate() {
                let rel: Vec<usize> = (0..3).map(|x| pi.inverse().apply(sigma.apply(x))).collect();
                let mut orbits = 0;
                let mut seen = [false; 3];
                for s in 0..3 {
                    if !seen[s] {
                        orbits += 1;
                        let mut x = s;
                        while !seen[x] {
                            seen[x] = true;
                            x = rel[x];
                        }
                    }
                }
                assert_eq!(g.get(i, j), 2f64.powi(orbits));
            }
            assert_eq!(g.get(i, i), 8.0);
        }
        assert!(g.entries.iter().all(|&x| x == 8.0 || x == 4.0 || x == 2.0));
    }

    #[test]
    fn weingarten_alpha2_closed_forms() {
        let wg = weingarten(2, 2).unwrap();
        assert!(close(wg.get(0, 0), 1.0 / 3.0, 1e-14));
        assert!(close(wg.get(0, 1), -1.0 / 6.0, 1e-14));
        let wg = weingarten(4, 2).unwrap();
        assert!(close(wg.get(0, 0), 1.0 / 15.0, 1e-15));
        assert!(close(wg.get(1, 0), -1.0 / 60.0, 1e-15));
        for q in 2..12u64 {
            let wg = weingarten(q, 2).unwrap();
            let qf = q as f64;
            assert!(close(wg.get(0, 0), 1.0 / (qf * qf - 1.0), 1e-13));
            assert!(close(wg.get(0, 1), -1.0 / (qf * (qf * qf - 1.0)), 1e-13));
        }
    }

    #[test]
    fn weingarten_is_gram_inverse_on_row_space() {
        for alpha in 2..=4 {
            let group = enumerate_group(alpha).unwrap();
            for q in 2..=5u64 {
                let g = gram_matrix(q, &group).unwrap();
                let wg = weingarten_for(q, &group).unwrap().entries;
                // Projector identities hold for the pseudo-inverse even when q < alpha.
                let gwg = &g * &wg * &g;
                let dev = (&gwg - &g).abs().max() / g.abs().max();
                assert!(dev < 1e-10, "alpha={alpha} q={q} dev={dev}");
                assert!((&wg - wg.transpose()).abs().max() < 1e-14);
            }
        }
    }

    #[test]
    fn singular_gram_uses_pseudo_inverse() {
        // q = 2 < alpha = 3: the Gram matrix has rank 5.
        let group = enumerate_group(3).unwrap();
        let g = gram_matrix(2, &group).unwrap();
        let rank = SymmetricEigen::new(g.clone()).eigenvalues.iter().filter(|v| v.abs() > 1e-9).count();
        assert_eq!(rank, 5);
        let wg = weingarten_for(2, &group).unwrap().entries;
        let p = &wg * &g;
        assert!((&p * &p - &p).abs().max() < 1e-10);
    }

    #[test]
    fn gram_depends_only_on_cycle_type() {
        let group = enumerate_group(4).unwrap();
        let g = gram(3, 4).unwrap();
        for pi in 0..group.order() {
            for sigma in 0..group.order() {
                let tau = group.compose(group.inverse(pi), sigma);
                // Conjugating by any rho keeps the cycle type of pi^-1 sigma.
                for rho in 0..group.order() {
                    let a = group.compose(group.compose(rho, pi), group.inverse(rho));
                    let b = group.compose(group.compose(rho, sigma), group.inverse(rho));
                    assert_eq!(g.get(pi, sigma), g.get(a, b));
                }
                assert_eq!(g.get(pi, sigma), 3f64.powi(group.cycle_count(tau) as i32));
            }
        }
    }
}
