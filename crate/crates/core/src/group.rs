//! The structure groups: S_n, the torus 𝕋ⁿ, and the unitary normalizers of
//! the diagonal, 𝒰(N_{D_n}) ≅ 𝕋ⁿ ⋊ S_n.

use crate::linalg::{C64, CMat};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GroupError {
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),
    #[error("images do not form a bijection on 1..{0}")]
    NotBijective(usize),
    #[error("phase {index} has modulus {modulus}, not 1")]
    NotUnimodular { index: usize, modulus: f64 },
    #[error("matrix is not a diagonal-times-permutation unitary")]
    NotMonomial,
}

/// A permutation of {0, .., n-1}, stored as the image list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation { images: (0..n).collect() }
    }

    pub fn new(images: Vec<usize>) -> Result<Self, GroupError> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &img in &images {
            if img >= n || seen[img] {
                return Err(GroupError::NotBijective(n));
            }
            seen[img] = true;
        }
        Ok(Permutation { images })
    }

    /// The transposition (a b) in S_n.
    pub fn transposition(n: usize, a: usize, b: usize) -> Self {
        let mut images: Vec<usize> = (0..n).collect();
        images.swap(a, b);
        Permutation { images }
    }

    /// A permutation with the given cycle type, on consecutive indices.
    /// `[3, 2]` in degree 5 gives (0 1 2)(3 4).
    pub fn from_cycle_type(n: usize, cycle_lengths: &[usize]) -> Self {
        assert_eq!(cycle_lengths.iter().sum::<usize>(), n);
        let mut images: Vec<usize> = (0..n).collect();
        let mut start = 0;
        for &len in cycle_lengths {
            for k in 0..len {
                images[start + k] = start + (k + 1) % len;
            }
            start += len;
        }
        Permutation { images }
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    pub fn apply(&self, k: usize) -> usize {
        self.images[k]
    }

    pub fn inverse(&self) -> Self {
        let mut images = vec![0; self.images.len()];
        for (k, &img) in self.images.iter().enumerate() {
            images[img] = k;
        }
        Permutation { images }
    }

    /// Function composition: (self ∘ other)(k) = self(other(k)).
    pub fn compose(&self, other: &Permutation) -> Result<Self, GroupError> {
        if self.degree() != other.degree() {
            return Err(GroupError::DegreeMismatch(self.degree(), other.degree()));
        }
        Ok(Permutation {
            images: other.images.iter().map(|&k| self.images[k]).collect(),
        })
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(k, &img)| k == img)
    }

    pub fn sign(&self) -> i32 {
        let mut sign = 1;
        let mut seen = vec![false; self.degree()];
        for start in 0..self.degree() {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut k = start;
            while !seen[k] {
                seen[k] = true;
                k = self.images[k];
                len += 1;
            }
            if len % 2 == 0 {
                sign = -sign;
            }
        }
        sign
    }

    /// Cycle lengths, descending. Fixed points count as 1-cycles.
    pub fn cycle_type(&self) -> Vec<usize> {
        let mut lengths = Vec::new();
        let mut seen = vec![false; self.degree()];
        for start in 0..self.degree() {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut k = start;
            while !seen[k] {
                seen[k] = true;
                k = self.images[k];
                len += 1;
            }
            lengths.push(len);
        }
        lengths.sort_unstable_by(|a, b| b.cmp(a));
        lengths
    }

    /// Orbits of the subgroup generated by `perms` on {0..n-1}.
    pub fn orbits(n: usize, perms: &[Permutation]) -> Vec<Vec<usize>> {
        let mut seen = vec![false; n];
        let mut orbits = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut orbit = vec![start];
            seen[start] = true;
            let mut queue = vec![start];
            while let Some(k) = queue.pop() {
                for p in perms {
                    for next in [p.apply(k), p.inverse().apply(k)] {
                        if !seen[next] {
                            seen[next] = true;
                            orbit.push(next);
                            queue.push(next);
                        }
                    }
                }
            }
            orbit.sort_unstable();
            orbits.push(orbit);
        }
        orbits
    }

    /// Cycle notation with 1-based points, e.g. "(1 2 3)(4 5)"; "id" for the
    /// identity.
    pub fn cycle_string(&self) -> String {
        let mut out = String::new();
        let mut seen = vec![false; self.degree()];
        for start in 0..self.degree() {
            if seen[start] || self.images[start] == start {
                seen[start] = true;
                continue;
            }
            out.push('(');
            let mut k = start;
            let mut first = true;
            while !seen[k] {
                seen[k] = true;
                if !first {
                    out.push(' ');
                }
                out.push_str(&(k + 1).to_string());
                first = false;
                k = self.images[k];
            }
            out.push(')');
        }
        if out.is_empty() {
            out.push_str("id");
        }
        out
    }
}

/// An element (λ, σ) of 𝕋ⁿ ⋊ S_n, equivalently a unitary normalizing the
/// diagonal D_n. The matrix model sends e_k to λ_{σ(k)} e_{σ(k)}.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagPermUnitary {
    pub perm: Permutation,
    pub phases: Vec<C64>,
}

impl DiagPermUnitary {
    pub fn identity(n: usize) -> Self {
        DiagPermUnitary {
            perm: Permutation::identity(n),
            phases: vec![C64::new(1.0, 0.0); n],
        }
    }

    pub fn new(perm: Permutation, phases: Vec<C64>) -> Result<Self, GroupError> {
        if perm.degree() != phases.len() {
            return Err(GroupError::DegreeMismatch(perm.degree(), phases.len()));
        }
        for (index, z) in phases.iter().enumerate() {
            let modulus = z.norm();
            if (modulus - 1.0).abs() > crate::linalg::TAU_NUM {
                return Err(GroupError::NotUnimodular { index, modulus });
            }
        }
        Ok(DiagPermUnitary { perm, phases })
    }

    pub fn from_perm(perm: Permutation) -> Self {
        let n = perm.degree();
        DiagPermUnitary { perm, phases: vec![C64::new(1.0, 0.0); n] }
    }

    pub fn from_phases(phases: Vec<C64>) -> Self {
        let n = phases.len();
        DiagPermUnitary { perm: Permutation::identity(n), phases }
    }

    /// A single phase, degree 1. The 𝕋-valued case used by line bundles.
    pub fn phase(z: C64) -> Self {
        DiagPermUnitary { perm: Permutation::identity(1), phases: vec![z] }
    }

    pub fn degree(&self) -> usize {
        self.perm.degree()
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.perm.is_identity()
            && self.phases.iter().all(|z| (z - C64::new(1.0, 0.0)).norm() <= tol)
    }

    pub fn is_phase_free(&self, tol: f64) -> bool {
        self.phases.iter().all(|z| (z - C64::new(1.0, 0.0)).norm() <= tol)
    }

    /// Group law of 𝕋ⁿ ⋊ S_n, with the action convention fixed so that
    /// `matrix_form` is a homomorphism: (λ, σ)(μ, τ) = (λ · (σ·μ), στ) where
    /// (σ·μ)_k = μ_{σ⁻¹(k)}.
    pub fn compose(&self, other: &DiagPermUnitary) -> Result<DiagPermUnitary, GroupError> {
        let n = self.degree();
        if n != other.degree() {
            return Err(GroupError::DegreeMismatch(n, other.degree()));
        }
        let perm = self.perm.compose(&other.perm)?;
        let sigma_inv = self.perm.inverse();
        let phases = (0..n)
            .map(|k| self.phases[k] * other.phases[sigma_inv.apply(k)])
            .collect();
        Ok(DiagPermUnitary { perm, phases })
    }

    /// (λ, σ)⁻¹ = (σ⁻¹ · λ⁻¹, σ⁻¹); in coordinates the k-th inverse phase
    /// is conj(λ_{σ(k)}).
    pub fn inverse(&self) -> DiagPermUnitary {
        let n = self.degree();
        let phases = (0..n).map(|k| self.phases[self.perm.apply(k)].conj()).collect();
        DiagPermUnitary { perm: self.perm.inverse(), phases }
    }

    /// The unitary with u e_k = λ_{σ(k)} e_{σ(k)}.
    pub fn matrix_form(&self) -> CMat {
        let n = self.degree();
        let mut m = CMat::zeros(n, n);
        for k in 0..n {
            let row = self.perm.apply(k);
            m[(row, k)] = self.phases[row];
        }
        m
    }

    pub fn project_to_perm(&self) -> Permutation {
        self.perm.clone()
    }

    /// det(matrix_form) = sign(σ) · ∏ λ_k.
    pub fn determinant(&self) -> C64 {
        let sign = C64::new(self.perm.sign() as f64, 0.0);
        self.phases.iter().fold(sign, |acc, z| acc * z)
    }

    pub fn approx_eq(&self, other: &DiagPermUnitary, tol: f64) -> bool {
        self.perm == other.perm
            && self
                .phases
                .iter()
                .zip(&other.phases)
                .all(|(a, b)| (a - b).norm() <= tol)
    }

    /// Recover (λ, σ) from a monomial unitary: exactly one entry of modulus
    /// ~1 per row and column, everything else below `tol`.
    pub fn from_matrix(m: &CMat, tol: f64) -> Result<DiagPermUnitary, GroupError> {
        if !m.is_square() {
            return Err(GroupError::NotMonomial);
        }
        let n = m.nrows();
        let mut images = vec![usize::MAX; n];
        let mut phases = vec![C64::new(0.0, 0.0); n];
        let mut row_used = vec![false; n];
        for k in 0..n {
            let mut hit = None;
            for row in 0..n {
                let z = m[(row, k)];
                if z.norm() > tol {
                    if hit.is_some() || (z.norm() - 1.0).abs() > tol {
                        return Err(GroupError::NotMonomial);
                    }
                    hit = Some((row, z));
                }
            }
            let Some((row, z)) = hit else {
                return Err(GroupError::NotMonomial);
            };
            if row_used[row] {
                return Err(GroupError::NotMonomial);
            }
            row_used[row] = true;
            images[k] = row;
            phases[row] = z;
        }
        Ok(DiagPermUnitary { perm: Permutation::new(images)?, phases })
    }

    /// "(cycles; phase list)" rendering for reports.
    pub fn display(&self) -> String {
        let phases: Vec<String> =
            self.phases.iter().map(crate::textio::format_phase).collect();
        format!("({}; {})", self.perm.cycle_string(), phases.join(" "))
    }

    /// Uniform random element: a shuffled permutation with independent
    /// uniform phases.
    pub fn random(n: usize, rng: &mut impl rand::Rng) -> DiagPermUnitary {
        let mut images: Vec<usize> = (0..n).collect();
        for k in (1..n).rev() {
            images.swap(k, rng.gen_range(0..=k));
        }
        let phases = (0..n)
            .map(|_| {
                let theta: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                C64::new(theta.cos(), theta.sin())
            })
            .collect();
        DiagPermUnitary::new(Permutation::new(images).unwrap(), phases).unwrap()
    }
}

/// Integer partitions of n in deterministic (descending-lexicographic) order;
/// one per conjugacy class of S_n.
pub fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(remaining: usize, max_part: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if remaining == 0 {
            out.push(prefix.clone());
            return;
        }
        for part in (1..=remaining.min(max_part)).rev() {
            prefix.push(part);
            rec(remaining - part, part, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

/// One representative per conjugacy class of S_n (cycle types).
pub fn conjugacy_classes_sn(n: usize) -> Vec<Permutation> {
    partitions(n)
        .iter()
        .map(|cycle_type| Permutation::from_cycle_type(n, cycle_type))
        .collect()
}
