//! Integer Čech cohomology of nerves via Smith normal form, and the first
//! Chern class of 𝕋-valued transition systems.

use crate::cocycle::TransitionSystem;
use crate::linalg::{smith_normal_form, IntMat, SmithNormalForm};
use crate::space::{nerve, spanning_forest, validate_good_cover, CechSpace, Nerve};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CohomologyError {
    #[error("cover is not good; {0} disconnected intersections")]
    NotGoodCover(usize),
    #[error("phase step of {angle:.3} rad >= pi along overlap ({i},{j}); sample too coarse")]
    ResolutionViolated { i: usize, j: usize, angle: f64 },
    #[error("log cocycle is {residual:.3} away from an integer at triple ({i},{j},{k})")]
    NonIntegerCocycle { i: usize, j: usize, k: usize, residual: f64 },
    #[error("integer 2-cochain is not a cocycle; sampling inconsistent")]
    InconsistentCocycle,
    #[error("systems live over different covers")]
    CoverMismatch,
}

/// The integer cochain complex of a nerve in fixed (lexicographic) simplex
/// order, with coboundary matrices δ⁰, δ¹, δ².
#[derive(Debug, Clone)]
pub struct CochainComplex {
    pub nerve: Nerve,
    pub delta0: IntMat,
    pub delta1: IntMat,
    pub delta2: IntMat,
    edge_index: BTreeMap<(usize, usize), usize>,
    triangle_index: BTreeMap<(usize, usize, usize), usize>,
}

impl CochainComplex {
    pub fn new(nerve: Nerve) -> Self {
        let edge_index: BTreeMap<(usize, usize), usize> =
            nerve.edges.iter().copied().enumerate().map(|(n, e)| (e, n)).collect();
        let triangle_index: BTreeMap<(usize, usize, usize), usize> =
            nerve.triangles.iter().copied().enumerate().map(|(n, t)| (t, n)).collect();

        let mut delta0 = IntMat::zeros(nerve.edges.len(), nerve.vertices.len());
        for (row, &(i, j)) in nerve.edges.iter().enumerate() {
            delta0[(row, j)] += BigInt::from(1);
            delta0[(row, i)] -= BigInt::from(1);
        }
        let mut delta1 = IntMat::zeros(nerve.triangles.len(), nerve.edges.len());
        for (row, &(i, j, k)) in nerve.triangles.iter().enumerate() {
            delta1[(row, edge_index[&(j, k)])] += BigInt::from(1);
            delta1[(row, edge_index[&(i, k)])] -= BigInt::from(1);
            delta1[(row, edge_index[&(i, j)])] += BigInt::from(1);
        }
        let mut delta2 = IntMat::zeros(nerve.tetrahedra.len(), nerve.triangles.len());
        for (row, &(i, j, k, l)) in nerve.tetrahedra.iter().enumerate() {
            delta2[(row, triangle_index[&(j, k, l)])] += BigInt::from(1);
            delta2[(row, triangle_index[&(i, k, l)])] -= BigInt::from(1);
            delta2[(row, triangle_index[&(i, j, l)])] += BigInt::from(1);
            delta2[(row, triangle_index[&(i, j, k)])] -= BigInt::from(1);
        }
        CochainComplex { nerve, delta0, delta1, delta2, edge_index, triangle_index }
    }

    pub fn edge_position(&self, i: usize, j: usize) -> usize {
        self.edge_index[&(i.min(j), i.max(j))]
    }

    pub fn triangle_position(&self, t: (usize, usize, usize)) -> usize {
        self.triangle_index[&t]
    }
}

/// Rank and torsion of one cohomology group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupSummary {
    pub betti: usize,
    pub torsion: Vec<BigInt>,
}

impl GroupSummary {
    pub fn describe(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        match self.betti {
            0 => {}
            1 => parts.push("Z".into()),
            b => parts.push(format!("Z^{b}")),
        }
        for t in &self.torsion {
            parts.push(format!("Z/{t}"));
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

fn group_summary(
    dim_cochains: usize,
    rank_out: usize,
    snf_in: Option<&SmithNormalForm>,
) -> GroupSummary {
    let rank_in = snf_in.map_or(0, |s| s.diag.len());
    let betti = dim_cochains - rank_out - rank_in;
    let torsion = snf_in
        .map(|s| {
            s.diag
                .iter()
                .filter(|d| d.abs() > BigInt::from(1))
                .cloned()
                .collect()
        })
        .unwrap_or_default();
    GroupSummary { betti, torsion }
}

/// H⁰, H¹, H² of the nerve of a validated good cover, computed by Smith
/// normal form of the coboundary maps.
pub fn cohomology_groups(
    space: &CechSpace,
) -> Result<(GroupSummary, GroupSummary, GroupSummary), CohomologyError> {
    let report = validate_good_cover(space);
    if !report.good {
        return Err(CohomologyError::NotGoodCover(report.violations.len()));
    }
    let complex = CochainComplex::new(nerve(space));
    Ok(cohomology_of_complex(&complex))
}

pub fn cohomology_of_complex(
    complex: &CochainComplex,
) -> (GroupSummary, GroupSummary, GroupSummary) {
    let snf0 = smith_normal_form(&complex.delta0);
    let snf1 = smith_normal_form(&complex.delta1);
    let snf2 = smith_normal_form(&complex.delta2);
    let h0 = group_summary(complex.nerve.vertices.len(), snf0.diag.len(), None);
    let h1 = group_summary(complex.nerve.edges.len(), snf1.diag.len(), Some(&snf0));
    let h2 = group_summary(complex.nerve.triangles.len(), snf2.diag.len(), Some(&snf1));
    (h0, h1, h2)
}

/// A degree-2 class in SNF coordinates: residues modulo the elementary
/// divisors of δ¹ plus the remaining free coordinates. Two 2-cocycles over
/// the same cover are cohomologous iff their classes are equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CohomologyClass {
    /// (residue, modulus) pairs for elementary divisors > 1.
    pub torsion: Vec<(BigInt, BigInt)>,
    /// Coordinates past the rank of δ¹; 0 for cohomologically trivial input.
    pub free: Vec<BigInt>,
}

impl CohomologyClass {
    pub fn is_zero(&self) -> bool {
        self.torsion.iter().all(|(r, _)| r.is_zero()) && self.free.iter().all(|v| v.is_zero())
    }

    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        for (r, m) in &self.torsion {
            parts.push(format!("{r} (mod {m})"));
        }
        for v in &self.free {
            parts.push(v.to_string());
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(", ")
        }
    }

    /// The single free coordinate, for rank-one H² reports.
    pub fn free_coordinate(&self) -> Option<&BigInt> {
        match self.free.len() {
            1 => Some(&self.free[0]),
            _ => None,
        }
    }
}

/// Reduce an integer 2-cocycle to its class coordinates via the SNF of δ¹.
pub fn class_of_cocycle(
    complex: &CochainComplex,
    cochain: &[BigInt],
) -> Result<CohomologyClass, CohomologyError> {
    assert_eq!(cochain.len(), complex.nerve.triangles.len());
    // Must be a cocycle for the class to mean anything.
    if !complex.nerve.tetrahedra.is_empty() {
        let mut col = IntMat::zeros(cochain.len(), 1);
        for (i, v) in cochain.iter().enumerate() {
            col[(i, 0)] = v.clone();
        }
        let image = complex.delta2.mul(&col);
        for row in 0..image.rows {
            if !image[(row, 0)].is_zero() {
                return Err(CohomologyError::InconsistentCocycle);
            }
        }
    }
    let snf1 = smith_normal_form(&complex.delta1);
    let mut col = IntMat::zeros(cochain.len(), 1);
    for (i, v) in cochain.iter().enumerate() {
        col[(i, 0)] = v.clone();
    }
    let y = snf1.left.mul(&col);
    let t = snf1.diag.len();
    let mut torsion = Vec::new();
    for (i, d) in snf1.diag.iter().enumerate() {
        if d.abs() > BigInt::from(1) {
            let mut r = &y[(i, 0)] % d;
            if r.is_negative() {
                r += d.abs();
            }
            torsion.push((r, d.abs()));
        }
    }
    let free = (t..cochain.len()).map(|i| y[(i, 0)].clone()).collect();
    Ok(CohomologyClass { torsion, free })
}

/// The integer Čech 2-cocycle of a 𝕋-valued transition system: continuous
/// logarithms per overlap (principal branch at the least vertex, propagated
/// along a spanning tree), then
/// c_ijk = (θ_ij + θ_jk - θ_ik) / 2π at the least vertex of each triple
/// overlap.
pub fn log_two_cocycle(
    l: &TransitionSystem,
) -> Result<(CochainComplex, Vec<BigInt>), CohomologyError> {
    let base = &l.base;
    let complex = CochainComplex::new(nerve(base));

    // Continuous logarithm per overlap.
    let mut logs: BTreeMap<(usize, usize), BTreeMap<usize, f64>> = BTreeMap::new();
    for (i, j) in base.overlapping_pairs() {
        let overlap: std::collections::BTreeSet<usize> =
            base.overlap(i, j).into_iter().collect();
        let mut theta: BTreeMap<usize, f64> = BTreeMap::new();
        for (root, tree) in spanning_forest(base, &overlap) {
            let root_phase = l.value(i, j, root).expect("overlap vertex").phases[0];
            theta.insert(root, root_phase.arg());
            for (child, parent) in tree {
                let pc = l.value(i, j, child).expect("overlap vertex").phases[0];
                let pp = l.value(i, j, parent).expect("overlap vertex").phases[0];
                let step = (pc / pp).arg();
                if step.abs() >= std::f64::consts::PI - 1e-12 {
                    return Err(CohomologyError::ResolutionViolated {
                        i,
                        j,
                        angle: step.abs(),
                    });
                }
                let value = theta[&parent] + step;
                theta.insert(child, value);
            }
        }
        logs.insert((i, j), theta);
    }

    let mut cochain = vec![BigInt::zero(); complex.nerve.triangles.len()];
    for (row, &(i, j, k)) in complex.nerve.triangles.iter().enumerate() {
        let x = *base
            .triple_overlap(i, j, k)
            .first()
            .expect("nerve triangle has nonempty triple overlap");
        let sum = logs[&(i, j)][&x] + logs[&(j, k)][&x] - logs[&(i, k)][&x];
        let value = sum / (2.0 * std::f64::consts::PI);
        let rounded = value.round();
        if (value - rounded).abs() > 0.25 {
            return Err(CohomologyError::NonIntegerCocycle {
                i,
                j,
                k,
                residual: (value - rounded).abs(),
            });
        }
        cochain[row] = BigInt::from(rounded as i64);
    }
    Ok((complex, cochain))
}

/// First Chern class of a 𝕋-valued transition system over a good cover.
pub fn chern_class(l: &TransitionSystem) -> Result<CohomologyClass, CohomologyError> {
    let report = validate_good_cover(&l.base);
    if !report.good {
        return Err(CohomologyError::NotGoodCover(report.violations.len()));
    }
    nerve_class(l)
}

/// The class of the log 2-cocycle in H² of the nerve, without the
/// good-cover gate: the right invariant for comparing systems over one
/// fixed cover even when the cover is not good.
pub fn nerve_class(l: &TransitionSystem) -> Result<CohomologyClass, CohomologyError> {
    let (complex, cochain) = log_two_cocycle(l)?;
    class_of_cocycle(&complex, &cochain)
}

/// Pointwise phase product; Chern classes add under it.
pub fn tensor(
    l1: &TransitionSystem,
    l2: &TransitionSystem,
) -> Result<TransitionSystem, CohomologyError> {
    l1.tensor(l2).map_err(|_| CohomologyError::CoverMismatch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::{apply_gauge, random_gauge};
    use crate::gallery::{bundles, spaces};
    use rand::rngs::StdRng;
    use rand::SeedableRng;
    use std::sync::Arc;

    #[test]
    fn circle_groups() {
        let (h0, h1, h2) = cohomology_groups(&spaces::circle()).unwrap();
        assert_eq!(h0, GroupSummary { betti: 1, torsion: vec![] });
        assert_eq!(h1, GroupSummary { betti: 1, torsion: vec![] });
        assert_eq!(h2, GroupSummary { betti: 0, torsion: vec![] });
    }

    #[test]
    fn sphere_groups() {
        let (h0, h1, h2) = cohomology_groups(&spaces::sphere()).unwrap();
        assert_eq!(h0, GroupSummary { betti: 1, torsion: vec![] });
        assert_eq!(h1, GroupSummary { betti: 0, torsion: vec![] });
        assert_eq!(h2, GroupSummary { betti: 1, torsion: vec![] });
    }

    #[test]
    fn projective_plane_groups() {
        let (h0, h1, h2) = cohomology_groups(&spaces::projective_plane()).unwrap();
        assert_eq!(h0, GroupSummary { betti: 1, torsion: vec![] });
        assert_eq!(h1, GroupSummary { betti: 0, torsion: vec![] });
        assert_eq!(h2, GroupSummary { betti: 0, torsion: vec![BigInt::from(2)] });
    }

    #[test]
    fn interval_and_square_are_trivial() {
        for space in [spaces::interval(), spaces::square()] {
            let (h0, h1, h2) = cohomology_groups(&space).unwrap();
            assert_eq!(h0.betti, 1);
            assert_eq!(h1, GroupSummary { betti: 0, torsion: vec![] });
            assert_eq!(h2, GroupSummary { betti: 0, torsion: vec![] });
        }
    }

    #[test]
    fn delta_squared_vanishes() {
        for space in [spaces::sphere(), spaces::projective_plane(), spaces::square()] {
            let complex = CochainComplex::new(nerve(&space));
            let p1 = complex.delta1.mul(&complex.delta0);
            for i in 0..p1.rows {
                for j in 0..p1.cols {
                    assert!(p1[(i, j)].is_zero());
                }
            }
            let p2 = complex.delta2.mul(&complex.delta1);
            for i in 0..p2.rows {
                for j in 0..p2.cols {
                    assert!(p2[(i, j)].is_zero());
                }
            }
        }
    }

    #[test]
    fn trivial_phases_have_zero_class() {
        let space = Arc::new(spaces::sphere());
        let l = TransitionSystem::identity(space, 1);
        let class = chern_class(&l).unwrap();
        assert!(class.is_zero());
    }

    /// Independent oracle: total winding of the clutching phase along the
    /// ordered equatorial band, as a sum of principal-branch steps over 2π.
    fn equator_winding(w: i64) -> i64 {
        let l = bundles::sphere_clutching(w);
        let loop_points = bundles::sphere_equator_band();
        let mut total = 0.0f64;
        for k in 0..loop_points.len() {
            let (za, ia) = loop_points[k];
            let (zb, _) = loop_points[(k + 1) % loop_points.len()];
            // Both points lie in the southern overlap of chart ia.
            let pa = l.value(1, ia, za).unwrap().phases[0];
            let next_chart = loop_points[(k + 1) % loop_points.len()].1;
            let pb = l
                .value(1, next_chart, zb)
                .or_else(|| l.value(1, ia, zb))
                .unwrap()
                .phases[0];
            total += (pb / pa).arg();
        }
        (total / (2.0 * std::f64::consts::PI)).round() as i64
    }

    #[test]
    fn sphere_clutching_class_is_winding_times_generator() {
        for w in -2..=2i64 {
            let l = bundles::sphere_clutching(w);
            let class = chern_class(&l).unwrap();
            assert!(class.torsion.is_empty());
            let coord = class.free_coordinate().expect("rank-one H2");
            let oracle = equator_winding(w);
            assert_eq!(oracle, w, "winding oracle");
            // Class = ±w·generator with one global sign convention; the
            // builder orients the equator so the sign is +.
            assert_eq!(coord, &BigInt::from(w), "w = {w}");
        }
    }

    #[test]
    fn chern_is_gauge_invariant() {
        let mut rng = StdRng::seed_from_u64(20);
        for w in [-1i64, 0, 2] {
            let l = bundles::sphere_clutching(w);
            let class = chern_class(&l).unwrap();
            for _ in 0..10 {
                let gauge =
                    random_gauge(l.base.clone(), 1, &mut rng, std::f64::consts::PI / 8.0);
                let gauged = apply_gauge(&l, &gauge).unwrap();
                assert_eq!(chern_class(&gauged).unwrap(), class);
            }
        }
    }

    #[test]
    fn tensor_adds_classes() {
        let a = bundles::sphere_clutching(1);
        let b = bundles::sphere_clutching(1);
        let ab = tensor(&a, &b).unwrap();
        let class = chern_class(&ab).unwrap();
        assert_eq!(class.free_coordinate().unwrap(), &BigInt::from(2));

        let c = bundles::sphere_clutching(-1);
        let ac = tensor(&a, &c).unwrap();
        assert!(chern_class(&ac).unwrap().is_zero());

        // l ⊗ conj(l) is exactly trivial.
        let conj = a.conjugate();
        let id = tensor(&a, &conj).unwrap();
        assert!(chern_class(&id).unwrap().is_zero());
    }

    #[test]
    fn rp2_sign_bundle_is_the_torsion_generator() {
        let minus = bundles::rp2_sign_bundle();
        let class = chern_class(&minus).unwrap();
        assert_eq!(class.torsion.len(), 1);
        let (r, m) = &class.torsion[0];
        assert_eq!(m, &BigInt::from(2));
        assert_eq!(r, &BigInt::from(1), "pi-minus class is the nonzero element");
        assert!(class.free.iter().all(|v| v.is_zero()));

        let plus = bundles::rp2_trivial_bundle();
        assert!(chern_class(&plus).unwrap().is_zero());

        // Doubling the sign bundle kills the class (2-torsion).
        let double = tensor(&minus, &minus).unwrap();
        assert!(chern_class(&double).unwrap().is_zero());
    }

    #[test]
    fn circle_torus_cocycles_are_trivial() {
        // H² of the circle nerve vanishes, so every 𝕋-cocycle is declared
        // trivializable.
        let mut rng = StdRng::seed_from_u64(21);
        let space = Arc::new(spaces::circle());
        for _ in 0..20 {
            let l0 = TransitionSystem::identity(space.clone(), 1);
            let gauge = random_gauge(space.clone(), 1, &mut rng, 2.0);
            let l = apply_gauge(&l0, &gauge).unwrap();
            let class = chern_class(&l).unwrap();
            assert!(class.is_zero());
            assert!(class.free.is_empty() && class.torsion.is_empty());
        }
    }

    #[test]
    fn resolution_violation_is_reported() {
        let space = Arc::new(spaces::sphere());
        let mut l = TransitionSystem::identity(space.clone(), 1);
        // A jump of exactly pi between adjacent overlap vertices.
        let (i, j) = space.overlapping_pairs()[0];
        let overlap = space.overlap(i, j);
        let adjacent = overlap
            .iter()
            .flat_map(|&a| overlap.iter().map(move |&b| (a, *&b)))
            .find(|&(a, b)| a < b && space.has_edge(a, b))
            .expect("overlap has an edge");
        l.set(i, j, adjacent.1, crate::group::DiagPermUnitary::phase(C64::new(-1.0, 0.0)));
        assert!(matches!(
            nerve_class(&l),
            Err(CohomologyError::ResolutionViolated { .. })
        ));
    }

    use crate::linalg::C64;
}
