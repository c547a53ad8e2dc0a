//! Cartan subalgebras of the compacts containing the left action, in their
//! spectrum presentation: a covering of the base plus a rank-one projection
//! field, with the twisted correspondence reconstructions of §4 and the
//! commuting-triangle check.

use crate::atlas::{atlas_from_correspondence, range_map_from_atlas, AtlasData, TAU_MATCH};
use crate::bundle::{visit_covering_isomorphisms, CoveringSpace, LineBundle};
use crate::cocycle::TransitionSystem;
use crate::cohomology::nerve_class;
use crate::correspondence::{
    correspondences_isomorphic, left_action_of, LeftAction, TwistedCorrespondence, UnitaryField,
};
use crate::group::DiagPermUnitary;
use crate::linalg::{fro_norm, C64, CMat, CVec};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CartanError {
    #[error("projection field is branched: projection at spectrum vertex {0} has rank {1}")]
    Branched(usize, usize),
    #[error("left action is not contained in the span of the projections (defect {0:.3e})")]
    NotContained(f64),
    #[error("no target vertex matches projection {0}")]
    NoRange(usize),
    #[error("several target vertices match projection {0}")]
    AmbiguousRange(usize),
    #[error("projection field is not edge-coherent near spectrum vertex {0}")]
    IncoherentProjections(usize),
    #[error(transparent)]
    Correspondence(#[from] crate::correspondence::CorrespondenceError),
}

/// A Cartan subalgebra presented by its spectrum: a covering of the base and
/// one projection per spectrum point, in the canonical fiber coordinates of
/// the ambient module presentation.
#[derive(Debug, Clone)]
pub struct CartanData {
    pub spectrum: Arc<CoveringSpace>,
    pub projections: Vec<CMat>,
}

impl CartanData {
    /// Orthogonality, completeness, rank one, and edge-coherence of the
    /// projection field over the presenting correspondence's module.
    pub fn validate(&self, ambient: &TwistedCorrespondence) -> Vec<String> {
        let mut issues = Vec::new();
        let tol = 1e-8;
        for x in self.spectrum.base.vertices() {
            let dim = ambient.fiber_dim(x);
            let mut sum = CMat::zeros(dim, dim);
            for &z in self.spectrum.fiber(x) {
                let p = &self.projections[z];
                if fro_norm(&(p - p.adjoint())) > tol || fro_norm(&(p * p - p)) > tol {
                    issues.push(format!("projection at {z} is not a projection"));
                }
                let rank: f64 = (0..p.nrows()).map(|i| p[(i, i)].re).sum();
                if (rank - 1.0).abs() > tol {
                    issues.push(format!("projection at {z} has rank {rank:.2}"));
                }
                for &w in self.spectrum.fiber(x) {
                    if w != z {
                        let prod = fro_norm(&(&self.projections[z] * &self.projections[w]));
                        if prod > tol {
                            issues.push(format!("projections {z} and {w} not orthogonal"));
                        }
                    }
                }
                sum += p;
            }
            if fro_norm(&(sum - CMat::identity(dim, dim))) > tol {
                issues.push(format!("projections over {x} do not sum to the identity"));
            }
        }
        // Edge-coherence: along each spectrum edge the transported
        // projections overlap decisively.
        for &(z, w) in &self.spectrum.edges {
            let x = self.spectrum.base_of(z);
            let y = self.spectrum.base_of(w);
            let transported = transport_operator(ambient, x, y, &self.projections[z]);
            let overlap = (&transported * &self.projections[w])
                .diagonal()
                .iter()
                .map(|v| v.re)
                .sum::<f64>();
            if overlap <= 0.5 {
                issues.push(format!("edge ({z},{w}) has projection overlap {overlap:.2}"));
            }
        }
        issues
    }
}

/// Transport an operator at x to the fiber at an adjacent vertex y through
/// the least chart containing the base edge, phase-accurately in the
/// canonical coordinates of the module.
pub fn transport_operator(
    c: &TwistedCorrespondence,
    x: usize,
    y: usize,
    op: &CMat,
) -> CMat {
    let chart = (0..c.base().chart_count())
        .find(|&i| c.base().chart(i).contains(&x) && c.base().chart(i).contains(&y))
        .expect("base edge lies in a chart");
    let matching = c.covering.edge_matching(x, y);
    let nx = c.fiber_dim(x);
    let ny = c.fiber_dim(y);
    let mut u = CMat::zeros(ny, nx);
    for (&z, &w) in &matching {
        let phase = c.chart_to_canonical(w, chart) * c.chart_to_canonical(z, chart).conj();
        u[(c.covering.sheet_index(w), c.covering.sheet_index(z))] = phase;
    }
    &u * op * u.adjoint()
}

/// The Cartan subalgebra of multiplication operators of a twisted
/// correspondence: spectrum = the covering itself, projections = the sheet
/// indicators.
pub fn cartan_from_twisted(c: &TwistedCorrespondence) -> CartanData {
    let projections = (0..c.covering.total_count())
        .map(|z| {
            let x = c.covering.base_of(z);
            let dim = c.fiber_dim(x);
            let mut p = CMat::zeros(dim, dim);
            let pos = c.covering.sheet_index(z);
            p[(pos, pos)] = C64::new(1.0, 0.0);
            p
        })
        .collect();
    CartanData { spectrum: c.covering.clone(), projections }
}

/// The Cartan of an atlas: the covering of the derived cocycle with
/// projections h_i(x) E_kk h_i(x)*.
pub fn cartan_from_atlas(a: &AtlasData) -> Result<CartanData, CartanError> {
    let system = a.derived_cocycle().map_err(|_| CartanError::NotContained(1.0))?;
    let (covering, _) = crate::bundle::build_twisted_covering(&system)
        .map_err(crate::correspondence::CorrespondenceError::from)?;
    let projections = (0..covering.total_count())
        .map(|z| {
            let x = covering.base_of(z);
            let i = (0..a.base.chart_count())
                .find(|&i| covering.coord(z, i).is_some())
                .expect("point lies in a chart");
            let k = covering.coord(z, i).unwrap();
            let h = a.chart_matrix(i, x);
            let col: CVec = h.column(k).into_owned();
            let mut p = CMat::zeros(h.nrows(), h.nrows());
            for r in 0..h.nrows() {
                for s in 0..h.nrows() {
                    p[(r, s)] = col[r] * col[s].conj();
                }
            }
            p
        })
        .collect();
    Ok(CartanData { spectrum: covering, projections })
}

/// Rank-one unit vector representative: the range of p with its
/// largest-modulus entry rotated to the positive real axis.
fn unit_representative(p: &CMat) -> CVec {
    let n = p.nrows();
    let mut best_col = 0;
    let mut best_norm = 0.0;
    for k in 0..n {
        let norm: f64 = (0..n).map(|r| p[(r, k)].norm_sqr()).sum();
        if norm > best_norm {
            best_norm = norm;
            best_col = k;
        }
    }
    let mut v: CVec = p.column(best_col).into_owned();
    let scale = 1.0 / v.norm();
    v *= C64::new(scale, 0.0);
    let lead = (0..n)
        .max_by(|&a, &b| v[a].norm().partial_cmp(&v[b].norm()).unwrap())
        .unwrap();
    let phase = v[lead] / v[lead].norm();
    v * phase.conj()
}

/// Reconstruct a twisted correspondence from a Cartan: the covering is the
/// spectrum, the line bundle trivializes the rank-one ranges chart by chart
/// along spanning trees, and the range map reads the left action off the
/// projections.
pub fn twisted_from_cartan(
    d: &CartanData,
    ambient: &TwistedCorrespondence,
    phi: &LeftAction,
) -> Result<TwistedCorrespondence, CartanError> {
    for (z, p) in d.projections.iter().enumerate() {
        let rank: f64 = (0..p.nrows()).map(|i| p[(i, i)].re).sum();
        if (rank - 1.0).abs() > 1e-8 {
            return Err(CartanError::Branched(z, rank.round() as usize));
        }
    }
    // Containment of the left action in the fiberwise span.
    let mut defect = 0.0f64;
    for y in 0..phi.images.len() {
        for x in d.spectrum.base.vertices() {
            let a = &phi.images[y][x];
            let mut approx = CMat::zeros(a.nrows(), a.ncols());
            for &z in d.spectrum.fiber(x) {
                let p = &d.projections[z];
                let coeff: C64 = (a * p).diagonal().iter().sum();
                approx += p * coeff;
            }
            defect = defect.max(fro_norm(&(a - approx)));
        }
    }
    if defect > 1e-8 {
        return Err(CartanError::NotContained(defect));
    }

    // Range map: the unique target vertex with tr(φ(δ_y) p_z) ≈ 1.
    let mut range = vec![usize::MAX; d.spectrum.total_count()];
    for z in 0..d.spectrum.total_count() {
        let x = d.spectrum.base_of(z);
        let mut winner = None;
        for y in 0..phi.images.len() {
            let value: f64 = (&phi.images[y][x] * &d.projections[z])
                .diagonal()
                .iter()
                .map(|v| v.re)
                .sum();
            if value > 1.0 - TAU_MATCH {
                if winner.is_some() {
                    return Err(CartanError::AmbiguousRange(z));
                }
                winner = Some(y);
            }
        }
        range[z] = winner.ok_or(CartanError::NoRange(z))?;
    }

    // Line bundle: trivialize the projection ranges along a spanning tree of
    // each refined chart piece; holonomy lands in the transition phases.
    let total = Arc::new(d.spectrum.total_space());
    let n_pieces = d.spectrum.base.chart_count() * d.spectrum.sheets;
    let mut reps: Vec<Vec<Option<CVec>>> = vec![vec![None; d.spectrum.total_count()]; n_pieces];
    for i in 0..d.spectrum.base.chart_count() {
        for k in 0..d.spectrum.sheets {
            let piece = d.spectrum.refined_chart(i, k);
            let members: Vec<usize> = (0..d.spectrum.total_count())
                .filter(|&z| d.spectrum.coord(z, i) == Some(k))
                .collect();
            if members.is_empty() {
                continue;
            }
            // BFS over the base edges inside the chart.
            let mut pending: std::collections::VecDeque<usize> = Default::default();
            let in_piece: std::collections::BTreeSet<usize> = members.iter().copied().collect();
            for &z in &members {
                if reps[piece][z].is_some() {
                    continue;
                }
                reps[piece][z] = Some(unit_representative(&d.projections[z]));
                pending.push_back(z);
                while let Some(current) = pending.pop_front() {
                    let x = d.spectrum.base_of(current);
                    for &w in d.spectrum.neighbors(current) {
                        if !in_piece.contains(&w) || reps[piece][w].is_some() {
                            continue;
                        }
                        let y = d.spectrum.base_of(w);
                        let u = reps[piece][current].clone().unwrap();
                        let mut uop = CMat::zeros(u.len(), u.len());
                        for r in 0..u.len() {
                            for s in 0..u.len() {
                                uop[(r, s)] = u[r] * u[s].conj();
                            }
                        }
                        let moved = transport_operator(ambient, x, y, &uop);
                        // Project the transported line onto range p_w.
                        let raw = unit_representative(&moved);
                        let projected = &d.projections[w] * raw;
                        let norm = projected.norm();
                        if norm <= 0.5 {
                            return Err(CartanError::IncoherentProjections(w));
                        }
                        let transported_vec = projected * C64::new(1.0 / norm, 0.0);
                        // Align the phase with the actual transport of u.
                        let phase = phase_of_transport(ambient, x, y, &u, &transported_vec);
                        reps[piece][w] = Some(transported_vec * phase);
                        pending.push_back(w);
                    }
                }
            }
        }
    }
    let mut phases = TransitionSystem::identity(total.clone(), 1);
    for (i, j) in d.spectrum.base.overlapping_pairs() {
        for x in d.spectrum.base.overlap(i, j) {
            for &z in d.spectrum.fiber(x) {
                let pi = d.spectrum.refined_chart(i, d.spectrum.coord(z, i).unwrap());
                let pj = d.spectrum.refined_chart(j, d.spectrum.coord(z, j).unwrap());
                let ui = reps[pi][z].as_ref().expect("piece covered");
                let uj = reps[pj][z].as_ref().expect("piece covered");
                let t: C64 = ui.iter().zip(uj.iter()).map(|(a, b)| a.conj() * b).sum();
                phases.set(pi, pj, z, DiagPermUnitary::phase(t / t.norm()));
            }
        }
    }
    let line = LineBundle { covering: d.spectrum.clone(), total, phases };
    Ok(TwistedCorrespondence::new(d.spectrum.clone(), line, phi.target.clone(), range)?)
}

/// Phase aligning the section transport of u with the chosen representative
/// at the far end: <rep, transport(u)>.
fn phase_of_transport(
    c: &TwistedCorrespondence,
    x: usize,
    y: usize,
    u: &CVec,
    rep: &CVec,
) -> C64 {
    let chart = (0..c.base().chart_count())
        .find(|&i| c.base().chart(i).contains(&x) && c.base().chart(i).contains(&y))
        .expect("edge in chart");
    let matching = c.covering.edge_matching(x, y);
    let mut moved = CVec::zeros(rep.len());
    for (&z, &w) in &matching {
        let phase = c.chart_to_canonical(w, chart) * c.chart_to_canonical(z, chart).conj();
        moved[c.covering.sheet_index(w)] = phase * u[c.covering.sheet_index(z)];
    }
    let overlap: C64 = rep.iter().zip(moved.iter()).map(|(a, b)| a.conj() * b).sum();
    overlap / overlap.norm()
}

/// Conjugacy of Cartans on the same module: a covering isomorphism of the
/// spectra matching the left-action decorations, under which the extracted
/// line bundles agree; the witness maps projection ranges along it.
pub fn cartans_conjugate(
    d: &CartanData,
    d_prime: &CartanData,
    ambient: &TwistedCorrespondence,
    phi: &LeftAction,
) -> Result<Option<UnitaryField>, CartanError> {
    let ca = twisted_from_cartan(d, ambient, phi)?;
    let cb = twisted_from_cartan(d_prime, ambient, phi)?;
    let compat = |za: usize, zb: usize| ca.range[za] == cb.range[zb];
    let mut witness: Option<Vec<usize>> = None;
    visit_covering_isomorphisms(&d.spectrum, &d_prime.spectrum, &compat, &mut |psi| {
        let pullback = crate::bundle::pull_back_phases(psi, &ca.line, &cb.line);
        let ratio = ca.line.phases.tensor(&pullback.conjugate()).expect("same cover");
        match nerve_class(&ratio) {
            Ok(class) if class.is_zero() => {
                witness = Some(psi.to_vec());
                true
            }
            _ => false,
        }
    })
    .map_err(crate::correspondence::CorrespondenceError::from)?;
    let Some(psi) = witness else {
        return Ok(None);
    };
    // Pointwise unitary mapping range p_z to range p_{ψ(z)}.
    let field = ambient
        .base()
        .vertices()
        .map(|x| {
            let dim = ambient.fiber_dim(x);
            let mut t = CMat::zeros(dim, dim);
            for &z in d.spectrum.fiber(x) {
                let u = unit_representative(&d.projections[z]);
                let v = unit_representative(&d_prime.projections[psi[z]]);
                for r in 0..dim {
                    for s in 0..dim {
                        t[(r, s)] += v[r] * u[s].conj();
                    }
                }
            }
            t
        })
        .collect();
    Ok(Some(field))
}

/// One leg of the commuting-triangle report.
#[derive(Debug, Clone)]
pub struct LegResult {
    pub name: &'static str,
    pub pass: bool,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct DiagramReport {
    pub legs: Vec<LegResult>,
}

impl DiagramReport {
    pub fn pass(&self) -> bool {
        self.legs.iter().all(|l| l.pass)
    }
}

/// Check that the three dictionaries commute on a concrete instance:
/// correspondence -> atlas -> correspondence, correspondence -> Cartan ->
/// correspondence, and the two Cartan constructions agree up to conjugacy.
pub fn diagram_roundtrip_check(c: &TwistedCorrespondence) -> DiagramReport {
    let mut legs = Vec::new();
    let phi = left_action_of(c);

    let atlas = atlas_from_correspondence(c);
    let normalizing = crate::atlas::is_normalizing(&atlas);
    let diagonalizing = crate::atlas::is_diagonalizing(&atlas, &phi);
    legs.push(LegResult {
        name: "atlas predicates",
        pass: normalizing.ok && diagonalizing.ok,
        residual: diagonalizing.failures.iter().map(|f| f.2).fold(0.0, f64::max),
    });

    match range_map_from_atlas(&atlas, &phi) {
        Ok(rebuilt) => {
            let iso = correspondences_isomorphic(c, &rebuilt).ok().flatten();
            legs.push(LegResult {
                name: "correspondence -> atlas -> correspondence",
                pass: iso.is_some(),
                residual: 0.0,
            });
        }
        Err(_) => legs.push(LegResult {
            name: "correspondence -> atlas -> correspondence",
            pass: false,
            residual: 1.0,
        }),
    }

    let cartan_direct = cartan_from_twisted(c);
    let issues = cartan_direct.validate(c);
    legs.push(LegResult {
        name: "cartan invariants",
        pass: issues.is_empty(),
        residual: issues.len() as f64,
    });

    // Containment: φ(δ_y) is exactly the sum of its projections.
    let mut containment = 0.0f64;
    for y in 0..phi.images.len() {
        for x in c.base().vertices() {
            let mut sum = CMat::zeros(c.fiber_dim(x), c.fiber_dim(x));
            for &z in cartan_direct.spectrum.fiber(x) {
                if c.range[z] == y {
                    sum += &cartan_direct.projections[z];
                }
            }
            containment = containment.max(fro_norm(&(&phi.images[y][x] - sum)));
        }
    }
    legs.push(LegResult {
        name: "left action contained in cartan",
        pass: containment < 1e-8,
        residual: containment,
    });

    match cartan_from_atlas(&atlas) {
        Ok(cartan_via_atlas) => {
            let conj = cartans_conjugate(&cartan_direct, &cartan_via_atlas, c, &phi)
                .ok()
                .flatten();
            let residual = conj
                .as_ref()
                .map(|field| {
                    crate::correspondence::unitary_field_residuals(c, c, field).0
                })
                .unwrap_or(1.0);
            legs.push(LegResult {
                name: "cartan via atlas conjugate to direct cartan",
                pass: conj.is_some(),
                residual,
            });
        }
        Err(_) => legs.push(LegResult {
            name: "cartan via atlas conjugate to direct cartan",
            pass: false,
            residual: 1.0,
        }),
    }

    match twisted_from_cartan(&cartan_direct, c, &phi) {
        Ok(rebuilt) => {
            let iso = correspondences_isomorphic(c, &rebuilt).ok().flatten();
            legs.push(LegResult {
                name: "correspondence -> cartan -> correspondence",
                pass: iso.is_some(),
                residual: 0.0,
            });
        }
        Err(_) => legs.push(LegResult {
            name: "correspondence -> cartan -> correspondence",
            pass: false,
            residual: 1.0,
        }),
    }

    DiagramReport { legs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::instances::{self, RangeChoice};
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn trivial_double_cover_projections_are_diagonal() {
        let c = instances::example_51_circle();
        let d = cartan_from_twisted(&c);
        for x in c.base().vertices() {
            let fiber = d.spectrum.fiber(x);
            assert!((d.projections[fiber[0]][(0, 0)].re - 1.0).abs() < 1e-14);
            assert!((d.projections[fiber[1]][(1, 1)].re - 1.0).abs() < 1e-14);
        }
        assert!(d.validate(&c).is_empty());
    }

    #[test]
    fn cartan_invariants_hold_on_gallery() {
        for (name, c) in instances::all() {
            let d = cartan_from_twisted(&c);
            let issues = d.validate(&c);
            assert!(issues.is_empty(), "{name}: {issues:?}");
        }
    }

    #[test]
    fn left_action_is_sum_of_projections() {
        for (name, c) in instances::all() {
            let d = cartan_from_twisted(&c);
            let phi = left_action_of(&c);
            for y in 0..c.target.vertex_count() {
                for x in c.base().vertices() {
                    let mut sum = CMat::zeros(c.fiber_dim(x), c.fiber_dim(x));
                    for &z in d.spectrum.fiber(x) {
                        if c.range[z] == y {
                            sum += &d.projections[z];
                        }
                    }
                    assert!(
                        fro_norm(&(&phi.images[y][x] - sum)) < 1e-12,
                        "{name} x={x} y={y}"
                    );
                }
            }
        }
    }

    #[test]
    fn cartan_round_trip_on_gallery() {
        for (name, c) in instances::all() {
            let d = cartan_from_twisted(&c);
            let phi = left_action_of(&c);
            let rebuilt = twisted_from_cartan(&d, &c, &phi).unwrap();
            assert!(
                correspondences_isomorphic(&c, &rebuilt).unwrap().is_some(),
                "{name}"
            );
        }
    }

    #[test]
    fn rotated_cartan_reconstructs_isomorphic_correspondence() {
        // Conjugate the standard Cartan by a constant permutation-phase
        // unitary; the reconstruction stays isomorphic.
        let c = instances::example_51_circle();
        let phi = left_action_of(&c);
        let u = DiagPermUnitary::new(
            crate::group::Permutation::transposition(2, 0, 1),
            vec![C64::new(0.0, 1.0), C64::new(1.0, 0.0)],
        )
        .unwrap()
        .matrix_form();
        let d = cartan_from_twisted(&c);
        // Swapping sheets swaps the range decorations, so rebuild the range
        // off the rotated projections; for the range to stay well defined we
        // also conjugate the left action's reference: here φ is diagonal and
        // the swap exchanges the two marked points, an automorphism of the
        // setup only when the decorations follow. Use a phase-only rotation
        // instead for the φ-compatible case.
        let phase_only = CMat::from_diagonal(&CVec::from_vec(vec![
            C64::new(0.0, 1.0),
            C64::new(std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
        ]));
        let rotated = CartanData {
            spectrum: d.spectrum.clone(),
            projections: d
                .projections
                .iter()
                .map(|p| &phase_only * p * phase_only.adjoint())
                .collect(),
        };
        let rebuilt = twisted_from_cartan(&rotated, &c, &phi).unwrap();
        assert!(correspondences_isomorphic(&c, &rebuilt).unwrap().is_some());
        let _ = u;
    }

    #[test]
    fn branched_input_is_rejected() {
        let c = instances::trivial_covering_ranks(RangeChoice::First);
        let phi = left_action_of(&c);
        // Merge two projections into a rank-2 one on a fake 2-point
        // spectrum over each base vertex: simplest is to reuse a 2-sheet
        // spectrum from another instance over the same base.
        let c2 = instances::example_51_circle();
        let d2 = cartan_from_twisted(&c2);
        let mut projections = d2.projections.clone();
        for x in c2.base().vertices() {
            let fiber = d2.spectrum.fiber(x);
            // First projection absorbs the second: rank 2.
            let merged = &d2.projections[fiber[0]] + &d2.projections[fiber[1]];
            projections[fiber[0]] = merged.clone();
        }
        let branched = CartanData { spectrum: d2.spectrum.clone(), projections };
        let c3 = instances::trivial_covering_ranks(RangeChoice::First);
        let _ = (c3, phi);
        let phi2 = left_action_of(&c2);
        assert!(matches!(
            twisted_from_cartan(&branched, &c2, &phi2),
            Err(CartanError::Branched(..))
        ));
        let _ = c;
    }

    #[test]
    fn cartan_conjugate_to_itself() {
        let c = instances::example_51_circle();
        let d = cartan_from_twisted(&c);
        let phi = left_action_of(&c);
        let field = cartans_conjugate(&d, &d, &c, &phi).unwrap();
        assert!(field.is_some());
    }

    #[test]
    fn phase_gauged_cartan_is_conjugate() {
        let c = instances::example_51_circle();
        let phi = left_action_of(&c);
        let d = cartan_from_twisted(&c);
        let rotation = CMat::from_diagonal(&CVec::from_vec(vec![
            C64::new(0.6, 0.8),
            C64::new(1.0, 0.0),
        ]));
        let rotated = CartanData {
            spectrum: d.spectrum.clone(),
            projections: d
                .projections
                .iter()
                .map(|p| &rotation * p * rotation.adjoint())
                .collect(),
        };
        assert!(cartans_conjugate(&d, &rotated, &c, &phi).unwrap().is_some());
    }

    #[test]
    fn distinct_circle_cover_cartans_are_not_conjugate() {
        // Both Cartans act on the trivial rank-2 module over the circle;
        // their spectra are the two distinct 2-covers, so no conjugacy
        // exists.
        let ambient = instances::circle_cover_correspondence(&[1, 1]);
        let phi = left_action_of(&ambient);
        let d_trivial = cartan_from_twisted(&ambient);

        // The nontrivial-cover Cartan on the same trivial module: a frame
        // rotating by pi/2 around the circle. Its minimal projections swap
        // after a full loop, so the spectrum is the connected double cover;
        // the field is edge-coherent against that cover's pairing.
        let connected = instances::circle_cover_correspondence(&[2]);
        let spectrum = connected.covering.clone();
        let rot = |k: usize| {
            let theta = std::f64::consts::FRAC_PI_2 * (k as f64) / 12.0;
            CMat::from_row_slice(2, 2, &[
                C64::new(theta.cos(), 0.0),
                C64::new(-theta.sin(), 0.0),
                C64::new(theta.sin(), 0.0),
                C64::new(theta.cos(), 0.0),
            ])
        };
        let projections = (0..spectrum.total_count())
            .map(|z| {
                let x = spectrum.base_of(z);
                let sheet = spectrum.sheet_index(z);
                let mut e = CMat::zeros(2, 2);
                e[(sheet, sheet)] = C64::new(1.0, 0.0);
                let u = rot(x);
                &u * e * u.adjoint()
            })
            .collect();
        let d_rotating = CartanData { spectrum, projections };
        assert!(d_rotating.validate(&ambient).is_empty());
        assert!(cartans_conjugate(&d_trivial, &d_rotating, &ambient, &phi)
            .unwrap()
            .is_none());
    }

    #[test]
    fn diagram_commutes_on_trivial_instance() {
        let c = instances::circle_cover_correspondence(&[1, 1]);
        let report = diagram_roundtrip_check(&c);
        assert!(report.pass(), "{:?}", report.legs);
    }

    #[test]
    fn diagram_commutes_on_gallery() {
        for (name, c) in instances::all() {
            let report = diagram_roundtrip_check(&c);
            assert!(report.pass(), "{name}: {:?}", report.legs);
            for leg in &report.legs {
                assert!(leg.residual < 1e-8, "{name} leg {}", leg.name);
            }
        }
    }

    #[test]
    fn diagram_commutes_on_a_twisted_two_sheet_instance() {
        let c = instances::sphere_pair_with_twisted_sheet(0, 1);
        let report = diagram_roundtrip_check(&c);
        assert!(report.pass(), "{:?}", report.legs);
    }

    #[test]
    fn diagram_commutes_under_random_gauges() {
        let mut rng = StdRng::seed_from_u64(50);
        let base_instance = instances::example_51_circle();
        for _ in 0..10 {
            let c = crate::correspondence::perturb_correspondence(&base_instance, &mut rng, 1.0);
            let report = diagram_roundtrip_check(&c);
            assert!(report.pass(), "{:?}", report.legs);
        }
    }
}
