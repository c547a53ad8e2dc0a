//! Normalizing/diagonalizing atlases of the module's vector bundle and the
//! bijection with twisted correspondences: atlas from a correspondence,
//! range-map reconstruction from an atlas, and atlas equivalence.

use crate::bundle::build_twisted_covering;
use crate::cocycle::{Gauge, TransitionSystem};
use crate::correspondence::{
    correspondences_isomorphic, LeftAction, TwistedCorrespondence,
};
use crate::group::DiagPermUnitary;
use crate::linalg::{fro_norm, C64, CMat, TAU_NUM};
use crate::space::SharedSpace;
use std::collections::BTreeMap;
use thiserror::Error;

/// Delta-function eigenvalues are 0 or 1 in exact models; the matching
/// threshold sits at maximal separation.
pub const TAU_MATCH: f64 = 0.5;

#[derive(Debug, Error)]
pub enum AtlasError {
    #[error("derived transition at overlap ({i},{j}) vertex {x} is not monomial")]
    NotNormalizing { i: usize, j: usize, x: usize },
    #[error("atlas does not diagonalize the left action ({0} failures)")]
    NotDiagonalizing(usize),
    #[error("no target vertex matches the eigenvalue of chart {chart} sheet {sheet} at {x}")]
    NoRange { chart: usize, sheet: usize, x: usize },
    #[error("several target vertices match at chart {chart} sheet {sheet} at {x}")]
    AmbiguousRange { chart: usize, sheet: usize, x: usize },
    #[error("eigenvalue functions disagree across charts at vertex {x} (defect {defect:.3e})")]
    WellDefinedness { x: usize, defect: f64 },
    #[error(transparent)]
    Bundle(#[from] crate::bundle::BundleError),
    #[error(transparent)]
    Correspondence(#[from] crate::correspondence::CorrespondenceError),
}

/// Per chart an X-indexed family of orthonormal fiber bases: columns of a
/// unitary in the canonical fiber basis of the module presentation.
#[derive(Debug, Clone)]
pub struct AtlasData {
    pub base: SharedSpace,
    pub charts: Vec<BTreeMap<usize, CMat>>,
}

impl AtlasData {
    pub fn chart_matrix(&self, chart: usize, x: usize) -> &CMat {
        &self.charts[chart][&x]
    }

    /// g_ij(x) = h_i(x)* h_j(x) on the overlap.
    pub fn derived_transition(&self, i: usize, j: usize, x: usize) -> CMat {
        self.charts[i][&x].adjoint() * &self.charts[j][&x]
    }

    /// The derived transitions as a transition system; fails where a
    /// transition is not a diagonal-times-permutation unitary.
    pub fn derived_cocycle(&self) -> Result<TransitionSystem, AtlasError> {
        let degree = self
            .charts
            .iter()
            .flat_map(|m| m.values())
            .map(|h| h.nrows())
            .next()
            .unwrap_or(0);
        let mut system = TransitionSystem::identity(self.base.clone(), degree);
        for (i, j) in self.base.overlapping_pairs() {
            for x in self.base.overlap(i, j) {
                let g = self.derived_transition(i, j, x);
                let element = DiagPermUnitary::from_matrix(&g, 1e-7)
                    .map_err(|_| AtlasError::NotNormalizing { i, j, x })?;
                system.set(i, j, x, element);
            }
        }
        Ok(system)
    }
}

#[derive(Debug, Clone)]
pub struct PredicateReport {
    pub ok: bool,
    /// (chart or overlap data, vertex, residual) for failures.
    pub failures: Vec<(String, usize, f64)>,
}

/// Per overlap vertex, decide whether the derived transition is a
/// permutation-times-diagonal unitary.
pub fn is_normalizing(a: &AtlasData) -> PredicateReport {
    let mut failures = Vec::new();
    for (i, j) in a.base.overlapping_pairs() {
        for x in a.base.overlap(i, j) {
            let g = a.derived_transition(i, j, x);
            if DiagPermUnitary::from_matrix(&g, 1e-7).is_err() {
                // Residual: mass off the dominant entry per column.
                let mut offmass = 0.0f64;
                for k in 0..g.ncols() {
                    let col = g.column(k);
                    let mut best = 0.0f64;
                    let mut total = 0.0f64;
                    for v in col.iter() {
                        let m = v.norm_sqr();
                        total += m;
                        best = best.max(m);
                    }
                    offmass = offmass.max((total - best).sqrt());
                }
                failures.push((format!("overlap ({i},{j})"), x, offmass));
            }
        }
    }
    PredicateReport { ok: failures.is_empty(), failures }
}

/// For every chart vertex and basis column v: v must be an eigenvector of
/// every φ(δ_y)_x, i.e. ‖φv − ⟨v, φv⟩v‖ < τ.
pub fn is_diagonalizing(a: &AtlasData, phi: &LeftAction) -> PredicateReport {
    let mut failures = Vec::new();
    for (chart, xs) in a.charts.iter().enumerate() {
        for (&x, h) in xs {
            for k in 0..h.ncols() {
                let v = h.column(k).into_owned();
                for field in &phi.images {
                    let fv = &field[x] * &v;
                    let lambda: C64 = v.iter().zip(fv.iter()).map(|(a, b)| a.conj() * b).sum();
                    let resid = (&fv - &v * lambda).norm();
                    if resid > TAU_NUM * 100.0 {
                        failures.push((format!("chart {chart} sheet {k}"), x, resid));
                    }
                }
            }
        }
    }
    PredicateReport { ok: failures.is_empty(), failures }
}

/// The canonical atlas of a correspondence: the chart-i basis at x consists
/// of the sheet indicator sections in the chart-i trivialization of ℒ,
/// expressed in the canonical fiber basis.
pub fn atlas_from_correspondence(c: &TwistedCorrespondence) -> AtlasData {
    let base = c.base().clone();
    let mut charts = Vec::with_capacity(base.chart_count());
    for i in 0..base.chart_count() {
        let mut per_vertex = BTreeMap::new();
        for &x in base.chart(i).iter() {
            let fiber = c.covering.fiber(x);
            let n = fiber.len();
            let mut h = CMat::zeros(n, n);
            for k in 0..n {
                let z = c.covering.vertex_at(x, i, k).expect("complete fiber");
                let pos = c.covering.sheet_index(z);
                h[(pos, k)] = c.chart_to_canonical(z, i);
            }
            per_vertex.insert(x, h);
        }
        charts.push(per_vertex);
    }
    AtlasData { base, charts }
}

/// Rebuild the twisted correspondence of a normalizing atlas diagonalizing
/// the left action: the covering and line bundle come from the derived
/// cocycle, and the range of the chart-i sheet-k point over x is the unique
/// target vertex whose delta acts with eigenvalue ~1 on the k-th basis
/// vector.
pub fn range_map_from_atlas(
    a: &AtlasData,
    phi: &LeftAction,
) -> Result<TwistedCorrespondence, AtlasError> {
    let normalizing = is_normalizing(a);
    if !normalizing.ok {
        let (tag, x, _) = &normalizing.failures[0];
        let _ = tag;
        return Err(AtlasError::NotNormalizing { i: 0, j: 0, x: *x });
    }
    let diagonalizing = is_diagonalizing(a, phi);
    if !diagonalizing.ok {
        return Err(AtlasError::NotDiagonalizing(diagonalizing.failures.len()));
    }
    let system = a.derived_cocycle()?;
    let (covering, line) = build_twisted_covering(&system)?;

    // μ_ik(δ_y)(x) = <e_k, h_i(x)* φ(δ_y)_x h_i(x) e_k>.
    let mu = |chart: usize, sheet: usize, x: usize, y: usize| -> f64 {
        let h = a.chart_matrix(chart, x);
        let col = h.column(sheet);
        let fv = &phi.images[y][x] * col;
        col.iter()
            .zip(fv.iter())
            .map(|(av, bv)| (av.conj() * bv).re)
            .sum()
    };

    let mut range = vec![usize::MAX; covering.total_count()];
    for z in 0..covering.total_count() {
        let x = covering.base_of(z);
        let mut chosen: Option<(usize, f64)> = None;
        // Well-definedness: every chart containing z must elect the same
        // target vertex with matching eigenvalue.
        for i in 0..a.base.chart_count() {
            let Some(k) = covering.coord(z, i) else { continue };
            let mut winner: Option<usize> = None;
            for y in 0..phi.images.len() {
                let value = mu(i, k, x, y);
                if value > 1.0 - TAU_MATCH {
                    if winner.is_some() {
                        return Err(AtlasError::AmbiguousRange { chart: i, sheet: k, x });
                    }
                    winner = Some(y);
                }
            }
            let Some(y) = winner else {
                return Err(AtlasError::NoRange { chart: i, sheet: k, x });
            };
            let value = mu(i, k, x, y);
            match chosen {
                None => chosen = Some((y, value)),
                Some((y0, v0)) => {
                    if y0 != y || (v0 - value).abs() > 1e-9 {
                        return Err(AtlasError::WellDefinedness {
                            x,
                            defect: (v0 - value).abs().max(1.0),
                        });
                    }
                }
            }
        }
        range[z] = chosen.expect("every point lies in a chart").0;
    }

    let target = phi.target.clone();
    Ok(TwistedCorrespondence::new(covering, line, target, range)?)
}

/// Search for a 𝒰(N_{D_n})-valued gauge implementing atlas equivalence:
/// g'_ij = r_i⁻¹ g_ij r_j with the induced module map intertwining the left
/// actions. Decided through the correspondence bijection; the witness gauge
/// is assembled from the covering isomorphism.
pub fn atlases_equivalent(
    a: &AtlasData,
    a_prime: &AtlasData,
    phi: &LeftAction,
    phi_prime: &LeftAction,
) -> Result<Option<Gauge>, AtlasError> {
    let c = range_map_from_atlas(a, phi)?;
    let c_prime = range_map_from_atlas(a_prime, phi_prime)?;
    let Some(psi) = correspondences_isomorphic(&c, &c_prime)? else {
        return Ok(None);
    };

    // T(x) maps sheet lines of c to sheet lines of c' along ψ, with unit
    // phases in the least chart; r_i(x) = h_i(x)* T(x)* h'_i(x).
    let degree = c.covering.sheets;
    let mut gauge = Gauge::identity(a.base.clone(), degree);
    for x in a.base.vertices() {
        let i0 = (0..a.base.chart_count())
            .find(|&i| a.base.chart(i).contains(&x))
            .expect("cover");
        let mut t = CMat::zeros(degree, degree);
        for k in 0..degree {
            let z = c.covering.vertex_at(x, i0, k).expect("complete fiber");
            let w = psi[z];
            let pos_from = c.covering.sheet_index(z);
            let pos_to = c_prime.covering.sheet_index(w);
            t[(pos_to, pos_from)] = C64::new(1.0, 0.0);
        }
        for i in 0..a.base.chart_count() {
            if !a.base.chart(i).contains(&x) {
                continue;
            }
            let r = a.chart_matrix(i, x).adjoint() * t.adjoint() * a_prime.chart_matrix(i, x);
            let element = DiagPermUnitary::from_matrix(&r, 1e-7)
                .map_err(|_| AtlasError::NotNormalizing { i, j: i, x })?;
            gauge.set(i, x, element);
        }
    }
    Ok(Some(gauge))
}

/// The per-chart tables of eigenvalue functions μ_ik(δ_y): one row per
/// (vertex, sheet) with the eigenvalue of every target delta on the k-th
/// basis vector. The report format for atlas diagnostics.
pub fn eigenvalue_tables(a: &AtlasData, phi: &LeftAction) -> String {
    let mut out = String::new();
    for (chart, xs) in a.charts.iter().enumerate() {
        out.push_str(&format!("chart {chart}\n"));
        for (&x, h) in xs {
            for k in 0..h.ncols() {
                let col = h.column(k);
                let values: Vec<String> = phi
                    .images
                    .iter()
                    .enumerate()
                    .map(|(y, field)| {
                        let fv = &field[x] * col;
                        let mu: C64 =
                            col.iter().zip(fv.iter()).map(|(a, b)| a.conj() * b).sum();
                        format!("mu_{k}(d_{}) = {:.3}", phi.target.label(y), mu.re)
                    })
                    .collect();
                out.push_str(&format!(
                    "  {} sheet {k}: {}\n",
                    a.base.label(x),
                    values.join(", ")
                ));
            }
        }
    }
    out
}

/// Largest residual of g'_ij(x) - r_i(x)⁻¹ g_ij(x) r_j(x) over the
/// overlaps; zero for a correct equivalence witness.
pub fn gauge_equivalence_residual(a: &AtlasData, a_prime: &AtlasData, gauge: &Gauge) -> f64 {
    let mut worst = 0.0f64;
    for (i, j) in a.base.overlapping_pairs() {
        for x in a.base.overlap(i, j) {
            let g = a.derived_transition(i, j, x);
            let g_prime = a_prime.derived_transition(i, j, x);
            let ri = gauge.value(i, x).matrix_form();
            let rj = gauge.value(j, x).matrix_form();
            worst = worst.max(fro_norm(&(ri.adjoint() * g * rj - g_prime)));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::random_gauge;
    use crate::correspondence::left_action_of;
    use crate::gallery::instances::{self, RangeChoice};
    use crate::linalg::is_unitary;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn canonical_atlas_passes_both_predicates() {
        for (name, c) in instances::all() {
            let atlas = atlas_from_correspondence(&c);
            for (chart, xs) in atlas.charts.iter().enumerate() {
                for h in xs.values() {
                    assert!(is_unitary(h, 1e-9), "{name} chart {chart}");
                }
            }
            assert!(is_normalizing(&atlas).ok, "{name}");
            let phi = left_action_of(&c);
            assert!(is_diagonalizing(&atlas, &phi).ok, "{name}");
        }
    }

    #[test]
    fn derived_cocycle_reproduces_the_generating_one() {
        for (name, c) in instances::all() {
            let atlas = atlas_from_correspondence(&c);
            let derived = atlas.derived_cocycle().unwrap();
            let original = crate::bundle::reassemble_cocycle(&c.covering, &c.line);
            for (&(i, j), map) in original.stored() {
                for (&x, g) in map {
                    let d = derived.value(i, j, x).unwrap();
                    assert!(d.approx_eq(g, 1e-9), "{name} at ({i},{j},{x})");
                }
            }
        }
    }

    #[test]
    fn hadamard_chart_is_not_normalizing() {
        let c = instances::example_51_circle();
        let mut atlas = atlas_from_correspondence(&c);
        let h = CMat::from_row_slice(2, 2, &[
            C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            C64::new(-std::f64::consts::FRAC_1_SQRT_2, 0.0),
        ]);
        // Rotate chart 0 by a Hadamard on an overlap vertex.
        let x = c.base().overlap(0, 1)[0];
        let rotated = atlas.charts[0][&x].clone() * &h;
        atlas.charts[0].insert(x, rotated);
        assert!(!is_normalizing(&atlas).ok);

        let phi = left_action_of(&c);
        // The rotated basis also stops diagonalizing (eigenvalues differ).
        assert!(!is_diagonalizing(&atlas, &phi).ok);
    }

    #[test]
    fn identity_action_is_diagonalized_by_any_atlas() {
        let c = instances::circle_cover_correspondence(&[2]);
        let phi = left_action_of(&c);
        let mut atlas = atlas_from_correspondence(&c);
        // Any unitary rotation keeps diagonalizing a scalar action.
        let h = CMat::from_row_slice(2, 2, &[
            C64::new(0.6, 0.0),
            C64::new(0.8, 0.0),
            C64::new(-0.8, 0.0),
            C64::new(0.6, 0.0),
        ]);
        for xs in atlas.charts.iter_mut() {
            for m in xs.values_mut() {
                *m = m.clone() * &h;
            }
        }
        assert!(is_diagonalizing(&atlas, &phi).ok);
    }

    #[test]
    fn example_51_range_reconstruction() {
        let c = instances::example_51_circle();
        let atlas = atlas_from_correspondence(&c);
        let phi = left_action_of(&c);
        let rebuilt = range_map_from_atlas(&atlas, &phi).unwrap();
        // Trivial 2-cover with the two marked points as range.
        assert_eq!(rebuilt.covering.component_count(), 2);
        let mut points: Vec<usize> = rebuilt.range.clone();
        points.sort_unstable();
        points.dedup();
        assert_eq!(
            points,
            vec![instances::EXAMPLE_51_POINTS.0, instances::EXAMPLE_51_POINTS.1]
        );
        assert!(correspondences_isomorphic(&c, &rebuilt).unwrap().is_some());
    }

    #[test]
    fn point_target_reconstruction_always_succeeds() {
        let c = instances::circle_cover_correspondence(&[3]);
        let atlas = atlas_from_correspondence(&c);
        let phi = left_action_of(&c);
        let rebuilt = range_map_from_atlas(&atlas, &phi).unwrap();
        assert!(rebuilt.range.iter().all(|&y| y == 0));
    }

    #[test]
    fn atlas_round_trip_on_gallery() {
        for (name, c) in instances::all() {
            let atlas = atlas_from_correspondence(&c);
            let phi = left_action_of(&c);
            let rebuilt = range_map_from_atlas(&atlas, &phi).unwrap();
            assert!(
                correspondences_isomorphic(&c, &rebuilt).unwrap().is_some(),
                "{name}"
            );
        }
    }

    #[test]
    fn atlas_equivalent_to_itself() {
        let c = instances::example_51_circle();
        let atlas = atlas_from_correspondence(&c);
        let phi = left_action_of(&c);
        let gauge = atlases_equivalent(&atlas, &atlas, &phi, &phi).unwrap().unwrap();
        assert!(gauge_equivalence_residual(&atlas, &atlas, &gauge) < 1e-9);
    }

    #[test]
    fn gauge_perturbed_atlas_is_recovered() {
        let mut rng = StdRng::seed_from_u64(40);
        let c = instances::example_51_circle();
        let atlas = atlas_from_correspondence(&c);
        let phi = left_action_of(&c);
        for _ in 0..5 {
            // Plant a gauge with trivial permutation part so the left action
            // is intertwined (phases act within eigenlines).
            let planted = random_gauge(c.base().clone(), 2, &mut rng, 1.0);
            let planted = Gauge {
                base: planted.base.clone(),
                degree: planted.degree,
                maps: planted
                    .maps
                    .iter()
                    .map(|m| {
                        m.iter()
                            .map(|(&x, g)| {
                                (x, DiagPermUnitary::from_phases(g.phases.clone()))
                            })
                            .collect()
                    })
                    .collect(),
            };
            let mut perturbed = atlas.clone();
            for (i, xs) in perturbed.charts.iter_mut().enumerate() {
                for (&x, h) in xs.iter_mut() {
                    *h = h.clone() * planted.value(i, x).matrix_form();
                }
            }
            assert!(is_normalizing(&perturbed).ok);
            assert!(is_diagonalizing(&perturbed, &phi).ok);
            let gauge = atlases_equivalent(&atlas, &perturbed, &phi, &phi)
                .unwrap()
                .expect("gauge-perturbed atlas stays equivalent");
            assert!(gauge_equivalence_residual(&atlas, &perturbed, &gauge) < 1e-9);
            // The planted gauge had trivial permutation parts; the recovered
            // one matches it up to fiberwise phases.
            for chart in 0..atlas.base.chart_count() {
                for &x in atlas.base.chart(chart).iter() {
                    assert!(gauge.value(chart, x).perm.is_identity());
                }
            }
        }
    }

    #[test]
    fn distinct_circle_covers_give_inequivalent_atlases() {
        let a = instances::circle_cover_correspondence(&[1, 1]);
        let b = instances::circle_cover_correspondence(&[2]);
        let atlas_a = atlas_from_correspondence(&a);
        let atlas_b = atlas_from_correspondence(&b);
        let phi_a = left_action_of(&a);
        let phi_b = left_action_of(&b);
        assert!(atlases_equivalent(&atlas_a, &atlas_b, &phi_a, &phi_b)
            .unwrap()
            .is_none());
    }

    #[test]
    fn eigenvalue_table_reports_the_delta_values() {
        let c = instances::example_51_circle();
        let atlas = atlas_from_correspondence(&c);
        let phi = left_action_of(&c);
        let table = eigenvalue_tables(&atlas, &phi);
        assert!(table.contains("chart 0"));
        assert!(table.contains("v0 sheet 0: mu_0(d_v0) = 1.000"));
        assert!(table.contains("mu_0(d_v6) = 0.000"));
    }

    #[test]
    fn range_uniqueness_for_fixed_atlas() {
        let c = instances::different_ranges(RangeChoice::First);
        let atlas = atlas_from_correspondence(&c);
        let phi = left_action_of(&c);
        let first = range_map_from_atlas(&atlas, &phi).unwrap();
        let second = range_map_from_atlas(&atlas, &phi).unwrap();
        assert_eq!(first.range, second.range);
    }
}
