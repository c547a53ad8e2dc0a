//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line. Run with `cargo test --test acceptance -- --nocapture` to see the
//! lines for passing criteria too.

use cechcorr::bundle::{build_covering, coverings_isomorphic, reassemble_cocycle, LineBundle};
use cechcorr::cartan::diagram_roundtrip_check;
use cechcorr::cocycle::{
    apply_gauge, random_gauge, random_permutation_gauge, sn_gauge_equivalent, verify_cocycle,
    TransitionSystem,
};
use cechcorr::cohomology::{chern_class, cohomology_groups, tensor};
use cechcorr::correspondence::{
    correspondences_isomorphic, cstar_correspondences_isomorphic, default_partition,
    frame_sections, left_action_of, max_frame_residual, perturb_correspondence,
    spectrum_law_residual, unitary_field_residuals,
};
use cechcorr::gallery::{bundles, instances, spaces};
use cechcorr::group::{partitions, DiagPermUnitary, Permutation};
use cechcorr::linalg::{
    fro_norm, offdiag_residual, random_unitary, simultaneous_diagonalize, smith_normal_form,
    IntMat, Tolerances, C64, CMat, CVec,
};
use cechcorr::reconstruct::{
    constant_rank_iso_check, double_commutant_spectrum, generated_subalgebra_spectrum,
    reconstructed_graphs_isomorphic, spectra_iso_iota_phi, RankAlgebra,
};
use num_bigint::BigInt;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::sync::Arc;

fn report(criterion: &str, pass: bool) {
    println!("criterion {criterion}: {}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {criterion} failed");
}

/// 1. Circle classification: exactly p(n) pairwise non-isomorphic coverings
/// for n = 1..5, and every 𝕋-cocycle over the 3-arc circle cover has zero
/// Chern class.
#[test]
fn criterion_01_circle_classification() {
    let expected = [1usize, 2, 3, 5, 7];
    let mut pass = true;
    for (n, &count) in (1..=5).zip(&expected) {
        let covers = instances::classify_circle(n);
        pass &= covers.len() == count;
        for i in 0..covers.len() {
            for j in (i + 1)..covers.len() {
                pass &= coverings_isomorphic(&covers[i].1, &covers[j].1)
                    .unwrap()
                    .is_none();
            }
        }
    }
    let circle = Arc::new(spaces::circle());
    let (_, _, h2) = cohomology_groups(&circle).unwrap();
    pass &= h2.betti == 0 && h2.torsion.is_empty();
    let mut rng = StdRng::seed_from_u64(101);
    for _ in 0..20 {
        let l0 = TransitionSystem::identity(circle.clone(), 1);
        let gauge = random_gauge(circle.clone(), 1, &mut rng, 1.5);
        let l = apply_gauge(&l0, &gauge).unwrap();
        pass &= chern_class(&l).unwrap().is_zero();
    }
    report("1 (circle classification, p(n) = 1,2,3,5,7; H2(S1) = 0)", pass);
}

/// 2. S² Chern numbers: the winding-w clutching cocycle has class
/// w · generator exactly, and tensoring adds classes.
#[test]
fn criterion_02_sphere_chern_numbers() {
    let mut pass = true;
    for w in -2..=2i64 {
        let class = chern_class(&bundles::sphere_clutching(w)).unwrap();
        pass &= class.torsion.is_empty();
        pass &= class.free_coordinate() == Some(&BigInt::from(w));
    }
    for (w1, w2) in [(1i64, 1i64), (-1, 2), (-2, 1), (2, -2)] {
        let product = tensor(
            &bundles::sphere_clutching(w1),
            &bundles::sphere_clutching(w2),
        )
        .unwrap();
        let class = chern_class(&product).unwrap();
        pass &= class.free_coordinate() == Some(&BigInt::from(w1 + w2));
    }
    report("2 (S2 clutching class = w, additive under tensor)", pass);
}

/// 3. ℝP² nontriviality: H² = Z/2, the π₋ class is the nonzero element, the
/// π₊ class vanishes.
#[test]
fn criterion_03_projective_plane_torsion() {
    let mut pass = true;
    let (_, _, h2) = cohomology_groups(&spaces::projective_plane()).unwrap();
    pass &= h2.betti == 0 && h2.torsion == vec![BigInt::from(2)];
    let minus = chern_class(&bundles::rp2_sign_bundle()).unwrap();
    pass &= !minus.is_zero();
    pass &= minus.torsion == vec![(BigInt::from(1), BigInt::from(2))];
    pass &= minus.free.iter().all(|v| v == &BigInt::from(0));
    let plus = chern_class(&bundles::rp2_trivial_bundle()).unwrap();
    pass &= plus.is_zero();
    report("3 (RP2: H2 = Z/2, pi-minus class nonzero, pi-plus zero)", pass);
}

/// 4. Eigenvalue law: the spectrum of φ(δ_y)_x equals {δ_y(r(z))} within
/// 1e-9 on every gallery correspondence.
#[test]
fn criterion_04_eigenvalue_law() {
    let mut pass = true;
    for (name, c) in instances::all() {
        let residual = spectrum_law_residual(&c);
        if residual >= 1e-9 {
            println!("  {name}: residual {residual:.2e}");
            pass = false;
        }
    }
    report("4 (left-action spectrum law within 1e-9)", pass);
}

/// 5. Frame identity: reconstruction residual below 1e-9 on 100 random
/// sections per gallery instance.
#[test]
fn criterion_05_frame_identity() {
    let mut rng = StdRng::seed_from_u64(105);
    let mut pass = true;
    for (name, c) in instances::all() {
        let partition = default_partition(c.base());
        let frames = frame_sections(&c, &partition).unwrap();
        let sections: Vec<Vec<C64>> = (0..100)
            .map(|_| {
                (0..c.covering.total_count())
                    .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                    .collect()
            })
            .collect();
        let residual = max_frame_residual(&c, &frames, sections);
        if residual >= 1e-9 {
            println!("  {name}: residual {residual:.2e}");
            pass = false;
        }
    }
    report("5 (frame reconstruction residual < 1e-9, 100 sections/instance)", pass);
}

/// 6. Diagram commutativity on every gallery instance and on 50 randomized
/// gauge perturbations, residuals below 1e-8.
#[test]
fn criterion_06_diagram_commutativity() {
    let mut pass = true;
    let gallery = instances::all();
    for (name, c) in &gallery {
        let result = diagram_roundtrip_check(c);
        if !result.pass() || result.legs.iter().any(|l| l.residual >= 1e-8) {
            println!("  {name}: {:?}", result.legs);
            pass = false;
        }
    }
    let mut rng = StdRng::seed_from_u64(106);
    let mut runs = 0;
    'outer: loop {
        for (name, c) in &gallery {
            if runs == 50 {
                break 'outer;
            }
            runs += 1;
            let perturbed = perturb_correspondence(c, &mut rng, 1.0);
            let result = diagram_roundtrip_check(&perturbed);
            if !result.pass() || result.legs.iter().any(|l| l.residual >= 1e-8) {
                println!("  perturbed {name}: {:?}", result.legs);
                pass = false;
            }
        }
    }
    report("6 (diagram commutes on gallery + 50 gauge perturbations)", pass);
}

/// 7. Range reconstruction on the two-point circle example: the atlas route
/// returns the trivial 2-cover with exactly the two marked range points.
#[test]
fn criterion_07_range_reconstruction() {
    let c = instances::example_51_circle();
    let atlas = cechcorr::atlas::atlas_from_correspondence(&c);
    let phi = left_action_of(&c);
    let rebuilt = cechcorr::atlas::range_map_from_atlas(&atlas, &phi).unwrap();
    let mut pass = rebuilt.covering.component_count() == 2;
    pass &= rebuilt.covering.sheets == 2;
    // The rebuilt covering is the trivial one: its cocycle is an S_2-gauge
    // transform of the identity cocycle.
    let trivial = TransitionSystem::identity(c.base().clone(), 2);
    let rebuilt_system = reassemble_cocycle(&rebuilt.covering, &rebuilt.line);
    pass &= rebuilt_system.is_phase_free(1e-12);
    pass &= sn_gauge_equivalent(&rebuilt_system, &trivial);
    // Exactly the two marked points, one per component.
    let mut points: Vec<usize> = rebuilt.range.clone();
    points.sort_unstable();
    points.dedup();
    pass &= points == vec![instances::EXAMPLE_51_POINTS.0, instances::EXAMPLE_51_POINTS.1];
    pass &= correspondences_isomorphic(&c, &rebuilt).unwrap().is_some();
    report("7 (range reconstruction recovers the two-point trivial 2-cover)", pass);
}

/// 8. §5.3 spectra: the 41-vertex wedge with a decorated isomorphism
/// between the two range maps, the double commutant unglues to the trivial
/// 2-cover whose decorated graphs differ, and the square example keeps
/// D'' = D.
#[test]
fn criterion_08_reconstruction_spectra() {
    use instances::RangeChoice;
    let mut pass = true;

    let a = instances::different_ranges(RangeChoice::First);
    let b = instances::different_ranges(RangeChoice::Second);
    let gen_a = generated_subalgebra_spectrum(&a);
    let gen_b = generated_subalgebra_spectrum(&b);
    pass &= gen_a.vertex_count() == 41 && gen_b.vertex_count() == 41;
    pass &= spectra_iso_iota_phi(&gen_a, &gen_b).is_some();

    let dc_a = double_commutant_spectrum(&a);
    let dc_b = double_commutant_spectrum(&b);
    pass &= dc_a.vertex_count() == 42 && dc_b.vertex_count() == 42;
    for x in a.base().vertices() {
        pass &= dc_a.fiber_count(x) == 2 && dc_b.fiber_count(x) == 2;
    }
    // As coverings both are trivial; decorated with the ranges they differ.
    pass &= !reconstructed_graphs_isomorphic(&dc_a, &dc_b);
    pass &= reconstructed_graphs_isomorphic(&dc_a, &dc_a);

    for choice in [RangeChoice::First, RangeChoice::Second] {
        let c = instances::square_example(choice);
        let gen = generated_subalgebra_spectrum(&c);
        let dc = double_commutant_spectrum(&c);
        pass &= gen.vertex_count() == dc.vertex_count();
    }
    report("8 (wedge spectra, double-commutant reconstruction, square D''=D)", pass);
}

/// 9. Rigidity pair: the plateau graphs are non-isomorphic while their
/// C*-correspondences are isomorphic, with both certificates of the rank
/// criterion.
#[test]
fn criterion_09_rigidity_pair() {
    use instances::RangeChoice;
    let a = instances::plateau(RangeChoice::First);
    let b = instances::plateau(RangeChoice::Second);
    let mut pass = correspondences_isomorphic(&a, &b).unwrap().is_none();
    match cstar_correspondences_isomorphic(&a, &b).unwrap() {
        Some(field) => {
            let (u, i) = unitary_field_residuals(&a, &b, &field);
            pass &= u < 1e-9 && i < 1e-9;
        }
        None => pass = false,
    }
    let verdict = constant_rank_iso_check(&a, &b, RankAlgebra::Auto).unwrap();
    pass &= verdict.locally_conjugate && verdict.bundles_match && verdict.isomorphic;
    report("9 (plateau pair: graphs differ, C*-correspondences agree)", pass);
}

/// 10. Appendix A round trips on 200 random S_n-cocycles over the circle
/// and sphere models.
#[test]
fn criterion_10_appendix_round_trips() {
    let mut rng = StdRng::seed_from_u64(110);
    let circle = Arc::new(spaces::circle());
    let sphere = Arc::new(spaces::sphere());
    let mut pass = true;
    for trial in 0..200 {
        let n = rng.gen_range(1..=5);
        let t0 = if trial % 2 == 0 {
            let parts = partitions(n);
            let cycle_type = parts[rng.gen_range(0..parts.len())].clone();
            cechcorr::cocycle::monodromy_system(
                circle.clone(),
                Permutation::from_cycle_type(n, &cycle_type),
                (0, 2),
            )
        } else {
            TransitionSystem::identity(sphere.clone(), n)
        };
        let gauge = random_permutation_gauge(t0.base.clone(), n, &mut rng);
        let t = apply_gauge(&t0, &gauge).unwrap();
        if !verify_cocycle(&t).valid {
            pass = false;
            continue;
        }
        let covering = build_covering(&t).unwrap();
        let extracted =
            reassemble_cocycle(&covering, &LineBundle::trivial(Arc::new(covering.clone())));
        pass &= sn_gauge_equivalent(&t, &extracted);
        let covering2 = build_covering(&extracted).unwrap();
        pass &= coverings_isomorphic(&covering, &covering2).unwrap().is_some();
        if !pass {
            println!("  failed at trial {trial} (n = {n})");
            break;
        }
    }
    report("10 (200 random S_n-cocycle round trips)", pass);
}

/// 11. Kernel properties: matrix homomorphism residual < 1e-12 on 1000
/// pairs, exact SNF identities, joint diagonalization residual < 1e-8 on
/// 200 commuting families.
#[test]
fn criterion_11_kernel_properties() {
    let mut rng = StdRng::seed_from_u64(111);
    let mut pass = true;

    for _ in 0..1000 {
        let g = DiagPermUnitary::random(4, &mut rng);
        let h = DiagPermUnitary::random(4, &mut rng);
        let lhs = g.compose(&h).unwrap().matrix_form();
        let rhs = g.matrix_form() * h.matrix_form();
        if fro_norm(&(lhs - rhs)) >= 1e-12 {
            pass = false;
        }
    }

    for _ in 0..50 {
        let rows = rng.gen_range(1..6);
        let cols = rng.gen_range(1..6);
        let mut m = IntMat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = BigInt::from(rng.gen_range(-9i64..10));
            }
        }
        let snf = smith_normal_form(&m);
        let product = snf.left.mul(&m).mul(&snf.right);
        for i in 0..rows {
            for j in 0..cols {
                let expect = if i == j && i < snf.diag.len() {
                    snf.diag[i].clone()
                } else {
                    BigInt::from(0)
                };
                if product[(i, j)] != expect {
                    pass = false;
                }
            }
        }
        for w in snf.diag.windows(2) {
            if !num_traits::Zero::is_zero(&(&w[1] % &w[0])) {
                pass = false;
            }
        }
        let det_l = snf.left.det();
        let det_r = snf.right.det();
        let one = BigInt::from(1);
        let minus_one = BigInt::from(-1);
        pass &= (det_l == one || det_l == minus_one) && (det_r == one || det_r == minus_one);
    }

    let tol = Tolerances::default();
    for _ in 0..200 {
        let n = rng.gen_range(2..=6);
        let members = rng.gen_range(2..=3);
        let u = random_unitary(n, &mut rng);
        let family: Vec<CMat> = (0..members)
            .map(|_| {
                let d = CMat::from_diagonal(&CVec::from_vec(
                    (0..n)
                        .map(|_| C64::new(rng.gen_range(-3..4) as f64, 0.0))
                        .collect(),
                ));
                &u * d * u.adjoint()
            })
            .collect();
        let (joint_u, _) = simultaneous_diagonalize(&family, &tol).unwrap();
        if offdiag_residual(&joint_u, &family) >= 1e-8 {
            pass = false;
        }
    }
    report("11 (kernel: homomorphism 1e-12, SNF exact, simdiag 1e-8)", pass);
}
