//! The worked examples: fixed finite models of S¹, the interval, the square,
//! S² and ℝP², with their covers, bundles and correspondences.

pub mod spaces {
    use crate::space::CechSpace;
    use std::collections::{BTreeMap, BTreeSet};

    /// S¹ as a 12-gon with three arcs of five consecutive vertices; the
    /// arcs overlap in single vertices and there is no triple overlap.
    pub fn circle() -> CechSpace {
        let labels = (0..12).map(|i| format!("v{i}")).collect();
        let edges = (0..12).map(|i| (i, (i + 1) % 12)).collect();
        let charts = vec![
            vec![0, 1, 2, 3, 4],
            vec![4, 5, 6, 7, 8],
            vec![8, 9, 10, 11, 0],
        ];
        CechSpace::new("circle", labels, edges, charts).unwrap()
    }

    /// A circle with `n` vertices and the same three-arc cover layout,
    /// for scaling experiments. `n` must be a multiple of 12.
    pub fn circle_sized(n: usize) -> CechSpace {
        assert!(n >= 12 && n % 12 == 0);
        let labels = (0..n).map(|i| format!("v{i}")).collect();
        let edges = (0..n).map(|i| (i, (i + 1) % n)).collect();
        let third = n / 3;
        let charts = vec![
            (0..=third).collect(),
            (third..=2 * third).collect(),
            (2 * third..n).chain([0]).collect(),
        ];
        CechSpace::new(&format!("circle{n}"), labels, edges, charts).unwrap()
    }

    /// [-1, 1] as a 21-vertex path, midpoint at parameter 0, two charts.
    pub fn interval() -> CechSpace {
        let labels = (0..21).map(|i| format!("{:.1}", (i as f64 - 10.0) / 10.0)).collect();
        let edges = (0..20).map(|i| (i, i + 1)).collect();
        let charts = vec![(0..=11).collect(), (9..=20).collect()];
        CechSpace::new("interval", labels, edges, charts).unwrap()
    }

    /// Parameter of an interval vertex.
    pub fn interval_param(i: usize) -> f64 {
        (i as f64 - 10.0) / 10.0
    }

    /// [-1,1]² as a 21x21 grid with 4-neighbor adjacency and four
    /// quadrant charts overlapping in strips.
    pub fn square() -> CechSpace {
        let idx = |ix: usize, iy: usize| ix * 21 + iy;
        let mut labels = vec![String::new(); 21 * 21];
        let mut edges = Vec::new();
        for ix in 0..21 {
            for iy in 0..21 {
                labels[idx(ix, iy)] = format!(
                    "{:.1},{:.1}",
                    (ix as f64 - 10.0) / 10.0,
                    (iy as f64 - 10.0) / 10.0
                );
                if ix + 1 < 21 {
                    edges.push((idx(ix, iy), idx(ix + 1, iy)));
                }
                if iy + 1 < 21 {
                    edges.push((idx(ix, iy), idx(ix, iy + 1)));
                }
            }
        }
        let block = |xs: std::ops::RangeInclusive<usize>, ys: std::ops::RangeInclusive<usize>| {
            let mut chart = Vec::new();
            for ix in xs {
                for iy in ys.clone() {
                    chart.push(idx(ix, iy));
                }
            }
            chart
        };
        let charts = vec![
            block(0..=11, 0..=11),
            block(0..=11, 9..=20),
            block(9..=20, 0..=11),
            block(9..=20, 9..=20),
        ];
        CechSpace::new("square", labels, edges, charts).unwrap()
    }

    /// Grid index of the square model.
    pub fn square_index(ix: usize, iy: usize) -> usize {
        ix * 21 + iy
    }

    /// A triangulated closed surface, subdivided so that the open stars of
    /// the original vertices form a good cover whose nerve is the original
    /// complex. Subdivision vertices are the original vertices, one midpoint
    /// per edge and one center per face.
    pub struct SurfaceModel {
        pub space: CechSpace,
        pub corner: Vec<usize>,
        pub midpoint: BTreeMap<(usize, usize), usize>,
        pub center: BTreeMap<(usize, usize, usize), usize>,
        pub faces: Vec<(usize, usize, usize)>,
    }

    pub fn subdivided_surface(
        name: &str,
        vertex_names: &[&str],
        faces: &[(usize, usize, usize)],
    ) -> SurfaceModel {
        let n = vertex_names.len();
        let mut labels: Vec<String> = vertex_names.iter().map(|s| s.to_string()).collect();
        let corner: Vec<usize> = (0..n).collect();

        let mut edge_set: BTreeSet<(usize, usize)> = BTreeSet::new();
        for &(a, b, c) in faces {
            edge_set.insert((a.min(b), a.max(b)));
            edge_set.insert((b.min(c), b.max(c)));
            edge_set.insert((a.min(c), a.max(c)));
        }
        let mut midpoint = BTreeMap::new();
        for &(a, b) in &edge_set {
            midpoint.insert((a, b), labels.len());
            labels.push(format!("m.{}.{}", vertex_names[a], vertex_names[b]));
        }
        let mut center = BTreeMap::new();
        let mut sorted_faces = Vec::new();
        for &(a, b, c) in faces {
            let mut t = [a, b, c];
            t.sort_unstable();
            let key = (t[0], t[1], t[2]);
            center.insert(key, labels.len());
            labels.push(format!(
                "c.{}.{}.{}",
                vertex_names[t[0]], vertex_names[t[1]], vertex_names[t[2]]
            ));
            sorted_faces.push(key);
        }

        let mid = |a: usize, b: usize| midpoint[&(a.min(b), a.max(b))];
        let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut add = |a: usize, b: usize| {
            edges.insert((a.min(b), a.max(b)));
        };
        for &(a, b, c) in &sorted_faces {
            let f = center[&(a, b, c)];
            for (u, v) in [(a, b), (b, c), (a, c)] {
                add(u, mid(u, v));
                add(v, mid(u, v));
                add(mid(u, v), f);
            }
            add(a, f);
            add(b, f);
            add(c, f);
        }

        let mut charts = Vec::new();
        for v in 0..n {
            let mut chart = vec![corner[v]];
            for (&(a, b), &m) in &midpoint {
                if a == v || b == v {
                    chart.push(m);
                }
            }
            for (&(a, b, c), &f) in &center {
                if a == v || b == v || c == v {
                    chart.push(f);
                }
            }
            charts.push(chart);
        }

        let space =
            CechSpace::new(name, labels, edges.into_iter().collect(), charts).unwrap();
        SurfaceModel { space, corner, midpoint, center, faces: sorted_faces }
    }

    /// Vertices of the octahedron: 0 = N, 1 = S, 2..5 = equator at
    /// longitudes 0°, 90°, 180°, 270°.
    pub const OCTA_FACES: [(usize, usize, usize); 8] = [
        (0, 2, 3),
        (0, 3, 4),
        (0, 4, 5),
        (0, 2, 5),
        (1, 2, 3),
        (1, 3, 4),
        (1, 4, 5),
        (1, 2, 5),
    ];

    pub fn sphere_model() -> SurfaceModel {
        subdivided_surface("sphere", &["N", "S", "E0", "E1", "E2", "E3"], &OCTA_FACES)
    }

    /// S² as the subdivided octahedron with the six vertex-star charts.
    pub fn sphere() -> CechSpace {
        sphere_model().space
    }

    /// The minimal 6-vertex triangulation of ℝP² (antipodal quotient of the
    /// icosahedron): every vertex pair is an edge, 10 faces.
    pub const RP2_FACES: [(usize, usize, usize); 10] = [
        (0, 1, 2),
        (0, 2, 3),
        (0, 3, 4),
        (0, 4, 5),
        (0, 1, 5),
        (1, 2, 4),
        (1, 3, 4),
        (2, 4, 5),
        (1, 3, 5),
        (2, 3, 5),
    ];

    pub fn projective_plane_model() -> SurfaceModel {
        subdivided_surface("rp2", &["p1", "p2", "p3", "p4", "p5", "p6"], &RP2_FACES)
    }

    pub fn projective_plane() -> CechSpace {
        projective_plane_model().space
    }

    /// A single point.
    pub fn point() -> CechSpace {
        CechSpace::new("point", vec!["pt".into()], vec![], vec![vec![0]]).unwrap()
    }

    /// The two-point discrete space.
    pub fn two_points() -> CechSpace {
        CechSpace::new(
            "two-points",
            vec!["y1".into(), "y2".into()],
            vec![],
            vec![vec![0], vec![1]],
        )
        .unwrap()
    }
}

pub mod bundles {
    use super::spaces::{self, SurfaceModel};
    use crate::cocycle::TransitionSystem;
    use crate::group::{DiagPermUnitary, Permutation};
    use crate::linalg::C64;
    use std::collections::BTreeMap;
    use std::sync::Arc;

    /// Longitudes of the southern equatorial band of the octahedron model:
    /// the midpoints m(S,E_i) sit at the longitude of E_i, the southern face
    /// centers midway between their two equatorial vertices.
    fn southern_band_angles(model: &SurfaceModel) -> BTreeMap<usize, f64> {
        let quarter = std::f64::consts::FRAC_PI_2;
        let mut angles = BTreeMap::new();
        for (e, angle) in [(2usize, 0.0), (3, quarter), (4, 2.0 * quarter), (5, 3.0 * quarter)] {
            angles.insert(model.midpoint[&(1, e)], angle);
        }
        angles.insert(model.center[&(1, 2, 3)], 0.5 * quarter);
        angles.insert(model.center[&(1, 3, 4)], 1.5 * quarter);
        angles.insert(model.center[&(1, 4, 5)], 2.5 * quarter);
        angles.insert(model.center[&(1, 2, 5)], 3.5 * quarter);
        angles
    }

    /// The line bundle of winding `w` over the octahedral S²: charts
    /// N, E0..E3 trivialize from the north, S from the south, and the
    /// clutching phase exp(i w α) sits on the southern overlaps. Needs
    /// |w| <= 3 to respect the resolution condition.
    pub fn sphere_clutching(w: i64) -> TransitionSystem {
        assert!(w.abs() <= 3, "winding {w} aliases on the octahedral sample");
        let model = spaces::sphere_model();
        let angles = southern_band_angles(&model);
        let space = Arc::new(model.space);
        let mut system = TransitionSystem::identity(space.clone(), 1);
        for chart in 2..=5 {
            for z in space.overlap(1, chart) {
                let alpha = angles[&z];
                let theta = w as f64 * alpha;
                system.set(1, chart, z, DiagPermUnitary::phase(C64::new(theta.cos(), theta.sin())));
            }
        }
        system
    }

    /// The southern band in equator order, each vertex with an equatorial
    /// chart containing it; used by the winding oracle.
    pub fn sphere_equator_band() -> Vec<(usize, usize)> {
        let model = spaces::sphere_model();
        vec![
            (model.midpoint[&(1, 2)], 2),
            (model.center[&(1, 2, 3)], 2),
            (model.midpoint[&(1, 3)], 3),
            (model.center[&(1, 3, 4)], 3),
            (model.midpoint[&(1, 4)], 4),
            (model.center[&(1, 4, 5)], 4),
            (model.midpoint[&(1, 5)], 5),
            (model.center[&(1, 2, 5)], 5),
        ]
    }

    /// Per-vertex star orientations of a closed surface: for each original
    /// vertex a directed link cycle, and per incident face whether the
    /// induced orientation agrees with the sorted one.
    fn face_orientation_signs(model: &SurfaceModel) -> BTreeMap<(usize, (usize, usize, usize)), i32> {
        let n_orig = model.corner.len();
        let mut faces_at: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); n_orig];
        for &f in &model.faces {
            for v in [f.0, f.1, f.2] {
                faces_at[v].push(f);
            }
        }
        let mut signs = BTreeMap::new();
        for v in 0..n_orig {
            // Link of v: neighbors joined when they share a face with v.
            let mut link_adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for &(a, b, c) in &faces_at[v] {
                let others: Vec<usize> =
                    [a, b, c].into_iter().filter(|&u| u != v).collect();
                link_adj.entry(others[0]).or_default().push(others[1]);
                link_adj.entry(others[1]).or_default().push(others[0]);
            }
            // Walk the link cycle starting at the least neighbor, toward its
            // least link-neighbor.
            let start = *link_adj.keys().next().expect("vertex lies in a face");
            let mut cycle = vec![start];
            let mut prev = start;
            let mut here = *link_adj[&start].iter().min().unwrap();
            while here != start {
                cycle.push(here);
                let next = link_adj[&here]
                    .iter()
                    .copied()
                    .find(|&u| u != prev)
                    .expect("link of a surface vertex is a cycle");
                prev = here;
                here = next;
            }
            let pos: BTreeMap<usize, usize> =
                cycle.iter().copied().enumerate().map(|(p, u)| (u, p)).collect();
            let len = cycle.len();
            let follows = |a: usize, b: usize| (pos[&a] + 1) % len == pos[&b];
            for &(a, b, c) in &faces_at[v] {
                // Sign +1 when the directed link induces the sorted cyclic
                // orientation (a,b,c) on the face.
                let sign = if v == a {
                    if follows(b, c) { 1 } else { -1 }
                } else if v == b {
                    if follows(c, a) { 1 } else { -1 }
                } else {
                    if follows(a, b) { 1 } else { -1 }
                };
                signs.insert((v, (a, b, c)), sign);
            }
        }
        signs
    }

    /// The S₂-valued orientation cocycle of ℝP² on the six star charts: the
    /// transition swaps the two sheets exactly where the neighboring star
    /// orientations disagree. Its covering space is the orientation double
    /// cover S².
    pub fn rp2_antipodal_cocycle() -> TransitionSystem {
        let model = spaces::projective_plane_model();
        let signs = face_orientation_signs(&model);
        let space = Arc::new(model.space);
        let mut system = TransitionSystem::identity(space.clone(), 2);
        for (v, w) in space.overlapping_pairs() {
            let faces: Vec<(usize, usize, usize)> = model
                .faces
                .iter()
                .copied()
                .filter(|&(a, b, c)| {
                    [a, b, c].contains(&v) && [a, b, c].contains(&w)
                })
                .collect();
            let tau: Vec<i32> =
                faces.iter().map(|f| signs[&(v, *f)] * signs[&(w, *f)]).collect();
            debug_assert!(
                tau.windows(2).all(|t| t[0] == t[1]),
                "orientation comparison is constant on the overlap"
            );
            if tau[0] < 0 {
                let swap = DiagPermUnitary::from_perm(Permutation::transposition(2, 0, 1));
                for z in space.overlap(v, w) {
                    system.set(v, w, z, swap.clone());
                }
            }
        }
        system
    }

    /// Phases of the sign representation π₋ applied to the antipodal
    /// cocycle: -1 on orientation-reversing overlaps.
    pub fn rp2_sign_bundle() -> TransitionSystem {
        let antipodal = rp2_antipodal_cocycle();
        crate::cocycle::pushforward(crate::cocycle::Hom::Determinant, &antipodal)
            .expect("determinant applies to any system")
    }

    /// The π₊ line bundle: all phases 1.
    pub fn rp2_trivial_bundle() -> TransitionSystem {
        TransitionSystem::identity(Arc::new(spaces::projective_plane()), 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::build_covering;
    use crate::cocycle::verify_cocycle;

    #[test]
    fn antipodal_cocycle_gives_the_connected_double_cover() {
        let system = bundles::rp2_antipodal_cocycle();
        assert!(verify_cocycle(&system).valid);
        let cover = build_covering(&system).unwrap();
        // The orientation double cover of the projective plane is a sphere:
        // connected, with twice the subdivision vertices.
        assert_eq!(cover.total_count(), 62);
        assert_eq!(cover.component_count(), 1);
        // Lifting any orientation-reversing loop swaps the sheets.
        let base = system.base.clone();
        let cycles = {
            // Any cycle through an orientation-reversing overlap works; use
            // monodromy over all basis cycles and require at least one swap.
            let mut found_swap = false;
            for walk in test_cycle_basis(&base) {
                if !cover.monodromy_along(&walk).is_identity() {
                    found_swap = true;
                }
            }
            found_swap
        };
        assert!(cycles, "some loop reverses orientation");
    }

    fn test_cycle_basis(space: &crate::space::CechSpace) -> Vec<Vec<usize>> {
        let n = space.vertex_count();
        let mut parent: Vec<Option<usize>> = vec![None; n];
        let mut depth = vec![0usize; n];
        let mut seen = vec![false; n];
        let mut tree = std::collections::BTreeSet::new();
        let mut basis = Vec::new();
        seen[0] = true;
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            for &w in space.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(v);
                    depth[w] = depth[v] + 1;
                    tree.insert((v.min(w), v.max(w)));
                    queue.push_back(w);
                }
            }
        }
        for (a, b) in space.edges() {
            if tree.contains(&(a, b)) {
                continue;
            }
            let (mut u, mut v) = (a, b);
            let mut left = vec![u];
            let mut right = vec![v];
            while depth[u] > depth[v] {
                u = parent[u].unwrap();
                left.push(u);
            }
            while depth[v] > depth[u] {
                v = parent[v].unwrap();
                right.push(v);
            }
            while u != v {
                u = parent[u].unwrap();
                left.push(u);
                v = parent[v].unwrap();
                right.push(v);
            }
            right.pop();
            right.reverse();
            left.extend(right);
            left.push(a);
            left.reverse();
            basis.push(left);
        }
        basis
    }
}

pub mod instances {
    use super::{bundles, spaces};
    use crate::bundle::{build_covering, build_twisted_covering, CoveringSpace};
    use crate::cocycle::{monodromy_system, TransitionSystem};
    use crate::correspondence::TwistedCorrespondence;
    use crate::group::Permutation;
    use crate::space::SharedSpace;
    use std::sync::Arc;

    /// Which of the two range maps of a paired example.
    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub enum RangeChoice {
        First,
        Second,
    }

    impl RangeChoice {
        pub fn parse(s: &str) -> Option<RangeChoice> {
            match s {
                "r1" => Some(RangeChoice::First),
                "r2" => Some(RangeChoice::Second),
                _ => None,
            }
        }
    }

    /// The two marked circle vertices of the reconstruction example.
    pub const EXAMPLE_51_POINTS: (usize, usize) = (0, 6);

    fn trivial_cover(space: SharedSpace, n: usize) -> Arc<CoveringSpace> {
        let t = TransitionSystem::identity(space, n);
        Arc::new(build_covering(&t).expect("identity cocycle is valid"))
    }

    /// Range map given per (base vertex, canonical sheet index).
    fn range_by_sheet(
        covering: &CoveringSpace,
        f: impl Fn(usize, usize) -> usize,
    ) -> Vec<usize> {
        (0..covering.total_count())
            .map(|z| f(covering.base_of(z), covering.sheet_index(z)))
            .collect()
    }

    /// The trivial 2-sheeted cover of the circle with range hitting two
    /// fixed points: the topological graph whose left action is
    /// diag(f(x₁), f(x₂)) in every fiber.
    pub fn example_51_circle() -> TwistedCorrespondence {
        let circle = Arc::new(spaces::circle());
        let cov = trivial_cover(circle.clone(), 2);
        let range = range_by_sheet(&cov, |_, sheet| {
            if sheet == 0 {
                EXAMPLE_51_POINTS.0
            } else {
                EXAMPLE_51_POINTS.1
            }
        });
        TwistedCorrespondence::untwisted(cov, circle, range).unwrap()
    }

    /// The interval example with range maps (x, -x) versus (|x|, -|x|) on
    /// the trivial 2-cover of [-1, 1].
    pub fn different_ranges(choice: RangeChoice) -> TwistedCorrespondence {
        let interval = Arc::new(spaces::interval());
        let cov = trivial_cover(interval.clone(), 2);
        let range = range_by_sheet(&cov, |x, sheet| {
            let value = match choice {
                RangeChoice::First => x,
                RangeChoice::Second => 10 + x.abs_diff(10),
            };
            if sheet == 0 {
                value
            } else {
                20 - value
            }
        });
        TwistedCorrespondence::untwisted(cov, interval, range).unwrap()
    }

    /// Index form of the plateau profile: x + 1/2 below -1/2, zero on the
    /// plateau, x - 1/2 above 1/2.
    fn plateau_profile(x: usize) -> usize {
        if x < 5 {
            x + 5
        } else if x > 15 {
            x - 5
        } else {
            10
        }
    }

    /// The rigidity pair: ranges (f, -f) versus (|f|, -|f|) for the plateau
    /// profile f. The graphs differ, the C*-correspondences do not.
    pub fn plateau(choice: RangeChoice) -> TwistedCorrespondence {
        let interval = Arc::new(spaces::interval());
        let cov = trivial_cover(interval.clone(), 2);
        let range = range_by_sheet(&cov, |x, sheet| {
            let f = plateau_profile(x);
            let value = match choice {
                RangeChoice::First => f,
                RangeChoice::Second => 10 + f.abs_diff(10),
            };
            if sheet == 0 {
                value
            } else {
                20 - value
            }
        });
        TwistedCorrespondence::untwisted(cov, interval, range).unwrap()
    }

    /// The square example over [-1,1]²: the profile max(0, |iy|-|ix|)
    /// vanishes exactly on |x| >= |y|, signed by y in the first range map
    /// and unsigned in the second.
    pub fn square_example(choice: RangeChoice) -> TwistedCorrespondence {
        let square = Arc::new(spaces::square());
        let interval = Arc::new(spaces::interval());
        let cov = trivial_cover(square.clone(), 2);
        let range = range_by_sheet(&cov, |v, sheet| {
            let (ix, iy) = (v / 21, v % 21);
            let profile = (iy.abs_diff(10)).saturating_sub(ix.abs_diff(10));
            let signed = match choice {
                RangeChoice::First => {
                    if iy >= 10 {
                        10 + profile
                    } else {
                        10 - profile
                    }
                }
                RangeChoice::Second => 10 + profile,
            };
            if sheet == 0 {
                signed
            } else {
                20 - signed
            }
        });
        TwistedCorrespondence::untwisted(cov, interval, range).unwrap()
    }

    /// Trivial 3-cover of the circle over the two-point target with rank
    /// profiles (2,1) versus (1,2).
    pub fn trivial_covering_ranks(choice: RangeChoice) -> TwistedCorrespondence {
        let circle = Arc::new(spaces::circle());
        let two = Arc::new(spaces::two_points());
        let cov = trivial_cover(circle.clone(), 3);
        let range = range_by_sheet(&cov, |_, sheet| match (choice, sheet) {
            (RangeChoice::First, 0) | (RangeChoice::First, 1) => 0,
            (RangeChoice::First, _) => 1,
            (RangeChoice::Second, 0) => 0,
            (RangeChoice::Second, _) => 1,
        });
        TwistedCorrespondence::untwisted(cov, two, range).unwrap()
    }

    /// Circle covering with the given monodromy cycle type, as a
    /// correspondence over the one-point target.
    pub fn circle_cover_correspondence(cycle_type: &[usize]) -> TwistedCorrespondence {
        let n: usize = cycle_type.iter().sum();
        let circle = Arc::new(spaces::circle());
        let t = monodromy_system(circle, Permutation::from_cycle_type(n, cycle_type), (0, 2));
        let cov = Arc::new(build_covering(&t).expect("monodromy cocycle is valid"));
        let point = Arc::new(spaces::point());
        let range = vec![0; cov.total_count()];
        TwistedCorrespondence::untwisted(cov, point, range).unwrap()
    }

    /// The winding-w line bundle over S² as a single-sheet twisted
    /// correspondence over the one-point target.
    pub fn s2_line_bundle_correspondence(w: i64) -> TwistedCorrespondence {
        let t = bundles::sphere_clutching(w);
        let (cov, line) = build_twisted_covering(&t).expect("clutching cocycle is valid");
        let point = Arc::new(spaces::point());
        let range = vec![0; cov.total_count()];
        TwistedCorrespondence::new(cov, line, point, range).unwrap()
    }

    /// Two disjoint sphere sheets with the winding-w line bundle on one of
    /// them: the smallest multi-sheet instance whose twist class is
    /// nontrivial.
    pub fn sphere_pair_with_twisted_sheet(twisted_sheet: usize, w: i64) -> TwistedCorrespondence {
        assert!(twisted_sheet < 2);
        let clutching = super::bundles::sphere_clutching(w);
        let base = clutching.base.clone();
        let mut system = TransitionSystem::identity(base.clone(), 2);
        for (&(i, j), map) in clutching.stored() {
            for (&x, g) in map {
                let mut phases = vec![crate::linalg::C64::new(1.0, 0.0); 2];
                phases[twisted_sheet] = g.phases[0];
                system.set(i, j, x, crate::group::DiagPermUnitary::from_phases(phases));
            }
        }
        let (cov, line) = build_twisted_covering(&system).expect("valid cocycle");
        let point = Arc::new(spaces::point());
        let range = vec![0; cov.total_count()];
        TwistedCorrespondence::new(cov, line, point, range).unwrap()
    }

    /// The antipodal double cover of ℝP² as a correspondence over the
    /// one-point target, with the π₋ twist carried separately by
    /// `bundles::rp2_sign_bundle`.
    pub fn rp2_antipodal_correspondence() -> TwistedCorrespondence {
        let t = bundles::rp2_antipodal_cocycle();
        let cov = Arc::new(build_covering(&t).expect("orientation cocycle is valid"));
        let point = Arc::new(spaces::point());
        let range = vec![0; cov.total_count()];
        TwistedCorrespondence::untwisted(cov, point, range).unwrap()
    }

    /// The coverings of the circle classified by cycle type, for the
    /// classification sweep.
    pub fn classify_circle(n: usize) -> Vec<(Vec<usize>, CoveringSpace)> {
        crate::group::partitions(n)
            .into_iter()
            .map(|cycle_type| {
                let circle = Arc::new(spaces::circle());
                let t = monodromy_system(
                    circle,
                    Permutation::from_cycle_type(n, &cycle_type),
                    (0, 2),
                );
                let cov = build_covering(&t).expect("monodromy cocycle is valid");
                (cycle_type, cov)
            })
            .collect()
    }

    /// Every named gallery correspondence, for sweeps and the acceptance
    /// suite.
    pub fn all() -> Vec<(String, TwistedCorrespondence)> {
        let mut out: Vec<(String, TwistedCorrespondence)> = vec![
            ("example-5.1-circle".into(), example_51_circle()),
            ("example-different-ranges(r1)".into(), different_ranges(RangeChoice::First)),
            ("example-different-ranges(r2)".into(), different_ranges(RangeChoice::Second)),
            ("plateau-example(r1)".into(), plateau(RangeChoice::First)),
            ("plateau-example(r2)".into(), plateau(RangeChoice::Second)),
            ("square-example(r1)".into(), square_example(RangeChoice::First)),
            ("square-example(r2)".into(), square_example(RangeChoice::Second)),
            ("trivial-covering-ranks(r1)".into(), trivial_covering_ranks(RangeChoice::First)),
            ("trivial-covering-ranks(r2)".into(), trivial_covering_ranks(RangeChoice::Second)),
            ("rp2-antipodal".into(), rp2_antipodal_correspondence()),
        ];
        for (label, cycle_type) in
            [("id2", vec![1, 1]), ("swap", vec![2]), ("cycle3", vec![3])]
        {
            out.push((
                format!("circle-covers({label})"),
                circle_cover_correspondence(&cycle_type),
            ));
        }
        for w in [0i64, 1] {
            out.push((format!("s2-line-bundle({w})"), s2_line_bundle_correspondence(w)));
        }
        out
    }
}
