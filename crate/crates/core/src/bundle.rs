//! Total-space constructions: covering space from an S_n-cocycle, twisted
//! covering from a 𝒰(N_{D_n})-cocycle, and the base-preserving isomorphism
//! search for coverings.

use crate::cocycle::{pushforward, verify_cocycle, Hom, TransitionSystem};
use crate::group::{DiagPermUnitary, Permutation};
use crate::linalg::C64;
use crate::space::{CechSpace, SharedSpace};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("transition system fails the cocycle identity ({0} violations)")]
    InvalidCocycle(usize),
    #[error("system has nontrivial phases; expected an S_n-valued system")]
    NotPermutationValued,
    #[error("base edge ({0}, {1}) lies in no chart; cover does not trivialize the edge")]
    EdgeNotInChart(usize, usize),
    #[error("coverings live over different base spaces")]
    BaseMismatch,
    #[error("induced cover on the total space is not good")]
    NotGoodCover,
}

/// An n-sheeted covering of a Čech model, presented by its quotient total
/// space. Total vertices are equivalence classes of (chart, base vertex,
/// sheet); the canonical representative uses the least chart containing the
/// base vertex.
#[derive(Debug, Clone)]
pub struct CoveringSpace {
    pub base: SharedSpace,
    pub sheets: usize,
    /// Per total vertex: (base vertex, least chart, sheet index there).
    reps: Vec<(usize, usize, usize)>,
    /// Per base vertex: total vertices of the fiber in canonical order.
    fibers: Vec<Vec<usize>>,
    /// Per total vertex: chart -> sheet index in that chart.
    coords: Vec<BTreeMap<usize, usize>>,
    pub edges: BTreeSet<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl CoveringSpace {
    pub fn total_count(&self) -> usize {
        self.reps.len()
    }

    /// s(z): the base vertex under a total vertex.
    pub fn base_of(&self, z: usize) -> usize {
        self.reps[z].0
    }

    pub fn rep(&self, z: usize) -> (usize, usize, usize) {
        self.reps[z]
    }

    pub fn fiber(&self, x: usize) -> &[usize] {
        &self.fibers[x]
    }

    /// Position of z within its fiber's canonical order.
    pub fn sheet_index(&self, z: usize) -> usize {
        self.fibers[self.base_of(z)].iter().position(|&w| w == z).unwrap()
    }

    /// Sheet coordinate of z in a chart containing its base vertex.
    pub fn coord(&self, z: usize, chart: usize) -> Option<usize> {
        self.coords[z].get(&chart).copied()
    }

    /// Total vertex over x with the given coordinate in `chart`.
    pub fn vertex_at(&self, x: usize, chart: usize, coord: usize) -> Option<usize> {
        self.fibers[x]
            .iter()
            .copied()
            .find(|&z| self.coord(z, chart) == Some(coord))
    }

    pub fn neighbors(&self, z: usize) -> &[usize] {
        &self.adjacency[z]
    }

    pub fn has_edge(&self, z: usize, w: usize) -> bool {
        self.edges.contains(&(z.min(w), z.max(w)))
    }

    /// The perfect matching between the fibers of adjacent base vertices
    /// given by the covering edges.
    pub fn edge_matching(&self, x: usize, y: usize) -> BTreeMap<usize, usize> {
        let mut matching = BTreeMap::new();
        for &z in &self.fibers[x] {
            for &w in self.neighbors(z) {
                if self.base_of(w) == y {
                    matching.insert(z, w);
                }
            }
        }
        matching
    }

    /// Label of a total vertex: base label / least chart . sheet.
    pub fn vertex_label(&self, z: usize) -> String {
        let (x, chart, sheet) = self.reps[z];
        format!("{}/{}.{}", self.base.label(x), chart, sheet)
    }

    /// Index of the refined chart h_i(U_i × {k}) in the total-space cover.
    pub fn refined_chart(&self, i: usize, k: usize) -> usize {
        i * self.sheets + k
    }

    /// The total space as a Čech model. The cover is the sheet refinement
    /// { h_i(U_i × {k}) } of the induced cover: the pieces s⁻¹(U_i) are
    /// disconnected for n >= 2, the refined pieces inherit goodness from
    /// the base charts.
    pub fn total_space(&self) -> CechSpace {
        let labels = (0..self.total_count()).map(|z| self.vertex_label(z)).collect();
        let edges = self.edges.iter().copied().collect();
        let mut charts = Vec::with_capacity(self.base.chart_count() * self.sheets);
        for i in 0..self.base.chart_count() {
            for k in 0..self.sheets {
                charts.push(
                    (0..self.total_count())
                        .filter(|&z| self.coord(z, i) == Some(k))
                        .collect(),
                );
            }
        }
        CechSpace::new(&format!("{}-total", self.base.name), labels, edges, charts)
            .expect("total space of a covering is a valid model")
    }

    pub fn component_count(&self) -> usize {
        self.components().0
    }

    /// (number of components, component id per total vertex).
    pub fn components(&self) -> (usize, Vec<usize>) {
        let n = self.total_count();
        let mut comp = vec![usize::MAX; n];
        let mut count = 0;
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let mut queue = std::collections::VecDeque::from([start]);
            comp[start] = count;
            while let Some(z) = queue.pop_front() {
                for &w in self.neighbors(z) {
                    if comp[w] == usize::MAX {
                        comp[w] = count;
                        queue.push_back(w);
                    }
                }
            }
            count += 1;
        }
        (count, comp)
    }

    /// Monodromy of a closed base walk on the canonical fiber order over the
    /// walk's basepoint: entry k is the arrival sheet of the lift starting
    /// at sheet k.
    pub fn monodromy_along(&self, walk: &[usize]) -> Permutation {
        assert!(walk.len() >= 2 && walk.first() == walk.last());
        let x0 = walk[0];
        let n = self.fibers[x0].len();
        let mut images = Vec::with_capacity(n);
        for start in 0..n {
            let mut z = self.fibers[x0][start];
            for step in walk.windows(2) {
                let matching = self.edge_matching(step[0], step[1]);
                z = matching[&z];
            }
            images.push(self.sheet_index(z));
        }
        Permutation::new(images).expect("lifting a loop permutes the fiber")
    }

    /// Restrict the covering to the subgraph induced on a base subset.
    /// Returns the restricted covering, the old base ids of the new base,
    /// and per old total vertex its new id if it survived.
    pub fn restrict(
        &self,
        name: &str,
        subset: &BTreeSet<usize>,
    ) -> (CoveringSpace, Vec<usize>, Vec<Option<usize>>) {
        let (base, old_base_ids, chart_map) = self.base.induced(name, subset);
        let base = Arc::new(base);
        let new_base_of: BTreeMap<usize, usize> =
            old_base_ids.iter().enumerate().map(|(new, &old)| (old, new)).collect();

        let mut total_map: Vec<Option<usize>> = vec![None; self.total_count()];
        let mut reps = Vec::new();
        let mut coords = Vec::new();
        for z in 0..self.total_count() {
            let (x, _, _) = self.reps[z];
            if !subset.contains(&x) {
                continue;
            }
            let new_coords: BTreeMap<usize, usize> = self.coords[z]
                .iter()
                .filter_map(|(&chart, &sheet)| chart_map[chart].map(|c| (c, sheet)))
                .collect();
            let (&least_chart, &sheet) = new_coords.iter().next().expect("x stays covered");
            total_map[z] = Some(reps.len());
            reps.push((new_base_of[&x], least_chart, sheet));
            coords.push(new_coords);
        }

        let mut fibers = vec![Vec::new(); base.vertex_count()];
        for (new_z, &(x, _, _)) in reps.iter().enumerate() {
            fibers[x].push(new_z);
        }
        for fiber in &mut fibers {
            fiber.sort_by_key(|&z| (reps[z].1, reps[z].2));
        }

        let mut edges = BTreeSet::new();
        let mut adjacency = vec![Vec::new(); reps.len()];
        for &(z, w) in &self.edges {
            if let (Some(a), Some(b)) = (total_map[z], total_map[w]) {
                edges.insert((a.min(b), a.max(b)));
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }

        let covering =
            CoveringSpace { base, sheets: self.sheets, reps, fibers, coords, edges, adjacency };
        (covering, old_base_ids, total_map)
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Keep the smaller root so canonical representatives are minimal.
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}

/// Build the covering space of an S_n-valued cocycle as the union-find
/// quotient of ⨆_i U_i × {1..n} under (x, k, i) ~ (x, σ_ji(x)(k), j).
pub fn build_covering(t: &TransitionSystem) -> Result<CoveringSpace, BundleError> {
    if !t.is_phase_free(crate::linalg::TAU_NUM) {
        return Err(BundleError::NotPermutationValued);
    }
    let report = verify_cocycle(t);
    if !report.valid {
        return Err(BundleError::InvalidCocycle(report.violations.len()));
    }
    let base = t.base.clone();
    let n = t.degree;

    let mut node_id: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();
    let mut nodes: Vec<(usize, usize, usize)> = Vec::new();
    for i in 0..base.chart_count() {
        for &x in base.chart(i).iter() {
            for k in 0..n {
                node_id.insert((i, x, k), nodes.len());
                nodes.push((i, x, k));
            }
        }
    }

    let mut uf = UnionFind::new(nodes.len());
    for (i, j) in base.overlapping_pairs() {
        for x in base.overlap(i, j) {
            let g_ji = t.value(j, i, x).expect("overlap vertex has a value");
            for k in 0..n {
                let a = node_id[&(i, x, k)];
                let b = node_id[&(j, x, g_ji.perm.apply(k))];
                uf.union(a, b);
            }
        }
    }

    // Classes in deterministic order: by (base vertex, chart, sheet) of the
    // least member, which is the canonical representative.
    let mut class_nodes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for id in 0..nodes.len() {
        class_nodes.entry(uf.find(id)).or_default().push(id);
    }
    let mut class_list: Vec<(usize, Vec<usize>)> = class_nodes.into_iter().collect();
    class_list.sort_by_key(|(_, members)| {
        members
            .iter()
            .map(|&m| {
                let (chart, x, k) = nodes[m];
                (x, chart, k)
            })
            .min()
            .unwrap()
    });

    let mut reps = Vec::with_capacity(class_list.len());
    let mut coords: Vec<BTreeMap<usize, usize>> = Vec::with_capacity(class_list.len());
    let mut node_class: Vec<usize> = vec![0; nodes.len()];
    for (z, (_, members)) in class_list.iter().enumerate() {
        let (x, chart, k) = members
            .iter()
            .map(|&m| {
                let (chart, x, k) = nodes[m];
                (x, chart, k)
            })
            .min()
            .unwrap();
        reps.push((x, chart, k));
        let mut cmap = BTreeMap::new();
        for &m in members {
            let (ci, cx, ck) = nodes[m];
            debug_assert_eq!(cx, x);
            cmap.insert(ci, ck);
            node_class[m] = z;
        }
        coords.push(cmap);
    }

    let mut fibers = vec![Vec::new(); base.vertex_count()];
    for (z, &(x, _, _)) in reps.iter().enumerate() {
        fibers[x].push(z);
    }
    for fiber in &mut fibers {
        fiber.sort_by_key(|&z| (reps[z].1, reps[z].2));
    }
    for fiber in &fibers {
        debug_assert_eq!(fiber.len(), n, "valid cocycles give n-point fibers");
    }

    // Lift base edges chart-locally; by S_n-constancy on overlap components
    // the lift does not depend on the chart.
    let mut edges = BTreeSet::new();
    let mut adjacency = vec![Vec::new(); reps.len()];
    for (x, y) in base.edges() {
        let chart = (0..base.chart_count())
            .find(|&i| base.chart(i).contains(&x) && base.chart(i).contains(&y))
            .ok_or(BundleError::EdgeNotInChart(x, y))?;
        for k in 0..n {
            let a = node_class[node_id[&(chart, x, k)]];
            let b = node_class[node_id[&(chart, y, k)]];
            if edges.insert((a.min(b), a.max(b))) {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
    }
    for adj in &mut adjacency {
        adj.sort_unstable();
    }

    Ok(CoveringSpace { base, sheets: n, reps, fibers, coords, edges, adjacency })
}

/// A Hermitian line bundle over the total space of a covering, presented by
/// a 𝕋-valued transition system over the induced cover.
#[derive(Debug, Clone)]
pub struct LineBundle {
    pub covering: Arc<CoveringSpace>,
    pub total: SharedSpace,
    pub phases: TransitionSystem,
}

impl LineBundle {
    pub fn trivial(covering: Arc<CoveringSpace>) -> Self {
        let total = Arc::new(covering.total_space());
        let phases = TransitionSystem::identity(total.clone(), 1);
        LineBundle { covering, total, phases }
    }

    /// The transition phase t_ij at a total vertex lying in both charts.
    pub fn phase(&self, i: usize, j: usize, z: usize) -> Option<C64> {
        self.phases.value(i, j, z).map(|g| g.phases[0])
    }

    /// Phase converting chart-j coordinates of the fiber line at z into
    /// chart-i coordinates; identity when the charts coincide.
    pub fn chart_change(&self, i: usize, j: usize, z: usize) -> C64 {
        self.phase(i, j, z).unwrap_or(C64::new(1.0, 0.0))
    }
}

/// Split a 𝒰(N_{D_n})-valued cocycle into its covering space and the
/// Hermitian line bundle carrying the phases: the phase of the line bundle
/// at the total vertex with chart-i coordinate m is the m-th phase of g_ij
/// in chart-i indexing, placed on the refined charts.
pub fn build_twisted_covering(
    t: &TransitionSystem,
) -> Result<(Arc<CoveringSpace>, LineBundle), BundleError> {
    let report = verify_cocycle(t);
    if !report.valid {
        return Err(BundleError::InvalidCocycle(report.violations.len()));
    }
    let perm_part = pushforward(Hom::ProjectToPerm, t).expect("projection is always defined");
    let covering = Arc::new(build_covering(&perm_part)?);
    let total = Arc::new(covering.total_space());
    let mut phases = TransitionSystem::identity(total.clone(), 1);
    for (i, j) in covering.base.overlapping_pairs() {
        for x in covering.base.overlap(i, j) {
            let g = t.value(i, j, x).expect("x lies in the (i,j) overlap");
            for &z in covering.fiber(x) {
                let ci = covering.coord(z, i).expect("x in U_i");
                let cj = covering.coord(z, j).expect("x in U_j");
                let a = covering.refined_chart(i, ci);
                let b = covering.refined_chart(j, cj);
                phases.set(a, b, z, DiagPermUnitary::phase(g.phases[ci]));
            }
        }
    }
    Ok((covering.clone(), LineBundle { covering, total, phases }))
}

/// Reassemble the 𝒰(N_{D_n})-cocycle of a twisted covering in the same
/// charts; exact inverse of `build_twisted_covering`.
pub fn reassemble_cocycle(covering: &CoveringSpace, line: &LineBundle) -> TransitionSystem {
    let base = covering.base.clone();
    let n = covering.sheets;
    let mut system = TransitionSystem::identity(base.clone(), n);
    for (i, j) in base.overlapping_pairs() {
        for x in base.overlap(i, j) {
            let mut images = vec![0usize; n];
            let mut phase_list = vec![C64::new(1.0, 0.0); n];
            for &z in covering.fiber(x) {
                let ci = covering.coord(z, i).expect("x in U_i");
                let cj = covering.coord(z, j).expect("x in U_j");
                images[cj] = ci;
                let a = covering.refined_chart(i, ci);
                let b = covering.refined_chart(j, cj);
                phase_list[ci] = line.chart_change(a, b, z);
            }
            let perm = Permutation::new(images).expect("chart coordinates are bijections");
            system.set(i, j, x, DiagPermUnitary::new(perm, phase_list).unwrap());
        }
    }
    system
}

/// Base-preserving covering isomorphism search with an extra per-vertex
/// compatibility predicate. The map is forced fiber-by-fiber along a BFS of
/// each base component by the per-edge matchings, so trying every fiber
/// bijection at the component roots makes the search exhaustive. `visit` is
/// called on every complete isomorphism; return `true` from it to stop.
pub fn visit_covering_isomorphisms(
    a: &CoveringSpace,
    b: &CoveringSpace,
    compat: &impl Fn(usize, usize) -> bool,
    visit: &mut impl FnMut(&[usize]) -> bool,
) -> Result<(), BundleError> {
    if *a.base != *b.base {
        return Err(BundleError::BaseMismatch);
    }
    if a.sheets != b.sheets || a.total_count() != b.total_count() {
        return Ok(());
    }
    let base = &a.base;

    // One BFS order over all base components, roots tagged with None.
    let all: BTreeSet<usize> = base.vertices().collect();
    let mut order: Vec<(usize, Option<usize>)> = Vec::new();
    for component in crate::space::connected_components(base, &all).expect("vertices exist") {
        let root = *component.iter().next().unwrap();
        order.push((root, None));
        let mut seen: BTreeSet<usize> = BTreeSet::from([root]);
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            for &y in base.neighbors(x) {
                if component.contains(&y) && seen.insert(y) {
                    order.push((y, Some(x)));
                    queue.push_back(y);
                }
            }
        }
    }

    let mut phi: Vec<Option<usize>> = vec![None; a.total_count()];
    assign(a, b, &order, 0, &mut phi, compat, visit);
    Ok(())
}

/// Returns true when the visitor asked to stop.
fn assign(
    a: &CoveringSpace,
    b: &CoveringSpace,
    base_order: &[(usize, Option<usize>)],
    pos: usize,
    phi: &mut Vec<Option<usize>>,
    compat: &impl Fn(usize, usize) -> bool,
    visit: &mut impl FnMut(&[usize]) -> bool,
) -> bool {
    if pos == base_order.len() {
        // Verify the non-tree covering edges.
        for &(x, _) in base_order {
            for &z in a.fiber(x) {
                for &w in a.neighbors(z) {
                    let (fz, fw) = (phi[z].unwrap(), phi[w].unwrap());
                    if !b.has_edge(fz, fw) {
                        return false;
                    }
                }
            }
        }
        let complete: Vec<usize> = phi.iter().map(|v| v.unwrap()).collect();
        return visit(&complete);
    }
    let (x, via) = base_order[pos];
    match via {
        None => {
            let n = a.fiber(x).len();
            if b.fiber(x).len() != n {
                return false;
            }
            let mut perm: Vec<usize> = (0..n).collect();
            loop {
                let ok = (0..n).all(|k| compat(a.fiber(x)[k], b.fiber(x)[perm[k]]));
                if ok {
                    for k in 0..n {
                        phi[a.fiber(x)[k]] = Some(b.fiber(x)[perm[k]]);
                    }
                    if assign(a, b, base_order, pos + 1, phi, compat, visit) {
                        return true;
                    }
                    for k in 0..n {
                        phi[a.fiber(x)[k]] = None;
                    }
                }
                if !next_permutation(&mut perm) {
                    return false;
                }
            }
        }
        Some(prev) => {
            let ma = a.edge_matching(prev, x);
            let mb = b.edge_matching(prev, x);
            let mut images = Vec::with_capacity(a.fiber(prev).len());
            for &zp in a.fiber(prev) {
                let za = ma[&zp];
                let zb = mb[&phi[zp].expect("prev fiber assigned")];
                if !compat(za, zb) {
                    return false;
                }
                images.push((za, zb));
            }
            for &(za, zb) in &images {
                phi[za] = Some(zb);
            }
            if assign(a, b, base_order, pos + 1, phi, compat, visit) {
                return true;
            }
            for &(za, _) in &images {
                phi[za] = None;
            }
            false
        }
    }
}

/// First base-preserving covering isomorphism compatible with the
/// predicate, in canonical search order.
pub fn coverings_isomorphic_with(
    a: &CoveringSpace,
    b: &CoveringSpace,
    compat: impl Fn(usize, usize) -> bool,
) -> Result<Option<Vec<usize>>, BundleError> {
    let mut found = None;
    visit_covering_isomorphisms(a, b, &compat, &mut |phi| {
        found = Some(phi.to_vec());
        true
    })?;
    Ok(found)
}

pub(crate) fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// Base-preserving isomorphism of coverings; `Some(map)` sends a-total ids
/// to b-total ids.
pub fn coverings_isomorphic(
    a: &CoveringSpace,
    b: &CoveringSpace,
) -> Result<Option<Vec<usize>>, BundleError> {
    coverings_isomorphic_with(a, b, |_, _| true)
}

/// Decide whether lb pulled back along `phi` is isomorphic to la, by the
/// vanishing of the ratio cocycle's class in H² of the total-space nerve.
/// Requires the induced cover on la's total space to be good.
pub fn line_bundles_isomorphic_over(
    phi: &[usize],
    la: &LineBundle,
    lb: &LineBundle,
) -> Result<bool, BundleError> {
    if !crate::space::validate_good_cover(&la.total).good {
        return Err(BundleError::NotGoodCover);
    }
    let pullback = pull_back_phases(phi, la, lb);
    let ratio =
        la.phases.tensor(&pullback.conjugate()).expect("pullback lives over la's cover");
    let class =
        crate::cohomology::chern_class(&ratio).map_err(|_| BundleError::NotGoodCover)?;
    Ok(class.is_zero())
}

/// The 𝕋-system over la's total cover with phases t_b(φ(z)). The refined
/// chart indices are carried through φ: a base-preserving isomorphism may
/// permute sheets, so the chart h_i(U_i × {k}) of la corresponds at φ(z) to
/// the chart of lb with φ(z)'s own coordinate.
pub fn pull_back_phases(phi: &[usize], la: &LineBundle, lb: &LineBundle) -> TransitionSystem {
    let n = la.covering.sheets;
    let mut pullback = TransitionSystem::identity(la.total.clone(), 1);
    for (i, j) in la.total.overlapping_pairs() {
        let (chart_i, chart_j) = (i / n, j / n);
        for z in la.total.overlap(i, j) {
            let w = phi[z];
            let wi = lb
                .covering
                .refined_chart(chart_i, lb.covering.coord(w, chart_i).expect("phi is base-preserving"));
            let wj = lb
                .covering
                .refined_chart(chart_j, lb.covering.coord(w, chart_j).expect("phi is base-preserving"));
            let phase = lb.chart_change(wi, wj, w);
            pullback.set(i, j, z, DiagPermUnitary::phase(phase));
        }
    }
    pullback
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::{apply_gauge, monodromy_system, random_gauge};
    use crate::gallery::spaces;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn circle() -> SharedSpace {
        Arc::new(spaces::circle())
    }

    #[test]
    fn identity_cocycle_gives_disjoint_copies() {
        let t = TransitionSystem::identity(circle(), 3);
        let cov = build_covering(&t).unwrap();
        assert_eq!(cov.total_count(), 36);
        assert_eq!(cov.component_count(), 3);
        for x in cov.base.vertices() {
            assert_eq!(cov.fiber(x).len(), 3);
        }
    }

    #[test]
    fn three_cycle_monodromy_gives_connected_cover() {
        let t = monodromy_system(circle(), Permutation::from_cycle_type(3, &[3]), (0, 2));
        let cov = build_covering(&t).unwrap();
        assert_eq!(cov.total_count(), 36);
        assert_eq!(cov.component_count(), 1);
        // The connected 3-fold cover of a 12-cycle is a 36-cycle.
        for z in 0..cov.total_count() {
            assert_eq!(cov.neighbors(z).len(), 2);
        }
    }

    #[test]
    fn one_chart_cover_gives_disjoint_copies() {
        let labels = (0..4).map(|i| format!("w{i}")).collect();
        let space = Arc::new(
            CechSpace::new("path4", labels, vec![(0, 1), (1, 2), (2, 3)], vec![vec![0, 1, 2, 3]])
                .unwrap(),
        );
        let t = TransitionSystem::identity(space, 4);
        let cov = build_covering(&t).unwrap();
        assert_eq!(cov.component_count(), 4);
        assert_eq!(cov.total_count(), 16);
    }

    #[test]
    fn component_count_matches_monodromy_orbits() {
        for cycle_type in [vec![3], vec![2, 1], vec![1, 1, 1]] {
            let sigma = Permutation::from_cycle_type(3, &cycle_type);
            let t = monodromy_system(circle(), sigma.clone(), (0, 2));
            let cov = build_covering(&t).unwrap();
            let orbits = Permutation::orbits(3, &[sigma]);
            assert_eq!(cov.component_count(), orbits.len(), "{cycle_type:?}");
        }
    }

    #[test]
    fn monodromy_along_base_loop_has_right_cycle_type() {
        let sigma = Permutation::from_cycle_type(4, &[3, 1]);
        let t = monodromy_system(circle(), sigma.clone(), (0, 2));
        let cov = build_covering(&t).unwrap();
        let mut walk: Vec<usize> = (0..12).collect();
        walk.push(0);
        let mono = cov.monodromy_along(&walk);
        assert_eq!(mono.cycle_type(), sigma.cycle_type());
    }

    #[test]
    fn phase_free_cocycle_gives_trivial_line_bundle() {
        let t = monodromy_system(circle(), Permutation::from_cycle_type(2, &[2]), (0, 2));
        let (_, line) = build_twisted_covering(&t).unwrap();
        for (_, map) in line.phases.stored() {
            for g in map.values() {
                assert!(g.is_identity(1e-12));
            }
        }
    }

    #[test]
    fn single_sheet_twisted_covering_is_base_with_phases() {
        let mut t = TransitionSystem::identity(circle(), 1);
        t.set(0, 1, 4, DiagPermUnitary::phase(C64::new(0.0, 1.0)));
        let (cov, line) = build_twisted_covering(&t).unwrap();
        assert_eq!(cov.total_count(), 12);
        let z = cov.fiber(4)[0];
        assert!((line.phase(0, 1, z).unwrap() - C64::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn reassembly_round_trip_is_exact() {
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..10 {
            let base =
                monodromy_system(circle(), Permutation::from_cycle_type(3, &[2, 1]), (0, 2));
            let gauge = random_gauge(base.base.clone(), 3, &mut rng, 2.0);
            let t = apply_gauge(&base, &gauge).unwrap();
            let (cov, line) = build_twisted_covering(&t).unwrap();
            let back = reassemble_cocycle(&cov, &line);
            for (&(i, j), map) in t.stored() {
                for (&x, g) in map {
                    assert!(back.value(i, j, x).unwrap().approx_eq(g, 1e-12));
                }
            }
        }
    }

    #[test]
    fn covering_isomorphic_to_itself() {
        let t = monodromy_system(circle(), Permutation::from_cycle_type(3, &[3]), (0, 2));
        let cov = build_covering(&t).unwrap();
        let phi = coverings_isomorphic(&cov, &cov).unwrap().unwrap();
        for z in 0..cov.total_count() {
            assert_eq!(cov.base_of(phi[z]), cov.base_of(z));
        }
    }

    #[test]
    fn conjugate_monodromies_are_isomorphic() {
        let sigma = Permutation::transposition(2, 0, 1);
        let a = build_covering(&monodromy_system(circle(), sigma.clone(), (0, 2))).unwrap();
        // Same monodromy placed on a different overlap is a relabeling.
        let b = build_covering(&monodromy_system(circle(), sigma, (0, 1))).unwrap();
        assert!(coverings_isomorphic(&a, &b).unwrap().is_some());
    }

    #[test]
    fn distinct_component_counts_are_not_isomorphic() {
        let a = build_covering(&TransitionSystem::identity(circle(), 2)).unwrap();
        let b = build_covering(&monodromy_system(
            circle(),
            Permutation::transposition(2, 0, 1),
            (0, 2),
        ))
        .unwrap();
        assert_eq!(a.component_count(), 2);
        assert_eq!(b.component_count(), 1);
        assert!(coverings_isomorphic(&a, &b).unwrap().is_none());
    }

    #[test]
    fn line_bundle_comparison_over_the_identity() {
        use crate::gallery::bundles::sphere_clutching;
        let build = |w: i64| build_twisted_covering(&sphere_clutching(w)).unwrap();
        let (cov0, trivial) = build(0);
        let (_, winding) = build(1);
        let identity: Vec<usize> = (0..cov0.total_count()).collect();
        assert!(line_bundles_isomorphic_over(&identity, &trivial, &trivial).unwrap());
        assert!(!line_bundles_isomorphic_over(&identity, &trivial, &winding).unwrap());
        assert!(line_bundles_isomorphic_over(&identity, &winding, &winding).unwrap());

        // A gauge-perturbed copy stays isomorphic.
        let mut rng = StdRng::seed_from_u64(11);
        let gauge = random_gauge(
            winding.total.clone(),
            1,
            &mut rng,
            std::f64::consts::PI / 8.0,
        );
        let perturbed_phases = apply_gauge(&winding.phases, &gauge).unwrap();
        let perturbed = LineBundle {
            covering: winding.covering.clone(),
            total: winding.total.clone(),
            phases: perturbed_phases,
        };
        assert!(line_bundles_isomorphic_over(&identity, &winding, &perturbed).unwrap());
    }

    #[test]
    fn appendix_round_trips_on_random_cocycles() {
        let mut rng = StdRng::seed_from_u64(10);
        let sphere = Arc::new(spaces::sphere());
        for trial in 0..40 {
            let n = rng.gen_range(1..=5);
            let (space, t0): (SharedSpace, TransitionSystem) = if trial % 2 == 0 {
                let cycle_type = {
                    let parts = crate::group::partitions(n);
                    parts[rng.gen_range(0..parts.len())].clone()
                };
                let s = circle();
                (
                    s.clone(),
                    monodromy_system(s, Permutation::from_cycle_type(n, &cycle_type), (0, 2)),
                )
            } else {
                (sphere.clone(), TransitionSystem::identity(sphere.clone(), n))
            };
            let t = apply_gauge(&t0, &crate::cocycle::random_permutation_gauge(space.clone(), n, &mut rng)).unwrap();
            assert!(verify_cocycle(&t).valid);

            // cocycle -> covering -> cocycle: gauge-equivalent.
            let cov = build_covering(&t).unwrap();
            let line = LineBundle::trivial(Arc::new(cov.clone()));
            let extracted = reassemble_cocycle(&cov, &line);
            assert!(verify_cocycle(&extracted).valid);
            assert!(crate::cocycle::sn_gauge_equivalent(&t, &extracted), "trial {trial}");

            // covering -> cocycle -> covering: base-preservingly isomorphic.
            let cov2 = build_covering(&extracted).unwrap();
            assert!(coverings_isomorphic(&cov, &cov2).unwrap().is_some());
        }
    }

}
