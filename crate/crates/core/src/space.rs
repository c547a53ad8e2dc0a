//! Finite Čech models: a graph (vertices = sample points, edges = adjacency)
//! together with an open cover and its nerve.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("unknown vertex id {0}")]
    UnknownVertex(usize),
    #[error("chart {0} is empty")]
    EmptyChart(usize),
    #[error("charts do not cover the vertex set; vertex {0} uncovered")]
    NotCovering(usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
}

/// A finite graph with named vertices and a cover by vertex subsets.
///
/// Topology enters only through adjacency (connectivity, monodromy) and the
/// nerve of the cover; "continuous function" on a model means any vertex
/// assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CechSpace {
    pub name: String,
    labels: Vec<String>,
    label_index: BTreeMap<String, usize>,
    edges: BTreeSet<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    charts: Vec<BTreeSet<usize>>,
}

impl CechSpace {
    pub fn new(
        name: &str,
        labels: Vec<String>,
        edge_pairs: Vec<(usize, usize)>,
        charts: Vec<Vec<usize>>,
    ) -> Result<Self, SpaceError> {
        let n = labels.len();
        let mut edges = BTreeSet::new();
        let mut adjacency = vec![Vec::new(); n];
        for (a, b) in edge_pairs {
            if a >= n {
                return Err(SpaceError::UnknownVertex(a));
            }
            if b >= n {
                return Err(SpaceError::UnknownVertex(b));
            }
            if a == b {
                return Err(SpaceError::SelfLoop(a));
            }
            let (lo, hi) = (a.min(b), a.max(b));
            if edges.insert((lo, hi)) {
                adjacency[lo].push(hi);
                adjacency[hi].push(lo);
            }
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        let mut chart_sets = Vec::new();
        let mut covered = vec![false; n];
        for (i, chart) in charts.into_iter().enumerate() {
            let set: BTreeSet<usize> = chart.into_iter().collect();
            if set.is_empty() {
                return Err(SpaceError::EmptyChart(i));
            }
            for &v in &set {
                if v >= n {
                    return Err(SpaceError::UnknownVertex(v));
                }
                covered[v] = true;
            }
            chart_sets.push(set);
        }
        if let Some(v) = covered.iter().position(|&c| !c) {
            return Err(SpaceError::NotCovering(v));
        }
        let label_index =
            labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        Ok(CechSpace {
            name: name.to_string(),
            labels,
            label_index,
            edges,
            adjacency,
            charts: chart_sets,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = usize> {
        0..self.labels.len()
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn vertex_by_label(&self, label: &str) -> Option<usize> {
        self.label_index.get(label).copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn chart_count(&self) -> usize {
        self.charts.len()
    }

    pub fn chart(&self, i: usize) -> &BTreeSet<usize> {
        &self.charts[i]
    }

    /// Vertices of the overlap U_i ∩ U_j, ascending.
    pub fn overlap(&self, i: usize, j: usize) -> Vec<usize> {
        self.charts[i].intersection(&self.charts[j]).copied().collect()
    }

    /// Ordered chart pairs (i < j) with nonempty overlap.
    pub fn overlapping_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for i in 0..self.charts.len() {
            for j in (i + 1)..self.charts.len() {
                if !self.charts[i].is_disjoint(&self.charts[j]) {
                    pairs.push((i, j));
                }
            }
        }
        pairs
    }

    pub fn triple_overlap(&self, i: usize, j: usize, k: usize) -> Vec<usize> {
        self.charts[i]
            .iter()
            .filter(|v| self.charts[j].contains(v) && self.charts[k].contains(v))
            .copied()
            .collect()
    }

    /// Closed star of a vertex: the vertex and its neighbors.
    pub fn closed_star(&self, v: usize) -> BTreeSet<usize> {
        let mut star: BTreeSet<usize> = self.adjacency[v].iter().copied().collect();
        star.insert(v);
        star
    }

    /// The subspace induced on `subset`, with charts restricted to it (empty
    /// restrictions dropped). Returns the space, the old ids of its vertices
    /// in order, and per old chart the new chart index if it survived.
    pub fn induced(
        &self,
        name: &str,
        subset: &BTreeSet<usize>,
    ) -> (CechSpace, Vec<usize>, Vec<Option<usize>>) {
        let verts: Vec<usize> = subset.iter().copied().collect();
        let back: BTreeMap<usize, usize> =
            verts.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let labels = verts.iter().map(|&v| self.labels[v].clone()).collect();
        let edges = self
            .edges
            .iter()
            .filter(|(a, b)| subset.contains(a) && subset.contains(b))
            .map(|(a, b)| (back[a], back[b]))
            .collect();
        let mut charts: Vec<Vec<usize>> = Vec::new();
        let mut chart_map: Vec<Option<usize>> = Vec::with_capacity(self.charts.len());
        for chart in &self.charts {
            let restricted: Vec<usize> =
                chart.iter().filter_map(|v| back.get(v).copied()).collect();
            if restricted.is_empty() {
                chart_map.push(None);
            } else {
                chart_map.push(Some(charts.len()));
                charts.push(restricted);
            }
        }
        let space = CechSpace::new(name, labels, edges, charts)
            .expect("induced subspace of a valid space is valid");
        (space, verts, chart_map)
    }
}

/// Connected components of the subgraph induced on `subset` (BFS).
pub fn connected_components(
    space: &CechSpace,
    subset: &BTreeSet<usize>,
) -> Result<Vec<BTreeSet<usize>>, SpaceError> {
    for &v in subset {
        if v >= space.vertex_count() {
            return Err(SpaceError::UnknownVertex(v));
        }
    }
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    let mut components = Vec::new();
    for &start in subset {
        if seen.contains(&start) {
            continue;
        }
        let mut component = BTreeSet::new();
        let mut queue = std::collections::VecDeque::from([start]);
        seen.insert(start);
        while let Some(v) = queue.pop_front() {
            component.insert(v);
            for &w in space.neighbors(v) {
                if subset.contains(&w) && seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        components.push(component);
    }
    Ok(components)
}

/// Per-intersection connectivity report for the good-cover property.
#[derive(Debug, Clone)]
pub struct GoodCoverReport {
    pub good: bool,
    /// (chart tuple, number of components) for every nonempty double and
    /// triple intersection that fails to be connected.
    pub violations: Vec<(Vec<usize>, usize)>,
}

pub fn validate_good_cover(space: &CechSpace) -> GoodCoverReport {
    let mut violations = Vec::new();
    let mut check = |charts: Vec<usize>, overlap: Vec<usize>| {
        if overlap.is_empty() {
            return;
        }
        let set: BTreeSet<usize> = overlap.into_iter().collect();
        let comps = connected_components(space, &set).expect("overlap vertices exist");
        if comps.len() != 1 {
            violations.push((charts, comps.len()));
        }
    };
    for i in 0..space.chart_count() {
        check(vec![i], space.chart(i).iter().copied().collect());
    }
    for (i, j) in space.overlapping_pairs() {
        check(vec![i, j], space.overlap(i, j));
    }
    for i in 0..space.chart_count() {
        for j in (i + 1)..space.chart_count() {
            for k in (j + 1)..space.chart_count() {
                check(vec![i, j, k], space.triple_overlap(i, j, k));
            }
        }
    }
    GoodCoverReport { good: violations.is_empty(), violations }
}

/// The nerve of the cover, up to 3-simplices. Simplices are strictly
/// ascending chart index tuples with nonempty common intersection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nerve {
    pub vertices: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    pub triangles: Vec<(usize, usize, usize)>,
    pub tetrahedra: Vec<(usize, usize, usize, usize)>,
}

pub fn nerve(space: &CechSpace) -> Nerve {
    let m = space.chart_count();
    let vertices = (0..m).collect();
    let edges = space.overlapping_pairs();
    let mut triangles = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            for k in (j + 1)..m {
                if !space.triple_overlap(i, j, k).is_empty() {
                    triangles.push((i, j, k));
                }
            }
        }
    }
    let mut tetrahedra = Vec::new();
    for &(i, j, k) in &triangles {
        for l in (k + 1)..m {
            let quad = space
                .triple_overlap(i, j, k)
                .into_iter()
                .filter(|v| space.chart(l).contains(v))
                .count();
            if quad > 0 {
                tetrahedra.push((i, j, k, l));
            }
        }
    }
    Nerve { vertices, edges, triangles, tetrahedra }
}

impl Nerve {
    /// Downward closure check; also requires 0-simplices to enumerate charts.
    pub fn is_closed(&self) -> bool {
        let has_edge = |a: usize, b: usize| self.edges.contains(&(a.min(b), a.max(b)));
        self.triangles.iter().all(|&(i, j, k)| {
            has_edge(i, j) && has_edge(j, k) && has_edge(i, k)
        }) && self.tetrahedra.iter().all(|&(i, j, k, l)| {
            [(i, j, k), (i, j, l), (i, k, l), (j, k, l)]
                .iter()
                .all(|t| self.triangles.contains(t))
        })
    }
}

/// A spanning forest of the subgraph induced on `subset`: BFS trees rooted at
/// the least vertex of each component. Returns (root, parent edges) pairs;
/// parent edges are (child, parent).
pub fn spanning_forest(
    space: &CechSpace,
    subset: &BTreeSet<usize>,
) -> Vec<(usize, Vec<(usize, usize)>)> {
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    let mut forest = Vec::new();
    for &start in subset {
        if seen.contains(&start) {
            continue;
        }
        let mut tree = Vec::new();
        let mut queue = std::collections::VecDeque::from([start]);
        seen.insert(start);
        while let Some(v) = queue.pop_front() {
            for &w in space.neighbors(v) {
                if subset.contains(&w) && seen.insert(w) {
                    tree.push((w, v));
                    queue.push_back(w);
                }
            }
        }
        forest.push((start, tree));
    }
    forest
}

pub type SharedSpace = Arc<CechSpace>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::spaces;

    fn path3() -> CechSpace {
        CechSpace::new(
            "path3",
            vec!["a".into(), "b".into(), "c".into()],
            vec![(0, 1), (1, 2)],
            vec![vec![0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn components_of_full_path() {
        let s = path3();
        let all: BTreeSet<usize> = [0, 1, 2].into();
        let comps = connected_components(&s, &all).unwrap();
        assert_eq!(comps.len(), 1);
    }

    #[test]
    fn components_split_without_midpoint() {
        let s = path3();
        let sub: BTreeSet<usize> = [0, 2].into();
        let comps = connected_components(&s, &sub).unwrap();
        assert_eq!(comps.len(), 2);
    }

    #[test]
    fn components_partition_subset() {
        let s = spaces::circle();
        let sub: BTreeSet<usize> = (1..s.vertex_count()).collect();
        let comps = connected_components(&s, &sub).unwrap();
        assert_eq!(comps.len(), 1, "circle minus a vertex stays connected");
        let union: BTreeSet<usize> = comps.into_iter().flatten().collect();
        assert_eq!(union, sub);
    }

    #[test]
    fn unknown_vertex_is_rejected() {
        let s = path3();
        let sub: BTreeSet<usize> = [0, 99].into();
        assert!(matches!(
            connected_components(&s, &sub),
            Err(SpaceError::UnknownVertex(99))
        ));
    }

    #[test]
    fn three_arc_circle_cover_is_good() {
        let s = spaces::circle();
        let report = validate_good_cover(&s);
        assert!(report.good, "violations: {:?}", report.violations);
    }

    #[test]
    fn antipodal_two_arc_cover_is_not_good() {
        // Two opposite arcs of an 8-gon overlapping in two antipodal arcs.
        let labels = (0..8).map(|i| format!("v{i}")).collect();
        let edges = (0..8).map(|i| (i, (i + 1) % 8)).collect();
        let charts = vec![vec![7, 0, 1, 2, 3], vec![3, 4, 5, 6, 7]];
        let s = CechSpace::new("bad-circle", labels, edges, charts).unwrap();
        let report = validate_good_cover(&s);
        assert!(!report.good);
        assert!(report.violations.iter().any(|(t, n)| t == &vec![0, 1] && *n == 2));
    }

    #[test]
    fn sphere_star_cover_is_good() {
        let s = spaces::sphere();
        let report = validate_good_cover(&s);
        assert!(report.good, "violations: {:?}", report.violations);
    }

    #[test]
    fn circle_nerve_is_triangle_boundary() {
        let n = nerve(&spaces::circle());
        assert_eq!(n.vertices.len(), 3);
        assert_eq!(n.edges, vec![(0, 1), (0, 2), (1, 2)]);
        assert!(n.triangles.is_empty());
        assert!(n.is_closed());
    }

    #[test]
    fn single_chart_nerve() {
        let s = CechSpace::new(
            "pt",
            vec!["p".into()],
            vec![],
            vec![vec![0]],
        )
        .unwrap();
        let n = nerve(&s);
        assert_eq!(n.vertices.len(), 1);
        assert!(n.edges.is_empty());
    }

    #[test]
    fn sphere_nerve_is_octahedron_complex() {
        let n = nerve(&spaces::sphere());
        assert_eq!(n.vertices.len(), 6);
        assert_eq!(n.edges.len(), 12, "octahedron has 12 edges: {:?}", n.edges);
        assert_eq!(n.triangles.len(), 8, "octahedron has 8 faces");
        assert!(n.tetrahedra.is_empty());
        assert!(n.is_closed());
    }

    #[test]
    fn projective_plane_nerve_matches_minimal_triangulation() {
        let n = nerve(&spaces::projective_plane());
        assert_eq!(n.vertices.len(), 6);
        assert_eq!(n.edges.len(), 15);
        assert_eq!(n.triangles.len(), 10);
        assert!(n.tetrahedra.is_empty());
        assert!(n.is_closed());
    }
}
