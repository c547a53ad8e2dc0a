//! Reconstruction from the left action: the canonical abelian subalgebra
//! C*(im ι, im φ) and its double commutant as branched coverings, local
//! conjugacy, and the constant-rank isomorphism criterion.

use crate::cohomology::nerve_class;
use crate::correspondence::{CorrespondenceError, TwistedCorrespondence};
use crate::group::DiagPermUnitary;
use crate::space::{CechSpace, SharedSpace};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReconstructError {
    #[error("selected subalgebra does not have constant fiber rank")]
    NotConstantRank,
    #[error("spectrum cover is not good enough for the bundle comparison")]
    NotGoodCover,
    #[error(transparent)]
    Correspondence(#[from] CorrespondenceError),
}

/// The Gelfand dual of an abelian subalgebra of the compacts containing
/// ι(C₀(X)) and φ(C₀(Y)): a branched covering of X whose points are classes
/// of sheets, decorated by the range value and carrying the rank of the
/// class projection as multiplicity.
#[derive(Debug, Clone)]
pub struct BranchedSpectrum {
    pub base: SharedSpace,
    pub target: SharedSpace,
    /// Per spectrum vertex: base point, member sheets (total vertices of the
    /// underlying correspondence), and the range decorations of the members.
    pub verts: Vec<SpectrumVertex>,
    pub fibers: Vec<Vec<usize>>,
    pub edges: BTreeSet<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct SpectrumVertex {
    pub base: usize,
    pub members: Vec<usize>,
    pub ranges: BTreeSet<usize>,
}

impl BranchedSpectrum {
    pub fn vertex_count(&self) -> usize {
        self.verts.len()
    }

    pub fn multiplicity(&self, v: usize) -> usize {
        self.verts[v].members.len()
    }

    /// The common range decoration; classes of the generated algebra always
    /// have one.
    pub fn range(&self, v: usize) -> usize {
        *self.verts[v].ranges.iter().next().unwrap()
    }

    pub fn is_range_decorated(&self) -> bool {
        self.verts.iter().all(|v| v.ranges.len() == 1)
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn has_edge(&self, v: usize, w: usize) -> bool {
        self.edges.contains(&(v.min(w), v.max(w)))
    }

    pub fn fiber_count(&self, x: usize) -> usize {
        self.fibers[x].len()
    }

    /// Fiber multiplicities sum to the module rank.
    pub fn validate(&self, c: &TwistedCorrespondence) -> Vec<String> {
        let mut issues = Vec::new();
        for x in self.base.vertices() {
            let total: usize = self.fibers[x].iter().map(|&v| self.multiplicity(v)).sum();
            if total != c.fiber_dim(x) {
                issues.push(format!("multiplicities at {x} sum to {total}"));
            }
        }
        for (v, vert) in self.verts.iter().enumerate() {
            if vert.ranges.len() != 1 {
                issues.push(format!("class {v} has mixed range decorations"));
            }
        }
        issues
    }
}

/// Quotient the sheets by a union-find-style class map and build the
/// spectrum with inherited edges.
fn spectrum_from_classes(
    c: &TwistedCorrespondence,
    class_of: &[usize],
    class_count: usize,
) -> BranchedSpectrum {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); class_count];
    for z in 0..c.covering.total_count() {
        members[class_of[z]].push(z);
    }
    // Deterministic order: by (base vertex, least member sheet index).
    let mut order: Vec<usize> = (0..class_count).collect();
    order.sort_by_key(|&cl| {
        let z0 = members[cl][0];
        (c.covering.base_of(z0), c.covering.sheet_index(z0))
    });
    let renumber: BTreeMap<usize, usize> =
        order.iter().enumerate().map(|(new, &old)| (old, new)).collect();

    let mut verts = Vec::with_capacity(class_count);
    for &old in &order {
        let ms = members[old].clone();
        let base = c.covering.base_of(ms[0]);
        let ranges = ms.iter().map(|&z| c.range[z]).collect();
        verts.push(SpectrumVertex { base, members: ms, ranges });
    }
    let mut fibers = vec![Vec::new(); c.base().vertex_count()];
    for (v, vert) in verts.iter().enumerate() {
        fibers[vert.base].push(v);
    }
    let mut edges = BTreeSet::new();
    let mut adjacency = vec![Vec::new(); verts.len()];
    for &(z, w) in &c.covering.edges {
        let (a, b) = (renumber[&class_of[z]], renumber[&class_of[w]]);
        if a != b && edges.insert((a.min(b), a.max(b))) {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
    }
    for adj in &mut adjacency {
        adj.sort_unstable();
    }
    BranchedSpectrum {
        base: c.base().clone(),
        target: c.target.clone(),
        verts,
        fibers,
        edges,
        adjacency,
    }
}

struct Classes {
    parent: Vec<usize>,
}

impl Classes {
    fn new(n: usize) -> Self {
        Classes { parent: (0..n).collect() }
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
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
    fn compress(&mut self) -> (Vec<usize>, usize) {
        let n = self.parent.len();
        let mut ids = BTreeMap::new();
        let mut out = vec![0; n];
        for i in 0..n {
            let root = self.find(i);
            let next = ids.len();
            out[i] = *ids.entry(root).or_insert(next);
        }
        (out, ids.len())
    }
}

/// Spectrum of C*(im ι, im φ): sheets are identified over each base vertex
/// exactly when their range values agree.
pub fn generated_subalgebra_spectrum(c: &TwistedCorrespondence) -> BranchedSpectrum {
    let mut classes = Classes::new(c.covering.total_count());
    for x in c.base().vertices() {
        let fiber = c.covering.fiber(x);
        for (idx, &z) in fiber.iter().enumerate() {
            for &w in &fiber[idx + 1..] {
                if c.range[z] == c.range[w] {
                    classes.union(z, w);
                }
            }
        }
    }
    let (class_of, count) = classes.compress();
    spectrum_from_classes(c, &class_of, count)
}

/// Spectrum of the double commutant C*(im ι, im φ)'' inside the compacts.
///
/// B is the discrete branch set: vertices where the generated spectrum's
/// fiber count differs from a neighbor's. Off B the gluing is the generated
/// one; at B sheets glue only when a non-branch neighbor glues the
/// edge-corresponding sheets.
pub fn double_commutant_spectrum(c: &TwistedCorrespondence) -> BranchedSpectrum {
    let generated = generated_subalgebra_spectrum(c);
    let base = c.base();
    let branch: BTreeSet<usize> = base
        .vertices()
        .filter(|&x| {
            base.neighbors(x)
                .iter()
                .any(|&y| generated.fiber_count(y) != generated.fiber_count(x))
        })
        .collect();

    let mut classes = Classes::new(c.covering.total_count());
    for x in base.vertices() {
        if branch.contains(&x) {
            continue;
        }
        let fiber = c.covering.fiber(x);
        for (idx, &z) in fiber.iter().enumerate() {
            for &w in &fiber[idx + 1..] {
                if c.range[z] == c.range[w] {
                    classes.union(z, w);
                }
            }
        }
    }
    // Gluing at branch vertices propagates from non-branch neighbors.
    for &x in &branch {
        for &y in base.neighbors(x) {
            if branch.contains(&y) {
                continue;
            }
            let matching = c.covering.edge_matching(x, y);
            let fiber = c.covering.fiber(x);
            for (idx, &z) in fiber.iter().enumerate() {
                for &w in &fiber[idx + 1..] {
                    if classes.find(matching[&z]) == classes.find(matching[&w]) {
                        classes.union(z, w);
                    }
                }
            }
        }
    }
    let (class_of, count) = classes.compress();
    spectrum_from_classes(c, &class_of, count)
}

/// Unique base-preserving ≅_{ι,φ} isomorphism between two generated
/// spectra: classes match by range decoration per fiber (existence is
/// exactly equality of the decorated fiber sets), edges are verified.
pub fn spectra_iso_iota_phi(a: &BranchedSpectrum, b: &BranchedSpectrum) -> Option<Vec<usize>> {
    if *a.base != *b.base || *a.target != *b.target {
        return None;
    }
    let mut map = vec![usize::MAX; a.vertex_count()];
    for x in a.base.vertices() {
        let fa = &a.fibers[x];
        let fb = &b.fibers[x];
        if fa.len() != fb.len() {
            return None;
        }
        for &va in fa {
            let matches: Vec<usize> = fb
                .iter()
                .copied()
                .filter(|&vb| a.verts[va].ranges == b.verts[vb].ranges)
                .collect();
            // Generated-algebra decorations are distinct within a fiber.
            if matches.len() != 1 {
                return None;
            }
            map[va] = matches[0];
        }
    }
    for &(v, w) in &a.edges {
        if !b.has_edge(map[v], map[w]) {
            return None;
        }
    }
    if a.edges.len() != b.edges.len() {
        return None;
    }
    Some(map)
}

/// Backtracking decorated isomorphism for spectra whose decorations may
/// repeat within a fiber (double-commutant spectra, rebuilt graphs).
/// Matches multiplicity and decoration, verifies all edges.
pub fn spectra_isomorphic_decorated(
    a: &BranchedSpectrum,
    b: &BranchedSpectrum,
) -> Option<Vec<usize>> {
    if *a.base != *b.base || *a.target != *b.target {
        return None;
    }
    if a.vertex_count() != b.vertex_count() || a.edges.len() != b.edges.len() {
        return None;
    }
    let xs: Vec<usize> = a.base.vertices().collect();
    let mut map = vec![usize::MAX; a.vertex_count()];
    let mut used = vec![false; b.vertex_count()];

    fn compatible(a: &BranchedSpectrum, b: &BranchedSpectrum, va: usize, vb: usize) -> bool {
        a.verts[va].base == b.verts[vb].base
            && a.multiplicity(va) == b.multiplicity(vb)
            && a.verts[va].ranges == b.verts[vb].ranges
    }

    fn place(
        a: &BranchedSpectrum,
        b: &BranchedSpectrum,
        xs: &[usize],
        xi: usize,
        vi: usize,
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
    ) -> bool {
        if xi == xs.len() {
            return a
                .edges
                .iter()
                .all(|&(v, w)| b.has_edge(map[v], map[w]));
        }
        let x = xs[xi];
        if vi == a.fibers[x].len() {
            return place(a, b, xs, xi + 1, 0, map, used);
        }
        let va = a.fibers[x][vi];
        for &vb in &b.fibers[x] {
            if used[vb] || !compatible(a, b, va, vb) {
                continue;
            }
            // Edges to already-placed vertices must be present.
            let ok = a.neighbors(va).iter().all(|&wa| {
                map[wa] == usize::MAX || b.has_edge(vb, map[wa])
            });
            if !ok {
                continue;
            }
            map[va] = vb;
            used[vb] = true;
            if place(a, b, xs, xi, vi + 1, map, used) {
                return true;
            }
            map[va] = usize::MAX;
            used[vb] = false;
        }
        false
    }

    if place(a, b, &xs, 0, 0, &mut map, &mut used) {
        Some(map)
    } else {
        None
    }
}

/// Local conjugacy: the correspondences restricted to every closed vertex
/// star are isomorphic.
pub fn locally_conjugate(
    a: &TwistedCorrespondence,
    b: &TwistedCorrespondence,
) -> Result<bool, CorrespondenceError> {
    if *a.target != *b.target || *a.base() != *b.base() {
        return Err(CorrespondenceError::SpaceMismatch);
    }
    for x in a.base().vertices() {
        let star = a.base().closed_star(x);
        let ra = a.restrict("star", &star);
        let rb = b.restrict("star", &star);
        if restricted_isomorphic(&ra, &rb)?.is_none() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Correspondence isomorphism with the twist comparison at nerve level, for
/// restrictions whose covers need not be good.
fn restricted_isomorphic(
    a: &TwistedCorrespondence,
    b: &TwistedCorrespondence,
) -> Result<Option<Vec<usize>>, CorrespondenceError> {
    let compat = |za: usize, zb: usize| a.range[za] == b.range[zb];
    let mut found: Option<Vec<usize>> = None;
    crate::bundle::visit_covering_isomorphisms(&a.covering, &b.covering, &compat, &mut |phi| {
        let pullback = crate::bundle::pull_back_phases(phi, &a.line, &b.line);
        let ratio = a
            .line
            .phases
            .tensor(&pullback.conjugate())
            .expect("same cover");
        match nerve_class(&ratio) {
            Ok(class) if class.is_zero() => {
                found = Some(phi.to_vec());
                true
            }
            _ => false,
        }
    })?;
    Ok(found)
}

/// Local isomorphism of the associated C*-correspondences: the star
/// restrictions pass the C*-level search. By the local-conjugacy
/// equivalence this agrees with `locally_conjugate`.
pub fn locally_cstar_isomorphic(
    a: &TwistedCorrespondence,
    b: &TwistedCorrespondence,
) -> Result<bool, CorrespondenceError> {
    for x in a.base().vertices() {
        let star = a.base().closed_star(x);
        let ra = a.restrict("star", &star);
        let rb = b.restrict("star", &star);
        if crate::correspondence::cstar_correspondences_isomorphic(&ra, &rb)?.is_none() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A Čech model of a spectrum: vertices are the spectrum classes, the cover
/// consists of the connected components of the chart preimages, in an order
/// that a decorated isomorphism can reproduce on the other side.
struct SpectrumCover {
    space: SharedSpace,
    /// (base chart, spectrum vertices) per piece.
    pieces: Vec<(usize, Vec<usize>)>,
}

fn spectrum_cover_canonical(spec: &BranchedSpectrum) -> SpectrumCover {
    let mut pieces: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..spec.base.chart_count() {
        let over: BTreeSet<usize> = (0..spec.vertex_count())
            .filter(|&v| spec.base.chart(i).contains(&spec.verts[v].base))
            .collect();
        for component in spectrum_components(spec, &over) {
            pieces.push((i, component));
        }
    }
    SpectrumCover { space: spectrum_space(spec, &pieces), pieces }
}

fn spectrum_cover_matched(
    spec: &BranchedSpectrum,
    iso: &[usize],
    template: &SpectrumCover,
) -> SpectrumCover {
    let pieces: Vec<(usize, Vec<usize>)> = template
        .pieces
        .iter()
        .map(|(i, vs)| (*i, vs.iter().map(|&v| iso[v]).collect()))
        .collect();
    SpectrumCover { space: spectrum_space(spec, &pieces), pieces }
}

fn spectrum_components(spec: &BranchedSpectrum, subset: &BTreeSet<usize>) -> Vec<Vec<usize>> {
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    let mut out = Vec::new();
    for &start in subset {
        if seen.contains(&start) {
            continue;
        }
        let mut comp = Vec::new();
        let mut queue = std::collections::VecDeque::from([start]);
        seen.insert(start);
        while let Some(v) = queue.pop_front() {
            comp.push(v);
            for &w in spec.neighbors(v) {
                if subset.contains(&w) && seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

fn spectrum_space(spec: &BranchedSpectrum, pieces: &[(usize, Vec<usize>)]) -> SharedSpace {
    let labels = (0..spec.vertex_count())
        .map(|v| format!("d{v}@{}", spec.base.label(spec.verts[v].base)))
        .collect();
    let edges = spec.edges.iter().copied().collect();
    let charts = pieces.iter().map(|(_, vs)| vs.clone()).collect();
    Arc::new(
        CechSpace::new("spectrum", labels, edges, charts)
            .expect("spectrum pieces cover the spectrum"),
    )
}

/// The determinant line bundle of the module over the spectrum: per overlap
/// vertex, the sign of the sheet permutation times the product of the
/// member phases.
fn det_system(
    c: &TwistedCorrespondence,
    spec: &BranchedSpectrum,
    cover: &SpectrumCover,
) -> crate::cocycle::TransitionSystem {
    let mut system = crate::cocycle::TransitionSystem::identity(cover.space.clone(), 1);
    for (pi, pj) in cover.space.overlapping_pairs() {
        let (chart_i, _) = cover.pieces[pi];
        let (chart_j, _) = cover.pieces[pj];
        if chart_i == chart_j {
            continue;
        }
        for v in cover.space.overlap(pi, pj) {
            let members = &spec.verts[v].members;
            let mut by_i: Vec<usize> = members.clone();
            by_i.sort_by_key(|&z| c.covering.coord(z, chart_i).unwrap());
            let mut by_j: Vec<usize> = members.clone();
            by_j.sort_by_key(|&z| c.covering.coord(z, chart_j).unwrap());
            // Permutation sending positions in the chart-j basis to
            // positions in the chart-i basis.
            let pos_i: BTreeMap<usize, usize> =
                by_i.iter().enumerate().map(|(p, &z)| (z, p)).collect();
            let images: Vec<usize> = by_j.iter().map(|&z| pos_i[&z]).collect();
            let sign = crate::group::Permutation::new(images).unwrap().sign();
            let mut phase = crate::linalg::C64::new(sign as f64, 0.0);
            for &z in members {
                let a = c.covering.refined_chart(chart_i, c.covering.coord(z, chart_i).unwrap());
                let b = c.covering.refined_chart(chart_j, c.covering.coord(z, chart_j).unwrap());
                phase *= c.line.chart_change(a, b, z);
            }
            system.set(pi, pj, v, DiagPermUnitary::phase(phase));
        }
    }
    system
}

/// Compare the module-over-spectrum bundle data of two correspondences
/// along a decorated spectrum isomorphism: multiplicity profiles must agree
/// and the determinant line classes must match over the common cover.
pub fn module_bundles_match(
    a: &TwistedCorrespondence,
    spec_a: &BranchedSpectrum,
    b: &TwistedCorrespondence,
    spec_b: &BranchedSpectrum,
    iso: &[usize],
) -> Result<bool, CorrespondenceError> {
    for v in 0..spec_a.vertex_count() {
        if spec_a.multiplicity(v) != spec_b.multiplicity(iso[v]) {
            return Ok(false);
        }
    }
    let cover_a = spectrum_cover_canonical(spec_a);
    let cover_b = spectrum_cover_matched(spec_b, iso, &cover_a);
    let det_a = det_system(a, spec_a, &cover_a);
    let det_b = det_system(b, spec_b, &cover_b);
    // Pull det_b back along the isomorphism onto cover_a's index set.
    let mut pullback = crate::cocycle::TransitionSystem::identity(cover_a.space.clone(), 1);
    for (pi, pj) in cover_a.space.overlapping_pairs() {
        for v in cover_a.space.overlap(pi, pj) {
            let value = det_b
                .value(pi, pj, iso[v])
                .expect("matched cover has the same overlap pattern");
            pullback.set(pi, pj, v, value);
        }
    }
    let ratio = det_a.tensor(&pullback.conjugate()).expect("same cover");
    match nerve_class(&ratio) {
        Ok(class) => Ok(class.is_zero()),
        Err(_) => Err(CorrespondenceError::Bundle(crate::bundle::BundleError::NotGoodCover)),
    }
}

/// Which subalgebra the constant-rank check runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankAlgebra {
    Generated,
    DoubleCommutant,
    /// Prefer the double commutant when its rank is constant, then the
    /// generated algebra; fall back to the generated spectrum's unique
    /// decorated matching when neither has constant rank.
    Auto,
}

#[derive(Debug, Clone)]
pub struct IsoVerdict {
    pub algebra: &'static str,
    pub constant_rank: bool,
    pub spectra_matched: bool,
    pub locally_conjugate: bool,
    pub bundles_match: bool,
    pub isomorphic: bool,
}

/// The isomorphism criterion for C*-correspondences: local conjugacy plus
/// agreement of the module bundle over the selected subalgebra's spectrum.
pub fn constant_rank_iso_check(
    a: &TwistedCorrespondence,
    b: &TwistedCorrespondence,
    mode: RankAlgebra,
) -> Result<IsoVerdict, ReconstructError> {
    let constant = |spec: &BranchedSpectrum| {
        let mut counts = spec.base.vertices().map(|x| spec.fiber_count(x));
        let first = counts.next().unwrap_or(0);
        counts.all(|c| c == first)
    };

    let (algebra, spec_a, spec_b) = match mode {
        RankAlgebra::Generated => {
            let sa = generated_subalgebra_spectrum(a);
            let sb = generated_subalgebra_spectrum(b);
            if !constant(&sa) || !constant(&sb) {
                return Err(ReconstructError::NotConstantRank);
            }
            ("generated", sa, sb)
        }
        RankAlgebra::DoubleCommutant => {
            let sa = double_commutant_spectrum(a);
            let sb = double_commutant_spectrum(b);
            if !constant(&sa) || !constant(&sb) {
                return Err(ReconstructError::NotConstantRank);
            }
            ("double-commutant", sa, sb)
        }
        RankAlgebra::Auto => {
            let dca = double_commutant_spectrum(a);
            let dcb = double_commutant_spectrum(b);
            if constant(&dca) && constant(&dcb) {
                ("double-commutant", dca, dcb)
            } else {
                let sa = generated_subalgebra_spectrum(a);
                let sb = generated_subalgebra_spectrum(b);
                ("generated", sa, sb)
            }
        }
    };
    let constant_rank = constant(&spec_a) && constant(&spec_b);

    let iso = if algebra == "generated" {
        spectra_iso_iota_phi(&spec_a, &spec_b)
    } else {
        spectra_isomorphic_decorated(&spec_a, &spec_b)
    };
    let Some(iso) = iso else {
        return Ok(IsoVerdict {
            algebra,
            constant_rank,
            spectra_matched: false,
            locally_conjugate: false,
            bundles_match: false,
            isomorphic: false,
        });
    };

    let loc = locally_conjugate(a, b)?;
    let bundles = module_bundles_match(a, &spec_a, b, &spec_b, &iso).map_err(|e| match e {
        CorrespondenceError::Bundle(crate::bundle::BundleError::NotGoodCover) => {
            ReconstructError::NotGoodCover
        }
        other => ReconstructError::Correspondence(other),
    })?;
    Ok(IsoVerdict {
        algebra,
        constant_rank,
        spectra_matched: true,
        locally_conjugate: loc,
        bundles_match: bundles,
        isomorphic: loc && bundles,
    })
}

/// The graph rebuilt from a range-decorated spectrum, for comparing
/// reconstructions: the spectrum itself with its decorations (multiplicity
/// kept). Two reconstructions agree iff the decorated spectra are
/// isomorphic.
pub fn reconstructed_graphs_isomorphic(
    a: &BranchedSpectrum,
    b: &BranchedSpectrum,
) -> bool {
    spectra_isomorphic_decorated(a, b).is_some()
}
