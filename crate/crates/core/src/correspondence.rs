//! Twisted topological correspondences (Z, r, s, ℒ) and their
//! C*-correspondences: sections, inner products, left actions, frames, and
//! the two isomorphism notions (topological and C*-level).

use crate::bundle::{
    line_bundles_isomorphic_over, visit_covering_isomorphisms, BundleError, CoveringSpace,
    LineBundle,
};
use crate::linalg::{fro_norm, C64, CMat};
use crate::space::{CechSpace, SharedSpace};
use std::collections::BTreeSet;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorrespondenceError {
    #[error("range map sends covering edge ({0}, {1}) to non-adjacent target vertices")]
    RangeNotContinuous(usize, usize),
    #[error("range value {0} is not a vertex of the target space")]
    RangeOutOfBounds(usize),
    #[error("section has {got} entries, covering has {expect} total vertices")]
    ShapeMismatch { got: usize, expect: usize },
    #[error("partition of unity invalid: {0}")]
    BadPartition(String),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error("correspondences live over different spaces")]
    SpaceMismatch,
}

/// A section of ℒ in the canonical trivialization: one complex value per
/// total vertex, read in the least chart containing it.
pub type Section = Vec<C64>;

/// A complex function on the base, one value per X-vertex.
pub type BaseFunction = Vec<C64>;

/// A fiberwise operator: per X-vertex a matrix in the canonical fiber basis
/// indexed by s⁻¹(x) in canonical sheet order.
pub type OperatorField = Vec<CMat>;

/// A proper twisted topological Y-X-correspondence on finite models.
#[derive(Debug, Clone)]
pub struct TwistedCorrespondence {
    pub covering: Arc<CoveringSpace>,
    pub line: LineBundle,
    pub target: SharedSpace,
    /// r: total vertex -> Y-vertex.
    pub range: Vec<usize>,
}

impl TwistedCorrespondence {
    pub fn new(
        covering: Arc<CoveringSpace>,
        line: LineBundle,
        target: SharedSpace,
        range: Vec<usize>,
    ) -> Result<Self, CorrespondenceError> {
        if range.len() != covering.total_count() {
            return Err(CorrespondenceError::ShapeMismatch {
                got: range.len(),
                expect: covering.total_count(),
            });
        }
        for &y in &range {
            if y >= target.vertex_count() {
                return Err(CorrespondenceError::RangeOutOfBounds(y));
            }
        }
        // Graph-continuity: covering edges map to target edges or collapse.
        for &(z, w) in &covering.edges {
            let (ry, rw) = (range[z], range[w]);
            if ry != rw && !target.has_edge(ry, rw) {
                return Err(CorrespondenceError::RangeNotContinuous(z, w));
            }
        }
        Ok(TwistedCorrespondence { covering, line, target, range })
    }

    /// Untwisted correspondence from an S_n-cocycle and per-vertex range.
    pub fn untwisted(
        covering: Arc<CoveringSpace>,
        target: SharedSpace,
        range: Vec<usize>,
    ) -> Result<Self, CorrespondenceError> {
        let line = LineBundle::trivial(covering.clone());
        TwistedCorrespondence::new(covering, line, target, range)
    }

    pub fn base(&self) -> &SharedSpace {
        &self.covering.base
    }

    pub fn fiber_dim(&self, x: usize) -> usize {
        self.covering.fiber(x).len()
    }

    /// Phase converting the chart-`i` trivialization of the fiber line at z
    /// into the canonical (least-chart) trivialization.
    pub fn chart_to_canonical(&self, z: usize, chart: usize) -> C64 {
        let (_, least_chart, least_sheet) = self.covering.rep(z);
        let from = self.covering.refined_chart(least_chart, least_sheet);
        let to = self
            .covering
            .refined_chart(chart, self.covering.coord(z, chart).expect("z in chart"));
        self.line.chart_change(from, to, z)
    }

    /// Restriction to the subgraph induced on a base subset, with charts
    /// and range carried along.
    pub fn restrict(&self, name: &str, subset: &BTreeSet<usize>) -> TwistedCorrespondence {
        let (cov, _, total_map) = self.covering.restrict(name, subset);
        let cov = Arc::new(cov);
        let total = Arc::new(cov.total_space());
        let mut phases = crate::cocycle::TransitionSystem::identity(total.clone(), 1);

        // Chart index mapping for the restricted base.
        let (_, _, chart_map) = self.base().induced(name, subset);
        let old_of_new: Vec<usize> = {
            let mut v = vec![0; total_map.iter().flatten().count()];
            for (old, new) in total_map.iter().enumerate() {
                if let Some(new) = new {
                    v[*new] = old;
                }
            }
            v
        };
        for i_old in 0..self.base().chart_count() {
            let Some(i_new) = chart_map[i_old] else { continue };
            for j_old in (i_old + 1)..self.base().chart_count() {
                let Some(j_new) = chart_map[j_old] else { continue };
                for (new_z, &old_z) in old_of_new.iter().enumerate() {
                    let (Some(ci), Some(cj)) = (
                        self.covering.coord(old_z, i_old),
                        self.covering.coord(old_z, j_old),
                    ) else {
                        continue;
                    };
                    let a_old = self.covering.refined_chart(i_old, ci);
                    let b_old = self.covering.refined_chart(j_old, cj);
                    let phase = self.line.chart_change(a_old, b_old, old_z);
                    let a_new = cov.refined_chart(i_new, ci);
                    let b_new = cov.refined_chart(j_new, cj);
                    phases.set(a_new, b_new, new_z, crate::group::DiagPermUnitary::phase(phase));
                }
            }
        }
        let line = LineBundle { covering: cov.clone(), total, phases };
        let range = old_of_new.iter().map(|&old| self.range[old]).collect();
        TwistedCorrespondence::new(cov, line, self.target.clone(), range)
            .expect("restriction of a valid correspondence is valid")
    }
}

/// The left action of C₀(Y) in fiberwise form: one operator field per
/// Y-vertex delta function.
#[derive(Debug, Clone)]
pub struct LeftAction {
    pub target: SharedSpace,
    pub images: Vec<OperatorField>,
}

impl LeftAction {
    pub fn delta(&self, y: usize) -> &OperatorField {
        &self.images[y]
    }

    /// φ(f) for an arbitrary f on Y, assembled from the delta basis.
    pub fn apply(&self, f: &[C64]) -> OperatorField {
        let n_base = self.images[0].len();
        (0..n_base)
            .map(|x| {
                let dim = self.images[0][x].nrows();
                let mut m = CMat::zeros(dim, dim);
                for (y, field) in self.images.iter().enumerate() {
                    m += &field[x] * f[y];
                }
                m
            })
            .collect()
    }

    /// Nondegeneracy, properness and multiplicativity on the delta basis:
    /// the fields commute, are positive projections summing to the
    /// identity, and annihilate each other pairwise.
    pub fn validate(&self, tol: f64) -> Vec<String> {
        let mut issues = Vec::new();
        let n_base = self.images[0].len();
        for x in 0..n_base {
            let dim = self.images[0][x].nrows();
            let mut sum = CMat::zeros(dim, dim);
            for (y, field) in self.images.iter().enumerate() {
                let a = &field[x];
                if fro_norm(&(a - a.adjoint())) > tol {
                    issues.push(format!("phi(delta_{y}) not self-adjoint at x={x}"));
                }
                if fro_norm(&(a * a - a)) > tol {
                    issues.push(format!("phi(delta_{y}) not idempotent at x={x}"));
                }
                for (y2, field2) in self.images.iter().enumerate() {
                    if y2 != y && fro_norm(&(a * &field2[x])) > tol {
                        issues.push(format!("phi(delta_{y})phi(delta_{y2}) != 0 at x={x}"));
                    }
                }
                sum += a;
            }
            if fro_norm(&(sum - CMat::identity(dim, dim))) > tol {
                issues.push(format!("sum of phi(delta_y) not the identity at x={x}"));
            }
        }
        issues
    }
}

/// φ(δ_y)_x: diagonal projection onto the sheets z over x with r(z) = y.
pub fn left_action_of(c: &TwistedCorrespondence) -> LeftAction {
    let base = c.base();
    let images = (0..c.target.vertex_count())
        .map(|y| {
            base.vertices()
                .map(|x| {
                    let fiber = c.covering.fiber(x);
                    let mut m = CMat::zeros(fiber.len(), fiber.len());
                    for (pos, &z) in fiber.iter().enumerate() {
                        if c.range[z] == y {
                            m[(pos, pos)] = C64::new(1.0, 0.0);
                        }
                    }
                    m
                })
                .collect()
        })
        .collect();
    LeftAction { target: c.target.clone(), images }
}

/// ⟨ξ, η⟩(x) = Σ_{z ∈ s⁻¹(x)} conj(ξ(z)) η(z).
pub fn inner_product(
    c: &TwistedCorrespondence,
    xi: &Section,
    eta: &Section,
) -> Result<BaseFunction, CorrespondenceError> {
    let expect = c.covering.total_count();
    if xi.len() != expect || eta.len() != expect {
        return Err(CorrespondenceError::ShapeMismatch {
            got: xi.len().max(eta.len()),
            expect,
        });
    }
    Ok(c.base()
        .vertices()
        .map(|x| {
            c.covering
                .fiber(x)
                .iter()
                .map(|&z| xi[z].conj() * eta[z])
                .sum()
        })
        .collect())
}

/// Right multiplication (ξ f)(z) = ξ(z) f(s(z)).
pub fn right_multiply(c: &TwistedCorrespondence, xi: &Section, f: &BaseFunction) -> Section {
    xi.iter()
        .enumerate()
        .map(|(z, &v)| v * f[c.covering.base_of(z)])
        .collect()
}

/// Θ_f for f on Z: pointwise multiplication, diagonal in the canonical
/// basis.
pub fn mult_operator(c: &TwistedCorrespondence, f: &[C64]) -> OperatorField {
    c.base()
        .vertices()
        .map(|x| {
            let fiber = c.covering.fiber(x);
            let mut m = CMat::zeros(fiber.len(), fiber.len());
            for (pos, &z) in fiber.iter().enumerate() {
                m[(pos, pos)] = f[z];
            }
            m
        })
        .collect()
}

/// Apply an operator field to a section fiberwise.
pub fn apply_field(c: &TwistedCorrespondence, field: &OperatorField, xi: &Section) -> Section {
    let mut out = vec![C64::new(0.0, 0.0); xi.len()];
    for x in c.base().vertices() {
        let fiber = c.covering.fiber(x);
        for (row, &z) in fiber.iter().enumerate() {
            out[z] = fiber
                .iter()
                .enumerate()
                .map(|(col, &w)| field[x][(row, col)] * xi[w])
                .sum();
        }
    }
    out
}

/// A square-normalized partition subordinate to the cover: per chart a
/// nonnegative weight with open support exactly U_i and Σ_i γ_i(x)² = 1.
/// The profile is the graph distance to the chart boundary.
pub fn default_partition(space: &CechSpace) -> Vec<Vec<f64>> {
    let mut weights: Vec<Vec<f64>> = Vec::with_capacity(space.chart_count());
    for i in 0..space.chart_count() {
        let chart = space.chart(i);
        let mut w = vec![0.0; space.vertex_count()];
        // BFS from the complement: distance 0 outside, k inside.
        let mut dist = vec![usize::MAX; space.vertex_count()];
        let mut queue: std::collections::VecDeque<usize> = space
            .vertices()
            .filter(|v| !chart.contains(v))
            .collect();
        for &v in queue.iter() {
            dist[v] = 0;
        }
        if queue.is_empty() {
            // Chart covers everything: flat weight.
            for &v in chart.iter() {
                w[v] = 1.0;
            }
        } else {
            while let Some(v) = queue.pop_front() {
                for &u in space.neighbors(v) {
                    if dist[u] == usize::MAX {
                        dist[u] = dist[v] + 1;
                        queue.push_back(u);
                    }
                }
            }
            for &v in chart.iter() {
                // Isolated chart vertices unreachable from the complement
                // keep a flat weight.
                w[v] = if dist[v] == usize::MAX { 1.0 } else { dist[v] as f64 };
            }
        }
        weights.push(w);
    }
    for x in 0..space.vertex_count() {
        let norm: f64 = weights.iter().map(|w| w[x] * w[x]).sum::<f64>().sqrt();
        for w in weights.iter_mut() {
            w[x] /= norm;
        }
    }
    weights
}

/// A frame element ξ_{ik}: the chart-i sheet-k indicator section scaled by
/// the partition weight.
#[derive(Debug, Clone)]
pub struct FrameSection {
    pub chart: usize,
    pub sheet: usize,
    pub section: Section,
}

/// Frame sections ξ_{ik}(z) = γ_i(s(z)) in chart-i trivialization of the
/// sheet k line, expressed canonically. Requires Σ_i γ_i(x)² = 1 and open
/// support exactly U_i.
pub fn frame_sections(
    c: &TwistedCorrespondence,
    partition: &[Vec<f64>],
) -> Result<Vec<FrameSection>, CorrespondenceError> {
    let base = c.base();
    if partition.len() != base.chart_count() {
        return Err(CorrespondenceError::BadPartition(format!(
            "{} weights for {} charts",
            partition.len(),
            base.chart_count()
        )));
    }
    for x in base.vertices() {
        let total: f64 = partition.iter().map(|w| w[x] * w[x]).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(CorrespondenceError::BadPartition(format!(
                "sum of squares at vertex {x} is {total}"
            )));
        }
        for (i, w) in partition.iter().enumerate() {
            let inside = base.chart(i).contains(&x);
            if inside && w[x] <= 0.0 {
                return Err(CorrespondenceError::BadPartition(format!(
                    "weight {i} vanishes inside its chart at {x}"
                )));
            }
            if !inside && w[x] != 0.0 {
                return Err(CorrespondenceError::BadPartition(format!(
                    "weight {i} nonzero outside its chart at {x}"
                )));
            }
        }
    }
    let mut frames = Vec::new();
    for i in 0..base.chart_count() {
        for k in 0..c.covering.sheets {
            let mut section = vec![C64::new(0.0, 0.0); c.covering.total_count()];
            for &x in base.chart(i).iter() {
                let z = c.covering.vertex_at(x, i, k).expect("fiber has all coordinates");
                section[z] = c.chart_to_canonical(z, i) * partition[i][x];
            }
            frames.push(FrameSection { chart: i, sheet: k, section });
        }
    }
    Ok(frames)
}

/// η ↦ Σ ξ_{ik} ⟨ξ_{ik}, η⟩.
pub fn frame_reconstruct(
    c: &TwistedCorrespondence,
    frames: &[FrameSection],
    eta: &Section,
) -> Result<Section, CorrespondenceError> {
    let mut out = vec![C64::new(0.0, 0.0); eta.len()];
    for frame in frames {
        let coeff = inner_product(c, &frame.section, eta)?;
        let scaled = right_multiply(c, &frame.section, &coeff);
        for (o, s) in out.iter_mut().zip(scaled) {
            *o += s;
        }
    }
    Ok(out)
}

/// Sup-norm distance between two sections.
pub fn section_distance(a: &Section, b: &Section) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Worst reconstruction residual ‖η − Σ ξ_{ik}⟨ξ_{ik}, η⟩‖∞ over a batch of
/// sections; the batch fans out over threads.
pub fn max_frame_residual(
    c: &TwistedCorrespondence,
    frames: &[FrameSection],
    sections: Vec<Section>,
) -> f64 {
    crate::par::map_collect(sections, |eta| {
        let back = frame_reconstruct(c, frames, &eta).expect("shapes match");
        section_distance(&eta, &back)
    })
    .into_iter()
    .fold(0.0, f64::max)
}

/// Worst deviation of the eigenvalue multiset of φ(δ_y)_x from the range
/// multiset {δ_y(r(z))}, over all x and y; per-vertex checks fan out over
/// threads.
pub fn spectrum_law_residual(c: &TwistedCorrespondence) -> f64 {
    let phi = left_action_of(c);
    let xs: Vec<usize> = c.base().vertices().collect();
    crate::par::map_collect(xs, |x| {
        let tol = crate::linalg::Tolerances::default();
        let mut worst = 0.0f64;
        for y in 0..c.target.vertex_count() {
            let dec = crate::linalg::eig_hermitian(&phi.images[y][x], &tol)
                .expect("projections are Hermitian");
            let mut expect: Vec<f64> = c
                .covering
                .fiber(x)
                .iter()
                .map(|&z| if c.range[z] == y { 1.0 } else { 0.0 })
                .collect();
            expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (got, want) in dec.eigenvalues.iter().zip(&expect) {
                worst = worst.max((got - want).abs());
            }
        }
        worst
    })
    .into_iter()
    .fold(0.0, f64::max)
}

/// An isomorphism of twisted topological correspondences: a base-preserving
/// covering isomorphism intertwining the range maps, under which the pulled
/// back line bundle is isomorphic.
pub fn correspondences_isomorphic(
    a: &TwistedCorrespondence,
    b: &TwistedCorrespondence,
) -> Result<Option<Vec<usize>>, CorrespondenceError> {
    if *a.target != *b.target || *a.base() != *b.base() {
        return Err(CorrespondenceError::SpaceMismatch);
    }
    let compat = |za: usize, zb: usize| a.range[za] == b.range[zb];
    let mut found: Option<Vec<usize>> = None;
    let mut twist_error: Option<BundleError> = None;
    visit_covering_isomorphisms(&a.covering, &b.covering, &compat, &mut |phi| {
        match line_bundles_isomorphic_over(phi, &a.line, &b.line) {
            Ok(true) => {
                found = Some(phi.to_vec());
                true
            }
            Ok(false) => false,
            Err(e) => {
                twist_error = Some(e);
                true
            }
        }
    })?;
    if let Some(e) = twist_error {
        return Err(e.into());
    }
    Ok(found)
}

/// A per-vertex unitary field realizing a C*-correspondence isomorphism.
pub type UnitaryField = Vec<CMat>;

/// Search for an isomorphism of the associated C*-correspondences: a
/// unitary field intertwining the left actions whose class-level sheet
/// matching respects the generated spectra, local structure and the module
/// bundle data. Pointwise feasibility and the two structural checks
/// (local conjugacy, module-bundle comparison over the generated spectrum)
/// decide; the witness pairs equal-range eigenspaces in canonical order.
pub fn cstar_correspondences_isomorphic(
    a: &TwistedCorrespondence,
    b: &TwistedCorrespondence,
) -> Result<Option<UnitaryField>, CorrespondenceError> {
    if *a.target != *b.target || *a.base() != *b.base() {
        return Err(CorrespondenceError::SpaceMismatch);
    }
    // Pointwise decorated multisets must match.
    for x in a.base().vertices() {
        let mut ra: Vec<usize> = a.covering.fiber(x).iter().map(|&z| a.range[z]).collect();
        let mut rb: Vec<usize> = b.covering.fiber(x).iter().map(|&z| b.range[z]).collect();
        ra.sort_unstable();
        rb.sort_unstable();
        if ra != rb {
            return Ok(None);
        }
    }
    // Generated spectra must match as decorated coverings-with-edges.
    let spec_a = crate::reconstruct::generated_subalgebra_spectrum(a);
    let spec_b = crate::reconstruct::generated_subalgebra_spectrum(b);
    let Some(spec_iso) = crate::reconstruct::spectra_iso_iota_phi(&spec_a, &spec_b) else {
        return Ok(None);
    };
    // Local structure: star-restricted correspondences must be isomorphic.
    if !crate::reconstruct::locally_conjugate(a, b)? {
        return Ok(None);
    }
    // Module bundle over the spectrum: multiplicity profile is matched by
    // the spectrum isomorphism; compare the determinant line classes.
    if !crate::reconstruct::module_bundles_match(a, &spec_a, b, &spec_b, &spec_iso)? {
        return Ok(None);
    }

    // The witness: pair equal-range eigenspaces in canonical sheet order.
    let field = (0..a.base().vertex_count())
        .map(|x| {
            let fa = a.covering.fiber(x);
            let fb = b.covering.fiber(x);
            let mut m = CMat::zeros(fb.len(), fa.len());
            let mut used = vec![false; fb.len()];
            for (col, &za) in fa.iter().enumerate() {
                let row = fb
                    .iter()
                    .enumerate()
                    .position(|(pos, &zb)| !used[pos] && b.range[zb] == a.range[za])
                    .expect("pointwise multisets match");
                used[row] = true;
                m[(row, col)] = C64::new(1.0, 0.0);
            }
            m
        })
        .collect();
    Ok(Some(field))
}

/// Re-present a correspondence through a random gauge: the cocycle is
/// gauge-transformed, the covering rebuilt, and the range carried through
/// the gauge's sheet relabeling. The result is isomorphic to the input by
/// construction.
pub fn perturb_correspondence(
    c: &TwistedCorrespondence,
    rng: &mut impl rand::Rng,
    max_angle: f64,
) -> TwistedCorrespondence {
    let system = crate::bundle::reassemble_cocycle(&c.covering, &c.line);
    let gauge = crate::cocycle::random_gauge(c.base().clone(), c.covering.sheets, rng, max_angle);
    let gauged = crate::cocycle::apply_gauge(&system, &gauge).expect("degrees match");
    let (covering, line) =
        crate::bundle::build_twisted_covering(&gauged).expect("gauged cocycle stays valid");
    let range = (0..covering.total_count())
        .map(|z| {
            let x = covering.base_of(z);
            let chart = (0..covering.base.chart_count())
                .find(|&i| covering.coord(z, i).is_some())
                .expect("covered");
            let k = covering.coord(z, chart).unwrap();
            let original_k = gauge.value(chart, x).perm.apply(k);
            let original_z = c.covering.vertex_at(x, chart, original_k).expect("same fibers");
            c.range[original_z]
        })
        .collect();
    TwistedCorrespondence::new(covering, line, c.target.clone(), range)
        .expect("gauge transport preserves continuity")
}

/// Residuals of a claimed unitary-field witness: max over x of
/// ‖T(x)*T(x) − I‖ and over (x, y) of ‖T(x)φ_a(δ_y)(x) − φ_b(δ_y)(x)T(x)‖.
pub fn unitary_field_residuals(
    a: &TwistedCorrespondence,
    b: &TwistedCorrespondence,
    field: &UnitaryField,
) -> (f64, f64) {
    let phi_a = left_action_of(a);
    let phi_b = left_action_of(b);
    let mut unitary_resid: f64 = 0.0;
    let mut intertwine_resid: f64 = 0.0;
    for x in a.base().vertices() {
        let t = &field[x];
        let dim = t.ncols();
        unitary_resid =
            unitary_resid.max(fro_norm(&(t.adjoint() * t - CMat::identity(dim, dim))));
        for y in 0..a.target.vertex_count() {
            let lhs = t * &phi_a.images[y][x];
            let rhs = &phi_b.images[y][x] * t;
            intertwine_resid = intertwine_resid.max(fro_norm(&(lhs - rhs)));
        }
    }
    (unitary_resid, intertwine_resid)
}
