//! Group-valued transition systems over a cover: verification, gauge
//! (coboundary) action, pushforward along the supported homomorphisms.

use crate::group::{DiagPermUnitary, GroupError, Permutation};
use crate::linalg::C64;
use crate::space::{connected_components, SharedSpace};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CocycleError {
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("pushforward by phases-at-sheet needs a phase-only system")]
    HomNotApplicable,
    #[error("unknown homomorphism tag {0}")]
    UnknownHom(String),
    #[error("covers do not match")]
    CoverMismatch,
}

/// A system of transition functions g_ij over the chart overlaps of a cover.
///
/// Data is stored for ordered pairs i < j, one group element per overlap
/// vertex; g_ii is the identity and g_ji = g_ij⁻¹. T-parts may vary from
/// vertex to vertex, the S_n-part of a valid system is constant on each
/// connected component of each overlap.
#[derive(Debug, Clone)]
pub struct TransitionSystem {
    pub base: SharedSpace,
    pub degree: usize,
    data: BTreeMap<(usize, usize), BTreeMap<usize, DiagPermUnitary>>,
}

impl TransitionSystem {
    pub fn identity(base: SharedSpace, degree: usize) -> Self {
        let mut data = BTreeMap::new();
        for (i, j) in base.overlapping_pairs() {
            let map: BTreeMap<usize, DiagPermUnitary> = base
                .overlap(i, j)
                .into_iter()
                .map(|x| (x, DiagPermUnitary::identity(degree)))
                .collect();
            data.insert((i, j), map);
        }
        TransitionSystem { base, degree, data }
    }

    /// Build from explicit values; pairs given as (i, j) with arbitrary order
    /// are normalized to i < j (inverting as needed). Missing overlap
    /// vertices default to the identity.
    pub fn from_values(
        base: SharedSpace,
        degree: usize,
        values: Vec<((usize, usize), usize, DiagPermUnitary)>,
    ) -> Result<Self, CocycleError> {
        let mut system = TransitionSystem::identity(base, degree);
        for ((i, j), x, g) in values {
            if g.degree() != degree {
                return Err(CocycleError::DegreeMismatch(g.degree(), degree));
            }
            let (key, value) = if i < j { ((i, j), g) } else { ((j, i), g.inverse()) };
            if let Some(map) = system.data.get_mut(&key) {
                if let Some(slot) = map.get_mut(&x) {
                    *slot = value;
                }
            }
        }
        Ok(system)
    }

    pub fn overlapping_pairs(&self) -> Vec<(usize, usize)> {
        self.data.keys().copied().collect()
    }

    /// g_ij(x) for arbitrary i, j whose overlap contains x.
    pub fn value(&self, i: usize, j: usize, x: usize) -> Option<DiagPermUnitary> {
        if i == j {
            return Some(DiagPermUnitary::identity(self.degree));
        }
        if i < j {
            self.data.get(&(i, j)).and_then(|m| m.get(&x)).cloned()
        } else {
            self.data
                .get(&(j, i))
                .and_then(|m| m.get(&x))
                .map(|g| g.inverse())
        }
    }

    pub fn stored(&self) -> impl Iterator<Item = (&(usize, usize), &BTreeMap<usize, DiagPermUnitary>)> {
        self.data.iter()
    }

    pub fn set(&mut self, i: usize, j: usize, x: usize, g: DiagPermUnitary) {
        assert!(i != j);
        let (key, value) = if i < j { ((i, j), g) } else { ((j, i), g.inverse()) };
        if let Some(map) = self.data.get_mut(&key) {
            map.insert(x, value);
        }
    }

    pub fn is_phase_free(&self, tol: f64) -> bool {
        self.data
            .values()
            .all(|m| m.values().all(|g| g.is_phase_free(tol)))
    }

    pub fn is_perm_free(&self) -> bool {
        self.data
            .values()
            .all(|m| m.values().all(|g| g.perm.is_identity()))
    }

    /// Pointwise product of the phase parts of two phase-only systems over
    /// the same cover (the line-bundle tensor product).
    pub fn tensor(&self, other: &TransitionSystem) -> Result<TransitionSystem, CocycleError> {
        if !std::sync::Arc::ptr_eq(&self.base, &other.base) && *self.base != *other.base {
            return Err(CocycleError::CoverMismatch);
        }
        if self.degree != other.degree {
            return Err(CocycleError::DegreeMismatch(self.degree, other.degree));
        }
        let mut out = self.clone();
        for (key, map) in out.data.iter_mut() {
            for (x, g) in map.iter_mut() {
                let h = other
                    .data
                    .get(key)
                    .and_then(|m| m.get(x))
                    .cloned()
                    .unwrap_or_else(|| DiagPermUnitary::identity(other.degree));
                *g = g.compose(&h)?;
            }
        }
        Ok(out)
    }

    /// Entrywise conjugate phases (the dual line bundle) of a phase-only
    /// system.
    pub fn conjugate(&self) -> TransitionSystem {
        let mut out = self.clone();
        for map in out.data.values_mut() {
            for g in map.values_mut() {
                *g = g.inverse();
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub enum CocycleViolation {
    /// g_ij(x) g_jk(x) != g_ik(x).
    Triple { i: usize, j: usize, k: usize, x: usize, defect: f64 },
    /// Permutation part varies along a connected overlap component.
    PermNotConstant { i: usize, j: usize, component_root: usize },
    /// A phase fails |λ| = 1.
    NotUnimodular { i: usize, j: usize, x: usize, modulus: f64 },
}

#[derive(Debug, Clone)]
pub struct CocycleReport {
    pub valid: bool,
    pub violations: Vec<CocycleViolation>,
}

/// Check the cocycle identity on every triple-overlap vertex plus the type
/// invariants. Violations are report content, not errors.
pub fn verify_cocycle(t: &TransitionSystem) -> CocycleReport {
    let tol = crate::linalg::TAU_NUM;
    let base = &t.base;

    // Per-pair type invariants, fanned out over the overlaps.
    let pairs: Vec<(&(usize, usize), &BTreeMap<usize, DiagPermUnitary>)> = t.stored().collect();
    let pair_violations = crate::par::map_collect(pairs, |(&(i, j), map)| {
        let mut local = Vec::new();
        for (&x, g) in map {
            for z in &g.phases {
                let modulus = z.norm();
                if (modulus - 1.0).abs() > tol {
                    local.push(CocycleViolation::NotUnimodular { i, j, x, modulus });
                }
            }
        }
        let overlap: BTreeSet<usize> = base.overlap(i, j).into_iter().collect();
        for component in connected_components(base, &overlap).expect("overlap is in the space") {
            let root = *component.iter().next().unwrap();
            let root_perm = map.get(&root).map(|g| g.perm.clone());
            let constant = component.iter().all(|x| {
                map.get(x).map(|g| Some(&g.perm) == root_perm.as_ref()).unwrap_or(false)
            });
            if !constant {
                local.push(CocycleViolation::PermNotConstant { i, j, component_root: root });
            }
        }
        local
    });
    let mut violations: Vec<CocycleViolation> =
        pair_violations.into_iter().flatten().collect();

    // Triple identities, fanned out per triple.
    let mut triples = Vec::new();
    for i in 0..base.chart_count() {
        for j in (i + 1)..base.chart_count() {
            for k in (j + 1)..base.chart_count() {
                let overlap = base.triple_overlap(i, j, k);
                if !overlap.is_empty() {
                    triples.push((i, j, k, overlap));
                }
            }
        }
    }
    let triple_violations = crate::par::map_collect(triples, |(i, j, k, overlap)| {
        let mut local = Vec::new();
        for x in overlap {
            let (Some(gij), Some(gjk), Some(gik)) =
                (t.value(i, j, x), t.value(j, k, x), t.value(i, k, x))
            else {
                continue;
            };
            let lhs = gij.compose(&gjk).expect("equal degrees");
            let defect = crate::linalg::fro_norm(&(lhs.matrix_form() - gik.matrix_form()));
            if defect > tol {
                local.push(CocycleViolation::Triple { i, j, k, x, defect });
            }
        }
        local
    });
    violations.extend(triple_violations.into_iter().flatten());

    CocycleReport { valid: violations.is_empty(), violations }
}

/// A gauge: per chart i, a 𝒰(N_{D_n})-valued function on U_i. Acting on a
/// system by g'_ij(x) = r_i(x)⁻¹ g_ij(x) r_j(x) presents an isomorphic
/// bundle.
#[derive(Debug, Clone)]
pub struct Gauge {
    pub base: SharedSpace,
    pub degree: usize,
    pub maps: Vec<BTreeMap<usize, DiagPermUnitary>>,
}

impl Gauge {
    pub fn identity(base: SharedSpace, degree: usize) -> Self {
        let maps = (0..base.chart_count())
            .map(|i| {
                base.chart(i)
                    .iter()
                    .map(|&x| (x, DiagPermUnitary::identity(degree)))
                    .collect()
            })
            .collect();
        Gauge { base, degree, maps }
    }

    pub fn value(&self, chart: usize, x: usize) -> DiagPermUnitary {
        self.maps[chart]
            .get(&x)
            .cloned()
            .unwrap_or_else(|| DiagPermUnitary::identity(self.degree))
    }

    pub fn set(&mut self, chart: usize, x: usize, g: DiagPermUnitary) {
        self.maps[chart].insert(x, g);
    }

    pub fn inverse(&self) -> Gauge {
        let maps = self
            .maps
            .iter()
            .map(|m| m.iter().map(|(&x, g)| (x, g.inverse())).collect())
            .collect();
        Gauge { base: self.base.clone(), degree: self.degree, maps }
    }

    /// Pointwise product (self · other): acting by the result equals acting
    /// by `other` after `self`.
    pub fn compose(&self, other: &Gauge) -> Result<Gauge, CocycleError> {
        if self.degree != other.degree {
            return Err(CocycleError::DegreeMismatch(self.degree, other.degree));
        }
        let maps = self
            .maps
            .iter()
            .zip(&other.maps)
            .map(|(a, b)| {
                a.iter()
                    .map(|(&x, g)| {
                        let h = b.get(&x).cloned().unwrap_or_else(|| {
                            DiagPermUnitary::identity(other.degree)
                        });
                        Ok((x, g.compose(&h)?))
                    })
                    .collect::<Result<BTreeMap<_, _>, CocycleError>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Gauge { base: self.base.clone(), degree: self.degree, maps })
    }
}

/// g'_ij(x) = r_i(x)⁻¹ g_ij(x) r_j(x).
pub fn apply_gauge(t: &TransitionSystem, r: &Gauge) -> Result<TransitionSystem, CocycleError> {
    if t.degree != r.degree {
        return Err(CocycleError::DegreeMismatch(t.degree, r.degree));
    }
    let mut out = t.clone();
    for (&(i, j), map) in out.data.iter_mut() {
        for (&x, g) in map.iter_mut() {
            let ri = r.value(i, x).inverse();
            let rj = r.value(j, x);
            *g = ri.compose(g)?.compose(&rj)?;
        }
    }
    Ok(out)
}

/// The homomorphisms supported by `pushforward`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hom {
    ProjectToPerm,
    PhasesAtSheet(usize),
    Determinant,
}

impl Hom {
    pub fn parse(tag: &str) -> Result<Hom, CocycleError> {
        match tag {
            "perm" => Ok(Hom::ProjectToPerm),
            "det" => Ok(Hom::Determinant),
            _ => {
                if let Some(rest) = tag.strip_prefix("phase") {
                    if let Ok(k) = rest.parse::<usize>() {
                        return Ok(Hom::PhasesAtSheet(k));
                    }
                }
                Err(CocycleError::UnknownHom(tag.to_string()))
            }
        }
    }
}

/// h_ij(x) = ρ(g_ij(x)); a homomorphism pushes a valid cocycle to a valid
/// cocycle.
pub fn pushforward(hom: Hom, t: &TransitionSystem) -> Result<TransitionSystem, CocycleError> {
    if let Hom::PhasesAtSheet(k) = hom {
        if k >= t.degree {
            return Err(CocycleError::UnknownHom(format!("phase{k}")));
        }
        // λ ↦ λ_k is a homomorphism only on the phase-only subgroup.
        if !t.is_perm_free() {
            return Err(CocycleError::HomNotApplicable);
        }
    }
    let degree = match hom {
        Hom::ProjectToPerm => t.degree,
        _ => 1,
    };
    let mut data = BTreeMap::new();
    for (&key, map) in t.stored() {
        let image: BTreeMap<usize, DiagPermUnitary> = map
            .iter()
            .map(|(&x, g)| {
                let h = match hom {
                    Hom::ProjectToPerm => DiagPermUnitary::from_perm(g.project_to_perm()),
                    Hom::PhasesAtSheet(k) => DiagPermUnitary::phase(g.phases[k]),
                    Hom::Determinant => DiagPermUnitary::phase(g.determinant()),
                };
                (x, h)
            })
            .collect();
        data.insert(key, image);
    }
    Ok(TransitionSystem { base: t.base.clone(), degree, data })
}

/// A valid S_n-cocycle over the circle-style cover determined by a single
/// monodromy permutation on one chosen overlap (identity elsewhere).
pub fn monodromy_system(
    base: SharedSpace,
    monodromy: Permutation,
    pair: (usize, usize),
) -> TransitionSystem {
    let degree = monodromy.degree();
    let mut system = TransitionSystem::identity(base, degree);
    let overlap: Vec<usize> = system.base.overlap(pair.0, pair.1);
    for x in overlap {
        system.set(pair.0, pair.1, x, DiagPermUnitary::from_perm(monodromy.clone()));
    }
    system
}

/// Random S_n-gauge: one random permutation per chart, no phases.
pub fn random_permutation_gauge(
    base: SharedSpace,
    degree: usize,
    rng: &mut impl rand::Rng,
) -> Gauge {
    let mut gauge = Gauge::identity(base.clone(), degree);
    for chart in 0..base.chart_count() {
        let mut images: Vec<usize> = (0..degree).collect();
        for k in (1..degree).rev() {
            images.swap(k, rng.gen_range(0..=k));
        }
        let g = DiagPermUnitary::from_perm(Permutation::new(images).unwrap());
        for &x in base.chart(chart).iter() {
            gauge.set(chart, x, g.clone());
        }
    }
    gauge
}

/// Decide whether two S_n-valued systems over the same cover differ by an
/// S_n-gauge with constant permutation per chart: propagate one root choice
/// per nerve component along a spanning tree, verify every overlap. The
/// search over root choices makes it complete for connected charts.
pub fn sn_gauge_equivalent(a: &TransitionSystem, b: &TransitionSystem) -> bool {
    if a.degree != b.degree {
        return false;
    }
    let base = &a.base;
    let n = a.degree;
    let m = base.chart_count();
    let pairs = base.overlapping_pairs();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m];
    for &(i, j) in &pairs {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut roots: Vec<usize> = Vec::new();
    let mut seen = vec![false; m];
    for i in 0..m {
        if !seen[i] {
            roots.push(i);
            let mut queue = vec![i];
            seen[i] = true;
            while let Some(c) = queue.pop() {
                for &d in &adj[c] {
                    if !seen[d] {
                        seen[d] = true;
                        queue.push(d);
                    }
                }
            }
        }
    }
    let mut all_perms: Vec<Vec<usize>> = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        all_perms.push(p.clone());
        if !crate::bundle::next_permutation(&mut p) {
            break;
        }
    }
    'root_choice: for root_perm in &all_perms {
        let mut assignment: Vec<Option<Permutation>> = vec![None; m];
        for &root in &roots {
            assignment[root] = Some(Permutation::new(root_perm.clone()).unwrap());
        }
        let mut queue: Vec<usize> = roots.clone();
        while let Some(i) = queue.pop() {
            let ri = assignment[i].clone().unwrap();
            for &j in &adj[i] {
                if assignment[j].is_some() {
                    continue;
                }
                let x = base.overlap(i, j)[0];
                let gij = a.value(i, j, x).unwrap().perm;
                let hij = b.value(i, j, x).unwrap().perm;
                // g'_ij = r_i⁻¹ g_ij r_j  =>  r_j = g_ij⁻¹ r_i g'_ij.
                let rj = gij.inverse().compose(&ri).unwrap().compose(&hij).unwrap();
                assignment[j] = Some(rj);
                queue.push(j);
            }
        }
        for &(i, j) in &pairs {
            let ri = assignment[i].clone().unwrap();
            let rj = assignment[j].clone().unwrap();
            for x in base.overlap(i, j) {
                let gij = a.value(i, j, x).unwrap().perm;
                let hij = b.value(i, j, x).unwrap().perm;
                let lhs = ri.inverse().compose(&gij).unwrap().compose(&rj).unwrap();
                if lhs != hij {
                    continue 'root_choice;
                }
            }
        }
        return true;
    }
    false
}

/// Random 𝒰(N_{D_n})-gauge: permutation part constant per chart (continuity
/// into a discrete group), phases free per vertex but bounded away from the
/// resolution limit when `max_angle` is finite.
pub fn random_gauge(
    base: SharedSpace,
    degree: usize,
    rng: &mut impl rand::Rng,
    max_angle: f64,
) -> Gauge {
    let mut gauge = Gauge::identity(base.clone(), degree);
    for chart in 0..base.chart_count() {
        let mut images: Vec<usize> = (0..degree).collect();
        for k in (1..degree).rev() {
            images.swap(k, rng.gen_range(0..=k));
        }
        let perm = Permutation::new(images).unwrap();
        for &x in base.chart(chart).iter() {
            let phases = (0..degree)
                .map(|_| {
                    let theta = rng.gen_range(-max_angle..max_angle);
                    C64::new(theta.cos(), theta.sin())
                })
                .collect();
            gauge.set(chart, x, DiagPermUnitary::new(perm.clone(), phases).unwrap());
        }
    }
    gauge
}
