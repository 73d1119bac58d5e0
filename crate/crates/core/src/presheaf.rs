//! Spectral presheaf over a context category, global-section search,
//! daseinisation of projections and operators, and finite frames.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fincat::{Arrow, Cone, Diagram, FinCategory, SetMap};
use crate::linalg::{self, CMat};
use crate::report::ValidationReport;
use crate::staralg::{gelfand_spectrum, Character, Context, ContextCategory, MatrixStarAlgebra};

pub const DASEIN_TOL: f64 = 1e-9;

/// `V ↦ Σ(V)` with restriction maps `Σ(V') → Σ(V)` for every `V ⊆ V'`.
#[derive(Debug, Clone)]
pub struct SpectralPresheaf {
    base: ContextCategory,
    fibers: Vec<Vec<Character>>,
    /// Keyed by `(sub, sup)`.
    restrictions: BTreeMap<(usize, usize), SetMap>,
}

/// One character per context, compatible with every restriction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalSection {
    pub assignment: Vec<usize>,
}

/// `χ'|_V`: the character of `sub` whose projection dominates that of `chi`.
fn restrict_character(chi: &Character, fiber: &[Character]) -> Result<usize> {
    let p = &chi.projection;
    let hits: Vec<usize> = fiber
        .iter()
        .enumerate()
        .filter(|(_, q)| linalg::frob_norm(&(&q.projection * p - p)) <= 1e-7)
        .map(|(k, _)| k)
        .collect();
    match hits.as_slice() {
        [k] => Ok(*k),
        _ => Err(Error::Internal(format!("restriction hits {} characters, expected one", hits.len()))),
    }
}

pub fn build_spectral_presheaf(cc: &ContextCategory) -> Result<SpectralPresheaf> {
    let fibers: Vec<Vec<Character>> =
        cc.contexts().iter().map(|c| gelfand_spectrum(&c.algebra)).collect::<Result<_>>()?;
    let n = cc.len();
    let mut restrictions = BTreeMap::new();
    for sub in 0..n {
        for sup in 0..n {
            if !cc.leq(sub, sup) {
                continue;
            }
            let images = fibers[sup].iter().map(|chi| restrict_character(chi, &fibers[sub])).collect::<Result<_>>()?;
            restrictions.insert((sub, sup), SetMap::new(images, fibers[sub].len())?);
        }
    }
    Ok(SpectralPresheaf { base: cc.clone(), fibers, restrictions })
}

impl SpectralPresheaf {
    pub fn base(&self) -> &ContextCategory {
        &self.base
    }

    pub fn fiber(&self, v: usize) -> &[Character] {
        &self.fibers[v]
    }

    pub fn fiber_sizes(&self) -> Vec<usize> {
        self.fibers.iter().map(Vec::len).collect()
    }

    pub fn restriction(&self, sub: usize, sup: usize) -> Option<&SetMap> {
        self.restrictions.get(&(sub, sup))
    }

    /// Identity restrictions are identities and restrictions compose along every chain.
    pub fn check_functoriality(&self) -> ValidationReport {
        let mut report = ValidationReport::new();
        let labels = self.base.labels();
        let n = self.base.len();
        for (v, label) in labels.iter().enumerate() {
            let r = &self.restrictions[&(v, v)];
            if r.images.iter().enumerate().any(|(k, &x)| k != x) {
                report.push("presheaf.identity", label.clone(), "restriction along identity moves a character");
            }
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if a == b || b == c || !self.base.leq(a, b) || !self.base.leq(b, c) {
                        continue;
                    }
                    let via = self.restrictions[&(b, c)].images.iter().map(|&x| self.restrictions[&(a, b)].images[x]);
                    if !via.eq(self.restrictions[&(a, c)].images.iter().copied()) {
                        report.push(
                            "presheaf.composition",
                            format!("{} ⊆ {} ⊆ {}", labels[a], labels[b], labels[c]),
                            "composed restriction differs from direct restriction",
                        );
                    }
                }
            }
        }
        report
    }

    /// The presheaf as a set-valued diagram on the opposite inclusion order.
    pub fn as_diagram(&self) -> Result<Diagram<SetMap>> {
        let index = self.base.as_category().opposite();
        let labels = self.base.labels();
        let sizes = labels.iter().cloned().zip(self.fiber_sizes()).collect();
        let mut arrows = BTreeMap::new();
        for m in index.morphisms() {
            // Opposite arrow `sup → sub` keeps the name of `sub <= sup`.
            arrows.insert(m.name.clone(), self.restrictions[&(m.dst, m.src)].clone());
        }
        Diagram::new(index, &sizes, arrows)
    }

    pub fn is_section(&self, s: &GlobalSection) -> bool {
        s.assignment.len() == self.base.len()
            && self
                .restrictions
                .iter()
                .all(|(&(sub, sup), r)| r.images[s.assignment[sup]] == s.assignment[sub])
    }
}

/// Up to `limit` global sections, in deterministic order.
///
/// Contexts are assigned most-constrained first (ties by id); every
/// restriction between assigned contexts is checked as soon as both ends are set.
/// The first context's choices are explored in parallel.
pub fn global_sections(p: &SpectralPresheaf, limit: usize) -> Vec<GlobalSection> {
    let n = p.base.len();
    if n == 0 || limit == 0 {
        return if n == 0 && limit > 0 { vec![GlobalSection { assignment: vec![] }] } else { vec![] };
    }
    let degree = |v: usize| (0..n).filter(|&w| w != v && (p.base.leq(v, w) || p.base.leq(w, v))).count();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(degree(v)), v));
    // checks[i]: (sub, sup) pairs whose later endpoint is order[i].
    let mut pos = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut checks: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for &(sub, sup) in p.restrictions.keys() {
        if sub != sup {
            checks[pos[sub].max(pos[sup])].push((sub, sup));
        }
    }
    let first = order[0];
    let chunks: Vec<Vec<GlobalSection>> = (0..p.fibers[first].len())
        .into_par_iter()
        .map(|x0| {
            let mut out = Vec::new();
            let mut assignment = vec![usize::MAX; n];
            assignment[first] = x0;
            search(p, &order, &checks, 1, &mut assignment, limit, &mut out);
            out
        })
        .collect();
    chunks.into_iter().flatten().take(limit).collect()
}

fn search(
    p: &SpectralPresheaf,
    order: &[usize],
    checks: &[Vec<(usize, usize)>],
    depth: usize,
    assignment: &mut Vec<usize>,
    limit: usize,
    out: &mut Vec<GlobalSection>,
) {
    if out.len() >= limit {
        return;
    }
    if depth == order.len() {
        out.push(GlobalSection { assignment: assignment.clone() });
        return;
    }
    let v = order[depth];
    for x in 0..p.fibers[v].len() {
        assignment[v] = x;
        let ok = checks[depth]
            .iter()
            .all(|&(sub, sup)| p.restrictions[&(sub, sup)].images[assignment[sup]] == assignment[sub]);
        if ok {
            search(p, order, checks, depth + 1, assignment, limit, out);
            if out.len() >= limit {
                break;
            }
        }
    }
    assignment[v] = usize::MAX;
}

/// Cone over the single restriction `Σ(V₂) → Σ(V₁)` with apex `Σ(V₁)`:
/// the identity leg and a section of the restriction.
pub fn restriction_cone(p: &SpectralPresheaf, sub: usize, sup: usize) -> Result<(Diagram<SetMap>, Cone<SetMap>)> {
    let r = p
        .restriction(sub, sup)
        .ok_or_else(|| Error::domain("contexts are not nested"))?
        .clone();
    let n1 = p.fibers[sub].len();
    let mut lift = Vec::with_capacity(n1);
    for chi in 0..n1 {
        let pre = r.images.iter().position(|&y| y == chi).ok_or_else(|| Error::Internal("restriction not onto".into()))?;
        lift.push(pre);
    }
    let index = FinCategory::poset(&["V1", "V2"], &[vec![true, true], vec![false, true]]).opposite();
    let sizes = [("V1".to_string(), n1), ("V2".to_string(), p.fibers[sup].len())].into_iter().collect();
    let arrows = [("V1<=V2".to_string(), r)].into_iter().collect();
    let d = Diagram::new(index, &sizes, arrows)?;
    let cone = Cone::new(n1, vec![SetMap::identity(n1), SetMap::new(lift, p.fibers[sup].len())?]);
    Ok((d, cone))
}

fn minimal_projections(v: &MatrixStarAlgebra, p: &CMat) -> Result<Vec<CMat>> {
    if p.nrows() != v.dim() || p.ncols() != v.dim() {
        return Err(Error::input(format!("projection must be {0}×{0}", v.dim())));
    }
    if !linalg::is_projection(p, 1e-8) {
        return Err(Error::domain("input is not a projection"));
    }
    Ok(gelfand_spectrum(v)?.into_iter().map(|ch| ch.projection).collect())
}

/// Smallest projection of `v` above `p`.
pub fn outer_daseinisation(p: &CMat, v: &MatrixStarAlgebra) -> Result<CMat> {
    let mut q = linalg::zeros(v.dim());
    for m in minimal_projections(v, p)? {
        if linalg::op_norm(&(&m * p)) > DASEIN_TOL {
            q += m;
        }
    }
    debug_assert!(linalg::loewner_leq(p, &q, 1e-7));
    Ok(q)
}

/// Largest projection of `v` below `p`.
pub fn inner_daseinisation(p: &CMat, v: &MatrixStarAlgebra) -> Result<CMat> {
    let mut q = linalg::zeros(v.dim());
    for m in minimal_projections(v, p)? {
        if linalg::op_norm(&(&m * p - &m)) <= DASEIN_TOL {
            q += m;
        }
    }
    Ok(q)
}

/// Spectral resolution of a self-adjoint matrix: distinct eigenvalues
/// ascending and the cumulative projections `E(λ) = E((−∞, λ])`.
pub fn spectral_steps(a: &CMat) -> Result<(Vec<f64>, Vec<CMat>)> {
    if !linalg::is_hermitian(a, 1e-9) {
        return Err(Error::domain("operator is not self-adjoint"));
    }
    let (values, vectors) = linalg::hermitian_eigen(a);
    let clusters = linalg::cluster_eigenvalues(&values, 1e-8);
    let mut cols = Vec::new();
    let mut steps = Vec::new();
    let mut lambdas = Vec::new();
    for (lambda, idx) in clusters {
        cols.extend(idx);
        lambdas.push(lambda);
        steps.push(linalg::column_projection(&vectors, &cols));
    }
    Ok((lambdas, steps))
}

/// `(δⁱ(A)_V, δᵒ(A)_V)`: step operators rebuilt from daseinised spectral
/// projections. Outer daseinisation of `E(λ)` gives the inner operator and
/// inner daseinisation the outer one.
pub fn daseinise_operator(a: &CMat, v: &MatrixStarAlgebra) -> Result<(CMat, CMat)> {
    if a.nrows() != v.dim() || a.ncols() != v.dim() {
        return Err(Error::input(format!("operator must be {0}×{0}", v.dim())));
    }
    let (lambdas, steps) = spectral_steps(a)?;
    let d = v.dim();
    let rebuild = |projs: &[CMat]| {
        let mut out = linalg::zeros(d);
        let mut prev = linalg::zeros(d);
        for (lambda, e) in lambdas.iter().zip(projs) {
            out += (e - &prev) * linalg::c(*lambda, 0.0);
            prev = e.clone();
        }
        out
    };
    let outer_steps: Vec<CMat> = steps.iter().map(|e| outer_daseinisation(e, v)).collect::<Result<_>>()?;
    let inner_steps: Vec<CMat> = steps.iter().map(|e| inner_daseinisation(e, v)).collect::<Result<_>>()?;
    Ok((rebuild(&outer_steps), rebuild(&inner_steps)))
}

/// `[χ(δⁱ(A)_V), χ(δᵒ(A)_V)]` for a character of `v`.
pub fn operator_interval(a: &CMat, v: &MatrixStarAlgebra, chi: &Character) -> Result<(f64, f64)> {
    if !v.contains(&chi.projection) || chi.rank() == 0 {
        return Err(Error::domain("character does not belong to the context"));
    }
    let (inner, outer) = daseinise_operator(a, v)?;
    let lo = chi.evaluate(&inner).re;
    let hi = chi.evaluate(&outer).re;
    if lo > hi + 1e-9 {
        return Err(Error::Internal(format!("interval [{lo}, {hi}] is inverted")));
    }
    Ok((lo, hi.max(lo)))
}

/// Ray family grouped into orthogonal bases; rays are unnormalized integer vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayFamily {
    #[serde(default)]
    pub name: String,
    pub dim: usize,
    pub bases: Vec<Vec<Vec<i64>>>,
}

const CABELLO18: &str = include_str!("../fixtures/cabello18.json");

/// Eighteen rays in nine bases of `C⁴`, each ray in exactly two bases.
pub fn cabello18() -> RayFamily {
    serde_json::from_str(CABELLO18).expect("bundled fixture parses")
}

fn canonical_ray(v: &[i64]) -> Vec<i64> {
    let sign = v.iter().find(|&&x| x != 0).map_or(1, |x| x.signum());
    v.iter().map(|x| x * sign).collect()
}

impl RayFamily {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::input(format!("ray family: {e}")))
    }

    /// Every basis has `dim` nonzero, pairwise orthogonal rays of length `dim`.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::new();
        for (b, basis) in self.bases.iter().enumerate() {
            let loc = format!("basis {b}");
            if basis.len() != self.dim || basis.iter().any(|r| r.len() != self.dim || r.iter().all(|&x| x == 0)) {
                report.push("presheaf.basis_complete", loc.clone(), format!("expected {} nonzero rays of length {}", self.dim, self.dim));
                continue;
            }
            for i in 0..basis.len() {
                for j in i + 1..basis.len() {
                    let dot: i64 = basis[i].iter().zip(&basis[j]).map(|(x, y)| x * y).sum();
                    if dot != 0 {
                        report.push("presheaf.basis_orthogonal", format!("{loc}, rays {i},{j}"), format!("inner product {dot}"));
                    }
                }
            }
        }
        report
    }

    /// Number of bases containing each distinct ray (up to sign).
    pub fn ray_multiplicities(&self) -> BTreeMap<Vec<i64>, usize> {
        let mut out = BTreeMap::new();
        for basis in &self.bases {
            for r in basis {
                *out.entry(canonical_ray(r)).or_insert(0) += 1;
            }
        }
        out
    }

    /// Every ray in an even number of bases while the basis count is odd:
    /// no 0/1 assignment with one 1 per basis can exist.
    pub fn parity_obstructed(&self) -> bool {
        self.bases.len() % 2 == 1 && self.ray_multiplicities().values().all(|m| m % 2 == 0)
    }

    pub fn projections(&self, basis: usize) -> Vec<CMat> {
        self.bases[basis]
            .iter()
            .map(|r| linalg::ray_projection(&r.iter().map(|&x| linalg::c(x as f64, 0.0)).collect::<Vec<_>>()))
            .collect()
    }

    /// One maximal context per basis, closed under intersection.
    pub fn context_category(&self) -> Result<ContextCategory> {
        let report = self.validate();
        if !report.is_valid() {
            return Err(Error::input(format!("ray family is not a list of orthogonal bases:\n{report}")));
        }
        let contexts = (0..self.bases.len())
            .map(|b| {
                let projs = self.projections(b);
                Ok(Context {
                    label: format!("B{}", b + 1),
                    algebra: MatrixStarAlgebra::from_spanning_set(self.dim, &projs, 1e-9)?,
                    seeds: vec![],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ContextCategory::from_contexts(self.dim, contexts)
    }
}

/// Finite topology on `{0..base}` as bitmasks, ordered by inclusion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteFrame {
    base: usize,
    opens: Vec<u64>,
    lookup: HashMap<u64, usize>,
}

pub const MAX_FRAME_BASE: usize = 20;

impl FiniteFrame {
    pub fn new(base: usize, mut opens: Vec<u64>) -> Result<Self> {
        if base > MAX_FRAME_BASE {
            return Err(Error::Refused { what: "frame base set".into(), size: base as u128, bound: MAX_FRAME_BASE as u128 });
        }
        let full = full_mask(base);
        if opens.iter().any(|&u| u & !full != 0) {
            return Err(Error::input("open set outside the base"));
        }
        opens.sort_unstable();
        opens.dedup();
        let lookup = opens.iter().enumerate().map(|(k, &u)| (u, k)).collect();
        Ok(FiniteFrame { base, opens, lookup })
    }

    pub fn powerset(base: usize) -> Result<Self> {
        if base > MAX_FRAME_BASE {
            return Err(Error::Refused { what: "frame base set".into(), size: base as u128, bound: MAX_FRAME_BASE as u128 });
        }
        FiniteFrame::new(base, (0..1u64 << base).collect())
    }

    /// Up-closed subsets of a finite preorder, i.e. its Alexandrov opens.
    pub fn upsets(leq: &[Vec<bool>]) -> Result<Self> {
        let n = leq.len();
        if n > MAX_FRAME_BASE {
            return Err(Error::Refused { what: "frame base set".into(), size: n as u128, bound: MAX_FRAME_BASE as u128 });
        }
        let up: Vec<u64> = (0..n).map(|a| (0..n).filter(|&b| leq[a][b]).fold(0, |m, b| m | 1 << b)).collect();
        let opens = (0..1u64 << n)
            .filter(|&u| (0..n).all(|a| u & (1 << a) == 0 || up[a] & !u == 0))
            .collect();
        FiniteFrame::new(n, opens)
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn opens(&self) -> &[u64] {
        &self.opens
    }

    pub fn len(&self) -> usize {
        self.opens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.opens.is_empty()
    }

    pub fn top(&self) -> u64 {
        full_mask(self.base)
    }

    pub fn contains(&self, u: u64) -> bool {
        self.lookup.contains_key(&u)
    }

    /// Contains `∅` and the base, closed under binary unions and intersections.
    pub fn check(&self) -> ValidationReport {
        let mut report = ValidationReport::new();
        if !self.contains(0) {
            report.push("presheaf.frame_bottom", "∅", "empty set is not open");
        }
        if !self.contains(self.top()) {
            report.push("presheaf.frame_top", "base", "base set is not open");
        }
        for (i, &u) in self.opens.iter().enumerate() {
            for &w in &self.opens[i + 1..] {
                if !self.contains(u | w) {
                    report.push("presheaf.frame_join", format!("{u:#b} ∨ {w:#b}"), "union is not open");
                }
                if !self.contains(u & w) {
                    report.push("presheaf.frame_meet", format!("{u:#b} ∧ {w:#b}"), "intersection is not open");
                }
            }
        }
        report
    }
}

fn full_mask(base: usize) -> u64 {
    if base == 64 {
        u64::MAX
    } else {
        (1u64 << base) - 1
    }
}

/// Map of opens, source open index ↦ target open.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameMap {
    pub images: Vec<u64>,
}

impl FrameMap {
    pub fn identity(f: &FiniteFrame) -> Self {
        FrameMap { images: f.opens.clone() }
    }

    /// `U ↦ g⁻¹(U)` for opens of the codomain of `g`.
    pub fn preimage(g: &SetMap, codomain: &FiniteFrame) -> Self {
        let images = codomain
            .opens
            .iter()
            .map(|&u| g.images.iter().enumerate().filter(|(_, &y)| u & (1 << y) != 0).fold(0, |m, (x, _)| m | 1 << x))
            .collect();
        FrameMap { images }
    }
}

/// Preservation of top, bottom, binary meets and binary joins; in a finite
/// frame these give all finite meets and all joins.
pub fn check_frame_hom(f: &FrameMap, source: &FiniteFrame, target: &FiniteFrame) -> ValidationReport {
    let mut report = ValidationReport::new();
    if f.images.len() != source.len() {
        report.push("presheaf.frame_hom_typing", "map", format!("{} images for {} opens", f.images.len(), source.len()));
        return report;
    }
    for (k, &img) in f.images.iter().enumerate() {
        if !target.contains(img) {
            report.push("presheaf.frame_hom_typing", format!("{:#b}", source.opens[k]), "image is not open");
        }
    }
    if !report.is_valid() {
        return report;
    }
    let at = |u: u64| f.images[source.lookup[&u]];
    if at(source.top()) != target.top() {
        report.push("presheaf.frame_hom_top", "top", "top not preserved");
    }
    if at(0) != 0 {
        report.push("presheaf.frame_hom_bottom", "bottom", "bottom not preserved");
    }
    for (i, &u) in source.opens.iter().enumerate() {
        for &w in &source.opens[i + 1..] {
            if let Some(&j) = source.lookup.get(&(u | w)) {
                if f.images[j] != at(u) | at(w) {
                    report.push("presheaf.frame_hom_join", format!("{u:#b} ∨ {w:#b}"), "join not preserved");
                }
            }
            if let Some(&j) = source.lookup.get(&(u & w)) {
                if f.images[j] != at(u) & at(w) {
                    report.push("presheaf.frame_hom_meet", format!("{u:#b} ∧ {w:#b}"), "meet not preserved");
                }
            }
        }
    }
    report
}

/// Intervals `[lo, hi]` over a sorted grid, ordered by reverse inclusion.
pub fn interval_domain(grid: &[f64]) -> (Vec<(f64, f64)>, Vec<Vec<bool>>) {
    let mut points = Vec::new();
    for i in 0..grid.len() {
        for j in i..grid.len() {
            points.push((grid[i], grid[j]));
        }
    }
    let leq = points
        .iter()
        .map(|&(a, b)| points.iter().map(|&(c, d)| a <= c && d <= b).collect())
        .collect();
    (points, leq)
}

/// The frame leg `O(IR) → O(Σ_V)` of an operator: preimage along the
/// character-wise interval map `Σ_V → IR`.
#[derive(Debug, Clone)]
pub struct IntervalFrameLeg {
    pub intervals: Vec<(f64, f64)>,
    /// Interval index per character of the context.
    pub valuation: SetMap,
    pub interval_frame: FiniteFrame,
    pub spectrum_frame: FiniteFrame,
    pub map: FrameMap,
}

pub fn interval_frame_leg(a: &CMat, v: &MatrixStarAlgebra) -> Result<IntervalFrameLeg> {
    let (grid, _) = spectral_steps(a)?;
    let (intervals, leq) = interval_domain(&grid);
    let spectrum = gelfand_spectrum(v)?;
    let mut images = Vec::new();
    for chi in &spectrum {
        let (lo, hi) = operator_interval(a, v, chi)?;
        let k = intervals
            .iter()
            .position(|&(x, y)| (x - lo).abs() < 1e-7 && (y - hi).abs() < 1e-7)
            .ok_or_else(|| Error::Internal(format!("interval [{lo}, {hi}] off the eigenvalue grid")))?;
        images.push(k);
    }
    let valuation = SetMap::new(images, intervals.len())?;
    let interval_frame = FiniteFrame::upsets(&leq)?;
    let spectrum_frame = FiniteFrame::powerset(spectrum.len())?;
    let map = FrameMap::preimage(&valuation, &interval_frame);
    Ok(IntervalFrameLeg { intervals, valuation, interval_frame, spectrum_frame, map })
}
