//! Finite-dimensional matrix *-algebras, their Gel'fand spectra, context
//! categories generated from seed observables, and Boolean blocks of
//! projection families.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fincat::FinCategory;
use crate::linalg::{self, c, frob_inner, frob_norm, op_norm, CMat};
use crate::report::ValidationReport;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_DIM_CAP: usize = 16;
/// Seed for the random combination used in joint diagonalization.
pub const DEFAULT_SPECTRUM_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgebraOptions {
    pub tol: f64,
    /// Largest ambient matrix dimension accepted by [`generate_algebra_with`].
    pub dim_cap: usize,
}

impl Default for AlgebraOptions {
    fn default() -> Self {
        AlgebraOptions { tol: DEFAULT_TOL, dim_cap: DEFAULT_DIM_CAP }
    }
}

/// Relative residual below which a candidate adds no new direction.
fn rank_tol(tol: f64) -> f64 {
    (tol * 10.0).max(1e-12)
}

/// Unital *-closed span of `d × d` complex matrices.
///
/// The basis is orthonormal for the Hilbert–Schmidt inner product, which makes
/// span membership a plain least-squares residual.
#[derive(Debug, Clone)]
pub struct MatrixStarAlgebra {
    dim: usize,
    basis: Vec<CMat>,
    generators: Vec<CMat>,
    tol: f64,
}

/// Orthogonalizes `v` against an orthonormal list; `None` if nothing is left.
/// `scale` is the norm below which `v` counts as zero; products of nearly
/// orthogonal elements would otherwise turn rounding noise into a direction.
fn reduce(basis: &[CMat], mut v: CMat, tol: f64, scale: f64) -> Option<CMat> {
    let norm0 = frob_norm(&v);
    if norm0 == 0.0 || norm0 <= rank_tol(tol) * scale {
        return None;
    }
    for pass in 0..2 {
        for b in basis {
            let coef = frob_inner(b, &v);
            v -= b * coef;
        }
        let r = frob_norm(&v);
        if pass == 0 && r > 0.5 * norm0 {
            break;
        }
    }
    let r = frob_norm(&v);
    if r <= rank_tol(tol) * norm0 {
        None
    } else {
        Some(v / c(r, 0.0))
    }
}

fn check_square(m: &CMat, d: usize, what: &str) -> Result<()> {
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::input(format!(
            "{what} is {}×{}, expected {d}×{d}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

impl MatrixStarAlgebra {
    /// Orthonormalizes a spanning set without closing it under products.
    ///
    /// The identity is always added. Callers must pass a set whose span is
    /// already a *-algebra; [`Self::check_invariants`] verifies that.
    pub fn from_spanning_set(d: usize, elements: &[CMat], tol: f64) -> Result<Self> {
        let mut basis = Vec::new();
        for (k, m) in std::iter::once(linalg::identity(d)).chain(elements.iter().cloned()).enumerate() {
            check_square(&m, d, &format!("element {k}"))?;
            if let Some(q) = reduce(&basis, m, tol, 0.0) {
                basis.push(q);
            }
        }
        Ok(MatrixStarAlgebra { dim: d, basis, generators: elements.to_vec(), tol })
    }

    /// `M_d`, spanned by matrix units.
    pub fn full(d: usize) -> Self {
        let mut basis = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let mut e = linalg::zeros(d);
                e[(i, j)] = linalg::ONE;
                basis.push(e);
            }
        }
        let generators = basis.clone();
        let mut alg = MatrixStarAlgebra { dim: d, basis: Vec::new(), generators, tol: DEFAULT_TOL };
        // Put the normalized identity first, as every other constructor does.
        let mut ordered = vec![linalg::identity(d) / c((d as f64).sqrt(), 0.0)];
        for e in basis {
            if let Some(q) = reduce(&ordered, e, DEFAULT_TOL, 0.0) {
                ordered.push(q);
            }
        }
        alg.basis = ordered;
        alg
    }

    /// Diagonal matrices in dimension `d`.
    pub fn diagonal(d: usize) -> Self {
        let units: Vec<CMat> = (0..d)
            .map(|k| {
                let mut e = linalg::zeros(d);
                e[(k, k)] = linalg::ONE;
                e
            })
            .collect();
        Self::from_spanning_set(d, &units, DEFAULT_TOL).expect("square units")
    }

    /// `span{I}`.
    pub fn trivial(d: usize) -> Self {
        Self::from_spanning_set(d, &[], DEFAULT_TOL).expect("identity is square")
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Ambient matrix dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Linear dimension of the span.
    pub fn linear_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CMat] {
        &self.basis
    }

    /// The matrices the algebra was generated from (may be empty).
    pub fn generators(&self) -> &[CMat] {
        &self.generators
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Coordinates of the orthogonal projection of `m` onto the span.
    pub fn coordinates(&self, m: &CMat) -> Vec<Complex64> {
        self.basis.iter().map(|b| frob_inner(b, m)).collect()
    }

    pub fn project(&self, m: &CMat) -> CMat {
        let mut p = linalg::zeros(self.dim);
        for b in &self.basis {
            p += b * frob_inner(b, m);
        }
        p
    }

    /// Frobenius distance from `m` to the span.
    pub fn residual(&self, m: &CMat) -> f64 {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return f64::INFINITY;
        }
        frob_norm(&(m - self.project(m)))
    }

    /// Span membership, relative to the size of `m`.
    pub fn contains(&self, m: &CMat) -> bool {
        self.residual(m) <= self.tol * frob_norm(m).max(1.0)
    }

    pub fn is_subalgebra_of(&self, other: &MatrixStarAlgebra) -> bool {
        self.dim == other.dim && self.basis.iter().all(|b| other.contains(b))
    }

    pub fn span_eq(&self, other: &MatrixStarAlgebra) -> bool {
        self.linear_dim() == other.linear_dim() && self.is_subalgebra_of(other)
    }

    /// Subspace intersection, itself a *-subalgebra.
    pub fn intersection(&self, other: &MatrixStarAlgebra) -> Result<MatrixStarAlgebra> {
        if self.dim != other.dim {
            return Err(Error::input("intersection of algebras in different dimensions"));
        }
        let n = self.dim * self.dim;
        let u = CMat::from_fn(n, self.basis.len(), |r, k| self.basis[k][r]);
        let w = CMat::from_fn(n, other.basis.len(), |r, k| other.basis[k][r]);
        let overlap = u.adjoint() * &w;
        let svd = overlap.svd(true, false);
        let left = svd.u.expect("requested");
        let mut elements = Vec::new();
        for (k, &s) in svd.singular_values.iter().enumerate() {
            if s > 1.0 - 1e-7 {
                let v = &u * left.column(k);
                elements.push(CMat::from_column_slice(self.dim, self.dim, v.as_slice()));
            }
        }
        let mut alg = Self::from_spanning_set(self.dim, &elements, self.tol.max(other.tol))?;
        alg.generators = alg.basis.clone();
        Ok(alg)
    }

    /// Unit, adjoint closure and product closure of the span.
    pub fn check_invariants(&self) -> ValidationReport {
        let mut report = ValidationReport::new();
        if !self.contains(&linalg::identity(self.dim)) {
            report.push("staralg.unital", "identity", "identity is not in the span");
        }
        for (i, a) in self.basis.iter().enumerate() {
            if !self.contains(&a.adjoint()) {
                report.push("staralg.star_closed", format!("basis[{i}]"), "adjoint leaves the span");
            }
            for (j, b) in self.basis.iter().enumerate() {
                let p = a * b;
                let r = self.residual(&p);
                if r > self.tol * frob_norm(&p).max(1.0) {
                    report.push(
                        "staralg.product_closed",
                        format!("basis[{i}]·basis[{j}]"),
                        format!("residual {r:.3e}"),
                    );
                }
            }
        }
        report
    }
}

/// Smallest unital *-closed span containing the generators, with default options.
pub fn generate_algebra(generators: &[CMat], d: usize) -> Result<MatrixStarAlgebra> {
    generate_algebra_with(generators, d, &AlgebraOptions::default())
}

/// Closes `{I} ∪ generators ∪ adjoints` under left multiplication by the
/// generators, reducing every candidate against the running orthonormal basis
/// until no new direction appears.
pub fn generate_algebra_with(
    generators: &[CMat],
    d: usize,
    opts: &AlgebraOptions,
) -> Result<MatrixStarAlgebra> {
    if d == 0 {
        return Err(Error::input("dimension must be positive"));
    }
    if d > opts.dim_cap {
        return Err(Error::Refused {
            what: "ambient dimension".into(),
            size: d as u128,
            bound: opts.dim_cap as u128,
        });
    }
    let mut letters: Vec<CMat> = Vec::new();
    for (k, g) in generators.iter().enumerate() {
        check_square(g, d, &format!("generator {k}"))?;
        letters.push(g.clone());
        if frob_norm(&(g - g.adjoint())) > opts.tol * frob_norm(g).max(1.0) {
            letters.push(g.adjoint());
        }
    }
    let mut basis = vec![linalg::identity(d) / c((d as f64).sqrt(), 0.0)];
    let mut next = 0;
    while next < basis.len() {
        let b = basis[next].clone();
        next += 1;
        for g in &letters {
            if let Some(q) = reduce(&basis, g * &b, opts.tol, frob_norm(g)) {
                basis.push(q);
            }
        }
    }
    Ok(MatrixStarAlgebra { dim: d, basis, generators: generators.to_vec(), tol: opts.tol })
}

/// All pairwise basis commutators vanish in operator norm.
pub fn is_commutative(a: &MatrixStarAlgebra) -> bool {
    let tol = a.tol;
    for (i, x) in a.basis.iter().enumerate() {
        for y in &a.basis[i + 1..] {
            let comm = linalg::commutator(x, y);
            if frob_norm(&comm) > tol && op_norm(&comm) > tol {
                return false;
            }
        }
    }
    true
}

/// A point of the Gel'fand spectrum: a minimal projection of a commutative
/// algebra together with the eigenvalue of each basis element on its range.
#[derive(Debug, Clone)]
pub struct Character {
    pub projection: CMat,
    /// Value on each element of the algebra's orthonormal basis.
    pub values: Vec<Complex64>,
    rank: usize,
}

impl Character {
    /// `χ(a) = Tr(P a) / Tr(P)`; exact for `a` in the algebra.
    pub fn evaluate(&self, a: &CMat) -> Complex64 {
        (&self.projection * a).trace() / c(self.rank as f64, 0.0)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }
}

fn spectral_projections(h: &CMat, gap: f64) -> Vec<CMat> {
    let (vals, vecs) = linalg::hermitian_eigen(h);
    linalg::cluster_eigenvalues(&vals, gap)
        .into_iter()
        .map(|(_, cols)| linalg::column_projection(&vecs, &cols))
        .collect()
}

fn hermitian_parts(b: &CMat) -> [CMat; 2] {
    let re = (b + b.adjoint()) * c(0.5, 0.0);
    let im = (b - b.adjoint()) * c(0.0, -0.5);
    [re, im]
}

fn projections_ok(v: &MatrixStarAlgebra, projs: &[CMat]) -> bool {
    projs.len() == v.linear_dim() && projs.iter().all(|p| v.residual(p) <= 1e-7 * frob_norm(p).max(1.0))
}

/// Gel'fand spectrum with the default seed.
pub fn gelfand_spectrum(v: &MatrixStarAlgebra) -> Result<Vec<Character>> {
    gelfand_spectrum_seeded(v, DEFAULT_SPECTRUM_SEED)
}

/// Characters of a commutative algebra, one per minimal projection.
///
/// A random self-adjoint combination of the basis is diagonalized; its
/// eigenprojections are the minimal projections unless two of them share an
/// eigenvalue, in which case fresh coefficients are drawn. After three failed
/// draws the projections are refined deterministically, basis element by basis
/// element. Characters are sorted by their projection entries so the order does
/// not depend on the seed.
pub fn gelfand_spectrum_seeded(v: &MatrixStarAlgebra, seed: u64) -> Result<Vec<Character>> {
    if !is_commutative(v) {
        return Err(Error::domain("Gel'fand spectrum of a non-commutative algebra"));
    }
    const GAP: f64 = 1e-6;
    let parts: Vec<CMat> = v.basis.iter().flat_map(hermitian_parts).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut found = None;
    for _ in 0..3 {
        let mut h = linalg::zeros(v.dim);
        for p in &parts {
            h += p * c(rng.random_range(-1.0..1.0), 0.0);
        }
        let projs = spectral_projections(&h, GAP);
        if projections_ok(v, &projs) {
            found = Some(projs);
            break;
        }
    }
    let projs = match found {
        Some(p) => p,
        None => {
            let mut projs = vec![linalg::identity(v.dim)];
            for part in &parts {
                let spectral = spectral_projections(part, GAP);
                projs = projs
                    .iter()
                    .flat_map(|p| spectral.iter().map(move |e| p * e))
                    .filter(|q| q.trace().re > 0.5)
                    .collect();
            }
            if !projections_ok(v, &projs) {
                return Err(Error::Internal(format!(
                    "joint diagonalization found {} minimal projections for an algebra of dimension {}",
                    projs.len(),
                    v.linear_dim()
                )));
            }
            projs
        }
    };
    let mut chars: Vec<Character> = projs
        .into_iter()
        .map(|p| {
            let rank = p.trace().re.round() as usize;
            let values = v.basis.iter().map(|b| (&p * b).trace() / c(rank as f64, 0.0)).collect();
            Character { projection: p, values, rank }
        })
        .collect();
    // Row-major projection entries, descending, so |0⟩⟨0| precedes |1⟩⟨1|.
    let key = |ch: &Character| -> Vec<i64> {
        let p = &ch.projection;
        (0..p.nrows())
            .flat_map(|i| (0..p.ncols()).map(move |j| p[(i, j)]))
            .flat_map(|z| [(z.re * 1e6).round() as i64, (z.im * 1e6).round() as i64])
            .collect()
    };
    chars.sort_by_key(|ch| std::cmp::Reverse(key(ch)));
    Ok(chars)
}


/// One object of a context category.
#[derive(Debug, Clone)]
pub struct Context {
    pub label: String,
    pub algebra: MatrixStarAlgebra,
    /// Indices of the seed observables that generated it; empty for derived contexts.
    pub seeds: Vec<usize>,
}

/// Commutative subalgebras ordered by inclusion.
///
/// The family is closed under pairwise intersection and always contains the
/// trivial context `span{I}`.
#[derive(Debug, Clone)]
pub struct ContextCategory {
    dim: usize,
    contexts: Vec<Context>,
    leq: Vec<Vec<bool>>,
}

impl ContextCategory {
    /// Builds the category from given commutative contexts, adding pairwise
    /// intersections (to a fixpoint) and the trivial context, dropping
    /// duplicates by span.
    pub fn from_contexts(dim: usize, given: Vec<Context>) -> Result<Self> {
        let mut contexts: Vec<Context> = Vec::new();
        let push = |contexts: &mut Vec<Context>, ctx: Context| -> Result<bool> {
            if ctx.algebra.dim() != dim {
                return Err(Error::input(format!("context `{}` has the wrong dimension", ctx.label)));
            }
            if !is_commutative(&ctx.algebra) {
                return Err(Error::domain(format!("context `{}` is not commutative", ctx.label)));
            }
            if contexts.iter().any(|c| c.algebra.span_eq(&ctx.algebra)) {
                return Ok(false);
            }
            contexts.push(ctx);
            Ok(true)
        };
        for ctx in given {
            push(&mut contexts, ctx)?;
        }
        let mut i = 0;
        while i < contexts.len() {
            for j in 0..i {
                let meet = contexts[i].algebra.intersection(&contexts[j].algebra)?;
                let label = format!("{}&{}", contexts[j].label, contexts[i].label);
                push(&mut contexts, Context { label, algebra: meet, seeds: Vec::new() })?;
            }
            i += 1;
        }
        push(
            &mut contexts,
            Context { label: "trivial".into(), algebra: MatrixStarAlgebra::trivial(dim), seeds: Vec::new() },
        )?;
        let n = contexts.len();
        let leq = (0..n)
            .map(|a| (0..n).map(|b| contexts[a].algebra.is_subalgebra_of(&contexts[b].algebra)).collect())
            .collect();
        Ok(ContextCategory { dim, contexts, leq })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    /// `V_a ⊆ V_b`.
    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.leq[a][b]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.contexts.iter().position(|c| c.label == label)
    }

    pub fn trivial(&self) -> usize {
        self.contexts
            .iter()
            .position(|c| c.algebra.linear_dim() == 1)
            .expect("trivial context is always present")
    }

    /// Contexts not strictly contained in any other.
    pub fn maximal(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&a| !(0..self.len()).any(|b| b != a && self.leq[a][b] && !self.leq[b][a]))
            .collect()
    }

    pub fn labels(&self) -> Vec<String> {
        self.contexts.iter().map(|c| c.label.clone()).collect()
    }

    /// The inclusion order as a thin category, arrows `V → V'` for `V ⊆ V'`.
    pub fn as_category(&self) -> FinCategory {
        FinCategory::poset(&self.labels(), &self.leq)
    }

    /// Partial-order laws and commutativity of every context.
    pub fn check(&self) -> ValidationReport {
        let mut report = ValidationReport::new();
        let n = self.len();
        for a in 0..n {
            if !self.leq[a][a] {
                report.push("staralg.order_reflexive", self.contexts[a].label.clone(), "not ≤ itself");
            }
            if !is_commutative(&self.contexts[a].algebra) {
                report.push("staralg.context_commutative", self.contexts[a].label.clone(), "not commutative");
            }
            for b in 0..n {
                if a != b && self.leq[a][b] && self.leq[b][a] {
                    report.push(
                        "staralg.order_antisymmetric",
                        format!("{} / {}", self.contexts[a].label, self.contexts[b].label),
                        "distinct contexts with equal spans",
                    );
                }
                for c in 0..n {
                    if self.leq[a][b] && self.leq[b][c] && !self.leq[a][c] {
                        report.push(
                            "staralg.order_transitive",
                            format!("{} ≤ {} ≤ {}", self.contexts[a].label, self.contexts[b].label, self.contexts[c].label),
                            "composite inclusion missing",
                        );
                    }
                }
            }
        }
        report
    }
}

/// Bron–Kerbosch with pivoting; cliques come back sorted.
pub(crate) fn maximal_cliques(adj: &[Vec<bool>]) -> Vec<Vec<usize>> {
    fn bk(r: &mut Vec<usize>, p: Vec<usize>, x: Vec<usize>, adj: &[Vec<bool>], out: &mut Vec<Vec<usize>>) {
        if p.is_empty() && x.is_empty() {
            let mut c = r.clone();
            c.sort_unstable();
            out.push(c);
            return;
        }
        let pivot = p.iter().chain(x.iter()).copied().max_by_key(|&u| p.iter().filter(|&&v| adj[u][v]).count()).unwrap();
        let candidates: Vec<usize> = p.iter().copied().filter(|&v| !adj[pivot][v]).collect();
        let (mut p, mut x) = (p, x);
        for v in candidates {
            r.push(v);
            let np = p.iter().copied().filter(|&w| adj[v][w]).collect();
            let nx = x.iter().copied().filter(|&w| adj[v][w]).collect();
            bk(r, np, nx, adj, out);
            r.pop();
            p.retain(|&w| w != v);
            x.push(v);
        }
    }
    let n = adj.len();
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    bk(&mut Vec::new(), (0..n).collect(), Vec::new(), adj, &mut out);
    out.sort();
    out
}

fn commute(a: &CMat, b: &CMat, tol: f64) -> bool {
    let comm = linalg::commutator(a, b);
    frob_norm(&comm) <= tol || op_norm(&comm) <= tol
}

/// Context category generated by seed observables.
///
/// Each maximal pairwise-commuting set of seeds generates a context; pairwise
/// intersections and the trivial context are added.
pub fn context_category(ambient: &MatrixStarAlgebra, seeds: &[CMat]) -> Result<ContextCategory> {
    let d = ambient.dim();
    let tol = ambient.tol();
    for (k, s) in seeds.iter().enumerate() {
        check_square(s, d, &format!("seed {k}"))?;
        if !linalg::is_hermitian(s, tol.max(1e-12) * frob_norm(s).max(1.0)) {
            return Err(Error::domain(format!("seed {k} is not self-adjoint")));
        }
        if !ambient.contains(s) {
            return Err(Error::domain(format!("seed {k} lies outside the ambient algebra")));
        }
    }
    let n = seeds.len();
    let adj: Vec<Vec<bool>> = (0..n)
        .map(|a| (0..n).map(|b| a != b && commute(&seeds[a], &seeds[b], tol)).collect())
        .collect();
    let opts = AlgebraOptions { tol, dim_cap: d.max(DEFAULT_DIM_CAP) };
    let mut contexts = Vec::new();
    for clique in maximal_cliques(&adj) {
        let gens: Vec<CMat> = clique.iter().map(|&k| seeds[k].clone()).collect();
        let algebra = generate_algebra_with(&gens, d, &opts)?;
        let label = format!(
            "{{{}}}",
            clique.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",")
        );
        contexts.push(Context { label, algebra, seeds: clique });
    }
    ContextCategory::from_contexts(d, contexts)
}

/// Finite Boolean algebra of commuting projections, described by its atoms.
#[derive(Debug, Clone)]
pub struct BooleanBlock {
    /// Indices of the input projections in this block.
    pub members: Vec<usize>,
    /// Nonzero minimal elements; they sum to the identity.
    pub atoms: Vec<CMat>,
}

impl BooleanBlock {
    /// Number of elements, `2^atoms`.
    pub fn size(&self) -> usize {
        1usize << self.atoms.len()
    }

    /// Every element as a sum of atoms, indexed by atom bitmask.
    pub fn elements(&self) -> Vec<CMat> {
        let d = self.atoms.first().map(|a| a.nrows()).unwrap_or(0);
        (0..self.size())
            .map(|mask| {
                let mut m = linalg::zeros(d);
                for (k, a) in self.atoms.iter().enumerate() {
                    if mask >> k & 1 == 1 {
                        m += a;
                    }
                }
                m
            })
            .collect()
    }
}

/// Maximal commuting families of the given projections, each closed under
/// complement and meet.
pub fn boolean_blocks(projections: &[CMat], tol: f64) -> Result<Vec<BooleanBlock>> {
    let d = match projections.first() {
        Some(p) => p.nrows(),
        None => return Ok(Vec::new()),
    };
    for (k, p) in projections.iter().enumerate() {
        check_square(p, d, &format!("projection {k}"))?;
        if !linalg::is_projection(p, tol) {
            return Err(Error::domain(format!("input {k} is not a projection")));
        }
    }
    let n = projections.len();
    let adj: Vec<Vec<bool>> = (0..n)
        .map(|a| (0..n).map(|b| a != b && commute(&projections[a], &projections[b], tol)).collect())
        .collect();
    let id = linalg::identity(d);
    Ok(maximal_cliques(&adj)
        .into_iter()
        .map(|members| {
            let mut atoms = vec![id.clone()];
            for &k in &members {
                let p = &projections[k];
                let q = &id - p;
                atoms = atoms
                    .iter()
                    .flat_map(|a| [a * p, a * &q])
                    .filter(|m| m.trace().re > 0.5)
                    .collect();
            }
            BooleanBlock { members, atoms }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, kron, pauli_x, pauli_y, pauli_z, ray_projection};
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest};

    #[test]
    fn empty_generators_give_scalars() {
        let a = generate_algebra(&[], 2).unwrap();
        assert_eq!(a.linear_dim(), 1);
        assert!(a.check_invariants().is_valid());
    }

    #[test]
    fn rotated_orthogonal_projections_stay_commutative() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let u = crate::linalg::random::unitary(&mut rng, 3);
        let p = &u * diag(&[1.0, 0.0, 0.0]) * u.adjoint();
        let q = &u * diag(&[0.0, 2.0, 2.0]) * u.adjoint();
        let a = generate_algebra(&[p, q], 3).unwrap();
        assert_eq!(a.linear_dim(), 2);
        assert!(is_commutative(&a));
    }

    #[test]
    fn sigma_z_generates_diagonal() {
        let a = generate_algebra(&[pauli_z()], 2).unwrap();
        assert_eq!(a.linear_dim(), 2);
        assert!(a.span_eq(&MatrixStarAlgebra::diagonal(2)));
    }

    #[test]
    fn sigma_x_and_z_generate_m2() {
        let a = generate_algebra(&[pauli_x(), pauli_z()], 2).unwrap();
        assert_eq!(a.linear_dim(), 4);
        assert!(a.span_eq(&MatrixStarAlgebra::full(2)));
        assert!(a.check_invariants().is_valid());
        assert!(!is_commutative(&a));
    }

    #[test]
    fn non_square_generator_rejected() {
        let bad = CMat::zeros(2, 3);
        assert!(matches!(generate_algebra(&[bad], 2), Err(Error::Input(_))));
        assert!(matches!(generate_algebra(&[pauli_x()], 3), Err(Error::Input(_))));
    }

    #[test]
    fn dimension_cap_refuses() {
        assert!(matches!(generate_algebra(&[], 17), Err(Error::Refused { .. })));
    }

    #[test]
    fn xx_algebra_is_commutative() {
        let id = linalg::identity(2);
        let x = pauli_x();
        let gens = [kron(&x, &id), kron(&id, &x), kron(&x, &x)];
        let a = generate_algebra(&gens, 4).unwrap();
        assert_eq!(a.linear_dim(), 4);
        assert!(is_commutative(&a));
        for g in &gens {
            for h in &gens {
                assert!(op_norm(&linalg::commutator(g, h)) < 1e-12);
            }
        }
    }

    #[test]
    fn diagonal_spectrum_in_d3() {
        let v = generate_algebra(&[diag(&[1.0, 2.0, 3.0])], 3).unwrap();
        let spec = gelfand_spectrum(&v).unwrap();
        assert_eq!(spec.len(), 3);
        let a = diag(&[1.0, 2.0, 3.0]);
        let values: Vec<f64> = spec.iter().map(|ch| ch.evaluate(&a).re).collect();
        assert!((values[0] - 1.0).abs() < 1e-9);
        assert!((values[1] - 2.0).abs() < 1e-9);
        assert!((values[2] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn sigma_z_spectrum() {
        let v = generate_algebra(&[pauli_z()], 2).unwrap();
        let spec = gelfand_spectrum(&v).unwrap();
        let vals: Vec<f64> = spec.iter().map(|ch| ch.evaluate(&pauli_z()).re).collect();
        assert_eq!(vals.len(), 2);
        assert!((vals[0] - 1.0).abs() < 1e-9 && (vals[1] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_qubit_z_spectrum_pairs() {
        let id = linalg::identity(2);
        let z1 = kron(&pauli_z(), &id);
        let z2 = kron(&id, &pauli_z());
        let v = generate_algebra(&[z1.clone(), z2.clone()], 4).unwrap();
        let spec = gelfand_spectrum(&v).unwrap();
        let mut pairs: Vec<(i32, i32)> = spec
            .iter()
            .map(|ch| (ch.evaluate(&z1).re.round() as i32, ch.evaluate(&z2).re.round() as i32))
            .collect();
        pairs.sort();
        assert_eq!(pairs, vec![(-1, -1), (-1, 1), (1, -1), (1, 1)]);
    }

    #[test]
    fn degenerate_algebra_spectrum_and_reconstruction() {
        // span{I, Z⊗I} in d=4: two rank-2 minimal projections.
        let z1 = kron(&pauli_z(), &linalg::identity(2));
        let v = generate_algebra(std::slice::from_ref(&z1), 4).unwrap();
        for seed in 0..5 {
            let spec = gelfand_spectrum_seeded(&v, seed).unwrap();
            assert_eq!(spec.len(), 2);
            assert!(spec.iter().all(|ch| ch.rank() == 2));
            let mut rebuilt = linalg::zeros(4);
            for ch in &spec {
                rebuilt += &ch.projection * ch.evaluate(&z1);
            }
            assert!(frob_norm(&(rebuilt - &z1)) < 1e-9);
        }
    }

    #[test]
    fn spectrum_of_noncommutative_is_domain_error() {
        let a = MatrixStarAlgebra::full(2);
        assert!(matches!(gelfand_spectrum(&a), Err(Error::Domain(_))));
    }

    #[test]
    fn characters_are_multiplicative() {
        let id = linalg::identity(2);
        let gens = [kron(&pauli_x(), &id), kron(&id, &pauli_y())];
        let v = generate_algebra(&gens, 4).unwrap();
        let spec = gelfand_spectrum(&v).unwrap();
        for ch in &spec {
            assert!((ch.evaluate(&linalg::identity(4)) - linalg::ONE).norm() < 1e-9);
            for a in v.basis() {
                for b in v.basis() {
                    let lhs = ch.evaluate(&(a * b));
                    assert!((lhs - ch.evaluate(a) * ch.evaluate(b)).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn single_seed_context_category() {
        let cc = context_category(&MatrixStarAlgebra::full(2), &[pauli_z()]).unwrap();
        assert_eq!(cc.len(), 2);
        assert_eq!(cc.contexts()[0].algebra.linear_dim(), 2);
        let t = cc.trivial();
        assert!(cc.leq(t, 0) && !cc.leq(0, t));
        assert!(cc.check().is_valid());
    }

    #[test]
    fn non_commuting_seeds_give_two_maximal_contexts() {
        let cc = context_category(&MatrixStarAlgebra::full(2), &[pauli_z(), pauli_x()]).unwrap();
        assert_eq!(cc.maximal().len(), 2);
        assert_eq!(cc.len(), 3);
        let meet = cc.contexts()[0].algebra.intersection(&cc.contexts()[1].algebra).unwrap();
        assert_eq!(meet.linear_dim(), 1);
    }

    #[test]
    fn clique_contexts_in_m4() {
        let id = linalg::identity(2);
        let seeds = [
            kron(&pauli_z(), &id),
            kron(&id, &pauli_z()),
            kron(&pauli_x(), &pauli_x()),
        ];
        let cc = context_category(&MatrixStarAlgebra::full(4), &seeds).unwrap();
        // Commutation graph: Z1–Z2 only; ZZ–XX commute but XX anticommutes with each Z.
        let maximal: Vec<Vec<usize>> = cc.maximal().iter().map(|&k| cc.contexts()[k].seeds.clone()).collect();
        assert!(maximal.contains(&vec![0, 1]));
        assert!(maximal.contains(&vec![2]));
        assert!(cc.check().is_valid());
    }

    #[test]
    fn seed_errors() {
        let amb = MatrixStarAlgebra::diagonal(2);
        assert!(matches!(context_category(&amb, &[pauli_x()]), Err(Error::Domain(_))));
        let full = MatrixStarAlgebra::full(2);
        assert!(matches!(context_category(&full, &[pauli_x() * linalg::I + pauli_z()]), Err(Error::Domain(_))));
    }

    #[test]
    fn block_of_complementary_pair() {
        let p = diag(&[1.0, 0.0]);
        let q = diag(&[0.0, 1.0]);
        let blocks = boolean_blocks(&[p, q], 1e-9).unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].size(), 4);
    }

    #[test]
    fn non_commuting_rays_give_two_blocks() {
        let zero = ray_projection(&[c(1.0, 0.0), c(0.0, 0.0)]);
        let plus = ray_projection(&[c(1.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(boolean_blocks(&[zero, plus], 1e-9).unwrap().len(), 2);
    }

    #[test]
    fn three_orthogonal_rays_in_d3() {
        let ps: Vec<CMat> = (0..3)
            .map(|k| {
                let mut v = vec![c(0.0, 0.0); 3];
                v[k] = c(1.0, 0.0);
                ray_projection(&v)
            })
            .collect();
        let blocks = boolean_blocks(&ps, 1e-9).unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].size(), 8);
    }

    #[test]
    fn non_projection_rejected() {
        assert!(matches!(boolean_blocks(&[pauli_x()], 1e-9), Err(Error::Domain(_))));
    }

    fn shared_basis_seeds(seed: u64, d: usize, k: usize) -> Vec<CMat> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = crate::linalg::random::unitary(&mut rng, d);
        (0..k)
            .map(|_| {
                let values: Vec<f64> = (0..d).map(|_| rng.random_range(-2..=2) as f64).collect();
                &u * diag(&values) * u.adjoint()
            })
            .collect()
    }

    proptest! {
        #[test]
        fn commuting_seeds_generate_commutative_algebras(seed in any::<u64>(), d in 2usize..5, k in 1usize..4) {
            let a = generate_algebra(&shared_basis_seeds(seed, d, k), d).unwrap();
            prop_assert!(a.check_invariants().is_valid());
            prop_assert!(is_commutative(&a));
            prop_assert!(a.linear_dim() <= d);
        }

        #[test]
        fn spectrum_is_a_resolution_of_identity(seed in any::<u64>(), d in 2usize..5, k in 1usize..4) {
            let a = generate_algebra(&shared_basis_seeds(seed, d, k), d).unwrap();
            let spec = gelfand_spectrum(&a).unwrap();
            prop_assert_eq!(spec.len(), a.linear_dim());
            let mut sum = linalg::zeros(d);
            for (i, x) in spec.iter().enumerate() {
                sum += &x.projection;
                for y in &spec[i + 1..] {
                    prop_assert!(frob_norm(&(&x.projection * &y.projection)) < 1e-8);
                }
                for b in a.basis() {
                    let lhs = &x.projection * b;
                    prop_assert!(frob_norm(&(lhs - &x.projection * x.evaluate(b))) < 1e-8);
                }
            }
            prop_assert!(frob_norm(&(sum - linalg::identity(d))) < 1e-8);
        }

        #[test]
        fn context_categories_are_posets(seed in any::<u64>(), d in 2usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let seeds: Vec<CMat> = (0..3).map(|_| crate::linalg::random::hermitian(&mut rng, d)).collect();
            let cc = context_category(&MatrixStarAlgebra::full(d), &seeds).unwrap();
            prop_assert!(cc.check().is_valid());
            let t = cc.trivial();
            for v in 0..cc.len() {
                prop_assert!(cc.leq(t, v));
            }
        }
    }
}
