//! Toy Haag–Kastler net on a ring of `L` qubits.
//!
//! Regions are site intervals, local algebras act on their sites, disjoint
//! intervals count as space-like separated and translations are cyclic site
//! shifts.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::ProductSpectrum;
use crate::fincat::{Cone, Diagram, FinCategory, LinearMap, SetMap};
use crate::linalg::{self, c, CMat};
use crate::report::ValidationReport;
use crate::staralg::{gelfand_spectrum, generate_algebra_with, is_commutative, AlgebraOptions, MatrixStarAlgebra};

pub const MAX_CHAIN: usize = 6;
pub const NET_TOL: f64 = 1e-9;

/// Sites `a..=b` taken modulo the chain length; `b ≥ L` means the interval wraps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "[usize; 2]", into = "[usize; 2]")]
pub struct Region {
    pub a: usize,
    pub b: usize,
}

impl TryFrom<[usize; 2]> for Region {
    type Error = Error;
    fn try_from([a, b]: [usize; 2]) -> Result<Self> {
        Region::new(a, b)
    }
}

impl From<Region> for [usize; 2] {
    fn from(r: Region) -> Self {
        [r.a, r.b]
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{},{}]", self.a, self.b)
    }
}

impl Region {
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a > b {
            return Err(Error::input(format!("region [{a},{b}] has a > b")));
        }
        Ok(Region { a, b })
    }

    pub fn site(s: usize) -> Self {
        Region { a: s, b: s }
    }

    pub fn len(&self) -> usize {
        self.b - self.a + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sites(&self, l: usize) -> Vec<usize> {
        let mut s: Vec<usize> = (self.a..=self.b).map(|x| x % l).collect();
        s.sort_unstable();
        s
    }

    fn mask(&self, l: usize) -> u64 {
        self.sites(l).iter().fold(0, |m, &s| m | 1 << s)
    }

    pub fn is_within(&self, l: usize) -> bool {
        self.a < l && self.len() <= l
    }

    pub fn subset_of(&self, other: &Region, l: usize) -> bool {
        self.mask(l) & !other.mask(l) == 0
    }

    pub fn disjoint(&self, other: &Region, l: usize) -> bool {
        self.mask(l) & other.mask(l) == 0
    }

    /// Translate by `shift`; off the end of the chain is an error unless `cyclic`.
    pub fn shifted(&self, shift: usize, l: usize, cyclic: bool) -> Result<Region> {
        if cyclic {
            let a = (self.a + shift) % l;
            Ok(Region { a, b: a + self.len() - 1 })
        } else if self.b + shift >= l {
            Err(Error::domain(format!("region {self} shifted by {shift} leaves the chain of length {l}")))
        } else {
            Ok(Region { a: self.a + shift, b: self.b + shift })
        }
    }
}

/// `op` on `site` of an `l`-qubit chain; site 0 is the leftmost tensor factor.
pub fn site_operator(op: &CMat, site: usize, l: usize) -> CMat {
    let id = linalg::identity(2);
    let factors: Vec<&CMat> = (0..l).map(|s| if s == site { op } else { &id }).collect();
    linalg::kron_all(factors)
}

/// Tensor factors `ops[j]` placed on `sites[j]`, identity elsewhere.
pub fn place(ops: &[CMat], sites: &[usize], l: usize) -> CMat {
    let id = linalg::identity(2);
    let factors: Vec<&CMat> =
        (0..l).map(|s| sites.iter().position(|&t| t == s).map_or(&id, |j| &ops[j])).collect();
    linalg::kron_all(factors)
}

/// Orthonormal Pauli-string basis of the full algebra on `sites`.
pub fn pauli_basis(sites: &[usize], l: usize) -> Vec<CMat> {
    let paulis = [linalg::identity(2), linalg::pauli_x(), linalg::pauli_y(), linalg::pauli_z()];
    let k = sites.len();
    let scale = c(1.0 / ((1usize << l) as f64).sqrt(), 0.0);
    (0..4usize.pow(k as u32))
        .map(|mut code| {
            let ops: Vec<CMat> = (0..k)
                .map(|_| {
                    let p = paulis[code % 4].clone();
                    code /= 4;
                    p
                })
                .collect();
            place(&ops, sites, l) * scale
        })
        .collect()
}

/// `(Tr_{rest} x / 2^{|rest|}) ⊗ I_rest`: the component of `x` supported on `sites`.
fn localize(x: &CMat, sites: &[usize], l: usize) -> CMat {
    let d = 1usize << l;
    let keep: usize = sites.iter().fold(0, |m, &s| m | 1 << (l - 1 - s));
    let rest = (d - 1) & !keep;
    let free = l - sites.len();
    let mut out = CMat::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            if i & rest != j & rest {
                continue;
            }
            let mut acc = linalg::ZERO;
            // Run over every assignment of the traced-out bits.
            let mut k = 0usize;
            loop {
                acc += x[((i & keep) | k, (j & keep) | k)];
                if k == rest {
                    break;
                }
                k = ((k | keep) + 1) & rest;
            }
            out[(i, j)] = acc / (1usize << free) as f64;
        }
    }
    out
}

/// A local algebra: everything on some sites, or an explicit *-algebra.
#[derive(Debug, Clone)]
pub enum LocalAlgebra {
    Full { sites: Vec<usize> },
    Custom(MatrixStarAlgebra),
}

impl LocalAlgebra {
    pub fn contains(&self, x: &CMat, l: usize) -> bool {
        match self {
            LocalAlgebra::Full { sites } => {
                let r = localize(x, sites, l);
                linalg::frob_norm(&(x - r)) <= NET_TOL * linalg::frob_norm(x).max(1.0)
            }
            LocalAlgebra::Custom(a) => a.contains(x),
        }
    }

    /// Generators whose *-algebra is this one; σx and σz per site for `Full`.
    pub fn generators(&self, l: usize) -> Vec<CMat> {
        match self {
            LocalAlgebra::Full { sites } => sites
                .iter()
                .flat_map(|&s| [site_operator(&linalg::pauli_x(), s, l), site_operator(&linalg::pauli_z(), s, l)])
                .collect(),
            LocalAlgebra::Custom(a) => a.generators().to_vec(),
        }
    }

    pub fn basis(&self, l: usize) -> Vec<CMat> {
        match self {
            LocalAlgebra::Full { sites } => pauli_basis(sites, l),
            LocalAlgebra::Custom(a) => a.basis().to_vec(),
        }
    }

    pub fn linear_dim(&self) -> usize {
        match self {
            LocalAlgebra::Full { sites } => 4usize.pow(sites.len() as u32),
            LocalAlgebra::Custom(a) => a.linear_dim(),
        }
    }
}

/// Region ↦ local algebra; unlisted regions get the full algebra on their sites.
#[derive(Debug, Clone)]
pub struct LocalNet {
    l: usize,
    custom: BTreeMap<Region, LocalAlgebra>,
}

fn options(l: usize) -> AlgebraOptions {
    AlgebraOptions { dim_cap: 1 << l, ..AlgebraOptions::default() }
}

impl LocalNet {
    pub fn standard(l: usize) -> Result<Self> {
        if l == 0 || l > MAX_CHAIN {
            return Err(Error::Refused { what: "chain length".into(), size: l as u128, bound: MAX_CHAIN as u128 });
        }
        Ok(LocalNet { l, custom: BTreeMap::new() })
    }

    pub fn chain(&self) -> usize {
        self.l
    }

    pub fn dim(&self) -> usize {
        1 << self.l
    }

    /// Replaces the algebra of `region` by the one generated from `generators`.
    pub fn assign(&mut self, region: Region, generators: &[CMat]) -> Result<()> {
        if !region.is_within(self.l) {
            return Err(Error::input(format!("region {region} outside chain of length {}", self.l)));
        }
        let a = generate_algebra_with(generators, self.dim(), &options(self.l))?;
        self.custom.insert(region, LocalAlgebra::Custom(a));
        Ok(())
    }

    pub fn algebra(&self, region: &Region) -> LocalAlgebra {
        self.custom
            .get(region)
            .cloned()
            .unwrap_or_else(|| LocalAlgebra::Full { sites: region.sites(self.l) })
    }

    /// Every interval `[a,b]` with `a ≤ b < L`, plus any wrapped custom regions.
    pub fn regions(&self) -> Vec<Region> {
        let mut out: Vec<Region> = (0..self.l).flat_map(|a| (a..self.l).map(move |b| Region { a, b })).collect();
        out.extend(self.custom.keys().filter(|r| r.b >= self.l));
        out
    }
}

fn ordered_pairs(regions: &[Region], keep: impl Fn(&Region, &Region) -> bool + Sync) -> Vec<(Region, Region)> {
    regions.iter().flat_map(|v| regions.iter().map(move |u| (*v, *u))).filter(|(v, u)| v != u && keep(v, u)).collect()
}

/// `A_V ⊆ A_U` whenever `V ⊆ U`, checked on generators of `A_V`.
pub fn check_isotony(net: &LocalNet) -> ValidationReport {
    let l = net.l;
    let pairs = ordered_pairs(&net.regions(), |v, u| v.subset_of(u, l));
    let found: Vec<(String, String)> = pairs
        .par_iter()
        .filter_map(|(v, u)| {
            let big = net.algebra(u);
            let bad = net.algebra(v).generators(l).iter().position(|g| !big.contains(g, l))?;
            Some((format!("{v} ⊆ {u}"), format!("generator {bad} of {v} is not in {u}")))
        })
        .collect();
    let mut report = ValidationReport::new();
    for (loc, detail) in found {
        report.push("locnet.isotony", loc, detail);
    }
    report
}

/// Generators of disjoint regions commute.
pub fn check_locality(net: &LocalNet) -> ValidationReport {
    let l = net.l;
    let pairs: Vec<(Region, Region)> =
        ordered_pairs(&net.regions(), |v, u| v < u && v.disjoint(u, l));
    let found: Vec<(String, String)> = pairs
        .par_iter()
        .filter_map(|(v, u)| {
            let (gv, gu) = (net.algebra(v).generators(l), net.algebra(u).generators(l));
            let worst = gv
                .iter()
                .flat_map(|x| gu.iter().map(move |y| linalg::op_norm(&linalg::commutator(x, y))))
                .fold(0.0, f64::max);
            (worst > NET_TOL).then(|| (format!("{v} ⟂ {u}"), format!("commutator norm {worst:.3e}")))
        })
        .collect();
    let mut report = ValidationReport::new();
    for (loc, detail) in found {
        report.push("locnet.locality", loc, detail);
    }
    report
}

/// A commutative subalgebra attached to a region.
#[derive(Debug, Clone)]
pub struct LocalContext {
    pub label: String,
    pub region: Region,
    pub algebra: MatrixStarAlgebra,
}

impl LocalContext {
    pub fn generated(label: &str, region: Region, generators: &[CMat], l: usize) -> Result<Self> {
        let algebra = generate_algebra_with(generators, 1 << l, &options(l))?;
        Ok(LocalContext { label: label.into(), region, algebra })
    }
}

/// Algebra generated by contexts on pairwise disjoint regions.
pub fn composite_context(vs: &[LocalContext], net: &LocalNet) -> Result<MatrixStarAlgebra> {
    let l = net.l;
    for (i, x) in vs.iter().enumerate() {
        for y in &vs[i + 1..] {
            if !x.region.disjoint(&y.region, l) {
                return Err(Error::domain(format!("regions {} and {} are not causally separated", x.region, y.region)));
            }
        }
        if !is_commutative(&x.algebra) {
            return Err(Error::domain(format!("context `{}` is not commutative", x.label)));
        }
        let local = net.algebra(&x.region);
        if x.algebra.basis().iter().any(|b| !local.contains(b, l)) {
            return Err(Error::domain(format!("context `{}` is not inside the algebra of {}", x.label, x.region)));
        }
    }
    let gens: Vec<CMat> = vs.iter().flat_map(|v| v.algebra.basis().iter().cloned()).collect();
    generate_algebra_with(&gens, net.dim(), &options(l))
}

/// Unitary implementing the cyclic shift of tensor factors by `shift`.
pub fn shift_unitary(shift: usize, l: usize) -> CMat {
    let d = 1usize << l;
    let mut u = CMat::zeros(d, d);
    for i in 0..d {
        let mut j = 0;
        for s in 0..l {
            let bit = (i >> (l - 1 - s)) & 1;
            let t = (s + shift) % l;
            j |= bit << (l - 1 - t);
        }
        u[(j, i)] = linalg::ONE;
    }
    u
}

/// `α_s(x) = U_s x U_s†`.
pub fn translate(x: &CMat, shift: usize, l: usize) -> CMat {
    let u = shift_unitary(shift, l);
    &u * x * u.adjoint()
}

/// `α_{s+t} = α_s ∘ α_t` for all shifts, and `α_s` is a *-automorphism.
///
/// Multiplicativity is tested on every (generator, basis element) pair; since
/// the site generators generate the full algebra, that covers all products.
pub fn check_group_action(l: usize) -> ValidationReport {
    let mut report = ValidationReport::new();
    let us: Vec<CMat> = (0..l).map(|s| shift_unitary(s, l)).collect();
    for s in 0..l {
        for t in 0..l {
            let err = linalg::frob_norm(&(&us[(s + t) % l] - &us[s] * &us[t]));
            if err > NET_TOL {
                report.push("locnet.group_action", format!("α_{s} ∘ α_{t}"), format!("differs from α_{} by {err:.3e}", (s + t) % l));
            }
        }
    }
    let sites: Vec<usize> = (0..l).collect();
    let basis = pauli_basis(&sites, l);
    let gens = LocalAlgebra::Full { sites }.generators(l);
    for (s, u) in us.iter().enumerate() {
        let alpha = |x: &CMat| u * x * u.adjoint();
        let images: Vec<CMat> = basis.iter().map(alpha).collect();
        let bad: Vec<String> = gens
            .par_iter()
            .enumerate()
            .flat_map_iter(|(i, g)| {
                let (basis, images) = (&basis, &images);
                let ag = alpha(g);
                (0..basis.len()).filter_map(move |j| {
                    let err = linalg::frob_norm(&(alpha(&(g * &basis[j])) - &ag * &images[j]));
                    (err > NET_TOL).then(|| format!("generator {i}, basis {j}"))
                })
            })
            .collect();
        for loc in bad {
            report.push("locnet.automorphism", format!("α_{s}, {loc}"), "product not preserved");
        }
        for (i, b) in basis.iter().enumerate() {
            if linalg::frob_norm(&(alpha(&b.adjoint()) - images[i].adjoint())) > NET_TOL {
                report.push("locnet.automorphism", format!("α_{s}, basis {i}"), "adjoint not preserved");
            }
        }
    }
    report
}

pub const COVARIANCE_CARRIER_CAP: usize = 1 << 16;

/// Translation covariance of the net and of a context family.
///
/// Checks that `α_s` maps each local algebra onto the algebra of the shifted
/// region, that every context has a translated partner in the family, and that
/// the induced permutation `α'` of product-spectrum points satisfies
/// `α' ∘ embed_V = embed_{sV} ∘ α_s` on each context basis.
pub fn check_covariance(net: &LocalNet, shift: usize, contexts: &[LocalContext], cyclic: bool) -> Result<ValidationReport> {
    let l = net.l;
    let mut report = ValidationReport::new();
    let u = shift_unitary(shift, l);
    let uinv = u.adjoint();
    let alpha = |x: &CMat| &u * x * &uinv;
    let alpha_inv = |x: &CMat| &uinv * x * &u;

    let regions: Vec<Region> = if cyclic { net.regions() } else { contexts.iter().map(|c| c.region).collect() };
    for r in &regions {
        let g = r.shifted(shift, l, cyclic)?;
        let (src, dst) = (net.algebra(r), net.algebra(&g));
        let into = src.generators(l).iter().all(|x| dst.contains(&alpha(x), l));
        let onto = dst.generators(l).iter().all(|y| src.contains(&alpha_inv(y), l));
        if !(into && onto) {
            report.push("locnet.covariance_net", format!("{r} ↦ {g}"), "translation does not map the local algebra onto its image");
        }
    }

    let mut partner = Vec::with_capacity(contexts.len());
    for ctx in contexts {
        if ctx.algebra.basis().iter().any(|b| !net.algebra(&ctx.region).contains(b, l)) {
            report.push("locnet.context_region", ctx.label.clone(), format!("not inside the algebra of {}", ctx.region));
        }
        let g = ctx.region.shifted(shift, l, cyclic)?;
        let moved = MatrixStarAlgebra::from_spanning_set(net.dim(), &ctx.algebra.basis().iter().map(alpha).collect::<Vec<_>>(), ctx.algebra.tol())?;
        let hit = contexts
            .iter()
            .position(|o| o.region == g && o.algebra.span_eq(&moved))
            .or_else(|| contexts.iter().position(|o| o.region.mask(l) == g.mask(l) && o.algebra.span_eq(&moved)));
        match hit {
            Some(k) => partner.push(k),
            None => report.push(
                "locnet.covariance_orphan",
                ctx.label.clone(),
                format!("no context on {g} matches its translate"),
            ),
        }
    }
    if partner.len() != contexts.len() {
        return Ok(report);
    }

    let spectra = contexts.iter().map(|c| gelfand_spectrum(&c.algebra)).collect::<Result<Vec<_>>>()?;
    let carrier = ProductSpectrum::new(
        contexts.iter().map(|c| c.label.clone()).collect(),
        spectra.iter().map(Vec::len).collect(),
    );
    if carrier.len() > COVARIANCE_CARRIER_CAP {
        return Err(Error::Refused { what: "product spectrum".into(), size: carrier.len() as u128, bound: COVARIANCE_CARRIER_CAP as u128 });
    }
    // char_map[V][χ] = character of the partner of V with projection α(P_χ).
    let mut char_map = Vec::with_capacity(contexts.len());
    for (v, spec) in spectra.iter().enumerate() {
        let target = &spectra[partner[v]];
        let mut m = Vec::with_capacity(spec.len());
        for (k, ch) in spec.iter().enumerate() {
            let moved = alpha(&ch.projection);
            match target.iter().position(|t| linalg::frob_norm(&(&t.projection - &moved)) < 1e-7) {
                Some(j) => m.push(j),
                None => {
                    report.push("locnet.covariance_spectrum", format!("{}, character {k}", contexts[v].label), "translated projection is not a character of the partner");
                    return Ok(report);
                }
            }
        }
        char_map.push(m);
    }
    // α'(x)_{partner(V)} = char_map[V][x_V].
    let mut perm = vec![0; carrier.len()];
    let mut seen = vec![false; carrier.len()];
    for (x, slot) in perm.iter_mut().enumerate() {
        let src = carrier.point(x);
        let mut dst = vec![0; src.len()];
        for (v, &chi) in src.iter().enumerate() {
            dst[partner[v]] = char_map[v][chi];
        }
        let y = carrier.index_of(&dst).expect("tuple in range");
        seen[y] = true;
        *slot = y;
    }
    if seen.iter().any(|s| !s) {
        report.push("locnet.covariance_points", "carrier", "induced point map is not a bijection");
        return Ok(report);
    }
    for (v, ctx) in contexts.iter().enumerate() {
        let w = partner[v];
        for (bi, b) in ctx.algebra.basis().iter().enumerate() {
            let ab = alpha(b);
            let worst = (0..carrier.len())
                .map(|x| {
                    let lhs = spectra[v][carrier.component(x, v)].evaluate(b);
                    let rhs = spectra[w][carrier.component(perm[x], w)].evaluate(&ab);
                    (lhs - rhs).norm()
                })
                .fold(0.0, f64::max);
            if worst > 1e-8 {
                report.push("locnet.covariance_extension", format!("{}, basis {bi}", ctx.label), format!("off by {worst:.3e}"));
            }
        }
    }
    Ok(report)
}

/// The algebra generated by every local algebra of the net.
pub fn inductive_limit(net: &LocalNet) -> Result<MatrixStarAlgebra> {
    let gens: Vec<CMat> = net.regions().iter().flat_map(|r| net.algebra(r).generators(net.l)).collect();
    generate_algebra_with(&gens, net.dim(), &options(net.l))
}

fn check_nested(sub: &Region, whole: &Region, l: usize) -> Result<()> {
    if !sub.is_within(l) || !whole.is_within(l) {
        return Err(Error::input("region outside the chain"));
    }
    if !sub.subset_of(whole, l) {
        return Err(Error::domain(format!("{sub} is not inside {whole}")));
    }
    Ok(())
}

/// The full algebra of a `|sub|`-site chain pushed forward along the embedding
/// of `sub` into the ambient chain.
fn embedded_chain_basis(sub: &Region, l: usize) -> Vec<CMat> {
    pauli_basis(&sub.sites(l), l)
}

/// Square of a sub-region inclusion: `F(ι)` applied to the region's own algebra
/// must equal the net's `A_sub`, and `A_sub` must sit inside `A_whole`.
pub fn check_lc_square(sub: &Region, whole: &Region, net: &LocalNet) -> Result<ValidationReport> {
    let l = net.l;
    check_nested(sub, whole, l)?;
    let mut report = ValidationReport::new();
    let (a_sub, a_whole) = (net.algebra(sub), net.algebra(whole));
    if a_sub.generators(l).iter().any(|g| !a_whole.contains(g, l)) {
        report.push("locnet.lc_inclusion", format!("{sub} → {whole}"), "local algebra is not included in the whole");
    }
    let pushed = LocalAlgebra::Full { sites: sub.sites(l) };
    let forward = pushed.generators(l).iter().all(|g| a_sub.contains(g, l));
    let backward = a_sub.generators(l).iter().all(|g| pushed.contains(g, l));
    if !(forward && backward) {
        report.push("locnet.lc_square", format!("{sub} → {whole}"), "F(ι) and the net assignment give different algebras");
    }
    Ok(report)
}

fn coordinate_matrix(rows: &[CMat], cols: &[CMat]) -> CMat {
    CMat::from_fn(rows.len(), cols.len(), |i, j| linalg::frob_inner(&rows[i], &cols[j]))
}

/// The square as a cone with `LinearMap` legs in orthonormal coordinates.
///
/// Apex: the region's own algebra (Pauli coordinates). Diagram: the single
/// arrow `A_sub → A_whole` given by the net. Legs: the net's view of `F(ι)` in
/// `A_sub` coordinates and `F(ι)` itself in `A_whole` coordinates.
pub fn lc_square_cone(sub: &Region, whole: &Region, net: &LocalNet) -> Result<(Diagram<LinearMap>, Cone<LinearMap>)> {
    let l = net.l;
    check_nested(sub, whole, l)?;
    let apex = embedded_chain_basis(sub, l);
    let bs = net.algebra(sub).basis(l);
    let bw = net.algebra(whole).basis(l);
    let incl = coordinate_matrix(&bw, &bs);
    let leg_sub = coordinate_matrix(&bs, &apex);
    let leg_whole = coordinate_matrix(&bw, &apex);
    let index = FinCategory::poset(&["A_sub", "A_whole"], &[vec![true, true], vec![false, true]]);
    let sizes = [("A_sub".to_string(), bs.len()), ("A_whole".to_string(), bw.len())].into_iter().collect();
    let arrows = [("A_sub<=A_whole".to_string(), LinearMap(incl))].into_iter().collect();
    let d = Diagram::new(index, &sizes, arrows)?;
    Ok((d, Cone::new(apex.len(), vec![LinearMap(leg_sub), LinearMap(leg_whole)])))
}

/// Site map of a region into the chain, for diagnostics and export.
pub fn region_embedding(sub: &Region, l: usize) -> Result<SetMap> {
    if !sub.is_within(l) {
        return Err(Error::input("region outside the chain"));
    }
    SetMap::new(sub.sites(l), l)
}
