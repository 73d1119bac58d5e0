//! Truncated bosonic Fock space over the polyhedron space `L²(Z_mⁿ)`,
//! smeared fields, CCR and Weyl relations, and the copy/face embeddings
//! between group field theories of different sizes.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fincat::{Cone, Diagram, FinCategory, LinearMap};
use crate::linalg::{self, c, CMat};
use crate::report::ValidationReport;

pub const MAX_MODES: usize = 64;
pub const MAX_FOCK_DIM: usize = 2500;
pub const IM_TOL: f64 = 1e-12;

/// Single-polyhedron space over `Z_m` with `n` faces; uniform Haar weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyhedronSpace {
    pub m: usize,
    pub n: usize,
}

impl Default for PolyhedronSpace {
    fn default() -> Self {
        PolyhedronSpace { m: 2, n: 2 }
    }
}

impl PolyhedronSpace {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::input("group order must be positive"));
        }
        let dim = (m as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if dim > MAX_MODES as u128 {
            return Err(Error::Refused { what: "single-particle dimension".into(), size: dim, bound: MAX_MODES as u128 });
        }
        Ok(PolyhedronSpace { m, n })
    }

    /// `D = mⁿ`.
    pub fn dim(&self) -> usize {
        self.m.pow(self.n as u32)
    }

    /// Measure of one group tuple.
    pub fn weight(&self) -> f64 {
        1.0 / self.dim() as f64
    }

    /// Row-major tuple index, first face most significant.
    pub fn index(&self, tuple: &[usize]) -> usize {
        tuple.iter().fold(0, |acc, &g| acc * self.m + g)
    }

    pub fn tuple(&self, mut index: usize) -> Vec<usize> {
        let mut t = vec![0; self.n];
        for k in (0..self.n).rev() {
            t[k] = index % self.m;
            index /= self.m;
        }
        t
    }
}

/// Complex values on the group tuples (or on several copies of them).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction(pub Vec<Complex64>);

impl TestFunction {
    pub fn zero(len: usize) -> Self {
        TestFunction(vec![linalg::ZERO; len])
    }

    pub fn delta(len: usize, at: usize) -> Self {
        let mut v = vec![linalg::ZERO; len];
        v[at] = linalg::ONE;
        TestFunction(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add(&self, other: &TestFunction) -> TestFunction {
        TestFunction(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, s: Complex64) -> TestFunction {
        TestFunction(self.0.iter().map(|a| a * s).collect())
    }
}

/// `count` test functions with real and imaginary parts uniform in `[−radius, radius)`.
pub fn random_test_functions(seed: u64, count: usize, len: usize, radius: f64) -> Vec<TestFunction> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| TestFunction((0..len).map(|_| c(rng.random_range(-radius..radius), rng.random_range(-radius..radius))).collect()))
        .collect()
}

/// `(f, f') = w Σ_g f(g) conj f'(g)`, linear in the first slot.
pub fn inner_product(f: &TestFunction, fp: &TestFunction, space: &PolyhedronSpace) -> Result<Complex64> {
    weighted_inner(f, fp, space.weight(), space.dim())
}

fn weighted_inner(f: &TestFunction, fp: &TestFunction, w: f64, len: usize) -> Result<Complex64> {
    if f.len() != len || fp.len() != len {
        return Err(Error::input(format!("test functions must have {len} values, got {} and {}", f.len(), fp.len())));
    }
    Ok(f.0.iter().zip(&fp.0).map(|(a, b)| a * b.conj()).sum::<Complex64>() * w)
}

/// Symmetric Fock space truncated at total occupation `nmax`.
///
/// Basis states are occupation vectors ordered by total number, then
/// reverse-lexicographically within a sector.
#[derive(Debug, Clone)]
pub struct TruncatedFock {
    modes: usize,
    weight: f64,
    nmax: usize,
    states: Vec<Vec<u8>>,
    lookup: HashMap<Vec<u8>, usize>,
    annihilators: Vec<CMat>,
}

fn sector_states(modes: usize, n: usize) -> Vec<Vec<u8>> {
    fn rec(modes: usize, left: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if prefix.len() == modes - 1 {
            prefix.push(left as u8);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=left).rev() {
            prefix.push(k as u8);
            rec(modes, left - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(modes, n, &mut Vec::with_capacity(modes), &mut out);
    out
}

/// `Σ_{N ≤ nmax} C(modes + N − 1, N) = C(modes + nmax, nmax)`.
pub fn fock_dimension(modes: usize, nmax: usize) -> u128 {
    let mut acc: u128 = 1;
    for k in 1..=nmax as u128 {
        acc = acc * (modes as u128 + k) / k;
    }
    acc
}

impl TruncatedFock {
    pub fn new(space: &PolyhedronSpace, nmax: usize) -> Result<Self> {
        TruncatedFock::with_modes(space.dim(), space.weight(), nmax)
    }

    /// Fock space over `modes` single-particle states of Haar weight `weight` each.
    pub fn with_modes(modes: usize, weight: f64, nmax: usize) -> Result<Self> {
        if modes == 0 || modes > MAX_MODES {
            return Err(Error::input(format!("mode count {modes} outside 1..={MAX_MODES}")));
        }
        let dim = fock_dimension(modes, nmax);
        if dim > MAX_FOCK_DIM as u128 {
            return Err(Error::Refused { what: "truncated Fock dimension".into(), size: dim, bound: MAX_FOCK_DIM as u128 });
        }
        let states: Vec<Vec<u8>> = (0..=nmax).flat_map(|n| sector_states(modes, n)).collect();
        let lookup: HashMap<Vec<u8>, usize> = states.iter().enumerate().map(|(k, s)| (s.clone(), k)).collect();
        let dim = states.len();
        let annihilators = (0..modes)
            .into_par_iter()
            .map(|g| {
                let mut a = CMat::zeros(dim, dim);
                for (col, s) in states.iter().enumerate() {
                    if s[g] > 0 {
                        let mut t = s.clone();
                        t[g] -= 1;
                        a[(lookup[&t], col)] = c((s[g] as f64).sqrt(), 0.0);
                    }
                }
                a
            })
            .collect();
        Ok(TruncatedFock { modes, weight, nmax, states, lookup, annihilators })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn nmax(&self) -> usize {
        self.nmax
    }

    pub fn states(&self) -> &[Vec<u8>] {
        &self.states
    }

    pub fn state_index(&self, occupation: &[u8]) -> Option<usize> {
        self.lookup.get(occupation).copied()
    }

    pub fn vacuum(&self) -> usize {
        0
    }

    pub fn number(&self, state: usize) -> usize {
        self.states[state].iter().map(|&x| x as usize).sum()
    }

    pub fn annihilator(&self, g: usize) -> &CMat {
        &self.annihilators[g]
    }

    /// Orthogonal projection onto the sectors with at most `cap` particles.
    pub fn sector_projection(&self, cap: usize) -> CMat {
        let d = self.dim();
        CMat::from_fn(d, d, |i, j| if i == j && self.number(i) <= cap { linalg::ONE } else { linalg::ZERO })
    }

    /// `‖P X P‖` with `P` the projection onto sectors `≤ cap`.
    pub fn compressed_norm(&self, x: &CMat, cap: usize) -> f64 {
        let keep: Vec<usize> = (0..self.dim()).filter(|&i| self.number(i) <= cap).collect();
        let sub = CMat::from_fn(keep.len(), keep.len(), |i, j| x[(keep[i], keep[j])]);
        linalg::op_norm(&sub)
    }

    /// Dimension of the joint kernel of all annihilators.
    pub fn vacuum_kernel_dim(&self) -> usize {
        let mut n = CMat::zeros(self.dim(), self.dim());
        for a in &self.annihilators {
            n += a.adjoint() * a;
        }
        linalg::hermitian_eigen(&n).0.iter().filter(|&&x| x.abs() < 1e-9).count()
    }

    fn check_len(&self, f: &TestFunction) -> Result<()> {
        if f.len() != self.modes {
            return Err(Error::input(format!("test function has {} values, Fock space has {} modes", f.len(), self.modes)));
        }
        Ok(())
    }

    fn inner(&self, f: &TestFunction, fp: &TestFunction) -> Result<Complex64> {
        weighted_inner(f, fp, self.weight, self.modes)
    }
}

/// `Ψ(f) = √w Σ_g f(g) a_g`, so that `[Ψ(f), Ψ(f')†] = (f, f')`.
pub fn field_operator(f: &TestFunction, fock: &TruncatedFock) -> Result<CMat> {
    fock.check_len(f)?;
    let s = fock.weight.sqrt();
    let mut psi = CMat::zeros(fock.dim(), fock.dim());
    for (g, &v) in f.0.iter().enumerate() {
        if v != linalg::ZERO {
            psi += &fock.annihilators[g] * (v * s);
        }
    }
    Ok(psi)
}

fn ccr_operator(f: &TestFunction, fp: &TestFunction, fock: &TruncatedFock) -> Result<CMat> {
    let psi = field_operator(f, fock)?;
    let psi_p = field_operator(fp, fock)?;
    let dag = psi_p.adjoint();
    let id = linalg::identity(fock.dim());
    Ok(&psi * &dag - &dag * &psi - id * fock.inner(f, fp)?)
}

/// `‖[Ψ(f), Ψ(f')†] − (f, f')‖` on sectors with at most `nmax − 1` particles.
pub fn ccr_defect(f: &TestFunction, fp: &TestFunction, fock: &TruncatedFock) -> Result<f64> {
    if fock.nmax == 0 {
        return Err(Error::domain("no sector below the cutoff when nmax = 0"));
    }
    Ok(fock.compressed_norm(&ccr_operator(f, fp, fock)?, fock.nmax - 1))
}

/// Same defect on the whole truncated space, top sector included.
pub fn ccr_defect_unrestricted(f: &TestFunction, fp: &TestFunction, fock: &TruncatedFock) -> Result<f64> {
    Ok(linalg::op_norm(&ccr_operator(f, fp, fock)?))
}

/// `exp(i(Ψ(f) + Ψ(f)†)/√2)` through the eigenbasis of the Hermitian exponent.
pub fn weyl_element(f: &TestFunction, fock: &TruncatedFock) -> Result<CMat> {
    let psi = field_operator(f, fock)?;
    let phi = (&psi + psi.adjoint()) * c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let (vals, vecs) = linalg::hermitian_eigen(&phi);
    let phases = CMat::from_diagonal(&nalgebra::DVector::from_iterator(vals.len(), vals.iter().map(|&x| Complex64::from_polar(1.0, x))));
    Ok(&vecs * phases * vecs.adjoint())
}

/// `‖W(f)W(f') − e^{−(i/2)Im(f,f')} W(f+f')‖` compressed to sectors `≤ sector_cap`.
pub fn weyl_relation_defect(f: &TestFunction, fp: &TestFunction, fock: &TruncatedFock, sector_cap: usize) -> Result<f64> {
    if sector_cap >= fock.nmax {
        return Err(Error::domain(format!("sector cap {sector_cap} must be below nmax {}", fock.nmax)));
    }
    let w1 = weyl_element(f, fock)?;
    let w2 = weyl_element(fp, fock)?;
    let w12 = weyl_element(&f.add(fp), fock)?;
    let phase = Complex64::from_polar(1.0, -0.5 * fock.inner(f, fp)?.im);
    Ok(fock.compressed_norm(&(&w1 * &w2 - w12 * phase), sector_cap))
}

/// `‖[W(f), W(f')]‖` compressed to sectors `≤ sector_cap`.
pub fn weyl_commutator_defect(f: &TestFunction, fp: &TestFunction, fock: &TruncatedFock, sector_cap: usize) -> Result<f64> {
    let w1 = weyl_element(f, fock)?;
    let w2 = weyl_element(fp, fock)?;
    Ok(fock.compressed_norm(&linalg::commutator(&w1, &w2), sector_cap))
}

/// One row of a Weyl-defect convergence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylSweepRow {
    pub nmax: usize,
    pub fock_dim: usize,
    pub defect: f64,
}

pub fn weyl_sweep(
    f: &TestFunction,
    fp: &TestFunction,
    space: &PolyhedronSpace,
    nmaxs: &[usize],
    sector_cap: usize,
) -> Result<Vec<WeylSweepRow>> {
    nmaxs
        .iter()
        .map(|&nmax| {
            let fock = TruncatedFock::new(space, nmax)?;
            Ok(WeylSweepRow { nmax, fock_dim: fock.dim(), defect: weyl_relation_defect(f, fp, &fock, sector_cap)? })
        })
        .collect()
}

/// Pairwise `Im(f_i, f_j) = 0`: the fields generate a commutative algebra.
pub fn is_gft_context(fs: &[TestFunction], space: &PolyhedronSpace) -> Result<bool> {
    if fs.is_empty() {
        return Err(Error::input("empty list of test functions"));
    }
    for (i, f) in fs.iter().enumerate() {
        for g in &fs[i + 1..] {
            let ip = inner_product(f, g, space)?;
            let scale = inner_product(f, f, space)?.re.sqrt() * inner_product(g, g, space)?.re.sqrt();
            if ip.im.abs() > IM_TOL * scale.max(1.0) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `⊕^k H → ⊕^l H`: the first `k` copies kept, new copies zero.
pub fn copy_padding(k: usize, l: usize, d: usize) -> CMat {
    CMat::from_fn(l * d, k * d, |i, j| if i == j { linalg::ONE } else { linalg::ZERO })
}

pub fn pad(f: &TestFunction, l_len: usize) -> TestFunction {
    let mut v = f.0.clone();
    v.resize(l_len, linalg::ZERO);
    TestFunction(v)
}

/// The cone over `s_kl : S(⊕^k H) → S(⊕^l H)` with apex a GFT context,
/// all maps acting on Weyl generators (test functions).
#[derive(Debug, Clone)]
pub struct SecondQuantizationCone {
    pub diagram: Diagram<LinearMap>,
    pub cone: Cone<LinearMap>,
    pub report: ValidationReport,
}

/// `context` lists generating test functions on `k` copies of the polyhedron space.
pub fn second_quantization_cone(
    k: usize,
    l: usize,
    space: &PolyhedronSpace,
    context: &[TestFunction],
) -> Result<SecondQuantizationCone> {
    second_quantization_cone_with(k, l, space, context, &copy_padding(k, l, space.dim()))
}

/// As [`second_quantization_cone`] with an explicit `s_kl` matrix.
pub fn second_quantization_cone_with(
    k: usize,
    l: usize,
    space: &PolyhedronSpace,
    context: &[TestFunction],
    s_kl: &CMat,
) -> Result<SecondQuantizationCone> {
    if k > l {
        return Err(Error::domain(format!("copy counts must satisfy k ≤ l, got k={k}, l={l}")));
    }
    if k == 0 {
        return Err(Error::input("copy count k must be positive"));
    }
    let d = space.dim();
    if context.is_empty() || context.iter().any(|f| f.len() != k * d) {
        return Err(Error::input(format!("context functions must have {} values", k * d)));
    }
    if s_kl.nrows() != l * d || s_kl.ncols() != k * d {
        return Err(Error::input(format!("s_kl must be {}×{}", l * d, k * d)));
    }
    for (i, f) in context.iter().enumerate() {
        for g in &context[i + 1..] {
            if weighted_inner(f, g, space.weight(), k * d)?.im.abs() > IM_TOL {
                return Err(Error::domain("context functions do not pairwise commute"));
            }
        }
    }
    let r = context.len();
    let leg_k = CMat::from_fn(k * d, r, |i, j| context[j].0[i]);
    let leg_l = CMat::from_fn(l * d, r, |i, j| pad(&context[j], l * d).0[i]);
    let (sk, sl) = (format!("S{k}"), format!("S{l}"));
    let (index, sizes, arrows) = if k == l {
        let index = FinCategory::discrete(std::slice::from_ref(&sk));
        (index, [(sk, k * d)].into_iter().collect(), Default::default())
    } else {
        let index = FinCategory::poset(&[sk.as_str(), sl.as_str()], &[vec![true, true], vec![false, true]]);
        let name = format!("{sk}<={sl}");
        (index, [(sk, k * d), (sl, l * d)].into_iter().collect(), [(name, LinearMap(s_kl.clone()))].into_iter().collect())
    };
    let diagram = Diagram::new(index, &sizes, arrows)?;
    let legs = if k == l { vec![LinearMap(leg_k)] } else { vec![LinearMap(leg_k), LinearMap(leg_l)] };
    let cone = Cone::new(r, legs);
    let mut report = crate::fincat::check_cone(&cone, &diagram, 1e-12)?;
    if k == l && linalg::frob_norm(&(s_kl - linalg::identity(k * d))) > 1e-12 {
        report.push("gft.copy_inclusion", format!("S{k}<=S{l}"), "s_kk is not the identity");
    }
    Ok(SecondQuantizationCone { diagram, cone, report })
}

/// Fock-level cross-check of `s_kl`: with `J` the inclusion of the `k`-copy
/// truncated Fock space (new modes empty), `‖J W_k(f) − W_l(pad f) J‖`.
pub fn padding_realization_defect(f: &TestFunction, k: usize, l: usize, space: &PolyhedronSpace, nmax: usize) -> Result<f64> {
    let d = space.dim();
    let small = TruncatedFock::with_modes(k * d, space.weight(), nmax)?;
    let large = TruncatedFock::with_modes(l * d, space.weight(), nmax)?;
    let mut j = CMat::zeros(large.dim(), small.dim());
    for (col, s) in small.states().iter().enumerate() {
        let mut t = s.clone();
        t.resize(l * d, 0);
        j[(large.lookup[&t], col)] = linalg::ONE;
    }
    let wk = weyl_element(f, &small)?;
    let wl = weyl_element(&pad(f, l * d), &large)?;
    Ok(linalg::op_norm(&(&j * wk - wl * &j)))
}

/// Face coarse-graining `C^{m^k} → C^{m^l}`: tuples extended by the identity element.
#[derive(Debug, Clone)]
pub struct FaceCoarseGraining {
    pub m: usize,
    pub k: usize,
    pub l: usize,
    pub map: LinearMap,
    /// `(Ff, Ff')_l / (f, f')_k = m^{k−l}`.
    pub scale: f64,
}

pub fn face_coarse_grain(k: usize, l: usize, m: usize) -> Result<FaceCoarseGraining> {
    if k > l {
        return Err(Error::domain(format!("face counts must satisfy k ≤ l, got k={k}, l={l}")));
    }
    let src = PolyhedronSpace::new(m, k)?;
    let dst = PolyhedronSpace::new(m, l)?;
    let stride = m.pow((l - k) as u32);
    let map = CMat::from_fn(dst.dim(), src.dim(), |i, j| if i == j * stride { linalg::ONE } else { linalg::ZERO });
    Ok(FaceCoarseGraining { m, k, l, map: LinearMap(map), scale: (m as f64).powi(k as i32 - l as i32) })
}

impl FaceCoarseGraining {
    pub fn apply(&self, f: &TestFunction) -> TestFunction {
        TestFunction((&self.map.0 * nalgebra::DVector::from_column_slice(&f.0)).iter().copied().collect())
    }

    /// Largest deviation of `(Ff, Ff')_l` from `scale · (f, f')_k` over the delta basis.
    pub fn inner_product_defect(&self) -> Result<f64> {
        let src = PolyhedronSpace::new(self.m, self.k)?;
        let dst = PolyhedronSpace::new(self.m, self.l)?;
        let mut worst: f64 = 0.0;
        for a in 0..src.dim() {
            for b in 0..src.dim() {
                let (fa, fb) = (TestFunction::delta(src.dim(), a), TestFunction::delta(src.dim(), b));
                let lhs = inner_product(&self.apply(&fa), &self.apply(&fb), &dst)?;
                let rhs = inner_product(&fa, &fb, &src)? * self.scale;
                worst = worst.max((lhs - rhs).norm());
            }
        }
        Ok(worst)
    }
}

/// `k → l → p` equals `k → p`.
pub fn check_face_functoriality(k: usize, l: usize, p: usize, m: usize) -> Result<ValidationReport> {
    let kl = face_coarse_grain(k, l, m)?;
    let lp = face_coarse_grain(l, p, m)?;
    let kp = face_coarse_grain(k, p, m)?;
    let mut report = ValidationReport::new();
    let err = linalg::frob_norm(&(&lp.map.0 * &kl.map.0 - &kp.map.0));
    if err > 0.0 {
        report.push("gft.face_functoriality", format!("{k}→{l}→{p}"), format!("composite differs by {err:.3e}"));
    }
    if ((kl.scale * lp.scale) - kp.scale).abs() > 1e-15 {
        report.push("gft.face_functoriality", format!("{k}→{l}→{p}"), "scales do not compose");
    }
    Ok(report)
}
