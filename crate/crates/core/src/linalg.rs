//! Dense complex matrix helpers on top of `nalgebra`.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn zeros(d: usize) -> CMat {
    CMat::zeros(d, d)
}

/// Builds a matrix from real row-major entries.
pub fn real_matrix(d: usize, entries: &[f64]) -> CMat {
    assert_eq!(entries.len(), d * d, "expected {} entries", d * d);
    CMat::from_fn(d, d, |i, j| c(entries[i * d + j], 0.0))
}

pub fn diag(values: &[f64]) -> CMat {
    let d = values.len();
    CMat::from_fn(d, d, |i, j| if i == j { c(values[i], 0.0) } else { ZERO })
}

pub fn pauli_x() -> CMat {
    real_matrix(2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn pauli_y() -> CMat {
    CMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> CMat {
    real_matrix(2, &[1.0, 0.0, 0.0, -1.0])
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Tensor product of a list of factors, left to right.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a CMat>) -> CMat {
    let mut out = CMat::identity(1, 1);
    for f in factors {
        out = out.kronecker(f);
    }
    out
}

/// Rank-one projection onto the span of `v` (need not be normalized).
pub fn ray_projection(v: &[Complex64]) -> CMat {
    let norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    let d = v.len();
    CMat::from_fn(d, d, |i, j| v[i] * v[j].conj() / norm2)
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn trace(m: &CMat) -> Complex64 {
    m.trace()
}

/// Hilbert–Schmidt inner product `Tr(a† b)`.
pub fn frob_inner(a: &CMat, b: &CMat) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn frob_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value.
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if frob_norm(m) == 0.0 {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn is_square(m: &CMat) -> bool {
    m.nrows() == m.ncols()
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    is_square(m) && op_norm(&(m - m.adjoint())) <= tol
}

pub fn is_projection(m: &CMat, tol: f64) -> bool {
    is_hermitian(m, tol) && op_norm(&(m * m - m)) <= tol
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
///
/// Columns of the returned matrix are the matching orthonormal eigenvectors.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let d = m.nrows();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMat::from_fn(d, d, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Groups ascending eigenvalues whose neighbours lie within `gap`.
///
/// Returns `(representative value, column indices)` per cluster.
pub fn cluster_eigenvalues(values: &[f64], gap: f64) -> Vec<(f64, Vec<usize>)> {
    let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
    for (k, &v) in values.iter().enumerate() {
        match out.last_mut() {
            Some((_, idx)) if (v - values[*idx.last().unwrap()]).abs() <= gap => idx.push(k),
            _ => out.push((v, vec![k])),
        }
    }
    for (rep, idx) in out.iter_mut() {
        *rep = idx.iter().map(|&k| values[k]).sum::<f64>() / idx.len() as f64;
    }
    out
}

/// Projection onto the span of the selected eigenvector columns.
pub fn column_projection(vectors: &CMat, cols: &[usize]) -> CMat {
    let d = vectors.nrows();
    let mut p = zeros(d);
    for &k in cols {
        let v = vectors.column(k);
        p += v * v.adjoint();
    }
    p
}

/// Smallest eigenvalue of the Hermitian part.
pub fn min_eigenvalue(m: &CMat) -> f64 {
    hermitian_eigen(m).0.first().cloned().unwrap_or(0.0)
}

/// Löwner order `a ≤ b`: `b − a` positive semidefinite up to `tol`.
pub fn loewner_leq(a: &CMat, b: &CMat, tol: f64) -> bool {
    min_eigenvalue(&(b - a)) >= -tol
}

/// Checks that `rho` is a density matrix: Hermitian, PSD, unit trace.
pub fn is_density_matrix(rho: &CMat, tol: f64) -> bool {
    is_hermitian(rho, tol) && min_eigenvalue(rho) >= -tol && (trace(rho) - ONE).norm() <= tol
}

/// Seeded samplers for matrices and states, used by tests and the CLI.
pub mod random {
    use super::*;
    use rand::Rng;

    pub fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
        // Box–Muller keeps us off an extra distribution crate.
        let u1: f64 = rng.random_range(f64::EPSILON..1.0);
        let u2: f64 = rng.random_range(0.0..1.0);
        let r = (-2.0 * u1.ln()).sqrt();
        let t = 2.0 * std::f64::consts::PI * u2;
        c(r * t.cos(), r * t.sin()) * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn ginibre<R: Rng>(rng: &mut R, d: usize) -> CMat {
        CMat::from_fn(d, d, |_, _| complex_gaussian(rng))
    }

    pub fn hermitian<R: Rng>(rng: &mut R, d: usize) -> CMat {
        let g = ginibre(rng, d);
        (&g + g.adjoint()) * c(0.5, 0.0)
    }

    /// Haar-ish random unitary from the eigenvectors of a random Hermitian matrix.
    pub fn unitary<R: Rng>(rng: &mut R, d: usize) -> CMat {
        hermitian_eigen(&hermitian(rng, d)).1
    }

    /// Random full-rank density matrix `G G† / Tr(G G†)`.
    pub fn density<R: Rng>(rng: &mut R, d: usize) -> CMat {
        let g = ginibre(rng, d);
        let m = &g * g.adjoint();
        let t = trace(&m);
        m / t
    }

    pub fn pure_state<R: Rng>(rng: &mut R, d: usize) -> CMat {
        let v: Vec<Complex64> = (0..d).map(|_| complex_gaussian(rng)).collect();
        ray_projection(&v)
    }

    /// Random projection of the given rank.
    pub fn projection<R: Rng>(rng: &mut R, d: usize, rank: usize) -> CMat {
        let u = unitary(rng, d);
        column_projection(&u, &(0..rank).collect::<Vec<_>>())
    }
}
