//! The limit extension `C(∏_V Σ(V))` of a context family: its carrier of
//! character tuples, the embeddings of each context, extended states as
//! product measures, and point-level valuations.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fincat::{Cone, Diagram, FinCategory, LinearMap, MorphismSpec, SetMap, CategorySpec};
use crate::linalg::{self, CMat};
use crate::staralg::{gelfand_spectrum, Character, ContextCategory, MatrixStarAlgebra};

pub const DEFAULT_CARRIER_CAP: usize = 1_000_000;

/// Mixed-radix index over tuples `(χ_V)_V`; the last context varies fastest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductSpectrum {
    pub labels: Vec<String>,
    pub sizes: Vec<usize>,
}

impl ProductSpectrum {
    pub fn new(labels: Vec<String>, sizes: Vec<usize>) -> Self {
        ProductSpectrum { labels, sizes }
    }

    /// Number of points, `∏_V |Σ(V)|`.
    pub fn len(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contexts(&self) -> usize {
        self.sizes.len()
    }

    /// Tuple of character indices for a point.
    pub fn point(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.sizes.len()];
        for k in (0..self.sizes.len()).rev() {
            out[k] = index % self.sizes[k];
            index /= self.sizes[k];
        }
        out
    }

    pub fn index_of(&self, tuple: &[usize]) -> Option<usize> {
        if tuple.len() != self.sizes.len() {
            return None;
        }
        let mut idx = 0;
        for (k, &x) in tuple.iter().enumerate() {
            if x >= self.sizes[k] {
                return None;
            }
            idx = idx * self.sizes[k] + x;
        }
        Some(idx)
    }

    /// Character index of context `ctx` at a point.
    pub fn component(&self, index: usize, ctx: usize) -> usize {
        let stride: usize = self.sizes[ctx + 1..].iter().product();
        (index / stride) % self.sizes[ctx]
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.len()).map(move |k| self.point(k))
    }
}

/// Function algebra on the product of the contexts' Gel'fand spectra.
#[derive(Debug, Clone)]
pub struct ExtendedAlgebra {
    carrier: ProductSpectrum,
    contexts: Vec<MatrixStarAlgebra>,
    spectra: Vec<Vec<Character>>,
    dim: usize,
}

/// An element of an [`ExtendedAlgebra`]: one value per carrier point.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtElement {
    pub shape: Vec<usize>,
    pub values: Vec<Complex64>,
}

impl ExtElement {
    pub fn constant(carrier: &ProductSpectrum, value: Complex64) -> Self {
        ExtElement { shape: carrier.sizes.clone(), values: vec![value; carrier.len()] }
    }

    fn zip_with(&self, other: &ExtElement, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<ExtElement> {
        if self.shape != other.shape {
            return Err(Error::domain("elements live on different carriers"));
        }
        Ok(ExtElement {
            shape: self.shape.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn mul(&self, other: &ExtElement) -> Result<ExtElement> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn add(&self, other: &ExtElement) -> Result<ExtElement> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, s: Complex64) -> ExtElement {
        ExtElement { shape: self.shape.clone(), values: self.values.iter().map(|&v| v * s).collect() }
    }

    pub fn conj(&self) -> ExtElement {
        ExtElement { shape: self.shape.clone(), values: self.values.iter().map(|v| v.conj()).collect() }
    }

    /// Largest pointwise distance; infinite across carriers.
    pub fn distance(&self, other: &ExtElement) -> f64 {
        if self.shape != other.shape {
            return f64::INFINITY;
        }
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

impl ExtendedAlgebra {
    pub fn carrier(&self) -> &ProductSpectrum {
        &self.carrier
    }

    pub fn contexts(&self) -> &[MatrixStarAlgebra] {
        &self.contexts
    }

    pub fn spectrum(&self, ctx: usize) -> &[Character] {
        &self.spectra[ctx]
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn unit(&self) -> ExtElement {
        ExtElement::constant(&self.carrier, linalg::ONE)
    }

    /// Extension built from a sub-family of this one's contexts, in the given order.
    pub fn restrict(&self, contexts: &[usize]) -> Result<ExtendedAlgebra> {
        for &k in contexts {
            if k >= self.contexts.len() {
                return Err(Error::input(format!("no context {k}")));
            }
        }
        Ok(ExtendedAlgebra {
            carrier: ProductSpectrum::new(
                contexts.iter().map(|&k| self.carrier.labels[k].clone()).collect(),
                contexts.iter().map(|&k| self.carrier.sizes[k]).collect(),
            ),
            contexts: contexts.iter().map(|&k| self.contexts[k].clone()).collect(),
            spectra: contexts.iter().map(|&k| self.spectra[k].clone()).collect(),
            dim: self.dim,
        })
    }

    fn check_context(&self, v: usize) -> Result<()> {
        if v >= self.contexts.len() {
            return Err(Error::input(format!("context index {v} out of range")));
        }
        Ok(())
    }
}

/// Limit extension over every context of `cc`, under the default carrier cap.
pub fn build_limit_extension(cc: &ContextCategory) -> Result<ExtendedAlgebra> {
    let all: Vec<usize> = (0..cc.len()).collect();
    build_limit_extension_for(cc, &all, DEFAULT_CARRIER_CAP)
}

/// Limit extension over the chosen contexts of `cc`.
pub fn build_limit_extension_for(cc: &ContextCategory, contexts: &[usize], cap: usize) -> Result<ExtendedAlgebra> {
    let mut algebras = Vec::new();
    let mut spectra = Vec::new();
    let mut labels = Vec::new();
    let mut size: u128 = 1;
    for &k in contexts {
        let ctx = cc.contexts().get(k).ok_or_else(|| Error::input(format!("no context {k}")))?;
        let spec = gelfand_spectrum(&ctx.algebra)?;
        size = size.saturating_mul(spec.len() as u128);
        if size > cap as u128 {
            return Err(Error::Refused { what: "product spectrum".into(), size, bound: cap as u128 });
        }
        labels.push(ctx.label.clone());
        algebras.push(ctx.algebra.clone());
        spectra.push(spec);
    }
    let sizes = spectra.iter().map(|s| s.len()).collect();
    Ok(ExtendedAlgebra { carrier: ProductSpectrum::new(labels, sizes), contexts: algebras, spectra, dim: cc.dim() })
}

/// The element `(a, V)`: at each point, the V-component character evaluated on `a`.
pub fn embed(a: &CMat, v: usize, ext: &ExtendedAlgebra) -> Result<ExtElement> {
    ext.check_context(v)?;
    if !ext.contexts[v].contains(a) {
        return Err(Error::domain(format!("matrix is not in context `{}`", ext.carrier.labels[v])));
    }
    let per_char: Vec<Complex64> = ext.spectra[v].iter().map(|ch| ch.evaluate(a)).collect();
    let values = (0..ext.carrier.len()).map(|x| per_char[ext.carrier.component(x, v)]).collect();
    Ok(ExtElement { shape: ext.carrier.sizes.clone(), values })
}

/// Probability measure on the carrier induced by a density matrix.
#[derive(Debug, Clone)]
pub struct ExtendedState {
    pub carrier: ProductSpectrum,
    pub weights: Vec<f64>,
    /// `marginals[V][χ] = Tr(ρ P_χ)`.
    pub marginals: Vec<Vec<f64>>,
    /// Density matrix the measure came from, if any.
    pub source: Option<CMat>,
}

/// Product of the Born-rule marginals of `rho` on each context.
pub fn extend_state(rho: &CMat, ext: &ExtendedAlgebra) -> Result<ExtendedState> {
    const STATE_TOL: f64 = 1e-9;
    if rho.nrows() != ext.dim || rho.ncols() != ext.dim {
        return Err(Error::input(format!("state must be {0}×{0}", ext.dim)));
    }
    if !linalg::is_density_matrix(rho, STATE_TOL) {
        return Err(Error::domain("input is not a density matrix"));
    }
    let marginals: Vec<Vec<f64>> = ext
        .spectra
        .iter()
        .map(|spec| spec.iter().map(|ch| (rho * &ch.projection).trace().re.max(0.0)).collect())
        .collect();
    let weights = (0..ext.carrier.len())
        .map(|x| (0..ext.carrier.contexts()).map(|v| marginals[v][ext.carrier.component(x, v)]).product())
        .collect();
    Ok(ExtendedState { carrier: ext.carrier.clone(), weights, marginals, source: Some(rho.clone()) })
}

/// `Σ_x e(x) μ(x)`.
pub fn evaluate_state(mu: &ExtendedState, e: &ExtElement) -> Result<Complex64> {
    if e.shape != mu.carrier.sizes {
        return Err(Error::domain("element and state live on different carriers"));
    }
    Ok(e.values.iter().zip(&mu.weights).map(|(v, &w)| v * w).sum())
}

impl ExtendedState {
    /// A probability measure on a one-factor carrier with `weights.len()` points.
    pub fn from_weights(label: &str, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|&w| w.is_nan() || w < 0.0) {
            return Err(Error::input("measure weights must be non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::input(format!("measure weights sum to {total}, not 1")));
        }
        Ok(ExtendedState {
            carrier: ProductSpectrum::new(vec![label.to_string()], vec![weights.len()]),
            marginals: vec![weights.clone()],
            weights,
            source: None,
        })
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Pushforward onto a sub-family of contexts, in the given order.
    pub fn marginalize(&self, contexts: &[usize]) -> Result<ExtendedState> {
        for &k in contexts {
            if k >= self.carrier.contexts() {
                return Err(Error::input(format!("no context {k}")));
            }
        }
        let sub = ProductSpectrum::new(
            contexts.iter().map(|&k| self.carrier.labels[k].clone()).collect(),
            contexts.iter().map(|&k| self.carrier.sizes[k]).collect(),
        );
        let mut weights = vec![0.0; sub.len()];
        for (x, &w) in self.weights.iter().enumerate() {
            let tuple: Vec<usize> = contexts.iter().map(|&k| self.carrier.component(x, k)).collect();
            weights[sub.index_of(&tuple).unwrap()] += w;
        }
        Ok(ExtendedState {
            carrier: sub,
            weights,
            marginals: contexts.iter().map(|&k| self.marginals[k].clone()).collect(),
            source: self.source.clone(),
        })
    }
}

/// `(embed(a, v1)(x), embed(a, v2)(x))` at one carrier point.
pub fn point_valuation(
    a: &CMat,
    v1: usize,
    v2: usize,
    x: usize,
    ext: &ExtendedAlgebra,
) -> Result<(Complex64, Complex64)> {
    if x >= ext.carrier.len() {
        return Err(Error::input(format!("point {x} outside carrier of size {}", ext.carrier.len())));
    }
    let e1 = embed(a, v1, ext)?;
    let e2 = embed(a, v2, ext)?;
    Ok((e1.values[x], e2.values[x]))
}

/// The spectrum diagram with no arrows; its limit is the full product.
pub fn discrete_spectrum_diagram(ext: &ExtendedAlgebra) -> Diagram<SetMap> {
    Diagram::discrete(&ext.carrier.labels, &ext.carrier.sizes)
}

fn vec_of(m: &CMat) -> Vec<Complex64> {
    m.iter().copied().collect()
}

/// Contextual-extension triangle for one context `V`, with
/// `A' = A ⊕ C(∏Σ)`, `φ` the projection onto `A`, `i_V` the inclusion and
/// `ι_V(a) = (a, embed(a, V))`.
///
/// Objects live in coordinate spaces: `V` in its orthonormal basis, `A` as
/// column-major `d²` vectors, `A'` as `d² + |carrier|`. The cone has apex `V`
/// over the one-arrow diagram `φ : A' → A`.
pub fn extension_triangle(ext: &ExtendedAlgebra, v: usize) -> Result<(Diagram<LinearMap>, Cone<LinearMap>)> {
    ext.check_context(v)?;
    let d2 = ext.dim * ext.dim;
    let n = ext.carrier.len();
    let basis = ext.contexts[v].basis();
    let k = basis.len();
    let mut incl = CMat::zeros(d2, k);
    let mut iota = CMat::zeros(d2 + n, k);
    for (j, b) in basis.iter().enumerate() {
        let vb = vec_of(b);
        let eb = embed(b, v, ext)?;
        for r in 0..d2 {
            incl[(r, j)] = vb[r];
            iota[(r, j)] = vb[r];
        }
        for r in 0..n {
            iota[(d2 + r, j)] = eb.values[r];
        }
    }
    let mut phi = CMat::zeros(d2, d2 + n);
    for r in 0..d2 {
        phi[(r, r)] = linalg::ONE;
    }
    let spec = CategorySpec {
        objects: vec!["A".into(), "A'".into()],
        morphisms: vec![MorphismSpec { name: "phi".into(), src: "A'".into(), dst: "A".into() }],
        auto_identity_composites: true,
        ..Default::default()
    };
    let index = FinCategory::from_spec(&spec)?;
    let sizes = [("A".to_string(), d2), ("A'".to_string(), d2 + n)].into_iter().collect();
    let arrows = [("phi".to_string(), LinearMap(phi))].into_iter().collect();
    let diagram = Diagram::new(index, &sizes, arrows)?;
    let cone = Cone::new(k, vec![LinearMap(incl), LinearMap(iota)]);
    Ok((diagram, cone))
}

/// Serializable view of an extension: carrier tuples, a measure, element tables.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtensionExport {
    pub contexts: Vec<String>,
    pub spectrum_sizes: Vec<usize>,
    pub carrier_size: usize,
    /// Character index per context, one row per point.
    pub points: Vec<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub marginals: Option<Vec<Vec<f64>>>,
}

impl ExtensionExport {
    pub fn new(ext: &ExtendedAlgebra, mu: Option<&ExtendedState>) -> Self {
        ExtensionExport {
            contexts: ext.carrier.labels.clone(),
            spectrum_sizes: ext.carrier.sizes.clone(),
            carrier_size: ext.carrier.len(),
            points: ext.carrier.points().collect(),
            weights: mu.map(|m| m.weights.clone()),
            marginals: mu.map(|m| m.marginals.clone()),
        }
    }
}

/// Identity-weighted Born rule used as an independent reference in tests.
pub fn born_probability(rho: &CMat, projection: &CMat) -> f64 {
    (rho * projection).trace().re
}

/// `Tr(ρ a)`.
pub fn expectation(rho: &CMat, a: &CMat) -> Complex64 {
    (rho * a).trace()
}
