//! Correlations of ±1 observables and the Roy–Singh realism inequality
//! `Σ_p ⟨(Σ_i ±A_i^{(p)} + Σ_j ±B_j^{(p)})²⟩ ≥ q` for odd group sizes.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::ExtendedState;
use crate::linalg::{self, CMat};

pub const DEFAULT_SIGN_CAP: usize = 16;
const OBS_TOL: f64 = 1e-9;

/// A ±1-valued observable: a function on a carrier, or a matrix squaring to the identity.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    Function(Vec<f64>),
    Matrix(CMat),
}

impl Observable {
    pub fn validate(&self) -> Result<()> {
        match self {
            Observable::Function(v) => {
                if v.iter().any(|&x| x != 1.0 && x != -1.0) {
                    return Err(Error::input("function observable takes a value other than ±1"));
                }
            }
            Observable::Matrix(m) => {
                if !linalg::is_hermitian(m, OBS_TOL) {
                    return Err(Error::input("matrix observable is not self-adjoint"));
                }
                if linalg::op_norm(&(m * m - linalg::identity(m.nrows()))) > OBS_TOL {
                    return Err(Error::input("matrix observable does not square to the identity"));
                }
            }
        }
        Ok(())
    }

    fn kind(&self) -> &'static str {
        match self {
            Observable::Function(_) => "function",
            Observable::Matrix(_) => "matrix",
        }
    }
}

/// Group `p`: `m_p` A-observables and `n_p` B-observables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObservableGroup {
    pub a: Vec<Observable>,
    pub b: Vec<Observable>,
}

impl ObservableGroup {
    pub fn len(&self) -> usize {
        self.a.len() + self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn observables(&self) -> impl Iterator<Item = &Observable> {
        self.a.iter().chain(&self.b)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObservableFamily {
    pub groups: Vec<ObservableGroup>,
}

impl ObservableFamily {
    pub fn q(&self) -> usize {
        self.groups.len()
    }

    pub fn total(&self) -> usize {
        self.groups.iter().map(ObservableGroup::len).sum()
    }

    /// Observables valid and every group of odd size.
    pub fn validate(&self) -> Result<()> {
        for (p, g) in self.groups.iter().enumerate() {
            if g.len() % 2 == 0 {
                return Err(Error::domain(format!("group {p} has m_p + n_p = {}, which is even", g.len())));
            }
            for o in g.observables() {
                o.validate()?;
            }
        }
        Ok(())
    }
}

/// Source of correlations: an extended-state measure, a density matrix, or both.
#[derive(Debug, Clone, Default)]
pub struct Provider {
    pub measure: Option<ExtendedState>,
    pub state: Option<CMat>,
}

impl Provider {
    pub fn measure(mu: ExtendedState) -> Self {
        Provider { measure: Some(mu), state: None }
    }

    pub fn quantum(rho: CMat) -> Self {
        Provider { measure: None, state: Some(rho) }
    }

    /// `⟨x y⟩`; both observables must be of the same kind.
    pub fn correlation(&self, x: &Observable, y: &Observable) -> Result<f64> {
        match (x, y) {
            (Observable::Function(a), Observable::Function(b)) => {
                let mu = self.measure.as_ref().ok_or_else(|| Error::input("function observables need a measure"))?;
                measure_correlation(mu, a, b)
            }
            (Observable::Matrix(a), Observable::Matrix(b)) => {
                let rho = self.state.as_ref().ok_or_else(|| Error::input("matrix observables need a state"))?;
                if a.nrows() != rho.nrows() || b.nrows() != rho.nrows() {
                    return Err(Error::domain("observable and state dimensions differ"));
                }
                Ok((rho * a * b).trace().re)
            }
            _ => Err(Error::domain(format!(
                "correlation between a {} and a {} observable is undefined",
                x.kind(),
                y.kind()
            ))),
        }
    }
}

/// `Σ_x a(x) b(x) μ(x)`.
pub fn measure_correlation(mu: &ExtendedState, a: &[f64], b: &[f64]) -> Result<f64> {
    let n = mu.weights.len();
    if a.len() != n || b.len() != n {
        return Err(Error::domain(format!("functions must live on the measure's carrier of size {n}")));
    }
    Ok(a.iter().zip(b).zip(&mu.weights).map(|((x, y), w)| x * y * w).sum())
}

/// Per group, the matrix `G_ij = ⟨O_i O_j⟩`, so that the group term is `sᵀ G s`.
pub fn correlation_matrices(fam: &ObservableFamily, provider: &Provider) -> Result<Vec<DMatrix<f64>>> {
    fam.validate()?;
    fam.groups
        .iter()
        .map(|g| {
            let obs: Vec<&Observable> = g.observables().collect();
            let k = obs.len();
            let mut m = DMatrix::zeros(k, k);
            for i in 0..k {
                for j in i..k {
                    let v = provider.correlation(obs[i], obs[j])?;
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            Ok(m)
        })
        .collect()
}

fn check_signs(fam: &ObservableFamily, signs: &[i8]) -> Result<()> {
    if signs.len() != fam.total() {
        return Err(Error::input(format!("{} signs for {} observables", signs.len(), fam.total())));
    }
    if signs.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::input("signs must be ±1"));
    }
    Ok(())
}

/// Left-hand side of the inequality for one sign vector (A's then B's, group by group).
///
/// Function groups are expanded into pairwise correlations; matrix groups are
/// evaluated as `Tr(ρ S²)` of the signed sum `S`.
pub fn roy_singh_lhs(fam: &ObservableFamily, signs: &[i8], provider: &Provider) -> Result<f64> {
    fam.validate()?;
    check_signs(fam, signs)?;
    let mut total = 0.0;
    let mut offset = 0;
    for g in &fam.groups {
        let obs: Vec<&Observable> = g.observables().collect();
        let s = &signs[offset..offset + obs.len()];
        offset += obs.len();
        let all_matrices = obs.iter().all(|o| matches!(o, Observable::Matrix(_)));
        if all_matrices {
            let rho = provider.state.as_ref().ok_or_else(|| Error::input("matrix observables need a state"))?;
            let mut sum = linalg::zeros(rho.nrows());
            for (o, &sign) in obs.iter().zip(s) {
                if let Observable::Matrix(m) = o {
                    if m.nrows() != rho.nrows() {
                        return Err(Error::domain("observable and state dimensions differ"));
                    }
                    sum += m * linalg::c(sign as f64, 0.0);
                }
            }
            total += (rho * &sum * &sum).trace().re;
        } else {
            for i in 0..obs.len() {
                for j in 0..obs.len() {
                    total += (s[i] * s[j]) as f64 * provider.correlation(obs[i], obs[j])?;
                }
            }
        }
    }
    Ok(total)
}

/// Exhaustive minimum over sign vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignSearch {
    pub signs: Vec<i8>,
    pub lhs: f64,
    pub q: usize,
    /// `lhs − q`.
    pub margin: f64,
    /// The minimum falls below the classical bound `q`.
    pub below_bound: bool,
}

fn signs_of(mask: u64, n: usize) -> Vec<i8> {
    (0..n).map(|k| if mask >> (n - 1 - k) & 1 == 1 { 1 } else { -1 }).collect()
}

/// Minimum of [`roy_singh_lhs`] over all `2^N` sign vectors; ties within
/// `1e-12` go to the lexicographically smallest vector (`−1 < +1`).
pub fn search_signs(fam: &ObservableFamily, provider: &Provider, cap: usize) -> Result<SignSearch> {
    let n = fam.total();
    if n > cap {
        return Err(Error::Refused { what: "sign search over observables".into(), size: n as u128, bound: cap as u128 });
    }
    let grams = correlation_matrices(fam, provider)?;
    let sizes: Vec<usize> = fam.groups.iter().map(ObservableGroup::len).collect();
    let value = |signs: &[i8]| {
        let mut total = 0.0;
        let mut off = 0;
        for (g, &k) in grams.iter().zip(&sizes) {
            for i in 0..k {
                for j in 0..k {
                    total += (signs[off + i] * signs[off + j]) as f64 * g[(i, j)];
                }
            }
            off += k;
        }
        total
    };
    let values: Vec<f64> = (0..1u64 << n).into_par_iter().map(|mask| value(&signs_of(mask, n))).collect();
    let mut best = 0;
    for (mask, &v) in values.iter().enumerate() {
        if v < values[best] - 1e-12 {
            best = mask;
        }
    }
    let lhs = values[best];
    let q = fam.q();
    Ok(SignSearch {
        signs: signs_of(best as u64, n),
        lhs,
        q,
        margin: lhs - q as f64,
        below_bound: lhs < q as f64 - 1e-12,
    })
}

/// Three qubit observables at 120° in the x–z plane; their sum vanishes.
pub fn trine_family() -> ObservableFamily {
    let obs = (0..3)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
            Observable::Matrix(linalg::pauli_z() * linalg::c(t.cos(), 0.0) + linalg::pauli_x() * linalg::c(t.sin(), 0.0))
        })
        .collect();
    ObservableFamily { groups: vec![ObservableGroup { a: obs, b: vec![] }] }
}

/// `{X, Y, Z}` in one group.
pub fn pauli_family() -> ObservableFamily {
    ObservableFamily {
        groups: vec![ObservableGroup {
            a: vec![Observable::Matrix(linalg::pauli_x()), Observable::Matrix(linalg::pauli_y())],
            b: vec![Observable::Matrix(linalg::pauli_z())],
        }],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extension::{build_limit_extension_for, embed, extend_state, DEFAULT_CARRIER_CAP};
    use crate::linalg::random;
    use crate::staralg::{generate_algebra, Context, ContextCategory};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform(n: usize) -> ExtendedState {
        ExtendedState::from_weights("x", vec![1.0 / n as f64; n]).unwrap()
    }

    fn random_measure(rng: &mut ChaCha8Rng, n: usize) -> ExtendedState {
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let total: f64 = raw.iter().sum();
        ExtendedState::from_weights("x", raw.iter().map(|w| w / total).collect()).unwrap()
    }

    fn pm(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect()
    }

    #[test]
    fn correlation_examples() {
        let mu = uniform(4);
        let one = vec![1.0; 4];
        assert_eq!(measure_correlation(&mu, &one, &one).unwrap(), 1.0);
        let a = vec![1.0, -1.0, 1.0, 1.0];
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        assert_eq!(measure_correlation(&mu, &a, &neg).unwrap(), -1.0);
        let b = vec![-1.0, -1.0, 1.0, -1.0];
        // Four-term sum by hand: (−1 + 1 + 1 − 1)/4.
        assert_eq!(measure_correlation(&mu, &a, &b).unwrap(), 0.0);
        assert!(matches!(measure_correlation(&mu, &a, &[1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn single_observable_equality() {
        let fam = ObservableFamily { groups: vec![ObservableGroup { a: vec![Observable::Function(vec![1.0, -1.0])], b: vec![] }] };
        let p = Provider::measure(uniform(2));
        assert!((roy_singh_lhs(&fam, &[1], &p).unwrap() - 1.0).abs() < 1e-15);
        let s = search_signs(&fam, &p, DEFAULT_SIGN_CAP).unwrap();
        assert_eq!((s.lhs, s.signs.as_slice()), (1.0, &[-1i8][..]));
    }

    #[test]
    fn pauli_triple_gives_three() {
        let fam = pauli_family();
        let rho = linalg::ray_projection(&[linalg::ONE, linalg::ZERO]);
        assert_eq!(roy_singh_lhs(&fam, &[1, 1, 1], &Provider::quantum(rho.clone())).unwrap(), 3.0);
        let s = search_signs(&fam, &Provider::quantum(rho), DEFAULT_SIGN_CAP).unwrap();
        assert_eq!(s.lhs, 3.0);
        assert!(!s.below_bound);
    }

    #[test]
    fn trine_family_violates_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rho = random::density(&mut rng, 2);
        let s = search_signs(&trine_family(), &Provider::quantum(rho), DEFAULT_SIGN_CAP).unwrap();
        assert!(s.below_bound && s.lhs.abs() < 1e-12);
        assert_eq!(s.signs, vec![-1, -1, -1]);
    }

    #[test]
    fn even_group_rejected() {
        let fam = ObservableFamily {
            groups: vec![ObservableGroup { a: vec![Observable::Function(vec![1.0])], b: vec![Observable::Function(vec![1.0])] }],
        };
        assert!(matches!(roy_singh_lhs(&fam, &[1, 1], &Provider::measure(uniform(1))), Err(Error::Domain(_))));
    }

    #[test]
    fn mixed_kinds_refused() {
        let fam = ObservableFamily {
            groups: vec![ObservableGroup {
                a: vec![Observable::Function(vec![1.0, -1.0]), Observable::Function(vec![1.0, 1.0])],
                b: vec![Observable::Matrix(linalg::pauli_z())],
            }],
        };
        let p = Provider { measure: Some(uniform(2)), state: Some(linalg::identity(2) * linalg::c(0.5, 0.0)) };
        let err = roy_singh_lhs(&fam, &[1, 1, 1], &p).unwrap_err();
        assert!(err.to_string().contains("undefined"));
    }

    #[test]
    fn invalid_observables_rejected() {
        assert!(Observable::Function(vec![0.5]).validate().is_err());
        assert!(Observable::Matrix(linalg::diag(&[1.0, 2.0])).validate().is_err());
        let fam = pauli_family();
        assert!(roy_singh_lhs(&fam, &[1, 1], &Provider::quantum(linalg::identity(2))).is_err());
    }

    #[test]
    fn sign_cap_refuses() {
        let obs = vec![Observable::Function(vec![1.0]); 17];
        let fam = ObservableFamily { groups: vec![ObservableGroup { a: obs, b: vec![] }] };
        assert!(matches!(search_signs(&fam, &Provider::measure(uniform(1)), 16), Err(Error::Refused { size: 17, .. })));
    }

    #[test]
    fn commuting_quantum_matches_joint_measure() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let rho = random::density(&mut rng, 4);
            let u = random::unitary(&mut rng, 4);
            let mats: Vec<CMat> = (0..3)
                .map(|_| {
                    let d: Vec<f64> = (0..4).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
                    &u * linalg::diag(&d) * u.adjoint()
                })
                .collect();
            let v = generate_algebra(&mats, 4).unwrap();
            let cc = ContextCategory::from_contexts(4, vec![Context { label: "V".into(), algebra: v, seeds: vec![] }]).unwrap();
            let k = cc.index_of("V").unwrap();
            let ext = build_limit_extension_for(&cc, &[k], DEFAULT_CARRIER_CAP).unwrap();
            let mu = extend_state(&rho, &ext).unwrap();
            let funcs: Vec<Observable> =
                mats.iter().map(|m| Observable::Function(embed(m, 0, &ext).unwrap().values.iter().map(|z| z.re.round()).collect())).collect();
            let q = ObservableFamily { groups: vec![ObservableGroup { a: mats.into_iter().map(Observable::Matrix).collect(), b: vec![] }] };
            let c = ObservableFamily { groups: vec![ObservableGroup { a: funcs, b: vec![] }] };
            for mask in 0..8u64 {
                let s = signs_of(mask, 3);
                let lq = roy_singh_lhs(&q, &s, &Provider::quantum(rho.clone())).unwrap();
                let lc = roy_singh_lhs(&c, &s, &Provider::measure(mu.clone())).unwrap();
                assert!((lq - lc).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gram_and_direct_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mu = random_measure(&mut rng, 6);
        let fam = ObservableFamily {
            groups: vec![
                ObservableGroup { a: (0..2).map(|_| Observable::Function(pm(&mut rng, 6))).collect(), b: vec![Observable::Function(pm(&mut rng, 6))] },
                ObservableGroup { a: vec![Observable::Function(pm(&mut rng, 6))], b: vec![] },
            ],
        };
        let p = Provider::measure(mu);
        let s = search_signs(&fam, &p, 16).unwrap();
        assert!((roy_singh_lhs(&fam, &s.signs, &p).unwrap() - s.lhs).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn classical_bound_holds(seed in any::<u64>(), q in 1usize..=3, n in 1usize..=8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mu = random_measure(&mut rng, n);
            let groups = (0..q)
                .map(|_| {
                    let size = 2 * rng.random_range(0..=1usize) + 1;
                    let m = rng.random_range(0..=size);
                    let mut obs: Vec<Observable> = (0..size).map(|_| Observable::Function(pm(&mut rng, n))).collect();
                    let b = obs.split_off(m);
                    ObservableGroup { a: obs, b }
                })
                .collect();
            let fam = ObservableFamily { groups };
            let s = search_signs(&fam, &Provider::measure(mu), 16).unwrap();
            prop_assert!(s.margin >= -1e-12);
        }

        #[test]
        fn correlation_symmetric_and_bilinear(seed in any::<u64>(), n in 1usize..=8, t in -2.0f64..2.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mu = random_measure(&mut rng, n);
            let (a, b, c) = (pm(&mut rng, n), pm(&mut rng, n), pm(&mut rng, n));
            let ab = measure_correlation(&mu, &a, &b).unwrap();
            prop_assert!((ab - measure_correlation(&mu, &b, &a).unwrap()).abs() < 1e-15);
            let mix: Vec<f64> = a.iter().zip(&c).map(|(x, y)| x + t * y).collect();
            let lhs = measure_correlation(&mu, &mix, &b).unwrap();
            let rhs = ab + t * measure_correlation(&mu, &c, &b).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
