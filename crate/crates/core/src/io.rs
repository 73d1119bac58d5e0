//! JSON file formats shared by the library and the command-line tool.
//!
//! Matrices are row-major lists of rows; each entry is a real number or a
//! `[re, im]` pair.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::ExtendedState;
use crate::linalg::{self, c, CMat};
use crate::locnet::{LocalContext, LocalNet, Region};
use crate::realism::{Observable, ObservableFamily, ObservableGroup, Provider};
use crate::staralg::{context_category, generate_algebra_with, AlgebraOptions, ContextCategory, MatrixStarAlgebra};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixJson(pub Vec<Vec<Entry>>);

impl MatrixJson {
    pub fn to_matrix(&self) -> Result<CMat> {
        let rows = &self.0;
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::input("matrix must be square and non-empty"));
        }
        Ok(CMat::from_fn(n, n, |i, j| match rows[i][j] {
            Entry::Real(x) => c(x, 0.0),
            Entry::Complex([re, im]) => c(re, im),
        }))
    }

    pub fn from_matrix(m: &CMat) -> Self {
        MatrixJson((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| Entry::Complex([m[(i, j)].re, m[(i, j)].im])).collect()).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedMatrix {
    pub name: String,
    pub matrix: MatrixJson,
}

/// Ambient algebra plus named self-adjoint seed observables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraFile {
    pub dim: usize,
    /// Generators of the ambient algebra; the full matrix algebra when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambient: Option<Vec<MatrixJson>>,
    pub seeds: Vec<NamedMatrix>,
}

impl AlgebraFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::input(format!("algebra file: {e}")))
    }

    /// The qubit example with seeds `x`, `y`, `z`.
    pub fn qubit() -> Self {
        let named = |name: &str, m: CMat| NamedMatrix { name: name.into(), matrix: MatrixJson::from_matrix(&m) };
        AlgebraFile {
            dim: 2,
            ambient: None,
            seeds: vec![named("x", linalg::pauli_x()), named("y", linalg::pauli_y()), named("z", linalg::pauli_z())],
        }
    }

    pub fn ambient_algebra(&self, tol: f64) -> Result<MatrixStarAlgebra> {
        match &self.ambient {
            None => Ok(MatrixStarAlgebra::full(self.dim).with_tol(tol)),
            Some(gens) => {
                let gens = gens.iter().map(|g| self.checked(g)).collect::<Result<Vec<_>>>()?;
                generate_algebra_with(&gens, self.dim, &AlgebraOptions { tol, dim_cap: self.dim.max(1) })
            }
        }
    }

    fn checked(&self, m: &MatrixJson) -> Result<CMat> {
        let m = m.to_matrix()?;
        if m.nrows() != self.dim {
            return Err(Error::input(format!("matrix is {0}×{0}, algebra dimension is {1}", m.nrows(), self.dim)));
        }
        Ok(m)
    }

    pub fn seed(&self, name: &str) -> Result<CMat> {
        let s = self
            .seeds
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::input(format!("no seed named `{name}`")))?;
        self.checked(&s.matrix)
    }

    /// Seeds by name, in the given order; all seeds when `names` is empty.
    pub fn select(&self, names: &[String]) -> Result<Vec<(String, CMat)>> {
        if names.is_empty() {
            return self.seeds.iter().map(|s| Ok((s.name.clone(), self.checked(&s.matrix)?))).collect();
        }
        names.iter().map(|n| Ok((n.clone(), self.seed(n)?))).collect()
    }

    /// Context category of the selected seeds.
    pub fn context_category(&self, names: &[String], tol: f64) -> Result<ContextCategory> {
        let ambient = self.ambient_algebra(tol)?;
        let seeds: Vec<CMat> = self.select(names)?.into_iter().map(|(_, m)| m).collect();
        context_category(&ambient, &seeds)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionAlgebra {
    pub region: Region,
    pub generators: Vec<MatrixJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextJson {
    pub label: String,
    pub region: Region,
    pub generators: Vec<MatrixJson>,
}

/// Chain length, optional non-standard local algebras and a context family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetFile {
    pub chain: usize,
    #[serde(default)]
    pub custom: Vec<RegionAlgebra>,
    #[serde(default)]
    pub contexts: Vec<ContextJson>,
}

impl NetFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::input(format!("net file: {e}")))
    }

    pub fn net(&self) -> Result<LocalNet> {
        let mut net = LocalNet::standard(self.chain)?;
        for r in &self.custom {
            let gens = r.generators.iter().map(MatrixJson::to_matrix).collect::<Result<Vec<_>>>()?;
            net.assign(r.region, &gens)?;
        }
        Ok(net)
    }

    pub fn contexts(&self) -> Result<Vec<LocalContext>> {
        self.contexts
            .iter()
            .map(|c| {
                let gens = c.generators.iter().map(MatrixJson::to_matrix).collect::<Result<Vec<_>>>()?;
                LocalContext::generated(&c.label, c.region, &gens, self.chain)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableJson {
    Function { function: Vec<f64> },
    Matrix { matrix: MatrixJson },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupJson {
    #[serde(default)]
    pub a: Vec<ObservableJson>,
    #[serde(default)]
    pub b: Vec<ObservableJson>,
}

/// Observable groups plus the measure and/or state that supply correlations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyFile {
    pub groups: Vec<GroupJson>,
    /// Point weights of a measure on the carrier of the function observables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<MatrixJson>,
}

impl FamilyFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::input(format!("family file: {e}")))
    }

    pub fn family(&self) -> Result<ObservableFamily> {
        let obs = |o: &ObservableJson| -> Result<Observable> {
            Ok(match o {
                ObservableJson::Function { function } => Observable::Function(function.clone()),
                ObservableJson::Matrix { matrix } => Observable::Matrix(matrix.to_matrix()?),
            })
        };
        let groups = self
            .groups
            .iter()
            .map(|g| {
                Ok(ObservableGroup {
                    a: g.a.iter().map(obs).collect::<Result<_>>()?,
                    b: g.b.iter().map(obs).collect::<Result<_>>()?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(ObservableFamily { groups })
    }

    pub fn measure_provider(&self) -> Result<Provider> {
        let w = self.measure.clone().ok_or_else(|| Error::input("family file has no `measure`"))?;
        Ok(Provider::measure(ExtendedState::from_weights("carrier", w)?))
    }

    pub fn quantum_provider(&self) -> Result<Provider> {
        let s = self.state.as_ref().ok_or_else(|| Error::input("family file has no `state`"))?;
        let rho = s.to_matrix()?;
        if !linalg::is_density_matrix(&rho, 1e-9) {
            return Err(Error::input("`state` is not a density matrix"));
        }
        Ok(Provider::quantum(rho))
    }
}

/// A bare matrix file.
pub fn parse_matrix(text: &str) -> Result<CMat> {
    let m: MatrixJson = serde_json::from_str(text).map_err(|e| Error::input(format!("matrix file: {e}")))?;
    m.to_matrix()
}
