//! Explicit finite categories, functors, diagrams, cones and limits.
//!
//! Categories are given by composition tables over labelled morphisms. Diagrams
//! land in a concrete category whose arrows implement [`Arrow`]: either total
//! maps between finite sets ([`SetMap`]) or linear maps between coordinate
//! spaces ([`LinearMap`]). Limits are computed for set-valued diagrams only,
//! where the universal property can be checked exhaustively under a size bound.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::ValidationReport;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Morphism {
    pub name: String,
    pub src: usize,
    pub dst: usize,
}

/// A finite category with an explicit composition table.
///
/// `compose[(g, f)]` is `g ∘ f` (apply `f` first). The table is not validated
/// on construction; run [`check_category`] for that.
#[derive(Debug, Clone, PartialEq)]
pub struct FinCategory {
    objects: Vec<String>,
    morphisms: Vec<Morphism>,
    identities: Vec<usize>,
    compose: HashMap<(usize, usize), usize>,
}

/// Serializable form of a [`FinCategory`], keyed by labels.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CategorySpec {
    pub objects: Vec<String>,
    #[serde(default)]
    pub morphisms: Vec<MorphismSpec>,
    /// Object label to identity morphism label. Missing identities are created
    /// as `id_<object>`.
    #[serde(default)]
    pub identities: BTreeMap<String, String>,
    /// Triples `[g, f, g∘f]`.
    #[serde(default)]
    pub compose: Vec<[String; 3]>,
    /// Fill in `id∘f = f` and `f∘id = f` wherever the table is silent.
    #[serde(default = "default_true")]
    pub auto_identity_composites: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphismSpec {
    pub name: String,
    pub src: String,
    pub dst: String,
}

impl FinCategory {
    pub fn from_spec(spec: &CategorySpec) -> Result<Self> {
        let mut obj_index = HashMap::new();
        for (k, o) in spec.objects.iter().enumerate() {
            if obj_index.insert(o.clone(), k).is_some() {
                return Err(Error::structural(format!("duplicate object `{o}`")));
            }
        }
        let lookup_obj = |name: &str| {
            obj_index
                .get(name)
                .copied()
                .ok_or_else(|| Error::structural(format!("unknown object `{name}`")))
        };
        let mut morphisms = Vec::new();
        let mut mor_index: HashMap<String, usize> = HashMap::new();
        for m in &spec.morphisms {
            let src = lookup_obj(&m.src)?;
            let dst = lookup_obj(&m.dst)?;
            if mor_index.insert(m.name.clone(), morphisms.len()).is_some() {
                return Err(Error::structural(format!("duplicate morphism `{}`", m.name)));
            }
            morphisms.push(Morphism { name: m.name.clone(), src, dst });
        }
        let mut identities = Vec::with_capacity(spec.objects.len());
        for (k, o) in spec.objects.iter().enumerate() {
            let name = spec.identities.get(o).cloned().unwrap_or_else(|| format!("id_{o}"));
            let idx = match mor_index.get(&name) {
                Some(&idx) => idx,
                None => {
                    mor_index.insert(name.clone(), morphisms.len());
                    morphisms.push(Morphism { name, src: k, dst: k });
                    morphisms.len() - 1
                }
            };
            identities.push(idx);
        }
        let lookup_mor = |name: &str| {
            mor_index
                .get(name)
                .copied()
                .ok_or_else(|| Error::structural(format!("unknown morphism `{name}`")))
        };
        let mut compose = HashMap::new();
        for [g, f, h] in &spec.compose {
            let key = (lookup_mor(g)?, lookup_mor(f)?);
            let val = lookup_mor(h)?;
            if let Some(prev) = compose.insert(key, val) {
                if prev != val {
                    return Err(Error::structural(format!(
                        "composite {g}∘{f} given twice with different values"
                    )));
                }
            }
        }
        let mut cat = FinCategory { objects: spec.objects.clone(), morphisms, identities, compose };
        if spec.auto_identity_composites {
            cat.fill_identity_composites();
        }
        Ok(cat)
    }

    pub fn to_spec(&self) -> CategorySpec {
        let mut compose: Vec<[String; 3]> = self
            .compose
            .iter()
            .map(|(&(g, f), &h)| {
                [
                    self.morphisms[g].name.clone(),
                    self.morphisms[f].name.clone(),
                    self.morphisms[h].name.clone(),
                ]
            })
            .collect();
        compose.sort();
        CategorySpec {
            objects: self.objects.clone(),
            morphisms: self
                .morphisms
                .iter()
                .map(|m| MorphismSpec {
                    name: m.name.clone(),
                    src: self.objects[m.src].clone(),
                    dst: self.objects[m.dst].clone(),
                })
                .collect(),
            identities: self
                .objects
                .iter()
                .zip(&self.identities)
                .map(|(o, &i)| (o.clone(), self.morphisms[i].name.clone()))
                .collect(),
            compose,
            auto_identity_composites: false,
        }
    }

    fn fill_identity_composites(&mut self) {
        for f in 0..self.morphisms.len() {
            let (src, dst) = (self.morphisms[f].src, self.morphisms[f].dst);
            self.compose.entry((self.identities[dst], f)).or_insert(f);
            self.compose.entry((f, self.identities[src])).or_insert(f);
        }
    }

    /// Category with the given objects and identity morphisms only.
    pub fn discrete<S: AsRef<str>>(objects: &[S]) -> Self {
        let spec = CategorySpec {
            objects: objects.iter().map(|s| s.as_ref().to_string()).collect(),
            auto_identity_composites: true,
            ..Default::default()
        };
        Self::from_spec(&spec).expect("discrete category labels are unique")
    }

    /// One object, one morphism.
    pub fn terminal() -> Self {
        Self::discrete(&["*"])
    }

    /// The preorder `leq` as a thin category: one arrow `a → b` iff `leq[a][b]`.
    ///
    /// `leq` must be reflexive and transitive for the result to be a category;
    /// [`check_category`] reports a structural error otherwise.
    pub fn poset<S: AsRef<str>>(objects: &[S], leq: &[Vec<bool>]) -> Self {
        let n = objects.len();
        let names: Vec<String> = objects.iter().map(|s| s.as_ref().to_string()).collect();
        let mut morphisms = Vec::new();
        let mut arrow = vec![vec![None; n]; n];
        let mut identities = vec![0; n];
        for a in 0..n {
            for b in 0..n {
                if leq[a][b] {
                    let name = if a == b {
                        format!("id_{}", names[a])
                    } else {
                        format!("{}<={}", names[a], names[b])
                    };
                    arrow[a][b] = Some(morphisms.len());
                    if a == b {
                        identities[a] = morphisms.len();
                    }
                    morphisms.push(Morphism { name, src: a, dst: b });
                }
            }
        }
        let mut compose = HashMap::new();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if let (Some(f), Some(g), Some(h)) = (arrow[a][b], arrow[b][c], arrow[a][c]) {
                        compose.insert((g, f), h);
                    }
                }
            }
        }
        FinCategory { objects: names, morphisms, identities, compose }
    }

    /// Same objects, every arrow reversed; `(g∘f)^op = f^op ∘ g^op`.
    pub fn opposite(&self) -> Self {
        let morphisms = self
            .morphisms
            .iter()
            .map(|m| Morphism { name: m.name.clone(), src: m.dst, dst: m.src })
            .collect();
        let compose = self.compose.iter().map(|(&(g, f), &h)| ((f, g), h)).collect();
        FinCategory {
            objects: self.objects.clone(),
            morphisms,
            identities: self.identities.clone(),
            compose,
        }
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn morphisms(&self) -> &[Morphism] {
        &self.morphisms
    }

    pub fn object_index(&self, name: &str) -> Option<usize> {
        self.objects.iter().position(|o| o == name)
    }

    pub fn morphism_index(&self, name: &str) -> Option<usize> {
        self.morphisms.iter().position(|m| m.name == name)
    }

    pub fn identity(&self, object: usize) -> usize {
        self.identities[object]
    }

    pub fn is_identity(&self, morphism: usize) -> bool {
        self.identities[self.morphisms[morphism].src] == morphism
    }

    /// `g ∘ f`, if present in the table.
    pub fn compose(&self, g: usize, f: usize) -> Option<usize> {
        self.compose.get(&(g, f)).copied()
    }

    /// Morphisms `src → dst`.
    pub fn homs(&self, src: usize, dst: usize) -> Vec<usize> {
        (0..self.morphisms.len())
            .filter(|&k| self.morphisms[k].src == src && self.morphisms[k].dst == dst)
            .collect()
    }

    fn composable_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.morphisms.len();
        (0..n).flat_map(move |f| {
            (0..n)
                .filter(move |&g| self.morphisms[g].src == self.morphisms[f].dst)
                .map(move |g| (g, f))
        })
    }

    /// Overrides one composite. Meant for building corrupted fixtures.
    pub fn set_composite(&mut self, g: &str, f: &str, h: &str) -> Result<()> {
        let idx = |n: &str| {
            self.morphism_index(n).ok_or_else(|| Error::structural(format!("unknown morphism `{n}`")))
        };
        let key = (idx(g)?, idx(f)?);
        let val = idx(h)?;
        self.compose.insert(key, val);
        Ok(())
    }
}

/// Identity and associativity laws.
///
/// Missing composites and composites landing in the wrong hom-set are
/// structural errors; law failures are reported as violations.
pub fn check_category(c: &FinCategory) -> Result<ValidationReport> {
    for (o, &id) in c.identities.iter().enumerate() {
        let m = &c.morphisms[id];
        if m.src != o || m.dst != o {
            return Err(Error::structural(format!(
                "identity `{}` of `{}` is not an endomorphism of it",
                m.name, c.objects[o]
            )));
        }
    }
    for (g, f) in c.composable_pairs() {
        let (mf, mg) = (&c.morphisms[f], &c.morphisms[g]);
        let h = c.compose(g, f).ok_or_else(|| {
            Error::structural(format!("missing composite {}∘{}", mg.name, mf.name))
        })?;
        let mh = &c.morphisms[h];
        if mh.src != mf.src || mh.dst != mg.dst {
            return Err(Error::structural(format!(
                "composite {}∘{} = {} lies in hom({}, {}), expected hom({}, {})",
                mg.name,
                mf.name,
                mh.name,
                c.objects[mh.src],
                c.objects[mh.dst],
                c.objects[mf.src],
                c.objects[mg.dst]
            )));
        }
    }
    let mut report = ValidationReport::new();
    for f in 0..c.morphisms.len() {
        let m = &c.morphisms[f];
        let left = c.compose(c.identities[m.dst], f).unwrap();
        if left != f {
            report.push(
                "fincat.identity_law",
                format!("id_{}∘{}", c.objects[m.dst], m.name),
                format!("gives {} instead of {}", c.morphisms[left].name, m.name),
            );
        }
        let right = c.compose(f, c.identities[m.src]).unwrap();
        if right != f {
            report.push(
                "fincat.identity_law",
                format!("{}∘id_{}", m.name, c.objects[m.src]),
                format!("gives {} instead of {}", c.morphisms[right].name, m.name),
            );
        }
    }
    let n = c.morphisms.len();
    for f in 0..n {
        for g in (0..n).filter(|&g| c.morphisms[g].src == c.morphisms[f].dst) {
            let gf = c.compose(g, f).unwrap();
            for h in (0..n).filter(|&h| c.morphisms[h].src == c.morphisms[g].dst) {
                let hg = c.compose(h, g).unwrap();
                let lhs = c.compose(h, gf).unwrap();
                let rhs = c.compose(hg, f).unwrap();
                if lhs != rhs {
                    report.push(
                        "fincat.associativity",
                        format!(
                            "({h})∘({g})∘({f})",
                            h = c.morphisms[h].name,
                            g = c.morphisms[g].name,
                            f = c.morphisms[f].name
                        ),
                        format!(
                            "h∘(g∘f) = {} but (h∘g)∘f = {}",
                            c.morphisms[lhs].name, c.morphisms[rhs].name
                        ),
                    );
                }
            }
        }
    }
    Ok(report)
}

/// A functor between finite categories, stored as index maps.
#[derive(Debug, Clone)]
pub struct Functor {
    pub source: FinCategory,
    pub target: FinCategory,
    object_map: Vec<Option<usize>>,
    morphism_map: Vec<Option<usize>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FunctorSpec {
    pub source: CategorySpec,
    pub target: CategorySpec,
    pub objects: BTreeMap<String, String>,
    /// Identity morphisms may be omitted; they map to the target identity.
    #[serde(default)]
    pub morphisms: BTreeMap<String, String>,
}

impl Functor {
    /// Builds a functor from label maps. Unknown target labels are structural
    /// errors; unmapped source labels are allowed here and reported by
    /// [`check_functor`].
    pub fn new(
        source: FinCategory,
        target: FinCategory,
        objects: &BTreeMap<String, String>,
        morphisms: &BTreeMap<String, String>,
    ) -> Result<Self> {
        let mut object_map = vec![None; source.objects.len()];
        for (s, t) in objects {
            let si = source
                .object_index(s)
                .ok_or_else(|| Error::structural(format!("unknown source object `{s}`")))?;
            let ti = target
                .object_index(t)
                .ok_or_else(|| Error::structural(format!("unknown target object `{t}`")))?;
            object_map[si] = Some(ti);
        }
        let mut morphism_map = vec![None; source.morphisms.len()];
        for (s, t) in morphisms {
            let si = source
                .morphism_index(s)
                .ok_or_else(|| Error::structural(format!("unknown source morphism `{s}`")))?;
            let ti = target
                .morphism_index(t)
                .ok_or_else(|| Error::structural(format!("unknown target morphism `{t}`")))?;
            morphism_map[si] = Some(ti);
        }
        for (o, &id) in source.identities.iter().enumerate() {
            if morphism_map[id].is_none() {
                if let Some(to) = object_map[o] {
                    morphism_map[id] = Some(target.identities[to]);
                }
            }
        }
        Ok(Functor { source, target, object_map, morphism_map })
    }

    pub fn from_spec(spec: &FunctorSpec) -> Result<Self> {
        let source = FinCategory::from_spec(&spec.source)?;
        let target = FinCategory::from_spec(&spec.target)?;
        Self::new(source, target, &spec.objects, &spec.morphisms)
    }

    pub fn identity(c: &FinCategory) -> Self {
        Functor {
            source: c.clone(),
            target: c.clone(),
            object_map: (0..c.objects.len()).map(Some).collect(),
            morphism_map: (0..c.morphisms.len()).map(Some).collect(),
        }
    }

    /// Sends everything to `object` of `target` and its identity.
    pub fn constant(source: &FinCategory, target: &FinCategory, object: usize) -> Self {
        Functor {
            source: source.clone(),
            target: target.clone(),
            object_map: vec![Some(object); source.objects.len()],
            morphism_map: vec![Some(target.identities[object]); source.morphisms.len()],
        }
    }

    pub fn map_object(&self, o: usize) -> Option<usize> {
        self.object_map[o]
    }

    pub fn map_morphism(&self, m: usize) -> Option<usize> {
        self.morphism_map[m]
    }

    /// `after ∘ self`. Fails if the intermediate categories differ or a map is partial.
    pub fn then(&self, after: &Functor) -> Result<Functor> {
        if self.target != after.source {
            return Err(Error::structural("functor composition: categories do not match"));
        }
        let object_map = self
            .object_map
            .iter()
            .map(|o| o.and_then(|o| after.object_map[o]))
            .collect();
        let morphism_map = self
            .morphism_map
            .iter()
            .map(|m| m.and_then(|m| after.morphism_map[m]))
            .collect();
        Ok(Functor {
            source: self.source.clone(),
            target: after.target.clone(),
            object_map,
            morphism_map,
        })
    }

    /// Overrides the image of one morphism. Meant for corrupted fixtures.
    pub fn set_morphism(&mut self, source: &str, target: &str) -> Result<()> {
        let si = self
            .source
            .morphism_index(source)
            .ok_or_else(|| Error::structural(format!("unknown source morphism `{source}`")))?;
        let ti = self
            .target
            .morphism_index(target)
            .ok_or_else(|| Error::structural(format!("unknown target morphism `{target}`")))?;
        self.morphism_map[si] = Some(ti);
        Ok(())
    }
}

/// Identity and composition preservation, plus typing of every image.
pub fn check_functor(f: &Functor) -> Result<ValidationReport> {
    let (s, t) = (&f.source, &f.target);
    for (o, m) in f.object_map.iter().enumerate() {
        if m.is_none() {
            return Err(Error::structural(format!("object `{}` is unmapped", s.objects[o])));
        }
    }
    for (k, m) in f.morphism_map.iter().enumerate() {
        if m.is_none() {
            return Err(Error::structural(format!("morphism `{}` is unmapped", s.morphisms[k].name)));
        }
    }
    let obj = |o: usize| f.object_map[o].unwrap();
    let mor = |m: usize| f.morphism_map[m].unwrap();
    let mut report = ValidationReport::new();
    for (k, m) in s.morphisms.iter().enumerate() {
        let img = &t.morphisms[mor(k)];
        if img.src != obj(m.src) || img.dst != obj(m.dst) {
            report.push(
                "fincat.functor_typing",
                m.name.clone(),
                format!(
                    "F({}) = {} : {} → {}, expected {} → {}",
                    m.name,
                    img.name,
                    t.objects[img.src],
                    t.objects[img.dst],
                    t.objects[obj(m.src)],
                    t.objects[obj(m.dst)]
                ),
            );
        }
    }
    for (o, &id) in s.identities.iter().enumerate() {
        if mor(id) != t.identities[obj(o)] {
            report.push(
                "fincat.functor_identity",
                s.objects[o].clone(),
                format!("F(id) = {}", t.morphisms[mor(id)].name),
            );
        }
    }
    for (g, fm) in s.composable_pairs() {
        let Some(h) = s.compose(g, fm) else { continue };
        let lhs = mor(h);
        match t.compose(mor(g), mor(fm)) {
            Some(rhs) if rhs == lhs => {}
            Some(rhs) => report.push(
                "fincat.functor_composition",
                format!("({}, {})", s.morphisms[g].name, s.morphisms[fm].name),
                format!(
                    "F(g∘f) = {} but F(g)∘F(f) = {}",
                    t.morphisms[lhs].name, t.morphisms[rhs].name
                ),
            ),
            None => report.push(
                "fincat.functor_composition",
                format!("({}, {})", s.morphisms[g].name, s.morphisms[fm].name),
                "F(g)∘F(f) is not composable in the target".to_string(),
            ),
        }
    }
    Ok(report)
}

/// Arrows of a concrete category.
pub trait Arrow: Clone + std::fmt::Debug {
    fn source_size(&self) -> usize;
    fn target_size(&self) -> usize;
    fn identity(size: usize) -> Self;
    /// `after ∘ self`.
    fn then(&self, after: &Self) -> Self;
    /// Zero for equal arrows; sizes must already agree.
    fn distance(&self, other: &Self) -> f64;
}

/// Total map between finite sets `{0..source} → {0..target}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetMap {
    pub target: usize,
    pub images: Vec<usize>,
}

impl SetMap {
    pub fn new(images: Vec<usize>, target: usize) -> Result<Self> {
        if let Some(bad) = images.iter().find(|&&x| x >= target) {
            return Err(Error::input(format!("map image {bad} outside target of size {target}")));
        }
        Ok(SetMap { target, images })
    }

    pub fn apply(&self, x: usize) -> usize {
        self.images[x]
    }
}

impl Arrow for SetMap {
    fn source_size(&self) -> usize {
        self.images.len()
    }
    fn target_size(&self) -> usize {
        self.target
    }
    fn identity(size: usize) -> Self {
        SetMap { target: size, images: (0..size).collect() }
    }
    fn then(&self, after: &Self) -> Self {
        SetMap { target: after.target, images: self.images.iter().map(|&x| after.images[x]).collect() }
    }
    fn distance(&self, other: &Self) -> f64 {
        self.images.iter().zip(&other.images).filter(|(a, b)| a != b).count() as f64
    }
}

/// Linear map between coordinate spaces, as a `target × source` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap(pub DMatrix<Complex64>);

impl Arrow for LinearMap {
    fn source_size(&self) -> usize {
        self.0.ncols()
    }
    fn target_size(&self) -> usize {
        self.0.nrows()
    }
    fn identity(size: usize) -> Self {
        LinearMap(DMatrix::identity(size, size))
    }
    fn then(&self, after: &Self) -> Self {
        LinearMap(&after.0 * &self.0)
    }
    fn distance(&self, other: &Self) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

/// A functor from a finite index category into a concrete category:
/// every index object gets a size, every index morphism an arrow.
#[derive(Debug, Clone)]
pub struct Diagram<A: Arrow> {
    pub index: FinCategory,
    pub sizes: Vec<usize>,
    pub arrows: Vec<A>,
}

impl<A: Arrow> Diagram<A> {
    /// Builds a diagram from label-keyed sizes and arrows; identity arrows may be omitted.
    pub fn new(index: FinCategory, sizes: &BTreeMap<String, usize>, arrows: BTreeMap<String, A>) -> Result<Self> {
        let mut sz = Vec::with_capacity(index.objects.len());
        for o in &index.objects {
            sz.push(
                *sizes.get(o).ok_or_else(|| Error::structural(format!("no carrier for object `{o}`")))?,
            );
        }
        let mut arr = Vec::with_capacity(index.morphisms.len());
        let mut arrows = arrows;
        for (k, m) in index.morphisms.iter().enumerate() {
            match arrows.remove(&m.name) {
                Some(a) => arr.push(a),
                None if index.is_identity(k) => arr.push(A::identity(sz[m.src])),
                None => return Err(Error::structural(format!("no arrow for morphism `{}`", m.name))),
            }
        }
        if let Some(extra) = arrows.keys().next() {
            return Err(Error::structural(format!("arrow for unknown morphism `{extra}`")));
        }
        Ok(Diagram { index, sizes: sz, arrows: arr })
    }

    /// A diagram on the discrete category, one object per size.
    pub fn discrete<S: AsRef<str>>(labels: &[S], sizes: &[usize]) -> Self {
        let index = FinCategory::discrete(labels);
        let arrows = sizes.iter().map(|&s| A::identity(s)).collect();
        Diagram { index, sizes: sizes.to_vec(), arrows }
    }

    pub fn arrow(&self, name: &str) -> Option<&A> {
        self.index.morphism_index(name).map(|k| &self.arrows[k])
    }

    pub fn arrow_mut(&mut self, name: &str) -> Option<&mut A> {
        self.index.morphism_index(name).map(move |k| &mut self.arrows[k])
    }
}

/// Functor laws for a diagram: typing, identities, composites.
pub fn check_diagram<A: Arrow>(d: &Diagram<A>, tol: f64) -> Result<ValidationReport> {
    let mut report = check_category(&d.index)?;
    for (k, m) in d.index.morphisms.iter().enumerate() {
        let a = &d.arrows[k];
        if a.source_size() != d.sizes[m.src] || a.target_size() != d.sizes[m.dst] {
            report.push(
                "fincat.diagram_typing",
                m.name.clone(),
                format!(
                    "arrow is {} → {}, carriers are {} → {}",
                    a.source_size(),
                    a.target_size(),
                    d.sizes[m.src],
                    d.sizes[m.dst]
                ),
            );
        }
    }
    if !report.is_valid() {
        return Ok(report);
    }
    for (o, &id) in d.index.identities.iter().enumerate() {
        if d.arrows[id].distance(&A::identity(d.sizes[o])) > tol {
            report.push("fincat.functor_identity", d.index.objects[o].clone(), "D(id) is not the identity");
        }
    }
    for (g, f) in d.index.composable_pairs() {
        let h = d.index.compose(g, f).unwrap();
        let composite = d.arrows[f].then(&d.arrows[g]);
        let err = composite.distance(&d.arrows[h]);
        if err > tol {
            report.push(
                "fincat.functor_composition",
                format!("({}, {})", d.index.morphisms[g].name, d.index.morphisms[f].name),
                format!("D(g)∘D(f) differs from D(g∘f) by {err:.3e}"),
            );
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variance {
    /// Legs go apex → D(i); a cone in the usual sense.
    FromApex,
    /// Legs go D(i) → apex; a cocone.
    ToApex,
}

/// Cone over a [`Diagram`]: an apex size and one leg per index object.
#[derive(Debug, Clone)]
pub struct Cone<A: Arrow> {
    pub apex: usize,
    pub legs: Vec<A>,
    pub variance: Variance,
}

impl<A: Arrow> Cone<A> {
    pub fn new(apex: usize, legs: Vec<A>) -> Self {
        Cone { apex, legs, variance: Variance::FromApex }
    }

    pub fn cocone(apex: usize, legs: Vec<A>) -> Self {
        Cone { apex, legs, variance: Variance::ToApex }
    }
}

/// Every triangle over a diagram arrow commutes.
///
/// For `u : i → j`, a cone needs `leg_j = D(u) ∘ leg_i` and a cocone
/// `leg_i = leg_j ∘ D(u)`.
pub fn check_cone<A: Arrow>(cone: &Cone<A>, d: &Diagram<A>, tol: f64) -> Result<ValidationReport> {
    let n = d.index.objects.len();
    if cone.legs.len() != n {
        return Err(Error::structural(format!(
            "cone has {} legs, diagram has {} objects",
            cone.legs.len(),
            n
        )));
    }
    let mut report = ValidationReport::new();
    for (o, leg) in cone.legs.iter().enumerate() {
        let ok = match cone.variance {
            Variance::FromApex => leg.source_size() == cone.apex && leg.target_size() == d.sizes[o],
            Variance::ToApex => leg.source_size() == d.sizes[o] && leg.target_size() == cone.apex,
        };
        if !ok {
            report.push(
                "fincat.cone_typing",
                d.index.objects[o].clone(),
                format!("leg is {} → {}", leg.source_size(), leg.target_size()),
            );
        }
    }
    if !report.is_valid() {
        return Ok(report);
    }
    for (k, m) in d.index.morphisms.iter().enumerate() {
        if d.index.is_identity(k) {
            continue;
        }
        let (lhs, rhs) = match cone.variance {
            Variance::FromApex => (cone.legs[m.dst].clone(), cone.legs[m.src].then(&d.arrows[k])),
            Variance::ToApex => (cone.legs[m.src].clone(), d.arrows[k].then(&cone.legs[m.dst])),
        };
        let err = lhs.distance(&rhs);
        if err > tol {
            report.push(
                "fincat.cone_commutes",
                format!("{}: {} → {}", m.name, d.index.objects[m.src], d.index.objects[m.dst]),
                format!("triangle fails by {err:.3e}"),
            );
        }
    }
    Ok(report)
}

/// Limit of a set-valued diagram: its compatible families and projection cone.
#[derive(Debug, Clone)]
pub struct Limit {
    /// Each family lists one element per index object, in object order.
    pub families: Vec<Vec<usize>>,
    pub cone: Cone<SetMap>,
}

/// All families `(x_i)` with `D(u)(x_src) = x_dst` for every arrow `u`.
pub fn limit_of_diagram(d: &Diagram<SetMap>) -> Limit {
    let n = d.index.objects.len();
    // Arrows checked as soon as both endpoints are assigned.
    let mut checks: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, m) in d.index.morphisms.iter().enumerate() {
        if !d.index.is_identity(k) {
            checks[m.src.max(m.dst)].push(k);
        }
    }
    let mut families = Vec::new();
    let mut current = vec![0usize; n];
    fn go(
        pos: usize,
        d: &Diagram<SetMap>,
        checks: &[Vec<usize>],
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if pos == current.len() {
            out.push(current.clone());
            return;
        }
        for x in 0..d.sizes[pos] {
            current[pos] = x;
            let ok = checks[pos].iter().all(|&k| {
                let m = &d.index.morphisms[k];
                d.arrows[k].apply(current[m.src]) == current[m.dst]
            });
            if ok {
                go(pos + 1, d, checks, current, out);
            }
        }
    }
    go(0, d, &checks, &mut current, &mut families);
    let legs = (0..n)
        .map(|o| SetMap { target: d.sizes[o], images: families.iter().map(|f| f[o]).collect() })
        .collect();
    let apex = families.len();
    Limit { families, cone: Cone::new(apex, legs) }
}

/// Size guards for the universal-property search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniversalityBound {
    /// Largest apex of a test cone.
    pub max_apex: usize,
    /// Largest number of candidate functions `|candidate|^|apex|` per test cone.
    pub max_search: u128,
}

impl Default for UniversalityBound {
    fn default() -> Self {
        UniversalityBound { max_apex: 4, max_search: 1 << 40 }
    }
}

fn search_size(base: usize, exp: usize) -> u128 {
    (0..exp).fold(1u128, |acc, _| acc.saturating_mul(base as u128))
}

/// Number of maps `h : cone.apex → candidate.apex` with `candidate.leg_i ∘ h = cone.leg_i`.
///
/// The commuting condition is pointwise in the apex, so the count over all
/// `|candidate|^|apex|` functions is the product of per-element counts.
pub fn count_mediating_maps(candidate: &Cone<SetMap>, cone: &Cone<SetMap>) -> u128 {
    let mut total = 1u128;
    for a in 0..cone.apex {
        let hits = (0..candidate.apex)
            .filter(|&c| candidate.legs.iter().zip(&cone.legs).all(|(cl, l)| cl.images[c] == l.images[a]))
            .count();
        total = total.saturating_mul(hits as u128);
        if total == 0 {
            return 0;
        }
    }
    total
}

/// True iff every listed cone factors through `candidate` in exactly one way.
pub fn check_universal_property(
    candidate: &Cone<SetMap>,
    d: &Diagram<SetMap>,
    cones: &[Cone<SetMap>],
    bound: &UniversalityBound,
) -> Result<bool> {
    if candidate.variance != Variance::FromApex {
        return Err(Error::domain("universal property is checked for cones, not cocones"));
    }
    if !check_cone(candidate, d, 0.0)?.is_valid() {
        return Ok(false);
    }
    for (k, cone) in cones.iter().enumerate() {
        if cone.apex > bound.max_apex {
            return Err(Error::Refused {
                what: format!("apex of test cone {k}"),
                size: cone.apex as u128,
                bound: bound.max_apex as u128,
            });
        }
        let size = search_size(candidate.apex, cone.apex);
        if size > bound.max_search {
            return Err(Error::Refused {
                what: format!("mediating-map search for test cone {k}"),
                size,
                bound: bound.max_search,
            });
        }
        if !check_cone(cone, d, 0.0)?.is_valid() {
            return Err(Error::domain(format!("test cone {k} does not commute")));
        }
        if count_mediating_maps(candidate, cone) != 1 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Every cone over `d` with the given apex size, found by running
/// [`check_cone`] on every tuple of leg functions.
pub fn enumerate_cones(d: &Diagram<SetMap>, apex: usize, max_candidates: u128) -> Result<Vec<Cone<SetMap>>> {
    let n = d.index.objects.len();
    let total = d
        .sizes
        .iter()
        .fold(1u128, |acc, &s| acc.saturating_mul(search_size(s, apex)));
    if total > max_candidates {
        return Err(Error::Refused { what: format!("cone enumeration at apex {apex}"), size: total, bound: max_candidates });
    }
    // Odometer over all (x_{a,o}) with a in apex, o in objects.
    let slots: Vec<usize> = (0..apex).flat_map(|_| d.sizes.iter().copied()).collect();
    if slots.contains(&0) {
        return Ok(if apex == 0 { vec![Cone::new(0, d.sizes.iter().map(|&s| SetMap { target: s, images: vec![] }).collect())] } else { vec![] });
    }
    let mut digits = vec![0usize; slots.len()];
    let mut out = Vec::new();
    loop {
        let legs: Vec<SetMap> = (0..n)
            .map(|o| SetMap { target: d.sizes[o], images: (0..apex).map(|a| digits[a * n + o]).collect() })
            .collect();
        let cone = Cone::new(apex, legs);
        if check_cone(&cone, d, 0.0)?.is_valid() {
            out.push(cone);
        }
        let mut pos = 0;
        loop {
            if pos == digits.len() {
                return Ok(out);
            }
            digits[pos] += 1;
            if digits[pos] < slots[pos] {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

/// Serializable set-valued diagram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramSpec {
    pub category: CategorySpec,
    pub carriers: BTreeMap<String, usize>,
    #[serde(default)]
    pub maps: BTreeMap<String, Vec<usize>>,
}

impl DiagramSpec {
    pub fn build(&self) -> Result<Diagram<SetMap>> {
        let index = FinCategory::from_spec(&self.category)?;
        let mut arrows = BTreeMap::new();
        for (name, images) in &self.maps {
            let k = index
                .morphism_index(name)
                .ok_or_else(|| Error::structural(format!("map for unknown morphism `{name}`")))?;
            let dst = &index.objects[index.morphisms[k].dst];
            let target = *self
                .carriers
                .get(dst)
                .ok_or_else(|| Error::structural(format!("no carrier for object `{dst}`")))?;
            arrows.insert(name.clone(), SetMap::new(images.clone(), target)?);
        }
        Diagram::new(index, &self.carriers, arrows)
    }
}

/// Serializable set-valued cone; legs keyed by index object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub apex: usize,
    pub legs: BTreeMap<String, Vec<usize>>,
}

impl ConeSpec {
    pub fn build(&self, d: &Diagram<SetMap>) -> Result<Cone<SetMap>> {
        let mut legs = Vec::new();
        for (o, obj) in d.index.objects.iter().enumerate() {
            let images = self
                .legs
                .get(obj)
                .ok_or_else(|| Error::structural(format!("missing leg for `{obj}`")))?;
            legs.push(SetMap::new(images.clone(), d.sizes[o])?);
        }
        Ok(Cone::new(self.apex, legs))
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering of the non-identity arrows of a category.
pub fn category_to_dot(c: &FinCategory, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", dot_escape(name));
    for o in &c.objects {
        let _ = writeln!(out, "  \"{}\";", dot_escape(o));
    }
    for (k, m) in c.morphisms.iter().enumerate() {
        if c.is_identity(k) {
            continue;
        }
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\" [label=\"{}\"];",
            dot_escape(&c.objects[m.src]),
            dot_escape(&c.objects[m.dst]),
            dot_escape(&m.name)
        );
    }
    out.push_str("}\n");
    out
}

/// Graphviz rendering of a cone: the diagram plus a dashed leg per object.
pub fn cone_to_dot<A: Arrow>(cone: &Cone<A>, d: &Diagram<A>, apex_label: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph cone {{");
    let _ = writeln!(out, "  \"{}\" [shape=box];", dot_escape(apex_label));
    for (o, obj) in d.index.objects.iter().enumerate() {
        let _ = writeln!(out, "  \"{}\" [label=\"{} ({})\"];", dot_escape(obj), dot_escape(obj), d.sizes[o]);
    }
    for (k, m) in d.index.morphisms.iter().enumerate() {
        if d.index.is_identity(k) {
            continue;
        }
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\" [label=\"{}\"];",
            dot_escape(&d.index.objects[m.src]),
            dot_escape(&d.index.objects[m.dst]),
            dot_escape(&m.name)
        );
    }
    for obj in d.index.objects.iter() {
        let (a, b) = match cone.variance {
            Variance::FromApex => (apex_label, obj.as_str()),
            Variance::ToApex => (obj.as_str(), apex_label),
        };
        let _ = writeln!(out, "  \"{}\" -> \"{}\" [style=dashed];", dot_escape(a), dot_escape(b));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn walking_arrow() -> FinCategory {
        let spec = CategorySpec {
            objects: vec!["V1".into(), "V2".into()],
            morphisms: vec![MorphismSpec { name: "i".into(), src: "V1".into(), dst: "V2".into() }],
            auto_identity_composites: true,
            ..Default::default()
        };
        FinCategory::from_spec(&spec).unwrap()
    }

    fn parallel_pair() -> FinCategory {
        let spec = CategorySpec {
            objects: vec!["A".into(), "B".into()],
            morphisms: vec![
                MorphismSpec { name: "f".into(), src: "A".into(), dst: "B".into() },
                MorphismSpec { name: "g".into(), src: "A".into(), dst: "B".into() },
            ],
            auto_identity_composites: true,
            ..Default::default()
        };
        FinCategory::from_spec(&spec).unwrap()
    }

    #[test]
    fn one_object_category_is_valid() {
        assert!(check_category(&FinCategory::terminal()).unwrap().is_valid());
    }

    #[test]
    fn poset_category_is_valid() {
        assert!(check_category(&walking_arrow()).unwrap().is_valid());
        let leq = vec![
            vec![true, true, true],
            vec![false, true, true],
            vec![false, false, true],
        ];
        let chain = FinCategory::poset(&["a", "b", "c"], &leq);
        assert!(check_category(&chain).unwrap().is_valid());
        assert!(check_category(&chain.opposite()).unwrap().is_valid());
    }

    #[test]
    fn composite_in_wrong_hom_set_is_structural() {
        let mut spec = CategorySpec {
            objects: vec!["A".into(), "B".into(), "C".into()],
            morphisms: vec![
                MorphismSpec { name: "f".into(), src: "A".into(), dst: "B".into() },
                MorphismSpec { name: "g".into(), src: "B".into(), dst: "C".into() },
                MorphismSpec { name: "h".into(), src: "A".into(), dst: "C".into() },
            ],
            auto_identity_composites: true,
            ..Default::default()
        };
        spec.compose.push(["g".into(), "f".into(), "f".into()]);
        let c = FinCategory::from_spec(&spec).unwrap();
        let err = check_category(&c).unwrap_err();
        assert!(matches!(err, Error::Structural(ref m) if m.contains("g∘f")), "{err}");
    }

    #[test]
    fn missing_composite_is_structural() {
        let spec = CategorySpec {
            objects: vec!["A".into(), "B".into(), "C".into()],
            morphisms: vec![
                MorphismSpec { name: "f".into(), src: "A".into(), dst: "B".into() },
                MorphismSpec { name: "g".into(), src: "B".into(), dst: "C".into() },
            ],
            auto_identity_composites: true,
            ..Default::default()
        };
        let c = FinCategory::from_spec(&spec).unwrap();
        assert!(matches!(check_category(&c), Err(Error::Structural(_))));
    }

    #[test]
    fn broken_identity_law_is_a_violation() {
        // Two endomorphisms e, id on one object; claim id∘e = id.
        let spec = CategorySpec {
            objects: vec!["A".into()],
            morphisms: vec![MorphismSpec { name: "e".into(), src: "A".into(), dst: "A".into() }],
            compose: vec![
                ["id_A".into(), "e".into(), "id_A".into()],
                ["e".into(), "e".into(), "e".into()],
            ],
            auto_identity_composites: true,
            ..Default::default()
        };
        let c = FinCategory::from_spec(&spec).unwrap();
        let r = check_category(&c).unwrap();
        assert!(r.breaches("fincat.identity_law"), "{r}");
    }

    #[test]
    fn broken_associativity_is_a_violation() {
        // Monoid {1, a, b} on one object with a table that is not associative.
        let mut spec = CategorySpec {
            objects: vec!["*".into()],
            morphisms: vec![
                MorphismSpec { name: "a".into(), src: "*".into(), dst: "*".into() },
                MorphismSpec { name: "b".into(), src: "*".into(), dst: "*".into() },
            ],
            auto_identity_composites: true,
            ..Default::default()
        };
        for (g, f, h) in [("a", "a", "b"), ("a", "b", "a"), ("b", "a", "b"), ("b", "b", "a")] {
            spec.compose.push([g.into(), f.into(), h.into()]);
        }
        let c = FinCategory::from_spec(&spec).unwrap();
        let r = check_category(&c).unwrap();
        assert!(r.breaches("fincat.associativity"), "{r}");
    }

    #[test]
    fn identity_and_constant_functors() {
        let c = walking_arrow();
        assert!(check_functor(&Functor::identity(&c)).unwrap().is_valid());
        let t = FinCategory::terminal();
        assert!(check_functor(&Functor::constant(&c, &t, 0)).unwrap().is_valid());
        let composed = Functor::identity(&c).then(&Functor::constant(&c, &t, 0)).unwrap();
        assert!(check_functor(&composed).unwrap().is_valid());
    }

    #[test]
    fn broken_composite_in_functor() {
        // A → B → C chain mapped onto itself with g sent to a wrong arrow.
        let leq = vec![
            vec![true, true, true],
            vec![false, true, true],
            vec![false, false, true],
        ];
        let c = FinCategory::poset(&["A", "B", "C"], &leq);
        let mut f = Functor::identity(&c);
        f.set_morphism("A<=B", "A<=C").unwrap();
        let r = check_functor(&f).unwrap();
        assert!(r.breaches("fincat.functor_typing") || r.breaches("fincat.functor_composition"), "{r}");
        assert!(r.violations.iter().any(|v| v.location.contains("A<=B")), "{r}");
    }

    #[test]
    fn unmapped_object_is_structural() {
        let c = walking_arrow();
        let f = Functor::new(c.clone(), c, &BTreeMap::new(), &BTreeMap::new()).unwrap();
        assert!(matches!(check_functor(&f), Err(Error::Structural(_))));
    }

    #[test]
    fn discrete_limit_is_product() {
        let d: Diagram<SetMap> = Diagram::discrete(&["X", "Y"], &[2, 3]);
        let lim = limit_of_diagram(&d);
        assert_eq!(lim.cone.apex, 6);
        assert!(check_cone(&lim.cone, &d, 0.0).unwrap().is_valid());
    }

    fn equalizer(f: Vec<usize>, g: Vec<usize>) -> Diagram<SetMap> {
        let mut arrows = BTreeMap::new();
        arrows.insert("f".to_string(), SetMap::new(f, 2).unwrap());
        arrows.insert("g".to_string(), SetMap::new(g, 2).unwrap());
        let sizes = BTreeMap::from([("A".to_string(), 3), ("B".to_string(), 2)]);
        Diagram::new(parallel_pair(), &sizes, arrows).unwrap()
    }

    #[test]
    fn equalizer_limit() {
        // {1,2,3} → {1,2}; f and g agree only on element 2 (index 1).
        let d = equalizer(vec![0, 1, 1], vec![1, 1, 0]);
        let lim = limit_of_diagram(&d);
        assert_eq!(lim.families, vec![vec![1, 1]]);
        // Brute force: elements of A on which the maps agree.
        let brute: Vec<usize> = (0..3).filter(|&a| [0, 1, 1][a] == [1, 1, 0][a]).collect();
        assert_eq!(brute, vec![1]);
    }

    #[test]
    fn empty_limit() {
        let d = equalizer(vec![0, 0, 0], vec![1, 1, 1]);
        let lim = limit_of_diagram(&d);
        assert_eq!(lim.cone.apex, 0);
        assert!(check_cone(&lim.cone, &d, 0.0).unwrap().is_valid());
    }

    #[test]
    fn limit_is_universal() {
        let d = equalizer(vec![0, 1, 1], vec![0, 1, 0]);
        let lim = limit_of_diagram(&d);
        assert_eq!(lim.cone.apex, 2);
        let bound = UniversalityBound::default();
        for apex in 1..=2 {
            let cones = enumerate_cones(&d, apex, 1 << 20).unwrap();
            assert_eq!(cones.len(), 2usize.pow(apex as u32));
            assert!(check_universal_property(&lim.cone, &d, &cones, &bound).unwrap());
        }
    }

    #[test]
    fn padded_candidate_is_not_universal() {
        let d: Diagram<SetMap> = Diagram::discrete(&["X", "Y"], &[2, 2]);
        let lim = limit_of_diagram(&d);
        let mut padded = lim.cone.clone();
        padded.apex += 1;
        for leg in &mut padded.legs {
            leg.images.push(0);
        }
        let cones = enumerate_cones(&d, 1, 1 << 20).unwrap();
        let bound = UniversalityBound::default();
        assert!(check_universal_property(&lim.cone, &d, &cones, &bound).unwrap());
        assert!(!check_universal_property(&padded, &d, &cones, &bound).unwrap());
    }

    #[test]
    fn empty_diagram_terminal_object() {
        let d: Diagram<SetMap> = Diagram::discrete::<&str>(&[], &[]);
        let lim = limit_of_diagram(&d);
        assert_eq!(lim.cone.apex, 1);
        let cand = Cone::new(1, vec![]);
        let cones: Vec<Cone<SetMap>> = (0..=3).map(|n| Cone::new(n, vec![])).collect();
        assert!(check_universal_property(&cand, &d, &cones, &UniversalityBound::default()).unwrap());
    }

    #[test]
    fn oversized_search_is_refused() {
        let d: Diagram<SetMap> = Diagram::discrete(&["X"], &[2]);
        let lim = limit_of_diagram(&d);
        let big = Cone::new(5, vec![SetMap::new(vec![0; 5], 2).unwrap()]);
        let err = check_universal_property(&lim.cone, &d, &[big], &UniversalityBound::default()).unwrap_err();
        assert!(matches!(err, Error::Refused { size: 5, bound: 4, .. }));
    }

    #[test]
    fn single_object_cone_any_leg() {
        let d: Diagram<SetMap> = Diagram::discrete(&["X"], &[3]);
        let cone = Cone::new(2, vec![SetMap::new(vec![2, 0], 3).unwrap()]);
        assert!(check_cone(&cone, &d, 0.0).unwrap().is_valid());
    }

    #[test]
    fn missing_leg_is_structural() {
        let d: Diagram<SetMap> = Diagram::discrete(&["X", "Y"], &[1, 1]);
        let cone = Cone::new(1, vec![SetMap::identity(1)]);
        assert!(matches!(check_cone(&cone, &d, 0.0), Err(Error::Structural(_))));
    }

    #[test]
    fn cocone_variance() {
        let d = equalizer(vec![0, 1, 1], vec![0, 1, 1]);
        // Coequalizer-style cocone into a 2-element set.
        let legs = vec![SetMap::new(vec![0, 1, 1], 2).unwrap(), SetMap::identity(2)];
        assert!(check_cone(&Cone::cocone(2, legs), &d, 0.0).unwrap().is_valid());
        let bad = vec![SetMap::new(vec![1, 1, 1], 2).unwrap(), SetMap::identity(2)];
        let r = check_cone(&Cone::cocone(2, bad), &d, 0.0).unwrap();
        assert!(r.breaches("fincat.cone_commutes"));
    }

    #[test]
    fn spec_roundtrip_and_dot() {
        let c = walking_arrow();
        let json = serde_json::to_string(&c.to_spec()).unwrap();
        let back = FinCategory::from_spec(&serde_json::from_str(&json).unwrap()).unwrap();
        assert!(check_category(&back).unwrap().is_valid());
        let dot = category_to_dot(&c, "V");
        assert!(dot.contains("\"V1\" -> \"V2\" [label=\"i\"]"));
    }

    fn cospan(a: usize, b: usize, cn: usize, f: Vec<usize>, g: Vec<usize>) -> Diagram<SetMap> {
        let index = FinCategory::from_spec(&CategorySpec {
            objects: vec!["a".into(), "b".into(), "c".into()],
            morphisms: vec![
                MorphismSpec { name: "f".into(), src: "a".into(), dst: "c".into() },
                MorphismSpec { name: "g".into(), src: "b".into(), dst: "c".into() },
            ],
            auto_identity_composites: true,
            ..Default::default()
        })
        .unwrap();
        let sizes = [("a".to_string(), a), ("b".to_string(), b), ("c".to_string(), cn)].into_iter().collect();
        let arrows = [("f".to_string(), SetMap::new(f, cn).unwrap()), ("g".to_string(), SetMap::new(g, cn).unwrap())]
            .into_iter()
            .collect();
        Diagram::new(index, &sizes, arrows).unwrap()
    }

    fn pullback_case() -> impl Strategy<Value = (usize, usize, usize, Vec<usize>, Vec<usize>)> {
        (1usize..4, 1usize..4, 1usize..4).prop_flat_map(|(a, b, cn)| {
            (Just(a), Just(b), Just(cn), proptest::collection::vec(0..cn, a), proptest::collection::vec(0..cn, b))
        })
    }

    proptest! {
        #[test]
        fn random_posets_are_categories(n in 1usize..5, bits in proptest::collection::vec(any::<bool>(), 16)) {
            let mut leq = vec![vec![false; n]; n];
            for i in 0..n {
                leq[i][i] = true;
                for j in i + 1..n {
                    leq[i][j] = bits[i * 4 + j];
                }
            }
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        if leq[i][k] && leq[k][j] {
                            leq[i][j] = true;
                        }
                    }
                }
            }
            let names: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
            let c = FinCategory::poset(&names, &leq);
            prop_assert!(check_category(&c).unwrap().is_valid());
            let op = c.opposite();
            prop_assert!(check_category(&op).unwrap().is_valid());
            prop_assert_eq!(op.morphisms().len(), c.morphisms().len());
            prop_assert_eq!(op.opposite().to_spec().objects, c.to_spec().objects);
        }

        #[test]
        fn pullbacks_match_brute_force((a, b, cn, f, g) in pullback_case()) {
            let d = cospan(a, b, cn, f.clone(), g.clone());
            let lim = limit_of_diagram(&d);
            let expected = f.iter().map(|x| g.iter().filter(|&y| y == x).count()).sum::<usize>();
            prop_assert_eq!(lim.families.len(), expected);
            prop_assert!(check_cone(&lim.cone, &d, 0.0).unwrap().is_valid());
            let mut tests = enumerate_cones(&d, 1, 1 << 16).unwrap();
            tests.extend(enumerate_cones(&d, 2, 1 << 16).unwrap());
            let bound = UniversalityBound { max_apex: 2, ..Default::default() };
            prop_assert!(check_universal_property(&lim.cone, &d, &tests, &bound).unwrap());
        }

        #[test]
        fn discrete_limits_count_products(sizes in proptest::collection::vec(1usize..4, 1..4)) {
            let labels: Vec<String> = (0..sizes.len()).map(|i| format!("o{i}")).collect();
            let d = Diagram::<SetMap>::discrete(&labels, &sizes);
            let lim = limit_of_diagram(&d);
            prop_assert_eq!(lim.families.len(), sizes.iter().product::<usize>());
        }
    }
}
