use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ctxext::extension::{self, ExtensionExport};
use ctxext::fincat::{self, CategorySpec, ConeSpec, DiagramSpec, FinCategory, Functor, FunctorSpec, UniversalityBound};
use ctxext::gft::{self, PolyhedronSpace, TruncatedFock};
use ctxext::io::{self, AlgebraFile, FamilyFile, MatrixJson, NetFile};
use ctxext::linalg;
use ctxext::locnet::{self, LocalContext, LocalNet, Region};
use ctxext::presheaf::{self, RayFamily};
use ctxext::realism;
use ctxext::staralg::ContextCategory;
use ctxext::{Error, Result, ValidationReport};
use serde::Serialize;
use serde_json::{json, Value};

use crate::{Command, Global, ProviderKind};

/// Largest number of candidate leg tuples enumerated per test-cone apex.
const CONE_SEARCH_CAP: u128 = 1 << 22;

/// What a command produced, in every output format.
pub struct Outcome {
    pub json: Value,
    pub text: String,
    pub dot: Option<String>,
    pub report: ValidationReport,
}

impl Outcome {
    fn new(command: &str, global: &Global, result: Value, mut text: String, report: ValidationReport) -> Self {
        let json = json!({
            "command": command,
            "seed": global.seed,
            "tol": global.tol,
            "result": result,
            "violations": report.violations,
        });
        let _ = writeln!(text, "violations: {}", report.len());
        for v in &report.violations {
            let _ = writeln!(text, "  {} at {}: {}", v.invariant, v.location, v.detail);
        }
        Outcome { json, text, dot: None, report }
    }

    fn with_dot(mut self, dot: String) -> Self {
        self.dot = Some(dot);
        self
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn parse<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read(path)?).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "category".into())
}

pub fn run(command: &Command, global: &Global) -> Result<Outcome> {
    match command {
        Command::CatCheck { category, functor, diagram, cone, apex_bound } => {
            cat_check(global, category.as_deref(), functor.as_deref(), diagram.as_deref(), cone.as_deref(), *apex_bound as usize)
        }
        Command::Limit { algebra, seeds, carrier_cap } => limit(global, algebra, seeds, *carrier_cap as usize),
        Command::StateExtend { algebra, seeds, state, carrier_cap } => {
            state_extend(global, algebra, seeds, state, *carrier_cap as usize)
        }
        Command::KsCheck { fixture, builtin, limit } => ks_check(global, fixture.as_deref(), builtin.as_deref(), *limit as usize),
        Command::Daseinise { algebra, seeds, operator } => daseinise(global, algebra, seeds, operator),
        Command::NetCheck { chain, net, shift, open } => net_check(global, *chain, net.as_deref(), *shift as usize, !*open),
        Command::GftCcr { m, n, nmax, pairs, radius } => {
            gft_ccr(global, *m as usize, *n as usize, *nmax as usize, *pairs as usize, *radius)
        }
        Command::GftWeyl { m, n, nmax, sweep, sector, radius } => {
            gft_weyl(global, *m as usize, *n as usize, *nmax as usize, *sweep, *sector as usize, *radius)
        }
        Command::Inequality { family, provider, sign_cap } => inequality(global, family, *provider, *sign_cap as usize),
        Command::ExportDot { category, diagram, cone } => export_dot(global, category.as_deref(), diagram.as_deref(), cone.as_deref()),
    }
}

fn cat_check(
    global: &Global,
    category: Option<&Path>,
    functor: Option<&Path>,
    diagram: Option<&Path>,
    cone: Option<&Path>,
    apex_bound: usize,
) -> Result<Outcome> {
    if category.is_none() && functor.is_none() && diagram.is_none() {
        return Err(Error::Input("give at least one of --category, --functor, --diagram".into()));
    }
    let mut report = ValidationReport::new();
    let mut result = serde_json::Map::new();
    let mut text = String::new();
    let mut dot = None;
    if let Some(path) = category {
        let c = FinCategory::from_spec(&parse::<CategorySpec>(path)?)?;
        report.merge(fincat::check_category(&c)?);
        let _ = writeln!(text, "category: {} objects, {} morphisms", c.objects().len(), c.morphisms().len());
        result.insert("category".into(), json!({"objects": c.objects().len(), "morphisms": c.morphisms().len()}));
        dot = Some(fincat::category_to_dot(&c, &stem(path)));
    }
    if let Some(path) = functor {
        let f = Functor::from_spec(&parse::<FunctorSpec>(path)?)?;
        report.merge(fincat::check_functor(&f)?);
        let _ = writeln!(text, "functor: checked");
        result.insert("functor".into(), json!({"checked": true}));
    }
    if let Some(path) = diagram {
        let d = parse::<DiagramSpec>(path)?.build()?;
        report.merge(fincat::check_diagram(&d, global.tol)?);
        let lim = fincat::limit_of_diagram(&d);
        let mut tests = Vec::new();
        for apex in 1..=apex_bound {
            tests.extend(fincat::enumerate_cones(&d, apex, CONE_SEARCH_CAP)?);
        }
        let bound = UniversalityBound { max_apex: apex_bound, ..UniversalityBound::default() };
        let universal = fincat::check_universal_property(&lim.cone, &d, &tests, &bound)?;
        if !universal {
            report.push("fincat.universal_property", "limit", "some test cone does not factor uniquely");
        }
        let _ = writeln!(text, "limit size: {}", lim.families.len());
        let _ = writeln!(text, "universal up to apex {apex_bound}: {universal} ({} test cones)", tests.len());
        result.insert(
            "limit".into(),
            json!({"size": lim.families.len(), "families": lim.families, "universal": universal, "test_cones": tests.len()}),
        );
        if let Some(path) = cone {
            let k = parse::<ConeSpec>(path)?.build(&d)?;
            let r = fincat::check_cone(&k, &d, global.tol)?;
            let _ = writeln!(text, "cone: {}", if r.is_valid() { "commutes" } else { "fails" });
            result.insert("cone".into(), json!({"valid": r.is_valid()}));
            report.merge(r);
        }
    }
    let out = Outcome::new("cat-check", global, Value::Object(result), text, report);
    Ok(match dot {
        Some(d) => out.with_dot(d),
        None => out,
    })
}

fn context_table(cc: &ContextCategory) -> Value {
    cc.contexts()
        .iter()
        .map(|c| json!({"label": c.label, "linear_dim": c.algebra.linear_dim(), "seeds": c.seeds}))
        .collect()
}

fn load_contexts(global: &Global, algebra: &Path, seeds: &[String]) -> Result<(AlgebraFile, ContextCategory)> {
    let file = AlgebraFile::parse(&read(algebra)?)?;
    let cc = file.context_category(seeds, global.tol)?;
    Ok((file, cc))
}

fn limit(global: &Global, algebra: &Path, seeds: &[String], cap: usize) -> Result<Outcome> {
    let (_, cc) = load_contexts(global, algebra, seeds)?;
    let all: Vec<usize> = (0..cc.len()).collect();
    let ext = extension::build_limit_extension_for(&cc, &all, cap)?;
    let export = ExtensionExport::new(&ext, None);
    let mut text = String::new();
    for (label, size) in export.contexts.iter().zip(&export.spectrum_sizes) {
        let _ = writeln!(text, "context {label}: {size} characters");
    }
    let _ = writeln!(text, "carrier size: {}", export.carrier_size);
    let result = json!({"contexts": context_table(&cc), "extension": export});
    let dot = fincat::category_to_dot(&cc.as_category(), "contexts");
    Ok(Outcome::new("limit", global, result, text, cc.check()).with_dot(dot))
}

fn state_extend(global: &Global, algebra: &Path, seeds: &[String], state: &Path, cap: usize) -> Result<Outcome> {
    let (file, cc) = load_contexts(global, algebra, seeds)?;
    let rho = io::parse_matrix(&read(state)?)?;
    let all: Vec<usize> = (0..cc.len()).collect();
    let ext = extension::build_limit_extension_for(&cc, &all, cap)?;
    let mu = extension::extend_state(&rho, &ext)?;
    let mut report = cc.check();
    let mut rows = Vec::new();
    let mut text = String::new();
    for (name, a) in file.select(seeds)? {
        let v = (0..cc.len())
            .find(|&k| cc.contexts()[k].algebra.contains(&a))
            .ok_or_else(|| Error::Internal(format!("seed `{name}` lies in no context")))?;
        let lifted = extension::evaluate_state(&mu, &extension::embed(&a, v, &ext)?)?;
        let direct = extension::expectation(&rho, &a);
        let defect = (lifted - direct).norm();
        if defect > global.tol {
            report.push("extension.state_exactness", name.clone(), format!("|μ(A,V) − Tr ρA| = {defect:e}"));
        }
        let _ = writeln!(text, "{name} in {}: {:.12} (Tr ρA {:.12}, defect {defect:.3e})", cc.contexts()[v].label, lifted.re, direct.re);
        rows.push(json!({"seed": name, "context": cc.contexts()[v].label, "extended": [lifted.re, lifted.im], "trace": [direct.re, direct.im], "defect": defect}));
    }
    let _ = writeln!(text, "carrier size: {}", ext.carrier().len());
    let result = json!({"extension": ExtensionExport::new(&ext, Some(&mu)), "expectations": rows});
    Ok(Outcome::new("state-extend", global, result, text, report))
}

fn ks_check(global: &Global, fixture: Option<&Path>, builtin: Option<&str>, limit: usize) -> Result<Outcome> {
    let family = match (fixture, builtin) {
        (Some(path), _) => RayFamily::from_json(&read(path)?)?,
        (None, Some("cabello18")) => presheaf::cabello18(),
        (None, Some(other)) => return Err(Error::Input(format!("no bundled family `{other}`"))),
        (None, None) => return Err(Error::Input("give --fixture or --builtin".into())),
    };
    let mut report = family.validate();
    if !report.is_valid() {
        return Ok(Outcome::new("ks-check", global, json!({"family": family.name}), String::new(), report));
    }
    let cc = family.context_category()?;
    let p = presheaf::build_spectral_presheaf(&cc)?;
    report.merge(p.check_functoriality());
    let sections = presheaf::global_sections(&p, limit);
    let parity = family.parity_obstructed();
    let mut text = String::new();
    let _ = writeln!(text, "family: {} (d = {}, {} bases)", family.name, family.dim, family.bases.len());
    let _ = writeln!(text, "parity obstructed: {parity}");
    let capped = if sections.len() == limit { " (limit reached)" } else { "" };
    let _ = writeln!(text, "sections: {}{capped}", sections.len());
    let result = json!({
        "family": family.name,
        "dim": family.dim,
        "bases": family.bases.len(),
        "contexts": cc.labels(),
        "parity_obstructed": parity,
        "sections": sections.len(),
        "limit_reached": sections.len() == limit,
        "assignments": sections,
    });
    Ok(Outcome::new("ks-check", global, result, text, report))
}

fn daseinise(global: &Global, algebra: &Path, seeds: &[String], operator: &Path) -> Result<Outcome> {
    let (file, cc) = load_contexts(global, algebra, seeds)?;
    let a = io::parse_matrix(&read(operator)?)?;
    if a.nrows() != file.dim {
        return Err(Error::Input(format!("operator is {0}×{0}, algebra dimension is {1}", a.nrows(), file.dim)));
    }
    let projection = linalg::is_projection(&a, global.tol);
    let mut report = ValidationReport::new();
    let mut rows = Vec::new();
    let mut text = String::new();
    let _ = writeln!(text, "operator kind: {}", if projection { "projection" } else { "self-adjoint" });
    for ctx in cc.contexts() {
        let (inner, outer) = if projection {
            (presheaf::inner_daseinisation(&a, &ctx.algebra)?, presheaf::outer_daseinisation(&a, &ctx.algebra)?)
        } else {
            presheaf::daseinise_operator(&a, &ctx.algebra)?
        };
        if !linalg::loewner_leq(&inner, &a, global.tol) || !linalg::loewner_leq(&a, &outer, global.tol) {
            report.push("presheaf.daseinisation_sandwich", ctx.label.clone(), "inner ≤ A ≤ outer fails");
        }
        let (ti, to) = (linalg::trace(&inner).re, linalg::trace(&outer).re);
        let _ = writeln!(text, "{}: tr inner {ti:.9}, tr outer {to:.9}", ctx.label);
        rows.push(json!({
            "context": ctx.label,
            "inner": MatrixJson::from_matrix(&inner),
            "outer": MatrixJson::from_matrix(&outer),
            "trace_inner": ti,
            "trace_outer": to,
        }));
    }
    let result = json!({"projection": projection, "contexts": rows});
    Ok(Outcome::new("daseinise", global, result, text, report))
}

fn site_contexts(l: usize, shift: usize, cyclic: bool) -> Result<Vec<LocalContext>> {
    let last = if cyclic { l } else { l.saturating_sub(shift) };
    (0..last)
        .map(|s| LocalContext::generated(&format!("z{s}"), Region::site(s), &[locnet::site_operator(&linalg::pauli_z(), s, l)], l))
        .collect()
}

fn net_check(global: &Global, chain: Option<u64>, net: Option<&Path>, shift: usize, cyclic: bool) -> Result<Outcome> {
    let (net, contexts): (LocalNet, Vec<LocalContext>) = match (net, chain) {
        (Some(path), _) => {
            let f = NetFile::parse(&read(path)?)?;
            let net = f.net()?;
            let mut contexts = f.contexts()?;
            if contexts.is_empty() {
                contexts = site_contexts(f.chain, shift, cyclic)?;
            }
            (net, contexts)
        }
        (None, Some(l)) => (LocalNet::standard(l as usize)?, site_contexts(l as usize, shift, cyclic)?),
        (None, None) => return Err(Error::Input("give --chain or --net".into())),
    };
    let l = net.chain();
    let mut report = ValidationReport::new();
    let mut text = String::new();
    let mut sections = serde_json::Map::new();
    let mut record = |name: &str, r: ValidationReport, report: &mut ValidationReport, text: &mut String| {
        let _ = writeln!(text, "{name}: {}", if r.is_valid() { "ok" } else { "violated" });
        sections.insert(name.into(), json!(r.is_valid()));
        report.merge(r);
    };
    record("isotony", locnet::check_isotony(&net), &mut report, &mut text);
    record("locality", locnet::check_locality(&net), &mut report, &mut text);
    record("group_action", locnet::check_group_action(l), &mut report, &mut text);
    record("covariance", locnet::check_covariance(&net, shift, &contexts, cyclic)?, &mut report, &mut text);
    let regions: Vec<Region> = net.regions().into_iter().filter(|r| r.b < l).collect();
    let mut squares = ValidationReport::new();
    let mut count = 0usize;
    for sub in &regions {
        for whole in &regions {
            if sub != whole && sub.subset_of(whole, l) {
                squares.merge(locnet::check_lc_square(sub, whole, &net)?);
                count += 1;
            }
        }
    }
    record("lc_square", squares, &mut report, &mut text);
    let separated: Vec<LocalContext> = {
        let mut chosen: Vec<LocalContext> = Vec::new();
        for c in &contexts {
            if chosen.iter().all(|d| d.region.disjoint(&c.region, l)) {
                chosen.push(c.clone());
            }
        }
        chosen
    };
    let composite = locnet::composite_context(&separated, &net)?;
    let _ = writeln!(text, "commuting squares checked: {count}");
    let _ = writeln!(text, "composite of {} contexts: linear dimension {}", separated.len(), composite.linear_dim());
    let result = json!({
        "chain": l,
        "shift": shift,
        "cyclic": cyclic,
        "checks": sections,
        "lc_squares": count,
        "composite": {"contexts": separated.iter().map(|c| c.label.clone()).collect::<Vec<_>>(), "linear_dim": composite.linear_dim()},
    });
    Ok(Outcome::new("net-check", global, result, text, report))
}

fn gft_ccr(global: &Global, m: usize, n: usize, nmax: usize, pairs: usize, radius: f64) -> Result<Outcome> {
    let space = PolyhedronSpace::new(m, n)?;
    let fock = TruncatedFock::new(&space, nmax)?;
    let fs = gft::random_test_functions(global.seed, 2 * pairs, space.dim(), radius);
    let mut report = ValidationReport::new();
    let mut defects = Vec::with_capacity(pairs);
    for (k, pair) in fs.chunks(2).enumerate() {
        let d = gft::ccr_defect(&pair[0], &pair[1], &fock)?;
        if d > global.tol {
            report.push("gft.ccr", format!("pair {k}"), format!("defect {d:e} on sectors N ≤ {}", nmax - 1));
        }
        defects.push(d);
    }
    let max = defects.iter().cloned().fold(0.0, f64::max);
    let mut text = String::new();
    let _ = writeln!(text, "modes: {}, fock dimension: {}", space.dim(), fock.dim());
    let _ = writeln!(text, "pairs: {pairs}");
    let _ = writeln!(text, "max defect: {max:.3e}");
    let result = json!({"m": m, "n": n, "nmax": nmax, "modes": space.dim(), "fock_dim": fock.dim(), "defects": defects, "max_defect": max});
    Ok(Outcome::new("gft-ccr", global, result, text, report))
}

fn gft_weyl(global: &Global, m: usize, n: usize, nmax: usize, sweep: bool, sector: usize, radius: f64) -> Result<Outcome> {
    let space = PolyhedronSpace::new(m, n)?;
    let fs = gft::random_test_functions(global.seed, 2, space.dim(), radius);
    let cutoffs: Vec<usize> = if sweep { (sector + 1..=nmax).collect() } else { vec![nmax] };
    if cutoffs.is_empty() {
        return Err(Error::Input(format!("no cutoff above sector {sector} up to {nmax}")));
    }
    let rows = gft::weyl_sweep(&fs[0], &fs[1], &space, &cutoffs, sector)?;
    let decreasing = rows.windows(2).all(|w| w[1].defect < w[0].defect);
    let mut text = String::new();
    for r in &rows {
        let _ = writeln!(text, "nmax {}: fock dimension {}, defect {:.6e}", r.nmax, r.fock_dim, r.defect);
    }
    if sweep {
        let _ = writeln!(text, "strictly decreasing: {decreasing}");
    }
    let result = json!({"m": m, "n": n, "sector": sector, "radius": radius, "rows": rows, "strictly_decreasing": decreasing});
    Ok(Outcome::new("gft-weyl", global, result, text, ValidationReport::new()))
}

fn inequality(global: &Global, family: &Path, kind: ProviderKind, cap: usize) -> Result<Outcome> {
    let file = FamilyFile::parse(&read(family)?)?;
    let fam = file.family()?;
    let provider = match kind {
        ProviderKind::Measure => file.measure_provider()?,
        ProviderKind::Quantum => file.quantum_provider()?,
    };
    let found = realism::search_signs(&fam, &provider, cap)?;
    let mut report = ValidationReport::new();
    if kind == ProviderKind::Measure && found.below_bound {
        report.push("realism.classical_bound", format!("signs {:?}", found.signs), format!("LHS {} below q = {}", found.lhs, found.q));
    }
    let mut text = String::new();
    let _ = writeln!(text, "q: {}", found.q);
    let _ = writeln!(text, "min LHS: {:.12}", found.lhs);
    let _ = writeln!(text, "margin: {:.12}", found.margin);
    let _ = writeln!(text, "argmin signs: {:?}", found.signs);
    let _ = writeln!(text, "below classical bound: {}", found.below_bound);
    Ok(Outcome::new("inequality", global, to_value(&found), text, report))
}

fn export_dot(global: &Global, category: Option<&Path>, diagram: Option<&Path>, cone: Option<&Path>) -> Result<Outcome> {
    let (dot, result) = match (category, diagram, cone) {
        (Some(path), _, _) => {
            let c = FinCategory::from_spec(&parse::<CategorySpec>(path)?)?;
            (fincat::category_to_dot(&c, &stem(path)), json!({"kind": "category"}))
        }
        (None, Some(dpath), Some(cpath)) => {
            let d = parse::<DiagramSpec>(dpath)?.build()?;
            let k = parse::<ConeSpec>(cpath)?.build(&d)?;
            (fincat::cone_to_dot(&k, &d, "apex"), json!({"kind": "cone"}))
        }
        _ => return Err(Error::Input("give --category, or --diagram with --cone".into())),
    };
    let mut json = result;
    json["dot"] = Value::String(dot.clone());
    let mut out = Outcome::new("export-dot", global, json, String::new(), ValidationReport::new());
    out.text = dot.clone();
    Ok(out.with_dot(dot))
}
