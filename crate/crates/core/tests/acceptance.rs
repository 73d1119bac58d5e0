//! Acceptance suite: one PASS/FAIL line per criterion.

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ctxext::extension::{
    build_limit_extension, discrete_spectrum_diagram, embed, evaluate_state, extend_state, extension_triangle,
};
use ctxext::fincat::{check_cone, enumerate_cones, check_universal_property, limit_of_diagram, UniversalityBound};
use ctxext::gft::{
    ccr_defect, copy_padding, random_test_functions, second_quantization_cone, second_quantization_cone_with, weyl_sweep,
    PolyhedronSpace, TestFunction, TruncatedFock,
};
use ctxext::linalg::{self, c, pauli_x, pauli_z, random, CMat};
use ctxext::locnet::{
    check_covariance, check_group_action, check_isotony, check_lc_square, check_locality, composite_context, lc_square_cone,
    place, site_operator, LocalContext, LocalNet, Region,
};
use ctxext::presheaf::{
    build_spectral_presheaf, cabello18, global_sections, inner_daseinisation, outer_daseinisation, restriction_cone,
};
use ctxext::realism::{pauli_family, search_signs, Observable, ObservableFamily, ObservableGroup, Provider};
use ctxext::staralg::{context_category, gelfand_spectrum, generate_algebra, Context, ContextCategory, MatrixStarAlgebra};
use ctxext::extension::ExtendedState;
use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn criterion(n: usize, name: &str, budget: Option<Duration>, body: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let outcome = panic::catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|e| {
        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    });
    let elapsed = start.elapsed();
    let outcome = match (outcome, budget) {
        (Ok(_), Some(b)) if elapsed > b => Err(format!("took {:.2} s, budget {:.0} s", elapsed.as_secs_f64(), b.as_secs_f64())),
        (o, _) => o,
    };
    let (tag, detail) = match &outcome {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("criterion {n} [{name}]: {tag} ({detail}; {:.2} s)", elapsed.as_secs_f64());
    outcome.is_ok()
}

/// Hermitian seeds sharing eigenbases, so that some of them commute.
fn random_seeds(rng: &mut ChaCha8Rng, d: usize) -> Vec<CMat> {
    let bases = [random::unitary(rng, d), random::unitary(rng, d)];
    let k = rng.random_range(1..=3);
    (0..k)
        .map(|_| {
            let u = &bases[rng.random_range(0..2)];
            let values: Vec<f64> = (0..d).map(|_| rng.random_range(-1..=2) as f64).collect();
            u * linalg::diag(&values) * u.adjoint()
        })
        .collect()
}

fn random_category(rng: &mut ChaCha8Rng, d: usize) -> ContextCategory {
    context_category(&MatrixStarAlgebra::full(d), &random_seeds(rng, d)).unwrap()
}

fn trace_product(rho: &CMat, a: &CMat) -> num_complex::Complex64 {
    let d = rho.nrows();
    let mut acc = c(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += rho[(i, j)] * a[(j, i)];
        }
    }
    acc
}

/// Smallest eigenvalue of the Hermitian part of `b − a`.
fn gap(a: &CMat, b: &CMat) -> f64 {
    let diff = b - a;
    let herm = (&diff + diff.adjoint()) * c(0.5, 0.0);
    SymmetricEigen::new(herm).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn kochen_specker() -> Check {
    let fam = cabello18();
    ensure(fam.validate().is_valid(), || "fixture is not a family of orthogonal bases".into())?;
    let cc = fam.context_category().map_err(|e| e.to_string())?;
    let p = build_spectral_presheaf(&cc).map_err(|e| e.to_string())?;
    let found = global_sections(&p, 1).len();
    ensure(found == 0, || format!("cabello18 has {found} section(s)"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut min_sections = usize::MAX;
    for _ in 0..25 {
        let cc = random_category(&mut rng, 2);
        let p = build_spectral_presheaf(&cc).map_err(|e| e.to_string())?;
        let sections = global_sections(&p, 4);
        ensure(!sections.is_empty(), || "a d = 2 family has no section".into())?;
        for s in &sections {
            for sup in 0..cc.len() {
                for sub in 0..cc.len() {
                    if sub != sup && cc.leq(sub, sup) {
                        let r = p.restriction(sub, sup).ok_or("missing restriction")?;
                        ensure(r.images[s.assignment[sup]] == s.assignment[sub], || "returned section is incompatible".into())?;
                    }
                }
            }
        }
        min_sections = min_sections.min(sections.len());
    }
    Ok(format!("cabello18: 0 sections over {} contexts; 25 d=2 families: ≥ {min_sections} each", cc.len()))
}

fn state_extension() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let d = rng.random_range(2..=4);
        let cc = random_category(&mut rng, d);
        let ext = build_limit_extension(&cc).map_err(|e| e.to_string())?;
        let rho = random::density(&mut rng, d);
        let mu = extend_state(&rho, &ext).map_err(|e| e.to_string())?;
        let v = rng.random_range(0..cc.len());
        let basis = cc.contexts()[v].algebra.basis();
        let mut a = linalg::zeros(d);
        for b in basis {
            a += b * c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        let lifted = evaluate_state(&mu, &embed(&a, v, &ext).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        worst = worst.max((lifted - trace_product(&rho, &a)).norm());
    }
    ensure(worst <= 1e-8, || format!("max |μ(A,V) − Tr ρA| = {worst:e}"))?;
    Ok(format!("100 triples, max defect {worst:.2e}"))
}

fn limit_agreement() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut done = 0;
    let mut sizes = Vec::new();
    let mut attempts = 0;
    while done < 20 {
        attempts += 1;
        ensure(attempts < 2000, || "could not sample small families".into())?;
        let d = rng.random_range(2..=4);
        let cc = random_category(&mut rng, d);
        let ext = build_limit_extension(&cc).map_err(|e| e.to_string())?;
        if ext.carrier().len() > 16 {
            continue;
        }
        let diagram = discrete_spectrum_diagram(&ext);
        let lim = limit_of_diagram(&diagram);
        ensure(lim.families.len() == ext.carrier().len(), || {
            format!("limit has {} families, carrier {}", lim.families.len(), ext.carrier().len())
        })?;
        let mut hit = BTreeSet::new();
        for fam in &lim.families {
            let k = ext.carrier().index_of(fam).ok_or("limit family outside the carrier")?;
            ensure(hit.insert(k), || "two limit families hit one carrier point".into())?;
        }
        let mut cones = Vec::new();
        for apex in 1..=3 {
            cones.extend(enumerate_cones(&diagram, apex, 1 << 20).map_err(|e| e.to_string())?);
        }
        let bound = UniversalityBound { max_apex: 3, ..UniversalityBound::default() };
        let universal = check_universal_property(&lim.cone, &diagram, &cones, &bound).map_err(|e| e.to_string())?;
        ensure(universal, || "limit cone is not universal".into())?;
        sizes.push(ext.carrier().len());
        done += 1;
    }
    Ok(format!("20 families, carrier sizes {sizes:?}"))
}

fn daseinisation() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = f64::INFINITY;
    for _ in 0..50 {
        let d = rng.random_range(2..=4);
        let u = random::unitary(&mut rng, d);
        let fine: Vec<f64> = (0..d).map(|i| i as f64).collect();
        let coarse: Vec<f64> = (0..d).map(|_| rng.random_range(0..2) as f64).collect();
        let v = generate_algebra(&[&u * linalg::diag(&fine) * u.adjoint()], d).map_err(|e| e.to_string())?;
        let w = generate_algebra(&[&u * linalg::diag(&coarse) * u.adjoint()], d).map_err(|e| e.to_string())?;
        ensure(w.basis().iter().all(|b| v.contains(b)), || "coarse context not inside fine context".into())?;
        let rank = rng.random_range(1..d);
        let p = random::projection(&mut rng, d, rank);
        let (iv, ov) = (inner_daseinisation(&p, &v).map_err(|e| e.to_string())?, outer_daseinisation(&p, &v).map_err(|e| e.to_string())?);
        let (iw, ow) = (inner_daseinisation(&p, &w).map_err(|e| e.to_string())?, outer_daseinisation(&p, &w).map_err(|e| e.to_string())?);
        for (lo, hi, what) in [(&iv, &p, "inner_V ≤ P"), (&p, &ov, "P ≤ outer_V"), (&ov, &ow, "outer_V ≤ outer_W"), (&iw, &iv, "inner_W ≤ inner_V")] {
            let g = gap(lo, hi);
            ensure(g >= -1e-9, || format!("{what} fails by {g:e}"))?;
            worst = worst.min(g);
        }
    }
    Ok(format!("50 projections, smallest order gap {worst:.2e}"))
}

fn gft() -> Check {
    let space = PolyhedronSpace::new(2, 2).map_err(|e| e.to_string())?;
    let fs = random_test_functions(5, 40, space.dim(), 1.0);
    let mut worst: f64 = 0.0;
    for nmax in 1..=3 {
        let fock = TruncatedFock::new(&space, nmax).map_err(|e| e.to_string())?;
        for pair in fs.chunks(2) {
            worst = worst.max(ccr_defect(&pair[0], &pair[1], &fock).map_err(|e| e.to_string())?);
        }
    }
    ensure(worst <= 1e-10, || format!("CCR defect {worst:e}"))?;
    let pair = random_test_functions(6, 2, space.dim(), 0.35);
    let norm = |f: &TestFunction| (space.weight() * f.0.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();
    ensure(pair.iter().all(|f| norm(f) <= 0.5), || "test functions exceed norm 0.5".into())?;
    let rows = weyl_sweep(&pair[0], &pair[1], &space, &[2, 3, 4, 5], 1).map_err(|e| e.to_string())?;
    let defects: Vec<f64> = rows.iter().map(|r| r.defect).collect();
    ensure(defects.windows(2).all(|w| w[1] < w[0]), || format!("Weyl defects not strictly decreasing: {defects:?}"))?;
    Ok(format!("max CCR defect {worst:.2e}; Weyl defects {}", defects.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>().join(" > ")))
}

fn site_contexts(l: usize) -> Vec<LocalContext> {
    let mut out: Vec<LocalContext> = (0..l)
        .map(|s| LocalContext::generated(&format!("z{s}"), Region::site(s), &[site_operator(&pauli_z(), s, l)], l).unwrap())
        .collect();
    if l >= 2 {
        for s in 0..l {
            let xx = place(&[pauli_x(), pauli_x()], &[s, (s + 1) % l], l);
            out.push(LocalContext::generated(&format!("xx{s}"), Region::new(s, s + 1).unwrap(), &[xx], l).unwrap());
        }
    }
    out
}

fn spectrum_multiplicative(parts: &[LocalContext], net: &LocalNet) -> Result<(), String> {
    let whole = composite_context(parts, net).map_err(|e| e.to_string())?;
    let spec = gelfand_spectrum(&whole).map_err(|e| e.to_string())?;
    let pieces: Vec<_> = parts.iter().map(|p| gelfand_spectrum(&p.algebra)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let expected: usize = pieces.iter().map(Vec::len).product();
    ensure(spec.len() == expected, || format!("|Σ| = {}, product of factors {expected}", spec.len()))?;
    for chi in &spec {
        // χ restricted to each factor is a character of that factor, and the
        // projections multiply to χ's projection.
        let mut prod = linalg::identity(net.dim());
        for (part, sigma) in parts.iter().zip(&pieces) {
            let hit = sigma
                .iter()
                .find(|s| linalg::frob_norm(&(&chi.projection * &s.projection - &chi.projection)) < 1e-9)
                .ok_or_else(|| format!("no character of {} under a composite character", part.label))?;
            prod *= &hit.projection;
            for g in part.algebra.basis() {
                for h in whole.basis().iter().take(4) {
                    let lhs = chi.evaluate(&(g * h));
                    let rhs = chi.evaluate(g) * chi.evaluate(h);
                    ensure((lhs - rhs).norm() < 1e-9, || "character is not multiplicative".into())?;
                }
            }
        }
        ensure(linalg::frob_norm(&(prod - &chi.projection)) < 1e-9, || "projections do not multiply".into())?;
    }
    Ok(())
}

fn toy_net() -> Check {
    let mut squares = 0;
    for l in 1..=4 {
        let net = LocalNet::standard(l).map_err(|e| e.to_string())?;
        let mut report = check_isotony(&net);
        report.merge(check_locality(&net));
        report.merge(check_group_action(l));
        let contexts = site_contexts(l);
        for shift in 0..l {
            report.merge(check_covariance(&net, shift, &contexts, true).map_err(|e| e.to_string())?);
        }
        let regions = net.regions();
        for sub in &regions {
            for whole in &regions {
                if sub.subset_of(whole, l) {
                    report.merge(check_lc_square(sub, whole, &net).map_err(|e| e.to_string())?);
                    squares += 1;
                }
            }
        }
        if let Some(v) = report.violations.first() {
            return Err(format!("L = {l}: {} at {}", v.invariant, v.location));
        }
    }
    let l = 4;
    let net = LocalNet::standard(l).map_err(|e| e.to_string())?;
    let parts = vec![
        LocalContext::generated("z0", Region::site(0), &[site_operator(&pauli_z(), 0, l)], l).unwrap(),
        LocalContext::generated("xx", Region::new(1, 2).unwrap(), &[place(&[pauli_x(), pauli_x()], &[1, 2], l)], l).unwrap(),
        LocalContext::generated("x3", Region::site(3), &[site_operator(&pauli_x(), 3, l)], l).unwrap(),
    ];
    spectrum_multiplicative(&parts, &net)?;
    Ok(format!("L = 1..4 clean, {squares} commuting squares; composite spectrum 2·2·2"))
}

fn realism() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = f64::INFINITY;
    for _ in 0..1000 {
        let n = rng.random_range(2..=8);
        let q = rng.random_range(1..=3);
        let mut groups = Vec::new();
        for _ in 0..q {
            let size = if rng.random_bool(0.5) { 1 } else { 3 };
            let na = rng.random_range(0..=size);
            let mut obs: Vec<Vec<f64>> = (0..size)
                .map(|_| (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect())
                .collect();
            let b = obs.split_off(na);
            groups.push((obs, b));
        }
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let fam = ObservableFamily {
            groups: groups
                .iter()
                .map(|(a, b)| ObservableGroup {
                    a: a.iter().cloned().map(Observable::Function).collect(),
                    b: b.iter().cloned().map(Observable::Function).collect(),
                })
                .collect(),
        };
        let provider = Provider::measure(ExtendedState::from_weights("x", weights.clone()).map_err(|e| e.to_string())?);
        let found = search_signs(&fam, &provider, 16).map_err(|e| e.to_string())?;
        // Oracle: pointwise minimum of Σ_p E[(Σ_i s_i O_i)²] over all sign vectors.
        let all: Vec<&Vec<f64>> = groups.iter().flat_map(|(a, b)| a.iter().chain(b)).collect();
        let mut oracle = f64::INFINITY;
        for mask in 0..1u32 << all.len() {
            let sign = |i: usize| if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
            let mut value = 0.0;
            let mut k = 0;
            for (a, b) in &groups {
                let m = a.len() + b.len();
                for (x, w) in weights.iter().enumerate() {
                    let s: f64 = (k..k + m).map(|i| sign(i) * all[i][x]).sum();
                    value += w * s * s;
                }
                k += m;
            }
            oracle = oracle.min(value);
        }
        ensure((found.lhs - oracle).abs() <= 1e-12, || format!("search {} vs oracle {oracle}", found.lhs))?;
        ensure(found.margin >= -1e-12, || format!("margin {} with signs {:?}", found.margin, found.signs))?;
        worst = worst.min(found.margin);
    }
    let rho = linalg::ray_projection(&[linalg::ONE, linalg::ZERO]);
    let pauli = search_signs(&pauli_family(), &Provider::quantum(rho), 16).map_err(|e| e.to_string())?;
    ensure(pauli.lhs == 3.0, || format!("Pauli LHS {}", pauli.lhs))?;
    Ok(format!("1000 measure instances, smallest margin {worst:.2e}; Pauli LHS = {}", pauli.lhs))
}

fn located(report: &ctxext::ValidationReport, arrow: &str) -> Result<String, String> {
    let v = report.violations.first().ok_or("corrupted variant passed")?;
    ensure(v.location.starts_with(arrow), || format!("violation located at `{}`, expected `{arrow}`", v.location))?;
    Ok(v.location.clone())
}

fn cones() -> Check {
    let mut found = Vec::new();

    let cc = context_category(&MatrixStarAlgebra::full(2), &[pauli_z(), pauli_x()]).map_err(|e| e.to_string())?;
    let ext = build_limit_extension(&cc).map_err(|e| e.to_string())?;
    let (d, cone) = extension_triangle(&ext, 0).map_err(|e| e.to_string())?;
    ensure(check_cone(&cone, &d, 1e-9).unwrap().is_valid(), || "(1) fails".into())?;
    let mut bad = cone.clone();
    let h = (pauli_x() + pauli_z()) * c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    for (j, b) in ext.contexts()[0].basis().iter().enumerate() {
        for (r, z) in (&h * b * &h).iter().enumerate() {
            bad.legs[1].0[(r, j)] = *z;
        }
    }
    found.push(located(&check_cone(&bad, &d, 1e-9).unwrap(), "phi")?);

    let net = LocalNet::standard(3).map_err(|e| e.to_string())?;
    let (sub, whole) = (Region::site(1), Region::new(0, 2).unwrap());
    let (d, cone) = lc_square_cone(&sub, &whole, &net).map_err(|e| e.to_string())?;
    ensure(check_cone(&cone, &d, 1e-9).unwrap().is_valid(), || "(5) fails".into())?;
    let mut broken = net.clone();
    broken.assign(sub, &[site_operator(&pauli_z(), 1, 3)]).map_err(|e| e.to_string())?;
    let (d, cone) = lc_square_cone(&sub, &whole, &broken).map_err(|e| e.to_string())?;
    found.push(located(&check_cone(&cone, &d, 1e-9).unwrap(), "A_sub<=A_whole")?);

    let id = linalg::identity(2);
    let (z1, z2) = (linalg::kron(&pauli_z(), &id), linalg::kron(&id, &pauli_z()));
    let ctx = |label: &str, g: &[CMat]| Context { label: label.into(), algebra: generate_algebra(g, 4).unwrap(), seeds: vec![] };
    let cc = ContextCategory::from_contexts(4, vec![ctx("W", &[z1.clone(), z2]), ctx("V", &[z1])]).map_err(|e| e.to_string())?;
    let p = build_spectral_presheaf(&cc).map_err(|e| e.to_string())?;
    let (v, w) = (cc.index_of("V").unwrap(), cc.index_of("W").unwrap());
    let (d, cone) = restriction_cone(&p, v, w).map_err(|e| e.to_string())?;
    ensure(check_cone(&cone, &d, 0.0).unwrap().is_valid(), || "(7) fails".into())?;
    let mut bad = cone.clone();
    let r = p.restriction(v, w).unwrap();
    bad.legs[1].images[0] = r.images.iter().position(|&y| y != r.images[cone.legs[1].images[0]]).unwrap();
    found.push(located(&check_cone(&bad, &d, 0.0).unwrap(), "V1<=V2")?);

    let s = PolyhedronSpace { m: 2, n: 1 };
    let fs = vec![TestFunction(vec![c(1.0, 0.0), c(0.5, 0.0)]), TestFunction(vec![c(0.0, 0.0), c(-1.0, 0.0)])];
    let good = second_quantization_cone(1, 2, &s, &fs).map_err(|e| e.to_string())?;
    ensure(good.report.is_valid() && check_cone(&good.cone, &good.diagram, 1e-12).unwrap().is_valid(), || "(15) fails".into())?;
    let mut flipped = copy_padding(1, 2, 2);
    flipped[(1, 1)] = -linalg::ONE;
    let bad = second_quantization_cone_with(1, 2, &s, &fs, &flipped).map_err(|e| e.to_string())?;
    found.push(located(&bad.report, "S1<=S2")?);

    Ok(format!("4 cones commute; corruptions located at {}", found.join(" | ")))
}

fn main() -> ExitCode {
    panic::set_hook(Box::new(|_| {}));
    let secs = |s| Some(Duration::from_secs(s));
    let results = [
        criterion(1, "Kochen-Specker obstruction", secs(5), kochen_specker),
        criterion(2, "state-extension exactness", secs(10), state_extension),
        criterion(3, "limit-object agreement", secs(30), limit_agreement),
        criterion(4, "daseinisation sandwich and monotonicity", None, daseinisation),
        criterion(5, "GFT CCR and Weyl convergence", secs(60), gft),
        criterion(6, "toy net axioms", secs(30), toy_net),
        criterion(7, "classical correlation bound", None, realism),
        criterion(8, "cone fixtures", None, cones),
    ];
    let passed = results.iter().filter(|&&ok| ok).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
