//! Acceptance criteria. Runs as a plain binary (`harness = false`) so every
//! criterion prints one PASS/FAIL line whether or not it fails.

mod common;

use std::process::ExitCode;

use common::{brute_force_distance, brute_force_min_support, dot, fd_gradient, feasible_samples, norm, rank};
use optcert::catalog::{catalog_entries, entry, CatalogEntry};
use optcert::cone::{caratheodory_minimal, caratheodory_reduce, farkas_decide, ConeSpec, FarkasCertificate};
use optcert::cq::{assess_cqs, check_licq, in_linearized_cone, linearized_cone};
use optcert::duality::{dual_objective, kkt_dual_optimality_check, weak_duality_check, DualOptions, ExtendedReal};
use optcert::expr::{BinaryOp, Expr};
use optcert::kkt::{certify_first_order, geometric_check, Tolerances, Verdict};
use optcert::tangent::{
    choose_t_bar, inactive_margin, probe_tangent_licq, probe_tangent_linear_auto, sample_linearized_directions,
    ProbeOptions, TangentProbeResult,
};
use optcert::{parse, Multipliers, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn get(name: &str) -> CatalogEntry {
    entry(name).unwrap_or_else(|| panic!("catalog entry {name}"))
}

fn unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = norm(&v);
        if r > 0.1 {
            return v.iter().map(|x| x / r).collect();
        }
    }
}

fn catalog_kkt() -> Outcome {
    let expected: [(&str, &[(usize, f64)]); 4] = [
        ("linear-over-disk", &[(1, 0.5)]),
        ("quadratic-affine-eq", &[(1, 1.0)]),
        ("scalar-bound", &[(1, 2.0)]),
        ("lp-ray", &[(1, 1.0)]),
    ];
    let t = Tolerances::default();
    for e in catalog_entries() {
        let r = certify_first_order(&e.problem, &e.known_point, &t).map_err(|err| format!("{}: {err}", e.name()))?;
        ensure(r.verdict == e.expected_verdict, || {
            format!("{}: verdict {} != {}", e.name(), r.verdict, e.expected_verdict)
        })?;
    }
    for (name, pairs) in expected {
        let e = get(name);
        let r = certify_first_order(&e.problem, &e.known_point, &t).map_err(|err| err.to_string())?;
        let m = r.multipliers.ok_or(format!("{name}: no multipliers"))?;
        for &(id, v) in pairs {
            let got = m.lambda.get(&id).or(m.mu.get(&id)).copied().unwrap_or(f64::NAN);
            ensure((got - v).abs() <= 1e-6, || format!("{name}: multiplier {id} = {got}, expected {v}"))?;
        }
    }
    let e = get("non-kkt-point");
    let r = certify_first_order(&e.problem, &e.known_point, &t).map_err(|err| err.to_string())?;
    let d = r.direction.ok_or("non-kkt-point: no direction")?;
    let want = e.expected_direction.unwrap();
    ensure(norm(&common_sub(&d, &want)) <= 1e-6, || format!("non-kkt-point: direction {d:?}"))?;
    let g = e.problem.objective_grad(&e.known_point).unwrap();
    ensure(dot(&g, &d) < 0.0, || "non-kkt-point: direction is not descent".into())?;
    Ok(format!("{} entries, multipliers within 1e-6", catalog_entries().len()))
}

fn common_sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn check_certificate(k: &ConeSpec, g: &[f64], cert: &FarkasCertificate, tol: f64) -> Result<(), String> {
    match cert {
        FarkasCertificate::Membership { y, w, .. } => {
            ensure(y.iter().all(|&v| v >= 0.0), || "negative cone coefficient".into())?;
            let r = norm(&common_sub(&k.combine(y, w), g));
            ensure(r <= tol, || format!("reconstruction residual {r:e}"))
        }
        FarkasCertificate::Separation { d, .. } => {
            ensure((norm(d) - 1.0).abs() <= 1e-12, || "separating direction not unit".into())?;
            ensure(dot(g, d) < 0.0, || "<g, d> not negative".into())?;
            ensure(k.nonneg_generators().iter().all(|b| dot(b, d) >= -tol), || "<b, d> < -tol".into())?;
            ensure(k.free_generators().iter().all(|c| dot(c, d).abs() <= tol), || "|<c, d>| > tol".into())
        }
    }
}

/// Instances with a known answer. Members are explicit combinations.
/// Non-members are built around a unit `s`: nonnegative generators satisfy
/// `<b, s> >= 0`, free ones `<c, s> = 0`, and `<g, s> = -delta`, so every
/// point of the cone is at distance `>= delta >= 1e-4` from `g`.
fn farkas_instance(rng: &mut ChaCha8Rng, member: bool) -> (ConeSpec, Vec<f64>) {
    let n = rng.random_range(1..=6);
    let kb = rng.random_range(0..=6);
    let kc = rng.random_range(0..=2.min(n - 1));
    let s = unit(rng, n);
    let mut nonneg: Vec<Vec<f64>> = (0..kb).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let mut free: Vec<Vec<f64>> = (0..kc).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    if member {
        let k = ConeSpec::new(n, free, nonneg).unwrap();
        let y: Vec<f64> =
            (0..kb).map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..2.0) }).collect();
        let w: Vec<f64> = (0..kc).map(|_| rng.random_range(-2.0..2.0)).collect();
        let g = k.combine(&y, &w);
        return (k, g);
    }
    for b in &mut nonneg {
        if dot(b, &s) < 0.0 {
            b.iter_mut().for_each(|v| *v = -*v);
        }
    }
    for c in &mut free {
        let a = dot(c, &s);
        c.iter_mut().zip(&s).for_each(|(v, si)| *v -= a * si);
    }
    let delta = 10f64.powf(rng.random_range(-4.0..0.0));
    let u: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let shift = dot(&u, &s) + delta;
    let g: Vec<f64> = u.iter().zip(&s).map(|(ui, si)| ui - shift * si).collect();
    (ConeSpec::new(n, free, nonneg).unwrap(), g)
}

fn farkas_dichotomy() -> Outcome {
    let tol = 1e-8;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..500 {
        let member = i % 2 == 0;
        let (k, g) = farkas_instance(&mut rng, member);
        let cert = farkas_decide(&k, &g, tol).map_err(|e| format!("instance {i}: {e}"))?;
        ensure(cert.is_membership() == member, || format!("instance {i}: wrong branch (member = {member})"))?;
        check_certificate(&k, &g, &cert, tol).map_err(|e| format!("instance {i}: {e}"))?;
    }
    let mut checked = 0;
    let mut drawn = 0;
    while checked < 100 {
        drawn += 1;
        let n = rng.random_range(1..=3);
        let total = rng.random_range(1..=5);
        let kc = rng.random_range(0..=total.min(1));
        let gen = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };
        let free: Vec<Vec<f64>> = (0..kc).map(|_| gen(&mut rng)).collect();
        let nonneg: Vec<Vec<f64>> = (kc..total).map(|_| gen(&mut rng)).collect();
        let g = gen(&mut rng);
        let mut all = nonneg.clone();
        all.extend(free.iter().cloned());
        all.extend(free.iter().map(|c| c.iter().map(|v| -v).collect::<Vec<_>>()));
        let dist = brute_force_distance(&all, &g);
        if dist > 1e-10 && dist < 1e-4 {
            continue;
        }
        let k = ConeSpec::new(n, free, nonneg).unwrap();
        let cert = farkas_decide(&k, &g, tol).map_err(|e| e.to_string())?;
        ensure(cert.is_membership() == (dist <= 1e-10), || {
            format!("brute force distance {dist:e} disagrees with {cert:?}")
        })?;
        checked += 1;
    }
    Ok(format!("500 constructed instances; 100 brute-force comparisons ({} drawn)", drawn))
}

fn caratheodory() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut minimal_checked = 0;
    for i in 0..200 {
        let n = rng.random_range(1..=5);
        let k = rng.random_range(1..=10);
        let gens: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let coeffs: Vec<f64> =
            (0..k).map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..2.0) }).collect();
        let x: Vec<f64> = (0..n).map(|r| gens.iter().zip(&coeffs).map(|(g, c)| c * g[r]).sum()).collect();
        let scale = 1.0 + norm(&x);
        let red = caratheodory_reduce(&gens, &coeffs, 1e-10).map_err(|e| format!("combination {i}: {e}"))?;
        let cols: Vec<Vec<f64>> = red.indices.iter().map(|&j| gens[j].clone()).collect();
        ensure(red.indices.len() <= n, || format!("combination {i}: support {} > n = {n}", red.indices.len()))?;
        ensure(rank(&cols, n) == cols.len(), || format!("combination {i}: dependent support"))?;
        ensure(red.coeffs.iter().all(|&c| c >= 0.0), || format!("combination {i}: negative coefficient"))?;
        let err = norm(&common_sub(&red.reconstruct(&gens, n), &x));
        ensure(err <= 1e-8 * scale, || format!("combination {i}: reconstruction error {err:e}"))?;

        let tol = 1e-8 * scale;
        let min = caratheodory_minimal(&gens, &x, tol, 15).map_err(|e| format!("combination {i}: {e}"))?;
        let oracle =
            brute_force_min_support(&gens, &x, tol).ok_or(format!("combination {i}: oracle found no support"))?;
        ensure(min.indices.len() == oracle, || {
            format!("combination {i}: minimal support {} but brute force {oracle}", min.indices.len())
        })?;
        minimal_checked += 1;
    }
    Ok(format!("200 combinations, {minimal_checked} minimal supports match brute force"))
}

fn licq_tangent() -> Outcome {
    let opts = ProbeOptions::default();
    let mut total = 0;
    for (i, name) in ["linear-over-disk", "quadratic-affine-eq", "scalar-bound"].iter().enumerate() {
        let e = get(name);
        let (p, x) = (&e.problem, &e.known_point);
        let lc = linearized_cone(p, x, opts.tol_act).map_err(|err| err.to_string())?;
        let mut dirs = sample_linearized_directions(&lc, 16, 40 + i as u64).map_err(|err| err.to_string())?;
        if *name == "linear-over-disk" {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            dirs.push(vec![s, -s]);
            dirs.push(vec![-s, s]);
        }
        ensure(dirs.len() >= 16, || format!("{name}: only {} directions", dirs.len()))?;
        for d in &dirs {
            let r = probe_tangent_licq(p, x, d, &opts).map_err(|err| format!("{name} {d:?}: {err}"))?;
            let ratio = r.final_ratio_error().unwrap_or(f64::INFINITY);
            ensure(r.certified && ratio <= 1e-4, || format!("{name} {d:?}: not certified ({:?})", r.failure_reason))?;
            ensure(in_linearized_cone(&lc, d, 1e-6), || format!("{name} {d:?}: outside F(x)"))?;
        }
        total += dirs.len();
    }
    Ok(format!("{total} directions certified on 3 entries"))
}

fn linear_tangent() -> Outcome {
    let opts = ProbeOptions::default();
    let mut total = 0;
    for name in ["quadratic-affine-eq-ball", "lp-corner-redundant"] {
        let e = get(name);
        let (p, x) = (&e.problem, &e.known_point);
        let lc = linearized_cone(p, x, opts.tol_act).map_err(|err| err.to_string())?;
        let dirs = sample_linearized_directions(&lc, 16, 50).map_err(|err| err.to_string())?;
        let margin = inactive_margin(p, x, opts.tol_act).map_err(|err| err.to_string())?;
        for v in &dirs {
            let r = probe_tangent_linear_auto(p, x, v, 10, &opts).map_err(|err| format!("{name} {v:?}: {err}"))?;
            ensure(r.certified, || format!("{name} {v:?}: not certified ({:?})", r.failure_reason))?;
            let t_bar = choose_t_bar(p, x, v, opts.tol_act).unwrap();
            ensure(r.steps[0].t <= t_bar, || format!("{name}: t_bar above the chosen bound"))?;
            // every inactive constraint keeps at least half its margin along the ray
            for (id, c) in p.ineq() {
                let c0 = c.eval(x).unwrap();
                if c0 > opts.tol_act {
                    for s in &r.steps {
                        let v = c.eval(&s.z).unwrap();
                        ensure(v >= margin / 2.0 - 1e-12, || format!("{name}: constraint {id} dropped to {v}"))?;
                    }
                }
            }
        }
        total += dirs.len();
    }
    Ok(format!("{total} directions certified with automatic t_bar"))
}

fn geometric_optimality() -> Outcome {
    let opts = ProbeOptions::default();
    let mut count = 0;
    for e in catalog_entries() {
        if e.expected_verdict != Verdict::Certified {
            continue;
        }
        let (p, x) = (&e.problem, &e.known_point);
        let lc = linearized_cone(p, x, opts.tol_act).map_err(|err| err.to_string())?;
        let dirs = sample_linearized_directions(&lc, 16, 60).map_err(|err| err.to_string())?;
        let mut probes: Vec<TangentProbeResult> = Vec::new();
        for d in &dirs {
            let r = if e.expected_cq.licq {
                probe_tangent_licq(p, x, d, &opts)
            } else {
                probe_tangent_linear_auto(p, x, d, 10, &opts)
            }
            .map_err(|err| format!("{}: {err}", e.name()))?;
            if r.certified {
                probes.push(r);
            }
        }
        let g = p.objective_grad(x).unwrap();
        for r in &probes {
            let v = dot(&g, &r.direction);
            ensure(v >= -1e-8, || format!("{}: <grad f, d> = {v:e}", e.name()))?;
        }
        ensure(geometric_check(p, x, &probes, 1e-8).unwrap(), || format!("{}: geometric_check false", e.name()))?;
        count += probes.len();
    }
    let e = get("non-kkt-point");
    let r = certify_first_order(&e.problem, &e.known_point, &Tolerances::default()).unwrap();
    let d = r.direction.ok_or("non-kkt-point: no direction")?;
    let v = dot(&e.problem.objective_grad(&e.known_point).unwrap(), &d);
    ensure(v <= -0.5, || format!("non-kkt-point: <grad f, d> = {v}"))?;
    Ok(format!("{count} certified tangent directions nonnegative; refuted entry has <grad f, d> = {v:.4}"))
}

fn random_multipliers(p: &Problem, rng: &mut ChaCha8Rng) -> Multipliers {
    let mut m = Multipliers::zeros(p);
    m.lambda.values_mut().for_each(|v| *v = rng.random_range(-3.0..3.0));
    m.mu.values_mut().for_each(|v| *v = if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.0..3.0) });
    m
}

fn weak_duality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let opts = DualOptions::default();
    let convex: Vec<CatalogEntry> = catalog_entries().into_iter().filter(|e| e.convexity_declared).collect();
    let mut triples = 0;
    let mut skipped = 0;
    while triples < 200 {
        let e = &convex[triples % convex.len()];
        let m = random_multipliers(&e.problem, &mut rng);
        let xs = feasible_samples(&e.problem, &e.known_point, 1, 2.0, &mut rng);
        let r = weak_duality_check(&e.problem, std::slice::from_ref(&m), &xs, 1e-6, &opts)
            .map_err(|err| format!("{}: {err}", e.name()))?;
        ensure(r.holds, || format!("{}: gap {} at {m:?}", e.name(), r.worst_gap))?;
        let q = r.dual_values[0].value;
        if let Some(formula) = e.dual_formula {
            let want = formula(&m);
            let ok = match (q, want) {
                (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => (a - b).abs() <= 1e-6 * (1.0 + b.abs()),
                (a, b) => a == b,
            };
            ensure(ok, || format!("{}: q = {q}, closed form {want} at {m:?}", e.name()))?;
        }
        skipped += r.skipped;
        triples += 1;
    }
    ensure(skipped == 0, || format!("{skipped} evaluations hit the iteration cap"))?;

    let e = get("scalar-bound");
    for i in 0..=50 {
        let mu = 5.0 * i as f64 / 50.0;
        let m = Multipliers::from_pairs(&e.problem, &[(1, mu)]).unwrap();
        let q = dual_objective(&e.problem, &m, &opts).map_err(|err| err.to_string())?.value;
        let want = mu - mu * mu / 4.0;
        ensure(q.finite().is_some_and(|v| (v - want).abs() <= 1e-6), || {
            format!("scalar-bound: q({mu}) = {q}, want {want}")
        })?;
    }
    let e = get("lp-ray");
    for mu in [0.0, 0.25, 0.5, 0.99, 1.0, 1.01, 2.0, 3.0] {
        let m = Multipliers::from_pairs(&e.problem, &[(1, mu)]).unwrap();
        let q = dual_objective(&e.problem, &m, &opts).map_err(|err| err.to_string())?.value;
        let ok = if mu == 1.0 { q.finite().is_some_and(|v| v.abs() <= 1e-6) } else { q == ExtendedReal::NegInf };
        ensure(ok, || format!("lp-ray: q({mu}) = {q}"))?;
    }
    Ok("200 triples without violation; closed forms of scalar-bound and lp-ray reproduced".into())
}

fn dual_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let opts = DualOptions::default();
    for name in ["linear-over-disk", "scalar-bound"] {
        let e = get(name);
        let m_bar = e.known_multipliers.clone().unwrap();
        let samples: Vec<Multipliers> =
            (0..50).map(|_| Multipliers::from_pairs(&e.problem, &[(1, rng.random_range(0.0..5.0))]).unwrap()).collect();
        let r = kkt_dual_optimality_check(&e.problem, &e.known_point, &m_bar, &samples, 1e-6, true, &opts)
            .map_err(|err| format!("{name}: {err}"))?;
        let gap = r.q_bar.finite().map(|q| (q - r.f_bar).abs()).unwrap_or(f64::INFINITY);
        ensure(r.holds && gap <= 1e-6 && r.skipped == 0, || format!("{name}: {r:?}"))?;
    }
    Ok("zero gap and no larger sampled dual value on 2 entries".into())
}

fn ad_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut used, mut drawn) = (0, 0);
    let mut worst = 0.0f64;
    while used < 100 {
        drawn += 1;
        ensure(drawn <= 1000, || format!("only {used} usable pairs in {drawn} draws"))?;
        let n = rng.random_range(1..=3);
        let text = common::random_expr_text(&mut rng, n, 4);
        let e = parse(&text, n).map_err(|err| format!("{text}: {err}"))?;
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let Ok(ad) = e.grad(&x) else { continue };
        let Some(fd) = fd_gradient(&e, &x) else { continue };
        let scale = ad.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let err = ad.iter().zip(&fd).fold(0.0f64, |a, (p, q)| a.max((p - q).abs())) / scale;
        ensure(err <= 1e-5, || format!("{text} at {x:?}: AD {ad:?} vs FD {fd:?}"))?;
        worst = worst.max(err);
        used += 1;
    }
    Ok(format!("100 expressions ({drawn} drawn), worst relative error {worst:.1e}"))
}

fn rescaled(p: &Problem, rng: &mut ChaCha8Rng) -> Problem {
    let mut scale = |c: &Expr| {
        let s = 10f64.powf(rng.random_range(-3.0..=3.0));
        Expr::binary(BinaryOp::Mul, Expr::constant(s), c.clone())
    };
    let mut q = Problem::new(p.name(), p.n(), p.objective().clone()).unwrap();
    for (&id, c) in p.eq() {
        q = q.with_eq(id, scale(c)).unwrap();
    }
    for (&id, c) in p.ineq() {
        q = q.with_ineq(id, scale(c)).unwrap();
    }
    q
}

fn cq_detectors() -> Outcome {
    let t = Tolerances::default();
    let mut cases: Vec<(String, Problem, Vec<f64>, (bool, bool))> =
        ["linear-over-disk", "quadratic-affine-eq", "degenerate-duplicate", "lp-corner-redundant"]
            .iter()
            .map(|name| {
                let e = get(name);
                (name.to_string(), e.problem, e.known_point, (e.expected_cq.licq, e.expected_cq.linear_cq))
            })
            .collect();
    let affine = Problem::parse(
        "affine-only",
        3,
        "x1^2 + x2^2 + x3^2",
        &[(1, "x1 + 2*x2 - x3")],
        &[(2, "x1 - x2"), (3, "3 - x3")],
    )
    .unwrap();
    cases.push(("affine-only".into(), affine, vec![0.0, 0.0, 0.0], (true, true)));
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for (name, p, x, want) in &cases {
        let cq = assess_cqs(p, x, t.tol_act, t.tol_rank).map_err(|err| err.to_string())?;
        ensure((cq.licq, cq.linear_cq) == *want, || {
            format!("{name}: (licq, linear) = ({}, {})", cq.licq, cq.linear_cq)
        })?;
        for _ in 0..20 {
            let q = rescaled(p, &mut rng);
            let l = check_licq(&q, x, t.tol_act, t.tol_rank).map_err(|err| err.to_string())?;
            ensure(l.licq == want.0, || format!("{name}: LICQ changed under rescaling"))?;
        }
    }
    Ok(format!("{} problems, LICQ stable under 20 rescalings each", cases.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("catalog KKT reproduction", catalog_kkt),
        ("Farkas dichotomy", farkas_dichotomy),
        ("Caratheodory reduction", caratheodory),
        ("linearized cone equals tangent cone under LICQ", licq_tangent),
        ("linearized cone equals tangent cone under linear CQ", linear_tangent),
        ("geometric optimality", geometric_optimality),
        ("weak duality", weak_duality),
        ("KKT multipliers solve the dual", dual_optimality),
        ("AD soundness", ad_soundness),
        ("CQ detectors", cq_detectors),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{}] {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
