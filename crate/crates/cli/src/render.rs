//! Human-readable reports. Numbers are rounded for reading; the structured
//! format carries full precision.

use std::fmt::Write;

use optcert::catalog::CatalogEntry;
use optcert::cone::FarkasCertificate;
use optcert::duality::{DualEval, DualStatus, ExtendedReal, WeakDualityReport};
use optcert::kkt::KktReport;
use optcert::tangent::TangentProbeResult;
use optcert::Multipliers;

/// Ten decimals with trailing zeros removed; scientific outside
/// `[1e-4, 1e10)`.
pub fn num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !(1e-4..1e10).contains(&v.abs()) {
        return format!("{v:.6e}");
    }
    let s = format!("{v:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

pub fn vector(v: &[f64]) -> String {
    format!("({})", v.iter().map(|&x| num(x)).collect::<Vec<_>>().join(", "))
}

fn extended(v: ExtendedReal) -> String {
    match v {
        ExtendedReal::Finite(v) => num(v),
        other => other.to_string(),
    }
}

pub fn multipliers(m: &Multipliers) -> String {
    let eq = m.lambda.iter().map(|(id, v)| format!("lambda{id} = {}", num(*v)));
    let ineq = m.mu.iter().map(|(id, v)| format!("mu{id} = {}", num(*v)));
    let all: Vec<String> = eq.chain(ineq).collect();
    if all.is_empty() {
        "none".into()
    } else {
        all.join(", ")
    }
}

pub fn report(r: &KktReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "problem: {}", r.problem);
    let _ = writeln!(s, "point: {}", vector(&r.point));
    let _ = writeln!(s, "verdict: {}", r.verdict);
    let _ = writeln!(
        s,
        "feasible: {} (equality violation {}, inequality violation {})",
        if r.feasible { "yes" } else { "no" },
        num(r.primal_eq_violation),
        num(r.primal_ineq_violation)
    );
    if let Some(cq) = &r.cq {
        let sigma = cq.licq_smallest_singular_value.map(|v| format!(", smallest singular value {}", num(v)));
        let _ = writeln!(
            s,
            "constraint qualifications: LICQ {}, linear CQ {} ({} active{})",
            if cq.licq { "yes" } else { "no" },
            if cq.linear_cq { "yes" } else { "no" },
            cq.active_count,
            sigma.unwrap_or_default()
        );
    }
    if let Some(m) = &r.multipliers {
        let _ = writeln!(s, "multipliers: {}", multipliers(m));
    }
    if let Some(v) = r.stationarity_residual {
        let _ = writeln!(s, "stationarity residual: {} (tolerance {})", num(v), num(r.tol_stat));
    }
    if let Some(v) = r.dual_min {
        let _ = writeln!(s, "smallest inequality multiplier: {}", num(v));
    }
    if let Some(v) = r.complementarity_residual {
        let _ = writeln!(s, "complementarity residual: {}", num(v));
    }
    if let Some(d) = &r.direction {
        let label =
            if r.verdict == optcert::kkt::Verdict::Refuted { "descent direction" } else { "candidate direction" };
        let marginal = if r.marginal { " (marginal)" } else { "" };
        let _ = writeln!(s, "{label}: {}{marginal}", vector(d));
    }
    if let Some(local) = r.sampled_local_min {
        let _ = writeln!(s, "sampled local minimum check: {}", if local { "passed" } else { "failed" });
    }
    s
}

pub fn farkas(c: &FarkasCertificate) -> String {
    match c {
        FarkasCertificate::Membership { y, w, reconstruction_residual } => format!(
            "membership\nnonneg coefficients y: {}\nfree coefficients w: {}\nreconstruction residual: {}\n",
            vector(y),
            vector(w),
            num(*reconstruction_residual)
        ),
        FarkasCertificate::Separation { d, g_dot_d, marginal } => format!(
            "separation{}\nd: {}\n<g, d>: {}\n",
            if *marginal { " (marginal)" } else { "" },
            vector(d),
            num(*g_dot_d)
        ),
    }
}

pub fn tangent(probe: &str, r: &TangentProbeResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "direction: {}", vector(&r.direction));
    let _ = writeln!(s, "probe: {probe}");
    let _ = writeln!(s, "{:>14}  {:>8}  {:>14}", "t", "feasible", "ratio error");
    for step in &r.steps {
        let _ = writeln!(
            s,
            "{:>14}  {:>8}  {:>14}",
            format!("{:.6e}", step.t),
            if step.feasible { "yes" } else { "no" },
            format!("{:.6e}", step.ratio_error)
        );
    }
    if let Some(l) = &r.limit_direction {
        let _ = writeln!(s, "limit direction: {}", vector(l));
    }
    let _ = writeln!(s, "certified: {}", if r.certified { "yes" } else { "no" });
    if let Some(reason) = &r.failure_reason {
        let _ = writeln!(s, "reason: {reason}");
    }
    s
}

pub fn dual(samples: &[Multipliers], values: &[DualEval], weak: Option<&WeakDualityReport>) -> String {
    let mut s = String::new();
    for (m, q) in samples.iter().zip(values) {
        let status = match q.status {
            DualStatus::Converged => "",
            DualStatus::UnboundedBelowDetected => " (unbounded below)",
            DualStatus::IterationCap => " (iteration cap, not certified)",
        };
        let _ = writeln!(s, "q({}) = {}{status}", multipliers(m), extended(q.value));
    }
    if let Some(w) = weak {
        let _ = writeln!(
            s,
            "weak duality: {} (worst gap {}, {} skipped)",
            if w.holds { "holds" } else { "VIOLATED" },
            extended(w.worst_gap),
            w.skipped
        );
    }
    s
}

pub fn catalog(entries: &[CatalogEntry]) -> String {
    let mut s = String::new();
    for e in entries {
        let _ = writeln!(
            s,
            "{:<26} n = {}  x = {:<12}  {:<12}  LICQ {:<3}  linear CQ {:<3}  {}",
            e.name(),
            e.problem.n(),
            vector(&e.known_point),
            e.expected_verdict.to_string(),
            if e.expected_cq.licq { "yes" } else { "no" },
            if e.expected_cq.linear_cq { "yes" } else { "no" },
            if e.convexity_declared { "convex" } else { "nonconvex" }
        );
    }
    s
}
